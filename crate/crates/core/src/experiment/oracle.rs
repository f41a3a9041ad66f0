//! Closed-form and numeric optima for the agent against renewal opponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{maximize_scalar, MaximizerSettings};
use crate::renewal::RenewalSpec;

/// Best average benefit against `Per(delta)` with move cost `cost`:
/// moving one tick after every periodic move holds the resource
/// `delta - 1` ticks out of every `delta`.
pub fn oracle_per(delta: u64, cost: f64) -> Result<f64> {
    if delta == 0 {
        return Err(Error::config("delta", "period must be at least 1"));
    }
    if !(cost.is_finite() && cost > 0.0) {
        return Err(Error::config(
            "cost",
            format!("move cost must be positive, got {cost}"),
        ));
    }
    let delta_f = delta as f64;
    if cost >= delta_f {
        return Err(Error::DropoutOptimal {
            cost,
            mean: delta_f,
        });
    }
    Ok(((delta_f - 1.0 - cost) / delta_f).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOptimum {
    /// Best own period, rounded to a whole tick.
    pub delta: u64,
    /// Continuous maximizer before rounding.
    pub delta_continuous: f64,
    /// Average benefit at the continuous maximizer.
    pub benefit: f64,
}

/// Benefit rate of playing periodically with period `z` against `Exp(rate)`.
pub fn exp_periodic_benefit(rate: f64, cost: f64, z: f64) -> f64 {
    (-(-rate * z).exp_m1() / rate - cost) / z
}

/// Best periodic response to `Exp(rate)` with move cost `cost`.
pub fn oracle_exp(rate: f64, cost: f64) -> Result<PeriodicOptimum> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::config(
            "lambda",
            format!("rate must be positive, got {rate}"),
        ));
    }
    if !(cost.is_finite() && cost > 0.0) {
        return Err(Error::config(
            "cost",
            format!("move cost must be positive, got {cost}"),
        ));
    }
    let mean = 1.0 / rate;
    if cost >= mean {
        return Err(Error::DropoutOptimal { cost, mean });
    }
    let (z, benefit) = maximize_scalar(
        |z| exp_periodic_benefit(rate, cost, z),
        &MaximizerSettings::new(1.0, 20.0 * mean),
    )?;
    Ok(PeriodicOptimum {
        delta: (z.round() as u64).max(1),
        delta_continuous: z,
        benefit,
    })
}

/// Reference average benefit for an opponent, where one is known.
pub fn reference_benefit(opponent: &RenewalSpec, cost: f64) -> Option<f64> {
    match *opponent {
        RenewalSpec::Periodic { delta } => Some(oracle_per(delta, cost).unwrap_or(0.0)),
        RenewalSpec::Exponential { rate } => {
            Some(oracle_exp(rate, cost).map(|o| o.benefit).unwrap_or(0.0))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_examples() {
        assert!((oracle_per(50, 25.0).unwrap() - 0.48).abs() < 1e-15);
        assert_eq!(oracle_per(50, 49.0).unwrap(), 0.0);
        assert!((oracle_per(100, 10.0).unwrap() - 0.89).abs() < 1e-15);
        assert!(matches!(
            oracle_per(50, 50.0),
            Err(Error::DropoutOptimal { .. })
        ));
    }

    #[test]
    fn exponential_examples() {
        let o = oracle_exp(0.01, 10.0).unwrap();
        assert!(o.delta.abs_diff(53) <= 1, "{o:?}");
        assert!((o.benefit - 0.5875).abs() < 1e-3);
        let o = oracle_exp(0.01, 90.0).unwrap();
        assert!(o.delta.abs_diff(389) <= 2, "{o:?}");
        assert!(matches!(
            oracle_exp(0.01, 100.0),
            Err(Error::DropoutOptimal { .. })
        ));
    }

    #[test]
    fn exponential_benefit_falls_with_cost() {
        let values: Vec<f64> = [10.0, 30.0, 50.0, 70.0, 90.0]
            .iter()
            .map(|&c| oracle_exp(0.01, c).unwrap().benefit)
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }
}
