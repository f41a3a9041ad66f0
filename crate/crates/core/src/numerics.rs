//! Quadrature and scalar maximization.
//!
//! [`integrate`] is a globally adaptive 7/15-point Gauss–Kronrod rule: the
//! subinterval with the largest error estimate is bisected until the summed
//! estimate meets the tolerance. Jumps and kinks (e.g. a uniform density's
//! support edges) are isolated by repeated bisection.
//!
//! [`maximize_scalar`] scans a uniform grid over a bracket, then runs a
//! golden-section search on the two grid cells around the best sample. It is a
//! local method and makes no global guarantee.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::config("quadrature", "tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::config(
                "quadrature.max_subdivisions",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

// Kronrod abscissae on [0, 1]; the 7-point Gauss nodes are the odd entries plus the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, settings: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_pieces(&f, &[a, b], settings)
}

/// Integrates `f` over `[points[0], points[last]]`, pre-splitting at the
/// interior points (known kinks or jumps).
pub fn integrate_pieces<F>(f: &F, points: &[f64], settings: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    if points.len() < 2 {
        return Ok(0.0);
    }
    let (a, b) = (points[0], points[points.len() - 1]);
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::config(
            "integrate",
            format!("bad interval [{a}, {b}]"),
        ));
    }
    if a == b {
        return Ok(0.0);
    }

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gauss_kronrod(f, w[0], w[1]));
        }
    }
    let mut subdivisions = heap.len();
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Numerical {
                message: "integrand produced a non-finite value".into(),
                estimate: total,
                error_bound: error,
            });
        }
        if error <= settings.abs_tol.max(settings.rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= settings.max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            return Err(Error::Numerical {
                message: format!("tolerance not met after {subdivisions} subdivisions"),
                estimate: total,
                error_bound: error,
            });
        }
        heap.push(gauss_kronrod(f, worst.a, mid));
        heap.push(gauss_kronrod(f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Integrates `f` over `[a, ∞)` by mapping `x = a + u / (1 - u)` onto `u ∈ [0, 1)`.
pub fn integrate_tail<F>(f: F, a: f64, settings: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_tail_pieces(f, a, &[], settings)
}

/// Like [`integrate_tail`], pre-splitting at the given breakpoints in `x`.
pub fn integrate_tail_pieces<F>(
    f: F,
    a: f64,
    breakpoints: &[f64],
    settings: &QuadratureSettings,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |u: f64| {
        let s = 1.0 - u;
        let x = a + u / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut points = vec![0.0];
    let mut interior: Vec<f64> = breakpoints
        .iter()
        .filter(|&&x| x > a && x.is_finite())
        .map(|&x| (x - a) / (1.0 + x - a))
        .collect();
    interior.sort_by(f64::total_cmp);
    points.extend(interior);
    points.push(1.0);
    integrate_pieces(&g, &points, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizerSettings {
    pub lo: f64,
    pub hi: f64,
    /// Number of grid points, endpoints included.
    pub resolution: usize,
    pub tolerance: f64,
}

impl MaximizerSettings {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            resolution: 400,
            tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::config(
                "maximizer",
                format!("bad bracket [{}, {}]", self.lo, self.hi),
            ));
        }
        if self.resolution < 2 {
            return Err(Error::config("maximizer.resolution", "must be at least 2"));
        }
        Ok(())
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_section_max<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + c.abs().max(d.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over `[settings.lo, settings.hi]`, returning `(z*, f(z*))`.
///
/// The returned value is never below any grid sample. Non-finite samples are
/// treated as `-∞`.
pub fn maximize_scalar<F>(mut f: F, settings: &MaximizerSettings) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    settings.validate()?;
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let n = settings.resolution;
    let step = (settings.hi - settings.lo) / (n - 1) as f64;
    let grid = |i: usize| {
        if i + 1 == n {
            settings.hi
        } else {
            settings.lo + step * i as f64
        }
    };

    let mut best_i = 0;
    let mut best = (grid(0), eval(grid(0)));
    for i in 1..n {
        let x = grid(i);
        let v = eval(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(n - 1));
    let refined = golden_section_max(&mut eval, a, b, settings.tolerance);
    if refined.1 > best.1 {
        best = refined;
    }
    Ok(best)
}
