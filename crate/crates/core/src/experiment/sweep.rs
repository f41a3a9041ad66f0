//! Cartesian parameter sweeps over an experiment configuration.
//!
//! Axis names are dotted paths into the configuration's JSON form, such as
//! `game.cost_1` or `agent.params.exploration`. A few short aliases are
//! accepted for the common axes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::ExperimentConfig;
use super::output::{emit, CSV_FILE, SUMMARY_FILE};
use super::runner::run_experiment;
use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.json";

const ALIASES: [(&str, &str); 6] = [
    ("cost_0", "game.cost_0"),
    ("cost_1", "game.cost_1"),
    ("horizon", "game.horizon"),
    ("gamma", "agent.params.discount"),
    ("epsilon", "agent.params.exploration"),
    ("p", "agent.params.new_state_wait"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn path(&self) -> &str {
        ALIASES
            .iter()
            .find(|(alias, _)| *alias == self.name)
            .map_or(self.name.as_str(), |(_, path)| path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axes: Vec<Axis>,
}

/// One grid point: the axis values and the configuration they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub params: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub dir: String,
    pub params: Map<String, Value>,
    pub csv: String,
    pub summary: String,
    pub final_mean_benefit_1: f64,
    pub non_optimal_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub axes: Vec<String>,
    pub points: Vec<IndexEntry>,
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let field = || format!("axes.{path}");
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::config(field(), "empty path"))?;
    let mut node = root;
    for key in keys {
        node = node
            .get_mut(key)
            .filter(|v| v.is_object())
            .ok_or_else(|| Error::config(field(), format!("no object at `{key}`")))?;
    }
    let object = node
        .as_object_mut()
        .ok_or_else(|| Error::config(field(), "parent is not an object"))?;
    object.insert(last.to_string(), value);
    Ok(())
}

fn point_dir_name(point: &GridPoint) -> String {
    let mut name = format!("{:03}", point.index);
    for (axis, value) in &point.params {
        let leaf = axis.rsplit('.').next().unwrap_or(axis);
        let text = match value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        name.push('_');
        name.push_str(leaf);
        name.push('=');
        name.extend(text.chars().map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        }));
    }
    name
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.is_empty() {
            return Err(Error::config("axes", "at least one axis is required"));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::config(
                    format!("axes[{i}].values"),
                    format!("axis `{}` has no values", axis.name),
                ));
            }
            if self.axes[..i].iter().any(|a| a.path() == axis.path()) {
                return Err(Error::config(
                    format!("axes[{i}].name"),
                    format!("duplicate axis `{}`", axis.name),
                ));
            }
        }
        self.points().map(|_| ())
    }

    /// Enumerates the grid with the last axis varying fastest.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let base = serde_json::to_value(&self.base)?;
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        (0..total)
            .map(|index| {
                let mut rest = index;
                let mut picks = vec![0; self.axes.len()];
                for (k, axis) in self.axes.iter().enumerate().rev() {
                    picks[k] = rest % axis.values.len();
                    rest /= axis.values.len();
                }
                let mut value = base.clone();
                let mut params = Vec::with_capacity(self.axes.len());
                for (axis, &pick) in self.axes.iter().zip(&picks) {
                    let v = axis.values[pick].clone();
                    set_path(&mut value, axis.path(), v.clone())?;
                    params.push((axis.name.clone(), v));
                }
                let config: ExperimentConfig = serde_json::from_value(value)?;
                config.validate()?;
                Ok(GridPoint {
                    index,
                    params,
                    config,
                })
            })
            .collect()
    }
}

/// Runs every grid point, writing one sub-directory each plus an index file.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<SweepIndex> {
    spec.validate()?;
    let points = spec.points()?;
    let entries: Vec<IndexEntry> = points
        .into_par_iter()
        .map(|point| {
            let dir_name = point_dir_name(&point);
            let dir: PathBuf = out_dir.join(&dir_name);
            let mut config = point.config.clone();
            config.output_dir = dir.clone();
            let result = run_experiment(&config)?;
            emit(&result, &dir)?;
            log::info!(
                "sweep point {dir_name}: mean benefit {:.4}",
                result.summary.final_benefit_1.mean
            );
            Ok(IndexEntry {
                csv: format!("{dir_name}/{CSV_FILE}"),
                summary: format!("{dir_name}/{SUMMARY_FILE}"),
                dir: dir_name,
                params: point.params.into_iter().collect(),
                final_mean_benefit_1: result.summary.final_benefit_1.mean,
                non_optimal_count: result.summary.non_optimal_count,
            })
        })
        .collect::<Result<_>>()?;

    let index = SweepIndex {
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        points: entries,
    };
    let path = out_dir.join(INDEX_FILE);
    let mut json = serde_json::to_vec_pretty(&index)?;
    json.push(b'\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::AgentSpec;
    use crate::game::GameConfig;
    use crate::renewal::RenewalSpec;
    use serde_json::json;

    fn base() -> ExperimentConfig {
        ExperimentConfig::new(
            GameConfig::new(1000, 1.0, 25.0),
            RenewalSpec::Periodic { delta: 50 },
            AgentSpec::Qflip {
                scheme: crate::env::ObservationScheme::OppLm,
                params: Default::default(),
                c: 5.0,
            },
        )
    }

    #[test]
    fn product_enumerates_in_declaration_order() {
        let spec = SweepSpec {
            base: base(),
            axes: vec![
                Axis {
                    name: "epsilon".into(),
                    values: vec![json!(0.0), json!(0.1), json!(0.25), json!(0.5)],
                },
                Axis {
                    name: "agent.params.new_state_wait".into(),
                    values: vec![json!(0.1), json!(0.4), json!(0.7), json!(0.9)],
                },
            ],
        };
        let points = spec.points().unwrap();
        assert_eq!(points.len(), 16);
        let AgentSpec::Qflip { params, .. } = points[6].config.agent else {
            panic!()
        };
        assert_eq!((params.exploration, params.new_state_wait), (0.1, 0.7));
        assert_eq!(
            point_dir_name(&points[6]),
            "006_epsilon=0.1_new_state_wait=0.7"
        );
    }

    #[test]
    fn invalid_axes_are_rejected() {
        let empty = SweepSpec {
            base: base(),
            axes: vec![],
        };
        assert!(empty.validate().unwrap_err().is_validation());
        let no_values = SweepSpec {
            base: base(),
            axes: vec![Axis {
                name: "cost_1".into(),
                values: vec![],
            }],
        };
        assert!(no_values.validate().unwrap_err().is_validation());
        let bad_path = SweepSpec {
            base: base(),
            axes: vec![Axis {
                name: "game.nope.x".into(),
                values: vec![json!(1)],
            }],
        };
        assert!(bad_path.validate().unwrap_err().is_validation());
        let bad_value = SweepSpec {
            base: base(),
            axes: vec![Axis {
                name: "cost_1".into(),
                values: vec![json!(-3)],
            }],
        };
        assert!(bad_value.validate().unwrap_err().is_validation());
    }
}
