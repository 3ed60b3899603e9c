//! Model and experiment-config files.

use std::path::{Path, PathBuf};

use rnn_linz::{Context, InputSequence, Nonlinearity, RnnModel, Vector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// On-disk model: `{"n": 2, "W": [[..], [..]], "nonlinearity": {"kind": "tanh"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub nonlinearity: Nonlinearity,
}

impl ModelFile {
    pub fn from_model(model: &RnnModel) -> Self {
        let w = model.weights();
        Self {
            n: model.n(),
            w: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
            nonlinearity: model.nonlinearity(),
        }
    }

    pub fn into_model(self, path: &Path) -> Result<RnnModel, CliError> {
        let err = |field: String, message: String| CliError::config(path, field, message);
        if self.n == 0 {
            return Err(err("n".into(), "must be positive".into()));
        }
        if self.w.len() != self.n {
            return Err(err("W".into(), format!("expected {} rows, got {}", self.n, self.w.len())));
        }
        for (i, row) in self.w.iter().enumerate() {
            if row.len() != self.n {
                return Err(err(
                    format!("W[{i}]"),
                    format!("ragged row: expected {} entries, got {}", self.n, row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(err(format!("W[{i}][{j}]"), "non-finite entry".into()));
            }
        }
        RnnModel::from_rows(&self.w, self.nonlinearity).map_err(|e| err("W".into(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSpec {
    pub label: String,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputStep {
    pub k: usize,
    pub u: Vec<f64>,
}

fn default_horizon() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-12
}
fn default_epsilon() -> f64 {
    1e-2
}
fn default_taylor_horizon() -> usize {
    5
}
fn default_max_iter() -> usize {
    100
}

/// Experiment description. Paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    #[serde(default)]
    pub contexts: Vec<ContextSpec>,
    #[serde(default)]
    pub probe_u: Option<Vec<f64>>,
    #[serde(default)]
    pub inputs: Vec<InputStep>,
    #[serde(default)]
    pub x_init: Option<Vec<f64>>,
    #[serde(default)]
    pub x_guess: Option<Vec<f64>>,
    #[serde(default)]
    pub dev_init: Option<Vec<f64>>,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_taylor_horizon")]
    pub taylor_horizon: usize,
}

/// A config with its model loaded and every vector checked against `n`.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: RnnModel,
    pub contexts: Vec<Context>,
    pub probe_u: Vector,
    pub inputs: InputSequence,
    pub x_init: Vector,
    pub x_guess: Vector,
    pub dev_init: Vector,
    pub direction: Vector,
    pub horizon: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub taylor_horizon: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::config(path, "<document>", format!("{e}"))
    })
}

pub fn load_model(path: &Path) -> Result<RnnModel, CliError> {
    let file: ModelFile = parse(path, &read(path)?)?;
    file.into_model(path)
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = parse(path, &read(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let model = load_model(&base.join(&cfg.model))?;
        Self::from_config(path, cfg, model)
    }

    pub fn from_config(path: &Path, cfg: ExperimentConfig, model: RnnModel) -> Result<Self, CliError> {
        let n = model.n();
        let vector = |field: String, v: &[f64]| -> Result<Vector, CliError> {
            if v.len() != n {
                return Err(CliError::config(
                    path,
                    field,
                    format!("expected length {n}, got {}", v.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::config(path, field, "non-finite entry"));
            }
            Ok(Vector::from_column_slice(v))
        };
        let optional = |field: &str, v: &Option<Vec<f64>>, default: Vector| match v {
            Some(v) => vector(field.to_string(), v),
            None => Ok(default),
        };

        let contexts = if cfg.contexts.is_empty() {
            vec![Context::new("default", Vector::zeros(n)).expect("zero context is finite")]
        } else {
            cfg.contexts
                .iter()
                .enumerate()
                .map(|(i, spec)| {
                    let c = vector(format!("contexts[{i}].c"), &spec.c)?;
                    Context::new(spec.label.clone(), c)
                        .map_err(|e| CliError::config(path, format!("contexts[{i}].c"), e.to_string()))
                })
                .collect::<Result<_, _>>()?
        };

        let steps = cfg
            .inputs
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((s.k, vector(format!("inputs[{i}].u"), &s.u)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let inputs = InputSequence::from_sparse(n, &steps)
            .map_err(|e| CliError::config(path, "inputs", e.to_string()))?;

        let mut dev_default = Vector::zeros(n);
        dev_default[0] = 1e-3;
        let direction = optional(
            "direction",
            &cfg.direction,
            Vector::from_element(n, 1.0 / (n as f64).sqrt()),
        )?;
        if (direction.norm() - 1.0).abs() > 1e-10 {
            return Err(CliError::config(path, "direction", "must have unit 2-norm"));
        }
        if cfg.tol.is_nan() || cfg.tol <= 0.0 {
            return Err(CliError::config(path, "tol", "must be positive"));
        }
        if cfg.max_iter == 0 {
            return Err(CliError::config(path, "max_iter", "must be at least 1"));
        }
        if !cfg.epsilon.is_finite() || cfg.epsilon <= 0.0 {
            return Err(CliError::config(path, "epsilon", "must be positive and finite"));
        }

        Ok(Self {
            probe_u: optional("probe_u", &cfg.probe_u, Vector::from_element(n, 1.0))?,
            x_init: optional("x_init", &cfg.x_init, Vector::zeros(n))?,
            x_guess: optional("x_guess", &cfg.x_guess, Vector::zeros(n))?,
            dev_init: optional("dev_init", &cfg.dev_init, dev_default)?,
            direction,
            contexts,
            inputs,
            horizon: cfg.horizon,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            epsilon: cfg.epsilon,
            taylor_horizon: cfg.taylor_horizon,
            model,
        })
    }

    /// The context named `label`, or the first one.
    pub fn context(&self, label: Option<&str>) -> Result<&Context, CliError> {
        match label {
            None => Ok(&self.contexts[0]),
            Some(l) => self.contexts.iter().find(|c| c.label == l).ok_or_else(|| {
                CliError::Usage(format!("no context labelled `{l}` in config"))
            }),
        }
    }

    pub fn solver_options(&self) -> rnn_linz::SolverOptions {
        rnn_linz::SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}
