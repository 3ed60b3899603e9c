//! Pointwise nonlinearities `g` with closed-form slope and inverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector;

/// Inputs to [`Nonlinearity::inverse`] closer than this to an edge of the
/// open range are rejected.
pub const RANGE_MARGIN: f64 = 1e-12;

/// A strictly increasing, differentiable, invertible pointwise function.
///
/// Serialized as `{"kind": "tanh" | "logistic" | "identity"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Nonlinearity {
    Tanh,
    Logistic,
    Identity,
}

impl Nonlinearity {
    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Logistic => "logistic",
            Nonlinearity::Identity => "identity",
        }
    }

    /// `g(x)` for a single value.
    pub fn value(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Logistic => logistic(x),
            Nonlinearity::Identity => x,
        }
    }

    /// `g'(x)` for a single value, in closed form.
    pub fn slope(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Tanh => {
                // 1 - tanh^2 cancels badly once tanh is near 1; sech^2 does not.
                let s = 1.0 / x.cosh();
                s * s
            }
            Nonlinearity::Logistic => {
                let s = logistic(x);
                let t = logistic(-x);
                s * t
            }
            Nonlinearity::Identity => 1.0,
        }
    }

    /// `g^{-1}(r)` for a single value; `None` when `r` is not strictly inside
    /// the range (with [`RANGE_MARGIN`] slack).
    pub fn inverse_value(self, r: f64) -> Option<f64> {
        if !r.is_finite() {
            return None;
        }
        match self {
            // std's atanh loses accuracy for r near -1; use odd symmetry.
            Nonlinearity::Tanh => {
                (r.abs() < 1.0 - RANGE_MARGIN).then(|| r.abs().atanh().copysign(r))
            }
            Nonlinearity::Logistic => {
                (r > RANGE_MARGIN && r < 1.0 - RANGE_MARGIN).then(|| r.ln() - (-r).ln_1p())
            }
            Nonlinearity::Identity => Some(r),
        }
    }

    /// Elementwise `g`.
    pub fn apply(self, x: &Vector) -> Result<Vector> {
        check_finite(x)?;
        Ok(x.map(|v| self.value(v)))
    }

    /// Elementwise `g'`.
    pub fn derivative(self, x: &Vector) -> Result<Vector> {
        check_finite(x)?;
        Ok(x.map(|v| self.slope(v)))
    }

    /// Elementwise `g^{-1}`; the error names the first offending index.
    pub fn inverse(self, r: &Vector) -> Result<Vector> {
        let mut out = Vector::zeros(r.len());
        for (index, &value) in r.iter().enumerate() {
            out[index] = self
                .inverse_value(value)
                .ok_or(Error::Range { index, value })?;
        }
        Ok(out)
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_finite(x: &Vector) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::Domain {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}
