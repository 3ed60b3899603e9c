//! Activation-space and activity-space linearizations around a fixed point.
//!
//! With gains `D = diag(g'(x0))` the two linear systems are
//!
//! ```text
//! x[k+1] = W D x[k] + u[k]        (activation space, deviations x = x̂ - x0)
//! r[k+1] = D W r[k] + D u[k]      (activity space,   deviations r = r̂ - r0)
//! ```
//!
//! and `r = D x` carries trajectories of the first onto trajectories of the
//! second.

use crate::error::{check_len, Error, Result};
use crate::fixed_point::FixedPoint;
use crate::rnn::{check_state, simulate, InputSequence, RnnModel, StateKind, Trajectory};
use crate::{inf_norm, Matrix, Vector};

/// Gains with magnitude at or below this cannot be inverted.
pub const MIN_GAIN: f64 = 1e-12;

/// Diagonal gain matrix `D`, stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    diag: Vector,
}

impl GainMatrix {
    pub fn new(diag: Vector) -> Result<Self> {
        crate::nonlinearity::check_finite(&diag)?;
        Ok(Self { diag })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: Vector::from_element(n, 1.0),
        }
    }

    pub fn diag(&self) -> &Vector {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&self.diag)
    }

    /// `W D`: column `j` of `w` scaled by `D[j]`.
    pub fn scale_columns(&self, w: &Matrix) -> Matrix {
        let mut out = w.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= self.diag[j];
        }
        out
    }

    /// `D W`: row `i` of `w` scaled by `D[i]`.
    pub fn scale_rows(&self, w: &Matrix) -> Matrix {
        let mut out = w.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= self.diag[i];
        }
        out
    }

    /// `D v`.
    pub fn apply(&self, v: &Vector) -> Vector {
        v.component_mul(&self.diag)
    }

    /// `D^{-1} v`.
    pub fn apply_inverse(&self, v: &Vector) -> Result<Vector> {
        self.check_invertible()?;
        Ok(v.component_div(&self.diag))
    }

    pub(crate) fn check_invertible(&self) -> Result<()> {
        match self.diag.iter().position(|d| d.abs() <= MIN_GAIN) {
            Some(index) => Err(Error::NearZeroGain {
                index,
                value: self.diag[index],
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    ActivationSpace,
    ActivitySpace,
}

impl Variant {
    fn state_kind(self) -> StateKind {
        match self {
            Variant::ActivationSpace => StateKind::Activation,
            Variant::ActivitySpace => StateKind::Activity,
        }
    }
}

/// `state[k+1] = A state[k] + B u[k]` in deviation coordinates around `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub variant: Variant,
    pub a: Matrix,
    pub b: Matrix,
    pub base: FixedPoint,
}

impl LinearizedSystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// `D` with `D[j] = g'(x0[j])`.
pub fn gain_matrix(model: &RnnModel, fp: &FixedPoint) -> Result<GainMatrix> {
    check_len("fixed point", model.n(), fp.dim())?;
    GainMatrix::new(model.nonlinearity().derivative(fp.x0())?)
}

/// `A = W D`, `B = I`.
pub fn linearize_activation(model: &RnnModel, fp: &FixedPoint) -> Result<LinearizedSystem> {
    let d = gain_matrix(model, fp)?;
    Ok(LinearizedSystem {
        variant: Variant::ActivationSpace,
        a: d.scale_columns(model.weights()),
        b: Matrix::identity(model.n(), model.n()),
        base: fp.clone(),
    })
}

/// `A = D W`, `B = D`.
pub fn linearize_activity(model: &RnnModel, fp: &FixedPoint) -> Result<LinearizedSystem> {
    let d = gain_matrix(model, fp)?;
    Ok(LinearizedSystem {
        variant: Variant::ActivitySpace,
        a: d.scale_rows(model.weights()),
        b: d.to_matrix(),
        base: fp.clone(),
    })
}

/// Iterates the linear recursion from `dev_init`; states are deviations from
/// the base fixed point.
pub fn simulate_linear(
    sys: &LinearizedSystem,
    dev_init: &Vector,
    inputs: &InputSequence,
    horizon: usize,
) -> Result<Trajectory> {
    let n = sys.dim();
    check_len("initial deviation", n, dev_init.len())?;
    check_len("input sequence", n, inputs.dim())?;
    check_state(dev_init, 0)?;

    let mut states = Vec::with_capacity(horizon + 1);
    states.push(dev_init.clone());
    for k in 0..horizon {
        let next = &sys.a * &states[k] + &sys.b * inputs.at(k);
        check_state(&next, k + 1)?;
        states.push(next);
    }
    Ok(Trajectory {
        kind: sys.variant.state_kind(),
        states,
    })
}

/// `r[k] = D x[k]` for every state.
pub fn map_x_to_r(d: &GainMatrix, x_traj: &Trajectory) -> Result<Trajectory> {
    let states = x_traj
        .states
        .iter()
        .map(|x| {
            check_len("trajectory state", d.dim(), x.len())?;
            Ok(d.apply(x))
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory {
        kind: StateKind::Activity,
        states,
    })
}

/// `x[k] = D^{-1} r[k]` for every state.
pub fn map_r_to_x(d: &GainMatrix, r_traj: &Trajectory) -> Result<Trajectory> {
    d.check_invertible()?;
    let states = r_traj
        .states
        .iter()
        .map(|r| {
            check_len("trajectory state", d.dim(), r.len())?;
            d.apply_inverse(r)
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory {
        kind: StateKind::Activation,
        states,
    })
}

/// Per-step comparison of `D x[k]` against `r[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `|D x[k] - r[k]|_inf` for `k = 0..=horizon`.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    /// `max_k |r[k]|_inf`.
    pub max_state_norm: f64,
    pub tol: f64,
    /// `tol * (1 + max_state_norm)`.
    pub threshold: f64,
    pub passed: bool,
}

/// Runs the activation-space system from `dev_init` and the activity-space
/// system from `D dev_init` on the same inputs and measures how far `D x[k]`
/// strays from `r[k]`. Passes when the largest gap is within
/// `tol * (1 + max_k |r[k]|_inf)`.
pub fn check_equivalence(
    model: &RnnModel,
    fp: &FixedPoint,
    dev_init: &Vector,
    inputs: &InputSequence,
    horizon: usize,
    tol: f64,
) -> Result<EquivalenceReport> {
    let d = gain_matrix(model, fp)?;
    let x_sys = linearize_activation(model, fp)?;
    let r_sys = linearize_activity(model, fp)?;
    let xs = simulate_linear(&x_sys, dev_init, inputs, horizon)?;
    let rs = simulate_linear(&r_sys, &d.apply(dev_init), inputs, horizon)?;
    let mapped = map_x_to_r(&d, &xs)?;

    let gaps: Vec<f64> = mapped
        .states
        .iter()
        .zip(&rs.states)
        .map(|(dx, r)| inf_norm(&(dx - r)))
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let max_state_norm = rs.states.iter().map(inf_norm).fold(0.0, f64::max);
    let threshold = tol * (1.0 + max_state_norm);
    Ok(EquivalenceReport {
        gaps,
        max_gap,
        max_state_norm,
        tol,
        threshold,
        passed: max_gap <= threshold,
    })
}

/// Largest infinity-norm difference, over `k <= horizon`, between the
/// nonlinear deviation `x̂[k] - x0` started at `x0 + epsilon * direction` and
/// the activation-space linear prediction started at `epsilon * direction`.
/// No external input; the context stays at the fixed point's own `c`.
pub fn linearization_error(
    model: &RnnModel,
    fp: &FixedPoint,
    direction: &Vector,
    epsilon: f64,
    horizon: usize,
) -> Result<f64> {
    check_len("direction", model.n(), direction.len())?;
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let norm = direction.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "direction must have unit norm, got {norm}"
        )));
    }

    let dev = direction * epsilon;
    let none = InputSequence::zeros(model.n());
    let (nonlinear, _) = simulate(model, &(fp.x0() + &dev), &none, fp.context(), horizon)?;
    let linear = simulate_linear(&linearize_activation(model, fp)?, &dev, &none, horizon)?;

    Ok(nonlinear
        .states
        .iter()
        .zip(&linear.states)
        .map(|(xh, x)| inf_norm(&(xh - fp.x0() - x)))
        .fold(0.0, f64::max))
}
