//! The nonlinear network `x[k+1] = W g(x[k]) + u[k] + c` and its simulation.

use crate::error::{check_len, Error, Result};
use crate::nonlinearity::{check_finite, Nonlinearity};
use crate::{Matrix, Vector};

/// States whose Euclidean norm exceeds this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Recurrent weights `W` (n x n) together with the unit nonlinearity `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    w: Matrix,
    nl: Nonlinearity,
}

impl RnnModel {
    pub fn new(w: Matrix, nl: Nonlinearity) -> Result<Self> {
        if w.nrows() == 0 {
            return Err(Error::InvalidArgument("weight matrix is empty".into()));
        }
        check_len("weight matrix columns", w.nrows(), w.ncols())?;
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                index: i,
                value: w[i],
            });
        }
        Ok(Self { w, nl })
    }

    /// Builds a model from row-major rows; ragged input is a shape error.
    pub fn from_rows(rows: &[Vec<f64>], nl: Nonlinearity) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            check_len("weight matrix row", n, row.len())?;
        }
        Self::new(Matrix::from_fn(n, n, |i, j| rows[i][j]), nl)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nl
    }

    /// Activation-form map `F_x(x, u) = W g(x) + u`.
    pub fn f_x(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        check_len("activation", self.n(), x.len())?;
        check_len("input", self.n(), u.len())?;
        Ok(&self.w * self.nl.apply(x)? + u)
    }

    /// Activity-form map `F_r(r, u) = g(W r + u)`.
    pub fn f_r(&self, r: &Vector, u: &Vector) -> Result<Vector> {
        check_len("activity", self.n(), r.len())?;
        check_len("input", self.n(), u.len())?;
        self.nl.apply(&(&self.w * r + u))
    }

    pub(crate) fn check_vec(&self, what: &'static str, v: &Vector) -> Result<()> {
        check_len(what, self.n(), v.len())?;
        check_finite(v)
    }
}

/// External inputs `u[k]` for `k >= 0`. Timepoints past the end of the list
/// (and all `k < 0`) carry zero input.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence {
    steps: Vec<Vector>,
    zero: Vector,
}

impl InputSequence {
    pub fn new(n: usize, steps: Vec<Vector>) -> Result<Self> {
        for u in &steps {
            check_len("input vector", n, u.len())?;
            check_finite(u)?;
        }
        Ok(Self {
            steps,
            zero: Vector::zeros(n),
        })
    }

    /// No input at any timepoint.
    pub fn zeros(n: usize) -> Self {
        Self {
            steps: Vec::new(),
            zero: Vector::zeros(n),
        }
    }

    /// Sparse form: `(k, u)` pairs, everything else zero. Later pairs overwrite
    /// earlier ones at the same `k`.
    pub fn from_sparse(n: usize, entries: &[(usize, Vector)]) -> Result<Self> {
        let len = entries.iter().map(|(k, _)| k + 1).max().unwrap_or(0);
        let mut steps = vec![Vector::zeros(n); len];
        for (k, u) in entries {
            steps[*k] = u.clone();
        }
        Self::new(n, steps)
    }

    pub fn dim(&self) -> usize {
        self.zero.len()
    }

    /// Number of explicitly stored steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn at(&self, k: usize) -> &Vector {
        self.steps.get(k).unwrap_or(&self.zero)
    }

    pub fn steps(&self) -> &[Vector] {
        &self.steps
    }

    /// Copy with every input multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            steps: self.steps.iter().map(|u| u * alpha).collect(),
            zero: self.zero.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Activation,
    Activity,
}

/// One state per timepoint, starting at `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: StateKind,
    pub states: Vec<Vector>,
}

impl Trajectory {
    /// Number of steps taken (`states.len() - 1`).
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

pub(crate) fn check_state(v: &Vector, step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) && v.norm() <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// One step of the context-driven dynamics: `W g(x) + u + c`.
pub fn step(model: &RnnModel, x: &Vector, u: &Vector, c: &Vector) -> Result<Vector> {
    check_len("context", model.n(), c.len())?;
    Ok(model.f_x(x, u)? + c)
}

/// Runs `horizon` steps from `x_init` under constant context `c`, returning the
/// activation trajectory and the activity trajectory `r[k] = g(x[k])` of the
/// same run.
pub fn simulate(
    model: &RnnModel,
    x_init: &Vector,
    inputs: &InputSequence,
    c: &Vector,
    horizon: usize,
) -> Result<(Trajectory, Trajectory)> {
    model.check_vec("initial activation", x_init)?;
    model.check_vec("context", c)?;
    check_len("input sequence", model.n(), inputs.dim())?;

    let nl = model.nonlinearity();
    let mut xs = Vec::with_capacity(horizon + 1);
    let mut rs = Vec::with_capacity(horizon + 1);
    let mut r = nl.apply(x_init)?;
    xs.push(x_init.clone());
    rs.push(r.clone());
    for k in 0..horizon {
        let x = model.weights() * &r + inputs.at(k) + c;
        check_state(&x, k + 1)?;
        r = x.map(|v| nl.value(v));
        xs.push(x);
        rs.push(r.clone());
    }
    Ok((
        Trajectory {
            kind: StateKind::Activation,
            states: xs,
        },
        Trajectory {
            kind: StateKind::Activity,
            states: rs,
        },
    ))
}
