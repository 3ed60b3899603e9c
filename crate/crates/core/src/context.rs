//! Networks driven by a constant context input `c_R`.
//!
//! Each context settles the network at its own fixed point and so selects its
//! own gain matrix `D_R`. The activation-space linearization always receives
//! the raw input `u`; the activity-space one receives `D_R u`, so only the
//! latter shows input modulation by context.

use crate::error::{check_len, Error, Result};
use crate::fixed_point::{find_fixed_point, FixedPoint, SolverOptions};
use crate::linearize::{gain_matrix, linearize_activation, linearize_activity, GainMatrix, LinearizedSystem};
use crate::nonlinearity::check_finite;
use crate::rnn::RnnModel;
use crate::spectral::{eigendecompose, pair_spectra};
use crate::{Matrix, Vector};

/// A labelled constant input `c_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub label: String,
    pub c: Vector,
}

impl Context {
    pub fn new(label: impl Into<String>, c: Vector) -> Result<Self> {
        check_finite(&c)?;
        Ok(Self {
            label: label.into(),
            c,
        })
    }
}

/// The network linearized at the fixed point selected by one context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextInstantiation {
    pub context: Context,
    pub fp: FixedPoint,
    pub gains: GainMatrix,
    /// `A = W D_R`, `B = I`.
    pub activation_sys: LinearizedSystem,
    /// `A = D_R W`, `B = D_R`.
    pub activity_sys: LinearizedSystem,
}

impl ContextInstantiation {
    /// Input as seen by the activity-space system, `D_R u`.
    pub fn effective_input(&self, u: &Vector) -> Vector {
        &self.activity_sys.b * u
    }
}

/// Solves for the context's fixed point from `x_guess` and linearizes there.
pub fn instantiate_context(
    model: &RnnModel,
    ctx: &Context,
    x_guess: &Vector,
    opts: SolverOptions,
) -> Result<ContextInstantiation> {
    let fp = find_fixed_point(model, &ctx.c, x_guess, opts)?;
    Ok(ContextInstantiation {
        context: ctx.clone(),
        gains: gain_matrix(model, &fp)?,
        activation_sys: linearize_activation(model, &fp)?,
        activity_sys: linearize_activity(model, &fp)?,
        fp,
    })
}

/// Displacement between the spectra of `W D_A` and `W D_B` under greedy
/// nearest-eigenvalue pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumShift {
    pub max_gap: f64,
    pub mean_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextComparison {
    pub labels: (String, String),
    /// `D_A u` and `D_B u`.
    pub effective_inputs: (Vector, Vector),
    pub effective_input_angle_deg: f64,
    /// `|D_A u| / |D_B u|`.
    pub effective_input_norm_ratio: f64,
    /// Both activation-space input matrices are exactly the identity.
    pub activation_input_identical: bool,
    /// The activity-space input matrices `D_A` and `D_B` differ in some entry.
    pub activity_input_differs: bool,
    pub spectrum_gaps: SpectrumShift,
}

/// Angle in degrees between two nonzero vectors, from the half-angle form
/// `2 atan2(|a/|a| - b/|b||, |a/|a| + b/|b||)`, which stays accurate near 0
/// and 180 degrees.
pub fn angle_deg(a: &Vector, b: &Vector) -> f64 {
    let ua = a / a.norm();
    let ub = b / b.norm();
    2.0 * (&ua - &ub).norm().atan2((&ua + &ub).norm()).to_degrees()
}

fn spectrum_shift(a: &Matrix, b: &Matrix) -> Result<SpectrumShift> {
    let la: Vec<_> = eigendecompose(a)?.into_iter().map(|t| t.lambda).collect();
    let lb: Vec<_> = eigendecompose(b)?.into_iter().map(|t| t.lambda).collect();
    let pairing = pair_spectra(&la, &lb, f64::INFINITY)?;
    let mean_gap = if pairing.gaps.is_empty() {
        0.0
    } else {
        pairing.gaps.iter().sum::<f64>() / pairing.gaps.len() as f64
    };
    Ok(SpectrumShift {
        max_gap: pairing.max_eigenvalue_gap,
        mean_gap,
    })
}

fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && m.iter()
            .enumerate()
            .all(|(k, &v)| v == if k % (m.nrows() + 1) == 0 { 1.0 } else { 0.0 })
}

/// Compares two already-built instantiations under probe input `u`.
pub fn compare_instantiations(
    a: &ContextInstantiation,
    b: &ContextInstantiation,
    u: &Vector,
) -> Result<ContextComparison> {
    check_len("probe input", a.gains.dim(), u.len())?;
    check_len("instantiation", a.gains.dim(), b.gains.dim())?;
    check_finite(u)?;
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroProbe);
    }
    let ea = a.effective_input(u);
    let eb = b.effective_input(u);
    Ok(ContextComparison {
        labels: (a.context.label.clone(), b.context.label.clone()),
        effective_input_angle_deg: angle_deg(&ea, &eb),
        effective_input_norm_ratio: ea.norm() / eb.norm(),
        activation_input_identical: is_identity(&a.activation_sys.b)
            && is_identity(&b.activation_sys.b),
        activity_input_differs: a.activity_sys.b != b.activity_sys.b,
        spectrum_gaps: spectrum_shift(&a.activation_sys.a, &b.activation_sys.a)?,
        effective_inputs: (ea, eb),
    })
}

/// Instantiates both contexts (each solved from a zero guess) and compares
/// them under probe input `u`.
pub fn compare_contexts(
    model: &RnnModel,
    ctx_a: &Context,
    ctx_b: &Context,
    u: &Vector,
    opts: SolverOptions,
) -> Result<ContextComparison> {
    model.check_vec("probe input", u)?;
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroProbe);
    }
    let zero = Vector::zeros(model.n());
    let a = instantiate_context(model, ctx_a, &zero, opts)?;
    let b = instantiate_context(model, ctx_b, &zero, opts)?;
    compare_instantiations(&a, &b, u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub context: Context,
    pub outcome: std::result::Result<ContextInstantiation, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// One entry per input context, in input order.
    pub entries: Vec<SweepEntry>,
    /// Pairs `(i, j)`, `i < j`, in lexicographic order, with both contexts
    /// instantiated.
    pub comparisons: Vec<((usize, usize), ContextComparison)>,
    /// Pairs left out because one side failed.
    pub skipped_pairs: Vec<(usize, usize)>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_err()).count()
    }
}

/// Instantiates every context and compares all pairs.
///
/// Each solve is warm-started from the previous successful fixed point (the
/// first from zero) and retried from zero if that fails. Failures are kept
/// in the report instead of aborting the sweep.
pub fn context_sweep(
    model: &RnnModel,
    contexts: &[Context],
    u: &Vector,
    opts: SolverOptions,
) -> Result<SweepReport> {
    if contexts.is_empty() {
        return Err(Error::InvalidArgument("context sweep needs at least one context".into()));
    }
    model.check_vec("probe input", u)?;
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroProbe);
    }

    let zero = Vector::zeros(model.n());
    let mut warm: Option<Vector> = None;
    let mut entries = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        let mut outcome = match &warm {
            Some(guess) => instantiate_context(model, ctx, guess, opts),
            None => instantiate_context(model, ctx, &zero, opts),
        };
        if outcome.is_err() && warm.is_some() {
            outcome = instantiate_context(model, ctx, &zero, opts);
        }
        if let Ok(inst) = &outcome {
            warm = Some(inst.fp.x0().clone());
        }
        entries.push(SweepEntry {
            context: ctx.clone(),
            outcome,
        });
    }

    let mut comparisons = Vec::new();
    let mut skipped_pairs = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            match (&entries[i].outcome, &entries[j].outcome) {
                (Ok(a), Ok(b)) => comparisons.push(((i, j), compare_instantiations(a, b, u)?)),
                _ => skipped_pairs.push((i, j)),
            }
        }
    }
    Ok(SweepReport {
        entries,
        comparisons,
        skipped_pairs,
    })
}
