//! Two linearizations of discrete-time recurrent network dynamics.
//!
//! A network `x[k+1] = W g(x[k]) + u[k] + c` can be linearized around a fixed
//! point either in activation space (`x`, dynamics matrix `W D`, input matrix
//! `I`) or in activity space (`r = g(x)`, dynamics matrix `D W`, input matrix
//! `D`), where `D` is the diagonal matrix of gains `g'(x0)`. This crate builds
//! both, checks that they generate the same trajectories under `r = D x`,
//! certifies the left/right eigenvector maps between `W D` and `D W`, and
//! compares the per-context instantiations of a network driven by different
//! constant inputs.

pub mod context;
pub mod error;
pub mod fixed_point;
pub mod linearize;
pub mod nonlinearity;
pub mod rnn;
pub mod spectral;

pub use context::{
    angle_deg, compare_contexts, compare_instantiations, context_sweep, instantiate_context,
    Context, ContextComparison, ContextInstantiation, SpectrumShift, SweepEntry, SweepReport,
};
pub use error::{Error, Result};
pub use fixed_point::{find_fixed_point, verify_fixed_point, FixedPoint, SolverOptions};
pub use linearize::{
    check_equivalence, gain_matrix, linearization_error, linearize_activation, linearize_activity,
    map_r_to_x, map_x_to_r, simulate_linear, EquivalenceReport, GainMatrix, LinearizedSystem,
    Variant,
};
pub use nonlinearity::Nonlinearity;
pub use rnn::{simulate, step, InputSequence, RnnModel, StateKind, Trajectory};
pub use spectral::{
    eigendecompose, map_left_eigvec, map_right_eigvec, pair_spectra, spectral_norm,
    verify_dot_preservation, verify_eigenvector_maps, verify_spectrum_identity, DotCheck,
    DotPreservationReport, EigenTriple, MappedVectorCheck, MappingReport, SpectralAnalysis,
    SpectrumPairing,
};

/// Dense real vector used for states, inputs and contexts.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense complex vector used for eigenvectors.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;

pub(crate) fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
