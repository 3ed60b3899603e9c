//! Fixed points `x0 = W g(x0) + c` by damped Newton iteration.

use crate::error::{check_len, Error, Result};
use crate::rnn::RnnModel;
use crate::{inf_norm, Matrix, Vector};

/// Newton systems with a 1-norm condition estimate above this are rejected.
pub const MAX_CONDITION: f64 = 1e14;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the infinity-norm residual `|W g(x) + c - x|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// A point `x0` with its context `c`, activity `r0 = g(x0)` and residual.
///
/// `r0` and `residual` are always recomputed from `x0`, never supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    x0: Vector,
    r0: Vector,
    c: Vector,
    residual: f64,
    iterations: usize,
    history: Vec<f64>,
}

impl FixedPoint {
    /// Wraps an arbitrary candidate point; it is certified only if its
    /// residual is small enough for the caller's purposes.
    pub fn at(model: &RnnModel, x0: Vector, c: Vector) -> Result<Self> {
        model.check_vec("fixed point", &x0)?;
        model.check_vec("context", &c)?;
        let r0 = model.nonlinearity().apply(&x0)?;
        let residual = residual_of(model, &r0, &x0, &c);
        Ok(Self {
            x0,
            r0,
            c,
            residual,
            iterations: 0,
            history: vec![residual],
        })
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn r0(&self) -> &Vector {
        &self.r0
    }

    pub fn context(&self) -> &Vector {
        &self.c
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Residual before each Newton step and after the last one.
    pub fn residual_history(&self) -> &[f64] {
        &self.history
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

fn residual_of(model: &RnnModel, r: &Vector, x: &Vector, c: &Vector) -> f64 {
    inf_norm(&(model.weights() * r + c - x))
}

fn residual_vec(model: &RnnModel, x: &Vector, c: &Vector) -> (Vector, f64) {
    let nl = model.nonlinearity();
    let r = x.map(|v| nl.value(v));
    let f = model.weights() * r + c - x;
    let norm = inf_norm(&f);
    (f, if norm.is_finite() { norm } else { f64::INFINITY })
}

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `(W D(x) - I) delta = -F(x)` with partial-pivoting LU.
fn newton_direction(model: &RnnModel, x: &Vector, f: &Vector) -> Result<Vector> {
    let n = model.n();
    let gains = x.map(|v| model.nonlinearity().slope(v));
    let mut jac = model.weights().clone();
    for (j, mut col) in jac.column_iter_mut().enumerate() {
        col *= gains[j];
    }
    for i in 0..n {
        jac[(i, i)] -= 1.0;
    }

    let lu = jac.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
    let condition = one_norm(&jac) * one_norm(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularJacobian { condition });
    }
    lu.solve(&(-f))
        .ok_or(Error::SingularJacobian { condition: f64::INFINITY })
}

/// Finds `x0` with `|W g(x0) + c - x0|_inf <= opts.tol`, starting at `x_guess`.
///
/// Each Newton step is halved (at most 30 times) until the residual
/// decreases. Which fixed point is found depends on the guess.
pub fn find_fixed_point(
    model: &RnnModel,
    c: &Vector,
    x_guess: &Vector,
    opts: SolverOptions,
) -> Result<FixedPoint> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    model.check_vec("context", c)?;
    model.check_vec("initial guess", x_guess)?;

    let mut x = x_guess.clone();
    let (mut f, mut res) = residual_vec(model, &x, c);
    let mut history = vec![res];
    let mut iterations = 0;

    while res > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NonConvergence {
                best_residual: res,
                iterations,
            });
        }
        let delta = newton_direction(model, &x, &f)?;
        iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &delta * t;
            let (tf, tres) = residual_vec(model, &trial, c);
            if tres < res {
                accepted = Some((trial, tf, tres));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((nx, nf, nres)) => {
                x = nx;
                f = nf;
                res = nres;
                history.push(res);
            }
            // No descent along the Newton direction: stalled at round-off or
            // in a region Newton cannot leave.
            None => {
                return Err(Error::NonConvergence {
                    best_residual: res,
                    iterations,
                })
            }
        }
    }

    let mut fp = FixedPoint::at(model, x, c.clone())?;
    fp.iterations = iterations;
    fp.history = history;
    Ok(fp)
}

/// Recomputes the residual of `fp` from scratch and compares it with `tol`.
pub fn verify_fixed_point(model: &RnnModel, fp: &FixedPoint, tol: f64) -> bool {
    if check_len("fixed point", model.n(), fp.dim()).is_err()
        || check_len("context", model.n(), fp.c.len()).is_err()
    {
        return false;
    }
    let Ok(r) = model.nonlinearity().apply(&fp.x0) else {
        return false;
    };
    residual_of(model, &r, &fp.x0, &fp.c) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Nonlinearity;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn swap_half() -> RnnModel {
        RnnModel::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]], Nonlinearity::Tanh).unwrap()
    }

    // Plain iteration x <- W tanh(x) + c from 0 until successive change < 1e-15.
    fn iterate_oracle(model: &RnnModel, c: &Vector) -> Vector {
        let mut x = Vector::zeros(model.n());
        for _ in 0..100_000 {
            let next = model.weights() * x.map(f64::tanh) + c;
            let done = (&next - &x).amax() < 1e-15;
            x = next;
            if done {
                break;
            }
        }
        x
    }

    // Frozen output of the iteration oracle (also in fixtures/oracle_2x2.json).
    const ORACLE_X0: [f64; 2] = [0.133_009_598_221_400_04, 0.066_115_363_701_356_5];

    #[test]
    fn origin_at_zero_context() {
        let m = RnnModel::from_rows(&[vec![1.4, -0.3], vec![0.8, 0.2]], Nonlinearity::Tanh).unwrap();
        let fp = find_fixed_point(&m, &Vector::zeros(2), &Vector::zeros(2), SolverOptions::default())
            .unwrap();
        assert_eq!(fp.x0(), &Vector::zeros(2));
        assert_eq!(fp.residual(), 0.0);
        assert!(fp.iterations() <= 1);
    }

    #[test]
    fn identity_matches_linear_solve() {
        let w = Matrix::from_row_slice(3, 3, &[0.2, -0.1, 0.3, 0.0, 0.4, 0.1, -0.2, 0.1, 0.1]);
        let m = RnnModel::new(w.clone(), Nonlinearity::Identity).unwrap();
        let c = v(&[1.0, -2.0, 0.5]);
        let fp = find_fixed_point(&m, &c, &Vector::zeros(3), SolverOptions::default()).unwrap();
        let exact = (Matrix::identity(3, 3) - w).lu().solve(&c).unwrap();
        assert!((fp.x0() - exact).amax() < 1e-12);
        assert!(verify_fixed_point(&m, &fp, 1e-10));
    }

    #[test]
    fn derived_2x2_context_point() {
        let m = swap_half();
        let c = v(&[0.1, 0.0]);
        let oracle = iterate_oracle(&m, &c);
        assert!((oracle - v(&ORACLE_X0)).amax() < 1e-15);

        let fp = find_fixed_point(&m, &c, &Vector::zeros(2), SolverOptions::default()).unwrap();
        assert!(fp.residual() <= 1e-12);
        assert!((fp.x0() - v(&ORACLE_X0)).amax() < 1e-10);
        assert_eq!(fp.r0(), &fp.x0().map(f64::tanh));
    }

    #[test]
    fn newton_converges_superlinearly() {
        let m = swap_half();
        let fp = find_fixed_point(&m, &v(&[0.1, 0.0]), &Vector::zeros(2), SolverOptions::default())
            .unwrap();
        let h = fp.residual_history();
        assert!(h.len() >= 3, "{h:?}");
        for pair in h.windows(2) {
            if pair[0] < 1e-3 {
                assert!(pair[1] <= pair[0].powf(1.5), "{h:?}");
            }
        }
    }

    #[test]
    fn verify_rejects_perturbed_point() {
        let m = swap_half();
        let c = v(&[0.1, 0.0]);
        let fp = find_fixed_point(&m, &c, &Vector::zeros(2), SolverOptions::default()).unwrap();
        assert!(verify_fixed_point(&m, &fp, 1e-12));
        let mut x = fp.x0().clone();
        x[0] += 0.1;
        let moved = FixedPoint::at(&m, x, c).unwrap();
        assert!(!verify_fixed_point(&m, &moved, 1e-6));

        let origin = FixedPoint::at(&m, Vector::zeros(2), Vector::zeros(2)).unwrap();
        assert!(verify_fixed_point(&m, &origin, 1e-12));
        let big = RnnModel::new(Matrix::zeros(3, 3), Nonlinearity::Tanh).unwrap();
        assert!(!verify_fixed_point(&big, &origin, 1.0));
    }

    #[test]
    fn finds_unstable_fixed_points() {
        // Strong self-excitation: the origin is unstable (slope 2) and the
        // two saturated branches are stable. Newton from 0 stays at 0; a guess
        // near 2 lands on the upper branch.
        let m = RnnModel::from_rows(&[vec![2.0]], Nonlinearity::Tanh).unwrap();
        let c = v(&[0.0]);
        let opts = SolverOptions::default();
        let origin = find_fixed_point(&m, &c, &v(&[0.0]), opts).unwrap();
        assert_eq!(origin.x0()[0], 0.0);
        let upper = find_fixed_point(&m, &c, &v(&[2.0]), opts).unwrap();
        assert!((upper.x0()[0] - 2.0 * upper.x0()[0].tanh()).abs() <= 1e-12);
        assert!(upper.x0()[0] > 1.9);

        // Small positive context near an unstable point still converges.
        let fp = find_fixed_point(&m, &v(&[0.01]), &v(&[-0.01]), opts).unwrap();
        assert!(verify_fixed_point(&m, &fp, 1e-12));
    }

    #[test]
    fn singular_newton_system() {
        // Identity nonlinearity with W = I makes W D - I exactly zero.
        let m = RnnModel::new(Matrix::identity(2, 2), Nonlinearity::Identity).unwrap();
        let err = find_fixed_point(&m, &v(&[1.0, 0.0]), &Vector::zeros(2), SolverOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. }), "{err:?}");
    }

    #[test]
    fn non_convergence_reports_best_residual() {
        let m = RnnModel::from_rows(&[vec![2.0]], Nonlinearity::Tanh).unwrap();
        let opts = SolverOptions { tol: 1e-12, max_iter: 1 };
        match find_fixed_point(&m, &v(&[0.3]), &v(&[5.0]), opts) {
            Err(Error::NonConvergence { best_residual, iterations }) => {
                assert_eq!(iterations, 1);
                assert!(best_residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn argument_checks() {
        let m = swap_half();
        let z = Vector::zeros(2);
        let bad_tol = SolverOptions { tol: 0.0, max_iter: 10 };
        assert!(matches!(find_fixed_point(&m, &z, &z, bad_tol), Err(Error::InvalidArgument(_))));
        let bad_iter = SolverOptions { tol: 1e-12, max_iter: 0 };
        assert!(matches!(find_fixed_point(&m, &z, &z, bad_iter), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            find_fixed_point(&m, &Vector::zeros(3), &z, SolverOptions::default()),
            Err(Error::Shape { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solver_output_passes_verification(
            n in 2usize..7,
            seed in proptest::collection::vec(-1.0f64..1.0, 49 + 7),
            scale in 0.2f64..0.9,
        ) {
            // Contractive W (inf-norm <= scale < 1) so a unique fixed point exists.
            let w = Matrix::from_fn(n, n, |i, j| seed[i * 7 + j] * scale / n as f64);
            let c = Vector::from_fn(n, |i, _| seed[49 + i]);
            let m = RnnModel::new(w, Nonlinearity::Tanh).unwrap();
            let opts = SolverOptions::default();
            let fp = find_fixed_point(&m, &c, &Vector::zeros(n), opts).unwrap();
            prop_assert!(fp.residual() <= opts.tol);
            prop_assert!(verify_fixed_point(&m, &fp, opts.tol));
        }

        #[test]
        fn odd_nonlinearities_fix_origin(entries in proptest::collection::vec(-3.0f64..3.0, 9)) {
            for nl in [Nonlinearity::Tanh, Nonlinearity::Identity] {
                let m = RnnModel::new(Matrix::from_row_slice(3, 3, &entries), nl).unwrap();
                let z = Vector::zeros(3);
                let fp = find_fixed_point(&m, &z, &z, SolverOptions::default()).unwrap();
                prop_assert_eq!(fp.x0(), &z);
            }
        }
    }
}
