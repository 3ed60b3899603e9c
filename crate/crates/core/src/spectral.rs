//! Eigenstructure of `W D` and `D W` and the maps between their eigenvectors.
//!
//! If `s` is a left eigenvector of `D W` then `D s` is a left eigenvector of
//! `W D`; if `rho` is a right eigenvector of `D W` then `D^{-1} rho` is a right
//! eigenvector of `W D`; both keep the eigenvalue, and the bilinear product
//! `s^T rho` is unchanged by the pair of maps. The checks here certify the
//! mapped vectors by their residuals, since independently computed
//! eigenvectors of the two matrices never agree in scale or phase.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::fixed_point::FixedPoint;
use crate::linearize::{gain_matrix, GainMatrix};
use crate::rnn::RnnModel;
use crate::{CVector, Matrix};

type CMatrix = nalgebra::DMatrix<Complex64>;

/// Eigenvalues closer than this to another eigenvalue of the same matrix are
/// too ill-conditioned for per-vector checks.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-6;

const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
const SCHUR_MAX_ITER: usize = 10_000;
const INVERSE_ITERATIONS: usize = 6;

/// One eigenvalue with a right eigenvector `rho` (`A rho = lambda rho`) and a
/// left eigenvector `s` (`s^T A = lambda s^T`).
///
/// Both vectors have unit 2-norm and a real, positive largest component.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub lambda: Complex64,
    pub right: CVector,
    pub left: CVector,
}

impl EigenTriple {
    /// `|A rho - lambda rho|_2`.
    pub fn right_residual(&self, a: &Matrix) -> f64 {
        right_residual(a, self.lambda, &self.right)
    }

    /// `|s^T A - lambda s^T|_2`.
    pub fn left_residual(&self, a: &Matrix) -> f64 {
        left_residual(a, self.lambda, &self.left)
    }
}

fn complexify(a: &Matrix) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

pub(crate) fn right_residual(a: &Matrix, lambda: Complex64, v: &CVector) -> f64 {
    (complexify(a) * v - v * lambda).norm()
}

pub(crate) fn left_residual(a: &Matrix, lambda: Complex64, s: &CVector) -> f64 {
    (complexify(&a.transpose()) * s - s * lambda).norm()
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Sort key: real part descending, then imaginary part descending.
fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Scales `v` to unit 2-norm with its largest-magnitude entry real and positive.
fn normalize_phase(v: &mut CVector) {
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
    let pivot = v[idx];
    let scale = v.norm() * pivot / pivot.norm();
    *v /= scale;
    v[idx] = Complex64::new(v[idx].re, 0.0);
}

/// Right eigenvector of `a` for an eigenvalue estimate `lambda` by shifted
/// inverse iteration. Exact singularity of `a - lambda I` (repeated or exact
/// eigenvalues) is sidestepped by nudging the shift.
fn inverse_iteration(a: &CMatrix, lambda: Complex64, scale: f64) -> Option<CVector> {
    let n = a.nrows();
    let start = CVector::from_fn(n, |i, _| {
        let t = (i as f64 + 1.0) * 0.618_033_988_749_894_9;
        Complex64::new(1.0 + (t - t.floor()), 0.0)
    });
    let unit = scale.max(f64::MIN_POSITIVE);
    let identity = CMatrix::identity(n, n);

    for nudge in [0.0, 1e-14, 1e-12, 1e-10] {
        let shift = lambda + Complex64::new(nudge * unit, 0.0);
        let lu = (a - &identity * shift).lu();
        let mut v = start.clone();
        let mut ok = true;
        for _ in 0..INVERSE_ITERATIONS {
            match lu.solve(&v) {
                Some(next) if next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    let norm = next.norm();
                    if !norm.is_finite() || norm <= 0.0 {
                        ok = false;
                        break;
                    }
                    v = next / Complex64::new(norm, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
            if (a * &v - &v * lambda).norm() <= 1e-15 * unit {
                break;
            }
        }
        if ok {
            return Some(v);
        }
    }
    None
}

/// Eigenvalues with right and left eigenvectors, ordered by real part then
/// imaginary part, both descending. Repeated eigenvalues appear once per
/// multiplicity.
pub fn eigendecompose(a: &Matrix) -> Result<Vec<EigenTriple>> {
    let n = a.nrows();
    check_len("square matrix", n, a.ncols())?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let norm = spectral_norm(a);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::Eigen(format!(
            "Schur iteration did not converge (n = {n}, |A|_2 = {norm:e})"
        ))
    })?;
    let mut lambdas: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    lambdas.sort_by(spectral_order);

    let ac = complexify(a);
    let atc = complexify(&a.transpose());
    let limit = EIGEN_RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE);
    lambdas
        .into_iter()
        .map(|lambda| {
            let failure = |side: &str, residual: f64| {
                Error::Eigen(format!(
                    "{side} eigenvector for {lambda} not certified: residual {residual:e} \
                     > {limit:e} (n = {n}, |A|_2 = {norm:e})"
                ))
            };
            let mut right =
                inverse_iteration(&ac, lambda, norm).ok_or_else(|| failure("right", f64::NAN))?;
            let mut left =
                inverse_iteration(&atc, lambda, norm).ok_or_else(|| failure("left", f64::NAN))?;
            normalize_phase(&mut right);
            normalize_phase(&mut left);
            let triple = EigenTriple { lambda, right, left };
            let (rr, lr) = (triple.right_residual(a), triple.left_residual(a));
            if rr > limit {
                return Err(failure("right", rr));
            }
            if lr > limit {
                return Err(failure("left", lr));
            }
            Ok(triple)
        })
        .collect()
}

/// `s_x = D s_r` (row form `s_r^T D`): left eigenvector of `D W` to left
/// eigenvector of `W D`.
pub fn map_left_eigvec(s_r: &CVector, d: &GainMatrix) -> Result<CVector> {
    check_len("left eigenvector", d.dim(), s_r.len())?;
    Ok(CVector::from_fn(s_r.len(), |j, _| s_r[j] * d.diag()[j]))
}

/// `rho_x = D^{-1} rho_r`: right eigenvector of `D W` to right eigenvector of
/// `W D`. Requires every gain to be invertible.
pub fn map_right_eigvec(rho_r: &CVector, d: &GainMatrix) -> Result<CVector> {
    check_len("right eigenvector", d.dim(), rho_r.len())?;
    d.check_invertible()?;
    Ok(CVector::from_fn(rho_r.len(), |j, _| rho_r[j] / d.diag()[j]))
}

/// Distance from each eigenvalue to its nearest neighbour in the same list.
fn neighbour_gaps(lambdas: &[Complex64]) -> Vec<f64> {
    lambdas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            lambdas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| (a - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Greedy nearest-eigenvalue bijection between two spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPairing {
    /// `(index into eig(W D), index into eig(D W))`, in the order of `eig(W D)`.
    pub pairs: Vec<(usize, usize)>,
    pub gaps: Vec<f64>,
    pub max_eigenvalue_gap: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Pairs `xs[i]` (taken in order) with the nearest not-yet-used `rs[j]`.
/// Both lists are expected in [`eigendecompose`] order, which keeps conjugate
/// partners matched to conjugate partners.
pub fn pair_spectra(xs: &[Complex64], rs: &[Complex64], tol: f64) -> Result<SpectrumPairing> {
    check_len("spectrum", xs.len(), rs.len())?;
    let mut used = vec![false; rs.len()];
    let mut pairs = Vec::with_capacity(xs.len());
    let mut gaps = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        let (j, gap) = rs
            .iter()
            .enumerate()
            .filter(|&(j, _)| !used[j])
            .map(|(j, r)| (j, (x - r).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cand| {
                if cand.1 < best.1 {
                    cand
                } else {
                    best
                }
            });
        used[j] = true;
        pairs.push((i, j));
        gaps.push(gap);
    }
    let max_eigenvalue_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(SpectrumPairing {
        pairs,
        gaps,
        max_eigenvalue_gap,
        tol,
        passed: max_eigenvalue_gap <= tol,
    })
}

/// Both dynamics matrices at one fixed point with their eigendecompositions.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub gains: GainMatrix,
    pub wd: Matrix,
    pub dw: Matrix,
    /// `|W D|_2`, the scale for all residual tolerances.
    pub norm_wd: f64,
    pub eig_wd: Vec<EigenTriple>,
    pub eig_dw: Vec<EigenTriple>,
}

impl SpectralAnalysis {
    pub fn new(model: &RnnModel, fp: &FixedPoint) -> Result<Self> {
        Self::from_gains(model.weights(), gain_matrix(model, fp)?)
    }

    pub fn from_gains(w: &Matrix, gains: GainMatrix) -> Result<Self> {
        check_len("gain matrix", w.nrows(), gains.dim())?;
        let wd = gains.scale_columns(w);
        let dw = gains.scale_rows(w);
        Ok(Self {
            norm_wd: spectral_norm(&wd),
            eig_wd: eigendecompose(&wd)?,
            eig_dw: eigendecompose(&dw)?,
            gains,
            wd,
            dw,
        })
    }

    pub fn lambdas_wd(&self) -> Vec<Complex64> {
        self.eig_wd.iter().map(|t| t.lambda).collect()
    }

    pub fn lambdas_dw(&self) -> Vec<Complex64> {
        self.eig_dw.iter().map(|t| t.lambda).collect()
    }

    pub fn pairing(&self, tol: f64) -> Result<SpectrumPairing> {
        pair_spectra(&self.lambdas_wd(), &self.lambdas_dw(), tol)
    }
}

/// Matches `eig(W D)` against `eig(D W)`; passes when every paired gap is at
/// most `tol` (absolute).
pub fn verify_spectrum_identity(
    model: &RnnModel,
    fp: &FixedPoint,
    tol: f64,
) -> Result<SpectrumPairing> {
    SpectralAnalysis::new(model, fp)?.pairing(tol)
}

/// Residuals of mapped eigenvectors of `D W` against `W D`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedVectorCheck {
    /// Index into `eig(D W)`.
    pub index: usize,
    pub lambda: Complex64,
    /// `|s_x^T (W D) - lambda s_x^T| / (|s_x| |W D|)`, `None` when skipped.
    pub left_residual: Option<f64>,
    /// `|(W D) rho_x - lambda rho_x| / (|rho_x| |W D|)`, `None` when skipped.
    pub right_residual: Option<f64>,
    pub skipped_near_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingReport {
    pub rows: Vec<MappedVectorCheck>,
    pub max_left_residual: f64,
    pub max_right_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Maps every simple eigenvector of `D W` over to `W D` and measures the
/// relative residual of the mapped vector there. `tol` bounds the residual
/// relative to `|W D|_2`; near-degenerate eigenvalues are skipped.
pub fn verify_eigenvector_maps(analysis: &SpectralAnalysis, tol: f64) -> Result<MappingReport> {
    let gaps = neighbour_gaps(&analysis.lambdas_dw());
    let scale = analysis.norm_wd.max(f64::MIN_POSITIVE);
    let mut rows = Vec::with_capacity(gaps.len());
    for (index, (triple, gap)) in analysis.eig_dw.iter().zip(gaps).enumerate() {
        let skipped = gap < NEAR_DEGENERATE_GAP;
        let (left_residual, right_residual) = if skipped {
            (None, None)
        } else {
            let s_x = map_left_eigvec(&triple.left, &analysis.gains)?;
            let rho_x = map_right_eigvec(&triple.right, &analysis.gains)?;
            (
                Some(left_residual(&analysis.wd, triple.lambda, &s_x) / (s_x.norm() * scale)),
                Some(right_residual(&analysis.wd, triple.lambda, &rho_x) / (rho_x.norm() * scale)),
            )
        };
        rows.push(MappedVectorCheck {
            index,
            lambda: triple.lambda,
            left_residual,
            right_residual,
            skipped_near_degenerate: skipped,
        });
    }
    let max_left_residual = rows.iter().filter_map(|r| r.left_residual).fold(0.0, f64::max);
    let max_right_residual = rows.iter().filter_map(|r| r.right_residual).fold(0.0, f64::max);
    Ok(MappingReport {
        passed: max_left_residual <= tol && max_right_residual <= tol,
        rows,
        max_left_residual,
        max_right_residual,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotCheck {
    /// `(index into eig(W D), index into eig(D W))`.
    pub pair: (usize, usize),
    pub lambda_x: Complex64,
    pub lambda_r: Complex64,
    /// `s_r^T rho_r`.
    pub original: Complex64,
    /// `(s_r^T D)(D^{-1} rho_r)`.
    pub mapped: Complex64,
    pub difference: f64,
    pub skipped_near_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotPreservationReport {
    pub rows: Vec<DotCheck>,
    /// Largest `|mapped - original|` over checked rows.
    pub max_difference: f64,
    pub tol: f64,
    pub passed: bool,
}

/// For each paired, simple eigenvalue compares `s_r^T rho_r` with the product
/// of the mapped vectors. A row passes when the difference is at most
/// `tol * |s_r^T rho_r| + 1e-14`.
pub fn verify_dot_preservation(
    triples_x: &[EigenTriple],
    triples_r: &[EigenTriple],
    pairing: &SpectrumPairing,
    d: &GainMatrix,
    tol: f64,
) -> Result<DotPreservationReport> {
    let lx: Vec<Complex64> = triples_x.iter().map(|t| t.lambda).collect();
    let lr: Vec<Complex64> = triples_r.iter().map(|t| t.lambda).collect();
    let (gx, gr) = (neighbour_gaps(&lx), neighbour_gaps(&lr));

    let mut rows = Vec::with_capacity(pairing.pairs.len());
    let mut passed = true;
    let mut max_difference: f64 = 0.0;
    for &(ix, ir) in &pairing.pairs {
        let (tx, tr) = match (triples_x.get(ix), triples_r.get(ir)) {
            (Some(tx), Some(tr)) => (tx, tr),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "pairing index ({ix}, {ir}) out of range"
                )))
            }
        };
        let skipped = gx[ix] < NEAR_DEGENERATE_GAP || gr[ir] < NEAR_DEGENERATE_GAP;
        let original = tr.left.transpose() * &tr.right;
        let mapped =
            map_left_eigvec(&tr.left, d)?.transpose() * map_right_eigvec(&tr.right, d)?;
        let (original, mapped) = (original[(0, 0)], mapped[(0, 0)]);
        let difference = (mapped - original).norm();
        if !skipped {
            max_difference = max_difference.max(difference);
            passed &= difference <= tol * original.norm() + 1e-14;
        }
        rows.push(DotCheck {
            pair: (ix, ir),
            lambda_x: tx.lambda,
            lambda_r: tr.lambda,
            original,
            mapped,
            difference,
            skipped_near_degenerate: skipped,
        });
    }
    Ok(DotPreservationReport {
        rows,
        max_difference,
        tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_point::{find_fixed_point, SolverOptions};
    use crate::{Nonlinearity, Vector};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m2(a: f64, b: f64, cc: f64, d: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a, b, cc, d])
    }

    fn cv(xs: &[Complex64]) -> CVector {
        CVector::from_column_slice(xs)
    }

    fn gains(d: &[f64]) -> GainMatrix {
        GainMatrix::new(Vector::from_column_slice(d)).unwrap()
    }

    // Seeded LCG so the "random" matrices are reproducible without a dependency.
    fn lcg_matrix(n: usize, seed: u64, scale: f64) -> Matrix {
        let mut state = seed;
        Matrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            scale * (2.0 * u - 1.0)
        })
    }

    #[test]
    fn identity_spectrum() {
        let eig = eigendecompose(&Matrix::identity(4, 4)).unwrap();
        assert_eq!(eig.len(), 4);
        for t in &eig {
            assert_eq!(t.lambda, c(1.0, 0.0));
            assert!(t.right_residual(&Matrix::identity(4, 4)) == 0.0);
        }
    }

    #[test]
    fn diagonal_spectrum_has_axis_vectors() {
        let a = m2(0.3, 0.0, 0.0, -0.2);
        let eig = eigendecompose(&a).unwrap();
        assert!((eig[0].lambda - c(0.3, 0.0)).norm() < 1e-15);
        assert!((eig[1].lambda - c(-0.2, 0.0)).norm() < 1e-15);
        assert!((&eig[0].right - cv(&[c(1.0, 0.0), c(0.0, 0.0)])).norm() < 1e-12);
        assert!((&eig[1].right - cv(&[c(0.0, 0.0), c(1.0, 0.0)])).norm() < 1e-12);
    }

    #[test]
    fn hand_solved_2x2_spectrum() {
        // lambda^2 = 0.5
        let a = m2(0.0, 0.5, 1.0, 0.0);
        let eig = eigendecompose(&a).unwrap();
        let root = 0.5f64.sqrt();
        assert!((eig[0].lambda - c(root, 0.0)).norm() < 1e-14);
        assert!((eig[1].lambda - c(-root, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn complex_pairs_and_normalization() {
        // Rotation-like block plus a real mode.
        let a = Matrix::from_row_slice(3, 3, &[0.5, -0.8, 0.1, 0.8, 0.5, 0.0, 0.0, 0.2, -0.3]);
        let eig = eigendecompose(&a).unwrap();
        let norm = spectral_norm(&a);
        assert_eq!(eig.len(), 3);
        assert!((eig[0].lambda - eig[1].lambda.conj()).norm() < 1e-13);
        assert!(eig[0].lambda.im > 0.0);
        for t in &eig {
            assert!(t.right_residual(&a) <= 1e-10 * norm);
            assert!(t.left_residual(&a) <= 1e-10 * norm);
            assert!((t.right.norm() - 1.0).abs() < 1e-14);
            let big = t.right.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let lead = t.right.iter().find(|z| z.norm() == big).unwrap();
            assert!(lead.im == 0.0 && lead.re > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Matrix::identity(2, 2);
        a[(0, 1)] = f64::INFINITY;
        assert!(matches!(eigendecompose(&a), Err(Error::Eigen(_))));
    }

    #[test]
    fn left_map_hand_example() {
        // DW = [[0,1],[0.5,0]], WD = [[0,0.5],[1,0]], lambda = sqrt(0.5).
        let lam = 0.5f64.sqrt();
        let w = m2(0.0, 1.0, 1.0, 0.0);
        let d = gains(&[1.0, 0.5]);
        let dw = d.scale_rows(&w);
        let wd = d.scale_columns(&w);
        let s_r = cv(&[c(0.5, 0.0), c(lam, 0.0)]);
        assert!(left_residual(&dw, c(lam, 0.0), &s_r) < 1e-15);
        let s_x = map_left_eigvec(&s_r, &d).unwrap();
        assert!((&s_x - cv(&[c(0.5, 0.0), c(0.5 * lam, 0.0)])).norm() < 1e-16);
        assert!(left_residual(&wd, c(lam, 0.0), &s_x) < 1e-15);
    }

    #[test]
    fn right_map_hand_example() {
        let lam = 0.5f64.sqrt();
        let w = m2(0.0, 1.0, 1.0, 0.0);
        let d = gains(&[1.0, 0.5]);
        let rho_r = cv(&[c(1.0, 0.0), c(lam, 0.0)]);
        assert!(right_residual(&d.scale_rows(&w), c(lam, 0.0), &rho_r) < 1e-15);
        let rho_x = map_right_eigvec(&rho_r, &d).unwrap();
        assert!((&rho_x - cv(&[c(1.0, 0.0), c(2.0 * lam, 0.0)])).norm() < 1e-15);
        // W D (1, 2 lambda) = (lambda, 1) = lambda (1, 2 lambda)
        assert!(right_residual(&d.scale_columns(&w), c(lam, 0.0), &rho_x) < 1e-15);

        // s_r^T rho_r = 0.5 + lambda^2 = 1, and the mapped product matches.
        let s_r = cv(&[c(0.5, 0.0), c(lam, 0.0)]);
        let orig = (s_r.transpose() * &rho_r)[(0, 0)];
        let mapped = (map_left_eigvec(&s_r, &d).unwrap().transpose() * rho_x)[(0, 0)];
        assert!((orig - c(1.0, 0.0)).norm() < 1e-15);
        assert!((mapped - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn maps_with_identity_and_diagonal() {
        let s = cv(&[c(0.3, 0.1), c(-0.2, 0.4)]);
        let id = GainMatrix::identity(2);
        assert_eq!(map_left_eigvec(&s, &id).unwrap(), s);
        assert_eq!(map_right_eigvec(&s, &id).unwrap(), s);

        // Diagonal W: e_j stays an eigenvector after scaling by D_jj.
        let w = m2(0.9, 0.0, 0.0, -0.4);
        let d = gains(&[0.5, 0.25]);
        let e1 = cv(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let lam = c(-0.4 * 0.25, 0.0);
        assert!(left_residual(&d.scale_rows(&w), lam, &e1) == 0.0);
        let mapped = map_left_eigvec(&e1, &d).unwrap();
        assert_eq!(mapped, cv(&[c(0.0, 0.0), c(0.25, 0.0)]));
        assert!(left_residual(&d.scale_columns(&w), lam, &mapped) == 0.0);
    }

    #[test]
    fn right_map_needs_invertible_gain() {
        let rho = cv(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            map_right_eigvec(&rho, &gains(&[1.0, 0.0])),
            Err(Error::NearZeroGain { index: 1, .. })
        ));
    }

    #[test]
    fn spectrum_identity_examples() {
        let w = m2(0.0, 0.5, 0.5, 0.0);
        let m = RnnModel::new(w.clone(), Nonlinearity::Tanh).unwrap();
        let origin = FixedPoint::at(&m, Vector::zeros(2), Vector::zeros(2)).unwrap();
        let pairing = verify_spectrum_identity(&m, &origin, 0.0).unwrap();
        assert_eq!(pairing.max_eigenvalue_gap, 0.0);
        assert!(pairing.passed);

        let a = SpectralAnalysis::from_gains(&m2(0.0, 1.0, 1.0, 0.0), gains(&[1.0, 0.5])).unwrap();
        let root = 0.5f64.sqrt();
        let p = a.pairing(1e-12).unwrap();
        assert!(p.passed, "{p:?}");
        assert!((a.eig_wd[0].lambda - c(root, 0.0)).norm() < 1e-14);
        assert!((a.eig_dw[1].lambda - c(-root, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn random_10x10_spectrum_identity() {
        let w = lcg_matrix(10, 7, 1.5 / 10f64.sqrt() * 3f64.sqrt());
        let m = RnnModel::new(w, Nonlinearity::Tanh).unwrap();
        let cvec = Vector::from_fn(10, |i, _| 0.4 * ((i as f64) * 1.3).sin());
        let fp = find_fixed_point(&m, &cvec, &Vector::zeros(10), SolverOptions::default()).unwrap();
        let p = verify_spectrum_identity(&m, &fp, 1e-10).unwrap();
        assert!(p.passed, "gap {}", p.max_eigenvalue_gap);
        // Bijection.
        let mut seen: Vec<usize> = p.pairs.iter().map(|&(_, j)| j).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn random_8x8_dot_preservation() {
        let w = lcg_matrix(8, 11, 1.0);
        let d = GainMatrix::new(Vector::from_fn(8, |i, _| 0.2 + 0.1 * i as f64)).unwrap();
        let a = SpectralAnalysis::from_gains(&w, d.clone()).unwrap();
        let p = a.pairing(1e-10 * a.norm_wd).unwrap();
        let rep = verify_dot_preservation(&a.eig_wd, &a.eig_dw, &p, &d, 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_difference <= 1e-10);
        assert!(rep.rows.iter().any(|r| !r.skipped_near_degenerate));

        let maps = verify_eigenvector_maps(&a, 1e-8).unwrap();
        assert!(maps.passed, "{maps:?}");
    }

    #[test]
    fn dot_preservation_with_identity_gain() {
        let w = lcg_matrix(5, 3, 1.0);
        let d = GainMatrix::identity(5);
        let a = SpectralAnalysis::from_gains(&w, d.clone()).unwrap();
        let p = a.pairing(0.0).unwrap();
        let rep = verify_dot_preservation(&a.eig_wd, &a.eig_dw, &p, &d, 0.0).unwrap();
        assert_eq!(rep.max_difference, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn degenerate_eigenvalues_are_skipped() {
        let w = Matrix::identity(3, 3) * 0.5;
        let a = SpectralAnalysis::from_gains(&w, gains(&[1.0, 1.0, 1.0])).unwrap();
        let maps = verify_eigenvector_maps(&a, 1e-8).unwrap();
        assert!(maps.rows.iter().all(|r| r.skipped_near_degenerate));
        let p = a.pairing(1e-12).unwrap();
        let dots = verify_dot_preservation(&a.eig_wd, &a.eig_dw, &p, &a.gains, 1e-12).unwrap();
        assert!(dots.rows.iter().all(|r| r.skipped_near_degenerate));
        assert!(dots.passed);
    }

    #[test]
    fn rank_one_eigenvalue() {
        // W = a b^T: the only nonzero eigenvalue of W D is b^T D a, of W is b^T a.
        let av = Vector::from_column_slice(&[0.5, -1.0, 0.25, 2.0]);
        let bv = Vector::from_column_slice(&[1.0, 0.3, -0.7, 0.4]);
        let w = &av * bv.transpose();
        let d = gains(&[0.9, 0.2, 0.6, 0.35]);
        let wd = d.scale_columns(&w);
        let expect_wd = bv.dot(&d.apply(&av));
        let expect_w = bv.dot(&av);

        let top = |m: &Matrix| {
            eigendecompose(m)
                .unwrap()
                .into_iter()
                .map(|t| t.lambda)
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap()
        };
        assert!((top(&wd) - c(expect_wd, 0.0)).norm() < 1e-12);
        assert!((top(&w) - c(expect_w, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pairing_is_greedy_in_order() {
        let xs = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        let rs = [c(0.0, -1.0 + 1e-9), c(1.0 + 2e-9, 0.0), c(0.0, 1.0)];
        let p = pair_spectra(&xs, &rs, 1e-8).unwrap();
        assert_eq!(p.pairs, vec![(0, 1), (1, 2), (2, 0)]);
        assert!((p.max_eigenvalue_gap - 2e-9).abs() < 1e-15);
        assert!(pair_spectra(&xs, &rs[..2], 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eigen_triples_certified(n in 2usize..12, seed in any::<u64>()) {
            let a = lcg_matrix(n, seed, 1.0);
            let eig = eigendecompose(&a).unwrap();
            let norm = spectral_norm(&a);
            prop_assert_eq!(eig.len(), n);
            for t in &eig {
                prop_assert!(t.right_residual(&a) <= 1e-10 * norm);
                prop_assert!(t.left_residual(&a) <= 1e-10 * norm);
            }
            // Conjugate closure of the spectrum.
            for t in &eig {
                let conj = t.lambda.conj();
                prop_assert!(eig.iter().any(|u| (u.lambda - conj).norm() <= 1e-12 * (1.0 + norm)));
            }
        }

        #[test]
        fn mapped_vectors_are_eigenvectors(
            n in 2usize..10,
            seed in any::<u64>(),
            d in proptest::collection::vec(0.05f64..1.0, 10),
        ) {
            let w = lcg_matrix(n, seed, 1.5);
            let d = GainMatrix::new(Vector::from_fn(n, |i, _| d[i])).unwrap();
            let a = SpectralAnalysis::from_gains(&w, d.clone()).unwrap();
            let p = a.pairing(1e-10 * a.norm_wd.max(1.0)).unwrap();
            prop_assert!(p.passed, "gap {}", p.max_eigenvalue_gap);
            let maps = verify_eigenvector_maps(&a, 1e-8).unwrap();
            prop_assert!(maps.passed, "{} {}", maps.max_left_residual, maps.max_right_residual);
            let dots = verify_dot_preservation(&a.eig_wd, &a.eig_dw, &p, &d, 1e-12).unwrap();
            prop_assert!(dots.passed);
        }
    }
}
