//! One function per subcommand. Each returns the rendered report and the exit
//! code it implies; only loading and numerical errors are `Err`.

use rnn_linz::{
    check_equivalence, context_sweep, find_fixed_point, gain_matrix, linearization_error,
    linearize_activation, linearize_activity, simulate, verify_dot_preservation,
    verify_eigenvector_maps, verify_fixed_point, Context, FixedPoint, SpectralAnalysis,
};
use serde::Serialize;

use crate::config::{Experiment, ModelFile};
use crate::report::{complex, fmt_f64, rows, to_json, vec, Csv, SCHEMA_VERSION};
use crate::{CliError, Format, Outcome};

/// Spectrum gaps are judged relative to `|W D|_2`.
pub const SPECTRUM_REL_TOL: f64 = 1e-10;
pub const MAPPING_TOL: f64 = 1e-8;
pub const DOT_REL_TOL: f64 = 1e-12;
pub const TAYLOR_BAND: [f64; 2] = [3.5, 4.5];
/// Below this the nonlinear and linear runs agree to rounding, so the model
/// is linear at this scale and the Taylor ratio carries no information.
pub const TAYLOR_LINEAR_FLOOR: f64 = 1e-14;

#[derive(Serialize)]
struct ContextOut {
    label: String,
    c: Vec<f64>,
}

impl From<&Context> for ContextOut {
    fn from(ctx: &Context) -> Self {
        Self {
            label: ctx.label.clone(),
            c: vec(&ctx.c),
        }
    }
}

#[derive(Serialize)]
struct FixedPointOut {
    x0: Vec<f64>,
    r0: Vec<f64>,
    residual: f64,
    iterations: usize,
    residual_history: Vec<f64>,
}

impl From<&FixedPoint> for FixedPointOut {
    fn from(fp: &FixedPoint) -> Self {
        Self {
            x0: vec(fp.x0()),
            r0: vec(fp.r0()),
            residual: fp.residual(),
            iterations: fp.iterations(),
            residual_history: fp.residual_history().to_vec(),
        }
    }
}

fn solve(exp: &Experiment, ctx: &Context) -> Result<FixedPoint, CliError> {
    Ok(find_fixed_point(&exp.model, &ctx.c, &exp.x_guess, exp.solver_options())?)
}

fn code(passed: bool) -> i32 {
    if passed {
        0
    } else {
        4
    }
}

pub fn simulate_cmd(exp: &Experiment, ctx: &Context, format: Format) -> Result<Outcome, CliError> {
    let (xs, rs) = simulate(&exp.model, &exp.x_init, &exp.inputs, &ctx.c, exp.horizon)?;
    let output = match format {
        Format::Csv => {
            let n = exp.model.n();
            let mut header = vec!["k".to_string()];
            header.extend((1..=n).map(|i| format!("x_{i}")));
            header.extend((1..=n).map(|i| format!("r_{i}")));
            let mut csv = Csv::new(&header);
            for (k, (x, r)) in xs.states.iter().zip(&rs.states).enumerate() {
                let mut fields = vec![k.to_string()];
                fields.extend(x.iter().chain(r.iter()).map(|&v| fmt_f64(v)));
                csv.row(fields.iter().map(String::as_str));
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                schema_version: &'static str,
                command: &'static str,
                context: ContextOut,
                horizon: usize,
                activation: Vec<Vec<f64>>,
                activity: Vec<Vec<f64>>,
            }
            to_json(&Report {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                context: ctx.into(),
                horizon: exp.horizon,
                activation: xs.states.iter().map(vec).collect(),
                activity: rs.states.iter().map(vec).collect(),
            })
        }
    };
    Ok(Outcome { output, exit_code: 0 })
}

pub fn linearize_cmd(exp: &Experiment, ctx: &Context, format: Format) -> Result<Outcome, CliError> {
    let fp = solve(exp, ctx)?;
    let d = gain_matrix(&exp.model, &fp)?;
    let x_sys = linearize_activation(&exp.model, &fp)?;
    let r_sys = linearize_activity(&exp.model, &fp)?;
    let verified = verify_fixed_point(&exp.model, &fp, exp.tol);

    let output = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["matrix".into(), "i".into(), "j".into(), "value".into()]);
            let mut emit = |name: &str, m: &rnn_linz::Matrix| {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let (si, sj, v) = (i.to_string(), j.to_string(), fmt_f64(m[(i, j)]));
                        csv.row([name, &si, &sj, &v]);
                    }
                }
            };
            emit("D", &d.to_matrix());
            emit("WD", &x_sys.a);
            emit("DW", &r_sys.a);
            emit("B_activation", &x_sys.b);
            emit("B_activity", &r_sys.b);
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                schema_version: &'static str,
                command: &'static str,
                context: ContextOut,
                fixed_point: FixedPointOut,
                fixed_point_verified: bool,
                gains: Vec<f64>,
                wd: Vec<Vec<f64>>,
                dw: Vec<Vec<f64>>,
                b_activation: Vec<Vec<f64>>,
                b_activity: Vec<Vec<f64>>,
            }
            to_json(&Report {
                schema_version: SCHEMA_VERSION,
                command: "linearize",
                context: ctx.into(),
                fixed_point: (&fp).into(),
                fixed_point_verified: verified,
                gains: vec(d.diag()),
                wd: rows(&x_sys.a),
                dw: rows(&r_sys.a),
                b_activation: rows(&x_sys.b),
                b_activity: rows(&r_sys.b),
            })
        }
    };
    Ok(Outcome {
        output,
        exit_code: code(verified),
    })
}

pub fn eigen_cmd(exp: &Experiment, ctx: &Context, format: Format) -> Result<Outcome, CliError> {
    let fp = solve(exp, ctx)?;
    let an = SpectralAnalysis::new(&exp.model, &fp)?;
    let pairing = an.pairing(SPECTRUM_REL_TOL * an.norm_wd)?;
    let mapping = verify_eigenvector_maps(&an, MAPPING_TOL)?;
    let dots = verify_dot_preservation(&an.eig_wd, &an.eig_dw, &pairing, &an.gains, DOT_REL_TOL)?;
    let passed = pairing.passed && mapping.passed && dots.passed;

    let output = match format {
        Format::Csv => {
            let header = ["wd_index", "dw_index", "wd_re", "wd_im", "dw_re", "dw_im", "gap"];
            let mut csv = Csv::new(&header.map(String::from));
            for (&(i, j), &gap) in pairing.pairs.iter().zip(&pairing.gaps) {
                let (a, b) = (an.eig_wd[i].lambda, an.eig_dw[j].lambda);
                let fields = [
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(a.re),
                    fmt_f64(a.im),
                    fmt_f64(b.re),
                    fmt_f64(b.im),
                    fmt_f64(gap),
                ];
                csv.row(fields.iter().map(String::as_str));
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Pair {
                wd_index: usize,
                dw_index: usize,
                lambda_wd: [f64; 2],
                lambda_dw: [f64; 2],
                gap: f64,
            }
            #[derive(Serialize)]
            struct Mapped {
                dw_index: usize,
                lambda: [f64; 2],
                left_residual: Option<f64>,
                right_residual: Option<f64>,
                skipped_near_degenerate: bool,
            }
            #[derive(Serialize)]
            struct Dot {
                wd_index: usize,
                dw_index: usize,
                original: [f64; 2],
                mapped: [f64; 2],
                difference: f64,
                skipped_near_degenerate: bool,
            }
            #[derive(Serialize)]
            struct Report {
                schema_version: &'static str,
                command: &'static str,
                context: ContextOut,
                fixed_point_residual: f64,
                norm_wd: f64,
                spectrum_tol: f64,
                max_eigenvalue_gap: f64,
                spectrum_passed: bool,
                pairs: Vec<Pair>,
                mapping_tol: f64,
                max_left_residual: f64,
                max_right_residual: f64,
                mapping_passed: bool,
                mapped_vectors: Vec<Mapped>,
                dot_rel_tol: f64,
                max_dot_difference: f64,
                dot_passed: bool,
                dot_products: Vec<Dot>,
                passed: bool,
            }
            to_json(&Report {
                schema_version: SCHEMA_VERSION,
                command: "eigen",
                context: ctx.into(),
                fixed_point_residual: fp.residual(),
                norm_wd: an.norm_wd,
                spectrum_tol: pairing.tol,
                max_eigenvalue_gap: pairing.max_eigenvalue_gap,
                spectrum_passed: pairing.passed,
                pairs: pairing
                    .pairs
                    .iter()
                    .zip(&pairing.gaps)
                    .map(|(&(i, j), &gap)| Pair {
                        wd_index: i,
                        dw_index: j,
                        lambda_wd: complex(an.eig_wd[i].lambda),
                        lambda_dw: complex(an.eig_dw[j].lambda),
                        gap,
                    })
                    .collect(),
                mapping_tol: mapping.tol,
                max_left_residual: mapping.max_left_residual,
                max_right_residual: mapping.max_right_residual,
                mapping_passed: mapping.passed,
                mapped_vectors: mapping
                    .rows
                    .iter()
                    .map(|r| Mapped {
                        dw_index: r.index,
                        lambda: complex(r.lambda),
                        left_residual: r.left_residual,
                        right_residual: r.right_residual,
                        skipped_near_degenerate: r.skipped_near_degenerate,
                    })
                    .collect(),
                dot_rel_tol: dots.tol,
                max_dot_difference: dots.max_difference,
                dot_passed: dots.passed,
                dot_products: dots
                    .rows
                    .iter()
                    .map(|r| Dot {
                        wd_index: r.pair.0,
                        dw_index: r.pair.1,
                        original: complex(r.original),
                        mapped: complex(r.mapped),
                        difference: r.difference,
                        skipped_near_degenerate: r.skipped_near_degenerate,
                    })
                    .collect(),
                passed,
            })
        }
    };
    Ok(Outcome {
        output,
        exit_code: code(passed),
    })
}

/// Taylor-order probe: how the linearization error shrinks when the
/// perturbation is halved.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    pub epsilon: f64,
    pub horizon: usize,
    pub error: f64,
    pub error_half: f64,
    pub ratio: Option<f64>,
    pub band: [f64; 2],
    /// The model is linear at this scale (`error` below rounding level).
    pub linear: bool,
    pub passed: bool,
}

pub fn taylor_report(exp: &Experiment, fp: &FixedPoint) -> Result<TaylorReport, CliError> {
    let e = linearization_error(&exp.model, fp, &exp.direction, exp.epsilon, exp.taylor_horizon)?;
    let h = linearization_error(&exp.model, fp, &exp.direction, exp.epsilon / 2.0, exp.taylor_horizon)?;
    let linear = e <= TAYLOR_LINEAR_FLOOR;
    let ratio = (!linear && h > 0.0).then(|| e / h);
    let in_band = ratio.is_some_and(|r| (TAYLOR_BAND[0]..=TAYLOR_BAND[1]).contains(&r));
    Ok(TaylorReport {
        epsilon: exp.epsilon,
        horizon: exp.taylor_horizon,
        error: e,
        error_half: h,
        ratio,
        band: TAYLOR_BAND,
        linear,
        passed: linear || in_band,
    })
}

pub fn equiv_cmd(exp: &Experiment, ctx: &Context, format: Format) -> Result<Outcome, CliError> {
    let fp = solve(exp, ctx)?;
    let eq = check_equivalence(&exp.model, &fp, &exp.dev_init, &exp.inputs, exp.horizon, exp.tol)?;
    let taylor = taylor_report(exp, &fp)?;
    let passed = eq.passed && taylor.passed;

    let output = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["k".into(), "gap".into()]);
            for (k, &g) in eq.gaps.iter().enumerate() {
                csv.row([k.to_string().as_str(), fmt_f64(g).as_str()]);
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Equivalence {
                horizon: usize,
                tol: f64,
                threshold: f64,
                max_gap: f64,
                max_state_norm: f64,
                passed: bool,
                gaps: Vec<f64>,
            }
            #[derive(Serialize)]
            struct Report {
                schema_version: &'static str,
                command: &'static str,
                context: ContextOut,
                fixed_point_residual: f64,
                equivalence: Equivalence,
                taylor: TaylorReport,
                passed: bool,
            }
            to_json(&Report {
                schema_version: SCHEMA_VERSION,
                command: "equiv",
                context: ctx.into(),
                fixed_point_residual: fp.residual(),
                equivalence: Equivalence {
                    horizon: exp.horizon,
                    tol: eq.tol,
                    threshold: eq.threshold,
                    max_gap: eq.max_gap,
                    max_state_norm: eq.max_state_norm,
                    passed: eq.passed,
                    gaps: eq.gaps,
                },
                taylor,
                passed,
            })
        }
    };
    Ok(Outcome {
        output,
        exit_code: code(passed),
    })
}

pub fn context_cmd(exp: &Experiment, format: Format) -> Result<Outcome, CliError> {
    let sweep = context_sweep(&exp.model, &exp.contexts, &exp.probe_u, exp.solver_options())?;
    if sweep.failures() == sweep.entries.len() {
        let first = sweep.entries[0].outcome.as_ref().unwrap_err().clone();
        return Err(first.into());
    }
    let identical = sweep.comparisons.iter().all(|(_, c)| c.activation_input_identical);
    let exit_code = if sweep.failures() > 0 {
        3
    } else {
        code(identical)
    };

    let output = match format {
        Format::Csv => {
            let header = ["labelA", "labelB", "angle_deg", "norm_ratio", "max_spectrum_gap"];
            let mut csv = Csv::new(&header.map(String::from));
            for (_, c) in &sweep.comparisons {
                let fields = [
                    c.labels.0.clone(),
                    c.labels.1.clone(),
                    fmt_f64(c.effective_input_angle_deg),
                    fmt_f64(c.effective_input_norm_ratio),
                    fmt_f64(c.spectrum_gaps.max_gap),
                ];
                csv.row(fields.iter().map(String::as_str));
            }
            csv.finish()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Instantiation {
                context: ContextOut,
                status: &'static str,
                error: Option<String>,
                fixed_point: Option<FixedPointOut>,
                gains: Option<Vec<f64>>,
            }
            #[derive(Serialize)]
            struct Comparison {
                index_a: usize,
                index_b: usize,
                label_a: String,
                label_b: String,
                effective_input_a: Vec<f64>,
                effective_input_b: Vec<f64>,
                angle_deg: f64,
                norm_ratio: f64,
                activation_input_identical: bool,
                activity_input_differs: bool,
                max_spectrum_gap: f64,
                mean_spectrum_gap: f64,
            }
            #[derive(Serialize)]
            struct Report {
                schema_version: &'static str,
                command: &'static str,
                probe_u: Vec<f64>,
                instantiations: Vec<Instantiation>,
                comparisons: Vec<Comparison>,
                skipped_pairs: Vec<(usize, usize)>,
                failures: usize,
                activation_input_identical: bool,
            }
            to_json(&Report {
                schema_version: SCHEMA_VERSION,
                command: "context",
                probe_u: vec(&exp.probe_u),
                instantiations: sweep
                    .entries
                    .iter()
                    .map(|e| match &e.outcome {
                        Ok(inst) => Instantiation {
                            context: (&e.context).into(),
                            status: "ok",
                            error: None,
                            fixed_point: Some((&inst.fp).into()),
                            gains: Some(vec(inst.gains.diag())),
                        },
                        Err(err) => Instantiation {
                            context: (&e.context).into(),
                            status: "error",
                            error: Some(err.to_string()),
                            fixed_point: None,
                            gains: None,
                        },
                    })
                    .collect(),
                comparisons: sweep
                    .comparisons
                    .iter()
                    .map(|&((i, j), ref c)| Comparison {
                        index_a: i,
                        index_b: j,
                        label_a: c.labels.0.clone(),
                        label_b: c.labels.1.clone(),
                        effective_input_a: vec(&c.effective_inputs.0),
                        effective_input_b: vec(&c.effective_inputs.1),
                        angle_deg: c.effective_input_angle_deg,
                        norm_ratio: c.effective_input_norm_ratio,
                        activation_input_identical: c.activation_input_identical,
                        activity_input_differs: c.activity_input_differs,
                        max_spectrum_gap: c.spectrum_gaps.max_gap,
                        mean_spectrum_gap: c.spectrum_gaps.mean_gap,
                    })
                    .collect(),
                skipped_pairs: sweep.skipped_pairs.clone(),
                failures: sweep.failures(),
                activation_input_identical: identical,
            })
        }
    };
    Ok(Outcome { output, exit_code })
}

pub fn export_cmd(exp: &Experiment) -> Result<Outcome, CliError> {
    Ok(Outcome {
        output: to_json(&ModelFile::from_model(&exp.model)),
        exit_code: 0,
    })
}
