//! Command bodies. Each returns its output in memory so the binary only has to
//! route it to a file or stdout.

use plap_core::comparison::comparison_check;
use plap_core::superpose::DEFAULT_FD_STEP;
use plap_core::{
    delta_p_closed_form, delta_p_direct, delta_p_fd, eval, sign_region, Error, EvolutionKernel,
    NodeKind, Params,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, KernelSpec};
use crate::sampling;
use crate::table::{format_f64, format_opt, Table};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

impl From<csv::Error> for CommandError {
    fn from(e: csv::Error) -> Self {
        CommandError::Output(e.into())
    }
}

fn finish<W: std::io::Write>(table: Table<W>) -> Result<W, CommandError> {
    Ok(table.finish()?)
}

fn into_string(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).expect("CSV output is ASCII")
}

fn coordinate_header(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("x{k}")).collect()
}

/// One row per query point: coordinates, value, `|∇W|`, and `Δ_p` by the
/// direct, closed-form and finite-difference routes. Points where a value
/// is unavailable get an empty field and a note in `flag`.
pub fn eval_csv(cfg: &ExperimentConfig, seed: u64) -> Result<String, CommandError> {
    let mut rng = sampling::rng(seed);
    let ps = cfg.pole_set(&mut rng)?;
    let k = cfg.concave_term()?;
    let points = cfg.points(&mut rng, &ps)?;
    let step = cfg.fd_step.unwrap_or(DEFAULT_FD_STEP);
    let n = ps.params().n();
    log::info!(
        "eval: {} poles, {} points, fd step {step}",
        ps.len(),
        points.len()
    );

    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|x| {
            let mut flags: Vec<String> = Vec::new();
            let res = eval(&ps, &k, x);
            let (value, grad) = match &res {
                Ok(r) => (Some(r.value), r.gradient_norm().ok()),
                Err(_) => (None, None),
            };
            if let Ok(r) = &res {
                if r.derivatives.is_none() {
                    flags.push("pole".into());
                } else if r.low_confidence(ps.params()) {
                    flags.push("low_confidence".into());
                }
            }
            let direct = delta_p_direct(&ps, &k, x);
            let closed = delta_p_closed_form(&ps, &k, x);
            let fd = delta_p_fd(&ps, &k, x, step);
            if let Err(e) = &res {
                flags.push(format!("eval: {e}"));
            }
            for (r, route) in [(&direct, "direct"), (&closed, "closed_form"), (&fd, "fd")] {
                if let Err(e) = r {
                    flags.push(format!("{route}: {e}"));
                }
            }
            flags.dedup();
            let mut row: Vec<String> = x.iter().map(|&c| format_f64(c)).collect();
            row.push(format_opt(value));
            row.push(format_opt(grad));
            row.push(format_opt(direct.ok()));
            row.push(format_opt(closed.ok()));
            row.push(format_opt(fd.ok()));
            row.push(flags.join("; "));
            row
        })
        .collect();

    let mut header = coordinate_header(n);
    header.extend(
        [
            "value",
            "grad_norm",
            "delta_p_direct",
            "delta_p_closed_form",
            "delta_p_fd",
            "flag",
        ]
        .map(String::from),
    );
    let mut table = Table::new(Vec::new(), &header)?;
    for row in &rows {
        table.row(row)?;
    }
    Ok(into_string(finish(table)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignMapRange {
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for SignMapRange {
    fn default() -> Self {
        SignMapRange {
            p_min: 0.2,
            p_max: 4.0,
            p_step: 0.05,
            n_min: 1,
            n_max: 6,
        }
    }
}

/// Grid values of `p`. When `1/step` is an integer `m` the values are `k/m`,
/// so `p = 1` and `p = 2` land exactly on the grid.
pub fn p_grid(range: &SignMapRange) -> Result<Vec<f64>, CommandError> {
    let SignMapRange {
        p_min,
        p_max,
        p_step,
        ..
    } = *range;
    if !(p_step > 0.0) || !(p_min <= p_max) || !p_min.is_finite() || !p_max.is_finite() {
        return Err(CommandError::Usage(
            "p range needs p_min <= p_max and a positive step".into(),
        ));
    }
    let inv = 1.0 / p_step;
    let slack = 1e-9;
    if (inv - inv.round()).abs() <= slack * inv {
        let m = inv.round();
        let lo = (p_min * m - slack).ceil() as i64;
        let hi = (p_max * m + slack).floor() as i64;
        Ok((lo..=hi).map(|k| k as f64 / m).collect())
    } else {
        let count = ((p_max - p_min) / p_step + slack).floor() as i64;
        Ok((0..=count).map(|k| p_min + k as f64 * p_step).collect())
    }
}

/// `(p, n, class)` rows; `p = 1` rows are `Excluded`.
pub fn sign_map_csv(range: &SignMapRange) -> Result<String, CommandError> {
    if range.n_min == 0 || range.n_min > range.n_max {
        return Err(CommandError::Usage(
            "n range needs 1 <= n_min <= n_max".into(),
        ));
    }
    let ps = p_grid(range)?;
    let mut table = Table::new(Vec::new(), &["p", "n", "class"])?;
    for &p in &ps {
        for n in range.n_min..=range.n_max {
            table.row(&[
                format_f64(p),
                n.to_string(),
                sign_region(p, n).as_str().to_string(),
            ])?;
        }
    }
    Ok(into_string(finish(table)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub residual: f64,
    pub accepted_steps: usize,
    pub final_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub version: u32,
    pub p: f64,
    pub n: usize,
    pub nodes: Vec<usize>,
    pub boundary_shift: f64,
    pub min_gap: f64,
    pub min_gap_location: Vec<f64>,
    pub violations: usize,
    pub compared_nodes: usize,
    pub excised_nodes: usize,
    pub excision_dominates: bool,
    pub tolerance: f64,
    pub passed: bool,
    pub solver: SolverSummary,
}

/// Solves the comparison problem; returns the grid dump and the summary.
pub fn compare(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(String, CompareSummary), CommandError> {
    let mut rng = sampling::rng(seed);
    let ps = cfg.pole_set(&mut rng)?;
    let k = cfg.concave_term()?;
    let domain = cfg.grid()?;
    let opts = cfg.solver_options();
    log::info!(
        "compare: {} poles on a {:?} grid",
        ps.len(),
        domain.nodes_per_axis()
    );
    let run = comparison_check(&ps, &k, &domain, cfg.boundary_shift, &opts)?;
    let report = &run.report;
    log::info!(
        "compare: {} Newton steps, residual {:.3e}, min gap {:.6e}",
        report.solver.iterations,
        report.solver.residual,
        report.min_gap
    );

    let mut header = coordinate_header(domain.dim());
    header.extend(["W", "h", "gap", "kind", "excised"].map(String::from));
    let mut table = Table::new(Vec::new(), &header)?;
    for i in 0..domain.len() {
        let w = run.w.values()[i];
        let h = run.h.values()[i];
        let mut row: Vec<String> = domain.coords(i).into_iter().map(format_f64).collect();
        row.push(format_f64(w));
        row.push(format_f64(h));
        row.push(format_f64(w - h));
        row.push(match domain.kind(i) {
            NodeKind::Interior => "interior".into(),
            NodeKind::Boundary => "boundary".into(),
        });
        row.push(u8::from(run.excised[i]).to_string());
        table.row(&row)?;
    }
    let summary = CompareSummary {
        version: 1,
        p: ps.params().p(),
        n: ps.params().n(),
        nodes: domain.nodes_per_axis().to_vec(),
        boundary_shift: cfg.boundary_shift,
        min_gap: report.min_gap,
        min_gap_location: domain.coords(report.min_gap_node),
        violations: report.violations,
        compared_nodes: report.compared_nodes,
        excised_nodes: report.excised_nodes,
        excision_dominates: report.excision_dominates,
        tolerance: report.tolerance,
        passed: report.passed(),
        solver: SolverSummary {
            iterations: report.solver.iterations,
            residual: report.solver.residual,
            accepted_steps: report.solver.energy_history.len().saturating_sub(1),
            final_energy: report
                .solver
                .energy_history
                .last()
                .copied()
                .unwrap_or(f64::NAN),
        },
    };
    Ok((into_string(finish(table)?), summary))
}

fn sign_str(v: f64) -> &'static str {
    if v > 0.0 {
        "1"
    } else if v < 0.0 {
        "-1"
    } else {
        "0"
    }
}

/// Barenblatt kernel: `(r, B, B_t, defect, sign)` along a ray at fixed `t`.
/// Homogeneous kernel: `(t, W(y,t), W_t(y,t), two-bump defect, sign)` on a
/// logarithmic time grid.
pub fn evolution_sweep_csv(cfg: &ExperimentConfig) -> Result<String, CommandError> {
    let params: Params = cfg.params()?;
    let spec = cfg.kernel.clone().unwrap_or(KernelSpec::Barenblatt {
        constant: 1.0,
        t: 1.0,
        a: 2.0,
        samples: 201,
    });
    match spec {
        KernelSpec::Barenblatt {
            constant,
            t,
            a,
            samples,
        } => {
            let kernel = EvolutionKernel::barenblatt(&params, constant)?;
            let edge = kernel.support_radius(t)?;
            log::info!(
                "evolution-sweep: support radius {edge:.6}, sign-change radius {:.6}",
                kernel.sign_change_radius(t)?
            );
            let mut table = Table::new(
                Vec::new(),
                &["r", "B", "B_t", "defect", "defect_sign", "flag"],
            )?;
            let n = params.n();
            for i in 0..samples {
                let r = edge * i as f64 / (samples - 1) as f64;
                let mut x = vec![0.0; n];
                x[0] = r;
                let b = kernel.kernel_value(&x, t)?;
                let (bt, defect, flag) = match (
                    kernel.kernel_time_derivative(&x, t),
                    kernel.barenblatt_defect(a, &x, t),
                ) {
                    (Ok(bt), Ok(d)) => (
                        Some(bt),
                        Some(d.value),
                        if d.degenerate { "degenerate" } else { "" },
                    ),
                    (Err(Error::NonDifferentiable), _) | (_, Err(Error::NonDifferentiable)) => {
                        (None, None, "free_boundary")
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e.into()),
                };
                table.row(&[
                    format_f64(r),
                    format_f64(b),
                    format_opt(bt),
                    format_opt(defect),
                    defect.map(sign_str).unwrap_or("").to_string(),
                    flag.to_string(),
                ])?;
            }
            Ok(into_string(finish(table)?))
        }
        KernelSpec::Homogeneous {
            constant,
            y,
            t_min,
            t_max,
            samples,
        } => {
            if !(t_min < t_max) {
                return Err(CommandError::Usage(
                    "kernel.t_min must be below kernel.t_max".into(),
                ));
            }
            let kernel = EvolutionKernel::homogeneous(&params, constant)?;
            let mut table = Table::new(Vec::new(), &["t", "W", "W_t", "defect", "defect_sign"])?;
            let (lo, hi) = (t_min.ln(), t_max.ln());
            for i in 0..samples {
                let t = (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
                let w = kernel.kernel_value(&y, t)?;
                let wt = kernel.kernel_time_derivative(&y, t)?;
                let d = kernel.two_bump_defect(&y, t)?;
                table.row(&[
                    format_f64(t),
                    format_f64(w),
                    format_f64(wt),
                    format_f64(d),
                    sign_str(d).to_string(),
                ])?;
            }
            Ok(into_string(finish(table)?))
        }
    }
}
