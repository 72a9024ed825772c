//! The subcommands. Each writes its artifacts into an output directory and
//! returns the reports it produced.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gburgers::fd_oracle::{compare_fields, solve_fd, Discrepancy, FdConfig};
use gburgers::invariants::{
    check_contraction, check_far_field_probes, check_fd_agreement, check_holder, check_max_principle,
    check_monotonicity, continuous_dependence, fit_derivative_decay, pde_residual, small_time_consistency,
    InvariantReport, Quantity, Status,
};
use gburgers::io;
use gburgers::kernel::{identity_suite, IDENTITY_NAMES};
use gburgers::mild_solver::{all_fields, solve_global, solve_local_with_step, PatchMeta, SolutionPatch, SolverConfig};
use gburgers::{Coefficient, DataSpec, Field, InitialData};
use serde::Serialize;
use serde_json::json;

use crate::config::{Check, RunConfig};
use crate::plot;

/// Reports of one command; `errors` holds checks that could not be evaluated.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Outcome {
    pub reports: Vec<InvariantReport>,
    pub errors: Vec<CheckError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckError {
    pub check: String,
    pub message: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.reports.iter().all(|r| !r.status.is_failure())
    }

    pub fn report(&self, name: &str) -> Option<&InvariantReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            let values: Vec<String> = r.measured.iter().take(4).map(|m| format!("{}={:.4e}", m.name, m.value)).collect();
            s.push_str(&format!("{:<24} {:<14} {}\n", r.name, status_name(r.status), values.join(" ")));
        }
        for e in &self.errors {
            s.push_str(&format!("{:<24} {:<14} {}\n", e.check, "error", e.message));
        }
        s
    }
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::NotApplicable => "not_applicable",
        Status::Inconclusive => "inconclusive",
    }
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    alpha: f64,
    data: &'a DataSpec,
    t_star: f64,
    t_final: f64,
    seed: u64,
    lower: f64,
    upper: f64,
    solver: &'a SolverConfig,
    patches: Vec<PatchMeta>,
}

fn write_solution(dir: &Path, command: &str, cfg: &RunConfig, seed: u64, sol: &[SolutionPatch]) -> Result<()> {
    let d = cfg.problem.initial_data()?;
    let fields = all_fields(sol);
    io::write_fields_csv(io::create(&dir.join("solution.csv"))?, &fields, None)?;
    let meta = RunMetadata {
        command,
        alpha: cfg.problem.alpha,
        data: &cfg.problem.data,
        t_star: cfg.problem.t_star()?,
        t_final: cfg.problem.t_final()?,
        seed,
        lower: d.inf(),
        upper: d.sup(),
        solver: &cfg.solver,
        patches: sol.iter().map(|p| p.meta()).collect(),
    };
    io::write_json(&dir.join("metadata.json"), &meta)?;
    let shown = plot::pick(&fields, cfg.study.plot_times);
    let title = format!("alpha = {}, T = {:.4e}", cfg.problem.alpha, cfg.problem.t_final()?);
    fs::write(dir.join("profiles.svg"), plot::profiles_svg(&shown, &title))?;
    Ok(())
}

fn write_reports(dir: &Path, outcome: &Outcome) -> Result<()> {
    io::write_json(&dir.join("reports.json"), outcome)?;
    io::write_reports_csv(io::create(&dir.join("reports.csv"))?, &outcome.reports)?;
    Ok(())
}

fn solve_problem(cfg: &RunConfig) -> Result<(InitialData, Coefficient, Vec<SolutionPatch>)> {
    let d = cfg.problem.initial_data()?;
    let c = cfg.problem.coefficient()?;
    let sol = solve_global(&d, cfg.problem.t_final()?, &c, &cfg.solver)?;
    Ok((d, c, sol))
}

// ------------------------------------------------------------------ solve

pub fn solve(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome> {
    let (_, _, sol) = solve_problem(cfg)?;
    write_solution(out, "solve", cfg, seed, &sol)?;
    Ok(Outcome::default())
}

// ---------------------------------------------------------- verify-kernel

pub fn verify_kernel(cfg: &RunConfig, out: &Path, only: Option<&str>) -> Result<Outcome> {
    if let Some(name) = only {
        if !IDENTITY_NAMES.contains(&name) {
            bail!("unknown identity '{name}', expected one of {}", IDENTITY_NAMES.join(", "));
        }
    }
    let rows: Vec<_> = identity_suite(&cfg.kernel.dts, &cfg.kernel.quad)?
        .into_iter()
        .filter(|r| only.is_none_or(|n| r.identity_name == n))
        .collect();
    io::write_identities_csv(io::create(&out.join("kernel_identities.csv"))?, &rows)?;
    io::write_json(&out.join("kernel_identities.json"), &rows)?;
    let reports = rows
        .iter()
        .map(|r| InvariantReport {
            name: format!("{}@{}", r.identity_name, r.parameter),
            status: if r.passed { Status::Pass } else { Status::Fail },
            passed: r.passed,
            measured: vec![Quantity { name: "abs_error".into(), value: r.abs_error }],
            threshold: vec![Quantity { name: "tolerance".into(), value: r.tolerance }],
            details: Vec::new(),
        })
        .collect();
    Ok(Outcome { reports, errors: Vec::new() })
}

// ------------------------------------------------------------- invariants

pub fn invariants(cfg: &RunConfig, out: &Path, seed: u64, only: Option<Check>) -> Result<Outcome> {
    let (d, c, sol) = solve_problem(cfg)?;
    write_solution(out, "invariants", cfg, seed, &sol)?;
    let checks = selected(cfg, only);
    let outcome = run_checks(cfg, &d, &c, &sol, &checks, seed);
    write_reports(out, &outcome)?;
    Ok(outcome)
}

fn selected(cfg: &RunConfig, only: Option<Check>) -> Vec<Check> {
    match only {
        Some(c) => vec![c],
        None => {
            let mut v = Vec::new();
            for &c in &cfg.checks {
                if !v.contains(&c) {
                    v.push(c);
                }
            }
            v
        }
    }
}

pub fn run_checks(
    cfg: &RunConfig,
    d: &InitialData,
    c: &Coefficient,
    sol: &[SolutionPatch],
    checks: &[Check],
    seed: u64,
) -> Outcome {
    let mut outcome = Outcome::default();
    for &check in checks {
        match run_check(cfg, d, c, sol, check, seed) {
            Ok(r) => outcome.reports.push(r),
            Err(e) => outcome.errors.push(CheckError { check: check.name().to_string(), message: format!("{e:#}") }),
        }
    }
    outcome
}

fn not_applicable(check: Check) -> InvariantReport {
    InvariantReport {
        name: check.name().to_string(),
        status: Status::NotApplicable,
        passed: false,
        measured: Vec::new(),
        threshold: Vec::new(),
        details: Vec::new(),
    }
}

fn run_check(
    cfg: &RunConfig,
    d: &InitialData,
    c: &Coefficient,
    sol: &[SolutionPatch],
    check: Check,
    seed: u64,
) -> Result<InvariantReport> {
    let th = &cfg.thresholds;
    let study = &cfg.study;
    let first = sol.first().context("empty solution")?;
    Ok(match check {
        Check::Contraction => {
            check_contraction(sol, cfg.solver.contraction_limit, 1e-13, cfg.solver.max_iterations)
        }
        Check::MaxPrinciple => check_max_principle(sol, d, th),
        Check::Monotonicity => check_monotonicity(sol, d, th),
        Check::FarField => {
            if d.is_smooth() {
                not_applicable(check)
            } else {
                check_far_field_probes(sol, d, &study.far_field_probes, th)?
            }
        }
        Check::DerivativeDecay => {
            if d.jumps().is_empty() {
                not_applicable(check)
            } else {
                fit_derivative_decay(first, c, study.derivative_window, th)?.report
            }
        }
        Check::Holder => {
            let mut merged = not_applicable(check);
            let mut status = Status::Pass;
            for &beta in &study.holder_betas {
                let r = check_holder(sol, beta, study.holder_samples, seed, th)?;
                if r.status.is_failure() {
                    status = r.status;
                }
                for m in r.measured.into_iter().filter(|m| m.name != "beta") {
                    merged.measured.push(Quantity { name: format!("{}@beta={beta}", m.name), value: m.value });
                }
            }
            merged.threshold.push(Quantity { name: "stability".into(), value: th.holder_stability });
            merged.measured.push(Quantity { name: "seed".into(), value: seed as f64 });
            merged.status = status;
            merged.passed = status == Status::Pass;
            merged
        }
        Check::PdeResidual => {
            let t = first.t0 + study.residual_time_fraction * first.t_star;
            let mut levels: Vec<Vec<Field>> = Vec::new();
            for &nx in &study.residual_nx {
                if nx == cfg.solver.nx {
                    levels.push(first.fields.clone());
                } else {
                    let scfg = SolverConfig { nx, ..cfg.solver.clone() };
                    levels.push(solve_local_with_step(d, first.t0, first.t_star, c, &scfg)?.fields);
                }
            }
            let refs: Vec<&[Field]> = levels.iter().map(|l| l.as_slice()).collect();
            pde_residual(&refs, t, c, th)?
        }
        Check::SmallTime => small_time_consistency(first, th)?.1,
        Check::ContinuousDependence => {
            let other = cfg.problem.data.shifted(study.perturbation).build()?;
            let horizon = match study.dependence_t_final {
                Some(t) => t,
                None => cfg.problem.t_star()?,
            };
            continuous_dependence(d, &other, horizon, c, &cfg.solver, th)?.report
        }
        Check::FdAgreement => {
            let (base, refined) = fd_study(cfg, d, c, sol)?;
            check_fd_agreement(&base, refined.as_ref(), th)
        }
    })
}

/// Report times of `sol` from `compare_from_fraction * t_final` on.
fn compare_times(cfg: &RunConfig, sol: &[SolutionPatch]) -> Result<Vec<f64>> {
    let from = cfg.study.compare_from_fraction * cfg.problem.t_final()?;
    Ok(all_fields(sol).iter().map(|f| f.t).filter(|&t| t >= from).collect())
}

fn fd_level(d: &InitialData, c: &Coefficient, fd: &FdConfig, sol: &[SolutionPatch], times: &[f64]) -> Result<(Discrepancy, Vec<Field>)> {
    let fields = solve_fd(d, times, c, fd)?;
    Ok((compare_fields(&all_fields(sol), &fields)?, fields))
}

fn refined_configs(cfg: &RunConfig) -> (SolverConfig, FdConfig) {
    let s = SolverConfig { nx: 2 * (cfg.solver.nx - 1) + 1, ..cfg.solver.clone() };
    let f = FdConfig { nx: 2 * cfg.fd.nx, ..cfg.fd.clone() };
    (s, f)
}

fn fd_study(cfg: &RunConfig, d: &InitialData, c: &Coefficient, sol: &[SolutionPatch]) -> Result<(Discrepancy, Option<Discrepancy>)> {
    let times = compare_times(cfg, sol)?;
    let (base, _) = fd_level(d, c, &cfg.fd, sol, &times)?;
    let refined = if cfg.study.compare_refine {
        let (s, f) = refined_configs(cfg);
        let fine = solve_global(d, cfg.problem.t_final()?, c, &s)?;
        Some(fd_level(d, c, &f, &fine, &times)?.0)
    } else {
        None
    };
    Ok((base, refined))
}

// ---------------------------------------------------------------- compare

pub fn compare(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome> {
    let (d, c, sol) = solve_problem(cfg)?;
    write_solution(out, "compare", cfg, seed, &sol)?;
    let times = compare_times(cfg, &sol)?;
    let (base, fd_fields) = fd_level(&d, &c, &cfg.fd, &sol, &times)?;
    let refs: Vec<&Field> = fd_fields.iter().collect();
    io::write_fields_csv(io::create(&out.join("fd_solution.csv"))?, &refs, Some("fd"))?;
    let refined = if cfg.study.compare_refine {
        let (s, f) = refined_configs(cfg);
        let fine = solve_global(&d, cfg.problem.t_final()?, &c, &s)?;
        Some(fd_level(&d, &c, &f, &fine, &times)?.0)
    } else {
        None
    };
    let mut w = csv::Writer::from_writer(io::create(&out.join("compare.csv"))?);
    w.write_record(["level", "mild_nx", "fd_nx", "t", "sup", "l2"])?;
    let (s, f) = refined_configs(cfg);
    let levels = [("base", cfg.solver.nx, cfg.fd.nx, Some(&base)), ("refined", s.nx, f.nx, refined.as_ref())];
    for (name, mnx, fnx, disc) in levels {
        let Some(disc) = disc else { continue };
        for r in &disc.rows {
            w.write_record([name, &mnx.to_string(), &fnx.to_string(), &io::num(r.t), &io::num(r.sup), &io::num(r.l2)])?;
        }
    }
    w.flush()?;
    let outcome = Outcome { reports: vec![check_fd_agreement(&base, refined.as_ref(), &cfg.thresholds)], errors: Vec::new() };
    write_reports(out, &outcome)?;
    Ok(outcome)
}

// ------------------------------------------------------------------ sweep

/// Runs the selected checks for every combination of `sweep.alphas` and
/// `sweep.data`, each in its own subdirectory, and aggregates the statuses.
pub fn sweep(cfg: &RunConfig, out: &Path, seed: u64, only: Option<Check>) -> Result<Outcome> {
    let datas = if cfg.sweep.data.is_empty() { vec![cfg.problem.data.clone()] } else { cfg.sweep.data.clone() };
    let checks = selected(cfg, only);
    let mut total = Outcome::default();
    let mut w = csv::Writer::from_writer(io::create(&out.join("sweep.csv"))?);
    w.write_record(["run", "alpha", "data", "check", "status", "measured"])?;
    let mut run = 0usize;
    for &alpha in &cfg.sweep.alphas {
        for data in &datas {
            let mut sub = cfg.clone();
            sub.problem.alpha = alpha;
            sub.problem.data = data.clone();
            let dir = out.join(format!("run_{run:03}"));
            fs::create_dir_all(&dir)?;
            let label = serde_json::to_string(data)?;
            let outcome = match solve_problem(&sub) {
                Ok((d, c, sol)) => {
                    write_solution(&dir, "sweep", &sub, seed, &sol)?;
                    run_checks(&sub, &d, &c, &sol, &checks, seed)
                }
                Err(e) => Outcome {
                    reports: Vec::new(),
                    errors: vec![CheckError { check: "solve".into(), message: format!("{e:#}") }],
                },
            };
            write_reports(&dir, &outcome)?;
            for r in &outcome.reports {
                let measured: Vec<String> = r.measured.iter().map(|m| format!("{}={}", m.name, io::num(m.value))).collect();
                w.write_record([&run.to_string(), &io::num(alpha), &label, &r.name, status_name(r.status), &measured.join(";")])?;
            }
            for e in &outcome.errors {
                w.write_record([&run.to_string(), &io::num(alpha), &label, &e.check, "error", &e.message])?;
            }
            total.reports.extend(outcome.reports);
            total.errors.extend(outcome.errors);
            run += 1;
        }
    }
    w.flush()?;
    io::write_json(&out.join("sweep.json"), &total)?;
    Ok(total)
}

// ------------------------------------------------------------ diagnostics

/// Machine-readable description of a failed command.
pub fn diagnostic(e: &anyhow::Error) -> serde_json::Value {
    let mut kind = "error";
    let mut history: Option<Vec<f64>> = None;
    let mut patch: Option<usize> = None;
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<gburgers::Error>() {
            let mut err = err;
            if let gburgers::Error::Patch { index, source } = err {
                patch = Some(*index);
                err = source;
            }
            kind = match err {
                gburgers::Error::Domain(_) => "domain",
                gburgers::Error::Config(_) => "config",
                gburgers::Error::Precondition(_) => "precondition",
                gburgers::Error::Convergence { residual_history, .. } => {
                    history = Some(residual_history.clone());
                    "convergence"
                }
                gburgers::Error::Certification { residual_history, .. } => {
                    history = Some(residual_history.clone());
                    "certification"
                }
                gburgers::Error::Io(_) | gburgers::Error::Json(_) | gburgers::Error::Csv(_) => "io",
                gburgers::Error::Patch { .. } => "patch",
            };
            break;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            kind = "parse";
            break;
        }
    }
    json!({ "error": kind, "message": format!("{e:#}"), "patch": patch, "residual_history": history })
}

pub fn write_diagnostic(out: &Path, e: &anyhow::Error) -> Result<()> {
    let mut f = io::create(&out.join("error.json"))?;
    serde_json::to_writer_pretty(&mut f, &diagnostic(e))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
