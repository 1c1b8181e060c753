use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use perifix_core::certify::{
    CheckResult, ConvergenceCertificate, bracket_converge, check_a1_quasimonotone,
    check_a2_input_monotone, check_a3_output_decreasing, check_bracket_condition,
    verify_box_invariance,
};
use perifix_core::genereg::check_h;
use perifix_core::integrate::{IntegratorSettings, sample_trajectory, uniform_grid};
use perifix_core::model::{ClosedLoopModel, build_doubled};
use perifix_core::poincare::iterate_orbit;

use crate::CliError;
use crate::args::{CertifyArgs, CertifyOptions, Cli, Command, OrbitArgs, SimulateArgs, SolverArgs};
use crate::config::{LoadedModel, load_model};
use crate::output::{Artifacts, write_orbit, write_trajectory};
use crate::paper::reproduce_paper;
use crate::report::RunReport;

const BOX_TIME_SAMPLES: usize = 16;
const BOX_FACE_SAMPLES: usize = 64;
const H_GRID: usize = 1000;

/// Model settings with the command-line tolerance overrides applied.
pub fn solver_settings(
    model: &ClosedLoopModel,
    args: &SolverArgs,
) -> Result<IntegratorSettings, CliError> {
    let s = model.settings();
    let s = s.with_tolerances(args.rtol.unwrap_or(s.rtol), args.atol.unwrap_or(s.atol));
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn check_point(name: &str, model: &ClosedLoopModel, x: &[f64]) -> Result<(), CliError> {
    if x.len() != model.dim() {
        return Err(CliError::Usage(format!(
            "--{name}: expected {} components, found {}",
            model.dim(),
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!(
            "--{name}: components must be finite"
        )));
    }
    Ok(())
}

/// Hypothesis checks on `[x0, y0]` followed, when the bracket condition holds, by the
/// bracketing iteration.
pub fn certify_model(
    loaded: &LoadedModel,
    x0: &[f64],
    y0: &[f64],
    s: &IntegratorSettings,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<(Vec<CheckResult>, Option<ConvergenceCertificate>), CliError> {
    let m = &loaded.model;
    let mut checks = Vec::new();
    if let Some(spec) = &loaded.gene {
        checks.push(check_h(spec, H_GRID)?);
    }
    checks.push(check_a1_quasimonotone(m, opts.samples, seed));
    checks.push(check_a2_input_monotone(m, opts.samples, seed));
    checks.push(check_a3_output_decreasing(m, opts.samples, seed));
    checks.push(verify_box_invariance(
        m,
        m.state_box(),
        BOX_TIME_SAMPLES,
        BOX_FACE_SAMPLES,
        seed,
    )?);
    let dm = build_doubled(m);
    let bracket = check_bracket_condition(&dm, x0, y0, s)?;
    let bracket_ok = bracket.passed();
    checks.push(bracket);
    let certificate = if bracket_ok {
        Some(bracket_converge(
            &dm,
            x0,
            y0,
            opts.tol,
            opts.residual_tol,
            opts.max_iters,
            s,
        )?)
    } else {
        log::warn!("bracket condition failed; skipping the bracketing iteration");
        None
    };
    Ok((checks, certificate))
}

fn base_report(
    command: &str,
    argv: &[String],
    loaded: &LoadedModel,
    s: IntegratorSettings,
) -> RunReport {
    RunReport {
        command: command.into(),
        argv: argv.to_vec(),
        model_digest: loaded.digest.clone(),
        model: loaded.config.clone(),
        settings: s,
        seed: None,
        checks: Vec::new(),
        certificate: None,
        metrics: BTreeMap::new(),
        files: Vec::new(),
    }
}

fn finish_report(
    mut report: RunReport,
    out: Option<&Path>,
    artifacts: &mut Artifacts,
) -> Result<RunReport, CliError> {
    report.files = artifacts
        .files()
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    match out {
        Some(path) => {
            artifacts.write_str(path, &json)?;
            report.files.push(path.display().to_string());
        }
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{json}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(report)
}

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let m = &loaded.model;
    check_point("x0", m, &args.x0)?;
    let s = solver_settings(m, &args.solver)?;
    if !(args.t_end > 0.0 && args.dt > 0.0 && args.t_end.is_finite()) {
        return Err(CliError::Usage("--t-end and --dt must be positive".into()));
    }
    let steps = (args.t_end / args.dt).round();
    if (steps * args.dt - args.t_end).abs() > 1e-9 * args.t_end {
        return Err(CliError::Usage(format!(
            "--t-end {} is not a multiple of --dt {}",
            args.t_end, args.dt
        )));
    }
    let grid = uniform_grid(0.0, args.t_end, steps as usize);
    let tr = sample_trajectory(m, 0.0, &args.x0, &grid, &s)?;
    let mut artifacts = Artifacts::default();
    match &args.out {
        Some(path) => artifacts.write(path, |w| write_trajectory(w, &tr))?,
        None => write_trajectory(&mut io::stdout().lock(), &tr)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
    }
    if let Some(path) = &args.report {
        let mut report = base_report("simulate", argv, &loaded, s);
        report.metrics.insert("steps".into(), tr.stats.steps as f64);
        report
            .metrics
            .insert("rejected".into(), tr.stats.rejected as f64);
        finish_report(report, Some(path), &mut artifacts)?;
    }
    Ok(())
}

pub fn orbit(args: &OrbitArgs, argv: &[String]) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let m = &loaded.model;
    check_point("x0", m, &args.x0)?;
    let s = solver_settings(m, &args.solver)?;
    // one extra period so that every written iterate has a residual
    let o = iterate_orbit(m, &args.x0, args.iterations + 1, &s)?;
    let mut artifacts = Artifacts::default();
    match &args.out {
        Some(path) => artifacts.write(path, |w| write_orbit(w, &o))?,
        None => write_orbit(&mut io::stdout().lock(), &o)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
    }
    if let Some(path) = &args.report {
        let mut report = base_report("orbit", argv, &loaded, s);
        report
            .metrics
            .insert("tail_diameter".into(), o.tail_diameter());
        report
            .metrics
            .insert("last_residual".into(), o.residuals[args.iterations]);
        finish_report(report, Some(path), &mut artifacts)?;
    }
    Ok(())
}

pub fn certify(args: &CertifyArgs, argv: &[String]) -> Result<RunReport, CliError> {
    let loaded = load_model(&args.model)?;
    let m = &loaded.model;
    let x0 = args
        .x0
        .clone()
        .unwrap_or_else(|| m.state_box().lo().to_vec());
    let y0 = args
        .y0
        .clone()
        .unwrap_or_else(|| m.state_box().hi().to_vec());
    check_point("x0", m, &x0)?;
    check_point("y0", m, &y0)?;
    let s = solver_settings(m, &args.solver)?;
    let (checks, certificate) =
        certify_model(&loaded, &x0, &y0, &s, args.solver.seed, &args.certify)?;
    let mut report = base_report("certify", argv, &loaded, s);
    report.seed = Some(args.solver.seed);
    report.checks = checks;
    report.certificate = certificate;
    let report = finish_report(report, args.out.as_deref(), &mut Artifacts::default())?;
    if args.strict && !report.all_passed() {
        return Err(CliError::CheckFailed(report.failures().join("; ")));
    }
    Ok(report)
}

/// Dispatches a parsed command line; `argv` is recorded in reports.
pub fn run(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, argv),
        Command::Orbit(a) => orbit(a, argv),
        Command::Certify(a) => certify(a, argv).map(drop),
        Command::ReproducePaper(a) => reproduce_paper(&a.outdir, &a.solver, argv).map(drop),
    }
}
