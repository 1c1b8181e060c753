//! The gene-regulation example: five trajectories from `(k/4, k/4, 5k/24)`, `k = 0..4`, their
//! figures, and the certificate of the common periodic limit.

use std::fs;
use std::path::Path;
use std::thread;

use perifix_core::integrate::{Trajectory, sample_trajectory, uniform_grid};
use perifix_core::poincare::iterate_orbit;
use perifix_core::sup_dist;

use crate::CliError;
use crate::args::{CertifyOptions, SolverArgs};
use crate::commands::{certify_model, solver_settings};
use crate::config::parse_model;
use crate::output::{
    Artifacts, phase_script, series_script, write_component, write_labelled_trajectories,
};
use crate::report::RunReport;

pub const EXAMPLE_MODEL: &str = include_str!("../models/gene_example.json");
pub const T_END: f64 = 200.0;
pub const DT: f64 = 0.05;
/// Agreement required between the trajectories and of each with its own time-shift.
pub const LIMIT_TOL: f64 = 1e-3;
const FIRST_PERIOD: usize = 40;
const SETTLED: (f64, f64) = (150.0, 195.0);

pub fn initial_point(k: usize) -> Vec<f64> {
    let k = k as f64;
    vec![k / 4.0, k / 4.0, 5.0 * k / 24.0]
}

/// Outcome of [`reproduce_paper`].
#[derive(Debug)]
pub struct PaperRun {
    pub report: RunReport,
    pub trajectories: Vec<Trajectory>,
    /// Largest pairwise sup-distance between trajectories at `t = 5j`, `j ≥ 40`.
    pub max_pairwise: f64,
    /// Largest `|x(t + 5) - x(t)|` over `t` in `[150, 195]` and all trajectories.
    pub max_shift_defect: f64,
    /// Largest distance between a trajectory and the orbit of the certified fixed point at
    /// `t = 5j`, `j ≥ 40`; infinite when the certificate has no fixed point.
    pub max_limit_distance: f64,
}

fn index_of(t: f64) -> usize {
    (t / DT).round() as usize
}

pub fn reproduce_paper(
    outdir: &Path,
    solver: &SolverArgs,
    argv: &[String],
) -> Result<PaperRun, CliError> {
    let loaded = parse_model(EXAMPLE_MODEL)?;
    let m = &loaded.model;
    let s = solver_settings(m, solver)?;
    fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;

    let grid = uniform_grid(0.0, T_END, index_of(T_END));
    let runs: Vec<Trajectory> = thread::scope(|scope| {
        let handles: Vec<_> = (0..5)
            .map(|k| {
                let grid = &grid;
                scope.spawn(move || sample_trajectory(m, 0.0, &initial_point(k), grid, &s))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trajectory thread panicked"))
            .collect::<Result<_, _>>()
    })?;

    let box_x = m.state_box();
    let (checks, certificate) = certify_model(
        &loaded,
        box_x.lo(),
        box_x.hi(),
        &s,
        solver.seed,
        &CertifyOptions::default(),
    )?;

    let multiples: Vec<usize> = (FIRST_PERIOD..)
        .map(|j| index_of(5.0 * j as f64))
        .take_while(|&i| i < grid.len())
        .collect();
    let mut max_pairwise: f64 = 0.0;
    for &i in &multiples {
        for a in 0..runs.len() {
            for b in a + 1..runs.len() {
                max_pairwise = max_pairwise.max(sup_dist(&runs[a].states[i], &runs[b].states[i]));
            }
        }
    }
    let shift = index_of(5.0);
    let mut max_shift_defect: f64 = 0.0;
    for tr in &runs {
        for i in index_of(SETTLED.0)..=index_of(SETTLED.1) {
            max_shift_defect = max_shift_defect.max(sup_dist(&tr.states[i + shift], &tr.states[i]));
        }
    }
    let mut max_limit_distance = f64::INFINITY;
    if let Some(r) = certificate.as_ref().and_then(|c| c.r.as_ref()) {
        let last = (grid.len() - 1) / shift;
        let orbit = iterate_orbit(m, r, last, &s)?;
        max_limit_distance = 0.0;
        for &i in &multiples {
            for tr in &runs {
                max_limit_distance =
                    max_limit_distance.max(sup_dist(&tr.states[i], &orbit.points[i / shift]));
            }
        }
    }

    let mut artifacts = Artifacts::default();
    let p = |name: &str| outdir.join(name);
    artifacts.write(&p("fig2.csv"), |w| write_labelled_trajectories(w, &runs))?;
    artifacts.write_str(
        &p("fig2.gp"),
        &phase_script("fig2.csv", "fig2.png", runs.len()),
    )?;
    for i in 0..3 {
        let csv = format!("fig{}.csv", i + 3);
        artifacts.write(&p(&csv), |w| write_component(w, &runs, i))?;
        let script = series_script(
            &csv,
            &format!("fig{}.png", i + 3),
            &format!("x{}", i + 1),
            runs.len(),
        );
        artifacts.write_str(&p(&format!("fig{}.gp", i + 3)), &script)?;
    }
    let cert_json = serde_json::to_string_pretty(&certificate).expect("certificates serialize");
    artifacts.write_str(&p("certificate.json"), &cert_json)?;

    let mut report = RunReport {
        command: "reproduce-paper".into(),
        argv: argv.to_vec(),
        model_digest: loaded.digest.clone(),
        model: loaded.config.clone(),
        settings: s,
        seed: Some(solver.seed),
        checks,
        certificate,
        metrics: Default::default(),
        files: Vec::new(),
    };
    report
        .metrics
        .insert("max_pairwise_distance".into(), max_pairwise);
    report
        .metrics
        .insert("max_shift_defect".into(), max_shift_defect);
    report
        .metrics
        .insert("max_limit_distance".into(), max_limit_distance);
    let report_path = p("report.json");
    report.files = artifacts
        .files()
        .iter()
        .chain([&report_path])
        .map(|f| f.display().to_string())
        .collect();
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    artifacts.write_str(&report_path, &json)?;

    if !(max_pairwise < LIMIT_TOL && max_shift_defect < LIMIT_TOL) {
        return Err(CliError::CheckFailed(format!(
            "trajectories do not share a 5-periodic limit: pairwise distance {max_pairwise:e}, \
             shift defect {max_shift_defect:e} (tolerance {LIMIT_TOL:e})"
        )));
    }
    Ok(PaperRun {
        report,
        trajectories: runs,
        max_pairwise,
        max_shift_defect,
        max_limit_distance,
    })
}
