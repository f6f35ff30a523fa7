//! One function per subcommand. Each validates the config, runs the
//! experiment and writes its CSV and `summary.txt`.
//!
//! Stages of one experiment that need independent randomness use master
//! seeds `seed`, `seed + 1`, `seed + 2`; within a stage every draw comes
//! from the `(seed, purpose, epoch, index)` streams of the library.

use std::path::{Path, PathBuf};

use fkqsd::dynamics::{ModelSpec, ModelState};
use fkqsd::fk_engine::{run_killed_weighted_path, step_count, LOG_WEIGHT_FLOOR};
use fkqsd::lyapunov::drift_scan;
use fkqsd::oracle::{richardson_ground_eigen, two_particle_reduction, RadialProblem};
use fkqsd::particle::{
    convergence_trace, fit_decay_rate, noise_floor, quasi_stationarity_check, run_smc,
    sample_from_histogram, Ensemble, Histogram, SmcRun,
};
use fkqsd::samplers::{
    char_function_sup_error, empirical_char_function, levy_increment, probe_frequencies, RngIncrements,
};
use fkqsd::streams::{stream, Purpose};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, OracleConfig};
use crate::output::{indexed, write_csv, Summary};
use crate::{Command, RunError};

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<(), RunError> {
    let model = cfg.model()?;
    let mut summary = Summary::default();
    summary.set("theorem_case", &cfg.theorem_case);
    summary.set("inf_V", model.potential().infimum());
    summary.set("command", command_name(command));
    summary.set("seed", cfg.output.seed);
    let dir = PathBuf::from(&cfg.output.directory);
    let outcome = match command {
        Command::Simulate => simulate(cfg, &model, &dir, &mut summary),
        Command::Lambda => lambda(cfg, &model, &dir, &mut summary),
        Command::Qsd => qsd(cfg, &model, &dir, &mut summary),
        Command::Convergence => convergence(cfg, &model, &dir, &mut summary),
        Command::Lyapunov => lyapunov(cfg, &model, &dir, &mut summary),
        Command::SamplerTest => sampler_test(cfg, &dir, &mut summary),
        Command::Oracle => oracle(cfg, &dir, &mut summary),
    };
    outcome?;
    summary.write(&dir, &cfg.to_toml())
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Lambda => "lambda",
        Command::Qsd => "qsd",
        Command::Convergence => "convergence",
        Command::Lyapunov => "lyapunov",
        Command::SamplerTest => "sampler-test",
        Command::Oracle => "oracle",
    }
}

fn simulate(cfg: &ExperimentConfig, model: &ModelSpec<f64>, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| RunError::Validation("simulate needs a [simulate] section".into()))?;
    if sim.n_paths < 2 {
        return Err(RunError::Validation("simulate needs at least 2 paths".into()));
    }
    let dt = cfg.particles.dt;
    let n_steps = step_count(sim.t, dt)?;
    let start = cfg.start_state(model)?;
    let seed = cfg.output.seed;
    let paths = (0..sim.n_paths as u64)
        .into_par_iter()
        .map(|j| {
            let mut noise = RngIncrements(stream(seed, Purpose::Path, 0, j));
            run_killed_weighted_path(model, start.clone(), dt, n_steps, &mut noise)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let d = start.x.len();
    let mut header: Vec<String> = ["path_id", "alive", "exit_step", "log_weight", "min_dist"]
        .map(String::from)
        .to_vec();
    header.extend(indexed("endpoint_x", d));
    if model.dynamics().is_kinetic() {
        header.extend(indexed("endpoint_v", d));
    }
    let rows: Vec<Vec<String>> = paths
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let mut row = vec![
                j.to_string(),
                p.alive.to_string(),
                p.exit_step.map_or_else(String::new, |s| s.to_string()),
                p.log_weight.to_string(),
                p.min_singularity_distance.to_string(),
            ];
            row.extend(p.endpoint.x.iter().map(f64::to_string));
            row.extend(p.endpoint.v.iter().map(f64::to_string));
            row
        })
        .collect();
    write_csv(dir, "paths.csv", &header, &rows)?;

    let values: Vec<f64> = paths
        .iter()
        .map(|p| {
            if p.alive && p.log_weight >= LOG_WEIGHT_FLOOR {
                p.log_weight.exp()
            } else {
                0.0
            }
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    summary.set("q_t_one", mean);
    summary.set("q_t_one_se", (var / n).sqrt());
    summary.set("alive_fraction", paths.iter().filter(|p| p.alive).count() as f64 / n);
    summary.set("horizon", sim.t);
    Ok(())
}

/// Runs the particle system, writes `lambda.csv` and the eigenvalue keys.
/// On extinction the trace is still written before the error returns.
fn particle_run(
    cfg: &ExperimentConfig,
    model: &ModelSpec<f64>,
    dir: &Path,
    summary: &mut Summary,
    binning: Option<&Histogram<f64>>,
) -> Result<SmcRun<f64>, RunError> {
    let ens = Ensemble::from_point(model, cfg.start_state(model)?, cfg.particles.n)?;
    let smc = cfg.smc();
    let run = run_smc(model, ens, &smc, cfg.output.seed, binning)?;
    let e = &run.ensemble;
    let rows: Vec<Vec<String>> = e
        .log_norm_trace
        .iter()
        .zip(&e.ess_trace)
        .enumerate()
        .map(|(k, (m, ess))| vec![k.to_string(), m.to_string(), ess.to_string()])
        .collect();
    write_csv(dir, "lambda.csv", &["epoch", "log_m", "ess"].map(String::from), &rows)?;
    summary.set("n_epochs", e.log_norm_trace.len());
    summary.set("burn_in", fkqsd::particle::burn_in_count(smc.epochs, smc.burn_in_fraction));
    summary.set("underflows", e.underflows);
    summary.set("min_ess", e.ess_trace.iter().copied().fold(f64::INFINITY, f64::min));
    summary.set("extinct", e.extinct);
    match run.lambda {
        Some((l, se)) => {
            summary.set("lambda_hat", l);
            summary.set("lambda_se", se);
            Ok(run)
        }
        None => Err(fkqsd::Error::Extinct { epoch: e.epoch_index }.into()),
    }
}

fn lambda(cfg: &ExperimentConfig, model: &ModelSpec<f64>, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    particle_run(cfg, model, dir, summary, None).map(|_| ())
}

fn qsd(cfg: &ExperimentConfig, model: &ModelSpec<f64>, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let binning = cfg.histogram()?;
    let run = particle_run(cfg, model, dir, summary, Some(&binning))?;
    let rho = run.qsd.expect("binning was supplied");
    let axes = rho.axes();
    let mut header = indexed("bin_center", axes);
    header.push("mass".into());
    let rows: Vec<Vec<String>> = rho
        .masses()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut row: Vec<String> = rho.cell_center(i).iter().map(f64::to_string).collect();
            row.push(m.to_string());
            row
        })
        .collect();
    write_csv(dir, "qsd.csv", &header, &rows)?;
    summary.set("qsd_overflow", rho.overflow());
    if model.dynamics().is_kinetic() {
        summary.set("qsd_tv_check_note", "not run: velocities are not binned");
    } else {
        let n = cfg.histogram.as_ref().map_or(0, |h| h.check_particles);
        let tv = quasi_stationarity_check(&rho, model, n, cfg.particles.delta, cfg.particles.dt, cfg.output.seed + 1)?;
        summary.set("qsd_tv_check", tv);
    }
    Ok(())
}

fn convergence(cfg: &ExperimentConfig, model: &ModelSpec<f64>, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let conv = cfg
        .convergence
        .clone()
        .ok_or_else(|| RunError::Validation("convergence needs a [convergence] section".into()))?;
    let binning = cfg.histogram()?;
    let run = particle_run(cfg, model, dir, summary, Some(&binning))?;
    let rho = run.qsd.expect("binning was supplied");
    let start: ModelState<f64> = cfg.state_at(model, conv.start.clone())?;
    let seed = cfg.output.seed;
    let dt = cfg.particles.dt;

    let point = Ensemble::from_point(model, start, conv.n)?;
    let trace = convergence_trace(model, point, &rho, conv.delta, dt, conv.epochs, seed + 1)?;
    let control = Ensemble::new(model, sample_from_histogram(&rho, model, conv.n, seed + 2)?)?;
    let control = convergence_trace(model, control, &rho, conv.delta, dt, conv.epochs, seed + 2)?;
    let header = ["t", "tv"].map(String::from);
    let rows = |points: &[(f64, f64)]| -> Vec<Vec<String>> {
        points.iter().map(|(t, tv)| vec![t.to_string(), tv.to_string()]).collect()
    };
    write_csv(dir, "convergence.csv", &header, &rows(&trace.points))?;
    write_csv(dir, "convergence_control.csv", &header, &rows(&control.points))?;
    summary.set("trace_extinct", trace.extinct);
    let floor = noise_floor(&control)?;
    summary.set("noise_floor", floor);
    summary.set("window_points", trace.points.iter().take_while(|p| p.1 > floor).count());
    match fit_decay_rate(&trace.points, floor) {
        Ok((slope, r2)) => {
            summary.set("decay_slope", slope);
            summary.set("decay_r2", r2);
        }
        Err(e) => summary.set("decay_fit_error", e.to_string().replace('\n', " ")),
    }
    Ok(())
}

fn lyapunov(cfg: &ExperimentConfig, model: &ModelSpec<f64>, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let (spec, p_list, scan) = cfg.lyapunov()?;
    let report = drift_scan(model, &spec, &p_list, &scan)?;
    let mut rows = Vec::new();
    for ps in &report.per_p {
        for (i, r) in report.coordinates.iter().enumerate() {
            rows.push(vec![r.to_string(), ps.p.to_string(), report.ratios[i].to_string(), ps.values[i].to_string()]);
        }
    }
    let header = ["scan_coordinate", "p", "ratio", "ratio_minus_pV"].map(String::from);
    write_csv(dir, "lyapunov.csv", &header, &rows)?;
    summary.set("m0", report.m0);
    summary.set("scan_passes", report.passes());
    for ps in &report.per_p {
        summary.set(&format!("p{}_endpoint_low", ps.p), ps.endpoint_low);
        summary.set(&format!("p{}_endpoint_high", ps.p), ps.endpoint_high);
        summary.set(&format!("p{}_max_outside_center", ps.p), ps.max_outside_center);
        summary.set(&format!("p{}_tail_monotone", ps.p), ps.tail_monotone);
        summary.set(
            &format!("p{}_k0", ps.p),
            ps.k0.map_or_else(|| "empty".to_string(), |(a, b)| format!("[{a}, {b}]")),
        );
    }
    Ok(())
}

fn sampler_test(cfg: &ExperimentConfig, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let st = cfg.sampler_test.clone().unwrap_or(crate::config::SamplerTestConfig {
        samples: 100_000,
        dts: vec![0.01, 0.1],
        probe_radius: 3.0,
    });
    let spec = cfg.levy()?;
    let freqs = probe_frequencies(spec.dim(), st.probe_radius);
    let bound = 4.0 / (st.samples as f64).sqrt() + 0.01;
    let mut rows = Vec::new();
    let mut pass = true;
    for (k, &dt) in st.dts.iter().enumerate() {
        let samples = (0..st.samples as u64)
            .into_par_iter()
            .map(|j| levy_increment(&spec, dt, &mut stream(cfg.output.seed, Purpose::Check, k as u64, j)))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, u) in freqs.iter().enumerate() {
            let emp = empirical_char_function(&samples, u)?;
            let exact = (-dt * spec.psi(u)).exp();
            let err = ((emp.re - exact).powi(2) + emp.im.powi(2)).sqrt();
            let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
            rows.push(vec![
                dt.to_string(),
                i.to_string(),
                norm.to_string(),
                emp.re.to_string(),
                emp.im.to_string(),
                exact.to_string(),
                err.to_string(),
            ]);
        }
        let sup = char_function_sup_error(&spec, dt, &samples, &freqs)?;
        pass &= sup <= bound;
        summary.set(&format!("sup_error_dt{dt}"), sup);
    }
    let header = ["dt", "frequency", "u_norm", "empirical_re", "empirical_im", "exact", "abs_error"].map(String::from);
    write_csv(dir, "sampler_test.csv", &header, &rows)?;
    summary.set("sup_error_bound", bound);
    summary.set("char_fn_pass", pass);
    Ok(())
}

fn oracle(cfg: &ExperimentConfig, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let oc = cfg
        .oracle
        .clone()
        .ok_or_else(|| RunError::Validation("oracle needs an [oracle] section".into()))?;
    let header = ["lambda_ref", "grid_n", "extrapolated", "error_bar"].map(String::from);
    let rows = match oc {
        OracleConfig::Radial { .. } | OracleConfig::Interval { .. } => {
            let v = cfg.oracle_potential()?;
            let problem = match oc {
                OracleConfig::Radial { dim, radius, n } => RadialProblem::radial(dim, radius, v, n)?,
                OracleConfig::Interval { lo, hi, n } => RadialProblem::interval(lo, hi, v, n)?,
                OracleConfig::TwoParticle { .. } => unreachable!(),
            };
            let r = richardson_ground_eigen(&problem)?;
            summary.set("lambda_ref", r.extrapolated);
            summary.set("lambda_ref_error_bar", r.error_bar);
            r.grid_n
                .iter()
                .zip(&r.lambdas)
                .map(|(n, l)| vec![l.to_string(), n.to_string(), r.extrapolated.to_string(), r.error_bar.to_string()])
                .collect::<Vec<_>>()
        }
        OracleConfig::TwoParticle { n } => {
            let (kappa, pair, dim) = cfg.reduction_inputs()?;
            let red = two_particle_reduction(kappa, pair, dim, n)?;
            summary.set("lambda_ref", red.total);
            summary.set("lambda_ref_error_bar", red.error_bar);
            summary.set("lambda_cm", red.lambda_cm.extrapolated);
            summary.set("lambda_rel", red.lambda_rel.extrapolated);
            summary.set("truncation_change", red.truncation_change);
            vec![vec![red.total.to_string(), n.to_string(), red.total.to_string(), red.error_bar.to_string()]]
        }
    };
    summary.set("lambda_ref_grids", rows.len());
    write_csv(dir, "oracle.csv", &header, &rows)?;
    Ok(())
}
