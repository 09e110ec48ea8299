use std::f64::consts::SQRT_2;
use std::path::PathBuf;
use std::time::Instant;

use gibc_core::blayer::{
    defect_fields, fitted_decay_rate, layer_accuracy, ode_residual_check, CurvatureData,
    CutoffFunction, LayerExpansion, LayerProfile, LayerResolution,
};
use gibc_core::fracop::{
    antiderivative_commutation, boundary_quadratic_form, cq_weights, kernel_fourier_check,
    kernel_fourier_tail_bound, symbol, AbelMethod, CqScheme, TimeSignal,
};
use gibc_core::fsynth::{
    error_spectrum, parseval_check, refine_sweep, regime_split, synthesize, SweepSide,
};
use gibc_core::helmholtz::{
    compute_h, compute_we, error_freq, fd_solve_freq, solve_freq, ModeProblem, RadialSource,
};
use gibc_core::tdwave::{run_lockstep, Forcing, LockstepError, RunOptions, TdSolver};
use gibc_core::{EnergySample, MediumParams, Model, RadialGrid, TimeGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Context, LabError, LabResult};
use crate::fit::fit_slope;
use crate::report::{Cell, Check, Curve, ErrorReport, Metadata, SlopeRecord};

pub const TIME_HEADER: [&str; 8] = [
    "epsilon",
    "ell",
    "h",
    "dt",
    "err_Linf_H1K",
    "err_L2t_H1K",
    "energy_C",
    "runtime_s",
];
pub const FREQ_HEADER: [&str; 8] = [
    "k",
    "epsilon",
    "eps_hat",
    "ell",
    "err_H1",
    "err_kL2",
    "err_total",
    "runtime_s",
];
pub const XVAL_HEADER: [&str; 15] = [
    "epsilon",
    "ell",
    "dk",
    "k_max",
    "halvings",
    "refine_change",
    "xval_exact",
    "xval_approx",
    "parseval_time",
    "parseval_freq",
    "parseval_rel",
    "band_low",
    "band_mid",
    "band_high",
    "runtime_s",
];
pub const PARSEVAL_HEADER: [&str; 13] = [
    "epsilon",
    "ell",
    "dk",
    "k_max",
    "halvings",
    "refine_change",
    "parseval_time",
    "parseval_freq",
    "parseval_rel",
    "band_low",
    "band_mid",
    "band_high",
    "runtime_s",
];
pub const LAYER_HEADER: [&str; 10] = [
    "eps_hat",
    "ell",
    "q_l2",
    "q_interior_max",
    "q_exterior_max",
    "derivative_jump",
    "derivative_scale",
    "layer_accuracy",
    "h_abs",
    "runtime_s",
];
pub const KERNEL_HEADER: [&str; 4] = ["check", "measured", "threshold", "runtime_s"];

/// Relative energy increase per step tolerated after the forcing stops.
pub const PASSIVITY_TOL: f64 = 1e-8;
/// Largest accepted spread `max C / min C` of the fitted energy constant.
pub const ENERGY_SPREAD: f64 = 2.0;
pub const XVAL_TOL: f64 = 1e-2;
pub const PARSEVAL_TOL: f64 = 0.05;

/// A report plus the first failure, if a job failed part way. The report
/// then holds whatever finished.
pub struct Outcome {
    pub report: ErrorReport,
    pub failure: Option<LabError>,
}

/// Where and how to run.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

/// Runs the configured pipeline and writes its artifacts. On a numerical
/// failure the partial report is still written before the error returns.
pub fn run_experiment(config: &ExperimentConfig, settings: &RunSettings) -> LabResult<ErrorReport> {
    config.validate()?;
    let dir = config.prepare_output(settings.out_dir.as_deref())?;
    let outcome = match settings.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Validation(format!("cannot start {n} workers: {e}")))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    outcome.report.write_artifacts(&dir)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.report),
    }
}

/// Runs the pipeline in memory on the current thread pool.
pub fn execute(config: &ExperimentConfig) -> LabResult<Outcome> {
    config.validate()?;
    match config.kind {
        ExperimentKind::TimeConvergence => time_convergence(config),
        ExperimentKind::FreqConvergence => freq_convergence(config),
        ExperimentKind::CrossValidate => spectral(config, true),
        ExperimentKind::Parseval => spectral(config, false),
        ExperimentKind::LayerDiagnostics => layer_diagnostics(config),
        ExperimentKind::KernelChecks => kernel_checks(config),
    }
}

fn new_report(
    config: &ExperimentConfig,
    header: &[&str],
    grids: Vec<(String, f64)>,
) -> LabResult<ErrorReport> {
    Ok(ErrorReport::new(
        config.kind,
        header,
        Metadata {
            config_hash: config.hash()?,
            seed: config.seed,
            grids,
            record_runtime: config.record_runtime,
        },
    ))
}

fn split<T>(results: Vec<LabResult<T>>) -> (Vec<T>, Option<LabError>) {
    let mut done = Vec::with_capacity(results.len());
    let mut failure = None;
    for r in results {
        match r {
            Ok(v) => done.push(v),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    (done, failure)
}

fn grid_pairs(config: &ExperimentConfig) -> Vec<(f64, u32)> {
    config
        .epsilons
        .iter()
        .flat_map(|&e| config.ells.iter().map(move |&l| (e, l)))
        .collect()
}

/// `‖a − b‖ / ‖b‖`, zero when both vanish.
fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    match (num == 0.0, den == 0.0) {
        (true, _) => 0.0,
        (false, true) => f64::INFINITY,
        _ => (num / den).sqrt(),
    }
}

fn decimate(
    points: impl Iterator<Item = (f64, f64)>,
    len: usize,
    target: usize,
) -> Vec<(f64, f64)> {
    let stride = (len / target).max(1);
    points.step_by(stride).collect()
}

fn slope_record(
    curve: String,
    points: &[(f64, f64)],
    target: Option<f64>,
    tolerance: Option<f64>,
) -> LabResult<SlopeRecord> {
    Ok(SlopeRecord {
        curve,
        fit: fit_slope(points)?,
        target,
        tolerance,
    })
}

fn model_grid(model: Model, outer: f64, h: f64) -> gibc_core::Result<RadialGrid> {
    match model {
        Model::Exact => RadialGrid::whole(outer, h),
        _ => RadialGrid::exterior(outer, h),
    }
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::Exact => "exact",
        Model::Gibc0 => "gibc0",
        Model::Gibc1 => "gibc1",
    }
}

// time-domain convergence

struct TimeJob {
    eps: f64,
    ell: u32,
    error: LockstepError,
    energy_c: f64,
    worst_increase: f64,
    energy: Vec<EnergySample>,
    runtime: f64,
}

fn time_job(config: &ExperimentConfig, eps: f64, ell: u32) -> LabResult<TimeJob> {
    let start = Instant::now();
    let ctx = || format!("time-convergence at epsilon = {eps}, ell = {ell}");
    let sim = &config.sim;
    let time = sim.time_grid().context(ctx)?;
    let pulse = sim.pulse().context(ctx)?;
    let medium = MediumParams::new(eps).context(ctx)?;
    let forcing = Forcing::from_pulse(&pulse);
    let outer = sim.geometry.outer_radius;
    let solver = |model: Model| -> LabResult<TdSolver> {
        let grid = model_grid(model, outer, sim.h).context(ctx)?;
        TdSolver::new(model, grid, time, medium, forcing.clone(), CqScheme::Bdf2).context(ctx)
    };
    let exact = solver(Model::Exact)?;
    let approx = solver(Model::gibc(ell).context(ctx)?)?;
    let opts = RunOptions {
        energy: true,
        scheme_energy: true,
        probes: vec![],
    };
    let out =
        run_lockstep(&exact, &approx, (sim.probe_inner, sim.probe_outer), &opts).context(ctx)?;
    let run = out.approximation;
    let energy_c = run
        .energy
        .iter()
        .filter_map(|e| {
            let norm = pulse.l2_norm_sq_until(e.t);
            (e.t > 0.0 && norm > 0.0).then(|| e.value / (e.t * norm))
        })
        .fold(0.0, f64::max);
    // the scheme energy lags the solution by a step; skip two after the window
    let quiet = pulse.duration() + 2.0 * time.dt;
    let worst_increase = run
        .scheme_energy
        .windows(2)
        .filter(|w| w[0].t > quiet && w[0].value > 0.0)
        .map(|w| (w[1].value - w[0].value) / w[0].value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TimeJob {
        eps,
        ell,
        error: out.error,
        energy_c,
        worst_increase,
        energy: run.energy,
        runtime: start.elapsed().as_secs_f64(),
    })
}

/// Probe trace of one model on spacing `h` with `Δt = h/2`.
fn stepper_trace(config: &ExperimentConfig, model: Model, h: f64) -> LabResult<Vec<f64>> {
    let res = &config.resolution;
    let ctx = || format!("stepper ladder for {} at h = {h}", model_name(model));
    let dt = 0.5 * h;
    let time = TimeGrid {
        dt,
        steps: (res.richardson_t_final / dt).round() as usize,
    };
    let grid = model_grid(model, config.sim.geometry.outer_radius, h).context(ctx)?;
    let pulse = config.sim.pulse().context(ctx)?;
    let solver = TdSolver::new(
        model,
        grid,
        time,
        MediumParams::new(res.richardson_epsilon).context(ctx)?,
        Forcing::from_pulse(&pulse),
        CqScheme::Bdf2,
    )
    .context(ctx)?;
    let run = solver
        .run(&RunOptions {
            probes: vec![res.richardson_radius],
            ..Default::default()
        })
        .context(ctx)?;
    Ok(run.probes[0].value.samples.clone())
}

/// Richardson error estimates `(4/3)‖u_{h_i} − u_{h_{i+1}}‖` for every level
/// but the finest, on the coarsest time samples.
fn richardson_errors(traces: &[Vec<f64>]) -> Vec<f64> {
    let coarse_len = traces[0].len();
    let at = |level: usize, n: usize| traces[level][n << level];
    (0..traces.len() - 1)
        .map(|l| {
            let diff = (0..coarse_len)
                .map(|n| (at(l, n) - at(l + 1, n)).powi(2))
                .sum::<f64>()
                .sqrt();
            4.0 / 3.0 * diff
        })
        .collect()
}

fn time_convergence(config: &ExperimentConfig) -> LabResult<Outcome> {
    let sim = &config.sim;
    let time = sim.time_grid().context(|| "time grid".into())?;
    let outer = sim.geometry.outer_radius;
    let grids = vec![
        ("h".into(), sim.h),
        ("dt".into(), time.dt),
        ("steps".into(), time.steps as f64),
        ("nodes_exact".into(), (outer / sim.h).round() + 1.0),
        (
            "nodes_exterior".into(),
            ((outer - 1.0) / sim.h).round() + 1.0,
        ),
    ];
    let mut report = new_report(config, &TIME_HEADER, grids)?;
    let jobs: Vec<LabResult<TimeJob>> = grid_pairs(config)
        .into_par_iter()
        .map(|(e, l)| time_job(config, e, l))
        .collect();
    let (done, failure) = split(jobs);
    for j in &done {
        report.push_row(
            vec![
                j.eps.into(),
                j.ell.into(),
                sim.h.into(),
                time.dt.into(),
                j.error.linf_h1.into(),
                j.error.l2t_h1.into(),
                j.energy_c.into(),
            ],
            j.runtime,
        );
        report.curves.push(Curve::new(
            format!("energy_eps{}_l{}", j.eps, j.ell),
            "t",
            "E",
            decimate(
                j.energy.iter().map(|s| (s.t, s.value)),
                j.energy.len(),
                1000,
            ),
        ));
    }
    if failure.is_some() {
        return Ok(Outcome { report, failure });
    }

    for &ell in &config.ells {
        let rows: Vec<&TimeJob> = done.iter().filter(|j| j.ell == ell).collect();
        for (label, norm) in [("linf", 0), ("l2t", 1)] {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .map(|j| {
                    (
                        j.eps,
                        if norm == 0 {
                            j.error.linf_h1
                        } else {
                            j.error.l2t_h1
                        },
                    )
                })
                .collect();
            report.curves.push(Curve::new(
                format!("time_{label}_l{ell}"),
                "epsilon",
                "error",
                points.clone(),
            ));
            // the headline rate is judged on the sup-in-time norm
            let (target, tol) = if norm == 0 {
                (Some(ell as f64 + 1.0), Some(0.25))
            } else {
                (None, None)
            };
            report.push_slope(slope_record(
                format!("time_{label}_l{ell}"),
                &points,
                target,
                tol,
            )?);
        }
    }

    let cs: Vec<f64> = done.iter().map(|j| j.energy_c).collect();
    let (c_min, c_max) = cs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| {
        (lo.min(c), hi.max(c))
    });
    let stable = if c_max == 0.0 {
        true
    } else {
        c_min > 0.0 && c_max / c_min <= ENERGY_SPREAD
    };
    report.push_check(Check::new(
        "energy constant",
        stable,
        format!("fitted C in [{c_min:.4e}, {c_max:.4e}], allowed spread {ENERGY_SPREAD}x"),
    ));
    if config.ells.contains(&1) {
        let worst = done
            .iter()
            .filter(|j| j.ell == 1)
            .map(|j| j.worst_increase)
            .fold(f64::NEG_INFINITY, f64::max);
        report.push_check(Check::new(
            "energy passivity l1",
            worst <= PASSIVITY_TOL,
            format!("largest relative energy increase per step after forcing {worst:.3e}, tolerance {PASSIVITY_TOL:e}"),
        ));
    }

    stepper_order(config, &mut report)?;
    Ok(Outcome {
        report,
        failure: None,
    })
}

fn stepper_order(config: &ExperimentConfig, report: &mut ErrorReport) -> LabResult<()> {
    let ladder = &config.resolution.richardson_h;
    for model in [Model::Exact, Model::Gibc0, Model::Gibc1] {
        let traces = ladder
            .par_iter()
            .map(|&h| stepper_trace(config, model, h))
            .collect::<LabResult<Vec<_>>>()?;
        let errors = richardson_errors(&traces);
        let points: Vec<(f64, f64)> = ladder.iter().copied().zip(errors).collect();
        let name = format!("stepper_{}", model_name(model));
        report
            .curves
            .push(Curve::new(name.clone(), "h", "error", points.clone()));
        if points.iter().all(|p| p.1 > 0.0) {
            report.push_slope(slope_record(name, &points, Some(2.0), Some(0.3))?);
        } else {
            report.push_check(Check::new(
                name,
                false,
                "stepper differences vanish; no rate to fit",
            ));
        }
    }
    Ok(())
}

// frequency-domain convergence

struct FreqJob {
    k: f64,
    eps: f64,
    ell: u32,
    h1: f64,
    l2: f64,
    runtime: f64,
}

fn freq_job(
    k: f64,
    eps: f64,
    ell: u32,
    shell: (f64, f64),
    source: &RadialSource,
) -> LabResult<FreqJob> {
    let start = Instant::now();
    let e = error_freq(k, eps, ell, shell, source)
        .context(|| format!("frequency error at k = {k}, epsilon = {eps}, ell = {ell}"))?;
    Ok(FreqJob {
        k,
        eps,
        ell,
        h1: e.h1,
        l2: e.l2,
        runtime: start.elapsed().as_secs_f64(),
    })
}

fn total(j: &FreqJob) -> f64 {
    j.h1.hypot(j.l2)
}

fn freq_convergence(config: &ExperimentConfig) -> LabResult<Outcome> {
    let plan = &config.frequency;
    let shell = (1.0, plan.shell_outer);
    let pulse = config.sim.pulse().context(|| "pulse".into())?;
    let source = RadialSource::from_pulse(&pulse);
    let mut report = new_report(
        config,
        &FREQ_HEADER,
        vec![("shell_outer".into(), plan.shell_outer)],
    )?;
    let work: Vec<(f64, f64, u32)> = plan
        .wavenumbers
        .iter()
        .flat_map(|&k| grid_pairs(config).into_iter().map(move |(e, l)| (k, e, l)))
        .collect();
    let jobs: Vec<LabResult<FreqJob>> = work
        .into_par_iter()
        .map(|(k, e, l)| freq_job(k, e, l, shell, &source))
        .collect();
    let (done, failure) = split(jobs);
    for j in &done {
        report.push_row(
            vec![
                j.k.into(),
                j.eps.into(),
                (j.eps / j.k.sqrt()).into(),
                j.ell.into(),
                j.h1.into(),
                j.l2.into(),
                total(j).into(),
            ],
            j.runtime,
        );
    }
    if failure.is_some() {
        return Ok(Outcome { report, failure });
    }

    for &k in &plan.wavenumbers {
        for &ell in &config.ells {
            let points: Vec<(f64, f64)> = done
                .iter()
                .filter(|j| j.k == k && j.ell == ell)
                .map(|j| (j.eps / k.sqrt(), total(j)))
                .collect();
            let name = format!("freq_k{k}_l{ell}");
            report
                .curves
                .push(Curve::new(name.clone(), "eps_hat", "error", points.clone()));
            let tol = if k <= 1.0 { 0.2 } else { 0.3 };
            report.push_slope(slope_record(
                name,
                &points,
                Some(ell as f64 + 1.0),
                Some(tol),
            )?);
        }
    }

    let eps = plan.low_frequency_epsilon;
    for &ell in &config.ells {
        let ks = [eps * eps, eps * eps / 2.0, eps * eps / 4.0];
        let errs = ks
            .iter()
            .map(|&k| freq_job(k, eps, ell, shell, &source).map(|j| total(&j)))
            .collect::<LabResult<Vec<_>>>()?;
        let worst = errs[1..].iter().fold(0.0f64, |m, e| m.max(e / errs[0]));
        report.curves.push(Curve::new(
            format!("low_frequency_l{ell}"),
            "k",
            "error",
            ks.iter().copied().zip(errs.iter().copied()).collect(),
        ));
        report.push_check(Check::new(
            format!("low frequency l{ell}"),
            worst <= 2.0,
            format!(
                "error at k < eps^2 is at most {worst:.3}x the value at k = eps^2 = {:.3e}",
                ks[0]
            ),
        ));
    }

    let eps = plan.k_scan_epsilon;
    for &ell in &config.ells {
        let points = plan
            .k_scan
            .par_iter()
            .map(|&k| freq_job(k, eps, ell, shell, &source).map(|j| (k, total(&j))))
            .collect::<LabResult<Vec<_>>>()?;
        let name = format!("k_scan_l{ell}");
        report
            .curves
            .push(Curve::new(name.clone(), "k", "error", points.clone()));
        let fit = fit_slope(&points)?;
        let bound = 2.0 * ell as f64 + 7.0 + 0.5;
        report.push_check(Check::new(
            format!("k growth l{ell}"),
            fit.slope <= bound,
            format!("empirical k-exponent {:.3}, bound {bound}", fit.slope),
        ));
        report.slopes.push(SlopeRecord {
            curve: name,
            fit,
            target: None,
            tolerance: None,
        });
    }

    fd_order(config, &source, &mut report)?;
    Ok(Outcome {
        report,
        failure: None,
    })
}

fn fd_order(
    config: &ExperimentConfig,
    source: &RadialSource,
    report: &mut ErrorReport,
) -> LabResult<()> {
    let res = &config.resolution;
    let outer = config.sim.geometry.outer_radius;
    for model in [Model::Exact, Model::Gibc0, Model::Gibc1] {
        let ctx = || format!("finite-difference ladder for {}", model_name(model));
        let medium = MediumParams::new(res.fd_epsilon).context(ctx)?;
        let problem = ModeProblem::new(res.fd_k, medium, model, source.clone()).context(ctx)?;
        let closed = solve_freq(&problem).context(ctx)?;
        let points = res
            .fd_h
            .par_iter()
            .map(|&h| -> LabResult<(f64, f64)> {
                let grid = model_grid(model, outer, h).context(ctx)?;
                let fd = fd_solve_freq(&problem, &grid).context(ctx)?;
                let err = grid
                    .nodes()
                    .zip(&fd.values)
                    .filter(|(r, _)| *r >= 1.0)
                    .map(|(r, v)| (v - closed.value(r)).norm())
                    .fold(0.0, f64::max);
                Ok((h, err))
            })
            .collect::<LabResult<Vec<_>>>()?;
        let name = format!("fd_{}", model_name(model));
        report
            .curves
            .push(Curve::new(name.clone(), "h", "error", points.clone()));
        report.push_slope(slope_record(name, &points, Some(2.0), Some(0.2))?);
    }
    Ok(())
}

// cross-validation and Parseval

struct SpectralJob {
    eps: f64,
    ell: u32,
    dk: f64,
    k_max: f64,
    halvings: u32,
    change: f64,
    xval: Option<(f64, f64)>,
    parseval: (f64, f64),
    bands: [f64; 3],
    band_total: f64,
    traces: Vec<Curve>,
    runtime: f64,
}

impl SpectralJob {
    fn parseval_rel(&self) -> f64 {
        let (time, freq) = self.parseval;
        if time == freq {
            0.0
        } else {
            (time - freq).abs() / freq.abs().max(time.abs())
        }
    }
}

fn spectral_job(
    config: &ExperimentConfig,
    eps: f64,
    ell: u32,
    with_traces: bool,
) -> LabResult<SpectralJob> {
    let start = Instant::now();
    let ctx = || format!("{} at epsilon = {eps}, ell = {ell}", config.kind);
    let sim = &config.sim;
    let res = &config.resolution;
    let (lo, hi) = (sim.probe_inner, sim.probe_outer);
    let radii = [lo, 0.5 * (lo + hi), hi];
    let refined =
        refine_sweep(sim, eps, ell, &radii, res.refine_tol, res.max_halvings).context(ctx)?;
    let sweep = refined.sweep;
    let time = sim.time_grid().context(ctx)?;
    let pulse = sim.pulse().context(ctx)?;
    let medium = MediumParams::new(eps).context(ctx)?;
    let forcing = Forcing::from_pulse(&pulse);
    let outer = sim.geometry.outer_radius;
    let solver = |model: Model| -> LabResult<TdSolver> {
        let grid = model_grid(model, outer, sim.h).context(ctx)?;
        TdSolver::new(model, grid, time, medium, forcing.clone(), CqScheme::Bdf2).context(ctx)
    };
    let opts = RunOptions {
        probes: if with_traces { radii.to_vec() } else { vec![] },
        ..Default::default()
    };
    let out = run_lockstep(
        &solver(Model::Exact)?,
        &solver(Model::gibc(ell).context(ctx)?)?,
        (lo, hi),
        &opts,
    )
    .context(ctx)?;
    let spectrum = error_spectrum(&sweep, (lo, hi)).context(ctx)?;
    let parseval = parseval_check(out.error.rate_l2t_h1_sq, &spectrum);
    let split = regime_split(&spectrum, eps).context(ctx)?;

    let mut traces = Vec::new();
    let xval = if with_traces {
        let mut worst = [0.0f64; 2];
        for (slot, side, run) in [
            (0, SweepSide::Exact, &out.reference),
            (1, SweepSide::Approximation, &out.approximation),
        ] {
            let synth = synthesize(&sweep, side, &radii, time).context(ctx)?;
            for (s, p) in synth.iter().zip(&run.probes) {
                worst[slot] = worst[slot].max(relative_l2(&s.value.samples, &p.value.samples));
            }
            let mid = 1;
            let label = if slot == 0 { "exact" } else { "approx" };
            for (kind, signal) in [("synth", &synth[mid].value), ("td", &run.probes[mid].value)] {
                traces.push(Curve::new(
                    format!("trace_eps{eps}_l{ell}_{label}_{kind}"),
                    "t",
                    "u",
                    decimate(
                        signal
                            .samples
                            .iter()
                            .enumerate()
                            .map(|(n, v)| (signal.t(n), *v)),
                        signal.len(),
                        2000,
                    ),
                ));
            }
        }
        Some((worst[0], worst[1]))
    } else {
        None
    };
    Ok(SpectralJob {
        eps,
        ell,
        dk: sweep.grid.dk,
        k_max: sweep.grid.k_max(),
        halvings: refined.halvings,
        change: refined.change,
        xval,
        parseval,
        bands: [split.low.mass, split.mid.mass, split.high.mass],
        band_total: split.total,
        traces,
        runtime: start.elapsed().as_secs_f64(),
    })
}

fn spectral(config: &ExperimentConfig, with_traces: bool) -> LabResult<Outcome> {
    let header: &[&str] = if with_traces {
        &XVAL_HEADER
    } else {
        &PARSEVAL_HEADER
    };
    let sim = &config.sim;
    let time = sim.time_grid().context(|| "time grid".into())?;
    let grids = vec![
        ("h".into(), sim.h),
        ("dt".into(), time.dt),
        ("steps".into(), time.steps as f64),
        ("refine_tol".into(), config.resolution.refine_tol),
    ];
    let mut report = new_report(config, header, grids)?;
    let jobs: Vec<LabResult<SpectralJob>> = grid_pairs(config)
        .into_par_iter()
        .map(|(e, l)| spectral_job(config, e, l, with_traces))
        .collect();
    let (done, failure) = split(jobs);
    for j in done {
        let mut cells: Vec<Cell> = vec![
            j.eps.into(),
            j.ell.into(),
            j.dk.into(),
            j.k_max.into(),
            j.halvings.into(),
            j.change.into(),
        ];
        if let Some((ex, ap)) = j.xval {
            cells.extend([ex.into(), ap.into()]);
            report.push_check(Check::new(
                format!("cross-validation eps{} l{}", j.eps, j.ell),
                ex <= XVAL_TOL && ap <= XVAL_TOL,
                format!("synthesized vs stepped relative L2: exact {ex:.3e}, gibc{} {ap:.3e}, tolerance {XVAL_TOL:e}", j.ell),
            ));
        }
        let rel = j.parseval_rel();
        cells.extend([
            j.parseval.0.into(),
            j.parseval.1.into(),
            rel.into(),
            j.bands[0].into(),
            j.bands[1].into(),
            j.bands[2].into(),
        ]);
        report.push_check(Check::new(
            format!("parseval eps{} l{}", j.eps, j.ell),
            rel <= PARSEVAL_TOL,
            format!(
                "time side {:.6e}, frequency side {:.6e}, relative gap {rel:.3e}",
                j.parseval.0, j.parseval.1
            ),
        ));
        let band_sum: f64 = j.bands.iter().sum();
        report.push_check(Check::new(
            format!("regime partition eps{} l{}", j.eps, j.ell),
            (band_sum - j.band_total).abs() <= 1e-12 * j.band_total.abs().max(f64::MIN_POSITIVE),
            format!("bands sum to {band_sum:e}, total {:e}", j.band_total),
        ));
        report.push_row(cells, j.runtime);
        report.curves.extend(j.traces);
    }
    Ok(Outcome { report, failure })
}

// boundary layer

struct LayerJob {
    eps_hat: f64,
    ell: u32,
    q_l2: f64,
    q_interior_max: f64,
    q_exterior_max: f64,
    jump: f64,
    jump_scale: f64,
    accuracy: f64,
    h_abs: f64,
    runtime: f64,
}

/// Relative derivative jump accepted as discretization noise.
pub const JUMP_TOL: f64 = 1e-4;
/// Exterior residual allowed relative to the interior maximum.
pub const SUPPORT_TOL: f64 = 1e-6;

fn layer_job(
    config: &ExperimentConfig,
    source: &RadialSource,
    eps_hat: f64,
    ell: u32,
) -> LabResult<LayerJob> {
    let start = Instant::now();
    let ctx = || format!("layer diagnostics at eps_hat = {eps_hat}, ell = {ell}");
    let res = &config.resolution;
    let k = 1.0;
    let cutoff = CutoffFunction::new(config.sim.delta).context(ctx)?;
    let expansion = LayerExpansion::new(ell, k, eps_hat, source, cutoff).context(ctx)?;
    let defect = defect_fields(
        &expansion,
        LayerResolution {
            interior_per_eps_hat: res.interior_per_eps_hat,
            exterior_h: res.exterior_h,
            exterior_extent: LayerResolution::default().exterior_extent,
        },
    )
    .context(ctx)?;
    let accuracy = layer_accuracy(&expansion, res.layer_samples).context(ctx)?;
    let we = compute_we(1, k, source).context(ctx)?;
    let h_abs = compute_h(ell, eps_hat, &we).context(ctx)?.norm();
    Ok(LayerJob {
        eps_hat,
        ell,
        q_l2: defect.interior_q_l2,
        q_interior_max: defect.interior_q_max,
        q_exterior_max: defect.exterior_q_max,
        jump: defect.derivative_jump,
        jump_scale: defect.derivative_scale,
        accuracy,
        h_abs,
        runtime: start.elapsed().as_secs_f64(),
    })
}

fn profile_checks(
    config: &ExperimentConfig,
    source: &RadialSource,
    report: &mut ErrorReport,
) -> LabResult<()> {
    let ctx = || "boundary-layer profiles".to_string();
    let we = compute_we(1, 1.0, source).context(ctx)?;
    let (dn0, dn1) = (we.normal_derivatives[0], we.normal_derivatives[1]);
    // a vanishing source leaves nothing to fit; probe the profile shapes with unit data
    let dn0 = if dn0.norm() > 0.0 {
        dn0
    } else {
        Complex64::new(1.0, 0.0)
    };
    let curvature = CurvatureData::unit_sphere();
    let first = LayerProfile::First { dn0 };
    let second = LayerProfile::Second {
        dn0,
        dn1,
        mean_curvature: curvature.mean,
    };
    let rate = SQRT_2 / 2.0;
    let fits = [
        fitted_decay_rate(&first, 0.0, 20.0).context(ctx)?,
        fitted_decay_rate(&second, 200.0, 400.0).context(ctx)?,
    ];
    let worst = fits
        .iter()
        .map(|f| (f / rate - 1.0).abs())
        .fold(0.0, f64::max);
    report.push_check(Check::new(
        "profile decay",
        worst <= 0.01,
        format!(
            "fitted rates {:.6} and {:.6} against {rate:.6}",
            fits[0], fits[1]
        ),
    ));
    let residuals = [ode_residual_check(&first), ode_residual_check(&second)];
    report.push_check(Check::new(
        "profile equations",
        residuals.iter().all(|r| *r <= 1e-6),
        format!(
            "relative residuals {:.3e} (order 1), {:.3e} (order 2)",
            residuals[0], residuals[1]
        ),
    ));
    let samples = 1000;
    let j_err = (0..=samples)
        .map(|j| {
            let nu = config.sim.delta * j as f64 / samples as f64;
            (curvature.area_ratio(nu) - (1.0 - nu).powi(2)).abs()
        })
        .fold(0.0, f64::max);
    report.push_check(Check::new(
        "sphere area identity",
        j_err <= 1e-14,
        format!("max |1 + 2nu H + nu^2 G - (1 - nu)^2| = {j_err:.3e}"),
    ));
    Ok(())
}

fn layer_diagnostics(config: &ExperimentConfig) -> LabResult<Outcome> {
    let pulse = config.sim.pulse().context(|| "pulse".into())?;
    let source = RadialSource::from_pulse(&pulse);
    let res = &config.resolution;
    let grids = vec![
        ("interior_per_eps_hat".into(), res.interior_per_eps_hat),
        ("exterior_h".into(), res.exterior_h),
        ("delta".into(), config.sim.delta),
        ("k".into(), 1.0),
    ];
    let mut report = new_report(config, &LAYER_HEADER, grids)?;
    let jobs: Vec<LabResult<LayerJob>> = grid_pairs(config)
        .into_par_iter()
        .map(|(e, l)| layer_job(config, &source, e, l))
        .collect();
    let (done, failure) = split(jobs);
    for j in &done {
        report.push_row(
            vec![
                j.eps_hat.into(),
                j.ell.into(),
                j.q_l2.into(),
                j.q_interior_max.into(),
                j.q_exterior_max.into(),
                j.jump.into(),
                j.jump_scale.into(),
                j.accuracy.into(),
                j.h_abs.into(),
            ],
            j.runtime,
        );
    }
    if failure.is_some() {
        return Ok(Outcome { report, failure });
    }
    profile_checks(config, &source, &mut report)?;

    let support_ok = done
        .iter()
        .all(|j| j.q_exterior_max <= SUPPORT_TOL * j.q_interior_max);
    let worst_support = done
        .iter()
        .map(|j| {
            if j.q_interior_max > 0.0 {
                j.q_exterior_max / j.q_interior_max
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    report.push_check(Check::new(
        "residual support",
        support_ok,
        format!("exterior/interior residual ratio at most {worst_support:.3e}, tolerance {SUPPORT_TOL:e}"),
    ));
    let jump_ok = done.iter().all(|j| j.jump <= JUMP_TOL * j.jump_scale);
    let worst_jump = done
        .iter()
        .map(|j| {
            if j.jump_scale > 0.0 {
                j.jump / j.jump_scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    report.push_check(Check::new(
        "defect derivative jump",
        jump_ok,
        format!("relative jump at most {worst_jump:.3e}, tolerance {JUMP_TOL:e}"),
    ));

    if config.ells.contains(&0) {
        let h0 = done
            .iter()
            .filter(|j| j.ell == 0)
            .map(|j| j.h_abs)
            .fold(0.0, f64::max);
        report.push_check(Check::new(
            "h0 vanishes",
            h0 == 0.0,
            format!("max |h0| = {h0:e}"),
        ));
    }
    for &ell in &config.ells {
        let rows: Vec<&LayerJob> = done.iter().filter(|j| j.ell == ell).collect();
        let acc: Vec<(f64, f64)> = rows.iter().map(|j| (j.eps_hat, j.accuracy)).collect();
        report.curves.push(Curve::new(
            format!("layer_accuracy_l{ell}"),
            "eps_hat",
            "error",
            acc.clone(),
        ));
        let q: Vec<(f64, f64)> = rows.iter().map(|j| (j.eps_hat, j.q_l2)).collect();
        report.curves.push(Curve::new(
            format!("layer_q_l{ell}"),
            "eps_hat",
            "q_l2",
            q.clone(),
        ));
        if acc.iter().all(|p| p.1 > 0.0) {
            report.push_slope(slope_record(
                format!("layer_accuracy_l{ell}"),
                &acc,
                None,
                None,
            )?);
        }
        if q.iter().all(|p| p.1 > 0.0) {
            report.push_slope(slope_record(format!("layer_q_l{ell}"), &q, None, None)?);
        }
        if ell == 1 {
            let h: Vec<(f64, f64)> = rows.iter().map(|j| (j.eps_hat, j.h_abs)).collect();
            report
                .curves
                .push(Curve::new("h1", "eps_hat", "|h1|", h.clone()));
            if h.iter().all(|p| p.1 > 0.0) {
                report.push_slope(slope_record("h1".into(), &h, Some(2.0), Some(0.3))?);
            } else {
                report.push_check(Check::new("slope h1", false, "h1 vanishes; no rate to fit"));
            }
        }
    }
    Ok(Outcome {
        report,
        failure: None,
    })
}

// kernels and boundary operator

/// Random smooth signal with `v(0) = 0`: a few sine modes on `[0, T]`.
fn random_signal(rng: &mut ChaCha8Rng) -> (TimeSignal, f64) {
    let modes = rng.gen_range(1..6);
    let coeffs: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let steps = rng.gen_range(8..160);
    let dt = rng.gen_range(1e-3..0.1);
    let eps = rng.gen_range(0.02..2.0);
    let horizon = dt * steps as f64;
    let signal = TimeSignal::from_fn(dt, steps, |t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, a)| a * ((m as f64 + 0.5) * std::f64::consts::PI * t / horizon).sin())
            .sum()
    })
    .expect("positive step");
    (signal, eps)
}

fn kernel_checks(config: &ExperimentConfig) -> LabResult<Outcome> {
    let mut report = new_report(
        config,
        &KERNEL_HEADER,
        vec![("signals".into(), config.resolution.signals as f64)],
    )?;
    let mut rows: Vec<(&str, f64, f64, f64)> = Vec::new();

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let signals: Vec<(TimeSignal, f64)> = (0..config.resolution.signals)
        .map(|_| random_signal(&mut rng))
        .collect();
    let methods = [
        AbelMethod::Direct,
        AbelMethod::Cq(CqScheme::Bdf1),
        AbelMethod::Cq(CqScheme::Bdf2),
    ];
    let ratios = signals
        .par_iter()
        .map(|(v, eps)| -> LabResult<f64> {
            let energy: f64 = v.samples.iter().map(|x| x * x).sum::<f64>() * v.dt;
            let mut worst = f64::INFINITY;
            for m in methods {
                let q = boundary_quadratic_form(v, *eps, m)
                    .context(|| "boundary quadratic form".into())?;
                worst = worst.min(if energy > 0.0 { q / energy } else { 0.0 });
            }
            Ok(worst)
        })
        .collect::<LabResult<Vec<_>>>()?;
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push((
        "boundary_positivity",
        min_ratio,
        -1e-10,
        start.elapsed().as_secs_f64(),
    ));
    report.push_check(Check::new(
        "boundary positivity",
        min_ratio >= -1e-10,
        format!(
            "smallest quadratic form / input energy over {} signals and 3 schemes: {min_ratio:.3e}",
            signals.len()
        ),
    ));

    let start = Instant::now();
    let target = Complex64::new(0.5, 0.5);
    let schedule = [1e2, 1e4, 1e6];
    let mut errs = Vec::new();
    let mut within_bounds = true;
    for t in schedule {
        let v = kernel_fourier_check(1.0, t).context(|| "kernel transform".into())?;
        let err = (v - target).norm();
        within_bounds &= err <= kernel_fourier_tail_bound(1.0, t);
        errs.push((t, err));
    }
    let last = errs.last().map_or(f64::INFINITY, |e| e.1);
    rows.push(("kernel_symbol", last, 1e-3, start.elapsed().as_secs_f64()));
    report
        .curves
        .push(Curve::new("kernel_truncation", "T", "error", errs));
    report.push_check(Check::new(
        "kernel symbol",
        last <= 1e-3 && within_bounds,
        format!("|transform - (0.5 + 0.5i)| = {last:.3e} at T = 1e6; tail bound respected: {within_bounds}"),
    ));

    let start = Instant::now();
    let dt = 0.01;
    let weights = cq_weights(CqScheme::Bdf2, dt, 200_000).context(|| "CQ weights".into())?;
    let points = 12;
    let mut worst = 0.0f64;
    let mut curve = Vec::new();
    for &eps in &config.epsilons {
        let w = weights
            .clone()
            .with_epsilon(eps)
            .context(|| "CQ weights".into())?;
        for j in 0..points {
            let kdt = 0.01 * 50f64.powf(j as f64 / (points - 1) as f64);
            let k = kdt / dt;
            let exact = symbol(k, eps).context(|| "symbol".into())?;
            let rel = (w.transfer_function(k) - exact).norm() / exact.norm();
            worst = worst.max(rel);
            if eps == config.epsilons[0] {
                curve.push((kdt, rel));
            }
        }
    }
    rows.push(("cq_transfer", worst, 0.05, start.elapsed().as_secs_f64()));
    report
        .curves
        .push(Curve::new("cq_transfer", "k_dt", "relative_error", curve));
    report.push_check(Check::new(
        "cq transfer",
        worst < 0.05,
        format!("largest relative deviation from the symbol on k dt in [0.01, 0.5]: {worst:.3e}"),
    ));

    let start = Instant::now();
    let samples: Vec<f64> = (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let psi = TimeSignal::new(0.05, samples).expect("positive step");
    let (left, right) =
        antiderivative_commutation(&psi).context(|| "commutation identity".into())?;
    let gap = if left == right {
        0.0
    } else {
        (left - right).abs() / left.abs().max(right.abs())
    };
    rows.push(("commutation", gap, 1e-6, start.elapsed().as_secs_f64()));
    report.push_check(Check::new(
        "commutation",
        gap <= 1e-6,
        format!("antiderivative commutation sides {left:.12e} and {right:.12e}"),
    ));

    for (name, measured, threshold, runtime) in rows {
        report.push_row(
            vec![name.into(), measured.into(), threshold.into()],
            runtime,
        );
    }
    Ok(Outcome {
        report,
        failure: None,
    })
}
