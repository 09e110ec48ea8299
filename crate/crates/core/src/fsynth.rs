//! Frequency-domain route to time-domain fields: transform of the forcing,
//! sweeps of the radial solvers over a half-offset `k` grid, inverse
//! synthesis, the Parseval identity and the low/mid/high band split of the
//! error spectrum.
//!
//! Transform convention: `û(k) = (1/√(2π)) ∫ u(t) e^{ikt} dt`, so real
//! signals are recovered from `k > 0` by `u(t) = (2/√(2π)) ℜ ∫₀^∞ û e^{−ikt} dk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_positive, invalid, Error, Result};
use crate::fracop::TimeSignal;
use crate::helmholtz::{
    shell_norms_sq, solve_exact_freq, solve_gibc_freq, ModeProblem, ModeSolution, RadialSource,
};
use crate::model::{MediumParams, Model, SimConfig, SourcePulse, TimeGrid};
use crate::quad::gl16;

/// Spectral tail threshold relative to the peak used by bandwidth scans.
pub const BANDWIDTH_THRESHOLD: f64 = 1e-12;

/// Midpoint grid `k_j = (j + ½) Δk`, `j < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub dk: f64,
    pub len: usize,
}

impl KGrid {
    /// Cells of width `dk` covering `(0, k_max]`.
    pub fn new(dk: f64, k_max: f64) -> Result<Self> {
        check_positive("dk", dk)?;
        check_positive("k_max", k_max)?;
        Ok(Self {
            dk,
            len: (k_max / dk).ceil().max(1.0) as usize,
        })
    }

    pub fn k(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dk
    }

    pub fn k_max(&self) -> f64 {
        self.len as f64 * self.dk
    }

    pub fn ks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.k(j))
    }
}

/// Values of a transform on a [`KGrid`]; negative frequencies follow by
/// conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: KGrid,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Trapezoid transform of a signal extended by zero for `t < 0`.
pub fn forward_ft(v: &TimeSignal, grid: &KGrid) -> Spectrum {
    let n = v.len();
    let values = grid
        .ks()
        .map(|k| {
            let step = Complex64::from_polar(1.0, k * v.dt);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, x) in v.samples.iter().enumerate() {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc += phase * (w * x);
                phase *= step;
            }
            acc * v.dt / (2.0 * PI).sqrt()
        })
        .collect();
    Spectrum {
        grid: *grid,
        values,
    }
}

/// Midpoint-rule inverse transform of a real signal's spectrum.
pub fn inverse_ft(s: &Spectrum, time: TimeGrid) -> TimeSignal {
    let samples = synthesize_values(&s.grid, &s.values, time);
    TimeSignal {
        dt: time.dt,
        samples,
    }
}

fn synthesize_values(grid: &KGrid, values: &[Complex64], time: TimeGrid) -> Vec<f64> {
    let mut out = vec![0.0; time.steps + 1];
    for (j, v) in values.iter().enumerate() {
        let k = grid.k(j);
        let step = Complex64::from_polar(1.0, -k * time.dt);
        let mut z = *v;
        for o in out.iter_mut() {
            *o += z.re;
            z *= step;
        }
    }
    let c = 2.0 * grid.dk / (2.0 * PI).sqrt();
    out.iter_mut().for_each(|o| *o *= c);
    out
}

/// Transform of the temporal part of a pulse, by panel quadrature.
pub fn pulse_spectrum(pulse: &SourcePulse, k: f64) -> Complex64 {
    let (lo, hi) = (pulse.temporal.lo, pulse.temporal.hi);
    let panels = ((k.abs() * (hi - lo) / PI).ceil() as usize).max(16);
    let step = (hi - lo) / panels as f64;
    let rule = gl16();
    (0..panels)
        .map(|p| {
            let a = lo + p as f64 * step;
            rule.integrate(a, a + step, |t| {
                Complex64::from_polar(pulse.temporal(t), k * t)
            })
        })
        .sum::<Complex64>()
        / (2.0 * PI).sqrt()
}

/// Smallest `k_max` (a multiple of `dk`) beyond which `|f(k)|` stays below
/// `threshold` times its peak. The scan walks a coarse grid (step at least
/// 1) and confirms the tail up to twice the candidate.
pub fn bandwidth_scan(
    f: impl Fn(f64) -> f64,
    dk: f64,
    threshold: f64,
    k_limit: f64,
) -> Result<f64> {
    check_positive("dk", dk)?;
    check_positive("k_limit", k_limit)?;
    let step = dk * (1.0 / dk).ceil().max(1.0);
    let mut peak = 0.0f64;
    let mut last_above = 0.0f64;
    let mut last_mag = 0.0;
    let mut k = 0.5 * dk;
    while k <= 2.0 * k_limit {
        let m = f(k);
        peak = peak.max(m);
        if m >= threshold * peak && m > 0.0 {
            last_above = k;
        }
        last_mag = m;
        if k > 2.0 * last_above + 20.0 * step {
            break;
        }
        k += step;
    }
    if peak == 0.0 {
        return Ok(dk);
    }
    let k_max = ((last_above + step) / dk).ceil() * dk;
    if k_max > k_limit {
        return Err(Error::Bandwidth {
            tail: last_mag / peak,
            threshold,
            k_max: k_limit,
        });
    }
    Ok(k_max)
}

/// Bandwidth of a pulse's temporal spectrum.
pub fn pulse_bandwidth(pulse: &SourcePulse, dk: f64) -> Result<f64> {
    bandwidth_scan(
        |k| pulse_spectrum(pulse, k).norm(),
        dk,
        BANDWIDTH_THRESHOLD,
        5000.0,
    )
}

/// Closed-form solutions of both models on a `k` grid.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub grid: KGrid,
    pub approx_model: Model,
    pub epsilon: f64,
    pub pulse_hat: Vec<Complex64>,
    pub exact: Vec<ModeSolution>,
    pub approx: Vec<ModeSolution>,
}

/// Which side of a sweep to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSide {
    Exact,
    Approximation,
}

/// Solves both models at every `k` with source `−ĝ(k) s(r)`, the transform
/// of the forcing moved to the right-hand side of the Helmholtz form.
pub fn freq_sweep(config: &SimConfig, eps: f64, ell: u32, grid: &KGrid) -> Result<Sweep> {
    config.validate()?;
    let pulse = config.pulse()?;
    let medium = MediumParams::new(eps)?;
    let model = Model::gibc(ell)?;
    let spatial = RadialSource::from_pulse(&pulse);
    let solved: Vec<(Complex64, ModeSolution, ModeSolution)> = (0..grid.len)
        .into_par_iter()
        .map(|j| {
            let k = grid.k(j);
            let g = pulse_spectrum(&pulse, k);
            let source = spatial.clone().scaled(-g);
            let solve = || -> Result<(ModeSolution, ModeSolution)> {
                let e =
                    solve_exact_freq(&ModeProblem::new(k, medium, Model::Exact, source.clone())?)?;
                let a = solve_gibc_freq(&ModeProblem::new(k, medium, model, source.clone())?)?;
                Ok((e, a))
            };
            solve()
                .map(|(e, a)| (g, e, a))
                .map_err(|err| Error::AtFrequency {
                    k,
                    source: Box::new(err),
                })
        })
        .collect::<Result<_>>()?;
    let mut pulse_hat = Vec::with_capacity(grid.len);
    let mut exact = Vec::with_capacity(grid.len);
    let mut approx = Vec::with_capacity(grid.len);
    for (g, e, a) in solved {
        pulse_hat.push(g);
        exact.push(e);
        approx.push(a);
    }
    Ok(Sweep {
        grid: *grid,
        approx_model: model,
        epsilon: eps,
        pulse_hat,
        exact,
        approx,
    })
}

impl Sweep {
    pub fn side(&self, side: SweepSide) -> &[ModeSolution] {
        match side {
            SweepSide::Exact => &self.exact,
            SweepSide::Approximation => &self.approx,
        }
    }

    /// Largest jump of `|û(k, r)|` between neighbouring grid frequencies
    /// above `k_min`, relative to the largest `|û|` there. The phase turns by
    /// about `Δk·t` per cell for a signal centred at time `t`, so only the
    /// modulus is compared.
    pub fn max_relative_jump(&self, side: SweepSide, r: f64, k_min: f64) -> f64 {
        let v: Vec<f64> = self
            .side(side)
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.k(*j) >= k_min)
            .map(|(_, s)| s.value(r).norm())
            .collect();
        let peak = v.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        v.windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    /// Refuses synthesis if the forcing spectrum is not negligible at the
    /// top of the grid.
    pub fn check_bandwidth(&self, threshold: f64) -> Result<()> {
        let peak = self.pulse_hat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let tail = self.pulse_hat.last().map_or(0.0, |z| z.norm()) / peak;
        if tail > threshold {
            return Err(Error::Bandwidth {
                tail,
                threshold,
                k_max: self.grid.k_max(),
            });
        }
        Ok(())
    }
}

/// Synthesized `u` and `∂_r u` at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace {
    pub radius: f64,
    pub value: TimeSignal,
    pub gradient: TimeSignal,
}

/// Inverse transform of one side of a sweep at the given radii.
pub fn synthesize(
    sweep: &Sweep,
    side: SweepSide,
    radii: &[f64],
    time: TimeGrid,
) -> Result<Vec<SynthTrace>> {
    sweep.check_bandwidth(1e3 * BANDWIDTH_THRESHOLD)?;
    let sols = sweep.side(side);
    radii
        .iter()
        .map(|&r| {
            if side == SweepSide::Approximation && r < 1.0 {
                return Err(Error::Domain(format!(
                    "impedance fields are not defined at r = {r}"
                )));
            }
            let (vals, grads): (Vec<Complex64>, Vec<Complex64>) =
                sols.iter().map(|s| (s.value(r), s.derivative(r))).unzip();
            Ok(SynthTrace {
                radius: r,
                value: TimeSignal {
                    dt: time.dt,
                    samples: synthesize_values(&sweep.grid, &vals, time),
                },
                gradient: TimeSignal {
                    dt: time.dt,
                    samples: synthesize_values(&sweep.grid, &grads, time),
                },
            })
        })
        .collect()
}

/// Outcome of [`refine_sweep`]: the accepted sweep and the relative change
/// of the synthesized traces over its last halving of `Δk`.
#[derive(Debug, Clone)]
pub struct RefinedSweep {
    pub sweep: Sweep,
    pub change: f64,
    pub halvings: u32,
}

fn probe_values(sweep: &Sweep, radii: &[f64], time: TimeGrid) -> Vec<Vec<f64>> {
    [SweepSide::Exact, SweepSide::Approximation]
        .into_iter()
        .flat_map(|side| {
            let sols = sweep.side(side);
            radii.iter().map(move |&r| {
                let vals: Vec<Complex64> = sols.iter().map(|s| s.value(r)).collect();
                synthesize_values(&sweep.grid, &vals, time)
            })
        })
        .collect()
}

fn relative_change(coarse: &[Vec<f64>], fine: &[Vec<f64>]) -> f64 {
    let (num, den) = coarse
        .iter()
        .flatten()
        .zip(fine.iter().flatten())
        .fold((0.0, 0.0), |(n, d), (p, q)| {
            (n + (p - q).powi(2), d + q * q)
        });
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Halves `Δk` from the configured value until the synthesized probe traces
/// of both models change by at most `tol` (relative L²) over one halving.
///
/// The half-offset grid makes the synthesis anti-periodic with period
/// `2π/Δk`, so slowly decaying fields need a finer grid than the default.
pub fn refine_sweep(
    config: &SimConfig,
    eps: f64,
    ell: u32,
    radii: &[f64],
    tol: f64,
    max_halvings: u32,
) -> Result<RefinedSweep> {
    check_positive("tol", tol)?;
    if radii.iter().any(|&r| r < 1.0) {
        return Err(Error::Domain(
            "refinement probes must lie outside the obstacle".into(),
        ));
    }
    let time = config.time_grid()?;
    let pulse = config.pulse()?;
    let mut dk = config.dk();
    let k_max = match config.k_max {
        Some(k) => k,
        None => pulse_bandwidth(&pulse, dk)?,
    };
    let mut coarse = probe_values(
        &freq_sweep(config, eps, ell, &KGrid::new(dk, k_max)?)?,
        radii,
        time,
    );
    let mut change = f64::INFINITY;
    for halvings in 1..=max_halvings {
        dk *= 0.5;
        let fine = freq_sweep(config, eps, ell, &KGrid::new(dk, k_max)?)?;
        let values = probe_values(&fine, radii, time);
        change = relative_change(&coarse, &values);
        if change <= tol {
            return Ok(RefinedSweep {
                sweep: fine,
                change,
                halvings,
            });
        }
        coarse = values;
    }
    Err(Error::Unconverged {
        what: "k-grid refinement",
        achieved: change,
        tol,
    })
}

/// `k² ‖(û^ε − û^a)(k)‖²_{H¹(K)}` on the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSpectrum {
    pub grid: KGrid,
    pub density: Vec<f64>,
}

impl ErrorSpectrum {
    /// `2 ∫ density dk` by the midpoint rule.
    pub fn integral(&self) -> f64 {
        2.0 * self.grid.dk * self.density.iter().sum::<f64>()
    }
}

pub fn error_spectrum(sweep: &Sweep, probe: (f64, f64)) -> Result<ErrorSpectrum> {
    let (lo, hi) = probe;
    if !(lo >= 1.0 && hi > lo) {
        return Err(invalid(
            "probe",
            format!("({lo}, {hi}) must be a shell outside the obstacle"),
        ));
    }
    let density = sweep
        .exact
        .iter()
        .zip(&sweep.approx)
        .enumerate()
        .map(|(j, (e, a))| {
            let k = sweep.grid.k(j);
            let (v, g) = shell_norms_sq(lo, hi, |r| {
                (e.value(r) - a.value(r), e.derivative(r) - a.derivative(r))
            });
            k * k * (v + g)
        })
        .collect();
    Ok(ErrorSpectrum {
        grid: sweep.grid,
        density,
    })
}

/// Both sides of `∫ ‖∂_t e‖²_{H¹(K)} dt = 2 ∫ k² ‖ê‖²_{H¹(K)} dk`: the left one
/// supplied by a time-domain run, the right one from the error spectrum.
pub fn parseval_check(time_side: f64, spectral: &ErrorSpectrum) -> (f64, f64) {
    (time_side, spectral.integral())
}

/// Mass of one frequency band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMass {
    pub mass: f64,
    /// `false` when no grid cell center falls in the band.
    pub resolved: bool,
    /// For an unresolved band, the mass of the first cell, which bounds it.
    pub bound: Option<f64>,
}

/// Split of the error integral over `(0, ε²]`, `(ε², 1]` and `(1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSplit {
    pub low: BandMass,
    pub mid: BandMass,
    pub high: BandMass,
    pub total: f64,
}

/// Assigns each cell to the band containing its center.
pub fn regime_split(spectral: &ErrorSpectrum, eps: f64) -> Result<RegimeSplit> {
    check_positive("eps", eps)?;
    let cut_low = eps * eps;
    let cut_high = 1.0;
    let dk = spectral.grid.dk;
    let mut mass = [0.0f64; 3];
    let mut count = [0usize; 3];
    for (j, d) in spectral.density.iter().enumerate() {
        let k = spectral.grid.k(j);
        let band = if k <= cut_low {
            0
        } else if k <= cut_high {
            1
        } else {
            2
        };
        mass[band] += 2.0 * dk * d;
        count[band] += 1;
    }
    let first_cell = spectral.density.first().map_or(0.0, |d| 2.0 * dk * d);
    let band = |i: usize, empty_allowed: bool| BandMass {
        mass: mass[i],
        resolved: count[i] > 0 || empty_allowed,
        bound: (count[i] == 0 && !empty_allowed).then_some(first_cell),
    };
    // the mid band is legitimately empty when ε ≥ 1
    let low = band(0, false);
    let mid = band(1, cut_low >= cut_high);
    let high = band(2, true);
    Ok(RegimeSplit {
        low,
        mid,
        high,
        total: mass.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Geometry;

    fn pulse() -> SourcePulse {
        SourcePulse::new(2.0, &Geometry::default(), 1.0).unwrap()
    }

    #[test]
    fn zero_signal_has_zero_spectrum() {
        let v = TimeSignal::zeros(0.01, 100).unwrap();
        let s = forward_ft(&v, &KGrid::new(0.2, 10.0).unwrap());
        assert!(s.values.iter().all(|z| z.norm() == 0.0));
        let back = inverse_ft(
            &s,
            TimeGrid {
                dt: 0.01,
                steps: 99,
            },
        );
        assert!(back.samples.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn pulse_spectrum_matches_sampled_transform() {
        let p = pulse();
        let dt = 1e-3;
        let v = TimeSignal::from_fn(dt, 2000, |t| p.temporal(t)).unwrap();
        let grid = KGrid::new(0.5, 40.0).unwrap();
        let s = forward_ft(&v, &grid);
        for (j, z) in s.values.iter().enumerate() {
            assert!((z - pulse_spectrum(&p, grid.k(j))).norm() < 1e-12);
        }
    }

    #[test]
    fn bandwidth_of_the_pulse() {
        let p = pulse();
        let dk = PI / 16.0;
        let k_max = pulse_bandwidth(&p, dk).unwrap();
        let peak = pulse_spectrum(&p, 0.5 * dk).norm();
        for k in [k_max + dk, 1.3 * k_max, 2.0 * k_max] {
            assert!(pulse_spectrum(&p, k).norm() < BANDWIDTH_THRESHOLD * peak);
        }
        assert!(matches!(
            bandwidth_scan(|k| (-k).exp(), 0.1, 1e-12, 10.0),
            Err(Error::Bandwidth { .. })
        ));
    }

    #[test]
    fn round_trip_recovers_in_band_signal() {
        let p = pulse();
        let dt = 2e-3;
        let time = TimeGrid { dt, steps: 4000 };
        let v = TimeSignal::from_fn(dt, time.steps, |t| p.temporal(t)).unwrap();
        let dk = PI / 16.0;
        let k_max = pulse_bandwidth(&p, dk).unwrap();
        assert!(k_max < PI / dt, "band {k_max} beyond Nyquist");
        let s = forward_ft(&v, &KGrid::new(dk, k_max).unwrap());
        let back = inverse_ft(&s, time);
        let num: f64 = v
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = v.samples.iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() < 1e-6, "{}", (num / den).sqrt());
    }

    #[test]
    fn two_sided_synthesis_is_real() {
        let p = pulse();
        let grid = KGrid::new(0.25, 60.0).unwrap();
        let vals: Vec<Complex64> = grid.ks().map(|k| pulse_spectrum(&p, k)).collect();
        let t = 0.7;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            let k = grid.k(j);
            acc += v * Complex64::from_polar(1.0, -k * t)
                + v.conj() * Complex64::from_polar(1.0, k * t);
        }
        assert!(acc.im.abs() <= 1e-10 * acc.norm());
    }

    #[test]
    fn refinement_halves_dk_until_traces_settle() {
        let cfg = SimConfig {
            t_final: 4.0,
            h: 4e-3,
            ..SimConfig::default()
        };
        let radii = [1.35];
        assert!(matches!(
            refine_sweep(&cfg, 0.3, 1, &radii, 1e-3, 0),
            Err(Error::Unconverged { .. })
        ));
        let out = refine_sweep(&cfg, 0.3, 1, &radii, 1e-2, 6).unwrap();
        assert!(out.change <= 1e-2);
        let ratio = cfg.dk() / out.sweep.grid.dk;
        assert!((ratio - 2f64.powi(out.halvings as i32)).abs() < 1e-9);
        assert!(refine_sweep(&cfg, 0.3, 1, &[0.5], 1e-2, 2).is_err());
    }

    #[test]
    fn sweep_matches_direct_solve_and_is_smooth() {
        let cfg = SimConfig::default();
        let grid = KGrid::new(cfg.dk(), 20.0).unwrap();
        let sw = freq_sweep(&cfg, 0.1, 1, &grid).unwrap();
        let j = 7;
        let k = grid.k(j);
        let src = RadialSource::from_pulse(&cfg.pulse().unwrap())
            .scaled(-pulse_spectrum(&cfg.pulse().unwrap(), k));
        let direct = solve_exact_freq(
            &ModeProblem::new(k, MediumParams::new(0.1).unwrap(), Model::Exact, src).unwrap(),
        )
        .unwrap();
        assert_eq!(sw.exact[j].value(1.3), direct.value(1.3));
        for side in [SweepSide::Exact, SweepSide::Approximation] {
            // below k ~ 1 the spectra vary on the scale ε² and √k
            let jump = sw.max_relative_jump(side, 1.35, 1.0);
            assert!(jump <= 0.1, "{side:?}: {jump}");
        }
    }

    #[test]
    fn zero_pulse_gives_zero_sweep() {
        let cfg = SimConfig {
            amplitude: 0.0,
            ..SimConfig::default()
        };
        let grid = KGrid::new(cfg.dk(), 5.0).unwrap();
        let sw = freq_sweep(&cfg, 0.1, 1, &grid).unwrap();
        assert!(sw.exact.iter().all(|s| s.value(1.3).norm() == 0.0));
        let tr = synthesize(
            &sw,
            SweepSide::Exact,
            &[1.3],
            TimeGrid { dt: 0.1, steps: 10 },
        )
        .unwrap();
        assert!(tr[0].value.samples.iter().all(|x| *x == 0.0));
        let es = error_spectrum(&sw, (1.25, 1.45)).unwrap();
        assert_eq!(parseval_check(0.0, &es), (0.0, 0.0));
    }

    #[test]
    fn truncated_sweep_is_refused() {
        let cfg = SimConfig::default();
        let grid = KGrid::new(cfg.dk(), 5.0).unwrap();
        let sw = freq_sweep(&cfg, 0.1, 0, &grid).unwrap();
        let err = synthesize(
            &sw,
            SweepSide::Exact,
            &[1.3],
            TimeGrid { dt: 0.1, steps: 10 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Bandwidth { .. }));
    }

    #[test]
    fn regime_partition() {
        let grid = KGrid::new(0.1, 3.0).unwrap();
        let es = ErrorSpectrum {
            grid,
            density: grid.ks().map(|k| (-k).exp()).collect(),
        };
        let split = regime_split(&es, 0.5).unwrap();
        let sum = split.low.mass + split.mid.mass + split.high.mass;
        assert!((sum - split.total).abs() <= 1e-12 * split.total);
        assert!((split.total - es.integral()).abs() <= 1e-12 * split.total);
        assert!(split.low.resolved && split.low.mass <= split.total);
        // ε = 1: nothing between ε² and 1
        let one = regime_split(&es, 1.0).unwrap();
        assert_eq!(one.mid.mass, 0.0);
        assert!(one.mid.resolved);
        // the low band below the first cell center is flagged
        let small = regime_split(&es, 0.05).unwrap();
        assert!(!small.low.resolved);
        assert_eq!(small.low.bound, Some(2.0 * 0.1 * (-0.05f64).exp()));
    }
}
