//! Shared domain types: the skin constant, medium, geometry, grids, source
//! pulse, absorption profile, impedance coefficients and the exterior energy.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, invalid, Error, Result};

/// The skin-effect phase constant `√2/2 − i√2/2`. Its square is `−i`.
pub const ALPHA: Complex64 = Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);

/// Radius of the obstacle. Every geometry in this crate is scaled to it.
pub const OBSTACLE_RADIUS: f64 = 1.0;

/// Absorption scale of the obstacle, `σ = 1/ε²` inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    epsilon: f64,
}

impl MediumParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Frequency-scaled skin parameter `ε/√k`.
    pub fn eps_hat(&self, k: f64) -> Result<f64> {
        check_positive("k", k)?;
        Ok(self.epsilon / k.sqrt())
    }

    pub fn sigma(&self) -> f64 {
        1.0 / (self.epsilon * self.epsilon)
    }
}

/// Which model a solve or a run refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Full transmission problem with the absorbing interior.
    Exact,
    /// Exterior problem with the order-0 condition (Dirichlet).
    Gibc0,
    /// Exterior problem with the order-1 impedance condition.
    Gibc1,
}

impl Model {
    pub fn gibc(ell: u32) -> Result<Self> {
        match ell {
            0 => Ok(Model::Gibc0),
            1 => Ok(Model::Gibc1),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    /// Impedance order, `None` for the exact model.
    pub fn order(&self) -> Option<u32> {
        match self {
            Model::Exact => None,
            Model::Gibc0 => Some(0),
            Model::Gibc1 => Some(1),
        }
    }
}

/// Unit ball obstacle, source annulus `(a, b)` and truncation radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub source_inner: f64,
    pub source_outer: f64,
    pub outer_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            source_inner: 1.5,
            source_outer: 2.0,
            outer_radius: 6.0,
        }
    }
}

impl Geometry {
    pub fn new(source_inner: f64, source_outer: f64, outer_radius: f64) -> Result<Self> {
        let g = Self {
            source_inner,
            source_outer,
            outer_radius,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, r) = (self.source_inner, self.source_outer, self.outer_radius);
        if !(a.is_finite() && b.is_finite() && r.is_finite()) {
            return Err(invalid("geometry", "radii must be finite"));
        }
        if !(OBSTACLE_RADIUS < a && a < b && b < r) {
            return Err(invalid(
                "geometry",
                format!("need 1 < a < b < R, got a = {a}, b = {b}, R = {r}"),
            ));
        }
        Ok(())
    }

    pub const DIMENSION: usize = 3;
}

/// `C^∞` bump `exp(−1/((x−lo)(hi−x)))` on `(lo, hi)`, scaled to peak 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpWindow {
    pub lo: f64,
    pub hi: f64,
}

impl BumpWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("bump", format!("empty support ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let q = (x - self.lo) * (self.hi - x);
        let half = 0.5 * (self.hi - self.lo);
        let peak = half * half;
        (1.0 / peak - 1.0 / q).exp()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Separable forcing `f(t, x) = amplitude · g(t) · s(|x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePulse {
    pub temporal: BumpWindow,
    pub spatial: BumpWindow,
    pub amplitude: f64,
}

impl SourcePulse {
    pub fn new(duration: f64, geometry: &Geometry, amplitude: f64) -> Result<Self> {
        check_positive("duration", duration)?;
        geometry.validate()?;
        if !amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(Self {
            temporal: BumpWindow::new(0.0, duration)?,
            spatial: BumpWindow::new(geometry.source_inner, geometry.source_outer)?,
            amplitude,
        })
    }

    pub fn duration(&self) -> f64 {
        self.temporal.hi
    }

    pub fn temporal(&self, t: f64) -> f64 {
        self.amplitude * self.temporal.value(t)
    }

    pub fn spatial(&self, r: f64) -> f64 {
        self.spatial.value(r)
    }

    pub fn forcing(&self, t: f64, r: f64) -> f64 {
        self.temporal(t) * self.spatial(r)
    }

    /// `‖f‖²` over `[0, t] × ℝ³`.
    pub fn l2_norm_sq_until(&self, t: f64) -> f64 {
        let t = t.min(self.duration());
        if t <= 0.0 {
            return 0.0;
        }
        let time = crate::quad::composite(0.0, t, 64, |x| self.temporal(x).powi(2));
        let space = crate::quad::composite(self.spatial.lo, self.spatial.hi, 64, |r| {
            4.0 * PI * r * r * self.spatial(r).powi(2)
        });
        time * space
    }
}

/// Uniform radial grid on `[start, end]` where `r = 1` is a node whenever it
/// lies in the range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    start: f64,
    h: f64,
    len: usize,
}

impl RadialGrid {
    pub fn new(start: f64, end: f64, h: f64) -> Result<Self> {
        check_positive("h", h)?;
        if !(start >= 0.0 && end > start) {
            return Err(invalid("grid", format!("bad range [{start}, {end}]")));
        }
        let cells = integral_cells(end - start, h, "grid range")?;
        if start < OBSTACLE_RADIUS && end > OBSTACLE_RADIUS {
            integral_cells(OBSTACLE_RADIUS - start, h, "r = 1 must be a grid node")?;
        }
        Ok(Self {
            start,
            h,
            len: cells + 1,
        })
    }

    /// Grid on `[0, R]` covering the obstacle and the exterior.
    pub fn whole(outer_radius: f64, h: f64) -> Result<Self> {
        Self::new(0.0, outer_radius, h)
    }

    /// Grid on `[1, R]`.
    pub fn exterior(outer_radius: f64, h: f64) -> Result<Self> {
        Self::new(OBSTACLE_RADIUS, outer_radius, h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.r(self.len - 1)
    }

    pub fn r(&self, j: usize) -> f64 {
        self.start + j as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.r(j))
    }

    /// Index of the node at `r = 1`, if the grid contains it.
    pub fn boundary_index(&self) -> Option<usize> {
        let x = (OBSTACLE_RADIUS - self.start) / self.h;
        let j = x.round();
        ((x - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.len).then_some(j as usize)
    }

    pub fn is_interior(&self, j: usize) -> bool {
        match self.boundary_index() {
            Some(b) => j < b,
            None => self.start < OBSTACLE_RADIUS && self.r(j) < OBSTACLE_RADIUS,
        }
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        self.boundary_index() == Some(j)
    }

    pub fn is_exterior(&self, j: usize) -> bool {
        !self.is_interior(j) && !self.is_boundary(j)
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> Result<usize> {
        if r < self.start - 1e-12 || r > self.end() + 1e-12 {
            return Err(Error::Domain(format!(
                "radius {r} outside grid [{}, {}]",
                self.start,
                self.end()
            )));
        }
        Ok((((r - self.start) / self.h).round() as usize).min(self.len - 1))
    }

    /// Index range of nodes with `lo <= r <= hi`.
    pub fn range(&self, lo: f64, hi: f64) -> Result<std::ops::RangeInclusive<usize>> {
        let i = self.nearest(lo)?;
        let j = self.nearest(hi)?;
        Ok(i..=j)
    }
}

fn integral_cells(length: f64, h: f64, what: &str) -> Result<usize> {
    let x = length / h;
    let n = x.round();
    if (x - n).abs() > 1e-6 || n < 1.0 {
        return Err(invalid(
            "h",
            format!("{what}: {length} is not a multiple of h = {h}"),
        ));
    }
    Ok(n as usize)
}

/// Uniform time grid `t_n = n·Δt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Largest step not exceeding `cfl · h` that lands exactly on `t_final`.
    pub fn for_grid(h: f64, cfl: f64, t_final: f64) -> Result<Self> {
        check_positive("cfl", cfl)?;
        check_positive("t_final", t_final)?;
        check_positive("h", h)?;
        let steps = (t_final / (cfl * h)).ceil() as usize;
        Ok(Self {
            dt: t_final / steps as f64,
            steps,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Exterior energy at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub value: f64,
}

/// Where a sampled field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SemiAnalytic,
    FiniteDifference,
    TimeStepping,
    Synthesized,
    Composite,
}

/// Field samples on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T> {
    pub grid: RadialGrid,
    pub values: Vec<T>,
    pub model: Option<Model>,
    pub provenance: Provenance,
    /// Frequency `k` for spectral fields, time `t` for time snapshots.
    pub label: Option<f64>,
}

impl<T: Copy> RadialField<T> {
    pub fn new(grid: RadialGrid, values: Vec<T>, provenance: Provenance) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            model: None,
            provenance,
            label: None,
        })
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_label(mut self, label: f64) -> Self {
        self.label = Some(label);
        self
    }

    pub fn from_fn(grid: RadialGrid, provenance: Provenance, f: impl Fn(f64) -> T) -> Self {
        let values = grid.nodes().map(f).collect();
        Self {
            grid,
            values,
            model: None,
            provenance,
            label: None,
        }
    }
}

/// Absorption coefficient: `1/ε²` strictly inside the unit ball, 0 elsewhere.
/// The interface node `r = 1` gets the exterior value.
pub fn sigma_eps(r: f64, eps: f64) -> Result<f64> {
    check_positive("eps", eps)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(
            "r",
            format!("must be finite and non-negative, got {r}"),
        ));
    }
    Ok(if r < OBSTACLE_RADIUS {
        1.0 / (eps * eps)
    } else {
        0.0
    })
}

/// Coefficient `D_ℓ` of the frequency-domain condition `v + D_ℓ ∂_n v = 0`.
pub fn impedance_coefficient(ell: u32, eps_hat: f64) -> Result<Complex64> {
    match ell {
        0 => Ok(Complex64::new(0.0, 0.0)),
        1 => {
            check_positive("eps_hat", eps_hat)?;
            // 1/α = conj(α) since |α| = 1
            Ok(ALPHA.conj() * eps_hat)
        }
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// `E = ½ ∫ (|∂_t ψ|² + |∂_r ψ|²) dx` over the part of the grid with `r >= 1`,
/// using a backward difference in time, centered differences in space and
/// the trapezoid rule with the measure `4πr² dr`.
pub fn energy(
    field_now: &RadialField<f64>,
    field_prev: &RadialField<f64>,
    dt: f64,
) -> Result<EnergySample> {
    check_positive("dt", dt)?;
    if field_now.grid != field_prev.grid {
        return Err(Error::Dimension(
            "energy: fields live on different grids".into(),
        ));
    }
    let grid = &field_now.grid;
    let first = grid.boundary_index().unwrap_or_else(|| {
        if grid.start() >= OBSTACLE_RADIUS {
            0
        } else {
            grid.len()
        }
    });
    let u = &field_now.values;
    let p = &field_prev.values;
    let value = exterior_energy(grid, first, u, p, dt);
    Ok(EnergySample {
        t: field_now.label.unwrap_or(0.0),
        value,
    })
}

pub(crate) fn exterior_energy(
    grid: &RadialGrid,
    first: usize,
    u: &[f64],
    p: &[f64],
    dt: f64,
) -> f64 {
    let n = grid.len();
    if n < first + 2 {
        return 0.0;
    }
    let h = grid.h();
    let mut acc = 0.0;
    for j in first..n {
        let ut = (u[j] - p[j]) / dt;
        let ur = if j == first {
            (-3.0 * u[j] + 4.0 * u[j + 1] - u[j + 2]) / (2.0 * h)
        } else if j == n - 1 {
            (3.0 * u[j] - 4.0 * u[j - 1] + u[j - 2]) / (2.0 * h)
        } else {
            (u[j + 1] - u[j - 1]) / (2.0 * h)
        };
        let r = grid.r(j);
        let w = if j == first || j == n - 1 { 0.5 } else { 1.0 };
        acc += w * 4.0 * PI * r * r * (ut * ut + ur * ur);
    }
    0.5 * h * acc
}

/// Static description of one experiment's physics and discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub geometry: Geometry,
    /// Length `T` of the forcing window.
    pub pulse_duration: f64,
    /// Peak amplitude of the forcing.
    pub amplitude: f64,
    pub t_final: f64,
    /// Radial spacing of the time-domain solvers.
    pub h: f64,
    pub cfl: f64,
    /// Probe region `K = [probe_inner, probe_outer]`.
    pub probe_inner: f64,
    pub probe_outer: f64,
    /// Frequency spacing of sweeps; `None` means `π / (2 t_final)`.
    pub dk: Option<f64>,
    /// Highest swept frequency; `None` means determined by a bandwidth scan.
    pub k_max: Option<f64>,
    /// Boundary-layer cutoff half-width.
    pub delta: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            pulse_duration: 2.0,
            amplitude: 1.0,
            t_final: 8.0,
            h: 1e-3,
            cfl: 0.9,
            probe_inner: 1.25,
            probe_outer: 1.45,
            dk: None,
            k_max: None,
            delta: 0.2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        check_positive("pulse_duration", self.pulse_duration)?;
        check_positive("t_final", self.t_final)?;
        check_positive("h", self.h)?;
        check_positive("cfl", self.cfl)?;
        if self.cfl > 1.0 {
            return Err(invalid(
                "cfl",
                format!("must not exceed 1, got {}", self.cfl),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        if !(OBSTACLE_RADIUS < self.probe_inner
            && self.probe_inner < self.probe_outer
            && self.probe_outer <= self.geometry.outer_radius)
        {
            return Err(invalid(
                "probe",
                format!(
                    "need 1 < K_lo < K_hi <= R, got [{}, {}]",
                    self.probe_inner, self.probe_outer
                ),
            ));
        }
        if let Some(dk) = self.dk {
            check_positive("dk", dk)?;
        }
        if let Some(k) = self.k_max {
            check_positive("k_max", k)?;
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        RadialGrid::whole(self.geometry.outer_radius, self.h)?;
        Ok(())
    }

    pub fn pulse(&self) -> Result<SourcePulse> {
        SourcePulse::new(self.pulse_duration, &self.geometry, self.amplitude)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::for_grid(self.h, self.cfl, self.t_final)
    }

    pub fn dk(&self) -> f64 {
        self.dk.unwrap_or(PI / (2.0 * self.t_final))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_squares_to_minus_i() {
        let sq = ALPHA * ALPHA;
        assert!((sq + Complex64::i()).norm() < 1e-15);
        assert!((ALPHA.norm() - 1.0).abs() < 1e-15);
        assert!((ALPHA.inv() - ALPHA.conj()).norm() < 1e-15);
    }

    #[test]
    fn sigma_values() {
        assert!((sigma_eps(0.5, 0.1).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(sigma_eps(2.0, 0.1).unwrap(), 0.0);
        assert_eq!(sigma_eps(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(sigma_eps(1.0, 0.1).unwrap(), 0.0);
        assert!(sigma_eps(0.5, 0.0).is_err());
        assert!(sigma_eps(0.5, f64::NAN).is_err());
        assert!(sigma_eps(0.5, -1.0).is_err());
    }

    #[test]
    fn impedance_values() {
        assert_eq!(
            impedance_coefficient(0, 0.3).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let d = impedance_coefficient(1, 1.0).unwrap();
        assert!((d - Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((d * ALPHA - 1.0).norm() < 1e-15);
        let d = impedance_coefficient(1, 0.1).unwrap();
        assert!((d.re - 0.070710678).abs() < 1e-9 && (d.im - 0.070710678).abs() < 1e-9);
        assert_eq!(
            impedance_coefficient(2, 0.1),
            Err(Error::UnsupportedOrder(2))
        );
        // degenerates to Dirichlet
        assert!(impedance_coefficient(1, 1e-12).unwrap().norm() < 1e-11);
    }

    #[test]
    fn eps_hat_scaling() {
        for eps in [0.2, 0.05, 0.013] {
            let m = MediumParams::new(eps).unwrap();
            for k in [1e-4, 0.3, 1.0, 17.0] {
                let e = m.eps_hat(k).unwrap();
                assert!((e * k.sqrt() - eps).abs() < 1e-15);
                assert!((e * e * k - eps * eps).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn geometry_rejects_bad_radii() {
        assert!(Geometry::new(2.0, 1.5, 6.0).is_err());
        assert!(Geometry::new(0.9, 1.5, 6.0).is_err());
        assert!(Geometry::new(1.5, 2.0, 1.9).is_err());
        assert!(Geometry::new(1.5, 2.0, 6.0).is_ok());
    }

    #[test]
    fn bump_is_supported_and_peaks_at_one() {
        let b = BumpWindow::new(1.5, 2.0).unwrap();
        assert_eq!(b.value(1.5), 0.0);
        assert_eq!(b.value(2.0), 0.0);
        assert_eq!(b.value(1.0), 0.0);
        assert!((b.value(1.75) - 1.0).abs() < 1e-15);
        assert!(b.value(1.5 + 1e-3) < 1e-100);
    }

    #[test]
    fn grid_places_obstacle_on_a_node() {
        let g = RadialGrid::whole(6.0, 1e-3).unwrap();
        let b = g.boundary_index().unwrap();
        assert_eq!(b, 1000);
        assert!((g.r(b) - 1.0).abs() < 1e-12);
        assert!(g.is_interior(999) && g.is_boundary(1000) && g.is_exterior(1001));
        assert!(RadialGrid::whole(6.0, 0.3).is_err());
        let e = RadialGrid::exterior(6.0, 0.25).unwrap();
        assert_eq!(e.boundary_index(), Some(0));
        assert_eq!(e.len(), 21);
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = RadialGrid::exterior(3.0, 0.01).unwrap();
        let z = RadialField::from_fn(g, Provenance::TimeStepping, |_| 0.0);
        assert_eq!(energy(&z, &z, 0.01).unwrap().value, 0.0);
        // static, spatially constant field
        let c = RadialField::from_fn(g, Provenance::TimeStepping, |_| 3.0);
        assert!(energy(&c, &c, 0.01).unwrap().value.abs() < 1e-20);
    }

    #[test]
    fn energy_of_linear_in_time_field_on_shell() {
        // ψ = t on 1 <= r <= 2: E = ½ · (4π/3)(2³ − 1³) = 14π/3
        let exact = 14.0 * PI / 3.0;
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3, 2.5e-3] {
            let g = RadialGrid::exterior(2.0, h).unwrap();
            let dt = 1e-3;
            let now = RadialField::from_fn(g, Provenance::TimeStepping, |_| 0.5 + dt);
            let prev = RadialField::from_fn(g, Provenance::TimeStepping, |_| 0.5);
            errs.push((energy(&now, &prev, dt).unwrap().value - exact).abs());
        }
        assert!(errs[2] < 1e-4 * exact);
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5);
    }

    #[test]
    fn energy_rejects_grid_mismatch() {
        let a = RadialField::from_fn(
            RadialGrid::exterior(2.0, 0.01).unwrap(),
            Provenance::TimeStepping,
            |_| 0.0,
        );
        let b = RadialField::from_fn(
            RadialGrid::exterior(2.0, 0.02).unwrap(),
            Provenance::TimeStepping,
            |_| 0.0,
        );
        assert!(matches!(energy(&a, &b, 0.1), Err(Error::Dimension(_))));
    }

    #[test]
    fn default_config_is_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        let tg = c.time_grid().unwrap();
        assert!(tg.dt <= c.cfl * c.h + 1e-15);
        assert!((tg.horizon() - c.t_final).abs() < 1e-12);
    }
}
