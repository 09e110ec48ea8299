//! Time-domain solvers for the radial wave equation.
//!
//! All schemes advance `w = r u`, which obeys the 1D damped wave equation
//! `w_tt − w_rr + σ w_t = r f`. Leapfrog in the interior, the damping term
//! centered in time, and ghost-node closures at both ends:
//! `w_t + w_r = 0` at the outer radius (exact for outgoing radial waves) and
//! the model's condition at the obstacle.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fracop::{CqKernel, CqScheme, CqWeights, TimeSignal};
use crate::model::{
    exterior_energy, EnergySample, MediumParams, Model, RadialGrid, SourcePulse, TimeGrid,
    OBSTACLE_RADIUS,
};

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Separable forcing `g(t) s(r)`.
#[derive(Clone)]
pub struct Forcing {
    temporal: Profile,
    spatial: Profile,
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Forcing")
    }
}

impl Forcing {
    pub fn new(
        temporal: impl Fn(f64) -> f64 + Send + Sync + 'static,
        spatial: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            temporal: Arc::new(temporal),
            spatial: Arc::new(spatial),
        }
    }

    pub fn from_pulse(pulse: &SourcePulse) -> Self {
        let p = *pulse;
        Self::new(move |t| p.temporal(t), move |r| p.spatial(r))
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0)
    }

    /// Same forcing switched off for `t > t_stop`.
    pub fn truncated(&self, t_stop: f64) -> Self {
        let g = self.temporal.clone();
        Self {
            temporal: Arc::new(move |t| if t > t_stop { 0.0 } else { g(t) }),
            spatial: self.spatial.clone(),
        }
    }

    pub fn temporal(&self, t: f64) -> f64 {
        (self.temporal)(t)
    }

    pub fn spatial(&self, r: f64) -> f64 {
        (self.spatial)(r)
    }
}

/// Snapshot pair plus the boundary history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TdState {
    /// `w = r u` at the previous step.
    pub prev: Vec<f64>,
    /// `w = r u` at the current step.
    pub now: Vec<f64>,
    pub step: usize,
    pub model: Model,
    /// Centered time derivative of the boundary trace, one entry per step taken.
    pub history: Vec<f64>,
    /// Value of the boundary operator applied at each step taken.
    pub boundary_operator: Vec<f64>,
    /// Boundary and first-neighbour values of `w` at each step taken.
    pub boundary_trace: Vec<(f64, f64)>,
    next: Vec<f64>,
}

impl TdState {
    /// `u = w / r` at the current step.
    pub fn u(&self, grid: &RadialGrid) -> Vec<f64> {
        to_u(grid, &self.now)
    }

    pub fn u_prev(&self, grid: &RadialGrid) -> Vec<f64> {
        to_u(grid, &self.prev)
    }
}

fn to_u(grid: &RadialGrid, w: &[f64]) -> Vec<f64> {
    w.iter()
        .enumerate()
        .map(|(j, w)| {
            let r = grid.r(j);
            if r == 0.0 {
                0.0
            } else {
                w / r
            }
        })
        .collect()
}

/// Time stepper for one model on one grid.
#[derive(Debug, Clone)]
pub struct TdSolver {
    model: Model,
    grid: RadialGrid,
    time: TimeGrid,
    medium: MediumParams,
    forcing: Forcing,
    /// `r_j s(r_j)`
    profile: Vec<f64>,
    sigma: Vec<f64>,
    /// Half-integral weights applied to the centered derivative of the trace.
    weights: Option<CqWeights>,
}

impl TdSolver {
    /// The exact model needs a grid on `[0, R]`, the impedance models one on
    /// `[1, R]`. Order 1 uses convolution quadrature of the given scheme.
    pub fn new(
        model: Model,
        grid: RadialGrid,
        time: TimeGrid,
        medium: MediumParams,
        forcing: Forcing,
        scheme: CqScheme,
    ) -> Result<Self> {
        let h = grid.h();
        if time.dt > h * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt: time.dt,
                limit: h,
            });
        }
        if grid.len() < 4 {
            return Err(Error::Dimension(
                "time stepping needs at least four nodes".into(),
            ));
        }
        match model {
            Model::Exact if grid.start() != 0.0 => {
                return Err(Error::Dimension(
                    "the exact model needs a grid starting at r = 0".into(),
                ))
            }
            Model::Gibc0 | Model::Gibc1 if grid.start() != OBSTACLE_RADIUS => {
                return Err(Error::Dimension(
                    "impedance models need a grid starting at r = 1".into(),
                ))
            }
            _ => {}
        }
        let profile = grid.nodes().map(|r| r * forcing.spatial(r)).collect();
        let sig = medium.sigma();
        let sigma = (0..grid.len())
            .map(|j| match model {
                Model::Exact if grid.is_interior(j) => sig,
                Model::Exact if grid.is_boundary(j) => 0.5 * sig,
                _ => 0.0,
            })
            .collect();
        let weights = if model == Model::Gibc1 {
            Some(
                CqWeights::generate(scheme, CqKernel::HalfIntegral, time.dt, time.steps + 1)?
                    .with_epsilon(medium.epsilon())?,
            )
        } else {
            None
        };
        Ok(Self {
            model,
            grid,
            time,
            medium,
            forcing,
            profile,
            sigma,
            weights,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn medium(&self) -> MediumParams {
        self.medium
    }

    pub fn weights(&self) -> Option<&CqWeights> {
        self.weights.as_ref()
    }

    /// Zero initial data.
    pub fn init(&self) -> TdState {
        let n = self.grid.len();
        TdState {
            prev: vec![0.0; n],
            now: vec![0.0; n],
            step: 0,
            model: self.model,
            history: Vec::new(),
            boundary_operator: Vec::new(),
            boundary_trace: Vec::new(),
            next: vec![0.0; n],
        }
    }

    pub fn step(&self, state: &mut TdState) -> Result<()> {
        match self.model {
            Model::Exact => self.step_exact(state),
            Model::Gibc0 | Model::Gibc1 => self.step_gibc(state),
        }
    }

    /// Leapfrog step of the full transmission problem.
    pub fn step_exact(&self, state: &mut TdState) -> Result<()> {
        if self.model != Model::Exact || state.model != Model::Exact {
            return Err(invalid("model", "step_exact needs the exact model"));
        }
        self.check_state(state)?;
        self.advance_bulk(state);
        state.next[0] = 0.0;
        self.finish(state);
        Ok(())
    }

    /// Leapfrog step of the exterior problem under the impedance condition.
    pub fn step_gibc(&self, state: &mut TdState) -> Result<()> {
        if self.model == Model::Exact || state.model != self.model {
            return Err(invalid("model", "step_gibc needs an impedance model"));
        }
        self.check_state(state)?;
        self.advance_bulk(state);
        match &self.weights {
            None => state.next[0] = 0.0,
            Some(weights) => {
                if state.history.len() != state.step {
                    return Err(Error::Internal(format!(
                        "boundary history has {} entries at step {}",
                        state.history.len(),
                        state.step
                    )));
                }
                let n = state.step;
                let kappa = &weights.weights;
                let scale = weights.scale;
                let tail: f64 = (1..=n).map(|j| kappa[j] * state.history[n - j]).sum();
                let (h, dt) = (self.grid.h(), self.time.dt);
                let (w0, w0p, w1) = (state.now[0], state.prev[0], state.now[1]);
                let forcing = self.forcing.temporal(self.time.t(n)) * self.profile[0];
                // ghost w_{-1} = w_1 − 2h (w_0 + B w) with B w implicit in w_0^{n+1}
                let c = scale * kappa[0] / (h * dt);
                let rhs = (2.0 * w0 - w0p) / (dt * dt) + c * w0p + (2.0 * w1 - 2.0 * w0) / (h * h)
                    - (2.0 / h) * (w0 + scale * tail)
                    + forcing;
                let w0n = rhs / (1.0 / (dt * dt) + c);
                let y = (w0n - w0p) / (2.0 * dt);
                state.next[0] = w0n;
                state.history.push(y);
                state.boundary_operator.push(scale * (kappa[0] * y + tail));
            }
        }
        self.finish(state);
        Ok(())
    }

    fn check_state(&self, state: &TdState) -> Result<()> {
        if state.now.len() != self.grid.len() || state.prev.len() != self.grid.len() {
            return Err(Error::Dimension(
                "state does not match the solver grid".into(),
            ));
        }
        if state.step > self.time.steps {
            return Err(Error::Internal(
                "stepping past the configured horizon".into(),
            ));
        }
        Ok(())
    }

    fn advance_bulk(&self, state: &mut TdState) {
        let (h, dt) = (self.grid.h(), self.time.dt);
        let inv_h2 = 1.0 / (h * h);
        let inv_dt2 = 1.0 / (dt * dt);
        let g = self.forcing.temporal(self.time.t(state.step));
        let (now, prev, next) = (&state.now, &state.prev, &mut state.next);
        let m = now.len() - 1;
        for j in 1..m {
            let lap = (now[j - 1] - 2.0 * now[j] + now[j + 1]) * inv_h2;
            let damp = 0.5 * self.sigma[j] / dt;
            next[j] =
                ((2.0 * now[j] - prev[j]) * inv_dt2 + damp * prev[j] + lap + g * self.profile[j])
                    / (inv_dt2 + damp);
        }
        // ghost w_{M+1} = w_{M−1} − 2h w_t
        let c = 1.0 / (h * dt);
        next[m] = ((2.0 * now[m] - prev[m]) * inv_dt2
            + c * prev[m]
            + (2.0 * now[m - 1] - 2.0 * now[m]) * inv_h2
            + g * self.profile[m])
            / (inv_dt2 + c);
    }

    fn finish(&self, state: &mut TdState) {
        if self.model != Model::Exact {
            state.boundary_trace.push((state.now[0], state.now[1]));
        }
        std::mem::swap(&mut state.prev, &mut state.now);
        std::mem::swap(&mut state.now, &mut state.next);
        state.step += 1;
    }

    /// Discrete energy conserved by the scheme up to boundary, damping and
    /// forcing work, at the half step between `prev` and `now`:
    /// `4π [½Σ c_j h (Δ_t w)² + ½Σ h D w^{n+1} D wⁿ + ½ w₀ⁿ w₀^{n+1}]`
    /// over the exterior nodes, the last term only under the order-1 condition.
    pub fn scheme_energy(&self, state: &TdState) -> f64 {
        let first = self.grid.boundary_index().unwrap_or(0);
        let (h, dt) = (self.grid.h(), self.time.dt);
        let (a, b) = (&state.prev, &state.now);
        let m = b.len() - 1;
        let mut kinetic = 0.0;
        for j in first..=m {
            let c = if j == first || j == m { 0.5 } else { 1.0 };
            kinetic += c * ((b[j] - a[j]) / dt).powi(2);
        }
        let mut potential = 0.0;
        for j in first..m {
            potential += (b[j + 1] - b[j]) * (a[j + 1] - a[j]) / (h * h);
        }
        let boundary = if self.model == Model::Gibc1 {
            0.5 * a[0] * b[0]
        } else {
            0.0
        };
        4.0 * PI * (0.5 * h * kinetic + 0.5 * h * potential + boundary)
    }

    /// Exterior energy functional of the current state (backward time
    /// difference, trapezoid in `4πr² dr`).
    pub fn quadrature_energy(&self, state: &TdState) -> f64 {
        let first = self.grid.boundary_index().unwrap_or(0);
        let u = state.u(&self.grid);
        let p = state.u_prev(&self.grid);
        exterior_energy(&self.grid, first, &u, &p, self.time.dt)
    }

    /// Runs to the horizon, recording what `opts` asks for.
    pub fn run(&self, opts: &RunOptions) -> Result<TdRun> {
        let mut state = self.init();
        let mut rec = Recorder::new(self, opts)?;
        rec.record(self, &state);
        for _ in 0..self.time.steps {
            self.step(&mut state)?;
            rec.record(self, &state);
        }
        Ok(rec.finish(self, state))
    }
}

/// What a run records at every step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Record the exterior energy functional.
    pub energy: bool,
    /// Record the scheme's discrete energy.
    pub scheme_energy: bool,
    /// Radii at which `u` and `∂_r u` are sampled.
    pub probes: Vec<f64>,
}

/// Samples of `u` and `∂_r u` at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrace {
    pub radius: f64,
    pub value: TimeSignal,
    pub gradient: TimeSignal,
}

/// Recorded output of a completed run.
#[derive(Debug, Clone)]
pub struct TdRun {
    pub model: Model,
    pub grid: RadialGrid,
    pub time: TimeGrid,
    pub energy: Vec<EnergySample>,
    pub scheme_energy: Vec<EnergySample>,
    pub probes: Vec<ProbeTrace>,
    pub state: TdState,
}

impl TdRun {
    /// Trace recorded at `radius`.
    pub fn probe(&self, radius: f64) -> Result<&ProbeTrace> {
        self.probes
            .iter()
            .find(|p| (p.radius - radius).abs() < 1e-12)
            .ok_or_else(|| Error::Domain(format!("no probe recorded at r = {radius}")))
    }
}

/// Energy samples of a run, one per step.
pub fn energy_trace(run: &TdRun) -> &[EnergySample] {
    &run.energy
}

/// Linear interpolation of `u` and of the centered gradient at a radius.
#[derive(Debug, Clone, Copy)]
struct ProbePoint {
    radius: f64,
    j: usize,
    theta: f64,
}

impl ProbePoint {
    fn new(grid: &RadialGrid, radius: f64) -> Result<Self> {
        let x = (radius - grid.start()) / grid.h();
        if !(x >= 1.0 - 1e-9 && x <= (grid.len() - 2) as f64 + 1e-9) {
            return Err(Error::Domain(format!(
                "probe radius {radius} must lie strictly inside the grid [{}, {}]",
                grid.start(),
                grid.end()
            )));
        }
        let j = (x.floor() as usize).clamp(1, grid.len() - 3);
        Ok(Self {
            radius,
            j,
            theta: x - j as f64,
        })
    }

    fn sample(&self, grid: &RadialGrid, w: &[f64]) -> (f64, f64) {
        let h = grid.h();
        let u = |i: usize| w[i] / grid.r(i);
        let du = |i: usize| (u(i + 1) - u(i - 1)) / (2.0 * h);
        let (a, b) = (self.j, self.j + 1);
        let t = self.theta;
        ((1.0 - t) * u(a) + t * u(b), (1.0 - t) * du(a) + t * du(b))
    }
}

struct Recorder {
    energy: Option<Vec<EnergySample>>,
    scheme: Option<Vec<EnergySample>>,
    points: Vec<ProbePoint>,
    values: Vec<Vec<f64>>,
    gradients: Vec<Vec<f64>>,
}

impl Recorder {
    fn new(solver: &TdSolver, opts: &RunOptions) -> Result<Self> {
        let points = opts
            .probes
            .iter()
            .map(|&r| {
                if r < OBSTACLE_RADIUS {
                    Err(Error::Domain(format!(
                        "probe radius {r} is inside the obstacle"
                    )))
                } else {
                    ProbePoint::new(&solver.grid, r)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let cap = solver.time.steps + 1;
        Ok(Self {
            energy: opts.energy.then(|| Vec::with_capacity(cap)),
            scheme: opts.scheme_energy.then(|| Vec::with_capacity(cap)),
            values: vec![Vec::with_capacity(cap); points.len()],
            gradients: vec![Vec::with_capacity(cap); points.len()],
            points,
        })
    }

    fn record(&mut self, solver: &TdSolver, state: &TdState) {
        let t = solver.time.t(state.step);
        if let Some(e) = &mut self.energy {
            e.push(EnergySample {
                t,
                value: solver.quadrature_energy(state),
            });
        }
        if let Some(e) = &mut self.scheme {
            // the scheme energy lives at the half step
            e.push(EnergySample {
                t: t - 0.5 * solver.time.dt,
                value: solver.scheme_energy(state),
            });
        }
        for (i, p) in self.points.iter().enumerate() {
            let (u, du) = p.sample(&solver.grid, &state.now);
            self.values[i].push(u);
            self.gradients[i].push(du);
        }
    }

    fn finish(self, solver: &TdSolver, state: TdState) -> TdRun {
        let dt = solver.time.dt;
        let probes = self
            .points
            .iter()
            .zip(self.values)
            .zip(self.gradients)
            .map(|((p, v), g)| ProbeTrace {
                radius: p.radius,
                value: TimeSignal { dt, samples: v },
                gradient: TimeSignal { dt, samples: g },
            })
            .collect();
        TdRun {
            model: solver.model,
            grid: solver.grid,
            time: solver.time,
            energy: self.energy.unwrap_or_default(),
            scheme_energy: self.scheme.unwrap_or_default(),
            probes,
            state,
        }
    }
}

/// Norms over time of the `H¹(K)` difference between two runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockstepError {
    /// `max_n ‖e(t_n)‖_{H¹(K)}`
    pub linf_h1: f64,
    /// `(Σ_n Δt ‖e(t_n)‖²_{H¹(K)})^{1/2}`
    pub l2t_h1: f64,
    /// `max_n ‖u_ref(t_n)‖_{H¹(K)}`, for relative scaling.
    pub reference_linf_h1: f64,
    /// `Σ_n Δt ‖(e^n − e^{n−1})/Δt‖²_{H¹(K)}`, the time side of Parseval.
    pub rate_l2t_h1_sq: f64,
}

/// Both runs of a lockstep comparison plus the error between them.
#[derive(Debug, Clone)]
pub struct LockstepOutcome {
    pub reference: TdRun,
    pub approximation: TdRun,
    pub error: LockstepError,
}

/// Steps two solvers on the same spacing and time grid side by side and
/// accumulates the `H¹` norm of their difference over the shell `probe`.
/// Nodes are matched by their radius.
pub fn run_lockstep(
    reference: &TdSolver,
    approximation: &TdSolver,
    probe: (f64, f64),
    opts: &RunOptions,
) -> Result<LockstepOutcome> {
    let (ga, gb) = (&reference.grid, &approximation.grid);
    if (ga.h() - gb.h()).abs() > 1e-15 || reference.time != approximation.time {
        return Err(Error::Dimension(
            "lockstep runs need identical spacing and time grid".into(),
        ));
    }
    let offset_f = (gb.start() - ga.start()) / ga.h();
    let offset = offset_f.round();
    if (offset_f - offset).abs() > 1e-9 || offset < 0.0 {
        return Err(Error::Dimension(
            "approximation grid is not a sub-grid of the reference".into(),
        ));
    }
    let offset = offset as usize;
    let (lo, hi) = probe;
    if !(lo >= gb.start() + gb.h() && hi <= gb.end() - gb.h() && lo < hi) {
        return Err(Error::Domain(format!(
            "probe shell ({lo}, {hi}) is not inside both grids"
        )));
    }
    let range = gb.range(lo, hi)?;
    let (s0, s1) = (*range.start(), *range.end());
    let h = gb.h();
    // values on the shell nodes plus one neighbour either side
    let gather = |wa: &[f64], wb: &[f64], out: &mut Vec<f64>, diff: bool| {
        out.clear();
        out.extend((s0 - 1..=s1 + 1).map(|j| {
            let r = gb.r(j);
            let a = wa[j + offset] / r;
            if diff {
                a - wb[j] / r
            } else {
                a
            }
        }));
    };
    let h1_sq = |e: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 1..e.len() - 1 {
            let r = gb.r(s0 + i - 1);
            let d = (e[i + 1] - e[i - 1]) / (2.0 * h);
            let c = if i == 1 || i == e.len() - 2 { 0.5 } else { 1.0 };
            acc += c * 4.0 * PI * r * r * (e[i] * e[i] + d * d);
        }
        acc * h
    };

    let mut sa = reference.init();
    let mut sb = approximation.init();
    let mut ra = Recorder::new(reference, opts)?;
    let mut rb = Recorder::new(approximation, opts)?;
    ra.record(reference, &sa);
    rb.record(approximation, &sb);
    let dt = reference.time.dt;
    let (mut linf, mut l2, mut href, mut rate) = (0.0f64, 0.0, 0.0f64, 0.0);
    let mut e_prev = vec![0.0; s1 - s0 + 3];
    let mut e_now = Vec::with_capacity(e_prev.len());
    let mut scratch = Vec::with_capacity(e_prev.len());
    for _ in 0..reference.time.steps {
        reference.step(&mut sa)?;
        approximation.step(&mut sb)?;
        ra.record(reference, &sa);
        rb.record(approximation, &sb);
        gather(&sa.now, &sb.now, &mut e_now, true);
        let e = h1_sq(&e_now);
        linf = linf.max(e);
        l2 += dt * e;
        scratch.clear();
        scratch.extend(e_now.iter().zip(&e_prev).map(|(a, b)| (a - b) / dt));
        rate += dt * h1_sq(&scratch);
        std::mem::swap(&mut e_now, &mut e_prev);
        gather(&sa.now, &sb.now, &mut scratch, false);
        href = href.max(h1_sq(&scratch));
    }
    Ok(LockstepOutcome {
        reference: ra.finish(reference, sa),
        approximation: rb.finish(approximation, sb),
        error: LockstepError {
            linf_h1: linf.sqrt(),
            l2t_h1: l2.sqrt(),
            reference_linf_h1: href.sqrt(),
            rate_l2t_h1_sq: rate,
        },
    })
}

/// Residual of `−∂_r u + B u = 0` at the obstacle for every step of an
/// order-1 run, rebuilt from the recorded boundary values: the normal
/// derivative is the one implied by the discrete equation at the boundary
/// node and the boundary operator is a fresh convolution of the trace.
pub fn boundary_residuals(solver: &TdSolver, state: &TdState) -> Result<Vec<f64>> {
    let weights = solver
        .weights
        .as_ref()
        .ok_or_else(|| invalid("model", "boundary residuals need the order-1 model"))?;
    let trace = &state.boundary_trace;
    let n = trace.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (h, dt) = (solver.grid.h(), solver.time.dt);
    // w_0 at steps 0..=n, with w_0^{-1} = 0
    let mut w0: Vec<f64> = trace.iter().map(|t| t.0).collect();
    w0.push(if state.step == n {
        state.now[0]
    } else {
        f64::NAN
    });
    let at = |i: isize| if i < 0 { 0.0 } else { w0[i as usize] };
    let y: Vec<f64> = (0..n as isize)
        .map(|i| (at(i + 1) - at(i - 1)) / (2.0 * dt))
        .collect();
    let b = weights.convolve(&y)?;
    Ok((0..n)
        .map(|i| {
            let (w, w1) = trace[i];
            let t = solver.time.t(i);
            let f = solver.forcing.temporal(t) * solver.profile[0];
            let ii = i as isize;
            let accel = (at(ii + 1) - 2.0 * at(ii) + at(ii - 1)) / (dt * dt);
            // ∂_r w at r = 1 from the boundary row of the scheme
            let dw = ((2.0 * w1 - 2.0 * w) / (h * h) + f - accel) * h / 2.0;
            // u = w and ∂_r u = ∂_r w − w on the unit sphere
            -(dw - w) + b[i]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Geometry;

    fn pulse() -> SourcePulse {
        SourcePulse::new(2.0, &Geometry::default(), 1.0).unwrap()
    }

    fn solver(model: Model, h: f64, eps: f64, t_final: f64, forcing: Forcing) -> TdSolver {
        let grid = match model {
            Model::Exact => RadialGrid::whole(6.0, h).unwrap(),
            _ => RadialGrid::exterior(6.0, h).unwrap(),
        };
        let time = TimeGrid::for_grid(h, 0.9, t_final).unwrap();
        TdSolver::new(
            model,
            grid,
            time,
            MediumParams::new(eps).unwrap(),
            forcing,
            CqScheme::Bdf2,
        )
        .unwrap()
    }

    #[test]
    fn zero_forcing_stays_zero() {
        for model in [Model::Exact, Model::Gibc0, Model::Gibc1] {
            let s = solver(model, 0.01, 0.1, 3.0, Forcing::zero());
            let run = s
                .run(&RunOptions {
                    energy: true,
                    probes: vec![1.3],
                    ..Default::default()
                })
                .unwrap();
            assert!(run.state.now.iter().all(|&w| w == 0.0));
            assert!(run.energy.iter().all(|e| e.value == 0.0));
            assert!(run.probes[0].value.samples.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn cfl_violation_is_refused() {
        let grid = RadialGrid::exterior(6.0, 0.01).unwrap();
        let time = TimeGrid {
            dt: 0.02,
            steps: 10,
        };
        let err = TdSolver::new(
            Model::Gibc0,
            grid,
            time,
            MediumParams::new(0.1).unwrap(),
            Forcing::zero(),
            CqScheme::Bdf2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn dirichlet_boundary_stays_zero() {
        let s = solver(Model::Gibc0, 0.01, 0.1, 4.0, Forcing::from_pulse(&pulse()));
        let mut st = s.init();
        for _ in 0..s.time().steps {
            s.step(&mut st).unwrap();
            assert_eq!(st.now[0], 0.0);
        }
        assert!(st.now.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn truncated_forcing_is_causal() {
        let f = Forcing::from_pulse(&pulse());
        let cut = 1.0;
        for model in [Model::Exact, Model::Gibc1] {
            let opts = RunOptions {
                probes: vec![1.3, 2.5],
                ..Default::default()
            };
            let a = solver(model, 0.01, 0.1, 3.0, f.clone()).run(&opts).unwrap();
            let b = solver(model, 0.01, 0.1, 3.0, f.truncated(cut))
                .run(&opts)
                .unwrap();
            let dt = a.time.dt;
            // the forcing at t_n enters w^{n+1}
            let last = (cut / dt).floor() as usize + 1;
            for (pa, pb) in a.probes.iter().zip(&b.probes) {
                assert_eq!(pa.value.samples[..=last], pb.value.samples[..=last]);
                assert!(pa.value.samples != pb.value.samples);
            }
        }
    }

    #[test]
    fn boundary_history_tracks_steps() {
        let s = solver(Model::Gibc1, 0.01, 0.1, 1.0, Forcing::from_pulse(&pulse()));
        let mut st = s.init();
        for n in 0..20 {
            assert_eq!(st.history.len(), n);
            s.step(&mut st).unwrap();
        }
        st.history.pop();
        assert!(matches!(s.step(&mut st), Err(Error::Internal(_))));
    }

    #[test]
    fn boundary_residual_is_tiny() {
        let s = solver(Model::Gibc1, 0.005, 0.1, 5.0, Forcing::from_pulse(&pulse()));
        let run = s.run(&RunOptions::default()).unwrap();
        let res = boundary_residuals(&s, &run.state).unwrap();
        let scale = run
            .state
            .boundary_trace
            .iter()
            .map(|t| t.0.abs())
            .fold(0.0, f64::max);
        assert!(scale > 0.0);
        let worst = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-10 * scale.max(1.0), "{worst} vs {scale}");
    }

    #[test]
    fn stronger_absorption_lowers_the_interior_field() {
        let mut peaks = Vec::new();
        for eps in [0.2, 0.1, 0.05] {
            let s = solver(Model::Exact, 0.005, eps, 2.0, Forcing::from_pulse(&pulse()));
            let run = s.run(&RunOptions::default()).unwrap();
            let b = s.grid().boundary_index().unwrap();
            let u = run.state.u(s.grid());
            peaks.push(u[1..b].iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
        assert!(peaks[0] > peaks[1] && peaks[1] > peaks[2], "{peaks:?}");
    }

    #[test]
    fn scheme_energy_balances_without_forcing_or_outflow() {
        // after the forcing window and before the wave reaches R, the order-0
        // scheme energy is conserved exactly
        let s = solver(Model::Gibc0, 0.01, 0.1, 3.5, Forcing::from_pulse(&pulse()));
        let run = s
            .run(&RunOptions {
                scheme_energy: true,
                ..Default::default()
            })
            .unwrap();
        let after: Vec<f64> = run
            .scheme_energy
            .iter()
            .filter(|e| e.t > 2.0 + 0.02)
            .map(|e| e.value)
            .collect();
        let top = after[0];
        for v in &after {
            assert!((v - top).abs() < 1e-12 * top, "{v} vs {top}");
        }
    }
}
