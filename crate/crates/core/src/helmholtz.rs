//! Frequency-domain radial solvers.
//!
//! With `w = r u` the radial Helmholtz operator becomes `w'' + (k² + ikσ) w`,
//! so every field is a combination of a particular solution built by variation
//! of parameters and a few exponentials. A finite-difference path on the same
//! reduced equation serves as an independent check.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{check_positive, invalid, Error, Result};
use crate::model::{
    impedance_coefficient, MediumParams, Model, Provenance, RadialField, RadialGrid, SourcePulse,
    ALPHA, OBSTACLE_RADIUS,
};
use crate::quad::gl16;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest tolerated condition number of the interface matching system.
pub const MAX_CONDITION: f64 = 1e12;

/// Radial profile `scale · s(r)`, supported in `(lo, hi)` outside the obstacle.
#[derive(Clone)]
pub struct RadialSource {
    lo: f64,
    hi: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    scale: Complex64,
}

impl fmt::Debug for RadialSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialSource")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("scale", &self.scale)
            .finish()
    }
}

impl RadialSource {
    pub fn new(
        lo: f64,
        hi: f64,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lo > OBSTACLE_RADIUS && hi > lo && hi.is_finite()) {
            return Err(invalid(
                "source",
                format!("support ({lo}, {hi}) must lie in r > 1"),
            ));
        }
        Ok(Self {
            lo,
            hi,
            profile: Arc::new(profile),
            scale: Complex64::new(1.0, 0.0),
        })
    }

    /// Spatial part of a forcing pulse (the temporal amplitude is not included).
    pub fn from_pulse(pulse: &SourcePulse) -> Self {
        let window = pulse.spatial;
        Self {
            lo: window.lo,
            hi: window.hi,
            profile: Arc::new(move |r| window.value(r)),
            scale: Complex64::new(1.0, 0.0),
        }
    }

    pub fn zero() -> Self {
        Self {
            lo: 1.5,
            hi: 2.0,
            profile: Arc::new(|_| 0.0),
            scale: ZERO,
        }
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn value(&self, r: f64) -> Complex64 {
        if r <= self.lo || r >= self.hi {
            ZERO
        } else {
            self.scale * (self.profile)(r)
        }
    }

    fn raw(&self, r: f64) -> f64 {
        if r <= self.lo || r >= self.hi {
            0.0
        } else {
            (self.profile)(r)
        }
    }
}

/// One frequency-domain problem.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub k: f64,
    pub medium: MediumParams,
    pub model: Model,
    pub source: RadialSource,
}

impl ModeProblem {
    pub fn new(k: f64, medium: MediumParams, model: Model, source: RadialSource) -> Result<Self> {
        check_positive("k", k)?;
        Ok(Self {
            k,
            medium,
            model,
            source,
        })
    }

    pub fn eps_hat(&self) -> f64 {
        self.medium.epsilon() / self.k.sqrt()
    }
}

/// `κ = √(k² + ik/ε²)` on the branch `ℑκ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorWavenumber(Complex64);

impl InteriorWavenumber {
    pub fn new(k: f64, eps: f64) -> Result<Self> {
        check_positive("k", k)?;
        check_positive("eps", eps)?;
        let kappa = Complex64::new(k * k, k / (eps * eps)).sqrt();
        Ok(Self(if kappa.im < 0.0 { -kappa } else { kappa }))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

/// `e^{ik(r−1)}/r · g`: the outgoing radial solution with value `g` at `r = 1`.
pub fn outgoing_solution(k: f64, r: f64, boundary_value: Complex64) -> Result<Complex64> {
    check_positive("k", k)?;
    if !(r >= OBSTACLE_RADIUS) {
        return Err(Error::Domain(format!(
            "outgoing solution needs r >= 1, got {r}"
        )));
    }
    Ok(boundary_value * Complex64::from_polar(1.0 / r, k * (r - 1.0)))
}

/// Variation-of-parameters solution of `w'' + k²w = r s(r)` that is regular
/// at the origin and outgoing at infinity:
/// `w_p = −(1/k)[e^{ikr} S(r) + sin(kr) E(r)]` with
/// `S(r) = ∫_a^r sin(kρ) F` and `E(r) = ∫_r^b e^{ikρ} F`.
#[derive(Debug, Clone)]
struct Particular {
    k: f64,
    scale: Complex64,
    source: RadialSource,
    edges: Vec<f64>,
    /// `S` at each panel edge.
    sin_before: Vec<f64>,
    /// `E` at each panel edge.
    exp_after: Vec<Complex64>,
}

impl Particular {
    fn new(k: f64, source: &RadialSource) -> Self {
        let (lo, hi) = source.support();
        let panels = ((4.0 * k * (hi - lo) / (2.0 * PI)).ceil() as usize).max(32);
        let step = (hi - lo) / panels as f64;
        let edges: Vec<f64> = (0..=panels).map(|p| lo + p as f64 * step).collect();
        let rule = gl16();
        let mut sin_before = vec![0.0; panels + 1];
        let mut exp_parts = vec![ZERO; panels];
        for p in 0..panels {
            let (s, e) = rule
                .integrate(edges[p], edges[p + 1], |x| {
                    let f = x * source.raw(x);
                    Pair((k * x).sin() * f, Complex64::from_polar(f, k * x))
                })
                .into();
            sin_before[p + 1] = sin_before[p] + s;
            exp_parts[p] = e;
        }
        let mut exp_after = vec![ZERO; panels + 1];
        for p in (0..panels).rev() {
            exp_after[p] = exp_after[p + 1] + exp_parts[p];
        }
        Self {
            k,
            scale: source.scale(),
            source: source.clone(),
            edges,
            sin_before,
            exp_after,
        }
    }

    fn partial(&self, r: f64) -> (f64, Complex64) {
        let (lo, hi) = (self.edges[0], *self.edges.last().unwrap());
        if r <= lo {
            return (0.0, self.exp_after[0]);
        }
        if r >= hi {
            return (*self.sin_before.last().unwrap(), ZERO);
        }
        let panels = self.edges.len() - 1;
        let step = (hi - lo) / panels as f64;
        let p = (((r - lo) / step).floor() as usize).min(panels - 1);
        let k = self.k;
        let rule = gl16();
        let s = self.sin_before[p]
            + rule.integrate(self.edges[p], r, |x| (k * x).sin() * x * self.source.raw(x));
        let e = self.exp_after[p + 1]
            + rule.integrate(r, self.edges[p + 1], |x| {
                Complex64::from_polar(x * self.source.raw(x), k * x)
            });
        (s, e)
    }

    /// `(w_p, w_p')` at `r`.
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let k = self.k;
        let (s, e) = self.partial(r);
        let phase = Complex64::from_polar(1.0, k * r);
        let w = -(phase * s + (k * r).sin() * e) / k;
        let dw = -(I * phase * s + (k * r).cos() * e);
        (w * self.scale, dw * self.scale)
    }
}

#[derive(Default, Clone, Copy)]
struct Pair(f64, Complex64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, s: f64) -> Pair {
        Pair(self.0 * s, self.1 * s)
    }
}

impl From<Pair> for (f64, Complex64) {
    fn from(p: Pair) -> Self {
        (p.0, p.1)
    }
}

/// Interior representation `w = B sin(κr)/sin(κ)`.
#[derive(Debug, Clone, Copy)]
struct Interior {
    kappa: Complex64,
    amplitude: Complex64,
}

impl Interior {
    /// `(ρ, ρ')` with `ρ = sin(κr)/sin κ`, written with decaying exponentials.
    fn profile(kappa: Complex64, r: f64) -> (Complex64, Complex64) {
        let decay = (-I * kappa * (r - 1.0)).exp();
        let inner = (2.0 * I * kappa * r).exp();
        let denom = 1.0 - (2.0 * I * kappa).exp();
        let rho = decay * (1.0 - inner) / denom;
        let drho = -I * kappa * decay * (1.0 + inner) / denom;
        (rho, drho)
    }

    fn log_derivative_at_boundary(kappa: Complex64) -> Complex64 {
        let e = (2.0 * I * kappa).exp();
        -I * kappa * (1.0 + e) / (1.0 - e)
    }
}

/// Closed-form radial field `u(r)`: interior part (exact model only) plus
/// particular solution plus `β e^{ik(r−1)}` outside.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub k: f64,
    pub model: Option<Model>,
    /// Coefficient of the outgoing homogeneous part; equals `u(1)` when the
    /// source is absent.
    pub beta: Complex64,
    particular: Option<Particular>,
    interior: Option<Interior>,
}

impl ModeSolution {
    /// Pure outgoing field with value `g` on the obstacle boundary.
    pub fn outgoing(k: f64, g: Complex64) -> Result<Self> {
        check_positive("k", k)?;
        Ok(Self {
            k,
            model: None,
            beta: g,
            particular: None,
            interior: None,
        })
    }

    fn reduced(&self, r: f64) -> (Complex64, Complex64) {
        if r < OBSTACLE_RADIUS {
            return match self.interior {
                Some(inner) => {
                    let (rho, drho) = Interior::profile(inner.kappa, r);
                    (inner.amplitude * rho, inner.amplitude * drho)
                }
                None => (
                    Complex64::new(f64::NAN, f64::NAN),
                    Complex64::new(f64::NAN, f64::NAN),
                ),
            };
        }
        let (mut w, mut dw) = self.particular.as_ref().map_or((ZERO, ZERO), |p| p.eval(r));
        let out = self.beta * Complex64::from_polar(1.0, self.k * (r - 1.0));
        w += out;
        dw += I * self.k * out;
        (w, dw)
    }

    /// `u(r)`; NaN inside the obstacle for impedance models.
    pub fn value(&self, r: f64) -> Complex64 {
        if r <= 1e-12 {
            return self.reduced(1e-12).1;
        }
        self.reduced(r).0 / r
    }

    /// `∂_r u(r)`.
    pub fn derivative(&self, r: f64) -> Complex64 {
        if r <= 1e-12 {
            return ZERO;
        }
        let (w, dw) = self.reduced(r);
        dw / r - w / (r * r)
    }

    /// `∂_n u = −∂_r u` on the obstacle boundary, from outside.
    pub fn normal_derivative(&self) -> Complex64 {
        let (w, dw) = self.reduced(OBSTACLE_RADIUS);
        -(dw - w)
    }

    /// `∂_n u` on the boundary by a one-sided five-point difference of the
    /// exterior closed form.
    pub fn normal_derivative_fd(&self) -> Complex64 {
        let h = 2e-3 / self.k.max(1.0);
        let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
        let d: Complex64 = c
            .iter()
            .enumerate()
            .map(|(j, c)| *c * self.value(OBSTACLE_RADIUS + j as f64 * h))
            .sum();
        -d / (12.0 * h)
    }

    /// `|∂_r u − iku|` at `r`.
    pub fn outgoing_residual(&self, r: f64) -> f64 {
        (self.derivative(r) - I * self.k * self.value(r)).norm()
    }

    pub fn sample(&self, grid: &RadialGrid) -> RadialField<Complex64> {
        let field = RadialField::from_fn(*grid, Provenance::SemiAnalytic, |r| self.value(r))
            .with_label(self.k);
        match self.model {
            Some(m) => field.with_model(m),
            None => field,
        }
    }
}

/// Condition number of a 2×2 complex matrix in the spectral norm.
fn condition_2x2(m: [[Complex64; 2]; 2]) -> f64 {
    let frob: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    if det == 0.0 {
        return f64::INFINITY;
    }
    let disc = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
    (frob + disc) / (2.0 * det)
}

/// Semi-analytic solution of the transmission problem with the absorbing core.
pub fn solve_exact_freq(p: &ModeProblem) -> Result<ModeSolution> {
    if p.model != Model::Exact {
        return Err(invalid("model", "solve_exact_freq needs the exact model"));
    }
    let k = p.k;
    let kappa = InteriorWavenumber::new(k, p.medium.epsilon())?.value();
    let part = Particular::new(k, &p.source);
    let (wp, dwp) = part.eval(OBSTACLE_RADIUS);
    let log_d = Interior::log_derivative_at_boundary(kappa);
    let ik = I * k;
    let cond = condition_2x2([
        [Complex64::new(1.0, 0.0), -Complex64::new(1.0, 0.0)],
        [log_d, -ik],
    ]);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let beta = (dwp - log_d * wp) / (log_d - ik);
    Ok(ModeSolution {
        k,
        model: Some(Model::Exact),
        beta,
        particular: Some(part),
        interior: Some(Interior {
            kappa,
            amplitude: wp + beta,
        }),
    })
}

/// Semi-analytic exterior solution under `u − D ∂_r u = 0` at `r = 1`.
pub fn solve_gibc_freq(p: &ModeProblem) -> Result<ModeSolution> {
    let ell = p
        .model
        .order()
        .ok_or_else(|| invalid("model", "solve_gibc_freq needs an impedance model"))?;
    let d = impedance_coefficient(ell, p.eps_hat())?;
    let k = p.k;
    let part = Particular::new(k, &p.source);
    let (wp, dwp) = part.eval(OBSTACLE_RADIUS);
    // (1 + D) w − D w' = 0 for w = r u at r = 1
    let denom = (1.0 + d) - I * k * d;
    if denom.norm() < 1e-300 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let beta = (d * dwp - (1.0 + d) * wp) / denom;
    Ok(ModeSolution {
        k,
        model: Some(p.model),
        beta,
        particular: Some(part),
        interior: None,
    })
}

/// Dispatches on the problem's model.
pub fn solve_freq(p: &ModeProblem) -> Result<ModeSolution> {
    match p.model {
        Model::Exact => solve_exact_freq(p),
        _ => solve_gibc_freq(p),
    }
}

/// Thomas algorithm for a complex tridiagonal system. `sub[0]` and
/// `sup[n−1]` are ignored.
pub fn solve_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Dimension(
            "tridiagonal bands differ in length".into(),
        ));
    }
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    let mut beta = diag[0];
    for i in 0..n {
        if i > 0 {
            beta = diag[i] - sub[i] * c[i - 1];
        }
        if beta.norm() == 0.0 || !beta.is_finite() {
            return Err(Error::Internal(format!("zero pivot in row {i}")));
        }
        c[i] = sup[i] / beta;
        d[i] = (rhs[i] - if i > 0 { sub[i] * d[i - 1] } else { ZERO }) / beta;
    }
    let mut x = vec![ZERO; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Second-order finite differences for `w = r u` with the exact outgoing
/// closure `w' = ikw` at the outer radius. The exact model needs a grid
/// starting at 0, the impedance models one starting at 1.
pub fn fd_solve_freq(p: &ModeProblem, grid: &RadialGrid) -> Result<RadialField<Complex64>> {
    let h = grid.h();
    let n = grid.len();
    let k = p.k;
    let ik = I * k;
    if n < 3 {
        return Err(Error::Dimension("grid needs at least three nodes".into()));
    }
    let h2 = h * h;
    let one = Complex64::new(1.0, 0.0);
    let mut sub = vec![one / h2; n];
    let mut sup = vec![one / h2; n];
    let mut diag = vec![ZERO; n];
    let mut rhs: Vec<Complex64> = grid.nodes().map(|r| r * p.source.value(r)).collect();
    let sigma = p.medium.sigma();
    for (j, d) in diag.iter_mut().enumerate() {
        let s = if grid.is_interior(j) {
            sigma
        } else if grid.is_boundary(j) {
            // cell average across the jump keeps the scheme second order
            0.5 * sigma
        } else {
            0.0
        };
        *d = -2.0 / h2 + k * k + ik * s;
    }
    match p.model {
        Model::Exact => {
            if grid.start() != 0.0 {
                return Err(Error::Dimension(
                    "the exact model needs a grid starting at r = 0".into(),
                ));
            }
            let required = p.eps_hat() / 4.0;
            if h > required {
                return Err(Error::UnresolvedLayer { h, required });
            }
            diag[0] = one;
            sup[0] = ZERO;
            rhs[0] = ZERO;
        }
        Model::Gibc0 | Model::Gibc1 => {
            if grid.start() != OBSTACLE_RADIUS {
                return Err(Error::Dimension(
                    "impedance models need a grid starting at r = 1".into(),
                ));
            }
            if p.model == Model::Gibc0 {
                diag[0] = one;
                sup[0] = ZERO;
                rhs[0] = ZERO;
            } else {
                let d = impedance_coefficient(1, p.eps_hat())?;
                let gamma = (1.0 + d) / d;
                // ghost w_{-1} = w_1 − 2hγ w_0
                diag[0] = (-2.0 - 2.0 * h * gamma) / h2 + k * k;
                sup[0] = Complex64::new(2.0 / h2, 0.0);
            }
        }
    }
    // ghost w_{M+1} = w_{M−1} + 2h ik w_M
    let m = n - 1;
    sub[m] = Complex64::new(2.0 / h2, 0.0);
    diag[m] = (-2.0 + 2.0 * h * ik) / h2 + k * k;
    let w = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let values = (0..n)
        .map(|j| {
            let r = grid.r(j);
            if r == 0.0 {
                w[1] / h
            } else {
                w[j] / r
            }
        })
        .collect::<Vec<_>>();
    Ok(
        RadialField::new(*grid, values, Provenance::FiniteDifference)?
            .with_model(p.model)
            .with_label(k),
    )
}

/// Exterior terms of the boundary-layer expansion: `w_e⁰` (Dirichlet
/// solution) and, for order 1, the outgoing field `w_e¹` whose boundary value
/// is `−(1/α) ∂_n w_e⁰`.
#[derive(Debug, Clone)]
pub struct ExpansionTerms {
    pub k: f64,
    pub terms: Vec<ModeSolution>,
    /// `∂_n w_e^j` on the boundary, one per term.
    pub normal_derivatives: Vec<Complex64>,
}

impl ExpansionTerms {
    pub fn value(&self, eps_hat: f64, r: f64) -> Complex64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, t)| eps_hat.powi(j as i32) * t.value(r))
            .sum()
    }

    pub fn derivative(&self, eps_hat: f64, r: f64) -> Complex64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, t)| eps_hat.powi(j as i32) * t.derivative(r))
            .sum()
    }
}

pub fn compute_we(ell: u32, k: f64, source: &RadialSource) -> Result<ExpansionTerms> {
    if ell > 1 {
        return Err(Error::UnsupportedOrder(ell));
    }
    // the Dirichlet solve does not see ε; any admissible value works
    let medium = MediumParams::new(0.5)?;
    let zeroth = solve_gibc_freq(&ModeProblem::new(k, medium, Model::Gibc0, source.clone())?)?;
    let dn0 = zeroth.normal_derivative_fd();
    let mut terms = vec![zeroth];
    let mut normal_derivatives = vec![dn0];
    if ell == 1 {
        let first = ModeSolution::outgoing(k, -ALPHA.conj() * dn0)?;
        normal_derivatives.push(first.normal_derivative_fd());
        terms.push(first);
    }
    Ok(ExpansionTerms {
        k,
        terms,
        normal_derivatives,
    })
}

/// Boundary datum `h_ℓ` of the error equation: 0 for order 0 and
/// `(ε̂²/α) ∂_n w_e¹` for order 1.
pub fn compute_h(ell: u32, eps_hat: f64, we: &ExpansionTerms) -> Result<Complex64> {
    match ell {
        0 => Ok(ZERO),
        1 => {
            check_positive("eps_hat", eps_hat)?;
            let dn1 = we
                .normal_derivatives
                .get(1)
                .ok_or_else(|| invalid("we", "order-1 terms are missing"))?;
            Ok(eps_hat * eps_hat * ALPHA.conj() * dn1)
        }
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// `h_ℓ = e_ℓ + D_ℓ ∂_n e_ℓ` on the boundary with `e_ℓ` the truncated exterior
/// expansion minus the impedance solution.
pub fn h_by_definition(
    ell: u32,
    eps_hat: f64,
    we: &ExpansionTerms,
    source: &RadialSource,
) -> Result<Complex64> {
    check_positive("eps_hat", eps_hat)?;
    let k = we.k;
    let eps = eps_hat * k.sqrt();
    let approx = solve_gibc_freq(&ModeProblem::new(
        k,
        MediumParams::new(eps)?,
        Model::gibc(ell)?,
        source.clone(),
    )?)?;
    let d = impedance_coefficient(ell, eps_hat)?;
    let terms = we.terms.len().min(ell as usize + 1);
    let mut e = -approx.value(OBSTACLE_RADIUS);
    let mut dn_e = -approx.normal_derivative();
    for (j, t) in we.terms.iter().take(terms).enumerate() {
        let w = eps_hat.powi(j as i32);
        e += w * t.value(OBSTACLE_RADIUS);
        dn_e += w * t.normal_derivative();
    }
    Ok(e + d * dn_e)
}

/// Gradient and scaled value norms of the model error over a shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqError {
    /// `‖∂_r(v^ε − v^a)‖_{L²(K)}`
    pub h1: f64,
    /// `k ‖v^ε − v^a‖_{L²(K)}`
    pub l2: f64,
}

impl FreqError {
    pub fn total(&self) -> f64 {
        (self.h1 * self.h1 + self.l2 * self.l2).sqrt()
    }
}

/// Squared `L²` norms of `f` and `∂_r f` over the shell `lo ≤ r ≤ hi`.
pub fn shell_norms_sq(lo: f64, hi: f64, f: impl Fn(f64) -> (Complex64, Complex64)) -> (f64, f64) {
    let rule = gl16();
    let panels = 16;
    let step = (hi - lo) / panels as f64;
    let mut value = 0.0;
    let mut grad = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * step;
        for (r, w) in rule.mapped(a, a + step) {
            let (u, du) = f(r);
            let m = 4.0 * PI * r * r * w;
            value += m * u.norm_sqr();
            grad += m * du.norm_sqr();
        }
    }
    (value, grad)
}

/// Error of the order-`ell` impedance model against the exact solution on the
/// shell `probe = (lo, hi)`.
pub fn error_freq(
    k: f64,
    eps: f64,
    ell: u32,
    probe: (f64, f64),
    source: &RadialSource,
) -> Result<FreqError> {
    let (lo, hi) = probe;
    if !(lo >= OBSTACLE_RADIUS && hi > lo) {
        return Err(invalid(
            "probe",
            format!("({lo}, {hi}) must be a shell outside the obstacle"),
        ));
    }
    let medium = MediumParams::new(eps)?;
    let exact = solve_exact_freq(&ModeProblem::new(k, medium, Model::Exact, source.clone())?)?;
    let approx = solve_gibc_freq(&ModeProblem::new(
        k,
        medium,
        Model::gibc(ell)?,
        source.clone(),
    )?)?;
    // the difference is homogeneous outside the obstacle
    let diff = ModeSolution::outgoing(k, exact.beta - approx.beta)?;
    let (v, g) = shell_norms_sq(lo, hi, |r| (diff.value(r), diff.derivative(r)));
    Ok(FreqError {
        h1: g.sqrt(),
        l2: k * v.sqrt(),
    })
}
