//! Skin-layer expansion inside the obstacle: the stretched profiles, the
//! cutoff corrector, composite fields and the defect `d_ℓ` with its residual
//! `q_ℓ` under the absorbing Helmholtz operator.
//!
//! Depth into the ball is `ν = 1 − r` and the stretched coordinate is
//! `η = ν/ε̂`. Normal derivatives are taken along the inward normal.

use num_complex::Complex64;

use crate::error::{check_positive, invalid, Error, Result};
use crate::helmholtz::{
    compute_we, solve_exact_freq, ExpansionTerms, ModeProblem, ModeSolution, RadialSource,
};
use crate::model::{
    MediumParams, Model, Provenance, RadialField, RadialGrid, ALPHA, OBSTACLE_RADIUS,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Principal curvatures of the boundary summarized by their mean and product,
/// signed for the inward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureData {
    pub mean: f64,
    pub gaussian: f64,
}

impl CurvatureData {
    pub fn unit_sphere() -> Self {
        Self {
            mean: -1.0,
            gaussian: 1.0,
        }
    }

    /// Area element ratio `1 + 2νH + ν²G` of the parallel surface at depth `ν`.
    pub fn area_ratio(&self, nu: f64) -> f64 {
        1.0 + 2.0 * nu * self.mean + nu * nu * self.gaussian
    }
}

/// Smooth even cutoff: 1 on `|x| ≤ δ/2`, 0 on `|x| ≥ δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFunction {
    delta: f64,
}

impl Default for CutoffFunction {
    fn default() -> Self {
        Self { delta: 0.2 }
    }
}

impl CutoffFunction {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn value(&self, x: f64) -> f64 {
        fn bump(x: f64) -> f64 {
            if x > 0.0 {
                (-1.0 / x).exp()
            } else {
                0.0
            }
        }
        let half = 0.5 * self.delta;
        let s = (x.abs() - half) / half;
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            let on = bump(1.0 - s);
            on / (on + bump(s))
        }
    }
}

/// `w_i¹(η) = −(1/α) ∂_n w_e⁰ e^{−αη}`.
pub fn profile_w1(eta: f64, dn_we0: Complex64) -> Complex64 {
    LayerProfile::First { dn0: dn_we0 }.value(eta)
}

/// `w_i²(η)` for mean curvature `h_mean`.
pub fn profile_w2(eta: f64, dn_we0: Complex64, dn_we1: Complex64, h_mean: f64) -> Complex64 {
    LayerProfile::Second {
        dn0: dn_we0,
        dn1: dn_we1,
        mean_curvature: h_mean,
    }
    .value(eta)
}

/// Interior layer profiles in the stretched variable. Each is
/// `(a + bη) e^{−αη}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerProfile {
    First {
        dn0: Complex64,
    },
    Second {
        dn0: Complex64,
        dn1: Complex64,
        mean_curvature: f64,
    },
}

impl LayerProfile {
    pub fn order(&self) -> u32 {
        match self {
            Self::First { .. } => 1,
            Self::Second { .. } => 2,
        }
    }

    // 1/α = conj(α), 1/α² = i
    fn coefficients(&self) -> (Complex64, Complex64) {
        let inv_alpha = ALPHA.conj();
        match *self {
            Self::First { dn0 } => (-inv_alpha * dn0, ZERO),
            Self::Second {
                dn0,
                dn1,
                mean_curvature: h,
            } => (-inv_alpha * dn1 + I * h * dn0, h * inv_alpha * dn0),
        }
    }

    pub fn value(&self, eta: f64) -> Complex64 {
        let (a, b) = self.coefficients();
        (a + b * eta) * (-ALPHA * eta).exp()
    }

    pub fn d_eta(&self, eta: f64) -> Complex64 {
        let (a, b) = self.coefficients();
        (b - ALPHA * (a + b * eta)) * (-ALPHA * eta).exp()
    }

    /// Right side of `(∂_η² + i) w = …` for this order. For the second order
    /// only the first-derivative part of the curvature operator survives on
    /// `w_i¹`, giving `−2H ∂_η w_i¹`.
    pub fn forcing(&self, eta: f64) -> Complex64 {
        match *self {
            Self::First { .. } => ZERO,
            Self::Second {
                dn0,
                mean_curvature,
                ..
            } => -2.0 * mean_curvature * LayerProfile::First { dn0 }.d_eta(eta),
        }
    }
}

/// Largest `|(∂_η² + i) w − forcing|` over 20 sample points, by centred
/// differences, relative to the largest sampled `|w|`.
pub fn ode_residual_check(profile: &LayerProfile) -> f64 {
    let step = 1e-3;
    let samples: Vec<f64> = (0..20).map(|j| 0.25 + 0.5 * j as f64).collect();
    let scale = samples
        .iter()
        .map(|&x| profile.value(x).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    samples
        .iter()
        .map(|&x| {
            let second = (profile.value(x + step) - 2.0 * profile.value(x)
                + profile.value(x - step))
                / (step * step);
            (second + I * profile.value(x) - profile.forcing(x)).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// Least-squares decay rate of `|w(η)|` over `[lo, hi]`.
pub fn fitted_decay_rate(profile: &LayerProfile, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo && lo >= 0.0) {
        return Err(invalid("range", format!("bad fit window [{lo}, {hi}]")));
    }
    let n = 64;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|j| {
            let x = lo + (hi - lo) * j as f64 / n as f64;
            (x, profile.value(x).norm().ln())
        })
        .collect();
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Domain(
            "profile vanishes inside the fit window".into(),
        ));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// `φ(ν) = ν χ(ν/ε̂) ∂_n w_e^ℓ`.
pub fn corrector_phi(
    nu: f64,
    eps_hat: f64,
    dn_wel: Complex64,
    cutoff: &CutoffFunction,
) -> Complex64 {
    nu * cutoff.value(nu / eps_hat) * dn_wel
}

/// Exact solution together with the truncated layer expansion of order `ℓ`
/// at one frequency.
#[derive(Debug, Clone)]
pub struct LayerExpansion {
    pub ell: u32,
    pub k: f64,
    pub eps_hat: f64,
    pub exact: ModeSolution,
    pub exterior_terms: ExpansionTerms,
    pub cutoff: CutoffFunction,
    pub curvature: CurvatureData,
}

impl LayerExpansion {
    pub fn new(
        ell: u32,
        k: f64,
        eps_hat: f64,
        source: &RadialSource,
        cutoff: CutoffFunction,
    ) -> Result<Self> {
        check_positive("k", k)?;
        check_positive("eps_hat", eps_hat)?;
        let medium = MediumParams::new(eps_hat * k.sqrt())?;
        let exact = solve_exact_freq(&ModeProblem::new(k, medium, Model::Exact, source.clone())?)?;
        let exterior_terms = compute_we(ell, k, source)?;
        Ok(Self {
            ell,
            k,
            eps_hat,
            exact,
            exterior_terms,
            cutoff,
            curvature: CurvatureData::unit_sphere(),
        })
    }

    fn dn(&self, j: usize) -> Complex64 {
        self.exterior_terms.normal_derivatives[j]
    }

    /// `Σ_{j≤ℓ} ε̂^j w_e^j(r)` outside the obstacle.
    pub fn exterior(&self, r: f64) -> Complex64 {
        self.exterior_terms.value(self.eps_hat, r)
    }

    /// `χ(ν) Σ_{j≤ℓ} ε̂^j w_i^j(ν/ε̂)` inside; the zeroth profile vanishes.
    pub fn interior(&self, r: f64) -> Complex64 {
        let nu = OBSTACLE_RADIUS - r;
        if self.ell == 0 {
            return ZERO;
        }
        let eta = nu / self.eps_hat;
        self.eps_hat * profile_w1(eta, self.dn(0)) * self.cutoff.value(nu)
    }

    pub fn corrector(&self, r: f64) -> Complex64 {
        corrector_phi(
            OBSTACLE_RADIUS - r,
            self.eps_hat,
            self.dn(self.ell as usize),
            &self.cutoff,
        )
    }

    /// `d_ℓ(r)`: exact minus the exterior expansion outside, exact minus the
    /// composite and the scaled corrector inside.
    pub fn defect(&self, r: f64) -> Complex64 {
        if r >= OBSTACLE_RADIUS {
            self.exact.value(r) - self.exterior(r)
        } else {
            self.exact.value(r)
                - self.interior(r)
                - self.eps_hat.powi(self.ell as i32) * self.corrector(r)
        }
    }

    pub fn profile(&self) -> Option<LayerProfile> {
        (self.ell >= 1).then(|| LayerProfile::First { dn0: self.dn(0) })
    }
}

/// Composite interior and exterior fields on the two grids.
pub fn composite_fields(
    expansion: &LayerExpansion,
    exterior: RadialGrid,
    interior: RadialGrid,
) -> Result<(RadialField<Complex64>, RadialField<Complex64>)> {
    if exterior.start() < OBSTACLE_RADIUS || interior.end() > OBSTACLE_RADIUS {
        return Err(Error::Domain(
            "composite grids must not cross the boundary".into(),
        ));
    }
    let ext = RadialField::from_fn(exterior, Provenance::Composite, |r| expansion.exterior(r));
    let int = RadialField::from_fn(interior, Provenance::Composite, |r| expansion.interior(r));
    Ok((ext, int))
}

/// Spacings for sampling `d_ℓ` on either side of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerResolution {
    /// Interior spacing as a fraction of `ε̂`.
    pub interior_per_eps_hat: f64,
    pub exterior_h: f64,
    pub exterior_extent: f64,
}

impl Default for LayerResolution {
    fn default() -> Self {
        Self {
            interior_per_eps_hat: 1.0 / 2000.0,
            exterior_h: 1e-3,
            exterior_extent: 0.25,
        }
    }
}

/// Sampled defect and residual with the diagnostics derived from them.
#[derive(Debug, Clone)]
pub struct DefectFields {
    pub interior_d: RadialField<Complex64>,
    pub exterior_d: RadialField<Complex64>,
    pub interior_q: RadialField<Complex64>,
    pub exterior_q: RadialField<Complex64>,
    /// `|∂_r d(1⁻) − ∂_r d(1⁺)|` from one-sided second-order differences.
    pub derivative_jump: f64,
    pub derivative_scale: f64,
    pub interior_q_max: f64,
    pub exterior_q_max: f64,
    /// `‖q_ℓ‖_{L²(Ω)}` over the sampled layer.
    pub interior_q_l2: f64,
}

// (r d)'' + (k² + c)(r d) divided by r, at each node away from the ends
fn apply_operator(
    d: &RadialField<Complex64>,
    k: f64,
    absorption: Complex64,
) -> RadialField<Complex64> {
    let g = d.grid;
    let h = g.h();
    let w: Vec<Complex64> = d
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| g.r(j) * v)
        .collect();
    let n = w.len();
    let values = (0..n)
        .map(|j| {
            if j == 0 || j + 1 == n {
                return ZERO;
            }
            let lap = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (h * h);
            (lap + (k * k + absorption) * w[j]) / g.r(j)
        })
        .collect();
    RadialField::new(g, values, Provenance::FiniteDifference).expect("same grid")
}

/// Samples `d_ℓ` on a layer-resolving interior grid over `ν ∈ [0, δ]` and an
/// exterior grid, applies the discrete absorbing Helmholtz operator and
/// measures the derivative jump across the boundary.
pub fn defect_fields(expansion: &LayerExpansion, res: LayerResolution) -> Result<DefectFields> {
    let eps_hat = expansion.eps_hat;
    let delta = expansion.cutoff.delta();
    let h_in = res.interior_per_eps_hat * eps_hat;
    // the stretched cutoff in the corrector switches off over δε̂/2
    let required = delta * eps_hat / 40.0;
    if h_in > required {
        return Err(Error::UnresolvedLayer { h: h_in, required });
    }
    let cells = (delta / h_in).ceil();
    let h_in = delta / cells;
    let interior = RadialGrid::new(OBSTACLE_RADIUS - delta, OBSTACLE_RADIUS, h_in)?;
    let ext_cells = (res.exterior_extent / res.exterior_h).round().max(4.0);
    let exterior = RadialGrid::new(
        OBSTACLE_RADIUS,
        OBSTACLE_RADIUS + ext_cells * res.exterior_h,
        res.exterior_h,
    )?;

    let interior_d = RadialField::from_fn(interior, Provenance::Composite, |r| {
        if r >= OBSTACLE_RADIUS {
            expansion.defect(OBSTACLE_RADIUS - 1e-15)
        } else {
            expansion.defect(r)
        }
    });
    let exterior_d = RadialField::from_fn(exterior, Provenance::Composite, |r| expansion.defect(r));

    let absorption = I / (eps_hat * eps_hat);
    let interior_q = apply_operator(&interior_d, expansion.k, absorption);
    let exterior_q = apply_operator(&exterior_d, expansion.k, ZERO);

    let one_sided = |v: &[Complex64], h: f64| (3.0 * v[0] - 4.0 * v[1] + v[2]) / (2.0 * h);
    let n = interior_d.values.len();
    let inner_tail = [
        interior_d.values[n - 1],
        interior_d.values[n - 2],
        interior_d.values[n - 3],
    ];
    let d_inside = one_sided(&inner_tail, h_in);
    let d_outside = -one_sided(&exterior_d.values[..3], res.exterior_h);
    let derivative_jump = (d_inside - d_outside).norm();
    let derivative_scale = expansion.exact.derivative(OBSTACLE_RADIUS).norm();

    let interior_q_max = interior_q
        .values
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let exterior_q_max = exterior_q
        .values
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    // trapezoid with 4πr² weight; the end nodes carry no residual
    let interior_q_l2 = (interior_q
        .values
        .iter()
        .enumerate()
        .map(|(j, z)| z.norm_sqr() * interior.r(j).powi(2))
        .sum::<f64>()
        * h_in
        * 4.0
        * std::f64::consts::PI)
        .sqrt();

    Ok(DefectFields {
        interior_d,
        exterior_d,
        interior_q,
        exterior_q,
        derivative_jump,
        derivative_scale,
        interior_q_max,
        exterior_q_max,
        interior_q_l2,
    })
}

/// Sup over the layer `ν ∈ [0, δ]` of `|exact − composite|` inside, sampled
/// with `samples + 1` points.
pub fn layer_accuracy(expansion: &LayerExpansion, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two"));
    }
    let delta = expansion.cutoff.delta();
    Ok((0..=samples)
        .map(|j| {
            let r = OBSTACLE_RADIUS - delta * j as f64 / samples as f64;
            let r = r.min(OBSTACLE_RADIUS - 1e-15);
            (expansion.exact.value(r) - expansion.interior(r)).norm()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Geometry, SourcePulse};
    use std::f64::consts::SQRT_2;

    fn source() -> RadialSource {
        RadialSource::from_pulse(&SourcePulse::new(2.0, &Geometry::default(), 1.0).unwrap())
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        lx.iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
    }

    #[test]
    fn first_profile_values() {
        let one = Complex64::new(1.0, 0.0);
        let w = profile_w1(0.0, one);
        assert!((w - Complex64::new(-SQRT_2 / 2.0, -SQRT_2 / 2.0)).norm() < 1e-15);
        assert!((ALPHA * w + 1.0).norm() < 1e-15);
        let ratio = profile_w1(2.0, one).norm() / w.norm();
        assert!((ratio - (-SQRT_2).exp()).abs() < 1e-15);
        assert!((ratio - 0.2431167).abs() < 1e-7);
        assert!(profile_w1(80.0, one).norm() < 1e-24);
    }

    #[test]
    fn second_profile_values() {
        let one = Complex64::new(1.0, 0.0);
        let w = profile_w2(0.0, one, ZERO, -1.0);
        assert!((w + I).norm() < 1e-15);
        let dn1 = Complex64::new(0.3, -1.2);
        for eta in [0.0, 0.7, 3.0] {
            assert_eq!(profile_w2(eta, one, dn1, 0.0), profile_w1(eta, dn1));
        }
        assert!(profile_w2(120.0, one, dn1, -1.0).norm() < 1e-30);
    }

    #[test]
    fn profiles_meet_their_boundary_slopes() {
        let dn0 = Complex64::new(0.4, 1.1);
        let dn1 = Complex64::new(-0.8, 0.2);
        let second = LayerProfile::Second {
            dn0,
            dn1,
            mean_curvature: -1.0,
        };
        assert!((LayerProfile::First { dn0 }.d_eta(0.0) - dn0).norm() < 1e-14);
        assert!((second.d_eta(0.0) - dn1).norm() < 1e-14);
    }

    #[test]
    fn profile_equations_hold() {
        let dn0 = Complex64::new(0.4, 1.1);
        let dn1 = Complex64::new(-0.8, 0.2);
        assert!(ode_residual_check(&LayerProfile::First { dn0 }) <= 1e-6);
        let second = LayerProfile::Second {
            dn0,
            dn1,
            mean_curvature: -1.0,
        };
        assert!(ode_residual_check(&second) <= 1e-6);
        // hand derivation: (∂²+i)[(a+bη)e^{−αη}] = −2αb e^{−αη} with αb = H ∂_n w_e⁰
        let x = 1.3;
        assert!((second.forcing(x) - (-2.0 * -1.0 * dn0 * (-ALPHA * x).exp())).norm() < 1e-14);
        assert_eq!(ode_residual_check(&LayerProfile::First { dn0: ZERO }), 0.0);
    }

    #[test]
    fn decay_rates() {
        let dn0 = Complex64::new(1.0, 0.5);
        let first = LayerProfile::First { dn0 };
        let rate = fitted_decay_rate(&first, 0.0, 20.0).unwrap();
        assert!((rate - SQRT_2 / 2.0).abs() < 1e-12);
        let second = LayerProfile::Second {
            dn0,
            dn1: Complex64::new(0.2, 0.0),
            mean_curvature: -1.0,
        };
        let rate = fitted_decay_rate(&second, 200.0, 400.0).unwrap();
        assert!((rate / (SQRT_2 / 2.0) - 1.0).abs() < 0.01, "{rate}");
    }

    #[test]
    fn sphere_area_ratio() {
        let c = CurvatureData::unit_sphere();
        for j in 0..=100 {
            let nu = j as f64 / 100.0;
            assert!((c.area_ratio(nu) - (1.0 - nu).powi(2)).abs() <= 1e-14);
        }
    }

    #[test]
    fn cutoff_shape() {
        let chi = CutoffFunction::default();
        assert_eq!(chi.value(0.0), 1.0);
        assert_eq!(chi.value(-0.1), 1.0);
        assert_eq!(chi.value(0.2), 0.0);
        assert_eq!(chi.value(0.5), 0.0);
        let mut prev = 1.0;
        for j in 0..=200 {
            let v = chi.value(0.1 + 0.1 * j as f64 / 200.0);
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
        assert!((chi.value(0.15) - 0.5).abs() < 1e-15);
        assert!(CutoffFunction::new(1.5).is_err());
    }

    #[test]
    fn corrector_vanishes_on_boundary_with_matching_slope() {
        let chi = CutoffFunction::default();
        let dn = Complex64::new(0.6, -0.9);
        let eps_hat = 0.02;
        assert_eq!(corrector_phi(0.0, eps_hat, dn, &chi), ZERO);
        let step = 1e-6;
        let slope = corrector_phi(step, eps_hat, dn, &chi) / step;
        assert!((slope - dn).norm() < 1e-8);
        assert_eq!(
            corrector_phi(chi.delta() * eps_hat, eps_hat, dn, &chi),
            ZERO
        );
        assert_eq!(corrector_phi(0.1, eps_hat, dn, &chi), ZERO);
    }

    #[test]
    fn composite_structure() {
        let src = source();
        let chi = CutoffFunction::default();
        let zeroth = LayerExpansion::new(0, 1.0, 0.05, &src, chi).unwrap();
        let grid_in = RadialGrid::new(0.8, 1.0, 1e-3).unwrap();
        let grid_out = RadialGrid::new(1.0, 1.5, 1e-3).unwrap();
        let (_, inner) = composite_fields(&zeroth, grid_out, grid_in).unwrap();
        assert!(inner.values.iter().all(|z| *z == ZERO));

        let first = LayerExpansion::new(1, 1.0, 0.05, &src, chi).unwrap();
        let dn0 = first.exterior_terms.normal_derivatives[0];
        let at_boundary = first.interior(1.0);
        assert!((at_boundary + 0.05 * ALPHA.conj() * dn0).norm() < 1e-15);
        // the exterior expansion tends to w_e⁰ as ε̂ shrinks
        let tiny = LayerExpansion::new(1, 1.0, 1e-8, &src, chi).unwrap();
        let w0 = &tiny.exterior_terms.terms[0];
        for r in [1.0, 1.2, 1.4] {
            assert!((tiny.exterior(r) - w0.value(r)).norm() < 1e-7);
        }
        assert!(composite_fields(&first, grid_in, grid_out).is_err());
    }

    #[test]
    fn defect_is_supported_inside_and_glued() {
        let src = source();
        for ell in [0, 1] {
            let exp = LayerExpansion::new(ell, 1.0, 0.04, &src, CutoffFunction::default()).unwrap();
            let out = defect_fields(&exp, LayerResolution::default()).unwrap();
            assert!(
                out.exterior_q_max <= 1e-6 * out.interior_q_max,
                "ℓ = {ell}: {} vs {}",
                out.exterior_q_max,
                out.interior_q_max
            );
            assert!(
                out.derivative_jump <= 1e-4 * out.derivative_scale,
                "ℓ = {ell}: jump {} scale {}",
                out.derivative_jump,
                out.derivative_scale
            );
        }
    }

    #[test]
    fn derivative_jump_shrinks_with_resolution() {
        let exp = LayerExpansion::new(1, 1.0, 0.04, &source(), CutoffFunction::default()).unwrap();
        let jumps: Vec<f64> = [1.0 / 500.0, 1.0 / 1000.0]
            .iter()
            .map(|&f| {
                let res = LayerResolution {
                    interior_per_eps_hat: f,
                    exterior_h: 4e-3 * f * 500.0,
                    ..LayerResolution::default()
                };
                defect_fields(&exp, res).unwrap().derivative_jump
            })
            .collect();
        let rate = (jumps[0] / jumps[1]).log2();
        assert!(rate > 1.7, "{jumps:?}");
    }

    #[test]
    fn residual_norm_scaling() {
        // the corrector term carries ε̂^ℓ · O(1/ε̂) over a layer of width ε̂
        let src = source();
        let eps = [0.04, 0.02, 0.01];
        for ell in [0, 1] {
            let norms: Vec<f64> = eps
                .iter()
                .map(|&e| {
                    let exp =
                        LayerExpansion::new(ell, 1.0, e, &src, CutoffFunction::default()).unwrap();
                    defect_fields(&exp, LayerResolution::default())
                        .unwrap()
                        .interior_q_l2
                })
                .collect();
            let p = slope(&eps, &norms);
            assert!(
                (p - (ell as f64 - 0.5)).abs() < 0.2,
                "ℓ = {ell}: {p} from {norms:?}"
            );
            assert!(p >= ell as f64 - 1.0 - 0.4);
        }
    }

    #[test]
    fn unresolved_layer_is_refused() {
        let exp = LayerExpansion::new(1, 1.0, 0.04, &source(), CutoffFunction::default()).unwrap();
        let res = LayerResolution {
            interior_per_eps_hat: 0.05,
            ..LayerResolution::default()
        };
        assert!(matches!(
            defect_fields(&exp, res),
            Err(Error::UnresolvedLayer { .. })
        ));
    }

    #[test]
    fn layer_accuracy_orders() {
        let src = source();
        let chi = CutoffFunction::default();
        let eps = [0.04, 0.02, 0.01];
        let acc = |ell| -> Vec<f64> {
            eps.iter()
                .map(|&e| {
                    layer_accuracy(&LayerExpansion::new(ell, 1.0, e, &src, chi).unwrap(), 4000)
                        .unwrap()
                })
                .collect()
        };
        let zeroth = acc(0);
        let first = acc(1);
        assert!((slope(&eps, &zeroth) - 1.0).abs() < 0.5, "{zeroth:?}");
        assert!((slope(&eps, &first) - 2.0).abs() < 0.5, "{first:?}");
        for (a, b) in zeroth.iter().zip(&first).skip(1) {
            assert!(b < a);
        }
    }
}
