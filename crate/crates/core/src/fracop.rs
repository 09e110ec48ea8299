//! The order-1 boundary operator `B₁^ε v = (1/(√π ε)) ∫₀ᵗ ∂_t v(τ) / √(t − τ) dτ`
//! and its discretizations.
//!
//! Two routes are provided: the L1 product-integration scheme
//! ([`abel_apply_direct`]), exact for piecewise-linear data, and Lubich
//! convolution quadrature ([`abel_apply_cq`]) driven by the power series of
//! `(δ(ζ)/Δt)^{±1/2}` for the BDF1 and BDF2 generating polynomials.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::ALPHA;
use crate::quad::{gl16, gl8};

/// Uniformly sampled real signal `v_n = v(n Δt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl TimeSignal {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        check_positive("dt", dt)?;
        Ok(Self { dt, samples })
    }

    /// Samples `f` at `t_n = n Δt` for `n = 0..=steps`.
    pub fn from_fn(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(dt, (0..=steps).map(|n| f(n as f64 * dt)).collect())
    }

    pub fn zeros(dt: f64, len: usize) -> Result<Self> {
        Self::new(dt, vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn last(&self) -> f64 {
        self.samples.last().copied().unwrap_or(0.0)
    }

    fn require_zero_start(&self) -> Result<()> {
        match self.samples.first() {
            Some(&v0) if v0 != 0.0 => Err(Error::NonzeroInitialData(v0)),
            _ => Ok(()),
        }
    }
}

/// Generating polynomial of the underlying multistep method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CqScheme {
    Bdf1,
    #[default]
    Bdf2,
}

impl CqScheme {
    /// `δ(ζ)`: `1 − ζ` or `3/2 − 2ζ + ζ²/2`.
    pub fn delta(&self, zeta: Complex64) -> Complex64 {
        match self {
            CqScheme::Bdf1 => 1.0 - zeta,
            CqScheme::Bdf2 => 1.5 - 2.0 * zeta + 0.5 * zeta * zeta,
        }
    }
}

/// Which power of the Laplace variable the weights discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqKernel {
    /// Symbol `√s`: applied to `v` it approximates `√π · ε · B₁^ε v`.
    HalfDerivative,
    /// Symbol `1/√s`: applied to `∂_t v` it approximates the same quantity.
    HalfIntegral,
}

impl CqKernel {
    fn exponent(&self) -> f64 {
        match self {
            CqKernel::HalfDerivative => 0.5,
            CqKernel::HalfIntegral => -0.5,
        }
    }
}

/// Convolution-quadrature weights `ω_0 … ω_N` with an overall scale (`1/ε`).
#[derive(Debug, Clone, PartialEq)]
pub struct CqWeights {
    pub weights: Vec<f64>,
    pub scheme: CqScheme,
    pub kernel: CqKernel,
    pub dt: f64,
    pub scale: f64,
}

/// Coefficients of the binomial series of `(1 − ζ)^p`.
fn binomial_series(p: f64, len: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(len);
    let mut prev = 1.0;
    for n in 0..len {
        if n > 0 {
            prev *= (n as f64 - 1.0 - p) / n as f64;
        }
        c.push(prev);
    }
    c
}

impl CqWeights {
    /// Weights of `(δ(ζ)/Δt)^p` for `n + 1` terms.
    pub fn generate(scheme: CqScheme, kernel: CqKernel, dt: f64, n: usize) -> Result<Self> {
        check_positive("dt", dt)?;
        let p = kernel.exponent();
        let len = n + 1;
        let a = binomial_series(p, len);
        let weights = match scheme {
            CqScheme::Bdf1 => {
                let s = dt.powf(-p);
                a.into_iter().map(|c| c * s).collect()
            }
            CqScheme::Bdf2 => {
                // δ(ζ) = (3/2)(1 − ζ)(1 − ζ/3); the second factor's series
                // decays like 3^{-k}, so a short convolution suffices.
                let mut b = Vec::new();
                let mut third = 1.0;
                for (k, c) in a.iter().enumerate() {
                    let v = c * third;
                    if k > 0 && v.abs() < 1e-20 {
                        break;
                    }
                    b.push(v);
                    third /= 3.0;
                }
                let s = (1.5 / dt).powf(p);
                (0..len)
                    .map(|m| {
                        let top = m.min(b.len() - 1);
                        s * (0..=top).map(|k| b[k] * a[m - k]).sum::<f64>()
                    })
                    .collect()
            }
        };
        Ok(Self {
            weights,
            scheme,
            kernel,
            dt,
            scale: 1.0,
        })
    }

    /// Attaches the `1/ε` prefactor of `B₁^ε`. For the half-integral kernel the
    /// extra `1/√π` of the Abel kernel is already absorbed by the symbol.
    pub fn with_epsilon(mut self, eps: f64) -> Result<Self> {
        check_positive("eps", eps)?;
        self.scale = 1.0 / eps;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Causal discrete convolution `scale · Σ_{j≤n} ω_j v_{n−j}`.
    pub fn convolve(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() > self.weights.len() {
            return Err(Error::Dimension(format!(
                "signal of length {} exceeds {} weights",
                v.len(),
                self.weights.len()
            )));
        }
        Ok((0..v.len())
            .map(|n| {
                self.scale
                    * self.weights[..=n]
                        .iter()
                        .zip(v[..=n].iter().rev())
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect())
    }

    /// `scale · Σ_n ω_n ζⁿ` at `ζ = e^{ikΔt}`: the response to `e^{−ikt}`.
    pub fn transfer_function(&self, k: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, k * self.dt);
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &self.weights {
            acc += *w * z;
            z *= step;
        }
        acc * self.scale
    }
}

/// Half-derivative weights (symbol `√s`, unit scale).
pub fn cq_weights(scheme: CqScheme, dt: f64, n: usize) -> Result<CqWeights> {
    CqWeights::generate(scheme, CqKernel::HalfDerivative, dt, n)
}

/// L1 product integration of `B₁^ε v`: `∂_t v` piecewise constant, the
/// kernel integrated exactly on each cell.
pub fn abel_apply_direct(v: &TimeSignal, eps: f64) -> Result<TimeSignal> {
    check_positive("eps", eps)?;
    v.require_zero_start()?;
    let n = v.len();
    let diffs: Vec<f64> = v.samples.windows(2).map(|w| w[1] - w[0]).collect();
    // b_m = √(m+1) − √m
    let b: Vec<f64> = (0..n)
        .map(|m| ((m + 1) as f64).sqrt() - (m as f64).sqrt())
        .collect();
    let pre = 2.0 / (PI.sqrt() * eps * v.dt.sqrt());
    let out = (0..n)
        .map(|m| pre * (0..m).map(|j| diffs[j] * b[m - 1 - j]).sum::<f64>())
        .collect();
    TimeSignal::new(v.dt, out)
}

/// Convolution-quadrature evaluation of `B₁^ε v` with half-derivative weights
/// already carrying the `1/ε` scale.
pub fn abel_apply_cq(w: &CqWeights, v: &TimeSignal) -> Result<TimeSignal> {
    if w.kernel != CqKernel::HalfDerivative {
        return Err(Error::Internal(
            "abel_apply_cq needs half-derivative weights".into(),
        ));
    }
    if (w.dt - v.dt).abs() > 1e-12 * v.dt {
        return Err(Error::Dimension(format!(
            "weights for dt = {} applied to dt = {}",
            w.dt, v.dt
        )));
    }
    v.require_zero_start()?;
    TimeSignal::new(v.dt, w.convolve(&v.samples)?)
}

/// Frequency-domain symbol of `B₁^ε`: `α √k / ε`.
pub fn symbol(k: f64, eps: f64) -> Result<Complex64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("symbol needs k > 0, got {k}")));
    }
    check_positive("eps", eps)?;
    Ok(ALPHA * k.sqrt() / eps)
}

/// `(1/√(2π)) ∫₀^T t^{-1/2} e^{ikt} dt`, which tends to `e^{iπ/4}/√(2k)`.
///
/// Substituting `t = x²` removes the singularity; panels are cut where the
/// phase `k x²` advances by `π/2`.
pub fn kernel_fourier_check(k: f64, truncation: f64) -> Result<Complex64> {
    check_positive("k", k)?;
    check_positive("truncation", truncation)?;
    let rule = gl16();
    let x_end = truncation.sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut m = 0usize;
    loop {
        let lo = (m as f64 * PI / (2.0 * k)).sqrt();
        if lo >= x_end {
            break;
        }
        let hi = (((m + 1) as f64) * PI / (2.0 * k)).sqrt().min(x_end);
        acc += rule.integrate(lo, hi, |x| Complex64::from_polar(2.0, k * x * x));
        m += 1;
    }
    Ok(acc / (2.0 * PI).sqrt())
}

/// Bound on the neglected tail `|(1/√(2π)) ∫_T^∞ t^{-1/2} e^{ikt} dt|`.
pub fn kernel_fourier_tail_bound(k: f64, truncation: f64) -> f64 {
    2.0 / ((2.0 * PI).sqrt() * k * truncation.sqrt())
}

/// Discretization used by [`boundary_quadratic_form`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbelMethod {
    Direct,
    Cq(CqScheme),
}

/// `Σ_n (B₁^ε v)_n (v_n − v_{n−1})`, the discrete counterpart of
/// `∫₀ᵗ (B₁^ε v) ∂_t v ds`.
pub fn boundary_quadratic_form(v: &TimeSignal, eps: f64, method: AbelMethod) -> Result<f64> {
    let bv = match method {
        AbelMethod::Direct => abel_apply_direct(v, eps)?,
        AbelMethod::Cq(scheme) => {
            let w = cq_weights(scheme, v.dt, v.len().saturating_sub(1))?.with_epsilon(eps)?;
            abel_apply_cq(&w, v)?
        }
    };
    Ok((1..v.len())
        .map(|n| bv.samples[n] * (v.samples[n] - v.samples[n - 1]))
        .sum())
}

/// `∫₀ᵗ f(τ) (t − τ)^{-1/2} dτ` for `f` smooth between the given breakpoints.
fn abel_convolve(f: &dyn Fn(f64) -> f64, breakpoints: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // τ = t − x², x ∈ [0, √t]
    let rule = gl8();
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .filter(|&&b| b > 0.0 && b < t)
        .map(|&b| (t - b).sqrt())
        .collect();
    cuts.push(0.0);
    cuts.push(t.sqrt());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cuts.windows(2)
        .map(|w| rule.integrate(w[0], w[1], |x| 2.0 * f(t - x * x)))
        .sum()
}

/// Both sides of `∫₀ᵗ (φ ∗ ψ)(s) ds = (φ ∗ Ψ)(t)` with `φ(t) = t^{-1/2}`,
/// `Ψ` the running integral of `ψ`, and `ψ` the piecewise-linear interpolant
/// of the samples. Returns `(left, right)` at the final sample time.
pub fn antiderivative_commutation(psi: &TimeSignal) -> Result<(f64, f64)> {
    let n = psi.len();
    if n < 2 {
        return Ok((0.0, 0.0));
    }
    if psi.samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("psi must be bounded".into()));
    }
    let dt = psi.dt;
    let s = &psi.samples;
    let nodes: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    let cell = |tau: f64| ((tau / dt).floor() as usize).min(n - 2);
    let interp = |tau: f64| {
        let j = cell(tau);
        let x = tau / dt - j as f64;
        s[j] + x * (s[j + 1] - s[j])
    };
    // running integral, exact for the interpolant
    let mut prefix = vec![0.0; n];
    for j in 1..n {
        prefix[j] = prefix[j - 1] + 0.5 * dt * (s[j - 1] + s[j]);
    }
    let running = |tau: f64| {
        let j = cell(tau);
        let x = tau - j as f64 * dt;
        let slope = (s[j + 1] - s[j]) / dt;
        prefix[j] + s[j] * x + 0.5 * slope * x * x
    };
    let t = nodes[n - 1];

    let rule = gl8();
    let mut left = 0.0;
    for j in 0..n - 1 {
        // s = t_j + Δt y² absorbs the (s − t_j)^{1/2} behaviour at each node
        left += rule.integrate(0.0, 1.0, |y| {
            let sv = nodes[j] + dt * y * y;
            abel_convolve(&interp, &nodes, sv) * 2.0 * dt * y
        });
    }
    let right = abel_convolve(&running, &nodes, t);
    Ok((left, right))
}
