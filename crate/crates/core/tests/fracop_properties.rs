use gibc_core::fracop::*;
use num_complex::Complex64;
use proptest::prelude::*;

// smooth signal with v(0) = 0 built from a few sine modes on [0, T]
fn smooth_signal(coeffs: &[f64], dt: f64, steps: usize) -> TimeSignal {
    let horizon = dt * steps as f64;
    TimeSignal::from_fn(dt, steps, |t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, a)| a * ((m as f64 + 0.5) * std::f64::consts::PI * t / horizon).sin())
            .sum()
    })
    .unwrap()
}

fn energy(v: &TimeSignal) -> f64 {
    v.samples.iter().map(|x| x * x).sum::<f64>() * v.dt
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quadratic_form_is_nonnegative(c in coeffs(), steps in 8usize..160, dt in 1e-3..0.1f64, eps in 0.02..2.0f64) {
        let v = smooth_signal(&c, dt, steps);
        let floor = -1e-10 * energy(&v);
        for method in [AbelMethod::Direct, AbelMethod::Cq(CqScheme::Bdf1), AbelMethod::Cq(CqScheme::Bdf2)] {
            let q = boundary_quadratic_form(&v, eps, method).unwrap();
            prop_assert!(q >= floor, "{method:?}: {q}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cq_is_causal(c in coeffs(), d in coeffs(), cut in 4usize..60, dt in 1e-3..0.1f64) {
        let steps = 80;
        let a = smooth_signal(&c, dt, steps);
        let mut b = a.clone();
        let tail = smooth_signal(&d, dt, steps);
        for n in cut + 1..=steps {
            b.samples[n] += tail.samples[n] + 1.0;
        }
        let w = cq_weights(CqScheme::Bdf2, dt, steps).unwrap().with_epsilon(0.3).unwrap();
        let (ya, yb) = (abel_apply_cq(&w, &a).unwrap(), abel_apply_cq(&w, &b).unwrap());
        prop_assert_eq!(&ya.samples[..=cut], &yb.samples[..=cut]);
        let (za, zb) = (abel_apply_direct(&a, 0.3).unwrap(), abel_apply_direct(&b, 0.3).unwrap());
        prop_assert_eq!(&za.samples[..=cut], &zb.samples[..=cut]);
    }

    #[test]
    fn operators_are_linear(c in coeffs(), d in coeffs(), s in -3.0..3.0f64, dt in 1e-3..0.1f64) {
        let steps = 60;
        let (a, b) = (smooth_signal(&c, dt, steps), smooth_signal(&d, dt, steps));
        let mix = TimeSignal::new(dt, a.samples.iter().zip(&b.samples).map(|(x, y)| s * x + y).collect()).unwrap();
        let w = cq_weights(CqScheme::Bdf1, dt, steps).unwrap().with_epsilon(0.5).unwrap();
        for apply in [
            &(|v: &TimeSignal| abel_apply_cq(&w, v).unwrap()) as &dyn Fn(&TimeSignal) -> TimeSignal,
            &|v: &TimeSignal| abel_apply_direct(v, 0.5).unwrap(),
        ] {
            let (ya, yb, ym) = (apply(&a), apply(&b), apply(&mix));
            let scale = ym.samples.iter().chain(&ya.samples).fold(1.0f64, |m, x| m.max(x.abs()));
            for n in 0..=steps {
                prop_assert!((ym.samples[n] - (s * ya.samples[n] + yb.samples[n])).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn transfer_function_tracks_the_symbol(kdt in 0.01..0.5f64, dt in 1e-3..0.05f64, eps in 0.05..1.0f64) {
        let k = kdt / dt;
        // the half-derivative weights decay like n^{-3/2}; 2e5 terms leave a tail well below 5%
        let w = cq_weights(CqScheme::Bdf2, dt, 200_000).unwrap().with_epsilon(eps).unwrap();
        let exact: Complex64 = symbol(k, eps).unwrap();
        let rel = (w.transfer_function(k) - exact).norm() / exact.norm();
        prop_assert!(rel < 0.05, "kΔt = {kdt}: {rel}");
    }

    #[test]
    fn antiderivative_commutes(samples in prop::collection::vec(-2.0..2.0f64, 2..40), dt in 0.01..0.3f64) {
        let psi = TimeSignal::new(dt, samples).unwrap();
        let (left, right) = antiderivative_commutation(&psi).unwrap();
        let scale = psi.samples.iter().fold(0.0f64, |m, x| m.max(x.abs())) * (dt * psi.len() as f64).powf(1.5);
        prop_assert!((left - right).abs() <= 1e-6 * scale.max(1e-300), "{left} vs {right}");
    }

    #[test]
    fn half_integral_inverts_half_derivative(c in coeffs(), dt in 1e-3..0.05f64) {
        let steps = 100;
        let v = smooth_signal(&c, dt, steps);
        let d = CqWeights::generate(CqScheme::Bdf2, CqKernel::HalfDerivative, dt, steps).unwrap();
        let i = CqWeights::generate(CqScheme::Bdf2, CqKernel::HalfIntegral, dt, steps).unwrap();
        let back = i.convolve(&d.convolve(&v.samples).unwrap()).unwrap();
        let scale = v.samples.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        for (x, y) in v.samples.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn nonzero_start_is_refused() {
    let v = TimeSignal::new(0.1, vec![1.0, 0.5]).unwrap();
    assert!(matches!(
        abel_apply_direct(&v, 1.0),
        Err(gibc_core::Error::NonzeroInitialData(_))
    ));
}
