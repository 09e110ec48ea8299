use gibc_lab::config::{ExperimentConfig, ExperimentKind};
use gibc_lab::{fit_slope, parse_config};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = ExperimentKind> {
    prop_oneof![
        Just(ExperimentKind::TimeConvergence),
        Just(ExperimentKind::FreqConvergence),
        Just(ExperimentKind::CrossValidate),
        Just(ExperimentKind::LayerDiagnostics),
        Just(ExperimentKind::KernelChecks),
        Just(ExperimentKind::Parseval),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        kind(),
        prop::collection::vec(0.5..0.95f64, 3..6),
        0.05..1.0f64,
        prop_oneof![Just(vec![0u32]), Just(vec![1]), Just(vec![0, 1])],
        0..=i64::MAX as u64,
        any::<bool>(),
        (1.1..1.9f64, 0.05..2.0f64, 0.1..10.0f64),
        prop::option::of(0.01..1.0f64),
    )
        .prop_map(
            |(kind, ratios, top, ells, seed, record, (a, width, amplitude), dk)| {
                let mut c = ExperimentConfig::new(kind);
                let mut e = top;
                c.epsilons = ratios
                    .iter()
                    .map(|r| {
                        let v = e;
                        e *= r;
                        v
                    })
                    .collect();
                c.ells = ells;
                c.seed = seed;
                c.record_runtime = record;
                c.sim.geometry.source_inner = a;
                c.sim.geometry.source_outer = a + width;
                c.sim.amplitude = amplitude;
                c.sim.dk = dk;
                c
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn configs_round_trip(c in config()) {
        let text = c.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn slopes_of_power_laws(p in -4.0..4.0f64, c in 1e-3..1e3f64, x0 in 1e-3..1.0f64, n in 3usize..8) {
        let pts: Vec<(f64, f64)> = (0..n).map(|j| {
            let x = x0 * 1.7f64.powi(j as i32);
            (x, c * x.powf(p))
        }).collect();
        let fit = fit_slope(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn slope_ignores_prefactor_and_order(ys in prop::collection::vec(1e-3..1e3f64, 3..8), scale in 1e-3..1e3f64) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(j, y)| ((j + 1) as f64, *y)).collect();
        let base = fit_slope(&pts).unwrap();
        let scaled: Vec<(f64, f64)> = pts.iter().rev().map(|(x, y)| (*x, y * scale)).collect();
        let other = fit_slope(&scaled).unwrap();
        prop_assert!((base.slope - other.slope).abs() < 1e-9);
        prop_assert!((base.residual - other.residual).abs() < 1e-9 * (1.0 + base.residual));
    }

    #[test]
    fn nondecreasing_ladders_are_rejected(c in config(), i in 0usize..3) {
        let mut bad = c.clone();
        let j = i.min(bad.epsilons.len() - 2);
        bad.epsilons[j + 1] = bad.epsilons[j];
        let text = bad.to_toml().unwrap();
        prop_assert!(matches!(parse_config(&text), Err(gibc_lab::LabError::Validation(_))));
    }

    #[test]
    fn seeds_beyond_toml_integers_are_rejected(c in config(), seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let mut bad = c;
        bad.seed = seed;
        prop_assert!(matches!(bad.validate(), Err(gibc_lab::LabError::Validation(_))));
    }
}
