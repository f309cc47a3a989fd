use num_complex::Complex64;
use phasebound::bounds::{build_report, h_limit_bound, iti_bound, lossy_sql_bound};
use phasebound::capacity::unrestricted_capacity;
use phasebound::{IdlerMode, PhasePrior, ProbeSpec, ReportOptions, SimGrid, TWO_PI};
use proptest::prelude::*;

const SLACK: f64 = 1e-9;

fn amplitudes(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..max_len)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            v.into_iter().map(|(a, b)| Complex64::new(a / norm, b / norm)).collect()
        })
}

fn prior() -> impl Strategy<Value = PhasePrior> {
    prop_oneof![
        Just(PhasePrior::full_circle()),
        (0.5..5.5f64, 0.3..TWO_PI).prop_map(|(c, w)| PhasePrior::uniform(c, w).unwrap()),
        (1.0..5.0f64, 0.2..1.0f64).prop_map(|(m, s)| PhasePrior::wrapped_gaussian(m, s).unwrap()),
    ]
}

fn simulated() -> ReportOptions {
    ReportOptions {
        simulate: Some(SimGrid::default()),
        ..ReportOptions::default()
    }
}

proptest! {
    #[test]
    fn iti_at_capacity_has_closed_form(n in 0.01..1000.0f64, q in 0.01..4.0f64) {
        let direct = iti_bound(q, unrestricted_capacity(n).unwrap()).unwrap();
        let closed = q * (1.0 + 1.0 / n).powf(-2.0 * n) / (n + 1.0).powi(2);
        prop_assert!((direct - closed).abs() <= 1e-12 * closed);
        prop_assert!(closed >= h_limit_bound(q, n).unwrap());
    }

    #[test]
    fn lossy_bound_drops_with_transmittance(q in 0.01..4.0f64, n in 0.0..100.0f64, a in 0.0..0.99f64, b in 0.0..0.99f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(lossy_sql_bound(q, n, hi).unwrap() <= lossy_sql_bound(q, n, lo).unwrap() + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reports_are_nonnegative_and_below_prior_variance(
        amps in amplitudes(8),
        nds in any::<bool>(),
        prior in prior(),
        eta in 0.0..=1.0f64,
    ) {
        let idler = if nds { IdlerMode::Nds } else { IdlerMode::None };
        let probe = ProbeSpec::from_amplitudes(amps, idler).unwrap();
        let r = build_report(&prior, &probe, eta, &simulated()).unwrap();
        let bayesian = [Some(r.iti_bound), Some(r.h_limit), Some(r.hall_wiseman), r.lossy_sql, r.iti_chi, r.iti_mutual_information];
        for b in bayesian.into_iter().flatten() {
            prop_assert!(b >= 0.0);
            prop_assert!(b <= r.prior_variance + SLACK, "{b} > {}", r.prior_variance);
        }
        if let Some(e) = r.escher {
            prop_assert!(e >= 0.0);
        }
        prop_assert!(r.mse_sim.unwrap() <= r.prior_variance + 1e-8);
    }

    #[test]
    fn lossless_chain_holds(amps in amplitudes(8), prior in prior()) {
        let probe = ProbeSpec::from_amplitudes(amps, IdlerMode::None).unwrap();
        let r = build_report(&prior, &probe, 1.0, &simulated()).unwrap();
        let chain = [
            r.mse_sim.unwrap(),
            r.iti_mutual_information.unwrap(),
            r.iti_chi.unwrap(),
            r.iti_bound,
            r.h_limit,
        ];
        for w in chain.windows(2) {
            prop_assert!(w[0] >= w[1] - SLACK, "{chain:?}");
        }
    }

    #[test]
    fn lossy_nds_chain_holds(
        p in prop::collection::vec(0.0..1.0f64, 1..12).prop_filter("mass", |w| w.iter().sum::<f64>() > 1e-3),
        eta in 0.05..0.95f64,
    ) {
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let probe = ProbeSpec::nds_from_distribution(&p).unwrap();
        let r = build_report(&PhasePrior::full_circle(), &probe, eta, &simulated()).unwrap();
        let chain = [r.mse_sim.unwrap(), r.iti_chi.unwrap(), r.lossy_sql.unwrap()];
        prop_assert!(chain[0] >= chain[1] - SLACK && chain[1] >= chain[2] - SLACK, "{chain:?}");
    }
}

#[test]
fn scaling_invariants() {
    let q = PhasePrior::full_circle().entropy_power().unwrap();
    let ns = [1.0, 10.0, 100.0, 1000.0];
    let scaled: Vec<f64> = ns
        .iter()
        .map(|n| h_limit_bound(q, *n).unwrap() * (n + 1.0).powi(2))
        .collect();
    assert!(scaled.iter().all(|s| (s - scaled[0]).abs() <= 1e-12 * scaled[0]));
    for eta in [0.2, 0.5, 0.9] {
        let limit = q * (1.0 - eta) / (TWO_PI * std::f64::consts::E * eta);
        let gaps: Vec<f64> = ns
            .iter()
            .map(|n| (lossy_sql_bound(q, *n, eta).unwrap() * n - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[3] < 1e-3 * limit);
    }
}
