use phasebound::rate_distortion::{
    blahut_arimoto_point, blahut_arimoto_trace, discretization_slack, rd_curve, shannon_lb_distortion, shannon_lb_rate,
    squared_error_matrix, DiscreteSource,
};
use phasebound::PhasePrior;
use proptest::prelude::*;

proptest! {
    #[test]
    fn shannon_bounds_are_inverse(q in 1e-3..10.0f64, frac in 1e-6..1.0f64) {
        let d = q * frac;
        let back = shannon_lb_distortion(q, shannon_lb_rate(q, d).unwrap()).unwrap();
        prop_assert!((back - d).abs() <= 4.0 * f64::EPSILON * d);
    }

    #[test]
    fn shannon_rate_vanishes_above_entropy_power(q in 1e-3..10.0f64, extra in 1.0..100.0f64) {
        prop_assert_eq!(shannon_lb_rate(q, q * extra).unwrap(), 0.0);
    }

    #[test]
    fn random_sources_give_valid_points(
        w in prop::collection::vec(0.0..1.0f64, 2..12).prop_filter("mass", |w| w.iter().sum::<f64>() > 1e-3),
        slope in 0.05..20.0f64,
    ) {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let pts: Vec<f64> = (0..p.len()).map(|i| i as f64 * 0.5).collect();
        let d = squared_error_matrix(&pts, &pts);
        let point = blahut_arimoto_point(&p, &d, slope).unwrap();
        let entropy: f64 = p.iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum();
        prop_assert!(point.rate >= 0.0 && point.rate <= entropy + 1e-9);
        prop_assert!(point.tangent_lower_bound(point.distortion) <= point.rate + 1e-9);
    }
}

#[test]
fn lagrangian_trace_never_increases() {
    for prior in [
        PhasePrior::full_circle(),
        PhasePrior::wrapped_gaussian(3.0, 0.7).unwrap(),
    ] {
        let source = DiscreteSource::from_prior(&prior, 128).unwrap();
        let d = squared_error_matrix(&source.points, &source.points);
        for s in [0.3, 1.0, 4.0, 20.0] {
            let (_, trace) = blahut_arimoto_trace(&source.probabilities, &d, s).unwrap();
            let objective: Vec<f64> = trace.iter().map(|it| it.rate + s * it.distortion).collect();
            for (i, w) in objective.windows(2).enumerate() {
                assert!(w[1] <= w[0] + 1e-12, "s = {s}, iterate {i}: {} → {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn discretized_curves_stay_above_shannon_bound() {
    let prior = PhasePrior::full_circle();
    let slopes = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0];
    for k in [256usize, 512, 1024] {
        let curve = rd_curve(&prior, k, &slopes).unwrap();
        let slack = discretization_slack(k);
        for p in &curve.points {
            let slb = shannon_lb_rate(curve.source_entropy_power, p.distortion).unwrap();
            assert!(
                p.rate >= slb - slack,
                "K = {k}, D = {}: R = {} vs {}",
                p.distortion,
                p.rate,
                slb
            );
        }
        assert!(curve.is_monotone_convex(1e-9), "K = {k}");
    }
}

#[test]
fn slack_halves_with_grid() {
    assert_eq!(discretization_slack(512), 0.05);
    assert_eq!(discretization_slack(1024), 0.025);
}
