use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use phasebound::estimation::{bayesian_mmse, canonical_phase_density, measurement_mutual_information, monte_carlo_mse};
use phasebound::fock::chi_decompose;
use phasebound::{IdlerMode, PhasePrior, ProbeSpec, SimGrid, TWO_PI};
use proptest::prelude::*;

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

fn probes() -> Vec<ProbeSpec> {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    vec![
        ProbeSpec::coherent(1.0).unwrap(),
        ProbeSpec::flat_superposition(4).unwrap(),
        ProbeSpec::from_amplitudes(vec![a, a], IdlerMode::None).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phase_density_is_a_density(amps in amplitudes(10), eta in 0.0..=1.0f64) {
        let probe = ProbeSpec::from_amplitudes(amps, IdlerMode::None).unwrap();
        let rho = chi_decompose(&probe, eta).unwrap().output_state().reduced_signal();
        let n = 256;
        let h = TWO_PI / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let p = canonical_phase_density(&rho, i as f64 * h).unwrap();
            prop_assert!(p >= -1e-10);
            total += p * h;
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mmse_sits_between_converse_and_prior_variance(amps in amplitudes(6), eta in 0.0..=1.0f64, prior in prior()) {
        let probe = ProbeSpec::from_amplitudes(amps, IdlerMode::None).unwrap();
        let grid = SimGrid::default();
        let est = bayesian_mmse(&probe, eta, &prior, grid).unwrap();
        let info = measurement_mutual_information(&probe, eta, &prior, grid).unwrap();
        let q = prior.entropy_power().unwrap();
        prop_assert!(est.mse <= prior.variance() + 1e-8);
        prop_assert!(est.mse >= q * (-2.0 * info).exp() - 1e-6, "mse {} vs {}", est.mse, q * (-2.0 * info).exp());
    }
}

#[test]
fn mmse_non_increasing_in_transmittance() {
    let prior = PhasePrior::full_circle();
    for probe in probes() {
        let mse: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|eta| bayesian_mmse(&probe, *eta, &prior, SimGrid::default()).unwrap().mse)
            .collect();
        assert!(mse.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{mse:?}");
    }
}

#[test]
fn quadrature_converges_on_grid_doubling() {
    for prior in [
        PhasePrior::full_circle(),
        PhasePrior::wrapped_gaussian(3.0, 0.5).unwrap(),
    ] {
        for probe in probes() {
            for eta in [0.5, 1.0] {
                let est = bayesian_mmse(&probe, eta, &prior, SimGrid::default()).unwrap();
                assert!(est.grid_change() < 1e-5, "{}", est.grid_change());
            }
        }
    }
}

#[test]
fn number_states_have_flat_phase_density() {
    let probe = ProbeSpec::number(3).unwrap();
    let rho = chi_decompose(&probe, 1.0).unwrap().output_state().reduced_signal();
    for theta in [0.0, 1.0, 4.0] {
        assert!((canonical_phase_density(&rho, theta).unwrap() - 1.0 / TWO_PI).abs() < 1e-14);
    }
}

#[test]
fn monte_carlo_cross_check_on_a_narrow_prior() {
    let prior = PhasePrior::wrapped_gaussian(3.0, 0.4).unwrap();
    let probe = ProbeSpec::coherent(1.5).unwrap();
    let est = bayesian_mmse(&probe, 0.8, &prior, SimGrid::default()).unwrap();
    let mc = monte_carlo_mse(&probe, 0.8, &prior, &est.estimator, 40_000, 11).unwrap();
    assert!(
        (mc.mean - est.mse).abs() <= 3.0 * mc.stderr,
        "{} vs {} ± {}",
        mc.mean,
        est.mse,
        mc.stderr
    );
}

#[test]
fn simulation_grid_rules() {
    assert!(SimGrid::new(128, 256).is_ok());
    assert!(SimGrid::new(64, 256).is_err());
    assert!(SimGrid::new(128, 300).is_err());
}
