//! Cross-checks between the stochastic machinery and the exact linear
//! oracle on quadratic-potential systems.

use std::collections::BTreeMap;

use nessim::dynamics::{drift, NormalSource};
use nessim::linear_oracle::{
    assemble_linear, autocovariance_curve, controllability_rank, exact_flux,
    flux_autocovariance_integral, flux_observables, slowest_decay_rate, stationary_covariance,
};
use nessim::model::{
    build_chain, build_graph, build_hypercube, diamond_fixture, PolynomialPotential,
    ReservoirSpec, SystemConfig, SystemState,
};
use nessim::observables::heat_flows;

fn random_state(config: &SystemConfig, seed: u64) -> SystemState {
    let mut src = NormalSource::from_seed(seed);
    SystemState {
        p: (0..config.vertex_count()).map(|_| src.next_normal()).collect(),
        q: (0..config.vertex_count()).map(|_| src.next_normal()).collect(),
        r: (0..config.aux_count()).map(|_| src.next_normal()).collect(),
        t: 0.0,
    }
}

fn harmonic_chain(n: usize, t1: f64, tn: f64) -> SystemConfig {
    build_chain(
        n,
        PolynomialPotential::harmonic(),
        PolynomialPotential::harmonic(),
        t1,
        tn,
        1.0,
        1.0,
    )
    .unwrap()
}

#[test]
fn drift_field_matches_linear_model_on_quadratic_systems() {
    let configs = vec![
        harmonic_chain(4, 2.0, 1.0),
        build_hypercube(
            1,
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::new(vec![0.0, 0.0, 0.8]),
            2.0,
            1.0,
            0.7,
        )
        .unwrap(),
        diamond_fixture(2.0, 1.0, 0.9),
    ];
    for config in configs {
        let model = assemble_linear(&config).unwrap();
        for seed in 0..100 {
            let state = random_state(&config, seed);
            let flat = nalgebra::DVector::from_vec(state.to_flat());
            let expected = &model.a * flat;
            let got = drift(&config, &state).to_flat();
            for (k, (&e, &g)) in expected.iter().zip(got.iter()).enumerate() {
                assert!(
                    (e - g).abs() < 1e-12 * e.abs().max(1.0),
                    "coordinate {k}: A.x = {e} vs drift = {g}"
                );
            }
        }
    }
}

#[test]
fn path_graph_and_hypercube_line_share_the_drift_field() {
    let n_side = 2usize; // 5-site line
    let cube = build_hypercube(
        n_side,
        1,
        PolynomialPotential::harmonic(),
        PolynomialPotential::quartic(),
        2.0,
        1.0,
        0.8,
    )
    .unwrap();
    let mut baths = BTreeMap::new();
    baths.insert(0, ReservoirSpec::langevin(2.0, 0.8));
    baths.insert(4, ReservoirSpec::langevin(1.0, 0.8));
    let path = build_graph(
        5,
        &[(0, 1), (1, 2), (2, 3), (3, 4)],
        &baths,
        PolynomialPotential::harmonic(),
        PolynomialPotential::quartic(),
    )
    .unwrap();
    for seed in 0..100 {
        let state = random_state(&cube, seed);
        let a = drift(&cube, &state).to_flat();
        let b = drift(&path, &state).to_flat();
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn flux_quadratic_forms_match_the_flow_observables() {
    let configs = vec![
        harmonic_chain(3, 2.0, 1.0),
        build_hypercube(
            1,
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            2.0,
            1.0,
            0.7,
        )
        .unwrap(),
        diamond_fixture(2.0, 1.0, 1.0),
    ];
    for config in configs {
        let quads = flux_observables(&config).unwrap();
        for seed in 0..50 {
            let state = random_state(&config, seed);
            let flows = heat_flows(&config, &state);
            assert_eq!(flows.values.len(), quads.len());
            for (j, q) in quads.iter().enumerate() {
                let from_form = q.eval_state(&state);
                assert!(
                    (from_form - flows.values[j]).abs() < 1e-12 * flows.values[j].abs().max(1.0),
                    "flow {j}: form {from_form} vs observable {}",
                    flows.values[j]
                );
            }
        }
    }
}

/// The response of the exact stationary flux to the inverse-temperature
/// difference must equal the one-sided equilibrium flux autocovariance
/// integral (half the two-sided one). Both sides computed in closed form.
#[test]
fn green_kubo_identity_holds_exactly_for_the_oracle() {
    for (n, lambda, gamma, j) in [(2usize, 1.0, 1.0, 1usize), (3, 0.8, 1.3, 1), (3, 0.8, 1.3, 2)] {
        let mean_beta = 1.0;
        let build = |d: f64| {
            build_chain(
                n,
                PolynomialPotential::harmonic(),
                PolynomialPotential::harmonic(),
                1.0 / (mean_beta - 0.5 * d),
                1.0 / (mean_beta + 0.5 * d),
                lambda,
                gamma,
            )
            .unwrap()
        };
        let d = 1e-4;
        let flux_at = |delta: f64| {
            let config = build(delta);
            let model = assemble_linear(&config).unwrap();
            let cov = stationary_covariance(&model).unwrap();
            exact_flux(&model, &cov, &config, j).unwrap()
        };
        let response = (flux_at(d) - flux_at(-d)) / (2.0 * d);

        let eq = build(0.0);
        let model = assemble_linear(&eq).unwrap();
        let cov = stationary_covariance(&model).unwrap();
        let obs = &flux_observables(&eq).unwrap()[j];
        assert!(obs.mean(&cov.sigma).abs() < 1e-12, "equilibrium flux must vanish");
        let integral = flux_autocovariance_integral(&model, &cov, obs).unwrap();
        assert!(
            (response / integral - 1.0).abs() < 1e-4,
            "n={n} lambda={lambda} gamma={gamma} j={j}: response {response} vs integral {integral}"
        );
    }
}

#[test]
fn envelope_fit_on_exact_autocovariance_recovers_slowest_rate() {
    let config = harmonic_chain(3, 1.0, 1.0);
    let model = assemble_linear(&config).unwrap();
    let cov = stationary_covariance(&model).unwrap();
    let rate_expected = slowest_decay_rate(&model);
    let p1 = 3; // (q0..q2, p0..p2, r0..r1): momentum of site 1 sits at 3
    // the asymptotic mode only dominates after several decay times
    let dt = 0.05;
    let n_lags = (12.0 / rate_expected / dt) as usize;
    let lags: Vec<f64> = (0..=n_lags).map(|k| k as f64 * dt).collect();
    let curve = autocovariance_curve(&model, &cov, p1, p1, &lags).unwrap();
    let normalized: Vec<f64> = curve.iter().map(|v| v / curve[0]).collect();
    let report =
        nessim::analysis::fit_exponential_envelope(&lags, &normalized, 1e-7, 0.8).unwrap();
    assert!(
        (report.rate - rate_expected).abs() < 0.1 * rate_expected,
        "fitted {} vs slowest |Re eig| {rate_expected} (r2 {})",
        report.rate,
        report.r_squared
    );
}

#[test]
fn diamond_loses_exactly_one_mode_pair_and_the_path_control_is_full() {
    let diamond = diamond_fixture(2.0, 1.0, 1.0);
    let model = assemble_linear(&diamond).unwrap();
    let report = controllability_rank(&model);
    assert!(!report.full);
    assert_eq!(report.conserved_mode_pairs, 1, "rank {}/{}", report.rank, report.state_dim);

    let mut baths = BTreeMap::new();
    baths.insert(0, ReservoirSpec::langevin(2.0, 1.0));
    baths.insert(2, ReservoirSpec::langevin(1.0, 1.0));
    let path = build_graph(
        4,
        &[(0, 1), (1, 2), (2, 3)],
        &baths,
        PolynomialPotential::harmonic(),
        PolynomialPotential::harmonic(),
    )
    .unwrap();
    let report = controllability_rank(&assemble_linear(&path).unwrap());
    assert!(report.full, "path rank {}/{}", report.rank, report.state_dim);
}
