//! Trajectory drivers: single seeded runs, deterministic relaxation, and
//! order-independent ensembles.

use rayon::prelude::*;

use crate::model::{total_energy_g, SystemConfig, SystemState};
use crate::observables::Observable;

use super::integrator::{IntegratorSpec, Stepper};
use super::record::TrajectoryRecord;
use super::rng::NormalSource;
use super::DynamicsError;

/// Resolves the energy-cap threshold for a run starting at `state0`.
fn resolve_cap(config: &SystemConfig, spec: &IntegratorSpec, state0: &SystemState) -> f64 {
    spec.cap_g
        .unwrap_or_else(|| 1e6 * total_energy_g(config, state0).max(1.0))
}

/// Runs `⌈horizon/dt⌉` steps from `state0`, sampling the named observables
/// every `sample_stride` steps (plus the initial point). Bit-reproducible
/// from `(config, state0, spec, seed)`; time is reconstructed from the
/// integer step count, never accumulated.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    config: &SystemConfig,
    state0: &SystemState,
    spec: IntegratorSpec,
    horizon: f64,
    seed: u64,
    observers: &[&str],
    sample_stride: usize,
    store_states: bool,
) -> Result<TrajectoryRecord, DynamicsError> {
    spec.validate()?;
    state0.validate(config)?;
    if !(horizon >= 0.0) {
        return Err(DynamicsError::InvalidSpec(format!("horizon must be >= 0, got {horizon}")));
    }
    if sample_stride == 0 {
        return Err(DynamicsError::InvalidSpec("sample_stride must be >= 1".into()));
    }
    let observables: Vec<Observable> = observers
        .iter()
        .map(|name| Observable::parse(name, config))
        .collect::<Result<_, _>>()?;

    let steps = (horizon / spec.dt).ceil() as u64;
    let n_samples = 1 + (steps / sample_stride as u64) as usize;
    let mut record = TrajectoryRecord {
        sample_times: Vec::with_capacity(n_samples),
        observable_names: observers.iter().map(|s| s.to_string()).collect(),
        series: vec![Vec::with_capacity(n_samples); observables.len()],
        states: store_states.then(|| Vec::with_capacity(n_samples)),
        seed,
        config_digest: config.digest(),
        integrator: spec,
    };

    let mut state = state0.clone();
    state.t = 0.0;
    let cap = resolve_cap(config, &spec, &state);
    let mut stepper = Stepper::new(config, spec)?;
    let mut rng = NormalSource::from_seed(seed);

    let sample = |state: &SystemState, record: &mut TrajectoryRecord| -> Result<(), DynamicsError> {
        record.sample_times.push(state.t);
        for (k, obs) in observables.iter().enumerate() {
            record.series[k].push(obs.eval(config, state)?);
        }
        if let Some(states) = record.states.as_mut() {
            states.push(state.clone());
        }
        Ok(())
    };

    sample(&state, &mut record)?;
    for step_idx in 1..=steps {
        stepper.step(&mut state, &mut rng, cap)?;
        state.t = step_idx as f64 * spec.dt;
        if step_idx % sample_stride as u64 == 0 {
            sample(&state, &mut record)?;
        }
    }
    Ok(record)
}

/// Initial-state distribution for ensembles. Samplers draw from the same
/// per-trajectory stream as the noise, so an ensemble is fully determined
/// by `(config, sampler, spec, base_seed)`.
#[derive(Debug, Clone)]
pub enum StateSampler {
    /// Every trajectory starts at the same point.
    Fixed(SystemState),
    /// Exact Gibbs draw for quadratic potentials: `p ~ N(0,T)`,
    /// `q ~ N(0, T·K⁻¹)`, `r_b ~ N(0,T)`.
    GaussianGibbs { temperature: f64, chol: Vec<Vec<f64>> },
    /// Cycles through pre-collected states (e.g. harvested from a long
    /// stationary run), trajectory `i` starting at `states[i % len]`.
    Harvested(std::sync::Arc<Vec<SystemState>>),
    /// Uniform random direction rescaled to the energy shell `G = energy`.
    /// With `site = Some(v)` the draw is concentrated on vertex `v`.
    EnergyShell { energy: f64, site: Option<usize> },
}

impl StateSampler {
    /// Builds the Gibbs sampler for a quadratic-potential config at
    /// temperature `T`, factoring the position covariance once.
    pub fn gaussian_gibbs(config: &SystemConfig, temperature: f64) -> Result<Self, DynamicsError> {
        if !config.onsite.is_centered_quadratic() || !config.pair.is_centered_quadratic() {
            return Err(DynamicsError::InvalidSpec(
                "exact Gibbs sampling needs centered quadratic potentials".into(),
            ));
        }
        let n = config.vertex_count();
        let c_on = 2.0 * config.onsite.quadratic_coefficient();
        let c_pair = 2.0 * config.pair.quadratic_coefficient();
        let mut k = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = c_on;
        }
        for &(a, b) in &config.topology.edges {
            k[(a, a)] += c_pair;
            k[(b, b)] += c_pair;
            k[(a, b)] -= c_pair;
            k[(b, a)] -= c_pair;
        }
        let cov = temperature
            * k.try_inverse()
                .ok_or_else(|| DynamicsError::InvalidSpec("position Hessian is singular".into()))?;
        let chol = cov
            .cholesky()
            .ok_or_else(|| DynamicsError::InvalidSpec("position covariance not PD".into()))?;
        let l = chol.l();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| l[(i, j)]).collect())
            .collect();
        Ok(StateSampler::GaussianGibbs { temperature, chol: rows })
    }

    pub fn sample(
        &self,
        config: &SystemConfig,
        index: u64,
        rng: &mut NormalSource,
    ) -> SystemState {
        match self {
            StateSampler::Fixed(state) => {
                let mut s = state.clone();
                s.t = 0.0;
                s
            }
            StateSampler::GaussianGibbs { temperature, chol } => {
                let n = config.vertex_count();
                let sqrt_t = temperature.sqrt();
                let z: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
                let q: Vec<f64> = (0..n)
                    .map(|i| chol[i].iter().zip(&z).map(|(l, z)| l * z).sum())
                    .collect();
                let p = (0..n).map(|_| sqrt_t * rng.next_normal()).collect();
                let r = (0..config.aux_count())
                    .map(|_| sqrt_t * rng.next_normal())
                    .collect();
                SystemState { p, q, r, t: 0.0 }
            }
            StateSampler::Harvested(states) => {
                let mut s = states[(index as usize) % states.len()].clone();
                s.t = 0.0;
                s
            }
            StateSampler::EnergyShell { energy, site } => {
                sample_energy_shell(config, *energy, *site, rng)
            }
        }
    }
}

/// Draws a random direction and rescales it onto the shell `G(s·x) = energy`
/// by bisection; exact for any confining potential with `G(0) = 0`.
pub fn sample_energy_shell(
    config: &SystemConfig,
    energy: f64,
    site: Option<usize>,
    rng: &mut NormalSource,
) -> SystemState {
    let n = config.vertex_count();
    let mut dir = SystemState::zero(config);
    match site {
        Some(v) => {
            dir.p[v] = rng.next_normal();
            dir.q[v] = rng.next_normal();
        }
        None => {
            for p in dir.p.iter_mut() {
                *p = rng.next_normal();
            }
            for q in dir.q.iter_mut() {
                *q = rng.next_normal();
            }
            for r in dir.r.iter_mut() {
                *r = rng.next_normal();
            }
        }
    }
    let norm: f64 = dir
        .p
        .iter()
        .chain(&dir.q)
        .chain(&dir.r)
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        dir.p[site.unwrap_or(0).min(n - 1)] = 1.0;
    }

    let scaled = |s: f64| -> SystemState {
        SystemState {
            p: dir.p.iter().map(|x| s * x).collect(),
            q: dir.q.iter().map(|x| s * x).collect(),
            r: dir.r.iter().map(|x| s * x).collect(),
            t: 0.0,
        }
    };
    let g_of = |s: f64| total_energy_g(config, &scaled(s));

    let mut hi = 1.0;
    while g_of(hi) < energy {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_of(mid) < energy {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-14 {
            break;
        }
    }
    scaled(0.5 * (lo + hi))
}

/// `n_traj` independent trajectories with per-trajectory seeds derived from
/// `base_seed`; output is independent of worker count and execution order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble(
    config: &SystemConfig,
    sampler: &StateSampler,
    spec: IntegratorSpec,
    horizon: f64,
    n_traj: usize,
    base_seed: u64,
    observers: &[&str],
    sample_stride: usize,
) -> Result<Vec<TrajectoryRecord>, DynamicsError> {
    if n_traj == 0 {
        return Err(DynamicsError::InvalidSpec("n_traj must be >= 1".into()));
    }
    let results: Vec<Result<TrajectoryRecord, DynamicsError>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut init_rng = NormalSource::for_trajectory(base_seed, i);
            let state0 = sampler.sample(config, i, &mut init_rng);
            simulate(
                config,
                &state0,
                spec,
                horizon,
                super::rng::trajectory_seed(base_seed, i) ^ 0x5851_F42D_4C95_7F2D,
                observers,
                sample_stride,
                false,
            )
        })
        .collect();

    let mut records = Vec::with_capacity(n_traj);
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((i as u64, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(records)
    } else {
        Err(DynamicsError::Ensemble { failures })
    }
}

/// Result of a zero-temperature relaxation run.
#[derive(Debug, Clone)]
pub struct RelaxationReport {
    pub g_initial: f64,
    pub g_final: f64,
    /// `(t, G(t))` at every sample stride.
    pub decay_curve: Vec<(f64, f64)>,
}

/// Integrates the noiseless dynamics over `[0, unit_time]` and reports the
/// energy drop. All reservoir temperatures must be zero; dissipation through
/// the boundary couplings is then the only energy sink.
pub fn relax_deterministic(
    config: &SystemConfig,
    state0: &SystemState,
    dt: f64,
    unit_time: f64,
) -> Result<RelaxationReport, DynamicsError> {
    if config.reservoirs.iter().any(|r| r.temperature != 0.0) {
        return Err(DynamicsError::InvalidSpec(
            "deterministic relaxation requires all reservoir temperatures to be zero".into(),
        ));
    }
    let spec = IntegratorSpec::splitting(dt);
    let record = simulate(config, state0, spec, unit_time, 0, &["G"], 1, false)?;
    let g = record.series_for("G").expect("G sampled");
    Ok(RelaxationReport {
        g_initial: g[0],
        g_final: *g.last().expect("nonempty"),
        decay_curve: record.sample_times.iter().copied().zip(g.iter().copied()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chain, PolynomialPotential};

    fn chain(n: usize, t1: f64, tn: f64) -> SystemConfig {
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
    fn zero_horizon_keeps_only_initial_sample() {
        let c = chain(2, 1.0, 1.0);
        let rec = simulate(
            &c,
            &SystemState::zero(&c),
            IntegratorSpec::splitting(0.01),
            0.0,
            1,
            &["G", "Phi_0"],
            1,
            false,
        )
        .unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.sample_times, vec![0.0]);
        assert_eq!(rec.series_for("G").unwrap(), &[0.0]);
    }

    #[test]
    fn same_seed_gives_identical_records() {
        let c = chain(3, 2.0, 1.0);
        let run = || {
            simulate(
                &c,
                &SystemState::zero(&c),
                IntegratorSpec::splitting(0.01),
                5.0,
                42,
                &["G", "Phi_1", "sigma_1"],
                7,
                true,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sample_times_come_from_integer_steps() {
        let c = chain(2, 1.0, 1.0);
        let rec = simulate(
            &c,
            &SystemState::zero(&c),
            IntegratorSpec::splitting(0.1),
            1.0,
            3,
            &["G"],
            2,
            false,
        )
        .unwrap();
        assert_eq!(rec.len(), 6);
        assert_eq!(rec.sample_times[5], 1.0);
        assert_eq!(rec.sample_times[1], 0.2);
    }

    #[test]
    fn ensemble_of_one_equals_simulate() {
        let c = chain(2, 2.0, 1.0);
        let sampler = StateSampler::Fixed(SystemState::zero(&c));
        let recs = simulate_ensemble(
            &c,
            &sampler,
            IntegratorSpec::splitting(0.01),
            2.0,
            1,
            9,
            &["G"],
            5,
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        let direct = simulate(
            &c,
            &SystemState::zero(&c),
            IntegratorSpec::splitting(0.01),
            2.0,
            recs[0].seed,
            &["G"],
            5,
            false,
        )
        .unwrap();
        assert_eq!(recs[0], direct);
    }

    #[test]
    fn ensemble_independent_of_worker_count() {
        let c = chain(2, 2.0, 1.0);
        let sampler = StateSampler::gaussian_gibbs(&c, 1.0).unwrap();
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                simulate_ensemble(
                    &c,
                    &sampler,
                    IntegratorSpec::splitting(0.01),
                    1.0,
                    16,
                    1234,
                    &["G", "Phi_1"],
                    10,
                )
                .unwrap()
            })
        };
        assert_eq!(run_with(1), run_with(4));
    }

    #[test]
    fn gibbs_sampler_mean_energy_matches_gaussian_moments() {
        // E[G] = T (n/2 kinetic + n/2 positional + m/2 auxiliary)
        let c = chain(3, 1.0, 1.0);
        let sampler = StateSampler::gaussian_gibbs(&c, 1.0).unwrap();
        let n_draws = 20_000u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n_draws {
            let mut rng = NormalSource::for_trajectory(7, i);
            let s = sampler.sample(&c, i, &mut rng);
            let g = total_energy_g(&c, &s);
            sum += g;
            sum_sq += g * g;
        }
        let mean = sum / n_draws as f64;
        let var = sum_sq / n_draws as f64 - mean * mean;
        let se = (var / n_draws as f64).sqrt();
        let expected = 3.0 / 2.0 + 3.0 / 2.0 + 2.0 / 2.0;
        assert!(
            (mean - expected).abs() < 4.0 * se + 1e-3,
            "mean G {mean} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn energy_shell_sampler_hits_the_shell() {
        let c = build_chain(
            5,
            PolynomialPotential::quartic(),
            PolynomialPotential::quartic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let mut rng = NormalSource::from_seed(5);
        for &e in &[1.0, 100.0, 10_000.0] {
            let s = sample_energy_shell(&c, e, None, &mut rng);
            assert!((total_energy_g(&c, &s) - e).abs() < 1e-8 * e);
            let s = sample_energy_shell(&c, e, Some(2), &mut rng);
            assert!((total_energy_g(&c, &s) - e).abs() < 1e-8 * e);
            assert_eq!(s.p[0], 0.0);
            assert_eq!(s.q[4], 0.0);
        }
    }

    #[test]
    fn relaxation_requires_zero_temperature_and_decays() {
        let c = chain(1, 1.0, 1.0);
        let err = relax_deterministic(&c, &SystemState::zero(&c), 0.01, 1.0).unwrap_err();
        assert!(matches!(err, DynamicsError::InvalidSpec(_)));

        let c = build_chain(
            1,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        // stationary point of H with r = 0: G stays put
        let report = relax_deterministic(&c, &SystemState::zero(&c), 0.01, 1.0).unwrap();
        assert_eq!(report.g_initial, 0.0);
        assert_eq!(report.g_final, 0.0);

        let excited = SystemState { p: vec![2.0], q: vec![0.5], r: vec![0.0, 0.0], t: 0.0 };
        let report = relax_deterministic(&c, &excited, 0.001, 5.0).unwrap();
        assert!(report.g_final < report.g_initial * 0.5, "G should decay: {report:?}");
        // monotone after the initial transient
        let curve = &report.decay_curve;
        let start = curve.len() / 5;
        for w in curve[start..].windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-9, "G not decaying at t={}", w[1].0);
        }
    }

    #[test]
    fn middle_site_energy_reaches_the_boundary() {
        let c = build_chain(
            5,
            PolynomialPotential::harmonic(),
            PolynomialPotential::quartic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let mut state0 = SystemState::zero(&c);
        state0.p[2] = 4.0; // all energy on the middle site
        let g0 = total_energy_g(&c, &state0);
        let report = relax_deterministic(&c, &state0, 0.001, 1.0).unwrap();
        assert!(report.g_final < g0, "boundary dissipation must bite: {report:?}");

        // and the boundary kinetic energy is nonzero along the way
        let rec = simulate(
            &c,
            &state0,
            IntegratorSpec::splitting(0.001),
            1.0,
            0,
            &["p_1"],
            10,
            false,
        )
        .unwrap();
        let max_p1 = rec
            .series_for("p_1")
            .unwrap()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_p1 > 1e-3, "energy never propagated to the boundary");
    }
}
