//! Large deviations of the time-averaged entropy production.
//!
//! The moment generating functional `Γ(t, α) = E[exp(−α ∫₀ᵗ σ_j ds)]` over
//! a stationary-start ensemble yields the cumulant function
//! `e(α) = lim_t −(1/t) log Γ(t, α)`, estimated here by fitting
//! `−(1/t) log Γ̂` against `1/t` over a list of horizons (the finite-t bias
//! enters at order `1/t`). The fluctuation-theorem symmetry `e(α) = e(1−α)`
//! and the Legendre transform `e(w) = sup_α (e(α) − α w)` — with this sign
//! arrangement the symmetry is equivalent to `e(w) − e(−w) = −w` — are
//! checked on the estimated curve with bootstrap confidence bands.
//!
//! `e(α)` exists and is analytic only for
//! `α ∈ (−T_min/(T_max−T_min), 1 + T_min/(T_max−T_min))`; the estimator
//! enforces that domain. Empirical MGFs fail silently when a handful of
//! trajectories dominate the average, so every point carries an effective
//! sample size `n_eff = (Σw)²/Σw²` and a usability flag.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{simulate, trajectory_seed, IntegratorSpec, NormalSource, Stepper};
use crate::model::{total_energy_g, SystemConfig, SystemState};
use crate::observables::Observable;

use super::AnalysisError;

/// Admissible open interval for the tilt parameter α.
pub fn alpha_domain(config: &SystemConfig) -> (f64, f64) {
    let t_min = config.min_temperature();
    let t_max = config.max_temperature();
    if t_max <= t_min {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let ratio = t_min / (t_max - t_min);
        (-ratio, 1.0 + ratio)
    }
}

/// Equilibrates one long trajectory and harvests `n` states spaced by
/// `spacing` time units as stationary ensemble starts.
pub fn harvest_stationary_states(
    config: &SystemConfig,
    spec: IntegratorSpec,
    n: usize,
    burn_in: f64,
    spacing: f64,
    seed: u64,
) -> Result<Vec<SystemState>, AnalysisError> {
    if n == 0 || !(spacing > 0.0) || !(burn_in >= 0.0) {
        return Err(AnalysisError::Invalid(
            "need n >= 1, spacing > 0, burn_in >= 0".into(),
        ));
    }
    let stride = (spacing / spec.dt).round().max(1.0) as usize;
    let horizon = burn_in + spacing * n as f64;
    let record = simulate(
        config,
        &SystemState::zero(config),
        spec,
        horizon,
        seed,
        &[],
        stride,
        true,
    )?;
    let states = record.states.expect("states stored");
    let harvested: Vec<SystemState> = record
        .sample_times
        .iter()
        .zip(states)
        .filter(|(t, _)| **t >= burn_in - 1e-9)
        .map(|(_, s)| s)
        .collect();
    if harvested.len() < n {
        return Err(AnalysisError::RecordTooShort(format!(
            "harvested only {} of {} states",
            harvested.len(),
            n
        )));
    }
    Ok(harvested.into_iter().take(n).collect())
}

/// Integrates `∫₀ᵗ σ_j ds` along one trajectory per start, trapezoidal at
/// the sampling stride, snapshotting at each horizon in `t_list` (which
/// must be multiples of `stride·dt`). Returns `integrals[i][k]` for start
/// `i` at horizon `t_list[k]`.
pub fn entropy_integral_ensemble(
    config: &SystemConfig,
    spec: IntegratorSpec,
    flow_index: usize,
    t_list: &[f64],
    starts: &[SystemState],
    base_seed: u64,
    sample_stride: usize,
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    spec.validate().map_err(AnalysisError::Dynamics)?;
    if t_list.is_empty() || starts.is_empty() || sample_stride == 0 {
        return Err(AnalysisError::Invalid(
            "need nonempty t_list and starts, sample_stride >= 1".into(),
        ));
    }
    let dt_sample = spec.dt * sample_stride as f64;
    let mut snapshot_steps = Vec::with_capacity(t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        let m = (t / dt_sample).round();
        if (t - m * dt_sample).abs() > 1e-9 * t.max(1.0) || m < 1.0 {
            return Err(AnalysisError::Invalid(format!(
                "t_list[{k}] = {t} is not a positive multiple of stride*dt = {dt_sample}"
            )));
        }
        if k > 0 && t <= t_list[k - 1] {
            return Err(AnalysisError::Invalid("t_list must be increasing".into()));
        }
        snapshot_steps.push(m as u64 * sample_stride as u64);
    }
    let total_steps = *snapshot_steps.last().expect("nonempty");
    let obs = Observable::EntropyProduction(flow_index);
    // fail early on configs where sigma is undefined
    obs.eval(config, &starts[0]).map_err(AnalysisError::Observable)?;

    let results: Vec<Result<Vec<f64>, AnalysisError>> = (0..starts.len() as u64)
        .into_par_iter()
        .map(|i| {
            let mut stepper = Stepper::new(config, spec).map_err(AnalysisError::Dynamics)?;
            let mut rng = NormalSource::for_trajectory(base_seed, i);
            let mut state = starts[i as usize].clone();
            state.t = 0.0;
            let cap = spec
                .cap_g
                .unwrap_or_else(|| 1e6 * total_energy_g(config, &state).max(1.0));
            let mut prev = obs.eval(config, &state).map_err(AnalysisError::Observable)?;
            let mut acc = 0.0f64;
            let mut snaps = Vec::with_capacity(snapshot_steps.len());
            let mut next_snap = 0usize;
            for step_idx in 1..=total_steps {
                stepper
                    .step(&mut state, &mut rng, cap)
                    .map_err(AnalysisError::Dynamics)?;
                state.t = step_idx as f64 * spec.dt;
                if step_idx % sample_stride as u64 == 0 {
                    let cur = obs.eval(config, &state).map_err(AnalysisError::Observable)?;
                    acc += 0.5 * dt_sample * (prev + cur);
                    prev = cur;
                    while next_snap < snapshot_steps.len() && snapshot_steps[next_snap] == step_idx
                    {
                        snaps.push(acc);
                        next_snap += 1;
                    }
                }
            }
            Ok(snaps)
        })
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LdpSpec {
    pub flow_index: usize,
    pub alpha_grid: Vec<f64>,
    /// Horizons used for the `t → ∞` extrapolation.
    pub t_list: Vec<f64>,
    pub n_traj: usize,
    pub base_seed: u64,
    /// Equilibration time before harvesting stationary starts.
    pub burn_in: f64,
    /// Time between harvested starts.
    pub spacing: f64,
    pub sample_stride: usize,
    pub n_boot: usize,
    /// Minimum effective sample size for a grid point to count as usable.
    pub n_eff_floor: f64,
}

impl LdpSpec {
    pub fn defaults(flow_index: usize, n_traj: usize, base_seed: u64) -> Self {
        Self {
            flow_index,
            alpha_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            t_list: vec![50.0, 100.0, 200.0],
            n_traj,
            base_seed,
            burn_in: 100.0,
            spacing: 5.0,
            sample_stride: 5,
            n_boot: 200,
            n_eff_floor: 30.0,
        }
    }
}

/// Estimated cumulant function on its α grid.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantCurve {
    pub alphas: Vec<f64>,
    pub e_hat: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_eff: Vec<f64>,
    pub usable: Vec<bool>,
    /// Fitted `1/t` coefficient: the finite-horizon bias per point.
    pub finite_t_coeff: Vec<f64>,
    pub t_list: Vec<f64>,
    pub domain: (f64, f64),
    pub n_traj: usize,
    /// 1%–99% quantile range of the sampled `S(t_max)/t_max`: the rate
    /// window actually supported by data.
    pub empirical_rate_range: (f64, f64),
    /// Bootstrap replicates `[rep][alpha]` of `e_hat`.
    pub boot_replicates: Vec<Vec<f64>>,
}

impl CumulantCurve {
    pub fn point(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|&a| (a - alpha).abs() < 1e-9)
    }
}

fn fit_against_inverse_t(t_list: &[f64], y: &[f64]) -> (f64, f64) {
    // least squares y = e + c/t; returns (e, c)
    if t_list.len() == 1 {
        return (y[0], 0.0);
    }
    let n = t_list.len() as f64;
    let xs: Vec<f64> = t_list.iter().map(|&t| 1.0 / t).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(y).map(|(x, v)| x * v).sum();
    let denom = n * sxx - sx * sx;
    let c = (n * sxy - sx * sy) / denom;
    let e = (sy - c * sx) / n;
    (e, c)
}

fn curve_from_integrals(
    integrals: &[Vec<f64>],
    alphas: &[f64],
    t_list: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = integrals.len() as f64;
    let mut e_hat = Vec::with_capacity(alphas.len());
    let mut coeff = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let y: Vec<f64> = (0..t_list.len())
            .map(|k| {
                let gamma: f64 =
                    integrals.iter().map(|s| (-alpha * s[k]).exp()).sum::<f64>() / n;
                -gamma.ln() / t_list[k]
            })
            .collect();
        let (e, c) = fit_against_inverse_t(t_list, &y);
        e_hat.push(e);
        coeff.push(c);
    }
    (e_hat, coeff)
}

/// Estimates the cumulant function of `σ_{flow_index}` by a
/// stationary-start Monte-Carlo ensemble.
pub fn mgf_cumulant(
    config: &SystemConfig,
    spec: IntegratorSpec,
    ldp: &LdpSpec,
) -> Result<CumulantCurve, AnalysisError> {
    let domain = alpha_domain(config);
    for &alpha in &ldp.alpha_grid {
        if alpha <= domain.0 || alpha >= domain.1 {
            return Err(AnalysisError::AlphaOutOfDomain { alpha, lo: domain.0, hi: domain.1 });
        }
    }
    if ldp.n_traj < 2 {
        return Err(AnalysisError::Invalid("n_traj must be >= 2".into()));
    }

    let starts = harvest_stationary_states(
        config,
        spec,
        ldp.n_traj,
        ldp.burn_in,
        ldp.spacing,
        ldp.base_seed ^ 0x9E37_79B9_0000_0001,
    )?;
    let integrals = entropy_integral_ensemble(
        config,
        spec,
        ldp.flow_index,
        &ldp.t_list,
        &starts,
        ldp.base_seed,
        ldp.sample_stride,
    )?;

    let (e_hat, finite_t_coeff) = curve_from_integrals(&integrals, &ldp.alpha_grid, &ldp.t_list);

    let t_last = ldp.t_list.len() - 1;
    let n = integrals.len() as f64;
    let mut n_eff = Vec::with_capacity(ldp.alpha_grid.len());
    let mut usable = Vec::with_capacity(ldp.alpha_grid.len());
    for &alpha in &ldp.alpha_grid {
        let mut sw = 0.0;
        let mut sw2 = 0.0;
        for s in &integrals {
            // weights normalized by the ensemble-mean exponent to avoid
            // under/overflow; n_eff is scale free
            let w = (-alpha * (s[t_last] - integrals[0][t_last])).exp();
            sw += w;
            sw2 += w * w;
        }
        let ne = if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 };
        n_eff.push(ne);
        usable.push(ne >= ldp.n_eff_floor.min(n));
    }

    // bootstrap over trajectories; each replicate recomputes the whole curve
    let boot_replicates: Vec<Vec<f64>> = (0..ldp.n_boot as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                ldp.base_seed ^ 0x5bd1_e995_0000_0000,
                rep,
            ));
            let resampled: Vec<Vec<f64>> = (0..integrals.len())
                .map(|_| integrals[(rng.next_u64() % integrals.len() as u64) as usize].clone())
                .collect();
            curve_from_integrals(&resampled, &ldp.alpha_grid, &ldp.t_list).0
        })
        .collect();

    let mut std_error = vec![0.0; ldp.alpha_grid.len()];
    if ldp.n_boot > 1 {
        for k in 0..ldp.alpha_grid.len() {
            let mean: f64 =
                boot_replicates.iter().map(|r| r[k]).sum::<f64>() / ldp.n_boot as f64;
            let var: f64 = boot_replicates
                .iter()
                .map(|r| (r[k] - mean) * (r[k] - mean))
                .sum::<f64>()
                / (ldp.n_boot - 1) as f64;
            std_error[k] = var.sqrt();
        }
    }

    let mut rates: Vec<f64> = integrals
        .iter()
        .map(|s| s[t_last] / ldp.t_list[t_last])
        .collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |f: f64| rates[((rates.len() - 1) as f64 * f).round() as usize];
    let empirical_rate_range = (q(0.01), q(0.99));

    Ok(CumulantCurve {
        alphas: ldp.alpha_grid.clone(),
        e_hat,
        std_error,
        n_eff,
        usable,
        finite_t_coeff,
        t_list: ldp.t_list.clone(),
        domain,
        n_traj: ldp.n_traj,
        empirical_rate_range,
        boot_replicates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GcPair {
    pub alpha: f64,
    pub deviation: f64,
    pub std_error: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GcSymmetryReport {
    pub pairs: Vec<GcPair>,
    pub max_abs_deviation: f64,
    /// Largest `|deviation| / se` over usable pairs.
    pub max_sigma: f64,
    pub tolerance_sigmas: f64,
    pub pass: bool,
}

/// Checks `ê(α) = ê(1−α)` pointwise; the grid must be symmetric about ½.
/// Deviations are compared against bootstrap errors of the difference.
pub fn gc_symmetry_check(
    curve: &CumulantCurve,
    tolerance_sigmas: f64,
) -> Result<GcSymmetryReport, AnalysisError> {
    let mut pairs = Vec::new();
    let mut max_abs = 0.0f64;
    let mut max_sigma = 0.0f64;
    let mut pass = true;
    for (k, &alpha) in curve.alphas.iter().enumerate() {
        if alpha > 0.5 + 1e-12 {
            continue;
        }
        let mirror = curve
            .point(1.0 - alpha)
            .ok_or(AnalysisError::GridNotSymmetric { alpha })?;
        let deviation = curve.e_hat[k] - curve.e_hat[mirror];
        let mut se = 0.0;
        if curve.boot_replicates.len() > 1 {
            let diffs: Vec<f64> = curve
                .boot_replicates
                .iter()
                .map(|r| r[k] - r[mirror])
                .collect();
            let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
            se = (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
                / (diffs.len() - 1) as f64)
                .sqrt();
        }
        let usable = curve.usable[k] && curve.usable[mirror];
        if usable {
            max_abs = max_abs.max(deviation.abs());
            if se > 0.0 {
                max_sigma = max_sigma.max(deviation.abs() / se);
                if deviation.abs() > tolerance_sigmas * se {
                    pass = false;
                }
            } else if deviation.abs() > 1e-12 {
                pass = false;
            }
        }
        pairs.push(GcPair { alpha, deviation, std_error: se, usable });
    }
    Ok(GcSymmetryReport { pairs, max_abs_deviation: max_abs, max_sigma, tolerance_sigmas, pass })
}

/// Legendre transform of the cumulant curve.
#[derive(Debug, Clone, Serialize)]
pub struct RateFunction {
    pub w: Vec<f64>,
    /// `e(w) = sup_α (e(α) − α w)`; `+∞` outside the slope range of the
    /// (concavity-adjusted) curve.
    pub values: Vec<f64>,
    pub finite: Vec<bool>,
    /// Whether `w` lies inside the empirically sampled rate window; points
    /// outside are extrapolation.
    pub supported: Vec<bool>,
    pub convex_ok: bool,
    /// Location and value of the minimum over the finite grid.
    pub min_w: f64,
    pub min_value: f64,
    /// Largest concavity adjustment applied to the input curve.
    pub max_adjustment: f64,
}

/// Pool-adjacent-violators on the slopes, enforcing a concave curve.
fn isotonic_concave(alphas: &[f64], e: &[f64]) -> (Vec<f64>, f64) {
    let m = alphas.len();
    if m < 3 {
        return (e.to_vec(), 0.0);
    }
    let mut slopes: Vec<f64> = (0..m - 1)
        .map(|i| (e[i + 1] - e[i]) / (alphas[i + 1] - alphas[i]))
        .collect();
    let weights: Vec<f64> = (0..m - 1).map(|i| alphas[i + 1] - alphas[i]).collect();
    // enforce nonincreasing slopes
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new(); // (value, weight, count)
    for i in 0..slopes.len() {
        blocks.push((slopes[i], weights[i], 1));
        while blocks.len() > 1 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 >= last.0 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let w = prev.1 + last.1;
            blocks.push(((prev.0 * prev.1 + last.0 * last.1) / w, w, prev.2 + last.2));
        }
    }
    let mut adjusted = Vec::with_capacity(slopes.len());
    for (v, _, c) in blocks {
        for _ in 0..c {
            adjusted.push(v);
        }
    }
    slopes = adjusted;
    let mut rebuilt = vec![e[0]; m];
    for i in 0..m - 1 {
        rebuilt[i + 1] = rebuilt[i] + slopes[i] * (alphas[i + 1] - alphas[i]);
    }
    // re-center to minimize the shift
    let offset: f64 =
        (0..m).map(|i| e[i] - rebuilt[i]).sum::<f64>() / m as f64;
    for v in rebuilt.iter_mut() {
        *v += offset;
    }
    let max_adjustment = (0..m).map(|i| (rebuilt[i] - e[i]).abs()).fold(0.0f64, f64::max);
    (rebuilt, max_adjustment)
}

/// `e(w) = sup_α(ê(α) − αw)` over the usable grid points, with an isotonic
/// concavity adjustment on slopes first. Errors when the adjustment exceeds
/// `tolerance_sigmas` times the pointwise errors.
pub fn legendre_rate(
    curve: &CumulantCurve,
    w_grid: &[f64],
    tolerance_sigmas: f64,
) -> Result<RateFunction, AnalysisError> {
    let mut alphas = Vec::new();
    let mut e = Vec::new();
    let mut se = Vec::new();
    for k in 0..curve.alphas.len() {
        if curve.usable[k] {
            alphas.push(curve.alphas[k]);
            e.push(curve.e_hat[k]);
            se.push(curve.std_error[k]);
        }
    }
    if alphas.len() < 3 {
        return Err(AnalysisError::Invalid(
            "need at least 3 usable grid points for the transform".into(),
        ));
    }
    let (adjusted, max_adjustment) = isotonic_concave(&alphas, &e);
    let allowed = se
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * tolerance_sigmas;
    if max_adjustment > allowed {
        return Err(AnalysisError::NonConvex {
            max_adjustment,
            allowed,
        });
    }

    let slopes: Vec<f64> = (0..alphas.len() - 1)
        .map(|i| (adjusted[i + 1] - adjusted[i]) / (alphas[i + 1] - alphas[i]))
        .collect();
    let slope_hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope_lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = 1e-9 * (slope_hi - slope_lo).abs().max(1.0);

    let mut values = Vec::with_capacity(w_grid.len());
    let mut finite = Vec::with_capacity(w_grid.len());
    let mut supported = Vec::with_capacity(w_grid.len());
    let (rate_lo, rate_hi) = curve.empirical_rate_range;
    for &w in w_grid {
        if w < slope_lo - margin || w > slope_hi + margin {
            values.push(f64::INFINITY);
            finite.push(false);
            supported.push(false);
            continue;
        }
        let v = alphas
            .iter()
            .zip(&adjusted)
            .map(|(&a, &ea)| ea - a * w)
            .fold(f64::NEG_INFINITY, f64::max);
        values.push(v);
        finite.push(true);
        supported.push(w >= rate_lo && w <= rate_hi);
    }

    // convexity of the output on its finite points
    let mut convex_ok = true;
    let fin: Vec<(f64, f64)> = w_grid
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.is_finite())
        .map(|(&w, &v)| (w, v))
        .collect();
    for tri in fin.windows(3) {
        let s1 = (tri[1].1 - tri[0].1) / (tri[1].0 - tri[0].0);
        let s2 = (tri[2].1 - tri[1].1) / (tri[2].0 - tri[1].0);
        if s2 + 1e-9 < s1 {
            convex_ok = false;
        }
    }
    let (mut min_w, mut min_value) = (f64::NAN, f64::INFINITY);
    for (&w, &v) in w_grid.iter().zip(&values) {
        if v < min_value {
            min_value = v;
            min_w = w;
        }
    }
    Ok(RateFunction {
        w: w_grid.to_vec(),
        values,
        finite,
        supported,
        convex_ok,
        min_w,
        min_value,
        max_adjustment,
    })
}
