//! Green–Kubo response check.
//!
//! The linear response of the stationary mean flux to the inverse
//! temperature difference `Δβ = β_right − β_left` equals half the
//! time-integrated equilibrium flux autocorrelation over the whole axis,
//! which by time-reversal symmetry of the equilibrium state is the
//! one-sided integral:
//!
//! ```text
//! d/d(Δβ) E_ness[Φ_j] |_{Δβ=0}  =  ½ ∫_{-∞}^{∞} ⟨Φ_j(t) Φ_j(0)⟩_eq dt
//!                               =  ∫₀^∞ ⟨Φ_j(t) Φ_j(0)⟩_eq dt .
//! ```
//!
//! (The linear oracle verifies this normalization exactly on harmonic
//! chains; see the oracle consistency tests.)
//!
//! The response side perturbs the temperatures symmetrically about a fixed
//! mean β (`β_{L,R} = β̄ ∓ Δβ/2`) and differences the simulated steady
//! fluxes; the correlation side integrates the equilibrium autocovariance
//! up to the first persistent zero-crossing of its confidence band.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{simulate, trajectory_seed, IntegratorSpec};
use crate::model::{SystemConfig, SystemState};
use crate::observables::flow_count;

use super::steady::batch_means_pooled;
use super::AnalysisError;

#[derive(Debug, Clone, Serialize)]
pub struct GreenKuboSpec {
    pub flow_index: usize,
    /// Mean inverse temperature held fixed while Δβ varies.
    pub mean_beta: f64,
    /// Probe magnitudes; each contributes the pair ±Δβ.
    pub probes: Vec<f64>,
    /// Steady-run length per probe (time units).
    pub response_horizon: f64,
    /// Total equilibrium time for the correlation side.
    pub corr_horizon: f64,
    /// Independent equilibrium trajectories (error bars come from their
    /// scatter).
    pub corr_runs: usize,
    pub max_lag_time: f64,
    pub sample_stride: usize,
    pub burn_in_fraction: f64,
    pub batch_count: usize,
    pub base_seed: u64,
    /// Average the flow over all indices (their stationary means agree by
    /// flow constancy) to reduce response-side variance.
    pub average_flows: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub delta_beta: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub mean_flux: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenKuboReport {
    pub response: f64,
    pub response_std_error: f64,
    /// `∫₀^W Ĉ(t) dt` with the window `W` (half the two-sided integral).
    pub correlation_integral: f64,
    pub correlation_std_error: f64,
    pub window_lag_time: f64,
    /// The confidence band of `Ĉ` reached zero inside the lag window.
    pub window_converged: bool,
    pub ratio: f64,
    pub ratio_std_error: f64,
    pub equilibrium_mean_flux: f64,
    pub equilibrium_mean_flux_se: f64,
    pub probes: Vec<ProbeResult>,
}

fn with_temperatures(base: &SystemConfig, t_left: f64, t_right: f64) -> SystemConfig {
    let mut config = base.clone();
    config.reservoirs[0].temperature = t_left;
    config.reservoirs[1].temperature = t_right;
    config
}

fn flux_observers(config: &SystemConfig, j: usize, average: bool) -> Vec<String> {
    if average {
        (0..flow_count(config)).map(|k| format!("Phi_{k}")).collect()
    } else {
        vec![format!("Phi_{j}")]
    }
}

fn steady_flux(
    config: &SystemConfig,
    spec: IntegratorSpec,
    observers: &[String],
    horizon: f64,
    stride: usize,
    burn_in: f64,
    batches: usize,
    seed: u64,
) -> Result<(f64, f64), AnalysisError> {
    let names: Vec<&str> = observers.iter().map(|s| s.as_str()).collect();
    let record = simulate(
        config,
        &SystemState::zero(config),
        spec,
        horizon,
        seed,
        &names,
        stride,
        false,
    )?;
    // average over the (constant-mean) flow columns sample by sample
    let n = record.len();
    let mut series = vec![0.0; n];
    for name in observers {
        let col = record.series_for(name).expect("sampled column");
        for (acc, v) in series.iter_mut().zip(col) {
            *acc += v;
        }
    }
    for v in series.iter_mut() {
        *v /= observers.len() as f64;
    }
    let est = batch_means_pooled(&[&series], burn_in, batches)?;
    Ok((est.mean, est.std_error))
}

/// Runs both sides of the Green–Kubo identity on the config's lattice with
/// the spec's temperatures; `config` supplies everything but the reservoir
/// temperatures, which the probes override (two reservoirs required).
pub fn green_kubo(
    base: &SystemConfig,
    spec: IntegratorSpec,
    gk: &GreenKuboSpec,
) -> Result<GreenKuboReport, AnalysisError> {
    if base.reservoirs.len() != 2 {
        return Err(AnalysisError::Invalid("Green-Kubo needs exactly two reservoirs".into()));
    }
    if gk.probes.is_empty() || gk.probes.iter().any(|&d| d <= 0.0 || d >= 2.0 * gk.mean_beta) {
        return Err(AnalysisError::Invalid(
            "probes must be positive and below 2·mean_beta".into(),
        ));
    }
    let observers = flux_observers(base, gk.flow_index, gk.average_flows);

    // response side: probe pairs in parallel
    let mut jobs = Vec::new();
    for (k, &d) in gk.probes.iter().enumerate() {
        jobs.push((k, d));
        jobs.push((k, -d));
    }
    let probe_results: Vec<Result<ProbeResult, AnalysisError>> = jobs
        .par_iter()
        .map(|&(k, d)| {
            let beta_left = gk.mean_beta - 0.5 * d;
            let beta_right = gk.mean_beta + 0.5 * d;
            let (t_left, t_right) = (1.0 / beta_left, 1.0 / beta_right);
            let config = with_temperatures(base, t_left, t_right);
            let seed = trajectory_seed(gk.base_seed, 1000 + 2 * k as u64 + (d < 0.0) as u64);
            let (mean_flux, std_error) = steady_flux(
                &config,
                spec,
                &observers,
                gk.response_horizon,
                gk.sample_stride,
                gk.burn_in_fraction,
                gk.batch_count,
                seed,
            )?;
            Ok(ProbeResult { delta_beta: d, t_left, t_right, mean_flux, std_error })
        })
        .collect();
    let mut probes: Vec<ProbeResult> = probe_results.into_iter().collect::<Result<_, _>>()?;
    probes.sort_by(|a, b| a.delta_beta.partial_cmp(&b.delta_beta).unwrap());

    // weighted least squares through the origin: flux = response · Δβ
    let mut num = 0.0;
    let mut den = 0.0;
    for p in &probes {
        let w = 1.0 / (p.std_error * p.std_error).max(1e-300);
        num += w * p.delta_beta * p.mean_flux;
        den += w * p.delta_beta * p.delta_beta;
    }
    let response = num / den;
    let response_std_error = (1.0 / den).sqrt();

    // correlation side at equilibrium
    let t_eq = 1.0 / gk.mean_beta;
    let eq_config = with_temperatures(base, t_eq, t_eq);
    let run_horizon = gk.corr_horizon / gk.corr_runs as f64;
    let dt_sample = spec.dt * gk.sample_stride as f64;
    let max_lag = (gk.max_lag_time / dt_sample).round() as usize;
    let flux_name = format!("Phi_{}", gk.flow_index);

    struct CorrRun {
        autocov: Vec<f64>,
        mean: f64,
        n: usize,
    }
    let runs: Vec<Result<CorrRun, AnalysisError>> = (0..gk.corr_runs as u64)
        .into_par_iter()
        .map(|i| {
            let record = simulate(
                &eq_config,
                &SystemState::zero(&eq_config),
                spec,
                run_horizon,
                trajectory_seed(gk.base_seed ^ 0x00c0_ffee, i),
                &[flux_name.as_str()],
                gk.sample_stride,
                false,
            )?;
            let series = record.series_for(&flux_name).expect("sampled");
            let skip = (series.len() as f64 * gk.burn_in_fraction).floor() as usize;
            let s = &series[skip..];
            let n = s.len();
            let mean = s.iter().sum::<f64>() / n as f64;
            let mut autocov = Vec::with_capacity(max_lag + 1);
            for lag in 0..=max_lag.min(n - 2) {
                let m = n - lag;
                let c: f64 =
                    (0..m).map(|t| (s[t] - mean) * (s[t + lag] - mean)).sum::<f64>() / m as f64;
                autocov.push(c);
            }
            Ok(CorrRun { autocov, mean, n })
        })
        .collect();
    let runs: Vec<CorrRun> = runs.into_iter().collect::<Result<_, _>>()?;
    let r = runs.len() as f64;
    let lags = runs.iter().map(|c| c.autocov.len()).min().unwrap_or(0);
    if lags < 3 || runs.len() < 2 {
        return Err(AnalysisError::RecordTooShort(
            "correlation side needs >= 2 runs and >= 3 lags".into(),
        ));
    }
    let mut c_mean = vec![0.0; lags];
    let mut c_se = vec![0.0; lags];
    for k in 0..lags {
        let mean: f64 = runs.iter().map(|x| x.autocov[k]).sum::<f64>() / r;
        let var: f64 =
            runs.iter().map(|x| (x.autocov[k] - mean).powi(2)).sum::<f64>() / (r - 1.0);
        c_mean[k] = mean;
        c_se[k] = (var / r).sqrt();
    }

    // window rule: first lag where the band |C| <= 2 se holds for 5
    // consecutive lags
    let consecutive = 5usize;
    let mut window = lags - 1;
    let mut window_converged = false;
    let mut run_len = 0usize;
    for k in 1..lags {
        if c_mean[k].abs() <= 2.0 * c_se[k] {
            run_len += 1;
            if run_len >= consecutive {
                window = k - consecutive + 1;
                window_converged = true;
                break;
            }
        } else {
            run_len = 0;
        }
    }

    let integral_of = |c: &[f64]| -> f64 {
        let mut acc = 0.0;
        for k in 1..=window {
            acc += 0.5 * dt_sample * (c[k - 1] + c[k]);
        }
        acc
    };
    let correlation_integral = integral_of(&c_mean);
    let per_run: Vec<f64> = runs.iter().map(|x| integral_of(&x.autocov)).collect();
    let pr_mean: f64 = per_run.iter().sum::<f64>() / r;
    let correlation_std_error = (per_run
        .iter()
        .map(|v| (v - pr_mean) * (v - pr_mean))
        .sum::<f64>()
        / (r - 1.0)
        / r)
        .sqrt();

    let eq_mean: f64 = runs.iter().map(|x| x.mean).sum::<f64>() / r;
    let eq_se = (runs.iter().map(|x| (x.mean - eq_mean).powi(2)).sum::<f64>() / (r - 1.0) / r)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let _total_samples: usize = runs.iter().map(|x| x.n).sum();

    let ratio = response / correlation_integral;
    let ratio_std_error = ratio.abs()
        * ((response_std_error / response).powi(2)
            + (correlation_std_error / correlation_integral).powi(2))
        .sqrt();

    Ok(GreenKuboReport {
        response,
        response_std_error,
        correlation_integral,
        correlation_std_error,
        window_lag_time: window as f64 * dt_sample,
        window_converged,
        ratio,
        ratio_std_error,
        equilibrium_mean_flux: eq_mean,
        equilibrium_mean_flux_se: eq_se,
        probes,
    })
}
