//! Numerical probes of the dissipation structure: the exponential-weight
//! contraction over energy shells and the zero-temperature decay scaling.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    relax_deterministic, sample_energy_shell, IntegratorSpec, NormalSource, Stepper,
};
use crate::model::{total_energy_g, SystemConfig};
use crate::observables::theta_in_range;

use super::AnalysisError;

#[derive(Debug, Clone, Serialize)]
pub struct ShellEstimate {
    pub energy: f64,
    /// `log κ̂(E) = max over shell states of log(Ê[W_θ(x_t)] / W_θ(x))`.
    pub log_kappa: f64,
    /// `log b̂(E) = max over shell states of log Ê[W_θ(x_t)]`.
    pub log_b: f64,
    /// Median log-ratio across shell states, for context.
    pub median_log_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovProbeReport {
    pub theta: f64,
    pub theta_in_range: bool,
    pub horizon: f64,
    pub shells: Vec<ShellEstimate>,
    /// `log κ̂` strictly decreasing across shells.
    pub decreasing: bool,
}

/// Estimates the contraction factor `κ(E)` of `W_θ = exp(θG)` over energy
/// shells: for each sampled shell state, `Ê[W_θ(x(t))]/W_θ(x)` over noise
/// realizations (log-domain throughout), maximized over the shell — a
/// conservative under-approximation of the true supremum.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_probe(
    config: &SystemConfig,
    spec: IntegratorSpec,
    theta: f64,
    horizon: f64,
    shells: &[f64],
    states_per_shell: usize,
    noise_reps: usize,
    base_seed: u64,
) -> Result<LyapunovProbeReport, AnalysisError> {
    if !(theta > 0.0) {
        return Err(AnalysisError::Invalid("theta must be positive".into()));
    }
    if shells.is_empty() || states_per_shell == 0 || noise_reps == 0 {
        return Err(AnalysisError::Invalid("need shells, states, and noise reps".into()));
    }
    let t_max = config.max_temperature();
    for &e in shells {
        if e <= t_max {
            return Err(AnalysisError::Invalid(format!(
                "shell energy {e} must sit above the temperature scale {t_max}"
            )));
        }
    }
    let steps = (horizon / spec.dt).ceil() as u64;

    let mut out = Vec::with_capacity(shells.len());
    for (shell_idx, &energy) in shells.iter().enumerate() {
        let ratios: Vec<Result<f64, AnalysisError>> = (0..states_per_shell as u64)
            .into_par_iter()
            .map(|s| {
                let mut rng = NormalSource::for_trajectory(
                    base_seed ^ (shell_idx as u64) << 32,
                    s,
                );
                let x0 = sample_energy_shell(config, energy, None, &mut rng);
                let g0 = total_energy_g(config, &x0);
                // log E[exp(theta G_t)] via a running log-sum-exp
                let mut lse_max = f64::NEG_INFINITY;
                let mut lse_sum = 0.0f64;
                for _rep in 0..noise_reps {
                    let mut state = x0.clone();
                    state.t = 0.0;
                    let mut stepper =
                        Stepper::new(config, spec).map_err(AnalysisError::Dynamics)?;
                    let cap = spec.cap_g.unwrap_or(f64::INFINITY);
                    for k in 1..=steps {
                        stepper
                            .step(&mut state, &mut rng, cap)
                            .map_err(AnalysisError::Dynamics)?;
                        state.t = k as f64 * spec.dt;
                    }
                    let v = theta * total_energy_g(config, &state);
                    if v > lse_max {
                        lse_sum = lse_sum * (lse_max - v).exp() + 1.0;
                        lse_max = v;
                    } else {
                        lse_sum += (v - lse_max).exp();
                    }
                }
                let log_mean_w = lse_max + (lse_sum / noise_reps as f64).ln();
                Ok(log_mean_w - theta * g0)
            })
            .collect();
        let mut ratios: Vec<f64> = ratios.into_iter().collect::<Result<_, _>>()?;
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let log_kappa = *ratios.last().expect("nonempty");
        let median = ratios[ratios.len() / 2];
        out.push(ShellEstimate {
            energy,
            log_kappa,
            log_b: log_kappa + theta * energy,
            median_log_ratio: median,
        });
    }
    let decreasing = out.windows(2).all(|w| w[1].log_kappa < w[0].log_kappa);
    Ok(LyapunovProbeReport {
        theta,
        theta_in_range: theta_in_range(config, theta),
        horizon,
        shells: out,
        decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyDropSample {
    pub energy: f64,
    /// Smallest energy drop over the sampled directions (the worst case).
    pub worst_drop: f64,
    pub mean_drop: f64,
    /// Directions where the energy failed to decrease.
    pub faults: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipationScalingReport {
    /// Fitted slope of `log(−ΔG)` against `log E` on the worst-case drops.
    pub exponent: f64,
    pub exponent_std_error: f64,
    /// Prefactor from the fit intercept.
    pub c_estimate: f64,
    pub samples: Vec<EnergyDropSample>,
    pub any_fault: bool,
}

/// Zero-temperature dissipation scaling: relaxes initial states of energy
/// `E` over unit time and fits the decay exponent of the worst-case drop.
/// Directions are reused across shells (rescaled), half of them isotropic,
/// half concentrated on single interior sites.
pub fn dissipation_scaling(
    config: &SystemConfig,
    energies: &[f64],
    dt: f64,
    directions: usize,
    base_seed: u64,
) -> Result<DissipationScalingReport, AnalysisError> {
    if config.reservoirs.iter().any(|r| r.temperature != 0.0) {
        return Err(AnalysisError::Invalid(
            "dissipation scaling requires all reservoir temperatures zero".into(),
        ));
    }
    if energies.len() < 2 || energies.iter().any(|&e| e <= 0.0) {
        return Err(AnalysisError::Invalid("need >= 2 positive energies".into()));
    }
    if directions == 0 {
        return Err(AnalysisError::Invalid("need at least one direction".into()));
    }
    let boundary: Vec<usize> = config.topology.boundary.iter().map(|a| a.vertex).collect();
    let interior: Vec<usize> = (0..config.vertex_count())
        .filter(|v| !boundary.contains(v))
        .collect();

    let mut samples = Vec::with_capacity(energies.len());
    let mut any_fault = false;
    for &energy in energies {
        let drops: Vec<Result<f64, AnalysisError>> = (0..directions as u64)
            .into_par_iter()
            .map(|d| {
                let mut rng = NormalSource::for_trajectory(base_seed, d);
                // even direction indices isotropic, odd ones concentrated
                // on an interior site (when any exists)
                let site = if d % 2 == 1 && !interior.is_empty() {
                    Some(interior[(d as usize / 2) % interior.len()])
                } else {
                    None
                };
                let x0 = sample_energy_shell(config, energy, site, &mut rng);
                let report = relax_deterministic(config, &x0, dt, 1.0)
                    .map_err(AnalysisError::Dynamics)?;
                Ok(report.g_initial - report.g_final)
            })
            .collect();
        let drops: Vec<f64> = drops.into_iter().collect::<Result<_, _>>()?;
        let faults = drops.iter().filter(|&&d| d <= 0.0).count();
        if faults > 0 {
            any_fault = true;
        }
        let worst = drops.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = drops.iter().sum::<f64>() / drops.len() as f64;
        samples.push(EnergyDropSample { energy, worst_drop: worst, mean_drop: mean, faults });
    }

    // log-log fit on the worst-case drops
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.worst_drop > 0.0)
        .map(|s| (s.energy.ln(), s.worst_drop.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(AnalysisError::Invalid(
            "all shells faulted; no decay to fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ss_res = 0.0;
    for &(x, y) in &pts {
        let f = intercept + slope * x;
        ss_res += (y - f) * (y - f);
    }
    let exponent_std_error = if pts.len() > 2 {
        (ss_res / (n - 2.0) * n / denom).sqrt()
    } else {
        0.0
    };
    Ok(DissipationScalingReport {
        exponent: slope,
        exponent_std_error,
        c_estimate: intercept.exp(),
        samples,
        any_fault,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chain, PolynomialPotential};

    #[test]
    fn zero_temperature_probe_reduces_to_deterministic_decay() {
        let config = build_chain(
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::quartic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let report = lyapunov_probe(
            &config,
            IntegratorSpec::splitting(0.005),
            0.1,
            1.0,
            &[50.0, 500.0],
            8,
            2,
            7,
        )
        .unwrap();
        // no noise: kappa < 1 on every shell, i.e. log kappa < 0
        for shell in &report.shells {
            assert!(shell.log_kappa < 0.0, "shell {shell:?}");
        }
    }

    #[test]
    fn shells_below_temperature_rejected() {
        let config = build_chain(
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            2.0,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(lyapunov_probe(
            &config,
            IntegratorSpec::splitting(0.01),
            0.1,
            1.0,
            &[1.0],
            4,
            2,
            7
        )
        .is_err());
    }

    #[test]
    fn harmonic_scaling_exponent_is_one() {
        let config = build_chain(
            3,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let energies = [1e2, 1e3, 1e4];
        let report = dissipation_scaling(&config, &energies, 0.002, 12, 3).unwrap();
        assert!(!report.any_fault);
        assert!(
            (report.exponent - 1.0).abs() < 0.1,
            "linear dynamics must give exponent 1, got {} +- {}",
            report.exponent,
            report.exponent_std_error
        );
    }

    #[test]
    fn nonzero_temperature_rejected_for_scaling() {
        let config = build_chain(
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            1.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(dissipation_scaling(&config, &[10.0, 100.0], 0.01, 4, 1).is_err());
    }
}
