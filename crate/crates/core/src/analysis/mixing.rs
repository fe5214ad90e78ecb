//! Autocorrelation decay estimation.
//!
//! Correlation functions of underdamped lattices oscillate under an
//! exponentially decaying envelope, so the fitted quantity is the envelope:
//! the points of `|ρ(k)|` that dominate everything at later lags. A
//! log-linear fit of those points gives the decay rate; an R² threshold
//! flags whether an exponential envelope is consistent with the data.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::TrajectoryRecord;

use super::AnalysisError;

/// Normalized autocorrelation `ρ(0..=max_lag)` of a mean-subtracted series.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .into_par_iter()
        .map(|lag| {
            let m = n - lag;
            let c: f64 = (0..m)
                .map(|i| (series[i] - mean) * (series[i + lag] - mean))
                .sum::<f64>()
                / m as f64;
            if c0 > 0.0 {
                c / c0
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    /// Fitted exponential decay rate of the envelope (1/time).
    pub rate: f64,
    pub rate_std_error: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Exponential envelope consistent with the data (R² above threshold).
    pub exponential_ok: bool,
    /// Fewer than three envelope points above the noise floor; the rate is
    /// a lower bound from the first lag.
    pub low_resolution: bool,
    pub noise_floor: f64,
}

/// Fits `log |ρ|` against time on the envelope points. `lag_times` must be
/// increasing with `lag_times[0] = 0` and `values[0] = 1`.
pub fn fit_exponential_envelope(
    lag_times: &[f64],
    values: &[f64],
    noise_floor: f64,
    r2_threshold: f64,
) -> Result<MixingReport, AnalysisError> {
    if lag_times.len() != values.len() || lag_times.len() < 2 {
        return Err(AnalysisError::Invalid("need matching lag/value arrays".into()));
    }
    // envelope: |rho(k)| at least as large as everything later, above floor
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut later_max = vec![0.0; abs.len()];
    let mut running = 0.0f64;
    for k in (0..abs.len()).rev() {
        later_max[k] = running;
        running = running.max(abs[k]);
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for k in 0..abs.len() {
        if abs[k] >= later_max[k] && abs[k] > noise_floor {
            pts.push((lag_times[k], abs[k].ln()));
        }
    }

    if pts.len() < 3 {
        // decay faster than the sampling resolution: bound it from lag 1
        let dt = lag_times[1] - lag_times[0];
        let v1 = abs.get(1).copied().unwrap_or(noise_floor).max(noise_floor.min(1.0)).min(1.0);
        let rate = -(v1.max(1e-300)).ln() / dt;
        return Ok(MixingReport {
            rate,
            rate_std_error: f64::NAN,
            r_squared: f64::NAN,
            points_used: pts.len(),
            exponential_ok: false,
            low_resolution: true,
            noise_floor,
        });
    }

    // least squares y = a + b t
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(AnalysisError::Invalid("degenerate lag spacing".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(t, y) in &pts {
        let fit = intercept + slope * t;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let slope_se = if pts.len() > 2 {
        (ss_res / (n - 2.0) * n / denom).sqrt()
    } else {
        f64::NAN
    };
    Ok(MixingReport {
        rate: -slope,
        rate_std_error: slope_se,
        r_squared,
        points_used: pts.len(),
        exponential_ok: r_squared >= r2_threshold,
        low_resolution: false,
        noise_floor,
    })
}

/// Autocorrelation decay rate of one observable column, averaged across
/// records. `max_lag_time` bounds the fitted window.
pub fn mixing_rate(
    records: &[TrajectoryRecord],
    observable: &str,
    burn_in_fraction: f64,
    max_lag_time: f64,
) -> Result<MixingReport, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Invalid("no records".into()));
    }
    let dt_sample = {
        let t = &records[0].sample_times;
        if t.len() < 3 {
            return Err(AnalysisError::RecordTooShort("need at least 3 samples".into()));
        }
        t[1] - t[0]
    };
    let max_lag = ((max_lag_time / dt_sample).round() as usize).max(2);
    let mut pooled: Option<Vec<f64>> = None;
    let mut total_n = 0usize;
    for r in records {
        let series = r
            .series_for(observable)
            .ok_or_else(|| AnalysisError::Invalid(format!("record missing column {observable}")))?;
        let skip = (series.len() as f64 * burn_in_fraction).floor() as usize;
        let series = &series[skip..];
        if series.len() <= 3 * max_lag.min(series.len() / 3).max(2) {
            return Err(AnalysisError::RecordTooShort(format!(
                "{} samples for lag window {}",
                series.len(),
                max_lag
            )));
        }
        total_n += series.len();
        let rho = autocorrelation(series, max_lag);
        match pooled.as_mut() {
            None => pooled = Some(rho),
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(rho) {
                    *a += b;
                }
            }
        }
    }
    let mut rho = pooled.expect("nonempty");
    for v in rho.iter_mut() {
        *v /= records.len() as f64;
    }
    let lag_times: Vec<f64> = (0..rho.len()).map(|k| k as f64 * dt_sample).collect();
    let noise_floor = 4.0 / (total_n as f64).sqrt();
    fit_exponential_envelope(&lag_times, &rho, noise_floor, 0.85)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NormalSource;

    #[test]
    fn recovers_ou_rate_within_ten_percent() {
        let gamma = 0.8f64;
        let dt = 0.05f64;
        let n = 400_000;
        let decay = (-gamma * dt).exp();
        let noise = (1.0 - decay * decay).sqrt();
        let mut rng = NormalSource::from_seed(4);
        let mut x = 0.0;
        let series: Vec<f64> = (0..n)
            .map(|_| {
                x = decay * x + noise * rng.next_normal();
                x
            })
            .collect();
        let rho = autocorrelation(&series, (4.0 / gamma / dt) as usize);
        let lag_times: Vec<f64> = (0..rho.len()).map(|k| k as f64 * dt).collect();
        let report =
            fit_exponential_envelope(&lag_times, &rho, 4.0 / (n as f64).sqrt(), 0.85).unwrap();
        assert!(
            (report.rate - gamma).abs() < 0.1 * gamma,
            "fitted {} expected {gamma}",
            report.rate
        );
        assert!(report.exponential_ok);
    }

    #[test]
    fn white_noise_decays_within_a_stride() {
        let mut rng = NormalSource::from_seed(9);
        let n = 40_000;
        let dt = 0.1;
        let series: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let rho = autocorrelation(&series, 50);
        let lag_times: Vec<f64> = (0..rho.len()).map(|k| k as f64 * dt).collect();
        let report =
            fit_exponential_envelope(&lag_times, &rho, 4.0 / (n as f64).sqrt(), 0.85).unwrap();
        assert!(report.low_resolution);
        // decay time then bounded by one sampling stride
        assert!(1.0 / report.rate <= 2.0 * dt, "decay time {}", 1.0 / report.rate);
    }

    #[test]
    fn damped_oscillation_envelope() {
        // |cos(5t)| e^{-0.5 t}: envelope rate 0.5
        let dt = 0.02;
        let n = 4000;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (5.0 * t).cos() * (-0.5 * t).exp()
            })
            .collect();
        let lag_times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let report = fit_exponential_envelope(&lag_times, &values, 1e-6, 0.85).unwrap();
        assert!(
            (report.rate - 0.5).abs() < 0.05,
            "envelope rate {} expected 0.5",
            report.rate
        );
        assert!(report.exponential_ok);
    }
}
