//! Batch-means steady-state estimation with autocorrelation-aware errors.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::TrajectoryRecord;

use super::AnalysisError;

/// Point estimate of a stationary mean.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Batch-means standard error of the mean.
    pub std_error: f64,
    /// Integrated autocorrelation time in sample units
    /// (`Var(mean) ≈ Var(x)·τ/N`).
    pub tau_samples: f64,
    pub n_samples: usize,
    pub batch_count: usize,
}

/// Batch-means estimate over one series; `batch_count` equal batches.
pub fn batch_means(series: &[f64], batch_count: usize) -> Result<MomentEstimate, AnalysisError> {
    if batch_count < 2 {
        return Err(AnalysisError::Invalid("batch_count must be >= 2".into()));
    }
    let n = series.len();
    if n < 2 * batch_count {
        return Err(AnalysisError::RecordTooShort(format!(
            "{n} samples cannot fill {batch_count} batches"
        )));
    }
    let batch_len = n / batch_count;
    let used = batch_len * batch_count;
    let series = &series[n - used..];

    let mean: f64 = series.iter().sum::<f64>() / used as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / used as f64;

    let mut batch_mean_var = 0.0;
    for b in 0..batch_count {
        let bm: f64 =
            series[b * batch_len..(b + 1) * batch_len].iter().sum::<f64>() / batch_len as f64;
        batch_mean_var += (bm - mean) * (bm - mean);
    }
    batch_mean_var /= (batch_count - 1) as f64;

    let std_error = (batch_mean_var / batch_count as f64).sqrt();
    let tau_samples = if var > 0.0 {
        (batch_len as f64 * batch_mean_var / var).max(1.0)
    } else {
        1.0
    };
    Ok(MomentEstimate {
        mean,
        std_error,
        tau_samples,
        n_samples: used,
        batch_count,
    })
}

/// Pools batch means across several records of one observable. Each record
/// contributes `ceil(batch_count / records)` batches from its post-burn-in
/// samples.
pub fn batch_means_pooled(
    series: &[&[f64]],
    burn_in_fraction: f64,
    batch_count: usize,
) -> Result<MomentEstimate, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::Invalid("no records".into()));
    }
    if series.len() == 1 {
        let s = trim_burn_in(series[0], burn_in_fraction)?;
        return batch_means(s, batch_count);
    }
    let per_record = batch_count.div_ceil(series.len()).max(2);
    let mut batch_values = Vec::new();
    let mut pooled_mean = 0.0;
    let mut pooled_var = 0.0;
    let mut pooled_n = 0usize;
    let mut batch_len_total = 0usize;
    for s in series {
        let s = trim_burn_in(s, burn_in_fraction)?;
        if s.len() < 2 * per_record {
            return Err(AnalysisError::RecordTooShort(format!(
                "{} samples cannot fill {per_record} batches",
                s.len()
            )));
        }
        let batch_len = s.len() / per_record;
        batch_len_total += batch_len;
        for b in 0..per_record {
            let bm: f64 =
                s[b * batch_len..(b + 1) * batch_len].iter().sum::<f64>() / batch_len as f64;
            batch_values.push(bm);
        }
        for &x in s {
            pooled_mean += x;
            pooled_n += 1;
        }
    }
    pooled_mean /= pooled_n as f64;
    for s in series {
        let s = trim_burn_in(s, burn_in_fraction)?;
        for &x in s {
            pooled_var += (x - pooled_mean) * (x - pooled_mean);
        }
    }
    pooled_var /= pooled_n as f64;

    let b_total = batch_values.len();
    let bm_mean: f64 = batch_values.iter().sum::<f64>() / b_total as f64;
    let bm_var: f64 = batch_values
        .iter()
        .map(|x| (x - bm_mean) * (x - bm_mean))
        .sum::<f64>()
        / (b_total - 1) as f64;
    let avg_batch_len = batch_len_total as f64 / series.len() as f64;
    Ok(MomentEstimate {
        mean: bm_mean,
        std_error: (bm_var / b_total as f64).sqrt(),
        tau_samples: if pooled_var > 0.0 {
            (avg_batch_len * bm_var / pooled_var).max(1.0)
        } else {
            1.0
        },
        n_samples: pooled_n,
        batch_count: b_total,
    })
}

fn trim_burn_in(series: &[f64], burn_in_fraction: f64) -> Result<&[f64], AnalysisError> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(AnalysisError::Invalid(format!(
            "burn-in fraction must be in [0, 1), got {burn_in_fraction}"
        )));
    }
    let skip = (series.len() as f64 * burn_in_fraction).floor() as usize;
    Ok(&series[skip..])
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableReport {
    pub name: String,
    pub estimate: MomentEstimate,
    /// First-half vs second-half means agree within 3 combined errors.
    pub stationarity_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateReport {
    pub observables: Vec<ObservableReport>,
    pub burn_in_fraction: f64,
    /// Raised when `batch_count · τ` exceeds the available record length,
    /// i.e. the batches are too short to decorrelate.
    pub mixing_warning: bool,
}

impl SteadyStateReport {
    pub fn get(&self, name: &str) -> Option<&ObservableReport> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// Batch-means estimates for every observable column of the records.
pub fn steady_state(
    records: &[TrajectoryRecord],
    burn_in_fraction: f64,
    batch_count: usize,
) -> Result<SteadyStateReport, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Invalid("no records".into()));
    }
    let names = records[0].observable_names.clone();
    let mut observables = Vec::with_capacity(names.len());
    let mut mixing_warning = false;
    for name in &names {
        let series: Vec<&[f64]> = records
            .iter()
            .map(|r| {
                r.series_for(name)
                    .ok_or_else(|| AnalysisError::Invalid(format!("record missing column {name}")))
            })
            .collect::<Result<_, _>>()?;
        let estimate = batch_means_pooled(&series, burn_in_fraction, batch_count)?;
        if estimate.batch_count as f64 * estimate.tau_samples > estimate.n_samples as f64 {
            mixing_warning = true;
        }

        let stationarity_ok = {
            let s = trim_burn_in(series[0], burn_in_fraction)?;
            let half = s.len() / 2;
            let halves = batch_count.max(4) / 2;
            match (batch_means(&s[..half], halves), batch_means(&s[half..], halves)) {
                (Ok(a), Ok(b)) => {
                    let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
                    (a.mean - b.mean).abs() <= 3.0 * combined + 1e-12
                }
                _ => false,
            }
        };
        observables.push(ObservableReport { name: name.clone(), estimate, stationarity_ok });
    }
    Ok(SteadyStateReport { observables, burn_in_fraction, mixing_warning })
}

/// Second-moment matrix estimate from stored states, entrywise batch-means
/// errors. For the zero-mean linear systems this estimates the stationary
/// covariance directly.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub second_moment: DMatrix<f64>,
    pub std_error: DMatrix<f64>,
    pub n_samples: usize,
}

pub fn stationary_second_moments(
    records: &[TrajectoryRecord],
    burn_in_fraction: f64,
    batch_count: usize,
) -> Result<CovarianceEstimate, AnalysisError> {
    let mut flats: Vec<Vec<f64>> = Vec::new();
    for r in records {
        let states = r
            .states
            .as_ref()
            .ok_or_else(|| AnalysisError::Invalid("records carry no stored states".into()))?;
        let skip = (states.len() as f64 * burn_in_fraction).floor() as usize;
        for s in &states[skip..] {
            flats.push(s.to_flat());
        }
    }
    if flats.is_empty() {
        return Err(AnalysisError::RecordTooShort("no states after burn-in".into()));
    }
    let dim = flats[0].len();
    let mut second_moment = DMatrix::zeros(dim, dim);
    let mut std_error = DMatrix::zeros(dim, dim);
    let mut product = vec![0.0; flats.len()];
    for a in 0..dim {
        for b in a..dim {
            for (k, x) in flats.iter().enumerate() {
                product[k] = x[a] * x[b];
            }
            let est = batch_means(&product, batch_count)?;
            second_moment[(a, b)] = est.mean;
            second_moment[(b, a)] = est.mean;
            std_error[(a, b)] = est.std_error;
            std_error[(b, a)] = est.std_error;
        }
    }
    Ok(CovarianceEstimate { second_moment, std_error, n_samples: flats.len() })
}
