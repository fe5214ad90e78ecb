//! Numerical probe of n-nondegeneracy.
//!
//! A function `f` is n-nondegenerate when the set of `(q_1..q_n)` admitting
//! some `(q'_1..q'_n)` with `det(f(q'_i − q_j)) ≠ 0` is dense. The probe
//! samples random `q`, searches random witnesses `q'`, and reports the
//! fraction of `q` samples with a witness — a density proxy. Polynomials of
//! degree `r ≥ n−1` should score ≈ 1; a constant (harmonic pair potential)
//! gives a rank-one matrix and scores 0 for `n ≥ 2`. The physical argument
//! applies it to the second derivative of the pair potential.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::NormalSource;
use crate::model::PolynomialPotential;

use super::AnalysisError;

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyProbeReport {
    pub n: usize,
    pub witness_fraction: f64,
    pub q_samples: usize,
    pub tries_per_sample: usize,
    /// Scale-free determinant threshold (relative to the Hadamard bound).
    pub threshold: f64,
}

pub fn nondegeneracy_probe(
    f: &PolynomialPotential,
    n: usize,
    q_samples: usize,
    tries_per_sample: usize,
    seed: u64,
) -> Result<NondegeneracyProbeReport, AnalysisError> {
    if n == 0 || q_samples == 0 || tries_per_sample == 0 {
        return Err(AnalysisError::Invalid("need n, q_samples, tries >= 1".into()));
    }
    let threshold = 1e-10;
    let spread = 2.0;
    let mut rng = NormalSource::from_seed(seed);
    let mut found = 0usize;
    for _ in 0..q_samples {
        let q: Vec<f64> = (0..n).map(|_| spread * rng.next_normal()).collect();
        let mut witness = false;
        for _ in 0..tries_per_sample {
            let qp: Vec<f64> = (0..n).map(|_| spread * rng.next_normal()).collect();
            let m = DMatrix::from_fn(n, n, |i, j| f.eval(qp[i] - q[j]));
            // Hadamard bound as the scale reference
            let mut scale = 1.0f64;
            for i in 0..n {
                let row_norm: f64 = (0..n).map(|j| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt();
                scale *= row_norm;
            }
            if scale == 0.0 {
                continue;
            }
            let det = m.determinant();
            if det.abs() > threshold * scale {
                witness = true;
                break;
            }
        }
        if witness {
            found += 1;
        }
    }
    Ok(NondegeneracyProbeReport {
        n,
        witness_fraction: found as f64 / q_samples as f64,
        q_samples,
        tries_per_sample,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_n_minus_one_polynomials_are_nondegenerate() {
        // f of degree 2, n = 3: r >= n - 1
        let f = PolynomialPotential::new(vec![0.5, -1.0, 2.0]);
        let report = nondegeneracy_probe(&f, 3, 40, 8, 1).unwrap();
        assert!(report.witness_fraction > 0.95, "{report:?}");
    }

    #[test]
    fn constant_f_never_finds_witnesses_beyond_n_one() {
        // harmonic pair potential: f = U2'' is constant, rank-one matrix
        let f = PolynomialPotential::new(vec![1.0]);
        let report = nondegeneracy_probe(&f, 2, 40, 8, 2).unwrap();
        assert_eq!(report.witness_fraction, 0.0);
    }

    #[test]
    fn scalar_case_always_witnessed_for_nonzero_f() {
        let f = PolynomialPotential::new(vec![0.0, 1.0]); // f(x) = x
        let report = nondegeneracy_probe(&f, 1, 40, 8, 3).unwrap();
        assert!(report.witness_fraction > 0.95);
    }
}
