//! Exact stationary statistics for quadratic-potential systems.
//!
//! When both potentials are (centered) quadratics the SDE is linear,
//! `dx = A x dt + B dω`, and everything of interest is computable in closed
//! form: the stationary covariance solves `AΣ + ΣAᵀ + BBᵀ = 0`, mean heat
//! flows are traces of quadratic forms against Σ, uniqueness of the
//! stationary state reduces to a controllability rank, and flux
//! autocorrelation integrals reduce to a second Lyapunov solve. These
//! values are the ground truth the stochastic simulator is tested against.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::model::{ReservoirKind, SystemConfig, SystemState, TopologyKind};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("potentials must be centered quadratics (degree <= 2, no linear term): {0}")]
    NonQuadratic(String),
    #[error("drift matrix is not Hurwitz (spectral abscissa {spectral_abscissa:.3e})")]
    NotHurwitz { spectral_abscissa: f64 },
    #[error("stability inconclusive: spectral abscissa {spectral_abscissa:.3e} within tolerance of 0")]
    InconclusiveStability { spectral_abscissa: f64 },
    #[error("stationary covariance is not unique; exact flux undefined")]
    NonUniqueCovariance,
    #[error("dense Lyapunov solve failed unexpectedly")]
    SolveFailed,
    #[error("flow index {index} out of range ({count} flows defined)")]
    FlowIndex { index: usize, count: usize },
}

/// Tolerance on eigenvalue real parts for the Hurwitz classification.
pub const HURWITZ_TOL: f64 = 1e-9;

/// Linear SDE `dx = A x dt + B dω` with state ordering `(q, p, r)`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub state_dim: usize,
    pub noise_dim: usize,
}

/// Builds the drift and noise matrices of a quadratic-potential config.
///
/// Rejects potentials of degree > 2 and potentials with a linear term
/// (which would shift the stationary mean away from zero).
pub fn assemble_linear(config: &SystemConfig) -> Result<LinearModel, OracleError> {
    for (name, u) in [("onsite", &config.onsite), ("pair", &config.pair)] {
        if !u.is_centered_quadratic() {
            return Err(OracleError::NonQuadratic(format!(
                "{name} potential has degree {} with coefficients {:?}",
                u.degree(),
                u.coefficients()
            )));
        }
    }
    let n = config.vertex_count();
    let m = config.aux_count();
    let dim = 2 * n + m;
    let mut a = DMatrix::zeros(dim, dim);

    // dq_i = p_i dt
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }

    // dp = -K q dt (+ bath terms), with K the Hessian of V
    let c_on = 2.0 * config.onsite.quadratic_coefficient();
    let c_pair = 2.0 * config.pair.quadratic_coefficient();
    for i in 0..n {
        a[(n + i, i)] -= c_on;
    }
    for &(u, v) in &config.topology.edges {
        a[(n + u, u)] -= c_pair;
        a[(n + u, v)] += c_pair;
        a[(n + v, v)] -= c_pair;
        a[(n + v, u)] += c_pair;
    }

    match config.reservoir_kind() {
        ReservoirKind::MarkovianAux => {
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                let (lambda, gamma) = (res.coupling, res.rate);
                let (pv, rb) = (n + att.vertex, 2 * n + b);
                a[(pv, rb)] -= lambda;
                a[(rb, pv)] += lambda;
                a[(rb, rb)] -= gamma;
            }
        }
        ReservoirKind::Langevin => {
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                a[(n + att.vertex, n + att.vertex)] -= res.coupling;
            }
        }
    }

    // One noise column per attachment with a nonzero amplitude.
    let mut cols: Vec<(usize, f64)> = Vec::new();
    for (b, att) in config.topology.boundary.iter().enumerate() {
        let res = config.attachment_reservoir(b);
        match res.kind {
            ReservoirKind::MarkovianAux => {
                let amp = (2.0 * res.temperature * res.rate).sqrt();
                if amp > 0.0 {
                    cols.push((2 * n + b, amp));
                }
            }
            ReservoirKind::Langevin => {
                let amp = (2.0 * res.coupling * res.temperature).sqrt();
                if amp > 0.0 {
                    cols.push((n + att.vertex, amp));
                }
            }
        }
    }
    let mut b = DMatrix::zeros(dim, cols.len());
    for (j, (row, amp)) in cols.iter().enumerate() {
        b[(*row, j)] = *amp;
    }

    Ok(LinearModel { a, b, state_dim: dim, noise_dim: cols.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Stability {
    Hurwitz { spectral_abscissa: f64 },
    NotHurwitz { spectral_abscissa: f64 },
    /// Eigenvalues within `HURWITZ_TOL` of the imaginary axis; reported
    /// rather than silently classified.
    Inconclusive { spectral_abscissa: f64 },
}

pub fn classify_stability(a: &DMatrix<f64>) -> Stability {
    let eigs = a.clone().complex_eigenvalues();
    let abscissa = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa < -HURWITZ_TOL {
        Stability::Hurwitz { spectral_abscissa: abscissa }
    } else if abscissa > HURWITZ_TOL {
        Stability::NotHurwitz { spectral_abscissa: abscissa }
    } else {
        Stability::Inconclusive { spectral_abscissa: abscissa }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryCovariance {
    pub sigma: DMatrix<f64>,
    pub unique: bool,
    /// `‖AΣ + ΣAᵀ + BBᵀ‖_max`.
    pub residual: f64,
    pub stability: Stability,
}

/// Solves `AΣ + ΣAᵀ + BBᵀ = 0` by a dense Kronecker linear solve.
///
/// Requires a Hurwitz drift; otherwise the stability classification is
/// returned as an error (non-uniqueness or divergence).
pub fn stationary_covariance(model: &LinearModel) -> Result<StationaryCovariance, OracleError> {
    let stability = classify_stability(&model.a);
    match stability {
        Stability::Hurwitz { .. } => {}
        Stability::NotHurwitz { spectral_abscissa } => {
            return Err(OracleError::NotHurwitz { spectral_abscissa })
        }
        Stability::Inconclusive { spectral_abscissa } => {
            return Err(OracleError::InconclusiveStability { spectral_abscissa })
        }
    }
    let q = &model.b * model.b.transpose();
    let sigma = solve_continuous_lyapunov(&model.a, &q)?;
    let residual = lyapunov_residual(&model.a, &sigma, &q);
    Ok(StationaryCovariance { sigma, unique: true, residual, stability })
}

/// Solves `A X + X Aᵀ + Q = 0` for symmetric `Q` (desk-scale dense solve).
pub fn solve_continuous_lyapunov(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<DMatrix<f64>, OracleError> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(AX + XA^T) = (I ⊗ A + A ⊗ I) vec(X), column-major vec
    let kron = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(q.as_slice());
    let solved = kron.lu().solve(&(-rhs)).ok_or(OracleError::SolveFailed)?;
    let x = DMatrix::from_column_slice(n, n, solved.as_slice());
    // enforce exact symmetry
    Ok(0.5 * (&x + x.transpose()))
}

pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let res = a * x + x * a.transpose() + q;
    res.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllabilityReport {
    pub rank: usize,
    pub state_dim: usize,
    pub full: bool,
    /// `state_dim − rank`.
    pub deficiency: usize,
    /// Uncontrollable directions of a mechanical linear system come in
    /// conjugate (position, momentum) pairs, each carrying one conserved
    /// oscillator mode and hence one free parameter in the Gaussian
    /// invariant family. `deficiency / 2` counts those pairs.
    pub conserved_mode_pairs: usize,
    pub singular_values: Vec<f64>,
}

/// Rank of the Kalman matrix `[B, AB, …, A^{n−1}B]` via singular values
/// with threshold `n·ε·σ_max`.
pub fn controllability_rank(model: &LinearModel) -> ControllabilityReport {
    let n = model.state_dim;
    if model.noise_dim == 0 {
        return ControllabilityReport {
            rank: 0,
            state_dim: n,
            full: n == 0,
            deficiency: n,
            conserved_mode_pairs: n / 2,
            singular_values: Vec::new(),
        };
    }
    let mut blocks = Vec::with_capacity(n);
    let mut cur = model.b.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = &model.a * cur;
    }
    let mut kalman = DMatrix::zeros(n, n * model.noise_dim);
    for (k, blk) in blocks.iter().enumerate() {
        kalman.view_mut((0, k * model.noise_dim), (n, model.noise_dim)).copy_from(blk);
    }
    let svd = kalman.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = n as f64 * f64::EPSILON * smax;
    let rank = sv.iter().filter(|&&s| s > thresh).count();
    ControllabilityReport {
        rank,
        state_dim: n,
        full: rank == n,
        deficiency: n - rank,
        conserved_mode_pairs: (n - rank) / 2,
        singular_values: sv,
    }
}

/// A quadratic observable `x ↦ xᵀ M x + offset` on the flat state `(q,p,r)`.
#[derive(Debug, Clone)]
pub struct QuadraticObservable {
    pub m: DMatrix<f64>,
    pub offset: f64,
}

impl QuadraticObservable {
    pub fn eval_flat(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        (v.transpose() * &self.m * &v)[(0, 0)] + self.offset
    }

    pub fn eval_state(&self, state: &SystemState) -> f64 {
        self.eval_flat(&state.to_flat())
    }

    pub fn mean(&self, sigma: &DMatrix<f64>) -> f64 {
        (&self.m * sigma).trace() + self.offset
    }
}

fn bilinear(dim: usize, terms: &[(f64, usize, usize)], offset: f64) -> QuadraticObservable {
    let mut m = DMatrix::zeros(dim, dim);
    for &(c, i, j) in terms {
        m[(i, j)] += 0.5 * c;
        m[(j, i)] += 0.5 * c;
    }
    QuadraticObservable { m, offset }
}

/// The heat-flow observables of a quadratic config as quadratic forms, in
/// the same order as `observables::heat_flows`. Chain flows are the bath
/// exchange terms plus the interior bond flows; Langevin configs get the
/// Itô-consistent per-face/per-bath flows.
pub fn flux_observables(config: &SystemConfig) -> Result<Vec<QuadraticObservable>, OracleError> {
    for (name, u) in [("onsite", &config.onsite), ("pair", &config.pair)] {
        if !u.is_centered_quadratic() {
            return Err(OracleError::NonQuadratic(format!("{name} potential")));
        }
    }
    let n = config.vertex_count();
    let dim = config.state_dim();
    let d2 = 2.0 * config.pair.quadratic_coefficient(); // U2'(x) = d2 * x
    let q_of = |i: usize| i;
    let p_of = |i: usize| n + i;
    let r_of = |b: usize| 2 * n + b;

    let mut flows = Vec::new();
    match (config.reservoir_kind(), &config.topology.kind) {
        (ReservoirKind::MarkovianAux, TopologyKind::Chain) => {
            let lambda0 = config.attachment_reservoir(0).coupling;
            let lambda1 = config.attachment_reservoir(1).coupling;
            // Phi_0 = -lambda r_1 p_1
            flows.push(bilinear(dim, &[(-lambda0, r_of(0), p_of(0))], 0.0));
            // Phi_j = (p_{j-1} + p_j)/2 * U2'(q_{j-1} - q_j), 0-based bond (j-1, j)
            for j in 1..n {
                let (a, b) = (j - 1, j);
                let terms = [
                    (0.5 * d2, p_of(a), q_of(a)),
                    (-0.5 * d2, p_of(a), q_of(b)),
                    (0.5 * d2, p_of(b), q_of(a)),
                    (-0.5 * d2, p_of(b), q_of(b)),
                ];
                flows.push(bilinear(dim, &terms, 0.0));
            }
            // Phi_n = lambda r_n p_n
            flows.push(bilinear(dim, &[(lambda1, r_of(1), p_of(n - 1))], 0.0));
        }
        (ReservoirKind::Langevin, TopologyKind::Hypercube { n_side, dim: hdim }) => {
            let side = 2 * n_side + 1;
            // left face injection: sum_i lambda (T_L - p_i^2)
            let mut left_terms = Vec::new();
            let mut left_offset = 0.0;
            let mut right_terms = Vec::new();
            let mut right_offset = 0.0;
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                if att.reservoir == 0 {
                    left_terms.push((-res.coupling, p_of(att.vertex), p_of(att.vertex)));
                    left_offset += res.coupling * res.temperature;
                } else {
                    right_terms.push((res.coupling, p_of(att.vertex), p_of(att.vertex)));
                    right_offset -= res.coupling * res.temperature;
                }
            }
            flows.push(bilinear(dim, &left_terms, left_offset));
            // interplane flows for k = -N .. N-1
            for k in 0..(side - 1) {
                let mut terms = Vec::new();
                for v in 0..n {
                    let coords = config.topology.hypercube_coordinates(v).unwrap();
                    if coords[0] == k as i64 - *n_side as i64 {
                        // neighbor along axis 0; stride of axis 0 is side^(hdim-1)
                        let stride = side.pow(*hdim as u32 - 1);
                        let w = v + stride;
                        terms.extend_from_slice(&[
                            (0.5 * d2, p_of(v), q_of(v)),
                            (-0.5 * d2, p_of(v), q_of(w)),
                            (0.5 * d2, p_of(w), q_of(v)),
                            (-0.5 * d2, p_of(w), q_of(w)),
                        ]);
                    }
                }
                flows.push(bilinear(dim, &terms, 0.0));
            }
            flows.push(bilinear(dim, &right_terms, right_offset));
        }
        _ => {
            // general graphs: one flow into each reservoir
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                flows.push(bilinear(
                    dim,
                    &[(res.coupling, p_of(att.vertex), p_of(att.vertex))],
                    -res.coupling * res.temperature,
                ));
            }
        }
    }
    Ok(flows)
}

/// Exact stationary mean of flow `j`: `E[Φ_j] = tr(M_j Σ) + offset`.
pub fn exact_flux(
    model: &LinearModel,
    cov: &StationaryCovariance,
    config: &SystemConfig,
    j: usize,
) -> Result<f64, OracleError> {
    if !cov.unique {
        return Err(OracleError::NonUniqueCovariance);
    }
    debug_assert_eq!(model.state_dim, cov.sigma.nrows());
    let flows = flux_observables(config)?;
    let obs = flows
        .get(j)
        .ok_or(OracleError::FlowIndex { index: j, count: flows.len() })?;
    Ok(obs.mean(&cov.sigma))
}

/// `∫₀^∞ Cov(Φ(x_t), Φ(x_0)) dt` in the stationary state, for a quadratic
/// observable `Φ = xᵀMx + c` of a Hurwitz linear model.
///
/// With `C_t = e^{At}Σ` the integrand is `2 tr(M C_t M C_tᵀ)`; integrating
/// the propagator against `M` is a second Lyapunov solve
/// `AᵀY + YA + M = 0`, leaving `2 tr(Y Σ M Σ)`.
pub fn flux_autocovariance_integral(
    model: &LinearModel,
    cov: &StationaryCovariance,
    obs: &QuadraticObservable,
) -> Result<f64, OracleError> {
    if !cov.unique {
        return Err(OracleError::NonUniqueCovariance);
    }
    let at = model.a.transpose();
    let y = solve_continuous_lyapunov(&at, &obs.m)?;
    Ok(2.0 * (&y * &cov.sigma * &obs.m * &cov.sigma).trace())
}

/// Stationary autocovariance `Cov(x_i(t), x_j(0)) = (e^{At}Σ)_{ij}` sampled
/// at the given lags; a reference curve for correlation-decay estimators.
pub fn autocovariance_curve(
    model: &LinearModel,
    cov: &StationaryCovariance,
    i: usize,
    j: usize,
    lags: &[f64],
) -> Result<Vec<f64>, OracleError> {
    if !cov.unique {
        return Err(OracleError::NonUniqueCovariance);
    }
    Ok(lags
        .iter()
        .map(|&t| ((model.a.clone() * t).exp() * &cov.sigma)[(i, j)])
        .collect())
}

/// Smallest `|Re(eigenvalue)|` of the drift: the slowest relaxation rate.
pub fn slowest_decay_rate(model: &LinearModel) -> f64 {
    let eigs = model.a.clone().complex_eigenvalues();
    eigs.iter().map(|e| e.re.abs()).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_chain, build_graph, build_hypercube, diamond_fixture, PolynomialPotential,
        ReservoirSpec,
    };
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

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
    fn single_langevin_oscillator_matrices() {
        let mut baths = BTreeMap::new();
        baths.insert(0, ReservoirSpec::langevin(1.0, 1.0));
        let config = build_graph(
            1,
            &[],
            &baths,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
        )
        .unwrap();
        let model = assemble_linear(&config).unwrap();
        // ordering (q, p): dq = p, dp = -q - p + sqrt(2) dw
        assert_eq!(model.a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]));
        assert_eq!(model.b.nrows(), 2);
        assert_eq!(model.b.ncols(), 1);
        assert_relative_eq!(model.b[(1, 0)], 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn single_site_two_bath_chain_matrices() {
        let config = harmonic_chain(1, 1.0, 2.0);
        let model = assemble_linear(&config).unwrap();
        assert_eq!(model.state_dim, 4);
        // (q, p, r1, r2): dq=p; dp=-q-r1-r2; dr_b = p - r_b
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, -1.0, -1.0, //
                0.0, 1.0, -1.0, 0.0, //
                0.0, 1.0, 0.0, -1.0,
            ],
        );
        assert_eq!(model.a, expected);
    }

    #[test]
    fn non_quadratic_rejected() {
        let config = build_chain(
            2,
            PolynomialPotential::quartic(),
            PolynomialPotential::harmonic(),
            1.0,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(assemble_linear(&config), Err(OracleError::NonQuadratic(_))));
    }

    #[test]
    fn scalar_ou_covariance() {
        // dr = -gamma r dt + sqrt(2 T gamma) dw  ->  Sigma = T
        let gamma = 0.7;
        let t = 1.3;
        let model = LinearModel {
            a: DMatrix::from_row_slice(1, 1, &[-gamma]),
            b: DMatrix::from_row_slice(1, 1, &[(2.0 * t * gamma).sqrt()]),
            state_dim: 1,
            noise_dim: 1,
        };
        let cov = stationary_covariance(&model).unwrap();
        assert_relative_eq!(cov.sigma[(0, 0)], t, epsilon = 1e-12);
        assert!(cov.residual < 1e-12);
    }

    #[test]
    fn equilibrium_chain_covariance_is_gibbs() {
        let t = 1.5;
        let config = harmonic_chain(3, t, t);
        let model = assemble_linear(&config).unwrap();
        let cov = stationary_covariance(&model).unwrap();
        let n = 3;
        // E[p_i p_j] = T delta_ij, E[r_b^2] = T, E[q q^T] = T K^{-1}, cross terms 0
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 1.0;
        }
        for e in 0..n - 1 {
            k[(e, e)] += 1.0;
            k[(e + 1, e + 1)] += 1.0;
            k[(e, e + 1)] -= 1.0;
            k[(e + 1, e)] -= 1.0;
        }
        let kinv = k.try_inverse().unwrap();
        for i in 0..model.state_dim {
            for j in 0..model.state_dim {
                let expected = if i < n && j < n {
                    t * kinv[(i, j)]
                } else if i == j {
                    t
                } else {
                    0.0
                };
                assert!(
                    (cov.sigma[(i, j)] - expected).abs() < 1e-10,
                    "Sigma[{i},{j}] = {} expected {}",
                    cov.sigma[(i, j)],
                    expected
                );
            }
        }
    }

    #[test]
    fn covariance_residual_and_psd_on_test_fleet() {
        for config in [
            harmonic_chain(1, 2.0, 1.0),
            harmonic_chain(4, 2.0, 1.0),
            build_hypercube(
                1,
                2,
                PolynomialPotential::harmonic(),
                PolynomialPotential::harmonic(),
                2.0,
                1.0,
                0.8,
            )
            .unwrap(),
        ] {
            let model = assemble_linear(&config).unwrap();
            let cov = stationary_covariance(&model).unwrap();
            let q = &model.b * model.b.transpose();
            let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(cov.residual <= 1e-10 * scale, "residual {} scale {}", cov.residual, scale);
            let eigs = cov.sigma.clone().symmetric_eigenvalues();
            let min_eig = eigs.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-12 * cov.sigma.trace());
        }
    }

    #[test]
    fn exact_flux_zero_at_equilibrium_and_constant_across_bonds() {
        let config = harmonic_chain(2, 1.0, 1.0);
        let model = assemble_linear(&config).unwrap();
        let cov = stationary_covariance(&model).unwrap();
        for j in 0..3 {
            assert!(exact_flux(&model, &cov, &config, j).unwrap().abs() < 1e-12);
        }

        let config = harmonic_chain(2, 2.0, 1.0);
        let model = assemble_linear(&config).unwrap();
        let cov = stationary_covariance(&model).unwrap();
        let fluxes: Vec<f64> = (0..3)
            .map(|j| exact_flux(&model, &cov, &config, j).unwrap())
            .collect();
        assert!(fluxes[0] > 0.0, "hot-left chain must carry positive flux, got {fluxes:?}");
        for j in 1..3 {
            assert!((fluxes[j] - fluxes[0]).abs() < 1e-10, "flux not constant: {fluxes:?}");
        }
    }

    #[test]
    fn exact_flux_antisymmetric_under_temperature_swap() {
        let fwd = harmonic_chain(3, 2.0, 1.0);
        let bwd = harmonic_chain(3, 1.0, 2.0);
        let (mf, mb) = (assemble_linear(&fwd).unwrap(), assemble_linear(&bwd).unwrap());
        let (cf, cb) = (
            stationary_covariance(&mf).unwrap(),
            stationary_covariance(&mb).unwrap(),
        );
        let f = exact_flux(&mf, &cf, &fwd, 1).unwrap();
        let b = exact_flux(&mb, &cb, &bwd, 1).unwrap();
        assert_relative_eq!(f, -b, epsilon = 1e-10);
    }

    #[test]
    fn controllability_chain_full_diamond_deficient() {
        let chain = harmonic_chain(4, 2.0, 1.0);
        let model = assemble_linear(&chain).unwrap();
        let report = controllability_rank(&model);
        assert!(report.full, "chain rank {}/{}", report.rank, report.state_dim);

        let diamond = diamond_fixture(2.0, 1.0, 1.0);
        let model = assemble_linear(&diamond).unwrap();
        let report = controllability_rank(&model);
        assert!(!report.full);
        // the antisymmetric mode (q2 - q4, p2 - p4) is invisible to both baths
        assert_eq!(report.deficiency, 2);
        assert_eq!(report.conserved_mode_pairs, 1);
        assert!(matches!(classify_stability(&model.a), Stability::Inconclusive { .. }));
    }

    #[test]
    fn zero_noise_rank_zero() {
        let config = build_chain(
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            0.0,
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let model = assemble_linear(&config).unwrap();
        assert_eq!(model.noise_dim, 0);
        let report = controllability_rank(&model);
        assert_eq!(report.rank, 0);
    }

    #[test]
    fn full_rank_iff_positive_definite_covariance() {
        for (config, expect_full) in [
            (harmonic_chain(3, 2.0, 1.0), true),
            (harmonic_chain(1, 1.0, 1.0), true),
        ] {
            let model = assemble_linear(&config).unwrap();
            let report = controllability_rank(&model);
            assert_eq!(report.full, expect_full);
            let cov = stationary_covariance(&model).unwrap();
            let min_eig = cov
                .sigma
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert_eq!(report.full, min_eig > 1e-12);
        }
    }
}
