//! One-variable polynomial potentials with exact coefficient arithmetic.
//!
//! Both the onsite potential `U1` and the pair potential `U2` of a lattice
//! are confining polynomials of even degree. Keeping them as coefficient
//! vectors makes derivatives of any order exact, which the structural
//! checkers (growth and non-degeneracy) rely on.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// `U(x) = c_0 + c_1 x + … + c_k x^k`, stored as `coeffs[m] = c_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPotential {
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    /// Builds a potential from coefficients `c_0..c_k`. Trailing zero
    /// coefficients are trimmed so `degree` reflects the true leading term.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// The harmonic well `x²/2`.
    pub fn harmonic() -> Self {
        Self::new(vec![0.0, 0.0, 0.5])
    }

    /// The stiff quartic well `x²/2 + x⁴/4`.
    pub fn quartic() -> Self {
        Self::new(vec![0.0, 0.0, 0.5, 0.0, 0.25])
    }

    /// Pure quartic `x⁴/4` (no harmonic part).
    pub fn pure_quartic() -> Self {
        Self::new(vec![0.0, 0.0, 0.0, 0.0, 0.25])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading_coefficient(&self) -> f64 {
        *self.coeffs.last().expect("coeffs nonempty")
    }

    /// Horner evaluation of `U(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation of `U'(x)` without materializing the derivative.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * x + m as f64 * c;
        }
        acc
    }

    /// The derivative as a new polynomial (exact coefficient operation).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![0.0]);
        }
        let coeffs: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &c)| m as f64 * c)
            .collect();
        Self::new(coeffs)
    }

    /// The `m`-th derivative (`m = 0` returns a clone).
    pub fn nth_derivative(&self, m: usize) -> Self {
        let mut d = self.clone();
        for _ in 0..m {
            d = d.derivative();
        }
        d
    }

    /// Whether the polynomial is confining: degree ≥ 2, even, and positive
    /// leading coefficient, so `U(x) → ∞` in both directions.
    pub fn is_confining(&self) -> bool {
        let k = self.degree();
        k >= 2 && k % 2 == 0 && self.leading_coefficient() > 0.0
    }

    /// Confinement check as a hard error, used by the system builders.
    pub fn require_confining(&self, role: &str) -> Result<(), ModelError> {
        if self.is_confining() {
            Ok(())
        } else {
            Err(ModelError::InvalidPotential(format!(
                "{role} potential (degree {}, leading coefficient {}) is not confining; \
                 need even degree >= 2 with positive leading coefficient",
                self.degree(),
                self.leading_coefficient()
            )))
        }
    }

    /// Quadratic coefficient `c_2` (0 when absent). Used by the linear-model
    /// assembly and the effective-potential check of the memory-kernel setup.
    pub fn quadratic_coefficient(&self) -> f64 {
        self.coeffs.get(2).copied().unwrap_or(0.0)
    }

    /// True when `U` is at most quadratic with no linear term, i.e. the force
    /// is exactly linear and the system it enters is a linear SDE.
    pub fn is_centered_quadratic(&self) -> bool {
        self.degree() <= 2 && self.coeffs.get(1).copied().unwrap_or(0.0) == 0.0
    }

    /// Subtracts `a·x²` from the potential, returning the shifted polynomial.
    /// This is the effective-potential correction `U(x) − a x²`.
    pub fn minus_quadratic(&self, a: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < 3 {
            coeffs.resize(3, 0.0);
        }
        coeffs[2] -= a;
        Self::new(coeffs)
    }
}
