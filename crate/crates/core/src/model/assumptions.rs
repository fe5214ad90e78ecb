//! Structural checkers for the two standing assumptions on the potentials.
//!
//! For scalar per-site coordinates both checks reduce to statements about
//! one-variable polynomials, so they can be decided exactly:
//!
//! * growth — `U^(i)` behaves like `a_i |x|^{k_i}` at infinity with
//!   `k_2 ≥ k_1 ≥ 2`; for a polynomial this holds exactly when the degree is
//!   even with positive leading coefficient. The second-derivative bound
//!   `‖∂²U^(i)‖ ≤ (C + D·V)^{1−2/k_i}` is automatic for such polynomials.
//! * non-degeneracy — at every `x` some derivative of order ≥ 2 of the pair
//!   potential is nonzero. The `k_2`-th derivative is a nonzero constant, so
//!   the smallest uniform order is `m_0 = k_2 − 1`; degree ≤ 1 fails.

use serde::Serialize;

use super::potential::PolynomialPotential;

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub k1: usize,
    pub k2: usize,
    /// `k_2 ≥ k_1 ≥ 2`: the interaction is at least as stiff as the pinning.
    pub ordering_ok: bool,
    /// Both potentials confining (even degree, positive leading coefficient).
    pub confining_ok: bool,
    /// Hessian growth bound; satisfied by every confining polynomial.
    pub hessian_bound_ok: bool,
    /// Leading constants a^(1), a^(2).
    pub leading: (f64, f64),
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        self.ordering_ok && self.confining_ok
    }
}

/// Growth-at-infinity check for the potential pair.
pub fn check_h1(onsite: &PolynomialPotential, pair: &PolynomialPotential) -> GrowthReport {
    let k1 = onsite.degree();
    let k2 = pair.degree();
    let confining_ok = onsite.is_confining() && pair.is_confining();
    GrowthReport {
        k1,
        k2,
        ordering_ok: k2 >= k1 && k1 >= 2,
        confining_ok,
        hessian_bound_ok: confining_ok,
        leading: (onsite.leading_coefficient(), pair.leading_coefficient()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub holds: bool,
    /// Smallest uniform order m0 such that for every x some derivative of
    /// order 2..=m0+1 of the pair potential is nonzero; `None` when the
    /// check fails.
    pub m0_max: Option<usize>,
    /// For each probe point: the smallest m with `U2^{(m+1)}(x) ≠ 0`.
    pub probe_orders: Vec<(f64, Option<usize>)>,
}

/// Non-degeneracy of the pair potential in the scalar-coordinate sense.
///
/// Optionally evaluates the pointwise order at probe points; each probe
/// order is bounded by `m0_max` when the check holds.
pub fn check_h2(pair: &PolynomialPotential, probes: &[f64]) -> NondegeneracyReport {
    let k2 = pair.degree();
    let holds = k2 >= 2;
    let m0_max = if holds { Some(k2 - 1) } else { None };

    let probe_orders = probes
        .iter()
        .map(|&x| {
            let mut order = None;
            if holds {
                for m in 1..=(k2 - 1) {
                    if pair.nth_derivative(m + 1).eval(x) != 0.0 {
                        order = Some(m);
                        break;
                    }
                }
            }
            (x, order)
        })
        .collect();

    NondegeneracyReport { holds, m0_max, probe_orders }
}
