//! Fractional exponent collections {(s_k, b_k)} and the pairwise separation
//! hypothesis that drives pole separation: differences of the s_k must avoid
//! the integers in even dimension and the half-integers in odd dimension.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar, C};

/// Tolerance for the "is an integer" tests on exponents.
const INTEGER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct ExponentTerm<T> {
    pub s: T,
    pub b: C<T>,
    pub floor: u32,
    pub alpha: T,
}

#[derive(Clone, Debug)]
pub struct ExponentConfig<T> {
    terms: Vec<ExponentTerm<T>>,
}

impl<T: Scalar> ExponentConfig<T> {
    /// Builds a configuration from (s_k, b_k) pairs. Terms are sorted by
    /// increasing s; each s must be positive, non-integer, and each b nonzero.
    pub fn new(pairs: &[(T, C<T>)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidExponents("at least one term required".into()));
        }
        let mut terms = Vec::with_capacity(pairs.len());
        for &(s, b) in pairs {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::InvalidExponents(format!("exponent must be positive, got {s}")));
            }
            let fl = s.floor();
            let alpha = s - fl;
            if alpha < lit(INTEGER_TOL) || alpha > T::one() - lit(INTEGER_TOL) {
                return Err(Error::InvalidExponents(format!(
                    "exponent {s} is (numerically) a natural number; fractional part must lie in (0,1)"
                )));
            }
            if b.norm() == T::zero() {
                return Err(Error::InvalidExponents("coefficients b_k must be nonzero".into()));
            }
            terms.push(ExponentTerm { s, b, floor: fl.to_f64().unwrap() as u32, alpha });
        }
        terms.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
        for w in terms.windows(2) {
            if !(w[0].s < w[1].s) {
                return Err(Error::InvalidExponents("exponents must be strictly increasing".into()));
            }
        }
        Ok(Self { terms })
    }

    pub fn real_coeffs(pairs: &[(T, T)]) -> Result<Self> {
        let cx: Vec<(T, C<T>)> = pairs
            .iter()
            .map(|&(s, b)| (s, Complex::new(b, T::zero())))
            .collect();
        Self::new(&cx)
    }

    pub fn terms(&self) -> &[ExponentTerm<T>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn alphas(&self) -> Vec<T> {
        self.terms.iter().map(|t| t.alpha).collect()
    }
}

/// One violated pair in a hypothesis report.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<T> {
    pub j: usize,
    pub k: usize,
    pub difference: T,
    pub detail: String,
}

/// Result of checking the exponent separation hypothesis in dimension n.
#[derive(Clone, Debug)]
pub struct HypothesisReport<T> {
    pub dim: usize,
    pub violations: Vec<Violation<T>>,
}

impl<T: Scalar> HypothesisReport<T> {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the separation hypothesis: for even n the pairwise differences
/// s_k - s_j must not be integers; for odd n they must avoid half-integers
/// as well (integer multiples of 1/2).
pub fn validate_exponents<T: Scalar>(cfg: &ExponentConfig<T>, dim: usize) -> HypothesisReport<T> {
    let mut violations = Vec::new();
    let terms = cfg.terms();
    let grid_unit: T = if dim % 2 == 0 { T::one() } else { lit(0.5) };
    for j in 0..terms.len() {
        for k in (j + 1)..terms.len() {
            let d = terms[k].s - terms[j].s;
            let ratio = d / grid_unit;
            let nearest = ratio.round();
            if (ratio - nearest).abs() < lit(INTEGER_TOL) {
                let detail = if dim % 2 == 0 {
                    format!("s_{} - s_{} = {} is an integer (even dimension)", k + 1, j + 1, d)
                } else {
                    format!(
                        "s_{} - s_{} = {} is a half-integer multiple (odd dimension)",
                        k + 1,
                        j + 1,
                        d
                    )
                };
                violations.push(Violation { j, k, difference: d, detail });
            }
        }
    }
    HypothesisReport { dim, violations }
}

/// Validates and errors unless `allow_override` is set (used to demonstrate
/// the necessity of the separation hypothesis).
pub fn require_hypothesis<T: Scalar>(
    cfg: &ExponentConfig<T>,
    dim: usize,
    allow_override: bool,
) -> Result<HypothesisReport<T>> {
    let report = validate_exponents(cfg, dim);
    if !report.holds() && !allow_override {
        return Err(Error::HypothesisViolation {
            pairs: report.violations.iter().map(|v| (v.j, v.k)).collect(),
            detail: report
                .violations
                .iter()
                .map(|v| v.detail.clone())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(ss: &[f64]) -> ExponentConfig<f64> {
        let pairs: Vec<(f64, f64)> = ss.iter().map(|&s| (s, 1.0)).collect();
        ExponentConfig::real_coeffs(&pairs).unwrap()
    }

    #[test]
    fn integer_difference_violates_even_dim() {
        let report = validate_exponents(&cfg(&[0.3, 1.3]), 2);
        assert_eq!(report.violations.len(), 1);
        assert!((report.violations[0].difference - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_integer_difference_violates_odd_dim() {
        let report = validate_exponents(&cfg(&[0.2, 0.7]), 3);
        assert_eq!(report.violations.len(), 1);
        // But in even dimension the 0.5 gap is fine.
        assert!(validate_exponents(&cfg(&[0.2, 0.7]), 2).holds());
    }

    #[test]
    fn generic_pair_passes() {
        assert!(validate_exponents(&cfg(&[0.3, 0.75]), 2).holds());
    }

    #[test]
    fn natural_exponent_is_rejected() {
        assert!(ExponentConfig::<f64>::real_coeffs(&[(2.0, 1.0)]).is_err());
        assert!(ExponentConfig::<f64>::real_coeffs(&[(1.0 + 1e-12, 1.0)]).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let a = cfg(&[0.3, 0.75, 1.9]);
        let pairs: Vec<(f64, f64)> = vec![(1.9, 1.0), (0.3, 1.0), (0.75, 1.0)];
        let b = ExponentConfig::real_coeffs(&pairs).unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert_eq!(x.s, y.s);
        }
        let ra = validate_exponents(&a, 3);
        let rb = validate_exponents(&b, 3);
        assert_eq!(ra.violations.len(), rb.violations.len());
    }

    #[test]
    fn zero_coefficient_rejected() {
        assert!(ExponentConfig::<f64>::real_coeffs(&[(0.5, 0.0)]).is_err());
    }
}
