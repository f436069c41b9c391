//! Time quadrature for integrals over (0, infinity) after the substitution
//! t = e^u: uniform trapezoid nodes in u, refined by doubling until two
//! consecutive levels agree to the target tolerance.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar, C};
use num_complex::Complex;

#[derive(Clone, Copy, Debug)]
pub struct TimeQuadrature<T> {
    pub u_min: T,
    pub u_max: T,
    pub nodes: usize,
    pub target_tol: T,
    pub max_refinements: usize,
}

impl<T: Scalar> Default for TimeQuadrature<T> {
    fn default() -> Self {
        Self {
            u_min: lit(-40.0),
            u_max: lit(40.0),
            nodes: 2048,
            target_tol: lit(1e-8),
            max_refinements: 3,
        }
    }
}

impl<T: Scalar> TimeQuadrature<T> {
    pub fn new(u_min: T, u_max: T, nodes: usize, target_tol: T) -> Result<Self> {
        if !(u_min < u_max) || nodes < 16 {
            return Err(Error::Domain("quadrature window must be nonempty with >= 16 nodes".into()));
        }
        Ok(Self { u_min, u_max, nodes, target_tol, max_refinements: 3 })
    }

    /// Node count at refinement level `level` (doubling the panel count).
    pub fn nodes_at_level(&self, level: usize) -> usize {
        (self.nodes - 1) * (1 << level) + 1
    }

    /// u spacing at refinement level `level`.
    pub fn step_at_level(&self, level: usize) -> T {
        (self.u_max - self.u_min) / lit((self.nodes_at_level(level) - 1) as f64)
    }

    /// u coordinate of node `i` at `level`.
    pub fn node_at_level(&self, level: usize, i: usize) -> T {
        self.u_min + self.step_at_level(level) * lit(i as f64)
    }
}

/// A quadrature value with its refinement-agreement error estimate.
#[derive(Clone, Copy, Debug)]
pub struct QuadValue<T> {
    pub value: C<T>,
    pub error_estimate: T,
    pub level: usize,
}

/// Trapezoid value of samples on a uniform grid with spacing `du`, in
/// shifted log-magnitude accumulation for wide dynamic ranges.
///
/// Entries with log-magnitude of -inf are skipped.
pub fn trapezoid_logsum<T: Scalar>(
    log_mags: &[T],
    phases: &[C<T>],
    du: T,
) -> C<T> {
    debug_assert_eq!(log_mags.len(), phases.len());
    let mut m_star = lit::<T>(f64::NEG_INFINITY);
    for &lm in log_mags {
        if lm > m_star {
            m_star = lm;
        }
    }
    if m_star == lit::<T>(f64::NEG_INFINITY) {
        return Complex::new(T::zero(), T::zero());
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    let n = log_mags.len();
    for i in 0..n {
        let lm = log_mags[i];
        if lm == lit::<T>(f64::NEG_INFINITY) {
            continue;
        }
        let w = if i == 0 || i == n - 1 { lit::<T>(0.5) } else { T::one() };
        acc = acc + phases[i] * ((lm - m_star).exp() * w);
    }
    acc * (m_star.exp() * du)
}

/// Shift-stabilized plain sum of terms given as (log-magnitude, phase).
pub fn logsum<T: Scalar>(log_mags: &[T], phases: &[C<T>]) -> C<T> {
    debug_assert_eq!(log_mags.len(), phases.len());
    let mut m_star = lit::<T>(f64::NEG_INFINITY);
    for &lm in log_mags {
        if lm > m_star {
            m_star = lm;
        }
    }
    if m_star == lit::<T>(f64::NEG_INFINITY) {
        return Complex::new(T::zero(), T::zero());
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for (lm, ph) in log_mags.iter().zip(phases) {
        if *lm == lit::<T>(f64::NEG_INFINITY) {
            continue;
        }
        acc = acc + *ph * (*lm - m_star).exp();
    }
    acc * m_star.exp()
}

/// Panel weights of the exponentially fitted (Filon-type) trapezoid rule for
/// integral over one panel of (linear interpolant of h) * e^{c tau} d tau:
/// returns (phi0, phi1) with panel value h0 phi0 + h1 phi1, measured
/// relative to the left endpoint (the e^{c u_j} factor is applied outside).
///
/// The closed forms degenerate as c d -> 0; a Taylor series takes over.
pub fn filon_panel_weights<T: Scalar>(c: C<T>, d: T) -> (C<T>, C<T>) {
    let cd = c * d;
    if cd.norm() < lit(1e-4) {
        // phi0 = d/2 + c d^2/6 + c^2 d^3/24, phi1 = d/2 + c d^2/3 + c^3 d^3/8
        let d2 = d * d;
        let d3 = d2 * d;
        let phi0 = Complex::new(d / lit(2.0), T::zero())
            + cd * (d / lit(6.0))
            + cd * cd * (d / lit(24.0));
        let phi1 = Complex::new(d / lit(2.0), T::zero())
            + cd * (d / lit(3.0))
            + cd * cd * (d / lit(8.0));
        let _ = d3;
        return (phi0, phi1);
    }
    let e = cd.exp();
    let one = Complex::new(T::one(), T::zero());
    // phi1 = (E (cd - 1) + 1) / (c^2 d), phi0 = (E - 1)/c - phi1
    let phi1 = (e * (cd - one) + one) / (c * c * d);
    let phi0 = (e - one) / c - phi1;
    (phi0, phi1)
}

/// Richardson extrapolation of a sequence A(r_i) = L + c r_i^p + o(r_i^p)
/// on a decreasing radius ladder: returns successive pairwise extrapolants.
pub fn richardson_ladder<T: Scalar>(radii: &[T], values: &[C<T>], p: T) -> Vec<C<T>> {
    debug_assert_eq!(radii.len(), values.len());
    let mut out = Vec::new();
    for i in 0..radii.len().saturating_sub(1) {
        let r0 = radii[i].powf(p);
        let r1 = radii[i + 1].powf(p);
        let denom = r0 - r1;
        let l = (values[i + 1] * r0 - values[i] * r1) / denom;
        out.push(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_nest() {
        let q = TimeQuadrature::<f64>::default();
        assert_eq!(q.nodes_at_level(0), 2048);
        assert_eq!(q.nodes_at_level(1), 2 * 2047 + 1);
        // Every level-0 node appears at level 1.
        let u0 = q.node_at_level(0, 100);
        let u1 = q.node_at_level(1, 200);
        assert!((u0 - u1).abs() < 1e-12);
    }

    #[test]
    fn logsum_matches_plain_trapezoid() {
        // integral of e^{-u^2} over [-5, 5] ~ sqrt(pi)
        let n = 2001;
        let du = 10.0 / (n as f64 - 1.0);
        let mut lm = Vec::with_capacity(n);
        let mut ph = Vec::with_capacity(n);
        for i in 0..n {
            let u = -5.0 + du * i as f64;
            lm.push(-u * u);
            ph.push(Complex::new(1.0, 0.0));
        }
        let v = trapezoid_logsum(&lm, &ph, du);
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn richardson_removes_leading_order() {
        // A(r) = 3 + 2 r^2
        let radii = [0.1, 0.03, 0.01];
        let vals: Vec<Complex<f64>> = radii
            .iter()
            .map(|r| Complex::new(3.0 + 2.0 * r * r, 0.0))
            .collect();
        let ex = richardson_ladder(&radii, &vals, 2.0);
        for l in ex {
            assert!((l.re - 3.0).abs() < 1e-12);
        }
    }
}
