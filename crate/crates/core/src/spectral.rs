//! Periodic spectral calculus on the truncated box: N-d FFT, Fourier
//! multipliers, fractional Laplacians, heat propagation and mollification.
//!
//! Convention: the discrete transform pair is the unnormalized forward DFT
//! with the 1/M^n factor on the inverse, so a multiplier application is
//! exact on band-limited grid functions.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{DecayCertificate, Field};
use crate::grid::{GridSpec, Point};
use crate::scalar::{lit, lit_usize, Scalar, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// FFT engine bound to one grid. Plans are cached per instance.
pub struct FftEngine<T: Scalar> {
    grid: GridSpec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> FftEngine<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points_per_axis());
        let inverse = planner.plan_fft_inverse(grid.points_per_axis());
        Self { grid, forward, inverse }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// In-place N-d transform. The inverse includes the 1/M^n factor.
    pub fn transform(&self, data: &mut [C<T>], dir: Direction) {
        assert_eq!(data.len(), self.grid.len());
        let m = self.grid.points_per_axis();
        let n = self.grid.dim();
        let plan = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let mut line = vec![Complex::new(T::zero(), T::zero()); m];

        for axis in 0..n {
            let stride = m.pow((n - 1 - axis) as u32);
            let lines = self.grid.len() / m;
            for l in 0..lines {
                // Base index of the l-th line along `axis`.
                let block = stride * m;
                let base = (l / stride) * block + (l % stride);
                for k in 0..m {
                    line[k] = data[base + k * stride];
                }
                plan.process(&mut line);
                for k in 0..m {
                    data[base + k * stride] = line[k];
                }
            }
        }

        if dir == Direction::Inverse {
            let scale = T::one() / lit_usize::<T>(self.grid.len());
            for v in data.iter_mut() {
                *v = *v * scale;
            }
        }
    }

    pub fn forward(&self, field: &Field<T>) -> Vec<C<T>> {
        let mut data = field.values().to_vec();
        self.transform(&mut data, Direction::Forward);
        data
    }
}

/// Applies `F^{-1} { sigma(xi) F u }` for a symbol given on frequency vectors.
///
/// Errors with the offending frequency if the symbol evaluates to a
/// non-finite value anywhere on the discrete frequency set.
pub fn fourier_multiplier<T: Scalar>(
    u: &Field<T>,
    symbol: impl Fn(&Point<T>) -> C<T>,
) -> Result<Field<T>> {
    let engine = FftEngine::new(*u.grid());
    fourier_multiplier_with(&engine, u, symbol)
}

pub fn fourier_multiplier_with<T: Scalar>(
    engine: &FftEngine<T>,
    u: &Field<T>,
    symbol: impl Fn(&Point<T>) -> C<T>,
) -> Result<Field<T>> {
    let grid = *u.grid();
    let mut data = u.values().to_vec();
    engine.transform(&mut data, Direction::Forward);
    for (i, v) in data.iter_mut().enumerate() {
        let xi = grid.freq_vec(i);
        let s = symbol(&xi);
        if !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::SingularSymbol(
                xi[0].to_f64().unwrap_or(f64::NAN),
                xi[1].to_f64().unwrap_or(f64::NAN),
                xi[2].to_f64().unwrap_or(f64::NAN),
            ));
        }
        *v = *v * s;
    }
    engine.transform(&mut data, Direction::Inverse);
    // Generic multipliers do not preserve the decay class.
    Field::new(grid, data, None)
}

/// Fractional Laplacian via the multiplier |xi|^{2s}; s = 0 is the identity
/// and the zero frequency is continued by 0 for s > 0.
pub fn frac_lap_fourier<T: Scalar>(u: &Field<T>, s: T) -> Result<Field<T>> {
    if s < T::zero() {
        return Err(Error::Domain(format!("fractional order must be >= 0, got {s}")));
    }
    if s == T::zero() {
        return Ok(u.clone());
    }
    fourier_multiplier(u, |xi| {
        let q = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if q == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            Complex::new(q.powf(s), T::zero())
        }
    })
}

/// Iterated Laplacian Delta^m (multiplier (-|xi|^2)^m), exact on the grid.
pub fn laplacian_power<T: Scalar>(u: &Field<T>, m: u32) -> Result<Field<T>> {
    if m == 0 {
        return Ok(u.clone());
    }
    fourier_multiplier(u, |xi| {
        let q = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let mut w = T::one();
        for _ in 0..m {
            w = w * (-q);
        }
        Complex::new(w, T::zero())
    })
}

/// Heat propagation e^{t Delta} via the multiplier e^{-t |xi|^2}.
pub fn heat_evolve<T: Scalar>(u: &Field<T>, t: T) -> Result<Field<T>> {
    if t < T::zero() {
        return Err(Error::Domain(format!("heat time must be >= 0, got {t}")));
    }
    if t == T::zero() {
        return Ok(u.clone());
    }
    let mut out = fourier_multiplier(u, |xi| {
        let q = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        Complex::new((-t * q).exp(), T::zero())
    })?;
    // Gaussian smoothing keeps super-exponential decay; reuse the input
    // certificate conservatively (mass is conserved, peak does not grow).
    out.set_decay(u.decay().map(|c| DecayCertificate {
        c: c.c,
        rho: c.rho / (T::one() + lit::<T>(4.0) * t * c.rho),
        gamma: c.gamma.min(lit(2.0)),
        zero_tail: false,
    }));
    Ok(out)
}

/// Mollification u * psi_eps with psi_eps(x) = eps^{-n} phi(x/eps), phi the
/// unit bump normalized to unit mass. Computed as an exact discrete circular
/// convolution, so mass is preserved exactly and support grows by at most
/// eps on the grid.
///
/// `eps_margin` is the admissible upper bound (the margin of the ambient
/// region construction); `eps >= eps_margin` is refused.
pub fn mollify<T: Scalar>(u: &Field<T>, eps: T, eps_margin: T) -> Result<Field<T>> {
    if !(eps > T::zero()) {
        return Err(Error::Domain("mollifier width must be positive".into()));
    }
    if eps >= eps_margin {
        return Err(Error::MarginViolation(format!(
            "mollifier width {eps} must stay below the margin {eps_margin}"
        )));
    }
    let grid = *u.grid();
    let dim = grid.dim();

    // Sample the bump at wrapped index displacements from node 0.
    let h = grid.spacing();
    let mut psi = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    let mut total = T::zero();
    for (i, p) in psi.iter_mut().enumerate() {
        let mi = grid.multi_index(i);
        let mut r2 = T::zero();
        for a in 0..dim {
            let d = grid.min_image(h * lit(mi[a] as f64));
            r2 = r2 + d * d;
        }
        let t2 = r2 / (eps * eps);
        let v = if t2 >= T::one() {
            T::zero()
        } else {
            (T::one() - T::one() / (T::one() - t2)).exp()
        };
        p.re = v;
        total = total + v;
    }
    if total == T::zero() {
        // Width below grid resolution: the sampled mollifier is a point mass.
        return Ok(u.clone());
    }
    let inv_total = T::one() / total;

    let engine = FftEngine::new(grid);
    let mut psi_hat = psi;
    engine.transform(&mut psi_hat, Direction::Forward);
    let mut data = u.values().to_vec();
    engine.transform(&mut data, Direction::Forward);
    for (v, p) in data.iter_mut().zip(psi_hat.iter()) {
        *v = *v * *p * inv_total;
    }
    engine.transform(&mut data, Direction::Inverse);

    let cert = u.decay().map(|c| {
        let shrink = (T::one() - c.gamma * eps).max(lit(0.5));
        DecayCertificate {
            c: c.c * (c.rho * (T::one() + eps).powf(c.gamma)).exp().min(lit(1e12)),
            rho: c.rho * shrink,
            gamma: c.gamma,
            zero_tail: c.zero_tail,
        }
    });
    Field::new(grid, data, cert)
}

/// One retained Fourier mode: frequency vector, |xi|^2 and the coefficient
/// already divided by M^n so that `sum coeff * exp(i xi . x)` reproduces u.
#[derive(Clone, Copy, Debug)]
pub struct Mode<T> {
    pub freq: Point<T>,
    pub freq_sq: T,
    pub coeff: C<T>,
}

/// Truncated Fourier-series evaluator: keeps modes above a relative
/// threshold and evaluates the field (and its heat flow) anywhere, off-grid
/// included. Exact on band-limited fields when the threshold is zero.
pub struct SpectralEvaluator<T: Scalar> {
    dim: usize,
    modes: Vec<Mode<T>>,
    dropped_mass: T,
}

impl<T: Scalar> SpectralEvaluator<T> {
    pub fn new(field: &Field<T>, rel_threshold: T) -> Self {
        let grid = *field.grid();
        let engine = FftEngine::new(grid);
        let spectrum = engine.forward(field);
        let peak = spectrum.iter().fold(T::zero(), |a, v| a.max(v.norm()));
        let cut = peak * rel_threshold;
        let norm = T::one() / lit_usize::<T>(grid.len());

        let mut modes = Vec::new();
        let mut dropped = T::zero();
        for (i, v) in spectrum.iter().enumerate() {
            if v.norm() > cut {
                modes.push(Mode {
                    freq: grid.freq_vec(i),
                    freq_sq: grid.freq_sq(i),
                    // The parity factor accounts for the grid origin at -L.
                    coeff: *v * (norm * grid.mode_parity(i)),
                });
            } else {
                dropped = dropped + v.norm() * norm;
            }
        }
        Self { dim: grid.dim(), modes, dropped_mass: dropped }
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    /// Upper bound on the pointwise truncation error from dropped modes.
    pub fn dropped_mass(&self) -> T {
        self.dropped_mass
    }

    /// Field value at an arbitrary point by direct Fourier-series summation.
    pub fn eval(&self, x: &Point<T>) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in &self.modes {
            acc = acc + m.coeff * phase(&m.freq, x, self.dim);
        }
        acc
    }

    /// (e^{t Delta} u)(x).
    pub fn heat_value(&self, t: T, x: &Point<T>) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in &self.modes {
            let damp = (-t * m.freq_sq).exp();
            if damp == T::zero() {
                continue;
            }
            acc = acc + m.coeff * damp * phase(&m.freq, x, self.dim);
        }
        acc
    }

    /// (e^{t Delta} u - u)(x), computed mode-wise through expm1 so the
    /// small-t cancellation costs no precision. The zero mode drops out.
    pub fn heat_deficit(&self, t: T, x: &Point<T>) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in &self.modes {
            if m.freq_sq == T::zero() {
                continue;
            }
            let d = (-t * m.freq_sq).exp_m1();
            acc = acc + m.coeff * d * phase(&m.freq, x, self.dim);
        }
        acc
    }

    /// Mean value (zero-mode coefficient).
    pub fn mean(&self) -> C<T> {
        self.modes
            .iter()
            .find(|m| m.freq_sq == T::zero())
            .map(|m| m.coeff)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// (Delta u)(x) by the mode sum.
    pub fn laplacian_value(&self, x: &Point<T>) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in &self.modes {
            acc = acc + m.coeff * (-m.freq_sq) * phase(&m.freq, x, self.dim);
        }
        acc
    }

    /// Collapses the modes at a fixed point into a |xi|^2-indexed profile:
    /// the heat flow weights modes by e^{-t |xi|^2} only, so grouping equal
    /// |xi|^2 shells makes repeated time sweeps cheap.
    pub fn point_spectrum(&self, x: &Point<T>) -> PointSpectrum<T> {
        let mut pairs: Vec<(T, C<T>)> = self
            .modes
            .iter()
            .map(|m| (m.freq_sq, m.coeff * phase(&m.freq, x, self.dim)))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut qs: Vec<T> = Vec::new();
        let mut amps: Vec<C<T>> = Vec::new();
        let tol = lit::<T>(1e-12);
        for (q, a) in pairs {
            match qs.last() {
                Some(&last) if (q - last).abs() <= tol * last.max(T::one()) => {
                    let idx = amps.len() - 1;
                    amps[idx] = amps[idx] + a;
                }
                _ => {
                    qs.push(q);
                    amps.push(a);
                }
            }
        }
        PointSpectrum { qs, amps }
    }
}

/// Shell-collapsed spectrum of a field at one point: value, heat flow and
/// Laplacian reduce to sums over distinct |xi|^2 values.
pub struct PointSpectrum<T> {
    qs: Vec<T>,
    amps: Vec<C<T>>,
}

impl<T: Scalar> PointSpectrum<T> {
    pub fn len(&self) -> usize {
        self.qs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qs.is_empty()
    }

    pub fn value(&self) -> C<T> {
        self.amps
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, v| a + v)
    }

    pub fn mean(&self) -> C<T> {
        if let Some(&q0) = self.qs.first() {
            if q0 == T::zero() {
                return self.amps[0];
            }
        }
        Complex::new(T::zero(), T::zero())
    }

    pub fn laplacian(&self) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (q, a) in self.qs.iter().zip(&self.amps) {
            acc = acc + *a * (-*q);
        }
        acc
    }

    pub fn heat_value(&self, t: T) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (q, a) in self.qs.iter().zip(&self.amps) {
            let w = (-t * *q).exp();
            if w == T::zero() {
                continue;
            }
            acc = acc + *a * w;
        }
        acc
    }

    pub fn heat_deficit(&self, t: T) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (q, a) in self.qs.iter().zip(&self.amps) {
            if *q == T::zero() {
                continue;
            }
            acc = acc + *a * (-t * *q).exp_m1();
        }
        acc
    }
}

#[inline]
fn phase<T: Scalar>(freq: &Point<T>, x: &Point<T>, dim: usize) -> C<T> {
    let mut arg = T::zero();
    for a in 0..dim {
        arg = arg + freq[a] * x[a];
    }
    Complex::new(arg.cos(), arg.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_analytic, FieldSpec};

    fn gaussian_1d(l: f64, m: usize, a: f64) -> Field<f64> {
        let g = GridSpec::new(1, l, m).unwrap();
        sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], a)).unwrap()
    }

    #[test]
    fn identity_symbol_is_identity() {
        let f = gaussian_1d(8.0, 64, 0.5);
        let g = fourier_multiplier(&f, |_| Complex::new(1.0, 0.0)).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn laplacian_multiplier_matches_analytic_gaussian() {
        // sigma = |xi|^2 applied to the mass-one Gaussian equals -Delta g,
        // with -Delta g = g * (n/(2a) - r^2/(4a^2)).
        let a = 1.0;
        let g = GridSpec::new(1, 12.0, 256).unwrap();
        let f = sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], a)).unwrap();
        let lap = fourier_multiplier(&f, |xi| Complex::new(xi[0] * xi[0], 0.0)).unwrap();
        for i in 0..g.len() {
            let x = g.node(i)[0];
            let gv = f.value_at(i).re;
            let expect: f64 = gv * (1.0 / (2.0 * a) - x * x / (4.0 * a * a));
            assert!(
                (lap.value_at(i).re - expect).abs() <= 1e-8 * f.linf_norm(),
                "mismatch at x={x}: {} vs {expect}",
                lap.value_at(i).re
            );
        }
    }

    #[test]
    fn heat_zero_time_is_identity() {
        let f = gaussian_1d(8.0, 64, 0.5);
        let g = heat_evolve(&f, 0.0).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn singular_symbol_names_frequency() {
        let f = gaussian_1d(8.0, 64, 0.5);
        let err = fourier_multiplier(&f, |xi| {
            Complex::new(1.0 / (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0)
        })
        .unwrap_err();
        match err {
            Error::SingularSymbol(a, b, c) => {
                assert_eq!((a, b, c), (0.0, 0.0, 0.0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn frac_lap_zero_order_is_identity() {
        let f = gaussian_1d(8.0, 64, 0.5);
        let g = frac_lap_fourier(&f, 0.0).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn frac_lap_one_matches_minus_laplacian() {
        let g = GridSpec::new(1, 12.0, 256).unwrap();
        let f = sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], 1.0)).unwrap();
        let s1 = frac_lap_fourier(&f, 1.0).unwrap();
        let lap = fourier_multiplier(&f, |xi| Complex::new(xi[0] * xi[0], 0.0)).unwrap();
        for (a, b) in s1.values().iter().zip(lap.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mollify_preserves_constants() {
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let ones = Field::from_fn(g, |_| Complex::new(1.0, 0.0));
        for eps in [0.05, 0.2, 0.5] {
            let out = mollify(&ones, eps, 1.0).unwrap();
            for v in out.values() {
                let re: f64 = v.re;
                assert!((re - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mollify_support_arithmetic() {
        // Field vanishing on the ball of radius r stays zero on radius r - eps.
        let g = GridSpec::<f64>::new(1, 8.0, 256).unwrap();
        let f = sample_analytic(&g, &FieldSpec::shell([0.0; 3], 2.0, 3.0)).unwrap();
        let eps = 1.0;
        let out = mollify(&f, eps, 2.0).unwrap();
        for i in 0..g.len() {
            let x = g.node(i)[0].abs();
            if x < 2.0 - eps - g.spacing() {
                assert!(out.value_at(i).norm() < 1e-13, "nonzero at |x|={x}");
            }
        }
    }

    #[test]
    fn mollify_rejects_margin_violation() {
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let f = Field::zeros(g);
        assert!(matches!(mollify(&f, 0.5, 0.5), Err(Error::MarginViolation(_))));
    }

    #[test]
    fn evaluator_matches_grid_samples() {
        let g = GridSpec::new(2, 6.0, 32).unwrap();
        let f = sample_analytic(&g, &FieldSpec::gaussian([0.5, -1.0, 0.0], 0.25)).unwrap();
        let ev = SpectralEvaluator::new(&f, 0.0);
        for flat in [0usize, 17, 500, 1023] {
            let x = g.node(flat);
            assert!((ev.eval(&x) - f.value_at(flat)).norm() < 1e-12);
        }
    }

    #[test]
    fn evaluator_heat_matches_multiplier() {
        let g = GridSpec::new(1, 8.0, 128).unwrap();
        let f = sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], 0.5)).unwrap();
        let t = 0.7;
        let evolved = heat_evolve(&f, t).unwrap();
        let ev = SpectralEvaluator::new(&f, 0.0);
        for flat in [3usize, 64, 100] {
            let x = g.node(flat);
            assert!((ev.heat_value(t, &x) - evolved.value_at(flat)).norm() < 1e-12);
        }
    }
}
