//! Spherical mean transforms: quadrature rules on S^{n-1}, radial profiles
//! h(t) = t^{n-1} * mean of v over the sphere of radius t, their
//! Fourier-Laplace transform, even-moment residual tables, and the
//! support-theorem decision procedure.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{DecayCertificate, Field};
use crate::grid::{point_norm, Point};
use crate::region::RegionSpec;
use crate::scalar::{lit, lit_usize, Scalar, C};
use crate::spectral::SpectralEvaluator;

/// Relative spectrum threshold for off-grid evaluation.
const MODE_THRESHOLD: f64 = 1e-16;

/// Quadrature rule on the unit sphere S^{n-1}; weights sum to the surface
/// measure (2 for n=1, 2 pi for n=2, 4 pi for n=3).
#[derive(Clone, Debug)]
pub struct SphereRule<T> {
    pub dim: usize,
    pub nodes: Vec<Point<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> SphereRule<T> {
    /// Default rules: the two-point rule for n=1, 256 equispaced angles for
    /// n=2, and a 16 x 32 Gauss-Legendre x uniform product rule for n=3.
    pub fn standard(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self::circle_1d()),
            2 => Ok(Self::equispaced_circle(256, T::zero())),
            3 => Ok(Self::product_rule(16, 32, T::zero())),
            _ => Err(Error::Domain(format!("no sphere rule for dimension {dim}"))),
        }
    }

    pub fn circle_1d() -> Self {
        Self {
            dim: 1,
            nodes: vec![[T::one(), T::zero(), T::zero()], [-T::one(), T::zero(), T::zero()]],
            weights: vec![T::one(), T::one()],
        }
    }

    /// n = 2: equispaced angles, optionally rotated by `offset` radians.
    pub fn equispaced_circle(n_angles: usize, offset: T) -> Self {
        let w = lit::<T>(2.0) * T::PI() / lit_usize(n_angles);
        let mut nodes = Vec::with_capacity(n_angles);
        for j in 0..n_angles {
            let th = lit::<T>(2.0) * T::PI() * lit_usize::<T>(j) / lit_usize(n_angles) + offset;
            nodes.push([th.cos(), th.sin(), T::zero()]);
        }
        Self { dim: 2, nodes, weights: vec![w; n_angles] }
    }

    /// n = 3: Gauss-Legendre in the polar cosine times uniform azimuth,
    /// exact for spherical harmonics up to degree ~ 2 n_polar - 1.
    pub fn product_rule(n_polar: usize, n_azimuth: usize, offset: T) -> Self {
        let (mus, gl_weights) = gauss_legendre::<T>(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = lit::<T>(2.0) * T::PI() / lit_usize(n_azimuth);
        for (mu, wmu) in mus.iter().zip(&gl_weights) {
            let sin_th = (T::one() - *mu * *mu).max(T::zero()).sqrt();
            for j in 0..n_azimuth {
                let phi = dphi * lit_usize::<T>(j) + offset;
                nodes.push([sin_th * phi.cos(), sin_th * phi.sin(), *mu]);
                weights.push(*wmu * dphi);
            }
        }
        Self { dim: 3, nodes, weights }
    }

    pub fn surface_measure(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n {
        // Chebyshev-style initial guess.
        let guess = (T::PI() * (lit_usize::<T>(i) + lit(0.75)) / (lit_usize::<T>(n) + lit(0.5))).cos();
        let mut x = guess;
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative::<T>(n, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() < lit(1e-16) {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative::<T>(n, x);
        nodes[i] = x;
        weights[i] = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let fk = lit_usize::<T>(k);
        let p2 = ((lit::<T>(2.0) * fk - T::one()) * x * p1 - (fk - T::one()) * p0) / fk;
        p0 = p1;
        p1 = p2;
    }
    let dp = lit_usize::<T>(n) * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Spherical-mean engine for one field: off-grid samples come from direct
/// Fourier-series summation at the sphere nodes.
pub struct SphericalMeanEngine<T: Scalar> {
    evaluator: SpectralEvaluator<T>,
    rule: SphereRule<T>,
    dim: usize,
}

impl<T: Scalar> SphericalMeanEngine<T> {
    pub fn new(v: &Field<T>, rule: SphereRule<T>) -> Result<Self> {
        let dim = v.grid().dim();
        if rule.dim != dim {
            return Err(Error::Domain(format!(
                "sphere rule dimension {} does not match grid dimension {dim}",
                rule.dim
            )));
        }
        Ok(Self { evaluator: SpectralEvaluator::new(v, lit(MODE_THRESHOLD)), rule, dim })
    }

    pub fn rule(&self) -> &SphereRule<T> {
        &self.rule
    }

    /// Mean of v over the sphere of radius t centered at x.
    pub fn mean(&self, x: &Point<T>, t: T) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (node, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let mut y = [T::zero(); 3];
            for a in 0..self.dim {
                y[a] = x[a] - t * node[a];
            }
            acc = acc + self.evaluator.eval(&y) * *w;
        }
        acc
    }

    /// Means for many radii at many centers. The inner node sums over the
    /// sphere are reordered per Fourier mode so the expensive part is shared
    /// across centers; the result is identical to calling `mean` pointwise.
    pub fn means_multi(&self, centers: &[Point<T>], ts: &[T]) -> Vec<Vec<C<T>>> {
        let modes = self.evaluator.modes();
        // s[t][mode] = sum over sphere nodes of w * exp(-i t xi . theta)
        let s_table: Vec<Vec<C<T>>> = ts
            .par_iter()
            .map(|&t| {
                modes
                    .iter()
                    .map(|m| {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for (node, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                            let mut arg = T::zero();
                            for a in 0..self.dim {
                                arg = arg + m.freq[a] * node[a];
                            }
                            arg = -t * arg;
                            acc = acc + Complex::new(arg.cos() * *w, arg.sin() * *w);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        centers
            .iter()
            .map(|x| {
                let phases: Vec<C<T>> = modes
                    .iter()
                    .map(|m| {
                        let mut arg = T::zero();
                        for a in 0..self.dim {
                            arg = arg + m.freq[a] * x[a];
                        }
                        Complex::new(arg.cos(), arg.sin()) * m.coeff
                    })
                    .collect();
                ts.iter()
                    .enumerate()
                    .map(|(ti, _)| {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for (ph, s) in phases.iter().zip(&s_table[ti]) {
                            acc = acc + *ph * *s;
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// Spherical mean of a field at a single (x, t).
pub fn spherical_mean<T: Scalar>(v: &Field<T>, x: &Point<T>, t: T, rule: &SphereRule<T>) -> Result<C<T>> {
    if !(t > T::zero()) {
        return Err(Error::Domain("sphere radius must be positive".into()));
    }
    let grid = v.grid();
    let reach = point_norm(x, grid.dim()) + t;
    if reach > grid.half_width() {
        return Err(Error::Truncation {
            boundary: reach.to_f64().unwrap_or(f64::NAN),
            tol: grid.half_width().to_f64().unwrap_or(f64::NAN),
        });
    }
    let engine = SphericalMeanEngine::new(v, rule.clone())?;
    Ok(engine.mean(x, t))
}

/// Radial profile h(t) = t^{n-1} * spherical mean at radius t, with the
/// odd-extension convention f(t) = h(t) for t >= 0 and f(t) = 0 for t < 0.
#[derive(Clone, Debug)]
pub struct RadialProfile<T> {
    pub center: Point<T>,
    pub ts: Vec<T>,
    pub hs: Vec<C<T>>,
    pub dim: usize,
    pub decay: Option<DecayCertificate<T>>,
}

impl<T: Scalar> RadialProfile<T> {
    pub fn dt(&self) -> T {
        self.ts[1] - self.ts[0]
    }

    pub fn t_max(&self) -> T {
        *self.ts.last().unwrap()
    }

    pub fn peak(&self) -> T {
        self.hs.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    /// Trapezoid integral of h(t) g(t) dt over the profile.
    fn integrate(&self, g: impl Fn(T) -> C<T>) -> C<T> {
        let dt = self.dt();
        let n = self.ts.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { lit::<T>(0.5) } else { T::one() };
            acc = acc + self.hs[i] * g(self.ts[i]) * w;
        }
        acc * dt
    }
}

/// Builds the radial profile of a scenario field at x in omega, verifying
/// the kappa margin h(t) = 0 for t < kappa.
pub fn build_profile<T: Scalar>(
    v: &Field<T>,
    x: &Point<T>,
    region: &RegionSpec<T>,
    rule: &SphereRule<T>,
) -> Result<RadialProfile<T>> {
    let grid = v.grid();
    let dim = grid.dim();
    if !region.omega.contains(x, dim) {
        return Err(Error::Precondition("profile center must lie in omega".into()));
    }
    let peak = v.linf_norm();
    if peak > T::zero() {
        let sup = region.sup_on_o(v);
        if sup > lit::<T>(1e-7) * peak {
            return Err(Error::Precondition("field does not vanish on O".into()));
        }
    }

    let sup_coord = (0..dim).fold(T::zero(), |a, ax| a.max(x[ax].abs()));
    let t_max = grid.half_width() - sup_coord - grid.spacing();
    let dt = grid.spacing() / lit(2.0);
    let n_t = (t_max / dt).to_f64().unwrap().floor() as usize + 1;
    let ts: Vec<T> = (0..n_t).map(|i| dt * lit_usize::<T>(i)).collect();

    let engine = SphericalMeanEngine::new(v, rule.clone())?;
    let means = engine.means_multi(std::slice::from_ref(x), &ts).remove(0);
    let hs: Vec<C<T>> = ts
        .iter()
        .zip(means)
        .map(|(&t, m)| {
            let mut tp = T::one();
            for _ in 1..dim {
                tp = tp * t;
            }
            m * tp
        })
        .collect();

    // Margin check: the sphere stays inside O for t < kappa, where v = 0.
    let margin_tol = lit::<T>(1e-10) * peak.max(lit(1e-30));
    for (t, h) in ts.iter().zip(&hs) {
        if *t < region.kappa && h.norm() > margin_tol {
            return Err(Error::MarginViolation(format!(
                "profile not vanishing inside the kappa margin: |h({t})| = {}",
                h.norm()
            )));
        }
    }

    Ok(RadialProfile { center: *x, ts, hs, dim, decay: v.decay().copied() })
}

/// Fourier-Laplace transform of the odd-extension profile at the sample
/// points: F(z) = integral_0^inf h(t) exp(-i t z) dt.
///
/// Imaginary parts of z are admissible only while the certified decay keeps
/// the tail below tolerance; beyond that the admissible strip is reported.
pub fn fourier_laplace<T: Scalar>(profile: &RadialProfile<T>, zs: &[C<T>]) -> Result<Vec<C<T>>> {
    let t_max = profile.t_max();
    let tail = profile.hs.last().map(|h| h.norm()).unwrap_or(T::zero());
    let peak = profile.peak().max(lit(1e-300));
    for z in zs {
        let b = z.im.abs();
        let growth = (b * t_max).exp();
        if tail * growth > lit::<T>(1e-6) * peak {
            let admissible = ((lit::<T>(1e-6) * peak / tail.max(lit(1e-300))).ln() / t_max).max(T::zero());
            return Err(Error::Domain(format!(
                "|Im z| = {b} outside the certified strip; admissible |Im z| <= {admissible}"
            )));
        }
    }
    Ok(zs
        .iter()
        .map(|&z| profile.integrate(|t| (Complex::new(T::zero(), -T::one()) * z * t).exp()))
        .collect())
}

/// Fourier-Laplace transform of arbitrary samples on a uniform t-grid
/// (trapezoid); used for synthetic even/odd symmetry checks.
pub fn fourier_laplace_samples<T: Scalar>(ts: &[T], fs: &[C<T>], z: C<T>) -> C<T> {
    let dt = ts[1] - ts[0];
    let n = ts.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { lit::<T>(0.5) } else { T::one() };
        acc = acc + fs[i] * ((Complex::new(T::zero(), -T::one()) * z * ts[i]).exp()) * w;
    }
    acc * dt
}

/// Table of |integral f(t) t^{2m} dt| for m = 0..=m_max (the even-derivative
/// values of the transform at 0, up to constants).
pub fn even_moment_residuals<T: Scalar>(profile: &RadialProfile<T>, m_max: u32) -> Result<Vec<T>> {
    if m_max > 8 {
        return Err(Error::Domain(format!("even-moment table capped at m <= 8, got {m_max}")));
    }
    Ok((0..=m_max)
        .map(|m| {
            profile
                .integrate(|t| Complex::new(t.powi(2 * m as i32), T::zero()))
                .norm()
        })
        .collect())
}

/// Reconstruction of f from the even part of its Fourier-Laplace transform:
/// E(xi) = (F(xi) + F(-xi))/2 sampled on [-Xi, Xi], inverted on the t grid,
/// and doubled (f = 2 f_even on t > 0 for one-sided f). When the even
/// moments vanish, E vanishes, and this route certifies smallness of f
/// independently of the direct samples.
pub fn even_part_reconstruction<T: Scalar>(
    profile: &RadialProfile<T>,
    xi_max: T,
    n_xi: usize,
) -> Result<Vec<C<T>>> {
    let zs: Vec<C<T>> = (0..n_xi)
        .map(|i| {
            let xi = -xi_max + (xi_max + xi_max) * lit_usize::<T>(i) / lit_usize::<T>(n_xi - 1);
            Complex::new(xi, T::zero())
        })
        .collect();
    let f_vals = fourier_laplace(profile, &zs)?;
    let dxi = (xi_max + xi_max) / lit_usize::<T>(n_xi - 1);
    let two_pi = lit::<T>(2.0) * T::PI();
    Ok(profile
        .ts
        .iter()
        .map(|&t| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, z) in zs.iter().enumerate() {
                let even = (f_vals[i] + f_vals[n_xi - 1 - i]) * lit::<T>(0.5);
                let w: T = if i == 0 || i == n_xi - 1 { lit(0.5) } else { T::one() };
                let rot = (Complex::new(T::zero(), T::one()) * (z.re * t)).exp();
                acc = acc + even * rot * w;
            }
            acc * (dxi / two_pi * lit::<T>(2.0))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Zero,
    Nonzero,
}

#[derive(Clone, Debug)]
pub struct SupportDecision<T> {
    pub verdict: Verdict,
    pub max_mean: T,
    pub tolerance: T,
    pub scale: T,
    /// Witness (center, radius) when the verdict is Nonzero.
    pub witness: Option<(Point<T>, T)>,
}

#[derive(Clone, Copy, Debug)]
pub struct SupportOptions<T> {
    /// Constraint tolerance delta the verdict threshold ties to.
    pub delta: T,
    /// Verdict threshold factor: tol = factor * delta (engineering choice).
    pub factor: T,
}

impl<T: Scalar> Default for SupportOptions<T> {
    fn default() -> Self {
        Self { delta: lit(1e-8), factor: lit(1e3) }
    }
}

/// Operationalizes the support theorem as a decision: ZERO when every
/// sampled spherical mean is below tol * scale, otherwise NONZERO with a
/// witness (x, t). Requires a decay certificate on v.
pub fn support_decision<T: Scalar>(
    v: &Field<T>,
    region: &RegionSpec<T>,
    omega_samples: &[Point<T>],
    rule: &SphereRule<T>,
    opts: &SupportOptions<T>,
) -> Result<SupportDecision<T>> {
    if v.decay().is_none() {
        return Err(Error::MissingCertificate(
            "support decision requires a decay certificate".into(),
        ));
    }
    let grid = v.grid();
    let dim = grid.dim();
    for x in omega_samples {
        if !region.omega.contains(x, dim) {
            return Err(Error::Precondition("sample points must lie in omega".into()));
        }
    }
    let scale = v.linf_norm();
    let tolerance = opts.factor * opts.delta;

    let sup_coord = omega_samples
        .iter()
        .map(|x| (0..dim).fold(T::zero(), |a, ax| a.max(x[ax].abs())))
        .fold(T::zero(), T::max);
    let t_max = grid.half_width() - sup_coord - grid.spacing();
    let dt = grid.spacing() / lit(2.0);
    let n_t = (t_max / dt).to_f64().unwrap().floor() as usize;
    let ts: Vec<T> = (1..=n_t).map(|i| dt * lit_usize::<T>(i)).collect();

    let engine = SphericalMeanEngine::new(v, rule.clone())?;
    let tables = engine.means_multi(omega_samples, &ts);

    let mut max_mean = T::zero();
    let mut witness = None;
    for (x, row) in omega_samples.iter().zip(&tables) {
        for (t, m) in ts.iter().zip(row) {
            if m.norm() > max_mean {
                max_mean = m.norm();
                witness = Some((*x, *t));
            }
        }
    }

    let verdict = if max_mean <= tolerance * scale.max(lit(1e-300)) {
        Verdict::Zero
    } else {
        Verdict::Nonzero
    };
    Ok(SupportDecision {
        witness: if verdict == Verdict::Nonzero { witness } else { None },
        verdict,
        max_mean,
        tolerance,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_analytic, FieldSpec};
    use crate::grid::GridSpec;
    use crate::region::SetSpec;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8);
        // integral of t^4 over [-1,1] = 2/5
        let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        assert!((q - 0.4).abs() < 1e-13);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn surface_measures() {
        assert!((SphereRule::<f64>::standard(1).unwrap().surface_measure() - 2.0).abs() < 1e-14);
        assert!(
            (SphereRule::<f64>::standard(2).unwrap().surface_measure()
                - 2.0 * std::f64::consts::PI)
                .abs()
                < 1e-12
        );
        assert!(
            (SphereRule::<f64>::standard(3).unwrap().surface_measure()
                - 4.0 * std::f64::consts::PI)
                .abs()
                < 1e-11
        );
    }

    #[test]
    fn radial_field_mean_is_circumference_times_value() {
        // For radial v in n=2: SM v(0, t) = 2 pi v(t e1).
        let g = GridSpec::<f64>::new(2, 8.0, 128).unwrap();
        let v = sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], 0.5)).unwrap();
        let rule = SphereRule::standard(2).unwrap();
        let t = 1.25;
        let mean = spherical_mean(&v, &[0.0; 3], t, &rule).unwrap();
        let ev = SpectralEvaluator::new(&v, 0.0);
        let expect = ev.eval(&[t, 0.0, 0.0]) * 2.0 * std::f64::consts::PI;
        assert!((mean - expect).norm() < 1e-10);
    }

    #[test]
    fn constant_field_mean_is_surface_measure() {
        let g = GridSpec::<f64>::new(2, 4.0, 32).unwrap();
        let ones = Field::from_fn(g, |_| Complex::new(1.0, 0.0));
        let rule = SphereRule::standard(2).unwrap();
        let mean = spherical_mean(&ones, &[0.5, -0.5, 0.0], 1.0, &rule).unwrap();
        assert!((mean.re - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn sphere_missing_support_gives_zero() {
        let g = GridSpec::<f64>::new(2, 8.0, 256).unwrap();
        let v = sample_analytic(&g, &FieldSpec::gaussian_shell([0.0; 3], 2.5, 0.01)).unwrap();
        let rule = SphereRule::standard(2).unwrap();
        let mean = spherical_mean(&v, &[0.0; 3], 1.0, &rule).unwrap();
        assert!(mean.norm() < 1e-9 * v.linf_norm(), "ringing {:.3e}", mean.norm());
    }

    #[test]
    fn rotation_equivariance_for_radial_fields() {
        let g = GridSpec::<f64>::new(2, 8.0, 128).unwrap();
        let v = sample_analytic(&g, &FieldSpec::gaussian_shell([0.0; 3], 2.5, 0.02)).unwrap();
        let a = SphericalMeanEngine::new(&v, SphereRule::equispaced_circle(256, 0.0)).unwrap();
        let b = SphericalMeanEngine::new(&v, SphereRule::equispaced_circle(256, 0.37)).unwrap();
        for t in [0.5, 2.5, 3.5] {
            let ma = a.mean(&[0.0; 3], t);
            let mb = b.mean(&[0.0; 3], t);
            assert!((ma - mb).norm() <= 1e-10 * ma.norm().max(1.0));
        }
    }

    #[test]
    fn means_multi_matches_pointwise() {
        let g = GridSpec::<f64>::new(2, 8.0, 64).unwrap();
        let v = sample_analytic(&g, &FieldSpec::gaussian([1.0, 0.5, 0.0], 0.3)).unwrap();
        let engine = SphericalMeanEngine::new(&v, SphereRule::standard(2).unwrap()).unwrap();
        let centers = [[0.0, 0.0, 0.0], [0.5, -0.25, 0.0]];
        let ts = [0.5, 1.0, 2.0];
        let tables = engine.means_multi(&centers, &ts);
        for (x, row) in centers.iter().zip(&tables) {
            for (t, got) in ts.iter().zip(row) {
                let direct = engine.mean(x, *t);
                assert!((got - direct).norm() < 1e-11);
            }
        }
    }

    fn shell_region(grid: &GridSpec<f64>) -> (Field<f64>, RegionSpec<f64>) {
        let v = sample_analytic(grid, &FieldSpec::gaussian_shell([0.0; 3], 2.5, 0.01)).unwrap();
        let region = RegionSpec::new(
            grid,
            SetSpec::ball([0.0; 3], 1.5),
            SetSpec::ball([0.0; 3], 0.4),
            0.5,
        )
        .unwrap();
        (v, region)
    }

    #[test]
    fn profile_margin_and_support() {
        let g = GridSpec::<f64>::new(2, 8.0, 256).unwrap();
        let (v, region) = shell_region(&g);
        let rule = SphereRule::standard(2).unwrap();
        let profile = build_profile(&v, &[0.0; 3], &region, &rule).unwrap();
        // h vanishes below the kappa margin...
        for (t, h) in profile.ts.iter().zip(&profile.hs) {
            if *t < region.kappa {
                assert!(h.norm() < 1e-12);
            }
        }
        // ...and is supported where spheres meet the annulus.
        let peak_t = profile
            .ts
            .iter()
            .zip(&profile.hs)
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map(|(t, _)| *t)
            .unwrap();
        assert!((2.2..=2.8).contains(&peak_t), "peak at t = {peak_t}");
    }

    #[test]
    fn zero_field_profile_is_zero() {
        let g = GridSpec::<f64>::new(2, 8.0, 64).unwrap();
        let (_, region) = shell_region(&g);
        let mut zero = Field::zeros(g);
        zero.set_decay(Some(DecayCertificate::compact(0.0, 1.0)));
        let rule = SphereRule::standard(2).unwrap();
        let profile = build_profile(&zero, &[0.0; 3], &region, &rule).unwrap();
        assert!(profile.peak() == 0.0);
    }

    #[test]
    fn fourier_laplace_of_indicator() {
        // f = indicator of [0,1]: F(0) = 1.
        let n = 4001;
        let ts: Vec<f64> = (0..n).map(|i| 1.0 * i as f64 / (n - 1) as f64).collect();
        let fs: Vec<Complex<f64>> = vec![Complex::new(1.0, 0.0); n];
        let v = fourier_laplace_samples(&ts, &fs, Complex::new(0.0, 0.0));
        assert!((v.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_samples_give_even_transform() {
        let n = 2001;
        let ts: Vec<f64> = (0..n).map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64).collect();
        let fs: Vec<Complex<f64>> = ts
            .iter()
            .map(|t| Complex::new((-t * t / 2.0).exp(), 0.0))
            .collect();
        for xi in [0.5, 1.0, 2.0] {
            let fp = fourier_laplace_samples(&ts, &fs, Complex::new(xi, 0.0));
            let fm = fourier_laplace_samples(&ts, &fs, Complex::new(-xi, 0.0));
            assert!((fp - fm).norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_gaussian_transform_matches_analytic() {
        // f = exp(-t^2 / (2 sigma^2)) on the whole line:
        // F(z) = sigma sqrt(2 pi) exp(-sigma^2 z^2 / 2).
        let sigma = 0.8;
        let n = 8001;
        let ts: Vec<f64> = (0..n).map(|i| -10.0 + 20.0 * i as f64 / (n - 1) as f64).collect();
        let fs: Vec<Complex<f64>> = ts
            .iter()
            .map(|t| Complex::new((-t * t / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        for xi in [0.0, 0.7, 1.9] {
            let got = fourier_laplace_samples(&ts, &fs, Complex::new(xi, 0.0));
            let expect = sigma * (2.0 * std::f64::consts::PI).sqrt()
                * (-sigma * sigma * xi * xi / 2.0).exp();
            assert!(
                (got.re - expect).abs() <= 1e-8 * expect.max(1e-8),
                "xi={xi}: {} vs {expect}",
                got.re
            );
        }
    }

    #[test]
    fn linear_ramp_second_moment() {
        // f = t on [0,1]: integral f t^2 dt = 1/4.
        let n = 4001;
        let dt = 1.0 / (n - 1) as f64;
        let ts: Vec<f64> = (0..n).map(|i| dt * i as f64).collect();
        let hs: Vec<Complex<f64>> = ts.iter().map(|&t| Complex::new(t, 0.0)).collect();
        let profile = RadialProfile {
            center: [0.0; 3],
            ts,
            hs,
            dim: 1,
            decay: None,
        };
        let res = even_moment_residuals(&profile, 2).unwrap();
        assert!((res[1] - 0.25).abs() < 1e-7, "{}", res[1]);
    }

    #[test]
    fn support_decision_verdicts() {
        let g = GridSpec::<f64>::new(2, 8.0, 256).unwrap();
        let (v, region) = shell_region(&g);
        let rule = SphereRule::standard(2).unwrap();
        let opts = SupportOptions::default();
        let samples = [[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [0.0, -0.2, 0.0]];

        // Zero field: ZERO.
        let mut zero = Field::zeros(g);
        zero.set_decay(Some(DecayCertificate::compact(0.0, 1.0)));
        let d = support_decision(&zero, &region, &samples, &rule, &opts).unwrap();
        assert_eq!(d.verdict, Verdict::Zero);

        // Annulus bump: NONZERO with witness radius inside the annulus reach.
        let d = support_decision(&v, &region, &samples, &rule, &opts).unwrap();
        assert_eq!(d.verdict, Verdict::Nonzero);
        let (_, t) = d.witness.unwrap();
        assert!((1.8..=3.3).contains(&t), "witness t = {t}");

        // Missing certificate refused.
        let bare = Field::zeros(g);
        assert!(support_decision(&bare, &region, &samples, &rule, &opts).is_err());
    }

    #[test]
    fn odd_reflection_cancellation_1d() {
        // Odd reflection of a symmetric profile about the omega center is
        // exactly zero: the decision is ZERO and the norm is at floor.
        let g = GridSpec::<f64>::new(1, 8.0, 256).unwrap();
        let region = RegionSpec::new(
            &g,
            SetSpec::ball([0.0; 3], 1.5),
            SetSpec::ball([0.0; 3], 0.4),
            0.5,
        )
        .unwrap();
        let sym = FieldSpec::Sum {
            terms: vec![
                FieldSpec::gaussian([3.0, 0.0, 0.0], 0.1),
                FieldSpec::gaussian([-3.0, 0.0, 0.0], 0.1),
            ],
        };
        let reflected = FieldSpec::Sum {
            terms: vec![
                FieldSpec::gaussian([-3.0, 0.0, 0.0], 0.1),
                FieldSpec::gaussian([3.0, 0.0, 0.0], 0.1),
            ],
        };
        let a = sample_analytic(&g, &sym).unwrap();
        let b = sample_analytic(&g, &reflected).unwrap();
        let mut v = a.clone();
        v.add_assign_scaled(&b, Complex::new(-1.0, 0.0)).unwrap();
        v.set_decay(Some(DecayCertificate::compact(1.0, 4.0)));
        assert!(v.linf_norm() < 1e-14);
        let rule = SphereRule::standard(1).unwrap();
        let d = support_decision(&v, &region, &[[0.0; 3]], &rule, &SupportOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Zero);
    }
}
