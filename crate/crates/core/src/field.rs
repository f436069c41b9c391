//! Sampled complex fields on a grid, the analytic test-function library, and
//! the `FRL1` binary snapshot format.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{point_norm, GridSpec, Point};
use crate::scalar::{lit, Scalar, C};

/// Super-exponential decay certificate: |u(x)| <= C exp(-rho |x|^gamma) with
/// gamma > 1. `zero_tail` marks fields whose sampled tail is numerically zero
/// (compact support), for which the bound is vacuous but honest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayCertificate<T> {
    pub c: T,
    pub rho: T,
    pub gamma: T,
    pub zero_tail: bool,
}

impl<T: Scalar> DecayCertificate<T> {
    pub fn new(c: T, rho: T, gamma: T) -> Result<Self> {
        if !(gamma > T::one()) || !(rho > T::zero()) || !(c >= T::zero()) {
            return Err(Error::InvalidField(
                "certificate requires C >= 0, rho > 0, gamma > 1".into(),
            ));
        }
        Ok(Self { c, rho, gamma, zero_tail: false })
    }

    /// Envelope value C exp(-rho r^gamma) at radius r.
    pub fn bound_at(&self, r: T) -> T {
        if r <= T::zero() {
            return self.c;
        }
        self.c * (-self.rho * r.powf(self.gamma)).exp()
    }

    /// Certificate for a field supported in |x| <= r_max with peak `peak`.
    /// rho is scaled so the envelope constant stays representable.
    pub fn compact(peak: T, r_max: T) -> Self {
        let gamma = lit(2.0);
        let r = r_max.max(T::one());
        let rho = (lit::<T>(40.0) / r.powf(gamma)).min(T::one());
        let c = peak * (rho * r.powf(gamma)).exp();
        Self { c, rho, gamma, zero_tail: true }
    }
}

/// Analytic field descriptors. All evaluate to complex values on R^n and
/// carry enough structure to synthesize a decay certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec<T> {
    /// `(4 pi a)^{-n/2} exp(-|x-c|^2 / (4a))`, the mass-one heat bump.
    Gaussian { center: Point<T>, width: T },
    /// Monomial times unit-amplitude Gaussian envelope:
    /// `prod (x_i - c_i)^{p_i} * exp(-|x-c|^2/(4a))`.
    MonomialGaussian { center: Point<T>, width: T, powers: [u32; 3] },
    /// Smooth bump `exp(1 - 1/(1 - (r/R)^2))` for r < R, zero beyond.
    Bump { center: Point<T>, radius: T },
    /// Smooth radial shell supported on r_inner <= |x-c| <= r_outer.
    Shell { center: Point<T>, r_inner: T, r_outer: T },
    /// Analytic radial ridge `exp(-(r - radius)^2 / (4 width))`: decays like
    /// a Gaussian away from the sphere |x-c| = radius. Spectrally much
    /// better behaved than the compactly supported shell.
    GaussianShell { center: Point<T>, radius: T, width: T },
    Scale { factor: C<T>, inner: Box<FieldSpec<T>> },
    Sum { terms: Vec<FieldSpec<T>> },
}

impl<T: Scalar> FieldSpec<T> {
    pub fn gaussian(center: Point<T>, width: T) -> Self {
        FieldSpec::Gaussian { center, width }
    }

    pub fn bump(center: Point<T>, radius: T) -> Self {
        FieldSpec::Bump { center, radius }
    }

    pub fn shell(center: Point<T>, r_inner: T, r_outer: T) -> Self {
        FieldSpec::Shell { center, r_inner, r_outer }
    }

    pub fn gaussian_shell(center: Point<T>, radius: T, width: T) -> Self {
        FieldSpec::GaussianShell { center, radius, width }
    }

    pub fn scaled(self, factor: C<T>) -> Self {
        FieldSpec::Scale { factor, inner: Box::new(self) }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            FieldSpec::Gaussian { width, center } | FieldSpec::MonomialGaussian { width, center, .. } => {
                if !(*width > T::zero()) || !width.is_finite() {
                    return Err(Error::InvalidField("Gaussian width must be positive".into()));
                }
                if point_norm(center, dim).is_infinite() {
                    return Err(Error::InvalidField("Gaussian center must be finite".into()));
                }
                Ok(())
            }
            FieldSpec::Bump { radius, .. } => {
                if !(*radius > T::zero()) {
                    return Err(Error::InvalidField("bump radius must be positive".into()));
                }
                Ok(())
            }
            FieldSpec::Shell { r_inner, r_outer, .. } => {
                if !(T::zero() <= *r_inner && *r_inner < *r_outer) {
                    return Err(Error::InvalidField("shell requires 0 <= r_inner < r_outer".into()));
                }
                Ok(())
            }
            FieldSpec::GaussianShell { radius, width, .. } => {
                if !(*radius > T::zero()) || !(*width > T::zero()) {
                    return Err(Error::InvalidField(
                        "gaussian shell requires positive radius and width".into(),
                    ));
                }
                Ok(())
            }
            FieldSpec::Scale { factor, inner } => {
                if !factor.re.is_finite() || !factor.im.is_finite() {
                    return Err(Error::InvalidField("scale factor must be finite".into()));
                }
                inner.check(dim)
            }
            FieldSpec::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidField("sum descriptor must be nonempty".into()));
                }
                terms.iter().try_for_each(|t| t.check(dim))
            }
        }
    }

    /// Pointwise evaluation in dimension `dim`.
    pub fn eval(&self, x: &Point<T>, dim: usize) -> C<T> {
        match self {
            FieldSpec::Gaussian { center, width } => {
                let r2 = dist_sq(x, center, dim);
                let four_pi_a = lit::<T>(4.0) * T::PI() * *width;
                let norm = four_pi_a.powf(-lit::<T>(dim as f64) / lit(2.0));
                Complex::new(norm * (-r2 / (lit::<T>(4.0) * *width)).exp(), T::zero())
            }
            FieldSpec::MonomialGaussian { center, width, powers } => {
                let r2 = dist_sq(x, center, dim);
                let mut mono = T::one();
                for a in 0..dim {
                    for _ in 0..powers[a] {
                        mono = mono * (x[a] - center[a]);
                    }
                }
                Complex::new(mono * (-r2 / (lit::<T>(4.0) * *width)).exp(), T::zero())
            }
            FieldSpec::Bump { center, radius } => {
                let r2 = dist_sq(x, center, dim) / (*radius * *radius);
                Complex::new(bump_profile(r2), T::zero())
            }
            FieldSpec::Shell { center, r_inner, r_outer } => {
                let r = dist_sq(x, center, dim).sqrt();
                let mid = (*r_inner + *r_outer) / lit(2.0);
                let half = (*r_outer - *r_inner) / lit(2.0);
                let t = (r - mid) / half;
                Complex::new(bump_profile(t * t), T::zero())
            }
            FieldSpec::GaussianShell { center, radius, width } => {
                let r = dist_sq(x, center, dim).sqrt();
                let d = r - *radius;
                Complex::new((-d * d / (lit::<T>(4.0) * *width)).exp(), T::zero())
            }
            FieldSpec::Scale { factor, inner } => *factor * inner.eval(x, dim),
            FieldSpec::Sum { terms } => terms
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t.eval(x, dim)),
        }
    }

    /// Synthesized decay certificate (conservative across combinators).
    pub fn certificate(&self, dim: usize) -> DecayCertificate<T> {
        match self {
            FieldSpec::Gaussian { center, width } => {
                let n = lit::<T>(dim as f64);
                let four_pi_a = lit::<T>(4.0) * T::PI() * *width;
                let peak = four_pi_a.powf(-n / lit(2.0));
                // |x-c|^2 >= |x|^2/2 - |c|^2
                let c0 = point_norm(center, dim);
                let c = peak * (c0 * c0 / (lit::<T>(4.0) * *width)).exp();
                let rho = T::one() / (lit::<T>(8.0) * *width);
                DecayCertificate { c, rho, gamma: lit(2.0), zero_tail: false }
            }
            FieldSpec::MonomialGaussian { center, width, powers } => {
                // Polynomial growth is absorbed by halving rho once more.
                let c0 = point_norm(center, dim);
                let deg: u32 = powers.iter().take(dim).sum();
                let peak = (lit::<T>(4.0) * *width * lit(deg.max(1) as f64)).powf(lit(deg as f64 / 2.0));
                let c = peak * (c0 * c0 / (lit::<T>(2.0) * *width)).exp() * lit(4.0);
                let rho = T::one() / (lit::<T>(16.0) * *width);
                DecayCertificate { c, rho, gamma: lit(2.0), zero_tail: false }
            }
            FieldSpec::Bump { center, radius } => {
                DecayCertificate::compact(T::one(), point_norm(center, dim) + *radius)
            }
            FieldSpec::Shell { center, r_outer, .. } => {
                DecayCertificate::compact(T::one(), point_norm(center, dim) + *r_outer)
            }
            FieldSpec::GaussianShell { center, radius, width } => {
                // |x| >= r0 + |c| gives (|x - c| - radius)^2 >= (|x| - |c| - radius)^2;
                // absorb the shift into the constant as for offset Gaussians.
                let c0 = point_norm(center, dim) + *radius;
                let c = (c0 * c0 / (lit::<T>(4.0) * *width)).exp();
                DecayCertificate {
                    c,
                    rho: T::one() / (lit::<T>(8.0) * *width),
                    gamma: lit(2.0),
                    zero_tail: false,
                }
            }
            FieldSpec::Scale { factor, inner } => {
                let mut cert = inner.certificate(dim);
                cert.c = cert.c * factor.norm();
                cert
            }
            FieldSpec::Sum { terms } => {
                let certs: Vec<_> = terms.iter().map(|t| t.certificate(dim)).collect();
                let gamma = certs.iter().map(|c| c.gamma).fold(lit::<T>(f64::MAX), T::min);
                let rho = certs.iter().map(|c| c.rho).fold(lit::<T>(f64::MAX), T::min);
                let c = certs.iter().map(|c| c.c).fold(T::zero(), |a, b| a + b);
                let zero_tail = certs.iter().all(|c| c.zero_tail);
                DecayCertificate { c, rho, gamma, zero_tail }
            }
        }
    }
}

fn dist_sq<T: Scalar>(x: &Point<T>, c: &Point<T>, dim: usize) -> T {
    let mut s = T::zero();
    for a in 0..dim {
        let d = x[a] - c[a];
        s = s + d * d;
    }
    s
}

/// Standard C-infinity profile in the squared radial variable: value
/// `exp(1 - 1/(1 - t2))` for t2 < 1 and zero for t2 >= 1 (equals 1 at t2 = 0).
fn bump_profile<T: Scalar>(t2: T) -> T {
    if t2 >= T::one() {
        return T::zero();
    }
    (T::one() - T::one() / (T::one() - t2)).exp()
}

/// Complex-valued samples of a function on a grid.
#[derive(Clone, Debug)]
pub struct Field<T> {
    grid: GridSpec<T>,
    values: Vec<C<T>>,
    decay: Option<DecayCertificate<T>>,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<C<T>>, decay: Option<DecayCertificate<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(cert) = &decay {
            if !(cert.gamma > T::one()) || !(cert.rho > T::zero()) {
                return Err(Error::InvalidField("certificate requires gamma > 1, rho > 0".into()));
            }
        }
        Ok(Self { grid, values, decay })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); n], decay: None }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(&Point<T>) -> C<T>) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values, decay: None }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C<T>> {
        self.values
    }

    pub fn decay(&self) -> Option<&DecayCertificate<T>> {
        self.decay.as_ref()
    }

    pub fn set_decay(&mut self, cert: Option<DecayCertificate<T>>) {
        self.decay = cert;
    }

    pub fn value_at(&self, flat: usize) -> C<T> {
        self.values[flat]
    }

    /// Grid quadrature of the field: h^n * sum of samples.
    pub fn mass(&self) -> C<T> {
        let hv = self.grid.cell_volume();
        self.values
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, v| a + v)
            * Complex::new(hv, T::zero())
    }

    /// Discrete L1 norm h^n sum |u|.
    pub fn l1_norm(&self) -> T {
        let hv = self.grid.cell_volume();
        self.values.iter().fold(T::zero(), |a, v| a + v.norm()) * hv
    }

    /// Discrete L2 norm sqrt(h^n sum |u|^2).
    pub fn l2_norm(&self) -> T {
        let hv = self.grid.cell_volume();
        (self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr()) * hv).sqrt()
    }

    pub fn linf_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    pub fn scale(&mut self, factor: C<T>) {
        for v in &mut self.values {
            *v = *v * factor;
        }
        if let Some(cert) = &mut self.decay {
            cert.c = cert.c * factor.norm();
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Field<T>, factor: C<T>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidField("grid mismatch in field addition".into()));
        }
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a = *a + *b * factor;
        }
        self.decay = match (self.decay, other.decay) {
            (Some(x), Some(y)) => Some(DecayCertificate {
                c: x.c + y.c * factor.norm(),
                rho: x.rho.min(y.rho),
                gamma: x.gamma.min(y.gamma),
                zero_tail: x.zero_tail && y.zero_tail,
            }),
            _ => None,
        };
        Ok(())
    }
}

/// Samples an analytic descriptor on the grid.
///
/// Returns a truncation error if the descriptor's certified envelope at the
/// box boundary exceeds `boundary_tol` relative to its peak sample.
pub fn sample_analytic<T: Scalar>(grid: &GridSpec<T>, spec: &FieldSpec<T>) -> Result<Field<T>> {
    sample_analytic_tol(grid, spec, lit(1e-10))
}

pub fn sample_analytic_tol<T: Scalar>(
    grid: &GridSpec<T>,
    spec: &FieldSpec<T>,
    boundary_tol: T,
) -> Result<Field<T>> {
    spec.check(grid.dim())?;
    let dim = grid.dim();
    let values: Vec<C<T>> = (0..grid.len()).map(|i| spec.eval(&grid.node(i), dim)).collect();
    let cert = spec.certificate(dim);

    // The descriptor must be negligible on the box boundary, otherwise the
    // periodic surrogate misrepresents it.
    let peak = values.iter().fold(T::zero(), |a, v| a.max(v.norm())).max(lit(1e-300));
    let m = grid.points_per_axis();
    let mut boundary = T::zero();
    for (i, v) in values.iter().enumerate() {
        let mi = grid.multi_index(i);
        if (0..dim).any(|a| mi[a] == 0 || mi[a] == m - 1) {
            boundary = boundary.max(v.norm());
        }
    }
    if boundary > boundary_tol * peak {
        return Err(Error::Truncation {
            boundary: boundary.to_f64().unwrap_or(f64::NAN),
            tol: (boundary_tol * peak).to_f64().unwrap_or(f64::NAN),
        });
    }

    Field::new(*grid, values, Some(cert))
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"FRL1";

/// Writes the binary field snapshot: magic "FRL1", dim (u8), M (u32 LE),
/// L (f64 LE), certificate flag byte, then M^n interleaved (re, im) f64 LE.
///
/// The flag byte records only whether a decay certificate was present; the
/// certificate parameters themselves are not part of the format.
pub fn write_snapshot<T: Scalar>(field: &Field<T>, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot_to(field, &mut out)
}

pub fn write_snapshot_to<T: Scalar>(field: &Field<T>, out: &mut impl Write) -> Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&[field.grid().dim() as u8])?;
    out.write_all(&(field.grid().points_per_axis() as u32).to_le_bytes())?;
    out.write_all(&field.grid().half_width().to_f64().unwrap().to_le_bytes())?;
    let flag: u8 = match field.decay() {
        Some(c) if c.zero_tail => 2,
        Some(_) => 1,
        None => 0,
    };
    out.write_all(&[flag])?;
    for v in field.values() {
        out.write_all(&v.re.to_f64().unwrap().to_le_bytes())?;
        out.write_all(&v.im.to_f64().unwrap().to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field snapshot. The format does not persist certificate
/// parameters, so loaded fields carry no certificate regardless of the flag.
pub fn read_snapshot<T: Scalar>(path: &Path) -> Result<Field<T>> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    read_snapshot_from(&mut input)
}

pub fn read_snapshot_from<T: Scalar>(input: &mut impl Read) -> Result<Field<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut b1 = [0u8; 1];
    input.read_exact(&mut b1)?;
    let dim = b1[0] as usize;
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    input.read_exact(&mut b1)?;
    let _flag = b1[0];

    let grid = GridSpec::new(dim, lit::<T>(half_width), m)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        values.push(Complex::new(lit::<T>(re), lit::<T>(im)));
    }
    Field::new(grid, values, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(l: f64, m: usize) -> GridSpec<f64> {
        GridSpec::new(1, l, m).unwrap()
    }

    #[test]
    fn gaussian_value_at_origin_quarter_width() {
        // (4 pi / 4)^{-1/2} = pi^{-1/2}
        let g = grid1(8.0, 256);
        let spec = FieldSpec::gaussian([0.0, 0.0, 0.0], 0.25);
        let f = sample_analytic(&g, &spec).unwrap();
        let i0 = g.nearest_node(&[0.0, 0.0, 0.0]);
        assert!((f.value_at(i0).re - 0.5641895835477563).abs() < 1e-14);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let g = grid1(8.0, 128);
        let spec = FieldSpec::bump([0.0, 0.0, 0.0], 1.0);
        let f = sample_analytic(&g, &spec).unwrap();
        for i in 0..g.len() {
            let x = g.node(i);
            if x[0].abs() >= 1.0 {
                assert_eq!(f.value_at(i).re, 0.0);
            }
        }
        assert!(f.decay().unwrap().zero_tail);
    }

    #[test]
    fn gaussian_mass_is_one_2d() {
        let g = GridSpec::<f64>::new(2, 12.0, 256).unwrap();
        let f = sample_analytic(&g, &FieldSpec::gaussian([0.0; 3], 1.0)).unwrap();
        assert!((f.mass().re - 1.0).abs() < 1e-10);
        assert!(f.mass().im.abs() < 1e-14);
    }

    #[test]
    fn oversized_descriptor_is_rejected() {
        let g = grid1(2.0, 64);
        // Width-4 Gaussian on a half-width-2 box: boundary value is large.
        let spec = FieldSpec::gaussian([0.0; 3], 4.0);
        match sample_analytic(&g, &spec) {
            Err(Error::Truncation { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let g = GridSpec::<f64>::new(2, 6.0, 16).unwrap();
        let f =
            sample_analytic_tol(&g, &FieldSpec::gaussian([0.5, -0.25, 0.0], 0.25), 1e-6).unwrap();
        let mut buf = Vec::new();
        write_snapshot_to(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FRL1");
        assert_eq!(buf.len(), 4 + 1 + 4 + 8 + 1 + 16 * f.values().len());
        let g2 = read_snapshot_from::<f64>(&mut buf.as_slice()).unwrap();
        assert_eq!(g2.grid(), f.grid());
        for (a, b) in f.values().iter().zip(g2.values()) {
            assert_eq!(a, b);
        }
        assert!(g2.decay().is_none());
    }
}
