//! Uniform tensor grids on the truncated box `[-L, L]^n` with the matching
//! discrete frequency set `(pi/L) * {-M/2, ..., M/2 - 1}` per axis.

use crate::error::{Error, Result};
use crate::scalar::{lit, lit_usize, Scalar};

/// Points are carried as fixed 3-vectors; axes beyond the grid dimension are
/// zero and ignored.
pub type Point<T> = [T; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    dim: usize,
    half_width: T,
    points_per_axis: usize,
}

impl<T: Scalar> GridSpec<T> {
    /// `dim` in 1..=3, `points_per_axis` a power of two >= 8, `half_width > 0`.
    ///
    /// With a power-of-two axis count the relation `h * M == 2L` is exact in
    /// floating point (division by M only shifts the exponent).
    pub fn new(dim: usize, half_width: T, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1..=3, got {dim}")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid("half_width must be positive and finite".into()));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self { dim, half_width, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing h = 2L / M.
    pub fn spacing(&self) -> T {
        (self.half_width + self.half_width) / lit_usize(self.points_per_axis)
    }

    /// Total number of nodes M^n.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element h^n.
    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        let mut v = h;
        for _ in 1..self.dim {
            v = v * h;
        }
        v
    }

    /// Signed index in {-M/2, ..., M/2 - 1} for FFT bin `i`.
    #[inline]
    pub fn signed_index(&self, i: usize) -> isize {
        let m = self.points_per_axis;
        if i < m / 2 {
            i as isize
        } else {
            i as isize - m as isize
        }
    }

    /// Physical coordinate of axis index `i`: x = -L + i h.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.half_width + self.spacing() * lit_usize(i)
    }

    /// Discrete frequency of axis index `i`: xi = (pi/L) * signed(i).
    #[inline]
    pub fn freq(&self, i: usize) -> T {
        let s = self.signed_index(i);
        T::PI() / self.half_width * lit(s as f64)
    }

    /// Largest frequency magnitude present on the grid (Nyquist): pi M / (2L).
    pub fn nyquist(&self) -> T {
        T::PI() / self.half_width * lit_usize(self.points_per_axis / 2)
    }

    /// Decomposes a flat index into per-axis indices (unused axes are zero).
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        match self.dim {
            1 => [flat, 0, 0],
            2 => [flat / m, flat % m, 0],
            _ => [flat / (m * m), (flat / m) % m, flat % m],
        }
    }

    /// Flat index of per-axis indices.
    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let m = self.points_per_axis;
        match self.dim {
            1 => idx[0],
            2 => idx[0] * m + idx[1],
            _ => (idx[0] * m + idx[1]) * m + idx[2],
        }
    }

    /// Node coordinates for a flat index.
    #[inline]
    pub fn node(&self, flat: usize) -> Point<T> {
        let mi = self.multi_index(flat);
        let mut p = [T::zero(); 3];
        for a in 0..self.dim {
            p[a] = self.coord(mi[a]);
        }
        p
    }

    /// Frequency vector for a flat index.
    #[inline]
    pub fn freq_vec(&self, flat: usize) -> Point<T> {
        let mi = self.multi_index(flat);
        let mut p = [T::zero(); 3];
        for a in 0..self.dim {
            p[a] = self.freq(mi[a]);
        }
        p
    }

    /// |xi|^2 for a flat index.
    #[inline]
    pub fn freq_sq(&self, flat: usize) -> T {
        let f = self.freq_vec(flat);
        let mut q = T::zero();
        for a in 0..self.dim {
            q = q + f[a] * f[a];
        }
        q
    }

    /// Sign carried by mode `flat` when the DFT spectrum is read as a
    /// Fourier series exp(i xi . x) in box coordinates: the grid origin sits
    /// at -L, so each axis contributes (-1)^{signed index}.
    #[inline]
    pub fn mode_parity(&self, flat: usize) -> T {
        let mi = self.multi_index(flat);
        let mut s: isize = 0;
        for a in 0..self.dim {
            s += self.signed_index(mi[a]);
        }
        if s.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Flat index of the grid node nearest to `x` (coordinates clamped into
    /// the box).
    pub fn nearest_node(&self, x: &Point<T>) -> usize {
        let h = self.spacing();
        let m = self.points_per_axis;
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            let rel = (x[a] + self.half_width) / h;
            let i = rel.round().to_f64().unwrap_or(0.0).max(0.0) as usize;
            idx[a] = i.min(m - 1);
        }
        self.flat_index(idx)
    }

    /// Euclidean distance between two points in the first `dim` axes.
    pub fn distance(&self, a: &Point<T>, b: &Point<T>) -> T {
        let mut s = T::zero();
        for ax in 0..self.dim {
            let d = a[ax] - b[ax];
            s = s + d * d;
        }
        s.sqrt()
    }

    /// Wrapped (periodic, minimum-image) displacement of node coordinates.
    pub fn min_image(&self, d: T) -> T {
        let period = self.half_width + self.half_width;
        let mut x = d;
        while x < -self.half_width {
            x = x + period;
        }
        while x >= self.half_width {
            x = x - period;
        }
        x
    }
}

/// Euclidean norm of the active components of a point.
pub fn point_norm<T: Scalar>(p: &Point<T>, dim: usize) -> T {
    let mut s = T::zero();
    for a in 0..dim {
        s = s + p[a] * p[a];
    }
    s.sqrt()
}

/// Builds a point from a slice, zero-padding unused axes.
pub fn point_from_slice<T: Scalar>(coords: &[T]) -> Point<T> {
    let mut p = [T::zero(); 3];
    for (a, &c) in coords.iter().take(3).enumerate() {
        p[a] = c;
    }
    p
}
