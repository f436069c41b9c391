//! Open-set descriptors (unions of balls and axis-aligned boxes) and the
//! region pair (O, omega) with its kappa separation margin. Membership and
//! margins are evaluated at grid nodes; there is no sub-cell geometry.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point};
use crate::scalar::{lit, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec<T> {
    Ball { center: Point<T>, radius: T },
    Box { min: Point<T>, max: Point<T> },
    Union(Vec<SetSpec<T>>),
}

impl<T: Scalar> SetSpec<T> {
    pub fn ball(center: Point<T>, radius: T) -> Self {
        SetSpec::Ball { center, radius }
    }

    pub fn axis_box(min: Point<T>, max: Point<T>) -> Self {
        SetSpec::Box { min, max }
    }

    pub fn contains(&self, x: &Point<T>, dim: usize) -> bool {
        match self {
            SetSpec::Ball { center, radius } => {
                let mut r2 = T::zero();
                for a in 0..dim {
                    let d = x[a] - center[a];
                    r2 = r2 + d * d;
                }
                r2 < *radius * *radius
            }
            SetSpec::Box { min, max } => (0..dim).all(|a| x[a] > min[a] && x[a] < max[a]),
            SetSpec::Union(parts) => parts.iter().any(|p| p.contains(x, dim)),
        }
    }

    /// Lower bound on dist(x, complement of the set); zero outside.
    ///
    /// For a union the maximum over members is a valid lower bound since the
    /// complement of the union lies inside each member's complement.
    pub fn interior_distance(&self, x: &Point<T>, dim: usize) -> T {
        match self {
            SetSpec::Ball { center, radius } => {
                let mut r2 = T::zero();
                for a in 0..dim {
                    let d = x[a] - center[a];
                    r2 = r2 + d * d;
                }
                (*radius - r2.sqrt()).max(T::zero())
            }
            SetSpec::Box { min, max } => {
                let mut dist = lit::<T>(f64::MAX);
                for a in 0..dim {
                    dist = dist.min(x[a] - min[a]).min(max[a] - x[a]);
                }
                dist.max(T::zero())
            }
            SetSpec::Union(parts) => parts
                .iter()
                .map(|p| p.interior_distance(x, dim))
                .fold(T::zero(), T::max),
        }
    }

    /// Erosion: shrinks the set by `eps` (conservatively, member-wise).
    pub fn erode(&self, eps: T) -> SetSpec<T> {
        match self {
            SetSpec::Ball { center, radius } => SetSpec::Ball {
                center: *center,
                radius: (*radius - eps).max(T::zero()),
            },
            SetSpec::Box { min, max } => {
                let mut lo = *min;
                let mut hi = *max;
                for a in 0..3 {
                    lo[a] = lo[a] + eps;
                    hi[a] = hi[a] - eps;
                }
                SetSpec::Box { min: lo, max: hi }
            }
            SetSpec::Union(parts) => SetSpec::Union(parts.iter().map(|p| p.erode(eps)).collect()),
        }
    }

    /// Flat indices of the grid nodes inside the set.
    pub fn nodes(&self, grid: &GridSpec<T>) -> Vec<usize> {
        (0..grid.len())
            .filter(|&i| self.contains(&grid.node(i), grid.dim()))
            .collect()
    }

    /// Axis-aligned bounding box of the set.
    pub fn bounding_box(&self, dim: usize) -> (Point<T>, Point<T>) {
        match self {
            SetSpec::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for a in 0..dim {
                    lo[a] = lo[a] - *radius;
                    hi[a] = hi[a] + *radius;
                }
                (lo, hi)
            }
            SetSpec::Box { min, max } => (*min, *max),
            SetSpec::Union(parts) => {
                let mut lo = [lit::<T>(f64::MAX); 3];
                let mut hi = [lit::<T>(f64::MIN); 3];
                for p in parts {
                    let (plo, phi) = p.bounding_box(dim);
                    for a in 0..dim {
                        lo[a] = lo[a].min(plo[a]);
                        hi[a] = hi[a].max(phi[a]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// The standing geometry of an entanglement scenario: omega compactly inside
/// O with dist(closure(omega), complement of O) >= 2 kappa.
#[derive(Clone, Debug)]
pub struct RegionSpec<T> {
    pub o_set: SetSpec<T>,
    pub omega: SetSpec<T>,
    pub kappa: T,
}

impl<T: Scalar> RegionSpec<T> {
    /// Validates the declared margin on the grid: every omega node must sit
    /// inside O at interior distance at least 2 kappa.
    pub fn new(grid: &GridSpec<T>, o_set: SetSpec<T>, omega: SetSpec<T>, kappa: T) -> Result<Self> {
        if !(kappa > T::zero() && kappa < T::one()) {
            return Err(Error::Precondition(format!("kappa must lie in (0,1), got {kappa}")));
        }
        let dim = grid.dim();
        let omega_nodes = omega.nodes(grid);
        if omega_nodes.is_empty() {
            return Err(Error::Precondition("omega contains no grid nodes".into()));
        }
        let two_kappa = kappa + kappa;
        for &i in &omega_nodes {
            let x = grid.node(i);
            if !o_set.contains(&x, dim) {
                return Err(Error::Precondition(format!(
                    "omega node {:?} lies outside O",
                    &x[..dim]
                )));
            }
            let d = o_set.interior_distance(&x, dim);
            if d < two_kappa {
                return Err(Error::MarginViolation(format!(
                    "omega node {:?} has interior distance {} < 2 kappa = {}",
                    &x[..dim],
                    d,
                    two_kappa
                )));
            }
        }
        Ok(Self { o_set, omega, kappa })
    }

    /// Region for mollified scenarios: O eroded by eps, with the matching
    /// reduced margin kappa - eps/2.
    pub fn eroded(&self, grid: &GridSpec<T>, eps: T) -> Result<RegionSpec<T>> {
        let half = eps / lit(2.0);
        RegionSpec::new(grid, self.o_set.erode(eps), self.omega.clone(), self.kappa - half)
    }

    /// Admissible mollifier margin for this region.
    pub fn mollify_margin(&self) -> T {
        self.kappa
    }

    pub fn omega_nodes(&self, grid: &GridSpec<T>) -> Vec<usize> {
        self.omega.nodes(grid)
    }

    pub fn o_nodes(&self, grid: &GridSpec<T>) -> Vec<usize> {
        self.o_set.nodes(grid)
    }

    /// Max |v| over the O nodes, the numerical notion of "v vanishes on O".
    pub fn sup_on_o(&self, field: &crate::field::Field<T>) -> T {
        let grid = field.grid();
        self.o_set
            .nodes(grid)
            .into_iter()
            .fold(T::zero(), |acc, i| acc.max(field.value_at(i).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_validation() {
        let grid = GridSpec::<f64>::new(2, 8.0, 64).unwrap();
        let o = SetSpec::ball([0.0; 3], 2.0);
        let omega = SetSpec::ball([0.0; 3], 0.5);
        // interior distance from omega nodes >= 2 - (0.5) = 1.5 >= 2*0.7
        assert!(RegionSpec::new(&grid, o.clone(), omega.clone(), 0.7).is_ok());
        // 2 kappa = 1.9 > 1.5 fails
        assert!(RegionSpec::new(&grid, o, omega, 0.95).is_err());
    }

    #[test]
    fn union_interior_distance_is_conservative() {
        let s = SetSpec::Union(vec![
            SetSpec::ball([0.0; 3], 1.0),
            SetSpec::ball([1.5, 0.0, 0.0], 1.0),
        ]);
        let d = s.interior_distance(&[0.75, 0.0, 0.0], 2);
        assert!(d >= 0.25 - 1e-12);
    }

    #[test]
    fn erode_shrinks_membership() {
        let s = SetSpec::ball([0.0; 3], 1.0);
        let e = s.erode(0.25);
        assert!(s.contains(&[0.9, 0.0, 0.0], 1));
        assert!(!e.contains(&[0.9, 0.0, 0.0], 1));
    }

    #[test]
    fn omega_outside_o_is_rejected() {
        let grid = GridSpec::<f64>::new(1, 4.0, 64).unwrap();
        let o = SetSpec::ball([0.0; 3], 1.0);
        let omega = SetSpec::ball([2.0, 0.0, 0.0], 0.3);
        assert!(RegionSpec::new(&grid, o, omega, 0.2).is_err());
    }
}
