//! Entanglement scenarios: a family of fields {v_k}, all vanishing on the
//! open set O, with distinct fractional orders {alpha_k} in (0,1) and a
//! fixed evaluation point x in omega. Also the least-squares projection that
//! enforces the scenario constraint for test fixtures.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{GridSpec, Point};
use crate::linalg::{cholesky_factor, cholesky_solve, CMat};
use crate::region::{RegionSpec, SetSpec};
use crate::scalar::{lit, Scalar, C};
use crate::spectral::frac_lap_fourier;

/// Numerical tolerance on "v vanishes on O" relative to the field peak.
const VANISH_TOL: f64 = 1e-7;
/// Minimum admissible pairwise separation of the fractional parts.
const ALPHA_SEP_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Scenario<T> {
    fields: Vec<Field<T>>,
    alphas: Vec<T>,
    region: RegionSpec<T>,
    x: Point<T>,
    hypothesis_override: bool,
}

impl<T: Scalar> Scenario<T> {
    /// Validates and builds a scenario. With `hypothesis_override` the
    /// odd-dimension half-integer separation rule (and alpha coincidences)
    /// may be violated deliberately, for demonstrations.
    pub fn new(
        fields: Vec<Field<T>>,
        alphas: Vec<T>,
        region: RegionSpec<T>,
        x: Point<T>,
        hypothesis_override: bool,
    ) -> Result<Self> {
        if fields.is_empty() || fields.len() != alphas.len() {
            return Err(Error::Precondition(
                "scenario requires matching, nonempty field and exponent lists".into(),
            ));
        }
        let grid = *fields[0].grid();
        for f in &fields {
            if f.grid() != &grid {
                return Err(Error::Precondition("all scenario fields must share one grid".into()));
            }
        }
        let dim = grid.dim();
        for &a in &alphas {
            if !(a > T::zero() && a < T::one()) {
                return Err(Error::InvalidExponents(format!(
                    "fractional parts must lie in (0,1), got {a}"
                )));
            }
        }
        let mut violated = Vec::new();
        for j in 0..alphas.len() {
            for k in (j + 1)..alphas.len() {
                let d = (alphas[k] - alphas[j]).abs();
                if d < lit(ALPHA_SEP_TOL) {
                    violated.push(((j, k), format!("alpha_{} = alpha_{}", j + 1, k + 1)));
                }
                if dim % 2 == 1 && (d - lit(0.5)).abs() < lit(ALPHA_SEP_TOL) {
                    violated.push((
                        (j, k),
                        format!("|alpha_{} - alpha_{}| = 1/2 in odd dimension", j + 1, k + 1),
                    ));
                }
            }
        }
        if !violated.is_empty() && !hypothesis_override {
            return Err(Error::HypothesisViolation {
                pairs: violated.iter().map(|(p, _)| *p).collect(),
                detail: violated
                    .iter()
                    .map(|(_, d)| d.clone())
                    .collect::<Vec<_>>()
                    .join("; "),
            });
        }

        if !region.omega.contains(&x, dim) {
            return Err(Error::Precondition("evaluation point must lie in omega".into()));
        }
        for (k, f) in fields.iter().enumerate() {
            let peak = f.linf_norm();
            if peak > T::zero() {
                let sup = region.sup_on_o(f);
                if sup > lit::<T>(VANISH_TOL) * peak {
                    return Err(Error::Precondition(format!(
                        "field {} does not vanish on O: sup_O = {} vs peak {}",
                        k + 1,
                        sup,
                        peak
                    )));
                }
            }
        }

        Ok(Self { fields, alphas, region, x, hypothesis_override })
    }

    pub fn fields(&self) -> &[Field<T>] {
        &self.fields
    }

    pub fn field(&self, k: usize) -> &Field<T> {
        &self.fields[k]
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn region(&self) -> &RegionSpec<T> {
        &self.region
    }

    pub fn x(&self) -> &Point<T> {
        &self.x
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.fields[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn hypothesis_overridden(&self) -> bool {
        self.hypothesis_override
    }

    /// Replaces the k-th field after re-checking the vanishing condition.
    pub fn with_field(&self, k: usize, field: Field<T>) -> Result<Self> {
        let mut fields = self.fields.clone();
        fields[k] = field;
        Scenario::new(
            fields,
            self.alphas.clone(),
            self.region.clone(),
            self.x,
            self.hypothesis_override,
        )
    }

    /// The constraint field W = sum_k (-Delta)^{alpha_k} v_k and its sup over
    /// the O nodes (the constraint violation delta).
    pub fn constraint_residual(&self) -> Result<(Field<T>, T)> {
        let mut w = Field::zeros(*self.grid());
        for (f, &a) in self.fields.iter().zip(&self.alphas) {
            let term = frac_lap_fourier(f, a)?;
            w.add_assign_scaled(&term, Complex::new(T::one(), T::zero()))?;
        }
        let delta = self.region.sup_on_o(&w);
        Ok((w, delta))
    }
}

/// Enforces the scenario constraint sum_k (-Delta)^{alpha_k} v_k = 0 on the
/// O nodes by a minimum-norm least-squares correction of the last field,
/// supported on `correction_set`. A test-fixture device: it manufactures
/// scenarios that satisfy the constraint to a prescribed level.
///
/// Returns the achieved constraint sup on O.
pub fn project_constraint<T: Scalar>(
    fields: &mut [Field<T>],
    alphas: &[T],
    region: &RegionSpec<T>,
    correction_set: &SetSpec<T>,
    ridge: T,
) -> Result<T> {
    if fields.is_empty() || fields.len() != alphas.len() {
        return Err(Error::Precondition("projection needs matching field/exponent lists".into()));
    }
    let grid = *fields[0].grid();
    let dim = grid.dim();

    // Current constraint field.
    let mut w = Field::zeros(grid);
    for (f, &a) in fields.iter().zip(alphas) {
        let term = frac_lap_fourier(f, a)?;
        w.add_assign_scaled(&term, Complex::new(T::one(), T::zero()))?;
    }

    let o_nodes = region.o_nodes(&grid);
    let r_nodes: Vec<usize> = correction_set
        .nodes(&grid)
        .into_iter()
        .filter(|i| !region.o_set.contains(&grid.node(*i), dim))
        .collect();
    if o_nodes.is_empty() || r_nodes.is_empty() {
        return Err(Error::Precondition("projection needs nonempty O and correction node sets".into()));
    }

    // Stencil of (-Delta)^{alpha_N} applied to the nodal delta; by
    // translation invariance the coupling matrix is a gather of it.
    let alpha_n = *alphas.last().unwrap();
    let mut delta0 = Field::zeros(grid);
    delta0.values_mut()[0] = Complex::new(T::one(), T::zero());
    let stencil = frac_lap_fourier(&delta0, alpha_n)?;

    let m = grid.points_per_axis();
    let wrap = |oi: usize, rj: usize| -> usize {
        let a = grid.multi_index(oi);
        let b = grid.multi_index(rj);
        let mut d = [0usize; 3];
        for ax in 0..dim {
            d[ax] = (a[ax] + m - b[ax]) % m;
        }
        grid.flat_index(d)
    };

    let a_mat = CMat::from_fn(o_nodes.len(), r_nodes.len(), |i, j| {
        stencil.value_at(wrap(o_nodes[i], r_nodes[j]))
    });
    let rhs: Vec<C<T>> = o_nodes.iter().map(|&i| -w.value_at(i)).collect();

    // Minimum-norm solution via the small Gram system (A A^H + ridge I).
    let no = o_nodes.len();
    let mut gram = CMat::zeros(no, no);
    for i in 0..no {
        for j in 0..no {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..r_nodes.len() {
                acc = acc + a_mat.get(i, k) * a_mat.get(j, k).conj();
            }
            if i == j {
                acc = acc + Complex::new(ridge, T::zero());
            }
            gram.set(i, j, acc);
        }
    }
    let l = cholesky_factor(&gram)?;
    let mu = cholesky_solve(&l, &rhs);
    // c = A^H mu
    let mut corr = vec![Complex::new(T::zero(), T::zero()); r_nodes.len()];
    for i in 0..no {
        for (j, c) in corr.iter_mut().enumerate() {
            *c = *c + a_mat.get(i, j).conj() * mu[i];
        }
    }

    let last = fields.len() - 1;
    for (j, &node) in r_nodes.iter().enumerate() {
        let v = fields[last].value_at(node) + corr[j];
        fields[last].values_mut()[node] = v;
    }
    // The correction is not smooth, so the certificate no longer applies as
    // fitted; keep a conservative compact-style certificate for the box.
    let peak = fields[last].linf_norm();
    fields[last].set_decay(Some(crate::field::DecayCertificate::compact(
        peak,
        grid.half_width() * lit(1.8),
    )));

    let mut w2 = Field::zeros(grid);
    for (f, &a) in fields.iter().zip(alphas) {
        let term = frac_lap_fourier(f, a)?;
        w2.add_assign_scaled(&term, Complex::new(T::one(), T::zero()))?;
    }
    Ok(region.sup_on_o(&w2))
}
