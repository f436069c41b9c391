//! The Gamma-weighted Mellin transform of a scenario's heat traces:
//! holomorphic on the right half-plane in its heat-trace form, meromorphic
//! on all of C in its power-kernel form, with the integer-vanishing check
//! and growth-rate diagnostics used by the analytic-interpolation argument.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::gamma::log_gamma;
use crate::grid::{point_norm, Point};
use crate::heat::{KernelWeights, MellinEvaluator};
use crate::quadrature::{QuadValue, TimeQuadrature};
use crate::scalar::{lit, Scalar, C};
use crate::scenario::Scenario;
use crate::spectral::laplacian_power;

/// Evaluations are capped at this modulus to keep Gamma-scale dynamic range
/// within double precision.
const Z_CAP: f64 = 40.0;
/// Pole-proximity guard for the meromorphic form.
const POLE_GUARD: f64 = 1e-6;

/// Value of the transform together with its quadrature error estimate.
pub type FValue<T> = QuadValue<T>;

/// Evaluator bound to one scenario and one quadrature: caches the per-term
/// heat traces and spatial kernels.
pub struct FEvaluator<T: Scalar> {
    alphas: Vec<T>,
    dim: usize,
    mellins: Vec<MellinEvaluator<T>>,
    kernels: Vec<KernelWeights<T>>,
    /// -(log Gamma(-alpha_k) + log Gamma(1 + alpha_k)) per term
    const_logs: Vec<C<T>>,
    /// constraint field W = sum_k (-Delta)^{alpha_k} v_k
    constraint: Field<T>,
    /// sup of |W| over the O nodes
    delta: T,
    x: Point<T>,
}

impl<T: Scalar> FEvaluator<T> {
    pub fn new(sc: &Scenario<T>, quad: &TimeQuadrature<T>) -> Result<Self> {
        let grid = sc.grid();
        let dim = grid.dim();
        let x = *sc.x();

        let mut mellins = Vec::with_capacity(sc.len());
        let mut kernels = Vec::with_capacity(sc.len());
        let mut const_logs = Vec::with_capacity(sc.len());
        for (k, v) in sc.fields().iter().enumerate() {
            mellins.push(MellinEvaluator::new(v, x, sc.region(), *quad)?);
            kernels.push(KernelWeights::build(v, &x, Some(sc.region())));
            let a = sc.alphas()[k];
            let lg = log_gamma(Complex::new(-a, T::zero()))?
                + log_gamma(Complex::new(T::one() + a, T::zero()))?;
            const_logs.push(-lg);
        }
        let (constraint, delta) = sc.constraint_residual()?;
        Ok(Self {
            alphas: sc.alphas().to_vec(),
            dim,
            mellins,
            kernels,
            const_logs,
            constraint,
            delta,
            x,
        })
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Constraint violation sup_O |sum_k (-Delta)^{alpha_k} v_k|.
    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn mellin(&self, k: usize) -> &MellinEvaluator<T> {
        &self.mellins[k]
    }

    fn check_cap(z: C<T>) -> Result<()> {
        if z.norm() > lit(Z_CAP) {
            return Err(Error::Domain(format!(
                "|z| = {} exceeds the evaluation cap {Z_CAP}",
                z.norm()
            )));
        }
        Ok(())
    }

    /// Heat-trace form, holomorphic for Re z >= 0:
    /// F(z) = sum_k Gamma(z+1+alpha_k) / (Gamma(-alpha_k) Gamma(1+alpha_k)) G_k(z).
    pub fn f_right(&self, z: C<T>) -> Result<FValue<T>> {
        Self::check_cap(z)?;
        if z.re < T::zero() {
            return Err(Error::Domain(
                "heat-trace form needs Re z >= 0; use the meromorphic kernel form".into(),
            ));
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut err = T::zero();
        for k in 0..self.alphas.len() {
            let a = self.alphas[k];
            let g = self.mellins[k].g(z, a)?;
            if g.value.norm() == T::zero() {
                err = err + g.error_estimate;
                continue;
            }
            let pref = log_gamma(z + Complex::new(T::one() + a, T::zero()))? + self.const_logs[k];
            acc = acc + (pref + g.value.ln()).exp();
            err = err + g.error_estimate;
        }
        Ok(QuadValue { value: acc, error_estimate: err, level: 1 })
    }

    /// Location-aware distance to the nearest pole of the meromorphic form.
    pub fn pole_distance(&self, z: C<T>) -> (T, T, u8) {
        let mut best = lit::<T>(f64::MAX);
        let mut best_loc = T::zero();
        let mut order = 0u8;
        let half_n = lit::<T>(self.dim as f64) / lit(2.0);
        for &a in &self.alphas {
            // Pole families: z = -(1+alpha) - m and z = -(n/2+alpha) - m.
            for family in 0..2 {
                let offset = if family == 0 { T::one() + a } else { half_n + a };
                // Nearest m >= 0 for this family.
                let m_est = (-z.re - offset).max(T::zero()).round();
                for dm in [-T::one(), T::zero(), T::one()] {
                    let m = (m_est + dm).max(T::zero());
                    let loc = -offset - m;
                    let d = ((z.re - loc) * (z.re - loc) + z.im * z.im).sqrt();
                    if d < best {
                        best = d;
                        best_loc = loc;
                        order = self.pole_order_at(loc);
                    }
                }
            }
        }
        (best, best_loc, order)
    }

    fn pole_order_at(&self, loc: T) -> u8 {
        let half_n = lit::<T>(self.dim as f64) / lit(2.0);
        let tol = lit::<T>(1e-9);
        let mut order = 0u8;
        for &a in &self.alphas {
            for offset in [T::one() + a, half_n + a] {
                let m = -loc - offset;
                if m >= -tol && (m - m.round()).abs() < tol {
                    order += 1;
                }
            }
        }
        order
    }

    /// Meromorphic kernel form, valid on all of C away from the poles:
    /// F(z) = sum_k 4^{alpha_k+z} pi^{-n/2}
    ///        Gamma(z+1+alpha_k) Gamma(z+n/2+alpha_k)
    ///        / (Gamma(-alpha_k) Gamma(1+alpha_k)) * I_k(z).
    pub fn f_mero(&self, z: C<T>) -> Result<C<T>> {
        Self::check_cap(z)?;
        let (dist, loc, order) = self.pole_distance(z);
        if dist < lit(POLE_GUARD) {
            return Err(Error::PoleProximity {
                z_re: z.re.to_f64().unwrap_or(f64::NAN),
                z_im: z.im.to_f64().unwrap_or(f64::NAN),
                pole_re: loc.to_f64().unwrap_or(f64::NAN),
                dist: dist.to_f64().unwrap_or(f64::NAN),
                order,
            });
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..self.alphas.len() {
            acc = acc + self.f_mero_term(k, z)?;
        }
        Ok(acc)
    }

    /// Single term of the meromorphic form (no pole guard; used by the
    /// residue ladder and the mixing demonstrations).
    pub fn f_mero_term(&self, k: usize, z: C<T>) -> Result<C<T>> {
        let a = self.alphas[k];
        let n = lit::<T>(self.dim as f64);
        let half_n = n / lit(2.0);
        let kernel_exp = Complex::new(n + a + a, T::zero()) + z + z;
        let kernel = self.kernels[k].power_integral(kernel_exp);
        if kernel.norm() == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let log4 = lit::<T>(4.0f64.ln());
        let logpi = T::PI().ln();
        let pref = (z + Complex::new(a, T::zero())) * log4
            - Complex::new(half_n * logpi, T::zero())
            + log_gamma(z + Complex::new(T::one() + a, T::zero()))?
            + log_gamma(z + Complex::new(half_n + a, T::zero()))?
            + self.const_logs[k];
        Ok((pref + kernel.ln()).exp())
    }

    /// Spatial kernel integral I_k(z) alone.
    pub fn kernel_integral(&self, k: usize, z: C<T>) -> C<T> {
        let a = self.alphas[k];
        let n = lit::<T>(self.dim as f64);
        self.kernels[k].power_integral(Complex::new(n + a + a, T::zero()) + z + z)
    }

    /// |F(m)| at positive integers, with the spectrally computed oracle
    /// Delta^m W evaluated at x (W the constraint field) and its sup over O
    /// as the delta-proportional bound.
    pub fn check_integers(&self, m_max: u32, o_nodes: &[usize]) -> Result<IntegerCheck<T>> {
        let mut rows = Vec::new();
        let grid = *self.constraint.grid();
        let x_node = grid.nearest_node(&self.x);
        for m in 1..=m_max {
            let f = self.f_right(Complex::new(lit(m as f64), T::zero()))?;
            let lap_m = laplacian_power(&self.constraint, m)?;
            let oracle = lap_m.value_at(x_node);
            let bound = o_nodes
                .iter()
                .fold(T::zero(), |acc, &i| acc.max(lap_m.value_at(i).norm()));
            rows.push(IntegerRow {
                m,
                value: f.value,
                magnitude: f.value.norm(),
                oracle,
                bound,
            });
        }
        let observed_constant = rows
            .iter()
            .map(|r| r.magnitude / self.delta.max(lit(1e-300)))
            .fold(T::zero(), T::max);
        Ok(IntegerCheck { rows, delta: self.delta, observed_constant })
    }

    /// Empirical growth-rate estimates over finite windows, compared against
    /// the interpolation-theorem envelopes (report only, no claim of proof).
    pub fn growth_diagnostics(&self) -> Result<GrowthDiagnostics<T>> {
        let floor = lit::<T>(1e-280);
        let mut imag_axis = Vec::new();
        let mut below_floor = true;
        for bi in (-30i32..=30).filter(|b| b.unsigned_abs() >= 20) {
            let b = lit::<T>(bi as f64);
            let f = self.f_right(Complex::new(T::zero(), b))?;
            let mag = f.value.norm();
            if mag > floor {
                below_floor = false;
            }
            imag_axis.push((b, mag.max(floor).ln()));
        }
        let imag_estimate = imag_axis
            .iter()
            .map(|&(b, lnf)| lnf / (T::PI() * b.abs()))
            .fold(lit::<T>(f64::NEG_INFINITY), T::max);

        let mut real_axis = Vec::new();
        for ai in 20..=30 {
            let a = lit::<T>(ai as f64);
            let f = self.f_right(Complex::new(a, T::zero()))?;
            let mag = f.value.norm();
            if mag > floor {
                below_floor = false;
            }
            real_axis.push((a, mag.max(floor).ln()));
        }
        let real_estimate = real_axis
            .iter()
            .map(|&(a, lnf)| lnf / (lit::<T>(2.0) * a * a.ln()))
            .fold(lit::<T>(f64::NEG_INFINITY), T::max);

        // Quarter-circle of radius 30 in the right half-plane.
        let eps = lit::<T>(0.5);
        let mut ring = Vec::new();
        for j in 0..=8 {
            let theta = lit::<T>(j as f64 / 8.0 - 0.5) * T::PI() * lit(0.96);
            let z = Complex::from_polar(lit::<T>(30.0), theta);
            let f = self.f_right(z)?;
            let mag = f.value.norm();
            if mag > floor {
                below_floor = false;
            }
            ring.push((z, mag.max(floor).ln()));
        }
        let ring_estimate = ring
            .iter()
            .map(|&(z, lnf)| lnf / z.norm().powf(lit::<T>(2.0) - eps))
            .fold(lit::<T>(f64::NEG_INFINITY), T::max);

        Ok(GrowthDiagnostics {
            imag_axis,
            imag_estimate,
            real_axis,
            real_estimate,
            ring,
            ring_estimate,
            modulus_epsilon: eps,
            below_floor,
        })
    }

    /// Grid point of the evaluation point x.
    pub fn x(&self) -> &Point<T> {
        &self.x
    }

    /// Largest sample radius present in the kernels (diagnostics).
    pub fn max_kernel_radius(&self) -> T {
        self.kernels
            .iter()
            .map(|k| k.r_max())
            .fold(T::zero(), T::max)
    }

    pub fn point_norm(&self) -> T {
        point_norm(&self.x, self.dim)
    }
}

#[derive(Clone, Debug)]
pub struct IntegerRow<T> {
    pub m: u32,
    pub value: C<T>,
    pub magnitude: T,
    /// (Delta^m W)(x) computed spectrally, the independent route to F(m).
    pub oracle: C<T>,
    /// sup over O nodes of |Delta^m W|, the delta-proportional bound.
    pub bound: T,
}

#[derive(Clone, Debug)]
pub struct IntegerCheck<T> {
    pub rows: Vec<IntegerRow<T>>,
    pub delta: T,
    pub observed_constant: T,
}

impl<T: Scalar> IntegerCheck<T> {
    /// All residuals within `factor` times their bound (or the floor).
    pub fn passes(&self, factor: T, floor: T) -> bool {
        self.rows
            .iter()
            .all(|r| r.magnitude <= (r.bound * factor).max(floor))
    }

    pub fn max_magnitude(&self) -> T {
        self.rows.iter().map(|r| r.magnitude).fold(T::zero(), T::max)
    }
}

#[derive(Clone, Debug)]
pub struct GrowthDiagnostics<T> {
    pub imag_axis: Vec<(T, T)>,
    pub imag_estimate: T,
    pub real_axis: Vec<(T, T)>,
    pub real_estimate: T,
    pub ring: Vec<(C<T>, T)>,
    pub ring_estimate: T,
    pub modulus_epsilon: T,
    pub below_floor: bool,
}
