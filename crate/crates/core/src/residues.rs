//! Pole bookkeeping for the meromorphic transform, the shrinking-circle
//! residue ladder, and the extraction of spatial moments
//! integral v(y) |x-y|^p dy from pole limits.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::fz::FEvaluator;
use crate::gamma::{gamma, gamma_residue};
use crate::grid::Point;
use crate::quadrature::richardson_ladder;
use crate::scalar::{lit, Scalar, C};

const LOCATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PoleDescriptor<T> {
    pub location: T,
    pub order: u8,
    pub term: usize,
    pub m: u32,
    /// Other term indices whose pole families coincide here (possible only
    /// when the separation hypothesis is violated).
    pub shared_with: Vec<usize>,
}

/// Enumerates the poles z = -(1+alpha_k)-m and z = -(n/2+alpha_k)-m for
/// m = 0..=max_m, merged per location with orders accumulated; coincidences
/// across different terms are flagged and escalate the order.
pub fn poles_of<T: Scalar>(alphas: &[T], dim: usize, max_m: u32) -> Vec<PoleDescriptor<T>> {
    let half_n = lit::<T>(dim as f64) / lit(2.0);
    let mut raw: Vec<(T, usize, u32)> = Vec::new();
    for (k, &a) in alphas.iter().enumerate() {
        for m in 0..=max_m {
            let fm = lit::<T>(m as f64);
            raw.push((-(T::one() + a) - fm, k, m));
            raw.push((-(half_n + a) - fm, k, m));
        }
    }
    raw.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let tol = lit::<T>(LOCATION_TOL);
    let mut out: Vec<PoleDescriptor<T>> = Vec::new();
    for (loc, k, m) in raw {
        match out.last_mut() {
            Some(p) if (p.location - loc).abs() < tol => {
                p.order += 1;
                if p.term != k && !p.shared_with.contains(&k) {
                    p.shared_with.push(k);
                }
                p.m = p.m.min(m);
            }
            _ => out.push(PoleDescriptor { location: loc, order: 1, term: k, m, shared_with: Vec::new() }),
        }
    }
    out.sort_by(|x, y| y.location.partial_cmp(&x.location).unwrap());
    out
}

/// The pole used for the (j, m) moment extraction: order two at
/// z = -m - n/2 - alpha_j in even dimension, order one at
/// z = -m - 1 - alpha_j in odd dimension.
pub fn moment_pole<T: Scalar>(alpha_j: T, m: u32, dim: usize) -> (T, u8) {
    let fm = lit::<T>(m as f64);
    if dim % 2 == 0 {
        (-(fm + lit::<T>(dim as f64 / 2.0) + alpha_j), 2)
    } else {
        (-(fm + T::one() + alpha_j), 1)
    }
}

/// Kernel power |x-y|^p recovered at the (j, m) moment pole.
pub fn moment_power(m: u32, dim: usize) -> i32 {
    if dim % 2 == 0 {
        2 * m as i32
    } else {
        2 * m as i32 - dim as i32 + 2
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LadderConfig<T> {
    pub radii: [T; 4],
    pub points: usize,
    pub rel_tol: T,
}

impl<T: Scalar> Default for LadderConfig<T> {
    fn default() -> Self {
        Self {
            radii: [lit(1e-1), lit(3e-2), lit(1e-2), lit(3e-3)],
            points: 8,
            rel_tol: lit(1e-4),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LadderLimit<T> {
    pub limit: C<T>,
    pub ladder: Vec<(T, C<T>)>,
    /// Circle averages of |(z - z0)^order f(z)|: these diverge along the
    /// ladder when the assumed order underestimates the true one.
    pub magnitudes: Vec<(T, T)>,
    pub extrapolants: Vec<C<T>>,
}

/// Numerical limit of (z - z0)^order f(z) as z -> z0: equispaced circle
/// averages on a shrinking radius ladder, Richardson-extrapolated in
/// r^order; converged when the last two extrapolants agree to `rel_tol`.
pub fn ladder_limit<T: Scalar>(
    f: impl Fn(C<T>) -> Result<C<T>>,
    z0: C<T>,
    order: u8,
    cfg: &LadderConfig<T>,
) -> Result<LadderLimit<T>> {
    let p = cfg.points;
    let mut ladder = Vec::with_capacity(cfg.radii.len());
    let mut magnitudes = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut mag = T::zero();
        for j in 0..p {
            // Offset keeps circle points off the real axis where the other
            // poles sit.
            let theta = (lit::<T>(j as f64) + lit(0.5)) / lit(p as f64) * lit(2.0) * T::PI();
            let dz = Complex::from_polar(r, theta);
            let z = z0 + dz;
            let mut w = f(z)?;
            for _ in 0..order {
                w = w * dz;
            }
            acc = acc + w;
            mag = mag + w.norm();
        }
        ladder.push((r, acc / lit::<T>(p as f64)));
        magnitudes.push((r, mag / lit(p as f64)));
    }

    let radii: Vec<T> = ladder.iter().map(|(r, _)| *r).collect();
    let values: Vec<C<T>> = ladder.iter().map(|(_, v)| *v).collect();
    let extrapolants = richardson_ladder(&radii, &values, lit(order as f64));
    let last = extrapolants[extrapolants.len() - 1];
    let prev = extrapolants[extrapolants.len() - 2];
    let scale = last.norm().max(prev.norm());
    if scale > T::zero() && (last - prev).norm() / scale > cfg.rel_tol {
        return Err(Error::ExtrapolationFailure {
            ladder: ladder
                .iter()
                .map(|(r, v)| (r.to_f64().unwrap_or(f64::NAN), v.norm().to_f64().unwrap_or(f64::NAN)))
                .collect(),
        });
    }
    Ok(LadderLimit { limit: last, ladder, magnitudes, extrapolants })
}

#[derive(Clone, Debug)]
pub struct MomentExtraction<T> {
    /// The recovered moment integral v_j(y) |x-y|^power dy.
    pub moment: C<T>,
    /// Kernel power p in |x-y|^p.
    pub power: i32,
    /// Raw pole limit before dividing by the Gamma prefactor.
    pub pole_limit: C<T>,
    pub pole_location: T,
    pub pole_order: u8,
    pub ladder: LadderLimit<T>,
}

/// Extracts the (j, m) moment by residue calculus on the meromorphic form:
/// the pole limit divided by the explicit Gamma prefactor yields
/// integral v_j(y) |x-y|^{p} dy with p = 2m (even n) or 2m-n+2 (odd n).
pub fn residue_moment<T: Scalar>(
    ev: &FEvaluator<T>,
    j: usize,
    m: u32,
    cfg: &LadderConfig<T>,
) -> Result<MomentExtraction<T>> {
    const M_CAP: u32 = 8;
    if m > M_CAP {
        return Err(Error::Domain(format!("moment index {m} exceeds the cap {M_CAP}")));
    }
    let dim = ev.dim();
    let alpha = ev.alphas()[j];
    let (loc, order) = moment_pole(alpha, m, dim);
    let z0 = Complex::new(loc, T::zero());

    let ladder = ladder_limit(|z| ev.f_mero(z), z0, order, cfg)?;
    let pref = moment_prefactor(alpha, m, dim)?;
    let moment = ladder.limit / pref;
    Ok(MomentExtraction {
        moment,
        power: moment_power(m, dim),
        pole_limit: ladder.limit,
        pole_location: loc,
        pole_order: order,
        ladder,
    })
}

/// The explicit prefactor multiplying the kernel integral in the pole limit:
/// even n = 2p:  4^{alpha+z0} pi^{-p} (-1)^{p-1} / (m! (m+p-1)!)
///               / (Gamma(-alpha) Gamma(1+alpha)),
/// odd n = 2p-1: 4^{alpha+z0} pi^{-(p-1/2)} (-1)^m / m! * Gamma(p-m-3/2)
///               / (Gamma(-alpha) Gamma(1+alpha)).
pub fn moment_prefactor<T: Scalar>(alpha: T, m: u32, dim: usize) -> Result<C<T>> {
    let (loc, _) = moment_pole(alpha, m, dim);
    let four_pow = lit::<T>(4.0).powf(alpha + loc);
    let denom = (gamma(Complex::new(-alpha, T::zero()))?
        * gamma(Complex::new(T::one() + alpha, T::zero()))?)
    .re;
    if dim % 2 == 0 {
        let p = dim / 2;
        let gamma_limit = gamma_residue::<T>(m + p as u32 - 1) * gamma_residue::<T>(m);
        let pi_pow = T::PI().powf(lit(p as f64));
        Ok(Complex::new(four_pow * gamma_limit / (pi_pow * denom), T::zero()))
    } else {
        let p = (dim + 1) / 2;
        let res = gamma_residue::<T>(m);
        let g = gamma(Complex::new(lit::<T>(p as f64 - m as f64 - 1.5), T::zero()))?.re;
        let pi_pow = T::PI().powf(lit(p as f64 - 0.5));
        Ok(Complex::new(four_pow * res * g / (pi_pow * denom), T::zero()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DirectMoment<T> {
    pub value: C<T>,
    /// Bound on the mass outside the box from the decay certificate.
    pub truncation_bound: T,
}

/// Grid quadrature of integral v(y) |x-y|^power dy.
///
/// Positive powers of degree >= 2 are refused without a decay certificate
/// (the moment may not be finite). Negative powers are admissible only for
/// fields vanishing near x; the singular node y = x is skipped (its sample
/// is zero for such fields).
pub fn moment_direct<T: Scalar>(v: &Field<T>, x: &Point<T>, power: i32) -> Result<DirectMoment<T>> {
    let grid = v.grid();
    let dim = grid.dim();
    if power >= 2 && v.decay().is_none() {
        return Err(Error::MissingCertificate(format!(
            "moment of power {power} requires a decay certificate"
        )));
    }
    let hv = grid.cell_volume();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..grid.len() {
        let w = v.value_at(i);
        if w.norm() == T::zero() {
            continue;
        }
        let y = grid.node(i);
        let mut d2 = T::zero();
        for a in 0..dim {
            let d = x[a] - y[a];
            d2 = d2 + d * d;
        }
        if d2 == T::zero() {
            if power < 0 {
                continue;
            }
            if power == 0 {
                acc = acc + w;
            }
            continue;
        }
        let r = d2.sqrt();
        acc = acc + w * r.powi(power);
    }
    let truncation_bound = match v.decay() {
        Some(cert) if !cert.zero_tail => {
            let l = grid.half_width();
            let reach = l * lit::<T>((dim as f64).sqrt()) + crate::grid::point_norm(x, dim);
            let vol = (l + l).powf(lit(dim as f64));
            cert.bound_at(l) * reach.powi(power.max(0)) * vol
        }
        _ => T::zero(),
    };
    Ok(DirectMoment { value: acc * hv, truncation_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_analytic, FieldSpec};
    use crate::grid::GridSpec;

    #[test]
    fn pole_families_even_n2() {
        // n = 2 (p = 1): both families coincide, double poles at -1.3, -2.3.
        let poles = poles_of(&[0.3f64], 2, 1);
        assert_eq!(poles.len(), 2);
        assert!((poles[0].location + 1.3).abs() < 1e-12);
        assert_eq!(poles[0].order, 2);
        assert!((poles[1].location + 2.3).abs() < 1e-12);
        assert_eq!(poles[1].order, 2);
    }

    #[test]
    fn pole_families_odd_n3() {
        // n = 3: simple poles at -1.3, -2.3 and -1.8, -2.8.
        let poles = poles_of(&[0.3f64], 3, 1);
        let locs: Vec<f64> = poles.iter().map(|p| p.location).collect();
        for expect in [-1.3, -1.8, -2.3, -2.8] {
            assert!(
                locs.iter().any(|l| (l - expect).abs() < 1e-12),
                "missing pole at {expect}: {locs:?}"
            );
        }
        assert!(poles.iter().all(|p| p.order == 1));
    }

    #[test]
    fn coincident_terms_are_flagged() {
        let poles = poles_of(&[0.3f64, 0.3 + 1e-12], 2, 0);
        assert!(poles.iter().any(|p| !p.shared_with.is_empty() && p.order >= 4));
    }

    #[test]
    fn ladder_extracts_double_pole_of_gamma_product() {
        // (z - z0)^2 Gamma(z+1+a) Gamma(z+1+a) at z0 = -1-a has limit
        // Res(Gamma;0)^2 = 1.
        let a = 0.35f64;
        let z0 = Complex::new(-1.0 - a, 0.0);
        let cfg = LadderConfig::default();
        let lim = ladder_limit(
            |z| {
                let g = gamma(z + Complex::new(1.0 + a, 0.0))?;
                Ok(g * g)
            },
            z0,
            2,
            &cfg,
        )
        .unwrap();
        assert!((lim.limit.re - 1.0).abs() < 1e-9, "{}", lim.limit.re);
        assert!(lim.limit.im.abs() < 1e-9);
    }

    #[test]
    fn ladder_magnitudes_diverge_with_underestimated_order() {
        // With exponent order-1 the circle magnitude averages blow up as
        // r -> 0, while with the true order they converge.
        let a = 0.35f64;
        let z0 = Complex::new(-1.0 - a, 0.0);
        let cfg = LadderConfig::default();
        let f = |z: Complex<f64>| {
            let g = gamma(z + Complex::new(1.0 + a, 0.0))?;
            Ok(g * g)
        };
        let under = ladder_limit(f, z0, 1, &cfg);
        let under_mags: Vec<f64> = match &under {
            Ok(lim) => lim.magnitudes.iter().map(|(_, m)| *m).collect(),
            Err(_) => return, // an extrapolation failure also detects the mismatch
        };
        assert!(
            under_mags.last().unwrap() > &(under_mags[0] * 10.0),
            "no divergence: {under_mags:?}"
        );
        let exact = ladder_limit(f, z0, 2, &cfg).unwrap();
        let mags: Vec<f64> = exact.magnitudes.iter().map(|(_, m)| *m).collect();
        assert!((mags[3] - mags[0]).abs() < 0.1 * mags[0], "not converging: {mags:?}");
    }

    #[test]
    fn even_prefactor_gamma_product_identity() {
        // Ladder limit of the bare Gamma product at the even-n moment pole
        // equals (-1)^{p-1} / (m! (m+p-1)!) to 1e-10.
        for (m, p) in [(0u32, 1usize), (1, 1), (2, 2)] {
            let a = 0.4f64;
            let dim = 2 * p;
            let (loc, order) = moment_pole(a, m, dim);
            assert_eq!(order, 2);
            let z0 = Complex::new(loc, 0.0);
            let cfg = LadderConfig::default();
            let lim = ladder_limit(
                |z| {
                    Ok(gamma(z + Complex::new(1.0 + a, 0.0))?
                        * gamma(z + Complex::new(dim as f64 / 2.0 + a, 0.0))?)
                },
                z0,
                2,
                &cfg,
            )
            .unwrap();
            let mut expect = 1.0 / (fact(m) * fact(m + p as u32 - 1));
            if (p - 1) % 2 == 1 {
                expect = -expect;
            }
            assert!(
                (lim.limit.re - expect).abs() <= 1e-10 * expect.abs().max(1.0),
                "m={m}, p={p}: {} vs {expect}",
                lim.limit.re
            );
        }
    }

    fn fact(k: u32) -> f64 {
        (1..=k).map(|x| x as f64).product::<f64>().max(1.0)
    }

    #[test]
    fn gaussian_second_moment_is_pi() {
        // integral e^{-|y|^2} |y|^2 dy over R^2 = pi.
        let g = GridSpec::<f64>::new(2, 8.0, 128).unwrap();
        let spec = FieldSpec::MonomialGaussian { center: [0.0; 3], width: 0.25, powers: [0, 0, 0] };
        let f = sample_analytic(&g, &spec).unwrap();
        let m = moment_direct(&f, &[0.0; 3], 2).unwrap();
        assert!((m.value.re - std::f64::consts::PI).abs() < 1e-10, "{}", m.value.re);
    }

    #[test]
    fn narrow_gaussian_moment_localizes() {
        // A narrow unit-mass Gaussian at y0 has second moment ~ |x-y0|^2.
        let g = GridSpec::<f64>::new(1, 8.0, 512).unwrap();
        let y0 = 2.0;
        let mut last_err = f64::MAX;
        for a in [0.02, 0.01, 0.005] {
            let f = sample_analytic(&g, &FieldSpec::gaussian([y0, 0.0, 0.0], a)).unwrap();
            let m = moment_direct(&f, &[0.0; 3], 2).unwrap();
            let err = (m.value.re - y0 * y0).abs();
            assert!(err < last_err * 1.01, "width ladder not improving");
            last_err = err;
        }
        assert!(last_err < 0.05);
    }

    #[test]
    fn odd_symmetry_kills_odd_powers() {
        let g = GridSpec::<f64>::new(1, 8.0, 256).unwrap();
        // Odd field about x = 0: g(y - 1) - g(-y - 1).
        let spec = FieldSpec::Sum {
            terms: vec![
                FieldSpec::gaussian([1.0, 0.0, 0.0], 0.1),
                FieldSpec::gaussian([-1.0, 0.0, 0.0], 0.1)
                    .scaled(Complex::new(-1.0, 0.0)),
            ],
        };
        let f = sample_analytic(&g, &spec).unwrap();
        let m = moment_direct(&f, &[0.0; 3], 3).unwrap();
        assert!(m.value.norm() < 1e-12);
    }

    #[test]
    fn moment_requires_certificate() {
        let g = GridSpec::<f64>::new(1, 8.0, 64).unwrap();
        let f = Field::from_fn(g, |x| Complex::new((-x[0].abs()).exp(), 0.0));
        assert!(matches!(
            moment_direct(&f, &[0.0; 3], 2),
            Err(Error::MissingCertificate(_))
        ));
        // power 0 and 1 are allowed without a certificate
        assert!(moment_direct(&f, &[0.0; 3], 0).is_ok());
    }
}
