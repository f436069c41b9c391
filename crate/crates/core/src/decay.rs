//! Fitting super-exponential decay certificates from sampled tails.
//!
//! The model is log|u(x)| ~ log C - rho |x|^gamma over radial shells in the
//! outer half of the box. gamma enters nonlinearly, so the fit scans a gamma
//! grid with a linear least-squares solve for (log C, rho) at each candidate.

use crate::error::{Error, Result};
use crate::field::{DecayCertificate, Field};
use crate::grid::point_norm;
use crate::scalar::{lit, Scalar};

/// Outcome of a decay fit.
#[derive(Clone, Debug)]
pub enum DecayFit<T> {
    /// Fit succeeded: gamma > 1 with residual below threshold.
    Certified(DecayCertificate<T>, FitDiagnostics<T>),
    /// The sampled tail is numerically zero; the certificate is the trivial
    /// one with C = max|u|.
    ZeroTail(DecayCertificate<T>),
    /// The tail decays too slowly (or too irregularly) to certify.
    Failed(FitDiagnostics<T>),
}

#[derive(Clone, Copy, Debug)]
pub struct FitDiagnostics<T> {
    pub gamma: T,
    pub rho: T,
    pub log_c: T,
    pub rms_residual: T,
    pub shells: usize,
}

/// RMS threshold on the log-space misfit.
const RESIDUAL_THRESHOLD: f64 = 0.5;
/// Margin above 1 demanded of the fitted gamma.
const GAMMA_MARGIN: f64 = 0.05;
/// Minimum number of populated shells.
const MIN_SHELLS: usize = 3;

/// Fits a super-exponential certificate to the tail |x| >= L/2 of a field.
pub fn fit_super_exp_decay<T: Scalar>(u: &Field<T>) -> Result<DecayFit<T>> {
    let grid = u.grid();
    let peak = u.linf_norm();
    if peak == T::zero() {
        return Err(Error::InvalidField("cannot fit decay of the zero field".into()));
    }

    // Shell maxima of |u| over |x| in [L/2, L], shell width 2h.
    let l = grid.half_width();
    let width = grid.spacing() * lit(2.0);
    let r_lo = l / lit(2.0);
    let n_shells = ((l - r_lo) / width).to_f64().unwrap().floor() as usize;
    if n_shells < MIN_SHELLS {
        return Err(Error::InvalidField("grid too coarse for a shell fit".into()));
    }
    let mut shell_max = vec![T::zero(); n_shells];
    for i in 0..grid.len() {
        let r = point_norm(&grid.node(i), grid.dim());
        if r < r_lo {
            continue;
        }
        let s = ((r - r_lo) / width).to_f64().unwrap().floor() as usize;
        if s < n_shells {
            shell_max[s] = shell_max[s].max(u.value_at(i).norm());
        }
    }

    let eps_floor = peak * T::epsilon();
    let populated: Vec<(T, T)> = shell_max
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > eps_floor)
        .map(|(s, &v)| (r_lo + width * lit(s as f64 + 0.5), v.ln()))
        .collect();

    if populated.is_empty() {
        let mut cert = DecayCertificate::compact(peak, l);
        cert.zero_tail = true;
        return Ok(DecayFit::ZeroTail(cert));
    }
    if populated.len() < MIN_SHELLS {
        return Ok(DecayFit::Failed(FitDiagnostics {
            gamma: T::zero(),
            rho: T::zero(),
            log_c: T::zero(),
            rms_residual: lit(f64::INFINITY),
            shells: populated.len(),
        }));
    }

    // Coarse gamma scan then one refinement pass around the best candidate.
    let mut best = fit_for_gamma(&populated, lit::<T>(0.5));
    let mut g = 0.5;
    while g <= 4.0 {
        let cand = fit_for_gamma(&populated, lit::<T>(g));
        if cand.rms_residual < best.rms_residual {
            best = cand;
        }
        g += 0.05;
    }
    let g0 = best.gamma.to_f64().unwrap();
    let mut g = (g0 - 0.05).max(0.1);
    while g <= g0 + 0.05 {
        let cand = fit_for_gamma(&populated, lit::<T>(g));
        if cand.rms_residual < best.rms_residual {
            best = cand;
        }
        g += 0.005;
    }

    let ok = best.gamma > lit(1.0 + GAMMA_MARGIN)
        && best.rho > T::zero()
        && best.rms_residual < lit(RESIDUAL_THRESHOLD);
    if ok {
        let cert = DecayCertificate::new(best.log_c.exp(), best.rho, best.gamma)?;
        Ok(DecayFit::Certified(cert, best))
    } else {
        Ok(DecayFit::Failed(best))
    }
}

/// Linear LS for (log C, rho) at fixed gamma; rho is clamped nonnegative.
fn fit_for_gamma<T: Scalar>(samples: &[(T, T)], gamma: T) -> FitDiagnostics<T> {
    let n = lit::<T>(samples.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(r, ln_v) in samples {
        let x = r.powf(gamma);
        sx = sx + x;
        sy = sy + ln_v;
        sxx = sxx + x * x;
        sxy = sxy + x * ln_v;
    }
    let det = n * sxx - sx * sx;
    let (log_c, rho) = if det.abs() < lit(1e-30) {
        (sy / n, T::zero())
    } else {
        let slope = (n * sxy - sx * sy) / det;
        let intercept = (sy - slope * sx) / n;
        (intercept, -slope)
    };
    let rho_c = rho.max(T::zero());
    let mut ss = T::zero();
    for &(r, ln_v) in samples {
        let pred = log_c - rho_c * r.powf(gamma);
        let d = ln_v - pred;
        ss = ss + d * d;
    }
    FitDiagnostics {
        gamma,
        rho: rho_c,
        log_c,
        rms_residual: (ss / n).sqrt(),
        shells: samples.len(),
    }
}
