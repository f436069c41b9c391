//! End-to-end orchestration: mollifier reduction of rough inputs to the
//! smooth normal form, the three-step evidence chain (integer residuals,
//! residue/direct moment cross-checks, spherical support decisions), and the
//! pole-mixing demonstration of why the exponent separation hypothesis is
//! needed.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::exponents::{require_hypothesis, ExponentConfig};
use crate::field::Field;
use crate::fz::{FEvaluator, IntegerCheck};
use crate::grid::Point;
use crate::quadrature::TimeQuadrature;
use crate::region::{RegionSpec, SetSpec};
use crate::residues::{ladder_limit, moment_direct, moment_pole, residue_moment, LadderConfig};
use crate::scalar::{lit, Scalar, C};
use crate::scenario::Scenario;
use crate::sphere::{support_decision, SphereRule, SupportDecision, SupportOptions, Verdict};
use crate::spectral::{frac_lap_fourier, mollify};
use crate::decay::{fit_super_exp_decay, DecayFit};

/// Reduces raw inputs {u_k} with exponents {s_k} to the smooth normal form:
/// v_k = (-Delta)^{floor(s_k)} (b_k * (u_k conv psi_eps)), a scenario over
/// the eps-eroded O whose fractional orders are the fractional parts of s_k.
pub fn reduce_to_smooth<T: Scalar>(
    raw: &[Field<T>],
    cfg: &ExponentConfig<T>,
    region: &RegionSpec<T>,
    x: Point<T>,
    eps: T,
    hypothesis_override: bool,
) -> Result<Scenario<T>> {
    if raw.len() != cfg.len() {
        return Err(Error::Precondition("one raw field per exponent term required".into()));
    }
    let grid = *raw[0].grid();
    require_hypothesis(cfg, grid.dim(), hypothesis_override)?;
    for u in raw {
        if u.decay().is_none() {
            return Err(Error::MissingCertificate("raw inputs must carry decay certificates".into()));
        }
    }

    let eps0 = region.mollify_margin();
    let mut fields = Vec::with_capacity(raw.len());
    for (u, term) in raw.iter().zip(cfg.terms()) {
        let mut smooth = mollify(u, eps, eps0)?;
        smooth.scale(term.b);
        let mut v = frac_lap_fourier(&smooth, lit(term.floor as f64))?;
        // Spectral differentiation drops the certificate; refit it.
        let cert = match fit_super_exp_decay(&v) {
            Ok(DecayFit::Certified(c, _)) => Some(c),
            Ok(DecayFit::ZeroTail(c)) => Some(c),
            _ => Some(crate::field::DecayCertificate::compact(
                v.linf_norm(),
                grid.half_width() * lit(1.8),
            )),
        };
        v.set_decay(cert);
        fields.push(v);
    }

    let eroded = region.eroded(&grid, eps)?;
    Scenario::new(fields, cfg.alphas(), eroded, x, hypothesis_override)
}

#[derive(Clone, Debug)]
pub struct PipelineOptions<T> {
    pub m_max_integers: u32,
    pub moment_cap: u32,
    pub quad: TimeQuadrature<T>,
    pub ladder: LadderConfig<T>,
    /// Step I passes when |F(m)| <= step1_factor * bound_m (or the floor).
    pub step1_factor: T,
    pub step1_floor: T,
    /// Step II passes when extracted and direct moments agree to this.
    pub step2_rel_tol: T,
    pub support: SupportOptions<T>,
}

impl<T: Scalar> Default for PipelineOptions<T> {
    fn default() -> Self {
        Self {
            m_max_integers: 6,
            moment_cap: 4,
            quad: TimeQuadrature::default(),
            ladder: LadderConfig::default(),
            step1_factor: lit(10.0),
            step1_floor: lit(1e-10),
            step2_rel_tol: lit(1e-4),
            support: SupportOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentRow<T> {
    pub term: usize,
    pub m: u32,
    pub sample_index: usize,
    pub pole_location: T,
    pub power: i32,
    pub extracted: C<T>,
    pub direct: C<T>,
    pub rel_err: T,
}

#[derive(Clone, Debug)]
pub struct TermVerdict<T> {
    pub term: usize,
    pub decision: SupportDecision<T>,
    /// Final per-term claim: ZERO only when every step passed.
    pub certified_zero: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineReport<T> {
    pub step1: IntegerCheck<T>,
    pub step1_pass: bool,
    pub step2: Vec<MomentRow<T>>,
    pub step2_pass: bool,
    pub step3: Vec<TermVerdict<T>>,
    pub delta: T,
    pub kappa: T,
    pub hypothesis_overridden: bool,
    pub all_zero: bool,
}

/// Default evaluation points: a small cross of 5 points around the scenario
/// point, pruned to omega membership.
pub fn default_omega_samples<T: Scalar>(sc: &Scenario<T>) -> Vec<Point<T>> {
    let grid = sc.grid();
    let dim = sc.dim();
    let d = grid.spacing() * lit(2.0);
    let x0 = *sc.x();
    let mut pts = vec![x0];
    for axis in 0..dim.min(2) {
        for sign in [T::one(), -T::one()] {
            let mut p = x0;
            p[axis] = p[axis] + sign * d;
            pts.push(p);
        }
    }
    pts.retain(|p| sc.region().omega.contains(p, dim));
    pts
}

/// Runs the three-step evidence chain on a scenario.
pub fn run_pipeline<T: Scalar>(
    sc: &Scenario<T>,
    omega_samples: &[Point<T>],
    opts: &PipelineOptions<T>,
) -> Result<PipelineReport<T>> {
    let grid = sc.grid();
    let o_nodes = sc.region().o_nodes(grid);

    // Step I: integer residuals of the transform at the scenario point.
    let ev0 = FEvaluator::new(sc, &opts.quad)?;
    let step1 = ev0.check_integers(opts.m_max_integers, &o_nodes)?;
    let scale = sc.fields().iter().map(|f| f.linf_norm()).fold(T::zero(), T::max);
    let floor = opts.step1_floor * scale.max(T::one());
    let step1_pass = step1.passes(opts.step1_factor, floor);

    // Step II: residue-extracted moments against direct quadrature, at every
    // sample point.
    let mut step2 = Vec::new();
    let mut step2_pass = true;
    for (xi, x) in omega_samples.iter().enumerate() {
        let sc_x = if xi == 0 && x == sc.x() {
            None
        } else {
            Some(Scenario::new(
                sc.fields().to_vec(),
                sc.alphas().to_vec(),
                sc.region().clone(),
                *x,
                sc.hypothesis_overridden(),
            )?)
        };
        let ev = match &sc_x {
            None => &ev0,
            Some(s) => &FEvaluator::new(s, &opts.quad)?,
        };
        for k in 0..sc.len() {
            for m in 0..=opts.moment_cap {
                let extraction = residue_moment(ev, k, m, &opts.ladder)?;
                let direct = moment_direct(sc.field(k), x, extraction.power)?;
                let s = extraction.moment.norm().max(direct.value.norm());
                let moment_floor = lit::<T>(1e-9) * scale.max(T::one());
                let rel = if s <= moment_floor {
                    T::zero()
                } else {
                    (extraction.moment - direct.value).norm() / s
                };
                if rel > opts.step2_rel_tol {
                    step2_pass = false;
                }
                step2.push(MomentRow {
                    term: k,
                    m,
                    sample_index: xi,
                    pole_location: extraction.pole_location,
                    power: extraction.power,
                    extracted: extraction.moment,
                    direct: direct.value,
                    rel_err: rel,
                });
            }
        }
    }

    // Step III: spherical support decision per term.
    let rule = SphereRule::standard(sc.dim())?;
    let mut step3 = Vec::new();
    let mut all_zero = step1_pass && step2_pass;
    for k in 0..sc.len() {
        let decision = support_decision(sc.field(k), sc.region(), omega_samples, &rule, &opts.support)?;
        let zero = step1_pass && step2_pass && decision.verdict == Verdict::Zero;
        if !zero {
            all_zero = false;
        }
        step3.push(TermVerdict { term: k, decision, certified_zero: zero });
    }

    Ok(PipelineReport {
        step1,
        step1_pass,
        step2,
        step2_pass,
        step3,
        delta: ev0.delta(),
        kappa: sc.region().kappa,
        hypothesis_overridden: sc.hypothesis_overridden(),
        all_zero,
    })
}

#[derive(Clone, Debug)]
pub struct MixingProbe<T> {
    pub alphas: (T, T),
    pub pole_location: T,
    /// Relative deviation of the full-scenario pole limit from the isolated
    /// single-term limit at the same pole.
    pub mixing: T,
}

#[derive(Clone, Debug)]
pub struct SeparationDemo<T> {
    pub valid: MixingProbe<T>,
    pub violating: MixingProbe<T>,
    pub single_term_mixing: T,
    pub tolerance: T,
}

/// Demonstrates the pole-coincidence mechanism: with separated fractional
/// parts the second term contributes nothing to the first term's pole limit;
/// with coinciding parts (an integer-shifted exponent pair) the limits mix
/// and per-term moments are no longer extracted.
pub fn demonstrate_separation_necessity<T: Scalar>(
    sc_valid: &Scenario<T>,
    sc_violating: &Scenario<T>,
    quad: &TimeQuadrature<T>,
    ladder: &LadderConfig<T>,
) -> Result<SeparationDemo<T>> {
    let probe = |sc: &Scenario<T>| -> Result<MixingProbe<T>> {
        let ev = FEvaluator::new(sc, quad)?;
        let (loc, order) = moment_pole(sc.alphas()[0], 0, sc.dim());
        let z0 = Complex::new(loc, T::zero());
        let full = ladder_limit(|z| ev.f_mero(z), z0, order, ladder)?;
        let isolated = ladder_limit(|z| ev.f_mero_term(0, z), z0, order, ladder)?;
        let scale = isolated.limit.norm().max(lit(1e-300));
        Ok(MixingProbe {
            alphas: (sc.alphas()[0], sc.alphas()[1 % sc.alphas().len()]),
            pole_location: loc,
            mixing: (full.limit - isolated.limit).norm() / scale,
        })
    };

    let valid = probe(sc_valid)?;
    let violating = probe(sc_violating)?;

    // Single-term control: the full transform IS the isolated term.
    let single = Scenario::new(
        vec![sc_valid.field(0).clone()],
        vec![sc_valid.alphas()[0]],
        sc_valid.region().clone(),
        *sc_valid.x(),
        false,
    )?;
    let ev = FEvaluator::new(&single, quad)?;
    let (loc, order) = moment_pole(single.alphas()[0], 0, single.dim());
    let z0 = Complex::new(loc, T::zero());
    let full = ladder_limit(|z| ev.f_mero(z), z0, order, ladder)?;
    let isolated = ladder_limit(|z| ev.f_mero_term(0, z), z0, order, ladder)?;
    let single_term_mixing =
        (full.limit - isolated.limit).norm() / isolated.limit.norm().max(lit(1e-300));

    Ok(SeparationDemo {
        valid,
        violating,
        single_term_mixing,
        tolerance: ladder.rel_tol,
    })
}

/// Builds the standard two-shell fixture pair used by the separation
/// demonstration: a hypothesis-valid scenario (alpha = 0.3, 0.75) and an
/// override scenario with coinciding fractional parts (alpha = 0.3, 0.3).
pub fn separation_fixtures<T: Scalar>(
    grid: &crate::grid::GridSpec<T>,
) -> Result<(Scenario<T>, Scenario<T>)> {
    use crate::field::{sample_analytic, FieldSpec};
    let region = RegionSpec::new(
        grid,
        SetSpec::ball([T::zero(); 3], lit(1.5)),
        SetSpec::ball([T::zero(); 3], lit(0.4)),
        lit(0.5),
    )?;
    let v1 = sample_analytic(grid, &FieldSpec::gaussian_shell([T::zero(); 3], lit(2.5), lit(0.01)))?;
    let v2 = sample_analytic(grid, &FieldSpec::gaussian_shell([T::zero(); 3], lit(3.0), lit(0.01)))?;
    let x = [T::zero(); 3];
    let valid = Scenario::new(
        vec![v1.clone(), v2.clone()],
        vec![lit(0.3), lit(0.75)],
        region.clone(),
        x,
        false,
    )?;
    let violating = Scenario::new(vec![v1, v2], vec![lit(0.3), lit(0.3)], region, x, true)?;
    Ok((valid, violating))
}
