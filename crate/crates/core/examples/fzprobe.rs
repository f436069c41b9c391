// Probe: F cross-representation accuracy, integer checks, ibp at m=3,
// residue moments on the planned acceptance fixtures.
use fraclab::field::{sample_analytic, FieldSpec};
use fraclab::fz::FEvaluator;
use fraclab::grid::GridSpec;
use fraclab::heat::ibp_identity_residual;
use fraclab::quadrature::TimeQuadrature;
use fraclab::region::{RegionSpec, SetSpec};
use fraclab::residues::{moment_direct, residue_moment, LadderConfig};
use fraclab::scenario::Scenario;
use num_complex::Complex;

fn main() {
    let grid = GridSpec::<f64>::new(2, 12.0, 256).unwrap();
    let region = RegionSpec::new(
        &grid,
        SetSpec::ball([0.0; 3], 1.5),
        SetSpec::ball([0.0; 3], 0.4),
        0.5,
    )
    .unwrap();
    let v1 = sample_analytic(&grid, &FieldSpec::gaussian_shell([0.0; 3], 2.5, 0.01)).unwrap();
    let v2 = sample_analytic(&grid, &FieldSpec::gaussian_shell([0.0; 3], 3.0, 0.01)).unwrap();
    let sc = Scenario::new(
        vec![v1.clone(), v2],
        vec![0.3, 0.75],
        region.clone(),
        [0.0; 3],
        false,
    )
    .unwrap();
    let quad = TimeQuadrature::default();
    let ev = FEvaluator::new(&sc, &quad).unwrap();

    println!("--- cross representation (12 points)");
    let zs = [
        Complex::new(0.0, 0.0),
        Complex::new(0.5, 0.0),
        Complex::new(1.0, 0.0),
        Complex::new(2.0, 0.0),
        Complex::new(3.0, 0.0),
        Complex::new(0.0, 1.0),
        Complex::new(1.0, 3.0),
        Complex::new(2.0, -2.0),
        Complex::new(0.5, 5.0),
        Complex::new(4.0, 1.0),
        Complex::new(1.5, -4.0),
        Complex::new(5.0, 0.5),
    ];
    for z in zs {
        let fr = ev.f_right(z).unwrap();
        let fm = ev.f_mero(z).unwrap();
        let rel = (fr.value - fm).norm() / fm.norm().max(1e-300);
        println!("z={z}  right={:.6e} mero={:.6e} rel={:.3e}", fr.value.norm(), fm.norm(), rel);
    }

    println!("--- integer residuals on raw (unprojected) scenario");
    let o_nodes = region.o_nodes(&grid);
    let check = ev.check_integers(4, &o_nodes).unwrap();
    for r in &check.rows {
        println!("m={} |F(m)|={:.3e} oracle={:.3e} bound={:.3e}", r.m, r.magnitude, r.oracle.norm(), r.bound);
    }
    println!("delta = {:.3e}", check.delta);

    println!("--- ibp residuals on 1-D shell");
    let g1 = GridSpec::<f64>::new(1, 8.0, 256).unwrap();
    let reg1 = RegionSpec::new(&g1, SetSpec::ball([0.0;3], 1.5), SetSpec::ball([0.0;3], 0.4), 0.5).unwrap();
    let vv = sample_analytic(&g1, &FieldSpec::gaussian_shell([0.0; 3], 2.5, 0.01)).unwrap();
    for m in [1u32, 2, 3] {
        let r = ibp_identity_residual(&vv, 0.3, m, &[0.0; 3], &reg1, &quad).unwrap();
        println!("m={m} residual={r:.3e}");
    }

    println!("--- residue moments n=2");
    let cfg = LadderConfig::default();
    for m in [0u32, 1, 2] {
        let ext = residue_moment(&ev, 0, m, &cfg).unwrap();
        let dir = moment_direct(sc.field(0), sc.x(), ext.power).unwrap();
        let rel = (ext.moment - dir.value).norm() / dir.value.norm();
        println!(
            "m={m} pole={:.2} extracted={:.8e} direct={:.8e} rel={:.3e}",
            ext.pole_location, ext.moment.re, dir.value.re, rel
        );
    }

    println!("--- residue moments n=3 (kernel route)");
    let g3 = GridSpec::<f64>::new(3, 8.0, 64).unwrap();
    let reg3 = RegionSpec::new(&g3, SetSpec::ball([0.0;3], 1.0), SetSpec::ball([0.0;3], 0.25), 0.3).unwrap();
    let v3 = sample_analytic(&g3, &FieldSpec::gaussian_shell([0.0; 3], 2.75, 0.04)).unwrap();
    let sc3 = Scenario::new(vec![v3], vec![0.35], reg3, [0.0; 3], false).unwrap();
    let t0 = std::time::Instant::now();
    let ev3 = FEvaluator::new(&sc3, &quad).unwrap();
    println!("  (FEvaluator n=3 build: {:?})", t0.elapsed());
    for m in [0u32, 1, 2] {
        let ext = residue_moment(&ev3, 0, m, &cfg).unwrap();
        let dir = moment_direct(sc3.field(0), sc3.x(), ext.power).unwrap();
        let rel = (ext.moment - dir.value).norm() / dir.value.norm();
        println!(
            "m={m} pole={:.2} power={} extracted={:.8e} direct={:.8e} rel={:.3e}",
            ext.pole_location, ext.power, ext.moment.re, dir.value.re, rel
        );
    }
}
