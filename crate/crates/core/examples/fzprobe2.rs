// Single-term check: prefactor * G(m) against Delta^m (-Delta)^alpha v at x.
use fraclab::field::{sample_analytic, FieldSpec};
use fraclab::fz::FEvaluator;
use fraclab::grid::GridSpec;
use fraclab::heat::ibp_identity_residual;
use fraclab::quadrature::TimeQuadrature;
use fraclab::region::{RegionSpec, SetSpec};
use fraclab::scenario::Scenario;
use fraclab::spectral::{frac_lap_fourier, laplacian_power};
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
    let alpha = 0.3;
    let v = sample_analytic(&grid, &FieldSpec::gaussian_shell([0.0; 3], 3.0, 0.01)).unwrap();
    let sc = Scenario::new(vec![v.clone()], vec![alpha], region.clone(), [0.0; 3], false).unwrap();
    let quad = TimeQuadrature::default();
    let ev = FEvaluator::new(&sc, &quad).unwrap();

    let w = frac_lap_fourier(&v, alpha).unwrap();
    let x_node = grid.nearest_node(&[0.0; 3]);
    for m in 1u32..=4 {
        let f = ev.f_right(Complex::new(m as f64, 0.0)).unwrap();
        let lap = laplacian_power(&w, m).unwrap();
        let oracle = lap.value_at(x_node);
        println!(
            "m={m}: F = {:+.6e}{:+.6e}i   oracle = {:+.6e}   rel = {:.3e}",
            f.value.re,
            f.value.im,
            oracle.re,
            (f.value - oracle).norm() / oracle.norm()
        );
    }

    // ibp on the L=12 1-D fixture
    let g1 = GridSpec::<f64>::new(1, 12.0, 256).unwrap();
    let reg1 = RegionSpec::new(&g1, SetSpec::ball([0.0; 3], 1.5), SetSpec::ball([0.0; 3], 0.4), 0.5).unwrap();
    let vv = sample_analytic(&g1, &FieldSpec::gaussian_shell([0.0; 3], 3.0, 0.01)).unwrap();
    for m in [1u32, 2, 3] {
        let r = ibp_identity_residual(&vv, 0.3, m, &[0.0; 3], &reg1, &quad).unwrap();
        println!("ibp 1-D L=12 m={m} residual={r:.3e}");
    }
}
