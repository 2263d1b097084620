use dampwave::grid::{
    apply_radial_multiplier, forward_real, forward_transform, inverse_transform, Grid, SpectralField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (prop::sample::select(vec![8usize, 16, 32, 64]), 1.0f64..20.0).prop_map(|(n, l)| Grid::new(1, n, l).unwrap()),
        (prop::sample::select(vec![8usize, 16]), 1.0f64..10.0).prop_map(|(n, l)| Grid::new(2, n, l).unwrap()),
        (Just(8usize), 1.0f64..5.0).prop_map(|(n, l)| Grid::new(3, n, l).unwrap()),
    ]
}

fn grid_and_samples() -> impl Strategy<Value = (Grid, Vec<f64>)> {
    grid_strategy().prop_flat_map(|g| (Just(g), prop::collection::vec(-1.0f64..1.0, g.len())))
}

fn grid_and_two() -> impl Strategy<Value = (Grid, Vec<f64>, Vec<f64>)> {
    grid_strategy().prop_flat_map(|g| {
        (
            Just(g),
            prop::collection::vec(-1.0f64..1.0, g.len()),
            prop::collection::vec(-1.0f64..1.0, g.len()),
        )
    })
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |a, b| a.max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip((grid, x) in grid_and_samples()) {
        let back = forward_real(&grid, &x).unwrap().to_real();
        let err = max_abs(x.iter().zip(&back).map(|(a, b)| a - b));
        prop_assert!(err <= 1e-12 * max_abs(x.iter().copied()).max(1.0), "err {err}");
    }

    #[test]
    fn complex_round_trip((grid, re, im) in grid_and_two()) {
        let z: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let back = inverse_transform(&forward_transform(&grid, &z).unwrap());
        let err = max_abs(z.iter().zip(&back).map(|(a, b)| (a - b).norm()));
        prop_assert!(err <= 1e-12, "err {err}");
    }

    #[test]
    fn parseval((grid, x) in grid_and_samples()) {
        let f = forward_real(&grid, &x).unwrap();
        let phys: f64 = x.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        let spec: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.frequency_cell();
        prop_assert!((phys - spec).abs() <= 1e-10 * phys.max(1e-300), "{phys} vs {spec}");
    }

    #[test]
    fn real_samples_give_symmetric_spectrum((grid, x) in grid_and_samples()) {
        let f = forward_real(&grid, &x).unwrap();
        prop_assert!(f.conjugate_symmetry_defect() <= 1e-12);
    }

    #[test]
    fn multiplier_is_linear((grid, x, y) in grid_and_two(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let m = |k: f64| (1.0 + k * k).powf(0.3) * (-0.1 * k).exp();
        let f = forward_real(&grid, &x).unwrap();
        let g = forward_real(&grid, &y).unwrap();
        let lhs = apply_radial_multiplier(&f.combine(a, &g, b).unwrap(), m).unwrap();
        let rhs = apply_radial_multiplier(&f, m).unwrap().combine(a, &apply_radial_multiplier(&g, m).unwrap(), b).unwrap();
        let err = max_abs(lhs.coeffs().iter().zip(rhs.coeffs()).map(|(u, v)| (u - v).norm()));
        prop_assert!(err <= 1e-12 * (1.0 + lhs.max_abs_coeff()), "err {err}");
    }

    #[test]
    fn translation_keeps_modulus((grid, x) in grid_and_samples(), s in prop::collection::vec(-5.0f64..5.0, 3)) {
        let f = forward_real(&grid, &x).unwrap();
        let t = f.translated(&s[..grid.dim()]);
        let err = max_abs(f.coeffs().iter().zip(t.coeffs()).map(|(u, v)| u.norm() - v.norm()));
        prop_assert!(err <= 1e-12 * (1.0 + f.max_abs_coeff()));
    }

    #[test]
    fn lattice_translation_is_a_shift(k in 0usize..64, x in prop::collection::vec(-1.0f64..1.0, 64)) {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let f = forward_real(&grid, &x).unwrap();
        let moved = f.translated(&[k as f64 * grid.dx()]).to_real();
        let err = max_abs((0..64).map(|i| moved[(i + k) % 64] - x[i]));
        prop_assert!(err <= 1e-11, "err {err}");
    }
}

#[test]
fn interpolant_matches_lattice_values() {
    let grid = Grid::new(2, 16, 3.0).unwrap();
    let x = grid.sample(|p| (-(p[0] * p[0] + 2.0 * p[1] * p[1])).exp());
    let f = forward_real(&grid, &x).unwrap();
    for i in [0, 17, 100, 255] {
        let pos = grid.position(i);
        let v = f.evaluate_at(&pos[..2]);
        assert!((v.re - x[i]).abs() < 1e-12 && v.im.abs() < 1e-12);
    }
}

#[test]
fn gaussian_transform_matches_closed_form() {
    let grid = Grid::new(1, 256, 20.0).unwrap();
    let f = forward_real(&grid, &grid.sample(|p| (-p[0] * p[0] / 2.0).exp())).unwrap();
    let exact = SpectralField::from_radial_spectrum(grid, |k| (-k * k / 2.0).exp());
    let err = max_abs(f.coeffs().iter().zip(exact.coeffs()).map(|(u, v)| (u - v).norm()));
    assert!(err < 1e-12, "err {err}");
}
