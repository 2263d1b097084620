use dampwave::grid::{forward_real, Grid, SpectralField};
use dampwave::kernel::{evaluate, khat, kprimehat, propagate_linear};
use proptest::prelude::*;

fn xi2_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![0.0f64..100.0, 0.2499f64..0.2501, 0.0f64..1e-3, Just(0.25)]
}

fn pair_from(seed: &[f64], grid: Grid) -> (SpectralField, SpectralField) {
    let (a, b) = seed.split_at(2);
    let u0 = forward_real(&grid, &grid.sample(|x| a[0] * (-(x[0] - a[1]).powi(2)).exp())).unwrap();
    let u1 = forward_real(&grid, &grid.sample(|x| b[0] * (-(x[0] + b[1]).powi(2) / 2.0).exp())).unwrap();
    (u0, u1)
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ode_residual(t in 1e-3f64..40.0, xi2 in xi2_strategy()) {
        let h = 1e-5;
        let e = evaluate(t, xi2).unwrap();
        let kpp = (kprimehat(t + h, xi2).unwrap() - kprimehat(t - h, xi2).unwrap()) / (2.0 * h);
        let kp = (khat(t + h, xi2).unwrap() - khat(t - h, xi2).unwrap()) / (2.0 * h);
        let scale = e.kprime.abs() + (1.0 + xi2) * e.k.abs() + 1e-300;
        prop_assert!((kpp + e.kprime + xi2 * e.k).abs() <= 1e-6 * scale);
        prop_assert!((kp - e.kprime).abs() <= 1e-6 * scale);
    }

    #[test]
    fn initial_values(xi2 in xi2_strategy()) {
        let e = evaluate(0.0, xi2).unwrap();
        prop_assert!(e.k.abs() <= 1e-15);
        prop_assert!((e.kprime - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn semigroup(seed in prop::collection::vec(-2.0f64..2.0, 4), t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let (u0, u1) = pair_from(&seed, grid);
        let (a, at) = propagate_linear(&u0, &u1, t + s).unwrap();
        let (m, mt) = propagate_linear(&u0, &u1, t).unwrap();
        let (b, bt) = propagate_linear(&m, &mt, s).unwrap();
        let scale = 1.0 + u0.max_abs_coeff() + u1.max_abs_coeff();
        prop_assert!(max_diff(&a, &b) <= 1e-10 * scale);
        prop_assert!(max_diff(&at, &bt) <= 1e-10 * scale);
    }

    #[test]
    fn velocity_at_zero(seed in prop::collection::vec(-2.0f64..2.0, 4)) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let (u0, u1) = pair_from(&seed, grid);
        let h = 1e-5;
        let (f0, _) = propagate_linear(&u0, &u1, 0.0).unwrap();
        let (f1, _) = propagate_linear(&u0, &u1, h).unwrap();
        let (f2, _) = propagate_linear(&u0, &u1, 2.0 * h).unwrap();
        let fd = f0.combine(-1.5 / h, &f1, 2.0 / h).unwrap().combine(1.0, &f2, -0.5 / h).unwrap();
        prop_assert!(max_diff(&fd, &u1) <= 1e-6 * (1.0 + u0.max_abs_coeff() + u1.max_abs_coeff()));
        prop_assert!(max_diff(&f0, &u0) <= 1e-15 * (1.0 + u0.max_abs_coeff()));
    }

    #[test]
    fn real_data_stays_real(seed in prop::collection::vec(-2.0f64..2.0, 4), t in 0.0f64..50.0) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let (u0, u1) = pair_from(&seed, grid);
        let (u, ut) = propagate_linear(&u0, &u1, t).unwrap();
        prop_assert!(u.conjugate_symmetry_defect() <= 1e-12);
        prop_assert!(ut.conjugate_symmetry_defect() <= 1e-12);
    }

    #[test]
    fn mode_energy_non_increasing(xi2 in xi2_strategy(), a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.0f64..30.0, dt in 0.0f64..2.0) {
        // E = |v'|² + |ξ|²|v|² for v = (K' + K) a + K b
        let energy = |t: f64| {
            let e = evaluate(t, xi2).unwrap();
            let v = (e.kprime + e.k) * a + e.k * b;
            let w = -xi2 * e.k * a + e.kprime * b;
            w * w + xi2 * v * v
        };
        let (e0, e1) = (energy(t), energy(t + dt));
        prop_assert!(e1 <= e0 * (1.0 + 1e-12) + 1e-300, "{e0} -> {e1}");
    }
}

#[test]
fn rejects_bad_arguments() {
    assert!(khat(-1.0, 1.0).is_err());
    assert!(khat(1.0, -1.0).is_err());
    assert!(khat(f64::NAN, 1.0).is_err());
    assert!(kprimehat(1.0, f64::INFINITY).is_err());
}

#[test]
fn zero_frequency_closed_form() {
    for t in [0.1, 1.0, 10.0, 100.0] {
        let k = khat(t, 0.0).unwrap();
        assert!((k - (1.0 - (-t).exp())).abs() < 1e-14);
    }
}
