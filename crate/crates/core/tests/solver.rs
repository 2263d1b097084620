use dampwave::grid::Grid;
use dampwave::kernel::propagate_linear;
use dampwave::profiles::{DataPair, Family};
use dampwave::solver::{run, Outcome, PropagatorState, SimConfig, Stepper};
use proptest::prelude::*;

fn gaussian(grid: &Grid, eps: f64) -> DataPair {
    DataPair::from_family(grid, Family::LaplacianGaussian { k: 0 }, eps).unwrap()
}

fn blowup_time(eps: f64, p: f64) -> f64 {
    let grid = Grid::new(1, 128, 16.0).unwrap();
    let cfg = SimConfig::new(gaussian(&grid, eps), p, 0.01, 50.0);
    match run(&cfg).unwrap().outcome {
        Outcome::BlewUp { t_b, .. } => t_b,
        Outcome::SurvivedHorizon => f64::INFINITY,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_mode_energy_decreases(eps in 0.1f64..3.0, dt in 0.01f64..0.5) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let data = gaussian(&grid, eps);
        let mut stepper = Stepper::new(grid, dt, 2.0, true).unwrap().linear(true);
        let mut state = PropagatorState::initial(&data);
        let energy = |s: &PropagatorState| -> Vec<f64> {
            (0..grid.len())
                .map(|i| s.ut.coeffs()[i].norm_sqr() + grid.xi2(i) * s.u.coeffs()[i].norm_sqr())
                .collect()
        };
        let mut prev = energy(&state);
        for _ in 0..50 {
            stepper.advance(&mut state).unwrap();
            let cur = energy(&state);
            for (a, b) in prev.iter().zip(&cur) {
                prop_assert!(*b <= a * (1.0 + 1e-12) + 1e-300);
            }
            prev = cur;
        }
    }

    #[test]
    fn linear_stepper_matches_propagator(eps in 0.1f64..3.0, steps in 1usize..100) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let data = gaussian(&grid, eps);
        let dt = 0.05;
        let mut stepper = Stepper::new(grid, dt, 2.0, true).unwrap().linear(true);
        let mut state = PropagatorState::initial(&data);
        for _ in 0..steps {
            stepper.advance(&mut state).unwrap();
        }
        let s0 = PropagatorState::initial(&data);
        let (u, _) = propagate_linear(&s0.u, &s0.ut, steps as f64 * dt).unwrap();
        let err = u.coeffs().iter().zip(state.u.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * (1.0 + u.max_abs_coeff()), "err {err}");
    }

    #[test]
    fn lifespan_shrinks_with_amplitude(eps in 1.0f64..4.0, factor in 1.2f64..2.0) {
        let (a, b) = (blowup_time(eps, 2.0), blowup_time(eps * factor, 2.0));
        prop_assert!(b <= a, "{b} > {a}");
    }

    #[test]
    fn lifespan_shrinks_with_power(p in 2.0f64..3.5, dp in 0.2f64..1.0) {
        // amplitude well above 1 so that |u|^p grows with p
        let (a, b) = (blowup_time(4.0, p), blowup_time(4.0, p + dp));
        prop_assert!(b <= a, "{b} > {a}");
    }
}

#[test]
fn runs_are_deterministic() {
    let grid = Grid::new(1, 128, 16.0).unwrap();
    let mut cfg = SimConfig::new(gaussian(&grid, 2.0), 2.0, 0.01, 20.0);
    cfg.keep_snapshots = true;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.outcome.blowup_time().is_some());
}

#[test]
fn records_stay_below_threshold() {
    let grid = Grid::new(1, 128, 16.0).unwrap();
    let cfg = SimConfig::new(gaussian(&grid, 3.0), 2.0, 0.01, 50.0);
    let tr = run(&cfg).unwrap();
    let t_b = tr.outcome.blowup_time().unwrap();
    assert!(tr
        .records
        .iter()
        .all(|r| r.linf.is_finite() && r.linf < cfg.blowup_threshold && r.t <= t_b));
    assert!(tr.records.windows(2).all(|w| w[0].t < w[1].t));
    assert!(tr
        .records
        .iter()
        .all(|r| r.l2.is_finite() && r.hs.is_finite() && r.hdotneg.is_finite()));
}

#[test]
fn config_validation() {
    let grid = Grid::new(1, 128, 16.0).unwrap();
    let ok = SimConfig::new(gaussian(&grid, 1.0), 2.0, 0.01, 1.0);
    assert!(ok.validate().is_ok());
    let guard = 0.5 / grid.xi_max();
    let mut c = ok.clone();
    c.dt = 1.01 * guard;
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.blowup_threshold = 1e-3;
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.record_every = 0;
    assert!(c.validate().is_err());
    let mut c = ok;
    c.p = 1.0;
    assert!(run(&c).is_err());
}

#[test]
fn zero_amplitude_rejected() {
    let grid = Grid::new(1, 64, 10.0).unwrap();
    assert!(DataPair::from_family(&grid, Family::LaplacianGaussian { k: 0 }, 0.0).is_err());
}

#[test]
fn bad_step_rejected() {
    let grid = Grid::new(1, 64, 10.0).unwrap();
    assert!(Stepper::new(grid, 0.0, 2.0, true).is_err());
    assert!(Stepper::new(grid, -0.1, 2.0, true).is_err());
    assert!(Stepper::new(grid, 0.1, 1.0, true).is_err());
}
