//! Oracles shared by the integration tests.

#![allow(dead_code)]

/// Dormand–Prince 5(4) with standard step-size control, for `y' = f(t, y)` in ℝ².
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri {
    pub fn new(tol: f64) -> Self {
        Dopri { rtol: tol, atol: tol }
    }

    /// Integrates from `t0` to `t1`; returns `None` if the solution leaves `|y| < cap`.
    pub fn solve<F>(&self, f: F, t0: f64, y0: [f64; 2], t1: f64, cap: f64) -> Option<[f64; 2]>
    where
        F: Fn(f64, [f64; 2]) -> [f64; 2],
    {
        let mut t = t0;
        let mut y = y0;
        let mut h = ((t1 - t0) / 100.0).min(1e-3);
        while t < t1 {
            if t + h > t1 {
                h = t1 - t;
            }
            let mut k = [[0.0; 2]; 7];
            for s in 0..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += h * A[s][j] * kj[0];
                    ys[1] += h * A[s][j] * kj[1];
                }
                k[s] = f(t + C[s] * h, ys);
            }
            let mut y5 = y;
            let mut y4 = y;
            for s in 0..7 {
                for d in 0..2 {
                    y5[d] += h * B5[s] * k[s][d];
                    y4[d] += h * B4[s] * k[s][d];
                }
            }
            let err = ((0..2)
                .map(|d| {
                    let sc = self.atol + self.rtol * y[d].abs().max(y5[d].abs());
                    ((y5[d] - y4[d]) / sc).powi(2)
                })
                .sum::<f64>()
                / 2.0)
                .sqrt();
            if !err.is_finite() {
                h /= 10.0;
                if h < 1e-14 {
                    return None;
                }
                continue;
            }
            if err <= 1.0 {
                t += h;
                y = y5;
                if y[0].abs() >= cap || !y[0].is_finite() {
                    return None;
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if h < 1e-14 {
                return None;
            }
        }
        Some(y)
    }
}

/// `v'' + v' = |v|^p` as a first-order system.
pub fn damped_ode(p: f64) -> impl Fn(f64, [f64; 2]) -> [f64; 2] {
    move |_, [v, w]| [w, v.abs().powf(p) - w]
}

/// Time at which the ODE solution first exceeds `cap`, by bisection on the horizon.
pub fn ode_blowup_time(p: f64, y0: [f64; 2], cap: f64) -> f64 {
    let ode = Dopri::new(1e-12);
    let mut hi = 1.0;
    while ode.solve(damped_ode(p), 0.0, y0, hi, cap).is_some() {
        hi *= 2.0;
        assert!(hi < 1e6, "no blow-up");
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ode.solve(damped_ode(p), 0.0, y0, mid, cap).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
