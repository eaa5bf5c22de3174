//! Scalar Dormand–Prince 5(4) integrator with step-size control.

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude (0 picks one from the initial slope).
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options {
            rtol: 1e-10,
            atol: 1e-14,
            h0: 0.0,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

/// Why integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested end time.
    Reached,
    /// The observer asked to stop.
    Stopped,
    /// The step fell below the resolution of t.
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub t: f64,
    pub y: f64,
    pub steps: usize,
    pub termination: Termination,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y′ = f(t, y) from (t0, y0) toward t_end (either direction).
/// `observe(t, y, y′)` is called at the start and after every accepted step;
/// returning `false` stops the integration.
pub fn integrate<F, O>(mut f: F, t0: f64, y0: f64, t_end: f64, opts: Rk45Options, mut observe: O) -> Outcome
where
    F: FnMut(f64, f64) -> f64,
    O: FnMut(f64, f64, f64) -> bool,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let (mut t, mut y) = (t0, y0);
    let mut k = [0.0f64; 7];
    k[0] = f(t, y);
    let mut steps = 0;
    if !observe(t, y, k[0]) {
        return Outcome { t, y, steps, termination: Termination::Stopped };
    }
    let span = (t_end - t0).abs();
    let mut h = if opts.h0 > 0.0 {
        opts.h0
    } else {
        // Hairer–Nørsett–Wanner starting step
        let scale = opts.atol + opts.rtol * y.abs();
        let d0 = y.abs() / scale;
        let d1 = k[0].abs() / scale;
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let f1 = f(t + dir * h0, y + dir * h0 * k[0]);
        let d2 = (f1 - k[0]).abs() / scale / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    };
    h = h.min(opts.h_max).min(span.max(f64::MIN_POSITIVE));
    while steps < opts.max_steps {
        let remaining = (t_end - t).abs();
        if remaining <= 0.0 {
            return Outcome { t, y, steps, termination: Termination::Reached };
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hmin = 64.0 * f64::EPSILON * t.abs().max(1.0);
        if h < hmin && !last {
            return Outcome { t, y, steps, termination: Termination::StepUnderflow };
        }
        let hs = dir * h;
        for i in 1..7 {
            let mut yi = y;
            for j in 0..i {
                yi += hs * A[i][j] * k[j];
            }
            k[i] = f(t + C[i] * hs, yi);
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5 += hs * B5[i] * k[i];
            y4 += hs * B4[i] * k[i];
        }
        if !y5.is_finite() {
            // treat as a rejected step; shrink hard
            h *= 0.1;
            if h < hmin {
                return Outcome { t, y, steps, termination: Termination::NonFinite };
            }
            continue;
        }
        let scale = opts.atol + opts.rtol * y.abs().max(y5.abs());
        let err = (y5 - y4).abs() / scale;
        if err <= 1.0 {
            t = if last { t_end } else { t + hs };
            y = y5;
            k[0] = k[6];
            steps += 1;
            if !observe(t, y, k[0]) {
                return Outcome { t, y, steps, termination: Termination::Stopped };
            }
            if last {
                return Outcome { t, y, steps, termination: Termination::Reached };
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(opts.h_max);
    }
    Outcome { t, y, steps, termination: Termination::MaxSteps }
}
