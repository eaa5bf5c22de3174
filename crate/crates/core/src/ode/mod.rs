//! Scalar ODE families: the blow-up ODE v′ = v^p + h(v), the profile φ(s)
//! and the α-dichotomy ODE.

mod alpha;
mod blowup;
mod phi;
pub mod rk45;

pub use alpha::{alpha_dichotomy, alpha_separatrix, AlphaBranch, AlphaReport, MINUS_ONE_TOL, ZERO_FLOOR};
pub use blowup::{solve_blowup_ode, BlowupOdeOptions};
pub use phi::{eval_phi_series, integrate_phi, phi_rhs, solve_phi, PhiOptions, PhiSeries};

use serde::{Deserialize, Serialize};

/// Sampled trajectory of a scalar ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    /// Strictly increasing sample times.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// dv/dt at each sample.
    pub derivs: Vec<f64>,
    pub blowup_time: Option<f64>,
    /// (C, exponent) with v ≈ C (T−t)^{exponent}.
    pub rate_fit: Option<(f64, f64)>,
    /// (T−t)^{1/(p−1)} v at the first sample with v ≥ the rate threshold.
    pub rate_constant: Option<f64>,
}

impl OdeSolution {
    /// Cubic Hermite interpolation between samples (clamped to the ends).
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 {
            return f64::NAN;
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let u = (t - t0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
    }

    /// CSV body with columns (t, value).
    pub fn to_csv(&self, t_name: &str) -> String {
        let mut s = format!("{t_name},value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{},{}\n", crate::csv::num(*t), crate::csv::num(*v)));
        }
        s
    }
}
