use serde::{Deserialize, Serialize};

use super::grid::Frame;
use super::solver::SolveTrace;
use crate::error::{invalid, Error, Result};
use crate::numerics::{gl8_panel, linear_fit};
use crate::params::ProblemParams;

/// Sup-norm level above which samples enter the blow-up fit.
pub const FIT_LEVEL: f64 = 1e2;
/// Minimum number of samples above `FIT_LEVEL`.
pub const MIN_TAIL: usize = 10;
/// Relative slack on the lower-bound check (covers the error in T).
pub const LOWER_BOUND_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    pub blowup_time: f64,
    /// (T−t)^{1/(p−1)}‖u‖_∞ at the last sample.
    pub rate_constant: f64,
    /// (t, (T−t)^{1/(p−1)}‖u‖_∞) over the fit tail.
    pub rate_samples: Vec<(f64, f64)>,
    /// min over samples of ‖u‖_∞ / Ψ(T−t), Ψ the ODE lower bound.
    pub lower_bound_min_ratio: f64,
    pub lower_bound_ok: bool,
}

/// G(v) = ∫_v^∞ dz / (z^p + h(z)), the blow-up time of the ODE from v.
pub fn ode_blowup_time(params: &ProblemParams, v: f64) -> Result<f64> {
    let p = params.p;
    if !(v > 0.0) {
        return Err(invalid("v", "need v > 0"));
    }
    // z = v e^t
    let t_max = 40.0 / (p - 1.0);
    let panels = 40;
    let width = t_max / panels as f64;
    let mut total = 0.0;
    let mut bad = false;
    for k in 0..panels {
        total += gl8_panel(k as f64 * width, (k + 1) as f64 * width, |t| {
            let z = v * t.exp();
            let f = z.powf(p) + params.h(0, z);
            if f <= 0.0 {
                bad = true;
            }
            z / f
        });
    }
    if bad || !total.is_finite() {
        return Err(Error::Domain(format!("z^p + h(z) is not positive above {v}")));
    }
    Ok(total)
}

/// Ψ(τ): the amplitude whose ODE blow-up time is τ. Every solution satisfies
/// ‖u(t)‖_∞ ≥ Ψ(T−t).
pub fn ode_lower_bound(params: &ProblemParams, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "need tau > 0"));
    }
    let p = params.p;
    // Newton in log v on G(v) − τ, G′(v) = −1/(v^p + h(v))
    let mut lv = (params.kappa * tau.powf(-1.0 / (p - 1.0))).ln();
    for _ in 0..60 {
        let v = lv.exp();
        let g = ode_blowup_time(params, v)?;
        let f = v.powf(p) + params.h(0, v);
        let step = (g - tau) / (v / f);
        let step = step.clamp(-1.0, 1.0);
        lv += step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    Ok(lv.exp())
}

/// Estimates T from a linear fit of ‖u‖^{1−p} in t over the last samples and
/// the rate constant (T−t)^{1/(p−1)}‖u‖_∞.
pub fn detect_blowup(trace: &SolveTrace, params: &ProblemParams) -> Result<BlowupReport> {
    if trace.frame != Frame::Physical {
        return Err(invalid("frame", "blow-up detection needs a physical trace"));
    }
    let p = params.p;
    let tail: Vec<(f64, f64)> = trace.sup_norm.iter().copied().filter(|s| s.1 >= FIT_LEVEL).collect();
    if tail.len() < MIN_TAIL {
        return Err(Error::Inconclusive(format!(
            "{} samples above {FIT_LEVEL}, need {MIN_TAIL}",
            tail.len()
        )));
    }
    if tail.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::Inconclusive("sup norm is not increasing in the tail".into()));
    }
    let last = &tail[tail.len() - 6..];
    let x: Vec<f64> = last.iter().map(|s| s.0).collect();
    let y: Vec<f64> = last.iter().map(|s| s.1.powf(1.0 - p)).collect();
    let fit = linear_fit(&x, &y).ok_or_else(|| Error::Inconclusive("degenerate fit".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::Inconclusive("‖u‖^{1−p} is not decreasing".into()));
    }
    let t_blow = -fit.intercept / fit.slope;
    let (t_last, u_last) = *tail.last().unwrap();
    if !(t_blow > t_last) {
        return Err(Error::Inconclusive("extrapolated T precedes the last sample".into()));
    }
    let e = 1.0 / (p - 1.0);
    let rate_samples: Vec<(f64, f64)> = tail.iter().map(|&(t, u)| (t, (t_blow - t).powf(e) * u)).collect();
    let rate_constant = (t_blow - t_last).powf(e) * u_last;
    // lower bound on a thinned copy of the full history
    let stride = (trace.sup_norm.len() / 400).max(1);
    let mut min_ratio = f64::INFINITY;
    for (k, &(t, u)) in trace.sup_norm.iter().enumerate() {
        if k % stride != 0 && k + 20 < trace.sup_norm.len() {
            continue;
        }
        let tau = t_blow - t;
        if tau <= 0.0 {
            continue;
        }
        min_ratio = min_ratio.min(u / ode_lower_bound(params, tau)?);
    }
    Ok(BlowupReport {
        blowup_time: t_blow,
        rate_constant,
        rate_samples,
        lower_bound_min_ratio: min_ratio,
        lower_bound_ok: min_ratio >= 1.0 - LOWER_BOUND_SLACK,
    })
}
