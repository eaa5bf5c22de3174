use super::rk45::{integrate, Rk45Options, Termination};
use super::OdeSolution;
use crate::error::{invalid, Result};
use crate::numerics::linear_fit;
use crate::params::ProblemParams;

/// Knobs for [`solve_blowup_ode`].
#[derive(Debug, Clone, Copy)]
pub struct BlowupOdeOptions {
    /// Integration stops once v exceeds this value.
    pub v_stop: f64,
    /// Threshold at which the rate constant is read off.
    pub v_rate: f64,
    /// Samples with v below this are excluded from the log-log fit.
    pub v_fit_min: f64,
    /// Time horizon after which the run is declared global.
    pub t_horizon: f64,
    pub rtol: f64,
}

impl Default for BlowupOdeOptions {
    fn default() -> Self {
        BlowupOdeOptions {
            v_stop: 1e8,
            v_rate: 1e6,
            v_fit_min: 1e4,
            t_horizon: 1e4,
            rtol: 1e-10,
        }
    }
}

/// Integrates v′ = v^p + h(v) from v(t0) = v0 until v exceeds `v_stop`, then
/// extrapolates the blow-up time from the linear tail of v^{1−p}(t).
pub fn solve_blowup_ode(params: &ProblemParams, v0: f64, t0: f64, opts: BlowupOdeOptions) -> Result<OdeSolution> {
    if !(v0 > 0.0) {
        return Err(invalid("v0", "initial value must be positive"));
    }
    let p = params.p;
    let rhs = |_t: f64, v: f64| v.abs().powf(p - 1.0) * v + params.h(0, v);
    let (mut times, mut values, mut derivs) = (Vec::new(), Vec::new(), Vec::new());
    let ropts = Rk45Options {
        rtol: opts.rtol,
        atol: 1e-14,
        ..Default::default()
    };
    let out = integrate(rhs, t0, v0, t0 + opts.t_horizon, ropts, |t, v, d| {
        if times.last().is_some_and(|&last| t <= last) {
            return true;
        }
        times.push(t);
        values.push(v);
        derivs.push(d);
        v < opts.v_stop
    });
    let blew_up = match out.termination {
        Termination::Stopped => true,
        Termination::StepUnderflow | Termination::NonFinite => out.y > 1e3,
        _ => false,
    };
    let mut sol = OdeSolution {
        times,
        values,
        derivs,
        blowup_time: None,
        rate_fit: None,
        rate_constant: None,
    };
    if !blew_up {
        return Ok(sol);
    }
    // T from the last samples of v^{1-p}, which is asymptotically linear in t.
    let k = sol.times.len().min(6);
    let start = sol.times.len() - k;
    let tt: Vec<f64> = sol.times[start..].to_vec();
    let g: Vec<f64> = sol.values[start..].iter().map(|v| v.powf(1.0 - p)).collect();
    let big_t = match linear_fit(&tt, &g) {
        Some(fit) if fit.slope < 0.0 => -fit.intercept / fit.slope,
        _ => *sol.times.last().unwrap(),
    };
    sol.blowup_time = Some(big_t);
    let resolvable = |t: f64| big_t - t > 1e3 * f64::EPSILON * big_t.abs().max(1.0);
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&t, &v) in sol.times.iter().zip(&sol.values) {
        if v >= opts.v_fit_min && resolvable(t) {
            lx.push((big_t - t).ln());
            ly.push(v.ln());
        }
    }
    if let Some(fit) = linear_fit(&lx, &ly) {
        sol.rate_fit = Some((fit.intercept.exp(), fit.slope));
    }
    sol.rate_constant = sol
        .times
        .iter()
        .zip(&sol.values)
        .find(|(_, &v)| v >= opts.v_rate)
        .map(|(&t, &v)| (big_t - t).powf(1.0 / (p - 1.0)) * v);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Perturbation;

    fn zero(p: f64) -> ProblemParams {
        ProblemParams::derive(1, p, 2.0, 10.0, 0.0, Perturbation::Zero).unwrap()
    }

    #[test]
    fn quadratic_exact_solution() {
        let sol = solve_blowup_ode(&zero(2.0), 1.0, 0.0, Default::default()).unwrap();
        let t = sol.blowup_time.unwrap();
        assert!((t - 1.0).abs() < 1e-9, "T = {t}");
        let (c, e) = sol.rate_fit.unwrap();
        assert!((e + 1.0).abs() < 1e-4 && (c - 1.0).abs() < 1e-3);
        assert!((sol.rate_constant.unwrap() - 1.0).abs() < 1e-3);
        for (t, v) in sol.times.iter().zip(&sol.values).take(200) {
            assert!((v - 1.0 / (1.0 - t)).abs() < 1e-8 * v);
        }
    }

    #[test]
    fn cubic_exact_solution() {
        let sol = solve_blowup_ode(&zero(3.0), 1.0, 0.0, Default::default()).unwrap();
        assert!((sol.blowup_time.unwrap() - 0.5).abs() < 1e-9);
        assert!((sol.rate_constant.unwrap() - 0.5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn log_damped_rate() {
        let pr = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap();
        let sol = solve_blowup_ode(&pr, 1.0, 0.0, Default::default()).unwrap();
        let c = sol.rate_constant.unwrap();
        assert!((c - 1.0).abs() < 0.02, "rate constant {c}");
    }

    #[test]
    fn extrapolation_stable_under_refinement() {
        let pr = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap();
        let a = solve_blowup_ode(&pr, 1.0, 0.0, Default::default()).unwrap();
        let fine = BlowupOdeOptions { rtol: 1e-10 / 32.0, ..Default::default() };
        let b = solve_blowup_ode(&pr, 1.0, 0.0, fine).unwrap();
        assert!((a.blowup_time.unwrap() - b.blowup_time.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn global_run_has_no_blowup_time() {
        let pr = ProblemParams::derive(1, 1.5, 2.0, 10.0, -1.0, Perturbation::LogDamped).unwrap();
        let opts = BlowupOdeOptions { t_horizon: 50.0, ..Default::default() };
        let sol = solve_blowup_ode(&pr, 0.3, 0.0, opts).unwrap();
        assert!(sol.blowup_time.is_none());
        assert!(solve_blowup_ode(&pr, 0.0, 0.0, opts).is_err());
    }
}
