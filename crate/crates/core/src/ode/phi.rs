use super::rk45::{integrate, Rk45Options, Termination};
use super::OdeSolution;
use crate::error::{invalid, Error, Result};
use crate::params::{Perturbation, ProblemParams};

/// φ′ = −φ/(p−1) + |φ|^{p−1}φ + e^{−ps/(p−1)} h(e^{s/(p−1)} φ).
pub fn phi_rhs(params: &ProblemParams, s: f64, phi: f64) -> f64 {
    let p = params.p;
    -phi / (p - 1.0) + phi.abs().powf(p - 1.0) * phi + params.scaled_h(0, phi, s)
}

/// Truncated asymptotic series η ≈ C/s^a (1 + Σ_{j≤K} b_j s^{−j}),
/// b_j = (−1)^j ∏_{i<j}(a+i), for the log-damped family.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSeries {
    pub a: f64,
    pub c0_series: f64,
    pub b: Vec<f64>,
    pub k: usize,
}

impl PhiSeries {
    pub fn new(params: &ProblemParams, k: usize) -> Result<Self> {
        let c0_series = match params.perturbation {
            Perturbation::Zero => 0.0,
            Perturbation::LogDamped => params.mu * ((params.p - 1.0) / 2.0).powf(params.a),
            _ => {
                return Err(Error::Unsupported(format!(
                    "no asymptotic series for the `{}` perturbation",
                    params.perturbation.name()
                )))
            }
        };
        let mut b = Vec::with_capacity(k);
        let mut prod = 1.0;
        for j in 1..=k {
            prod *= -(params.a + (j - 1) as f64);
            b.push(prod);
        }
        Ok(PhiSeries {
            a: params.a,
            c0_series,
            b,
            k,
        })
    }

    /// η(s); errors when the last retained term exceeds its predecessor.
    pub fn eta(&self, s: f64) -> Result<f64> {
        let mut terms = vec![1.0];
        for (j, bj) in self.b.iter().enumerate() {
            terms.push(bj / s.powi(j as i32 + 1));
        }
        if self.k >= 1 && terms[self.k].abs() > terms[self.k - 1].abs() {
            return Err(Error::SeriesDivergent {
                s,
                k: self.k,
                prev: self.k - 1,
            });
        }
        Ok(self.c0_series / s.powf(self.a) * terms.iter().sum::<f64>())
    }
}

/// κ(1+η)^{−1/(p−1)} with η truncated after K correction terms.
pub fn eval_phi_series(params: &ProblemParams, s: f64, k: usize) -> Result<f64> {
    if matches!(params.perturbation, Perturbation::Zero) {
        return Ok(params.kappa);
    }
    let eta = PhiSeries::new(params, k)?.eta(s)?;
    if !(1.0 + eta > 0.0) {
        return Err(Error::Domain(format!("1 + eta = {} is not positive at s = {s}", 1.0 + eta)));
    }
    Ok(params.kappa * (1.0 + eta).powf(-1.0 / (params.p - 1.0)))
}

/// Knobs for [`solve_phi`].
#[derive(Debug, Clone, Copy)]
pub struct PhiOptions {
    /// The trajectory is seeded this far beyond `s_end` and integrated backward.
    pub seed_offset: f64,
    /// Series truncation used for the seed.
    pub k: usize,
    pub rtol: f64,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions {
            seed_offset: 30.0,
            k: 3,
            rtol: 1e-12,
        }
    }
}

/// The profile φ on [s_start, s_end].
///
/// κ is a repelling fixed point in forward s, so the trajectory is seeded
/// from the truncated series at s_end + seed_offset and integrated backward,
/// where seed errors contract like e^{−(s_seed−s)}.
pub fn solve_phi(params: &ProblemParams, s_start: f64, s_end: f64, opts: PhiOptions) -> Result<OdeSolution> {
    if s_start < params.s0 {
        return Err(invalid("s_start", format!("must be >= s0 = {}", params.s0)));
    }
    if !(s_end > s_start) {
        return Err(invalid("s_end", "must exceed s_start"));
    }
    let kappa = params.kappa;
    if matches!(params.perturbation, Perturbation::Zero) {
        return Ok(OdeSolution {
            times: vec![s_start, s_end],
            values: vec![kappa, kappa],
            derivs: vec![0.0, 0.0],
            blowup_time: None,
            rate_fit: None,
            rate_constant: None,
        });
    }
    let has_series = matches!(params.perturbation, Perturbation::LogDamped);
    if has_series {
        // validity of the truncated series at the requested start
        PhiSeries::new(params, opts.k)?.eta(s_start)?;
    }
    let s_seed = s_end + opts.seed_offset;
    let seed = if has_series {
        eval_phi_series(params, s_seed, opts.k)?
    } else {
        kappa
    };
    let (mut t, mut v, mut d) = (Vec::new(), Vec::new(), Vec::new());
    let ropts = Rk45Options {
        rtol: opts.rtol,
        atol: 1e-15,
        ..Default::default()
    };
    let out = integrate(|s, y| phi_rhs(params, s, y), s_seed, seed, s_start, ropts, |s, y, dy| {
        if s <= s_end + 1.0 {
            t.push(s);
            v.push(y);
            d.push(dy);
        }
        true
    });
    if out.termination != Termination::Reached {
        return Err(Error::Integration(format!("phi integration ended with {:?}", out.termination)));
    }
    t.reverse();
    v.reverse();
    d.reverse();
    Ok(OdeSolution {
        times: t,
        values: v,
        derivs: d,
        blowup_time: None,
        rate_fit: None,
        rate_constant: None,
    })
}

/// Integrates the φ-ODE from (s_from, phi_from) to s_to in either direction.
pub fn integrate_phi(params: &ProblemParams, s_from: f64, phi_from: f64, s_to: f64, rtol: f64) -> Result<f64> {
    let ropts = Rk45Options {
        rtol,
        atol: 1e-15,
        ..Default::default()
    };
    let out = integrate(|s, y| phi_rhs(params, s, y), s_from, phi_from, s_to, ropts, |_, _, _| true);
    match out.termination {
        Termination::Reached => Ok(out.y),
        other => Err(Error::Integration(format!("phi integration ended with {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_damped() -> ProblemParams {
        ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap()
    }

    #[test]
    fn coefficients_for_a_two() {
        let s = PhiSeries::new(&log_damped(), 3).unwrap();
        assert_eq!(s.b, vec![-2.0, 6.0, -24.0]);
        assert_eq!(s.c0_series, 0.25);
    }

    #[test]
    fn leading_order_series() {
        let pr = log_damped();
        let s = 40.0;
        let v = eval_phi_series(&pr, s, 0).unwrap();
        assert!((v - 1.0 / (1.0 + 0.25 / (s * s))).abs() < 1e-15);
    }

    #[test]
    fn zero_perturbation_is_kappa() {
        let pr = ProblemParams::derive(1, 3.0, 2.0, 10.0, 0.0, Perturbation::Zero).unwrap();
        assert_eq!(eval_phi_series(&pr, 7.0, 3).unwrap(), pr.kappa);
        let sol = solve_phi(&pr, 1.0, 50.0, Default::default()).unwrap();
        assert!(sol.values.iter().all(|&v| v == pr.kappa));
    }

    #[test]
    fn divergent_tail_detected() {
        assert!(matches!(
            eval_phi_series(&log_damped(), 3.0, 3),
            Err(Error::SeriesDivergent { .. })
        ));
    }

    #[test]
    fn solve_agrees_with_series() {
        let pr = log_damped();
        let sol = solve_phi(&pr, 10.0, 400.0, Default::default()).unwrap();
        for s in [50.0, 100.0, 200.0] {
            let a = sol.interpolate(s);
            let b = eval_phi_series(&pr, s, 3).unwrap();
            assert!(((a - 1.0) - (b - 1.0)).abs() < 0.01 * (b - 1.0).abs(), "s={s}");
        }
    }

    #[test]
    fn forward_reintegration_reproduces_endpoint() {
        let pr = log_damped();
        let sol = solve_phi(&pr, 20.0, 30.0, Default::default()).unwrap();
        let start = sol.values[0];
        let end = integrate_phi(&pr, 20.0, start, 30.0, 1e-13).unwrap();
        assert!((end - sol.interpolate(30.0)).abs() < 1e-7);
        let back = integrate_phi(&pr, 30.0, sol.interpolate(30.0), 20.0, 1e-13).unwrap();
        assert!((back - start).abs() < 1e-10);
    }
}
