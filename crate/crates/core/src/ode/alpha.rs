use serde::{Deserialize, Serialize};

use super::rk45::{integrate, Rk45Options, Termination};
use crate::error::{invalid, Error, Result};

/// Asymptotic branch of α′ = α² + c s^{−q}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaBranch {
    /// α(s) = −1/s + o(1/s)
    MinusOneOverS,
    /// α(s) = O(s^{1−q})
    SmallOrder,
    /// Neither test passed at the final window.
    Ambiguous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaReport {
    pub branch: AlphaBranch,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    /// s·α(s) at s_end.
    pub s_alpha_end: f64,
    /// s^{q−1} α(s) at s_end.
    pub scaled_end: f64,
    /// Relative misfit of the branch law over the final window.
    pub residual: f64,
}

/// Slack allowed on s·α → −1.
pub const MINUS_ONE_TOL: f64 = 0.1;
/// |s^{q−1}α| below this over the last decade counts as α ≡ 0.
pub const ZERO_FLOOR: f64 = 1e-12;

fn integrate_alpha(q: f64, c: f64, alpha0: f64, s_begin: f64, s_end: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut s, mut a) = (Vec::new(), Vec::new());
    let opts = Rk45Options {
        rtol: 1e-12,
        atol: 1e-20,
        ..Default::default()
    };
    let out = integrate(
        |t, y| y * y + c * t.powf(-q),
        s_begin,
        alpha0,
        s_end,
        opts,
        |t, y, _| {
            s.push(t);
            a.push(y);
            y.abs() < 1e6
        },
    );
    match out.termination {
        Termination::Reached => Ok((s, a)),
        Termination::Stopped | Termination::StepUnderflow | Termination::NonFinite => {
            Err(Error::BlowupBranch { s: out.t })
        }
        Termination::MaxSteps => Err(Error::Integration("alpha integration hit the step limit".into())),
    }
}

/// Integrates α′ = α² + c s^{−q} on [s_begin, s_end] and classifies the tail.
pub fn alpha_dichotomy(q: f64, c: f64, alpha0: f64, s_begin: f64, s_end: f64) -> Result<AlphaReport> {
    if !(q > 2.0 && q <= 3.0) {
        return Err(invalid("q", format!("need q in (2, 3], got {q}")));
    }
    if !(s_begin > 0.0 && s_end > s_begin) {
        return Err(invalid("s_end", "need 0 < s_begin < s_end"));
    }
    let (s, a) = integrate_alpha(q, c, alpha0, s_begin, s_end)?;
    let k = q - 1.0;
    let n = s.len();
    let s_alpha_end = s[n - 1] * a[n - 1];
    let scaled_end = s[n - 1].powf(k) * a[n - 1];
    let (branch, residual) = if (s_alpha_end + 1.0).abs() <= MINUS_ONE_TOL {
        (AlphaBranch::MinusOneOverS, (s_alpha_end + 1.0).abs())
    } else {
        // s^k α over the last decade should settle to a constant
        let lo = s_end / 10.0;
        let mid = (lo * s_end).sqrt();
        let y: Vec<(f64, f64)> = s
            .iter()
            .zip(&a)
            .filter(|(t, _)| **t >= lo.max(s_begin))
            .map(|(t, v)| (*t, t.powf(k) * v))
            .collect();
        let max_all = y.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let y_mid = y
            .iter()
            .find(|p| p.0 >= mid)
            .map_or(scaled_end, |p| p.1);
        let bounded = s_alpha_end.abs() <= MINUS_ONE_TOL && max_all.is_finite();
        // values this small are the zero solution to integrator precision
        let resid = if max_all <= ZERO_FLOOR {
            0.0
        } else {
            (scaled_end - y_mid).abs() / max_all
        };
        if bounded && resid < 0.5 {
            (AlphaBranch::SmallOrder, resid)
        } else {
            (AlphaBranch::Ambiguous, resid)
        }
    };
    Ok(AlphaReport {
        branch,
        s,
        alpha: a,
        s_alpha_end,
        scaled_end,
        residual,
    })
}

/// Initial value α0 on the separatrix between blow-up and the −1/s branch,
/// located by bisection.
///
/// A trajectory counts as above the separatrix when it blows up or ends above
/// the forced small solution −c s^{1−q}/(q−1).
pub fn alpha_separatrix(q: f64, c: f64, s_begin: f64, s_end: f64) -> Result<f64> {
    if !(q > 2.0 && q <= 3.0) {
        return Err(invalid("q", format!("need q in (2, 3], got {q}")));
    }
    let small_end = -c * s_end.powf(1.0 - q) / (q - 1.0);
    let above = |a0: f64| match integrate_alpha(q, c, a0, s_begin, s_end) {
        Err(Error::BlowupBranch { .. }) => Ok(true),
        Err(e) => Err(e),
        Ok((_, a)) => Ok(*a.last().unwrap() > small_end),
    };
    let mut lo = -2.0 / s_begin;
    if above(lo)? {
        return Err(Error::Inconclusive("lower bracket already above the separatrix".into()));
    }
    let mut hi = 1.0 / s_begin;
    let mut tries = 0;
    while !above(hi)? {
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::Inconclusive("no blow-up bracket found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}
