//! ρ-weighted functionals of w: E0, I, E, J, the localized E_ψ, the
//! Lyapunov audit, the blow-up criterion and windowed energy diagnostics.
//!
//! Integrals use the grid rule with weights ρ_i Δyⁿ. The gradient term is
//! ½((D⁺w)² + (D⁻w)²) per axis at each node, which makes the discrete E0 the
//! exact energy of the flux-form operator used by the stepper.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::trapezoid;
use crate::ode::rk45::{integrate, Rk45Options, Termination};
use crate::params::ProblemParams;
use crate::pde::{run_w, Field, Frame, Grid, SolveTrace, WRunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub s: f64,
    pub e0: f64,
    pub i: f64,
    pub e: f64,
    pub j: f64,
    /// ∫ w_s² ρ.
    pub ws_l2sq: f64,
    /// ∫ w² ρ.
    pub l2: f64,
    /// ∫ |w|^{p+1} ρ.
    pub lp1: f64,
    /// ∫ (|∇w|² + w²) ρ.
    pub h1: f64,
}

pub const REPORT_COLUMNS: [&str; 9] = ["s", "E0", "I", "E", "J", "ws_l2sq", "l2", "lp1", "h1"];

impl FunctionalReport {
    pub fn row(&self) -> Vec<f64> {
        vec![self.s, self.e0, self.i, self.e, self.j, self.ws_l2sq, self.l2, self.lp1, self.h1]
    }
}

/// e^{γ s^{1−a}/(a−1)}.
pub fn j_factor(params: &ProblemParams, s: f64) -> f64 {
    if params.gamma == 0.0 {
        1.0
    } else {
        (params.gamma / (params.a - 1.0) * s.powf(1.0 - params.a)).exp()
    }
}

/// J = E·e^{γ s^{1−a}/(a−1)} + θ s^{1−a}.
pub fn j_from_e(params: &ProblemParams, e: f64, s: f64) -> f64 {
    let offset = if params.theta == 0.0 { 0.0 } else { params.theta * s.powf(1.0 - params.a) };
    e * j_factor(params, s) + offset
}

/// |∇w|² at every node.
pub fn grad_sq(field: &Field) -> Vec<f64> {
    let g = &field.grid;
    let (m, h) = (g.m, g.dy);
    let w = &field.values;
    let mut out = vec![0.0; w.len()];
    let axis = |out: &mut Vec<f64>, start: usize, stride: usize| {
        for i in 0..m {
            let k = start + i * stride;
            let mut acc = 0.0;
            if i + 1 < m {
                acc += ((w[k + stride] - w[k]) / h).powi(2);
            }
            if i > 0 {
                acc += ((w[k] - w[k - stride]) / h).powi(2);
            }
            out[k] += 0.5 * acc;
        }
    };
    if g.n == 1 {
        axis(&mut out, 0, 1);
    } else {
        for r in 0..m {
            axis(&mut out, r * m, 1);
            axis(&mut out, r, m);
        }
    }
    out
}

/// Evaluator with cached weights for one grid.
#[derive(Debug, Clone)]
pub struct Functionals {
    pub grid: Grid,
    pub weights: Vec<f64>,
}

impl Functionals {
    pub fn new(grid: &Grid) -> Functionals {
        Functionals {
            grid: grid.clone(),
            weights: grid.weights(),
        }
    }

    fn sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(k, w)| w * f(k)).sum()
    }

    pub fn e0(&self, field: &Field, p: f64) -> f64 {
        let g2 = grad_sq(field);
        let w = &field.values;
        self.sum(|k| 0.5 * g2[k] + w[k] * w[k] / (2.0 * (p - 1.0)) - w[k].abs().powf(p + 1.0) / (p + 1.0))
    }

    /// I = −∫ e^{−(p+1)s/(p−1)} H(e^{s/(p−1)} w) ρ.
    pub fn i(&self, field: &Field, params: &ProblemParams) -> f64 {
        if params.is_zero() {
            return 0.0;
        }
        let s = field.time;
        -self.sum(|k| params.scaled_big_h(field.values[k], s))
    }

    /// (∫ scaled H ρ, ∫ scaled h·w ρ), the perturbation terms of dE/ds.
    pub fn perturbation_integrals(&self, field: &Field, params: &ProblemParams) -> (f64, f64) {
        if params.is_zero() {
            return (0.0, 0.0);
        }
        let s = field.time;
        let w = &field.values;
        (
            self.sum(|k| params.scaled_big_h(w[k], s)),
            self.sum(|k| params.scaled_h(0, w[k], s) * w[k]),
        )
    }

    /// Full report; `ws` is w_s at the nodes (zero when absent).
    pub fn report(&self, field: &Field, params: &ProblemParams, ws: Option<&[f64]>) -> FunctionalReport {
        let p = params.p;
        let s = field.time;
        let w = &field.values;
        let g2 = grad_sq(field);
        let l2 = self.sum(|k| w[k] * w[k]);
        let lp1 = self.sum(|k| w[k].abs().powf(p + 1.0));
        let grad = self.sum(|k| g2[k]);
        let e0 = 0.5 * grad + l2 / (2.0 * (p - 1.0)) - lp1 / (p + 1.0);
        let i = self.i(field, params);
        let e = e0 + i;
        FunctionalReport {
            s,
            e0,
            i,
            e,
            j: j_from_e(params, e, s),
            ws_l2sq: ws.map_or(0.0, |v| self.sum(|k| v[k] * v[k])),
            l2,
            lp1,
            h1: grad + l2,
        }
    }

    /// −4J + ((p−1)/(p+1)) (∫w²ρ)^{(p+1)/2}.
    pub fn criterion(&self, field: &Field, params: &ProblemParams) -> Criterion {
        let r = self.report(field, params, None);
        let p = params.p;
        let margin = -4.0 * r.j + (p - 1.0) / (p + 1.0) * r.l2.powf((p + 1.0) / 2.0);
        Criterion {
            triggered: margin > 0.0,
            margin,
        }
    }
}

pub fn compute_e0(field: &Field, p: f64) -> f64 {
    Functionals::new(&field.grid).e0(field, p)
}

pub fn compute_i(field: &Field, params: &ProblemParams) -> f64 {
    Functionals::new(&field.grid).i(field, params)
}

pub fn compute_j(field: &Field, params: &ProblemParams, ws: Option<&[f64]>) -> FunctionalReport {
    Functionals::new(&field.grid).report(field, params, ws)
}

/// Recomputes J for another θ (J is affine in θ).
pub fn with_theta(reports: &[FunctionalReport], params: &ProblemParams, theta: f64) -> Vec<FunctionalReport> {
    reports
        .iter()
        .map(|r| FunctionalReport {
            j: if theta == params.theta {
                r.j
            } else {
                r.j + (theta - params.theta) * r.s.powf(1.0 - params.a)
            },
            ..*r
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovCheck {
    /// max over consecutive pairs of J(s₂) − J(s₁) + ½∫ws_l2sq ds.
    pub max_violation: f64,
    /// Per-pair values (s₁, s₂, value).
    pub pairs: Vec<(f64, f64, f64)>,
}

pub fn verify_lyapunov(reports: &[FunctionalReport]) -> LyapunovCheck {
    let pairs: Vec<(f64, f64, f64)> = reports
        .windows(2)
        .map(|w| {
            let diss = 0.5 * (w[1].s - w[0].s) * 0.5 * (w[0].ws_l2sq + w[1].ws_l2sq);
            (w[0].s, w[1].s, w[1].j - w[0].j + diss)
        })
        .collect();
    // NaN counts as an infinite violation
    let max_violation = pairs
        .iter()
        .map(|p| if p.2.is_nan() { f64::INFINITY } else { p.2 })
        .fold(f64::NEG_INFINITY, f64::max);
    LyapunovCheck {
        max_violation: if pairs.is_empty() { 0.0 } else { max_violation },
        pairs,
    }
}

/// Earliest s beyond which every pair passes `tol`; None if the last pair fails.
pub fn measure_onset(check: &LyapunovCheck, tol: f64) -> Option<f64> {
    match check.pairs.iter().rposition(|p| p.2 > tol) {
        None => check.pairs.first().map(|p| p.0),
        Some(k) if k + 1 < check.pairs.len() => Some(check.pairs[k + 1].0),
        Some(_) => None,
    }
}

/// Smallest θ in {0, 1, 2, 4, …, 2^max_pow} with no violation above `tol`.
pub fn select_theta(reports: &[FunctionalReport], params: &ProblemParams, tol: f64, max_pow: u32) -> Option<f64> {
    std::iter::once(0.0)
        .chain((0..=max_pow).map(|k| 2f64.powi(k as i32)))
        .find(|&theta| verify_lyapunov(&with_theta(reports, params, theta)).max_violation <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub triggered: bool,
    pub margin: f64,
}

pub fn blowup_criterion(field: &Field, params: &ProblemParams) -> Criterion {
    Functionals::new(&field.grid).criterion(field, params)
}

/// One cell of a constant-data criterion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionCell {
    pub w0: f64,
    pub margin: f64,
    pub triggered: bool,
    /// Whether the space-constant solution leaves every bound before s + horizon.
    pub blows_up: bool,
}

/// Integrates the space-constant reduction w′ = −w/(p−1) + |w|^{p−1}w + scaled h
/// from (s, w0); true if |w| reaches 10⁶ within `horizon`.
pub fn constant_run_blows_up(params: &ProblemParams, w0: f64, s: f64, horizon: f64) -> bool {
    let c = 1.0 / (params.p - 1.0);
    let out = integrate(
        |t, w| -c * w + w.abs().powf(params.p - 1.0) * w + params.scaled_h(0, w, t),
        s,
        w0,
        s + horizon,
        Rk45Options::default(),
        |_, w, _| w.abs() < 1e6,
    );
    out.termination != Termination::Reached
}

/// Evaluates the criterion on constant fields w ≡ w0 at time s and runs the
/// scalar reduction for each.
pub fn criterion_sweep(params: &ProblemParams, grid: &Grid, s: f64, w0s: &[f64], horizon: f64) -> Result<Vec<CriterionCell>> {
    let f = Functionals::new(grid);
    w0s.iter()
        .map(|&w0| {
            let field = Field::from_fn(grid.clone(), s, Frame::Similarity, |_| w0)?;
            let c = f.criterion(&field, params);
            Ok(CriterionCell {
                w0,
                margin: c.margin,
                triggered: c.triggered,
                blows_up: constant_run_blows_up(params, w0, s, horizon),
            })
        })
        .collect()
}

/// Cutoff ψ(r): 1 on [0, R], 0 beyond 2R, quintic smoothstep in between.
pub fn psi_cutoff(r: f64, radius: f64) -> f64 {
    let t = ((r - radius) / radius).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Localized functional E_ψ with the radial cutoff of radius R.
pub fn compute_e_psi(field: &Field, params: &ProblemParams, radius: f64) -> Result<f64> {
    let half = field.grid.half_width();
    if !(radius > 0.0 && radius < half / 2.0) {
        return Err(invalid("R", format!("need 0 < R < L/2 = {}", half / 2.0)));
    }
    let f = Functionals::new(&field.grid);
    let g = &field.grid;
    let p = params.p;
    let s = field.time;
    let g2 = grad_sq(field);
    let w = &field.values;
    Ok(f.sum(|k| {
        let y = g.point(k);
        let r = y[..g.n].iter().map(|v| v * v).sum::<f64>().sqrt();
        let psi2 = psi_cutoff(r, radius).powi(2);
        if psi2 == 0.0 {
            return 0.0;
        }
        let h = if params.is_zero() { 0.0 } else { params.scaled_big_h(w[k], s) };
        psi2 * (0.5 * (g2[k] + w[k] * w[k] / (p - 1.0)) - w[k].abs().powf(p + 1.0) / (p + 1.0) - h)
    }))
}

/// (n/(p+1) − (2−n)/2)∫|∇w|²ρ + ½(½ − 1/(p+1))∫|y|²|∇w|²ρ.
pub fn pohozaev_residual(field: &Field, p: f64) -> f64 {
    let f = Functionals::new(&field.grid);
    let g = &field.grid;
    let n = g.n as f64;
    let g2 = grad_sq(field);
    let a = f.sum(|k| g2[k]);
    let b = f.sum(|k| {
        let y = g.point(k);
        g2[k] * y[..g.n].iter().map(|v| v * v).sum::<f64>()
    });
    (n / (p + 1.0) - (2.0 - n) / 2.0) * a + 0.5 * (0.5 - 1.0 / (p + 1.0)) * b
}

/// ∫_{B_R} |w|^{p+1} dy (unweighted).
pub fn ball_lp1(field: &Field, p: f64, radius: f64) -> f64 {
    let g = &field.grid;
    let vol = g.dy.powi(g.n as i32);
    field
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| g.point(*k)[..g.n].iter().map(|v| v * v).sum::<f64>() <= radius * radius)
        .map(|(_, w)| w.abs().powf(p + 1.0) * vol)
        .sum()
}

/// Windowed energy quantities over [s, s+1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub s: f64,
    /// (i) ∫ ‖w_s‖² over the window.
    pub ws_window: f64,
    /// (ii) ‖w(s)‖²_{L²_ρ}.
    pub l2: f64,
    /// (iii) ‖w‖^{p+1}_{L^{p+1}_ρ} / (1 + ‖w‖²_{H¹_ρ}).
    pub lp1_over_h1: f64,
    /// (iv) ‖w‖²_{H¹_ρ} / (1 + ‖w_s‖_{L²_ρ}).
    pub h1_over_ws: f64,
    /// (v) ∫ ‖w‖^{2(p+1)}_{L^{p+1}_ρ} over the window.
    pub lp1_window: f64,
    /// (vi) ∫ ‖w‖²_{H¹_ρ} over the window.
    pub h1_window: f64,
    /// ∫ (∫_{B_R}|w|^{p+1})^q over the window, q = 2 and 4.
    pub key_q2: f64,
    pub key_q4: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub j_first: f64,
    pub rows: Vec<WindowRow>,
    /// max of each column over the rows (i)…(vi), then the two key integrals.
    pub envelope: [f64; 8],
    /// (i) ≤ 2 J(s_first) on every window.
    pub item_i_ok: bool,
    /// Every quantity finite.
    pub bounded: bool,
}

/// Windowed diagnostics from a report trace and the matching B_R integrals.
pub fn energy_diagnostics(reports: &[FunctionalReport], ball: &[f64]) -> Result<Diagnostics> {
    if reports.len() != ball.len() {
        return Err(invalid("ball", "needs one entry per report"));
    }
    if reports.len() < 2 || reports.last().unwrap().s - reports[0].s < 1.0 {
        return Err(invalid("reports", "the trace must span at least one unit of s"));
    }
    let s: Vec<f64> = reports.iter().map(|r| r.s).collect();
    let mut rows = Vec::new();
    let s_last = *s.last().unwrap();
    for (k, r) in reports.iter().enumerate() {
        if r.s + 1.0 > s_last + 1e-9 {
            break;
        }
        let end = s.partition_point(|&t| t <= r.s + 1.0 + 1e-9);
        let win = k..end;
        let ts = &s[win.clone()];
        let col = |f: &dyn Fn(usize) -> f64| -> f64 {
            let v: Vec<f64> = win.clone().map(f).collect();
            trapezoid(ts, &v)
        };
        rows.push(WindowRow {
            s: r.s,
            ws_window: col(&|i| reports[i].ws_l2sq),
            l2: r.l2,
            lp1_over_h1: r.lp1 / (1.0 + r.h1),
            h1_over_ws: r.h1 / (1.0 + r.ws_l2sq.sqrt()),
            lp1_window: col(&|i| reports[i].lp1.powi(2)),
            h1_window: col(&|i| reports[i].h1),
            key_q2: col(&|i| ball[i].powi(2)),
            key_q4: col(&|i| ball[i].powi(4)),
        });
    }
    let mut envelope = [f64::NEG_INFINITY; 8];
    for r in &rows {
        let v = [r.ws_window, r.l2, r.lp1_over_h1, r.h1_over_ws, r.lp1_window, r.h1_window, r.key_q2, r.key_q4];
        for (e, x) in envelope.iter_mut().zip(v) {
            *e = e.max(x);
        }
    }
    let j_first = reports[0].j;
    let item_i_ok = rows.iter().all(|r| r.ws_window <= 2.0 * j_first.max(0.0) + 1e-12);
    let bounded = envelope.iter().all(|v| v.is_finite());
    Ok(Diagnostics {
        j_first,
        rows,
        envelope,
        item_i_ok,
        bounded,
    })
}

/// Runs step_w and records a report every `every` steps (and at both ends).
pub fn audit_run(
    field: Field,
    params: &ProblemParams,
    opts: &WRunOptions,
    every: usize,
    ball_radius: Option<f64>,
) -> Result<(SolveTrace, Vec<FunctionalReport>, Vec<f64>)> {
    let f = Functionals::new(&field.grid);
    let mut reports = Vec::new();
    let mut ball = Vec::new();
    let mut k = 0usize;
    let every = every.max(1);
    let s_end = opts.s_end;
    let trace = run_w(field, params, opts, |solver| {
        let fl = solver.field();
        let last = fl.time >= s_end - 1e-9 * opts.ds;
        if k % every == 0 || last {
            let ws = solver.rhs();
            reports.push(f.report(fl, params, Some(&ws)));
            if let Some(r) = ball_radius {
                ball.push(ball_lp1(fl, params.p, r));
            }
        }
        k += 1;
        true
    })?;
    Ok((trace, reports, ball))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eval_h;
    use crate::params::Perturbation;
    use crate::pde::ModeControl;

    fn zero(p: f64) -> ProblemParams {
        ProblemParams::derive(1, p, 2.0, 1.0, 1.0, Perturbation::Zero).unwrap()
    }

    fn grid() -> Grid {
        Grid::new(1, 20.0, 0.05).unwrap()
    }

    fn constant(v: f64, s: f64) -> Field {
        Field::from_fn(grid(), s, Frame::Similarity, |_| v).unwrap()
    }

    #[test]
    fn constant_field_closed_forms() {
        let prm = zero(2.0);
        assert!((compute_e0(&constant(1.0, 1.0), 2.0) - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(compute_e0(&constant(0.0, 1.0), 2.0), 0.0);
        assert!((compute_e0(&constant(2.0, 1.0), 2.0) + 2.0 / 3.0).abs() < 1e-12);
        let r = compute_j(&constant(1.0, 3.0), &prm, None);
        assert_eq!(r.j, r.e0);
        let k = blowup_criterion(&constant(1.0, 3.0), &prm);
        assert!(!k.triggered && (k.margin + 1.0 / 3.0).abs() < 1e-12);
        let k = blowup_criterion(&constant(2.0, 3.0), &prm);
        assert!(k.triggered && (k.margin - 16.0 / 3.0).abs() < 1e-12);
        let k = blowup_criterion(&constant(0.0, 3.0), &prm);
        assert!(!k.triggered && k.margin == 0.0);
    }

    #[test]
    fn i_obeys_the_h_estimate() {
        let prm = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap();
        let s = 100.0;
        let f = constant(prm.kappa, s);
        let i = compute_i(&f, &prm);
        assert!(i != 0.0);
        assert!(i.abs() <= 2.0 * prm.c0 * s.powf(-prm.a) * (prm.kappa.powi(3) + 1.0));
        assert_eq!(compute_i(&constant(0.0, s), &prm), 0.0);
    }

    #[test]
    fn theta_is_affine() {
        let prm = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap();
        let f = constant(0.7, 4.0);
        let a = compute_j(&f, &prm.clone().with_theta(1.0).unwrap(), None);
        let b = compute_j(&f, &prm.with_theta(2.0).unwrap(), None);
        assert!((b.j - a.j - 4f64.powf(-1.0)).abs() < 1e-14);
    }

    #[test]
    fn stationary_run_has_zero_violation() {
        let prm = zero(2.0);
        let opts = WRunOptions {
            ds: 1e-3,
            s_end: 0.2,
            ..Default::default()
        };
        let (_, reports, _) = audit_run(constant(1.0, 0.0), &prm, &opts, 10, None).unwrap();
        let c = verify_lyapunov(&reports);
        assert!(c.max_violation.abs() < 1e-14, "{}", c.max_violation);
    }

    #[test]
    fn decaying_run_is_lyapunov() {
        let prm = zero(2.0);
        let f = Field::from_fn(grid(), 0.0, Frame::Similarity, |y| 0.5 * (-y[0] * y[0] / 8.0).exp()).unwrap();
        let opts = WRunOptions {
            ds: 1e-3,
            s_end: 2.0,
            ..Default::default()
        };
        let (_, reports, _) = audit_run(f, &prm, &opts, 1, None).unwrap();
        let c = verify_lyapunov(&reports);
        assert!(c.max_violation <= 1e-4, "{}", c.max_violation);
        assert!(reports.last().unwrap().j < reports[0].j, "{:?} {:?}", reports[0], reports.last());
    }

    #[test]
    fn energy_identity_residual_is_small() {
        let prm = ProblemParams::derive(1, 2.0, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap();
        let f0 = Field::from_fn(grid(), 3.0, Frame::Similarity, |y| prm.kappa * 0.8 + 0.1 * (-y[0] * y[0]).exp()).unwrap();
        let mut solver = crate::pde::WSolver::new(f0, &prm, ModeControl::Free).unwrap();
        let fx = Functionals::new(&grid());
        let ds = 1e-4;
        let e1 = fx.report(solver.field(), &prm, None).e;
        let ws = solver.rhs();
        let diss = fx.report(solver.field(), &prm, Some(&ws)).ws_l2sq;
        let (hh, hw) = fx.perturbation_integrals(solver.field(), &prm);
        solver.step(ds).unwrap();
        let e2 = fx.report(solver.field(), &prm, None).e;
        let p = prm.p;
        let resid = (e2 - e1) / ds + diss - (p + 1.0) / (p - 1.0) * hh + hw / (p - 1.0);
        assert!(resid.abs() < 1e-3 * diss.max(1e-3), "resid {resid} diss {diss}");
    }

    #[test]
    fn pohozaev() {
        assert_eq!(pohozaev_residual(&constant(1.0, 0.0), 2.0), 0.0);
        let f = Field::from_fn(grid(), 0.0, Frame::Similarity, |y| 1.0 + eval_h(2, y[0])).unwrap();
        assert!(pohozaev_residual(&f, 2.0) > 0.0);
    }

    #[test]
    fn e_psi_limits() {
        let prm = zero(2.0);
        assert!(compute_e_psi(&constant(1.0, 0.0), &prm, 10.0).is_err());
        assert_eq!(compute_e_psi(&constant(0.0, 0.0), &prm, 5.0).unwrap(), 0.0);
        let near = compute_e_psi(&constant(1.0, 0.0), &prm, 9.99).unwrap();
        assert!((near - 1.0 / 6.0).abs() < 1e-10);
        assert_eq!(psi_cutoff(0.5, 1.0), 1.0);
        assert_eq!(psi_cutoff(2.0, 1.0), 0.0);
        assert!((psi_cutoff(1.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn onset_and_theta() {
        let mk = |s: f64, j: f64| FunctionalReport {
            s,
            e0: j,
            i: 0.0,
            e: j,
            j,
            ws_l2sq: 0.0,
            l2: 0.0,
            lp1: 0.0,
            h1: 0.0,
        };
        let reports = vec![mk(1.0, 0.0), mk(2.0, 0.1), mk(3.0, 0.05), mk(4.0, 0.0)];
        let c = verify_lyapunov(&reports);
        assert!((c.max_violation - 0.1).abs() < 1e-15);
        assert_eq!(measure_onset(&c, 1e-4), Some(2.0));
        let prm = zero(2.0);
        // θ(s₂^{-1} − s₁^{-1}) = −θ/2 on the first pair
        assert_eq!(select_theta(&reports, &prm, 1e-4, 10), Some(1.0));
    }

    #[test]
    fn stationary_diagnostics() {
        let prm = zero(2.0);
        let opts = WRunOptions {
            ds: 1e-2,
            s_end: 1.5,
            ..Default::default()
        };
        let (_, reports, ball) = audit_run(constant(1.0, 0.0), &prm, &opts, 1, Some(2.0)).unwrap();
        let d = energy_diagnostics(&reports, &ball).unwrap();
        assert!(d.item_i_ok && d.bounded);
        assert_eq!(d.envelope[0], 0.0);
        assert!((d.envelope[6] - ball[0].powi(2)).abs() < 1e-9);
    }
}
