use serde::{Deserialize, Serialize};

use super::grid::{Field, Frame, Grid};
use super::operator::GridOperator;
use crate::error::{invalid, Error, Result};
use crate::ode::{solve_phi, OdeSolution, PhiOptions};
use crate::params::ProblemParams;

/// Treatment of the unstable modes H₀, H₁ of w − φ in similarity runs.
///
/// Their growth reflects an error in the choice of (x0, T); `ProjectUnstable`
/// removes their grid projection after every step, which amounts to
/// re-tuning (x0, T) continuously.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeControl {
    #[default]
    Free,
    ProjectUnstable,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Reached the requested final time.
    EndTime,
    /// Sup norm crossed the stop level.
    SupNorm,
    /// The blow-up core fell below the grid resolution.
    Resolution,
    /// The observer asked to stop.
    Observer,
}

/// Output of a run: optional snapshots, the sup-norm history and, for
/// physical runs, a blow-up time estimate filled in by `detect_blowup`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub frame: Frame,
    pub snapshots: Vec<Field>,
    /// (time, ‖·‖_∞) after every step.
    pub sup_norm: Vec<(f64, f64)>,
    pub blowup_time: Option<f64>,
    pub stop: StopReason,
}

enum Reference {
    Constant(f64),
    Table(OdeSolution),
}

impl Reference {
    fn at(&self, s: f64) -> f64 {
        match self {
            Reference::Constant(k) => *k,
            Reference::Table(t) => t.interpolate(s),
        }
    }
}

/// Horizon covered by the φ table built for mode control.
const REFERENCE_SPAN: f64 = 1e3;

/// Stepper for w_s = (1/ρ)div(ρ∇w) − w/(p−1) + |w|^{p−1}w + scaled h.
///
/// Linearly implicit Euler in increment form:
/// [(1 + ds/(p−1)) I − ds A] δ = ds·rhs(w), w ← w + δ.
pub struct WSolver {
    field: Field,
    params: ProblemParams,
    op: GridOperator,
    weights: Vec<f64>,
    mode: ModeControl,
    reference: Reference,
}

impl WSolver {
    pub fn new(field: Field, params: &ProblemParams, mode: ModeControl) -> Result<WSolver> {
        if field.frame != Frame::Similarity {
            return Err(invalid("frame", "similarity stepping needs a similarity field"));
        }
        if field.grid.n != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: field.grid.n,
            });
        }
        let reference = if params.is_zero() || mode == ModeControl::Free {
            Reference::Constant(params.kappa)
        } else {
            let s = field.time;
            Reference::Table(solve_phi(params, s, s + REFERENCE_SPAN, PhiOptions::default())?)
        };
        let op = GridOperator::new(&field.grid, Frame::Similarity);
        let weights = field.grid.weights();
        let mut solver = WSolver {
            field,
            params: params.clone(),
            op,
            weights,
            mode,
            reference,
        };
        if mode == ModeControl::ProjectUnstable {
            solver.project_unstable();
        }
        Ok(solver)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }

    /// φ(s) used as the reference for mode control (κ when h ≡ 0).
    pub fn reference(&self, s: f64) -> f64 {
        self.reference.at(s)
    }

    /// Reaction part |w|^{p−1}w + scaled h at one node.
    pub fn reaction(&self, w: f64, s: f64) -> f64 {
        let p = self.params.p;
        w.abs().powf(p - 1.0) * w + self.params.scaled_h(0, w, s)
    }

    /// The discrete right-hand side, i.e. w_s at the current state.
    pub fn rhs(&self) -> Vec<f64> {
        let c = 1.0 / (self.params.p - 1.0);
        let s = self.field.time;
        let mut out = self.op.apply(&self.field.values);
        for (o, &w) in out.iter_mut().zip(&self.field.values) {
            *o += -c * w + self.reaction(w, s);
        }
        out
    }

    /// Discrete (1/ρ)div(ρ∇f).
    pub fn apply_operator(&self, f: &[f64]) -> Vec<f64> {
        self.op.apply(f)
    }

    pub fn step(&mut self, ds: f64) -> Result<()> {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(invalid("ds", "need a positive step"));
        }
        let c = 1.0 / (self.params.p - 1.0);
        let mut delta = self.rhs();
        for d in delta.iter_mut() {
            *d *= ds;
        }
        self.op.solve_shifted(1.0 + ds * c, ds, &mut delta);
        for (w, d) in self.field.values.iter_mut().zip(&delta) {
            *w += d;
        }
        self.field.time += ds;
        if self.mode == ModeControl::ProjectUnstable {
            self.project_unstable();
        }
        if self.field.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: self.field.time });
        }
        Ok(())
    }

    fn project_unstable(&mut self) {
        let phi = self.reference.at(self.field.time);
        let g = &self.field.grid;
        let n = g.n;
        let total: f64 = self.weights.iter().sum();
        let mut c0 = 0.0;
        let mut c1 = [0.0; 2];
        let mut norm1 = [0.0; 2];
        for (k, (&w, &q)) in self.field.values.iter().zip(&self.weights).enumerate() {
            let v = (w - phi) * q;
            c0 += v;
            let y = g.point(k);
            for d in 0..n {
                c1[d] += v * y[d];
                norm1[d] += q * y[d] * y[d];
            }
        }
        c0 /= total;
        for d in 0..n {
            c1[d] /= norm1[d];
        }
        for (k, w) in self.field.values.iter_mut().enumerate() {
            let y = g.point(k);
            *w -= c0 + (0..n).map(|d| c1[d] * y[d]).sum::<f64>();
        }
    }
}

/// One similarity step from `field`.
pub fn step_w(field: &Field, params: &ProblemParams, ds: f64) -> Result<Field> {
    let mut s = WSolver::new(field.clone(), params, ModeControl::Free)?;
    s.step(ds)?;
    Ok(s.into_field())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WRunOptions {
    pub ds: f64,
    pub s_end: f64,
    pub mode: ModeControl,
    /// Keep every k-th state (0: none).
    pub snapshot_every: usize,
    /// Stop once ‖w‖_∞ exceeds this.
    pub w_stop: f64,
}

impl Default for WRunOptions {
    fn default() -> Self {
        WRunOptions {
            ds: 1e-3,
            s_end: 10.0,
            mode: ModeControl::Free,
            snapshot_every: 0,
            w_stop: 1e3,
        }
    }
}

/// Runs a similarity solve to `s_end`. `observe` sees the solver before the
/// first step and after every step; returning false stops the run.
pub fn run_w(
    field: Field,
    params: &ProblemParams,
    opts: &WRunOptions,
    mut observe: impl FnMut(&WSolver) -> bool,
) -> Result<SolveTrace> {
    let mut solver = WSolver::new(field, params, opts.mode)?;
    let mut trace = SolveTrace {
        frame: Frame::Similarity,
        snapshots: Vec::new(),
        sup_norm: vec![(solver.field.time, solver.field.sup_norm())],
        blowup_time: None,
        stop: StopReason::EndTime,
    };
    if opts.snapshot_every > 0 {
        trace.snapshots.push(solver.field.clone());
    }
    if !observe(&solver) {
        trace.stop = StopReason::Observer;
        return Ok(trace);
    }
    let mut k = 0usize;
    while solver.field.time < opts.s_end - 1e-9 * opts.ds {
        let ds = opts.ds.min(opts.s_end - solver.field.time);
        solver.step(ds)?;
        k += 1;
        let sup = solver.field.sup_norm();
        trace.sup_norm.push((solver.field.time, sup));
        if opts.snapshot_every > 0 && k % opts.snapshot_every == 0 {
            trace.snapshots.push(solver.field.clone());
        }
        if !observe(&solver) {
            trace.stop = StopReason::Observer;
            break;
        }
        if sup >= opts.w_stop {
            trace.stop = StopReason::SupNorm;
            break;
        }
    }
    Ok(trace)
}

/// Physical-frame reaction f(u) = |u|^{p−1}u + h(u).
fn reaction_u(params: &ProblemParams, u: f64) -> f64 {
    u.abs().powf(params.p - 1.0) * u + params.h(0, u)
}

/// Advances u′ = f(u) by dt with RK4, sub-stepped so that dt_sub·p|u|^{p−1}
/// stays below 0.05.
fn react(params: &ProblemParams, u: f64, dt: f64) -> f64 {
    let p = params.p;
    let stiff = p * u.abs().powf(p - 1.0) * dt;
    let n = ((stiff / 0.05).ceil() as usize).clamp(1, 10_000);
    let h = dt / n as f64;
    let mut y = u;
    for _ in 0..n {
        let k1 = reaction_u(params, y);
        let k2 = reaction_u(params, y + 0.5 * h * k1);
        let k3 = reaction_u(params, y + 0.5 * h * k2);
        let k4 = reaction_u(params, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() {
            return y;
        }
    }
    y
}

/// Stepper for u_t = Δu + |u|^{p−1}u + h(u): Strang splitting with exact-style
/// sub-stepped reaction halves around an implicit Euler diffusion step.
pub struct USolver {
    field: Field,
    params: ProblemParams,
    op: GridOperator,
}

impl USolver {
    pub fn new(field: Field, params: &ProblemParams) -> Result<USolver> {
        if field.frame != Frame::Physical {
            return Err(invalid("frame", "physical stepping needs a physical field"));
        }
        if field.grid.n != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: field.grid.n,
            });
        }
        let op = GridOperator::new(&field.grid, Frame::Physical);
        Ok(USolver {
            field,
            params: params.clone(),
            op,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "need a positive step"));
        }
        let t = self.field.time;
        let params = &self.params;
        let half = |v: &mut Vec<f64>| -> Result<()> {
            for u in v.iter_mut() {
                *u = react(params, *u, 0.5 * dt);
                if !u.is_finite() {
                    return Err(Error::BlowupReached { time: t });
                }
            }
            Ok(())
        };
        let mut v = std::mem::take(&mut self.field.values);
        half(&mut v)?;
        self.op.solve_shifted(1.0, dt, &mut v);
        half(&mut v)?;
        self.field.values = v;
        self.field.time += dt;
        Ok(())
    }
}

/// One physical step from `field`.
pub fn step_u(field: &Field, params: &ProblemParams, dt: f64) -> Result<Field> {
    let mut s = USolver::new(field.clone(), params)?;
    s.step(dt)?;
    Ok(s.into_field())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct URunOptions {
    /// dt = cfl / max(‖u‖_∞^{p−1}, 1), capped by dt_max.
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub u_stop: f64,
    /// Stop once the blow-up length √((κ/‖u‖)^{p−1}) drops below this many cells.
    pub resolution_cells: f64,
    pub snapshot_every: usize,
}

impl Default for URunOptions {
    fn default() -> Self {
        URunOptions {
            cfl: 1e-2,
            dt_max: 1e-2,
            t_end: 10.0,
            u_stop: 1e8,
            resolution_cells: 8.0,
            snapshot_every: 0,
        }
    }
}

/// Runs a physical solve until t_end, the sup-norm stop, or the resolution
/// limit.
pub fn run_u(field: Field, params: &ProblemParams, opts: &URunOptions) -> Result<SolveTrace> {
    let mut solver = USolver::new(field, params)?;
    let p = params.p;
    let dx = solver.field.grid.dy;
    let mut trace = SolveTrace {
        frame: Frame::Physical,
        snapshots: Vec::new(),
        sup_norm: vec![(solver.field.time, solver.field.sup_norm())],
        blowup_time: None,
        stop: StopReason::EndTime,
    };
    if opts.snapshot_every > 0 {
        trace.snapshots.push(solver.field.clone());
    }
    let mut k = 0usize;
    loop {
        let t = solver.field.time;
        if t >= opts.t_end - 1e-12 * opts.t_end.abs().max(1.0) {
            break;
        }
        let sup = solver.field.sup_norm();
        if sup >= opts.u_stop {
            trace.stop = StopReason::SupNorm;
            break;
        }
        if sup > 0.0 && ((params.kappa / sup).powf(p - 1.0)).sqrt() < opts.resolution_cells * dx {
            trace.stop = StopReason::Resolution;
            break;
        }
        let dt = (opts.cfl / sup.powf(p - 1.0).max(1.0)).min(opts.dt_max).min(opts.t_end - t);
        match solver.step(dt) {
            Ok(()) => {}
            Err(Error::BlowupReached { .. }) => {
                trace.stop = StopReason::SupNorm;
                break;
            }
            Err(e) => return Err(e),
        }
        k += 1;
        trace.sup_norm.push((solver.field.time, solver.field.sup_norm()));
        if opts.snapshot_every > 0 && k % opts.snapshot_every == 0 {
            trace.snapshots.push(solver.field.clone());
        }
    }
    if opts.snapshot_every > 0 && k % opts.snapshot_every != 0 {
        trace.snapshots.push(solver.field.clone());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eval_h;
    use crate::ode::integrate_phi;
    use crate::params::Perturbation;

    fn zero(n: usize, p: f64) -> ProblemParams {
        ProblemParams::derive(n, p, 2.0, 1.0, 1.0, Perturbation::Zero).unwrap()
    }

    fn log_damped(p: f64) -> ProblemParams {
        ProblemParams::derive(1, p, 2.0, 10.0, 1.0, Perturbation::LogDamped).unwrap()
    }

    #[test]
    fn kappa_is_a_fixed_point() {
        for n in [1, 2] {
            let prm = zero(n, 2.0);
            let g = Grid::new(n, 8.0, 0.2).unwrap();
            let mut f = Field::from_fn(g, 0.0, Frame::Similarity, |_| prm.kappa).unwrap();
            for _ in 0..10 {
                let next = step_w(&f, &prm, 1e-3).unwrap();
                for (a, b) in next.values.iter().zip(&f.values) {
                    assert!((a - b).abs() <= 1e-12);
                }
                f = next;
            }
        }
    }

    #[test]
    fn constant_data_follow_the_phi_ode() {
        let prm = log_damped(2.0);
        let g = Grid::new(1, 6.0, 0.2).unwrap();
        let (s0, w0) = (5.0, 0.9);
        for ds in [1e-2, 5e-3] {
            let f = Field::from_fn(g.clone(), s0, Frame::Similarity, |_| w0).unwrap();
            let next = step_w(&f, &prm, ds).unwrap();
            let exact = integrate_phi(&prm, s0, w0, s0 + ds, 1e-13).unwrap();
            let err = (next.center() - exact).abs();
            assert!(err < 2.0 * ds * ds, "ds={ds} err={err}");
            assert!(next.values.iter().all(|v| (v - next.center()).abs() < 1e-14));
        }
    }

    #[test]
    fn constant_u_matches_scalar_ode() {
        // u′ = u², u(0)=c → c/(1 − c t)
        let prm = zero(1, 2.0);
        let g = Grid::new(1, 2.0, 0.1).unwrap();
        let c = 0.7;
        let f = Field::from_fn(g, 0.0, Frame::Physical, |_| c).unwrap();
        let dt = 0.01;
        let next = step_u(&f, &prm, dt).unwrap();
        let exact = c / (1.0 - c * dt);
        assert!((next.center() - exact).abs() < dt * dt);
    }

    #[test]
    fn small_gaussian_decays() {
        let prm = zero(1, 2.0);
        let g = Grid::new(1, 10.0, 0.05).unwrap();
        let f = Field::from_fn(g, 0.0, Frame::Physical, |x| 0.2 * (-x[0] * x[0]).exp()).unwrap();
        let opts = URunOptions {
            t_end: 2.0,
            ..Default::default()
        };
        let tr = run_u(f, &prm, &URunOptions { cfl: 1e-2, ..opts }).unwrap();
        assert_eq!(tr.stop, StopReason::EndTime);
        assert!(tr.sup_norm.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-14));
        assert!(tr.sup_norm.last().unwrap().1 < 0.2);
    }

    #[test]
    fn projection_kills_unstable_modes() {
        let prm = zero(2, 2.0);
        let g = Grid::new(2, 8.0, 0.2).unwrap();
        let f = Field::from_fn(g.clone(), 0.0, Frame::Similarity, |y| {
            prm.kappa + 0.01 + 0.02 * y[0] - 0.01 * y[1] + 0.01 * eval_h(2, y[0])
        })
        .unwrap();
        let s = WSolver::new(f, &prm, ModeControl::ProjectUnstable).unwrap();
        let w = g.weights();
        let v: Vec<f64> = s.field().values.iter().map(|x| x - prm.kappa).collect();
        let m0: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let m1: f64 = (0..g.len()).map(|k| v[k] * w[k] * g.point(k)[0]).sum();
        let m2: f64 = (0..g.len()).map(|k| v[k] * w[k] * (g.point(k)[0].powi(2) - 2.0)).sum();
        assert!(m0.abs() < 1e-15 && m1.abs() < 1e-15);
        assert!((m2 - 0.01 * 8.0).abs() < 1e-6);
    }
}
