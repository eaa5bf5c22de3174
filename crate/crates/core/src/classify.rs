//! Linearization V = β(w − φ) of a similarity trace, its Hermite content, and
//! the case decision: V ≡ 0 (i), neutral-mode quadratic law (ii), or an
//! exponentially small higher mode (iii).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hermite::{eval_big_h, multi_indices, project, project_rotated, HermiteCoeffs, MultiIndex};
use crate::numerics::{geomspace, linear_fit, linspace, trapezoid};
use crate::ode::{solve_phi, OdeSolution, PhiOptions};
use crate::params::ProblemParams;
use crate::pde::{Field, Frame};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearizedSnapshot {
    pub s: f64,
    pub phi: f64,
    pub omega: f64,
    pub beta: f64,
    pub coeffs: HermiteCoeffs,
    /// ‖V₊‖, ‖V_null‖, ‖V₋‖ in L²_ρ (V₋ taken as the grid remainder).
    pub z: f64,
    pub x: f64,
    pub y: f64,
    /// ‖V‖ in L²_ρ on the grid.
    pub v_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearizedTrace {
    pub n: usize,
    pub max_degree: usize,
    pub snapshots: Vec<LinearizedSnapshot>,
    /// Closure C·s_end^{1−a}/(a−1) used for ∫_{s_end}^∞ ω.
    pub omega_tail: f64,
    /// Relative change of β when the tail closure is doubled.
    pub tail_sensitivity: f64,
}

enum PhiRef {
    Constant(f64),
    Table(OdeSolution),
}

impl PhiRef {
    fn at(&self, s: f64) -> f64 {
        match self {
            PhiRef::Constant(k) => *k,
            PhiRef::Table(t) => t.interpolate(s),
        }
    }
}

/// ω(s) = p(φ^{p−1} − κ^{p−1}) + e^{−s}h′(e^{s/(p−1)}φ).
pub fn omega(params: &ProblemParams, phi: f64, s: f64) -> f64 {
    let p = params.p;
    p * (phi.powf(p - 1.0) - params.kappa.powf(p - 1.0)) + params.scaled_h(1, phi, s)
}

/// Default degree cap for projections.
pub const DEFAULT_DEGREE: usize = 6;

/// Builds V = β(w − φ) on every snapshot and projects it on |α| ≤ max_degree.
pub fn build_v(fields: &[Field], params: &ProblemParams, max_degree: usize) -> Result<LinearizedTrace> {
    build_v_rotated(fields, params, max_degree, None)
}

/// As [`build_v`] with the Hermite basis taken in rotated coordinates y′ = R y.
pub fn build_v_rotated(
    fields: &[Field],
    params: &ProblemParams,
    max_degree: usize,
    rotation: Option<&[f64]>,
) -> Result<LinearizedTrace> {
    if fields.len() < 2 {
        return Err(invalid("fields", "need at least two snapshots"));
    }
    if fields.iter().any(|f| f.frame != Frame::Similarity) {
        return Err(invalid("fields", "snapshots must be in the similarity frame"));
    }
    if fields.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(invalid("fields", "snapshot times must increase"));
    }
    let s_first = fields[0].time;
    let s_end = fields.last().unwrap().time;
    let zero = params.is_zero();
    let phi = if zero {
        PhiRef::Constant(params.kappa)
    } else {
        PhiRef::Table(solve_phi(params, s_first, s_end, PhiOptions::default())?)
    };
    // ∫_s^{s_end} ω on a dense grid, plus the analytic tail
    let (dense, cum, omega_tail) = if zero {
        (vec![s_first, s_end], vec![0.0, 0.0], 0.0)
    } else {
        let dense = linspace(s_first, s_end, 4001);
        let om: Vec<f64> = dense.iter().map(|&s| omega(params, phi.at(s), s)).collect();
        let mut cum = vec![0.0; dense.len()];
        for k in (0..dense.len() - 1).rev() {
            cum[k] = cum[k + 1] + 0.5 * (dense[k + 1] - dense[k]) * (om[k] + om[k + 1]);
        }
        let c = om.last().unwrap() * s_end.powf(params.a);
        (dense, cum, c * s_end.powf(1.0 - params.a) / (params.a - 1.0))
    };
    let tail_at = |s: f64| -> f64 {
        let k = dense.partition_point(|&t| t <= s).clamp(1, dense.len() - 1);
        let u = (s - dense[k - 1]) / (dense[k] - dense[k - 1]);
        cum[k - 1] + u * (cum[k] - cum[k - 1]) + omega_tail
    };
    let grid = &fields[0].grid;
    let quad = grid.quadrature();
    let weights = &quad.weights;
    let mut snapshots = Vec::with_capacity(fields.len());
    for f in fields {
        if f.grid != *grid {
            return Err(invalid("fields", "snapshots must share one grid"));
        }
        let s = f.time;
        let ph = phi.at(s);
        let beta = (-tail_at(s)).exp();
        let v: Vec<f64> = f.values.iter().map(|w| beta * (w - ph)).collect();
        let coeffs = project_rotated(&v, &quad, max_degree, rotation)?;
        let (z, x) = {
            let mut z2 = 0.0;
            let mut x2 = 0.0;
            for (a, c) in coeffs.indices.iter().zip(&coeffs.coeffs) {
                let e = c * c * a.norm_sq();
                match a.total() {
                    0 | 1 => z2 += e,
                    2 => x2 += e,
                    _ => {}
                }
            }
            (z2.sqrt(), x2.sqrt())
        };
        // V₋ as the remainder after removing |α| ≤ 2
        let low: Vec<(&MultiIndex, f64)> = coeffs
            .indices
            .iter()
            .zip(&coeffs.coeffs)
            .filter(|(a, _)| a.total() <= 2)
            .map(|(a, c)| (a, *c))
            .collect();
        let mut y2 = 0.0;
        let mut v2 = 0.0;
        let mut yr = [0.0; 2];
        for (k, (&vk, &wk)) in v.iter().zip(weights).enumerate() {
            let pt = quad.node(k);
            match rotation {
                Some(r) => {
                    for a in 0..grid.n {
                        yr[a] = (0..grid.n).map(|b| r[a * grid.n + b] * pt[b]).sum();
                    }
                }
                None => yr[..grid.n].copy_from_slice(pt),
            }
            let mut rest = vk;
            for (a, c) in &low {
                rest -= c * eval_big_h(a, &yr[..grid.n])?;
            }
            y2 += wk * rest * rest;
            v2 += wk * vk * vk;
        }
        snapshots.push(LinearizedSnapshot {
            s,
            phi: ph,
            omega: if zero { 0.0 } else { omega(params, ph, s) },
            beta,
            coeffs,
            z,
            x,
            y: y2.sqrt(),
            v_norm: v2.sqrt(),
        });
    }
    Ok(LinearizedTrace {
        n: grid.n,
        max_degree,
        snapshots,
        omega_tail,
        tail_sensitivity: (-omega_tail).exp_m1().abs(),
    })
}

/// F̄(V, s) = β(F(v) + H(v, s)) with v = V/β.
pub fn fbar(params: &ProblemParams, v_cap: f64, phi: f64, beta: f64, s: f64) -> f64 {
    let v = v_cap / beta;
    let p = params.p;
    let x = v / phi;
    // F = φ^p [(1+x)^p − 1 − p x]; series for small x avoids cancellation
    let g = if x.abs() < 0.05 {
        let mut term = p * (p - 1.0) / 2.0 * x * x;
        let mut acc = 0.0f64;
        let mut k = 2.0;
        while term.abs() > 1e-18 * acc.abs().max(1e-300) && k < 60.0 {
            acc += term;
            term *= (p - k) / (k + 1.0) * x;
            k += 1.0;
        }
        acc
    } else {
        (1.0 + x).abs().powf(p - 1.0) * (1.0 + x) - 1.0 - p * x
    };
    let f = phi.powf(p) * g;
    let h = if params.is_zero() {
        0.0
    } else if x.abs() < 1e-3 {
        0.5 * params.scaled_h(2, phi, s) * v * v
    } else {
        params.scaled_h(0, phi + v, s) - params.scaled_h(0, phi, s) - params.scaled_h(1, phi, s) * v
    };
    beta * (f + h)
}

/// (sup |F̄|/V², sup |F̄ − (p/2κ)V²| / (|V|³ + V² s^{1−a})) over the samples;
/// 0/0 counts as 0.
pub fn check_fbar_bound(v: &[f64], params: &ProblemParams, s: f64, phi: f64, beta: f64) -> (f64, f64) {
    let c = params.p / (2.0 * params.kappa);
    let mut q = 0.0f64;
    let mut e = 0.0f64;
    for &vv in v {
        if vv == 0.0 {
            continue;
        }
        let fb = fbar(params, vv, phi, beta, s);
        q = q.max(fb.abs() / (vv * vv));
        e = e.max((fb - c * vv * vv).abs() / (vv.abs().powi(3) + vv * vv * s.powf(1.0 - params.a)));
    }
    (q, e)
}

/// Sweeps (V, s) with |V| ≤ v_max and s ∈ [s_lo, s_hi]; returns the two sup
/// ratios of [`check_fbar_bound`].
pub fn fbar_sweep(params: &ProblemParams, v_max: f64, s_lo: f64, s_hi: f64, n_v: usize, n_s: usize) -> Result<(f64, f64)> {
    let phi = if params.is_zero() {
        None
    } else {
        Some(solve_phi(params, s_lo, s_hi, PhiOptions::default())?)
    };
    let vs = linspace(-v_max, v_max, n_v);
    let mut out = (0.0f64, 0.0f64);
    for s in geomspace(s_lo, s_hi, n_s) {
        let ph = phi.as_ref().map_or(params.kappa, |t| t.interpolate(s));
        let r = check_fbar_bound(&vs, params, s, ph, 1.0);
        out = (out.0.max(r.0), out.1.max(r.1));
    }
    Ok(out)
}

/// Bounds on the two ratios of [`check_fbar_bound`] with β = 1, from the
/// Taylor remainders of f(z) = |z|^{p−1}z + scaled h(z) around φ:
/// |F̄| ≤ ½ sup|f″| V² and |F̄ − ½f″(φ)V²| ≤ Lip(f″)|V|³/6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbarConstants {
    pub quadratic: f64,
    pub expansion: f64,
}

/// Safety factor on the sampled suprema in [`fbar_constants`].
pub const FBAR_INFLATION: f64 = 1.1;

/// Constants valid for |V| ≤ v_max < φ and s ∈ [s_lo, s_hi].
pub fn fbar_constants(params: &ProblemParams, v_max: f64, s_lo: f64, s_hi: f64) -> Result<FbarConstants> {
    let phi = if params.is_zero() {
        None
    } else {
        Some(solve_phi(params, s_lo, s_hi, PhiOptions::default())?)
    };
    let p = params.p;
    let c = p / (2.0 * params.kappa);
    let mut quad = 0.0f64;
    let mut exp = 0.0f64;
    for s in geomspace(s_lo, s_hi, 200) {
        let ph = phi.as_ref().map_or(params.kappa, |t| t.interpolate(s));
        if v_max >= ph {
            return Err(invalid("v_max", "must stay below φ"));
        }
        let f2 = |z: f64| p * (p - 1.0) * z.powf(p - 2.0) + params.scaled_h(2, z, s);
        let f2_phi = f2(ph);
        let ts = linspace(-v_max, v_max, 2001);
        for &t in &ts {
            let v = f2(ph + t);
            quad = quad.max(0.5 * v.abs());
            if t != 0.0 {
                exp = exp.max((v - f2_phi).abs() / t.abs() / 6.0);
            }
        }
        exp = exp.max((0.5 * f2_phi - c).abs() * s.powf(params.a - 1.0));
    }
    Ok(FbarConstants {
        quadratic: FBAR_INFLATION * quad,
        expansion: FBAR_INFLATION * exp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dichotomy {
    ExponentialDecay,
    NullDominant,
    Inconclusive,
}

/// Thresholds for the finite-time case decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Decay rate declaring ExponentialDecay.
    pub mu_min: f64,
    /// Bound on (Z+Y)/X over the final window for NullDominant.
    pub null_ratio: f64,
    /// Relative tolerance on s·λ → −κ/(4p).
    pub law_tol: f64,
    /// Relative tolerance on the fitted mode rate 1 − m/2.
    pub mode_tol: f64,
    /// ‖V‖ below this counts as zero.
    pub zero_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            mu_min: 0.4,
            null_ratio: 0.2,
            law_tol: 0.15,
            mode_tol: 0.1,
            zero_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XyzVerdict {
    pub dichotomy: Dichotomy,
    /// Slope of log‖V‖ in s over the window.
    pub slope: f64,
    /// max (Z+Y)/X over the window.
    pub null_ratio: f64,
}

fn window(trace: &LinearizedTrace, range: Option<(f64, f64)>) -> Vec<&LinearizedSnapshot> {
    let snaps = &trace.snapshots;
    let (lo, hi) = range.unwrap_or_else(|| {
        let a = snaps[0].s;
        let b = snaps.last().unwrap().s;
        (0.5 * (a + b), b)
    });
    snaps.iter().filter(|x| x.s >= lo - 1e-12 && x.s <= hi + 1e-12).collect()
}

/// Decides between exponential decay of V and neutral-mode dominance over the
/// window (default: last half of the trace).
pub fn track_xyz(trace: &LinearizedTrace, th: &Thresholds, range: Option<(f64, f64)>) -> XyzVerdict {
    let win = window(trace, range);
    let pts: Vec<(f64, f64)> = win.iter().filter(|x| x.v_norm > 0.0).map(|x| (x.s, x.v_norm.ln())).collect();
    let slope = if pts.len() >= 3 {
        let (s, l): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&s, &l).map_or(f64::NAN, |f| f.slope)
    } else {
        f64::NAN
    };
    let null_ratio = win
        .iter()
        .map(|x| if x.x > 0.0 { (x.z + x.y) / x.x } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let dichotomy = if slope <= -th.mu_min {
        Dichotomy::ExponentialDecay
    } else if win.len() >= 3 && null_ratio <= th.null_ratio {
        Dichotomy::NullDominant
    } else {
        Dichotomy::Inconclusive
    };
    XyzVerdict {
        dichotomy,
        slope,
        null_ratio,
    }
}

/// The symmetric matrix A with V_null = yᵀA y − 2 tr A:
/// A_ii = a_{2e_i}, A_ij = a_{e_i+e_j}/2 (h₁h₁ has norm² 4, h₂ has 8).
pub fn a_matrix(coeffs: &HermiteCoeffs) -> DMatrix<f64> {
    let n = coeffs.n;
    DMatrix::from_fn(n, n, |i, j| {
        let c = coeffs.get(&MultiIndex::pair(n, i, j));
        if i == j {
            c
        } else {
            0.5 * c
        }
    })
}

/// Inverse of [`a_matrix`] on the |α| = 2 block.
pub fn set_a_matrix(coeffs: &mut HermiteCoeffs, a: &DMatrix<f64>) -> Result<()> {
    let n = coeffs.n;
    for i in 0..n {
        for j in i..n {
            let v = if i == j { a[(i, j)] } else { a[(i, j)] + a[(j, i)] };
            coeffs.set(&MultiIndex::pair(n, i, j), v)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenBranch {
    /// s·λ → −κ/(4p)
    MinusKappaOver4ps,
    /// λ = O(s^{−min(a,2)})
    Small,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AFit {
    pub s: Vec<f64>,
    /// Ascending eigenvalues per snapshot.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Branch per eigenvalue at the last snapshot.
    pub branches: Vec<EigenBranch>,
    /// |s·λ/(−κ/(4p)) − 1| per eigenvalue at the last snapshot.
    pub law_residuals: Vec<f64>,
    pub rank: usize,
}

impl AFit {
    /// CSV with columns s, λ_1..λ_n, sλ_1..sλ_n.
    pub fn to_csv(&self) -> String {
        let n = self.branches.len();
        let mut header = vec!["s".to_string()];
        header.extend((1..=n).map(|i| format!("lambda_{i}")));
        header.extend((1..=n).map(|i| format!("s_lambda_{i}")));
        let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        crate::csv::table(
            &h,
            self.s.iter().zip(&self.eigenvalues).map(|(s, ev)| {
                let mut row = vec![*s];
                row.extend(ev.iter().copied());
                row.extend(ev.iter().map(|l| s * l));
                row
            }),
        )
    }
}

/// Eigen-trajectories of A(s) and their branch at the final snapshot.
pub fn fit_a(trace: &LinearizedTrace, params: &ProblemParams, th: &Thresholds) -> Result<AFit> {
    let target = -params.kappa / (4.0 * params.p);
    let mut s = Vec::new();
    let mut eigenvalues = Vec::new();
    for snap in &trace.snapshots {
        if snap.x < th.zero_floor {
            return Err(Error::Inconclusive(format!("V_null below the noise floor at s = {}", snap.s)));
        }
        let a = a_matrix(&snap.coeffs);
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        s.push(snap.s);
        eigenvalues.push(ev);
    }
    let s_last = *s.last().unwrap();
    let last = eigenvalues.last().unwrap();
    let small_scale = s_last.powf(-params.a.min(2.0));
    let mut branches = Vec::new();
    let mut law_residuals = Vec::new();
    for &l in last {
        let r = (s_last * l / target - 1.0).abs();
        law_residuals.push(r);
        branches.push(if r <= th.law_tol {
            EigenBranch::MinusKappaOver4ps
        } else if l.abs() <= th.law_tol * target.abs() / s_last || l.abs() <= small_scale {
            EigenBranch::Small
        } else {
            EigenBranch::Undecided
        });
    }
    let rank = branches.iter().filter(|b| **b == EigenBranch::MinusKappaOver4ps).count();
    Ok(AFit {
        s,
        eigenvalues,
        branches,
        law_residuals,
        rank,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeFit {
    pub m: usize,
    pub slope: f64,
    /// c_α for |α| = m with V ≈ −e^{(1−m/2)s} Σ c_α H_α.
    pub c_alpha: Vec<(MultiIndex, f64)>,
    /// Relative spread of the rescaled coefficients over the window.
    pub residual: f64,
}

/// Dominant stable mode from the decay of ‖V₋‖ over the window.
pub fn extract_mode(trace: &LinearizedTrace, th: &Thresholds, range: Option<(f64, f64)>) -> Result<ModeFit> {
    let win = window(trace, range);
    let pts: Vec<(f64, f64)> = win.iter().filter(|x| x.y > 0.0).map(|x| (x.s, x.y.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::Inconclusive("too few snapshots with V₋ content".into()));
    }
    let (s, l): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let slope = linear_fit(&s, &l).ok_or_else(|| Error::Inconclusive("degenerate fit".into()))?.slope;
    let m_real = 2.0 * (1.0 - slope);
    let m = m_real.round().max(0.0) as usize;
    let rate = 1.0 - m as f64 / 2.0;
    if m < 3 || (slope - rate).abs() > th.mode_tol * rate.abs() {
        return Err(Error::Inconclusive(format!("slope {slope} does not match any 1 − m/2 with m ≥ 3")));
    }
    if m > trace.max_degree {
        return Err(Error::Inconclusive(format!("m = {m} exceeds the projection degree")));
    }
    let mut c_alpha = Vec::new();
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for alpha in multi_indices(trace.n, m).into_iter().filter(|a| a.total() == m) {
        let vals: Vec<f64> = win.iter().map(|x| -(-rate * x.s).exp() * x.coeffs.get(&alpha)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
        scale = scale.max(mean.abs());
        residual = residual.max(spread);
        c_alpha.push((alpha, mean));
    }
    Ok(ModeFit {
        m,
        slope,
        c_alpha,
        residual: if scale > 0.0 { residual / scale } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    IPhi,
    IIQuadratic,
    IIIHigherMode,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub case: Case,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub m_even: Option<bool>,
    pub c_alpha: Vec<(MultiIndex, f64)>,
    pub xyz: XyzVerdict,
    pub fit_residuals: Vec<f64>,
    pub a_fit: Option<AFit>,
    pub notes: Vec<String>,
}

/// Full decision over the window (default: last half of the trace).
pub fn classify(
    trace: &LinearizedTrace,
    params: &ProblemParams,
    th: &Thresholds,
    range: Option<(f64, f64)>,
) -> ClassificationReport {
    let xyz = track_xyz(trace, th, range);
    let mut rep = ClassificationReport {
        case: Case::Inconclusive,
        l: None,
        m: None,
        m_even: None,
        c_alpha: Vec::new(),
        xyz: xyz.clone(),
        fit_residuals: Vec::new(),
        a_fit: None,
        notes: Vec::new(),
    };
    if window(trace, range).iter().all(|x| x.v_norm <= th.zero_floor) {
        rep.case = Case::IPhi;
        return rep;
    }
    match xyz.dichotomy {
        Dichotomy::NullDominant => match fit_a(trace, params, th) {
            Ok(f) => {
                if f.rank >= 1 && f.branches.iter().all(|b| *b != EigenBranch::Undecided) {
                    rep.case = Case::IIQuadratic;
                    rep.l = Some(f.rank);
                } else {
                    rep.notes.push("eigenvalues do not follow either branch".into());
                }
                rep.fit_residuals = f.law_residuals.clone();
                rep.a_fit = Some(f);
            }
            Err(e) => rep.notes.push(e.to_string()),
        },
        Dichotomy::ExponentialDecay => match extract_mode(trace, th, range) {
            Ok(f) => {
                rep.case = Case::IIIHigherMode;
                rep.m = Some(f.m);
                rep.m_even = Some(f.m % 2 == 0);
                if f.m % 2 == 1 {
                    rep.notes.push("odd m: incompatible with a bounded profile".into());
                }
                rep.fit_residuals = vec![f.residual];
                rep.c_alpha = f.c_alpha;
            }
            Err(e) => rep.notes.push(e.to_string()),
        },
        Dichotomy::Inconclusive => {}
    }
    rep
}

/// Projects a batch of plain fields (no linearization) on the grid rule.
pub fn project_fields(fields: &[Field], max_degree: usize) -> Result<Vec<HermiteCoeffs>> {
    fields
        .iter()
        .map(|f| project(&f.values, &f.grid.quadrature(), max_degree))
        .collect()
}

/// Trace of pure semigroup dynamics V(s) = e^{sℒ}V(s₀), for synthetic checks.
pub fn semigroup_trace(n: usize, max_degree: usize, seed: &HermiteCoeffs, s: &[f64]) -> LinearizedTrace {
    let snapshots = s
        .iter()
        .map(|&t| {
            let c = crate::hermite::semigroup_apply(seed, t - s[0]);
            let (mut z2, mut x2, mut y2) = (0.0, 0.0, 0.0);
            for (a, v) in c.indices.iter().zip(&c.coeffs) {
                let e = v * v * a.norm_sq();
                match a.total() {
                    0 | 1 => z2 += e,
                    2 => x2 += e,
                    _ => y2 += e,
                }
            }
            LinearizedSnapshot {
                s: t,
                phi: 0.0,
                omega: 0.0,
                beta: 1.0,
                coeffs: c,
                z: f64::sqrt(z2),
                x: f64::sqrt(x2),
                y: f64::sqrt(y2),
                v_norm: f64::sqrt(z2 + x2 + y2),
            }
        })
        .collect();
    LinearizedTrace {
        n,
        max_degree,
        snapshots,
        omega_tail: 0.0,
        tail_sensitivity: 0.0,
    }
}

/// Integral of ω over the trace span, for reporting.
pub fn omega_integral(trace: &LinearizedTrace) -> f64 {
    let s: Vec<f64> = trace.snapshots.iter().map(|x| x.s).collect();
    let o: Vec<f64> = trace.snapshots.iter().map(|x| x.omega).collect();
    trapezoid(&s, &o)
}
