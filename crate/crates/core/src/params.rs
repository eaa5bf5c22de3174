//! Problem parameters, derived constants and the perturbation family h.
//!
//! All evaluations in similarity variables go through the *scaled* forms
//! `e^{-(p-j)s/(p-1)} h^{(j)}(e^{s/(p-1)} w)` and
//! `e^{-(p+1)s/(p-1)} H(e^{s/(p-1)} w)`, which stay finite for large s.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{geomspace, gl8_panel, linspace};

/// Scalar function used by custom perturbations.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied perturbation with its own constants.
#[derive(Clone)]
pub struct CustomPerturbation {
    pub name: String,
    pub h: ScalarFn,
    pub dh: ScalarFn,
    pub d2h: ScalarFn,
    /// Antiderivative H(z) = ∫₀^z h.
    pub big_h: ScalarFn,
    pub c0: f64,
    pub s0: f64,
    pub m: f64,
}

impl fmt::Debug for CustomPerturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPerturbation")
            .field("name", &self.name)
            .field("c0", &self.c0)
            .field("s0", &self.s0)
            .field("m", &self.m)
            .finish()
    }
}

/// The perturbation family. `LogDamped` uses the amplitude μ and exponent a
/// stored on [`ProblemParams`].
#[derive(Debug, Clone)]
pub enum Perturbation {
    Zero,
    /// h(z) = μ|z|^{p-1}z / log^a(2+z²)
    LogDamped,
    /// h(z) = |z|^q with 1 < q < p
    PowerSub { q: f64 },
    Custom(CustomPerturbation),
}

impl Perturbation {
    pub fn name(&self) -> &str {
        match self {
            Perturbation::Zero => "zero",
            Perturbation::LogDamped => "log_damped",
            Perturbation::PowerSub { .. } => "power_sub",
            Perturbation::Custom(c) => &c.name,
        }
    }
}

/// Sampling grid used to derive C0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundGrid {
    pub w_max: f64,
    pub s_max: f64,
    pub n_w: usize,
    pub n_s: usize,
}

impl Default for BoundGrid {
    fn default() -> Self {
        BoundGrid {
            w_max: 10.0,
            s_max: 1e3,
            n_w: 400,
            n_s: 400,
        }
    }
}

/// Parameters (n, p, a, M, μ) with derived constants κ, C0, s0, γ and θ.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub n: usize,
    pub p: f64,
    pub a: f64,
    pub m: f64,
    pub mu: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub theta: f64,
    pub c0: f64,
    pub s0: f64,
    pub perturbation: Perturbation,
    pub bound_grid: BoundGrid,
}

/// Safety factor applied to the swept supremum when fixing C0.
pub const C0_INFLATION: f64 = 1.1;
/// Lower floor for s0.
pub const S0_FLOOR: f64 = 1.0;

/// κ = (p-1)^{-1/(p-1)}.
pub fn kappa(p: f64) -> f64 {
    (p - 1.0).powf(-1.0 / (p - 1.0))
}

impl ProblemParams {
    /// Validates the inputs and derives κ, s0, C0 and γ with the default sweep grid.
    pub fn derive(n: usize, p: f64, a: f64, m: f64, mu: f64, perturbation: Perturbation) -> Result<Self> {
        Self::derive_with_grid(n, p, a, m, mu, perturbation, BoundGrid::default())
    }

    pub fn derive_with_grid(
        n: usize,
        p: f64,
        a: f64,
        m: f64,
        mu: f64,
        perturbation: Perturbation,
        grid: BoundGrid,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dimension must be positive"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid("p", format!("need p > 1, got {p}")));
        }
        if (n as f64 - 2.0) * p >= n as f64 + 2.0 {
            return Err(invalid("p", format!("(n-2)p < n+2 violated for n = {n}, p = {p}")));
        }
        if !(a > 1.0) || !a.is_finite() {
            return Err(invalid("a", format!("need a > 1, got {a}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("M", format!("need M > 0, got {m}")));
        }
        if !mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        if let Perturbation::PowerSub { q } = perturbation {
            if !(q > 1.0 && q < p) {
                return Err(invalid("q", format!("need 1 < q < p, got q = {q}")));
            }
        }
        if grid.n_w < 2 || grid.n_s < 2 || !(grid.w_max > 0.0) {
            return Err(invalid("bound_grid", "grid needs at least 2x2 points and w_max > 0"));
        }
        let mut params = ProblemParams {
            n,
            p,
            a,
            m,
            mu,
            kappa: kappa(p),
            gamma: 0.0,
            theta: 0.0,
            c0: 0.0,
            s0: S0_FLOOR,
            perturbation,
            bound_grid: grid,
        };
        match &params.perturbation {
            Perturbation::Custom(c) => {
                if !(c.c0 >= 0.0) || !(c.s0 > 0.0) || !(c.m > 0.0) {
                    return Err(invalid("custom", "custom perturbations need C0 >= 0, s0 > 0, M > 0"));
                }
                params.c0 = c.c0;
                params.s0 = c.s0;
                params.m = c.m;
                if !(grid.s_max > params.s0) {
                    return Err(invalid("bound_grid", "s_max must exceed s0"));
                }
                let ratio = params.sweep_perturbation_bound();
                if ratio > params.c0 {
                    return Err(invalid(
                        "custom",
                        format!("self-check failed: sup ratio {ratio} exceeds supplied C0 {}", params.c0),
                    ));
                }
            }
            _ => {
                params.s0 = onset_s0(p, a);
                if !(grid.s_max > params.s0) {
                    return Err(invalid("bound_grid", "s_max must exceed s0"));
                }
                let required = params.required_m();
                if required > m {
                    return Err(invalid(
                        "M",
                        format!("growth bound needs M >= {required:.6}, got {m}"),
                    ));
                }
                if !matches!(params.perturbation, Perturbation::Zero) {
                    let sup = params.sweep_perturbation_bound();
                    params.c0 = C0_INFLATION * sup;
                }
            }
        }
        params.gamma = 8.0 * params.c0 * ((p + 1.0) / (p - 1.0)).powi(2);
        Ok(params)
    }

    /// Returns a copy with the Lyapunov offset θ set.
    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(invalid("theta", format!("need theta >= 0, got {theta}")));
        }
        self.theta = theta;
        Ok(self)
    }

    /// Re-runs the derivation from the stored inputs.
    pub fn rederive(&self) -> Result<Self> {
        let p = Self::derive_with_grid(
            self.n,
            self.p,
            self.a,
            self.m,
            self.mu,
            self.perturbation.clone(),
            self.bound_grid,
        )?;
        p.with_theta(self.theta)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.perturbation, Perturbation::Zero)
            || (matches!(self.perturbation, Perturbation::LogDamped) && self.mu == 0.0)
    }

    /// h^{(j)}(z) for j = 0, 1, 2.
    pub fn h(&self, j: usize, z: f64) -> f64 {
        match &self.perturbation {
            Perturbation::Custom(c) => match j {
                0 => (c.h)(z),
                1 => (c.dh)(z),
                _ => (c.d2h)(z),
            },
            _ => self.scaled_h_log(j, z, 0.0),
        }
    }

    /// H(z) = ∫₀^z h(ξ) dξ.
    pub fn big_h(&self, z: f64) -> f64 {
        match &self.perturbation {
            Perturbation::Custom(c) => (c.big_h)(z),
            _ => self.scaled_big_h_log(z, 0.0),
        }
    }

    /// e^{-(p-j)s/(p-1)} h^{(j)}(e^{s/(p-1)} w).
    pub fn scaled_h(&self, j: usize, w: f64, s: f64) -> f64 {
        match &self.perturbation {
            Perturbation::Custom(c) => {
                let l = s / (self.p - 1.0);
                let z = l.exp() * w;
                let f = match j {
                    0 => (c.h)(z),
                    1 => (c.dh)(z),
                    _ => (c.d2h)(z),
                };
                (-(self.p - j as f64) * l).exp() * f
            }
            _ => self.scaled_h_log(j, w, s / (self.p - 1.0)),
        }
    }

    /// e^{-(p+1)s/(p-1)} H(e^{s/(p-1)} w).
    pub fn scaled_big_h(&self, w: f64, s: f64) -> f64 {
        match &self.perturbation {
            Perturbation::Custom(c) => {
                let l = s / (self.p - 1.0);
                (-(self.p + 1.0) * l).exp() * (c.big_h)(l.exp() * w)
            }
            _ => self.scaled_big_h_log(w, s / (self.p - 1.0)),
        }
    }

    /// Scaled h^{(j)} with log-scale `l` (z = e^l w).
    fn scaled_h_log(&self, j: usize, w: f64, l: f64) -> f64 {
        let p = self.p;
        match self.perturbation {
            Perturbation::Zero | Perturbation::Custom(_) => 0.0,
            Perturbation::PowerSub { q } => {
                let f = ((q - p) * l).exp();
                let aw = w.abs();
                match j {
                    0 => f * aw.powf(q),
                    1 => f * q * aw.powf(q - 1.0) * w.signum() * (aw > 0.0) as u8 as f64,
                    _ => {
                        if aw == 0.0 {
                            f64::INFINITY
                        } else {
                            f * q * (q - 1.0) * aw.powf(q - 2.0)
                        }
                    }
                }
            }
            Perturbation::LogDamped => {
                let (mu, a) = (self.mu, self.a);
                if w == 0.0 {
                    return 0.0;
                }
                let aw = w.abs();
                let (big_l, r) = log_terms(aw, l);
                let la = big_l.powf(-a);
                match j {
                    0 => mu * aw.powf(p - 1.0) * w * la,
                    1 => {
                        let k = p - 2.0 * a * r / big_l;
                        mu * aw.powf(p - 1.0) * la * k
                    }
                    _ => {
                        let k = p - 2.0 * a * r / big_l;
                        let bracket = (p - 1.0) * k
                            - 2.0 * a * r * k / big_l
                            - 2.0 * a * (2.0 * r * (1.0 - r) * big_l - 2.0 * r * r) / (big_l * big_l);
                        mu * aw.powf(p - 2.0) * w.signum() * la * bracket
                    }
                }
            }
        }
    }

    fn scaled_big_h_log(&self, w: f64, l: f64) -> f64 {
        match self.perturbation {
            Perturbation::Zero | Perturbation::Custom(_) => 0.0,
            Perturbation::PowerSub { q } => {
                ((q - self.p) * l).exp() * w.signum() * w.abs().powf(q + 1.0) / (q + 1.0)
            }
            Perturbation::LogDamped => {
                if w == 0.0 {
                    return 0.0;
                }
                // ∫₀^w of the scaled h on geometric panels accumulating toward 0.
                let panels = (50.0 / (self.p + 1.0)).ceil() as usize + 2;
                let mut acc = 0.0;
                let mut hi = w;
                for _ in 0..panels {
                    let lo = 0.5 * hi;
                    acc += gl8_panel(lo, hi, |eta| self.scaled_h_log(0, eta, l));
                    hi = lo;
                }
                acc + gl8_panel(0.0, hi, |eta| self.scaled_h_log(0, eta, l))
            }
        }
    }

    /// Supremum over the grids of
    /// e^{-(p-j)s/(p-1)}|h^{(j)}(e^{s/(p-1)}w)| / (s^{-a}(|w|^{p-j}+1)) for j = 0, 1.
    pub fn check_perturbation_bound(&self, w_grid: &[f64], s_grid: &[f64]) -> f64 {
        let mut sup: f64 = 0.0;
        for &s in s_grid {
            let sa = s.powf(self.a);
            for &w in w_grid {
                for j in 0..2 {
                    let lhs = self.scaled_h(j, w, s).abs();
                    let ratio = lhs * sa / (w.abs().powf(self.p - j as f64) + 1.0);
                    if ratio.is_finite() {
                        sup = sup.max(ratio);
                    } else {
                        return f64::INFINITY;
                    }
                }
            }
        }
        sup
    }

    /// Supremum of the [`check_perturbation_bound`](Self::check_perturbation_bound)
    /// ratio over |w| ≤ w_max, s ∈ [s0, s_max]: a uniform w-grid merged with a
    /// signed log grid toward 0, then local refinement around the best sample.
    pub fn sweep_perturbation_bound(&self) -> f64 {
        let g = self.bound_grid;
        let mut ws = linspace(-g.w_max, g.w_max, g.n_w);
        for w in geomspace(g.w_max * 1e-8, g.w_max, g.n_w) {
            ws.push(w);
            ws.push(-w);
        }
        ws.sort_by(f64::total_cmp);
        let ss = geomspace(self.s0, g.s_max, g.n_s);
        let mut best = (f64::NEG_INFINITY, 0.0, self.s0);
        for &s in &ss {
            for &w in &ws {
                let r = self.check_perturbation_bound(&[w], &[s]);
                if r.is_infinite() {
                    return r;
                }
                if r > best.0 {
                    best = (r, w, s);
                }
            }
        }
        let mut dw = 2.0 * g.w_max / g.n_w as f64;
        let mut fs = (g.s_max / self.s0).powf(1.0 / g.n_s as f64);
        for _ in 0..6 {
            let (_, w0, s0) = best;
            let wl = linspace((w0 - dw).max(-g.w_max), (w0 + dw).min(g.w_max), 21);
            let sl = geomspace((s0 / fs).max(self.s0), (s0 * fs).min(g.s_max), 21);
            for &s in &sl {
                for &w in &wl {
                    let r = self.check_perturbation_bound(&[w], &[s]);
                    if r > best.0 {
                        best = (r, w, s);
                    }
                }
            }
            dw /= 5.0;
            fs = fs.powf(0.2);
        }
        best.0.max(0.0)
    }

    /// Smallest M for which the growth bounds on h, h′ (and h″ for the
    /// log-damped family) hold on a logarithmic z-grid.
    pub fn required_m(&self) -> f64 {
        if matches!(self.perturbation, Perturbation::Zero | Perturbation::Custom(_)) {
            return 0.0;
        }
        let mut req: f64 = 0.0;
        for z in growth_grid() {
            let lg = (2.0 + z * z).ln().powf(self.a);
            for j in 0..2 {
                let b = z.abs().powf(self.p - j as f64) / lg + 1.0;
                req = req.max(self.h(j, z).abs() / b);
            }
            if matches!(self.perturbation, Perturbation::LogDamped) {
                let b = z.abs().powf(self.p - 2.0) / lg;
                req = req.max(self.h(2, z).abs() / b);
            }
        }
        req
    }
}

fn growth_grid() -> Vec<f64> {
    let pos = geomspace(1e-6, 1e12, 721);
    pos.iter().map(|z| -z).chain(pos.iter().copied()).collect()
}

/// Returns L = log(2 + e^{2l}w²) and r = z²/(2+z²) evaluated stably for z = e^l w.
fn log_terms(aw: f64, l: f64) -> (f64, f64) {
    let t = 2.0 * (l + aw.ln()); // log z²
    if t > 0.0 {
        let e = (-t).exp();
        (t + (2.0 * e).ln_1p(), 1.0 / (1.0 + 2.0 * e))
    } else {
        let z2 = t.exp();
        ((2.0 + z2).ln(), z2 / (2.0 + z2))
    }
}

/// Smallest s ≥ 1 from which e^{-(p-j)s/(p-1)} ≤ s^{-a} (j = 0, 1) and
/// log s / s ≤ p/(a(p-1)) hold for every larger s.
pub fn onset_s0(p: f64, a: f64) -> f64 {
    // each condition reads log s / s ≤ c with c ∈ {p/(a(p-1)), 1/a}
    let c = (1.0 / a).min(p / (a * (p - 1.0)));
    if c >= 1.0 / std::f64::consts::E {
        return S0_FLOOR;
    }
    // root of log s / s = c on the decreasing branch s > e
    let f = |s: f64| s.ln() / s - c;
    let (mut lo, mut hi) = (std::f64::consts::E, std::f64::consts::E);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(S0_FLOOR)
}

/// Flat key-value block for the experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub p: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(rename = "M", default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_pert")]
    pub perturbation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_wmax")]
    pub w_max: f64,
    #[serde(default = "default_smax")]
    pub s_max: f64,
    #[serde(default = "default_grid")]
    pub grid_w: usize,
    #[serde(default = "default_grid")]
    pub grid_s: usize,
}

fn default_n() -> usize {
    1
}
fn default_a() -> f64 {
    2.0
}
fn default_m() -> f64 {
    10.0
}
fn default_pert() -> String {
    "zero".into()
}
fn default_wmax() -> f64 {
    10.0
}
fn default_smax() -> f64 {
    1e3
}
fn default_grid() -> usize {
    400
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            n: 1,
            p: 2.0,
            a: 2.0,
            m: 10.0,
            mu: 0.0,
            perturbation: "zero".into(),
            q: None,
            theta: 0.0,
            w_max: 10.0,
            s_max: 1e3,
            grid_w: 400,
            grid_s: 400,
        }
    }
}

impl ParamsConfig {
    pub fn build(&self) -> Result<ProblemParams> {
        let pert = match self.perturbation.as_str() {
            "zero" => Perturbation::Zero,
            "log_damped" => Perturbation::LogDamped,
            "power_sub" => Perturbation::PowerSub {
                q: self.q.ok_or_else(|| Error::Config {
                    field: "params.q".into(),
                    reason: "power_sub requires q".into(),
                })?,
            },
            other => {
                return Err(Error::Config {
                    field: "params.perturbation".into(),
                    reason: format!("unknown perturbation `{other}` (zero | log_damped | power_sub)"),
                })
            }
        };
        let grid = BoundGrid {
            w_max: self.w_max,
            s_max: self.s_max,
            n_w: self.grid_w,
            n_s: self.grid_s,
        };
        ProblemParams::derive_with_grid(self.n, self.p, self.a, self.m, self.mu, pert, grid)?.with_theta(self.theta)
    }
}

/// Derived constants as a serializable record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub kappa: f64,
    pub c0: f64,
    pub s0: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl From<&ProblemParams> for DerivedConstants {
    fn from(p: &ProblemParams) -> Self {
        DerivedConstants {
            kappa: p.kappa,
            c0: p.c0,
            s0: p.s0,
            gamma: p.gamma,
            theta: p.theta,
        }
    }
}
