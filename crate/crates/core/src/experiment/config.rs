use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::Thresholds;
use crate::error::{Error, Result};
use crate::hermite::eval_h;
use crate::params::{ParamsConfig, ProblemParams};
use crate::pde::{Field, Frame, Grid, ModeControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    OdeRate,
    PhiSeries,
    AlphaDichotomy,
    PdeBlowup,
    LyapunovAudit,
    Classify,
    ProfileCheck,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::OdeRate => "ode-rate",
            Scenario::PhiSeries => "phi-series",
            Scenario::AlphaDichotomy => "alpha-dichotomy",
            Scenario::PdeBlowup => "pde-blowup",
            Scenario::LyapunovAudit => "lyapunov-audit",
            Scenario::Classify => "classify",
            Scenario::ProfileCheck => "profile-check",
            Scenario::Sweep => "sweep",
        }
    }
}

/// Initial data. Values marked relative are multiples of κ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Constant { value: f64 },
    /// factor·κ
    ConstantKappa { factor: f64 },
    /// amplitude·e^{−|x|²/width²}
    Gaussian { amplitude: f64, width: f64 },
    /// max(κ − eps(|y|² − 2n), 0)
    KappaQuadratic { eps: f64 },
    /// max(κ − eps·h_order(y_axis), 0)
    KappaHermite { eps: f64, order: usize, axis: usize },
    /// κ(1 + eps·ξ), ξ uniform in (−1, 1) per node, drawn from the run seed
    KappaNoise { eps: f64 },
}

impl InitialData {
    fn validate(&self, field: &str, n: usize) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(cfg(format!("{field}.{name}"), "must be finite"))
            }
        };
        match *self {
            InitialData::Constant { value } => finite("value", value),
            InitialData::ConstantKappa { factor } => finite("factor", factor),
            InitialData::Gaussian { amplitude, width } => {
                finite("amplitude", amplitude)?;
                if !(width > 0.0) {
                    return Err(cfg(format!("{field}.width"), "must be positive"));
                }
                Ok(())
            }
            InitialData::KappaQuadratic { eps } => finite("eps", eps),
            InitialData::KappaHermite { eps, order, axis } => {
                finite("eps", eps)?;
                if order > 40 {
                    return Err(cfg(format!("{field}.order"), "at most 40"));
                }
                if axis >= n {
                    return Err(cfg(format!("{field}.axis"), format!("must be below n = {n}")));
                }
                Ok(())
            }
            InitialData::KappaNoise { eps } => finite("eps", eps),
        }
    }

    pub fn build(&self, grid: &Grid, kappa: f64, time: f64, frame: Frame, seed: u64) -> Result<Field> {
        let n = grid.n as f64;
        match *self {
            InitialData::Constant { value } => Field::from_fn(grid.clone(), time, frame, |_| value),
            InitialData::ConstantKappa { factor } => Field::from_fn(grid.clone(), time, frame, |_| factor * kappa),
            InitialData::Gaussian { amplitude, width } => Field::from_fn(grid.clone(), time, frame, |y| {
                amplitude * (-y.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp()
            }),
            InitialData::KappaQuadratic { eps } => Field::from_fn(grid.clone(), time, frame, |y| {
                (kappa - eps * (y.iter().map(|v| v * v).sum::<f64>() - 2.0 * n)).max(0.0)
            }),
            InitialData::KappaHermite { eps, order, axis } => {
                Field::from_fn(grid.clone(), time, frame, |y| (kappa - eps * eval_h(order, y[axis])).max(0.0))
            }
            InitialData::KappaNoise { eps } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = (0..grid.len()).map(|_| kappa * (1.0 + eps * rng.random_range(-1.0..1.0))).collect();
                Field::new(grid.clone(), values, time, frame)
            }
        }
    }
}

fn cfg(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(cfg(field, format!("must be positive and finite, got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeRateConfig {
    pub v0: f64,
    pub v_stop: f64,
    pub v_rate: f64,
    pub t_horizon: f64,
}

impl Default for OdeRateConfig {
    fn default() -> Self {
        OdeRateConfig {
            v0: 1.0,
            v_stop: 1e8,
            v_rate: 1e6,
            t_horizon: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiSeriesConfig {
    pub s_start: f64,
    pub s_end: f64,
    pub points: usize,
    /// Series truncation order.
    pub k: usize,
}

impl Default for PhiSeriesConfig {
    fn default() -> Self {
        PhiSeriesConfig {
            s_start: 10.0,
            s_end: 1e3,
            points: 60,
            k: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaConfig {
    pub q: f64,
    pub c: Vec<f64>,
    pub alpha0: Vec<f64>,
    /// Also run from the bisected separatrix value for each c.
    pub separatrix: bool,
    pub s_begin: f64,
    pub s_end: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        AlphaConfig {
            q: 3.0,
            c: vec![-1.0, 0.0, 0.5, 1.0],
            alpha0: vec![-0.1, -0.05, -0.025, 0.0],
            separatrix: true,
            s_begin: 20.0,
            s_end: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    pub half_width: f64,
    pub dx: f64,
    pub initial: InitialData,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub u_stop: f64,
    pub resolution_cells: f64,
    pub snapshot_every: usize,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            half_width: 4.0,
            dx: 1e-3,
            initial: InitialData::Gaussian {
                amplitude: 10.0,
                width: 1.0,
            },
            cfl: 1e-2,
            dt_max: 1e-2,
            t_end: 10.0,
            u_stop: 1e8,
            resolution_cells: 8.0,
            snapshot_every: 0,
        }
    }
}

/// A similarity-variable run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WRunConfig {
    pub half_width: f64,
    pub dy: f64,
    pub ds: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub mode: ModeControl,
    pub initial: InitialData,
    /// Steps between stored snapshots.
    pub snapshot_every: usize,
    pub w_stop: f64,
}

impl Default for WRunConfig {
    fn default() -> Self {
        WRunConfig {
            half_width: 20.0,
            dy: 0.05,
            ds: 1e-2,
            s_start: 1.0,
            s_end: 50.0,
            mode: ModeControl::ProjectUnstable,
            initial: InitialData::KappaQuadratic { eps: 0.05 },
            snapshot_every: 100,
            w_stop: 1e3,
        }
    }
}

impl WRunConfig {
    fn validate(&self, field: &str, n: usize) -> Result<()> {
        positive(&format!("{field}.half_width"), self.half_width)?;
        positive(&format!("{field}.dy"), self.dy)?;
        positive(&format!("{field}.ds"), self.ds)?;
        positive(&format!("{field}.w_stop"), self.w_stop)?;
        if !(self.s_end > self.s_start) || !self.s_start.is_finite() {
            return Err(cfg(format!("{field}.s_end"), "need s_start < s_end"));
        }
        let m = 2.0 * (self.half_width / self.dy).round() + 1.0;
        if m.powi(n as i32) > 4e6 {
            return Err(cfg(format!("{field}.dy"), format!("grid of {m}^{n} nodes is too large")));
        }
        self.initial.validate(&format!("{field}.initial"), n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub run: WRunConfig,
    /// Steps between functional reports.
    pub every: usize,
    pub ball_radius: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            run: WRunConfig {
                half_width: 10.0,
                ds: 1e-3,
                s_start: 0.0,
                s_end: 2.0,
                mode: ModeControl::Free,
                initial: InitialData::ConstantKappa { factor: 1.0 },
                snapshot_every: 0,
                ..WRunConfig::default()
            },
            every: 10,
            ball_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub run: WRunConfig,
    pub max_degree: usize,
    /// Fit window [s_lo, s_hi]; the last half of the trace when absent.
    pub window: Option<[f64; 2]>,
    pub thresholds: Thresholds,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            run: WRunConfig::default(),
            max_degree: 6,
            window: None,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub alpha: Vec<usize>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileChoice {
    Quadratic { l: usize },
    HigherPsi { m: usize, c_alpha: Vec<CoeffEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub run: WRunConfig,
    pub profile: ProfileChoice,
    pub k0: f64,
    /// Snapshots before this s are dropped as transient.
    pub s_min: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            run: WRunConfig::default(),
            profile: ProfileChoice::Quadratic { l: 1 },
            k0: 1.0,
            s_min: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Scenario,
    /// Dotted config path → values; the Cartesian product is run.
    pub axes: BTreeMap<String, Vec<toml::Value>>,
    /// Concurrent cells (0: all cores).
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: Scenario::OdeRate,
            axes: BTreeMap::new(),
            workers: 0,
        }
    }
}

/// One reproducible experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub ode_rate: OdeRateConfig,
    #[serde(default)]
    pub phi_series: PhiSeriesConfig,
    #[serde(default)]
    pub alpha: AlphaConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            seed: 0,
            params: ParamsConfig::default(),
            ode_rate: OdeRateConfig::default(),
            phi_series: PhiSeriesConfig::default(),
            alpha: AlphaConfig::default(),
            pde: PdeConfig::default(),
            audit: AuditConfig::default(),
            classify: ClassifyConfig::default(),
            profile: ProfileConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg(e.span().map_or("config".into(), |r| format!("config[{}..{}]", r.start, r.end)), e.message()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg("config", e.to_string()))
    }

    /// Checks every knob the scenario reads; returns the derived parameters.
    pub fn validate(&self) -> Result<ProblemParams> {
        let params = self.params.build().map_err(|e| match e {
            Error::Config { .. } => e,
            other => cfg("params", other.to_string()),
        })?;
        if self.seed > i64::MAX as u64 {
            return Err(cfg("seed", "must fit in a signed 64-bit TOML integer"));
        }
        let n = params.n;
        match self.scenario {
            Scenario::OdeRate => {
                let c = &self.ode_rate;
                positive("ode_rate.v0", c.v0)?;
                positive("ode_rate.t_horizon", c.t_horizon)?;
                if !(c.v_stop > c.v_rate && c.v_rate > c.v0) {
                    return Err(cfg("ode_rate.v_rate", "need v0 < v_rate < v_stop"));
                }
            }
            Scenario::PhiSeries => {
                let c = &self.phi_series;
                if !(c.s_start >= params.s0) {
                    return Err(cfg("phi_series.s_start", format!("must be at least s0 = {}", params.s0)));
                }
                if !(c.s_end > c.s_start) || !c.s_end.is_finite() {
                    return Err(cfg("phi_series.s_end", "need s_start < s_end"));
                }
                if c.points < 2 {
                    return Err(cfg("phi_series.points", "need at least 2"));
                }
            }
            Scenario::AlphaDichotomy => {
                let c = &self.alpha;
                if !(c.q > 2.0 && c.q <= 3.0) {
                    return Err(cfg("alpha.q", "need q in (2, 3]"));
                }
                positive("alpha.s_begin", c.s_begin)?;
                if !(c.s_end > c.s_begin) || !c.s_end.is_finite() {
                    return Err(cfg("alpha.s_end", "need s_begin < s_end"));
                }
                if c.c.is_empty() || c.c.iter().any(|x| !x.is_finite()) {
                    return Err(cfg("alpha.c", "need finite values"));
                }
                if c.alpha0.iter().any(|x| !x.is_finite()) || (c.alpha0.is_empty() && !c.separatrix) {
                    return Err(cfg("alpha.alpha0", "need finite values or separatrix = true"));
                }
            }
            Scenario::PdeBlowup => {
                let c = &self.pde;
                positive("pde.half_width", c.half_width)?;
                positive("pde.dx", c.dx)?;
                positive("pde.cfl", c.cfl)?;
                positive("pde.dt_max", c.dt_max)?;
                positive("pde.t_end", c.t_end)?;
                positive("pde.u_stop", c.u_stop)?;
                if !(c.resolution_cells >= 0.0) {
                    return Err(cfg("pde.resolution_cells", "must be non-negative"));
                }
                let m = 2.0 * (c.half_width / c.dx).round() + 1.0;
                if m.powi(n as i32) > 4e6 {
                    return Err(cfg("pde.dx", format!("grid of {m}^{n} nodes is too large")));
                }
                c.initial.validate("pde.initial", n)?;
            }
            Scenario::LyapunovAudit => {
                self.audit.run.validate("audit.run", n)?;
                if self.audit.every == 0 {
                    return Err(cfg("audit.every", "must be at least 1"));
                }
                if let Some(r) = self.audit.ball_radius {
                    positive("audit.ball_radius", r)?;
                }
            }
            Scenario::Classify => {
                let c = &self.classify;
                c.run.validate("classify.run", n)?;
                if c.run.snapshot_every == 0 {
                    return Err(cfg("classify.run.snapshot_every", "must be at least 1"));
                }
                if !(2..=12).contains(&c.max_degree) {
                    return Err(cfg("classify.max_degree", "need 2 ≤ max_degree ≤ 12"));
                }
                if let Some([lo, hi]) = c.window {
                    if !(lo < hi) {
                        return Err(cfg("classify.window", "need lo < hi"));
                    }
                }
            }
            Scenario::ProfileCheck => {
                let c = &self.profile;
                c.run.validate("profile.run", n)?;
                if c.run.snapshot_every == 0 {
                    return Err(cfg("profile.run.snapshot_every", "must be at least 1"));
                }
                positive("profile.k0", c.k0)?;
                super::scenarios::profile_spec(&params, &c.profile).map_err(|e| cfg("profile.profile", e.to_string()))?;
            }
            Scenario::Sweep => {
                if self.sweep.base == Scenario::Sweep {
                    return Err(cfg("sweep.base", "a sweep cannot nest another sweep"));
                }
                for (k, v) in &self.sweep.axes {
                    if v.is_empty() {
                        return Err(cfg(format!("sweep.axes.{k}"), "axis has no values"));
                    }
                }
                for (i, cell) in self.sweep_cells()?.iter().enumerate() {
                    cell.validate().map_err(|e| cfg(format!("sweep cell {i}"), e.to_string()))?;
                }
            }
        }
        Ok(params)
    }

    /// Cartesian product of the sweep axes applied to this config, each cell
    /// with its scenario set to the sweep base. An empty axis set gives one cell.
    pub fn sweep_cells(&self) -> Result<Vec<ExperimentConfig>> {
        let mut base = self.clone();
        base.scenario = self.sweep.base;
        base.sweep = SweepConfig::default();
        let root = toml::Value::try_from(&base).map_err(|e| cfg("sweep", e.to_string()))?;
        let axes: Vec<(&String, &Vec<toml::Value>)> = self.sweep.axes.iter().collect();
        let total: usize = axes.iter().map(|a| a.1.len()).product();
        let mut cells = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut v = root.clone();
            // last axis varies fastest
            let mut picks = vec![0; axes.len()];
            for (k, (_, vals)) in axes.iter().enumerate().rev() {
                picks[k] = idx % vals.len();
                idx /= vals.len();
            }
            for ((path, vals), &k) in axes.iter().zip(&picks) {
                set_path(&mut v, path, vals[k].clone())?;
            }
            let cell: ExperimentConfig = v
                .try_into()
                .map_err(|e: toml::de::Error| cfg("sweep.axes", e.message().to_string()))?;
            cells.push(cell);
        }
        Ok(cells)
    }
}

fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| cfg(format!("sweep.axes.{path}"), "path does not name a table entry"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Err(cfg(format!("sweep.axes.{path}"), "empty path"))
}
