use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::config::{ExperimentConfig, ProfileChoice, Scenario, WRunConfig};
use crate::classify::{build_v, classify, AFit, Case};
use crate::csv::table;
use crate::energy::{audit_run, measure_onset, verify_lyapunov, REPORT_COLUMNS};
use crate::error::{Error, Result};
use crate::hermite::MultiIndex;
use crate::numerics::geomspace;
use crate::ode::{alpha_dichotomy, alpha_separatrix, eval_phi_series, solve_blowup_ode, solve_phi, AlphaBranch, BlowupOdeOptions, PhiOptions};
use crate::params::ProblemParams;
use crate::pde::{detect_blowup, io::write_trace_bin, run_u, run_w, Field, Frame, Grid, URunOptions, WRunOptions};
use crate::profiles::{extended_convergence, residual_g, xi_lattice, ProfileSpec};

/// Headline numbers of one run, keyed by name.
pub type Summary = BTreeMap<String, Value>;

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::write(dir.join(name), body)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> Result<()> {
    let body = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    write(dir, name, &(body + "\n"))
}

/// Runs a non-sweep scenario, writing its artifacts into `dir`.
pub fn run_scenario(config: &ExperimentConfig, params: &ProblemParams, dir: &Path) -> Result<Summary> {
    let mut out = Summary::new();
    out.insert("scenario".into(), json!(config.scenario.name()));
    match config.scenario {
        Scenario::OdeRate => ode_rate(config, params, dir, &mut out)?,
        Scenario::PhiSeries => phi_series(config, params, dir, &mut out)?,
        Scenario::AlphaDichotomy => alpha(config, dir, &mut out)?,
        Scenario::PdeBlowup => pde_blowup(config, params, dir, &mut out)?,
        Scenario::LyapunovAudit => audit(config, params, dir, &mut out)?,
        Scenario::Classify => classify_run(config, params, dir, &mut out)?,
        Scenario::ProfileCheck => profile_check(config, params, dir, &mut out)?,
        Scenario::Sweep => return Err(Error::Unsupported("nested sweep".into())),
    }
    write_json(dir, "summary.json", &out)?;
    Ok(out)
}

fn ode_rate(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.ode_rate;
    let opts = BlowupOdeOptions {
        v_stop: c.v_stop,
        v_rate: c.v_rate,
        t_horizon: c.t_horizon,
        ..Default::default()
    };
    let sol = solve_blowup_ode(params, c.v0, 0.0, opts)?;
    let t_blow = sol
        .blowup_time
        .ok_or_else(|| Error::Inconclusive(format!("no blow-up within t = {}", c.t_horizon)))?;
    let e = 1.0 / (params.p - 1.0);
    let rows = sol
        .times
        .iter()
        .zip(&sol.values)
        .map(|(&t, &v)| vec![t, v, (t_blow - t).max(0.0).powf(e) * v]);
    write(dir, "ode_rate.csv", &table(&["t", "v", "rate_constant"], rows))?;
    let rate = sol.rate_constant.unwrap_or(f64::NAN);
    out.insert("kappa".into(), json!(params.kappa));
    out.insert("blowup_time".into(), json!(t_blow));
    out.insert("rate_constant".into(), json!(rate));
    out.insert("rate_over_kappa".into(), json!(rate / params.kappa));
    Ok(())
}

fn phi_series(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.phi_series;
    let phi = solve_phi(params, c.s_start, c.s_end, PhiOptions::default())?;
    let a = params.a;
    let k = params.kappa;
    let mut rows = Vec::with_capacity(c.points);
    for s in geomspace(c.s_start, c.s_end, c.points) {
        let ph = phi.interpolate(s);
        let se = eval_phi_series(params, s, c.k).unwrap_or(f64::NAN);
        rows.push(vec![s, ph, se, s.powf(a) * (ph - k), s.powf(a) * (se - k)]);
    }
    let last = rows.last().cloned().unwrap_or_default();
    write(dir, "phi_series.csv", &table(&["s", "phi", "series", "scaled_phi", "scaled_series"], rows))?;
    out.insert("s_end".into(), json!(last[0]));
    out.insert("plateau".into(), json!(last[3]));
    out.insert("series_plateau".into(), json!(last[4]));
    let rel = if last[4] != 0.0 { (last[3] / last[4] - 1.0).abs() } else { (last[3] - last[4]).abs() };
    out.insert("relative_difference".into(), json!(rel));
    Ok(())
}

fn branch_code(b: Option<AlphaBranch>) -> f64 {
    match b {
        Some(AlphaBranch::MinusOneOverS) => 0.0,
        Some(AlphaBranch::SmallOrder) => 1.0,
        Some(AlphaBranch::Ambiguous) => 2.0,
        None => 3.0,
    }
}

fn alpha(config: &ExperimentConfig, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.alpha;
    let mut rows = Vec::new();
    let mut counts = [0usize; 4];
    let mut max_resid = 0.0f64;
    for &cc in &c.c {
        let mut starts = c.alpha0.clone();
        if c.separatrix {
            starts.push(alpha_separatrix(c.q, cc, c.s_begin, c.s_end)?);
        }
        for a0 in starts {
            let (branch, sa, scaled, resid) = match alpha_dichotomy(c.q, cc, a0, c.s_begin, c.s_end) {
                Ok(r) => (Some(r.branch), r.s_alpha_end, r.scaled_end, r.residual),
                Err(Error::BlowupBranch { .. }) => (None, f64::NAN, f64::NAN, f64::NAN),
                Err(e) => return Err(e),
            };
            let code = branch_code(branch);
            counts[code as usize] += 1;
            if branch.is_some() {
                max_resid = max_resid.max(resid);
            }
            rows.push(vec![a0, cc, code, sa, scaled, resid]);
        }
    }
    write(
        dir,
        "alpha_runs.csv",
        &table(&["alpha0", "c", "branch", "s_alpha_end", "scaled_end", "residual"], rows),
    )?;
    out.insert("minus_one_over_s".into(), json!(counts[0]));
    out.insert("small_order".into(), json!(counts[1]));
    out.insert("ambiguous".into(), json!(counts[2]));
    out.insert("blowup".into(), json!(counts[3]));
    out.insert("max_residual".into(), json!(max_resid));
    Ok(())
}

fn pde_blowup(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.pde;
    let grid = Grid::new(params.n, c.half_width, c.dx)?;
    let u0 = c.initial.build(&grid, params.kappa, 0.0, Frame::Physical, config.seed)?;
    let opts = URunOptions {
        cfl: c.cfl,
        dt_max: c.dt_max,
        t_end: c.t_end,
        u_stop: c.u_stop,
        resolution_cells: c.resolution_cells,
        snapshot_every: c.snapshot_every,
    };
    let trace = run_u(u0, params, &opts)?;
    write(dir, "sup_norm.csv", &table(&["t", "sup_norm"], trace.sup_norm.iter().map(|&(t, u)| vec![t, u])))?;
    if c.snapshot_every > 0 {
        write_trace_bin(&trace, &dir.join("trace.bin"))?;
    }
    out.insert("stop".into(), json!(format!("{:?}", trace.stop)));
    let rep = detect_blowup(&trace, params)?;
    write(
        dir,
        "rate.csv",
        &table(&["t", "rate_constant"], rep.rate_samples.iter().map(|&(t, r)| vec![t, r])),
    )?;
    out.insert("kappa".into(), json!(params.kappa));
    out.insert("blowup_time".into(), json!(rep.blowup_time));
    out.insert("rate_constant".into(), json!(rep.rate_constant));
    out.insert("rate_over_kappa".into(), json!(rep.rate_constant / params.kappa));
    out.insert("lower_bound_min_ratio".into(), json!(rep.lower_bound_min_ratio));
    out.insert("lower_bound_ok".into(), json!(rep.lower_bound_ok));
    Ok(())
}

fn w_options(c: &WRunConfig) -> WRunOptions {
    WRunOptions {
        ds: c.ds,
        s_end: c.s_end,
        mode: c.mode,
        snapshot_every: c.snapshot_every,
        w_stop: c.w_stop,
    }
}

fn initial_w(c: &WRunConfig, params: &ProblemParams, seed: u64) -> Result<Field> {
    let grid = Grid::new(params.n, c.half_width, c.dy)?;
    c.initial.build(&grid, params.kappa, c.s_start, Frame::Similarity, seed)
}

fn audit(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.audit;
    let w0 = initial_w(&c.run, params, config.seed)?;
    let (trace, reports, ball) = audit_run(w0, params, &w_options(&c.run), c.every, c.ball_radius)?;
    write(dir, "functionals.csv", &table(&REPORT_COLUMNS, reports.iter().map(|r| r.row())))?;
    if !ball.is_empty() {
        let rows = reports.iter().zip(&ball).map(|(r, b)| vec![r.s, *b]);
        write(dir, "ball_lp1.csv", &table(&["s", "ball_lp1"], rows))?;
    }
    let check = verify_lyapunov(&reports);
    let (s0, s1) = (reports.first().map_or(f64::NAN, |r| r.s), reports.last().map_or(f64::NAN, |r| r.s));
    write(
        dir,
        "lyapunov.csv",
        &table(
            &["s_first", "s_last", "max_violation", "pairs"],
            [vec![s0, s1, check.max_violation, check.pairs.len() as f64]],
        ),
    )?;
    write(
        dir,
        "lyapunov_pairs.csv",
        &table(&["s1", "s2", "violation"], check.pairs.iter().map(|&(a, b, v)| vec![a, b, v])),
    )?;
    out.insert("max_violation".into(), json!(check.max_violation));
    out.insert("onset".into(), json!(measure_onset(&check, 1e-4)));
    out.insert("stop".into(), json!(format!("{:?}", trace.stop)));
    out.insert("s_last".into(), json!(s1));
    Ok(())
}

fn w_snapshots(c: &WRunConfig, params: &ProblemParams, seed: u64) -> Result<Vec<Field>> {
    let w0 = initial_w(c, params, seed)?;
    let trace = run_w(w0, params, &w_options(c), |_| true)?;
    Ok(trace.snapshots)
}

fn eigen_csv(fit: &AFit) -> String {
    fit.to_csv()
}

fn classify_run(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.classify;
    let snaps = w_snapshots(&c.run, params, config.seed)?;
    let trace = build_v(&snaps, params, c.max_degree)?;
    let rows = trace.snapshots.iter().map(|x| vec![x.s, x.z, x.x, x.y, x.v_norm, x.beta, x.omega]);
    write(dir, "xyz.csv", &table(&["s", "Z", "X", "Y", "V", "beta", "omega"], rows))?;
    let rep = classify(&trace, params, &c.thresholds, c.window.map(|[a, b]| (a, b)));
    if let Some(f) = &rep.a_fit {
        write(dir, "eigen.csv", &eigen_csv(f))?;
    }
    write_json(dir, "classification.json", &rep)?;
    out.insert(
        "case".into(),
        json!(match rep.case {
            Case::IPhi => "I_Phi",
            Case::IIQuadratic => "II_Quadratic",
            Case::IIIHigherMode => "III_HigherMode",
            Case::Inconclusive => "Inconclusive",
        }),
    );
    out.insert("l".into(), json!(rep.l));
    out.insert("m".into(), json!(rep.m));
    out.insert("xyz_slope".into(), json!(rep.xyz.slope));
    out.insert("null_ratio".into(), json!(rep.xyz.null_ratio));
    out.insert("tail_sensitivity".into(), json!(trace.tail_sensitivity));
    Ok(())
}

/// Builds the profile named in a config.
pub fn profile_spec(params: &ProblemParams, choice: &ProfileChoice) -> Result<ProfileSpec> {
    match choice {
        ProfileChoice::Quadratic { l } => ProfileSpec::quadratic(params, *l),
        ProfileChoice::HigherPsi { m, c_alpha } => ProfileSpec::higher_psi(
            params,
            *m,
            c_alpha.iter().map(|e| (MultiIndex::new(e.alpha.clone()), e.c)).collect(),
        ),
    }
}

fn profile_check(config: &ExperimentConfig, params: &ProblemParams, dir: &Path, out: &mut Summary) -> Result<()> {
    let c = &config.profile;
    let spec = profile_spec(params, &c.profile)?;
    let resid = residual_g(&spec, &xi_lattice(params.n, c.k0))?;
    let snaps: Vec<Field> = w_snapshots(&c.run, params, config.seed)?
        .into_iter()
        .filter(|f| f.time >= c.s_min)
        .collect();
    let curve = extended_convergence(&snaps, &spec, c.k0)?;
    write(dir, "error_curve.csv", &curve.to_csv(params.a))?;
    out.insert("residual_g".into(), json!(resid));
    out.insert("monotone_from".into(), json!(curve.monotone_from()));
    out.insert("final_error".into(), json!(curve.sup_error.last()));
    if let Some(f) = curve.fit {
        out.insert("c_power".into(), json!(f.c_power));
        out.insert("c_log".into(), json!(f.c_log));
        out.insert("fit_rel_residual".into(), json!(f.rel_residual));
    }
    Ok(())
}
