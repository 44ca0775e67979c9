//! Subcommand bodies. Each returns the text written to the output.

use std::fmt::Write as _;

use hardy_bep::analysis::{carleman_extrapolate, perturbation_experiment, PerturbationKind};
use hardy_bep::series::{calibrate, MomentTable, DEFAULT_MAX_ORDER};
use hardy_bep::solver::Problem;
use hardy_bep::{BepError, Complex64, ErrorCategory};
use serde::Serialize;

use crate::config::{RunConfig, SeriesConfig};
use crate::error::CliError;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn category(e: &BepError) -> &'static str {
    match e.category() {
        ErrorCategory::Validation => "validation",
        ErrorCategory::Infeasible => "infeasible",
        ErrorCategory::Numerical => "numerical",
    }
}

/// Error marker that stays inside one CSV field.
fn status(e: &dyn std::fmt::Display, cat: &str) -> String {
    format!("error:{cat}:{}", e.to_string().replace([',', '\n'], ";"))
}

fn header(out: &mut String, command: &str, cfg: &RunConfig, problem: &Problem) {
    let p = &cfg.problem;
    let spec = problem.spec();
    let _ = writeln!(out, "# hbep {command}");
    let _ = writeln!(
        out,
        "# theta0 = {}; Q = {}; quad_points = {}; N = {}; interpolant = {}",
        num(p.theta0),
        spec.q,
        spec.quad_points,
        spec.data.len(),
        p.interpolant
    );
    let _ = writeln!(out, "# norms use the measure d theta / (2 pi)");
}

#[derive(Serialize)]
struct SolveRecord {
    mu: f64,
    e: f64,
    m0: f64,
    m0_sq: f64,
    bound: f64,
    saturation: f64,
    g: Vec<[f64; 2]>,
}

pub fn solve(cfg: &RunConfig, json: bool) -> Result<String, CliError> {
    let problem = cfg.bounded_problem()?;
    let r = problem.tune_mu()?;
    let m = problem.spec().bound;
    let record = SolveRecord {
        mu: r.mu,
        e: r.e,
        m0: r.m0,
        m0_sq: r.m0_sq(),
        bound: m,
        saturation: (r.m0 - m).abs() / m,
        g: r.g.coeffs().iter().map(|c| [c.re, c.im]).collect(),
    };
    if json {
        let mut text = serde_json::to_string_pretty(&record).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        return Ok(text);
    }
    let mut out = String::new();
    let _ = writeln!(out, "mu*           {}", num(record.mu));
    let _ = writeln!(out, "e             {}", num(record.e));
    let _ = writeln!(out, "M0            {}", num(record.m0));
    let _ = writeln!(out, "M             {}", num(record.bound));
    let _ = writeln!(out, "|M0 - M| / M  {}", num(record.saturation));
    let _ = writeln!(out, "k,g_re,g_im");
    for (k, c) in r.g.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, num(c.re), num(c.im));
    }
    Ok(out)
}

/// Series order from a fixed value or by calibration.
fn series_order(problem: &Problem, s: &SeriesConfig) -> Result<(usize, MomentTable, String), CliError> {
    match (s.order, s.mu0) {
        (Some(_), Some(_)) => Err(CliError::config("series: give either order or mu0/tol, not both")),
        (Some(order), None) => Ok((order, MomentTable::build(problem, order)?, format!("fixed order S = {order}"))),
        (None, Some(mu0)) => {
            let tol = s.tol.ok_or_else(|| CliError::config("series.tol: required with mu0"))?;
            let cal = calibrate(problem, mu0, tol, s.max_order.unwrap_or(DEFAULT_MAX_ORDER))?;
            let note = format!(
                "S = {} calibrated at mu0 = {} to tol = {} (relative residual {})",
                cal.order,
                num(mu0),
                num(tol),
                num(cal.rel_error)
            );
            Ok((cal.order, cal.table, note))
        }
        (None, None) => Err(CliError::config("series: give order, or mu0 and tol")),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = cfg.unbounded_problem()?;
    let grid = cfg.sweep.grid()?;
    let series = cfg.series.as_ref().map(|s| series_order(&problem, s)).transpose()?;
    let (f_norm, h_norm) = (problem.f_norm_i(), problem.h_norm_j());
    let mut out = String::new();
    header(&mut out, "sweep", cfg, &problem);
    let _ = writeln!(out, "# e = ||psi + b g0 - f||^2 on I; e_rel = e / ||f|| on I with ||f|| = {}", num(f_norm));
    let _ = writeln!(
        out,
        "# M0sq = ||psi + b g0 - h||^2 on J; M0sq_rel = M0sq / ||h|| on J with ||h|| = {}",
        num(h_norm)
    );
    if let Some((_, _, note)) = &series {
        let _ = writeln!(out, "# e_series, M0sq_series: {note}; blank where |mu| >= 1");
    }
    let _ = writeln!(out, "# status: ok or error:<category>:<message>");
    let mut cols = vec!["mu", "e", "e_rel", "M0sq", "M0sq_rel"];
    if series.is_some() {
        cols.extend(["e_series", "M0sq_series"]);
    }
    cols.push("status");
    let _ = writeln!(out, "{}", cols.join(","));
    let rel = |x: f64, n: f64| if n > 0.0 { num(x / n) } else { String::new() };
    for row in problem.mu_sweep(&grid) {
        let mut fields = vec![num(row.mu)];
        match &row.outcome {
            Ok(p) => fields.extend([num(p.e), rel(p.e, f_norm), num(p.m0_sq), rel(p.m0_sq, h_norm)]),
            Err(_) => fields.extend(std::iter::repeat_n(String::new(), 4)),
        }
        if let Some((order, table, _)) = &series {
            let pair = table
                .e_series_order(row.mu, *order)
                .and_then(|e| Ok((e, table.m0_series_order(row.mu, *order)?)));
            match pair {
                Ok((e, m)) => fields.extend([num(e), num(m)]),
                Err(_) => fields.extend([String::new(), String::new()]),
            }
        }
        fields.push(match &row.outcome {
            Ok(_) => "ok".into(),
            Err(e) => status(e, category(e)),
        });
        let _ = writeln!(out, "{}", fields.join(","));
    }
    Ok(out)
}

pub fn calibrate_cmd(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = cfg.unbounded_problem()?;
    let s = cfg.series.clone().unwrap_or_default();
    let mu0 = s.mu0.ok_or_else(|| CliError::config("series.mu0: required for calibrate"))?;
    let tol = s.tol.ok_or_else(|| CliError::config("series.tol: required for calibrate"))?;
    let cal = calibrate(&problem, mu0, tol, s.max_order.unwrap_or(DEFAULT_MAX_ORDER))?;
    let mut out = String::new();
    header(&mut out, "calibrate", cfg, &problem);
    let _ = writeln!(out, "# mu0 = {}; tol = {}", num(mu0), num(tol));
    let _ = writeln!(out, "# S = {}", cal.order);
    let _ = writeln!(out, "# e direct = {}; relative residual = {}", num(cal.e_direct), num(cal.rel_error));
    let _ = writeln!(out, "k,F");
    for (k, f) in cal.table.moments().iter().take(cal.order + 1).enumerate() {
        let _ = writeln!(out, "{k},{}", num(*f));
    }
    Ok(out)
}

pub fn stability(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = cfg.bounded_problem()?;
    let kinds = cfg
        .stability
        .kinds
        .iter()
        .map(|k| k.parse::<PerturbationKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::config(format!("stability.kinds: {e}")))?;
    if let Some(d) = cfg.stability.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(CliError::config(format!("stability.deltas: {d} must be nonnegative")));
    }
    let mut out = String::new();
    header(&mut out, "stability", cfg, &problem);
    let _ = writeln!(out, "# M = {}; seed = {}", num(problem.spec().bound), cfg.seed);
    let mut body = String::new();
    let mut constants_written = false;
    for kind in kinds {
        let (k, rows) = perturbation_experiment(&problem, kind, &cfg.stability.deltas, cfg.seed)?;
        if !constants_written {
            let _ = writeln!(out, "# mu = {}; m0 = {}; m1 = {}", num(k.mu), num(k.m0), num(k.m1));
            let _ = writeln!(out, "# ||xi|| = {}; K = {}", num(k.xi_norm), num(k.shared_factor));
            let _ = writeln!(out, "# C1 = {}; C2 = {}", num(k.c1), num(k.c2));
            let _ = writeln!(
                out,
                "# ||f v h|| = {}; ||h - psi|| on J = {}; max ||L_j|| = {}",
                num(k.data_norm),
                num(k.h_misfit),
                num(k.lagrange_norm)
            );
            let _ = writeln!(
                out,
                "# db factor = {}; dpsi factor = {}",
                num(k.blaschke_factor),
                num(k.psi_factor)
            );
            if let Some(lb) = k.xi_lower_bound {
                let _ = writeln!(out, "# a-priori lower bound on ||xi|| = {}", num(lb));
            }
            constants_written = true;
        }
        for r in rows {
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            let st = match &r.failure {
                None => "ok".to_string(),
                Some(msg) => status(msg, "invalid"),
            };
            let _ = writeln!(
                body,
                "{},{},{},{},{},{st}",
                kind.name(),
                num(r.delta),
                opt(r.measured),
                num(r.bound),
                opt(r.ratio)
            );
        }
    }
    let _ = writeln!(out, "# measured = ||delta gtilde|| in H2; bound uses the baseline constants");
    let _ = writeln!(out, "kind,delta,measured,bound,ratio,status");
    out.push_str(&body);
    Ok(out)
}

pub fn moments(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = cfg.unbounded_problem()?;
    let table = MomentTable::build(&problem, cfg.moments.order)?;
    let mut out = String::new();
    header(&mut out, "moments", cfg, &problem);
    let _ = writeln!(out, "# F(k) = <A^k xi0, xi0>; F(0) = ||xi0||^2");
    let _ = writeln!(out, "k,F,kF");
    for (k, f) in table.moments().iter().enumerate() {
        let _ = writeln!(out, "{k},{},{}", num(*f), num(k as f64 * f));
    }
    Ok(out)
}

pub fn carleman(cfg: &RunConfig) -> Result<String, CliError> {
    let c = &cfg.carleman;
    let split = cfg.split()?;
    let source = c.source.as_ref().unwrap_or(&cfg.problem.f);
    let f = cfg.boundary_source(source, "carleman.source", true)?;
    let exact: Vec<Complex64> = c.exact.iter().map(|v| v.0).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# hbep carleman");
    let _ = writeln!(
        out,
        "# theta0 = {}; rho = {}; r_max = {}",
        num(cfg.problem.theta0),
        num(c.rho),
        num(c.r_max)
    );
    if !exact.is_empty() {
        let _ = writeln!(out, "# abs_error against the configured Taylor polynomial");
    }
    let _ = writeln!(out, "# status: ok or error:<category>:<message>");
    let mut cols = vec!["z_re", "z_im", "alpha", "value_re", "value_im"];
    if !exact.is_empty() {
        cols.push("abs_error");
    }
    cols.push("status");
    let _ = writeln!(out, "{}", cols.join(","));
    for z in &c.points {
        let z = z.0;
        let target = exact.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a);
        for &alpha in &c.alphas {
            let mut fields = vec![num(z.re), num(z.im), num(alpha)];
            let st = match carleman_extrapolate(&f, &split, c.rho, alpha, z, c.r_max) {
                Ok(v) => {
                    fields.extend([num(v.re), num(v.im)]);
                    if !exact.is_empty() {
                        fields.push(num((v - target).norm()));
                    }
                    "ok".to_string()
                }
                Err(e) => {
                    fields.extend([String::new(), String::new()]);
                    if !exact.is_empty() {
                        fields.push(String::new());
                    }
                    status(&e, category(&e))
                }
            };
            fields.push(st);
            let _ = writeln!(out, "{}", fields.join(","));
        }
    }
    Ok(out)
}
