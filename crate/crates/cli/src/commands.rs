use crate::data::read_mediation;
use crate::error::{CliError, CliResult};
use crate::manifest::{sibling, RunManifest};
use crate::{
    EnvelopeArgs, ExactArgs, GvalArgs, NrpArgs, OptimizeArgs, PowerArgs, TableArgs, TestArgs,
};
use medgtest::boundary::{
    exact_similar_boundary, lr_boundary, published_optimal_boundary, read_file, to_json,
};
use medgtest::envelope::{point_optimal_cr, PreparedEnvelope};
use medgtest::mediation::{
    g_test, g_test_3d_with, lr_test, naive_test_3d, ols_mediation, sobel_wald_test,
    VarianceConvention, WaldFrontier, WeightedBoundary3d,
};
use medgtest::optimize::{basic_varying_g, optimal_varying_g};
use medgtest::rp::{linspace_step, monte_carlo_rp, power_surface, rejection_prob, RPGrid};
use medgtest::{
    Boundary, EnvelopeProblem, Frontier, GBoundary, Noncentrality, OptimizeConfig, TestReport,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

fn load_boundary(name: &str, alpha: f64) -> CliResult<Boundary> {
    match name {
        "published" => {
            let b = published_optimal_boundary();
            if alpha != b.alpha() {
                return Err(CliError::Usage(format!(
                    "the published boundary has level {}, not {alpha}",
                    b.alpha()
                )));
            }
            Ok(Boundary::Linear(b))
        }
        "lr" => Ok(Boundary::Linear(lr_boundary(alpha)?)),
        "exact" => Ok(Boundary::Step(exact_similar_boundary(alpha)?)),
        path => Ok(read_file(Path::new(path))?),
    }
}

fn load_frontier(name: &str, alpha: f64) -> CliResult<Box<dyn Frontier>> {
    if name == "wald" {
        return Ok(Box::new(WaldFrontier::new(alpha)?));
    }
    Ok(Box::new(load_boundary(name, alpha)?))
}

fn load_linear(name: &str, alpha: f64) -> CliResult<GBoundary> {
    match load_boundary(name, alpha)? {
        Boundary::Linear(g) => Ok(g),
        Boundary::Step(_) => Err(CliError::Usage(format!(
            "{name} is a step boundary; a piecewise linear one is needed here"
        ))),
    }
}

/// `start:step:stop` or a comma-separated list.
fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("cannot parse grid {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        return Ok(linspace_step(v[0], v[1], v[2])?);
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// `m1,m2;m1,m2;…`.
fn parse_points(text: &str) -> CliResult<Vec<(f64, f64)>> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("cannot parse point {p:?}")))?;
            match v[..] {
                [a, b] => Ok((a, b)),
                _ => Err(CliError::Usage(format!(
                    "point {p:?} needs two coordinates"
                ))),
            }
        })
        .collect()
}

/// Shortest decimal form at ten places, without trailing zeros.
fn short(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn pretty_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report is plain data");
    text.push('\n');
    text
}

fn print_reports(reports: &[TestReport]) {
    println!(
        "{:<12} {:>12} {:>12}  decision",
        "test", "statistic", "critical"
    );
    for r in reports {
        let decision = if r.decision.is_reject() {
            "reject"
        } else {
            "accept"
        };
        println!(
            "{:<12} {:>12.6} {:>12.6}  {decision}",
            r.test, r.statistic, r.critical
        );
    }
}

#[derive(Serialize)]
struct TestOutput<'a> {
    t: Vec<f64>,
    estimates: Option<medgtest::mediation::MediationEstimates>,
    reports: &'a [TestReport],
}

pub fn test(a: &TestArgs) -> CliResult<()> {
    let (t, estimates) = match (&a.data, a.t1, a.t2) {
        (Some(path), None, None) => {
            let (Some(y), Some(m), Some(x)) = (&a.y, &a.m, &a.x) else {
                return Err(CliError::Usage("--data needs --y, --m and --x".into()));
            };
            let conv = match a.variance.as_str() {
                "ols" => VarianceConvention::Ols,
                "ml" => VarianceConvention::Ml,
                v => {
                    return Err(CliError::Usage(format!(
                        "unknown variance convention {v:?}"
                    )))
                }
            };
            let data = read_mediation(path, y, m, x, &a.controls)?;
            let est = ols_mediation(&data, conv)?;
            (vec![est.t1, est.t2], Some(est))
        }
        (None, Some(t1), Some(t2)) => {
            let mut t = vec![t1, t2];
            t.extend(a.t3);
            (t, None)
        }
        _ => {
            return Err(CliError::Usage(
                "give either --t1 and --t2 (and optionally --t3) or --data with --y, --m, --x"
                    .into(),
            ))
        }
    };
    if t.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("t-statistics must be finite".into()));
    }
    let g = load_linear(&a.boundary, a.alpha)?;
    let reports = if let [t1, t2, t3] = t[..] {
        let weighted = WeightedBoundary3d::new(g.clone());
        vec![
            g_test_3d_with(t1, t2, t3, &weighted),
            naive_test_3d(t1, t2, t3, &g),
        ]
    } else {
        vec![
            g_test(t[0], t[1], &g),
            lr_test(t[0], t[1], a.alpha)?,
            sobel_wald_test(t[0], t[1], a.alpha)?,
        ]
    };
    if let Some(est) = &estimates {
        println!(
            "n = {}, theta1 = {:.6} (t = {:.4}), theta2 = {:.6} (t = {:.4})",
            est.n, est.theta1, est.t1, est.theta2, est.t2
        );
    }
    print_reports(&reports);
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("test", a);
        let text = pretty_json(&TestOutput {
            t,
            estimates,
            reports: &reports,
        });
        manifest.emit(out, &text)?;
        manifest.finish(out)?;
    }
    Ok(())
}

pub fn gval(a: &GvalArgs) -> CliResult<()> {
    let b = load_frontier(&a.boundary.boundary, a.boundary.alpha)?;
    for &t in &a.t {
        println!("{}\t{}", short(t), short(b.eval(t)));
    }
    Ok(())
}

/// Half-up rounding to five decimals once binary noise below 1e-10 is removed,
/// so an exact tie such as 0.306575 prints as 0.30658.
fn round5(x: f64) -> f64 {
    ((x * 1e10).round() / 1e5).round() / 1e5
}

/// Rows `0.0 … 2.1`, columns adding `0.00 … 0.09`, five decimals.
fn table_text(b: &dyn Frontier) -> String {
    let mut out = String::from("t");
    for k in 0..10 {
        let _ = write!(out, "\t0.0{k}");
    }
    out.push('\n');
    for r in 0..22 {
        let row = r as f64 / 10.0;
        let _ = write!(out, "{row:.1}");
        for k in 0..10 {
            let _ = write!(out, "\t{:.5}", round5(b.eval(row + 0.01 * k as f64)));
        }
        out.push('\n');
    }
    out
}

pub fn table(a: &TableArgs) -> CliResult<()> {
    let b = load_frontier(&a.boundary.boundary, a.boundary.alpha)?;
    let text = table_text(b.as_ref());
    print!("{text}");
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("table", a);
        manifest.emit(out, &text)?;
        manifest.finish(out)?;
    }
    Ok(())
}

fn print_grid(grid: &RPGrid) {
    print!("{}", grid.to_delimited('\t'));
    println!("# min {:.10}  max {:.10}", grid.min(), grid.max());
}

pub fn nrp(a: &NrpArgs) -> CliResult<()> {
    let b = load_frontier(&a.boundary.boundary, a.boundary.alpha)?;
    let mu0 = parse_grid(&a.grid)?;
    let points: Vec<(f64, f64)> = mu0.iter().map(|&m| (0.0, m)).collect();
    let grid = power_surface(b.as_ref(), &a.boundary.boundary, &points, a.tol)?;
    let mut csv = String::from("mu0,nrp,error");
    if a.mc_draws > 0 {
        csv.push_str(",mc,mc_se");
    }
    csv.push('\n');
    for (i, &m) in mu0.iter().enumerate() {
        let _ = write!(csv, "{m},{:.12e},{:.3e}", grid.values[i], grid.errors[i]);
        if a.mc_draws > 0 {
            let rule = |t: &[f64]| {
                let (x, y) = (t[0].abs(), t[1].abs());
                b.rejects(x.min(y), x.max(y))
            };
            let mc = monte_carlo_rp(rule, &[0.0, m], a.mc_draws, a.seed.wrapping_add(i as u64));
            let _ = write!(csv, ",{:.8e},{:.3e}", mc.estimate, mc.std_error);
        }
        csv.push('\n');
    }
    print!("{}", csv.replace(',', "\t"));
    println!("# min {:.10}  max {:.10}", grid.min(), grid.max());
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("nrp", a).tolerance("quadrature", a.tol);
        if a.mc_draws > 0 {
            manifest = manifest.seed("monte-carlo", a.seed);
        }
        manifest.emit(out, &csv)?;
        manifest.finish(out)?;
    }
    Ok(())
}

fn product_grid(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .collect()
}

pub fn power(a: &PowerArgs) -> CliResult<()> {
    let b = load_frontier(&a.boundary.boundary, a.boundary.alpha)?;
    let points = match (&a.points, &a.mu1, &a.mu2) {
        (Some(p), None, None) => parse_points(p)?,
        (None, Some(m1), Some(m2)) => product_grid(&parse_grid(m1)?, &parse_grid(m2)?),
        _ => {
            return Err(CliError::Usage(
                "give --points or both --mu1 and --mu2".into(),
            ))
        }
    };
    let grid = power_surface(b.as_ref(), &a.boundary.boundary, &points, a.tol)?;
    print_grid(&grid);
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("power", a).tolerance("quadrature", a.tol);
        manifest.emit(out, &grid.to_delimited(','))?;
        manifest.finish(out)?;
    }
    Ok(())
}

pub fn exact(a: &ExactArgs) -> CliResult<()> {
    let b = exact_similar_boundary(a.alpha)?;
    println!("{} steps at level {}", b.steps().len(), short(a.alpha));
    for (i, c) in b.steps().iter().enumerate() {
        println!("c{}\t{c:.15}", i + 1);
    }
    println!("tail\t{:.15}", b.tail());
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("exact", a);
        manifest.emit(out, &to_json(&Boundary::Step(b)))?;
        manifest.finish(out)?;
    }
    Ok(())
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<()> {
    let cfg = OptimizeConfig {
        j_max: a.j_max,
        epsilon: a.epsilon,
        alpha: a.alpha,
        tol: a.tol,
        max_iterations: a.max_iterations,
        ..OptimizeConfig::default()
    };
    let res = match a.mode.as_str() {
        "basic" => {
            if a.start.is_some() {
                return Err(CliError::Usage("--start applies to --mode optimal".into()));
            }
            basic_varying_g(&cfg)?
        }
        "optimal" => {
            let start = a
                .start
                .as_deref()
                .map(|s| load_linear(s, a.alpha))
                .transpose()?;
            optimal_varying_g(&cfg, start.as_ref())?
        }
        m => return Err(CliError::Usage(format!("unknown mode {m:?}"))),
    };
    println!(
        "J = {}, epsilon = {:.3e}, max NRP = {:.10}, Q = {:.3e}, converged = {}",
        res.j, res.achieved_epsilon, res.max_nrp, res.q, res.converged
    );
    if let Some(p) = res.mean_power {
        println!(
            "mean power over {} alternatives = {p:.6}",
            cfg.alt_grid.len()
        );
    }
    for (t, g) in res.boundary.knots() {
        println!("{t:.6}\t{g:.6}");
    }
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("optimize", a).tolerance("quadrature", a.tol);
        manifest.emit(out, &to_json(&Boundary::Linear(res.boundary.clone())))?;
        let log = sibling(out, ".result.json");
        manifest.emit(&log, &pretty_json(&res))?;
        manifest.finish(out)?;
    }
    Ok(())
}

pub fn envelope(a: &EnvelopeArgs) -> CliResult<()> {
    let points = parse_points(&a.points)?;
    let problem = EnvelopeProblem {
        t_max: a.t_max,
        cell: a.cell,
        alpha: a.alpha,
        epsilon: a.epsilon,
        nonsimilar: a.nonsimilar,
        ..EnvelopeProblem::default()
    };
    let tol = problem.tol;
    let prepared = PreparedEnvelope::new(problem)?;
    let reference = a
        .boundary
        .as_deref()
        .map(|name| load_frontier(name, a.alpha))
        .transpose()?;
    let mut csv = String::from("mu1,mu2,relaxed,rounded,achieved_epsilon,lp_iterations");
    if reference.is_some() {
        csv.push_str(",boundary_power,gap");
    }
    csv.push('\n');
    for &(m1, m2) in &points {
        let p = point_optimal_cr(&prepared, (m1, m2))?;
        let _ = write!(
            csv,
            "{m1},{m2},{:.10},{:.10},{:.3e},{}",
            p.relaxed_power, p.power, p.achieved_epsilon, p.lp_iterations
        );
        if let Some(b) = &reference {
            let pg = rejection_prob(b.as_ref(), &Noncentrality::pair(m1, m2)?, 1e-10)?.value;
            let _ = write!(csv, ",{pg:.10},{:.10}", p.relaxed_power - pg);
        }
        csv.push('\n');
    }
    print!("{}", csv.replace(',', "\t"));
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("envelope", a).tolerance("quadrature", tol);
        manifest.emit(out, &csv)?;
        manifest.finish(out)?;
    }
    Ok(())
}
