//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Run with `cargo test -p medgtest --test acceptance`.

use medgtest::boundary::{
    exact_similar_boundary, lr_boundary, published_optimal_boundary, similarity_residual, Boundary,
    Frontier,
};
use medgtest::dist::{std_normal_sf, Noncentrality};
use medgtest::envelope::{point_optimal_cr, EnvelopeProblem, PreparedEnvelope};
use medgtest::mediation::{
    g_test, g_test_3d, lr_test, sobel_statistic, sobel_wald_test, WaldFrontier, WeightedBoundary3d,
};
use medgtest::optimize::{basic_varying_g, default_null_grid, q_value, OptimizeConfig};
use medgtest::rp::{
    linspace_step, monte_carlo_rp, nrp_curve, rejection_prob, rejection_prob_3d, NaiveBoundary3d,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const ALPHA: f64 = 0.05;
const Z: f64 = 1.959_963_984_540_054;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.2?} (limit {:?})", o.detail, elapsed, limit);
    o.pass &= elapsed <= limit;
    o
}

/// Published boundary table: every printed entry matches to its printed precision.
fn boundary_table() -> Outcome {
    let g = published_optimal_boundary();
    let text = include_str!("data/published_table.tsv");
    let mut n = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split('\t');
        let row: f64 = fields.next().unwrap().parse().unwrap();
        for (k, s) in fields.enumerate() {
            let t = row + 0.01 * k as f64;
            let printed: f64 = s.parse().unwrap();
            let decimals = s.split('.').nth(1).map_or(0, str::len) as i32;
            let half_unit = 0.5 * 10f64.powi(-decimals);
            let diff = (g.eval(t) - printed).abs();
            worst = worst.max(diff / half_unit);
            if diff > half_unit + 1e-12 {
                failures.push(format!("t={t:.2}: g={:.6} printed {s}", g.eval(t)));
            }
            n += 1;
        }
    }
    let pass = n == 220 && failures.is_empty();
    outcome(
        pass,
        format!(
            "{n} entries, worst |diff| = {worst:.3} half-units{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(", mismatches {failures:?}")
            }
        ),
    )
}

/// Published boundary is near similar on the null axis.
fn near_similarity() -> Outcome {
    let g = published_optimal_boundary();
    let grid = linspace_step(0.0, 0.1, 7.5).unwrap();
    let nrp = nrp_curve(&g, "published", &grid, 1e-8).unwrap();
    let (lo, hi) = (ALPHA - 1.5e-5, ALPHA + 1e-8);
    let pass = grid.len() == 76 && nrp.min() >= lo && nrp.max() <= hi;
    outcome(
        pass,
        format!(
            "{} points, NRP in [{:.9}, {:.9}], need [{lo}, {hi}]",
            grid.len(),
            nrp.min(),
            nrp.max()
        ),
    )
}

/// Exact similar step boundaries.
fn exact_similar() -> Outcome {
    let grid = linspace_step(0.0, 0.25, 8.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.05, 0.10, 0.25] {
        let b = exact_similar_boundary(alpha).unwrap();
        let nrp = nrp_curve(&b, "exact", &grid, 1e-9).unwrap();
        let dev = nrp
            .values
            .iter()
            .map(|v| (v - alpha).abs())
            .fold(0.0, f64::max);
        let resid = (0..=6000)
            .map(|i| similarity_residual(&b, i as f64 * 0.001).abs())
            .fold(0.0, f64::max);
        pass &= dev <= 1e-7 && resid <= 1e-10;
        parts.push(format!(
            "α={alpha}: max|NRP−α|={dev:.2e}, max|F|={resid:.2e}"
        ));
    }
    outcome(pass, parts.join("; "))
}

/// LR size at the origin and the Wald statistic's asymptotic tail.
fn classic_anchors() -> Outcome {
    let lr = lr_boundary(ALPHA).unwrap();
    let origin = Noncentrality::pair(0.0, 0.0).unwrap();
    let q = rejection_prob(&lr, &origin, 1e-11).unwrap().value;
    let analytic = (2.0 * std_normal_sf(Z)).powi(2);
    let lr_ok = (q - analytic).abs() <= 1e-9 && (analytic - 0.0025).abs() <= 1e-9;

    let c = Z * Z;
    let rule = |t: &[f64]| {
        let (a, b) = (t[0] * t[0], t[1] * t[1]);
        a * b > c * (a + b)
    };
    let mc = monte_carlo_rp(rule, &[0.0, 0.0], 10_000_000, 4);
    let reference = 2.0 * std_normal_sf((4.0 * c).sqrt());
    let rel = (mc.estimate - reference).abs() / reference;
    let wald_ok = rel <= 0.10;
    outcome(
        lr_ok && wald_ok,
        format!(
            "LR NRP(0,0)={q:.12} vs {analytic:.12}; Wald MC {:.3e} (se {:.1e}) vs P[χ²₁>{:.3}]={reference:.3e}, rel {rel:.3}",
            mc.estimate,
            mc.std_error,
            4.0 * c
        ),
    )
}

/// Wald ≤ LR ≤ g on the diagonal, and the g-test's gain near the origin.
fn power_ordering() -> Outcome {
    let g = published_optimal_boundary();
    let lr = lr_boundary(ALPHA).unwrap();
    let wald = WaldFrontier::new(ALPHA).unwrap();
    let mut pass = true;
    let mut gain = 0.0;
    let mut parts = Vec::new();
    for m in [0.1, 0.5, 1.0, 2.0, 3.0] {
        let mu = Noncentrality::pair(m, m).unwrap();
        let pw = rejection_prob(&wald, &mu, 1e-9).unwrap().value;
        let pl = rejection_prob(&lr, &mu, 1e-9).unwrap().value;
        let pg = rejection_prob(&g, &mu, 1e-9).unwrap().value;
        pass &= pw <= pl + 1e-9 && pl <= pg + 1e-9;
        if m == 0.1 {
            gain = pg - pl;
        }
        parts.push(format!("μ={m}: {pw:.5}/{pl:.5}/{pg:.5}"));
    }
    pass &= gain >= 0.045;
    outcome(
        pass,
        format!("W/LR/g {}; gain at 0.1 = {gain:.5}", parts.join(", ")),
    )
}

/// Desk-scale power envelope against the published boundary.
fn envelope() -> Outcome {
    let g = published_optimal_boundary();
    let points = [
        (0.2, 1.0),
        (0.6, 0.6),
        (1.0, 1.0),
        (1.0, 2.0),
        (1.4, 1.4),
        (1.6, 3.0),
        (2.0, 2.0),
        (2.0, 4.0),
        (3.0, 3.0),
        (4.0, 4.0),
    ];
    let similar = PreparedEnvelope::new(EnvelopeProblem::default()).unwrap();
    let mut pass = true;
    let mut worst_gap = 0.0f64;
    let mut worst_below = f64::INFINITY;
    for &(a, b) in &points {
        let pg = rejection_prob(&g, &Noncentrality::pair(a, b).unwrap(), 1e-10)
            .unwrap()
            .value;
        let pbar = point_optimal_cr(&similar, (a, b)).unwrap().relaxed_power;
        let gap = pbar - pg;
        pass &= gap >= -1e-6 && gap <= 0.02;
        worst_gap = worst_gap.max(gap);
        worst_below = worst_below.min(gap);
    }

    // Nonsimilar comparison on the diagonal point whose similar envelope is nearest 0.4.
    let nonsimilar = PreparedEnvelope::new(EnvelopeProblem {
        nonsimilar: true,
        ..EnvelopeProblem::default()
    })
    .unwrap();
    let mut best: Option<(f64, f64)> = None;
    for m in [2.1, 2.2, 2.3, 2.4] {
        let p = point_optimal_cr(&similar, (m, m)).unwrap().relaxed_power;
        if best.is_none_or(|(_, q)| (p - 0.4).abs() < (q - 0.4).abs()) {
            best = Some((m, p));
        }
    }
    let (m, ps) = best.unwrap();
    let pn = point_optimal_cr(&nonsimilar, (m, m)).unwrap().relaxed_power;
    let extra = pn - ps;
    pass &= extra >= -1e-6 && extra <= 0.025;
    outcome(
        pass,
        format!(
            "π̄−π_g in [{worst_below:.2e}, {worst_gap:.5}] over {} points; nonsimilar−similar at μ=({m},{m}) (π̄={ps:.4}) = {extra:.5}",
            points.len()
        ),
    )
}

/// Three-dimensional weighted boundary and the naive two-dimensional rule.
fn three_dim() -> Outcome {
    let weighted = WeightedBoundary3d::default();
    let naive = NaiveBoundary3d(published_optimal_boundary());
    let grid = linspace_step(0.0, 0.1, 6.0).unwrap();
    let (mut lo, mut hi, mut naive_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &m in &grid {
        let mu = Noncentrality::from_signed(&[0.0, 0.0, m]).unwrap();
        let v = rejection_prob_3d(&weighted, &mu, 1e-8).unwrap().value;
        lo = lo.min(v);
        hi = hi.max(v);
        naive_max = naive_max.max(rejection_prob_3d(&naive, &mu, 1e-8).unwrap().value);
    }
    let pass = lo >= 0.0487 && hi <= ALPHA + 1e-6 && (naive_max - 0.072).abs() <= 0.002;
    outcome(
        pass,
        format!("weighted NRP in [{lo:.6}, {hi:.6}]; naive max {naive_max:.5}"),
    )
}

/// Quadrature against Monte Carlo on random boundaries and alternatives.
fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let boundaries: Vec<(&str, Box<dyn Frontier>)> = vec![
        ("published", Box::new(published_optimal_boundary())),
        ("lr", Box::new(lr_boundary(ALPHA).unwrap())),
        (
            "step",
            Box::new(Boundary::Step(exact_similar_boundary(ALPHA).unwrap())),
        ),
        ("wald", Box::new(WaldFrontier::new(ALPHA).unwrap())),
    ];
    let mut pass = true;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (name, b) = &boundaries[rng.random_range(0..boundaries.len())];
        let mu = [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
        let q = rejection_prob(
            b.as_ref(),
            &Noncentrality::pair(mu[0], mu[1]).unwrap(),
            1e-9,
        )
        .unwrap()
        .value;
        let rule = |t: &[f64]| {
            let (a, c) = (t[0].abs(), t[1].abs());
            let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
            lo > b.eval(hi)
        };
        let mc = monte_carlo_rp(rule, &mu, 1_000_000, 1000 + i);
        let se = mc.std_error.max(1e-6);
        let k = (mc.estimate - q).abs() / se;
        if k > worst {
            worst = k;
        }
        if k > 3.5 {
            pass = false;
            eprintln!(
                "  {name} μ=({:.3},{:.3}): quad {q:.6} mc {:.6} ({k:.2} se)",
                mu[0], mu[1], mc.estimate
            );
        }
    }
    outcome(
        pass,
        format!("20 pairs, worst {worst:.2} standard errors (limit 3.5)"),
    )
}

/// Decisions on the published application t-statistics.
fn fixtures() -> Outcome {
    let g = published_optimal_boundary();
    let app_g = g_test(2.052, -1.941, &g).decision.is_reject();
    let app_lr = lr_test(2.052, -1.941, ALPHA).unwrap().decision.is_reject();
    let i1_g = g_test(-1.902, -1.838, &g).decision.is_reject();
    let i1_sobel = sobel_wald_test(-1.902, -1.838, ALPHA)
        .unwrap()
        .decision
        .is_reject();
    let i2_g = g_test(2.709, 7.120, &g).decision.is_reject();
    let i2_sobel = sobel_wald_test(2.709, 7.120, ALPHA)
        .unwrap()
        .decision
        .is_reject();
    let i3 = g_test_3d(-1.902, -3.582, 7.120).decision.is_reject();
    let s1 = sobel_statistic(-1.902, -1.838).unwrap();
    let s2 = sobel_statistic(2.709, 7.120).unwrap();
    let pass = app_g && !app_lr && i1_g && !i1_sobel && i2_g && i2_sobel && !i3;
    outcome(
        pass,
        format!(
            "application g={app_g} LR={app_lr}; i1 g={i1_g} Sobel={i1_sobel} ({s1:.3}); i2 g={i2_g} Sobel={i2_sobel} ({s2:.3}); i3 3D={i3}"
        ),
    )
}

/// Basic varying-g optimization at J = 16, verified by an independent NRP sweep.
fn basic_varying() -> Outcome {
    let cfg = OptimizeConfig::default();
    let res = basic_varying_g(&cfg).unwrap();
    let report = q_value(&res.boundary, "basic", &default_null_grid(), 1e-9).unwrap();
    let min = report.nrp.min();
    let pass = cfg.j_max == 16 && min >= 0.0499 && report.max_nrp <= ALPHA + 1e-8;
    outcome(
        pass,
        format!(
            "J reached {}, optimizer ε={:.3e}; verified NRP in [{min:.9}, {:.11}]",
            res.j, res.achieved_epsilon, report.max_nrp
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        (
            "boundary table reproduction",
            Duration::from_secs(1),
            boundary_table,
        ),
        (
            "near-similarity of published boundary",
            Duration::from_secs(30),
            near_similarity,
        ),
        (
            "exact similar step boundaries",
            Duration::from_secs(300),
            exact_similar,
        ),
        (
            "classic-test anchors",
            Duration::from_secs(300),
            classic_anchors,
        ),
        (
            "power ordering and gain",
            Duration::from_secs(60),
            power_ordering,
        ),
        ("power envelope", Duration::from_secs(1800), envelope),
        ("3D weighted boundary", Duration::from_secs(600), three_dim),
        (
            "quadrature vs Monte Carlo",
            Duration::from_secs(300),
            oracle_agreement,
        ),
        ("empirical fixtures", Duration::from_secs(1), fixtures),
        ("basic varying-g", Duration::from_secs(600), basic_varying),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let o = timed(limit, f);
        println!(
            "criterion {} ({name}): {} {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
