//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Intervals are split at caller-supplied breakpoints first, so kinks of the
//! integrand never sit inside a panel. The panel with the largest error
//! estimate is bisected until the summed estimate drops below the tolerance.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    /// Cap on the number of panels.
    pub max_panels: usize,
}

impl QuadConfig {
    pub fn new(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            max_panels: 4000,
        }
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
pub fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hab = h.abs();
    let value = resk * h;
    resabs *= hab;
    resasc *= hab;
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Estimate { value, error: err }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Integrates `f` over `[a, b]`, starting from panels delimited by the
/// breakpoints that fall strictly inside `(a, b)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: QuadConfig,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits must be finite ({a}, {b})"
        )));
    }
    if b <= a {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in edges.windows(2) {
        let est = gk21(&f, w[0], w[1]);
        err += est.error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            est,
        });
    }
    while err > cfg.abs_tol {
        if heap.len() >= cfg.max_panels {
            return Err(Error::AccuracyFailure {
                achieved: err,
                requested: cfg.abs_tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel can no longer be split in floating point.
            return Err(Error::AccuracyFailure {
                achieved: err,
                requested: cfg.abs_tol,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        err += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
    }
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.est.value, e + p.est.error));
    Ok(Estimate { value, error })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut r = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, r);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
            let dr = p1 / dp;
            r -= dr;
            if dr.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -r;
        x[n - 1 - i] = r;
        w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 12] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n {n} degree {deg}");
            }
        }
        let (x, _) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kronrod_rule_is_exact_for_degree_31() {
        // ∫_{-1}^{1} x^30 = 2/31; the Gauss part alone is exact only to degree 19.
        let est = gk21(&|x: f64| x.powi(30), -1.0, 1.0);
        assert!((est.value - 2.0 / 31.0).abs() < 1e-15);
        let weights: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((weights - 2.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((gauss - 2.0).abs() < 1e-15);
        let g18: f64 = (0..5).map(|j| 2.0 * WG[j] * XGK[2 * j + 1].powi(18)).sum();
        assert!((g18 - 2.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrals() {
        let e = integrate(|x| x.exp(), 0.0, 1.0, &[], QuadConfig::new(1e-13)).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let e = integrate(
            |x| x.sin(),
            0.0,
            std::f64::consts::PI,
            &[],
            QuadConfig::new(1e-12),
        )
        .unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_and_without_breakpoints() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.5 * 0.09 + 0.5 * 0.49;
        let with = integrate(f, 0.0, 1.0, &[0.3], QuadConfig::new(1e-13)).unwrap();
        assert!((with.value - exact).abs() < 1e-14);
        let without = integrate(f, 0.0, 1.0, &[], QuadConfig::new(1e-10)).unwrap();
        assert!((without.value - exact).abs() < 1e-10);
    }

    #[test]
    fn empty_and_reversed_range() {
        let e = integrate(|x| x, 1.0, 1.0, &[], QuadConfig::new(1e-10)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn reports_accuracy_failure() {
        let cfg = QuadConfig {
            abs_tol: 1e-14,
            max_panels: 8,
        };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 1e-12, 1.0, &[], cfg);
        assert!(matches!(r, Err(Error::AccuracyFailure { .. })));
    }
}
