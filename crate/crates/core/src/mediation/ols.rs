use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Raw data for the three mediation regressions.
#[derive(Debug, Clone)]
pub struct MediationData {
    pub y: Vec<f64>,
    pub m: Vec<f64>,
    pub x: Vec<f64>,
    /// Control columns, each of length n.
    pub controls: Vec<Vec<f64>>,
}

/// Divisor of the residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    /// `n − k`, with `k` counting the intercept and controls.
    #[default]
    Ols,
    /// `n`.
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediationEstimates {
    /// Direct effect of x on y given m.
    pub tau: f64,
    /// Effect of x on m.
    pub theta1: f64,
    /// Effect of m on y given x.
    pub theta2: f64,
    /// Total effect of x on y.
    pub tau_star: f64,
    pub t1: f64,
    pub t2: f64,
    /// Residual variance of the mediator equation.
    pub sigma11: f64,
    /// Residual variance of the outcome equation.
    pub sigma22: f64,
    pub n: usize,
}

/// Fits `m = θ₁x + e` and `y = τx + θ₂m + u` after removing means and controls.
pub fn ols_mediation(data: &MediationData, conv: VarianceConvention) -> Result<MediationEstimates> {
    let n = data.y.len();
    if data.m.len() != n || data.x.len() != n {
        return Err(Error::Domain(format!(
            "y, m and x must have equal lengths (got {}, {}, {})",
            n,
            data.m.len(),
            data.x.len()
        )));
    }
    let p = data.controls.len();
    if let Some(c) = data.controls.iter().find(|c| c.len() != n) {
        return Err(Error::Domain(format!(
            "control column has length {} instead of {n}",
            c.len()
        )));
    }
    if n <= p + 3 {
        return Err(Error::Domain(format!(
            "need more than {} observations, got {n}",
            p + 3
        )));
    }
    let all_finite = [&data.y, &data.m, &data.x]
        .into_iter()
        .chain(data.controls.iter())
        .all(|v| v.iter().all(|z| z.is_finite()));
    if !all_finite {
        return Err(Error::Domain("data contain non-finite values".into()));
    }

    let annihilate = residual_maker(n, &data.controls)?;
    let y = annihilate(&data.y);
    let m = annihilate(&data.m);
    let x = annihilate(&data.x);

    // Intercept and controls are already spent.
    let base = 1 + p;
    let dof = |k: usize| match conv {
        VarianceConvention::Ols => (n - base - k) as f64,
        VarianceConvention::Ml => n as f64,
    };

    let sxx = x.dot(&x);
    let smm = m.dot(&m);
    let sxm = x.dot(&m);
    let sxy = x.dot(&y);
    let smy = m.dot(&y);
    let sxx_raw: f64 = data.x.iter().map(|v| v * v).sum();
    if !(sxx > 1e-12 * sxx_raw) {
        return Err(Error::SingularDesign(
            "x has no variation after partialing out".into(),
        ));
    }

    let theta1 = sxm / sxx;
    let e = &m - &x * theta1;
    let sigma11 = e.dot(&e) / dof(1);
    let se1 = (sigma11 / sxx).sqrt();

    let det = sxx * smm - sxm * sxm;
    if det <= 1e-12 * sxx * smm {
        return Err(Error::SingularDesign(
            "x and m are collinear after partialing out".into(),
        ));
    }
    let tau = (smm * sxy - sxm * smy) / det;
    let theta2 = (sxx * smy - sxm * sxy) / det;
    let u = &y - &x * tau - &m * theta2;
    let sigma22 = u.dot(&u) / dof(2);
    let se2 = (sigma22 * sxx / det).sqrt();

    let tau_star = sxy / sxx;
    let t1 = theta1 / se1;
    let t2 = theta2 / se2;
    if !(t1.is_finite() && t2.is_finite()) {
        return Err(Error::SingularDesign(
            "perfect fit leaves t-ratios undefined".into(),
        ));
    }
    Ok(MediationEstimates {
        tau,
        theta1,
        theta2,
        tau_star,
        t1,
        t2,
        sigma11,
        sigma22,
        n,
    })
}

/// Projection onto the orthogonal complement of `[1, controls]`.
fn residual_maker(n: usize, controls: &[Vec<f64>]) -> Result<impl Fn(&[f64]) -> DVector<f64>> {
    let k = controls.len() + 1;
    let z = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { controls[j - 1][i] });
    let qr = z.qr();
    let r = qr.r();
    let rmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * rmax) {
        return Err(Error::SingularDesign(
            "controls are collinear with the intercept or each other".into(),
        ));
    }
    let q = qr.q();
    Ok(move |v: &[f64]| {
        let v = DVector::from_column_slice(v);
        let proj = &q * (q.transpose() * &v);
        v - proj
    })
}
