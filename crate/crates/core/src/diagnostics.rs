//! Serial-correlation diagnostics: sample autocorrelations with Bartlett
//! bands, Ljung-Box / Box-Pierce portmanteau tests and a panel test for
//! autocorrelation at given lag orders.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::tscore::{Panel, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    /// rho_1 .. rho_m (rho_0 = 1 is not stored).
    pub acf: Vec<f64>,
    pub bartlett_se: Vec<f64>,
    pub sample_size: usize,
}

impl Correlogram {
    /// `(lo, hi)` band around zero at lag `k` (1-based) for the given normal
    /// critical value.
    pub fn band(&self, k: usize, critical: f64) -> (f64, f64) {
        let se = self.bartlett_se[k - 1];
        (-critical * se, critical * se)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    LjungBox,
    BoxPierce,
    PanelJoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagDetail {
    pub lag: usize,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub lags_tested: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_lag: Option<Vec<LagDetail>>,
}

/// Upper tail probability of a chi-squared variable with `dof` degrees of
/// freedom.
pub fn chi_squared_sf(x: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Domain("chi-squared needs at least 1 degree of freedom".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-squared argument {x} is negative")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(dist.sf(x).clamp(0.0, 1.0))
}

fn demeaned_checked(x: &[f64], what: &str) -> Result<(Vec<f64>, f64)> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss: f64 = d.iter().map(|v| v * v).sum();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if ss <= 1e-24 * n * peak * peak || ss == 0.0 {
        return Err(Error::DegenerateSeries(format!("'{what}' has zero sample variance")));
    }
    Ok((d, ss))
}

fn autocorrelations(x: &[f64], m: usize, what: &str) -> Result<Vec<f64>> {
    if m == 0 || m >= x.len() {
        return Err(Error::Parameter(format!(
            "lag count {m} must be in 1..{} for '{what}'",
            x.len()
        )));
    }
    let (d, ss) = demeaned_checked(x, what)?;
    Ok((1..=m)
        .map(|k| {
            let num: f64 = d[k..].iter().zip(&d[..d.len() - k]).map(|(a, b)| a * b).sum();
            num / ss
        })
        .collect())
}

/// Sample autocorrelations up to lag `m` with Bartlett MA(k-1) standard errors.
pub fn acf(x: &Series, m: usize) -> Result<Correlogram> {
    let rho = autocorrelations(x.values(), m, x.name())?;
    let t = x.len() as f64;
    let mut cum = 0.0;
    let mut se = Vec::with_capacity(m);
    for r in &rho {
        se.push(((1.0 + 2.0 * cum) / t).sqrt());
        cum += r * r;
    }
    Ok(Correlogram {
        acf: rho,
        bartlett_se: se,
        sample_size: x.len(),
    })
}

fn portmanteau(x: &Series, m: usize, kind: TestKind) -> Result<TestResult> {
    let rho = autocorrelations(x.values(), m, x.name())?;
    let t = x.len() as f64;
    let mut q = 0.0;
    let mut per_lag = Vec::with_capacity(m);
    for (i, r) in rho.iter().enumerate() {
        let k = i + 1;
        q += match kind {
            TestKind::LjungBox => t * (t + 2.0) * r * r / (t - k as f64),
            _ => t * r * r,
        };
        per_lag.push(LagDetail {
            lag: k,
            statistic: q,
            p_value: chi_squared_sf(q, k)?,
        });
    }
    Ok(TestResult {
        kind,
        statistic: q,
        dof: m,
        p_value: chi_squared_sf(q, m)?,
        lags_tested: m,
        per_lag: Some(per_lag),
    })
}

/// Ljung-Box `Q = T(T+2) sum rho_k^2 / (T-k)` against chi-squared(m).
pub fn ljung_box(x: &Series, m: usize) -> Result<TestResult> {
    portmanteau(x, m, TestKind::LjungBox)
}

/// Uncorrected Box-Pierce `Q' = T sum rho_k^2`.
pub fn box_pierce(x: &Series, m: usize) -> Result<TestResult> {
    portmanteau(x, m, TestKind::BoxPierce)
}

/// Removes entity and period means by alternating projections (exact after
/// one sweep for balanced panels).
fn within_transform(panel: &Panel, variable: &str) -> Result<Vec<Vec<f64>>> {
    let series = panel.variable(variable)?;
    let mut data: Vec<Vec<f64>> = series.iter().map(|s| s.values().to_vec()).collect();
    let mut period_ids: Vec<String> = Vec::new();
    let mut slots: Vec<Vec<usize>> = Vec::with_capacity(data.len());
    {
        let mut lookup = std::collections::BTreeMap::new();
        for e in panel.entities() {
            let ids = e
                .periods
                .iter()
                .map(|p| {
                    *lookup.entry(p.clone()).or_insert_with(|| {
                        period_ids.push(p.clone());
                        period_ids.len() - 1
                    })
                })
                .collect();
            slots.push(ids);
        }
    }
    let scale = data
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mut change = 0.0f64;
        for row in data.iter_mut() {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            row.iter_mut().for_each(|v| *v -= mean);
            change = change.max(mean.abs());
        }
        let mut sums = vec![0.0; period_ids.len()];
        let mut counts = vec![0usize; period_ids.len()];
        for (row, ids) in data.iter().zip(&slots) {
            for (v, &p) in row.iter().zip(ids) {
                sums[p] += v;
                counts[p] += 1;
            }
        }
        for (row, ids) in data.iter_mut().zip(&slots) {
            for (v, &p) in row.iter_mut().zip(ids) {
                let mean = sums[p] / counts[p] as f64;
                *v -= mean;
                change = change.max(mean.abs());
            }
        }
        if change <= 1e-13 * scale {
            break;
        }
    }
    Ok(data)
}

/// Panel test of no autocorrelation at lags `1..=m`.
///
/// The variable is purged of entity and period effects. For each lag `k`, the
/// entity-level autocovariance sums `s_ik` are centred on their null
/// expectation under entity demeaning and combined into the self-normalised
/// statistic `z_k = sum_i c_ik / sqrt(sum_i c_ik^2)`, asymptotically N(0,1) as
/// the number of entities grows. The joint statistic is `sum_k z_k^2` against
/// chi-squared(m).
pub fn panel_serial_test(panel: &Panel, variable: &str, m: usize) -> Result<TestResult> {
    if m == 0 {
        return Err(Error::Parameter("panel test needs at least one lag".into()));
    }
    if panel.n_entities() < 2 {
        return Err(Error::InsufficientSample("panel test needs at least 2 entities".into()));
    }
    for e in panel.entities() {
        if e.periods.len() < m + 2 {
            return Err(Error::InsufficientSample(format!(
                "entity '{}' has {} periods, the panel test at {m} lags needs {}",
                e.entity,
                e.periods.len(),
                m + 2
            )));
        }
    }
    let data = within_transform(panel, variable)?;
    let total_ss: f64 = data.iter().flatten().map(|v| v * v).sum();
    if total_ss == 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "'{variable}' has no variation after removing entity and period effects"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut joint = 0.0;
    let mut per_lag = Vec::with_capacity(m);
    for k in 1..=m {
        let mut num = 0.0;
        let mut den = 0.0;
        for e in &data {
            let t = e.len() as f64;
            let s: f64 = e[k..].iter().zip(&e[..e.len() - k]).map(|(a, b)| a * b).sum();
            let ss: f64 = e.iter().map(|v| v * v).sum();
            let bias = -(t - k as f64) / (t * (t - 1.0)) * ss;
            let c = s - bias;
            num += c;
            den += c * c;
        }
        let z = if den > 0.0 { num / den.sqrt() } else { 0.0 };
        joint += z * z;
        per_lag.push(LagDetail {
            lag: k,
            statistic: z,
            p_value: (2.0 * normal.sf(z.abs())).min(1.0),
        });
    }
    Ok(TestResult {
        kind: TestKind::PanelJoint,
        statistic: joint,
        dof: m,
        p_value: chi_squared_sf(joint, m)?,
        lags_tested: m,
        per_lag: Some(per_lag),
    })
}
