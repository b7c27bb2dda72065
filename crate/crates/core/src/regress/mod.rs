//! Least squares, two-stage least squares and heteroskedasticity /
//! autocorrelation robust covariances.
//!
//! All solves go through a pivoted Householder QR of the regressor columns;
//! the normal equations are never formed.

mod qr;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tscore::{DesignColumn, DesignMatrix};

pub(crate) use qr::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovKind {
    Spherical,
    Hc0,
    NeweyWest { bandwidth: usize },
}

/// Diagnostics kept for each first-stage regression of a 2SLS fit.
#[derive(Debug, Clone)]
pub struct FirstStage {
    pub endogenous: String,
    pub fit: RegressionFit,
    /// F statistic for the joint exclusion of the excluded instruments.
    pub f_statistic: f64,
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    coefficients: Vec<f64>,
    residuals: Vec<f64>,
    nobs: usize,
    df_resid: usize,
    xtx_inverse: DMatrix<f64>,
    cov_kind: CovKind,
    cov: DMatrix<f64>,
    // regressors entering the sandwich; fitted endogenous columns for 2SLS
    design: Arc<DesignMatrix>,
    first_stage: Vec<FirstStage>,
}

impl RegressionFit {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn nobs(&self) -> usize {
        self.nobs
    }

    pub fn df_resid(&self) -> usize {
        self.df_resid
    }

    pub fn xtx_inverse(&self) -> &DMatrix<f64> {
        &self.xtx_inverse
    }

    pub fn cov_kind(&self) -> CovKind {
        self.cov_kind
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn first_stage(&self) -> &[FirstStage] {
        &self.first_stage
    }

    pub fn labels(&self) -> Vec<&str> {
        self.design.labels()
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.design
            .column_index(label)
            .ok_or_else(|| Error::Parameter(format!("no regressor labelled '{label}'")))
    }

    pub fn coefficient(&self, label: &str) -> Result<f64> {
        Ok(self.coefficients[self.index_of(label)?])
    }

    /// Standard error from the currently attached covariance.
    pub fn std_error(&self, label: &str) -> Result<f64> {
        let i = self.index_of(label)?;
        Ok(self.cov[(i, i)].max(0.0).sqrt())
    }

    pub fn ssr(&self) -> f64 {
        dot(&self.residuals, &self.residuals)
    }

    /// Residual variance with degrees-of-freedom correction.
    pub fn sigma2(&self) -> f64 {
        self.ssr() / self.df_resid.max(1) as f64
    }

    /// Returns the fit with its covariance replaced by the requested kind.
    pub fn with_cov(mut self, kind: CovKind) -> Result<Self> {
        self.cov = match kind {
            CovKind::Spherical => spherical(&self),
            CovKind::Hc0 => hc0(&self),
            CovKind::NeweyWest { bandwidth } => newey_west(&self, bandwidth)?,
        };
        self.cov_kind = kind;
        Ok(self)
    }
}

fn column_refs(design: &DesignMatrix) -> Vec<&[f64]> {
    design.columns().iter().map(|c| c.values.as_slice()).collect()
}

fn residuals_of(design: &DesignMatrix, coef: &[f64]) -> Vec<f64> {
    let mut e = design.target().to_vec();
    for (c, b) in design.columns().iter().zip(coef) {
        for (ei, xi) in e.iter_mut().zip(&c.values) {
            *ei -= b * xi;
        }
    }
    e
}

/// Ordinary least squares with a spherical covariance attached.
pub fn ols(design: impl Into<Arc<DesignMatrix>>) -> Result<RegressionFit> {
    let design = design.into();
    let cols = column_refs(&design);
    let ls = qr::least_squares(&cols, design.target()).map_err(|dep| Error::Singular {
        columns: dep.iter().map(|&i| design.columns()[i].label.clone()).collect(),
    })?;
    let residuals = residuals_of(&design, &ls.coef);
    let nobs = design.n_rows();
    let mut fit = RegressionFit {
        coefficients: ls.coef,
        residuals,
        nobs,
        df_resid: nobs - design.n_columns(),
        xtx_inverse: ls.xtx_inv,
        cov_kind: CovKind::Spherical,
        cov: DMatrix::zeros(0, 0),
        design,
        first_stage: Vec::new(),
    };
    fit.cov = spherical(&fit);
    Ok(fit)
}

fn spherical(fit: &RegressionFit) -> DMatrix<f64> {
    &fit.xtx_inverse * fit.sigma2()
}

fn sandwich(fit: &RegressionFit, meat: &DMatrix<f64>) -> DMatrix<f64> {
    let bread = &fit.xtx_inverse;
    let mut cov = bread * meat * bread;
    symmetrize(&mut cov);
    cov
}

fn symmetrize(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// White (HC0) heteroskedasticity-robust covariance.
pub fn hc0(fit: &RegressionFit) -> DMatrix<f64> {
    let meat = hac_meat(&column_refs(&fit.design), &fit.residuals, 0);
    sandwich(fit, &meat)
}

/// Newey-West covariance with Bartlett weights `1 - k/(bandwidth+1)`.
/// `bandwidth = 0` is exactly the HC0 covariance.
pub fn newey_west(fit: &RegressionFit, bandwidth: usize) -> Result<DMatrix<f64>> {
    if bandwidth >= fit.nobs {
        return Err(Error::Parameter(format!(
            "Newey-West bandwidth {bandwidth} must be below the sample size {}",
            fit.nobs
        )));
    }
    let meat = hac_meat(&column_refs(&fit.design), &fit.residuals, bandwidth);
    Ok(sandwich(fit, &meat))
}

/// `sum_{t,s} w(|t-s|) g_t g_s'` with scores `g_t = x_t e_t`, computed by
/// smoothing one score column at a time with the Bartlett kernel.
fn hac_meat(columns: &[&[f64]], resid: &[f64], bandwidth: usize) -> DMatrix<f64> {
    let k = columns.len();
    let n = resid.len();
    let scores: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().zip(resid).map(|(x, e)| x * e).collect())
        .collect();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    let mut smoothed = vec![0.0; n];
    for b in 0..k {
        let g = &scores[b];
        let h: &[f64] = if bandwidth == 0 {
            g
        } else {
            smoothed.copy_from_slice(g);
            for lag in 1..=bandwidth {
                let w = 1.0 - lag as f64 / (bandwidth + 1) as f64;
                for t in lag..n {
                    smoothed[t] += w * g[t - lag];
                }
                for t in 0..n - lag {
                    smoothed[t] += w * g[t + lag];
                }
            }
            &smoothed
        };
        for a in 0..=b {
            let v = dot(&scores[a], h);
            meat[(a, b)] = v;
            meat[(b, a)] = v;
        }
    }
    meat
}

/// Two-stage least squares. Columns named in `instruments` but not in
/// `endogenous` are excluded instruments; every other column is exogenous and
/// enters both stages.
pub fn tsls(
    design: &DesignMatrix,
    endogenous: &[&str],
    instruments: &[&str],
) -> Result<RegressionFit> {
    for label in endogenous.iter().chain(instruments) {
        if design.column_index(label).is_none() {
            return Err(Error::Parameter(format!("no design column labelled '{label}'")));
        }
    }
    if endogenous.is_empty() {
        return Err(Error::Parameter("2SLS needs at least one endogenous column".into()));
    }
    if instruments.len() < endogenous.len() {
        return Err(Error::Parameter(format!(
            "{} instruments for {} endogenous columns",
            instruments.len(),
            endogenous.len()
        )));
    }
    let is_endog = |l: &str| endogenous.contains(&l);
    let is_instr = |l: &str| instruments.contains(&l);
    let exog: Vec<&DesignColumn> = design
        .columns()
        .iter()
        .filter(|c| !is_endog(&c.label) && !is_instr(&c.label))
        .collect();
    let mut stage_one_cols: Vec<DesignColumn> = exog.iter().map(|c| (*c).clone()).collect();
    for label in instruments {
        if !stage_one_cols.iter().any(|c| c.label == *label) {
            stage_one_cols.push(DesignColumn {
                label: label.to_string(),
                values: design.column(label).unwrap().to_vec(),
            });
        }
    }
    let excluded = instruments.len();

    let mut first_stage = Vec::with_capacity(endogenous.len());
    let mut fitted_cols = Vec::with_capacity(endogenous.len());
    for label in endogenous {
        let target = design.column(label).unwrap().to_vec();
        let stage = DesignMatrix::from_parts(
            label.to_string(),
            target.clone(),
            stage_one_cols.clone(),
            design.rows_dropped_head(),
            design.rows_dropped_tail(),
            design.source_len(),
        )?;
        let fit = ols(stage).map_err(|e| match e {
            Error::Singular { columns } => Error::WeakInstrument(format!(
                "first stage for '{label}' is rank deficient (columns {columns:?})"
            )),
            other => other,
        })?;
        let restricted_ssr = if exog.is_empty() {
            dot(&target, &target)
        } else {
            let restricted = DesignMatrix::from_parts(
                label.to_string(),
                target.clone(),
                exog.iter().map(|c| (*c).clone()).collect(),
                design.rows_dropped_head(),
                design.rows_dropped_tail(),
                design.source_len(),
            )?;
            ols(restricted)?.ssr()
        };
        let unrestricted = fit.ssr();
        let f_statistic = ((restricted_ssr - unrestricted) / excluded as f64)
            / (unrestricted / fit.df_resid().max(1) as f64);
        let fitted: Vec<f64> = target
            .iter()
            .zip(fit.residuals())
            .map(|(t, e)| t - e)
            .collect();
        fitted_cols.push((label.to_string(), fitted));
        first_stage.push(FirstStage {
            endogenous: label.to_string(),
            fit,
            f_statistic,
        });
    }

    // second stage keeps the original column order, minus excluded instruments
    let second_cols: Vec<DesignColumn> = design
        .columns()
        .iter()
        .filter(|c| is_endog(&c.label) || !is_instr(&c.label))
        .map(|c| match fitted_cols.iter().find(|(l, _)| *l == c.label) {
            Some((_, fitted)) => DesignColumn {
                label: c.label.clone(),
                values: fitted.clone(),
            },
            None => c.clone(),
        })
        .collect();
    let structural_cols: Vec<DesignColumn> = design
        .columns()
        .iter()
        .filter(|c| is_endog(&c.label) || !is_instr(&c.label))
        .cloned()
        .collect();
    let second = design.with_columns(second_cols)?;
    let mut fit = ols(second)?;
    let structural = design.with_columns(structural_cols)?;
    fit.residuals = residuals_of(&structural, &fit.coefficients);
    fit.cov = spherical(&fit);
    fit.first_stage = first_stage;
    Ok(fit)
}
