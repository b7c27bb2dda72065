//! Reduced-form VARs with recursive (Cholesky) identification, and VAR-X
//! models with an exogenous distributed-lag regressor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::irf::{Estimator, IrfResult};
use crate::regress::ols;
use crate::tscore::{build_design, shift_label, Regressor, Series, INTERCEPT_LABEL};

#[derive(Debug, Clone)]
pub struct VarFit {
    pub variables: Vec<String>,
    pub lags: usize,
    /// `B_1 .. B_p`, each `k x k`; row = equation, column = regressor variable.
    pub coefficients: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    /// Residual covariance with degrees-of-freedom correction.
    pub sigma: DMatrix<f64>,
    pub nobs: usize,
    pub spectral_radius: f64,
    /// `(X'X)^{-1}` of the regressors shared by every equation, ordered as
    /// intercept then lag-major blocks of variables.
    pub xtx_inverse: DMatrix<f64>,
}

fn check_names(data: &[Series]) -> Result<Vec<String>> {
    let names: Vec<String> = data.iter().map(|s| s.name().to_string()).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Structural(format!("variable '{n}' appears twice")));
        }
    }
    Ok(names)
}

fn lag_regressors(data: &[Series], lags: usize) -> Vec<Regressor<'_>> {
    (1..=lags)
        .flat_map(|l| data.iter().map(move |s| Regressor::new(s, -(l as i64))))
        .collect()
}

/// Equation-by-equation OLS of a VAR(`lags`) with intercept.
pub fn fit_var(data: &[Series], lags: usize) -> Result<VarFit> {
    let k = data.len();
    if k == 0 {
        return Err(Error::Parameter("a VAR needs at least one variable".into()));
    }
    if lags == 0 {
        return Err(Error::Parameter("VAR lag order must be at least 1".into()));
    }
    let variables = check_names(data)?;
    let t = data[0].len();
    if t <= k * lags + 10 {
        return Err(Error::InsufficientSample(format!(
            "{t} observations for a {k}-variable VAR({lags}); more than {} needed",
            k * lags + 10
        )));
    }
    let regs = lag_regressors(data, lags);
    let mut coefficients = vec![DMatrix::zeros(k, k); lags];
    let mut intercept = DVector::zeros(k);
    let mut residuals = Vec::with_capacity(k);
    let mut xtx_inverse = DMatrix::zeros(0, 0);
    let mut nobs = 0;
    let mut df = 0;
    for (i, target) in data.iter().enumerate() {
        let fit = ols(build_design(target, 0, &regs, true)?)?;
        intercept[i] = fit.coefficient(INTERCEPT_LABEL)?;
        for (l, b) in coefficients.iter_mut().enumerate() {
            for (j, s) in data.iter().enumerate() {
                b[(i, j)] = fit.coefficient(&shift_label(s.name(), -(l as i64 + 1)))?;
            }
        }
        nobs = fit.nobs();
        df = fit.df_resid();
        xtx_inverse = fit.xtx_inverse().clone();
        residuals.push(fit.residuals().to_vec());
    }
    let mut sigma = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..=a {
            let v = crate::regress::dot(&residuals[a], &residuals[b]) / df as f64;
            sigma[(a, b)] = v;
            sigma[(b, a)] = v;
        }
    }
    let spectral_radius = companion(&coefficients)
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(VarFit {
        variables,
        lags,
        coefficients,
        intercept,
        sigma,
        nobs,
        spectral_radius,
        xtx_inverse,
    })
}

fn companion(b: &[DMatrix<f64>]) -> DMatrix<f64> {
    let k = b[0].nrows();
    let p = b.len();
    let mut c = DMatrix::zeros(k * p, k * p);
    for (l, bl) in b.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(bl);
    }
    for i in k..k * p {
        c[(i, i - k)] = 1.0;
    }
    c
}

impl VarFit {
    /// Eigenvalues of the companion matrix as `(re, im)`.
    pub fn companion_eigenvalues(&self) -> Vec<(f64, f64)> {
        companion(&self.coefficients)
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Parameter(format!("VAR has no variable '{name}'")))
    }
}

/// Lower-triangular `L` with `L L' = Sigma` after reordering the variables;
/// rows and columns follow `ordering`.
pub fn cholesky_factor(fit: &VarFit, ordering: &[&str]) -> Result<DMatrix<f64>> {
    let perm = permutation(fit, ordering)?;
    let s = DMatrix::from_fn(perm.len(), perm.len(), |i, j| fit.sigma[(perm[i], perm[j])]);
    cholesky(&s)
}

fn cholesky(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    s.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Decomposition("residual covariance is not positive definite".into()))
}

fn permutation(fit: &VarFit, ordering: &[&str]) -> Result<Vec<usize>> {
    if ordering.is_empty() {
        return Ok((0..fit.variables.len()).collect());
    }
    if ordering.len() != fit.variables.len() {
        return Err(Error::Parameter(format!(
            "ordering lists {} variables, the VAR has {}",
            ordering.len(),
            fit.variables.len()
        )));
    }
    let perm = ordering.iter().map(|n| fit.index_of(n)).collect::<Result<Vec<_>>>()?;
    let mut seen = perm.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != perm.len() {
        return Err(Error::Parameter("ordering repeats a variable".into()));
    }
    Ok(perm)
}

/// MA coefficients `Psi_0 .. Psi_H` applied to `impact`, as a `k x (H+1)`
/// matrix of responses.
fn propagate(b: &[DMatrix<f64>], impact: &DVector<f64>, horizon: usize, exog: &[DVector<f64>]) -> DMatrix<f64> {
    let k = impact.len();
    let mut out = DMatrix::zeros(k, horizon + 1);
    for h in 0..=horizon {
        let mut r = if h == 0 { impact.clone() } else { DVector::zeros(k) };
        if let Some(d) = exog.get(h) {
            r += d;
        }
        for (l, bl) in b.iter().enumerate() {
            if h > l {
                r += bl * out.column(h - l - 1);
            }
        }
        out.set_column(h, &r);
    }
    out
}

/// Packs the slope coefficients and the lower triangle of `Sigma`.
struct Packed {
    k: usize,
    m: usize,
    lags: usize,
}

impl Packed {
    fn n_coef(&self) -> usize {
        self.k * self.m
    }

    fn pack(&self, fit: &VarFit) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.n_coef() + self.k * (self.k + 1) / 2);
        for i in 0..self.k {
            theta.push(fit.intercept[i]);
            for b in &fit.coefficients {
                for j in 0..self.k {
                    theta.push(b[(i, j)]);
                }
            }
        }
        for a in 0..self.k {
            for c in 0..=a {
                theta.push(fit.sigma[(a, c)]);
            }
        }
        theta
    }

    fn unpack(&self, theta: &[f64]) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
        let k = self.k;
        let mut b = vec![DMatrix::zeros(k, k); self.lags];
        for i in 0..k {
            let row = &theta[i * self.m..(i + 1) * self.m];
            for (l, bl) in b.iter_mut().enumerate() {
                for j in 0..k {
                    bl[(i, j)] = row[1 + l * k + j];
                }
            }
        }
        let mut s = DMatrix::zeros(k, k);
        let mut idx = self.n_coef();
        for a in 0..k {
            for c in 0..=a {
                s[(a, c)] = theta[idx];
                s[(c, a)] = theta[idx];
                idx += 1;
            }
        }
        (b, s)
    }

    /// Asymptotic covariance of the packed parameters: `Sigma (x) (X'X)^{-1}`
    /// for the coefficients and the Gaussian formula for `vech(Sigma)`.
    fn covariance(&self, fit: &VarFit) -> DMatrix<f64> {
        let (k, m) = (self.k, self.m);
        let nc = self.n_coef();
        let ns = k * (k + 1) / 2;
        let mut v = DMatrix::zeros(nc + ns, nc + ns);
        for i in 0..k {
            for j in 0..k {
                let sij = fit.sigma[(i, j)];
                for a in 0..m {
                    for b in 0..m {
                        v[(i * m + a, j * m + b)] = sij * fit.xtx_inverse[(a, b)];
                    }
                }
            }
        }
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..=a).map(move |c| (a, c))).collect();
        let s = &fit.sigma;
        let t = fit.nobs as f64;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            for (q, &(a, b)) in pairs.iter().enumerate() {
                v[(nc + p, nc + q)] = (s[(i, a)] * s[(j, b)] + s[(i, b)] * s[(j, a)]) / t;
            }
        }
        v
    }
}

/// Delta-method standard errors of `f(theta)` by central differences.
fn delta_se(theta: &[f64], cov: &DMatrix<f64>, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let base = f(theta)?;
    let n = theta.len();
    let mut jac = DMatrix::zeros(base.len(), n);
    let mut work = theta.to_vec();
    for p in 0..n {
        let step = 1e-6 * theta[p].abs().max(1e-3);
        work[p] = theta[p] + step;
        let up = f(&work)?;
        work[p] = theta[p] - step;
        let down = f(&work)?;
        work[p] = theta[p];
        for r in 0..base.len() {
            jac[(r, p)] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    let v = &jac * cov * jac.transpose();
    Ok((0..base.len()).map(|r| v[(r, r)].max(0.0).sqrt()).collect())
}

fn critical(ci_level: f64) -> Result<f64> {
    use statrs::distribution::{ContinuousCDF, Normal};
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::Parameter(format!("ci_level {ci_level} must lie in (0, 1)")));
    }
    Ok(Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + 0.5 * ci_level))
}

fn results_from(
    estimator: Estimator,
    names: &[String],
    points: &[f64],
    ses: &[f64],
    horizon: usize,
    nobs: usize,
    z: f64,
    warnings: &[String],
) -> Vec<(String, IrfResult)> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let rows = (0..=horizon)
                .map(|h| {
                    let idx = i * (horizon + 1) + h;
                    (points[idx], ses[idx], nobs)
                })
                .collect();
            (
                n.clone(),
                IrfResult::from_points(estimator, rows, z, warnings.to_vec()),
            )
        })
        .collect()
}

/// Responses of every variable to a structural shock in `impulse`, identified
/// recursively under `ordering` (empty = the fit's order) and scaled to a
/// unit impact on `impulse`. Returns `(response variable, result)` pairs in
/// the fit's variable order.
pub fn cholesky_irf(
    fit: &VarFit,
    horizon: usize,
    impulse: &str,
    ordering: &[&str],
    ci_level: f64,
) -> Result<Vec<(String, IrfResult)>> {
    let k = fit.variables.len();
    let perm = permutation(fit, ordering)?;
    let shocked = fit.index_of(impulse)?;
    let pos = perm.iter().position(|&p| p == shocked).expect("impulse in ordering");
    let mut warnings = Vec::new();
    if fit.spectral_radius >= 1.0 {
        warnings.push(format!(
            "companion spectral radius {:.4} >= 1: the VAR is not stable and responses do not die out",
            fit.spectral_radius
        ));
    }
    let packed = Packed {
        k,
        m: 1 + k * fit.lags,
        lags: fit.lags,
    };
    let irf = |theta: &[f64]| -> Result<Vec<f64>> {
        let (b, s) = packed.unpack(theta);
        let so = DMatrix::from_fn(k, k, |i, j| s[(perm[i], perm[j])]);
        let l = cholesky(&so)?;
        let scale = l[(pos, pos)];
        let mut impact = DVector::zeros(k);
        for (i, &orig) in perm.iter().enumerate() {
            impact[orig] = l[(i, pos)] / scale;
        }
        let r = propagate(&b, &impact, horizon, &[]);
        Ok((0..k).flat_map(|i| (0..=horizon).map(move |h| (i, h))).map(|(i, h)| r[(i, h)]).collect())
    };
    let theta = packed.pack(fit);
    let points = irf(&theta)?;
    let ses = delta_se(&theta, &packed.covariance(fit), irf)?;
    Ok(results_from(
        Estimator::VarEndog,
        &fit.variables,
        &points,
        &ses,
        horizon,
        fit.nobs,
        critical(ci_level)?,
        &warnings,
    ))
}

/// VAR-X: `Y_t = c + sum_{l<=p} A_l Y_{t-l} + sum_{j<=q} D_j x_{t-j} + e_t`.
/// Returns the response of each `Y` to a unit `x` impulse with the future
/// path of `x` held at zero.
pub fn varx_irf(
    ys: &[Series],
    x: &Series,
    lags: usize,
    exog_lags: usize,
    horizon: usize,
    ci_level: f64,
) -> Result<Vec<(String, IrfResult)>> {
    let k = ys.len();
    if k == 0 {
        return Err(Error::Parameter("VAR-X needs at least one endogenous variable".into()));
    }
    let names = check_names(ys)?;
    if names.iter().any(|n| n == x.name()) {
        return Err(Error::Structural(format!(
            "exogenous '{}' also appears among the endogenous variables",
            x.name()
        )));
    }
    let mut warnings = Vec::new();
    if exog_lags < horizon {
        warnings.push(format!(
            "VAR-X with {exog_lags} lags of '{}' below the horizon {horizon}: distributed-lag truncation may bias the responses",
            x.name()
        ));
    }
    let mut regs = lag_regressors(ys, lags);
    regs.push(Regressor::current(x));
    regs.extend(Regressor::lags(x, 1..=exog_lags));
    let m = 1 + k * lags + exog_lags + 1;
    let mut theta = Vec::with_capacity(k * m);
    let mut residuals = Vec::with_capacity(k);
    let mut xtx = DMatrix::zeros(0, 0);
    let mut nobs = 0;
    let mut df = 0;
    for target in ys {
        let fit = ols(build_design(target, 0, &regs, true)?)?;
        theta.extend_from_slice(fit.coefficients());
        residuals.push(fit.residuals().to_vec());
        xtx = fit.xtx_inverse().clone();
        nobs = fit.nobs();
        df = fit.df_resid();
    }
    let mut sigma = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            sigma[(a, b)] = crate::regress::dot(&residuals[a], &residuals[b]) / df as f64;
        }
    }
    let mut cov = DMatrix::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..k {
            for a in 0..m {
                for b in 0..m {
                    cov[(i * m + a, j * m + b)] = sigma[(i, j)] * xtx[(a, b)];
                }
            }
        }
    }
    // design order: const, lag-major endogenous blocks, x[0], x[-1..-q]
    let irf = |theta: &[f64]| -> Result<Vec<f64>> {
        let mut a = vec![DMatrix::zeros(k, k); lags];
        let mut d = vec![DVector::zeros(k); exog_lags + 1];
        for i in 0..k {
            let row = &theta[i * m..(i + 1) * m];
            for (l, al) in a.iter_mut().enumerate() {
                for j in 0..k {
                    al[(i, j)] = row[1 + l * k + j];
                }
            }
            for (j, dj) in d.iter_mut().enumerate() {
                dj[i] = row[1 + k * lags + j];
            }
        }
        let r = propagate(&a, &DVector::zeros(k), horizon, &d);
        Ok((0..k).flat_map(|i| (0..=horizon).map(move |h| (i, h))).map(|(i, h)| r[(i, h)]).collect())
    };
    let points = irf(&theta)?;
    let ses = delta_se(&theta, &cov, irf)?;
    Ok(results_from(
        Estimator::VarX,
        &names,
        &points,
        &ses,
        horizon,
        nobs,
        critical(ci_level)?,
        &warnings,
    ))
}
