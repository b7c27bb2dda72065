use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::{Estimator, IrfResult, IrfSpec, LeadsRule};
use crate::error::{Error, Result};
use crate::regress::{ols, tsls, CovKind, RegressionFit};
use crate::tscore::{build_design, shift_label, DesignColumn, DesignMatrix, Regressor, Series};

/// AR residuals of a shock together with the fitted AR coefficients.
#[derive(Debug, Clone)]
pub struct Innovations {
    /// Residuals, aligned with the last `T - p` observations of the shock.
    pub series: Series,
    /// `phi_1 .. phi_p`.
    pub ar_coefficients: Vec<f64>,
    pub intercept: f64,
}

/// OLS fit of an AR(`ar_order`) with intercept; the first `ar_order` periods
/// are lost.
pub fn estimate_innovations(shock: &Series, ar_order: usize) -> Result<Innovations> {
    let t = shock.len();
    if ar_order == 0 || ar_order * 10 >= t {
        return Err(Error::Parameter(format!(
            "AR order {ar_order} must be at least 1 and below T/10 = {}",
            t / 10
        )));
    }
    let v = shock.values();
    if v.iter().all(|x| *x == v[0]) {
        return Err(Error::DegenerateSeries(format!("shock '{}' is constant", shock.name())));
    }
    let design = build_design(shock, 0, &Regressor::lags(shock, 1..=ar_order), true)?;
    let fit = ols(design).map_err(|e| match e {
        Error::Singular { .. } => Error::DegenerateSeries(format!(
            "AR({ar_order}) regression of '{}' is singular",
            shock.name()
        )),
        other => other,
    })?;
    let ar_coefficients = (1..=ar_order)
        .map(|l| fit.coefficient(&shift_label(shock.name(), -(l as i64))))
        .collect::<Result<Vec<_>>>()?;
    let intercept = fit.coefficient(crate::tscore::INTERCEPT_LABEL)?;
    let name = format!("{}_innov", shock.name());
    let resid = fit.residuals().to_vec();
    let series = match shock.period_index() {
        Some(idx) => Series::with_index(name, resid, idx[ar_order..].to_vec())?,
        None => Series::new(name, resid)?,
    };
    Ok(Innovations {
        series,
        ar_coefficients,
        intercept,
    })
}

fn tail(s: &Series, len: usize) -> Result<Series> {
    if s.len() < len {
        return Err(Error::Structural(format!(
            "series '{}' has {} observations, {len} needed",
            s.name(),
            s.len()
        )));
    }
    s.slice(s.len() - len..s.len())
}

fn trend(len: usize) -> Series {
    Series::new("trend", (0..len).map(|t| t as f64).collect()).expect("finite trend")
}

/// Inputs of one family of per-horizon projections.
pub(crate) struct Projection<'a> {
    pub y: &'a Series,
    /// Regressor whose coefficient is the response.
    pub impulse: &'a Series,
    pub controls: Vec<(&'a Series, usize)>,
    /// Excluded instrument for LP-IV.
    pub instrument: Option<&'a Series>,
    pub leads: Option<(&'a Series, LeadsRule)>,
    pub trend: Option<Series>,
}

impl<'a> Projection<'a> {
    pub fn new(y: &'a Series, impulse: &'a Series, spec: &'a IrfSpec) -> Self {
        Self {
            y,
            impulse,
            controls: spec.controls.iter().map(|c| (&c.series, c.lags)).collect(),
            instrument: None,
            leads: None,
            trend: spec.trend.then(|| trend(y.len())),
        }
    }

    /// Regressors other than padded leads, in design order.
    pub fn regressors(&self, spec: &IrfSpec, horizon: usize) -> Vec<Regressor<'_>> {
        let mut regs = vec![Regressor::current(self.impulse)];
        regs.extend(Regressor::lags(self.impulse, 1..=spec.shock_lags));
        for (s, p) in &self.controls {
            regs.extend(Regressor::lags(s, 1..=*p));
        }
        if let Some(z) = self.instrument {
            regs.push(Regressor::current(z));
        }
        if let Some(t) = &self.trend {
            regs.push(Regressor::current(t));
        }
        if let Some((s, rule)) = self.leads {
            if !spec.pad_tail_leads {
                regs.extend(Regressor::leads(s, 1..=rule.count(horizon)));
            }
        }
        regs
    }

    pub fn design(&self, spec: &IrfSpec, horizon: usize) -> Result<DesignMatrix> {
        let mut design = build_design(self.y, horizon, &self.regressors(spec, horizon), spec.intercept)?;
        if spec.pad_tail_leads {
            if let Some((s, rule)) = self.leads {
                design = append_padded(&design, s, 1..=rule.count(horizon))?;
            }
        }
        comparable(design, spec)
    }
}

/// Appends lead columns whose values past the end of the sample are zero.
pub(crate) fn append_padded(
    design: &DesignMatrix,
    s: &Series,
    leads: RangeInclusive<usize>,
) -> Result<DesignMatrix> {
    if leads.is_empty() {
        return Ok(design.clone());
    }
    let rows = design.row_range();
    let v = s.values();
    let mut columns = design.columns().to_vec();
    for j in leads {
        columns.push(DesignColumn {
            label: shift_label(s.name(), j as i64),
            values: rows.clone().map(|t| v.get(t + j).copied().unwrap_or(0.0)).collect(),
        });
    }
    design.with_columns(columns)
}

/// Restricts a design to the rows shared by all horizons of the
/// lead-augmented run when the comparability flag is set.
pub(crate) fn comparable(design: DesignMatrix, spec: &IrfSpec) -> Result<DesignMatrix> {
    if !spec.comparable_sample {
        return Ok(design);
    }
    let leads = if spec.pad_tail_leads {
        0
    } else {
        spec.leads.unwrap_or(LeadsRule::ConservativeH).count(spec.horizon)
    };
    let drop = spec.horizon + leads;
    let len = design.source_len();
    if drop >= len {
        return Err(Error::InsufficientSample(format!(
            "comparable sample drops {drop} of {len} periods"
        )));
    }
    design.restrict(0..len - drop)
}

pub(crate) fn with_newey_west(fit: RegressionFit, bandwidth: usize) -> Result<RegressionFit> {
    fit.with_cov(CovKind::NeweyWest { bandwidth })
}

pub(crate) struct HorizonEstimate {
    pub point: f64,
    pub se: f64,
    pub nobs: usize,
    pub warning: Option<String>,
}

/// Evaluates `f` at every horizon `0..=max` (in parallel, results in
/// horizon order). An insufficient sample at some `h > 0` truncates the run
/// there with a warning; any other error is returned.
pub(crate) fn collect_horizons<T, F>(max: usize, f: F) -> Result<(Vec<T>, Vec<String>)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let outcomes: Vec<Result<T>> = (0..=max).into_par_iter().map(&f).collect();
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut warnings = Vec::new();
    for (h, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(v) => kept.push(v),
            Err(Error::InsufficientSample(msg)) if h > 0 => {
                warnings.push(format!(
                    "horizon truncated from {max} to {}: insufficient sample at h={h} ({msg})",
                    h - 1
                ));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((kept, warnings))
}

fn assemble(
    estimator: Estimator,
    spec: &IrfSpec,
    estimates: Vec<HorizonEstimate>,
    mut warnings: Vec<String>,
) -> IrfResult {
    let mut rows = Vec::with_capacity(estimates.len());
    let mut notes = Vec::new();
    for e in estimates {
        rows.push((e.point, e.se, e.nobs));
        notes.extend(e.warning);
    }
    notes.append(&mut warnings);
    IrfResult::from_points(estimator, rows, spec.critical_value(), notes)
}

fn run_projection(estimator: Estimator, p: &Projection<'_>, spec: &IrfSpec) -> Result<IrfResult> {
    spec.validate_settings()?;
    let label = shift_label(p.impulse.name(), 0);
    let instrument_label = p.instrument.map(|z| shift_label(z.name(), 0));
    let (estimates, warnings) = collect_horizons(spec.horizon, |h| {
        let design = p.design(spec, h)?;
        let bandwidth = spec.bandwidth.bandwidth(h);
        let (fit, warning) = match &instrument_label {
            None => (ols(design)?, None),
            Some(z) => {
                let fit = tsls(&design, &[label.as_str()], &[z.as_str()])?;
                let f = fit.first_stage()[0].f_statistic;
                let warning = (f < spec.weak_instrument_f).then(|| {
                    format!(
                        "weak instrument at h={h}: first-stage F = {f:.3} below {}",
                        spec.weak_instrument_f
                    )
                });
                (fit, warning)
            }
        };
        let fit = with_newey_west(fit, bandwidth)?;
        Ok(HorizonEstimate {
            point: fit.coefficient(&label)?,
            se: fit.std_error(&label)?,
            nobs: fit.nobs(),
            warning,
        })
    })?;
    Ok(assemble(estimator, spec, estimates, warnings))
}

/// Local projections: `y_{t+h}` on `shock_t` and controls, one regression per
/// horizon. Identifies the response including the shock's own persistence.
pub fn lp(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    run_projection(Estimator::Lp, &Projection::new(y, shock, spec), spec)
}

/// Local projections controlling for leads `shock_{t+1..t+L(h)}`. Identifies
/// the response to a serially uncorrelated shock.
pub fn lp_leads(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    let mut p = Projection::new(y, shock, spec);
    let rule = spec.leads.unwrap_or(LeadsRule::ConservativeH);
    p.leads = Some((spec.lead_series.as_ref().unwrap_or(shock), rule));
    run_projection(Estimator::LpLeads, &p, spec)
}

fn dlm_core(
    estimator: Estimator,
    y: &Series,
    x: &Series,
    controls: &[(&Series, usize)],
    spec: &IrfSpec,
) -> Result<(IrfResult, Vec<f64>)> {
    spec.validate_settings()?;
    let lags = spec.dlm_lags.unwrap_or(spec.horizon);
    let mut regs = vec![Regressor::current(x)];
    regs.extend(Regressor::lags(x, 1..=lags));
    for (s, p) in controls {
        regs.extend(Regressor::lags(s, 1..=*p));
    }
    let tr = spec.trend.then(|| trend(y.len()));
    if let Some(t) = &tr {
        regs.push(Regressor::current(t));
    }
    let design = build_design(y, 0, &regs, spec.intercept)?;
    let fit = with_newey_west(ols(design)?, spec.bandwidth.bandwidth(spec.horizon))?;
    let mut rows = Vec::with_capacity(spec.horizon + 1);
    let mut all = Vec::with_capacity(lags + 1);
    for h in 0..=lags {
        let label = shift_label(x.name(), -(h as i64));
        let b = fit.coefficient(&label)?;
        all.push(b);
        if h <= spec.horizon {
            rows.push((b, fit.std_error(&label)?, fit.nobs()));
        }
    }
    Ok((
        IrfResult::from_points(estimator, rows, spec.critical_value(), Vec::new()),
        all,
    ))
}

/// Distributed lag model: one regression of `y_t` on `shock_t ..
/// shock_{t-K}` (`K = dlm_lags`, default `H`); the lag-`h` coefficient is
/// the horizon-`h` response to a serially uncorrelated shock.
pub fn dlm(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    let controls: Vec<_> = spec.controls.iter().map(|c| (&c.series, c.lags)).collect();
    Ok(dlm_core(Estimator::Dlm, y, shock, &controls, spec)?.0)
}

/// Distributed lag model on the AR innovations of the shock. Identifies the
/// response including the shock's persistence. The implied shock-DLM
/// coefficients `theta_h = theta~_h - sum_j phi_j theta~_{h-j}` are reported
/// under `auxiliary["implied_dlm"]`.
pub fn dlm_innovation(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    let inn = estimate_innovations(shock, spec.shock_ar_order)?;
    let n = inn.series.len();
    let y = tail(y, n)?;
    let owned: Vec<(Series, usize)> = spec
        .controls
        .iter()
        .map(|c| Ok((tail(&c.series, n)?, c.lags)))
        .collect::<Result<_>>()?;
    let controls: Vec<_> = owned.iter().map(|(s, p)| (s, *p)).collect();
    let (mut result, _) = dlm_core(Estimator::DlmInnovation, &y, &inn.series, &controls, spec)?;
    let phi = &inn.ar_coefficients;
    let implied: Vec<f64> = (0..result.point.len())
        .map(|h| {
            let mut v = result.point[h];
            for (j, p) in phi.iter().enumerate() {
                if h > j {
                    v -= p * result.point[h - j - 1];
                }
            }
            v
        })
        .collect();
    result.auxiliary.insert("implied_dlm".into(), implied);
    result.auxiliary.insert("ar_coefficients".into(), phi.clone());
    Ok(result)
}

/// Local projections on the AR innovations of the shock instead of the
/// shock itself. Kept as a documented negative result: the estimates still
/// contain the shock's persistence.
pub fn lp_residual_adjusted(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    let inn = estimate_innovations(shock, spec.shock_ar_order)?;
    let n = inn.series.len();
    let y = tail(y, n)?;
    let owned: Vec<(Series, usize)> = spec
        .controls
        .iter()
        .map(|c| Ok((tail(&c.series, n)?, c.lags)))
        .collect::<Result<_>>()?;
    let mut p = Projection::new(&y, &inn.series, spec);
    p.controls = owned.iter().map(|(s, l)| (s, *l)).collect();
    let mut result = run_projection(Estimator::LpResidualAdjusted, &p, spec)?;
    result.warnings.insert(
        0,
        "residual-adjusted LP: projecting on AR innovations does not remove the shock's \
         persistence from the response; estimates include it (use lp_leads or dlm for the \
         response to a serially uncorrelated shock)"
            .into(),
    );
    Ok(result)
}

/// Per-horizon 2SLS of `y_{t+h}` on `endogenous_t` instrumented by
/// `instrument_t`. With `lp_iv_leads` the leads of `lead_series` (default: the
/// instrument) enter both stages as exogenous controls.
pub fn lp_iv(
    y: &Series,
    endogenous: &Series,
    instrument: &Series,
    spec: &IrfSpec,
) -> Result<IrfResult> {
    let renamed;
    let instrument = if instrument.name() == endogenous.name() {
        renamed = instrument.renamed(format!("{}_iv", instrument.name()));
        &renamed
    } else {
        instrument
    };
    let mut p = Projection::new(y, endogenous, spec);
    p.instrument = Some(instrument);
    let estimator = if spec.estimator == Estimator::LpIvLeads {
        let rule = spec.leads.unwrap_or(LeadsRule::ConservativeH);
        p.leads = Some((spec.lead_series.as_ref().unwrap_or(instrument), rule));
        Estimator::LpIvLeads
    } else {
        Estimator::LpIv
    };
    run_projection(estimator, &p, spec)
}

/// Dispatches on `spec.estimator` for the single-equation linear estimators.
pub fn estimate(y: &Series, shock: &Series, spec: &IrfSpec) -> Result<IrfResult> {
    spec.validate()?;
    match spec.estimator {
        Estimator::Lp => lp(y, shock, spec),
        Estimator::LpLeads => lp_leads(y, shock, spec),
        Estimator::Dlm => dlm(y, shock, spec),
        Estimator::DlmInnovation => dlm_innovation(y, shock, spec),
        Estimator::LpResidualAdjusted => lp_residual_adjusted(y, shock, spec),
        Estimator::LpIv | Estimator::LpIvLeads => {
            let z = spec.instrument.as_ref().ok_or_else(|| {
                Error::Parameter(format!("estimator '{}' needs an instrument", spec.estimator))
            })?;
            lp_iv(y, shock, z, spec)
        }
        Estimator::NonlinearLp => Err(Error::Parameter(
            "state-dependent projections return two paths; call nonlinear_lp".into(),
        )),
        Estimator::VarEndog | Estimator::VarX => Err(Error::Parameter(format!(
            "estimator '{}' is a system estimator; use the varmod module",
            spec.estimator
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str, v: Vec<f64>) -> Series {
        Series::new(name, v).unwrap()
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        // small deterministic generator for shape tests
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn fixed_zero_leads_equals_lp() {
        let x = s("x", pseudo(300, 1));
        let y = s("y", pseudo(300, 2));
        let base = IrfSpec::new(Estimator::Lp, 4).shock_lags(1);
        let a = lp(&y, &x, &base).unwrap();
        let spec = base.with_estimator(Estimator::LpLeads).leads(LeadsRule::Fixed { leads: 0 });
        let b = lp_leads(&y, &x, &spec).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.se, b.se);
        assert_eq!(a.nobs, b.nobs);
    }

    #[test]
    fn nobs_non_increasing_and_lengths() {
        let x = s("x", pseudo(200, 3));
        let y = s("y", pseudo(200, 4));
        let r = lp_leads(&y, &x, &IrfSpec::new(Estimator::LpLeads, 6)).unwrap();
        assert_eq!(r.point.len(), 7);
        assert_eq!(r.se.len(), 7);
        assert!(r.nobs.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.nobs[3], 200 - 6);
    }

    #[test]
    fn comparable_sample_equalises_rows() {
        let x = s("x", pseudo(200, 5));
        let y = s("y", pseudo(200, 6));
        let mut spec = IrfSpec::new(Estimator::Lp, 5);
        spec.comparable_sample = true;
        let a = lp(&y, &x, &spec).unwrap();
        let b = lp_leads(&y, &x, &spec.with_estimator(Estimator::LpLeads)).unwrap();
        assert!(a.nobs.iter().all(|n| *n == 190));
        assert_eq!(a.nobs, b.nobs);
    }

    #[test]
    fn padded_leads_keep_rows() {
        let x = s("x", pseudo(100, 7));
        let y = s("y", pseudo(100, 8));
        let mut spec = IrfSpec::new(Estimator::LpLeads, 4);
        spec.pad_tail_leads = true;
        let r = lp_leads(&y, &x, &spec).unwrap();
        assert_eq!(r.nobs, vec![100, 99, 98, 97, 96]);
    }

    #[test]
    fn truncates_with_warning() {
        let x = s("x", pseudo(30, 9));
        let y = s("y", pseudo(30, 10));
        let r = lp_leads(&y, &x, &IrfSpec::new(Estimator::LpLeads, 20)).unwrap();
        assert!(r.point.len() < 21);
        assert!(r.warnings.iter().any(|w| w.contains("truncated")));
    }

    #[test]
    fn exact_dlm_recovers_lag_weights() {
        let x = pseudo(400, 11);
        let y: Vec<f64> = (0..400)
            .map(|t| {
                let lag = |k: usize| if t >= k { x[t - k] } else { 0.0 };
                2.0 * lag(0) - 1.0 * lag(1) + 0.5 * lag(2)
            })
            .collect();
        let r = dlm(&s("y", y), &s("x", x), &IrfSpec::new(Estimator::Dlm, 3)).unwrap();
        for (a, b) in r.point.iter().zip([2.0, -1.0, 0.5, 0.0]) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn innovations_of_constant_fail() {
        assert!(matches!(
            estimate_innovations(&s("x", vec![1.0; 100]), 1),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(estimate_innovations(&s("x", pseudo(30, 1)), 3).is_err());
    }

    #[test]
    fn dispatch_rejects_system_estimators() {
        let x = s("x", pseudo(50, 1));
        assert!(estimate(&x, &x, &IrfSpec::new(Estimator::VarX, 2)).is_err());
        assert!(estimate(&x, &x, &IrfSpec::new(Estimator::LpIv, 2)).is_err());
    }
}
