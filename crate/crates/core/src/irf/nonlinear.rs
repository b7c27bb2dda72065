use serde::{Deserialize, Serialize};

use super::linear::{append_padded, collect_horizons, comparable, with_newey_west, Projection};
use super::{Estimator, IrfResult, IrfSpec, LeadsRule, StateTiming};
use crate::error::{Error, Result};
use crate::regress::ols;
use crate::tscore::{build_design, shift_label, DesignColumn, Regressor, Series};

/// Regime of a binary state: `A` where the state is 1, `B` where it is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    A,
    B,
}

impl Regime {
    fn prefix(self) -> &'static str {
        match self {
            Regime::A => "A:",
            Regime::B => "B:",
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Regime::A => "regime A (state = 1)",
            Regime::B => "regime B (state = 0)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePath {
    pub regime: Regime,
    pub label: String,
    pub point: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub nobs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndefinedPath {
    pub regime: Regime,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearIrf {
    pub estimator: Estimator,
    pub horizons: Vec<usize>,
    /// True when leads of the state are controlled for.
    pub fixed_state: bool,
    pub paths: Vec<RegimePath>,
    #[serde(default)]
    pub undefined: Vec<UndefinedPath>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl NonlinearIrf {
    pub fn path(&self, regime: Regime) -> Result<&RegimePath> {
        if let Some(p) = self.paths.iter().find(|p| p.regime == regime) {
            return Ok(p);
        }
        let reason = self
            .undefined
            .iter()
            .find(|u| u.regime == regime)
            .map(|u| u.reason.clone())
            .unwrap_or_else(|| "not estimated".into());
        Err(Error::InsufficientSample(format!(
            "{} path is undefined: {reason}",
            regime.describe()
        )))
    }

    /// One regime path in the linear result layout.
    pub fn to_irf(&self, regime: Regime) -> Result<IrfResult> {
        let p = self.path(regime)?;
        Ok(IrfResult {
            estimator: self.estimator,
            horizons: self.horizons.clone(),
            point: p.point.clone(),
            se: p.se.clone(),
            ci_lo: p.ci_lo.clone(),
            ci_hi: p.ci_hi.clone(),
            nobs: p.nobs.clone(),
            warnings: self.warnings.clone(),
            auxiliary: Default::default(),
        })
    }
}

struct HorizonPaths {
    estimates: [Option<(f64, f64, usize)>; 2],
    reasons: [Option<String>; 2],
}

/// State-dependent local projections. Every regressor, the intercept
/// included, is interacted with `S` and `1 - S` in one regression per
/// horizon, with `S` dated `t-1` by default. Shock leads are added when a
/// lead rule is set; `state_leads` adds leads of the state as well and labels
/// the paths as fixed-state.
pub fn nonlinear_lp(
    y: &Series,
    shock: &Series,
    state: &Series,
    spec: &IrfSpec,
) -> Result<NonlinearIrf> {
    spec.validate_settings()?;
    if let Some(pos) = state.values().iter().position(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::Parameter(format!(
            "state '{}' must be 0/1, found {} at position {pos}",
            state.name(),
            state.values()[pos]
        )));
    }
    if state.len() != y.len() {
        return Err(Error::Structural(format!(
            "state '{}' has length {}, outcome has {}",
            state.name(),
            state.len(),
            y.len()
        )));
    }
    let mut p = Projection::new(y, shock, spec);
    if let Some(rule) = spec.leads {
        p.leads = Some((spec.lead_series.as_ref().unwrap_or(shock), rule));
    }
    let state_shift: i64 = match spec.state_timing {
        StateTiming::Lagged => -1,
        StateTiming::Current => 0,
    };
    let dummy_label = shift_label(state.name(), state_shift);
    let impulse_label = shift_label(shock.name(), 0);
    let state_rule = spec.leads.unwrap_or(LeadsRule::ConservativeH);

    let (per_h, warnings) = collect_horizons(spec.horizon, |h| {
        let mut regs = p.regressors(spec, h);
        regs.push(Regressor::new(state, state_shift));
        if spec.state_leads {
            let n = state_rule.count(h) as i64;
            regs.extend((1..=n).map(|j| Regressor::new(state, state_shift + j)));
        }
        let mut design = build_design(y, h, &regs, spec.intercept)?;
        if spec.pad_tail_leads {
            if let Some((s, rule)) = p.leads {
                design = append_padded(&design, s, 1..=rule.count(h))?;
            }
        }
        let design = comparable(design, spec)?;
        let dummy = design.column(&dummy_label).expect("state column").to_vec();
        let base: Vec<&DesignColumn> =
            design.columns().iter().filter(|c| c.label != dummy_label).collect();
        let k = base.len();
        let n_a = dummy.iter().filter(|v| **v == 1.0).count();
        let counts = [n_a, dummy.len() - n_a];
        let mut reasons = [None, None];
        let mut columns = Vec::with_capacity(2 * k);
        for (i, regime) in [Regime::A, Regime::B].into_iter().enumerate() {
            if counts[i] < k + 1 {
                reasons[i] = Some(format!(
                    "{} has {} observations at h={h}, {} needed",
                    regime.describe(),
                    counts[i],
                    k + 1
                ));
                continue;
            }
            for c in &base {
                columns.push(DesignColumn {
                    label: format!("{}{}", regime.prefix(), c.label),
                    values: c
                        .values
                        .iter()
                        .zip(&dummy)
                        .map(|(v, s)| if (*s == 1.0) == (regime == Regime::A) { *v } else { 0.0 })
                        .collect(),
                });
            }
        }
        if columns.is_empty() {
            return Err(Error::InsufficientSample(format!(
                "neither regime has enough observations at h={h}: {} / {}",
                reasons[0].as_deref().unwrap_or(""),
                reasons[1].as_deref().unwrap_or("")
            )));
        }
        let fit = with_newey_west(ols(design.with_columns(columns)?)?, spec.bandwidth.bandwidth(h))?;
        let mut estimates = [None, None];
        for (i, regime) in [Regime::A, Regime::B].into_iter().enumerate() {
            if reasons[i].is_none() {
                let label = format!("{}{}", regime.prefix(), impulse_label);
                estimates[i] = Some((fit.coefficient(&label)?, fit.std_error(&label)?, counts[i]));
            }
        }
        Ok(HorizonPaths { estimates, reasons })
    })?;

    let critical = spec.critical_value();
    let mut paths = Vec::new();
    let mut undefined = Vec::new();
    for (i, regime) in [Regime::A, Regime::B].into_iter().enumerate() {
        let label = match (spec.state_leads, regime) {
            (false, Regime::A) => "A",
            (false, Regime::B) => "B",
            (true, Regime::A) => "fixed-state A",
            (true, Regime::B) => "fixed-state B",
        }
        .to_string();
        if let Some(reason) = per_h.iter().find_map(|hp| hp.reasons[i].clone()) {
            undefined.push(UndefinedPath {
                regime,
                label,
                reason,
            });
            continue;
        }
        let rows: Vec<(f64, f64, usize)> = per_h.iter().map(|hp| hp.estimates[i].unwrap()).collect();
        paths.push(RegimePath {
            regime,
            label,
            point: rows.iter().map(|r| r.0).collect(),
            se: rows.iter().map(|r| r.1).collect(),
            ci_lo: rows.iter().map(|r| r.0 - critical * r.1).collect(),
            ci_hi: rows.iter().map(|r| r.0 + critical * r.1).collect(),
            nobs: rows.iter().map(|r| r.2).collect(),
        });
    }
    Ok(NonlinearIrf {
        estimator: Estimator::NonlinearLp,
        horizons: (0..per_h.len()).collect(),
        fixed_state: spec.state_leads,
        paths,
        undefined,
        warnings,
    })
}
