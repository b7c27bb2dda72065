//! Impulse-response estimators: local projections with and without shock
//! leads, distributed lag models on the shock or on its AR innovations,
//! residual-adjusted projections, LP-IV, state-dependent projections and
//! cumulative multipliers.

mod linear;
mod nonlinear;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::tscore::Series;

pub use linear::{
    dlm, dlm_innovation, estimate, estimate_innovations, lp, lp_iv, lp_leads, lp_residual_adjusted,
    Innovations,
};
pub use nonlinear::{nonlinear_lp, NonlinearIrf, Regime, RegimePath, UndefinedPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Lp,
    LpLeads,
    Dlm,
    DlmInnovation,
    LpResidualAdjusted,
    LpIv,
    LpIvLeads,
    NonlinearLp,
    VarEndog,
    VarX,
}

impl Estimator {
    pub const ALL: [Estimator; 10] = [
        Estimator::Lp,
        Estimator::LpLeads,
        Estimator::Dlm,
        Estimator::DlmInnovation,
        Estimator::LpResidualAdjusted,
        Estimator::LpIv,
        Estimator::LpIvLeads,
        Estimator::NonlinearLp,
        Estimator::VarEndog,
        Estimator::VarX,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Lp => "lp",
            Estimator::LpLeads => "lp_leads",
            Estimator::Dlm => "dlm",
            Estimator::DlmInnovation => "dlm_innovation",
            Estimator::LpResidualAdjusted => "lp_residual_adjusted",
            Estimator::LpIv => "lp_iv",
            Estimator::LpIvLeads => "lp_iv_leads",
            Estimator::NonlinearLp => "nonlinear_lp",
            Estimator::VarEndog => "var_endog",
            Estimator::VarX => "var_x",
        }
    }

    pub fn uses_leads(self) -> bool {
        matches!(self, Estimator::LpLeads | Estimator::LpIvLeads)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    /// Accepts `snake_case` or `kebab-case` names.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Estimator::ALL
            .into_iter()
            .find(|e| e.as_str() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Estimator::ALL.iter().map(|e| e.as_str()).collect();
                Error::Parameter(format!("unknown estimator '{s}', expected one of {names:?}"))
            })
    }
}

/// Number of shock leads added at each horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LeadsRule {
    /// `h` leads at horizon `h`.
    ConservativeH,
    Fixed { leads: usize },
    /// `min(h, max)` leads at horizon `h`.
    Capped { max: usize },
}

impl LeadsRule {
    pub fn count(self, horizon: usize) -> usize {
        match self {
            LeadsRule::ConservativeH => horizon,
            LeadsRule::Fixed { leads } => leads,
            LeadsRule::Capped { max } => horizon.min(max),
        }
    }
}

/// Newey-West truncation lag used at each horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// The horizon of the projection (the maximum horizon for one-regression
    /// estimators).
    #[default]
    Horizon,
    Fixed { bandwidth: usize },
}

impl BandwidthRule {
    pub fn bandwidth(self, horizon: usize) -> usize {
        match self {
            BandwidthRule::Horizon => horizon,
            BandwidthRule::Fixed { bandwidth } => bandwidth,
        }
    }
}

/// Dating of the state dummy relative to the shock in state-dependent
/// projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTiming {
    /// `S_{t-1}`.
    #[default]
    Lagged,
    /// `S_t`.
    Current,
}

/// A control variable entering at lags `1..=lags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub series: Series,
    pub lags: usize,
}

fn default_ar_order() -> usize {
    1
}

fn default_ci_level() -> f64 {
    0.95
}

fn default_weak_f() -> f64 {
    10.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfSpec {
    pub estimator: Estimator,
    /// Maximum horizon `H`.
    pub horizon: usize,
    #[serde(default)]
    pub controls: Vec<Control>,
    /// Lags `1..=shock_lags` of the shock (or of the endogenous regressor for
    /// LP-IV) entering as controls.
    #[serde(default)]
    pub shock_lags: usize,
    /// Lead rule for lead-augmented estimators. On plain `lp` it is only
    /// allowed together with `comparable_sample`, where it sets the trim.
    #[serde(default)]
    pub leads: Option<LeadsRule>,
    #[serde(default = "default_ar_order")]
    pub shock_ar_order: usize,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default = "yes")]
    pub intercept: bool,
    #[serde(default)]
    pub trend: bool,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    /// Estimate every horizon on the rows usable at the deepest horizon of
    /// the lead-augmented design, so runs with and without leads share one
    /// sample.
    #[serde(default)]
    pub comparable_sample: bool,
    /// Lags of the shock in distributed lag models (default `H`).
    #[serde(default)]
    pub dlm_lags: Option<usize>,
    /// Series whose leads are added by lead-augmented estimators. Defaults to
    /// the shock, or to the instrument for `lp_iv_leads`.
    #[serde(default)]
    pub lead_series: Option<Series>,
    #[serde(default)]
    pub instrument: Option<Series>,
    #[serde(default)]
    pub state: Option<Series>,
    /// Add leads of the state to state-dependent projections (fixed-state
    /// counterfactual).
    #[serde(default)]
    pub state_leads: bool,
    #[serde(default)]
    pub state_timing: StateTiming,
    /// Replace lead values beyond the end of the sample with zeros instead of
    /// dropping those rows.
    #[serde(default)]
    pub pad_tail_leads: bool,
    /// First-stage F below this value is flagged as a weak instrument.
    #[serde(default = "default_weak_f")]
    pub weak_instrument_f: f64,
}

impl IrfSpec {
    pub fn new(estimator: Estimator, horizon: usize) -> Self {
        Self {
            estimator,
            horizon,
            controls: Vec::new(),
            shock_lags: 0,
            leads: if estimator.uses_leads() {
                Some(LeadsRule::ConservativeH)
            } else {
                None
            },
            shock_ar_order: 1,
            bandwidth: BandwidthRule::Horizon,
            intercept: true,
            trend: false,
            ci_level: 0.95,
            comparable_sample: false,
            dlm_lags: None,
            lead_series: None,
            instrument: None,
            state: None,
            state_leads: false,
            state_timing: StateTiming::Lagged,
            pad_tail_leads: false,
            weak_instrument_f: 10.0,
        }
    }

    pub fn control(mut self, series: &Series, lags: usize) -> Self {
        self.controls.push(Control {
            series: series.clone(),
            lags,
        });
        self
    }

    pub fn shock_lags(mut self, lags: usize) -> Self {
        self.shock_lags = lags;
        self
    }

    pub fn leads(mut self, rule: LeadsRule) -> Self {
        self.leads = Some(rule);
        self
    }

    pub fn dlm_lags(mut self, lags: usize) -> Self {
        self.dlm_lags = Some(lags);
        self
    }

    /// Same settings under another estimator; the lead rule is kept only
    /// where it is meaningful.
    pub fn with_estimator(&self, estimator: Estimator) -> Self {
        let mut spec = self.clone();
        spec.estimator = estimator;
        if estimator.uses_leads() {
            spec.leads.get_or_insert(LeadsRule::ConservativeH);
        } else if !(spec.comparable_sample || estimator == Estimator::NonlinearLp) {
            spec.leads = None;
        }
        spec
    }

    /// Full check, including that the lead rule fits the estimator.
    pub fn validate(&self) -> Result<()> {
        self.validate_settings()?;
        if self.leads.is_some()
            && !self.estimator.uses_leads()
            && self.estimator != Estimator::NonlinearLp
            && !(self.comparable_sample && self.estimator == Estimator::Lp)
        {
            return Err(Error::Parameter(format!(
                "a leads rule does not apply to estimator '{}'",
                self.estimator
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_settings(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} must lie in (0, 1)", self.ci_level));
        }
        if !(1..=4).contains(&self.shock_ar_order) {
            return bad(format!("shock_ar_order {} must be between 1 and 4", self.shock_ar_order));
        }
        if let Some(k) = self.dlm_lags {
            if k < self.horizon {
                return bad(format!("dlm_lags {k} is below the horizon {}", self.horizon));
            }
        }
        if !(self.weak_instrument_f >= 0.0) {
            return bad("weak_instrument_f must be non-negative".into());
        }
        Ok(())
    }

    pub(crate) fn critical_value(&self) -> f64 {
        Normal::new(0.0, 1.0)
            .expect("standard normal")
            .inverse_cdf(0.5 + 0.5 * self.ci_level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub estimator: Estimator,
    pub horizons: Vec<usize>,
    pub point: Vec<f64>,
    /// Newey-West standard errors.
    pub se: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub nobs: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Estimator-specific side results keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub auxiliary: BTreeMap<String, Vec<f64>>,
}

impl IrfResult {
    pub(crate) fn from_points(
        estimator: Estimator,
        rows: Vec<(f64, f64, usize)>,
        critical: f64,
        warnings: Vec<String>,
    ) -> Self {
        let n = rows.len();
        let mut r = IrfResult {
            estimator,
            horizons: (0..n).collect(),
            point: Vec::with_capacity(n),
            se: Vec::with_capacity(n),
            ci_lo: Vec::with_capacity(n),
            ci_hi: Vec::with_capacity(n),
            nobs: Vec::with_capacity(n),
            warnings,
            auxiliary: BTreeMap::new(),
        };
        for (b, se, nobs) in rows {
            r.point.push(b);
            r.se.push(se);
            r.ci_lo.push(b - critical * se);
            r.ci_hi.push(b + critical * se);
            r.nobs.push(nobs);
        }
        r
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.len().saturating_sub(1)
    }

    /// CSV mirror of the result: `h,point,se,ci_lo,ci_hi,nobs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,point,se,ci_lo,ci_hi,nobs\n");
        for i in 0..self.horizons.len() {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{}\n",
                self.horizons[i], self.point[i], self.se[i], self.ci_lo[i], self.ci_hi[i], self.nobs[i]
            ));
        }
        out
    }
}

/// Ratio of cumulated responses; `None` where the denominator's partial sum
/// is numerically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub horizons: Vec<usize>,
    pub values: Vec<Option<f64>>,
    pub undefined: Vec<usize>,
}

/// `M[h] = sum_{i<=h} num[i] / sum_{i<=h} den[i]` with the default tolerance
/// `1e-8` times the largest absolute denominator response.
pub fn cumulative_multiplier(num: &IrfResult, den: &IrfResult) -> Result<Multiplier> {
    let scale = den.point.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    cumulative_multiplier_with_tolerance(num, den, 1e-8 * scale)
}

pub fn cumulative_multiplier_with_tolerance(
    num: &IrfResult,
    den: &IrfResult,
    tolerance: f64,
) -> Result<Multiplier> {
    if num.point.len() != den.point.len() {
        return Err(Error::Parameter(format!(
            "numerator has {} horizons, denominator {}",
            num.point.len(),
            den.point.len()
        )));
    }
    let (mut sn, mut sd) = (0.0, 0.0);
    let mut values = Vec::with_capacity(num.point.len());
    let mut undefined = Vec::new();
    for (h, (a, b)) in num.point.iter().zip(&den.point).enumerate() {
        sn += a;
        sd += b;
        if sd.abs() <= tolerance {
            values.push(None);
            undefined.push(h);
        } else {
            values.push(Some(sn / sd));
        }
    }
    Ok(Multiplier {
        horizons: (0..values.len()).collect(),
        values,
        undefined,
    })
}
