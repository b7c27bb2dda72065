//! Data model shared by every estimator: named series, entity/period panels,
//! CSV ingestion and lag/lead design matrices.

mod csvio;
mod design;

pub use csvio::{load_csv, read_csv, write_csv, CsvSchema, Loaded, LoadedData, NaPolicy};
pub use design::{
    build_design, shift_label, trim_common_sample, usable_window, DesignColumn, DesignMatrix,
    Regressor, INTERCEPT_LABEL,
};

use std::cmp::Ordering;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate time series. Values are always finite and the optional period
/// index is strictly increasing under [`compare_periods`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct Series {
    name: String,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period_index: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawSeries {
    name: String,
    values: Vec<f64>,
    #[serde(default)]
    period_index: Option<Vec<String>>,
}

impl TryFrom<RawSeries> for Series {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        match raw.period_index {
            Some(index) => Series::with_index(raw.name, raw.values, index),
            None => Series::new(raw.name, raw.values),
        }
    }
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::Structural(format!("series '{name}' is empty")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structural(format!(
                "series '{name}' has a non-finite value at position {pos}"
            )));
        }
        Ok(Self {
            name,
            values,
            period_index: None,
        })
    }

    pub fn with_index(
        name: impl Into<String>,
        values: Vec<f64>,
        period_index: Vec<String>,
    ) -> Result<Self> {
        let mut series = Self::new(name, values)?;
        if period_index.len() != series.values.len() {
            return Err(Error::Structural(format!(
                "series '{}': period index has {} labels for {} values",
                series.name,
                period_index.len(),
                series.values.len()
            )));
        }
        if let Some(w) = period_index
            .windows(2)
            .find(|w| compare_periods(&w[0], &w[1]) != Ordering::Less)
        {
            return Err(Error::Structural(format!(
                "series '{}': period index not strictly increasing at {:?} -> {:?}",
                series.name, w[0], w[1]
            )));
        }
        series.period_index = Some(period_index);
        Ok(series)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period_index(&self) -> Option<&[String]> {
        self.period_index.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a series holds at least one observation.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Series {
        Series {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Sub-series over `range` of positions, keeping the matching labels.
    pub fn slice(&self, range: Range<usize>) -> Result<Series> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InsufficientSample(format!(
                "cannot slice series '{}' of length {} to {:?}",
                self.name,
                self.len(),
                range
            )));
        }
        Ok(Series {
            name: self.name.clone(),
            values: self.values[range.clone()].to_vec(),
            period_index: self.period_index.as_ref().map(|p| p[range].to_vec()),
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// Ordering for opaque period labels: numeric when both labels parse as
/// numbers, lexicographic otherwise.
pub fn compare_periods(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            x.partial_cmp(&y).unwrap_or(Ordering::Equal).then_with(|| a.cmp(b))
        }
        _ => a.cmp(b),
    }
}

/// Observations of several variables for one entity, aligned on a shared
/// period index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityData {
    pub entity: String,
    pub periods: Vec<String>,
    pub series: Vec<Series>,
}

/// Entity/period panel. Every entity carries the same set of variables, each
/// aligned to that entity's period labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    variables: Vec<String>,
    entities: Vec<EntityData>,
    balanced: bool,
}

impl Panel {
    pub fn new(variables: Vec<String>, entities: Vec<EntityData>) -> Result<Self> {
        if entities.len() < 2 {
            return Err(Error::InsufficientSample(format!(
                "a panel needs at least 2 entities, got {}",
                entities.len()
            )));
        }
        for e in &entities {
            if e.periods.len() < 3 {
                return Err(Error::InsufficientSample(format!(
                    "entity '{}' has {} periods, at least 3 are required",
                    e.entity,
                    e.periods.len()
                )));
            }
            if e.series.len() != variables.len() {
                return Err(Error::Structural(format!(
                    "entity '{}' has {} variables, expected {}",
                    e.entity,
                    e.series.len(),
                    variables.len()
                )));
            }
            for (s, v) in e.series.iter().zip(&variables) {
                if s.name() != v {
                    return Err(Error::Structural(format!(
                        "entity '{}': variable '{}' out of order (expected '{}')",
                        e.entity,
                        s.name(),
                        v
                    )));
                }
                if s.period_index() != Some(e.periods.as_slice()) {
                    return Err(Error::Structural(format!(
                        "entity '{}': variable '{}' not aligned with the entity periods",
                        e.entity, v
                    )));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &entities {
            if !seen.insert(e.entity.as_str()) {
                return Err(Error::Structural(format!("duplicate entity '{}'", e.entity)));
            }
        }
        let balanced = entities.windows(2).all(|w| w[0].periods == w[1].periods);
        Ok(Self {
            variables,
            entities,
            balanced,
        })
    }

    /// Builds a panel directly from per-entity value vectors of one variable,
    /// with periods labelled `0..T_i`.
    pub fn from_values(variable: &str, data: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let entities = data
            .into_iter()
            .map(|(entity, values)| {
                let periods: Vec<String> = (0..values.len()).map(|t| t.to_string()).collect();
                let series = Series::with_index(variable, values, periods.clone())?;
                Ok(EntityData {
                    entity,
                    periods,
                    series: vec![series],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Panel::new(vec![variable.to_string()], entities)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn entities(&self) -> &[EntityData] {
        &self.entities
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    /// Per-entity series of one variable, in entity order.
    pub fn variable(&self, name: &str) -> Result<Vec<&Series>> {
        let idx = self
            .variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Structural(format!("panel has no variable '{name}'")))?;
        Ok(self.entities.iter().map(|e| &e.series[idx]).collect())
    }
}
