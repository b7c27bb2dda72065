use std::collections::BTreeSet;
use std::ops::Range;

use super::Series;
use crate::error::{Error, Result};

pub const INTERCEPT_LABEL: &str = "const";

/// A series entering a regression at a fixed shift: negative shifts are lags
/// (`x[-2]` holds `x_{t-2}`), positive shifts are leads.
#[derive(Debug, Clone, Copy)]
pub struct Regressor<'a> {
    pub series: &'a Series,
    pub shift: i64,
}

impl<'a> Regressor<'a> {
    pub fn new(series: &'a Series, shift: i64) -> Self {
        Self { series, shift }
    }

    pub fn current(series: &'a Series) -> Self {
        Self::new(series, 0)
    }

    pub fn lags(series: &'a Series, lags: impl IntoIterator<Item = usize>) -> Vec<Self> {
        lags.into_iter().map(|l| Self::new(series, -(l as i64))).collect()
    }

    pub fn leads(series: &'a Series, leads: impl IntoIterator<Item = usize>) -> Vec<Self> {
        leads.into_iter().map(|l| Self::new(series, l as i64)).collect()
    }

    pub fn label(&self) -> String {
        shift_label(self.series.name(), self.shift)
    }
}

pub fn shift_label(name: &str, shift: i64) -> String {
    match shift {
        0 => format!("{name}[0]"),
        s if s > 0 => format!("{name}[+{s}]"),
        s => format!("{name}[{s}]"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignColumn {
    pub label: String,
    pub values: Vec<f64>,
}

/// Regressors and dependent variable aligned row-wise. Row `i` corresponds to
/// source period `rows_dropped_head + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<DesignColumn>,
    target_label: String,
    target: Vec<f64>,
    rows_dropped_head: usize,
    rows_dropped_tail: usize,
    source_len: usize,
}

impl DesignMatrix {
    /// Assembles a design from already aligned columns.
    pub fn from_parts(
        target_label: impl Into<String>,
        target: Vec<f64>,
        columns: Vec<DesignColumn>,
        rows_dropped_head: usize,
        rows_dropped_tail: usize,
        source_len: usize,
    ) -> Result<Self> {
        let n = target.len();
        if rows_dropped_head + rows_dropped_tail + n != source_len {
            return Err(Error::Structural(format!(
                "design rows ({n}) + dropped ({rows_dropped_head}+{rows_dropped_tail}) != source length {source_len}"
            )));
        }
        let mut labels = BTreeSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::Structural(format!(
                    "column '{}' has {} rows, target has {n}",
                    c.label,
                    c.values.len()
                )));
            }
            if !labels.insert(c.label.as_str()) {
                return Err(Error::Structural(format!("duplicate column label '{}'", c.label)));
            }
        }
        if n < columns.len() + 1 {
            return Err(Error::InsufficientSample(format!(
                "{n} usable rows for {} columns",
                columns.len()
            )));
        }
        Ok(Self {
            columns,
            target_label: target_label.into(),
            target,
            rows_dropped_head,
            rows_dropped_tail,
            source_len,
        })
    }

    pub fn columns(&self) -> &[DesignColumn] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    pub fn rows_dropped_head(&self) -> usize {
        self.rows_dropped_head
    }

    pub fn rows_dropped_tail(&self) -> usize {
        self.rows_dropped_tail
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// Source periods covered by the rows of this design.
    pub fn row_range(&self) -> Range<usize> {
        self.rows_dropped_head..self.source_len - self.rows_dropped_tail
    }

    pub fn labels(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.label == label)
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.column_index(label).map(|i| self.columns[i].values.as_slice())
    }

    /// Restricts the rows to the source periods in `window` (intersected with
    /// the current rows).
    pub fn restrict(&self, window: Range<usize>) -> Result<DesignMatrix> {
        let own = self.row_range();
        let start = own.start.max(window.start);
        let end = own.end.min(window.end);
        if start >= end {
            return Err(Error::InsufficientSample(format!(
                "rows {own:?} do not intersect {window:?}"
            )));
        }
        let lo = start - own.start;
        let hi = end - own.start;
        DesignMatrix::from_parts(
            self.target_label.clone(),
            self.target[lo..hi].to_vec(),
            self.columns
                .iter()
                .map(|c| DesignColumn {
                    label: c.label.clone(),
                    values: c.values[lo..hi].to_vec(),
                })
                .collect(),
            start,
            self.source_len - end,
            self.source_len,
        )
    }

    /// Same rows with the column set replaced.
    pub fn with_columns(&self, columns: Vec<DesignColumn>) -> Result<DesignMatrix> {
        DesignMatrix::from_parts(
            self.target_label.clone(),
            self.target.clone(),
            columns,
            self.rows_dropped_head,
            self.rows_dropped_tail,
            self.source_len,
        )
    }
}

/// Builds the regression of `target_{t+horizon}` on the shifted regressors.
///
/// Rows lost at the head equal the longest lag; rows lost at the tail equal
/// `horizon + max lead`.
pub fn build_design(
    target: &Series,
    horizon: usize,
    regressors: &[Regressor<'_>],
    include_intercept: bool,
) -> Result<DesignMatrix> {
    let len = target.len();
    for r in regressors {
        if r.series.len() != len {
            return Err(Error::Structural(format!(
                "regressor '{}' has length {}, target '{}' has length {len}",
                r.series.name(),
                r.series.len(),
                target.name()
            )));
        }
    }
    let rows = usable_window(len, horizon, regressors)?;
    let (head, tail) = (rows.start, len - rows.end);

    let mut columns = Vec::with_capacity(regressors.len() + include_intercept as usize);
    if include_intercept {
        columns.push(DesignColumn {
            label: INTERCEPT_LABEL.to_string(),
            values: vec![1.0; rows.len()],
        });
    }
    for r in regressors {
        let start = (rows.start as i64 + r.shift) as usize;
        let end = (rows.end as i64 + r.shift) as usize;
        columns.push(DesignColumn {
            label: r.label(),
            values: r.series.values()[start..end].to_vec(),
        });
    }
    let target_values = target.values()[rows.start + horizon..rows.end + horizon].to_vec();
    DesignMatrix::from_parts(
        format!("{}[t+{horizon}]", target.name()),
        target_values,
        columns,
        head,
        tail,
        len,
    )
}

/// Source periods `t` for which the target at `t + horizon` and every shifted
/// regressor exist.
pub fn usable_window(len: usize, horizon: usize, regressors: &[Regressor<'_>]) -> Result<Range<usize>> {
    let max_lag = regressors.iter().map(|r| (-r.shift).max(0) as usize).max().unwrap_or(0);
    let max_lead = regressors.iter().map(|r| r.shift.max(0) as usize).max().unwrap_or(0);
    let tail = horizon + max_lead;
    if max_lag + tail >= len {
        return Err(Error::InsufficientSample(format!(
            "lags {max_lag} + leads {max_lead} + horizon {horizon} exhaust series of length {len}"
        )));
    }
    Ok(max_lag..len - tail)
}

/// Restricts every design to the rows all of them share.
pub fn trim_common_sample(designs: &[DesignMatrix]) -> Result<Vec<DesignMatrix>> {
    let first = designs
        .first()
        .ok_or_else(|| Error::InsufficientSample("no designs to trim".into()))?;
    if designs.iter().any(|d| d.source_len != first.source_len) {
        return Err(Error::Structural(
            "designs were built from series of different lengths".into(),
        ));
    }
    let start = designs.iter().map(|d| d.row_range().start).max().unwrap();
    let end = designs.iter().map(|d| d.row_range().end).min().unwrap();
    if start >= end {
        return Err(Error::InsufficientSample(
            "designs share no common rows".into(),
        ));
    }
    designs.iter().map(|d| d.restrict(start..end)).collect()
}
