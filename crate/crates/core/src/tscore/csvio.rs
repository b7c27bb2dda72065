use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{compare_periods, EntityData, Panel, Series};
use crate::error::{Error, Result};

/// Which CSV columns play which role. An empty `values` list means "every
/// column that is not the period or entity column".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default)]
    pub period: Option<String>,
    #[serde(default)]
    pub entity: Option<String>,
    #[serde(default)]
    pub values: Vec<String>,
}

impl CsvSchema {
    /// Uses the conventional `period` / `entity` columns when they exist.
    pub fn infer() -> Self {
        Self::default()
    }

    pub fn with_period(mut self, column: impl Into<String>) -> Self {
        self.period = Some(column.into());
        self
    }

    pub fn with_entity(mut self, column: impl Into<String>) -> Self {
        self.entity = Some(column.into());
        self
    }

    pub fn with_values<I, S>(mut self, columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.values = columns.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    Reject,
    DropRows,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedData {
    Series(Vec<Series>),
    Panel(Panel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub data: LoadedData,
    pub rows_dropped: usize,
}

impl Loaded {
    pub fn into_series(self) -> Result<Vec<Series>> {
        match self.data {
            LoadedData::Series(s) => Ok(s),
            LoadedData::Panel(_) => Err(Error::Structural(
                "expected a time series file, found a panel (entity column present)".into(),
            )),
        }
    }

    pub fn into_panel(self) -> Result<Panel> {
        match self.data {
            LoadedData::Panel(p) => Ok(p),
            LoadedData::Series(_) => Err(Error::Structural(
                "expected a panel file with an entity column".into(),
            )),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema, na_policy: NaPolicy) -> Result<Loaded> {
    let file = File::open(path.as_ref())?;
    read_csv(file, schema, na_policy)
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "N/A" | "NaN" | "nan" | "NAN" | ".")
}

struct Row {
    line: usize,
    period: Option<String>,
    entity: Option<String>,
    values: Vec<f64>,
}

/// Reads CSV text (header required, `#` lines ignored) into validated series
/// or a panel.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema, na_policy: NaPolicy) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let period_col = match &schema.period {
        Some(p) => Some(
            find(p).ok_or_else(|| Error::Structural(format!("period column '{p}' not found")))?,
        ),
        None => find("period"),
    };
    let entity_col = match &schema.entity {
        Some(e) => Some(
            find(e).ok_or_else(|| Error::Structural(format!("entity column '{e}' not found")))?,
        ),
        None => find("entity"),
    };
    let value_cols: Vec<usize> = if schema.values.is_empty() {
        (0..headers.len())
            .filter(|i| Some(*i) != period_col && Some(*i) != entity_col)
            .collect()
    } else {
        schema
            .values
            .iter()
            .map(|v| {
                find(v).ok_or_else(|| Error::Structural(format!("value column '{v}' not found")))
            })
            .collect::<Result<_>>()?
    };
    if value_cols.is_empty() {
        return Err(Error::Structural("no value columns in CSV".into()));
    }
    let names: Vec<String> = value_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut values = Vec::with_capacity(value_cols.len());
        let mut missing = false;
        for (&col, name) in value_cols.iter().zip(&names) {
            let cell = record.get(col).unwrap_or("");
            if is_missing(cell) {
                match na_policy {
                    NaPolicy::Reject => {
                        return Err(Error::MissingValue {
                            row: line,
                            column: name.clone(),
                        })
                    }
                    NaPolicy::DropRows => {
                        missing = true;
                        continue;
                    }
                }
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::Parse {
                        row: line,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        if missing {
            dropped += 1;
            continue;
        }
        let label = |col: Option<usize>, what: &str| -> Result<Option<String>> {
            match col {
                None => Ok(None),
                Some(c) => {
                    let cell = record.get(c).unwrap_or("").trim();
                    if cell.is_empty() {
                        Err(Error::Structural(format!("row {line}: empty {what} label")))
                    } else {
                        Ok(Some(cell.to_string()))
                    }
                }
            }
        };
        rows.push(Row {
            line,
            period: label(period_col, "period")?,
            entity: label(entity_col, "entity")?,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::Structural("CSV contains no usable rows".into()));
    }

    let data = if entity_col.is_some() {
        LoadedData::Panel(assemble_panel(rows, &names)?)
    } else {
        LoadedData::Series(assemble_series(rows, &names)?)
    };
    Ok(Loaded {
        data,
        rows_dropped: dropped,
    })
}

fn sort_and_check(rows: &mut [Row], who: &str) -> Result<()> {
    if rows.iter().all(|r| r.period.is_some()) {
        rows.sort_by(|a, b| compare_periods(a.period.as_deref().unwrap(), b.period.as_deref().unwrap()));
        if let Some(w) = rows.windows(2).find(|w| w[0].period == w[1].period) {
            return Err(Error::Structural(format!(
                "duplicate period {:?}{} (rows {} and {})",
                w[0].period.as_deref().unwrap(),
                who,
                w[0].line,
                w[1].line
            )));
        }
    }
    Ok(())
}

fn columns_of(rows: &[Row], names: &[String]) -> Result<Vec<Series>> {
    let periods: Option<Vec<String>> = rows.iter().map(|r| r.period.clone()).collect();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let values = rows.iter().map(|r| r.values[j]).collect();
            match &periods {
                Some(p) => Series::with_index(name.clone(), values, p.clone()),
                None => Series::new(name.clone(), values),
            }
        })
        .collect()
}

fn assemble_series(mut rows: Vec<Row>, names: &[String]) -> Result<Vec<Series>> {
    sort_and_check(&mut rows, "")?;
    columns_of(&rows, names)
}

fn assemble_panel(rows: Vec<Row>, names: &[String]) -> Result<Panel> {
    if rows.iter().any(|r| r.period.is_none()) {
        return Err(Error::Structural(
            "panel CSV requires a period column to align entities".into(),
        ));
    }
    // entity order follows first appearance in the file
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for r in rows {
        let e = r.entity.clone().unwrap();
        if !groups.contains_key(&e) {
            order.push(e.clone());
        }
        groups.entry(e).or_default().push(r);
    }
    let mut entities = Vec::with_capacity(order.len());
    for e in order {
        let mut rows = groups.remove(&e).unwrap();
        sort_and_check(&mut rows, &format!(" for entity '{e}'"))?;
        let periods = rows.iter().map(|r| r.period.clone().unwrap()).collect();
        entities.push(EntityData {
            entity: e,
            periods,
            series: columns_of(&rows, names)?,
        });
    }
    Panel::new(names.to_vec(), entities)
}

/// Writes series (and panels) back as CSV using shortest round-trip float
/// formatting, so `load_csv(write_csv(x))` reproduces every value exactly.
pub fn write_csv<W: Write>(writer: W, data: &LoadedData) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match data {
        LoadedData::Series(series) => {
            let first = series
                .first()
                .ok_or_else(|| Error::Structural("nothing to write".into()))?;
            if series.iter().any(|s| s.len() != first.len()) {
                return Err(Error::Structural("series of unequal length".into()));
            }
            let index = first.period_index();
            let mut header: Vec<String> = Vec::new();
            if index.is_some() {
                header.push("period".into());
            }
            header.extend(series.iter().map(|s| s.name().to_string()));
            w.write_record(&header)?;
            for t in 0..first.len() {
                let mut rec: Vec<String> = Vec::with_capacity(header.len());
                if let Some(p) = index {
                    rec.push(p[t].clone());
                }
                rec.extend(series.iter().map(|s| format!("{:?}", s.values()[t])));
                w.write_record(&rec)?;
            }
        }
        LoadedData::Panel(panel) => {
            let mut header = vec!["entity".to_string(), "period".to_string()];
            header.extend(panel.variables().iter().cloned());
            w.write_record(&header)?;
            for e in panel.entities() {
                for (t, p) in e.periods.iter().enumerate() {
                    let mut rec = vec![e.entity.clone(), p.clone()];
                    rec.extend(e.series.iter().map(|s| format!("{:?}", s.values()[t])));
                    w.write_record(&rec)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
