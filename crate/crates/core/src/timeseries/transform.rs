use std::path::Path;

use super::dataset::{csv_error, parse_cell};
use super::dates::{MonthIndex, QuarterIndex};
use crate::error::{Error, Result};

/// Year-on-year percent change of a quarterly level series:
/// `100 * (x[t] / x[t-4] - 1)`. The first four entries are absent, as is
/// any entry whose level or base is missing.
pub fn yoy_change(levels: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    if levels.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "year-on-year change needs at least 5 observations, got {}",
            levels.len()
        )));
    }
    if let Some((t, v)) = levels
        .iter()
        .enumerate()
        .find_map(|(t, v)| v.filter(|v| *v <= 0.0).map(|v| (t, v)))
    {
        return Err(Error::InvalidInput(format!(
            "nonpositive level {v} at position {t} in ratio transform"
        )));
    }
    Ok((0..levels.len())
        .map(|t| {
            if t < 4 {
                return None;
            }
            match (levels[t], levels[t - 4]) {
                (Some(x), Some(base)) => Some(100.0 * (x / base - 1.0)),
                _ => None,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub dates: Vec<MonthIndex>,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlySeries {
    pub dates: Vec<QuarterIndex>,
    pub values: Vec<Option<f64>>,
}

/// A single series at either monthly or quarterly frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum DatedSeries {
    Monthly(MonthlySeries),
    Quarterly(QuarterlySeries),
}

/// Samples a monthly series at the final month of every quarter it covers
/// (March, June, September, December). Quarterly input is returned
/// unchanged.
pub fn align_last_month(series: &DatedSeries) -> Result<QuarterlySeries> {
    let monthly = match series {
        DatedSeries::Quarterly(q) => return Ok(q.clone()),
        DatedSeries::Monthly(m) => m,
    };
    if monthly.dates.len() != monthly.values.len() {
        return Err(Error::Dimension("monthly dates and values differ in length".into()));
    }
    let mut quarters: Vec<QuarterIndex> = monthly.dates.iter().map(|m| m.quarter()).collect();
    quarters.sort();
    quarters.dedup();
    let mut out = QuarterlySeries {
        dates: Vec::with_capacity(quarters.len()),
        values: Vec::with_capacity(quarters.len()),
    };
    for q in quarters {
        let last = q.last_month();
        let value = monthly
            .dates
            .iter()
            .position(|m| *m == last)
            .and_then(|i| monthly.values[i]);
        match value {
            Some(v) => {
                out.dates.push(q);
                out.values.push(Some(v));
            }
            None => {
                return Err(Error::Missing(format!(
                    "final-month observation {last} for quarter {q}"
                )))
            }
        }
    }
    Ok(out)
}

/// Reads one column of a two-or-more column CSV whose first column holds
/// `YYYY-MM` or `YYYYQn` dates.
pub fn load_series(path: &Path, column: &str) -> Result<DatedSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Schema(format!("{}: missing column `{column}`", path.display())))?;
    let mut raw_dates = Vec::new();
    let mut values = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        raw_dates.push(record.get(0).unwrap_or("").to_string());
        values.push(parse_cell(record.get(col).unwrap_or(""), || {
            format!("{}:{}", path.display(), lineno + 2)
        })?);
    }
    let monthly = raw_dates.first().is_some_and(|d| d.contains('-'));
    if monthly {
        let dates = raw_dates
            .iter()
            .map(|d| d.parse::<MonthIndex>())
            .collect::<Result<Vec<_>>>()?;
        Ok(DatedSeries::Monthly(MonthlySeries { dates, values }))
    } else {
        let dates = raw_dates
            .iter()
            .map(|d| d.parse::<QuarterIndex>())
            .collect::<Result<Vec<_>>>()?;
        Ok(DatedSeries::Quarterly(QuarterlySeries { dates, values }))
    }
}
