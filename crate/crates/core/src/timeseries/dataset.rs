use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::dates::QuarterIndex;
use super::schema::MacroSchema;
use crate::error::{Error, Result};

/// Aligned quarterly multivariate data with an explicit presence mask.
///
/// Dates are strictly increasing with no gaps and variable names are unique.
/// Masked cells hold NaN in `values` and are never read through the public
/// accessors.
#[derive(Debug, Clone)]
pub struct MacroDataset {
    dates: Vec<QuarterIndex>,
    names: Vec<String>,
    values: DMatrix<f64>,
    present: DMatrix<bool>,
}

impl MacroDataset {
    /// Builds a dataset from per-variable columns of optional values.
    pub fn from_columns(
        dates: Vec<QuarterIndex>,
        names: Vec<String>,
        columns: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if columns.len() != names.len() {
            return Err(Error::Dimension(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let t = dates.len();
        let n = names.len();
        let mut values = DMatrix::from_element(t, n, f64::NAN);
        let mut present = DMatrix::from_element(t, n, false);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != t {
                return Err(Error::Dimension(format!(
                    "column `{}` has {} rows, expected {t}",
                    names[j],
                    col.len()
                )));
            }
            for (i, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    values[(i, j)] = *v;
                    present[(i, j)] = true;
                }
            }
        }
        Self::new(dates, names, values, present)
    }

    /// Builds a fully observed dataset.
    pub fn from_matrix(dates: Vec<QuarterIndex>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let present = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self::new(dates, names, values, present)
    }

    pub fn new(
        dates: Vec<QuarterIndex>,
        names: Vec<String>,
        mut values: DMatrix<f64>,
        present: DMatrix<bool>,
    ) -> Result<Self> {
        let t = dates.len();
        let n = names.len();
        if values.shape() != (t, n) || present.shape() != (t, n) {
            return Err(Error::Dimension(format!(
                "values {:?} / mask {:?} do not match {t} dates x {n} names",
                values.shape(),
                present.shape()
            )));
        }
        check_contiguous(&dates)?;
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Duplicate(format!("variable name `{name}`")));
            }
        }
        for i in 0..t {
            for j in 0..n {
                if present[(i, j)] {
                    if !values[(i, j)].is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "non-finite value for `{}` at {}",
                            names[j], dates[i]
                        )));
                    }
                } else {
                    values[(i, j)] = f64::NAN;
                }
            }
        }
        Ok(Self {
            dates,
            names,
            values,
            present,
        })
    }

    pub fn t(&self) -> usize {
        self.dates.len()
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn dates(&self) -> &[QuarterIndex] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.present[(row, col)].then(|| self.values[(row, col)])
    }

    pub fn is_present(&self, row: usize, col: usize) -> bool {
        self.present[(row, col)]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        Some((0..self.t()).map(|i| self.get(i, j)).collect())
    }

    pub fn date_index(&self, date: QuarterIndex) -> Option<usize> {
        let first = *self.dates.first()?;
        let k = date.quarters_since(first);
        (k >= 0 && (k as usize) < self.t()).then_some(k as usize)
    }

    /// Fully observed values, or an error naming the first missing cell.
    pub fn complete_values(&self) -> Result<DMatrix<f64>> {
        for i in 0..self.t() {
            for j in 0..self.n() {
                if !self.present[(i, j)] {
                    return Err(Error::Missing(format!(
                        "`{}` at {} inside the estimation window",
                        self.names[j], self.dates[i]
                    )));
                }
            }
        }
        Ok(self.values.clone())
    }

    /// Rows with dates in `[start, end]` (either bound optional).
    pub fn window(&self, start: Option<QuarterIndex>, end: Option<QuarterIndex>) -> Result<Self> {
        let rows: Vec<usize> = (0..self.t())
            .filter(|&i| start.is_none_or(|s| self.dates[i] >= s) && end.is_none_or(|e| self.dates[i] <= e))
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidInput("window selects no observations".into()));
        }
        let values = self.values.select_rows(&rows);
        let present = self.present.select_rows(&rows);
        let dates = rows.iter().map(|&i| self.dates[i]).collect();
        Self::new(dates, self.names.clone(), values, present)
    }

    /// Keeps the named variables in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Schema(format!("unknown variable `{n}`")))
            })
            .collect::<Result<_>>()?;
        Self::new(
            self.dates.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            self.values.select_columns(&idx),
            self.present.select_columns(&idx),
        )
    }

    /// Inner join on dates; `other`'s columns are placed first.
    pub fn prepend(&self, other: &MacroDataset) -> Result<Self> {
        let start = self.dates[0].max(other.dates[0]);
        let end = (*self.dates.last().unwrap()).min(*other.dates.last().unwrap());
        if start > end {
            return Err(Error::InvalidInput("datasets do not overlap".into()));
        }
        let a = other.window(Some(start), Some(end))?;
        let b = self.window(Some(start), Some(end))?;
        let mut names = a.names.clone();
        names.extend(b.names.iter().cloned());
        let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
        for ds in [&a, &b] {
            for j in 0..ds.n() {
                columns.push((0..ds.t()).map(|i| ds.get(i, j)).collect());
            }
        }
        Self::from_columns(a.dates.clone(), names, columns)
    }

    /// Writes the canonical CSV form: `date,<names...>` with `NA` for
    /// missing cells.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write_csv(&mut out).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "date")?;
        for name in &self.names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for i in 0..self.t() {
            write!(w, "{}", self.dates[i])?;
            for j in 0..self.n() {
                match self.get(i, j) {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",NA")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

impl PartialEq for MacroDataset {
    fn eq(&self, other: &Self) -> bool {
        self.dates == other.dates
            && self.names == other.names
            && self.present == other.present
            && (0..self.t()).all(|i| (0..self.n()).all(|j| self.get(i, j) == other.get(i, j)))
    }
}

fn check_contiguous(dates: &[QuarterIndex]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] == w[0] {
            return Err(Error::Duplicate(format!("date {}", w[0])));
        }
        if w[1] != w[0].succ() {
            return Err(Error::NonContiguousDates(format!("{} followed by {}", w[0], w[1])));
        }
    }
    Ok(())
}

pub(crate) fn parse_cell(raw: &str, location: impl Fn() -> String) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(location(), format!("non-numeric cell `{raw}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(location(), format!("non-finite cell `{raw}`")));
    }
    Ok(Some(v))
}

/// Loads a quarterly CSV file. Rows may appear in any order; they are sorted
/// and must form a contiguous quarterly index.
pub fn load_macro(path: &Path, schema: Option<&MacroSchema>) -> Result<MacroDataset> {
    let default = MacroSchema::default();
    let schema = schema.unwrap_or(&default);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{col}`", path.display())))
    };
    let date_col = find(&schema.date_column)?;
    let vars: Vec<(String, usize)> = if schema.variables.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != date_col)
            .map(|(i, h)| (h.to_string(), i))
            .collect()
    } else {
        schema
            .variables
            .iter()
            .map(|(name, col)| Ok((name.clone(), find(col)?)))
            .collect::<Result<_>>()?
    };

    let mut rows: BTreeMap<QuarterIndex, Vec<Option<f64>>> = BTreeMap::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let loc = |col: &str| format!("{}:{} column `{col}`", path.display(), lineno + 2);
        let date: QuarterIndex = record
            .get(date_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::parse(loc(&schema.date_column), "malformed date"))?;
        let mut row = Vec::with_capacity(vars.len());
        for (name, col) in &vars {
            row.push(parse_cell(record.get(*col).unwrap_or(""), || loc(name))?);
        }
        if rows.insert(date, row).is_some() {
            return Err(Error::Duplicate(format!("date {date} in {}", path.display())));
        }
    }
    let dates: Vec<QuarterIndex> = rows.keys().copied().collect();
    let n = vars.len();
    let mut columns = vec![Vec::with_capacity(dates.len()); n];
    for row in rows.values() {
        for (j, v) in row.iter().enumerate() {
            columns[j].push(*v);
        }
    }
    MacroDataset::from_columns(dates, vars.into_iter().map(|(n, _)| n).collect(), columns)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path.display().to_string(), format!("{other:?}")),
    }
}
