use std::collections::HashSet;
use std::path::Path;

use super::dataset::{csv_error, parse_cell};
use super::dates::QuarterIndex;
use super::schema::{normalize_label, FirmSchema};
use crate::error::{Error, Result};

/// One firm's answers in one survey wave.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmRecord {
    pub wave: QuarterIndex,
    pub firm: String,
    /// Signed intensities in `-3..=3`, one slot per panel factor.
    pub intensities: Vec<Option<i8>>,
    /// Point inflation forecast in percent.
    pub forecast: Option<f64>,
    pub informed: bool,
}

/// Firm-level survey responses, sorted by (wave, firm).
#[derive(Debug, Clone, PartialEq)]
pub struct FirmPanel {
    factors: Vec<String>,
    records: Vec<FirmRecord>,
}

impl FirmPanel {
    pub fn new(factors: Vec<String>, mut records: Vec<FirmRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if r.intensities.len() != factors.len() {
                return Err(Error::Dimension(format!(
                    "record for firm `{}` in {} has {} intensities, expected {}",
                    r.firm,
                    r.wave,
                    r.intensities.len(),
                    factors.len()
                )));
            }
            if let Some(bad) = r.intensities.iter().flatten().find(|v| !(-3..=3).contains(*v)) {
                return Err(Error::InvalidInput(format!(
                    "intensity {bad} outside the -3..=3 scale (firm `{}`, {})",
                    r.firm, r.wave
                )));
            }
            if !seen.insert((r.wave, r.firm.clone())) {
                return Err(Error::Duplicate(format!("firm `{}` in wave {}", r.firm, r.wave)));
            }
        }
        records.sort_by(|a, b| (a.wave, &a.firm).cmp(&(b.wave, &b.firm)));
        Ok(Self { factors, records })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn records(&self) -> &[FirmRecord] {
        &self.records
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f == name)
    }

    /// Distinct waves in increasing order.
    pub fn waves(&self) -> Vec<QuarterIndex> {
        let mut w: Vec<QuarterIndex> = self.records.iter().map(|r| r.wave).collect();
        w.dedup();
        w
    }

    /// Records grouped by wave, in wave order.
    pub fn by_wave(&self) -> impl Iterator<Item = (QuarterIndex, &[FirmRecord])> {
        self.records
            .chunk_by(|a, b| a.wave == b.wave)
            .map(|chunk| (chunk[0].wave, chunk))
    }

    pub fn informed_only(&self) -> Self {
        Self {
            factors: self.factors.clone(),
            records: self.records.iter().filter(|r| r.informed).cloned().collect(),
        }
    }
}

fn parse_intensity(raw: &str, schema: &FirmSchema, loc: impl Fn() -> String) -> Result<Option<i8>> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    if let Ok(code) = raw.parse::<i64>() {
        if !(-3..=3).contains(&code) {
            return Err(Error::InvalidInput(format!(
                "{}: intensity {code} outside the -3..=3 scale",
                loc()
            )));
        }
        return Ok(Some(code as i8));
    }
    schema
        .labels
        .get(&normalize_label(raw))
        .copied()
        .map(Some)
        .ok_or_else(|| Error::parse(loc(), format!("unknown intensity label `{raw}`")))
}

fn parse_flag(raw: &str, loc: impl Fn() -> String) -> Result<bool> {
    match raw.trim().to_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        other => Err(Error::parse(loc(), format!("invalid boolean `{other}`"))),
    }
}

/// Loads a firm-level survey CSV. Categorical cells may hold a label from the
/// schema's label map or an integer code in `-3..=3`.
pub fn load_firm_panel(path: &Path, schema: &FirmSchema) -> Result<FirmPanel> {
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
    let wave_col = find(&schema.wave_column)?;
    let firm_col = find(&schema.firm_column)?;
    let forecast_col = schema.forecast_column.as_deref().map(find).transpose()?;
    let informed_col = schema.informed_column.as_deref().map(find).transpose()?;
    let claimed = [Some(wave_col), Some(firm_col), forecast_col, informed_col];
    let factors: Vec<(String, usize)> = if schema.factors.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed.contains(&Some(*i)))
            .map(|(i, h)| (h.to_string(), i))
            .collect()
    } else {
        schema
            .factors
            .iter()
            .map(|f| Ok((f.clone(), find(f)?)))
            .collect::<Result<_>>()?
    };

    let mut records = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let loc = |col: &str| format!("{}:{} column `{col}`", path.display(), lineno + 2);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let wave: QuarterIndex = cell(wave_col)
            .parse()
            .map_err(|_| Error::parse(loc(&schema.wave_column), "malformed wave date"))?;
        let intensities = factors
            .iter()
            .map(|(name, col)| parse_intensity(cell(*col), schema, || loc(name)))
            .collect::<Result<Vec<_>>>()?;
        let forecast = match forecast_col {
            Some(c) => parse_cell(cell(c), || loc("forecast"))?,
            None => None,
        };
        let informed = match informed_col {
            Some(c) => parse_flag(cell(c), || loc("informed"))?,
            None => true,
        };
        records.push(FirmRecord {
            wave,
            firm: cell(firm_col).to_string(),
            intensities,
            forecast,
            informed,
        });
    }
    FirmPanel::new(factors.into_iter().map(|(n, _)| n).collect(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn panel_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "wave,firm,raw_materials,demand,forecast,informed\n{body}").unwrap();
        f
    }

    #[test]
    fn maps_labels_to_scale() {
        let f = panel_file(
            "2021Q1,a,strong increase,modest decrease,2.0,1\n2021Q1,b,No_Change,-2,1.5,0\n",
        );
        let panel = load_firm_panel(f.path(), &FirmSchema::default()).unwrap();
        assert_eq!(panel.factors(), &["raw_materials", "demand"]);
        let r = &panel.records()[0];
        assert_eq!(r.intensities, vec![Some(3), Some(-1)]);
        assert_eq!(r.forecast, Some(2.0));
        assert!(r.informed);
        assert_eq!(panel.records()[1].intensities, vec![Some(0), Some(-2)]);
        assert_eq!(panel.informed_only().records().len(), 1);
    }

    #[test]
    fn rejects_out_of_scale_and_unknown() {
        let f = panel_file("2021Q1,a,4,1,2.0,1\n");
        assert!(matches!(
            load_firm_panel(f.path(), &FirmSchema::default()),
            Err(Error::InvalidInput(_))
        ));
        let f = panel_file("2021Q1,a,huge rise,1,2.0,1\n");
        assert!(matches!(
            load_firm_panel(f.path(), &FirmSchema::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_firm_wave() {
        let f = panel_file("2021Q1,a,1,1,2.0,1\n2021Q1,a,2,1,2.0,1\n");
        assert!(matches!(
            load_firm_panel(f.path(), &FirmSchema::default()),
            Err(Error::Duplicate(_))
        ));
    }

    #[test]
    fn groups_by_wave() {
        let f = panel_file("2021Q2,a,1,,2.0,1\n2021Q1,b,2,NA,,1\n2021Q1,a,3,1,2.0,1\n");
        let panel = load_firm_panel(f.path(), &FirmSchema::default()).unwrap();
        let groups: Vec<_> = panel.by_wave().map(|(w, r)| (w.to_string(), r.len())).collect();
        assert_eq!(groups, vec![("2021Q1".into(), 2), ("2021Q2".into(), 1)]);
        assert_eq!(panel.records()[0].firm, "a");
        assert_eq!(panel.records()[1].intensities[1], None);
    }
}
