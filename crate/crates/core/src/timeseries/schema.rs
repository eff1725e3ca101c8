//! `key = value` schema files mapping logical names onto CSV columns.
//!
//! Lines starting with `#` and blank lines are ignored. Keys may contain
//! spaces (`label.strong increase = 3`).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key = value` lines, preserving order.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(format!("{origin}:{}", lineno + 1), "expected `key = value`")
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn read_schema(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, &path.display().to_string())
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Column mapping for quarterly macro files.
///
/// ```text
/// date = date
/// var.rgas = real_gas_price
/// var.core_infl = hicp_ex_gas_yoy
/// ```
///
/// With no `var.*` entries every non-date column is loaded under its header
/// name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroSchema {
    pub date_column: String,
    pub variables: Vec<(String, String)>,
}

impl Default for MacroSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            variables: Vec::new(),
        }
    }
}

impl MacroSchema {
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut schema = MacroSchema::default();
        for (key, value) in pairs {
            if key == "date" {
                schema.date_column = value.clone();
            } else if let Some(name) = key.strip_prefix("var.") {
                schema.variables.push((name.trim().to_string(), value.clone()));
            } else {
                return Err(Error::Schema(format!("unknown macro schema key `{key}`")));
            }
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_pairs(&read_schema(path)?)
    }
}

/// Normalizes a categorical label: lowercase, `_`/`-` as spaces, single
/// spaces.
pub fn normalize_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Default label map for the 7-point signed intensity scale.
pub fn default_labels() -> BTreeMap<String, i8> {
    let mut m = BTreeMap::new();
    for (word, code) in [("strong", 3), ("medium", 2), ("modest", 1)] {
        m.insert(format!("{word} increase"), code);
        m.insert(format!("{word} decrease"), -code);
    }
    m.insert("no change".into(), 0);
    m
}

/// Column mapping for firm-level survey panels.
///
/// ```text
/// wave = wave
/// firm = firm_id
/// forecast = infl_exp_12m
/// informed = informed
/// factors = raw_materials, labor_cost, demand
/// label.forte aumento = 3
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct FirmSchema {
    pub wave_column: String,
    pub firm_column: String,
    pub forecast_column: Option<String>,
    pub informed_column: Option<String>,
    /// Empty means "every column not claimed by another key".
    pub factors: Vec<String>,
    pub labels: BTreeMap<String, i8>,
}

impl Default for FirmSchema {
    fn default() -> Self {
        Self {
            wave_column: "wave".into(),
            firm_column: "firm".into(),
            forecast_column: Some("forecast".into()),
            informed_column: Some("informed".into()),
            factors: Vec::new(),
            labels: default_labels(),
        }
    }
}

impl FirmSchema {
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut schema = FirmSchema::default();
        for (key, value) in pairs {
            match key.as_str() {
                "wave" => schema.wave_column = value.clone(),
                "firm" => schema.firm_column = value.clone(),
                "forecast" => {
                    schema.forecast_column = (!value.is_empty()).then(|| value.clone())
                }
                "informed" => {
                    schema.informed_column = (!value.is_empty()).then(|| value.clone())
                }
                "factors" => schema.factors = split_list(value),
                other => {
                    let Some(label) = other.strip_prefix("label.") else {
                        return Err(Error::Schema(format!("unknown panel schema key `{other}`")));
                    };
                    let code: i8 = value.parse().map_err(|_| {
                        Error::Schema(format!("label `{label}` has non-integer code `{value}`"))
                    })?;
                    if !(-3..=3).contains(&code) {
                        return Err(Error::Schema(format!(
                            "label `{label}` code {code} outside -3..=3"
                        )));
                    }
                    schema.labels.insert(normalize_label(label), code);
                }
            }
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_pairs(&read_schema(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_with_spaces_and_comments() {
        let text = "# comment\nwave = w\n\nlabel.Strong_Increase = 3\nfactors = a, b\n";
        let pairs = parse_key_values(text, "t").unwrap();
        assert_eq!(pairs.len(), 3);
        let schema = FirmSchema::from_pairs(&pairs).unwrap();
        assert_eq!(schema.wave_column, "w");
        assert_eq!(schema.factors, vec!["a", "b"]);
        assert_eq!(schema.labels["strong increase"], 3);
    }

    #[test]
    fn rejects_out_of_scale_label() {
        let pairs = parse_key_values("label.huge = 4", "t").unwrap();
        assert!(FirmSchema::from_pairs(&pairs).is_err());
    }

    #[test]
    fn macro_schema_vars() {
        let pairs = parse_key_values("date = q\nvar.gas = g", "t").unwrap();
        let s = MacroSchema::from_pairs(&pairs).unwrap();
        assert_eq!(s.date_column, "q");
        assert_eq!(s.variables, vec![("gas".to_string(), "g".to_string())]);
        assert!(parse_key_values("nokey", "t").is_err());
    }
}
