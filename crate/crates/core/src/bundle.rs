//! On-disk bundles for posterior draws and identified draw sets.
//!
//! A bundle is a directory holding `meta.txt` (`key = value` lines) and
//! `draws.csv` (one row per draw, matrices flattened row-major). Floats are
//! written in shortest round-trip form, so loading restores draws exactly.
//! Draw-set bundles also hold `restrictions.txt` and, when importance
//! weighting was used, `weights.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::bvar::{BvarPosterior, BvarSpec, CovidProfile, PosteriorDraw};
use crate::error::{Error, Result};
use crate::identification::{RestrictionSet, StructuralDraw, StructuralDrawSet};
use crate::timeseries::parse_key_values;

const POSTERIOR_FORMAT: &str = "svarlab-posterior-1";
const DRAWSET_FORMAT: &str = "svarlab-drawset-1";

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn write_meta(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Meta {
    origin: String,
    map: BTreeMap<String, String>,
}

impl Meta {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let origin = path.display().to_string();
        let map = parse_key_values(&text, &origin)?.into_iter().collect();
        Ok(Self { origin, map })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Schema(format!("{}: missing key `{key}`", self.origin)))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::parse(format!("{}: {key}", self.origin), format!("cannot parse {raw:?}")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.raw(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::parse(format!("{}: {key}", self.origin), format!("cannot parse {s:?}")))
            })
            .collect()
    }

    fn expect_format(&self, format: &str) -> Result<()> {
        let found = self.raw("format")?;
        if found != format {
            return Err(Error::Schema(format!("{}: format {found:?}, expected {format:?}", self.origin)));
        }
        Ok(())
    }
}

fn flatten(m: &DMatrix<f64>, out: &mut Vec<String>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].to_string());
        }
    }
}

fn headers(prefix: &str, rows: usize, cols: usize, out: &mut Vec<String>) {
    for i in 0..rows {
        for j in 0..cols {
            out.push(format!("{prefix}_{i}_{j}"));
        }
    }
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != width {
            return Err(Error::parse(
                format!("{}:{}", path.display(), i + 2),
                format!("{} fields, expected {width}", rec.len()),
            ));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(format!("{}:{}", path.display(), i + 2), format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::parse(path.display().to_string(), e.to_string())
}

fn unflatten(values: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, values)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn save_posterior(posterior: &BvarPosterior, dir: &Path) -> Result<()> {
    prepare_dir(dir)?;
    let n = posterior.n();
    let spec = &posterior.spec;
    let k = spec.k(n);
    let covid = spec.covid.map_or_else(
        || "none".to_string(),
        |c| format!("{},{},{},{},{}", c.onset, c.s1, c.s2, c.s3, c.rho),
    );
    write_meta(
        &dir.join("meta.txt"),
        &[
            ("format", POSTERIOR_FORMAT.to_string()),
            ("names", posterior.names.join(",")),
            ("lags", spec.lags.to_string()),
            ("intercept", spec.intercept.to_string()),
            ("own_lag_mean", join(&spec.own_lag_mean)),
            ("lambda", spec.lambda.to_string()),
            ("intercept_variance", spec.intercept_variance.to_string()),
            ("prior_df", spec.prior_df.map_or_else(|| "default".to_string(), |d| d.to_string())),
            (
                "residual_variances",
                spec.residual_variances.as_deref().map_or_else(|| "estimated".to_string(), join),
            ),
            ("covid", covid),
            ("sample_start", posterior.sample.0.to_string()),
            ("sample_end", posterior.sample.1.to_string()),
            ("data_hash", posterior.data_hash.clone()),
            ("seed", posterior.seed.to_string()),
            ("first_draw", posterior.first_draw.to_string()),
            ("draws", posterior.draws.len().to_string()),
            ("log_ml", posterior.log_ml.to_string()),
        ],
    )?;
    let mut header = vec!["draw".to_string()];
    headers("b", k, n, &mut header);
    headers("sigma", n, n, &mut header);
    write_rows(
        &dir.join("draws.csv"),
        header,
        posterior.draws.iter().enumerate().map(|(i, d)| {
            let mut row = vec![i.to_string()];
            flatten(&d.coefficients, &mut row);
            flatten(&d.sigma, &mut row);
            row
        }),
    )
}

pub fn load_posterior(dir: &Path) -> Result<BvarPosterior> {
    let meta = Meta::load(&dir.join("meta.txt"))?;
    meta.expect_format(POSTERIOR_FORMAT)?;
    let names: Vec<String> = meta.list("names")?;
    let n = names.len();
    let covid = match meta.raw("covid")? {
        "none" => None,
        raw => {
            let parts: Vec<&str> = raw.split(',').collect();
            if parts.len() != 5 {
                return Err(Error::Schema(format!("{}: covid needs 5 fields", meta.origin)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(format!("{}: covid", meta.origin), format!("bad number {s:?}")))
            };
            Some(CovidProfile::new(parts[0].parse()?, num(parts[1])?, num(parts[2])?, num(parts[3])?, num(parts[4])?)?)
        }
    };
    let spec = BvarSpec {
        lags: meta.get("lags")?,
        intercept: meta.get("intercept")?,
        own_lag_mean: meta.list("own_lag_mean")?,
        lambda: meta.get("lambda")?,
        intercept_variance: meta.get("intercept_variance")?,
        prior_df: match meta.raw("prior_df")? {
            "default" => None,
            _ => Some(meta.get("prior_df")?),
        },
        residual_variances: match meta.raw("residual_variances")? {
            "estimated" => None,
            _ => Some(meta.list("residual_variances")?),
        },
        covid,
    };
    let k = spec.k(n);
    let rows = read_rows(&dir.join("draws.csv"), 1 + k * n + n * n)?;
    let expected: usize = meta.get("draws")?;
    if rows.len() != expected {
        return Err(Error::Schema(format!("{} draws on disk, metadata says {expected}", rows.len())));
    }
    let draws = rows
        .iter()
        .map(|r| PosteriorDraw {
            coefficients: unflatten(&r[1..1 + k * n], k, n),
            sigma: unflatten(&r[1 + k * n..], n, n),
        })
        .collect();
    Ok(BvarPosterior {
        draws,
        spec,
        names,
        sample: (meta.get("sample_start")?, meta.get("sample_end")?),
        data_hash: meta.raw("data_hash")?.to_string(),
        seed: meta.get("seed")?,
        first_draw: meta.get("first_draw")?,
        log_ml: meta.get("log_ml")?,
    })
}

pub fn save_drawset(set: &StructuralDrawSet, dir: &Path) -> Result<()> {
    prepare_dir(dir)?;
    let n = set.names.len();
    write_meta(
        &dir.join("meta.txt"),
        &[
            ("format", DRAWSET_FORMAT.to_string()),
            ("names", set.names.join(",")),
            ("shocks", set.shocks.join(",")),
            ("seed", set.seed.to_string()),
            ("tried", set.tried.to_string()),
            ("visited", set.visited.to_string()),
            ("accepted", set.draws.len().to_string()),
            ("weighted", set.log_weights.is_some().to_string()),
        ],
    )?;
    set.restrictions.save(&dir.join("restrictions.txt"))?;
    let mut header = vec!["draw".to_string()];
    headers("q", n, n, &mut header);
    headers("impact", n, n, &mut header);
    write_rows(
        &dir.join("draws.csv"),
        header,
        set.draws.iter().map(|d| {
            let mut row = vec![d.draw.to_string()];
            flatten(&d.rotation, &mut row);
            flatten(&d.impact, &mut row);
            row
        }),
    )?;
    if let Some(w) = &set.log_weights {
        write_rows(
            &dir.join("weights.csv"),
            vec!["log_weight".to_string()],
            w.iter().map(|v| vec![v.to_string()]),
        )?;
    }
    Ok(())
}

pub fn load_drawset(dir: &Path) -> Result<StructuralDrawSet> {
    let meta = Meta::load(&dir.join("meta.txt"))?;
    meta.expect_format(DRAWSET_FORMAT)?;
    let names: Vec<String> = meta.list("names")?;
    let n = names.len();
    let rows = read_rows(&dir.join("draws.csv"), 1 + 2 * n * n)?;
    let draws = rows
        .iter()
        .map(|r| StructuralDraw {
            draw: r[0] as usize,
            rotation: unflatten(&r[1..1 + n * n], n, n),
            impact: unflatten(&r[1 + n * n..], n, n),
        })
        .collect::<Vec<_>>();
    let accepted: usize = meta.get("accepted")?;
    if draws.len() != accepted {
        return Err(Error::Schema(format!("{} draws on disk, metadata says {accepted}", draws.len())));
    }
    let weighted: bool = meta.get("weighted")?;
    let log_weights = if weighted {
        Some(read_rows(&dir.join("weights.csv"), 1)?.into_iter().map(|r| r[0]).collect())
    } else {
        None
    };
    Ok(StructuralDrawSet {
        draws,
        shocks: meta.list("shocks")?,
        names,
        restrictions: RestrictionSet::load(&dir.join("restrictions.txt"))?,
        tried: meta.get("tried")?,
        visited: meta.get("visited")?,
        seed: meta.get("seed")?,
        log_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvar::posterior_sample;
    use crate::identification::{identify, paper_restrictions, IdentifyOptions};
    use crate::simulate::{paper_like_dgp, simulate};

    #[test]
    fn roundtrips_are_exact() {
        let mut dgp = paper_like_dgp();
        dgp.t = 100;
        let (data, _) = simulate(&dgp).unwrap();
        let spec = BvarSpec::new(2, true, 0.0, 0.3).with_covid(Some(CovidProfile::new("2020Q2".parse().unwrap(), 3.0, 2.0, 1.5, 0.7).unwrap()));
        let post = posterior_sample(&data, &spec, 30, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_posterior(&post, &dir.path().join("post")).unwrap();
        assert_eq!(load_posterior(&dir.path().join("post")).unwrap(), post);

        let opts = IdentifyOptions { target: 5, max_tries: 2000, seed: 1, importance_weights: true };
        let set = identify(&post, &paper_restrictions(), &opts).unwrap();
        save_drawset(&set, &dir.path().join("set")).unwrap();
        assert_eq!(load_drawset(&dir.path().join("set")).unwrap(), set);
    }

    #[test]
    fn wrong_format_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("meta.txt"), "format = other\n").unwrap();
        assert!(load_posterior(dir.path()).is_err());
        assert!(load_drawset(dir.path()).is_err());
    }
}
