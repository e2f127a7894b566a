//! CSV and JSON formats.
//!
//! Every file starts with `# key=value` metadata lines. Floats in CSV files
//! are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use dpm_rul::gibbs::PosteriorDraw;
use dpm_rul::model::{DegradationDataset, UnitPath};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const DATA_HEADER: [&str; 3] = ["unit_id", "time", "measurement"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered `key=value` pairs describing how an output was produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Self::default()
            .with("tool", "dpm-rul")
            .with("version", env!("CARGO_PKG_VERSION"))
            .with("command", command)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn comment_block(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect::<Map<_, _>>(),
        )
    }

    fn parse_comments(text: &str) -> Self {
        let entries = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| {
                let (k, v) = l.trim_start_matches('#').trim().split_once('=')?;
                Some((k.trim().to_string(), v.trim().to_string()))
            })
            .collect();
        Self { entries }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(path, line, e.to_string())
}

fn parse_f64(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("{what} {field:?} is not a number")))
}

/// Reads `unit_id,time,measurement` rows into one path per unit, in order of
/// first appearance, each sorted by time.
pub fn read_unit_paths(path: &Path) -> Result<Vec<UnitPath>> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != DATA_HEADER {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header {:?}, found {:?}",
                DATA_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    let mut points: HashMap<String, Vec<(f64, f64)>> = HashMap::new();
    let mut seen: HashMap<(String, u64), u64> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_error(
                path,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let unit = record[0].to_string();
        if unit.is_empty() {
            return Err(parse_error(path, line, "empty unit id"));
        }
        let t = parse_f64(path, line, &record[1], "time")?;
        let y = parse_f64(path, line, &record[2], "measurement")?;
        if let Some(first) = seen.insert((unit.clone(), t.to_bits()), line) {
            return Err(parse_error(
                path,
                line,
                format!(
                    "duplicate observation for unit {unit} at time {t} (first on line {first})"
                ),
            ));
        }
        if !points.contains_key(&unit) {
            order.push(unit.clone());
        }
        points.entry(unit).or_default().push((t, y));
    }
    if order.is_empty() {
        return Err(parse_error(path, 1, "no observations"));
    }
    order
        .into_iter()
        .map(|unit| {
            let mut pts = points.remove(&unit).unwrap_or_default();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (times, ys) = pts.into_iter().unzip();
            UnitPath::new(unit, times, ys).map_err(CliError::from)
        })
        .collect()
}

/// Loads a degradation CSV with every unit as a training unit.
pub fn load_degradation_csv(path: &Path, threshold: f64) -> Result<DegradationDataset> {
    Ok(DegradationDataset::new(
        read_unit_paths(path)?,
        None,
        threshold,
    )?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

/// Writes a CSV whose rows are already formatted fields.
pub fn write_csv(
    path: &Path,
    meta: &Metadata,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = meta.comment_block();
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    write_file(path, &out)
}

/// Writes `body` with a `metadata` object prepended.
pub fn write_json(path: &Path, meta: &Metadata, body: Value) -> Result<()> {
    let mut obj = Map::new();
    obj.insert("metadata".into(), meta.to_json());
    match body {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_paths_csv(path: &Path, meta: &Metadata, paths: &[UnitPath]) -> Result<()> {
    let header: Vec<String> = DATA_HEADER.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = paths
        .iter()
        .flat_map(|p| {
            p.points()
                .map(|(t, y)| vec![p.unit_id().to_string(), fmt_f64(t), fmt_f64(y)])
                .collect::<Vec<_>>()
        })
        .collect();
    write_csv(path, meta, &header, &rows)
}

/// Posterior draws with the unit ids of their slope columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawsFile {
    pub metadata: Metadata,
    pub unit_ids: Vec<String>,
    pub draws: Vec<PosteriorDraw>,
}

pub fn draws_header(unit_ids: &[String]) -> Vec<String> {
    let mut header = vec!["iter".to_string(), "alpha".to_string()];
    header.extend(unit_ids.iter().map(|id| format!("beta_{id}")));
    header.push("sigma_eps2".into());
    header
}

pub fn write_draws(
    path: &Path,
    meta: &Metadata,
    unit_ids: &[String],
    draws: &[PosteriorDraw],
) -> Result<()> {
    let rows: Vec<Vec<String>> = draws
        .iter()
        .map(|d| {
            let mut row = vec![d.iter.to_string(), fmt_f64(d.alpha)];
            row.extend(d.betas.iter().map(|&b| fmt_f64(b)));
            row.push(fmt_f64(d.sigma_eps2));
            row
        })
        .collect();
    write_csv(path, meta, &draws_header(unit_ids), &rows)
}

pub fn read_draws(path: &Path) -> Result<DrawsFile> {
    let text = read_text(path)?;
    let metadata = Metadata::parse_comments(&text);
    let mut rdr = csv_reader(&text);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = header.len();
    let valid = n >= 3
        && header[0] == "iter"
        && header[1] == "alpha"
        && header[n - 1] == "sigma_eps2"
        && header[2..n - 1].iter().all(|h| h.starts_with("beta_"));
    if !valid {
        return Err(parse_error(
            path,
            1,
            "expected header iter,alpha,beta_<id>...,sigma_eps2",
        ));
    }
    let unit_ids: Vec<String> = header[2..n - 1]
        .iter()
        .map(|h| h["beta_".len()..].to_string())
        .collect();
    let mut draws = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n {
            return Err(parse_error(
                path,
                line,
                format!("expected {n} fields, found {}", record.len()),
            ));
        }
        let iter = record[0].parse::<usize>().map_err(|_| {
            parse_error(
                path,
                line,
                format!("iteration {:?} is not an integer", &record[0]),
            )
        })?;
        let vals = (1..n)
            .map(|j| parse_f64(path, line, &record[j], &header[j]))
            .collect::<Result<Vec<f64>>>()?;
        draws.push(PosteriorDraw {
            iter,
            alpha: vals[0],
            betas: vals[1..vals.len() - 1].to_vec(),
            sigma_eps2: vals[vals.len() - 1],
            state: None,
        });
    }
    if draws.is_empty() {
        return Err(parse_error(path, 1, "no draws"));
    }
    Ok(DrawsFile {
        metadata,
        unit_ids,
        draws,
    })
}
