use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::HarnessError;
use crate::forest::Sample;

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Reject,
    /// Median for numeric columns, most frequent value for categorical ones.
    Impute,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FeatureSpec {
    pub column: String,
    pub kind: FeatureKind,
    /// Categorical levels, coded 0, 1, ...; without them the column must already be numeric.
    #[serde(default)]
    pub levels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LabelSpec {
    pub column: String,
    /// Numeric labels strictly above this value are positive.
    #[serde(default)]
    pub positive_above: Option<f64>,
    #[serde(default)]
    pub positive: Vec<String>,
    #[serde(default)]
    pub negative: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub file: PathBuf,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
    /// Records per data island when the experiment does not set one.
    #[serde(default)]
    pub shard_size: Option<usize>,
    pub label: LabelSpec,
    pub features: Vec<FeatureSpec>,
}

fn default_missing_tokens() -> Vec<String> {
    vec!["?".into(), String::new()]
}

impl DatasetSchema {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let schema: Self = toml::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        if schema.features.is_empty() {
            return Err(HarnessError::Schema("no feature columns".into()));
        }
        if schema.label.positive_above.is_none() && schema.label.positive.is_empty() {
            return Err(HarnessError::Schema("label needs positive_above or a positive list".into()));
        }
        Ok(schema)
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub default_shard_size: Option<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Records with features rounded to fixed point at `scale`.
    pub fn samples(&self, scale: i64) -> Vec<Sample> {
        self.rows
            .iter()
            .zip(&self.labels)
            .map(|(row, &label)| Sample {
                features: row.iter().map(|&x| (x * scale as f64).round_ties_even() as i64).collect(),
                label,
            })
            .collect()
    }
}

/// Loads `<dir>/<name>.toml` and the CSV it names (relative to `dir`).
pub fn load_named(dir: &Path, name: &str) -> Result<Dataset, HarnessError> {
    let schema_path = dir.join(format!("{name}.toml"));
    let text = fs::read_to_string(&schema_path).map_err(|e| HarnessError::io(&schema_path, e))?;
    let schema = DatasetSchema::from_toml(&text)?;
    load_dataset(&dir.join(&schema.file), &schema)
}

pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<Dataset, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Data(format!("missing column {name:?}")))
    };
    let label_col = column(&schema.label.column)?;
    let feature_cols = schema.features.iter().map(|f| column(&f.column)).collect::<Result<Vec<_>, _>>()?;

    let mut raw: Vec<Vec<Option<f64>>> = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::Data(format!("row {}: {e}", line + 2)))?;
        let row_err = |msg: String| HarnessError::Data(format!("row {}: {msg}", line + 2));
        let label_text = record.get(label_col).ok_or_else(|| row_err("short row".into()))?;
        labels.push(parse_label(&schema.label, label_text).map_err(row_err)?);
        let mut values = Vec::with_capacity(feature_cols.len());
        for (spec, &col) in schema.features.iter().zip(&feature_cols) {
            let text = record.get(col).ok_or_else(|| row_err("short row".into()))?;
            if schema.missing_tokens.iter().any(|t| t == text) {
                if schema.missing == MissingPolicy::Reject {
                    return Err(row_err(format!("missing value in {}", spec.column)));
                }
                values.push(None);
            } else {
                values.push(Some(parse_feature(spec, text).map_err(row_err)?));
            }
        }
        raw.push(values);
    }
    if raw.is_empty() {
        return Err(HarnessError::Data(format!("{} has no records", path.display())));
    }

    let fill: Vec<f64> = schema
        .features
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let present: Vec<f64> = raw.iter().filter_map(|r| r[j]).collect();
            if present.is_empty() {
                return Err(HarnessError::Data(format!("column {} has no values", spec.column)));
            }
            Ok(match spec.kind {
                FeatureKind::Numeric => median(present),
                FeatureKind::Categorical => mode(&present),
            })
        })
        .collect::<Result<_, _>>()?;
    let rows = raw
        .into_iter()
        .map(|r| r.into_iter().enumerate().map(|(j, v)| v.unwrap_or(fill[j])).collect())
        .collect();
    Ok(Dataset {
        name: schema.name.clone(),
        feature_names: schema.features.iter().map(|f| f.column.clone()).collect(),
        rows,
        labels,
        default_shard_size: schema.shard_size,
    })
}

fn parse_label(spec: &LabelSpec, text: &str) -> Result<i8, String> {
    if spec.positive.iter().any(|p| p == text) {
        return Ok(1);
    }
    if spec.negative.iter().any(|n| n == text) {
        return Ok(-1);
    }
    if let Some(cut) = spec.positive_above {
        let v: f64 = text.parse().map_err(|_| format!("unknown label {text:?}"))?;
        return Ok(if v > cut { 1 } else { -1 });
    }
    Err(format!("unknown label {text:?}"))
}

fn parse_feature(spec: &FeatureSpec, text: &str) -> Result<f64, String> {
    match &spec.levels {
        Some(levels) => levels
            .iter()
            .position(|l| l == text)
            .map(|i| i as f64)
            .ok_or_else(|| format!("unknown level {text:?} in {}", spec.column)),
        None => {
            let v: f64 = text.parse().map_err(|_| format!("non-numeric {text:?} in {}", spec.column))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value in {}", spec.column))
            }
        }
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Most frequent value; ties go to the smallest.
fn mode(values: &[f64]) -> f64 {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &v in values {
        counts.entry(order_key(v)).or_insert((v, 0)).1 += 1;
    }
    let mut best = (f64::NAN, 0);
    for (v, c) in counts.into_values() {
        if c > best.1 {
            best = (v, c);
        }
    }
    best.0
}

/// Maps a float to a key whose integer order matches numeric order.
fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
name = "toy"
file = "toy.csv"
missing = "impute"

[label]
column = "y"
positive = ["yes"]
negative = ["no"]

[[features]]
column = "a"
kind = "numeric"

[[features]]
column = "b"
kind = "categorical"
levels = ["lo", "hi"]
"#;

    fn load(csv_text: &str, schema: &str) -> Result<Dataset, HarnessError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        fs::write(&path, csv_text).unwrap();
        load_dataset(&path, &DatasetSchema::from_toml(schema).unwrap())
    }

    #[test]
    fn imputes_median_and_mode() {
        let ds = load("a,b,y\n1,lo,yes\n?,hi,no\n5,hi,no\n4,?,yes\n", SCHEMA).unwrap();
        assert_eq!(ds.labels, vec![1, -1, -1, 1]);
        assert_eq!(ds.rows[1][0], 4.0);
        assert_eq!(ds.rows[3][1], 1.0);
    }

    #[test]
    fn rejects_missing_when_asked() {
        let strict = SCHEMA.replace("missing = \"impute\"", "missing = \"reject\"");
        assert!(load("a,b,y\n?,lo,yes\n", &strict).is_err());
    }

    #[test]
    fn unknown_label_and_level_fail() {
        assert!(load("a,b,y\n1,lo,maybe\n", SCHEMA).is_err());
        assert!(load("a,b,y\n1,mid,yes\n", SCHEMA).is_err());
    }

    #[test]
    fn empty_file_fails() {
        assert!(load("", SCHEMA).is_err());
        assert!(load("a,b,y\n", SCHEMA).is_err());
    }

    #[test]
    fn fixed_point_rounding() {
        let ds = load("a,b,y\n2.3456,lo,yes\n-0.0005,hi,no\n", SCHEMA).unwrap();
        let s = ds.samples(1000);
        assert_eq!(s[0].features, vec![2346, 0]);
        assert_eq!(s[1].features, vec![0, 1000]);
    }

    #[test]
    fn mode_prefers_smallest_on_ties() {
        assert_eq!(mode(&[3.0, 1.0, 3.0, 1.0, -2.0]), 1.0);
        assert_eq!(mode(&[-1.0, -1.0, 2.0]), -1.0);
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
