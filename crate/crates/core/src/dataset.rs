//! Failure interval datasets: the four bundled corpora, file loading and
//! prefix segments for sequential estimation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{JmError, Result};

/// An ordered sequence of failure time intervals `x_1..x_n`.
///
/// Index `i` (1-based) is the failure number; interval `x_i` is the time
/// elapsed between failure `i-1` and failure `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureDataset {
    name: String,
    intervals: Vec<f64>,
    unit: String,
    source: Option<String>,
}

impl FailureDataset {
    pub fn new(
        name: impl Into<String>,
        intervals: Vec<f64>,
        unit: impl Into<String>,
    ) -> Result<Self> {
        if intervals.is_empty() {
            return Err(JmError::InvalidDataset("no intervals".into()));
        }
        if let Some((i, x)) = intervals
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x > 0.0))
        {
            return Err(JmError::InvalidDataset(format!(
                "interval {} is {x}; intervals must be positive and finite",
                i + 1
            )));
        }
        Ok(Self {
            name: name.into(),
            intervals,
            unit: unit.into(),
            source: None,
        })
    }

    fn with_source(mut self, source: &str) -> Self {
        self.source = Some(source.to_string());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// Where the values come from, for bundled datasets.
    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The first `k` intervals, named `<name>[1..k]`.
    pub fn prefix(&self, k: usize) -> Result<FailureDataset> {
        if k == 0 || k > self.len() {
            return Err(JmError::InvalidDataset(format!(
                "prefix length {k} out of range 1..={}",
                self.len()
            )));
        }
        if k == self.len() {
            return Ok(self.clone());
        }
        let base = self.name.split('[').next().unwrap_or(&self.name);
        Ok(FailureDataset {
            name: format!("{base}[1..{k}]"),
            intervals: self.intervals[..k].to_vec(),
            unit: self.unit.clone(),
            source: self.source.clone(),
        })
    }

    /// Cumulative failure times `t_i = x_1 + .. + x_i`.
    pub fn cumulative_times(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }
}

/// On-disk layout for external failure data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// One interval per line; `#` lines are comments.
    Plain,
    /// A single column with header `interval`.
    Csv,
}

impl DataFormat {
    /// `.csv` files are CSV, everything else plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Plain,
        }
    }
}

/// Static description of a bundled dataset.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: &'static str,
    pub len: usize,
    pub unit: &'static str,
    pub source: &'static str,
}

pub const BUILTIN_NAMES: [&str; 4] = ["ntds", "musa1", "musa2", "musa3"];

const NTDS: [f64; 31] = [
    9.0, 12.0, 11.0, 4.0, 7.0, 2.0, 5.0, 8.0, 5.0, 7.0, 1.0, 6.0, 1.0, 9.0, 4.0, 1.0, 3.0, 3.0,
    6.0, 1.0, 11.0, 33.0, 7.0, 91.0, 2.0, 1.0, 87.0, 47.0, 12.0, 9.0, 135.0,
];

const MUSA1: [f64; 17] = [
    932.0, 3103.0, 661.0, 197.0, 1476.0, 155.0, 1358.0, 288.0, 1169.0, 1061.0, 142.0, 494.0, 660.0,
    209.0, 361.0, 688.0, 1046.0,
];

const MUSA2: [f64; 15] = [
    10.0, 9.0, 13.0, 11.0, 15.0, 12.0, 18.0, 15.0, 22.0, 25.0, 19.0, 30.0, 32.0, 25.0, 40.0,
];

const MUSA3: [f64; 163] = [
    320.0, 1439.0, 9000.0, 2880.0, 5700.0, 21800.0, 26800.0, 113540.0, 112137.0, 660.0, 2700.0,
    28793.0, 2173.0, 7263.0, 10865.0, 4230.0, 8460.0, 14805.0, 11844.0, 5361.0, 6553.0, 6499.0,
    3124.0, 51323.0, 17010.0, 1890.0, 5400.0, 62313.0, 24826.0, 26355.0, 363.0, 13989.0, 15058.0,
    32377.0, 41632.0, 4160.0, 82040.0, 13189.0, 3426.0, 5833.0, 640.0, 640.0, 2880.0, 110.0,
    22080.0, 60654.0, 52163.0, 12546.0, 784.0, 10193.0, 7841.0, 31365.0, 24313.0, 298890.0, 1280.0,
    22099.0, 19150.0, 2611.0, 39170.0, 55794.0, 42632.0, 267600.0, 87074.0, 149606.0, 14400.0,
    34560.0, 39600.0, 334395.0, 296015.0, 177395.0, 214622.0, 156400.0, 166800.0, 10800.0,
    267000.0, 34513.0, 7680.0, 37667.0, 11100.0, 187200.0, 18000.0, 178200.0, 144000.0, 639200.0,
    86400.0, 288000.0, 320.0, 57600.0, 28800.0, 18000.0, 88640.0, 432000.0, 4160.0, 3200.0,
    42800.0, 43600.0, 10560.0, 115200.0, 86400.0, 57600.0, 28800.0, 432000.0, 345600.0, 115200.0,
    44494.0, 10506.0, 177240.0, 241487.0, 143028.0, 273564.0, 189391.0, 172800.0, 21600.0, 64800.0,
    302400.0, 752188.0, 86400.0, 100800.0, 19440.0, 115200.0, 64800.0, 3600.0, 230400.0, 583200.0,
    259200.0, 183600.0, 3600.0, 144000.0, 14400.0, 86400.0, 110100.0, 28800.0, 43200.0, 57600.0,
    468000.0, 950400.0, 400400.0, 883800.0, 273600.0, 432000.0, 864000.0, 202600.0, 203400.0,
    277680.0, 105000.0, 580080.0, 4533960.0, 432000.0, 1411200.0, 172800.0, 86400.0, 1123200.0,
    1555200.0, 777600.0, 1296000.0, 1872000.0, 335600.0, 921600.0, 1036800.0, 1728000.0, 777600.0,
    57600.0, 17280.0,
];

struct Builtin {
    info: DatasetInfo,
    values: &'static [f64],
}

const BUILTINS: [Builtin; 4] = [
    Builtin {
        info: DatasetInfo {
            name: "ntds",
            len: 31,
            unit: "day",
            source: "Table 1",
        },
        values: &NTDS,
    },
    Builtin {
        info: DatasetInfo {
            name: "musa1",
            len: 17,
            unit: "second",
            source: "Table 2",
        },
        values: &MUSA1,
    },
    Builtin {
        info: DatasetInfo {
            name: "musa2",
            len: 15,
            unit: "second",
            source: "Table 3",
        },
        values: &MUSA2,
    },
    Builtin {
        info: DatasetInfo {
            name: "musa3",
            len: 163,
            unit: "second",
            source: "Table 4",
        },
        values: &MUSA3,
    },
];

/// Metadata for the bundled datasets, in catalog order.
pub fn builtin_catalog() -> Vec<DatasetInfo> {
    BUILTINS.iter().map(|b| b.info.clone()).collect()
}

/// One of the bundled datasets: `ntds`, `musa1`, `musa2` or `musa3`.
pub fn builtin_dataset(name: &str) -> Result<FailureDataset> {
    let key = name.trim().to_ascii_lowercase();
    let b = BUILTINS
        .iter()
        .find(|b| b.info.name == key)
        .ok_or_else(|| JmError::UnknownDataset {
            name: name.to_string(),
            valid: BUILTIN_NAMES.join(", "),
        })?;
    Ok(
        FailureDataset::new(b.info.name, b.values.to_vec(), b.info.unit)?
            .with_source(b.info.source),
    )
}

fn unit_from_comment(line: &str) -> Option<String> {
    let body = line.trim_start().strip_prefix('#')?.trim();
    let rest = body.strip_prefix("unit:")?;
    Some(rest.trim().to_string())
}

fn parse_interval(path: &Path, line: usize, raw: &str) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| JmError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("'{}' is not a number", raw.trim()),
    })?;
    if !(value.is_finite() && value > 0.0) {
        return Err(JmError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("interval {value} is not positive"),
        });
    }
    Ok(value)
}

/// Loads failure intervals from a plain-text or CSV file.
///
/// A `# unit: <str>` comment anywhere in the file sets the unit; the
/// default is `unspecified`. The dataset is named after the file stem.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<FailureDataset> {
    let text = fs::read_to_string(path).map_err(|source| JmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let unit = text
        .lines()
        .find_map(unit_from_comment)
        .unwrap_or_else(|| "unspecified".to_string());

    let intervals = match format {
        DataFormat::Plain => {
            let mut out = Vec::new();
            for (idx, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                out.push(parse_interval(path, idx + 1, trimmed)?);
            }
            out
        }
        DataFormat::Csv => {
            let csv_err = |source| JmError::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut reader = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let column = reader
                .headers()
                .map_err(csv_err)?
                .iter()
                .position(|h| h.eq_ignore_ascii_case("interval"))
                .ok_or_else(|| JmError::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: "missing 'interval' column".into(),
                })?;
            let mut out = Vec::new();
            for record in reader.records() {
                let record = record.map_err(csv_err)?;
                let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
                let raw = record.get(column).unwrap_or("");
                out.push(parse_interval(path, line, raw)?);
            }
            out
        }
    };

    if intervals.is_empty() {
        return Err(JmError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "file contains no intervals".into(),
        });
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("external")
        .to_string();
    FailureDataset::new(name, intervals, unit)
}

/// Writes a dataset in the given format. `f64` values are written in
/// shortest round-trip form so `load_dataset` recovers them bit-exactly.
pub fn write_dataset(dataset: &FailureDataset, path: &Path, format: DataFormat) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# unit: {}", dataset.unit());
    if format == DataFormat::Csv {
        out.push_str("interval\n");
    }
    for x in dataset.intervals() {
        let _ = writeln!(out, "{x}");
    }
    fs::write(path, out).map_err(|source| JmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lengths_and_anchors() {
        let ntds = builtin_dataset("ntds").unwrap();
        assert_eq!(ntds.len(), 31);
        assert_eq!(&ntds.intervals()[..3], &[9.0, 12.0, 11.0]);
        assert_eq!(ntds.unit(), "day");

        let musa2 = builtin_dataset("musa2").unwrap();
        assert_eq!(
            musa2.intervals(),
            &[
                10.0, 9.0, 13.0, 11.0, 15.0, 12.0, 18.0, 15.0, 22.0, 25.0, 19.0, 30.0, 32.0, 25.0,
                40.0
            ]
        );

        let musa3 = builtin_dataset("musa3").unwrap();
        assert_eq!(musa3.len(), 163);
        assert_eq!(musa3.intervals()[0], 320.0);
        assert_eq!(musa3.intervals()[162], 17280.0);

        assert_eq!(builtin_dataset("musa1").unwrap().len(), 17);
    }

    #[test]
    fn unknown_builtin_lists_valid_names() {
        let err = builtin_dataset("apollo").unwrap_err().to_string();
        for name in BUILTIN_NAMES {
            assert!(err.contains(name), "{err}");
        }
    }

    #[test]
    fn prefix_segments() {
        let ntds = builtin_dataset("ntds").unwrap();
        let p26 = ntds.prefix(26).unwrap();
        assert_eq!(p26.len(), 26);
        assert_eq!(*p26.intervals().last().unwrap(), 1.0);
        assert_eq!(p26.unit(), "day");
        assert!(p26.name().contains("26"));
        assert_eq!(ntds.prefix(3).unwrap().intervals(), &[9.0, 12.0, 11.0]);
        assert_eq!(ntds.prefix(31).unwrap(), ntds);
        assert!(ntds.prefix(0).is_err());
        assert!(ntds.prefix(32).is_err());
    }

    #[test]
    fn rejects_nonpositive_intervals() {
        assert!(FailureDataset::new("x", vec![1.0, 0.0], "s").is_err());
        assert!(FailureDataset::new("x", vec![], "s").is_err());
        assert!(FailureDataset::new("x", vec![f64::NAN], "s").is_err());
    }

    #[test]
    fn load_plain_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("a.txt");
        fs::write(&plain, "9\n12\n11\n").unwrap();
        let d = load_dataset(&plain, DataFormat::Plain).unwrap();
        assert_eq!(d.intervals(), &[9.0, 12.0, 11.0]);
        assert_eq!(d.unit(), "unspecified");

        let csv_path = dir.path().join("b.csv");
        fs::write(&csv_path, "# unit: hour\ninterval\n1.5\n2.5\n").unwrap();
        let d = load_dataset(&csv_path, DataFormat::Csv).unwrap();
        assert_eq!(d.intervals(), &[1.5, 2.5]);
        assert_eq!(d.unit(), "hour");
    }

    #[test]
    fn load_reports_offending_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        fs::write(&p, "# header\n3\n0\n").unwrap();
        match load_dataset(&p, DataFormat::Plain) {
            Err(JmError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        let empty = dir.path().join("empty.txt");
        fs::write(&empty, "# nothing\n").unwrap();
        assert!(load_dataset(&empty, DataFormat::Plain).is_err());

        let csv_bad = dir.path().join("bad.csv");
        fs::write(&csv_bad, "interval\n1\n-2\n").unwrap();
        match load_dataset(&csv_bad, DataFormat::Csv) {
            Err(JmError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
