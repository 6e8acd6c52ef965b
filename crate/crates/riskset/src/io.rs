//! File formats: score CSVs, threshold JSON documents and predicted-set CSVs.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use riskset_core::{ClassSet, EvalSummary, LabeledDataset, ScoreMatrix};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

pub const MEMBERSHIP: &str = "strict_greater";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] riskset_core::Error),
}

impl IoError {
    fn format(path: &Path, message: impl fmt::Display) -> Self {
        IoError::Format { path: path.to_path_buf(), message: message.to_string() }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|e| IoError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|e| IoError::io(path, e))
}

/// 17 significant digits, enough to round-trip any binary64 value.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => IoError::io(path, source),
            _ => unreachable!(),
        }
    } else {
        IoError::format(path, e)
    }
}

pub fn read_dataset_from(reader: impl Read, path: &Path) -> Result<LabeledDataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let k = header.len().saturating_sub(1);
    let expected: Vec<String> = (0..k).map(|c| format!("s{c}")).chain(["y".to_string()]).collect();
    if k < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::format(
            path,
            format!(
                "header must read s0,...,s{{K-1}},y with K >= 2, got '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = line + 1;
        for cell in rec.iter().take(k) {
            let v: f64 = cell.parse().map_err(|_| IoError::format(path, format!("row {row}: bad score '{cell}'")))?;
            values.push(v);
        }
        let y = &rec[k];
        labels.push(y.parse::<usize>().map_err(|_| IoError::format(path, format!("row {row}: bad label '{y}'")))?);
    }
    let n = labels.len();
    let scores = ScoreMatrix::new(n, k, values)?;
    Ok(LabeledDataset::new(scores, labels)?)
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset, IoError> {
    read_dataset_from(open(path)?, path)
}

pub fn write_dataset_to(data: &LabeledDataset, mut w: impl Write) -> io::Result<()> {
    let k = data.n_classes();
    let header: Vec<String> = (0..k).map(|c| format!("s{c}")).chain(["y".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (row, y) in data.scores().rows().zip(data.labels()) {
        for v in row {
            write!(w, "{},", format_f64(*v))?;
        }
        writeln!(w, "{y}")?;
    }
    w.flush()
}

pub fn write_dataset(data: &LabeledDataset, path: &Path) -> Result<(), IoError> {
    write_dataset_to(data, create(path)?).map_err(|e| IoError::io(path, e))
}

/// Serializes thresholds as numbers, with `"-inf"` / `"+inf"` for the sentinels.
pub fn serialize_thresholds<S: Serializer>(t: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for &v in t {
        if v == f64::NEG_INFINITY {
            seq.serialize_element("-inf")?;
        } else if v == f64::INFINITY {
            seq.serialize_element("+inf")?;
        } else {
            seq.serialize_element(&v)?;
        }
    }
    seq.end()
}

fn deserialize_thresholds<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Number(f64),
        Text(String),
    }

    struct Seq;
    impl<'de> Visitor<'de> for Seq {
        type Value = Vec<f64>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an array of numbers, \"-inf\" or \"+inf\"")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
            let mut out = Vec::new();
            while let Some(e) = seq.next_element::<Entry>()? {
                out.push(match e {
                    Entry::Number(v) => v,
                    Entry::Text(s) if s == "-inf" => f64::NEG_INFINITY,
                    Entry::Text(s) if s == "+inf" || s == "inf" => f64::INFINITY,
                    Entry::Text(s) => return Err(de::Error::custom(format!("bad threshold '{s}'"))),
                });
            }
            Ok(out)
        }
    }
    d.deserialize_seq(Seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Scrib,
    ScribMinus,
    Label,
    /// Maximum-score rejection; every threshold entry holds the confidence cut.
    Sgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKindName {
    Class,
    Overall,
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub loss: Option<f64>,
    pub risk: Vec<f64>,
    /// Per-class mis-coverage on the calibration data.
    pub miscoverage: Vec<f64>,
    pub chance_ambiguity: f64,
    pub size_ambiguity: f64,
    pub overall_risk: f64,
    pub n_certain: usize,
    pub restarts_used: usize,
    pub restart_losses: Vec<f64>,
    pub neighborhood_sampled: bool,
    pub neighborhood_improved: bool,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn from_summary(s: &EvalSummary, loss: Option<f64>) -> Self {
        Diagnostics {
            loss,
            risk: s.risk.clone(),
            miscoverage: s.miscoverage.clone(),
            chance_ambiguity: s.chance_ambiguity,
            size_ambiguity: s.size_ambiguity,
            overall_risk: s.overall_risk,
            n_certain: s.n_certain,
            restarts_used: 0,
            restart_losses: Vec::new(),
            neighborhood_sampled: false,
            neighborhood_improved: false,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFile {
    pub k: usize,
    pub method: Method,
    #[serde(serialize_with = "serialize_thresholds", deserialize_with = "deserialize_thresholds")]
    pub thresholds: Vec<f64>,
    pub membership: String,
    pub loss_kind: LossKindName,
    pub targets: Vec<f64>,
    pub lambda: Vec<f64>,
    pub seed: Option<u64>,
    pub diagnostics: Diagnostics,
}

impl ThresholdFile {
    pub fn validate(&self, path: &Path) -> Result<(), IoError> {
        if self.membership != MEMBERSHIP {
            return Err(IoError::format(path, format!("membership must be '{MEMBERSHIP}', got '{}'", self.membership)));
        }
        if self.thresholds.len() != self.k {
            return Err(IoError::format(path, format!("{} thresholds for k = {}", self.thresholds.len(), self.k)));
        }
        if self.thresholds.iter().any(|t| t.is_nan()) {
            return Err(IoError::format(path, "thresholds must not be NaN"));
        }
        Ok(())
    }

    /// Predicted set of one score row.
    pub fn predict(&self, row: &[f64]) -> ClassSet {
        match self.method {
            Method::Sgr => riskset_core::baselines::sgr_predict_set(row, self.thresholds[0]),
            _ => riskset_core::eval::predict_set(
                row,
                &riskset_core::ThresholdVector::new(self.thresholds.clone()).expect("validated"),
            )
            .expect("validated length"),
        }
    }
}

pub fn read_thresholds(path: &Path) -> Result<ThresholdFile, IoError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| IoError::io(path, e))?;
    let file: ThresholdFile = serde_json::from_str(&text).map_err(|e| IoError::format(path, e))?;
    file.validate(path)?;
    Ok(file)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| IoError::format(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| IoError::io(path, e))
}

pub fn write_sets_to(sets: &[ClassSet], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "row,set,cardinality")?;
    for (i, s) in sets.iter().enumerate() {
        let ids: Vec<String> = s.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{i},{},{}", ids.join("|"), s.len())?;
    }
    w.flush()
}

pub fn write_sets(sets: &[ClassSet], path: &Path) -> Result<(), IoError> {
    write_sets_to(sets, create(path)?).map_err(|e| IoError::io(path, e))
}

/// Reads a predicted-set CSV back into sets.
pub fn read_sets(path: &Path) -> Result<Vec<ClassSet>, IoError> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != 3 || rec[0].parse::<usize>().ok() != Some(out.len()) {
            return Err(IoError::format(path, format!("bad record at row {}", out.len())));
        }
        let mut set = ClassSet::EMPTY;
        if !rec[1].is_empty() {
            for id in rec[1].split('|') {
                let c: usize = id.parse().map_err(|_| IoError::format(path, format!("bad class id '{id}'")))?;
                if c >= riskset_core::MAX_CLASSES {
                    return Err(IoError::format(path, format!("class id {c} out of range")));
                }
                set.insert(c);
            }
        }
        if rec[2].parse::<usize>().ok() != Some(set.len()) {
            return Err(IoError::format(path, format!("cardinality mismatch at row {}", out.len())));
        }
        out.push(set);
    }
    Ok(out)
}

/// JSON view of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub n_rows: usize,
    pub k: usize,
    pub class_rows: Vec<usize>,
    pub sure: Vec<usize>,
    pub err: Vec<usize>,
    pub missed: Vec<usize>,
    pub risk: Vec<f64>,
    pub miscoverage: Vec<f64>,
    pub chance_ambiguity: f64,
    pub multi_ambiguity: f64,
    pub size_ambiguity: f64,
    pub overall_risk: f64,
    pub n_certain: usize,
    pub n_empty: usize,
}

impl From<&EvalSummary> for SummaryDoc {
    fn from(s: &EvalSummary) -> Self {
        let t = &s.tally;
        SummaryDoc {
            n_rows: t.n_rows,
            k: s.n_classes(),
            class_rows: t.class_rows.clone(),
            sure: t.sure.clone(),
            err: t.err.clone(),
            missed: t.missed.clone(),
            risk: s.risk.clone(),
            miscoverage: s.miscoverage.clone(),
            chance_ambiguity: s.chance_ambiguity,
            multi_ambiguity: s.multi_ambiguity,
            size_ambiguity: s.size_ambiguity,
            overall_risk: s.overall_risk,
            n_certain: s.n_certain,
            n_empty: t.n_empty,
        }
    }
}

/// Long-format CSV: `metric,class,value`, with an empty class for global metrics.
pub fn write_summary_csv(s: &SummaryDoc, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "metric,class,value")?;
    for (name, v) in [
        ("n_rows", s.n_rows as f64),
        ("chance_ambiguity", s.chance_ambiguity),
        ("multi_ambiguity", s.multi_ambiguity),
        ("size_ambiguity", s.size_ambiguity),
        ("overall_risk", s.overall_risk),
        ("n_certain", s.n_certain as f64),
        ("n_empty", s.n_empty as f64),
    ] {
        writeln!(w, "{name},,{v:?}")?;
    }
    for c in 0..s.k {
        for (name, v) in [
            ("class_rows", s.class_rows[c] as f64),
            ("sure", s.sure[c] as f64),
            ("err", s.err[c] as f64),
            ("missed", s.missed[c] as f64),
            ("risk", s.risk[c]),
            ("miscoverage", s.miscoverage[c]),
        ] {
            writeln!(w, "{name},{c},{v:?}")?;
        }
    }
    w.flush()
}
