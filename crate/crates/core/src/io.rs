//! File formats.
//!
//! Datasets and predictions are UTF-8 JSON Lines: a header object on the
//! first line, then one record per line. Rankings are written as arrays of
//! label names, most preferred first. Models are a single pretty-printed
//! JSON object.
//!
//! ```text
//! {"format":"plrank-dataset","version":1,"n_classes":3,"labels":["a","b","c"],"input_dim":2}
//! {"object_id":"obj000","orientation_id":"0","labeller_id":"L00","features":[0.5,-1.25],"ranking":["b","a","c"]}
//!
//! {"format":"plrank-predictions","version":1,"n_classes":3,"labels":["a","b","c"]}
//! {"object_id":"obj000","orientation_id":"0","weights":[0.3,0.5,0.2],"ranking":["b","a","c"]}
//! ```
//!
//! Reals are written in the shortest decimal form that parses back to the
//! same `f64` and are parsed with correct rounding, so every value survives a
//! write/read cycle bit for bit. Blank lines are ignored.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pl::{Ranking, WeightVector};
use crate::ranker::{Architecture, InstancePrediction, RankerModel};
use crate::synth::{InstanceKey, LabelledInstance};

pub const DATASET_FORMAT: &str = "plrank-dataset";
pub const PREDICTIONS_FORMAT: &str = "plrank-predictions";
pub const MODEL_FORMAT: &str = "plrank-model";
pub const FORMAT_VERSION: u32 = 1;

/// Ordered class names with a reverse lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Labels {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::config("labels", "at least one label is required"));
        }
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::config("labels", format!("duplicate label `{name}`")));
            }
        }
        Ok(Labels { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn ranking_from_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Ranking> {
        if names.len() != self.len() {
            return Err(Error::InvalidRanking(format!(
                "ranking has {} labels, expected {}",
                names.len(),
                self.len()
            )));
        }
        let order = names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .ok_or_else(|| Error::InvalidRanking(format!("unknown label `{}`", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ranking::new(order)
    }

    pub fn ranking_names(&self, ranking: &Ranking) -> Vec<String> {
        ranking
            .as_slice()
            .iter()
            .map(|&c| self.names[c].clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeaderLine {
    format: String,
    version: u32,
    n_classes: usize,
    labels: Vec<String>,
    input_dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    object_id: String,
    orientation_id: String,
    labeller_id: String,
    features: Vec<f64>,
    ranking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionsHeaderLine {
    format: String,
    version: u32,
    n_classes: usize,
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionLine {
    object_id: String,
    orientation_id: String,
    weights: Vec<f64>,
    ranking: Vec<String>,
}

/// A dataset file held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labels: Labels,
    pub input_dim: usize,
    pub records: Vec<LabelledInstance>,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-blank lines with 1-based line numbers.
fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

fn check_format(line: usize, found: &str, version: u32, expected: &str) -> Result<()> {
    if found != expected {
        return Err(parse_err(
            line,
            format!("expected format `{expected}`, found `{found}`"),
        ));
    }
    if version != FORMAT_VERSION {
        return Err(parse_err(line, format!("unsupported version {version}")));
    }
    Ok(())
}

fn header_labels(line: usize, n_classes: usize, labels: Vec<String>) -> Result<Labels> {
    if labels.len() != n_classes {
        return Err(parse_err(
            line,
            format!(
                "n_classes is {n_classes} but {} labels are listed",
                labels.len()
            ),
        ));
    }
    Labels::new(labels).map_err(|e| parse_err(line, e.to_string()))
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut lines = lines(reader);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file: missing dataset header"))??;
    let header: DatasetHeaderLine = serde_json::from_str(&header)
        .map_err(|e| parse_err(line_no, format!("bad header: {e}")))?;
    check_format(line_no, &header.format, header.version, DATASET_FORMAT)?;
    let labels = header_labels(line_no, header.n_classes, header.labels)?;

    let mut records = Vec::new();
    for item in lines {
        let (line_no, text) = item?;
        let rec: RecordLine =
            serde_json::from_str(&text).map_err(|e| parse_err(line_no, e.to_string()))?;
        if rec.features.len() != header.input_dim {
            return Err(parse_err(
                line_no,
                format!(
                    "{} features, header declares input_dim {}",
                    rec.features.len(),
                    header.input_dim
                ),
            ));
        }
        let ranking = labels
            .ranking_from_names(&rec.ranking)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        records.push(LabelledInstance {
            object_id: rec.object_id,
            orientation_id: rec.orientation_id,
            labeller_id: rec.labeller_id,
            features: rec.features,
            ranking,
        });
    }
    Ok(Dataset {
        labels,
        input_dim: header.input_dim,
        records,
    })
}

pub fn write_dataset<W: Write>(mut out: W, dataset: &Dataset) -> Result<()> {
    let header = DatasetHeaderLine {
        format: DATASET_FORMAT.into(),
        version: FORMAT_VERSION,
        n_classes: dataset.n_classes(),
        labels: dataset.labels.names().to_vec(),
        input_dim: dataset.input_dim,
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for r in &dataset.records {
        if r.ranking.len() != dataset.n_classes() {
            return Err(Error::LengthMismatch {
                expected: dataset.n_classes(),
                found: r.ranking.len(),
            });
        }
        let line = RecordLine {
            object_id: r.object_id.clone(),
            orientation_id: r.orientation_id.clone(),
            labeller_id: r.labeller_id.clone(),
            features: r.features.clone(),
            ranking: dataset.labels.ranking_names(&r.ranking),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&line).expect("record serializes")
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Predictions read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub labels: Labels,
    pub predictions: Vec<InstancePrediction>,
}

pub fn write_predictions<W: Write>(
    mut out: W,
    labels: &Labels,
    predictions: &[InstancePrediction],
) -> Result<()> {
    let header = PredictionsHeaderLine {
        format: PREDICTIONS_FORMAT.into(),
        version: FORMAT_VERSION,
        n_classes: labels.len(),
        labels: labels.names().to_vec(),
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for p in predictions {
        let line = PredictionLine {
            object_id: p.key.object_id.clone(),
            orientation_id: p.key.orientation_id.clone(),
            weights: p.weights.as_slice().to_vec(),
            ranking: labels.ranking_names(&p.ranking),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&line).expect("record serializes")
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<PredictionSet> {
    let mut lines = lines(reader);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file: missing predictions header"))??;
    let header: PredictionsHeaderLine = serde_json::from_str(&header)
        .map_err(|e| parse_err(line_no, format!("bad header: {e}")))?;
    check_format(line_no, &header.format, header.version, PREDICTIONS_FORMAT)?;
    let labels = header_labels(line_no, header.n_classes, header.labels)?;

    let mut predictions = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for item in lines {
        let (line_no, text) = item?;
        let rec: PredictionLine =
            serde_json::from_str(&text).map_err(|e| parse_err(line_no, e.to_string()))?;
        let key = InstanceKey {
            object_id: rec.object_id,
            orientation_id: rec.orientation_id,
        };
        if !seen.insert(key.clone()) {
            return Err(parse_err(
                line_no,
                format!("duplicate prediction for `{key}`"),
            ));
        }
        if rec.weights.len() != labels.len() {
            return Err(parse_err(line_no, "weights length differs from n_classes"));
        }
        let weights =
            WeightVector::new(rec.weights).map_err(|e| parse_err(line_no, e.to_string()))?;
        let ranking = labels
            .ranking_from_names(&rec.ranking)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        predictions.push(InstancePrediction {
            key,
            weights,
            ranking,
        });
    }
    Ok(PredictionSet {
        labels,
        predictions,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    architecture: String,
    input_dim: usize,
    hidden_dim: usize,
    n_classes: usize,
    labels: Vec<String>,
    /// Layer by layer; each weight matrix row-major, followed by its bias.
    parameters: Vec<f64>,
}

pub fn write_model<W: Write>(mut out: W, model: &RankerModel, labels: &Labels) -> Result<()> {
    if labels.len() != model.n_classes() {
        return Err(Error::LengthMismatch {
            expected: model.n_classes(),
            found: labels.len(),
        });
    }
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: FORMAT_VERSION,
        architecture: model.architecture().name().into(),
        input_dim: model.input_dim(),
        hidden_dim: model.hidden_dim(),
        n_classes: model.n_classes(),
        labels: labels.names().to_vec(),
        parameters: model.parameters().to_vec(),
    };
    serde_json::to_writer_pretty(&mut out, &file).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R) -> Result<(RankerModel, Labels)> {
    let file: ModelFile =
        serde_json::from_reader(reader).map_err(|e| parse_err(e.line(), e.to_string()))?;
    check_format(1, &file.format, file.version, MODEL_FORMAT)?;
    let labels = header_labels(1, file.n_classes, file.labels)?;
    let architecture: Architecture = file.architecture.parse()?;
    let model = RankerModel::from_parameters(
        architecture,
        file.input_dim,
        file.hidden_dim,
        file.n_classes,
        file.parameters,
    )?;
    Ok((model, labels))
}
