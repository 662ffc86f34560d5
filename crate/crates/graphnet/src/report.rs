//! Evaluation report JSON, ROC CSV and training-log CSV.
//!
//! Report schema, version 1:
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "num_samples": int, "positives": int, "negatives": int,
//!   "accuracy": float,            class 1 predicted at probability >= 0.5
//!   "auc": float,
//!   "youden": {"threshold": T, "sensitivity": float, "specificity": float, "accuracy": float},
//!   "mean_node_dsc": float,
//!   "mean_latency_ms": float,
//!   "roc": [{"threshold": T, "sensitivity": float, "specificity": float}, ...],
//!   "samples": [{"index": int, "label": 0|1, "score": float, "dsc": float}, ...]
//! }
//! ```
//!
//! `T` is a number or one of the strings `"inf"`, `"-inf"`.

use std::fmt::Write as _;

use graphnet_core::metrics::EvalReport;
use graphnet_core::train::EpochLog;
use graphnet_core::Real;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const ROC_CSV_HEADER: &str = "threshold,sensitivity,specificity";

/// ROC threshold that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub Real);

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == Real::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == Real::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0 as f64)
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold(v as Real)),
            Raw::Text(t) if t == "inf" => Ok(Threshold(Real::INFINITY)),
            Raw::Text(t) if t == "-inf" => Ok(Threshold(Real::NEG_INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad threshold {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoudenJson {
    pub threshold: Threshold,
    pub sensitivity: Real,
    pub specificity: Real,
    pub accuracy: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocPointJson {
    pub threshold: Threshold,
    pub sensitivity: Real,
    pub specificity: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleJson {
    pub index: usize,
    pub label: u8,
    pub score: Real,
    pub dsc: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub schema_version: u32,
    pub num_samples: usize,
    pub positives: usize,
    pub negatives: usize,
    pub accuracy: Real,
    pub auc: Real,
    pub youden: YoudenJson,
    pub mean_node_dsc: Real,
    pub mean_latency_ms: Real,
    pub roc: Vec<RocPointJson>,
    pub samples: Vec<SampleJson>,
}

impl From<&EvalReport> for ReportJson {
    fn from(r: &EvalReport) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            num_samples: r.scores.len(),
            positives: r.roc.positives,
            negatives: r.roc.negatives,
            accuracy: r.accuracy,
            auc: r.roc.auc,
            youden: YoudenJson {
                threshold: Threshold(r.youden.threshold),
                sensitivity: r.youden.sensitivity,
                specificity: r.youden.specificity,
                accuracy: r.youden.accuracy,
            },
            mean_node_dsc: r.mean_node_dsc,
            mean_latency_ms: r.mean_latency_ms,
            roc: r
                .roc
                .points
                .iter()
                .map(|p| RocPointJson { threshold: Threshold(p.threshold), sensitivity: p.sensitivity, specificity: p.specificity })
                .collect(),
            samples: (0..r.scores.len())
                .map(|i| SampleJson { index: i, label: r.labels[i], score: r.scores[i], dsc: r.per_sample_dsc[i] })
                .collect(),
        }
    }
}

/// Parses and checks a report: every field present, none unknown, version
/// supported, and counts consistent.
pub fn parse_report(text: &str) -> Result<ReportJson, String> {
    let r: ReportJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if r.schema_version != REPORT_SCHEMA_VERSION {
        return Err(format!("unsupported schema_version {}", r.schema_version));
    }
    if r.samples.len() != r.num_samples || r.positives + r.negatives != r.num_samples {
        return Err("sample counts disagree".into());
    }
    if r.roc.len() < 2 {
        return Err("ROC needs at least the two boundary points".into());
    }
    Ok(r)
}

pub fn report_json(r: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(&ReportJson::from(r)).expect("reports always serialize");
    s.push('\n');
    s
}

fn real_text(v: Real) -> String {
    if v == Real::INFINITY {
        "inf".into()
    } else if v == Real::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// One row per ROC point, boundary thresholds included.
pub fn roc_csv(r: &EvalReport) -> String {
    let mut s = String::from(ROC_CSV_HEADER);
    s.push('\n');
    for p in &r.roc.points {
        let _ = writeln!(s, "{},{:?},{:?}", real_text(p.threshold), p.sensitivity, p.specificity);
    }
    s
}

pub fn epoch_log_csv(logs: &[EpochLog]) -> String {
    let mut s = String::from(EpochLog::CSV_HEADER);
    s.push('\n');
    for l in logs {
        let _ = writeln!(s, "{},{:?},{:?},{:?},{:?}", l.epoch, l.lr, l.mean_ce, l.mean_dsc_loss, l.total);
    }
    s
}
