//! Report rows and their CSV/JSON encodings.

use std::fmt;
use std::io::Write;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// A numeric result, or the reason it has no value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    /// Stationary evolution: the quantity divides by a vanishing average.
    Degenerate,
    /// The quantity does not exist for this input.
    Undefined,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl From<f64> for Metric {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Metric::Value(v)
        } else {
            Metric::Undefined
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v}"),
            Metric::Degenerate => f.write_str("DEGENERATE"),
            Metric::Undefined => f.write_str("UNDEFINED"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Degenerate => s.serialize_str("DEGENERATE"),
            Metric::Undefined => s.serialize_str("UNDEFINED"),
        }
    }
}

struct MetricVisitor;

impl Visitor<'_> for MetricVisitor {
    type Value = Metric;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a finite number, \"DEGENERATE\" or \"UNDEFINED\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Metric, E> {
        if v.is_finite() {
            Ok(Metric::Value(v))
        } else {
            Err(E::custom("metric values must be finite"))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Metric, E> {
        Ok(Metric::Value(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Metric, E> {
        Ok(Metric::Value(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Metric, E> {
        match v {
            "DEGENERATE" => Ok(Metric::Degenerate),
            "UNDEFINED" => Ok(Metric::Undefined),
            other => other.parse::<f64>().map_err(E::custom).and_then(|x| self.visit_f64(x)),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(MetricVisitor)
    }
}

/// One line of output. Columns that do not apply to a command are empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub command: String,
    pub parameter: Option<String>,
    pub parameter_value: Option<f64>,
    pub dimension: Option<usize>,
    pub steps: Option<usize>,
    pub t_actual: Option<Metric>,
    pub t_exact_2d: Option<Metric>,
    pub t_exact_ddim: Option<Metric>,
    pub t_imt: Option<Metric>,
    pub t_mt: Option<Metric>,
    pub t_ml: Option<Metric>,
    pub theta: Option<Metric>,
    pub wootters_length: Option<Metric>,
    pub avg_dhnc: Option<Metric>,
    pub avg_dh: Option<Metric>,
    pub avg_dhcl: Option<Metric>,
    pub chain_holds: Option<bool>,
    pub monotonicity: Option<String>,
    pub passage_time: Option<Metric>,
    pub saturated_imt: Option<bool>,
    pub saturated_mt: Option<bool>,
    pub saturated_exact_ddim: Option<bool>,
    pub saturated_exact_2d: Option<bool>,
    pub ur_residual_max: Option<Metric>,
    pub ur_points: Option<usize>,
    pub ur_stationary: Option<usize>,
    pub t_opt: Option<Metric>,
    pub classical_norm: Option<Metric>,
    pub mt_gap: Option<Metric>,
    pub form_match: Option<bool>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub notes: Option<String>,
    pub error: Option<String>,
    pub runtime_ms: Option<f64>,
}

impl ReportRow {
    pub fn new(scenario: &str, command: &str) -> Self {
        Self { scenario: scenario.to_string(), command: command.to_string(), ..Default::default() }
    }

    /// Appends to `notes`. Empty notes are dropped: CSV cannot tell them from a missing one.
    pub fn add_note(&mut self, note: impl Into<String>) {
        let note = note.into();
        if note.is_empty() {
            return;
        }
        match &mut self.notes {
            Some(n) => {
                n.push_str("; ");
                n.push_str(&note);
            }
            None => self.notes = Some(note),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<ReportRow>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Rows from a JSON document holding a row, `{"row": ...}`, or an array of either.
pub fn rows_from_json(text: &str) -> Result<Vec<ReportRow>, CliError> {
    fn collect(v: serde_json::Value, out: &mut Vec<ReportRow>) -> Result<(), CliError> {
        match v {
            serde_json::Value::Array(items) => items.into_iter().try_for_each(|i| collect(i, out)),
            serde_json::Value::Object(mut map) if map.contains_key("row") && !map.contains_key("scenario") => {
                collect(map.remove("row").expect("checked"), out)
            }
            other => {
                out.push(serde_json::from_value(other)?);
                Ok(())
            }
        }
    }
    let mut rows = Vec::new();
    collect(serde_json::from_str(text)?, &mut rows)?;
    Ok(rows)
}
