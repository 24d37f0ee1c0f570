//! Accuracy, inter-rater percent agreement and evaluation reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::classify::{ClassificationResult, UNKNOWN_CODE};
use crate::error::{Error, Result};
use crate::taxonomy::rollup;

/// An exact `hits / total` ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proportion {
    pub hits: usize,
    pub total: usize,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    /// Percentage rounded half-up to `decimals` places, computed in integer
    /// arithmetic: 25/30 -> "83", 848/1000 at one place -> "84.8".
    pub fn percent(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let num = self.hits as u128 * 100 * scale;
        let den = self.total as u128;
        let q = (2 * num + den) / (2 * den);
        if decimals == 0 {
            q.to_string()
        } else {
            format!(
                "{}.{:0width$}",
                q / scale,
                q % scale,
                width = decimals as usize
            )
        }
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}={}%", self.hits, self.total, self.percent(0))
    }
}

fn matches<T: PartialEq>(a: &[T], b: &[T]) -> Result<Proportion> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Proportion {
        hits: a.iter().zip(b).filter(|(x, y)| x == y).count(),
        total: a.len(),
    })
}

/// Fraction of predictions equal to the gold label.
pub fn accuracy<T: PartialEq>(predictions: &[T], gold: &[T]) -> Result<Proportion> {
    matches(predictions, gold)
}

/// Fraction of items on which two annotators agree.
pub fn percent_agreement<T: PartialEq>(rater_a: &[T], rater_b: &[T]) -> Result<Proportion> {
    matches(rater_a, rater_b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub content: String,
    pub gold_level1: String,
}

impl LabeledExample {
    pub fn new(content: impl Into<String>, gold_level1: impl Into<String>) -> Result<Self> {
        let gold_level1 = gold_level1.into();
        if gold_level1.len() != 1 || !gold_level1.as_bytes()[0].is_ascii_digit() {
            return Err(Error::RowError {
                row: 0,
                reason: format!("gold label {gold_level1:?} is not a digit 0-9"),
            });
        }
        Ok(Self {
            content: content.into(),
            gold_level1,
        })
    }
}

/// Reads a labelled test set CSV with `content` and `gold_level1` columns.
pub fn load_test_set(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_test_set(file)
}

pub fn read_test_set<R: Read>(reader: R) -> Result<Vec<LabeledExample>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::SchemaError(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::SchemaError(format!("missing column {name:?}")))
    };
    let (content_col, gold_col) = (column("content")?, column("gold_level1")?);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::RowError {
            row,
            reason: e.to_string(),
        })?;
        let (Some(content), Some(gold)) = (record.get(content_col), record.get(gold_col)) else {
            return Err(Error::RowError {
                row,
                reason: "missing field".into(),
            });
        };
        let example = LabeledExample::new(content, gold.trim()).map_err(|e| match e {
            Error::RowError { reason, .. } => Error::RowError { row, reason },
            other => other,
        })?;
        out.push(example);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub content: String,
    pub predicted_code: String,
    pub level1: String,
    pub gold: String,
    pub similarity: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// gold label -> (support, correct)
    pub per_class: BTreeMap<String, (usize, usize)>,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn proportion(&self) -> Proportion {
        Proportion {
            hits: self.correct,
            total: self.n,
        }
    }
}

/// Compares level-1 rollups of `results` with the gold labels, position by
/// position. Unclassifiable results count as incorrect.
pub fn evaluate(test: &[LabeledExample], results: &[ClassificationResult]) -> Result<EvalReport> {
    if test.len() != results.len() {
        return Err(Error::LengthMismatch(test.len(), results.len()));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let rows: Vec<EvalRow> = test
        .iter()
        .zip(results)
        .map(|(ex, r)| {
            let level1 = if r.is_classified() {
                rollup(&r.predicted_code, 1).unwrap_or_else(|_| UNKNOWN_CODE.to_string())
            } else {
                UNKNOWN_CODE.to_string()
            };
            let correct = level1 == ex.gold_level1;
            let class = per_class.entry(ex.gold_level1.clone()).or_default();
            class.0 += 1;
            class.1 += correct as usize;
            EvalRow {
                content: ex.content.clone(),
                predicted_code: r.predicted_code.clone(),
                level1,
                gold: ex.gold_level1.clone(),
                similarity: r.similarity,
                correct,
            }
        })
        .collect();
    let correct = rows.iter().filter(|r| r.correct).count();
    Ok(EvalReport {
        n: rows.len(),
        correct,
        accuracy: correct as f64 / rows.len() as f64,
        per_class,
        rows,
    })
}

/// Share of queries for which two runs (e.g. faithful vs indexed) predict
/// the same code.
pub fn mode_agreement(
    a: &[ClassificationResult],
    b: &[ClassificationResult],
) -> Result<Proportion> {
    let codes = |rs: &[ClassificationResult]| -> Vec<String> {
        rs.iter().map(|r| r.predicted_code.clone()).collect()
    };
    matches(&codes(a), &codes(b))
}

pub fn write_report_csv<W: Write>(report: &EvalReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Io {
        path: "<report>".into(),
        source: e.into(),
    };
    w.write_record([
        "content",
        "predicted_code",
        "level1_code",
        "gold_level1",
        "similarity",
        "correct",
    ])
    .map_err(to_err)?;
    for row in &report.rows {
        w.write_record([
            row.content.as_str(),
            &row.predicted_code,
            &row.level1,
            &row.gold,
            &format!("{:.6}", row.similarity),
            if row.correct { "1" } else { "0" },
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<report>".into(),
        source: e,
    })
}

/// Plain-text summary: aggregate accuracy, per-class breakdown and, when
/// supplied, the faithful/indexed agreement figure.
pub fn summary_text(report: &EvalReport, agreement: Option<Proportion>) -> String {
    let acc = report.proportion();
    let mut out = String::new();
    let _ = writeln!(out, "instances      {}", report.n);
    let _ = writeln!(out, "correct        {}", report.correct);
    let _ = writeln!(
        out,
        "accuracy       {}% ({:.4})",
        acc.percent(0),
        acc.value()
    );
    if let Some(a) = agreement {
        let _ = writeln!(
            out,
            "mode agreement {}% ({}/{} identical predicted codes, faithful vs indexed)",
            a.percent(1),
            a.hits,
            a.total
        );
    }
    let _ = writeln!(out, "\nlabel  support  correct  accuracy");
    for (label, (support, correct)) in &report.per_class {
        let p = Proportion {
            hits: *correct,
            total: *support,
        };
        let _ = writeln!(
            out,
            "{label:<6} {support:>7}  {correct:>7}  {:>7}%",
            p.percent(0)
        );
    }
    out
}
