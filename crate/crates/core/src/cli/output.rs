//! JSON envelope, CSV tables and plain-text rendering.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{num, Format, Outcome, RunConfig};
use crate::error::{Error, Result};
use crate::sums::{Prediction, SumTerm};

pub const SCHEMA_VERSION: u32 = 1;

/// Timing and environment details, dropped by `--no-meta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub wall_time: f64,
    pub workers: usize,
}

/// Top-level JSON document: `schema`, `command`, the command's fields
/// flattened in, and optional `meta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: u32,
    pub command: String,
    #[serde(flatten)]
    pub body: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

fn body_value(outcome: &Outcome) -> serde_json::Result<Value> {
    match outcome {
        Outcome::Prediction(x) => serde_json::to_value(x),
        Outcome::Sweep(x) => serde_json::to_value(x),
        Outcome::Series(x) => serde_json::to_value(x),
        Outcome::Sums(x) => serde_json::to_value(x),
        Outcome::Continuum(x) => serde_json::to_value(x),
        Outcome::Compare(x) => serde_json::to_value(x),
        Outcome::Saw(x) => serde_json::to_value(x),
        Outcome::Triangle(x) => serde_json::to_value(x),
        Outcome::Cp(x) => serde_json::to_value(x),
        Outcome::Sim(x) => serde_json::to_value(x),
        Outcome::Double(x) => serde_json::to_value(x),
        Outcome::Verify(x) => serde_json::to_value(x),
    }
}

/// Removes run-time dependent fields so repeated runs compare equal.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_time");
            m.remove("seconds");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn json(cfg: &RunConfig, outcome: &Outcome, wall_time: f64) -> Result<String> {
    let mut body = body_value(outcome).map_err(|e| Error::invalid_argument("output", e.to_string()))?;
    if cfg.no_meta {
        strip_timing(&mut body);
    }
    let body = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    let meta = (!cfg.no_meta).then(|| Meta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time,
        workers: rayon::current_num_threads(),
    });
    let env = Envelope {
        schema: SCHEMA_VERSION,
        command: cfg.command_name().to_string(),
        body,
        meta,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::invalid_argument("output", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header plus rows; every command reduces to one of these.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|f| csv_field(f)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn aligned(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, f) in widths.iter_mut().zip(r) {
                *w = (*w).max(f.len());
            }
        }
        let line = |cells: Vec<&str>| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(self.header.clone());
        for r in &self.rows {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn prediction_header() -> Table {
    Table::new(&[
        "model",
        "source",
        "d",
        "L",
        "beta",
        "correction_term",
        "p_c_leading",
        "error_scale",
        "truncation_n",
        "tail_valid",
        "gate_overridden",
        "gauss_constant",
    ])
}

fn prediction_row(p: &Prediction) -> Vec<String> {
    vec![
        p.model.to_string(),
        format!("{:?}", p.source).to_lowercase(),
        p.d.to_string(),
        p.range.to_string(),
        num(p.beta),
        num(p.correction_term),
        num(p.p_c_leading),
        num(p.error_scale),
        p.truncation_n.to_string(),
        p.tail_valid.to_string(),
        p.gate_overridden.to_string(),
        num(p.gauss_constant),
    ]
}

fn term_row(name: &str, t: &SumTerm) -> Vec<String> {
    vec![
        name.to_string(),
        num(t.truncated),
        num(t.tail.value),
        num(t.value),
        t.valid.to_string(),
    ]
}

fn table(cfg: &RunConfig, outcome: &Outcome) -> Table {
    match outcome {
        Outcome::Prediction(p) => {
            let mut t = prediction_header();
            t.push(prediction_row(p));
            t
        }
        Outcome::Sweep(s) => {
            let mut t = prediction_header();
            s.predictions.iter().for_each(|p| t.push(prediction_row(p)));
            t
        }
        Outcome::Series(_) => unreachable!("series CSV is written by ReturnSeries::to_csv"),
        Outcome::Sums(s) => {
            let mut t = Table::new(&["quantity", "truncated", "tail", "value", "valid"]);
            t.push(term_row("s_all", &s.s_all));
            t.push(term_row("s_even", &s.s_even));
            t.push(term_row("s_weighted", &s.s_weighted));
            if let Some(tri) = &s.triangle {
                t.push(term_row("triangle", tri));
            }
            t
        }
        Outcome::Continuum(c) => {
            let mut t = Table::new(&["n", "v_n", "v_n_pow_d"]);
            for (n, v, vd) in &c.densities {
                t.push(vec![n.to_string(), num(*v), num(*vd)]);
            }
            t
        }
        Outcome::Compare(c) => {
            let mut t = Table::new(&["L", "beta", "discrete", "continuum", "delta", "ratio", "tail_valid"]);
            for r in &c.rows {
                t.push(vec![
                    r.range.to_string(),
                    num(r.beta),
                    num(r.discrete),
                    num(r.continuum),
                    num(r.delta),
                    num(r.ratio),
                    r.tail_valid.to_string(),
                ]);
            }
            t
        }
        Outcome::Saw(s) => {
            let mut t = Table::new(&["n", "all_loops_weight", "saw_loops_weight"]);
            let e = &s.enumeration;
            for n in 2..=e.nmax {
                t.push(vec![n.to_string(), num(e.all_loops[n]), num(e.saw_loops[n])]);
            }
            t
        }
        Outcome::Triangle(x) => {
            let mut t = Table::new(&["d", "L", "truncation_n", "truncated", "tail", "value", "valid", "scaled"]);
            t.push(vec![
                x.d.to_string(),
                x.range.to_string(),
                x.truncation_n.to_string(),
                num(x.triangle.truncated),
                num(x.triangle.tail.value),
                num(x.triangle.value),
                x.triangle.valid.to_string(),
                num(x.scaled),
            ]);
            t
        }
        Outcome::Cp(c) => {
            let mut t = Table::new(&["epsilon", "value", "s_all", "tail_valid"]);
            for r in &c.rows {
                t.push(vec![num(r.epsilon), num(r.value), num(r.s_all), r.tail_valid.to_string()]);
            }
            t
        }
        Outcome::Sim(e) => {
            let mut t = Table::new(&["mode", "value", "stderr", "trials", "dropped_trials", "flagged_trials", "seed"]);
            t.push(vec![
                format!("{:?}", cfg.mode).to_lowercase(),
                num(e.value),
                num(e.stderr),
                e.trials.to_string(),
                e.dropped_trials.to_string(),
                e.flagged_trials.to_string(),
                e.seed.to_string(),
            ]);
            t
        }
        Outcome::Double(x) => {
            let mut t = Table::new(&["value", "stderr", "trials", "reference", "error_scale"]);
            t.push(vec![
                num(x.estimate.value),
                num(x.estimate.stderr),
                x.estimate.trials.to_string(),
                num(x.reference),
                num(x.error_scale),
            ]);
            t
        }
        Outcome::Verify(v) => {
            let mut t = Table::new(&["id", "name", "passed", "gating", "detail"]);
            for c in &v.checks {
                t.push(vec![
                    c.id.to_string(),
                    c.name.clone(),
                    c.passed.to_string(),
                    c.gating.to_string(),
                    c.detail.clone(),
                ]);
            }
            t
        }
    }
}

fn text(cfg: &RunConfig, outcome: &Outcome) -> String {
    let mut out = String::new();
    match outcome {
        Outcome::Prediction(p) => {
            let _ = writeln!(
                out,
                "{} d={} L={} ({:?})",
                p.model,
                p.d,
                p.range,
                p.source
            );
            let _ = writeln!(
                out,
                "p_c = 1 + {} + O({})",
                num(p.correction_term),
                num(p.error_scale)
            );
            let _ = writeln!(out, "leading estimate {}", num(p.p_c_leading));
            for c in &p.components {
                let _ = writeln!(
                    out,
                    "  {:<24} coefficient {}  truncated {}  tail {}{}",
                    c.name,
                    num(c.coefficient),
                    num(c.truncated),
                    num(c.tail),
                    if c.tail_valid { "" } else { "  [tail invalid]" }
                );
            }
            let _ = writeln!(out, "truncation N = {}", p.truncation_n);
            if p.gate_overridden {
                let _ = writeln!(out, "warning: dimension gate overridden");
            }
        }
        Outcome::Series(s) => {
            let mut t = Table::new(&["n", "r_n"]);
            for (n, r) in s.series.values.iter().enumerate() {
                t.push(vec![n.to_string(), num(*r)]);
            }
            out.push_str(&t.aligned());
            let _ = writeln!(out, "method {}", s.series.method.as_str());
            if !s.invariants.all_hold() {
                let _ = writeln!(out, "warning: invariants violated: {:?}", s.invariants);
            }
        }
        Outcome::Verify(v) => out.push_str(&v.table()),
        other => out.push_str(&table(cfg, other).aligned()),
    }
    out
}

pub fn render(cfg: &RunConfig, outcome: &Outcome, wall_time: f64) -> Result<String> {
    Ok(match cfg.format() {
        Format::Json => json(cfg, outcome, wall_time)?,
        Format::Csv => match outcome {
            Outcome::Series(s) => s.series.to_csv(cfg.rational),
            other => table(cfg, other).csv(),
        },
        Format::Text => text(cfg, outcome),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn strips_nested_timing() {
        let mut v = serde_json::json!({"a": {"wall_time": 1.0, "x": [{"seconds": 2.0, "y": 3}]}});
        strip_timing(&mut v);
        assert_eq!(v, serde_json::json!({"a": {"x": [{"y": 3}]}}));
    }
}
