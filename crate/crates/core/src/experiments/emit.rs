//! CSV and JSON output.
//!
//! Every float is rounded to 12 significant digits before printing, so output
//! is stable across platforms and identical results give byte-identical
//! files. Non-finite values print as `nan` in CSV and `null` in JSON.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use super::{ClassicalReport, EnsembleResult, SweepResult, VariantReport};
use crate::dynamics::RunTrace;
use crate::error::{Error, Result};
use crate::network::RoutingNetwork;

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidInput(format!(
                "unknown output format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// Rounds to 12 significant digits.
fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Formats a float with at most 12 significant digits, using the shortest
/// representation that round-trips the rounded value.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        // avoid "-0"
        return "0".into();
    }
    format!("{r}")
}

/// A rectangular result ready for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(&self.header).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row).map_err(ser)?;
        }
        w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn num(x: f64) -> String {
    format_sig(x)
}

fn opt_flows(flows: Option<&Vec<f64>>, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |e| flows.map_or_else(|| "nan".to_string(), |f| num(f[e])))
}

fn rounded_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(rounded_json).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, rounded_json(v))).collect())
        }
        other => other,
    }
}

/// Something that can be written as CSV or JSON.
pub trait Emit {
    fn table(&self) -> Table;
    fn json(&self) -> Result<Value>;

    fn render(&self, format: OutputFormat) -> Result<Vec<u8>> {
        match format {
            OutputFormat::Csv => self.table().to_csv(),
            OutputFormat::Json => {
                let mut out = serde_json::to_vec_pretty(&rounded_json(self.json()?))
                    .map_err(|e| Error::Serialize(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn to_json<S: Serialize>(value: &S) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))
}

/// Writes `result` to `destination`, or to stdout when it is `None`.
pub fn emit<E: Emit + ?Sized>(
    result: &E,
    format: OutputFormat,
    destination: Option<&Path>,
) -> Result<()> {
    let bytes = result.render(format)?;
    match destination {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|()| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// A trace paired with the network that names its columns.
pub struct TraceOutput<'a> {
    pub trace: &'a RunTrace<f64>,
    pub network: &'a RoutingNetwork<f64>,
}

impl Emit for TraceOutput<'_> {
    fn table(&self) -> Table {
        let net = self.network;
        let n_edges = net.edges().len();
        let mut header = vec!["iteration".to_string()];
        for d in net.decisions() {
            let node = &net.nodes()[d.node];
            for p in ["theta", "phi", "alpha"] {
                header.push(format!("{p}_{node}"));
            }
        }
        header.extend((0..n_edges).map(|e| format!("f_{}", net.edge_label(e))));
        header.push("total_cost".into());
        let mut t = Table::new(header);
        for r in &self.trace.records {
            let mut row = vec![r.iteration.to_string()];
            for s in &r.strategies {
                row.extend([s.theta, s.phi, s.alpha].map(num));
            }
            row.extend(opt_flows(r.flows.as_ref(), n_edges));
            row.push(num(r.total_cost));
            t.rows.push(row);
        }
        t
    }

    fn json(&self) -> Result<Value> {
        let mut v = to_json(self.trace)?;
        if let Value::Object(o) = &mut v {
            let labels: Vec<String> = (0..self.network.edges().len())
                .map(|e| self.network.edge_label(e))
                .collect();
            o.insert("edges".into(), to_json(&labels)?);
        }
        Ok(v)
    }
}

impl Emit for EnsembleResult {
    fn table(&self) -> Table {
        let players = self.rows.first().map_or(0, |r| r.final_strategies.len());
        let n_edges = self
            .rows
            .iter()
            .find_map(|r| r.final_flows.as_ref().map(Vec::len))
            .unwrap_or(0);
        let mut header: Vec<String> = [
            "seed",
            "gamma",
            "cost",
            "converged",
            "convergence_iteration",
        ]
        .map(String::from)
        .into();
        for p in 0..players {
            for a in ["theta", "phi", "alpha"] {
                header.push(format!("{a}_{p}"));
            }
        }
        header.extend((0..n_edges).map(|e| format!("flow_{e}")));
        let mut t = Table::new(header);
        for r in &self.rows {
            let mut row = vec![
                r.seed.to_string(),
                num(self.gamma),
                num(r.cost),
                r.converged.to_string(),
                r.convergence_iteration
                    .map_or_else(String::new, |i| i.to_string()),
            ];
            for s in &r.final_strategies {
                row.extend([s.theta, s.phi, s.alpha].map(num));
            }
            row.extend(opt_flows(r.final_flows.as_ref(), n_edges));
            t.rows.push(row);
        }
        t
    }

    fn json(&self) -> Result<Value> {
        let mut v = to_json(self)?;
        if let Value::Object(o) = &mut v {
            o.insert("median_cost".into(), to_json(&self.median_cost())?);
            o.insert("spread".into(), to_json(&self.cost_spread())?);
            o.insert(
                "convergence_rate".into(),
                to_json(&self.convergence_rate())?,
            );
            o.insert(
                "parameter_std_devs".into(),
                to_json(&self.parameter_std_devs())?,
            );
        }
        Ok(v)
    }
}

impl Emit for SweepResult {
    fn table(&self) -> Table {
        let mut t = Table::new([
            "gamma",
            "median_cost",
            "spread",
            "kappa_q",
            "convergence_rate",
        ]);
        for r in &self.rows {
            t.rows.push(
                [
                    r.gamma,
                    r.median_cost,
                    r.spread,
                    r.kappa_q,
                    r.convergence_rate,
                ]
                .map(num)
                .into(),
            );
        }
        t
    }

    fn json(&self) -> Result<Value> {
        to_json(self)
    }
}

fn flag(b: Option<bool>) -> String {
    b.map_or_else(String::new, |b| b.to_string())
}

impl Emit for VariantReport {
    fn table(&self) -> Table {
        let mut t = Table::new([
            "name",
            "mirror_symmetric",
            "diagonal_symmetric",
            "classical_cost",
            "optimal_cost",
            "quantum_cost",
            "kappa_c",
            "kappa_q",
        ]);
        for r in &self.rows {
            let mut row = vec![
                r.name.clone(),
                flag(r.mirror_symmetric),
                flag(r.diagonal_symmetric),
            ];
            row.extend(
                [
                    r.classical_cost,
                    r.optimal_cost,
                    r.quantum_cost,
                    r.kappa_c,
                    r.kappa_q,
                ]
                .map(num),
            );
            t.rows.push(row);
        }
        t
    }

    fn json(&self) -> Result<Value> {
        to_json(self)
    }
}

impl Emit for ClassicalReport {
    fn table(&self) -> Table {
        let mut t = Table::new(["quantity", "edge", "equilibrium", "optimal"]);
        t.rows.push(vec![
            "cost".into(),
            String::new(),
            num(self.equilibrium_cost),
            num(self.optimal_cost),
        ]);
        t.rows.push(vec![
            "kappa".into(),
            String::new(),
            num(self.kappa),
            num(1.0),
        ]);
        for (e, label) in self.edge_labels.iter().enumerate() {
            t.rows.push(vec![
                "flow".into(),
                label.clone(),
                num(self.equilibrium_flows[e]),
                num(self.optimal_flows[e]),
            ]);
        }
        t
    }

    fn json(&self) -> Result<Value> {
        to_json(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(1.0 / 3.0 * 1e-7), "0.0000000333333333333");
        assert_eq!(format_sig(f64::NAN), "nan");
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let s = SweepResult {
            optimal_cost: 1.5,
            rows: vec![],
        };
        let csv = String::from_utf8(s.render(OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv, "gamma,median_cost,spread,kappa_q,convergence_rate\n");
    }

    #[test]
    fn one_row_sweep() {
        let s = SweepResult {
            optimal_cost: 1.5,
            rows: vec![super::super::SweepRow {
                gamma: 0.0,
                median_cost: 2.0,
                spread: 0.0,
                kappa_q: 4.0 / 3.0,
                convergence_rate: 1.0,
            }],
        };
        let csv = String::from_utf8(s.render(OutputFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "0,2,0,1.33333333333,1");
        let json: Value = serde_json::from_slice(&s.render(OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(json["rows"][0]["kappa_q"], 1.33333333333);
    }

    #[test]
    fn io_error_names_path() {
        let s = SweepResult {
            optimal_cost: 1.0,
            rows: vec![],
        };
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = emit(&s, OutputFormat::Csv, Some(path)).unwrap_err();
        assert!(
            err.to_string().contains("/nonexistent-dir/out.csv"),
            "{err}"
        );
    }
}
