//! Plain-text config and network files.
//!
//! Both formats are line oriented: `key = value`, blank lines ignored, `#`
//! starts a comment. Config keys:
//!
//! | key          | meaning                                   | default       |
//! |--------------|-------------------------------------------|---------------|
//! | `gamma`      | entangling parameter (radians)            | `0`           |
//! | `gain`       | learning gain `M`                         | `10`          |
//! | `fd_step`    | finite-difference step `d`                | `0.01`        |
//! | `iterations` | rounds per run                            | `400`         |
//! | `seed`       | RNG seed of the first run                 | `0`           |
//! | `mode`       | `edge-diff`, `path-diff` or `own-latency` | `path-diff`   |
//! | `sign`       | `paper` or `descent`                      | `paper`       |
//! | `penalty`    | cost assigned to divergent loops          | `1e6`         |
//! | `window`     | convergence window                        | `50`          |
//! | `tol`        | convergence tolerance                     | `1e-3`        |
//!
//! Network keys (`edge` and `decision` repeat; decision order is qubit order):
//!
//! ```text
//! nodes    = s u v t
//! source   = s
//! sink     = t
//! demand   = 1
//! edge     = s u 0 1 0        # from to a b c  for L(f) = a + b f + c f^2
//! decision = s u v            # node, head of option 0, head of option 1
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dynamics::GameConfig;
use crate::error::{Error, Result};
use crate::network::{DecisionNode, Edge, LatencyFn, RoutingNetwork};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Yields `(line number, key, value)` for every non-blank line.
fn key_values(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str)>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let n = i + 1;
        Some(match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((n, k.trim(), v.trim())),
            _ => Err(parse_err(
                n,
                format!("expected `key = value`, found `{line}`"),
            )),
        })
    })
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("`{key}` expects a number, found `{value}`")))
}

pub fn parse_config(text: &str) -> Result<GameConfig<f64>> {
    let mut cfg = GameConfig::default();
    for item in key_values(text) {
        let (line, key, value) = item?;
        match key {
            "gamma" => cfg.gamma = number(line, key, value)?,
            "gain" => cfg.gain = number(line, key, value)?,
            "fd_step" => cfg.fd_step = number(line, key, value)?,
            "iterations" => cfg.iterations = number(line, key, value)?,
            "seed" => cfg.seed = number(line, key, value)?,
            "mode" => {
                cfg.objective = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("unknown mode `{value}`")))?
            }
            "sign" => {
                cfg.step_sign = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("unknown sign `{value}`")))?
            }
            "penalty" => cfg.penalty_cost = number(line, key, value)?,
            "window" => cfg.convergence_window = number(line, key, value)?,
            "tol" => cfg.convergence_tol = number(line, key, value)?,
            other => return Err(parse_err(line, format!("unknown config key `{other}`"))),
        }
    }
    cfg.validate().map_err(|e| match e {
        Error::Range { field, message } => Error::Range {
            field: config_key(&field).to_string(),
            message,
        },
        other => other,
    })?;
    Ok(cfg)
}

fn config_key(field: &str) -> &str {
    match field {
        "penalty_cost" => "penalty",
        "convergence_window" => "window",
        "convergence_tol" => "tol",
        other => other,
    }
}

/// Inverse of [`parse_config`]; floats use Rust's shortest round-trip form.
pub fn render_config(cfg: &GameConfig<f64>) -> String {
    format!(
        "gamma = {}\ngain = {}\nfd_step = {}\niterations = {}\nseed = {}\nmode = {}\nsign = {}\npenalty = {}\nwindow = {}\ntol = {}\n",
        cfg.gamma,
        cfg.gain,
        cfg.fd_step,
        cfg.iterations,
        cfg.seed,
        cfg.objective,
        cfg.step_sign,
        cfg.penalty_cost,
        cfg.convergence_window,
        cfg.convergence_tol
    )
}

pub fn parse_network(text: &str) -> Result<RoutingNetwork<f64>> {
    let mut nodes: Option<(usize, Vec<String>)> = None;
    let mut source = None;
    let mut sink = None;
    let mut demand = 1.0;
    let mut edges: Vec<(usize, String, String, LatencyFn<f64>)> = Vec::new();
    let mut decisions: Vec<(usize, [String; 3])> = Vec::new();

    for item in key_values(text) {
        let (line, key, value) = item?;
        let fields: Vec<&str> = value.split_whitespace().collect();
        match key {
            "nodes" => {
                if fields.is_empty() {
                    return Err(parse_err(line, "`nodes` needs at least one name"));
                }
                nodes = Some((line, fields.iter().map(|s| s.to_string()).collect()));
            }
            "source" | "sink" => {
                let [name] = fields[..] else {
                    return Err(parse_err(line, format!("`{key}` takes one node name")));
                };
                let slot = if key == "source" {
                    &mut source
                } else {
                    &mut sink
                };
                *slot = Some((line, name.to_string()));
            }
            "demand" => demand = number(line, key, value)?,
            "edge" => {
                let [from, to, a, b, c] = fields[..] else {
                    return Err(parse_err(
                        line,
                        format!("edge expects `from to a b c`, found `{value}`"),
                    ));
                };
                let latency = LatencyFn::new(
                    number(line, "edge", a)?,
                    number(line, "edge", b)?,
                    number(line, "edge", c)?,
                )
                .map_err(|e| parse_err(line, e.to_string()))?;
                edges.push((line, from.to_string(), to.to_string(), latency));
            }
            "decision" => {
                let [node, opt0, opt1] = fields[..] else {
                    return Err(parse_err(
                        line,
                        format!("decision expects `node option0 option1`, found `{value}`"),
                    ));
                };
                decisions.push((line, [node.into(), opt0.into(), opt1.into()]));
            }
            other => return Err(parse_err(line, format!("unknown network key `{other}`"))),
        }
    }

    let (_, names) = nodes.ok_or_else(|| parse_err(0, "missing `nodes` line"))?;
    let lookup = |line: usize, name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| parse_err(line, format!("unknown node `{name}`")))
    };
    let (sl, sname) = source.ok_or_else(|| parse_err(0, "missing `source` line"))?;
    let (tl, tname) = sink.ok_or_else(|| parse_err(0, "missing `sink` line"))?;
    let source = lookup(sl, &sname)?;
    let sink = lookup(tl, &tname)?;

    let mut built = Vec::with_capacity(edges.len());
    for (line, from, to, latency) in &edges {
        built.push(Edge {
            from: lookup(*line, from)?,
            to: lookup(*line, to)?,
            latency: *latency,
        });
    }
    let mut decision_nodes = Vec::with_capacity(decisions.len());
    for (line, [node, opt0, opt1]) in &decisions {
        let n = lookup(*line, node)?;
        let find = |head: &str| -> Result<usize> {
            let h = lookup(*line, head)?;
            built
                .iter()
                .position(|e| e.from == n && e.to == h)
                .ok_or_else(|| parse_err(*line, format!("no edge {node} -> {head}")))
        };
        decision_nodes.push(DecisionNode {
            node: n,
            options: [find(opt0)?, find(opt1)?],
        });
    }
    RoutingNetwork::new(names, source, sink, built, decision_nodes, demand)
}

/// Inverse of [`parse_network`].
pub fn render_network(network: &RoutingNetwork<f64>) -> String {
    let names = network.nodes();
    let mut out = String::new();
    let _ = writeln!(out, "nodes = {}", names.join(" "));
    let _ = writeln!(out, "source = {}", names[network.source()]);
    let _ = writeln!(out, "sink = {}", names[network.sink()]);
    let _ = writeln!(out, "demand = {}", network.demand());
    for e in network.edges() {
        let _ = writeln!(
            out,
            "edge = {} {} {} {} {}",
            names[e.from], names[e.to], e.latency.a, e.latency.b, e.latency.c
        );
    }
    for d in network.decisions() {
        let head = |edge: usize| &names[network.edges()[edge].to];
        let _ = writeln!(
            out,
            "decision = {} {} {}",
            names[d.node],
            head(d.options[0]),
            head(d.options[1])
        );
    }
    out
}
