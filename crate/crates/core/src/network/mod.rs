//! Congestion networks with polynomial edge latencies, flow propagation from
//! per-node routing fractions, and the classical equilibrium/optimum solvers.

mod flows;
mod linalg;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use flows::{
    beckmann_potential, option_latencies, solve_flows, total_cost, FlowAssignment, OptionLatencies,
    LOOP_DIVERGENCE_THRESHOLD,
};
pub use search::{
    classical_equilibrium, optimal_flow, price_of_anarchy, FlowSolution, GRID_STEP,
    MAX_SEARCH_DECISION_NODES, REFINE_RESOLUTION,
};

/// Edge latency `L(f) = a + b·f + c·f²` with nonnegative coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyFn<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> LatencyFn<T> {
    pub fn new(a: T, b: T, c: T) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(format!(
                    "latency coefficient {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn zero() -> Self {
        Self {
            a: T::zero(),
            b: T::zero(),
            c: T::zero(),
        }
    }

    pub fn constant(a: T) -> Self {
        Self { a, ..Self::zero() }
    }

    pub fn linear(b: T) -> Self {
        Self { b, ..Self::zero() }
    }

    pub fn quadratic(c: T) -> Self {
        Self { c, ..Self::zero() }
    }

    pub fn eval(&self, f: T) -> T {
        self.a + f * (self.b + f * self.c)
    }

    /// `∫_0^f L(z) dz`.
    pub fn integral(&self, f: T) -> T {
        f * (self.a + f * (self.b / T::lit(2.0) + f * self.c / T::lit(3.0)))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            a: self.a * factor,
            b: self.b * factor,
            c: self.c * factor,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.b == T::zero() && self.c == T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge<T> {
    pub from: usize,
    pub to: usize,
    pub latency: LatencyFn<T>,
}

/// A node with two outgoing edges. `options[0]` receives the share `p` of the
/// node's inflow, `options[1]` the remaining `1 - p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionNode {
    pub node: usize,
    pub options: [usize; 2],
}

/// Single-commodity routing network. Every non-sink node has either one
/// outgoing edge (pass-through) or two (a decision node, in which case it is
/// listed in `decisions`). Decision order fixes the qubit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingNetwork<T> {
    nodes: Vec<String>,
    source: usize,
    sink: usize,
    edges: Vec<Edge<T>>,
    decisions: Vec<DecisionNode>,
    demand: T,
}

impl<T: Scalar> RoutingNetwork<T> {
    pub fn new(
        nodes: Vec<String>,
        source: usize,
        sink: usize,
        edges: Vec<Edge<T>>,
        decisions: Vec<DecisionNode>,
        demand: T,
    ) -> Result<Self> {
        let n = nodes.len();
        if source >= n || sink >= n || source == sink {
            return Err(Error::invalid(
                "source and sink must be distinct existing nodes",
            ));
        }
        if !demand.is_finite() || demand <= T::zero() {
            return Err(Error::invalid(format!(
                "demand must be positive, got {demand}"
            )));
        }
        for (i, name) in nodes.iter().enumerate() {
            if nodes[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate node name `{name}`")));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::invalid(format!(
                    "edge {i} references a missing node"
                )));
            }
            if e.from == e.to {
                return Err(Error::invalid(format!("edge {i} is a self-loop")));
            }
            LatencyFn::new(e.latency.a, e.latency.b, e.latency.c)?;
        }

        let mut outgoing = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            outgoing[e.from].push(i);
        }
        if !outgoing[sink].is_empty() {
            return Err(Error::invalid("the sink must have no outgoing edges"));
        }
        let mut seen = vec![false; n];
        for d in &decisions {
            if d.node >= n || d.node == sink {
                return Err(Error::invalid(
                    "decision node must be an existing non-sink node",
                ));
            }
            if std::mem::replace(&mut seen[d.node], true) {
                return Err(Error::invalid(format!(
                    "node `{}` is listed as a decision node twice",
                    nodes[d.node]
                )));
            }
            let mut listed = d.options.to_vec();
            listed.sort_unstable();
            let mut actual = outgoing[d.node].clone();
            actual.sort_unstable();
            if d.options[0] == d.options[1] || listed != actual {
                return Err(Error::invalid(format!(
                    "decision node `{}` must list exactly its two outgoing edges",
                    nodes[d.node]
                )));
            }
        }
        for (node, out) in outgoing.iter().enumerate() {
            if node == sink {
                continue;
            }
            match (out.len(), seen[node]) {
                (1, false) | (2, true) => {}
                (0, _) if node != source && edges.iter().all(|e| e.to != node) => {}
                (0, _) => {
                    return Err(Error::invalid(format!(
                        "node `{}` is a dead end",
                        nodes[node]
                    )))
                }
                (2, false) => {
                    return Err(Error::invalid(format!(
                        "node `{}` has two outgoing edges but is not a decision node",
                        nodes[node]
                    )))
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "node `{}` must have one outgoing edge or be a two-way decision node",
                        nodes[node]
                    )))
                }
            }
        }

        let network = Self {
            nodes,
            source,
            sink,
            edges,
            decisions,
            demand,
        };
        network.check_edges_on_walks()?;
        Ok(network)
    }

    fn check_edges_on_walks(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut from_source = vec![false; n];
        let mut to_sink = vec![false; n];
        from_source[self.source] = true;
        to_sink[self.sink] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for e in &self.edges {
                if from_source[e.from] && !from_source[e.to] {
                    from_source[e.to] = true;
                    changed = true;
                }
                if to_sink[e.to] && !to_sink[e.from] {
                    to_sink[e.from] = true;
                    changed = true;
                }
            }
        }
        for e in &self.edges {
            if !(from_source[e.from] && to_sink[e.to]) {
                return Err(Error::invalid(format!(
                    "edge {} -> {} lies on no source-to-sink walk",
                    self.nodes[e.from], self.nodes[e.to]
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn decisions(&self) -> &[DecisionNode] {
        &self.decisions
    }

    pub fn demand(&self) -> T {
        self.demand
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn edge_index(&self, from: &str, to: &str) -> Option<usize> {
        let (f, t) = (self.node_index(from)?, self.node_index(to)?);
        self.edges.iter().position(|e| e.from == f && e.to == t)
    }

    /// `from`+`to` node names, e.g. `su`; used for column headers.
    pub fn edge_label(&self, edge: usize) -> String {
        let e = &self.edges[edge];
        format!("{}{}", self.nodes[e.from], self.nodes[e.to])
    }

    /// Same topology with every latency coefficient multiplied by `factor`.
    pub fn with_scaled_latencies(&self, factor: T) -> Result<Self> {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.latency = LatencyFn::new(
                e.latency.a * factor,
                e.latency.b * factor,
                e.latency.c * factor,
            )?;
        }
        Ok(out)
    }

    /// Identifies the four outer edges `(su, sv, ut, vt)` of a Braess-shaped
    /// network: the source decides between heads `u` and `v`, each of which
    /// has an edge into the sink.
    pub fn braess_outer_edges(&self) -> Option<[usize; 4]> {
        let d = self.decisions.iter().find(|d| d.node == self.source)?;
        let [su, sv] = d.options;
        let (u, v) = (self.edges[su].to, self.edges[sv].to);
        let to_sink = |node: usize| {
            self.edges
                .iter()
                .position(|e| e.from == node && e.to == self.sink)
        };
        Some([su, sv, to_sink(u)?, to_sink(v)?])
    }

    /// `L_su = L_sv` and `L_ut = L_vt`.
    pub fn is_mirror_symmetric(&self) -> Option<bool> {
        let [su, sv, ut, vt] = self.braess_outer_edges()?;
        let l = |i: usize| self.edges[i].latency;
        Some(l(su) == l(sv) && l(ut) == l(vt))
    }

    /// `L_su = L_vt` and `L_sv = L_ut`; the canonical Braess network has this.
    pub fn is_diagonally_symmetric(&self) -> Option<bool> {
        let [su, sv, ut, vt] = self.braess_outer_edges()?;
        let l = |i: usize| self.edges[i].latency;
        Some(l(su) == l(vt) && l(sv) == l(ut))
    }
}

/// Latencies of the Braess network edges, canonical by default:
/// `L_su = f`, `L_sv = 1`, `L_ut = 1`, `L_vt = f`, zero on the central pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BraessLatencies<T> {
    pub su: LatencyFn<T>,
    pub sv: LatencyFn<T>,
    pub ut: LatencyFn<T>,
    pub vt: LatencyFn<T>,
    pub uv: LatencyFn<T>,
    pub vu: LatencyFn<T>,
}

impl<T: Scalar> Default for BraessLatencies<T> {
    fn default() -> Self {
        Self {
            su: LatencyFn::linear(T::one()),
            sv: LatencyFn::constant(T::one()),
            ut: LatencyFn::constant(T::one()),
            vt: LatencyFn::linear(T::one()),
            uv: LatencyFn::zero(),
            vu: LatencyFn::zero(),
        }
    }
}

/// Builds the four-node Braess network `s, u, v, t`.
///
/// Edge order is `su, sv, ut, vt` followed by `uv, vu` when the central pair is
/// included. With the central pair, `s`, `u` and `v` are decision nodes (option
/// 0 is `su`, `ut`, `vt` respectively); without it only `s` decides.
pub fn make_braess<T: Scalar>(
    include_central: bool,
    latencies: &BraessLatencies<T>,
) -> Result<RoutingNetwork<T>> {
    let (s, u, v, t) = (0, 1, 2, 3);
    let mut edges = vec![
        Edge {
            from: s,
            to: u,
            latency: latencies.su,
        },
        Edge {
            from: s,
            to: v,
            latency: latencies.sv,
        },
        Edge {
            from: u,
            to: t,
            latency: latencies.ut,
        },
        Edge {
            from: v,
            to: t,
            latency: latencies.vt,
        },
    ];
    let mut decisions = vec![DecisionNode {
        node: s,
        options: [0, 1],
    }];
    if include_central {
        edges.push(Edge {
            from: u,
            to: v,
            latency: latencies.uv,
        });
        edges.push(Edge {
            from: v,
            to: u,
            latency: latencies.vu,
        });
        decisions.push(DecisionNode {
            node: u,
            options: [2, 4],
        });
        decisions.push(DecisionNode {
            node: v,
            options: [3, 5],
        });
    }
    RoutingNetwork::new(
        ["s", "u", "v", "t"].iter().map(|n| n.to_string()).collect(),
        s,
        t,
        edges,
        decisions,
        T::one(),
    )
}

/// Routing share `p_n ∈ [0, 1]` sent along option 0, one per decision node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingFractions<T>(Vec<T>);

impl<T: Scalar> RoutingFractions<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        for (i, p) in values.iter().enumerate() {
            if !(*p >= T::zero() && *p <= T::one()) {
                return Err(Error::invalid(format!(
                    "routing fraction {i} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
