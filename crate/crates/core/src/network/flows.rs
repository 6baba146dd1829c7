use serde::{Deserialize, Serialize};

use super::linalg::solve_with_det;
use super::{RoutingFractions, RoutingNetwork};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Conservation systems whose determinant falls at or below this value are
/// treated as never draining (the u/v loop gain has reached one).
pub const LOOP_DIVERGENCE_THRESHOLD: f64 = 1e-12;

/// Per-edge flow, indexed like `RoutingNetwork::edges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment<T> {
    pub flows: Vec<T>,
}

impl<T: Scalar> FlowAssignment<T> {
    pub fn zeros(edges: usize) -> Self {
        Self {
            flows: vec![T::zero(); edges],
        }
    }

    pub fn get(&self, edge: usize) -> T {
        self.flows[edge]
    }

    /// Sum of all edge flows; circulation on zero-latency edges inflates it.
    pub fn volume(&self) -> T {
        self.flows.iter().copied().sum()
    }

    /// Largest conservation violation over intermediate nodes, together with
    /// the deviation of the source's net outflow from the demand.
    pub fn conservation_defect(&self, network: &RoutingNetwork<T>) -> T {
        let n = network.nodes().len();
        let mut net_out = vec![T::zero(); n];
        for (e, f) in network.edges().iter().zip(&self.flows) {
            net_out[e.from] = net_out[e.from] + *f;
            net_out[e.to] = net_out[e.to] - *f;
        }
        let mut worst = (net_out[network.source()] - network.demand()).abs();
        for (node, v) in net_out.iter().enumerate() {
            if node != network.source() && node != network.sink() {
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

/// Expected latency-to-sink `(Λ0, Λ1)` along each option of every decision
/// node, in decision order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionLatencies<T> {
    pub options: Vec<(T, T)>,
}

/// Share of the tail node's inflow carried by each edge.
fn edge_shares<T: Scalar>(
    network: &RoutingNetwork<T>,
    fractions: &RoutingFractions<T>,
) -> Result<Vec<T>> {
    if fractions.len() != network.decisions().len() {
        return Err(Error::invalid(format!(
            "expected {} routing fractions, got {}",
            network.decisions().len(),
            fractions.len()
        )));
    }
    let mut shares = vec![T::one(); network.edges().len()];
    for (d, p) in network.decisions().iter().zip(fractions.values()) {
        shares[d.options[0]] = *p;
        shares[d.options[1]] = T::one() - *p;
    }
    Ok(shares)
}

/// Index of every non-sink node within the reduced linear systems.
fn reduced_index<T: Scalar>(network: &RoutingNetwork<T>, node: usize) -> Option<usize> {
    let sink = network.sink();
    match node.cmp(&sink) {
        std::cmp::Ordering::Less => Some(node),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(node - 1),
    }
}

fn divergence_check<T: Scalar>(det: T) -> Result<()> {
    if !(det > T::lit(LOOP_DIVERGENCE_THRESHOLD)) {
        return Err(Error::LoopDivergence {
            determinant: det.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Propagates the demand through the network. Node inflows satisfy
/// `in_n = injection_n + Σ_{e: m→n} share_e · in_m`, solved exactly so that
/// the u/v circulation is summed as its geometric-series limit.
pub fn solve_flows<T: Scalar>(
    network: &RoutingNetwork<T>,
    fractions: &RoutingFractions<T>,
) -> Result<FlowAssignment<T>> {
    let shares = edge_shares(network, fractions)?;
    let index = |node: usize| reduced_index(network, node);
    let m = network.nodes().len() - 1;
    let mut a = vec![T::zero(); m * m];
    for i in 0..m {
        a[i * m + i] = T::one();
    }
    for (e, share) in network.edges().iter().zip(&shares) {
        if let (Some(from), Some(to)) = (index(e.from), index(e.to)) {
            a[to * m + from] = a[to * m + from] - *share;
        }
    }
    let mut rhs = vec![T::zero(); m];
    rhs[index(network.source()).expect("source is not the sink")] = network.demand();

    let (inflow, det) = solve_with_det(a, rhs);
    divergence_check(det)?;
    let inflow = inflow.ok_or(Error::LoopDivergence { determinant: 0.0 })?;
    let flows = network
        .edges()
        .iter()
        .zip(&shares)
        .map(|(e, share)| {
            let from = index(e.from).expect("edges never leave the sink");
            (*share * inflow[from]).max(T::zero())
        })
        .collect();
    Ok(FlowAssignment { flows })
}

/// `C_T = Σ_e f_e · L_e(f_e)`.
pub fn total_cost<T: Scalar>(network: &RoutingNetwork<T>, flows: &FlowAssignment<T>) -> T {
    network
        .edges()
        .iter()
        .zip(&flows.flows)
        .map(|(e, f)| *f * e.latency.eval(*f))
        .sum()
}

/// `Φ = Σ_e ∫_0^{f_e} L_e(z) dz`, minimized by Wardrop equilibria.
pub fn beckmann_potential<T: Scalar>(network: &RoutingNetwork<T>, flows: &FlowAssignment<T>) -> T {
    network
        .edges()
        .iter()
        .zip(&flows.flows)
        .map(|(e, f)| e.latency.integral(*f))
        .sum()
}

/// Downstream-aware option latencies. Node values solve
/// `V_t = 0`, `V_n = Σ_{e out of n} share_e · (L_e(f_e) + V_{head(e)})`, and
/// each option is priced as `L_e(f_e) + V_{head(e)}`.
pub fn option_latencies<T: Scalar>(
    network: &RoutingNetwork<T>,
    fractions: &RoutingFractions<T>,
    flows: &FlowAssignment<T>,
) -> Result<OptionLatencies<T>> {
    let shares = edge_shares(network, fractions)?;
    let index = |node: usize| reduced_index(network, node);
    let m = network.nodes().len() - 1;
    let mut a = vec![T::zero(); m * m];
    for i in 0..m {
        a[i * m + i] = T::one();
    }
    let mut rhs = vec![T::zero(); m];
    let latencies: Vec<T> = network
        .edges()
        .iter()
        .zip(&flows.flows)
        .map(|(e, f)| e.latency.eval(*f))
        .collect();
    for ((e, share), lat) in network.edges().iter().zip(&shares).zip(&latencies) {
        let from = index(e.from).expect("edges never leave the sink");
        rhs[from] = rhs[from] + *share * *lat;
        if let Some(to) = index(e.to) {
            a[from * m + to] = a[from * m + to] - *share;
        }
    }
    let (values, det) = solve_with_det(a, rhs);
    divergence_check(det)?;
    let values = values.ok_or(Error::LoopDivergence { determinant: 0.0 })?;
    let value_at = |node: usize| index(node).map_or(T::zero(), |i| values[i]);
    let price = |edge: usize| latencies[edge] + value_at(network.edges()[edge].to);
    Ok(OptionLatencies {
        options: network
            .decisions()
            .iter()
            .map(|d| (price(d.options[0]), price(d.options[1])))
            .collect(),
    })
}
