use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    beckmann_potential, solve_flows, total_cost, FlowAssignment, RoutingFractions, RoutingNetwork,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coarse grid spacing over each routing fraction.
pub const GRID_STEP: f64 = 0.01;
/// Coordinate-descent refinement stops once its step falls below this.
pub const REFINE_RESOLUTION: f64 = 1e-6;
/// The grid has `101^k` points for `k` decision nodes.
pub const MAX_SEARCH_DECISION_NODES: usize = 6;

const GRID_POINTS: usize = 101;
const CHUNK: usize = 4096;

/// Result of a fraction-space search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution<T> {
    pub fractions: Vec<T>,
    pub flows: FlowAssignment<T>,
    /// Value of the minimized objective (potential or cost).
    pub objective: T,
    /// Total cost of `flows`.
    pub cost: T,
}

#[derive(Clone)]
struct Candidate<T> {
    fractions: Vec<T>,
    flows: FlowAssignment<T>,
    objective: T,
}

fn tie_tolerance<T: Scalar>(a: T, b: T) -> T {
    T::lit(1e-14).max(T::epsilon() * T::lit(8.0)) * T::one().max(a.abs()).max(b.abs())
}

/// Orders candidates by objective, then (on ties) by total flow volume so that
/// pointless circulation on zero-latency edges loses, then by distance to the
/// uniform fractions.
fn compare<T: Scalar>(a: &Candidate<T>, b: &Candidate<T>) -> Ordering {
    let tol = tie_tolerance(a.objective, b.objective);
    if a.objective < b.objective - tol {
        return Ordering::Less;
    }
    if a.objective > b.objective + tol {
        return Ordering::Greater;
    }
    let (va, vb) = (a.flows.volume(), b.flows.volume());
    let tol = tie_tolerance(va, vb) * T::lit(1e3);
    if va < vb - tol {
        return Ordering::Less;
    }
    if va > vb + tol {
        return Ordering::Greater;
    }
    let centre = |p: &[T]| -> T {
        p.iter()
            .map(|x| (*x - T::lit(0.5)) * (*x - T::lit(0.5)))
            .sum()
    };
    centre(&a.fractions)
        .partial_cmp(&centre(&b.fractions))
        .unwrap_or(Ordering::Equal)
}

fn keep_better<T: Scalar>(
    best: Option<Candidate<T>>,
    next: Option<Candidate<T>>,
) -> Option<Candidate<T>> {
    match (best, next) {
        (Some(b), Some(n)) => Some(if compare(&n, &b) == Ordering::Less {
            n
        } else {
            b
        }),
        (b, n) => b.or(n),
    }
}

fn evaluate<T, F>(
    network: &RoutingNetwork<T>,
    fractions: Vec<T>,
    objective: &F,
) -> Option<Candidate<T>>
where
    T: Scalar,
    F: Fn(&RoutingNetwork<T>, &FlowAssignment<T>) -> T,
{
    let fr = RoutingFractions::new(fractions).ok()?;
    let flows = solve_flows(network, &fr).ok()?;
    let objective = objective(network, &flows);
    if !objective.is_finite() {
        return None;
    }
    Some(Candidate {
        fractions: fr.0,
        flows,
        objective,
    })
}

fn grid_fractions<T: Scalar>(mut index: usize, k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k];
    for slot in out.iter_mut().rev() {
        *slot = T::lit((index % GRID_POINTS) as f64 * GRID_STEP);
        index /= GRID_POINTS;
    }
    out
}

/// Grid search over `[0,1]^k` at `GRID_STEP`, skipping divergent points,
/// then coordinate descent down to `REFINE_RESOLUTION`. Grid points are
/// reduced in fixed-size chunks in index order so the winner does not depend
/// on the thread count.
fn search<T, F>(network: &RoutingNetwork<T>, objective: F) -> Result<FlowSolution<T>>
where
    T: Scalar,
    F: Fn(&RoutingNetwork<T>, &FlowAssignment<T>) -> T + Sync,
{
    let k = network.decisions().len();
    if k > MAX_SEARCH_DECISION_NODES {
        return Err(Error::invalid(format!(
            "fraction search supports at most {MAX_SEARCH_DECISION_NODES} decision nodes, got {k}"
        )));
    }
    let total = GRID_POINTS.pow(k as u32);
    let chunks: Vec<Option<Candidate<T>>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(total))
                .map(|i| evaluate(network, grid_fractions(i, k), &objective))
                .fold(None, keep_better)
        })
        .collect();
    let mut best = chunks
        .into_iter()
        .fold(None, keep_better)
        .ok_or_else(|| Error::invalid("no grid point yields convergent flows"))?;

    let mut step = GRID_STEP / 2.0;
    while step >= REFINE_RESOLUTION {
        let h = T::lit(step);
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..k {
                for dir in [h, -h] {
                    let mut p = best.fractions.clone();
                    p[i] = (p[i] + dir).max(T::zero()).min(T::one());
                    if p[i] == best.fractions[i] {
                        continue;
                    }
                    if let Some(c) = evaluate(network, p, &objective) {
                        // Ties may only move sideways, never uphill: chained
                        // within-tolerance ascents would otherwise drift away.
                        if compare(&c, &best) == Ordering::Less && c.objective <= best.objective {
                            best = c;
                            improved = true;
                        }
                    }
                }
            }
        }
        step /= 2.0;
    }

    let cost = total_cost(network, &best.flows);
    Ok(FlowSolution {
        fractions: best.fractions,
        flows: best.flows,
        objective: best.objective,
        cost,
    })
}

/// Wardrop equilibrium as the minimizer of the Beckmann potential over
/// achievable routing fractions.
pub fn classical_equilibrium<T: Scalar>(network: &RoutingNetwork<T>) -> Result<FlowSolution<T>> {
    search(network, beckmann_potential)
}

/// Socially optimal flow: the minimizer of the total cost.
pub fn optimal_flow<T: Scalar>(network: &RoutingNetwork<T>) -> Result<FlowSolution<T>> {
    search(network, total_cost)
}

/// `κ = C_T(equilibrium) / C_T(optimum)`.
pub fn price_of_anarchy<T: Scalar>(network: &RoutingNetwork<T>) -> Result<T> {
    let eq = classical_equilibrium(network)?;
    let opt = optimal_flow(network)?;
    if !(opt.cost > T::epsilon()) {
        return Err(Error::UndefinedRatio {
            optimal: opt.cost.to_f64_lossy(),
        });
    }
    Ok(eq.cost / opt.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{make_braess, BraessLatencies, LatencyFn};

    #[test]
    fn grid_index_decoding() {
        let p: Vec<f64> = grid_fractions(101 * 101 + 2, 3);
        assert!((p[0] - 0.01).abs() < 1e-15);
        assert!((p[1] - 0.0).abs() < 1e-15);
        assert!((p[2] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn braess_equilibrium_routes_through_middle() {
        let net = make_braess::<f64>(true, &BraessLatencies::default()).unwrap();
        let eq = classical_equilibrium(&net).unwrap();
        assert!((eq.cost - 2.0).abs() < 1e-3);
        let want = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        for (g, w) in eq.flows.flows.iter().zip(want) {
            assert!((g - w).abs() < 1e-3, "{:?}", eq.flows);
        }
    }

    #[test]
    fn open_network_splits_evenly() {
        let net = make_braess::<f64>(false, &BraessLatencies::default()).unwrap();
        let eq = classical_equilibrium(&net).unwrap();
        assert!((eq.cost - 1.5).abs() < 1e-9);
        assert!((eq.fractions[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn flat_potential_breaks_tie_at_half() {
        let lat = BraessLatencies {
            su: LatencyFn::<f64>::constant(0.5),
            sv: LatencyFn::constant(0.5),
            ut: LatencyFn::constant(0.5),
            vt: LatencyFn::constant(0.5),
            ..Default::default()
        };
        let net = make_braess(false, &lat).unwrap();
        let eq = classical_equilibrium(&net).unwrap();
        assert!((eq.cost - 1.0).abs() < 1e-12);
        assert_eq!(eq.fractions, vec![0.5]);
        let opt = optimal_flow(&net).unwrap();
        assert!((opt.cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn price_of_anarchy_values() {
        let full = make_braess::<f64>(true, &BraessLatencies::default()).unwrap();
        assert!((price_of_anarchy(&full).unwrap() - 4.0 / 3.0).abs() < 1e-3);
        let open = make_braess::<f64>(false, &BraessLatencies::default()).unwrap();
        assert!((price_of_anarchy(&open).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_cost_network_has_undefined_ratio() {
        let lat = BraessLatencies {
            su: LatencyFn::zero(),
            sv: LatencyFn::zero(),
            ut: LatencyFn::zero(),
            vt: LatencyFn::zero(),
            ..Default::default()
        };
        let net = make_braess::<f64>(false, &lat).unwrap();
        assert!(matches!(
            price_of_anarchy(&net),
            Err(Error::UndefinedRatio { .. })
        ));
    }
}
