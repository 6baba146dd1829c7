//! Experiment drivers: seed ensembles, entanglement sweeps and latency-variant
//! comparisons, plus the file formats and result emitters used by the CLI.
//!
//! Runs are independent and execute on the rayon pool; results are always
//! assembled in seed order (and γ order for sweeps), so the thread count never
//! changes the output.

mod emit;
mod files;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_repeated_game, GameConfig};
use crate::error::{Error, Result};
use crate::network::{
    classical_equilibrium, make_braess, optimal_flow, BraessLatencies, LatencyFn, RoutingNetwork,
};
use crate::quantum::StrategyParams;

pub use emit::{emit, format_sig, Emit, OutputFormat, Table, TraceOutput};
pub use files::{parse_config, parse_network, render_config, render_network};

/// Per-seed outcome of one repeated game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub seed: u64,
    /// Mean total cost over the final convergence window.
    pub cost: f64,
    pub converged: bool,
    pub convergence_iteration: Option<usize>,
    pub final_strategies: Vec<StrategyParams<f64>>,
    pub final_flows: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub gamma: f64,
    pub rows: Vec<EnsembleRow>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl EnsembleResult {
    pub fn costs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cost).collect()
    }

    pub fn median_cost(&self) -> f64 {
        median(&mut self.costs())
    }

    /// `max - min` of the per-seed equilibrium costs.
    pub fn cost_spread(&self) -> f64 {
        let costs = self.costs();
        let hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn convergence_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.converged).count() as f64 / self.rows.len() as f64
    }

    /// Cross-seed population standard deviation of each final angle, ordered
    /// player by player as θ, φ, α.
    pub fn parameter_std_devs(&self) -> Vec<f64> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        let n = self.rows.len() as f64;
        (0..first.final_strategies.len() * 3)
            .map(|i| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .map(|r| r.final_strategies[i / 3].get(i % 3))
                    .collect();
                let mean = vals.iter().sum::<f64>() / n;
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect()
    }

    /// Row whose cost is the (lower) median.
    pub fn median_row(&self) -> Option<&EnsembleRow> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| self.rows[a].cost.total_cmp(&self.rows[b].cost));
        order
            .get(self.rows.len().saturating_sub(1) / 2)
            .map(|&i| &self.rows[i])
    }
}

/// Runs `n_seeds` games with seeds `config.seed ..= config.seed + n_seeds - 1`.
pub fn ensemble(
    config: &GameConfig<f64>,
    network: &RoutingNetwork<f64>,
    n_seeds: usize,
) -> Result<EnsembleResult> {
    if n_seeds == 0 {
        return Err(Error::Range {
            field: "seeds".into(),
            message: "at least one seed is required".into(),
        });
    }
    config.validate()?;
    let rows = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = GameConfig {
                seed: config.seed.wrapping_add(i),
                ..config.clone()
            };
            let trace = run_repeated_game(&cfg, network)?;
            let s = trace.summary;
            Ok(EnsembleRow {
                seed: cfg.seed,
                cost: s.cost,
                converged: s.convergence.is_converged(),
                convergence_iteration: s.convergence.iteration(),
                final_strategies: s.final_strategies,
                final_flows: s.final_flows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult {
        gamma: config.gamma,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub median_cost: f64,
    pub spread: f64,
    /// Median equilibrium cost divided by the optimal cost.
    pub kappa_q: f64,
    pub convergence_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub optimal_cost: f64,
    pub rows: Vec<SweepRow>,
}

/// `points` evenly spaced values on `[0, π/2]`.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| FRAC_PI_2 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Number of points of the default sweep grid.
pub const DEFAULT_SWEEP_POINTS: usize = 33;

pub fn gamma_sweep(
    config: &GameConfig<f64>,
    network: &RoutingNetwork<f64>,
    grid: &[f64],
    seeds_per_point: usize,
) -> Result<SweepResult> {
    if let Some(g) = grid
        .iter()
        .find(|g| !(0.0..=FRAC_PI_2 + 1e-12).contains(*g))
    {
        return Err(Error::Range {
            field: "gamma".into(),
            message: format!("sweep points must lie in [0, pi/2], got {g}"),
        });
    }
    let optimal_cost = optimal_flow(network)?.cost;
    let rows = grid
        .iter()
        .map(|&gamma| {
            let cfg = GameConfig {
                gamma,
                ..config.clone()
            };
            let ens = ensemble(&cfg, network, seeds_per_point)?;
            let median_cost = ens.median_cost();
            Ok(SweepRow {
                gamma,
                median_cost,
                spread: ens.cost_spread(),
                kappa_q: median_cost / optimal_cost,
                convergence_rate: ens.convergence_rate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { optimal_cost, rows })
}

/// Classical analysis of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub equilibrium_cost: f64,
    pub optimal_cost: f64,
    pub kappa: f64,
    pub equilibrium_fractions: Vec<f64>,
    pub equilibrium_flows: Vec<f64>,
    pub optimal_fractions: Vec<f64>,
    pub optimal_flows: Vec<f64>,
    pub edge_labels: Vec<String>,
}

pub fn classical_report(network: &RoutingNetwork<f64>) -> Result<ClassicalReport> {
    let eq = classical_equilibrium(network)?;
    let opt = optimal_flow(network)?;
    if !(opt.cost > f64::EPSILON) {
        return Err(Error::UndefinedRatio { optimal: opt.cost });
    }
    Ok(ClassicalReport {
        equilibrium_cost: eq.cost,
        optimal_cost: opt.cost,
        kappa: eq.cost / opt.cost,
        equilibrium_fractions: eq.fractions,
        equilibrium_flows: eq.flows.flows,
        optimal_fractions: opt.fractions,
        optimal_flows: opt.flows.flows,
        edge_labels: (0..network.edges().len())
            .map(|e| network.edge_label(e))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub name: String,
    pub mirror_symmetric: Option<bool>,
    pub diagonal_symmetric: Option<bool>,
    pub classical_cost: f64,
    pub optimal_cost: f64,
    pub quantum_cost: f64,
    pub kappa_c: f64,
    pub kappa_q: f64,
    pub classical_flows: Vec<f64>,
    /// Final flows of the median-cost quantum run.
    pub quantum_flows: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub gamma: f64,
    pub rows: Vec<VariantRow>,
}

/// Compares classical and quantum prices of anarchy. The quantum side runs an
/// ensemble at `γ = π/4` regardless of `config.gamma`.
pub fn variant_comparison(
    variants: &[(String, RoutingNetwork<f64>)],
    config: &GameConfig<f64>,
    seeds: usize,
) -> Result<VariantReport> {
    let cfg = GameConfig {
        gamma: FRAC_PI_4,
        ..config.clone()
    };
    let rows = variants
        .iter()
        .map(|(name, network)| {
            let classical = classical_report(network)?;
            let ens = ensemble(&cfg, network, seeds)?;
            let quantum_cost = ens.median_cost();
            Ok(VariantRow {
                name: name.clone(),
                mirror_symmetric: network.is_mirror_symmetric(),
                diagonal_symmetric: network.is_diagonally_symmetric(),
                classical_cost: classical.equilibrium_cost,
                optimal_cost: classical.optimal_cost,
                quantum_cost,
                kappa_c: classical.kappa,
                kappa_q: quantum_cost / classical.optimal_cost,
                classical_flows: classical.equilibrium_flows,
                quantum_flows: ens.median_row().and_then(|r| r.final_flows.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariantReport {
        gamma: FRAC_PI_4,
        rows,
    })
}

/// Every assignment of a unit constant (`1`), linear (`f`) or quadratic
/// (`f2`) latency to the four outer Braess edges, with the zero-latency
/// central pair present: 81 networks named like `su=f,sv=1,ut=1,vt=f`.
pub fn latency_family() -> Result<Vec<(String, RoutingNetwork<f64>)>> {
    let kinds: [(&str, LatencyFn<f64>); 3] = [
        ("1", LatencyFn::constant(1.0)),
        ("f", LatencyFn::linear(1.0)),
        ("f2", LatencyFn::quadratic(1.0)),
    ];
    let mut out = Vec::with_capacity(81);
    for su in &kinds {
        for sv in &kinds {
            for ut in &kinds {
                for vt in &kinds {
                    let lat = BraessLatencies {
                        su: su.1,
                        sv: sv.1,
                        ut: ut.1,
                        vt: vt.1,
                        ..Default::default()
                    };
                    let name = format!("su={},sv={},ut={},vt={}", su.0, sv.0, ut.0, vt.0);
                    out.push((name, make_braess(true, &lat)?));
                }
            }
        }
    }
    Ok(out)
}
