//! Repeated-game learning: every round each player samples its local
//! objective with one angle nudged by `d` and moves that angle by the gain
//! times the observed change. All nine angles update together from the same
//! base point.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    option_latencies, solve_flows, total_cost, FlowAssignment, OptionLatencies, RoutingFractions,
    RoutingNetwork,
};
use crate::quantum::{final_state, marginals, StrategyParams};
use crate::scalar::Scalar;

/// Local objective a player samples each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    /// `L_opt0(f_opt0) - L_opt1(f_opt1)`: latency difference of the two
    /// outgoing edges alone.
    EdgeDiff,
    /// `Λ0 - Λ1`: difference of expected latency-to-sink along each option.
    PathDiff,
    /// `p·Λ0 + (1-p)·Λ1`: the node's own expected latency-to-sink.
    OwnLatency,
}

impl ObjectiveMode {
    pub const ALL: [ObjectiveMode; 3] = [Self::EdgeDiff, Self::PathDiff, Self::OwnLatency];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EdgeDiff => "edge-diff",
            Self::PathDiff => "path-diff",
            Self::OwnLatency => "own-latency",
        }
    }
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown objective mode `{s}`")))
    }
}

/// Direction of the update `param ← param ∓ M·(C_base − C_perturbed)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSign {
    /// `param − M·(C_base − C_perturbed)`, i.e. roughly `param + M·d·∂C`:
    /// climbs the sampled objective.
    Paper,
    /// `param + M·(C_base − C_perturbed)`: steps against the sampled slope.
    Descent,
}

impl StepSign {
    pub const ALL: [StepSign; 2] = [Self::Paper, Self::Descent];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Descent => "descent",
        }
    }
}

impl fmt::Display for StepSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown step sign `{s}`")))
    }
}

/// Parameters of one repeated game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig<T> {
    pub gamma: T,
    pub gain: T,
    pub fd_step: T,
    pub iterations: usize,
    pub seed: u64,
    pub objective: ObjectiveMode,
    pub step_sign: StepSign,
    /// Cost substituted for routing fractions whose u/v loop never drains.
    pub penalty_cost: T,
    pub convergence_window: usize,
    pub convergence_tol: T,
}

impl<T: Scalar> Default for GameConfig<T> {
    /// Gain 10, step 0.01, 400 rounds, path-difference objective with the
    /// printed update sign; this pairing reproduces the 2.0 / 1.5 / 2.0
    /// equilibrium costs at γ = 0, π/4, π/2 on the canonical network.
    fn default() -> Self {
        Self {
            gamma: T::zero(),
            gain: T::lit(10.0),
            fd_step: T::lit(0.01),
            iterations: 400,
            seed: 0,
            objective: ObjectiveMode::PathDiff,
            step_sign: StepSign::Paper,
            penalty_cost: T::lit(1e6),
            convergence_window: 50,
            convergence_tol: T::lit(1e-3),
        }
    }
}

impl<T: Scalar> GameConfig<T> {
    /// Checks every field range, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, message: String| Error::Range {
            field: field.to_string(),
            message,
        };
        if !self.gamma.is_finite() {
            return Err(range(
                "gamma",
                format!("must be finite, got {}", self.gamma),
            ));
        }
        if !(self.gain >= T::zero()) || !self.gain.is_finite() {
            return Err(range(
                "gain",
                format!("must be finite and >= 0, got {}", self.gain),
            ));
        }
        if !(self.fd_step > T::zero()) || !self.fd_step.is_finite() {
            return Err(range(
                "fd_step",
                format!("must be positive, got {}", self.fd_step),
            ));
        }
        if self.iterations == 0 {
            return Err(range("iterations", "must be at least 1".into()));
        }
        if !(self.penalty_cost > T::zero()) || !self.penalty_cost.is_finite() {
            return Err(range(
                "penalty_cost",
                format!("must be positive, got {}", self.penalty_cost),
            ));
        }
        if self.convergence_window == 0 {
            return Err(range("convergence_window", "must be at least 1".into()));
        }
        if !(self.convergence_tol > T::zero()) {
            return Err(range(
                "convergence_tol",
                format!("must be positive, got {}", self.convergence_tol),
            ));
        }
        Ok(())
    }
}

/// One pass of the pipeline: state → marginals → flows → latencies → cost.
/// `flows` and `latencies` are `None` when the loop diverges, in which case
/// `total_cost` holds the penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub marginals: Vec<T>,
    pub flows: Option<FlowAssignment<T>>,
    pub latencies: Option<OptionLatencies<T>>,
    pub total_cost: T,
}

impl<T: Scalar> Evaluation<T> {
    pub fn diverged(&self) -> bool {
        self.flows.is_none()
    }
}

/// Player `k` owns qubit `k` and decision node `k` of `network`.
pub fn evaluate<T: Scalar>(
    strategies: &[StrategyParams<T>],
    gamma: T,
    network: &RoutingNetwork<T>,
    penalty_cost: T,
) -> Result<Evaluation<T>> {
    if strategies.len() != network.decisions().len() {
        return Err(Error::invalid(format!(
            "{} strategies for {} decision nodes",
            strategies.len(),
            network.decisions().len()
        )));
    }
    let state = final_state(strategies, gamma)?;
    let marginals = marginals(&state);
    let fractions = RoutingFractions::new(marginals.clone())?;
    let solved = solve_flows(network, &fractions)
        .and_then(|flows| Ok((option_latencies(network, &fractions, &flows)?, flows)));
    Ok(match solved {
        Ok((latencies, flows)) => Evaluation {
            total_cost: total_cost(network, &flows),
            marginals,
            flows: Some(flows),
            latencies: Some(latencies),
        },
        Err(Error::LoopDivergence { .. }) => Evaluation {
            marginals,
            flows: None,
            latencies: None,
            total_cost: penalty_cost,
        },
        Err(e) => return Err(e),
    })
}

/// The objective player `player` reads off an evaluation; the penalty when the
/// loop diverged.
pub fn local_cost<T: Scalar>(
    player: usize,
    mode: ObjectiveMode,
    evaluation: &Evaluation<T>,
    network: &RoutingNetwork<T>,
    penalty_cost: T,
) -> T {
    let (Some(flows), Some(latencies)) = (&evaluation.flows, &evaluation.latencies) else {
        return penalty_cost;
    };
    match mode {
        ObjectiveMode::EdgeDiff => {
            let [o0, o1] = network.decisions()[player].options;
            let lat = |e: usize| network.edges()[e].latency.eval(flows.get(e));
            lat(o0) - lat(o1)
        }
        ObjectiveMode::PathDiff => {
            let (l0, l1) = latencies.options[player];
            l0 - l1
        }
        ObjectiveMode::OwnLatency => {
            let (l0, l1) = latencies.options[player];
            let p = evaluation.marginals[player];
            p * l0 + (T::one() - p) * l1
        }
    }
}

/// Player's local cost after shifting one of its angles (0 = θ, 1 = φ,
/// 2 = α) by `d`, all other angles held fixed.
pub fn perturbed_cost<T: Scalar>(
    player: usize,
    param_index: usize,
    strategies: &[StrategyParams<T>],
    d: T,
    config: &GameConfig<T>,
    network: &RoutingNetwork<T>,
) -> Result<T> {
    if player >= strategies.len() || param_index > 2 {
        return Err(Error::invalid(format!(
            "no parameter {param_index} for player {player}"
        )));
    }
    let mut shifted = strategies.to_vec();
    let slot = shifted[player].get_mut(param_index);
    *slot = *slot + d;
    let eval = evaluate(&shifted, config.gamma, network, config.penalty_cost)?;
    Ok(local_cost(
        player,
        config.objective,
        &eval,
        network,
        config.penalty_cost,
    ))
}

/// Synchronous update of every angle from costs sampled at the same base
/// point. `perturbed[k][j]` is player `k`'s cost with angle `j` shifted.
pub fn update_step<T: Scalar>(
    strategies: &[StrategyParams<T>],
    base_costs: &[T],
    perturbed: &[[T; 3]],
    gain: T,
    sign: StepSign,
) -> Result<Vec<StrategyParams<T>>> {
    if base_costs.len() != strategies.len() || perturbed.len() != strategies.len() {
        return Err(Error::invalid(
            "one base cost and three perturbed costs per player",
        ));
    }
    Ok(strategies
        .iter()
        .zip(base_costs)
        .zip(perturbed)
        .map(|((s, base), pert)| {
            let mut next = *s;
            for (j, cp) in pert.iter().enumerate() {
                let step = gain * (*base - *cp);
                let slot = next.get_mut(j);
                *slot = match sign {
                    StepSign::Paper => *slot - step,
                    StepSign::Descent => *slot + step,
                };
            }
            next
        })
        .collect())
}

/// One round of a repeated game, recorded before that round's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub strategies: Vec<StrategyParams<T>>,
    pub marginals: Vec<T>,
    /// `None` when the loop diverged.
    pub flows: Option<Vec<T>>,
    pub local_costs: Vec<T>,
    pub total_cost: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Convergence {
    /// First iteration count `k` at which the trailing window of costs
    /// `[k - window, k)` has a spread below the tolerance.
    Converged {
        iteration: usize,
    },
    NotConverged,
}

impl Convergence {
    pub fn is_converged(&self) -> bool {
        matches!(self, Self::Converged { .. })
    }

    pub fn iteration(&self) -> Option<usize> {
        match self {
            Self::Converged { iteration } => Some(*iteration),
            Self::NotConverged => None,
        }
    }
}

/// End-of-run summary. The equilibrium cost is the mean over the final
/// convergence window, whether or not the run converged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary<T> {
    pub cost: T,
    pub convergence: Convergence,
    pub final_strategies: Vec<StrategyParams<T>>,
    pub final_marginals: Vec<T>,
    pub final_flows: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub summary: EquilibriumSummary<T>,
}

impl<T: Scalar> RunTrace<T> {
    pub fn costs(&self) -> Vec<T> {
        self.records.iter().map(|r| r.total_cost).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Uniform draws on `[0, 2π)` for θ, φ, α of each player in order.
pub fn initial_strategies<T: Scalar>(players: usize, seed: u64) -> Vec<StrategyParams<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
    (0..players)
        .map(|_| {
            let theta = draw();
            let phi = draw();
            let alpha = draw();
            StrategyParams::new(theta, phi, alpha)
        })
        .collect()
}

/// Runs `config.iterations` rounds from seeded random strategies.
pub fn run_repeated_game<T: Scalar>(
    config: &GameConfig<T>,
    network: &RoutingNetwork<T>,
) -> Result<RunTrace<T>> {
    let strategies = initial_strategies(network.decisions().len(), config.seed);
    run_from(config, network, strategies)
}

/// Runs `config.iterations` rounds starting from the given strategies.
pub fn run_from<T: Scalar>(
    config: &GameConfig<T>,
    network: &RoutingNetwork<T>,
    mut strategies: Vec<StrategyParams<T>>,
) -> Result<RunTrace<T>> {
    config.validate()?;
    let players = strategies.len();
    let mut records = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let eval = evaluate(&strategies, config.gamma, network, config.penalty_cost)?;
        let base: Vec<T> = (0..players)
            .map(|k| local_cost(k, config.objective, &eval, network, config.penalty_cost))
            .collect();
        let mut perturbed = vec![[T::zero(); 3]; players];
        for (k, row) in perturbed.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = perturbed_cost(k, j, &strategies, config.fd_step, config, network)?;
            }
        }
        records.push(TraceRecord {
            iteration,
            strategies: strategies.clone(),
            marginals: eval.marginals,
            flows: eval.flows.map(|f| f.flows),
            local_costs: base.clone(),
            total_cost: eval.total_cost,
        });
        strategies = update_step(
            &strategies,
            &base,
            &perturbed,
            config.gain,
            config.step_sign,
        )?;
    }

    let costs: Vec<T> = records.iter().map(|r| r.total_cost).collect();
    let convergence = detect_convergence(&costs, config.convergence_window, config.convergence_tol);
    let window = config.convergence_window.min(costs.len());
    let tail = &costs[costs.len() - window..];
    let cost = tail.iter().copied().sum::<T>() / T::lit(window as f64);
    let last = records.last().expect("at least one iteration");
    let summary = EquilibriumSummary {
        cost,
        convergence,
        final_strategies: last.strategies.clone(),
        final_marginals: last.marginals.clone(),
        final_flows: last.flows.clone(),
    };
    Ok(RunTrace { records, summary })
}

/// First `k >= window` at which `max - min` of `costs[k - window..k]` is below
/// `tol`. A window longer than the trace never converges.
pub fn detect_convergence<T: Scalar>(costs: &[T], window: usize, tol: T) -> Convergence {
    if window == 0 || window > costs.len() {
        return Convergence::NotConverged;
    }
    costs
        .windows(window)
        .position(|w| {
            let (lo, hi) = w
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), c| {
                    (lo.min(*c), hi.max(*c))
                });
            hi - lo < tol
        })
        .map_or(Convergence::NotConverged, |start| Convergence::Converged {
            iteration: start + window,
        })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use super::*;
    use crate::network::{make_braess, BraessLatencies};

    fn braess() -> RoutingNetwork<f64> {
        make_braess(true, &BraessLatencies::default()).unwrap()
    }

    fn id3() -> Vec<StrategyParams<f64>> {
        vec![StrategyParams::identity(); 3]
    }

    #[test]
    fn identity_strategies_route_s_u_t() {
        let ev = evaluate(&id3(), 0.0, &braess(), 1e6).unwrap();
        assert_eq!(ev.marginals, vec![1.0, 1.0, 1.0]);
        let f = ev.flows.unwrap();
        assert!((f.get(0) - 1.0).abs() < 1e-12 && (f.get(2) - 1.0).abs() < 1e-12);
        assert!((ev.total_cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_rotation_of_source_reaches_optimum() {
        let mut s = id3();
        s[0].theta = FRAC_PI_2;
        let ev = evaluate(&s, 0.0, &braess(), 1e6).unwrap();
        assert!((ev.marginals[0] - 0.5).abs() < 1e-12);
        assert!((ev.total_cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn closed_loop_is_penalized() {
        let mut s = id3();
        s[1].theta = std::f64::consts::PI;
        s[2].theta = std::f64::consts::PI;
        let ev = evaluate(&s, 0.0, &braess(), 1e6).unwrap();
        assert!(ev.diverged());
        assert_eq!(ev.total_cost, 1e6);
        assert_eq!(
            local_cost(0, ObjectiveMode::PathDiff, &ev, &braess(), 1e6),
            1e6
        );
    }

    #[test]
    fn edge_diff_examples() {
        let net = braess();
        let mut s = id3();
        s[0].theta = FRAC_PI_2;
        let ev = evaluate(&s, 0.0, &net, 1e6).unwrap();
        assert!((local_cost(1, ObjectiveMode::EdgeDiff, &ev, &net, 1e6) - 1.0).abs() < 1e-12);
        assert!((local_cost(0, ObjectiveMode::EdgeDiff, &ev, &net, 1e6) + 0.5).abs() < 1e-12);
        assert!((local_cost(1, ObjectiveMode::OwnLatency, &ev, &net, 1e6) - 1.0).abs() < 1e-12);
        assert!(local_cost(0, ObjectiveMode::PathDiff, &ev, &net, 1e6).abs() < 1e-12);
    }

    #[test]
    fn zero_shift_matches_base() {
        let net = braess();
        let s = initial_strategies::<f64>(3, 4);
        for mode in ObjectiveMode::ALL {
            let cfg = GameConfig {
                gamma: FRAC_PI_4,
                objective: mode,
                ..Default::default()
            };
            let ev = evaluate(&s, cfg.gamma, &net, cfg.penalty_cost).unwrap();
            for k in 0..3 {
                let base = local_cost(k, mode, &ev, &net, cfg.penalty_cost);
                for j in 0..3 {
                    assert_eq!(perturbed_cost(k, j, &s, 0.0, &cfg, &net).unwrap(), base);
                }
            }
        }
    }

    #[test]
    fn phase_shift_irrelevant_without_entanglement() {
        let net = braess();
        let s = initial_strategies::<f64>(3, 11);
        for mode in ObjectiveMode::ALL {
            let cfg = GameConfig {
                gamma: 0.0,
                objective: mode,
                ..Default::default()
            };
            let ev = evaluate(&s, 0.0, &net, cfg.penalty_cost).unwrap();
            let base = local_cost(0, mode, &ev, &net, cfg.penalty_cost);
            for j in [1, 2] {
                let c = perturbed_cost(0, j, &s, 0.01, &cfg, &net).unwrap();
                assert!((c - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_rule_signs() {
        let s = vec![StrategyParams::<f64>::new(1.0, 2.0, 3.0)];
        let pert = [[0.1, 0.3, 0.3]];
        let same = update_step(&s, &[0.3], &pert, 0.0, StepSign::Paper).unwrap();
        assert_eq!(same, s);
        let paper = update_step(&s, &[0.3], &pert, 10.0, StepSign::Paper).unwrap();
        assert!((paper[0].theta - (1.0 - 2.0)).abs() < 1e-12);
        assert_eq!(paper[0].phi, 2.0);
        let descent = update_step(&s, &[0.3], &pert, 10.0, StepSign::Descent).unwrap();
        assert!((descent[0].theta - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_trace_is_constant() {
        let cfg = GameConfig {
            gain: 0.0,
            gamma: FRAC_PI_4,
            iterations: 30,
            convergence_window: 10,
            ..Default::default()
        };
        let trace = run_repeated_game(&cfg, &braess()).unwrap();
        assert_eq!(trace.len(), 30);
        let first = &trace.records[0];
        assert!(trace
            .records
            .iter()
            .all(|r| r.total_cost == first.total_cost && r.strategies == first.strategies));
        assert_eq!(
            trace.summary.convergence,
            Convergence::Converged { iteration: 10 }
        );
    }

    #[test]
    fn convergence_detection() {
        let flat = vec![1.0; 80];
        assert_eq!(
            detect_convergence(&flat, 50, 1e-3),
            Convergence::Converged { iteration: 50 }
        );
        let ramp: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        assert_eq!(
            detect_convergence(&ramp, 50, 1e-3),
            Convergence::NotConverged
        );
        let settle: Vec<f64> = (0..100)
            .map(|i| if i < 20 { i as f64 } else { 5.0 })
            .collect();
        assert_eq!(
            detect_convergence(&settle, 10, 1e-3),
            Convergence::Converged { iteration: 30 }
        );
        assert_eq!(
            detect_convergence(&flat[..5], 10, 1e-3),
            Convergence::NotConverged
        );
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = GameConfig::<f64> {
            fd_step: 0.0,
            ..Default::default()
        };
        match cfg.validate() {
            Err(Error::Range { field, .. }) => assert_eq!(field, "fd_step"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ObjectiveMode::ALL {
            assert_eq!(m.as_str().parse::<ObjectiveMode>().unwrap(), m);
        }
        for s in StepSign::ALL {
            assert_eq!(s.as_str().parse::<StepSign>().unwrap(), s);
        }
        assert!("sideways".parse::<StepSign>().is_err());
    }
}
