//! Quantum routing games on congestion networks.
//!
//! Decision nodes of a routing network each own one qubit. The qubits are
//! entangled, rotated by the players' strategy unitaries, disentangled and
//! measured; the probability that a node's qubit reads 0 is the share of its
//! inflow sent along its first outgoing edge. A repeated game lets each player
//! adjust its three rotation angles from finite-difference samples of a local
//! latency objective.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types used by the experiment
//! drivers and the command-line tool.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod network;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type QuantumState = quantum::QuantumState<f64>;
pub type StrategyParams = quantum::StrategyParams<f64>;
pub type LatencyFn = network::LatencyFn<f64>;
pub type RoutingNetwork = network::RoutingNetwork<f64>;
pub type FlowAssignment = network::FlowAssignment<f64>;
pub type GameConfig = dynamics::GameConfig<f64>;
pub type RunTrace = dynamics::RunTrace<f64>;

pub type QuantumStateF32 = quantum::QuantumState<f32>;
pub type RoutingNetworkF32 = network::RoutingNetwork<f32>;
pub type GameConfigF32 = dynamics::GameConfig<f32>;
