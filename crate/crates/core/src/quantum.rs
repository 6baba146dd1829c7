//! Dense state-vector engine for the entangle / local-rotation / disentangle
//! pipeline run by the decision-node qubits.
//!
//! Basis index `b` is read as a bit string with qubit 0 in the most
//! significant position, so for three qubits `b = 0b100` is `|100⟩` and means
//! qubit 0 (the source player) measured 1.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A 2×2 complex matrix, row-major.
pub type Mat2<T> = [[Complex<T>; 2]; 2];

/// Rotation angles `(θ, φ, α)` chosen by one player. Unbounded by design:
/// angle windings are redundant strategies, not invalid ones.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategyParams<T> {
    pub theta: T,
    pub phi: T,
    pub alpha: T,
}

impl<T: Scalar> StrategyParams<T> {
    pub fn new(theta: T, phi: T, alpha: T) -> Self {
        Self { theta, phi, alpha }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.alpha.is_finite()
    }

    /// Parameter by index: 0 = θ, 1 = φ, 2 = α.
    pub fn get(&self, index: usize) -> T {
        match index {
            0 => self.theta,
            1 => self.phi,
            2 => self.alpha,
            _ => panic!("strategy parameter index {index} out of range"),
        }
    }

    pub fn get_mut(&mut self, index: usize) -> &mut T {
        match index {
            0 => &mut self.theta,
            1 => &mut self.phi,
            2 => &mut self.alpha,
            _ => panic!("strategy parameter index {index} out of range"),
        }
    }
}

/// Pure state of `n_qubits` qubits stored as `2^n_qubits` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> QuantumState<T> {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 16 {
            return Err(Error::invalid(format!(
                "qubit count must lie in 1..=16, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the
    /// vector normalized within `1e-9`.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        let dev = (state.norm_sqr() - T::one()).abs();
        if !(dev <= input_tolerance::<T>()) {
            return Err(Error::invalid(format!(
                "state is not normalized (|norm² - 1| = {dev})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of each basis outcome.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }
}

/// Tolerance applied to caller-supplied unitaries and states.
fn input_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// The strategy rotation
/// `[[e^{-iφ}cos(θ/2), e^{iα}sin(θ/2)], [-e^{-iα}sin(θ/2), e^{iφ}cos(θ/2)]]`.
pub fn strategy_unitary<T: Scalar>(params: &StrategyParams<T>) -> Result<Mat2<T>> {
    if !params.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite strategy parameters {params:?}"
        )));
    }
    let half = params.theta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let phase_phi = Complex::from_polar(T::one(), params.phi);
    let phase_alpha = Complex::from_polar(T::one(), params.alpha);
    Ok([
        [phase_phi.conj() * c, phase_alpha * s],
        [-(phase_alpha.conj() * s), phase_phi * c],
    ])
}

/// Largest entry of `|U†U - I|`.
pub fn unitarity_defect<T: Scalar>(u: &Mat2<T>) -> T {
    let mut worst = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = u
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |acc, row| {
                    acc + row[i].conj() * row[j]
                });
            if i == j {
                acc.re = acc.re - T::one();
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Applies `cos(γ)·I + i·sin(γ)·σx^{⊗N}`, or its adjoint (sign of the
/// `σx^{⊗N}` term flipped). The closed form holds because `σx^{⊗N}` squares
/// to the identity; it maps basis index `b` to its bitwise complement.
pub fn apply_entangler<T: Scalar>(
    state: &QuantumState<T>,
    gamma: T,
    adjoint: bool,
) -> Result<QuantumState<T>> {
    if !gamma.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite entangling parameter {gamma}"
        )));
    }
    let (s, c) = gamma.sin_cos();
    let flip_coeff = if adjoint {
        Complex::new(T::zero(), -s)
    } else {
        Complex::new(T::zero(), s)
    };
    let all = state.amplitudes.len() - 1;
    let amplitudes = (0..state.amplitudes.len())
        .map(|b| state.amplitudes[b] * c + state.amplitudes[b ^ all] * flip_coeff)
        .collect();
    Ok(QuantumState {
        n_qubits: state.n_qubits,
        amplitudes,
    })
}

/// Applies `U_0 ⊗ U_1 ⊗ … ⊗ U_{N-1}` one qubit at a time.
pub fn apply_local_unitaries<T: Scalar>(
    state: &QuantumState<T>,
    unitaries: &[Mat2<T>],
) -> Result<QuantumState<T>> {
    if unitaries.len() != state.n_qubits {
        return Err(Error::invalid(format!(
            "expected {} local unitaries, got {}",
            state.n_qubits,
            unitaries.len()
        )));
    }
    let tol = input_tolerance::<T>();
    for (k, u) in unitaries.iter().enumerate() {
        let defect = unitarity_defect(u);
        if !(defect <= tol) {
            return Err(Error::invalid(format!(
                "unitary for qubit {k} is not unitary (defect {defect})"
            )));
        }
    }
    let mut amplitudes = state.amplitudes.clone();
    for (k, u) in unitaries.iter().enumerate() {
        let mask = state.bit_mask(k);
        for b0 in (0..amplitudes.len()).filter(|b| b & mask == 0) {
            let b1 = b0 | mask;
            let (a0, a1) = (amplitudes[b0], amplitudes[b1]);
            amplitudes[b0] = u[0][0] * a0 + u[0][1] * a1;
            amplitudes[b1] = u[1][0] * a0 + u[1][1] * a1;
        }
    }
    Ok(QuantumState {
        n_qubits: state.n_qubits,
        amplitudes,
    })
}

/// `J†(γ) · (U_0 ⊗ … ⊗ U_{N-1}) · J(γ) · |0…0⟩`, one qubit per strategy.
pub fn final_state<T: Scalar>(
    strategies: &[StrategyParams<T>],
    gamma: T,
) -> Result<QuantumState<T>> {
    let unitaries = strategies
        .iter()
        .map(strategy_unitary)
        .collect::<Result<Vec<_>>>()?;
    let start = QuantumState::zero(strategies.len())?;
    let entangled = apply_entangler(&start, gamma, false)?;
    let rotated = apply_local_unitaries(&entangled, &unitaries)?;
    apply_entangler(&rotated, gamma, true)
}

/// Exact per-qubit probability of measuring 0.
pub fn marginals<T: Scalar>(state: &QuantumState<T>) -> Vec<T> {
    let probs = state.probabilities();
    (0..state.n_qubits)
        .map(|k| {
            let mask = state.bit_mask(k);
            let p: T = probs
                .iter()
                .enumerate()
                .filter(|(b, _)| b & mask == 0)
                .map(|(_, p)| *p)
                .sum();
            p.max(T::zero()).min(T::one())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;

    type C = Complex<f64>;

    fn close(a: C, b: C) -> bool {
        (a - b).norm() < 1e-12
    }

    fn basis(n: usize, index: usize) -> QuantumState<f64> {
        let mut amps = vec![C::new(0.0, 0.0); 1 << n];
        amps[index] = C::new(1.0, 0.0);
        QuantumState::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn identity_angles_give_identity() {
        let u = strategy_unitary(&StrategyParams::new(0.0, 0.0, 0.0)).unwrap();
        assert!(close(u[0][0], C::new(1.0, 0.0)));
        assert!(close(u[0][1], C::new(0.0, 0.0)));
        assert!(close(u[1][0], C::new(0.0, 0.0)));
        assert!(close(u[1][1], C::new(1.0, 0.0)));
    }

    #[test]
    fn zero_theta_is_diagonal_phase() {
        let u = strategy_unitary(&StrategyParams::new(0.0, 0.7, -2.3)).unwrap();
        assert!(close(u[0][0], C::from_polar(1.0, -0.7)));
        assert!(close(u[1][1], C::from_polar(1.0, 0.7)));
        assert!(close(u[0][1], C::new(0.0, 0.0)));
        assert!(close(u[1][0], C::new(0.0, 0.0)));
    }

    #[test]
    fn theta_pi_is_antidiagonal() {
        let u = strategy_unitary(&StrategyParams::new(PI, 0.0, 0.0)).unwrap();
        assert!(close(u[0][0], C::new(0.0, 0.0)));
        assert!(close(u[0][1], C::new(1.0, 0.0)));
        assert!(close(u[1][0], C::new(-1.0, 0.0)));
        assert!(close(u[1][1], C::new(0.0, 0.0)));
    }

    #[test]
    fn non_finite_parameters_rejected() {
        let err = strategy_unitary(&StrategyParams::new(f64::NAN, 0.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = strategy_unitary(&StrategyParams::new(0.0, f64::INFINITY, 0.0));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn entangler_at_zero_is_identity() {
        let mut amps: Vec<C> = (0..8).map(|i| C::new(i as f64, 0.5 - i as f64)).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let state = QuantumState::from_amplitudes(amps).unwrap();
        let out = apply_entangler(&state, 0.0, false).unwrap();
        for (a, b) in out.amplitudes().iter().zip(state.amplitudes()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn entangler_half_pi_flips_all() {
        let out = apply_entangler(&basis(3, 0), FRAC_PI_2, false).unwrap();
        assert!(close(out.amplitudes()[7], C::new(0.0, 1.0)));
        assert!((out.probabilities()[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entangler_quarter_pi_is_ghz_like() {
        let out = apply_entangler(&basis(3, 0), FRAC_PI_4, false).unwrap();
        assert!(close(out.amplitudes()[0], C::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(out.amplitudes()[7], C::new(0.0, FRAC_1_SQRT_2)));
        for b in 1..7 {
            assert!(close(out.amplitudes()[b], C::new(0.0, 0.0)));
        }
    }

    #[test]
    fn entangler_adjoint_undoes_forward() {
        let fwd = apply_entangler(&basis(3, 5), 0.37, false).unwrap();
        let back = apply_entangler(&fwd, 0.37, true).unwrap();
        assert!(close(back.amplitudes()[5], C::new(1.0, 0.0)));
    }

    #[test]
    fn local_identities_leave_state() {
        let id = strategy_unitary(&StrategyParams::<f64>::identity()).unwrap();
        let state = apply_entangler(&basis(3, 0), 0.3, false).unwrap();
        let out = apply_local_unitaries(&state, &[id, id, id]).unwrap();
        assert_eq!(out.amplitudes().len(), 8);
        for (a, b) in out.amplitudes().iter().zip(state.amplitudes()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn local_rotation_on_first_qubit() {
        let u = strategy_unitary(&StrategyParams::new(FRAC_PI_2, 0.0, 0.0)).unwrap();
        let id = strategy_unitary(&StrategyParams::<f64>::identity()).unwrap();
        let out = apply_local_unitaries(&basis(3, 0), &[u, id, id]).unwrap();
        // column 0 of U lands on |000⟩ and |100⟩
        assert!(close(out.amplitudes()[0], C::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(out.amplitudes()[4], C::new(-FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn wrong_unitary_count_rejected() {
        let id = strategy_unitary(&StrategyParams::<f64>::identity()).unwrap();
        let err = apply_local_unitaries(&basis(3, 0), &[id, id]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn non_unitary_rejected() {
        let id = strategy_unitary(&StrategyParams::<f64>::identity()).unwrap();
        let mut bad = id;
        bad[0][0] = C::new(1.5, 0.0);
        let err = apply_local_unitaries(&basis(3, 0), &[id, bad, id]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn identity_strategies_return_ground_state() {
        for gamma in [0.0, 0.4, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let out = final_state(&[StrategyParams::identity(); 3], gamma).unwrap();
            assert!(close(out.amplitudes()[0], C::new(1.0, 0.0)));
        }
    }

    #[test]
    fn unentangled_half_rotation() {
        let strategies = [
            StrategyParams::new(FRAC_PI_2, 0.0, 0.0),
            StrategyParams::identity(),
            StrategyParams::identity(),
        ];
        let p = marginals(&final_state(&strategies, 0.0).unwrap());
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert!((p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximal_entanglement_flip_lands_on_100() {
        let strategies = [
            StrategyParams::new(PI, 0.0, 0.0),
            StrategyParams::identity(),
            StrategyParams::identity(),
        ];
        let out = final_state(&strategies, FRAC_PI_2).unwrap();
        assert!((out.probabilities()[0b100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_examples() {
        assert_eq!(marginals(&basis(3, 0)), vec![1.0, 1.0, 1.0]);
        assert_eq!(marginals(&basis(3, 0b100)), vec![0.0, 1.0, 1.0]);
        let mut amps = vec![C::new(0.0, 0.0); 8];
        amps[0] = C::new(FRAC_1_SQRT_2, 0.0);
        amps[7] = C::new(FRAC_1_SQRT_2, 0.0);
        let ghz = QuantumState::from_amplitudes(amps).unwrap();
        for p in marginals(&ghz) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let strategies = [
            StrategyParams::new(1.1f32, 0.3, -0.2),
            StrategyParams::new(0.4f32, 2.0, 1.0),
            StrategyParams::new(-2.5f32, 0.1, 0.9),
        ];
        let out = final_state(&strategies, std::f32::consts::FRAC_PI_4).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn malformed_states_rejected() {
        assert!(QuantumState::<f64>::zero(0).is_err());
        assert!(QuantumState::from_amplitudes(vec![C::new(1.0, 0.0); 3]).is_err());
        assert!(QuantumState::from_amplitudes(vec![C::new(1.0, 0.0); 4]).is_err());
    }
}
