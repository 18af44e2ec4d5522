//! Adversary models on the quantum channels and their statistics.
//!
//! Sampling attacks (intercept-resend, measure-resend, depolarizing) act on
//! the traveling qubits round by round. Collective attacks entangle an
//! ancilla through a unitary and are analyzed exactly by linear algebra, with
//! no sampling: per-case error rates and the ancilla's distinguishability
//! (the attacker's information about the raw key) are computed from Born
//! weights of the evolved joint state.

mod collective;
mod spec;

pub use collective::{
    basis_vec, case_error_rates, constrained_attack, eve_information, external_attack,
    sample_random_external, sample_random_internal, sample_zero_error_external,
    sample_zero_error_internal, CollectiveAttackParams, ExternalAttackParams,
};
pub use spec::parse_attack_spec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QkdError, Result};
use crate::protocol::{consistency_check, run_round, CaseTable, LocalOp};
use crate::qcore::{
    apply_unitary, measure_bell, measure_z, swap_qubits, BellOutcome, StateVector, UnitaryMatrix,
};
use crate::rng;
use crate::stats::proportion_ci;

/// Adversary strategy inserted on the Charlie-to-Alice channel (and, for the
/// external variants, the Charlie-to-Bob channel as well).
#[derive(Debug, Clone, PartialEq)]
pub enum AttackModel {
    /// Ideal channel.
    None,
    /// Qubit 1 is replaced by a fresh Z-basis qubit; the original is stored
    /// and measured after the operation announcements.
    InterceptResendZ,
    /// Qubit 1 is measured in Z and forwarded.
    MeasureResendZ,
    /// The (1,2) pair is measured in the Bell basis and forwarded.
    MeasureResendBell,
    /// Pauli X and, independently, Pauli Z each hit qubit 1 with the given
    /// probability.
    Depolarizing(f64),
    /// Unitary on (qubit 1 x 4-dimensional ancilla); 8x8.
    CollectiveInternal(UnitaryMatrix),
    /// Unitary on (qubits 1,2 x 16-dimensional ancilla); 64x64.
    CollectiveExternal(UnitaryMatrix),
}

impl AttackModel {
    /// Ancilla qubits the model needs appended after the four protocol qubits.
    pub fn ancilla_qubits(&self) -> usize {
        match self {
            AttackModel::InterceptResendZ => 1,
            AttackModel::CollectiveInternal(_) => 2,
            AttackModel::CollectiveExternal(_) => 4,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AttackModel::Depolarizing(q) if !q.is_finite() || !(0.0..=0.5).contains(q) => {
                Err(QkdError::InvalidArgument(format!(
                    "depolarizing parameter {q} must lie in [0, 0.5]"
                )))
            }
            AttackModel::CollectiveInternal(u) if u.dim() != 8 => Err(QkdError::DimensionMismatch(
                format!("internal collective unitary must be 8x8, got {}", u.dim()),
            )),
            AttackModel::CollectiveExternal(u) if u.dim() != 64 => {
                Err(QkdError::DimensionMismatch(format!(
                    "external collective unitary must be 64x64, got {}",
                    u.dim()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Short descriptor for summaries and reports.
    pub fn label(&self) -> String {
        match self {
            AttackModel::None => "none".into(),
            AttackModel::InterceptResendZ => "intercept-resend".into(),
            AttackModel::MeasureResendZ => "measure-resend".into(),
            AttackModel::MeasureResendBell => "measure-resend-bell".into(),
            AttackModel::Depolarizing(q) => format!("depolarizing:{q}"),
            AttackModel::CollectiveInternal(_) => "collective".into(),
            AttackModel::CollectiveExternal(_) => "collective-external".into(),
        }
    }
}

/// Outcome of inserting an attack: the evolved joint state plus whatever the
/// attacker carried away.
#[derive(Debug, Clone)]
pub struct AttackEffect {
    pub state: StateVector,
    /// Register position of a stored original qubit, to be measured after the
    /// announcements.
    pub memory_qubit: Option<usize>,
    /// Bit already learned during the attack (measure-resend).
    pub learned_bit: Option<u8>,
    /// Bell outcome learned during the attack.
    pub learned_bell: Option<BellOutcome>,
}

impl AttackEffect {
    fn plain(state: StateVector) -> Self {
        AttackEffect {
            state,
            memory_qubit: None,
            learned_bit: None,
            learned_bell: None,
        }
    }
}

/// Act on the joint state (4 protocol qubits plus the model's ancilla,
/// appended as the least-significant qubits).
pub fn apply_attack(
    model: &AttackModel,
    joint_state: StateVector,
    rng: &mut ChaCha8Rng,
) -> Result<AttackEffect> {
    let expected = 4 + model.ancilla_qubits();
    if joint_state.num_qubits() != expected {
        return Err(QkdError::DimensionMismatch(format!(
            "attack needs a {expected}-qubit register, got {}",
            joint_state.num_qubits()
        )));
    }
    match model {
        AttackModel::None => Ok(AttackEffect::plain(joint_state)),
        AttackModel::InterceptResendZ => {
            // Fresh random Z-basis qubit goes to Alice; the original rides in
            // the ancilla slot until the announcements.
            let fake_bit = rng.random::<bool>();
            let mut state = joint_state;
            if fake_bit {
                state = apply_unitary(&state, &UnitaryMatrix::pauli_x(), &[4])?;
            }
            state = swap_qubits(&state, 0, 4)?;
            Ok(AttackEffect {
                state,
                memory_qubit: Some(4),
                learned_bit: None,
                learned_bell: None,
            })
        }
        AttackModel::MeasureResendZ => {
            let (bit, state) = measure_z(&joint_state, 0, rng.random())?;
            Ok(AttackEffect {
                state,
                memory_qubit: None,
                learned_bit: Some(bit),
                learned_bell: None,
            })
        }
        AttackModel::MeasureResendBell => {
            let (kind, state) = measure_bell(&joint_state, 0, 1, rng.random())?;
            Ok(AttackEffect {
                state,
                memory_qubit: None,
                learned_bit: None,
                learned_bell: Some(kind),
            })
        }
        AttackModel::Depolarizing(q) => {
            model.validate()?;
            let flip_x = rng.random_bool(*q);
            let flip_z = rng.random_bool(*q);
            let mut state = joint_state;
            if flip_x {
                state = apply_unitary(&state, &UnitaryMatrix::pauli_x(), &[0])?;
            }
            if flip_z {
                state = apply_unitary(&state, &UnitaryMatrix::pauli_z(), &[0])?;
            }
            Ok(AttackEffect::plain(state))
        }
        AttackModel::CollectiveInternal(u) => {
            model.validate()?;
            Ok(AttackEffect::plain(apply_unitary(
                &joint_state,
                u,
                &[0, 4, 5],
            )?))
        }
        AttackModel::CollectiveExternal(u) => {
            model.validate()?;
            Ok(AttackEffect::plain(apply_unitary(
                &joint_state,
                u,
                &[0, 1, 4, 5, 6, 7],
            )?))
        }
    }
}

/// Analytic probability that `positions` checked positions reveal the attack:
/// `1 - (1/2)^M` for intercept-resend, `1 - (3/4)^M` for both measure-resend
/// variants.
pub fn detection_curve(model: &AttackModel, positions: u32) -> Result<f64> {
    let survive_per_position = match model {
        AttackModel::InterceptResendZ => 0.5,
        AttackModel::MeasureResendZ | AttackModel::MeasureResendBell => 0.75,
        other => {
            return Err(QkdError::InvalidArgument(format!(
                "no analytic detection curve for {}",
                other.label()
            )))
        }
    };
    Ok(1.0 - f64::powi(survive_per_position, positions as i32))
}

/// Monte-Carlo detection experiment alongside the analytic curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub attack: String,
    pub positions: u32,
    pub trials: u64,
    pub analytic_detection: f64,
    pub detected_trials: u64,
    pub empirical_detection: f64,
    pub total_positions: u64,
    pub inconsistent_positions: u64,
    pub per_position_rate: f64,
    /// 95% normal-approximation interval for the detection probability.
    pub detection_ci95: (f64, f64),
}

/// Simulate `trials` eavesdropping checks of `positions` positions each. A
/// position is one protocol round with uniformly drawn operations; a trial
/// counts as detected when any of its positions fails the consistency check.
pub fn detection_experiment(
    model: &AttackModel,
    positions: u32,
    trials: u64,
    seed: u64,
) -> Result<DetectionReport> {
    let analytic = detection_curve(model, positions)?;
    let mut detected_trials = 0u64;
    let mut inconsistent_positions = 0u64;
    for trial in 0..trials {
        let mut detected = false;
        for pos in 0..positions as u64 {
            let mut stream = rng::tagged_stream(seed, trial * positions as u64 + pos);
            let alice_op = if stream.random::<bool>() {
                LocalOp::Hadamard
            } else {
                LocalOp::Identity
            };
            let bob_op = if stream.random::<bool>() {
                LocalOp::Hadamard
            } else {
                LocalOp::Identity
            };
            let record = run_round(pos, alice_op, bob_op, model, &mut stream)?;
            if !consistency_check(&record)? {
                detected = true;
                inconsistent_positions += 1;
            }
        }
        if detected {
            detected_trials += 1;
        }
    }
    let total_positions = trials * positions as u64;
    let empirical_detection = if trials > 0 {
        detected_trials as f64 / trials as f64
    } else {
        0.0
    };
    let per_position_rate = if total_positions > 0 {
        inconsistent_positions as f64 / total_positions as f64
    } else {
        0.0
    };
    Ok(DetectionReport {
        attack: model.label(),
        positions,
        trials,
        analytic_detection: analytic,
        detected_trials,
        empirical_detection,
        total_positions,
        inconsistent_positions,
        per_position_rate,
        detection_ci95: proportion_ci(detected_trials, trials, 1.96),
    })
}

/// Exact statistics of a collective attack: per-case error rates, the
/// detection probability of a single checked position (cases weighted by how
/// often they are checked), and the attacker's information.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackStats {
    pub per_case_error: CaseTable<f64>,
    pub detection_prob_per_check: f64,
    pub eve_info: f64,
}

pub fn attack_stats(model: &AttackModel, check_fraction: f64) -> Result<AttackStats> {
    if !(0.0..=1.0).contains(&check_fraction) {
        return Err(QkdError::InvalidArgument(format!(
            "check_fraction {check_fraction} not in [0, 1]"
        )));
    }
    let per_case_error = case_error_rates(model)?;
    // Cases occur with probability 1/4 each; cases 1-3 are checked with
    // probability `check_fraction`, Case 4 always.
    let weights = [check_fraction, check_fraction, check_fraction, 1.0];
    let total: f64 = weights.iter().sum();
    let detection_prob_per_check = per_case_error
        .iter()
        .zip(&weights)
        .map(|(e, w)| e * w)
        .sum::<f64>()
        / total;
    Ok(AttackStats {
        per_case_error,
        detection_prob_per_check,
        eve_info: eve_information(model)?,
    })
}
