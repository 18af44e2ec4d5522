//! Three-party protocol state machine.
//!
//! Charlie prepares four-particle cluster states and sends qubit 1 of each to
//! Alice and qubit 2 to Bob, keeping 3 and 4. Alice and Bob independently
//! apply identity or Hadamard and measure in Z; Charlie then acts on her pair
//! according to the announced operations (the four cases below), checks a
//! random subset of positions against the expected correlations, and sifts
//! the rest into two raw keys (Charlie-Alice and Charlie-Bob).

mod transcript;

pub use transcript::{parse_transcript, transcript_to_string, RunSummary};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::attacks::{apply_attack, AttackModel};
use crate::error::{QkdError, Result};
use crate::qcore::{
    apply_unitary, cluster4, measure_bell, measure_z, BellOutcome, StateVector, UnitaryMatrix,
};
use crate::rng;

/// Operation available to the classical parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalOp {
    Identity,
    Hadamard,
}

impl LocalOp {
    pub fn label(self) -> &'static str {
        match self {
            LocalOp::Identity => "I",
            LocalOp::Hadamard => "H",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "I" => Some(LocalOp::Identity),
            "H" => Some(LocalOp::Hadamard),
            _ => None,
        }
    }

    fn draw(rng: &mut ChaCha8Rng) -> Self {
        if rng.random::<bool>() {
            LocalOp::Hadamard
        } else {
            LocalOp::Identity
        }
    }
}

/// The four operation cases: (Alice, Bob) = (I,I), (I,H), (H,I), (H,H).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    Case1,
    Case2,
    Case3,
    Case4,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [
        CaseKind::Case1,
        CaseKind::Case2,
        CaseKind::Case3,
        CaseKind::Case4,
    ];

    pub fn from_ops(alice: LocalOp, bob: LocalOp) -> Self {
        match (alice, bob) {
            (LocalOp::Identity, LocalOp::Identity) => CaseKind::Case1,
            (LocalOp::Identity, LocalOp::Hadamard) => CaseKind::Case2,
            (LocalOp::Hadamard, LocalOp::Identity) => CaseKind::Case3,
            (LocalOp::Hadamard, LocalOp::Hadamard) => CaseKind::Case4,
        }
    }

    pub fn index(self) -> usize {
        match self {
            CaseKind::Case1 => 0,
            CaseKind::Case2 => 1,
            CaseKind::Case3 => 2,
            CaseKind::Case4 => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CaseKind::Case1 => "Case1",
            CaseKind::Case2 => "Case2",
            CaseKind::Case3 => "Case3",
            CaseKind::Case4 => "Case4",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }
}

/// Per-case table of values, indexed by [`CaseKind`].
pub type CaseTable<T> = [T; 4];

/// Whether a round is disclosed for the eavesdropping check, kept for key
/// material, or discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Designation {
    Check,
    Key,
    Discard,
}

impl Designation {
    pub fn label(self) -> &'static str {
        match self {
            Designation::Check => "Check",
            Designation::Key => "Key",
            Designation::Discard => "Discard",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        ["Check", "Key", "Discard"]
            .iter()
            .position(|l| *l == s)
            .map(|i| [Designation::Check, Designation::Key, Designation::Discard][i])
    }
}

/// Batch parameters. `N = round(4 n (1 + epsilon))` cluster states are
/// prepared per run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub n: u64,
    pub epsilon: f64,
    pub check_fraction: f64,
    pub error_threshold: f64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(
        n: u64,
        epsilon: f64,
        check_fraction: f64,
        error_threshold: f64,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            n,
            epsilon,
            check_fraction,
            error_threshold,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Defaults: check half of the positions, abort above 5% error.
    pub fn with_defaults(n: u64, seed: u64) -> Result<Self> {
        Self::new(n, 0.0, 0.5, 0.05, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QkdError::InvalidArgument("n must be positive".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(QkdError::InvalidArgument(format!(
                "epsilon {} must be a non-negative real",
                self.epsilon
            )));
        }
        if !self.check_fraction.is_finite()
            || self.check_fraction <= 0.0
            || self.check_fraction > 1.0
        {
            return Err(QkdError::InvalidArgument(format!(
                "check_fraction {} must lie in (0, 1]",
                self.check_fraction
            )));
        }
        if !self.error_threshold.is_finite() || !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(QkdError::InvalidArgument(format!(
                "error_threshold {} must lie in [0, 1]",
                self.error_threshold
            )));
        }
        if self.num_rounds() < 4 {
            return Err(QkdError::InvalidArgument(
                "batch must cover at least 4 rounds".into(),
            ));
        }
        Ok(())
    }

    /// Number of cluster states prepared: `round(4 n (1 + epsilon))`.
    pub fn num_rounds(&self) -> u64 {
        (4.0 * self.n as f64 * (1.0 + self.epsilon)).round() as u64
    }
}

/// Everything that happened in one protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub index: u64,
    pub alice_op: LocalOp,
    pub bob_op: LocalOp,
    pub case: CaseKind,
    pub mr_a: u8,
    pub mr_b: u8,
    pub mr_c3: Option<u8>,
    pub mr_c4: Option<u8>,
    pub mr_c34: Option<BellOutcome>,
    pub designation: Designation,
    /// Bit inferred by an intercepting or measuring attacker for this round,
    /// if the attack model produces one. Not part of the wire transcript.
    pub attacker_bit: Option<u8>,
}

impl RoundRecord {
    fn require_zz(&self) -> Result<(u8, u8)> {
        match (self.mr_c3, self.mr_c4) {
            (Some(c3), Some(c4)) => Ok((c3, c4)),
            _ => Err(QkdError::IncompleteRecord(format!(
                "round {} ({}) lacks Charlie's Z outcomes",
                self.index,
                self.case.label()
            ))),
        }
    }

    fn require_bell(&self) -> Result<BellOutcome> {
        self.mr_c34.ok_or_else(|| {
            QkdError::IncompleteRecord(format!(
                "round {} (Case4) lacks the Bell outcome",
                self.index
            ))
        })
    }
}

/// Result of sifting a completed batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftOutcome {
    pub raw_key_ca: Vec<u8>,
    pub raw_key_cb: Vec<u8>,
    pub case_error_rates: CaseTable<f64>,
    pub aborted: bool,
    pub counts: CaseTable<u64>,
    pub checked: CaseTable<u64>,
}

/// Expected-correlation predicate for the Z-measured cases.
pub(crate) fn table1_zz(case: CaseKind, mr_a: u8, mr_b: u8, mr_c3: u8, mr_c4: u8) -> bool {
    match case {
        CaseKind::Case1 => mr_a == mr_c4 && mr_b == mr_c3,
        CaseKind::Case2 => {
            mr_a == mr_c4
                && if mr_a == 0 {
                    mr_b == mr_c3
                } else {
                    mr_b != mr_c3
                }
        }
        CaseKind::Case3 => {
            mr_b == mr_c3
                && if mr_b == 0 {
                    mr_a == mr_c4
                } else {
                    mr_a != mr_c4
                }
        }
        CaseKind::Case4 => false,
    }
}

/// Expected-correlation predicate for the Bell-measured case.
pub(crate) fn table1_bell(mr_a: u8, mr_b: u8, outcome: BellOutcome) -> bool {
    match outcome {
        BellOutcome::PhiMinus | BellOutcome::PsiPlus => mr_a == mr_b,
        BellOutcome::PhiPlus | BellOutcome::PsiMinus => mr_a != mr_b,
    }
}

/// True iff the record matches the expected results for its case.
pub fn consistency_check(record: &RoundRecord) -> Result<bool> {
    match record.case {
        CaseKind::Case4 => {
            let bell = record.require_bell()?;
            Ok(table1_bell(record.mr_a, record.mr_b, bell))
        }
        case => {
            let (c3, c4) = record.require_zz()?;
            Ok(table1_zz(case, record.mr_a, record.mr_b, c3, c4))
        }
    }
}

/// Execute one round: prepare the cluster state, let the attack act on the
/// traveling qubit(s), then apply the parties' operations and measurements.
///
/// The per-round stream is consumed in a fixed order (attack draws, Alice's
/// measurement, Bob's, Charlie's, then any attacker bookkeeping), so a round
/// is fully determined by `(seed, index, ops, attack)`.
pub fn run_round(
    index: u64,
    alice_op: LocalOp,
    bob_op: LocalOp,
    attack: &AttackModel,
    rng: &mut ChaCha8Rng,
) -> Result<RoundRecord> {
    let case = CaseKind::from_ops(alice_op, bob_op);
    let h = UnitaryMatrix::hadamard();

    let mut state = cluster4();
    let anc = attack.ancilla_qubits();
    if anc > 0 {
        state = state.tensor(&StateVector::basis_state(anc, 0));
    }
    let effect = apply_attack(attack, state, rng)?;
    let mut state = effect.state;
    let mut attacker_bit = effect.learned_bit;

    if alice_op == LocalOp::Hadamard {
        state = apply_unitary(&state, &h, &[0])?;
    }
    let (mr_a, next) = measure_z(&state, 0, rng.random())?;
    state = next;

    if bob_op == LocalOp::Hadamard {
        state = apply_unitary(&state, &h, &[1])?;
    }
    let (mr_b, next) = measure_z(&state, 1, rng.random())?;
    state = next;

    let (mr_c3, mr_c4, mr_c34) = match case {
        CaseKind::Case1 | CaseKind::Case2 | CaseKind::Case3 => {
            if case == CaseKind::Case2 {
                state = apply_unitary(&state, &h, &[2])?;
            }
            if case == CaseKind::Case3 {
                state = apply_unitary(&state, &h, &[3])?;
            }
            let (c3, next) = measure_z(&state, 2, rng.random())?;
            let (c4, next) = measure_z(&next, 3, rng.random())?;
            state = next;
            (Some(c3), Some(c4), None)
        }
        CaseKind::Case4 => {
            let (outcome, next) = measure_bell(&state, 2, 3, rng.random())?;
            state = next;
            (None, None, Some(outcome))
        }
    };

    // An intercepting attacker holds the original qubit in memory, waits for
    // the operation announcement, mirrors it and measures.
    if let Some(memory) = effect.memory_qubit {
        let mut held = state;
        if alice_op == LocalOp::Hadamard {
            held = apply_unitary(&held, &h, &[memory])?;
        }
        let (bit, _) = measure_z(&held, memory, rng.random())?;
        attacker_bit = Some(bit);
    }

    let designation = if case == CaseKind::Case4 {
        Designation::Check
    } else {
        Designation::Key
    };

    Ok(RoundRecord {
        index,
        alice_op,
        bob_op,
        case,
        mr_a,
        mr_b,
        mr_c3,
        mr_c4,
        mr_c34,
        designation,
        attacker_bit,
    })
}

/// Select check positions, evaluate per-case error rates and extract the two
/// raw keys. For cases 1-3, `floor(check_fraction * count)` positions are
/// drawn uniformly without replacement; every Case-4 position is disclosed.
/// Designations are written back into `records`.
pub fn sift(
    records: &mut [RoundRecord],
    config: &ProtocolConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SiftOutcome> {
    for record in records.iter_mut() {
        record.designation = if record.case == CaseKind::Case4 {
            Designation::Check
        } else {
            Designation::Key
        };
    }

    for case in [CaseKind::Case1, CaseKind::Case2, CaseKind::Case3] {
        let positions: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.case == case)
            .map(|(i, _)| i)
            .collect();
        let amount = (config.check_fraction * positions.len() as f64).floor() as usize;
        let chosen = rand::seq::index::sample(rng, positions.len(), amount);
        for ci in chosen.iter() {
            records[positions[ci]].designation = Designation::Check;
        }
    }

    let mut counts = [0u64; 4];
    let mut checked = [0u64; 4];
    let mut failures = [0u64; 4];
    for record in records.iter() {
        let i = record.case.index();
        counts[i] += 1;
        if record.designation == Designation::Check {
            checked[i] += 1;
            if !consistency_check(record)? {
                failures[i] += 1;
            }
        }
    }
    let mut case_error_rates = [0.0f64; 4];
    for i in 0..4 {
        if checked[i] > 0 {
            case_error_rates[i] = failures[i] as f64 / checked[i] as f64;
        }
    }
    let aborted = case_error_rates
        .iter()
        .any(|&rate| rate > config.error_threshold);

    let mut raw_key_ca = Vec::new();
    let mut raw_key_cb = Vec::new();
    for record in records.iter() {
        if record.designation != Designation::Key {
            continue;
        }
        match record.case {
            CaseKind::Case1 => {
                raw_key_ca.push(record.mr_a);
                raw_key_cb.push(record.mr_b);
            }
            CaseKind::Case2 => raw_key_ca.push(record.mr_a),
            CaseKind::Case3 => raw_key_cb.push(record.mr_b),
            CaseKind::Case4 => {}
        }
    }

    Ok(SiftOutcome {
        raw_key_ca,
        raw_key_cb,
        case_error_rates,
        aborted,
        counts,
        checked,
    })
}

/// Evaluate one round of a configured run in isolation: the operation draws
/// and all measurement draws come from the round's own stream, so rounds can
/// be computed in any order (or in parallel) and still reproduce the serial
/// transcript.
pub fn run_round_at(
    config: &ProtocolConfig,
    attack: &AttackModel,
    index: u64,
) -> Result<RoundRecord> {
    let mut stream = rng::round_stream(config.seed, index);
    let alice_op = LocalOp::draw(&mut stream);
    let bob_op = LocalOp::draw(&mut stream);
    run_round(index, alice_op, bob_op, attack, &mut stream)
}

/// Run a full batch: `N` rounds with operations drawn uniformly at random,
/// then sifting. Deterministic given the config seed.
pub fn run_protocol(
    config: &ProtocolConfig,
    attack: &AttackModel,
) -> Result<(Vec<RoundRecord>, SiftOutcome)> {
    config.validate()?;
    attack.validate()?;
    let rounds = config.num_rounds();
    let mut records = Vec::with_capacity(rounds as usize);
    for index in 0..rounds {
        records.push(run_round_at(config, attack, index)?);
    }
    let mut sift_rng = rng::sift_stream(config.seed);
    let outcome = sift(&mut records, config, &mut sift_rng)?;
    Ok((records, outcome))
}

/// Reduced ratio of unsigned integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.max(1), den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Analytic qubit efficiency `c / (q + b)`: the two raw keys carry `2n` bits,
/// Charlie generates `16n` qubits and the classical parties none, giving 1/8.
/// Requires `epsilon = 0`.
pub fn qubit_efficiency(config: &ProtocolConfig) -> Result<Ratio> {
    config.validate()?;
    if config.epsilon != 0.0 {
        return Err(QkdError::InvalidArgument(
            "analytic efficiency is defined for epsilon = 0".into(),
        ));
    }
    let key_bits = 2 * config.n;
    let qubits_generated = 4 * config.num_rounds(); // 16n, all from Charlie
    Ok(Ratio::new(key_bits, qubits_generated))
}

/// Measured efficiency `(|R_CA| + |R_CB|) / 16n` of a seeded noiseless run.
pub fn empirical_efficiency(n: u64, seed: u64) -> Result<f64> {
    let config = ProtocolConfig::with_defaults(n, seed)?;
    let (_, outcome) = run_protocol(&config, &AttackModel::None)?;
    let key_bits = (outcome.raw_key_ca.len() + outcome.raw_key_cb.len()) as f64;
    Ok(key_bits / (16.0 * n as f64))
}

/// One disclosed position in the eavesdropping-check report: the classical
/// parties' announced data plus the verdict. Charlie's own outcomes never
/// appear here.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub index: u64,
    pub case: CaseKind,
    pub alice_op: LocalOp,
    pub bob_op: LocalOp,
    pub mr_a: u8,
    pub mr_b: u8,
    pub consistent: bool,
}

/// The externally emitted check report: one entry per Check-designated round.
pub fn check_report(records: &[RoundRecord]) -> Result<Vec<CheckEntry>> {
    records
        .iter()
        .filter(|r| r.designation == Designation::Check)
        .map(|r| {
            Ok(CheckEntry {
                index: r.index,
                case: r.case,
                alice_op: r.alice_op,
                bob_op: r.bob_op,
                mr_a: r.mr_a,
                mr_b: r.mr_b,
                consistent: consistency_check(r)?,
            })
        })
        .collect()
}
