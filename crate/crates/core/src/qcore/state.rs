//! Exact state vectors, gates and projective measurements.
//!
//! States live in the tensor-product basis of `num_qubits` qubits. Qubit 0 is
//! the most-significant bit of the basis index, so `|q0 q1 .. q(n-1)>` maps to
//! index `q0*2^(n-1) + .. + q(n-1)`. All operations are pure: measurements take
//! the uniform draw in `[0,1)` explicitly instead of owning an RNG.

use num_complex::Complex64;

use crate::error::{QkdError, Result};

/// Tolerance for exact-algebra assertions (normalization, unitarity, ...).
/// Dimensions stay at or below a few hundred amplitudes, which keeps
/// accumulated round-off orders of magnitude under this.
pub const ALGEBRA_TOL: f64 = 1e-9;

/// Branch probabilities below this are treated as exactly zero when a
/// measurement would otherwise select them.
const ZERO_BRANCH_TOL: f64 = 1e-12;

pub type C64 = Complex64;

/// One of the four Bell-basis outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// Real amplitude of `|b1 b2>` in this Bell state.
    pub fn amplitude(self, b1: u8, b2: u8) -> f64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match (self, b1, b2) {
            (BellOutcome::PhiPlus, 0, 0) | (BellOutcome::PhiPlus, 1, 1) => s,
            (BellOutcome::PhiMinus, 0, 0) => s,
            (BellOutcome::PhiMinus, 1, 1) => -s,
            (BellOutcome::PsiPlus, 0, 1) | (BellOutcome::PsiPlus, 1, 0) => s,
            (BellOutcome::PsiMinus, 0, 1) => s,
            (BellOutcome::PsiMinus, 1, 0) => -s,
            _ => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "PhiPlus",
            BellOutcome::PhiMinus => "PhiMinus",
            BellOutcome::PsiPlus => "PsiPlus",
            BellOutcome::PsiMinus => "PsiMinus",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }
}

/// Normalized complex amplitude vector over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Build a state from raw amplitudes, checking length, finiteness and
    /// normalization.
    pub fn new(num_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(QkdError::InvalidState("zero qubits".into()));
        }
        if amps.len() != 1 << num_qubits {
            return Err(QkdError::InvalidState(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1usize << num_qubits,
                num_qubits,
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QkdError::InvalidState("non-finite amplitude".into()));
        }
        let state = Self { num_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(QkdError::InvalidState(format!("norm {norm} != 1")));
        }
        Ok(state)
    }

    /// Internal constructor for amplitudes produced by norm-preserving
    /// operations on already-valid states.
    pub(crate) fn unchecked(num_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        Self { num_qubits, amps }
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(num_qubits: usize, index: usize) -> Self {
        assert!(index < 1 << num_qubits, "basis index out of range");
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &StateVector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(QkdError::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `self (x) other`; `other`'s qubits are appended as the
    /// least-significant block.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let n = self.num_qubits + other.num_qubits;
        let od = other.dim();
        let mut amps = Vec::with_capacity(self.dim() * od);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector::unchecked(n, amps)
    }

    /// Born probability of each basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Bit of `qubit` inside basis `index` (qubit 0 = most significant).
    pub fn bit_of(&self, index: usize, qubit: usize) -> u8 {
        ((index >> (self.num_qubits - 1 - qubit)) & 1) as u8
    }

    pub(crate) fn qubit_mask(&self, qubit: usize) -> usize {
        1usize << (self.num_qubits - 1 - qubit)
    }

    /// Amplitude-level equality within `tol`.
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.num_qubits == other.num_qubits
            && self
                .amps
                .iter()
                .zip(&other.amps)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Physical equality: amplitude-level equality after normalizing both
    /// global phases by the first amplitude of magnitude above `tol`.
    pub fn approx_eq_physical(&self, other: &StateVector, tol: f64) -> bool {
        if self.num_qubits != other.num_qubits {
            return false;
        }
        let phase = |s: &StateVector| s.amps.iter().find(|a| a.norm() > tol).map(|a| a / a.norm());
        match (phase(self), phase(other)) {
            (Some(pa), Some(pb)) => self
                .amps
                .iter()
                .zip(&other.amps)
                .all(|(a, b)| (a / pa - b / pb).norm() <= tol),
            _ => false,
        }
    }

    fn validate_target(&self, target: usize) -> Result<()> {
        if target >= self.num_qubits {
            return Err(QkdError::InvalidIndex(format!(
                "qubit {} of {}",
                target, self.num_qubits
            )));
        }
        Ok(())
    }
}

/// Unitary operator on a 2^k-dimensional subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: nalgebra::DMatrix<C64>,
}

impl UnitaryMatrix {
    /// Wrap a square matrix, checking `U'U = I` entrywise within [`ALGEBRA_TOL`].
    pub fn new(m: nalgebra::DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(QkdError::NotUnitary(format!(
                "shape {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let gram = m.adjoint() * &m;
        let dim = m.nrows();
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { 1.0 } else { 0.0 };
                let dev = (gram[(i, j)] - C64::new(expect, 0.0)).norm();
                if dev > ALGEBRA_TOL {
                    return Err(QkdError::NotUnitary(format!(
                        "U'U deviates by {dev:.3e} at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &nalgebra::DMatrix<C64> {
        &self.m
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: nalgebra::DMatrix::identity(dim, dim),
        }
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            m: nalgebra::DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(s, 0.0),
                    C64::new(s, 0.0),
                    C64::new(s, 0.0),
                    C64::new(-s, 0.0),
                ],
            ),
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m: nalgebra::DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(0.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                ],
            ),
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            m: nalgebra::DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(-1.0, 0.0),
                ],
            ),
        }
    }
}

/// The four-qubit cluster state used as the protocol's information carrier:
/// amplitude +1/2 on `|0000>`, `|0110>`, `|1001>` and -1/2 on `|1111>`.
pub fn cluster4() -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    amps[0b0000] = C64::new(0.5, 0.0);
    amps[0b0110] = C64::new(0.5, 0.0);
    amps[0b1001] = C64::new(0.5, 0.0);
    amps[0b1111] = C64::new(-0.5, 0.0);
    StateVector::unchecked(4, amps)
}

/// Two-qubit Bell state of the given kind.
pub fn bell_state(kind: BellOutcome) -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    for b1 in 0..2u8 {
        for b2 in 0..2u8 {
            amps[(b1 as usize) << 1 | b2 as usize] = C64::new(kind.amplitude(b1, b2), 0.0);
        }
    }
    StateVector::unchecked(2, amps)
}

/// Apply `u` to the ordered `targets` subsystem (first target is the most
/// significant bit of `u`'s index space), identity elsewhere.
pub fn apply_unitary(
    state: &StateVector,
    u: &UnitaryMatrix,
    targets: &[usize],
) -> Result<StateVector> {
    let n = state.num_qubits();
    let k = targets.len();
    if u.dim() != 1 << k {
        return Err(QkdError::DimensionMismatch(format!(
            "unitary dim {} for {} targets",
            u.dim(),
            k
        )));
    }
    let mut seen = vec![false; n];
    for &t in targets {
        state.validate_target(t)?;
        if seen[t] {
            return Err(QkdError::InvalidIndex(format!("duplicate target {t}")));
        }
        seen[t] = true;
    }

    let masks: Vec<usize> = targets.iter().map(|&t| state.qubit_mask(t)).collect();
    let union: usize = masks.iter().fold(0, |acc, &m| acc | m);
    let sub = 1usize << k;
    let dim = state.dim();
    let amps = state.amplitudes();
    let m = u.matrix();

    // Embed sub-index `a` (target bits, first target most significant) into a
    // full basis index on top of `base`.
    let embed = |base: usize, a: usize| -> usize {
        let mut i = base;
        for (j, mask) in masks.iter().enumerate() {
            if (a >> (k - 1 - j)) & 1 == 1 {
                i |= mask;
            }
        }
        i
    };

    let mut out = vec![C64::new(0.0, 0.0); dim];
    for base in 0..dim {
        if base & union != 0 {
            continue;
        }
        for row in 0..sub {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..sub {
                acc += m[(row, col)] * amps[embed(base, col)];
            }
            out[embed(base, row)] = acc;
        }
    }
    Ok(StateVector::unchecked(n, out))
}

/// Exchange two qubits (a pure basis permutation).
pub fn swap_qubits(state: &StateVector, q1: usize, q2: usize) -> Result<StateVector> {
    state.validate_target(q1)?;
    state.validate_target(q2)?;
    if q1 == q2 {
        return Ok(state.clone());
    }
    let m1 = state.qubit_mask(q1);
    let m2 = state.qubit_mask(q2);
    let mut out = vec![C64::new(0.0, 0.0); state.dim()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let b1 = (i & m1 != 0) as usize;
        let b2 = (i & m2 != 0) as usize;
        let mut j = i & !(m1 | m2);
        if b2 == 1 {
            j |= m1;
        }
        if b1 == 1 {
            j |= m2;
        }
        out[j] = *a;
    }
    Ok(StateVector::unchecked(state.num_qubits(), out))
}

/// Probability that a Z measurement of `target` yields 0.
pub fn z_probability_zero(state: &StateVector, target: usize) -> Result<f64> {
    state.validate_target(target)?;
    let mask = state.qubit_mask(target);
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Z-basis measurement of `target`. Returns the outcome bit (0 for `|0>`)
/// and the renormalized post-measurement state; `draw` selects the branch by
/// its Born probability.
pub fn measure_z(state: &StateVector, target: usize, draw: f64) -> Result<(u8, StateVector)> {
    if !(0.0..1.0).contains(&draw) {
        return Err(QkdError::InvalidArgument(format!(
            "draw {draw} not in [0,1)"
        )));
    }
    let p0 = z_probability_zero(state, target)?;
    let (bit, p) = if draw < p0 {
        (0u8, p0)
    } else {
        (1u8, 1.0 - p0)
    };
    if p < ZERO_BRANCH_TOL {
        return Err(QkdError::ZeroProbabilityBranch);
    }
    let mask = state.qubit_mask(target);
    let scale = 1.0 / p.sqrt();
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if ((i & mask != 0) as u8) == bit {
                a * scale
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok((bit, StateVector::unchecked(state.num_qubits(), amps)))
}

/// Born weights of the four Bell outcomes for the `(t1, t2)` pair.
pub fn bell_probabilities(state: &StateVector, t1: usize, t2: usize) -> Result<[f64; 4]> {
    let proj = bell_projections(state, t1, t2)?;
    Ok([proj[0].1, proj[1].1, proj[2].1, proj[3].1])
}

/// Bell-basis measurement of the `(t1, t2)` pair: projects onto one of the
/// four Bell states with Born probability and renormalizes the full register.
pub fn measure_bell(
    state: &StateVector,
    t1: usize,
    t2: usize,
    draw: f64,
) -> Result<(BellOutcome, StateVector)> {
    if !(0.0..1.0).contains(&draw) {
        return Err(QkdError::InvalidArgument(format!(
            "draw {draw} not in [0,1)"
        )));
    }
    let proj = bell_projections(state, t1, t2)?;
    let mut acc = 0.0;
    let mut chosen = None;
    for (idx, (_, w)) in proj.iter().enumerate() {
        acc += w;
        if draw < acc {
            chosen = Some(idx);
            break;
        }
    }
    // Cumulative round-off can leave acc marginally below 1; the last
    // positive-weight branch takes the remainder.
    let idx = chosen.unwrap_or_else(|| {
        proj.iter()
            .rposition(|(_, w)| *w > ZERO_BRANCH_TOL)
            .unwrap_or(3)
    });
    let (amps, w) = &proj[idx];
    if *w < ZERO_BRANCH_TOL {
        return Err(QkdError::ZeroProbabilityBranch);
    }
    let scale = 1.0 / w.sqrt();
    let amps = amps.iter().map(|a| a * scale).collect();
    Ok((
        BellOutcome::ALL[idx],
        StateVector::unchecked(state.num_qubits(), amps),
    ))
}

/// Unnormalized projections of `state` onto each Bell branch of `(t1, t2)`,
/// paired with their Born weights.
fn bell_projections(state: &StateVector, t1: usize, t2: usize) -> Result<[(Vec<C64>, f64); 4]> {
    state.validate_target(t1)?;
    state.validate_target(t2)?;
    if t1 == t2 {
        return Err(QkdError::InvalidIndex(format!("t1 = t2 = {t1}")));
    }
    let m1 = state.qubit_mask(t1);
    let m2 = state.qubit_mask(t2);
    let dim = state.dim();
    let amps = state.amplitudes();

    let pattern = |b1: u8, b2: u8| -> usize {
        (if b1 == 1 { m1 } else { 0 }) | (if b2 == 1 { m2 } else { 0 })
    };

    Ok(BellOutcome::ALL.map(|kind| {
        // coefficient <bell_kind| psi > per configuration of the other qubits
        let mut coeff = vec![C64::new(0.0, 0.0); dim];
        for (i, a) in amps.iter().enumerate() {
            let rest = i & !(m1 | m2);
            let b1 = (i & m1 != 0) as u8;
            let b2 = (i & m2 != 0) as u8;
            coeff[rest] += kind.amplitude(b1, b2) * a;
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        let mut weight = 0.0;
        for (rest, c) in coeff.iter().enumerate() {
            if rest & (m1 | m2) != 0 || c.norm_sqr() == 0.0 {
                continue;
            }
            weight += c.norm_sqr();
            for b1 in 0..2u8 {
                for b2 in 0..2u8 {
                    let amp = kind.amplitude(b1, b2);
                    if amp != 0.0 {
                        out[rest | pattern(b1, b2)] = c * amp;
                    }
                }
            }
        }
        (out, weight)
    }))
}
