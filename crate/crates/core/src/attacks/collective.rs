//! Collective attacks: construction of the attack unitaries from their
//! defining parameters, exact per-case error rates, and the attacker's
//! information measured as the trace distance between ancilla states
//! conditioned on the key bit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::AttackModel;
use crate::error::{QkdError, Result};
use crate::protocol::{table1_bell, table1_zz, CaseKind, CaseTable};
use crate::qcore::{
    apply_unitary, cluster4, partial_trace, trace_distance, BellOutcome, DensityMatrix,
    StateVector, UnitaryMatrix, C64,
};
use crate::rng;

const UNIT_TOL: f64 = 1e-9;
/// Conditional-state weights below this mean the key bit is deterministic.
const DEGENERATE_TOL: f64 = 1e-12;

/// Parameters of an internal collective attack on the Charlie-to-Alice
/// channel: the attack unitary maps `|0>|e> -> a|0>|e00> + b|1>|e01>` and
/// `|1>|e> -> c|0>|e10> + d|1>|e11>` over a four-dimensional ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveAttackParams {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub e00: Vec<C64>,
    pub e01: Vec<C64>,
    pub e10: Vec<C64>,
    pub e11: Vec<C64>,
}

impl CollectiveAttackParams {
    pub fn validate(&self) -> Result<()> {
        let ab = self.a.norm_sqr() + self.b.norm_sqr();
        let cd = self.c.norm_sqr() + self.d.norm_sqr();
        if (ab - 1.0).abs() > UNIT_TOL || (cd - 1.0).abs() > UNIT_TOL {
            return Err(QkdError::InvalidArgument(format!(
                "|a|^2+|b|^2 = {ab}, |c|^2+|d|^2 = {cd}; both must equal 1"
            )));
        }
        for (name, v) in [
            ("e00", &self.e00),
            ("e01", &self.e01),
            ("e10", &self.e10),
            ("e11", &self.e11),
        ] {
            check_unit_vector(name, v, 4)?;
        }
        Ok(())
    }
}

/// Parameters of an external collective attack on both channels: input
/// two-qubit pattern `r` maps to `sum_k coeffs[r][k] |k> |states[r][k]>`
/// over a sixteen-dimensional ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalAttackParams {
    pub coeffs: [[C64; 4]; 4],
    pub states: [[Vec<C64>; 4]; 4],
}

impl ExternalAttackParams {
    pub fn validate(&self) -> Result<()> {
        for (r, row) in self.coeffs.iter().enumerate() {
            let norm: f64 = row.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(QkdError::InvalidArgument(format!(
                    "coefficient row {r} has squared norm {norm}, expected 1"
                )));
            }
        }
        for (r, row) in self.states.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                check_unit_vector(&format!("state[{r}][{k}]"), v, 16)?;
            }
        }
        Ok(())
    }
}

fn check_unit_vector(name: &str, v: &[C64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(QkdError::DimensionMismatch(format!(
            "{name} has dimension {}, expected {dim}",
            v.len()
        )));
    }
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(QkdError::InvalidArgument(format!(
            "{name} has squared norm {norm}, expected 1"
        )));
    }
    Ok(())
}

/// Build the internal attack unitary from its parameters. The reachable
/// columns (inputs `|x>|e>` with the ancilla in its reference state) are
/// fixed by the parameters; the rest of the matrix is completed by
/// Gram-Schmidt over the canonical basis, which the protocol never reaches.
pub fn constrained_attack(params: &CollectiveAttackParams) -> Result<AttackModel> {
    params.validate()?;
    let dim = 8;
    let anc = 4;
    let mut col0 = DVector::from_element(dim, C64::new(0.0, 0.0));
    let mut col1 = DVector::from_element(dim, C64::new(0.0, 0.0));
    for i in 0..anc {
        col0[i] = params.a * params.e00[i];
        col0[anc + i] = params.b * params.e01[i];
        col1[i] = params.c * params.e10[i];
        col1[anc + i] = params.d * params.e11[i];
    }
    let u = complete_isometry(dim, &[(0, col0), (anc, col1)])?;
    Ok(AttackModel::CollectiveInternal(u))
}

/// Build the external attack unitary from its parameters; same completion
/// scheme as [`constrained_attack`].
pub fn external_attack(params: &ExternalAttackParams) -> Result<AttackModel> {
    params.validate()?;
    let dim = 64;
    let anc = 16;
    let mut assigned = Vec::with_capacity(4);
    for r in 0..4 {
        let mut col = DVector::from_element(dim, C64::new(0.0, 0.0));
        for k in 0..4 {
            for i in 0..anc {
                col[k * anc + i] = params.coeffs[r][k] * params.states[r][k][i];
            }
        }
        assigned.push((r * anc, col));
    }
    let u = complete_isometry(dim, &assigned)?;
    Ok(AttackModel::CollectiveExternal(u))
}

/// Complete assigned orthonormal columns to a full unitary, deterministically:
/// canonical basis vectors are orthogonalized in order against everything
/// accepted so far and fill the free columns ascending.
fn complete_isometry(dim: usize, assigned: &[(usize, DVector<C64>)]) -> Result<UnitaryMatrix> {
    for (i, (_, u)) in assigned.iter().enumerate() {
        for (j, (_, v)) in assigned.iter().enumerate() {
            let ip: C64 = u.dotc(v);
            let expect = if i == j { 1.0 } else { 0.0 };
            if (ip - C64::new(expect, 0.0)).norm() > UNIT_TOL {
                return Err(QkdError::NotUnitary(format!(
                    "assigned columns {i} and {j} have inner product {ip}"
                )));
            }
        }
    }
    let basis: Vec<DVector<C64>> = assigned.iter().map(|(_, v)| v.clone()).collect();
    let mut fills: Vec<DVector<C64>> = Vec::new();
    for i in 0..dim {
        if basis.len() + fills.len() == dim {
            break;
        }
        let mut v = DVector::from_element(dim, C64::new(0.0, 0.0));
        v[i] = C64::new(1.0, 0.0);
        // two projection passes keep the completion orthonormal to well
        // below the unitarity tolerance
        for _ in 0..2 {
            for u in basis.iter().chain(fills.iter()) {
                let coeff: C64 = u.dotc(&v);
                v -= u * coeff;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            fills.push(v / C64::new(norm, 0.0));
        }
    }
    if basis.len() + fills.len() != dim {
        return Err(QkdError::NotUnitary(
            "could not complete the isometry to a unitary".into(),
        ));
    }
    let taken: Vec<usize> = assigned.iter().map(|(i, _)| *i).collect();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for (ci, col) in assigned {
        m.set_column(*ci, col);
    }
    let mut fill_iter = fills.into_iter();
    for ci in 0..dim {
        if !taken.contains(&ci) {
            m.set_column(ci, &fill_iter.next().expect("fill count checked"));
        }
    }
    UnitaryMatrix::new(m)
}

fn attacked_state(model: &AttackModel) -> Result<(StateVector, Vec<usize>)> {
    let (u, targets): (&UnitaryMatrix, Vec<usize>) = match model {
        AttackModel::CollectiveInternal(u) => (u, vec![0, 4, 5]),
        AttackModel::CollectiveExternal(u) => (u, vec![0, 1, 4, 5, 6, 7]),
        other => {
            return Err(QkdError::InvalidArgument(format!(
                "exact analysis applies to collective attacks, not {}",
                other.label()
            )))
        }
    };
    model.validate()?;
    let anc = model.ancilla_qubits();
    let joint = cluster4().tensor(&StateVector::basis_state(anc, 0));
    let state = apply_unitary(&joint, u, &targets)?;
    let ancilla_qubits: Vec<usize> = (4..4 + anc).collect();
    Ok((state, ancilla_qubits))
}

/// Exact per-case probability that a checked round violates the expected
/// correlations, computed by evolving the attacked state through each case's
/// operations and summing the Born weights of the violating branches.
pub fn case_error_rates(model: &AttackModel) -> Result<CaseTable<f64>> {
    let (attacked, _) = attacked_state(model)?;
    let h = UnitaryMatrix::hadamard();
    let n = attacked.num_qubits();
    let anc_bits = n - 4;
    let anc_dim = 1usize << anc_bits;

    let mut rates = [0.0f64; 4];
    for case in CaseKind::ALL {
        let mut state = attacked.clone();
        match case {
            CaseKind::Case1 => {}
            CaseKind::Case2 => {
                state = apply_unitary(&state, &h, &[1])?;
                state = apply_unitary(&state, &h, &[2])?;
            }
            CaseKind::Case3 => {
                state = apply_unitary(&state, &h, &[0])?;
                state = apply_unitary(&state, &h, &[3])?;
            }
            CaseKind::Case4 => {
                state = apply_unitary(&state, &h, &[0])?;
                state = apply_unitary(&state, &h, &[1])?;
            }
        }

        let error = match case {
            CaseKind::Case4 => {
                // weight of each (mr_A, mr_B, Bell outcome) branch
                let mut coeff = vec![[C64::new(0.0, 0.0); 4]; 4 * anc_dim];
                for (i, amp) in state.amplitudes().iter().enumerate() {
                    if amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    let b0 = state.bit_of(i, 0);
                    let b1 = state.bit_of(i, 1);
                    let b2 = state.bit_of(i, 2);
                    let b3 = state.bit_of(i, 3);
                    let anc = i & (anc_dim - 1);
                    let slot = ((b0 as usize) << 1 | b1 as usize) * anc_dim + anc;
                    for (k, kind) in BellOutcome::ALL.iter().enumerate() {
                        let w = kind.amplitude(b2, b3);
                        if w != 0.0 {
                            coeff[slot][k] += amp * w;
                        }
                    }
                }
                let mut error = 0.0;
                for (slot, branch) in coeff.iter().enumerate() {
                    let b0 = ((slot / anc_dim) >> 1) as u8;
                    let b1 = ((slot / anc_dim) & 1) as u8;
                    for (k, kind) in BellOutcome::ALL.iter().enumerate() {
                        let w = branch[k].norm_sqr();
                        if w > 0.0 && !table1_bell(b0, b1, *kind) {
                            error += w;
                        }
                    }
                }
                error
            }
            _ => {
                let mut pattern_prob = [0.0f64; 16];
                for (i, amp) in state.amplitudes().iter().enumerate() {
                    let w = amp.norm_sqr();
                    if w == 0.0 {
                        continue;
                    }
                    let pattern = i >> anc_bits;
                    pattern_prob[pattern] += w;
                }
                let mut error = 0.0;
                for (pattern, w) in pattern_prob.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let b0 = ((pattern >> 3) & 1) as u8;
                    let b1 = ((pattern >> 2) & 1) as u8;
                    let b2 = ((pattern >> 1) & 1) as u8;
                    let b3 = (pattern & 1) as u8;
                    if !table1_zz(case, b0, b1, b2, b3) {
                        error += w;
                    }
                }
                error
            }
        };
        rates[case.index()] = error;
    }
    Ok(rates)
}

/// Trace distance between the attacker's ancilla states conditioned on the
/// key bit. For internal attacks the key bit is Alice's Z outcome on her
/// identity rounds; external attacks are scored on both Alice's and Bob's key
/// bits and the larger distance is returned. A deterministic key bit counts
/// as full information.
pub fn eve_information(model: &AttackModel) -> Result<f64> {
    let (attacked, ancilla) = attacked_state(model)?;
    let mut worst = conditional_distance(&attacked, 0, &ancilla)?;
    if matches!(model, AttackModel::CollectiveExternal(_)) {
        worst = worst.max(conditional_distance(&attacked, 1, &ancilla)?);
    }
    Ok(worst)
}

fn conditional_distance(state: &StateVector, key_qubit: usize, ancilla: &[usize]) -> Result<f64> {
    let branches: Vec<Option<DensityMatrix>> = [0u8, 1u8]
        .iter()
        .map(|&bit| conditional_ancilla_state(state, key_qubit, bit, ancilla))
        .collect::<Result<_>>()?;
    match (&branches[0], &branches[1]) {
        (Some(rho0), Some(rho1)) => trace_distance(rho0, rho1),
        // one branch never occurs: the key bit is a constant
        _ => Ok(1.0),
    }
}

fn conditional_ancilla_state(
    state: &StateVector,
    qubit: usize,
    bit: u8,
    ancilla: &[usize],
) -> Result<Option<DensityMatrix>> {
    let n = state.num_qubits();
    let mask = 1usize << (n - 1 - qubit);
    let mut amps: Vec<C64> = state.amplitudes().to_vec();
    let mut weight = 0.0;
    for (i, amp) in amps.iter_mut().enumerate() {
        if ((i & mask != 0) as u8) == bit {
            weight += amp.norm_sqr();
        } else {
            *amp = C64::new(0.0, 0.0);
        }
    }
    if weight < DEGENERATE_TOL {
        return Ok(None);
    }
    let scale = 1.0 / weight.sqrt();
    for amp in amps.iter_mut() {
        *amp *= scale;
    }
    let collapsed = StateVector::unchecked(n, amps);
    Ok(Some(partial_trace(&collapsed, ancilla)?))
}

// ---------------------------------------------------------------------------
// Seeded samplers over the attack families
// ---------------------------------------------------------------------------

const TAG_ZERO_INTERNAL: u64 = 1 << 32;
const TAG_RANDOM_INTERNAL: u64 = 2 << 32;
const TAG_ZERO_EXTERNAL: u64 = 3 << 32;
const TAG_RANDOM_EXTERNAL: u64 = 4 << 32;

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    // Box-Muller pair; isotropic complex Gaussian
    let u1: f64 = rng.random::<f64>().max(1e-15);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    C64::new(
        r * (2.0 * std::f64::consts::PI * u2).cos(),
        r * (2.0 * std::f64::consts::PI * u2).sin(),
    )
}

fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| random_complex(rng)).collect();
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    C64::new(theta.cos(), theta.sin())
}

/// `|a|^2 + |b|^2 = 1` pair with Haar-like distribution.
fn random_unit_pair(rng: &mut ChaCha8Rng) -> (C64, C64) {
    loop {
        let a = random_complex(rng);
        let b = random_complex(rng);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm > 1e-6 {
            return (a / norm, b / norm);
        }
    }
}

/// Mutually orthonormal random vectors (Gram-Schmidt on Gaussian samples).
fn random_orthonormal_frame(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Vec<C64>> {
    assert!(count <= dim);
    let mut frame: Vec<Vec<C64>> = Vec::with_capacity(count);
    while frame.len() < count {
        let mut v = random_unit_vector(rng, dim);
        for u in &frame {
            let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= ip * ui;
            }
        }
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            frame.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    frame
}

fn add_scaled(base: &[C64], dir: &[C64], scale: f64) -> Vec<C64> {
    let v: Vec<C64> = base
        .iter()
        .zip(dir)
        .map(|(b, d)| b + d * C64::new(scale, 0.0))
        .collect();
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

/// A member of the undetectable internal family: `b = c = 0`, unit-modulus
/// `a` and `d`, and `e11 = (a/d) e00`. The base ancilla state is perturbed
/// and the constraint re-imposed, so the sample stays exactly on the
/// zero-error set.
pub fn sample_zero_error_internal(seed: u64) -> Result<AttackModel> {
    let mut rng = rng::tagged_stream(seed, TAG_ZERO_INTERNAL);
    let a = random_phase(&mut rng);
    let d = random_phase(&mut rng);
    let base = random_unit_vector(&mut rng, 4);
    let noise = random_unit_vector(&mut rng, 4);
    let delta = 0.3 * rng.random::<f64>();
    let e00 = add_scaled(&base, &noise, delta);
    let ratio = a / d;
    let e11: Vec<C64> = e00.iter().map(|c| c * ratio).collect();
    let params = CollectiveAttackParams {
        a,
        b: C64::new(0.0, 0.0),
        c: C64::new(0.0, 0.0),
        d,
        e00,
        e01: random_unit_vector(&mut rng, 4),
        e10: random_unit_vector(&mut rng, 4),
        e11,
    };
    constrained_attack(&params)
}

/// A generic internal attack: either fully random parameters over a random
/// orthonormal ancilla frame, or a zero-error member perturbed off the
/// constraint set (the regime where leakage and detectability are both
/// small).
pub fn sample_random_internal(seed: u64) -> Result<AttackModel> {
    let mut rng = rng::tagged_stream(seed, TAG_RANDOM_INTERNAL);
    if seed % 3 == 2 {
        let a = random_phase(&mut rng);
        let d = random_phase(&mut rng);
        let e00 = random_unit_vector(&mut rng, 4);
        let noise = random_unit_vector(&mut rng, 4);
        let eps = 0.05 + 0.75 * rng.random::<f64>();
        let ratio = a / d;
        let e11: Vec<C64> = add_scaled(&e00, &noise, eps)
            .into_iter()
            .map(|c| c * ratio)
            .collect();
        let params = CollectiveAttackParams {
            a,
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
            d,
            e00,
            e01: random_unit_vector(&mut rng, 4),
            e10: random_unit_vector(&mut rng, 4),
            e11,
        };
        constrained_attack(&params)
    } else {
        let (a, b) = random_unit_pair(&mut rng);
        let (c, d) = random_unit_pair(&mut rng);
        let mut frame = random_orthonormal_frame(&mut rng, 4, 4);
        let e11 = frame.pop().unwrap();
        let e10 = frame.pop().unwrap();
        let e01 = frame.pop().unwrap();
        let e00 = frame.pop().unwrap();
        let params = CollectiveAttackParams {
            a,
            b,
            c,
            d,
            e00,
            e01,
            e10,
            e11,
        };
        constrained_attack(&params)
    }
}

/// A member of the undetectable external family: every input pattern is left
/// untouched and the ancilla is steered to one common state.
pub fn sample_zero_error_external(seed: u64) -> Result<AttackModel> {
    let mut rng = rng::tagged_stream(seed, TAG_ZERO_EXTERNAL);
    let phase = random_phase(&mut rng);
    let base = random_unit_vector(&mut rng, 16);
    let noise = random_unit_vector(&mut rng, 16);
    let delta = 0.3 * rng.random::<f64>();
    let w = add_scaled(&base, &noise, delta);
    let mut coeffs = [[C64::new(0.0, 0.0); 4]; 4];
    let mut states: [[Vec<C64>; 4]; 4] =
        std::array::from_fn(|_| std::array::from_fn(|_| vec![C64::new(0.0, 0.0); 16]));
    for (r, row) in states.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = if k == r {
                w.clone()
            } else {
                random_unit_vector(&mut rng, 16)
            };
        }
        coeffs[r][r] = phase;
    }
    external_attack(&ExternalAttackParams { coeffs, states })
}

/// A generic external attack, mixing fully random models over an orthonormal
/// sixteen-state frame with members perturbed off the zero-error family.
pub fn sample_random_external(seed: u64) -> Result<AttackModel> {
    let mut rng = rng::tagged_stream(seed, TAG_RANDOM_EXTERNAL);
    if seed % 3 == 2 {
        let phase = random_phase(&mut rng);
        let w = random_unit_vector(&mut rng, 16);
        let eps = 0.05 + 0.75 * rng.random::<f64>();
        let mut coeffs = [[C64::new(0.0, 0.0); 4]; 4];
        let mut states: [[Vec<C64>; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| vec![C64::new(0.0, 0.0); 16]));
        for (r, row) in states.iter_mut().enumerate() {
            let noise = random_unit_vector(&mut rng, 16);
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = if k == r {
                    if r == 0 {
                        w.clone()
                    } else {
                        add_scaled(&w, &noise, eps)
                    }
                } else {
                    random_unit_vector(&mut rng, 16)
                };
            }
            coeffs[r][r] = phase;
        }
        external_attack(&ExternalAttackParams { coeffs, states })
    } else {
        let frame = random_orthonormal_frame(&mut rng, 16, 16);
        let mut coeffs = [[C64::new(0.0, 0.0); 4]; 4];
        let mut states: [[Vec<C64>; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| vec![C64::new(0.0, 0.0); 16]));
        for r in 0..4 {
            let (x, y) = random_unit_pair(&mut rng);
            let (z, t) = random_unit_pair(&mut rng);
            // random unit 4-vector from two unit pairs and a mixing angle
            let theta = std::f64::consts::FRAC_PI_2 * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            coeffs[r] = [
                x * C64::new(c, 0.0),
                y * C64::new(c, 0.0),
                z * C64::new(s, 0.0),
                t * C64::new(s, 0.0),
            ];
            for k in 0..4 {
                states[r][k] = frame[r * 4 + k].clone();
            }
        }
        external_attack(&ExternalAttackParams { coeffs, states })
    }
}

/// Basis vector of an ancilla space, handy for constructing explicit params.
pub fn basis_vec(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}
