//! Density matrices, partial trace and trace distance.

use nalgebra::DMatrix;

use super::state::{StateVector, ALGEBRA_TOL, C64};
use crate::error::{QkdError, Result};

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wrap a matrix, verifying Hermiticity, unit trace and eigenvalues
    /// bounded below by `-1e-9`.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(QkdError::InvalidDensityMatrix(format!(
                "shape {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dim = m.nrows();
        for i in 0..dim {
            for j in 0..dim {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > ALGEBRA_TOL {
                    return Err(QkdError::InvalidDensityMatrix(format!(
                        "not Hermitian: deviation {dev:.3e} at ({i},{j})"
                    )));
                }
            }
        }
        let trace: C64 = (0..dim).map(|i| m[(i, i)]).sum();
        if (trace - C64::new(1.0, 0.0)).norm() > ALGEBRA_TOL {
            return Err(QkdError::InvalidDensityMatrix(format!(
                "trace {trace} != 1"
            )));
        }
        let rho = Self { m };
        if let Some(min) = rho
            .eigenvalues()
            .iter()
            .cloned()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if min < -ALGEBRA_TOL {
                return Err(QkdError::InvalidDensityMatrix(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(rho)
    }

    /// `|psi><psi|` of a pure state.
    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let amps = state.amplitudes();
        for (i, a) in amps.iter().enumerate() {
            for (j, b) in amps.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        Self { m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = C64::new(1.0 / dim as f64, 0.0);
        Self {
            m: DMatrix::from_diagonal(&nalgebra::DVector::from_element(dim, p)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Real eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }
}

/// Eigenvalues of a Hermitian matrix, descending. The matrix is symmetrized
/// first so tolerance-level Hermiticity errors do not leak into the solver.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Reduced density matrix of `state` on the `keep` qubits (in the listed
/// order; the first kept qubit is the most significant row/column bit).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.num_qubits();
    if keep.is_empty() {
        return Err(QkdError::InvalidIndex("empty keep list".into()));
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n {
            return Err(QkdError::InvalidIndex(format!("qubit {q} of {n}")));
        }
        if seen[q] {
            return Err(QkdError::InvalidIndex(format!("duplicate keep qubit {q}")));
        }
        seen[q] = true;
    }
    let env: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();

    let keep_masks: Vec<usize> = keep.iter().map(|&q| state.qubit_mask(q)).collect();
    let env_masks: Vec<usize> = env.iter().map(|&q| state.qubit_mask(q)).collect();
    let kd = 1usize << keep.len();
    let ed = 1usize << env.len();

    let place = |bits: usize, masks: &[usize]| -> usize {
        let mut i = 0;
        for (j, mask) in masks.iter().enumerate() {
            if (bits >> (masks.len() - 1 - j)) & 1 == 1 {
                i |= mask;
            }
        }
        i
    };

    let amps = state.amplitudes();
    let mut m = DMatrix::zeros(kd, kd);
    for r in 0..kd {
        let rbase = place(r, &keep_masks);
        for c in 0..kd {
            let cbase = place(c, &keep_masks);
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..ed {
                let ebits = place(e, &env_masks);
                acc += amps[rbase | ebits] * amps[cbase | ebits].conj();
            }
            m[(r, c)] = acc;
        }
    }
    DensityMatrix::new(m)
}

/// Trace distance `1/2 * sum |eig(rho - sigma)|`, in `[0, 1]`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QkdError::DimensionMismatch(format!(
            "{} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    let d = 0.5
        * hermitian_eigenvalues(&diff)
            .iter()
            .map(|l| l.abs())
            .sum::<f64>();
    // round-off can overshoot the mathematical range by an ulp
    Ok(d.clamp(0.0, 1.0))
}
