//! Exact small-system quantum state algebra: states, gates, Z- and Bell-basis
//! measurements, density matrices and the entropy toolbox.

mod density;
mod entropy;
mod state;

pub use density::{partial_trace, trace_distance, DensityMatrix};
pub use entropy::{binary_entropy, shannon_entropy, von_neumann_entropy};
pub use state::{
    apply_unitary, bell_probabilities, bell_state, cluster4, measure_bell, measure_z, swap_qubits,
    z_probability_zero, BellOutcome, StateVector, UnitaryMatrix, ALGEBRA_TOL, C64,
};

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64) -> C64 {
        Complex64::new(re, 0.0)
    }

    /// `|q1 q2 q3 q4>` in the left-to-right ket ordering.
    fn ket4(q1: u8, q2: u8, q3: u8, q4: u8) -> usize {
        ((q1 as usize) << 3) | ((q2 as usize) << 2) | ((q3 as usize) << 1) | q4 as usize
    }

    #[test]
    fn cluster4_amplitudes() {
        let s = cluster4();
        assert_eq!(s.num_qubits(), 4);
        for i in 0..16 {
            let expect = match i {
                _ if i == ket4(0, 0, 0, 0) => 0.5,
                _ if i == ket4(0, 1, 1, 0) => 0.5,
                _ if i == ket4(1, 0, 0, 1) => 0.5,
                _ if i == ket4(1, 1, 1, 1) => -0.5,
                _ => 0.0,
            };
            assert!((s.amplitude(i) - c(expect)).norm() < 1e-15, "index {i}");
        }
        assert!((s.norm() - 1.0).abs() < ALGEBRA_TOL);
    }

    #[test]
    fn cluster4_z_measurement_projects_bell_pair() {
        // Measuring qubits 1 and 4 with joint outcome (0,0) leaves qubits 2,3
        // in |phi+>.
        let s = cluster4();
        let (b1, s) = measure_z(&s, 0, 0.0).unwrap();
        assert_eq!(b1, 0);
        let (b4, s) = measure_z(&s, 3, 0.0).unwrap();
        assert_eq!(b4, 0);
        // tensor layout |q1>|q2 q3>|q4> matches the register ordering
        let expect = StateVector::basis_state(1, 0)
            .tensor(&bell_state(BellOutcome::PhiPlus))
            .tensor(&StateVector::basis_state(1, 0));
        assert!(s.approx_eq_physical(&expect, 1e-12));
    }

    #[test]
    fn cluster4_four_patterns_each_quarter() {
        // Independent oracle: enumerate Born weights directly.
        let probs = cluster4().probabilities();
        for (i, p) in probs.iter().enumerate() {
            let expect = match i {
                0b0000 | 0b0110 | 0b1001 | 0b1111 => 0.25,
                _ => 0.0,
            };
            assert!((p - expect).abs() < 1e-12, "index {i}");
        }
        // Sequential Z measurements of all four qubits reach exactly those
        // patterns: walk each branch by steering the draws and multiply the
        // conditional branch probabilities.
        for pattern in [0b0000usize, 0b0110, 0b1001, 0b1111] {
            let mut state = cluster4();
            let mut prob = 1.0;
            for q in 0..4 {
                let want = ((pattern >> (3 - q)) & 1) as u8;
                let p0 = z_probability_zero(&state, q).unwrap();
                prob *= if want == 0 { p0 } else { 1.0 - p0 };
                let draw = if want == 0 {
                    0.0
                } else {
                    p0 + 0.5 * (1.0 - p0)
                };
                let (bit, next) = measure_z(&state, q, draw).unwrap();
                assert_eq!(bit, want);
                state = next;
            }
            assert!((prob - 0.25).abs() < 1e-12, "pattern {pattern:04b}");
        }
    }

    #[test]
    fn bell_states_orthonormal_and_complete() {
        for a in BellOutcome::ALL {
            for b in BellOutcome::ALL {
                let ip = bell_state(a).inner_product(&bell_state(b)).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - c(expect)).norm() < 1e-12, "{a:?} {b:?}");
            }
        }
        // completeness on an arbitrary normalized 2-qubit state
        let raw = [
            c(0.5),
            Complex64::new(0.1, 0.7),
            c(0.3),
            Complex64::new(0.0, 0.4),
        ];
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi = StateVector::new(2, raw.iter().map(|a| a / norm).collect()).unwrap();
        let total: f64 = BellOutcome::ALL
            .iter()
            .map(|&k| bell_state(k).inner_product(&psi).unwrap().norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_on_single_qubit() {
        let zero = StateVector::basis_state(1, 0);
        let plus = apply_unitary(&zero, &UnitaryMatrix::hadamard(), &[0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((plus.amplitude(0) - c(s)).norm() < 1e-12);
        assert!((plus.amplitude(1) - c(s)).norm() < 1e-12);
    }

    #[test]
    fn hadamard_pair_maps_bell_states() {
        // H(x)H: phi+ -> phi+, phi- -> psi+, psi+ -> phi-, psi- -> -psi-.
        let h = UnitaryMatrix::hadamard();
        let hh = |kind| {
            let s = bell_state(kind);
            let s = apply_unitary(&s, &h, &[0]).unwrap();
            apply_unitary(&s, &h, &[1]).unwrap()
        };
        assert!(hh(BellOutcome::PhiPlus).approx_eq(&bell_state(BellOutcome::PhiPlus), 1e-12));
        assert!(hh(BellOutcome::PhiMinus).approx_eq(&bell_state(BellOutcome::PsiPlus), 1e-12));
        assert!(hh(BellOutcome::PsiPlus).approx_eq(&bell_state(BellOutcome::PhiMinus), 1e-12));
        // the psi- image carries an explicit -1 global phase
        let minus_psi_minus = StateVector::new(
            2,
            bell_state(BellOutcome::PsiMinus)
                .amplitudes()
                .iter()
                .map(|a| -a)
                .collect(),
        )
        .unwrap();
        let img = hh(BellOutcome::PsiMinus);
        assert!(img.approx_eq(&minus_psi_minus, 1e-12));
        // physically it is still psi-
        assert!(img.approx_eq_physical(&bell_state(BellOutcome::PsiMinus), 1e-12));
    }

    #[test]
    fn hadamard_involution() {
        let h = UnitaryMatrix::hadamard();
        let s = cluster4();
        for q in 0..4 {
            let once = apply_unitary(&s, &h, &[q]).unwrap();
            let twice = apply_unitary(&once, &h, &[q]).unwrap();
            assert!(twice.approx_eq(&s, 1e-12), "qubit {q}");
            assert!((once.norm() - 1.0).abs() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn cluster_regroupings_match() {
        // Bell-pair grouping on (1,2)x(3,4).
        let half = 0.5;
        let mut grouped = vec![c(0.0); 16];
        let add = |acc: &mut Vec<C64>, a: BellOutcome, b: BellOutcome, sign: f64| {
            let t = bell_state(a).tensor(&bell_state(b));
            for (i, amp) in t.amplitudes().iter().enumerate() {
                acc[i] += amp * c(sign * half);
            }
        };
        add(
            &mut grouped,
            BellOutcome::PhiPlus,
            BellOutcome::PhiMinus,
            1.0,
        );
        add(
            &mut grouped,
            BellOutcome::PhiMinus,
            BellOutcome::PhiPlus,
            1.0,
        );
        add(
            &mut grouped,
            BellOutcome::PsiPlus,
            BellOutcome::PsiPlus,
            1.0,
        );
        add(
            &mut grouped,
            BellOutcome::PsiMinus,
            BellOutcome::PsiMinus,
            -1.0,
        );
        let grouped = StateVector::new(4, grouped).unwrap();
        assert!(grouped.approx_eq(&cluster4(), 1e-12));

        // |0>_2 |phi+>_14 |0>_3 + |1>_2 |phi->_14 |1>_3, rebuilt in (1,2,3,4) order.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut bell14 = vec![c(0.0); 16];
        for (q2, kind) in [(0u8, BellOutcome::PhiPlus), (1u8, BellOutcome::PhiMinus)] {
            let q3 = q2;
            let pair = bell_state(kind);
            for q1 in 0..2u8 {
                for q4 in 0..2u8 {
                    let amp = pair.amplitude(((q1 as usize) << 1) | q4 as usize);
                    bell14[ket4(q1, q2, q3, q4)] += amp * c(s);
                }
            }
        }
        let bell14 = StateVector::new(4, bell14).unwrap();
        assert!(bell14.approx_eq(&cluster4(), 1e-12));

        // |0>_1 |phi+>_23 |0>_4 + |1>_1 |phi->_23 |1>_4.
        let mut bell23 = vec![c(0.0); 16];
        for (q1, kind) in [(0u8, BellOutcome::PhiPlus), (1u8, BellOutcome::PhiMinus)] {
            let q4 = q1;
            let pair = bell_state(kind);
            for q2 in 0..2u8 {
                for q3 in 0..2u8 {
                    let amp = pair.amplitude(((q2 as usize) << 1) | q3 as usize);
                    bell23[ket4(q1, q2, q3, q4)] += amp * c(s);
                }
            }
        }
        let bell23 = StateVector::new(4, bell23).unwrap();
        assert!(bell23.approx_eq(&cluster4(), 1e-12));
    }

    #[test]
    fn measure_z_on_eigenstate() {
        let zero = StateVector::basis_state(1, 0);
        let (bit, post) = measure_z(&zero, 0, 0.999_999).unwrap();
        assert_eq!(bit, 0);
        assert!(post.approx_eq(&zero, 1e-12));
    }

    #[test]
    fn measure_z_balanced_on_cluster_qubit1() {
        let p0 = z_probability_zero(&cluster4(), 0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn measure_z_rejects_bad_input() {
        let s = cluster4();
        assert!(measure_z(&s, 0, 1.0).is_err());
        assert!(measure_z(&s, 0, -0.1).is_err());
        assert!(measure_z(&s, 9, 0.5).is_err());
    }

    #[test]
    fn measure_bell_eigenstate_and_computational() {
        let (kind, post) = measure_bell(&bell_state(BellOutcome::PhiPlus), 0, 1, 0.7).unwrap();
        assert_eq!(kind, BellOutcome::PhiPlus);
        assert!(post.approx_eq_physical(&bell_state(BellOutcome::PhiPlus), 1e-12));

        // |00> = (phi+ + phi-)/sqrt(2): PhiPlus or PhiMinus, each 1/2.
        let zz = StateVector::basis_state(2, 0);
        let probs = bell_probabilities(&zz, 0, 1).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((probs[1] - 0.5).abs() < 1e-12);
        assert!(probs[2].abs() < 1e-12 && probs[3].abs() < 1e-12);
        let (k0, _) = measure_bell(&zz, 0, 1, 0.25).unwrap();
        let (k1, _) = measure_bell(&zz, 0, 1, 0.75).unwrap();
        assert_eq!(k0, BellOutcome::PhiPlus);
        assert_eq!(k1, BellOutcome::PhiMinus);
    }

    #[test]
    fn measure_bell_on_hadamarded_cluster_is_uniform() {
        let h = UnitaryMatrix::hadamard();
        let s = apply_unitary(&cluster4(), &h, &[0]).unwrap();
        let s = apply_unitary(&s, &h, &[1]).unwrap();
        let probs = bell_probabilities(&s, 2, 3).unwrap();
        for (k, p) in probs.iter().enumerate() {
            assert!((p - 0.25).abs() < 1e-12, "kind {k}: {p}");
        }
    }

    #[test]
    fn measurement_branch_probabilities_sum_to_one() {
        let h = UnitaryMatrix::hadamard();
        let s = apply_unitary(&cluster4(), &h, &[2]).unwrap();
        for q in 0..4 {
            let p0 = z_probability_zero(&s, q).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&p0));
        }
        let bp = bell_probabilities(&s, 1, 3).unwrap();
        assert!((bp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapse_is_idempotent() {
        let h = UnitaryMatrix::hadamard();
        let s = apply_unitary(&cluster4(), &h, &[1]).unwrap();
        for draw in [0.1, 0.6, 0.95] {
            let (bit, post) = measure_z(&s, 1, draw).unwrap();
            let p0 = z_probability_zero(&post, 1).unwrap();
            let again = if bit == 0 { p0 } else { 1.0 - p0 };
            assert!((again - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_unitary_validates_targets() {
        let s = cluster4();
        let h = UnitaryMatrix::hadamard();
        assert!(apply_unitary(&s, &h, &[4]).is_err());
        assert!(apply_unitary(&s, &h, &[0, 1]).is_err()); // dim mismatch
        assert!(apply_unitary(&s, &UnitaryMatrix::identity(4), &[2, 2]).is_err());
    }

    #[test]
    fn swap_moves_amplitudes() {
        let s = StateVector::basis_state(2, 0b01);
        let t = swap_qubits(&s, 0, 1).unwrap();
        assert!((t.amplitude(0b10) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        // Tracing half of phi+ leaves I/2.
        let rho = partial_trace(&bell_state(BellOutcome::PhiPlus), &[0]).unwrap();
        assert!((rho.entry(0, 0) - c(0.5)).norm() < 1e-12);
        assert!((rho.entry(1, 1) - c(0.5)).norm() < 1e-12);
        assert!(rho.entry(0, 1).norm() < 1e-12);

        // Keeping everything reproduces the projector.
        let s = bell_state(BellOutcome::PsiMinus);
        let rho = partial_trace(&s, &[0, 1]).unwrap();
        let proj = DensityMatrix::from_pure(&s);
        for i in 0..4 {
            for j in 0..4 {
                assert!((rho.entry(i, j) - proj.entry(i, j)).norm() < 1e-12);
            }
        }

        // Qubit 1 of the cluster state is maximally mixed.
        let rho = partial_trace(&cluster4(), &[0]).unwrap();
        assert!((rho.entry(0, 0) - c(0.5)).norm() < 1e-12);
        assert!((rho.entry(1, 1) - c(0.5)).norm() < 1e-12);
        assert!(rho.entry(1, 0).norm() < 1e-12);

        assert!(partial_trace(&cluster4(), &[]).is_err());
        assert!(partial_trace(&cluster4(), &[5]).is_err());
    }

    #[test]
    fn entropy_values() {
        assert!((shannon_entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!(shannon_entropy(&[1.0, 0.0, 0.0, 0.0]).unwrap().abs() < 1e-12);
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-12);
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
        assert!(shannon_entropy(&[-0.1, 1.1]).is_err());

        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(binary_entropy(0.0).unwrap().abs() < 1e-12);
        assert!(binary_entropy(1.0).unwrap().abs() < 1e-12);
        // direct evaluation of h(0.11)
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn von_neumann_values() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&mixed) - 1.0).abs() < 1e-12);

        let pure = DensityMatrix::from_pure(&bell_state(BellOutcome::PhiPlus));
        assert!(von_neumann_entropy(&pure).abs() < 1e-9);

        let diag = DensityMatrix::new(nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![c(0.75), c(0.25)]),
        ))
        .unwrap();
        let expect = binary_entropy(0.25).unwrap();
        assert!((von_neumann_entropy(&diag) - expect).abs() < 1e-12);
        assert!((expect - 0.811_278_124_459_133).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounds_on_reduced_states() {
        let h = UnitaryMatrix::hadamard();
        let s = apply_unitary(&cluster4(), &h, &[3]).unwrap();
        for keep in [vec![0], vec![0, 1], vec![1, 2, 3]] {
            let rho = partial_trace(&s, &keep).unwrap();
            let ent = von_neumann_entropy(&rho);
            assert!(ent >= -1e-9);
            assert!(ent <= (keep.len() as f64) + 1e-9);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let z0 = DensityMatrix::from_pure(&StateVector::basis_state(1, 0));
        let z1 = DensityMatrix::from_pure(&StateVector::basis_state(1, 1));
        assert!(trace_distance(&z0, &z0).unwrap().abs() < 1e-12);
        assert!((trace_distance(&z0, &z1).unwrap() - 1.0).abs() < 1e-12);

        let plus = apply_unitary(
            &StateVector::basis_state(1, 0),
            &UnitaryMatrix::hadamard(),
            &[0],
        )
        .unwrap();
        let rho_plus = DensityMatrix::from_pure(&plus);
        let d = trace_distance(&z0, &rho_plus).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let big = DensityMatrix::maximally_mixed(4);
        assert!(trace_distance(&z0, &big).is_err());
    }

    #[test]
    fn density_matrix_rejects_invalid() {
        // trace != 1
        let m =
            nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.9), c(0.9)]));
        assert!(DensityMatrix::new(m).is_err());
        // not Hermitian
        let mut m =
            nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5), c(0.5)]));
        m[(0, 1)] = c(0.3);
        assert!(DensityMatrix::new(m).is_err());
        // negative eigenvalue
        let m =
            nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn unitary_matrix_rejects_non_unitary() {
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(1.0), c(1.0)]);
        assert!(UnitaryMatrix::new(m).is_err());
    }
}
