//! Asymptotic key-rate lower bound.
//!
//! From the observable channel statistics the bound chains together the
//! conditional entropy between Alice and Charlie, an entropy bound on the
//! attacker's side information via an auxiliary correlated/anti-correlated
//! flag system, a Cauchy-Schwarz overlap bound `B`, and the resulting
//! eigenvalue `lambda~` of the attacker's conditional state. Specializing to
//! a depolarizing channel of parameter `Q` yields the `r(Q)` curve and its
//! positivity threshold near 9.68%.

use crate::error::{QkdError, Result};
use crate::protocol::{consistency_check, CaseKind, RoundRecord};

/// Joint Z-outcome statistics for Alice's bit and Charlie's qubit-4 bit,
/// plus the consistency probabilities of the Hadamard-checked case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStats {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub pc: f64,
    pub pin: f64,
}

const NORM_TOL: f64 = 1e-9;

impl ObservedStats {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64, pc: f64, pin: f64) -> Result<Self> {
        let stats = Self {
            p00,
            p01,
            p10,
            p11,
            pc,
            pin,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p00", self.p00),
            ("p01", self.p01),
            ("p10", self.p10),
            ("p11", self.p11),
            ("pc", self.pc),
            ("pin", self.pin),
        ] {
            if !v.is_finite() || !(-NORM_TOL..=1.0 + NORM_TOL).contains(&v) {
                return Err(QkdError::InvalidArgument(format!(
                    "{name} = {v} not in [0, 1]"
                )));
            }
        }
        let joint = self.p00 + self.p01 + self.p10 + self.p11;
        if (joint - 1.0).abs() > NORM_TOL {
            return Err(QkdError::InvalidArgument(format!(
                "p_ij sum to {joint}, expected 1"
            )));
        }
        if (self.pc + self.pin - 1.0).abs() > NORM_TOL {
            return Err(QkdError::InvalidArgument(format!(
                "pc + pin = {}, expected 1",
                self.pc + self.pin
            )));
        }
        Ok(())
    }
}

/// All intermediate terms of the bound plus the bound itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    /// `H(A|C)`.
    pub h_ac: f64,
    /// `S(AEF) = H(p00, p01, p10, p11)`.
    pub s_aef: f64,
    /// Upper bound on `S(EF)`.
    pub s_ef_bound: f64,
    /// Lower bound on the squared ancilla overlap.
    pub b: f64,
    /// Larger eigenvalue of the attacker's correlated-branch state.
    pub lambda_tilde: f64,
    /// Key-rate lower bound.
    pub r_lower: f64,
}

/// Record of the threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRecord {
    pub threshold: f64,
    pub bracket_width: f64,
    pub iterations: u32,
}

fn h2(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let term = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    -term(p) - term(1.0 - p)
}

fn shannon4(ps: [f64; 4]) -> f64 {
    -ps.iter()
        .map(|&p| if p > 0.0 { p * p.log2() } else { 0.0 })
        .sum::<f64>()
}

/// Statistics of a depolarizing channel with parameter `Q`.
pub fn stats_from_q(q: f64) -> Result<ObservedStats> {
    if !q.is_finite() || !(0.0..=0.5).contains(&q) {
        return Err(QkdError::InvalidArgument(format!(
            "Q = {q} not in [0, 0.5]"
        )));
    }
    ObservedStats::new(
        (1.0 - q) / 2.0,
        q / 2.0,
        q / 2.0,
        (1.0 - q) / 2.0,
        1.0 - q,
        q,
    )
}

/// Empirical statistics from a transcript: `p_ij` over Case-1 and Case-2
/// rounds, consistency probabilities over Case-3 rounds.
pub fn stats_from_transcript(records: &[RoundRecord]) -> Result<ObservedStats> {
    let mut joint = [0u64; 4];
    let mut joint_total = 0u64;
    let mut case3_total = 0u64;
    let mut case3_consistent = 0u64;
    for record in records {
        match record.case {
            CaseKind::Case1 | CaseKind::Case2 => {
                let c4 = record.mr_c4.ok_or_else(|| {
                    QkdError::IncompleteRecord(format!("round {} lacks mr_C4", record.index))
                })?;
                joint[((record.mr_a << 1) | c4) as usize] += 1;
                joint_total += 1;
            }
            CaseKind::Case3 => {
                case3_total += 1;
                if consistency_check(record)? {
                    case3_consistent += 1;
                }
            }
            CaseKind::Case4 => {}
        }
    }
    if joint_total == 0 {
        return Err(QkdError::EmptyCategory(
            "no Case-1 or Case-2 rounds to estimate p_ij".into(),
        ));
    }
    if case3_total == 0 {
        return Err(QkdError::EmptyCategory(
            "no Case-3 rounds to estimate pc".into(),
        ));
    }
    let n = joint_total as f64;
    let pc = case3_consistent as f64 / case3_total as f64;
    ObservedStats::new(
        joint[0] as f64 / n,
        joint[1] as f64 / n,
        joint[2] as f64 / n,
        joint[3] as f64 / n,
        pc,
        1.0 - pc,
    )
}

/// `H(A|C) = H(p00, p01, p10, p11) - H(p00 + p10, p01 + p11)`.
pub fn conditional_entropy_h_ac(stats: &ObservedStats) -> Result<f64> {
    stats.validate()?;
    let joint = shannon4([stats.p00, stats.p01, stats.p10, stats.p11]);
    let charlie = h2(stats.p00 + stats.p10);
    Ok(joint - charlie)
}

/// Overlap lower bound `B = |(pc - pin) - 2 sqrt(p01 p10)|^2`.
pub fn bound_b(stats: &ObservedStats) -> Result<f64> {
    stats.validate()?;
    let cross = 2.0 * (stats.p01 * stats.p10).sqrt();
    Ok(((stats.pc - stats.pin) - cross).powi(2))
}

/// `lambda~ = 1/2 + sqrt((p00 - p11)^2 + B) / (2 (p00 + p11))`, the larger
/// eigenvalue branch, clamped to at most 1.
pub fn lambda_tilde(stats: &ObservedStats) -> Result<f64> {
    stats.validate()?;
    let xi1 = stats.p00 + stats.p11;
    if xi1 <= 0.0 {
        return Err(QkdError::InvalidArgument(
            "p00 + p11 = 0: no correlated mass".into(),
        ));
    }
    let b = bound_b(stats)?;
    let lam = 0.5 + ((stats.p00 - stats.p11).powi(2) + b).sqrt() / (2.0 * xi1);
    Ok(lam.min(1.0))
}

/// Lower bound on the asymptotic key rate, with all intermediate terms.
pub fn key_rate_lower(stats: &ObservedStats) -> Result<KeyRateReport> {
    stats.validate()?;
    let xi1 = stats.p00 + stats.p11;
    let xi2 = stats.p01 + stats.p10;
    let lambda = lambda_tilde(stats)?;
    let b = bound_b(stats)?;
    let h_ac = conditional_entropy_h_ac(stats)?;
    let s_aef = shannon4([stats.p00, stats.p01, stats.p10, stats.p11]);
    let s_ef_bound = h2(xi1) + xi1 * h2(lambda) + xi2;
    let r_lower = h2(stats.p00 + stats.p10) - h2(xi1) - xi1 * h2(lambda) - xi2;
    Ok(KeyRateReport {
        h_ac,
        s_aef,
        s_ef_bound,
        b,
        lambda_tilde: lambda,
        r_lower,
    })
}

fn rate_at(q: f64) -> Result<f64> {
    Ok(key_rate_lower(&stats_from_q(q)?)?.r_lower)
}

/// Noise-tolerance threshold: the root of `r(Q) = 0`, found by bisection on
/// `[1e-6, 0.25]` down to a bracket narrower than 1e-6.
pub fn noise_threshold() -> Result<f64> {
    Ok(noise_threshold_record()?.threshold)
}

/// Threshold search with its bracket width and iteration count.
pub fn noise_threshold_record() -> Result<ThresholdRecord> {
    let mut lo = 1e-6;
    let mut hi = 0.25;
    let f_lo = rate_at(lo)?;
    let f_hi = rate_at(hi)?;
    if f_lo <= 0.0 || f_hi >= 0.0 {
        return Err(QkdError::NoSignChange(lo, hi));
    }
    let mut iterations = 0u32;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdRecord {
        threshold: 0.5 * (lo + hi),
        bracket_width: hi - lo,
        iterations,
    })
}

/// Uniform grid of `(Q, r_lower)` pairs over `[q_min, q_max]`.
pub fn key_rate_curve(q_min: f64, q_max: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    if !(q_min.is_finite() && q_max.is_finite()) || q_min < 0.0 || q_max > 0.5 || q_min >= q_max {
        return Err(QkdError::InvalidArgument(format!(
            "need 0 <= q_min < q_max <= 0.5, got [{q_min}, {q_max}]"
        )));
    }
    if steps < 2 {
        return Err(QkdError::InvalidArgument(format!(
            "steps = {steps}, need at least 2"
        )));
    }
    let mut curve = Vec::with_capacity(steps);
    for i in 0..steps {
        let q = q_min + (q_max - q_min) * i as f64 / (steps - 1) as f64;
        curve.push((q, rate_at(q)?));
    }
    Ok(curve)
}

/// Render a curve as two-column CSV with a one-line header.
pub fn curve_to_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("Q,r_lower\n");
    for (q, r) in curve {
        out.push_str(&format!("{q},{r}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackModel;
    use crate::protocol::{run_protocol, ProtocolConfig};

    #[test]
    fn depolarizing_stats() {
        let s = stats_from_q(0.0).unwrap();
        assert_eq!(
            (s.p00, s.p01, s.p10, s.p11, s.pc, s.pin),
            (0.5, 0.0, 0.0, 0.5, 1.0, 0.0)
        );
        let s = stats_from_q(0.1).unwrap();
        assert!((s.p00 - 0.45).abs() < 1e-15);
        assert!((s.p01 - 0.05).abs() < 1e-15);
        assert!((s.pc - 0.9).abs() < 1e-15);
        let s = stats_from_q(0.5).unwrap();
        assert!((s.p00 - 0.25).abs() < 1e-15);
        assert!((s.p01 - 0.25).abs() < 1e-15);
        assert!(stats_from_q(-0.01).is_err());
        assert!(stats_from_q(0.51).is_err());
    }

    #[test]
    fn conditional_entropy_values() {
        assert!(
            conditional_entropy_h_ac(&stats_from_q(0.0).unwrap())
                .unwrap()
                .abs()
                < 1e-12
        );
        let uniform = ObservedStats::new(0.25, 0.25, 0.25, 0.25, 0.5, 0.5).unwrap();
        assert!((conditional_entropy_h_ac(&uniform).unwrap() - 1.0).abs() < 1e-12);
        // H(.475,.025,.025,.475) - 1, frozen from direct evaluation
        let h = conditional_entropy_h_ac(&stats_from_q(0.05).unwrap()).unwrap();
        assert!((h - 0.286_396_957_115_956).abs() < 1e-12);
    }

    #[test]
    fn bound_b_values() {
        assert!((bound_b(&stats_from_q(0.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        // (0.8 - 0.1)^2
        assert!((bound_b(&stats_from_q(0.1).unwrap()).unwrap() - 0.49).abs() < 1e-12);
        let zero_info = ObservedStats::new(0.5, 0.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        assert!(bound_b(&zero_info).unwrap().abs() < 1e-12);
    }

    #[test]
    fn lambda_values() {
        assert!((lambda_tilde(&stats_from_q(0.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let lam = lambda_tilde(&stats_from_q(0.1).unwrap()).unwrap();
        assert!((lam - (0.5 + 0.7 / 1.8)).abs() < 1e-12);
        // B = 0 and p00 = p11 pin lambda at 1/2: with p01 = p10 = 1/4 the
        // cross term is 1/2, cancelled by pc - pin = 1/2
        let s = ObservedStats::new(0.25, 0.25, 0.25, 0.25, 0.75, 0.25).unwrap();
        let b = bound_b(&s).unwrap();
        assert!(b.abs() < 1e-12);
        assert!((lambda_tilde(&s).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_values() {
        let r0 = key_rate_lower(&stats_from_q(0.0).unwrap()).unwrap();
        assert!((r0.r_lower - 1.0).abs() < 1e-9);
        // near the threshold the bound sits within 5e-3 of zero
        let r = key_rate_lower(&stats_from_q(0.0968).unwrap()).unwrap();
        assert!(r.r_lower.abs() < 5e-3, "r(0.0968) = {}", r.r_lower);
        // frozen from direct evaluation of the closed form
        let r = key_rate_lower(&stats_from_q(0.05).unwrap()).unwrap();
        assert!((r.r_lower - 0.381_004_406_410_719).abs() < 1e-9);
        assert!(r.r_lower > 0.0);
    }

    #[test]
    fn report_terms_are_consistent() {
        for q in [0.0, 0.02, 0.05, 0.08, 0.11] {
            let stats = stats_from_q(q).unwrap();
            let report = key_rate_lower(&stats).unwrap();
            assert!(report.s_ef_bound >= -1e-12);
            assert!((0.0..=2.0 + 1e-12).contains(&report.h_ac));
            assert!((0.5..=1.0).contains(&report.lambda_tilde));
            assert!(report.b >= 0.0);
            assert!(report.r_lower <= 1.0 + 1e-12);
            // r = S(AEF) - S(EF)bound - H(A|C)
            let reassembled = report.s_aef - report.s_ef_bound - report.h_ac;
            assert!((reassembled - report.r_lower).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_symmetric_entries_keeps_rate() {
        let s = ObservedStats::new(0.5, 0.15, 0.05, 0.3, 0.8, 0.2).unwrap();
        let swapped = ObservedStats::new(0.3, 0.05, 0.15, 0.5, 0.8, 0.2).unwrap();
        let a = key_rate_lower(&s).unwrap().r_lower;
        let b = key_rate_lower(&swapped).unwrap().r_lower;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn lambda_matches_dense_eigensolver() {
        // Rebuild the attacker's conditional 2x2 state with the overlap set
        // to B and compare its top eigenvalue against the closed form.
        use nalgebra::DMatrix;
        use num_complex::Complex64;
        for q in [0.01, 0.05, 0.0968, 0.2] {
            let stats = stats_from_q(q).unwrap();
            let b = bound_b(&stats).unwrap();
            let xi1 = stats.p00 + stats.p11;
            let alpha_sq = 2.0 * stats.p00;
            let beta_sq = b / alpha_sq;
            let gamma_sq = (2.0 * stats.p11 - beta_sq).max(0.0);
            let beta = beta_sq.sqrt();
            let gamma = gamma_sq.sqrt();
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new((alpha_sq + beta_sq) / (2.0 * xi1), 0.0),
                    Complex64::new(beta * gamma / (2.0 * xi1), 0.0),
                    Complex64::new(beta * gamma / (2.0 * xi1), 0.0),
                    Complex64::new(gamma_sq / (2.0 * xi1), 0.0),
                ],
            );
            let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
            eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let lam = lambda_tilde(&stats).unwrap();
            assert!((eig[0] - lam).abs() < 1e-9, "Q={q}: {} vs {lam}", eig[0]);
        }
    }

    #[test]
    fn threshold_sits_at_the_documented_tolerance() {
        let record = noise_threshold_record().unwrap();
        assert!(
            (record.threshold - 0.0968).abs() < 5e-4,
            "threshold {}",
            record.threshold
        );
        assert!(record.bracket_width < 1e-6);
        assert!(record.iterations > 0);
        // positive below, negative above
        assert!(rate_at(record.threshold / 2.0).unwrap() > 0.0);
        assert!(rate_at(0.12).unwrap() < 0.0);
    }

    #[test]
    fn curve_shape() {
        let curve = key_rate_curve(0.0, 0.12, 121).unwrap();
        assert_eq!(curve.len(), 121);
        assert_eq!(curve[0].0, 0.0);
        assert!((curve[0].1 - 1.0).abs() < 1e-9);
        for w in curve.windows(2) {
            assert!(w[1].1 < w[0].1, "not strictly decreasing at {}", w[1].0);
        }
        let csv = curve_to_csv(&curve);
        assert!(csv.starts_with("Q,r_lower\n0,1\n"));

        assert!(key_rate_curve(0.0, 0.0, 1).is_err());
        assert!(key_rate_curve(0.2, 0.1, 10).is_err());
        assert!(key_rate_curve(0.0, 0.6, 10).is_err());
    }

    #[test]
    fn transcript_stats_noiseless() {
        let config = ProtocolConfig::with_defaults(600, 5).unwrap();
        let (records, _) = run_protocol(&config, &AttackModel::None).unwrap();
        let stats = stats_from_transcript(&records).unwrap();
        assert!(stats.p01.abs() < 1e-12);
        assert!(stats.p10.abs() < 1e-12);
        assert!((stats.pc - 1.0).abs() < 1e-12);
        // p00 and p11 hover around 1/2
        assert!((stats.p00 - 0.5).abs() < 0.05);
    }

    #[test]
    fn transcript_stats_need_all_categories() {
        let config = ProtocolConfig::with_defaults(50, 5).unwrap();
        let (records, _) = run_protocol(&config, &AttackModel::None).unwrap();
        let only_case1: Vec<_> = records
            .iter()
            .filter(|r| r.case == CaseKind::Case1)
            .cloned()
            .collect();
        assert!(matches!(
            stats_from_transcript(&only_case1),
            Err(QkdError::EmptyCategory(_))
        ));
        let only_case3: Vec<_> = records
            .iter()
            .filter(|r| r.case == CaseKind::Case3)
            .cloned()
            .collect();
        assert!(matches!(
            stats_from_transcript(&only_case3),
            Err(QkdError::EmptyCategory(_))
        ));
    }
}
