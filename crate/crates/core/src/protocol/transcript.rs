//! Transcript and summary serialization.
//!
//! Transcripts are line-delimited JSON, one round per line, with the fields
//! `(index, alice_op, bob_op, case, mr_A, mr_B, mr_C3, mr_C4, mr_C34,
//! designation)`; absent measurements serialize as `null`. Summaries are flat
//! `key = value` text, friendly to diffing and golden tests.

use serde::{Deserialize, Serialize};

use super::{CaseKind, Designation, LocalOp, ProtocolConfig, RoundRecord, SiftOutcome};
use crate::error::{QkdError, Result};
use crate::qcore::BellOutcome;

#[derive(Serialize, Deserialize)]
struct Row {
    index: u64,
    alice_op: String,
    bob_op: String,
    case: String,
    #[serde(rename = "mr_A")]
    mr_a: u8,
    #[serde(rename = "mr_B")]
    mr_b: u8,
    #[serde(rename = "mr_C3")]
    mr_c3: Option<u8>,
    #[serde(rename = "mr_C4")]
    mr_c4: Option<u8>,
    #[serde(rename = "mr_C34")]
    mr_c34: Option<String>,
    designation: String,
}

impl From<&RoundRecord> for Row {
    fn from(r: &RoundRecord) -> Self {
        Row {
            index: r.index,
            alice_op: r.alice_op.label().to_string(),
            bob_op: r.bob_op.label().to_string(),
            case: r.case.label().to_string(),
            mr_a: r.mr_a,
            mr_b: r.mr_b,
            mr_c3: r.mr_c3,
            mr_c4: r.mr_c4,
            mr_c34: r.mr_c34.map(|k| k.label().to_string()),
            designation: r.designation.label().to_string(),
        }
    }
}

impl Row {
    fn into_record(self, line: usize) -> Result<RoundRecord> {
        let fail = |what: &str| QkdError::TranscriptParse(format!("line {line}: {what}"));
        let alice_op = LocalOp::from_label(&self.alice_op)
            .ok_or_else(|| fail(&format!("bad alice_op {:?}", self.alice_op)))?;
        let bob_op = LocalOp::from_label(&self.bob_op)
            .ok_or_else(|| fail(&format!("bad bob_op {:?}", self.bob_op)))?;
        let case = CaseKind::from_label(&self.case)
            .ok_or_else(|| fail(&format!("bad case {:?}", self.case)))?;
        if case != CaseKind::from_ops(alice_op, bob_op) {
            return Err(fail("case disagrees with announced operations"));
        }
        let designation = Designation::from_label(&self.designation)
            .ok_or_else(|| fail(&format!("bad designation {:?}", self.designation)))?;
        let mr_c34 = match self.mr_c34 {
            Some(s) => Some(
                BellOutcome::from_label(&s).ok_or_else(|| fail(&format!("bad mr_C34 {s:?}")))?,
            ),
            None => None,
        };
        let record = RoundRecord {
            index: self.index,
            alice_op,
            bob_op,
            case,
            mr_a: self.mr_a,
            mr_b: self.mr_b,
            mr_c3: self.mr_c3,
            mr_c4: self.mr_c4,
            mr_c34,
            designation,
            attacker_bit: None,
        };
        match case {
            CaseKind::Case4 => {
                if record.mr_c34.is_none() || record.mr_c3.is_some() || record.mr_c4.is_some() {
                    return Err(fail("Case4 must carry mr_C34 only"));
                }
                if record.designation != Designation::Check {
                    return Err(fail("Case4 rounds are always Check"));
                }
            }
            _ => {
                if record.mr_c3.is_none() || record.mr_c4.is_none() || record.mr_c34.is_some() {
                    return Err(fail("Z cases must carry mr_C3 and mr_C4 only"));
                }
            }
        }
        Ok(record)
    }
}

/// Render records as line-delimited JSON, one round per line, in order.
pub fn transcript_to_string(records: &[RoundRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let row = Row::from(record);
        out.push_str(&serde_json::to_string(&row).expect("row serialization"));
        out.push('\n');
    }
    out
}

/// Parse a transcript produced by [`transcript_to_string`].
pub fn parse_transcript(text: &str) -> Result<Vec<RoundRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row: Row = serde_json::from_str(l)
                .map_err(|e| QkdError::TranscriptParse(format!("line {}: {e}", i + 1)))?;
            row.into_record(i + 1)
        })
        .collect()
}

/// Flat summary of a run: configuration echo, per-case statistics, key
/// lengths and the abort flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n: u64,
    pub epsilon: f64,
    pub rounds: u64,
    pub seed: u64,
    pub check_fraction: f64,
    pub error_threshold: f64,
    pub attack: String,
    pub aborted: bool,
    pub counts: [u64; 4],
    pub checked: [u64; 4],
    pub error_rates: [f64; 4],
    pub raw_key_ca_len: usize,
    pub raw_key_cb_len: usize,
}

impl RunSummary {
    pub fn new(config: &ProtocolConfig, attack: &str, outcome: &SiftOutcome) -> Self {
        RunSummary {
            n: config.n,
            epsilon: config.epsilon,
            rounds: config.num_rounds(),
            seed: config.seed,
            check_fraction: config.check_fraction,
            error_threshold: config.error_threshold,
            attack: attack.to_string(),
            aborted: outcome.aborted,
            counts: outcome.counts,
            checked: outcome.checked,
            error_rates: outcome.case_error_rates,
            raw_key_ca_len: outcome.raw_key_ca.len(),
            raw_key_cb_len: outcome.raw_key_cb.len(),
        }
    }

    /// `key = value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("n", self.n.to_string());
        push("epsilon", self.epsilon.to_string());
        push("rounds", self.rounds.to_string());
        push("seed", self.seed.to_string());
        push("check_fraction", self.check_fraction.to_string());
        push("error_threshold", self.error_threshold.to_string());
        push("attack", self.attack.clone());
        push("aborted", self.aborted.to_string());
        for (i, case) in CaseKind::ALL.iter().enumerate() {
            push(
                &format!("counts.{}", case.label()),
                self.counts[i].to_string(),
            );
        }
        for (i, case) in CaseKind::ALL.iter().enumerate() {
            push(
                &format!("checked.{}", case.label()),
                self.checked[i].to_string(),
            );
        }
        for (i, case) in CaseKind::ALL.iter().enumerate() {
            push(
                &format!("error_rate.{}", case.label()),
                self.error_rates[i].to_string(),
            );
        }
        push("raw_key_CA_len", self.raw_key_ca_len.to_string());
        push("raw_key_CB_len", self.raw_key_cb_len.to_string());
        out
    }

    /// Parse the output of [`RunSummary::to_text`] (used by tests and the
    /// CLI's golden checks).
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| QkdError::TranscriptParse(format!("bad summary line {line:?}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| QkdError::TranscriptParse(format!("summary missing key {k}")))
        };
        let parse_f = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|e| QkdError::TranscriptParse(format!("{k}: {e}")))
        };
        let parse_u = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|e| QkdError::TranscriptParse(format!("{k}: {e}")))
        };
        let mut counts = [0u64; 4];
        let mut checked = [0u64; 4];
        let mut error_rates = [0.0f64; 4];
        for (i, case) in CaseKind::ALL.iter().enumerate() {
            counts[i] = parse_u(&format!("counts.{}", case.label()))?;
            checked[i] = parse_u(&format!("checked.{}", case.label()))?;
            error_rates[i] = parse_f(&format!("error_rate.{}", case.label()))?;
        }
        Ok(RunSummary {
            n: parse_u("n")?,
            epsilon: parse_f("epsilon")?,
            rounds: parse_u("rounds")?,
            seed: parse_u("seed")?,
            check_fraction: parse_f("check_fraction")?,
            error_threshold: parse_f("error_threshold")?,
            attack: get("attack")?,
            aborted: get("aborted")? == "true",
            counts,
            checked,
            error_rates,
            raw_key_ca_len: parse_u("raw_key_CA_len")? as usize,
            raw_key_cb_len: parse_u("raw_key_CB_len")? as usize,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackModel;
    use crate::protocol::run_protocol;

    #[test]
    fn transcript_round_trips() {
        let config = ProtocolConfig::with_defaults(50, 41).unwrap();
        let (records, _) = run_protocol(&config, &AttackModel::None).unwrap();
        let text = transcript_to_string(&records);
        let parsed = parse_transcript(&text).unwrap();
        assert_eq!(parsed.len(), records.len());
        for (a, b) in records.iter().zip(&parsed) {
            assert_eq!(a.index, b.index);
            assert_eq!(a.case, b.case);
            assert_eq!(a.mr_a, b.mr_a);
            assert_eq!(a.mr_b, b.mr_b);
            assert_eq!(a.mr_c3, b.mr_c3);
            assert_eq!(a.mr_c4, b.mr_c4);
            assert_eq!(a.mr_c34, b.mr_c34);
            assert_eq!(a.designation, b.designation);
        }
    }

    #[test]
    fn transcript_uses_exact_field_names_and_null() {
        let config = ProtocolConfig::with_defaults(10, 2).unwrap();
        let (records, _) = run_protocol(&config, &AttackModel::None).unwrap();
        let text = transcript_to_string(&records);
        let first = text.lines().next().unwrap();
        for field in [
            "\"index\"",
            "\"alice_op\"",
            "\"bob_op\"",
            "\"case\"",
            "\"mr_A\"",
            "\"mr_B\"",
            "\"mr_C3\"",
            "\"mr_C4\"",
            "\"mr_C34\"",
            "\"designation\"",
        ] {
            assert!(first.contains(field), "{field} missing in {first}");
        }
        assert!(text.contains("null"));
    }

    #[test]
    fn transcript_rejects_malformed_lines() {
        assert!(parse_transcript("{\"index\":0}").is_err());
        let bad_case = "{\"index\":0,\"alice_op\":\"I\",\"bob_op\":\"I\",\"case\":\"Case4\",\
                        \"mr_A\":0,\"mr_B\":0,\"mr_C3\":null,\"mr_C4\":null,\
                        \"mr_C34\":\"PhiPlus\",\"designation\":\"Check\"}";
        assert!(parse_transcript(bad_case).is_err());
    }

    #[test]
    fn summary_round_trips() {
        let config = ProtocolConfig::with_defaults(50, 4).unwrap();
        let (_, outcome) = run_protocol(&config, &AttackModel::None).unwrap();
        let summary = RunSummary::new(&config, "none", &outcome);
        let text = summary.to_text();
        let parsed = RunSummary::parse(&text).unwrap();
        assert_eq!(summary, parsed);
        assert!(text.contains("aborted = false"));
        assert!(text.contains("attack = none"));
    }
}
