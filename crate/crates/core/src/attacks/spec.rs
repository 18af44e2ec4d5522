//! Textual attack specifications: `name[:param[,param]]`.
//!
//! Accepted forms:
//!   - `none`
//!   - `intercept-resend`
//!   - `measure-resend`
//!   - `measure-resend-bell`
//!   - `depolarizing:<Q>`
//!   - `collective:[zero-error,][seed=<N>][,a=<re>,b=<re>,c=<re>,d=<re>]`
//!   - `collective-external:[zero-error,][seed=<N>]`
//!
//! `collective` without explicit coefficients draws a random valid model from
//! the seed; with `a..d` given, the ancilla states are a seeded orthonormal
//! frame and the coefficients are used as written.

use num_complex::Complex64;

use super::collective::{
    constrained_attack, sample_random_external, sample_random_internal, sample_zero_error_external,
    sample_zero_error_internal, CollectiveAttackParams,
};
use super::AttackModel;
use crate::error::{QkdError, Result};
use crate::rng;

pub fn parse_attack_spec(spec: &str) -> Result<AttackModel> {
    let spec = spec.trim();
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    match name {
        "none" => no_params(name, params).map(|_| AttackModel::None),
        "intercept-resend" => no_params(name, params).map(|_| AttackModel::InterceptResendZ),
        "measure-resend" => no_params(name, params).map(|_| AttackModel::MeasureResendZ),
        "measure-resend-bell" => no_params(name, params).map(|_| AttackModel::MeasureResendBell),
        "depolarizing" => {
            let raw = params.ok_or_else(|| {
                QkdError::AttackSpec(
                    "depolarizing requires a parameter, e.g. depolarizing:0.05".into(),
                )
            })?;
            let q: f64 = raw.trim().parse().map_err(|e| {
                QkdError::AttackSpec(format!("bad depolarizing parameter {raw:?}: {e}"))
            })?;
            let model = AttackModel::Depolarizing(q);
            model.validate()?;
            Ok(model)
        }
        "collective" => collective_spec(params, false),
        "collective-external" => collective_spec(params, true),
        other => Err(QkdError::AttackSpec(format!("unknown attack {other:?}"))),
    }
}

fn no_params(name: &str, params: Option<&str>) -> Result<()> {
    match params {
        None | Some("") => Ok(()),
        Some(p) => Err(QkdError::AttackSpec(format!(
            "{name} takes no parameters, got {p:?}"
        ))),
    }
}

#[derive(Default)]
struct CollectiveSpec {
    zero_error: bool,
    seed: u64,
    coeffs: Option<[f64; 4]>,
}

fn collective_spec(params: Option<&str>, external: bool) -> Result<AttackModel> {
    let mut parsed = CollectiveSpec::default();
    let mut coeffs = [None::<f64>; 4];
    if let Some(raw) = params {
        for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                None if part == "zero-error" => parsed.zero_error = true,
                None => {
                    return Err(QkdError::AttackSpec(format!("unknown flag {part:?}")));
                }
                Some((k, v)) => {
                    let k = k.trim();
                    let v = v.trim();
                    match k {
                        "seed" => {
                            parsed.seed = v.parse().map_err(|e| {
                                QkdError::AttackSpec(format!("bad seed {v:?}: {e}"))
                            })?;
                        }
                        "a" | "b" | "c" | "d" => {
                            let idx = (k.as_bytes()[0] - b'a') as usize;
                            coeffs[idx] = Some(v.parse().map_err(|e| {
                                QkdError::AttackSpec(format!("bad coefficient {k}={v:?}: {e}"))
                            })?);
                        }
                        other => {
                            return Err(QkdError::AttackSpec(format!(
                                "unknown parameter {other:?}"
                            )));
                        }
                    }
                }
            }
        }
    }
    if coeffs.iter().any(Option::is_some) {
        parsed.coeffs = Some([
            coeffs[0].ok_or_else(|| QkdError::AttackSpec("missing coefficient a".into()))?,
            coeffs[1].ok_or_else(|| QkdError::AttackSpec("missing coefficient b".into()))?,
            coeffs[2].ok_or_else(|| QkdError::AttackSpec("missing coefficient c".into()))?,
            coeffs[3].ok_or_else(|| QkdError::AttackSpec("missing coefficient d".into()))?,
        ]);
    }

    if external {
        if parsed.coeffs.is_some() {
            return Err(QkdError::AttackSpec(
                "collective-external takes only zero-error and seed".into(),
            ));
        }
        return if parsed.zero_error {
            sample_zero_error_external(parsed.seed)
        } else {
            sample_random_external(parsed.seed)
        };
    }

    match (parsed.zero_error, parsed.coeffs) {
        (true, Some(_)) => Err(QkdError::AttackSpec(
            "zero-error and explicit coefficients are mutually exclusive".into(),
        )),
        (true, None) => sample_zero_error_internal(parsed.seed),
        (false, Some([a, b, c, d])) => {
            let mut rng = rng::tagged_stream(parsed.seed, 5 << 32);
            let frame = seeded_frame(&mut rng);
            let params = CollectiveAttackParams {
                a: Complex64::new(a, 0.0),
                b: Complex64::new(b, 0.0),
                c: Complex64::new(c, 0.0),
                d: Complex64::new(d, 0.0),
                e00: frame[0].clone(),
                e01: frame[1].clone(),
                e10: frame[2].clone(),
                e11: frame[3].clone(),
            };
            constrained_attack(&params)
        }
        (false, None) => sample_random_internal(parsed.seed),
    }
}

/// Random orthonormal four-frame for explicit-coefficient specs.
fn seeded_frame(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<Complex64>> {
    use rand::Rng;
    // Gram-Schmidt on Gaussian vectors, as in the sampler module.
    let mut frame: Vec<Vec<Complex64>> = Vec::new();
    while frame.len() < 4 {
        let mut v: Vec<Complex64> = (0..4)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-15);
                let u2: f64 = rng.random();
                let r = (-2.0 * u1.ln()).sqrt();
                Complex64::new(
                    r * (2.0 * std::f64::consts::PI * u2).cos(),
                    r * (2.0 * std::f64::consts::PI * u2).sin(),
                )
            })
            .collect();
        for u in &frame {
            let ip: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
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
