//! Reproducible sequence and weight families for experiments.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{SparseSequence, WeightSequence};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require_seed(seed: Option<u64>, kind: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::invalid(format!("seed is required for the {kind} generator")))
}

/// Exponent sequences `s_1 < ... < s_T <= S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceSpec {
    /// `start, start + step, start + 2 step, ...`
    Arithmetic { start: u64, step: u64 },
    /// `s_1 = 0` and gaps `max(1, round(first_gap * ratio^(n-1)))`.
    GeometricGap { first_gap: f64, ratio: f64 },
    /// Uniformly random `T`-subset of `[0, S]`.
    Random { seed: Option<u64> },
    Explicit { values: Vec<u64> },
}

impl SequenceSpec {
    pub fn generate(&self, t: usize, s: u64) -> Result<SparseSequence> {
        let values = match self {
            SequenceSpec::Arithmetic { start, step } => {
                if *step == 0 {
                    return Err(Error::invalid("arithmetic step must be >= 1"));
                }
                (0..t as u64)
                    .map(|n| {
                        n.checked_mul(*step)
                            .and_then(|v| v.checked_add(*start))
                            .ok_or_else(|| Error::invalid("arithmetic sequence overflows u64"))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            SequenceSpec::GeometricGap { first_gap, ratio } => {
                if !(*first_gap > 0.0 && *ratio > 0.0) {
                    return Err(Error::invalid("geometric gaps need first_gap > 0 and ratio > 0"));
                }
                let mut v = Vec::with_capacity(t);
                let mut cur = 0u64;
                let mut gap = *first_gap;
                for n in 0..t {
                    if n > 0 {
                        let step = gap.round().max(1.0);
                        if step >= u64::MAX as f64 {
                            return Err(Error::invalid("geometric gap overflows u64"));
                        }
                        cur = cur
                            .checked_add(step as u64)
                            .ok_or_else(|| Error::invalid("geometric sequence overflows u64"))?;
                        gap *= ratio;
                    }
                    v.push(cur);
                }
                v
            }
            SequenceSpec::Random { seed } => {
                let seed = require_seed(*seed, "random sequence")?;
                if t as u64 > s.saturating_add(1) {
                    return Err(Error::invalid(format!(
                        "cannot draw {t} distinct exponents from [0, {s}]"
                    )));
                }
                let span = usize::try_from(s + 1)
                    .map_err(|_| Error::invalid("S too large for random sampling"))?;
                let mut v: Vec<u64> = rand::seq::index::sample(&mut rng(seed), span, t)
                    .into_iter()
                    .map(|x| x as u64)
                    .collect();
                v.sort_unstable();
                v
            }
            SequenceSpec::Explicit { values } => {
                if values.len() != t {
                    return Err(Error::invalid(format!(
                        "explicit sequence has {} values, T = {t}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        SparseSequence::new(values, s)
    }
}

/// Weight families with `|gamma_n| <= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Ones,
    /// `exp(2 pi i U_n)` with `U_n` uniform on `[0, 1)`.
    UnitComplex { seed: Option<u64> },
    /// Independent uniform signs.
    Signs { seed: Option<u64> },
}

impl WeightSpec {
    pub fn generate(&self, t: usize) -> Result<WeightSequence> {
        match self {
            WeightSpec::Ones => Ok(WeightSequence::ones(t)),
            WeightSpec::UnitComplex { seed } => {
                let mut r = rng(require_seed(*seed, "unit_complex weight")?);
                WeightSequence::new(
                    (0..t)
                        .map(|_| Complex64::from_polar(1.0, TAU * r.gen::<f64>()))
                        .collect(),
                )
            }
            WeightSpec::Signs { seed } => {
                let mut r = rng(require_seed(*seed, "signs weight")?);
                WeightSequence::new(
                    (0..t)
                        .map(|_| Complex64::new(if r.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
                        .collect(),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families() {
        let a = SequenceSpec::Arithmetic { start: 3, step: 2 }.generate(4, 10).unwrap();
        assert_eq!(a.values(), &[3, 5, 7, 9]);
        assert!(SequenceSpec::Arithmetic { start: 3, step: 2 }.generate(5, 10).is_err());

        let g = SequenceSpec::GeometricGap { first_gap: 1.0, ratio: 2.0 }
            .generate(5, 100)
            .unwrap();
        assert_eq!(g.values(), &[0, 1, 3, 7, 15]);

        let spec = SequenceSpec::Random { seed: Some(7) };
        let r = spec.generate(32, 1000).unwrap();
        assert_eq!(r, spec.generate(32, 1000).unwrap());
        assert_eq!(r.len(), 32);
        assert!(r.values().iter().all(|&v| v <= 1000));
        assert_ne!(r, SequenceSpec::Random { seed: Some(8) }.generate(32, 1000).unwrap());
        assert!(SequenceSpec::Random { seed: Some(1) }.generate(12, 10).is_err());

        let err = SequenceSpec::Random { seed: None }.generate(3, 10).unwrap_err();
        assert!(err.to_string().contains("seed"));
        assert!(WeightSpec::Signs { seed: None }.generate(3).is_err());
    }

    #[test]
    fn weights_are_bounded_and_reproducible() {
        let w = WeightSpec::UnitComplex { seed: Some(1) }.generate(100).unwrap();
        assert!(w.values().iter().all(|g| (g.norm() - 1.0).abs() < 1e-12));
        assert_eq!(w, WeightSpec::UnitComplex { seed: Some(1) }.generate(100).unwrap());
        let s = WeightSpec::Signs { seed: Some(2) }.generate(100).unwrap();
        assert!(s.values().iter().all(|g| g.im == 0.0 && g.re.abs() == 1.0));
        assert_eq!(WeightSpec::Ones.generate(3).unwrap().l1_norm(), 3.0);
    }

    #[test]
    fn spec_json_shape() {
        let s: SequenceSpec = serde_json::from_str(r#"{"kind":"random","seed":7}"#).unwrap();
        assert_eq!(s, SequenceSpec::Random { seed: Some(7) });
        let w: WeightSpec = serde_json::from_str(r#"{"kind":"ones"}"#).unwrap();
        assert_eq!(w, WeightSpec::Ones);
    }
}
