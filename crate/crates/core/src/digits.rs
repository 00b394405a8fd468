//! Integers with prescribed binary digits.
//!
//! A pattern fixes every bit of an `S`-bit integer except those at the free
//! positions `s_1 < ... < s_T`; its members are `a + sum d_n 2^{s_n}` with
//! `d_n in {0, 1}`. Bit positions are 0-indexed (position `j` here is the
//! `(j + 1)`-th binary digit counted from the least significant end).

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, is_prime, mult_order, pow_mod};
use crate::error::{Error, Result};
use crate::expsum::{e_frac, pairwise_sum, sigma_max, SparseSequence, Strategy, WeightSequence};
use crate::primes::sieve_primes;
use crate::report::{fmt_sig12, CsvTable};

/// Largest `T` for which members are enumerated explicitly.
pub const ENUMERATION_CAP: usize = 24;
/// Largest `T` for which the product formula is rounded to an integer.
pub const FORMULA_CAP: usize = 52;
/// Largest accepted distance of the formula value from an integer.
pub const ROUNDING_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitPattern {
    bits: u32,
    a: BigUint,
    free: SparseSequence,
}

/// On-disk form: `{"S": 16, "a_hex": "8000", "free": [0, 3, 5]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFile {
    #[serde(rename = "S")]
    pub bits: u32,
    pub a_hex: String,
    pub free: Vec<u64>,
}

impl DigitPattern {
    pub fn new(bits: u32, a: BigUint, free: Vec<u64>) -> Result<Self> {
        if let Some(&j) = free.iter().find(|&&j| j >= bits as u64) {
            return Err(Error::invalid(format!("free position {j} is outside [0, {bits})")));
        }
        let free = SparseSequence::new(free, bits.saturating_sub(1) as u64)?;
        if a.bits() > bits as u64 {
            return Err(Error::invalid(format!("a has more than S = {bits} bits")));
        }
        if let Some(&j) = free.values().iter().find(|&&j| a.bit(j)) {
            return Err(Error::invalid(format!("a has a one at free position {j}")));
        }
        Ok(Self { bits, a, free })
    }

    /// Clears the bits of `a` at the free positions before validating; the
    /// member set is unchanged by this.
    pub fn normalized(bits: u32, mut a: BigUint, free: Vec<u64>) -> Result<Self> {
        for &j in &free {
            if j < bits as u64 {
                a.set_bit(j, false);
            }
        }
        Self::new(bits, a, free)
    }

    pub fn from_file(f: &PatternFile) -> Result<Self> {
        let hex = f.a_hex.trim_start_matches("0x");
        let a = BigUint::parse_bytes(hex.as_bytes(), 16)
            .ok_or_else(|| Error::invalid(format!("a_hex is not hexadecimal: {:?}", f.a_hex)))?;
        Self::new(f.bits, a, f.free.clone())
    }

    pub fn to_file(&self) -> PatternFile {
        PatternFile {
            bits: self.bits,
            a_hex: self.a.to_str_radix(16),
            free: self.free.values().to_vec(),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn a(&self) -> &BigUint {
        &self.a
    }

    pub fn free(&self) -> &SparseSequence {
        &self.free
    }

    pub fn t(&self) -> usize {
        self.free.len()
    }

    /// The pattern with `pos` freed as well; its member set contains the
    /// current one.
    pub fn with_extra_position(&self, pos: u64) -> Result<Self> {
        let mut free = self.free.values().to_vec();
        if free.contains(&pos) {
            return Err(Error::invalid(format!("position {pos} is already free")));
        }
        free.push(pos);
        free.sort_unstable();
        Self::normalized(self.bits, self.a.clone(), free)
    }

    fn a_mod(&self, p: u64) -> u64 {
        (&self.a % p).to_u64().expect("residue fits u64")
    }
}

/// Members in Gray-code order starting from `a`, truncated at `limit`.
pub fn enumerate_members(pat: &DigitPattern, limit: usize) -> Result<Vec<BigUint>> {
    let t = pat.t();
    if t > ENUMERATION_CAP {
        return Err(Error::ResourceCap {
            what: "free positions for enumeration",
            value: t as u64,
            cap: ENUMERATION_CAP as u64,
        });
    }
    let total = 1usize << t;
    let n = total.min(limit);
    let mut out = Vec::with_capacity(n);
    let mut cur = pat.a.clone();
    let mut on = vec![false; t];
    for i in 0..n {
        if i > 0 {
            let k = i.trailing_zeros() as usize;
            let pos = pat.free.values()[k];
            on[k] = !on[k];
            cur.set_bit(pos, on[k]);
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Number of members in each residue class modulo `p`, by dynamic
/// programming over the free positions. Requires `T <= 63`.
pub fn residue_counts(pat: &DigitPattern, p: u64) -> Result<Vec<u64>> {
    if pat.t() > 63 {
        return Err(Error::ResourceCap {
            what: "free positions for residue counts",
            value: pat.t() as u64,
            cap: 63,
        });
    }
    Ok(class_counts(pat, p, u64::MAX))
}

/// Residue-class counts saturating at `cap`.
fn class_counts(pat: &DigitPattern, p: u64, cap: u64) -> Vec<u64> {
    let m = p as usize;
    let mut counts = vec![0u64; m];
    counts[pat.a_mod(p) as usize] = 1;
    let mut next = vec![0u64; m];
    for &s in pat.free.values() {
        let r = pow_mod(2, s, p) as usize;
        for x in 0..m {
            let y = (x + m - r) % m;
            next[x] = counts[x].saturating_add(counts[y]).min(cap);
        }
        std::mem::swap(&mut counts, &mut next);
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisibilityCount {
    pub p: u64,
    pub n_p: u64,
    /// `2^T / p`.
    pub main_term: f64,
    /// `N_p - 2^T / p`.
    pub deviation: f64,
    /// `max_{1 <= b < p} |prod_n (1 + e_p(b 2^{s_n}))|`.
    pub q_p: f64,
    /// Distance of the formula value from the reported integer.
    pub residual: f64,
}

fn require_odd_prime(p: u64) -> Result<()> {
    if p % 2 == 0 || !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// `N_p = 2^T/p + (1/p) sum_{b=1}^{p-1} e_p(a b) prod_n (1 + e_p(b 2^{s_n}))`,
/// rounded to the nearest integer.
pub fn count_divisible(pat: &DigitPattern, p: u64) -> Result<DivisibilityCount> {
    require_odd_prime(p)?;
    let t = pat.t();
    if t > FORMULA_CAP {
        return Err(Error::Precision {
            what: format!("count_divisible with T = {t} > {FORMULA_CAP}"),
            residual: f64::NAN,
        });
    }
    let ord = mult_order(2, p, &factorize(p - 1))?.t_p;
    let r: Vec<u64> = pat
        .free
        .values()
        .iter()
        .map(|&s| pow_mod(2, s % ord, p))
        .collect();
    let a = pat.a_mod(p);
    let mut q_p = 0.0f64;
    let terms: Vec<Complex64> = (1..p)
        .map(|b| {
            let prod = r.iter().fold(Complex64::new(1.0, 0.0), |acc, &rn| {
                acc * (Complex64::new(1.0, 0.0) + e_frac(b * rn % p, p))
            });
            q_p = q_p.max(prod.norm());
            e_frac(a * b % p, p) * prod
        })
        .collect();
    let sum = pairwise_sum(&terms);
    let pow = (t as f64).exp2();
    let pf = p as f64;
    let value = (pow + sum.re) / pf;
    let rounded = value.round();
    let residual = (value - rounded).abs().max(sum.im.abs() / pf);
    if residual > ROUNDING_TOLERANCE {
        return Err(Error::Precision {
            what: format!("count_divisible at p = {p}"),
            residual,
        });
    }
    let main_term = pow / pf;
    Ok(DivisibilityCount {
        p,
        n_p: rounded as u64,
        main_term,
        deviation: rounded - main_term,
        q_p,
        residual,
    })
}

/// `max_{gcd(b, p) = 1} |sum_n e_p(b 2^{s_n})|`.
pub fn m_p(pat: &DigitPattern, p: u64, t_p: u64) -> Result<f64> {
    require_odd_prime(p)?;
    let ones = WeightSequence::ones(pat.t());
    Ok(sigma_max(p, t_p, 2, &pat.free, &ones, Strategy::default())?.m_p)
}

/// `exp(C M_p log(T/M_p + 1))`, equal to `1` at `M_p = 0`.
pub fn q_p_bound(m_p: f64, t: usize, c: f64) -> Result<f64> {
    let tf = t as f64;
    if !(m_p >= 0.0 && m_p <= tf * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("M_p = {m_p} is outside [0, T = {t}]")));
    }
    if m_p == 0.0 {
        return Ok(1.0);
    }
    Ok((c * m_p * (tf / m_p + 1.0).ln()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitRow {
    pub count: DivisibilityCount,
    pub m_p: f64,
    pub q_p_bound: f64,
}

/// One row per odd prime `p <= p_max`.
pub fn digits_table(pat: &DigitPattern, p_max: u64, c: f64) -> Result<Vec<DigitRow>> {
    sieve_primes(p_max)?
        .into_par_iter()
        .filter(|&p| p > 2)
        .map(|p| {
            let count = count_divisible(pat, p)?;
            let t_p = mult_order(2, p, &factorize(p - 1))?.t_p;
            let m = m_p(pat, p, t_p)?;
            Ok(DigitRow {
                count,
                m_p: m,
                q_p_bound: q_p_bound(m.min(pat.t() as f64), pat.t(), c)?,
            })
        })
        .collect()
}

pub fn digits_csv(pat: &DigitPattern, c: f64, rows: &[DigitRow]) -> String {
    let mut t = CsvTable::new(
        "digits",
        &["p", "N_p", "main_term", "deviation", "Q_p_bound", "Q_p", "M_p"],
    );
    t.note(format!(
        "S={} a_hex={} T={} C={}",
        pat.bits,
        pat.a.to_str_radix(16),
        pat.t(),
        fmt_sig12(c)
    ));
    for r in rows {
        t.row(vec![
            r.count.p.to_string(),
            r.count.n_p.to_string(),
            fmt_sig12(r.count.main_term),
            fmt_sig12(r.count.deviation),
            fmt_sig12(r.q_p_bound),
            fmt_sig12(r.count.q_p),
            fmt_sig12(r.m_p),
        ]);
    }
    t.render()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OmegaMode {
    /// Factor every nonzero member.
    Exact,
    /// Primes `p <= prime_limit` dividing some nonzero member.
    Survey { prime_limit: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaResult {
    pub mode: OmegaMode,
    pub t: usize,
    /// Number of distinct primes found; a lower bound for the number of
    /// prime divisors of the product of the nonzero members.
    pub count: usize,
    pub primes: Vec<u64>,
    /// Members factored (exact mode) or primes tested (survey mode).
    pub considered: usize,
}

/// Distinct prime divisors of the product of the nonzero members.
pub fn omega_product(pat: &DigitPattern, mode: OmegaMode) -> Result<OmegaResult> {
    let (primes, considered) = match mode {
        OmegaMode::Exact => {
            let members = enumerate_members(pat, usize::MAX)?;
            let values = members
                .iter()
                .filter(|z| !z.is_zero())
                .map(|z| {
                    z.to_u64().filter(|&v| v < 1 << 63).ok_or_else(|| Error::ResourceCap {
                        what: "member bit length for factoring",
                        value: z.bits(),
                        cap: 63,
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            let set = values
                .par_iter()
                .fold(BTreeSet::new, |mut acc, &v| {
                    acc.extend(factorize(v).primes());
                    acc
                })
                .reduce(BTreeSet::new, |mut x, y| {
                    x.extend(y);
                    x
                });
            (set.into_iter().collect::<Vec<_>>(), values.len())
        }
        OmegaMode::Survey { prime_limit } => {
            let candidates = sieve_primes(prime_limit)?;
            let zero_member = u64::from(pat.a.is_zero());
            let hits = candidates
                .par_iter()
                .copied()
                .filter(|&p| class_counts(pat, p, 2)[0] > zero_member)
                .collect::<Vec<_>>();
            (hits, candidates.len())
        }
    };
    Ok(OmegaResult {
        mode,
        t: pat.t(),
        count: primes.len(),
        primes,
        considered,
    })
}
