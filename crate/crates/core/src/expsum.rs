//! Exponential sums `sigma_p(a) = sum_n gamma_n e_p(a lambda^{s_n})`, their
//! maxima over `a`, Gauss sums over multiplicative subgroups and residue
//! profiles of sparse sequences.
//!
//! Every sum is first compressed to a residue profile: weights grouped by
//! `s_n mod r`, or by `lambda^{s_n} mod p` for the sums modulo `p`. All
//! evaluation then happens on the profile.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, is_prime, pow_mod, primitive_root, verify_order};
use crate::chirp::ChirpDft;
use crate::error::{Error, Result};
use crate::primes::{sieve_primes, OrderDatabase};
use crate::report::{fmt_sig12, CsvTable};

/// Slack allowed on `|gamma_n| <= 1` for weights built from `cos`/`sin`.
const UNIT_SLACK: f64 = 1e-12;

/// Relative tolerance under which two values of `|sigma_p(a)|` count as a
/// tie; the smallest `a` wins a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Default `p` at which [`Strategy::Auto`] switches to the chirp transform.
pub const DEFAULT_CROSSOVER: u64 = 4096;

#[inline]
pub(crate) fn e_frac(k: u64, r: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (k as f64) / (r as f64))
}

/// Sum in a fixed pairwise order; independent of how the terms were produced.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

pub fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum_f64(lo) + pairwise_sum_f64(hi)
}

/// Strictly increasing exponents `0 <= s_1 < ... < s_T <= S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseSequence {
    s: Vec<u64>,
    bound: u64,
}

impl SparseSequence {
    pub fn new(s: Vec<u64>, bound: u64) -> Result<Self> {
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sequence must be strictly increasing"));
        }
        if let Some(&last) = s.last() {
            if last > bound {
                return Err(Error::invalid(format!(
                    "sequence element {last} exceeds bound S = {bound}"
                )));
            }
        }
        Ok(Self { s, bound })
    }

    /// Uses the last element as the bound `S`.
    pub fn tight(s: Vec<u64>) -> Result<Self> {
        let bound = s.last().copied().unwrap_or(0);
        Self::new(s, bound)
    }

    pub fn values(&self) -> &[u64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

/// Complex weights with `|gamma_n| <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    gamma: Vec<Complex64>,
}

impl WeightSequence {
    pub fn new(gamma: Vec<Complex64>) -> Result<Self> {
        if let Some((i, g)) = gamma
            .iter()
            .enumerate()
            .find(|(_, g)| !(g.norm() <= 1.0 + UNIT_SLACK))
        {
            return Err(Error::invalid(format!(
                "weight {i} has modulus {} > 1",
                g.norm()
            )));
        }
        Ok(Self { gamma })
    }

    pub fn ones(len: usize) -> Self {
        Self {
            gamma: vec![Complex64::new(1.0, 0.0); len],
        }
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.gamma.iter().all(|g| g.im == 0.0)
    }

    /// `sum |gamma_n|`.
    pub fn l1_norm(&self) -> f64 {
        let v: Vec<f64> = self.gamma.iter().map(|g| g.norm()).collect();
        pairwise_sum_f64(&v)
    }

    /// `sum |gamma_n|^2`.
    pub fn norm_sqr(&self) -> f64 {
        let v: Vec<f64> = self.gamma.iter().map(|g| g.norm_sqr()).collect();
        pairwise_sum_f64(&v)
    }
}

fn check_lengths(seq: &SparseSequence, gamma: &WeightSequence) -> Result<()> {
    if seq.len() != gamma.len() {
        return Err(Error::invalid(format!(
            "sequence has {} terms but {} weights were given",
            seq.len(),
            gamma.len()
        )));
    }
    Ok(())
}

/// Weights aggregated over residue classes modulo `r`. Only classes hit by
/// at least one term are stored, sorted by residue.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueProfile {
    modulus: u64,
    entries: Vec<(u64, Complex64)>,
}

impl ResidueProfile {
    /// Groups `(residue, weight)` pairs; weights within a class are added in
    /// input order.
    fn collect(modulus: u64, mut pairs: Vec<(u64, usize, Complex64)>) -> Self {
        pairs.sort_unstable_by_key(|&(x, i, _)| (x, i));
        let mut entries: Vec<(u64, Complex64)> = Vec::new();
        for (x, _, w) in pairs {
            match entries.last_mut() {
                Some((y, acc)) if *y == x => *acc += w,
                _ => entries.push((x, w)),
            }
        }
        Self { modulus, entries }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn entries(&self) -> &[(u64, Complex64)] {
        &self.entries
    }

    pub fn get(&self, x: u64) -> Complex64 {
        self.entries
            .binary_search_by_key(&x, |&(y, _)| y)
            .map(|i| self.entries[i].1)
            .unwrap_or_default()
    }

    pub fn total(&self) -> Complex64 {
        let v: Vec<Complex64> = self.entries.iter().map(|&(_, w)| w).collect();
        pairwise_sum(&v)
    }

    pub fn l1_norm(&self) -> f64 {
        let v: Vec<f64> = self.entries.iter().map(|(_, w)| w.norm()).collect();
        pairwise_sum_f64(&v)
    }

    pub fn norm_sqr(&self) -> f64 {
        let v: Vec<f64> = self.entries.iter().map(|(_, w)| w.norm_sqr()).collect();
        pairwise_sum_f64(&v)
    }

    /// `sum_x w(x) e_r(a x)` for a single frequency.
    pub fn eval(&self, a: u64) -> Complex64 {
        let r = self.modulus;
        let a = a % r;
        let terms: Vec<Complex64> = self
            .entries
            .iter()
            .map(|&(x, w)| w * e_frac(((a as u128 * x as u128) % r as u128) as u64, r))
            .collect();
        pairwise_sum(&terms)
    }
}

/// `b_r(x) = sum_{s_n = x mod r} gamma_n`.
pub fn residue_profile(
    seq: &SparseSequence,
    gamma: &WeightSequence,
    r: u64,
) -> Result<ResidueProfile> {
    check_lengths(seq, gamma)?;
    if r == 0 {
        return Err(Error::invalid("modulus r must be >= 1"));
    }
    let pairs = seq
        .values()
        .iter()
        .zip(gamma.values())
        .enumerate()
        .map(|(i, (&s, &g))| (s % r, i, g))
        .collect();
    Ok(ResidueProfile::collect(r, pairs))
}

/// `V(r) = #{(n1, n2) : s_{n1} = s_{n2} mod r} = sum_x N_x^2`.
pub fn pair_count_v(seq: &SparseSequence, r: u64) -> u64 {
    assert!(r >= 1, "modulus r must be >= 1");
    let mut residues: Vec<u64> = seq.values().iter().map(|s| s % r).collect();
    residues.sort_unstable();
    residues
        .chunk_by(|a, b| a == b)
        .map(|c| (c.len() as u64).pow(2))
        .sum()
}

fn check_base(p: u64, t_p: u64, lambda: u64) -> Result<()> {
    if p < 2 {
        return Err(Error::invalid(format!("modulus {p} is not prime")));
    }
    if lambda % p == 0 {
        return Err(Error::OrderUndefined { lambda, p });
    }
    if t_p == 0 || pow_mod(lambda, t_p, p) != 1 {
        return Err(Error::InvalidOrder {
            base: lambda,
            p,
            claimed: t_p,
        });
    }
    Ok(())
}

/// `c(u) = sum_{lambda^{s_n} = u mod p} gamma_n`; exponents are reduced
/// modulo `t_p` before exponentiation.
pub fn power_profile(
    p: u64,
    t_p: u64,
    lambda: u64,
    seq: &SparseSequence,
    gamma: &WeightSequence,
) -> Result<ResidueProfile> {
    check_lengths(seq, gamma)?;
    check_base(p, t_p, lambda)?;
    let pairs = seq
        .values()
        .iter()
        .zip(gamma.values())
        .enumerate()
        .map(|(i, (&s, &g))| (pow_mod(lambda, s % t_p, p), i, g))
        .collect();
    Ok(ResidueProfile::collect(p, pairs))
}

/// `sigma_p(a)`. For `a = 0 mod p` the result is `sum gamma_n` without any
/// exponentials.
pub fn sigma_eval(
    p: u64,
    t_p: u64,
    lambda: u64,
    seq: &SparseSequence,
    gamma: &WeightSequence,
    a: u64,
) -> Result<Complex64> {
    check_lengths(seq, gamma)?;
    check_base(p, t_p, lambda)?;
    if a % p == 0 {
        return Ok(pairwise_sum(gamma.values()));
    }
    let terms: Vec<Complex64> = seq
        .values()
        .iter()
        .zip(gamma.values())
        .map(|(&s, &g)| {
            let u = pow_mod(lambda, s % t_p, p);
            g * e_frac(((a % p) as u128 * u as u128 % p as u128) as u64, p)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// How the `p` frequencies of a profile are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Direct below `crossover`, transform at or above it.
    Auto { crossover: u64 },
    /// `O(p * #profile)` direct evaluation.
    Direct,
    /// Prime-length chirp transform, `O(p log p)`.
    Transform,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Auto {
            crossover: DEFAULT_CROSSOVER,
        }
    }
}

impl Strategy {
    fn use_transform(self, p: u64) -> bool {
        match self {
            Strategy::Auto { crossover } => p >= crossover,
            Strategy::Direct => false,
            Strategy::Transform => true,
        }
    }
}

/// `sum_x w(x) e_p(a x)` for every `a` in `0..p`.
pub fn spectrum(profile: &ResidueProfile, strategy: Strategy) -> Vec<Complex64> {
    let p = profile.modulus();
    if strategy.use_transform(p) {
        let mut dense = vec![Complex64::new(0.0, 0.0); p as usize];
        for &(x, w) in profile.entries() {
            dense[x as usize] = w;
        }
        ChirpDft::new(p as usize).process(&dense)
    } else {
        let twiddle: Vec<Complex64> = (0..p).map(|k| e_frac(k, p)).collect();
        let n = profile.entries().len();
        let mut terms = vec![Complex64::new(0.0, 0.0); n];
        // idx[i] = a * x_i mod p, advanced by x_i per step in a
        let mut idx = vec![0u64; n];
        (0..p)
            .map(|a| {
                if a > 0 {
                    for (k, &(x, _)) in idx.iter_mut().zip(profile.entries()) {
                        *k += x;
                        if *k >= p {
                            *k -= p;
                        }
                    }
                }
                for ((t, &k), &(_, w)) in terms.iter_mut().zip(&idx).zip(profile.entries()) {
                    *t = w * twiddle[k as usize];
                }
                pairwise_sum(&terms)
            })
            .collect()
    }
}

/// Maximum of `|sigma_p(a)|` over `1 <= a <= p - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRecord {
    pub p: u64,
    pub a_p: u64,
    pub m_p: f64,
}

/// Picks the smallest `a >= 1` within the tie tolerance of the maximum, then
/// re-evaluates `|sigma_p(a_p)|` directly so the reported value does not
/// depend on the strategy.
fn select_max(profile: &ResidueProfile, spec: &[Complex64]) -> SumRecord {
    let p = profile.modulus();
    let mags: Vec<f64> = spec.iter().skip(1).map(|z| z.norm()).collect();
    let max = mags.iter().copied().fold(0.0f64, f64::max);
    let tol = TIE_TOLERANCE * profile.l1_norm();
    let idx = mags.iter().position(|&m| m >= max - tol).unwrap_or(0);
    let a_p = idx as u64 + 1;
    SumRecord {
        p,
        a_p,
        m_p: profile.eval(a_p).norm(),
    }
}

/// Maximum over `a` of a profile modulo a prime, i.e. `max_{(a,p)=1} |...|`.
pub fn profile_max(profile: &ResidueProfile, strategy: Strategy) -> SumRecord {
    select_max(profile, &spectrum(profile, strategy))
}

/// `a_p` and `|sigma_p(a_p)| = max_{(a,p)=1} |sigma_p(a)|`.
pub fn sigma_max(
    p: u64,
    t_p: u64,
    lambda: u64,
    seq: &SparseSequence,
    gamma: &WeightSequence,
    strategy: Strategy,
) -> Result<SumRecord> {
    let profile = power_profile(p, t_p, lambda, seq, gamma)?;
    Ok(profile_max(&profile, strategy))
}

fn subgroup_profile(p: u64, g: u64, t: u64) -> Result<ResidueProfile> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if !verify_order(g, p, t) {
        return Err(Error::InvalidOrder {
            base: g,
            p,
            claimed: t,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut entries = Vec::with_capacity(t as usize);
    let mut u = 1u64;
    for _ in 0..t {
        entries.push((u, one));
        u = ((u as u128 * g as u128) % p as u128) as u64;
    }
    entries.sort_unstable_by_key(|&(u, _)| u);
    Ok(ResidueProfile {
        modulus: p,
        entries,
    })
}

/// Maximizer and value of `|sum_{z=1}^{t} e_p(a g^z)|` over `a` in `[1, p-1]`.
pub fn subgroup_sum_record(p: u64, g: u64, t: u64, strategy: Strategy) -> Result<SumRecord> {
    Ok(profile_max(&subgroup_profile(p, g, t)?, strategy))
}

/// `max_{(a,p)=1} |sum_{z=1}^{t} e_p(a g^z)|`, the Gauss sum over the
/// subgroup of order `t` generated by `g`.
pub fn subgroup_sum_max(p: u64, g: u64, t: u64) -> Result<f64> {
    Ok(subgroup_sum_record(p, g, t, Strategy::default())?.m_p)
}

/// An exponent pair `(alpha, beta)` for subgroup sums `<= t^alpha p^beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub alpha: f64,
    pub beta: f64,
    pub label: String,
}

impl AdmissiblePair {
    pub fn korobov() -> Self {
        Self::named(0.0, 0.5, "korobov")
    }

    /// Heath-Brown and Konyagin, first pair.
    pub fn hbk1() -> Self {
        Self::named(5.0 / 8.0, 1.0 / 8.0, "hbk1")
    }

    /// Heath-Brown and Konyagin, second pair.
    pub fn hbk2() -> Self {
        Self::named(3.0 / 8.0, 1.0 / 4.0, "hbk2")
    }

    pub fn shkredov() -> Self {
        Self::named(0.5, 1.0 / 6.0, "shkredov")
    }

    /// Bourgain-Glibichuk-Konyagin family `(1 - theta, zeta theta)`; the
    /// dependence of `theta` on `zeta` is not explicit, so both are inputs.
    pub fn bgk(theta: f64, zeta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) || !(zeta > 0.0) || zeta * theta > 1.0 {
            return Err(Error::invalid(format!(
                "BGK pair needs 0 < theta <= 1, zeta > 0, zeta*theta <= 1; got theta = {theta}, zeta = {zeta}"
            )));
        }
        Ok(Self::named(1.0 - theta, zeta * theta, "bgk"))
    }

    /// Looks up a catalog entry by label.
    pub fn by_label(label: &str) -> Option<Self> {
        match label {
            "korobov" => Some(Self::korobov()),
            "hbk1" => Some(Self::hbk1()),
            "hbk2" => Some(Self::hbk2()),
            "shkredov" => Some(Self::shkredov()),
            _ => None,
        }
    }

    fn named(alpha: f64, beta: f64, label: &str) -> Self {
        Self {
            alpha,
            beta,
            label: label.to_string(),
        }
    }

    pub fn bound(&self, t: u64, p: u64) -> f64 {
        (t as f64).powf(self.alpha) * (p as f64).powf(self.beta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub p: u64,
    pub t_p: u64,
    pub a_p: u64,
    pub m_p: f64,
    pub bound: f64,
    pub ratio: f64,
    pub flag: bool,
}

/// For each prime of the database, the subgroup sum generated by `lambda`
/// against `t_p^alpha p^beta`; rows with `ratio > c` are flagged.
pub fn admissible_scan(
    db: &OrderDatabase,
    pair: &AdmissiblePair,
    c: f64,
    strategy: Strategy,
) -> Result<Vec<ScanRow>> {
    let lambda = db.lambda();
    db.records()
        .par_iter()
        .map(|r| {
            let rec = subgroup_sum_record(r.p, lambda % r.p, r.t_p, strategy)?;
            let bound = pair.bound(r.t_p, r.p);
            let ratio = rec.m_p / bound;
            Ok(ScanRow {
                p: r.p,
                t_p: r.t_p,
                a_p: rec.a_p,
                m_p: rec.m_p,
                bound,
                ratio,
                flag: ratio > c,
            })
        })
        .collect()
}

pub fn scan_csv(lambda: u64, pair: &AdmissiblePair, c: f64, rows: &[ScanRow]) -> String {
    let mut t = CsvTable::new("admissible-scan", &["p", "t_p", "a_p", "m_p", "bound", "ratio", "flag"]);
    t.note(format!(
        "lambda={lambda} pair={} alpha={} beta={} C={}",
        pair.label,
        fmt_sig12(pair.alpha),
        fmt_sig12(pair.beta),
        fmt_sig12(c)
    ));
    for r in rows {
        t.row(vec![
            r.p.to_string(),
            r.t_p.to_string(),
            r.a_p.to_string(),
            fmt_sig12(r.m_p),
            fmt_sig12(r.bound),
            fmt_sig12(r.ratio),
            u8::from(r.flag).to_string(),
        ]);
    }
    t.render()
}

/// One prime `l = 1 mod t` examined by [`exceptional_count`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalRow {
    pub ell: u64,
    pub g: u64,
    pub max: f64,
    pub threshold: f64,
    pub exceptional: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalReport {
    pub t: u64,
    pub k: u32,
    pub u: f64,
    pub c: f64,
    pub ell_max: u64,
    pub total: usize,
    pub exceptional: usize,
    /// `U / log U`, the number of exceptions the bound allows.
    pub allowance: f64,
    pub rows: Vec<ExceptionalRow>,
}

impl ExceptionalReport {
    pub fn to_csv(&self) -> String {
        let mut tab = CsvTable::new("exceptional", &["ell", "g", "max", "threshold", "exceptional"]);
        tab.note(format!(
            "t={} k={} U={} C={} ell_max={}",
            self.t,
            self.k,
            fmt_sig12(self.u),
            fmt_sig12(self.c),
            self.ell_max
        ));
        tab.note(GENERATOR_CHOICE);
        for r in &self.rows {
            tab.row(vec![
                r.ell.to_string(),
                r.g.to_string(),
                fmt_sig12(r.max),
                fmt_sig12(r.threshold),
                u8::from(r.exceptional).to_string(),
            ]);
        }
        tab.render()
    }
}

/// Generator convention for [`exceptional_count`], echoed in reports.
pub const GENERATOR_CHOICE: &str = "g = h^((l-1)/t) mod l, h the smallest primitive root of l";

/// Counts primes `l = 1 mod t`, `l <= ell_max`, whose subgroup sum of order
/// `t` exceeds `c t l^(1/(2k^2)) (t^(-1/k) + U^(-1/k^2))`.
pub fn exceptional_count(t: u64, k: u32, u: f64, c: f64, ell_max: u64) -> Result<ExceptionalReport> {
    if t < 2 {
        return Err(Error::invalid(format!("t must be >= 2, got {t}")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if !(u > 1.0) {
        return Err(Error::invalid(format!("U must be > 1, got {u}")));
    }
    let ells: Vec<u64> = sieve_primes(ell_max)?
        .into_iter()
        .filter(|&l| l % t == 1)
        .collect();
    if ells.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "no primes l = 1 mod {t} below {ell_max}"
        )));
    }
    let kf = k as f64;
    let tf = t as f64;
    let rows = ells
        .par_iter()
        .map(|&ell| {
            let h = primitive_root(ell, &factorize(ell - 1))?;
            let g = pow_mod(h, (ell - 1) / t, ell);
            let max = subgroup_sum_record(ell, g, t, Strategy::default())?.m_p;
            let threshold = c
                * tf
                * (ell as f64).powf(1.0 / (2.0 * kf * kf))
                * (tf.powf(-1.0 / kf) + u.powf(-1.0 / (kf * kf)));
            Ok(ExceptionalRow {
                ell,
                g,
                max,
                threshold,
                exceptional: max > threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExceptionalReport {
        t,
        k,
        u,
        c,
        ell_max,
        total: rows.len(),
        exceptional: rows.iter().filter(|r| r.exceptional).count(),
        allowance: u / u.ln(),
        rows,
    })
}

/// Reduced residues `c mod k` with `gcd(c, k) = 1`, for `c` in `1..=k`.
pub(crate) fn reduced_residues(k: u64) -> impl Iterator<Item = u64> {
    (1..=k).filter(move |&c| gcd(c, k) == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::build_order_db;
    use proptest::prelude::*;
    use super::Strategy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Term-by-term evaluation from the definition; shares nothing with the
    /// profile machinery.
    fn oracle_sigma(p: u64, lambda: u64, s: &[u64], gamma: &[Complex64], a: u64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&sn, &g) in s.iter().zip(gamma) {
            let mut pw = 1u64;
            for _ in 0..sn {
                pw = pw * lambda % p;
            }
            let ang = 2.0 * std::f64::consts::PI * ((a * pw) % p) as f64 / p as f64;
            acc += g * Complex64::new(ang.cos(), ang.sin());
        }
        acc
    }

    fn oracle_max(p: u64, lambda: u64, s: &[u64], gamma: &[Complex64]) -> (u64, f64) {
        let mut best = (0, -1.0);
        for a in 1..p {
            let m = oracle_sigma(p, lambda, s, gamma, a).norm();
            if m > best.1 + 1e-9 {
                best = (a, m);
            }
        }
        best
    }

    fn seq(s: &[u64]) -> SparseSequence {
        SparseSequence::tight(s.to_vec()).unwrap()
    }

    fn random_input(rng: &mut ChaCha8Rng, t: usize, s_max: u64) -> (SparseSequence, WeightSequence) {
        let mut s: Vec<u64> = rand::seq::index::sample(rng, s_max as usize + 1, t)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        s.sort_unstable();
        let g = (0..t)
            .map(|_| Complex64::from_polar(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..TAU)))
            .collect();
        (SparseSequence::new(s, s_max).unwrap(), WeightSequence::new(g).unwrap())
    }

    #[test]
    fn sequence_validation() {
        assert!(SparseSequence::new(vec![1, 1], 5).is_err());
        assert!(SparseSequence::new(vec![3, 2], 5).is_err());
        assert!(SparseSequence::new(vec![1, 6], 5).is_err());
        assert!(WeightSequence::new(vec![Complex64::new(1.0, 0.1)]).is_err());
        assert!(WeightSequence::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn residue_profile_examples() {
        let s = seq(&[1, 2, 4, 8]);
        let prof = residue_profile(&s, &WeightSequence::ones(4), 3).unwrap();
        assert_eq!(prof.get(0), Complex64::new(0.0, 0.0));
        assert_eq!(prof.get(1), Complex64::new(2.0, 0.0));
        assert_eq!(prof.get(2), Complex64::new(2.0, 0.0));

        let g = WeightSequence::from_real(&[0.5, -0.25, 1.0, 0.75]).unwrap();
        let prof = residue_profile(&s, &g, 1).unwrap();
        assert_eq!(prof.entries(), &[(0, Complex64::new(2.0, 0.0))]);

        let prof = residue_profile(&seq(&[0, 1]), &WeightSequence::from_real(&[1.0, -1.0]).unwrap(), 2)
            .unwrap();
        assert_eq!(prof.get(0), Complex64::new(1.0, 0.0));
        assert_eq!(prof.get(1), Complex64::new(-1.0, 0.0));

        assert!(residue_profile(&s, &WeightSequence::ones(3), 3).is_err());
        assert!(residue_profile(&s, &WeightSequence::ones(4), 0).is_err());
    }

    #[test]
    fn pair_count_examples() {
        let s = seq(&[1, 2, 4, 8]);
        let brute = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| s.values()[i] % 3 == s.values()[j] % 3)
            .count() as u64;
        assert_eq!(brute, 8);
        assert_eq!(pair_count_v(&s, 3), 8);
        assert_eq!(pair_count_v(&s, 1), 16);
        assert_eq!(pair_count_v(&seq(&[0, 1, 2, 3]), 7), 4);
    }

    #[test]
    fn pair_count_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t = rng.gen_range(1..=200);
            let (s, _) = random_input(&mut rng, t, 5000);
            let r = rng.gen_range(1..300);
            let v = s.values();
            let mut brute = 0u64;
            for a in v {
                for b in v {
                    brute += u64::from(a % r == b % r);
                }
            }
            assert_eq!(pair_count_v(&s, r), brute);
        }
    }

    #[test]
    fn sigma_eval_examples() {
        let z = sigma_eval(3, 2, 2, &seq(&[1]), &WeightSequence::ones(1), 1).unwrap();
        assert!((z - e_frac(2, 3)).norm() < 1e-15);

        let g = WeightSequence::from_real(&[0.5, -1.0, 0.25]).unwrap();
        let z = sigma_eval(7, 3, 2, &seq(&[1, 2, 3]), &g, 0).unwrap();
        assert_eq!(z, Complex64::new(-0.25, 0.0));

        let ones = WeightSequence::ones(3);
        let z = sigma_eval(7, 3, 2, &seq(&[1, 2, 3]), &ones, 1).unwrap();
        let expect = oracle_sigma(7, 2, &[1, 2, 3], ones.values(), 1);
        assert!((z - expect).norm() < 1e-14);
        assert!((z.norm() - 2f64.sqrt()).abs() < 1e-12);

        assert!(matches!(
            sigma_eval(7, 3, 14, &seq(&[1]), &WeightSequence::ones(1), 1),
            Err(Error::OrderUndefined { .. })
        ));
        assert!(matches!(
            sigma_eval(7, 2, 2, &seq(&[1]), &WeightSequence::ones(1), 1),
            Err(Error::InvalidOrder { .. })
        ));
    }

    #[test]
    fn sigma_max_examples() {
        for strategy in [Strategy::Direct, Strategy::Transform] {
            let r = sigma_max(3, 2, 2, &seq(&[1]), &WeightSequence::ones(1), strategy).unwrap();
            assert_eq!(r.a_p, 1);
            assert!((r.m_p - 1.0).abs() < 1e-12);

            let ones = WeightSequence::ones(3);
            let r = sigma_max(7, 3, 2, &seq(&[1, 2, 3]), &ones, strategy).unwrap();
            let (a, m) = oracle_max(7, 2, &[1, 2, 3], ones.values());
            assert_eq!(r.a_p, a);
            assert!((r.m_p - m).abs() < 1e-12);

            let s: Vec<u64> = (1..=10).collect();
            let r = sigma_max(11, 10, 2, &seq(&s), &WeightSequence::ones(10), strategy).unwrap();
            assert_eq!(r.a_p, 1);
            assert!((r.m_p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_max_matches_oracle_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let p = *[5u64, 11, 13, 31, 101, 127, 211].get(rng.gen_range(0..7)).unwrap();
            let lambda = rng.gen_range(2..50u64);
            if lambda % p == 0 {
                continue;
            }
            let t_p = crate::arith::mult_order(lambda, p, &factorize(p - 1)).unwrap().t_p;
            let t = rng.gen_range(1..40);
            let (s, g) = random_input(&mut rng, t, 300);
            let (a, m) = oracle_max(p, lambda, s.values(), g.values());
            for strategy in [Strategy::Direct, Strategy::Transform] {
                let r = sigma_max(p, t_p, lambda, &s, &g, strategy).unwrap();
                assert!((r.m_p - m).abs() <= 1e-9 * (1.0 + m), "p={p}");
                let oracle_at = oracle_sigma(p, lambda, s.values(), g.values(), r.a_p).norm();
                assert!((oracle_at - m).abs() <= 1e-9 * (1.0 + m));
                let _ = a;
            }
        }
    }

    #[test]
    fn subgroup_sum_examples() {
        assert!((subgroup_sum_max(7, 2, 3).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        // t = p - 1: complete sum -1
        assert!((subgroup_sum_max(11, 2, 10).unwrap() - 1.0).abs() < 1e-12);
        assert!((subgroup_sum_max(13, 1, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            subgroup_sum_max(7, 2, 6),
            Err(Error::InvalidOrder { .. })
        ));
        // brute force over a = 1..6 for the subgroup {1, 2, 4} mod 7
        let brute = (1..7u64)
            .map(|a| [1u64, 2, 4].iter().map(|&h| e_frac(a * h % 7, 7)).sum::<Complex64>().norm())
            .fold(0.0, f64::max);
        assert!((brute - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn admissible_examples() {
        let db = build_order_db(2, 1000).unwrap();
        let rows = admissible_scan(&db, &AdmissiblePair::korobov(), 2.0, Strategy::default()).unwrap();
        assert_eq!(rows.len(), db.len());
        assert!(rows.iter().all(|r| !r.flag));
        for r in rows.iter().filter(|r| r.t_p == r.p - 1) {
            assert!((r.m_p - 1.0).abs() < 1e-9);
            assert!(r.ratio <= 1.0 + 1e-12);
        }
        let hbk = AdmissiblePair::hbk1();
        let ratio = subgroup_sum_max(7, 2, 3).unwrap() / hbk.bound(3, 7);
        let direct = 2f64.sqrt() / (3f64.powf(0.625) * 7f64.powf(0.125));
        assert!((ratio - direct).abs() < 1e-12);
        assert!((ratio - 0.558_054_942_174_574).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn catalog() {
        assert_eq!(AdmissiblePair::by_label("hbk2").unwrap().alpha, 3.0 / 8.0);
        assert_eq!(AdmissiblePair::by_label("shkredov").unwrap().beta, 1.0 / 6.0);
        let b = AdmissiblePair::bgk(0.1, 2.0).unwrap();
        assert!((b.alpha - 0.9).abs() < 1e-15 && (b.beta - 0.2).abs() < 1e-15);
        assert!(AdmissiblePair::bgk(0.0, 1.0).is_err());
        assert!(AdmissiblePair::by_label("nope").is_none());
    }

    #[test]
    fn exceptional_examples() {
        // t = 2: the sum is 2 cos(2 pi a / l) < 2, never above a threshold >= t
        let rep = exceptional_count(2, 3, 100.0, 10.0, 2000).unwrap();
        assert_eq!(rep.exceptional, 0);
        assert!(rep.total > 0);
        for row in &rep.rows {
            assert!(row.max < 2.0);
            assert_eq!(pow_mod(row.g, 2, row.ell), 1);
        }

        let rep = exceptional_count(4, 2, 1e3, 1.0, 10_000).unwrap();
        // oracle: brute-force subgroup sums with independently chosen generator
        let mut exceptional = 0;
        let mut total = 0;
        for ell in (5..=10_000u64).filter(|&l| is_prime(l) && l % 4 == 1) {
            total += 1;
            let h = (2..ell)
                .find(|&h| (1..ell - 1).all(|e| pow_mod(h, e, ell) != 1))
                .unwrap();
            let g = pow_mod(h, (ell - 1) / 4, ell);
            let max = (1..ell)
                .map(|a| (0..4).map(|x| e_frac(a * pow_mod(g, x, ell) % ell, ell)).sum::<Complex64>().norm())
                .fold(0.0, f64::max);
            let th = 4.0 * (ell as f64).powf(1.0 / 8.0) * (0.5 + 1e3f64.powf(-0.25));
            exceptional += usize::from(max > th);
        }
        assert_eq!(rep.total, total);
        assert_eq!(rep.exceptional, exceptional);
        assert_eq!((rep.total, rep.exceptional), (609, 0));

        assert!(matches!(
            exceptional_count(1000, 2, 10.0, 1.0, 1000),
            Err(Error::EmptyDomain(_))
        ));
        assert!(exceptional_count(1, 2, 10.0, 1.0, 1000).is_err());
        assert!(exceptional_count(4, 1, 10.0, 1.0, 1000).is_err());
    }

    #[test]
    fn parseval_and_conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let primes: Vec<u64> = (3..500).filter(|&p| is_prime(p)).collect();
        for case in 0..40 {
            let p = primes[rng.gen_range(0..primes.len())];
            let lambda = if p == 2 { 3 } else { 2 };
            let t_p = crate::arith::mult_order(lambda, p, &factorize(p - 1)).unwrap().t_p;
            let t = rng.gen_range(1..100);
            let (s, g) = random_input(&mut rng, t, 2000);
            let prof = power_profile(p, t_p, lambda, &s, &g).unwrap();
            for strategy in [Strategy::Direct, Strategy::Transform] {
                let spec = spectrum(&prof, strategy);
                let lhs: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
                let rhs = p as f64 * prof.norm_sqr();
                assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300), "case {case}");
            }
            let real = WeightSequence::from_real(
                &g.values().iter().map(|z| z.re).collect::<Vec<_>>(),
            )
            .unwrap();
            let prof = power_profile(p, t_p, lambda, &s, &real).unwrap();
            let spec = spectrum(&prof, Strategy::Direct);
            for a in 1..p as usize {
                assert!((spec[a].norm() - spec[p as usize - a].norm()).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn profile_total_matches_weight_sum(
            raw in proptest::collection::btree_set(0u64..10_000, 1..60),
            r in 1u64..500,
        ) {
            let s = SparseSequence::tight(raw.into_iter().collect()).unwrap();
            let n = s.len();
            let g = WeightSequence::new(
                (0..n).map(|i| Complex64::from_polar(1.0, i as f64)).collect(),
            ).unwrap();
            let prof = residue_profile(&s, &g, r).unwrap();
            prop_assert!(prof.entries().len() <= n.min(r as usize));
            prop_assert!((prof.total() - pairwise_sum(g.values())).norm() < 1e-9);
            let counts: u64 = residue_profile(&s, &WeightSequence::ones(n), r).unwrap()
                .entries().iter().map(|(_, w)| (w.re.round() as u64).pow(2)).sum();
            prop_assert_eq!(counts, pair_count_v(&s, r));
        }

        #[test]
        fn subgroup_sum_is_at_most_t(idx in 0usize..150, base in 2u64..100) {
            let primes: Vec<u64> = (3..1000).filter(|&p| is_prime(p)).collect();
            let p = primes[idx % primes.len()];
            prop_assume!(base % p != 0);
            let t = crate::arith::mult_order(base, p, &factorize(p - 1)).unwrap().t_p;
            let m = subgroup_sum_max(p, base, t).unwrap();
            prop_assert!(m <= t as f64 + 1e-9);
            let at_one: Complex64 = (1..=t).map(|z| e_frac(pow_mod(base, z, p), p)).sum();
            prop_assert!(m >= at_one.norm() - 1e-9);
        }
    }
}
