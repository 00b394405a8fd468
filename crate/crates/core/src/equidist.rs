//! Exact extreme discrepancy of finite point sets in `[0, 1)` and the
//! Erdős–Turán upper bound.
//!
//! Points are stored as exact rationals `k / q` with a common denominator,
//! so the sweep below runs in integer arithmetic and the reported
//! discrepancy is an exact rational.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{pow_mod, gcd};
use crate::error::{Error, Result};
use crate::expsum::{e_frac, pairwise_sum, SparseSequence};
use crate::primes::OrderDatabase;
use crate::report::{fmt_sig12, CsvTable};

/// Denominator used for points given as `f64`.
pub const F64_DENOMINATOR: u64 = 1 << 53;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub p: u64,
    pub lambda: u64,
}

/// Points `numerators[i] / denominator`, each in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitPointSet {
    numerators: Vec<u64>,
    denominator: u64,
    provenance: Option<Provenance>,
}

impl UnitPointSet {
    pub fn from_rationals(numerators: Vec<u64>, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::invalid("denominator must be >= 1"));
        }
        if let Some(&k) = numerators.iter().find(|&&k| k >= denominator) {
            return Err(Error::invalid(format!("{k}/{denominator} is not in [0, 1)")));
        }
        Ok(Self {
            numerators,
            denominator,
            provenance: None,
        })
    }

    /// Quantizes each point to the nearest multiple of `2^-53`.
    pub fn from_f64(points: &[f64]) -> Result<Self> {
        let q = F64_DENOMINATOR as f64;
        let nums = points
            .iter()
            .map(|&x| {
                if (0.0..1.0).contains(&x) {
                    Ok(((x * q).round() as u64).min(F64_DENOMINATOR - 1))
                } else {
                    Err(Error::invalid(format!("point {x} is not in [0, 1)")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(nums, F64_DENOMINATOR)
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn point(&self, i: usize) -> f64 {
        self.numerators[i] as f64 / self.denominator as f64
    }
}

/// `{lambda^{s_n} / p}` for `n = 1..T`, exponents reduced modulo `t_p`.
pub fn sequence_a(p: u64, lambda: u64, t_p: u64, seq: &SparseSequence) -> Result<UnitPointSet> {
    if p < 2 {
        return Err(Error::invalid(format!("modulus must be >= 2, got {p}")));
    }
    if lambda % p == 0 {
        return Err(Error::OrderUndefined { lambda, p });
    }
    if gcd(lambda, p) != 1 || t_p == 0 || pow_mod(lambda, t_p, p) != 1 {
        return Err(Error::InvalidOrder {
            base: lambda,
            p,
            claimed: t_p,
        });
    }
    let nums = seq
        .values()
        .iter()
        .map(|&s| pow_mod(lambda, s % t_p, p))
        .collect();
    let mut set = UnitPointSet::from_rationals(nums, p)?;
    set.provenance = Some(Provenance { p, lambda });
    Ok(set)
}

/// Which side of `A(a, b)/T - (b - a)` the witness realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Closed interval `[a, b]` holding too many points.
    Excess,
    /// Interval holding too few points, open at an end unless the end is
    /// `0` or `1` taken closed; the supremum is the limit over closed
    /// intervals shrinking to it.
    Deficit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    /// `D = numerator / denominator` exactly, with `denominator = T q`.
    pub numerator: u128,
    pub denominator: u128,
    pub witness_a: f64,
    pub witness_b: f64,
    pub a_closed: bool,
    pub b_closed: bool,
    pub side: Side,
}

/// `sup_{0 <= a <= b <= 1} |A(a, b)/T - (b - a)|` by one sweep over the
/// sorted distinct points.
pub fn discrepancy_exact(pts: &UnitPointSet) -> Result<DiscrepancyResult> {
    if pts.is_empty() {
        return Err(Error::EmptyDomain("discrepancy of an empty point set".into()));
    }
    let q = pts.denominator as i128;
    let t = pts.len() as i128;
    let mut sorted = pts.numerators.clone();
    sorted.sort_unstable();
    // distinct values with cumulative counts C_j
    let mut vals: Vec<(i128, i128)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let c = i as i128 + 1;
        match vals.last_mut() {
            Some(last) if last.0 == v as i128 => last.1 = c,
            _ => vals.push((v as i128, c)),
        }
    }

    // excess on [v_i, v_j]: (C_j q - v_j T) + (v_i T - C_{i-1} q)
    let mut best_ex = (i128::MIN, 0i128, 0i128);
    let mut lo_best = (i128::MIN, 0i128);
    let mut prev_c = 0i128;
    for &(v, c) in &vals {
        let cand = v * t - prev_c * q;
        if cand > lo_best.0 {
            lo_best = (cand, v);
        }
        let val = c * q - v * t + lo_best.0;
        if val > best_ex.0 {
            best_ex = (val, lo_best.1, v);
        }
        prev_c = c;
    }

    // deficit on (lo, hi): (pos_hi T - cnt_hi q) - (pos_lo T - cnt_lo q)
    let mut best_de = (i128::MIN, 0i128, 0i128, true, false);
    let mut lo_min = (0i128, 0i128, true);
    let mut prev_c = 0i128;
    for &(v, c) in &vals {
        let val = v * t - prev_c * q - lo_min.0;
        if val > best_de.0 {
            best_de = (val, lo_min.1, v, lo_min.2, false);
        }
        let l = v * t - c * q;
        if l < lo_min.0 {
            lo_min = (l, v, false);
        }
        prev_c = c;
    }
    let val = -lo_min.0;
    if val > best_de.0 {
        best_de = (val, lo_min.1, q, lo_min.2, true);
    }

    let (num, a, b, a_closed, b_closed, side) = if best_ex.0 >= best_de.0 {
        (best_ex.0, best_ex.1, best_ex.2, true, true, Side::Excess)
    } else {
        let (v, a, b, ac, bc) = best_de;
        (v, a, b, ac, bc, Side::Deficit)
    };
    let den = (t * q) as u128;
    let num = num as u128;
    Ok(DiscrepancyResult {
        value: num as f64 / den as f64,
        numerator: num,
        denominator: den,
        witness_a: a as f64 / q as f64,
        witness_b: b as f64 / q as f64,
        a_closed,
        b_closed,
        side,
    })
}

/// `1/(H+1) + 3 sum_{h <= H} (1/h) |(1/T) sum_n e(h x_n)|`.
pub fn erdos_turan_bound(pts: &UnitPointSet, h: u64) -> Result<f64> {
    if h == 0 {
        return Err(Error::invalid("H must be >= 1"));
    }
    if pts.is_empty() {
        return Err(Error::EmptyDomain("Erdős–Turán bound of an empty point set".into()));
    }
    let q = pts.denominator;
    let t = pts.len() as f64;
    let terms: Vec<f64> = (1..=h)
        .map(|hh| {
            let zs: Vec<_> = pts
                .numerators
                .iter()
                .map(|&k| e_frac(((hh as u128 * k as u128) % q as u128) as u64, q))
                .collect();
            pairwise_sum(&zs).norm() / t / hh as f64
        })
        .collect();
    let s: f64 = crate::expsum::pairwise_sum_f64(&terms);
    Ok(1.0 / (h as f64 + 1.0) + 3.0 * s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub p: u64,
    pub d: f64,
    pub witness_a: f64,
    pub witness_b: f64,
    pub et_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancySurvey {
    pub lambda: u64,
    pub x: u64,
    pub t: usize,
    pub delta: f64,
    pub h: u64,
    /// Fraction of primes with `D <= T^{-delta}`.
    pub fraction_power: f64,
    /// Fraction of primes with `D <= (log T)^{-delta}`.
    pub fraction_log: f64,
    /// Median of `-log D / log log T` over the primes; absent for `T < 3`.
    pub median_delta_hat: Option<f64>,
    pub rows: Vec<SurveyRow>,
}

/// Exact discrepancy of `A(lambda, p)` for every prime of `db`.
pub fn discrepancy_survey(
    db: &OrderDatabase,
    seq: &SparseSequence,
    delta: f64,
    h: u64,
) -> Result<DiscrepancySurvey> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    if db.is_empty() {
        return Err(Error::EmptyDomain("order database has no primes".into()));
    }
    let lambda = db.lambda();
    let rows = db
        .records()
        .par_iter()
        .map(|r| {
            let pts = sequence_a(r.p, lambda, r.t_p, seq)?;
            let d = discrepancy_exact(&pts)?;
            Ok(SurveyRow {
                p: r.p,
                d: d.value,
                witness_a: d.witness_a,
                witness_b: d.witness_b,
                et_bound: erdos_turan_bound(&pts, h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t = seq.len() as f64;
    let power = t.powf(-delta);
    let log = t.ln().powf(-delta);
    let n = rows.len() as f64;
    let fraction_power = rows.iter().filter(|r| r.d <= power).count() as f64 / n;
    let fraction_log = rows.iter().filter(|r| r.d <= log).count() as f64 / n;
    let median_delta_hat = (seq.len() >= 3).then(|| {
        let ll = t.ln().ln();
        let mut v: Vec<f64> = rows.iter().map(|r| -r.d.ln() / ll).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            (v[m / 2 - 1] + v[m / 2]) / 2.0
        }
    });
    Ok(DiscrepancySurvey {
        lambda,
        x: db.x(),
        t: seq.len(),
        delta,
        h,
        fraction_power,
        fraction_log,
        median_delta_hat,
        rows,
    })
}

impl DiscrepancySurvey {
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(
            "discrepancy",
            &["p", "D", "witness_a", "witness_b", "ET_bound", "H"],
        );
        t.note(format!(
            "lambda={} X={} T={} delta={}",
            self.lambda,
            self.x,
            self.t,
            fmt_sig12(self.delta)
        ));
        t.note("ET_bound = 1/(H+1) + 3 sum_{h<=H} (1/h) |T^-1 sum_n e(h x_n)|");
        for r in &self.rows {
            t.row(vec![
                r.p.to_string(),
                fmt_sig12(r.d),
                fmt_sig12(r.witness_a),
                fmt_sig12(r.witness_b),
                fmt_sig12(r.et_bound),
                self.h.to_string(),
            ]);
        }
        t.render()
    }
}
