//! Prime enumeration and the order database `{(p, t_p, tau(p-1))}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{mult_order, Factorizer, SPF_CAP};
use crate::error::{Error, Result};

/// Default upper limit for [`sieve_primes`].
pub const SIEVE_CAP: u64 = 1_000_000_000;

const SEGMENT: u64 = 1 << 18;

/// All primes `<= x`, via a segmented sieve of Eratosthenes.
pub fn sieve_primes(x: u64) -> Result<Vec<u64>> {
    sieve_primes_capped(x, SIEVE_CAP)
}

pub fn sieve_primes_capped(x: u64, cap: u64) -> Result<Vec<u64>> {
    if x > cap {
        return Err(Error::ResourceCap {
            what: "sieve bound X",
            value: x,
            cap,
        });
    }
    if x < 2 {
        return Ok(Vec::new());
    }
    let root = (x as f64).sqrt() as u64 + 1;
    let mut small = vec![true; root as usize + 1];
    let mut base = Vec::new();
    for i in 2..=root as usize {
        if small[i] {
            base.push(i as u64);
            for j in (i * i..=root as usize).step_by(i) {
                small[j] = false;
            }
        }
    }

    let mut primes = Vec::new();
    let mut seg = vec![true; SEGMENT as usize];
    let mut lo = 2u64;
    while lo <= x {
        let hi = (lo + SEGMENT - 1).min(x);
        let len = (hi - lo + 1) as usize;
        seg[..len].fill(true);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let start = (p * p).max(lo.div_ceil(p) * p);
            for m in (start..=hi).step_by(p as usize) {
                seg[(m - lo) as usize] = false;
            }
        }
        primes.extend(
            seg[..len]
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| lo + i as u64),
        );
        lo = hi + 1;
    }
    Ok(primes)
}

/// One prime with the order of the base modulo it and `tau(p - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub p: u64,
    pub t_p: u64,
    pub tau_pm1: u64,
}

/// Orders of a fixed base modulo every prime `p <= X` with `p` not dividing
/// the base, sorted by `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderDatabase {
    lambda: u64,
    x: u64,
    records: Vec<PrimeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileHeader {
    lambda: u64,
    #[serde(rename = "X")]
    x: u64,
    count: u64,
    checksum: String,
}

/// Builds the order database for `lambda` over the primes `<= x`.
pub fn build_order_db(lambda: u64, x: u64) -> Result<OrderDatabase> {
    if lambda < 2 {
        return Err(Error::invalid(format!("lambda must be >= 2, got {lambda}")));
    }
    let primes = sieve_primes(x)?;
    // p - 1 < x, so a table up to x covers every p - 1 we will factor.
    let factorizer = if x <= SPF_CAP {
        Factorizer::with_table(x)?
    } else {
        Factorizer::default()
    };
    let records = primes
        .par_iter()
        .filter(|&&p| lambda % p != 0)
        .map(|&p| {
            let f = factorizer.factorize(p - 1);
            let order = mult_order(lambda, p, &f).expect("p does not divide lambda");
            PrimeRecord {
                p,
                t_p: order.t_p,
                tau_pm1: f.tau(),
            }
        })
        .collect();
    Ok(OrderDatabase { lambda, x, records })
}

/// Integer threshold used for a real `Delta`: `t_p >= ceil(Delta)`.
pub fn delta_threshold(delta: f64) -> u64 {
    if delta.is_nan() || delta <= 1.0 {
        1
    } else {
        delta.ceil() as u64
    }
}

impl OrderDatabase {
    pub fn from_records(lambda: u64, x: u64, records: Vec<PrimeRecord>) -> Result<Self> {
        if records.windows(2).any(|w| w[0].p >= w[1].p) {
            return Err(Error::Format("records are not strictly sorted by p".into()));
        }
        if let Some(r) = records.iter().find(|r| r.p > x || lambda % r.p == 0) {
            return Err(Error::Format(format!("record for p = {} out of range", r.p)));
        }
        Ok(Self { lambda, x, records })
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn records(&self) -> &[PrimeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, p: u64) -> Option<&PrimeRecord> {
        self.records
            .binary_search_by_key(&p, |r| r.p)
            .ok()
            .map(|i| &self.records[i])
    }

    /// `E_Delta(X)`: records with `t_p >= ceil(Delta)`, in order.
    pub fn filter_e_delta(&self, delta: f64) -> Vec<PrimeRecord> {
        let th = delta_threshold(delta);
        self.records.iter().copied().filter(|r| r.t_p >= th).collect()
    }

    /// `|E_Delta(X)| log X / X`.
    pub fn density_ratio(&self, delta: f64) -> f64 {
        let x = self.x as f64;
        self.filter_e_delta(delta).len() as f64 * x.ln() / x
    }

    /// Density ratio at `Delta = sqrt(X)`; tends to 1 as `X` grows.
    pub fn density_check(&self) -> f64 {
        self.density_ratio((self.x as f64).sqrt())
    }

    /// Number of primes in the database with `t_p <= Z`.
    pub fn count_small_orders(&self, z: f64) -> usize {
        if z < 1.0 {
            return 0;
        }
        let z = z.floor() as u64;
        self.records.iter().filter(|r| r.t_p <= z).count()
    }

    pub fn partition(&self, delta: f64) -> PrimePartition {
        PrimePartition::new(self, delta)
    }

    fn body_bytes(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(self.records.len() * 24);
        for r in &self.records {
            body.extend_from_slice(&r.p.to_le_bytes());
            body.extend_from_slice(&r.t_p.to_le_bytes());
            body.extend_from_slice(&r.tau_pm1.to_le_bytes());
        }
        body
    }

    /// Writes the header JSON line followed by little-endian `(p, t_p, tau)`
    /// triples.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let body = self.body_bytes();
        let header = FileHeader {
            lambda: self.lambda,
            x: self.x,
            count: self.records.len() as u64,
            checksum: hex::encode(Sha256::digest(&body)),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        w.write_all(&body)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut line = Vec::new();
        reader.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("missing header line".into()));
        }
        let header: FileHeader = serde_json::from_slice(&line)
            .map_err(|e| Error::Format(format!("bad header: {e}")))?;
        let mut body = Vec::new();
        reader.read_to_end(&mut body)?;
        if body.len() as u64 != header.count * 24 {
            return Err(Error::Format(format!(
                "expected {} records, body holds {} bytes",
                header.count,
                body.len()
            )));
        }
        if hex::encode(Sha256::digest(&body)) != header.checksum {
            return Err(Error::Format("checksum mismatch".into()));
        }
        let word = |c: &[u8]| u64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let records = body
            .chunks_exact(24)
            .map(|c| PrimeRecord {
                p: word(&c[0..8]),
                t_p: word(&c[8..16]),
                tau_pm1: word(&c[16..24]),
            })
            .collect();
        Self::from_records(header.lambda, header.x, records)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// A half-open dyadic class `lower <= t_p < upper`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicClass {
    pub lower: u64,
    pub upper: u64,
    pub primes: Vec<u64>,
}

/// Dyadic classes of `E_Delta(X)` by order, plus the fibers `Q(r)`.
#[derive(Clone, Debug)]
pub struct PrimePartition {
    pub delta: f64,
    pub classes: Vec<DyadicClass>,
    /// `r -> {p <= X : t_p = r}` over the whole database.
    pub fibers: BTreeMap<u64, Vec<u64>>,
}

impl PrimePartition {
    /// Boundaries `X_1 = ceil(Delta)`, `X_j = min(2 X_{j-1}, X)` for
    /// `j <= J` where `J` is the least integer with `X_1 2^J >= X`; the top
    /// class is closed off at `X + 1`.
    pub fn new(db: &OrderDatabase, delta: f64) -> Self {
        let x = db.x();
        let first = delta_threshold(delta);
        let mut bounds = Vec::new();
        let mut b = first;
        while b < x {
            bounds.push(b);
            b = (2 * b).min(x);
        }
        bounds.push(x + 1);
        let mut classes: Vec<DyadicClass> = bounds
            .windows(2)
            .map(|w| DyadicClass {
                lower: w[0],
                upper: w[1],
                primes: Vec::new(),
            })
            .collect();
        let mut fibers: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for r in db.records() {
            fibers.entry(r.t_p).or_default().push(r.p);
            let idx = classes.partition_point(|c| c.upper <= r.t_p);
            if let Some(c) = classes.get_mut(idx) {
                if c.lower <= r.t_p {
                    c.primes.push(r.p);
                }
            }
        }
        Self {
            delta,
            classes,
            fibers,
        }
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.primes.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;

    fn brute_order(l: u64, p: u64) -> u64 {
        (1..p).find(|&t| crate::arith::pow_mod(l, t, p) == 1).unwrap()
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sieve_primes(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap(), vec![2]);
        assert!(sieve_primes(1).unwrap().is_empty());
        assert!(matches!(
            sieve_primes_capped(1001, 1000),
            Err(Error::ResourceCap { cap: 1000, .. })
        ));
    }

    #[test]
    fn sieve_counts_match_independent_check() {
        let primes = sieve_primes(1_000_000).unwrap();
        assert_eq!(primes.len(), 78_498);
        let brute: Vec<u64> = (0..=300_000).filter(|&n| is_prime(n)).collect();
        assert_eq!(&primes[..brute.len()], &brute[..]);
        // segment boundary neighbourhood
        let around: Vec<u64> = primes
            .iter()
            .copied()
            .filter(|&p| p > SEGMENT - 100 && p < SEGMENT + 100)
            .collect();
        let expect: Vec<u64> = (SEGMENT - 99..SEGMENT + 100).filter(|&n| is_prime(n)).collect();
        assert_eq!(around, expect);
    }

    #[test]
    fn build_examples() {
        let db = build_order_db(2, 10).unwrap();
        let got: Vec<(u64, u64)> = db.records().iter().map(|r| (r.p, r.t_p)).collect();
        assert_eq!(got, vec![(3, 2), (5, 4), (7, 3)]);

        let db = build_order_db(3, 5).unwrap();
        let got: Vec<(u64, u64)> = db.records().iter().map(|r| (r.p, r.t_p)).collect();
        assert_eq!(got, vec![(2, 1), (5, 4)]);

        assert!(build_order_db(6, 3).unwrap().is_empty());
        assert!(build_order_db(1, 10).is_err());
    }

    #[test]
    fn build_matches_brute_force_below_10k() {
        for lambda in [2u64, 3, 10] {
            let db = build_order_db(lambda, 10_000).unwrap();
            let expect: Vec<u64> = (2..=10_000u64)
                .filter(|&p| is_prime(p) && lambda % p != 0)
                .collect();
            assert_eq!(db.records().iter().map(|r| r.p).collect::<Vec<_>>(), expect);
            for r in db.records() {
                assert_eq!(r.t_p, brute_order(lambda, r.p));
                let divisors = (1..r.p).filter(|d| (r.p - 1) % d == 0).count() as u64;
                assert_eq!(r.tau_pm1, divisors);
            }
        }
    }

    #[test]
    fn e_delta_examples() {
        let db = build_order_db(2, 10).unwrap();
        let ps = |d| db.filter_e_delta(d).iter().map(|r| r.p).collect::<Vec<_>>();
        assert_eq!(ps(2.0), vec![3, 5, 7]);
        assert_eq!(ps(4.0), vec![5]);
        assert_eq!(ps(1.0), vec![3, 5, 7]);
        // real thresholds round up
        assert_eq!(ps(3.2), vec![5]);
    }

    #[test]
    fn density_examples() {
        let db = build_order_db(2, 100).unwrap();
        // 24 odd primes below 100; orders < 10 occur for 3 (2), 5 (4), 7 (3),
        // 17 (8), 31 (5), 73 (9).
        let brute = db.records().iter().filter(|r| brute_order(2, r.p) >= 10).count();
        assert_eq!(brute, 18);
        assert!((db.density_check() - 18.0 * 100f64.ln() / 100.0).abs() < 1e-12);
        assert_eq!(db.density_ratio(100.0), 0.0);

        let db = build_order_db(2, 10_000).unwrap();
        let ratio = db.density_check();
        assert!(ratio > 0.8 && ratio < 1.3, "{ratio}");
        // 1145 primes; cross-checked with sympy n_order
        assert_eq!(format!("{ratio:.12}"), "1.054583972591");
    }

    #[test]
    fn small_order_examples() {
        let db = build_order_db(2, 100).unwrap();
        assert_eq!(db.count_small_orders(3.0), 2);
        assert_eq!(db.count_small_orders(1.0), 0);
        let db = build_order_db(2, 10_000).unwrap();
        // oracle: distinct odd primes <= 10^4 dividing 2^z - 1 for z <= 10
        let mut oracle = std::collections::BTreeSet::new();
        for z in 1..=10u32 {
            for (p, _) in crate::arith::factorize((1u64 << z) - 1).factors() {
                if *p <= 10_000 {
                    oracle.insert(*p);
                }
            }
        }
        let count = db.count_small_orders(10.0);
        assert_eq!(count, oracle.len());
        assert!(count <= 55);
    }

    #[test]
    fn lemma_small_orders_bound_lambda_two() {
        let db = build_order_db(2, 1_000_000).unwrap();
        for z in 1..=64u64 {
            assert!(db.count_small_orders(z as f64) as u64 <= z * (z + 1) / 2, "Z = {z}");
        }
    }

    #[test]
    fn partition_properties() {
        let db = build_order_db(2, 5_000).unwrap();
        for delta in [1.0, 2.0, 7.5, 70.7, 1000.0, 4999.0, 5000.0, 6000.0] {
            let part = db.partition(delta);
            let e = db.filter_e_delta(delta);
            assert_eq!(part.total(), e.len(), "delta = {delta}");
            let mut all: Vec<u64> = part.classes.iter().flat_map(|c| c.primes.clone()).collect();
            all.sort_unstable();
            assert_eq!(all, e.iter().map(|r| r.p).collect::<Vec<_>>());
            for c in &part.classes {
                assert!(c.lower < c.upper);
                for &p in &c.primes {
                    let t = db.get(p).unwrap().t_p;
                    assert!(c.lower <= t && t < c.upper);
                }
            }
        }
        let part = db.partition(1.0);
        for (&r, ps) in &part.fibers {
            assert!(ps.len() as u64 <= db.x() / r + 1);
            assert!(ps.iter().all(|p| (p - 1) % r == 0));
        }
    }

    #[test]
    fn partition_boundaries_follow_doubling() {
        let db = build_order_db(2, 10).unwrap();
        let part = db.partition(2.0);
        let b: Vec<(u64, u64)> = part.classes.iter().map(|c| (c.lower, c.upper)).collect();
        assert_eq!(b, vec![(2, 4), (4, 8), (8, 11)]);
    }

    #[test]
    fn persistence_roundtrip_and_corruption() {
        let db = build_order_db(3, 2_000).unwrap();
        let mut buf = Vec::new();
        db.write_to(&mut buf).unwrap();
        let header_end = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..header_end]).unwrap();
        assert_eq!(header["lambda"], 3);
        assert_eq!(header["X"], 2000);
        assert_eq!(header["count"], db.len() as u64);
        assert_eq!(buf.len() - header_end - 1, db.len() * 24);
        assert_eq!(&buf[header_end + 1..header_end + 9], &2u64.to_le_bytes());

        let back = OrderDatabase::read_from(&buf[..]).unwrap();
        assert_eq!(back, db);

        let mut bad = buf.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(matches!(OrderDatabase::read_from(&bad[..]), Err(Error::Format(_))));
        assert!(OrderDatabase::read_from(&buf[..buf.len() - 3]).is_err());
    }
}
