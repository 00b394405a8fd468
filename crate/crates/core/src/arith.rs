//! Modular arithmetic, factorization and multiplicative orders.
//!
//! Everything here works on `u64` with `u128` intermediates; there is no
//! arbitrary-precision arithmetic in this module.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest smallest-prime-factor table we are willing to allocate.
pub const SPF_CAP: u64 = 100_000_000;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exponent mod m` by square-and-multiply. Returns 0 for `m == 1`.
pub fn pow_mod(base: u64, mut exponent: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % m;
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exponent >>= 1;
    }
    result
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A modulus `m >= 2` together with its primality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    m: u64,
    is_prime: bool,
}

impl Modulus {
    pub fn new(m: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("modulus must be >= 2, got {m}")));
        }
        Ok(Self {
            m,
            is_prime: is_prime(m),
        })
    }

    /// A modulus that is required to be prime.
    pub fn prime(p: u64) -> Result<Self> {
        let m = Self::new(p)?;
        if !m.is_prime {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
        Ok(m)
    }

    pub fn get(&self) -> u64 {
        self.m
    }

    pub fn is_prime(&self) -> bool {
        self.is_prime
    }

    pub fn pow(&self, base: u64, exponent: u64) -> u64 {
        pow_mod(base, exponent, self.m)
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.m)
    }
}

// Montgomery arithmetic for odd moduli below 2^63, used by the primality
// test and rho where u128 division would dominate.
#[derive(Clone, Copy)]
struct Montgomery {
    n: u64,
    neg_inv: u64,
    r2: u64,
}

impl Montgomery {
    fn new(n: u64) -> Self {
        debug_assert!(n & 1 == 1 && n < 1 << 63);
        let mut inv = n;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        let r2 = (0u128.wrapping_sub(n as u128) % n as u128) as u64;
        Self {
            n,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.n as u128) >> 64) as u64;
        if u >= self.n {
            u - self.n
        } else {
            u
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    fn to_mont(&self, x: u64) -> u64 {
        self.mul(x % self.n, self.r2)
    }

    fn pow(&self, base: u64, mut e: u64) -> u64 {
        let mut result = self.to_mont(1);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        result
    }
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin for the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n % p == 0 {
            return n == p;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    if n < 1 << 63 {
        let mg = Montgomery::new(n);
        let one = mg.to_mont(1);
        let minus_one = mg.to_mont(n - 1);
        SMALL_PRIMES.iter().all(|&a| {
            let mut x = mg.pow(mg.to_mont(a), d);
            if x == one || x == minus_one {
                return true;
            }
            for _ in 1..s {
                x = mg.mul(x, x);
                if x == minus_one {
                    return true;
                }
            }
            false
        })
    } else {
        SMALL_PRIMES.iter().all(|&a| {
            let mut x = pow_mod(a, d, n);
            if x == 1 || x == n - 1 {
                return true;
            }
            for _ in 1..s {
                x = mul_mod(x, x, n);
                if x == n - 1 {
                    return true;
                }
            }
            false
        })
    }
}

// Brent's variant of rho on an odd composite n < 2^63.
fn rho_brent(n: u64, c: u64) -> Option<u64> {
    let mg = Montgomery::new(n);
    let c = mg.to_mont(c);
    let f = |x: u64| {
        let y = mg.mul(x, x) + c;
        if y >= n {
            y - n
        } else {
            y
        }
    };
    const BATCH: u64 = 128;
    let mut y = mg.to_mont(2);
    let mut x = y;
    let mut ys = y;
    let mut q = mg.to_mont(1);
    let mut g = 1;
    let mut r = 1u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BATCH.min(r - k) {
                y = f(y);
                q = mg.mul(q, x.abs_diff(y));
            }
            g = gcd(q, n);
            k += BATCH;
        }
        r *= 2;
        if r > 1 << 26 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn split_composite(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    if n >= 1 << 63 {
        // Outside the supported range; fall back to plain trial division.
        let mut m = n;
        let mut d = 3;
        while d * d <= m {
            while m % d == 0 {
                out.push(d);
                m /= d;
            }
            d += 2;
        }
        if m > 1 {
            out.push(m);
        }
        return;
    }
    let d = (1..)
        .find_map(|c| rho_brent(n, c))
        .expect("rho always finds a factor of a composite eventually");
    split_composite(d, out);
    split_composite(n / d, out);
}

/// Prime factorization `source = prod p^e` with strictly increasing primes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factorization {
    source: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    fn from_primes(source: u64, mut primes: Vec<u64>) -> Self {
        primes.sort_unstable();
        let mut factors: Vec<(u64, u32)> = Vec::new();
        for p in primes {
            match factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => factors.push((p, 1)),
            }
        }
        Self { source, factors }
    }

    pub fn source(&self) -> u64 {
        self.source
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Multiplies the factorization back out (in `u128`, so it cannot overflow
    /// for a valid factorization of a `u64`).
    pub fn product(&self) -> u128 {
        self.factors
            .iter()
            .map(|&(p, e)| (p as u128).pow(e))
            .product()
    }

    pub fn tau(&self) -> u64 {
        tau(self)
    }
}

/// Number of divisors, `prod (e + 1)`.
pub fn tau(f: &Factorization) -> u64 {
    f.factors.iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Factorization by trial division over small primes, then rho with a
/// deterministic primality check on every cofactor.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut primes = Vec::new();
    let mut m = n;
    let tz = m.trailing_zeros();
    primes.extend(std::iter::repeat_n(2, tz as usize));
    m >>= tz;
    let mut d = 3u64;
    while d <= 997 && d * d <= m {
        while m % d == 0 {
            primes.push(d);
            m /= d;
        }
        d += 2;
    }
    split_composite(m, &mut primes);
    Factorization::from_primes(n, primes)
}

/// Smallest-prime-factor table for `0..=bound`. A zero entry marks a prime.
#[derive(Debug)]
pub struct SpfTable {
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn new(bound: u64) -> Result<Self> {
        if bound > SPF_CAP {
            return Err(Error::ResourceCap {
                what: "smallest-prime-factor table bound",
                value: bound,
                cap: SPF_CAP,
            });
        }
        let len = bound as usize + 1;
        let mut spf = vec![0u32; len];
        let mut i = 2usize;
        while i * i < len {
            if spf[i] == 0 {
                for j in (i * i..len).step_by(i) {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                }
            }
            i += 1;
        }
        Ok(Self { spf })
    }

    pub fn bound(&self) -> u64 {
        self.spf.len() as u64 - 1
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n >= 1 && n <= self.bound());
        let mut primes = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = match self.spf[m] {
                0 => m,
                q => q as usize,
            };
            primes.push(p as u64);
            m /= p;
        }
        Factorization::from_primes(n, primes)
    }
}

/// Factorizer that consults an SPF table below its bound and falls back to
/// [`factorize`] above it. Cheap to clone; the table is shared read-only.
#[derive(Clone, Debug, Default)]
pub struct Factorizer {
    table: Option<Arc<SpfTable>>,
}

impl Factorizer {
    pub fn with_table(bound: u64) -> Result<Self> {
        Ok(Self {
            table: Some(Arc::new(SpfTable::new(bound)?)),
        })
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        match &self.table {
            Some(t) if n <= t.bound() => t.factorize(n),
            _ => factorize(n),
        }
    }
}

/// `t_p`, the multiplicative order of `lambda` modulo the prime `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrderRecord {
    pub lambda: u64,
    pub p: u64,
    pub t_p: u64,
}

impl OrderRecord {
    /// Checks `lambda^t = 1` and `lambda^(t/q) != 1` for every prime `q | t`.
    pub fn verify(&self) -> bool {
        verify_order(self.lambda, self.p, self.t_p)
    }
}

/// True when `g` has multiplicative order exactly `t` modulo `p`.
pub fn verify_order(g: u64, p: u64, t: u64) -> bool {
    if t == 0 || g % p == 0 || pow_mod(g, t, p) != 1 {
        return false;
    }
    factorize(t)
        .primes()
        .all(|q| pow_mod(g, t / q, p) != 1)
}

/// Order of `lambda` modulo `p`, found by starting from `p - 1` and stripping
/// prime factors while the power stays 1.
pub fn mult_order(lambda: u64, p: u64, f_pm1: &Factorization) -> Result<OrderRecord> {
    if p < 2 || f_pm1.source() != p - 1 {
        return Err(Error::invalid(format!(
            "factorization of {} supplied for modulus {p}",
            f_pm1.source()
        )));
    }
    let l = lambda % p;
    if l == 0 {
        return Err(Error::OrderUndefined { lambda, p });
    }
    let mut t = p - 1;
    for &(q, e) in f_pm1.factors() {
        for _ in 0..e {
            if pow_mod(l, t / q, p) == 1 {
                t /= q;
            } else {
                break;
            }
        }
    }
    Ok(OrderRecord { lambda, p, t_p: t })
}

/// Smallest primitive root of the prime `p`.
pub fn primitive_root(p: u64, f_pm1: &Factorization) -> Result<u64> {
    if p == 2 {
        return Ok(1);
    }
    (2..p)
        .find(|&g| f_pm1.primes().all(|q| pow_mod(g, (p - 1) / q, p) != 1))
        .ok_or_else(|| Error::invalid(format!("{p} has no primitive root; is it prime?")))
}

/// Number of distinct primes dividing the product of `ns`, without ever
/// forming the product.
pub fn omega(ns: &[u64]) -> usize {
    distinct_primes(ns.iter().copied()).len()
}

pub fn distinct_primes(ns: impl IntoIterator<Item = u64>) -> BTreeSet<u64> {
    ns.into_iter().flat_map(|n| factorize(n).factors).map(|(p, _)| p).collect()
}
