//! Integer and rational helpers: sieving, factorization, valuations.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(q: &Rat) -> f64 {
    // numerator and denominator may individually overflow f64 range
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = q.numer().bits().max(q.denom().bits()) as i64 - 1000;
            let n = (q.numer() >> shift.max(0) as usize).to_f64().unwrap_or(0.0);
            let d = (q.denom() >> shift.max(0) as usize).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Sieve of Eratosthenes, all primes `<= n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factorization of a 64-bit integer as sorted `(prime, exponent)` pairs.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            primes.push(m);
            continue;
        }
        let f = pollard_brent(m);
        stack.push(f);
        stack.push(m / f);
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Factorization of the absolute value of a big integer. Fails if it does not fit in 64 bits.
pub fn factorize_big(n: &BigInt) -> Option<Vec<(u64, u32)>> {
    let m = n.abs().to_u64()?;
    if m == 0 {
        return None;
    }
    Some(factorize(m))
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(n: &BigInt, p: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        v += 1;
        m = q;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn valuation_rat(q: &Rat, p: u64) -> i64 {
    valuation(q.numer(), p) as i64 - valuation(q.denom(), p) as i64
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm_all<I: IntoIterator<Item = BigInt>>(it: I) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(&x))
}

/// Rational power `base^e` for integer `e` (possibly negative).
pub fn rat_pow(base: &Rat, e: i64) -> Rat {
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

pub fn is_positive(q: &Rat) -> bool {
    q.numer().sign() == Sign::Plus
}

/// Largest integer `x >= 0` with `x^k <= bound`.
pub fn integer_root_floor(bound: &Rat, k: u32) -> u64 {
    if k == 0 || !is_positive(bound) {
        return 0;
    }
    let floor = bound.floor().to_integer();
    let guess = rat_to_f64(bound).powf(1.0 / k as f64);
    let mut x = if guess.is_finite() { guess.floor().max(0.0) as u64 } else { u64::MAX >> 1 };
    let fits = |x: u64| BigInt::from(x).pow(k) <= floor;
    while x > 0 && !fits(x) {
        x -= 1;
    }
    while fits(x + 1) {
        x += 1;
    }
    x
}

/// Whether every prime valuation of `n` is zero or at least `m`.
pub fn is_mfull(n: u64, m: u32) -> bool {
    factorize(n).iter().all(|&(_, e)| e >= m)
}

/// Parses `a/b`, a decimal such as `2.5`, or scientific notation such as `1e7` exactly.
pub fn parse_rational(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        return (!d.is_zero()).then(|| Rat::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if frac.starts_with(['+', '-']) || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let int = if matches!(int, "" | "+" | "-") { format!("{int}0") } else { int.to_string() };
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    Some(Rat::from_integer(digits) * rat_pow(&rint(10), exp - frac.len() as i64))
}
