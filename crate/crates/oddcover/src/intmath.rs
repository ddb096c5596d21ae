//! Exact arbitrary-precision integer and rational primitives.
//!
//! [`Natural`] is an unbounded nonnegative integer (backed by `BigUint`);
//! decimal strings are its canonical serialization. [`Rational`] is an exact
//! fraction kept in lowest terms. Primality is decided exactly: trial division
//! for small inputs, deterministic Miller-Rabin below 2^64 (the toolkit never
//! needs primality above that). Factorization is trial division plus Pollard
//! rho, adequate for the smooth values the toolkit constructs.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

/// Unbounded nonnegative integer. Alias rather than newtype: all the
/// invariants (exact arithmetic, lossless decimal round-trip) are provided by
/// `BigUint` itself.
pub type Natural = BigUint;

/// Exact rational number in lowest terms (`Ratio` reduces on construction).
pub type Rational = Ratio<BigUint>;

/// Complete prime factorization: `(prime, exponent)` pairs, primes strictly
/// increasing, each exponent >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<(Natural, u32)>,
}

impl Factorization {
    /// Multiplies the factorization back out.
    pub fn product(&self) -> Natural {
        let mut n = Natural::one();
        for (p, e) in &self.factors {
            n *= p.pow(*e);
        }
        n
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntMathError {
    #[error("{0} and {1} are not coprime")]
    NotCoprime(Natural, Natural),
    #[error("cofactor {0} resists factorization")]
    FactorizationTooHard(Natural),
}

/// Convenience constructor from a machine integer.
pub fn nat(n: u64) -> Natural {
    Natural::from(n)
}

/// Returns `(gcd(a, b), lcm(a, b))`; `lcm(0, b) = 0`.
pub fn gcd_lcm(a: &Natural, b: &Natural) -> (Natural, Natural) {
    let g = a.gcd(b);
    if g.is_zero() {
        return (Natural::zero(), Natural::zero());
    }
    let l = a / &g * b;
    (g, l)
}

/// Multiplicative inverse of `a` modulo `m`, in `[0, m)`. For `m = 1` the
/// inverse is 0. Errors when `gcd(a, m) != 1`.
pub fn mod_inverse(a: &Natural, m: &Natural) -> Result<Natural, IntMathError> {
    if m.is_one() {
        return Ok(Natural::zero());
    }
    let a = a % m;
    // Extended Euclid on signed big integers.
    use num_bigint::BigInt;
    let mut r0 = BigInt::from(m.clone());
    let mut r1 = BigInt::from(a.clone());
    let mut s0 = BigInt::from(0);
    let mut s1 = BigInt::from(1);
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let s2 = &s0 - &q * &s1;
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    if !r0.is_one() {
        return Err(IntMathError::NotCoprime(a, m.clone()));
    }
    let mi = BigInt::from(m.clone());
    let inv = ((s0 % &mi) + &mi) % &mi;
    Ok(inv.to_biguint().expect("reduced into [0, m)"))
}

/// Intersection of the classes `r1 (mod m1)` and `r2 (mod m2)`: the unique
/// class mod `lcm(m1, m2)` contained in both, or `None` when
/// `r1 != r2 (mod gcd(m1, m2))`.
pub fn crt_pair(
    r1: &Natural,
    m1: &Natural,
    r2: &Natural,
    m2: &Natural,
) -> Option<(Natural, Natural)> {
    let (g, l) = gcd_lcm(m1, m2);
    let (lo_r, lo_m, hi_r, hi_m) = if r1 >= r2 {
        (r2, m2, r1, m1)
    } else {
        (r1, m1, r2, m2)
    };
    let diff = hi_r - lo_r;
    if !(&diff % &g).is_zero() {
        return None;
    }
    // x = lo_r + lo_m * t, need lo_m * t = diff (mod hi_m);
    // divide through by g: (lo_m/g) t = diff/g (mod hi_m/g).
    let m2g = hi_m / &g;
    let t = if m2g.is_one() {
        Natural::zero()
    } else {
        let inv = mod_inverse(&(lo_m / &g), &m2g).expect("coprime after dividing by gcd");
        (diff / &g) * inv % &m2g
    };
    let r = (lo_r + lo_m * t) % &l;
    Some((r, l))
}

fn mulmod_u128(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u128(acc, b, m);
        }
        b = mulmod_u128(b, b, m);
        e >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    // Deterministic Miller-Rabin witness set for all n < 2^64.
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u128(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Exact primality test. Inputs above 2^64 are rejected as composite-unknown
/// territory the toolkit never enters: all primes it handles (figure primes,
/// P, q, split primes) fit in a machine word, so this panics loudly instead of
/// guessing.
pub fn is_prime(n: &Natural) -> bool {
    match u64::try_from(n) {
        Ok(v) => is_prime_u64(v),
        Err(_) => panic!("primality test requested above 2^64: {n}"),
    }
}

/// Smallest prime strictly greater than `lower_bound` and not in `excluded`.
pub fn next_usable_prime(lower_bound: &Natural, excluded: &[Natural]) -> Natural {
    let mut n = lower_bound + 1u32;
    loop {
        if is_prime(&n) && !excluded.contains(&n) {
            return n;
        }
        n += 1u32;
    }
}

fn pollard_rho(n: u64) -> u64 {
    // Brent's variant; n must be odd composite, not a prime power handled
    // elsewhere. Deterministic seed sweep keeps the function reproducible.
    for c in 1..64u64 {
        let f = |x: u64| (mulmod_u128(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!("rho seed sweep exhausted on {n}")
}

fn factorize_u64(mut n: u64, out: &mut Vec<u64>) {
    let mut d = 3u64;
    while n & 1 == 0 {
        out.push(2);
        n >>= 1;
    }
    while d * d <= n && d < 100_000 {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
        d += 2;
    }
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let f = pollard_rho(n);
    factorize_u64(f, out);
    factorize_u64(n / f, out);
}

/// Complete prime factorization of `n >= 1`. All toolkit-generated values are
/// smooth (prime factors drawn from small figure primes, P, and q), so trial
/// division peels them down below 2^64 quickly; a cofactor that stays above
/// 2^64 signals misuse.
pub fn factorize(n: &Natural) -> Result<Factorization, IntMathError> {
    let mut primes: Vec<u64> = Vec::new();
    let mut rest = n.clone();
    let mut d = 2u64;
    while d < 100_000 {
        let dn = Natural::from(d);
        if &dn * &dn > rest {
            break;
        }
        while (&rest % d).is_zero() {
            primes.push(d);
            rest /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if !rest.is_one() {
        match u64::try_from(&rest) {
            Ok(v) => factorize_u64(v, &mut primes),
            Err(_) => return Err(IntMathError::FactorizationTooHard(rest)),
        }
    }
    primes.sort_unstable();
    let mut factors: Vec<(Natural, u32)> = Vec::new();
    for p in primes {
        let pn = Natural::from(p);
        match factors.last_mut() {
            Some((q, e)) if *q == pn => *e += 1,
            _ => factors.push((pn, 1)),
        }
    }
    Ok(Factorization { factors })
}

/// All divisors of `n >= 1` in increasing order.
pub fn divisors(n: &Natural) -> Result<Vec<Natural>, IntMathError> {
    let f = factorize(n)?;
    let mut out = vec![Natural::one()];
    for (p, e) in &f.factors {
        let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
        for d in &out {
            let mut pk = Natural::one();
            for _ in 0..=*e {
                next.push(d * &pk);
                pk *= p;
            }
        }
        out = next;
    }
    out.sort();
    Ok(out)
}

/// p-adic valuation: largest `v` with `p^v | n` (`n >= 1`).
pub fn valuation(n: &Natural, p: &Natural) -> u32 {
    let mut v = 0;
    let mut rest = n.clone();
    while (&rest % p).is_zero() {
        rest /= p;
        v += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_lcm_basics() {
        assert_eq!(gcd_lcm(&nat(0), &nat(7)), (nat(7), nat(0)));
        assert_eq!(gcd_lcm(&nat(9), &nat(15)), (nat(3), nat(45)));
        // 3^36 vs 5 * 3^35, recomputed from the factorizations.
        let a = nat(3).pow(36);
        let b = nat(5) * nat(3).pow(35);
        assert_eq!(gcd_lcm(&a, &b), (nat(3).pow(35), nat(5) * nat(3).pow(36)));
    }

    #[test]
    fn mod_inverse_basics() {
        assert_eq!(mod_inverse(&nat(1), &nat(7)), Ok(nat(1)));
        // exhaustive check: 9 * 4 = 36 = 1 mod 5
        assert_eq!(mod_inverse(&nat(9), &nat(5)), Ok(nat(4)));
        assert!(matches!(
            mod_inverse(&nat(3), &nat(9)),
            Err(IntMathError::NotCoprime(..))
        ));
        assert_eq!(mod_inverse(&nat(5), &nat(1)), Ok(nat(0)));
    }

    #[test]
    fn mod_inverse_exhaustive_small() {
        for m in 1u64..60 {
            for a in 0..m {
                let g = a.gcd(&m);
                let r = mod_inverse(&nat(a), &nat(m));
                if g == 1 {
                    let u = r.expect("coprime");
                    if m > 1 {
                        assert_eq!((nat(a) * &u) % nat(m), nat(1) % nat(m));
                    }
                } else {
                    assert!(r.is_err());
                }
            }
        }
    }

    #[test]
    fn crt_pair_basics() {
        assert_eq!(crt_pair(&nat(0), &nat(2), &nat(0), &nat(3)), Some((nat(0), nat(6))));
        assert_eq!(crt_pair(&nat(1), &nat(2), &nat(0), &nat(4)), None);
        // enumerate 0..14: 14 = 2 mod 3 = 4 mod 5
        assert_eq!(crt_pair(&nat(2), &nat(3), &nat(4), &nat(5)), Some((nat(14), nat(15))));
    }

    #[test]
    fn crt_pair_exhaustive_small() {
        for m1 in 1u64..12 {
            for m2 in 1u64..12 {
                let l = m1.lcm(&m2);
                for r1 in 0..m1 {
                    for r2 in 0..m2 {
                        let want: Vec<u64> =
                            (0..l).filter(|x| x % m1 == r1 && x % m2 == r2).collect();
                        let got = crt_pair(&nat(r1), &nat(m1), &nat(r2), &nat(m2));
                        match got {
                            Some((r, m)) => {
                                assert_eq!(m, nat(l));
                                assert_eq!(want, vec![u64::try_from(&r).unwrap()]);
                            }
                            None => assert!(want.is_empty()),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn primality_basics() {
        assert!(is_prime(&nat(2)));
        assert!(is_prime(&nat(37)));
        assert!(!is_prime(&nat(91))); // 7 * 13
        assert!(!is_prime(&nat(0)));
        assert!(!is_prime(&nat(1)));
        // large prime / composite near 2^61
        assert!(is_prime(&nat(2305843009213693951))); // 2^61 - 1, Mersenne
        assert!(!is_prime(&nat(2305843009213693953)));
    }

    #[test]
    fn primality_matches_trial_division() {
        let mut sieve = vec![true; 20_000];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..20_000usize {
            if sieve[i] {
                for j in (i * i..20_000).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for n in 0..20_000usize {
            assert_eq!(is_prime(&nat(n as u64)), sieve[n], "n = {n}");
        }
    }

    #[test]
    fn next_usable_prime_basics() {
        assert_eq!(next_usable_prime(&nat(31), &[]), nat(37));
        assert_eq!(next_usable_prime(&nat(29), &[nat(31)]), nat(37));
        assert_eq!(next_usable_prime(&nat(13), &[nat(17)]), nat(19));
    }

    #[test]
    fn factorize_basics() {
        assert_eq!(factorize(&nat(1)).unwrap().factors, vec![]);
        assert_eq!(
            factorize(&nat(45)).unwrap().factors,
            vec![(nat(3), 2), (nat(5), 1)]
        );
        let n = nat(3) * nat(5).pow(36);
        assert_eq!(
            factorize(&n).unwrap().factors,
            vec![(nat(3), 1), (nat(5), 36)]
        );
    }

    #[test]
    fn factorize_reconstructs() {
        // deterministic pseudorandom smooth values
        let mut x = 0x9e3779b97f4a7c15u64;
        for _ in 0..500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43];
            let mut n = Natural::one();
            let mut bits = x;
            for _ in 0..8 {
                let p = primes[(bits % 14) as usize];
                bits /= 14;
                let e = (bits % 4) as u32;
                bits /= 4;
                n *= Natural::from(p).pow(e);
            }
            let f = factorize(&n).unwrap();
            assert_eq!(f.product(), n);
            for (p, e) in &f.factors {
                assert!(is_prime(p));
                assert!(*e >= 1);
            }
            for w in f.factors.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
        }
    }

    #[test]
    fn divisors_basics() {
        assert_eq!(divisors(&nat(1)).unwrap(), vec![nat(1)]);
        assert_eq!(
            divisors(&nat(45)).unwrap(),
            vec![nat(1), nat(3), nat(5), nat(9), nat(15), nat(45)]
        );
        // brute-force cross-check
        for n in 1u64..200 {
            let want: Vec<Natural> = (1..=n).filter(|d| n % d == 0).map(nat).collect();
            assert_eq!(divisors(&nat(n)).unwrap(), want, "n = {n}");
        }
    }

    #[test]
    fn valuation_basics() {
        assert_eq!(valuation(&nat(375), &nat(5)), 3);
        assert_eq!(valuation(&nat(7), &nat(5)), 0);
    }

    #[test]
    fn rational_is_exact_and_reduced() {
        let a = Rational::new(nat(2), nat(4));
        assert_eq!(*a.numer(), nat(1));
        assert_eq!(*a.denom(), nat(2));
        let sum = a + Rational::new(nat(1), nat(3)) + Rational::new(nat(1), nat(6));
        assert_eq!(sum, Rational::from(nat(1)));
    }
}
