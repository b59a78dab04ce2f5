//! Exact arithmetic over ℚ and ℚ(√2), p-adic valuations and modular square roots.
//!
//! Everything here is exact. Rationals are arbitrary precision and always kept
//! in lowest terms with a positive denominator; moduli are `u64` primes, which
//! is all the local computations ever need.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary precision rational in lowest terms, denominator positive.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus must be an odd prime, got 2")]
    EvenPrime,
    #[error("zero has no valuation")]
    ZeroInput,
    #[error("{root} is not a square root of 2 modulo {p}")]
    InvalidRoot { root: u64, p: u64 },
    #[error("2 is not a square modulo {0}")]
    TwoNotSquare(u64),
    #[error("{p} divides a denominator of {value}")]
    DenominatorDivisible { value: String, p: u64 },
    #[error("{value} has positive valuation at the chosen prime above {p}")]
    PositiveValuation { value: String, p: u64 },
    #[error("{0} does not fit in 64 bits")]
    TooLarge(String),
    #[error("division by zero")]
    DivisionByZero,
}

pub type Result<T> = std::result::Result<T, ArithError>;

/// Convenience constructor for integral rationals.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Convenience constructor for `num / den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, valid for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
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
    'witness: for &a in &BASES {
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

fn require_odd_prime(p: u64) -> Result<()> {
    if p == 2 {
        return Err(ArithError::EvenPrime);
    }
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    Ok(())
}

/// Least non-negative residue of `u` modulo `m`.
pub fn residue(u: &BigInt, m: u64) -> u64 {
    u.mod_floor(&BigInt::from(m))
        .to_u64()
        .expect("residue is below the modulus")
}

/// Residue of a rational whose denominator is prime to `p`.
pub(crate) fn rational_residue(x: &Rational, p: u64) -> Result<u64> {
    let den = residue(x.denom(), p);
    if den == 0 {
        return Err(ArithError::DenominatorDivisible {
            value: x.to_string(),
            p,
        });
    }
    let num = residue(x.numer(), p);
    // p is prime, so den^(p-2) is the inverse.
    Ok(mul_mod(num, pow_mod(den, p - 2, p), p))
}

/// Legendre symbol (u/p) by Euler's criterion. Returns -1, 0 or 1.
pub fn legendre_symbol(u: &BigInt, p: u64) -> Result<i8> {
    require_odd_prime(p)?;
    Ok(euler_criterion(residue(u, p), p))
}

pub fn legendre_i64(u: i64, p: u64) -> Result<i8> {
    legendre_symbol(&BigInt::from(u), p)
}

fn euler_criterion(r: u64, p: u64) -> i8 {
    if r == 0 {
        return 0;
    }
    match pow_mod(r, (p - 1) / 2, p) {
        1 => 1,
        x if x == p - 1 => -1,
        x => unreachable!("Euler criterion gave {x} mod {p}"),
    }
}

/// Square root of `u` modulo the odd prime `p` by Tonelli–Shanks.
///
/// Returns the smaller of the two roots, `Some(0)` when `p | u`, and `None`
/// when `u` is a non-residue.
pub fn sqrt_mod(u: &BigInt, p: u64) -> Result<Option<u64>> {
    require_odd_prime(p)?;
    let n = residue(u, p);
    if n == 0 {
        return Ok(Some(0));
    }
    if euler_criterion(n, p) != 1 {
        return Ok(None);
    }
    let root = tonelli_shanks(n, p);
    assert_eq!(mul_mod(root, root, p), n, "Tonelli-Shanks produced a non-root");
    Ok(Some(root.min(p - root)))
}

fn tonelli_shanks(n: u64, p: u64) -> u64 {
    if p % 4 == 3 {
        return pow_mod(n, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p)
        .find(|&z| euler_criterion(z, p) == -1)
        .expect("a non-residue exists for odd p");
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(n, q, p);
    let mut r = pow_mod(n, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1u64 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

/// `x = p^exponent * unit_part` with `unit_part` a p-adic unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuationDecomposition {
    pub exponent: i64,
    pub unit_part: Rational,
}

impl ValuationDecomposition {
    pub fn reconstruct(&self, p: u64) -> Rational {
        let base = rat(p as i64);
        let scale = if self.exponent >= 0 {
            num_traits::pow(base, self.exponent as usize)
        } else {
            num_traits::pow(base, (-self.exponent) as usize).recip()
        };
        scale * &self.unit_part
    }
}

fn strip_factor(n: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut count = 0;
    let mut rest = n.clone();
    loop {
        let (q, r) = rest.div_rem(p);
        if !r.is_zero() {
            return (count, rest);
        }
        rest = q;
        count += 1;
    }
}

/// p-adic valuation of a nonzero rational together with its unit part.
pub fn padic_valuation(x: &Rational, p: u64) -> Result<ValuationDecomposition> {
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    if x.is_zero() {
        return Err(ArithError::ZeroInput);
    }
    let pb = BigInt::from(p);
    let (up, num) = strip_factor(x.numer(), &pb);
    let (down, den) = strip_factor(x.denom(), &pb);
    Ok(ValuationDecomposition {
        exponent: up - down,
        unit_part: Rational::new(num, den),
    })
}

/// An element `rational_part + sqrt2_part·√2` of ℚ(√2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub rational_part: Rational,
    pub sqrt2_part: Rational,
}

impl QSqrt2 {
    pub fn new(rational_part: Rational, sqrt2_part: Rational) -> Self {
        Self {
            rational_part,
            sqrt2_part,
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::new(r, Rational::zero())
    }

    pub fn sqrt2() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.rational_part.is_zero() && self.sqrt2_part.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.sqrt2_part.is_zero()
    }

    /// Galois conjugate, √2 ↦ −√2.
    pub fn conjugate(&self) -> Self {
        Self::new(self.rational_part.clone(), -self.sqrt2_part.clone())
    }

    /// Field norm `r² − 2s²`.
    pub fn norm(&self) -> Rational {
        &self.rational_part * &self.rational_part
            - rat(2) * &self.sqrt2_part * &self.sqrt2_part
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let c = self.conjugate();
        Ok(Self::new(c.rational_part / &n, c.sqrt2_part / &n))
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.rational_part * r, &self.sqrt2_part * r)
    }

    /// Sign of the real number obtained from the embedding √2 ↦ `sign`·1.414…
    ///
    /// Exact: compares `r²` with `2s²` instead of evaluating a float.
    pub fn sign_under_embedding(&self, sqrt2_sign: i8) -> i8 {
        let r = &self.rational_part;
        let s = if sqrt2_sign >= 0 {
            self.sqrt2_part.clone()
        } else {
            -self.sqrt2_part.clone()
        };
        let sign_of = |q: &Rational| -> i8 {
            match q.numer().sign() {
                Sign::Minus => -1,
                Sign::NoSign => 0,
                Sign::Plus => 1,
            }
        };
        let (sr, ss) = (sign_of(r), sign_of(&s));
        if sr == 0 {
            return ss;
        }
        if ss == 0 || sr == ss {
            return sr;
        }
        let r2 = r * r;
        let s2 = rat(2) * &s * &s;
        if r2 > s2 {
            sr
        } else {
            ss
        }
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rational_part.is_zero(), self.sqrt2_part.is_zero()) {
            (_, true) => write!(f, "{}", self.rational_part),
            (true, false) => write!(f, "{}√2", self.sqrt2_part),
            (false, false) => {
                if self.sqrt2_part.is_negative() {
                    write!(f, "{} - {}√2", self.rational_part, -self.sqrt2_part.clone())
                } else {
                    write!(f, "{} + {}√2", self.rational_part, self.sqrt2_part)
                }
            }
        }
    }
}

impl Add for &QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(
            &self.rational_part + &rhs.rational_part,
            &self.sqrt2_part + &rhs.sqrt2_part,
        )
    }
}

impl Sub for &QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2::new(
            &self.rational_part - &rhs.rational_part,
            &self.sqrt2_part - &rhs.sqrt2_part,
        )
    }
}

impl Mul for &QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: &QSqrt2) -> QSqrt2 {
        let (a, b) = (&self.rational_part, &self.sqrt2_part);
        let (c, d) = (&rhs.rational_part, &rhs.sqrt2_part);
        QSqrt2::new(a * c + rat(2) * b * d, a * d + b * c)
    }
}

impl Neg for &QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2::new(-self.rational_part.clone(), -self.sqrt2_part.clone())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for QSqrt2 {
            type Output = QSqrt2;
            fn $m(self, rhs: QSqrt2) -> QSqrt2 {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        -&self
    }
}

fn check_sqrt2_root(p: u64, root: u64) -> Result<()> {
    require_odd_prime(p)?;
    if root >= p || mul_mod(root, root, p) != 2 % p {
        return Err(ArithError::InvalidRoot { root, p });
    }
    Ok(())
}

/// Image of `x` in 𝔽_p under the embedding ℚ(√2) → ℚ_p with √2 ↦ `root`.
pub fn embed_sqrt2_mod_p(x: &QSqrt2, p: u64, root: u64) -> Result<u64> {
    check_sqrt2_root(p, root)?;
    let divisible = |r: &Rational| residue(r.denom(), p) == 0;
    if divisible(&x.rational_part) || divisible(&x.sqrt2_part) {
        return Err(ArithError::DenominatorDivisible {
            value: x.to_string(),
            p,
        });
    }
    let r = rational_residue(&x.rational_part, p)?;
    let s = rational_residue(&x.sqrt2_part, p)?;
    let image = (r + mul_mod(s, root, p)) % p;
    if image == 0 {
        return Err(ArithError::PositiveValuation {
            value: x.to_string(),
            p,
        });
    }
    Ok(image)
}

/// Valuation at the prime above `p` selected by `root`, and the residue of the
/// unit part. Only the common power of `p` in both coordinates is removed, so
/// elements whose unit part still maps to zero are rejected.
pub fn sqrt2_local_decomposition(x: &QSqrt2, p: u64, root: u64) -> Result<(i64, u64)> {
    check_sqrt2_root(p, root)?;
    if x.is_zero() {
        return Err(ArithError::ZeroInput);
    }
    let val = |r: &Rational| -> Result<i64> {
        if r.is_zero() {
            Ok(i64::MAX)
        } else {
            Ok(padic_valuation(r, p)?.exponent)
        }
    };
    let m = val(&x.rational_part)?.min(val(&x.sqrt2_part)?);
    let shift = ValuationDecomposition {
        exponent: -m,
        unit_part: Rational::one(),
    }
    .reconstruct(p);
    let unit = x.scale(&shift);
    Ok((m, embed_sqrt2_mod_p(&unit, p, root)?))
}

/// Is `x` a square in ℚ?
pub fn is_rational_square(x: &Rational) -> bool {
    if x.is_negative() {
        return false;
    }
    let is_sq = |n: &BigInt| {
        let r = n.sqrt();
        &r * &r == *n
    };
    is_sq(x.numer()) && is_sq(x.denom())
}

fn rational_sqrt(x: &Rational) -> Option<Rational> {
    if !is_rational_square(x) {
        return None;
    }
    Some(Rational::new(x.numer().sqrt(), x.denom().sqrt()))
}

/// Is `x` a square in ℚ(√2)?
///
/// For `x = r + s√2` with `s ≠ 0`, a root `u + v√2` satisfies `u² + 2v² = r`
/// and `2uv = s`, forcing `N(x)` to be a rational square `t²` and
/// `u² = (r ± t)/2`.
pub fn is_square_in_qsqrt2(x: &QSqrt2) -> bool {
    if x.is_zero() {
        return true;
    }
    if x.is_rational() {
        let r = &x.rational_part;
        return is_rational_square(r) || is_rational_square(&(r * rat(2)));
    }
    let t = match rational_sqrt(&x.norm()) {
        Some(t) => t,
        None => return false,
    };
    let half = ratio(1, 2);
    for cand in [(&x.rational_part + &t) * &half, (&x.rational_part - &t) * &half] {
        if let Some(u) = rational_sqrt(&cand) {
            if u.is_zero() {
                continue;
            }
            let v = &x.sqrt2_part / (rat(2) * &u);
            let root = QSqrt2::new(u, v);
            if &root * &root == *x {
                return true;
            }
        }
    }
    false
}

/// Prime factorisation of a 64-bit integer as (prime, exponent), ascending.
pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    collect_factors(n, &mut primes);
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

fn collect_factors(mut n: u64, out: &mut Vec<u64>) {
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
    }
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    collect_factors(d, out);
    collect_factors(n / d, out);
}

fn pollard_brent(n: u64) -> u64 {
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

/// Prime factors of a nonzero integer that fits in 64 bits (sign ignored).
pub fn factor_bigint(n: &BigInt) -> Result<Vec<(u64, u32)>> {
    if n.is_zero() {
        return Err(ArithError::ZeroInput);
    }
    let m = n
        .abs()
        .to_u64()
        .ok_or_else(|| ArithError::TooLarge(n.to_string()))?;
    Ok(factor_u64(m))
}
