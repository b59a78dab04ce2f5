//! Hilbert symbols at the places of ℚ, Hasse–Witt invariants, discriminant
//! classes and the local equivalence test for diagonal forms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact_arith::{
    factor_bigint, is_prime, legendre_symbol, padic_valuation, residue, ArithError, Rational,
};
use crate::form_families::QuadraticForm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("Hilbert symbol of a zero argument")]
    ZeroArgument,
    #[error("odd-prime place requires an odd prime, got {0}")]
    BadPlace(u64),
    #[error("local equivalence is only defined for forms over the rationals")]
    NotRational,
}

pub type Result<T> = std::result::Result<T, InvariantError>;

/// A place of ℚ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    OddPrime(u64),
    Dyadic,
}

impl Place {
    pub fn odd_prime(p: u64) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(InvariantError::BadPlace(p));
        }
        Ok(Place::OddPrime(p))
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "R"),
            Place::OddPrime(p) => write!(f, "Q_{p}"),
            Place::Dyadic => write!(f, "Q_2"),
        }
    }
}

fn nonzero(a: &Rational, b: &Rational) -> Result<()> {
    if a.is_zero() || b.is_zero() {
        Err(InvariantError::ZeroArgument)
    } else {
        Ok(())
    }
}

pub fn hilbert_real(a: &Rational, b: &Rational) -> Result<i8> {
    nonzero(a, b)?;
    Ok(if a.is_negative() && b.is_negative() { -1 } else { 1 })
}

/// Legendre symbol of a p-adic unit given as a rational: `(num/p)(den/p)`.
fn unit_legendre(u: &Rational, p: u64) -> Result<i8> {
    Ok(legendre_symbol(u.numer(), p)? * legendre_symbol(u.denom(), p)?)
}

/// Local data of a nonzero rational at one place: enough to evaluate any
/// Hilbert symbol involving it.
#[derive(Clone, Copy)]
enum Local {
    Real { negative: bool },
    /// Valuation parity and Legendre symbol of the unit part.
    Odd { odd_valuation: bool, unit: i8 },
    /// Valuation parity and unit part mod 8.
    Dyadic { odd_valuation: bool, unit: u64 },
}

fn local_data(x: &Rational, place: Place) -> Result<Local> {
    Ok(match place {
        Place::Real => Local::Real {
            negative: x.is_negative(),
        },
        Place::OddPrime(p) => {
            let d = padic_valuation(x, p)?;
            Local::Odd {
                odd_valuation: d.exponent.rem_euclid(2) == 1,
                unit: unit_legendre(&d.unit_part, p)?,
            }
        }
        Place::Dyadic => {
            let d = padic_valuation(x, 2)?;
            Local::Dyadic {
                odd_valuation: d.exponent.rem_euclid(2) == 1,
                unit: unit_mod_8(&d.unit_part),
            }
        }
    })
}

/// `minus_one` is `(−1/p)`, only read at odd places.
fn pair_symbol(a: Local, b: Local, minus_one: i8) -> i8 {
    match (a, b) {
        (Local::Real { negative: x }, Local::Real { negative: y }) => {
            if x && y {
                -1
            } else {
                1
            }
        }
        (Local::Odd { odd_valuation: n, unit: u }, Local::Odd { odd_valuation: m, unit: v }) => {
            let mut s = 1;
            if n && m {
                s *= minus_one;
            }
            if m {
                s *= u;
            }
            if n {
                s *= v;
            }
            s
        }
        (Local::Dyadic { odd_valuation: n, unit: u }, Local::Dyadic { odd_valuation: m, unit: v }) => {
            let eps = |x: u64| ((x - 1) / 2) % 2;
            let omega = |x: u64| ((x * x - 1) / 8) % 2;
            let e = eps(u) * eps(v) + u64::from(n) * omega(v) + u64::from(m) * omega(u);
            if e % 2 == 0 {
                1
            } else {
                -1
            }
        }
        _ => unreachable!("local data from different places"),
    }
}

fn check_place(place: Place) -> Result<i8> {
    match place {
        Place::OddPrime(p) if p == 2 || !is_prime(p) => Err(InvariantError::BadPlace(p)),
        Place::OddPrime(p) => Ok(legendre_symbol(&BigInt::from(-1), p)?),
        _ => Ok(1),
    }
}

/// `(a, b)` in ℚ_p for odd p, with `a = u p^n`, `b = v p^m`:
/// `(−1/p)^{nm} (u/p)^m (v/p)^n`.
pub fn hilbert_odd_p(a: &Rational, b: &Rational, p: u64) -> Result<i8> {
    hilbert(a, b, Place::OddPrime(p))
}

/// A 2-adic unit given as a rational with odd numerator and denominator,
/// reduced modulo 8. Odd `d` satisfies `d² ≡ 1 (mod 8)`, so `n/d ≡ n·d`.
fn unit_mod_8(u: &Rational) -> u64 {
    (residue(u.numer(), 8) * residue(u.denom(), 8)) % 8
}

/// `(a, b)` in ℚ_2: `(−1)^{ε(u)ε(v) + n·ω(v) + m·ω(u)}`.
pub fn hilbert_dyadic(a: &Rational, b: &Rational) -> Result<i8> {
    hilbert(a, b, Place::Dyadic)
}

pub fn hilbert(a: &Rational, b: &Rational, place: Place) -> Result<i8> {
    nonzero(a, b)?;
    let minus_one = check_place(place)?;
    Ok(pair_symbol(local_data(a, place)?, local_data(b, place)?, minus_one))
}

/// `ε(q) = ∏_{i<j} (a_i, a_j)` at the given place. Empty and singleton lists give 1.
pub fn hasse_witt(coefficients: &[Rational], place: Place) -> Result<i8> {
    if coefficients.iter().any(Zero::is_zero) {
        return Err(InvariantError::ZeroArgument);
    }
    let minus_one = check_place(place)?;
    let data = coefficients
        .iter()
        .map(|c| local_data(c, place))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = 1;
    for (i, &a) in data.iter().enumerate() {
        for &b in &data[i + 1..] {
            acc *= pair_symbol(a, b, minus_one);
        }
    }
    Ok(acc)
}

/// Square-free integer representative of `∏ a_i` modulo `(ℚ*)²`.
///
/// Each coefficient is factored separately (numerator and denominator must
/// fit in 64 bits), so the product itself may be arbitrarily large.
pub fn discriminant_class(coefficients: &[Rational]) -> Result<BigInt> {
    let mut parity: BTreeMap<u64, u32> = BTreeMap::new();
    let mut negative = false;
    for a in coefficients {
        if a.is_zero() {
            return Err(InvariantError::ZeroArgument);
        }
        negative ^= a.is_negative();
        for part in [a.numer(), a.denom()] {
            for (p, e) in factor_bigint(part)? {
                *parity.entry(p).or_default() += e;
            }
        }
    }
    let mut d = BigInt::one();
    for (p, e) in parity {
        if e % 2 == 1 {
            d *= p;
        }
    }
    Ok(if negative { -d } else { d })
}

/// Rank, discriminant class and Hasse–Witt invariant of a diagonal form at one place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalInvariantRecord {
    pub rank: usize,
    pub discriminant_class: BigInt,
    pub epsilon: i8,
}

pub fn local_invariant_record(coefficients: &[Rational], place: Place) -> Result<LocalInvariantRecord> {
    Ok(LocalInvariantRecord {
        rank: coefficients.len(),
        discriminant_class: discriminant_class(coefficients)?,
        epsilon: hasse_witt(coefficients, place)?,
    })
}

/// Class of a nonzero rational in `K*/(K*)²` for the completion `K` at `place`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalSquareClass {
    /// sign
    Real(i8),
    /// valuation parity, Legendre symbol of the unit part
    OddPrime { odd_valuation: bool, unit_symbol: i8 },
    /// valuation parity, unit part mod 8
    Dyadic { odd_valuation: bool, unit_mod_8: u8 },
}

pub fn local_square_class(x: &Rational, place: Place) -> Result<LocalSquareClass> {
    if x.is_zero() {
        return Err(InvariantError::ZeroArgument);
    }
    Ok(match place {
        Place::Real => LocalSquareClass::Real(if x.is_negative() { -1 } else { 1 }),
        Place::OddPrime(p) => {
            let d = padic_valuation(x, p)?;
            LocalSquareClass::OddPrime {
                odd_valuation: d.exponent.rem_euclid(2) == 1,
                unit_symbol: unit_legendre(&d.unit_part, p)?,
            }
        }
        Place::Dyadic => {
            let d = padic_valuation(x, 2)?;
            LocalSquareClass::Dyadic {
                odd_valuation: d.exponent.rem_euclid(2) == 1,
                unit_mod_8: unit_mod_8(&d.unit_part) as u8,
            }
        }
    })
}

/// Local equivalence of two diagonal forms over ℚ at one place: same rank,
/// same discriminant in the local square class group, same ε.
pub fn locally_equivalent(q1: &QuadraticForm, q2: &QuadraticForm, place: Place) -> Result<bool> {
    let (c1, c2) = match (q1.rational_coefficients(), q2.rational_coefficients()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(InvariantError::NotRational),
    };
    if c1.len() != c2.len() {
        return Ok(false);
    }
    let d1: Rational = c1.iter().product();
    let d2: Rational = c2.iter().product();
    if local_square_class(&d1, place)? != local_square_class(&d2, place)? {
        return Ok(false);
    }
    Ok(hasse_witt(c1, place)? == hasse_witt(c2, place)?)
}
