//! The diagonal families
//!
//! ```text
//! q_a = a x₁² + x₂² + … + x_n² − 2 x_{n+1}²      over ℚ
//! r_a = a x₁² + x₂² + … + x_n² − √2 x_{n+1}²     over ℚ(√2)
//! ```
//!
//! together with their local invariants, one-sided non-commensurability
//! certificates and the prime searches that feed the building blocks.
//!
//! A certificate is only ever produced from an invariant of the commensurability
//! class `{λ·f : λ ∈ k*}`: the discriminant square class in even rank, or the
//! Hasse–Witt invariant at a prime `p` with `(−1/p) = 1` in odd rank (there
//! `(λ, λ)_p = 1` for every λ, so ε is scale invariant).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact_arith::{
    factor_bigint, is_prime, is_square_in_qsqrt2, legendre_i64, legendre_symbol, padic_valuation,
    pow_mod, rat, sqrt2_local_decomposition, sqrt_mod, ArithError, QSqrt2, Rational,
    ValuationDecomposition,
};
use crate::local_invariants::{discriminant_class, hasse_witt, InvariantError, Place};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error("forms need n ≥ 3, got n = {0}")]
    DimensionTooSmall(usize),
    #[error("family parameter must be positive")]
    ZeroParameter,
    #[error("quadratic form has a zero coefficient")]
    ZeroCoefficient,
    #[error("quadratic form must have at least one variable")]
    Empty,
    #[error("cannot drop a variable from a rank-1 form")]
    RankOne,
    #[error("forms are over different fields")]
    MixedField,
    #[error("forms have different ranks ({0} and {1})")]
    RankMismatch(usize, usize),
    #[error("prime {p} unsuitable: {reason}")]
    UnsuitablePrime { p: u64, reason: &'static str },
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, FormError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTag {
    Rational,
    QSqrt2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coefficients {
    Rational(Vec<Rational>),
    QSqrt2(Vec<QSqrt2>),
}

/// A nondegenerate diagonal quadratic form over ℚ or ℚ(√2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    coefficients: Coefficients,
}

impl QuadraticForm {
    pub fn rational(coefficients: Vec<Rational>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(FormError::Empty);
        }
        if coefficients.iter().any(Zero::is_zero) {
            return Err(FormError::ZeroCoefficient);
        }
        Ok(Self {
            coefficients: Coefficients::Rational(coefficients),
        })
    }

    pub fn over_qsqrt2(coefficients: Vec<QSqrt2>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(FormError::Empty);
        }
        if coefficients.iter().any(QSqrt2::is_zero) {
            return Err(FormError::ZeroCoefficient);
        }
        Ok(Self {
            coefficients: Coefficients::QSqrt2(coefficients),
        })
    }

    pub fn rank(&self) -> usize {
        match &self.coefficients {
            Coefficients::Rational(c) => c.len(),
            Coefficients::QSqrt2(c) => c.len(),
        }
    }

    pub fn field_tag(&self) -> FieldTag {
        match &self.coefficients {
            Coefficients::Rational(_) => FieldTag::Rational,
            Coefficients::QSqrt2(_) => FieldTag::QSqrt2,
        }
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn rational_coefficients(&self) -> Option<&[Rational]> {
        match &self.coefficients {
            Coefficients::Rational(c) => Some(c),
            Coefficients::QSqrt2(_) => None,
        }
    }

    pub fn qsqrt2_coefficients(&self) -> Option<&[QSqrt2]> {
        match &self.coefficients {
            Coefficients::QSqrt2(c) => Some(c),
            Coefficients::Rational(_) => None,
        }
    }

    /// (positive, negative) counts. For ℚ(√2) forms `sqrt2_sign` picks the real
    /// embedding √2 ↦ ±1.414…; it is ignored for rational forms.
    pub fn signature(&self, sqrt2_sign: i8) -> (usize, usize) {
        let signs: Vec<i8> = match &self.coefficients {
            Coefficients::Rational(c) => c.iter().map(|x| if x.is_negative() { -1 } else { 1 }).collect(),
            Coefficients::QSqrt2(c) => c.iter().map(|x| x.sign_under_embedding(sqrt2_sign)).collect(),
        };
        let pos = signs.iter().filter(|&&s| s > 0).count();
        (pos, signs.len() - pos)
    }

    /// Value at an integer vector. Only meaningful for rational forms.
    pub fn evaluate(&self, v: &[BigInt]) -> Option<Rational> {
        let c = self.rational_coefficients()?;
        if v.len() != c.len() {
            return None;
        }
        Some(
            c.iter()
                .zip(v)
                .map(|(a, x)| a * Rational::from_integer(x * x))
                .sum(),
        )
    }

    fn discriminant(&self) -> QSqrt2 {
        match &self.coefficients {
            Coefficients::Rational(c) => QSqrt2::from_rational(c.iter().product()),
            Coefficients::QSqrt2(c) => c.iter().fold(QSqrt2::one(), |acc, x| &acc * x),
        }
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match &self.coefficients {
            Coefficients::Rational(c) => c.iter().map(ToString::to_string).collect(),
            Coefficients::QSqrt2(c) => c.iter().map(ToString::to_string).collect(),
        };
        write!(f, "<{}>", parts.join(", "))
    }
}

fn check_family_args(a: u64, n: usize) -> Result<()> {
    if a == 0 {
        return Err(FormError::ZeroParameter);
    }
    if n < 3 {
        return Err(FormError::DimensionTooSmall(n));
    }
    Ok(())
}

/// `q_a = a x₁² + x₂² + … + x_n² − 2 x_{n+1}²`, rank n+1.
pub fn make_q(a: u64, n: usize) -> Result<QuadraticForm> {
    check_family_args(a, n)?;
    let mut c = vec![Rational::from_integer(BigInt::from(a))];
    c.extend(std::iter::repeat(Rational::one()).take(n - 1));
    c.push(rat(-2));
    QuadraticForm::rational(c)
}

/// `r_a = a x₁² + x₂² + … + x_n² − √2 x_{n+1}²`, rank n+1.
pub fn make_r(a: u64, n: usize) -> Result<QuadraticForm> {
    check_family_args(a, n)?;
    let mut c = vec![QSqrt2::from_rational(Rational::from_integer(BigInt::from(a)))];
    c.extend(std::iter::repeat(QSqrt2::one()).take(n - 1));
    c.push(-QSqrt2::sqrt2());
    QuadraticForm::over_qsqrt2(c)
}

/// Restriction to `{x₁ = 0}`.
pub fn restrict_to_hyperplane(f: &QuadraticForm) -> Result<QuadraticForm> {
    if f.rank() < 2 {
        return Err(FormError::RankOne);
    }
    match &f.coefficients {
        Coefficients::Rational(c) => QuadraticForm::rational(c[1..].to_vec()),
        Coefficients::QSqrt2(c) => QuadraticForm::over_qsqrt2(c[1..].to_vec()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsotropyWitness {
    Vector(Vec<BigInt>),
    /// Bounded search exhausted; rank ≥ 5 indefinite forms over ℚ are isotropic regardless.
    MeyerGuaranteed,
}

pub const ISOTROPY_SEARCH_BOUND: i64 = 10;
pub const ISOTROPY_SEARCH_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsotropySearch {
    Found(Vec<BigInt>),
    /// Every vector with coordinates in [−bound, bound] was tried.
    NoneWithinBound,
    /// The visit budget ran out first.
    BudgetExhausted,
}

/// Search for a nonzero integer zero of a diagonal rational form.
///
/// Vectors are visited by increasing sup-norm. Within one sup-norm the
/// coordinates are run as an odometer over the values 0, 1, −1, 2, −2, …,
/// with x₁ the slowest digit, then x_r, x_{r−1}, …, x₂; so zeros on the
/// hyperplane `x₁ = 0` are found first.
pub fn find_isotropic_vector(coefficients: &[Rational], bound: i64, budget: usize) -> IsotropySearch {
    let rank = coefficients.len();
    if rank == 0 {
        return IsotropySearch::NoneWithinBound;
    }
    let lcm = coefficients
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Option<Vec<i128>> = coefficients
        .iter()
        .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer().to_i128())
        .collect();
    let Some(ints) = ints else {
        return IsotropySearch::BudgetExhausted;
    };
    // digit position 0 is the slowest
    let mut order = vec![0usize];
    order.extend((1..rank).rev());
    let mut visited = 0usize;
    for b in 1..=bound {
        let values: Vec<i64> = std::iter::once(0)
            .chain((1..=b).flat_map(|x| [x, -x]))
            .collect();
        let mut digits = vec![0usize; rank];
        loop {
            let sup = digits.iter().map(|&d| values[d].abs()).max().unwrap_or(0);
            if sup == b {
                visited += 1;
                if visited > budget {
                    return IsotropySearch::BudgetExhausted;
                }
                let mut acc: i128 = 0;
                let mut overflow = false;
                for (pos, &coord) in order.iter().enumerate() {
                    let x = values[digits[pos]] as i128;
                    match ints[coord].checked_mul(x * x).and_then(|t| acc.checked_add(t)) {
                        Some(s) => acc = s,
                        None => {
                            overflow = true;
                            break;
                        }
                    }
                }
                if !overflow && acc == 0 {
                    let mut v = vec![BigInt::zero(); rank];
                    for (pos, &coord) in order.iter().enumerate() {
                        v[coord] = BigInt::from(values[digits[pos]]);
                    }
                    return IsotropySearch::Found(v);
                }
            }
            // increment, fastest digit last
            let mut carry = true;
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < values.len() {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
    }
    IsotropySearch::NoneWithinBound
}

/// A nonzero rational zero of `q_a`: the substitution `(0, 1, 1, 1)` for n = 3,
/// otherwise the first hit of the bounded search.
pub fn isotropy_witness_q(a: u64, n: usize) -> Result<IsotropyWitness> {
    let q = make_q(a, n)?;
    let witness = if n == 3 {
        IsotropyWitness::Vector([0, 1, 1, 1].iter().map(|&x| BigInt::from(x)).collect())
    } else {
        match find_isotropic_vector(
            q.rational_coefficients().expect("q_a is rational"),
            ISOTROPY_SEARCH_BOUND,
            ISOTROPY_SEARCH_BUDGET,
        ) {
            IsotropySearch::Found(v) => IsotropyWitness::Vector(v),
            _ => IsotropyWitness::MeyerGuaranteed,
        }
    };
    if let IsotropyWitness::Vector(v) = &witness {
        let value = q.evaluate(v).expect("length matches rank");
        if !value.is_zero() || v.iter().all(Zero::is_zero) {
            return Err(FormError::InvariantViolation(format!(
                "isotropy witness {v:?} fails for q_{a}"
            )));
        }
    }
    Ok(witness)
}

/// A Hasse–Witt value together with whether the family's closed form applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EpsilonEvaluation {
    pub value: i8,
    /// false when the closed form's hypotheses fail and only the generic
    /// product of Hilbert symbols was used
    pub closed_form: bool,
}

fn parity_sign(m: i64) -> i8 {
    if m.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// `ε_{ℚ_p}(q_a)`. When `p` is odd with `(−1/p) = 1` and `(2/p) = −1` this is
/// `(−1)^{v_p(a)}`, which is cross-checked against the generic product.
pub fn epsilon_q_at(a: u64, n: usize, p: u64) -> Result<EpsilonEvaluation> {
    let q = make_q(a, n)?;
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p).into());
    }
    let place = if p == 2 { Place::Dyadic } else { Place::OddPrime(p) };
    let generic = hasse_witt(q.rational_coefficients().expect("rational"), place)?;
    let applies = p != 2 && legendre_i64(-1, p)? == 1 && legendre_i64(2, p)? == -1;
    if !applies {
        return Ok(EpsilonEvaluation {
            value: generic,
            closed_form: false,
        });
    }
    let m = padic_valuation(&rat(a as i64), p)?.exponent;
    let closed = parity_sign(m);
    if closed != generic {
        return Err(FormError::InvariantViolation(format!(
            "ε(q_{a}) at {p}: closed form {closed}, product {generic}"
        )));
    }
    Ok(EpsilonEvaluation {
        value: closed,
        closed_form: true,
    })
}

/// Hasse–Witt invariant of a ℚ(√2) form at the prime above `p` chosen by
/// `root` (√2 ↦ root). Each coefficient is replaced by `p^m·u` where `u` is
/// the residue of its unit part; the odd-p symbol only sees those.
pub fn epsilon_qsqrt2_at(coefficients: &[QSqrt2], p: u64, root: u64) -> Result<i8> {
    let local: Vec<Rational> = coefficients
        .iter()
        .map(|c| {
            let (m, u) = sqrt2_local_decomposition(c, p, root)?;
            Ok(ValuationDecomposition {
                exponent: m,
                unit_part: rat(u as i64),
            }
            .reconstruct(p))
        })
        .collect::<Result<_>>()?;
    Ok(hasse_witt(&local, Place::OddPrime(p))?)
}

fn require_one_mod_eight(p: u64) -> Result<()> {
    if !is_prime(p) || p % 8 != 1 {
        return Err(FormError::UnsuitablePrime {
            p,
            reason: "expected a prime ≡ 1 (mod 8)",
        });
    }
    Ok(())
}

/// `ε_{ℚ_p}(r_a)` for `p ≡ 1 (mod 8)` under √2 ↦ `root`. The closed form is
/// `(root/p)^{v_p(a)}` and is cross-checked against the generic product.
pub fn epsilon_r_at(a: u64, n: usize, p: u64, root: u64) -> Result<EpsilonEvaluation> {
    let r = make_r(a, n)?;
    require_one_mod_eight(p)?;
    let generic = epsilon_qsqrt2_at(r.qsqrt2_coefficients().expect("q_sqrt2"), p, root)?;
    let m = padic_valuation(&rat(a as i64), p)?.exponent;
    let sqrt2_symbol = legendre_i64(root as i64, p)?;
    let closed = if sqrt2_symbol == -1 { parity_sign(m) } else { 1 };
    if closed != generic {
        return Err(FormError::InvariantViolation(format!(
            "ε(r_{a}) at {p} with √2 ↦ {root}: closed form {closed}, product {generic}"
        )));
    }
    Ok(EpsilonEvaluation {
        value: closed,
        closed_form: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    DiscriminantRatio,
    EpsilonAtPrime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateDetail {
    /// `D(f1)/D(f2)`, reduced to its square-free class for rational forms,
    /// which is not a square in the base field.
    DiscriminantRatio { ratio: QSqrt2 },
    /// ε of each form at the witness prime. `root` selects the prime of
    /// ℚ(√2) above it for ℚ(√2) forms.
    Epsilon { first: i8, second: i8, root: Option<u64> },
}

/// Proof that `f1` is not isometric to `λ·f2` for any λ in the base field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonCommensurabilityCertificate {
    pub method: CertificateMethod,
    pub witness_prime: Option<u64>,
    pub detail: CertificateDetail,
}

impl fmt::Display for NonCommensurabilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.detail, self.witness_prime) {
            (CertificateDetail::DiscriminantRatio { ratio }, _) => write!(f, "disc ratio {ratio}"),
            (CertificateDetail::Epsilon { first, second, .. }, Some(p)) => {
                write!(f, "eps@{p} {first:+}/{second:+}")
            }
            (CertificateDetail::Epsilon { first, second, .. }, None) => {
                write!(f, "eps {first:+}/{second:+}")
            }
        }
    }
}

fn rational_primes(coeffs: &[Rational]) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for c in coeffs {
        for part in [c.numer(), c.denom()] {
            for (p, _) in factor_bigint(part)? {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn qsqrt2_primes(coeffs: &[QSqrt2]) -> Result<Vec<u64>> {
    let norms: Vec<Rational> = coeffs.iter().map(QSqrt2::norm).collect();
    rational_primes(&norms)
}

fn merge_candidates(first: Vec<u64>, second: Vec<u64>, keep: impl Fn(u64) -> bool) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for p in first.into_iter().chain(second) {
        if keep(p) && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// One-sided commensurability test.
///
/// Even rank: the discriminant class is scale invariant, so a non-square ratio
/// `D(f1)/D(f2)` certifies. Odd rank: ε at a prime with `(−1/p) = 1` is scale
/// invariant; candidate primes are those where some coefficient is not a unit,
/// taken first from `f1` then from `f2`, ascending within each. Rational forms
/// use `p ≡ 1 (mod 4)`; ℚ(√2) forms use `p ≡ 1 (mod 8)` and both primes above p.
///
/// `Ok(None)` means inconclusive, never "commensurable".
pub fn noncommensurability_certificate(
    f1: &QuadraticForm,
    f2: &QuadraticForm,
) -> Result<Option<NonCommensurabilityCertificate>> {
    if f1.field_tag() != f2.field_tag() {
        return Err(FormError::MixedField);
    }
    if f1.rank() != f2.rank() {
        return Err(FormError::RankMismatch(f1.rank(), f2.rank()));
    }
    if f1.rank() % 2 == 0 {
        return discriminant_certificate(f1, f2);
    }
    match (&f1.coefficients, &f2.coefficients) {
        (Coefficients::Rational(c1), Coefficients::Rational(c2)) => {
            let candidates =
                merge_candidates(rational_primes(c1)?, rational_primes(c2)?, |p| p % 4 == 1);
            for p in candidates {
                let place = Place::OddPrime(p);
                let (e1, e2) = (hasse_witt(c1, place)?, hasse_witt(c2, place)?);
                if e1 != e2 {
                    return Ok(Some(NonCommensurabilityCertificate {
                        method: CertificateMethod::EpsilonAtPrime,
                        witness_prime: Some(p),
                        detail: CertificateDetail::Epsilon {
                            first: e1,
                            second: e2,
                            root: None,
                        },
                    }));
                }
            }
            Ok(None)
        }
        (Coefficients::QSqrt2(c1), Coefficients::QSqrt2(c2)) => {
            let candidates =
                merge_candidates(qsqrt2_primes(c1)?, qsqrt2_primes(c2)?, |p| p % 8 == 1);
            for p in candidates {
                let root = sqrt_mod(&BigInt::from(2), p)?
                    .ok_or(ArithError::TwoNotSquare(p))?;
                for r in [root, p - root] {
                    let e1 = epsilon_qsqrt2_at(c1, p, r)?;
                    let e2 = epsilon_qsqrt2_at(c2, p, r)?;
                    if e1 != e2 {
                        return Ok(Some(NonCommensurabilityCertificate {
                            method: CertificateMethod::EpsilonAtPrime,
                            witness_prime: Some(p),
                            detail: CertificateDetail::Epsilon {
                                first: e1,
                                second: e2,
                                root: Some(r),
                            },
                        }));
                    }
                }
            }
            Ok(None)
        }
        _ => unreachable!("field tags already compared"),
    }
}

fn discriminant_certificate(
    f1: &QuadraticForm,
    f2: &QuadraticForm,
) -> Result<Option<NonCommensurabilityCertificate>> {
    let ratio = match (&f1.coefficients, &f2.coefficients) {
        (Coefficients::Rational(c1), Coefficients::Rational(c2)) => {
            // D(f2) and 1/D(f2) share a square class
            let both: Vec<Rational> = c1.iter().chain(c2).cloned().collect();
            let class = discriminant_class(&both)?;
            if class.is_one() {
                return Ok(None);
            }
            QSqrt2::from_rational(Rational::from_integer(class))
        }
        _ => {
            let ratio = &f1.discriminant() * &f2.discriminant().inverse()?;
            if is_square_in_qsqrt2(&ratio) {
                return Ok(None);
            }
            ratio
        }
    };
    Ok(Some(NonCommensurabilityCertificate {
        method: CertificateMethod::DiscriminantRatio,
        witness_prime: None,
        detail: CertificateDetail::DiscriminantRatio { ratio },
    }))
}

pub const COND_MINUS_ONE: &str = "(-1/p)";
pub const COND_TWO: &str = "(2/p)";
pub const COND_SQRT2: &str = "(sqrt2/p)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeSearchReport {
    pub prime: u64,
    pub conditions: BTreeMap<String, i8>,
    /// `prime = x² + 64y²` when such a pair exists.
    pub gauss_representation: Option<(u64, u64)>,
}

/// First `count` primes ≡ 5 (mod 8), with `(−1/p)` and `(2/p)` recorded.
pub fn search_primes_isotropic(count: usize) -> Vec<PrimeSearchReport> {
    (3u64..)
        .filter(|&p| p % 8 == 5 && is_prime(p))
        .take(count)
        .map(|p| {
            let mut conditions = BTreeMap::new();
            conditions.insert(COND_MINUS_ONE.to_string(), legendre_i64(-1, p).expect("odd prime"));
            conditions.insert(COND_TWO.to_string(), legendre_i64(2, p).expect("odd prime"));
            PrimeSearchReport {
                prime: p,
                conditions,
                gauss_representation: None,
            }
        })
        .collect()
}

/// `p = x² + 64y²` with `x, y ≥ 0`, searched over `x² ≤ p`.
pub fn gauss_representation(p: u64) -> Option<(u64, u64)> {
    (0u64..)
        .take_while(|x| x * x <= p)
        .find_map(|x| {
            let rest = p - x * x;
            if rest % 64 != 0 {
                return None;
            }
            let y2 = rest / 64;
            let y = y2.sqrt();
            (y * y == y2).then_some((x, y))
        })
}

/// Is 2 a fourth power modulo `p ≡ 1 (mod 4)`? Decided by `2^{(p−1)/4} ≡ 1`.
pub fn two_is_fourth_power(p: u64) -> bool {
    pow_mod(2, (p - 1) / 4, p) == 1
}

/// `(√2/p)` for a prime with `(2/p) = 1`; independent of the root when `(−1/p) = 1`.
pub fn sqrt2_symbol(p: u64) -> Result<i8> {
    let root = sqrt_mod(&BigInt::from(2), p)?.ok_or(ArithError::TwoNotSquare(p))?;
    Ok(legendre_symbol(&BigInt::from(root), p)?)
}

/// First `count` primes `p ≡ 1 (mod 8)` for which 2 is not a fourth power mod p.
///
/// Every candidate is decided twice, by the fourth-power test and by the
/// absence of `p = x² + 64y²`; the two must agree, as must `(√2/p)`.
pub fn search_primes_anisotropic(count: usize) -> Result<Vec<PrimeSearchReport>> {
    let mut out = Vec::with_capacity(count);
    let mut p = 1u64;
    while out.len() < count {
        p += 8;
        if !is_prime(p) {
            continue;
        }
        let fourth = two_is_fourth_power(p);
        let gauss = gauss_representation(p);
        let sqrt2 = sqrt2_symbol(p)?;
        if fourth != gauss.is_some() || fourth != (sqrt2 == 1) {
            return Err(FormError::InvariantViolation(format!(
                "criteria disagree at {p}: fourth power {fourth}, gauss {gauss:?}, (√2/p) {sqrt2}"
            )));
        }
        if fourth {
            continue;
        }
        let mut conditions = BTreeMap::new();
        conditions.insert(COND_MINUS_ONE.to_string(), legendre_i64(-1, p)?);
        conditions.insert(COND_TWO.to_string(), legendre_i64(2, p)?);
        conditions.insert(COND_SQRT2.to_string(), sqrt2);
        out.push(PrimeSearchReport {
            prime: p,
            conditions,
            gauss_representation: gauss,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::ratio;
    use proptest::prelude::*;

    const ISOTROPIC: [u64; 6] = [5, 13, 29, 37, 53, 61];
    const ANISOTROPIC: [u64; 6] = [17, 41, 97, 137, 193, 241];

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn q_family_shape() {
        let q = make_q(5, 4).unwrap();
        assert_eq!(q.rational_coefficients().unwrap(), &[rat(5), rat(1), rat(1), rat(1), rat(-2)]);
        assert_eq!(q.rank(), 5);
        let q1 = make_q(1, 3).unwrap();
        assert_eq!(q1.rational_coefficients().unwrap(), &[rat(1), rat(1), rat(1), rat(-2)]);
        assert_eq!(make_q(13, 4).unwrap().signature(1), (4, 1));
        assert_eq!(make_q(5, 2), Err(FormError::DimensionTooSmall(2)));
        assert_eq!(make_q(0, 4), Err(FormError::ZeroParameter));
    }

    #[test]
    fn r_family_shape() {
        let r = make_r(17, 4).unwrap();
        let c = r.qsqrt2_coefficients().unwrap();
        assert_eq!(c[0], QSqrt2::from_rational(rat(17)));
        assert_eq!(c[4], -QSqrt2::sqrt2());
        assert_eq!(r.field_tag(), FieldTag::QSqrt2);
        for a in [1, 17, 41, 241] {
            for n in 3..7 {
                let r = make_r(a, n).unwrap();
                assert_eq!(r.signature(1), (n, 1));
                assert_eq!(r.signature(-1), (n + 1, 0));
            }
        }
        assert_eq!(make_r(1, 3).unwrap().rank(), 4);
    }

    #[test]
    fn hyperplane_restriction() {
        let a = restrict_to_hyperplane(&make_q(5, 4).unwrap()).unwrap();
        let b = restrict_to_hyperplane(&make_q(13, 4).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, QuadraticForm::rational(vec![rat(1), rat(1), rat(1), rat(-2)]).unwrap());
        let r = restrict_to_hyperplane(&make_r(17, 3).unwrap()).unwrap();
        assert_eq!(
            r,
            QuadraticForm::over_qsqrt2(vec![QSqrt2::one(), QSqrt2::one(), -QSqrt2::sqrt2()]).unwrap()
        );
        for n in 3..6 {
            let base_q = restrict_to_hyperplane(&make_q(1, n).unwrap()).unwrap();
            let base_r = restrict_to_hyperplane(&make_r(1, n).unwrap()).unwrap();
            for a in 1..=100 {
                assert_eq!(restrict_to_hyperplane(&make_q(a, n).unwrap()).unwrap(), base_q);
                assert_eq!(restrict_to_hyperplane(&make_r(a, n).unwrap()).unwrap(), base_r);
                assert_eq!(base_q.rank(), n);
            }
        }
        let one = QuadraticForm::rational(vec![rat(3)]).unwrap();
        assert_eq!(restrict_to_hyperplane(&one), Err(FormError::RankOne));
    }

    #[test]
    fn isotropy_witnesses() {
        assert_eq!(
            isotropy_witness_q(7, 3).unwrap(),
            IsotropyWitness::Vector(ints(&[0, 1, 1, 1]))
        );
        assert_eq!(
            isotropy_witness_q(1, 4).unwrap(),
            IsotropyWitness::Vector(ints(&[0, 1, 1, 0, 1]))
        );
        for a in [2, 7, 13, 61, 1000] {
            for n in 4..8 {
                let q = make_q(a, n).unwrap();
                match isotropy_witness_q(a, n).unwrap() {
                    IsotropyWitness::Vector(v) => {
                        assert!(q.evaluate(&v).unwrap().is_zero());
                        assert!(v.iter().any(|x| !x.is_zero()));
                    }
                    IsotropyWitness::MeyerGuaranteed => panic!("small witness exists for n = {n}"),
                }
            }
        }
    }

    #[test]
    fn bounded_search_reports_anisotropic_forms() {
        // x² + y² + z² has no nontrivial zero
        let c = [rat(1), rat(1), rat(1)];
        assert_eq!(find_isotropic_vector(&c, 4, 1_000_000), IsotropySearch::NoneWithinBound);
        assert_eq!(find_isotropic_vector(&c, 10, 50), IsotropySearch::BudgetExhausted);
        let c = [ratio(1, 2), rat(-2)];
        assert_eq!(find_isotropic_vector(&c, 3, 1000), IsotropySearch::Found(ints(&[2, 1])));
    }

    #[test]
    fn epsilon_q_examples() {
        assert_eq!(epsilon_q_at(5, 4, 5).unwrap(), EpsilonEvaluation { value: -1, closed_form: true });
        assert_eq!(epsilon_q_at(13, 4, 5).unwrap().value, 1);
        assert_eq!(epsilon_q_at(25, 4, 5).unwrap().value, 1);
        // 17 ≡ 1 mod 8: closed form does not apply, generic value flagged
        assert!(!epsilon_q_at(17, 4, 17).unwrap().closed_form);
        assert!(!epsilon_q_at(3, 4, 3).unwrap().closed_form);
        assert!(!epsilon_q_at(3, 4, 2).unwrap().closed_form);
    }

    #[test]
    fn epsilon_q_closed_form_matches_generic() {
        for &p in &ISOTROPIC {
            for a in 1..=200u64 {
                let e = epsilon_q_at(a, 4, p).unwrap();
                assert!(e.closed_form);
                let q = make_q(a, 4).unwrap();
                let generic = hasse_witt(q.rational_coefficients().unwrap(), Place::OddPrime(p)).unwrap();
                assert_eq!(e.value, generic, "a = {a}, p = {p}");
            }
        }
    }

    #[test]
    fn epsilon_r_examples() {
        let root = sqrt_mod(&BigInt::from(2), 17).unwrap().unwrap();
        assert_eq!(root, 6);
        assert_eq!(epsilon_r_at(17, 4, 17, root).unwrap().value, -1);
        assert_eq!(epsilon_r_at(41, 4, 17, root).unwrap().value, 1);
        assert_eq!(epsilon_r_at(17, 4, 17, 17 - root).unwrap().value, -1);
        assert!(matches!(epsilon_r_at(17, 4, 13, 5), Err(FormError::UnsuitablePrime { .. })));
        assert!(matches!(epsilon_r_at(17, 4, 17, 5), Err(FormError::Arith(ArithError::InvalidRoot { .. }))));
    }

    #[test]
    fn epsilon_r_is_root_independent() {
        for &p in &ANISOTROPIC {
            let root = sqrt_mod(&BigInt::from(2), p).unwrap().unwrap();
            for a in 1..=200u64 {
                let e1 = epsilon_r_at(a, 4, p, root).unwrap();
                let e2 = epsilon_r_at(a, 4, p, p - root).unwrap();
                assert_eq!(e1, e2, "a = {a}, p = {p}");
            }
        }
    }

    #[test]
    fn certificate_examples() {
        let q5 = make_q(5, 4).unwrap();
        let q13 = make_q(13, 4).unwrap();
        let cert = noncommensurability_certificate(&q5, &q13).unwrap().unwrap();
        assert_eq!(cert.method, CertificateMethod::EpsilonAtPrime);
        assert_eq!(cert.witness_prime, Some(5));
        assert_eq!(cert.detail, CertificateDetail::Epsilon { first: -1, second: 1, root: None });

        assert_eq!(noncommensurability_certificate(&q5, &q5).unwrap(), None);

        let q5e = make_q(5, 5).unwrap();
        let q13e = make_q(13, 5).unwrap();
        let cert = noncommensurability_certificate(&q5e, &q13e).unwrap().unwrap();
        assert_eq!(cert.method, CertificateMethod::DiscriminantRatio);
        assert_eq!(
            cert.detail,
            CertificateDetail::DiscriminantRatio { ratio: QSqrt2::from_rational(rat(65)) }
        );

        let r17 = make_r(17, 4).unwrap();
        assert_eq!(noncommensurability_certificate(&q5, &r17), Err(FormError::MixedField));
        assert_eq!(noncommensurability_certificate(&q5, &q5e), Err(FormError::RankMismatch(5, 6)));
    }

    #[test]
    fn certificate_matrices() {
        for (n, method) in [(4, CertificateMethod::EpsilonAtPrime), (5, CertificateMethod::DiscriminantRatio)] {
            for (i, &a) in ISOTROPIC.iter().enumerate() {
                for (j, &b) in ISOTROPIC.iter().enumerate() {
                    let c = noncommensurability_certificate(&make_q(a, n).unwrap(), &make_q(b, n).unwrap()).unwrap();
                    if i == j {
                        assert!(c.is_none());
                        continue;
                    }
                    let c = c.unwrap();
                    assert_eq!(c.method, method);
                    if n == 4 {
                        assert_eq!(c.witness_prime, Some(a));
                    }
                }
            }
            for (i, &a) in ANISOTROPIC.iter().enumerate() {
                for (j, &b) in ANISOTROPIC.iter().enumerate() {
                    let c = noncommensurability_certificate(&make_r(a, n).unwrap(), &make_r(b, n).unwrap()).unwrap();
                    assert_eq!(c.is_some(), i != j, "r_{a} vs r_{b}, n = {n}");
                    if let (Some(c), 4) = (&c, n) {
                        assert_eq!(c.witness_prime, Some(a));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_even_ratio_square_in_qsqrt2_is_inconclusive() {
        // 2·8 = 16 and a/b = 1/8 = 2·(1/4)² is a square in ℚ(√2)
        let f = make_r(1, 5).unwrap();
        let g = make_r(8, 5).unwrap();
        assert_eq!(noncommensurability_certificate(&f, &g).unwrap(), None);
        let f = make_q(1, 5).unwrap();
        let g = make_q(8, 5).unwrap();
        assert!(noncommensurability_certificate(&f, &g).unwrap().is_some());
    }

    #[test]
    fn prime_searches() {
        let iso: Vec<u64> = search_primes_isotropic(6).iter().map(|r| r.prime).collect();
        assert_eq!(iso, ISOTROPIC);
        assert_eq!(search_primes_isotropic(1)[0].prime, 5);
        for r in search_primes_isotropic(40) {
            assert_eq!(r.prime % 8, 5);
            assert_eq!(r.conditions[COND_MINUS_ONE], 1);
            assert_eq!(r.conditions[COND_TWO], -1);
        }
        let an = search_primes_anisotropic(6).unwrap();
        let primes: Vec<u64> = an.iter().map(|r| r.prime).collect();
        assert_eq!(primes, ANISOTROPIC);
        for r in search_primes_anisotropic(40).unwrap() {
            assert_eq!(r.prime % 8, 1);
            assert_eq!(r.conditions[COND_MINUS_ONE], 1);
            assert_eq!(r.conditions[COND_TWO], 1);
            assert_eq!(r.conditions[COND_SQRT2], -1);
            assert_eq!(r.gauss_representation, None);
        }
    }

    #[test]
    fn seventy_three_is_excluded() {
        assert_eq!(gauss_representation(73), Some((3, 1)));
        assert_eq!(pow_mod(2, 9, 73), 1);
        assert!(two_is_fourth_power(73));
        let fourth_powers: Vec<u64> = (1..73u64).map(|x| pow_mod(x, 4, 73)).collect();
        assert!(fourth_powers.contains(&2));
    }

    #[test]
    fn gauss_agrees_with_fourth_powers_below_ten_thousand() {
        for p in (9..10_000u64).step_by(8).filter(|&p| is_prime(p)) {
            assert_eq!(two_is_fourth_power(p), gauss_representation(p).is_some(), "p = {p}");
        }
    }

    proptest! {
        #[test]
        fn certificate_existence_is_symmetric(a in 1u64..400, b in 1u64..400, n in 3usize..7, sqrt2 in any::<bool>()) {
            let make = if sqrt2 { make_r } else { make_q };
            let (f, g) = (make(a, n).unwrap(), make(b, n).unwrap());
            prop_assert_eq!(
                noncommensurability_certificate(&f, &g).unwrap().is_some(),
                noncommensurability_certificate(&g, &f).unwrap().is_some()
            );
        }
    }
}
