//! Self-contained verification run behind the `selftest` command. Each check
//! recomputes its expectations from brute force or from the stated reference
//! values and reports one line.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembler::{
    assemble, check_closed, count_lower_bound, default_parcel, single_colored_descriptors, trace_word, volume_bound,
    BlockKind, ManifoldDescriptor,
};
use crate::decorated_graphs::{check_cover, has_common_decorated_cover, DecoratedGraph};
use crate::exact_arith::{factor_bigint, is_prime, pow_mod, rat, ratio, Rational};
use crate::form_families::{
    epsilon_q_at, gauss_representation, make_q, make_r, noncommensurability_certificate,
    search_primes_anisotropic, search_primes_isotropic, two_is_fourth_power, CertificateMethod, QuadraticForm,
    COND_MINUS_ONE, COND_SQRT2, COND_TWO,
};
use crate::free_groups::{distinguishing_word, enumerate_subgroups, hall_counts, SubgroupTable};
use crate::local_invariants::{hasse_witt, hilbert, hilbert_odd_p, Place};

pub const ISOTROPIC_PRIMES: [u64; 6] = [5, 13, 29, 37, 53, 61];
pub const ANISOTROPIC_PRIMES: [u64; 6] = [17, 41, 97, 137, 193, 241];
pub const SUBGROUP_COUNTS: [u64; 6] = [1, 3, 13, 71, 461, 3447];

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {}: {} ({:.2}s / {}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

type Check = fn() -> Result<String, String>;

const CRITERIA: [(u8, &str, u64, Check); 9] = [
    (1, "prime lists", 1, prime_lists),
    (2, "fourth-power test vs x^2 + 64y^2", 5, gauss_cross_check),
    (3, "Hilbert symbol suite", 10, hilbert_suite),
    (4, "scaling invariance of epsilon", 5, scaling_invariance),
    (5, "non-commensurability matrices", 2, certificate_matrices),
    (6, "subgroup counts", 30, subgroup_counts),
    (7, "no common decorated cover", 60, no_common_cover),
    (8, "trace of the distinguishing word", 60, trace_skeleton),
    (9, "counting pipeline", 120, counting_pipeline),
];

pub fn run_criterion(id: u8) -> Option<CriterionOutcome> {
    let &(id, title, secs, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(secs);
    let (passed, detail) = match result {
        Ok(d) if elapsed < limit => (true, d),
        Ok(d) => (false, format!("{d}; over time limit")),
        Err(e) => (false, e),
    };
    Some(CriterionOutcome {
        id,
        title,
        passed,
        detail,
        elapsed,
        limit,
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Legendre symbol by listing squares.
fn legendre_by_squares(a: i64, p: u64) -> i8 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    if (1..p).any(|x| x * x % p == a) {
        1
    } else {
        -1
    }
}

fn prime_lists() -> Result<String, String> {
    let iso = search_primes_isotropic(6);
    let got: Vec<u64> = iso.iter().map(|r| r.prime).collect();
    ensure(got == ISOTROPIC_PRIMES, || format!("isotropic list {got:?}"))?;
    for r in &iso {
        let p = r.prime as i64;
        ensure(
            r.conditions.get(COND_MINUS_ONE) == Some(&legendre_by_squares(-1, r.prime))
                && r.conditions.get(COND_TWO) == Some(&legendre_by_squares(2, r.prime))
                && r.conditions[COND_MINUS_ONE] == 1
                && r.conditions[COND_TWO] == -1,
            || format!("conditions at {p}: {:?}", r.conditions),
        )?;
    }
    let aniso = search_primes_anisotropic(6).map_err(err)?;
    let got: Vec<u64> = aniso.iter().map(|r| r.prime).collect();
    ensure(got == ANISOTROPIC_PRIMES, || format!("anisotropic list {got:?}"))?;
    for r in &aniso {
        let p = r.prime;
        // (√2/p) = -1 means no x with x⁴ ≡ 2
        let fourth_root = (1..p).any(|x| pow_mod(x, 4, p) == 2);
        ensure(
            r.conditions.get(COND_MINUS_ONE) == Some(&1)
                && r.conditions.get(COND_TWO) == Some(&1)
                && r.conditions.get(COND_SQRT2) == Some(&-1)
                && !fourth_root
                && r.gauss_representation.is_none(),
            || format!("conditions at {p}: {:?}", r.conditions),
        )?;
    }
    Ok(format!("{got:?}"))
}

fn gauss_cross_check() -> Result<String, String> {
    let mut checked = 0;
    for p in (9u64..10_000).step_by(8).filter(|&p| is_prime(p)) {
        let fourth = two_is_fourth_power(p);
        let brute_fourth = (1..p).any(|x| pow_mod(x, 4, p) == 2);
        let rep = (0u64..).take_while(|x| x * x <= p).any(|x| {
            (0u64..).take_while(|y| x * x + 64 * y * y <= p).any(|y| x * x + 64 * y * y == p)
        });
        ensure(
            fourth == rep && fourth == brute_fourth && rep == gauss_representation(p).is_some(),
            || format!("disagreement at {p}"),
        )?;
        checked += 1;
    }
    Ok(format!("{checked} primes, 0 disagreements"))
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    let n = loop {
        let n = rng.gen_range(-2000i64..=2000);
        if n != 0 {
            break n;
        }
    };
    ratio(n, rng.gen_range(1i64..=200))
}

fn places_of(values: &[&Rational]) -> Result<Vec<Place>, String> {
    let mut primes = BTreeSet::new();
    for v in values {
        for part in [v.numer(), v.denom()] {
            for (p, _) in factor_bigint(part).map_err(err)? {
                if p != 2 {
                    primes.insert(p);
                }
            }
        }
    }
    let mut out = vec![Place::Real, Place::Dyadic];
    out.extend(primes.into_iter().map(Place::OddPrime));
    Ok(out)
}

/// Solvability of `a x² + b y² = z²` over ℤ_p from primitive solutions mod p².
pub fn odd_symbol_oracle(a: i64, b: i64, p: u64) -> i8 {
    // reduce each coefficient to u or u·p by stripping p²
    let reduce = |mut x: i64| {
        while x % (p * p) as i64 == 0 {
            x /= (p * p) as i64;
        }
        x.rem_euclid((p * p) as i64) as u64
    };
    let (a, b) = (reduce(a), reduce(b));
    let m = p * p;
    let mut unit_square = vec![false; m as usize];
    let mut square = vec![false; m as usize];
    for z in 0..m {
        square[(z * z % m) as usize] = true;
        if z % p != 0 {
            unit_square[(z * z % m) as usize] = true;
        }
    }
    for x in 0..m {
        for y in 0..m {
            let t = ((a * x % m * x + b * y % m * y) % m) as usize;
            if unit_square[t] || ((x % p != 0 || y % p != 0) && square[t]) {
                return 1;
            }
        }
    }
    -1
}

fn hilbert_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4111);
    let places = [
        Place::Real,
        Place::Dyadic,
        Place::OddPrime(3),
        Place::OddPrime(5),
        Place::OddPrime(7),
        Place::OddPrime(13),
    ];
    let one = |x: Result<i8, _>| x.map_err(err);
    for &v in &places {
        for _ in 0..1000 {
            let (a, b, c) = (random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
            let ab = one(hilbert(&a, &b, v))?;
            ensure(one(hilbert(&(&a * &c), &b, v))? == ab * one(hilbert(&c, &b, v))?, || {
                format!("bilinearity fails at {v} for {a}, {c}, {b}")
            })?;
            ensure(one(hilbert(&(&a * &a), &b, v))? == 1, || format!("(a^2, b) != 1 at {v}"))?;
            ensure(one(hilbert(&a, &-(&a * &b), v))? == ab, || format!("(a, -ab) != (a, b) at {v}"))?;
            ensure(one(hilbert(&b, &a, v))? == ab, || format!("symmetry fails at {v}"))?;
        }
    }
    for _ in 0..1000 {
        let (a, b) = (random_rational(&mut rng), random_rational(&mut rng));
        let mut prod = 1;
        for v in places_of(&[&a, &b])? {
            prod *= one(hilbert(&a, &b, v))?;
        }
        ensure(prod == 1, || format!("product formula fails for ({a}, {b})"))?;
    }
    for _ in 0..200 {
        let p = [3u64, 5, 7, 11][rng.gen_range(0..4)];
        let pick = |rng: &mut ChaCha8Rng| loop {
            let x = rng.gen_range(-60i64..=60);
            if x != 0 {
                break x;
            }
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        ensure(
            one(hilbert_odd_p(&rat(a), &rat(b), p))? == odd_symbol_oracle(a, b, p),
            || format!("({a}, {b})_{p} disagrees with the solvability oracle"),
        )?;
    }
    Ok("6 places x 1000 pairs, 1000 product checks, 200 oracle checks".into())
}

fn scaling_invariance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e6);
    let primes: Vec<u64> = (5u64..200).filter(|&p| p % 4 == 1 && is_prime(p)).collect();
    for _ in 0..500 {
        let rank = [3usize, 5, 7][rng.gen_range(0..3)];
        let q: Vec<Rational> = (0..rank).map(|_| random_rational(&mut rng)).collect();
        let lambda = random_rational(&mut rng);
        let scaled: Vec<Rational> = q.iter().map(|c| c * &lambda).collect();
        let p = primes[rng.gen_range(0..primes.len())];
        let place = Place::OddPrime(p);
        let (e1, e2) = (hasse_witt(&q, place).map_err(err)?, hasse_witt(&scaled, place).map_err(err)?);
        ensure(e1 == e2, || format!("eps differs at {p} for rank {rank}, lambda {lambda}"))?;
    }
    Ok("500 forms".into())
}

fn certificate_matrix(forms: &[QuadraticForm], method: CertificateMethod) -> Result<BTreeSet<u64>, String> {
    let mut witnesses = BTreeSet::new();
    for (i, f1) in forms.iter().enumerate() {
        for (j, f2) in forms.iter().enumerate() {
            if i == j {
                continue;
            }
            let cert = noncommensurability_certificate(f1, f2)
                .map_err(err)?
                .ok_or_else(|| format!("entry ({i}, {j}) inconclusive"))?;
            ensure(cert.method == method, || format!("entry ({i}, {j}) used {:?}", cert.method))?;
            witnesses.extend(cert.witness_prime);
        }
    }
    Ok(witnesses)
}

fn certificate_matrices() -> Result<String, String> {
    let q4: Vec<QuadraticForm> = ISOTROPIC_PRIMES.iter().map(|&a| make_q(a, 4)).collect::<Result<_, _>>().map_err(err)?;
    let q5: Vec<QuadraticForm> = ISOTROPIC_PRIMES.iter().map(|&a| make_q(a, 5)).collect::<Result<_, _>>().map_err(err)?;
    let r4: Vec<QuadraticForm> = ANISOTROPIC_PRIMES.iter().map(|&a| make_r(a, 4)).collect::<Result<_, _>>().map_err(err)?;
    let w = certificate_matrix(&q4, CertificateMethod::EpsilonAtPrime)?;
    ensure(w.iter().copied().eq(ISOTROPIC_PRIMES), || format!("q witnesses {w:?}"))?;
    certificate_matrix(&q5, CertificateMethod::DiscriminantRatio)?;
    certificate_matrix(&r4, CertificateMethod::EpsilonAtPrime)?;
    for (l, &a) in ISOTROPIC_PRIMES.iter().enumerate() {
        for (j, &p) in ISOTROPIC_PRIMES.iter().enumerate() {
            let e = epsilon_q_at(a, 4, p).map_err(err)?;
            let expect = if l == j { -1 } else { 1 };
            ensure(e.value == expect, || format!("eps(q_{a}) at {p} is {}", e.value))?;
            let direct = hasse_witt(make_q(a, 4).map_err(err)?.rational_coefficients().unwrap_or(&[]), Place::OddPrime(p))
                .map_err(err)?;
            ensure(direct == expect, || format!("generic eps(q_{a}) at {p} is {direct}"))?;
        }
    }
    Ok("3 matrices, 90 certified entries".into())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn transitive(a: &[usize], b: &[usize]) -> bool {
    let mut seen = vec![false; a.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for y in [a[x], b[x]] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == a.len()
}

/// Index-k subgroups of F₂ from transitive permutation pairs: each subgroup
/// arises from exactly (k−1)! labelled pairs.
pub fn brute_force_subgroup_count(k: usize) -> u64 {
    let perms: Vec<Vec<usize>> = {
        let mut p: Vec<usize> = (0..k).collect();
        let mut out = vec![p.clone()];
        while next_permutation(&mut p) {
            out.push(p.clone());
        }
        out
    };
    let transitive_pairs = perms
        .iter()
        .map(|a| perms.iter().filter(|b| transitive(a, b)).count() as u64)
        .sum::<u64>();
    let fact: u64 = (1..k as u64).product();
    transitive_pairs / fact
}

fn subgroup_counts() -> Result<String, String> {
    let hall = hall_counts(40);
    for (i, &expect) in SUBGROUP_COUNTS.iter().enumerate() {
        let k = i + 1;
        let enumerated = enumerate_subgroups(k).map_err(err)?.len() as u64;
        ensure(hall[i] == BigUint::from(expect) && enumerated == expect, || {
            format!("a_{k}: hall {}, enumeration {enumerated}", hall[i])
        })?;
        if k <= 5 {
            let brute = brute_force_subgroup_count(k);
            ensure(brute == expect, || format!("brute force a_{k} = {brute}"))?;
        }
    }
    for (i, a) in hall.iter().enumerate() {
        let k = i + 1;
        ensure(a * a >= BigUint::from(k).pow(k as u32), || format!("a_{k} < k^(k/2)"))?;
    }
    Ok("a_1..a_6 = 1 3 13 71 461 3447, growth bound to k = 40".into())
}

fn pointed_up_to(k: usize) -> Result<Vec<SubgroupTable>, String> {
    let mut out = Vec::new();
    for i in 1..=k {
        out.extend(enumerate_subgroups(i).map_err(err)?);
    }
    Ok(out)
}

fn no_common_cover() -> Result<String, String> {
    let subs = pointed_up_to(4)?;
    let graphs: Vec<DecoratedGraph> = subs.iter().map(DecoratedGraph::pointed).collect();
    let mut distinct = 0;
    for i in 0..graphs.len() {
        for j in i..graphs.len() {
            let cover = has_common_decorated_cover(&graphs[i], &graphs[j]).map_err(err)?;
            match (i == j, cover) {
                (true, Some(c)) => ensure(
                    check_cover(&c.graph, &graphs[i], &c.to_first) && check_cover(&c.graph, &graphs[j], &c.to_second),
                    || format!("witness cover for {i} is invalid"),
                )?,
                (true, None) => return Err(format!("no cover of graph {i} with itself")),
                (false, Some(_)) => return Err(format!("graphs {i} and {j} have a common cover")),
                (false, None) => distinct += 1,
            }
        }
    }
    Ok(format!("{} subgroups, {distinct} distinct pairs", subs.len()))
}

fn trace_skeleton() -> Result<String, String> {
    let parcel = default_parcel(4, false).map_err(err)?;
    let subs = pointed_up_to(4)?;
    let descriptors: Vec<ManifoldDescriptor> = subs
        .iter()
        .map(|h| assemble(&DecoratedGraph::pointed(h), &parcel))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut pairs = 0;
    for i in 0..subs.len() {
        for j in 0..subs.len() {
            if i == j {
                continue;
            }
            let w = distinguishing_word(&subs[i], &subs[j]).ok_or_else(|| format!("no word for {i}, {j}"))?;
            let t1 = trace_word(&descriptors[i], &w).map_err(err)?;
            let t2 = trace_word(&descriptors[j], &w).map_err(err)?;
            let ends: BTreeSet<BlockKind> = [t1.terminal, t2.terminal].into();
            ensure(ends == [BlockKind::V0, BlockKind::V1].into(), || format!("pair {i}, {j} ends {ends:?}"))?;
            ensure(t1.crossings == 3 * w.len() && t2.crossings == 3 * w.len(), || {
                format!("pair {i}, {j}: crossings {} and {} for |w| = {}", t1.crossings, t2.crossings, w.len())
            })?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} ordered pairs"))
}

fn counting_pipeline() -> Result<String, String> {
    let parcel = default_parcel(4, false).map_err(err)?;
    let report = count_lower_bound(&rat(30), &parcel).map_err(err)?;
    ensure(
        report.k == 6 && report.descriptor_count == BigUint::from(3447u32) && report.floor_bound == BigUint::from(216u32),
        || format!("count --v 30 gave {report:?}"),
    )?;
    let all = single_colored_descriptors(6, &parcel).map_err(err)?;
    ensure(all.len() == 3447, || format!("{} descriptors at k = 6", all.len()))?;
    for d in &all {
        check_closed(d).map_err(err)?;
        ensure(volume_bound(d, &parcel).map_err(err)? == rat(30), || "volume differs from 30".into())?;
    }
    let emitted = single_colored_descriptors(5, &parcel).map_err(err)?;
    ensure(emitted.len() == 461, || format!("{} descriptors at k = 5", emitted.len()))?;
    for d in &emitted {
        let back = ManifoldDescriptor::from_json(&d.to_json()).map_err(err)?;
        ensure(back == *d, || "descriptor json round trip".into())?;
        ensure(volume_bound(d, &parcel).map_err(err)? <= rat(25), || "volume above 25".into())?;
    }
    Ok("k = 6, 3447 >= 216; 3447 + 461 descriptors closed".into())
}
