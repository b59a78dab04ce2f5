use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use gos_core::assembler::{
    assemble, check_closed, count_lower_bound, default_parcel, single_colored_descriptors, volume_bound, Parcel,
    MAX_EMIT_K,
};
use gos_core::decorated_graphs::{has_common_decorated_cover, DecoratedGraph};
use gos_core::exact_arith::{rat, Rational};
use gos_core::form_families::{
    make_q, make_r, noncommensurability_certificate, search_primes_anisotropic, search_primes_isotropic,
    CertificateDetail, NonCommensurabilityCertificate, PrimeSearchReport, COND_MINUS_ONE, COND_SQRT2, COND_TWO,
};
use gos_core::free_groups::{distinguishing_word, enumerate_subgroups, hall_counts, MAX_ENUMERATION_INDEX};
use gos_core::selftest::{self, ANISOTROPIC_PRIMES, ISOTROPIC_PRIMES};

/// Pairwise commands (covers, distinguish) stop here; the tables grow as a_k².
const MAX_PAIRWISE_K: usize = 5;

#[derive(Parser)]
#[command(name = "gos", version, about = "Quadratic-form certificates, Schreier graphs and graph-of-spaces counts")]
struct Cli {
    /// Emit {"status", "payload"} JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Primes p ≡ 5 mod 8 and the forms q_p over ℚ.
    Isotropic,
    /// Primes p ≡ 1 mod 8 where 2 is not a fourth power, and the forms r_p over ℚ(√2).
    Anisotropic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphAction {
    Enumerate,
    Covers,
    Distinguish,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the primes used to build the form families.
    Primes {
        family: Family,
        #[arg(value_parser = clap::value_parser!(u64).range(1..=10_000))]
        count: u64,
        /// Fail unless the list starts with the reference primes.
        #[arg(long)]
        verify: bool,
    },
    /// Pairwise non-commensurability certificates for the first `count` forms.
    Forms {
        family: Family,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(3..=64))]
        n: u64,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..=64))]
        count: u64,
    },
    /// Subgroup counts a_k of the free group of rank 2 for k = 1..=max.
    Subgroups {
        #[arg(value_parser = clap::value_parser!(u64).range(1..=1000))]
        max: u64,
        /// Fail unless enumeration matches the recursion wherever both run.
        #[arg(long)]
        verify: bool,
    },
    /// Schreier graphs of the index-k subgroups.
    Graphs {
        #[arg(value_parser = clap::value_parser!(u64).range(1..=MAX_ENUMERATION_INDEX as u64))]
        k: u64,
        action: GraphAction,
    },
    /// Assemble the descriptor of a decorated graph read from FILE, or stdin.
    Assemble {
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(3..=64))]
        n: u64,
        #[arg(long)]
        compact: bool,
    },
    /// Lower bound on the number of descriptors of volume at most v.
    Count {
        #[arg(long, value_parser = parse_rational)]
        v: Rational,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(3..=64))]
        n: u64,
        #[arg(long)]
        compact: bool,
        /// Write every descriptor as JSON into DIR (k <= 5).
        #[arg(long, value_name = "DIR")]
        emit_descriptors: Option<PathBuf>,
    },
    /// Run the full verification suite.
    Selftest {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=9))]
        criterion: Option<u8>,
    },
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim().parse::<Rational>().map_err(|e| format!("not a rational number: {e}"))
}

struct Report {
    human: String,
    payload: Value,
    verified: bool,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<Report, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let (status, payload, human, code) = match run(cli.command) {
        Ok(r) if r.verified => ("ok", r.payload, r.human, 0),
        Ok(r) => ("error", r.payload, r.human, 1),
        Err(Failure::Usage(msg)) => ("error", json!({ "message": msg }), format!("error: {msg}\n"), 2),
        Err(Failure::Runtime(e)) => ("error", json!({ "message": format!("{e:#}") }), format!("error: {e:#}\n"), 1),
    };
    if json {
        let doc = json!({ "status": status, "payload": payload });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json value"));
    } else if code == 2 {
        eprint!("{human}");
    } else {
        print!("{human}");
    }
    ExitCode::from(code)
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Primes { family, count, verify } => cmd_primes(family, count as usize, verify),
        Command::Forms { family, n, count } => cmd_forms(family, n as usize, count as usize),
        Command::Subgroups { max, verify } => cmd_subgroups(max as usize, verify),
        Command::Graphs { k, action } => cmd_graphs(k as usize, action),
        Command::Assemble { file, n, compact } => cmd_assemble(file.as_deref(), n as usize, compact),
        Command::Count {
            v,
            n,
            compact,
            emit_descriptors,
        } => cmd_count(&v, n as usize, compact, emit_descriptors.as_deref()),
        Command::Selftest { criterion } => cmd_selftest(criterion),
    }
}

fn symbol(x: Option<&i8>) -> String {
    x.map_or_else(|| "-".into(), |s| format!("{s:+}"))
}

fn prime_reports(family: Family, count: usize) -> anyhow::Result<Vec<PrimeSearchReport>> {
    Ok(match family {
        Family::Isotropic => search_primes_isotropic(count),
        Family::Anisotropic => search_primes_anisotropic(count)?,
    })
}

fn cmd_primes(family: Family, count: usize, verify: bool) -> Outcome {
    let reports = prime_reports(family, count)?;
    let mut human = format!("{:>6}  {:>6}  {:>5}  {:>9}  x^2+64y^2\n", "p", "(-1/p)", "(2/p)", "(sqrt2/p)");
    for r in &reports {
        let rep = r.gauss_representation.map_or_else(|| "none".into(), |(x, y)| format!("({x}, {y})"));
        writeln!(
            human,
            "{:>6}  {:>6}  {:>5}  {:>9}  {rep}",
            r.prime,
            symbol(r.conditions.get(COND_MINUS_ONE)),
            symbol(r.conditions.get(COND_TWO)),
            symbol(r.conditions.get(COND_SQRT2)),
        )
        .expect("string write");
    }
    let mut verified = true;
    if verify {
        let (expected, conds): (&[u64], &[(&str, i8)]) = match family {
            Family::Isotropic => (&ISOTROPIC_PRIMES, &[(COND_MINUS_ONE, 1), (COND_TWO, -1)]),
            Family::Anisotropic => (&ANISOTROPIC_PRIMES, &[(COND_MINUS_ONE, 1), (COND_TWO, 1), (COND_SQRT2, -1)]),
        };
        let got: Vec<u64> = reports.iter().map(|r| r.prime).take(expected.len()).collect();
        verified = got == expected[..got.len()]
            && reports
                .iter()
                .all(|r| conds.iter().all(|(name, val)| r.conditions.get(*name) == Some(val)));
        writeln!(human, "verify: {}", if verified { "ok" } else { "MISMATCH" }).expect("string write");
    }
    Ok(Report {
        human,
        payload: serde_json::to_value(&reports).context("serialising prime reports")?,
        verified,
    })
}

fn certificate_json(c: &NonCommensurabilityCertificate) -> Value {
    let detail = match &c.detail {
        CertificateDetail::DiscriminantRatio { ratio } => json!({ "ratio": ratio.to_string() }),
        CertificateDetail::Epsilon { first, second, root } => {
            json!({ "first": first, "second": second, "root": root })
        }
    };
    json!({ "method": c.method, "witness_prime": c.witness_prime, "detail": detail, "summary": c.to_string() })
}

fn cmd_forms(family: Family, n: usize, count: usize) -> Outcome {
    let params: Vec<u64> = prime_reports(family, count)?.iter().map(|r| r.prime).collect();
    let forms = params
        .iter()
        .map(|&a| match family {
            Family::Isotropic => make_q(a, n),
            Family::Anisotropic => make_r(a, n),
        })
        .collect::<Result<Vec<_>, _>>()
        .context("building forms")?;
    let tag = if family == Family::Isotropic { "q" } else { "r" };
    let names: Vec<String> = params.iter().map(|a| format!("{tag}_{a}")).collect();
    let mut cells = vec![vec![String::from("-"); count]; count];
    let mut matrix = vec![vec![Value::Null; count]; count];
    let mut witnesses = std::collections::BTreeSet::new();
    let mut inconclusive = 0;
    for i in 0..count {
        for j in 0..count {
            if i == j {
                continue;
            }
            match noncommensurability_certificate(&forms[i], &forms[j]).context("certificate")? {
                Some(c) => {
                    witnesses.extend(c.witness_prime);
                    cells[i][j] = c.to_string();
                    matrix[i][j] = certificate_json(&c);
                }
                None => {
                    inconclusive += 1;
                    cells[i][j] = "inconclusive".into();
                    matrix[i][j] = json!("inconclusive");
                }
            }
        }
    }
    let width = cells.iter().flatten().chain(&names).map(String::len).max().unwrap_or(1);
    let mut human = format!("n = {n}\n{:>width$}", "");
    for name in &names {
        write!(human, "  {name:>width$}").expect("string write");
    }
    human.push('\n');
    for (name, row) in names.iter().zip(&cells) {
        write!(human, "{name:>width$}").expect("string write");
        for cell in row {
            write!(human, "  {cell:>width$}").expect("string write");
        }
        human.push('\n');
    }
    let w: Vec<String> = witnesses.iter().map(u64::to_string).collect();
    writeln!(human, "witness primes: {{{}}}", w.join(", ")).expect("string write");
    writeln!(human, "certified: {}/{}", count * (count - 1) - inconclusive, count * (count - 1)).expect("string write");
    Ok(Report {
        human,
        payload: json!({
            "n": n,
            "forms": names,
            "matrix": matrix,
            "witness_primes": witnesses,
            "inconclusive": inconclusive,
        }),
        verified: inconclusive == 0,
    })
}

fn cmd_subgroups(max: usize, verify: bool) -> Outcome {
    let hall = hall_counts(max);
    let mut rows = Vec::new();
    let mut human = format!("{:>4}  {:>12}  {:>10}  ceil(k^(k/2))\n", "k", "a_k", "enumerated");
    let mut verified = true;
    for (i, a) in hall.iter().enumerate() {
        let k = i + 1;
        let enumerated = if verify && k <= MAX_ENUMERATION_INDEX {
            Some(enumerate_subgroups(k).context("enumeration")?.len())
        } else {
            None
        };
        if let Some(e) = enumerated {
            verified &= *a == BigUint::from(e);
        }
        let bound = gos_core::assembler::ceil_half_power(k);
        verified &= a >= &bound;
        let shown = enumerated.map_or_else(|| "-".into(), |e| e.to_string());
        writeln!(human, "{k:>4}  {a:>12}  {shown:>10}  {bound}").expect("string write");
        rows.push(json!({
            "k": k,
            "a_k": a.to_string(),
            "enumerated": enumerated,
            "ceil_half_power": bound.to_string(),
        }));
    }
    Ok(Report {
        human,
        payload: Value::Array(rows),
        verified,
    })
}

fn cmd_graphs(k: usize, action: GraphAction) -> Outcome {
    if action != GraphAction::Enumerate && k > MAX_PAIRWISE_K {
        return Err(Failure::Usage(format!("pairwise graph commands are capped at k <= {MAX_PAIRWISE_K}")));
    }
    let subs = enumerate_subgroups(k).context("enumeration")?;
    let mut human = String::new();
    match action {
        GraphAction::Enumerate => {
            for (i, h) in subs.iter().enumerate() {
                writeln!(human, "{i:>5}  {h}").expect("string write");
            }
            let payload = subs
                .iter()
                .map(|h| json!({ "perm_a": h.perm_a(), "perm_b": h.perm_b() }))
                .collect();
            writeln!(human, "{} subgroups of index {k}", subs.len()).expect("string write");
            Ok(Report {
                human,
                payload: Value::Array(payload),
                verified: true,
            })
        }
        GraphAction::Covers => {
            let graphs: Vec<DecoratedGraph> = subs.iter().map(DecoratedGraph::pointed).collect();
            let mut matrix = vec![vec![false; graphs.len()]; graphs.len()];
            for i in 0..graphs.len() {
                for j in 0..graphs.len() {
                    matrix[i][j] = has_common_decorated_cover(&graphs[i], &graphs[j])
                        .context("cover decision")?
                        .is_some();
                }
            }
            let verified = (0..graphs.len()).all(|i| (0..graphs.len()).all(|j| matrix[i][j] == (i == j)));
            for row in &matrix {
                let line: String = row.iter().map(|&c| if c { '1' } else { '.' }).collect();
                writeln!(human, "{line}").expect("string write");
            }
            let off = (0..graphs.len())
                .flat_map(|i| (0..graphs.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && matrix[i][j])
                .count();
            writeln!(
                human,
                "{n}x{n}: common covers on the diagonal only: {}",
                if verified { "yes" } else { "no" },
                n = graphs.len()
            )
            .expect("string write");
            Ok(Report {
                human,
                payload: json!({ "k": k, "matrix": matrix, "off_diagonal_covers": off }),
                verified,
            })
        }
        GraphAction::Distinguish => {
            let mut rows = Vec::new();
            for i in 0..subs.len() {
                for j in i + 1..subs.len() {
                    let w = distinguishing_word(&subs[i], &subs[j])
                        .ok_or_else(|| anyhow::anyhow!("subgroups {i} and {j} coincide"))?;
                    writeln!(human, "{i:>4} {j:>4}  {w}").expect("string write");
                    rows.push(json!({ "first": i, "second": j, "word": w.to_string() }));
                }
            }
            Ok(Report {
                human,
                payload: Value::Array(rows),
                verified: true,
            })
        }
    }
}

fn parcel(n: usize, compact: bool) -> Result<Parcel, Failure> {
    default_parcel(n, compact).map_err(|e| Failure::Runtime(e.into()))
}

fn cmd_assemble(file: Option<&Path>, n: usize, compact: bool) -> Outcome {
    let text = match file {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf).context("reading stdin")?;
            buf
        }
    };
    let graph: DecoratedGraph = text.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
    let parcel = parcel(n, compact)?;
    let d = assemble(&graph, &parcel).map_err(|e| Failure::Usage(format!("{e}")))?;
    let vol = volume_bound(&d, &parcel).context("volume")?;
    let mut human = format!(
        "{} instances, {} gluings, volume {vol} <= {}\n",
        d.instances.len(),
        d.gluings.len(),
        rat(5 * d.vertex_count() as i64) * &parcel.max_volume
    );
    human.push_str(&d.to_json());
    human.push('\n');
    Ok(Report {
        human,
        payload: serde_json::to_value(&d).context("descriptor json")?,
        verified: true,
    })
}

fn cmd_count(v: &Rational, n: usize, compact: bool, emit: Option<&Path>) -> Outcome {
    let parcel = parcel(n, compact)?;
    let report = count_lower_bound(v, &parcel).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut human = format!(
        "k = {}\ndescriptors = {}\nlower bound = {}\n{} >= {}\n",
        report.k, report.descriptor_count, report.floor_bound, report.descriptor_count, report.floor_bound
    );
    let mut emitted = None;
    if let Some(dir) = emit {
        if report.k > MAX_EMIT_K {
            return Err(Failure::Usage(format!(
                "descriptor emission is capped at k <= {MAX_EMIT_K}, got k = {}",
                report.k
            )));
        }
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let descriptors = single_colored_descriptors(report.k, &parcel).context("assembly")?;
        let cap = rat(5 * report.k as i64) * &parcel.max_volume;
        for (i, d) in descriptors.iter().enumerate() {
            check_closed(d).context("closedness")?;
            let vol = volume_bound(d, &parcel).context("volume")?;
            if vol > cap || vol > *v {
                return Err(anyhow::anyhow!("descriptor {i} has volume {vol}").into());
            }
            let path = dir.join(format!("descriptor_{i:05}.json"));
            fs::write(&path, d.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
        writeln!(human, "wrote {} descriptors to {}", descriptors.len(), dir.display()).expect("string write");
        emitted = Some(descriptors.len());
    }
    Ok(Report {
        human,
        payload: json!({
            "v": v.to_string(),
            "k": report.k,
            "descriptor_count": report.descriptor_count.to_string(),
            "floor_bound": report.floor_bound.to_string(),
            "emitted": emitted,
        }),
        verified: true,
    })
}

fn cmd_selftest(criterion: Option<u8>) -> Outcome {
    let outcomes = match criterion {
        Some(id) => selftest::run_criterion(id).into_iter().collect(),
        None => selftest::run_all(),
    };
    let mut human = String::new();
    for o in &outcomes {
        writeln!(human, "{o}").expect("string write");
    }
    let verified = outcomes.iter().all(|o| o.passed);
    let payload = outcomes
        .iter()
        .map(|o| {
            json!({
                "criterion": o.id,
                "title": o.title,
                "passed": o.passed,
                "detail": o.detail,
            })
        })
        .collect();
    Ok(Report {
        human,
        payload: Value::Array(payload),
        verified,
    })
}
