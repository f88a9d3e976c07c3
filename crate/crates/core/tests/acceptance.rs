//! Acceptance criteria 1-10. Prints one line per criterion and exits
//! nonzero if any fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use common::datalog::{check_findall, check_negation, check_program, Program};
use common::terms::{check_cut, check_mgu, random_term};
use logiplan::agent::prompt::sections_in_order;
use logiplan::agent::{load_tasks, run_bench, Agent, RejectingProvider, SECTION_TAGS};
use logiplan::data::tables::payments_relation;
use logiplan::data::{
    generate, load_dataset, merchant_monthly_stats, transaction_fee, write_dataset, DataPaths, FeeEngine, FeeInput, FixtureSpec,
};
use logiplan::eval::{Plan, Rubric, CANONICAL_PLANS};
use logiplan::logic::{solve_all, KnowledgeBase, Provenance, SolveBudget, ACQUIRER_PROGRAM};
use logiplan::tools::{ops, AggOp, FilterExpr, ToolRegistry};
use logiplan::Execution;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn within(limit: Duration, spent: Duration, what: &str) -> Result<(), String> {
    if spent <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {spent:.2?}, limit {limit:?}"))
    }
}

fn transcript() -> Check {
    let started = Instant::now();
    let mut kb = KnowledgeBase::new();
    kb.consult(ACQUIRER_PROGRAM, Provenance::Program).map_err(|e| e.to_string())?;
    let got: Vec<String> = solve_all(&kb, "not_in_same_country(lehman_brothers, Y)", SolveBudget::default())
        .map_err(|e| e.to_string())?
        .iter()
        .map(|a| a.get("Y").unwrap().to_string())
        .collect();
    let spent = started.elapsed();
    let want = ["gringotts", "dagoberts_vault", "dagoberts_geldpakhuis", "medici", "tellsons_bank"];
    if got != want {
        return Err(format!("got {got:?}"));
    }
    within(Duration::from_millis(10), spent, "consult and query")?;
    Ok(format!("5 solutions in order, {spent:.2?}"))
}

fn engine_oracle() -> Check {
    let started = Instant::now();
    let mut rng = common::rng(1);
    let (mut preds, mut rules) = (0, 0);
    for i in 0..1000 {
        let prog = Program::generate(&mut rng);
        preds += prog.arity.len();
        rules += prog.rules.len();
        check_program(&prog).map_err(|e| format!("program {i}: {e}"))?;
    }
    let spent = started.elapsed();
    within(Duration::from_secs(60), spent, "1000 programs")?;
    Ok(format!("1000 programs ({preds} predicates, {rules} rules), {spent:.2?}"))
}

fn builtins() -> Check {
    let mut rng = common::rng(2);
    for i in 0..200 {
        check_findall(&Program::generate(&mut rng)).map_err(|e| format!("findall, program {i}: {e}"))?;
    }
    // 100 programs with 10 goals each.
    for i in 0..100 {
        let prog = Program::generate(&mut rng);
        check_negation(&mut rng, &prog, 10).map_err(|e| format!("negation, program {i}: {e}"))?;
    }
    for _ in 0..500 {
        let p1: Vec<i64> = (0..rng.random_range(0..5)).map(|_| rng.random_range(0..4)).collect();
        let p2: Vec<(i64, i64)> = (0..rng.random_range(0..8))
            .map(|_| (rng.random_range(0..4), rng.random_range(0..4)))
            .collect();
        check_cut(&p1, &p2)?;
    }
    let mut unified = 0;
    for _ in 0..10_000 {
        let a = random_term(&mut rng, 3);
        let b = random_term(&mut rng, 3);
        check_mgu(&a, &b)?;
        unified += logiplan::logic::unify(&a, &b, &logiplan::logic::Substitution::new(), true).is_some() as usize;
    }
    Ok(format!(
        "findall 200 programs, 1000 negated goals, 500 cut cases, 10000 term pairs ({unified} unifiable)"
    ))
}

fn relation_algebra() -> Check {
    let mut rng = common::rng(3);
    for i in 0..1000 {
        common::relations::check_random_case(&mut rng).map_err(|e| format!("case {i}: {e}"))?;
    }
    Ok("1000 cases".into())
}

fn fee_engine() -> Check {
    let started = Instant::now();
    let fee = transaction_fee(0.10, 19.0, 100.00).map_err(|e| e.to_string())?;
    if fee != 0.29 {
        return Err(format!("transaction_fee(0.10, 19, 100.00) = {fee:?}"));
    }
    let ds = generate(FixtureSpec::default());
    let engine = FeeEngine::new(&ds);
    let mut totals = std::collections::BTreeMap::new();
    for p in &ds.payments {
        let f = engine.applicable_fee(&FeeInput::from(p)).map_err(|e| e.to_string())?;
        *totals.entry(p.merchant.clone()).or_insert(0.0) += f.fee;
    }
    let oracle = common::fees::fee_totals(&ds);
    if totals.len() != oracle.len() {
        return Err(format!("{} merchants, oracle {}", totals.len(), oracle.len()));
    }
    let mut worst: f64 = 0.0;
    for (m, t) in &totals {
        let d = (t - oracle[m]).abs();
        worst = worst.max(d);
        if d > 1e-9 {
            return Err(format!("{m}: {t} vs oracle {}", oracle[m]));
        }
    }
    let spent = started.elapsed();
    within(Duration::from_secs(10), spent, "fee run")?;
    Ok(format!(
        "0.29 exact; {} merchants, max difference {worst:e}, {spent:.2?}",
        totals.len()
    ))
}

fn rubric() -> Check {
    let kb = KnowledgeBase::new();
    let registry = ToolRegistry::builtin();
    let mut scores = Vec::new();
    for (name, text, expected) in CANONICAL_PLANS {
        let r = Plan::parse(text, &kb, &registry)
            .and_then(|p| p.evaluate(&kb, &registry, &Rubric::default()))
            .map_err(|e| format!("{name}: {e}"))?;
        if r.score != expected {
            return Err(format!("{name}: {} expected {expected}", r.score));
        }
        scores.push(format!("{name} {}", r.score));
    }
    Ok(scores.join(", "))
}

fn monthly_stats() -> Check {
    let ds = generate(FixtureSpec::default());
    let mut groups = 0;
    for m in &ds.merchants {
        let mut years: Vec<i32> = ds.payments.iter().filter(|p| p.merchant == m.merchant).map(|p| p.year).collect();
        years.sort();
        years.dedup();
        for y in years {
            let months = merchant_monthly_stats(&ds.payments, &m.merchant, y);
            let whole: i64 = ds
                .payments
                .iter()
                .filter(|p| p.merchant == m.merchant && p.year == y)
                .map(|p| p.cents())
                .sum();
            let summed: i64 = months.iter().map(|s| s.total_cents).sum();
            if summed != whole {
                return Err(format!("{} {y}: months sum to {summed} cents, total {whole}", m.merchant));
            }
            for s in &months {
                groups += 1;
                let level = s.fraud_level();
                if !(0.0..=100.0).contains(&level) {
                    return Err(format!("{} {y}-{}: fraud level {level}", m.merchant, s.month));
                }
            }
        }
    }
    Ok(format!("{} merchants, {groups} monthly groups", ds.merchants.len()))
}

fn golden_prompt() -> Check {
    let prompt = common::golden::render();
    let golden = std::fs::read_to_string(common::golden::GOLDEN_PATH).map_err(|e| format!("{}: {e}", common::golden::GOLDEN_PATH))?;
    if prompt != golden {
        let line = prompt.lines().zip(golden.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        return Err(format!("differs from golden file near line {line}"));
    }
    if !sections_in_order(&prompt) {
        return Err(format!("section tags {SECTION_TAGS:?} missing or out of order"));
    }
    Ok(format!("{} bytes, {} tags in order", prompt.len(), SECTION_TAGS.len()))
}

fn benchmark(dir: &Path) -> Check {
    let ds = load_dataset(&DataPaths::in_dir(dir)).map_err(|e| e.to_string())?;
    let agent = Agent::from_dataset(&ds).map_err(|e| e.to_string())?;
    let tasks = load_tasks(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/bench/dabstep_tasks.json")).map_err(|e| e.to_string())?;
    let report = run_bench(&agent, &tasks, &RejectingProvider, Execution::Sequential);
    let mut notes = Vec::new();
    for r in &report.results {
        let got = r.got.clone().or(r.error.clone()).unwrap_or_default();
        if !r.correct {
            return Err(format!("{} => {got}, expected {}", r.question, r.expected));
        }
        within(Duration::from_secs(60), Duration::from_secs_f64(r.seconds), &r.question)?;
        notes.push(format!("{got} in {:.2}s", r.seconds));
    }
    Ok(notes.join(", "))
}

fn performance(data: Option<&Path>) -> Check {
    let tmp;
    let dir = match data {
        Some(d) => d,
        None => {
            tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
            let ds = generate(FixtureSpec {
                payments: 138_236,
                ..FixtureSpec::default()
            });
            write_dataset(tmp.path(), &ds).map_err(|e| e.to_string())?;
            tmp.path()
        }
    };
    let started = Instant::now();
    let ds = load_dataset(&DataPaths::in_dir(dir)).map_err(|e| e.to_string())?;
    let rel = payments_relation(&ds.payments);
    let ingest = started.elapsed();
    within(Duration::from_secs(5), ingest, "ingest")?;

    let started = Instant::now();
    let expr =
        FilterExpr::from_term(&common::term("[and, [year, 2023], [is_credit, true], [gt, eur_amount, 50]]")).map_err(|e| e.to_string())?;
    let kept = ops::filter(&rel, &expr, Execution::Parallel).map_err(|e| e.to_string())?;
    let grouped = ops::aggregate(&kept, &["merchant".into()], AggOp::Sum, "eur_amount").map_err(|e| e.to_string())?;
    let query = started.elapsed();
    within(Duration::from_secs(1), query, "filter+aggregate")?;
    Ok(format!(
        "ingest {} rows {ingest:.2?}; filter to {} rows and aggregate to {} groups {query:.2?}",
        ds.payments.len(),
        kept.len(),
        grouped.len()
    ))
}

fn main() -> ExitCode {
    let data = std::env::var_os("LOGIPLAN_DATA_DIR").map(std::path::PathBuf::from);
    let run = |c: Check| match c {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    };
    let criteria: Vec<Criterion> = vec![
        ("transcript conformance", Box::new(move || run(transcript()))),
        ("engine oracle equivalence", Box::new(move || run(engine_oracle()))),
        ("builtin semantics", Box::new(move || run(builtins()))),
        ("relation algebra oracle", Box::new(move || run(relation_algebra()))),
        ("fee engine", Box::new(move || run(fee_engine()))),
        ("rubric fixtures", Box::new(move || run(rubric()))),
        ("monthly stats conservation", Box::new(move || run(monthly_stats()))),
        ("prompt golden file", Box::new(move || run(golden_prompt()))),
        (
            "benchmark reproduction",
            Box::new({
                let data = data.clone();
                move || match &data {
                    Some(d) => run(benchmark(d)),
                    None => Outcome::Skip("LOGIPLAN_DATA_DIR not set; dataset not shipped".into()),
                }
            }),
        ),
        ("performance targets", Box::new(move || run(performance(data.as_deref())))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        let (mark, detail) = match outcome {
            Outcome::Pass(s) => ("PASS", s),
            Outcome::Fail(s) => {
                failed += 1;
                ("FAIL", s)
            }
            Outcome::Skip(s) => ("SKIP", s),
        };
        println!("{mark} {:>2} {name} [{secs:.2}s]: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
