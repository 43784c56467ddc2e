//! The acceptance criteria, one line each. Runs without the test harness so
//! the lines are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fborel::verify::{Suite, SuiteReport};

struct Criterion {
    name: &'static str,
    suite: Suite,
    cases: usize,
    limit: Option<Duration>,
}

const SEED: u64 = 20240917;

fn criteria() -> Vec<Criterion> {
    let secs = |s| Some(Duration::from_secs(s));
    vec![
        Criterion { name: "canonical ranks r_l(T_a) = r_i(T_a) = a", suite: Suite::CanonicalRanks, cases: 1, limit: secs(10) },
        Criterion { name: "R_T recursion agrees with admissible-map search", suite: Suite::RtOracle, cases: 3000, limit: secs(60) },
        Criterion { name: "regular compiler: R_a(compile(e, a)) = e", suite: Suite::CompileRegular, cases: 200, limit: secs(120) },
        Criterion { name: "re-indexing laws (a)-(d)", suite: Suite::Reindex, cases: 1000, limit: None },
        Criterion { name: "broom rank lemma and D_iie(A) = cl(B)", suite: Suite::BroomRank, cases: 100, limit: None },
        Criterion { name: "tilde law: rank(B~) = 2 + rank(B)", suite: Suite::BroomTilde, cases: 20, limit: None },
        Criterion { name: "simple compiler and shrink lemma", suite: Suite::CompileSimple, cases: 500, limit: None },
        Criterion { name: "finite topology: W laws, zoom, amalgamation", suite: Suite::Fintop, cases: 200, limit: secs(120) },
        Criterion { name: "R_a antitone in a and above A(C)", suite: Suite::Antitone, cases: 500, limit: None },
    ]
}

fn line(i: usize, c: &Criterion, r: &SuiteReport, took: Duration) -> bool {
    let in_time = c.limit.map_or(true, |l| took <= l);
    let pass = r.pass && in_time;
    let limit = c.limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    println!(
        "criterion {}: {} - {} [{} checks, {} failures, {:.1}s{}]",
        i + 1,
        if pass { "PASS" } else { "FAIL" },
        c.name,
        r.checks,
        r.failures,
        took.as_secs_f64(),
        limit
    );
    if !r.pass {
        for w in &r.counterexamples {
            println!("    counterexample: {w}");
        }
    }
    pass
}

fn main() -> ExitCode {
    let mut all = true;
    for (i, c) in criteria().iter().enumerate() {
        let start = Instant::now();
        let r = c.suite.run(SEED, c.cases);
        all &= line(i, c, &r, start.elapsed());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
