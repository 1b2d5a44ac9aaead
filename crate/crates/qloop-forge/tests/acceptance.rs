//! Acceptance criteria, one PASS/FAIL line each. Runs the same code paths as the CLI.

use qloop::hall::{antipode_coeff, Composition};
use qloop::scalar::Scalar;
use qloop_forge::{
    heisen_suite, pbw_oracle_suite, run_job, seed_from_env, CheckRow, JobSpec, Outcome,
};
use std::time::{Duration, Instant};

struct Verdict {
    pass: bool,
    detail: String,
}

fn job(line: &str) -> JobSpec {
    JobSpec::parse(line).expect("acceptance job parses")
}

fn run(command: &str, line: &str) -> Outcome {
    let seed = seed_from_env().expect("QLOOP_SEED");
    run_job(command, &job(line), seed).unwrap_or_else(|e| panic!("{}: {}", line, e))
}

/// Failing rows of verify outcomes as `suite/tag: detail`.
fn failures(outs: &[Outcome]) -> Vec<String> {
    outs.iter()
        .flat_map(|o| o.table.rows.iter())
        .filter(|r| r[3] != "pass")
        .map(|r| format!("{}/{}: {}", r[0], r[1], r[4]))
        .collect()
}

fn checked(outs: &[Outcome]) -> usize {
    outs.iter()
        .flat_map(|o| o.table.rows.iter())
        .map(|r| r[2].parse::<usize>().unwrap())
        .sum()
}

fn verdict_of(outs: &[Outcome]) -> Verdict {
    let f = failures(outs);
    let pass = f.is_empty() && outs.iter().all(|o| o.status == 0);
    let detail = if pass {
        format!("{} instances", checked(outs))
    } else {
        f.join("; ")
    };
    Verdict { pass, detail }
}

fn evaluation(n: usize, a: &str, window: i64, extra: &str) -> String {
    format!(
        r#"{{"params":["a"],"module":{{"kind":"evaluation","n":{},"a":"{}"}},"window":{}{}}}"#,
        n, a, window, extra
    )
}

fn pair(b: &str, window: i64, extra: &str) -> String {
    let b_params = if b.starts_with('b') {
        r#"["a","b"]"#
    } else {
        r#"["a"]"#
    };
    format!(
        r#"{{"params":{},"module":{{"kind":"tensor","factors":[{{"kind":"evaluation","n":1,"a":"a"}},{{"kind":"evaluation","n":1,"a":"{}"}}]}},"window":{}{}}}"#,
        b_params, b, window, extra
    )
}

fn loop_relations() -> Verdict {
    let mut outs: Vec<Outcome> = (1..=3)
        .map(|n| run("verify", &evaluation(n, "a", 6, "")))
        .collect();
    outs.push(run("verify", &pair("a*q^2", 6, "")));
    verdict_of(&outs)
}

fn suite(s: &str, line_extra: &str) -> Verdict {
    verdict_of(&[run(
        "verify",
        &evaluation(1, "a", 6, &format!(r#","suites":["{}"]{}"#, s, line_extra)),
    )])
}

fn rows_verdict(rows: &[CheckRow]) -> Verdict {
    let bad: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.failure
                .as_ref()
                .map(|f| format!("{}/{}: {}", r.suite, r.tag, f))
        })
        .collect();
    let pass = bad.is_empty();
    let detail = if pass {
        format!(
            "{} instances",
            rows.iter().map(|r| r.checked).sum::<usize>()
        )
    } else {
        bad.join("; ")
    };
    Verdict { pass, detail }
}

fn pbw_oracle() -> Verdict {
    rows_verdict(&[pbw_oracle_suite(seed_from_env().expect("QLOOP_SEED"), 200)])
}

fn evaluation_homomorphism() -> Verdict {
    verdict_of(&[run(
        "verify",
        &evaluation(1, "a", 4, r#","d":2,"f":2,"suites":["qdaff-relations"]"#),
    )])
}

fn shift_laws() -> Verdict {
    let outs: Vec<Outcome> = (1..=2)
        .map(|n| {
            run(
                "verify",
                &evaluation(n, "a", 4, r#","d":2,"f":2,"suites":["shift-laws"]"#),
            )
        })
        .collect();
    let mut v = verdict_of(&outs);
    if v.pass {
        let notes: Vec<String> = outs.iter().map(|o| o.table.rows[0][4].clone()).collect();
        v.detail = format!(
            "{} records; W1 [{}], W2 [{}]",
            checked(&outs),
            notes[0],
            notes[1]
        );
    }
    v
}

fn t_dominance() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for n in 1..=2 {
        let o = run("highest-t", &evaluation(n, "a", 4, r#","d":2,"f":2"#));
        let get = |k: &str| {
            o.table
                .rows
                .iter()
                .find(|r| r[1] == k)
                .map(|r| r[2].clone())
                .unwrap_or_default()
        };
        pass &= o.status == 0 && get("t_dominant") == "true" && get("kminus_roots") == "true";
        details.push(format!(
            "W{}: t_dominant={} kminus_points={} adjacencies={}",
            n,
            get("t_dominant"),
            get("kminus_points"),
            o.table.rows.iter().filter(|r| r[0] == "adjacency").count()
        ));
    }
    Verdict {
        pass,
        detail: details.join("; "),
    }
}

fn hall_layer() -> Verdict {
    let mut bad = Vec::new();
    for m in 1..=6u32 {
        if antipode_coeff(m, &Composition::new(vec![m])).ok() != Some(Scalar::one()) {
            bad.push(format!("c_{{{},({})}} != 1", m, m));
        }
    }
    if antipode_coeff(2, &Composition::new(vec![1, 1])).ok() != Some(Scalar::zero()) {
        bad.push("c_{2,(1,1)} != 0".into());
    }
    let outs = [
        run(
            "verify",
            &pair("b", 4, r#","d":1,"f":1,"suites":["hopf-tensor"]"#),
        ),
        run(
            "verify",
            &evaluation(
                1,
                "a",
                4,
                r#","d":2,"f":2,"suites":["eha"],"serre_modes":[0]"#,
            ),
        ),
    ];
    bad.extend(failures(&outs));
    let pass = bad.is_empty();
    let detail = if pass {
        format!("{} instances", checked(&outs) + 7)
    } else {
        bad.join("; ")
    };
    Verdict { pass, detail }
}

fn monomials(o: &Outcome) -> Vec<(String, String)> {
    o.table
        .rows
        .iter()
        .map(|r| (r[1].clone(), r[2].clone()))
        .collect()
}

fn qchar_fixtures() -> Verdict {
    let w1 = monomials(&run("qchar", &evaluation(1, "a", 4, "")));
    let w11 = monomials(&run("qchar", &pair("b", 4, "")));
    let one = |s: &str| (s.to_string(), "1".to_string());
    let want1 = vec![one("Y_a"), one("Y_{a*q^2}^-1")];
    let want11 = vec![
        one("Y_a Y_b"),
        one("Y_a Y_{b*q^2}^-1"),
        one("Y_{a*q^2}^-1 Y_b"),
        one("Y_{a*q^2}^-1 Y_{b*q^2}^-1"),
    ];
    let pass = w1 == want1 && w11 == want11;
    let detail = if pass {
        "W1(a): 2 monomials; W1(a)xW1(b): 4 monomials".to_string()
    } else {
        format!("{:?} / {:?}", w1, w11)
    };
    Verdict { pass, detail }
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Verdict)> = vec![
        (
            "loop relations on W1, W2, W3 and W1(a)xW1(aq^2)",
            Duration::from_secs(30),
            loop_relations,
        ),
        (
            "G+G- delta identity, c in {-2,0,2}",
            Duration::from_secs(1),
            || suite("delta-identity", ""),
        ),
        (
            "PBW normal order vs randomized rewriting",
            Duration::from_secs(60),
            pbw_oracle,
        ),
        (
            "dressing identities and Theta commutation",
            Duration::from_secs(60),
            || rows_verdict(&heisen_suite(6)),
        ),
        (
            "evaluation homomorphism on W1(a) ev-space",
            Duration::from_secs(300),
            evaluation_homomorphism,
        ),
        (
            "l-weight shift laws on W1, W2 ev-spaces",
            Duration::from_secs(300),
            shift_laws,
        ),
        (
            "t-dominance of segment highest t-spaces",
            Duration::from_secs(300),
            t_dominance,
        ),
        (
            "distribution equation solver, 50 instances",
            Duration::from_secs(30),
            || suite("appendix-lemma", ""),
        ),
        (
            "Hall layer: antipode, coproduct, EHA",
            Duration::from_secs(600),
            hall_layer,
        ),
        (
            "q-character fixtures",
            Duration::from_secs(30),
            qchar_fixtures,
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut v = f();
        let took = start.elapsed();
        if took > budget {
            v.pass = false;
            v.detail = format!("over budget {:?}; {}", budget, v.detail);
        }
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {} ({:.2}s) {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            took.as_secs_f64(),
            v.detail
        );
    }
    println!("{} of 10 criteria pass", 10 - failed);
}
