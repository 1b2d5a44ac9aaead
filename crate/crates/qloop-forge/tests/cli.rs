use qloop_forge::{appendix_instance, check_appendix_instance, parse_jobs, run_job, JobSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::process::{Command, Output};

const W1: &str = r#"{"params":["a"],"module":{"kind":"evaluation","n":1,"a":"a"},"window":4}"#;

fn forge(args: &[&str], jobs: &str, env_seed: Option<&str>) -> Output {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(jobs.as_bytes()).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qloop-forge"));
    cmd.args(args).arg("--job").arg(f.path());
    match env_seed {
        Some(s) => cmd.env("QLOOP_SEED", s),
        None => cmd.env_remove("QLOOP_SEED"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn qchar_of_w1_is_pinned() {
    let o = forge(&["qchar"], W1, None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "tag\tmonomial\tmultiplicity\nqchar\tY_a\t1\nqchar\tY_{a*q^2}^-1\t1\n"
    );
}

#[test]
fn qchar_of_trivial_module() {
    let o = forge(&["qchar"], r#"{"module":{"kind":"trivial"}}"#, None);
    assert_eq!(stdout(&o), "tag\tmonomial\tmultiplicity\nqchar\t1\t1\n");
}

#[test]
fn json_output_matches_tsv_rows() {
    let o = forge(&["qchar", "--format", "json"], W1, None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["monomial"], "Y_a");
    assert_eq!(v["rows"][1]["multiplicity"], "1");
}

#[test]
fn default_verify_passes_on_w1() {
    let o = forge(&["verify"], W1, None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o)
        .lines()
        .skip(1)
        .all(|l| l.split('\t').nth(3) == Some("pass")));
}

#[test]
fn negative_control_fails_with_located_coefficient() {
    let job = W1.replace(
        r#""window":4"#,
        r#""window":4,"suites":["negative-control"]"#,
    );
    let o = forge(&["verify"], &job, None);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("x+x-")).unwrap();
    assert!(
        line.contains("fail") && line.contains("s=1") && line.contains("entry"),
        "{}",
        line
    );
}

#[test]
fn input_errors_exit_with_2() {
    assert_eq!(
        forge(&["qchar"], "{\"module\":", None).status.code(),
        Some(2)
    );
    let undeclared = W1.replace(r#""a":"a""#, r#""a":"c""#);
    assert_eq!(forge(&["qchar"], &undeclared, None).status.code(), Some(2));
    let zero = W1.replace(r#""window":4"#, r#""window":0"#);
    assert_eq!(forge(&["qchar"], &zero, None).status.code(), Some(2));
    let suite = W1.replace(r#""window":4"#, r#""window":4,"suites":["nonsense"]"#);
    assert_eq!(forge(&["verify"], &suite, None).status.code(), Some(2));
    assert_eq!(forge(&["verify"], W1, Some("x")).status.code(), Some(2));
    assert_eq!(
        forge(&["qchar"], "\n# only a comment\n", None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bound_overflow_exits_with_3() {
    let job = r#"{"params":["a","b"],"module":{"kind":"tensor","factors":[{"kind":"evaluation","n":1,"a":"a"},{"kind":"evaluation","n":1,"a":"b"}]},"window":12,"d":1,"f":1,"suites":["hopf-tensor"]}"#;
    let o = forge(&["verify"], job, None);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("bound overflow"));
}

#[test]
fn output_is_deterministic_across_threads() {
    let jobs = [
        W1.to_string(),
        r#"{"params":["a"],"module":{"kind":"evaluation","n":2,"a":"a*q"},"window":4}"#.to_string(),
        r#"{"module":{"kind":"trivial"}}"#.to_string(),
        r#"{"params":["a","b"],"module":{"kind":"simple","roots":["a","b"]},"window":4}"#
            .to_string(),
    ]
    .join("\n");
    let one = forge(&["qchar"], &jobs, None);
    let three = forge(&["qchar", "--threads", "3"], &jobs, None);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
    assert_eq!(one.stdout, forge(&["qchar"], &jobs, None).stdout);
    assert_eq!(stdout(&one).matches("tag\tmonomial").count(), 4);
}

#[test]
fn out_file_receives_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.tsv");
    let o = forge(&["qchar", "--out", path.to_str().unwrap()], W1, None);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(path).unwrap().contains("Y_a\t1"));
}

#[test]
fn highest_t_of_segments() {
    let o = forge(
        &["highest-t"],
        r#"{"params":["a"],"module":{"kind":"evaluation","n":2,"a":"a"},"window":4}"#,
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("lweight\t0\tP=[a*q^-1,a*q] Q=[]"));
    assert!(out.contains("verdict\tt_dominant\ttrue"));
    let o = forge(
        &["highest-t"],
        r#"{"module":{"kind":"trivial"},"d":1,"f":1}"#,
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("lweight"))
            .count(),
        1
    );
}

#[test]
fn seeded_suites_follow_the_seed() {
    let job = W1.replace(r#""window":4"#, r#""window":4,"suites":["appendix-lemma"]"#);
    for seed in ["1", "2"] {
        let o = forge(&["verify"], &job, Some(seed));
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
}

#[test]
fn appendix_checker_rejects_a_perturbed_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let mut inst = appendix_instance(&mut rng, 8);
        assert!(check_appendix_instance(&inst, 8).is_ok());
        inst.b[0] = inst.b[0].add(&qloop::formal::Series::one(
            qloop::formal::Direction::AtZero,
            8,
        ));
        assert!(check_appendix_instance(&inst, 8).is_err());
    }
}

#[test]
fn job_command_must_match() {
    let jobs = parse_jobs(&W1.replacen('{', r#"{"command":"qchar","#, 1)).unwrap();
    assert!(run_job("qchar", &jobs[0], 0).is_ok());
    assert_eq!(run_job("verify", &jobs[0], 0).unwrap_err().exit_code(), 2);
    assert!(JobSpec::parse(&W1.replace(r#""params":["a"]"#, r#""params":["a","a"]"#)).is_err());
}
