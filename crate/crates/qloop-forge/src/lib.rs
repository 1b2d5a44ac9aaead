//! Batch front-end for `qloop`: job files in, tables and reports out.

use qloop::evalg::{
    build_ev_space, check_ev_iota0, check_qdaff_relations, closure, highest_t_space, image_records,
    k_gens, single_point_support, x_gens, EvGen, EvSpace, EvalgError,
};
use qloop::formal::{
    delta_mul, g_delta_identity_check, solve_dist_equation, Direction, FormalDist, LPoly, RatFn,
    Series,
};
use qloop::hall::{
    check_coproduct_displays, check_coproduct_relations, check_eha_relations, TKey, TensorSpace,
};
use qloop::heisen::{
    h_identities_check, lr_identities_check, normal_order, normal_order_by_rewriting,
    rl_relation_check, theta_commutation_check, Gen,
};
use qloop::loopmod::{
    check_loop_relations, evaluation_module, lweight_decompose, simple_module, tensor,
    DrinfeldPoly, GradedRep, Mode, RelationReport,
};
use qloop::qchar::{monomial_of, reconstruct_lweight, AdjacencyCurrent, YMonomial};
use qloop::scalar::{Scalar, SpectralPoint, DEFAULT_NAMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Seed of randomized suites when `QLOOP_SEED` is unset.
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("input error: {0}")]
    Input(String),
    #[error("bound overflow: {0}")]
    Bound(String),
    #[error("{0}")]
    Compute(String),
}

impl ForgeError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ForgeError::Input(_) => 2,
            ForgeError::Bound(_) => 3,
            ForgeError::Compute(_) => 1,
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> ForgeError {
    let s = e.to_string();
    if s.contains("bound overflow") {
        ForgeError::Bound(s)
    } else {
        ForgeError::Compute(s)
    }
}

impl From<EvalgError> for ForgeError {
    fn from(e: EvalgError) -> Self {
        compute(e)
    }
}

type Result<T> = std::result::Result<T, ForgeError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModuleSpec {
    Trivial,
    /// `W_n(a)`.
    Evaluation {
        n: usize,
        a: String,
    },
    /// The simple module with the given Drinfeld roots.
    Simple {
        roots: Vec<String>,
    },
    Tensor {
        factors: Vec<ModuleSpec>,
    },
}

fn default_window() -> i64 {
    6
}

fn default_d() -> i64 {
    2
}

fn default_f() -> usize {
    2
}

/// One job: a JSON document on one line of a job file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default)]
    pub command: Option<String>,
    /// Spectral parameter names, in order.
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub module: Option<ModuleSpec>,
    /// Mode window.
    #[serde(default = "default_window")]
    pub window: i64,
    /// Dressing bound of ev-spaces.
    #[serde(default = "default_d")]
    pub d: i64,
    /// Generator depth of closures.
    #[serde(default = "default_f")]
    pub f: usize,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub serre_modes: Option<Vec<i64>>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl JobSpec {
    pub fn parse(line: &str) -> Result<Self> {
        let job: JobSpec =
            serde_json::from_str(line).map_err(|e| ForgeError::Input(e.to_string()))?;
        if job.window < 1 || job.d < 0 {
            return Err(ForgeError::Input("windows must be positive".into()));
        }
        if job.params.len() >= DEFAULT_NAMES.len() {
            return Err(ForgeError::Input(format!(
                "at most {} parameters",
                DEFAULT_NAMES.len() - 1
            )));
        }
        for (i, p) in job.params.iter().enumerate() {
            let ok =
                !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()) && p != "t" && p != "q";
            if !ok || job.params[..i].contains(p) {
                return Err(ForgeError::Input(format!("bad parameter name {:?}", p)));
            }
        }
        Ok(job)
    }

    /// `t` followed by the declared parameters.
    pub fn names(&self) -> Vec<&str> {
        let mut n = vec!["t"];
        n.extend(self.params.iter().map(|s| s.as_str()));
        n
    }

    fn point(&self, s: &str) -> Result<SpectralPoint> {
        SpectralPoint::parse(s, &self.names()).map_err(|e| ForgeError::Input(e.to_string()))
    }

    fn module_spec(&self) -> Result<&ModuleSpec> {
        self.module
            .as_ref()
            .ok_or_else(|| ForgeError::Input("job has no module".into()))
    }

    fn build(&self, m: &ModuleSpec) -> Result<GradedRep> {
        let w = self.window;
        match m {
            ModuleSpec::Trivial => Ok(GradedRep::trivial(w)),
            ModuleSpec::Evaluation { n, a } => {
                if *n == 0 {
                    return Err(ForgeError::Input("segment length must be positive".into()));
                }
                evaluation_module(*n, &self.point(a)?, w).map_err(compute)
            }
            ModuleSpec::Simple { roots } => {
                let r = roots
                    .iter()
                    .map(|s| self.point(s))
                    .collect::<Result<Vec<_>>>()?;
                simple_module(&DrinfeldPoly::new(r), w).map_err(compute)
            }
            ModuleSpec::Tensor { factors } => {
                let mut it = factors.iter();
                let first = it
                    .next()
                    .ok_or_else(|| ForgeError::Input("empty tensor product".into()))?;
                let mut acc = self.build(first)?;
                for f in it {
                    acc = tensor(&acc, &self.build(f)?, w).map_err(compute)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn module(&self) -> Result<GradedRep> {
        self.build(self.module_spec()?)
    }
}

/// A table of string cells, one tag per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn tsv(&self) -> String {
        let mut s = self.columns.join("\t");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        s
    }

    pub fn json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.to_string(), v.clone().into()))
                    .collect();
                serde_json::Value::Object(m)
            })
            .collect();
        serde_json::json!({ "columns": self.columns, "rows": rows })
    }
}

/// Outcome of a command: the table and the process status it implies.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub status: i32,
}

/// The q-character of a module: `(block dimension, Y-monomial)` per l-weight block.
pub fn q_character(rep: &GradedRep) -> Result<Vec<(usize, YMonomial)>> {
    let bound = rep.dim.max(1);
    let prec = (2 * bound as i64 + 2).max(10);
    let mut out = Vec::new();
    for blk in lweight_decompose(rep, prec).map_err(compute)? {
        let lw = reconstruct_lweight(&blk.kappa_plus, &blk.kappa_minus, bound).map_err(compute)?;
        out.push((blk.dim(), monomial_of(&lw)));
    }
    Ok(out)
}

pub fn cmd_qchar(job: &JobSpec) -> Result<Outcome> {
    let rep = job.module()?;
    let names = job.names();
    let mut mult: BTreeMap<String, usize> = BTreeMap::new();
    for (d, m) in q_character(&rep)? {
        *mult.entry(m.fmt_with(&names)).or_default() += d;
    }
    let mut t = Table::new(&["tag", "monomial", "multiplicity"]);
    for (m, d) in mult {
        t.push(vec!["qchar".into(), m, d.to_string()]);
    }
    Ok(Outcome {
        table: t,
        status: 0,
    })
}

pub fn cmd_highest_t(job: &JobSpec) -> Result<Outcome> {
    let rep = job.module()?;
    let names = job.names();
    let h = highest_t_space(&rep, job.d, job.f)?;
    let mut t = Table::new(&["tag", "item", "value"]);
    for (i, b) in h.blocks.iter().enumerate() {
        t.push(vec![
            "lweight".into(),
            i.to_string(),
            b.lweight.fmt_with(&names),
        ]);
        t.push(vec![
            "monomial".into(),
            i.to_string(),
            b.monomial.fmt_with(&names),
        ]);
    }
    for r in &h.adjacency {
        let cur = match r.current {
            AdjacencyCurrent::K { m, sign } => {
                format!("K{}_{}", if sign > 0 { "+" } else { "-" }, m)
            }
            AdjacencyCurrent::X { sign } => format!("X{}", if sign > 0 { "+" } else { "-" }),
        };
        let v = format!(
            "{} <- {} via {} at {}",
            r.source,
            r.target,
            cur,
            r.point.fmt_with(&names)
        );
        t.push(vec!["adjacency".into(), cur, v]);
    }
    t.push(vec!["count".into(), "killed".into(), h.killed.to_string()]);
    t.push(vec!["count".into(), "j_dim".into(), h.j_dim.to_string()]);
    t.push(vec![
        "verdict".into(),
        "shift_law".into(),
        h.shift_law.to_string(),
    ]);
    t.push(vec![
        "verdict".into(),
        "single_support".into(),
        h.single_support.to_string(),
    ]);
    t.push(vec![
        "verdict".into(),
        "t_dominant".into(),
        h.t_dominant.to_string(),
    ]);
    // Support points of K^-_{1,-1} adjacencies must be roots of the highest P.
    let kminus = h.kminus_points();
    let roots_ok = h.blocks.first().map_or(true, |b| {
        kminus.iter().all(|x| b.lweight.p.multiplicity(x) > 0)
    });
    t.push(vec![
        "count".into(),
        "kminus_points".into(),
        kminus.len().to_string(),
    ]);
    t.push(vec![
        "verdict".into(),
        "kminus_roots".into(),
        roots_ok.to_string(),
    ]);
    let ok = h.t_dominant && h.shift_law && h.single_support && roots_ok;
    Ok(Outcome {
        table: t,
        status: if ok { 0 } else { 1 },
    })
}

/// One line of a verification report.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub suite: &'static str,
    pub tag: String,
    pub checked: usize,
    pub failure: Option<String>,
    /// Context printed when the check passes (e.g. vacuous counts).
    pub note: Option<String>,
}

fn rows_of(suite: &'static str, rep: &RelationReport) -> Vec<CheckRow> {
    rep.results
        .iter()
        .map(|r| CheckRow {
            suite,
            tag: r.name.to_string(),
            checked: r.checked,
            failure: r.failure.clone(),
            note: None,
        })
        .collect()
}

fn row(
    suite: &'static str,
    tag: impl Into<String>,
    checked: usize,
    failure: Option<String>,
) -> CheckRow {
    CheckRow {
        suite,
        tag: tag.into(),
        checked,
        failure,
        note: None,
    }
}

/// Seed of randomized suites: `QLOOP_SEED`, or a fixed default.
pub fn seed_from_env() -> Result<u64> {
    match std::env::var("QLOOP_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| ForgeError::Input(format!("QLOOP_SEED is not an integer: {:?}", s))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// A random word of length `1..=6` in `L_m`, `R_m`, `m <= 4`.
pub fn random_word(rng: &mut ChaCha8Rng) -> Vec<Gen> {
    let len = rng.gen_range(1..=6);
    (0..len)
        .map(|_| {
            let m = rng.gen_range(0..=4);
            if rng.gen_bool(0.5) {
                Gen::L(m)
            } else {
                Gen::R(m)
            }
        })
        .collect()
}

/// `normal_order` against randomized rewriting on `count` random words, both signs.
pub fn pbw_oracle_suite(seed: u64, count: usize) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for i in 0..count {
        let w = random_word(&mut rng);
        for s in [1i64, -1] {
            let nf = normal_order(s, &w);
            let mut pick = |k: usize| rng.gen_range(0..k);
            if failure.is_none() && normal_order_by_rewriting(s, &w, &mut pick) != nf {
                failure = Some(format!("word {} {:?} sign {}", i, w, s));
            }
        }
    }
    row("heisen-identities", "pbw-oracle", count, failure)
}

/// The dressing identities, `R L` exchange and `Theta_{m,n}` commutation for `|m|, |n| <= 2`.
pub fn heisen_suite(window: usize) -> Vec<CheckRow> {
    let ms = [-2i64, -1, 1, 2];
    let mut out = Vec::new();
    let mut run = |tag: &str, f: &dyn Fn(i64, i64, i64) -> std::result::Result<bool, String>| {
        let mut checked = 0;
        let mut failure = None;
        for s in [1i64, -1] {
            for &m in &ms {
                for &n in &ms {
                    checked += 1;
                    if failure.is_some() {
                        continue;
                    }
                    match f(s, m, n) {
                        Ok(true) => {}
                        Ok(false) => failure = Some(format!("sign={} m={} n={}", s, m, n)),
                        Err(e) => failure = Some(format!("sign={} m={} n={}: {}", s, m, n, e)),
                    }
                }
            }
        }
        out.push(row("heisen-identities", tag, checked, failure));
    };
    let all =
        |v: std::result::Result<Vec<qloop::heisen::IdentityCheck>, qloop::heisen::HeisenError>| {
            v.map(|c| c.iter().all(|x| x.pass))
                .map_err(|e| e.to_string())
        };
    run("LR-identities", &|s, m, n| {
        all(lr_identities_check(s, m, n, window))
    });
    run("H-identities", &|s, m, n| {
        all(h_identities_check(s, m, n, window))
    });
    run("Theta-commutation", &|s, m, n| {
        theta_commutation_check(s, m, n, window).map_err(|e| e.to_string())
    });
    run("RL-exchange", &|s, m, n| {
        if m < 1 || n < 1 {
            return Ok(true);
        }
        rl_relation_check(s, m, n, window)
            .map(|r| r.is_none())
            .map_err(|e| e.to_string())
    });
    out
}

/// `(G^± - G^∓)/(q - q^-1) = [±c]_q delta` for `c ∈ {-2, 0, 2}`.
pub fn delta_identity_suite(window: i64) -> CheckRow {
    let mut failure = None;
    for c in [-2i64, 0, 2] {
        if let Err((s, k)) = g_delta_identity_check(c, window) {
            failure.get_or_insert(format!("c={} sign={} at x^{}", c, s, k));
        }
    }
    row("delta-identity", "G+G-", 3, failure)
}

/// A solvable instance of `(z-a)(z-v)^m A(v) F(z) + sum_p B_p(v) delta_p(z/a) = 0`.
#[derive(Clone, Debug)]
pub struct AppendixInstance {
    pub m: u32,
    pub n: usize,
    pub a: Scalar,
    pub aser: Series,
    pub b: Vec<Series>,
}

fn z_minus(a: &Scalar, extra_z: bool) -> RatFn {
    let lin = LPoly::from_pairs([(1, Scalar::one()), (0, -a.clone())]);
    RatFn::poly(if extra_z {
        lin.mul(&LPoly::monomial(1, Scalar::one()))
    } else {
        lin
    })
}

fn delta_orders(d: &FormalDist) -> BTreeMap<usize, Scalar> {
    let mut out: BTreeMap<usize, Scalar> = BTreeMap::new();
    for (_, p, c) in d.deltas() {
        *out.entry(*p).or_insert_with(Scalar::zero) += c;
    }
    out
}

/// `B_p(v)` such that `sum_p B_p delta_p = -(z-a)(z-v)^m A(v) F(z)`.
fn sources(
    m: u32,
    n: usize,
    a: &Scalar,
    aser: &Series,
    f: &FormalDist,
    window: i64,
) -> std::result::Result<Vec<Series>, String> {
    let g0 = delta_orders(&delta_mul(f, &z_minus(a, false)).map_err(|e| e.to_string())?);
    let g1 = delta_orders(&delta_mul(f, &z_minus(a, true)).map_err(|e| e.to_string())?);
    let v = Series::new(Direction::AtZero, 1, vec![Scalar::one()], window);
    let get =
        |g: &BTreeMap<usize, Scalar>, p: usize| g.get(&p).cloned().unwrap_or_else(Scalar::zero);
    if let Some(p) = g0.keys().chain(g1.keys()).find(|&&p| p >= n) {
        return Err(format!("source of delta order {} beyond {}", p, n));
    }
    Ok((0..n)
        .map(|p| {
            let s = if m == 0 {
                aser.scale(&get(&g0, p))
            } else {
                aser.scale(&get(&g1, p))
                    .sub(&aser.mul(&v).scale(&get(&g0, p)))
            };
            s.neg()
        })
        .collect())
}

/// Picks `m`, `n`, `F` (delta orders `<= n`) and `A`, then derives `B`.
pub fn appendix_instance(rng: &mut ChaCha8Rng, window: i64) -> AppendixInstance {
    let m = rng.gen_range(0..=1u32);
    let n = rng.gen_range(1..=2usize);
    let a = Scalar::param(1) * Scalar::q_pow(rng.gen_range(-2..=2));
    let mut coeffs: Vec<Scalar> = (0..=window)
        .map(|_| Scalar::from_int(rng.gen_range(-3..=3)))
        .collect();
    coeffs[0] = Scalar::from_int(rng.gen_range(1..=3));
    let aser = Series::new(Direction::AtZero, 0, coeffs, window);
    let mut f = FormalDist::zero(window);
    for p in 0..=n {
        f.add_delta(a.clone(), p, Scalar::from_int(rng.gen_range(-3..=3)));
    }
    let b = sources(m, n, &a, &aser, &f, window).expect("sources of a generated instance");
    AppendixInstance { m, n, a, aser, b }
}

/// Solves an instance and checks, independently of the solver, that the
/// solution is delta-supported of order `<= n + 1` with zero residual.
pub fn check_appendix_instance(
    inst: &AppendixInstance,
    window: i64,
) -> std::result::Result<(), String> {
    let sol = solve_dist_equation(inst.m, &inst.a, &inst.aser, &inst.b, window)
        .map_err(|e| e.to_string())?;
    if !sol.f.is_delta_supported() {
        return Err("solution is not delta-supported".into());
    }
    if sol.f.max_order().unwrap_or(0) > inst.n + 1 {
        return Err(format!(
            "solution order {:?} exceeds n+1",
            sol.f.max_order()
        ));
    }
    let lhs = sources(inst.m, inst.n + 2, &inst.a, &inst.aser, &sol.f, window)?;
    for (p, s) in lhs.iter().enumerate() {
        let want = inst
            .b
            .get(p)
            .cloned()
            .unwrap_or_else(|| Series::new(Direction::AtZero, 0, vec![], window));
        if !s.truncate(window).eq_window(&want.truncate(window)) {
            return Err(format!("residual at delta order {}", p));
        }
    }
    Ok(())
}

pub fn appendix_suite(seed: u64, count: usize, window: i64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for i in 0..count {
        let inst = appendix_instance(&mut rng, window);
        if let Err(e) = check_appendix_instance(&inst, window) {
            failure.get_or_insert(format!(
                "instance {} (m={}, n={}): {}",
                i, inst.m, inst.n, e
            ));
        }
    }
    row("appendix-lemma", "solver", count, failure)
}

fn ev_space(job: &JobSpec, rep: &GradedRep) -> Result<EvSpace> {
    Ok(build_ev_space(rep, job.d, job.f)?)
}

fn tensor_factors(job: &JobSpec) -> Result<(GradedRep, GradedRep)> {
    match job.module_spec()? {
        ModuleSpec::Tensor { factors } if factors.len() == 2 => {
            Ok((job.build(&factors[0])?, job.build(&factors[1])?))
        }
        ModuleSpec::Tensor { .. } => Err(ForgeError::Input(
            "hopf-tensor needs exactly two factors".into(),
        )),
        m => {
            let r = job.build(m)?;
            Ok((r.clone(), r))
        }
    }
}

/// Runs one verification suite.
pub fn run_suite(job: &JobSpec, suite: &str, seed: u64) -> Result<Vec<CheckRow>> {
    let w = job.window;
    match suite {
        "loop-relations" => {
            let rep = job.module()?;
            Ok(rows_of(
                "loop-relations",
                &check_loop_relations(&rep, w).map_err(compute)?,
            ))
        }
        "negative-control" => {
            let mut rep = job.module()?;
            if rep.dim < 2 {
                return Err(ForgeError::Input(
                    "negative control needs a module of dimension >= 2".into(),
                ));
            }
            let mut x = rep.op(Mode::XMinus(1)).clone();
            x.set(1, 0, x.get(1, 0) + Scalar::one());
            rep.ops.insert(Mode::XMinus(1), x);
            Ok(rows_of(
                "negative-control",
                &check_loop_relations(&rep, w).map_err(compute)?,
            ))
        }
        "qdaff-relations" => {
            let rep = job.module()?;
            let space = ev_space(job, &rep)?;
            let syms = closure(&space)?.syms;
            let mut rows = rows_of(
                "qdaff-relations",
                &check_qdaff_relations(&space, &syms, &[-1, 0, 1], w),
            );
            let r = check_ev_iota0(&space, w);
            rows.push(match r {
                Ok(f) => row("qdaff-relations", "ev-iota0", space.dim_m(), f),
                Err(e) => row(
                    "qdaff-relations",
                    "ev-iota0",
                    space.dim_m(),
                    Some(e.to_string()),
                ),
            });
            Ok(rows)
        }
        "shift-laws" => {
            let rep = job.module()?;
            let space = ev_space(job, &rep)?;
            let syms = closure(&space)?.syms;
            let mut gens = k_gens(job.d);
            gens.extend(x_gens(&[-1, 0, 1]));
            let sum = image_records(&space, &syms, &gens)?;
            let note = Some(format!(
                "killed={} unsupported={}",
                sum.killed, sum.unsupported
            ));
            let mut rows = Vec::new();
            for (tag, is_k) in [("H-shift-law", true), ("A-shift-law", false)] {
                let recs: Vec<_> = sum
                    .records
                    .iter()
                    .filter(|r| matches!(r.gen, EvGen::K { .. }) == is_k)
                    .collect();
                let bad = recs.iter().find(|r| !r.shift_law());
                let failure = bad.map(|r| {
                    format!(
                        "{:?} at {} on {}",
                        r.gen,
                        r.point.fmt_with(&job.names()),
                        r.target.fmt_with(&job.names())
                    )
                });
                rows.push(CheckRow {
                    note: note.clone(),
                    ..row("shift-laws", tag, recs.len(), failure)
                });
            }
            let single = single_point_support(&sum.records);
            rows.push(row(
                "shift-laws",
                "single-point-support",
                sum.records.len(),
                (!single).then(|| "two support points for one l-weight pair".to_string()),
            ));
            Ok(rows)
        }
        "heisen-identities" => {
            let mut rows = heisen_suite(w.max(1) as usize);
            rows.push(pbw_oracle_suite(seed, 200));
            Ok(rows)
        }
        "delta-identity" => Ok(vec![delta_identity_suite(w.max(12))]),
        "appendix-lemma" => Ok(vec![appendix_suite(seed, 50, w.max(8))]),
        "eha" => {
            let rep = job.module()?;
            let space = ev_space(job, &rep)?;
            let syms = closure(&space)?.syms;
            let modes = job.serre_modes.clone().unwrap_or_else(|| vec![0]);
            Ok(rows_of(
                "eha",
                &check_eha_relations(&space, &syms, w, &modes),
            ))
        }
        "hopf-tensor" => {
            let (x, y) = tensor_factors(job)?;
            let (sx, sy) = (ev_space(job, &x)?, ev_space(job, &y)?);
            let (cx, cy) = (closure(&sx)?.syms, closure(&sy)?.syms);
            let keys: Vec<TKey> = cx
                .iter()
                .flat_map(|a| cy.iter().map(move |b| (a.clone(), b.clone())))
                .collect();
            let ts = TensorSpace {
                left: &sx,
                right: &sy,
            };
            let mut rows = rows_of("hopf-tensor", &check_coproduct_displays(&ts, &keys, w));
            rows.extend(rows_of(
                "hopf-tensor",
                &check_coproduct_relations(&ts, &keys, 1, w),
            ));
            Ok(rows)
        }
        s => Err(ForgeError::Input(format!("unknown suite {:?}", s))),
    }
}

pub fn cmd_verify(job: &JobSpec, seed: u64) -> Result<Outcome> {
    let suites: Vec<String> = if job.suites.is_empty() {
        vec!["loop-relations".to_string()]
    } else {
        job.suites.clone()
    };
    let mut rows = Vec::new();
    for s in &suites {
        rows.extend(run_suite(job, s, seed)?);
    }
    let mut t = Table::new(&["suite", "tag", "checked", "status", "detail"]);
    let mut status = 0;
    for r in &rows {
        let st = match &r.failure {
            None => "pass",
            Some(f) if f.contains("bound overflow") => "bound",
            Some(_) => "fail",
        };
        status = match (status, st) {
            (_, "bound") => 3,
            (0, "fail") => 1,
            (s, _) => s,
        };
        t.push(vec![
            r.suite.into(),
            r.tag.clone(),
            r.checked.to_string(),
            st.into(),
            r.failure
                .clone()
                .or_else(|| r.note.clone())
                .unwrap_or_default(),
        ]);
    }
    Ok(Outcome { table: t, status })
}

/// Runs a job under the given command name.
pub fn run_job(command: &str, job: &JobSpec, seed: u64) -> Result<Outcome> {
    if let Some(c) = &job.command {
        if c != command {
            return Err(ForgeError::Input(format!(
                "job is for {:?}, not {:?}",
                c, command
            )));
        }
    }
    match command {
        "qchar" => cmd_qchar(job),
        "verify" => cmd_verify(job, seed),
        "highest-t" => cmd_highest_t(job),
        c => Err(ForgeError::Input(format!("unknown command {:?}", c))),
    }
}

/// Parses a job file: one JSON document per non-empty line; `#` starts a comment line.
pub fn parse_jobs(text: &str) -> Result<Vec<JobSpec>> {
    let jobs: Vec<JobSpec> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(JobSpec::parse)
        .collect::<Result<_>>()?;
    if jobs.is_empty() {
        return Err(ForgeError::Input("job file has no jobs".into()));
    }
    Ok(jobs)
}

/// Renders outcomes in job order.
pub fn render(outcomes: &[Outcome], format: Format) -> String {
    match format {
        Format::Tsv => outcomes
            .iter()
            .map(|o| o.table.tsv())
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => {
            let v: Vec<serde_json::Value> = outcomes.iter().map(|o| o.table.json()).collect();
            let doc = if v.len() == 1 {
                v.into_iter().next().unwrap()
            } else {
                serde_json::Value::Array(v)
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

/// Runs jobs on up to `threads` worker threads; results keep job order.
pub fn run_jobs(
    command: &str,
    jobs: &[JobSpec],
    seed: u64,
    threads: usize,
) -> Vec<Result<Outcome>> {
    let threads = threads.max(1).min(jobs.len().max(1));
    let mut out: Vec<Option<Result<Outcome>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|sc| {
        let handles: Vec<_> = (0..threads)
            .map(|k| {
                sc.spawn(move || {
                    (k..jobs.len())
                        .step_by(threads)
                        .map(|i| (i, run_job(command, &jobs[i], seed)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("job thread panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("every job ran")).collect()
}
