//! Compositions and antipode coefficients of `Ü⁰`, its coproduct on tensor
//! products of ev-spaces, and the elliptic Hall algebra relations satisfied
//! by the images of `f`.
//!
//! Everything is at `C = 1`, `c^±(z) = 1`. Operators are checked mode by mode
//! in representations, modulo the ideal `J` of each ev-space.

use crate::evalg::{
    p_current_op_at, quadratic, t_current_op, DiagFactor, DistTerm, EvGen, EvSpace, EvalgError,
    Multiplier, Part, Sym, TruncOp,
};
use crate::formal::{FormalError, RatFn};
use crate::loopmod::{RelationReport, RelationResult};
use crate::scalar::{qdiff, qratio_product, Scalar, ScalarError, SpectralPoint};
use std::collections::BTreeMap;
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HallError {
    #[error(transparent)]
    Evalg(#[from] EvalgError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Formal(#[from] FormalError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bound overflow: {0}")]
    Bound(String),
}

type Result<T> = std::result::Result<T, HallError>;

/// An ordered sequence of positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub parts: Vec<u32>,
}

impl Composition {
    pub fn new(parts: Vec<u32>) -> Self {
        Composition { parts }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }
}

/// The compositions of `m` with exactly `n` parts, in lexicographic order.
pub fn compositions(m: u32, n: u32) -> Vec<Composition> {
    fn go(rest: u32, slots: u32, cur: &mut Vec<u32>, out: &mut Vec<Composition>) {
        if slots == 0 {
            if rest == 0 {
                out.push(Composition::new(cur.clone()));
            }
            return;
        }
        if rest < slots {
            return;
        }
        for p in 1..=rest - (slots - 1) {
            cur.push(p);
            go(rest - p, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m >= 1 && n >= 1 {
        go(m, n, &mut Vec::new(), &mut out);
    }
    out
}

/// `c_{m,λ} = (q-q^-1)^{n-1} [m+1]/[m-1] prod [λ_i-1]/[λ_i+1]`, with `[0]_q`
/// factors cancelled as multiset entries before evaluation.
pub fn antipode_coeff(m: u32, lambda: &Composition) -> Result<Scalar> {
    if lambda.is_empty() || lambda.parts.contains(&0) || lambda.total() != m {
        return Err(HallError::Domain(format!(
            "{:?} is not a composition of {}",
            lambda.parts, m
        )));
    }
    let m = m as i64;
    let mut num = vec![m + 1];
    let mut den = vec![m - 1];
    for &p in &lambda.parts {
        num.push(p as i64 - 1);
        den.push(p as i64 + 1);
    }
    let r = qratio_product(&num, &den)?;
    Ok(qdiff().pow(lambda.len() as i64 - 1) * r)
}

pub type Vector<K> = BTreeMap<K, Scalar>;

fn axpy<K: Ord + Clone>(out: &mut Vector<K>, c: &Scalar, v: &Vector<K>) {
    for (k, x) in v {
        let e = out.entry(k.clone()).or_insert_with(Scalar::zero);
        *e += c * x;
        if e.is_zero() {
            out.remove(k);
        }
    }
}

fn unit<K: Ord>(k: K) -> Vector<K> {
    [(k, Scalar::one())].into_iter().collect()
}

/// A space of vectors with a quotient to test against.
pub trait Carrier {
    type Key: Ord + Clone + Debug;
    /// Normal form modulo the quotient.
    fn normal_form(&self, v: &Vector<Self::Key>) -> Result<Vector<Self::Key>>;
    /// Expansion precision of series parts.
    fn precision(&self) -> i64;
}

/// An operator current, read through its modes.
pub trait ModeOp<C: Carrier> {
    /// Coefficient of `z^{-k}` applied to `v`.
    fn mode_on(&self, c: &C, v: &Vector<C::Key>, k: i64) -> Result<Vector<C::Key>>;
}

impl Carrier for EvSpace {
    type Key = Sym;

    fn normal_form(&self, v: &Vector<Sym>) -> Result<Vector<Sym>> {
        Ok(self.reduce(v)?)
    }

    fn precision(&self) -> i64 {
        self.prec
    }
}

impl ModeOp<EvSpace> for TruncOp {
    fn mode_on(&self, c: &EvSpace, v: &Vector<Sym>, k: i64) -> Result<Vector<Sym>> {
        Ok(self.mode(c, v, k)?)
    }
}

/// `A ⊗ B` for two ev-spaces, modulo `J_A ⊗ B + A ⊗ J_B`.
pub struct TensorSpace<'a> {
    pub left: &'a EvSpace,
    pub right: &'a EvSpace,
}

pub type TKey = (Sym, Sym);

impl Carrier for TensorSpace<'_> {
    type Key = TKey;

    fn normal_form(&self, v: &Vector<TKey>) -> Result<Vector<TKey>> {
        let mut by_right: BTreeMap<Sym, Vector<Sym>> = BTreeMap::new();
        for ((a, b), x) in v {
            by_right
                .entry(b.clone())
                .or_default()
                .insert(a.clone(), x.clone());
        }
        let mut by_left: BTreeMap<Sym, Vector<Sym>> = BTreeMap::new();
        for (b, col) in by_right {
            for (a, x) in self.left.reduce(&col)? {
                axpy(by_left.entry(a).or_default(), &x, &unit(b.clone()));
            }
        }
        let mut out = Vector::new();
        for (a, row) in by_left {
            for (b, x) in self.right.reduce(&row)? {
                axpy(&mut out, &x, &unit((a.clone(), b)));
            }
        }
        Ok(out)
    }

    fn precision(&self) -> i64 {
        self.left.prec.min(self.right.prec)
    }
}

/// A diagonal operator, the product of its factors.
pub fn diag_op(label: &str, factors: Vec<DiagFactor>) -> TruncOp {
    TruncOp {
        label: label.into(),
        scale: Scalar::one(),
        pre: factors,
        gen: None,
        post: vec![],
        flip: false,
    }
}

pub fn identity_op() -> TruncOp {
    diag_op("1", vec![])
}

/// `op(z q^shift)`.
#[derive(Clone, Debug)]
pub struct Factor {
    pub op: TruncOp,
    pub shift: i64,
}

impl Factor {
    pub fn at(op: TruncOp, shift: i64) -> Self {
        Factor { op, shift }
    }

    pub fn identity() -> Self {
        Factor::at(identity_op(), 0)
    }

    fn terms(&self, space: &EvSpace, s: &Sym) -> Result<Vec<DistTerm>> {
        if self.op.flip {
            return Err(HallError::Domain(format!(
                "twisted operator {} in a tensor factor",
                self.op.label
            )));
        }
        let mut out = Vec::new();
        for t in self.op.apply(space, s)? {
            let part = match t.part {
                Part::Delta(p) => Part::Delta(p.shift(-self.shift)),
                Part::Series { f, dir, .. } => {
                    Part::series(f.scale_arg(&Scalar::q_pow(self.shift)), dir, space.prec)?
                }
            };
            out.push(DistTerm { part, ..t });
        }
        Ok(out)
    }

    fn is_diagonal(&self) -> bool {
        self.op.gen.is_none() && !self.op.flip
    }
}

/// `x ∘ y` in one variable; at most one of them may carry a generator.
pub fn compose_factors(x: &Factor, y: &Factor) -> Result<Factor> {
    let moved = |d: &Factor, by: i64| -> Vec<DiagFactor> {
        d.op.pre
            .iter()
            .chain(&d.op.post)
            .map(|f| DiagFactor {
                shift: f.shift + by,
                ..*f
            })
            .collect()
    };
    let label = format!("{}·{}", x.op.label, y.op.label);
    if y.is_diagonal() {
        let mut op = x.op.clone();
        op.pre.extend(moved(y, y.shift - x.shift));
        op.scale = &op.scale * &y.op.scale;
        op.label = label;
        return Ok(Factor::at(op, x.shift));
    }
    if x.is_diagonal() {
        let mut op = y.op.clone();
        op.post.extend(moved(x, x.shift - y.shift));
        op.scale = &op.scale * &x.op.scale;
        op.label = label;
        return Ok(Factor::at(op, y.shift));
    }
    Err(HallError::Domain(format!(
        "product of two generator currents {}",
        label
    )))
}

fn is_constant(f: &RatFn) -> bool {
    f.num.terms().all(|(e, _)| e == 0) && f.den.terms().all(|(e, _)| e == 0)
}

/// Product of two distributions in the same variable.
fn part_product(a: &Part, b: &Part, prec: i64) -> Result<(Part, Scalar)> {
    match (a, b) {
        (Part::Delta(p), Part::Delta(r)) => Err(HallError::Domain(format!(
            "product of delta distributions at {} and {}",
            p, r
        ))),
        (Part::Series { f, .. }, Part::Delta(p)) | (Part::Delta(p), Part::Series { f, .. }) => {
            Ok((Part::Delta(p.clone()), f.eval(&p.to_scalar())?))
        }
        (Part::Series { f, dir: d1, .. }, Part::Series { f: g, dir: d2, .. }) => {
            let dir = if is_constant(f) {
                *d2
            } else if is_constant(g) || d1 == d2 {
                *d1
            } else {
                return Err(HallError::Domain(
                    "product of series with opposite expansions".into(),
                ));
            };
            Ok((Part::series(f.mul(g), dir, prec)?, Scalar::one()))
        }
    }
}

/// `scale * left ⊗ right`.
#[derive(Clone, Debug)]
pub struct TensorTerm {
    pub scale: Scalar,
    pub left: Factor,
    pub right: Factor,
}

#[derive(Clone, Debug)]
pub struct TDistTerm {
    pub part: Part,
    pub key: TKey,
    pub coeff: Scalar,
}

/// A sum of tensor terms acting on `A ⊗ B`.
#[derive(Clone, Debug)]
pub struct TensorOp {
    pub label: String,
    pub terms: Vec<TensorTerm>,
}

impl TensorOp {
    pub fn scaled(mut self, c: &Scalar) -> Self {
        for t in &mut self.terms {
            t.scale = &t.scale * c;
        }
        self
    }

    /// `self ∘ other`, term by term.
    pub fn compose(&self, other: &TensorOp) -> Result<TensorOp> {
        let mut terms = Vec::new();
        for x in &self.terms {
            for y in &other.terms {
                terms.push(TensorTerm {
                    scale: &x.scale * &y.scale,
                    left: compose_factors(&x.left, &y.left)?,
                    right: compose_factors(&x.right, &y.right)?,
                });
            }
        }
        Ok(TensorOp {
            label: format!("{}∘{}", self.label, other.label),
            terms,
        })
    }

    pub fn apply(&self, c: &TensorSpace, key: &TKey) -> Result<Vec<TDistTerm>> {
        let prec = c.precision();
        let mut out = Vec::new();
        for t in &self.terms {
            let l = t.left.terms(c.left, &key.0)?;
            let r = t.right.terms(c.right, &key.1)?;
            for a in &l {
                for b in &r {
                    let (part, f) = part_product(&a.part, &b.part, prec)?;
                    let coeff = &t.scale * &a.coeff * &b.coeff * f;
                    if !coeff.is_zero() {
                        out.push(TDistTerm {
                            part,
                            key: (a.sym.clone(), b.sym.clone()),
                            coeff,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

impl ModeOp<TensorSpace<'_>> for TensorOp {
    fn mode_on(&self, c: &TensorSpace, v: &Vector<TKey>, k: i64) -> Result<Vector<TKey>> {
        let mut out = Vector::new();
        for (key, x) in v {
            for t in self.apply(c, key)? {
                axpy(&mut out, &(x * &t.coeff * t.part.mode(k)), &unit(t.key));
            }
        }
        Ok(out)
    }
}

fn gen_factor(g: EvGen, shift: i64) -> Factor {
    Factor::at(TruncOp::gen(g), shift)
}

/// `Δ⁰(K^+_{1,m}(z)) = -sum_k K^+_{1,k}(z) ⊗ K^+_{1,m-k}(zq^{-2k})` and
/// `Δ⁰(K^-_{1,-m}(z)) = -sum_k K^-_{1,-(m-k)}(zq^{-2k}) ⊗ K^-_{1,-k}(z)`.
pub fn coproduct0_k(sign: i64, m: i64) -> TensorOp {
    let eps = sign.signum();
    let terms = (0..=m)
        .map(|k| {
            let (left, right) = if eps > 0 {
                (
                    gen_factor(EvGen::k(1, k), 0),
                    gen_factor(EvGen::k(1, m - k), -2 * k),
                )
            } else {
                (
                    gen_factor(EvGen::k(-1, m - k), -2 * k),
                    gen_factor(EvGen::k(-1, k), 0),
                )
            };
            TensorTerm {
                scale: Scalar::from_int(-1),
                left,
                right,
            }
        })
        .collect();
    TensorOp {
        label: format!("Δ⁰K{}_{}", if eps > 0 { "+" } else { "-" }, m),
        terms,
    }
}

/// The `m = 1` display of `Δ⁰(K^±_{1,±1}(z))`, written out term by term.
pub fn coproduct0_k1_display(sign: i64) -> TensorOp {
    let neg = Scalar::from_int(-1);
    let terms = if sign > 0 {
        vec![
            TensorTerm {
                scale: neg.clone(),
                left: gen_factor(EvGen::k(1, 0), 0),
                right: gen_factor(EvGen::k(1, 1), 0),
            },
            TensorTerm {
                scale: neg,
                left: gen_factor(EvGen::k(1, 1), 0),
                right: gen_factor(EvGen::k(1, 0), -2),
            },
        ]
    } else {
        vec![
            TensorTerm {
                scale: neg.clone(),
                left: gen_factor(EvGen::k(-1, 1), 0),
                right: gen_factor(EvGen::k(-1, 0), 0),
            },
            TensorTerm {
                scale: neg,
                left: gen_factor(EvGen::k(-1, 0), -2),
                right: gen_factor(EvGen::k(-1, 1), 0),
            },
        ]
    };
    TensorOp {
        label: format!("Δ⁰K{}_1 display", if sign > 0 { "+" } else { "-" }),
        terms,
    }
}

/// `prod_{k=from}^{m} p^±(z q^{-2k})` as one diagonal operator.
fn p_product(sign: i64, from: i64, m: i64) -> TruncOp {
    let mut factors = Vec::new();
    for k in from..=m {
        factors.extend(p_current_op_at(sign, -2 * k).pre);
    }
    diag_op(
        &format!("prod p{}", if sign > 0 { "+" } else { "-" }),
        factors,
    )
}

/// `Δ⁰(t^±_{1,±m}(z))` from the general generator formulas.
pub fn coproduct0_t(sign: i64, m: i64) -> Result<TensorOp> {
    let qd = qdiff();
    let one = Scalar::one;
    let mut terms = Vec::new();
    let t = |k: i64, shift: i64| Factor::at(t_current_op(sign, k), shift);
    if sign > 0 {
        terms.push(TensorTerm {
            scale: one(),
            left: t(m, 0),
            right: Factor::identity(),
        });
        terms.push(TensorTerm {
            scale: one(),
            left: Factor::at(p_product(-1, 1, m), 0),
            right: t(m, 0),
        });
        for k in 1..m {
            let left = compose_factors(&Factor::at(p_product(-1, k + 1, m), 0), &t(k, 0))?;
            terms.push(TensorTerm {
                scale: -qd.clone(),
                left,
                right: t(m - k, -2 * k),
            });
        }
    } else {
        terms.push(TensorTerm {
            scale: one(),
            left: t(m, 0),
            right: Factor::at(p_product(1, 1, m), 0),
        });
        terms.push(TensorTerm {
            scale: one(),
            left: Factor::identity(),
            right: t(m, 0),
        });
        for k in 1..m {
            let right = compose_factors(&t(k, 0), &Factor::at(p_product(1, k + 1, m), 0))?;
            terms.push(TensorTerm {
                scale: qd.clone(),
                left: t(m - k, -2 * k),
                right,
            });
        }
    }
    Ok(TensorOp {
        label: format!("Δ⁰t{}_{}", if sign > 0 { "+" } else { "-" }, m),
        terms,
    })
}

/// The `m = 1` display of `Δ⁰(t^±_{1,±1}(z))`, written out term by term.
pub fn coproduct0_t1_display(sign: i64) -> TensorOp {
    let one = Scalar::one;
    let t = Factor::at(t_current_op(sign, 1), 0);
    let p = Factor::at(p_current_op_at(-sign, -2), 0);
    let terms = if sign > 0 {
        vec![
            TensorTerm {
                scale: one(),
                left: t.clone(),
                right: Factor::identity(),
            },
            TensorTerm {
                scale: one(),
                left: p,
                right: t,
            },
        ]
    } else {
        vec![
            TensorTerm {
                scale: one(),
                left: t.clone(),
                right: p,
            },
            TensorTerm {
                scale: one(),
                left: Factor::identity(),
                right: t,
            },
        ]
    };
    TensorOp {
        label: format!("Δ⁰t{}_1 display", if sign > 0 { "+" } else { "-" }),
        terms,
    }
}

/// `Δ⁰(p^±(z)) = p^±(z) ⊗ p^±(z)`.
pub fn coproduct0_p(sign: i64) -> TensorOp {
    let p = Factor::at(p_current_op_at(sign, 0), 0);
    TensorOp {
        label: format!("Δ⁰p{}", if sign > 0 { "+" } else { "-" }),
        terms: vec![TensorTerm {
            scale: Scalar::one(),
            left: p.clone(),
            right: p,
        }],
    }
}

/// `Δ⁰(K^eps_{1,0}(zq^shift))^power = (-1)^power K^eps_{1,0}(zq^shift)^power ⊗ K^eps_{1,0}(zq^shift)^power`.
fn coproduct0_k0_pow(eps: i64, shift: i64, power: i64) -> TensorOp {
    let f = Factor::at(
        diag_op(
            "K0",
            vec![DiagFactor {
                eps,
                shift: 0,
                power,
            }],
        ),
        shift,
    );
    TensorOp {
        label: format!("Δ⁰K0^{}", power),
        terms: vec![TensorTerm {
            scale: Scalar::from_int(-1).pow(power),
            left: f.clone(),
            right: f,
        }],
    }
}

/// `Δ⁰(t^±_{1,±m})` and `Δ⁰(p^±)` obtained from `Δ⁰` of the `K`-currents through
/// the definitions of `t` and `p`, as an independent route to the generator formulas.
pub fn coproduct0_t_via_k(sign: i64, m: i64) -> Result<TensorOp> {
    let inv = qdiff().inv()?;
    if sign > 0 {
        Ok(coproduct0_k0_pow(1, -2 * m, -1)
            .compose(&coproduct0_k(1, m))?
            .scaled(&-inv))
    } else {
        Ok(coproduct0_k(-1, m)
            .compose(&coproduct0_k0_pow(-1, -2 * m, -1))?
            .scaled(&inv))
    }
}

pub fn coproduct0_p_via_k(sign: i64) -> Result<TensorOp> {
    coproduct0_k0_pow(-sign, 0, -1).compose(&coproduct0_k0_pow(-sign, 2, 1))
}

/// The tensor-space reading of `Δ⁰(K^±_{1,±m})`.
pub fn coproduct0_k_on_tensor(
    c: &TensorSpace,
    sign: i64,
    m: i64,
    key: &TKey,
) -> Result<Vec<TDistTerm>> {
    coproduct0_k(sign, m).apply(c, key)
}

fn ensure_window(c: &impl Carrier, window: i64, degree: i64) -> Result<()> {
    if window + degree >= c.precision() {
        return Err(HallError::Bound(format!(
            "window {} with multiplier degree {} exceeds series precision {}",
            window,
            degree,
            c.precision()
        )));
    }
    Ok(())
}

/// First mode in `|k| <= window` where `a` and `b` differ on `key`, modulo the quotient.
pub fn first_mode_difference<C: Carrier, A: ModeOp<C>, B: ModeOp<C>>(
    c: &C,
    a: &A,
    b: &B,
    key: &C::Key,
    window: i64,
) -> Result<Option<i64>> {
    ensure_window(c, window, 0)?;
    let v = unit(key.clone());
    for k in -window..=window {
        let mut d = a.mode_on(c, &v, k)?;
        axpy(&mut d, &Scalar::from_int(-1), &b.mode_on(c, &v, k)?);
        if !c.normal_form(&d)?.is_empty() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn degree(m: &Multiplier) -> i64 {
    m.iter()
        .map(|(_, a, b)| a.abs().max(b.abs()))
        .max()
        .unwrap_or(0)
}

fn mult_mul(x: &Multiplier, y: &Multiplier) -> Multiplier {
    let mut acc: BTreeMap<(i64, i64), Scalar> = BTreeMap::new();
    for (c, a, b) in x {
        for (d, e, f) in y {
            *acc.entry((a + e, b + f)).or_insert_with(Scalar::zero) += c * d;
        }
    }
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((a, b), c)| (c, a, b))
        .collect()
}

fn mult_swap(x: &Multiplier) -> Multiplier {
    x.iter().map(|(c, a, b)| (c.clone(), *b, *a)).collect()
}

fn mult_neg(x: &Multiplier) -> Multiplier {
    x.iter().map(|(c, a, b)| (-c.clone(), *a, *b)).collect()
}

/// `g(v, z) = (v - q^{-4} z)(v - q^2 z)^2` as a multiplier in `(v, z)`.
pub fn g_multiplier() -> Multiplier {
    let lin = |c: i64| -> Multiplier { vec![(Scalar::one(), 1, 0), (-Scalar::q_pow(c), 0, 1)] };
    mult_mul(&lin(-4), &mult_mul(&lin(2), &lin(2)))
}

/// `g(1, 1) = (1 - q^{-4})(1 - q^2)^2`.
pub fn g_at_one() -> Scalar {
    let one = Scalar::one();
    (&one - Scalar::q_pow(-4)) * (&one - Scalar::q_pow(2)).pow(2)
}

/// Memoized `reduce(B_j v)` and `reduce(A_i B_j v)`.
struct Products<'a, C: Carrier, A: ModeOp<C>, B: ModeOp<C>> {
    c: &'a C,
    a: &'a A,
    b: &'a B,
    v: Vector<C::Key>,
    inner: BTreeMap<i64, Vector<C::Key>>,
    outer: BTreeMap<(i64, i64), Vector<C::Key>>,
}

impl<'a, C: Carrier, A: ModeOp<C>, B: ModeOp<C>> Products<'a, C, A, B> {
    fn new(c: &'a C, a: &'a A, b: &'a B, v: Vector<C::Key>) -> Self {
        Products {
            c,
            a,
            b,
            v,
            inner: BTreeMap::new(),
            outer: BTreeMap::new(),
        }
    }

    fn get(&mut self, i: i64, j: i64) -> Result<&Vector<C::Key>> {
        if !self.inner.contains_key(&j) {
            let w = self.c.normal_form(&self.b.mode_on(self.c, &self.v, j)?)?;
            self.inner.insert(j, w);
        }
        if !self.outer.contains_key(&(i, j)) {
            let w = self.a.mode_on(self.c, &self.inner[&j], i)?;
            self.outer.insert((i, j), w);
        }
        Ok(&self.outer[&(i, j)])
    }
}

/// `lm * A(v)B(z) - rm * B(z)A(v)` on `key`; the first mode `(i, j)` that is
/// nonzero modulo the quotient.
pub fn exchange_residual<C: Carrier, A: ModeOp<C>, B: ModeOp<C>>(
    c: &C,
    a: &A,
    b: &B,
    lm: &Multiplier,
    rm: &Multiplier,
    key: &C::Key,
    window: i64,
) -> Result<Option<(i64, i64)>> {
    ensure_window(c, window, degree(lm).max(degree(rm)))?;
    let mut ab = Products::new(c, a, b, unit(key.clone()));
    let mut ba = Products::new(c, b, a, unit(key.clone()));
    for i in -window..=window {
        for j in -window..=window {
            let mut d = Vector::new();
            for (x, p, r) in lm {
                axpy(&mut d, x, ab.get(i + p, j + r)?);
            }
            for (x, p, r) in rm {
                axpy(&mut d, &-x.clone(), ba.get(j + r, i + p)?);
            }
            if !c.normal_form(&d)?.is_empty() {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Generator currents of the elliptic Hall algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EhaCurrent {
    PsiPlus,
    PsiMinus,
    EPlus,
    EMinus,
    CHalf,
}

/// `f(C^{1/2}) = 1`, `f(ψ^±(z)) = p^±(zq^{-2})`, `f(e^+(z)) = t^+_{1,1}(z)`,
/// `f(e^-(z)) = t^-_{1,-1}(z) / (q^2 - q^{-2})^2`.
pub fn f_image_op(g: EhaCurrent) -> Result<TruncOp> {
    let mut op = match g {
        EhaCurrent::CHalf => identity_op(),
        EhaCurrent::PsiPlus => p_current_op_at(1, -2),
        EhaCurrent::PsiMinus => p_current_op_at(-1, -2),
        EhaCurrent::EPlus => t_current_op(1, 1),
        EhaCurrent::EMinus => {
            let mut op = t_current_op(-1, 1);
            let c = (Scalar::q_pow(2) - Scalar::q_pow(-2)).pow(2).inv()?;
            op.scale = &op.scale * &c;
            op
        }
    };
    op.label = format!("f({:?})", g);
    Ok(op)
}

struct Tally {
    name: &'static str,
    checked: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            checked: 0,
            failure: None,
        }
    }

    fn record<T: Debug>(&mut self, r: Result<Option<T>>, label: impl FnOnce() -> String) {
        self.checked += 1;
        if self.failure.is_some() {
            return;
        }
        match r {
            Ok(None) => {}
            Ok(Some(at)) => self.failure = Some(format!("{} at mode {:?}", label(), at)),
            Err(e) => self.failure = Some(format!("{}: {}", label(), e)),
        }
    }

    fn done(self) -> RelationResult {
        RelationResult {
            name: self.name,
            checked: self.checked,
            failure: self.failure,
        }
    }
}

/// `[e^+(v), e^-(z)] - g(1,1)^{-1} [delta(z/v) ψ^+(z) - delta(z/v) ψ^-(v)]` on `s`.
fn ee_residual(space: &EvSpace, s: &Sym, window: i64) -> Result<Option<(i64, i64)>> {
    let ep = f_image_op(EhaCurrent::EPlus)?;
    let em = f_image_op(EhaCurrent::EMinus)?;
    let pp = f_image_op(EhaCurrent::PsiPlus)?;
    let pm = f_image_op(EhaCurrent::PsiMinus)?;
    ensure_window(space, 2 * window, 0)?;
    let inv = g_at_one().inv()?;
    let mut ab = Products::new(space, &ep, &em, unit(s.clone()));
    let mut ba = Products::new(space, &em, &ep, unit(s.clone()));
    let v = unit(s.clone());
    for i in -window..=window {
        for j in -window..=window {
            let mut d = ab.get(i, j)?.clone();
            axpy(&mut d, &Scalar::from_int(-1), ba.get(j, i)?);
            axpy(&mut d, &-inv.clone(), &pp.mode_on(space, &v, i + j)?);
            axpy(&mut d, &inv, &pm.mode_on(space, &v, i + j)?);
            if !space.normal_form(&d)?.is_empty() {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// `Res_{v,w,z} (vwz)^m (v+z)(w^2-vz) e(v)e(w)e(z)` on `s`, modulo `J`.
pub fn serre_residual(space: &EvSpace, e: &TruncOp, s: &Sym, m: i64) -> Result<Vector<Sym>> {
    // (v+z)(w^2-vz) = v w^2 - v^2 z + z w^2 - v z^2, as exponents of (v, w, z).
    let terms: [(i64, [i64; 3]); 4] = [
        (1, [1, 2, 0]),
        (-1, [2, 0, 1]),
        (1, [0, 2, 1]),
        (-1, [1, 0, 2]),
    ];
    let mut out = Vector::new();
    for (c, [a, b, d]) in terms {
        let x = space.normal_form(&e.mode_on(space, &unit(s.clone()), m + d + 1)?)?;
        let y = space.normal_form(&e.mode_on(space, &x, m + b + 1)?)?;
        let w = e.mode_on(space, &y, m + a + 1)?;
        axpy(&mut out, &Scalar::from_int(c), &w);
    }
    space.normal_form(&out)
}

/// The elliptic Hall algebra relations for the images of `f` on `space`, on
/// the given symbols, modes `|i|, |j| <= window`, cubic relations at the
/// residue modes in `serre_modes`.
pub fn check_eha_relations(
    space: &EvSpace,
    syms: &[Sym],
    window: i64,
    serre_modes: &[i64],
) -> RelationReport {
    let ops = (|| -> Result<[TruncOp; 4]> {
        Ok([
            f_image_op(EhaCurrent::PsiPlus)?,
            f_image_op(EhaCurrent::PsiMinus)?,
            f_image_op(EhaCurrent::EPlus)?,
            f_image_op(EhaCurrent::EMinus)?,
        ])
    })();
    let [pp, pm, ep, em] = match ops {
        Ok(o) => o,
        Err(e) => {
            let failure = Some(e.to_string());
            return RelationReport {
                results: vec![RelationResult {
                    name: "f",
                    checked: 0,
                    failure,
                }],
            };
        }
    };
    let psi = |eps: i64| if eps > 0 { &pp } else { &pm };
    let g = g_multiplier();
    let gs = mult_swap(&g);
    let one: Multiplier = vec![(Scalar::one(), 0, 0)];
    let mut results = Vec::new();

    let mut t = Tally::new("psi+psi+");
    for eps in [1i64, -1] {
        for s in syms {
            t.record(
                exchange_residual(space, psi(eps), psi(eps), &one, &one, s, window),
                || format!("eps={} on {:?}", eps, s),
            );
        }
    }
    results.push(t.done());

    let mut t = Tally::new("psi+psi-");
    let gg = mult_mul(&g, &gs);
    for s in syms {
        t.record(
            exchange_residual(space, &pp, &pm, &gg, &gg, s, window),
            || format!("on {:?}", s),
        );
    }
    results.push(t.done());

    let mut t = Tally::new("psie+");
    for eps in [1i64, -1] {
        for s in syms {
            t.record(
                exchange_residual(space, psi(eps), &ep, &g, &mult_neg(&gs), s, window),
                || format!("eps={} on {:?}", eps, s),
            );
        }
    }
    results.push(t.done());

    let mut t = Tally::new("psie-");
    for eps in [1i64, -1] {
        for s in syms {
            t.record(
                exchange_residual(space, psi(eps), &em, &gs, &mult_neg(&g), s, window),
                || format!("eps={} on {:?}", eps, s),
            );
        }
    }
    results.push(t.done());

    let mut t = Tally::new("e+e-");
    for s in syms {
        t.record(ee_residual(space, s, window), || format!("on {:?}", s));
    }
    results.push(t.done());

    let mut t = Tally::new("e+e+");
    for s in syms {
        t.record(
            exchange_residual(space, &ep, &ep, &g, &mult_neg(&gs), s, window),
            || format!("on {:?}", s),
        );
    }
    results.push(t.done());

    let mut t = Tally::new("e-e-");
    for s in syms {
        t.record(
            exchange_residual(space, &em, &em, &gs, &mult_neg(&g), s, window),
            || format!("on {:?}", s),
        );
    }
    results.push(t.done());

    for (name, e) in [("e+e+e+", &ep), ("e-e-e-", &em)] {
        let mut t = Tally::new(name);
        for &m in serre_modes {
            for s in syms {
                let r =
                    serre_residual(space, e, s, m)
                        .map(|v| if v.is_empty() { None } else { Some(m) });
                t.record(r, || format!("m={} on {:?}", m, s));
            }
        }
        results.push(t.done());
    }

    RelationReport { results }
}

/// The `(K+K+)` and `(K+K-)` relations for `Δ⁰` of the `K`-currents on `A ⊗ B`,
/// indices `0..=d`.
pub fn check_coproduct_relations(
    c: &TensorSpace,
    keys: &[TKey],
    d: i64,
    window: i64,
) -> RelationReport {
    let one = Scalar::one;
    let q2 = |k: i64| Scalar::q_pow(2 * k);
    let mut results = Vec::new();

    let mut t = Tally::new("K+K+");
    for eps in [1i64, -1] {
        for m in 0..=d {
            for n in 0..=d {
                let lm = quadratic(one(), -q2(eps), one(), -q2(m - n - eps));
                let rm = quadratic(q2(eps), -one(), q2(-eps), -q2(m - n));
                let (a, b) = (coproduct0_k(eps, m), coproduct0_k(eps, n));
                for k in keys {
                    t.record(exchange_residual(c, &a, &b, &lm, &rm, k, window), || {
                        format!("eps={} m={} n={} on {:?}", eps, m, n, k)
                    });
                }
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("K+K-");
    for m in 0..=d {
        for n in 0..=d {
            let lm = quadratic(q2(1 - m), -one(), q2(n - 1), -one());
            let rm = quadratic(q2(-m), -q2(1), q2(n), -q2(-1));
            let (a, b) = (coproduct0_k(1, m), coproduct0_k(-1, n));
            for k in keys {
                t.record(exchange_residual(c, &a, &b, &lm, &rm, k, window), || {
                    format!("m={} n={} on {:?}", m, n, k)
                });
            }
        }
    }
    results.push(t.done());

    RelationReport { results }
}

/// Agreement of the `m = 1` displays with the general formulas and with the
/// route through `Δ⁰` of the `K`-currents, as tensor operators on `keys`.
pub fn check_coproduct_displays(c: &TensorSpace, keys: &[TKey], window: i64) -> RelationReport {
    let mut results = Vec::new();
    let mut pairs: Vec<(&'static str, Result<(TensorOp, TensorOp)>)> = Vec::new();
    for sign in [1i64, -1] {
        pairs.push((
            "K display",
            Ok((coproduct0_k1_display(sign), coproduct0_k(sign, 1))),
        ));
        pairs.push((
            "t display",
            coproduct0_t(sign, 1).map(|g| (coproduct0_t1_display(sign), g)),
        ));
        pairs.push((
            "t via K",
            coproduct0_t_via_k(sign, 1).map(|k| (coproduct0_t1_display(sign), k)),
        ));
        pairs.push((
            "p via K",
            coproduct0_p_via_k(sign).map(|k| (coproduct0_p(sign), k)),
        ));
    }
    for name in ["K display", "t display", "t via K", "p via K"] {
        let mut t = Tally::new(name);
        for (n, pair) in &pairs {
            if n != &name {
                continue;
            }
            for k in keys {
                let r = match pair {
                    Ok((a, b)) => first_mode_difference(c, a, b, k, window),
                    Err(e) => Err(e.clone()),
                };
                let label = pair
                    .as_ref()
                    .map(|(a, _)| a.label.clone())
                    .unwrap_or_default();
                t.record(r, || format!("{} on {:?}", label, k));
            }
        }
        results.push(t.done());
    }
    RelationReport { results }
}

/// Delta support points of the tensor action on `key`.
pub fn tensor_support(c: &TensorSpace, op: &TensorOp, key: &TKey) -> Result<Vec<SpectralPoint>> {
    let mut pts = Vec::new();
    for t in op.apply(c, key)? {
        if let Part::Delta(p) = t.part {
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
    }
    Ok(pts)
}
