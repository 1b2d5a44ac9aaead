//! Evaluation modules: the smash-product action on `H^+ ⊗ M ⊗ H^-`, the
//! quotient by the ideal `J`, the evaluation map on generator currents,
//! relation checks at type `(1,0)` and highest t-weight spaces.
//!
//! Modes of dressed `H` currents are infinite sums, so vectors are kept
//! symbolic. A basis symbol is `(h_+, w, h_-)` where `h_±` are words in the
//! currents `H^±` evaluated at spectral points and `w` is an l-weight basis
//! vector of `M`. On such a symbol every evaluated generator is a finite sum
//! of `delta(P/z)` terms, or a rational series for `K^±_{1,0}`. Letters at
//! different points are reordered with `H(b) H(c) = Theta(b/c) H(c) H(b)`
//! whenever `Theta(b/c)` is finite and nonzero.

use crate::formal::{Direction, FormalError, LPoly, RatFn, Series};
use crate::heisen::{big_theta_closed, dress_h};
use crate::linalg::Matrix;
use crate::loopmod::{DrinfeldPoly, GradedRep, LoopError, Mode, RelationReport, RelationResult};
use crate::qchar::{
    a_monomial, adjacency_consistent, h_monomial, is_t_dominant, monomial_of, reconstruct_lweight,
    AdjacencyCurrent, AdjacencyRecord, LWeightRational, QcharError, YMonomial,
};
use crate::scalar::{qdiff, Scalar, SpectralPoint};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::ops::Bound;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalgError {
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Qchar(#[from] QcharError),
    #[error(transparent)]
    Formal(#[from] FormalError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("bound overflow: {0}")]
    Bound(String),
}

type Result<T> = std::result::Result<T, EvalgError>;

const MAX_REDUCE_ROUNDS: usize = 8;

/// `H^±(point)^exp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub point: SpectralPoint,
    pub exp: i64,
}

/// Letters of the dressed current `H^sign_m(z)` at `z = p`.
pub fn dress_letters(sign: i64, m: i64, p: &SpectralPoint) -> Vec<Letter> {
    dress_h(sign, m)
        .factors()
        .iter()
        .map(|&(k, s)| {
            assert!(k % 2 == 0, "dressing shifts are even powers of t");
            Letter {
                point: p.shift(k / 2),
                exp: s,
            }
        })
        .collect()
}

pub fn inverse_word(w: &[Letter]) -> Vec<Letter> {
    w.iter()
        .rev()
        .map(|l| Letter {
            point: l.point.clone(),
            exp: -l.exp,
        })
        .collect()
}

fn word_size(w: &[Letter]) -> i64 {
    w.iter().map(|l| l.exp.abs()).sum()
}

/// Basis symbol `h_+ ⊗ w ⊗ h_-` with `h_±` in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym {
    pub plus: Vec<Letter>,
    pub mid: usize,
    pub minus: Vec<Letter>,
}

impl Sym {
    pub fn base(mid: usize) -> Self {
        Sym {
            plus: vec![],
            mid,
            minus: vec![],
        }
    }

    pub fn size(&self) -> i64 {
        word_size(&self.plus) + word_size(&self.minus)
    }
}

pub type EvVector = BTreeMap<Sym, Scalar>;

pub fn vadd(v: &mut EvVector, s: Sym, c: Scalar) {
    if c.is_zero() {
        return;
    }
    let e = v.entry(s).or_insert_with(Scalar::zero);
    *e += c;
    if e.is_zero() {
        let k = v
            .iter()
            .find(|(_, x)| x.is_zero())
            .map(|(k, _)| k.clone())
            .unwrap();
        v.remove(&k);
    }
}

fn vaxpy(v: &mut EvVector, c: &Scalar, w: &EvVector) {
    for (s, x) in w {
        vadd(v, s.clone(), c * x);
    }
}

/// Dependence on the current variable of one term of an operator distribution.
#[derive(Clone, Debug)]
pub enum Part {
    /// `delta(P/z)`.
    Delta(SpectralPoint),
    /// The expansion of `f` in the given direction.
    Series {
        f: RatFn,
        dir: Direction,
        series: Series,
    },
}

impl Part {
    pub fn series(f: RatFn, dir: Direction, prec: i64) -> Result<Self> {
        let series = f.expand(dir, prec)?;
        Ok(Part::Series { f, dir, series })
    }

    /// Coefficient of `z^{-i}`.
    pub fn mode(&self, i: i64) -> Scalar {
        match self {
            Part::Delta(p) => p.to_scalar().pow(i),
            Part::Series { series, .. } => series.z_coeff(-i),
        }
    }

    pub fn point(&self) -> Option<&SpectralPoint> {
        match self {
            Part::Delta(p) => Some(p),
            Part::Series { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DistTerm {
    pub part: Part,
    pub sym: Sym,
    pub coeff: Scalar,
}

/// Coefficient of `z^{-k}` of a distribution.
pub fn dist_mode(terms: &[DistTerm], k: i64) -> EvVector {
    let mut v = EvVector::new();
    for t in terms {
        vadd(&mut v, t.sym.clone(), &t.coeff * t.part.mode(k));
    }
    v
}

/// The delta-supported components of a distribution, per support point.
pub fn delta_components(terms: &[DistTerm]) -> BTreeMap<SpectralPoint, EvVector> {
    let mut out: BTreeMap<SpectralPoint, EvVector> = BTreeMap::new();
    for t in terms {
        if let Part::Delta(p) = &t.part {
            vadd(
                out.entry(p.clone()).or_default(),
                t.sym.clone(),
                t.coeff.clone(),
            );
        }
    }
    out.retain(|_, v| !v.is_empty());
    out
}

/// Images under `ev` of the generator currents at type `(1,0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvGen {
    /// `K^eps_{1,0}(z)`.
    K0 { eps: i64 },
    /// `K^eps_{1,eps m}(z)` with `m >= 1`.
    K { eps: i64, m: i64 },
    /// `X^eps_{1,n}(z)`.
    X { eps: i64, n: i64 },
}

impl EvGen {
    /// `K^eps_{1, eps m}` for any `m >= 0`.
    pub fn k(eps: i64, m: i64) -> Self {
        if m == 0 {
            EvGen::K0 { eps }
        } else {
            EvGen::K { eps, m }
        }
    }

    pub fn sign(&self) -> i64 {
        match *self {
            EvGen::K0 { eps } | EvGen::K { eps, .. } | EvGen::X { eps, .. } => eps,
        }
    }
}

/// Which same-point cancellations the `J`-span admits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JPolicy {
    /// Letters inserted by an `eq:center` instance never cancel against
    /// letters already present.
    Strict,
    /// Free reduction everywhere.
    Free,
}

/// `F = q^{qexp} prod_x (1 - x/z)^{n_x}`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Factored {
    qexp: i64,
    n: BTreeMap<SpectralPoint, i64>,
}

fn ratio(x: &SpectralPoint, y: &SpectralPoint) -> Scalar {
    if x.base == y.base {
        Scalar::q_pow(x.exponent - y.exponent)
    } else {
        x.to_scalar() * y.to_scalar().inv().expect("nonzero point")
    }
}

impl Factored {
    fn of(m: &YMonomial) -> Self {
        let mut qexp = 0;
        let mut n: BTreeMap<SpectralPoint, i64> = BTreeMap::new();
        for (x, e) in m.exponents() {
            qexp += e;
            *n.entry(x.shift(-2)).or_default() += e;
            *n.entry(x.clone()).or_default() -= e;
        }
        n.retain(|_, e| *e != 0);
        Factored { qexp, n }
    }

    fn product_except(&self, y: &SpectralPoint) -> Scalar {
        let mut r = Scalar::q_pow(self.qexp);
        for (x, &e) in &self.n {
            if x != y {
                r *= (Scalar::one() - ratio(x, y)).pow(e);
            }
        }
        r
    }

    /// `F(b)`.
    fn value_at(&self, b: &SpectralPoint) -> Result<Scalar> {
        match self.n.get(b).copied().unwrap_or(0) {
            e if e < 0 => Err(EvalgError::Singular(format!("pole at {}", b))),
            e if e > 0 => Ok(Scalar::zero()),
            _ => Ok(self.product_except(b)),
        }
    }

    /// Simple poles `y` with `F = r_y / (1 - y/z) + regular`.
    fn residues(&self) -> Result<Vec<(SpectralPoint, Scalar)>> {
        let mut out = Vec::new();
        for (y, &e) in &self.n {
            if e < -1 {
                return Err(EvalgError::Domain(format!("pole of order {} at {}", -e, y)));
            }
            if e == -1 {
                out.push((y.clone(), self.product_except(y)));
            }
        }
        Ok(out)
    }

    fn residue(&self, y: &SpectralPoint) -> Result<Scalar> {
        match self.n.get(y).copied().unwrap_or(0) {
            -1 => Ok(self.product_except(y)),
            e if e < -1 => Err(EvalgError::Domain(format!("pole of order {} at {}", -e, y))),
            _ => Ok(Scalar::zero()),
        }
    }
}

/// l-weight contributed by the letters of a word: `H^+(b)` carries
/// `H_{1,b}`, `H^-(b)` carries `H_{1,b}^{-1}`.
fn word_weight(sign: i64, w: &[Letter]) -> YMonomial {
    w.iter().fold(YMonomial::one(), |acc, l| {
        acc.mul(&h_monomial(1, &l.point).pow(sign * l.exp))
    })
}

pub fn lweight_of_monomial(m: &YMonomial, sign: i64) -> LWeightRational {
    let mut p = Vec::new();
    let mut q = Vec::new();
    for (x, e) in m.exponents() {
        let v = if e > 0 { &mut p } else { &mut q };
        for _ in 0..e.abs() {
            v.push(x.clone());
        }
    }
    LWeightRational::new(DrinfeldPoly::new(p), DrinfeldPoly::new(q), sign)
        .expect("coprime by construction")
}

/// Sparse row-echelon span keyed by symbols; each row is normalized at its
/// smallest symbol, which no other row uses as pivot.
#[derive(Clone, Debug, Default)]
pub struct SymSpan {
    rows: BTreeMap<Sym, EvVector>,
}

impl SymSpan {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = &EvVector> {
        self.rows.values()
    }

    pub fn reduce(&self, v: &EvVector) -> EvVector {
        let mut v = v.clone();
        let mut cursor: Option<Sym> = None;
        loop {
            let next = match &cursor {
                None => v.keys().next().cloned(),
                Some(c) => v
                    .range((Bound::Excluded(c.clone()), Bound::Unbounded))
                    .next()
                    .map(|(k, _)| k.clone()),
            };
            let Some(k) = next else { break };
            if let Some(row) = self.rows.get(&k) {
                let c = -v[&k].clone();
                vaxpy(&mut v, &c, row);
            }
            cursor = Some(k);
        }
        v
    }

    /// Adds `v`; returns whether the span grew.
    pub fn insert(&mut self, v: &EvVector) -> bool {
        let r = self.reduce(v);
        let Some((pivot, c)) = r.iter().next().map(|(k, c)| (k.clone(), c.clone())) else {
            return false;
        };
        let inv = c.inv().expect("nonzero pivot");
        let row = r.into_iter().map(|(k, x)| (k, x * &inv)).collect();
        self.rows.insert(pivot, row);
        true
    }
}

#[derive(Default)]
struct JState {
    span: SymSpan,
    expanded: HashSet<Sym>,
}

/// `H^+ ⊗ M ⊗ H^-` for a loop module `M` with diagonal `K(z)`.
pub struct EvSpace {
    pub module: GradedRep,
    /// Largest dressing `|m|` used by `eq:center` instances and by closures.
    pub d: i64,
    /// Generator depth of closures.
    pub f: usize,
    pub top: usize,
    /// Expansion precision of series parts.
    pub prec: i64,
    pub policy: JPolicy,
    /// BFS depth of `J` candidate generation from one symbol.
    pub jdepth: usize,
    /// Exponent offset added to `X^+` dressing points (negative control only).
    pub perturb: i64,
    kappa: Vec<YMonomial>,
    xplus: Vec<(SpectralPoint, Matrix)>,
    xminus: Vec<(SpectralPoint, Matrix)>,
    theta: RefCell<HashMap<(i64, SpectralPoint, SpectralPoint), Option<Scalar>>>,
    norm: RefCell<HashMap<(i64, Vec<Letter>), (Scalar, Vec<Letter>)>>,
    cache: RefCell<HashMap<(EvGen, Sym), Vec<DistTerm>>>,
    j: RefCell<JState>,
}

fn match_point(b: &Scalar, cands: &[SpectralPoint]) -> Result<SpectralPoint> {
    cands
        .iter()
        .find(|c| &c.to_scalar() == b)
        .cloned()
        .ok_or_else(|| EvalgError::Domain(format!("support point {} is not on a known orbit", b)))
}

/// Builds the ev-space of `M` with dressing bound `d` and depth `f`.
pub fn build_ev_space(m: &GradedRep, d: i64, f: usize) -> Result<EvSpace> {
    build_ev_space_with(m, d, f, JPolicy::Strict)
}

pub fn build_ev_space_with(m: &GradedRep, d: i64, f: usize, policy: JPolicy) -> Result<EvSpace> {
    if d < 0 {
        return Err(EvalgError::Domain(format!(
            "dressing bound must be nonnegative, got {}",
            d
        )));
    }
    let c = m.currents()?;
    let dim = c.dim();
    for k in &c.knum {
        for i in 0..dim {
            for j in 0..dim {
                if i != j && !k.get(i, j).is_zero() {
                    return Err(EvalgError::Domain(
                        "K(z) is not diagonal in the module basis".into(),
                    ));
                }
            }
        }
    }
    let bound = dim.max(1);
    let prec = 2 * bound as i64 + 2;
    let mut kappa = Vec::new();
    for i in 0..dim {
        let f = c.k_entry(i, i);
        let lw = reconstruct_lweight(
            &f.expand(Direction::AtInfinity, prec)?,
            &f.expand(Direction::AtZero, prec)?,
            bound,
        )?;
        if lw.sign != 1 {
            return Err(EvalgError::Domain(format!(
                "basis vector {} has l-weight sign {}",
                i, lw.sign
            )));
        }
        kappa.push(monomial_of(&lw));
    }
    let mut cands = Vec::new();
    for k in &kappa {
        for (x, _) in k.exponents() {
            for s in -8..=8 {
                cands.push(x.shift(s));
            }
        }
    }
    let conv = |l: &[(Scalar, Matrix)]| -> Result<Vec<(SpectralPoint, Matrix)>> {
        l.iter()
            .map(|(b, x)| Ok((match_point(b, &cands)?, x.clone())))
            .collect()
    };
    let sp = EvSpace {
        module: m.clone(),
        d,
        f,
        top: m.top_index(),
        prec: 12,
        policy,
        jdepth: 2,
        perturb: 0,
        kappa,
        xplus: conv(&c.xplus)?,
        xminus: conv(&c.xminus)?,
        theta: RefCell::new(HashMap::new()),
        norm: RefCell::new(HashMap::new()),
        cache: RefCell::new(HashMap::new()),
        j: RefCell::new(JState::default()),
    };
    for i in 0..dim {
        sp.ensure_j(&Sym::base(i))?;
    }
    Ok(sp)
}

impl EvSpace {
    pub fn dim_m(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa(&self, i: usize) -> &YMonomial {
        &self.kappa[i]
    }

    pub fn highest(&self) -> Sym {
        Sym::base(self.top)
    }

    /// Number of independent `J` vectors generated so far.
    pub fn j_dim(&self) -> usize {
        self.j.borrow().span.dim()
    }

    /// Current rows of the `J`-span in echelon form.
    pub fn j_rows(&self) -> Vec<EvVector> {
        self.j.borrow().span.rows().cloned().collect()
    }

    /// The space with `X^+` dressing points shifted by `q^k`.
    pub fn perturbed(mut self, k: i64) -> Self {
        self.perturb = k;
        self.cache.borrow_mut().clear();
        self
    }

    fn theta_at(&self, sign: i64, x: &SpectralPoint, y: &SpectralPoint) -> Option<Scalar> {
        if x == y {
            return None;
        }
        let key = (sign, x.clone(), y.clone());
        if let Some(v) = self.theta.borrow().get(&key) {
            return v.clone();
        }
        let th = big_theta_closed(sign, 1, 1);
        let r = ratio(x, y);
        let (n, d) = (th.num.eval(&r), th.den.eval(&r));
        let v = if n.is_zero() || d.is_zero() {
            None
        } else {
            Some(n / d)
        };
        self.theta.borrow_mut().insert(key, v.clone());
        v
    }

    /// Normal form of a word of `H^sign` letters and the scalar it picks up.
    pub fn normalize(&self, sign: i64, word: Vec<Letter>) -> (Scalar, Vec<Letter>) {
        let key = (sign, word);
        if let Some(v) = self.norm.borrow().get(&key) {
            return v.clone();
        }
        let mut w: Vec<Letter> = key.1.iter().filter(|l| l.exp != 0).cloned().collect();
        let mut c = Scalar::one();
        // Merge same-point letters that can be brought together.
        'merge: loop {
            for j in 1..w.len() {
                let mut coef = Scalar::one();
                let mut i = j;
                while i > 0 {
                    i -= 1;
                    if w[i].point == w[j].point {
                        c *= coef;
                        let e = w.remove(j).exp;
                        w[i].exp += e;
                        if w[i].exp == 0 {
                            w.remove(i);
                        }
                        continue 'merge;
                    }
                    match self.theta_at(sign, &w[i].point, &w[j].point) {
                        Some(th) => coef *= th.pow(w[i].exp * w[j].exp),
                        None => break,
                    }
                }
            }
            break;
        }
        // Lexicographic normal form of the partially commutative word.
        let mut out = Vec::with_capacity(w.len());
        while !w.is_empty() {
            let mut best: Option<(usize, Scalar)> = None;
            for j in 0..w.len() {
                let mut coef = Scalar::one();
                let mut free = true;
                for i in 0..j {
                    match self.theta_at(sign, &w[i].point, &w[j].point) {
                        Some(th) => coef *= th.pow(w[i].exp * w[j].exp),
                        None => {
                            free = false;
                            break;
                        }
                    }
                }
                if free && best.as_ref().map_or(true, |(b, _)| w[j] < w[*b]) {
                    best = Some((j, coef));
                }
            }
            let (j, coef) = best.expect("the first letter is always free");
            c *= coef;
            out.push(w.remove(j));
        }
        let r = (c, out);
        self.norm.borrow_mut().insert(key, r.clone());
        r
    }

    pub fn make_sym(&self, plus: Vec<Letter>, mid: usize, minus: Vec<Letter>) -> (Scalar, Sym) {
        let (cp, plus) = self.normalize(1, plus);
        let (cm, minus) = self.normalize(-1, minus);
        (cp * cm, Sym { plus, mid, minus })
    }

    /// l-weight of a symbol as a monomial (the `k^±` eigenvalue, sign `+`).
    pub fn weight(&self, s: &Sym) -> YMonomial {
        self.kappa[s.mid]
            .mul(&word_weight(1, &s.plus))
            .mul(&word_weight(-1, &s.minus))
    }

    /// The `Ü^0` l-weight of a symbol: `K^±_{1,0} = -k^∓`.
    pub fn lweight(&self, s: &Sym) -> LWeightRational {
        lweight_of_monomial(&self.weight(s), -1)
    }

    /// Evaluated generator on a symbol.
    pub fn apply(&self, g: EvGen, s: &Sym) -> Result<Vec<DistTerm>> {
        let key = (g, s.clone());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(v.clone());
        }
        let r = self.apply_raw(g, s)?;
        self.cache.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn apply_raw(&self, g: EvGen, s: &Sym) -> Result<Vec<DistTerm>> {
        let mut out = Vec::new();
        match g {
            EvGen::K0 { eps } => {
                let f = self.weight(s).rational().scale(&Scalar::from_int(-1));
                let dir = if eps > 0 {
                    Direction::AtZero
                } else {
                    Direction::AtInfinity
                };
                out.push(DistTerm {
                    part: Part::series(f, dir, self.prec)?,
                    sym: s.clone(),
                    coeff: Scalar::one(),
                });
            }
            EvGen::K { eps, m } => {
                if m < 1 {
                    return Err(EvalgError::Domain(format!("K needs m >= 1, got {}", m)));
                }
                for (y, r) in Factored::of(&self.weight(s)).residues()? {
                    let p = y.shift(2 * m);
                    let (c, sym) = if eps > 0 {
                        let mut w = dress_letters(1, m, &p);
                        w.extend(s.plus.iter().cloned());
                        self.make_sym(w, s.mid, s.minus.clone())
                    } else {
                        let mut w = dress_letters(-1, -m, &p);
                        w.extend(s.minus.iter().cloned());
                        self.make_sym(s.plus.clone(), s.mid, w)
                    };
                    let coeff = if eps > 0 { r * c } else { -(r * c) };
                    out.push(DistTerm {
                        part: Part::Delta(p),
                        sym,
                        coeff,
                    });
                }
            }
            EvGen::X { eps, n } => {
                let (list, fac) = if eps > 0 {
                    (&self.xplus, Factored::of(&word_weight(1, &s.plus)))
                } else {
                    (&self.xminus, Factored::of(&word_weight(-1, &s.minus)))
                };
                for (b, xb) in list {
                    if (0..xb.rows()).all(|i| xb.get(i, s.mid).is_zero()) {
                        continue;
                    }
                    let g = fac.value_at(b)?;
                    if g.is_zero() {
                        continue;
                    }
                    for i in 0..xb.rows() {
                        let e = xb.get(i, s.mid);
                        if e.is_zero() {
                            continue;
                        }
                        let (p, c, sym) = if eps > 0 {
                            let p = b.shift(2 * n);
                            let mut w = dress_letters(1, n, &p.shift(self.perturb));
                            w.extend(s.plus.iter().cloned());
                            let (c, sym) = self.make_sym(w, i, s.minus.clone());
                            (p, c, sym)
                        } else {
                            let p = b.shift(-2 * n);
                            let mut w = dress_letters(-1, n, &p);
                            w.extend(s.minus.iter().cloned());
                            let (c, sym) = self.make_sym(s.plus.clone(), i, w);
                            (p, c, sym)
                        };
                        out.push(DistTerm {
                            part: Part::Delta(p),
                            sym,
                            coeff: e * &g * c,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies a generator to a vector.
    pub fn apply_vec(&self, g: EvGen, v: &EvVector) -> Result<Vec<DistTerm>> {
        let mut out = Vec::new();
        for (s, c) in v {
            for t in self.apply(g, s)? {
                out.push(DistTerm {
                    coeff: &t.coeff * c,
                    ..t
                });
            }
        }
        Ok(out)
    }

    /// `E_{m,p}(S) = r_{pq^{-2m}}(F_S) (X, w, H^-_{-m}(p) Y) - r_p(F_S) (H^+_m(p)^{-1} X, w, Y)`,
    /// left-multiplied by the prefixes `wp`, `wm`. `None` when both residues
    /// vanish or when the policy rejects a cancellation of inserted letters.
    #[allow(clippy::too_many_arguments)]
    pub fn center_instance(
        &self,
        m: i64,
        p: &SpectralPoint,
        wp: &[Letter],
        x: &[Letter],
        mid: usize,
        wm: &[Letter],
        y: &[Letter],
    ) -> Result<Option<EvVector>> {
        let s = Sym {
            plus: x.to_vec(),
            mid,
            minus: y.to_vec(),
        };
        let fac = Factored::of(&self.weight(&s));
        let (r1, r2) = match (fac.residue(&p.shift(-2 * m)), fac.residue(p)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(None),
        };
        if r1.is_zero() && r2.is_zero() {
            return Ok(None);
        }
        let cat = |a: &[Letter], b: &[Letter], c: &[Letter]| -> Vec<Letter> {
            a.iter().chain(b).chain(c).cloned().collect()
        };
        let da = dress_letters(-1, -m, p);
        let db = inverse_word(&dress_letters(1, m, p));
        let t1 = (cat(wp, &[], x), cat(wm, &da, y));
        let t2 = (cat(wp, &db, x), cat(wm, &[], y));
        let mut v = EvVector::new();
        for ((pw, mw), r) in [(t1, r1.clone()), (t2, -r2.clone())] {
            if r.is_zero() {
                continue;
            }
            let sizes = word_size(&pw) + word_size(&mw);
            let (c, sym) = self.make_sym(pw, mid, mw);
            if self.policy == JPolicy::Strict && sym.size() != sizes {
                return Ok(None);
            }
            vadd(&mut v, sym, r * c);
        }
        Ok(if v.is_empty() { None } else { Some(v) })
    }

    /// `eq:center` instances having `t` among their terms.
    fn j_candidates(&self, t: &Sym) -> Result<Vec<EvVector>> {
        let mut out = Vec::new();
        let ms: Vec<i64> = (1..=self.d).flat_map(|m| [m, -m]).collect();
        for &m in &ms {
            // t = W_+ X ⊗ w ⊗ W_- H^-_{-m}(p) Y.
            let tmpl = dress_letters(-1, -m, &SpectralPoint::param(0, 0));
            for k in 0..t.minus.len() {
                if let Some((p, y)) = match_template(&t.minus, k, &tmpl) {
                    for kp in 0..=t.plus.len() {
                        let (wp, x) = t.plus.split_at(kp);
                        if let Some(v) =
                            self.center_instance(m, &p, wp, x, t.mid, &t.minus[..k], &y)?
                        {
                            out.push(v);
                        }
                    }
                }
            }
            // t = W_+ H^+_m(p)^{-1} X ⊗ w ⊗ W_- Y.
            let tmpl = inverse_word(&dress_letters(1, m, &SpectralPoint::param(0, 0)));
            for k in 0..t.plus.len() {
                if let Some((p, x)) = match_template(&t.plus, k, &tmpl) {
                    for km in 0..=t.minus.len() {
                        let (wm, y) = t.minus.split_at(km);
                        if let Some(v) =
                            self.center_instance(m, &p, &t.plus[..k], &x, t.mid, wm, y)?
                        {
                            out.push(v);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Grows the `J`-span by the instances reachable from `s`.
    pub fn ensure_j(&self, s: &Sym) -> Result<()> {
        let mut queue = VecDeque::from([(s.clone(), 0usize)]);
        while let Some((t, depth)) = queue.pop_front() {
            if !self.j.borrow_mut().expanded.insert(t.clone()) {
                continue;
            }
            for v in self.j_candidates(&t)? {
                if depth < self.jdepth {
                    for k in v.keys() {
                        if !self.j.borrow().expanded.contains(k) {
                            queue.push_back((k.clone(), depth + 1));
                        }
                    }
                }
                self.j.borrow_mut().span.insert(&v);
            }
        }
        Ok(())
    }

    /// Reduction modulo the `J`-span.
    pub fn reduce(&self, v: &EvVector) -> Result<EvVector> {
        for s in v.keys() {
            self.ensure_j(s)?;
        }
        let mut r = self.j.borrow().span.reduce(v);
        // Reduction may introduce symbols whose instances are not generated yet.
        for _ in 0..=MAX_REDUCE_ROUNDS {
            let fresh: Vec<Sym> = r
                .keys()
                .filter(|k| !self.j.borrow().expanded.contains(*k))
                .cloned()
                .collect();
            if fresh.is_empty() {
                return Ok(r);
            }
            for s in &fresh {
                self.ensure_j(s)?;
            }
            r = self.j.borrow().span.reduce(&r);
        }
        Err(EvalgError::Bound(format!(
            "J reduction did not close after {} rounds",
            MAX_REDUCE_ROUNDS
        )))
    }

    pub fn in_j(&self, v: &EvVector) -> Result<bool> {
        Ok(self.reduce(v)?.is_empty())
    }
}

/// Matches the letters of a dressing template (relative to the point `a^0`)
/// at position `k`; returns the point and the remaining word.
fn match_template(
    word: &[Letter],
    k: usize,
    tmpl: &[Letter],
) -> Option<(SpectralPoint, Vec<Letter>)> {
    let first = word.get(k)?;
    let off = tmpl[0].point.exponent;
    let p = SpectralPoint {
        base: first.point.base.clone(),
        exponent: first.point.exponent - off,
    };
    let mut rest = Vec::new();
    for (idx, t) in tmpl.iter().enumerate() {
        let l = word.get(k + idx)?;
        if l.point.base != p.base || l.point.exponent != p.exponent + t.point.exponent {
            return None;
        }
        if l.exp.signum() != t.exp.signum() || l.exp.abs() < t.exp.abs() {
            return None;
        }
        if l.exp != t.exp {
            if idx + 1 != tmpl.len() {
                return None;
            }
            rest.push(Letter {
                point: l.point.clone(),
                exp: l.exp - t.exp,
            });
        }
    }
    rest.extend(word[k + tmpl.len()..].iter().cloned());
    Some((p, rest))
}

/// `sum c v^a z^b`.
pub type Multiplier = Vec<(Scalar, i64, i64)>;

/// `(a v + b z)(c v + d z)`.
pub fn quadratic(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Multiplier {
    vec![(&a * &c, 2, 0), (&a * &d + &b * &c, 1, 1), (b * d, 0, 2)]
}

pub fn linear(a: Scalar, b: Scalar) -> Multiplier {
    vec![(a, 1, 0), (b, 0, 1)]
}

struct Term2 {
    v: Part,
    z: Part,
    sym: Sym,
    coeff: Scalar,
}

impl EvSpace {
    /// `A(v) B(z) S` when `a_outer`, else `B(z) A(v) S`. Delta components of
    /// the inner image are reduced modulo `J` before the outer action.
    fn compose(&self, a: EvGen, b: EvGen, s: &Sym, a_outer: bool) -> Result<Vec<Term2>> {
        let (first, second) = if a_outer { (b, a) } else { (a, b) };
        let inner = self.apply(first, s)?;
        let mut stages: Vec<(Part, EvVector)> = Vec::new();
        for t in &inner {
            if let Part::Series { .. } = t.part {
                stages.push((
                    t.part.clone(),
                    [(t.sym.clone(), t.coeff.clone())].into_iter().collect(),
                ));
            }
        }
        for (p, v) in delta_components(&inner) {
            stages.push((Part::Delta(p), self.reduce(&v)?));
        }
        let mut out = Vec::new();
        for (part, v) in stages {
            for (sym, c) in v {
                for t2 in self.apply(second, &sym)? {
                    let coeff = &c * &t2.coeff;
                    let (v, z) = if a_outer {
                        (t2.part, part.clone())
                    } else {
                        (part.clone(), t2.part)
                    };
                    out.push(Term2 {
                        v,
                        z,
                        sym: t2.sym,
                        coeff,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Coefficient of `v^{-i} z^{-j}` of `mult * terms`.
    fn coeff2(
        &self,
        terms: &[Term2],
        mult: &Multiplier,
        i: i64,
        j: i64,
        out: &mut EvVector,
        sign: i64,
    ) {
        for t in terms {
            for (c, a, b) in mult {
                let x = &t.coeff * c * t.v.mode(i + a) * t.z.mode(j + b);
                vadd(out, t.sym.clone(), if sign > 0 { x } else { -x });
            }
        }
    }

    /// `lm * A(v)B(z) - rm * B(z)A(v)` on `s`, coefficientwise modulo `J`.
    fn exchange_check(
        &self,
        a: EvGen,
        b: EvGen,
        lm: &Multiplier,
        rm: &Multiplier,
        s: &Sym,
        window: i64,
    ) -> Result<Option<(i64, i64)>> {
        let lhs = self.compose(a, b, s, true)?;
        let rhs = self.compose(a, b, s, false)?;
        for i in -window..=window {
            for j in -window..=window {
                let mut d = EvVector::new();
                self.coeff2(&lhs, lm, i, j, &mut d, 1);
                self.coeff2(&rhs, rm, i, j, &mut d, -1);
                if !self.in_j(&d)? {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    }

    /// `[X^+_{1,r}(v), X^-_{1,s}(z)] = (q-q^-1)^{-1} delta(v/(q^{2(r+s)} z)) (K^+_{1,r+s}(v) - K^-_{1,r+s}(z))`.
    fn xx_check(&self, r: i64, s: i64, sym: &Sym, window: i64) -> Result<Option<(i64, i64)>> {
        for i in -window..=window {
            for j in -window..=window {
                if !self.xx_residual(r, s, sym, i, j)?.is_empty() {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    }

    /// The `(i, j)` mode of the `X^+ X^-` relation on `sym`, reduced modulo `J`.
    pub fn xx_residual(&self, r: i64, s: i64, sym: &Sym, i: i64, j: i64) -> Result<EvVector> {
        let xp = EvGen::X { eps: 1, n: r };
        let xm = EvGen::X { eps: -1, n: s };
        let lhs = self.compose(xp, xm, sym, true)?;
        let rhs = self.compose(xp, xm, sym, false)?;
        let n = r + s;
        let kp = if n >= 0 {
            self.apply(EvGen::k(1, n), sym)?
        } else {
            vec![]
        };
        let km = if n <= 0 {
            self.apply(EvGen::k(-1, -n), sym)?
        } else {
            vec![]
        };
        let c = Scalar::q_pow(2 * n);
        let inv = qdiff().inv().expect("q - 1/q is nonzero");
        let one: Multiplier = vec![(Scalar::one(), 0, 0)];
        let mut d = EvVector::new();
        self.coeff2(&lhs, &one, i, j, &mut d, 1);
        self.coeff2(&rhs, &one, i, j, &mut d, -1);
        vaxpy(&mut d, &-(&inv * c.pow(-j)), &dist_mode(&kp, i + j));
        vaxpy(&mut d, &(&inv * c.pow(i)), &dist_mode(&km, i + j));
        self.reduce(&d)
    }

    /// `H^-_{-m}(z)[k^+ - k^-](zq^{-2m}) S - H^+_m(z)^{-1}[k^+ - k^-](z) S`.
    pub fn center_dist(&self, m: i64, s: &Sym) -> Result<Vec<DistTerm>> {
        let mut out = Vec::new();
        for (y, r) in Factored::of(&self.weight(s)).residues()? {
            let p = y.shift(2 * m);
            let mut w = dress_letters(-1, -m, &p);
            w.extend(s.minus.iter().cloned());
            let (c, sym) = self.make_sym(s.plus.clone(), s.mid, w);
            out.push(DistTerm {
                part: Part::Delta(p),
                sym,
                coeff: &r * c,
            });
            let mut w = inverse_word(&dress_letters(1, m, &y));
            w.extend(s.plus.iter().cloned());
            let (c, sym) = self.make_sym(w, s.mid, s.minus.clone());
            out.push(DistTerm {
                part: Part::Delta(y),
                sym,
                coeff: -(r * c),
            });
        }
        Ok(out)
    }
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

    fn record(&mut self, r: Result<Option<(i64, i64)>>, label: impl FnOnce() -> String) {
        self.checked += 1;
        if self.failure.is_some() {
            return;
        }
        match r {
            Ok(None) => {}
            Ok(Some((i, j))) => self.failure = Some(format!("{} at mode ({},{})", label(), i, j)),
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

fn q2(k: i64) -> Scalar {
    Scalar::q_pow(2 * k)
}

/// Checks the defining relations of `Ü_q` at `C = 1`, `c^±(z) = 1` on the
/// evaluated operators, for `K`-indices `0..=space.d`, `X`-indices in `rs`,
/// modes `|i|, |j| <= window`, on the given symbols, modulo `J`.
pub fn check_qdaff_relations(
    space: &EvSpace,
    syms: &[Sym],
    rs: &[i64],
    window: i64,
) -> RelationReport {
    let one = Scalar::one;
    let d = space.d;
    let mut results = Vec::new();

    let mut t = Tally::new("K+K+");
    for eps in [1i64, -1] {
        for m in 0..=d {
            for n in 0..=d {
                let lm = quadratic(one(), -q2(eps), one(), -q2(m - n - eps));
                let rm = quadratic(q2(eps), -one(), q2(-eps), -q2(m - n));
                for s in syms {
                    let r = space.exchange_check(
                        EvGen::k(eps, m),
                        EvGen::k(eps, n),
                        &lm,
                        &rm,
                        s,
                        window,
                    );
                    t.record(r, || format!("eps={} m={} n={} on {:?}", eps, m, n, s));
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
            for s in syms {
                let r = space.exchange_check(EvGen::k(1, m), EvGen::k(-1, n), &lm, &rm, s, window);
                t.record(r, || format!("m={} n={} on {:?}", m, n, s));
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("K+X+");
    for eps in [1i64, -1] {
        for m in 0..=d {
            for &r in rs {
                let lm = linear(one(), -q2(eps));
                let rm = linear(q2(eps), -one());
                for s in syms {
                    let res = space.exchange_check(
                        EvGen::k(eps, m),
                        EvGen::X { eps, n: r },
                        &lm,
                        &rm,
                        s,
                        window,
                    );
                    t.record(res, || format!("eps={} m={} r={} on {:?}", eps, m, r, s));
                }
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("K+X-");
    for eps in [1i64, -1] {
        for m in 0..=d {
            for &r in rs {
                let lm = linear(one(), -q2(m - eps));
                let rm = linear(q2(-eps), -q2(m));
                for s in syms {
                    let res = space.exchange_check(
                        EvGen::k(eps, m),
                        EvGen::X { eps: -eps, n: r },
                        &lm,
                        &rm,
                        s,
                        window,
                    );
                    t.record(res, || format!("eps={} m={} r={} on {:?}", eps, m, r, s));
                }
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("X+X+");
    for eps in [1i64, -1] {
        for &r in rs {
            for &s2 in rs {
                let lm = linear(one(), -q2(eps));
                let rm = linear(q2(eps), -one());
                for s in syms {
                    let res = space.exchange_check(
                        EvGen::X { eps, n: r },
                        EvGen::X { eps, n: s2 },
                        &lm,
                        &rm,
                        s,
                        window,
                    );
                    t.record(res, || format!("eps={} r={} s={} on {:?}", eps, r, s2, s));
                }
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("X+X-");
    for &r in rs {
        for &s2 in rs {
            for s in syms {
                t.record(space.xx_check(r, s2, s, window), || {
                    format!("r={} s={} on {:?}", r, s2, s)
                });
            }
        }
    }
    results.push(t.done());

    let mut t = Tally::new("center");
    for m in 1..=d.max(1) {
        for s in syms {
            let r = (|| -> Result<Option<(i64, i64)>> {
                let dist = space.center_dist(m, s)?;
                for j in -window..=window {
                    if !space.in_j(&dist_mode(&dist, j))? {
                        return Ok(Some((j, 0)));
                    }
                }
                Ok(None)
            })();
            t.record(r, || format!("m={} on {:?}", m, s));
        }
    }
    results.push(t.done());

    RelationReport { results }
}

/// `ev ∘ iota_0 = id`: `ev(X^±_{1,0})` and `ev(-K^∓_{1,0})` act on `1 ⊗ w ⊗ 1`
/// as the mode matrices of `M`.
pub fn check_ev_iota0(space: &EvSpace, window: i64) -> Result<Option<String>> {
    let m = &space.module;
    let window = window.min(m.window);
    for w in 0..space.dim_m() {
        let s = Sym::base(w);
        for k in -window..=window {
            for (g, mode) in [
                (EvGen::X { eps: 1, n: 0 }, Mode::XPlus(k)),
                (EvGen::X { eps: -1, n: 0 }, Mode::XMinus(k)),
            ] {
                let got = dist_mode(&space.apply(g, &s)?, k);
                let mut want = EvVector::new();
                let mat = m.op(mode);
                for i in 0..m.dim {
                    vadd(&mut want, Sym::base(i), mat.get(i, w).clone());
                }
                if got != want {
                    return Ok(Some(format!("{:?} mode {} on basis vector {}", g, k, w)));
                }
            }
        }
        for n in 0..=window {
            // iota_0(k^±(z)) = -K^∓_{1,0}(z); k^+_n multiplies z^{-n}, k^-_{-n} multiplies z^n.
            for (eps, mode, e) in [(-1i64, Mode::KPlus(n), n), (1, Mode::KMinus(n), -n)] {
                let got: EvVector = dist_mode(&space.apply(EvGen::K0 { eps }, &s)?, e)
                    .into_iter()
                    .map(|(k, v)| (k, -v))
                    .collect();
                let mut want = EvVector::new();
                let mat = m.op(mode);
                for i in 0..m.dim {
                    vadd(&mut want, Sym::base(i), mat.get(i, w).clone());
                }
                if got != want {
                    return Ok(Some(format!("k mode {:?} on basis vector {}", mode, w)));
                }
            }
        }
    }
    Ok(None)
}

/// One l-block of a highest t-weight space.
#[derive(Clone, Debug)]
pub struct TBlock {
    pub lweight: LWeightRational,
    pub monomial: YMonomial,
    /// Representatives modulo `J`.
    pub vectors: Vec<EvVector>,
}

#[derive(Clone, Debug)]
pub struct HighestT {
    pub blocks: Vec<TBlock>,
    pub adjacency: Vec<AdjacencyRecord>,
    /// Every `K`-image of a block vector meets each l-block at one point.
    pub single_support: bool,
    /// Every `K`-adjacency satisfies the `H_{m,a}` shift law.
    pub shift_law: bool,
    pub t_dominant: bool,
    /// Images that vanished modulo `J`.
    pub killed: usize,
    pub j_dim: usize,
}

impl HighestT {
    pub fn lweights(&self) -> Vec<LWeightRational> {
        self.blocks.iter().map(|b| b.lweight.clone()).collect()
    }

    /// Support points of `K^-_{1,-1}` adjacencies.
    pub fn kminus_points(&self) -> Vec<SpectralPoint> {
        self.adjacency
            .iter()
            .filter(|r| matches!(r.current, AdjacencyCurrent::K { m: 1, sign: -1 }))
            .map(|r| r.point.clone())
            .collect()
    }
}

/// A `K`- or `X`-image modulo `J` and the l-weights on both ends.
#[derive(Clone, Debug)]
pub struct ImageRecord {
    pub gen: EvGen,
    pub point: SpectralPoint,
    /// l-weight of the acted symbol.
    pub target: YMonomial,
    /// l-weights present in the reduced image.
    pub sources: Vec<YMonomial>,
}

impl ImageRecord {
    /// `kappa_source = kappa_target * H_{m,P}^{±1}` (for `K`) or `* A_P^{±1}` (for `X`),
    /// with one l-weight per image.
    pub fn shift_law(&self) -> bool {
        let shift = match self.gen {
            EvGen::K { eps, m } => h_monomial(m, &self.point).pow(eps),
            EvGen::X { eps, .. } => a_monomial(&self.point).pow(eps),
            EvGen::K0 { .. } => YMonomial::one(),
        };
        let want = self.target.mul(&shift);
        self.sources.len() == 1 && self.sources[0] == want
    }
}

#[derive(Clone, Debug, Default)]
pub struct ImageSummary {
    pub records: Vec<ImageRecord>,
    /// Images that vanished modulo `J`.
    pub killed: usize,
    /// Applications outside the simple-pole model (higher-order poles).
    pub unsupported: usize,
}

/// Applies the generators to the symbols and records every image that
/// survives modulo `J`, one record per support point.
pub fn image_records(space: &EvSpace, syms: &[Sym], gens: &[EvGen]) -> Result<ImageSummary> {
    let mut out = Vec::new();
    let mut killed = 0;
    let mut unsupported = 0;
    for s in syms {
        for &g in gens {
            let terms = match space.apply(g, s) {
                Ok(t) => t,
                Err(EvalgError::Domain(_)) | Err(EvalgError::Singular(_)) => {
                    unsupported += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            for (p, img) in delta_components(&terms) {
                let r = space.reduce(&img)?;
                if r.is_empty() {
                    killed += 1;
                    continue;
                }
                let mut sources: Vec<YMonomial> = Vec::new();
                for k in r.keys() {
                    let w = space.weight(k);
                    if !sources.contains(&w) {
                        sources.push(w);
                    }
                }
                out.push(ImageRecord {
                    gen: g,
                    point: p,
                    target: space.weight(s),
                    sources,
                });
            }
        }
    }
    Ok(ImageSummary {
        records: out,
        killed,
        unsupported,
    })
}

/// Whether each source l-weight is reached from a given symbol through one point only.
pub fn single_point_support(records: &[ImageRecord]) -> bool {
    let mut seen: HashMap<(EvGen, YMonomial, YMonomial), SpectralPoint> = HashMap::new();
    for r in records {
        for src in &r.sources {
            let key = (r.gen, r.target.clone(), src.clone());
            match seen.get(&key) {
                Some(p) if p != &r.point => return false,
                _ => {
                    seen.insert(key, r.point.clone());
                }
            }
        }
    }
    true
}

/// `K^±_{1,±m}` for `1 <= m <= d`.
pub fn k_gens(d: i64) -> Vec<EvGen> {
    (1..=d)
        .flat_map(|m| [EvGen::K { eps: 1, m }, EvGen::K { eps: -1, m }])
        .collect()
}

/// `X^±_{1,n}` for `n` in `ns`.
pub fn x_gens(ns: &[i64]) -> Vec<EvGen> {
    ns.iter()
        .flat_map(|&n| [EvGen::X { eps: 1, n }, EvGen::X { eps: -1, n }])
        .collect()
}

/// Closes `1 ⊗ v ⊗ 1` under `ev(K^±_{1,±m})`, `1 <= m <= d`, to depth `f`,
/// modulo `J`, and records l-blocks and `K`-adjacencies. An adjacency has the
/// image block as `source` and the acted block as `target`.
pub fn highest_t_space(m: &GradedRep, d: i64, f: usize) -> Result<HighestT> {
    let space = build_ev_space(m, d, f)?;
    highest_t_space_in(&space)
}

pub fn highest_t_space_in(space: &EvSpace) -> Result<HighestT> {
    let s0 = space.highest();
    let mut blocks: Vec<TBlock> = Vec::new();
    let mut spans: Vec<SymSpan> = Vec::new();
    let mut adjacency = Vec::new();
    let mut single_support = true;
    let mut killed = 0;
    let block_of =
        |mono: &YMonomial, blocks: &mut Vec<TBlock>, spans: &mut Vec<SymSpan>| -> usize {
            if let Some(i) = blocks.iter().position(|b| &b.monomial == mono) {
                return i;
            }
            blocks.push(TBlock {
                lweight: lweight_of_monomial(mono, -1),
                monomial: mono.clone(),
                vectors: vec![],
            });
            spans.push(SymSpan::default());
            blocks.len() - 1
        };
    let v0: EvVector = [(s0.clone(), Scalar::one())].into_iter().collect();
    let v0 = space.reduce(&v0)?;
    if v0.is_empty() {
        return Err(EvalgError::Domain("the highest vector lies in J".into()));
    }
    let b0 = block_of(&space.weight(&s0), &mut blocks, &mut spans);
    spans[b0].insert(&v0);
    blocks[b0].vectors.push(v0.clone());
    let mut queue = VecDeque::from([(v0, b0, 0usize)]);
    while let Some((v, b, depth)) = queue.pop_front() {
        if depth >= space.f {
            continue;
        }
        for g in k_gens(space.d) {
            let EvGen::K { eps, m: mm } = g else {
                unreachable!()
            };
            let mut hit: HashMap<usize, SpectralPoint> = HashMap::new();
            for (p, img) in delta_components(&space.apply_vec(g, &v)?) {
                let r = space.reduce(&img)?;
                if r.is_empty() {
                    killed += 1;
                    continue;
                }
                let mono = space.weight(r.keys().next().unwrap());
                if r.keys().any(|k| space.weight(k) != mono) {
                    return Err(EvalgError::Domain("image is not l-homogeneous".into()));
                }
                let ib = block_of(&mono, &mut blocks, &mut spans);
                if hit.insert(ib, p.clone()).is_some_and(|q| q != p) {
                    single_support = false;
                }
                let rec = AdjacencyRecord {
                    source: ib,
                    target: b,
                    current: AdjacencyCurrent::K { m: mm, sign: eps },
                    point: p,
                };
                if !adjacency.contains(&rec) {
                    adjacency.push(rec);
                }
                if spans[ib].insert(&r) {
                    blocks[ib].vectors.push(r.clone());
                    queue.push_back((r, ib, depth + 1));
                }
            }
        }
    }
    let lws: Vec<LWeightRational> = blocks.iter().map(|b| b.lweight.clone()).collect();
    let shift_law = adjacency.iter().all(|r| adjacency_consistent(&lws, r));
    let t_dominant = is_t_dominant(&lws, &adjacency);
    Ok(HighestT {
        blocks,
        adjacency,
        single_support,
        shift_law,
        t_dominant,
        killed,
        j_dim: space.j_dim(),
    })
}

/// Symbols reachable from the base symbols in at most `space.f` generator
/// steps, and the dimension of their span modulo `J`.
#[derive(Clone, Debug)]
pub struct Closure {
    pub syms: Vec<Sym>,
    pub quotient_dim: usize,
    pub j_dim: usize,
    /// Applications skipped because a symbol has a higher-order pole.
    pub unsupported: usize,
}

/// Closure of the base symbols under `K^±_{1,±m}` (`m <= d`) and `X^±_{1,n}` (`|n| <= d`).
pub fn closure(space: &EvSpace) -> Result<Closure> {
    let ns: Vec<i64> = (-space.d..=space.d).collect();
    let mut gens = k_gens(space.d);
    gens.extend(x_gens(&ns));
    let mut seen: Vec<Sym> = (0..space.dim_m()).map(Sym::base).collect();
    let mut span = SymSpan::default();
    for s in &seen {
        span.insert(&space.reduce(&[(s.clone(), Scalar::one())].into_iter().collect())?);
    }
    let mut frontier = seen.clone();
    let mut unsupported = 0;
    for _ in 0..space.f {
        let mut next = Vec::new();
        for s in &frontier {
            for &g in &gens {
                let terms = match space.apply(g, s) {
                    Ok(t) => t,
                    Err(EvalgError::Domain(_)) | Err(EvalgError::Singular(_)) => {
                        unsupported += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                for (_, img) in delta_components(&terms) {
                    let r = space.reduce(&img)?;
                    if !span.insert(&r) {
                        continue;
                    }
                    for k in r.keys() {
                        if !seen.contains(k) {
                            seen.push(k.clone());
                            next.push(k.clone());
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(Closure {
        syms: seen,
        quotient_dim: span.dim(),
        j_dim: space.j_dim(),
        unsupported,
    })
}

/// `(K^eps_{1,0}(z q^shift))^power`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagFactor {
    pub eps: i64,
    pub shift: i64,
    pub power: i64,
}

impl DiagFactor {
    fn rational(&self, space: &EvSpace, s: &Sym) -> Result<RatFn> {
        let f = space
            .weight(s)
            .rational()
            .scale(&Scalar::from_int(-1))
            .scale_arg(&Scalar::q_pow(self.shift));
        Ok(f.pow(self.power)?)
    }

    /// Value at `P`; a pole raised to a negative power gives zero.
    fn value(&self, space: &EvSpace, s: &Sym, p: &SpectralPoint) -> Result<Scalar> {
        let f = Factored::of(&space.weight(s));
        let x = p.shift(self.shift);
        let order = f.n.get(&x).copied().unwrap_or(0) * self.power;
        if order > 0 {
            return Ok(Scalar::zero());
        }
        if order < 0 {
            return Err(EvalgError::Singular(format!(
                "K_0 factor is singular at {}",
                p
            )));
        }
        Ok((-f.product_except(&x)).pow(self.power))
    }
}

/// A composed operator `scale * post * gen * pre`, with optional `z -> -z`.
#[derive(Clone, Debug)]
pub struct TruncOp {
    pub label: String,
    pub scale: Scalar,
    pub pre: Vec<DiagFactor>,
    pub gen: Option<EvGen>,
    pub post: Vec<DiagFactor>,
    pub flip: bool,
}

fn dir_of(eps: i64) -> Direction {
    if eps > 0 {
        Direction::AtZero
    } else {
        Direction::AtInfinity
    }
}

impl TruncOp {
    pub fn gen(g: EvGen) -> Self {
        TruncOp {
            label: format!("{:?}", g),
            scale: Scalar::one(),
            pre: vec![],
            gen: Some(g),
            post: vec![],
            flip: false,
        }
    }

    pub fn apply(&self, space: &EvSpace, s: &Sym) -> Result<Vec<DistTerm>> {
        let Some(g) = self.gen else {
            let eps = self
                .pre
                .iter()
                .chain(&self.post)
                .map(|f| f.eps)
                .next()
                .unwrap_or(1);
            if self.pre.iter().chain(&self.post).any(|f| f.eps != eps) {
                return Err(EvalgError::Domain("mixed expansion directions".into()));
            }
            let mut f = RatFn::constant(self.scale.clone());
            for d in self.pre.iter().chain(&self.post) {
                f = f.mul(&d.rational(space, s)?);
            }
            return Ok(vec![DistTerm {
                part: Part::series(f, dir_of(eps), space.prec)?,
                sym: s.clone(),
                coeff: Scalar::one(),
            }]);
        };
        let mut out = Vec::new();
        for t in space.apply(g, s)? {
            match &t.part {
                Part::Delta(p) => {
                    let mut c = &t.coeff * &self.scale;
                    for d in &self.pre {
                        c *= d.value(space, s, p)?;
                    }
                    for d in &self.post {
                        c *= d.value(space, &t.sym, p)?;
                    }
                    out.push(DistTerm { coeff: c, ..t });
                }
                Part::Series { f, dir, .. } => {
                    let mut f = f.scale(&self.scale);
                    for d in self.pre.iter().chain(&self.post) {
                        if dir_of(d.eps) != *dir {
                            return Err(EvalgError::Domain("mixed expansion directions".into()));
                        }
                        f = f.mul(&d.rational(space, s)?);
                    }
                    out.push(DistTerm {
                        part: Part::series(f, *dir, space.prec)?,
                        ..t
                    });
                }
            }
        }
        Ok(out)
    }

    /// Coefficient of `z^{-k}`.
    pub fn mode(&self, space: &EvSpace, v: &EvVector, k: i64) -> Result<EvVector> {
        let mut out = EvVector::new();
        for (s, c) in v {
            let m = dist_mode(&self.apply(space, s)?, k);
            let c = if self.flip && k % 2 != 0 {
                -c.clone()
            } else {
                c.clone()
            };
            vaxpy(&mut out, &c, &m);
        }
        Ok(out)
    }

    /// Delta support points of the action on `v`.
    pub fn support(&self, space: &EvSpace, v: &EvVector) -> Result<Vec<SpectralPoint>> {
        let mut pts = Vec::new();
        for (s, _) in v {
            for t in self.apply(space, s)? {
                if let Part::Delta(p) = t.part {
                    if !pts.contains(&p) {
                        pts.push(p);
                    }
                }
            }
        }
        Ok(pts)
    }
}

fn inv_qdiff() -> Scalar {
    qdiff().inv().expect("q - 1/q is nonzero")
}

/// `t^+_{1,m}(z) = -(q-q^-1)^{-1} K^+_{1,0}(zq^{-2m})^{-1} K^+_{1,m}(z)` and
/// `t^-_{1,-m}(z) = (q-q^-1)^{-1} K^-_{1,-m}(z) K^-_{1,0}(zq^{-2m})^{-1}`.
pub fn t_current_op(sign: i64, m: i64) -> TruncOp {
    let d = DiagFactor {
        eps: sign,
        shift: -2 * m,
        power: -1,
    };
    if sign > 0 {
        TruncOp {
            label: format!("t+_{}", m),
            scale: -inv_qdiff(),
            pre: vec![],
            gen: Some(EvGen::K { eps: 1, m }),
            post: vec![d],
            flip: false,
        }
    } else {
        TruncOp {
            label: format!("t-_{}", -m),
            scale: inv_qdiff(),
            pre: vec![d],
            gen: Some(EvGen::K { eps: -1, m }),
            post: vec![],
            flip: false,
        }
    }
}

/// `p^±(z q^shift) = K^∓_{1,0}(z q^shift)^{-1} K^∓_{1,0}(z q^{shift+2})`.
pub fn p_current_op_at(sign: i64, shift: i64) -> TruncOp {
    TruncOp {
        label: format!("p{}", if sign > 0 { "+" } else { "-" }),
        scale: Scalar::one(),
        pre: vec![
            DiagFactor {
                eps: -sign,
                shift,
                power: -1,
            },
            DiagFactor {
                eps: -sign,
                shift: shift + 2,
                power: 1,
            },
        ],
        gen: None,
        post: vec![],
        flip: false,
    }
}

pub fn p_current_op(sign: i64) -> TruncOp {
    p_current_op_at(sign, 0)
}

/// Generator currents of a loop-algebra copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopCurrent {
    KPlus,
    KMinus,
    XPlus,
    XMinus,
}

/// `ev(iota_m(g))`: `iota_m(k^±) = -K^∓_{1,0}`, `iota_m(x^±) = X^±_{1,±m}`.
pub fn iota_m_op(m: i64, g: LoopCurrent) -> TruncOp {
    let mut op = match g {
        LoopCurrent::KPlus => TruncOp::gen(EvGen::K0 { eps: -1 }),
        LoopCurrent::KMinus => TruncOp::gen(EvGen::K0 { eps: 1 }),
        LoopCurrent::XPlus => TruncOp::gen(EvGen::X { eps: 1, n: m }),
        LoopCurrent::XMinus => TruncOp::gen(EvGen::X { eps: -1, n: -m }),
    };
    if matches!(g, LoopCurrent::KPlus | LoopCurrent::KMinus) {
        op.scale = Scalar::from_int(-1);
    }
    op.label = format!("iota_{}({:?})", m, g);
    op
}

/// `x^+_0(z) = -K^+_{1,0}(z)^{-1} X^-_{1,1}(z)` and `x^-_0(z) = -X^+_{1,-1}(z) K^-_{1,0}(z)^{-1}`.
pub fn dynkin0_ops() -> (TruncOp, TruncOp) {
    let xp = TruncOp {
        label: "x+_0".into(),
        scale: Scalar::from_int(-1),
        pre: vec![],
        gen: Some(EvGen::X { eps: -1, n: 1 }),
        post: vec![DiagFactor {
            eps: 1,
            shift: 0,
            power: -1,
        }],
        flip: false,
    };
    let xm = TruncOp {
        label: "x-_0".into(),
        scale: Scalar::from_int(-1),
        pre: vec![DiagFactor {
            eps: -1,
            shift: 0,
            power: -1,
        }],
        gen: Some(EvGen::X { eps: 1, n: -1 }),
        post: vec![],
        flip: false,
    };
    (xp, xm)
}

/// At `C = 1`, `tau` sends the `+` currents to `z -> -z` and fixes the `-` currents.
pub fn twist_tau(op: &TruncOp, sign: i64) -> TruncOp {
    let mut o = op.clone();
    if sign > 0 {
        o.flip = !o.flip;
    }
    o.label = format!("tau({})", op.label);
    o
}

/// At `C = 1`, `sigma` is `z -> -z` on every current.
pub fn twist_sigma(op: &TruncOp) -> TruncOp {
    let mut o = op.clone();
    o.flip = !o.flip;
    o.label = format!("sigma({})", op.label);
    o
}

/// Partial fractions `P(q^-2/z)/P(1/z) = C_0 + sum_{a,p} C_p(a) / (1 - a/z)^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialFraction {
    pub c0: Scalar,
    pub table: BTreeMap<(SpectralPoint, usize), Scalar>,
}

impl PartialFraction {
    pub fn rational(&self) -> RatFn {
        let mut r = RatFn::constant(self.c0.clone());
        for ((a, p), c) in &self.table {
            let den = LPoly::one_minus_over_z(a.to_scalar()).pow(*p as u32);
            r = r.add(&RatFn {
                num: LPoly::constant(c.clone()),
                den,
            });
        }
        r
    }
}

pub fn partial_fraction(p: &DrinfeldPoly) -> PartialFraction {
    let mut mult: BTreeMap<SpectralPoint, usize> = BTreeMap::new();
    for r in p.roots() {
        *mult.entry(r.clone()).or_default() += 1;
    }
    let deg = p.degree() as i64;
    let mut table = BTreeMap::new();
    for (x, &n) in &mult {
        // With s = 1 - x/z, i.e. 1/z = (1 - s)/x, each factor 1 - c/z is (1 - c/x) + (c/x) s.
        let lin = |c: Scalar| -> Vec<Scalar> {
            let r = c * x.to_scalar().inv().expect("nonzero root");
            vec![Scalar::one() - &r, r]
        };
        let mut num = vec![Scalar::one()];
        let mut den = vec![Scalar::one()];
        for r in p.roots() {
            num = poly_mul(&num, &lin(r.shift(-2).to_scalar()));
            if r != x {
                den = poly_mul(&den, &lin(r.to_scalar()));
            }
        }
        let g = series_div(&num, &den, n);
        for j in 1..=n {
            let c = g[n - j].clone();
            if !c.is_zero() {
                table.insert((x.clone(), j), c);
            }
        }
    }
    PartialFraction {
        c0: Scalar::q_pow(-2 * deg),
        table,
    }
}

fn poly_mul(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let mut r = vec![Scalar::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

/// First `n` coefficients of `a / b` as power series.
fn series_div(a: &[Scalar], b: &[Scalar], n: usize) -> Vec<Scalar> {
    let b0 = b[0].inv().expect("nonzero constant term");
    let mut out: Vec<Scalar> = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = a.get(k).cloned().unwrap_or_default();
        for i in 1..=k {
            if let Some(bi) = b.get(i) {
                c -= bi * &out[k - i];
            }
        }
        out.push(c * &b0);
    }
    out
}
