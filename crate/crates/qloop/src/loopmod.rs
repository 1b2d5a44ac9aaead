//! Finite-dimensional modules over the quantum loop algebra of `sl_2`.
//!
//! A module is stored through its currents, which on a finite-dimensional
//! space are delta-supported:
//!
//! * `x^±(z) = sum_b delta(b/z) X^±_b`, so `x^±_m = sum_b b^m X^±_b`;
//! * `k^+(z)` and `k^-(z)` are the expansions at `z = ∞` and `z = 0` of one
//!   rational matrix `K(z) = N(1/z) / d(1/z)`.
//!
//! Mode matrices for a finite window are materialized from this data and all
//! relation checks run on the mode matrices.

use crate::formal::{g_series, Direction, FormalError, LPoly, RatFn, Series};
use crate::linalg::{Matrix, SubspaceBasis};
use crate::scalar::{qdiff, Scalar, SpectralPoint};
use std::collections::BTreeMap;

/// Errors raised while building or decomposing modules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoopError {
    #[error("pole of k(z) at a support point {0}")]
    Pole(String),
    #[error("module carries no current data")]
    NoCurrents,
    #[error("incomplete l-weight decomposition: {found} of {dim} dimensions")]
    Incomplete { found: usize, dim: usize },
    #[error("window too small: {0}")]
    Window(String),
    #[error(transparent)]
    Formal(#[from] FormalError),
}

/// Drinfeld polynomial `P(1/z) = prod_x (1 - x/z)` given by its roots.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DrinfeldPoly {
    roots: Vec<SpectralPoint>,
}

impl DrinfeldPoly {
    pub fn new(mut roots: Vec<SpectralPoint>) -> Self {
        roots.sort();
        DrinfeldPoly { roots }
    }

    pub fn one() -> Self {
        Self::default()
    }

    /// Roots `a q^{n-1}, a q^{n-3}, ..., a q^{1-n}`.
    pub fn segment(n: usize, a: &SpectralPoint) -> Self {
        let n = n as i64;
        Self::new((0..n).map(|k| a.shift(n - 1 - 2 * k)).collect())
    }

    pub fn roots(&self) -> &[SpectralPoint] {
        &self.roots
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = self.roots.clone();
        r.extend(o.roots.iter().cloned());
        Self::new(r)
    }

    /// Multiplicity of a root.
    pub fn multiplicity(&self, x: &SpectralPoint) -> usize {
        self.roots.iter().filter(|r| *r == x).count()
    }

    /// `P(c/z)` as a Laurent polynomial in `z`.
    pub fn lpoly_scaled(&self, c: &Scalar) -> LPoly {
        self.roots.iter().fold(LPoly::one(), |acc, x| {
            acc.mul(&LPoly::one_minus_over_z(c * x.to_scalar()))
        })
    }

    pub fn lpoly(&self) -> LPoly {
        self.lpoly_scaled(&Scalar::one())
    }

    /// Value of `P(1/w)` at a point `w`.
    pub fn eval_inv(&self, w: &Scalar) -> Scalar {
        self.lpoly().eval(w)
    }
}

/// `q^{deg P} P(q^{-2}/z) / P(1/z)` as a rational function.
pub fn highest_lweight_rational(p: &DrinfeldPoly) -> RatFn {
    RatFn {
        num: p
            .lpoly_scaled(&Scalar::q_pow(-2))
            .scale(&Scalar::q_pow(p.degree() as i64)),
        den: p.lpoly(),
    }
}

/// `q^{-deg P} P(1/z) / P(q^{-2}/z)` as a rational function.
pub fn lowest_lweight_rational(p: &DrinfeldPoly) -> RatFn {
    RatFn {
        num: p.lpoly().scale(&Scalar::q_pow(-(p.degree() as i64))),
        den: p.lpoly_scaled(&Scalar::q_pow(-2)),
    }
}

fn sign_dir(sign: i64) -> Direction {
    if sign > 0 {
        Direction::AtInfinity
    } else {
        Direction::AtZero
    }
}

/// Highest l-weight series `kappa^±` of `L(P)`, `+` at infinity, `-` at zero.
pub fn highest_lweight_series(p: &DrinfeldPoly, sign: i64, n: i64) -> Result<Series, LoopError> {
    Ok(highest_lweight_rational(p).expand(sign_dir(sign), n)?)
}

/// The series of the simple lowest l-weight module with polynomial `P`.
pub fn lowest_lweight_series(p: &DrinfeldPoly, sign: i64, n: i64) -> Result<Series, LoopError> {
    Ok(lowest_lweight_rational(p).expand(sign_dir(sign), n)?)
}

/// Generator modes: `XPlus(m)`, `XMinus(m)`, `KPlus(n) = k^+_n`,
/// `KMinus(n) = k^-_{-n}` with `n >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    XPlus(i64),
    XMinus(i64),
    KPlus(i64),
    KMinus(i64),
}

/// Delta-supported current data of a module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Currents {
    pub xplus: Vec<(Scalar, Matrix)>,
    pub xminus: Vec<(Scalar, Matrix)>,
    /// `N_i`, the coefficient of `z^{-i}` in the numerator of `K(z)`.
    pub knum: Vec<Matrix>,
    /// `d_i`, the coefficient of `z^{-i}` in the denominator; `d_0 = 1`.
    pub kden: Vec<Scalar>,
    /// Candidate joint eigenvalue tuples of `(N_0, N_1, ...)`.
    pub candidates: Vec<Vec<Scalar>>,
}

impl Currents {
    pub fn dim(&self) -> usize {
        self.knum[0].rows()
    }

    /// `K(w)` evaluated at a point.
    pub fn k_at(&self, w: &Scalar) -> Result<Matrix, LoopError> {
        let winv = w.inv().map_err(|_| LoopError::Pole(w.to_string()))?;
        let d: Scalar = self
            .kden
            .iter()
            .enumerate()
            .map(|(i, c)| c * winv.pow(i as i64))
            .sum();
        if d.is_zero() {
            return Err(LoopError::Pole(w.to_string()));
        }
        let mut m = Matrix::zeros(self.dim(), self.dim());
        for (i, n) in self.knum.iter().enumerate() {
            m = m.add(&n.scale(&winv.pow(i as i64)));
        }
        Ok(m.scale(&d.inv().unwrap()))
    }

    /// Entry `(i, j)` of `K(z)` as a rational function of `z`.
    pub fn k_entry(&self, i: usize, j: usize) -> RatFn {
        RatFn {
            num: LPoly::from_pairs(
                self.knum
                    .iter()
                    .enumerate()
                    .map(|(e, m)| (-(e as i64), m.get(i, j).clone())),
            ),
            den: LPoly::from_pairs(
                self.kden
                    .iter()
                    .enumerate()
                    .map(|(e, c)| (-(e as i64), c.clone())),
            ),
        }
    }

    fn mode_x(list: &[(Scalar, Matrix)], m: i64, dim: usize) -> Matrix {
        list.iter().fold(Matrix::zeros(dim, dim), |acc, (b, x)| {
            acc.add(&x.scale(&b.pow(m)))
        })
    }

    /// `k^+_n` for `0 <= n <= w` and `k^-_{-n}` for `0 <= n <= w`.
    fn k_modes(&self, w: i64) -> Result<(Vec<Matrix>, Vec<Matrix>), LoopError> {
        let dim = self.dim();
        let inv_series = |d: &[Scalar]| -> Result<Vec<Scalar>, LoopError> {
            let s = Series::new(Direction::AtZero, 0, d.to_vec(), w).inverse()?;
            Ok((0..=w).map(|k| s.coeff(k)).collect())
        };
        let conv = |num: &[Matrix], e: &[Scalar]| -> Vec<Matrix> {
            (0..=w as usize)
                .map(|n| {
                    let mut acc = Matrix::zeros(dim, dim);
                    for (i, ni) in num.iter().enumerate() {
                        if i <= n {
                            acc = acc.add(&ni.scale(&e[n - i]));
                        }
                    }
                    acc
                })
                .collect()
        };
        let e_plus = inv_series(&self.kden)?;
        let kp = conv(&self.knum, &e_plus);
        let dd = self.kden.len().max(self.knum.len()) - 1;
        let mut rden: Vec<Scalar> = (0..=dd)
            .map(|j| self.kden.get(dd - j).cloned().unwrap_or_default())
            .collect();
        if rden[0].is_zero() {
            return Err(LoopError::Pole("0".into()));
        }
        rden.truncate(dd + 1);
        let rnum: Vec<Matrix> = (0..=dd)
            .map(|j| {
                self.knum
                    .get(dd - j)
                    .cloned()
                    .unwrap_or_else(|| Matrix::zeros(dim, dim))
            })
            .collect();
        let e_minus = inv_series(&rden)?;
        let km = conv(&rnum, &e_minus);
        Ok((kp, km))
    }
}

/// A finite-dimensional module given by mode matrices on a window.
#[derive(Clone, Debug)]
pub struct GradedRep {
    pub dim: usize,
    pub window: i64,
    pub ops: BTreeMap<Mode, Matrix>,
    /// Basis index -> exponent `w` with `k^+_0 = q^w` on that vector.
    pub weights: Vec<i64>,
    pub currents: Option<Currents>,
}

impl GradedRep {
    pub fn from_currents(c: Currents, weights: Vec<i64>, window: i64) -> Result<Self, LoopError> {
        let dim = c.dim();
        let mut ops = BTreeMap::new();
        for m in -window..=window {
            ops.insert(Mode::XPlus(m), Currents::mode_x(&c.xplus, m, dim));
            ops.insert(Mode::XMinus(m), Currents::mode_x(&c.xminus, m, dim));
        }
        let (kp, km) = c.k_modes(window)?;
        for (n, (p, m)) in kp.into_iter().zip(km).enumerate() {
            ops.insert(Mode::KPlus(n as i64), p);
            ops.insert(Mode::KMinus(n as i64), m);
        }
        Ok(GradedRep {
            dim,
            window,
            ops,
            weights,
            currents: Some(c),
        })
    }

    /// The one-dimensional module with `P = 1`.
    pub fn trivial(window: i64) -> Self {
        let c = Currents {
            xplus: vec![],
            xminus: vec![],
            knum: vec![Matrix::identity(1)],
            kden: vec![Scalar::one()],
            candidates: vec![vec![Scalar::one()]],
        };
        Self::from_currents(c, vec![0], window).unwrap()
    }

    /// Mode matrix; panics outside the stored window.
    pub fn op(&self, m: Mode) -> &Matrix {
        self.ops
            .get(&m)
            .unwrap_or_else(|| panic!("mode {:?} outside window {}", m, self.window))
    }

    pub fn currents(&self) -> Result<&Currents, LoopError> {
        self.currents.as_ref().ok_or(LoopError::NoCurrents)
    }

    /// Index of the basis vector of highest weight.
    pub fn top_index(&self) -> usize {
        (0..self.dim)
            .max_by_key(|&i| (self.weights[i], std::cmp::Reverse(i)))
            .unwrap_or(0)
    }
}

fn w1_currents(a: &Scalar) -> Currents {
    let q = Scalar::q_pow(1);
    let qi = Scalar::q_pow(-1);
    let n0 = Matrix::diag(&[q.clone(), qi.clone()]);
    let n1 = Matrix::diag(&[-(&q * Scalar::q_pow(-2) * a), -(&qi * Scalar::q_pow(2) * a)]);
    Currents {
        xplus: vec![(a.clone(), Matrix::unit(2, 0, 1))],
        xminus: vec![(a.clone(), Matrix::unit(2, 1, 0))],
        knum: vec![n0.clone(), n1.clone()],
        kden: vec![Scalar::one(), -a.clone()],
        candidates: vec![
            vec![n0.get(0, 0).clone(), n1.get(0, 0).clone()],
            vec![n0.get(1, 1).clone(), n1.get(1, 1).clone()],
        ],
    }
}

fn merge_support(list: &mut Vec<(Scalar, Matrix)>, b: Scalar, m: Matrix) {
    if m.is_zero() {
        return;
    }
    if let Some(e) = list.iter_mut().find(|(c, _)| *c == b) {
        e.1 = e.1.add(&m);
    } else {
        list.push((b, m));
    }
    list.retain(|(_, m)| !m.is_zero());
}

fn poly_mul_scalar(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let mut r = vec![Scalar::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

/// Current data of `A ⊗ B` under the Drinfeld coproduct with `C = 1`, using
/// `f(z) delta(b/z) = f(b) delta(b/z)` on delta-supported currents.
pub fn tensor_currents(a: &Currents, b: &Currents) -> Result<Currents, LoopError> {
    let (da, db) = (a.dim(), b.dim());
    let ia = Matrix::identity(da);
    let ib = Matrix::identity(db);
    let mut xplus = Vec::new();
    for (p, x) in &a.xplus {
        merge_support(&mut xplus, p.clone(), x.kron(&ib));
    }
    for (p, x) in &b.xplus {
        merge_support(&mut xplus, p.clone(), a.k_at(p)?.kron(x));
    }
    let mut xminus = Vec::new();
    for (p, x) in &a.xminus {
        merge_support(&mut xminus, p.clone(), x.kron(&b.k_at(p)?));
    }
    for (p, x) in &b.xminus {
        merge_support(&mut xminus, p.clone(), ia.kron(x));
    }
    let nlen = a.knum.len() + b.knum.len() - 1;
    let mut knum = vec![Matrix::zeros(da * db, da * db); nlen];
    for (i, x) in a.knum.iter().enumerate() {
        for (j, y) in b.knum.iter().enumerate() {
            knum[i + j] = knum[i + j].add(&x.kron(y));
        }
    }
    let kden = poly_mul_scalar(&a.kden, &b.kden);
    let mut candidates = Vec::new();
    for ca in &a.candidates {
        for cb in &b.candidates {
            let c = poly_mul_scalar(ca, cb);
            if !candidates.contains(&c) {
                candidates.push(c);
            }
        }
    }
    Ok(Currents {
        xplus,
        xminus,
        knum,
        kden,
        candidates,
    })
}

/// Tensor product of two modules.
pub fn tensor(a: &GradedRep, b: &GradedRep, window: i64) -> Result<GradedRep, LoopError> {
    let c = tensor_currents(a.currents()?, b.currents()?)?;
    let mut weights = Vec::with_capacity(a.dim * b.dim);
    for wa in &a.weights {
        for wb in &b.weights {
            weights.push(wa + wb);
        }
    }
    GradedRep::from_currents(c, weights, window)
}

/// Operators whose span generates the action: all `X^±_b` and all `N_i`.
fn generating_ops(c: &Currents) -> Vec<Matrix> {
    let mut ops: Vec<Matrix> = Vec::new();
    ops.extend(c.xplus.iter().map(|(_, m)| m.clone()));
    ops.extend(c.xminus.iter().map(|(_, m)| m.clone()));
    ops.extend(c.knum.iter().cloned());
    ops
}

/// Simple quotient of the cyclic submodule generated by the basis vector
/// `top` (which must span its weight space inside the cyclic submodule).
pub fn cyclic_simple_quotient(
    rep: &GradedRep,
    top: usize,
    window: i64,
) -> Result<GradedRep, LoopError> {
    let c = rep.currents()?;
    let ops = generating_ops(c);
    let n = rep.dim;
    // Cyclic submodule V.
    let mut v = SubspaceBasis::new(n);
    let mut e = vec![Scalar::zero(); n];
    e[top] = Scalar::one();
    v.insert(&e);
    let mut queue = vec![e];
    while let Some(x) = queue.pop() {
        for op in &ops {
            let y = op.mul_vec(&x);
            if v.insert(&y) {
                queue.push(y);
            }
        }
    }
    // Functionals generated from the top coordinate.
    let opst: Vec<Matrix> = ops.iter().map(|m| m.transpose()).collect();
    let mut r = SubspaceBasis::new(n);
    let mut f = vec![Scalar::zero(); n];
    f[top] = Scalar::one();
    r.insert(&f);
    let mut queue = vec![f];
    while let Some(x) = queue.pop() {
        for op in &opst {
            let y = op.mul_vec(&x);
            if r.insert(&y) {
                queue.push(y);
            }
        }
    }
    let vvecs = v.vectors();
    let rvecs = r.vectors();
    let pair = |rv: &[Scalar], w: &[Scalar]| -> Scalar {
        rv.iter()
            .zip(w)
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .map(|(a, b)| a * b)
            .sum()
    };
    // Pairing matrix P[r][j] = r(V_j); choose independent columns.
    let pm = Matrix::from_rows(
        rvecs
            .iter()
            .map(|rv| vvecs.iter().map(|w| pair(rv, w)).collect())
            .collect(),
    );
    let (_, piv) = crate::linalg::rref(pm.clone());
    let chosen: Vec<Vec<Scalar>> = piv.iter().map(|&j| vvecs[j].clone()).collect();
    let psel = pm.submatrix(&(0..rvecs.len()).collect::<Vec<_>>(), &piv);
    let induce = |m: &Matrix| -> Matrix {
        let k = chosen.len();
        let mut out = Matrix::zeros(k, k);
        for (j, cvec) in chosen.iter().enumerate() {
            let img = m.mul_vec(cvec);
            let vals: Vec<Scalar> = rvecs.iter().map(|rv| pair(rv, &img)).collect();
            let x = psel.solve(&vals).expect("quotient is a module");
            for (i, xi) in x.into_iter().enumerate() {
                out.set(i, j, xi);
            }
        }
        out
    };
    let weight_of = |w: &[Scalar]| -> i64 {
        let i = w.iter().position(|x| !x.is_zero()).unwrap();
        rep.weights[i]
    };
    let weights: Vec<i64> = chosen.iter().map(|w| weight_of(w)).collect();
    let qc = Currents {
        xplus: c
            .xplus
            .iter()
            .map(|(b, m)| (b.clone(), induce(m)))
            .filter(|(_, m)| !m.is_zero())
            .collect(),
        xminus: c
            .xminus
            .iter()
            .map(|(b, m)| (b.clone(), induce(m)))
            .filter(|(_, m)| !m.is_zero())
            .collect(),
        knum: c.knum.iter().map(|m| induce(m)).collect(),
        kden: c.kden.clone(),
        candidates: c.candidates.clone(),
    };
    GradedRep::from_currents(qc, weights, window)
}

/// The simple module `L(P)` realized inside an ordered tensor product of
/// two-dimensional modules `W_1(x)`, one per root of `P`.
pub fn simple_module(p: &DrinfeldPoly, window: i64) -> Result<GradedRep, LoopError> {
    if p.degree() == 0 {
        return Ok(GradedRep::trivial(window));
    }
    let mut acc: Option<GradedRep> = None;
    for x in p.roots().iter().rev() {
        let w = GradedRep::from_currents(w1_currents(&x.to_scalar()), vec![1, -1], 0)?;
        acc = Some(match acc {
            None => w,
            Some(r) => tensor(&r, &w, 0)?,
        });
    }
    let t = acc.unwrap();
    if p.degree() == 1 {
        return GradedRep::from_currents(t.currents.unwrap(), t.weights, window);
    }
    cyclic_simple_quotient(&t, 0, window)
}

/// `W_n(a)`: the simple module whose Drinfeld roots form the q-segment of
/// length `n` centered at `a`.
pub fn evaluation_module(n: usize, a: &SpectralPoint, window: i64) -> Result<GradedRep, LoopError> {
    simple_module(&DrinfeldPoly::segment(n, a), window)
}

/// Outcome of one relation family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationResult {
    pub name: &'static str,
    pub checked: usize,
    /// First failing instance, described by its mode labels.
    pub failure: Option<String>,
}

impl RelationResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Report of `check_loop_relations`.
#[derive(Clone, Debug)]
pub struct RelationReport {
    pub results: Vec<RelationResult>,
}

impl RelationReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed())
    }

    pub fn get(&self, name: &str) -> Option<&RelationResult> {
        self.results.iter().find(|r| r.name == name)
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

    fn check(&mut self, lhs: &Matrix, rhs: &Matrix, label: impl FnOnce() -> String) {
        self.checked += 1;
        if self.failure.is_none() {
            let d = lhs.sub(rhs);
            if let Some((i, j)) = d.first_nonzero() {
                self.failure = Some(format!("{} entry ({},{})", label(), i, j));
            }
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

/// Verify the defining relations at `C = 1` on all modes within `n`.
pub fn check_loop_relations(rep: &GradedRep, n: i64) -> Result<RelationReport, LoopError> {
    if rep.window < n {
        return Err(LoopError::Window(format!(
            "rep window {} < {}",
            rep.window, n
        )));
    }
    let dim = rep.dim;
    let op = |m: Mode| rep.op(m);
    let mut results = Vec::new();

    let mut t = Tally::new("kk");
    let mut kmodes: Vec<Mode> = (0..=n).map(Mode::KPlus).collect();
    kmodes.extend((0..=n).map(Mode::KMinus));
    for (i, a) in kmodes.iter().enumerate() {
        for b in &kmodes[i + 1..] {
            t.check(&op(*a).mul(op(*b)), &op(*b).mul(op(*a)), || {
                format!("[{:?},{:?}]", a, b)
            });
        }
    }
    results.push(t.done());

    for (sign, name_p, name_m) in [(1i64, "k+x+", "k-x+"), (-1, "k+x-", "k-x-")] {
        let x = |m: i64| {
            if sign > 0 {
                Mode::XPlus(m)
            } else {
                Mode::XMinus(m)
            }
        };
        let g = g_series(-sign, 2, 2 * n + 1);
        let mut t = Tally::new(name_p);
        for nn in 0..=n {
            for m in -n..=(n - nn) {
                let mut lhs = Matrix::zeros(dim, dim);
                for j in 0..=nn {
                    lhs = lhs.add(&op(Mode::KPlus(nn - j)).mul(op(x(m + j))).scale(&g.coeff(j)));
                }
                let rhs = op(x(m)).mul(op(Mode::KPlus(nn)));
                t.check(&lhs, &rhs, || format!("n={} m={}", nn, m));
            }
        }
        results.push(t.done());
        let mut t = Tally::new(name_m);
        for nn in 0..=n {
            for m in (-n + nn)..=n {
                let lhs = op(Mode::KMinus(nn)).mul(op(x(m)));
                let mut rhs = Matrix::zeros(dim, dim);
                for j in 0..=nn {
                    rhs = rhs.add(
                        &op(x(m - j))
                            .mul(op(Mode::KMinus(nn - j)))
                            .scale(&g.coeff(j)),
                    );
                }
                t.check(&lhs, &rhs, || format!("n={} m={}", nn, m));
            }
        }
        results.push(t.done());
    }

    for (sign, name) in [(1i64, "x+x+"), (-1, "x-x-")] {
        let x = |m: i64| {
            if sign > 0 {
                Mode::XPlus(m)
            } else {
                Mode::XMinus(m)
            }
        };
        let q2 = Scalar::q_pow(2 * sign);
        let mut t = Tally::new(name);
        for r in -n..n {
            for s in -n..n {
                let lhs = op(x(r + 1))
                    .mul(op(x(s)))
                    .sub(&op(x(r)).mul(op(x(s + 1))).scale(&q2));
                let rhs = op(x(s))
                    .mul(op(x(r + 1)))
                    .scale(&q2)
                    .sub(&op(x(s + 1)).mul(op(x(r))));
                t.check(&lhs, &rhs, || format!("r={} s={}", r, s));
            }
        }
        results.push(t.done());
    }

    let mut t = Tally::new("x+x-");
    let inv = qdiff().inv().unwrap();
    let zero = Matrix::zeros(dim, dim);
    for r in -n..=n {
        for s in -n..=n {
            let k = r + s;
            if k.abs() > n {
                continue;
            }
            let lhs = op(Mode::XPlus(r))
                .mul(op(Mode::XMinus(s)))
                .sub(&op(Mode::XMinus(s)).mul(op(Mode::XPlus(r))));
            let kp = if k >= 0 { op(Mode::KPlus(k)) } else { &zero };
            let km = if k <= 0 { op(Mode::KMinus(-k)) } else { &zero };
            let rhs = kp.sub(km).scale(&inv);
            t.check(&lhs, &rhs, || format!("r={} s={}", r, s));
        }
    }
    results.push(t.done());
    Ok(RelationReport { results })
}

/// One generalized l-weight space.
#[derive(Clone, Debug)]
pub struct LWeightBlock {
    /// Basis vectors (coordinates in the module basis).
    pub basis: Vec<Vec<Scalar>>,
    /// Exponent `w` with `k^+_0 = q^w`.
    pub weight: i64,
    /// `kappa(z)`, whose expansions at infinity and zero give `kappa^±`.
    pub kappa: RatFn,
    pub kappa_plus: Series,
    pub kappa_minus: Series,
}

impl LWeightBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Simultaneous generalized eigenspace decomposition of the `k`-modes.
pub fn lweight_decompose(rep: &GradedRep, n: i64) -> Result<Vec<LWeightBlock>, LoopError> {
    let c = rep.currents()?;
    let dim = rep.dim;
    let mut blocks = Vec::new();
    let mut found = 0;
    for cand in &c.candidates {
        let mut stack: Vec<Vec<Scalar>> = Vec::new();
        for (i, ni) in c.knum.iter().enumerate() {
            let lam = cand.get(i).cloned().unwrap_or_default();
            let shifted = ni.sub(&Matrix::identity(dim).scale(&lam));
            let mut p = Matrix::identity(dim);
            for _ in 0..dim {
                p = p.mul(&shifted);
            }
            for r in 0..dim {
                stack.push(p.row(r));
            }
        }
        let ker = Matrix::from_rows(stack).kernel();
        if ker.is_empty() {
            continue;
        }
        found += ker.len();
        let kappa = RatFn {
            num: LPoly::from_pairs(
                cand.iter()
                    .enumerate()
                    .map(|(e, s)| (-(e as i64), s.clone())),
            ),
            den: LPoly::from_pairs(
                c.kden
                    .iter()
                    .enumerate()
                    .map(|(e, s)| (-(e as i64), s.clone())),
            ),
        };
        let kp = kappa.expand(Direction::AtInfinity, n)?;
        let km = kappa.expand(Direction::AtZero, n)?;
        let w = cand[0].clone();
        let weight = (-(dim as i64) * 2 - 8..=(dim as i64) * 2 + 8)
            .find(|&k| Scalar::q_pow(k) == w)
            .unwrap_or(i64::MIN);
        blocks.push(LWeightBlock {
            basis: ker,
            weight,
            kappa,
            kappa_plus: kp,
            kappa_minus: km,
        });
    }
    if found != dim {
        return Err(LoopError::Incomplete { found, dim });
    }
    blocks.sort_by(|a, b| {
        b.weight.cmp(&a.weight).then_with(|| {
            let ka: Vec<String> = a
                .kappa_plus
                .coefficients()
                .map(|(_, c)| c.to_string())
                .collect();
            let kb: Vec<String> = b
                .kappa_plus
                .coefficients()
                .map(|(_, c)| c.to_string())
                .collect();
            ka.cmp(&kb)
        })
    });
    Ok(blocks)
}

/// The set of eigenvalues of `k^+_0`.
pub fn spectrum(rep: &GradedRep) -> Vec<Scalar> {
    let mut ws: Vec<i64> = rep.weights.clone();
    ws.sort_unstable_by(|a, b| b.cmp(a));
    ws.dedup();
    ws.into_iter().map(Scalar::q_pow).collect()
}
