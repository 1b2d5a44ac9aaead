//! Rational l-weights, Y-monomials, shift operators and dominance predicates.
//!
//! A rational l-weight is `sign * q^{deg P - deg Q} P(q^-2/z) Q(1/z) / (P(1/z) Q(q^-2/z))`.
//! Under `Y_x <-> q (1 - x q^-2/z) / (1 - x/z)` it is `sign * Y^{nu+ - nu-}`.

use crate::formal::{Direction, FormalError, LPoly, RatFn, Series};
use crate::loopmod::DrinfeldPoly;
use crate::scalar::{PointBase, Scalar, SpectralPoint, DEFAULT_NAMES};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcharError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("reconstruction failed: {0}")]
    Reconstruction(String),
    #[error(transparent)]
    Formal(#[from] FormalError),
}

/// Finitely supported multiset of spectral points.
pub type Multiset = BTreeMap<SpectralPoint, usize>;

pub fn multiset_of(p: &DrinfeldPoly) -> Multiset {
    let mut m = Multiset::new();
    for r in p.roots() {
        *m.entry(r.clone()).or_default() += 1;
    }
    m
}

fn poly_of(m: &Multiset) -> DrinfeldPoly {
    DrinfeldPoly::new(
        m.iter()
            .flat_map(|(x, &k)| std::iter::repeat(x.clone()).take(k))
            .collect(),
    )
}

fn sign_dir(sign: i64) -> Direction {
    if sign > 0 {
        Direction::AtInfinity
    } else {
        Direction::AtZero
    }
}

/// Laurent monomial `prod_x Y_x^{e(x)}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YMonomial {
    exps: BTreeMap<SpectralPoint, i64>,
}

impl YMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn y(x: SpectralPoint) -> Self {
        Self::from_pairs([(x, 1)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (SpectralPoint, i64)>) -> Self {
        let mut m = Self::default();
        for (x, e) in pairs {
            m.add_exp(x, e);
        }
        m
    }

    fn add_exp(&mut self, x: SpectralPoint, e: i64) {
        let v = self.exps.entry(x.clone()).or_default();
        *v += e;
        if *v == 0 {
            self.exps.remove(&x);
        }
    }

    pub fn exponent(&self, x: &SpectralPoint) -> i64 {
        self.exps.get(x).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&SpectralPoint, i64)> {
        self.exps.iter().map(|(x, &e)| (x, e))
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut m = self.clone();
        for (x, &e) in &o.exps {
            m.add_exp(x.clone(), e);
        }
        m
    }

    pub fn inv(&self) -> Self {
        YMonomial {
            exps: self.exps.iter().map(|(x, &e)| (x.clone(), -e)).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        if k == 0 {
            return Self::one();
        }
        YMonomial {
            exps: self.exps.iter().map(|(x, &e)| (x.clone(), e * k)).collect(),
        }
    }

    /// The rational function obtained from `Y_x -> q (1 - x q^-2/z) / (1 - x/z)`.
    pub fn rational(&self) -> RatFn {
        let mut r = RatFn::one();
        for (x, &e) in &self.exps {
            let xs = x.to_scalar();
            let y = RatFn {
                num: LPoly::one_minus_over_z(&xs * Scalar::q_pow(-2)).scale(&Scalar::q_pow(1)),
                den: LPoly::one_minus_over_z(xs),
            };
            r = r.mul(&y.pow(e).expect("nonzero factor"));
        }
        r
    }

    pub fn series(&self, sign: i64, n: i64) -> Result<Series, QcharError> {
        Ok(self.rational().expand(sign_dir(sign), n)?)
    }

    pub fn fmt_with(&self, names: &[&str]) -> String {
        if self.exps.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|(x, &e)| {
                let p = x.fmt_with(names);
                let base = if x.exponent == 0 {
                    format!("Y_{}", p)
                } else {
                    format!("Y_{{{}}}", p)
                };
                if e == 1 {
                    base
                } else {
                    format!("{}^{}", base, e)
                }
            })
            .collect();
        parts.join(" ")
    }
}

impl fmt::Display for YMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&DEFAULT_NAMES))
    }
}

/// Rational l-weight given by coprime Drinfeld polynomials and an overall sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LWeightRational {
    pub p: DrinfeldPoly,
    pub q: DrinfeldPoly,
    pub sign: i64,
}

impl LWeightRational {
    pub fn new(p: DrinfeldPoly, q: DrinfeldPoly, sign: i64) -> Result<Self, QcharError> {
        if sign != 1 && sign != -1 {
            return Err(QcharError::Domain(format!(
                "sign must be +1 or -1, got {}",
                sign
            )));
        }
        if p.roots().iter().any(|x| q.multiplicity(x) > 0) {
            return Err(QcharError::Domain("P and Q share a root".into()));
        }
        Ok(LWeightRational { p, q, sign })
    }

    /// The l-weight `-q^{deg P} P(q^-2/z) / P(1/z)` of the zero-level convention.
    pub fn dominant(p: DrinfeldPoly) -> Self {
        LWeightRational {
            p,
            q: DrinfeldPoly::one(),
            sign: -1,
        }
    }

    pub fn rational(&self) -> RatFn {
        monomial_of(self)
            .rational()
            .scale(&Scalar::from_int(self.sign))
    }

    pub fn series(&self, sign: i64, n: i64) -> Result<Series, QcharError> {
        Ok(self.rational().expand(sign_dir(sign), n)?)
    }

    pub fn fmt_with(&self, names: &[&str]) -> String {
        let roots = |p: &DrinfeldPoly| {
            let r: Vec<String> = p.roots().iter().map(|x| x.fmt_with(names)).collect();
            format!("[{}]", r.join(","))
        };
        format!(
            "P={} Q={} sign={}",
            roots(&self.p),
            roots(&self.q),
            if self.sign > 0 { "+" } else { "-" }
        )
    }
}

impl fmt::Display for LWeightRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&DEFAULT_NAMES))
    }
}

/// Which current links two l-weight blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdjacencyCurrent {
    /// `K^sign_{1, sign m}(z)`.
    K { m: i64, sign: i64 },
    /// `X^sign(z)`.
    X { sign: i64 },
}

/// `block[source] ∩ current . block[target] != 0`, supported at `point`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdjacencyRecord {
    pub source: usize,
    pub target: usize,
    pub current: AdjacencyCurrent,
    pub point: SpectralPoint,
}

pub fn monomial_of(lw: &LWeightRational) -> YMonomial {
    let mut m = YMonomial::one();
    for x in lw.p.roots() {
        m.add_exp(x.clone(), 1);
    }
    for x in lw.q.roots() {
        m.add_exp(x.clone(), -1);
    }
    m
}

/// `(1 - q^-2 a/z)(1 - q^{-2(m-1)} a/z) / ((1 - q^2 a/z)(1 - q^{-2(m+1)} a/z))`.
pub fn h_shift_rational(m: i64, a: &SpectralPoint) -> Result<RatFn, QcharError> {
    if m < 1 {
        return Err(QcharError::Domain(format!(
            "H_(m,a) needs m >= 1, got {}",
            m
        )));
    }
    let f = |k: i64| LPoly::one_minus_over_z(a.shift(k).to_scalar());
    Ok(RatFn {
        num: f(-2).mul(&f(-2 * (m - 1))),
        den: f(2).mul(&f(-2 * (m + 1))),
    })
}

pub fn h_shift_series(m: i64, a: &SpectralPoint, sign: i64, n: i64) -> Result<Series, QcharError> {
    Ok(h_shift_rational(m, a)?.expand(sign_dir(sign), n)?)
}

/// `q^2 (1 - q^-2 a/z) / (1 - q^2 a/z)`.
pub fn a_shift_rational(a: &SpectralPoint) -> RatFn {
    RatFn {
        num: LPoly::one_minus_over_z(a.shift(-2).to_scalar()).scale(&Scalar::q_pow(2)),
        den: LPoly::one_minus_over_z(a.shift(2).to_scalar()),
    }
}

pub fn a_shift_series(a: &SpectralPoint, sign: i64, n: i64) -> Result<Series, QcharError> {
    Ok(a_shift_rational(a).expand(sign_dir(sign), n)?)
}

/// `A_a = Y_a Y_{aq^2}`.
pub fn a_monomial(a: &SpectralPoint) -> YMonomial {
    YMonomial::from_pairs([(a.clone(), 1), (a.shift(2), 1)])
}

/// `H_{m,a} = Y_{aq^-2m}^-1 Y_{aq^{2-2m}}^-1 Y_a Y_{aq^2}`; trivial for `m = 0`.
pub fn h_monomial(m: i64, a: &SpectralPoint) -> YMonomial {
    YMonomial::from_pairs([
        (a.shift(-2 * m), -1),
        (a.shift(2 - 2 * m), -1),
        (a.clone(), 1),
        (a.shift(2), 1),
    ])
}

/// `Gamma_{m,a}(nu) = nu - d_{aq^-2m} - d_{aq^{2-2m}} + d_a + d_{aq^2}`.
pub fn gamma_apply(m: i64, a: &SpectralPoint, nu: &Multiset) -> Result<Multiset, QcharError> {
    let (x, y) = (a.shift(-2 * m), a.shift(2 - 2 * m));
    if nu.get(&x).copied().unwrap_or(0) == 0 || nu.get(&y).copied().unwrap_or(0) == 0 {
        return Err(QcharError::Domain(format!(
            "multiset does not contain {} and {}",
            x, y
        )));
    }
    let mut r = nu.clone();
    for p in [x, y] {
        let v = r.get_mut(&p).unwrap();
        *v -= 1;
        if *v == 0 {
            r.remove(&p);
        }
    }
    for p in [a.clone(), a.shift(2)] {
        *r.entry(p).or_default() += 1;
    }
    Ok(r)
}

/// Counts per orbit and exponent parity, preserved by every Gamma move.
fn orbit_profile(nu: &Multiset) -> BTreeMap<(PointBase, i64), usize> {
    let mut prof = BTreeMap::new();
    for (x, &k) in nu {
        *prof
            .entry((x.base.clone(), x.exponent.rem_euclid(2)))
            .or_default() += k;
    }
    prof
}

fn exponent_range(nus: &[&Multiset]) -> BTreeMap<PointBase, (i64, i64)> {
    let mut r: BTreeMap<PointBase, (i64, i64)> = BTreeMap::new();
    for nu in nus {
        for x in nu.keys() {
            let e = r.entry(x.base.clone()).or_insert((x.exponent, x.exponent));
            e.0 = e.0.min(x.exponent);
            e.1 = e.1.max(x.exponent);
        }
    }
    r
}

/// Bounded search for a chain of at most `depth` Gamma moves from `nu2` to `nu1`.
/// A `false` answer only means no chain was found within the bound.
pub fn multiset_equivalent(nu1: &Multiset, nu2: &Multiset, depth: usize) -> bool {
    if nu1 == nu2 {
        return true;
    }
    if orbit_profile(nu1) != orbit_profile(nu2) {
        return false;
    }
    let range = exponent_range(&[nu1, nu2]);
    let mut seen: HashSet<Multiset> = HashSet::new();
    seen.insert(nu2.clone());
    let mut queue = VecDeque::from([(nu2.clone(), 0usize)]);
    while let Some((nu, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for x in nu.keys() {
            let y = x.shift(2);
            if !nu.contains_key(&y) {
                continue;
            }
            let (lo, hi) = range[&x.base];
            let span = hi - lo;
            // Move the pair (x, xq^2) to (xq^2m, xq^{2m+2}) inside the padded range.
            for m in -(span / 2 + 2)..=(span / 2 + 2) {
                if m == 0 {
                    continue;
                }
                let a = x.shift(2 * m);
                if a.exponent < lo - 2 || a.exponent + 2 > hi + 2 {
                    continue;
                }
                let next = gamma_apply(m, &a, &nu).expect("pair present");
                if &next == nu1 {
                    return true;
                }
                if seen.insert(next.clone()) {
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    false
}

pub const DEFAULT_EQUIV_DEPTH: usize = 6;

/// Recover `(P, Q, sign)` from the two expansions of a rational l-weight, using
/// the parameters that occur in the coefficients and the unit orbit as candidates.
pub fn reconstruct_lweight(
    kp: &Series,
    km: &Series,
    degree_bound: usize,
) -> Result<LWeightRational, QcharError> {
    let mut vars = BTreeSet::new();
    for s in [kp, km] {
        for (_, c) in s.coefficients() {
            for v in 1..crate::poly::NVARS {
                if c.numer().uses_var(v) || c.denom().uses_var(v) {
                    vars.insert(v);
                }
            }
        }
    }
    let mut orbits: Vec<PointBase> = vars.into_iter().map(PointBase::Param).collect();
    orbits.push(PointBase::Unit("1".into()));
    reconstruct_lweight_on(kp, km, degree_bound, &orbits)
}

/// Reconstruction with roots restricted to the given orbits (parameters, or the unit orbit `1`).
///
/// If `kappa = c prod_y (1 - y/z)^{d_y}` then `-kappa_1 / kappa_0 = sum_y d_y y`; distinct
/// points on declared orbits are distinct monomials, so this coefficient is the divisor.
/// The fitted weight is then checked against both expansions on their full windows.
pub fn reconstruct_lweight_on(
    kp: &Series,
    km: &Series,
    degree_bound: usize,
    orbits: &[PointBase],
) -> Result<LWeightRational, QcharError> {
    let need = 2 * degree_bound as i64 + 1;
    if kp.prec() < need || km.prec() < need {
        return Err(QcharError::Domain(format!(
            "windows must reach {} for degree bound {}",
            need, degree_bound
        )));
    }
    if kp.start() < 0 || kp.coeff(0).is_zero() {
        return Err(QcharError::Reconstruction(
            "expansion at infinity must start at a nonzero constant".into(),
        ));
    }
    let k0 = kp.coeff(0);
    let p1 = -(kp.coeff(1) * k0.inv().expect("nonzero"));
    let div = divisor_terms(&p1, orbits)?;
    // div(y) = nu(yq^2) - nu(y), so nu(y) = -sum_{j >= 0} div(y q^2j).
    let mut nu: BTreeMap<SpectralPoint, i64> = BTreeMap::new();
    let mut chains: BTreeMap<(PointBase, i64), Vec<(i64, i64)>> = BTreeMap::new();
    for (x, &v) in &div {
        chains
            .entry((x.base.clone(), x.exponent.rem_euclid(2)))
            .or_default()
            .push((x.exponent, v));
    }
    for ((base, _), pts) in chains {
        if pts.iter().map(|p| p.1).sum::<i64>() != 0 {
            return Err(QcharError::Reconstruction(
                "zeros and poles do not pair along a q^2-chain".into(),
            ));
        }
        let lo = pts.iter().map(|p| p.0).min().unwrap();
        let hi = pts.iter().map(|p| p.0).max().unwrap();
        let mut acc = 0;
        for e in (lo..=hi).rev().step_by(2) {
            acc += pts.iter().filter(|p| p.0 == e).map(|p| p.1).sum::<i64>();
            if acc != 0 {
                nu.insert(
                    SpectralPoint {
                        base: base.clone(),
                        exponent: e,
                    },
                    -acc,
                );
            }
        }
    }
    let pos: Multiset = nu
        .iter()
        .filter(|(_, &v)| v > 0)
        .map(|(x, &v)| (x.clone(), v as usize))
        .collect();
    let neg: Multiset = nu
        .iter()
        .filter(|(_, &v)| v < 0)
        .map(|(x, &v)| (x.clone(), (-v) as usize))
        .collect();
    let (p, q) = (poly_of(&pos), poly_of(&neg));
    if p.degree() > degree_bound || q.degree() > degree_bound {
        return Err(QcharError::Reconstruction(format!(
            "degrees ({}, {}) exceed bound {}",
            p.degree(),
            q.degree(),
            degree_bound
        )));
    }
    let lead = Scalar::q_pow(p.degree() as i64 - q.degree() as i64);
    let s = &k0 * &lead.inv().expect("nonzero");
    let sign = if s.is_one() {
        1
    } else if (-&s).is_one() {
        -1
    } else {
        return Err(QcharError::Reconstruction(format!(
            "leading constant {} is not +-q^k",
            k0
        )));
    };
    let lw = LWeightRational::new(p, q, sign)?;
    if !lw.series(1, kp.prec())?.eq_window(kp) || !lw.series(-1, km.prec())?.eq_window(km) {
        return Err(QcharError::Reconstruction(
            "no rational l-weight reproduces the expansions".into(),
        ));
    }
    Ok(lw)
}

/// Split `sum_y d_y y` into integer multiplicities on orbit points.
fn divisor_terms(
    s: &Scalar,
    orbits: &[PointBase],
) -> Result<BTreeMap<SpectralPoint, i64>, QcharError> {
    let err = |m: &str| QcharError::Reconstruction(format!("{}: {}", m, s));
    let den = s.denom();
    if !den.is_monomial() {
        return Err(err("not a Laurent polynomial"));
    }
    let (dm, dc) = den.lead().cloned().unwrap();
    if dm[1..].iter().any(|&e| e != 0) {
        return Err(err("negative parameter power"));
    }
    let mut out = BTreeMap::new();
    for (m, c) in s.numer().terms() {
        if c % &dc != BigInt::from(0) {
            return Err(err("non-integral multiplicity"));
        }
        let mult: i64 = (c / &dc)
            .try_into()
            .map_err(|_| err("multiplicity overflow"))?;
        let te = m[0] as i64 - dm[0] as i64;
        if te % 2 != 0 {
            return Err(err("odd power of t"));
        }
        let params: Vec<usize> = (1..m.len()).filter(|&v| m[v] != 0).collect();
        let base = match params.as_slice() {
            [] => PointBase::Unit("1".into()),
            [v] if m[*v] == 1 => PointBase::Param(*v),
            _ => return Err(err("term is not a spectral point")),
        };
        if !orbits.contains(&base) {
            return Err(err("root outside the declared orbits"));
        }
        *out.entry(SpectralPoint {
            base,
            exponent: te / 2,
        })
        .or_default() += mult;
    }
    out.retain(|_, v| *v != 0);
    Ok(out)
}

pub fn classical_weight(lw: &LWeightRational) -> i64 {
    lw.p.degree() as i64 - lw.q.degree() as i64
}

pub fn is_l_dominant(lws: &[LWeightRational]) -> bool {
    let Some(first) = lws.first() else {
        return true;
    };
    let n = first.p.degree();
    lws.iter()
        .all(|lw| lw.q.degree() == 0 && lw.p.degree() == n)
}

/// Roots required of `P_target` by a K-adjacency with shift `m` and sign `s`:
/// `a q^{-(m + s m)}` and `a q^{2 - (m + s m)}`.
pub fn required_roots(m: i64, sign: i64, a: &SpectralPoint) -> [SpectralPoint; 2] {
    let k = m + sign * m;
    [a.shift(-k), a.shift(2 - k)]
}

/// Whether `source = target * H_{m,a}^sign` holds at the level of monomials.
pub fn adjacency_consistent(lws: &[LWeightRational], rec: &AdjacencyRecord) -> bool {
    let (Some(s), Some(t)) = (lws.get(rec.source), lws.get(rec.target)) else {
        return false;
    };
    let shift = match rec.current {
        AdjacencyCurrent::K { m, sign } => h_monomial(m, &rec.point).pow(sign),
        AdjacencyCurrent::X { sign } => a_monomial(&rec.point).pow(sign),
    };
    monomial_of(s) == monomial_of(t).mul(&shift)
}

pub fn is_t_dominant(lws: &[LWeightRational], adj: &[AdjacencyRecord]) -> bool {
    if !is_l_dominant(lws) {
        return false;
    }
    adj.iter().all(|rec| match rec.current {
        AdjacencyCurrent::X { .. } => true,
        AdjacencyCurrent::K { m, sign } => match lws.get(rec.target) {
            None => false,
            Some(t) => required_roots(m, sign, &rec.point)
                .iter()
                .all(|x| t.p.multiplicity(x) > 0),
        },
    })
}

/// Sufficient criterion for t-dominance: every `m = 1` K-adjacency point is a root of `P_target`.
pub fn satisfies_unit_shift_criterion(lws: &[LWeightRational], adj: &[AdjacencyRecord]) -> bool {
    is_l_dominant(lws)
        && adj.iter().all(|rec| match rec.current {
            AdjacencyCurrent::K { m: 1, .. } => lws
                .get(rec.target)
                .map(|t| t.p.multiplicity(&rec.point) > 0)
                .unwrap_or(false),
            _ => true,
        })
}
