//! Truncated Laurent series, rational functions of one formal variable `z`,
//! and formal distributions with derivative-delta parts.
//!
//! Delta normalization: `delta_p(z/a)` denotes `(d/dx)^p delta(x)` at
//! `x = z/a` where `delta(x) = sum_n x^n`. Its coefficient of `z^k` is the
//! falling factorial `(k+p)(k+p-1)...(k+1) * a^{-k}`.

use crate::linalg::Matrix;
use crate::scalar::{qdiff, qint, Scalar, ScalarError};
use std::collections::BTreeMap;

/// Expansion direction: `AtZero` expands in powers of `z`, `AtInfinity` in
/// powers of `1/z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    AtZero,
    AtInfinity,
}

impl Direction {
    /// Exponent of `z` carried by the expansion variable `w`.
    pub fn z_sign(self) -> i64 {
        match self {
            Direction::AtZero => 1,
            Direction::AtInfinity => -1,
        }
    }
}

/// Errors from formal calculus.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("window too small: needed {needed}, have {have}")]
    Window { needed: i64, have: i64 },
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
}

impl From<ScalarError> for FormalError {
    fn from(e: ScalarError) -> Self {
        FormalError::Domain(e.to_string())
    }
}

/// Truncated series `sum_{k=start}^{prec} c_k w^k` with `w = z` or `w = 1/z`.
/// Coefficients beyond `prec` are unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    pub dir: Direction,
    start: i64,
    prec: i64,
    coeffs: Vec<Scalar>,
}

impl Series {
    pub fn new(dir: Direction, start: i64, coeffs: Vec<Scalar>, prec: i64) -> Self {
        let mut c = coeffs;
        c.truncate((prec - start + 1).max(0) as usize);
        while (c.len() as i64) < prec - start + 1 {
            c.push(Scalar::zero());
        }
        Series {
            dir,
            start,
            prec,
            coeffs: c,
        }
    }

    pub fn constant(dir: Direction, c: Scalar, prec: i64) -> Self {
        Self::new(dir, 0, vec![c], prec)
    }

    pub fn one(dir: Direction, prec: i64) -> Self {
        Self::constant(dir, Scalar::one(), prec)
    }

    /// Exponents up to and including `prec` are known.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Coefficient of `w^k`.
    pub fn coeff(&self, k: i64) -> Scalar {
        assert!(
            k <= self.prec,
            "coefficient {} beyond precision {}",
            k,
            self.prec
        );
        if k < self.start {
            Scalar::zero()
        } else {
            self.coeffs[(k - self.start) as usize].clone()
        }
    }

    /// Coefficient of `z^e` (as opposed to `w^k`).
    pub fn z_coeff(&self, e: i64) -> Scalar {
        self.coeff(e * self.dir.z_sign())
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|p| self.start + p as i64)
    }

    pub fn truncate(&self, prec: i64) -> Self {
        assert!(prec <= self.prec, "cannot raise precision");
        Self::new(self.dir, self.start, self.coeffs.clone(), prec)
    }

    fn check_dir(&self, o: &Self) {
        assert_eq!(self.dir, o.dir, "mixed expansion directions");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check_dir(o);
        let prec = self.prec.min(o.prec);
        let start = self.start.min(o.start);
        let coeffs = (start..=prec).map(|k| self.coeff(k) + o.coeff(k)).collect();
        Self::new(self.dir, start, coeffs, prec)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Scalar::from_int(-1))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        Series {
            dir: self.dir,
            start: self.start,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check_dir(o);
        let start = self.start + o.start;
        let prec = (self.prec + o.start).min(o.prec + self.start);
        let mut coeffs = vec![Scalar::zero(); (prec - start + 1).max(0) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                let k = i + j;
                if k >= coeffs.len() {
                    break;
                }
                if !b.is_zero() {
                    coeffs[k] += a * b;
                }
            }
        }
        Series {
            dir: self.dir,
            start,
            prec,
            coeffs,
        }
    }

    /// Multiplicative inverse; requires a nonzero lowest coefficient.
    pub fn inverse(&self) -> Result<Self, FormalError> {
        let v = self
            .valuation()
            .ok_or_else(|| FormalError::Domain("inverse of a zero series".into()))?;
        let len = (self.prec - v + 1) as usize;
        let a: Vec<Scalar> = (v..=self.prec).map(|k| self.coeff(k)).collect();
        let inv0 = a[0].inv()?;
        let mut b = vec![Scalar::zero(); len];
        b[0] = inv0.clone();
        for n in 1..len {
            let mut s = Scalar::zero();
            for k in 1..=n {
                if !a[k].is_zero() && !b[n - k].is_zero() {
                    s += &a[k] * &b[n - k];
                }
            }
            b[n] = -(s * &inv0);
        }
        Ok(Series::new(self.dir, -v, b, self.prec - 2 * v))
    }

    /// `f(z) -> f(c z)`.
    pub fn scale_arg(&self, c: &Scalar) -> Self {
        let cw = match self.dir {
            Direction::AtZero => c.clone(),
            Direction::AtInfinity => c.inv().expect("nonzero scale"),
        };
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, x)| x * cw.pow(self.start + i as i64))
            .collect();
        Series {
            dir: self.dir,
            start: self.start,
            prec: self.prec,
            coeffs,
        }
    }

    /// Equality of all coefficients up to `min(prec)`.
    pub fn eq_window(&self, o: &Self) -> bool {
        self.first_difference(o).is_none()
    }

    pub fn first_difference(&self, o: &Self) -> Option<i64> {
        if self.dir != o.dir {
            return Some(i64::MIN);
        }
        let prec = self.prec.min(o.prec);
        let start = self.start.min(o.start);
        (start..=prec).find(|&k| self.coeff(k) != o.coeff(k))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i64, &Scalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.start + i as i64, c))
    }
}

/// Laurent polynomial in `z` with scalar coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LPoly {
    coeffs: BTreeMap<i64, Scalar>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly::default()
    }

    pub fn constant(c: Scalar) -> Self {
        Self::monomial(0, c)
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn monomial(e: i64, c: Scalar) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(e, c);
        }
        LPoly { coeffs: m }
    }

    /// `1 - c z^{-1}`.
    pub fn one_minus_over_z(c: Scalar) -> Self {
        Self::one().sub(&Self::monomial(-1, c))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, Scalar)>) -> Self {
        let mut p = LPoly::zero();
        for (e, c) in pairs {
            p = p.add(&Self::monomial(e, c));
        }
        p
    }

    pub fn coeff(&self, e: i64) -> Scalar {
        self.coeffs.get(&e).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Scalar)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = self.coeffs.clone();
        for (e, c) in &o.coeffs {
            let v = m.get(e).cloned().unwrap_or_default() + c;
            if v.is_zero() {
                m.remove(e);
            } else {
                m.insert(*e, v);
            }
        }
        LPoly { coeffs: m }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LPoly {
            coeffs: self.coeffs.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut m: BTreeMap<i64, Scalar> = BTreeMap::new();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &o.coeffs {
                *m.entry(e1 + e2).or_default() += c1 * c2;
            }
        }
        m.retain(|_, c| !c.is_zero());
        LPoly { coeffs: m }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// `p(z) -> p(c z)`.
    pub fn scale_arg(&self, c: &Scalar) -> Self {
        LPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|(e, x)| (*e, x * c.pow(*e)))
                .collect(),
        }
    }

    /// `p(z) -> p(1/z)`.
    pub fn reflect(&self) -> Self {
        LPoly {
            coeffs: self.coeffs.iter().map(|(e, x)| (-e, x.clone())).collect(),
        }
    }

    pub fn eval(&self, z: &Scalar) -> Scalar {
        self.coeffs.iter().map(|(e, c)| c * z.pow(*e)).sum()
    }

    pub fn derivative(&self) -> Self {
        LPoly {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| **e != 0)
                .map(|(e, c)| (e - 1, c * Scalar::from_int(*e)))
                .collect(),
        }
    }

    /// Expansion as a series in the given direction (exact, finite).
    pub fn to_series(&self, dir: Direction, prec: i64) -> Series {
        let s = dir.z_sign();
        let ws: Vec<(i64, &Scalar)> = self.coeffs.iter().map(|(e, c)| (e * s, c)).collect();
        let start = ws.iter().map(|(k, _)| *k).min().unwrap_or(0).min(0);
        let mut coeffs = vec![Scalar::zero(); (prec - start + 1).max(0) as usize];
        for (k, c) in ws {
            if k <= prec {
                coeffs[(k - start) as usize] = c.clone();
            }
        }
        Series::new(dir, start, coeffs, prec)
    }
}

/// Rational function `num(z) / den(z)` of one formal variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFn {
    pub num: LPoly,
    pub den: LPoly,
}

impl RatFn {
    pub fn new(num: LPoly, den: LPoly) -> Result<Self, FormalError> {
        if den.is_zero() {
            return Err(FormalError::Domain("zero denominator".into()));
        }
        Ok(RatFn { num, den })
    }

    pub fn poly(p: LPoly) -> Self {
        RatFn {
            num: p,
            den: LPoly::one(),
        }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::poly(LPoly::constant(c))
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn mul(&self, o: &Self) -> Self {
        RatFn {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return RatFn {
                num: self.num.add(&o.num),
                den: self.den.clone(),
            };
        }
        RatFn {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        RatFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<Self, FormalError> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, k: i64) -> Result<Self, FormalError> {
        if k >= 0 {
            Ok(RatFn {
                num: self.num.pow(k as u32),
                den: self.den.pow(k as u32),
            })
        } else {
            self.inv()?.pow(-k)
        }
    }

    pub fn scale_arg(&self, c: &Scalar) -> Self {
        RatFn {
            num: self.num.scale_arg(c),
            den: self.den.scale_arg(c),
        }
    }

    pub fn eval(&self, z: &Scalar) -> Result<Scalar, FormalError> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return Err(FormalError::Domain(format!("pole at z = {}", z)));
        }
        Ok(self.num.eval(z) / d)
    }

    pub fn derivative(&self) -> Self {
        RatFn {
            num: self
                .num
                .derivative()
                .mul(&self.den)
                .sub(&self.num.mul(&self.den.derivative())),
            den: self.den.mul(&self.den),
        }
    }

    /// `k`-th derivative evaluated at `z`.
    pub fn derivative_at(&self, k: usize, z: &Scalar) -> Result<Scalar, FormalError> {
        let mut f = self.clone();
        for _ in 0..k {
            f = f.derivative();
        }
        f.eval(z)
    }

    /// Expansion in the given direction up to `w^prec`.
    pub fn expand(&self, dir: Direction, prec: i64) -> Result<Series, FormalError> {
        let s = dir.z_sign();
        let low = self
            .den
            .terms()
            .map(|(e, _)| e * s)
            .min()
            .ok_or_else(|| FormalError::Domain("zero denominator".into()))?;
        let nstart = self
            .num
            .terms()
            .map(|(e, _)| e * s)
            .min()
            .unwrap_or(0)
            .min(0);
        let p = prec + low - nstart;
        let mut dco = vec![Scalar::zero(); (p + 1).max(1) as usize];
        for (e, c) in self.den.terms() {
            let k = e * s - low;
            if k <= p {
                dco[k as usize] = c.clone();
            }
        }
        let dser = Series::new(dir, 0, dco, p);
        let nser = self.num.to_series(dir, prec + low);
        let prod = nser.mul(&dser.inverse()?);
        let coeffs: Vec<Scalar> = (prod.start()..=prod.prec())
            .map(|k| prod.coeff(k))
            .collect();
        Ok(Series::new(
            dir,
            prod.start() - low,
            coeffs,
            prod.prec() - low,
        ))
    }
}

/// Expand `num / den` for polynomials in `1/z`, given as coefficient lists
/// (`num[k]` multiplies `z^{-k}`).
pub fn expand_rational(
    num: &[Scalar],
    den: &[Scalar],
    dir: Direction,
    n: i64,
) -> Result<Series, FormalError> {
    let p = LPoly::from_pairs(
        num.iter()
            .enumerate()
            .map(|(k, c)| (-(k as i64), c.clone())),
    );
    let d = LPoly::from_pairs(
        den.iter()
            .enumerate()
            .map(|(k, c)| (-(k as i64), c.clone())),
    );
    if d.is_zero() {
        return Err(FormalError::Domain(
            "denominator vanishes identically".into(),
        ));
    }
    RatFn::new(p, d)?.expand(dir, n)
}

/// `G^±(z) = q^{±c} + (q - q^{-1}) [±c]_q sum_{m>=1} q^{±mc} z^m` up to `z^n`.
pub fn g_series(sign: i64, c: i64, n: i64) -> Series {
    let s = sign.signum();
    let mut coeffs = vec![Scalar::q_pow(s * c)];
    let f = qdiff() * qint(s * c);
    for m in 1..=n {
        coeffs.push(&f * Scalar::q_pow(s * m * c));
    }
    Series::new(Direction::AtZero, 0, coeffs, n)
}

/// The falling factorial `(k+p)(k+p-1)...(k+1)`.
pub fn falling(k: i64, p: usize) -> i64 {
    (1..=p as i64).map(|i| k + i).product()
}

/// Coefficient of `z^k` in `delta_p(z/a)`.
pub fn delta_coeff(a: &Scalar, p: usize, k: i64) -> Scalar {
    Scalar::from_int(falling(k, p)) * a.pow(-k)
}

fn binom(n: usize, k: usize) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// Formal distribution: a windowed two-sided Laurent part plus a finite sum
/// of derivative deltas `c * delta_p(z/a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalDist {
    pub window: i64,
    pub laurent: BTreeMap<i64, Scalar>,
    deltas: Vec<(Scalar, usize, Scalar)>,
}

impl FormalDist {
    pub fn zero(window: i64) -> Self {
        FormalDist {
            window,
            laurent: BTreeMap::new(),
            deltas: Vec::new(),
        }
    }

    pub fn delta(a: Scalar, p: usize, c: Scalar, window: i64) -> Self {
        let mut d = Self::zero(window);
        d.add_delta(a, p, c);
        d
    }

    pub fn deltas(&self) -> &[(Scalar, usize, Scalar)] {
        &self.deltas
    }

    /// Add `c * delta_p(z/a)`, merging with an existing key.
    pub fn add_delta(&mut self, a: Scalar, p: usize, c: Scalar) {
        if let Some(e) = self.deltas.iter_mut().find(|(b, q, _)| *b == a && *q == p) {
            e.2 += c;
        } else {
            self.deltas.push((a, p, c));
        }
        self.deltas.retain(|(_, _, c)| !c.is_zero());
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.window = self.window.min(o.window);
        for (k, c) in &o.laurent {
            let v = r.laurent.get(k).cloned().unwrap_or_default() + c;
            r.laurent.insert(*k, v);
        }
        r.laurent.retain(|k, c| !c.is_zero() && k.abs() <= r.window);
        for (a, p, c) in &o.deltas {
            r.add_delta(a.clone(), *p, c.clone());
        }
        r
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut r = self.clone();
        for v in r.laurent.values_mut() {
            *v = &*v * c;
        }
        for d in r.deltas.iter_mut() {
            d.2 = &d.2 * c;
        }
        r.laurent.retain(|_, c| !c.is_zero());
        r.deltas.retain(|(_, _, c)| !c.is_zero());
        r
    }

    /// Coefficient of `z^k` for `|k| <= window`.
    pub fn coeff(&self, k: i64) -> Scalar {
        let mut s = self.laurent.get(&k).cloned().unwrap_or_default();
        for (a, p, c) in &self.deltas {
            s += c * delta_coeff(a, *p, k);
        }
        s
    }

    pub fn coefficients(&self) -> BTreeMap<i64, Scalar> {
        (-self.window..=self.window)
            .map(|k| (k, self.coeff(k)))
            .collect()
    }

    pub fn is_zero_on_window(&self) -> bool {
        (-self.window..=self.window).all(|k| self.coeff(k).is_zero())
    }

    pub fn is_delta_supported(&self) -> bool {
        self.laurent.is_empty()
    }

    pub fn max_order(&self) -> Option<usize> {
        self.deltas.iter().map(|(_, p, _)| *p).max()
    }
}

/// Multiply the delta part of `d` by a rational function regular at every
/// delta point, using `g(x) delta^{(p)}(x) = sum_k (-1)^k C(p,k) g^{(k)}(1) delta^{(p-k)}(x)`
/// with `g(x) = f(a x)`. The Laurent part must be empty.
pub fn delta_mul(d: &FormalDist, f: &RatFn) -> Result<FormalDist, FormalError> {
    if !d.laurent.is_empty() {
        return Err(FormalError::Domain(
            "delta_mul expects a delta-supported distribution".into(),
        ));
    }
    let mut out = FormalDist::zero(d.window);
    for (a, p, c) in &d.deltas {
        for k in 0..=*p {
            let fk = f.derivative_at(k, a)?;
            let gk = fk * a.pow(k as i64);
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let coef = c * gk * Scalar::from_int(sign * binom(*p, k));
            out.add_delta(a.clone(), p - k, coef);
        }
    }
    Ok(out)
}

/// Reference product by coefficient matching: for a Laurent polynomial `f`,
/// find the unique `sum_{k<=p} c_k delta_k(z/a)` equal to `f(z) delta_p(z/a)`.
pub fn delta_mul_by_matching(
    a: &Scalar,
    p: usize,
    f: &LPoly,
    window: i64,
) -> Result<FormalDist, FormalError> {
    let span = f
        .max_exp()
        .unwrap_or(0)
        .abs()
        .max(f.min_exp().unwrap_or(0).abs());
    if window < 2 * p as i64 + 4 + span {
        return Err(FormalError::Window {
            needed: 2 * p as i64 + 4 + span,
            have: window,
        });
    }
    let ks: Vec<i64> = (-window + span..=window - span).collect();
    let target: Vec<Scalar> = ks
        .iter()
        .map(|&k| f.terms().map(|(e, c)| c * delta_coeff(a, p, k - e)).sum())
        .collect();
    let rows: Vec<Vec<Scalar>> = ks
        .iter()
        .map(|&k| (0..=p).map(|j| delta_coeff(a, j, k)).collect())
        .collect();
    let m = Matrix::from_rows(rows);
    let sol = m
        .solve(&target)
        .ok_or_else(|| FormalError::Inconsistent("product not in delta span".into()))?;
    let mut out = FormalDist::zero(window);
    for (j, c) in sol.into_iter().enumerate() {
        out.add_delta(a.clone(), j, c);
    }
    Ok(out)
}

/// Verify `(G^±(z1/z2) - G^∓(z2/z1)) / (q - q^{-1}) = [±c]_q delta(z1 q^{±c} / z2)`
/// coefficientwise in `x = z1/z2` for `|k| <= n` and both signs.
/// On failure returns `(sign, exponent)` of the first mismatch.
pub fn g_delta_identity_check(c: i64, n: i64) -> Result<(), (i64, i64)> {
    for sign in [1i64, -1] {
        let gp = g_series(sign, c, n);
        let gm = g_series(-sign, c, n);
        let inv = qdiff().inv().unwrap();
        let rhs_c = qint(sign * c);
        for k in -n..=n {
            let lhs = if k >= 0 { gp.coeff(k) } else { -gm.coeff(-k) };
            let lhs = if k == 0 { lhs - gm.coeff(0) } else { lhs };
            let lhs = lhs * &inv;
            // delta(x q^{sc}) = sum_k q^{s c k} x^k
            let rhs = &rhs_c * Scalar::q_pow(sign * c * k);
            if lhs != rhs {
                return Err((sign, k));
            }
        }
    }
    Ok(())
}

/// Result of the distribution solver.
#[derive(Clone, Debug)]
pub struct DistSolution {
    pub f: FormalDist,
    /// Dimension of the solution space of the windowed linear system.
    pub nullity: usize,
}

/// Solve `(z-a)(z-v)^m A(v) F(z) + sum_p B_p(v) delta_p(z/a) = 0` for `F`.
///
/// `A` and the `B_p` are power series in `v` (direction `AtZero`). The
/// windowed system in the coefficients of `z^k v^j` is solved exactly; the
/// solution is then expressed in `delta_p(z/a)`, `p <= n + 1`, and the
/// residual of that expression is checked on the whole window.
pub fn solve_dist_equation(
    m: u32,
    a: &Scalar,
    aser: &Series,
    b: &[Series],
    window: i64,
) -> Result<DistSolution, FormalError> {
    if m > 1 {
        return Err(FormalError::Domain("m must be 0 or 1".into()));
    }
    if aser.valuation().is_none() {
        return Err(FormalError::Domain("A must be nonzero".into()));
    }
    let n = b.len();
    let order = n + 1;
    let jmax = window.min(aser.prec());
    for bp in b {
        if bp.prec() < jmax {
            return Err(FormalError::Window {
                needed: jmax,
                have: bp.prec(),
            });
        }
    }
    // Unknowns F_k, k in [-W, W].
    let w = window;
    let nunk = (2 * w + 1) as usize;
    let idx = |k: i64| (k + w) as usize;
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let mut rhs: Vec<Scalar> = Vec::new();
    let lo = -w + 1 + m as i64;
    // (z-a)(z-v)^m F(z) = sum over shifts; coefficient of z^k v^j.
    for j in 0..=jmax {
        for k in lo..=w {
            let mut row = vec![Scalar::zero(); nunk];
            // terms: A(v) * [(z - a) * (z - v)^m F]_{z^k v^j}
            // (z-a)F: coeff z^k is F_{k-1} - a F_k.
            // (z-v)G: coeff z^k v^j of (z-v)G(z)A(v) = A_j G_{k-1} - A_{j-1} G_k.
            let add_g = |row: &mut Vec<Scalar>, kk: i64, c: Scalar| {
                if c.is_zero() {
                    return;
                }
                row[idx(kk - 1)] += &c;
                row[idx(kk)] -= &c * a;
            };
            if m == 0 {
                add_g(&mut row, k, aser.coeff(j));
            } else {
                add_g(&mut row, k - 1, aser.coeff(j));
                if j >= 1 {
                    add_g(&mut row, k, -aser.coeff(j - 1));
                }
            }
            let mut r = Scalar::zero();
            for (p, bp) in b.iter().enumerate() {
                r -= bp.coeff(j) * delta_coeff(a, p, k);
            }
            if row.iter().all(|x| x.is_zero()) && r.is_zero() {
                continue;
            }
            rows.push(row);
            rhs.push(r);
        }
    }
    let mat = Matrix::from_rows(rows);
    let sol = mat
        .solve(&rhs)
        .ok_or_else(|| FormalError::Inconsistent("no distribution solves the equation".into()))?;
    let nullity = mat.kernel().len();
    // Express the solution as a delta combination.
    let fit_rows: Vec<Vec<Scalar>> = (-w..=w)
        .map(|k| (0..=order).map(|p| delta_coeff(a, p, k)).collect())
        .collect();
    let fit = Matrix::from_rows(fit_rows)
        .solve(&sol)
        .ok_or_else(|| FormalError::Inconsistent("solution is not delta-supported".into()))?;
    let mut f = FormalDist::zero(w);
    for (p, c) in fit.into_iter().enumerate() {
        f.add_delta(a.clone(), p, c);
    }
    // Residual check on the full window.
    for (k, c) in f.coefficients() {
        if c != sol[idx(k)] {
            return Err(FormalError::Inconsistent(format!("residual at z^{}", k)));
        }
    }
    Ok(DistSolution { f, nullity })
}
