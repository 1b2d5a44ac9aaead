//! Sparse multivariate polynomials over the integers.
//!
//! Variable 0 is the deformation variable `t`; variables `1..NVARS` are the
//! declared spectral parameters. Terms are kept sorted by descending
//! lexicographic order on exponent vectors with nonzero coefficients only.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Number of variables: `t` plus up to seven spectral parameters.
pub const NVARS: usize = 8;

/// Exponent vector.
pub type Mono = [u16; NVARS];

/// Integer polynomial in `t` and the spectral parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, BigInt)>,
}

fn mono_cmp(a: &Mono, b: &Mono) -> Ordering {
    a.cmp(b)
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut r = [0u16; NVARS];
    for i in 0..NVARS {
        r[i] = a[i].checked_add(b[i]).expect("exponent overflow");
    }
    r
}

fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut r = [0u16; NVARS];
    for i in 0..NVARS {
        if a[i] < b[i] {
            return None;
        }
        r[i] = a[i] - b[i];
    }
    Some(r)
}

fn mono_min(a: &Mono, b: &Mono) -> Mono {
    let mut r = [0u16; NVARS];
    for i in 0..NVARS {
        r[i] = a[i].min(b[i]);
    }
    r
}

const ONE_MONO: Mono = [0; NVARS];

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly {
                terms: vec![(ONE_MONO, c)],
            }
        }
    }

    pub fn monomial(m: Mono, c: BigInt) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly {
                terms: vec![(m, c)],
            }
        }
    }

    /// The variable `x_i`.
    pub fn var(i: usize) -> Self {
        let mut m = ONE_MONO;
        m[i] = 1;
        Self::monomial(m, BigInt::one())
    }

    fn from_map(map: BTreeMap<Mono, BigInt>) -> Self {
        let terms = map
            .into_iter()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Mono, BigInt)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == ONE_MONO && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0 == ONE_MONO)
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 if self.terms[0].0 == ONE_MONO => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn lead(&self) -> Option<&(Mono, BigInt)> {
        self.terms.first()
    }

    pub fn neg(&self) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < o.terms.len() {
            match mono_cmp(&self.terms[i].0, &o.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(o.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &o.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&o.terms[j..]);
        Poly { terms: out }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if o.terms.len() == 1 {
            return self.mul_term(&o.terms[0].0, &o.terms[0].1);
        }
        if self.terms.len() == 1 {
            return o.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut map: BTreeMap<Mono, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let e = map.entry(mono_mul(ma, mb)).or_insert_with(BigInt::zero);
                *e += ca * cb;
            }
        }
        Self::from_map(map)
    }

    pub fn mul_term(&self, m: &Mono, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, cc)| (mono_mul(mm, m), cc * c))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        self.mul_term(&ONE_MONO, c)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Self::one();
        let mut b = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// Exact quotient `self / o`, or `None` when `o` does not divide `self`.
    pub fn div_exact(&self, o: &Self) -> Option<Self> {
        assert!(!o.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(Self::zero());
        }
        if o.terms.len() == 1 {
            let (m, c) = &o.terms[0];
            let mut out = Vec::with_capacity(self.terms.len());
            for (mm, cc) in &self.terms {
                let q = mono_div(mm, m)?;
                let (qc, r) = cc.div_rem(c);
                if !r.is_zero() {
                    return None;
                }
                out.push((q, qc));
            }
            return Some(Poly { terms: out });
        }
        let (lm, lc) = o.terms[0].clone();
        let mut rem = self.clone();
        let mut quot: BTreeMap<Mono, BigInt> = BTreeMap::new();
        while let Some((m, c)) = rem.terms.first().cloned() {
            let qm = mono_div(&m, &lm)?;
            let (qc, r) = c.div_rem(&lc);
            if !r.is_zero() {
                return None;
            }
            rem = rem.sub(&o.mul_term(&qm, &qc));
            quot.insert(qm, qc);
        }
        Some(Self::from_map(quot))
    }

    /// Gcd of the integer coefficients (nonnegative).
    pub fn int_content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Componentwise minimal exponent vector.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.iter();
        let mut m = match it.next() {
            Some((m, _)) => *m,
            None => return ONE_MONO,
        };
        for (mm, _) in it {
            m = mono_min(&m, mm);
        }
        m
    }

    pub fn degree_in(&self, v: usize) -> u16 {
        self.terms.iter().map(|(m, _)| m[v]).max().unwrap_or(0)
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.terms.iter().any(|(m, _)| m[v] > 0)
    }

    pub fn highest_var(&self) -> Option<usize> {
        (0..NVARS).rev().find(|&v| self.uses_var(v))
    }

    /// Coefficients as a polynomial in `x_v`, indexed by degree.
    fn to_univariate(&self, v: usize) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut maps: Vec<BTreeMap<Mono, BigInt>> = vec![BTreeMap::new(); d + 1];
        for (m, c) in &self.terms {
            let mut mm = *m;
            let k = mm[v] as usize;
            mm[v] = 0;
            maps[k].insert(mm, c.clone());
        }
        maps.into_iter().map(Self::from_map).collect()
    }

    fn from_univariate(coeffs: &[Poly], v: usize) -> Self {
        let mut map: BTreeMap<Mono, BigInt> = BTreeMap::new();
        for (k, p) in coeffs.iter().enumerate() {
            for (m, c) in &p.terms {
                let mut mm = *m;
                mm[v] = k as u16;
                map.insert(mm, c.clone());
            }
        }
        Self::from_map(map)
    }

    /// Sign normalization: returns `self` with a positive leading coefficient.
    pub fn normalize_sign(self) -> Self {
        match self.terms.first() {
            Some((_, c)) if c.is_negative() => self.neg(),
            _ => self,
        }
    }

    /// Greatest common divisor with positive leading coefficient.
    pub fn gcd(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone().normalize_sign();
        }
        if o.is_zero() {
            return self.clone().normalize_sign();
        }
        if self.is_one() || o.is_one() {
            return Self::one();
        }
        if self == o {
            return self.clone().normalize_sign();
        }
        if self.is_monomial() || o.is_monomial() {
            let m = mono_min(&self.mono_content(), &o.mono_content());
            let c = self.int_content().gcd(&o.int_content());
            return Self::monomial(m, c);
        }
        // Pull out monomial and integer contents first.
        let ma = self.mono_content();
        let mb = o.mono_content();
        let mg = mono_min(&ma, &mb);
        let ca = self.int_content();
        let cb = o.int_content();
        let cg = ca.gcd(&cb);
        let a = self.div_exact(&Self::monomial(ma, ca)).unwrap();
        let b = o.div_exact(&Self::monomial(mb, cb)).unwrap();
        let g = gcd_primitive(&a, &b);
        g.mul_term(&mg, &cg).normalize_sign()
    }

    /// Substitute `x_v -> x_v^{-1}`; returns `(p, d)` with `self(x_v^{-1}) = p / x_v^d`.
    pub fn invert_var(&self, v: usize) -> (Self, u16) {
        let d = self.degree_in(v);
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut mm = *m;
            mm[v] = d - mm[v];
            map.insert(mm, c.clone());
        }
        (Self::from_map(map), d)
    }

    /// Substitute `x_v -> c * x_v^k` for a nonnegative `k` and integer `c`.
    pub fn subst_power(&self, v: usize, k: u16) -> Self {
        let mut map: BTreeMap<Mono, BigInt> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut mm = *m;
            mm[v] = mm[v].checked_mul(k).expect("exponent overflow");
            *map.entry(mm).or_insert_with(BigInt::zero) += c;
        }
        Self::from_map(map)
    }

    /// Render with the given variable names.
    pub fn fmt_with(&self, names: &[&str]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push(if neg { '-' } else { '+' });
            }
            let mut factors: Vec<String> = Vec::new();
            for (v, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = names.get(v).copied().unwrap_or("?");
                if e == 1 {
                    factors.push(name.to_string());
                } else {
                    factors.push(format!("{}^{}", name, e));
                }
            }
            if factors.is_empty() {
                let _ = write!(s, "{}", a);
            } else {
                if !a.is_one() {
                    let _ = write!(s, "{}*", a);
                }
                s.push_str(&factors.join("*"));
            }
        }
        s
    }
}

/// Gcd of two polynomials with trivial integer and monomial content.
fn gcd_primitive(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if let Some(_) = a.div_exact(b) {
        return b.clone().normalize_sign();
    }
    if let Some(_) = b.div_exact(a) {
        return a.clone().normalize_sign();
    }
    let va = a.highest_var();
    let vb = b.highest_var();
    let v = va.max(vb).unwrap();
    match (a.uses_var(v), b.uses_var(v)) {
        (true, false) => {
            let ca = univ_content(&a.to_univariate(v));
            return gcd_primitive_nc(&ca, b);
        }
        (false, true) => {
            let cb = univ_content(&b.to_univariate(v));
            return gcd_primitive_nc(a, &cb);
        }
        _ => {}
    }
    let ua = a.to_univariate(v);
    let ub = b.to_univariate(v);
    let ca = univ_content(&ua);
    let cb = univ_content(&ub);
    let cg = ca.gcd(&cb);
    let pa = univ_div(&ua, &ca);
    let pb = univ_div(&ub, &cb);
    let g = univ_prs_gcd(pa, pb);
    Poly::from_univariate(&g, v).mul(&cg).normalize_sign()
}

/// As `gcd_primitive` but tolerant of integer and monomial content.
fn gcd_primitive_nc(a: &Poly, b: &Poly) -> Poly {
    a.gcd(b)
}

fn univ_content(u: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in u.iter().rev() {
        if c.is_zero() {
            continue;
        }
        g = g.gcd(c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn univ_div(u: &[Poly], c: &Poly) -> Vec<Poly> {
    if c.is_one() {
        return u.to_vec();
    }
    u.iter()
        .map(|p| p.div_exact(c).expect("content divides"))
        .collect()
}

fn univ_trim(u: &mut Vec<Poly>) {
    while u.len() > 1 && u.last().unwrap().is_zero() {
        u.pop();
    }
}

/// Pseudo-remainder of `a` by `b` as polynomials in the main variable.
fn univ_prem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let mut r: Vec<Poly> = a.to_vec();
    univ_trim(&mut r);
    let db = b.len() - 1;
    let lb = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = r[i + shift].sub(&bc.mul(&lr));
        }
        r.pop();
        univ_trim(&mut r);
        if r.is_empty() {
            r.push(Poly::zero());
        }
    }
    r
}

fn univ_is_zero(u: &[Poly]) -> bool {
    u.iter().all(|c| c.is_zero())
}

/// Primitive PRS gcd of two primitive polynomials in the main variable.
fn univ_prs_gcd(a: Vec<Poly>, b: Vec<Poly>) -> Vec<Poly> {
    let (mut a, mut b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    univ_trim(&mut a);
    univ_trim(&mut b);
    loop {
        if univ_is_zero(&b) {
            let c = univ_content(&a);
            return univ_div(&a, &c);
        }
        if b.len() == 1 {
            return vec![Poly::one()];
        }
        let r = univ_prem(&a, &b);
        if univ_is_zero(&r) {
            let c = univ_content(&b);
            return univ_div(&b, &c);
        }
        let c = univ_content(&r);
        let mut r = univ_div(&r, &c);
        univ_trim(&mut r);
        a = b;
        b = r;
    }
}
