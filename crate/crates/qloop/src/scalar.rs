//! Exact rational functions in `t` and the declared spectral parameters,
//! together with the quantum integers built from `q = t^2`.

use crate::poly::{Mono, Poly, NVARS};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Default display names: `t` then the spectral parameters.
pub const DEFAULT_NAMES: [&str; NVARS] = ["t", "a", "b", "c", "d", "e", "f", "g"];

/// Errors raised by scalar operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Reduced fraction `num / den` over `Z[t, a_1, ...]` with `gcd(num, den) = 1`
/// and a positive leading coefficient on `den`; this form is unique.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    num: Poly,
    den: Poly,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Scalar {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar {
            num: Poly::constant(BigInt::from(n)),
            den: Poly::one(),
        }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    /// The deformation variable `t`.
    pub fn t() -> Self {
        Scalar {
            num: Poly::var(0),
            den: Poly::one(),
        }
    }

    /// `t^k` for any integer `k`.
    pub fn t_pow(k: i64) -> Self {
        Self::var_pow(0, k)
    }

    /// `q^k = t^{2k}`.
    pub fn q_pow(k: i64) -> Self {
        Self::t_pow(2 * k)
    }

    /// The `i`-th declared spectral parameter (`i >= 1`).
    pub fn param(i: usize) -> Self {
        assert!(i >= 1 && i < NVARS, "parameter index out of range");
        Scalar {
            num: Poly::var(i),
            den: Poly::one(),
        }
    }

    /// `x_v^k` for any integer `k`.
    pub fn var_pow(v: usize, k: i64) -> Self {
        let mut m: Mono = [0; NVARS];
        m[v] = k.unsigned_abs() as u16;
        let p = Poly::monomial(m, BigInt::one());
        if k >= 0 {
            Scalar {
                num: p,
                den: Poly::one(),
            }
        } else {
            Scalar {
                num: Poly::one(),
                den: p,
            }
        }
    }

    /// Build from raw numerator and denominator, reducing to canonical form.
    pub fn from_polys(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        if d.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            n = n.neg();
            d = d.neg();
        }
        Scalar { num: n, den: d }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// Integer value when the scalar is an integer constant.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let (mut n, mut d) = (self.den.clone(), self.num.clone());
        if d.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            n = n.neg();
            d = d.neg();
        }
        Ok(Scalar { num: n, den: d })
    }

    pub fn pow(&self, k: i64) -> Self {
        if k < 0 {
            return self.inv().expect("negative power of zero").pow(-k);
        }
        Scalar {
            num: self.num.pow(k as u32),
            den: self.den.pow(k as u32),
        }
    }

    /// Substitute `t -> t^{-1}`.
    pub fn invert_t(&self) -> Self {
        let (n, dn) = self.num.invert_var(0);
        let (d, dd) = self.den.invert_var(0);
        let shift = dd as i64 - dn as i64;
        Self::reduce(n, d) * Self::t_pow(shift)
    }

    /// Substitute `x_v -> x_v^k` for `k >= 1`.
    pub fn subst_power(&self, v: usize, k: u16) -> Self {
        Self::reduce(self.num.subst_power(v, k), self.den.subst_power(v, k))
    }

    /// True when the scalar is `c * monomial` with a monomial denominator.
    pub fn is_unit_monomial(&self) -> bool {
        self.num.is_monomial() && self.den.is_monomial()
    }

    /// Render with explicit variable names.
    pub fn fmt_with(&self, names: &[&str]) -> String {
        let n = self.num.fmt_with(names);
        if self.den.is_one() {
            return n;
        }
        let d = self.den.fmt_with(names);
        let n = if self.num.terms().len() > 1 {
            format!("({})", n)
        } else {
            n
        };
        let d = if self.den.terms().len() > 1 || (self.den.terms().len() == 1 && d.contains('*')) {
            format!("({})", d)
        } else {
            d
        };
        format!("{}/{}", n, d)
    }

    fn add_ref(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return Self::reduce(self.num.add(&o.num), self.den.clone());
        }
        if self.den.is_one() {
            return Scalar {
                num: self.num.mul(&o.den).add(&o.num),
                den: o.den.clone(),
            }
            .fix_after_unit_den();
        }
        if o.den.is_one() {
            return Scalar {
                num: o.num.mul(&self.den).add(&self.num),
                den: self.den.clone(),
            }
            .fix_after_unit_den();
        }
        let g = self.den.gcd(&o.den);
        let d1 = self.den.div_exact(&g).unwrap();
        let d2 = o.den.div_exact(&g).unwrap();
        let n = self.num.mul(&d2).add(&o.num.mul(&d1));
        if n.is_zero() {
            return Self::zero();
        }
        let h = n.gcd(&g);
        let (n, g) = if h.is_one() {
            (n, g)
        } else {
            (n.div_exact(&h).unwrap(), g.div_exact(&h).unwrap())
        };
        let d = d1.mul(&d2).mul(&g);
        let mut s = Scalar { num: n, den: d };
        if s.den.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            s.num = s.num.neg();
            s.den = s.den.neg();
        }
        s
    }

    /// Adding a polynomial to a reduced fraction keeps it reduced.
    fn fix_after_unit_den(self) -> Self {
        if self.num.is_zero() {
            Self::zero()
        } else {
            self
        }
    }

    fn mul_ref(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return o.clone();
        }
        if o.is_one() {
            return self.clone();
        }
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let (n1, d2) = if g1.is_one() {
            (self.num.clone(), o.den.clone())
        } else {
            (
                self.num.div_exact(&g1).unwrap(),
                o.den.div_exact(&g1).unwrap(),
            )
        };
        let (n2, d1) = if g2.is_one() {
            (o.num.clone(), self.den.clone())
        } else {
            (
                o.num.div_exact(&g2).unwrap(),
                self.den.div_exact(&g2).unwrap(),
            )
        };
        let mut s = Scalar {
            num: n1.mul(&n2),
            den: d1.mul(&d2),
        };
        if s.den.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            s.num = s.num.neg();
            s.den = s.den.neg();
        }
        s
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&DEFAULT_NAMES))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                $body(self, o)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                $body(&self, &o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                $body(&self, o)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                $body(self, &o)
            }
        }
    };
}

binop!(Add, add, |a: &Scalar, b: &Scalar| a.add_ref(b));
binop!(Sub, sub, |a: &Scalar, b: &Scalar| a.add_ref(&-b));
binop!(Mul, mul, |a: &Scalar, b: &Scalar| a.mul_ref(b));
binop!(Div, div, |a: &Scalar, b: &Scalar| a
    .mul_ref(&b.inv().expect("division by zero")));

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = self.add_ref(o);
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, o: Scalar) {
        *self = self.add_ref(&o);
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = self.add_ref(&-o);
    }
}

impl SubAssign<Scalar> for Scalar {
    fn sub_assign(&mut self, o: Scalar) {
        *self = self.add_ref(&-o);
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = self.mul_ref(o);
    }
}

impl MulAssign<Scalar> for Scalar {
    fn mul_assign(&mut self, o: Scalar) {
        *self = self.mul_ref(&o);
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(it: I) -> Scalar {
        it.fold(Scalar::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(it: I) -> Scalar {
        it.fold(Scalar::one(), |a, b| a * b)
    }
}

/// Base of a spectral point: a declared parameter or an explicit unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointBase {
    Param(usize),
    Unit(String),
}

/// The point `base * q^exponent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpectralPoint {
    pub base: PointBase,
    pub exponent: i64,
}

impl SpectralPoint {
    pub fn param(i: usize, exponent: i64) -> Self {
        SpectralPoint {
            base: PointBase::Param(i),
            exponent,
        }
    }

    /// A point on the orbit of an explicit nonzero integer constant.
    pub fn unit(c: i64, exponent: i64) -> Self {
        assert!(c != 0, "spectral point must be nonzero");
        SpectralPoint {
            base: PointBase::Unit(c.to_string()),
            exponent,
        }
    }

    /// Multiply by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        SpectralPoint {
            base: self.base.clone(),
            exponent: self.exponent + k,
        }
    }

    pub fn same_orbit(&self, o: &Self) -> bool {
        self.base == o.base
    }

    pub fn base_scalar(&self) -> Scalar {
        match &self.base {
            PointBase::Param(i) => Scalar::param(*i),
            PointBase::Unit(s) => Scalar::from_int(s.parse().expect("integer unit")),
        }
    }

    pub fn to_scalar(&self) -> Scalar {
        self.base_scalar() * Scalar::q_pow(self.exponent)
    }

    pub fn fmt_with(&self, names: &[&str]) -> String {
        let b = match &self.base {
            PointBase::Param(i) => names.get(*i).copied().unwrap_or("?").to_string(),
            PointBase::Unit(s) => s.clone(),
        };
        match self.exponent {
            0 => b,
            1 => format!("{}*q", b),
            k => format!("{}*q^{}", b, k),
        }
    }

    /// Parse `"a*q^3"`, `"a*q"`, `"a"`, `"b*q^-2"` against a list of names.
    pub fn parse(s: &str, names: &[&str]) -> Result<Self, ScalarError> {
        let s = s.trim();
        let (b, e) = match s.split_once('*') {
            None => (s, 0),
            Some((b, rest)) => {
                let rest = rest.trim();
                let e = if rest == "q" {
                    1
                } else if let Some(x) = rest.strip_prefix("q^") {
                    x.trim_matches(|c| c == '(' || c == ')')
                        .parse::<i64>()
                        .map_err(|_| ScalarError::Domain(format!("bad exponent in {}", s)))?
                } else {
                    return Err(ScalarError::Domain(format!("bad point {}", s)));
                };
                (b.trim(), e)
            }
        };
        if let Some(i) = names.iter().position(|n| *n == b) {
            if i == 0 {
                return Err(ScalarError::Domain("t is not a spectral parameter".into()));
            }
            return Ok(SpectralPoint::param(i, e));
        }
        match b.parse::<i64>() {
            Ok(c) if c != 0 => Ok(SpectralPoint::unit(c, e)),
            _ => Err(ScalarError::Domain(format!("undeclared parameter {}", b))),
        }
    }
}

impl fmt::Display for SpectralPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&DEFAULT_NAMES))
    }
}

/// The quantum integer `[n]_q = (q^n - q^{-n}) / (q - q^{-1})`.
pub fn qint(n: i64) -> Scalar {
    if n == 0 {
        return Scalar::zero();
    }
    let s: Scalar = (0..n.abs())
        .map(|k| Scalar::q_pow(n.abs() - 1 - 2 * k))
        .sum();
    if n < 0 {
        -s
    } else {
        s
    }
}

/// `[n]_q!`.
pub fn qfact(n: u32) -> Scalar {
    (1..=n as i64).map(qint).product()
}

/// The quantum binomial `[n, m]_q`.
pub fn qbinom(n: u32, m: u32) -> Result<Scalar, ScalarError> {
    if m > n {
        return Err(ScalarError::Domain(format!(
            "qbinom({}, {}) with m > n",
            n, m
        )));
    }
    Ok(qfact(n) / (qfact(m) * qfact(n - m)))
}

/// `prod [i]_q over num / prod [j]_q over den`, cancelling indices as
/// multisets before evaluation.
pub fn qratio_product(num: &[i64], den: &[i64]) -> Result<Scalar, ScalarError> {
    let mut n: Vec<i64> = num.to_vec();
    let mut d: Vec<i64> = Vec::new();
    let mut sign = 1i64;
    for &j in den {
        if let Some(p) = n.iter().position(|&i| i == j) {
            n.remove(p);
        } else if let Some(p) = n.iter().position(|&i| i == -j && j != 0) {
            n.remove(p);
            sign = -sign;
        } else {
            d.push(j);
        }
    }
    if d.contains(&0) {
        return Err(ScalarError::Domain(
            "uncancelled [0]_q in denominator".into(),
        ));
    }
    if n.contains(&0) {
        return Ok(Scalar::zero());
    }
    let top: Scalar = n.iter().map(|&i| qint(i)).product();
    let bot: Scalar = d.iter().map(|&i| qint(i)).product();
    Ok(Scalar::from_int(sign) * top / bot)
}

/// `q - q^{-1}`.
pub fn qdiff() -> Scalar {
    Scalar::q_pow(1) - Scalar::q_pow(-1)
}

impl Zero for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

impl One for Scalar {
    fn one() -> Self {
        Scalar::one()
    }
}
