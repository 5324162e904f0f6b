//! Exact arithmetic in `Q_p` and in the unramified quadratic extension
//! `F = Q_p(sqrt d)`, modelled on the global field `Q(sqrt d)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational scalar.
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("d = {0} is not squarefree")]
    NotSquarefree(i64),
    #[error("d = {d} is not a nonresidue unit mod p = {p} (extension would be split or ramified)")]
    NotInert { p: u64, d: i64 },
    #[error("argument is zero")]
    ZeroArgument,
    #[error("element is not in the base field")]
    NotInBaseField,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// Builds the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"n"` or `"n/d"`.
pub fn parse_rat(s: &str) -> Result<Rat, PadicError> {
    let t = s.trim();
    let err = || PadicError::Parse(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rat::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| err())?;
            Ok(Rat::from_integer(n))
        }
    }
}

/// Canonical string form: `"n"` for integers, `"n/d"` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// `p^e` as a big integer.
pub fn pow_p(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// `p^e` as a rational, `e` of any sign.
pub fn pow_p_rat(p: u64, e: i64) -> Rat {
    let m = Rat::from_integer(pow_p(p, e.unsigned_abs() as u32));
    if e >= 0 {
        m
    } else {
        m.recip()
    }
}

/// p-adic valuation of a nonzero integer.
pub fn vp_int(n: &BigInt, p: u64) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` stands for `+infinity`.
pub fn vp(r: &Rat, p: u64) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    Some(vp_int(r.numer(), p).unwrap() - vp_int(r.denom(), p).unwrap())
}

/// `r / p^{v_p(r)}` for nonzero `r`.
pub fn unit_part(r: &Rat, p: u64) -> Rat {
    match vp(r, p) {
        None => Rat::zero(),
        Some(v) => r * pow_p_rat(p, -v),
    }
}

/// Minimum of two valuations with `None` as `+infinity`.
pub fn vmin(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

/// Legendre symbol `(a|p)` for an odd prime `p`.
pub fn legendre(a: &BigInt, p: u64) -> i8 {
    let pb = BigInt::from(p);
    let r = a.mod_floor(&pb);
    if r.is_zero() {
        return 0;
    }
    let e = BigInt::from((p - 1) / 2);
    if r.modpow(&e, &pb).is_one() {
        1
    } else {
        -1
    }
}

/// Inverse of `a` modulo `m` (`gcd(a, m) = 1`).
pub fn inv_mod(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// Residue of a p-integral rational modulo `p^k` as an integer in `[0, p^k)`.
pub fn residue_mod(r: &Rat, p: u64, k: u32) -> BigInt {
    let m = pow_p(p, k);
    let den = r.denom().mod_floor(&m);
    (r.numer() * inv_mod(&den, &m)).mod_floor(&m)
}

/// Canonical representative of `r` modulo `p^k Z_(p)` (`k` may be negative):
/// the unique `R / p^s` with `0 <= R < p^{k+s}`, `s = max(0, -v(r), -k)`.
pub fn reduce_mod_pk(r: &Rat, p: u64, k: i64) -> Rat {
    if r.is_zero() {
        return Rat::zero();
    }
    let v = vp(r, p).unwrap();
    if v >= k {
        return Rat::zero();
    }
    let s = 0.max(-v).max(-k);
    if s + k <= 0 {
        return Rat::zero();
    }
    let scaled = r * pow_p_rat(p, s);
    let res = residue_mod(&scaled, p, (s + k) as u32);
    Rat::new(res, pow_p(p, s as u32))
}

/// Hilbert symbol `(a, b)_p` for nonzero rationals, any prime `p`.
pub fn hilbert_symbol(a: &Rat, b: &Rat, p: u64) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "hilbert symbol of zero");
    let (al, u) = split_unit(a, p);
    let (be, v) = split_unit(b, p);
    if p == 2 {
        let eps = |x: &BigInt| -> i64 {
            let r = x.mod_floor(&BigInt::from(4)).to_i64().unwrap();
            ((r - 1) / 2) & 1
        };
        let omega = |x: &BigInt| -> i64 {
            let r = x.mod_floor(&BigInt::from(8)).to_i64().unwrap();
            ((r * r - 1) / 8) & 1
        };
        let e = eps(&u) * eps(&v) + al * omega(&v) + be * omega(&u);
        if e.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    } else {
        let mut s: i64 = if (al * be).rem_euclid(2) == 1 && (p % 4 == 3) {
            -1
        } else {
            1
        };
        if be.rem_euclid(2) == 1 {
            s *= legendre(&u, p) as i64;
        }
        if al.rem_euclid(2) == 1 {
            s *= legendre(&v, p) as i64;
        }
        s as i8
    }
}

/// Writes `r = p^v * u` with `u` a p-adic unit and returns `(v, u mod p^3)`
/// as an integer residue (enough to determine all quadratic symbols).
fn split_unit(r: &Rat, p: u64) -> (i64, BigInt) {
    let v = vp(r, p).unwrap();
    let u = unit_part(r, p);
    (v, residue_mod(&u, p, 3))
}

/// Local context: odd prime `p` and a nonresidue unit `d`, so that
/// `F = Q_p(sqrt d)` is the unramified quadratic extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFieldCtx {
    pub p: u64,
    pub d: i64,
    pub psi_level: i64,
}

impl LocalFieldCtx {
    pub fn new(p: u64, d: i64) -> Result<Self, PadicError> {
        if p == 2 || !is_prime(p) {
            return Err(PadicError::InvalidPrime(p));
        }
        if !is_squarefree(d) {
            return Err(PadicError::NotSquarefree(d));
        }
        if legendre(&BigInt::from(d), p) != -1 {
            return Err(PadicError::NotInert { p, d });
        }
        Ok(Self { p, d, psi_level: 0 })
    }

    /// Context with the first negative squarefree nonresidue `d`.
    pub fn with_default_d(p: u64) -> Result<Self, PadicError> {
        if p == 2 || !is_prime(p) {
            return Err(PadicError::InvalidPrime(p));
        }
        let d = default_nonresidue(p);
        Self::new(p, d)
    }

    /// Residue cardinality of the base field.
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn valuation(&self, x: &QuadExtElem) -> Option<i64> {
        x.valuation(self.p)
    }
}

/// Smallest negative squarefree `d` (in absolute value) that is a
/// quadratic nonresidue mod `p`.
pub fn default_nonresidue(p: u64) -> i64 {
    let mut k = 1i64;
    loop {
        let d = -k;
        if is_squarefree(d) && legendre(&BigInt::from(d), p) == -1 {
            return d;
        }
        k += 1;
    }
}

pub fn is_squarefree(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let n = d.unsigned_abs();
    let mut k = 2u64;
    while k * k <= n {
        if n % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// An element `a + b sqrt(d)` of `Q(sqrt d)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadExtElem {
    pub a: Rat,
    pub b: Rat,
    pub d: i64,
}

impl fmt::Debug for QuadExtElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QuadExtElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", fmt_rat(&self.a))
        } else if self.a.is_zero() {
            write!(f, "{}*r{}", fmt_rat(&self.b), self.d)
        } else {
            write!(f, "{}+{}*r{}", fmt_rat(&self.a), fmt_rat(&self.b), self.d)
        }
    }
}

impl QuadExtElem {
    pub fn new(a: Rat, b: Rat, d: i64) -> Self {
        Self { a, b, d }
    }
    pub fn from_rat(a: Rat, d: i64) -> Self {
        Self { a, b: Rat::zero(), d }
    }
    pub fn from_int(n: i64, d: i64) -> Self {
        Self::from_rat(int(n), d)
    }
    pub fn zero(d: i64) -> Self {
        Self::from_int(0, d)
    }
    pub fn one(d: i64) -> Self {
        Self::from_int(1, d)
    }
    /// `sqrt(d)` itself.
    pub fn sqrt_d(d: i64) -> Self {
        Self::new(Rat::zero(), Rat::one(), d)
    }
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }
    pub fn conj(&self) -> Self {
        Self::new(self.a.clone(), -self.b.clone(), self.d)
    }
    /// `x * conj(x)`.
    pub fn norm(&self) -> Rat {
        &self.a * &self.a - &self.b * &self.b * int(self.d)
    }
    /// `x + conj(x)`.
    pub fn trace(&self) -> Rat {
        &self.a + &self.a
    }
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        let n = self.norm();
        Self::new(&self.a / &n, -&self.b / &n, self.d)
    }
    pub fn scale(&self, r: &Rat) -> Self {
        Self::new(&self.a * r, &self.b * r, self.d)
    }
    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = Self::one(self.d);
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }
    /// `v(a + b sqrt d) = min(v(a), v(b))`; `None` for zero.
    pub fn valuation(&self, p: u64) -> Option<i64> {
        vmin(vp(&self.a, p), vp(&self.b, p))
    }
    /// True when the element lies in the valuation ring.
    pub fn is_integral(&self, p: u64) -> bool {
        self.valuation(p).map_or(true, |v| v >= 0)
    }
    pub fn is_unit(&self, p: u64) -> bool {
        self.valuation(p) == Some(0)
    }
    /// `x / p^{v(x)}`.
    pub fn unit_part(&self, p: u64) -> Self {
        match self.valuation(p) {
            None => self.clone(),
            Some(v) => self.scale(&pow_p_rat(p, -v)),
        }
    }
    /// Canonical representative modulo `p^k O_F` (coordinatewise).
    pub fn reduce_mod_pk(&self, p: u64, k: i64) -> Self {
        Self::new(reduce_mod_pk(&self.a, p, k), reduce_mod_pk(&self.b, p, k), self.d)
    }
    /// Approximate complex value under `sqrt d -> i sqrt|d|` (or real for d > 0).
    pub fn to_complex(&self) -> num_complex::Complex64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        if self.d < 0 {
            num_complex::Complex64::new(a, b * ((-self.d) as f64).sqrt())
        } else {
            num_complex::Complex64::new(a + b * (self.d as f64).sqrt(), 0.0)
        }
    }
    /// Total order used only for deterministic sorting.
    pub fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.a.cmp(&other.a).then_with(|| self.b.cmp(&other.b))
    }
}

macro_rules! impl_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a QuadExtElem> for &'a QuadExtElem {
            type Output = QuadExtElem;
            fn $m(self, o: &'a QuadExtElem) -> QuadExtElem {
                debug_assert_eq!(self.d, o.d, "mixed quadratic fields");
                let f: fn(&QuadExtElem, &QuadExtElem) -> QuadExtElem = $body;
                f(self, o)
            }
        }
        impl $tr<QuadExtElem> for QuadExtElem {
            type Output = QuadExtElem;
            fn $m(self, o: QuadExtElem) -> QuadExtElem {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a QuadExtElem> for QuadExtElem {
            type Output = QuadExtElem;
            fn $m(self, o: &'a QuadExtElem) -> QuadExtElem {
                (&self).$m(o)
            }
        }
    };
}

impl_binop!(Add, add, |x, y| QuadExtElem::new(&x.a + &y.a, &x.b + &y.b, x.d));
impl_binop!(Sub, sub, |x, y| QuadExtElem::new(&x.a - &y.a, &x.b - &y.b, x.d));
impl_binop!(Mul, mul, |x, y| QuadExtElem::new(
    &x.a * &y.a + &x.b * &y.b * int(x.d),
    &x.a * &y.b + &x.b * &y.a,
    x.d
));
impl_binop!(Div, div, |x, y| x * &y.inv());

impl Neg for QuadExtElem {
    type Output = QuadExtElem;
    fn neg(self) -> QuadExtElem {
        QuadExtElem::new(-self.a, -self.b, self.d)
    }
}

impl Neg for &QuadExtElem {
    type Output = QuadExtElem;
    fn neg(self) -> QuadExtElem {
        QuadExtElem::new(-self.a.clone(), -self.b.clone(), self.d)
    }
}

/// Valuation of `x` in the context; `None` stands for `+infinity`.
pub fn valuation(x: &QuadExtElem, ctx: &LocalFieldCtx) -> Option<i64> {
    x.valuation(ctx.p)
}

/// Which quadratic character to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CharSide {
    /// `eta` on `F_0^x`.
    EtaOnF0,
    /// The extension `eta~(x) = (-1)^{v(x)}` on `F^x`.
    EtaTildeOnF,
}

/// `eta(x) = (-1)^{v(x)}` on `Q_p^x` or its extension to `F^x`.
pub fn quad_character(x: &QuadExtElem, side: CharSide, ctx: &LocalFieldCtx) -> Result<i8, PadicError> {
    if x.is_zero() {
        return Err(PadicError::ZeroArgument);
    }
    if side == CharSide::EtaOnF0 && !x.is_rational() {
        return Err(PadicError::NotInBaseField);
    }
    let v = x.valuation(ctx.p).unwrap();
    Ok(if v.rem_euclid(2) == 0 { 1 } else { -1 })
}

/// `(-1)^{v(x)}` for a nonzero rational.
pub fn eta_rat(x: &Rat, p: u64) -> i8 {
    let v = vp(x, p).expect("eta of zero");
    if v.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign helper for rationals.
pub fn sign_rat(r: &Rat) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// The residue field `F_{p^2} = F_p(sqrt d)`; elements are pairs mod `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueElem {
    pub a: u64,
    pub b: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidueField {
    pub p: u64,
    pub d: u64,
}

impl ResidueField {
    pub fn new(p: u64, d: i64) -> Self {
        Self { p, d: d.rem_euclid(p as i64) as u64 }
    }
    pub fn zero(&self) -> ResidueElem {
        ResidueElem { a: 0, b: 0 }
    }
    pub fn one(&self) -> ResidueElem {
        ResidueElem { a: 1 % self.p, b: 0 }
    }
    pub fn add(&self, x: ResidueElem, y: ResidueElem) -> ResidueElem {
        ResidueElem { a: (x.a + y.a) % self.p, b: (x.b + y.b) % self.p }
    }
    pub fn neg(&self, x: ResidueElem) -> ResidueElem {
        ResidueElem { a: (self.p - x.a) % self.p, b: (self.p - x.b) % self.p }
    }
    pub fn sub(&self, x: ResidueElem, y: ResidueElem) -> ResidueElem {
        self.add(x, self.neg(y))
    }
    pub fn mul(&self, x: ResidueElem, y: ResidueElem) -> ResidueElem {
        let p = self.p as u128;
        let (xa, xb, ya, yb, d) = (x.a as u128, x.b as u128, y.a as u128, y.b as u128, self.d as u128);
        ResidueElem {
            a: ((xa * ya + xb * yb % p * d) % p) as u64,
            b: ((xa * yb + xb * ya) % p) as u64,
        }
    }
    pub fn pow(&self, x: ResidueElem, mut e: u64) -> ResidueElem {
        let mut acc = self.one();
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }
    pub fn inv(&self, x: ResidueElem) -> ResidueElem {
        assert!(x != self.zero(), "inverse of zero in residue field");
        self.pow(x, self.p * self.p - 2)
    }
    pub fn is_zero(&self, x: ResidueElem) -> bool {
        x.a == 0 && x.b == 0
    }
    /// Reduction of a p-integral element.
    pub fn reduce(&self, x: &QuadExtElem) -> ResidueElem {
        let r = |q: &Rat| residue_mod(q, self.p, 1).to_u64().unwrap();
        ResidueElem { a: r(&x.a), b: r(&x.b) }
    }
    /// Teichmuller-free lift with coordinates in `[0, p)`.
    pub fn lift(&self, x: ResidueElem, d: i64) -> QuadExtElem {
        QuadExtElem::new(int(x.a as i64), int(x.b as i64), d)
    }
    pub fn elements(&self) -> impl Iterator<Item = ResidueElem> + '_ {
        (0..self.p).flat_map(move |a| (0..self.p).map(move |b| ResidueElem { a, b }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64, d: i64) -> QuadExtElem {
        QuadExtElem::new(int(a), int(b), d)
    }

    #[test]
    fn valuation_examples() {
        let ctx = LocalFieldCtx::new(3, -1).unwrap();
        assert_eq!(valuation(&q(3, 3, -1), &ctx), Some(1));
        assert_eq!(valuation(&QuadExtElem::from_rat(rat(1, 3), -1), &ctx), Some(-1));
        assert_eq!(valuation(&QuadExtElem::zero(-1), &ctx), None);
    }

    #[test]
    fn character_examples() {
        let ctx = LocalFieldCtx::new(3, -1).unwrap();
        let p = QuadExtElem::from_int(3, -1);
        assert_eq!(quad_character(&p, CharSide::EtaOnF0, &ctx), Ok(-1));
        assert_eq!(quad_character(&QuadExtElem::from_int(2, -1), CharSide::EtaOnF0, &ctx), Ok(1));
        let x = &p * &q(1, 1, -1);
        assert_eq!(quad_character(&x, CharSide::EtaTildeOnF, &ctx), Ok(-1));
        assert_eq!(
            quad_character(&QuadExtElem::zero(-1), CharSide::EtaTildeOnF, &ctx),
            Err(PadicError::ZeroArgument)
        );
    }

    #[test]
    fn context_validation() {
        assert!(LocalFieldCtx::new(2, -1).is_err());
        assert!(LocalFieldCtx::new(9, -1).is_err());
        assert!(LocalFieldCtx::new(5, -1).is_err());
        assert!(LocalFieldCtx::new(3, -3).is_err());
        assert!(LocalFieldCtx::new(3, -4).is_err());
        assert_eq!(LocalFieldCtx::with_default_d(5).unwrap().d, -2);
        assert_eq!(LocalFieldCtx::with_default_d(3).unwrap().d, -1);
    }

    #[test]
    fn reduce_mod_pk_examples() {
        assert_eq!(reduce_mod_pk(&int(7), 3, 1), int(1));
        assert_eq!(reduce_mod_pk(&int(-1), 3, 2), int(8));
        assert_eq!(reduce_mod_pk(&rat(1, 2), 3, 1), int(2));
        assert_eq!(reduce_mod_pk(&rat(5, 3), 3, 1), rat(5, 3));
        assert_eq!(reduce_mod_pk(&rat(5, 3), 3, 0), rat(2, 3));
        assert_eq!(reduce_mod_pk(&rat(5, 9), 3, -1), rat(2, 9));
        assert_eq!(reduce_mod_pk(&int(4), 3, -1), int(0));
    }

    #[test]
    fn hilbert_symbol_known_values() {
        assert_eq!(hilbert_symbol(&int(-1), &int(-1), 2), -1);
        assert_eq!(hilbert_symbol(&int(2), &int(-1), 2), 1);
        assert_eq!(hilbert_symbol(&int(3), &int(-1), 2), -1);
        assert_eq!(hilbert_symbol(&int(5), &int(-1), 2), 1);
        assert_eq!(hilbert_symbol(&int(3), &int(-1), 3), -1);
        assert_eq!(hilbert_symbol(&int(3), &int(-3), 3), 1);
        assert_eq!(hilbert_symbol(&int(2), &int(-3), 3), -1);
        assert_eq!(hilbert_symbol(&int(5), &int(-1), 5), 1);
        assert_eq!(hilbert_symbol(&int(5), &int(2), 5), -1);
    }

    #[test]
    fn residue_field_arith() {
        let k = ResidueField::new(3, -1);
        for x in k.elements() {
            if !k.is_zero(x) {
                assert_eq!(k.mul(x, k.inv(x)), k.one());
            }
        }
        assert_eq!(k.elements().count(), 9);
    }
}
