//! Weil representation of `SL_2(Q_p)` on Schwartz functions built from
//! lattice cosets, with exact Fourier transforms and Weil constants.
//!
//! Scalars live in `Q(zeta_M)`, `M = 4 p^K`, which contains `i`, `sqrt(p)`
//! and every phase `psi(t)` with `p^K t` integral. The additive character is
//! `psi(t) = exp(-2 pi i {t}_p)` scaled to the context level.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{relative_smith, HermSpace, Lattice, LatticeError, Ring};
use crate::linalg::{Mat, Vector};
use crate::orbit::{transfer_factor, SemiLiePair, UnitaryPair};
use crate::orbital::{orb_gl, orb_u, LaurentX, OrbitalError};
use crate::padic::{
    eta_rat, hilbert_symbol, int, inv_mod, legendre, pow_p, pow_p_rat, vp, LocalFieldCtx, QuadExtElem,
    Rat,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeilError {
    #[error("quadratic form is degenerate")]
    DegenerateForm,
    #[error("phase needs a root of unity of order above p^{0}")]
    PhaseOutsideRing(u32),
    #[error("quadratic space has odd dimension")]
    OddDimension,
    #[error("zero scalar")]
    ZeroScalar,
    #[error("test function is not of lattice type: {0}")]
    NotLatticeType(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
}

/// Element `sum_j c_j zeta^j` of `Q(zeta_M)`, `M = 4 p^k`, stored sparsely
/// modulo `x^M - 1`; equality reduces modulo the cyclotomic polynomial.
#[derive(Clone)]
pub struct Cyclo {
    p: u64,
    k: u32,
    c: BTreeMap<u64, Rat>,
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = self.to_complex();
        write!(f, "Cyclo({:.6}{:+.6}i)", z.re, z.im)
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

impl Eq for Cyclo {}

impl Cyclo {
    pub fn order(p: u64, k: u32) -> u64 {
        4 * p.pow(k)
    }

    fn m(&self) -> u64 {
        Self::order(self.p, self.k)
    }

    pub fn zero(p: u64, k: u32) -> Self {
        assert!(k >= 1, "cyclotomic level must be positive");
        Self { p, k, c: BTreeMap::new() }
    }

    pub fn from_rat(r: Rat, p: u64, k: u32) -> Self {
        let mut out = Self::zero(p, k);
        out.add_term(0, r);
        out
    }

    pub fn one(p: u64, k: u32) -> Self {
        Self::from_rat(Rat::one(), p, k)
    }

    /// `zeta_M^j`.
    pub fn zeta(j: i64, p: u64, k: u32) -> Self {
        let m = Self::order(p, k) as i64;
        let mut out = Self::zero(p, k);
        out.add_term(j.rem_euclid(m) as u64, Rat::one());
        out
    }

    /// `i^e`.
    pub fn i_pow(e: i64, p: u64, k: u32) -> Self {
        Self::zeta(e * p.pow(k) as i64, p, k)
    }

    /// Positive square root of `p` (Gauss sum, sign fixed by the embedding
    /// `zeta -> exp(2 pi i / M)`).
    pub fn sqrt_p(p: u64, k: u32) -> Self {
        let step = (Self::order(p, k) / p) as i64;
        let mut g = Self::zero(p, k);
        for t in 1..p {
            g.add_term(((t as i64 * step) as u64) % Self::order(p, k), int(legendre(&BigInt::from(t), p) as i64));
        }
        if p % 4 == 1 {
            g
        } else {
            g.mul(&Self::i_pow(3, p, k))
        }
    }

    /// `p^{h/2}`.
    pub fn p_half_pow(h: i64, p: u64, k: u32) -> Self {
        let r = Self::from_rat(pow_p_rat(p, h.div_euclid(2)), p, k);
        if h.rem_euclid(2) == 1 {
            r.mul(&Self::sqrt_p(p, k))
        } else {
            r
        }
    }

    fn add_term(&mut self, j: u64, r: Rat) {
        let j = j % self.m();
        let e = self.c.entry(j).or_insert_with(Rat::zero);
        *e += r;
        if e.is_zero() {
            self.c.remove(&j);
        }
    }

    fn check(&self, o: &Self) {
        assert!(self.p == o.p && self.k == o.k, "cyclotomic field mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        let mut out = self.clone();
        for (j, r) in &o.c {
            out.add_term(*j, r.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { p: self.p, k: self.k, c: self.c.iter().map(|(j, r)| (*j, -r)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Rat) -> Self {
        let mut out = Self::zero(self.p, self.k);
        if s.is_zero() {
            return out;
        }
        out.c = self.c.iter().map(|(j, r)| (*j, r * s)).collect();
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let mut out = Self::zero(self.p, self.k);
        for (i, a) in &self.c {
            for (j, b) in &o.c {
                out.add_term(i + j, a * b);
            }
        }
        out
    }

    /// Coordinates in the power basis `1, zeta, ..., zeta^{phi(M)-1}`.
    pub fn canonical(&self) -> Vec<Rat> {
        let m = self.m() as usize;
        let pk1 = self.p.pow(self.k - 1) as usize;
        let phi = 2 * (self.p as usize - 1) * pk1;
        let mut v = vec![Rat::zero(); m];
        for (j, r) in &self.c {
            v[*j as usize] += r;
        }
        for e in (phi..m).rev() {
            if v[e].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut v[e], Rat::zero());
            for j in 0..self.p as usize - 1 {
                let idx = e - phi + 2 * j * pk1;
                if j % 2 == 0 {
                    v[idx] -= &c;
                } else {
                    v[idx] += &c;
                }
            }
        }
        v.truncate(phi);
        v
    }

    pub fn is_zero(&self) -> bool {
        if self.c.is_empty() {
            return true;
        }
        let scale: f64 = self.c.values().map(|r| r.to_f64().unwrap().abs()).sum();
        if self.to_complex().norm() > 1e-9 * scale.max(1.0) {
            return false;
        }
        self.canonical().iter().all(|x| x.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rat> {
        let v = self.canonical();
        v[1..].iter().all(|x| x.is_zero()).then(|| v[0].clone())
    }

    /// `(r, h)` with `self = r p^{h/2}`, `h ∈ {0, 1}`, when it has that form.
    pub fn as_rat_halfpow(&self) -> Option<(Rat, i64)> {
        if let Some(r) = self.as_rational() {
            return Some((r, 0));
        }
        let s = Self::sqrt_p(self.p, self.k);
        let r = self.mul(&s).as_rational()?;
        Some((r / int(self.p as i64), 1))
    }

    pub fn to_complex(&self) -> Complex64 {
        let m = self.m() as f64;
        self.c
            .iter()
            .map(|(j, r)| Complex64::from_polar(r.to_f64().unwrap(), 2.0 * std::f64::consts::PI * *j as f64 / m))
            .sum()
    }

    /// Sparse `(exponent, coefficient)` pairs modulo `x^M - 1`.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rat)> {
        self.c.iter().map(|(j, r)| (*j, r))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.k
    }
}

/// `{t}_p`, the p-adic fractional part as `r / p^e` with `0 <= r < p^e`.
pub fn frac_p(t: &Rat, p: u64) -> (BigInt, u32) {
    let den = t.denom();
    let e = crate::padic::vp_int(den, p).unwrap() as u32;
    if e == 0 {
        return (BigInt::zero(), 0);
    }
    let pe = pow_p(p, e);
    let dprime = den / &pe;
    let r = (t.numer() * inv_mod(&dprime, &pe)).mod_floor(&pe);
    (r, e)
}

/// `psi(t) = exp(-2 pi i {t}_p)`.
pub fn psi(t: &Rat, p: u64, k: u32) -> Result<Cyclo, WeilError> {
    let (r, e) = frac_p(t, p);
    if e == 0 {
        return Ok(Cyclo::one(p, k));
    }
    if e > k {
        return Err(WeilError::PhaseOutsideRing(k));
    }
    let m = Cyclo::order(p, k) as i64;
    let step = m / p.pow(e) as i64;
    let j = (r % BigInt::from(p.pow(e))).to_i64().unwrap();
    Ok(Cyclo::zeta(-j * step, p, k))
}

/// Symbolic fourth root of unity `i^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FourthRoot(pub u8);

impl FourthRoot {
    pub const ONE: FourthRoot = FourthRoot(0);

    pub fn from_sign(s: i8) -> Self {
        if s >= 0 {
            FourthRoot(0)
        } else {
            FourthRoot(2)
        }
    }

    pub fn mul(self, o: Self) -> Self {
        FourthRoot((self.0 + o.0) % 4)
    }

    pub fn to_cyclo(self, p: u64, k: u32) -> Cyclo {
        Cyclo::i_pow(self.0 as i64, p, k)
    }

    /// Recognizes a fourth root of unity.
    pub fn from_cyclo(c: &Cyclo) -> Option<Self> {
        (0..4u8).map(FourthRoot).find(|r| &r.to_cyclo(c.p, c.k) == c)
    }
}

impl fmt::Display for FourthRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["1", "i", "-1", "-i"][self.0 as usize])
    }
}

/// Even-dimensional quadratic space `(Q_p^N, q)` with `<x, y> = x^T S y`
/// and `q(x) = <x, x> / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSpace {
    pub s: Mat,
}

impl QuadSpace {
    pub fn new(s: Mat) -> Result<Self, WeilError> {
        if s.rows % 2 == 1 {
            return Err(WeilError::OddDimension);
        }
        if s.det().is_zero() || !s.is_rational() || s.transpose() != s {
            return Err(WeilError::DegenerateForm);
        }
        Ok(Self { s })
    }

    /// `V = F^m` viewed over `F_0` with `q(x) = <x, x>`; coordinates are
    /// `(a_1..a_m, b_1..b_m)` for `x = a + b sqrt(d)`.
    pub fn from_hermitian(h: &HermSpace) -> Self {
        let m = h.dim();
        let d = h.gram.d;
        let basis: Vec<Vector> = (0..2 * m).map(|k| realify_basis_vector(m, k, d)).collect();
        let mut s = Mat::zeros(2 * m, 2 * m, d);
        for i in 0..2 * m {
            for j in 0..2 * m {
                s[(i, j)] = QuadExtElem::from_rat(h.pair(&basis[i], &basis[j]).trace(), d);
            }
        }
        Self { s }
    }

    /// `F_0^n × (F_0^n)^*` with `q(u_1, u_2) = u_2(u_1)`.
    pub fn hyperbolic(n: usize, d: i64) -> Self {
        let mut s = Mat::zeros(2 * n, 2 * n, d);
        for i in 0..n {
            s[(i, n + i)] = QuadExtElem::one(d);
            s[(n + i, i)] = QuadExtElem::one(d);
        }
        Self { s }
    }

    pub fn dim(&self) -> usize {
        self.s.rows
    }

    pub fn d(&self) -> i64 {
        self.s.d
    }

    pub fn pair(&self, x: &[QuadExtElem], y: &[QuadExtElem]) -> Rat {
        self.s.mul_vec(y).iter().zip(x).fold(Rat::zero(), |a, (u, v)| a + (u * v).a)
    }

    pub fn q(&self, x: &[QuadExtElem]) -> Rat {
        self.pair(x, x) / int(2)
    }

    /// Determinant of the moment matrix `S / 2`.
    pub fn det(&self) -> Rat {
        self.s.scale_rat(&Rat::new(BigInt::one(), BigInt::from(2))).det().a
    }

    /// `chi_V(a) = (a, (-1)^{N/2} det V)_p`.
    pub fn chi(&self, a: &Rat, p: u64) -> i8 {
        let n2 = (self.dim() / 2) as i64;
        let sign = if n2 % 2 == 0 { int(1) } else { int(-1) };
        hilbert_symbol(a, &(sign * self.det()), p)
    }
}

fn realify_basis_vector(m: usize, k: usize, d: i64) -> Vector {
    let mut v = vec![QuadExtElem::zero(d); m];
    v[k % m] = if k < m { QuadExtElem::one(d) } else { QuadExtElem::sqrt_d(d) };
    v
}

/// Coordinates of `x ∈ F^m` in `F_0^{2m}`.
pub fn realify(x: &[QuadExtElem]) -> Vector {
    let d = x.first().map_or(-1, |v| v.d);
    let mut out: Vector = x.iter().map(|v| QuadExtElem::from_rat(v.a.clone(), d)).collect();
    out.extend(x.iter().map(|v| QuadExtElem::from_rat(v.b.clone(), d)));
    out
}

/// An `O_F`-lattice of `F^m` as an `O_{F_0}`-lattice of `F_0^{2m}`.
pub fn realify_lattice(l: &Lattice) -> Result<Lattice, LatticeError> {
    let d = l.d();
    let sq = QuadExtElem::sqrt_d(d);
    let mut cols = Vec::new();
    for j in 0..l.dim() {
        let c = l.basis().col(j);
        cols.push(realify(&c));
        cols.push(realify(&c.iter().map(|x| x * &sq).collect::<Vector>()));
    }
    Lattice::new(Ring::OF0, Mat::from_cols(&cols, d), l.p)
}

/// Context for the Weil representation on a fixed quadratic space.
#[derive(Debug, Clone)]
pub struct WeilCtx {
    pub p: u64,
    pub space: QuadSpace,
    /// Cyclotomic level `K`: phases of order up to `p^K` are representable.
    pub phase_level: u32,
    /// Level `c` of `psi`: trivial exactly on `p^c Z_p`.
    pub psi_level: i64,
    pub gamma: FourthRoot,
}

impl WeilCtx {
    /// Weil context of the quadratic space underlying a hermitian space.
    pub fn from_hermitian(h: &HermSpace, ctx: &LocalFieldCtx, phase_level: u32) -> Self {
        let space = QuadSpace::from_hermitian(h);
        let gamma = weil_constant(h, ctx);
        Self { p: ctx.p, space, phase_level, psi_level: ctx.psi_level, gamma }
    }

    /// Weil context of an arbitrary space; the constant is computed from a
    /// Gauss sum.
    pub fn from_quadratic(space: QuadSpace, ctx: &LocalFieldCtx, phase_level: u32) -> Result<Self, WeilError> {
        let mut out = Self { p: ctx.p, space, phase_level, psi_level: ctx.psi_level, gamma: FourthRoot::ONE };
        out.gamma = gauss_weil_index(&out)?;
        Ok(out)
    }

    fn eff_scale(&self) -> Rat {
        pow_p_rat(self.p, -self.psi_level)
    }

    /// `<x, y>` scaled so that `psi` has level 0.
    pub fn pair(&self, x: &[QuadExtElem], y: &[QuadExtElem]) -> Rat {
        self.space.pair(x, y) * self.eff_scale()
    }

    pub fn q(&self, x: &[QuadExtElem]) -> Rat {
        self.space.q(x) * self.eff_scale()
    }

    pub fn psi(&self, t: &Rat) -> Result<Cyclo, WeilError> {
        psi(t, self.p, self.phase_level)
    }

    pub fn chi(&self, a: &Rat) -> i8 {
        self.space.chi(a, self.p)
    }

    fn eff_gram(&self) -> Mat {
        self.space.s.scale_rat(&self.eff_scale())
    }

    /// `psi`-dual lattice.
    pub fn dual(&self, l: &Lattice) -> Result<Lattice, WeilError> {
        Ok(l.dual_bilinear(&self.eff_gram())?)
    }

    /// Self-dual volume: `vol(L) = [L^*:L]^{-1/2}`.
    pub fn vol(&self, l: &Lattice) -> Result<Cyclo, WeilError> {
        let b = l.basis();
        let g = b.transpose().mul(&self.eff_gram()).mul(b);
        let v = g.det().valuation(self.p).ok_or(WeilError::DegenerateForm)?;
        Ok(Cyclo::p_half_pow(-v, self.p, self.phase_level))
    }

    pub fn zero(&self) -> Cyclo {
        Cyclo::zero(self.p, self.phase_level)
    }

    pub fn scalar(&self, r: Rat) -> Cyclo {
        Cyclo::from_rat(r, self.p, self.phase_level)
    }
}

/// `coef * psi(<x, alpha>) * 1_{mu + lattice}(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coef: Cyclo,
    pub alpha: Vector,
    pub mu: Vector,
    pub lattice: Lattice,
}

/// Finite sum of character-twisted lattice-coset indicators.
#[derive(Debug, Clone, Default)]
pub struct Schwartz {
    pub terms: Vec<Term>,
}

impl Schwartz {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn coset(coef: Cyclo, mu: Vector, lattice: Lattice) -> Self {
        let alpha = vec![QuadExtElem::zero(lattice.d()); lattice.dim()];
        Self { terms: vec![Term { coef, alpha, mu, lattice }] }
    }

    pub fn indicator(lattice: Lattice, ctx: &WeilCtx) -> Self {
        let mu = vec![QuadExtElem::zero(lattice.d()); lattice.dim()];
        Self::coset(ctx.scalar(Rat::one()), mu, lattice)
    }

    pub fn add(&self, o: &Schwartz) -> Schwartz {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Schwartz { terms }.merged()
    }

    pub fn scale(&self, c: &Cyclo) -> Schwartz {
        let terms = self.terms.iter().map(|t| Term { coef: t.coef.mul(c), ..t.clone() }).collect();
        Schwartz { terms }.merged()
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> Schwartz {
        let neg = |v: &Vector| v.iter().map(|x| -x).collect::<Vector>();
        let terms = self
            .terms
            .iter()
            .map(|t| Term { coef: t.coef.clone(), alpha: neg(&t.alpha), mu: neg(&t.mu), lattice: t.lattice.clone() })
            .collect();
        Schwartz { terms }.merged()
    }

    /// Merges terms with identical data and drops zero coefficients.
    pub fn merged(self) -> Schwartz {
        let mut idx: HashMap<(Vector, Vector, Lattice), usize> = HashMap::new();
        let mut out: Vec<Term> = Vec::new();
        for t in self.terms {
            let key = (t.alpha.clone(), t.mu.clone(), t.lattice.clone());
            match idx.get(&key) {
                Some(&i) => out[i].coef = out[i].coef.add(&t.coef),
                None => {
                    idx.insert(key, out.len());
                    out.push(t);
                }
            }
        }
        out.retain(|t| !t.coef.is_zero());
        Schwartz { terms: out }
    }

    pub fn eval(&self, x: &[QuadExtElem], ctx: &WeilCtx) -> Result<Cyclo, WeilError> {
        let mut acc = ctx.zero();
        for t in &self.terms {
            let diff: Vector = x.iter().zip(&t.mu).map(|(a, b)| a - b).collect();
            if t.lattice.contains_vec(&diff) {
                acc = acc.add(&t.coef.mul(&ctx.psi(&ctx.pair(x, &t.alpha))?));
            }
        }
        Ok(acc)
    }

    /// Lattice containing every support coset.
    pub fn support_lattice(&self) -> Result<Option<Lattice>, WeilError> {
        let Some(first) = self.terms.first() else { return Ok(None) };
        let d = first.lattice.d();
        let mut cols: Vec<Vector> = Vec::new();
        for t in &self.terms {
            cols.extend((0..t.lattice.dim()).map(|j| t.lattice.basis().col(j)));
            cols.push(t.mu.clone());
        }
        Ok(Some(Lattice::new(Ring::OF0, Mat::from_cols(&cols, d), first.lattice.p)?))
    }

    /// Lattice on whose cosets every term is constant.
    pub fn constancy_lattice(&self, ctx: &WeilCtx) -> Result<Option<Lattice>, WeilError> {
        let mut acc: Option<Lattice> = None;
        let mut seen: HashMap<Lattice, ()> = HashMap::new();
        for t in &self.terms {
            let dual = ctx.dual(&t.lattice)?;
            let mut k = 0;
            while !dual.contains_vec(&t.alpha.iter().map(|x| x.scale(&pow_p_rat(ctx.p, k))).collect::<Vector>()) {
                k += 1;
            }
            let l = t.lattice.scale_pk(k);
            if seen.insert(l.clone(), ()).is_some() {
                continue;
            }
            acc = Some(match acc {
                None => l,
                Some(a) => a.intersect(&l)?,
            });
        }
        Ok(acc)
    }
}

/// Representatives of `big / small` for lattices `small ⊆ big`.
pub fn coset_reps(small: &Lattice, big: &Lattice) -> Result<Vec<Vector>, WeilError> {
    let (c, e) = relative_smith(small, big)?;
    let n = c.rows;
    let d = c.d;
    let p = small.p;
    let mut out: Vec<Vector> = vec![vec![QuadExtElem::zero(d); n]];
    for (j, &ej) in e.iter().enumerate() {
        let col = c.col(j);
        let count = p.pow(ej as u32);
        let mut next = Vec::with_capacity(out.len() * count as usize);
        for v in &out {
            for a in 0..count {
                let s = QuadExtElem::from_int(a as i64, d);
                next.push(v.iter().zip(&col).map(|(x, y)| x + &(y * &s)).collect());
            }
        }
        out = next;
    }
    Ok(out)
}

/// Pointwise equality, checked on representatives of the joint support
/// modulo the joint constancy lattice.
pub fn agree(f: &Schwartz, g: &Schwartz, ctx: &WeilCtx) -> Result<bool, WeilError> {
    let mut neg = g.clone();
    for t in &mut neg.terms {
        t.coef = t.coef.neg();
    }
    let h = Schwartz { terms: f.terms.iter().cloned().chain(neg.terms).collect() }.merged();
    let (Some(sup), Some(con)) = (h.support_lattice()?, h.constancy_lattice(ctx)?) else {
        return Ok(true);
    };
    let fine = con.intersect(&sup)?;
    for x in coset_reps(&fine, &sup)? {
        if !h.eval(&x, ctx)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `hat f(x) = int f(y) psi(<x, y>) dy` for the self-dual measure.
pub fn fourier(f: &Schwartz, ctx: &WeilCtx) -> Result<Schwartz, WeilError> {
    let mut terms = Vec::with_capacity(f.terms.len());
    for t in &f.terms {
        let phase = ctx.psi(&ctx.pair(&t.mu, &t.alpha))?;
        let coef = t.coef.mul(&ctx.vol(&t.lattice)?).mul(&phase);
        let lattice = ctx.dual(&t.lattice)?;
        let mu = t.alpha.iter().map(|x| -x).collect();
        terms.push(Term { coef, alpha: t.mu.clone(), mu, lattice });
    }
    Ok(Schwartz { terms }.merged())
}

/// Generators of `SL_2`: `n(b) = [[1,b],[0,1]]`, `m(a) = diag(a, 1/a)`,
/// `w = [[0,1],[-1,0]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeilGen {
    N(Rat),
    M(Rat),
    W,
}

impl WeilGen {
    /// The generator as a 2×2 rational matrix (row-major).
    pub fn matrix(&self) -> [[Rat; 2]; 2] {
        let (z, o) = (Rat::zero(), Rat::one());
        match self {
            WeilGen::N(b) => [[o.clone(), b.clone()], [z.clone(), o]],
            WeilGen::M(a) => [[a.clone(), z.clone()], [z, a.recip()]],
            WeilGen::W => [[z.clone(), o.clone()], [-o, z]],
        }
    }
}

fn act_m(f: &Schwartz, a: &Rat, ctx: &WeilCtx) -> Result<Schwartz, WeilError> {
    if a.is_zero() {
        return Err(WeilError::ZeroScalar);
    }
    let v = vp(a, ctx.p).unwrap();
    let n = ctx.space.dim() as i64;
    let c = ctx.scalar(int(ctx.chi(a) as i64)).mul(&Cyclo::p_half_pow(-v * n, ctx.p, ctx.phase_level));
    let d = ctx.space.d();
    let ainv = QuadExtElem::from_rat(a.recip(), d);
    let aq = QuadExtElem::from_rat(a.clone(), d);
    let terms = f
        .terms
        .iter()
        .map(|t| Term {
            coef: t.coef.mul(&c),
            alpha: t.alpha.iter().map(|x| x * &aq).collect(),
            mu: t.mu.iter().map(|x| x * &ainv).collect(),
            lattice: t.lattice.scale_pk(-v),
        })
        .collect();
    Ok(Schwartz { terms }.merged())
}

fn act_n(f: &Schwartz, b: &Rat, ctx: &WeilCtx) -> Result<Schwartz, WeilError> {
    let p = ctx.p;
    let d = ctx.space.d();
    let bq = QuadExtElem::from_rat(b.clone(), d);
    let mut terms = Vec::new();
    for t in &f.terms {
        let basis = t.lattice.basis();
        let n = basis.cols;
        let cols: Vec<Vector> = (0..n).map(|j| basis.col(j)).collect();
        let mut minv = 0i64;
        for i in 0..n {
            for j in i..n {
                let x = if i == j { ctx.q(&cols[i]) } else { ctx.pair(&cols[i], &cols[j]) } * b;
                if let Some(v) = vp(&x, p) {
                    minv = minv.min(v);
                }
            }
        }
        let k = (-minv + 1).div_euclid(2);
        let fine = t.lattice.scale_pk(k);
        for r in coset_reps(&fine, &t.lattice)? {
            let mu: Vector = t.mu.iter().zip(&r).map(|(a, c)| a + c).collect();
            let phase = ctx.psi(&(-(b * ctx.q(&mu))))?;
            let alpha = t.alpha.iter().zip(&mu).map(|(a, m)| a + &(m * &bq)).collect();
            terms.push(Term { coef: t.coef.mul(&phase), alpha, mu, lattice: fine.clone() });
        }
    }
    Ok(Schwartz { terms }.merged())
}

/// Applies `omega(g_1 g_2 ... g_k)`, i.e. the word right to left.
pub fn weil_act(word: &[WeilGen], f: &Schwartz, ctx: &WeilCtx) -> Result<Schwartz, WeilError> {
    let mut cur = f.clone();
    for g in word.iter().rev() {
        cur = match g {
            WeilGen::N(b) => act_n(&cur, b, ctx)?,
            WeilGen::M(a) => act_m(&cur, a, ctx)?,
            WeilGen::W => fourier(&cur, ctx)?.scale(&ctx.gamma.to_cyclo(ctx.p, ctx.phase_level)),
        };
    }
    Ok(cur)
}

/// `gamma_V = eta(det V) eps(eta, 1/2, psi)^m`, `eps = eta(p^c)` for `psi`
/// of level `c`.
pub fn weil_constant(h: &HermSpace, ctx: &LocalFieldCtx) -> FourthRoot {
    let det = h.gram.det().a;
    let eps = eta_rat(&pow_p_rat(ctx.p, ctx.psi_level), ctx.p);
    let m = h.dim() as i32;
    FourthRoot::from_sign(eta_rat(&det, ctx.p) * eps.pow(m as u32))
}

/// Weil index from `|L^*/L|^{-1/2} sum_{x ∈ L^*/L} psi(q(x))` on an even
/// lattice built from an orthogonal basis.
pub fn gauss_weil_index(ctx: &WeilCtx) -> Result<FourthRoot, WeilError> {
    let l = even_lattice(ctx)?;
    let ld = ctx.dual(&l)?;
    let reps = coset_reps(&l, &ld)?;
    let mut sum = ctx.zero();
    for x in &reps {
        sum = sum.add(&ctx.psi(&ctx.q(x))?);
    }
    let n = reps.len() as u64;
    let e = crate::padic::vp_int(&BigInt::from(n), ctx.p).unwrap();
    let val = sum.mul(&Cyclo::p_half_pow(-e, ctx.p, ctx.phase_level));
    FourthRoot::from_cyclo(&val).ok_or(WeilError::DegenerateForm)
}

/// `L = span(p^{k_i} f_i)` for an orthogonal basis `f_i` with
/// `v(q(p^{k_i} f_i)) ∈ {0, 1}`.
fn even_lattice(ctx: &WeilCtx) -> Result<Lattice, WeilError> {
    let n = ctx.space.dim();
    let d = ctx.space.d();
    let p = ctx.p;
    let mut cands: Vec<Vector> = (0..n).map(|i| crate::linalg::unit_vector(n, i, d)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let v: Vector = crate::linalg::unit_vector(n, i, d)
                .iter()
                .zip(&crate::linalg::unit_vector(n, j, d))
                .map(|(a, b)| a + b)
                .collect();
            cands.push(v);
        }
    }
    let mut basis: Vec<Vector> = Vec::new();
    while basis.len() < n {
        let proj = |v: &Vector, basis: &[Vector]| -> Vector {
            let mut w = v.clone();
            for b in basis {
                let c = ctx.pair(&w, b) / ctx.pair(b, b);
                let cq = QuadExtElem::from_rat(c, d);
                w = w.iter().zip(b).map(|(x, y)| x - &(y * &cq)).collect();
            }
            w
        };
        let next = cands
            .iter()
            .map(|v| proj(v, &basis))
            .find(|w| !ctx.q(w).is_zero())
            .ok_or(WeilError::DegenerateForm)?;
        basis.push(next);
    }
    let cols: Vec<Vector> = basis
        .iter()
        .map(|f| {
            let v = vp(&ctx.q(f), p).unwrap();
            let k = -v.div_euclid(2);
            let s = QuadExtElem::from_rat(pow_p_rat(p, k), d);
            f.iter().map(|x| x * &s).collect()
        })
        .collect();
    Ok(Lattice::new(Ring::OF0, Mat::from_cols(&cols, d), p)?)
}

/// Test functions `sum_k c_k 1_{p^k L_0}` over a fixed reference lattice.
fn lattice_type_coeffs(f: &Schwartz, l0: &Lattice) -> Result<BTreeMap<i64, Rat>, WeilError> {
    let mut out: BTreeMap<i64, Rat> = BTreeMap::new();
    for t in &f.terms {
        if t.alpha.iter().any(|x| !x.is_zero()) || !t.lattice.contains_vec(&t.mu) {
            return Err(WeilError::NotLatticeType("phase or shifted coset".into()));
        }
        let k = (t.lattice.det_valuation() - l0.det_valuation()) / l0.dim() as i64;
        if l0.scale_pk(k) != t.lattice {
            return Err(WeilError::NotLatticeType("lattice is not p^k L_0".into()));
        }
        let c = t.coef.as_rational().ok_or_else(|| WeilError::NotLatticeType("irrational coefficient".into()))?;
        *out.entry(k).or_insert_with(Rat::zero) += c;
    }
    Ok(out)
}

/// Result of an `m(a)` transformation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformCheck {
    pub lhs: LaurentX,
    pub rhs: LaurentX,
    pub chi_matches_eta: bool,
    pub transfer_factor_law: bool,
}

impl TransformCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs && self.chi_matches_eta && self.transfer_factor_law
    }
}

/// `Orb((g,u), omega(m(a)) Phi) = chi_V(a) |a|^m Orb((g, a u), Phi)` for
/// `Phi = 1_{K_0} ⊗ 1_{L_0}` with `L_0` self-dual.
pub fn orbit_transform_check_unitary(
    x: &UnitaryPair,
    l0: &Lattice,
    a: &Rat,
    ctx: &LocalFieldCtx,
) -> Result<TransformCheck, WeilError> {
    let wctx = WeilCtx::from_hermitian(&x.space, ctx, 1);
    let l0r = realify_lattice(l0)?;
    let phi = weil_act(&[WeilGen::M(a.clone())], &Schwartz::indicator(l0r.clone(), &wctx), &wctx)?;
    let d = x.d();
    let mut lhs = LaurentX::zero();
    for (k, c) in lattice_type_coeffs(&phi, &l0r)? {
        let s = QuadExtElem::from_rat(pow_p_rat(ctx.p, -k), d);
        let y = UnitaryPair::new(x.space.clone(), x.g.clone(), x.u.iter().map(|v| v * &s).collect())
            .map_err(OrbitalError::from)?;
        lhs.add_term(0, c * int(orb_u(&y, ctx)? as i64));
    }
    let v = vp(a, ctx.p).unwrap();
    let m = x.m() as i64;
    let aq = QuadExtElem::from_rat(a.clone(), d);
    let ya = UnitaryPair::new(x.space.clone(), x.g.clone(), x.u.iter().map(|u| u * &aq).collect())
        .map_err(OrbitalError::from)?;
    let scale = int(wctx.chi(a) as i64) * pow_p_rat(ctx.p, -v * m);
    let rhs = LaurentX::monomial(0, scale * int(orb_u(&ya, ctx)? as i64));
    let chi_matches_eta = wctx.chi(a) == eta_rat(a, ctx.p).pow(m as u32);
    Ok(TransformCheck { lhs, rhs, chi_matches_eta, transfer_factor_law: true })
}

/// `Orb((gamma,u'), omega(m(a)) Phi', s) = chi(a) |a|^m Orb((gamma, a u'), Phi', s)`
/// for `Phi' = 1_{S(O)} ⊗ 1_{O^m × (O^m)^*}`, together with
/// `omega(gamma, a u') = eta(a)^m omega(gamma, u')`.
pub fn orbit_transform_check_semilie(
    x: &SemiLiePair,
    a: &Rat,
    ctx: &LocalFieldCtx,
) -> Result<TransformCheck, WeilError> {
    let m = x.m();
    let d = x.d();
    let wctx = WeilCtx::from_quadratic(QuadSpace::hyperbolic(m, d), ctx, 1)?;
    let l0 = Lattice::standard(Ring::OF0, 2 * m, ctx.p, d);
    let phi = weil_act(&[WeilGen::M(a.clone())], &Schwartz::indicator(l0.clone(), &wctx), &wctx)?;
    let mut lhs = LaurentX::zero();
    let scaled = |s: &Rat| -> Result<SemiLiePair, WeilError> {
        let sq = QuadExtElem::from_rat(s.clone(), d);
        let u1 = x.u1.iter().map(|v| v * &sq).collect();
        let u2 = x.u2.iter().map(|v| v * &sq).collect();
        SemiLiePair::new(x.gamma.clone(), u1, u2).map_err(|e| OrbitalError::from(e).into())
    };
    for (k, c) in lattice_type_coeffs(&phi, &l0)? {
        lhs = lhs.add(&orb_gl(&scaled(&pow_p_rat(ctx.p, -k))?, ctx)?.scale(&c));
    }
    let v = vp(a, ctx.p).unwrap();
    let xa = scaled(a)?;
    let scale = int(wctx.chi(a) as i64) * pow_p_rat(ctx.p, -v * m as i64);
    let rhs = orb_gl(&xa, ctx)?.scale(&scale);
    let w0 = transfer_factor(x, ctx).map_err(OrbitalError::from)?;
    let w1 = transfer_factor(&xa, ctx).map_err(OrbitalError::from)?;
    let transfer_factor_law = w1 == w0 * eta_rat(a, ctx.p).pow(m as u32);
    Ok(TransformCheck { lhs, rhs, chi_matches_eta: wctx.chi(a) == 1, transfer_factor_law })
}
