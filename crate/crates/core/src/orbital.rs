//! Exact orbital integrals on both sides as Laurent polynomials in
//! `X = q^{-s}`, their special values, and the fundamental-lemma harness.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::{lattices_between_filtered, HermSpace, Lattice, LatticeError, Ring};
use crate::linalg::{Mat, Poly};
use crate::orbit::{
    decide_side, matches, reduce_symmetric, reduce_unitary, synthesize_semilie, synthesize_unitary,
    transfer_factor, InvariantVector, OrbitError, SemiLiePair, Side, UnitaryPair, Variant,
};
use crate::padic::{int, LocalFieldCtx, QuadExtElem, Rat, ResidueElem, ResidueField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitalError {
    #[error("element is not regular semisimple")]
    NotRegular,
    #[error("hermitian space is not split")]
    NonSplitSpace,
    #[error("characteristic polynomial is not integral")]
    NotIntegral,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Finite Laurent polynomial in `X = q^{-s}` with rational coefficients.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct LaurentX {
    pub coeffs: BTreeMap<i64, Rat>,
}

impl fmt::Debug for LaurentX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LaurentX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, c)| format!("({})X^{}", crate::padic::fmt_rat(c), k))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl LaurentX {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, Rat::one())
    }

    pub fn monomial(k: i64, c: Rat) -> Self {
        let mut out = Self::zero();
        out.add_term(k, c);
        out
    }

    pub fn from_terms(terms: &[(i64, i64)]) -> Self {
        let mut out = Self::zero();
        for &(k, c) in terms {
            out.add_term(k, int(c));
        }
        out
    }

    pub fn add_term(&mut self, k: i64, c: Rat) {
        let e = self.coeffs.entry(k).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i64) -> Rat {
        self.coeffs.get(&k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, o: &LaurentX) -> LaurentX {
        let mut out = self.clone();
        for (k, c) in &o.coeffs {
            out.add_term(*k, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &LaurentX) -> LaurentX {
        self.add(&o.scale(&-Rat::one()))
    }

    pub fn scale(&self, s: &Rat) -> LaurentX {
        let mut out = Self::zero();
        for (k, c) in &self.coeffs {
            out.add_term(*k, c * s);
        }
        out
    }

    pub fn mul(&self, o: &LaurentX) -> LaurentX {
        let mut out = Self::zero();
        for (i, a) in &self.coeffs {
            for (j, b) in &o.coeffs {
                out.add_term(i + j, a * b);
            }
        }
        out
    }

    /// Multiplication by `X^k`.
    pub fn shift(&self, k: i64) -> LaurentX {
        LaurentX { coeffs: self.coeffs.iter().map(|(i, c)| (i + k, c.clone())).collect() }
    }

    /// `P(X^{-1})`.
    pub fn invert_variable(&self) -> LaurentX {
        LaurentX { coeffs: self.coeffs.iter().map(|(i, c)| (-i, c.clone())).collect() }
    }

    /// Value at `X = q^{-s}` for real `s`.
    pub fn eval_f64(&self, q: f64, s: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs.iter().map(|(k, c)| c.to_f64().unwrap() * q.powf(-s * *k as f64)).sum()
    }

    /// Sum of the coefficients (value at `s = 0`).
    pub fn at_one(&self) -> Rat {
        self.coeffs.values().fold(Rat::zero(), |a, c| a + c)
    }
}

/// `omega * P(1)` and the coefficient of `log q` in `omega * dP/ds (0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialValues {
    pub value0: Rat,
    pub dvalue0: Rat,
}

pub fn special_values(p: &LaurentX, omega: i8) -> SpecialValues {
    let w = int(omega as i64);
    let value0 = &w * p.at_one();
    let deriv = p.coeffs.iter().fold(Rat::zero(), |a, (k, c)| a - int(*k) * c);
    SpecialValues { value0, dvalue0: &w * deriv }
}

/// Orbital integral of `1_{(S × V')(O)}` at `(gamma, u1, u2)`:
/// the sum of `(-X)^{d(L)}` over lattices `M1 ⊆ L ⊆ M2` with
/// `gamma (O_F ⊗ L) = O_F ⊗ L`.
pub fn orb_gl(x: &SemiLiePair, ctx: &LocalFieldCtx) -> Result<LaurentX, OrbitalError> {
    Ok(orb_gl_detailed(x, ctx)?.value)
}

/// Orbital integral together with the enumeration size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbGlReport {
    pub value: LaurentX,
    pub lattices_counted: usize,
    pub quotient_exponent: i64,
}

pub fn orb_gl_detailed(x: &SemiLiePair, ctx: &LocalFieldCtx) -> Result<OrbGlReport, OrbitalError> {
    if !x.is_regular_semisimple() {
        return Err(OrbitalError::NotRegular);
    }
    let p = ctx.p;
    let empty = OrbGlReport { value: LaurentX::zero(), lattices_counted: 0, quotient_exponent: 0 };
    if !x.gamma.charpoly().is_integral(p) {
        return Ok(empty);
    }
    let m = x.m();
    let k = x.gamma.krylov(&x.u1, m);
    let m1 = Lattice::new(Ring::OF, k, p)?.intersect_base()?;
    let r = x.gamma.krylov_rows(&x.u2, m);
    let rinv = r.inverse().ok_or(OrbitalError::NotRegular)?;
    let m2 = Lattice::new(Ring::OF, rinv, p)?.intersect_base()?;
    if !m2.contains(&m1) {
        return Ok(empty);
    }
    let quotient_exponent = m1.index(&m2);
    let gamma = x.gamma.clone();
    let lats = lattices_between_filtered(&m1, &m2, None, |l| l.is_stable_under(&gamma))?;
    let mut value = LaurentX::zero();
    for l in &lats {
        debug_assert!(l.contains(&m1) && m2.contains(l));
        let dl = l.det_valuation();
        let sign = if dl.rem_euclid(2) == 0 { 1 } else { -1 };
        value.add_term(dl, int(sign));
    }
    Ok(OrbGlReport { value, lattices_counted: lats.len(), quotient_exponent })
}

/// Number of self-dual lattices `L` with `g L = L` and `u ∈ L`.
pub fn orb_u(x: &UnitaryPair, ctx: &LocalFieldCtx) -> Result<u64, OrbitalError> {
    if !x.is_regular_semisimple() {
        return Err(OrbitalError::NotRegular);
    }
    let p = ctx.p;
    let detg = x.space.gram.det();
    if detg.valuation(p).unwrap().rem_euclid(2) != 0 {
        return Err(OrbitalError::NonSplitSpace);
    }
    if !x.g.charpoly().is_integral(p) {
        return Ok(0);
    }
    let m = x.m();
    let n1 = Lattice::new(Ring::OF, x.g.krylov(&x.u, m), p)?;
    let n1d = n1.dual(&x.space)?;
    if !n1d.contains(&n1) {
        return Ok(0);
    }
    let tot = n1.det_valuation() + n1d.det_valuation();
    if tot.rem_euclid(2) != 0 {
        return Ok(0);
    }
    let g = x.g.clone();
    let space = x.space.clone();
    let lats = lattices_between_filtered(&n1, &n1d, Some(tot / 2), |l| {
        l.is_stable_under(&g) && l.is_self_dual(&space)
    })?;
    Ok(lats.len() as u64)
}

/// Outcome of a fundamental-lemma comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlReport {
    pub side: Side,
    pub omega: i8,
    pub orb_gl: LaurentX,
    pub orb_gl_special: SpecialValues,
    pub orb_u: Option<u64>,
    pub verdict: bool,
}

/// Synthesizes both sides from the invariants and compares
/// `omega * Orb(gamma, 0)` with the unitary count (split side) or with 0.
pub fn fl_verify(iv: &InvariantVector, ctx: &LocalFieldCtx) -> Result<FlReport, OrbitalError> {
    if !iv.charpoly.is_integral(ctx.p) {
        return Err(OrbitalError::PreconditionFailed("charpoly is not integral".into()));
    }
    if !iv.charpoly.is_squarefree() {
        return Err(OrbitalError::PreconditionFailed("charpoly is not squarefree".into()));
    }
    let side = decide_side(iv, ctx)?;
    let s = synthesize_semilie(iv)?;
    if !s.is_regular_semisimple() {
        return Err(OrbitalError::NotRegular);
    }
    let omega = transfer_factor(&s, ctx)?;
    let poly = orb_gl(&s, ctx)?;
    let sv = special_values(&poly, omega);
    let (orb_u_val, verdict) = match side {
        Side::Split => {
            let u = synthesize_unitary(iv)?;
            let n = orb_u(&u, ctx)?;
            (Some(n), sv.value0 == int(n as i64))
        }
        Side::Nonsplit => (None, sv.value0.is_zero()),
    };
    Ok(FlReport { side, omega, orb_gl: poly, orb_gl_special: sv, orb_u: orb_u_val, verdict })
}

/// Invariant vectors of the fundamental-lemma sweep at `ctx`.
///
/// For `m = 1`: `gamma` runs over the first three norm-one elements with
/// integral characteristic polynomial and the moment over `p^v u` for
/// `0 <= v <= max_valuation` and three units `u`. For `m = 2`: strongly
/// regular semisimple invariants with integral characteristic polynomial
/// drawn from `seed`, `5 (max_valuation + 1)` of them.
pub fn sweep_grid(ctx: &LocalFieldCtx, m: usize, max_valuation: u32, seed: u64) -> Vec<InvariantVector> {
    let d = ctx.d;
    let p = ctx.p;
    let mut out = Vec::new();
    if m == 1 {
        let deltas: Vec<QuadExtElem> = crate::orbit::norm_one_candidates(d, 6)
            .into_iter()
            .filter(|z| z.is_integral(p))
            .take(3)
            .collect();
        let units: Vec<i64> = (1..).filter(|u| u % p as i64 != 0).take(2).chain([-1]).collect();
        for delta in &deltas {
            let cp = Poly::new(vec![-delta.clone(), QuadExtElem::one(d)], d);
            for v in 0..=max_valuation {
                for &u in &units {
                    let xi = crate::padic::pow_p_rat(p, v as i64) * int(u);
                    out.push(InvariantVector::new(cp.clone(), vec![QuadExtElem::from_rat(xi, d)]));
                }
            }
        }
    } else {
        let want = 5 * (max_valuation as usize + 1);
        let mut s = seed;
        while out.len() < want && s < seed + 50 * want as u64 {
            let mut rng = crate::gen::seeded(s);
            s += 1;
            let Ok(x) = crate::gen::semilie_from_companion(&mut rng, m, d, 3) else { continue };
            if x.is_strongly_rs() && x.gamma.charpoly().is_integral(p) {
                out.push(x.invariants());
            }
        }
    }
    out
}

/// Runs [`fl_verify`] over [`sweep_grid`] in parallel; results keep grid order.
pub fn fl_sweep(
    ctx: &LocalFieldCtx,
    m: usize,
    max_valuation: u32,
    seed: u64,
) -> Vec<(InvariantVector, Result<FlReport, OrbitalError>)> {
    use rayon::prelude::*;
    sweep_grid(ctx, m, max_valuation, seed)
        .into_par_iter()
        .map(|iv| {
            let r = fl_verify(&iv, ctx);
            (iv, r)
        })
        .collect()
}

/// `O_F[g]` is the maximal order of `F[g]`, tested on the characteristic
/// polynomial.
pub fn is_maximal_order(g: &Mat, ctx: &LocalFieldCtx) -> Result<bool, OrbitalError> {
    is_maximal_order_poly(&g.charpoly(), ctx)
}

/// Squarefree reduction, else Dedekind's criterion at `p`.
pub fn is_maximal_order_poly(alpha: &Poly, ctx: &LocalFieldCtx) -> Result<bool, OrbitalError> {
    let p = ctx.p;
    if !alpha.is_integral(p) {
        return Err(OrbitalError::NotIntegral);
    }
    let k = ResidueField::new(p, alpha.d);
    let abar = fp2::reduce(alpha, &k);
    let rad = fp2::radical(&abar, &k);
    if rad.len() == abar.len() {
        return Ok(true);
    }
    let (hbar, rem) = fp2::divrem(&abar, &rad, &k);
    debug_assert!(fp2::is_zero(&rem));
    let g = fp2::lift(&rad, &k, alpha.d);
    let h = fp2::lift(&hbar, &k, alpha.d);
    let diff = alpha.sub(&g.mul(&h));
    let f = diff.scale(&QuadExtElem::from_rat(int(p as i64).recip(), alpha.d));
    let fbar = fp2::reduce(&f, &k);
    let t = fp2::gcd(&fp2::gcd(&fbar, &rad, &k), &hbar, &k);
    Ok(t.len() == 1)
}

/// Discriminant `(-1)^{m(m-1)/2} Res(a, a')` of a monic polynomial.
pub fn discriminant(a: &Poly) -> QuadExtElem {
    let m = a.degree().unwrap_or(0);
    let res = resultant(a, &a.derivative());
    if (m * (m.saturating_sub(1)) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

/// Sylvester-matrix resultant.
pub fn resultant(a: &Poly, b: &Poly) -> QuadExtElem {
    let d = a.d;
    let (m, n) = (a.degree().unwrap_or(0), b.degree().unwrap_or(0));
    let size = m + n;
    if size == 0 {
        return QuadExtElem::one(d);
    }
    let mut s = Mat::zeros(size, size, d);
    for i in 0..n {
        for j in 0..=m {
            s[(i, i + j)] = a.coeff(m - j);
        }
    }
    for i in 0..m {
        for j in 0..=n {
            s[(n + i, i + j)] = b.coeff(n - j);
        }
    }
    s.det()
}

/// Reduction check: the `r` and `r^natural` reductions of
/// `gamma'` have the same orbital integral. When a matching `g'` is given,
/// the reduced pairs are also checked to match.
pub fn orb_reduction_check(
    gamma_p: &Mat,
    g_p: Option<(&Mat, &HermSpace)>,
    xi: &QuadExtElem,
    ctx: &LocalFieldCtx,
) -> Result<bool, OrbitalError> {
    let p = ctx.p;
    let d = gamma_p.d;
    let n = gamma_p.rows;
    let twisted = gamma_p.scale(xi);
    let one = QuadExtElem::one(d);
    let corner = &twisted[(n - 1, n - 1)];
    if (&one - corner).valuation(p) != Some(0) {
        return Err(OrbitalError::PreconditionFailed("1 - xi d is not a unit".into()));
    }
    if Mat::identity(n, d).sub(&twisted).det().valuation(p) != Some(0) {
        return Err(OrbitalError::PreconditionFailed("det(1 - xi gamma') is not a unit".into()));
    }
    let r = reduce_symmetric(gamma_p, Variant::R, xi)?.pair()?;
    let rn = reduce_symmetric(gamma_p, Variant::RNatural, xi)?.pair()?;
    if !r.is_regular_semisimple() || !rn.is_regular_semisimple() {
        return Err(OrbitalError::PreconditionFailed("reduced pair is not regular semisimple".into()));
    }
    let equal = orb_gl(&r, ctx)? == orb_gl(&rn, ctx)?;
    let matched = match g_p {
        None => true,
        Some((g, space)) => [Variant::R, Variant::RNatural].iter().all(|&v| {
            let s = reduce_symmetric(gamma_p, v, xi).and_then(|x| x.pair());
            let u = reduce_unitary(g, space, v, xi)
                .and_then(|x| UnitaryPair::new(space.clone(), x.g, x.u));
            matches!((s, u), (Ok(s), Ok(u)) if matches(&s, &u))
        }),
    };
    Ok(equal && matched)
}

/// Polynomials over the residue field `F_{p^2}`, low degree first, trimmed.
mod fp2 {
    use super::*;

    pub type P = Vec<ResidueElem>;

    fn trim(mut a: P, k: &ResidueField) -> P {
        while a.last().is_some_and(|c| k.is_zero(*c)) {
            a.pop();
        }
        a
    }

    pub fn is_zero(a: &P) -> bool {
        a.is_empty()
    }

    pub fn reduce(a: &Poly, k: &ResidueField) -> P {
        trim(a.coeffs().iter().map(|c| k.reduce(c)).collect(), k)
    }

    pub fn lift(a: &P, k: &ResidueField, d: i64) -> Poly {
        Poly::new(a.iter().map(|c| k.lift(*c, d)).collect(), d)
    }

    fn monic(a: &P, k: &ResidueField) -> P {
        match a.last() {
            None => a.clone(),
            Some(l) => {
                let inv = k.inv(*l);
                a.iter().map(|c| k.mul(*c, inv)).collect()
            }
        }
    }

    fn mul(a: &P, b: &P, k: &ResidueField) -> P {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![k.zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = k.add(out[i + j], k.mul(*x, *y));
            }
        }
        trim(out, k)
    }

    pub fn divrem(a: &P, b: &P, k: &ResidueField) -> (P, P) {
        let db = b.len() - 1;
        let linv = k.inv(b[db]);
        let mut r = a.clone();
        let mut q = vec![k.zero(); a.len().saturating_sub(db).max(1)];
        while r.len() > db && !r.is_empty() {
            let s = r.len() - 1 - db;
            let f = k.mul(r[r.len() - 1], linv);
            for (i, c) in b.iter().enumerate() {
                r[s + i] = k.sub(r[s + i], k.mul(f, *c));
            }
            q[s] = f;
            r.pop();
            r = trim(r, k);
        }
        (trim(q, k), r)
    }

    pub fn gcd(a: &P, b: &P, k: &ResidueField) -> P {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_empty() {
            let r = divrem(&x, &y, k).1;
            x = y;
            y = r;
        }
        monic(&x, k)
    }

    fn derivative(a: &P, k: &ResidueField) -> P {
        let out = a
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let n = ResidueElem { a: (i as u64) % k.p, b: 0 };
                k.mul(*c, n)
            })
            .collect();
        trim(out, k)
    }

    /// `f(T) = g(T^p)` with coefficients replaced by their p-th roots.
    fn pth_root(a: &P, k: &ResidueField) -> P {
        let p = k.p as usize;
        let out = a.iter().step_by(p).map(|c| k.pow(*c, k.p)).collect();
        trim(out, k)
    }

    /// Product of the distinct monic irreducible factors.
    pub fn radical(a: &P, k: &ResidueField) -> P {
        let a = monic(a, k);
        if a.len() <= 1 {
            return a;
        }
        let da = derivative(&a, k);
        if da.is_empty() {
            return radical(&pth_root(&a, k), k);
        }
        let g = gcd(&a, &da, k);
        if g.len() == 1 {
            return a;
        }
        let w = monic(&divrem(&a, &g, k).0, k);
        let rest = radical(&g, k);
        let common = gcd(&w, &rest, k);
        monic(&divrem(&mul(&w, &rest, k), &common, k).0, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;

    fn q(a: i64, d: i64) -> QuadExtElem {
        QuadExtElem::from_int(a, d)
    }

    fn pair(u1: i64, u2: i64) -> SemiLiePair {
        SemiLiePair::new(Mat::identity(1, -1), vec![q(u1, -1)], vec![q(u2, -1)]).unwrap()
    }

    #[test]
    fn rank_one_orbital_integrals() {
        let ctx = LocalFieldCtx::new(3, -1).unwrap();
        assert_eq!(orb_gl(&pair(1, 1), &ctx).unwrap(), LaurentX::one());
        assert_eq!(orb_gl(&pair(3, 1), &ctx).unwrap(), LaurentX::from_terms(&[(0, 1), (1, -1)]));
        assert_eq!(
            orb_gl(&pair(3, 3), &ctx).unwrap(),
            LaurentX::from_terms(&[(-1, -1), (0, 1), (1, -1)])
        );
    }

    #[test]
    fn rank_one_unitary_counts() {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let sp = HermSpace::standard(1, d);
        let u = |x: QuadExtElem| UnitaryPair::new(sp.clone(), Mat::identity(1, d), vec![x]).unwrap();
        assert_eq!(orb_u(&u(q(1, d)), &ctx).unwrap(), 1);
        assert_eq!(orb_u(&u(q(3, d)), &ctx).unwrap(), 1);
        assert_eq!(orb_u(&u(QuadExtElem::from_rat(rat(1, 3), d)), &ctx).unwrap(), 0);
    }

    #[test]
    fn special_value_examples() {
        let sv = special_values(&LaurentX::from_terms(&[(0, 1), (1, -1)]), -1);
        assert_eq!(sv, SpecialValues { value0: int(0), dvalue0: int(-1) });
        assert_eq!(special_values(&LaurentX::one(), 1), SpecialValues { value0: int(1), dvalue0: int(0) });
        let sv = special_values(&LaurentX::from_terms(&[(-1, -1), (0, 1), (1, -1)]), -1);
        assert_eq!(sv, SpecialValues { value0: int(1), dvalue0: int(0) });
    }

    #[test]
    fn fl_rank_one_examples() {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let cp = Poly::new(vec![q(-1, d), q(1, d)], d);
        for (a, side, gl, u) in [(9, Side::Split, 1, Some(1)), (3, Side::Nonsplit, 0, None), (1, Side::Split, 1, Some(1))] {
            let r = fl_verify(&InvariantVector::new(cp.clone(), vec![q(a, d)]), &ctx).unwrap();
            assert_eq!(r.side, side);
            assert_eq!(r.orb_gl_special.value0, int(gl));
            assert_eq!(r.orb_u, u);
            assert!(r.verdict);
        }
    }

    #[test]
    fn maximal_order_examples() {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let poly = |c: &[i64]| Poly::new(c.iter().map(|&x| q(x, d)).collect(), d);
        assert!(is_maximal_order_poly(&poly(&[1, -1, 1]), &ctx).unwrap());
        assert!(!is_maximal_order_poly(&poly(&[1, -2, 1]), &ctx).unwrap());
        assert!(is_maximal_order_poly(&poly(&[-2, -2, 1]), &ctx).unwrap());
        assert!(!is_maximal_order_poly(&poly(&[-8, -2, 1]), &ctx).unwrap());
        assert_eq!(discriminant(&poly(&[-2, -2, 1])), q(12, d));
    }

    #[test]
    fn rank_one_sweep_passes() {
        for p in [3u64, 5] {
            let ctx = LocalFieldCtx::with_default_d(p).unwrap();
            let rows = fl_sweep(&ctx, 1, 4, 0);
            assert_eq!(rows.len(), 45);
            assert!(rows.iter().all(|(_, r)| r.as_ref().unwrap().verdict));
            assert!(rows.iter().any(|(_, r)| r.as_ref().unwrap().side == Side::Split));
            assert!(rows.iter().any(|(_, r)| r.as_ref().unwrap().side == Side::Nonsplit));
        }
    }
}
