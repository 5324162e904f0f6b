//! Orbit data on the symmetric (`S_m × V'_m`) and unitary (`U(V) × V`)
//! sides: invariants, regularity, matching, transfer factors, Cayley maps
//! and the reduction maps from rank `m+1` to rank `m`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{lattices_between_filtered, HermSpace, Lattice, LatticeError, Ring};
use crate::linalg::{herm_pair, unit_vector, vec_conj, vec_scale, Mat, Poly, Vector};
use crate::padic::{int, quad_character, CharSide, LocalFieldCtx, QuadExtElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("element is not regular semisimple")]
    NotRegular,
    #[error("moment Gram matrix is degenerate")]
    DegenerateGram,
    #[error("Cayley denominator is singular")]
    SingularDenominator,
    #[error("point lies outside the open locus of the reduction map")]
    OutsideOpenLocus,
    #[error("matrix does not satisfy gamma * conj(gamma) = 1")]
    NotSymmetric,
    #[error("matrix does not preserve the hermitian form")]
    NotUnitary,
    #[error("vector component is not in the base field")]
    NotRational,
    #[error("invariant vector is inconsistent: {0}")]
    Inconsistent(String),
    #[error("no admissible norm-one twist found")]
    NoTwist,
    #[error("dimension mismatch")]
    Dimension,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A point `(gamma, (u1, u2))` of `S_m × V'_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiLiePair {
    pub gamma: Mat,
    pub u1: Vector,
    pub u2: Vector,
}

/// A point `(g, u)` of `U(V) × V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitaryPair {
    pub space: HermSpace,
    pub g: Mat,
    pub u: Vector,
}

/// Characteristic polynomial and moments `a_0, ..., a_{m-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantVector {
    pub charpoly: Poly,
    pub moments: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Split,
    Nonsplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CayleyDirection {
    ToGroup,
    ToLie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// The map `r`.
    R,
    /// The map `r^natural`.
    RNatural,
}

/// `gamma * conj(gamma) = 1`.
pub fn is_in_symmetric_space(gamma: &Mat) -> bool {
    gamma.is_square() && gamma.mul(&gamma.conj()).is_identity()
}

/// `g^H G g = G`.
pub fn is_unitary(g: &Mat, gram: &Mat) -> bool {
    g.h().mul(gram).mul(g) == *gram
}

impl SemiLiePair {
    pub fn new(gamma: Mat, u1: Vector, u2: Vector) -> Result<Self, OrbitError> {
        if !gamma.is_square() || u1.len() != gamma.rows || u2.len() != gamma.rows {
            return Err(OrbitError::Dimension);
        }
        if !is_in_symmetric_space(&gamma) {
            return Err(OrbitError::NotSymmetric);
        }
        if !u1.iter().chain(&u2).all(|x| x.is_rational()) {
            return Err(OrbitError::NotRational);
        }
        Ok(Self { gamma, u1, u2 })
    }

    pub fn m(&self) -> usize {
        self.gamma.rows
    }

    pub fn d(&self) -> i64 {
        self.gamma.d
    }

    pub fn invariants(&self) -> InvariantVector {
        let m = self.m();
        let k = self.gamma.krylov(&self.u1, m);
        let moments = k.vec_mul(&self.u2);
        InvariantVector { charpoly: self.gamma.charpoly(), moments }
    }

    /// Both Krylov systems `{gamma^i u1}` and `{u2 gamma^i}` are bases.
    pub fn is_regular_semisimple(&self) -> bool {
        let m = self.m();
        !self.gamma.krylov(&self.u1, m).det().is_zero()
            && !self.gamma.krylov_rows(&self.u2, m).det().is_zero()
    }

    pub fn is_strongly_rs(&self) -> bool {
        self.is_regular_semisimple() && self.gamma.charpoly().is_squarefree()
    }

    /// `h . (gamma, u1, u2) = (h gamma h^{-1}, h u1, u2 h^{-1})` for rational `h`.
    pub fn act(&self, h: &Mat) -> Result<Self, OrbitError> {
        let hinv = h.inverse().ok_or(OrbitError::Dimension)?;
        Self::new(h.mul(&self.gamma).mul(&hinv), h.mul_vec(&self.u1), hinv.vec_mul(&self.u2))
    }
}

impl UnitaryPair {
    pub fn new(space: HermSpace, g: Mat, u: Vector) -> Result<Self, OrbitError> {
        if g.rows != space.dim() || u.len() != space.dim() {
            return Err(OrbitError::Dimension);
        }
        if !is_unitary(&g, &space.gram) {
            return Err(OrbitError::NotUnitary);
        }
        Ok(Self { space, g, u })
    }

    pub fn m(&self) -> usize {
        self.g.rows
    }

    pub fn d(&self) -> i64 {
        self.g.d
    }

    pub fn invariants(&self) -> InvariantVector {
        let m = self.m();
        let k = self.g.krylov(&self.u, m);
        let moments = (0..m).map(|i| herm_pair(&self.space.gram, &k.col(i), &self.u)).collect();
        InvariantVector { charpoly: self.g.charpoly(), moments }
    }

    pub fn is_regular_semisimple(&self) -> bool {
        !self.g.krylov(&self.u, self.m()).det().is_zero()
    }

    pub fn is_strongly_rs(&self) -> bool {
        self.is_regular_semisimple() && self.g.charpoly().is_squarefree()
    }

    /// `k . (g, u) = (k g k^{-1}, k u)` for `k` in `U(V)`.
    pub fn act(&self, k: &Mat) -> Result<Self, OrbitError> {
        let kinv = k.inverse().ok_or(OrbitError::Dimension)?;
        Self::new(self.space.clone(), k.mul(&self.g).mul(&kinv), k.mul_vec(&self.u))
    }
}

impl InvariantVector {
    pub fn new(charpoly: Poly, moments: Vector) -> Self {
        Self { charpoly, moments }
    }

    pub fn m(&self) -> usize {
        self.moments.len()
    }

    pub fn d(&self) -> i64 {
        self.charpoly.d
    }

    /// Moments `a_{-k}` for `k = 0..m-1` obtained from the recurrence given
    /// by the characteristic polynomial.
    pub fn negative_moments(&self) -> Vector {
        let m = self.m();
        let d = self.d();
        let c0 = self.charpoly.coeff(0);
        let mut ext: std::collections::BTreeMap<i64, QuadExtElem> =
            self.moments.iter().enumerate().map(|(i, a)| (i as i64, a.clone())).collect();
        // sum_k c_k a_{k+j} = 0 for every j; solve for a_j with j = -1, -2, ...
        for j in 1..m as i64 {
            let mut s = QuadExtElem::zero(d);
            for k in 1..=m {
                s = s + &self.charpoly.coeff(k) * &ext[&(k as i64 - j)];
            }
            ext.insert(-j, -(&s / &c0));
        }
        (0..m as i64).map(|k| ext[&(-k)].clone()).collect()
    }

    /// Moments arise from a pair: `a_0` is rational, `a_{-k} = conj(a_k)`
    /// and the charpoly is conjugate self-reciprocal.
    pub fn is_consistent(&self) -> bool {
        self.check_consistent().is_ok()
    }

    pub fn check_consistent(&self) -> Result<(), OrbitError> {
        let m = self.m();
        if self.charpoly.degree() != Some(m) || !self.charpoly.lead().is_one() {
            return Err(OrbitError::Inconsistent("charpoly must be monic of degree m".into()));
        }
        if !self.charpoly.is_conj_self_reciprocal() {
            return Err(OrbitError::Inconsistent("charpoly is not conjugate self-reciprocal".into()));
        }
        let neg = self.negative_moments();
        for k in 0..m {
            if neg[k] != self.moments[k].conj() {
                return Err(OrbitError::Inconsistent(format!("moment a_{k} violates conjugate symmetry")));
            }
        }
        Ok(())
    }

    /// Toeplitz Gram `G_{rc} = a_{c-r}` with `a_{-k} = conj(a_k)`.
    pub fn moment_gram(&self) -> Mat {
        let m = self.m();
        let mut g = Mat::zeros(m, m, self.d());
        for r in 0..m {
            for c in 0..m {
                g[(r, c)] = if c >= r { self.moments[c - r].clone() } else { self.moments[r - c].conj() };
            }
        }
        g
    }
}

/// Invariant vectors agree.
pub fn matches(s: &SemiLiePair, u: &UnitaryPair) -> bool {
    s.invariants() == u.invariants()
}

/// Split iff the moment Gram determinant has even valuation.
pub fn decide_side(iv: &InvariantVector, ctx: &LocalFieldCtx) -> Result<Side, OrbitError> {
    let det = iv.moment_gram().det();
    match det.valuation(ctx.p) {
        None => Err(OrbitError::DegenerateGram),
        Some(v) if v.rem_euclid(2) == 0 => Ok(Side::Split),
        Some(_) => Ok(Side::Nonsplit),
    }
}

/// Constructive test for a self-dual lattice: diagonalize the form, rescale
/// the orthogonal basis so every norm has valuation 0 or 1 and search the
/// lattices between the resulting lattice and its dual.
pub fn self_dual_exists(gram: &Mat, p: u64) -> Result<bool, OrbitError> {
    let space = HermSpace::new(gram.clone())?;
    let m = gram.rows;
    let d = gram.d;
    let mut basis: Vec<Vector> = Vec::new();
    let mut cands: Vec<Vector> = (0..m).map(|i| unit_vector(m, i, d)).collect();
    // Gram-Schmidt with pivot search for anisotropic vectors.
    while basis.len() < m {
        let mut found = None;
        'search: for i in 0..cands.len() {
            if !space.pair(&cands[i], &cands[i]).is_zero() {
                found = Some(cands[i].clone());
                break;
            }
            for j in i + 1..cands.len() {
                for t in [QuadExtElem::one(d), QuadExtElem::sqrt_d(d)] {
                    let v: Vector = cands[i].iter().zip(&cands[j]).map(|(a, b)| a + &(&t * b)).collect();
                    if !space.pair(&v, &v).is_zero() {
                        found = Some(v);
                        break 'search;
                    }
                }
            }
        }
        let v = found.ok_or(OrbitError::DegenerateGram)?;
        let nv = space.pair(&v, &v);
        cands = cands
            .into_iter()
            .map(|c| {
                let f = &space.pair(&c, &v) / &nv;
                c.iter().zip(&v).map(|(a, b)| a - &(&f * b)).collect::<Vector>()
            })
            .filter(|c: &Vector| c.iter().any(|x| !x.is_zero()))
            .collect();
        let shift = crate::padic::vp(&nv.a, p).unwrap().div_euclid(2);
        let scale = crate::padic::pow_p_rat(p, -shift);
        basis.push(v.iter().map(|x| x.scale(&scale)).collect());
        if basis.len() == m {
            break;
        }
        if cands.is_empty() {
            return Err(OrbitError::DegenerateGram);
        }
        // keep the remaining candidates a spanning set of the complement
        let keep = m - basis.len();
        cands = pick_independent(&cands, keep, d).ok_or(OrbitError::DegenerateGram)?;
    }
    let b = Mat::from_cols(&basis, d);
    let l = Lattice::new(Ring::OF, b, p)?;
    let ld = l.dual(&space)?;
    if !ld.contains(&l) {
        return Ok(false);
    }
    let target = (l.det_valuation() + ld.det_valuation()).div_euclid(2);
    if (l.det_valuation() + ld.det_valuation()).rem_euclid(2) != 0 {
        return Ok(false);
    }
    let found = lattices_between_filtered(&l, &ld, Some(target), |x| x.is_self_dual(&space))?;
    Ok(!found.is_empty())
}

fn pick_independent(c: &[Vector], k: usize, d: i64) -> Option<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::new();
    for v in c {
        let mut trial = out.clone();
        trial.push(v.clone());
        if Mat::from_cols(&trial, d).rank() == trial.len() {
            out = trial;
        }
        if out.len() == k {
            return Some(out);
        }
    }
    None
}

/// `omega = eta~(det(gamma)^{-floor(m/2)} det(gamma^i u1))`.
pub fn transfer_factor(x: &SemiLiePair, ctx: &LocalFieldCtx) -> Result<i8, OrbitError> {
    let m = x.m();
    let k = x.gamma.krylov(&x.u1, m).det();
    omega_from(&x.gamma, k, ctx)
}

/// Group version with the last standard basis vector `e = e_m`.
pub fn transfer_factor_group(gamma: &Mat, ctx: &LocalFieldCtx) -> Result<i8, OrbitError> {
    let m = gamma.rows;
    let e = unit_vector(m, m - 1, gamma.d);
    let k = gamma.krylov(&e, m).det();
    omega_from(gamma, k, ctx)
}

fn omega_from(gamma: &Mat, kdet: QuadExtElem, ctx: &LocalFieldCtx) -> Result<i8, OrbitError> {
    if kdet.is_zero() {
        return Err(OrbitError::NotRegular);
    }
    let m = gamma.rows as i64;
    let arg = &gamma.det().pow(-(m / 2)) * &kdet;
    quad_character(&arg, CharSide::EtaTildeOnF, ctx).map_err(|_| OrbitError::NotRegular)
}

/// Cayley map `x -> -(1-x)(1+x)^{-1}` and its inverse `g -> (1+g)(1-g)^{-1}`.
/// The formulas are the same on the unitary and symmetric sides.
pub fn cayley(x: &Mat, direction: CayleyDirection) -> Result<Mat, OrbitError> {
    let n = x.rows;
    let one = Mat::identity(n, x.d);
    match direction {
        CayleyDirection::ToGroup => {
            let inv = one.add(x).inverse().ok_or(OrbitError::SingularDenominator)?;
            Ok(one.sub(x).mul(&inv).neg())
        }
        CayleyDirection::ToLie => {
            let inv = one.sub(x).inverse().ok_or(OrbitError::SingularDenominator)?;
            Ok(one.add(x).mul(&inv))
        }
    }
}

/// Norm-one elements `(a + b sqrt d)/(a - b sqrt d)` in a fixed search order
/// starting with `1` and `-1`.
pub fn norm_one_candidates(d: i64, bound: i64) -> Vec<QuadExtElem> {
    let mut out: Vec<QuadExtElem> = vec![QuadExtElem::one(d), -QuadExtElem::one(d)];
    for r in 1..=bound {
        for a in -r..=r {
            for b in [r, -r] {
                push_unique(&mut out, a, b, d);
            }
        }
        for b in -r + 1..r {
            for a in [r, -r] {
                push_unique(&mut out, a, b, d);
            }
        }
    }
    out
}

fn push_unique(out: &mut Vec<QuadExtElem>, a: i64, b: i64, d: i64) {
    if a == 0 && b == 0 {
        return;
    }
    let z = QuadExtElem::new(int(a), int(b), d);
    let xi = &z / &z.conj();
    if !out.contains(&xi) {
        out.push(xi);
    }
}

fn split_blocks(gp: &Mat) -> (Mat, Vector, Vector, QuadExtElem) {
    let n = gp.rows - 1;
    let a = gp.submatrix(0, n, 0, n);
    let b = gp.col(n)[..n].to_vec();
    let c = gp.row(n)[..n].to_vec();
    (a, b, c, gp[(n, n)].clone())
}

/// Output of a reduction map together with the data needed to invert it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitaryReduction {
    pub g: Mat,
    pub u: Vector,
    pub e: QuadExtElem,
    pub xi: QuadExtElem,
    pub variant: Variant,
}

/// Reduction `U(V_{m+1}) -> U(V_m) × V_m` for `V_{m+1} = V_m ⊕ F u_0`,
/// `<u_0, u_0> = 1`, applied to `xi g'`.
pub fn reduce_unitary(
    gp: &Mat,
    space: &HermSpace,
    variant: Variant,
    xi: &QuadExtElem,
) -> Result<UnitaryReduction, OrbitError> {
    let d = gp.d;
    let n = space.dim();
    if gp.rows != n + 1 {
        return Err(OrbitError::Dimension);
    }
    let big = Mat::block_diag(&space.gram, &Mat::identity(1, d));
    if !is_unitary(gp, &big) {
        return Err(OrbitError::NotUnitary);
    }
    let g2 = gp.scale(xi);
    let (_, _, _, dd) = split_blocks(&g2);
    let one = QuadExtElem::one(d);
    if (&one - &dd).is_zero() {
        return Err(OrbitError::OutsideOpenLocus);
    }
    let xp = cayley(&g2, CayleyDirection::ToLie).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let (x, ut, _, e) = split_blocks(&xp);
    let g = cayley(&x, CayleyDirection::ToGroup).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let sq = QuadExtElem::sqrt_d(d);
    let u = match variant {
        Variant::RNatural => vec_scale(&ut, &sq.inv()),
        Variant::R => {
            let (_, u_blk, _, _) = split_blocks(&g2);
            vec_scale(&u_blk, &(&(&one - &dd) * &sq).inv())
        }
    };
    Ok(UnitaryReduction { g, u, e, xi: xi.clone(), variant })
}

/// Inverse of `reduce_unitary`: returns `g'`.
pub fn lift_unitary(red: &UnitaryReduction, space: &HermSpace) -> Result<Mat, OrbitError> {
    let d = red.g.d;
    let sq = QuadExtElem::sqrt_d(d);
    let x = cayley(&red.g, CayleyDirection::ToLie)?;
    let ut = match red.variant {
        Variant::RNatural => vec_scale(&red.u, &sq),
        Variant::R => {
            let n = red.g.rows;
            let inv = Mat::identity(n, d).sub(&red.g).inverse().ok_or(OrbitError::SingularDenominator)?;
            vec_scale(&inv.mul_vec(&red.u), &(&sq * &QuadExtElem::from_int(2, d)))
        }
    };
    let ustar = adjoint_row(&ut, &space.gram);
    let xp = Mat::bordered(&x, &ut, &ustar.iter().map(|c| -c).collect::<Vector>(), &red.e);
    let g2 = cayley(&xp, CayleyDirection::ToGroup)?;
    Ok(g2.scale(&red.xi.inv()))
}

/// `v^* = v^H G` as a row.
pub fn adjoint_row(v: &[QuadExtElem], gram: &Mat) -> Vector {
    gram.vec_mul(&vec_conj(v))
}

/// The four identities relating `g' = [[h, u], [w^*, d]]` to its reduction.
pub fn check_unitary_identities(gp: &Mat, space: &HermSpace, xi: &QuadExtElem) -> Result<bool, OrbitError> {
    let d = gp.d;
    let n = space.dim();
    let g2 = gp.scale(xi);
    let (h, u, wstar, dd) = split_blocks(&g2);
    let one = QuadExtElem::one(d);
    let omd = &one - &dd;
    if omd.is_zero() {
        return Err(OrbitError::OutsideOpenLocus);
    }
    let xp = cayley(&g2, CayleyDirection::ToLie).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let (x, ut, bl, _) = split_blocks(&xp);
    let g = cayley(&x, CayleyDirection::ToGroup)?;
    let outer = Mat::from_cols(&[u.clone()], d).mul(&Mat::from_rows(vec![wstar.clone()], d));
    let id1 = g == h.add(&outer.scale(&omd.inv()));
    let idn = Mat::identity(n, d);
    let one_minus_g_inv = idn.sub(&g).inverse().ok_or(OrbitError::OutsideOpenLocus)?;
    let two = QuadExtElem::from_int(2, d);
    let id2 = ut == vec_scale(&one_minus_g_inv.mul_vec(&u), &(&two / &omd));
    let id3 = Mat::identity(n + 1, d).sub(&g2).det() == &omd * &idn.sub(&g).det();
    let ginv = space.gram.inverse().ok_or(OrbitError::DegenerateGram)?;
    let w = ginv.mul_vec(&vec_conj(&wstar));
    let eps = &(&one - &dd.conj()) / &omd;
    let id4 = g.mul_vec(&w) == vec_scale(&u, &eps);
    let antiherm = bl == adjoint_row(&ut, &space.gram).iter().map(|c| -c).collect::<Vector>();
    Ok(id1 && id2 && id3 && id4 && antiherm)
}

/// Output of the symmetric-side reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricReduction {
    pub gamma: Mat,
    pub u1: Vector,
    pub u2: Vector,
    pub e: QuadExtElem,
    pub xi: QuadExtElem,
    pub variant: Variant,
}

impl SymmetricReduction {
    pub fn pair(&self) -> Result<SemiLiePair, OrbitError> {
        SemiLiePair::new(self.gamma.clone(), self.u1.clone(), self.u2.clone())
    }
}

/// Reduction `S_{m+1} -> S_m × V'_m` applied to `xi gamma'`.
pub fn reduce_symmetric(gp: &Mat, variant: Variant, xi: &QuadExtElem) -> Result<SymmetricReduction, OrbitError> {
    let d = gp.d;
    if !is_in_symmetric_space(gp) {
        return Err(OrbitError::NotSymmetric);
    }
    let g2 = gp.scale(xi);
    let n = g2.rows - 1;
    let (_, _, _, dd) = split_blocks(&g2);
    if (&QuadExtElem::one(d) - &dd).is_zero() {
        return Err(OrbitError::OutsideOpenLocus);
    }
    let yp = cayley(&g2, CayleyDirection::ToLie).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let (y, bt, ct, e) = split_blocks(&yp);
    let gamma = cayley(&y, CayleyDirection::ToGroup).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let sinv = QuadExtElem::sqrt_d(d).inv();
    let u1 = vec_scale(&bt, &sinv);
    let u2 = match variant {
        Variant::RNatural => vec_scale(&ct, &sinv),
        Variant::R => {
            let q = Mat::identity(n, d).sub(&y.mul(&y)).inverse().ok_or(OrbitError::OutsideOpenLocus)?;
            vec_scale(&q.vec_mul(&ct), &sinv)
        }
    };
    if !u1.iter().chain(&u2).all(|x| x.is_rational()) {
        return Err(OrbitError::NotRational);
    }
    Ok(SymmetricReduction { gamma, u1, u2, e, xi: xi.clone(), variant })
}

/// Inverse of `reduce_symmetric`: returns `gamma'`.
pub fn lift_symmetric(red: &SymmetricReduction) -> Result<Mat, OrbitError> {
    let d = red.gamma.d;
    let n = red.gamma.rows;
    let sq = QuadExtElem::sqrt_d(d);
    let y = cayley(&red.gamma, CayleyDirection::ToLie)?;
    let bt = vec_scale(&red.u1, &sq);
    let ct = match red.variant {
        Variant::RNatural => vec_scale(&red.u2, &sq),
        Variant::R => {
            let q = Mat::identity(n, d).sub(&y.mul(&y));
            vec_scale(&q.vec_mul(&red.u2), &sq)
        }
    };
    let yp = Mat::bordered(&y, &bt, &ct, &red.e);
    let g2 = cayley(&yp, CayleyDirection::ToGroup)?;
    Ok(g2.scale(&red.xi.inv()))
}

/// The identities relating `gamma' = [[a, b], [c, d]]` to its reduction,
/// with `c~` the lower-left block of the inverse Cayley image.
pub fn check_symmetric_identities(gp: &Mat, xi: &QuadExtElem) -> Result<bool, OrbitError> {
    let d = gp.d;
    let g2 = gp.scale(xi);
    let n = g2.rows - 1;
    let (a, b, c, dd) = split_blocks(&g2);
    let one = QuadExtElem::one(d);
    let omd = &one - &dd;
    if omd.is_zero() {
        return Err(OrbitError::OutsideOpenLocus);
    }
    let yp = cayley(&g2, CayleyDirection::ToLie).map_err(|_| OrbitError::OutsideOpenLocus)?;
    let (y, bt, ct, _) = split_blocks(&yp);
    let gamma = cayley(&y, CayleyDirection::ToGroup)?;
    let outer = Mat::from_cols(&[b.clone()], d).mul(&Mat::from_rows(vec![c.clone()], d));
    let id1 = gamma == a.add(&outer.scale(&omd.inv()));
    let idn = Mat::identity(n, d);
    let inv = idn.sub(&gamma).inverse().ok_or(OrbitError::OutsideOpenLocus)?;
    let two = QuadExtElem::from_int(2, d);
    let id2 = bt == vec_scale(&inv.mul_vec(&b), &(&two / &omd));
    let id3 = ct == vec_scale(&inv.vec_mul(&c), &(&two / &omd));
    let eps = &(&one - &dd.conj()) / &omd;
    let id4 = gamma.mul_vec(&vec_conj(&b)) == vec_scale(&b, &eps);
    Ok(id1 && id2 && id3 && id4)
}

/// Invariants of `[[a, b], [c, d]]` under conjugation by `diag(k, 1)`:
/// charpoly of `a`, the corner `d`, and `c a^i b` for `0 <= i < m`.
pub fn group_invariants(gp: &Mat) -> (Poly, QuadExtElem, Vector) {
    let n = gp.rows - 1;
    let (a, b, c, dd) = split_blocks(gp);
    let k = a.krylov(&b, n);
    (a.charpoly(), dd, k.vec_mul(&c))
}

/// Matching of group elements `gamma' in S_{m+1}` and `g' in U(V_{m+1})`.
pub fn matches_group(gamma_p: &Mat, g_p: &Mat) -> bool {
    group_invariants(gamma_p) == group_invariants(g_p)
}

/// An element of `S_{m+1}` matching the unitary `g'` (basis `V_m ⊕ F u_0`).
pub fn matching_symmetric(g_p: &Mat, space: &HermSpace) -> Result<Mat, OrbitError> {
    let d = g_p.d;
    let n = space.dim();
    let xp = cayley(g_p, CayleyDirection::ToLie)?;
    let (x, ut, _, e) = split_blocks(&xp);
    let sq = QuadExtElem::sqrt_d(d);
    let sinv = sq.inv();
    let xr = x.scale(&sinv);
    let chi = xr.charpoly();
    if !chi.is_rational() {
        return Err(OrbitError::NotRational);
    }
    let y = Mat::companion(&chi);
    let b = unit_vector(n, 0, d);
    let dq = QuadExtElem::from_int(d, d);
    let ustar = adjoint_row(&ut, &space.gram);
    let k = xr.krylov(&ut, n);
    let c: Vector = k.vec_mul(&ustar).iter().map(|v| -(v / &dq)).collect();
    if !c.iter().all(|v| v.is_rational()) {
        return Err(OrbitError::NotRational);
    }
    let yp = Mat::bordered(&y, &b, &c, &(&e * &sinv)).scale(&sq);
    cayley(&yp, CayleyDirection::ToGroup)
}

/// First twist `xi` making `xi gamma'` admissible for `pred`.
pub fn find_twist(d: i64, mut pred: impl FnMut(&QuadExtElem) -> bool) -> Result<QuadExtElem, OrbitError> {
    norm_one_candidates(d, 6).into_iter().find(|xi| pred(xi)).ok_or(OrbitError::NoTwist)
}

/// A representative of `S_m × V'_m` with the given invariants: `gamma` is a
/// norm-one twist of the Cayley image of `sqrt(d)` times a rational
/// companion matrix, `u1 = e_1` and `u2` solves the moment equations.
pub fn synthesize_semilie(iv: &InvariantVector) -> Result<SemiLiePair, OrbitError> {
    iv.check_consistent()?;
    let d = iv.d();
    let m = iv.m();
    let alpha = &iv.charpoly;
    let nu = find_twist(d, |nu| !alpha.eval(nu).is_zero())?;
    let nu_m = nu.pow(-(m as i64));
    let alpha_nu = alpha.compose_scale(&nu).scale(&nu_m);
    let c = Mat::companion(&alpha_nu);
    let y = cayley(&c, CayleyDirection::ToLie)?;
    let sq = QuadExtElem::sqrt_d(d);
    let chi = y.scale(&sq.inv()).charpoly();
    if !chi.is_rational() {
        return Err(OrbitError::NotRational);
    }
    let gamma = cayley(&Mat::companion(&chi).scale(&sq), CayleyDirection::ToGroup)?.scale(&nu);
    let u1 = unit_vector(m, 0, d);
    let k = gamma.krylov(&u1, m);
    let kinv = k.inverse().ok_or(OrbitError::NotRegular)?;
    let u2 = kinv.vec_mul(&iv.moments);
    if !u2.iter().all(|x| x.is_rational()) {
        return Err(OrbitError::NotRational);
    }
    SemiLiePair::new(gamma, u1, u2)
}

/// A representative of `U(V) × V` with the given invariants, in the cyclic
/// basis `u, gu, ..., g^{m-1}u`: `g` is the companion matrix and the Gram
/// matrix is the moment Toeplitz matrix.
pub fn synthesize_unitary(iv: &InvariantVector) -> Result<UnitaryPair, OrbitError> {
    iv.check_consistent()?;
    let d = iv.d();
    let m = iv.m();
    let gram = iv.moment_gram();
    let space = HermSpace::new(gram).map_err(|_| OrbitError::DegenerateGram)?;
    let g = Mat::companion(&iv.charpoly);
    let u = unit_vector(m, 0, d);
    UnitaryPair::new(space, g, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;

    fn q(a: i64, d: i64) -> QuadExtElem {
        QuadExtElem::from_int(a, d)
    }

    #[test]
    fn rank_one_invariants() {
        let d = -1;
        let s = SemiLiePair::new(Mat::identity(1, d), vec![q(3, d)], vec![q(1, d)]).unwrap();
        let iv = s.invariants();
        assert_eq!(iv.charpoly, Poly::new(vec![q(-1, d), q(1, d)], d));
        assert_eq!(iv.moments, vec![q(3, d)]);
        assert!(s.is_regular_semisimple());
        let sp = HermSpace::new(Mat::from_ints(&[&[9]], d)).unwrap();
        let u = UnitaryPair::new(sp, Mat::identity(1, d), vec![q(1, d)]).unwrap();
        assert_eq!(u.invariants().moments, vec![q(9, d)]);
    }

    #[test]
    fn transfer_factor_examples() {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let s = SemiLiePair::new(Mat::identity(1, d), vec![q(3, d)], vec![q(1, d)]).unwrap();
        assert_eq!(transfer_factor(&s, &ctx), Ok(-1));
        let s = SemiLiePair::new(Mat::identity(1, d), vec![q(1, d)], vec![q(1, d)]).unwrap();
        assert_eq!(transfer_factor(&s, &ctx), Ok(1));
    }

    #[test]
    fn cayley_examples() {
        let d = -1;
        let z = Mat::zeros(2, 2, d);
        assert_eq!(cayley(&z, CayleyDirection::ToGroup).unwrap(), Mat::identity(2, d).neg());
        assert_eq!(cayley(&z, CayleyDirection::ToLie).unwrap(), Mat::identity(2, d));
    }

    #[test]
    fn worked_unitary_example() {
        let d = -1;
        let gp = Mat::from_rats(vec![vec![rat(3, 5), rat(4, 5)], vec![rat(-4, 5), rat(3, 5)]], d);
        let space = HermSpace::standard(1, d);
        let one = QuadExtElem::one(d);
        let red = reduce_unitary(&gp, &space, Variant::R, &one).unwrap();
        assert_eq!(red.g, Mat::identity(1, d).neg());
        assert_eq!(red.u, vec![QuadExtElem::new(int(0), int(-2), d)]);
        assert_eq!(space.pair(&red.u, &red.u), q(4, d));
        assert!(check_unitary_identities(&gp, &space, &one).unwrap());
        let det = Mat::identity(2, d).sub(&gp).det();
        assert_eq!(det, QuadExtElem::from_rat(rat(4, 5), d));
        assert_eq!(lift_unitary(&red, &space).unwrap(), gp);
        let gam = matching_symmetric(&gp, &space).unwrap();
        assert!(matches_group(&gam, &gp));
        for v in [Variant::R, Variant::RNatural] {
            let rs = reduce_symmetric(&gam, v, &one).unwrap();
            let ru = reduce_unitary(&gp, &space, v, &one).unwrap();
            let up = UnitaryPair::new(space.clone(), ru.g.clone(), ru.u.clone()).unwrap();
            assert!(matches(&rs.pair().unwrap(), &up));
            assert_eq!(lift_symmetric(&rs).unwrap(), gam);
        }
    }

    #[test]
    fn decoupled_reduction() {
        let d = -1;
        let h = Mat::from_rows(vec![vec![QuadExtElem::new(rat(3, 5), rat(4, 5), d), q(0, d)], vec![q(0, d), q(-1, d)]], d);
        let space = HermSpace::standard(1, d);
        let red = reduce_unitary(&h, &space, Variant::R, &QuadExtElem::one(d)).unwrap();
        assert_eq!(red.g, h.submatrix(0, 1, 0, 1));
        assert!(red.u[0].is_zero());
    }

    #[test]
    fn side_examples() {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let iv = |a: i64| InvariantVector::new(Poly::new(vec![q(-1, d), q(1, d)], d), vec![q(a, d)]);
        assert_eq!(decide_side(&iv(1), &ctx), Ok(Side::Split));
        assert_eq!(decide_side(&iv(3), &ctx), Ok(Side::Nonsplit));
        assert_eq!(decide_side(&iv(9), &ctx), Ok(Side::Split));
        for (a, split) in [(1, true), (3, false), (9, true), (2, true)] {
            assert_eq!(self_dual_exists(&iv(a).moment_gram(), 3).unwrap(), split);
        }
    }
}
