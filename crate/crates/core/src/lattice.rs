//! Lattices over `O_F0 = Z_(p)` in `F0^m` and over `O_F` in `F^m`:
//! Hermite normal forms, duals, indices and enumeration of intermediate
//! lattices.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{Mat, Vector};
use crate::padic::{int, pow_p, pow_p_rat, QuadExtElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("basis is singular")]
    SingularBasis,
    #[error("form is degenerate")]
    DegenerateForm,
    #[error("form is not hermitian")]
    NotHermitian,
    #[error("lattices are not nested")]
    NotNested,
    #[error("lattices live in different ambient spaces or over different rings")]
    Mismatch,
    #[error("entry {0} is not in the base field")]
    NotRational(String),
}

/// Coefficient ring of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    /// `Z_(p)` acting on `F0^m`.
    OF0,
    /// `Z_(p)[sqrt d]` acting on `F^m`.
    OF,
}

/// A full-rank lattice stored by its canonical column Hermite normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    pub ring: Ring,
    pub p: u64,
    basis: Mat,
    inv: Mat,
}

/// Nondegenerate hermitian form on `F^m`, `<x, y> = y^H G x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermSpace {
    pub gram: Mat,
}

impl HermSpace {
    pub fn new(gram: Mat) -> Result<Self, LatticeError> {
        if !gram.is_square() || gram.h() != gram {
            return Err(LatticeError::NotHermitian);
        }
        if gram.det().is_zero() {
            return Err(LatticeError::DegenerateForm);
        }
        Ok(Self { gram })
    }

    pub fn standard(m: usize, d: i64) -> Self {
        Self { gram: Mat::identity(m, d) }
    }

    pub fn dim(&self) -> usize {
        self.gram.rows
    }

    /// `<x, y>`.
    pub fn pair(&self, x: &[QuadExtElem], y: &[QuadExtElem]) -> QuadExtElem {
        crate::linalg::herm_pair(&self.gram, x, y)
    }
}

/// Canonical representative of `x` modulo `p^k` in the given ring.
pub fn reduce_entry(x: &QuadExtElem, ring: Ring, p: u64, k: i64) -> QuadExtElem {
    match ring {
        Ring::OF0 => QuadExtElem::from_rat(crate::padic::reduce_mod_pk(&x.a, p, k), x.d),
        Ring::OF => x.reduce_mod_pk(p, k),
    }
}

/// Column Hermite normal form over the valuation ring of the generator
/// matrix `gens` (`m` rows, any number of columns spanning a full-rank
/// lattice). Output is upper triangular with diagonal `p^{k_i}` and
/// off-diagonal entries reduced modulo the diagonal entry of their row.
pub fn hnf(gens: &Mat, ring: Ring, p: u64) -> Result<Mat, LatticeError> {
    let m = gens.rows;
    let d = gens.d;
    let mut cols: Vec<Vector> = (0..gens.cols).map(|j| gens.col(j)).filter(|c| c.iter().any(|x| !x.is_zero())).collect();
    let mut out: Vec<Vector> = vec![Vec::new(); m];
    let mut diag_val = vec![0i64; m];
    for i in (0..m).rev() {
        let best = cols
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c[i].valuation(p).map(|v| (v, j)))
            .min();
        let Some((v, j)) = best else {
            return Err(LatticeError::SingularBasis);
        };
        let mut piv = cols.swap_remove(j);
        let unit_inv = piv[i].unit_part(p).inv();
        for x in piv.iter_mut() {
            *x = &*x * &unit_inv;
        }
        let pv = pow_p_rat(p, -v);
        for c in cols.iter_mut() {
            if c[i].is_zero() {
                continue;
            }
            let f = c[i].scale(&pv);
            for (ck, pk) in c.iter_mut().zip(&piv) {
                *ck = &*ck - &(&f * pk);
            }
        }
        diag_val[i] = v;
        out[i] = piv;
    }
    for j in 0..m {
        for i in (0..j).rev() {
            let x = out[j][i].clone();
            let r = reduce_entry(&x, ring, p, diag_val[i]);
            if r == x {
                continue;
            }
            let q = (&x - &r).scale(&pow_p_rat(p, -diag_val[i]));
            let col_i = out[i].clone();
            for (a, b) in out[j].iter_mut().zip(&col_i) {
                *a = &*a - &(&q * b);
            }
        }
    }
    Ok(Mat::from_cols(&out, d))
}

impl Lattice {
    /// Lattice spanned by the columns of `basis` (any spanning set of full rank).
    pub fn new(ring: Ring, basis: Mat, p: u64) -> Result<Self, LatticeError> {
        if ring == Ring::OF0 {
            if let Some(x) = basis.entries().find(|x| !x.is_rational()) {
                return Err(LatticeError::NotRational(x.to_string()));
            }
        }
        let basis = hnf(&basis, ring, p)?;
        let inv = basis.inverse().ok_or(LatticeError::SingularBasis)?;
        Ok(Self { ring, p, basis, inv })
    }

    /// `O^m`.
    pub fn standard(ring: Ring, m: usize, p: u64, d: i64) -> Self {
        Self { ring, p, basis: Mat::identity(m, d), inv: Mat::identity(m, d) }
    }

    /// `p^k O^m`.
    pub fn scaled_standard(ring: Ring, m: usize, p: u64, d: i64, k: i64) -> Self {
        let basis = Mat::scalar(m, &QuadExtElem::from_rat(pow_p_rat(p, k), d));
        let inv = Mat::scalar(m, &QuadExtElem::from_rat(pow_p_rat(p, -k), d));
        Self { ring, p, basis, inv }
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn d(&self) -> i64 {
        self.basis.d
    }

    /// Exponents `k_i` of the diagonal of the canonical basis.
    pub fn diagonal_exponents(&self) -> Vec<i64> {
        (0..self.dim()).map(|i| self.basis[(i, i)].valuation(self.p).unwrap()).collect()
    }

    /// Idempotent canonical form (already canonical by construction).
    pub fn canonicalize(&self) -> Self {
        Self::new(self.ring, self.basis.clone(), self.p).expect("canonical basis is nonsingular")
    }

    /// `v(det B)`.
    pub fn det_valuation(&self) -> i64 {
        self.diagonal_exponents().iter().sum()
    }

    /// Signed index `d(L, L0) = v(det h)` with `L = h L0`.
    pub fn index(&self, l0: &Lattice) -> i64 {
        self.det_valuation() - l0.det_valuation()
    }

    /// `v` in `L`.
    pub fn contains_vec(&self, v: &[QuadExtElem]) -> bool {
        let inv = &self.inv;
        let c = inv.mul_vec(v);
        c.iter().all(|x| x.is_integral(self.p) && (self.ring == Ring::OF || x.is_rational()))
    }

    /// `other` is a sublattice of `self`.
    pub fn contains(&self, other: &Lattice) -> bool {
        let inv = &self.inv;
        let c = inv.mul(&other.basis);
        c.is_integral(self.p)
    }

    /// `M L` is contained in `L`.
    pub fn is_stable_under(&self, m: &Mat) -> bool {
        let inv = &self.inv;
        inv.mul(m).mul(&self.basis).is_integral(self.p)
    }

    /// Scaling by `p^k`.
    pub fn scale_pk(&self, k: i64) -> Lattice {
        let f = pow_p_rat(self.p, k);
        Lattice::new(self.ring, self.basis.scale_rat(&f), self.p).unwrap()
    }

    /// Image `M L` for invertible `M`.
    pub fn transform(&self, m: &Mat) -> Result<Lattice, LatticeError> {
        Lattice::new(self.ring, m.mul(&self.basis), self.p)
    }

    /// Hermitian dual `{x : <x, l> in O_F for all l in L}` with basis `G^{-1} B^{-H}`.
    pub fn dual(&self, space: &HermSpace) -> Result<Lattice, LatticeError> {
        let ginv = space.gram.inverse().ok_or(LatticeError::DegenerateForm)?;
        let bh_inv = self.basis.h().inverse().ok_or(LatticeError::SingularBasis)?;
        Lattice::new(self.ring, ginv.mul(&bh_inv), self.p)
    }

    /// Dual under the symmetric bilinear form `y^T S x` (for `O_F0` lattices).
    pub fn dual_bilinear(&self, s: &Mat) -> Result<Lattice, LatticeError> {
        let sinv = s.inverse().ok_or(LatticeError::DegenerateForm)?;
        let bt_inv = self.basis.transpose().inverse().ok_or(LatticeError::SingularBasis)?;
        Lattice::new(self.ring, sinv.mul(&bt_inv), self.p)
    }

    /// `L = L^vee` for the hermitian form.
    pub fn is_self_dual(&self, space: &HermSpace) -> bool {
        let g = self.basis.h().mul(&space.gram).mul(&self.basis);
        g.is_integral(self.p) && g.det().valuation(self.p) == Some(0)
    }

    /// Gram matrix `B^H G B` of the basis.
    pub fn gram(&self, space: &HermSpace) -> Mat {
        self.basis.h().mul(&space.gram).mul(&self.basis)
    }

    pub fn sum(&self, o: &Lattice) -> Result<Lattice, LatticeError> {
        if self.ring != o.ring || self.dim() != o.dim() {
            return Err(LatticeError::Mismatch);
        }
        let m = self.dim();
        let mut cols: Vec<Vector> = (0..m).map(|j| self.basis.col(j)).collect();
        cols.extend((0..m).map(|j| o.basis.col(j)));
        Lattice::new(self.ring, Mat::from_cols(&cols, self.d()), self.p)
    }

    pub fn intersect(&self, o: &Lattice) -> Result<Lattice, LatticeError> {
        let id = Mat::identity(self.dim(), self.d());
        let a = self.dual_bilinear(&id)?;
        let b = o.dual_bilinear(&id)?;
        a.sum(&b)?.dual_bilinear(&id)
    }

    /// `L ∩ F0^m` for an `O_F`-lattice.
    pub fn intersect_base(&self) -> Result<Lattice, LatticeError> {
        assert_eq!(self.ring, Ring::OF);
        let m = self.dim();
        let d = self.d();
        let dd = int(d);
        let mut gens = Mat::zeros(2 * m, 2 * m, d);
        for j in 0..m {
            for i in 0..m {
                let x = &self.basis[(i, j)];
                gens[(i, 2 * j)] = QuadExtElem::from_rat(x.a.clone(), d);
                gens[(m + i, 2 * j)] = QuadExtElem::from_rat(x.b.clone(), d);
                gens[(i, 2 * j + 1)] = QuadExtElem::from_rat(&x.b * &dd, d);
                gens[(m + i, 2 * j + 1)] = QuadExtElem::from_rat(x.a.clone(), d);
            }
        }
        let h = hnf(&gens, Ring::OF0, self.p)?;
        Lattice::new(Ring::OF0, h.submatrix(0, m, 0, m), self.p)
    }

    /// `O_F ⊗ L` for an `O_F0`-lattice.
    pub fn extend_scalars(&self) -> Lattice {
        Lattice::new(Ring::OF, self.basis.clone(), self.p).unwrap()
    }

    /// Sort key giving a deterministic total order.
    pub fn sort_key(&self) -> Vec<(num_rational::BigRational, num_rational::BigRational)> {
        self.basis.entries().map(|x| (x.a.clone(), x.b.clone())).collect()
    }
}

/// Elementary-divisor decomposition of `M2 ⊇ M1`: returns `(C, e)` with
/// `M2 = C O^m` and `M1 = C diag(p^e) O^m`.
pub fn relative_smith(m1: &Lattice, m2: &Lattice) -> Result<(Mat, Vec<i64>), LatticeError> {
    let p = m1.p;
    let n = m1.dim();
    let b2inv = m2.basis.inverse().ok_or(LatticeError::SingularBasis)?;
    let mut a = b2inv.mul(&m1.basis);
    if !a.is_integral(p) {
        return Err(LatticeError::NotNested);
    }
    let mut uinv = Mat::identity(n, m1.d());
    let mut exps = vec![0i64; n];
    for t in 0..n {
        let mut best: Option<(i64, usize, usize)> = None;
        for r in t..n {
            for c in t..n {
                if let Some(v) = a[(r, c)].valuation(p) {
                    if best.map_or(true, |b| v < b.0) {
                        best = Some((v, r, c));
                    }
                }
            }
        }
        let (v, r, c) = best.ok_or(LatticeError::SingularBasis)?;
        a.swap_rows(t, r);
        uinv.swap_cols(t, r);
        a.swap_cols(t, c);
        let pinv = a[(t, t)].inv();
        for r in t + 1..n {
            if a[(r, t)].is_zero() {
                continue;
            }
            let f = &a[(r, t)] * &pinv;
            for k in t..n {
                let s = &f * &a[(t, k)];
                a[(r, k)] = &a[(r, k)] - &s;
            }
            for k in 0..n {
                let s = &f * &uinv[(k, r)];
                uinv[(k, t)] = &uinv[(k, t)] + &s;
            }
        }
        for c in t + 1..n {
            a[(t, c)] = QuadExtElem::zero(m1.d());
        }
        exps[t] = v;
    }
    Ok((m2.basis.mul(&uinv), exps))
}

/// Representatives of `O / p^k`.
fn residues(ring: Ring, p: u64, k: i64, d: i64) -> Vec<QuadExtElem> {
    let n = pow_p(p, k as u32).to_i64().expect("residue count fits in i64");
    match ring {
        Ring::OF0 => (0..n).map(|a| QuadExtElem::from_int(a, d)).collect(),
        Ring::OF => (0..n)
            .flat_map(|a| (0..n).map(move |b| QuadExtElem::new(int(a), int(b), d)))
            .collect(),
    }
}

/// All lattices `L` with `M1 ⊆ L ⊆ M2`, sorted canonically.
pub fn lattices_between(m1: &Lattice, m2: &Lattice) -> Result<Vec<Lattice>, LatticeError> {
    lattices_between_filtered(m1, m2, None, |_| true)
}

/// Intermediate lattices with optional prescribed `v(det B_L)` and a filter.
pub fn lattices_between_filtered<F>(
    m1: &Lattice,
    m2: &Lattice,
    target_det_val: Option<i64>,
    pred: F,
) -> Result<Vec<Lattice>, LatticeError>
where
    F: Fn(&Lattice) -> bool + Sync,
{
    if m1.ring != m2.ring || m1.dim() != m2.dim() {
        return Err(LatticeError::Mismatch);
    }
    let (c, e) = relative_smith(m1, m2)?;
    let p = m1.p;
    let ring = m1.ring;
    let d = m1.d();
    let n = m1.dim();
    let base_val = c.det().valuation(p).unwrap();
    let budget = target_det_val.map(|t| t - base_val);
    let total: i64 = e.iter().sum();
    if let Some(b) = budget {
        if b < 0 || b > total {
            return Ok(Vec::new());
        }
    }
    let mut kvecs = Vec::new();
    let mut cur = vec![0i64; n];
    enumerate_exponents(&e, 0, &mut cur, budget, &mut kvecs);
    let tmats: Vec<Mat> =
        kvecs.par_iter().flat_map_iter(|k| triangular_candidates(k, &e, ring, p, d)).collect();
    let mut out: Vec<Lattice> = tmats
        .into_par_iter()
        .filter_map(|t| {
            let l = Lattice::new(ring, c.mul(&t), p).ok()?;
            if pred(&l) {
                Some(l)
            } else {
                None
            }
        })
        .collect();
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out.dedup();
    Ok(out)
}

fn enumerate_exponents(e: &[i64], i: usize, cur: &mut Vec<i64>, budget: Option<i64>, out: &mut Vec<Vec<i64>>) {
    if i == e.len() {
        if budget.map_or(true, |b| cur.iter().sum::<i64>() == b) {
            out.push(cur.clone());
        }
        return;
    }
    let used: i64 = cur[..i].iter().sum();
    for k in 0..=e[i] {
        if let Some(b) = budget {
            let rest: i64 = e[i + 1..].iter().sum();
            if used + k > b || used + k + rest < b {
                continue;
            }
        }
        cur[i] = k;
        enumerate_exponents(e, i + 1, cur, budget, out);
    }
    cur[i] = 0;
}

/// Upper-triangular HNF matrices `T` with diagonal `p^k` whose column span
/// contains `diag(p^e) O^m`, built column by column with pruning.
fn triangular_candidates(k: &[i64], e: &[i64], ring: Ring, p: u64, d: i64) -> Vec<Mat> {
    let n = k.len();
    let res: Vec<Vec<QuadExtElem>> = k.iter().map(|&ki| residues(ring, p, ki, d)).collect();
    let mut t = Mat::zeros(n, n, d);
    for i in 0..n {
        t[(i, i)] = QuadExtElem::from_rat(pow_p_rat(p, k[i]), d);
    }
    let mut out = Vec::new();
    fill_column(0, 0, &mut t, k, e, &res, p, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn fill_column(
    j: usize,
    i: usize,
    t: &mut Mat,
    k: &[i64],
    e: &[i64],
    res: &[Vec<QuadExtElem>],
    p: u64,
    out: &mut Vec<Mat>,
) {
    let n = k.len();
    if j == n {
        out.push(t.clone());
        return;
    }
    if i == j {
        if column_contains_target(t, j, k, e, p) {
            fill_column(j + 1, 0, t, k, e, res, p, out);
        }
        return;
    }
    for r in &res[i] {
        t[(i, j)] = r.clone();
        fill_column(j, i + 1, t, k, e, res, p, out);
    }
    t[(i, j)] = QuadExtElem::zero(t.d);
}

/// `p^{e_j} T^{-1} e_j` is integral, using the leading `(j+1)`-block.
fn column_contains_target(t: &Mat, j: usize, k: &[i64], e: &[i64], p: u64) -> bool {
    let mut x: Vec<QuadExtElem> = vec![QuadExtElem::zero(t.d); j + 1];
    x[j] = QuadExtElem::from_rat(pow_p_rat(p, e[j] - k[j]), t.d);
    for i in (0..j).rev() {
        let mut s = QuadExtElem::zero(t.d);
        for l in i + 1..=j {
            s = s + &t[(i, l)] * &x[l];
        }
        x[i] = (-s).scale(&pow_p_rat(p, -k[i]));
        if !x[i].is_integral(p) {
            return false;
        }
    }
    true
}

/// Number of subgroups of `⊕ Z/p^{e_i}` in the rank-1 and elementary
/// abelian cases, used as a cross-check helper.
pub fn count_subgroups_elementary(p: u64, r: u32) -> BigInt {
    let mut total = BigInt::zero();
    for k in 0..=r {
        total += gaussian_binomial(p, r, k);
    }
    total
}

fn gaussian_binomial(p: u64, n: u32, k: u32) -> BigInt {
    let pb = BigInt::from(p);
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for i in 0..k {
        num *= num_traits::pow(pb.clone(), (n - i) as usize) - 1;
        den *= num_traits::pow(pb.clone(), (i + 1) as usize) - 1;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(ring: Ring, rows: &[&[i64]], p: u64) -> Lattice {
        Lattice::new(ring, Mat::from_ints(rows, -1), p).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let l = lat(Ring::OF0, &[&[1, 0], &[0, 1]], 3);
        assert!(l.basis().is_identity());
        let l = lat(Ring::OF0, &[&[3, 1], &[0, 1]], 3);
        assert_eq!(l.basis(), &Mat::from_ints(&[&[3, 1], &[0, 1]], -1));
        let l = lat(Ring::OF0, &[&[3, 4], &[0, 1]], 3);
        assert_eq!(l.basis(), &Mat::from_ints(&[&[3, 1], &[0, 1]], -1));
        let a = lat(Ring::OF0, &[&[2, 1], &[1, 1]], 3);
        assert!(a.basis().is_identity());
    }

    #[test]
    fn duals_and_indices() {
        let sp = HermSpace::standard(2, -1);
        let std = Lattice::standard(Ring::OF, 2, 3, -1);
        assert_eq!(std.dual(&sp).unwrap(), std);
        let pl = std.scale_pk(1);
        assert_eq!(pl.dual(&sp).unwrap(), std.scale_pk(-1));
        assert_eq!(pl.index(&std), 2);
        assert_eq!(std.index(&pl), -2);
    }

    #[test]
    fn between_counts() {
        let std = Lattice::standard(Ring::OF0, 2, 3, -1);
        let all = lattices_between(&std.scale_pk(1), &std).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(count_subgroups_elementary(3, 2), BigInt::from(6));
        let one = Lattice::standard(Ring::OF0, 1, 3, -1);
        assert_eq!(lattices_between(&one.scale_pk(2), &one).unwrap().len(), 3);
        assert_eq!(lattices_between(&one, &one).unwrap(), vec![one.clone()]);
        let f = Lattice::standard(Ring::OF, 1, 3, -1);
        assert_eq!(lattices_between(&f.scale_pk(2), &f).unwrap().len(), 3);
        let f2 = Lattice::standard(Ring::OF, 2, 3, -1);
        assert_eq!(lattices_between(&f2.scale_pk(1), &f2).unwrap().len(), 1 + 10 + 1);
    }

    #[test]
    fn intersect_base_field() {
        let d = -1;
        let b = Mat::from_rows(
            vec![
                vec![QuadExtElem::new(int(1), int(1), d), QuadExtElem::zero(d)],
                vec![QuadExtElem::zero(d), QuadExtElem::from_int(3, d)],
            ],
            d,
        );
        let l = Lattice::new(Ring::OF, b, 3).unwrap();
        let r = l.intersect_base().unwrap();
        assert_eq!(r, Lattice::new(Ring::OF0, Mat::from_ints(&[&[1, 0], &[0, 3]], d), 3).unwrap());
    }
}
