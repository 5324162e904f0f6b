//! Dense matrices and polynomials over `Q(sqrt d)` with exact arithmetic.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::padic::{int, QuadExtElem, Rat};

/// Column vector over `Q(sqrt d)`.
pub type Vector = Vec<QuadExtElem>;

/// Dense row-major matrix over `Q(sqrt d)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub d: i64,
    data: Vec<QuadExtElem>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = QuadExtElem;
    fn index(&self, (i, j): (usize, usize)) -> &QuadExtElem {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut QuadExtElem {
        &mut self.data[i * self.cols + j]
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize, d: i64) -> Self {
        Self { rows, cols, d, data: vec![QuadExtElem::zero(d); rows * cols] }
    }

    pub fn identity(n: usize, d: i64) -> Self {
        let mut m = Self::zeros(n, n, d);
        for i in 0..n {
            m[(i, i)] = QuadExtElem::one(d);
        }
        m
    }

    pub fn scalar(n: usize, x: &QuadExtElem) -> Self {
        let mut m = Self::zeros(n, n, x.d);
        for i in 0..n {
            m[(i, i)] = x.clone();
        }
        m
    }

    pub fn diag(entries: &[QuadExtElem], d: i64) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n, d);
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<QuadExtElem>>, d: i64) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend(row);
        }
        Self { rows: r, cols: c, d, data }
    }

    /// Matrix with rational entries given as integers.
    pub fn from_ints(rows: &[&[i64]], d: i64) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| QuadExtElem::from_int(x, d)).collect())
                .collect(),
            d,
        )
    }

    pub fn from_rats(rows: Vec<Vec<Rat>>, d: i64) -> Self {
        Self::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| QuadExtElem::from_rat(x, d)).collect())
                .collect(),
            d,
        )
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vector], d: i64) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c, d);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..r {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vector {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[QuadExtElem]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i].clone();
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &QuadExtElem> {
        self.data.iter()
    }

    pub fn map(&self, f: impl Fn(&QuadExtElem) -> QuadExtElem) -> Self {
        Self { rows: self.rows, cols: self.cols, d: self.d, data: self.data.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Mat {
        self.map(|x| -x)
    }

    pub fn scale(&self, s: &QuadExtElem) -> Mat {
        self.map(|x| x * s)
    }

    pub fn scale_rat(&self, s: &Rat) -> Mat {
        self.map(|x| x.scale(s))
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let mut out = Mat::zeros(self.rows, o.cols, self.d);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = &out[(i, j)] + &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[QuadExtElem]) -> Vector {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = QuadExtElem::zero(self.d);
                for j in 0..self.cols {
                    acc = acc + &self[(i, j)] * &v[j];
                }
                acc
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[QuadExtElem]) -> Vector {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = QuadExtElem::zero(self.d);
                for i in 0..self.rows {
                    acc = acc + &v[i] * &self[(i, j)];
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, e: u32) -> Mat {
        let mut acc = Mat::identity(self.rows, self.d);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows, self.d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Entrywise Galois conjugate.
    pub fn conj(&self) -> Mat {
        self.map(|x| x.conj())
    }

    /// Conjugate transpose.
    pub fn h(&self) -> Mat {
        self.transpose().conj()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Mat::identity(self.rows, self.d)
    }

    pub fn is_rational(&self) -> bool {
        self.data.iter().all(|x| x.is_rational())
    }

    pub fn trace(&self) -> QuadExtElem {
        let mut acc = QuadExtElem::zero(self.d);
        for i in 0..self.rows.min(self.cols) {
            acc = acc + &self[(i, i)];
        }
        acc
    }

    /// Minimal valuation of the entries; `None` for the zero matrix.
    pub fn min_valuation(&self, p: u64) -> Option<i64> {
        self.data.iter().fold(None, |acc, x| crate::padic::vmin(acc, x.valuation(p)))
    }

    /// True when every entry is p-integral.
    pub fn is_integral(&self, p: u64) -> bool {
        self.data.iter().all(|x| x.is_integral(p))
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        let mut out = Mat::zeros(r1 - r0, c1 - c0, self.d);
        for i in r0..r1 {
            for j in c0..c1 {
                out[(i - r0, j - c0)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// `[[a, b], [c, e]]` with `b` a column, `c` a row and `e` a scalar.
    pub fn bordered(a: &Mat, b: &[QuadExtElem], c: &[QuadExtElem], e: &QuadExtElem) -> Mat {
        let n = a.rows;
        let mut out = Mat::zeros(n + 1, n + 1, a.d);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a[(i, j)].clone();
            }
            out[(i, n)] = b[i].clone();
            out[(n, i)] = c[i].clone();
        }
        out[(n, n)] = e.clone();
        out
    }

    /// Block-diagonal `diag(a, b)`.
    pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
        let (n, k) = (a.rows, b.rows);
        let mut out = Mat::zeros(n + k, n + k, a.d);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a[(i, j)].clone();
            }
        }
        for i in 0..k {
            for j in 0..k {
                out[(n + i, n + j)] = b[(i, j)].clone();
            }
        }
        out
    }

    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> QuadExtElem {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = QuadExtElem::one(self.d);
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| !a[(r, c)].is_zero()) else {
                return QuadExtElem::zero(self.d);
            };
            if piv != c {
                a.swap_rows(piv, c);
                det = -det;
            }
            let pv = a[(c, c)].clone();
            det = &det * &pv;
            let inv = pv.inv();
            for r in c + 1..n {
                if a[(r, c)].is_zero() {
                    continue;
                }
                let f = &a[(r, c)] * &inv;
                for k in c..n {
                    let t = &f * &a[(c, k)];
                    a[(r, k)] = &a[(r, k)] - &t;
                }
            }
        }
        det
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.rows {
            self.data.swap(k * self.cols + i, k * self.cols + j);
        }
    }

    /// Inverse, or `None` when singular.
    pub fn inverse(&self) -> Option<Mat> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n, self.d);
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[(r, c)].is_zero())?;
            a.swap_rows(piv, c);
            inv.swap_rows(piv, c);
            let pinv = a[(c, c)].inv();
            for k in 0..n {
                a[(c, k)] = &a[(c, k)] * &pinv;
                inv[(c, k)] = &inv[(c, k)] * &pinv;
            }
            for r in 0..n {
                if r == c || a[(r, c)].is_zero() {
                    continue;
                }
                let f = a[(r, c)].clone();
                for k in 0..n {
                    let t = &f * &a[(c, k)];
                    a[(r, k)] = &a[(r, k)] - &t;
                    let t = &f * &inv[(c, k)];
                    inv[(r, k)] = &inv[(r, k)] - &t;
                }
            }
        }
        Some(inv)
    }

    /// Rank by row reduction.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut r = 0;
        for c in 0..a.cols {
            let Some(piv) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
                continue;
            };
            a.swap_rows(piv, r);
            let pinv = a[(r, c)].inv();
            for i in r + 1..a.rows {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let f = &a[(i, c)] * &pinv;
                for k in c..a.cols {
                    let t = &f * &a[(r, k)];
                    a[(i, k)] = &a[(i, k)] - &t;
                }
            }
            r += 1;
            if r == a.rows {
                break;
            }
        }
        r
    }

    /// `det(T - A)` as a monic polynomial (Faddeev-LeVerrier).
    pub fn charpoly(&self) -> Poly {
        assert!(self.is_square());
        let n = self.rows;
        let d = self.d;
        let mut c = vec![QuadExtElem::zero(d); n + 1];
        c[n] = QuadExtElem::one(d);
        let mut m = Mat::zeros(n, n, d);
        for k in 1..=n {
            let prev = c[n + 1 - k].clone();
            m = self.mul(&m).add(&Mat::scalar(n, &prev));
            let t = self.mul(&m).trace();
            c[n - k] = -t.scale(&int(k as i64).recip());
        }
        Poly::new(c, d)
    }

    /// Companion matrix of a monic polynomial: ones on the subdiagonal and
    /// last column `-c_0, ..., -c_{m-1}`, so `e_1` is a cyclic vector.
    pub fn companion(p: &Poly) -> Mat {
        let m = p.degree().expect("companion of zero polynomial");
        assert!(p.lead().is_one(), "companion of a non-monic polynomial");
        let mut out = Mat::zeros(m, m, p.d);
        for i in 1..m {
            out[(i, i - 1)] = QuadExtElem::one(p.d);
        }
        for i in 0..m {
            out[(i, m - 1)] = -p.coeff(i);
        }
        out
    }

    /// Krylov matrix `[v, Av, ..., A^{k-1} v]`.
    pub fn krylov(&self, v: &[QuadExtElem], k: usize) -> Mat {
        let mut cols = Vec::with_capacity(k);
        let mut cur: Vector = v.to_vec();
        for _ in 0..k {
            let next = self.mul_vec(&cur);
            cols.push(cur);
            cur = next;
        }
        Mat::from_cols(&cols, self.d)
    }

    /// Row Krylov matrix with rows `w, wA, ..., wA^{k-1}`.
    pub fn krylov_rows(&self, w: &[QuadExtElem], k: usize) -> Mat {
        let mut rows = Vec::with_capacity(k);
        let mut cur: Vector = w.to_vec();
        for _ in 0..k {
            let next = self.vec_mul(&cur);
            rows.push(cur);
            cur = next;
        }
        Mat::from_rows(rows, self.d)
    }
}

/// Sesquilinear pairing `y^H G x`.
pub fn herm_pair(g: &Mat, x: &[QuadExtElem], y: &[QuadExtElem]) -> QuadExtElem {
    let gx = g.mul_vec(x);
    let mut acc = QuadExtElem::zero(g.d);
    for (yi, gi) in y.iter().zip(&gx) {
        acc = acc + &yi.conj() * gi;
    }
    acc
}

/// Plain bilinear dot product.
pub fn dot(x: &[QuadExtElem], y: &[QuadExtElem]) -> QuadExtElem {
    let d = x.first().map_or(-1, |e| e.d);
    let mut acc = QuadExtElem::zero(d);
    for (a, b) in x.iter().zip(y) {
        acc = acc + a * b;
    }
    acc
}

pub fn vec_scale(v: &[QuadExtElem], s: &QuadExtElem) -> Vector {
    v.iter().map(|x| x * s).collect()
}

pub fn vec_add(a: &[QuadExtElem], b: &[QuadExtElem]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[QuadExtElem], b: &[QuadExtElem]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_conj(a: &[QuadExtElem]) -> Vector {
    a.iter().map(|x| x.conj()).collect()
}

pub fn unit_vector(n: usize, i: usize, d: i64) -> Vector {
    (0..n)
        .map(|k| if k == i { QuadExtElem::one(d) } else { QuadExtElem::zero(d) })
        .collect()
}

/// Polynomial with coefficients listed from low to high degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    pub d: i64,
    coeffs: Vec<QuadExtElem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<QuadExtElem>, d: i64) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { d, coeffs }
    }

    pub fn from_rats(c: &[Rat], d: i64) -> Self {
        Self::new(c.iter().map(|x| QuadExtElem::from_rat(x.clone(), d)).collect(), d)
    }

    pub fn zero(d: i64) -> Self {
        Self { d, coeffs: vec![] }
    }

    pub fn one(d: i64) -> Self {
        Self::new(vec![QuadExtElem::one(d)], d)
    }

    /// The monomial `T`.
    pub fn x(d: i64) -> Self {
        Self::new(vec![QuadExtElem::zero(d), QuadExtElem::one(d)], d)
    }

    pub fn coeffs(&self) -> &[QuadExtElem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> QuadExtElem {
        self.coeffs.get(i).cloned().unwrap_or_else(|| QuadExtElem::zero(self.d))
    }

    pub fn lead(&self) -> QuadExtElem {
        self.coeffs.last().cloned().unwrap_or_else(|| QuadExtElem::zero(self.d))
    }

    pub fn eval(&self, x: &QuadExtElem) -> QuadExtElem {
        let mut acc = QuadExtElem::zero(self.d);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Evaluation at a square matrix.
    pub fn eval_mat(&self, a: &Mat) -> Mat {
        let mut acc = Mat::zeros(a.rows, a.cols, self.d);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(a).add(&Mat::scalar(a.rows, c));
        }
        acc
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect(), self.d)
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect(), self.d)
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.d);
        }
        let mut c = vec![QuadExtElem::zero(self.d); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] = &c[i + j] + &(a * b);
            }
        }
        Poly::new(c, self.d)
    }

    pub fn scale(&self, s: &QuadExtElem) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect(), self.d)
    }

    pub fn conj(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c.conj()).collect(), self.d)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c.scale(&int(i as i64))).collect(),
            self.d,
        )
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lead().inv())
    }

    /// Euclidean division `self = q * o + r`.
    pub fn divrem(&self, o: &Poly) -> (Poly, Poly) {
        let od = o.degree().expect("division by zero polynomial");
        let linv = o.lead().inv();
        let mut r = self.coeffs.clone();
        let mut q = vec![QuadExtElem::zero(self.d); self.coeffs.len().saturating_sub(od).max(1)];
        while r.len() > od && !r.is_empty() {
            let k = r.len() - 1 - od;
            let f = &r[r.len() - 1] * &linv;
            for (i, c) in o.coeffs.iter().enumerate() {
                r[k + i] = &r[k + i] - &(&f * c);
            }
            q[k] = f;
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        (Poly::new(q, self.d), Poly::new(r, self.d))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree() == Some(0)
    }

    /// `T^m p(1/T)`.
    pub fn reciprocal(&self) -> Poly {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly::new(c, self.d)
    }

    /// `p(c T)`.
    pub fn compose_scale(&self, c: &QuadExtElem) -> Poly {
        let mut pw = QuadExtElem::one(self.d);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a * &pw);
            pw = &pw * c;
        }
        Poly::new(out, self.d)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_rational())
    }

    pub fn is_integral(&self, p: u64) -> bool {
        self.coeffs.iter().all(|c| c.is_integral(p))
    }

    /// Conjugate self-reciprocity `T^m a(1/T) = a(0) conj(a)(T)`.
    pub fn is_conj_self_reciprocal(&self) -> bool {
        !self.coeff(0).is_zero() && self.reciprocal() == self.conj().scale(&self.coeff(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse() {
        let a = Mat::from_ints(&[&[2, 1], &[1, 3]], -1);
        assert_eq!(a.det(), QuadExtElem::from_int(5, -1));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        let s = Mat::from_ints(&[&[1, 2], &[2, 4]], -1);
        assert!(s.inverse().is_none());
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn charpoly_matches_determinant() {
        let a = Mat::from_ints(&[&[1, 2, 0], &[0, 3, 1], &[4, 0, 1]], -2);
        let cp = a.charpoly();
        for t in -3..4 {
            let tq = QuadExtElem::from_int(t, -2);
            let m = Mat::scalar(3, &tq).sub(&a);
            assert_eq!(cp.eval(&tq), m.det());
        }
        let comp = Mat::companion(&cp);
        assert_eq!(comp.charpoly(), cp);
        assert!(cp.eval_mat(&a).is_zero());
    }

    #[test]
    fn poly_gcd() {
        let d = -1;
        let x = Poly::x(d);
        let one = Poly::one(d);
        let a = x.sub(&one).mul(&x.add(&one));
        let b = x.sub(&one).mul(&x.sub(&one));
        assert_eq!(a.gcd(&b), x.sub(&one));
        assert!(a.is_squarefree());
        assert!(!b.is_squarefree());
        let (q, r) = a.divrem(&x.sub(&one));
        assert!(r.is_zero());
        assert_eq!(q, x.add(&one));
    }
}
