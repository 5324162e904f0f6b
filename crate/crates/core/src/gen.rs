//! Seeded random generators for matrices, orbits and matched pairs.

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::{HermSpace, Lattice, Ring};
use crate::weil::{Schwartz, Term, WeilCtx};
use crate::linalg::{Mat, Poly, Vector};
use crate::orbit::{cayley, matching_symmetric, CayleyDirection, OrbitError, SemiLiePair};
use crate::padic::{int, pow_p_rat, QuadExtElem, Rat};

/// Deterministic generator used by tests, sweeps and the CLI.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `a/b` with `|a| <= bound` and `1 <= b <= bound`.
pub fn small_rat<R: Rng>(rng: &mut R, bound: i64) -> Rat {
    let a = rng.gen_range(-bound..=bound);
    let b = rng.gen_range(1..=bound.max(1));
    Rat::new(BigInt::from(a), BigInt::from(b))
}

/// A p-adic unit in `Z` of absolute value at most `bound`.
pub fn unit_int<R: Rng>(rng: &mut R, p: u64, bound: i64) -> i64 {
    loop {
        let a = rng.gen_range(-bound..=bound);
        if a != 0 && a.rem_euclid(p as i64) != 0 {
            return a;
        }
    }
}

/// `p^v` times a ratio of small p-adic units.
pub fn rat_with_valuation<R: Rng>(rng: &mut R, p: u64, v: i64, bound: i64) -> Rat {
    let a = unit_int(rng, p, bound);
    let b = unit_int(rng, p, bound).abs();
    pow_p_rat(p, v) * Rat::new(BigInt::from(a), BigInt::from(b))
}

pub fn small_quad<R: Rng>(rng: &mut R, d: i64, bound: i64) -> QuadExtElem {
    QuadExtElem::new(small_rat(rng, bound), small_rat(rng, bound), d)
}

/// `(a + b sqrt d) / (a - b sqrt d)` for small integers `a, b`.
pub fn norm_one<R: Rng>(rng: &mut R, d: i64, bound: i64) -> QuadExtElem {
    loop {
        let a = rng.gen_range(-bound..=bound);
        let b = rng.gen_range(-bound..=bound);
        if a != 0 || b != 0 {
            let z = QuadExtElem::new(int(a), int(b), d);
            return &z / &z.conj();
        }
    }
}

pub fn rational_matrix<R: Rng>(rng: &mut R, m: usize, d: i64, bound: i64) -> Mat {
    Mat::from_rats((0..m).map(|_| (0..m).map(|_| small_rat(rng, bound)).collect()).collect(), d)
}

pub fn rational_vector<R: Rng>(rng: &mut R, m: usize, d: i64, bound: i64) -> Vector {
    (0..m).map(|_| QuadExtElem::from_rat(small_rat(rng, bound), d)).collect()
}

/// Invertible rational matrix.
pub fn gl_rational<R: Rng>(rng: &mut R, m: usize, d: i64, bound: i64) -> Mat {
    loop {
        let h = rational_matrix(rng, m, d, bound);
        if !h.det().is_zero() {
            return h;
        }
    }
}

/// `A` with `A^H = -A`.
pub fn anti_hermitian<R: Rng>(rng: &mut R, m: usize, d: i64, bound: i64) -> Mat {
    let mut a = Mat::zeros(m, m, d);
    for i in 0..m {
        a[(i, i)] = QuadExtElem::new(int(0), small_rat(rng, bound), d);
        for j in i + 1..m {
            let z = small_quad(rng, d, bound);
            a[(j, i)] = -z.conj();
            a[(i, j)] = z;
        }
    }
    a
}

/// Cayley image of a random element of the Lie algebra of `U(space)`.
pub fn unitary<R: Rng>(rng: &mut R, space: &HermSpace, bound: i64) -> Mat {
    let m = space.dim();
    let d = space.gram.d;
    let ginv = space.gram.inverse().expect("nondegenerate");
    loop {
        let x = ginv.mul(&anti_hermitian(rng, m, d, bound));
        if let Ok(g) = cayley(&x, CayleyDirection::ToGroup) {
            return g;
        }
    }
}

/// Cayley image of `sqrt(d)` times a random rational matrix.
pub fn symmetric<R: Rng>(rng: &mut R, m: usize, d: i64, bound: i64) -> Mat {
    let sq = QuadExtElem::sqrt_d(d);
    loop {
        let y = rational_matrix(rng, m, d, bound).scale(&sq);
        if let Ok(g) = cayley(&y, CayleyDirection::ToGroup) {
            return g;
        }
    }
}

/// Random rational diagonal hermitian space.
pub fn diagonal_space<R: Rng>(rng: &mut R, m: usize, d: i64, p: u64, vmax: i64) -> HermSpace {
    let mut diag = Vec::with_capacity(m);
    for _ in 0..m {
        let v = rng.gen_range(0..=vmax);
        diag.push(QuadExtElem::from_rat(rat_with_valuation(rng, p, v, 4), d));
    }
    HermSpace::new(Mat::diag(&diag, d)).expect("nondegenerate")
}

/// `gamma = c(sqrt(d) C_chi)` with a random rational monic `chi` and
/// integer vectors `u1, u2`.
pub fn semilie_from_companion<R: Rng>(
    rng: &mut R,
    m: usize,
    d: i64,
    bound: i64,
) -> Result<SemiLiePair, OrbitError> {
    let sq = QuadExtElem::sqrt_d(d);
    let mut c: Vec<Rat> = (0..m).map(|_| small_rat(rng, bound)).collect();
    c.push(int(1));
    let chi = Poly::from_rats(&c, d);
    let gamma = cayley(&Mat::companion(&chi).scale(&sq), CayleyDirection::ToGroup)?;
    let iv = |rng: &mut R| -> Vector {
        (0..m).map(|_| QuadExtElem::from_int(rng.gen_range(-bound..=bound), d)).collect()
    };
    let u1 = iv(rng);
    let u2 = iv(rng);
    SemiLiePair::new(gamma, u1, u2)
}

/// A unitary `g'` on `V_m ⊕ F u_0` with `<u_0,u_0> = 1` together with its
/// matching `gamma' ∈ S_{m+1}`.
pub fn matched_pair<R: Rng>(rng: &mut R, space: &HermSpace, bound: i64) -> Option<(Mat, Mat)> {
    let d = space.gram.d;
    let big = HermSpace::new(Mat::block_diag(&space.gram, &Mat::identity(1, d))).ok()?;
    let gp = unitary(rng, &big, bound);
    let gam = matching_symmetric(&gp, space).ok()?;
    Some((gam, gp))
}

/// Vector with entries `a p^{-e}`, `|a| <= 4`, `e ∈ {0, 1}`.
pub fn padic_vector<R: Rng>(rng: &mut R, n: usize, p: u64, d: i64) -> Vector {
    (0..n)
        .map(|_| QuadExtElem::from_rat(int(rng.gen_range(-4i64..=4)) * pow_p_rat(p, -rng.gen_range(0..=1)), d))
        .collect()
}

/// Full-rank `O_{F_0}`-lattice with entries `a p^e`, `|a| <= 3`, `|e| <= 1`.
pub fn padic_lattice<R: Rng>(rng: &mut R, n: usize, p: u64, d: i64) -> Lattice {
    loop {
        let m = Mat::from_rats(
            (0..n).map(|_| (0..n).map(|_| int(rng.gen_range(-3i64..=3)) * pow_p_rat(p, rng.gen_range(-1..=1))).collect()).collect(),
            d,
        );
        if !m.det().is_zero() {
            return Lattice::new(Ring::OF0, m, p).expect("nonsingular basis");
        }
    }
}

/// Random sum of two twisted coset indicators `c ψ(<x, α>) 1_{μ + L}(x)`.
pub fn coset_function<R: Rng>(rng: &mut R, w: &WeilCtx) -> Schwartz {
    let n = w.space.dim();
    let d = w.space.d();
    let terms = (0..2)
        .map(|_| Term {
            coef: w.scalar(int(rng.gen_range(1i64..=5))),
            alpha: padic_vector(rng, n, w.p, d),
            mu: padic_vector(rng, n, w.p, d),
            lattice: padic_lattice(rng, n, w.p, d),
        })
        .collect();
    Schwartz { terms }
}
