//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use jr_core::arch::{
    nilpotent_arch, nilpotent_arch_tate, orb_arch, orb_arch_quadrature, orb_arch_special, Iwasawa,
};
use jr_core::gen;
use jr_core::lattice::{HermSpace, Lattice, Ring};
use jr_core::linalg::Mat;
use jr_core::orbit::{
    check_symmetric_identities, check_unitary_identities, lift_symmetric, lift_unitary, matches, reduce_symmetric,
    reduce_unitary, OrbitError, SemiLiePair, Side, UnitaryPair, Variant,
};
use jr_core::orbital::{fl_sweep, fl_verify, is_maximal_order, orb_reduction_check, OrbitalError};
use jr_core::padic::{int, rat, LocalFieldCtx, QuadExtElem, Rat};
use jr_core::series::{fl_difference_series, support_check, tate_fe_check, LogLinear};
use jr_core::weil::{
    agree, fourier, orbit_transform_check_semilie, orbit_transform_check_unitary, weil_constant, FourthRoot, QuadSpace,
    WeilCtx,
};
use num_complex::Complex64;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn criterion1() -> Verdict {
    let t = Instant::now();
    let mut n = 0;
    let mut bad = 0;
    let mut valuations = BTreeSet::new();
    for p in [3u64, 5] {
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        for (iv, r) in fl_sweep(&ctx, 1, 4, 0) {
            n += 1;
            valuations.insert(iv.moments[0].valuation(p));
            match r {
                Ok(r) if r.verdict => {}
                _ => bad += 1,
            }
        }
    }
    let el = t.elapsed();
    verdict(
        bad == 0 && n >= 40 && valuations.len() == 5 && el < Duration::from_secs(10),
        format!("{n} rank-1 instances, {bad} failures, valuations 0..=4, {}", secs(el)),
    )
}

fn criterion2() -> Verdict {
    let t = Instant::now();
    let mut n = 0;
    let mut bad = 0;
    for p in [3u64, 5] {
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        for s in 0..80 {
            let mut rng = gen::seeded(s);
            let Ok(x) = gen::semilie_from_companion(&mut rng, 2, ctx.d, 3) else { continue };
            if !x.is_strongly_rs() || !x.gamma.charpoly().is_integral(p) || !is_maximal_order(&x.gamma, &ctx).unwrap() {
                continue;
            }
            n += 1;
            match fl_verify(&x.invariants(), &ctx) {
                Ok(r) => {
                    let count = int(r.orb_u.unwrap_or(0) as i64);
                    let side_ok = r.side == Side::Split || r.orb_u.is_none();
                    if !(r.verdict && side_ok && r.orb_gl_special.value0 == count) {
                        bad += 1;
                    }
                }
                Err(_) => bad += 1,
            }
        }
    }
    let el = t.elapsed();
    verdict(
        bad == 0 && n >= 20 && el < Duration::from_secs(600),
        format!("{n} maximal-order rank-2 instances, {bad} failures, {}", secs(el)),
    )
}

fn criterion3() -> Verdict {
    let d = -1;
    let mut counts = Vec::new();
    let mut bad = 0;
    for m in 1..=2usize {
        let space = HermSpace::standard(m, d);
        let big = HermSpace::new(Mat::block_diag(&space.gram, &Mat::identity(1, d))).unwrap();
        let mut rng = gen::seeded(300 + m as u64);
        let (mut nu, mut ns) = (0, 0);
        let mut tries = 0;
        while (nu < 100 || ns < 100) && tries < 5000 {
            tries += 1;
            let xi = gen::norm_one(&mut rng, d, 3);
            if nu < 100 {
                let gp = gen::unitary(&mut rng, &big, 2);
                match check_unitary_identities(&gp, &space, &xi) {
                    Ok(ok) => {
                        let lifts = [Variant::R, Variant::RNatural].iter().all(|&v| {
                            reduce_unitary(&gp, &space, v, &xi)
                                .and_then(|r| lift_unitary(&r, &space))
                                .is_ok_and(|g| g == gp)
                        });
                        bad += (!ok || !lifts) as usize;
                        nu += 1;
                    }
                    Err(OrbitError::OutsideOpenLocus | OrbitError::SingularDenominator) => {}
                    Err(_) => bad += 1,
                }
            }
            if ns < 100 {
                let gp = gen::symmetric(&mut rng, m + 1, d, 2);
                match check_symmetric_identities(&gp, &xi) {
                    Ok(ok) => {
                        let lifts = [Variant::R, Variant::RNatural].iter().all(|&v| {
                            reduce_symmetric(&gp, v, &xi).and_then(|r| lift_symmetric(&r)).is_ok_and(|g| g == gp)
                        });
                        bad += (!ok || !lifts) as usize;
                        ns += 1;
                    }
                    Err(OrbitError::OutsideOpenLocus | OrbitError::SingularDenominator) => {}
                    Err(_) => bad += 1,
                }
            }
        }
        counts.push((m + 1, nu, ns));
    }
    let enough = counts.iter().all(|&(_, nu, ns)| nu >= 100 && ns >= 100);
    verdict(bad == 0 && enough, format!("(m+1, unitary, symmetric) points {counts:?}, {bad} failures"))
}

fn criterion4() -> Verdict {
    let d = -1;
    let ctx = LocalFieldCtx::new(3, d).unwrap();
    let mut rng = gen::seeded(404);
    let (mut n, mut bad, mut tries) = (0, 0, 0);
    while n < 20 && tries < 2000 {
        tries += 1;
        let gam = gen::symmetric(&mut rng, 2, d, 3);
        let xi = gen::norm_one(&mut rng, d, 2);
        match orb_reduction_check(&gam, None, &xi, &ctx) {
            Ok(ok) => {
                bad += !ok as usize;
                n += 1;
            }
            Err(OrbitalError::PreconditionFailed(_)) | Err(OrbitalError::Orbit(OrbitError::OutsideOpenLocus)) => {}
            Err(_) => bad += 1,
        }
    }
    verdict(bad == 0 && n >= 20, format!("{n} admissible pairs at p = 3 ({tries} drawn), {bad} disagreements"))
}

fn criterion5() -> Verdict {
    let d = -1;
    let (mut n, mut bad, mut tries) = (0, 0, 0);
    let mut rng = gen::seeded(505);
    while n < 20 && tries < 2000 {
        tries += 1;
        let m = 1 + (tries % 2);
        let space = HermSpace::standard(m, d);
        let Some((gam, gp)) = gen::matched_pair(&mut rng, &space, 2) else { continue };
        let xi = gen::norm_one(&mut rng, d, 2);
        let mut all = true;
        let mut open = true;
        for v in [Variant::R, Variant::RNatural] {
            let s = reduce_symmetric(&gam, v, &xi).and_then(|r| r.pair());
            let u = reduce_unitary(&gp, &space, v, &xi).and_then(|r| UnitaryPair::new(space.clone(), r.g, r.u));
            match (s, u) {
                (Ok(s), Ok(u)) => all &= matches(&s, &u),
                _ => open = false,
            }
        }
        if open {
            n += 1;
            bad += !all as usize;
        }
    }
    verdict(bad == 0 && n >= 20, format!("{n} matched pairs reduced by r and r-natural, {bad} mismatches"))
}

fn weil_spaces(seed: u64) -> Vec<WeilCtx> {
    let mut rng = gen::seeded(seed);
    let mut out = Vec::new();
    for p in [3u64, 5] {
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        out.push(WeilCtx::from_hermitian(&gen::diagonal_space(&mut rng, 1, ctx.d, p, 1), &ctx, 4));
        out.push(WeilCtx::from_quadratic(QuadSpace::hyperbolic(1, ctx.d), &ctx, 4).unwrap());
        let s = Mat::diag(&[QuadExtElem::from_int(2, ctx.d), QuadExtElem::from_int(2 * p as i64, ctx.d)], ctx.d);
        out.push(WeilCtx::from_quadratic(QuadSpace::new(s).unwrap(), &ctx, 4).unwrap());
    }
    out
}

fn criterion6() -> Verdict {
    let mut inv = (0, 0);
    for (i, w) in weil_spaces(61).iter().enumerate() {
        let mut rng = gen::seeded(600 + i as u64);
        for _ in 0..9 {
            let f = gen::coset_function(&mut rng, w);
            let ok = fourier(&f, w).and_then(|g| fourier(&g, w)).and_then(|ff| agree(&ff, &f.reflect(), w));
            inv.0 += 1;
            inv.1 += ok.unwrap_or(false) as usize;
        }
    }
    let mut sq = (0, 0);
    let mut split = (0, 0);
    let mut rng = gen::seeded(62);
    for p in [3u64, 5] {
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        for m in 1..=3 {
            for _ in 0..4 {
                let h = gen::diagonal_space(&mut rng, m, ctx.d, p, 2);
                let w = WeilCtx::from_hermitian(&h, &ctx, 1);
                sq.0 += 1;
                sq.1 += (w.gamma.mul(w.gamma) == FourthRoot::from_sign(w.chi(&int(-1)))) as usize;
            }
            split.0 += 1;
            split.1 += (weil_constant(&HermSpace::standard(m, ctx.d), &ctx) == FourthRoot::ONE) as usize;
            let hyp = WeilCtx::from_quadratic(QuadSpace::hyperbolic(m, ctx.d), &ctx, 1).unwrap();
            split.0 += 1;
            split.1 += (hyp.gamma == FourthRoot::ONE) as usize;
        }
    }
    let mut law = (0, 0);
    let d = -1;
    let ctx = LocalFieldCtx::new(3, d).unwrap();
    let q = |a: i64| QuadExtElem::from_int(a, d);
    let l0 = Lattice::standard(Ring::OF, 1, 3, d);
    let samples: [(i64, i64, Rat); 5] = [(1, 1, int(3)), (1, 2, int(2)), (3, 1, rat(1, 3)), (2, 3, int(9)), (1, 9, rat(2, 3))];
    for (u1, u2, a) in samples {
        let x = SemiLiePair::new(Mat::identity(1, d), vec![q(u1)], vec![q(u2)]).unwrap();
        law.0 += 1;
        law.1 += orbit_transform_check_semilie(&x, &a, &ctx).is_ok_and(|c| c.holds()) as usize;
        let u = UnitaryPair::new(HermSpace::standard(1, d), Mat::identity(1, d), vec![q(u1 * u2)]).unwrap();
        law.0 += 1;
        law.1 += orbit_transform_check_unitary(&u, &l0, &a, &ctx).is_ok_and(|c| c.holds()) as usize;
    }
    let ok = inv.0 >= 50 && inv.0 == inv.1 && sq.0 >= 20 && sq.0 == sq.1 && split.0 == split.1 && law.0 >= 10 && law.0 == law.1;
    verdict(
        ok,
        format!(
            "Fourier involution {}/{}, gamma^2 = chi(-1) {}/{}, split gamma = 1 {}/{}, m(a) law {}/{}",
            inv.1, inv.0, sq.1, sq.0, split.1, split.0, law.1, law.0
        ),
    )
}

/// `Ei(-x) = -∫_0^1 e^{-x/u} du/u`, composite Simpson on a fine grid.
fn ei_neg(x: f64) -> f64 {
    let n = 40_000;
    let h = 1.0 / n as f64;
    let f = |u: f64| if u == 0.0 { 0.0 } else { (-x / u).exp() / u };
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    -acc * h / 3.0
}

fn criterion7() -> Verdict {
    let id = Iwasawa::identity();
    let mut grid_max: f64 = 0.0;
    let mut grid_ok = true;
    for xi in [0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
        for s in [0.0, 0.5, 1.0] {
            match (orb_arch(xi, s, false, id), orb_arch_quadrature(xi, s, false)) {
                (Ok(c), Ok(q)) => grid_max = grid_max.max(c.distance(Complex64::new(q.value, 0.0))),
                _ => grid_ok = false,
            }
        }
    }
    let pi = std::f64::consts::PI;
    let mut special_max: f64 = 0.0;
    for xi in [0.25, 0.5, 1.0, 2.0, -0.25, -0.5, -1.0, -2.0] {
        let expected = if xi > 0.0 { (-pi * xi).exp() } else { 0.5 * (-pi * xi).exp() * ei_neg(2.0 * pi * xi.abs()) };
        let closed = orb_arch(xi, 0.0, xi < 0.0, id).unwrap().value;
        let special = orb_arch_special(xi, id).unwrap();
        let special = if xi > 0.0 { special.0 } else { special.1 }.value;
        let zero_value = if xi < 0.0 { orb_arch(xi, 0.0, false, id).unwrap().value.norm() } else { 0.0 };
        special_max = special_max.max((closed - expected).norm()).max((special - expected).norm()).max(zero_value);
    }
    let mut nil_max: f64 = 0.0;
    for s in [0.0f64, 1.0, 2.0] {
        let tate = nilpotent_arch_tate(s, 1e-13).unwrap();
        nil_max = nil_max.max((nilpotent_arch(s).value - tate.value).abs()).max((2f64.powf(s / 2.0 - 1.0) - tate.value).abs());
    }
    verdict(
        grid_ok && grid_max <= 1e-9 && special_max <= 1e-10 && nil_max <= 1e-9,
        format!("18-point grid max {grid_max:.1e}, special values max {special_max:.1e}, nilpotent vs Tate max {nil_max:.1e}"),
    )
}

fn criterion8() -> Verdict {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for disc in [-4, -3] {
        for s in [0.0, 0.3] {
            match tate_fe_check(disc, s, 50, 1e-6) {
                Ok(r) => {
                    ok &= r.pass && r.diff <= 1e-6 + r.tail_bound;
                    parts.push(format!("D={disc} s={s}: diff {:.1e} tail {:.1e}", r.diff, r.tail_bound));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("D={disc} s={s}: {e}"));
                }
            }
        }
    }
    let el = t.elapsed();
    verdict(ok && el < Duration::from_secs(60), format!("{}; {}", parts.join("; "), secs(el)))
}

fn criterion9() -> Verdict {
    let series = match fl_difference_series(&[3, 5], 30) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let zero = series.is_zero() && support_check(&series, &BTreeSet::new()).all_coprime_vanish;
    let mut planted = series.clone();
    planted.add_term(int(5), &LogLinear::log_term(3, int(-1))).unwrap();
    planted.add_term(int(9), &LogLinear::constant(int(2))).unwrap();
    planted.add_term(int(14), &LogLinear::constant(rat(1, 2))).unwrap();
    let b: BTreeSet<u64> = [3].into_iter().collect();
    let r = support_check(&planted, &b);
    let flagged = !r.all_coprime_vanish && r.witnesses == vec![int(5), int(14)];
    let all = support_check(&planted, &BTreeSet::new());
    let flagged_all = all.witnesses.len() == 3;
    verdict(
        zero && flagged && flagged_all,
        format!(
            "difference series over xi <= 30 has {} nonzero coefficients; planted witnesses {:?}",
            series.coeffs().len(),
            r.witnesses.iter().map(|x| x.to_string()).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("FL rank-1 sweep", criterion1),
        ("FL maximal-order rank-2", criterion2),
        ("Cayley/reduction identities", criterion3),
        ("orbital-integral reduction", criterion4),
        ("matching preservation", criterion5),
        ("Weil suite", criterion6),
        ("archimedean closed forms", criterion7),
        ("global functional equation", criterion8),
        ("FL-difference q-expansion", criterion9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        println!("{} criterion {} ({}): {}", if v.ok { "PASS" } else { "FAIL" }, i + 1, name, v.detail);
        failed += !v.ok as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
