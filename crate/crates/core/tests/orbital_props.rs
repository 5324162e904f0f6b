use jr_core::gen;
use jr_core::lattice::HermSpace;
use jr_core::linalg::Mat;
use jr_core::orbit::{transfer_factor, SemiLiePair, UnitaryPair};
use jr_core::orbital::{orb_gl, orb_gl_detailed, orb_u, special_values, LaurentX};
use jr_core::padic::{int, LocalFieldCtx, QuadExtElem};
use proptest::prelude::*;
use rand::Rng;

fn small_pair(seed: u64, m: usize, ctx: &LocalFieldCtx) -> Option<SemiLiePair> {
    let mut rng = gen::seeded(seed);
    let x = gen::semilie_from_companion(&mut rng, m, ctx.d, 3).ok()?;
    if !x.is_regular_semisimple() || !x.gamma.charpoly().is_integral(ctx.p) {
        return None;
    }
    let rep = orb_gl_detailed(&x, ctx).ok()?;
    (rep.quotient_exponent <= 6).then_some(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orb_gl_twists_by_det_valuation(seed in 0u64..10_000, hseed in 0u64..10_000, m in 1usize..=2) {
        let ctx = LocalFieldCtx::new(3, -1).unwrap();
        let x = small_pair(seed, m, &ctx);
        prop_assume!(x.is_some());
        let x = x.unwrap();
        let mut rng = gen::seeded(hseed);
        let h = gen::gl_rational(&mut rng, m, ctx.d, 3);
        let v = h.det().valuation(ctx.p).unwrap();
        let hx = x.act(&h).unwrap();
        let sign = if v.rem_euclid(2) == 0 { 1 } else { -1 };
        let expected = orb_gl(&x, &ctx).unwrap().shift(v).scale(&int(sign));
        prop_assert_eq!(orb_gl(&hx, &ctx).unwrap(), expected.clone());
        let w0 = transfer_factor(&x, &ctx).unwrap();
        let w1 = transfer_factor(&hx, &ctx).unwrap();
        let a = special_values(&orb_gl(&x, &ctx).unwrap(), w0).value0;
        let b = special_values(&expected, w1).value0;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn orb_u_is_conjugation_invariant(seed in 0u64..10_000, m in 1usize..=2) {
        let d = -1;
        let ctx = LocalFieldCtx::new(3, d).unwrap();
        let mut rng = gen::seeded(seed);
        let space = HermSpace::standard(m, d);
        let g = gen::unitary(&mut rng, &space, 2);
        let u: Vec<QuadExtElem> = (0..m).map(|_| QuadExtElem::from_int(rng.gen_range(-3..=3), d)).collect();
        let x = UnitaryPair::new(space.clone(), g, u);
        prop_assume!(x.is_ok());
        let x = x.unwrap();
        prop_assume!(x.is_regular_semisimple());
        let k = gen::unitary(&mut rng, &space, 2);
        let kx = x.act(&k).unwrap();
        prop_assert_eq!(orb_u(&x, &ctx).unwrap(), orb_u(&kx, &ctx).unwrap());
    }

    #[test]
    fn laurent_arithmetic_is_exact(a in proptest::collection::vec((-4i64..4, -5i64..5), 0..6),
                                   b in proptest::collection::vec((-4i64..4, -5i64..5), 0..6)) {
        let pa = LaurentX::from_terms(&a);
        let pb = LaurentX::from_terms(&b);
        prop_assert_eq!(pa.add(&pb).sub(&pb), pa.clone());
        prop_assert_eq!(pa.mul(&pb).at_one(), pa.at_one() * pb.at_one());
        prop_assert_eq!(pa.mul(&LaurentX::one()), pa.clone());
    }
}

#[test]
fn identity_action_is_trivial() {
    let ctx = LocalFieldCtx::new(3, -1).unwrap();
    let x = (0..50).find_map(|s| small_pair(s, 2, &ctx)).unwrap();
    let hx = x.act(&Mat::identity(2, -1)).unwrap();
    assert_eq!(orb_gl(&x, &ctx).unwrap(), orb_gl(&hx, &ctx).unwrap());
}

#[test]
fn fundamental_lemma_rank_two() {
    use jr_core::orbit::Side;
    use jr_core::orbital::{fl_verify, is_maximal_order};
    for p in [3u64, 5] {
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        let mut tested = 0;
        for s in 0..80 {
            let mut rng = gen::seeded(s);
            let Ok(x) = gen::semilie_from_companion(&mut rng, 2, ctx.d, 3) else { continue };
            if !x.is_strongly_rs() || !x.gamma.charpoly().is_integral(p) {
                continue;
            }
            if !is_maximal_order(&x.gamma, &ctx).unwrap() {
                continue;
            }
            let r = fl_verify(&x.invariants(), &ctx).unwrap();
            assert!(r.verdict, "p={p} seed={s}");
            if r.side == Side::Nonsplit {
                assert_eq!(r.orb_gl_special.value0, int(0));
            }
            tested += 1;
        }
        assert!(tested >= 20);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_discriminant_implies_maximal(c in proptest::collection::vec(-30i64..30, 2..=3), pi in 0usize..2) {
        use jr_core::linalg::Poly;
        use jr_core::orbital::{discriminant, is_maximal_order_poly};
        let p = [3u64, 5][pi];
        let ctx = LocalFieldCtx::with_default_d(p).unwrap();
        let mut coeffs: Vec<QuadExtElem> = c.iter().map(|&x| QuadExtElem::from_int(x, ctx.d)).collect();
        coeffs.push(QuadExtElem::one(ctx.d));
        let a = Poly::new(coeffs, ctx.d);
        let disc = discriminant(&a);
        prop_assume!(!disc.is_zero());
        if disc.valuation(p).unwrap() <= 1 {
            prop_assert!(is_maximal_order_poly(&a, &ctx).unwrap());
        }
    }
}

#[test]
fn reduction_check_on_matched_pairs() {
    use jr_core::orbital::orb_reduction_check;
    let d = -1;
    let ctx = LocalFieldCtx::new(3, d).unwrap();
    let space = HermSpace::standard(1, d);
    let one = QuadExtElem::one(d);
    let mut rng = gen::seeded(11);
    let mut checked = 0;
    for _ in 0..60 {
        let Some((gam, gp)) = gen::matched_pair(&mut rng, &space, 3) else { continue };
        match orb_reduction_check(&gam, Some((&gp, &space)), &one, &ctx) {
            Ok(ok) => {
                assert!(ok);
                checked += 1;
            }
            Err(jr_core::orbital::OrbitalError::PreconditionFailed(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(checked >= 5, "{checked}");
}
