use proptest::prelude::*;
use rtf_local::group::{hecke_to_double_coset, satake_transform};
use rtf_local::orbital::random_sz;
use rtf_local::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn bruhat(p: u32, lo: i32, span: i32, vals: &[f64]) -> BruhatFn {
    let n = (p as usize).pow(span as u32);
    let data: Vec<Complex64> = (0..n).map(|i| Complex64::new(vals[i % vals.len()], vals[(3 * i + 1) % vals.len()])).collect();
    BruhatFn::from_dense(p, lo, lo + span, &data)
}

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![3u32, 5, 7])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn padic_field_laws(p in prime(), va in -4i32..4, ua in 1i64..500, vb in -4i32..4, ub in 1i64..500) {
        prop_assume!(ua % p as i64 != 0 && ub % p as i64 != 0);
        let a = PadicScalar::new(p, va, ua, 12);
        let b = PadicScalar::new(p, vb, ub, 12);
        prop_assert!(a.add(&b).sub(&b).approx_eq(&a));
        prop_assert!(a.mul(&a.inv().unwrap()).approx_eq(&PadicScalar::one(p, 12)));
        prop_assert_eq!(a.mul(&b).valuation(), Some(va + vb));
        prop_assert!((a.mul(&b).abs_value() - a.abs_value() * b.abs_value()).abs() < 1e-12 * a.abs_value() * b.abs_value());
    }

    #[test]
    fn psi_is_a_character(p in prime(), va in -3i32..3, ua in 1i64..200, vb in -3i32..3, ub in 1i64..200) {
        prop_assume!(ua % p as i64 != 0 && ub % p as i64 != 0);
        let a = PadicScalar::new(p, va, ua, 12);
        let b = PadicScalar::new(p, vb, ub, 12);
        let lhs = psi_eval(&a.add(&b)).unwrap();
        let rhs = psi_eval(&a).unwrap() * psi_eval(&b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn fourier_basics(p in prime(), lo in -2i32..1, span in 1i32..3, vals in prop::collection::vec(-2.0f64..2.0, 5)) {
        let f = bruhat(p, lo, span, &vals);
        let g = bruhat(p, lo - 1, span + 1, &vals[1..]);
        let fh = f.fourier();
        prop_assert!(fh.fourier().dist_sup(&f.reflect()) < 1e-10);
        prop_assert!((fh.eval(&PadicScalar::zero(p)).unwrap() - f.integral()).norm() < 1e-10);
        let lin = f.scale(c(2.0)).add(&g).fourier();
        prop_assert!(lin.dist_sup(&fh.scale(c(2.0)).add(&g.fourier())) < 1e-10);
    }

    #[test]
    fn tate_zeta_is_linear(p in prime(), span in 1i32..3, vals in prop::collection::vec(-2.0f64..2.0, 4), t in 0.1f64..0.6) {
        let f = bruhat(p, -1, span, &vals);
        let g = bruhat(p, 0, span, &vals[1..]);
        for (chi, kind) in [(MellinCharacter::Trivial, ExtKind::Split), (MellinCharacter::Eta, ExtKind::Inert)] {
            let tt = Complex64::new(t, 0.2);
            let lhs = tate_zeta(&f.add(&g), chi, kind).eval(tt).unwrap();
            let rhs = tate_zeta(&f, chi, kind).eval(tt).unwrap() + tate_zeta(&g, chi, kind).eval(tt).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn hecke_algebra_is_commutative_and_satake_multiplicative(a in prop::collection::vec(-1.0f64..1.0, 3), b in prop::collection::vec(-1.0f64..1.0, 3)) {
        let p = 3;
        let h1 = HeckeElt::from_pairs(&[(0, c(a[0])), (1, c(a[1])), (2, c(a[2]))]);
        let h2 = HeckeElt::from_pairs(&[(0, c(b[0])), (1, c(b[1])), (3, c(b[2]))]);
        let ab = hecke_mul(&h1, &h2);
        let ba = hecke_mul(&h2, &h1);
        prop_assert_eq!(ab.coeffs.len(), ba.coeffs.len());
        for (n, x) in &ab.coeffs {
            prop_assert!((x - ba.coeffs[n]).norm() < 1e-12);
        }
        let s = |h: &HeckeElt| satake_transform(p, &hecke_to_double_coset(p, h)).unwrap();
        prop_assert!(s(&ab).dist(&s(&h1).mul(&s(&h2))) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eta_twist_is_an_involution(seed in 0u64..1000, inert in any::<bool>()) {
        let kind = if inert { ExtKind::Inert } else { ExtKind::Split };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_sz(&mut rng, 3, kind).unwrap();
        let g = f.eta_twist().unwrap().eta_twist().unwrap();
        for v in -3..=4 {
            for u in [1i64, 2] {
                let x = PadicScalar::new(3, v, u, 20);
                prop_assert!((f.eval(&x).unwrap() - g.eval(&x).unwrap()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kuznetsov_direct_is_bilinear(m in 0u32..3, n in 0u32..3, v in -3i32..3, a in -2.0f64..2.0) {
        let p = 3;
        let x = PadicScalar::new(p, v, 2, 20);
        let s1 = KSection::basis(m).scale(c(a)).add(&KSection::basis(n));
        let lhs = o_kuz_direct(p, &s1, &KSection::basis(0), &x).unwrap();
        let rhs = o_kuz_closed(p, m, &x).unwrap() * a + o_kuz_closed(p, n, &x).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }
}
