use rtf_local::orbital::{hecke_w_section, verify_matching};
use rtf_local::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn points(p: u32) -> Vec<PadicScalar> {
    let mut v = Vec::new();
    for val in -4..=4 {
        for u in [1i64, 2] {
            v.push(PadicScalar::new(p, val, u, 20));
        }
    }
    v
}

#[test]
fn hecke_actions_are_linear() {
    let p = 3;
    let (a, b) = (c(0.7), c(-1.3));
    for kind in [ExtKind::Split, ExtKind::Inert] {
        let h = HeckeElt::basis(1).scale(a).add(&HeckeElt::basis(2).scale(b));
        let z = hecke_apply_z(p, &h, kind).unwrap();
        let z1 = hecke_apply_z(p, &HeckeElt::basis(1), kind).unwrap();
        let z2 = hecke_apply_z(p, &HeckeElt::basis(2), kind).unwrap();
        let w = hecke_apply_w(p, kind, &h, c(0.0)).unwrap();
        let w1 = hecke_apply_w(p, kind, &HeckeElt::basis(1), c(0.0)).unwrap();
        let w2 = hecke_apply_w(p, kind, &HeckeElt::basis(2), c(0.0)).unwrap();
        for x in points(p) {
            let ez = z.eval(&x).unwrap() - a * z1.eval(&x).unwrap() - b * z2.eval(&x).unwrap();
            let ew = w.eval(&x).unwrap() - a * w1.eval(&x).unwrap() - b * w2.eval(&x).unwrap();
            assert!(ez.norm() < 1e-9 && ew.norm() < 1e-9, "{:?} {} {}", kind, ez, ew);
        }
    }
}

#[test]
fn hecke_w_commutativity() {
    let p = 3;
    for kind in [ExtKind::Split, ExtKind::Inert] {
        let (h1, h2) = (HeckeElt::basis(1), HeckeElt::double_coset(p, 2));
        let s12 = hecke_w_section(p, kind, &hecke_mul(&h1, &h2), c(1.0), 12).unwrap();
        let s21 = hecke_w_section(p, kind, &hecke_mul(&h2, &h1), c(1.0), 12).unwrap();
        for n in 0..=12u32 {
            let a = s12.coeffs.get(&n).copied().unwrap_or_default();
            let b = s21.coeffs.get(&n).copied().unwrap_or_default();
            assert!((a - b).norm() < 1e-9);
        }
    }
}

#[test]
fn zero_hecke_element_is_trivial() {
    for kind in [ExtKind::Split, ExtKind::Inert] {
        let r = verify_fl(3, kind, &HeckeElt::zero(), (-2, 2), 1e-12).unwrap();
        assert!(r.pass);
        assert!(r.points.iter().all(|q| q.lhs.norm() == 0.0 && q.rhs.norm() == 0.0));
    }
}

#[test]
fn untwisted_transform_flips_odd_degrees_in_the_inert_case() {
    let p = 3;
    let r = verify_fl(p, ExtKind::Split, &HeckeElt::basis(1), (-4, 4), 1e-8).unwrap();
    assert!(r.literal_error < 1e-12);
    for n in 0..=3u32 {
        let h = HeckeElt::basis(n);
        let lhs = singular::g_transform_z_to_w(&hecke_apply_z(p, &h, ExtKind::Inert).unwrap()).unwrap();
        let rhs = hecke_apply_w(p, ExtKind::Inert, &h, c(0.0)).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for x in points(p) {
            let d = lhs.eval(&x).unwrap() - rhs.eval(&x).unwrap() * sign;
            assert!(d.norm() < 1e-12, "n={} {}", n, d);
        }
    }
}

#[test]
fn fundamental_lemma_constant_is_one() {
    for p in [3u32, 5] {
        for kind in [ExtKind::Split, ExtKind::Inert] {
            let k = rtf_local::orbital::fl_constant(p, kind).unwrap();
            assert!((k - c(1.0)).norm() < 1e-10, "{} {:?} {}", p, kind, k);
        }
    }
}

#[test]
fn matching_zero_input_and_seed_reproducibility() {
    let a = verify_matching(3, ExtKind::Inert, 4, 42, 1e-8).unwrap();
    let b = verify_matching(3, ExtKind::Inert, 4, 42, 1e-8).unwrap();
    assert_eq!(a, b);
    let z = singular::g_transform_z_to_w(&SZElem::zero(3, ExtKind::Split)).unwrap();
    assert!(points(3).iter().all(|x| z.eval(x).unwrap().norm() == 0.0));
}

#[test]
fn torsor_only_data_flips_the_kappa_germ() {
    let phi = BabyInput::torsor_unit(3);
    let o01 = rtf_local::orbital::o01_formula(&phi).unwrap();
    let ok = rtf_local::orbital::o0kappa_formula(&phi).unwrap();
    assert!((o01 + ok).norm() < 1e-14 && o01.norm() > 0.1);
}
