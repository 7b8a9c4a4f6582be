//! Tate zeta integrals, gamma factors and Mellin components.

use crate::bruhat::BruhatFn;
use crate::error::{Error, Result};
use crate::field::ExtKind;
use crate::ratfn::RationalFnT;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

type C64 = Complex64;

/// Unramified quadratic part of a Mellin character; the unramified exponent is the variable `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MellinCharacter {
    Trivial,
    Eta,
}

impl MellinCharacter {
    /// Value of the quadratic part at the uniformizer.
    pub fn at_p(&self, kind: ExtKind) -> f64 {
        match (self, kind) {
            (MellinCharacter::Eta, ExtKind::Inert) => -1.0,
            _ => 1.0,
        }
    }

    /// Product with `eta`.
    pub fn twist_eta(&self) -> Self {
        match self {
            MellinCharacter::Trivial => MellinCharacter::Eta,
            MellinCharacter::Eta => MellinCharacter::Trivial,
        }
    }
}

/// `zeta(f, chi, s) = int f(x) chi(x) |x|^s d^x x` as a rational function of `t = q^{-s}`.
pub fn tate_zeta(f: &BruhatFn, chi: MellinCharacter, kind: ExtKind) -> RationalFnT {
    let q = f.p as f64;
    let c = chi.at_p(kind);
    let (shells, balls) = f.shell_integrals();
    let mut r = RationalFnT::zero();
    if let (Some(&lo), Some(&hi)) = (shells.keys().next(), shells.keys().next_back()) {
        let coeffs: Vec<C64> = (lo..=hi)
            .map(|v| shells.get(&v).copied().unwrap_or_default() * c.powi(v) * q.powi(v))
            .collect();
        r = RationalFnT::laurent(coeffs, lo);
    }
    for (n, w) in balls {
        // w * (1 - 1/q) * (c t)^n / (1 - c t)
        let g = RationalFnT::from_parts(vec![w * (1.0 - 1.0 / q) * c.powi(n)], vec![C64::new(1.0, 0.0), C64::new(-c, 0.0)], n);
        r = r.add(&g);
    }
    r
}

fn gamma_cache() -> &'static Mutex<HashMap<(u32, MellinCharacter, ExtKind), RationalFnT>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, MellinCharacter, ExtKind), RationalFnT>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gamma factor `gamma(chi, s, psi)` solved from the functional equation with the test function `1_O`.
pub fn gamma_factor(p: u32, chi: MellinCharacter, kind: ExtKind) -> Result<RationalFnT> {
    if let Some(g) = gamma_cache().lock().unwrap().get(&(p, chi, kind)) {
        return Ok(g.clone());
    }
    let q = p as f64;
    let f = BruhatFn::ball(p, 0);
    let z = tate_zeta(&f, chi, kind);
    if z.is_zero() {
        return Err(Error::Internal("test-function zeta vanishes identically".into()));
    }
    // quadratic characters are self-inverse
    let zhat = tate_zeta(&f.fourier(), chi, kind).compose_inv(C64::new(1.0 / q, 0.0));
    let g = zhat.div(&z)?.reduce(1e-12);
    gamma_cache().lock().unwrap().insert((p, chi, kind), g.clone());
    Ok(g)
}

/// Leading term of `gamma(eta, s, psi)` at `s = 0`: `(coefficient, order)`.
pub fn gamma_star_eta(p: u32, kind: ExtKind) -> Result<(C64, i32)> {
    let g = gamma_factor(p, MellinCharacter::Eta, kind)?;
    Ok(g.s_leading(p as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn zeta_examples() {
        let p = 5;
        let q = 5.0;
        let z = tate_zeta(&BruhatFn::ball(p, 0), MellinCharacter::Trivial, ExtKind::Split);
        let t = c(0.37);
        assert!((z.eval(t).unwrap() - c(1.0 - 1.0 / q) / (c(1.0) - t)).norm() < 1e-14);
        let z = tate_zeta(&BruhatFn::shell(p, 0), MellinCharacter::Trivial, ExtKind::Split);
        assert!((z.eval(t).unwrap() - c(1.0 - 1.0 / q)).norm() < 1e-14);
        let z = tate_zeta(&BruhatFn::ball(p, 0), MellinCharacter::Eta, ExtKind::Inert);
        assert!((z.eval(t).unwrap() - c(1.0 - 1.0 / q) / (c(1.0) + t)).norm() < 1e-14);
    }

    #[test]
    fn gamma_closed_forms() {
        for &p in &[3u32, 5, 7] {
            let q = p as f64;
            let g1 = gamma_factor(p, MellinCharacter::Trivial, ExtKind::Split).unwrap();
            let ge = gamma_factor(p, MellinCharacter::Eta, ExtKind::Inert).unwrap();
            for &s in &[0.3, 0.77, 1.9, -0.4] {
                let t = c(q.powf(-s));
                let w1 = (1.0 - q.powf(-s)) / (1.0 - q.powf(s - 1.0));
                let we = (1.0 + q.powf(-s)) / (1.0 + q.powf(s - 1.0));
                assert!((g1.eval(t).unwrap() - c(w1)).norm() < 1e-10);
                assert!((ge.eval(t).unwrap() - c(we)).norm() < 1e-10);
            }
            assert!((ge.eval(c(q.powf(-0.5))).unwrap() - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn gamma_star_values() {
        let (v, o) = gamma_star_eta(3, ExtKind::Inert).unwrap();
        assert_eq!(o, 0);
        assert!((v - c(1.5)).norm() < 1e-10);
        let (v, o) = gamma_star_eta(5, ExtKind::Inert).unwrap();
        assert_eq!(o, 0);
        assert!((v - c(5.0 / 3.0)).norm() < 1e-10);
        let (v, o) = gamma_star_eta(3, ExtKind::Split).unwrap();
        assert_eq!(o, 1);
        assert!((v - c(3f64.ln() / (1.0 - 1.0 / 3.0))).norm() < 1e-10);
    }
}
