//! `PGL2` over `Q_p`: matrices, Iwasawa and Cartan decompositions, coset representatives,
//! the spherical Hecke algebra and its Satake transform, Whittaker functions.

use crate::error::{Error, Result};
use crate::padic::{pow_p, psi_eval, work_prec, PadicScalar};
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A 2x2 matrix over `Q_p`, taken modulo scalars.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElt {
    pub a: PadicScalar,
    pub b: PadicScalar,
    pub c: PadicScalar,
    pub d: PadicScalar,
}

impl GroupElt {
    pub fn new(a: PadicScalar, b: PadicScalar, c: PadicScalar, d: PadicScalar) -> Self {
        GroupElt { a, b, c, d }
    }

    pub fn from_ints(p: u32, m: [i64; 4]) -> Self {
        let prec = work_prec(p);
        let s = |x: i64| PadicScalar::from_i64(p, x, prec);
        GroupElt::new(s(m[0]), s(m[1]), s(m[2]), s(m[3]))
    }

    pub fn p(&self) -> u32 {
        self.a.p()
    }

    pub fn identity(p: u32) -> Self {
        GroupElt::from_ints(p, [1, 0, 0, 1])
    }

    /// `diag(p^k, 1)`
    pub fn diag_pow(p: u32, k: i32) -> Self {
        let prec = work_prec(p);
        GroupElt::new(PadicScalar::uniformizer_pow(p, k, prec), PadicScalar::zero(p), PadicScalar::zero(p), PadicScalar::one(p, prec))
    }

    /// `[[1, x], [0, 1]]`
    pub fn upper(x: &PadicScalar) -> Self {
        let p = x.p();
        let one = PadicScalar::one(p, work_prec(p));
        GroupElt::new(one, *x, PadicScalar::zero(p), one)
    }

    /// `[[1, 0], [x, 1]]`
    pub fn lower(x: &PadicScalar) -> Self {
        let p = x.p();
        let one = PadicScalar::one(p, work_prec(p));
        GroupElt::new(one, PadicScalar::zero(p), *x, one)
    }

    pub fn mul(&self, o: &Self) -> Self {
        GroupElt {
            a: self.a.mul(&o.a).add(&self.b.mul(&o.c)),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.d)),
            c: self.c.mul(&o.a).add(&self.d.mul(&o.c)),
            d: self.c.mul(&o.b).add(&self.d.mul(&o.d)),
        }
    }

    pub fn det(&self) -> PadicScalar {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    /// The adjugate, which is the inverse in `PGL2`.
    pub fn inv(&self) -> Self {
        GroupElt { a: self.d, b: self.b.neg(), c: self.c.neg(), d: self.a }
    }

    /// Minimal valuation of a list of entries; errors when an inexact zero could be lower.
    pub fn min_val_of(xs: &[PadicScalar]) -> Result<i32> {
        let m = xs.iter().filter_map(|x| x.valuation()).min();
        let Some(m) = m else {
            return Err(Error::Precision("all entries vanish at working precision".into()));
        };
        for x in xs {
            if x.is_zero() {
                if let Some(a) = x.abs_precision() {
                    if a <= m {
                        return Err(Error::Precision("entry known only modulo a larger ideal than the others".into()));
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn min_val(&self) -> Result<i32> {
        GroupElt::min_val_of(&[self.a, self.b, self.c, self.d])
    }

    pub fn det_val(&self) -> Result<i32> {
        self.det().valuation().ok_or_else(|| Error::Domain("singular matrix".into()))
    }

    /// `m` with `g in K diag(p^m, 1) K`.
    pub fn cartan(&self) -> Result<i32> {
        Ok(self.det_val()? - 2 * self.min_val()?)
    }

    pub fn in_k(&self) -> Result<bool> {
        Ok(self.cartan()? == 0)
    }
}

/// `g = n(u) diag(p^a, 1) k` with `k` in `K`.
#[derive(Clone, Copy, Debug)]
pub struct Iwasawa {
    pub u: PadicScalar,
    pub a: i32,
    pub k: GroupElt,
}

pub fn iwasawa_decompose(g: &GroupElt) -> Result<Iwasawa> {
    let p = g.p();
    let det = g.det();
    if det.is_zero() {
        return Err(Error::Domain("singular matrix".into()));
    }
    let vc = g.c.val_or_max();
    let vd = g.d.val_or_max();
    if g.c.is_zero() && g.d.is_zero() {
        return Err(Error::Precision("bottom row vanishes".into()));
    }
    let (u, t1, t2, k) = if !g.c.is_zero() && (vc <= vd || g.d.is_zero()) {
        if g.d.is_zero() && g.d.abs_precision().map_or(false, |a| a <= vc) {
            return Err(Error::Precision("cannot compare bottom-row valuations".into()));
        }
        let u = g.a.div(&g.c)?;
        let t1 = det.div(&g.c)?;
        let t2 = g.c;
        let k = GroupElt::new(PadicScalar::zero(p), PadicScalar::one(p, work_prec(p)).neg(), PadicScalar::one(p, work_prec(p)), g.d.div(&g.c)?);
        (u, t1, t2, k)
    } else {
        if g.c.is_zero() && g.c.abs_precision().map_or(false, |a| a <= vd) {
            return Err(Error::Precision("cannot compare bottom-row valuations".into()));
        }
        let u = g.b.div(&g.d)?;
        let t1 = det.div(&g.d)?;
        let t2 = g.d;
        let one = PadicScalar::one(p, work_prec(p));
        let k = GroupElt::new(one, PadicScalar::zero(p), g.c.div(&g.d)?, one);
        (u, t1, t2, k)
    };
    let r = t1.div(&t2)?;
    let a = r.valuation().ok_or_else(|| Error::Precision("torus part vanishes".into()))?;
    // absorb the unit of t1/t2 into k
    let unit = PadicScalar::new(p, 0, r.unit(), r.precision());
    let ku = GroupElt::new(unit, PadicScalar::zero(p), PadicScalar::zero(p), PadicScalar::one(p, r.precision()));
    Ok(Iwasawa { u, a, k: ku.mul(&k) })
}

/// Label of the coset `gK`: `(a, u mod p^a O)` from `g = n(u) diag(p^a, 1) k`, with `u mod p^a` given as `(num, den)` of `u p^{-a}` mod `O`.
pub fn coset_label(g: &GroupElt) -> Result<(i32, i64, i64)> {
    let iw = iwasawa_decompose(g)?;
    let (n, d) = iw.u.scale_p(-iw.a).frac_part()?;
    Ok((iw.a, n, d))
}

/// Representatives `[[p^a, b], [0, p^d]]`, `a + d = m`, `b mod p^a`, primitive, of `K diag(p^m, 1) K / K`.
pub fn double_coset_reps(p: u32, m: u32) -> Vec<GroupElt> {
    let mut out = Vec::new();
    let prec = work_prec(p);
    for a in 0..=m {
        let d = m - a;
        let n = pow_p(p, a);
        for b in 0..n {
            if a >= 1 && d >= 1 && b % p as i64 == 0 {
                continue;
            }
            out.push(GroupElt::new(
                PadicScalar::uniformizer_pow(p, a as i32, prec),
                PadicScalar::from_i64(p, b, prec),
                PadicScalar::zero(p),
                PadicScalar::uniformizer_pow(p, d as i32, prec),
            ));
        }
    }
    out
}

/// Coset labels of `k diag(p^m, 1)` over all `k` in `GL2(Z/p^N)`.
pub fn enumerate_double_coset(p: u32, m: u32, n: u32) -> Result<BTreeSet<(i32, i64, i64)>> {
    let big = pow_p(p, n);
    let pm = pow_p(p, m);
    let pi = p as i64;
    let mut out = BTreeSet::new();
    for x in 0..big {
        for z in 0..big {
            if x % pi == 0 && z % pi == 0 {
                continue;
            }
            for y in 0..big {
                for w in 0..big {
                    if (x * w - y * z).rem_euclid(pi) == 0 {
                        continue;
                    }
                    let g = GroupElt::from_ints(p, [x * pm, y, z * pm, w]);
                    out.insert(coset_label(&g)?);
                }
            }
        }
    }
    Ok(out)
}

/// Element of the spherical Hecke algebra in the basis `h_n` (Satake transform `tr V_n`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeckeElt {
    pub coeffs: BTreeMap<u32, C64>,
}

impl HeckeElt {
    pub fn zero() -> Self {
        HeckeElt::default()
    }

    pub fn basis(n: u32) -> Self {
        HeckeElt { coeffs: [(n, C64::new(1.0, 0.0))].into_iter().collect() }
    }

    pub fn from_pairs(pairs: &[(u32, C64)]) -> Self {
        let mut h = HeckeElt::zero();
        for &(n, c) in pairs {
            *h.coeffs.entry(n).or_insert(ZERO) += c;
        }
        h.prune()
    }

    fn prune(mut self) -> Self {
        self.coeffs.retain(|_, c| c.norm() != 0.0);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut h = self.clone();
        for (n, c) in &o.coeffs {
            *h.coeffs.entry(*n).or_insert(ZERO) += *c;
        }
        h.prune()
    }

    pub fn scale(&self, s: C64) -> Self {
        HeckeElt { coeffs: self.coeffs.iter().map(|(n, c)| (*n, *c * s)).collect() }.prune()
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().copied().max().unwrap_or(0)
    }

    /// `1_{K p^m K}` written in the `h_n` basis.
    pub fn double_coset(p: u32, m: u32) -> Self {
        let t = hecke_basis_change(p, m);
        HeckeElt { coeffs: t.into_iter().enumerate().map(|(n, c)| (n as u32, c)).collect() }.prune()
    }
}

/// `h_m h_n = sum_{l=0}^{min(m,n)} h_{m+n-2l}`, extended bilinearly.
pub fn hecke_mul(h1: &HeckeElt, h2: &HeckeElt) -> HeckeElt {
    let mut out = HeckeElt::zero();
    for (&m, &a) in &h1.coeffs {
        for (&n, &b) in &h2.coeffs {
            for l in 0..=m.min(n) {
                *out.coeffs.entry(m + n - 2 * l).or_insert(ZERO) += a * b;
            }
        }
    }
    out.prune()
}

/// Laurent polynomial in the Satake parameter `alpha`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LaurentPoly {
    pub coeffs: BTreeMap<i32, C64>,
}

impl LaurentPoly {
    pub fn eval(&self, alpha: C64) -> C64 {
        self.coeffs.iter().map(|(k, c)| *c * alpha.powi(*k)).sum()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = LaurentPoly::default();
        for (i, a) in &self.coeffs {
            for (j, b) in &o.coeffs {
                *out.coeffs.entry(i + j).or_insert(ZERO) += *a * *b;
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.coeffs {
            *out.coeffs.entry(*k).or_insert(ZERO) += *c;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        LaurentPoly { coeffs: self.coeffs.iter().map(|(k, c)| (*k, *c * s)).collect() }
    }

    pub fn dist(&self, o: &Self) -> f64 {
        let keys: BTreeSet<i32> = self.coeffs.keys().chain(o.coeffs.keys()).copied().collect();
        keys.iter()
            .map(|k| (self.coeffs.get(k).copied().unwrap_or(ZERO) - o.coeffs.get(k).copied().unwrap_or(ZERO)).norm())
            .fold(0.0, f64::max)
    }

    /// `tr V_n = alpha^n + alpha^{n-2} + ... + alpha^{-n}`.
    pub fn trace_v(n: u32) -> Self {
        let n = n as i32;
        LaurentPoly { coeffs: (0..=n).map(|j| (n - 2 * j, C64::new(1.0, 0.0))).collect() }
    }
}

/// `S(f)(alpha) = sum_{y in G/K} f(y) delta^{1/2}(a(y)) alpha^{a(y)}` for `f` given by coefficients on `1_{K p^m K}`.
pub fn satake_transform(p: u32, f: &BTreeMap<u32, C64>) -> Result<LaurentPoly> {
    let q = p as f64;
    let mut out = LaurentPoly::default();
    for (&m, &c) in f {
        for y in double_coset_reps(p, m) {
            let iw = iwasawa_decompose(&y)?;
            *out.coeffs.entry(iw.a).or_insert(ZERO) += c * q.powf(-(iw.a as f64) / 2.0);
        }
    }
    out.coeffs.retain(|_, c| c.norm() > 1e-14);
    Ok(out)
}

/// Coefficients of `1_{K p^m K}` on `h_0, ..., h_m`, read off its Satake transform.
pub fn hecke_basis_change(p: u32, m: u32) -> Vec<C64> {
    let s = satake_transform(p, &[(m, C64::new(1.0, 0.0))].into_iter().collect()).expect("coset representatives decompose");
    let mut rest = s;
    let mut out = vec![ZERO; m as usize + 1];
    for n in (0..=m).rev() {
        let c = rest.coeffs.get(&(n as i32)).copied().unwrap_or(ZERO);
        out[n as usize] = c;
        rest = rest.add(&LaurentPoly::trace_v(n).scale(-c));
    }
    out
}

/// `h` written on the basis `1_{K p^m K}`.
pub fn hecke_to_double_coset(p: u32, h: &HeckeElt) -> BTreeMap<u32, C64> {
    let top = h.max_degree();
    let rows: Vec<Vec<C64>> = (0..=top).map(|m| hecke_basis_change(p, m)).collect();
    // rows[m][n]: coefficient of h_n in 1_{K p^m K}; triangular with nonzero diagonal
    let mut rest: Vec<C64> = (0..=top).map(|n| h.coeffs.get(&n).copied().unwrap_or(ZERO)).collect();
    let mut out = BTreeMap::new();
    for m in (0..=top).rev() {
        let c = rest[m as usize] / rows[m as usize][m as usize];
        if c.norm() > 0.0 {
            out.insert(m, c);
        }
        for n in 0..=m {
            rest[n as usize] -= c * rows[m as usize][n as usize];
        }
    }
    out
}

/// `(1_{K p^m1 K} * 1_{K p^m2 K})` by summing over coset representatives, as coefficients on `1_{K p^k K}`.
pub fn convolve_double_cosets(p: u32, m1: u32, m2: u32) -> Result<BTreeMap<u32, C64>> {
    let reps = double_coset_reps(p, m1);
    let mut out = BTreeMap::new();
    for k in 0..=(m1 + m2) {
        let target = GroupElt::diag_pow(p, k as i32);
        let mut n = 0usize;
        for y in &reps {
            if y.inv().mul(&target).cartan()? == m2 as i32 {
                n += 1;
            }
        }
        if n > 0 {
            out.insert(k, C64::new(n as f64, 0.0));
        }
    }
    Ok(out)
}

/// Compactly supported `K`-invariant section on the basis `1_{x_n K}`, `x_n = diag(p^n, 1)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KSection {
    pub coeffs: BTreeMap<u32, C64>,
}

impl KSection {
    pub fn basis(n: u32) -> Self {
        KSection { coeffs: [(n, C64::new(1.0, 0.0))].into_iter().collect() }
    }

    pub fn zero() -> Self {
        KSection::default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut s = self.clone();
        for (n, c) in &o.coeffs {
            *s.coeffs.entry(*n).or_insert(ZERO) += *c;
        }
        s
    }

    pub fn scale(&self, x: C64) -> Self {
        KSection { coeffs: self.coeffs.iter().map(|(n, c)| (*n, *c * x)).collect() }
    }

    pub fn max_index(&self) -> u32 {
        self.coeffs.keys().copied().max().unwrap_or(0)
    }

    /// Value at `g = n(u) diag(p^a, 1) k`: `psi(u)` times the coefficient of `a`.
    pub fn eval(&self, g: &GroupElt) -> Result<C64> {
        let iw = iwasawa_decompose(g)?;
        if iw.a < 0 {
            return Ok(ZERO);
        }
        let c = self.coeffs.get(&(iw.a as u32)).copied().unwrap_or(ZERO);
        if c.norm() == 0.0 {
            return Ok(ZERO);
        }
        Ok(c * psi_eval(&iw.u)?)
    }
}

/// `h * sec` through the Casselman-Shalika formula `h_n * 1_{x_0 K} = q^{-n/2} 1_{x_n K}`.
pub fn cs_action(p: u32, h: &HeckeElt, sec: &KSection) -> KSection {
    let q = p as f64;
    let mut out = KSection::zero();
    for (&m, &c) in &sec.coeffs {
        // 1_{x_m K} = q^{m/2} h_m * 1_{x_0 K}
        let prod = hecke_mul(h, &HeckeElt::basis(m));
        for (&j, &d) in &prod.coeffs {
            *out.coeffs.entry(j).or_insert(ZERO) += c * d * q.powf(m as f64 / 2.0) * q.powf(-(j as f64) / 2.0);
        }
    }
    out.coeffs.retain(|_, c| c.norm() != 0.0);
    out
}

/// `(1_{K p^m K} * sec)(g) = sum_{y in K p^m K / K} sec(g y)`.
pub fn double_coset_act_at(p: u32, m: u32, sec: &KSection, g: &GroupElt) -> Result<C64> {
    let mut s = ZERO;
    for y in double_coset_reps(p, m) {
        s += sec.eval(&g.mul(&y))?;
    }
    Ok(s)
}

/// `W_pi(diag(p^n, 1)) = q^{-n/2} tr V_n(alpha)`.
pub fn whittaker_eval(p: u32, alpha: C64, n: i32) -> C64 {
    if n < 0 {
        return ZERO;
    }
    LaurentPoly::trace_v(n as u32).eval(alpha) * (p as f64).powf(-(n as f64) / 2.0)
}

/// Coefficients of `1_{x_n K}` in `H_s * 1_{x_0 K}`, `n = 0..=n_max`.
pub fn h_s_coeffs(p: u32, s: C64, epsilon: i32, n_max: u32) -> Result<Vec<C64>> {
    let q = C64::new(p as f64, 0.0);
    let den = C64::new(1.0, 0.0) - q.powc(-2.0 * s - 1.0) * epsilon as f64;
    if den.norm() < 1e-14 {
        return Err(Error::Pole(format!("1 - eps q^(-2s-1) vanishes at s = {}", s)));
    }
    Ok((0..=n_max)
        .map(|n| {
            let base = q.powc(-(s + 1.0) * n as f64) / den;
            if epsilon == 1 {
                base * (n + 1) as f64
            } else if n % 2 == 0 {
                base
            } else {
                ZERO
            }
        })
        .collect())
}
