//! The spaces `S(X)`, `S(Z)`, `S(W^s)` as window-plus-germ data, the operators `iota` and
//! `G = F iota F`, germ extractors and inner products.

use crate::bruhat::{BruhatFn, Coset};
use crate::error::{Error, Result};
use crate::field::{eta_of_val, ExtKind};
use crate::padic::{pow_p, psi_eval, work_prec, PadicScalar};
use crate::ratfn::RationalFnT;
use crate::tate::MellinCharacter;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Upper bound on the number of points any single enumeration may visit.
pub const MAX_POINTS: i64 = 20_000_000;

/// Germ `a + b*nu(x)` on `val(x) >= level`, with `nu = val` (split) or `nu = eta` (inert).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Germ {
    pub a: C64,
    pub b: C64,
    pub level: i32,
}

fn nu(kind: ExtKind, v: i32) -> f64 {
    match kind {
        ExtKind::Split => v as f64,
        ExtKind::Inert => eta_of_val(v) as f64,
    }
}

impl Germ {
    pub fn new(a: C64, b: C64, level: i32) -> Self {
        Germ { a, b, level }
    }

    pub fn value(&self, kind: ExtKind, v: i32) -> C64 {
        self.a + self.b * nu(kind, v)
    }

    pub fn is_zero(&self) -> bool {
        self.a.norm() == 0.0 && self.b.norm() == 0.0
    }

    fn scale(&self, c: C64) -> Self {
        Germ { a: self.a * c, b: self.b * c, level: self.level }
    }

    /// `sum_{v >= n} g(v) q^{-v}` for `n >= level`.
    fn tail_sum(&self, kind: ExtKind, q: f64, n: i32) -> C64 {
        let r = 1.0 / q;
        let rn = r.powi(n);
        let s0 = rn / (1.0 - r);
        let s1 = match kind {
            ExtKind::Split => rn * (n as f64 / (1.0 - r) + r / ((1.0 - r) * (1.0 - r))),
            ExtKind::Inert => (-r).powi(n) / (1.0 + r),
        };
        self.a * s0 + self.b * s1
    }

    /// Fourier transform of the germ (supported on `p^level`) at a point of valuation `w` (`None` for `y = 0`).
    fn fourier_radial(&self, kind: ExtKind, q: f64, w: Option<i32>) -> C64 {
        let l = self.level;
        let n = match w {
            None => l,
            Some(w) => (-w).max(l),
        };
        let mut s = self.tail_sum(kind, q, n) * (1.0 - 1.0 / q);
        if let Some(w) = w {
            if -w - 1 >= l {
                s -= self.value(kind, -w - 1) * q.powi(w);
            }
        }
        s
    }
}

/// Near-zero germ `|x|^{s+1}(c1 * val(x) + c2)` (split) or `|x|^{s+1}(c1 + c2 * eta(x))` (inert) on `val(x) >= level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WGerm {
    pub c1: C64,
    pub c2: C64,
    pub level: i32,
}

/// Kloosterman tail `C * KL(x)` on `val(x) <= -m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlTail {
    pub c: C64,
    pub m: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SXElem {
    pub p: u32,
    pub kind: ExtKind,
    pub window: BruhatFn,
    pub zero_germ: Option<Germ>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SZElem {
    pub p: u32,
    pub kind: ExtKind,
    pub window: BruhatFn,
    pub germ0: Option<Germ>,
    /// Germ in the variable `x + 1`.
    pub germ1: Option<Germ>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SWElem {
    pub p: u32,
    pub kind: ExtKind,
    pub s: C64,
    pub window: BruhatFn,
    pub zero_germ: Option<WGerm>,
    pub inf_tail: Option<KlTail>,
}

/// Whether the coset meets `shift + p^level`, where `shift` is `0` or `-1`.
fn coset_meets_ball(p: u32, c: &Coset, minus_one: bool, level: i32) -> bool {
    let m = c.level.min(level);
    let x = if minus_one { c.center(p, work_prec(p)).add(&PadicScalar::one(p, work_prec(p))) } else { c.center(p, work_prec(p)) };
    x.val_or_max() >= m
}

fn check_germ_level(g: &Option<Germ>, what: &str) -> Result<()> {
    if let Some(g) = g {
        if g.level < 1 {
            return Err(Error::Representation(format!("{} germ level {} must be at least 1", what, g.level)));
        }
    }
    Ok(())
}

impl SXElem {
    pub fn zero(p: u32, kind: ExtKind) -> Self {
        SXElem { p, kind, window: BruhatFn::zero(p), zero_germ: None }
    }

    pub fn validate(&self) -> Result<()> {
        check_germ_level(&self.zero_germ, "zero")?;
        if let Some(g) = &self.zero_germ {
            for (c, _) in self.window.atoms() {
                if coset_meets_ball(self.p, c, false, g.level) {
                    return Err(Error::Representation(format!("window atom {:?} meets the germ ball", c)));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &PadicScalar) -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Irregular("evaluation at 0".into()))?;
        if let Some(g) = &self.zero_germ {
            if v >= g.level {
                return Ok(g.value(self.kind, v));
            }
        }
        self.window.eval(x)
    }

    pub fn is_zero(&self) -> bool {
        self.window.is_zero() && self.zero_germ.map_or(true, |g| g.is_zero())
    }
}

impl SZElem {
    pub fn zero(p: u32, kind: ExtKind) -> Self {
        SZElem { p, kind, window: BruhatFn::zero(p), germ0: None, germ1: None }
    }

    /// `xi -> eta(xi) f(xi)`. Identity in the split case.
    pub fn eta_twist(&self) -> Result<Self> {
        if self.kind == ExtKind::Split {
            return Ok(self.clone());
        }
        let mut atoms = Vec::new();
        for (c, v) in self.window.atoms() {
            if c.is_zero_coset() {
                return Err(Error::Representation("eta twist of a window atom at 0".into()));
            }
            atoms.push((*c, *v * eta_of_val(c.val) as f64));
        }
        Ok(SZElem {
            p: self.p,
            kind: self.kind,
            window: BruhatFn::from_disjoint(self.p, atoms),
            germ0: self.germ0.map(|g| Germ::new(g.b, g.a, g.level)),
            germ1: self.germ1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_germ_level(&self.germ0, "zero")?;
        check_germ_level(&self.germ1, "minus-one")?;
        for (c, _) in self.window.atoms() {
            if let Some(g) = &self.germ0 {
                if coset_meets_ball(self.p, c, false, g.level) {
                    return Err(Error::Representation(format!("window atom {:?} meets the germ ball at 0", c)));
                }
            }
            if let Some(g) = &self.germ1 {
                if coset_meets_ball(self.p, c, true, g.level) {
                    return Err(Error::Representation(format!("window atom {:?} meets the germ ball at -1", c)));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &PadicScalar) -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Irregular("evaluation at 0".into()))?;
        let p = self.p;
        let x1 = x.add(&PadicScalar::one(p, x.precision().max(1)));
        let v1 = x1.valuation();
        if let Some(g) = &self.germ0 {
            if v >= g.level {
                return Ok(g.value(self.kind, v));
            }
        }
        if let Some(g) = &self.germ1 {
            match v1 {
                None => return Err(Error::Irregular("evaluation at -1".into())),
                Some(v1) if v1 >= g.level => return Ok(g.value(self.kind, v1)),
                _ => {}
            }
        } else if v1.is_none() && x1.abs_precision().is_none() {
            return Err(Error::Irregular("evaluation at -1".into()));
        }
        self.window.eval(x)
    }

    pub fn is_zero(&self) -> bool {
        self.window.is_zero() && self.germ0.map_or(true, |g| g.is_zero()) && self.germ1.map_or(true, |g| g.is_zero())
    }

    pub fn scale(&self, c: C64) -> Self {
        SZElem {
            p: self.p,
            kind: self.kind,
            window: self.window.scale(c),
            germ0: self.germ0.map(|g| g.scale(c)),
            germ1: self.germ1.map(|g| g.scale(c)),
        }
    }
}

impl SWElem {
    pub fn zero(p: u32, kind: ExtKind) -> Self {
        SWElem { p, kind, s: ZERO, window: BruhatFn::zero(p), zero_germ: None, inf_tail: None }
    }

    pub fn germ_value(&self, g: &WGerm, v: i32) -> C64 {
        let q = self.p as f64;
        let w = C64::new(q, 0.0).powc(-(self.s + 1.0) * v as f64);
        let inner = match self.kind {
            ExtKind::Split => g.c1 * v as f64 + g.c2,
            ExtKind::Inert => g.c1 + g.c2 * eta_of_val(v) as f64,
        };
        w * inner
    }

    pub fn eval(&self, x: &PadicScalar) -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Irregular("evaluation at 0".into()))?;
        if let Some(g) = &self.zero_germ {
            if v >= g.level {
                return Ok(self.germ_value(g, v));
            }
        }
        if let Some(t) = &self.inf_tail {
            if v <= -t.m {
                return Ok(t.c * kl_germ(x)?);
            }
        }
        self.window.eval(x)
    }

    pub fn validate(&self) -> Result<()> {
        for (c, _) in self.window.atoms() {
            if let Some(g) = &self.zero_germ {
                if coset_meets_ball(self.p, c, false, g.level) {
                    return Err(Error::Representation(format!("window atom {:?} meets the germ ball", c)));
                }
            }
            if let Some(t) = &self.inf_tail {
                if c.min_val() <= -t.m {
                    return Err(Error::Representation(format!("window atom {:?} meets the Kloosterman tail", c)));
                }
            }
        }
        Ok(())
    }
}

/// `iota(f)(x) = eta(x) |x|^{-1} f(1/x)`.
pub fn iota<F>(f: F, kind: ExtKind) -> impl Fn(&PadicScalar) -> Result<C64>
where
    F: Fn(&PadicScalar) -> Result<C64>,
{
    move |x: &PadicScalar| {
        let v = x.valuation().ok_or_else(|| Error::Irregular("iota at 0".into()))?;
        let e = match kind {
            ExtKind::Split => 1.0,
            ExtKind::Inert => eta_of_val(v) as f64,
        };
        Ok(f(&x.inv()?)? * e * (x.p() as f64).powi(v))
    }
}

/// `int_{|y| = q^k} twist(y) psi(a y + b / y) dy`.
pub fn oscillatory_shell_integral(a: &PadicScalar, b: &PadicScalar, twist: MellinCharacter, k: i32, kind: ExtKind) -> Result<C64> {
    let p = a.p();
    let q = p as f64;
    let tw = twist.at_p(kind).powi(-k);
    let big = i32::MAX / 4;
    let va = a.valuation().unwrap_or(big);
    let vb = b.valuation().unwrap_or(big);
    if a.is_zero() && !a.is_exact_zero() || b.is_zero() && !b.is_exact_zero() {
        return Err(Error::Precision("oscillatory integral with inexact zero coefficient".into()));
    }
    let ap = va.saturating_sub(k);
    let bp = vb.saturating_add(k);
    if ap.min(bp) >= 0 {
        return Ok(C64::new(tw * q.powi(k) * (1.0 - 1.0 / q), 0.0));
    }
    if ap != bp && ap.min(bp) <= -2 {
        return Ok(ZERO);
    }
    let mut m = 1 - k;
    if va < big {
        m = m.max(-va);
    }
    if vb < big {
        m = m.max(-vb - 2 * k);
    }
    let digits = (m + k) as u32;
    let n = pow_p(p, digits);
    if n > MAX_POINTS {
        return Err(Error::Window(format!("oscillatory sum over {} points", n)));
    }
    let prec = work_prec(p);
    let mut s = ZERO;
    for u in 1..n {
        if u % p as i64 == 0 {
            continue;
        }
        let y = PadicScalar::new(p, -k, u, prec);
        let mut ph = ZERO + 1.0;
        if va < big {
            ph *= psi_eval(&a.mul(&y))?;
        }
        if vb < big {
            ph *= psi_eval(&b.mul(&y.inv()?))?;
        }
        s += ph;
    }
    Ok(s * tw * q.powi(-m))
}

/// `KL(x) = int_{|y|^2 = |x|} psi(x / y - y) dy`; zero when `val(x)` is odd.
pub fn kl_germ(x: &PadicScalar) -> Result<C64> {
    let v = x.valuation().ok_or_else(|| Error::Domain("KL(0)".into()))?;
    if v.rem_euclid(2) != 0 {
        return Ok(ZERO);
    }
    let p = x.p();
    let minus_one = PadicScalar::from_i64(p, -1, work_prec(p));
    oscillatory_shell_integral(&minus_one, x, MellinCharacter::Trivial, -v / 2, ExtKind::Split)
}

struct Shell {
    k: i32,
    level: i32,
    pts: Vec<(PadicScalar, C64)>,
}

/// Pointwise evaluator of `G f = F iota F f` for window data with radial germs at `0` and `-1`.
pub struct GEngine {
    p: u32,
    kind: ExtKind,
    q: f64,
    prec: u32,
    atoms: Vec<(PadicScalar, i32, C64)>,
    g0: Option<Germ>,
    g1: Option<Germ>,
    big_a: i32,
    big_k: i32,
    b0: C64,
    b1: C64,
    ft0: C64,
    shells: Vec<Shell>,
}

impl GEngine {
    pub fn new(p: u32, kind: ExtKind, window: &BruhatFn, g0: Option<Germ>, g1: Option<Germ>) -> Result<Self> {
        let q = p as f64;
        let prec = work_prec(p);
        let g0 = g0.filter(|g| !g.is_zero());
        let g1 = g1.filter(|g| !g.is_zero());
        check_germ_level(&g0, "zero")?;
        check_germ_level(&g1, "minus-one")?;
        let w = window.compress(1e-14);
        let atoms: Vec<(PadicScalar, i32, C64)> = w.atoms().map(|(c, x)| (c.center(p, prec), c.level, *x)).collect();
        let a_w = w.min_val().map(|m| -m);
        let n_max = w.max_level();
        let big_a = a_w.unwrap_or(0).max(0);
        let mut big_k = n_max.unwrap_or(0).max(0);
        for g in [&g0, &g1].into_iter().flatten() {
            big_k = big_k.max(g.level);
        }
        big_k = (big_k + 1).max(2);
        let c = match kind {
            ExtKind::Split => 1.0 / (1.0 - 1.0 / q),
            ExtKind::Inert => 2.0 * q / (q + 1.0),
        };
        let b0 = g0.map_or(ZERO, |g| g.b * c);
        let b1 = g1.map_or(ZERO, |g| g.b * c);
        let mut e = GEngine { p, kind, q, prec, atoms, g0, g1, big_a, big_k, b0, b1, ft0: ZERO, shells: Vec::new() };
        e.ft0 = e.ft(&PadicScalar::zero(p))?;
        for k in (1 - big_a)..big_k {
            let mut lam: Option<i32> = None;
            if let (Some(aw), Some(nm)) = (a_w, n_max) {
                if k <= nm {
                    lam = Some(aw);
                }
            }
            if e.g0.is_some() || e.g1.is_some() {
                lam = Some(lam.map_or(1 - k, |l| l.max(1 - k)));
            }
            if e.g1.is_some() {
                lam = Some(lam.map_or(0, |l| l.max(0)));
            }
            let Some(lam) = lam else { continue };
            let level = (k + 1).max(2 * k + lam);
            let n = pow_p(p, (level - k) as u32);
            if n > MAX_POINTS {
                return Err(Error::Window(format!("shell {} needs {} points", k, n)));
            }
            let wq = q.powi(-level);
            let sign = match kind {
                ExtKind::Split => 1.0,
                ExtKind::Inert => eta_of_val(k) as f64,
            };
            let us: Vec<i64> = (1..n).filter(|u| u % p as i64 != 0).collect();
            let pts: Result<Vec<(PadicScalar, C64)>> = us
                .par_iter()
                .map(|&u| {
                    let x = PadicScalar::new(p, k, u, prec);
                    let g = e.ft(&x.inv()?)? * sign * q.powi(k);
                    Ok((x, g * wq))
                })
                .collect();
            let pts: Vec<_> = pts?.into_iter().filter(|(_, g)| g.norm() > 1e-300).collect();
            if !pts.is_empty() {
                e.shells.push(Shell { k, level, pts });
            }
        }
        Ok(e)
    }

    /// `F f (y)`.
    pub fn ft(&self, y: &PadicScalar) -> Result<C64> {
        let vy = if y.is_zero() { None } else { y.valuation() };
        let vmax = vy.unwrap_or(i32::MAX);
        let mut s = ZERO;
        for (c, n, w) in &self.atoms {
            if vmax < -n {
                continue;
            }
            let ch = if c.is_zero() { ZERO + 1.0 } else { psi_eval(&c.mul(y).neg())? };
            s += *w * self.q.powi(-n) * ch;
        }
        if let Some(g) = &self.g0 {
            s += g.fourier_radial(self.kind, self.q, vy);
        }
        if let Some(g) = &self.g1 {
            s += psi_eval(y)? * g.fourier_radial(self.kind, self.q, vy);
        }
        Ok(s)
    }

    fn eta_k(&self, k: i32) -> f64 {
        match self.kind {
            ExtKind::Split => 1.0,
            ExtKind::Inert => eta_of_val(k) as f64,
        }
    }

    /// `G f (xi)`.
    pub fn eval(&self, xi: &PadicScalar) -> Result<C64> {
        let v = xi.valuation().ok_or_else(|| Error::Irregular("G f at 0".into()))?;
        let q = self.q;
        let mut total = ZERO;
        // region I: 1/x deep enough that F f is constant
        if self.ft0.norm() > 0.0 {
            for k in (-v - 1)..=(-self.big_a) {
                let ik = if k >= -v { q.powi(-k) * (1.0 - 1.0 / q) } else { -q.powi(-k - 1) };
                total += self.ft0 * self.eta_k(k) * q.powi(k) * ik;
            }
        }
        // region II: explicit shells
        for sh in &self.shells {
            if sh.level < -v {
                continue;
            }
            let mut s = ZERO;
            for (x, g) in &sh.pts {
                s += *g * psi_eval(&x.mul(xi).neg())?;
            }
            total += s;
        }
        // region III: asymptotic part of F f
        let kk = self.big_k;
        if v >= -kk {
            total += self.b0 * q.powi(-kk);
        }
        if self.b1.norm() > 0.0 {
            let a = xi.neg();
            let one = PadicScalar::one(self.p, self.prec);
            for k in kk..=kk.max(-v) {
                total += self.b1 * oscillatory_shell_integral(&a, &one, MellinCharacter::Trivial, -k, self.kind)?;
            }
        }
        Ok(total)
    }

    /// Output shell level: `G f` is constant on cosets of `p^level` inside the shell `val = v`.
    fn out_level(&self, v: i32) -> i32 {
        let mut l = v + 1;
        for sh in &self.shells {
            if sh.level >= -v {
                l = l.max(-sh.k);
            }
        }
        if self.b1.norm() > 0.0 && v < -self.big_k {
            l = l.max(-self.big_k);
        }
        l
    }

    fn max_shell_level(&self) -> Option<i32> {
        self.shells.iter().map(|s| s.level).max()
    }

    /// Germ level of the output at 0.
    pub fn out_germ_level(&self) -> i32 {
        self.big_a.max(1)
    }

    fn tabulate(&self, vlo: i32, vhi: i32, weight: impl Fn(i32) -> f64 + Sync) -> Result<BruhatFn> {
        let p = self.p;
        let mut cosets = Vec::new();
        let mut total: i64 = 0;
        for v in vlo..=vhi {
            let l = self.out_level(v);
            let n = pow_p(p, (l - v) as u32);
            total += n;
            if total > MAX_POINTS {
                return Err(Error::Window(format!("output window [{}, {}] needs more than {} points", vlo, vhi, MAX_POINTS)));
            }
            for u in 1..n {
                if u % p as i64 != 0 {
                    cosets.push(Coset { level: l, val: v, unit: u });
                }
            }
        }
        let vals: Result<Vec<(Coset, C64)>> = cosets
            .par_iter()
            .map(|c| {
                let x = c.center(p, self.prec);
                Ok((*c, self.eval(&x)? * weight(c.val)))
            })
            .collect();
        let vals = vals?.into_iter().map(|(c, w)| (c, if w.norm() < 1e-15 { ZERO } else { w }));
        Ok(BruhatFn::from_disjoint(p, vals).compress(1e-12))
    }

    /// Fit `a + b nu` on the shells `level, level + 1`; the residual is measured on deeper shells and other units.
    fn fit_zero_germ(&self, level: i32, weight: impl Fn(i32) -> f64) -> Result<(Germ, f64)> {
        let p = self.p;
        let val_at = |v: i32, u: i64| -> Result<C64> { Ok(self.eval(&PadicScalar::new(p, v, u, self.prec))? * weight(v)) };
        let f0 = val_at(level, 1)?;
        let f1 = val_at(level + 1, 1)?;
        let g = fit_two(self.kind, level, f0, f1);
        let mut res: f64 = 0.0;
        for v in level..level + 4 {
            for u in [1, 2, p as i64 - 1, p as i64 + 1] {
                res = res.max((val_at(v, u)? - g.value(self.kind, v)).norm());
            }
        }
        Ok((g, res))
    }
}

/// The germ `a + b nu` through the values `f0` at `level` and `f1` at `level + 1`.
pub fn fit_two(kind: ExtKind, level: i32, f0: C64, f1: C64) -> Germ {
    match kind {
        ExtKind::Split => {
            let b = f1 - f0;
            Germ { a: f0 - b * level as f64, b, level }
        }
        ExtKind::Inert => {
            let e = eta_of_val(level) as f64;
            Germ { a: (f0 + f1) * 0.5, b: (f0 - f1) * 0.5 * e, level }
        }
    }
}

/// Diagnostics attached to a transform: fit residuals of the output germs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GReport {
    pub germ_residual: f64,
    pub tail_residual: f64,
    pub window_atoms: usize,
}

pub fn g_eval_sx(f: &SXElem, xi: &PadicScalar) -> Result<C64> {
    GEngine::new(f.p, f.kind, &f.window, f.zero_germ, None)?.eval(xi)
}

pub fn g_eval_sz(f: &SZElem, xi: &PadicScalar) -> Result<C64> {
    GEngine::new(f.p, f.kind, &f.window, f.germ0, f.germ1)?.eval(xi)
}

pub fn g_transform_sx_report(f: &SXElem) -> Result<(SXElem, GReport)> {
    f.validate()?;
    if f.is_zero() {
        return Ok((SXElem::zero(f.p, f.kind), GReport::default()));
    }
    let e = GEngine::new(f.p, f.kind, &f.window, f.zero_germ, None)?;
    let lg = e.out_germ_level();
    let mut vlo = e.big_a - 1;
    if let Some(m) = e.max_shell_level() {
        vlo = vlo.min(-m);
    }
    if e.b0.norm() > 0.0 {
        vlo = vlo.min(-e.big_k);
    }
    let window = e.tabulate(vlo, lg - 1, |_| 1.0)?;
    let (g, res) = e.fit_zero_germ(lg, |_| 1.0)?;
    let rep = GReport { germ_residual: res, tail_residual: 0.0, window_atoms: window.num_atoms() };
    Ok((SXElem { p: f.p, kind: f.kind, window, zero_germ: Some(g) }, rep))
}

/// `G f` as an element of `S(X)`.
pub fn g_transform_sx(f: &SXElem) -> Result<SXElem> {
    Ok(g_transform_sx_report(f)?.0)
}

pub fn g_transform_z_to_w_report(f: &SZElem) -> Result<(SWElem, GReport)> {
    f.validate()?;
    if f.is_zero() {
        return Ok((SWElem::zero(f.p, f.kind), GReport::default()));
    }
    let p = f.p;
    let q = p as f64;
    let e = GEngine::new(p, f.kind, &f.window, f.germ0, f.germ1)?;
    let lg = e.out_germ_level();
    let absw = move |v: i32| q.powi(-v);
    let (g, germ_res) = e.fit_zero_germ(lg, |_| 1.0)?;
    let wg = match f.kind {
        ExtKind::Split => WGerm { c1: g.b, c2: g.a, level: lg },
        ExtKind::Inert => WGerm { c1: g.a, c2: g.b, level: lg },
    };
    let mut tail = None;
    let mut tail_res: f64 = 0.0;
    let vlo;
    if e.b1.norm() > 0.0 {
        let ms = e.max_shell_level().unwrap_or(i32::MIN / 4);
        let vt = -(ms + 1).max(2 * e.big_k - 1).max(e.big_k + 1);
        vlo = vt + 1;
        tail = Some(KlTail { c: e.b1, m: -vt });
        for v in [vt, vt - 2] {
            for u in [1i64, 2, p as i64 - 1] {
                let x = PadicScalar::new(p, v, u, e.prec);
                let lhs = e.eval(&x)? * absw(v);
                tail_res = tail_res.max((lhs - e.b1 * kl_germ(&x)?).norm());
            }
        }
    } else {
        let mut lo = e.big_a - 1;
        if let Some(m) = e.max_shell_level() {
            lo = lo.min(-m);
        }
        if e.b0.norm() > 0.0 {
            lo = lo.min(-e.big_k);
        }
        vlo = lo;
    }
    let window = e.tabulate(vlo, lg - 1, absw)?;
    let rep = GReport { germ_residual: germ_res, tail_residual: tail_res, window_atoms: window.num_atoms() };
    Ok((SWElem { p, kind: f.kind, s: ZERO, window, zero_germ: Some(wg), inf_tail: tail }, rep))
}

/// `|.| G f` as an element of `S(W)` with `s = 0`.
pub fn g_transform_z_to_w(f: &SZElem) -> Result<SWElem> {
    Ok(g_transform_z_to_w_report(f)?.0)
}

fn need_kind(kind: ExtKind, want: ExtKind, what: &str) -> Result<()> {
    if kind != want {
        return Err(Error::Kind(format!("{} needs the {} case", what, want.name())));
    }
    Ok(())
}

/// Coefficient of `-ln|x|` in the germ at 0.
pub fn extract_o0(f: &SXElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Split, "extract_o0")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.b / (f.p as f64).ln()))
}

pub fn extract_ou(f: &SXElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Split, "extract_ou")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.a))
}

pub fn extract_o01(f: &SXElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Inert, "extract_o01")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.a))
}

pub fn extract_o0kappa(f: &SXElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Inert, "extract_o0kappa")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.b))
}

/// Coefficient of `-ln|x| |x|^{s+1}` in the germ at 0.
pub fn extract_o0_delta(f: &SWElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Split, "extract_o0_delta")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.c1 / (f.p as f64).ln()))
}

pub fn extract_ou_delta(f: &SWElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Split, "extract_ou_delta")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.c2))
}

pub fn extract_o0_1_delta(f: &SWElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Inert, "extract_o0_1_delta")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.c1))
}

pub fn extract_o0_eta_delta(f: &SWElem) -> Result<C64> {
    need_kind(f.kind, ExtKind::Inert, "extract_o0_eta_delta")?;
    Ok(f.zero_germ.map_or(ZERO, |g| g.c2))
}

/// Inner product of an element of `S(Z)`, read off the germ at `-1`.
pub fn ip_torus(f: &SZElem) -> C64 {
    match (f.germ1, f.kind) {
        (None, _) => ZERO,
        (Some(g), ExtKind::Split) => g.b / (f.p as f64).ln(),
        (Some(g), ExtKind::Inert) => g.b,
    }
}

/// Inner product of an element of `S(W)`: the Kloosterman tail constant.
pub fn ip_kuz(f: &SWElem) -> C64 {
    f.inf_tail.map_or(ZERO, |t| t.c)
}

/// `f^(chi) = int |x|^{1/2} f(x) chi^{-1}(x) d^x x` for `chi^{-1}(p) = chi_q * t`.
pub fn mellin_component(f: &SXElem, chi: MellinCharacter) -> Result<RationalFnT> {
    let p = f.p;
    let q = p as f64;
    let alpha = q.powf(-0.5) * chi.at_p(f.kind);
    let (shells, balls) = f.window.shell_integrals();
    let mut r = RationalFnT::zero();
    if let (Some(&lo), Some(&hi)) = (shells.keys().next(), shells.keys().next_back()) {
        let coeffs: Vec<C64> = (lo..=hi).map(|v| shells.get(&v).copied().unwrap_or_default() * alpha.powi(v) * q.powi(v)).collect();
        r = RationalFnT::laurent(coeffs, lo);
    }
    let one = C64::new(1.0, 0.0);
    let ca = C64::new(alpha, 0.0);
    let geo = |c: C64, n: i32| RationalFnT::from_parts(vec![c * alpha.powi(n)], vec![one, -ca], n);
    for (n, w) in balls {
        r = r.add(&geo(w * (1.0 - 1.0 / q), n));
    }
    if let Some(g) = f.zero_germ {
        let l = g.level;
        let lf = l as f64;
        r = r.add(&geo(g.a * (1.0 - 1.0 / q), l));
        let b = g.b * (1.0 - 1.0 / q);
        let term = match f.kind {
            ExtKind::Split => RationalFnT::from_parts(
                vec![b * alpha.powi(l) * lf, -b * alpha.powi(l + 1) * (lf - 1.0)],
                vec![one, -ca * 2.0, ca * ca],
                l,
            ),
            ExtKind::Inert => RationalFnT::from_parts(vec![b * (-alpha).powi(l)], vec![one, ca], l),
        };
        r = r.add(&term);
    }
    Ok(r)
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn window_json(f: &BruhatFn) -> Value {
    let atoms: Vec<Value> = f
        .atoms()
        .map(|(c, w)| {
            if c.is_zero_coset() {
                json!([0, c.level, c.level, w.re, w.im])
            } else {
                json!([c.unit, c.val, c.level, w.re, w.im])
            }
        })
        .collect();
    Value::Array(atoms)
}

fn germ_json(g: &Option<Germ>) -> Value {
    match g {
        None => Value::Null,
        Some(g) => json!({"type": "germ", "a": cjson(g.a), "b": cjson(g.b), "level": g.level}),
    }
}

impl SXElem {
    pub fn to_json(&self) -> Value {
        json!({"space": "X", "p": self.p, "kind": self.kind.name(), "window": window_json(&self.window), "zeroGerm": germ_json(&self.zero_germ)})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (p, kind) = header(v, "X")?;
        Ok(SXElem { p, kind, window: window_from_json(p, &v["window"])?, zero_germ: germ_from_json(&v["zeroGerm"])? })
    }
}

impl SZElem {
    pub fn to_json(&self) -> Value {
        json!({
            "space": "Z", "p": self.p, "kind": self.kind.name(), "window": window_json(&self.window),
            "germAt0": germ_json(&self.germ0), "germAtMinus1": germ_json(&self.germ1)
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (p, kind) = header(v, "Z")?;
        Ok(SZElem {
            p,
            kind,
            window: window_from_json(p, &v["window"])?,
            germ0: germ_from_json(&v["germAt0"])?,
            germ1: germ_from_json(&v["germAtMinus1"])?,
        })
    }
}

impl SWElem {
    pub fn to_json(&self) -> Value {
        let zg = match &self.zero_germ {
            None => Value::Null,
            Some(g) => json!({"type": "wgerm", "c1": cjson(g.c1), "c2": cjson(g.c2), "level": g.level}),
        };
        let tail = match &self.inf_tail {
            None => Value::Null,
            Some(t) => json!({"type": "kloosterman", "C": cjson(t.c), "M": t.m}),
        };
        json!({"space": "W", "p": self.p, "kind": self.kind.name(), "s": cjson(self.s), "window": window_json(&self.window), "zeroGerm": zg, "infTail": tail})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (p, kind) = header(v, "W")?;
        let zero_germ = match &v["zeroGerm"] {
            Value::Null => None,
            g => Some(WGerm { c1: cfrom(&g["c1"])?, c2: cfrom(&g["c2"])?, level: ifrom(&g["level"])? }),
        };
        let inf_tail = match &v["infTail"] {
            Value::Null => None,
            t => Some(KlTail { c: cfrom(&t["C"])?, m: ifrom(&t["M"])? }),
        };
        Ok(SWElem { p, kind, s: cfrom(&v["s"])?, window: window_from_json(p, &v["window"])?, zero_germ, inf_tail })
    }
}

fn bad(what: &str) -> Error {
    Error::Representation(format!("malformed JSON: {}", what))
}

fn header(v: &Value, space: &str) -> Result<(u32, ExtKind)> {
    if v["space"].as_str() != Some(space) {
        return Err(bad("space tag"));
    }
    let p = v["p"].as_u64().ok_or_else(|| bad("p"))? as u32;
    let kind = v["kind"].as_str().ok_or_else(|| bad("kind"))?.parse()?;
    Ok((p, kind))
}

fn cfrom(v: &Value) -> Result<C64> {
    let a = v.as_array().ok_or_else(|| bad("complex"))?;
    if a.len() != 2 {
        return Err(bad("complex"));
    }
    Ok(C64::new(a[0].as_f64().ok_or_else(|| bad("re"))?, a[1].as_f64().ok_or_else(|| bad("im"))?))
}

fn ifrom(v: &Value) -> Result<i32> {
    Ok(v.as_i64().ok_or_else(|| bad("integer"))? as i32)
}

fn germ_from_json(v: &Value) -> Result<Option<Germ>> {
    match v {
        Value::Null => Ok(None),
        g => Ok(Some(Germ { a: cfrom(&g["a"])?, b: cfrom(&g["b"])?, level: ifrom(&g["level"])? })),
    }
}

fn window_from_json(p: u32, v: &Value) -> Result<BruhatFn> {
    let arr = v.as_array().ok_or_else(|| bad("window"))?;
    let mut atoms = Vec::with_capacity(arr.len());
    for a in arr {
        let a = a.as_array().ok_or_else(|| bad("atom"))?;
        if a.len() != 5 {
            return Err(bad("atom arity"));
        }
        let unit = a[0].as_i64().ok_or_else(|| bad("numerator"))?;
        let val = ifrom(&a[1])?;
        let level = ifrom(&a[2])?;
        let w = C64::new(a[3].as_f64().ok_or_else(|| bad("re"))?, a[4].as_f64().ok_or_else(|| bad("im"))?);
        let c = if unit == 0 { Coset::zero(level) } else { Coset { level, val, unit } };
        atoms.push((c, w));
    }
    Ok(BruhatFn::from_disjoint(p, atoms))
}

/// Values of `f` on every coset of `p^level(v)` in the shells `v` of `levels`, as a compressed window.
pub fn tabulate_window<F>(p: u32, levels: &[(i32, i32)], f: F) -> Result<BruhatFn>
where
    F: Fn(&PadicScalar) -> Result<C64> + Sync,
{
    let prec = work_prec(p);
    let mut cosets = Vec::new();
    for &(v, l) in levels {
        let n = pow_p(p, (l - v) as u32);
        if cosets.len() as i64 + n > MAX_POINTS {
            return Err(Error::Window("tabulation too large".into()));
        }
        for u in 1..n {
            if u % p as i64 != 0 {
                cosets.push(Coset { level: l, val: v, unit: u });
            }
        }
    }
    let vals: Result<Vec<(Coset, C64)>> = cosets.par_iter().map(|c| Ok((*c, f(&c.center(p, prec))?))).collect();
    let vals = vals?.into_iter().map(|(c, w)| (c, if w.norm() < 1e-15 { ZERO } else { w }));
    Ok(BruhatFn::from_disjoint(p, vals).compress(1e-12))
}


#[cfg(test)]
pub(crate) fn engine_tests_window(p: u32) -> BruhatFn {
    engine_tests::sample_window(p)
}
