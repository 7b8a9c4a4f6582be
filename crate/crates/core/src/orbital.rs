//! Orbital integrals: the baby cases on `V x V*` and `E`, the torus quotient `T\PGL2/T` by
//! brute force over coset representatives, the Kuznetsov quotient `(N,psi)\PGL2/(N,psi^-1)`,
//! basic vectors, Hecke translates, and the matching / fundamental lemma harnesses.

use crate::bruhat::{BruhatFn, BruhatFn2, Coset, Domain2};
use crate::error::{Error, Result};
use crate::field::{solve_norm, ExtKind, MeasureConstants, QuadExtData};
use crate::group::{cs_action, double_coset_reps, h_s_coeffs, hecke_to_double_coset, whittaker_eval, GroupElt, HeckeElt, KSection};
use crate::padic::{pow_p, psi_eval, work_prec, PadicScalar};
use crate::singular::{fit_two, g_transform_z_to_w_report, ip_kuz, ip_torus, kl_germ, Germ, KlTail, SWElem, SXElem, SZElem, WGerm, MAX_POINTS};
use crate::tate::{gamma_star_eta, tate_zeta, MellinCharacter};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn one(p: u32) -> PadicScalar {
    PadicScalar::one(p, work_prec(p))
}

fn minus_one(p: u32) -> PadicScalar {
    PadicScalar::from_i64(p, -1, work_prec(p))
}

/// Test data for the baby cases: `Phi` on `F^2`, or the pair `(Phi, Phi^alpha)` on `E` and its torsor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BabyInput {
    Split(BruhatFn2),
    Inert { trivial: BruhatFn2, torsor: BruhatFn2 },
}

impl BabyInput {
    pub fn p(&self) -> u32 {
        match self {
            BabyInput::Split(f) => f.p,
            BabyInput::Inert { trivial, .. } => trivial.p,
        }
    }

    pub fn kind(&self) -> ExtKind {
        match self {
            BabyInput::Split(_) => ExtKind::Split,
            BabyInput::Inert { .. } => ExtKind::Inert,
        }
    }

    pub fn zero(p: u32, kind: ExtKind) -> Self {
        match kind {
            ExtKind::Split => BabyInput::Split(BruhatFn2::zero(p, Domain2::F2, 0, 1)),
            ExtKind::Inert => BabyInput::Inert {
                trivial: BruhatFn2::zero(p, Domain2::E, 0, 1),
                torsor: BruhatFn2::zero(p, Domain2::EAlpha, 0, 1),
            },
        }
    }

    /// `1_{O x O}`, or `1_{O_E}` on the trivial copy.
    pub fn unit(p: u32, kind: ExtKind) -> Self {
        match kind {
            ExtKind::Split => BabyInput::Split(BruhatFn2::ball(p, Domain2::F2, 0, 0, 1)),
            ExtKind::Inert => BabyInput::Inert {
                trivial: BruhatFn2::ball(p, Domain2::E, 0, 0, 1),
                torsor: BruhatFn2::zero(p, Domain2::EAlpha, 0, 1),
            },
        }
    }

    /// `1_{O_E}` on the torsor copy only.
    pub fn torsor_unit(p: u32) -> Self {
        BabyInput::Inert { trivial: BruhatFn2::zero(p, Domain2::E, 0, 1), torsor: BruhatFn2::ball(p, Domain2::EAlpha, 0, 0, 1) }
    }

    pub fn scale(&self, c: C64) -> Self {
        match self {
            BabyInput::Split(f) => BabyInput::Split(f.scale(c)),
            BabyInput::Inert { trivial, torsor } => BabyInput::Inert { trivial: trivial.scale(c), torsor: torsor.scale(c) },
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        match (self, o) {
            (BabyInput::Split(a), BabyInput::Split(b)) => Ok(BabyInput::Split(a.add(b))),
            (BabyInput::Inert { trivial: a, torsor: b }, BabyInput::Inert { trivial: c, torsor: d }) => {
                Ok(BabyInput::Inert { trivial: a.add(c), torsor: b.add(d) })
            }
            _ => Err(Error::Kind("baby inputs of different kinds".into())),
        }
    }

    /// Componentwise Fourier transform. The torsor copy carries the Weil sign `-1`.
    pub fn fourier(&self) -> Result<Self> {
        match self {
            BabyInput::Split(f) => Ok(BabyInput::Split(f.fourier()?)),
            BabyInput::Inert { trivial, torsor } => Ok(BabyInput::Inert { trivial: trivial.fourier()?, torsor: torsor.fourier()?.scale(C64::new(-1.0, 0.0)) }),
        }
    }

    pub fn orbital(&self, xi: &PadicScalar) -> Result<C64> {
        match self {
            BabyInput::Split(f) => o_baby_split(f, xi),
            BabyInput::Inert { .. } => o_baby_nonsplit(self, xi),
        }
    }

    /// Random data with Gaussian values, `lo` in `{-1, 0}` and level at most 2.
    pub fn random<R: Rng>(rng: &mut R, p: u32, kind: ExtKind) -> Self {
        let draw = |domain: Domain2, rng: &mut R| {
            let lo = rng.gen_range(-1..=0);
            let level = rng.gen_range(lo + 1..=2.min(lo + 2));
            let mut f = BruhatFn2::zero(p, domain, lo, level);
            for w in f.data.iter_mut() {
                *w = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            f
        };
        match kind {
            ExtKind::Split => BabyInput::Split(draw(Domain2::F2, rng)),
            ExtKind::Inert => {
                let trivial = draw(Domain2::E, rng);
                let torsor = draw(Domain2::EAlpha, rng);
                BabyInput::Inert { trivial, torsor }
            }
        }
    }

    /// Support start, germ level and local-constancy exponent of `xi -> O_xi(Phi)`.
    fn shape(&self) -> Shape {
        match self {
            BabyInput::Split(f) => Shape { kind: ExtKind::Split, support: 2 * f.lo, level: f.level },
            BabyInput::Inert { trivial, torsor } => Shape {
                kind: ExtKind::Inert,
                support: (2 * trivial.lo).min(2 * torsor.lo + 1),
                level: trivial.level.max(torsor.level),
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Shape {
    kind: ExtKind,
    support: i32,
    level: i32,
}

impl Shape {
    /// The orbital integral has germ form from this valuation on.
    fn germ(&self) -> i32 {
        match self.kind {
            ExtKind::Split => (2 * self.level - 1).max(1),
            ExtKind::Inert => (2 * self.level + 1).max(1),
        }
    }

    /// On the shell `v` the orbital integral is constant on `xi (1 + p^e O)`.
    fn e(&self, v: i32) -> i32 {
        let half = match self.kind {
            ExtKind::Split => v.div_euclid(2),
            ExtKind::Inert => (v - 1).div_euclid(2),
        };
        (self.level - half).max(1)
    }
}

fn need_domain(f: &BruhatFn2, d: Domain2) -> Result<()> {
    if f.domain != d {
        return Err(Error::Kind(format!("expected a function on {:?}, got {:?}", d, f.domain)));
    }
    Ok(())
}

/// `O_xi(Phi) = int_{F^x} Phi(a, xi / a) d^x a`, as an exact sum over cosets of `a`.
pub fn o_baby_split(phi: &BruhatFn2, xi: &PadicScalar) -> Result<C64> {
    need_domain(phi, Domain2::F2)?;
    let v = xi.valuation().ok_or_else(|| Error::Irregular("split baby orbital integral at 0".into()))?;
    let p = phi.p;
    let q = p as f64;
    let (lo, l) = (phi.lo, phi.level);
    if v < 2 * lo {
        return Ok(ZERO);
    }
    let prec = work_prec(p);
    let mut s = ZERO;
    for j in lo..=(v - lo) {
        if j >= l && v - j >= l {
            s += phi.at_origin() * (1.0 - 1.0 / q);
            continue;
        }
        let lev = l.max(j + 1).max(l + 2 * j - v);
        let n = pow_p(p, (lev - j) as u32);
        if n > MAX_POINTS {
            return Err(Error::Window(format!("{} points on shell {}", n, j)));
        }
        let mut acc = ZERO;
        for u in 1..n {
            if u % p as i64 == 0 {
                continue;
            }
            let a = PadicScalar::new(p, j, u, prec);
            acc += phi.eval(&a, &xi.div(&a)?)?;
        }
        s += acc * q.powi(j - lev);
    }
    Ok(s)
}

fn torus_cache() -> &'static Mutex<HashMap<(u32, i32), Arc<Vec<(i64, i64)>>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, i32), Arc<Vec<(i64, i64)>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Solutions of `a^2 - u b^2 = 1` modulo `p^level`, by lifting from `p`.
pub fn norm_one_points(p: u32, level: i32) -> Arc<Vec<(i64, i64)>> {
    if let Some(v) = torus_cache().lock().unwrap().get(&(p, level)) {
        return v.clone();
    }
    let u = QuadExtData::inert(p).u as i128;
    let pi = p as i64;
    let mut pts: Vec<(i64, i64)> = Vec::new();
    for a in 0..pi {
        for b in 0..pi {
            if ((a * a) as i128 - u * (b * b) as i128 - 1).rem_euclid(pi as i128) == 0 {
                pts.push((a, b));
            }
        }
    }
    for k in 1..level.max(1) {
        let pk = pow_p(p, k as u32);
        let m = (pk as i128) * pi as i128;
        let mut next = Vec::with_capacity(pts.len() * p as usize);
        for &(a, b) in &pts {
            for da in 0..pi {
                for db in 0..pi {
                    let a1 = (a + da * pk) as i128;
                    let b1 = (b + db * pk) as i128;
                    if (a1 * a1 - u * b1 * b1 - 1).rem_euclid(m) == 0 {
                        next.push((a1 as i64, b1 as i64));
                    }
                }
            }
        }
        pts = next;
    }
    let pts = Arc::new(pts);
    torus_cache().lock().unwrap().insert((p, level), pts.clone());
    pts
}

/// `int_T Phi(z t) dt` with `vol T = 1 + 1/q`, for `z` of valuation `vz`.
fn torus_sum(phi: &BruhatFn2, z: &crate::field::EElem, vz: i32, u: i64) -> Result<C64> {
    let p = phi.p;
    let q = p as f64;
    if vz < phi.lo {
        return Ok(ZERO);
    }
    if vz >= phi.level {
        return Ok(phi.at_origin() * (1.0 + 1.0 / q));
    }
    let lev = (phi.level - vz).max(1);
    let prec = work_prec(p);
    let us = PadicScalar::from_i64(p, u, prec);
    let pts = norm_one_points(p, lev);
    let mut s = ZERO;
    for &(a, b) in pts.iter() {
        let ta = PadicScalar::from_i64(p, a, prec);
        let tb = PadicScalar::from_i64(p, b, prec);
        let x = z.a.mul(&ta).add(&us.mul(&z.b.mul(&tb)));
        let y = z.a.mul(&tb).add(&z.b.mul(&ta));
        s += phi.eval(&x, &y)?;
    }
    Ok(s * q.powi(-lev))
}

/// `O_xi(Phi) = int_T Phi(xi~ t) dt`, summed over the trivial copy (`N(xi~) = xi`) and the torsor (`p N(xi~) = xi`).
pub fn o_baby_nonsplit(phi: &BabyInput, xi: &PadicScalar) -> Result<C64> {
    let BabyInput::Inert { trivial, torsor } = phi else {
        return Err(Error::Kind("nonsplit orbital integral of split data".into()));
    };
    need_domain(trivial, Domain2::E)?;
    need_domain(torsor, Domain2::EAlpha)?;
    let v = xi.valuation().ok_or_else(|| Error::Irregular("nonsplit baby orbital integral at 0".into()))?;
    let p = trivial.p;
    let ext = QuadExtData::inert(p);
    let prec = work_prec(p);
    if v.rem_euclid(2) == 0 {
        if v / 2 < trivial.lo {
            return Ok(ZERO);
        }
        let z = solve_norm(xi, &ext, prec)?.ok_or_else(|| Error::Internal("even valuation is a norm".into()))?;
        torus_sum(trivial, &z, v / 2, ext.u)
    } else {
        let vz = (v - 1) / 2;
        if vz < torsor.lo {
            return Ok(ZERO);
        }
        let z = solve_norm(&xi.scale_p(-1), &ext, prec)?.ok_or_else(|| Error::Internal("even valuation is a norm".into()))?;
        torus_sum(torsor, &z, vz, ext.u)
    }
}

/// `Vol(T(F)_0) Phi(0)`.
pub fn o0_formula(phi: &BruhatFn2) -> C64 {
    phi.at_origin() * MeasureConstants::new(phi.p, ExtKind::Split).vol_t0
}

fn s0_coefficient(f: &BruhatFn) -> C64 {
    let q = f.p as f64;
    let (ord, c) = tate_zeta(f, MellinCharacter::Trivial, ExtKind::Split).s_laurent(q, 4);
    if ord > 0 {
        return ZERO;
    }
    c.get((-ord) as usize).copied().unwrap_or(ZERO)
}

/// Constant term of `s zeta(Phi|_{y=0}, s) + s zeta(Phi|_{x=0}, s)` differentiated at `s = 0`.
pub fn ou_formula(phi: &BruhatFn2) -> Result<C64> {
    need_domain(phi, Domain2::F2)?;
    let side = phi.side();
    let row: Vec<C64> = (0..side).map(|i| phi.get(i, 0)).collect();
    let col: Vec<C64> = (0..side).map(|j| phi.get(0, j)).collect();
    let fx = BruhatFn::from_dense(phi.p, phi.lo, phi.level, &row);
    let fy = BruhatFn::from_dense(phi.p, phi.lo, phi.level, &col);
    Ok(s0_coefficient(&fx) + s0_coefficient(&fy))
}

fn inert_parts(phi: &BabyInput) -> Result<(C64, C64, f64)> {
    match phi {
        BabyInput::Inert { trivial, torsor } => Ok((trivial.at_origin(), torsor.at_origin(), MeasureConstants::new(trivial.p, ExtKind::Inert).vol_t0)),
        _ => Err(Error::Kind("nonsplit germ of split data".into())),
    }
}

/// `1/2 Vol(T) (Phi(0_X) + Phi(0_{X^alpha}))`.
pub fn o01_formula(phi: &BabyInput) -> Result<C64> {
    let (a, b, vol) = inert_parts(phi)?;
    Ok((a + b) * 0.5 * vol)
}

/// `1/2 Vol(T) (Phi(0_X) - Phi(0_{X^alpha}))`.
pub fn o0kappa_formula(phi: &BabyInput) -> Result<C64> {
    let (a, b, vol) = inert_parts(phi)?;
    Ok((a - b) * 0.5 * vol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CellState {
    Const,
    Split,
    InBall,
}

/// Local behaviour of one summand near its singular point `0` or `-1`.
struct Term<'a> {
    at_minus_one: bool,
    support: i32,
    germ: i32,
    ball: Option<i32>,
    e: Box<dyn Fn(i32) -> i32 + Sync + 'a>,
}

impl Term<'_> {
    fn state(&self, p: u32, c: &Coset) -> CellState {
        let mut x = c.center(p, work_prec(p));
        if self.at_minus_one {
            x = x.add(&one(p));
        }
        let w = x.val_or_max();
        if w >= c.level {
            return match self.ball {
                Some(b) if c.level >= b => CellState::InBall,
                _ => CellState::Split,
            };
        }
        if w < self.support || w >= self.germ || c.level >= w + (self.e)(w) {
            CellState::Const
        } else {
            CellState::Split
        }
    }
}

/// Tabulates `f` on a disjoint cover of the ball `p^start` minus the germ balls, refining until every term is constant.
fn tabulate_cells<F>(p: u32, start: i32, terms: &[Term], max_level: i32, f: F) -> Result<BruhatFn>
where
    F: Fn(&PadicScalar) -> Result<C64> + Sync,
{
    let mut stack = vec![Coset::zero(start)];
    let mut leaves = Vec::new();
    while let Some(c) = stack.pop() {
        let st: Vec<CellState> = terms.iter().map(|t| t.state(p, &c)).collect();
        if st.contains(&CellState::InBall) {
            continue;
        }
        if st.iter().all(|s| *s == CellState::Const) {
            leaves.push(c);
            continue;
        }
        if c.level >= max_level {
            return Err(Error::Window(format!("cell {:?} does not resolve below level {}", c, max_level)));
        }
        stack.extend(c.children(p, c.level + 1));
        if (stack.len() + leaves.len()) as i64 > MAX_POINTS {
            return Err(Error::Window("window tabulation too large".into()));
        }
    }
    let prec = work_prec(p);
    let vals: Result<Vec<(Coset, C64)>> = leaves.par_iter().map(|c| Ok((*c, f(&c.center(p, prec))?))).collect();
    let vals = vals?.into_iter().filter(|(_, w)| w.norm() > 1e-15);
    Ok(BruhatFn::from_disjoint(p, vals).compress(1e-12))
}

fn point(p: u32, v: i32, u: i64) -> PadicScalar {
    PadicScalar::new(p, v, u, work_prec(p))
}

fn near_minus_one(p: u32, v: i32, u: i64) -> PadicScalar {
    minus_one(p).add(&point(p, v, u))
}

/// Largest deviation of `f` from the germ `g` on a few shells past `g.level` (two units each).
fn germ_residual<F>(kind: ExtKind, g: &Germ, at: F) -> Result<f64>
where
    F: Fn(i32, i64) -> Result<C64>,
{
    let mut r: f64 = 0.0;
    for v in g.level..g.level + 4 {
        for u in [1i64, 2] {
            r = r.max((at(v, u)? - g.value(kind, v)).norm());
        }
    }
    Ok(r)
}

/// `xi -> O_xi(Phi)` as an element of `S(X)`, with the germ fitted where it is exact.
pub fn sx_from_baby(phi: &BabyInput) -> Result<SXElem> {
    let p = phi.p();
    let kind = phi.kind();
    let sh = phi.shape();
    let l0 = sh.germ();
    let t = Term { at_minus_one: false, support: sh.support, germ: l0, ball: Some(l0), e: Box::new(move |v| sh.e(v)) };
    let window = tabulate_cells(p, sh.support.min(l0), &[t], l0 + sh.level.abs() + 8, |x| phi.orbital(x))?;
    let g = fit_two(kind, l0, phi.orbital(&point(p, l0, 1))?, phi.orbital(&point(p, l0 + 1, 1))?);
    let res = germ_residual(kind, &g, |v, u| phi.orbital(&point(p, v, u)))?;
    if res > 1e-8 {
        return Err(Error::Representation(format!("baby germ fit residual {:e}", res)));
    }
    let f = SXElem { p, kind, window, zero_germ: Some(g) };
    f.validate()?;
    Ok(f)
}

/// `f(xi) = O_xi(phi2) + O_{-1-xi}(phi1)`: the two charts glued along `xi -> -1 - xi`.
pub fn sz_from_charts(phi1: &BabyInput, phi2: &BabyInput) -> Result<SZElem> {
    if phi1.kind() != phi2.kind() || phi1.p() != phi2.p() {
        return Err(Error::Kind("chart data of different kinds".into()));
    }
    let p = phi2.p();
    let kind = phi2.kind();
    let s1 = phi1.shape();
    let s2 = phi2.shape();
    let b0 = s2.germ().max(s1.e(0)).max(1);
    let b1 = s1.germ().max(s2.e(0)).max(1);
    let f = |x: &PadicScalar| -> Result<C64> { Ok(phi2.orbital(x)? + phi1.orbital(&minus_one(p).sub(x))?) };
    let terms = [
        Term { at_minus_one: false, support: s2.support, germ: s2.germ(), ball: Some(b0), e: Box::new(move |v| s2.e(v)) },
        Term { at_minus_one: true, support: s1.support, germ: s1.germ(), ball: Some(b1), e: Box::new(move |v| s1.e(v)) },
    ];
    let start = s1.support.min(s2.support).min(0);
    let max_level = b0.max(b1) + s1.level.abs().max(s2.level.abs()) + 8;
    let window = tabulate_cells(p, start, &terms, max_level, f)?;
    let g0 = fit_two(kind, b0, f(&point(p, b0, 1))?, f(&point(p, b0 + 1, 1))?);
    let g1 = fit_two(kind, b1, f(&near_minus_one(p, b1, 1))?, f(&near_minus_one(p, b1 + 1, 1))?);
    let res = germ_residual(kind, &g0, |v, u| f(&point(p, v, u)))?.max(germ_residual(kind, &g1, |v, u| f(&near_minus_one(p, v, u)))?);
    if res > 1e-8 {
        return Err(Error::Representation(format!("chart germ fit residual {:e}", res)));
    }
    let out = SZElem { p, kind, window, germ0: Some(g0), germ1: Some(g1) };
    out.validate()?;
    Ok(out)
}

/// Hecke translate of the basic function on the left factor of `X1 x X1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPairDescriptor {
    pub p: u32,
    pub kind: ExtKind,
    pub h: HeckeElt,
}

/// Invariant `xi = -N(e1) / det g` of `T g T`, where `g = e1 + e2 sigma` splits into its `E`-linear and antilinear parts.
pub fn torus_pair_invariant(g: &GroupElt, kind: ExtKind) -> Result<PadicScalar> {
    let p = g.p();
    let det = g.det();
    let n1 = match kind {
        ExtKind::Split => g.a.mul(&g.d),
        ExtKind::Inert => {
            let prec = work_prec(p);
            let u = PadicScalar::from_i64(p, QuadExtData::inert(p).u, prec);
            let half = PadicScalar::from_i64(p, 2, prec).inv()?;
            let a1 = g.a.add(&g.d).mul(&half);
            let b1 = g.c.add(&g.b.div(&u)?).mul(&half);
            a1.mul(&a1).sub(&u.mul(&b1.mul(&b1)))
        }
    };
    let xi = n1.div(&det)?.neg();
    if xi.is_zero() || xi.add(&one(p)).is_zero() {
        return Err(Error::Irregular("pair invariant at 0 or -1".into()));
    }
    Ok(xi)
}

/// A representative of the orbit with invariant `xi`, if the orbit is nonempty.
pub fn torus_orbit_rep(xi: &PadicScalar, kind: ExtKind) -> Result<Option<GroupElt>> {
    let p = xi.p();
    let o = one(p);
    let x1 = xi.add(&o);
    if xi.is_zero() || x1.is_zero() {
        return Err(Error::Irregular("torus orbit at 0 or -1".into()));
    }
    match kind {
        ExtKind::Split => Ok(Some(GroupElt::new(xi.neg(), x1, o.neg(), o))),
        ExtKind::Inert => {
            let ext = QuadExtData::inert(p);
            let Some(e2) = solve_norm(&x1.div(xi)?, &ext, work_prec(p))? else { return Ok(None) };
            let u = PadicScalar::from_i64(p, ext.u, work_prec(p));
            Ok(Some(GroupElt::new(o.add(&e2.a), u.mul(&e2.b).neg(), e2.b, o.sub(&e2.a))))
        }
    }
}

fn row_min(x: &PadicScalar, y: &PadicScalar) -> Result<i32> {
    GroupElt::min_val_of(&[*x, *y])
}

/// `val det g - minval(row 1) - minval(row 2)`; zero exactly on `A K`.
pub fn ak_defect(g: &GroupElt) -> Result<i32> {
    Ok(g.det_val()? - row_min(&g.a, &g.b)? - row_min(&g.c, &g.d)?)
}

pub fn in_ak(g: &GroupElt) -> Result<bool> {
    Ok(ak_defect(g)? == 0)
}

/// `O_xi((h * 1_{X1(O)}) (x) 1_{X1(O)}) = vol(K) sum_{t in T/T(O)} sum_{y in G/K} h(y) 1_{T K}(gamma_xi t y)`.
pub fn o_torus_group(desc: &TorusPairDescriptor, xi: &PadicScalar) -> Result<C64> {
    let p = desc.p;
    let vol_k = MeasureConstants::new(p, desc.kind).vol_k;
    let dc = hecke_to_double_coset(p, &desc.h);
    if dc.is_empty() {
        return Ok(ZERO);
    }
    let Some(gamma) = torus_orbit_rep(xi, desc.kind)? else { return Ok(ZERO) };
    let reps: Vec<(C64, Vec<GroupElt>)> = dc.iter().map(|(&m, &d)| (d, double_coset_reps(p, m))).collect();
    let m_max = *dc.keys().max().unwrap() as i32;
    let mut s = ZERO;
    match desc.kind {
        ExtKind::Split => {
            let v = xi.val_or_max();
            let w = xi.add(&one(p)).val_or_max();
            let b = m_max + v.abs() + w.abs() + 2;
            for j in -b..=b {
                let g = gamma.mul(&GroupElt::diag_pow(p, j));
                if ak_defect(&g)? > m_max {
                    continue;
                }
                for (d, ys) in &reps {
                    for y in ys {
                        if in_ak(&g.mul(y))? {
                            s += *d;
                        }
                    }
                }
            }
        }
        ExtKind::Inert => {
            for (d, ys) in &reps {
                for y in ys {
                    if gamma.mul(y).in_k()? {
                        s += *d;
                    }
                }
            }
        }
    }
    Ok(s * vol_k)
}

/// Fits a germ at the smallest level from `start` whose prediction holds on the next shells.
fn adaptive_germ<F>(kind: ExtKind, start: i32, at: F) -> Result<Germ>
where
    F: Fn(i32, i64) -> Result<C64>,
{
    for l in start.max(1)..start.max(1) + 8 {
        let g = fit_two(kind, l, at(l, 1)?, at(l + 1, 2)?);
        if germ_residual(kind, &g, &at)? < 1e-10 {
            return Ok(g);
        }
    }
    Err(Error::Representation("no germ level found".into()))
}

/// `h * f_Z^0` as an element of `S(Z)`, from brute-force torus orbital integrals.
pub fn hecke_apply_z(p: u32, h: &HeckeElt, kind: ExtKind) -> Result<SZElem> {
    if h.is_zero() {
        return Ok(SZElem::zero(p, kind));
    }
    let desc = TorusPairDescriptor { p, kind, h: h.clone() };
    let m = h.max_degree() as i32;
    let f = |x: &PadicScalar| o_torus_group(&desc, x);
    let g0 = adaptive_germ(kind, m + 1, |v, u| f(&point(p, v, u)))?;
    let g1 = adaptive_germ(kind, m + 1, |v, u| f(&near_minus_one(p, v, u)))?;
    let terms = [
        Term { at_minus_one: false, support: -m, germ: g0.level, ball: Some(g0.level), e: Box::new(|_| 1) },
        Term { at_minus_one: true, support: -m, germ: g1.level, ball: Some(g1.level), e: Box::new(|_| 1) },
    ];
    let window = tabulate_cells(p, (-m).min(0), &terms, g0.level.max(g1.level) + m + 4, f)?;
    let out = SZElem { p, kind, window, germ0: Some(g0), germ1: Some(g1) };
    out.validate()?;
    Ok(out)
}

/// `f_Z^0`, the image of `1_{X1(O)} (x) 1_{X1(O)}`.
pub fn basic_fz0(p: u32, kind: ExtKind) -> Result<SZElem> {
    hecke_apply_z(p, &HeckeElt::basis(0), kind)
}

/// `int_{|x|^2 = |xi|} psi(x - xi / x) dx` for `|xi| > 1`.
pub fn kloosterman(xi: &PadicScalar) -> Result<C64> {
    match xi.valuation() {
        Some(v) if v < 0 => kl_germ(xi),
        _ => Err(Error::Domain("Kloosterman integral needs |xi| > 1".into())),
    }
}

/// Closed form of `O_xi(1_{x_m K} (x) 1^-_{y_0 K})`.
pub fn o_kuz_closed(p: u32, m: u32, xi: &PadicScalar) -> Result<C64> {
    let v = xi.valuation().ok_or_else(|| Error::Domain("Kuznetsov orbital integral at 0".into()))?;
    let vol = MeasureConstants::new(p, ExtKind::Split).vol_x2o;
    let m = m as i32;
    Ok(if v == m {
        C64::new(vol, 0.0)
    } else if m >= 1 && v == m - 2 {
        C64::new(-vol, 0.0)
    } else if m == 0 && v < 0 {
        kloosterman(xi)? * vol
    } else {
        ZERO
    })
}

/// `vol(X(O)) int_F sec([[xi, 0], [x, 1]]) psi(-x) dx` for a section against `1^-_{y_0 K}`.
fn kuz_direct_y0(sec: &KSection, xi: &PadicScalar) -> Result<C64> {
    let p = xi.p();
    let prec = work_prec(p);
    let v = xi.valuation().ok_or_else(|| Error::Domain("Kuznetsov orbital integral at 0".into()))?;
    let vol = MeasureConstants::new(p, ExtKind::Split).vol_x2o;
    if sec.is_zero() {
        return Ok(ZERO);
    }
    let z = PadicScalar::zero(p);
    let o = one(p);
    // |x| <= 1: the lower unipotent factor lies in K
    let mut s = sec.eval(&GroupElt::new(*xi, z, z, o))?;
    let n_max = sec.max_index() as i32;
    let depth = ((n_max - v).div_euclid(2) + 1).max(1);
    for k in 1..=depth {
        let n = pow_p(p, k as u32);
        if n > MAX_POINTS {
            return Err(Error::Window(format!("Kuznetsov shell {} too large", k)));
        }
        for u in 1..n {
            if u % p as i64 == 0 {
                continue;
            }
            let x = PadicScalar::new(p, -k, u, prec);
            let val = sec.eval(&GroupElt::new(*xi, z, x, o))?;
            if val.norm() != 0.0 {
                s += val * psi_eval(&x.neg())?;
            }
        }
    }
    Ok(s * vol)
}

/// `O_xi(sec1 (x) sec2)` by direct integration over the Iwasawa coordinates; `sec2` is moved onto
/// the first factor through `1^-_{y_n K} = q^{n/2} h_n * 1^-_{y_0 K}`.
pub fn o_kuz_direct(p: u32, sec1: &KSection, sec2: &KSection, xi: &PadicScalar) -> Result<C64> {
    let q = p as f64;
    let mut h = HeckeElt::zero();
    for (&n, &c) in &sec2.coeffs {
        h = h.add(&HeckeElt::basis(n).scale(c * q.powf(n as f64 / 2.0)));
    }
    if h.is_zero() {
        return Ok(ZERO);
    }
    kuz_direct_y0(&cs_action(p, &h, sec1), xi)
}

fn epsilon(kind: ExtKind) -> i32 {
    match kind {
        ExtKind::Split => 1,
        ExtKind::Inert => -1,
    }
}

fn l_eta(p: u32, kind: ExtKind, s: C64) -> Result<C64> {
    let den = C64::new(1.0, 0.0) - C64::new(p as f64, 0.0).powc(-2.0 * s - 1.0) * epsilon(kind) as f64;
    if den.norm() < 1e-14 {
        return Err(Error::Pole(format!("L(eta, 2s+1) has a pole at s = {}", s)));
    }
    Ok(den.inv())
}

/// `f_s^0(xi) = vol L(eta, 2s+1) (|xi|^{s+1} (I - q^{-2s-1} p^2.) f(xi) + 1_{|xi| = q^2} + KL(xi))`.
pub fn fw0_closed(p: u32, kind: ExtKind, s: C64, xi: &PadicScalar) -> Result<C64> {
    let v = xi.valuation().ok_or_else(|| Error::Domain("f_s^0 at 0".into()))?;
    let q = C64::new(p as f64, 0.0);
    let k = l_eta(p, kind, s)? * MeasureConstants::new(p, kind).vol_x2o;
    let base = |w: i32| -> f64 {
        if w < 0 {
            return 0.0;
        }
        match kind {
            ExtKind::Split => 1.0 + w as f64,
            ExtKind::Inert => {
                if w % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    // (p^2 . f)(xi) = |p^2|^{1/2} f(p^2 xi)
    let shifted = base(v + 2) / p as f64;
    let mut r = q.powc(-(s + 1.0) * v as f64) * (base(v) - q.powc(-2.0 * s - 1.0) * shifted);
    if v == -2 {
        r += 1.0;
    }
    if v < 0 {
        r += kloosterman(xi)?;
    }
    Ok(r * k)
}

/// `sum_m c(m, s) O_xi(1_{x_m K} (x) 1^-_{y_0 K})` for `H_s * 1_{x_0 K} = sum_m c(m, s) 1_{x_m K}`.
pub fn fw0_series(p: u32, kind: ExtKind, s: C64, xi: &PadicScalar) -> Result<C64> {
    let v = xi.valuation().ok_or_else(|| Error::Domain("f_s^0 at 0".into()))?;
    let n_max = (v + 6).max(6) as u32;
    let c = h_s_coeffs(p, s, epsilon(kind), n_max)?;
    let mut r = ZERO;
    for (m, cm) in c.iter().enumerate() {
        r += cm * o_kuz_closed(p, m as u32, xi)?;
    }
    Ok(r)
}

/// Germ `|xi|^{s+1}(c1 val + c2)` or `|xi|^{s+1}(c1 + c2 eta)` through two values.
fn fit_wgerm(p: u32, kind: ExtKind, s: C64, level: i32, f0: C64, f1: C64) -> WGerm {
    let q = C64::new(p as f64, 0.0);
    let g0 = f0 * q.powc((s + 1.0) * level as f64);
    let g1 = f1 * q.powc((s + 1.0) * (level + 1) as f64);
    let g = fit_two(kind, level, g0, g1);
    match kind {
        ExtKind::Split => WGerm { c1: g.b, c2: g.a, level },
        ExtKind::Inert => WGerm { c1: g.a, c2: g.b, level },
    }
}

fn sw_from_values<F>(p: u32, kind: ExtKind, s: C64, level: i32, tail: C64, f: F) -> Result<SWElem>
where
    F: Fn(&PadicScalar) -> Result<C64> + Sync,
{
    let levels: Vec<(i32, i32)> = (-1..level).map(|v| (v, v + 1)).collect();
    let window = crate::singular::tabulate_window(p, &levels, &f)?;
    let g = fit_wgerm(p, kind, s, level, f(&point(p, level, 1))?, f(&point(p, level + 1, 1))?);
    let out = SWElem { p, kind, s, window, zero_germ: Some(g), inf_tail: Some(KlTail { c: tail, m: 2 }) };
    for v in level..level + 4 {
        let x = point(p, v, 2);
        let r = (out.eval(&x)? - f(&x)?).norm();
        if r > 1e-9 * (1.0 + f(&x)?.norm()) {
            return Err(Error::Representation(format!("Kuznetsov germ fit residual {:e} at valuation {}", r, v)));
        }
    }
    out.validate()?;
    Ok(out)
}

/// `f_s^0` as an element of `S(W^s)`, from the closed form.
pub fn basic_fw0(p: u32, kind: ExtKind, s: C64) -> Result<SWElem> {
    let k = l_eta(p, kind, s)? * MeasureConstants::new(p, kind).vol_x2o;
    sw_from_values(p, kind, s, 1, k, |x| fw0_closed(p, kind, s, x))
}

/// Coefficients of `h * H_s * 1_{x_0 K}` on `1_{x_n K}`, exact for `n <= n_max - deg h`.
pub fn hecke_w_section(p: u32, kind: ExtKind, h: &HeckeElt, s: C64, n_max: u32) -> Result<KSection> {
    let c = h_s_coeffs(p, s, epsilon(kind), n_max)?;
    let sec = KSection { coeffs: c.into_iter().enumerate().map(|(n, x)| (n as u32, x)).collect() };
    Ok(cs_action(p, h, &sec))
}

/// `h * f_W^0` at `s`, summing closed-form orbital integrals of the expanded section.
pub fn hecke_apply_w(p: u32, kind: ExtKind, h: &HeckeElt, s: C64) -> Result<SWElem> {
    if h.is_zero() {
        l_eta(p, kind, s)?;
        return Ok(SWElem { s, ..SWElem::zero(p, kind) });
    }
    let deg = h.max_degree();
    let level = deg as i32 + 2;
    let sec = hecke_w_section(p, kind, h, s, level as u32 + 3 * deg + 8)?;
    let f = |x: &PadicScalar| -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Domain("Kuznetsov orbital integral at 0".into()))?;
        let mut r = ZERO;
        let ns: std::collections::BTreeSet<i32> = [0, v, v + 2].into_iter().filter(|n| *n >= 0).collect();
        for n in ns {
            if let Some(c) = sec.coeffs.get(&(n as u32)) {
                r += c * o_kuz_closed(p, n as u32, x)?;
            }
        }
        Ok(r)
    };
    let vol = MeasureConstants::new(p, kind).vol_x2o;
    let tail = sec.coeffs.get(&0).copied().unwrap_or(ZERO) * vol;
    sw_from_values(p, kind, s, level, tail, f)
}

/// One comparison point of the fundamental lemma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FLPoint {
    pub val: i32,
    /// `xi = p^val * unit`, or `xi = -1 + p^val * unit` when `near_minus_one`.
    pub unit: i64,
    pub near_minus_one: bool,
    pub lhs: C64,
    pub rhs: C64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FLReport {
    pub prime: u32,
    pub kind: ExtKind,
    pub hecke: Vec<(u32, C64)>,
    pub window: (i32, i32),
    pub constant: C64,
    pub points: Vec<FLPoint>,
    pub max_error: f64,
    /// Error of the untwisted comparison `|.| G(h * f_Z^0)` against `h * f_W^0` (inert only differs).
    pub literal_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub millis: u128,
}

fn fl_points(p: u32, lo: i32, hi: i32) -> Vec<(i32, i64, bool)> {
    let pi = p as i64;
    let mut pts = Vec::new();
    let units: BTreeSet<i64> = [1, 2, pi - 1, pi + 1].into_iter().collect();
    for v in lo..=hi {
        for &u in &units {
            pts.push((v, u, false));
        }
    }
    for v in 1..=hi.max(1) {
        for u in [1, 2] {
            pts.push((v, u, true));
        }
    }
    pts
}

/// Global constant `c` with `c |.| G(f_Z^0)(1) = f_W^0(1)`.
pub fn fl_constant(p: u32, kind: ExtKind) -> Result<C64> {
    let lhs = g_transform_z_to_w_report(&basic_fz0(p, kind)?.eta_twist()?)?.0.eval(&one(p))?;
    let rhs = basic_fw0(p, kind, ZERO)?.eval(&one(p))?;
    if lhs.norm() < 1e-300 {
        return Err(Error::Representation("fundamental lemma constant undefined: lhs vanishes".into()));
    }
    Ok(rhs / lhs)
}

/// `|.| G(eta * (h * f_Z^0)) = h * f_W^0` on `val(xi)` in `window`, with the global constant fitted at `h_0`, `xi = 1`.
/// In the inert case the untwisted transform intertwines `h_n` with `(-1)^n h_n`; its error is kept in `literal_error`.
pub fn verify_fl(p: u32, kind: ExtKind, h: &HeckeElt, window: (i32, i32), tolerance: f64) -> Result<FLReport> {
    let t0 = Instant::now();
    let constant = fl_constant(p, kind)?;
    let fz = hecke_apply_z(p, h, kind)?;
    let lhs_elem = g_transform_z_to_w_report(&fz.eta_twist()?)?.0;
    let literal_elem = g_transform_z_to_w_report(&fz)?.0;
    let rhs_elem = hecke_apply_w(p, kind, h, ZERO)?;
    let pts: Result<Vec<(FLPoint, f64)>> = fl_points(p, window.0, window.1)
        .par_iter()
        .map(|&(val, unit, nm)| {
            let x = if nm { near_minus_one(p, val, unit) } else { point(p, val, unit) };
            let lhs = lhs_elem.eval(&x)?;
            let rhs = rhs_elem.eval(&x)?;
            let lit = (literal_elem.eval(&x)? - rhs).norm();
            Ok((FLPoint { val, unit, near_minus_one: nm, lhs, rhs, error: (lhs - rhs).norm() }, lit))
        })
        .collect();
    let (points, lits): (Vec<FLPoint>, Vec<f64>) = pts?.into_iter().unzip();
    let literal_error = lits.into_iter().fold(0.0, f64::max);
    let max_error = points.iter().map(|r| r.error).fold(0.0, f64::max).max((constant - 1.0).norm());
    Ok(FLReport {
        prime: p,
        kind,
        hecke: h.coeffs.iter().map(|(n, c)| (*n, *c)).collect(),
        window,
        constant,
        points,
        max_error,
        literal_error,
        tolerance,
        pass: max_error <= tolerance,
        millis: t0.elapsed().as_millis(),
    })
}

/// One sampled input of the matching check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingSample {
    pub index: usize,
    pub germ_residual: f64,
    pub tail_residual: f64,
    pub ip_torus: C64,
    pub ip_kuz: C64,
    pub ip_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingReport {
    pub prime: u32,
    pub kind: ExtKind,
    pub seed: u64,
    pub gamma_star: C64,
    pub samples: Vec<MatchingSample>,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A random element of `S(Z)` glued from random chart data.
pub fn random_sz<R: Rng>(rng: &mut R, p: u32, kind: ExtKind) -> Result<SZElem> {
    let a = BabyInput::random(rng, p, kind);
    let b = BabyInput::random(rng, p, kind);
    sz_from_charts(&a, &b)
}

/// Shape of `|.| G f` and `<|.| G f> = gamma*(eta, 0, psi) <f>` on seeded random inputs.
pub fn verify_matching(p: u32, kind: ExtKind, samples: usize, seed: u64, tolerance: f64) -> Result<MatchingReport> {
    use rand::SeedableRng;
    let gamma_star = gamma_star_eta(p, kind)?.0;
    let inputs: Vec<SZElem> = {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..samples).map(|_| random_sz(&mut rng, p, kind)).collect::<Result<_>>()?
    };
    let out: Result<Vec<MatchingSample>> = inputs
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            let (w, rep) = g_transform_z_to_w_report(f)?;
            let it = ip_torus(f);
            let ik = ip_kuz(&w);
            Ok(MatchingSample { index, germ_residual: rep.germ_residual, tail_residual: rep.tail_residual, ip_torus: it, ip_kuz: ik, ip_error: (ik - gamma_star * it).norm() })
        })
        .collect();
    let samples = out?;
    let max_error = samples.iter().map(|s| s.germ_residual.max(s.tail_residual).max(s.ip_error)).fold(0.0, f64::max);
    Ok(MatchingReport { prime: p, kind, seed, gamma_star, samples, max_error, tolerance, pass: max_error <= tolerance })
}

/// `(vol(A(O)) sum_n W_pi(diag(p^n, 1)) q^{-ns}, vol(A(O)) L(pi, 1/2 + s))` for Satake parameter `alpha`.
pub fn whittaker_unfolding_check(p: u32, alpha: C64, s: C64) -> Result<(C64, C64)> {
    let q = p as f64;
    let r = alpha.norm().max(1.0 / alpha.norm()) * q.powf(-0.5 - s.re);
    if !(r < 0.999) {
        return Err(Error::Domain(format!("Whittaker integral diverges: ratio {}", r)));
    }
    let vol = 1.0 - 1.0 / q;
    let qs = C64::new(q, 0.0);
    let mut lhs = ZERO;
    let mut n = 0;
    loop {
        let term = whittaker_eval(p, alpha, n) * qs.powc(-s * n as f64);
        lhs += term;
        let bound = (n as f64 + 2.0) * r.powi(n + 1) / (1.0 - r) / (1.0 - r);
        if bound < 1e-15 || n > 100_000 {
            break;
        }
        n += 1;
    }
    let x = qs.powc(-s - 0.5);
    let l = ((C64::new(1.0, 0.0) - alpha * x) * (C64::new(1.0, 0.0) - x / alpha)).inv();
    Ok((lhs * vol, l * vol))
}

/// Coefficients of a Hecke element on the double cosets, for reports.
pub fn hecke_support(p: u32, h: &HeckeElt) -> BTreeMap<u32, C64> {
    hecke_to_double_coset(p, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::iwasawa_decompose;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn split_unit_lattice() {
        let p = 3;
        let q = 3.0;
        let phi = BruhatFn2::ball(p, Domain2::F2, 0, 0, 1);
        for k in 0..4 {
            let v = o_baby_split(&phi, &point(p, k, 2)).unwrap();
            assert!((v - c((k + 1) as f64 * (1.0 - 1.0 / q))).norm() < 1e-12);
        }
        assert_eq!(o_baby_split(&phi, &point(p, -1, 1)).unwrap(), ZERO);
        assert!(o_baby_split(&phi, &PadicScalar::zero(p)).is_err());
    }

    #[test]
    fn nonsplit_unit_lattice() {
        for p in [3u32, 5] {
            let vol = 1.0 + 1.0 / p as f64;
            let phi = BabyInput::unit(p, ExtKind::Inert);
            for k in 0..4 {
                let v = o_baby_nonsplit(&phi, &point(p, k, 1)).unwrap();
                let want = if k % 2 == 0 { vol } else { 0.0 };
                assert!((v - c(want)).norm() < 1e-12, "{} {}", k, v);
            }
            assert_eq!(norm_one_points(p, 3).len() as u32, (p + 1) * p * p);
        }
    }

    /// Sum over `T mod p^l` against brute-force enumeration of `(O_E / p^l)^2`.
    #[test]
    fn norm_one_lift_is_complete() {
        let p = 3u32;
        let u = QuadExtData::inert(p).u;
        let m = 27i64;
        let mut n = 0;
        for a in 0..m {
            for b in 0..m {
                if (a * a - u * b * b - 1).rem_euclid(m) == 0 {
                    n += 1;
                }
            }
        }
        assert_eq!(n, norm_one_points(p, 3).len());
    }

    #[test]
    fn invariant_conventions() {
        for p in [3u32, 5] {
            let prec = work_prec(p);
            for kind in [ExtKind::Split, ExtKind::Inert] {
                assert!(torus_pair_invariant(&GroupElt::identity(p), kind).is_err());
                for (v, u) in [(0, 1), (1, 2), (-2, 1), (3, 4)] {
                    let xi = PadicScalar::new(p, v, u, prec);
                    if let Some(g) = torus_orbit_rep(&xi, kind).unwrap() {
                        assert!(torus_pair_invariant(&g, kind).unwrap().approx_eq(&xi));
                    }
                }
            }
            // iota(x, y) = [[1, x], [y, 1 + x y]] has invariant -1 - x y
            let x = PadicScalar::new(p, 1, 2, prec);
            let y = PadicScalar::new(p, 0, 1, prec);
            let g = GroupElt::new(one(p), x, y, one(p).add(&x.mul(&y)));
            let xi = torus_pair_invariant(&g, ExtKind::Split).unwrap();
            assert!(minus_one(p).sub(&xi).approx_eq(&x.mul(&y)));
        }
    }

    /// `g K` meets `A K` exactly when the Iwasawa unipotent coordinate lies in `p^a O`.
    #[test]
    fn ak_membership_matches_iwasawa() {
        let p = 3u32;
        for m in 0..=3u32 {
            for y in double_coset_reps(p, m) {
                for j in -2..=2 {
                    for x in [0i64, 1, 4] {
                        let g = GroupElt::from_ints(p, [1, x, 2, 1]).mul(&GroupElt::diag_pow(p, j)).mul(&y);
                        let iw = iwasawa_decompose(&g).unwrap();
                        let want = iw.u.is_zero() || iw.u.val_or_max() >= iw.a;
                        assert_eq!(in_ak(&g).unwrap(), want);
                    }
                }
            }
        }
    }

    /// Torus orbital integrals against `vol(K) sum_{j1, j2} h(t1 gamma t2)` read off the Cartan invariant.
    #[test]
    fn torus_group_matches_cartan_oracle() {
        let p = 3u32;
        let prec = work_prec(p);
        for n in 0..=2u32 {
            let h = HeckeElt::basis(n);
            let dc = hecke_to_double_coset(p, &h);
            for kind in [ExtKind::Split, ExtKind::Inert] {
                let desc = TorusPairDescriptor { p, kind, h: h.clone() };
                let vol = MeasureConstants::new(p, kind).vol_k;
                for (v, u) in [(0, 1), (1, 1), (2, 2), (-1, 1), (-2, 2), (0, 2)] {
                    let xi = PadicScalar::new(p, v, u, prec);
                    let got = o_torus_group(&desc, &xi).unwrap();
                    let mut want = ZERO;
                    if let Some(g) = torus_orbit_rep(&xi, kind).unwrap() {
                        let range: Vec<i32> = if kind == ExtKind::Split { (-8..=8).collect() } else { vec![0] };
                        for &j1 in &range {
                            for &j2 in &range {
                                let k = GroupElt::diag_pow(p, j1).mul(&g).mul(&GroupElt::diag_pow(p, j2)).cartan().unwrap();
                                want += dc.get(&(k as u32)).copied().unwrap_or(ZERO);
                            }
                        }
                    }
                    assert!((got - want * vol).norm() < 1e-12, "{:?} n={} v={} u={}: {} vs {}", kind, n, v, u, got, want * vol);
                }
            }
        }
    }

    #[test]
    fn basic_torus_closed_form() {
        let p = 3u32;
        let vol = MeasureConstants::new(p, ExtKind::Split).vol_k;
        let desc = TorusPairDescriptor { p, kind: ExtKind::Split, h: HeckeElt::basis(0) };
        for (v, u) in [(0, 1), (2, 1), (-1, 1)] {
            let xi = point(p, v, u);
            let w = xi.add(&one(p)).val_or_max();
            let want = if v >= 0 { vol * (1 + v + w) as f64 } else { 0.0 };
            assert!((o_torus_group(&desc, &xi).unwrap() - c(want)).norm() < 1e-12);
        }
        let xi = near_minus_one(p, 3, 1);
        assert!((o_torus_group(&desc, &xi).unwrap() - c(vol * 4.0)).norm() < 1e-12);
    }

    /// Two independent constructions of `f_Z^0`: torus orbital integrals and glued baby charts.
    #[test]
    fn basic_fz0_dual_path() {
        let p = 3u32;
        let q = 3.0;
        let fz = basic_fz0(p, ExtKind::Split).unwrap();
        let p_o = {
            let mut f = BruhatFn2::zero(p, Domain2::F2, 0, 1);
            for j in 0..3 {
                f.data[j] = c(1.0);
            }
            BabyInput::Split(f)
        };
        let charts = sz_from_charts(&BabyInput::unit(p, ExtKind::Split), &p_o).unwrap().scale(c(1.0 + 1.0 / q));
        let fzi = basic_fz0(p, ExtKind::Inert).unwrap();
        let tors = BabyInput::torsor_unit(p).scale(c(-1.0));
        let charts_i = sz_from_charts(&tors, &BabyInput::unit(p, ExtKind::Inert)).unwrap().scale(c(1.0 - 1.0 / q));
        for (v, u) in [(0, 1), (1, 2), (2, 1), (-1, 1), (0, 2), (4, 1)] {
            let x = point(p, v, u);
            assert!((fz.eval(&x).unwrap() - charts.eval(&x).unwrap()).norm() < 1e-9);
            assert!((fzi.eval(&x).unwrap() - charts_i.eval(&x).unwrap()).norm() < 1e-9);
        }
        for v in 1..5 {
            let x = near_minus_one(p, v, 1);
            assert!((fz.eval(&x).unwrap() - charts.eval(&x).unwrap()).norm() < 1e-9);
            assert!((fzi.eval(&x).unwrap() - charts_i.eval(&x).unwrap()).norm() < 1e-9);
        }
        // germ at -1 carries vol(T(F)_0) <1_{X1(O)}, 1_{X1(O)}>
        let ip = ip_torus(&fz);
        let vt0 = MeasureConstants::new(p, ExtKind::Split).vol_t0;
        assert!((ip - c(vt0 * (1.0 + 1.0 / q))).norm() < 1e-9);
    }

    #[test]
    fn kloosterman_values() {
        let p = 3u32;
        assert_eq!(kloosterman(&point(p, -1, 1)).unwrap(), ZERO);
        assert!(kloosterman(&point(p, 0, 1)).is_err());
        // p = 3, val -2: x in p^-1 O^x mod p^2
        let xi = point(p, -2, 1);
        let mut s = ZERO;
        for u in 1..27i64 {
            if u % 3 == 0 {
                continue;
            }
            let x = PadicScalar::new(p, -1, u, 20);
            s += psi_eval(&x.sub(&xi.div(&x).unwrap())).unwrap();
        }
        s /= 9.0;
        assert!((kloosterman(&xi).unwrap() - s).norm() < 1e-12);
    }

    #[test]
    fn kuznetsov_engines_agree() {
        for p in [3u32, 5] {
            for m in 0..=4u32 {
                for v in -4..=4 {
                    for u in [1i64, 2] {
                        let xi = point(p, v, u);
                        let a = o_kuz_direct(p, &KSection::basis(m), &KSection::basis(0), &xi).unwrap();
                        let b = o_kuz_closed(p, m, &xi).unwrap();
                        assert!((a - b).norm() < 1e-10, "p={} m={} v={}: {} vs {}", p, m, v, a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn basic_kuznetsov_closed_form_matches_series() {
        for kind in [ExtKind::Split, ExtKind::Inert] {
            for s in [1.0, 1.5, 0.0] {
                let s = c(s);
                for v in -4..=4 {
                    let xi = point(5, v, 2);
                    let a = fw0_closed(5, kind, s, &xi).unwrap();
                    let b = fw0_series(5, kind, s, &xi).unwrap();
                    assert!((a - b).norm() < 1e-10, "{:?} v={}: {} vs {}", kind, v, a, b);
                }
            }
        }
    }

    #[test]
    fn hecke_w_identity_and_linearity() {
        let p = 3u32;
        for kind in [ExtKind::Split, ExtKind::Inert] {
            let a = hecke_apply_w(p, kind, &HeckeElt::basis(0), ZERO).unwrap();
            let b = basic_fw0(p, kind, ZERO).unwrap();
            let h1 = HeckeElt::basis(1);
            let h2 = HeckeElt::from_pairs(&[(0, c(0.5)), (2, c(-1.0))]);
            let ab = hecke_apply_w(p, kind, &crate::group::hecke_mul(&h1, &h2), ZERO).unwrap();
            let ba = hecke_apply_w(p, kind, &crate::group::hecke_mul(&h2, &h1), ZERO).unwrap();
            for v in -4..=5 {
                let x = point(p, v, 1);
                assert!((a.eval(&x).unwrap() - b.eval(&x).unwrap()).norm() < 1e-10);
                assert!((ab.eval(&x).unwrap() - ba.eval(&x).unwrap()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn whittaker_unfolding() {
        let (l, r) = whittaker_unfolding_check(3, C64::from_polar(1.0, 0.7), c(1.0)).unwrap();
        assert!((l - r).norm() < 1e-10);
        assert!(whittaker_unfolding_check(3, c(1.0), c(-0.6)).is_err());
    }
}
