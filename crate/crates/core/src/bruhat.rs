//! Locally constant compactly supported functions on `F`, `F^2`, `E` and the torsor `E^alpha`.

use crate::error::{Error, Result};
use crate::padic::{pow_p, psi_eval, root_of_unity, PadicScalar};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

type C64 = Complex64;

/// The coset `p^val * unit + p^level O`. The zero coset has `val == level` and `unit == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coset {
    pub level: i32,
    pub val: i32,
    pub unit: i64,
}

impl Coset {
    pub fn zero(level: i32) -> Self {
        Coset { level, val: level, unit: 0 }
    }

    pub fn is_zero_coset(&self) -> bool {
        self.val >= self.level
    }

    /// The coset of `x` at `level`.
    pub fn of(x: &PadicScalar, level: i32) -> Result<Self> {
        match x.valuation() {
            None => {
                if x.abs_precision().map_or(true, |a| a >= level) {
                    Ok(Coset::zero(level))
                } else {
                    Err(Error::Precision(format!("point known mod p^{:?}, atom level {}", x.abs_precision(), level)))
                }
            }
            Some(v) if v >= level => Ok(Coset::zero(level)),
            Some(v) => {
                let k = (level - v) as u32;
                Ok(Coset { level, val: v, unit: x.unit_mod(k)? })
            }
        }
    }

    /// A representative with `prec` digits of relative precision.
    pub fn center(&self, p: u32, prec: u32) -> PadicScalar {
        if self.is_zero_coset() {
            PadicScalar::zero(p)
        } else {
            PadicScalar::new(p, self.val, self.unit, prec)
        }
    }

    pub fn parent(&self, p: u32) -> Coset {
        let l = self.level - 1;
        if self.val >= l {
            Coset::zero(l)
        } else {
            Coset { level: l, val: self.val, unit: self.unit.rem_euclid(pow_p(p, (l - self.val) as u32)) }
        }
    }

    /// All cosets at `new_level >= level` contained in this one.
    pub fn children(&self, p: u32, new_level: i32) -> Vec<Coset> {
        assert!(new_level >= self.level);
        let extra = (new_level - self.level) as u32;
        let n = pow_p(p, extra);
        let mut out = Vec::with_capacity(n as usize);
        if self.is_zero_coset() {
            // elements of p^level O modulo p^new_level
            for r in 0..n {
                if r == 0 {
                    out.push(Coset::zero(new_level));
                } else {
                    let (v, u) = crate::padic::split_p(p, r);
                    out.push(Coset { level: new_level, val: self.level + v, unit: u });
                }
            }
        } else {
            let base = pow_p(p, (self.level - self.val) as u32);
            for r in 0..n {
                out.push(Coset { level: new_level, val: self.val, unit: self.unit + r * base });
            }
        }
        out
    }

    /// Lowest valuation of an element of the coset.
    pub fn min_val(&self) -> i32 {
        self.val.min(self.level)
    }
}

/// Finite combination of disjoint coset indicators on `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruhatFn {
    pub p: u32,
    atoms: BTreeMap<Coset, C64>,
}

impl BruhatFn {
    pub fn zero(p: u32) -> Self {
        BruhatFn { p, atoms: BTreeMap::new() }
    }

    /// `1_{p^n O}`
    pub fn ball(p: u32, n: i32) -> Self {
        let mut f = BruhatFn::zero(p);
        f.atoms.insert(Coset::zero(n), C64::new(1.0, 0.0));
        f
    }

    /// `1_{c + p^n O}`
    pub fn indicator(c: &PadicScalar, n: i32) -> Result<Self> {
        let mut f = BruhatFn::zero(c.p());
        f.atoms.insert(Coset::of(c, n)?, C64::new(1.0, 0.0));
        Ok(f)
    }

    /// `1_{p^v O^x}`
    pub fn shell(p: u32, v: i32) -> Self {
        let mut f = BruhatFn::ball(p, v);
        f.atoms.insert(Coset::zero(v + 1), C64::new(-1.0, 0.0));
        f.normalize()
    }

    /// Build from possibly overlapping atoms; the result is disjoint.
    pub fn from_atoms(p: u32, atoms: impl IntoIterator<Item = (Coset, C64)>) -> Self {
        let mut f = BruhatFn { p, atoms: BTreeMap::new() };
        for (c, w) in atoms {
            *f.atoms.entry(c).or_insert(C64::new(0.0, 0.0)) += w;
        }
        f.normalize()
    }

    /// Build from atoms already known to be pairwise disjoint; mixed levels are kept as they are.
    pub fn from_disjoint(p: u32, atoms: impl IntoIterator<Item = (Coset, C64)>) -> Self {
        let atoms = atoms.into_iter().filter(|(_, w)| w.norm() != 0.0).collect();
        BruhatFn { p, atoms }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Coset, &C64)> {
        self.atoms.iter()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.values().all(|c| c.norm() == 0.0)
    }

    pub fn levels(&self) -> BTreeSet<i32> {
        self.atoms.keys().map(|c| c.level).collect()
    }

    pub fn max_level(&self) -> Option<i32> {
        self.atoms.keys().map(|c| c.level).max()
    }

    /// Lowest valuation met by the support; `None` for the zero function.
    pub fn min_val(&self) -> Option<i32> {
        self.atoms.keys().map(|c| c.min_val()).min()
    }

    /// Refine every atom to a common level, making the representation disjoint.
    fn normalize(self) -> Self {
        let Some(top) = self.max_level() else { return self };
        if self.levels().len() <= 1 {
            let atoms = self.atoms.into_iter().filter(|(_, w)| *w != C64::new(0.0, 0.0)).collect();
            return BruhatFn { p: self.p, atoms };
        }
        let mut out: BTreeMap<Coset, C64> = BTreeMap::new();
        for (c, w) in self.atoms {
            for ch in c.children(self.p, top) {
                *out.entry(ch).or_insert(C64::new(0.0, 0.0)) += w;
            }
        }
        out.retain(|_, w| *w != C64::new(0.0, 0.0));
        BruhatFn { p: self.p, atoms: out }
    }

    /// All atoms at the common level `level` (at least the current maximum).
    pub fn canonical_at(&self, level: i32) -> Self {
        let mut out: BTreeMap<Coset, C64> = BTreeMap::new();
        for (c, w) in &self.atoms {
            assert!(level >= c.level);
            for ch in c.children(self.p, level) {
                *out.entry(ch).or_insert(C64::new(0.0, 0.0)) += *w;
            }
        }
        BruhatFn { p: self.p, atoms: out }
    }

    pub fn canonical(&self) -> Self {
        match self.max_level() {
            Some(l) => self.canonical_at(l),
            None => self.clone(),
        }
    }

    /// Merge complete families of sibling atoms carrying equal coefficients.
    pub fn compress(&self, tol: f64) -> Self {
        let p = self.p;
        let mut by_level: BTreeMap<i32, BTreeMap<Coset, C64>> = BTreeMap::new();
        for (c, w) in &self.atoms {
            if w.norm() > 0.0 {
                by_level.entry(c.level).or_default().insert(*c, *w);
            }
        }
        let mut out = BTreeMap::new();
        while let Some((&lvl, _)) = by_level.iter().next_back() {
            let current = by_level.remove(&lvl).unwrap();
            let mut groups: BTreeMap<Coset, Vec<(Coset, C64)>> = BTreeMap::new();
            for (c, w) in current {
                groups.entry(c.parent(p)).or_default().push((c, w));
            }
            for (par, kids) in groups {
                let w0 = kids[0].1;
                let scale = w0.norm().max(1.0);
                if kids.len() == p as usize && kids.iter().all(|(_, w)| (*w - w0).norm() <= tol * scale) {
                    let mean = kids.iter().map(|(_, w)| *w).sum::<C64>() / p as f64;
                    by_level.entry(lvl - 1).or_default().insert(par, mean);
                } else {
                    for (c, w) in kids {
                        out.insert(c, w);
                    }
                }
            }
        }
        BruhatFn { p, atoms: out }
    }

    pub fn eval(&self, x: &PadicScalar) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for l in self.levels() {
            let key = Coset::of(x, l)?;
            if let Some(w) = self.atoms.get(&key) {
                s += *w;
            }
        }
        Ok(s)
    }

    pub fn scale(&self, c: C64) -> Self {
        BruhatFn { p: self.p, atoms: self.atoms.iter().map(|(k, w)| (*k, *w * c)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        BruhatFn::from_atoms(self.p, self.atoms.iter().chain(other.atoms.iter()).map(|(k, w)| (*k, *w)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `x -> f(-x)`
    pub fn reflect(&self) -> Self {
        let p = self.p;
        let atoms = self.atoms.iter().map(|(c, w)| {
            if c.is_zero_coset() {
                (*c, *w)
            } else {
                let m = pow_p(p, (c.level - c.val) as u32);
                (Coset { unit: (-c.unit).rem_euclid(m), ..*c }, *w)
            }
        });
        BruhatFn { p, atoms: atoms.collect() }
    }

    /// Sup norm of the difference.
    pub fn dist_sup(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        d.atoms.values().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// Dense table of values on `p^lo O / p^level O`, index `r` standing for `p^lo * r`.
    pub fn to_dense(&self, lo: i32, level: i32) -> Result<Vec<C64>> {
        let p = self.p;
        if let Some(m) = self.min_val() {
            if m < lo {
                return Err(Error::Domain("support exceeds dense window".into()));
            }
        }
        if let Some(m) = self.max_level() {
            if m > level {
                return Err(Error::Precision("dense level below atom level".into()));
            }
        }
        let n = pow_p(p, (level - lo) as u32) as usize;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (c, w) in &self.atoms {
            for ch in c.children(p, level) {
                let idx = if ch.is_zero_coset() { 0 } else { ch.unit * pow_p(p, (ch.val - lo) as u32) };
                out[idx as usize] += *w;
            }
        }
        Ok(out)
    }

    pub fn from_dense(p: u32, lo: i32, level: i32, data: &[C64]) -> Self {
        let atoms = data.iter().enumerate().filter(|(_, w)| w.norm() != 0.0).map(|(r, w)| {
            let c = if r == 0 {
                Coset::zero(level)
            } else {
                let (v, u) = crate::padic::split_p(p, r as i64);
                Coset { level, val: lo + v, unit: u }
            };
            (c, *w)
        });
        BruhatFn { p, atoms: atoms.collect() }
    }

    /// `f^(y) = int f(x) psi(-xy) dx`, exact on coset atoms.
    pub fn fourier(&self) -> BruhatFn {
        let p = self.p;
        let (Some(lo), Some(n)) = (self.min_val(), self.max_level()) else { return self.clone() };
        let data = self.to_dense(lo, n).expect("dense window");
        let mut buf = data;
        let len = buf.len();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let w = (p as f64).powi(-n);
        for z in buf.iter_mut() {
            *z *= w;
        }
        BruhatFn::from_dense(p, -n, -lo, &buf)
    }

    /// Direct evaluation of the Fourier transform at one point, atom by atom.
    pub fn fourier_at(&self, y: &PadicScalar) -> Result<C64> {
        let q = self.p as f64;
        let mut s = C64::new(0.0, 0.0);
        let vy = y.val_or_max();
        for (c, w) in &self.atoms {
            if vy < -c.level {
                continue;
            }
            let ch = if c.is_zero_coset() { C64::new(1.0, 0.0) } else { psi_eval(&c.center(self.p, 30.min(crate::padic::max_precision(self.p))).mul(y).neg())? };
            s += *w * q.powi(-c.level) * ch;
        }
        Ok(s)
    }

    /// `int f dx`
    pub fn integral(&self) -> C64 {
        let q = self.p as f64;
        self.atoms.iter().map(|(c, w)| *w * q.powi(-c.level)).sum()
    }

    /// `int_{val x = v} f(x) dx` for each shell met by the support, together with the
    /// value of the zero-coset atom, which covers all deeper shells uniformly.
    pub fn shell_integrals(&self) -> (BTreeMap<i32, C64>, Vec<(i32, C64)>) {
        let q = self.p as f64;
        let mut shells = BTreeMap::new();
        let mut balls = Vec::new();
        for (c, w) in &self.atoms {
            if c.is_zero_coset() {
                balls.push((c.level, *w));
            } else {
                *shells.entry(c.val).or_insert(C64::new(0.0, 0.0)) += *w * q.powi(-c.level);
            }
        }
        (shells, balls)
    }
}

/// Domain of a two-variable function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain2 {
    /// `F x F` with pairing `x x' + y y'`
    F2,
    /// `E = F(sqrt u)` with pairing `tr(x conj(y))`
    E,
    /// The torsor `E^alpha`, modelled on `E` with quotient map `x -> p N(x)`
    EAlpha,
}

/// Dense locally constant function on `(p^lo O)^2` at level `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruhatFn2 {
    pub p: u32,
    pub domain: Domain2,
    pub lo: i32,
    pub level: i32,
    /// Row-major over `(i, j)` meaning the coset of `(p^lo i, p^lo j)`.
    pub data: Vec<C64>,
}

impl BruhatFn2 {
    pub fn zero(p: u32, domain: Domain2, lo: i32, level: i32) -> Self {
        let n = pow_p(p, (level - lo) as u32) as usize;
        BruhatFn2 { p, domain, lo, level, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn side(&self) -> usize {
        pow_p(self.p, (self.level - self.lo) as u32) as usize
    }

    /// Indicator of `(p^n O)^2` (or `p^n O_E`) inside a window `(lo, level)`.
    pub fn ball(p: u32, domain: Domain2, n: i32, lo: i32, level: i32) -> Self {
        let mut f = BruhatFn2::zero(p, domain, lo, level);
        let side = f.side();
        let step = pow_p(p, (n - lo).max(0) as u32) as usize;
        for i in (0..side).step_by(step) {
            for j in (0..side).step_by(step) {
                f.data[i * side + j] = C64::new(1.0, 0.0);
            }
        }
        f
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.side() + j]
    }

    fn index_of(&self, x: &PadicScalar) -> Result<Option<usize>> {
        match x.valuation() {
            None => {
                if x.abs_precision().map_or(true, |a| a >= self.level) {
                    Ok(Some(0))
                } else {
                    Err(Error::Precision("coordinate precision".into()))
                }
            }
            Some(v) if v < self.lo => Ok(None),
            Some(v) if v >= self.level => Ok(Some(0)),
            Some(v) => {
                let k = (self.level - v) as u32;
                let u = x.unit_mod(k)?;
                Ok(Some((u * pow_p(self.p, (v - self.lo) as u32)) as usize))
            }
        }
    }

    pub fn eval(&self, x: &PadicScalar, y: &PadicScalar) -> Result<C64> {
        match (self.index_of(x)?, self.index_of(y)?) {
            (Some(i), Some(j)) => Ok(self.get(i, j)),
            _ => Ok(C64::new(0.0, 0.0)),
        }
    }

    /// Value at the origin.
    pub fn at_origin(&self) -> C64 {
        self.data[0]
    }

    pub fn scale(&self, c: C64) -> Self {
        BruhatFn2 { data: self.data.iter().map(|w| *w * c).collect(), ..self.clone() }
    }

    /// Re-express on a larger window.
    pub fn extend(&self, lo: i32, level: i32) -> Self {
        assert!(lo <= self.lo && level >= self.level);
        let mut g = BruhatFn2::zero(self.p, self.domain, lo, level);
        let side_g = g.side();
        let side = self.side();
        let shift = pow_p(self.p, (self.lo - lo) as u32) as usize;
        let modulus = side;
        for i in 0..side_g {
            if i % shift != 0 {
                continue;
            }
            for j in 0..side_g {
                if j % shift != 0 {
                    continue;
                }
                let si = (i / shift) % modulus;
                let sj = (j / shift) % modulus;
                g.data[i * side_g + j] = self.get(si, sj);
            }
        }
        g
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.domain, other.domain);
        let lo = self.lo.min(other.lo);
        let level = self.level.max(other.level);
        let a = self.extend(lo, level);
        let b = other.extend(lo, level);
        BruhatFn2 { data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(), ..a }
    }

    pub fn dist_sup(&self, other: &Self) -> f64 {
        let lo = self.lo.min(other.lo);
        let level = self.level.max(other.level);
        let a = self.extend(lo, level);
        let b = other.extend(lo, level);
        a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// `(x, y) -> f(-x, -y)`
    pub fn reflect(&self) -> Self {
        let side = self.side();
        let mut g = self.clone();
        for i in 0..side {
            for j in 0..side {
                g.data[i * side + j] = self.get((side - i) % side, (side - j) % side);
            }
        }
        g
    }

    fn dft2(&self) -> Vec<C64> {
        let side = self.side();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(side);
        let mut buf = self.data.clone();
        for row in buf.chunks_mut(side) {
            fft.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); side];
        for j in 0..side {
            for i in 0..side {
                col[i] = buf[i * side + j];
            }
            fft.process(&mut col);
            for i in 0..side {
                buf[i * side + j] = col[i];
            }
        }
        buf
    }

    /// Fourier transform on `F^2` (pairing `x x' + y y'`) or on `E` (pairing `tr(x conj y)`);
    /// on the torsor the transform is `|a| F_E(f)(a y)` with `a = p`.
    pub fn fourier(&self) -> Result<Self> {
        let p = self.p;
        let side = self.side();
        let w = (p as f64).powi(-2 * self.level);
        let d = self.dft2();
        let mut out = BruhatFn2 { p, domain: self.domain, lo: -self.level, level: -self.lo, data: vec![C64::new(0.0, 0.0); side * side] };
        match self.domain {
            Domain2::F2 => {
                for (o, z) in out.data.iter_mut().zip(d.iter()) {
                    *o = *z * w;
                }
            }
            Domain2::E | Domain2::EAlpha => {
                let u = crate::field::smallest_nonresidue(p);
                let n = side as i64;
                for s in 0..side {
                    for t in 0..side {
                        let i = (2 * s as i64).rem_euclid(n) as usize;
                        let j = (-2 * u * t as i64).rem_euclid(n) as usize;
                        out.data[s * side + t] = d[i * side + j] * w;
                    }
                }
                if self.domain == Domain2::EAlpha {
                    // h(y) = q^{-1} F_E(f)(p y): same table, window shifted down by one
                    out.lo -= 1;
                    out.level -= 1;
                    let q1 = 1.0 / p as f64;
                    for z in out.data.iter_mut() {
                        *z *= q1;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Reference Fourier transform on `F` by direct character sums, used as an oracle.
pub fn fourier_naive(f: &BruhatFn) -> BruhatFn {
    let p = f.p;
    let (Some(lo), Some(n)) = (f.min_val(), f.max_level()) else { return f.clone() };
    let data = f.to_dense(lo, n).unwrap();
    let len = data.len() as i64;
    let w = (p as f64).powi(-n);
    let out: Vec<C64> = (0..len)
        .map(|s| (0..len).map(|r| data[r as usize] * root_of_unity(-(r * s) % len, len)).sum::<C64>() * w)
        .collect();
    BruhatFn::from_dense(p, -n, -lo, &out)
}
