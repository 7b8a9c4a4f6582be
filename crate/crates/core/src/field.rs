//! The base field `Q_p`, its unramified quadratic extension and the measure normalizations.

use crate::error::{Error, Result};
use crate::padic::{is_odd_prime, max_precision, pow_p, sqrt_unit_mod, PadicScalar};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtKind {
    Split,
    Inert,
}

impl ExtKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExtKind::Split => "split",
            ExtKind::Inert => "inert",
        }
    }
}

impl std::str::FromStr for ExtKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(ExtKind::Split),
            "inert" => Ok(ExtKind::Inert),
            _ => Err(Error::Config(format!("unknown extension kind '{}'", s))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalFieldCtx {
    pub p: u32,
    pub precision_cap: u32,
}

impl LocalFieldCtx {
    pub fn new(p: u32, precision_cap: u32) -> Result<Self> {
        if !is_odd_prime(p as u64) {
            return Err(Error::Config(format!("p = {} is not an odd prime", p)));
        }
        if precision_cap == 0 || precision_cap > max_precision(p) {
            return Err(Error::Config(format!(
                "precision cap {} outside [1, {}] for p = {}",
                precision_cap,
                max_precision(p),
                p
            )));
        }
        Ok(LocalFieldCtx { p, precision_cap })
    }

    /// Context with the default cap (20 digits, or less when `p^20` would overflow).
    pub fn with_default_precision(p: u32) -> Result<Self> {
        if !is_odd_prime(p as u64) {
            return Err(Error::Config(format!("p = {} is not an odd prime", p)));
        }
        LocalFieldCtx::new(p, max_precision(p).min(20))
    }

    pub fn q(&self) -> f64 {
        self.p as f64
    }

    pub fn int(&self, n: i64) -> PadicScalar {
        PadicScalar::from_i64(self.p, n, self.precision_cap)
    }

    /// `unit * p^val` at full precision.
    pub fn scaled(&self, unit: i64, val: i32) -> PadicScalar {
        PadicScalar::from_scaled(self.p, unit, val, self.precision_cap)
    }

    pub fn one(&self) -> PadicScalar {
        PadicScalar::one(self.p, self.precision_cap)
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar::zero(self.p)
    }
}

/// Smallest positive quadratic nonresidue modulo `p`.
pub fn smallest_nonresidue(p: u32) -> i64 {
    let pi = p as i64;
    (2..pi).find(|&u| sqrt_unit_mod(p, u, 1).is_none()).expect("odd prime has a nonresidue")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadExtData {
    pub p: u32,
    pub kind: ExtKind,
    /// Nonresidue `u` with `E = F(sqrt u)`; zero in the split case.
    pub u: i64,
}

impl QuadExtData {
    pub fn new(p: u32, kind: ExtKind) -> Self {
        match kind {
            ExtKind::Split => QuadExtData { p, kind, u: 0 },
            ExtKind::Inert => QuadExtData { p, kind, u: smallest_nonresidue(p) },
        }
    }
    pub fn split(p: u32) -> Self {
        QuadExtData::new(p, ExtKind::Split)
    }
    pub fn inert(p: u32) -> Self {
        QuadExtData::new(p, ExtKind::Inert)
    }
}

/// Element of `E`: `a + b sqrt(u)` when inert, the pair `(a, b)` when split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EElem {
    pub a: PadicScalar,
    pub b: PadicScalar,
}

/// Quadratic character attached to `E/F`.
pub fn eta_eval(x: &PadicScalar, ext: &QuadExtData) -> Result<i32> {
    let v = x.valuation().ok_or_else(|| Error::Domain("eta(0)".into()))?;
    Ok(match ext.kind {
        ExtKind::Split => 1,
        ExtKind::Inert => eta_of_val(v),
    })
}

/// `(-1)^v`.
pub fn eta_of_val(v: i32) -> i32 {
    if v.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

pub fn is_norm(x: &PadicScalar, ext: &QuadExtData) -> Result<bool> {
    Ok(eta_eval(x, ext)? == 1)
}

pub fn norm_e(z: &EElem, ext: &QuadExtData) -> PadicScalar {
    match ext.kind {
        ExtKind::Split => z.a.mul(&z.b),
        ExtKind::Inert => {
            let u = PadicScalar::from_i64(ext.p, ext.u, z.a.precision().max(z.b.precision()).max(1));
            z.a.mul(&z.a).sub(&u.mul(&z.b.mul(&z.b)))
        }
    }
}

/// Some `e` with `N(e) = x`, computed to relative precision `prec`; `None` if `x` is not a norm.
pub fn solve_norm(x: &PadicScalar, ext: &QuadExtData, prec: u32) -> Result<Option<EElem>> {
    let p = ext.p;
    let v = x.valuation().ok_or_else(|| Error::Domain("norm equation for 0".into()))?;
    let w = x.unit();
    let wp = x.precision().min(prec);
    match ext.kind {
        ExtKind::Split => Ok(Some(EElem { a: *x, b: PadicScalar::one(p, wp) })),
        ExtKind::Inert => {
            if v.rem_euclid(2) != 0 {
                return Ok(None);
            }
            // a^2 - u b^2 = w with a a unit: pick b so that w + u b^2 is a nonzero square mod p.
            let pi = p as i64;
            for b0 in 0..pi {
                let t = (w + ext.u * b0 * b0).rem_euclid(pow_p(p, wp));
                if t % pi == 0 {
                    continue;
                }
                if let Some(a) = sqrt_unit_mod(p, t, wp) {
                    let a = PadicScalar::new(p, v / 2, a, wp);
                    let b = PadicScalar::from_scaled(p, b0, v / 2, wp);
                    return Ok(Some(EElem { a, b }));
                }
            }
            Err(Error::Internal("no solution to unit norm equation".into()))
        }
    }
}

/// Haar volumes fixed by the integral volume forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConstants {
    /// `vol(PGL2(O))`
    pub vol_k: f64,
    /// `vol((N\G)(O))`
    pub vol_x2o: f64,
    /// Split: `vol(O^x) / ln q`. Inert: `vol(T(F))`.
    pub vol_t0: f64,
    /// `vol(O^x)`
    pub vol_ox: f64,
    /// Volume of the torus of integral points: `1 - 1/q` split, `1 + 1/q` inert.
    pub vol_t_o: f64,
}

impl MeasureConstants {
    pub fn new(p: u32, kind: ExtKind) -> Self {
        let q = p as f64;
        let vol_ox = 1.0 - 1.0 / q;
        let vol_t_o = match kind {
            ExtKind::Split => vol_ox,
            ExtKind::Inert => 1.0 + 1.0 / q,
        };
        let vol_t0 = match kind {
            ExtKind::Split => vol_ox / q.ln(),
            ExtKind::Inert => vol_t_o,
        };
        MeasureConstants { vol_k: 1.0 - 1.0 / (q * q), vol_x2o: 1.0 - 1.0 / (q * q), vol_t0, vol_ox, vol_t_o }
    }
}
