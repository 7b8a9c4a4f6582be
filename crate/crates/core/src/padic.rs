//! Elements of `Q_p` at finite precision.
//!
//! A nonzero scalar is `p^val * unit` where `unit` is known modulo `p^prec`.
//! Zero is either exact or known only modulo some `p^abs`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::fmt;

/// Largest relative precision such that `p^N < 2^62`.
pub fn max_precision(p: u32) -> u32 {
    let mut n = 0u32;
    let mut acc: u128 = 1;
    while acc * (p as u128) < (1u128 << 62) {
        acc *= p as u128;
        n += 1;
    }
    n
}

/// Working relative precision used by the transform engines.
pub fn work_prec(p: u32) -> u32 {
    max_precision(p).min(20)
}

/// `p^k` as an `i64`; `k` must respect [`max_precision`].
pub fn pow_p(p: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for _ in 0..k {
        r *= p as i64;
    }
    r
}

pub fn is_odd_prime(n: u64) -> bool {
    if n < 3 || n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn mulmod(a: i64, b: i64, m: i64) -> i64 {
    ((a as i128 * b as i128).rem_euclid(m as i128)) as i64
}

/// Inverse of `a` modulo `m` (gcd must be 1).
pub fn inv_mod(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let (mut r0, mut r1) = (a.rem_euclid(m) as i128, m as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "not invertible");
    (s0.rem_euclid(m as i128)) as i64
}

/// Split `n != 0` into `(v, n / p^v)`.
pub fn split_p(p: u32, mut n: i64) -> (i32, i64) {
    let mut v = 0;
    while n % p as i64 == 0 {
        n /= p as i64;
        v += 1;
    }
    (v, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero { abs: Option<i32> },
    Nonzero { val: i32, unit: i64, prec: u32 },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u32,
    repr: Repr,
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.repr {
            Repr::Zero { abs: None } => write!(f, "0"),
            Repr::Zero { abs: Some(a) } => write!(f, "O({}^{})", self.p, a),
            Repr::Nonzero { val, unit, prec } => {
                write!(f, "{}^{}*{} (+O({}^{}))", self.p, val, unit, self.p, val + prec as i32)
            }
        }
    }
}

impl PadicScalar {
    pub fn zero(p: u32) -> Self {
        PadicScalar { p, repr: Repr::Zero { abs: None } }
    }

    /// Zero known only modulo `p^abs`.
    pub fn zero_mod(p: u32, abs: i32) -> Self {
        PadicScalar { p, repr: Repr::Zero { abs: Some(abs) } }
    }

    /// `p^val * unit` with `unit` known modulo `p^prec`. Factors of `p` in `unit` are absorbed into the valuation.
    pub fn new(p: u32, val: i32, unit: i64, prec: u32) -> Self {
        assert!(prec <= max_precision(p), "precision {} over cap for p={}", prec, p);
        let m = pow_p(p, prec);
        let u = unit.rem_euclid(m);
        if u == 0 {
            return PadicScalar::zero_mod(p, val + prec as i32);
        }
        let (v, u2) = split_p(p, u);
        PadicScalar {
            p,
            repr: Repr::Nonzero { val: val + v, unit: u2, prec: prec - v as u32 },
        }
    }

    pub fn from_i64(p: u32, n: i64, prec: u32) -> Self {
        if n == 0 {
            return PadicScalar::zero(p);
        }
        let (v, u) = split_p(p, n);
        PadicScalar::new(p, v, u, prec)
    }

    /// `num * p^shift`.
    pub fn from_scaled(p: u32, num: i64, shift: i32, prec: u32) -> Self {
        if num == 0 {
            return PadicScalar::zero(p);
        }
        let (v, u) = split_p(p, num);
        PadicScalar::new(p, v + shift, u, prec)
    }

    pub fn one(p: u32, prec: u32) -> Self {
        PadicScalar::new(p, 0, 1, prec)
    }

    /// `p^k` (treated as exact at precision `prec`).
    pub fn uniformizer_pow(p: u32, k: i32, prec: u32) -> Self {
        PadicScalar::new(p, k, 1, prec)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { abs: None })
    }

    /// Valuation; `None` for zero.
    pub fn valuation(&self) -> Option<i32> {
        match self.repr {
            Repr::Nonzero { val, .. } => Some(val),
            _ => None,
        }
    }

    /// Valuation with zero mapped to `i32::MAX`.
    pub fn val_or_max(&self) -> i32 {
        self.valuation().unwrap_or(i32::MAX)
    }

    pub fn unit(&self) -> i64 {
        match self.repr {
            Repr::Nonzero { unit, .. } => unit,
            _ => 0,
        }
    }

    pub fn precision(&self) -> u32 {
        match self.repr {
            Repr::Nonzero { prec, .. } => prec,
            _ => 0,
        }
    }

    /// Absolute precision: the scalar is known modulo `p^abs`. `None` means exact zero.
    pub fn abs_precision(&self) -> Option<i32> {
        match self.repr {
            Repr::Nonzero { val, prec, .. } => Some(val + prec as i32),
            Repr::Zero { abs } => abs,
        }
    }

    fn abs_or_max(&self) -> i32 {
        self.abs_precision().unwrap_or(i32::MAX)
    }

    /// Unit residue modulo `p^k`, `k <= precision`.
    pub fn unit_mod(&self, k: u32) -> Result<i64> {
        match self.repr {
            Repr::Nonzero { unit, prec, .. } => {
                if k > prec {
                    return Err(Error::Precision(format!("unit requested mod p^{} but known mod p^{}", k, prec)));
                }
                Ok(unit.rem_euclid(pow_p(self.p, k)))
            }
            _ => Err(Error::Domain("unit of zero".into())),
        }
    }

    /// Reduce to a scalar known modulo `p^abs` (never increases precision).
    pub fn truncate_abs(&self, abs: i32) -> Self {
        match self.repr {
            Repr::Zero { abs: a } => {
                let na = match a {
                    None => abs,
                    Some(a) => a.min(abs),
                };
                PadicScalar::zero_mod(self.p, na)
            }
            Repr::Nonzero { val, unit, prec } => {
                let cur = val + prec as i32;
                let na = cur.min(abs);
                if na <= val {
                    PadicScalar::zero_mod(self.p, na)
                } else {
                    let np = (na - val) as u32;
                    PadicScalar {
                        p: self.p,
                        repr: Repr::Nonzero { val, unit: unit.rem_euclid(pow_p(self.p, np)), prec: np },
                    }
                }
            }
        }
    }

    /// Re-embed with relative precision `prec`, padding the known unit with zero digits.
    /// Used when a scalar is an exact element of `Z[1/p]`.
    pub fn with_precision(&self, prec: u32) -> Self {
        match self.repr {
            Repr::Nonzero { val, unit, .. } => PadicScalar::new(self.p, val, unit, prec),
            Repr::Zero { .. } => PadicScalar::zero(self.p),
        }
    }

    pub fn neg(&self) -> Self {
        match self.repr {
            Repr::Nonzero { val, unit, prec } => {
                PadicScalar { p: self.p, repr: Repr::Nonzero { val, unit: (-unit).rem_euclid(pow_p(self.p, prec)), prec } }
            }
            _ => *self,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let p = self.p;
        match (self.repr, other.repr) {
            (Repr::Zero { abs: None }, _) => *other,
            (_, Repr::Zero { abs: None }) => *self,
            (Repr::Zero { abs: Some(a) }, _) => other.truncate_abs(a),
            (_, Repr::Zero { abs: Some(b) }) => self.truncate_abs(b),
            (Repr::Nonzero { val: a, unit: u, .. }, Repr::Nonzero { val: b, unit: w, .. }) => {
                let abs = self.abs_or_max().min(other.abs_or_max());
                let m = a.min(b);
                if abs <= m {
                    return PadicScalar::zero_mod(p, abs);
                }
                let k = (abs - m) as u32;
                let modulus = pow_p(p, k);
                let term = |val: i32, unit: i64| -> i64 {
                    let sh = (val - m) as u32;
                    if sh >= k {
                        0
                    } else {
                        mulmod(unit.rem_euclid(pow_p(p, k - sh)), pow_p(p, sh), modulus)
                    }
                };
                let s = (term(a, u) + term(b, w)).rem_euclid(modulus);
                PadicScalar::new(p, m, s, k)
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let p = self.p;
        match (self.repr, other.repr) {
            (Repr::Zero { abs: None }, _) | (_, Repr::Zero { abs: None }) => PadicScalar::zero(p),
            (Repr::Zero { abs: Some(a) }, Repr::Nonzero { val, .. }) | (Repr::Nonzero { val, .. }, Repr::Zero { abs: Some(a) }) => {
                PadicScalar::zero_mod(p, a + val)
            }
            (Repr::Zero { abs: Some(a) }, Repr::Zero { abs: Some(b) }) => PadicScalar::zero_mod(p, a.max(b)),
            (Repr::Nonzero { val: a, unit: u, prec: r }, Repr::Nonzero { val: b, unit: w, prec: s }) => {
                let k = r.min(s);
                let m = pow_p(p, k);
                PadicScalar { p, repr: Repr::Nonzero { val: a + b, unit: mulmod(u, w, m), prec: k } }
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match self.repr {
            Repr::Nonzero { val, unit, prec } => {
                let m = pow_p(self.p, prec);
                Ok(PadicScalar { p: self.p, repr: Repr::Nonzero { val: -val, unit: inv_mod(unit, m), prec } })
            }
            _ => Err(Error::Domain("inverse of zero".into())),
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn scale_p(&self, k: i32) -> Self {
        match self.repr {
            Repr::Nonzero { val, unit, prec } => PadicScalar { p: self.p, repr: Repr::Nonzero { val: val + k, unit, prec } },
            Repr::Zero { abs: Some(a) } => PadicScalar::zero_mod(self.p, a + k),
            Repr::Zero { abs: None } => *self,
        }
    }

    /// Whether `self` lies in `p^k O` (decidable from the known digits).
    pub fn in_ideal(&self, k: i32) -> Result<bool> {
        match self.repr {
            Repr::Zero { abs: None } => Ok(true),
            Repr::Zero { abs: Some(a) } => {
                if a >= k {
                    Ok(true)
                } else {
                    Err(Error::Precision(format!("zero known mod p^{} cannot decide membership in p^{}", a, k)))
                }
            }
            Repr::Nonzero { val, .. } => Ok(val >= k),
        }
    }

    /// Fractional part `{x} = num / den` with `den = p^k`.
    pub fn frac_part(&self) -> Result<(i64, i64)> {
        match self.repr {
            Repr::Zero { abs: None } => Ok((0, 1)),
            Repr::Zero { abs: Some(a) } => {
                if a >= 0 {
                    Ok((0, 1))
                } else {
                    Err(Error::Precision("fractional part undetermined".into()))
                }
            }
            Repr::Nonzero { val, unit, prec } => {
                if val >= 0 {
                    return Ok((0, 1));
                }
                let k = (-val) as u32;
                if prec < k {
                    return Err(Error::Precision(format!(
                        "fractional part needs {} digits, {} known",
                        k, prec
                    )));
                }
                let den = pow_p(self.p, k);
                Ok((unit.rem_euclid(den), den))
            }
        }
    }

    /// `x` as an element of `Z[1/p]` given by its truncated digits: `(numerator, exponent)` meaning `numerator * p^exponent`.
    pub fn to_scaled(&self) -> (i64, i32) {
        match self.repr {
            Repr::Nonzero { val, unit, .. } => (unit, val),
            _ => (0, 0),
        }
    }

    /// `|x|` as a real number.
    pub fn abs_value(&self) -> f64 {
        match self.valuation() {
            Some(v) => (self.p as f64).powi(-v),
            None => 0.0,
        }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        let d = self.sub(other);
        d.is_zero()
    }
}

impl PartialOrd for PadicScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PadicScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.val_or_max(), self.unit(), self.precision()).cmp(&(other.val_or_max(), other.unit(), other.precision()))
    }
}

/// `exp(2 pi i num / den)` from an exact rational angle.
pub fn root_of_unity(num: i64, den: i64) -> Complex64 {
    let r = num.rem_euclid(den);
    let theta = 2.0 * std::f64::consts::PI * (r as f64 / den as f64);
    Complex64::new(theta.cos(), theta.sin())
}

/// The additive character `psi(x) = exp(2 pi i {x})`, trivial exactly on `O`.
pub fn psi_eval(x: &PadicScalar) -> Result<Complex64> {
    let (n, d) = x.frac_part()?;
    Ok(root_of_unity(n, d))
}

/// Square root of a unit `a` modulo `p^k` when `a` is a square mod `p`.
pub fn sqrt_unit_mod(p: u32, a: i64, k: u32) -> Option<i64> {
    let pi = p as i64;
    let a0 = a.rem_euclid(pi);
    if a0 == 0 {
        return None;
    }
    let mut r = (1..pi).find(|x| (x * x) % pi == a0)?;
    // Hensel lifting, one digit at a time
    let mut m = pi;
    for _ in 1..k {
        let m2 = m * pi;
        let f = (mulmod(r, r, m2) - a.rem_euclid(m2)).rem_euclid(m2);
        let t = ((f / m) * inv_mod((2 * r) % pi, pi)).rem_euclid(pi);
        r = (r - t * m).rem_euclid(m2);
        m = m2;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps() {
        assert_eq!(max_precision(3), 39);
        assert_eq!(max_precision(5), 26);
        assert_eq!(max_precision(7), 22);
    }

    #[test]
    fn addition_with_cancellation_loses_precision() {
        let p = 5;
        let a = PadicScalar::from_i64(p, 1, 6);
        let b = PadicScalar::from_i64(p, 24, 6);
        let s = a.add(&b);
        assert_eq!(s.valuation(), Some(2));
        assert_eq!(s.abs_precision(), Some(6));
        let z = a.sub(&a);
        assert!(z.is_zero());
        assert_eq!(z.abs_precision(), Some(6));
    }

    #[test]
    fn inverse_roundtrip() {
        let p = 7;
        let a = PadicScalar::from_scaled(p, 12345, -3, 15);
        let b = a.inv().unwrap();
        let one = a.mul(&b);
        assert_eq!(one.valuation(), Some(0));
        assert_eq!(one.unit(), 1);
    }

    #[test]
    fn psi_examples() {
        let p = 5;
        let x = PadicScalar::from_scaled(p, 1, -1, 10);
        let z = psi_eval(&x).unwrap();
        let w = root_of_unity(1, 5);
        assert!((z - w).norm() < 1e-15);
        let y = PadicScalar::from_scaled(p, 7, -2, 10);
        assert!((psi_eval(&y).unwrap() - root_of_unity(7, 25)).norm() < 1e-15);
        assert_eq!(psi_eval(&PadicScalar::from_i64(p, 17, 10)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn psi_precision_error() {
        let x = PadicScalar::new(3, -4, 2, 2);
        assert!(matches!(psi_eval(&x), Err(Error::Precision(_))));
    }

    #[test]
    fn square_roots() {
        for &p in &[3u32, 5, 7, 11] {
            for a in 1..(p as i64) {
                if let Some(r) = sqrt_unit_mod(p, a, 8) {
                    let m = pow_p(p, 8);
                    assert_eq!(mulmod(r, r, m), a.rem_euclid(m));
                }
            }
        }
    }
}
