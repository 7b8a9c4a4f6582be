//! Rational functions in `t = q^{-s}` with complex coefficients.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `t^shift * num(t) / den(t)`; coefficient vectors are in increasing degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFnT {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
    pub shift: i32,
}

fn trim(mut v: Vec<C64>) -> Vec<C64> {
    while v.len() > 1 && v.last().unwrap().norm() == 0.0 {
        v.pop();
    }
    if v.is_empty() {
        v.push(ZERO);
    }
    v
}

pub fn poly_eval(p: &[C64], t: C64) -> C64 {
    p.iter().rev().fold(ZERO, |acc, c| acc * t + c)
}

pub fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or(ZERO) + b.get(i).copied().unwrap_or(ZERO)).collect()
}

fn poly_shift(a: &[C64], k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; k];
    v.extend_from_slice(a);
    v
}

/// Divide by `(t - r)`; returns quotient and remainder.
fn synthetic_div(p: &[C64], r: C64) -> (Vec<C64>, C64) {
    let n = p.len();
    if n == 1 {
        return (vec![ZERO], p[0]);
    }
    let mut q = vec![ZERO; n - 1];
    let mut acc = p[n - 1];
    for i in (0..n - 1).rev() {
        q[i] = acc;
        acc = p[i] + acc * r;
    }
    (q, acc)
}

/// All complex roots by the Aberth iteration.
pub fn poly_roots(p: &[C64]) -> Vec<C64> {
    let p = trim(p.to_vec());
    let n = p.len() - 1;
    if n == 0 {
        return vec![];
    }
    let lead = p[n];
    let monic: Vec<C64> = p.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(radius * 0.5, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    let deriv: Vec<C64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let f = poly_eval(&monic, z[i]);
            let df = poly_eval(&deriv, z[i]);
            if f.norm() == 0.0 {
                continue;
            }
            let ratio = f / df;
            let s: C64 = (0..n).filter(|&j| j != i).map(|j| ONE / (z[i] - z[j])).sum();
            let w = ratio / (ONE - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

impl RationalFnT {
    pub fn constant(c: C64) -> Self {
        RationalFnT { num: vec![c], den: vec![ONE], shift: 0 }
    }

    pub fn zero() -> Self {
        RationalFnT::constant(ZERO)
    }

    /// `c * t^k`
    pub fn monomial(c: C64, k: i32) -> Self {
        RationalFnT { num: vec![c], den: vec![ONE], shift: k }
    }

    /// `sum_i coeffs[i] t^{shift + i}`
    pub fn laurent(coeffs: Vec<C64>, shift: i32) -> Self {
        RationalFnT { num: trim(coeffs), den: vec![ONE], shift }
    }

    pub fn from_parts(num: Vec<C64>, den: Vec<C64>, shift: i32) -> Self {
        RationalFnT { num: trim(num), den: trim(den), shift }
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, t: C64) -> Result<C64> {
        let d = poly_eval(&self.den, t);
        if d.norm() == 0.0 {
            return Err(Error::Pole(format!("denominator vanishes at t = {}", t)));
        }
        Ok(t.powi(self.shift) * poly_eval(&self.num, t) / d)
    }

    pub fn scale(&self, c: C64) -> Self {
        RationalFnT { num: self.num.iter().map(|x| x * c).collect(), ..self.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        RationalFnT::from_parts(poly_mul(&self.num, &o.num), poly_mul(&self.den, &o.den), self.shift + o.shift)
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let s = self.shift.min(o.shift);
        let a = poly_shift(&poly_mul(&self.num, &o.den), (self.shift - s) as usize);
        let b = poly_shift(&poly_mul(&o.num, &self.den), (o.shift - s) as usize);
        let den = if self.den == o.den { self.den.clone() } else { poly_mul(&self.den, &o.den) };
        let (a, b) = if self.den == o.den {
            (poly_shift(&self.num, (self.shift - s) as usize), poly_shift(&o.num, (o.shift - s) as usize))
        } else {
            (a, b)
        };
        RationalFnT::from_parts(poly_add(&a, &b), den, s)
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::Pole("division by the zero function".into()));
        }
        Ok(RationalFnT::from_parts(poly_mul(&self.num, &o.den), poly_mul(&self.den, &o.num), self.shift - o.shift))
    }

    /// `t -> c / t`
    pub fn compose_inv(&self, c: C64) -> Self {
        // P(c/t) = t^{-deg P} * sum_i p_i c^i t^{deg P - i}
        let rev = |p: &[C64]| -> Vec<C64> {
            let d = p.len() - 1;
            (0..=d).map(|k| p[d - k] * c.powi((d - k) as i32)).collect()
        };
        let dn = self.num.len() as i32 - 1;
        let dd = self.den.len() as i32 - 1;
        let scale = c.powi(self.shift);
        RationalFnT::from_parts(rev(&self.num).into_iter().map(|x| x * scale).collect(), rev(&self.den), -self.shift - dn + dd)
    }

    /// Pull powers of `t` into the shift and cancel common roots.
    pub fn reduce(&self, tol: f64) -> Self {
        let mut num = trim(self.num.clone());
        let mut den = trim(self.den.clone());
        let mut shift = self.shift;
        if num.iter().all(|c| c.norm() == 0.0) {
            return RationalFnT::zero();
        }
        while num.len() > 1 && num[0].norm() <= tol * num.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            num.remove(0);
            shift += 1;
        }
        while den.len() > 1 && den[0].norm() <= tol * den.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            den.remove(0);
            shift -= 1;
        }
        loop {
            let rn = poly_roots(&num);
            let rd = poly_roots(&den);
            let mut found = None;
            'outer: for a in &rn {
                for b in &rd {
                    if (a - b).norm() <= tol.sqrt() * (1.0 + a.norm()) {
                        found = Some((*a + *b) * 0.5);
                        break 'outer;
                    }
                }
            }
            match found {
                Some(r) => {
                    num = synthetic_div(&num, r).0;
                    den = synthetic_div(&den, r).0;
                }
                None => break,
            }
        }
        // normalize the denominator's constant term to 1
        let d0 = den[0];
        if d0.norm() > 0.0 {
            num = num.iter().map(|c| c / d0).collect();
            den = den.iter().map(|c| c / d0).collect();
        }
        RationalFnT { num, den, shift }
    }

    /// Multiplicity of the root `t = r` in a polynomial, with the cofactor.
    fn strip_root(p: &[C64], r: C64, tol: f64) -> (usize, Vec<C64>) {
        let mut k = 0;
        let mut cur = trim(p.to_vec());
        loop {
            if cur.len() == 1 {
                return (k, cur);
            }
            let scale = cur.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let (q, rem) = synthetic_div(&cur, r);
            if rem.norm() <= tol * scale {
                cur = q;
                k += 1;
            } else {
                return (k, cur);
            }
        }
    }

    /// Laurent expansion in `s` at `s = 0` for `t = q^{-s}`: returns `(order, coefficients)`
    /// so that the function is `sum_j coefficients[j] s^{order + j}`.
    pub fn s_laurent(&self, q: f64, terms: usize) -> (i32, Vec<C64>) {
        let tol = 1e-10;
        let l = q.ln();
        let (k1, n1) = RationalFnT::strip_root(&self.num, ONE, tol);
        let (k2, d1) = RationalFnT::strip_root(&self.den, ONE, tol);
        // power series in s of P(e^{-sL}) * e^{-shift s L}
        let series = |p: &[C64], shift: i32| -> Vec<C64> {
            (0..terms)
                .map(|k| {
                    let fact: f64 = (1..=k).map(|i| i as f64).product();
                    p.iter()
                        .enumerate()
                        .map(|(j, c)| c * (-((j as i32 + shift) as f64) * l).powi(k as i32) / fact)
                        .sum::<C64>()
                })
                .collect()
        };
        // (e^{-sL} - 1) / s
        let e: Vec<C64> = (0..terms)
            .map(|k| {
                let fact: f64 = (1..=(k + 1)).map(|i| i as f64).product();
                C64::new((-l).powi(k as i32 + 1) / fact, 0.0)
            })
            .collect();
        let mul = |a: &[C64], b: &[C64]| -> Vec<C64> {
            (0..terms).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
        };
        let mut n = series(&n1, self.shift);
        for _ in 0..k1 {
            n = mul(&n, &e);
        }
        let mut d = series(&d1, 0);
        for _ in 0..k2 {
            d = mul(&d, &e);
        }
        // power series division n / d
        let mut out = vec![ZERO; terms];
        for k in 0..terms {
            let s: C64 = (0..k).map(|i| out[i] * d[k - i]).sum();
            out[k] = (n[k] - s) / d[0];
        }
        (k1 as i32 - k2 as i32, out)
    }

    /// Leading Laurent term at `s = 0`: `(coefficient, order)`.
    pub fn s_leading(&self, q: f64) -> (C64, i32) {
        let (ord, c) = self.s_laurent(q, 2);
        (c[0], ord)
    }
}
