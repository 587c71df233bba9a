//! Polynomials in `(t, x₁, x₂, x₃)` with exact differentiation.
//!
//! Used as an oracle for identities that involve derivatives of test fields.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use super::{FourVector, NullFormCoeffs};

/// A polynomial stored as a map from exponent tuples to coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<[u32; 4], f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0; 4])
    }

    pub fn monomial(c: f64, exps: [u32; 4]) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(exps, c);
        }
        Self { terms }
    }

    /// The coordinate `x_index` (0 = t).
    pub fn var(index: usize) -> Self {
        let mut e = [0; 4];
        e[index] = 1;
        Self::monomial(1.0, e)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.push(*e, c * s);
        }
        out
    }

    fn push(&mut self, e: [u32; 4], c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn derivative(&self, index: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[index] > 0 {
                let mut ne = *e;
                ne[index] -= 1;
                out.push(ne, c * e[index] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> [Poly; 4] {
        std::array::from_fn(|i| self.derivative(i))
    }

    pub fn eval(&self, p: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * (0..4).map(|i| p[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    pub fn eval_gradient(&self, p: &[f64; 4]) -> FourVector {
        FourVector(self.gradient().map(|g| g.eval(p)))
    }

    /// Sum of absolute values of the terms at `p`; a scale for relative errors.
    pub fn eval_abs(&self, p: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| (c * (0..4).map(|i| p[i].powi(e[i] as i32)).product::<f64>()).abs())
            .sum()
    }

    /// `Ω_{ij} f = x_j ∂_i f − x_i ∂_j f` for spatial indices `1 ≤ i, j ≤ 3`.
    pub fn rotate(&self, i: usize, j: usize) -> Self {
        &(&Poly::var(j) * &self.derivative(i)) - &(&Poly::var(i) * &self.derivative(j))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.push(*e, *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.push(*e, -*c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = std::array::from_fn(|i| ea[i] + eb[i]);
                out.push(e, ca * cb);
            }
        }
        out
    }
}

/// `Q(∇f, ∇g)` as a polynomial.
pub fn apply_form(q: &NullFormCoeffs, f: &Poly, g: &Poly) -> Poly {
    let a = q.bilinear_matrix();
    let gf = f.gradient();
    let gg = g.gradient();
    let mut out = Poly::zero();
    for (x, row) in a.iter().enumerate() {
        for (y, &m) in row.iter().enumerate() {
            if m != 0.0 {
                out = &out + &(&gf[x] * &gg[y]).scale(m);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullform::{basis_form, BasisForm};

    #[test]
    fn derivative_of_monomial() {
        let p = Poly::monomial(3.0, [2, 1, 0, 0]);
        let d = p.derivative(0);
        assert_eq!(d, Poly::monomial(6.0, [1, 1, 0, 0]));
        assert!(p.derivative(3).is_zero());
    }

    #[test]
    fn arithmetic_and_eval() {
        let t = Poly::var(0);
        let x = Poly::var(1);
        let p = &(&t * &x) + &Poly::constant(2.0);
        assert_eq!(p.eval(&[3.0, 4.0, 0.0, 0.0]), 14.0);
        let z = &p - &p;
        assert!(z.is_zero());
    }

    #[test]
    fn rotation_of_radius_vanishes() {
        let r2 = &(&(&Poly::var(1) * &Poly::var(1)) + &(&Poly::var(2) * &Poly::var(2)))
            + &(&Poly::var(3) * &Poly::var(3));
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            assert!(r2.rotate(i, j).is_zero());
        }
    }

    #[test]
    fn metric_form_of_linear_fields() {
        let q0 = basis_form(BasisForm::Q0);
        let v = apply_form(&q0, &Poly::var(0), &Poly::var(0));
        assert_eq!(v, Poly::constant(-1.0));
    }
}
