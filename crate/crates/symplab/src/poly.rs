//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! Used for twist potentials `Q(r)`, the radial coefficients of Fourier
//! remainders, and the polynomial data of the homoclinic local model.
//! Terms are keyed by exponent multi-index in a `BTreeMap`, so iteration
//! order (and hence every serialized form) is deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Coefficients below this magnitude are dropped on normalization.
pub const COEFF_EPS: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(&vec![0; nvars], c);
        p
    }

    /// The monomial `c * x_i`.
    pub fn linear(nvars: usize, i: usize, c: f64) -> Self {
        let mut exps = vec![0u32; nvars];
        exps[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(&exps, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: &[(&[u32], f64)]) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent arity mismatch");
            p.add_term(e, *c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exps: &[u32], c: f64) {
        assert_eq!(exps.len(), self.nvars);
        let entry = self.terms.entry(exps.to_vec()).or_insert(0.0);
        *entry += c;
        if entry.abs() < COEFF_EPS {
            self.terms.remove(exps);
        }
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (xi, &e) in x.iter().zip(exps.iter()) {
                t *= xi.powi(e as i32);
            }
            acc += t;
        }
        acc
    }

    pub fn partial(&self, i: usize) -> Poly {
        assert!(i < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (exps, c) in &self.terms {
            if exps[i] == 0 {
                continue;
            }
            let mut e = exps.clone();
            e[i] -= 1;
            out.add_term(&e, c * exps[i] as f64);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    pub fn eval_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars).map(|i| self.partial(i).eval(x)).collect()
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e, c * s);
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e, *c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.add_term(&e, ca * cb);
            }
        }
        out
    }

    /// The part of the polynomial whose total degree equals `d`.
    pub fn homogeneous_part(&self, d: u32) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().sum::<u32>() == d {
                out.add_term(e, *c);
            }
        }
        out
    }

    /// Drop every term of total degree above `d`.
    pub fn truncate_degree(&self, d: u32) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().sum::<u32>() <= d {
                out.add_term(e, *c);
            }
        }
        out
    }

    /// Largest absolute coefficient; a cheap norm for flatness checks.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_gradient() {
        // p(x, y) = 3 x^2 y + y
        let p = Poly::from_terms(2, &[(&[2, 1], 3.0), (&[0, 1], 1.0)]);
        assert_eq!(p.eval(&[2.0, 5.0]), 65.0);
        let g = p.eval_gradient(&[2.0, 5.0]);
        assert_eq!(g, vec![60.0, 13.0]); // [6xy, 3x^2 + 1]
    }

    #[test]
    fn mul_and_homogeneous() {
        let a = Poly::from_terms(1, &[(&[1], 2.0), (&[0], 1.0)]);
        let sq = a.mul(&a); // (2x + 1)^2 = 4x^2 + 4x + 1
        assert_eq!(sq.coeff(&[2]), 4.0);
        assert_eq!(sq.coeff(&[1]), 4.0);
        assert_eq!(sq.coeff(&[0]), 1.0);
        assert_eq!(sq.homogeneous_part(2).coeff(&[2]), 4.0);
        assert!(sq.homogeneous_part(2).coeff(&[1]).abs() < 1e-15);
    }

    #[test]
    fn cancellation_drops_terms() {
        let mut p = Poly::zero(1);
        p.add_term(&[3], 1.0);
        p.add_term(&[3], -1.0);
        assert!(p.is_zero());
    }
}
