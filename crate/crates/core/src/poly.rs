//! Sparse multivariate polynomials with real coefficients.
//!
//! Monomials are exponent vectors over a fixed number of variables; the
//! coefficient map is ordered so that iteration and printing are deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponents below this magnitude are dropped after every operation.
const ZERO_COEFF: f64 = 0.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The polynomial `x_var`.
    pub fn var(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(exponents: Vec<u32>, coeff: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, coeff: f64) {
        assert_eq!(exponents.len(), self.nvars, "monomial arity");
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += coeff;
        if entry.abs() <= ZERO_COEFF {
            self.terms.retain(|_, c| c.abs() > ZERO_COEFF);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars, "evaluation point arity");
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(point)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Exact partial derivative with respect to `var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.add_term(d, c * e[var] as f64);
            }
        }
        out
    }

    /// Largest absolute coefficient, used as a residual size.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Drop coefficients at or below `tol` in absolute value.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Render with the given variable names, e.g. `-1*a*c`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { poly: self, names }
    }
}

struct PolyDisplay<'a> {
    poly: &'a SparsePoly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.poly.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (v, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*{}", self.names[v])?,
                    _ => write!(f, "*{}^{}", self.names[v], k)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        self.scale(-1.0)
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity");
        let mut out = SparsePoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_and_derivative() {
        // (x + y)^2 = x^2 + 2xy + y^2; d/dx = 2x + 2y
        let x = SparsePoly::var(2, 0);
        let y = SparsePoly::var(2, 1);
        let s = &x + &y;
        let sq = &s * &s;
        assert_eq!(sq.total_degree(), 2);
        assert_eq!(sq.eval(&[1.5, -0.5]), 1.0);
        let dx = sq.partial(0);
        assert_eq!(dx.eval(&[1.0, 2.0]), 6.0);
    }

    #[test]
    fn cancellation_leaves_zero() {
        let x = SparsePoly::var(3, 2);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn display_names_variables() {
        let names = vec!["a".to_string(), "c".to_string()];
        let p = &SparsePoly::var(2, 0) * &SparsePoly::var(2, 1);
        assert_eq!(p.scale(-1.0).display_with(&names).to_string(), "-1*a*c");
    }

    proptest! {
        #[test]
        fn evaluation_is_a_ring_morphism(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            pt in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let x = SparsePoly::var(2, 0);
            let y = SparsePoly::var(2, 1);
            let p = &(&x.scale(a[0]) + &y.scale(a[1])) + &SparsePoly::constant(2, a[2]);
            let q = &(&x * &y) + &x;
            let lhs = (&p * &q).eval(&pt);
            let rhs = p.eval(&pt) * q.eval(&pt);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
