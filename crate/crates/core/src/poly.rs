//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::Rat;

/// `sum c_e v^e` over exponent vectors `e`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePoly {
    vars: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

impl SparsePoly {
    pub fn zero(vars: usize) -> Self {
        SparsePoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: Rat) -> Self {
        let mut p = SparsePoly::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    pub fn one(vars: usize) -> Self {
        SparsePoly::constant(vars, Rat::one())
    }

    /// The variable `v_i`.
    pub fn var(vars: usize, i: usize) -> Self {
        assert!(i < vars, "variable index out of range");
        let mut e = vec![0; vars];
        e[i] = 1;
        let mut p = SparsePoly::zero(vars);
        p.add_term(e, Rat::one());
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rat)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Rat {
        self.terms.get(exponents).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return SparsePoly::zero(self.vars);
        }
        SparsePoly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    /// `d/dv_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = SparsePoly::zero(self.vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * Rat::from_integer(BigInt::from(e[i])));
        }
        out
    }

    /// Applies `d/dv_{order[0]}`, then `d/dv_{order[1]}`, and so on.
    pub fn derivative_sequence(&self, order: &[usize]) -> Self {
        order.iter().fold(self.clone(), |p, &i| p.derivative(i))
    }

    /// `d^{|u|} / dv_0^{u_0} .. dv_{n-1}^{u_{n-1}}`.
    pub fn mixed_derivative(&self, orders: &[u32]) -> Self {
        assert_eq!(orders.len(), self.vars, "one order per variable");
        let mut p = self.clone();
        for (i, &k) in orders.iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(i);
            }
        }
        p
    }

    pub fn evaluate(&self, point: &[Rat]) -> Rat {
        assert_eq!(point.len(), self.vars, "one value per variable");
        let mut total = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            total += t;
        }
        total
    }
}

impl Add for &SparsePoly {
    type Output = SparsePoly;

    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.vars, rhs.vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;

    fn neg(self) -> SparsePoly {
        SparsePoly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;

    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        self + &(-rhs)
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;

    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.vars, rhs.vars);
        let mut out = SparsePoly::zero(self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*v{i}")?,
                    _ => write!(f, "*v{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn arithmetic_and_calculus() {
        let x = SparsePoly::var(2, 0);
        let y = SparsePoly::var(2, 1);
        let one = SparsePoly::one(2);
        // (1 - x - y) * x^2
        let p = &(&(&one - &x) - &y) * &(&x * &x);
        assert_eq!(p.total_degree(), 3);
        assert_eq!(p.coefficient(&[2, 0]), int(1));
        assert_eq!(p.coefficient(&[3, 0]), int(-1));
        assert_eq!(p.coefficient(&[2, 1]), int(-1));
        let dx = p.derivative(0);
        // 2x - 3x^2 - 2xy
        assert_eq!(dx.evaluate(&[rat(1, 2), rat(1, 3)]), rat(-1, 12));
        assert_eq!(p.mixed_derivative(&[1, 1]), p.derivative_sequence(&[1, 0]));
        assert!((&p - &p).is_zero());
        assert_eq!(p.scale(&int(0)), SparsePoly::zero(2));
    }
}
