//! The base `q`, the twisting permutation and probability weight vectors.

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// A base `q >= 2` together with a permutation `sigma` of the digits
/// satisfying `sigma^q = id`.
///
/// All `q` powers of `sigma` are tabulated at construction, so `sigma^n`
/// costs one lookup for any `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    q: usize,
    sigma: Vec<usize>,
    powers: Vec<Vec<usize>>,
}

/// Validates `(q, sigma)` and builds the power table.
pub fn validate_config(q: usize, sigma: &[usize]) -> Result<SystemConfig> {
    if q < 2 {
        return Err(Error::BaseTooSmall(q));
    }
    if sigma.len() != q {
        return Err(Error::TableLength {
            expected: q,
            got: sigma.len(),
        });
    }
    let mut seen = vec![false; q];
    for (i, &s) in sigma.iter().enumerate() {
        if s >= q {
            return Err(Error::NotABijection(format!(
                "sigma({i}) = {s} is outside 0..{}",
                q - 1
            )));
        }
        if seen[s] {
            return Err(Error::NotABijection(format!("image {s} is repeated")));
        }
        seen[s] = true;
    }

    let mut powers = Vec::with_capacity(q);
    powers.push((0..q).collect::<Vec<_>>());
    for n in 1..=q {
        let prev = &powers[n - 1];
        let next: Vec<usize> = prev.iter().map(|&p| sigma[p]).collect();
        if n == q {
            if let Some(point) = (0..q).find(|&i| next[i] != i) {
                return Err(Error::OrderViolation {
                    point,
                    image: next[point],
                });
            }
        } else {
            powers.push(next);
        }
    }

    Ok(SystemConfig {
        q,
        sigma: sigma.to_vec(),
        powers,
    })
}

impl SystemConfig {
    pub fn new(q: usize, sigma: &[usize]) -> Result<Self> {
        validate_config(q, sigma)
    }

    /// `sigma = id`.
    pub fn identity(q: usize) -> Result<Self> {
        validate_config(q, &(0..q).collect::<Vec<_>>())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    /// Image table of `sigma^(n mod q)`.
    pub fn sigma_power(&self, n: u64) -> &[usize] {
        &self.powers[(n % self.q as u64) as usize]
    }

    /// `sigma^n(j)`.
    #[inline]
    pub fn apply_power(&self, n: u64, j: usize) -> usize {
        self.powers[(n % self.q as u64) as usize][j]
    }

    /// `sigma^(-n)(j)`, computed as `sigma^(q - n mod q)(j)`.
    #[inline]
    pub fn apply_inverse_power(&self, n: u64, j: usize) -> usize {
        let q = self.q as u64;
        self.apply_power(q - n % q, j)
    }
}

/// Free-function form of [`SystemConfig::sigma_power`].
pub fn sigma_power(cfg: &SystemConfig, n: u64) -> Vec<usize> {
    cfg.sigma_power(n).to_vec()
}

/// A probability vector of length `q` with every entry strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVec(Vec<Rat>);

impl WeightVec {
    /// Validates a full vector of `q` weights.
    pub fn new(w: Vec<Rat>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidWeights(format!(
                "need at least 2 components, got {}",
                w.len()
            )));
        }
        for (i, c) in w.iter().enumerate() {
            if !c.is_positive() || *c >= Rat::one() {
                return Err(Error::InvalidWeights(format!(
                    "component {i} = {c} is not strictly between 0 and 1"
                )));
            }
        }
        let total: Rat = w.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidWeights(format!(
                "components sum to {total}, not 1"
            )));
        }
        Ok(WeightVec(w))
    }

    /// Builds the vector from its first `q - 1` entries; the last is `1 - sum`.
    pub fn from_free(q: usize, free: &[Rat]) -> Result<Self> {
        if q < 2 {
            return Err(Error::BaseTooSmall(q));
        }
        if free.len() != q - 1 {
            return Err(Error::InvalidWeights(format!(
                "expected {} free components, got {}",
                q - 1,
                free.len()
            )));
        }
        let mut w = free.to_vec();
        let s: Rat = free.iter().sum();
        w.push(Rat::one() - s);
        WeightVec::new(w)
    }

    /// `(1/q, ..., 1/q)`.
    pub fn uniform(q: usize) -> Self {
        let c = Rat::new(1.into(), (q as i64).into());
        WeightVec(vec![c; q])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.0
    }

    /// The `q - 1` independent components.
    pub fn free(&self) -> &[Rat] {
        &self.0[..self.0.len() - 1]
    }

    pub fn max(&self) -> &Rat {
        self.0.iter().max().expect("non-empty")
    }

    pub fn min(&self) -> &Rat {
        self.0.iter().min().expect("non-empty")
    }

    pub fn is_uniform(&self) -> bool {
        self.0.iter().all(|c| *c == self.0[0])
    }
}

impl std::ops::Index<usize> for WeightVec {
    type Output = Rat;

    fn index(&self, i: usize) -> &Rat {
        &self.0[i]
    }
}

impl std::fmt::Display for WeightVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `r_{sigma^n}`: component `j` is `r[sigma^n(j)]`.
pub fn permuted_weights(cfg: &SystemConfig, r: &WeightVec, n: u64) -> WeightVec {
    let p = cfg.sigma_power(n);
    WeightVec(p.iter().map(|&j| r[j].clone()).collect())
}
