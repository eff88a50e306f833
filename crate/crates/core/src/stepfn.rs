//! Exact step functions that are constant on the level-m cells `I_m(n)`.
//!
//! A step function of level `m` is `F_m`-measurable; every finite combination of
//! selectors, shifted selectors and Radon-Nikodym ratios used by the evaluators is
//! one of these.

use num_traits::{One, Zero};

use crate::config::{SystemConfig, WeightVec};
use crate::error::{Error, Result};
use crate::measure::level_masses;
use crate::qadic::{checked_pow, locate, QAdicInterval, QAdicPoint};
use crate::rational::Rat;

/// Largest table a step function may hold.
pub const MAX_CELLS: u64 = 1 << 20;

/// Number of level-`level` cells, or [`Error::LevelCapExceeded`].
pub fn cells(q: usize, level: u32) -> Result<usize> {
    match checked_pow(q, level) {
        Some(n) if n <= MAX_CELLS => Ok(n as usize),
        _ => Err(Error::LevelCapExceeded { q, level }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunction {
    q: usize,
    level: u32,
    values: Vec<Rat>,
}

/// Pointwise operation for [`step_combine`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Combine {
    Add,
    Multiply,
    Scale(Rat),
}

impl StepFunction {
    pub fn new(q: usize, level: u32, values: Vec<Rat>) -> Result<Self> {
        let n = cells(q, level)?;
        if values.len() != n {
            return Err(Error::InvalidPoint(format!(
                "step table has {} values, expected {n}",
                values.len()
            )));
        }
        Ok(StepFunction { q, level, values })
    }

    pub fn constant(q: usize, c: Rat) -> Self {
        StepFunction {
            q,
            level: 0,
            values: vec![c],
        }
    }

    pub fn indicator(iv: &QAdicInterval) -> Result<Self> {
        let n = cells(iv.q(), iv.level())?;
        let mut values = vec![Rat::zero(); n];
        values[iv.index() as usize] = Rat::one();
        Ok(StepFunction {
            q: iv.q(),
            level: iv.level(),
            values,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Value on the level-`level` cell `n`.
    pub fn value(&self, n: usize) -> &Rat {
        &self.values[n]
    }

    /// Value on the cell of level `at_level >= self.level` with index `n`.
    #[inline]
    pub fn value_on(&self, at_level: u32, n: u64) -> &Rat {
        let shift = checked_pow(self.q, at_level - self.level).expect("level");
        &self.values[(n / shift) as usize]
    }

    /// Evaluates at `x` using the half-open cell convention.
    pub fn eval(&self, x: &QAdicPoint) -> &Rat {
        &self.values[locate(x, self.level).index() as usize]
    }

    /// Same function on the finer partition of level `level >= self.level`.
    pub fn relevel(&self, level: u32) -> Result<StepFunction> {
        assert!(level >= self.level, "relevel can only refine");
        let n = cells(self.q, level)?;
        let rep = n / self.values.len();
        let mut values = Vec::with_capacity(n);
        for v in &self.values {
            for _ in 0..rep {
                values.push(v.clone());
            }
        }
        Ok(StepFunction {
            q: self.q,
            level,
            values,
        })
    }

    fn zip_with(&self, other: &StepFunction, f: impl Fn(&Rat, &Rat) -> Rat) -> Result<Self> {
        if self.q != other.q {
            return Err(Error::BaseMismatch {
                expected: self.q,
                got: other.q,
            });
        }
        let level = self.level.max(other.level);
        let n = cells(self.q, level)?;
        let values = (0..n as u64)
            .map(|i| f(self.value_on(level, i), other.value_on(level, i)))
            .collect();
        Ok(StepFunction {
            q: self.q,
            level,
            values,
        })
    }

    pub fn add(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        StepFunction {
            q: self.q,
            level: self.level,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `true` when every value is zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// Coarsest equivalent representation (drops repeated blocks).
    pub fn simplify(&self) -> StepFunction {
        let mut f = self.clone();
        while f.level > 0 {
            let q = f.q;
            if f.values.chunks(q).all(|c| c.iter().all(|v| *v == c[0])) {
                f.values = f.values.chunks(q).map(|c| c[0].clone()).collect();
                f.level -= 1;
            } else {
                break;
            }
        }
        f
    }

    /// Pointwise equality as functions, independent of representation level.
    pub fn same_function(&self, other: &StepFunction) -> bool {
        self.q == other.q && self.simplify() == other.simplify()
    }
}

/// Folds `args` with `op`; `Scale` applies to the single argument.
pub fn step_combine(op: &Combine, args: &[&StepFunction]) -> Result<StepFunction> {
    let (first, rest) = args
        .split_first()
        .ok_or_else(|| Error::InvalidPoint("step_combine needs an argument".into()))?;
    match op {
        Combine::Scale(c) => Ok(first.scale(c)),
        Combine::Add => rest.iter().try_fold((*first).clone(), |acc, f| acc.add(f)),
        Combine::Multiply => rest.iter().try_fold((*first).clone(), |acc, f| acc.mul(f)),
    }
}

/// `f o phi^i`: the value on the cell with word `b_{i-1}..b_0 a_{m-1}..a_0` is the
/// value of `f` on `a_{m-1}..a_0`.
pub fn compose_phi(f: &StepFunction, i: u32) -> Result<StepFunction> {
    let level = f.level + i;
    let n = cells(f.q, level)?;
    let m = f.values.len();
    let values = (0..n).map(|idx| f.values[idx % m].clone()).collect();
    Ok(StepFunction {
        q: f.q,
        level,
        values,
    })
}

/// The selector `Phi_l`: 1 on `I_2(b_1 b_0)` iff `sigma^{b_1}(b_0) = l`.
pub fn phi_l(cfg: &SystemConfig, l: usize) -> Result<StepFunction> {
    let q = cfg.q();
    if l >= q {
        return Err(Error::DigitOutOfRange { digit: l, q });
    }
    let values = twisted_digits(cfg)
        .map(|c| if c == l { Rat::one() } else { Rat::zero() })
        .collect();
    StepFunction::new(q, 2, values)
}

/// `sigma^{b_1}(b_0)` for each level-2 cell `b_1 b_0`, in index order.
fn twisted_digits(cfg: &SystemConfig) -> impl Iterator<Item = usize> + '_ {
    let q = cfg.q();
    (0..q * q).map(move |n| cfg.apply_power((n / q) as u64, n % q))
}

/// `Phi_l / r_l - Phi_{q-1} / r_{q-1}` for `0 <= l <= q-2`.
pub fn base_diff(cfg: &SystemConfig, r: &WeightVec, l: usize) -> Result<StepFunction> {
    let q = cfg.q();
    if l + 1 >= q {
        return Err(Error::DigitOutOfRange { digit: l, q });
    }
    let table = base_diff_table(r, l);
    let values = twisted_digits(cfg).map(|c| table[c].clone()).collect();
    StepFunction::new(q, 2, values)
}

/// Value of the base difference for `l` as a function of the twisted digit.
pub(crate) fn base_diff_table(r: &WeightVec, l: usize) -> Vec<Rat> {
    let q = r.len();
    (0..q)
        .map(|c| {
            if c == l {
                r[l].recip()
            } else if c == q - 1 {
                -r[q - 1].recip()
            } else {
                Rat::zero()
            }
        })
        .collect()
}

/// `W[s; r]`: value `s_c / r_c` on `I_2(b_1 b_0)` with `c = sigma^{b_1}(b_0)`.
pub fn w_fn(cfg: &SystemConfig, s: &WeightVec, r: &WeightVec) -> StepFunction {
    let values = twisted_digits(cfg).map(|c| &s[c] / &r[c]).collect();
    StepFunction::new(cfg.q(), 2, values).expect("level 2 fits")
}

/// `Z[e s; d r; k]`: the ratio of level-k cell masses `mu_{e,s} / mu_{d,r}`.
pub fn z_fn(
    cfg: &SystemConfig,
    e: &WeightVec,
    s: &WeightVec,
    d: &WeightVec,
    r: &WeightVec,
    k: u32,
) -> Result<StepFunction> {
    let top = level_masses(cfg, e, s, k)?;
    let bottom = level_masses(cfg, d, r, k)?;
    let values = top.iter().zip(&bottom).map(|(a, b)| a / b).collect();
    StepFunction::new(cfg.q(), k, values)
}
