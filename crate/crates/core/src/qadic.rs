//! Base-q rationals `m / q^K`, the level-k cells `I_k(n)`, the shift map and
//! derivative multi-indices.
//!
//! Digit words are most-significant first throughout: the word of `I_k(n)` is
//! `n_{k-1} ... n_0` with `n = sum n_i q^i`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// `q^k` as `u64`, or `None` on overflow.
pub fn checked_pow(q: usize, k: u32) -> Option<u64> {
    (q as u64).checked_pow(k)
}

fn pow(q: usize, k: u32) -> u64 {
    checked_pow(q, k).expect("q^k overflows u64")
}

/// Strips trailing zero digits of `m / q^level`.
pub fn canonicalize(q: usize, mut num: u64, mut level: u32) -> (u64, u32) {
    let qq = q as u64;
    if num == 0 {
        return (0, 0);
    }
    while level > 0 && num.is_multiple_of(qq) {
        num /= qq;
        level -= 1;
    }
    (num, level)
}

/// An exact point `m / q^K` of the closed unit interval, stored canonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QAdicPoint {
    q: usize,
    num: u64,
    level: u32,
}

impl QAdicPoint {
    /// `num / q^level`, canonicalized.
    pub fn new(q: usize, num: u64, level: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::BaseTooSmall(q));
        }
        let den = checked_pow(q, level)
            .ok_or_else(|| Error::InvalidPoint(format!("q^{level} overflows")))?;
        if num > den {
            return Err(Error::InvalidPoint(format!(
                "x = {num}/{den} is out of [0,1]"
            )));
        }
        let (num, level) = canonicalize(q, num, level);
        Ok(QAdicPoint { q, num, level })
    }

    pub fn zero(q: usize) -> Self {
        QAdicPoint {
            q,
            num: 0,
            level: 0,
        }
    }

    pub fn one(q: usize) -> Self {
        QAdicPoint {
            q,
            num: 1,
            level: 0,
        }
    }

    /// Converts an exact rational whose reduced denominator divides a power of `q`.
    pub fn from_rat(q: usize, x: &Rat) -> Result<Self> {
        if q < 2 {
            return Err(Error::BaseTooSmall(q));
        }
        if *x < Rat::zero() || *x > Rat::one() {
            return Err(Error::InvalidPoint(format!("x = {x} is out of [0,1]")));
        }
        let den = x.denom();
        let qb = BigInt::from(q);
        let mut qk = BigInt::one();
        let mut level = 0u32;
        while !(&qk % den).is_zero() {
            qk *= &qb;
            level += 1;
            if level > 40 {
                return Err(Error::InvalidPoint(format!(
                    "x = {x} is not a base-{q} rational"
                )));
            }
        }
        let m = x.numer() * (&qk / den);
        let m: u64 = m
            .try_into()
            .map_err(|_| Error::InvalidPoint(format!("x = {x} is too deep")))?;
        QAdicPoint::new(q, m, level)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Numerator of the canonical form.
    pub fn num(&self) -> u64 {
        self.num
    }

    /// Level `K` of the canonical form: the number of base-q digits.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn denom(&self) -> u64 {
        pow(self.q, self.level)
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.level == 0 && self.num == 1
    }

    pub fn to_rat(&self) -> Rat {
        Rat::new(BigInt::from(self.num), BigInt::from(self.denom()))
    }

    /// Base-q digits after the point, most significant first (empty for 0 and 1).
    pub fn digits(&self) -> Vec<usize> {
        if self.is_one() {
            return Vec::new();
        }
        digits_of(self.q, self.num, self.level)
    }

    /// All points `m / q^level`, `m = 0..=q^level`, in increasing order.
    pub fn grid(q: usize, level: u32) -> Vec<QAdicPoint> {
        let den = pow(q, level);
        (0..=den)
            .map(|m| QAdicPoint::new(q, m, level).expect("grid point"))
            .collect()
    }
}

impl PartialOrd for QAdicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        if self.q != other.q {
            return None;
        }
        Some(self.to_rat().cmp(&other.to_rat()))
    }
}

impl fmt::Display for QAdicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.denom())
        }
    }
}

fn digits_of(q: usize, mut n: u64, len: u32) -> Vec<usize> {
    let mut out = vec![0usize; len as usize];
    for slot in out.iter_mut().rev() {
        *slot = (n % q as u64) as usize;
        n /= q as u64;
    }
    out
}

/// The cell `I_k(n) = [n/q^k, (n+1)/q^k)`, closed on the right when `n = q^k - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QAdicInterval {
    q: usize,
    level: u32,
    index: u64,
}

impl QAdicInterval {
    pub fn new(q: usize, level: u32, index: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::BaseTooSmall(q));
        }
        let n = checked_pow(q, level)
            .ok_or_else(|| Error::InvalidPoint(format!("q^{level} overflows")))?;
        if index >= n {
            return Err(Error::InvalidPoint(format!(
                "index {index} out of range for level {level}"
            )));
        }
        Ok(QAdicInterval { q, level, index })
    }

    /// Builds the cell from its digit word (most significant first).
    pub fn from_digits(q: usize, word: &[usize]) -> Result<Self> {
        let mut index = 0u64;
        for &d in word {
            if d >= q {
                return Err(Error::DigitOutOfRange { digit: d, q });
            }
            index = index * q as u64 + d as u64;
        }
        QAdicInterval::new(q, word.len() as u32, index)
    }

    /// `I_0(0) = [0, 1]`.
    pub fn whole(q: usize) -> Self {
        QAdicInterval {
            q,
            level: 0,
            index: 0,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// `n_{k-1} ... n_0`.
    pub fn digits(&self) -> Vec<usize> {
        digits_of(self.q, self.index, self.level)
    }

    /// The `q` cells of level `k + 1` inside this one, in order.
    pub fn children(&self) -> impl Iterator<Item = QAdicInterval> + '_ {
        (0..self.q as u64).map(move |l| QAdicInterval {
            q: self.q,
            level: self.level + 1,
            index: self.index * self.q as u64 + l,
        })
    }

    pub fn left(&self) -> QAdicPoint {
        QAdicPoint::new(self.q, self.index, self.level).expect("left endpoint")
    }

    pub fn right(&self) -> QAdicPoint {
        QAdicPoint::new(self.q, self.index + 1, self.level).expect("right endpoint")
    }

    pub fn is_last(&self) -> bool {
        self.index + 1 == pow(self.q, self.level)
    }

    pub fn contains(&self, x: &QAdicPoint) -> bool {
        locate(x, self.level) == *self
    }
}

impl fmt::Display for QAdicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I_{}(", self.level)?;
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// The shift `phi(x) = q x mod 1` iterated `i` times, with `phi(1) = 1`.
pub fn phi_apply(x: &QAdicPoint, i: u32) -> QAdicPoint {
    if x.is_one() {
        return *x;
    }
    if i >= x.level {
        return QAdicPoint::zero(x.q);
    }
    let rest = x.level - i;
    let num = x.num % pow(x.q, rest);
    let (num, level) = canonicalize(x.q, num, rest);
    QAdicPoint { q: x.q, num, level }
}

/// The unique level-`k` cell containing `x`.
pub fn locate(x: &QAdicPoint, k: u32) -> QAdicInterval {
    let q = x.q;
    let index = if x.is_one() {
        pow(q, k) - 1
    } else if x.level <= k {
        x.num * pow(q, k - x.level)
    } else {
        x.num / pow(q, x.level - k)
    };
    QAdicInterval { q, level: k, index }
}

/// Differentiation orders `(u_0, ..., u_{q-2})`; `r_{q-1}` is never a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(q: usize, orders: Vec<u32>) -> Result<Self> {
        if q < 2 {
            return Err(Error::BaseTooSmall(q));
        }
        if orders.len() != q - 1 {
            return Err(Error::MultiIndexLength {
                expected: q - 1,
                got: orders.len(),
            });
        }
        Ok(MultiIndex(orders))
    }

    /// `e_l`.
    pub fn unit(q: usize, l: usize) -> Result<Self> {
        if l + 1 >= q {
            return Err(Error::DigitOutOfRange { digit: l, q });
        }
        let mut v = vec![0; q - 1];
        v[l] = 1;
        Ok(MultiIndex(v))
    }

    /// Every multi-index of total order `n` in lexicographic order.
    pub fn all_of_order(q: usize, n: u32) -> Vec<MultiIndex> {
        fn rec(slots: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if slots == 1 {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for a in (0..=left).rev() {
                cur.push(a);
                rec(slots - 1, left - a, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(q - 1, n, &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    /// Number of variables, `q - 1`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|u|`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `u! = prod u_l!`.
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .map(|&k| factorial(k))
            .fold(BigInt::one(), |a, b| a * b)
    }

    /// Number of arrangements `|u|! / u!`.
    pub fn arrangements(&self) -> BigInt {
        factorial(self.total()) / self.factorial()
    }

    /// `u - e_a`; `None` when `u_a = 0`.
    pub fn minus_unit(&self, a: usize) -> Option<MultiIndex> {
        if self.0.get(a).copied().unwrap_or(0) == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[a] -= 1;
        Some(MultiIndex(v))
    }

    /// `Some(l)` when this is `e_l`.
    pub fn as_unit(&self) -> Option<usize> {
        if self.total() == 1 {
            self.0.iter().position(|&k| k == 1)
        } else {
            None
        }
    }

    /// Variables with positive order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, _)| i)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * k)
}

/// Binomial coefficient as `u128` (saturating).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}
