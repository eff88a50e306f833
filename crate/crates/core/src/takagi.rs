//! Truncated generalized Takagi functions `D_{d,r,u,k}` and their limits
//! `T_{d,r,u}` at base-q rationals.
//!
//! Two independent evaluators are provided. [`DirectTruncation`] builds the
//! integrand `(1/q) sum_{i_1 < .. < i_|u| <= k} sum_psi prod_m B_{psi(m)} o phi^{i_m}`
//! (with `B_l = Phi_l / r_l - Phi_{q-1} / r_{q-1}`) as one step function and
//! integrates it. [`takagi_d_recursive`] peels off the first shift index and
//! recurses on `u - e_alpha` with first-level weights `r_{sigma^n}`.
//!
//! # Exact limits
//!
//! For `x = m / q^K` with `x < 1`, `phi^j(x) = 0` for every `j >= K`, and every
//! truncation vanishes at 0, so all terms of the defining series past `j = K`
//! are zero (induction on `|u|`). At `x = 1` every integral runs over the whole
//! interval and vanishes because each integrand has zero mean. Hence
//! `T_{d,r,u}(x) = D_{d,r,u,K}(x)` exactly, and `T(0) = T(1) = 0`.
//!
//! # First term of the recursion
//!
//! At `j = 0` the inner integral is taken against `mu_{d,r}` itself. The
//! `mu_{r_{sigma^n}, r}` form of the later terms comes from pulling the integral
//! back through `phi^j`, which needs `j >= 1`.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::config::{permuted_weights, SystemConfig, WeightVec};
use crate::error::{Error, Result};
use crate::measure::{integrate_step, interval_measure, MeasureContext, StepIntegral};
use crate::qadic::{binomial, locate, phi_apply, MultiIndex, QAdicPoint};
use crate::rational::Rat;
use crate::stepfn::{base_diff, cells, compose_phi, StepFunction};

/// Upper limit on `C(k+1, |u|) * |u|! / u!` for the direct evaluator.
pub const DIRECT_TERM_LIMIT: u128 = 100_000;

/// An arrangement `psi: {1..|u|} -> {0..q-2}` taking value `j` exactly `u_j` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PsiMap(Vec<usize>);

impl PsiMap {
    /// `psi(m)` for `m = 1..=|u|`, stored zero-based.
    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Preimage counts; equal to `u` for a map enumerated from `u`.
    pub fn counts(&self, vars: usize) -> Vec<u32> {
        let mut c = vec![0; vars];
        for &j in &self.0 {
            c[j] += 1;
        }
        c
    }
}

/// Every arrangement for `u`, lexicographic.
pub fn enumerate_psi(u: &MultiIndex) -> Result<Vec<PsiMap>> {
    if u.total() == 0 {
        return Err(Error::EmptyMultiIndex);
    }
    fn rec(left: &mut [u32], cur: &mut Vec<usize>, out: &mut Vec<PsiMap>) {
        if left.iter().all(|&c| c == 0) {
            out.push(PsiMap(cur.clone()));
            return;
        }
        for j in 0..left.len() {
            if left[j] > 0 {
                left[j] -= 1;
                cur.push(j);
                rec(left, cur, out);
                cur.pop();
                left[j] += 1;
            }
        }
    }
    let mut left = u.orders().to_vec();
    let mut out = Vec::new();
    rec(&mut left, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Number of (shift tuple, arrangement) pairs in the direct sum.
pub fn direct_terms(u: &MultiIndex, k: u32) -> u128 {
    let arr = u.arrangements().to_u128().unwrap_or(u128::MAX);
    binomial(k as u64 + 1, u.total() as u64).saturating_mul(arr)
}

fn check_u(mc: &MeasureContext, u: &MultiIndex) -> Result<()> {
    if u.len() + 1 != mc.q() {
        return Err(Error::MultiIndexLength {
            expected: mc.q() - 1,
            got: u.len(),
        });
    }
    if u.total() == 0 {
        return Err(Error::EmptyMultiIndex);
    }
    Ok(())
}

/// `D_{d,r,u,k}` in its defining form: the whole integrand as one step function of
/// level `k + 2`, integrated against `mu_{d,r}` at any number of points.
#[derive(Debug, Clone)]
pub struct DirectTruncation {
    integral: StepIntegral,
}

impl DirectTruncation {
    pub fn new(mc: &MeasureContext, u: &MultiIndex, k: u32) -> Result<Self> {
        check_u(mc, u)?;
        let terms = direct_terms(u, k);
        if terms > DIRECT_TERM_LIMIT {
            return Err(Error::CombinatorialGuard {
                terms,
                limit: DIRECT_TERM_LIMIT,
            });
        }
        let q = mc.q();
        let level = k + 2;
        cells(q, level)?;

        // factors[a][i] = B_a o phi^i on level k + 2
        let factors: Vec<Vec<StepFunction>> = (0..q - 1)
            .map(|a| {
                let b = base_diff(&mc.cfg, &mc.r, a)?;
                (0..=k)
                    .map(|i| compose_phi(&b, i)?.relevel(level))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let psis = enumerate_psi(u)?;

        let mut acc = StepFunction::constant(q, Rat::zero()).relevel(level)?;
        for tuple in increasing_tuples(k, u.total() as usize) {
            for psi in &psis {
                let mut prod = factors[psi.0[0]][tuple[0] as usize].clone();
                for (m, &i) in tuple.iter().enumerate().skip(1) {
                    prod = prod.mul(&factors[psi.0[m]][i as usize])?;
                }
                acc = acc.add(&prod)?;
            }
        }
        let integrand = acc.scale(&Rat::new(1.into(), BigInt::from(q)));
        Ok(DirectTruncation {
            integral: StepIntegral::new(mc, &integrand)?,
        })
    }

    pub fn integrand(&self) -> &StepFunction {
        self.integral.function()
    }

    pub fn at(&self, x: &QAdicPoint) -> Rat {
        self.integral.at(x)
    }
}

/// All `0 <= i_1 < .. < i_n <= k`, lexicographic.
pub fn increasing_tuples(k: u32, n: usize) -> Vec<Vec<u32>> {
    fn rec(start: u32, k: u32, n: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..=k {
            cur.push(i);
            rec(i + 1, k, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, k, n, &mut Vec::new(), &mut out);
    }
    out
}

/// `D_{d,r,u,k}(x)` by the defining sum over shift tuples and arrangements.
pub fn takagi_d_direct(mc: &MeasureContext, u: &MultiIndex, k: u32, x: &QAdicPoint) -> Result<Rat> {
    if x.is_zero() {
        check_u(mc, u)?;
        return Ok(Rat::zero());
    }
    Ok(DirectTruncation::new(mc, u, k)?.at(x))
}

/// Shared data for the recursive evaluator: `sigma`, `r` and the base differences.
struct Recursion<'a> {
    cfg: &'a SystemConfig,
    r: &'a WeightVec,
    base: Vec<StepFunction>,
}

impl<'a> Recursion<'a> {
    fn new(mc: &'a MeasureContext) -> Result<Self> {
        let base = (0..mc.q() - 1)
            .map(|l| base_diff(&mc.cfg, &mc.r, l))
            .collect::<Result<_>>()?;
        Ok(Recursion {
            cfg: &mc.cfg,
            r: &mc.r,
            base,
        })
    }

    fn context(&self, d: &WeightVec) -> MeasureContext {
        MeasureContext {
            cfg: self.cfg.clone(),
            d: d.clone(),
            r: self.r.clone(),
        }
    }

    /// Terms `j = 0..=k` of the first-order series, each already divided by `q`.
    fn unit_terms(&self, d: &WeightVec, l: usize, k: u32, x: &QAdicPoint) -> Result<Vec<Rat>> {
        let outer = self.context(d);
        let q = Rat::from_integer(BigInt::from(self.cfg.q()));
        let mut terms = Vec::new();
        for j in 0..=k {
            let y = phi_apply(x, j);
            if y.is_zero() {
                break;
            }
            let cell = locate(x, j);
            let inner = if j == 0 {
                outer.clone()
            } else {
                self.context(&permuted_weights(self.cfg, self.r, cell.index()))
            };
            let integral = integrate_step(&inner, &self.base[l], &y)?;
            terms.push(interval_measure(&outer, &cell) * integral / &q);
        }
        Ok(terms)
    }

    fn eval(&self, d: &WeightVec, u: &MultiIndex, k: i64, x: &QAdicPoint) -> Result<Rat> {
        if x.is_zero() || k < 0 {
            return Ok(Rat::zero());
        }
        let outer = self.context(d);
        let mut sum = Rat::zero();

        if let Some(l) = u.as_unit() {
            let terms = self.unit_terms(d, l, k as u32, x)?;
            return Ok(terms.into_iter().sum());
        }

        let top = k - u.total() as i64 + 1;
        for j in 0..=top {
            let j = j as u32;
            let y = phi_apply(x, j + 1);
            if y.is_zero() {
                break;
            }
            let here = phi_apply(x, j);
            let cell = locate(x, j + 1);
            let mass = interval_measure(&outer, &cell);
            let inner_d = permuted_weights(self.cfg, self.r, cell.index());
            for alpha in u.support() {
                let b = self.base[alpha].eval(&here);
                if b.is_zero() {
                    continue;
                }
                let lower = u.minus_unit(alpha).expect("alpha in support");
                let inner = self.eval(&inner_d, &lower, k - j as i64 - 1, &y)?;
                if !inner.is_zero() {
                    sum += b * &mass * inner;
                }
            }
        }
        Ok(sum)
    }
}

/// The nonzero-range terms of the first-order series for `T_{d,r,e_l}(x)`:
/// entry `j` is the contribution of shift `j`, and `D_k` is the sum of the first `k + 1`.
pub fn base_series_terms(mc: &MeasureContext, l: usize, x: &QAdicPoint) -> Result<Vec<Rat>> {
    check_u(mc, &MultiIndex::unit(mc.q(), l)?)?;
    if x.is_one() {
        return Ok(Vec::new());
    }
    Recursion::new(mc)?.unit_terms(&mc.d, l, x.level(), x)
}

/// `D_{d,r,u,k}(x)` by the order-reducing recursion.
pub fn takagi_d_recursive(
    mc: &MeasureContext,
    u: &MultiIndex,
    k: u32,
    x: &QAdicPoint,
) -> Result<Rat> {
    check_u(mc, u)?;
    Recursion::new(mc)?.eval(&mc.d, u, k as i64, x)
}

/// `T_{d,r,u}(x)`, exact at base-q rationals (see the module notes).
pub fn takagi_t(mc: &MeasureContext, u: &MultiIndex, x: &QAdicPoint) -> Result<Rat> {
    takagi_d_recursive(mc, u, x.level(), x)
}

/// Uniform bound on `|T_{d,r,u}|` over all `d`, `x` and `|u'| = |u|`:
/// `(q-1)^{|u|-1} / (q max r) * (2 / min r * 1 / (1 - max r))^{|u|}`.
pub fn sup_bound(r: &WeightVec, u: &MultiIndex) -> Result<Rat> {
    let n = u.total();
    if n == 0 {
        return Err(Error::EmptyMultiIndex);
    }
    let q = Rat::from_integer(BigInt::from(r.len()));
    let one = Rat::from_integer(1.into());
    let (max, min) = (r.max(), r.min());
    let lead = pow(&(&q - &one), n - 1) / (&q * max);
    let per_order = Rat::from_integer(2.into()) / min / (&one - max);
    Ok(lead * pow(&per_order, n))
}

/// Tail bound `|T_{d,r,e_l} - D_{d,r,e_l,k}| <= 2 / (q min r) * (max r)^k / (1 - max r)`.
pub fn tail_bound_base(r: &WeightVec, k: u32) -> Rat {
    let q = Rat::from_integer(BigInt::from(r.len()));
    let one = Rat::from_integer(1.into());
    let (max, min) = (r.max(), r.min());
    Rat::from_integer(2.into()) / (q * min) * pow(max, k) / (one - max)
}

fn pow(b: &Rat, e: u32) -> Rat {
    let mut acc = Rat::from_integer(1.into());
    for _ in 0..e {
        acc *= b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;
    use crate::rational::{int, rat};

    fn u2() -> MeasureContext {
        MeasureContext::coupled(validate_config(2, &[0, 1]).unwrap(), WeightVec::uniform(2))
            .unwrap()
    }

    fn pt(q: usize, m: u64, k: u32) -> QAdicPoint {
        QAdicPoint::new(q, m, k).unwrap()
    }

    fn mi(q: usize, v: &[u32]) -> MultiIndex {
        MultiIndex::new(q, v.to_vec()).unwrap()
    }

    #[test]
    fn psi_enumeration() {
        let maps = enumerate_psi(&mi(4, &[1, 2, 0])).unwrap();
        let images: Vec<_> = maps.iter().map(|p| p.images().to_vec()).collect();
        assert_eq!(images, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        assert_eq!(enumerate_psi(&mi(3, &[0, 1])).unwrap()[0].images(), &[1]);
        assert_eq!(enumerate_psi(&mi(3, &[2, 1])).unwrap().len(), 3);
        assert_eq!(enumerate_psi(&mi(3, &[0, 0])), Err(Error::EmptyMultiIndex));
    }

    #[test]
    fn first_order_values() {
        let mc = u2();
        let e0 = mi(2, &[1]);
        assert_eq!(
            takagi_d_direct(&mc, &e0, 0, &pt(2, 1, 2)).unwrap(),
            rat(1, 4)
        );
        assert_eq!(
            takagi_d_recursive(&mc, &e0, 0, &pt(2, 1, 2)).unwrap(),
            rat(1, 4)
        );
        for k in 1..5 {
            assert_eq!(
                takagi_d_recursive(&mc, &e0, k, &pt(2, 1, 1)).unwrap(),
                int(0)
            );
        }
        assert_eq!(takagi_t(&mc, &e0, &pt(2, 1, 2)).unwrap(), rat(1, 4));
        assert_eq!(takagi_t(&mc, &e0, &pt(2, 1, 1)).unwrap(), int(0));
        assert_eq!(takagi_t(&mc, &e0, &QAdicPoint::zero(2)).unwrap(), int(0));
        assert_eq!(takagi_t(&mc, &e0, &QAdicPoint::one(2)).unwrap(), int(0));
    }

    #[test]
    fn second_order_vanishes_at_quarter() {
        let mc = u2();
        let u = mi(2, &[2]);
        assert_eq!(takagi_d_direct(&mc, &u, 3, &pt(2, 1, 2)).unwrap(), int(0));
        assert_eq!(
            takagi_d_recursive(&mc, &u, 3, &pt(2, 1, 2)).unwrap(),
            int(0)
        );
        assert_eq!(
            takagi_d_direct(&mc, &u, 3, &QAdicPoint::zero(2)).unwrap(),
            int(0)
        );
    }

    #[test]
    fn guard_and_errors() {
        let mc = u2();
        assert_eq!(
            takagi_d_direct(&mc, &mi(2, &[0]), 1, &pt(2, 1, 2)),
            Err(Error::EmptyMultiIndex)
        );
        assert!(matches!(
            DirectTruncation::new(&mc, &mi(2, &[6]), 40),
            Err(Error::CombinatorialGuard { .. })
        ));
        assert!(matches!(
            DirectTruncation::new(&mc, &mi(2, &[1]), 19),
            Err(Error::LevelCapExceeded { .. })
        ));
        assert!(takagi_d_recursive(
            &mc,
            &MultiIndex::new(3, vec![1, 0]).unwrap(),
            1,
            &pt(2, 1, 2)
        )
        .is_err());
    }

    #[test]
    fn bounds() {
        let half = WeightVec::uniform(2);
        let g = WeightVec::new(vec![rat(1, 4), rat(3, 4)]).unwrap();
        assert_eq!(sup_bound(&half, &mi(2, &[1])).unwrap(), int(8));
        assert_eq!(sup_bound(&g, &mi(2, &[1])).unwrap(), rat(64, 3));
        assert_eq!(sup_bound(&half, &mi(2, &[2])).unwrap(), int(64));
        assert_eq!(tail_bound_base(&half, 3), rat(1, 2));
        assert_eq!(tail_bound_base(&half, 0), int(4));
        assert_eq!(tail_bound_base(&g, 5), tail_bound_base(&g, 4) * rat(3, 4));
    }

    #[test]
    fn tuples() {
        assert_eq!(increasing_tuples(5, 3).len(), 20);
        assert_eq!(increasing_tuples(1, 3).len(), 0);
        assert_eq!(increasing_tuples(2, 1), vec![vec![0], vec![1], vec![2]]);
    }
}
