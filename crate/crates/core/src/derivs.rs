//! Parametric derivatives of `L_r` and the Takagi-function expression for them.
//!
//! The ground truth is symbolic: at a base-q rational `x` the value `L_{d,r}(x)`
//! is a polynomial in `v_0 .. v_{q-2}` once `r_{q-1} = 1 - sum v_j` is
//! substituted, so derivatives with respect to `r_l` are the constrained ones.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::config::{SystemConfig, WeightVec};
use crate::error::{Error, Result};
use crate::measure::{cdf, lebesgue_level1_integral, MeasureContext};
use crate::poly::SparsePoly;
use crate::qadic::{locate, MultiIndex, QAdicPoint};
use crate::rational::Rat;
use crate::takagi::{takagi_t, DirectTruncation};

/// Deepest point accepted by [`cdf_polynomial`].
pub const MAX_POLY_LEVEL: u32 = 10;

/// Which first-level weights accompany the symbolic `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivMode {
    /// `d = r`, i.e. `L_r = L_{r,r}`.
    Coupled,
    /// `d = (1/q, .., 1/q)`, i.e. `L_{q,r}`.
    UniformFirst,
}

/// `r_c` as a polynomial in the free variables.
fn weight_polys(q: usize) -> Vec<SparsePoly> {
    let vars = q - 1;
    let mut out: Vec<SparsePoly> = (0..vars).map(|i| SparsePoly::var(vars, i)).collect();
    let last = out.iter().fold(SparsePoly::one(vars), |acc, v| &acc - v);
    out.push(last);
    out
}

/// `L_{d,r}(x)` as an exact polynomial in `r_0 .. r_{q-2}`, `d` given by `mode`.
pub fn cdf_polynomial(cfg: &SystemConfig, mode: DerivMode, x: &QAdicPoint) -> Result<SparsePoly> {
    let q = cfg.q();
    if x.q() != q {
        return Err(Error::BaseMismatch {
            expected: q,
            got: x.q(),
        });
    }
    if x.level() > MAX_POLY_LEVEL {
        return Err(Error::LevelCapExceeded {
            q,
            level: x.level(),
        });
    }
    let vars = q - 1;
    if x.is_one() {
        return Ok(SparsePoly::one(vars));
    }
    let r = weight_polys(q);
    let first: Vec<SparsePoly> = match mode {
        DerivMode::Coupled => r.clone(),
        DerivMode::UniformFirst => {
            let c = Rat::new(1.into(), BigInt::from(q));
            vec![SparsePoly::constant(vars, c); q]
        }
    };

    let mut total = SparsePoly::zero(vars);
    let mut prefix = SparsePoly::one(vars);
    let mut prev: Option<usize> = None;
    for a in x.digits() {
        let weight = |c: usize| match prev {
            None => first[c].clone(),
            Some(p) => &prefix * &r[cfg.apply_power(p as u64, c)],
        };
        for c in 0..a {
            total = &total + &weight(c);
        }
        prefix = weight(a);
        prev = Some(a);
    }
    Ok(total)
}

/// `d^{|u|} L / dr^u` evaluated at `r`, from the polynomial form.
pub fn mixed_partial_oracle(
    cfg: &SystemConfig,
    mode: DerivMode,
    x: &QAdicPoint,
    u: &MultiIndex,
    r: &WeightVec,
) -> Result<Rat> {
    check(cfg, u, r)?;
    let p = cdf_polynomial(cfg, mode, x)?;
    Ok(p.mixed_derivative(u.orders()).evaluate(r.free()))
}

fn check(cfg: &SystemConfig, u: &MultiIndex, r: &WeightVec) -> Result<()> {
    if u.len() + 1 != cfg.q() {
        return Err(Error::MultiIndexLength {
            expected: cfg.q() - 1,
            got: u.len(),
        });
    }
    if r.len() != cfg.q() {
        return Err(Error::BaseMismatch {
            expected: cfg.q(),
            got: r.len(),
        });
    }
    if u.total() == 0 {
        return Err(Error::EmptyMultiIndex);
    }
    Ok(())
}

fn indicator(b: bool) -> Rat {
    if b {
        Rat::from_integer(1.into())
    } else {
        Rat::zero()
    }
}

/// Assembles the right-hand side given an evaluator for the Takagi terms
/// `v -> q T_{q,r,v}(x)` (or a truncation of it).
fn assemble(
    cfg: &SystemConfig,
    r: &WeightVec,
    u: &MultiIndex,
    x: &QAdicPoint,
    mut takagi_q: impl FnMut(&MultiIndex) -> Result<Rat>,
) -> Result<Rat> {
    check(cfg, u, r)?;
    let q = cfg.q();
    let cell = locate(x, 1).index() as usize;
    let jump = |j: usize| indicator(cell == j) - indicator(cell == q - 1);
    let slope = &r[cell];

    if let Some(l) = u.as_unit() {
        let mc = MeasureContext::uniform_first(cfg.clone(), r.clone())?;
        let drift = cdf(&mc, x) - x.to_rat();
        let lebesgue = lebesgue_level1_integral(q, l, x)? - lebesgue_level1_integral(q, q - 1, x)?;
        return Ok(jump(l) * drift + slope * takagi_q(u)? + lebesgue);
    }

    let mut total = Rat::zero();
    for j in u.support() {
        let ind = jump(j);
        if !ind.is_zero() {
            total += ind * takagi_q(&u.minus_unit(j).expect("support"))?;
        }
    }
    Ok(total + slope * takagi_q(u)?)
}

/// The Takagi-function expression for `(1 / (q u!)) d^{|u|} L_r(x) / dr^u`.
pub fn theorem_rhs(
    cfg: &SystemConfig,
    r: &WeightVec,
    u: &MultiIndex,
    x: &QAdicPoint,
) -> Result<Rat> {
    let mc = MeasureContext::uniform_first(cfg.clone(), r.clone())?;
    let q = Rat::from_integer(BigInt::from(cfg.q()));
    assemble(cfg, r, u, x, |v| Ok(&q * takagi_t(&mc, v, x)?))
}

/// The same expression with each Takagi term replaced by its shift sum truncated
/// at `k - 2`, i.e. `q D_{q,r,v,k-2}(x)` from the direct form. Equal to
/// [`theorem_rhs`] once `k >= level(x) + 2`.
pub fn hlsrq_partial(
    cfg: &SystemConfig,
    r: &WeightVec,
    u: &MultiIndex,
    x: &QAdicPoint,
    k: u32,
) -> Result<Rat> {
    let mc = MeasureContext::uniform_first(cfg.clone(), r.clone())?;
    let q = Rat::from_integer(BigInt::from(cfg.q()));
    assemble(cfg, r, u, x, |v| {
        if k < 2 {
            return Ok(Rat::zero());
        }
        Ok(&q * DirectTruncation::new(&mc, v, k - 2)?.at(x))
    })
}

/// Both sides of the change of first-level weights
/// `L_s(x) = q s_{n(x)} (L_{q,s}(x) - x) + q sum_n s_n int_0^x 1_{I_1(n)} dLeb`.
pub fn basechange_eval(cfg: &SystemConfig, s: &WeightVec, x: &QAdicPoint) -> Result<(Rat, Rat)> {
    let q = cfg.q();
    let qr = Rat::from_integer(BigInt::from(q));
    let lhs = cdf(&MeasureContext::coupled(cfg.clone(), s.clone())?, x);
    let uni = MeasureContext::uniform_first(cfg.clone(), s.clone())?;
    let cell = locate(x, 1).index() as usize;
    let mut rhs = &qr * &s[cell] * (cdf(&uni, x) - x.to_rat());
    for n in 0..q {
        rhs += &qr * &s[n] * lebesgue_level1_integral(q, n, x)?;
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;
    use crate::rational::{int, rat};

    fn u2() -> SystemConfig {
        validate_config(2, &[0, 1]).unwrap()
    }

    fn pt(q: usize, m: u64, k: u32) -> QAdicPoint {
        QAdicPoint::new(q, m, k).unwrap()
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.len() + 1, v.to_vec()).unwrap()
    }

    #[test]
    fn polynomial_forms() {
        let cfg = u2();
        let p = cdf_polynomial(&cfg, DerivMode::Coupled, &pt(2, 1, 1)).unwrap();
        assert_eq!(p, SparsePoly::var(1, 0));
        let p = cdf_polynomial(&cfg, DerivMode::Coupled, &pt(2, 1, 2)).unwrap();
        assert_eq!(p, &SparsePoly::var(1, 0) * &SparsePoly::var(1, 0));
        let p = cdf_polynomial(&cfg, DerivMode::UniformFirst, &QAdicPoint::one(2)).unwrap();
        assert_eq!(p, SparsePoly::one(1));
        let deep = QAdicPoint::new(2, 1, 11).unwrap();
        assert!(matches!(
            cdf_polynomial(&cfg, DerivMode::Coupled, &deep),
            Err(Error::LevelCapExceeded { .. })
        ));
    }

    #[test]
    fn oracle_values() {
        let cfg = u2();
        let r = WeightVec::uniform(2);
        let m = DerivMode::Coupled;
        assert_eq!(
            mixed_partial_oracle(&cfg, m, &pt(2, 1, 1), &mi(&[1]), &r).unwrap(),
            int(1)
        );
        assert_eq!(
            mixed_partial_oracle(&cfg, m, &pt(2, 1, 3), &mi(&[1]), &r).unwrap(),
            rat(3, 4)
        );
        assert_eq!(
            mixed_partial_oracle(&cfg, m, &pt(2, 1, 2), &mi(&[2]), &r).unwrap(),
            int(2)
        );
        assert_eq!(
            mixed_partial_oracle(&cfg, m, &pt(2, 1, 2), &mi(&[0]), &r),
            Err(Error::EmptyMultiIndex)
        );
    }

    #[test]
    fn rhs_values() {
        let cfg = u2();
        let r = WeightVec::uniform(2);
        assert_eq!(
            theorem_rhs(&cfg, &r, &mi(&[1]), &pt(2, 1, 2)).unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            theorem_rhs(&cfg, &r, &mi(&[1]), &QAdicPoint::one(2)).unwrap(),
            int(0)
        );
        assert_eq!(
            theorem_rhs(&cfg, &r, &mi(&[2]), &pt(2, 1, 2)).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn partial_sums_stabilize() {
        let cfg = u2();
        let r = WeightVec::uniform(2);
        assert_eq!(
            hlsrq_partial(&cfg, &r, &mi(&[1]), &pt(2, 1, 2), 4).unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            hlsrq_partial(&cfg, &r, &mi(&[2]), &pt(2, 1, 2), 5).unwrap(),
            rat(1, 2)
        );
        for k in 0..5 {
            assert_eq!(
                hlsrq_partial(&cfg, &r, &mi(&[1]), &QAdicPoint::one(2), k).unwrap(),
                int(0)
            );
        }
    }

    #[test]
    fn base_change_sides() {
        let cfg = validate_config(2, &[1, 0]).unwrap();
        let s = WeightVec::new(vec![rat(1, 3), rat(2, 3)]).unwrap();
        let (l, r) = basechange_eval(&cfg, &s, &pt(2, 3, 2)).unwrap();
        assert_eq!(l, r);
        let (l, r) = basechange_eval(&cfg, &s, &QAdicPoint::one(2)).unwrap();
        assert_eq!((l, r), (int(1), int(1)));
        let x = pt(2, 5, 3);
        let (l, r) = basechange_eval(&cfg, &WeightVec::uniform(2), &x).unwrap();
        assert_eq!((l.clone(), r), (x.to_rat(), x.to_rat()));
    }
}
