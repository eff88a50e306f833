//! The permutation-twisted measure `mu_{d,r}`, its distribution function and
//! integration of step functions against it.
//!
//! Cell masses follow the recursion
//! `mu(I_k(q j + l)) = mu(I_{k-1}(j)) * r[sigma^j(l)]` with `mu(I_1(n)) = d[n]`,
//! which unrolls to `d[n_{k-1}] * prod r[sigma^{n_{i+1}}(n_i)]` since `sigma^q = id`.

use num_traits::{One, Zero};

use crate::config::{SystemConfig, WeightVec};
use crate::error::{Error, Result};
use crate::qadic::{locate, QAdicInterval, QAdicPoint};
use crate::rational::Rat;
use crate::stepfn::{cells, StepFunction};

/// The pair of weight vectors `(d, r)` on a base/permutation context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureContext {
    pub cfg: SystemConfig,
    pub d: WeightVec,
    pub r: WeightVec,
}

impl MeasureContext {
    pub fn new(cfg: SystemConfig, d: WeightVec, r: WeightVec) -> Result<Self> {
        for w in [&d, &r] {
            if w.len() != cfg.q() {
                return Err(Error::BaseMismatch {
                    expected: cfg.q(),
                    got: w.len(),
                });
            }
        }
        Ok(MeasureContext { cfg, d, r })
    }

    /// `mu_{r,r}`.
    pub fn coupled(cfg: SystemConfig, r: WeightVec) -> Result<Self> {
        MeasureContext::new(cfg, r.clone(), r)
    }

    /// `mu_{(1/q,...,1/q), r}`.
    pub fn uniform_first(cfg: SystemConfig, r: WeightVec) -> Result<Self> {
        let d = WeightVec::uniform(cfg.q());
        MeasureContext::new(cfg, d, r)
    }

    /// Same `r`, first-level weights replaced.
    pub fn with_first(&self, d: WeightVec) -> MeasureContext {
        MeasureContext {
            cfg: self.cfg.clone(),
            d,
            r: self.r.clone(),
        }
    }

    pub fn q(&self) -> usize {
        self.cfg.q()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q != self.q() {
            return Err(Error::BaseMismatch {
                expected: self.q(),
                got: q,
            });
        }
        Ok(())
    }
}

/// Mass of a single cell via the closed product form.
pub fn interval_measure(mc: &MeasureContext, iv: &QAdicInterval) -> Rat {
    let w = iv.digits();
    let Some((&first, _)) = w.split_first() else {
        return Rat::one();
    };
    let mut m = mc.d[first].clone();
    for pair in w.windows(2) {
        m *= &mc.r[mc.cfg.apply_power(pair[0] as u64, pair[1])];
    }
    m
}

/// Masses of every level-`k` cell, in index order.
pub fn level_masses(cfg: &SystemConfig, d: &WeightVec, r: &WeightVec, k: u32) -> Result<Vec<Rat>> {
    let q = cfg.q();
    cells(q, k)?;
    let mut masses = vec![Rat::one()];
    for level in 0..k {
        let mut next = Vec::with_capacity(masses.len() * q);
        for (j, mj) in masses.iter().enumerate() {
            for l in 0..q {
                let w = if level == 0 {
                    &d[l]
                } else {
                    &r[cfg.apply_power(j as u64, l)]
                };
                next.push(mj * w);
            }
        }
        masses = next;
    }
    Ok(masses)
}

/// `L_{d,r}(x) = mu_{d,r}([0, x])`.
///
/// Uses the prefix decomposition
/// `[0, x) = U_i U_{c < a_i} I_i(a_1 .. a_{i-1} c)`, so the cost is `O(q K)`.
/// Points carry no mass, so the closed endpoint does not matter.
pub fn cdf(mc: &MeasureContext, x: &QAdicPoint) -> Rat {
    if x.is_one() {
        return Rat::one();
    }
    let mut total = Rat::zero();
    let mut prefix = Rat::one();
    let mut prev: Option<usize> = None;
    for a in x.digits() {
        let weight = |c: usize| match prev {
            None => mc.d[c].clone(),
            Some(p) => &prefix * &mc.r[mc.cfg.apply_power(p as u64, c)],
        };
        for c in 0..a {
            total += weight(c);
        }
        prefix = weight(a);
        prev = Some(a);
    }
    total
}

/// `x -> int_0^x f dmu` for one step function, with prefix sums over its cells so
/// that many points can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct StepIntegral {
    mc: MeasureContext,
    f: StepFunction,
    /// `prefix[n] = sum_{j < n} f_j mu(I_m(j))`
    prefix: Vec<Rat>,
}

impl StepIntegral {
    pub fn new(mc: &MeasureContext, f: &StepFunction) -> Result<Self> {
        mc.check(f.q())?;
        let masses = level_masses(&mc.cfg, &mc.d, &mc.r, f.level())?;
        let mut prefix = Vec::with_capacity(masses.len() + 1);
        let mut acc = Rat::zero();
        prefix.push(acc.clone());
        for (v, m) in f.values().iter().zip(&masses) {
            if !v.is_zero() {
                acc += v * m;
            }
            prefix.push(acc.clone());
        }
        Ok(StepIntegral {
            mc: mc.clone(),
            f: f.clone(),
            prefix,
        })
    }

    /// Integral over the whole interval.
    pub fn total(&self) -> &Rat {
        self.prefix.last().expect("non-empty")
    }

    pub fn function(&self) -> &StepFunction {
        &self.f
    }

    pub fn at(&self, x: &QAdicPoint) -> Rat {
        if x.is_one() {
            return self.total().clone();
        }
        let m = self.f.level();
        let cell = locate(x, m);
        let n = cell.index() as usize;
        let mut out = self.prefix[n].clone();
        if x.level() > m {
            // x lies strictly inside I_m(n), where f is constant
            let v = self.f.value(n);
            if !v.is_zero() {
                let partial = cdf(&self.mc, x) - cdf(&self.mc, &cell.left());
                out += v * partial;
            }
        }
        out
    }
}

/// `int_0^x f dmu_{d,r}`.
pub fn integrate_step(mc: &MeasureContext, f: &StepFunction, x: &QAdicPoint) -> Result<Rat> {
    mc.check(x.q())?;
    Ok(StepIntegral::new(mc, f)?.at(x))
}

/// `E(f; I_k(n)) = int_{I_k(n)} f dmu_{d,r}`.
pub fn expectation(mc: &MeasureContext, f: &StepFunction, iv: &QAdicInterval) -> Result<Rat> {
    mc.check(f.q())?;
    mc.check(iv.q())?;
    let (m, k) = (f.level(), iv.level());
    if k >= m {
        return Ok(f.value_on(k, iv.index()) * interval_measure(mc, iv));
    }
    let masses = level_masses(&mc.cfg, &mc.d, &mc.r, m)?;
    let span = (f.values().len() / cells(mc.q(), k)?) as u64;
    let lo = (iv.index() * span) as usize;
    let hi = lo + span as usize;
    Ok(f.values()[lo..hi]
        .iter()
        .zip(&masses[lo..hi])
        .filter(|(v, _)| !v.is_zero())
        .map(|(v, m)| v * m)
        .sum())
}

/// `E(f | F_k)`: on each `I_k(n)` the value `E(f; I_k(n)) / mu(I_k(n))`.
pub fn cond_expect(mc: &MeasureContext, f: &StepFunction, k: u32) -> Result<StepFunction> {
    mc.check(f.q())?;
    if k >= f.level() {
        return f.relevel(k);
    }
    let masses = level_masses(&mc.cfg, &mc.d, &mc.r, f.level())?;
    let span = f.values().len() / cells(mc.q(), k)?;
    let values = f
        .values()
        .chunks(span)
        .zip(masses.chunks(span))
        .map(|(vs, ms)| {
            let num: Rat = vs.iter().zip(ms).map(|(v, m)| v * m).sum();
            let den: Rat = ms.iter().sum();
            num / den
        })
        .collect();
    StepFunction::new(mc.q(), k, values)
}

/// Lebesgue integral `int_0^x 1_{I_1(n)} = clamp(x - n/q, 0, 1/q)`.
pub fn lebesgue_level1_integral(q: usize, n: usize, x: &QAdicPoint) -> Result<Rat> {
    if n >= q {
        return Err(Error::DigitOutOfRange { digit: n, q });
    }
    let width = Rat::new(1.into(), (q as i64).into());
    let left = Rat::new((n as i64).into(), (q as i64).into());
    let t = x.to_rat() - left;
    Ok(if t <= Rat::zero() {
        Rat::zero()
    } else if t >= width {
        width
    } else {
        t
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;
    use crate::rational::{int, rat};
    use crate::stepfn::{base_diff, phi_l};

    fn gray() -> MeasureContext {
        MeasureContext::new(
            validate_config(2, &[1, 0]).unwrap(),
            WeightVec::new(vec![rat(1, 3), rat(2, 3)]).unwrap(),
            WeightVec::new(vec![rat(1, 4), rat(3, 4)]).unwrap(),
        )
        .unwrap()
    }

    fn u2() -> MeasureContext {
        MeasureContext::coupled(validate_config(2, &[0, 1]).unwrap(), WeightVec::uniform(2))
            .unwrap()
    }

    fn iv(word: &[usize]) -> QAdicInterval {
        QAdicInterval::from_digits(2, word).unwrap()
    }

    fn pt(m: u64, k: u32) -> QAdicPoint {
        QAdicPoint::new(2, m, k).unwrap()
    }

    /// Definition-level recursion on the cell index, independent of the product form.
    fn mass_by_recursion(mc: &MeasureContext, k: u32, n: u64) -> Rat {
        let q = mc.q() as u64;
        match k {
            0 => int(1),
            1 => mc.d[n as usize].clone(),
            _ => {
                let (j, l) = (n / q, (n % q) as usize);
                mass_by_recursion(mc, k - 1, j) * &mc.r[mc.cfg.apply_power(j, l)]
            }
        }
    }

    #[test]
    fn cell_masses_match_recursion() {
        let mc = gray();
        assert_eq!(interval_measure(&mc, &QAdicInterval::whole(2)), int(1));
        assert_eq!(interval_measure(&mc, &iv(&[1, 0])), rat(1, 2));
        assert_eq!(interval_measure(&mc, &iv(&[1, 1, 0])), rat(1, 8));
        for k in 0..6 {
            let table = level_masses(&mc.cfg, &mc.d, &mc.r, k).unwrap();
            for (n, m) in table.iter().enumerate() {
                let cell = QAdicInterval::new(2, k, n as u64).unwrap();
                assert_eq!(interval_measure(&mc, &cell), *m);
                assert_eq!(mass_by_recursion(&mc, k, n as u64), *m);
            }
        }
    }

    #[test]
    fn distribution_function_values() {
        let mc = gray();
        assert_eq!(cdf(&mc, &pt(3, 2)), rat(5, 6));
        assert_eq!(cdf(&mc, &QAdicPoint::one(2)), int(1));
        assert_eq!(cdf(&mc, &QAdicPoint::zero(2)), int(0));
        let u = u2();
        for x in QAdicPoint::grid(2, 5) {
            assert_eq!(cdf(&u, &x), x.to_rat());
        }
    }

    #[test]
    fn integrals_of_selector() {
        let mc = gray();
        let phi0 = phi_l(&mc.cfg, 0).unwrap();
        let one = StepFunction::constant(2, int(1));
        assert_eq!(
            integrate_step(&mc, &one, &pt(5, 3)).unwrap(),
            cdf(&mc, &pt(5, 3))
        );
        assert_eq!(
            integrate_step(&mc, &phi0, &QAdicPoint::one(2)).unwrap(),
            rat(1, 4)
        );
        assert_eq!(integrate_step(&mc, &phi0, &pt(1, 1)).unwrap(), rat(1, 12));
        assert_eq!(expectation(&mc, &phi0, &iv(&[1])).unwrap(), rat(1, 6));
        assert_eq!(
            expectation(&mc, &one, &QAdicInterval::whole(2)).unwrap(),
            int(1)
        );
    }

    #[test]
    fn integral_inside_a_cell() {
        // level-2 function integrated to a level-4 point: partial cell handled exactly
        let mc = gray();
        let phi0 = phi_l(&mc.cfg, 0).unwrap();
        let fine = phi0.relevel(4).unwrap();
        for x in QAdicPoint::grid(2, 4) {
            assert_eq!(
                integrate_step(&mc, &phi0, &x).unwrap(),
                integrate_step(&mc, &fine, &x).unwrap()
            );
        }
    }

    #[test]
    fn conditional_expectations() {
        let mc = gray();
        let phi0 = phi_l(&mc.cfg, 0).unwrap();
        let ce = cond_expect(&mc, &phi0, 1).unwrap();
        assert_eq!(ce.values(), &[rat(1, 4), rat(1, 4)]);
        let bd = base_diff(&mc.cfg, &mc.r, 0).unwrap();
        assert!(cond_expect(&mc, &bd, 1).unwrap().is_zero());
        let fixed = cond_expect(&mc, &phi0, 3).unwrap();
        assert!(fixed.same_function(&phi0));

        let u = u2();
        let bd = base_diff(&u.cfg, &u.r, 0).unwrap();
        assert_eq!(expectation(&u, &bd, &iv(&[0])).unwrap(), int(0));
    }

    #[test]
    fn lebesgue_cells() {
        assert_eq!(
            lebesgue_level1_integral(2, 0, &pt(3, 2)).unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            lebesgue_level1_integral(2, 1, &pt(3, 2)).unwrap(),
            rat(1, 4)
        );
        assert_eq!(lebesgue_level1_integral(2, 1, &pt(1, 2)).unwrap(), int(0));
        assert!(lebesgue_level1_integral(2, 2, &pt(1, 2)).is_err());
    }
}
