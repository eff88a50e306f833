//! Seeded randomized checks of every identity the evaluators rely on.
//!
//! Each suite runs over the four reference configurations (q = 2 and 3, with the
//! identity and with a non-trivial `sigma`) and `trials` random weight draws per
//! configuration. Instances are seeded individually from `(seed, suite,
//! configuration, trial)`, evaluated in parallel, and tallied in instance order,
//! so a report depends only on its inputs.

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{permuted_weights, validate_config, SystemConfig, WeightVec};
use crate::derivs::{
    basechange_eval, cdf_polynomial, hlsrq_partial, mixed_partial_oracle, theorem_rhs, DerivMode,
};
use crate::error::Result;
use crate::measure::{
    cdf, cond_expect, expectation, interval_measure, level_masses, MeasureContext, StepIntegral,
};
use crate::qadic::{locate, phi_apply, MultiIndex, QAdicInterval, QAdicPoint};
use crate::rational::Rat;
use crate::stepfn::{base_diff, compose_phi, phi_l, w_fn, z_fn, StepFunction};
use crate::takagi::{
    base_series_terms, enumerate_psi, sup_bound, tail_bound_base, takagi_d_recursive, takagi_t,
    DirectTruncation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    MeasureAxioms,
    Substitution,
    ZeroExpectation,
    RadonNikodym,
    TakagiEquiv,
    Theorem,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::MeasureAxioms,
        Suite::Substitution,
        Suite::ZeroExpectation,
        Suite::RadonNikodym,
        Suite::TakagiEquiv,
        Suite::Theorem,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MeasureAxioms => "measure-axioms",
            Suite::Substitution => "substitution",
            Suite::ZeroExpectation => "zero-expectation",
            Suite::RadonNikodym => "radon-nikodym",
            Suite::TakagiEquiv => "takagi-equiv",
            Suite::Theorem => "theorem",
            Suite::Bounds => "bounds",
        }
    }

    /// Parses a suite name; `"all"` expands to every suite.
    pub fn parse_selection(s: &str) -> Option<Vec<Suite>> {
        if s == "all" {
            return Some(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .map(|x| vec![x])
    }

    fn salt(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Deliberate defects for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// The theorem suite evaluates its right-hand side with `sigma^2` in place of `sigma`.
    CorruptSigmaPower,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            trials: 2,
            fault: None,
        }
    }
}

/// Pass/fail tally for one suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: u64,
    pub failures: u64,
    pub first_counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Default)]
struct Tally {
    checks: u64,
    failures: u64,
    first: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(detail());
            }
        }
    }

    fn error(&mut self, context: &str, e: crate::error::Error) {
        self.check(false, || format!("{context}: evaluation error: {e}"));
    }

    fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.failures += other.failures;
        if self.first.is_none() {
            self.first = other.first;
        }
    }
}

/// The reference configurations: q = 2 with id and swap, q = 3 with id and a 3-cycle.
pub fn standard_configs() -> Vec<SystemConfig> {
    vec![
        validate_config(2, &[0, 1]).unwrap(),
        validate_config(2, &[1, 0]).unwrap(),
        validate_config(3, &[0, 1, 2]).unwrap(),
        validate_config(3, &[1, 2, 0]).unwrap(),
    ]
}

/// Deterministic per-instance generator.
pub fn instance_rng(seed: u64, salt: u64, cfg_index: usize, trial: usize) -> ChaCha8Rng {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [salt, cfg_index as u64, trial as u64] {
        h = (h ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// A random probability vector of length `q` with common denominator at most `max_den`.
pub fn random_weights(rng: &mut impl Rng, q: usize, max_den: u32) -> WeightVec {
    let den = rng.gen_range(q as u32..=max_den.max(q as u32));
    let mut cuts: Vec<u32> = sample(rng, den as usize - 1, q - 1)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(q);
    let mut last = 0;
    for c in cuts.into_iter().chain(std::iter::once(den)) {
        parts.push(Rat::new(BigInt::from(c - last), BigInt::from(den)));
        last = c;
    }
    WeightVec::new(parts).expect("positive parts summing to one")
}

fn random_step(rng: &mut impl Rng, q: usize, level: u32) -> StepFunction {
    let n = q.pow(level);
    let values = (0..n)
        .map(|_| {
            Rat::new(
                BigInt::from(rng.gen_range(-5i64..=5)),
                BigInt::from(rng.gen_range(1i64..=6)),
            )
        })
        .collect();
    StepFunction::new(q, level, values).expect("small level")
}

/// The classical Takagi function `sum_n 2^{-n} dist(2^n x, Z)`, finite at dyadic `x`.
pub fn classical_takagi(x: &Rat) -> Rat {
    let mut total = Rat::zero();
    let mut scale = Rat::one();
    let mut y = x.clone();
    let half = Rat::new(1.into(), 2.into());
    loop {
        let frac = &y - y.floor();
        if frac.is_zero() {
            break;
        }
        let dist = if frac <= half {
            frac.clone()
        } else {
            Rat::one() - &frac
        };
        total += &scale * dist;
        scale *= &half;
        y *= Rat::from_integer(2.into());
    }
    total
}

/// Runs the selected suites.
pub fn run(suites: &[Suite], opts: &VerifyOptions) -> Vec<SuiteReport> {
    suites.iter().map(|&s| run_suite(s, opts)).collect()
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteReport {
    let configs = standard_configs();
    let instances: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..opts.trials).map(move |t| (c, t)))
        .collect();
    let tallies: Vec<Tally> = instances
        .par_iter()
        .map(|&(c, t)| {
            let mut rng = instance_rng(opts.seed, suite.salt(), c, t);
            let mut tally = Tally::default();
            let cfg = &configs[c];
            match suite {
                Suite::MeasureAxioms => measure_axioms(cfg, &mut rng, &mut tally),
                Suite::Substitution => substitution(cfg, &mut rng, &mut tally),
                Suite::ZeroExpectation => zero_expectation(cfg, &mut rng, &mut tally),
                Suite::RadonNikodym => radon_nikodym(cfg, &mut rng, &mut tally),
                Suite::TakagiEquiv => takagi_equiv(cfg, &mut rng, &mut tally),
                Suite::Theorem => theorem(cfg, &mut rng, &mut tally, opts.fault, t == 0),
                Suite::Bounds => bounds(cfg, &mut rng, &mut tally),
            }
            if let Some(first) = tally.first.as_mut() {
                *first = format!("sigma={:?} trial={t}: {first}", cfg.sigma());
            }
            tally
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total.merge(t);
    }
    SuiteReport {
        suite,
        checks: total.checks,
        failures: total.failures,
        first_counterexample: total.first,
    }
}

/// Plain-text report, one line per suite plus an overall verdict.
pub fn render_report(reports: &[SuiteReport], opts: &VerifyOptions) -> String {
    let mut out = String::new();
    writeln!(out, "seed {} trials {}", opts.seed, opts.trials).unwrap();
    for r in reports {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{verdict} {:<17} checks={} failures={}",
            r.suite.name(),
            r.checks,
            r.failures
        )
        .unwrap();
        if let Some(c) = &r.first_counterexample {
            writeln!(out, "  first counterexample: {c}").unwrap();
        }
    }
    let ok = reports.iter().all(SuiteReport::passed);
    writeln!(out, "overall: {}", if ok { "PASS" } else { "FAIL" }).unwrap();
    out
}

fn all_cells(q: usize, k: u32) -> impl Iterator<Item = QAdicInterval> {
    let n = (q as u64).pow(k);
    (0..n).map(move |i| QAdicInterval::new(q, k, i).unwrap())
}

fn measure_axioms(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let d = random_weights(rng, q, 64);
    let r = random_weights(rng, q, 64);
    let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();

    for k in 0..=4 {
        for iv in all_cells(q, k) {
            let children: Rat = iv.children().map(|c| interval_measure(&mc, &c)).sum();
            t.check(interval_measure(&mc, &iv) == children, || {
                format!("additivity at {iv}, d={d}, r={r}")
            });
        }
    }
    for k in 0..=5 {
        let total: Rat = all_cells(q, k).map(|c| interval_measure(&mc, &c)).sum();
        t.check(total.is_one(), || {
            format!("normalization at level {k}, d={d}, r={r}")
        });
    }

    // factorization through the first i digits
    for i in 1..=3u32 {
        for k in 0..=(6 - i).min(3) {
            for iv in all_cells(q, i + k) {
                let w = iv.digits();
                let (head, tail) = w.split_at(i as usize);
                let head_iv = QAdicInterval::from_digits(q, head).unwrap();
                let tail_iv = QAdicInterval::from_digits(q, tail).unwrap();
                let b0 = *head.last().unwrap() as u64;
                let shifted = mc.with_first(permuted_weights(cfg, &r, b0));
                let rhs = interval_measure(&mc, &head_iv) * interval_measure(&shifted, &tail_iv);
                t.check(interval_measure(&mc, &iv) == rhs, || {
                    format!("factorization at {iv} (i={i}), d={d}, r={r}")
                });
            }
        }
    }

    // sigma = id: plain multinomial product d_{n_{k-1}} prod r_{n_i}
    let plain =
        MeasureContext::new(SystemConfig::identity(q).unwrap(), d.clone(), r.clone()).unwrap();
    for k in 1..=4 {
        for iv in all_cells(q, k) {
            let w = iv.digits();
            let direct = w[1..].iter().fold(d[w[0]].clone(), |acc, &c| acc * &r[c]);
            t.check(interval_measure(&plain, &iv) == direct, || {
                format!("multinomial reduction at {iv}, d={d}, r={r}")
            });
        }
    }

    let uniform = MeasureContext::coupled(cfg.clone(), WeightVec::uniform(q)).unwrap();
    for x in QAdicPoint::grid(q, 4) {
        t.check(cdf(&uniform, &x) == x.to_rat(), || {
            format!("uniform L(x) = x at {x}")
        });
        let n = locate(&x, 4).index();
        let mut brute: Rat = all_cells(q, 4)
            .take_while(|c| c.index() < n)
            .map(|c| interval_measure(&mc, &c))
            .sum();
        if x.is_one() {
            brute = Rat::one();
        }
        t.check(cdf(&mc, &x) == brute, || {
            format!("cdf by enumeration at {x}, d={d}, r={r}")
        });
    }

    for l in 0..q {
        let phi = phi_l(cfg, l).unwrap();
        let e = expectation(&mc, &phi, &QAdicInterval::whole(q)).unwrap();
        t.check(e == r[l], || format!("E(Phi_{l}) = r_{l}, d={d}, r={r}"));
    }
}

fn substitution(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let d = random_weights(rng, q, 64);
    let r = random_weights(rng, q, 64);
    let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();
    let whole = QAdicInterval::whole(q);

    for x in QAdicPoint::grid(q, 4) {
        for i in 0..=4 {
            for j in 0..=4 {
                t.check(
                    phi_apply(&phi_apply(&x, i), j) == phi_apply(&x, i + j),
                    || format!("phi^{i} o phi^{j} at {x}"),
                );
            }
        }
    }

    for m in 1..=3u32 {
        let f = random_step(rng, q, m);
        let g = random_step(rng, q, m);
        for i in 1..=3u32 {
            let fi = compose_phi(&f, i).unwrap();
            let fg = compose_phi(&f.mul(&g).unwrap(), i).unwrap();
            let prod = fi.mul(&compose_phi(&g, i).unwrap()).unwrap();
            t.check(fg == prod, || {
                format!("composition homomorphism, m={m}, i={i}")
            });

            let int_g = StepIntegral::new(&mc, &fi).unwrap();
            for a in all_cells(q, i) {
                let a0 = *a.digits().last().unwrap() as u64;
                let shifted = mc.with_first(permuted_weights(cfg, &r, a0));
                let lhs = expectation(&mc, &fi, &a).unwrap();
                let rhs = interval_measure(&mc, &a) * expectation(&shifted, &f, &whole).unwrap();
                t.check(lhs == rhs, || {
                    format!("E(f o phi^{i}; {a}) substitution, d={d}, r={r}")
                });
            }
            for x in QAdicPoint::grid(q, i + 2) {
                let a = locate(&x, i);
                let a0 = *a.digits().last().unwrap() as u64;
                let shifted = mc.with_first(permuted_weights(cfg, &r, a0));
                let lhs = int_g.at(&x) - int_g.at(&a.left());
                let rhs = interval_measure(&mc, &a)
                    * StepIntegral::new(&shifted, &f)
                        .unwrap()
                        .at(&phi_apply(&x, i));
                t.check(lhs == rhs, || {
                    format!("[0,x]-relative substitution, x={x}, i={i}, d={d}, r={r}")
                });
            }
        }
    }

    // constancy: E(g | F_k) = 0 and h in F_k give int_0^x h g = h(x) int_0^x g
    for k in 1..=3u32 {
        let f = random_step(rng, q, k + 2);
        let g = f.sub(&cond_expect(&mc, &f, k).unwrap()).unwrap();
        t.check(cond_expect(&mc, &g, k).unwrap().is_zero(), || {
            format!("centering at level {k}")
        });
        let h = random_step(rng, q, k);
        let hg = StepIntegral::new(&mc, &h.mul(&g).unwrap()).unwrap();
        let ig = StepIntegral::new(&mc, &g).unwrap();
        for x in QAdicPoint::grid(q, k + 3) {
            t.check(hg.at(&x) == h.eval(&x) * ig.at(&x), || {
                format!("constancy lemma at x={x}, k={k}, d={d}, r={r}")
            });
        }
    }
}

/// Finest level reached: factors B_l o phi^beta with beta <= 5 live on level beta + 2.
const ZERO_EXP_LEVEL: u32 = 7;

fn zero_expectation(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let d = random_weights(rng, q, 64);
    let r = random_weights(rng, q, 64);
    let masses = level_masses(cfg, &d, &r, ZERO_EXP_LEVEL).unwrap();
    // factors[l][beta] tabulated on the finest level
    let factors: Vec<Vec<Vec<Rat>>> = (0..q - 1)
        .map(|l| {
            let b = base_diff(cfg, &r, l).unwrap();
            (0..=5)
                .map(|beta| {
                    let f = compose_phi(&b, beta)
                        .unwrap()
                        .relevel(ZERO_EXP_LEVEL)
                        .unwrap();
                    (0..masses.len()).map(|n| f.value(n).clone()).collect()
                })
                .collect()
        })
        .collect();

    // Walk increasing beta sequences of length <= 3 with every choice of factor index,
    // carrying f * mu cell by cell so each prefix is multiplied once.
    struct Walk<'a> {
        q: usize,
        factors: &'a [Vec<Vec<Rat>>],
        d: &'a WeightVec,
        r: &'a WeightVec,
    }
    impl Walk<'_> {
        fn visit(
            &self,
            weighted: &[Rat],
            betas: &mut Vec<u32>,
            psi: &mut Vec<usize>,
            t: &mut Tally,
        ) {
            if !betas.is_empty() {
                self.check(weighted, betas, psi, t);
            }
            if betas.len() == 3 {
                return;
            }
            let start = betas.last().map_or(0, |b| b + 1);
            for beta in start..=5 {
                for (l, row) in self.factors.iter().enumerate() {
                    let next: Vec<Rat> = weighted
                        .iter()
                        .zip(&row[beta as usize])
                        .map(|(w, f)| w * f)
                        .collect();
                    betas.push(beta);
                    psi.push(l);
                    self.visit(&next, betas, psi, t);
                    betas.pop();
                    psi.pop();
                }
            }
        }

        fn check(&self, weighted: &[Rat], betas: &[u32], psi: &[usize], t: &mut Tally) {
            let kind = if betas.len() == 1 {
                "single"
            } else {
                "product"
            };
            let top = 4u32.min(betas[0] + 1);
            let mut sums = weighted.to_vec();
            let mut level = ZERO_EXP_LEVEL;
            while level > 0 {
                sums = sums.chunks(self.q).map(|c| c.iter().sum()).collect();
                level -= 1;
                if level > top {
                    continue;
                }
                let bad = sums.iter().position(|v| !v.is_zero());
                t.check(bad.is_none(), || {
                    format!(
                        "{kind} expectation on I_{level}({}) nonzero, betas={betas:?}, psi={psi:?}, d={}, r={}",
                        bad.unwrap(),
                        self.d,
                        self.r
                    )
                });
            }
        }
    }
    let walk = Walk {
        q,
        factors: &factors,
        d: &d,
        r: &r,
    };
    walk.visit(&masses, &mut Vec::new(), &mut Vec::new(), t);
}

fn radon_nikodym(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let [e, s, d, r] = [(); 4].map(|_| random_weights(rng, q, 64));
    let w = w_fn(cfg, &s, &r);
    let mut sum = StepFunction::constant(q, Rat::zero());
    for l in 0..q {
        sum = sum
            .add(&phi_l(cfg, l).unwrap().scale(&(&s[l] / &r[l])))
            .unwrap();
    }
    t.check(sum.same_function(&w), || {
        format!("W = sum (s_l/r_l) Phi_l, s={s}, r={r}")
    });

    let z1 = z_fn(cfg, &e, &s, &d, &r, 1).unwrap();
    for n in 0..q {
        t.check(*z1.value(n) == &e[n] / &d[n], || format!("Z_1 on I_1({n})"));
    }
    let mut prod = StepFunction::constant(q, Rat::one());
    for k in 1..=4u32 {
        prod = prod.mul(&compose_phi(&w, k - 1).unwrap()).unwrap();
        let rhs = prod.mul(&z1).unwrap();
        let lhs = z_fn(cfg, &e, &s, &d, &r, k + 1).unwrap();
        t.check(lhs.same_function(&rhs), || {
            format!("W-product at k={k}, e={e}, s={s}, d={d}, r={r}")
        });
    }

    let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();
    let target = MeasureContext::new(cfg.clone(), e.clone(), s.clone()).unwrap();
    let grid = QAdicPoint::grid(q, 3);
    for k in 0..=5u32 {
        let z = z_fn(cfg, &e, &s, &d, &r, k).unwrap();
        let int = StepIntegral::new(&mc, &z).unwrap();
        for x in grid.iter().filter(|x| x.level() <= k) {
            t.check(int.at(x) == cdf(&target, x), || {
                format!("int_0^x Z_{k} dmu = L_(e,s)(x) at {x}, e={e}, s={s}, d={d}, r={r}")
            });
        }
    }
}

fn takagi_equiv(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let d = random_weights(rng, q, 64);
    let r = random_weights(rng, q, 64);
    let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();
    let grid = QAdicPoint::grid(q, 4);
    for n in 1..=3 {
        for u in MultiIndex::all_of_order(q, n) {
            let psis = enumerate_psi(&u).unwrap();
            t.check(BigInt::from(psis.len()) == u.arrangements(), || {
                format!("psi count for u={u}")
            });
            for k in 0..=5 {
                let direct = match DirectTruncation::new(&mc, &u, k) {
                    Ok(dt) => dt,
                    Err(err) => {
                        t.error(&format!("direct u={u} k={k}"), err);
                        continue;
                    }
                };
                for x in &grid {
                    match takagi_d_recursive(&mc, &u, k, x) {
                        Ok(rec) => t.check(direct.at(x) == rec, || {
                            format!("D direct != recursive, u={u}, k={k}, x={x}, d={d}, r={r}")
                        }),
                        Err(err) => t.error("recursive", err),
                    }
                }
            }
        }
    }
}

fn theorem(
    cfg: &SystemConfig,
    rng: &mut ChaCha8Rng,
    t: &mut Tally,
    fault: Option<Fault>,
    first_trial: bool,
) {
    let q = cfg.q();
    let qi = BigInt::from(q);
    let r = random_weights(rng, q, 64);
    let rhs_cfg = match fault {
        Some(Fault::CorruptSigmaPower) => validate_config(q, cfg.sigma_power(2)).unwrap(),
        None => cfg.clone(),
    };
    let compare = |u: &MultiIndex, x: &QAdicPoint, t: &mut Tally| {
        let res: Result<(Rat, Rat)> = (|| {
            let oracle = mixed_partial_oracle(cfg, DerivMode::Coupled, x, u, &r)?;
            let lhs = oracle / Rat::from_integer(&qi * u.factorial());
            Ok((lhs, theorem_rhs(&rhs_cfg, &r, u, x)?))
        })();
        match res {
            Ok((lhs, rhs)) => t.check(lhs == rhs, || {
                format!("derivative identity u={u}, x={x}, r={r}: oracle {lhs} vs rhs {rhs}")
            }),
            Err(e) => t.error("theorem", e),
        }
    };

    for l in 0..q - 1 {
        let u = MultiIndex::unit(q, l).unwrap();
        for x in QAdicPoint::grid(q, 4) {
            compare(&u, &x, t);
        }
    }
    for n in 2..=3 {
        for u in MultiIndex::all_of_order(q, n) {
            for x in QAdicPoint::grid(q, 3) {
                compare(&u, &x, t);
            }
        }
    }

    // truncated shift sums reach the same value two levels past the point
    for n in 1..=2 {
        for u in MultiIndex::all_of_order(q, n) {
            for x in QAdicPoint::grid(q, 2) {
                let target = theorem_rhs(cfg, &r, &u, &x).unwrap();
                for k in x.level() + 2..=x.level() + 3 {
                    let v = hlsrq_partial(cfg, &r, &u, &x, k).unwrap();
                    t.check(v == target, || {
                        format!("shift-sum expression at k={k}, u={u}, x={x}, r={r}")
                    });
                }
            }
        }
    }

    let s = random_weights(rng, q, 64);
    for x in QAdicPoint::grid(q, 5) {
        let (lhs, rhs) = basechange_eval(cfg, &s, &x).unwrap();
        t.check(lhs == rhs, || format!("base change at x={x}, s={s}"));
    }

    if q == 3 {
        for x in QAdicPoint::grid(q, 3) {
            let p = cdf_polynomial(cfg, DerivMode::Coupled, &x).unwrap();
            let a = p.derivative_sequence(&[0, 1, 1]);
            let b = p.derivative_sequence(&[1, 1, 0]);
            t.check(a == b, || format!("mixed partial symmetry at x={x}"));
        }
    }

    if first_trial && q == 2 && cfg.sigma() == [0, 1] {
        let half = WeightVec::uniform(2);
        let e0 = MultiIndex::unit(2, 0).unwrap();
        for x in QAdicPoint::grid(2, 6) {
            let v = mixed_partial_oracle(cfg, DerivMode::Coupled, &x, &e0, &half).unwrap();
            let tau = classical_takagi(&x.to_rat());
            t.check(v == Rat::from_integer(2.into()) * &tau, || {
                format!("classical Takagi anchor at x={x}: {v} vs 2*{tau}")
            });
        }
    }
}

fn bounds(cfg: &SystemConfig, rng: &mut ChaCha8Rng, t: &mut Tally) {
    let q = cfg.q();
    let d = random_weights(rng, q, 64);
    let r = random_weights(rng, q, 64);
    let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();
    let grid = QAdicPoint::grid(q, 3);
    for n in 1..=3 {
        for u in MultiIndex::all_of_order(q, n) {
            let bound = sup_bound(&r, &u).unwrap();
            for x in &grid {
                let limit = takagi_t(&mc, &u, x).unwrap();
                for k in 0..=5 {
                    let v = takagi_d_recursive(&mc, &u, k, x).unwrap();
                    t.check(v.abs() <= bound, || {
                        format!("|D_k| <= sup bound, u={u}, k={k}, x={x}, d={d}, r={r}")
                    });
                    if k >= x.level() {
                        t.check(v == limit, || {
                            format!("D_k stabilized, u={u}, k={k}, x={x}, d={d}, r={r}")
                        });
                    }
                }
            }
            t.check(
                takagi_t(&mc, &u, &QAdicPoint::one(q)).unwrap().is_zero(),
                || format!("T(1) = 0, u={u}"),
            );
        }
    }

    let tail_level = if q == 2 { 8 } else { 6 };
    for l in 0..q - 1 {
        for x in QAdicPoint::grid(q, tail_level) {
            let terms = base_series_terms(&mc, l, &x).unwrap();
            let total: Rat = terms.iter().sum();
            let mut partial = Rat::zero();
            for k in 0..tail_level {
                if let Some(term) = terms.get(k as usize) {
                    partial += term;
                }
                let gap = (&total - &partial).abs();
                t.check(gap <= tail_bound_base(&r, k), || {
                    format!("tail bound, l={l}, k={k}, x={x}, d={d}, r={r}")
                });
            }
        }
    }
}
