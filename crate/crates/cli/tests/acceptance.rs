//! Acceptance criteria, one line per criterion. Every comparison is exact.

use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use qtakagi::derivs::{basechange_eval, mixed_partial_oracle, theorem_rhs, DerivMode};
use qtakagi::measure::StepIntegral;
use qtakagi::stepfn::{compose_phi, phi_l, w_fn, z_fn};
use qtakagi::takagi::{
    base_series_terms, sup_bound, tail_bound_base, takagi_d_recursive, takagi_t, DirectTruncation,
};
use qtakagi::verify::{
    classical_takagi, instance_rng, random_weights, run_suite, standard_configs, Suite,
    VerifyOptions,
};
use qtakagi::{
    cdf, expectation, interval_measure, MeasureContext, MultiIndex, QAdicInterval, QAdicPoint, Rat,
    StepFunction, SystemConfig, WeightVec,
};

const SEED: u64 = 20_240_611;

#[derive(Default)]
struct Outcome {
    checks: u64,
    failures: u64,
    first: Option<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            self.first.get_or_insert_with(detail);
        }
    }
}

fn weights(salt: u64, c: usize, trial: usize, count: usize) -> Vec<WeightVec> {
    let mut rng = instance_rng(SEED, salt, c, trial);
    let q = standard_configs()[c].q();
    (0..count)
        .map(|_| random_weights(&mut rng, q, 64))
        .collect()
}

fn cells(q: usize, k: u32) -> impl Iterator<Item = QAdicInterval> {
    (0..(q as u64).pow(k)).map(move |n| QAdicInterval::new(q, k, n).unwrap())
}

fn orders(q: usize, range: std::ops::RangeInclusive<u32>) -> Vec<MultiIndex> {
    range.flat_map(|n| MultiIndex::all_of_order(q, n)).collect()
}

fn theorem_family(
    out: &mut Outcome,
    salt: u64,
    us: fn(usize) -> Vec<MultiIndex>,
    level: u32,
    draws: usize,
) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        let q = cfg.q();
        for trial in 0..draws {
            let r = &weights(salt, c, trial, 1)[0];
            for u in us(q) {
                let norm = Rat::from_integer(BigInt::from(q) * u.factorial());
                for x in QAdicPoint::grid(q, level) {
                    let oracle = mixed_partial_oracle(cfg, DerivMode::Coupled, &x, &u, r).unwrap();
                    let rhs = theorem_rhs(cfg, r, &u, &x).unwrap();
                    let lhs = oracle / &norm;
                    out.check(lhs == rhs, || {
                        format!("sigma={:?} r={r} u={u} x={x}: {lhs} != {rhs}", cfg.sigma())
                    });
                }
            }
        }
    }
}

fn c1(out: &mut Outcome) {
    theorem_family(
        out,
        1,
        |q| {
            (0..q - 1)
                .map(|l| MultiIndex::unit(q, l).unwrap())
                .collect()
        },
        4,
        20,
    );
}

fn c2(out: &mut Outcome) {
    theorem_family(out, 2, |q| orders(q, 2..=3), 3, 5);
}

fn c3(out: &mut Outcome) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        let q = cfg.q();
        for trial in 0..5 {
            let w = weights(3, c, trial, 2);
            let mc = MeasureContext::new(cfg.clone(), w[0].clone(), w[1].clone()).unwrap();
            for u in orders(q, 1..=3) {
                for k in 0..=5 {
                    let direct = DirectTruncation::new(&mc, &u, k).unwrap();
                    for x in QAdicPoint::grid(q, 4) {
                        let rec = takagi_d_recursive(&mc, &u, k, &x).unwrap();
                        out.check(direct.at(&x) == rec, || {
                            format!(
                                "sigma={:?} d={} r={} u={u} k={k} x={x}",
                                cfg.sigma(),
                                mc.d,
                                mc.r
                            )
                        });
                    }
                }
            }
        }
    }
}

fn suite(out: &mut Outcome, s: Suite, trials: usize) {
    let rep = run_suite(
        s,
        &VerifyOptions {
            seed: SEED,
            trials,
            fault: None,
        },
    );
    out.checks += rep.checks;
    out.failures += rep.failures;
    out.first = rep.first_counterexample;
}

fn c4(out: &mut Outcome) {
    suite(out, Suite::ZeroExpectation, 10);
}

fn c5(out: &mut Outcome) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        let q = cfg.q();
        for trial in 0..5 {
            let w = weights(5, c, trial, 4);
            let (e, s, d, r) = (&w[0], &w[1], &w[2], &w[3]);
            let ctx = || format!("sigma={:?} e={e} s={s} d={d} r={r}", cfg.sigma());
            let wf = w_fn(cfg, s, r);
            let z1 = z_fn(cfg, e, s, d, r, 1).unwrap();
            let mut prod = StepFunction::constant(q, Rat::one());
            for k in 1..=4 {
                prod = prod.mul(&compose_phi(&wf, k - 1).unwrap()).unwrap();
                let lhs = z_fn(cfg, e, s, d, r, k + 1).unwrap();
                out.check(lhs.same_function(&prod.mul(&z1).unwrap()), || {
                    format!("W-product k={k}, {}", ctx())
                });
            }
            let mc = MeasureContext::new(cfg.clone(), d.clone(), r.clone()).unwrap();
            let target = MeasureContext::new(cfg.clone(), e.clone(), s.clone()).unwrap();
            for k in 0..=5 {
                let int = StepIntegral::new(&mc, &z_fn(cfg, e, s, d, r, k).unwrap()).unwrap();
                for x in QAdicPoint::grid(q, 4).iter().filter(|x| x.level() <= k) {
                    out.check(int.at(x) == cdf(&target, x), || {
                        format!("Z stabilization k={k} x={x}, {}", ctx())
                    });
                }
            }
        }
    }
}

fn c6(out: &mut Outcome) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        for (i, s) in weights(6, c, 0, 20).iter().enumerate() {
            for x in QAdicPoint::grid(cfg.q(), 5) {
                let (lhs, rhs) = basechange_eval(cfg, s, &x).unwrap();
                out.check(lhs == rhs, || {
                    format!("sigma={:?} s#{i}={s} x={x}", cfg.sigma())
                });
            }
        }
    }
}

fn c7(out: &mut Outcome) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        let q = cfg.q();
        for trial in 0..5 {
            let w = weights(7, c, trial, 3);
            let plain = MeasureContext::new(
                SystemConfig::identity(q).unwrap(),
                w[0].clone(),
                w[1].clone(),
            )
            .unwrap();
            for k in 1..=5 {
                for iv in cells(q, k) {
                    let digits = iv.digits();
                    let direct = digits[1..]
                        .iter()
                        .fold(w[0][digits[0]].clone(), |acc, &b| acc * &w[1][b]);
                    out.check(interval_measure(&plain, &iv) == direct, || {
                        format!("multinomial {iv} d={} r={}", w[0], w[1])
                    });
                }
            }
            // E(Phi_l) = r_l for two different first-digit vectors
            for d in [&w[0], &w[2]] {
                let mc = MeasureContext::new(cfg.clone(), d.clone(), w[1].clone()).unwrap();
                for l in 0..q {
                    let e = expectation(&mc, &phi_l(cfg, l).unwrap(), &QAdicInterval::whole(q))
                        .unwrap();
                    out.check(e == w[1][l], || {
                        format!("E(Phi_{l}) sigma={:?} d={d} r={}", cfg.sigma(), w[1])
                    });
                }
            }
        }
        let uniform = MeasureContext::coupled(cfg.clone(), WeightVec::uniform(q)).unwrap();
        for x in QAdicPoint::grid(q, 5) {
            out.check(cdf(&uniform, &x) == x.to_rat(), || {
                format!("uniform L({x}) sigma={:?}", cfg.sigma())
            });
        }
    }
}

fn c8(out: &mut Outcome) {
    for (c, cfg) in standard_configs().iter().enumerate() {
        let q = cfg.q();
        for trial in 0..3 {
            let w = weights(8, c, trial, 2);
            let mc = MeasureContext::new(cfg.clone(), w[0].clone(), w[1].clone()).unwrap();
            let ctx = || format!("sigma={:?} d={} r={}", cfg.sigma(), mc.d, mc.r);
            for u in orders(q, 1..=3) {
                let bound = sup_bound(&mc.r, &u).unwrap();
                for x in QAdicPoint::grid(q, 3) {
                    let limit = takagi_t(&mc, &u, &x).unwrap();
                    for k in 0..=x.level() + 2 {
                        let v = takagi_d_recursive(&mc, &u, k, &x).unwrap();
                        out.check(v.abs() <= bound, || {
                            format!("sup bound u={u} k={k} x={x} {}", ctx())
                        });
                        if k >= x.level() {
                            out.check(v == limit, || {
                                format!("stabilization u={u} k={k} x={x} {}", ctx())
                            });
                        }
                    }
                }
            }
            for l in 0..q - 1 {
                let u = MultiIndex::unit(q, l).unwrap();
                for x in QAdicPoint::grid(q, 8) {
                    let terms = base_series_terms(&mc, l, &x).unwrap();
                    let total: Rat = terms.iter().sum();
                    // spot-check the series against the evaluators on a sparse subgrid
                    let spot = x.level() <= 4;
                    if spot {
                        let limit = takagi_t(&mc, &u, &x).unwrap();
                        out.check(total == limit, || {
                            format!("series total u={u} x={x} {}", ctx())
                        });
                    }
                    let mut partial = Rat::zero();
                    for k in 0..8u32 {
                        if let Some(term) = terms.get(k as usize) {
                            partial += term;
                        }
                        if spot {
                            let dk = takagi_d_recursive(&mc, &u, k, &x).unwrap();
                            out.check(partial == dk, || {
                                format!("partial sum l={l} k={k} x={x} {}", ctx())
                            });
                        }
                        let gap = (&total - &partial).abs();
                        out.check(gap <= tail_bound_base(&mc.r, k), || {
                            format!("tail bound l={l} k={k} x={x} {}", ctx())
                        });
                    }
                }
            }
        }
    }
}

fn c9(out: &mut Outcome) {
    let cfg = SystemConfig::identity(2).unwrap();
    let half = WeightVec::uniform(2);
    let e0 = MultiIndex::unit(2, 0).unwrap();
    for x in QAdicPoint::grid(2, 6) {
        let v = mixed_partial_oracle(&cfg, DerivMode::Coupled, &x, &e0, &half).unwrap();
        let tau = classical_takagi(&x.to_rat());
        out.check(v == Rat::from_integer(2.into()) * &tau, || {
            format!("x={x}: {v} vs 2*{tau}")
        });
    }
}

fn c10(out: &mut Outcome) {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qtakagi"))
            .args(["verify", "--suite", "all", "--seed", "7"])
            .output()
            .expect("run qtakagi")
    };
    let (a, b) = (run(), run());
    out.check(a.status.success(), || {
        format!("first run exit {:?}", a.status.code())
    });
    out.check(b.status.success(), || {
        format!("second run exit {:?}", b.status.code())
    });
    out.check(!a.stdout.is_empty() && a.stdout == b.stdout, || {
        format!(
            "reports differ:\n{}\n---\n{}",
            String::from_utf8_lossy(&a.stdout),
            String::from_utf8_lossy(&b.stdout)
        )
    });
}

type Criterion = (&'static str, fn(&mut Outcome));

fn main() {
    let criteria: [Criterion; 10] = [
        ("derivative identity, first order, level-4 grids, 20 r", c1),
        (
            "derivative identity, orders 2 and 3, level-3 grids, 5 r",
            c2,
        ),
        (
            "D direct = D recursive, |u| <= 3, k <= 5, level-4 grids",
            c3,
        ),
        ("zero-expectation lemmas, k <= 4, beta <= 5, 10 (d,r)", c4),
        ("W-product and Z stabilization", c5),
        ("base change, level-5 grids, 20 s", c6),
        ("reductions: multinomial, uniform, E(Phi_l) = r_l", c7),
        ("sup bound, tail bound on level-8 grids, stabilization", c8),
        ("classical Takagi anchor at m/2^6", c9),
        ("verify --suite all is byte-identical across runs", c10),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = Outcome::default();
        f(&mut out);
        let ok = out.failures == 0 && out.checks > 0;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {title}: {} checks, {} failures, {:.1}s",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            out.checks,
            out.failures,
            start.elapsed().as_secs_f64()
        );
        if let Some(first) = out.first {
            println!("    first counterexample: {first}");
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
