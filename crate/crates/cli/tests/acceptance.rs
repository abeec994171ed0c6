//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL`
//! line; the test fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lqreturn::gamma_bounds::{default_grid, verify_bounds};
use lqreturn::ldp::{ldp_compare, rate_i, RateFunction, RateKind, Tail};
use lqreturn::montecarlo::{dkw_check, exponential_law_check};
use lqreturn::return_exact::{exact_return_spectra, lambda_n, zeta, zeta_lower_bound};
use lqreturn::spectra::{self, default_grid as q_grid, m_spectrum, pressure, q_star, r_spectrum, w_spectrum};
use lqreturn::words::{enumerate_words, DEFAULT_ENUMERATION_BUDGET as BUDGET};
use lqreturn::{LawMode, ModelSpec, PotentialModel, ReturnLaw, SimConfig, Word};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(name: &str) -> PotentialModel {
    let text = std::fs::read_to_string(root().join("models").join(name)).unwrap();
    PotentialModel::normalize(&ModelSpec::from_json(&text).unwrap()).unwrap()
}

fn bernoulli() -> PotentialModel {
    load("bernoulli_23.json")
}

fn markov() -> PotentialModel {
    load("markov_02_06.json")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn c1_c2(model: PotentialModel, want: f64) -> Outcome {
    let (c, t) = timed(|| q_star(&model).unwrap());
    let err = (c.q_star - want).abs();
    outcome(
        err <= 1e-4 && t < Duration::from_secs(1),
        format!("q* = {:.7}, |err| = {err:.2e}, {:.3} s", c.q_star, t.as_secs_f64()),
    )
}

/// Largest cycle mean over periodic orbits of period at most `p_max`.
fn brute_force_gamma(model: &PotentialModel, p_max: usize) -> f64 {
    let k = model.alphabet_size();
    let m = model.memory();
    let table = model.log_forward();
    let mut best = f64::NEG_INFINITY;
    for p in 1..=p_max {
        for w in enumerate_words(k, p, BUDGET).unwrap() {
            let s = w.symbols();
            let total: f64 = (0..p)
                .map(|i| {
                    let x = (0..=m).fold(0, |acc, j| acc * k + s[(i + j) % p] as usize);
                    table[x]
                })
                .sum();
            best = best.max(total / p as f64);
        }
    }
    best
}

fn c3() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (model, want) in [(bernoulli(), (2.0f64 / 3.0).ln()), (markov(), 0.6f64.ln())] {
        let karp = spectra::gamma_plus(&model);
        let brute = brute_force_gamma(&model, 12);
        let e = (karp - want).abs().max((brute - want).abs());
        ok &= e <= 1e-12;
        detail.push(format!("{karp:.15} (err {e:.1e})"));
    }
    outcome(ok, detail.join(", "))
}

fn two_by_two_m(p: [[f64; 2]; 2], q: f64) -> f64 {
    let t = 1.0 - q;
    let (a, b, c, d) = (p[0][0].powf(t), p[0][1].powf(t), p[1][0].powf(t), p[1][1].powf(t));
    (0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * c).sqrt()).ln()
}

fn printed_markov_m(q: f64) -> f64 {
    let f = |b: f64| b.powf(q);
    let inner = f(1.0 / 8.0) * (32.0 * f(225.0) - 12.0 * f(600.0) + f(8.0) * (f(15.0) + 3.0 * f(5.0)).powi(2));
    (f(1.0 / 3.0) / 10.0 * inner.sqrt() + f(1.0 / 3.0) / 10.0 * (f(15.0) + 3.0 * f(5.0))).ln()
}

fn c4() -> Outcome {
    let grid = q_grid();
    let b = bernoulli();
    let mk = markov();
    let sym_p = 0.3f64;
    let sym = PotentialModel::normalize(&ModelSpec::markov(&[vec![sym_p, 1.0 - sym_p], vec![1.0 - sym_p, sym_p]])).unwrap();
    let (mut eb, mut em, mut es): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &q in &grid {
        let t = 1.0 - q;
        let want_b = ((2.0f64 / 3.0).powf(t) + (1.0f64 / 3.0).powf(t)).ln();
        eb = eb.max((m_spectrum(&b, q).unwrap() - want_b).abs());
        em = em.max((m_spectrum(&mk, q).unwrap() - two_by_two_m([[0.2, 0.8], [0.4, 0.6]], q)).abs());
        let want_s = (sym_p.powf(t) + (1.0 - sym_p).powf(t)).ln();
        es = es.max((m_spectrum(&sym, q).unwrap() - want_s).abs());
    }
    let mut ep: f64 = 0.0;
    for q in [-1.0, 0.5, 2.0] {
        ep = ep.max((m_spectrum(&mk, q).unwrap() - printed_markov_m(q)).abs());
    }
    outcome(
        eb.max(em).max(es).max(ep) <= 1e-10,
        format!("bernoulli {eb:.1e}, markov 2x2 {em:.1e}, symmetric {es:.1e}, printed form {ep:.1e}"),
    )
}

fn c5() -> Outcome {
    let b = bernoulli();
    let p2 = pressure(&b, 2.0).unwrap();
    let e = (p2 - (5.0f64 / 9.0).ln()).abs();
    let grid = q_grid();
    let mut strict = true;
    for model in [bernoulli(), markov()] {
        let qs = q_star(&model).unwrap().q_star;
        let r = r_spectrum(&model, &grid).unwrap();
        let w = w_spectrum(&model, &grid).unwrap();
        for (pr, pw) in r.points.iter().zip(&w.points) {
            if pr.q < qs {
                strict &= pw.value < pr.value;
            }
        }
    }
    outcome(e <= 1e-12 && strict, format!("|P(2phi) - log(5/9)| = {e:.1e}, W < R left of q*: {strict}"))
}

fn c6() -> Outcome {
    let (worst, t) = timed(|| {
        let mut worst: f64 = 0.0;
        for model in [bernoulli(), markov()] {
            for n in 1..=8 {
                for w in enumerate_words(2, n, BUDGET).unwrap() {
                    let m = ReturnLaw::new(&model, &w, LawMode::Return).unwrap().moment(1.0).unwrap();
                    worst = worst.max((m.value * model.cylinder_measure(&w).exp() - 1.0).abs());
                }
            }
        }
        worst
    });
    outcome(
        worst <= 1e-9 && t < Duration::from_secs(30),
        format!("max |E[S] mu(w) - 1| = {worst:.1e}, {:.2} s", t.as_secs_f64()),
    )
}

fn c7() -> Outcome {
    let (mut agree, mut below): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for model in [bernoulli(), markov()] {
        let lb = zeta_lower_bound(&model);
        for n in 1..=12 {
            for w in enumerate_words(2, n, BUDGET).unwrap() {
                let z = zeta(&model, &w);
                let t = z.tau.get();
                let p = ReturnLaw::new(&model, &w, LawMode::Return).unwrap().pmf(t);
                agree = agree.max((z.zeta - (1.0 - p[t])).abs());
                below = below.max(lb - z.zeta);
            }
        }
    }
    outcome(
        agree <= 1e-12 && below <= 0.0,
        format!("identity vs automaton {agree:.1e}, max(lower bound - zeta) = {below:.3e}"),
    )
}

fn c8() -> Outcome {
    let (res, t) = timed(|| {
        let mut ok = true;
        let mut detail = Vec::new();
        for model in [bernoulli(), markov()] {
            let g = spectra::gamma_plus(&model);
            let d = model.quasi_bernoulli_d();
            let mut gaps = vec![0.0; 21];
            for n in 1..=20 {
                let l = lambda_n(&model, n, BUDGET).unwrap();
                ok &= l <= g + (d * n as f64).ln() / n as f64;
                gaps[n] = (l - g).abs();
            }
            ok &= gaps[20] < gaps[6];
            detail.push(format!("gap n=6 {:.4}, n=20 {:.4}", gaps[6], gaps[20]));
        }
        (ok, detail.join("; "))
    });
    outcome(
        res.0 && t < Duration::from_secs(120),
        format!("{}, {:.1} s", res.1, t.as_secs_f64()),
    )
}

fn c9() -> Outcome {
    let qs: [f64; 5] = [-2.0, -1.0, -0.5, 0.5, 1.0];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, model) in [("bernoulli", bernoulli()), ("markov", markov())] {
        let g = spectra::gamma_plus(&model);
        let predicted: Vec<f64> = qs.iter().map(|&q| g.max(m_spectrum(&model, q.max(-1.0)).unwrap())).collect();
        let gaps = |n| -> Vec<f64> {
            exact_return_spectra(&model, n, &qs, BUDGET)
                .unwrap()
                .iter()
                .zip(&predicted)
                .map(|(e, p)| (e.value - p).abs())
                .collect()
        };
        let (g6, g12) = (gaps(6), gaps(12));
        for i in 0..qs.len() {
            ok &= g12[i] < g6[i];
        }
        let pairs: Vec<String> = (0..qs.len()).map(|i| format!("q={} {:.4}->{:.4}", qs[i], g6[i], g12[i])).collect();
        detail.push(format!("{name}: {}", pairs.join(" ")));
    }
    outcome(ok, detail.join("; "))
}

fn c10() -> Outcome {
    let model = bernoulli();
    let mut ok = true;
    let mut detail = Vec::new();
    for u in [0.1, 0.15] {
        let rows = ldp_compare(&model, &[6, 8, 10, 12], u, Tail::Upper, BUDGET).unwrap();
        for pair in rows.windows(2) {
            ok &= pair[1].gap < pair[0].gap;
        }
        let gaps: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.gap)).collect();
        detail.push(format!("u={u}: {}", gaps.join(">")));
    }
    let h = spectra::entropy(&model);
    let at_h = rate_i(&model, h).unwrap().value();
    ok &= at_h == 0.0;
    let (lo, hi) = lqreturn::ldp::domain(&model, RateKind::I).unwrap();
    let us = spectra::grid(lo, lo + 0.98 * (hi - lo), 199);
    let f = RateFunction::new(&model, RateKind::I, &us).unwrap();
    let v: Vec<f64> = f.points.iter().map(|p| p.value.value()).collect();
    let convex = v.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
    ok &= convex;
    detail.push(format!("I(h) = {at_h}, convex {convex}"));
    outcome(ok, detail.join("; "))
}

fn c11() -> Outcome {
    let r = verify_bounds(&default_grid()).unwrap();
    let v = r.violations().len();
    outcome(
        v == 0 && r.max_oracle_error <= 1e-10,
        format!("{v} violations over {} rows, oracle gap {:.1e}", r.rows.len(), r.max_oracle_error),
    )
}

fn c12() -> Outcome {
    let grid = q_grid();
    let mut worst: f64 = 0.0;
    let mut same = true;
    for k in [2usize, 3, 4] {
        let model = PotentialModel::normalize(&ModelSpec::uniform(k)).unwrap();
        let lk = (k as f64).ln();
        let r = r_spectrum(&model, &grid).unwrap();
        let w = w_spectrum(&model, &grid).unwrap();
        for (pr, pw) in r.points.iter().zip(&w.points) {
            let want = if pr.q >= -1.0 { pr.q * lk } else { -lk };
            worst = worst.max((pr.value - want).abs());
            same &= (pr.value - pw.value).abs() <= 1e-10;
        }
    }
    outcome(worst <= 1e-10 && same, format!("max formula defect {worst:.1e}, R = W: {same}"))
}

fn c13() -> Outcome {
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for model in [bernoulli(), markov()] {
        for n in 1..=8 {
            let cfg = SimConfig::new(13 + n as u64, 100_000, 1_000_000, n).unwrap();
            let r = dkw_check(&model, n, &cfg, 0.01, BUDGET).unwrap();
            ok &= r.holds;
            if r.ks / r.epsilon > worst.0 / worst.1.max(f64::MIN_POSITIVE) {
                worst = (r.ks, r.epsilon);
            }
        }
    }
    let w = Word::parse("0111111111", 2).unwrap();
    let cfg = SimConfig::new(7, 100_000, 10_000_000, w.len()).unwrap();
    let e = exponential_law_check(&markov(), &w, &cfg).unwrap();
    ok &= e.tau == w.len() && e.ks <= 0.05;
    outcome(
        ok,
        format!(
            "worst DKW ks {:.4} vs eps {:.4}; exp law on {} (tau {}) ks {:.4}",
            worst.0, worst.1, e.word, e.tau, e.ks
        ),
    )
}

fn body(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c14() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lqreturn");
    let models = root().join("models");
    let mut runs: Vec<Vec<String>> = Vec::new();
    for m in ["bernoulli_23.json", "markov_02_06.json"] {
        let model = models.join(m).to_string_lossy().into_owned();
        let base = |cmd: &str| vec![cmd.to_string(), "--model".into(), model.clone()];
        let with = |cmd: &str, extra: &[&str]| {
            let mut v = base(cmd);
            v.extend(extra.iter().map(|s| s.to_string()));
            v
        };
        runs.push(with("spectrum", &["--points", "81"]));
        runs.push(with("exact", &["--n-max", "7"]));
        runs.push(with("simulate", &["--n", "6", "--replicas", "3000", "--seed", "5"]));
        runs.push(with("simulate", &["--n", "6", "--replicas", "3000", "--mode", "hitting"]));
        runs.push(with("simulate", &["--n", "6", "--replicas", "3000", "--mode", "explaw", "--seed", "9"]));
        runs.push(with("rate", &["--points", "41"]));
        runs.push(with("rate", &["--ldp-n", "4,6,8", "--ldp-u", "0.1"]));
        runs.push(with("verify", &[]));
        runs.push(with("gamma-check", &[]));
    }
    let mut mismatches = Vec::new();
    for args in &runs {
        let mut bodies = Vec::new();
        for threads in ["1", "2", "4"] {
            let out = Command::new(bin).args(args).args(["--threads", threads]).output().unwrap();
            if !out.status.success() {
                mismatches.push(format!("{} failed with {:?}", args.join(" "), out.status.code()));
            }
            bodies.push(body(&out.stdout));
        }
        if bodies.windows(2).any(|w| w[0] != w[1]) {
            mismatches.push(args[0].clone());
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} commands identical at --threads 1, 2, 4", runs.len())
        } else {
            mismatches.join("; ")
        },
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 q* bernoulli", || c1_c2(bernoulli(), -0.672814)),
        ("2 q* markov", || c1_c2(markov(), -0.870750)),
        ("3 gamma+ karp vs cycles", c3),
        ("4 M(q) closed forms", c4),
        ("5 P(2phi) and W < R", c5),
        ("6 kac n <= 8", c6),
        ("7 zeta identity n <= 12", c7),
        ("8 lambda_n n <= 20", c8),
        ("9 exact spectrum gaps", c9),
        ("10 ldp trend", c10),
        ("11 gamma inequalities", c11),
        ("12 uniform spectrum", c12),
        ("13 monte carlo vs exact", c13),
        ("14 thread determinism", c14),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let (o, t) = timed(f);
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {name}: {} [{:.1} s]", o.detail, t.as_secs_f64());
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
