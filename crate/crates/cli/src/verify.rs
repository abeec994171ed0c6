//! The invariant suite behind `lqreturn verify`.

use lqreturn::gamma_bounds::{default_grid, verify_bounds};
use lqreturn::ldp::{self, RateKind};
use lqreturn::montecarlo::dkw_check;
use lqreturn::return_exact::{lambda_n, zeta, zeta_lower_bound};
use lqreturn::spectra::{self, grid};
use lqreturn::words::enumerate_words;
use lqreturn::{LawMode, PotentialModel, RateFunction, ReturnLaw, SimConfig};

use crate::output::{load_model, num, Failure, Report};
use crate::Common;

/// Words enumerated per length are kept below this count.
const WORD_CAP: u128 = 4096;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, result: Result<(bool, String), Failure>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(f) => Check {
            name,
            passed: false,
            detail: format!("error: {}", f.message),
        },
    }
}

/// Longest word length, at most `n`, with at most `WORD_CAP` words.
fn max_len(model: &PotentialModel, n: usize) -> usize {
    let k = model.alphabet_size() as u128;
    let mut len = 1;
    while len < n && k.pow(len as u32 + 1) <= WORD_CAP {
        len += 1;
    }
    len
}

fn additivity(model: &PotentialModel, budget: u128) -> Result<(bool, String), Failure> {
    let k = model.alphabet_size();
    let mut worst: f64 = 0.0;
    for n in 1..=max_len(model, 6) {
        for w in enumerate_words(k, n, budget)? {
            let total: f64 = (0..k as u16)
                .map(|a| {
                    let mut s = w.symbols().to_vec();
                    s.push(a);
                    model.cylinder_measure(&lqreturn::Word::new(s, k).unwrap()).exp()
                })
                .sum();
            worst = worst.max((total / model.cylinder_measure(&w).exp() - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max relative defect {}", num(worst))))
}

fn kac(model: &PotentialModel, budget: u128) -> Result<(bool, String), Failure> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_len(model, 6) {
        for w in enumerate_words(model.alphabet_size(), n, budget)? {
            let law = ReturnLaw::new(model, &w, LawMode::Return)?;
            let m = law.moment(1.0)?;
            worst = worst.max((m.value * model.cylinder_measure(&w).exp() - 1.0).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max |E[S] mu(w) - 1| = {}", num(worst))))
}

fn zeta_bounds(model: &PotentialModel, budget: u128) -> Result<(bool, String), Failure> {
    let lb = zeta_lower_bound(model);
    let (mut agreement, mut below): (f64, f64) = (0.0, 0.0);
    for n in 1..=max_len(model, 8) {
        for w in enumerate_words(model.alphabet_size(), n, budget)? {
            let z = zeta(model, &w);
            let t = z.tau.get();
            let p = ReturnLaw::new(model, &w, LawMode::Return)?.pmf(t);
            agreement = agreement.max((z.zeta - (1.0 - p[t])).abs());
            below = below.max(lb - z.zeta);
        }
    }
    Ok((
        agreement <= 1e-12 && below <= 1e-12,
        format!("identity vs automaton {}, lower bound {} exceeded by {}", num(agreement), num(lb), num(below.max(0.0))),
    ))
}

fn lambda_bound(model: &PotentialModel, budget: u128) -> Result<(bool, String), Failure> {
    let g = spectra::gamma_plus(model);
    let d = model.quasi_bernoulli_d();
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=max_len(model, 12) {
        let l = lambda_n(model, n, budget)?;
        worst = worst.max(l - g - (d * n as f64).ln() / n as f64);
    }
    Ok((worst <= 1e-12, format!("max Lambda_n - bound = {}", num(worst))))
}

fn critical(model: &PotentialModel) -> Result<(bool, String), Failure> {
    let c = spectra::q_star(model)?;
    let g = spectra::gamma_plus(model);
    let residual = spectra::m_spectrum(model, c.q_star)? - g;
    let in_bracket = (-1.0..=0.0).contains(&c.q_star);
    let degenerate_ok = c.is_max_entropy_degenerate == (c.q_star == -1.0);
    Ok((
        in_bracket && degenerate_ok && residual.abs() <= 1e-8,
        format!("q* = {}, M(q*) - gamma+ = {}", num(c.q_star), num(residual)),
    ))
}

fn w_below_r(model: &PotentialModel) -> Result<(bool, String), Failure> {
    let qs = spectra::default_grid();
    let (s, rows) = spectra::spectrum_table(model, &qs)?;
    let q_star = s.critical.q_star;
    let degenerate = s.critical.is_max_entropy_degenerate;
    let mut worst = f64::NEG_INFINITY;
    let mut strict = true;
    for r in &rows {
        worst = worst.max(r.w - r.r);
        if r.q < q_star && !degenerate {
            strict &= r.w < r.r;
        }
        if r.q >= q_star {
            strict &= (r.w - r.r).abs() <= 1e-10;
        }
    }
    Ok((strict && worst <= 1e-10, format!("max W - R = {}", num(worst))))
}

fn rate_shape(model: &PotentialModel) -> Result<(bool, String), Failure> {
    let h = spectra::entropy(model);
    if model.is_max_entropy() {
        let k = model.alphabet_size() as f64;
        let qs = spectra::default_grid();
        let r = spectra::r_spectrum(model, &qs)?;
        let worst = r
            .points
            .iter()
            .map(|p| (p.value - if p.q >= -1.0 { p.q * k.ln() } else { -k.ln() }).abs())
            .fold(0.0, f64::max);
        return Ok((worst <= 1e-10, format!("uniform R formula defect {}", num(worst))));
    }
    let at_h = ldp::rate_i(model, h)?.value();
    let (lo, hi) = ldp::domain(model, RateKind::I)?;
    let us = grid(lo, lo + 0.98 * (hi - lo), 99);
    let f = RateFunction::new(model, RateKind::I, &us)?;
    let v: Vec<f64> = f.points.iter().map(|p| p.value.value()).collect();
    let mut worst = f64::INFINITY;
    for i in 1..v.len() - 1 {
        worst = worst.min(0.5 * (v[i - 1] + v[i + 1]) - v[i]);
    }
    let worst_neg = -v.iter().cloned().fold(0.0, f64::min);
    Ok((
        at_h == 0.0 && worst >= -1e-9 && worst_neg <= 1e-12,
        format!("I(h) = {}, min midpoint excess {}, min I {}", num(at_h), num(worst), num(-worst_neg)),
    ))
}

fn gamma() -> Result<(bool, String), Failure> {
    let r = verify_bounds(&default_grid())?;
    let v = r.violations().len();
    Ok((
        v == 0 && r.max_oracle_error <= 1e-10,
        format!("{v} violations on {} rows, oracle gap {}", r.rows.len(), num(r.max_oracle_error)),
    ))
}

fn dkw(model: &PotentialModel, seed: u64, budget: u128) -> Result<(bool, String), Failure> {
    let n = max_len(model, 3);
    let cfg = SimConfig::new(seed, 4000, 100_000, n)?;
    let r = dkw_check(model, n, &cfg, 0.01, budget)?;
    Ok((r.holds, format!("n = {n}: ks {} vs epsilon {}", num(r.ks), num(r.epsilon))))
}

fn quasi_bernoulli(model: &PotentialModel, seed: u64) -> Result<(bool, String), Failure> {
    let r = model.quasi_bernoulli_check(2000, seed);
    Ok((r.holds, format!("ratio in [{}, {}], D = {}", num(r.min_ratio), num(r.max_ratio), num(r.d))))
}

pub fn run(common: &Common) -> Result<(), Failure> {
    let loaded = load_model(common)?;
    let model = &loaded.model;
    let b = common.budget;
    let checks = vec![
        check("cylinder_additivity", additivity(model, b)),
        check("kac", kac(model, b)),
        check("zeta_bounds", zeta_bounds(model, b)),
        check("lambda_bound", lambda_bound(model, b)),
        check("q_star", critical(model)),
        check("w_below_r", w_below_r(model)),
        check("rate_function", rate_shape(model)),
        check("gamma_bounds", gamma()),
        check("dkw", dkw(model, common.seed, b)),
        check("quasi_bernoulli", quasi_bernoulli(model, common.seed)),
    ];
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut report = Report::new(common, Some(&loaded.digest), &["check", "status", "detail"]);
    report.meta("failed", failed);
    for c in checks {
        let status = if c.passed { "pass" } else { "fail" };
        report.row(vec![c.name.into(), status.into(), c.detail]);
    }
    report.emit(common.out.as_deref())?;
    if failed > 0 {
        return Err(Failure::numeric(format!("{failed} invariant checks failed")));
    }
    Ok(())
}
