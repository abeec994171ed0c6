//! One function per subcommand.

use std::path::Path;

use lqreturn::gamma_bounds::{self, verify_bounds};
use lqreturn::ldp::{self, ldp_compare, Tail};
use lqreturn::montecarlo::{empirical_hitting, empirical_return, exponential_law_check};
use lqreturn::return_exact::{exact_return_spectra, lambda_n};
use lqreturn::spectra::{self, grid, spectrum_table};
use lqreturn::{EmpiricalLaw, ModelSpec, PotentialModel, RateFunction, RateKind, RateValue, SimConfig, Word};

use crate::output::{load_model, num, parse_list, write_bytes, Failure, Report};
use crate::{Common, Mode, TailArg};

/// Quantile levels of the simulation summary.
const LEVELS: [f64; 9] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

pub fn dump_model(common: &Common) -> Result<(), Failure> {
    let path = common
        .model
        .as_ref()
        .ok_or_else(|| Failure::input("--dump-model needs --model"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let spec = ModelSpec::from_json(&text)?;
    PotentialModel::normalize(&spec)?;
    let mut out = spec.to_canonical_json();
    out.push('\n');
    write_bytes(common.out.as_deref(), out.as_bytes())
}

fn check_grid(lo: f64, hi: f64, points: usize, what: &str) -> Result<(), Failure> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Failure::input(format!("{what} range [{lo}, {hi}] is empty or not finite")));
    }
    if points < 2 && lo != hi {
        return Err(Failure::input(format!("{what} grid needs at least 2 points")));
    }
    if points == 0 {
        return Err(Failure::input(format!("{what} grid needs at least 1 point")));
    }
    Ok(())
}

pub fn spectrum(common: &Common, q_min: f64, q_max: f64, points: usize, svg: Option<&Path>) -> Result<(), Failure> {
    check_grid(q_min, q_max, points, "q")?;
    let loaded = load_model(common)?;
    let qs = grid(q_min, q_max, points);
    let (s, rows) = spectrum_table(&loaded.model, &qs)?;
    let mut report = Report::new(common, Some(&loaded.digest), &["q", "M", "H", "R", "W", "branch_label"]);
    report.meta("q_star", num(s.critical.q_star));
    report.meta("degenerate", s.critical.is_max_entropy_degenerate);
    report.meta("gamma_plus", num(s.gamma_plus));
    report.meta("entropy", num(s.entropy));
    report.meta("pressure_2phi", num(s.pressure_double));
    for r in &rows {
        report.row(vec![num(r.q), num(r.m), num(r.h), num(r.r), num(r.w), r.branch.clone()]);
    }
    if let Some(path) = svg {
        let plot = crate::svg::spectrum_plot(&rows, s.critical.q_star);
        write_bytes(Some(path), plot.as_bytes())?;
    }
    report.emit(common.out.as_deref())
}

/// Limit predicted for the exact return spectrum at order `q`.
pub fn predicted_branch(model: &PotentialModel, q: f64) -> Result<f64, Failure> {
    Ok(spectra::gamma_plus(model).max(spectra::m_spectrum(model, q.max(-1.0))?))
}

pub fn exact(common: &Common, n_min: usize, n_max: usize, q: &str) -> Result<(), Failure> {
    if n_min == 0 || n_min > n_max {
        return Err(Failure::input(format!("word lengths {n_min}..={n_max} are empty or start at 0")));
    }
    let qs = parse_list(q, "q")?;
    if qs.iter().any(|q| !q.is_finite()) {
        return Err(Failure::input("q values must be finite"));
    }
    let loaded = load_model(common)?;
    let model = &loaded.model;
    let gp = spectra::gamma_plus(model);
    let predicted = qs
        .iter()
        .map(|&q| predicted_branch(model, q))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = Report::new(
        common,
        Some(&loaded.digest),
        &[
            "n",
            "q",
            "exact_spectrum",
            "certified_error",
            "exact_spectrum_shift",
            "lambda_n",
            "gamma_plus_gap",
            "predicted",
            "gap",
            "converged",
        ],
    );
    report.meta("gamma_plus", num(gp));
    report.meta("budget", common.budget);
    for n in n_min..=n_max {
        let lam = lambda_n(model, n, common.budget)?;
        let spectra = exact_return_spectra(model, n, &qs, common.budget)?;
        for (e, &p) in spectra.iter().zip(&predicted) {
            report.row(vec![
                n.to_string(),
                num(e.q),
                num(e.value),
                num(e.certified_error),
                num(e.value_shift),
                num(lam),
                num((lam - gp).abs()),
                num(p),
                num((e.value - p).abs()),
                e.all_converged.to_string(),
            ]);
        }
    }
    report.emit(common.out.as_deref())
}

fn quantile_cell(law: &EmpiricalLaw, p: f64) -> Result<(String, bool), Failure> {
    let q = law.quantile(p)?;
    let value = match q.value {
        Some(v) => v.to_string(),
        None => format!(">{}", law.cap()),
    };
    Ok((value, q.affected_by_censoring))
}

fn raw_values(law: &EmpiricalLaw) -> String {
    let mut out = String::from("value,censored\n");
    for v in law.values() {
        out.push_str(&format!("{v},false\n"));
    }
    for _ in 0..law.censored() {
        out.push_str(&format!("{},true\n", law.cap()));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    common: &Common,
    n: usize,
    replicas: usize,
    t_max: u64,
    mode: Mode,
    word: Option<&str>,
    raw: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = SimConfig::new(common.seed, replicas, t_max, n)?;
    let loaded = load_model(common)?;
    let model = &loaded.model;
    if mode == Mode::Explaw {
        let w = match word {
            Some(text) => Word::parse(text, model.alphabet_size())?,
            None => {
                let mut symbols = vec![1u16; n];
                symbols[0] = 0;
                Word::new(symbols, model.alphabet_size())?
            }
        };
        if w.len() != n {
            return Err(Failure::input(format!("--word has length {}, --n is {n}", w.len())));
        }
        let r = exponential_law_check(model, &w, &cfg)?;
        let mut report = Report::new(common, Some(&loaded.digest), &["t", "empirical", "predicted"]);
        report.meta("mode", "explaw");
        report.meta("word", &r.word);
        report.meta("mu", num(r.mu));
        report.meta("zeta", num(r.zeta));
        report.meta("tau", r.tau);
        report.meta("samples", r.samples);
        report.meta("censored", r.censored);
        report.meta("ks", num(r.ks));
        for p in &r.table {
            report.row(vec![num(p.t), num(p.empirical), num(p.predicted)]);
        }
        return report.emit(common.out.as_deref());
    }
    let law = match mode {
        Mode::Return => empirical_return(model, n, &cfg)?,
        _ => empirical_hitting(model, n, &cfg)?,
    };
    if let Some(path) = raw {
        write_bytes(Some(path), raw_values(&law).as_bytes())?;
    }
    let mut report = Report::new(
        common,
        Some(&loaded.digest),
        &["quantile", "value", "affected_by_censoring", "censoring_fraction"],
    );
    report.meta("mode", if mode == Mode::Return { "return" } else { "hitting" });
    report.meta("n", n);
    report.meta("samples", law.samples());
    report.meta("censored", law.censored());
    report.meta("cap", law.cap());
    report.meta("entropy", num(spectra::entropy(model)));
    let frac = num(law.censoring_fraction());
    for p in LEVELS {
        let (value, affected) = quantile_cell(&law, p)?;
        report.row(vec![num(p), value, affected.to_string(), frac.clone()]);
    }
    report.emit(common.out.as_deref())
}

fn rate_cells(v: &RateValue) -> (String, String) {
    let q = v.q_hat().map(num).unwrap_or_default();
    (num(v.value()), q)
}

pub fn rate(common: &Common, u_min: Option<f64>, u_max: Option<f64>, points: usize) -> Result<(), Failure> {
    let loaded = load_model(common)?;
    let model = &loaded.model;
    let h = spectra::entropy(model);
    if model.is_max_entropy() {
        // both rate functions are 0 at h and infinite elsewhere
        return Err(Failure::input("rate functions are degenerate for the maximal-entropy model"));
    }
    let (i_lo, i_hi) = ldp::domain(model, RateKind::I)?;
    let (j_lo, _) = ldp::domain(model, RateKind::J)?;
    let lo = u_min.unwrap_or(i_lo.min(j_lo));
    let hi = u_max.unwrap_or(i_hi);
    check_grid(lo, hi, points, "u")?;
    let mut us = grid(lo, hi, points);
    if h > lo && h < hi && !us.contains(&h) {
        let at = us.partition_point(|&u| u < h);
        us.insert(at, h);
    }
    let fi = RateFunction::new(model, RateKind::I, &us)?;
    let fj = RateFunction::new(model, RateKind::J, &us)?;
    let mut report = Report::new(
        common,
        Some(&loaded.digest),
        &["u", "I", "J", "q_hat_I", "q_hat_J", "in_domain_I", "in_domain_J"],
    );
    report.meta("entropy", num(h));
    report.meta("domain_I", format!("[{}, {})", num(fi.u_lo), num(fi.u_hi)));
    report.meta("domain_J", format!("({}, {})", num(fj.u_lo), num(fj.u_hi)));
    for (pi, pj) in fi.points.iter().zip(&fj.points) {
        let (iv, iq) = rate_cells(&pi.value);
        let (jv, jq) = rate_cells(&pj.value);
        report.row(vec![
            num(pi.u),
            iv,
            jv,
            iq,
            jq,
            fi.in_domain(pi.u).to_string(),
            fj.in_domain(pj.u).to_string(),
        ]);
    }
    report.emit(common.out.as_deref())
}

pub fn ldp(common: &Common, ns: &str, u: f64, tail: TailArg) -> Result<(), Failure> {
    let ns = ns
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Failure::input(format!("cannot parse word length {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let loaded = load_model(common)?;
    let tail = match tail {
        TailArg::Upper => Tail::Upper,
        TailArg::Lower => Tail::Lower,
    };
    let rows = ldp_compare(&loaded.model, &ns, u, tail, common.budget)?;
    let mut report = Report::new(
        common,
        Some(&loaded.digest),
        &["n", "u", "tail", "exact_rate", "I_value", "gap"],
    );
    report.meta("entropy", num(spectra::entropy(&loaded.model)));
    for r in rows {
        let tail = if r.tail == Tail::Upper { "upper" } else { "lower" };
        report.row(vec![
            r.n.to_string(),
            num(r.u),
            tail.into(),
            num(r.exact_rate),
            num(r.rate),
            num(r.gap),
        ]);
    }
    report.emit(common.out.as_deref())
}

pub fn gamma_check(common: &Common, s: Option<&str>, x: Option<&str>) -> Result<(), Failure> {
    let points = match (s, x) {
        (None, None) => gamma_bounds::default_grid(),
        (Some(s), Some(x)) => {
            let (ss, xs) = (parse_list(s, "s")?, parse_list(x, "x")?);
            ss.iter()
                .flat_map(|&s| xs.iter().map(move |&x| (s, x)))
                .collect()
        }
        _ => return Err(Failure::input("--s and --x must be given together")),
    };
    let report_data = verify_bounds(&points)?;
    let violations = report_data.violations().len();
    let model_digest = common.model.as_ref().map(|_| load_model(common)).transpose()?;
    let mut report = Report::new(
        common,
        model_digest.as_ref().map(|l| l.digest.as_str()),
        &["s", "x", "lhs", "mid", "rhs", "slack_lo", "slack_hi", "inequality_id"],
    );
    report.meta("grid_points", points.len());
    report.meta("violations", violations);
    report.meta("max_oracle_error", num(report_data.max_oracle_error));
    for r in &report_data.rows {
        report.row(vec![
            num(r.s),
            num(r.x),
            num(r.lhs),
            num(r.mid),
            num(r.rhs),
            num(r.slack_lo),
            num(r.slack_hi),
            r.inequality.id().into(),
        ]);
    }
    report.emit(common.out.as_deref())?;
    if violations > 0 {
        return Err(Failure::numeric(format!("{violations} inequality violations")));
    }
    Ok(())
}
