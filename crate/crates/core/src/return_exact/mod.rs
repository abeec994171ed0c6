//! Exact finite-`n` return statistics: the exit probability `zeta`, the
//! periodic-word rate `Lambda^(n)`, exact moments of return shifts summed
//! over all words, and exact tail probabilities of `R_n = S + 1`.

mod automaton;
mod law;
mod series;

pub use law::{LawMode, Moment, ReturnLaw, TailCertificate};

use serde::Serialize;

use crate::error::Result;
use crate::model::PotentialModel;
use crate::reduce::{par_blocks, par_log_sum, LogSum};
use crate::words::{concat_prefix, tau, Period, Word, WordSpace};

/// Default cap on `(n + 1) K^m`, the automaton state count of one word.
pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

const MAX_LOWER_HORIZON: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaValue {
    pub word: Word,
    pub zeta: f64,
    pub tau: Period,
}

/// `zeta(w) = 1 - mu(w_1^tau w) / mu(w)`: the probability, started on `[w]`,
/// that the next occurrence is not at the minimal shift.
pub fn zeta(model: &PotentialModel, w: &Word) -> ZetaValue {
    let diff = model.cylinder_measure(&concat_prefix(w)) - model.cylinder_measure(w);
    ZetaValue {
        word: w.clone(),
        zeta: -diff.exp_m1(),
        tau: tau(w),
    }
}

/// `exp(-2 sum_k var_k) e^{inf phi}`, a lower bound for `zeta` over all words.
pub fn zeta_lower_bound(model: &PotentialModel) -> f64 {
    (-2.0 * model.variation_sum() + model.phi_min()).exp()
}

pub fn return_law(model: &PotentialModel, w: &Word, mode: LawMode) -> Result<ReturnLaw> {
    ReturnLaw::new(model, w, mode)
}

pub fn moment(law: &ReturnLaw, q: f64) -> Result<Moment> {
    law.moment(q)
}

/// `(1/n) log sum_w (1 - zeta(w)) mu(w)`.
pub fn lambda_n(model: &PotentialModel, n: usize, budget: u128) -> Result<f64> {
    let space = WordSpace::new(model.alphabet_size(), n, budget)?;
    let total = par_log_sum(&space, |w| model.cylinder_measure(&concat_prefix(w)));
    Ok(total / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactSpectrum {
    pub n: usize,
    pub q: f64,
    /// `(1/n) log sum_w mu(w) E_w[(S+1)^q]`.
    pub value: f64,
    pub certified_error: f64,
    /// Same with `S^q` in place of `(S+1)^q`.
    pub value_shift: f64,
    pub shift_error: f64,
    /// Whether every word's geometric bracket reached its target width.
    pub all_converged: bool,
}

/// Exact return-time spectrum at one `q`.
pub fn exact_return_spectrum(
    model: &PotentialModel,
    n: usize,
    q: f64,
    budget: u128,
) -> Result<ExactSpectrum> {
    Ok(exact_return_spectra(model, n, &[q], budget)?[0])
}

#[derive(Clone, Copy, Default)]
struct Acc {
    value: LogSum,
    error: LogSum,
    value_shift: LogSum,
    error_shift: LogSum,
}

/// Exact return-time spectra for several `q` from one law per word.
pub fn exact_return_spectra(
    model: &PotentialModel,
    n: usize,
    qs: &[f64],
    budget: u128,
) -> Result<Vec<ExactSpectrum>> {
    let space = WordSpace::new(model.alphabet_size(), n, budget)?;
    let blocks = par_blocks(&space, |range| -> Result<(Vec<Acc>, bool)> {
        let mut acc = vec![Acc::default(); qs.len()];
        let mut converged = true;
        for i in range {
            let w = space.word_at(i);
            let log_mu = model.cylinder_measure(&w);
            let law = ReturnLaw::new(model, &w, LawMode::Return)?;
            for (slot, m) in acc.iter_mut().zip(law.moments(qs)?) {
                converged &= m.converged;
                slot.value.add(log_mu + m.shifted.ln());
                slot.error.add(log_mu + m.shifted_error.ln());
                slot.value_shift.add(log_mu + m.value.ln());
                slot.error_shift.add(log_mu + m.error.ln());
            }
        }
        Ok((acc, converged))
    });
    let mut total = vec![Acc::default(); qs.len()];
    let mut all_converged = true;
    for block in blocks {
        let (acc, converged) = block?;
        all_converged &= converged;
        for (t, a) in total.iter_mut().zip(acc) {
            t.value = t.value.merge(a.value);
            t.error = t.error.merge(a.error);
            t.value_shift = t.value_shift.merge(a.value_shift);
            t.error_shift = t.error_shift.merge(a.error_shift);
        }
    }
    let nf = n as f64;
    let log_error = |v: &LogSum, e: &LogSum| {
        let rel = (e.value() - v.value()).exp();
        if rel < 1.0 {
            -(-rel).ln_1p() / nf
        } else {
            f64::INFINITY
        }
    };
    Ok(qs
        .iter()
        .zip(total)
        .map(|(&q, t)| ExactSpectrum {
            n,
            q,
            value: if q == 0.0 { 0.0 } else { t.value.value() / nf },
            certified_error: if q == 0.0 { 0.0 } else { log_error(&t.value, &t.error) },
            value_shift: if q == 0.0 { 0.0 } else { t.value_shift.value() / nf },
            shift_error: if q == 0.0 { 0.0 } else { log_error(&t.value_shift, &t.error_shift) },
            all_converged,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailValue {
    /// `log P(R_n > L)`.
    pub log_p: f64,
    /// Bound on the rounding error of `log_p`.
    pub log_error: f64,
}

/// `log P(R_n > L)` with `R_n = S + 1`.
pub fn exact_tail(model: &PotentialModel, n: usize, l: f64, budget: u128) -> Result<TailValue> {
    if l < 2.0 {
        return Ok(TailValue {
            log_p: 0.0,
            log_error: 0.0,
        });
    }
    if !l.is_finite() {
        return Ok(TailValue {
            log_p: f64::NEG_INFINITY,
            log_error: 0.0,
        });
    }
    // R_n > L  <=>  S > floor(L - 1)
    let t = (l - 1.0).floor() as u64;
    let space = WordSpace::new(model.alphabet_size(), n, budget)?;
    let blocks = par_blocks(&space, |range| -> Result<(LogSum, f64)> {
        let mut acc = LogSum::ZERO;
        let mut worst: f64 = 0.0;
        for i in range {
            let w = space.word_at(i);
            let law = ReturnLaw::new(model, &w, LawMode::Return)?;
            let (p, rel) = law.survival(t)?;
            worst = worst.max(rel);
            acc.add(model.cylinder_measure(&w) + p.ln());
        }
        Ok((acc, worst))
    });
    let mut total = LogSum::ZERO;
    let mut worst: f64 = 0.0;
    for block in blocks {
        let (acc, rel) = block?;
        total = total.merge(acc);
        worst = worst.max(rel);
    }
    Ok(TailValue {
        log_p: total.value().min(0.0),
        log_error: worst.ln_1p() + 8.0 * f64::EPSILON,
    })
}

/// `log P(R_n < L)` with `R_n = S + 1`, by exact stepping up to `L`.
pub fn exact_lower_tail(
    model: &PotentialModel,
    n: usize,
    l: f64,
    budget: u128,
) -> Result<TailValue> {
    if l <= 2.0 {
        return Ok(TailValue {
            log_p: f64::NEG_INFINITY,
            log_error: 0.0,
        });
    }
    // R_n < L  <=>  S <= ceil(L) - 2
    let last = (l.ceil() - 2.0) as u64;
    if last > MAX_LOWER_HORIZON {
        return Err(crate::Error::BudgetExceeded {
            what: "lower-tail horizon",
            needed: last as u128,
            cap: MAX_LOWER_HORIZON as u128,
        });
    }
    let space = WordSpace::new(model.alphabet_size(), n, budget)?;
    let blocks = par_blocks(&space, |range| -> Result<LogSum> {
        let mut acc = LogSum::ZERO;
        for i in range {
            let w = space.word_at(i);
            let law = ReturnLaw::new(model, &w, LawMode::Return)?;
            let p: f64 = law.pmf(last as usize).iter().sum();
            acc.add(model.cylinder_measure(&w) + p.ln());
        }
        Ok(acc)
    });
    let mut total = LogSum::ZERO;
    for block in blocks {
        total = total.merge(block?);
    }
    Ok(TailValue {
        log_p: total.value().min(0.0),
        log_error: 1e-12 + (last as f64) * 4.0 * f64::EPSILON,
    })
}

#[cfg(test)]
mod tests;
