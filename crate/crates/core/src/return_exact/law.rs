//! Exact laws of first return and first hitting, their moments with
//! certified remainders, and exact tails.

use serde::Serialize;

use super::automaton::{self, Seeds, Start};
use super::series::geometric_tail;
use super::DEFAULT_STATE_BUDGET;
use crate::error::{Error, Result};
use crate::model::PotentialModel;
use crate::words::{Word, WordSpace};

/// Relative width of the Collatz–Wielandt bracket at which stepping stops,
/// in units of `1 - rho`.
const GAP_TARGET: f64 = 1e-13;
/// Steps without improvement of the bracket before it counts as stalled.
const STALL_STEPS: usize = 64;
const STEP_CAP: usize = 2_000_000;
const DENSE_CAP: usize = 1024;
/// Share of the unit-mass iterate below which a state no longer informs the
/// decay estimate.
const FADED_SHARE: f64 = 1e-18;
/// Surviving mass below which a stalled bracket may stop stepping: the
/// mass bound on the remainder is then tight enough on its own.
const NEGLIGIBLE_MASS: f64 = 1e-30;
/// Shares this small are dominated by subnormal rounding and are left out
/// of the bracket entirely.
const UNDERFLOW_SHARE: f64 = 1e-250;
const ROUNDOFF_GAP: f64 = 64.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawMode {
    /// Shift `S >= 1` to the next occurrence, started on `[w]`.
    Return,
    /// Position `T >= 1` of the first occurrence in a stationary path.
    Hitting,
}

/// Exact law of the first return shift or first hitting position of a word.
#[derive(Clone, Debug)]
pub struct ReturnLaw {
    word: Word,
    mode: LawMode,
    start: Start,
    /// `value = count - offset` where `count` is the number of symbols read.
    offset: usize,
}

/// `E[X^q]` and `E[(X+1)^q]` with absolute certified errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moment {
    pub q: f64,
    pub value: f64,
    pub error: f64,
    pub shifted: f64,
    pub shifted_error: f64,
    /// Last value of `X` summed exactly.
    pub horizon: usize,
    /// Whether the geometric bracket reached its target width.
    pub converged: bool,
}

impl Moment {
    pub fn relative_error(&self) -> f64 {
        self.error / self.value.abs()
    }
}

/// `P(X > t) <= c_tail * rho_tail^t` for all `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCertificate {
    pub c_tail: f64,
    pub rho_tail: f64,
    pub steps: usize,
}

/// Exact stepping of the law, stopped once it is geometric to working precision.
#[derive(Clone, Debug)]
pub(crate) struct Run {
    /// `pmf[c]` = probability that the occurrence completes after `c` symbols.
    pub pmf: Vec<f64>,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub rho_hat: f64,
    /// `P(X > horizon)`, the mass not yet absorbed.
    pub remaining: f64,
    pub converged: bool,
}

impl ReturnLaw {
    pub fn new(model: &PotentialModel, word: &Word, mode: LawMode) -> Result<Self> {
        Self::with_budget(model, word, mode, DEFAULT_STATE_BUDGET)
    }

    pub fn with_budget(
        model: &PotentialModel,
        word: &Word,
        mode: LawMode,
        budget: usize,
    ) -> Result<Self> {
        if word.alphabet_size() != model.alphabet_size() {
            return Err(Error::Domain(format!(
                "word over {} symbols, model over {}",
                word.alphabet_size(),
                model.alphabet_size()
            )));
        }
        let seeds = match mode {
            LawMode::Return => return_seeds(model, word),
            LawMode::Hitting => hitting_seeds(model, word),
        };
        let start = automaton::build(model, word, seeds, budget)?;
        let offset = match mode {
            LawMode::Return => 0,
            LawMode::Hitting => word.len() - 1,
        };
        Ok(ReturnLaw {
            word: word.clone(),
            mode,
            start,
            offset,
        })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn mode(&self) -> LawMode {
        self.mode
    }

    pub fn states(&self) -> usize {
        self.start.chain.len()
    }

    /// `P(X = t)` for `t = 0..=horizon`.
    pub fn pmf(&self, horizon: usize) -> Vec<f64> {
        let counts = horizon + self.offset;
        let mut by_count = vec![0.0; counts + 1];
        for &(c, p) in &self.start.early {
            if c <= counts {
                by_count[c] += p;
            }
        }
        let chain = &self.start.chain;
        let mut v = self.start.initial.clone();
        let mut next = vec![0.0; v.len()];
        for c in self.start.count0..counts {
            by_count[c + 1] = dot(&v, &chain.exit);
            chain.step(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        by_count[self.offset..].to_vec()
    }

    /// Like [`ReturnLaw::pmf`], but stops as soon as the surviving mass
    /// drops to `floor` (or at `cap`). The last entry of the returned vector
    /// is followed by a tail of mass at most `floor` unless `cap` was hit.
    pub fn pmf_until(&self, cap: usize, floor: f64) -> Vec<f64> {
        let counts = cap + self.offset;
        let last_early = self.start.early.iter().map(|e| e.0).max().unwrap_or(0);
        let mut by_count = vec![0.0; self.start.count0.max(last_early).min(counts) + 1];
        for &(c, p) in &self.start.early {
            if c <= counts {
                by_count[c] += p;
            }
        }
        let chain = &self.start.chain;
        let mut v = self.start.initial.clone();
        let mut next = vec![0.0; v.len()];
        for c in self.start.count0..counts {
            if c >= last_early && c >= self.offset && v.iter().sum::<f64>() <= floor {
                break;
            }
            if by_count.len() <= c + 1 {
                by_count.resize(c + 2, 0.0);
            }
            by_count[c + 1] = dot(&v, &chain.exit);
            chain.step(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        if by_count.len() <= self.offset {
            by_count.resize(self.offset + 1, 0.0);
        }
        by_count[self.offset..].to_vec()
    }

    pub(crate) fn run(&self) -> Run {
        let chain = &self.start.chain;
        let c0 = self.start.count0;
        let mut pmf = vec![0.0; c0 + 1];
        for &(c, p) in &self.start.early {
            pmf[c] += p;
        }
        let mut v = self.start.initial.clone();
        let mut next = vec![0.0; v.len()];
        // v is kept at unit mass; `mass` is its true mass.
        let mut mass: f64 = v.iter().sum();
        let finished = |pmf: Vec<f64>| Run {
            pmf,
            rho_lo: 0.0,
            rho_hi: 0.0,
            rho_hat: 0.0,
            remaining: 0.0,
            converged: true,
        };
        if mass == 0.0 {
            return finished(pmf);
        }
        v.iter_mut().for_each(|x| *x /= mass);
        let mut best_gap = f64::INFINITY;
        let mut since_best = 0usize;
        let mut steps = 0usize;
        loop {
            let exit = dot(&v, &chain.exit);
            pmf.push(mass * exit);
            chain.step(&v, &mut next);
            steps += 1;
            // `lo`/`hi` bound next/v on every state; `lo_main` skips states
            // whose share has faded, which only matters for the estimate.
            let (mut lo, mut hi, mut lo_main) = (f64::INFINITY, 0.0f64, f64::INFINITY);
            for (a, b) in v.iter().zip(&next) {
                if *a >= UNDERFLOW_SHARE {
                    let r = b / a;
                    lo = lo.min(r);
                    hi = hi.max(r);
                    if *a >= FADED_SHARE {
                        lo_main = lo_main.min(r);
                    }
                } else if *b >= UNDERFLOW_SHARE {
                    hi = f64::INFINITY;
                }
            }
            let survive: f64 = next.iter().sum();
            if survive == 0.0 {
                return finished(pmf);
            }
            let exit_next = dot(&next, &chain.exit) / survive;
            let rho_hat = (1.0 - exit_next).clamp(lo_main.min(hi), hi);
            let new_mass = mass * survive;
            let gap = hi - lo;
            // below a few ulps the ratios are rounding noise
            let converged =
                gap.is_finite() && gap <= (GAP_TARGET * (1.0 - rho_hat)).max(ROUNDOFF_GAP * hi);
            if gap.is_finite() {
                if gap < best_gap * (1.0 - 1e-3) {
                    best_gap = gap;
                    since_best = 0;
                } else {
                    since_best += 1;
                }
            }
            let stalled = since_best >= STALL_STEPS && new_mass <= NEGLIGIBLE_MASS;
            if converged || stalled || new_mass < 1e-300 || steps >= STEP_CAP {
                return Run {
                    pmf,
                    rho_lo: lo,
                    rho_hi: hi,
                    rho_hat,
                    remaining: new_mass,
                    converged,
                };
            }
            std::mem::swap(&mut v, &mut next);
            v.iter_mut().for_each(|x| *x /= survive);
            mass = new_mass;
        }
    }

    /// Moments for several exponents from one exact run.
    pub fn moments(&self, qs: &[f64]) -> Result<Vec<Moment>> {
        let run = self.run();
        qs.iter().map(|&q| self.moment_from(&run, q)).collect()
    }

    pub fn moment(&self, q: f64) -> Result<Moment> {
        Ok(self.moments(&[q])?[0])
    }

    pub(crate) fn moment_from(&self, run: &Run, q: f64) -> Result<Moment> {
        if !q.is_finite() {
            return Err(Error::Domain(format!("moment order must be finite, got {q}")));
        }
        let last = run.pmf.len() - 1;
        let horizon = last - self.offset;
        if q == 0.0 {
            return Ok(Moment {
                q,
                value: 1.0,
                error: 0.0,
                shifted: 1.0,
                shifted_error: 0.0,
                horizon,
                converged: run.converged,
            });
        }
        if run.rho_hi >= 1.0 && q > 0.0 && run.remaining > 0.0 {
            return Err(Error::NonConvergence(format!(
                "no geometric tail bound for word {} (rho_hi = {})",
                self.word, run.rho_hi
            )));
        }
        let eps = f64::EPSILON;
        let mut out = [0.0f64; 2];
        let mut err = [0.0f64; 2];
        for (slot, shift) in [0.0, 1.0].into_iter().enumerate() {
            let mut head = 0.0;
            for (c, &p) in run.pmf.iter().enumerate().skip(self.offset) {
                if p > 0.0 {
                    head += p * ((c - self.offset) as f64 + shift).powf(q);
                }
            }
            let p_last = run.pmf[last];
            let h = horizon as f64 + shift;
            let tail = |rho: f64| {
                if rho >= 1.0 {
                    f64::INFINITY
                } else if p_last == 0.0 || rho <= 0.0 {
                    0.0
                } else {
                    p_last * rho * geometric_tail(q, h, rho)
                }
            };
            // Componentwise bracket: pmf(last + k) within p_last rho^k.
            let (cw_lo, cw_hi) = if run.rho_hi < 1.0 {
                (tail(run.rho_lo), tail(run.rho_hi))
            } else {
                (0.0, f64::INFINITY)
            };
            // Mass bracket: all remaining mass sits at values above `h`, and
            // P(X > last + k) <= remaining rho_hi^k.
            let m = run.remaining;
            let (mass_lo, mass_hi) = if m == 0.0 {
                (0.0, 0.0)
            } else if q > 0.0 {
                let upper = if run.rho_hi < 1.0 {
                    m * geometric_tail(q, h, run.rho_hi)
                } else {
                    f64::INFINITY
                };
                (m * (h + 1.0).powf(q), upper)
            } else {
                (0.0, m * (h + 1.0).powf(q))
            };
            let lower = cw_lo.max(mass_lo);
            let upper = cw_hi.min(mass_hi).max(lower);
            let hat = if run.rho_hat < 1.0 { tail(run.rho_hat) } else { upper };
            let hat = hat.clamp(lower, upper);
            let value = head + hat;
            let rounding = 4.0 * (run.pmf.len() as f64).sqrt() * eps * head + 1e-13 * hat;
            out[slot] = value;
            err[slot] = (upper - hat).max(hat - lower) + rounding;
        }
        Ok(Moment {
            q,
            value: out[0],
            error: err[0],
            shifted: out[1],
            shifted_error: err[1],
            horizon,
            converged: run.converged || err[1] <= 1e-12 * out[1],
        })
    }

    /// `(P(X > t), relative rounding bound)` by repeated squaring.
    pub fn survival(&self, t: u64) -> Result<(f64, f64)> {
        let counts = t.saturating_add(self.offset as u64);
        let c0 = self.start.count0 as u64;
        let early_after: f64 = self
            .start
            .early
            .iter()
            .filter(|(c, _)| *c as u64 > counts)
            .map(|(_, p)| p)
            .sum();
        if counts < c0 {
            let mass: f64 = self.start.initial.iter().sum();
            return Ok((mass + early_after, 4.0 * f64::EPSILON));
        }
        let n = self.states();
        if n > DENSE_CAP {
            return Err(Error::BudgetExceeded {
                what: "dense return-law states",
                needed: n as u128,
                cap: DENSE_CAP as u128,
            });
        }
        let gamma = n as f64 * f64::EPSILON / (1.0 - n as f64 * f64::EPSILON);
        let mut power = self.start.chain.dense();
        let mut power_err = 0.0f64;
        let mut u = vec![1.0; n];
        let mut u_err = 0.0f64;
        let mut e = counts - c0;
        let mut scratch = vec![0.0; n * n];
        let mut tmp = vec![0.0; n];
        while e > 0 {
            if e & 1 == 1 {
                mat_vec(&power, &u, &mut tmp, n);
                std::mem::swap(&mut u, &mut tmp);
                u_err = (1.0 + u_err) * (1.0 + power_err) * (1.0 + gamma) - 1.0;
            }
            e >>= 1;
            if e > 0 {
                mat_mul(&power, &power, &mut scratch, n);
                std::mem::swap(&mut power, &mut scratch);
                power_err = (1.0 + power_err).powi(2) * (1.0 + gamma) - 1.0;
            }
        }
        let value = dot(&self.start.initial, &u);
        let rel = (1.0 + u_err) * (1.0 + gamma) - 1.0;
        Ok((value, rel))
    }

    /// Survival bound from the `t0`-step operator norm, `t0 = 4 * states`.
    pub fn tail_certificate(&self) -> TailCertificate {
        let chain = &self.start.chain;
        let n = chain.len();
        let t0 = 4 * n.max(1);
        let mut u = vec![1.0; n];
        let mut tmp = vec![0.0; n];
        for _ in 0..t0 {
            chain.apply(&u, &mut tmp);
            std::mem::swap(&mut u, &mut tmp);
        }
        let norm = u.iter().cloned().fold(0.0, f64::max);
        let rho = norm.powf(1.0 / t0 as f64);
        // P(X > t) <= norm^{floor(s / t0)} with s = t + offset - count0 steps
        let shift = self.start.count0 as f64 + t0 as f64 - 1.0 - self.offset as f64;
        TailCertificate {
            c_tail: if rho > 0.0 { rho.powf(-shift) } else { 1.0 },
            rho_tail: rho,
            steps: t0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(a: &[f64], u: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        out[i] = dot(&a[i * n..(i + 1) * n], u);
    }
}

fn mat_mul(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        for l in 0..n {
            let ail = a[i * n + l];
            if ail == 0.0 {
                continue;
            }
            let (row, brow) = (&mut out[i * n..(i + 1) * n], &b[l * n..(l + 1) * n]);
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
}

fn return_seeds(model: &PotentialModel, w: &Word) -> Seeds {
    let n = w.len();
    let m = model.memory();
    let k = model.alphabet_size();
    let dfa = automaton::matching_automaton(w);
    let border = w.borders()[n];
    if n >= m {
        let s = model.window_index(&w.symbols()[n - m..]);
        return Seeds {
            entries: vec![(border, s, 1.0)],
            count0: 0,
            early: Vec::new(),
        };
    }
    // The Markov state is not determined by w: enumerate the missing symbols.
    let extra = m - n;
    let log_w = model.cylinder_measure(w);
    let space = WordSpace::new(k, extra, u128::MAX).expect("extension space");
    let mut entries = Vec::new();
    let mut early = vec![0.0; extra + 1];
    for e in space.iter() {
        let full = w.concat(&e);
        let weight = (model.cylinder_measure(&full) - log_w).exp();
        let mut j = border;
        let mut hit = None;
        for (i, &a) in e.symbols().iter().enumerate() {
            j = dfa[j * k + a as usize];
            if j == n {
                hit = Some(i + 1);
                break;
            }
        }
        match hit {
            Some(c) => early[c] += weight,
            None => entries.push((j, model.window_index(full.symbols()), weight)),
        }
    }
    Seeds {
        entries,
        count0: extra,
        early: early.into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect(),
    }
}

fn hitting_seeds(model: &PotentialModel, w: &Word) -> Seeds {
    let n = w.len();
    let m = model.memory();
    let k = model.alphabet_size();
    let dfa = automaton::matching_automaton(w);
    let pi = model.stationary();
    let space = WordSpace::new(k, m, u128::MAX).expect("state space");
    let mut entries = Vec::new();
    let mut early = vec![0.0; m + 1];
    for y in space.iter() {
        let weight = pi[model.window_index(y.symbols())];
        let mut j = 0;
        let mut hit = None;
        for (i, &a) in y.symbols().iter().enumerate() {
            j = dfa[j * k + a as usize];
            if j == n {
                hit = Some(i + 1);
                break;
            }
        }
        match hit {
            Some(c) => early[c] += weight,
            None => entries.push((j, model.window_index(y.symbols()), weight)),
        }
    }
    Seeds {
        entries,
        count0: m,
        early: early.into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect(),
    }
}
