//! Seeded path simulation: empirical return and hitting times, and the
//! exponential law of the rescaled return time.
//!
//! Replica `r` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `r`,
//! so results do not depend on how replicas are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PotentialModel;
use crate::return_exact::{zeta, LawMode, ReturnLaw};
use crate::words::{border_array, Word, WordSpace};

/// Fewest uncensored samples the exponential-law check accepts.
pub const MIN_UNCENSORED: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicas: usize,
    /// Return and hitting times above this value are censored.
    pub t_max: u64,
    pub n: usize,
}

impl SimConfig {
    pub fn new(seed: u64, replicas: usize, t_max: u64, n: usize) -> Result<Self> {
        let cfg = SimConfig {
            seed,
            replicas,
            t_max,
            n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain("replicas must be at least 1".into()));
        }
        if self.t_max < 2 {
            return Err(Error::Domain(format!("t_max must be at least 2, got {}", self.t_max)));
        }
        if self.n == 0 {
            return Err(Error::Domain("word length must be at least 1".into()));
        }
        Ok(())
    }

    fn rng(&self, replica: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica as u64);
        rng
    }
}

/// A sample of positive integer times with right censoring at `cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmpiricalLaw {
    /// Uncensored values, sorted.
    values: Vec<u64>,
    censored: usize,
    cap: u64,
}

/// A quantile of a censored sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Quantile {
    /// `None` when the quantile lies among the censored samples.
    pub value: Option<u64>,
    pub affected_by_censoring: bool,
}

impl EmpiricalLaw {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = Option<u64>>, cap: u64) -> Self {
        let mut values = Vec::new();
        let mut censored = 0;
        for o in outcomes {
            match o {
                Some(v) if v <= cap => values.push(v),
                _ => censored += 1,
            }
        }
        values.sort_unstable();
        EmpiricalLaw {
            values,
            censored,
            cap,
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn censored(&self) -> usize {
        self.censored
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn samples(&self) -> usize {
        self.values.len() + self.censored
    }

    pub fn censoring_fraction(&self) -> f64 {
        self.censored as f64 / self.samples() as f64
    }

    /// Empirical `P(X <= t)`; exact for `t <= cap`.
    pub fn cdf(&self, t: u64) -> f64 {
        self.values.partition_point(|&v| v <= t) as f64 / self.samples() as f64
    }

    /// Lower empirical `p`-quantile, the `ceil(p N)`-th smallest sample.
    pub fn quantile(&self, p: f64) -> Result<Quantile> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1], got {p}")));
        }
        let rank = ((p * self.samples() as f64).ceil() as usize).max(1);
        Ok(if rank <= self.values.len() {
            Quantile {
                value: Some(self.values[rank - 1]),
                affected_by_censoring: false,
            }
        } else {
            Quantile {
                value: None,
                affected_by_censoring: true,
            }
        })
    }

    pub fn median(&self) -> Result<Quantile> {
        self.quantile(0.5)
    }

    /// Fraction of samples whose `(1/n) log X` is farther than `delta` from
    /// `center`, together with whether censoring made any sample
    /// undecidable (counted as deviating when the cap is already above the
    /// upper threshold).
    pub fn log_deviation_fraction(&self, n: usize, center: f64, delta: f64) -> (f64, bool) {
        let n = n as f64;
        let deviates = |v: u64| ((v as f64).ln() / n - center).abs() > delta;
        let mut count = self.values.iter().filter(|&&v| deviates(v)).count();
        let upper = (n * (center + delta)).exp();
        let decidable = self.censored == 0 || (self.cap as f64) >= upper;
        if decidable {
            count += self.censored;
        }
        (count as f64 / self.samples() as f64, decidable)
    }
}

/// Dvoretzky–Kiefer–Wolfowitz half-width at sample size `n`, level `alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Inverse-CDF sampler for the stationary chain on `m`-words.
struct Sampler {
    k: usize,
    states: usize,
    initial: Vec<f64>,
    rows: Vec<f64>,
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    let total = acc;
    out.iter_mut().for_each(|c| *c /= total);
    *out.last_mut().unwrap() = 1.0;
    out
}

#[inline]
fn draw(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl Sampler {
    fn new(model: &PotentialModel) -> Self {
        let k = model.alphabet_size();
        let states = model.states();
        let initial = cumulative(model.log_stationary().iter().map(|v| v.exp()));
        let fwd = model.log_forward();
        let mut rows = Vec::with_capacity(states * k);
        for s in 0..states {
            rows.extend(cumulative(fwd[s * k..(s + 1) * k].iter().map(|v| v.exp())));
        }
        Sampler {
            k,
            states,
            initial,
            rows,
        }
    }

    /// Draws the first `m` symbols, returning them and the state index.
    fn start(&self, m: usize, rng: &mut impl Rng) -> (Vec<u16>, usize) {
        let s = draw(&self.initial, rng.gen());
        let mut symbols = vec![0u16; m];
        let mut rest = s;
        for slot in symbols.iter_mut().rev() {
            *slot = (rest % self.k) as u16;
            rest /= self.k;
        }
        (symbols, s)
    }

    #[inline]
    fn next(&self, state: &mut usize, rng: &mut impl Rng) -> u16 {
        let row = &self.rows[*state * self.k..(*state + 1) * self.k];
        let a = draw(row, rng.gen());
        *state = (*state * self.k + a) % self.states;
        a as u16
    }
}

fn state_of(symbols: &[u16], k: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * k + s as usize)
}

/// A stationary path of the given length.
pub fn sample_path(model: &PotentialModel, length: usize, rng: &mut impl Rng) -> Vec<u16> {
    let sampler = Sampler::new(model);
    let m = model.memory();
    let (mut path, mut state) = sampler.start(m, rng);
    path.truncate(length);
    while path.len() < length {
        path.push(sampler.next(&mut state, rng));
    }
    path
}

/// Online pattern matcher over the failure function of `w`.
struct Scanner<'a> {
    w: &'a [u16],
    border: Vec<usize>,
    j: usize,
}

impl<'a> Scanner<'a> {
    fn new(w: &'a [u16]) -> Self {
        Scanner {
            w,
            border: border_array(w),
            j: 0,
        }
    }

    /// State after a full occurrence of `w`, excluding that occurrence.
    fn after_match(w: &'a [u16]) -> Self {
        let mut s = Scanner::new(w);
        s.j = s.border[w.len()];
        s
    }

    /// Feeds one symbol; true if an occurrence ends here.
    #[inline]
    fn feed(&mut self, a: u16) -> bool {
        while self.j > 0 && self.w[self.j] != a {
            self.j = self.border[self.j];
        }
        if self.w[self.j] == a {
            self.j += 1;
        }
        if self.j == self.w.len() {
            self.j = self.border[self.j];
            true
        } else {
            false
        }
    }
}

/// Return shift `S` of a path starting with `prefix` (length `>= n`, with at
/// least `m` symbols), continuing from `state`; `None` if `S >= t_max`.
fn return_shift(
    sampler: &Sampler,
    prefix: &[u16],
    n: usize,
    mut state: usize,
    t_max: u64,
    rng: &mut impl Rng,
) -> Option<u64> {
    let w = &prefix[..n];
    let mut scanner = Scanner::after_match(w);
    let mut s: u64 = 0;
    for &a in &prefix[n..] {
        s += 1;
        if scanner.feed(a) {
            return Some(s);
        }
    }
    while s + 1 < t_max {
        s += 1;
        if scanner.feed(sampler.next(&mut state, rng)) {
            return Some(s);
        }
    }
    None
}

/// Draws a stationary prefix of length `max(n, m)` and its final state.
fn stationary_prefix(
    sampler: &Sampler,
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> (Vec<u16>, usize) {
    let (mut path, mut state) = sampler.start(m, rng);
    while path.len() < n {
        path.push(sampler.next(&mut state, rng));
    }
    (path, state)
}

/// Empirical law of `R_n = S + 1`, censored above `t_max`.
pub fn empirical_return(model: &PotentialModel, n: usize, cfg: &SimConfig) -> Result<EmpiricalLaw> {
    cfg.validate()?;
    let sampler = Sampler::new(model);
    let m = model.memory();
    let outcomes: Vec<Option<u64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = cfg.rng(r);
            let (path, state) = stationary_prefix(&sampler, n, m, &mut rng);
            return_shift(&sampler, &path, n, state, cfg.t_max, &mut rng).map(|s| s + 1)
        })
        .collect();
    Ok(EmpiricalLaw::from_outcomes(outcomes, cfg.t_max))
}

/// Empirical law of the hitting time `T_w(y)` of `w = x_1^n` for independent
/// stationary `x` and `y`, censored above `t_max`.
pub fn empirical_hitting(model: &PotentialModel, n: usize, cfg: &SimConfig) -> Result<EmpiricalLaw> {
    cfg.validate()?;
    let sampler = Sampler::new(model);
    let m = model.memory();
    let outcomes: Vec<Option<u64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = cfg.rng(r);
            let (x, _) = stationary_prefix(&sampler, n, m, &mut rng);
            let w = &x[..n];
            let mut scanner = Scanner::new(w);
            let (y, mut state) = sampler.start(m, &mut rng);
            // an occurrence ending at symbol j starts at T = j - n + 1
            let last = cfg.t_max + n as u64 - 1;
            let mut j: u64 = 0;
            for &a in &y {
                j += 1;
                if scanner.feed(a) {
                    return Some(j + 1 - n as u64);
                }
            }
            while j < last {
                j += 1;
                if scanner.feed(sampler.next(&mut state, &mut rng)) {
                    return Some(j + 1 - n as u64);
                }
            }
            None
        })
        .collect();
    Ok(EmpiricalLaw::from_outcomes(outcomes, cfg.t_max))
}

/// Continuation of a path started on `[w]`: the prefix (at least `m`
/// symbols) and the resulting chain state.
fn conditioned_prefix(
    model: &PotentialModel,
    w: &Word,
    extensions: &Option<(Vec<Vec<u16>>, Vec<f64>)>,
    rng: &mut impl Rng,
) -> (Vec<u16>, usize) {
    let k = model.alphabet_size();
    let m = model.memory();
    let mut path = w.symbols().to_vec();
    if let Some((ext, cum)) = extensions {
        path.extend_from_slice(&ext[draw(cum, rng.gen())]);
    }
    let state = state_of(&path[path.len() - m..], k);
    (path, state)
}

/// Extensions `e` of length `m - n` with weights `mu(w e)`, when `n < m`.
fn extensions(model: &PotentialModel, w: &Word) -> Result<Option<(Vec<Vec<u16>>, Vec<f64>)>> {
    let m = model.memory();
    let n = w.len();
    if n >= m {
        return Ok(None);
    }
    let space = WordSpace::new(model.alphabet_size(), m - n, 1 << 20)?;
    let mut ext = Vec::new();
    let mut weights = Vec::new();
    for e in space.iter() {
        weights.push(model.cylinder_measure(&w.concat(&e)).exp());
        ext.push(e.symbols().to_vec());
    }
    Ok(Some((ext, cumulative(weights.into_iter()))))
}

/// Law of the return shift `S` started on `[w]`, censored at `S >= t_max`.
pub fn conditional_return(model: &PotentialModel, w: &Word, cfg: &SimConfig) -> Result<EmpiricalLaw> {
    cfg.validate()?;
    if w.alphabet_size() != model.alphabet_size() {
        return Err(Error::Domain("word and model alphabets differ".into()));
    }
    let sampler = Sampler::new(model);
    let ext = extensions(model, w)?;
    let outcomes: Vec<Option<u64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = cfg.rng(r);
            let (path, state) = conditioned_prefix(model, w, &ext, &mut rng);
            return_shift(&sampler, &path, w.len(), state, cfg.t_max, &mut rng)
        })
        .collect();
    Ok(EmpiricalLaw::from_outcomes(outcomes, cfg.t_max - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpLawPoint {
    pub t: f64,
    pub empirical: f64,
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpLawReport {
    pub word: String,
    pub mu: f64,
    pub zeta: f64,
    pub tau: usize,
    pub samples: usize,
    pub censored: usize,
    /// `sup_t |P_w(mu S <= t) - (1 - zeta e^{zeta mu tau} e^{-zeta t})|` over
    /// the uncensored range.
    pub ks: f64,
    pub table: Vec<ExpLawPoint>,
}

/// Compares the law of `mu(w) S` under `mu` conditioned on `[w]` with the
/// exponential prediction built from the exact `zeta(w)`.
pub fn exponential_law_check(model: &PotentialModel, w: &Word, cfg: &SimConfig) -> Result<ExpLawReport> {
    let law = conditional_return(model, w, cfg)?;
    if law.values().len() < MIN_UNCENSORED {
        return Err(Error::InsufficientSamples(format!(
            "{} uncensored return times, need at least {MIN_UNCENSORED}",
            law.values().len()
        )));
    }
    let mu = model.cylinder_measure(w).exp();
    let z = zeta(model, w);
    let (zeta, tau) = (z.zeta, z.tau.get());
    let predicted = |t: f64| 1.0 - zeta * (zeta * (mu * tau as f64 - t)).exp();
    let total = law.samples() as f64;
    let mut ks: f64 = 0.0;
    let values = law.values();
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let before = i as f64 / total;
        while i < values.len() && values[i] == v {
            i += 1;
        }
        let after = i as f64 / total;
        let p = predicted(mu * v as f64);
        ks = ks.max((before - p).abs()).max((after - p).abs());
    }
    let t_end = mu * law.cap() as f64;
    ks = ks.max((values.len() as f64 / total - predicted(t_end)).abs());
    let span = t_end.min(mu * tau as f64 + 7.0 / zeta);
    let table = (0..=100)
        .map(|i| {
            let t = span * i as f64 / 100.0;
            ExpLawPoint {
                t,
                empirical: law.cdf((t / mu).floor() as u64),
                predicted: predicted(t).max(0.0),
            }
        })
        .collect();
    Ok(ExpLawReport {
        word: w.to_string(),
        mu,
        zeta,
        tau,
        samples: law.samples(),
        censored: law.censored(),
        ks,
        table,
    })
}

/// Exact CDF of the return shift `S` averaged over `[w]`, `|w| = n`, as a
/// lower envelope: `cdf[t] <= P(S <= t) <= cdf[t] + residual`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureCdf {
    pub cdf: Vec<f64>,
    pub residual: f64,
}

pub fn exact_return_cdf(model: &PotentialModel, n: usize, cap: usize, budget: u128) -> Result<MixtureCdf> {
    // each word stops once its weighted surviving mass is below this
    const WEIGHTED_FLOOR: f64 = 1e-9;
    let space = WordSpace::new(model.alphabet_size(), n, budget)?;
    let mut pmf = vec![0.0f64; 2];
    let mut residual = 0.0;
    for block in space.blocks(64) {
        let parts: Vec<(f64, Vec<f64>)> = block
            .into_par_iter()
            .map(|i| {
                let w = space.word_at(i);
                let mu = model.cylinder_measure(&w).exp();
                let law = ReturnLaw::new(model, &w, LawMode::Return)?;
                Ok((mu, law.pmf_until(cap, WEIGHTED_FLOOR / mu)))
            })
            .collect::<Result<_>>()?;
        for (mu, p) in parts {
            if pmf.len() < p.len() {
                pmf.resize(p.len(), 0.0);
            }
            let mut mass = 0.0;
            for (slot, x) in pmf.iter_mut().zip(&p) {
                *slot += mu * x;
                mass += x;
            }
            residual += mu * (1.0 - mass).max(0.0);
        }
    }
    let mut acc = 0.0;
    let cdf = pmf
        .into_iter()
        .map(|x| {
            acc += x;
            acc.min(1.0)
        })
        .collect();
    Ok(MixtureCdf {
        cdf,
        residual: residual + 1e-12,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DkwReport {
    pub n: usize,
    pub samples: usize,
    pub censored: usize,
    /// Upper bound on `sup_t |F_empirical(t) - F_exact(t)|` for `S`.
    pub ks: f64,
    pub epsilon: f64,
    pub holds: bool,
}

/// Kolmogorov distance between the simulated return law and the exact one,
/// against the DKW band at level `alpha`.
pub fn dkw_check(model: &PotentialModel, n: usize, cfg: &SimConfig, alpha: f64, budget: u128) -> Result<DkwReport> {
    let emp = empirical_return(model, n, cfg)?;
    let exact = exact_return_cdf(model, n, cfg.t_max as usize, budget)?;
    let total = emp.samples() as f64;
    let values = emp.values();
    // empirical CDF of S = R - 1 evaluated at every integer up to the table
    let mut ks: f64 = 0.0;
    let mut i = 0;
    let last = exact.cdf.len() - 1;
    for (t, &c) in exact.cdf.iter().enumerate() {
        while i < values.len() && values[i] - 1 <= t as u64 {
            i += 1;
        }
        let fe = i as f64 / total;
        ks = ks.max((fe - c).abs() + exact.residual);
    }
    let fe_last = emp.cdf(last as u64 + 1);
    // beyond the table both CDFs lie in [min, 1]
    ks = ks.max(1.0 - fe_last.min(exact.cdf[last]));
    let epsilon = dkw_epsilon(emp.samples(), alpha);
    Ok(DkwReport {
        n,
        samples: emp.samples(),
        censored: emp.censored(),
        ks,
        epsilon,
        holds: ks <= epsilon,
    })
}
