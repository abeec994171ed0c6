//! Finite-memory potentials, their normalization into `g`-functions, and the
//! stationary measure they induce.
//!
//! Tables indexed by `(m+1)`-words use lexicographic order. The potential
//! follows the one-sided convention `phi(x) = phi(x_1 .. x_{m+1})`, with
//! normalization `sum_a exp(phi(a x)) = 1`: `g(a s)` is the probability of
//! the symbol `a` given the `m` symbols `s` that follow it. Forward
//! transition probabilities are derived from `g` and the stationary law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perron::{self, Graph};
use crate::reduce::log_sum_exp;
use crate::words::Word;

/// Largest supported number of `m`-word states.
pub const MAX_STATES: usize = 4096;

const ROW_TOLERANCE_INPUT: f64 = 1e-12;
const ROW_TOLERANCE_NORMALIZED: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// `weights[s·a] = P(next = a | previous m symbols = s)`.
    Transition,
    /// `weights[x] = phi(x)` on `(m+1)`-words, natural-log scale.
    Potential,
}

/// Declarative model description, as read from a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub alphabet_size: usize,
    pub memory: usize,
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

impl ModelSpec {
    /// Product measure with symbol probabilities `p`.
    pub fn bernoulli(p: &[f64]) -> Self {
        ModelSpec {
            alphabet_size: p.len(),
            memory: 0,
            kind: ModelKind::Transition,
            weights: p.to_vec(),
            normalize: None,
        }
    }

    /// First-order chain with row-stochastic matrix `rows[i][j] = P(i, j)`.
    pub fn markov(rows: &[Vec<f64>]) -> Self {
        ModelSpec {
            alphabet_size: rows.len(),
            memory: 1,
            kind: ModelKind::Transition,
            weights: rows.iter().flatten().cloned().collect(),
            normalize: None,
        }
    }

    /// Uniform (maximal entropy) measure on `k` symbols.
    pub fn uniform(k: usize) -> Self {
        ModelSpec::bernoulli(&vec![1.0 / k as f64; k])
    }

    pub fn potential(alphabet_size: usize, memory: usize, phi: Vec<f64>) -> Self {
        ModelSpec {
            alphabet_size,
            memory,
            kind: ModelKind::Potential,
            weights: phi,
            normalize: Some(true),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    /// Compact JSON; parsing it back yields an identical spec.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serializes")
    }
}

/// A normalized finite-memory model and its stationary measure.
#[derive(Clone, Debug)]
pub struct PotentialModel {
    spec: ModelSpec,
    k: usize,
    m: usize,
    graph: Graph,
    raw_phi: Vec<f64>,
    log_g: Vec<f64>,
    log_fwd: Vec<f64>,
    log_lambda: f64,
    eigenfunction: Vec<f64>,
    log_pi: Vec<f64>,
    /// `log_marginal[l - 1]` is the law of the first `l` symbols, `l = 1..=m`.
    log_marginal: Vec<Vec<f64>>,
    variations: Vec<f64>,
}

impl PotentialModel {
    pub fn normalize(spec: &ModelSpec) -> Result<Self> {
        let k = spec.alphabet_size;
        if k < 2 {
            return Err(Error::InvalidModel(format!(
                "alphabet_size must be at least 2, got {k}"
            )));
        }
        let declared = spec.memory;
        let m = declared.max(1);
        let states = checked_states(k, m)?;
        let expected = states
            .checked_mul(if declared == 0 { 1 } else { k })
            .ok_or_else(|| Error::InvalidModel("weight table too large".into()))?;
        let expected = if declared == 0 { k } else { expected };
        if spec.weights.len() != expected {
            return Err(Error::InvalidModel(format!(
                "expected {expected} weights for alphabet_size={k}, memory={declared}, got {}",
                spec.weights.len()
            )));
        }
        if let Some(bad) = spec.weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite weight {bad}")));
        }
        let graph = Graph::new(k, m);
        let weights = lift(spec, k, graph);

        let (raw_phi, log_g, log_lambda, eigenfunction) = match spec.kind {
            ModelKind::Transition => {
                if spec.normalize == Some(true) {
                    return Err(Error::InvalidModel(
                        "normalize applies to kind=\"potential\" only".into(),
                    ));
                }
                if let Some(bad) = weights.iter().find(|&&w| w <= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "transition probabilities must be strictly positive, got {bad}"
                    )));
                }
                let fwd = normalized_rows(&weights, k, ROW_TOLERANCE_INPUT, |x| x / k)?;
                let pi = perron::stationary(graph, &fwd, |x| graph.past(x), |x| graph.future(x))?;
                let log_g: Vec<f64> = (0..graph.edges())
                    .map(|x| pi[graph.past(x)].ln() + fwd[x].ln() - pi[graph.future(x)].ln())
                    .collect();
                let g = normalized_rows(
                    &log_g.iter().map(|v| v.exp()).collect::<Vec<_>>(),
                    k,
                    ROW_TOLERANCE_NORMALIZED,
                    |x| graph.future(x),
                )?;
                let log_g: Vec<f64> = g.iter().map(|v| v.ln()).collect();
                (log_g.clone(), log_g, 0.0, vec![1.0; states])
            }
            ModelKind::Potential => {
                if spec.normalize.unwrap_or(true) {
                    let shift = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = weights.iter().map(|p| (p - shift).exp()).collect();
                    let (lambda, f) = perron::right_perron(graph, &w)?;
                    let g: Vec<f64> = (0..graph.edges())
                        .map(|x| w[x] * f[graph.past(x)] / (lambda * f[graph.future(x)]))
                        .collect();
                    let g = normalized_rows(&g, k, ROW_TOLERANCE_NORMALIZED, |x| graph.future(x))?;
                    let log_g = g.iter().map(|v| v.ln()).collect();
                    (weights, log_g, lambda.ln() + shift, f)
                } else {
                    let g: Vec<f64> = weights.iter().map(|p| p.exp()).collect();
                    let g = normalized_rows(&g, k, ROW_TOLERANCE_INPUT, |x| graph.future(x))?;
                    let log_g = g.iter().map(|v| v.ln()).collect();
                    (weights, log_g, 0.0, vec![1.0; states])
                }
            }
        };

        let g: Vec<f64> = log_g.iter().map(|v| v.exp()).collect();
        let pi = perron::stationary(graph, &g, |x| graph.future(x), |x| graph.past(x))?;
        let log_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        let fwd: Vec<f64> = (0..graph.edges())
            .map(|x| g[x] * pi[graph.future(x)] / pi[graph.past(x)])
            .collect();
        let fwd = normalized_rows(&fwd, k, ROW_TOLERANCE_NORMALIZED, |x| x / k)?;
        let log_fwd = fwd.iter().map(|v| v.ln()).collect();

        let log_marginal = marginals(&log_pi, k, m);
        let variations = variations(&log_g, k, m);

        Ok(PotentialModel {
            spec: spec.clone(),
            k,
            m,
            graph,
            raw_phi,
            log_g,
            log_fwd,
            log_lambda,
            eigenfunction,
            log_pi,
            log_marginal,
            variations,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    /// Internal memory (at least 1; memoryless specs are lifted).
    pub fn memory(&self) -> usize {
        self.m
    }

    pub fn states(&self) -> usize {
        self.graph.states
    }

    pub(crate) fn graph(&self) -> Graph {
        self.graph
    }

    /// Potential as given (for transition specs, the normalized potential).
    pub fn raw_phi(&self) -> &[f64] {
        &self.raw_phi
    }

    /// Normalized potential `phi = log g` on `(m+1)`-words.
    pub fn log_g(&self) -> &[f64] {
        &self.log_g
    }

    /// `log P(x_{m+1} | x_1 .. x_m)` on `(m+1)`-words.
    pub fn log_forward(&self) -> &[f64] {
        &self.log_fwd
    }

    /// Pressure of the raw potential.
    pub fn log_lambda(&self) -> f64 {
        self.log_lambda
    }

    pub fn eigenfunction(&self) -> &[f64] {
        &self.eigenfunction
    }

    pub fn log_stationary(&self) -> &[f64] {
        &self.log_pi
    }

    pub fn stationary(&self) -> Vec<f64> {
        self.log_pi.iter().map(|v| v.exp()).collect()
    }

    /// `var_j(phi)` for `j = 1..=m`; zero beyond.
    pub fn variations(&self) -> &[f64] {
        &self.variations
    }

    pub fn variation_sum(&self) -> f64 {
        self.variations.iter().sum()
    }

    /// `sum_{j<=n} var_j(phi) = n·eps_n`.
    pub fn variation_partial_sum(&self, n: usize) -> f64 {
        self.variations.iter().take(n).sum()
    }

    /// Cylinder constant `C = exp(sum_j var_j(phi))`.
    pub fn quasi_bernoulli_c(&self) -> f64 {
        self.variation_sum().exp()
    }

    /// Concatenation constant `D = C^3`.
    pub fn quasi_bernoulli_d(&self) -> f64 {
        (3.0 * self.variation_sum()).exp()
    }

    pub fn phi_min(&self) -> f64 {
        self.log_g.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `g ≡ 1/K` to within `1e-12`: the measure of maximal entropy.
    pub fn is_max_entropy(&self) -> bool {
        let u = 1.0 / self.k as f64;
        self.log_g.iter().all(|lg| (lg.exp() - u).abs() <= 1e-12)
    }

    #[inline]
    pub(crate) fn window_index(&self, symbols: &[u16]) -> usize {
        symbols
            .iter()
            .fold(0usize, |acc, &s| acc * self.k + s as usize)
    }

    /// Exact `log mu([w])`.
    pub fn cylinder_measure(&self, w: &Word) -> f64 {
        self.log_measure(w.symbols())
    }

    pub(crate) fn log_measure(&self, s: &[u16]) -> f64 {
        let n = s.len();
        let m = self.m;
        if n <= m {
            return self.log_marginal[n - 1][self.window_index(s)];
        }
        let span = self.graph.edges();
        let mut x = self.window_index(&s[..m + 1]);
        let mut total = self.log_g[x];
        for &sym in &s[m + 1..] {
            x = (x * self.k + sym as usize) % span;
            total += self.log_g[x];
        }
        total + self.log_pi[self.graph.future(x)]
    }

    /// Birkhoff sum `sum_{j=1}^{n} phi(x_j^{j+m})` along `w · extension`,
    /// where `extension` supplies the `m` symbols after `w`.
    pub fn birkhoff_sum(&self, w: &Word, extension: &[u16]) -> f64 {
        assert_eq!(extension.len(), self.m);
        let mut s = w.symbols().to_vec();
        s.extend_from_slice(extension);
        (0..w.len())
            .map(|j| self.log_g[self.window_index(&s[j..j + self.m + 1])])
            .sum()
    }

    /// Stationary expectation of a function on `(m+1)`-words.
    pub fn expectation(&self, table: &[f64]) -> f64 {
        assert_eq!(table.len(), self.graph.edges());
        (0..self.graph.edges())
            .map(|x| (self.log_pi[self.graph.future(x)] + self.log_g[x]).exp() * table[x])
            .sum()
    }

    /// `∫ phi dmu` for the model's own normalized potential; equals `-h(mu)`.
    pub fn phi_mean(&self) -> f64 {
        self.expectation(&self.log_g)
    }

    /// The equilibrium state of `t·phi`, normalized.
    pub fn tilt(&self, t: f64) -> Result<PotentialModel> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("tilt parameter must be finite, got {t}")));
        }
        let spec = ModelSpec::potential(
            self.k,
            self.m,
            self.log_g.iter().map(|v| t * v).collect(),
        );
        PotentialModel::normalize(&spec)
    }

    /// `∫ phi dmu_{t phi}`, the derivative of `t -> P(t phi)`.
    pub fn tilted_phi_mean(&self, t: f64) -> Result<f64> {
        Ok(self.tilt(t)?.expectation(&self.log_g))
    }

    /// Samples random word pairs and reports the extreme concatenation
    /// ratios `mu(ab) / (mu(a) mu(b))`.
    pub fn quasi_bernoulli_check(&self, samples: usize, seed: u64) -> QuasiBernoulliReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_log: f64 = 0.0;
        let mut max_log: f64 = 0.0;
        let mut first = true;
        let random_word = |rng: &mut ChaCha8Rng| -> Vec<u16> {
            let len = rng.gen_range(1..=20);
            (0..len).map(|_| rng.gen_range(0..self.k) as u16).collect()
        };
        for _ in 0..samples {
            let a = random_word(&mut rng);
            let b = random_word(&mut rng);
            let mut ab = a.clone();
            ab.extend_from_slice(&b);
            let r = self.log_measure(&ab) - self.log_measure(&a) - self.log_measure(&b);
            if first {
                min_log = r;
                max_log = r;
                first = false;
            } else {
                min_log = min_log.min(r);
                max_log = max_log.max(r);
            }
        }
        let log_d = 3.0 * self.variation_sum();
        QuasiBernoulliReport {
            samples,
            min_ratio: min_log.exp(),
            max_ratio: max_log.exp(),
            d: log_d.exp(),
            holds: max_log <= log_d + 1e-9 && min_log >= -log_d - 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiBernoulliReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub d: f64,
    pub holds: bool,
}

impl QuasiBernoulliReport {
    /// Largest deviation of the ratio from 1 in log scale.
    pub fn max_log_deviation(&self) -> f64 {
        self.max_ratio.ln().abs().max(self.min_ratio.ln().abs())
    }
}

fn checked_states(k: usize, m: usize) -> Result<usize> {
    let mut states: usize = 1;
    for _ in 0..m {
        states = states.saturating_mul(k);
        if states > MAX_STATES {
            return Err(Error::InvalidModel(format!(
                "K^m = {k}^{m} exceeds the {MAX_STATES}-state limit"
            )));
        }
    }
    Ok(states)
}

/// Lifts memoryless specs to memory 1 with symbol-independent rows.
fn lift(spec: &ModelSpec, k: usize, graph: Graph) -> Vec<f64> {
    if spec.memory > 0 {
        return spec.weights.clone();
    }
    (0..graph.edges())
        .map(|x| match spec.kind {
            // forward: x = (previous, next), probability depends on `next`
            ModelKind::Transition => spec.weights[x % k],
            // potential depends on the first coordinate only
            ModelKind::Potential => spec.weights[x / k],
        })
        .collect()
}

/// Checks that each group (keyed by `row`) sums to 1 within `tol` and
/// rescales it to sum exactly.
fn normalized_rows(
    values: &[f64],
    k: usize,
    tol: f64,
    row: impl Fn(usize) -> usize,
) -> Result<Vec<f64>> {
    let rows = values.len() / k;
    let mut sums = vec![0.0; rows];
    for (x, v) in values.iter().enumerate() {
        sums[row(x)] += v;
    }
    if let Some((r, s)) = sums.iter().enumerate().find(|(_, s)| (**s - 1.0).abs() > tol) {
        return Err(Error::InvalidModel(format!(
            "row {r} sums to {s}, not 1 within {tol:e}"
        )));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(x, v)| v / sums[row(x)])
        .collect())
}

fn marginals(log_pi: &[f64], k: usize, m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); m];
    out[m - 1] = log_pi.to_vec();
    for l in (1..m).rev() {
        let finer = &out[l];
        let coarse: Vec<f64> = (0..k.pow(l as u32))
            .map(|p| log_sum_exp(&finer[p * k..(p + 1) * k]))
            .collect();
        out[l - 1] = coarse;
    }
    out
}

/// `var_j` for `j = 1..=m`: the largest spread of `phi` over `(m+1)`-words
/// sharing their first `j` symbols.
fn variations(log_g: &[f64], k: usize, m: usize) -> Vec<f64> {
    (1..=m)
        .map(|j| {
            let block = k.pow((m + 1 - j) as u32);
            log_g
                .chunks(block)
                .map(|c| {
                    let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
                    hi - lo
                })
                .fold(0.0, f64::max)
        })
        .collect()
}
