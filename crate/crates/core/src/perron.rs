//! Power iteration on the weighted de Bruijn graph of `m`-words.
//!
//! States are `m`-words indexed in base `K` (first symbol most significant).
//! An `(m+1)`-word `x = x_1 .. x_{m+1}` is the edge between its "past"
//! state `x_1 .. x_m = x / K` and its "future" state `x_2 .. x_{m+1} = x mod K^m`.

use crate::error::{Error, Result};

pub(crate) const TOLERANCE: f64 = 1e-13;
pub(crate) const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Graph {
    pub k: usize,
    pub states: usize,
}

impl Graph {
    pub fn new(k: usize, m: usize) -> Self {
        Graph {
            k,
            states: k.pow(m as u32),
        }
    }

    pub fn edges(&self) -> usize {
        self.states * self.k
    }

    #[inline]
    pub fn past(&self, x: usize) -> usize {
        x / self.k
    }

    #[inline]
    pub fn future(&self, x: usize) -> usize {
        x % self.states
    }
}

/// Right Perron pair of the backward transfer operator
/// `(L f)(s) = sum_a w(a s) f(a s_1 .. s_{m-1})`.
///
/// Returns `(lambda, f)` with `max f = 1`.
pub(crate) fn right_perron(graph: Graph, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    debug_assert_eq!(weights.len(), graph.edges());
    let mut f = vec![1.0; graph.states];
    let mut next = vec![0.0; graph.states];
    for _ in 0..MAX_ITERATIONS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (x, &w) in weights.iter().enumerate() {
            next[graph.future(x)] += w * f[graph.past(x)];
        }
        let lambda = next.iter().cloned().fold(0.0, f64::max);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonConvergence(
                "transfer operator iterate vanished or overflowed".into(),
            ));
        }
        let mut change: f64 = 0.0;
        for (old, new) in f.iter_mut().zip(next.iter()) {
            let v = new / lambda;
            change = change.max((v - *old).abs() / v);
            *old = v;
        }
        if change <= TOLERANCE {
            // Final eigenvalue from the ratio of sums of one more application.
            next.iter_mut().for_each(|v| *v = 0.0);
            for (x, &w) in weights.iter().enumerate() {
                next[graph.future(x)] += w * f[graph.past(x)];
            }
            let lambda = next.iter().sum::<f64>() / f.iter().sum::<f64>();
            return Ok((lambda, f));
        }
    }
    Err(Error::NonConvergence(format!(
        "power iteration did not reach relative change {TOLERANCE:e} in {MAX_ITERATIONS} iterations"
    )))
}

/// Stationary law of a stochastic chain on states given edge probabilities
/// `prob[x]` for the move `from(x) -> to(x)`.
pub(crate) fn stationary(
    graph: Graph,
    prob: &[f64],
    from: impl Fn(usize) -> usize,
    to: impl Fn(usize) -> usize,
) -> Result<Vec<f64>> {
    let n = graph.states;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (x, &p) in prob.iter().enumerate() {
            next[to(x)] += pi[from(x)] * p;
        }
        let total: f64 = next.iter().sum();
        let mut change: f64 = 0.0;
        for (old, new) in pi.iter_mut().zip(next.iter()) {
            let v = new / total;
            change = change.max((v - *old).abs() / v);
            *old = v;
        }
        if change <= TOLERANCE * 0.1 {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence(
        "stationary distribution power iteration did not converge".into(),
    ))
}
