//! Maximum and minimum cycle means on the de Bruijn graph (Karp).

use crate::perron::Graph;

/// Largest mean edge weight over directed cycles, edges `past(x) -> future(x)`.
///
/// Karp's characterization with every node as a source,
/// `max_v min_k (D_N(v) - D_k(v)) / (N - k)`. The `D_k` rows are rebuilt in a
/// second pass instead of being stored, so memory stays `O(N)`.
pub(crate) fn max_cycle_mean(graph: Graph, weights: &[f64]) -> f64 {
    let n = graph.states;
    let step = |d: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        for (x, &w) in weights.iter().enumerate() {
            let cand = d[graph.past(x)] + w;
            let slot = &mut out[graph.future(x)];
            if cand > *slot {
                *slot = cand;
            }
        }
    };
    let mut d = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..n {
        step(&d, &mut next);
        std::mem::swap(&mut d, &mut next);
    }
    let d_n = d.clone();
    let mut worst = vec![f64::INFINITY; n];
    d.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..n {
        for v in 0..n {
            if d_n[v].is_finite() && d[v].is_finite() {
                let mean = (d_n[v] - d[v]) / (n - k) as f64;
                if mean < worst[v] {
                    worst[v] = mean;
                }
            }
        }
        step(&d, &mut next);
        std::mem::swap(&mut d, &mut next);
    }
    worst
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_cycle_mean(graph: Graph, weights: &[f64]) -> f64 {
    let negated: Vec<f64> = weights.iter().map(|w| -w).collect();
    -max_cycle_mean(graph, &negated)
}
