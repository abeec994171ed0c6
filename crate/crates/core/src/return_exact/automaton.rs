//! The pattern automaton of a word coupled with the last `m` symbols of the
//! process, restricted to states reachable from the start distribution.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::PotentialModel;
use crate::words::{border_array, Word};

pub(crate) const ABSORBED: u32 = u32::MAX;

/// `dfa[j * K + a]`: matched prefix length after reading `a` in state `j`,
/// for `j = 0..=n`. Reaching `n` means a full occurrence.
pub(crate) fn matching_automaton(w: &Word) -> Vec<usize> {
    let s = w.symbols();
    let n = s.len();
    let k = w.alphabet_size();
    let border = border_array(s);
    let mut dfa = vec![0usize; (n + 1) * k];
    for j in 0..=n {
        for a in 0..k {
            dfa[j * k + a] = if j < n && s[j] as usize == a {
                j + 1
            } else if j == 0 {
                0
            } else {
                dfa[border[j] * k + a]
            };
        }
    }
    dfa
}

/// Sparse substochastic chain on the transient `(j, s)` states.
#[derive(Clone, Debug)]
pub(crate) struct Chain {
    pub k: usize,
    /// `target[i * K + a]`, or [`ABSORBED`].
    pub target: Vec<u32>,
    pub prob: Vec<f64>,
    /// Probability of completing an occurrence in one step from each state.
    pub exit: Vec<f64>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.exit.len()
    }

    /// `out = v Q`.
    pub fn step(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = i * self.k;
            for a in 0..self.k {
                let t = self.target[row + a];
                if t != ABSORBED {
                    out[t as usize] += vi * self.prob[row + a];
                }
            }
        }
    }

    /// `out = Q u` (column action).
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let row = i * self.k;
            let mut acc = 0.0;
            for a in 0..self.k {
                let t = self.target[row + a];
                if t != ABSORBED {
                    acc += self.prob[row + a] * u[t as usize];
                }
            }
            *slot = acc;
        }
    }

    /// Dense row-major copy of `Q`.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for a in 0..self.k {
                let t = self.target[i * self.k + a];
                if t != ABSORBED {
                    q[i * n + t as usize] += self.prob[i * self.k + a];
                }
            }
        }
        q
    }
}

/// Chain plus the law of the process at the moment stepping starts.
#[derive(Clone, Debug)]
pub(crate) struct Start {
    pub chain: Chain,
    /// Symbols read when stepping starts.
    pub count0: usize,
    /// Mass on each transient state at `count0`.
    pub initial: Vec<f64>,
    /// `(count, mass)` of occurrences completed at or before `count0`.
    pub early: Vec<(usize, f64)>,
}

/// Pending start entries: `(j, m-word state, count, mass)`.
pub(crate) struct Seeds {
    pub entries: Vec<(usize, usize, f64)>,
    pub count0: usize,
    pub early: Vec<(usize, f64)>,
}

pub(crate) fn build(model: &PotentialModel, w: &Word, seeds: Seeds, budget: usize) -> Result<Start> {
    let k = model.alphabet_size();
    let n = w.len();
    let mstates = model.states();
    let needed = (n as u128 + 1) * mstates as u128;
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "return-law states",
            needed,
            cap: budget as u128,
        });
    }
    let dfa = matching_automaton(w);
    let fwd: Vec<f64> = model.log_forward().iter().map(|v| v.exp()).collect();
    let mut index = vec![ABSORBED; n * mstates];
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut visit = |j: usize, s: usize, order: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| -> u32 {
        let slot = &mut index[j * mstates + s];
        if *slot == ABSORBED {
            *slot = order.len() as u32;
            order.push((j, s));
            queue.push_back(order.len() - 1);
        }
        *slot
    };
    let mut initial_ids = Vec::with_capacity(seeds.entries.len());
    for &(j, s, _) in &seeds.entries {
        initial_ids.push(visit(j, s, &mut order, &mut queue));
    }
    let mut target = Vec::new();
    let mut prob = Vec::new();
    let mut exit = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (j, s) = order[i];
        debug_assert_eq!(target.len(), i * k);
        let mut out = 0.0;
        for a in 0..k {
            let x = s * k + a;
            let p = fwd[x];
            let nj = dfa[j * k + a];
            if nj == n {
                target.push(ABSORBED);
                out += p;
            } else {
                let ns = x % mstates;
                target.push(visit(nj, ns, &mut order, &mut queue));
            }
            prob.push(p);
        }
        exit.push(out);
    }
    let mut initial = vec![0.0; order.len()];
    for (&id, &(_, _, mass)) in initial_ids.iter().zip(&seeds.entries) {
        initial[id as usize] += mass;
    }
    Ok(Start {
        chain: Chain {
            k,
            target,
            prob,
            exit,
        },
        count0: seeds.count0,
        initial,
        early: seeds.early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn automaton_tracks_longest_matching_suffix() {
        let w = Word::parse("0101", 2).unwrap();
        let dfa = matching_automaton(&w);
        let run = |input: &[usize]| input.iter().fold(0, |j, &a| dfa[j * 2 + a]);
        assert_eq!(run(&[0, 1, 0]), 3);
        assert_eq!(run(&[0, 1, 0, 0]), 1);
        assert_eq!(run(&[0, 1, 0, 1]), 4);
        // after a full match the automaton continues from the border
        assert_eq!(dfa[4 * 2], 3);
    }
}
