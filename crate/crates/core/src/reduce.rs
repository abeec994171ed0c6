//! Order-fixed reductions over word enumerations.
//!
//! Work is split into contiguous blocks of the lexicographic index range.
//! Blocks run in parallel, results come back in block order and are folded
//! sequentially, so the floating-point result does not depend on the
//! number of threads.

use std::ops::Range;

use rayon::prelude::*;

use crate::words::WordSpace;

/// Words per parallel task.
pub const BLOCK: u128 = 4096;

/// Running `log(sum exp(x_i))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum::ZERO
    }
}

impl LogSum {
    pub const ZERO: LogSum = LogSum {
        max: f64::NEG_INFINITY,
        scaled: 0.0,
    };

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn merge(mut self, other: LogSum) -> LogSum {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
        self
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSum::ZERO;
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Maps `f` over consecutive index blocks of `space` in parallel and
/// returns the per-block results in lexicographic order.
pub fn par_blocks<T, F>(space: &WordSpace, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u128>) -> T + Sync + Send,
{
    space.blocks(BLOCK).into_par_iter().map(f).collect()
}

/// `log sum_w exp(f(w))` over all words of `space`, reproducible for any
/// thread count.
pub fn par_log_sum<F>(space: &WordSpace, f: F) -> f64
where
    F: Fn(&crate::words::Word) -> f64 + Sync + Send,
{
    par_blocks(space, |range| {
        let mut acc = LogSum::ZERO;
        for i in range {
            acc.add(f(&space.word_at(i)));
        }
        acc
    })
    .into_iter()
    .fold(LogSum::ZERO, LogSum::merge)
    .value()
}
