//! CUSUM point-anomaly test and sliding-window rate decision.

use std::collections::VecDeque;

/// `S_k = max(0, S_{k−1} + r_{k−1} − b)`; a point alarm fires when `S > λ`
/// and resets `S` to zero. The recursion consumes the previous residual, so
/// the first sample only primes it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cusum {
    s: f64,
    prev: Option<f64>,
}

impl Cusum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn statistic(&self) -> f64 {
        self.s
    }

    pub fn step(&mut self, r: f64, drift: f64, threshold: f64) -> bool {
        if let Some(prev) = self.prev {
            self.s = (self.s + prev - drift).max(0.0);
        }
        self.prev = Some(r);
        if self.s > threshold {
            self.s = 0.0;
            true
        } else {
            false
        }
    }
}

/// Fraction of point alarms among the last `l` samples, always divided by `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlidingWindow {
    bits: VecDeque<bool>,
    len: usize,
    count: usize,
}

impl SlidingWindow {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "window length must be >= 1");
        Self { bits: VecDeque::with_capacity(len), len, count: 0 }
    }

    /// Push one bit and return the detection rate.
    pub fn push(&mut self, alpha: bool) -> f64 {
        if self.bits.len() == self.len && self.bits.pop_front() == Some(true) {
            self.count -= 1;
        }
        self.bits.push_back(alpha);
        if alpha {
            self.count += 1;
        }
        self.rate()
    }

    pub fn rate(&self) -> f64 {
        self.count as f64 / self.len as f64
    }

    pub fn filled(&self) -> usize {
        self.bits.len()
    }
}
