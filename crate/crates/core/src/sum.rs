//! Compensated summation with a fixed traversal order.
//!
//! Every global reduction in the crate goes through [`NeumaierSum`], so
//! integrated quantities are reproducible bit-for-bit from run to run.

/// Running Neumaier (improved Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice, traversed front to back.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated sum of `f(i)` for `i in 0..n`.
pub fn compensated_sum_by(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        acc.add(f(i));
    }
    acc.value()
}
