/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sample moments of an error sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub count: usize,
    /// Mean error (bias).
    pub mean: f64,
    /// Root mean square error.
    pub rmse: f64,
    /// Standard deviation about the mean, with divisor `count`, so that
    /// `rmse² = mean² + std²`.
    pub std: f64,
}

#[derive(Debug, Clone, Default)]
pub(super) struct Accumulator {
    count: usize,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl Accumulator {
    pub(super) fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub(super) fn stats(&self) -> ErrorStats {
        if self.count == 0 {
            return ErrorStats { count: 0, mean: f64::NAN, rmse: f64::NAN, std: f64::NAN };
        }
        let n = self.count as f64;
        let mean = self.sum.value() / n;
        let mean_sq = self.sum_sq.value() / n;
        let var = (mean_sq - mean * mean).max(0.0);
        ErrorStats { count: self.count, mean, rmse: mean_sq.sqrt(), std: var.sqrt() }
    }
}
