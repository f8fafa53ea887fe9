//! Small deterministic statistics helpers.

/// Pairwise summation; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and the standard error of the mean. The error is infinite for
/// fewer than two samples.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let m = mean(xs);
    if n < 2 {
        return (m, f64::INFINITY);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Streaming batch-means estimator for correlated sequences.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_len: usize,
    current_sum: f64,
    current_len: usize,
    batches: Vec<f64>,
}

impl BatchMeans {
    pub fn new(batch_len: usize) -> Self {
        assert!(batch_len >= 1);
        BatchMeans {
            batch_len,
            current_sum: 0.0,
            current_len: 0,
            batches: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64) {
        self.current_sum += x;
        self.current_len += 1;
        if self.current_len == self.batch_len {
            self.batches.push(self.current_sum / self.batch_len as f64);
            self.current_sum = 0.0;
            self.current_len = 0;
        }
    }

    pub fn batches(&self) -> &[f64] {
        &self.batches
    }

    /// Mean over complete batches and its standard error.
    pub fn estimate(&self) -> (f64, f64) {
        mean_and_stderr(&self.batches)
    }

    /// Pools the complete batches of several independent runs.
    pub fn pooled(parts: &[BatchMeans]) -> (f64, f64) {
        let all: Vec<f64> = parts
            .iter()
            .flat_map(|b| b.batches.iter().copied())
            .collect();
        mean_and_stderr(&all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn stderr_of_known_sample() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(mean_and_stderr(&[1.0]).1.is_infinite());
    }

    #[test]
    fn batch_means_drops_partial_batch() {
        let mut b = BatchMeans::new(2);
        for x in [1.0, 3.0, 5.0, 7.0, 100.0] {
            b.push(x);
        }
        assert_eq!(b.batches(), &[2.0, 6.0]);
        assert_eq!(b.estimate().0, 4.0);
    }
}
