//! Orthogonal discrete sine transform between grid values and Dirichlet
//! sine coefficients.
//!
//! With `h = 1/(J+1)` and `e_j(xi) = sqrt(2) sin(j pi xi)` the synthesis is
//! `x_i = sum_j c_j e_j(xi_i)` and the analysis is `c_j = h sum_i x_i e_j(xi_i)`.
//! Both are a scaled DST-I, computed through a complex FFT of length `2(J+1)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

type Buffers = (Vec<Complex<f64>>, Vec<Complex<f64>>);

thread_local! {
    static SCRATCH: RefCell<Buffers> = const { RefCell::new((Vec::new(), Vec::new())) };
}

pub struct SineTransform {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform")
            .field("len", &self.len)
            .finish()
    }
}

impl SineTransform {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "sine transform needs at least one point");
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (len + 1));
        SineTransform { len, fft }
    }

    /// Process-wide plan cache keyed by length.
    pub fn shared(len: usize) -> Arc<SineTransform> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SineTransform>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("sine transform cache poisoned");
        guard
            .entry(len)
            .or_insert_with(|| Arc::new(SineTransform::new(len)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `out_k = scale * sum_{n=1}^{J} x_n sin(pi n k / (J+1))`, `k = 1..J`.
    fn dst1(&self, input: &[f64], out: &mut [f64], scale: f64) {
        let n = self.len;
        assert_eq!(input.len(), n);
        assert_eq!(out.len(), n);
        let m = 2 * (n + 1);
        SCRATCH.with(|cell| {
            let (buf, scratch) = &mut *cell.borrow_mut();
            buf.clear();
            buf.resize(m, Complex::new(0.0, 0.0));
            for (i, &v) in input.iter().enumerate() {
                buf[i + 1].re = v;
                buf[m - 1 - i].re = -v;
            }
            scratch.resize(self.fft.get_inplace_scratch_len(), Complex::new(0.0, 0.0));
            self.fft.process_with_scratch(buf, scratch);
            // Y_k = -2i sum x_n sin(pi n k/(J+1)) for the odd extension.
            for (k, o) in out.iter_mut().enumerate() {
                *o = -0.5 * scale * buf[k + 1].im;
            }
        });
    }

    /// Coefficients to grid values.
    pub fn synthesize(&self, coeffs: &[f64], nodal: &mut [f64]) {
        self.dst1(coeffs, nodal, std::f64::consts::SQRT_2);
    }

    /// Grid values to coefficients.
    pub fn analyze(&self, nodal: &[f64], coeffs: &mut [f64]) {
        let h = 1.0 / (self.len as f64 + 1.0);
        self.dst1(nodal, coeffs, h * std::f64::consts::SQRT_2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(coeffs: &[f64]) -> Vec<f64> {
        let n = coeffs.len();
        let h = 1.0 / (n as f64 + 1.0);
        (1..=n)
            .map(|i| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        c * 2f64.sqrt()
                            * ((j + 1) as f64 * std::f64::consts::PI * i as f64 * h).sin()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_summation() {
        for n in [1usize, 2, 7, 8, 31, 64] {
            let coeffs: Vec<f64> = (0..n).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
            let fast = {
                let mut out = vec![0.0; n];
                SineTransform::new(n).synthesize(&coeffs, &mut out);
                out
            };
            for (a, b) in fast.iter().zip(direct(&coeffs)) {
                assert!((a - b).abs() < 1e-11, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn analysis_inverts_synthesis() {
        let n = 13;
        let t = SineTransform::new(n);
        let coeffs: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let mut nodal = vec![0.0; n];
        let mut back = vec![0.0; n];
        t.synthesize(&coeffs, &mut nodal);
        t.analyze(&nodal, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
