//! Reproducible cylindrical Gaussian draws.
//!
//! A stream is a ChaCha8 generator whose key is expanded from `master_seed`
//! (via `SeedableRng::seed_from_u64`) and whose 64-bit stream selector is the
//! replica id. Replicas therefore never share keystream and can be generated
//! in any order or on any thread.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::field::{FieldState, Representation};

#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    replica_id: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

/// Two independent draws and their normalized sum, which drive the modified
/// and the standard scheme along the same Wiener path.
#[derive(Debug, Clone)]
pub struct CoupledDraw {
    pub first: FieldState,
    pub second: FieldState,
    pub combined: FieldState,
}

impl NoiseStream {
    pub fn new(master_seed: u64, replica_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replica_id);
        NoiseStream {
            master_seed,
            replica_id,
            counter: 0,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replica_id(&self) -> u64 {
        self.replica_id
    }

    /// Number of variates drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.counter += 1;
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.random::<f64>()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.rng.sample(StandardNormal);
        }
        self.counter += out.len() as u64;
    }

    /// Modal draws have unit coordinate variance; nodal draws have variance
    /// `1/h` so that `h E[G G^T] = I` in the discrete L2 inner product.
    pub fn draw_cylindrical(&mut self, len: usize, repr: Representation) -> FieldState {
        let mut values = vec![0.0; len];
        self.fill_standard_normal(&mut values);
        if repr == Representation::Nodal {
            let s = (len as f64 + 1.0).sqrt();
            values.iter_mut().for_each(|v| *v *= s);
        }
        FieldState::new(values, repr)
    }

    pub fn draw_coupled_pair(&mut self, len: usize, repr: Representation) -> CoupledDraw {
        let first = self.draw_cylindrical(len, repr);
        let second = self.draw_cylindrical(len, repr);
        let combined = FieldState::new(
            first
                .values()
                .iter()
                .zip(second.values())
                .map(|(a, b)| FRAC_1_SQRT_2 * (a + b))
                .collect(),
            repr,
        );
        CoupledDraw {
            first,
            second,
            combined,
        }
    }
}

/// Runs `job` for replicas `0..count` in parallel, each with its own stream,
/// and returns the results in replica order.
pub fn par_replicas<T, F>(master_seed: u64, count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut NoiseStream) -> T + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|r| {
            let mut stream = NoiseStream::new(master_seed, r as u64);
            job(r, &mut stream)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_bit_identical() {
        let mut a = NoiseStream::new(7, 3);
        let mut b = NoiseStream::new(7, 3);
        let x = a.draw_coupled_pair(5, Representation::Modal);
        let y = b.draw_coupled_pair(5, Representation::Modal);
        assert_eq!(x.first, y.first);
        assert_eq!(x.second, y.second);
        assert_eq!(x.combined, y.combined);
        assert_eq!(a.counter(), 10);
    }

    #[test]
    fn replicas_differ() {
        let x = NoiseStream::new(7, 0).draw_cylindrical(4, Representation::Modal);
        let y = NoiseStream::new(7, 1).draw_cylindrical(4, Representation::Modal);
        let z = NoiseStream::new(8, 0).draw_cylindrical(4, Representation::Modal);
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn moments_of_single_coordinates() {
        let mut s = NoiseStream::new(11, 0);
        let n = 1_000_000;
        let (mut sum, mut sq, mut nodal_sq) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let g = s.draw_cylindrical(1, Representation::Modal).values()[0];
            sum += g;
            sq += g * g;
        }
        for _ in 0..n {
            let g = s.draw_cylindrical(3, Representation::Nodal).values()[0];
            nodal_sq += g * g;
        }
        let n = n as f64;
        assert!((sum / n).abs() < 5e-3);
        assert!((sq / n - 1.0).abs() < 0.01);
        assert!((nodal_sq / n - 4.0).abs() < 0.08);
    }

    #[test]
    fn coupled_pair_correlation() {
        let mut s = NoiseStream::new(12, 0);
        let n = 1_000_000;
        let (mut vc, mut cross) = (0.0, 0.0);
        for _ in 0..n {
            let d = s.draw_coupled_pair(1, Representation::Modal);
            let (a, c) = (d.first.values()[0], d.combined.values()[0]);
            vc += c * c;
            cross += a * c;
        }
        let n = n as f64;
        assert!((vc / n - 1.0).abs() < 0.01);
        assert!((cross / n - FRAC_1_SQRT_2).abs() < 0.01);
    }

    #[test]
    fn parallel_replicas_are_ordered() {
        let a = par_replicas(5, 16, |r, s| (r, s.standard_normal()));
        let b: Vec<_> = (0..16)
            .map(|r| (r, NoiseStream::new(5, r as u64).standard_normal()))
            .collect();
        assert_eq!(a, b);
    }
}
