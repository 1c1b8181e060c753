use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 48] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223,
];

/// Seeded low-discrepancy points in `[0, 1)^d`.
///
/// Halton sequence with a Cranley–Patterson rotation drawn from the seed. Coordinates beyond the
/// prime table fall back to ChaCha8 uniforms. The same `(dim, seed)` always yields the same points.
#[derive(Debug, Clone)]
pub struct QuasiRandom {
    dim: usize,
    index: u64,
    shift: Vec<f64>,
    rng: ChaCha8Rng,
}

impl QuasiRandom {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        QuasiRandom {
            dim,
            // skip the origin
            index: 1,
            shift,
            rng,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        (0..self.dim)
            .map(|d| {
                if d < PRIMES.len() {
                    let v = radical_inverse(i, PRIMES[d]) + self.shift[d];
                    if v >= 1.0 { v - 1.0 } else { v }
                } else {
                    self.rng.random::<f64>()
                }
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_are_in_unit_cube_and_reproducible() {
        let mut a = QuasiRandom::new(60, 7);
        let mut b = QuasiRandom::new(60, 7);
        for _ in 0..200 {
            let p = a.next_point();
            assert_eq!(p, b.next_point());
            assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn seeds_differ() {
        let p = QuasiRandom::new(3, 1).next_point();
        let q = QuasiRandom::new(3, 2).next_point();
        assert_ne!(p, q);
    }

    #[test]
    fn first_coordinate_is_roughly_uniform() {
        let mut q = QuasiRandom::new(1, 0);
        let n = 1024;
        let below: usize = (0..n).filter(|_| q.next_point()[0] < 0.25).count();
        assert!((below as i64 - 256).abs() <= 2, "{below}");
    }
}
