//! Deterministic, splittable uniform streams.
//!
//! Each `(seed, stream_index)` pair selects an independent ChaCha8 keystream:
//! the seed is expanded to a 256-bit key and the index picks the 64-bit
//! stream word. Output is identical on every platform and does not depend
//! on how streams are distributed over threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Source of uniform variates on the open interval (0, 1).
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl UniformSource for RandomStream {
    /// 53 random bits centred in their cell: never exactly 0 or 1.
    fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        // Frozen output; any change here breaks reproducibility of stored runs.
        let mut s = RandomStream::new(42, 0);
        let got: Vec<u64> = (0..4).map(|_| s.next_u64()).collect();
        assert_eq!(got, REFERENCE_42_0);
        let mut s = RandomStream::new(42, 7);
        let got: Vec<u64> = (0..4).map(|_| s.next_u64()).collect();
        assert_eq!(got, REFERENCE_42_7);
    }

    const REFERENCE_42_0: [u64; 4] = [
        12578764544318200737,
        17529487244874322312,
        7886285670807131020,
        11572758976476374866,
    ];
    const REFERENCE_42_7: [u64; 4] = [
        2370525664269707216,
        6019739031913071421,
        11352947354031309824,
        9109578469052101476,
    ];

    #[test]
    fn identical_streams_repeat() {
        let mut a = RandomStream::new(9, 3);
        let mut b = RandomStream::new(9, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn distinct_indices_diverge_early() {
        let mut a = RandomStream::new(9, 0);
        let mut b = RandomStream::new(9, 1);
        let differs = (0..8).any(|_| a.next_uniform() != b.next_uniform());
        assert!(differs);
    }

    #[test]
    fn open_interval_and_mean() {
        let mut s = RandomStream::new(2024, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.next_uniform();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }
}
