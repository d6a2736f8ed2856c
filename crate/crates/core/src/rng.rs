//! Deterministic random source for generators and simulations.
//!
//! All seeded functionality in this crate draws from [`Prng`], a thin wrapper
//! around xoshiro256++ (seeded through SplitMix64 via `seed_from_u64`). The
//! generator family is fixed so that a seed produces the same stream on every
//! platform, which is what makes golden-file tests on generated models and
//! byte-identical reruns of seeded commands possible.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct Prng(Xoshiro256PlusPlus);

impl Prng {
    pub fn seeded(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.gen()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. Rejection-sampled so the distribution is
    /// exact and the stream is reproducible independent of `usize` width.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return (v % n) as usize;
            }
        }
    }

    /// Index drawn according to `weights` (need not be normalized).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    /// Uniform sample from the `k`-dimensional probability simplex
    /// (Dirichlet with all concentration parameters 1), via normalized
    /// exponential spacings.
    pub fn dirichlet(&mut self, k: usize) -> Vec<f64> {
        assert!(k > 0, "dirichlet(0)");
        let mut draws: Vec<f64> = (0..k)
            .map(|_| {
                // -ln(u) with u in (0, 1]; avoid ln(0).
                let u = 1.0 - self.uniform();
                -u.ln()
            })
            .collect();
        let total: f64 = draws.iter().sum();
        for d in &mut draws {
            *d /= total;
        }
        draws
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = Prng::seeded(42);
        let mut b = Prng::seeded(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn golden_stream_prefix() {
        // Pins the generator family: xoshiro256++ seeded from u64 42.
        let mut r = Prng::seeded(42);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        let mut reference = Xoshiro256PlusPlus::seed_from_u64(42);
        let want: Vec<u64> = (0..3).map(|_| reference.gen()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn dirichlet_is_a_distribution() {
        let mut r = Prng::seeded(7);
        for k in 1..6 {
            let d = r.dirichlet(k);
            assert_eq!(d.len(), k);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn below_is_in_range() {
        let mut r = Prng::seeded(3);
        for _ in 0..1000 {
            assert!(r.below(7) < 7);
        }
    }
}
