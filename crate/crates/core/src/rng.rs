//! Counter-based random streams.
//!
//! Every pulse gets its own stream keyed by `(seed, pulse index)`, and each
//! draw is a pure function of `(key, draw counter)`. A pulse's outcome is
//! therefore the same no matter how pulses are split across workers.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for sub-experiment `index` (e.g. one scan angle).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(GOLDEN).wrapping_add(0x5851_f42d_4c95_7f2d)))
}

#[derive(Clone, Debug)]
pub struct PulseStream {
    key: u64,
    counter: u64,
}

impl PulseStream {
    pub fn new(seed: u64, pulse: u64) -> Self {
        let key = mix64(mix64(seed).wrapping_add(pulse.wrapping_mul(GOLDEN)) ^ 0xd1b5_4a32_d192_ed03);
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Poisson draw by sequential inversion given `exp(-mean)`.
    pub fn poisson(&mut self, mean: f64, exp_neg_mean: f64) -> u32 {
        if mean <= 0.0 {
            return 0;
        }
        let u = self.next_f64();
        let mut k = 0u32;
        let mut p = exp_neg_mean;
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p < 1e-300 && cdf > 0.0 && k as f64 > mean {
                break;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_pure_functions_of_key_and_counter() {
        let mut a = PulseStream::new(42, 1000);
        let mut b = PulseStream::new(42, 1000);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = PulseStream::new(42, 1001);
        let mut d = PulseStream::new(43, 1000);
        let first = PulseStream::new(42, 1000).next_u64();
        assert_ne!(first, c.next_u64());
        assert_ne!(first, d.next_u64());
    }

    #[test]
    fn uniform_moments() {
        let n = 200_000u64;
        let (mut sum, mut sq) = (0.0, 0.0);
        for i in 0..n {
            let x = PulseStream::new(7, i).next_f64();
            assert!((0.0..1.0).contains(&x));
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 5.0 * (1.0 / 12.0 / n as f64).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 1e-3);
    }

    #[test]
    fn adjacent_pulses_uncorrelated() {
        let n = 200_000u64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = PulseStream::new(11, i).next_f64() - 0.5;
            let y = PulseStream::new(11, i + 1).next_f64() - 0.5;
            acc += x * y;
        }
        let corr = acc / n as f64 * 12.0;
        assert!(corr.abs() < 5.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn poisson_mean_and_zero() {
        let mean = 1.7;
        let e = f64::exp(-mean);
        let n = 100_000u64;
        let total: u64 = (0..n).map(|i| PulseStream::new(3, i).poisson(mean, e) as u64).sum();
        let est = total as f64 / n as f64;
        assert!((est - mean).abs() < 5.0 * (mean / n as f64).sqrt());
        assert_eq!(PulseStream::new(3, 0).poisson(0.0, 1.0), 0);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(1, i)).collect();
        let mut dedup = s.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len());
    }
}
