//! Counter-based random streams.
//!
//! Every random quantity in this crate is drawn from a [`Stream`], a pure
//! function of a 64-bit key and a running counter: the j-th output is
//! `mix64(key + j * GOLDEN)` where `mix64` is the splitmix64 finalizer.
//! Streams for distinct keys are independent for all practical purposes and
//! can be consumed on any thread without coordination, which is what makes
//! trial-parallel experiments bitwise reproducible regardless of scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: the published mixing function behind all streams.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream key from a master seed and a list of sub-identifiers
/// (trial index, dimension, dependence range, ...). Chained absorption:
/// `k <- mix64(k + GOLDEN + part)` for each part.
pub fn derive_key(master: u64, parts: &[u64]) -> u64 {
    let mut k = mix64(master.wrapping_add(GOLDEN));
    for &p in parts {
        k = mix64(k.wrapping_add(GOLDEN).wrapping_add(p));
    }
    k
}

/// A deterministic random stream: `(key, counter) -> u64`.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream {
            key,
            counter: 0,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        x
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform over {-1.0, +1.0}.
    #[inline]
    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in [0, bound) by masked rejection.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires bound > 0");
        if bound == 1 {
            return 0;
        }
        let mask = u64::MAX >> (bound - 1).leading_zeros();
        loop {
            let x = self.next_u64() & mask;
            if x < bound {
                return x;
            }
        }
    }

    /// Standard normal via the Marsaglia polar method; the spare variate is
    /// cached so consecutive calls consume the stream deterministically.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(x) = self.spare_normal.take() {
            return x;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, values: &mut [T]) {
        for i in (1..values.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            values.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = {
            let mut s = Stream::new(derive_key(42, &[7]));
            (0..64).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::new(derive_key(42, &[7]));
            (0..64).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_keys_differ() {
        let mut s = Stream::new(derive_key(42, &[0]));
        let mut t = Stream::new(derive_key(42, &[1]));
        assert_ne!(s.next_u64(), t.next_u64());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = Stream::new(1);
        for _ in 0..10_000 {
            let x = s.uniform();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn next_below_covers_range() {
        let mut s = Stream::new(9);
        let mut seen = [0u32; 6];
        for _ in 0..6000 {
            seen[s.next_below(6) as usize] += 1;
        }
        for (i, &count) in seen.iter().enumerate() {
            assert!(count > 800, "value {i} drawn only {count} times");
        }
    }

    #[test]
    fn normal_moments_roughly_standard() {
        let mut s = Stream::new(123);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = s.standard_normal();
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }
}
