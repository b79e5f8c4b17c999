//! Counter-based random numbers.
//!
//! Every random draw in the crate comes from [`CounterRng`], a stateless
//! mixing function evaluated at `(key, counter)`. The stream is fully
//! described here so that other implementations can reproduce it:
//!
//! ```text
//! key      = mix64(seed ^ role)
//! u64[i]   = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)      (wrapping)
//! f64[i]   = (u64[i] >> 11) * 2^-53                          in [0, 1)
//! mix64(z) = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!            z ^= z >> 27; z *= 0x94D049BB133111EB; z ^ (z >> 31)
//! ```
//!
//! Gaussian draws use Box-Muller on two consecutive uniforms, returning the
//! cosine branch first and the sine branch on the next call.
//!
//! Sub-seeds are derived as `seed ^ role` with the role constants in
//! [`roles`]; a further stream index (a word, a token position, a sample
//! number) is folded in with [`CounterRng::for_stream`].

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Role constants for sub-seed derivation (`seed ^ role`).
pub mod roles {
    pub const ENSEMBLE: u64 = 0x454E_5345_4D42_4C45;
    pub const WALK: u64 = 0x5741_4C4B_0000_0001;
    pub const EMISSION: u64 = 0x454D_4954_0000_0002;
    pub const TRAIN_INIT: u64 = 0x5452_4149_4E00_0003;
    pub const KMEANS: u64 = 0x4B4D_4541_4E53_0004;
    pub const PARTITION: u64 = 0x5A5F_4300_0000_0005;
    pub const NOISE: u64 = 0x4E4F_4953_4500_0006;
    pub const SVD_SKETCH: u64 = 0x5356_4400_0000_0007;
    pub const SHARD_ORDER: u64 = 0x5348_4152_4400_0008;
    pub const TESTBED: u64 = 0x5445_5354_4244_0009;
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic counter-based generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64, role: u64) -> Self {
        Self::from_key(mix64(seed ^ role))
    }

    /// Independent stream `index` under `(seed, role)`, e.g. one per token
    /// position or per Monte-Carlo sample.
    pub fn for_stream(seed: u64, role: u64, index: u64) -> Self {
        let base = mix64(seed ^ role);
        Self::from_key(mix64(base ^ mix64(index.wrapping_add(GOLDEN_GAMMA))))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection of the biased tail.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.next_normal();
        }
    }

    /// Uniform point on the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        loop {
            self.fill_normal(&mut v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-300 {
                v.iter_mut().for_each(|x| *x /= norm);
                return v;
            }
        }
    }
}
