//! Deterministic, seedable random numbers (xoshiro256++).
//!
//! Hand-rolled so that sampled ensembles are bit-reproducible across
//! platforms and releases; the reproducibility contract of the CLI pins
//! this generator. Independent streams for parallel work items are derived
//! from a base seed and a counter.

/// SplitMix64 step, used for seeding and stream derivation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Independent stream `index` of the base seed (counter derivation).
    pub fn stream(seed: u64, index: u64) -> Self {
        let mut sm = seed ^ 0x6a09_e667_f3bc_c909;
        let base = splitmix64(&mut sm);
        let mut sm2 = index.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ base;
        let _ = splitmix64(&mut sm2);
        Self::seed_from_u64(sm2)
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate (Box–Muller; no rejection, so the draw
    /// count per call is fixed).
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        // Guard against ln(0).
        let u = (self.next_u64() >> 11) as f64 + 0.5;
        let u = u * (1.0 / (1u64 << 53) as f64);
        let v = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u));
        let (s, c) = (
            libm::sin(core::f64::consts::TAU * v),
            libm::cos(core::f64::consts::TAU * v),
        );
        self.spare_normal = Some(r * s);
        r * c
    }

    pub fn normal_scaled(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.normal()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        // Multiply-shift; bias is negligible for the n used here (≲ 10^6).
        ((self.next_u64() >> 11) * n) >> 53
    }
}
