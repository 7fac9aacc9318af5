//! Keyed deterministic RNG streams.
//!
//! Every randomized stage of the pipeline draws from a [`Pcg32`] stream
//! whose state is derived from a global seed plus a per-work-item key
//! (texel index, pixel index, LUT entry, ...). Streams are independent of
//! thread scheduling, so parallel runs are bit-identical for any thread
//! count.

/// splitmix64 finalizer; good avalanche for key mixing.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const PCG_MULT: u64 = 6364136223846793005;

/// PCG32 stream addressed by a (seed, key...) tuple.
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    /// Derive an independent stream from a seed and a work-item key.
    pub fn from_key(seed: u64, key: &[u64]) -> Self {
        let mut h = mix64(seed);
        for &k in key {
            h = mix64(h ^ k);
        }
        let mut rng = Pcg32 {
            state: 0,
            inc: (mix64(h ^ 0xda3e_39cb_94b9_5bdb) << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(h);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULT).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform f64 in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (((hi << 32) | lo) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent uniforms, the common case for 2D sample points.
    pub fn next_pair(&mut self) -> (f64, f64) {
        (self.next_f64(), self.next_f64())
    }

    /// Uniform integer in [0, n).
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as u64).min(n - 1)
    }
}
