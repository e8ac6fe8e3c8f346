//! Counter-based random streams.
//!
//! Every sample index owns an independent stream that is a pure function of
//! `(seed, index)`. Partitioning work across threads therefore cannot change
//! the values drawn for a given index, which is what makes ensembles
//! reproducible independent of worker count.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream whose starting point is scrambled by a sample index.
#[derive(Debug, Clone)]
pub struct IndexRng {
    state: u64,
}

impl IndexRng {
    pub fn new(seed: u64, index: u64) -> Self {
        let state = mix64(seed ^ mix64(index.wrapping_mul(GOLDEN) ^ 0x6A09_E667_F3BC_C909));
        IndexRng { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
