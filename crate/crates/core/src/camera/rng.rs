//! Seeded generator for rig radii: SplitMix64 seeding into xorshift64*.
//!
//! ```text
//! seed:   s = splitmix64(seed); if s == 0 { s = 0x9E3779B97F4A7C15 }
//! next:   s ^= s >> 12; s ^= s << 25; s ^= s >> 27; return s * 0x2545F4914F6CDD1D (mod 2^64)
//! unit:   (next >> 11) * 2^-53, in [0, 1)
//! ```
//!
//! Any implementation following these lines reproduces rigs bit-for-bit.

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a per-asset seed from a global seed and an asset identity hash.
pub fn mix_seed(global: u64, asset_hash: u64) -> u64 {
    splitmix64(global ^ splitmix64(asset_hash))
}

#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { 0x9E37_79B9_7F4A_7C15 } else { s },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
