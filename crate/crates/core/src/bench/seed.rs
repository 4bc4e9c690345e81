//! Counter-based seed derivation.
//!
//! Every random stream in a sweep is named by a [`StreamKey`]. The key's
//! fields are folded into the master seed one at a time through SplitMix64:
//!
//! ```text
//! s₀ = mix(master)
//! sᵢ = mix(sᵢ₋₁ ⊕ mix(fieldᵢ + i·φ))      φ = 0x9E3779B97F4A7C15
//! ```
//!
//! and the final state seeds a ChaCha12 generator. Two keys that differ in
//! any field give unrelated streams, so no stream is shared between work
//! units and the result does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::schemes::SchemeId;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Geometry = 1,
    Pilots = 2,
    Spreading = 3,
    ZfMoments = 4,
    UpperBoundMrt = 5,
    UpperBoundZf = 6,
}

/// Coordinates of one random stream. Unused coordinates stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub purpose: Purpose,
    pub geometry: u64,
    /// User index, or the subcarrier for rate streams.
    pub index: u64,
    pub scheme: u64,
    /// Grid point, or `β_fb` for spreading matrices.
    pub grid: u64,
}

impl StreamKey {
    pub fn new(purpose: Purpose, geometry: usize) -> Self {
        StreamKey {
            purpose,
            geometry: geometry as u64,
            index: 0,
            scheme: 0,
            grid: 0,
        }
    }

    pub fn index(mut self, i: usize) -> Self {
        self.index = i as u64;
        self
    }

    pub fn scheme(mut self, s: SchemeId) -> Self {
        self.scheme = 1 + SchemeId::ALL.iter().position(|&x| x == s).unwrap_or(0) as u64;
        self
    }

    pub fn grid(mut self, g: usize) -> Self {
        self.grid = g as u64;
        self
    }

    pub fn seed(&self, master: u64) -> u64 {
        let fields = [
            self.purpose as u64,
            self.geometry,
            self.index,
            self.scheme,
            self.grid,
        ];
        fields.iter().enumerate().fold(mix(master), |s, (i, &f)| {
            mix(s ^ mix(f.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN))))
        })
    }

    pub fn rng(&self, master: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed(master))
    }
}
