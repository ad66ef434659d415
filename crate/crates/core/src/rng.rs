//! Pinned splitmix64 primitives.
//!
//! Every randomized decision in the crate (stream draws, epoch reshuffles,
//! span placement, subset selection) goes through these functions so golden
//! sequences are portable to any other implementation of the same algorithm.

/// Weyl increment of the splitmix64 state.
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags keep keys derived for different purposes disjoint.
pub(crate) mod domain {
    pub const STREAM: u64 = 1;
    pub const RESHUFFLE: u64 = 2;
    pub const CORRUPTION: u64 = 3;
    pub const SUBSET: u64 = 4;
}

/// The splitmix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit key.
///
/// `h0 = GAMMA`, `h_{k+1} = mix64(h_k ^ part_k)`.
pub fn derive_key(parts: &[u64]) -> u64 {
    parts.iter().fold(GAMMA, |h, &p| mix64(h ^ p))
}

/// Counter-based access: the `counter`-th output (0-based) of a splitmix64
/// generator whose initial state is `key`.
#[inline]
pub fn counter_value(key: u64, counter: u64) -> u64 {
    mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// Top 53 bits as a uniform double in `[0, 1)`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// FNV-1a 64-bit hash, used to key per-task randomness by name.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sequential splitmix64 generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[0, bound)` by rejection of the biased tail.
    ///
    /// Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        // Largest multiple of `bound` representable; draws above it are rejected.
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    /// In-place Fisher–Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Uniform `k`-subset of `0..n` (Floyd's algorithm), returned sorted.
    pub fn sample_sorted(&mut self, n: u64, k: u64) -> Vec<u64> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut chosen = std::collections::BTreeSet::new();
        for j in (n - k)..n {
            let t = self.below(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_outputs_for_seed_zero() {
        // Published splitmix64 outputs for an initial state of 0.
        let mut g = SplitMix64::new(0);
        assert_eq!(g.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(g.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(g.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn counter_access_matches_sequential() {
        let key = derive_key(&[7, 0]);
        let mut g = SplitMix64::new(key);
        for t in 0..32 {
            assert_eq!(counter_value(key, t), g.next_u64());
        }
    }

    #[test]
    fn below_stays_in_range() {
        let mut g = SplitMix64::new(99);
        for bound in [1u64, 2, 3, 7, 1000, u64::MAX] {
            for _ in 0..100 {
                assert!(g.below(bound) < bound);
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut g = SplitMix64::new(5);
        let mut v: Vec<u32> = (0..50).collect();
        g.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }

    #[test]
    fn floyd_sample_is_sorted_and_distinct() {
        let mut g = SplitMix64::new(11);
        let s = g.sample_sorted(20, 7);
        assert_eq!(s.len(), 7);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&x| x < 20));
        assert_eq!(g.sample_sorted(4, 4), vec![0, 1, 2, 3]);
        assert!(g.sample_sorted(9, 0).is_empty());
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn unit_interval() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }
}
