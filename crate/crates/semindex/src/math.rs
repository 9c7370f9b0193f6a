//! Small numeric helpers shared across the crate.
//!
//! Vector payloads are `f32`; every accumulation happens in `f64` so that
//! distance sums do not lose precision on long vectors.

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_l2(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum()
}

/// Inner product of two equal-length slices.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Squared norm of a slice.
pub fn norm_sq(a: &[f32]) -> f64 {
    a.iter().map(|x| *x as f64 * *x as f64).sum()
}

/// Cosine similarity. Returns `f64::NEG_INFINITY` when either vector has zero
/// norm, so degenerate items sort behind every real score.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let denom = norm_sq(a).sqrt() * norm_sq(b).sqrt();
    if denom == 0.0 {
        return f64::NEG_INFINITY;
    }
    dot(a, b) / denom
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01B3);
    }
    h
}

/// Derives a named sub-seed from a master seed. Every randomized component
/// (k-means, PQ training, synthetic data) draws from its own stream so runs
/// stay reproducible from a single seed.
pub fn sub_seed(seed: u64, tag: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(tag.as_bytes()))
}

/// Numbered variant of [`sub_seed`] for per-partition / per-subspace streams.
pub fn sub_seed_n(seed: u64, tag: &str, n: u64) -> u64 {
    splitmix64(sub_seed(seed, tag) ^ splitmix64(n))
}
