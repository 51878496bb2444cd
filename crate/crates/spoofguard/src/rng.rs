//! Deterministic seed derivation.
//!
//! Every random choice in the toolkit draws from a ChaCha8 stream whose seed
//! is derived from the run seed plus a purpose tag and an index. Streams for
//! distinct (tag, index) pairs are independent, so adding a sensor or a
//! classifier never perturbs the draws of any other one.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the tag bytes; stable across platforms.
fn hash_tag(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in tag.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed from a run seed, a purpose tag, and an index.
pub fn derive(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix(splitmix(seed ^ hash_tag(tag)).wrapping_add(index))
}

/// A ChaCha8 generator for the derived stream.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}

/// Standard-normal draw via Box-Muller; two uniforms per value keeps the
/// stream layout independent of call parity.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Exponential draw with the given mean.
pub fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    use rand::Rng;
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -mean * u.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_stable_and_stream_splits() {
        let a = derive(42, "sensor", 0);
        let b = derive(42, "sensor", 1);
        let c = derive(42, "events", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive(42, "sensor", 0));
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = stream(7, "test-normal", 0);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
