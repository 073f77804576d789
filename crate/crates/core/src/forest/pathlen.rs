//! Average unsuccessful-search depth of a binary search tree, used both as
//! the leaf adjustment and as the score normaliser.

use std::sync::{OnceLock, RwLock};

use crate::scalar::Scalar;

/// Sizes up to this bound use an eagerly built table (no locking).
const TABLE_SIZE: usize = 4096;
/// Sizes up to this bound are summed exactly; larger ones use the asymptote.
const EXACT_LIMIT: usize = 1_000_000;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
static OVERFLOW: RwLock<Vec<f64>> = RwLock::new(Vec::new());

fn table() -> &'static [f64] {
    TABLE.get_or_init(|| {
        let mut h = Vec::with_capacity(TABLE_SIZE + 1);
        let mut acc = 0.0f64;
        h.push(acc);
        for i in 1..=TABLE_SIZE {
            acc += 1.0 / i as f64;
            h.push(acc);
        }
        h
    })
}

/// The harmonic number `H(k) = 1 + 1/2 + ... + 1/k`, with `H(0) = 0`.
pub fn harmonic(k: usize) -> f64 {
    let base = table();
    if k <= TABLE_SIZE {
        return base[k];
    }
    if k > EXACT_LIMIT {
        let kf = k as f64;
        return kf.ln() + EULER_GAMMA + 1.0 / (2.0 * kf) - 1.0 / (12.0 * kf * kf);
    }
    // overflow[i] holds H(TABLE_SIZE + 1 + i)
    let offset = k - TABLE_SIZE - 1;
    if let Some(&v) = OVERFLOW.read().expect("harmonic cache poisoned").get(offset) {
        return v;
    }
    let mut cache = OVERFLOW.write().expect("harmonic cache poisoned");
    let mut acc = cache.last().copied().unwrap_or(base[TABLE_SIZE]);
    while cache.len() <= offset {
        let i = TABLE_SIZE + 1 + cache.len();
        acc += 1.0 / i as f64;
        cache.push(acc);
    }
    cache[offset]
}

/// `c(size) = 2 H(size - 1) - 2 (size - 1) / size` for `size >= 2`, else 0.
pub fn expected_path_c<F: Scalar>(size: usize) -> F {
    F::from_f64_lossy(expected_path_c_f64(size))
}

pub(crate) fn expected_path_c_f64(size: usize) -> f64 {
    if size <= 1 {
        return 0.0;
    }
    let n = size as f64;
    2.0 * harmonic(size - 1) - 2.0 * (n - 1.0) / n
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: plain summation loop, no tables.
    fn c_oracle(size: usize) -> f64 {
        if size <= 1 {
            return 0.0;
        }
        let mut h = 0.0f64;
        for i in 1..size {
            h += 1.0 / i as f64;
        }
        2.0 * h - 2.0 * (size as f64 - 1.0) / size as f64
    }

    #[test]
    fn small_sizes() {
        assert_eq!(expected_path_c::<f64>(0), 0.0);
        assert_eq!(expected_path_c::<f64>(1), 0.0);
        assert_eq!(expected_path_c::<f64>(2), 1.0);
        // 11/3 - 3/2 = 13/6
        assert!((expected_path_c::<f64>(4) - 13.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn matches_summation_oracle() {
        for size in [2, 3, 4, 7, 100, 256, 4096, 4097, 5000, 20_000] {
            let got = expected_path_c::<f64>(size);
            let want = c_oracle(size);
            assert!((got - want).abs() <= 1e-12 * want, "size {size}: {got} vs {want}");
        }
    }

    #[test]
    fn asymptote_is_continuous_at_exact_limit() {
        let below = harmonic(EXACT_LIMIT);
        let above = harmonic(EXACT_LIMIT + 1);
        assert!(above > below);
        assert!((above - below - 1.0 / (EXACT_LIMIT as f64 + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn f32_variant() {
        assert_eq!(expected_path_c::<f32>(2), 1.0f32);
        assert!((expected_path_c::<f32>(4) - 2.166_666_7f32).abs() < 1e-6);
    }
}
