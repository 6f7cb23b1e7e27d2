//! Seeded random assembly instances for equivalence testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::triplet::{AssemblyRequest, Dimensions, TripletList};

/// How values are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueMode {
    /// Small integers in `-5..=5`, zeros included.
    Integer,
    /// Mixed-sign floats of varying magnitude, with signed zeros.
    Float,
    /// As `Float`, with roughly 5% NaN.
    WithNan,
}

#[derive(Clone, Copy, Debug)]
pub struct FuzzConfig {
    pub max_len: usize,
    pub max_dim: usize,
    /// Fraction of instances capped at `small_len` elements.
    pub small_fraction: f64,
    pub small_len: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            max_len: 50_000,
            max_dim: 2_000,
            small_fraction: 0.3,
            small_len: 2_000,
        }
    }
}

/// Description of a generated instance.
#[derive(Clone, Copy, Debug)]
pub struct FuzzCase {
    pub seed: u64,
    pub len: usize,
    pub dims: Dimensions,
    pub duplicate_fraction: f64,
    pub values: ValueMode,
    pub explicit_dims: bool,
}

fn draw_value(rng: &mut ChaCha8Rng, mode: ValueMode) -> f64 {
    match mode {
        ValueMode::Integer => rng.gen_range(-5i32..=5) as f64,
        ValueMode::Float | ValueMode::WithNan => {
            if mode == ValueMode::WithNan && rng.gen_bool(0.05) {
                return if rng.gen_bool(0.5) { f64::NAN } else { -f64::NAN };
            }
            match rng.gen_range(0..10) {
                0 => 0.0,
                1 => -0.0,
                _ => {
                    let mag = 10f64.powi(rng.gen_range(-8..=8));
                    rng.gen_range(-1.0..1.0) * mag
                }
            }
        }
    }
}

/// A random request: dimensions up to `max_dim`, length up to `max_len`,
/// a duplicate fraction in `[0, 1]`, and explicit (possibly larger)
/// dimensions half of the time.
pub fn random_request(seed: u64, cfg: &FuzzConfig) -> (AssemblyRequest, FuzzCase) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=cfg.max_dim);
    let n = rng.gen_range(1..=cfg.max_dim);
    let cap = if rng.gen_bool(cfg.small_fraction) {
        cfg.small_len.min(cfg.max_len)
    } else {
        cfg.max_len
    };
    let len = rng.gen_range(0..=cap);
    let duplicate_fraction = match rng.gen_range(0..6) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.0..1.0),
    };
    let values = match rng.gen_range(0..3) {
        0 => ValueMode::Integer,
        1 => ValueMode::Float,
        _ => ValueMode::WithNan,
    };

    // duplicates are drawn from a pool of distinct-ish pairs
    let pool_len = ((len as f64) * (1.0 - duplicate_fraction)).ceil().max(1.0) as usize;
    let pool: Vec<(u32, u32)> = (0..pool_len)
        .map(|_| (rng.gen_range(1..=m as u32), rng.gen_range(1..=n as u32)))
        .collect();
    let mut rows = Vec::with_capacity(len);
    let mut cols = Vec::with_capacity(len);
    let mut vals = Vec::with_capacity(len);
    for _ in 0..len {
        let (r, c) = if rng.gen_bool(duplicate_fraction) {
            pool[rng.gen_range(0..pool_len)]
        } else {
            (rng.gen_range(1..=m as u32), rng.gen_range(1..=n as u32))
        };
        rows.push(r);
        cols.push(c);
        vals.push(draw_value(&mut rng, values));
    }

    let t = TripletList::new(rows, cols, vals).expect("generated indices are valid");
    let explicit_dims = rng.gen_bool(0.5);
    let req = if explicit_dims {
        let dims = Dimensions::new(m + rng.gen_range(0..3), n + rng.gen_range(0..3));
        AssemblyRequest::new(t).with_dims(dims).expect("dims cover indices")
    } else {
        AssemblyRequest::new(t)
    };
    let case = FuzzCase {
        seed,
        len,
        dims: req.dims(),
        duplicate_fraction,
        values,
        explicit_dims,
    };
    (req, case)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let cfg = FuzzConfig::default();
        for seed in 0..5 {
            let (a, _) = random_request(seed, &cfg);
            let (b, _) = random_request(seed, &cfg);
            let (ta, tb) = (a.triplets(), b.triplets());
            assert_eq!((ta.rows(), ta.cols()), (tb.rows(), tb.cols()));
            let bits = |t: &TripletList| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ta), bits(tb));
            assert_eq!(a.dims(), b.dims());
        }
    }

    #[test]
    fn within_limits() {
        let cfg = FuzzConfig::default();
        for seed in 0..50 {
            let (req, case) = random_request(seed, &cfg);
            assert!(case.len <= cfg.max_len);
            assert!(req.dims().covers(&req.triplets().extent()));
            assert!(req.dims().nrows <= cfg.max_dim + 2);
        }
    }
}
