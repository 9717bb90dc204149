//! Digitally shifted Sobol' points for initial designs and acquisition probes.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` direction-number rows for dimensions 2.. (Joe & Kuo).
const DIRECTIONS: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
];

/// Highest dimension with tabulated direction numbers.
pub const MAX_DIM: usize = DIRECTIONS.len() + 1;

fn direction_vector(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[dim - 1];
    let s = s as usize;
    for k in 0..BITS {
        if k < s {
            v[k] = m[k] << (BITS - 1 - k);
        } else {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for i in 1..s {
                if (a >> (s - 1 - i)) & 1 == 1 {
                    x ^= v[k - i];
                }
            }
            v[k] = x;
        }
    }
    v
}

/// `n` points in `[0, 1)^dim`. Dimensions beyond [`MAX_DIM`] fall back to
/// seeded uniform draws.
pub fn sobol_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_EED5_0B01_u64);
    let shifts: Vec<u32> = (0..dim).map(|_| rng.random()).collect();
    let dirs: Vec<[u32; BITS]> = (0..dim.min(MAX_DIM)).map(direction_vector).collect();
    let mut state = vec![0u32; dirs.len()];
    let scale = 1.0 / 4_294_967_296.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            // Gray-code step: flip the direction of the lowest zero bit of i-1.
            let c = (!(i - 1)).trailing_zeros() as usize;
            for (s, d) in state.iter_mut().zip(&dirs) {
                *s ^= d[c.min(BITS - 1)];
            }
        }
        let mut p = Vec::with_capacity(dim);
        for j in 0..dim {
            if j < state.len() {
                p.push(f64::from(state[j] ^ shifts[j]) * scale);
            } else {
                p.push(rng.random_range(0.0..1.0));
            }
        }
        out.push(p);
    }
    out
}
