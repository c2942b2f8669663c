//! Counter-based uniforms for the regression noise. Each draw is a pure
//! function of `(seed, iteration, attr, row)`, so the order in which rows
//! are visited, and by how many threads, cannot change it.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TWO_POW_53: f64 = (1u64 << 53) as f64;

/// `(U1, U2)` with `U1` in `(0, 1]` and `U2` in `[0, 1)`.
pub fn noise_stream(seed: u64, iteration: usize, attr: usize, row: usize) -> (f64, f64) {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ iteration as u64);
    h = splitmix64(h ^ attr as u64);
    h = splitmix64(h ^ row as u64);
    let a = splitmix64(h);
    let b = splitmix64(h ^ 0xD1B5_4A32_D192_ED03);
    let u1 = ((a >> 11) + 1) as f64 / TWO_POW_53;
    let u2 = (b >> 11) as f64 / TWO_POW_53;
    (u1, u2)
}
