//! Seed derivation from cell indices.
//!
//! Seeds depend only on the master seed and the indices of a chain in the
//! cross product, never on scheduling, so any worker count gives the same
//! chains.

/// Domain tag for sampler chains.
pub const DOMAIN_CHAIN: u64 = 0x6368_6169_6e00_0001;
/// Domain tag for random starting points.
pub const DOMAIN_START: u64 = 0x7374_6172_7400_0002;
/// Domain tag for assumption-checker sampling.
pub const DOMAIN_CHECK: u64 = 0x6368_6563_6b00_0003;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` and `parts` into a 64-bit seed.
pub fn derive_seed(master: u64, domain: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(domain));
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(h)));
    }
    h
}

/// Seed of replicate `rep` for `(algorithm, γ index, start index)`.
pub fn chain_seed(master: u64, algorithm_id: u64, gamma_idx: usize, start_idx: usize, rep: usize) -> u64 {
    derive_seed(
        master,
        DOMAIN_CHAIN,
        &[algorithm_id, gamma_idx as u64, start_idx as u64, rep as u64],
    )
}

/// Seed of the random starting point of replicate `rep`; shared by every
/// algorithm and step size so all samplers start from the same point.
pub fn start_seed(master: u64, start_idx: usize, rep: usize) -> u64 {
    derive_seed(master, DOMAIN_START, &[start_idx as u64, rep as u64])
}
