use std::hash::Hasher;

use fnv::FnvHasher;

/// Mixes a base seed with labelled parts into an independent, platform-stable
/// sub-seed.
pub fn derive_seed(base: u64, parts: &[&[u8]]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&base.to_le_bytes());
    for p in parts {
        h.write(&(p.len() as u64).to_le_bytes());
        h.write(p);
    }
    h.finish()
}
