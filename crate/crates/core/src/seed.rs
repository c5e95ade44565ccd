//! Deterministic seed derivation.
//!
//! All randomness in a run flows from one top-level `u64` seed. Sub-streams
//! are derived by hashing `(root, domain, counter)` with SHA-256 and feeding
//! the digest to ChaCha12, so independent pipeline stages never share or
//! reuse a stream regardless of execution order:
//!
//! ```text
//! key = SHA-256( root_le || 0x1f || domain_utf8 || 0x1f || counter_le )
//! ```
//!
//! The same `(root, domain, counter)` triple always yields the same generator
//! on every platform.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

/// Derives a 32-byte ChaCha key from the root seed, a domain string, and a
/// counter.
pub fn derive_key(root: u64, domain: &str, counter: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(domain.as_bytes());
    hasher.update([0x1f]);
    hasher.update(counter.to_le_bytes());
    hasher.finalize().into()
}

/// Deterministic RNG for the given sub-stream.
pub fn derive_rng(root: u64, domain: &str, counter: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(root, domain, counter))
}

/// Derives a child `u64` seed, for passing down to APIs that take raw seeds.
pub fn derive_seed(root: u64, domain: &str, counter: u64) -> u64 {
    let key = derive_key(root, domain, counter);
    u64::from_le_bytes(key[..8].try_into().unwrap())
}
