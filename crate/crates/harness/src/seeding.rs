use sha2::{Digest, Sha256};

/// Stable per-run seed from the plan seed, the image identity, and the
/// attack name. Order-independent batches hash rather than share a stream.
pub fn derive_seed(plan_seed: u64, image_id: u64, attack: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(plan_seed.to_le_bytes());
    hasher.update(image_id.to_le_bytes());
    hasher.update(attack.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
