//! 256-bit hash values and the hashing primitives shared across the lab.
//!
//! Byte-lexicographic ordering on [`Hash256`] doubles as big-endian numeric
//! comparison, which is how difficulty targets are compared.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A 256-bit hash value (transaction id, block hash, Merkle node, key digest).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash256(pub [u8; 32]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0u8; 32]);
    /// All-ones value; as a difficulty target it accepts every hash.
    pub const MAX: Hash256 = Hash256([0xff; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// First eight bytes interpreted as a little-endian integer. This is the
    /// value that UTXO partition routing reduces modulo the partition count.
    pub fn prefix_u64(&self) -> u64 {
        u64::from_le_bytes(self.0[..8].try_into().unwrap())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let bytes = hex::decode(s)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| hex::FromHexError::InvalidStringLength)?;
        Ok(Hash256(arr))
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.to_hex())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Hash256 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Hash256::from_hex(&s).map_err(D::Error::custom)
    }
}

/// Single SHA-256.
pub fn sha256(data: &[u8]) -> Hash256 {
    let digest = Sha256::digest(data);
    Hash256(digest.into())
}

/// Double SHA-256, used for transaction ids, block header hashes, and Merkle
/// interior nodes.
pub fn sha256d(data: &[u8]) -> Hash256 {
    let first = Sha256::digest(data);
    let second = Sha256::digest(first);
    Hash256(second.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let h = sha256(b"trilab");
        let parsed = Hash256::from_hex(&h.to_hex()).unwrap();
        assert_eq!(h, parsed);
    }

    #[test]
    fn ordering_is_big_endian_numeric() {
        let mut low = [0u8; 32];
        low[31] = 1; // value 1
        let mut high = [0u8; 32];
        high[0] = 1; // value 2^248
        assert!(Hash256(low) < Hash256(high));
        assert!(Hash256(high) < Hash256::MAX);
    }

    #[test]
    fn double_hash_differs_from_single() {
        assert_ne!(sha256(b"x"), sha256d(b"x"));
    }

    #[test]
    fn prefix_is_little_endian() {
        let mut raw = [0u8; 32];
        raw[0] = 0x01;
        raw[1] = 0x02;
        assert_eq!(Hash256(raw).prefix_u64(), 0x0201);
    }
}
