//! Merkle tree construction, inclusion proofs, and SPV verification.
//!
//! Conventions, fixed so golden vectors stay portable:
//! - interior node = double SHA-256 of `left || right`, with no domain
//!   separation between leaf and interior nodes (the known duplicate-leaf
//!   malleability of this scheme is out of scope here);
//! - an odd node at any level is combined with itself;
//! - the root of a single-leaf tree is the leaf hash itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{sha256d, Hash256};

/// Canonical block header serialization length in bytes.
pub const HEADER_BYTES: usize = 120;

/// Which side of the combine the sibling hash occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// One level of an inclusion proof: the sibling hash and its side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub sibling: Hash256,
    pub side: Side,
}

/// Inclusion proof for the leaf at `leaf_index`, ordered leaf-to-root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleProof {
    pub leaf_index: usize,
    pub path: Vec<ProofStep>,
}

/// Block header: the SPV-visible commitment to a block.
///
/// Canonical serialization is 120 bytes in declaration order: `prev_hash`
/// (32), `merkle_root` (32), `height` (u64 LE), `timestamp` (u64 LE),
/// `difficulty_target` (32), `nonce` (u64 LE). The header hash is double
/// SHA-256 over those bytes, and a header meets its difficulty when
/// `hash <= difficulty_target` in big-endian numeric order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub prev_hash: Hash256,
    pub merkle_root: Hash256,
    pub height: u64,
    pub timestamp: u64,
    pub difficulty_target: Hash256,
    pub nonce: u64,
}

impl BlockHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_BYTES] {
        let mut out = [0u8; HEADER_BYTES];
        out[0..32].copy_from_slice(self.prev_hash.as_bytes());
        out[32..64].copy_from_slice(self.merkle_root.as_bytes());
        out[64..72].copy_from_slice(&self.height.to_le_bytes());
        out[72..80].copy_from_slice(&self.timestamp.to_le_bytes());
        out[80..112].copy_from_slice(self.difficulty_target.as_bytes());
        out[112..120].copy_from_slice(&self.nonce.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MerkleError> {
        if bytes.len() != HEADER_BYTES {
            return Err(MerkleError::BadHeaderLength { len: bytes.len() });
        }
        let take32 = |at: usize| -> Hash256 {
            let mut h = [0u8; 32];
            h.copy_from_slice(&bytes[at..at + 32]);
            Hash256(h)
        };
        let take64 =
            |at: usize| -> u64 { u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) };
        Ok(BlockHeader {
            prev_hash: take32(0),
            merkle_root: take32(32),
            height: take64(64),
            timestamp: take64(72),
            difficulty_target: take32(80),
            nonce: take64(112),
        })
    }

    pub fn hash(&self) -> Hash256 {
        sha256d(&self.to_bytes())
    }

    pub fn meets_target(&self) -> bool {
        self.hash() <= self.difficulty_target
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("cannot build a Merkle tree over zero leaves")]
    EmptyLeafSet,
    #[error("leaf index {index} out of range for {leaves} leaves")]
    IndexOutOfRange { index: usize, leaves: usize },
    #[error("block header must be {HEADER_BYTES} bytes, got {len}")]
    BadHeaderLength { len: usize },
}

fn combine(left: &Hash256, right: &Hash256) -> Hash256 {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(left.as_bytes());
    buf[32..].copy_from_slice(right.as_bytes());
    sha256d(&buf)
}

/// Merkle root of an ordered, non-empty leaf list.
pub fn merkle_root(txids: &[Hash256]) -> Result<Hash256, MerkleError> {
    if txids.is_empty() {
        return Err(MerkleError::EmptyLeafSet);
    }
    let mut level = txids.to_vec();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            let left = &pair[0];
            let right = pair.get(1).unwrap_or(left);
            next.push(combine(left, right));
        }
        level = next;
    }
    Ok(level[0])
}

/// Inclusion proof for `txids[index]` against `merkle_root(txids)`.
pub fn merkle_prove(txids: &[Hash256], index: usize) -> Result<MerkleProof, MerkleError> {
    if txids.is_empty() {
        return Err(MerkleError::EmptyLeafSet);
    }
    if index >= txids.len() {
        return Err(MerkleError::IndexOutOfRange {
            index,
            leaves: txids.len(),
        });
    }
    let mut path = Vec::new();
    let mut level = txids.to_vec();
    let mut pos = index;
    while level.len() > 1 {
        let sibling_pos = pos ^ 1;
        let (sibling, side) = if pos % 2 == 0 {
            // Last odd node pairs with itself.
            (*level.get(sibling_pos).unwrap_or(&level[pos]), Side::Right)
        } else {
            (level[sibling_pos], Side::Left)
        };
        path.push(ProofStep { sibling, side });
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            let left = &pair[0];
            let right = pair.get(1).unwrap_or(left);
            next.push(combine(left, right));
        }
        level = next;
        pos /= 2;
    }
    Ok(MerkleProof {
        leaf_index: index,
        path,
    })
}

/// SPV acceptance: true iff folding `txid` up the proof path reproduces the
/// header's Merkle root. Structural mismatches (side annotations inconsistent
/// with the claimed leaf index, or an index outside the tree the path
/// describes) return false rather than erroring.
pub fn spv_verify(txid: Hash256, header: &BlockHeader, proof: &MerkleProof) -> bool {
    if proof.path.len() < usize::BITS as usize && proof.leaf_index >> proof.path.len() != 0 {
        return false;
    }
    let mut acc = txid;
    for (depth, step) in proof.path.iter().enumerate() {
        let index_bit = (proof.leaf_index >> depth) & 1;
        let expected_side = if index_bit == 1 {
            Side::Left
        } else {
            Side::Right
        };
        if step.side != expected_side {
            return false;
        }
        acc = match step.side {
            Side::Left => combine(&step.sibling, &acc),
            Side::Right => combine(&acc, &step.sibling),
        };
    }
    acc == header.merkle_root
}

/// One golden vector: a leaf list, a proven index, and the expected outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenVector {
    pub leaves: Vec<Hash256>,
    pub index: usize,
    pub root: Hash256,
    pub proof: MerkleProof,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VectorError {
    #[error("golden vector line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("golden vector line {line}: root mismatch (expected {expected}, computed {computed})")]
    RootMismatch {
        line: usize,
        expected: Hash256,
        computed: Hash256,
    },
    #[error("golden vector line {line}: proof does not verify")]
    ProofRejected { line: usize },
    #[error("golden vector line {line}: proof mismatch against regenerated proof")]
    ProofMismatch { line: usize },
}

/// Format: `<leaves> <index> <root> <proof>` per line, where `<leaves>` is
/// comma-separated hex, `<proof>` is comma-separated `L:<hex>`/`R:<hex>`
/// steps (the letter names the sibling's side) or `-` for an empty path.
/// Lines starting with `#` are comments.
pub fn format_vector_line(v: &GoldenVector) -> String {
    let leaves = v
        .leaves
        .iter()
        .map(Hash256::to_hex)
        .collect::<Vec<_>>()
        .join(",");
    let proof = if v.proof.path.is_empty() {
        "-".to_string()
    } else {
        v.proof
            .path
            .iter()
            .map(|s| {
                let tag = match s.side {
                    Side::Left => 'L',
                    Side::Right => 'R',
                };
                format!("{tag}:{}", s.sibling.to_hex())
            })
            .collect::<Vec<_>>()
            .join(",")
    };
    format!("{leaves} {} {} {proof}", v.index, v.root.to_hex())
}

pub fn parse_vector_line(text: &str, line: usize) -> Result<GoldenVector, VectorError> {
    let err = |reason: &str| VectorError::Parse {
        line,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(err("expected 4 whitespace-separated fields"));
    }
    let leaves = fields[0]
        .split(',')
        .map(Hash256::from_hex)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| err(&format!("bad leaf hex: {e}")))?;
    let index: usize = fields[1].parse().map_err(|_| err("bad index"))?;
    if index >= leaves.len() {
        return Err(err(&format!(
            "index {index} out of range for {} leaves",
            leaves.len()
        )));
    }
    let root = Hash256::from_hex(fields[2]).map_err(|e| err(&format!("bad root hex: {e}")))?;
    let path = if fields[3] == "-" {
        Vec::new()
    } else {
        fields[3]
            .split(',')
            .map(|step| {
                let (tag, hex) = step
                    .split_once(':')
                    .ok_or_else(|| err("proof step missing ':'"))?;
                let side = match tag {
                    "L" => Side::Left,
                    "R" => Side::Right,
                    _ => return Err(err("proof side must be L or R")),
                };
                let sibling =
                    Hash256::from_hex(hex).map_err(|e| err(&format!("bad step hex: {e}")))?;
                Ok(ProofStep { sibling, side })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(GoldenVector {
        leaves,
        index,
        root,
        proof: MerkleProof {
            leaf_index: index,
            path,
        },
    })
}

/// Deterministic golden-vector corpus: for each leaf count `1..=max_leaves`,
/// one vector per leaf index, with leaf contents drawn from the seed.
pub fn golden_corpus(seed: u64, max_leaves: usize) -> Vec<GoldenVector> {
    use rand::RngExt;
    let mut out = Vec::new();
    for n in 1..=max_leaves {
        let mut rng = crate::rng::rng_for(seed, "merkle-vectors", n as u64);
        let leaves: Vec<Hash256> = (0..n).map(|_| Hash256(rng.random())).collect();
        let root = merkle_root(&leaves).expect("non-empty leaf list");
        for index in 0..n {
            let proof = merkle_prove(&leaves, index).expect("index in range");
            out.push(GoldenVector {
                leaves: leaves.clone(),
                index,
                root,
                proof,
            });
        }
    }
    out
}

/// Re-derive and verify every vector in a golden file's contents.
pub fn check_vectors(text: &str) -> Result<usize, VectorError> {
    let mut checked = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v = parse_vector_line(trimmed, line)?;
        let computed = merkle_root(&v.leaves).map_err(|e| VectorError::Parse {
            line,
            reason: e.to_string(),
        })?;
        if computed != v.root {
            return Err(VectorError::RootMismatch {
                line,
                expected: v.root,
                computed,
            });
        }
        let header = BlockHeader {
            prev_hash: Hash256::ZERO,
            merkle_root: v.root,
            height: 0,
            timestamp: 0,
            difficulty_target: Hash256::MAX,
            nonce: 0,
        };
        if !spv_verify(v.leaves[v.index], &header, &v.proof) {
            return Err(VectorError::ProofRejected { line });
        }
        let regenerated = merkle_prove(&v.leaves, v.index).map_err(|e| VectorError::Parse {
            line,
            reason: e.to_string(),
        })?;
        if regenerated != v.proof {
            return Err(VectorError::ProofMismatch { line });
        }
        checked += 1;
    }
    Ok(checked)
}
