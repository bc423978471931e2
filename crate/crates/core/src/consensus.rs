//! Proof-of-work block production, cumulative-work chain selection, and the
//! adversarial reorg game behind the security predicate.
//!
//! The adversary race is a Bernoulli block-production game (gambler's ruin):
//! each production event goes to the adversary with probability `alpha`,
//! otherwise to the honest majority. The adversary starts `reorg_depth`
//! blocks behind, wins on erasing the deficit, and is absorbed as failed on
//! falling [`REORG_MAX_LAG`] blocks behind. Difficulty is static per
//! scenario; retargeting is orthogonal to every predicate evaluated here.

use num_bigint::BigUint;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::Hash256;
use crate::ledger::{
    apply_batch, apply_batch_with_stats, BatchError, CodecError, LedgerState, Transaction,
};
use crate::merkle::{merkle_root, BlockHeader, HEADER_BYTES};
use crate::rng::{derive_seed, rng_for};

/// Seconds between consecutive block timestamps in mined fixtures.
pub const BLOCK_TIME_STEP_SECS: u64 = 600;

/// Absorbing failure barrier of the reorg race: an adversary this many blocks
/// behind is counted as failed.
pub const REORG_MAX_LAG: i64 = 100;

/// A block: header plus ordered transactions. If any transactions are
/// present, the first (and only the first) must be the coinbase. There is no
/// protocol-level bound on transaction count or byte size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn txids(&self) -> Vec<Hash256> {
        self.transactions.iter().map(|tx| tx.txid()).collect()
    }

    /// Merkle root commitment of the transaction list; the zero hash for an
    /// empty block.
    pub fn compute_merkle_root(&self) -> Hash256 {
        let txids = self.txids();
        if txids.is_empty() {
            Hash256::ZERO
        } else {
            merkle_root(&txids).expect("non-empty txid list")
        }
    }

    /// Serialization: 120 header bytes, u32 LE transaction count, then each
    /// transaction as u32 LE length prefix plus canonical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.header.to_bytes());
        out.extend_from_slice(&(self.transactions.len() as u32).to_le_bytes());
        for tx in &self.transactions {
            let bytes = tx.to_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ChainError> {
        if bytes.len() < HEADER_BYTES + 4 {
            return Err(ChainError::Codec("block shorter than header".into()));
        }
        let header = BlockHeader::from_bytes(&bytes[..HEADER_BYTES])
            .map_err(|e| ChainError::Codec(e.to_string()))?;
        let mut at = HEADER_BYTES;
        let count = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        at += 4;
        let mut transactions = Vec::with_capacity(count.min(4096) as usize);
        for _ in 0..count {
            if at + 4 > bytes.len() {
                return Err(ChainError::Codec("truncated transaction length".into()));
            }
            let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
            at += 4;
            if at + len > bytes.len() {
                return Err(ChainError::Codec("truncated transaction".into()));
            }
            let tx = Transaction::from_bytes(&bytes[at..at + len])
                .map_err(|e: CodecError| ChainError::Codec(e.to_string()))?;
            at += len;
            transactions.push(tx);
        }
        if at != bytes.len() {
            return Err(ChainError::Codec(format!(
                "{} trailing bytes after block",
                bytes.len() - at
            )));
        }
        Ok(Block {
            header,
            transactions,
        })
    }

    pub fn serialized_size(&self) -> u64 {
        self.to_bytes().len() as u64
    }
}

/// Work contributed by one block at `target`: `2^256 / (target + 1)`.
pub fn block_work(target: &Hash256) -> BigUint {
    let numerator = BigUint::from(1u8) << 256u32;
    let denominator = BigUint::from_bytes_be(target.as_bytes()) + 1u8;
    numerator / denominator
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("chain must contain at least the genesis block")]
    Empty,
    #[error("block {height}: prev_hash does not match the prior header")]
    BrokenLink { height: u64 },
    #[error("block {height}: header does not meet its difficulty target")]
    InsufficientWork { height: u64 },
    #[error("block {height}: merkle root does not commit to the transactions")]
    MerkleMismatch { height: u64 },
    #[error("block {height}: coinbase must be first and unique")]
    CoinbaseLayout { height: u64 },
    #[error("block {height}: header height does not match chain position")]
    HeightMismatch { height: u64 },
    #[error("block {height}: ledger replay failed: {source}")]
    ReplayFailed { height: u64, source: BatchError },
    #[error("decode failed: {0}")]
    Codec(String),
}

/// A validated chain from genesis with its accumulated proof-of-work.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    cumulative_work: BigUint,
}

impl Chain {
    /// Structural validation: height continuity, hash links, proof-of-work,
    /// Merkle commitments, and coinbase layout. Ledger validity is checked
    /// separately by [`Chain::replay`].
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, ChainError> {
        if blocks.is_empty() {
            return Err(ChainError::Empty);
        }
        let mut cumulative_work = BigUint::ZERO;
        for (i, block) in blocks.iter().enumerate() {
            let height = block.header.height;
            if height != i as u64 {
                return Err(ChainError::HeightMismatch { height });
            }
            if i > 0 && block.header.prev_hash != blocks[i - 1].header.hash() {
                return Err(ChainError::BrokenLink { height });
            }
            if !block.header.meets_target() {
                return Err(ChainError::InsufficientWork { height });
            }
            if block.header.merkle_root != block.compute_merkle_root() {
                return Err(ChainError::MerkleMismatch { height });
            }
            let coinbase_ok = block
                .transactions
                .iter()
                .enumerate()
                .all(|(pos, tx)| tx.is_coinbase() == (pos == 0));
            if !coinbase_ok {
                return Err(ChainError::CoinbaseLayout { height });
            }
            cumulative_work += block_work(&block.header.difficulty_target);
        }
        Ok(Chain {
            blocks,
            cumulative_work,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chains are non-empty")
    }

    pub fn cumulative_work(&self) -> &BigUint {
        &self.cumulative_work
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for block in &self.blocks {
            let bytes = block.to_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ChainError> {
        if bytes.len() < 4 {
            return Err(ChainError::Codec("truncated chain".into()));
        }
        let count = u32::from_le_bytes(bytes[..4].try_into().unwrap());
        let mut at = 4;
        let mut blocks = Vec::with_capacity(count.min(4096) as usize);
        for _ in 0..count {
            if at + 4 > bytes.len() {
                return Err(ChainError::Codec("truncated block length".into()));
            }
            let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
            at += 4;
            if at + len > bytes.len() {
                return Err(ChainError::Codec("truncated block".into()));
            }
            blocks.push(Block::from_bytes(&bytes[at..at + len])?);
            at += len;
        }
        if at != bytes.len() {
            return Err(ChainError::Codec(format!(
                "{} trailing bytes after chain",
                bytes.len() - at
            )));
        }
        Chain::from_blocks(blocks)
    }

    /// Replay every block's transactions from the given genesis state; the
    /// resulting tip state is valid by construction.
    pub fn replay(&self, genesis: &LedgerState) -> Result<LedgerState, ChainError> {
        let mut state = genesis.clone();
        for block in &self.blocks {
            state = apply_block(&state, block).map_err(|source| ChainError::ReplayFailed {
                height: block.header.height,
                source,
            })?;
        }
        Ok(state)
    }
}

/// Apply a block to a ledger state: batch-apply its transactions, then
/// advance the height to the block's.
pub fn apply_block(state: &LedgerState, block: &Block) -> Result<LedgerState, BatchError> {
    let mut next = apply_batch(state, &block.transactions)?;
    next.set_height(block.header.height);
    Ok(next)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MiningError {
    #[error("transaction batch invalid: {0}")]
    InvalidBatch(#[from] BatchError),
    #[error("coinbase must be first and unique in the block's transactions")]
    CoinbaseLayout,
    #[error("nonce space exhausted without meeting the target")]
    TargetUnreachable,
}

/// Mine one block on top of `prev`: validate the transactions against
/// `state`, then search nonces from a seed-derived starting point until the
/// header hash meets `target`. Returns the block and the number of hash
/// attempts, which is the cost unit of the adversary model. Deterministic
/// given `rng_seed`.
pub fn mine_block(
    state: &LedgerState,
    txs: &[Transaction],
    prev: &BlockHeader,
    target: Hash256,
    rng_seed: u64,
) -> Result<(Block, u64), MiningError> {
    apply_batch(state, txs)?;
    let coinbase_ok = txs
        .iter()
        .enumerate()
        .all(|(pos, tx)| tx.is_coinbase() == (pos == 0));
    if !coinbase_ok {
        return Err(MiningError::CoinbaseLayout);
    }
    let mut block = Block {
        header: BlockHeader {
            prev_hash: prev.hash(),
            merkle_root: Hash256::ZERO,
            height: prev.height + 1,
            timestamp: prev.timestamp + BLOCK_TIME_STEP_SECS,
            difficulty_target: target,
            nonce: 0,
        },
        transactions: txs.to_vec(),
    };
    block.header.merkle_root = block.compute_merkle_root();
    let start = derive_seed(rng_seed, "mining-nonce", 0);
    for attempt in 0..u64::MAX {
        block.header.nonce = start.wrapping_add(attempt);
        if block.header.meets_target() {
            return Ok((block, attempt + 1));
        }
    }
    Err(MiningError::TargetUnreachable)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectError {
    #[error("no candidate chains to select from")]
    EmptyCandidateSet,
}

/// Consensus selection: the chain with the greatest cumulative work wins;
/// equal-work ties go to the earliest candidate in input order. Candidates
/// are assumed valid and rooted at the same genesis.
pub fn select_chain(candidates: &[Chain]) -> Result<&Chain, SelectError> {
    let mut best: Option<&Chain> = None;
    for candidate in candidates {
        match best {
            None => best = Some(candidate),
            Some(current) if candidate.cumulative_work() > current.cumulative_work() => {
                best = Some(candidate)
            }
            Some(_) => {}
        }
    }
    best.ok_or(SelectError::EmptyCandidateSet)
}

/// Adversary parameters for the reorg race.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryModel {
    /// Fraction of block-production events the adversary wins, in `[0, 1)`.
    pub alpha: f64,
    /// Honest lead (in blocks) the adversary must erase.
    pub reorg_depth: u32,
    /// Abstract cost per adversary block-production attempt.
    pub unit_cost: f64,
    /// Resource budget the adversary must stay under to count as a cheap
    /// attack.
    pub resource_bound: f64,
}

impl AdversaryModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(format!("alpha must be in [0,1), got {}", self.alpha));
        }
        if self.reorg_depth == 0 {
            return Err("reorg depth must be at least 1".into());
        }
        if !self.unit_cost.is_finite() || self.unit_cost < 0.0 {
            return Err("unit cost must be finite and non-negative".into());
        }
        if !self.resource_bound.is_finite() || self.resource_bound < 0.0 {
            return Err("resource bound must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of the reorg race.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorgOutcome {
    /// Estimated probability the adversary erases the honest lead.
    pub p_hat: f64,
    /// Estimated probability of success while spending under the resource
    /// bound (`attempts * unit_cost < resource_bound`).
    pub p_hat_within_budget: f64,
    /// Mean adversary block-production events per trial.
    pub mean_attempts: f64,
    /// `mean_attempts * unit_cost`.
    pub mean_cost: f64,
    pub successes: u64,
    pub trials: u64,
}

/// Run the gambler's-ruin race `trials` times. Trials are independent with
/// per-trial derived seeds, so the estimate is identical across thread
/// counts.
pub fn reorg_success_probability(
    model: &AdversaryModel,
    trials: u64,
    rng_seed: u64,
) -> ReorgOutcome {
    assert!(trials >= 1, "at least one trial required");
    assert!((0.0..1.0).contains(&model.alpha), "alpha must be in [0,1)");
    let depth = model.reorg_depth.max(1) as i64;
    let (successes, bounded, attempts_total) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_for(rng_seed, "reorg-trial", trial);
            let mut deficit = depth;
            let mut attempts: u64 = 0;
            let won = loop {
                if deficit >= REORG_MAX_LAG {
                    break false;
                }
                if rng.random::<f64>() < model.alpha {
                    attempts += 1;
                    deficit -= 1;
                    if deficit == 0 {
                        break true;
                    }
                } else {
                    deficit += 1;
                }
            };
            let under_budget = won && (attempts as f64 * model.unit_cost) < model.resource_bound;
            (u64::from(won), u64::from(under_budget), attempts as u128)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean_attempts = attempts_total as f64 / trials as f64;
    ReorgOutcome {
        p_hat: successes as f64 / trials as f64,
        p_hat_within_budget: bounded as f64 / trials as f64,
        mean_attempts,
        mean_cost: mean_attempts * model.unit_cost,
        successes,
        trials,
    }
}

/// Security verdict for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S1Report {
    pub holds: bool,
    /// Every corpus batch applied cleanly and conserved value.
    pub predicate_ok: bool,
    pub p_hat: f64,
    pub p_hat_within_budget: f64,
    pub mean_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl S1Report {
    pub(crate) fn failed(message: String) -> Self {
        S1Report {
            holds: false,
            predicate_ok: false,
            p_hat: 0.0,
            p_hat_within_budget: 0.0,
            mean_cost: 0.0,
            error: Some(message),
        }
    }
}

/// Core of the security predicate, fed an explicit validation corpus:
/// (a) every batch must apply cleanly and satisfy the value-conservation
/// identity `total_after + fees = total_before + issuance`;
/// (b) the probability of a reorg succeeding within the resource bound must
/// not exceed `epsilon_sec`.
pub fn evaluate_s1_with_corpus(
    adversary: &AdversaryModel,
    epsilon_sec: f64,
    trials: u64,
    rng_seed: u64,
    corpus: &[(LedgerState, Vec<Transaction>)],
) -> S1Report {
    let mut predicate_ok = true;
    for (state, txs) in corpus {
        match apply_batch_with_stats(state, txs) {
            Ok((next, stats)) => {
                let before = state.total_value();
                let after = next.total_value();
                if after + stats.fees != before + stats.issuance {
                    predicate_ok = false;
                }
            }
            Err(_) => predicate_ok = false,
        }
    }
    let outcome = reorg_success_probability(adversary, trials, rng_seed);
    S1Report {
        holds: predicate_ok && outcome.p_hat_within_budget <= epsilon_sec,
        predicate_ok,
        p_hat: outcome.p_hat,
        p_hat_within_budget: outcome.p_hat_within_budget,
        mean_cost: outcome.mean_cost,
        error: None,
    }
}
