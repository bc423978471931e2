//! The deterministic ledger transition system over a UTXO set, its batched
//! extension, and parallel validation over disjoint UTXO partitions.
//!
//! Canonical transaction serialization (all integers little-endian):
//!
//! ```text
//! u32 input_count
//!   per input:  prevout txid (32 bytes) | prevout index (u32) |
//!               witness length (u32)    | witness bytes
//! u32 output_count
//!   per output: value (u64) | owner digest (32 bytes)
//! u8  is_coinbase (0 or 1)
//! ```
//!
//! The transaction id is double SHA-256 over those bytes. The signing hash
//! (`sighash`) is double SHA-256 over the same serialization with every
//! witness replaced by the empty string, so witnesses can commit to the
//! transaction without committing to themselves.
//!
//! Validation cost is measured in deterministic operation counts — one unit
//! per UTXO lookup, one per witness check, one per output insert — never in
//! wall-clock time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{sha256, sha256d, Hash256};

/// Reference to a transaction output: creating txid plus output position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Outpoint {
    pub txid: Hash256,
    pub index: u32,
}

/// A spendable output: abstract currency units locked to a key digest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutput {
    pub value: u64,
    pub owner: Hash256,
}

/// One transaction input: the outpoint it spends and the witness that proves
/// ownership under the active [`WitnessMode`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxInput {
    pub prevout: Outpoint,
    pub witness: Vec<u8>,
}

/// How witnesses are checked against the owner digest of the spent output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    /// Simulation mode: the witness is a 32-byte preimage and the check is
    /// `sha256(witness) == owner`.
    #[default]
    HashPreimage,
    /// Real signatures: the witness is a 32-byte Ed25519 verifying key plus a
    /// 64-byte signature over the transaction sighash, and the check is
    /// `sha256(key) == owner` plus signature verification.
    Ed25519,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxBuildError {
    #[error("non-coinbase transaction needs at least one input")]
    NoInputs,
    #[error("coinbase transaction must have no inputs")]
    CoinbaseWithInputs,
    #[error("output {index} has zero value")]
    ZeroValueOutput { index: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("serialization truncated reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after transaction")]
    Trailing(usize),
    #[error("coinbase flag must be 0 or 1, got {0}")]
    BadCoinbaseFlag(u8),
    #[error(transparent)]
    Structure(#[from] TxBuildError),
}

/// A structurally valid transaction. Construction always derives the txid
/// from the canonical serialization, so the two can never disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    inputs: Vec<TxInput>,
    outputs: Vec<TxOutput>,
    is_coinbase: bool,
    txid: Hash256,
}

impl Transaction {
    /// Build a non-coinbase transaction.
    pub fn new(inputs: Vec<TxInput>, outputs: Vec<TxOutput>) -> Result<Self, TxBuildError> {
        if inputs.is_empty() {
            return Err(TxBuildError::NoInputs);
        }
        Self::build(inputs, outputs, false)
    }

    /// Build a coinbase transaction; it has no inputs and its outputs are new
    /// issuance.
    pub fn coinbase(outputs: Vec<TxOutput>) -> Result<Self, TxBuildError> {
        Self::build(Vec::new(), outputs, true)
    }

    fn build(
        inputs: Vec<TxInput>,
        outputs: Vec<TxOutput>,
        is_coinbase: bool,
    ) -> Result<Self, TxBuildError> {
        if is_coinbase && !inputs.is_empty() {
            return Err(TxBuildError::CoinbaseWithInputs);
        }
        if let Some(index) = outputs.iter().position(|o| o.value == 0) {
            return Err(TxBuildError::ZeroValueOutput { index });
        }
        let txid = sha256d(&serialize(&inputs, &outputs, is_coinbase, false));
        Ok(Transaction {
            inputs,
            outputs,
            is_coinbase,
            txid,
        })
    }

    pub fn inputs(&self) -> &[TxInput] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[TxOutput] {
        &self.outputs
    }

    pub fn is_coinbase(&self) -> bool {
        self.is_coinbase
    }

    pub fn txid(&self) -> Hash256 {
        self.txid
    }

    /// Canonical serialization; `txid` is double SHA-256 of these bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        serialize(&self.inputs, &self.outputs, self.is_coinbase, false)
    }

    pub fn serialized_len(&self) -> usize {
        let inputs: usize = self.inputs.iter().map(|i| 40 + i.witness.len()).sum();
        4 + inputs + 4 + self.outputs.len() * 40 + 1
    }

    /// Hash that witnesses sign: the serialization with witnesses blanked.
    pub fn sighash(&self) -> Hash256 {
        sha256d(&serialize(
            &self.inputs,
            &self.outputs,
            self.is_coinbase,
            true,
        ))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut cur = Cursor { bytes, at: 0 };
        let input_count = cur.read_u32("input count")?;
        let mut inputs = Vec::with_capacity(input_count.min(1024) as usize);
        for _ in 0..input_count {
            let txid = cur.read_hash("input txid")?;
            let index = cur.read_u32("input index")?;
            let wlen = cur.read_u32("witness length")? as usize;
            let witness = cur.read_slice(wlen, "witness")?.to_vec();
            inputs.push(TxInput {
                prevout: Outpoint { txid, index },
                witness,
            });
        }
        let output_count = cur.read_u32("output count")?;
        let mut outputs = Vec::with_capacity(output_count.min(1024) as usize);
        for _ in 0..output_count {
            let value = cur.read_u64("output value")?;
            let owner = cur.read_hash("output owner")?;
            outputs.push(TxOutput { value, owner });
        }
        let flag = cur.read_slice(1, "coinbase flag")?[0];
        let is_coinbase = match flag {
            0 => false,
            1 => true,
            other => return Err(CodecError::BadCoinbaseFlag(other)),
        };
        if cur.at != bytes.len() {
            return Err(CodecError::Trailing(bytes.len() - cur.at));
        }
        Ok(Self::build(inputs, outputs, is_coinbase)?)
    }
}

fn serialize(
    inputs: &[TxInput],
    outputs: &[TxOutput],
    is_coinbase: bool,
    blank_witness: bool,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + inputs.len() * 48 + outputs.len() * 40);
    buf.extend_from_slice(&(inputs.len() as u32).to_le_bytes());
    for input in inputs {
        buf.extend_from_slice(input.prevout.txid.as_bytes());
        buf.extend_from_slice(&input.prevout.index.to_le_bytes());
        if blank_witness {
            buf.extend_from_slice(&0u32.to_le_bytes());
        } else {
            buf.extend_from_slice(&(input.witness.len() as u32).to_le_bytes());
            buf.extend_from_slice(&input.witness);
        }
    }
    buf.extend_from_slice(&(outputs.len() as u32).to_le_bytes());
    for output in outputs {
        buf.extend_from_slice(&output.value.to_le_bytes());
        buf.extend_from_slice(output.owner.as_bytes());
    }
    buf.push(u8::from(is_coinbase));
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn read_slice(&mut self, len: usize, what: &'static str) -> Result<&'a [u8], CodecError> {
        let end = self
            .at
            .checked_add(len)
            .ok_or(CodecError::Truncated(what))?;
        if end > self.bytes.len() {
            return Err(CodecError::Truncated(what));
        }
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn read_u32(&mut self, what: &'static str) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(
            self.read_slice(4, what)?.try_into().unwrap(),
        ))
    }

    fn read_u64(&mut self, what: &'static str) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(
            self.read_slice(8, what)?.try_into().unwrap(),
        ))
    }

    fn read_hash(&mut self, what: &'static str) -> Result<Hash256, CodecError> {
        let mut h = [0u8; 32];
        h.copy_from_slice(self.read_slice(32, what)?);
        Ok(Hash256(h))
    }
}

/// Build an Ed25519-signed transaction spending `prevouts` with the paired
/// signing keys. Each spent output's owner digest must be the SHA-256 of the
/// corresponding verifying key.
pub fn signed_transaction_ed25519(
    prevouts: &[(Outpoint, ed25519_dalek::SigningKey)],
    outputs: Vec<TxOutput>,
) -> Result<Transaction, TxBuildError> {
    use ed25519_dalek::Signer;
    let unsigned_inputs: Vec<TxInput> = prevouts
        .iter()
        .map(|(prevout, _)| TxInput {
            prevout: *prevout,
            witness: Vec::new(),
        })
        .collect();
    let unsigned = Transaction::new(unsigned_inputs, outputs.clone())?;
    let sighash = unsigned.sighash();
    let inputs = prevouts
        .iter()
        .map(|(prevout, key)| {
            let mut witness = Vec::with_capacity(96);
            witness.extend_from_slice(key.verifying_key().as_bytes());
            witness.extend_from_slice(&key.sign(sighash.as_bytes()).to_bytes());
            TxInput {
                prevout: *prevout,
                witness,
            }
        })
        .collect();
    Transaction::new(inputs, outputs)
}

/// Owner digest for an Ed25519 verifying key.
pub fn ed25519_owner(key: &ed25519_dalek::VerifyingKey) -> Hash256 {
    sha256(key.as_bytes())
}

fn witness_ok(mode: WitnessMode, sighash: &Hash256, witness: &[u8], owner: &Hash256) -> bool {
    match mode {
        WitnessMode::HashPreimage => witness.len() == 32 && sha256(witness) == *owner,
        WitnessMode::Ed25519 => {
            use ed25519_dalek::{Signature, Verifier, VerifyingKey};
            if witness.len() != 96 {
                return false;
            }
            let key_bytes: [u8; 32] = witness[..32].try_into().unwrap();
            if sha256(&key_bytes) != *owner {
                return false;
            }
            let Ok(key) = VerifyingKey::from_bytes(&key_bytes) else {
                return false;
            };
            let sig = Signature::from_bytes(witness[32..].try_into().unwrap());
            key.verify(sighash.as_bytes(), &sig).is_ok()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxError {
    #[error("input {} :{} is unknown or already spent", .0.txid, .0.index)]
    MissingInput(Outpoint),
    #[error("outputs ({outputs}) exceed resolved inputs ({inputs})")]
    ValueOverflow { inputs: u128, outputs: u128 },
    #[error("witness for input {input_index} fails the ownership check")]
    BadWitness { input_index: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("batch failed at transaction {index}: {cause}")]
pub struct BatchError {
    pub index: usize,
    pub cause: TxError,
}

/// A ledger state: the UTXO set plus chain height. Values are immutable;
/// every transition produces a fresh state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerState {
    utxo: BTreeMap<Outpoint, TxOutput>,
    height: u64,
    witness_mode: WitnessMode,
}

impl LedgerState {
    /// The genesis state: empty UTXO set at height zero.
    pub fn empty() -> Self {
        LedgerState {
            utxo: BTreeMap::new(),
            height: 0,
            witness_mode: WitnessMode::HashPreimage,
        }
    }

    pub fn with_witness_mode(mut self, mode: WitnessMode) -> Self {
        self.witness_mode = mode;
        self
    }

    /// Synthetic state from explicit entries, for fixtures and workloads.
    pub fn from_entries(entries: impl IntoIterator<Item = (Outpoint, TxOutput)>) -> Self {
        LedgerState {
            utxo: entries.into_iter().collect(),
            height: 0,
            witness_mode: WitnessMode::HashPreimage,
        }
    }

    pub fn utxo(&self) -> &BTreeMap<Outpoint, TxOutput> {
        &self.utxo
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub(crate) fn set_height(&mut self, height: u64) {
        self.height = height;
    }

    pub fn witness_mode(&self) -> WitnessMode {
        self.witness_mode
    }

    pub fn len(&self) -> usize {
        self.utxo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utxo.is_empty()
    }

    pub fn total_value(&self) -> u128 {
        self.utxo.values().map(|o| o.value as u128).sum()
    }

    /// Snapshot serialization: witness mode byte, height (u64 LE), entry
    /// count (u64 LE), then each `(outpoint, output)` in sorted order as
    /// txid (32) | index (u32 LE) | value (u64 LE) | owner (32).
    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + self.utxo.len() * 76);
        out.push(match self.witness_mode {
            WitnessMode::HashPreimage => 0,
            WitnessMode::Ed25519 => 1,
        });
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.utxo.len() as u64).to_le_bytes());
        for (outpoint, output) in &self.utxo {
            out.extend_from_slice(outpoint.txid.as_bytes());
            out.extend_from_slice(&outpoint.index.to_le_bytes());
            out.extend_from_slice(&output.value.to_le_bytes());
            out.extend_from_slice(output.owner.as_bytes());
        }
        out
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut cur = Cursor { bytes, at: 0 };
        let witness_mode = match cur.read_slice(1, "witness mode")?[0] {
            0 => WitnessMode::HashPreimage,
            1 => WitnessMode::Ed25519,
            other => return Err(CodecError::BadCoinbaseFlag(other)),
        };
        let height = cur.read_u64("height")?;
        let count = cur.read_u64("entry count")?;
        let mut utxo = BTreeMap::new();
        for _ in 0..count {
            let txid = cur.read_hash("outpoint txid")?;
            let index = cur.read_u32("outpoint index")?;
            let value = cur.read_u64("output value")?;
            let owner = cur.read_hash("output owner")?;
            utxo.insert(Outpoint { txid, index }, TxOutput { value, owner });
        }
        if cur.at != bytes.len() {
            return Err(CodecError::Trailing(bytes.len() - cur.at));
        }
        Ok(LedgerState {
            utxo,
            height,
            witness_mode,
        })
    }

    /// Order-independent digest of the UTXO set: SHA-256 over the sorted
    /// `(outpoint, output)` serializations. Depends on the set contents only.
    pub fn state_digest(&self) -> Hash256 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (outpoint, output) in &self.utxo {
            hasher.update(outpoint.txid.as_bytes());
            hasher.update(outpoint.index.to_le_bytes());
            hasher.update(output.value.to_le_bytes());
            hasher.update(output.owner.as_bytes());
        }
        Hash256(hasher.finalize().into())
    }
}

/// Operation counter shared by the sequential and parallel validation paths.
#[derive(Clone, Copy, Debug, Default)]
struct OpCounter {
    ops: u64,
}

impl OpCounter {
    fn lookup(&mut self) {
        self.ops += 1;
    }
    fn witness_check(&mut self) {
        self.ops += 1;
    }
    fn insert(&mut self) {
        self.ops += 1;
    }
}

/// Validate `tx` against `utxo` without mutating it. Inputs are checked in
/// order: presence first, then the witness; a duplicate prevout within the
/// same transaction fails as [`TxError::MissingInput`] on its second
/// occurrence. Value conservation is checked after all inputs resolve.
fn validate_tx(
    utxo: &BTreeMap<Outpoint, TxOutput>,
    tx: &Transaction,
    mode: WitnessMode,
    counter: &mut OpCounter,
) -> Result<(), TxError> {
    let mut input_sum: u128 = 0;
    let mut seen: Vec<&Outpoint> = Vec::with_capacity(tx.inputs.len());
    let sighash = match mode {
        WitnessMode::HashPreimage => Hash256::ZERO,
        WitnessMode::Ed25519 => tx.sighash(),
    };
    for (input_index, input) in tx.inputs.iter().enumerate() {
        counter.lookup();
        if seen.contains(&&input.prevout) {
            return Err(TxError::MissingInput(input.prevout));
        }
        let output = utxo
            .get(&input.prevout)
            .ok_or(TxError::MissingInput(input.prevout))?;
        counter.witness_check();
        if !witness_ok(mode, &sighash, &input.witness, &output.owner) {
            return Err(TxError::BadWitness { input_index });
        }
        input_sum += output.value as u128;
        seen.push(&input.prevout);
    }
    if !tx.is_coinbase {
        let output_sum: u128 = tx.outputs.iter().map(|o| o.value as u128).sum();
        if output_sum > input_sum {
            return Err(TxError::ValueOverflow {
                inputs: input_sum,
                outputs: output_sum,
            });
        }
    }
    Ok(())
}

fn apply_validated(
    utxo: &mut BTreeMap<Outpoint, TxOutput>,
    tx: &Transaction,
    counter: &mut OpCounter,
) {
    for input in &tx.inputs {
        utxo.remove(&input.prevout);
    }
    for (index, output) in tx.outputs.iter().enumerate() {
        counter.insert();
        utxo.insert(
            Outpoint {
                txid: tx.txid,
                index: index as u32,
            },
            *output,
        );
    }
}

fn validate_and_apply(
    utxo: &mut BTreeMap<Outpoint, TxOutput>,
    tx: &Transaction,
    mode: WitnessMode,
    counter: &mut OpCounter,
) -> Result<(), TxError> {
    validate_tx(utxo, tx, mode, counter)?;
    apply_validated(utxo, tx, counter);
    Ok(())
}

/// The transition function: apply one transaction to a state. All inputs are
/// removed from the UTXO set and all outputs inserted keyed by
/// `(txid, index)`. Height is unchanged; block application advances it.
pub fn apply_tx(state: &LedgerState, tx: &Transaction) -> Result<LedgerState, TxError> {
    let mut next = state.clone();
    let mut counter = OpCounter::default();
    validate_and_apply(&mut next.utxo, tx, state.witness_mode, &mut counter)?;
    Ok(next)
}

/// Accounting for one batch application.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    /// Deterministic operation count (lookups + witness checks + inserts).
    pub ops: u64,
    /// Largest UTXO set size observed after any transaction.
    pub peak_utxo_entries: u64,
    /// Value created by coinbase outputs.
    pub issuance: u128,
    /// Value left unclaimed by non-coinbase transactions (inputs − outputs).
    pub fees: u128,
}

/// The n-fold extension of the transition function: the left fold of
/// [`apply_tx`] over `txs`. Fails atomically: on the first invalid
/// transaction the error names its position and the caller's state is
/// untouched.
pub fn apply_batch(state: &LedgerState, txs: &[Transaction]) -> Result<LedgerState, BatchError> {
    apply_batch_with_stats(state, txs).map(|(next, _)| next)
}

/// [`apply_batch`] plus operation-count and value-flow accounting.
pub fn apply_batch_with_stats(
    state: &LedgerState,
    txs: &[Transaction],
) -> Result<(LedgerState, BatchStats), BatchError> {
    let mut next = state.clone();
    let mut counter = OpCounter::default();
    let mut stats = BatchStats {
        peak_utxo_entries: next.utxo.len() as u64,
        ..BatchStats::default()
    };
    for (index, tx) in txs.iter().enumerate() {
        let before: u128 = tx
            .inputs
            .iter()
            .filter_map(|i| next.utxo.get(&i.prevout))
            .map(|o| o.value as u128)
            .sum();
        validate_and_apply(&mut next.utxo, tx, state.witness_mode, &mut counter)
            .map_err(|cause| BatchError { index, cause })?;
        let output_sum: u128 = tx.outputs.iter().map(|o| o.value as u128).sum();
        if tx.is_coinbase {
            stats.issuance += output_sum;
        } else {
            stats.fees += before - output_sum;
        }
        stats.peak_utxo_entries = stats.peak_utxo_entries.max(next.utxo.len() as u64);
    }
    stats.ops = counter.ops;
    Ok((next, stats))
}

/// Partition index of an outpoint: first 64 bits of its txid (little-endian)
/// modulo the partition count. All outputs of one transaction co-locate.
pub fn partition_of(outpoint: &Outpoint, partitions: u32) -> u32 {
    partition_of_txid(&outpoint.txid, partitions)
}

fn partition_of_txid(txid: &Hash256, partitions: u32) -> u32 {
    (txid.prefix_u64() % partitions as u64) as u32
}

/// One member of a disjoint cover of the UTXO key set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtxoPartition {
    pub partition_id: u32,
    pub members: BTreeSet<Outpoint>,
}

/// Deterministic partition of a state's UTXO set into `m` disjoint parts.
pub fn partition_state(state: &LedgerState, m: u32) -> Vec<UtxoPartition> {
    assert!(m >= 1, "partition count must be at least 1");
    let mut parts: Vec<UtxoPartition> = (0..m)
        .map(|partition_id| UtxoPartition {
            partition_id,
            members: BTreeSet::new(),
        })
        .collect();
    for outpoint in state.utxo.keys() {
        parts[partition_of(outpoint, m) as usize]
            .members
            .insert(*outpoint);
    }
    parts
}

/// Cost accounting for one parallel validation run.
///
/// The critical path is the busiest partition phase plus the sequential merge
/// phase. `peak_utxo_entries` is sampled at the join points of the schedule
/// (initial state, end of the partition phase, and after each merge-phase
/// transaction).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationCost {
    pub per_partition_ops: Vec<u64>,
    pub merge_ops: u64,
    pub total_ops: u64,
    pub critical_path_ops: u64,
    pub peak_utxo_entries: u64,
    pub deferred_txs: u64,
}

/// Parallel validation over disjoint UTXO partitions.
///
/// Two-phase schedule: transactions whose inputs and outputs all live in one
/// partition run concurrently within that partition, in original order;
/// everything else — cross-partition spenders and any transaction depending
/// (transitively) on one — is deferred to a sequential merge phase that also
/// preserves original order. The result is bit-identical to [`apply_batch`];
/// on invalid input the batch is re-validated sequentially so the error
/// surface (failing index and cause) is identical too.
pub fn apply_parallel(
    state: &LedgerState,
    txs: &[Transaction],
    m: u32,
) -> Result<(LedgerState, ValidationCost), BatchError> {
    use rayon::prelude::*;

    assert!(m >= 1, "partition count must be at least 1");

    // Schedule: home partition per transaction, spanners and dependents deferred.
    let mut worker_lists: Vec<Vec<usize>> = vec![Vec::new(); m as usize];
    let mut deferred: Vec<usize> = Vec::new();
    let mut deferred_txids: BTreeSet<Hash256> = BTreeSet::new();
    for (i, tx) in txs.iter().enumerate() {
        let home = partition_of_txid(&tx.txid(), m);
        let single_partition = tx
            .inputs()
            .iter()
            .all(|input| partition_of(&input.prevout, m) == home);
        let depends_on_deferred = tx
            .inputs()
            .iter()
            .any(|input| deferred_txids.contains(&input.prevout.txid));
        if single_partition && !depends_on_deferred {
            worker_lists[home as usize].push(i);
        } else {
            deferred.push(i);
            deferred_txids.insert(tx.txid());
        }
    }

    // Split the UTXO set into per-partition slices.
    let mut slices: Vec<BTreeMap<Outpoint, TxOutput>> = vec![BTreeMap::new(); m as usize];
    for (outpoint, output) in &state.utxo {
        slices[partition_of(outpoint, m) as usize].insert(*outpoint, *output);
    }
    let initial_len = state.utxo.len() as u64;

    // Partition phase: independent workers over disjoint slices.
    let mode = state.witness_mode;
    let work: Vec<(BTreeMap<Outpoint, TxOutput>, Vec<usize>)> =
        slices.into_iter().zip(worker_lists).collect();
    let outcomes: Vec<(BTreeMap<Outpoint, TxOutput>, u64, bool)> = work
        .into_par_iter()
        .map(|(mut slice, list)| {
            let mut counter = OpCounter::default();
            for &i in &list {
                if validate_and_apply(&mut slice, &txs[i], mode, &mut counter).is_err() {
                    return (slice, counter.ops, true);
                }
            }
            (slice, counter.ops, false)
        })
        .collect();

    let phase_failed = outcomes.iter().any(|(_, _, failed)| *failed);
    if phase_failed {
        return Err(sequential_error(state, txs));
    }

    // Join: slices are key-disjoint by construction.
    let mut per_partition_ops = Vec::with_capacity(m as usize);
    let mut merged: BTreeMap<Outpoint, TxOutput> = BTreeMap::new();
    for (slice, ops, _) in outcomes {
        per_partition_ops.push(ops);
        merged.extend(slice);
    }
    let mut peak = initial_len.max(merged.len() as u64);

    // Merge phase: deferred transactions in original order.
    let mut merge_counter = OpCounter::default();
    for &i in &deferred {
        if validate_and_apply(&mut merged, &txs[i], mode, &mut merge_counter).is_err() {
            return Err(sequential_error(state, txs));
        }
        peak = peak.max(merged.len() as u64);
    }

    let busiest = per_partition_ops.iter().copied().max().unwrap_or(0);
    let cost = ValidationCost {
        total_ops: per_partition_ops.iter().sum::<u64>() + merge_counter.ops,
        critical_path_ops: busiest + merge_counter.ops,
        merge_ops: merge_counter.ops,
        per_partition_ops,
        peak_utxo_entries: peak,
        deferred_txs: deferred.len() as u64,
    };
    let next = LedgerState {
        utxo: merged,
        height: state.height,
        witness_mode: state.witness_mode,
    };
    Ok((next, cost))
}

/// Re-validate sequentially to report the canonical failing index. The
/// schedule guarantees a parallel failure implies a sequential one.
fn sequential_error(state: &LedgerState, txs: &[Transaction]) -> BatchError {
    match apply_batch(state, txs) {
        Err(err) => err,
        Ok(_) => unreachable!(
            "parallel validation failed but sequential validation succeeded; \
             the partition schedule is unsound"
        ),
    }
}
