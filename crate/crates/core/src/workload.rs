//! Canonical deterministic workloads for scalability measurements.
//!
//! Three workload shapes are defined, each generated entirely from a seed:
//!
//! - `partitionable`: every transaction spends one base output and pays one
//!   recipient, with both the spent outpoint and the transaction's own txid
//!   landing in the same partition (partitions assigned round-robin, so the
//!   load is balanced by construction). Recipient digests are searched until
//!   the txid lands in the intended partition, which costs an expected `m`
//!   hash evaluations per transaction.
//! - `cross_partition`: every transaction spends two base outputs from two
//!   different partitions, so every transaction defers to the merge phase.
//! - `mixed`: alternates the two shapes.

use serde::{Deserialize, Serialize};

use crate::hash::sha256;
use crate::ledger::{
    apply_parallel, partition_of, LedgerState, Outpoint, Transaction, TxInput, TxOutput,
    ValidationCost,
};
use crate::rng::derive_seed;

/// Value carried by every base output.
pub const BASE_OUTPUT_VALUE: u64 = 1_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    #[default]
    Partitionable,
    CrossPartition,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub seed: u64,
}

/// One generated workload: a base state and the transactions to run over it.
#[derive(Clone, Debug)]
pub struct Workload {
    pub state: LedgerState,
    pub txs: Vec<Transaction>,
}

fn preimage(seed: u64, index: u64) -> [u8; 32] {
    let mut p = [0u8; 32];
    p[..8].copy_from_slice(&derive_seed(seed, "preimage", index).to_le_bytes());
    p[8..16].copy_from_slice(&index.to_le_bytes());
    p
}

/// Fabricate a base outpoint whose txid prefix lands in `target_partition`.
fn base_outpoint(seed: u64, index: u64, m: u32, target_partition: u32) -> Outpoint {
    let mut attempt: u64 = 0;
    loop {
        let mut buf = [0u8; 24];
        buf[..8].copy_from_slice(&derive_seed(seed, "base", index).to_le_bytes());
        buf[8..16].copy_from_slice(&index.to_le_bytes());
        buf[16..].copy_from_slice(&attempt.to_le_bytes());
        let txid = sha256(&buf);
        if (txid.prefix_u64() % m as u64) as u32 == target_partition {
            return Outpoint { txid, index: 0 };
        }
        attempt += 1;
    }
}

/// Search recipient digests until the transaction's txid lands in
/// `target_partition`. Expected `m` attempts.
fn grind_tx(
    inputs: Vec<TxInput>,
    value: u64,
    seed: u64,
    index: u64,
    m: u32,
    target_partition: u32,
) -> Transaction {
    let mut attempt: u64 = 0;
    loop {
        let mut buf = [0u8; 24];
        buf[..8].copy_from_slice(&derive_seed(seed, "recipient", index).to_le_bytes());
        buf[8..16].copy_from_slice(&index.to_le_bytes());
        buf[16..].copy_from_slice(&attempt.to_le_bytes());
        let owner = sha256(&buf);
        let tx = Transaction::new(inputs.clone(), vec![TxOutput { value, owner }])
            .expect("workload transactions are structurally valid");
        if (tx.txid().prefix_u64() % m as u64) as u32 == target_partition {
            return tx;
        }
        attempt += 1;
    }
}

/// Generate `n` transactions (plus the base state they spend from) for the
/// given workload shape and partition count. Deterministic in
/// `(spec, n, m)`.
pub fn build(spec: &WorkloadSpec, n: u64, m: u32) -> Workload {
    assert!(m >= 1, "partition count must be at least 1");
    let mut entries = Vec::new();
    let mut txs = Vec::with_capacity(n as usize);
    let mut base_index: u64 = 0;
    let mut next_base =
        |target: u32, entries: &mut Vec<(Outpoint, TxOutput)>| -> (Outpoint, [u8; 32]) {
            let outpoint = base_outpoint(spec.seed, base_index, m, target);
            let pre = preimage(spec.seed, base_index);
            entries.push((
                outpoint,
                TxOutput {
                    value: BASE_OUTPUT_VALUE,
                    owner: sha256(&pre),
                },
            ));
            base_index += 1;
            (outpoint, pre)
        };

    for i in 0..n {
        let cross = match spec.kind {
            WorkloadKind::Partitionable => false,
            WorkloadKind::CrossPartition => true,
            WorkloadKind::Mixed => i % 2 == 1,
        };
        let home = (i % m as u64) as u32;
        if cross && m > 1 {
            let other = (home + 1) % m;
            let (op_a, pre_a) = next_base(home, &mut entries);
            let (op_b, pre_b) = next_base(other, &mut entries);
            let inputs = vec![
                TxInput {
                    prevout: op_a,
                    witness: pre_a.to_vec(),
                },
                TxInput {
                    prevout: op_b,
                    witness: pre_b.to_vec(),
                },
            ];
            // No grinding: the inputs already span two partitions.
            let owner = sha256(&derive_seed(spec.seed, "recipient", i).to_le_bytes());
            txs.push(
                Transaction::new(
                    inputs,
                    vec![TxOutput {
                        value: 2 * BASE_OUTPUT_VALUE,
                        owner,
                    }],
                )
                .expect("workload transactions are structurally valid"),
            );
        } else {
            let (outpoint, pre) = next_base(home, &mut entries);
            let inputs = vec![TxInput {
                prevout: outpoint,
                witness: pre.to_vec(),
            }];
            txs.push(grind_tx(inputs, BASE_OUTPUT_VALUE, spec.seed, i, m, home));
        }
    }

    Workload {
        state: LedgerState::from_entries(entries),
        txs,
    }
}

/// One measured point of the validation cost curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostPoint {
    pub n: u64,
    pub critical_path_ops: u64,
    pub total_ops: u64,
    pub peak_utxo_entries: u64,
}

/// Deterministic operation-count measurements of the n-fold transition over
/// the canonical workload, one point per requested batch size.
pub fn validation_cost_curve(spec: &WorkloadSpec, n_grid: &[u64], m: u32) -> Vec<CostPoint> {
    assert!(!n_grid.is_empty(), "n_grid must be non-empty");
    assert!(
        n_grid.windows(2).all(|w| w[0] < w[1]),
        "n_grid must be strictly ascending"
    );
    n_grid
        .iter()
        .map(|&n| {
            let workload = build(spec, n, m);
            let (_, cost): (LedgerState, ValidationCost) =
                apply_parallel(&workload.state, &workload.txs, m)
                    .expect("canonical workloads validate");
            CostPoint {
                n,
                critical_path_ops: cost.critical_path_ops,
                total_ops: cost.total_ops,
                peak_utxo_entries: cost.peak_utxo_entries,
            }
        })
        .collect()
}

/// True if every transaction keeps its inputs and its own txid in a single
/// partition (used by tests to pin the generator's contract).
pub fn is_fully_partitionable(workload: &Workload, m: u32) -> bool {
    workload.txs.iter().all(|tx| {
        let home = (tx.txid().prefix_u64() % m as u64) as u32;
        tx.inputs()
            .iter()
            .all(|i| partition_of(&i.prevout, m) == home)
    })
}
