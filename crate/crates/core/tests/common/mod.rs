//! Shared test oracles, all deliberately naive and independent of the
//! implementation paths they check.

#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use trilab::hash::{sha256, Hash256};
use trilab::ledger::{LedgerState, Outpoint, Transaction, TxInput, TxOutput};
use trilab::netgraph::NetworkGraph;

pub type TestRng = rand::rngs::ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

pub fn flip_bit(h: Hash256, bit: usize) -> Hash256 {
    let mut raw = *h.as_bytes();
    raw[bit / 8] ^= 0x80 >> (bit % 8);
    Hash256(raw)
}

// ---------------------------------------------------------------------------
// Reference UTXO interpreter: a list with linear scans, no maps, no sharing
// with the ledger implementation.

pub struct RefLedger {
    pub entries: Vec<(Outpoint, TxOutput)>,
}

impl RefLedger {
    pub fn from_state(state: &LedgerState) -> Self {
        RefLedger {
            entries: state.utxo().iter().map(|(k, v)| (*k, *v)).collect(),
        }
    }

    fn find(&self, outpoint: &Outpoint) -> Option<usize> {
        self.entries.iter().position(|(k, _)| k == outpoint)
    }

    /// Step the naive interpreter by one transaction. Witnesses follow the
    /// hash-preimage rule; value conservation applies to non-coinbase.
    pub fn apply(&mut self, tx: &Transaction) -> Result<(), String> {
        let mut resolved: Vec<usize> = Vec::new();
        let mut input_sum: u128 = 0;
        for input in tx.inputs() {
            let at = self
                .find(&input.prevout)
                .ok_or_else(|| format!("missing input {:?}", input.prevout))?;
            if resolved.contains(&at) {
                return Err("duplicate input".into());
            }
            let owner = self.entries[at].1.owner;
            if input.witness.len() != 32 || sha256(&input.witness) != owner {
                return Err("bad witness".into());
            }
            input_sum += self.entries[at].1.value as u128;
            resolved.push(at);
        }
        let output_sum: u128 = tx.outputs().iter().map(|o| o.value as u128).sum();
        if !tx.is_coinbase() && output_sum > input_sum {
            return Err("value overflow".into());
        }
        resolved.sort_unstable_by(|a, b| b.cmp(a));
        for at in resolved {
            self.entries.remove(at);
        }
        for (index, output) in tx.outputs().iter().enumerate() {
            self.entries.push((
                Outpoint {
                    txid: tx.txid(),
                    index: index as u32,
                },
                *output,
            ));
        }
        Ok(())
    }

    pub fn apply_all(&mut self, txs: &[Transaction]) -> Result<(), (usize, String)> {
        for (i, tx) in txs.iter().enumerate() {
            self.apply(tx).map_err(|e| (i, e))?;
        }
        Ok(())
    }

    pub fn total_value(&self) -> u128 {
        self.entries.iter().map(|(_, o)| o.value as u128).sum()
    }

    /// Materialize as a ledger state (sorted set semantics) for digest
    /// comparison.
    pub fn to_state(&self) -> LedgerState {
        LedgerState::from_entries(self.entries.iter().copied())
    }
}

// ---------------------------------------------------------------------------
// Randomized transaction workloads for equivalence and totality tests.

pub struct TxSpring {
    preimages: Vec<[u8; 32]>,
    available: Vec<(Outpoint, u64, usize)>, // (outpoint, value, key index)
    counter: u64,
}

/// Generates random transaction streams over a synthetic base state:
/// spends of 1..=3 tracked outputs, occasional coinbases, and (optionally)
/// invalid transactions with known defects.
impl TxSpring {
    pub fn new(rng: &mut TestRng, base_outputs: usize) -> (LedgerState, TxSpring) {
        let mut spring = TxSpring {
            preimages: Vec::new(),
            available: Vec::new(),
            counter: 0,
        };
        let mut entries = Vec::new();
        for i in 0..base_outputs {
            let key = spring.new_key(rng);
            let outpoint = Outpoint {
                txid: sha256(&[b"base".as_slice(), &i.to_le_bytes()].concat()),
                index: 0,
            };
            let value = 100 + rng.random_range(0..900u64);
            entries.push((
                outpoint,
                TxOutput {
                    value,
                    owner: sha256(&spring.preimages[key]),
                },
            ));
            spring.available.push((outpoint, value, key));
        }
        (LedgerState::from_entries(entries), spring)
    }

    fn new_key(&mut self, rng: &mut TestRng) -> usize {
        let mut preimage = [0u8; 32];
        rng.fill(&mut preimage);
        self.preimages.push(preimage);
        self.preimages.len() - 1
    }

    /// A valid transaction spending 1..=3 random tracked outputs.
    pub fn valid_tx(&mut self, rng: &mut TestRng) -> Option<Transaction> {
        if self.available.is_empty() {
            return None;
        }
        let take = (1 + rng.random_range(0..3usize)).min(self.available.len());
        let mut inputs = Vec::new();
        let mut input_value: u64 = 0;
        for _ in 0..take {
            let at = rng.random_range(0..self.available.len());
            let (outpoint, value, key) = self.available.swap_remove(at);
            input_value += value;
            inputs.push(TxInput {
                prevout: outpoint,
                witness: self.preimages[key].to_vec(),
            });
        }
        let fee = rng.random_range(0..=input_value.min(5));
        let n_outputs = 1 + rng.random_range(0..2usize);
        let spendable = input_value - fee;
        let mut keyed_outputs: Vec<(TxOutput, usize)> = Vec::new();
        let mut remaining = spendable;
        for i in 0..n_outputs {
            if remaining == 0 {
                break;
            }
            let value = if i == n_outputs - 1 || remaining == 1 {
                remaining
            } else {
                1 + rng.random_range(0..remaining - 1)
            };
            remaining -= value;
            let key = self.new_key(rng);
            keyed_outputs.push((
                TxOutput {
                    value,
                    owner: sha256(&self.preimages[key]),
                },
                key,
            ));
        }
        let outputs: Vec<TxOutput> = keyed_outputs.iter().map(|(o, _)| *o).collect();
        let tx = Transaction::new(inputs, outputs).expect("structurally valid");
        for (index, (output, key)) in keyed_outputs.iter().enumerate() {
            self.available.push((
                Outpoint {
                    txid: tx.txid(),
                    index: index as u32,
                },
                output.value,
                *key,
            ));
        }
        Some(tx)
    }

    /// A coinbase minting a random amount to a fresh key.
    pub fn coinbase(&mut self, rng: &mut TestRng) -> Transaction {
        let key = self.new_key(rng);
        self.counter += 1;
        let value = 50 + self.counter; // unique values keep txids distinct
        let tx = Transaction::coinbase(vec![TxOutput {
            value,
            owner: sha256(&self.preimages[key]),
        }])
        .expect("valid coinbase");
        self.available.push((
            Outpoint {
                txid: tx.txid(),
                index: 0,
            },
            value,
            key,
        ));
        tx
    }

    /// An invalid transaction with a randomly chosen defect.
    pub fn invalid_tx(&mut self, rng: &mut TestRng) -> Option<Transaction> {
        if self.available.is_empty() {
            return None;
        }
        let at = rng.random_range(0..self.available.len());
        let (outpoint, value, key) = self.available[at];
        let defect = rng.random_range(0..3u8);
        let key_out = self.new_key(rng);
        let owner = sha256(&self.preimages[key_out]);
        let tx = match defect {
            0 => {
                // Unknown outpoint.
                let ghost = Outpoint {
                    txid: sha256(&self.counter.to_le_bytes()),
                    index: 7,
                };
                self.counter += 1;
                Transaction::new(
                    vec![TxInput {
                        prevout: ghost,
                        witness: self.preimages[key].to_vec(),
                    }],
                    vec![TxOutput { value: 1, owner }],
                )
            }
            1 => {
                // Wrong witness.
                let wrong = self.new_key(rng);
                Transaction::new(
                    vec![TxInput {
                        prevout: outpoint,
                        witness: self.preimages[wrong].to_vec(),
                    }],
                    vec![TxOutput { value, owner }],
                )
            }
            _ => {
                // Value inflation.
                Transaction::new(
                    vec![TxInput {
                        prevout: outpoint,
                        witness: self.preimages[key].to_vec(),
                    }],
                    vec![TxOutput {
                        value: value + 1,
                        owner,
                    }],
                )
            }
        };
        Some(tx.expect("structurally valid"))
    }
}

// ---------------------------------------------------------------------------
// Brute-force graph oracles (exhaustive enumeration; |V| <= 8 territory).

fn connected_after_removal(
    n: usize,
    edges: &[(u32, u32)],
    removed_edges: &[usize],
    removed_vertices: &[u32],
) -> bool {
    let alive: Vec<bool> = (0..n as u32)
        .map(|v| !removed_vertices.contains(&v))
        .collect();
    let mut adjacency = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        if removed_edges.contains(&i) || !alive[a as usize] || !alive[b as usize] {
            continue;
        }
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }
    let start = match (0..n as u32).find(|&v| alive[v as usize]) {
        Some(v) => v,
        None => return true,
    };
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start as usize] = true;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u as usize] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                stack.push(v);
            }
        }
    }
    (0..n).all(|v| !alive[v] || seen[v])
}

fn subsets_of_size(count: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn recur(
        start: usize,
        count: usize,
        size: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..count {
            current.push(i);
            recur(i + 1, count, size, current, out);
            current.pop();
        }
    }
    recur(0, count, size, &mut current, &mut out);
    out
}

/// Exhaustive edge connectivity: the smallest edge set whose removal
/// disconnects the graph.
pub fn brute_force_lambda(g: &NetworkGraph) -> u32 {
    let n = g.node_count();
    let edges: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.a, e.b)).collect();
    for k in 0..=edges.len() {
        for subset in subsets_of_size(edges.len(), k) {
            if !connected_after_removal(n, &edges, &subset, &[]) {
                return k as u32;
            }
        }
    }
    edges.len() as u32
}

/// Exhaustive vertex connectivity, with the complete-graph convention
/// κ(Kₙ) = n − 1.
pub fn brute_force_kappa(g: &NetworkGraph) -> u32 {
    let n = g.node_count();
    let edges: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.a, e.b)).collect();
    for k in 0..n.saturating_sub(1) {
        for subset in subsets_of_size(n, k) {
            let removed: Vec<u32> = subset.iter().map(|&v| v as u32).collect();
            // Disconnection requires at least two surviving vertices.
            if n - removed.len() < 2 {
                continue;
            }
            if !connected_after_removal(n, &edges, &[], &removed) {
                return k as u32;
            }
        }
    }
    (n - 1) as u32
}

/// Naive mean shortest path: an independent per-source BFS over a fresh
/// adjacency list built from the edge list.
pub fn brute_force_mean_path(g: &NetworkGraph) -> Option<f64> {
    let n = g.node_count();
    let mut adjacency = vec![Vec::new(); n];
    for edge in g.edges() {
        adjacency[edge.a as usize].push(edge.b);
        adjacency[edge.b as usize].push(edge.a);
    }
    let mut sum: u64 = 0;
    for source in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[source] = 0;
        let mut queue = std::collections::VecDeque::from([source as u32]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u as usize] {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in &dist {
            if d == u32::MAX {
                return None;
            }
            sum += d as u64;
        }
    }
    Some(sum as f64 / (n as f64 * (n as f64 - 1.0)))
}

// ---------------------------------------------------------------------------
// Closed-form oracle for the reorg race.

/// Gambler's-ruin catch-up probability for an attacker with event share
/// `alpha` erasing a `depth`-block deficit: `(q/p)^z` with `q = alpha`.
pub fn gamblers_ruin(alpha: f64, depth: u32) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    if alpha >= 0.5 {
        return 1.0;
    }
    (alpha / (1.0 - alpha)).powi(depth as i32)
}

// ---------------------------------------------------------------------------
// A small generated-graph corpus spanning every topology family.

pub fn small_graph_corpus() -> Vec<(String, NetworkGraph)> {
    use trilab::netgraph::{generate_topology, LinkProfile, RoleMix, TopologyKind, TopologySpec};
    let mut corpus = Vec::new();
    let mut push = |label: String, kind: TopologyKind, seed: u64| {
        let spec = TopologySpec {
            kind,
            roles: RoleMix::default(),
            link: LinkProfile::default(),
        };
        corpus.push((label, generate_topology(&spec, seed).expect("valid params")));
    };
    for n in 3..=8 {
        push(format!("ring{n}"), TopologyKind::Ring { n }, n as u64);
    }
    for leaves in 2..=7 {
        push(
            format!("star{leaves}"),
            TopologyKind::Star { leaves },
            leaves as u64,
        );
    }
    for n in [4, 6, 8] {
        for arity in [1, 2, 3] {
            push(
                format!("tree{n}a{arity}"),
                TopologyKind::Tree { n, arity },
                (n * 10 + arity) as u64,
            );
        }
    }
    for (rows, cols) in [(2, 2), (2, 3), (2, 4), (3, 2)] {
        push(
            format!("grid{rows}x{cols}"),
            TopologyKind::Grid { rows, cols },
            (rows * 10 + cols) as u64,
        );
    }
    for (n, degree, seed) in [
        (6, 2, 1),
        (6, 3, 2),
        (8, 3, 3),
        (8, 4, 4),
        (8, 5, 5),
        (7, 4, 6),
    ] {
        push(
            format!("rr{n}d{degree}s{seed}"),
            TopologyKind::RandomRegular { n, degree },
            seed,
        );
    }
    for redundancy in 1..=4 {
        push(
            format!("baran2x4r{redundancy}"),
            TopologyKind::BaranLattice {
                rows: 2,
                cols: 4,
                redundancy,
            },
            redundancy as u64,
        );
    }
    corpus
}

/// A larger corpus (up to a few dozen vertices) for flow-vs-Whitney checks
/// where brute force would be too slow.
pub fn medium_graph_corpus() -> Vec<(String, NetworkGraph)> {
    use trilab::netgraph::{generate_topology, LinkProfile, RoleMix, TopologyKind, TopologySpec};
    let mut corpus = Vec::new();
    let mut push = |label: String, kind: TopologyKind, seed: u64| {
        let spec = TopologySpec {
            kind,
            roles: RoleMix::default(),
            link: LinkProfile::default(),
        };
        corpus.push((label, generate_topology(&spec, seed).expect("valid params")));
    };
    for (i, n) in [12u32, 20, 33].into_iter().enumerate() {
        push(format!("ring{n}"), TopologyKind::Ring { n }, i as u64);
    }
    for (i, (n, degree)) in [(16u32, 4u32), (24, 3), (30, 4), (16, 6)]
        .into_iter()
        .enumerate()
    {
        push(
            format!("rr{n}d{degree}"),
            TopologyKind::RandomRegular { n, degree },
            100 + i as u64,
        );
    }
    for (i, (rows, cols, redundancy)) in [
        (4u32, 4u32, 1u32),
        (4, 4, 2),
        (4, 4, 3),
        (4, 4, 4),
        (5, 5, 3),
    ]
    .into_iter()
    .enumerate()
    {
        push(
            format!("baran{rows}x{cols}r{redundancy}"),
            TopologyKind::BaranLattice {
                rows,
                cols,
                redundancy,
            },
            200 + i as u64,
        );
    }
    for (i, (n, arity)) in [(15u32, 2u32), (21, 4)].into_iter().enumerate() {
        push(
            format!("tree{n}a{arity}"),
            TopologyKind::Tree { n, arity },
            300 + i as u64,
        );
    }
    for (i, leaves) in [9u32, 17].into_iter().enumerate() {
        push(
            format!("star{leaves}"),
            TopologyKind::Star { leaves },
            400 + i as u64,
        );
    }
    for (i, (rows, cols)) in [(3u32, 5u32), (4, 6)].into_iter().enumerate() {
        push(
            format!("grid{rows}x{cols}"),
            TopologyKind::Grid { rows, cols },
            500 + i as u64,
        );
    }
    // Random-regular sweep: multiple seeds per (n, degree) point.
    for (i, (n, degree)) in [(10u32, 3u32), (12, 4), (14, 5), (18, 4), (20, 6), (26, 3)]
        .into_iter()
        .enumerate()
    {
        for seed in 0..6u64 {
            push(
                format!("rr{n}d{degree}x{seed}"),
                TopologyKind::RandomRegular { n, degree },
                600 + i as u64 * 10 + seed,
            );
        }
    }
    // Ring and lattice sweep for volume.
    for n in [9u32, 11, 15, 18, 24, 28] {
        push(
            format!("ringx{n}"),
            TopologyKind::Ring { n },
            700 + n as u64,
        );
    }
    for (i, (rows, cols, redundancy)) in [
        (2u32, 5u32, 2u32),
        (3, 4, 1),
        (3, 4, 4),
        (5, 4, 2),
        (6, 4, 3),
        (3, 7, 2),
    ]
    .into_iter()
    .enumerate()
    {
        push(
            format!("baranx{rows}x{cols}r{redundancy}"),
            TopologyKind::BaranLattice {
                rows,
                cols,
                redundancy,
            },
            800 + i as u64,
        );
    }
    for (i, (n, arity)) in [(10u32, 3u32), (13, 2), (18, 5), (25, 2)]
        .into_iter()
        .enumerate()
    {
        push(
            format!("treex{n}a{arity}"),
            TopologyKind::Tree { n, arity },
            900 + i as u64,
        );
    }
    for (i, leaves) in [5u32, 12, 20].into_iter().enumerate() {
        push(
            format!("starx{leaves}"),
            TopologyKind::Star { leaves },
            1000 + i as u64,
        );
    }
    for (i, (rows, cols)) in [(2u32, 8u32), (5, 5), (3, 9)].into_iter().enumerate() {
        push(
            format!("gridx{rows}x{cols}"),
            TopologyKind::Grid { rows, cols },
            1100 + i as u64,
        );
    }
    corpus
}
