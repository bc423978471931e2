//! Composes the three predicate evaluators over a protocol configuration,
//! instantiates the reference counterexample configuration, runs the
//! causal-chain experiments, and assembles trilemma reports.
//!
//! Reports are bit-reproducible for a given `(config, seeds)` pair: all
//! randomness is derived from the first seed, and serialization sorts JSON
//! keys.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{evaluate_s1_with_corpus, AdversaryModel, S1Report};
use crate::hash::sha256;
use crate::ledger::{LedgerState, Transaction, WitnessMode};
use crate::netgraph::{
    evaluate_s3, generate_topology, NetworkGraph, S3Report, TopologyKind, TopologySpec,
};
use crate::propagation::{throughput_check, RelayModel, ThroughputReport};
use crate::rng::derive_seed;
use crate::workload::{validation_cost_curve, CostPoint, WorkloadKind, WorkloadSpec};

/// Default batch sizes for the scalability curve.
pub const DEFAULT_N_GRID: [u64; 4] = [1_000, 2_500, 5_000, 10_000];

/// Probe block size (bytes) for the informational throughput check when the
/// block size policy is unbounded.
pub const DEFAULT_PROBE_BLOCK_BYTES: u64 = 1_000_000;

/// Relative residual bound for accepting a linear cost fit.
pub const S2_RESIDUAL_BOUND: f64 = 0.05;

/// Parallelisation overhead allowance on the per-transaction slope bound.
pub const S2_OVERHEAD_ALLOWANCE: f64 = 1.1;

/// Validation batches replayed for the state-predicate half of S1.
const S1_CORPUS_BATCHES: u64 = 3;
const S1_CORPUS_TXS_PER_BATCH: u64 = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSizePolicy {
    Unbounded,
    Capped { bytes: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MulticastGroup {
    All,
    Nodes(Vec<u32>),
}

/// Relay discipline as written in configuration files; resolved against a
/// concrete topology via [`RelaySpec::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaySpec {
    UnicastGossip { fanout: u32 },
    CompactRelay { fanout: u32, known_tx_fraction: f64 },
    Multicast { group: MulticastGroup },
}

impl RelaySpec {
    pub fn resolve(&self, node_count: u32) -> RelayModel {
        match self {
            RelaySpec::UnicastGossip { fanout } => RelayModel::UnicastGossip { fanout: *fanout },
            RelaySpec::CompactRelay {
                fanout,
                known_tx_fraction,
            } => RelayModel::CompactRelay {
                fanout: *fanout,
                known_tx_fraction: *known_tx_fraction,
            },
            RelaySpec::Multicast { group } => RelayModel::Multicast {
                group: match group {
                    MulticastGroup::All => (0..node_count).collect(),
                    MulticastGroup::Nodes(ids) => ids.iter().copied().collect(),
                },
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S3Thresholds {
    /// Minimum vertex connectivity (must exceed 1).
    pub k: u32,
    /// Minimum edge connectivity (must exceed 1).
    pub l: u32,
    /// Maximum mean shortest path in hops.
    pub max_mean_path: f64,
}

/// One point of the protocol configuration space: everything the three
/// predicates need, in one serializable record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub topology: TopologySpec,
    pub relay: RelaySpec,
    /// UTXO partition count for parallel validation.
    pub partitions: u32,
    pub block_interval_ms: f64,
    pub block_size_policy: BlockSizePolicy,
    pub adversary: AdversaryModel,
    pub s3_thresholds: S3Thresholds,
    /// The "negligible" bound for the security predicate.
    pub security_threshold: f64,
    /// Monte-Carlo trials for the reorg race.
    pub mc_trials: u64,
    /// Canonical workload shape for the scalability curve.
    #[serde(default)]
    pub workload: WorkloadKind,
    #[serde(default = "default_n_grid")]
    pub s2_n_grid: Vec<u64>,
    #[serde(default)]
    pub witness_mode: WitnessMode,
    pub seeds: Vec<u64>,
}

fn default_n_grid() -> Vec<u64> {
    DEFAULT_N_GRID.to_vec()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("n_grid needs at least 3 strictly ascending points")]
    InvalidGrid,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.partitions < 1 {
            return bad("partitions must be at least 1".into());
        }
        if !(self.block_interval_ms.is_finite() && self.block_interval_ms > 0.0) {
            return bad("block interval must be positive".into());
        }
        if let Err(msg) = self.adversary.validate() {
            return bad(format!("adversary: {msg}"));
        }
        if self.s3_thresholds.k <= 1 || self.s3_thresholds.l <= 1 {
            return bad("connectivity thresholds k and l must exceed 1".into());
        }
        if !(self.security_threshold.is_finite() && self.security_threshold > 0.0) {
            return bad("security threshold must be positive".into());
        }
        if self.mc_trials < 1 {
            return bad("mc_trials must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed required".into());
        }
        if let RelaySpec::UnicastGossip { fanout } | RelaySpec::CompactRelay { fanout, .. } =
            &self.relay
        {
            if *fanout < 1 {
                return bad("relay fanout must be at least 1".into());
            }
        }
        if let RelaySpec::CompactRelay {
            known_tx_fraction, ..
        } = &self.relay
        {
            if !(0.0..=1.0).contains(known_tx_fraction) {
                return bad("known_tx_fraction must be within [0,1]".into());
            }
        }
        check_grid(&self.s2_n_grid)?;
        Ok(())
    }

    /// SHA-256 of the canonical (key-sorted) JSON encoding.
    pub fn content_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        sha256(&bytes).to_hex()
    }
}

fn check_grid(n_grid: &[u64]) -> Result<(), HarnessError> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidGrid);
    }
    Ok(())
}

/// Least-squares line fit with a relative residual measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual divided by the mean observed value; 0 for a perfect fit.
    pub residual_rel: f64,
}

pub fn fit_linear(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    assert!(points.len() >= 2, "need at least two points to fit a line");
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = mean_y - slope * mean_x;
    let mse: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum::<f64>()
        / n;
    let residual_rel = if mean_y.abs() < f64::EPSILON {
        0.0
    } else {
        mse.sqrt() / mean_y.abs()
    };
    LinearFit {
        slope,
        intercept,
        residual_rel,
    }
}

/// Scalability verdict: the measured cost curve must be linear (relative
/// residual within [`S2_RESIDUAL_BOUND`]) and its per-transaction slope must
/// stay within `baseline_slope * 1.1 / partitions`, where the baseline is the
/// same workload at a single partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2Report {
    pub holds: bool,
    pub fitted_slope: f64,
    pub baseline_slope: f64,
    pub slope_bound: f64,
    pub residual_rel: f64,
    pub per_tx_cost_curve: Vec<CostPoint>,
    /// Peak UTXO entries observed across the curve (the space bound, reported
    /// without a pass/fail threshold).
    pub peak_space: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl S2Report {
    fn failed(message: String) -> Self {
        S2Report {
            holds: false,
            fitted_slope: 0.0,
            baseline_slope: 0.0,
            slope_bound: 0.0,
            residual_rel: 0.0,
            per_tx_cost_curve: Vec::new(),
            peak_space: 0,
            error: Some(message),
        }
    }
}

/// Evaluate the scalability predicate on the configured workload and
/// partition count over `n_grid`.
pub fn evaluate_s2(config: &ProtocolConfig, n_grid: &[u64]) -> Result<S2Report, HarnessError> {
    check_grid(n_grid)?;
    if config.partitions < 1 {
        return Err(HarnessError::InvalidConfig(
            "partitions must be at least 1".into(),
        ));
    }
    let root = config.seeds.first().copied().unwrap_or(0);
    let spec = WorkloadSpec {
        kind: config.workload,
        seed: derive_seed(root, "s2-workload", 0),
    };
    let baseline = validation_cost_curve(&spec, n_grid, 1);
    let measured = if config.partitions == 1 {
        baseline.clone()
    } else {
        validation_cost_curve(&spec, n_grid, config.partitions)
    };
    let as_points = |curve: &[CostPoint]| -> Vec<(f64, f64)> {
        curve
            .iter()
            .map(|p| (p.n as f64, p.critical_path_ops as f64))
            .collect()
    };
    let baseline_fit = fit_linear(&as_points(&baseline));
    let measured_fit = fit_linear(&as_points(&measured));
    let slope_bound = baseline_fit.slope * S2_OVERHEAD_ALLOWANCE / config.partitions as f64;
    let holds = measured_fit.residual_rel <= S2_RESIDUAL_BOUND && measured_fit.slope <= slope_bound;
    Ok(S2Report {
        holds,
        fitted_slope: measured_fit.slope,
        baseline_slope: baseline_fit.slope,
        slope_bound,
        residual_rel: measured_fit.residual_rel,
        peak_space: measured
            .iter()
            .map(|p| p.peak_utxo_entries)
            .max()
            .unwrap_or(0),
        per_tx_cost_curve: measured,
        error: None,
    })
}

/// The reference counterexample configuration: a redundancy-3 lattice of 256
/// nodes (10% miners, 30% SPV clients), multicast relay, four UTXO
/// partitions, unbounded blocks, and a 10% adversary racing a depth-6 lead.
/// Every parameter is overridable through configuration files.
pub fn counterexample_config() -> ProtocolConfig {
    ProtocolConfig {
        topology: TopologySpec {
            kind: TopologyKind::BaranLattice {
                rows: 16,
                cols: 16,
                redundancy: 3,
            },
            roles: crate::netgraph::RoleMix {
                miner_fraction: 0.10,
                spv_fraction: 0.30,
            },
            link: crate::netgraph::LinkProfile::default(),
        },
        relay: RelaySpec::Multicast {
            group: MulticastGroup::All,
        },
        partitions: 4,
        block_interval_ms: 600_000.0,
        block_size_policy: BlockSizePolicy::Unbounded,
        adversary: AdversaryModel {
            alpha: 0.10,
            reorg_depth: 6,
            unit_cost: 1.0,
            resource_bound: 1e12,
        },
        s3_thresholds: S3Thresholds {
            k: 3,
            l: 3,
            max_mean_path: 12.0,
        },
        security_threshold: 0.01,
        mc_trials: 100_000,
        workload: WorkloadKind::Partitionable,
        s2_n_grid: default_n_grid(),
        witness_mode: WitnessMode::HashPreimage,
        seeds: vec![7],
    }
}

/// Security evaluation over the canonical corpus derived from the config:
/// replay a few workload batches through the transition function, then run
/// the reorg race at the configured adversary.
pub fn evaluate_s1(config: &ProtocolConfig, root_seed: u64) -> S1Report {
    if let Err(err) = config.adversary.validate() {
        return S1Report::failed(err);
    }
    let mut corpus: Vec<(LedgerState, Vec<Transaction>)> = Vec::new();
    for batch in 0..S1_CORPUS_BATCHES {
        let spec = WorkloadSpec {
            kind: config.workload,
            seed: derive_seed(root_seed, "s1-corpus", batch),
        };
        let workload = crate::workload::build(&spec, S1_CORPUS_TXS_PER_BATCH, config.partitions);
        corpus.push((
            workload.state.with_witness_mode(config.witness_mode),
            workload.txs,
        ));
    }
    evaluate_s1_with_corpus(
        &config.adversary,
        config.security_threshold,
        config.mc_trials,
        derive_seed(root_seed, "s1-reorg", 0),
        &corpus,
    )
}

/// Compact per-workload scalability summary. The binding S2 verdict is the
/// configured workload's; these rows report how the same configuration fares
/// on every canonical workload shape, since no single distribution is
/// privileged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2WorkloadRow {
    pub workload: WorkloadKind,
    pub holds: bool,
    pub fitted_slope: f64,
    pub slope_bound: f64,
}

/// Evaluate the scalability predicate once per canonical workload shape.
pub fn evaluate_s2_per_workload(
    config: &ProtocolConfig,
    n_grid: &[u64],
) -> Result<Vec<S2WorkloadRow>, HarnessError> {
    [
        WorkloadKind::Partitionable,
        WorkloadKind::CrossPartition,
        WorkloadKind::Mixed,
    ]
    .into_iter()
    .map(|workload| {
        let mut variant = config.clone();
        variant.workload = workload;
        evaluate_s2(&variant, n_grid).map(|report| S2WorkloadRow {
            workload,
            holds: report.holds,
            fitted_slope: report.fitted_slope,
            slope_bound: report.slope_bound,
        })
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seeds: Vec<u64>,
}

/// The full trilemma verdict for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrilemmaReport {
    pub s1: S1Report,
    pub s2: S2Report,
    pub s3: S3Report,
    pub conjunction_holds: bool,
    /// Informational: the scalability verdict across every canonical
    /// workload shape, not just the configured one.
    pub s2_workloads: Vec<S2WorkloadRow>,
    /// Informational: block relay time against the block interval on this
    /// topology and relay model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputReport>,
    pub provenance: Provenance,
}

fn failed_s3(message: String) -> S3Report {
    S3Report {
        holds: false,
        min_vertex_connectivity: 0,
        min_edge_connectivity: 0,
        max_mean_path: 0.0,
        report: crate::netgraph::ConnectivityReport {
            kappa: 0,
            lambda: 0,
            min_degree: 0,
            mean_path: None,
            diameter: None,
        },
        error: Some(message),
    }
}

/// Evaluate all three predicates on shared seeds. Per-leg failures are folded
/// into the leg's report (holds = false plus an error note); the report is
/// always produced.
pub fn evaluate_trilemma(config: &ProtocolConfig) -> TrilemmaReport {
    let root = config.seeds.first().copied().unwrap_or(0);

    let topology = generate_topology(&config.topology, derive_seed(root, "topology", 0));

    let s3 = match &topology {
        Ok(graph) => evaluate_s3(
            graph,
            config.s3_thresholds.k,
            config.s3_thresholds.l,
            config.s3_thresholds.max_mean_path,
        )
        .unwrap_or_else(|e| failed_s3(e.to_string())),
        Err(e) => failed_s3(e.to_string()),
    };

    let s1 = evaluate_s1(config, root);

    let s2 =
        evaluate_s2(config, &config.s2_n_grid).unwrap_or_else(|e| S2Report::failed(e.to_string()));
    let s2_workloads = evaluate_s2_per_workload(config, &config.s2_n_grid).unwrap_or_default();

    let throughput = topology.ok().and_then(|graph| {
        let model = config.relay.resolve(graph.node_count() as u32);
        let probe = match config.block_size_policy {
            BlockSizePolicy::Capped { bytes } => bytes,
            BlockSizePolicy::Unbounded => DEFAULT_PROBE_BLOCK_BYTES,
        };
        throughput_check(
            &graph,
            &model,
            probe,
            config.block_interval_ms,
            derive_seed(root, "throughput", 0),
        )
        .ok()
    });

    let conjunction_holds = s1.holds && s2.holds && s3.holds;
    TrilemmaReport {
        s1,
        s2,
        s3,
        conjunction_holds,
        s2_workloads,
        throughput,
        provenance: Provenance {
            config_sha256: config.content_hash(),
            seeds: config.seeds.clone(),
        },
    }
}

/// One measured row of the causal-chain experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalChainRow {
    pub kind: String,
    pub n: u32,
    pub mean_latency_ms: f64,
    pub mean_path: f64,
}

/// Instantiate `kind` at roughly `n` nodes, preserving its shape parameters.
/// Grids and lattices round to the nearest square; random-regular sizes bump
/// by one when `n * degree` is odd.
pub fn resize_kind(kind: &TopologyKind, n: u32) -> TopologyKind {
    match *kind {
        TopologyKind::Ring { .. } => TopologyKind::Ring { n },
        TopologyKind::Star { .. } => TopologyKind::Star {
            leaves: n.saturating_sub(1).max(1),
        },
        TopologyKind::Tree { arity, .. } => TopologyKind::Tree { n, arity },
        TopologyKind::Grid { .. } => {
            let side = (n as f64).sqrt().round().max(2.0) as u32;
            TopologyKind::Grid {
                rows: side,
                cols: side,
            }
        }
        TopologyKind::RandomRegular { degree, .. } => TopologyKind::RandomRegular {
            n: if (n as u64 * degree as u64) % 2 == 1 {
                n + 1
            } else {
                n
            },
            degree,
        },
        TopologyKind::BaranLattice { redundancy, .. } => {
            let side = (n as f64).sqrt().round().max(2.0) as u32;
            TopologyKind::BaranLattice {
                rows: side,
                cols: side,
                redundancy,
            }
        }
    }
}

/// Measure propagation latency against topology size: for each (kind, n),
/// generate the graph, relay one message from node 0, and record the mean
/// arrival latency next to the graph's mean shortest path. Sizes of 1 or 0
/// produce zero rows (nothing to propagate) so corners stay out of fits.
pub fn causal_chain_experiment(
    kinds: &[TopologyKind],
    sizes: &[u32],
    msg: &crate::propagation::Message,
    relay: &RelaySpec,
    seed: u64,
) -> Result<Vec<CausalChainRow>, String> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err("sizes must be strictly ascending".into());
    }
    let mut rows = Vec::new();
    for kind in kinds {
        for (i, &n) in sizes.iter().enumerate() {
            if n <= 1 {
                rows.push(CausalChainRow {
                    kind: kind.name().to_string(),
                    n,
                    mean_latency_ms: 0.0,
                    mean_path: 0.0,
                });
                continue;
            }
            let resolved = TopologySpec {
                kind: resize_kind(kind, n),
                roles: crate::netgraph::RoleMix::default(),
                link: crate::netgraph::LinkProfile::default(),
            };
            let graph =
                generate_topology(&resolved, derive_seed(seed, "causal-topology", i as u64))
                    .map_err(|e| e.to_string())?;
            let model = relay.resolve(graph.node_count() as u32);
            let report = crate::propagation::simulate_propagation(&graph, 0, msg, &model, seed)
                .map_err(|e| e.to_string())?;
            let mean_path =
                crate::netgraph::mean_shortest_path(&graph).map_err(|e| e.to_string())?;
            rows.push(CausalChainRow {
                kind: kind.name().to_string(),
                n: graph.node_count() as u32,
                mean_latency_ms: report.mean_latency_ms,
                mean_path,
            });
        }
    }
    Ok(rows)
}

/// Witness role of a graph in the harness: SPV clients are topology vertices
/// (they relay and count toward connectivity) but never validators, so the
/// scalability leg's cost model charges no validation work to them.
pub fn spv_fraction(graph: &NetworkGraph) -> f64 {
    let spv = graph
        .roles()
        .iter()
        .filter(|r| **r == crate::netgraph::NodeRole::SpvClient)
        .count();
    spv as f64 / graph.node_count() as f64
}
