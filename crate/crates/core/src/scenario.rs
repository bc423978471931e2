//! Scenario files and experiment execution behind the command-line interface.
//!
//! A scenario is a JSON document with a `schema_version` field and exactly
//! one experiment stanza (`trilemma`, `propagation`, `graph_metrics`, or
//! `causal_chain`). Execution is pure: it returns the files to emit and the
//! summary lines to print, so nothing is written until a run has fully
//! succeeded and outputs are byte-reproducible for a given `(scenario,
//! seeds)` pair. JSON output sorts keys; CSV output has a fixed column
//! order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{
    causal_chain_experiment, counterexample_config, evaluate_trilemma, CausalChainRow,
    ProtocolConfig, RelaySpec, TrilemmaReport,
};
use crate::merkle::{check_vectors, format_vector_line, golden_corpus};
use crate::netgraph::{
    connectivity_report, generate_topology, NetworkGraph, TopologyKind, TopologySpec,
};
use crate::propagation::{simulate_propagation, Message, PropagationReport};
use crate::rng::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEEDS: [u64; 1] = [7];

#[derive(Debug, Error)]
pub enum RunError {
    /// Configuration problems: exit code 2.
    #[error("{0}")]
    Config(String),
    /// Runtime failures on a valid configuration: exit code 1.
    #[error("{0}")]
    Runtime(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationScenario {
    #[serde(default)]
    pub topology: Option<TopologySpec>,
    /// Inline graph in the interchange text format (alternative to
    /// `topology`).
    #[serde(default)]
    pub graph_text: Option<String>,
    pub source: u32,
    pub relay: RelaySpec,
    pub message: Message,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphMetricsScenario {
    #[serde(default)]
    pub topology: Option<TopologySpec>,
    #[serde(default)]
    pub graph_text: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalChainScenario {
    pub kinds: Vec<TopologyKind>,
    pub sizes: Vec<u32>,
    pub message_bytes: u64,
    pub relay: RelaySpec,
}

/// One parsed scenario file: a version plus exactly one experiment stanza.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub trilemma: Option<ProtocolConfig>,
    #[serde(default)]
    pub propagation: Option<PropagationScenario>,
    #[serde(default)]
    pub graph_metrics: Option<GraphMetricsScenario>,
    #[serde(default)]
    pub causal_chain: Option<CausalChainScenario>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let scenario: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| RunError::Config(format!("scenario parse error: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let stanzas = usize::from(self.trilemma.is_some())
            + usize::from(self.propagation.is_some())
            + usize::from(self.graph_metrics.is_some())
            + usize::from(self.causal_chain.is_some());
        if stanzas != 1 {
            return Err(RunError::Config(format!(
                "scenario must contain exactly one experiment stanza, found {stanzas}"
            )));
        }
        if let Some(config) = &self.trilemma {
            config
                .validate()
                .map_err(|e| RunError::Config(format!("field trilemma: {e}")))?;
        }
        for (field, topology, text) in [
            self.propagation
                .as_ref()
                .map(|p| ("propagation", &p.topology, &p.graph_text)),
            self.graph_metrics
                .as_ref()
                .map(|g| ("graph_metrics", &g.topology, &g.graph_text)),
        ]
        .into_iter()
        .flatten()
        {
            if topology.is_some() == text.is_some() {
                return Err(RunError::Config(format!(
                    "field {field}: exactly one of 'topology' or 'graph_text' required"
                )));
            }
        }
        if let Some(chain) = &self.causal_chain {
            if chain.kinds.is_empty() || chain.sizes.is_empty() {
                return Err(RunError::Config(
                    "field causal_chain: kinds and sizes must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }

    fn seeds(&self, seed_override: Option<u64>) -> Vec<u64> {
        if let Some(seed) = seed_override {
            return vec![seed];
        }
        if let Some(config) = &self.trilemma {
            return config.seeds.clone();
        }
        self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One file to write, already rendered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmittedFile {
    pub name: String,
    pub contents: String,
}

/// The outcome of a run: files to emit plus stdout summary lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunResult {
    pub files: Vec<EmittedFile>,
    pub summary_lines: Vec<String>,
}

/// Key-sorted, pretty JSON with a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("reports serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
    text.push('\n');
    text
}

fn csv_f64(x: f64) -> String {
    // Shortest round-trip formatting is deterministic across runs.
    format!("{x}")
}

fn resolve_graph(
    topology: &Option<TopologySpec>,
    graph_text: &Option<String>,
    seed: u64,
) -> Result<NetworkGraph, RunError> {
    match (topology, graph_text) {
        (Some(spec), None) => generate_topology(spec, derive_seed(seed, "topology", 0))
            .map_err(|e| RunError::Config(e.to_string())),
        (None, Some(text)) => {
            NetworkGraph::from_text(text).map_err(|e| RunError::Config(e.to_string()))
        }
        _ => Err(RunError::Config(
            "exactly one of 'topology' or 'graph_text' required".into(),
        )),
    }
}

fn summary_line(format: OutputFormat, csv: &str, json: &serde_json::Value) -> String {
    match format {
        OutputFormat::Csv => csv.to_string(),
        OutputFormat::Json => serde_json::to_string(json).expect("values serialize"),
    }
}

/// Run the trilemma evaluation once per seed.
pub fn run_trilemma(
    config: &ProtocolConfig,
    seeds: &[u64],
    format: OutputFormat,
    name: &str,
) -> Result<RunResult, RunError> {
    config
        .validate()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let mut result = RunResult::default();
    let mut csv = String::from(
        "scenario,seed,conjunction_holds,s1_holds,s1_p_hat,s1_mean_cost,\
         s2_holds,s2_fitted_slope,s2_slope_bound,s2_residual_rel,\
         s3_holds,kappa,lambda,mean_path\n",
    );
    for &seed in seeds {
        let mut seeded = config.clone();
        seeded.seeds = vec![seed];
        let report: TrilemmaReport = evaluate_trilemma(&seeded);
        let row = format!(
            "{name},{seed},{},{},{},{},{},{},{},{},{},{},{},{}",
            report.conjunction_holds,
            report.s1.holds,
            csv_f64(report.s1.p_hat),
            csv_f64(report.s1.mean_cost),
            report.s2.holds,
            csv_f64(report.s2.fitted_slope),
            csv_f64(report.s2.slope_bound),
            csv_f64(report.s2.residual_rel),
            report.s3.holds,
            report.s3.report.kappa,
            report.s3.report.lambda,
            report
                .s3
                .report
                .mean_path
                .map(csv_f64)
                .unwrap_or_else(|| "disconnected".into()),
        );
        csv.push_str(&row);
        csv.push('\n');
        result.summary_lines.push(summary_line(
            format,
            &row,
            &serde_json::json!({
                "scenario": name,
                "seed": seed,
                "conjunction_holds": report.conjunction_holds,
                "s1_holds": report.s1.holds,
                "s2_holds": report.s2.holds,
                "s3_holds": report.s3.holds,
            }),
        ));
        result.files.push(EmittedFile {
            name: format!("{name}_seed{seed}.json"),
            contents: to_sorted_json(&report),
        });
    }
    result.files.push(EmittedFile {
        name: format!("{name}_summary.csv"),
        contents: csv,
    });
    Ok(result)
}

/// Emit the reference counterexample configuration, then evaluate it.
pub fn run_counterexample(
    seed_override: Option<u64>,
    format: OutputFormat,
) -> Result<RunResult, RunError> {
    let mut config = counterexample_config();
    if let Some(seed) = seed_override {
        config.seeds = vec![seed];
    }
    let seeds = config.seeds.clone();
    let mut result = run_trilemma(&config, &seeds, format, "counterexample")?;
    result.files.insert(
        0,
        EmittedFile {
            name: "counterexample_config.json".into(),
            contents: to_sorted_json(&config),
        },
    );
    Ok(result)
}

/// Run one propagation simulation per seed.
pub fn run_propagation(
    scenario: &PropagationScenario,
    seeds: &[u64],
    format: OutputFormat,
) -> Result<RunResult, RunError> {
    let mut result = RunResult::default();
    let mut csv = String::from(
        "scenario,seed,total_volume,source_egress,per_node_amortised,\
         max_latency_ms,mean_latency_ms,coverage,receivers_reached,transmissions\n",
    );
    for &seed in seeds {
        let graph = resolve_graph(&scenario.topology, &scenario.graph_text, seed)?;
        let model = scenario.relay.resolve(graph.node_count() as u32);
        let report: PropagationReport = simulate_propagation(
            &graph,
            scenario.source,
            &scenario.message,
            &model,
            derive_seed(seed, "propagation", 0),
        )
        .map_err(|e| RunError::Runtime(e.to_string()))?;
        let row = format!(
            "propagation,{seed},{},{},{},{},{},{},{},{}",
            report.total_volume,
            report.source_egress,
            csv_f64(report.per_node_amortised),
            csv_f64(report.max_latency_ms),
            csv_f64(report.mean_latency_ms),
            csv_f64(report.coverage),
            report.receivers_reached,
            report.transmissions,
        );
        csv.push_str(&row);
        csv.push('\n');
        result.summary_lines.push(summary_line(
            format,
            &row,
            &serde_json::to_value(&report).expect("report serializes"),
        ));
        result.files.push(EmittedFile {
            name: format!("propagation_seed{seed}.json"),
            contents: to_sorted_json(&report),
        });
    }
    result.files.push(EmittedFile {
        name: "propagation_summary.csv".into(),
        contents: csv,
    });
    Ok(result)
}

/// Compute exact connectivity metrics for a generated or loaded graph.
pub fn run_graph_metrics(
    scenario: &GraphMetricsScenario,
    seeds: &[u64],
    format: OutputFormat,
) -> Result<RunResult, RunError> {
    let mut result = RunResult::default();
    let mut csv =
        String::from("scenario,seed,nodes,edges,kappa,lambda,min_degree,mean_path,diameter\n");
    for &seed in seeds {
        let graph = resolve_graph(&scenario.topology, &scenario.graph_text, seed)?;
        let report = connectivity_report(&graph).map_err(|e| RunError::Runtime(e.to_string()))?;
        let row = format!(
            "graph_metrics,{seed},{},{},{},{},{},{},{}",
            graph.node_count(),
            graph.edge_count(),
            report.kappa,
            report.lambda,
            report.min_degree,
            report
                .mean_path
                .map(csv_f64)
                .unwrap_or_else(|| "disconnected".into()),
            report
                .diameter
                .map(|d| d.to_string())
                .unwrap_or_else(|| "disconnected".into()),
        );
        csv.push_str(&row);
        csv.push('\n');
        result.summary_lines.push(summary_line(
            format,
            &row,
            &serde_json::to_value(&report).expect("report serializes"),
        ));
        result.files.push(EmittedFile {
            name: format!("graph_metrics_seed{seed}.json"),
            contents: to_sorted_json(&report),
        });
    }
    result.files.push(EmittedFile {
        name: "graph_metrics_summary.csv".into(),
        contents: csv,
    });
    Ok(result)
}

/// Run the latency-vs-size experiment per seed.
pub fn run_causal_chain(
    scenario: &CausalChainScenario,
    seeds: &[u64],
    format: OutputFormat,
) -> Result<RunResult, RunError> {
    let mut result = RunResult::default();
    let mut csv = String::from("scenario,seed,kind,n,mean_latency_ms,mean_path\n");
    for &seed in seeds {
        let rows: Vec<CausalChainRow> = causal_chain_experiment(
            &scenario.kinds,
            &scenario.sizes,
            &Message::full_block(scenario.message_bytes),
            &scenario.relay,
            seed,
        )
        .map_err(RunError::Runtime)?;
        for row in &rows {
            let line = format!(
                "causal_chain,{seed},{},{},{},{}",
                row.kind,
                row.n,
                csv_f64(row.mean_latency_ms),
                csv_f64(row.mean_path),
            );
            csv.push_str(&line);
            csv.push('\n');
            result.summary_lines.push(summary_line(
                format,
                &line,
                &serde_json::to_value(row).expect("row serializes"),
            ));
        }
        result.files.push(EmittedFile {
            name: format!("causal_chain_seed{seed}.json"),
            contents: to_sorted_json(&rows),
        });
    }
    result.files.push(EmittedFile {
        name: "causal_chain_summary.csv".into(),
        contents: csv,
    });
    Ok(result)
}

/// Emit the deterministic golden-vector corpus.
pub fn run_merkle_vectors_emit(seed: u64, max_leaves: usize) -> Result<RunResult, RunError> {
    if max_leaves == 0 {
        return Err(RunError::Config("max_leaves must be at least 1".into()));
    }
    let corpus = golden_corpus(seed, max_leaves);
    let mut text = String::new();
    writeln!(
        text,
        "# trilab merkle golden vectors (seed {seed}, leaf counts 1..={max_leaves})"
    )
    .expect("writing to string cannot fail");
    writeln!(
        text,
        "# <leaves-hex,comma-sep> <index> <root-hex> <proof: L|R:<hex>,... or ->"
    )
    .expect("writing to string cannot fail");
    for vector in &corpus {
        text.push_str(&format_vector_line(vector));
        text.push('\n');
    }
    Ok(RunResult {
        files: vec![EmittedFile {
            name: "merkle_vectors.txt".into(),
            contents: text,
        }],
        summary_lines: vec![format!("emitted {} golden vectors", corpus.len())],
    })
}

/// Verify a golden-vector file against this implementation.
pub fn run_merkle_vectors_check(text: &str) -> Result<RunResult, RunError> {
    let checked = check_vectors(text).map_err(|e| RunError::Runtime(e.to_string()))?;
    Ok(RunResult {
        files: Vec::new(),
        summary_lines: vec![format!("checked {checked} golden vectors: all verify")],
    })
}

/// Dispatch one parsed scenario.
pub fn run_scenario(
    scenario: &ScenarioFile,
    seed_override: Option<u64>,
    format: OutputFormat,
) -> Result<RunResult, RunError> {
    scenario.validate()?;
    let seeds = scenario.seeds(seed_override);
    let unique: BTreeSet<u64> = seeds.iter().copied().collect();
    if unique.len() != seeds.len() {
        return Err(RunError::Config("duplicate seeds in scenario".into()));
    }
    if let Some(config) = &scenario.trilemma {
        run_trilemma(config, &seeds, format, "trilemma")
    } else if let Some(prop) = &scenario.propagation {
        run_propagation(prop, &seeds, format)
    } else if let Some(graph) = &scenario.graph_metrics {
        run_graph_metrics(graph, &seeds, format)
    } else if let Some(chain) = &scenario.causal_chain {
        run_causal_chain(chain, &seeds, format)
    } else {
        unreachable!("validate() guarantees one stanza")
    }
}
