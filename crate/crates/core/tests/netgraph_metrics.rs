//! Connectivity metrics against exhaustive cut enumeration, the Whitney
//! inequality across the generated corpus, BFS oracle agreement, and the
//! growth laws that ground the latency experiments.

mod common;

use common::{
    brute_force_kappa, brute_force_lambda, brute_force_mean_path, medium_graph_corpus,
    small_graph_corpus,
};
use trilab::harness::fit_linear;
use trilab::netgraph::{
    edge_connectivity, generate_topology, mean_shortest_path, vertex_connectivity, LinkProfile,
    RoleMix, TopologyKind, TopologySpec,
};

#[test]
fn flow_connectivity_matches_exhaustive_cuts_on_small_corpus() {
    let corpus = small_graph_corpus();
    assert!(corpus.len() >= 30, "corpus too small: {}", corpus.len());
    for (label, graph) in &corpus {
        assert!(graph.node_count() <= 8, "{label} exceeds brute-force range");
        let lambda = edge_connectivity(graph).unwrap();
        let kappa = vertex_connectivity(graph).unwrap();
        assert_eq!(
            lambda,
            brute_force_lambda(graph),
            "edge connectivity mismatch on {label}"
        );
        assert_eq!(
            kappa,
            brute_force_kappa(graph),
            "vertex connectivity mismatch on {label}"
        );
    }
}

#[test]
fn whitney_inequality_across_the_full_corpus() {
    let mut corpus = small_graph_corpus();
    corpus.extend(medium_graph_corpus());
    assert!(
        corpus.len() >= 100,
        "need at least 100 graphs, got {}",
        corpus.len()
    );
    for (label, graph) in &corpus {
        let kappa = vertex_connectivity(graph).unwrap();
        let lambda = edge_connectivity(graph).unwrap();
        let min_degree = graph.min_degree();
        assert!(
            kappa <= lambda && lambda <= min_degree,
            "Whitney violated on {label}: kappa={kappa} lambda={lambda} delta={min_degree}"
        );
    }
}

#[test]
fn mean_path_agrees_exactly_with_bfs_oracle() {
    let mut corpus = small_graph_corpus();
    corpus.extend(medium_graph_corpus());
    for (label, graph) in &corpus {
        match (mean_shortest_path(graph), brute_force_mean_path(graph)) {
            (Ok(ours), Some(oracle)) => {
                assert!(
                    (ours - oracle).abs() < 1e-12,
                    "mean path mismatch on {label}: {ours} vs {oracle}"
                );
            }
            (Err(_), None) => {} // both see a disconnected graph
            (ours, oracle) => {
                panic!("connectivity disagreement on {label}: {ours:?} vs {oracle:?}")
            }
        }
    }
}

#[test]
fn ring_cut_examples_match_enumeration() {
    // C5: every single-edge removal leaves it connected; some pair cuts it.
    let (_, c5) = small_graph_corpus()
        .into_iter()
        .find(|(label, _)| label == "ring5")
        .unwrap();
    assert_eq!(edge_connectivity(&c5).unwrap(), 2);
    assert_eq!(brute_force_lambda(&c5), 2);
    // 3x3 grid: no single-vertex removal disconnects it; some pair does.
    let grid = generate_topology(
        &TopologySpec {
            kind: TopologyKind::Grid { rows: 3, cols: 3 },
            roles: RoleMix::default(),
            link: LinkProfile::default(),
        },
        0,
    )
    .unwrap();
    assert_eq!(vertex_connectivity(&grid).unwrap(), 2);
    assert_eq!(brute_force_kappa(&grid), 2);
}

fn mean_path_of(kind: TopologyKind, seed: u64) -> f64 {
    let graph = generate_topology(
        &TopologySpec {
            kind,
            roles: RoleMix::default(),
            link: LinkProfile::default(),
        },
        seed,
    )
    .unwrap();
    mean_shortest_path(&graph).unwrap()
}

#[test]
fn random_regular_mean_path_grows_logarithmically() {
    // Fitted d-bar against ln |V| stays within 1.2/ln(3) plus 25% slack for
    // degree-4 graphs (branching factor 3).
    let sizes = [64u32, 128, 256, 512];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| {
            (
                (n as f64).ln(),
                mean_path_of(TopologyKind::RandomRegular { n, degree: 4 }, n as u64),
            )
        })
        .collect();
    let fit = fit_linear(&points);
    let bound = 1.2 / 3f64.ln() * 1.25;
    assert!(
        fit.slope > 0.0 && fit.slope <= bound,
        "log-growth slope {} outside (0, {bound:.3}]",
        fit.slope
    );
}

#[test]
fn ring_mean_path_grows_linearly() {
    let sizes = [64u32, 128, 256, 512];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| (n as f64, mean_path_of(TopologyKind::Ring { n }, 0)))
        .collect();
    let fit = fit_linear(&points);
    assert!(
        (fit.slope - 0.25).abs() < 0.01,
        "ring mean path slope {} should be about n/4",
        fit.slope
    );
    assert!(fit.residual_rel < 0.01, "ring growth is exactly linear");
}

#[test]
fn s3_on_64_node_random_regular_with_sampled_cut_cross_check() {
    // Exhaustive enumeration is out of reach at 64 nodes; cross-check the
    // flow answers by sampling random candidate cuts one smaller and
    // verifying none disconnects.
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use trilab::netgraph::evaluate_s3;

    let graph = generate_topology(
        &TopologySpec {
            kind: TopologyKind::RandomRegular { n: 64, degree: 4 },
            roles: RoleMix::default(),
            link: LinkProfile::default(),
        },
        0xD15C,
    )
    .unwrap();
    let report = evaluate_s3(&graph, 2, 2, 6.0).unwrap();
    assert!(report.holds, "{report:?}");
    let kappa = report.report.kappa;
    let lambda = report.report.lambda;
    assert!(kappa >= 2 && lambda >= 2 && lambda <= 4);

    let mut rng = rand::rngs::ChaCha8Rng::seed_from_u64(99);
    let connected_without_vertices = |removed: &[u32]| {
        let n = graph.node_count();
        let alive = |v: u32| !removed.contains(&v);
        let start = match (0..n as u32).find(|&v| alive(v)) {
            Some(v) => v,
            None => return true,
        };
        let mut seen = vec![false; n];
        seen[start as usize] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in graph.neighbors(u) {
                if alive(v) && !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        (0..n as u32).all(|v| !alive(v) || seen[v as usize])
    };
    let mut vertices: Vec<u32> = (0..64).collect();
    for _ in 0..20_000 {
        vertices.shuffle(&mut rng);
        assert!(
            connected_without_vertices(&vertices[..(kappa - 1) as usize]),
            "sampled vertex set below kappa disconnected the graph; flow answer too high"
        );
    }
    let connected_without_edges = |removed: &[usize]| {
        let n = graph.node_count();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0u32];
        while let Some(u) = stack.pop() {
            for &(v, edge_idx) in graph.neighbors(u) {
                if !removed.contains(&(edge_idx as usize)) && !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    let mut edges: Vec<usize> = (0..graph.edge_count()).collect();
    for _ in 0..20_000 {
        edges.shuffle(&mut rng);
        assert!(
            connected_without_edges(&edges[..(lambda - 1) as usize]),
            "sampled edge set below lambda disconnected the graph; flow answer too high"
        );
    }
}

#[test]
fn counterexample_lattice_meets_its_thresholds() {
    let graph = generate_topology(
        &TopologySpec {
            kind: TopologyKind::BaranLattice {
                rows: 16,
                cols: 16,
                redundancy: 3,
            },
            roles: RoleMix {
                miner_fraction: 0.10,
                spv_fraction: 0.30,
            },
            link: LinkProfile::default(),
        },
        7,
    )
    .unwrap();
    assert_eq!(graph.node_count(), 256);
    let lambda = edge_connectivity(&graph).unwrap();
    let kappa = vertex_connectivity(&graph).unwrap();
    assert!(kappa >= 3 && lambda >= 3, "kappa={kappa} lambda={lambda}");
    let mean = mean_shortest_path(&graph).unwrap();
    assert!(
        mean <= 12.0,
        "mean path {mean} exceeds the configured bound"
    );
}

#[test]
fn p3_mean_path_is_four_thirds() {
    use trilab::netgraph::graph_from_pairs;
    let p3 = graph_from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    assert_eq!(mean_shortest_path(&p3).unwrap(), 4.0 / 3.0);
    assert_eq!(brute_force_mean_path(&p3), Some(4.0 / 3.0));
}
