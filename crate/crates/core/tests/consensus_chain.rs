//! Mining statistics against the geometric-distribution oracle, chain
//! selection fixtures, and the reorg race against the gambler's-ruin
//! closed form.

mod common;

use common::gamblers_ruin;
use trilab::consensus::{
    apply_block, mine_block, reorg_success_probability, select_chain, AdversaryModel, Block, Chain,
};
use trilab::hash::{sha256, Hash256};
use trilab::ledger::{LedgerState, Transaction, TxOutput};
use trilab::merkle::BlockHeader;

fn genesis_header() -> BlockHeader {
    BlockHeader {
        prev_hash: Hash256::ZERO,
        merkle_root: Hash256::ZERO,
        height: 0,
        timestamp: 0,
        difficulty_target: Hash256::MAX,
        nonce: 0,
    }
}

/// Target accepting one hash in 2^bits.
fn target_with_difficulty_bits(bits: u32) -> Hash256 {
    let mut t = [0xffu8; 32];
    for bit in 0..bits {
        t[(bit / 8) as usize] &= !(0x80 >> (bit % 8));
    }
    Hash256(t)
}

fn coinbase(tag: u64, value: u64) -> Transaction {
    Transaction::coinbase(vec![TxOutput {
        value,
        owner: sha256(&tag.to_le_bytes()),
    }])
    .unwrap()
}

#[test]
fn mining_attempts_follow_the_geometric_mean() {
    // p = 2^-8 per attempt, so E[attempts] = 256 and Var = (1-p)/p^2.
    let bits = 8;
    let target = target_with_difficulty_bits(bits);
    let expected = 2f64.powi(bits as i32);
    let runs = 200u64;
    let state = LedgerState::empty();
    let prev = genesis_header();
    let mut total: f64 = 0.0;
    for seed in 0..runs {
        let txs = [coinbase(seed, 50)];
        let (block, attempts) = mine_block(&state, &txs, &prev, target, seed).unwrap();
        assert!(block.header.meets_target());
        total += attempts as f64;
    }
    let mean = total / runs as f64;
    let p = 1.0 / expected;
    let sigma = ((1.0 - p).sqrt() / p) / (runs as f64).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * sigma,
        "mean attempts {mean} outside {expected} +/- 3*{sigma:.2}"
    );
}

#[test]
fn chain_bytes_replay_to_identical_tip() {
    let target = target_with_difficulty_bits(3);
    let state0 = LedgerState::empty();
    let genesis = Block {
        header: genesis_header(),
        transactions: vec![],
    };
    let mut blocks = vec![genesis.clone()];
    let mut state = state0.clone();
    let mut prev = genesis.header;
    for i in 0..4u64 {
        let txs = vec![coinbase(i, 50)];
        let (block, _) = mine_block(&state, &txs, &prev, target, 1000 + i).unwrap();
        state = apply_block(&state, &block).unwrap();
        prev = block.header;
        blocks.push(block);
    }
    let chain = Chain::from_blocks(blocks).unwrap();
    let reparsed = Chain::from_bytes(&chain.to_bytes()).unwrap();
    let tip = reparsed.replay(&state0).unwrap();
    assert_eq!(tip.state_digest(), state.state_digest());
    assert_eq!(tip.height(), 4);
}

#[test]
fn cumulative_work_decides_selection_with_hand_computed_sums() {
    // Per-block work is 2^256/(target+1): the 2-bit target is worth 4, the
    // 4-bit target 16. Chain A: two 2-bit blocks = 8. Chain B: one 4-bit
    // block = 16. B wins despite being shorter.
    let t2 = target_with_difficulty_bits(2);
    let t4 = target_with_difficulty_bits(4);
    let state0 = LedgerState::empty();
    let genesis = Block {
        header: genesis_header(),
        transactions: vec![],
    };

    let build = |targets: &[Hash256], seed: u64| -> Chain {
        let mut blocks = vec![genesis.clone()];
        let mut state = state0.clone();
        let mut prev = genesis.header;
        for (i, &target) in targets.iter().enumerate() {
            let txs = vec![coinbase(seed * 100 + i as u64, 50)];
            let (block, _) = mine_block(&state, &txs, &prev, target, seed * 10 + i as u64).unwrap();
            state = apply_block(&state, &block).unwrap();
            prev = block.header;
            blocks.push(block);
        }
        Chain::from_blocks(blocks).unwrap()
    };

    let a = build(&[t2, t2], 1);
    let b = build(&[t4], 2);
    let genesis_work = trilab::consensus::block_work(&Hash256::MAX);
    let expected_a = genesis_work.clone() + 4u8 + 4u8;
    let expected_b = genesis_work + 16u8;
    assert_eq!(a.cumulative_work(), &expected_a);
    assert_eq!(b.cumulative_work(), &expected_b);
    assert!(b.blocks().len() < a.blocks().len());

    let candidates = vec![a, b];
    let winner = select_chain(&candidates).unwrap();
    assert_eq!(
        winner.cumulative_work(),
        &expected_b,
        "more work wins, not more blocks"
    );
    // Permutation invariance of the winning work value.
    let reversed: Vec<Chain> = candidates.iter().rev().cloned().collect();
    assert_eq!(
        select_chain(&reversed).unwrap().cumulative_work(),
        &expected_b
    );
}

#[test]
fn reorg_probability_tracks_closed_form_on_coarse_grid() {
    // 10^4-trial smoke grid; the acceptance suite runs the full 10^5 one.
    for &alpha in &[0.1f64, 0.3] {
        for &depth in &[1u32, 2] {
            let model = AdversaryModel {
                alpha,
                reorg_depth: depth,
                unit_cost: 1.0,
                resource_bound: f64::MAX,
            };
            let outcome = reorg_success_probability(&model, 10_000, 42);
            let oracle = gamblers_ruin(alpha, depth);
            assert!(
                (outcome.p_hat - oracle).abs() <= 0.02,
                "alpha={alpha} depth={depth}: p_hat {} vs oracle {oracle}",
                outcome.p_hat
            );
        }
    }
}

#[test]
fn reorg_probability_is_monotone_in_alpha_and_depth() {
    // 3x3 grid with Monte-Carlo slack of two standard errors.
    let alphas = [0.15f64, 0.3, 0.45];
    let depths = [1u32, 3, 6];
    let trials = 10_000u64;
    let slack = 2.0 / (trials as f64).sqrt();
    let estimate = |alpha: f64, depth: u32| {
        reorg_success_probability(
            &AdversaryModel {
                alpha,
                reorg_depth: depth,
                unit_cost: 1.0,
                resource_bound: f64::MAX,
            },
            trials,
            7,
        )
        .p_hat
    };
    let grid: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&a| depths.iter().map(|&z| estimate(a, z)).collect())
        .collect();
    for zi in 0..depths.len() {
        for ai in 1..alphas.len() {
            assert!(
                grid[ai][zi] + slack >= grid[ai - 1][zi],
                "p_hat must be non-decreasing in alpha at depth {}",
                depths[zi]
            );
        }
    }
    for ai in 0..alphas.len() {
        for zi in 1..depths.len() {
            assert!(
                grid[ai][zi] <= grid[ai][zi - 1] + slack,
                "p_hat must be non-increasing in depth at alpha {}",
                alphas[ai]
            );
        }
    }
}

#[test]
fn adversary_cost_scales_with_unit_cost() {
    let base = AdversaryModel {
        alpha: 0.3,
        reorg_depth: 2,
        unit_cost: 1.0,
        resource_bound: f64::MAX,
    };
    let expensive = AdversaryModel {
        unit_cost: 5.0,
        ..base
    };
    let a = reorg_success_probability(&base, 5_000, 3);
    let b = reorg_success_probability(&expensive, 5_000, 3);
    assert_eq!(a.mean_attempts, b.mean_attempts, "same race, same attempts");
    assert!((b.mean_cost - 5.0 * a.mean_cost).abs() < 1e-9);
}

#[test]
fn tight_resource_bound_suppresses_cheap_success_probability() {
    // With a resource bound of zero, no success can be within budget.
    let model = AdversaryModel {
        alpha: 0.45,
        reorg_depth: 1,
        unit_cost: 1.0,
        resource_bound: 0.0,
    };
    let outcome = reorg_success_probability(&model, 5_000, 9);
    assert!(outcome.p_hat > 0.5, "the race itself is winnable");
    assert_eq!(outcome.p_hat_within_budget, 0.0);
}
