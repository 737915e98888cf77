mod common;

use std::collections::HashMap;

use common::{graph, walk_cases};
use hhea_core::encoders::{
    generate_walks, merge_graphs, sample_step, train_skipgram, transition_probabilities, RandomWalkConfig,
    SkipGramConfig, UnifiedGraph, BRIDGE_RELATION,
};
use hhea_core::kg::AnchorSet;
use hhea_core::rng::seeded;

const BETA: f64 = 0.8;
const TRIALS: usize = 10_000;
const FREQUENCY_TOLERANCE: f64 = 0.02;

#[test]
fn exact_transitions_match_hand_derived_weights() {
    for case in walk_cases(BETA) {
        let mut got = transition_probabilities(&case.graph, Some(case.prev), case.cur, BETA);
        got.sort_by_key(|p| p.0);
        assert_eq!(got.len(), case.expected.len(), "{}", case.name);
        for (&(u, p), &(v, q)) in got.iter().zip(&case.expected) {
            assert_eq!(u, v, "{}", case.name);
            assert!((p - q).abs() < 1e-12, "{}: {u} has {p}, expected {q}", case.name);
        }
    }
}

#[test]
fn sampled_frequencies_match_weights() {
    for (c, case) in walk_cases(BETA).into_iter().enumerate() {
        let mut rng = seeded(100 + c as u64);
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for _ in 0..TRIALS {
            let next = sample_step(&case.graph, Some(case.prev), case.cur, BETA, &mut rng).unwrap();
            *counts.entry(next).or_default() += 1;
        }
        assert_eq!(counts.len(), case.expected.len(), "{}: {counts:?}", case.name);
        for &(u, p) in &case.expected {
            let freq = counts[&u] as f64 / TRIALS as f64;
            assert!(
                (freq - p).abs() <= FREQUENCY_TOLERANCE,
                "{}: {u} at {freq}, expected {p}",
                case.name
            );
        }
    }
}

#[test]
fn star_is_uniform_for_any_beta() {
    for beta in [0.1, 0.5, 0.9] {
        let star = &walk_cases(beta)[1];
        let p = transition_probabilities(&star.graph, Some(star.prev), star.cur, beta);
        assert!(p.iter().all(|&(_, q)| (q - 0.5).abs() < 1e-12));
    }
}

#[test]
fn first_step_is_uniform_over_neighbors() {
    let g = UnifiedGraph::from_edges(4, 4, &[(0, 1), (0, 2), (0, 3)]);
    let mut rng = seeded(5);
    let mut counts = [0usize; 4];
    for _ in 0..TRIALS {
        counts[sample_step(&g, None, 0, BETA, &mut rng).unwrap() as usize] += 1;
    }
    assert_eq!(counts[0], 0);
    for &c in &counts[1..] {
        assert!(
            (c as f64 / TRIALS as f64 - 1.0 / 3.0).abs() <= FREQUENCY_TOLERANCE,
            "{counts:?}"
        );
    }
}

#[test]
fn walk_transitions_reproduce_the_mixed_case() {
    // same check, but through full walks: every (0 -> 1 -> x) segment
    let case = &walk_cases(BETA)[2];
    let cfg = RandomWalkConfig {
        beta: BETA,
        walks_per_node: 4000,
        walk_length: 12,
        seed: 9,
    };
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for w in generate_walks(&case.graph, &cfg) {
        for t in w.nodes.windows(3) {
            if t[0] == case.prev && t[1] == case.cur {
                *counts.entry(t[2]).or_default() += 1;
            }
        }
    }
    let total: usize = counts.values().sum();
    assert!(total > 2000, "{total}");
    for &(u, p) in &case.expected {
        let freq = counts[&u] as f64 / total as f64;
        assert!((freq - p).abs() <= 0.03, "{u}: {freq} vs {p}");
    }
}

#[test]
fn merged_graph_shapes() {
    let a = graph(2, &[(0, 1)]);
    let b = graph(2, &[(0, 1)]);
    let none = merge_graphs(&a, &b, &AnchorSet::new(vec![]).unwrap());
    assert_eq!(none.component_count(), 2);
    assert_eq!(none.bridge_count(), 0);

    let one = merge_graphs(&a, &b, &AnchorSet::new(vec![(1, 0)]).unwrap());
    assert_eq!(one.node_count(), 4);
    assert_eq!(one.edge_count(), 3);
    assert_eq!(one.component_count(), 1);
    assert_eq!(one.relation(1, 2), Some(BRIDGE_RELATION));
}

#[test]
fn bridges_equal_train_anchor_count() {
    let a = graph(6, &[(0, 1), (1, 2), (3, 4)]);
    let b = graph(5, &[(0, 1), (2, 3), (3, 4)]);
    let anchors = AnchorSet::new(vec![(0, 0), (2, 1), (3, 2), (5, 4)]).unwrap();
    let (train, _) = anchors.split(0.5, 1).unwrap();
    let g = merge_graphs(&a, &b, &train);
    assert_eq!(g.bridge_count(), train.len());
    assert_eq!(g.edge_count(), 3 + 3 + train.len());
}

fn two_cliques() -> UnifiedGraph {
    let mut edges = Vec::new();
    for base in [0u32, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((base + i, base + j));
            }
        }
    }
    edges.push((3, 4));
    UnifiedGraph::from_edges(8, 8, &edges)
}

#[test]
fn skipgram_separates_two_cliques() {
    let g = two_cliques();
    let walks = generate_walks(
        &g,
        &RandomWalkConfig {
            beta: 0.5,
            walks_per_node: 20,
            walk_length: 20,
            seed: 4,
        },
    );
    let out = train_skipgram::<f64>(
        &walks,
        8,
        &SkipGramConfig {
            dim: 16,
            window: 3,
            negatives: 3,
            epochs: 10,
            learning_rate: 0.025,
            seed: 2,
        },
    )
    .unwrap();
    let e = out.embeddings.matrix();
    let cos = |i: usize, j: usize| {
        let (a, b) = (e.row(i), e.row(j));
        a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
    };
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for i in 0..8 {
        for j in i + 1..8 {
            if (i < 4) == (j < 4) {
                intra.push(cos(i, j));
            } else {
                inter.push(cos(i, j));
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&intra) > mean(&inter),
        "intra {} inter {}",
        mean(&intra),
        mean(&inter)
    );

    let loss = &out.epoch_loss;
    assert_eq!(loss.len(), 10);
    assert!(loss.last().unwrap() < loss.first().unwrap(), "{loss:?}");
}
