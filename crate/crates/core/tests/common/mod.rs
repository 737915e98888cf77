//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};

use hhea_core::encoders::UnifiedGraph;
use hhea_core::harness::ExperimentConfig;
use hhea_core::kg::{AnchorSet, CalendarConfig, EntityId, Fact, KnowledgeGraph, Month};
use hhea_core::rng::seeded;
use hhea_core::synthetic::{toy_alignment, ToyConfig};
use hhea_core::training::{
    forward, margin_loss, AlignmentInputs, Components, GraphSide, ModelDims, ModelParams, SideFeatures,
};
use ndarray::Array2;
use rand::Rng;

/// CSLS by sorting every row and column in full.
pub fn brute_csls(cos: &Array2<f64>, k: usize) -> Array2<f64> {
    let top_mean = |mut v: Vec<f64>| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v[..k].iter().sum::<f64>() / k as f64
    };
    let (r, c) = cos.dim();
    let rows: Vec<f64> = (0..r).map(|i| top_mean(cos.row(i).to_vec())).collect();
    let cols: Vec<f64> = (0..c).map(|j| top_mean(cos.column(j).to_vec())).collect();
    Array2::from_shape_fn((r, c), |(i, j)| 2.0 * cos[[i, j]] - rows[i] - cols[j])
}

/// Position of `target` after a stable sort by descending score, so ties
/// resolve to the lower index.
pub fn brute_rank(row: &[f64], target: usize) -> usize {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap());
    idx.iter().position(|&i| i == target).unwrap() + 1
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Structure similarity from dense adjacency matrices. Anchor classes are
/// connected components of the bipartite anchor graph (found by BFS); a
/// dimension exists per class plus one per unanchored entity of each side.
pub fn brute_structure_similarity(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, anchors: &AnchorSet) -> f64 {
    let (n1, n2) = (kg1.entity_count(), kg2.entity_count());
    let adjacency = |kg: &KnowledgeGraph| {
        let n = kg.entity_count();
        let mut a = vec![vec![false; n]; n];
        for f in kg.facts() {
            a[f.head as usize][f.tail as usize] = true;
            a[f.tail as usize][f.head as usize] = true;
        }
        a
    };
    let (a1, a2) = (adjacency(kg1), adjacency(kg2));

    // nodes 0..n1 are KG1, n1..n1+n2 are KG2
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in anchors.pairs() {
        links.entry(a as usize).or_default().push(n1 + b as usize);
        links.entry(n1 + b as usize).or_default().push(a as usize);
    }
    let mut class: HashMap<usize, usize> = HashMap::new();
    let mut classes = 0;
    let mut starts: Vec<usize> = links.keys().copied().collect();
    starts.sort();
    for s in starts {
        if class.contains_key(&s) {
            continue;
        }
        let mut queue = VecDeque::from([s]);
        class.insert(s, classes);
        while let Some(x) = queue.pop_front() {
            for &y in &links[&x] {
                if let std::collections::hash_map::Entry::Vacant(v) = class.entry(y) {
                    v.insert(classes);
                    queue.push_back(y);
                }
            }
        }
        classes += 1;
    }
    let width = n1 + n2 + classes;
    let coord = |node: usize| class.get(&node).map_or(node, |c| n1 + n2 + c);
    let mut total = 0.0;
    for &(a, b) in anchors.pairs() {
        let mut u = vec![0.0; width];
        let mut v = vec![0.0; width];
        for x in 0..n1 {
            if a1[a as usize][x] {
                u[coord(x)] = 1.0;
            }
        }
        for y in 0..n2 {
            if a2[b as usize][y] {
                v[coord(n1 + y)] = 1.0;
            }
        }
        let dot: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum();
        let nu: f64 = u.iter().map(|p| p * p).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|p| p * p).sum::<f64>().sqrt();
        if nu > 0.0 && nv > 0.0 {
            total += dot / (nu * nv);
        }
    }
    total / anchors.len() as f64
}

pub fn graph(n: usize, edges: &[(u32, u32)]) -> KnowledgeGraph {
    let names = (0..n).map(|i| format!("e{i}")).collect();
    let facts = edges
        .iter()
        .map(|&(h, t)| Fact {
            head: h,
            relation: 0,
            tail: t,
            time: None,
        })
        .collect();
    KnowledgeGraph::from_parts(names, vec!["r".into()], facts, false, CalendarConfig::default()).unwrap()
}

/// The three enumerable walk graphs with a designated `(prev, cur)` step and
/// its exact next-node distribution at `beta`.
pub struct WalkCase {
    pub name: &'static str,
    pub graph: UnifiedGraph,
    pub prev: u32,
    pub cur: u32,
    pub expected: Vec<(u32, f64)>,
}

pub fn walk_cases(beta: f64) -> Vec<WalkCase> {
    vec![
        // a-b-c-a: from a to b, the only candidate c is adjacent to a
        WalkCase {
            name: "triangle",
            graph: UnifiedGraph::from_edges(3, 3, &[(0, 1), (1, 2), (2, 0)]),
            prev: 0,
            cur: 1,
            expected: vec![(2, 1.0)],
        },
        // star 0 with leaves 1,2,3: from leaf 1 both other leaves are at distance 2
        WalkCase {
            name: "star",
            graph: UnifiedGraph::from_edges(4, 4, &[(0, 1), (0, 2), (0, 3)]),
            prev: 1,
            cur: 0,
            expected: vec![(2, 0.5), (3, 0.5)],
        },
        // p=0, c=1 with candidates u=2 (adjacent to p) and w=3 (distance 2)
        WalkCase {
            name: "mixed",
            graph: UnifiedGraph::from_edges(4, 4, &[(0, 1), (1, 2), (1, 3), (0, 2)]),
            prev: 0,
            cur: 1,
            expected: vec![(2, 1.0 - beta), (3, beta)],
        },
    ]
}

/// Small random model with all three components and a batch of triples.
pub struct GradInstance {
    pub model: ModelParams<f64>,
    pub inputs: AlignmentInputs<f64>,
    pub positives: Vec<(EntityId, EntityId)>,
    pub negatives: Vec<Vec<EntityId>>,
    pub margin: f64,
}

pub fn gradient_instance(seed: u64) -> GradInstance {
    let mut rng = seeded(seed);
    let n1 = rng.random_range(3..=5);
    let n2 = rng.random_range(3..=5);
    let dims = ModelDims {
        name_in: rng.random_range(2..=6),
        name_out: rng.random_range(2..=5),
        time_k: rng.random_range(1..=3),
        time_out: rng.random_range(2..=4),
        months: rng.random_range(6..=12),
        structure_in: rng.random_range(2..=5),
        structure_out: rng.random_range(2..=4),
    };
    let all = Components {
        name: true,
        time: true,
        structure: true,
    };
    let side = |n: usize, rng: &mut hhea_core::rng::Rng| SideFeatures {
        names: Some(Array2::from_shape_simple_fn((n, dims.name_in), || {
            rng.random_range(-1.0..1.0)
        })),
        months: Some(
            (0..n)
                .map(|_| {
                    (0..dims.months as Month)
                        .filter(|_| rng.random_bool(0.3))
                        .collect::<Vec<_>>()
                })
                .collect(),
        ),
        structure: Some(Array2::from_shape_simple_fn((n, dims.structure_in), || {
            rng.random_range(-1.0..1.0)
        })),
    };
    let inputs = AlignmentInputs {
        kg1: side(n1, &mut rng),
        kg2: side(n2, &mut rng),
        months: dims.months,
    };
    let model = ModelParams::init(&dims, all, rng.random()).unwrap();
    let count = rng.random_range(2..=3);
    let positives: Vec<(EntityId, EntityId)> = (0..count)
        .map(|i| (i as EntityId, rng.random_range(0..n2) as EntityId))
        .collect();
    let negatives = positives
        .iter()
        .map(|&(_, j)| {
            let others: Vec<EntityId> = (0..n2 as EntityId).filter(|&x| x != j).collect();
            let k = rng.random_range(1..=2);
            rand::seq::index::sample(&mut rng, others.len(), k)
                .into_iter()
                .map(|i| others[i])
                .collect()
        })
        .collect();
    GradInstance {
        model,
        inputs,
        positives,
        negatives,
        margin: rng.random_range(0.2..1.5),
    }
}

fn cos(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
}

/// Smallest `|margin + d(i, j) - d(i, j')|` over the batch: how close the
/// instance sits to a hinge kink, where finite differences are meaningless.
pub fn kink_distance(g: &GradInstance) -> f64 {
    let mut best = f64::INFINITY;
    for (&(i, j), negs) in g.positives.iter().zip(&g.negatives) {
        let hi = forward(&g.model, &g.inputs, GraphSide::Kg1, &[i]).unwrap();
        let hj = forward(&g.model, &g.inputs, GraphSide::Kg2, &[j]).unwrap();
        for &n in negs {
            let hn = forward(&g.model, &g.inputs, GraphSide::Kg2, &[n]).unwrap();
            let arg = g.margin + (1.0 - cos(hi.row(0), hj.row(0))) - (1.0 - cos(hi.row(0), hn.row(0)));
            best = best.min(arg.abs());
        }
    }
    best
}

/// Largest relative error between analytic and central-difference gradients
/// over every parameter, per tensor name. Relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_errors(g: &GradInstance, step: f64, floor: f64) -> Vec<(&'static str, f64)> {
    let loss = |m: &ModelParams<f64>| {
        margin_loss(m, &g.inputs, &g.positives, &g.negatives, g.margin)
            .unwrap()
            .0
    };
    let (_, grads) = margin_loss(&g.model, &g.inputs, &g.positives, &g.negatives, g.margin).unwrap();
    let analytic: Vec<(&'static str, Vec<f64>)> = grads.tensors().into_iter().map(|(n, t)| (n, t.to_vec())).collect();
    let mut out = Vec::new();
    for (k, (name, a)) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..a.len() {
            let mut plus = g.model.clone();
            plus.tensors_mut()[k][i] += step;
            let mut minus = g.model.clone();
            minus.tensors_mut()[k][i] -= step;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
            let err = (a[i] - numeric).abs() / a[i].abs().max(numeric.abs()).max(floor);
            worst = worst.max(err);
        }
        out.push((*name, worst));
    }
    out
}

/// Toy dataset on disk plus a config pointing at it.
pub fn toy_config(dir: &Path, toy: &ToyConfig) -> ExperimentConfig {
    let ds = toy_alignment(toy);
    ds.kg1.save_tsv(&dir.join("kg1.tsv")).unwrap();
    ds.kg2.save_tsv(&dir.join("kg2.tsv")).unwrap();
    ds.anchors.save_tsv(&dir.join("anchors.tsv"), &ds.kg1, &ds.kg2).unwrap();
    let negatives = (ds.kg2.entity_count() - 1).min(10);
    let text = format!(
        "kg1_facts = kg1.tsv\nkg2_facts = kg2.tsv\nanchors = anchors.tsv\ncalendar_months = {}\n\
         negatives = {negatives}\nepochs = 30\nwhiten_dim = 16\noutput_dir = out\nseed = 11\n",
        toy.months
    );
    std::fs::write(dir.join("experiment.conf"), text).unwrap();
    ExperimentConfig::load(&dir.join("experiment.conf")).unwrap()
}

/// The 20-entities-per-side, 10-anchor toy with identical names on both sides.
pub fn informative_toy() -> ToyConfig {
    ToyConfig {
        shared: 10,
        only1: 10,
        only2: 10,
        name_noise: 0.0,
        seed: 3,
        ..ToyConfig::default()
    }
}

pub fn read_all(dir: &Path, files: &[&str]) -> Vec<(PathBuf, Vec<u8>)> {
    files
        .iter()
        .map(|f| {
            let p = dir.join(f);
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect()
}
