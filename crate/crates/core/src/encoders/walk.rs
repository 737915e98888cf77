//! Unified graph of two KGs bridged by training anchors, and the second-order
//! biased random walk over it.
//!
//! At each step after the first the walker at `cur` (coming from `prev`)
//! considers every neighbor of `cur` except `prev`. A candidate that is not
//! adjacent to `prev` (distance 2) gets weight `beta`, one that is adjacent
//! (distance 1) gets `1 - beta`; weights are normalized over the candidates.
//! The first step is uniform.

use rand::Rng as _;
use rayon::prelude::*;

use crate::kg::{AnchorSet, KnowledgeGraph, RelationId};
use crate::rng::{stream, Rng};

/// Relation ID carried by anchor bridge edges.
pub const BRIDGE_RELATION: RelationId = RelationId::MAX;

/// Undirected simple graph over `n1 + n2` nodes; KG2 entity `j` is node `n1 + j`.
#[derive(Clone, Debug)]
pub struct UnifiedGraph {
    n1: usize,
    /// Sorted by neighbor; one representative relation per neighbor.
    adjacency: Vec<Vec<(u32, RelationId)>>,
    bridges: usize,
}

impl UnifiedGraph {
    /// Build from explicit undirected edges; mainly for tests and toy graphs.
    pub fn from_edges(n: usize, n1: usize, edges: &[(u32, u32)]) -> Self {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            lists[a as usize].push((b, 0));
            lists[b as usize].push((a, 0));
        }
        Self::finish(n1, lists, 0)
    }

    fn finish(n1: usize, mut lists: Vec<Vec<(u32, RelationId)>>, bridges: usize) -> Self {
        for l in &mut lists {
            // stable sort keeps the first relation seen for each neighbor
            l.sort_by_key(|&(u, _)| u);
            l.dedup_by_key(|&mut (u, _)| u);
        }
        Self {
            n1,
            adjacency: lists,
            bridges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn kg1_count(&self) -> usize {
        self.n1
    }

    pub fn bridge_count(&self) -> usize {
        self.bridges
    }

    pub fn neighbors(&self, node: u32) -> impl ExactSizeIterator<Item = u32> + '_ {
        self.adjacency[node as usize].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn adjacent(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].binary_search_by_key(&b, |&(u, _)| u).is_ok()
    }

    pub fn relation(&self, a: u32, b: u32) -> Option<RelationId> {
        let l = &self.adjacency[a as usize];
        l.binary_search_by_key(&b, |&(u, _)| u).ok().map(|i| l[i].1)
    }

    /// Distinct undirected edges, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        let mut twice = 0;
        for (a, l) in self.adjacency.iter().enumerate() {
            for &(b, _) in l {
                twice += if b as usize == a { 2 } else { 1 };
            }
        }
        twice / 2
    }

    pub fn component_count(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s as u32);
            while let Some(x) = stack.pop() {
                for y in self.neighbors(x) {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }
}

/// Disjoint union of the two graphs plus one bridge edge per training anchor.
/// KG2 relation IDs are shifted by the KG1 relation count.
pub fn merge_graphs(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, train_anchors: &AnchorSet) -> UnifiedGraph {
    let n1 = kg1.entity_count();
    let r1 = kg1.relation_count() as RelationId;
    let mut lists: Vec<Vec<(u32, RelationId)>> = vec![Vec::new(); n1 + kg2.entity_count()];
    for f in kg1.facts() {
        lists[f.head as usize].push((f.tail, f.relation));
        lists[f.tail as usize].push((f.head, f.relation));
    }
    for f in kg2.facts() {
        let (h, t) = (f.head + n1 as u32, f.tail + n1 as u32);
        lists[h as usize].push((t, f.relation + r1));
        lists[t as usize].push((h, f.relation + r1));
    }
    for &(a, b) in train_anchors.pairs() {
        let b = b + n1 as u32;
        lists[a as usize].push((b, BRIDGE_RELATION));
        lists[b as usize].push((a, BRIDGE_RELATION));
    }
    UnifiedGraph::finish(n1, lists, train_anchors.len())
}

#[derive(Clone, Debug)]
pub struct RandomWalkConfig {
    /// Weight of distance-2 (exploring) candidates; `1 - beta` goes to distance-1 ones.
    pub beta: f64,
    pub walks_per_node: usize,
    /// Number of nodes in a full-length walk, start included.
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for RandomWalkConfig {
    fn default() -> Self {
        Self {
            beta: 0.9,
            walks_per_node: 10,
            walk_length: 40,
            seed: 0,
        }
    }
}

/// A path through the unified graph with the relation taken at every step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub nodes: Vec<u32>,
    pub relations: Vec<RelationId>,
}

/// Exact transition distribution from `cur` given the previous node.
pub fn transition_probabilities(graph: &UnifiedGraph, prev: Option<u32>, cur: u32, beta: f64) -> Vec<(u32, f64)> {
    let weights: Vec<(u32, f64)> = match prev {
        None => graph.neighbors(cur).map(|u| (u, 1.0)).collect(),
        Some(p) => graph
            .neighbors(cur)
            .filter(|&u| u != p)
            .map(|u| (u, if graph.adjacent(p, u) { 1.0 - beta } else { beta }))
            .collect(),
    };
    let total: f64 = weights.iter().map(|w| w.1).sum();
    weights.into_iter().map(|(u, w)| (u, w / total)).collect()
}

/// Draw the next node, or `None` when no candidate is left.
///
/// Rejection sampling against the larger of the two weights; the accepted
/// distribution equals [`transition_probabilities`].
pub fn sample_step(graph: &UnifiedGraph, prev: Option<u32>, cur: u32, beta: f64, rng: &mut Rng) -> Option<u32> {
    let list = &graph.adjacency[cur as usize];
    let Some(p) = prev else {
        if list.is_empty() {
            return None;
        }
        return Some(list[rng.random_range(0..list.len())].0);
    };
    if list.is_empty() || (list.len() == 1 && list[0].0 == p) {
        return None;
    }
    let w_max = beta.max(1.0 - beta);
    loop {
        let u = list[rng.random_range(0..list.len())].0;
        if u == p {
            continue;
        }
        let w = if graph.adjacent(p, u) { 1.0 - beta } else { beta };
        if w >= w_max || rng.random::<f64>() * w_max < w {
            return Some(u);
        }
    }
}

fn walk_from(graph: &UnifiedGraph, start: u32, config: &RandomWalkConfig, rng: &mut Rng) -> Walk {
    let mut nodes = Vec::with_capacity(config.walk_length);
    let mut relations = Vec::with_capacity(config.walk_length.saturating_sub(1));
    nodes.push(start);
    let mut prev = None;
    let mut cur = start;
    while nodes.len() < config.walk_length {
        let Some(next) = sample_step(graph, prev, cur, config.beta, rng) else {
            break;
        };
        relations.push(graph.relation(cur, next).expect("adjacent"));
        nodes.push(next);
        prev = Some(cur);
        cur = next;
    }
    Walk { nodes, relations }
}

/// `walks_per_node` walks from every node with at least one neighbor, ordered
/// round by round. Node `v` draws from its own stream `(seed, v)`, so the
/// output does not depend on the number of worker threads.
pub fn generate_walks(graph: &UnifiedGraph, config: &RandomWalkConfig) -> Vec<Walk> {
    assert!(config.beta > 0.0 && config.beta < 1.0, "beta must be in (0, 1)");
    let starts: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&v| graph.degree(v) > 0)
        .collect();
    let per_node: Vec<Vec<Walk>> = starts
        .par_iter()
        .map(|&v| {
            let mut rng = stream(config.seed, v as u64);
            (0..config.walks_per_node)
                .map(|_| walk_from(graph, v, config, &mut rng))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(starts.len() * config.walks_per_node);
    for round in 0..config.walks_per_node {
        for walks in &per_node {
            out.push(walks[round].clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::CalendarConfig;
    use crate::rng::seeded;
    use std::path::PathBuf;

    fn kg(text: &str) -> KnowledgeGraph {
        KnowledgeGraph::parse(text.as_bytes(), &PathBuf::from("mem"), false, CalendarConfig::default()).unwrap()
    }

    #[test]
    fn merge_without_anchors_is_disjoint() {
        let g1 = kg("a\tr\tb\nc\tr\td\n");
        let g2 = kg("x\tr\ty\n");
        let u = merge_graphs(&g1, &g2, &AnchorSet::default());
        assert_eq!(u.component_count(), 3);
        assert_eq!(u.bridge_count(), 0);
    }

    #[test]
    fn one_anchor_joins_two_edges() {
        let g1 = kg("a\tr\tb\n");
        let g2 = kg("x\ts\ty\n");
        let anchors = AnchorSet::new(vec![(0, 0)]).unwrap();
        let u = merge_graphs(&g1, &g2, &anchors);
        assert_eq!(u.node_count(), 4);
        assert_eq!(u.component_count(), 1);
        assert_eq!(u.edge_count(), 3);
        assert_eq!(u.relation(0, 2), Some(BRIDGE_RELATION));
        assert_eq!(u.relation(2, 3), Some(1));
    }

    #[test]
    fn triangle_single_candidate() {
        let g = UnifiedGraph::from_edges(3, 3, &[(0, 1), (1, 2), (2, 0)]);
        let p = transition_probabilities(&g, Some(0), 1, 0.9);
        assert_eq!(p, vec![(2, 1.0)]);
        let mut rng = seeded(1);
        for _ in 0..50 {
            assert_eq!(sample_step(&g, Some(0), 1, 0.9, &mut rng), Some(2));
        }
    }

    #[test]
    fn star_leaves_are_uniform() {
        let g = UnifiedGraph::from_edges(4, 4, &[(0, 1), (0, 2), (0, 3)]);
        for beta in [0.1, 0.5, 0.9] {
            let p = transition_probabilities(&g, Some(1), 0, beta);
            assert_eq!(p, vec![(2, 0.5), (3, 0.5)]);
        }
    }

    #[test]
    fn dead_end_stops_walk() {
        let g = UnifiedGraph::from_edges(2, 2, &[(0, 1)]);
        let mut rng = seeded(1);
        assert_eq!(sample_step(&g, Some(0), 1, 0.5, &mut rng), None);
        let w = walk_from(&g, 0, &RandomWalkConfig::default(), &mut rng);
        assert_eq!(w.nodes, vec![0, 1]);
    }

    #[test]
    fn isolated_nodes_yield_no_walks() {
        let g = UnifiedGraph::from_edges(3, 3, &[(0, 1)]);
        let cfg = RandomWalkConfig {
            walks_per_node: 2,
            walk_length: 5,
            ..Default::default()
        };
        let walks = generate_walks(&g, &cfg);
        assert_eq!(walks.len(), 4);
        assert!(walks.iter().all(|w| w.nodes[0] != 2));
        assert_eq!(walks[0].nodes[0], 0);
        assert_eq!(walks[1].nodes[0], 1);
    }
}
