//! Iterative degree-based sampling (IDS) of an aligned pair of graphs.
//!
//! This is our own variant: each round deletes a batch of entities per graph,
//! one at a time. For every deletion a few candidates are drawn without
//! replacement with probability proportional to `1 / (degree + 1)` under the
//! current degrees, and the one whose removal leaves the degree histogram
//! closest (by Jensen-Shannon divergence) to the source is deleted. Anchor
//! endpoints are only deleted once no other entity is left to delete.
//!
//! The greedy choice is myopic, so once a graph is on target a refinement pass
//! tries swaps (restore one deleted entity, delete the best proposal) and keeps
//! those that lower the divergence. A run can still end above the bound; up to
//! `attempts` runs per graph on independent streams are made and the first
//! within bound is kept.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::analysis::{degree_distribution, js_divergence, DegreeHistogram};
use crate::error::{Error, Result};
use crate::kg::{AnchorSet, EntityId, Fact, KnowledgeGraph};
use crate::rng::{stream, Rng};

#[derive(Clone, Debug)]
pub struct IdsConfig {
    pub target1: usize,
    pub target2: usize,
    /// Fraction of the current entity count deleted per round.
    pub batch_fraction: f64,
    /// Upper bound on the JS divergence between source and sampled degree histograms.
    pub max_js_divergence: f64,
    /// Swap moves after the last round, as a multiple of the deleted count.
    pub refine_steps: f64,
    /// Independent deletion runs tried until one meets the divergence bound.
    pub attempts: usize,
    pub seed: u64,
}

impl IdsConfig {
    pub fn new(target1: usize, target2: usize, seed: u64) -> Self {
        Self {
            target1,
            target2,
            batch_fraction: 0.05,
            max_js_divergence: 0.05,
            refine_steps: 2.0,
            attempts: 5,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdsSample {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub anchors: AnchorSet,
    pub js_divergence: [f64; 2],
    /// Entity counts of both graphs after each round.
    pub trace: Vec<(usize, usize)>,
}

/// Weighted proposals per deletion; the one leaving the histogram closest to
/// the source is deleted.
const PROPOSALS: usize = 16;

struct SideState<'a> {
    kg: &'a KnowledgeGraph,
    alive: Vec<bool>,
    degree: Vec<usize>,
    /// Alive entities per current degree.
    counts: BTreeMap<usize, usize>,
    protected: Vec<bool>,
    count: usize,
    target: usize,
}

impl<'a> SideState<'a> {
    fn new(kg: &'a KnowledgeGraph, target: usize, anchored: impl Iterator<Item = EntityId>) -> Self {
        let n = kg.entity_count();
        let mut protected = vec![false; n];
        for e in anchored {
            protected[e as usize] = true;
        }
        let degree: Vec<usize> = (0..n as EntityId).map(|e| kg.degree(e)).collect();
        let mut counts = BTreeMap::new();
        for &d in &degree {
            *counts.entry(d).or_default() += 1;
        }
        Self {
            kg,
            alive: vec![true; n],
            degree,
            counts,
            protected,
            count: n,
            target,
        }
    }

    /// Degree moves `(old, new)` of the surviving neighbors if `e` were deleted.
    fn neighbor_moves(&self, e: EntityId) -> Vec<(usize, usize)> {
        let mut lost: BTreeMap<EntityId, usize> = BTreeMap::new();
        for inc in self.kg.incidences(e) {
            if inc.neighbor != e && self.alive[inc.neighbor as usize] {
                *lost.entry(inc.neighbor).or_default() += 1;
            }
        }
        lost.into_iter()
            .map(|(u, m)| {
                let d = self.degree[u as usize];
                (d, d - m)
            })
            .collect()
    }

    fn divergence_without(&self, e: EntityId, original: &DegreeHistogram) -> f64 {
        let mut counts = self.counts.clone();
        let mut shift = |d: usize, by: isize| {
            let c = counts.entry(d).or_default();
            *c = (*c as isize + by) as usize;
        };
        shift(self.degree[e as usize], -1);
        for (old, new) in self.neighbor_moves(e) {
            shift(old, -1);
            shift(new, 1);
        }
        let n = (self.count - 1) as f64;
        let q = DegreeHistogram {
            buckets: counts
                .into_iter()
                .filter(|&(_, c)| c > 0)
                .map(|(d, c)| (d, c as f64 / n))
                .collect(),
        };
        js_divergence(original, &q)
    }

    fn delete(&mut self, e: EntityId) {
        for (old, new) in self.neighbor_moves(e) {
            self.shift_count(old, -1);
            self.shift_count(new, 1);
        }
        self.shift_count(self.degree[e as usize], -1);
        for inc in self.kg.incidences(e) {
            if inc.neighbor != e && self.alive[inc.neighbor as usize] {
                self.degree[inc.neighbor as usize] -= 1;
            }
        }
        self.alive[e as usize] = false;
        self.degree[e as usize] = 0;
        self.count -= 1;
    }

    fn delete_batch(&mut self, fraction: f64, original: &DegreeHistogram, rng: &mut Rng) {
        if self.count <= self.target {
            return;
        }
        let excess = self.count - self.target;
        let batch = ((fraction * self.count as f64).ceil() as usize).clamp(1, excess);
        for _ in 0..batch {
            let (_, e) = self.best_deletion(original, rng);
            self.delete(e);
        }
    }

    /// Draw weighted proposals and return the one whose deletion leaves the
    /// histogram closest to `original`, with that divergence.
    fn best_deletion(&self, original: &DegreeHistogram, rng: &mut Rng) -> (f64, EntityId) {
        let mut pool: Vec<EntityId> = (0..self.alive.len() as EntityId)
            .filter(|&e| self.alive[e as usize] && !self.protected[e as usize])
            .collect();
        if pool.is_empty() {
            pool = (0..self.alive.len() as EntityId)
                .filter(|&e| self.alive[e as usize])
                .collect();
        }
        // Efraimidis-Spirakis weighted sampling without replacement:
        // keep the largest ln(u) / w, with w = 1 / (degree + 1).
        let mut keyed: Vec<(f64, EntityId)> = pool
            .into_iter()
            .map(|e| {
                let w = 1.0 / (self.degree[e as usize] as f64 + 1.0);
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                (u.ln() / w, e)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.truncate(PROPOSALS);
        keyed
            .iter()
            .map(|&(_, e)| (self.divergence_without(e, original), e))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("pool is non-empty")
    }

    /// Swap passes at constant size: bring back a random deleted entity and
    /// delete the best proposal, keeping the swap only if the divergence drops.
    fn refine(&mut self, steps: usize, original: &DegreeHistogram, rng: &mut Rng) {
        let deleted: Vec<EntityId> = (0..self.alive.len() as EntityId)
            .filter(|&e| !self.alive[e as usize])
            .collect();
        if deleted.is_empty() {
            return;
        }
        let mut current = js_divergence(original, &self.histogram());
        for _ in 0..steps {
            let back = deleted[rng.random_range(0..deleted.len())];
            if self.alive[back as usize] {
                continue;
            }
            self.restore(back);
            let (js, out) = self.best_deletion(original, rng);
            if js < current && out != back {
                self.delete(out);
                current = js;
            } else {
                self.delete(back);
            }
        }
    }

    fn restore(&mut self, e: EntityId) {
        self.alive[e as usize] = true;
        let mut gained: BTreeMap<EntityId, usize> = BTreeMap::new();
        let mut own = 0;
        for inc in self.kg.incidences(e) {
            if inc.neighbor == e {
                own += 1;
            } else if self.alive[inc.neighbor as usize] {
                own += 1;
                *gained.entry(inc.neighbor).or_default() += 1;
            }
        }
        for (u, m) in gained {
            let d = self.degree[u as usize];
            self.shift_count(d, -1);
            self.shift_count(d + m, 1);
            self.degree[u as usize] = d + m;
        }
        self.degree[e as usize] = own;
        self.shift_count(own, 1);
        self.count += 1;
    }

    fn shift_count(&mut self, degree: usize, by: isize) {
        let c = self.counts.entry(degree).or_default();
        *c = (*c as isize + by) as usize;
        if *c == 0 {
            self.counts.remove(&degree);
        }
    }

    fn histogram(&self) -> DegreeHistogram {
        let n = self.count as f64;
        DegreeHistogram {
            buckets: self.counts.iter().map(|(&d, &c)| (d, c as f64 / n)).collect(),
        }
    }

    /// Induced subgraph on surviving entities, IDs renumbered densely in the
    /// original order, and the old-to-new entity map.
    fn induced(&self) -> (KnowledgeGraph, Vec<Option<EntityId>>) {
        let mut remap = vec![None; self.alive.len()];
        let mut names = Vec::with_capacity(self.count);
        for (old, name) in self.kg.entity_names().iter().enumerate() {
            if self.alive[old] {
                remap[old] = Some(names.len() as EntityId);
                names.push(name.clone());
            }
        }
        let kept: Vec<&Fact> = self
            .kg
            .facts()
            .iter()
            .filter(|f| self.alive[f.head as usize] && self.alive[f.tail as usize])
            .collect();
        let mut rel_remap = vec![None; self.kg.relation_count()];
        for f in &kept {
            rel_remap[f.relation as usize] = Some(());
        }
        let mut relations = Vec::new();
        let rel_remap: Vec<Option<u32>> = rel_remap
            .iter()
            .enumerate()
            .map(|(old, used)| {
                used.map(|_| {
                    relations.push(self.kg.relation_names()[old].clone());
                    (relations.len() - 1) as u32
                })
            })
            .collect();
        let facts = kept
            .into_iter()
            .map(|f| Fact {
                head: remap[f.head as usize].unwrap(),
                relation: rel_remap[f.relation as usize].unwrap(),
                tail: remap[f.tail as usize].unwrap(),
                time: f.time,
            })
            .collect();
        let kg = KnowledgeGraph::from_parts(names, relations, facts, self.kg.is_temporal(), *self.kg.calendar())
            .expect("induced subgraph of a valid graph is valid");
        (kg, remap)
    }
}

pub fn ids_sample(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    anchors: &AnchorSet,
    config: &IdsConfig,
) -> Result<IdsSample> {
    anchors.validate(kg1, kg2)?;
    if !(config.batch_fraction > 0.0 && config.batch_fraction < 1.0) {
        return Err(Error::invalid("batch fraction must be in (0, 1)"));
    }
    if !(config.max_js_divergence > 0.0 && config.max_js_divergence < 1.0) {
        return Err(Error::invalid("JS divergence threshold must be in (0, 1)"));
    }
    for (target, kg) in [(config.target1, kg1), (config.target2, kg2)] {
        if target == 0 || target > kg.entity_count() {
            return Err(Error::invalid(format!(
                "target size {target} not in 1..={}",
                kg.entity_count()
            )));
        }
    }

    if config.attempts == 0 {
        return Err(Error::invalid("at least one attempt is required"));
    }
    if !(config.refine_steps >= 0.0 && config.refine_steps.is_finite()) {
        return Err(Error::invalid("refine steps must be a non-negative number"));
    }

    let sides = [
        sample_side(kg1, config.target1, anchors.pairs().iter().map(|p| p.0), config, 0),
        sample_side(kg2, config.target2, anchors.pairs().iter().map(|p| p.1), config, 1),
    ];
    for (side, (_, _, d)) in sides.iter().enumerate() {
        if *d > config.max_js_divergence {
            return Err(Error::Sampling(format!(
                "degree distribution of kg{} drifted: JS divergence {d:.4} > {} after {} attempts",
                side + 1,
                config.max_js_divergence,
                config.attempts
            )));
        }
    }
    let [(s1, counts1, js1), (s2, counts2, js2)] = sides;
    if !anchors.is_empty()
        && !anchors
            .pairs()
            .iter()
            .any(|&(a, b)| s1.alive[a as usize] && s2.alive[b as usize])
    {
        return Err(Error::Sampling(
            "target size unreachable without deleting every anchor".into(),
        ));
    }
    // batch sizes depend only on counts, so both sides share the round structure
    let rounds = counts1.len().max(counts2.len());
    let at = |c: &[usize], r: usize, n: usize| c.get(r).or(c.last()).copied().unwrap_or(n);
    let trace = (0..rounds)
        .map(|r| (at(&counts1, r, kg1.entity_count()), at(&counts2, r, kg2.entity_count())))
        .collect();

    let (out1, map1) = s1.induced();
    let (out2, map2) = s2.induced();
    let pairs = anchors
        .pairs()
        .iter()
        .filter_map(|&(a, b)| Some((map1[a as usize]?, map2[b as usize]?)))
        .collect();
    Ok(IdsSample {
        kg1: out1,
        kg2: out2,
        anchors: AnchorSet::new(pairs)?,
        js_divergence: [js1, js2],
        trace,
    })
}

/// Best of up to `config.attempts` deletion runs on one graph: the surviving
/// state, the entity count after each round and the final divergence.
fn sample_side<'a>(
    kg: &'a KnowledgeGraph,
    target: usize,
    anchored: impl Iterator<Item = EntityId> + Clone,
    config: &IdsConfig,
    side: u64,
) -> (SideState<'a>, Vec<usize>, f64) {
    let original = degree_distribution(kg);
    let mut best: Option<(SideState, Vec<usize>, f64)> = None;
    for attempt in 0..config.attempts as u64 {
        let mut rng = stream(config.seed, attempt << 1 | side);
        let mut state = SideState::new(kg, target, anchored.clone());
        let mut counts = Vec::new();
        while state.count > state.target {
            state.delete_batch(config.batch_fraction, &original, &mut rng);
            counts.push(state.count);
        }
        let steps = (config.refine_steps * (kg.entity_count() - target) as f64).round() as usize;
        state.refine(steps, &original, &mut rng);
        let js = js_divergence(&original, &state.histogram());
        if best.as_ref().is_none_or(|b| js < b.2) {
            best = Some((state, counts, js));
        }
        if js <= config.max_js_divergence {
            break;
        }
    }
    best.expect("at least one attempt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::power_law_graph;

    #[test]
    fn target_equal_to_size_is_identity() {
        let g1 = power_law_graph(30, 2, "a", 1);
        let g2 = power_law_graph(25, 2, "b", 2);
        let anchors = AnchorSet::new((0..10).map(|i| (i, i)).collect()).unwrap();
        let out = ids_sample(&g1, &g2, &anchors, &IdsConfig::new(30, 25, 3)).unwrap();
        assert_eq!(out.kg1, g1);
        assert_eq!(out.kg2, g2);
        assert_eq!(out.anchors, anchors);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn rejects_bad_targets() {
        let g = power_law_graph(20, 2, "a", 1);
        let anchors = AnchorSet::new(vec![(0, 0)]).unwrap();
        assert!(ids_sample(&g, &g, &anchors, &IdsConfig::new(0, 10, 1)).is_err());
        assert!(ids_sample(&g, &g, &anchors, &IdsConfig::new(21, 10, 1)).is_err());
    }

    #[test]
    fn anchors_protected_until_exhausted() {
        let g = power_law_graph(40, 2, "a", 5);
        let anchors = AnchorSet::new((0..10).map(|i| (i, i)).collect()).unwrap();
        let mut cfg = IdsConfig::new(20, 20, 9);
        cfg.max_js_divergence = 0.99;
        let out = ids_sample(&g, &g, &anchors, &cfg).unwrap();
        assert_eq!(out.anchors.len(), 10);
        // shrinking below the anchored set eats anchors but keeps at least one
        cfg.target1 = 5;
        cfg.target2 = 5;
        let out = ids_sample(&g, &g, &anchors, &cfg).unwrap();
        assert!(out.anchors.len() <= 5 && !out.anchors.is_empty());
    }
}
