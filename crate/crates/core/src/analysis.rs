//! Heterogeneity statistics of an aligned pair of knowledge graphs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::{AnchorSet, EntityId, KnowledgeGraph};

/// Fraction of entities per degree value.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeHistogram {
    pub buckets: BTreeMap<usize, f64>,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut total = 0usize;
        for d in degrees {
            *counts.entry(d).or_default() += 1;
            total += 1;
        }
        let buckets = counts.into_iter().map(|(d, c)| (d, c as f64 / total as f64)).collect();
        Self { buckets }
    }

    pub fn fraction(&self, degree: usize) -> f64 {
        self.buckets.get(&degree).copied().unwrap_or(0.0)
    }

    /// Fraction of entities with degree strictly above `degree`.
    pub fn mass_above(&self, degree: usize) -> f64 {
        self.buckets.range(degree + 1..).map(|(_, f)| f).sum()
    }
}

/// Jensen-Shannon divergence (base 2, so within `[0, 1]`).
pub fn js_divergence(p: &DegreeHistogram, q: &DegreeHistogram) -> f64 {
    let mut keys: Vec<usize> = p.buckets.keys().chain(q.buckets.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let kl_half = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
    let mut js = 0.0;
    for k in keys {
        let (a, b) = (p.fraction(k), q.fraction(k));
        let m = 0.5 * (a + b);
        js += 0.5 * kl_half(a, m) + 0.5 * kl_half(b, m);
    }
    js.max(0.0)
}

pub fn density(kg: &KnowledgeGraph) -> Result<f64> {
    if kg.entity_count() == 0 {
        return Err(Error::EmptyInput("knowledge graph".into()));
    }
    Ok(kg.fact_count() as f64 / kg.entity_count() as f64)
}

/// Which graph of an aligned pair a statistic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Distinct entities of `kg` on `side` of the anchors, over the entity count.
pub fn overlapping_ratio(kg: &KnowledgeGraph, anchors: &AnchorSet, side: Side) -> f64 {
    let mut seen = vec![false; kg.entity_count()];
    for &(a, b) in anchors.pairs() {
        let e = match side {
            Side::First => a,
            Side::Second => b,
        };
        seen[e as usize] = true;
    }
    seen.iter().filter(|&&s| s).count() as f64 / kg.entity_count() as f64
}

pub fn degree_distribution(kg: &KnowledgeGraph) -> DegreeHistogram {
    DegreeHistogram::from_degrees((0..kg.entity_count() as EntityId).map(|e| kg.degree(e)))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

const OWN_DIM: u64 = 1 << 40;

/// Mean cosine between the neighbor-indicator vectors of anchored pairs.
///
/// The two graphs share a dimension per anchor class: entities linked by
/// anchors (transitively, since anchors need not be 1-to-1) collapse onto one
/// coordinate. Unanchored neighbors get private coordinates and never match.
/// A pair whose vectors are all-zero on either side contributes 0.
pub fn structure_similarity(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, anchors: &AnchorSet) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::EmptyInput("anchor set".into()));
    }
    anchors.validate(kg1, kg2)?;
    let n1 = kg1.entity_count();
    let mut uf = UnionFind((0..n1 + kg2.entity_count()).collect());
    for &(a, b) in anchors.pairs() {
        uf.union(a as usize, n1 + b as usize);
    }
    let mut class_of: HashMap<usize, u64> = HashMap::new();
    for &(a, b) in anchors.pairs() {
        for node in [a as usize, n1 + b as usize] {
            let root = uf.find(node);
            class_of.insert(node, root as u64);
        }
    }

    let dims = |kg: &KnowledgeGraph, e: EntityId, offset: usize| -> Vec<u64> {
        let mut v: Vec<u64> = kg
            .neighbor_set(e)
            .into_iter()
            .map(|u| match class_of.get(&(offset + u as usize)) {
                Some(&c) => c,
                None => OWN_DIM + u as u64,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let per_pair: Vec<f64> = anchors
        .pairs()
        .par_iter()
        .map(|&(a, b)| {
            let va = dims(kg1, a, 0);
            let vb = dims(kg2, b, n1);
            if va.is_empty() || vb.is_empty() {
                return 0.0;
            }
            // private coordinates of the two sides are disjoint even when their
            // numeric codes coincide, so only class coordinates are intersected
            let shared_b: Vec<u64> = vb.iter().copied().filter(|&d| d < OWN_DIM).collect();
            let common = va
                .iter()
                .filter(|&&d| d < OWN_DIM && shared_b.binary_search(&d).is_ok())
                .count();
            common as f64 / ((va.len() * vb.len()) as f64).sqrt()
        })
        .collect();
    Ok(per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

#[derive(Clone, Debug)]
pub struct KgStats {
    pub entities: usize,
    pub relations: usize,
    pub facts: usize,
    pub density: f64,
    pub overlapping: f64,
    pub degree_histogram: DegreeHistogram,
}

/// Everything the `analyze` command reports.
#[derive(Clone, Debug)]
pub struct HeterogeneityReport {
    pub kg1: KgStats,
    pub kg2: KgStats,
    pub anchors: usize,
    pub structure_similarity: f64,
}

impl HeterogeneityReport {
    pub fn compute(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, anchors: &AnchorSet) -> Result<Self> {
        let stats = |kg: &KnowledgeGraph, side| -> Result<KgStats> {
            Ok(KgStats {
                entities: kg.entity_count(),
                relations: kg.relation_count(),
                facts: kg.fact_count(),
                density: density(kg)?,
                overlapping: overlapping_ratio(kg, anchors, side),
                degree_histogram: degree_distribution(kg),
            })
        };
        Ok(Self {
            kg1: stats(kg1, Side::First)?,
            kg2: stats(kg2, Side::Second)?,
            anchors: anchors.len(),
            structure_similarity: structure_similarity(kg1, kg2, anchors)?,
        })
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<5} {:>10} {:>10} {:>12} {:>10} {:>12}",
            "side", "entities", "relations", "facts", "density", "overlapping"
        );
        for (name, k) in [("kg1", &self.kg1), ("kg2", &self.kg2)] {
            let _ = writeln!(
                s,
                "{:<5} {:>10} {:>10} {:>12} {:>10.3} {:>11.2}%",
                name,
                k.entities,
                k.relations,
                k.facts,
                k.density,
                k.overlapping * 100.0
            );
        }
        let _ = writeln!(s, "anchors: {}", self.anchors);
        let _ = writeln!(s, "structure similarity: {:.1}%", self.structure_similarity * 100.0);
        s
    }

    /// `key = value` lines, histogram buckets as `kgN.degree.<d> = fraction`.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        for (name, k) in [("kg1", &self.kg1), ("kg2", &self.kg2)] {
            let _ = writeln!(s, "{name}.entities = {}", k.entities);
            let _ = writeln!(s, "{name}.relations = {}", k.relations);
            let _ = writeln!(s, "{name}.facts = {}", k.facts);
            let _ = writeln!(s, "{name}.density = {}", k.density);
            let _ = writeln!(s, "{name}.overlapping = {}", k.overlapping);
        }
        let _ = writeln!(s, "anchors = {}", self.anchors);
        let _ = writeln!(s, "structure_similarity = {}", self.structure_similarity);
        for (name, k) in [("kg1", &self.kg1), ("kg2", &self.kg2)] {
            for (d, f) in &k.degree_histogram.buckets {
                let _ = writeln!(s, "{name}.degree.{d} = {f}");
            }
        }
        s
    }
}
