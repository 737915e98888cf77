//! Seeded toy graphs: preferential-attachment graphs and small aligned,
//! temporal KG pairs with controllable name noise. Used by tests, the
//! acceptance proxies and `hhea toy`.

use std::collections::HashSet;

use rand::Rng as _;

use crate::kg::{AnchorSet, CalendarConfig, EntityId, Fact, KnowledgeGraph, Month, TimeSpan};
use crate::rng::{seeded, Rng};

/// Undirected preferential-attachment graph: node `v` attaches to `m`
/// distinct earlier nodes picked proportionally to degree. Entity `i` is
/// named `{prefix}{i}`.
pub fn power_law_graph(n: usize, m: usize, prefix: &str, seed: u64) -> KnowledgeGraph {
    assert!(n > m && m >= 1);
    let mut rng = seeded(seed);
    let mut endpoints: Vec<EntityId> = Vec::new();
    let mut facts = Vec::new();
    for v in 1..n as EntityId {
        let mut targets = HashSet::new();
        let want = m.min(v as usize);
        while targets.len() < want {
            let u = if endpoints.is_empty() || rng.random_bool(0.1) {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            targets.insert(u);
        }
        let mut targets: Vec<_> = targets.into_iter().collect();
        targets.sort_unstable();
        for u in targets {
            facts.push(Fact {
                head: v,
                relation: 0,
                tail: u,
                time: None,
            });
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let names = (0..n).map(|i| format!("{prefix}{i}")).collect();
    KnowledgeGraph::from_parts(names, vec!["r".into()], facts, false, CalendarConfig::default())
        .expect("generated graph is valid")
}

#[derive(Clone, Debug)]
pub struct ToyConfig {
    /// Entities present in both graphs (each yields one anchor).
    pub shared: usize,
    pub only1: usize,
    pub only2: usize,
    /// Fact counts; KG1 is meant to be the dense side.
    pub facts1: usize,
    pub facts2: usize,
    pub relations1: usize,
    pub relations2: usize,
    /// Per-character substitution probability applied to KG2 names.
    pub name_noise: f64,
    /// Calendar length in months starting 1995-01.
    pub months: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            shared: 20,
            only1: 0,
            only2: 0,
            facts1: 200,
            facts2: 60,
            relations1: 5,
            relations2: 3,
            name_noise: 0.0,
            months: 48,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyDataset {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub anchors: AnchorSet,
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "zen", "dar", "mon", "pel", "qui", "bra", "sto", "gha", "lin",
    "or", "ek", "ti", "fa", "jo", "wu", "yel",
];

fn random_word(rng: &mut Rng) -> String {
    let n = rng.random_range(2..=4);
    (0..n)
        .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
        .collect()
}

fn random_name(rng: &mut Rng) -> String {
    let first = random_word(rng);
    if rng.random_bool(0.5) {
        format!("{first} {}", random_word(rng))
    } else {
        first
    }
}

fn corrupt(name: &str, noise: f64, rng: &mut Rng) -> String {
    name.chars()
        .map(|c| {
            if c != ' ' && rng.random_bool(noise) {
                (b'a' + rng.random_range(0..26u8)) as char
            } else {
                c
            }
        })
        .collect()
}

fn unique(mut name: String, taken: &mut HashSet<String>) -> String {
    let base = name.clone();
    let mut i = 2;
    while !taken.insert(name.clone()) {
        name = format!("{base}{i}");
        i += 1;
    }
    name
}

struct World {
    activity: Vec<Vec<Month>>,
}

fn activity(months: usize, rng: &mut Rng) -> Vec<Month> {
    let mut set = HashSet::new();
    for _ in 0..rng.random_range(1..=3) {
        let len = rng.random_range(1..=6).min(months);
        let start = rng.random_range(0..=months - len);
        set.extend((start..start + len).map(|m| m as Month));
    }
    let mut v: Vec<Month> = set.into_iter().collect();
    v.sort_unstable();
    v
}

fn build_side(
    world: &World,
    members: &[usize],
    names: Vec<String>,
    facts: usize,
    relations: usize,
    intervals: bool,
    calendar: CalendarConfig,
    rng: &mut Rng,
) -> KnowledgeGraph {
    // heavy-tailed activity weights make a few hubs
    let weight: Vec<f64> = members
        .iter()
        .map(|_| 1.0 / rng.random_range(0.05f64..1.0).powf(1.2))
        .collect();
    let total: f64 = weight.iter().sum();
    let pick = |rng: &mut Rng| {
        let mut x = rng.random_range(0.0..total);
        for (i, w) in weight.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weight.len() - 1
    };
    let mut out = Vec::with_capacity(facts + members.len());
    // every entity gets at least one fact so the graph survives a TSV round trip
    let heads: Vec<usize> = (0..members.len()).chain((0..facts).map(|_| usize::MAX)).collect();
    for h in heads {
        let h = if h == usize::MAX { pick(rng) } else { h };
        let act = &world.activity[members[h]];
        let m = act[rng.random_range(0..act.len())];
        let active_now: Vec<usize> = (0..members.len())
            .filter(|&i| i != h && world.activity[members[i]].binary_search(&m).is_ok())
            .collect();
        let t = if active_now.is_empty() {
            (h + 1 + rng.random_range(0..members.len() - 1)) % members.len()
        } else {
            active_now[rng.random_range(0..active_now.len())]
        };
        let span = if intervals {
            // extend forward while both endpoints stay active
            let mut end = m;
            while (end as usize) + 1 < calendar.months
                && act.binary_search(&(end + 1)).is_ok()
                && world.activity[members[t]].binary_search(&(end + 1)).is_ok()
                && rng.random_bool(0.7)
            {
                end += 1;
            }
            TimeSpan::new(m, end).unwrap()
        } else {
            TimeSpan::single(m)
        };
        out.push(Fact {
            head: h as EntityId,
            relation: rng.random_range(0..relations) as u32,
            tail: t as EntityId,
            time: Some(span),
        });
    }
    let rel_names = (0..relations).map(|r| format!("rel{r}")).collect();
    KnowledgeGraph::from_parts(names, rel_names, out, true, calendar).expect("generated graph is valid")
}

/// Two temporal KGs over a shared world; each graph has `facts + entities`
/// facts (one seeded per entity, the rest degree-skewed). Shared entities keep their activity
/// months and (noisy) names on both sides; KG1 uses single-month facts, KG2
/// month intervals.
pub fn toy_alignment(config: &ToyConfig) -> ToyDataset {
    let mut rng = seeded(config.seed);
    let total = config.shared + config.only1 + config.only2;
    assert!(config.shared >= 2 && total >= 3);
    let calendar = CalendarConfig::new(1995, config.months).expect("valid calendar");
    let world = World {
        activity: (0..total).map(|_| activity(config.months, &mut rng)).collect(),
    };
    let mut taken = HashSet::new();
    let base: Vec<String> = (0..total).map(|_| unique(random_name(&mut rng), &mut taken)).collect();

    let members1: Vec<usize> = (0..config.shared + config.only1).collect();
    let members2: Vec<usize> = (0..config.shared).chain(config.shared + config.only1..total).collect();
    let names1: Vec<String> = members1.iter().map(|&w| base[w].clone()).collect();
    let mut taken2 = HashSet::new();
    let names2: Vec<String> = members2
        .iter()
        .map(|&w| unique(corrupt(&base[w], config.name_noise, &mut rng), &mut taken2))
        .collect();

    let kg1 = build_side(
        &world,
        &members1,
        names1,
        config.facts1,
        config.relations1,
        false,
        calendar,
        &mut rng,
    );
    let kg2 = build_side(
        &world,
        &members2,
        names2,
        config.facts2,
        config.relations2,
        true,
        calendar,
        &mut rng,
    );
    let anchors = AnchorSet::new((0..config.shared as EntityId).map(|i| (i, i)).collect()).expect("distinct");
    ToyDataset { kg1, kg2, anchors }
}
