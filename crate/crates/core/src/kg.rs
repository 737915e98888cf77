//! Knowledge graphs, anchor sets and the month calendar used for time stamps.
//!
//! Fact files are tab separated, one fact per line:
//!
//! ```text
//! head<TAB>relation<TAB>tail[<TAB>time_begin[<TAB>time_end]]
//! ```
//!
//! Lines starting with `#` and blank lines are skipped. Entity and relation IDs
//! are dense and assigned in order of first appearance.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::seeded;

pub type EntityId = u32;
pub type RelationId = u32;
pub type Month = u16;

/// Month calendar: index 0 is January of `base_year`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CalendarConfig {
    pub base_year: i32,
    pub months: usize,
}

impl Default for CalendarConfig {
    /// 1995-01 through 2021-12.
    fn default() -> Self {
        Self {
            base_year: 1995,
            months: 324,
        }
    }
}

impl CalendarConfig {
    pub fn new(base_year: i32, months: usize) -> Result<Self> {
        if months == 0 || months > Month::MAX as usize + 1 {
            return Err(Error::invalid(format!("calendar length {months} out of range")));
        }
        Ok(Self { base_year, months })
    }

    /// `YYYY-MM` label of a month index.
    pub fn label(&self, month: Month) -> String {
        let m = month as i32;
        format!("{:04}-{:02}", self.base_year + m / 12, m % 12 + 1)
    }

    fn end_label(&self) -> String {
        self.label((self.months - 1) as Month)
    }
}

/// Month index of a `YYYY-MM` (or `YYYY-MM-DD`, day ignored) date.
pub fn time_index(date: &str, calendar: &CalendarConfig) -> Result<Month> {
    let malformed = || Error::invalid(format!("malformed date {date:?}, expected YYYY-MM"));
    let mut parts = date.split('-');
    let year: i32 = parts
        .next()
        .filter(|y| y.len() == 4)
        .and_then(|y| y.parse().ok())
        .ok_or_else(malformed)?;
    let month: i32 = parts
        .next()
        .filter(|m| m.len() == 2)
        .and_then(|m| m.parse().ok())
        .ok_or_else(malformed)?;
    if let Some(day) = parts.next() {
        let ok = day.len() == 2 && day.parse::<u8>().is_ok_and(|d| (1..=31).contains(&d));
        if !ok || parts.next().is_some() {
            return Err(malformed());
        }
    }
    if !(1..=12).contains(&month) {
        return Err(malformed());
    }
    let index = (year - calendar.base_year) as i64 * 12 + (month - 1) as i64;
    if index < 0 || index >= calendar.months as i64 {
        return Err(Error::OutOfCalendar {
            date: date.to_string(),
            base_year: calendar.base_year,
            end: calendar.end_label(),
        });
    }
    Ok(index as Month)
}

/// Closed interval of month indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeSpan {
    pub begin: Month,
    pub end: Month,
}

impl TimeSpan {
    pub fn new(begin: Month, end: Month) -> Result<Self> {
        if begin > end {
            return Err(Error::invalid(format!(
                "time span begins ({begin}) after it ends ({end})"
            )));
        }
        Ok(Self { begin, end })
    }

    pub fn single(month: Month) -> Self {
        Self {
            begin: month,
            end: month,
        }
    }

    pub fn contains(&self, month: Month) -> bool {
        self.begin <= month && month <= self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fact {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
    pub time: Option<TimeSpan>,
}

/// One incidence of a fact, seen from one of its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: EntityId,
    pub relation: RelationId,
    /// `true` when the owning entity is the fact's head.
    pub outgoing: bool,
    pub time: Option<TimeSpan>,
}

/// An immutable, indexed knowledge graph.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entity_names: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_names: Vec<String>,
    facts: Vec<Fact>,
    offsets: Vec<usize>,
    incidences: Vec<Incidence>,
    temporal: bool,
    calendar: CalendarConfig,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entity_names == other.entity_names
            && self.relation_names == other.relation_names
            && self.facts == other.facts
            && self.temporal == other.temporal
            && self.calendar == other.calendar
    }
}

impl KnowledgeGraph {
    /// Validate the parts and build the incidence index.
    pub fn from_parts(
        entity_names: Vec<String>,
        relation_names: Vec<String>,
        facts: Vec<Fact>,
        temporal: bool,
        calendar: CalendarConfig,
    ) -> Result<Self> {
        let n = entity_names.len();
        let mut entity_index = HashMap::with_capacity(n);
        for (id, name) in entity_names.iter().enumerate() {
            if entity_index.insert(name.clone(), id as EntityId).is_some() {
                return Err(Error::invalid(format!("duplicate entity name {name:?}")));
            }
        }
        for (i, f) in facts.iter().enumerate() {
            if f.head as usize >= n || f.tail as usize >= n {
                return Err(Error::invalid(format!("fact {i} references an unknown entity")));
            }
            if f.relation as usize >= relation_names.len() {
                return Err(Error::invalid(format!("fact {i} references an unknown relation")));
            }
            match (temporal, f.time) {
                (true, None) => return Err(Error::invalid(format!("fact {i} has no time span"))),
                (false, Some(_)) => {
                    return Err(Error::invalid(format!(
                        "fact {i} has a time span in a non-temporal graph"
                    )))
                }
                (true, Some(t)) => {
                    if t.begin > t.end || t.end as usize >= calendar.months {
                        return Err(Error::invalid(format!("fact {i} has an invalid time span")));
                    }
                }
                (false, None) => {}
            }
        }

        let mut degree = vec![0usize; n];
        for f in &facts {
            degree[f.head as usize] += 1;
            degree[f.tail as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let blank = Incidence {
            neighbor: 0,
            relation: 0,
            outgoing: false,
            time: None,
        };
        let mut incidences = vec![blank; offsets[n]];
        let mut cursor = offsets[..n].to_vec();
        for f in &facts {
            let h = f.head as usize;
            incidences[cursor[h]] = Incidence {
                neighbor: f.tail,
                relation: f.relation,
                outgoing: true,
                time: f.time,
            };
            cursor[h] += 1;
            let t = f.tail as usize;
            incidences[cursor[t]] = Incidence {
                neighbor: f.head,
                relation: f.relation,
                outgoing: false,
                time: f.time,
            };
            cursor[t] += 1;
        }

        Ok(Self {
            entity_names,
            entity_index,
            relation_names,
            facts,
            offsets,
            incidences,
            temporal,
            calendar,
        })
    }

    /// Parse a fact file from any reader. `source` labels error messages.
    pub fn parse<R: BufRead>(reader: R, source: &Path, temporal: bool, calendar: CalendarConfig) -> Result<Self> {
        let mut entities: Vec<String> = Vec::new();
        let mut entity_ids: HashMap<String, EntityId> = HashMap::new();
        let mut relations: Vec<String> = Vec::new();
        let mut relation_ids: HashMap<String, RelationId> = HashMap::new();
        let mut facts = Vec::new();

        fn intern(name: &str, names: &mut Vec<String>, ids: &mut HashMap<String, u32>) -> u32 {
            if let Some(&id) = ids.get(name) {
                return id;
            }
            let id = names.len() as u32;
            names.push(name.to_string());
            ids.insert(name.to_string(), id);
            id
        }

        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let expected = if temporal { "4 or 5" } else { "3" };
            let ok = if temporal {
                fields.len() == 4 || fields.len() == 5
            } else {
                fields.len() == 3
            };
            if !ok {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("expected {expected} tab-separated fields, found {}", fields.len()),
                ));
            }
            if fields[..3].iter().any(|f| f.is_empty()) {
                return Err(Error::parse(source, lineno, "empty head, relation or tail"));
            }
            let time = if temporal {
                let at = |s: &str| time_index(s, &calendar).map_err(|e| Error::parse(source, lineno, e.to_string()));
                let begin = at(fields[3])?;
                let end = match fields.get(4) {
                    Some(s) if !s.is_empty() => at(s)?,
                    _ => begin,
                };
                let span = TimeSpan::new(begin, end).map_err(|e| Error::parse(source, lineno, e.to_string()))?;
                Some(span)
            } else {
                None
            };
            let head = intern(fields[0], &mut entities, &mut entity_ids);
            let relation = intern(fields[1], &mut relations, &mut relation_ids);
            let tail = intern(fields[2], &mut entities, &mut entity_ids);
            facts.push(Fact {
                head,
                relation,
                tail,
                time,
            });
        }
        if facts.is_empty() {
            return Err(Error::EmptyInput(source.display().to_string()));
        }
        Self::from_parts(entities, relations, facts, temporal, calendar)
    }

    /// Serialize back to the fact TSV format. Temporal facts always carry both
    /// begin and end months.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for f in &self.facts {
            write!(
                out,
                "{}\t{}\t{}",
                self.entity_names[f.head as usize],
                self.relation_names[f.relation as usize],
                self.entity_names[f.tail as usize]
            )?;
            if let Some(t) = f.time {
                write!(
                    out,
                    "\t{}\t{}",
                    self.calendar.label(t.begin),
                    self.calendar.label(t.end)
                )?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_tsv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn entity_count(&self) -> usize {
        self.entity_names.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_names.len()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entity_names[id as usize]
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn is_temporal(&self) -> bool {
        self.temporal
    }

    pub fn calendar(&self) -> &CalendarConfig {
        &self.calendar
    }

    /// Every fact incidence of `entity`; self-loops appear twice.
    pub fn incidences(&self, entity: EntityId) -> &[Incidence] {
        let e = entity as usize;
        &self.incidences[self.offsets[e]..self.offsets[e + 1]]
    }

    /// Number of fact incidences (in + out, multi-edges counted).
    pub fn degree(&self, entity: EntityId) -> usize {
        let e = entity as usize;
        self.offsets[e + 1] - self.offsets[e]
    }

    /// Sorted, deduplicated 1-hop neighbors.
    pub fn neighbor_set(&self, entity: EntityId) -> Vec<EntityId> {
        let mut v: Vec<EntityId> = self.incidences(entity).iter().map(|i| i.neighbor).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Subgraph with the same entity table and only the facts for which `keep` holds.
    pub fn filter_facts(&self, mut keep: impl FnMut(usize, &Fact) -> bool) -> Self {
        let facts = self
            .facts
            .iter()
            .enumerate()
            .filter(|(i, f)| keep(*i, f))
            .map(|(_, f)| *f)
            .collect();
        Self::from_parts(
            self.entity_names.clone(),
            self.relation_names.clone(),
            facts,
            self.temporal,
            self.calendar,
        )
        .expect("subset of a valid graph is valid")
    }

    /// Binary occurrence vector of `entity` over the calendar.
    pub fn entity_time_vector(&self, entity: EntityId) -> Result<Vec<u8>> {
        if !self.temporal {
            return Err(Error::NotTemporal);
        }
        let mut v = vec![0u8; self.calendar.months];
        for inc in self.incidences(entity) {
            if let Some(t) = inc.time {
                v[t.begin as usize..=t.end as usize].fill(1);
            }
        }
        Ok(v)
    }

    /// Sorted active months of every entity (the sparse form of
    /// [`entity_time_vector`](Self::entity_time_vector)).
    pub fn active_months(&self) -> Result<Vec<Vec<Month>>> {
        if !self.temporal {
            return Err(Error::NotTemporal);
        }
        Ok((0..self.entity_count() as EntityId)
            .map(|e| {
                self.entity_time_vector(e)
                    .expect("temporal")
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(|(m, _)| m as Month)
                    .collect()
            })
            .collect())
    }
}

pub fn load_kg(path: &Path, temporal: bool, calendar: CalendarConfig) -> Result<KnowledgeGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    KnowledgeGraph::parse(BufReader::new(file), path, temporal, calendar)
}

/// Ordered list of aligned `(kg1 entity, kg2 entity)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnchorSet {
    pairs: Vec<(EntityId, EntityId)>,
}

impl AnchorSet {
    /// Rejects duplicate pairs.
    pub fn new(pairs: Vec<(EntityId, EntityId)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if !seen.insert(*p) {
                return Err(Error::invalid(format!("duplicate anchor pair {p:?}")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(EntityId, EntityId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Check every referenced ID exists in its graph.
    pub fn validate(&self, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        for &(a, b) in &self.pairs {
            if a as usize >= kg1.entity_count() || b as usize >= kg2.entity_count() {
                return Err(Error::invalid(format!("anchor ({a}, {b}) out of range")));
            }
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R, source: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<Self> {
        Self::parse_with(reader, source, |name| kg1.entity_id(name), |name| kg2.entity_id(name))
    }

    /// Parse with arbitrary name resolvers, e.g. row names of embedding files.
    pub fn parse_with<R, F1, F2>(reader: R, source: &Path, resolve1: F1, resolve2: F2) -> Result<Self>
    where
        R: BufRead,
        F1: Fn(&str) -> Option<EntityId>,
        F2: Fn(&str) -> Option<EntityId>,
    {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("expected 2 tab-separated fields, found {}", fields.len()),
                ));
            }
            let unknown = |name: &str, side: u8| Error::UnknownEntity {
                path: source.to_path_buf(),
                line: lineno,
                side,
                name: name.to_string(),
            };
            let a = resolve1(fields[0]).ok_or_else(|| unknown(fields[0], 1))?;
            let b = resolve2(fields[1]).ok_or_else(|| unknown(fields[1], 2))?;
            if !seen.insert((a, b)) {
                return Err(Error::parse(source, lineno, "duplicate anchor pair"));
            }
            pairs.push((a, b));
        }
        Ok(Self { pairs })
    }

    pub fn write_tsv<W: Write>(&self, mut out: W, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> std::io::Result<()> {
        for &(a, b) in &self.pairs {
            writeln!(out, "{}\t{}", kg1.entity_name(a), kg2.entity_name(b))?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_tsv(&mut w, kg1, kg2)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Deterministic train/test partition. Both halves keep file order.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(AnchorSet, AnchorSet)> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyInput("anchor set".into()));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!("train fraction {train_fraction} not in (0, 1)")));
        }
        let n = self.pairs.len();
        let n_train = (train_fraction * n as f64).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::invalid(format!(
                "train fraction {train_fraction} of {n} anchors leaves an empty partition"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeded(seed));
        let mut in_train = vec![false; n];
        for &i in &order[..n_train] {
            in_train[i] = true;
        }
        let (train, test): (Vec<_>, Vec<_>) = self.pairs.iter().zip(&in_train).partition(|(_, &t)| t);
        Ok((
            AnchorSet {
                pairs: train.into_iter().map(|(p, _)| *p).collect(),
            },
            AnchorSet {
                pairs: test.into_iter().map(|(p, _)| *p).collect(),
            },
        ))
    }
}

/// Load anchors; every name must already exist in the fact files.
pub fn load_anchors(path: &Path, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<AnchorSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    AnchorSet::parse(BufReader::new(file), path, kg1, kg2)
}

pub fn split_anchors(anchors: &AnchorSet, train_fraction: f64, seed: u64) -> Result<(AnchorSet, AnchorSet)> {
    anchors.split(train_fraction, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str, temporal: bool) -> Result<KnowledgeGraph> {
        KnowledgeGraph::parse(
            text.as_bytes(),
            &PathBuf::from("mem"),
            temporal,
            CalendarConfig::default(),
        )
    }

    #[test]
    fn three_entities_one_relation() {
        let kg = parse("a\tr1\tb\nb\tr1\tc\n", false).unwrap();
        assert_eq!(kg.entity_count(), 3);
        assert_eq!(kg.relation_count(), 1);
        assert_eq!(kg.fact_count(), 2);
        assert_eq!(kg.entity_names(), ["a", "b", "c"]);
        assert_eq!(kg.degree(1), 2);
    }

    #[test]
    fn too_few_fields_reports_line() {
        let err = parse("a\tr1\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_file_is_error() {
        assert!(matches!(parse("# only a comment\n", false), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn temporal_requires_time() {
        assert!(parse("a\tr\tb\n", true).is_err());
        let kg = parse("a\tr\tb\t1995-03\n", true).unwrap();
        assert_eq!(kg.facts()[0].time, Some(TimeSpan::single(2)));
        let kg = parse("a\tr\tb\t1995-03\t1995-05\n", true).unwrap();
        assert_eq!(kg.facts()[0].time, Some(TimeSpan::new(2, 4).unwrap()));
    }

    #[test]
    fn bad_times_are_errors() {
        assert!(parse("a\tr\tb\tsoon\n", true).is_err());
        assert!(parse("a\tr\tb\t2030-01\n", true).is_err());
        assert!(parse("a\tr\tb\t1995-05\t1995-03\n", true).is_err());
        assert!(parse("a\tr\tb\t1995-13\n", true).is_err());
    }

    #[test]
    fn time_index_examples() {
        let cal = CalendarConfig::default();
        assert_eq!(time_index("1995-01", &cal).unwrap(), 0);
        assert_eq!(time_index("1996-03", &cal).unwrap(), 14);
        assert_eq!(time_index("2021-12", &cal).unwrap(), 323);
        assert_eq!(time_index("2021-12-31", &cal).unwrap(), 323);
        assert!(matches!(time_index("2022-01", &cal), Err(Error::OutOfCalendar { .. })));
        assert!(matches!(time_index("1994-12", &cal), Err(Error::OutOfCalendar { .. })));
        assert!(time_index("1995-00", &cal).is_err());
        assert!(time_index("95-01", &cal).is_err());
        assert_eq!(cal.label(14), "1996-03");
    }

    #[test]
    fn comments_and_crlf() {
        let kg = parse("# header\r\na\tr\tb\r\n\nb\tr\ta\n", false).unwrap();
        assert_eq!(kg.fact_count(), 2);
        assert_eq!(kg.entity_names(), ["a", "b"]);
    }

    #[test]
    fn time_vectors() {
        let kg = parse(
            "a\tr\tb\t1995-03\t1995-05\nc\tr\tc\t1995-01\nc\tr\td\t1995-01\t1995-02\ne\tr\tf\t1995-01\n",
            true,
        )
        .unwrap();
        let va = kg.entity_time_vector(0).unwrap();
        assert_eq!(va.len(), 324);
        let ones: Vec<usize> = va.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
        assert_eq!(ones, [2, 3, 4]);
        let c = kg.entity_id("c").unwrap();
        let vc = kg.entity_time_vector(c).unwrap();
        assert_eq!(vc.iter().map(|&b| b as usize).sum::<usize>(), 2);
        assert_eq!(&vc[..3], &[1, 1, 0]);
        let months = kg.active_months().unwrap();
        assert_eq!(months[c as usize], vec![0, 1]);
    }

    #[test]
    fn isolated_entity_has_zero_time_vector() {
        let kg = parse("a\tr\tb\t1995-03\n", true).unwrap();
        let empty = kg.filter_facts(|_, _| false);
        assert!(empty.entity_time_vector(0).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn non_temporal_time_vector_is_error() {
        let kg = parse("a\tr\tb\n", false).unwrap();
        assert!(matches!(kg.entity_time_vector(0), Err(Error::NotTemporal)));
    }

    #[test]
    fn duplicate_facts_and_self_loops_kept() {
        let kg = parse("a\tr\tb\na\tr\tb\na\tr\ta\n", false).unwrap();
        assert_eq!(kg.fact_count(), 3);
        assert_eq!(kg.degree(0), 4);
        assert_eq!(kg.neighbor_set(0), vec![0, 1]);
    }

    #[test]
    fn anchors_resolve_by_name() {
        let kg1 = parse("a\tr\tb\n", false).unwrap();
        let kg2 = parse("x\tr\ty\n", false).unwrap();
        let path = PathBuf::from("anchors");
        let a = AnchorSet::parse("a\tx\nb\ty\n".as_bytes(), &path, &kg1, &kg2).unwrap();
        assert_eq!(a.pairs(), &[(0, 0), (1, 1)]);
        let err = AnchorSet::parse("a\tx\nb\tzzz\n".as_bytes(), &path, &kg1, &kg2).unwrap_err();
        match err {
            Error::UnknownEntity { line, side, name, .. } => {
                assert_eq!((line, side, name.as_str()), (2, 2, "zzz"));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(AnchorSet::parse("a\tx\na\tx\n".as_bytes(), &path, &kg1, &kg2).is_err());
        // many-to-one is allowed
        let m = AnchorSet::parse("a\tx\nb\tx\n".as_bytes(), &path, &kg1, &kg2).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn split_cardinalities() {
        let anchors = AnchorSet::new((0..10).map(|i| (i, i)).collect()).unwrap();
        let (train, test) = anchors.split(0.3, 7).unwrap();
        assert_eq!((train.len(), test.len()), (3, 7));
        let mut all: Vec<_> = train.pairs().iter().chain(test.pairs()).copied().collect();
        all.sort();
        assert_eq!(all, anchors.pairs());
        assert_eq!(anchors.split(0.3, 7).unwrap(), (train, test));
        assert!(anchors.split(0.01, 7).is_err());
        assert!(anchors.split(0.99, 7).is_err());
        assert!(AnchorSet::default().split(0.3, 7).is_err());
    }

    #[test]
    fn split_full_dataset_size() {
        let anchors = AnchorSet::new((0..5058).map(|i| (i, i)).collect()).unwrap();
        let (train, test) = anchors.split(0.3, 1).unwrap();
        assert_eq!((train.len(), test.len()), (1517, 3541));
    }
}
