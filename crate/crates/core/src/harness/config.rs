//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::encoders::{RandomWalkConfig, SkipGramConfig};
use crate::error::{Error, Result};
use crate::kg::CalendarConfig;
use crate::matching::{CandidatePool, EvalConfig};
use crate::training::{Components, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    None,
    Structure,
    Name,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// Every accepted key, in the order `config.resolved` lists them.
pub const KEYS: &[&str] = &[
    "kg1_facts",
    "kg2_facts",
    "anchors",
    "kg1_names",
    "kg2_names",
    "temporal",
    "calendar_base_year",
    "calendar_months",
    "name_hash_dim",
    "use_name",
    "use_time",
    "use_structure",
    "whitening",
    "whiten_dim",
    "name_out",
    "time_k",
    "time_out",
    "structure_out",
    "walk_beta",
    "walks_per_node",
    "walk_length",
    "sg_dim",
    "sg_window",
    "sg_negatives",
    "sg_epochs",
    "sg_lr",
    "margin",
    "negatives",
    "epochs",
    "lr",
    "batch_size",
    "train_fraction",
    "csls_k",
    "hits",
    "candidates",
    "reverse",
    "mask",
    "mask_ratios",
    "seed",
    "output_dir",
    "precision",
];

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kg1_facts: Option<PathBuf>,
    pub kg2_facts: Option<PathBuf>,
    pub anchors: Option<PathBuf>,
    /// Pretrained name embeddings; hashed trigrams are used when absent.
    pub kg1_names: Option<PathBuf>,
    pub kg2_names: Option<PathBuf>,
    pub temporal: bool,
    pub calendar: CalendarConfig,
    pub name_hash_dim: usize,
    pub components: Components,
    pub whitening: bool,
    pub whiten_dim: usize,
    pub name_out: usize,
    pub time_k: usize,
    pub time_out: usize,
    pub structure_out: usize,
    pub walk: RandomWalkConfig,
    pub skipgram: SkipGramConfig,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub eval: EvalConfig,
    pub mask: MaskKind,
    pub mask_ratios: Vec<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub precision: Precision,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kg1_facts: None,
            kg2_facts: None,
            anchors: None,
            kg1_names: None,
            kg2_names: None,
            temporal: true,
            calendar: CalendarConfig::default(),
            name_hash_dim: crate::encoders::DEFAULT_TRIGRAM_DIM,
            components: Components::NAME_TIME,
            whitening: true,
            whiten_dim: 64,
            name_out: 64,
            time_k: 31,
            time_out: 64,
            structure_out: 64,
            walk: RandomWalkConfig::default(),
            skipgram: SkipGramConfig::default(),
            train: TrainConfig::default(),
            train_fraction: 0.3,
            eval: EvalConfig::default(),
            mask: MaskKind::None,
            mask_ratios: vec![0.0],
            seed: 0,
            output_dir: PathBuf::from("out"),
            precision: Precision::F64,
        }
    }
}

/// Seeds of the individual stages, all derived from the master seed so one
/// number pins a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub split: u64,
    pub mask: u64,
    pub init: u64,
    pub train: u64,
    pub walk: u64,
    pub skipgram: u64,
}

/// splitmix64 finalizer over `seed + stage`.
fn derive(seed: u64, stage: u64) -> u64 {
    let mut z = seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            split: derive(seed, 1),
            mask: derive(seed, 2),
            init: derive(seed, 3),
            train: derive(seed, 4),
            walk: derive(seed, 5),
            skipgram: derive(seed, 6),
        }
    }
}

fn parse_num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_list<V: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<V>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn list<V: std::fmt::Display>(v: &[V]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment line. Relative paths
    /// resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            cfg.set(k.trim(), v.trim(), base_dir)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Apply one `key=value` override (as from `--set key=value`).
    pub fn set_pair(&mut self, pair: &str, base_dir: &Path) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim(), base_dir)
    }

    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let path = || (!value.is_empty()).then(|| base_dir.join(value));
        match key {
            "kg1_facts" => self.kg1_facts = path(),
            "kg2_facts" => self.kg2_facts = path(),
            "anchors" => self.anchors = path(),
            "kg1_names" => self.kg1_names = path(),
            "kg2_names" => self.kg2_names = path(),
            "temporal" => self.temporal = parse_bool(key, value)?,
            "calendar_base_year" => self.calendar = CalendarConfig::new(parse_num(key, value)?, self.calendar.months)?,
            "calendar_months" => self.calendar = CalendarConfig::new(self.calendar.base_year, parse_num(key, value)?)?,
            "name_hash_dim" => self.name_hash_dim = parse_num(key, value)?,
            "use_name" => self.components.name = parse_bool(key, value)?,
            "use_time" => self.components.time = parse_bool(key, value)?,
            "use_structure" => self.components.structure = parse_bool(key, value)?,
            "whitening" => self.whitening = parse_bool(key, value)?,
            "whiten_dim" => self.whiten_dim = parse_num(key, value)?,
            "name_out" => self.name_out = parse_num(key, value)?,
            "time_k" => self.time_k = parse_num(key, value)?,
            "time_out" => self.time_out = parse_num(key, value)?,
            "structure_out" => self.structure_out = parse_num(key, value)?,
            "walk_beta" => self.walk.beta = parse_num(key, value)?,
            "walks_per_node" => self.walk.walks_per_node = parse_num(key, value)?,
            "walk_length" => self.walk.walk_length = parse_num(key, value)?,
            "sg_dim" => self.skipgram.dim = parse_num(key, value)?,
            "sg_window" => self.skipgram.window = parse_num(key, value)?,
            "sg_negatives" => self.skipgram.negatives = parse_num(key, value)?,
            "sg_epochs" => self.skipgram.epochs = parse_num(key, value)?,
            "sg_lr" => self.skipgram.learning_rate = parse_num(key, value)?,
            "margin" => self.train.margin = parse_num(key, value)?,
            "negatives" => self.train.negatives = parse_num(key, value)?,
            "epochs" => self.train.epochs = parse_num(key, value)?,
            "lr" => self.train.learning_rate = parse_num(key, value)?,
            "batch_size" => self.train.batch_size = parse_num(key, value)?,
            "train_fraction" => self.train_fraction = parse_num(key, value)?,
            "csls_k" => self.eval.csls_k = parse_num(key, value)?,
            "hits" => self.eval.hits = parse_list(key, value)?,
            "candidates" => {
                self.eval.candidates = match value {
                    "test" => CandidatePool::TestOnly,
                    "all" => CandidatePool::AllEntities,
                    _ => return Err(Error::Config(format!("candidates: expected test|all, got {value:?}"))),
                }
            }
            "reverse" => self.eval.reverse = parse_bool(key, value)?,
            "mask" => {
                self.mask = match value {
                    "none" => MaskKind::None,
                    "structure" => MaskKind::Structure,
                    "name" => MaskKind::Name,
                    _ => {
                        return Err(Error::Config(format!(
                            "mask: expected none|structure|name, got {value:?}"
                        )))
                    }
                }
            }
            "mask_ratios" => self.mask_ratios = parse_list(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "output_dir" => self.output_dir = base_dir.join(value),
            "precision" => {
                self.precision = match value {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(Error::Config(format!("precision: expected f32|f64, got {value:?}"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::from_master(self.seed)
    }

    /// Check value ranges that do not need the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.components.any() {
            return bad("no component enabled (use_name, use_time, use_structure are all false)".into());
        }
        if self.components.time && !self.temporal {
            return bad("use_time requires temporal = true".into());
        }
        if self.mask_ratios.is_empty() {
            return bad("mask_ratios is empty".into());
        }
        if let Some(r) = self.mask_ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("mask ratio {r} outside [0, 1]"));
        }
        if self.mask == MaskKind::None && self.mask_ratios.iter().any(|&r| r != 0.0) {
            return bad("mask_ratios given but mask = none".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if !(self.walk.beta > 0.0 && self.walk.beta < 1.0) {
            return bad(format!("walk_beta {} outside (0, 1)", self.walk.beta));
        }
        if self.eval.hits.is_empty() || self.eval.hits.contains(&0) || self.eval.csls_k == 0 {
            return bad("hits must be a non-empty list of positive integers and csls_k positive".into());
        }
        if self.time_k == 0 {
            return bad("time_k must be at least 1".into());
        }
        let dims = [
            self.name_hash_dim,
            self.whiten_dim,
            self.name_out,
            self.time_out,
            self.structure_out,
            self.skipgram.dim,
        ];
        if dims.contains(&0) {
            return bad("dimensions must be positive".into());
        }
        Ok(())
    }

    fn value(&self, key: &str) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        match key {
            "kg1_facts" => p(&self.kg1_facts),
            "kg2_facts" => p(&self.kg2_facts),
            "anchors" => p(&self.anchors),
            "kg1_names" => p(&self.kg1_names),
            "kg2_names" => p(&self.kg2_names),
            "temporal" => self.temporal.to_string(),
            "calendar_base_year" => self.calendar.base_year.to_string(),
            "calendar_months" => self.calendar.months.to_string(),
            "name_hash_dim" => self.name_hash_dim.to_string(),
            "use_name" => self.components.name.to_string(),
            "use_time" => self.components.time.to_string(),
            "use_structure" => self.components.structure.to_string(),
            "whitening" => self.whitening.to_string(),
            "whiten_dim" => self.whiten_dim.to_string(),
            "name_out" => self.name_out.to_string(),
            "time_k" => self.time_k.to_string(),
            "time_out" => self.time_out.to_string(),
            "structure_out" => self.structure_out.to_string(),
            "walk_beta" => self.walk.beta.to_string(),
            "walks_per_node" => self.walk.walks_per_node.to_string(),
            "walk_length" => self.walk.walk_length.to_string(),
            "sg_dim" => self.skipgram.dim.to_string(),
            "sg_window" => self.skipgram.window.to_string(),
            "sg_negatives" => self.skipgram.negatives.to_string(),
            "sg_epochs" => self.skipgram.epochs.to_string(),
            "sg_lr" => self.skipgram.learning_rate.to_string(),
            "margin" => self.train.margin.to_string(),
            "negatives" => self.train.negatives.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "lr" => self.train.learning_rate.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "train_fraction" => self.train_fraction.to_string(),
            "csls_k" => self.eval.csls_k.to_string(),
            "hits" => list(&self.eval.hits),
            "candidates" => match self.eval.candidates {
                CandidatePool::TestOnly => "test".into(),
                CandidatePool::AllEntities => "all".into(),
            },
            "reverse" => self.eval.reverse.to_string(),
            "mask" => match self.mask {
                MaskKind::None => "none".into(),
                MaskKind::Structure => "structure".into(),
                MaskKind::Name => "name".into(),
            },
            "mask_ratios" => list(&self.mask_ratios),
            "seed" => self.seed.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "precision" => match self.precision {
                Precision::F32 => "f32".into(),
                Precision::F64 => "f64".into(),
            },
            _ => unreachable!("{key} is listed in KEYS"),
        }
    }

    /// Every key with its effective value, followed by the derived stage
    /// seeds as comments. Parses back to an equivalent config.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value(key));
        }
        let seeds = self.seeds();
        let _ = writeln!(s, "# seed.split = {}", seeds.split);
        let _ = writeln!(s, "# seed.mask = {}", seeds.mask);
        let _ = writeln!(s, "# seed.init = {}", seeds.init);
        let _ = writeln!(s, "# seed.train = {}", seeds.train);
        let _ = writeln!(s, "# seed.walk = {}", seeds.walk);
        let _ = writeln!(s, "# seed.skipgram = {}", seeds.skipgram);
        s
    }

    pub(crate) fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let cfg = ExperimentConfig::parse(
            "# comment\nkg1_facts = a.tsv\nuse_structure = true\nhits = 1, 5\nmask = name\nmask_ratios = 0,0.5\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.kg1_facts.as_deref(), Some(Path::new("/data/a.tsv")));
        assert!(cfg.components.structure);
        assert_eq!(cfg.eval.hits, vec![1, 5]);
        assert_eq!(cfg.mask_ratios, vec![0.0, 0.5]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::parse("lerning_rate = 0.1\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("lerning_rate"));
    }

    #[test]
    fn all_components_off_fails_validation() {
        let cfg = ExperimentConfig {
            components: Components {
                name: false,
                time: false,
                structure: false,
            },
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ratios_checked() {
        let mut cfg = ExperimentConfig {
            mask: MaskKind::Structure,
            mask_ratios: vec![0.0, 1.5],
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.mask_ratios.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn resolved_roundtrips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set_pair("kg1_facts=/x/k1.tsv", Path::new("/")).unwrap();
        cfg.set_pair("lr=0.01", Path::new("/")).unwrap();
        cfg.set_pair("output_dir=/runs/a", Path::new("/")).unwrap();
        cfg.seed = 17;
        let text = cfg.resolved();
        let back = ExperimentConfig::parse(&text, Path::new("/")).unwrap();
        assert_eq!(back.resolved(), text);
        assert!(text.contains("# seed.train = "));
    }

    #[test]
    fn stage_seeds_differ() {
        let s = Seeds::from_master(0);
        let all = [s.split, s.mask, s.init, s.train, s.walk, s.skipgram];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}
