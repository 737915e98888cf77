use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, MaskKind, Precision};
use super::masking::{mask_names, mask_structure};
use crate::encoders::{apply_whitening, encode_structure, fit_whitening, trigram_embeddings, EmbeddingSet};
use crate::error::{Error, Result, StageExt};
use crate::kg::{load_anchors, load_kg, AnchorSet, KnowledgeGraph};
use crate::matching::{evaluate, RankingReport};
use crate::scalar::Scalar;
use crate::training::{
    forward_all, train, AlignmentInputs, GraphSide, ModelDims, ModelParams, SideFeatures, TrainConfig,
};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub anchors: AnchorSet,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let load = || {
        let kg1 = load_kg(cfg.require(&cfg.kg1_facts, "kg1_facts")?, cfg.temporal, cfg.calendar)?;
        let kg2 = load_kg(cfg.require(&cfg.kg2_facts, "kg2_facts")?, cfg.temporal, cfg.calendar)?;
        let anchors = load_anchors(cfg.require(&cfg.anchors, "anchors")?, &kg1, &kg2)?;
        Ok(Dataset { kg1, kg2, anchors })
    };
    load().stage("load")
}

/// Train/test split with the config's fraction and derived seed.
pub fn split(cfg: &ExperimentConfig, anchors: &AnchorSet) -> Result<(AnchorSet, AnchorSet)> {
    anchors.split(cfg.train_fraction, cfg.seeds().split).stage("split")
}

/// Unwhitened name embeddings in entity-ID order: the configured embedding
/// files, or hashed trigrams of the entity names.
pub fn raw_names<T: Scalar>(
    cfg: &ExperimentConfig,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
) -> Result<(EmbeddingSet<T>, EmbeddingSet<T>)> {
    let side = |path: &Option<PathBuf>, kg: &KnowledgeGraph| -> Result<EmbeddingSet<T>> {
        match path {
            Some(p) => {
                let (names, set) = EmbeddingSet::<T>::load_text(p)?;
                EmbeddingSet::reorder_by_names(&names, &set, kg.entity_names())
            }
            None => Ok(trigram_embeddings(kg.entity_names(), cfg.name_hash_dim)),
        }
    };
    let pair = || {
        let (a, b) = (side(&cfg.kg1_names, kg1)?, side(&cfg.kg2_names, kg2)?);
        if a.dim() != b.dim() {
            return Err(Error::DimMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        Ok((a, b))
    };
    pair().stage("names")
}

/// Whiten both sides with one transform fitted on their union (or pass the
/// raw features through when whitening is off).
pub fn whiten_names<T: Scalar>(
    cfg: &ExperimentConfig,
    names1: &EmbeddingSet<T>,
    names2: &EmbeddingSet<T>,
) -> Result<(EmbeddingSet<T>, EmbeddingSet<T>)> {
    if !cfg.whitening {
        return Ok((names1.clone(), names2.clone()));
    }
    let run = || {
        let transform = fit_whitening(&names1.concat_rows(names2)?, cfg.whiten_dim)?;
        Ok((
            apply_whitening(&transform, names1)?,
            apply_whitening(&transform, names2)?,
        ))
    };
    run().stage("whitening")
}

/// Everything the model consumes for one grid point, plus the dims to build it.
#[derive(Clone, Debug)]
pub struct Prepared<T> {
    pub inputs: AlignmentInputs<T>,
    pub dims: ModelDims,
    pub structure_loss: Vec<f64>,
}

/// Encode the enabled components of two (possibly masked) graphs.
pub fn prepare_inputs<T: Scalar>(
    cfg: &ExperimentConfig,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    names: Option<(EmbeddingSet<T>, EmbeddingSet<T>)>,
    train_anchors: &AnchorSet,
) -> Result<Prepared<T>> {
    let c = cfg.components;
    let mut side1 = SideFeatures::default();
    let mut side2 = SideFeatures::default();
    let mut name_in = 0;
    if c.name {
        let (a, b) = names.ok_or_else(|| Error::Config("name component enabled without name features".into()))?;
        name_in = a.dim();
        side1.names = Some(a.into_matrix());
        side2.names = Some(b.into_matrix());
    }
    if c.time {
        side1.months = Some(kg1.active_months().stage("time")?);
        side2.months = Some(kg2.active_months().stage("time")?);
    }
    let mut structure_loss = Vec::new();
    if c.structure {
        let mut walk = cfg.walk.clone();
        walk.seed = cfg.seeds().walk;
        let mut sg = cfg.skipgram.clone();
        sg.seed = cfg.seeds().skipgram;
        let (a, b, loss) = encode_structure::<T>(kg1, kg2, train_anchors, &walk, &sg).stage("structure")?;
        side1.structure = Some(a.into_matrix());
        side2.structure = Some(b.into_matrix());
        structure_loss = loss;
    }
    Ok(Prepared {
        inputs: AlignmentInputs {
            kg1: side1,
            kg2: side2,
            months: cfg.calendar.months,
        },
        dims: ModelDims {
            name_in,
            name_out: cfg.name_out,
            time_k: cfg.time_k,
            time_out: cfg.time_out,
            months: cfg.calendar.months,
            structure_in: cfg.skipgram.dim,
            structure_out: cfg.structure_out,
        },
        structure_loss,
    })
}

pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        seed: cfg.seeds().train,
        ..cfg.train.clone()
    }
}

/// Outcome of one grid point.
#[derive(Clone, Debug)]
pub struct PointResult<T> {
    pub ratio: f64,
    pub reports: Vec<RankingReport>,
    pub train_loss: Vec<f64>,
    pub structure_loss: Vec<f64>,
    pub params: ModelParams<T>,
}

/// Mask (if configured) -> encode -> train -> evaluate, for one ratio.
pub fn run_point<T: Scalar>(
    cfg: &ExperimentConfig,
    data: &Dataset,
    train_anchors: &AnchorSet,
    test_anchors: &AnchorSet,
    ratio: f64,
) -> Result<PointResult<T>> {
    let seeds = cfg.seeds();
    let (kg1, kg2) = if cfg.mask == MaskKind::Structure {
        let m = || {
            Ok((
                mask_structure(&data.kg1, ratio, seeds.mask)?,
                mask_structure(&data.kg2, ratio, seeds.mask.wrapping_add(1))?,
            ))
        };
        m().stage("mask")?
    } else {
        (data.kg1.clone(), data.kg2.clone())
    };
    let names = if cfg.components.name {
        let (mut n1, mut n2) = raw_names::<T>(cfg, &kg1, &kg2)?;
        if cfg.mask == MaskKind::Name {
            n1 = mask_names(&n1, ratio, seeds.mask).stage("mask")?.0;
            n2 = mask_names(&n2, ratio, seeds.mask.wrapping_add(1)).stage("mask")?.0;
        }
        Some(whiten_names(cfg, &n1, &n2)?)
    } else {
        None
    };
    let prepared = prepare_inputs(cfg, &kg1, &kg2, names, train_anchors)?;
    let model = ModelParams::init(&prepared.dims, cfg.components, seeds.init).stage("init")?;
    let out = train(model, &prepared.inputs, train_anchors.pairs(), &train_config(cfg)).stage("train")?;
    let reports = evaluate_model(cfg, &out.params, &prepared.inputs, test_anchors)?;
    Ok(PointResult {
        ratio,
        reports,
        train_loss: out.epoch_loss,
        structure_loss: prepared.structure_loss,
        params: out.params,
    })
}

pub fn evaluate_model<T: Scalar>(
    cfg: &ExperimentConfig,
    params: &ModelParams<T>,
    inputs: &AlignmentInputs<T>,
    test_anchors: &AnchorSet,
) -> Result<Vec<RankingReport>> {
    let run = || {
        let h1 = forward_all(params, inputs, GraphSide::Kg1)?;
        let h2 = forward_all(params, inputs, GraphSide::Kg2)?;
        evaluate(&h1, &h2, test_anchors.pairs(), &cfg.eval)
    };
    run().stage("evaluate")
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn report_csv(reports: &[RankingReport]) -> String {
    let mut s = String::new();
    if let Some(first) = reports.first() {
        let _ = writeln!(s, "{}", first.csv_header());
    }
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// `direction,source,target,rank`, one row per test pair and direction.
pub fn ranks_csv(
    reports: &[RankingReport],
    test: &AnchorSet,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(["direction", "source", "target", "rank"]).map_err(err)?;
    for r in reports {
        let reverse = r.direction == "kg2->kg1";
        for (&(a, b), rank) in test.pairs().iter().zip(&r.ranks) {
            let (s, t) = if reverse {
                (kg2.entity_name(b), kg1.entity_name(a))
            } else {
                (kg1.entity_name(a), kg2.entity_name(b))
            };
            w.write_record([r.direction.as_str(), s, t, &rank.to_string()])
                .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn loss_csv(train_loss: &[f64], structure_loss: &[f64]) -> String {
    let mut s = "stage,epoch,loss\n".to_string();
    for (i, l) in structure_loss.iter().enumerate() {
        let _ = writeln!(s, "skipgram,{i},{l}");
    }
    for (i, l) in train_loss.iter().enumerate() {
        let _ = writeln!(s, "train,{i},{l}");
    }
    s
}

/// One row per grid point from the first evaluation direction.
pub fn grid_csv<T>(cfg: &ExperimentConfig, points: &[PointResult<T>]) -> String {
    let mut s = "ratio".to_string();
    for k in &cfg.eval.hits {
        let _ = write!(s, ",hits@{k}");
    }
    s.push_str(",mrr\n");
    for p in points {
        let r = &p.reports[0];
        let _ = write!(s, "{}", p.ratio);
        for (_, h) in &r.hits {
            let _ = write!(s, ",{h}");
        }
        let _ = writeln!(s, ",{}", r.mrr);
    }
    s
}

/// Directory of one grid point's report files.
pub fn point_dir(cfg: &ExperimentConfig, ratio: f64) -> PathBuf {
    match cfg.mask {
        MaskKind::None => cfg.output_dir.clone(),
        MaskKind::Structure => cfg.output_dir.join(format!("structure-{ratio}")),
        MaskKind::Name => cfg.output_dir.join(format!("name-{ratio}")),
    }
}

/// Run every grid point and write `report.csv`, `ranks.csv`, `loss.csv` and
/// `config.resolved` per point, plus `grid.csv` across points.
pub fn run_pipeline<T: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<PointResult<T>>> {
    cfg.validate().stage("config")?;
    let data = load_dataset(cfg)?;
    let (train_anchors, test_anchors) = split(cfg, &data.anchors)?;
    let mut points = Vec::with_capacity(cfg.mask_ratios.len());
    for &ratio in &cfg.mask_ratios {
        let point = run_point::<T>(cfg, &data, &train_anchors, &test_anchors, ratio)?;
        let dir = point_dir(cfg, ratio);
        let files = || {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write(&dir.join("report.csv"), &report_csv(&point.reports))?;
            write(
                &dir.join("ranks.csv"),
                &ranks_csv(&point.reports, &test_anchors, &data.kg1, &data.kg2)?,
            )?;
            write(
                &dir.join("loss.csv"),
                &loss_csv(&point.train_loss, &point.structure_loss),
            )?;
            let mut resolved = cfg.resolved();
            let _ = writeln!(resolved, "# point.ratio = {ratio}");
            write(&dir.join("config.resolved"), &resolved)
        };
        files().stage("report")?;
        points.push(point);
    }
    let dir = &cfg.output_dir;
    let grid = || {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(&dir.join("grid.csv"), &grid_csv(cfg, &points))
    };
    grid().stage("report")?;
    Ok(points)
}

/// Headline metrics of one point, independent of the scalar type.
#[derive(Clone, Debug)]
pub struct PointSummary {
    pub ratio: f64,
    pub reports: Vec<RankingReport>,
    pub train_loss: Vec<f64>,
}

/// [`run_pipeline`] at the configured precision.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PointSummary>> {
    fn summarize<T>(points: Vec<PointResult<T>>) -> Vec<PointSummary> {
        points
            .into_iter()
            .map(|p| PointSummary {
                ratio: p.ratio,
                reports: p.reports,
                train_loss: p.train_loss,
            })
            .collect()
    }
    Ok(match cfg.precision {
        Precision::F32 => summarize(run_pipeline::<f32>(cfg)?),
        Precision::F64 => summarize(run_pipeline::<f64>(cfg)?),
    })
}
