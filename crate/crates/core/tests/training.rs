use hhea_core::harness::{prepare_inputs, raw_names, whiten_names, ExperimentConfig};
use hhea_core::kg::{AnchorSet, CalendarConfig};
use hhea_core::synthetic::{toy_alignment, ToyConfig};
use hhea_core::training::{forward_all, train, Components, GraphSide, ModelParams, TrainConfig};
use hhea_core::{Inputs, Model};

/// Ten identically named pairs among 20 entities per side, plus the config
/// and inputs for the requested components.
fn toy(components: Components) -> (Inputs, Model, AnchorSet) {
    let ds = toy_alignment(&ToyConfig {
        shared: 10,
        only1: 10,
        only2: 10,
        name_noise: 0.0,
        seed: 3,
        ..ToyConfig::default()
    });
    let cfg = ExperimentConfig {
        components,
        whiten_dim: 16,
        calendar: CalendarConfig::new(1995, 48).unwrap(),
        ..ExperimentConfig::default()
    };
    let names = if components.name {
        let (a, b) = raw_names(&cfg, &ds.kg1, &ds.kg2).unwrap();
        Some(whiten_names(&cfg, &a, &b).unwrap())
    } else {
        None
    };
    let p = prepare_inputs::<f64>(&cfg, &ds.kg1, &ds.kg2, names, &ds.anchors).unwrap();
    let model = ModelParams::init(&p.dims, components, 5).unwrap();
    (p.inputs, model, ds.anchors)
}

fn config() -> TrainConfig {
    TrainConfig {
        negatives: 10,
        epochs: 30,
        learning_rate: 0.01,
        batch_size: 4,
        seed: 8,
        ..TrainConfig::default()
    }
}

#[test]
fn loss_falls_on_an_informative_toy() {
    let (inputs, model, anchors) = toy(Components::NAME_TIME);
    let out = train(model, &inputs, anchors.pairs(), &config()).unwrap();
    let loss = &out.epoch_loss;
    assert_eq!(loss.len(), 30);
    assert!(loss.last().unwrap() < loss.first().unwrap(), "{loss:?}");
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let (inputs, model, anchors) = toy(Components::NAME_TIME);
    let cfg = TrainConfig {
        learning_rate: 0.0,
        ..config()
    };
    let out = train(model.clone(), &inputs, anchors.pairs(), &cfg).unwrap();
    assert_eq!(out.params, model);
}

#[test]
fn same_seed_same_trajectory() {
    let (inputs, model, anchors) = toy(Components::NAME_TIME);
    let a = train(model.clone(), &inputs, anchors.pairs(), &config()).unwrap();
    let b = train(model.clone(), &inputs, anchors.pairs(), &config()).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(
        a.epoch_loss.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        b.epoch_loss.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    );
    // a prefix of the same run is the same run
    let short = TrainConfig { epochs: 10, ..config() };
    let c = train(model, &inputs, anchors.pairs(), &short).unwrap();
    assert_eq!(c.epoch_loss[..], a.epoch_loss[..10]);
}

#[test]
fn without_time_nothing_temporal_is_trained_or_emitted() {
    let name_only = Components {
        name: true,
        time: false,
        structure: false,
    };
    let (inputs, model, anchors) = toy(name_only);
    assert!(model.time.is_none());
    let out = train(model, &inputs, anchors.pairs(), &config()).unwrap();
    assert!(out.params.time.is_none());
    let w = out.params.name.as_ref().unwrap();
    let h = forward_all(&out.params, &inputs, GraphSide::Kg1).unwrap();
    assert_eq!(h.ncols(), w.ncols());
    // the fused embedding is exactly the name projection
    let expected = inputs.kg1.names.as_ref().unwrap().dot(w);
    assert!(h.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn full_model_emits_both_blocks() {
    let (inputs, model, anchors) = toy(Components::NAME_TIME);
    let out = train(model, &inputs, anchors.pairs(), &config()).unwrap();
    let h = forward_all(&out.params, &inputs, GraphSide::Kg2).unwrap();
    assert_eq!(h.ncols(), out.params.output_dim());
    assert_eq!(
        out.params.output_dim(),
        out.params.name.as_ref().unwrap().ncols() + out.params.time.as_ref().unwrap().weight.ncols()
    );
}

#[test]
fn single_precision_trains_too() {
    let ds = toy_alignment(&ToyConfig {
        name_noise: 0.0,
        ..ToyConfig::default()
    });
    let cfg = ExperimentConfig {
        whiten_dim: 8,
        ..ExperimentConfig::default()
    };
    let (a, b) = raw_names::<f32>(&cfg, &ds.kg1, &ds.kg2).unwrap();
    let names = whiten_names(&cfg, &a, &b).unwrap();
    let p = prepare_inputs::<f32>(&cfg, &ds.kg1, &ds.kg2, Some(names), &ds.anchors).unwrap();
    let model = ModelParams::<f32>::init(&p.dims, cfg.components, 1).unwrap();
    let out = train(model, &p.inputs, ds.anchors.pairs(), &config()).unwrap();
    assert!(out.params.is_finite());
    assert!(out.epoch_loss.last().unwrap() < out.epoch_loss.first().unwrap());
}
