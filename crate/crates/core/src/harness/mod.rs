//! Experiment orchestration: config files, masking sweeps and the end-to-end
//! pipeline that writes report directories.

mod config;
mod masking;
mod pipeline;

pub use config::{ExperimentConfig, MaskKind, Precision, Seeds, KEYS};
pub use masking::{mask_names, mask_structure};
pub use pipeline::{
    evaluate_model, grid_csv, load_dataset, loss_csv, point_dir, prepare_inputs, ranks_csv, raw_names, report_csv,
    run_experiment, run_pipeline, run_point, split, train_config, whiten_names, Dataset, PointResult, PointSummary,
    Prepared,
};
