//! Correlation and information metrics, reconstruction precision and the
//! random-subset L1 baseline.

mod bourgain;
mod correlation;
mod mi;
mod reconstruction;
mod report;

pub use bourgain::{
    bourgain_dimension, bourgain_embed, bourgain_embed_with_dimension, bourgain_report,
    BourgainEmbedding, BourgainReport,
};
pub use correlation::{average_ranks, pearson, spearman};
pub use mi::{mutual_information_knn, JITTER_SCALE};
pub use reconstruction::{reconstruction_precision, Direction};
pub use report::{
    evaluate_model, evaluate_values, pair_values, write_pair_values_csv, EvalOptions, EvalReport,
    PairSource, PairValues, DEFAULT_BOOTSTRAP, DEFAULT_K_NEIGHBORS, MI_SUBSAMPLE_ABOVE,
    MI_SUBSAMPLE_SIZE,
};
