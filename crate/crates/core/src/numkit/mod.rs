//! Deterministic numerical substrate: dense vectors, layer norm, seeded
//! randomness, rank statistics and a small logistic-regression solver.

mod linalg;
mod logistic;
mod rng;
mod stats;

pub use linalg::{cosine_sim, l2_distance, layer_norm, Matrix, Vector, LN_EPS};
pub use logistic::{logistic_fit, LogisticModel, LogisticOptions};
pub use rng::{split_seed, Rng, RNG_ALGORITHM};
pub use stats::{
    mann_whitney_u, midranks, pearson, roc_auc, spearman_rho, spearman_test, MannWhitney,
    EXACT_MW_LIMIT,
};
