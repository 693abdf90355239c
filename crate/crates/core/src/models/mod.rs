//! Problem builders: sparse linear regression, corrected (possibly
//! nonconvex) quadratics, sparse logistic regression and low-rank matrix
//! sensing. Mini-batches are always contiguous row blocks.

mod linear;
mod logistic;
mod lowrank;
mod quadratic;

pub use linear::{make_linear_regression, LinearRegression, LinearRegressionData};
pub use logistic::{logistic_loss, make_logistic, misclassification_rate, sigmoid, softplus, GlmData, Logistic};
pub use lowrank::{make_lowrank, LowRank, LowRankData};
pub use quadratic::{
    make_corrupted_quadratic, CorruptedQuadratic, DesignCorrection, QuadraticComponent, QuadraticProblem,
};
