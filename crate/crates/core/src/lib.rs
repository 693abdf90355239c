//! Sparse learning under a cardinality constraint `‖θ‖₀ ≤ k` with hard
//! thresholding solvers, including stochastic variance-reduced (SVRG-HT,
//! SAGA-HT) and asynchronous lock-free (ASVRG-HT) variants.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the scalar for common use.

pub mod async_solver;
pub mod datagen;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod objective;
pub mod solvers;
pub mod threshold;
pub mod verify;

mod error;
mod param;
mod scalar;

pub use error::{HtError, Result};
pub use objective::{component_gradient, full_gradient, objective_value, vr_gradient, Objective, SnapshotState};
pub use param::{Parameter, Shape};
pub use scalar::{AtomicReal, Real};
pub use solvers::{
    fg_ht, prox_svrg, saga_ht, sg_ht, svrg_ht, Checkpoint, IterateTrace, Sampling, SnapshotRule, SolverConfig,
    StopReason,
};
pub use threshold::{hard_threshold, l2_ball_project, soft_threshold, svt, ThresholdSpec};

pub type Parameter64 = Parameter<f64>;
pub type Parameter32 = Parameter<f32>;
pub type Trace64 = IterateTrace<f64>;
pub type Trace32 = IterateTrace<f32>;
pub type LinearRegression64 = models::LinearRegression<f64>;
pub type Logistic64 = models::Logistic<f64>;
pub type LowRank64 = models::LowRank<f64>;
pub type CorruptedQuadratic64 = models::CorruptedQuadratic<f64>;
