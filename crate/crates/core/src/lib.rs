//! Online regression with square loss: relaxation-based forecasters, regret
//! accounting, sequential complexity measures and lower-bound adversaries.

pub mod adversary;
pub mod class;
pub mod complexity;
pub mod error;
pub mod exec;
pub mod forecasters;
pub mod numerics;
pub mod protocol;
pub mod report;
pub mod tree;

pub use class::{ClassFile, FunctionClass};
pub use error::{Error, Result};
pub use exec::Execution;
pub use protocol::{
    alpha_regret, optimistic_conversion, regret, run_game, Comparator, Environment, Forecaster,
    GameConfig, Round, Transcript,
};
pub use tree::{CovariateTree, LabeledTree, RealTree};
