//! Valuation of position sequences on a square board.
//!
//! A [`ValuationModel`] is built from a *special* sequence. Each operator of
//! a randomly sampled pool maps windows of the sequence to reals through
//! convolution, difference/quotient steps and a real projection. Bins taken
//! from a long uniform *general* sequence turn every operator into a
//! histogram, and a candidate continuation is scored by how much more often
//! its feature values fall where the special sequence's values fall than
//! where the general sequence's do.
//!
//! ```
//! use seqval_core::{ModelConfig, PositionSequence, ValuationModel};
//!
//! let cfg = ModelConfig::default();
//! let diagonal = PositionSequence::parse("A1 B2 C3 D4 E5 F6", cfg.general.board).unwrap();
//! let model = ValuationModel::build(diagonal.clone(), &cfg).unwrap();
//! let ranking = model.rank_continuations(&diagonal).unwrap();
//! assert_eq!(ranking[0].position.to_string(), "G7");
//! ```

pub mod board;
pub mod experiments;
pub mod featurebank;
pub mod transform;
pub mod valuation;

pub use board::{
    parse_position, render_board, BoardConfig, BoardError, Position, PositionSequence,
};
pub use experiments::{
    ExperimentError, ExperimentReport, FeatureSetChoice, RegularPattern, SeedSet,
};
pub use featurebank::{
    FeatureBank, FeatureError, FeatureTable, GeneralSequenceConfig, PoolConfig, ScoringMode,
};
pub use transform::{OperatorSpec, Projection, TransformChain};
pub use valuation::{ModelConfig, ModelDump, RankedContinuation, ValuationError, ValuationModel};
