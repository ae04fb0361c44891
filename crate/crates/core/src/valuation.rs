//! Valuation models built from a special sequence, and their uses:
//! prolongation values, continuation rankings, similarity values,
//! iterative continuation and memory reconstruction.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{BoardConfig, BoardError, Position, PositionSequence};
use crate::featurebank::{
    estimate_probs, score, FeatureBank, FeatureError, FeatureTable, GeneralSequenceConfig,
    GeneralTable, PoolConfig,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValuationError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error("sequence too short: no operator applies to a sequence of length {0}")]
    TooShort(usize),
    #[error("sequence is on a {found}x{found} board, model expects {expected}x{expected}")]
    BoardMismatch { expected: usize, found: usize },
    #[error("prefix length {prefix} must lie in 1..{len}")]
    InvalidPrefix { prefix: usize, len: usize },
    #[error("malformed model dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub general: GeneralSequenceConfig,
    pub pool: PoolConfig,
}

impl ModelConfig {
    pub fn with_board(board: BoardConfig) -> Self {
        let mut cfg = Self::default();
        cfg.general.board = board;
        cfg
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        self.pool.validate()?;
        self.general.validate(self.pool.bins_k)
    }

    pub fn build_bank(&self) -> Result<Arc<FeatureBank>, FeatureError> {
        FeatureBank::build(self.general, self.pool.clone()).map(Arc::new)
    }
}

/// Bank plus the special sequence's bin probabilities, over plain complex
/// points. Nothing here knows about board edges, so it also values
/// sequences anywhere in the plane.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    bank: Arc<FeatureBank>,
    special_len: usize,
    p_s: Vec<Vec<f64>>,
}

impl FeatureModel {
    pub fn new(bank: Arc<FeatureBank>, special: &[Complex64]) -> Self {
        let p_s = bank
            .tables()
            .iter()
            .map(|t| estimate_probs(&t.op.apply(special), &t.bins))
            .collect();
        Self {
            bank,
            special_len: special.len(),
            p_s,
        }
    }

    pub fn bank(&self) -> &Arc<FeatureBank> {
        &self.bank
    }

    pub fn special_probs(&self) -> &[Vec<f64>] {
        &self.p_s
    }

    fn score_value(&self, i: usize, table: &GeneralTable, value: f64) -> f64 {
        let bin = table.bins.index_of(value);
        let cfg = self.bank.pool_config();
        score(self.p_s[i][bin], table.p_g[bin], cfg.epsilon, cfg.scoring)
    }

    /// Operators fed by the special sequence and by `len` points.
    fn applicable(&self, len: usize) -> impl Iterator<Item = (usize, &GeneralTable)> + '_ {
        let limit = len.min(self.special_len);
        self.bank
            .tables()
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.op.min_length() <= limit)
    }

    /// Mean score of every operator on the shortest tail window it accepts.
    pub fn prolongation_value(&self, points: &[Complex64]) -> Result<f64, ValuationError> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, t) in self.applicable(points.len()) {
            let v = t.op.apply_tail(points).expect("applicable");
            sum += self.score_value(i, t, v);
            count += 1;
        }
        if count == 0 {
            return Err(ValuationError::TooShort(points.len()));
        }
        Ok(sum / count as f64)
    }

    /// Mean score over every operator and every window it accepts.
    pub fn similarity_value(&self, points: &[Complex64]) -> Result<f64, ValuationError> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, t) in self.applicable(points.len()) {
            for v in t.op.apply(points) {
                sum += self.score_value(i, t, v);
                count += 1;
            }
        }
        if count == 0 {
            return Err(ValuationError::TooShort(points.len()));
        }
        Ok(sum / count as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedContinuation {
    pub position: Position,
    pub value: f64,
    pub rank: usize,
}

/// A feature model tied to a special sequence on a board. Immutable.
#[derive(Debug, Clone)]
pub struct ValuationModel {
    special: PositionSequence,
    features: FeatureModel,
}

impl ValuationModel {
    pub fn build(special: PositionSequence, cfg: &ModelConfig) -> Result<Self, ValuationError> {
        Self::check_special(&special, cfg.general.board)?;
        let bank = cfg.build_bank()?;
        Self::with_bank(bank, special)
    }

    /// Builds on an existing bank, which may be shared between models.
    pub fn with_bank(
        bank: Arc<FeatureBank>,
        special: PositionSequence,
    ) -> Result<Self, ValuationError> {
        Self::check_special(&special, bank.board())?;
        let features = FeatureModel::new(bank, &special.to_complex());
        Ok(Self { special, features })
    }

    fn check_special(special: &PositionSequence, board: BoardConfig) -> Result<(), ValuationError> {
        if special.board() != board {
            return Err(ValuationError::BoardMismatch {
                expected: board.size(),
                found: special.board().size(),
            });
        }
        if special.len() < 2 {
            return Err(ValuationError::TooShort(special.len()));
        }
        Ok(())
    }

    pub fn special(&self) -> &PositionSequence {
        &self.special
    }

    pub fn bank(&self) -> &Arc<FeatureBank> {
        self.features.bank()
    }

    pub fn features(&self) -> &FeatureModel {
        &self.features
    }

    pub fn board(&self) -> BoardConfig {
        self.special.board()
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            general: *self.bank().general_config(),
            pool: self.bank().pool_config().clone(),
        }
    }

    pub fn tables(&self) -> Vec<FeatureTable> {
        self.bank()
            .tables()
            .iter()
            .zip(self.features.special_probs())
            .map(|(t, p_s)| FeatureTable {
                op: t.op,
                bins: t.bins.clone(),
                p_g: t.p_g.clone(),
                p_s: p_s.clone(),
            })
            .collect()
    }

    fn check_board(&self, seq: &PositionSequence) -> Result<(), ValuationError> {
        if seq.board() != self.board() {
            return Err(ValuationError::BoardMismatch {
                expected: self.board().size(),
                found: seq.board().size(),
            });
        }
        Ok(())
    }

    /// Value of the last position of `prolonged` as a continuation of
    /// everything before it. Only the tail is read.
    pub fn value_prolongation(&self, prolonged: &PositionSequence) -> Result<f64, ValuationError> {
        self.check_board(prolonged)?;
        self.features.prolongation_value(&prolonged.to_complex())
    }

    /// Values of `base + f` for every field `f`, in `(col, row)` order.
    fn candidate_values(
        &self,
        base: &PositionSequence,
    ) -> Result<Vec<(Position, f64)>, ValuationError> {
        self.check_board(base)?;
        let mut points = base.to_complex();
        points.push(Complex64::new(0.0, 0.0));
        let last = points.len() - 1;
        // indexed collect keeps (col, row) order whatever the scheduling
        let fields: Vec<Position> = self.board().fields().collect();
        fields
            .par_iter()
            .map_with(points, |points, &f| {
                points[last] = f.to_complex();
                self.features.prolongation_value(points).map(|v| (f, v))
            })
            .collect()
    }

    /// All `n²` continuations, best first; ties go to the smaller `(col, row)`.
    pub fn rank_continuations(
        &self,
        base: &PositionSequence,
    ) -> Result<Vec<RankedContinuation>, ValuationError> {
        let mut values = self.candidate_values(base)?;
        // fields() is already (col, row) ascending and the sort is stable
        values.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(values
            .into_iter()
            .enumerate()
            .map(|(i, (position, value))| RankedContinuation {
                position,
                value,
                rank: i + 1,
            })
            .collect())
    }

    pub fn best_continuation(
        &self,
        base: &PositionSequence,
    ) -> Result<(Position, f64), ValuationError> {
        let values = self.candidate_values(base)?;
        let mut best = values[0];
        for &(p, v) in &values[1..] {
            if v > best.1 {
                best = (p, v);
            }
        }
        Ok(best)
    }

    /// Rank of `field` with ties shared out evenly: one plus the number of
    /// strictly better fields plus half the number of other equal fields.
    /// Without any applicable operator every field ties, giving `(n²+1)/2`.
    pub fn tie_averaged_rank(
        &self,
        base: &PositionSequence,
        field: Position,
    ) -> Result<f64, ValuationError> {
        let values = match self.candidate_values(base) {
            Ok(v) => v,
            Err(ValuationError::TooShort(_)) => {
                return Ok((self.board().field_count() as f64 + 1.0) / 2.0);
            }
            Err(e) => return Err(e),
        };
        let target = values
            .iter()
            .find(|(p, _)| *p == field)
            .map(|&(_, v)| v)
            .ok_or_else(|| BoardError::OffBoard {
                token: field.to_string(),
                size: self.board().size(),
            })?;
        let better = values.iter().filter(|(_, v)| *v > target).count();
        let equal = values.iter().filter(|(_, v)| *v == target).count() - 1;
        Ok(1.0 + better as f64 + equal as f64 / 2.0)
    }

    pub fn value_similarity(&self, d: &PositionSequence) -> Result<f64, ValuationError> {
        self.check_board(d)?;
        self.features.similarity_value(&d.to_complex())
    }

    /// Appends the rank-1 continuation `steps` times, never rebuilding the model.
    pub fn continue_iteratively(
        &self,
        seed: &PositionSequence,
        steps: usize,
    ) -> Result<PositionSequence, ValuationError> {
        let mut seq = seed.clone();
        for _ in 0..steps {
            let (p, _) = self.best_continuation(&seq)?;
            seq = seq.with(p)?;
        }
        Ok(seq)
    }

    /// Regrows the special sequence from its first `prefix_len` positions
    /// and counts the positions that differ from the original.
    pub fn reconstruct(
        &self,
        prefix_len: usize,
    ) -> Result<(PositionSequence, usize), ValuationError> {
        let len = self.special.len();
        if prefix_len < 1 || prefix_len >= len {
            return Err(ValuationError::InvalidPrefix {
                prefix: prefix_len,
                len,
            });
        }
        let rebuilt =
            self.continue_iteratively(&self.special.prefix(prefix_len), len - prefix_len)?;
        let deviations = rebuilt
            .positions()
            .iter()
            .zip(self.special.positions())
            .filter(|(a, b)| a != b)
            .count();
        Ok((rebuilt, deviations))
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            general: *self.bank().general_config(),
            pool: self.bank().pool_config().clone(),
            special: self.special.notations(),
            tables: self.tables(),
        }
    }

    pub fn from_dump(dump: ModelDump) -> Result<Self, ValuationError> {
        let board = dump.general.board;
        let special = PositionSequence::from_tokens(&dump.special, board)?;
        Self::check_special(&special, board)?;
        let mut p_s = Vec::with_capacity(dump.tables.len());
        let mut tables = Vec::with_capacity(dump.tables.len());
        for t in dump.tables {
            if t.p_g.len() != t.bins.len() || t.p_s.len() != t.bins.len() {
                return Err(ValuationError::Dump(format!(
                    "table {} has {} bins but {} / {} probabilities",
                    t.op,
                    t.bins.len(),
                    t.p_g.len(),
                    t.p_s.len()
                )));
            }
            p_s.push(t.p_s);
            tables.push(GeneralTable {
                op: t.op,
                bins: t.bins,
                p_g: t.p_g,
            });
        }
        let bank = Arc::new(FeatureBank::from_tables(dump.general, dump.pool, tables));
        let features = FeatureModel {
            bank,
            special_len: special.len(),
            p_s,
        };
        Ok(Self { special, features })
    }
}

/// Serializable form of a model; JSON round-trips bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub general: GeneralSequenceConfig,
    pub pool: PoolConfig,
    pub special: Vec<String>,
    pub tables: Vec<FeatureTable>,
}

impl ModelDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ValuationError> {
        serde_json::from_str(text).map_err(|e| ValuationError::Dump(e.to_string()))
    }
}

/// Rounds to the four decimals used in ranking reports.
pub fn round4(v: f64) -> f64 {
    format!("{v:.4}").parse().expect("formatted float")
}

#[derive(Debug, Serialize)]
struct RankingRow {
    notation: String,
    value: f64,
    rank: usize,
}

pub fn ranking_to_json(ranking: &[RankedContinuation]) -> String {
    let rows: Vec<RankingRow> = ranking
        .iter()
        .map(|r| RankingRow {
            notation: r.position.to_string(),
            value: round4(r.value),
            rank: r.rank,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("ranking serializes")
}

pub fn ranking_to_csv(ranking: &[RankedContinuation]) -> String {
    let mut out = String::from("rank,field,value\n");
    for r in ranking {
        out.push_str(&format!("{},{},{:.4}\n", r.rank, r.position, r.value));
    }
    out
}
