//! Experiment harness: feature-set ablation, random-sequence study,
//! stability probe, memory curve and example runs.
//!
//! Every experiment returns a typed result that renders to an
//! [`ExperimentReport`]. Trials run in parallel but are merged in trial
//! order, so reports are byte-identical for identical inputs.

pub mod corpus;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::board::{render_board, BoardError, Position, PositionSequence};
use crate::featurebank::{random_sequence, FeatureBank, FeatureError};
use crate::transform::TransformChain;
use crate::valuation::{ModelConfig, RankedContinuation, ValuationError, ValuationModel};

pub use corpus::{regular_corpus, CorpusEntry, RegularPattern};
pub use report::ExperimentReport;

/// Pool size used by the stability probe unless told otherwise. Smaller
/// pools let the random choice of operators show through.
pub const STABILITY_POOL_SIZE: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Board(#[from] BoardError),
}

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidArgument(msg.into())
}

/// SplitMix64 step; used to derive independent seeds from one base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pool and general-sequence seeds for one repetition of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSet {
    pub pool: u64,
    pub general: u64,
}

impl SeedSet {
    pub fn new(pool: u64, general: u64) -> Self {
        Self { pool, general }
    }

    /// `count` consecutive seed sets starting at `(pool, general)`.
    pub fn series(pool: u64, general: u64, count: usize) -> Vec<SeedSet> {
        (0..count as u64)
            .map(|i| SeedSet::new(pool.wrapping_add(i), general.wrapping_add(i)))
            .collect()
    }

    pub fn apply(self, cfg: &ModelConfig) -> ModelConfig {
        let mut cfg = cfg.clone();
        cfg.pool.seed = self.pool;
        cfg.general.seed = self.general;
        cfg
    }
}

impl fmt::Display for SeedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.pool, self.general)
    }
}

/// Operator families compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSetChoice {
    /// Projection straight after convolution.
    ConvOnly,
    /// `D` and `D∘D`.
    ConvDiff,
    /// `Q∘D`, `D∘Q∘D` and `Q∘Q∘D`.
    ConvQuot,
    /// All five standard chains.
    Full,
}

impl FeatureSetChoice {
    pub const ALL: [FeatureSetChoice; 4] = [
        FeatureSetChoice::ConvOnly,
        FeatureSetChoice::ConvDiff,
        FeatureSetChoice::ConvQuot,
        FeatureSetChoice::Full,
    ];

    pub fn chains(self) -> Vec<TransformChain> {
        use TransformChain::*;
        match self {
            FeatureSetChoice::ConvOnly => vec![Identity],
            FeatureSetChoice::ConvDiff => vec![D, DD],
            FeatureSetChoice::ConvQuot => vec![QD, DQD, QQD],
            FeatureSetChoice::Full => TransformChain::STANDARD.to_vec(),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            FeatureSetChoice::ConvOnly => "conv-only",
            FeatureSetChoice::ConvDiff => "conv-diff",
            FeatureSetChoice::ConvQuot => "conv-quot",
            FeatureSetChoice::Full => "full",
        }
    }

    pub fn apply(self, cfg: &ModelConfig) -> ModelConfig {
        let mut cfg = cfg.clone();
        cfg.pool.chains = self.chains();
        cfg
    }
}

impl fmt::Display for FeatureSetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeatureSetChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| format!("unknown feature set `{s}`"))
    }
}

fn config_echo(cfg: &ModelConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

// ---------------------------------------------------------------- ablation

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCase {
    pub set: FeatureSetChoice,
    pub seed_index: usize,
    pub sequence: String,
    pub base_len: usize,
    pub field: Position,
    /// Tie-averaged rank among all `n²` continuations.
    pub rank: f64,
}

#[derive(Debug, Clone)]
pub struct AblationResult {
    pub config: ModelConfig,
    pub sets: Vec<FeatureSetChoice>,
    pub seeds: Vec<SeedSet>,
    pub cases: Vec<AblationCase>,
}

impl AblationResult {
    pub fn mean_rank(&self, set: FeatureSetChoice) -> f64 {
        mean(self.cases.iter().filter(|c| c.set == set).map(|c| c.rank))
    }

    pub fn mean_rank_for(&self, set: FeatureSetChoice, seed_index: usize) -> f64 {
        mean(
            self.cases
                .iter()
                .filter(|c| c.set == set && c.seed_index == seed_index)
                .map(|c| c.rank),
        )
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "ablation",
            json!({
                "model": config_echo(&self.config),
                "sets": self.sets.iter().map(|s| s.id()).collect::<Vec<_>>(),
                "seeds": self.seeds,
            }),
            &[
                "set",
                "pool_seed",
                "general_seed",
                "sequence",
                "base_len",
                "field",
                "rank",
            ],
        );
        for c in &self.cases {
            let s = self.seeds[c.seed_index];
            r.push_row(vec![
                json!(c.set.id()),
                json!(s.pool),
                json!(s.general),
                json!(c.sequence),
                json!(c.base_len),
                json!(c.field.to_string()),
                json!(c.rank),
            ]);
        }
        let mut text = String::from("set         mean rank   per seed set\n");
        for &set in &self.sets {
            let per: Vec<f64> = (0..self.seeds.len())
                .map(|i| self.mean_rank_for(set, i))
                .collect();
            r.set_summary(format!("mean_rank.{}", set.id()), self.mean_rank(set));
            let lo = per.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = per.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            r.set_summary(format!("min_seed_mean_rank.{}", set.id()), lo);
            r.set_summary(format!("max_seed_mean_rank.{}", set.id()), hi);
            text.push_str(&format!(
                "{:<10}  {:>9.4}   {}\n",
                set.id(),
                self.mean_rank(set),
                per.iter()
                    .map(|v| format!("{v:.4}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
        }
        let n = self.config.general.board.field_count() as f64;
        r.set_summary("random_guess_rank", (n + 1.0) / 2.0);
        r.text = text;
        r
    }
}

/// For every feature set and seed set, ranks each designated continuation
/// of each corpus entry among all fields, with the model built on the
/// base extended by the preceding designated continuations.
pub fn run_ablation(
    corpus: &[CorpusEntry],
    sets: &[FeatureSetChoice],
    seeds: &[SeedSet],
    cfg: &ModelConfig,
) -> Result<AblationResult, ExperimentError> {
    if corpus.is_empty() || corpus.iter().all(|e| e.continuations.is_empty()) {
        return Err(ExperimentError::EmptyCorpus);
    }
    if sets.is_empty() || seeds.is_empty() {
        return Err(invalid("need at least one feature set and one seed set"));
    }
    let jobs: Vec<(FeatureSetChoice, usize)> = sets
        .iter()
        .flat_map(|&set| (0..seeds.len()).map(move |i| (set, i)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(
            |&(set, seed_index)| -> Result<Vec<AblationCase>, ExperimentError> {
                let job_cfg = set.apply(&seeds[seed_index].apply(cfg));
                let bank = job_cfg.build_bank()?;
                let mut cases = Vec::new();
                for entry in corpus {
                    for (k, &field) in entry.continuations.iter().enumerate() {
                        let base = entry.prefix_with(k);
                        let model = ValuationModel::with_bank(Arc::clone(&bank), base.clone())?;
                        cases.push(AblationCase {
                            set,
                            seed_index,
                            sequence: entry.name.clone(),
                            base_len: base.len(),
                            field,
                            rank: model.tie_averaged_rank(&base, field)?,
                        });
                    }
                }
                Ok(cases)
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AblationResult {
        config: cfg.clone(),
        sets: sets.to_vec(),
        seeds: seeds.to_vec(),
        cases: per_job.into_iter().flatten().collect(),
    })
}

// ------------------------------------------------------------ random study

#[derive(Debug, Clone, PartialEq)]
pub struct RandomTrial {
    pub index: usize,
    pub sequence: PositionSequence,
    pub best: Position,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct RandomStudyResult {
    pub config: ModelConfig,
    pub seeds: SeedSet,
    pub length: usize,
    pub top: usize,
    pub trials: Vec<RandomTrial>,
    /// Diagonal of the same length and its best continuation, when it fits.
    pub reference: Option<(PositionSequence, Position, f64)>,
}

impl RandomStudyResult {
    pub fn mean_best_value(&self) -> f64 {
        mean(self.trials.iter().map(|t| t.value))
    }

    /// Trials with the highest best-continuation values, best first.
    pub fn top_trials(&self) -> Vec<&RandomTrial> {
        let mut sorted: Vec<&RandomTrial> = self.trials.iter().collect();
        sorted.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
        sorted.truncate(self.top);
        sorted
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "random-study",
            json!({
                "model": config_echo(&self.config),
                "seeds": self.seeds,
                "trials": self.trials.len(),
                "length": self.length,
                "top": self.top,
            }),
            &["trial", "sequence", "best_field", "best_value"],
        );
        for t in &self.trials {
            r.push_row(vec![
                json!(t.index),
                json!(t.sequence.to_string()),
                json!(t.best.to_string()),
                json!(t.value),
            ]);
        }
        let mut values: Vec<f64> = self.trials.iter().map(|t| t.value).collect();
        values.sort_by(f64::total_cmp);
        let m = self.mean_best_value();
        let var = mean(values.iter().map(|v| (v - m) * (v - m)));
        r.set_summary("mean_best_value", m);
        r.set_summary("std_best_value", var.sqrt());
        r.set_summary("min_best_value", values[0]);
        r.set_summary("median_best_value", values[values.len() / 2]);
        r.set_summary("max_best_value", values[values.len() - 1]);
        let mut text = String::new();
        if let Some((seq, best, value)) = &self.reference {
            r.set_summary("diagonal_best_value", *value);
            text.push_str(&format!(
                "reference {seq}: best continuation {best} at {value:.4}\n\n"
            ));
        }
        for t in self.top_trials() {
            text.push_str(&format!(
                "trial {}: {}  best {} {:.4}\n",
                t.index, t.sequence, t.best, t.value
            ));
            text.push_str(&render_board(&t.sequence, None));
            text.push('\n');
        }
        r.text = text;
        r
    }
}

/// Values the best continuation of `trials` uniform random sequences, each
/// with its own model over one shared operator bank.
pub fn run_random_study(
    trials: usize,
    length: usize,
    top: usize,
    seeds: SeedSet,
    cfg: &ModelConfig,
) -> Result<RandomStudyResult, ExperimentError> {
    if top < 1 || trials < top {
        return Err(invalid("need trials >= top >= 1"));
    }
    if length < 2 {
        return Err(invalid("random sequences need length >= 2"));
    }
    let cfg = seeds.apply(cfg);
    let bank = cfg.build_bank()?;
    let board = cfg.general.board;
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(seeds.pool ^ seeds.general.rotate_left(32), 0));
    let sequences: Vec<PositionSequence> = (0..trials)
        .map(|_| random_sequence(&mut rng, length, board))
        .collect();
    let results = sequences
        .into_par_iter()
        .enumerate()
        .map(
            |(index, sequence)| -> Result<RandomTrial, ExperimentError> {
                let model = ValuationModel::with_bank(Arc::clone(&bank), sequence.clone())?;
                let (best, value) = model.best_continuation(&sequence)?;
                Ok(RandomTrial {
                    index,
                    sequence,
                    best,
                    value,
                })
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let reference = if length < board.size() {
        let diag = PositionSequence::new(board, (0..length).map(|i| Position::new(i, i)).collect())
            .expect("fits");
        let model = ValuationModel::with_bank(Arc::clone(&bank), diag.clone())?;
        let (best, value) = model.best_continuation(&diag)?;
        Some((diag, best, value))
    } else {
        None
    };
    Ok(RandomStudyResult {
        config: cfg.clone(),
        seeds,
        length,
        top,
        trials: results,
        reference,
    })
}

// --------------------------------------------------------- stability probe

#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub config: ModelConfig,
    pub sequence: PositionSequence,
    pub pool_seeds: Vec<u64>,
    pub picks: Vec<(Position, f64)>,
    pub modal: Position,
    /// Share of pools whose rank-1 continuation is the modal one.
    pub agreement: f64,
}

impl StabilityResult {
    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "stability",
            json!({
                "model": config_echo(&self.config),
                "sequence": self.sequence.to_string(),
                "pool_seeds": self.pool_seeds,
            }),
            &["pool", "pool_seed", "rank1_field", "rank1_value"],
        );
        for (i, (&seed, &(p, v))) in self.pool_seeds.iter().zip(&self.picks).enumerate() {
            r.push_row(vec![json!(i), json!(seed), json!(p.to_string()), json!(v)]);
        }
        r.set_summary("modal_field", self.modal.to_string());
        r.set_summary("agreement", self.agreement);
        r.notes.push(
            "interpretation: rank-1 agreement across independently sampled operator pools \
             is used as a regularity signal"
                .to_string(),
        );
        r
    }
}

/// Rank-1 agreement over `pools` operator pools with seeds derived from `seed`.
pub fn run_stability_probe(
    sequence: &PositionSequence,
    pools: usize,
    seed: u64,
    cfg: &ModelConfig,
) -> Result<StabilityResult, ExperimentError> {
    if pools < 2 {
        return Err(invalid("stability probe needs at least 2 pools"));
    }
    let seeds: Vec<u64> = (0..pools as u64).map(|i| derive_seed(seed, i)).collect();
    stability_from_seeds(sequence, &seeds, cfg)
}

pub fn stability_from_seeds(
    sequence: &PositionSequence,
    pool_seeds: &[u64],
    cfg: &ModelConfig,
) -> Result<StabilityResult, ExperimentError> {
    if pool_seeds.is_empty() {
        return Err(invalid("no pool seeds"));
    }
    let picks = pool_seeds
        .par_iter()
        .map(|&s| -> Result<(Position, f64), ExperimentError> {
            let mut c = cfg.clone();
            c.pool.seed = s;
            let model = ValuationModel::build(sequence.clone(), &c)?;
            Ok(model.best_continuation(sequence)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts: BTreeMap<Position, usize> = BTreeMap::new();
    for &(p, _) in &picks {
        *counts.entry(p).or_default() += 1;
    }
    // first maximum in field order
    let (modal, count) = counts.iter().fold(
        (picks[0].0, 0),
        |acc, (&p, &c)| if c > acc.1 { (p, c) } else { acc },
    );
    Ok(StabilityResult {
        config: cfg.clone(),
        sequence: sequence.clone(),
        pool_seeds: pool_seeds.to_vec(),
        agreement: count as f64 / picks.len() as f64,
        picks,
        modal,
    })
}

// ------------------------------------------------------------ memory curve

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryCase {
    pub seed_index: usize,
    pub length: usize,
    pub deviations: usize,
    pub reconstructed: PositionSequence,
}

#[derive(Debug, Clone)]
pub struct MemoryResult {
    pub config: ModelConfig,
    pub pattern: RegularPattern,
    pub prefix: usize,
    pub seeds: Vec<SeedSet>,
    pub cases: Vec<MemoryCase>,
}

impl MemoryResult {
    pub fn deviations(&self, length: usize) -> Vec<usize> {
        self.cases
            .iter()
            .filter(|c| c.length == length)
            .map(|c| c.deviations)
            .collect()
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "memory",
            json!({
                "model": config_echo(&self.config),
                "pattern": self.pattern.id(),
                "prefix": self.prefix,
                "seeds": self.seeds,
            }),
            &["pool_seed", "general_seed", "length", "deviations"],
        );
        let mut lengths: Vec<usize> = Vec::new();
        for c in &self.cases {
            let s = self.seeds[c.seed_index];
            r.push_row(vec![
                json!(s.pool),
                json!(s.general),
                json!(c.length),
                json!(c.deviations),
            ]);
            if !lengths.contains(&c.length) {
                lengths.push(c.length);
            }
        }
        for len in lengths {
            let devs = self.deviations(len);
            r.set_summary(
                format!("mean_deviations.{len}"),
                mean(devs.iter().map(|&d| d as f64)),
            );
            r.set_summary(
                format!("max_deviations.{len}"),
                *devs.iter().max().expect("nonempty"),
            );
        }
        r
    }
}

/// Builds a model on a generated regular sequence of each length and counts
/// how many positions a reconstruction from the first `prefix` positions
/// gets wrong.
pub fn run_memory_curve(
    pattern: RegularPattern,
    lengths: &[usize],
    prefix: usize,
    seeds: &[SeedSet],
    cfg: &ModelConfig,
) -> Result<MemoryResult, ExperimentError> {
    if lengths.is_empty() || seeds.is_empty() {
        return Err(invalid("need at least one length and one seed set"));
    }
    if prefix < 1 {
        return Err(invalid("prefix must be at least 1"));
    }
    let board = cfg.general.board;
    let jobs: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|s| lengths.iter().map(move |&l| (s, l)))
        .collect();
    let banks = seeds
        .par_iter()
        .map(|s| s.apply(cfg).build_bank())
        .collect::<Result<Vec<Arc<FeatureBank>>, _>>()?;
    let cases = jobs
        .par_iter()
        .map(
            |&(seed_index, length)| -> Result<MemoryCase, ExperimentError> {
                let sequence = pattern.generate(length, board);
                if prefix >= length {
                    return Ok(MemoryCase {
                        seed_index,
                        length,
                        deviations: 0,
                        reconstructed: sequence,
                    });
                }
                let model = ValuationModel::with_bank(Arc::clone(&banks[seed_index]), sequence)?;
                let (reconstructed, deviations) = model.reconstruct(prefix)?;
                Ok(MemoryCase {
                    seed_index,
                    length,
                    deviations,
                    reconstructed,
                })
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MemoryResult {
        config: cfg.clone(),
        pattern,
        prefix,
        seeds: seeds.to_vec(),
        cases,
    })
}

// ----------------------------------------------------------------- examples

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleStep {
    /// Index of the position being predicted.
    pub index: usize,
    pub top: Vec<RankedContinuation>,
    /// Position actually appended before the next step.
    pub chosen: Position,
    /// Rank of `chosen` when it was given rather than adopted.
    pub chosen_rank: Option<usize>,
}

impl ExampleStep {
    pub fn gap(&self) -> Option<f64> {
        (self.top.len() >= 2).then(|| self.top[0].value - self.top[1].value)
    }
}

#[derive(Debug, Clone)]
pub struct ExampleResult {
    pub config: ModelConfig,
    pub sequence: PositionSequence,
    pub steps: Vec<ExampleStep>,
    pub continued: PositionSequence,
    pub traced: bool,
}

impl ExampleResult {
    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            if self.traced { "trace" } else { "example" },
            json!({
                "model": config_echo(&self.config),
                "sequence": self.sequence.to_string(),
                "steps": self.steps.len(),
            }),
            &["index", "rank", "field", "value"],
        );
        for s in &self.steps {
            for c in &s.top {
                r.push_row(vec![
                    json!(s.index),
                    json!(c.rank),
                    json!(c.position.to_string()),
                    json!(c.value),
                ]);
            }
        }
        r.set_summary("continued", self.continued.to_string());
        if self.traced {
            let (argmin, _) = self
                .steps
                .iter()
                .filter_map(|s| s.gap().map(|g| (s.index, g)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, g)| if g < acc.1 { (i, g) } else { acc },
                );
            r.set_summary("smallest_gap_index", argmin);
        }
        r.text = self.step_table();
        r
    }

    /// Diagram of the sequence, then one column pair per step.
    pub fn step_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Sequence {}\n", self.sequence));
        out.push_str(&render_board(&self.sequence, None));
        out.push('\n');
        if !self.traced {
            out.push_str(&format!("Continuation {}\n", self.continued));
            out.push_str(&render_board(&self.continued, None));
            out.push('\n');
        }
        let mut header = vec!["Rank".to_string()];
        let mut context = vec![String::new()];
        for (i, s) in self.steps.iter().enumerate() {
            header.push(format!("c_{}", s.index));
            header.push(format!("Value(c_{})", s.index));
            context.push(String::new());
            context.push(match i.checked_sub(1).map(|p| &self.steps[p]) {
                Some(prev) => format!("c_{} = {}", prev.index, prev.chosen),
                None => String::new(),
            });
        }
        let depth = self.steps.iter().map(|s| s.top.len()).max().unwrap_or(0);
        let mut rows = vec![header];
        if context.iter().any(|c| !c.is_empty()) {
            rows.push(context);
        }
        for k in 0..depth {
            let mut row = vec![(k + 1).to_string()];
            for s in &self.steps {
                match s.top.get(k) {
                    Some(c) => {
                        row.push(c.position.to_string());
                        row.push(format!("{:.4}", c.value));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            rows.push(row);
        }
        let cols = rows[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        for row in rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        if self.traced {
            out.push('\n');
            for s in &self.steps {
                out.push_str(&format!(
                    "c_{} = {}: rank {}, gap {:.4}\n",
                    s.index,
                    s.chosen,
                    s.chosen_rank.map(|r| r.to_string()).unwrap_or_default(),
                    s.gap().unwrap_or(f64::NAN)
                ));
            }
        }
        out
    }
}

/// Builds a model on `sequence` and continues it for `horizon` steps,
/// listing the `top` continuations at each step and adopting rank 1.
pub fn run_example(
    sequence: &PositionSequence,
    horizon: usize,
    top: usize,
    cfg: &ModelConfig,
) -> Result<ExampleResult, ExperimentError> {
    if horizon < 1 {
        return Err(invalid("horizon must be at least 1"));
    }
    let model = ValuationModel::build(sequence.clone(), cfg)?;
    let mut current = sequence.clone();
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut ranking = model.rank_continuations(&current)?;
        let chosen = ranking[0].position;
        ranking.truncate(top.max(1));
        steps.push(ExampleStep {
            index: current.len(),
            top: ranking,
            chosen,
            chosen_rank: None,
        });
        current = current.with(chosen)?;
    }
    Ok(ExampleResult {
        config: cfg.clone(),
        sequence: sequence.clone(),
        steps,
        continued: current,
        traced: false,
    })
}

/// Builds a model on the whole `sequence` and ranks each of its positions
/// from index `from` on as a continuation of the true preceding prefix.
pub fn run_trace(
    sequence: &PositionSequence,
    from: usize,
    top: usize,
    cfg: &ModelConfig,
) -> Result<ExampleResult, ExperimentError> {
    if from < 1 || from >= sequence.len() {
        return Err(invalid(format!(
            "trace start {from} must lie in 1..{}",
            sequence.len()
        )));
    }
    let model = ValuationModel::build(sequence.clone(), cfg)?;
    let mut steps = Vec::new();
    for index in from..sequence.len() {
        let base = sequence.prefix(index);
        let mut ranking = model.rank_continuations(&base)?;
        let chosen = sequence.positions()[index];
        let chosen_rank = ranking
            .iter()
            .find(|r| r.position == chosen)
            .map(|r| r.rank);
        ranking.truncate(top.max(2));
        steps.push(ExampleStep {
            index,
            top: ranking,
            chosen,
            chosen_rank,
        });
    }
    Ok(ExampleResult {
        config: cfg.clone(),
        sequence: sequence.clone(),
        steps,
        continued: sequence.clone(),
        traced: true,
    })
}
