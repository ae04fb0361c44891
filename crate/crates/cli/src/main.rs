use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use seqval_core::experiments::corpus::{named_sequence, NAMED_SEQUENCES};
use seqval_core::experiments::{
    regular_corpus, run_ablation, run_example, run_memory_curve, run_random_study,
    run_stability_probe, run_trace, ExperimentError, ExperimentReport, FeatureSetChoice,
    RegularPattern, SeedSet, STABILITY_POOL_SIZE,
};
use seqval_core::valuation::{ranking_to_csv, ranking_to_json};
use seqval_core::{
    render_board, BoardConfig, BoardError, FeatureError, ModelConfig, PositionSequence,
    ScoringMode, ValuationError, ValuationModel,
};

#[derive(Parser)]
#[command(
    name = "seqval",
    version,
    about = "Value continuations of position sequences on a square board"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Board side length.
    #[arg(long, global = true, default_value_t = 12)]
    board_size: usize,
    /// Number of operators drawn into the pool.
    #[arg(long, global = true, default_value_t = 200)]
    pool_size: usize,
    /// Bins per operator.
    #[arg(long, global = true, default_value_t = 8)]
    bins: usize,
    #[arg(long, global = true, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, global = true, value_enum, default_value_t = Scoring::Log)]
    scoring: Scoring,
    /// Seed of the operator pool.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Seed of the general sequence.
    #[arg(long, global = true, default_value_t = 1)]
    general_seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    general_length: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scoring {
    Log,
    Indicator,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Rank all continuations of a sequence under a model built on it.
    Rank {
        /// Positions ("A1 B2 C3", a JSON array, or a bundled name).
        sequence: String,
        /// Rows to show in text output (all fields for json/csv).
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Also write the model dump to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Extend a sequence by repeatedly adopting the best continuation.
    Continue {
        sequence: String,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        /// Start from this sequence instead of the model sequence.
        #[arg(long)]
        from: Option<String>,
    },
    /// Similarity of a sequence to the model sequence.
    Similarity { sequence: String, other: String },
    /// Mean designated-continuation rank per operator family on the bundled corpus.
    Ablation {
        /// Number of seed sets, counted up from --seed / --general-seed.
        #[arg(long, default_value_t = 5)]
        seed_sets: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "conv-only,conv-diff,conv-quot,full"
        )]
        sets: Vec<String>,
    },
    /// Best-continuation values of random sequences.
    RandomStudy {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        length: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Rank-1 agreement across independently drawn operator pools.
    Stability {
        sequence: String,
        #[arg(long, default_value_t = 20)]
        pools: usize,
        /// Operators per pool; overrides --pool-size for this probe.
        #[arg(long, default_value_t = STABILITY_POOL_SIZE)]
        probe_pool_size: usize,
    },
    /// Reconstruction deviations of a regular sequence by length.
    Memory {
        #[arg(long, default_value = "knight-loop")]
        pattern: String,
        #[arg(long, value_delimiter = ',', default_value = "20,50,100")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        prefix: usize,
        #[arg(long, default_value_t = 5)]
        seed_sets: usize,
    },
    /// Step-by-step continuation table with diagrams.
    Example {
        sequence: String,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        #[arg(long, default_value_t = 2)]
        top: usize,
        /// Rank the sequence's own positions from this index on instead.
        #[arg(long)]
        trace_from: Option<usize>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = seqval_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long)]
        state_dir: Option<PathBuf>,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<BoardError> for CliError {
    fn from(e: BoardError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ValuationError> for CliError {
    fn from(e: ValuationError) -> Self {
        match e {
            ValuationError::Feature(_)
            | ValuationError::Board(_)
            | ValuationError::TooShort(_)
            | ValuationError::InvalidPrefix { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Valuation(v) => v.into(),
            ExperimentError::Feature(f) => f.into(),
            ExperimentError::Board(b) => b.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl Common {
    fn model_config(&self) -> Result<ModelConfig, CliError> {
        let mut cfg = ModelConfig::with_board(BoardConfig::new(self.board_size)?);
        cfg.pool.pool_size = self.pool_size;
        cfg.pool.bins_k = self.bins;
        cfg.pool.epsilon = self.epsilon;
        cfg.pool.scoring = match self.scoring {
            Scoring::Log => ScoringMode::LogRatio,
            Scoring::Indicator => ScoringMode::Indicator,
        };
        cfg.pool.seed = self.seed;
        cfg.general.seed = self.general_seed;
        cfg.general.length = self.general_length;
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, text: String) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_report(&self, r: &ExperimentReport) -> Result<(), CliError> {
        self.emit(match self.format {
            Format::Text => r.to_text(),
            Format::Json => r.to_json() + "\n",
            Format::Csv => r.to_csv(),
        })
    }
}

fn sequence(text: &str, board: BoardConfig) -> Result<PositionSequence, CliError> {
    if NAMED_SEQUENCES.contains(&text) {
        let seq = named_sequence(text).expect("listed");
        if seq.board() != board {
            return Err(CliError::Config(format!(
                "bundled sequence `{text}` is defined on the 12x12 board"
            )));
        }
        return Ok(seq);
    }
    Ok(PositionSequence::parse_any(text, board)?)
}

fn seed_sets(c: &Common, count: usize) -> Result<Vec<SeedSet>, CliError> {
    if count == 0 {
        return Err(CliError::Config("need at least one seed set".into()));
    }
    Ok(SeedSet::series(c.seed, c.general_seed, count))
}

fn sequence_report(
    experiment: &str,
    cfg: &ModelConfig,
    seq: &PositionSequence,
) -> ExperimentReport {
    let mut r = ExperimentReport::new(experiment, json!({ "model": cfg }), &["index", "field"]);
    for (i, p) in seq.positions().iter().enumerate() {
        r.push_row(vec![json!(i), json!(p.to_string())]);
    }
    r
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let cfg = c.model_config()?;
    let board = cfg.general.board;
    match cli.command {
        Command::Rank {
            sequence: s,
            top,
            dump,
        } => {
            let seq = sequence(&s, board)?;
            let model = ValuationModel::build(seq.clone(), &cfg)?;
            let ranking = model.rank_continuations(&seq)?;
            if let Some(path) = dump {
                std::fs::write(&path, model.dump().to_json())
                    .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
            }
            match c.format {
                Format::Json => c.emit(ranking_to_json(&ranking) + "\n"),
                Format::Csv => c.emit(ranking_to_csv(&ranking)),
                Format::Text => {
                    let values: BTreeMap<_, _> =
                        ranking.iter().map(|r| (r.position, r.value)).collect();
                    let mut out = format!("Sequence {seq}\n");
                    out.push_str(&render_board(&seq, Some(&values)));
                    out.push_str("\nRank  Field  Value\n");
                    for r in ranking.iter().take(top) {
                        out.push_str(&format!(
                            "{:<4}  {:<5}  {:.4}\n",
                            r.rank,
                            r.position.to_string(),
                            r.value
                        ));
                    }
                    c.emit(out)
                }
            }
        }
        Command::Continue {
            sequence: s,
            steps,
            from,
        } => {
            let seq = sequence(&s, board)?;
            let start = match from {
                Some(f) => sequence(&f, board)?,
                None => seq.clone(),
            };
            let model = ValuationModel::build(seq, &cfg)?;
            let out = model.continue_iteratively(&start, steps)?;
            match c.format {
                Format::Text => c.emit(format!("{out}\n{}", render_board(&out, None))),
                _ => c.emit_report(&sequence_report("continue", &cfg, &out)),
            }
        }
        Command::Similarity { sequence: s, other } => {
            let seq = sequence(&s, board)?;
            let d = sequence(&other, board)?;
            let model = ValuationModel::build(seq.clone(), &cfg)?;
            let value = model.value_similarity(&d)?;
            let mut r = ExperimentReport::new(
                "similarity",
                json!({ "model": cfg, "sequence": seq.to_string() }),
                &["other", "value"],
            );
            r.push_row(vec![json!(d.to_string()), json!(value)]);
            c.emit_report(&r)
        }
        Command::Ablation { seed_sets: n, sets } => {
            let sets = sets
                .iter()
                .map(|s| s.parse::<FeatureSetChoice>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::Config)?;
            if board != BoardConfig::default() {
                return Err(CliError::Config(
                    "the bundled corpus is defined on the 12x12 board".into(),
                ));
            }
            let r = run_ablation(&regular_corpus(), &sets, &seed_sets(c, n)?, &cfg)?;
            c.emit_report(&r.to_report())
        }
        Command::RandomStudy {
            trials,
            length,
            top,
        } => {
            let r = run_random_study(
                trials,
                length,
                top,
                SeedSet::new(c.seed, c.general_seed),
                &cfg,
            )?;
            c.emit_report(&r.to_report())
        }
        Command::Stability {
            sequence: s,
            pools,
            probe_pool_size,
        } => {
            let seq = sequence(&s, board)?;
            let mut probe = cfg.clone();
            probe.pool.pool_size = probe_pool_size;
            probe.validate()?;
            let r = run_stability_probe(&seq, pools, c.seed, &probe)?;
            c.emit_report(&r.to_report())
        }
        Command::Memory {
            pattern,
            lengths,
            prefix,
            seed_sets: n,
        } => {
            let pattern = pattern
                .parse::<RegularPattern>()
                .map_err(CliError::Config)?;
            let r = run_memory_curve(pattern, &lengths, prefix, &seed_sets(c, n)?, &cfg)?;
            c.emit_report(&r.to_report())
        }
        Command::Example {
            sequence: s,
            horizon,
            top,
            trace_from,
        } => {
            let seq = sequence(&s, board)?;
            let r = match trace_from {
                Some(from) => run_trace(&seq, from, top, &cfg)?,
                None => run_example(&seq, horizon, top, &cfg)?,
            };
            c.emit_report(&r.to_report())
        }
        Command::Serve { port, state_dir } => {
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
            rt.block_on(seqval_service::serve(port, state_dir.as_deref()))
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
