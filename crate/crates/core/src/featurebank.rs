//! The statistical side of the model: the general reference sequence, the
//! sampled operator pool, quantile bins and the per-bin scoring rule.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::board::{BoardConfig, Position, PositionSequence};
use crate::transform::{OperatorSpec, Projection, TransformChain};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("invalid `{field}`: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },
    #[error("pool_size {requested} exceeds the {available} distinct operators available")]
    PoolTooLarge { requested: usize, available: usize },
    #[error("need at least {k} values to build {k} bins, got {got}")]
    TooFewValues { k: usize, got: usize },
}

impl FeatureError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            FeatureError::InvalidConfig { field, .. } => Some(field),
            FeatureError::PoolTooLarge { .. } => Some("pool_size"),
            FeatureError::TooFewValues { .. } => None,
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> FeatureError {
    FeatureError::InvalidConfig {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralSequenceConfig {
    pub length: usize,
    pub seed: u64,
    pub board: BoardConfig,
}

impl Default for GeneralSequenceConfig {
    fn default() -> Self {
        Self {
            length: 1000,
            seed: 1,
            board: BoardConfig::default(),
        }
    }
}

impl GeneralSequenceConfig {
    pub fn validate(&self, bins_k: usize) -> Result<(), FeatureError> {
        if self.length < 10 * bins_k {
            return Err(invalid(
                "general_length",
                format!("must be at least 10 * bins_k = {}", 10 * bins_k),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoringMode {
    #[serde(rename = "log")]
    LogRatio,
    #[serde(rename = "indicator")]
    Indicator,
}

impl std::str::FromStr for ScoringMode {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(ScoringMode::LogRatio),
            "indicator" => Ok(ScoringMode::Indicator),
            other => Err(invalid(
                "scoring",
                format!("unknown mode `{other}` (expected `log` or `indicator`)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub pool_size: usize,
    pub seed: u64,
    pub max_conv_len: usize,
    pub bins_k: usize,
    pub epsilon: f64,
    pub scoring: ScoringMode,
    /// Chains the sampler may pick from.
    #[serde(default = "standard_chains")]
    pub chains: Vec<TransformChain>,
    /// Redraw duplicate specs instead of keeping them as repeated draws.
    #[serde(default)]
    pub unique: bool,
}

fn standard_chains() -> Vec<TransformChain> {
    TransformChain::STANDARD.to_vec()
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            pool_size: 200,
            seed: 1,
            max_conv_len: 4,
            bins_k: 8,
            epsilon: 0.01,
            scoring: ScoringMode::LogRatio,
            chains: standard_chains(),
            unique: false,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.pool_size < 1 {
            return Err(invalid("pool_size", "must be at least 1"));
        }
        if self.bins_k < 2 {
            return Err(invalid("bins_k", "must be at least 2"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", "must lie strictly between 0 and 1"));
        }
        if !(1..=32).contains(&self.max_conv_len) {
            return Err(invalid("max_conv_len", "must lie in 1..=32"));
        }
        if self.chains.is_empty() {
            return Err(invalid("chains", "must not be empty"));
        }
        if self.unique && self.pool_size > self.distinct_specs() {
            return Err(FeatureError::PoolTooLarge {
                requested: self.pool_size,
                available: self.distinct_specs(),
            });
        }
        Ok(())
    }

    /// Number of distinct operator specs the sampler can produce.
    pub fn distinct_specs(&self) -> usize {
        let chains: HashSet<_> = self.chains.iter().collect();
        self.max_conv_len * chains.len() * Projection::ALL.len()
    }
}

pub fn generate_general_sequence(cfg: &GeneralSequenceConfig) -> PositionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    random_sequence(&mut rng, cfg.length, cfg.board)
}

/// Uniform random fields, each coordinate drawn independently.
pub fn random_sequence<R: Rng>(rng: &mut R, length: usize, board: BoardConfig) -> PositionSequence {
    let n = board.size();
    let positions = (0..length)
        .map(|_| {
            let col = rng.random_range(0..n);
            let row = rng.random_range(0..n);
            Position::new(col, row)
        })
        .collect();
    PositionSequence::new(board, positions).expect("sampled on board")
}

/// Draws the operator pool. Convolution lengths follow `P(l) ∝ 2^-l`
/// truncated at `max_conv_len`; chains and projections are uniform.
pub fn sample_operator_pool(cfg: &PoolConfig) -> Result<Vec<OperatorSpec>, FeatureError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pool = Vec::with_capacity(cfg.pool_size);
    let mut seen = HashSet::new();
    while pool.len() < cfg.pool_size {
        let spec = draw_operator(&mut rng, cfg);
        if cfg.unique && !seen.insert(spec) {
            continue;
        }
        pool.push(spec);
    }
    Ok(pool)
}

fn draw_operator<R: Rng>(rng: &mut R, cfg: &PoolConfig) -> OperatorSpec {
    // weights 2^(max-l) for l = 1..=max, so l = 1 carries the largest mass
    let max = cfg.max_conv_len as u32;
    let total = (1u64 << max) - 1;
    let mut u = rng.random_range(0..total);
    let mut conv_len = 1;
    for l in 1..=max {
        let w = 1u64 << (max - l);
        if u < w {
            conv_len = l as usize;
            break;
        }
        u -= w;
    }
    let chain = cfg.chains[rng.random_range(0..cfg.chains.len())];
    let proj = Projection::ALL[rng.random_range(0..Projection::ALL.len())];
    OperatorSpec::new(conv_len, chain, proj)
}

/// Quantile partition of the real line. Interval 0 is `(-inf, b_1)`,
/// interval `j` is `[b_j, b_{j+1})` and the last is `[b_last, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bins {
    boundaries: Vec<f64>,
}

impl Bins {
    /// Boundaries are the order statistics at `ceil(j·N/k)`, `j = 1..k-1`.
    /// Ties merge boundaries, and a boundary at the minimum is dropped
    /// because the interval below it would hold no reference values.
    pub fn from_values(values: &[f64], k: usize) -> Result<Self, FeatureError> {
        if k < 2 {
            return Err(invalid("bins_k", "must be at least 2"));
        }
        if values.len() < k {
            return Err(FeatureError::TooFewValues {
                k,
                got: values.len(),
            });
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let min = sorted[0];
        let mut boundaries: Vec<f64> = (1..k)
            .map(|j| sorted[(j * n).div_ceil(k)])
            .filter(|&b| b > min)
            .collect();
        boundaries.dedup();
        Ok(Self { boundaries })
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> Self {
        Self { boundaries }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn counts(&self, values: &[f64]) -> Vec<usize> {
        let mut counts = vec![0; self.len()];
        for &v in values {
            counts[self.index_of(v)] += 1;
        }
        counts
    }
}

/// Empirical bin frequencies; all zeros for an empty input.
pub fn estimate_probs(values: &[f64], bins: &Bins) -> Vec<f64> {
    let counts = bins.counts(values);
    if values.is_empty() {
        return vec![0.0; counts.len()];
    }
    let n = values.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

pub fn score(p_s: f64, p_g: f64, eps: f64, mode: ScoringMode) -> f64 {
    match mode {
        ScoringMode::LogRatio => (p_s.max(eps) / p_g.max(eps)).ln(),
        ScoringMode::Indicator => {
            if p_s > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Bins and reference probabilities for one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralTable {
    pub op: OperatorSpec,
    pub bins: Bins,
    pub p_g: Vec<f64>,
}

/// Bins and probabilities of one operator for both sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub op: OperatorSpec,
    pub bins: Bins,
    pub p_g: Vec<f64>,
    pub p_s: Vec<f64>,
}

/// Everything that does not depend on the special sequence: the general
/// sequence, the operator pool and each operator's bins and `p(g|I)`.
/// One bank can back many models.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    general_cfg: GeneralSequenceConfig,
    pool_cfg: PoolConfig,
    general: PositionSequence,
    tables: Vec<GeneralTable>,
}

impl FeatureBank {
    pub fn build(
        general_cfg: GeneralSequenceConfig,
        pool_cfg: PoolConfig,
    ) -> Result<Self, FeatureError> {
        pool_cfg.validate()?;
        general_cfg.validate(pool_cfg.bins_k)?;
        let general = generate_general_sequence(&general_cfg);
        let points = general.to_complex();
        let ops = sample_operator_pool(&pool_cfg)?;
        let tables = ops
            .into_iter()
            .map(|op| Self::general_table(op, &points, pool_cfg.bins_k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            general_cfg,
            pool_cfg,
            general,
            tables,
        })
    }

    /// A bank over an explicit operator list, bypassing the sampler.
    pub fn with_operators(
        general_cfg: GeneralSequenceConfig,
        pool_cfg: PoolConfig,
        ops: Vec<OperatorSpec>,
    ) -> Result<Self, FeatureError> {
        if !(pool_cfg.epsilon > 0.0 && pool_cfg.epsilon < 1.0) {
            return Err(invalid("epsilon", "must lie strictly between 0 and 1"));
        }
        let general = generate_general_sequence(&general_cfg);
        let points = general.to_complex();
        let tables = ops
            .into_iter()
            .map(|op| Self::general_table(op, &points, pool_cfg.bins_k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            general_cfg,
            pool_cfg,
            general,
            tables,
        })
    }

    /// Restores a bank from stored tables without recomputing them.
    pub fn from_tables(
        general_cfg: GeneralSequenceConfig,
        pool_cfg: PoolConfig,
        tables: Vec<GeneralTable>,
    ) -> Self {
        let general = generate_general_sequence(&general_cfg);
        Self {
            general_cfg,
            pool_cfg,
            general,
            tables,
        }
    }

    fn general_table(
        op: OperatorSpec,
        points: &[Complex64],
        k: usize,
    ) -> Result<GeneralTable, FeatureError> {
        let values = op.apply(points);
        let bins = Bins::from_values(&values, k)?;
        let p_g = estimate_probs(&values, &bins);
        Ok(GeneralTable { op, bins, p_g })
    }

    pub fn general_config(&self) -> &GeneralSequenceConfig {
        &self.general_cfg
    }

    pub fn pool_config(&self) -> &PoolConfig {
        &self.pool_cfg
    }

    pub fn general(&self) -> &PositionSequence {
        &self.general
    }

    pub fn tables(&self) -> &[GeneralTable] {
        &self.tables
    }

    pub fn operators(&self) -> impl Iterator<Item = OperatorSpec> + '_ {
        self.tables.iter().map(|t| t.op)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn board(&self) -> BoardConfig {
        self.general_cfg.board
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn general_sequence_is_deterministic_and_on_board() {
        let cfg = GeneralSequenceConfig::default();
        let a = generate_general_sequence(&cfg);
        let b = generate_general_sequence(&cfg);
        assert_eq!(a.len(), 1000);
        assert_eq!(a, b);
        assert!(a.positions().iter().all(|&p| cfg.board.contains(p)));
        let other = generate_general_sequence(&GeneralSequenceConfig { seed: 2, ..cfg });
        assert_ne!(a, other);
    }

    #[test]
    fn general_sequence_coordinates_are_uniform() {
        // 6000 positions -> 12000 coordinate draws, 1000 expected per value
        let cfg = GeneralSequenceConfig {
            length: 6000,
            seed: 99,
            board: BoardConfig::default(),
        };
        let g = generate_general_sequence(&cfg);
        let mut hist = [0usize; 12];
        for p in g.positions() {
            hist[p.col] += 1;
            hist[p.row] += 1;
        }
        let n: f64 = 12000.0;
        let expected = n / 12.0;
        let sigma = (n * (1.0 / 12.0) * (11.0 / 12.0)).sqrt();
        for (v, &h) in hist.iter().enumerate() {
            assert!(
                (h as f64 - expected).abs() <= 5.0 * sigma,
                "value {v}: {h} vs {expected}"
            );
        }
        let chi2: f64 = hist
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        // 11 degrees of freedom, 0.999 quantile is about 31.3
        assert!(chi2 < 31.3, "chi2 = {chi2}");
    }

    #[test]
    fn pool_has_requested_size_and_is_deterministic() {
        let cfg = PoolConfig::default();
        let a = sample_operator_pool(&cfg).unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a, sample_operator_pool(&cfg).unwrap());
        assert!(a.iter().all(|op| op.chain != TransformChain::Identity));
    }

    #[test]
    fn unique_pool_is_distinct_and_bounded() {
        let cfg = PoolConfig {
            pool_size: 60,
            unique: true,
            ..PoolConfig::default()
        };
        let pool = sample_operator_pool(&cfg).unwrap();
        let distinct: HashSet<_> = pool.iter().collect();
        assert_eq!(distinct.len(), 60);

        let full = PoolConfig {
            pool_size: 80,
            unique: true,
            ..PoolConfig::default()
        };
        assert_eq!(sample_operator_pool(&full).unwrap().len(), 80);

        let too_big = PoolConfig {
            pool_size: 81,
            unique: true,
            ..PoolConfig::default()
        };
        let err = sample_operator_pool(&too_big).unwrap_err();
        assert_eq!(
            err,
            FeatureError::PoolTooLarge {
                requested: 81,
                available: 80
            }
        );
        assert!(err.to_string().contains("80"));
    }

    #[test]
    fn conv_len_follows_truncated_geometric() {
        // P(l = 1) = 2^-1 / (2^-1 + 2^-2 + 2^-3 + 2^-4) = 8/15
        let expected: f64 = 0.5 / (0.5 + 0.25 + 0.125 + 0.0625);
        assert!((expected - 0.5333).abs() < 1e-3);
        let cfg = PoolConfig {
            pool_size: 10_000,
            seed: 7,
            ..PoolConfig::default()
        };
        let pool = sample_operator_pool(&cfg).unwrap();
        let ones = pool.iter().filter(|op| op.conv_len == 1).count() as f64 / 10_000.0;
        assert!((ones - expected).abs() < 0.02, "fraction {ones}");
        let twos = pool.iter().filter(|op| op.conv_len == 2).count() as f64 / 10_000.0;
        assert!((twos - 4.0 / 15.0).abs() < 0.02, "fraction {twos}");
        assert!(pool.iter().all(|op| (1..=4).contains(&op.conv_len)));

        let short = PoolConfig {
            max_conv_len: 1,
            ..PoolConfig::default()
        };
        assert!(sample_operator_pool(&short)
            .unwrap()
            .iter()
            .all(|op| op.conv_len == 1));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = PoolConfig {
            bins_k: 1,
            ..PoolConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().field(), Some("bins_k"));
        for eps in [0.0, 1.0, -0.5, f64::NAN] {
            let bad = PoolConfig {
                epsilon: eps,
                ..PoolConfig::default()
            };
            assert_eq!(bad.validate().unwrap_err().field(), Some("epsilon"));
        }
        let bad = PoolConfig {
            pool_size: 0,
            ..PoolConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().field(), Some("pool_size"));
        let g = GeneralSequenceConfig {
            length: 79,
            ..GeneralSequenceConfig::default()
        };
        assert_eq!(g.validate(8).unwrap_err().field(), Some("general_length"));
    }

    #[test]
    fn bins_on_small_integers() {
        let values: Vec<f64> = (1..=10).map(f64::from).collect();
        let bins = Bins::from_values(&values, 5).unwrap();
        assert_eq!(bins.boundaries(), &[3.0, 5.0, 7.0, 9.0]);
        assert_eq!(bins.counts(&values), vec![2, 2, 2, 2, 2]);
        assert_eq!(estimate_probs(&values, &bins), vec![0.2; 5]);
    }

    #[test]
    fn degenerate_bins() {
        let bins = Bins::from_values(&[0.0; 20], 5).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(estimate_probs(&[0.0; 20], &bins), vec![1.0]);

        let mut tied = vec![0.0; 10];
        tied.extend((1..=10).map(f64::from));
        let bins = Bins::from_values(&tied, 4).unwrap();
        assert!(bins.len() < 4);
        assert!(bins.boundaries().windows(2).all(|w| w[0] < w[1]));

        assert!(matches!(
            Bins::from_values(&[1.0, 2.0], 3),
            Err(FeatureError::TooFewValues { .. })
        ));
    }

    #[test]
    fn bins_on_normal_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let bins = Bins::from_values(&values, 8).unwrap();
        assert_eq!(bins.len(), 8);
        for c in bins.counts(&values) {
            assert!((100..=150).contains(&c), "{c}");
        }
    }

    #[test]
    fn probability_examples() {
        let bins = Bins::from_boundaries(vec![1.0]);
        assert_eq!(estimate_probs(&[0.5], &bins), vec![1.0, 0.0]);
        assert_eq!(estimate_probs(&[], &bins), vec![0.0, 0.0]);
        // boundary belongs to the upper interval
        assert_eq!(estimate_probs(&[1.0], &bins), vec![0.0, 1.0]);
    }

    #[test]
    fn score_examples() {
        let v = score(0.5, 0.125, 0.01, ScoringMode::LogRatio);
        assert!((v - 4f64.ln()).abs() < 1e-12);
        assert!((v - 1.3863).abs() < 1e-4);
        let v = score(0.0, 0.125, 0.01, ScoringMode::LogRatio);
        assert!((v - 0.08f64.ln()).abs() < 1e-12);
        assert!((v + 2.5257).abs() < 1e-4);
        assert_eq!(score(0.3, 0.0, 0.01, ScoringMode::Indicator), 1.0);
        assert_eq!(score(0.0, 0.3, 0.01, ScoringMode::Indicator), 0.0);
        // both floored
        assert_eq!(score(0.0, 0.0, 0.01, ScoringMode::LogRatio), 0.0);
    }

    #[test]
    fn bank_tables_match_pool() {
        let bank =
            FeatureBank::build(GeneralSequenceConfig::default(), PoolConfig::default()).unwrap();
        assert_eq!(bank.len(), 200);
        for t in bank.tables() {
            assert_eq!(t.p_g.len(), t.bins.len());
            assert!((t.p_g.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn tie_free_bins_hold_near_equal_counts(
            raw in prop::collection::hash_set(-1_000_000i64..1_000_000, 20..400),
            k in 2usize..12,
        ) {
            let values: Vec<f64> = raw.into_iter().map(|v| v as f64 * 1e-3).collect();
            prop_assume!(values.len() >= k);
            let bins = Bins::from_values(&values, k).unwrap();
            prop_assert_eq!(bins.len(), k);
            let target = values.len() as f64 / k as f64;
            for c in bins.counts(&values) {
                prop_assert!((c as f64 - target).abs() <= 1.0, "{} vs {}", c, target);
            }
        }

        #[test]
        fn log_score_is_monotone(
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0, eps in 0.001f64..0.5,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(score(lo, g, eps, ScoringMode::LogRatio) <= score(hi, g, eps, ScoringMode::LogRatio));
            prop_assert!(score(g, lo, eps, ScoringMode::LogRatio) >= score(g, hi, eps, ScoringMode::LogRatio));
        }

        #[test]
        fn score_ignores_eps_above_floor(
            s in 0.02f64..=1.0, g in 0.02f64..=1.0,
        ) {
            prop_assert_eq!(
                score(s, g, 0.005, ScoringMode::LogRatio),
                score(s, g, 0.02, ScoringMode::LogRatio)
            );
        }

        #[test]
        fn pool_is_deterministic(seed in any::<u64>(), size in 1usize..300) {
            let cfg = PoolConfig { pool_size: size, seed, ..PoolConfig::default() };
            prop_assert_eq!(sample_operator_pool(&cfg).unwrap(), sample_operator_pool(&cfg).unwrap());
        }
    }
}
