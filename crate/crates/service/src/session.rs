use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use seqval_core::{
    BoardConfig, FeatureBank, ModelConfig, PositionSequence, ScoringMode, ValuationModel,
};

use crate::error::ApiError;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Session settings accepted on creation. Unset fields keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub model: ModelConfig,
    pub freeze_model: bool,
}

impl SessionConfig {
    /// Applies a JSON object of overrides, naming the field on any error.
    pub fn from_overrides(body: &Value) -> Result<Self, ApiError> {
        let empty = Map::new();
        let obj = match body {
            Value::Object(m) => m,
            Value::Null => &empty,
            _ => return Err(ApiError::bad_request("body must be a JSON object")),
        };
        let mut model = ModelConfig::default();
        let mut freeze_model = false;
        if let Some(v) = obj.get("board_size") {
            let size = uint(v, "board_size")?;
            model = ModelConfig::with_board(BoardConfig::new(size)?);
        }
        for (key, v) in obj {
            match key.as_str() {
                "board_size" => {}
                "pool_size" => model.pool.pool_size = uint(v, key)?,
                "seed" | "pool_seed" => model.pool.seed = u64_of(v, key)?,
                "general_seed" => model.general.seed = u64_of(v, key)?,
                "general_length" => model.general.length = uint(v, key)?,
                "bins_k" => model.pool.bins_k = uint(v, key)?,
                "max_conv_len" => model.pool.max_conv_len = uint(v, key)?,
                "epsilon" => {
                    model.pool.epsilon = v
                        .as_f64()
                        .ok_or_else(|| ApiError::invalid_field(key, "expected a number"))?
                }
                "scoring" => {
                    model.pool.scoring = v
                        .as_str()
                        .and_then(|s| s.parse::<ScoringMode>().ok())
                        .ok_or_else(|| {
                            ApiError::invalid_field(key, "expected \"log\" or \"indicator\"")
                        })?
                }
                "unique" => model.pool.unique = boolean(v, key)?,
                "freeze_model" => freeze_model = boolean(v, key)?,
                other => {
                    return Err(ApiError::invalid_field(
                        other,
                        format!("unknown field `{other}`"),
                    ))
                }
            }
        }
        model.validate()?;
        Ok(Self {
            model,
            freeze_model,
        })
    }
}

fn u64_of(v: &Value, field: &str) -> Result<u64, ApiError> {
    v.as_u64()
        .ok_or_else(|| ApiError::invalid_field(field, "expected a non-negative integer"))
}

fn uint(v: &Value, field: &str) -> Result<usize, ApiError> {
    u64_of(v, field).map(|x| x as usize)
}

fn boolean(v: &Value, field: &str) -> Result<bool, ApiError> {
    v.as_bool()
        .ok_or_else(|| ApiError::invalid_field(field, "expected a boolean"))
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub sequence: PositionSequence,
    /// Present once the sequence has had at least two positions.
    pub model: Option<ValuationModel>,
    pub created_ms: u64,
    pub updated_ms: u64,
}

/// What a snapshot file holds.
#[derive(Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub config: SessionConfig,
    pub sequence: Vec<String>,
    /// Sequence the current model was built on.
    pub model_base: Option<Vec<String>>,
    pub created_ms: u64,
    pub updated_ms: u64,
}

impl Session {
    pub fn new(id: String, config: SessionConfig) -> Self {
        let now = now_ms();
        Self {
            id,
            sequence: PositionSequence::empty(config.model.general.board),
            config,
            model: None,
            created_ms: now,
            updated_ms: now,
        }
    }

    pub fn board(&self) -> BoardConfig {
        self.config.model.general.board
    }

    pub fn summary(&self) -> Value {
        json!({
            "id": self.id,
            "config": self.config.model,
            "freeze_model": self.config.freeze_model,
            "sequence": self.sequence.notations(),
            "model_base": self.model.as_ref().map(|m| m.special().notations()),
            "created_ms": self.created_ms,
            "updated_ms": self.updated_ms,
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id.clone(),
            config: self.config.clone(),
            sequence: self.sequence.notations(),
            model_base: self.model.as_ref().map(|m| m.special().notations()),
            created_ms: self.created_ms,
            updated_ms: self.updated_ms,
        }
    }

    pub fn restore(
        snap: Snapshot,
        bank: impl Fn(&ModelConfig) -> Result<Arc<FeatureBank>, ApiError>,
    ) -> Result<Self, ApiError> {
        let board = snap.config.model.general.board;
        let sequence = PositionSequence::from_tokens(&snap.sequence, board)?;
        let model = match &snap.model_base {
            Some(base) => {
                let base = PositionSequence::from_tokens(base, board)?;
                Some(ValuationModel::with_bank(bank(&snap.config.model)?, base)?)
            }
            None => None,
        };
        Ok(Self {
            id: snap.id,
            config: snap.config,
            sequence,
            model,
            created_ms: snap.created_ms,
            updated_ms: snap.updated_ms,
        })
    }
}

/// Heatmap response: every field with its value and rank, best first, and
/// the top `top` of them. Carries no ids or timestamps, so equal sessions
/// give byte-equal payloads.
pub fn heatmap(
    sequence: &PositionSequence,
    model: &ValuationModel,
    top: usize,
) -> Result<Value, ApiError> {
    let ranking = model.rank_continuations(sequence)?;
    let fields: Vec<Value> = ranking
        .iter()
        .map(|r| json!({ "field": r.position.to_string(), "value": r.value, "rank": r.rank }))
        .collect();
    let top_list: Vec<Value> = fields.iter().take(top).cloned().collect();
    Ok(json!({
        "sequence": sequence.notations(),
        "length": sequence.len(),
        "board_size": sequence.board().size(),
        "model_base": model.special().notations(),
        "fields": fields,
        "top": top_list,
    }))
}
