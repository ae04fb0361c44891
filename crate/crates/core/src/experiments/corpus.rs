//! Bundled sequences: the 15-entry regular corpus used by the ablation
//! study, generators for long regular sequences, and a few named
//! sequences for demos.

use std::fmt;
use std::str::FromStr;

use crate::board::{BoardConfig, Position, PositionSequence};

/// A base sequence and the continuation positions expected after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub base: PositionSequence,
    pub continuations: Vec<Position>,
}

impl CorpusEntry {
    /// Splits a full sequence into a base of `base_len` and its continuations.
    pub fn split(name: &str, full: PositionSequence, base_len: usize) -> Self {
        let continuations = full.positions()[base_len..].to_vec();
        Self {
            name: name.to_string(),
            base: full.prefix(base_len),
            continuations,
        }
    }

    /// Base extended by the first `k` designated continuations.
    pub fn prefix_with(&self, k: usize) -> PositionSequence {
        let mut positions = self.base.positions().to_vec();
        positions.extend_from_slice(&self.continuations[..k]);
        PositionSequence::new(self.base.board(), positions).expect("corpus on board")
    }
}

/// Walks `steps` cyclically from `start`. Panics if it leaves the board.
pub fn walk(
    board: BoardConfig,
    start: (i64, i64),
    steps: &[(i64, i64)],
    len: usize,
) -> PositionSequence {
    let mut cur = start;
    let mut positions = Vec::with_capacity(len);
    for i in 0..len {
        if i > 0 {
            let (dx, dy) = steps[(i - 1) % steps.len()];
            cur = (cur.0 + dx, cur.1 + dy);
        }
        let n = board.size() as i64;
        assert!(
            (0..n).contains(&cur.0) && (0..n).contains(&cur.1),
            "walk leaves the board at step {i}"
        );
        positions.push(Position::new(cur.0 as usize, cur.1 as usize));
    }
    PositionSequence::new(board, positions).expect("checked above")
}

const CORPUS_LEN: usize = 12;
const CORPUS_BASE: usize = 6;

/// Fifteen regular sequences of length 12 on the 12x12 board, split into a
/// base of 6 and 6 designated continuations (90 continuations overall).
pub fn regular_corpus() -> Vec<CorpusEntry> {
    let b = BoardConfig::default();
    let w = |start, steps: &[(i64, i64)]| walk(b, start, steps, CORPUS_LEN);
    let spiral = PositionSequence::parse("F6 G6 G7 F7 E7 E6 E5 F5 G5 H5 H6 H7", b).expect("static");
    let entries = [
        ("diagonal", w((0, 0), &[(1, 1)])),
        ("row", w((0, 3), &[(1, 0)])),
        ("column", w((2, 0), &[(0, 1)])),
        ("zigzag", w((0, 1), &[(1, 1), (1, -1)])),
        ("wide-zigzag", w((0, 2), &[(1, 3), (1, -3)])),
        ("staircase", w((0, 0), &[(1, 0), (0, 1)])),
        ("tall-staircase", w((0, 0), &[(1, 0), (0, 2)])),
        ("knight-zigzag", w((0, 0), &[(1, 2), (1, -2)])),
        ("knight-weave", w((0, 0), &[(2, 1), (-2, 1)])),
        (
            "knight-loop",
            w((4, 4), &[(2, 1), (-1, 2), (-2, -1), (1, -2)]),
        ),
        ("spiral", spiral),
        ("doubled-diagonal", w((0, 0), &[(0, 0), (1, 1)])),
        ("turning-staircase", w((0, 0), &[(1, 0), (1, 1), (0, 1)])),
        ("interleaved-rows", w((0, 1), &[(0, 7), (1, -7)])),
        ("descending-staircase", w((0, 11), &[(1, -1), (1, 0)])),
    ];
    entries
        .into_iter()
        .map(|(name, full)| CorpusEntry::split(name, full, CORPUS_BASE))
        .collect()
}

/// Generators for regular sequences of any length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularPattern {
    /// Four knight moves, each the previous one turned by 90 degrees.
    KnightLoop,
    /// Eight knight moves around an octagon.
    KnightOctagon,
    /// Boustrophedon over the rows: right along a row, up one, back left.
    Snake,
}

impl RegularPattern {
    pub const ALL: [RegularPattern; 3] = [
        RegularPattern::KnightLoop,
        RegularPattern::KnightOctagon,
        RegularPattern::Snake,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RegularPattern::KnightLoop => "knight-loop",
            RegularPattern::KnightOctagon => "knight-octagon",
            RegularPattern::Snake => "snake",
        }
    }

    pub fn generate(self, len: usize, board: BoardConfig) -> PositionSequence {
        let n = board.size() as i64;
        match self {
            RegularPattern::KnightLoop => {
                let c = n / 2 - 2;
                walk(board, (c, c), &[(2, 1), (-1, 2), (-2, -1), (1, -2)], len)
            }
            RegularPattern::KnightOctagon => {
                let c = n / 2 - 2;
                walk(
                    board,
                    (c, c - 1),
                    &[
                        (2, 1),
                        (1, 2),
                        (-1, 2),
                        (-2, 1),
                        (-2, -1),
                        (-1, -2),
                        (1, -2),
                        (2, -1),
                    ],
                    len,
                )
            }
            RegularPattern::Snake => {
                let positions = (0..len)
                    .map(|i| {
                        let i = i % (board.field_count());
                        let row = i / board.size();
                        let along = i % board.size();
                        let col = if row.is_multiple_of(2) {
                            along
                        } else {
                            board.size() - 1 - along
                        };
                        Position::new(col, row)
                    })
                    .collect();
                PositionSequence::new(board, positions).expect("snake stays on board")
            }
        }
    }
}

impl fmt::Display for RegularPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RegularPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| format!("unknown pattern `{s}`"))
    }
}

/// Named demo sequences on the default board.
pub fn named_sequence(name: &str) -> Option<PositionSequence> {
    let text = match name {
        "diagonal" => "A1 B2 C3 D4 E5 F6",
        "zigzag" => "B2 C3 D2 E3",
        "knight" => "E6 D4 F3 H2 G4 F2",
        "scattered" => "G6 E3 H11 B4 L5 C9",
        "hook" => "C10 B9 B5 C4",
        "staircase" => "B3 B5 D5 D7 F7 F9 H9",
        "jump" => "A7 B6 C5 D4 E3 C7 D6 E5",
        _ => return None,
    };
    Some(PositionSequence::parse(text, BoardConfig::default()).expect("static"))
}

pub const NAMED_SEQUENCES: &[&str] = &[
    "diagonal",
    "zigzag",
    "knight",
    "scattered",
    "hook",
    "staircase",
    "jump",
];
