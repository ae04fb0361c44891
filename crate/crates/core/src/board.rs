//! Board geometry, chess-style notation and text diagrams.
//!
//! Fields are addressed by a column letter and a 1-based row number
//! (`A1` is the lower-left corner). Internally a field is a zero-based
//! `(col, row)` pair and, for the operator algebra, the complex number
//! `col + row·i`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default number of fields per side.
pub const DEFAULT_BOARD_SIZE: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoardError {
    #[error("board size must be at least 2, got {0}")]
    BoardTooSmall(usize),
    #[error("malformed field `{0}`")]
    Malformed(String),
    #[error("field `{token}` is off the {size}x{size} board")]
    OffBoard { token: String, size: usize },
    #[error("token {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<BoardError>,
    },
}

impl BoardError {
    /// Index of the offending token for sequence-level errors.
    pub fn index(&self) -> Option<usize> {
        match self {
            BoardError::AtIndex { index, .. } => Some(*index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BoardConfig {
    size: usize,
}

impl BoardConfig {
    pub fn new(size: usize) -> Result<Self, BoardError> {
        if size < 2 {
            return Err(BoardError::BoardTooSmall(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn field_count(&self) -> usize {
        self.size * self.size
    }

    pub fn contains(&self, p: Position) -> bool {
        p.col < self.size && p.row < self.size
    }

    /// All fields in `(col, row)` ascending order.
    pub fn fields(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.size).flat_map(move |col| (0..self.size).map(move |row| Position { col, row }))
    }
}

impl Default for BoardConfig {
    fn default() -> Self {
        Self {
            size: DEFAULT_BOARD_SIZE,
        }
    }
}

impl TryFrom<usize> for BoardConfig {
    type Error = BoardError;

    fn try_from(size: usize) -> Result<Self, Self::Error> {
        Self::new(size)
    }
}

impl From<BoardConfig> for usize {
    fn from(b: BoardConfig) -> usize {
        b.size
    }
}

/// A field on the board. Ordering is `(col, row)` ascending, which is also
/// the tie-break order used when ranking continuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub col: usize,
    pub row: usize,
}

impl Position {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.col as f64, self.row as f64)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_label(self.col), self.row + 1)
    }
}

/// Spreadsheet-style column label: `A`..`Z`, then `AA`, `AB`, ...
pub fn column_label(col: usize) -> String {
    let mut n = col + 1;
    let mut out = Vec::new();
    while n > 0 {
        let rem = (n - 1) % 26;
        out.push(b'A' + rem as u8);
        n = (n - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn parse_column(letters: &str) -> Option<usize> {
    let mut n: usize = 0;
    for b in letters.bytes() {
        let d = (b.to_ascii_uppercase() - b'A') as usize + 1;
        n = n.checked_mul(26)?.checked_add(d)?;
    }
    n.checked_sub(1)
}

pub fn format_position(p: Position) -> String {
    p.to_string()
}

pub fn parse_position(text: &str, board: BoardConfig) -> Result<Position, BoardError> {
    let text = text.trim();
    let split = text
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(text.len());
    let (letters, digits) = text.split_at(split);
    if letters.is_empty()
        || digits.is_empty()
        || !digits.bytes().all(|b| b.is_ascii_digit())
        || digits.starts_with('0')
    {
        return Err(BoardError::Malformed(text.to_string()));
    }
    let off_board = || BoardError::OffBoard {
        token: text.to_string(),
        size: board.size(),
    };
    let col = parse_column(letters).ok_or_else(off_board)?;
    let row = digits
        .parse::<usize>()
        .map_err(|_| off_board())?
        .checked_sub(1)
        .ok_or_else(|| BoardError::Malformed(text.to_string()))?;
    let p = Position { col, row };
    if !board.contains(p) {
        return Err(off_board());
    }
    Ok(p)
}

pub fn to_complex(p: Position) -> Complex64 {
    p.to_complex()
}

/// An ordered list of fields on one board. Repeated fields are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionSequence {
    board: BoardConfig,
    positions: Vec<Position>,
}

impl PositionSequence {
    pub fn new(board: BoardConfig, positions: Vec<Position>) -> Result<Self, BoardError> {
        for (index, &p) in positions.iter().enumerate() {
            if !board.contains(p) {
                return Err(BoardError::AtIndex {
                    index,
                    source: Box::new(BoardError::OffBoard {
                        token: p.to_string(),
                        size: board.size(),
                    }),
                });
            }
        }
        Ok(Self { board, positions })
    }

    pub fn empty(board: BoardConfig) -> Self {
        Self {
            board,
            positions: Vec::new(),
        }
    }

    /// Parses whitespace-separated notation, e.g. `"E6 D4 F3"`.
    pub fn parse(text: &str, board: BoardConfig) -> Result<Self, BoardError> {
        Self::from_tokens(text.split_whitespace(), board)
    }

    pub fn from_tokens<I, S>(tokens: I, board: BoardConfig) -> Result<Self, BoardError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let positions = tokens
            .into_iter()
            .enumerate()
            .map(|(index, tok)| {
                parse_position(tok.as_ref(), board).map_err(|e| BoardError::AtIndex {
                    index,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { board, positions })
    }

    /// Accepts either the whitespace form or a JSON array of strings.
    pub fn parse_any(text: &str, board: BoardConfig) -> Result<Self, BoardError> {
        let trimmed = text.trim();
        if trimmed.starts_with('[') {
            let tokens: Vec<String> = serde_json::from_str(trimmed)
                .map_err(|_| BoardError::Malformed(trimmed.to_string()))?;
            Self::from_tokens(tokens, board)
        } else {
            Self::parse(trimmed, board)
        }
    }

    pub fn board(&self) -> BoardConfig {
        self.board
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn last(&self) -> Option<Position> {
        self.positions.last().copied()
    }

    /// A new sequence with `p` appended.
    pub fn with(&self, p: Position) -> Result<Self, BoardError> {
        if !self.board.contains(p) {
            return Err(BoardError::OffBoard {
                token: p.to_string(),
                size: self.board.size(),
            });
        }
        let mut positions = Vec::with_capacity(self.positions.len() + 1);
        positions.extend_from_slice(&self.positions);
        positions.push(p);
        Ok(Self {
            board: self.board,
            positions,
        })
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self {
            board: self.board,
            positions: self.positions[..len.min(self.positions.len())].to_vec(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.positions.iter().map(|p| p.to_complex()).collect()
    }

    pub fn notations(&self) -> Vec<String> {
        self.positions.iter().map(|p| p.to_string()).collect()
    }
}

impl fmt::Display for PositionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.positions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PositionSequence {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, BoardConfig::default())
    }
}

const VALUE_RAMP: &[u8] = b".:-=+*#%@";

/// Renders the board top row first, with sequence indices on occupied
/// fields (the latest index wins on repeats) and an axis row of column
/// letters. With `extra`, unoccupied fields show a one-character value
/// bucket scaled between the smallest and largest shown value.
pub fn render_board(seq: &PositionSequence, extra: Option<&BTreeMap<Position, f64>>) -> String {
    let n = seq.board().size();
    let mut occupied: BTreeMap<Position, usize> = BTreeMap::new();
    for (i, &p) in seq.positions().iter().enumerate() {
        occupied.insert(p, i);
    }

    let bucket = extra.map(|values| {
        let shown = values
            .iter()
            .filter(|(p, _)| !occupied.contains_key(p))
            .map(|(_, &v)| v);
        let (lo, hi) = shown.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        move |v: f64| -> char {
            let top = VALUE_RAMP.len() - 1;
            let idx = if hi > lo {
                (((v - lo) / (hi - lo)) * top as f64).round() as usize
            } else {
                top
            };
            VALUE_RAMP[idx.min(top)] as char
        }
    });

    let max_index_width = seq.len().saturating_sub(1).to_string().len();
    let cell = max_index_width.max(column_label(n - 1).len()) + 1;
    let label = n.to_string().len();

    let mut out = String::new();
    for row in (0..n).rev() {
        out.push_str(&format!("{:>label$} ", row + 1));
        for col in 0..n {
            let p = Position { col, row };
            let text = match (occupied.get(&p), extra.and_then(|m| m.get(&p))) {
                (Some(i), _) => i.to_string(),
                (None, Some(&v)) => bucket.as_ref().map(|b| b(v)).unwrap_or('.').to_string(),
                (None, None) => ".".to_string(),
            };
            out.push_str(&format!("{text:>cell$}"));
        }
        out.push('\n');
    }
    out.push_str(&" ".repeat(label + 1));
    for col in 0..n {
        out.push_str(&format!("{:>cell$}", column_label(col)));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b12() -> BoardConfig {
        BoardConfig::default()
    }

    #[test]
    fn parses_field_notation() {
        assert_eq!(parse_position("A1", b12()).unwrap(), Position::new(0, 0));
        assert_eq!(parse_position("C7", b12()).unwrap(), Position::new(2, 6));
        assert_eq!(parse_position("L12", b12()).unwrap(), Position::new(11, 11));
        assert_eq!(parse_position("I9", b12()).unwrap(), Position::new(8, 8));
        assert_eq!(parse_position("b2", b12()).unwrap(), Position::new(1, 1));
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(matches!(
            parse_position("M1", b12()),
            Err(BoardError::OffBoard { .. })
        ));
        assert!(matches!(
            parse_position("A13", b12()),
            Err(BoardError::OffBoard { .. })
        ));
        for bad in ["", "A", "7", "A0", "A-1", "1A", "A1x", "A01"] {
            assert!(parse_position(bad, b12()).is_err(), "{bad}");
        }
        let err = parse_position("M1", b12()).unwrap_err();
        assert!(err.to_string().contains("M1"));
    }

    #[test]
    fn complex_encoding() {
        assert_eq!(to_complex(Position::new(0, 0)), Complex64::new(0.0, 0.0));
        assert_eq!(to_complex(Position::new(1, 0)), Complex64::new(1.0, 0.0));
        assert_eq!(to_complex(Position::new(2, 6)), Complex64::new(2.0, 6.0));
    }

    #[test]
    fn wide_boards_use_spreadsheet_columns() {
        assert_eq!(column_label(0), "A");
        assert_eq!(column_label(25), "Z");
        assert_eq!(column_label(26), "AA");
        assert_eq!(column_label(27), "AB");
        let b = BoardConfig::new(30).unwrap();
        assert_eq!(parse_position("AB3", b).unwrap(), Position::new(27, 2));
        for p in b.fields() {
            assert_eq!(parse_position(&format_position(p), b).unwrap(), p);
        }
    }

    #[test]
    fn board_size_validated() {
        assert!(BoardConfig::new(1).is_err());
        assert!(BoardConfig::new(2).is_ok());
    }

    #[test]
    fn parse_sequence_cases() {
        let s = PositionSequence::parse("A1 B2 C3", b12()).unwrap();
        assert_eq!(
            s.positions(),
            &[
                Position::new(0, 0),
                Position::new(1, 1),
                Position::new(2, 2)
            ]
        );
        assert!(PositionSequence::parse("", b12()).unwrap().is_empty());
        let err = PositionSequence::parse("A1 Z9", b12()).unwrap_err();
        assert_eq!(err.index(), Some(1));
        assert!(err.to_string().contains("Z9"));

        let j = PositionSequence::parse_any(r#"["E6","D4","F3"]"#, b12()).unwrap();
        assert_eq!(j.to_string(), "E6 D4 F3");
    }

    #[test]
    fn with_appends_without_mutating() {
        let s = PositionSequence::parse("A1", b12()).unwrap();
        let t = s.with(Position::new(1, 1)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(t.len(), 2);
        assert!(s.with(Position::new(12, 0)).is_err());
    }

    #[test]
    fn render_marks_indices() {
        let s = PositionSequence::parse("A1 B2", b12()).unwrap();
        let text = render_board(&s, None);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        // bottom content row is row 1
        assert!(lines[11].starts_with(" 1"));
        assert_eq!(lines[11].split_whitespace().nth(1), Some("0"));
        assert_eq!(lines[10].split_whitespace().nth(2), Some("1"));
        assert!(lines[12].contains('A') && lines[12].contains('L'));
    }

    #[test]
    fn render_empty_and_repeats() {
        let empty = render_board(&PositionSequence::empty(b12()), None);
        assert_eq!(empty.lines().count(), 13);
        for line in empty.lines().take(12) {
            assert!(line.split_whitespace().skip(1).all(|t| t == "."));
        }

        let s = PositionSequence::parse("A1 A1", b12()).unwrap();
        let text = render_board(&s, None);
        let row1 = text.lines().nth(11).unwrap();
        assert_eq!(row1.split_whitespace().nth(1), Some("1"));
        assert!(!row1.split_whitespace().skip(1).any(|t| t == "0"));
    }

    #[test]
    fn render_with_values() {
        let s = PositionSequence::parse("A1", b12()).unwrap();
        let mut extra = BTreeMap::new();
        extra.insert(Position::new(0, 0), 100.0);
        extra.insert(Position::new(1, 0), 0.0);
        extra.insert(Position::new(2, 0), 1.0);
        let text = render_board(&s, Some(&extra));
        let row1: Vec<&str> = text.lines().nth(11).unwrap().split_whitespace().collect();
        assert_eq!(row1[1], "0");
        assert_eq!(row1[2], ".");
        assert_eq!(row1[3], "@");
    }
}
