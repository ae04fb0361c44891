//! Operator algebra on complex sequences.
//!
//! An operator is a convolution of length `l`, followed by a chain of
//! difference (`D`) and quotient (`Q`) steps, followed by a projection to
//! the reals. Chains are written outermost-first, so `QD` applies `D`
//! and then `Q`. Any chain containing `Q` after a `D` is invariant under
//! `z -> a·z + b` for `a != 0`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Below this modulus a complex value has no meaningful direction and its
/// angle is taken to be 0.
const ANGLE_ZERO_TOL: f64 = 1e-12;

pub fn convolve(c: &[Complex64], len: usize) -> Vec<Complex64> {
    assert!(len >= 1, "convolution length must be at least 1");
    if c.len() < len {
        return Vec::new();
    }
    if len == 1 {
        return c.to_vec();
    }
    c.windows(len)
        .map(|w| w.iter().fold(Complex64::new(0.0, 0.0), |acc, &z| acc + z))
        .collect()
}

pub fn difference(c: &[Complex64]) -> Vec<Complex64> {
    c.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Successive ratios; a zero denominator yields `0`.
pub fn quotient(c: &[Complex64]) -> Vec<Complex64> {
    c.windows(2)
        .map(|w| {
            if w[0].re == 0.0 && w[0].im == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                w[1] / w[0]
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Projection {
    RealPart,
    ImagPart,
    Modulus,
    Angle,
}

impl Projection {
    pub const ALL: [Projection; 4] = [
        Projection::RealPart,
        Projection::ImagPart,
        Projection::Modulus,
        Projection::Angle,
    ];

    pub fn apply(self, z: Complex64) -> f64 {
        match self {
            Projection::RealPart => z.re,
            Projection::ImagPart => z.im,
            Projection::Modulus => z.norm(),
            Projection::Angle => angle(z),
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Projection::RealPart => "re",
            Projection::ImagPart => "im",
            Projection::Modulus => "mod",
            Projection::Angle => "arg",
        }
    }
}

/// Principal argument in `(-π, π]`, with `angle(0) = 0`. Values on the
/// negative real axis up to rounding noise map to `π`.
fn angle(z: Complex64) -> f64 {
    let r = z.norm();
    if r <= ANGLE_ZERO_TOL {
        return 0.0;
    }
    if z.re < 0.0 && z.im.abs() <= ANGLE_ZERO_TOL * r {
        return std::f64::consts::PI;
    }
    z.im.atan2(z.re)
}

pub fn project(c: &[Complex64], p: Projection) -> Vec<f64> {
    c.iter().map(|&z| p.apply(z)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Difference,
    Quotient,
}

impl Step {
    fn apply(self, c: &[Complex64]) -> Vec<Complex64> {
        match self {
            Step::Difference => difference(c),
            Step::Quotient => quotient(c),
        }
    }
}

/// The transform part of an operator.
///
/// `Identity` (no step at all) is only used by the convolution-only
/// feature set of the ablation study; regular pools always start with `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformChain {
    Identity,
    D,
    DD,
    QD,
    DQD,
    QQD,
}

impl TransformChain {
    /// The five chains used for regular operator pools.
    pub const STANDARD: [TransformChain; 5] = [
        TransformChain::D,
        TransformChain::DD,
        TransformChain::QD,
        TransformChain::DQD,
        TransformChain::QQD,
    ];

    /// Steps in application order (innermost first).
    pub fn steps(self) -> &'static [Step] {
        use Step::*;
        match self {
            TransformChain::Identity => &[],
            TransformChain::D => &[Difference],
            TransformChain::DD => &[Difference, Difference],
            TransformChain::QD => &[Difference, Quotient],
            TransformChain::DQD => &[Difference, Quotient, Difference],
            TransformChain::QQD => &[Difference, Quotient, Quotient],
        }
    }

    pub fn has_quotient(self) -> bool {
        self.steps().contains(&Step::Quotient)
    }

    pub fn code(self) -> &'static str {
        match self {
            TransformChain::Identity => "I",
            TransformChain::D => "D",
            TransformChain::DD => "DD",
            TransformChain::QD => "QD",
            TransformChain::DQD => "DQD",
            TransformChain::QQD => "QQD",
        }
    }

    pub fn apply(self, c: &[Complex64]) -> Vec<Complex64> {
        let mut cur = c.to_vec();
        for &s in self.steps() {
            cur = s.apply(&cur);
        }
        cur
    }
}

/// A composed operator `projection ∘ chain ∘ convolution`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorSpec {
    pub conv_len: usize,
    pub chain: TransformChain,
    pub proj: Projection,
}

impl OperatorSpec {
    pub fn new(conv_len: usize, chain: TransformChain, proj: Projection) -> Self {
        assert!(conv_len >= 1, "conv_len must be at least 1");
        Self {
            conv_len,
            chain,
            proj,
        }
    }

    /// Shortest input yielding exactly one value.
    pub fn min_length(&self) -> usize {
        self.conv_len + self.chain.steps().len()
    }

    pub fn apply(&self, c: &[Complex64]) -> Vec<f64> {
        if c.len() < self.min_length() {
            return Vec::new();
        }
        project(&self.chain.apply(&convolve(c, self.conv_len)), self.proj)
    }

    /// Value on the last `min_length` points, if there are that many.
    pub fn apply_tail(&self, c: &[Complex64]) -> Option<f64> {
        let m = self.min_length();
        if c.len() < m {
            return None;
        }
        self.apply(&c[c.len() - m..]).first().copied()
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C{}|{}|{}",
            self.conv_len,
            self.chain.code(),
            self.proj.code()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid operator spec `{0}` (expected e.g. `C2|QD|mod`)")]
pub struct ParseOperatorError(pub String);

impl FromStr for OperatorSpec {
    type Err = ParseOperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseOperatorError(s.to_string());
        let mut parts = s.split('|');
        let (conv, chain, proj) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(err()),
        };
        let conv_len: usize = conv
            .strip_prefix('C')
            .and_then(|n| n.parse().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(err)?;
        let chain = [TransformChain::Identity]
            .into_iter()
            .chain(TransformChain::STANDARD)
            .find(|c| c.code() == chain)
            .ok_or_else(err)?;
        let proj = Projection::ALL
            .into_iter()
            .find(|p| p.code() == proj)
            .ok_or_else(err)?;
        Ok(Self {
            conv_len,
            chain,
            proj,
        })
    }
}

impl Serialize for OperatorSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
