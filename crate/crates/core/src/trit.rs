// SPDX-License-Identifier: Apache-2.0

//! Balanced-ternary digits and words, the line codings used to drive inputs
//! and hold weights in the array, and the 8-bit to 5-trit quantization path.
//!
//! Trit order inside a [`TritWord`] is little-endian: index 0 carries weight
//! 3^0. The text form is most-significant-first over `-`, `0`, `+`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Trits per word for weights and inputs.
pub const DEFAULT_WIDTH: usize = 5;

/// A single balanced-ternary digit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
#[repr(i8)]
pub enum Trit {
    Neg = -1,
    Zero = 0,
    Pos = 1,
}

impl Trit {
    pub const ALL: [Trit; 3] = [Trit::Neg, Trit::Zero, Trit::Pos];

    #[inline]
    pub const fn value(self) -> i8 {
        self as i8
    }

    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Trit::Neg),
            0 => Ok(Trit::Zero),
            1 => Ok(Trit::Pos),
            _ => Err(Error::Validation(format!("{v} is not a trit"))),
        }
    }

    #[inline]
    pub const fn neg(self) -> Self {
        match self {
            Trit::Neg => Trit::Pos,
            Trit::Zero => Trit::Zero,
            Trit::Pos => Trit::Neg,
        }
    }

    pub const fn symbol(self) -> char {
        match self {
            Trit::Neg => '-',
            Trit::Zero => '0',
            Trit::Pos => '+',
        }
    }
}

impl TryFrom<i8> for Trit {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        Trit::from_i8(v)
    }
}

impl From<Trit> for i8 {
    fn from(t: Trit) -> i8 {
        t.value()
    }
}

/// Largest magnitude representable by `width` balanced trits: (3^width - 1) / 2.
pub fn max_magnitude(width: usize) -> i64 {
    (3i64.pow(width as u32) - 1) / 2
}

/// Fixed-width balanced-ternary word, little-endian.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TritWord {
    trits: Vec<Trit>,
}

impl TritWord {
    pub fn zero(width: usize) -> Self {
        Self {
            trits: vec![Trit::Zero; width],
        }
    }

    /// Builds a word from little-endian trits.
    pub fn from_trits(trits: Vec<Trit>) -> Result<Self> {
        if trits.is_empty() {
            return Err(Error::Validation("trit word must have positive width".into()));
        }
        Ok(Self { trits })
    }

    pub fn width(&self) -> usize {
        self.trits.len()
    }

    pub fn trits(&self) -> &[Trit] {
        &self.trits
    }

    pub fn trit(&self, k: usize) -> Trit {
        self.trits[k]
    }

    pub fn set_trit(&mut self, k: usize, t: Trit) {
        self.trits[k] = t;
    }

    pub fn value(&self) -> i64 {
        from_balanced_ternary(self)
    }

    pub fn negated(&self) -> Self {
        Self {
            trits: self.trits.iter().map(|t| t.neg()).collect(),
        }
    }
}

impl fmt::Display for TritWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.trits.iter().rev() {
            write!(f, "{}", t.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for TritWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trits = s
            .chars()
            .rev()
            .map(|c| match c {
                '-' => Ok(Trit::Neg),
                '0' => Ok(Trit::Zero),
                '+' => Ok(Trit::Pos),
                _ => Err(Error::Parse(format!("invalid trit symbol {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        TritWord::from_trits(trits)
    }
}

pub fn to_balanced_ternary(v: i64, width: usize) -> Result<TritWord> {
    if width == 0 {
        return Err(Error::Validation("trit word must have positive width".into()));
    }
    let max = max_magnitude(width);
    if v.abs() > max {
        return Err(Error::Range { value: v, width, max });
    }
    let mut rest = v;
    let mut trits = Vec::with_capacity(width);
    for _ in 0..width {
        let t = match rest.rem_euclid(3) {
            0 => Trit::Zero,
            1 => Trit::Pos,
            _ => Trit::Neg,
        };
        rest = (rest - t.value() as i64) / 3;
        trits.push(t);
    }
    debug_assert_eq!(rest, 0);
    Ok(TritWord { trits })
}

pub fn from_balanced_ternary(w: &TritWord) -> i64 {
    w.trits.iter().rev().fold(0i64, |acc, t| acc * 3 + t.value() as i64)
}

/// Saturating conversion of a signed 8-bit value to a `width`-trit word.
pub fn truncate_to_trits(v8: i8, width: usize) -> TritWord {
    let max = max_magnitude(width);
    let clamped = (v8 as i64).clamp(-max, max);
    to_balanced_ternary(clamped, width).expect("clamped value is representable")
}

/// The integer a truncated 8-bit operand contributes to a MAC.
#[inline]
pub fn truncated_value(v8: i8, width: usize) -> i64 {
    let max = max_magnitude(width);
    (v8 as i64).clamp(-max, max)
}

/// Two SRAM bits holding one weight trit. `(0, 1)` is not a legal state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightBitPair {
    q1: bool,
    q2: bool,
}

impl WeightBitPair {
    pub fn new(q1: bool, q2: bool) -> Result<Self> {
        if !q1 && q2 {
            return Err(Error::IllegalBitPair { q1: 0, q2: 1 });
        }
        Ok(Self { q1, q2 })
    }

    pub fn q1(self) -> bool {
        self.q1
    }

    pub fn q2(self) -> bool {
        self.q2
    }
}

pub fn weight_trit_to_bits(t: Trit) -> WeightBitPair {
    match t {
        Trit::Pos => WeightBitPair { q1: false, q2: false },
        Trit::Zero => WeightBitPair { q1: true, q2: false },
        Trit::Neg => WeightBitPair { q1: true, q2: true },
    }
}

pub fn bits_to_weight_trit(q1: bool, q2: bool) -> Result<Trit> {
    match (q1, q2) {
        (false, false) => Ok(Trit::Pos),
        (true, false) => Ok(Trit::Zero),
        (true, true) => Ok(Trit::Neg),
        (false, true) => Err(Error::IllegalBitPair { q1: 0, q2: 1 }),
    }
}

/// Differential input line levels for one input trit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputLinePattern {
    pub in1: bool,
    pub in2: bool,
    pub inb1: bool,
    pub inb2: bool,
}

pub fn input_trit_to_lines(t: Trit) -> InputLinePattern {
    let (in1, in2) = match t {
        Trit::Pos => (true, true),
        Trit::Zero => (true, false),
        Trit::Neg => (false, false),
    };
    InputLinePattern {
        in1,
        in2,
        inb1: !in1,
        inb2: !in2,
    }
}

/// Quantizes real weights to 8 bits with round-half-away-from-zero and
/// saturation, then truncates each to a 5-trit word.
pub fn quantize_weight_tensor<T: Scalar>(values: &[T], scale: T) -> Result<Vec<TritWord>> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::Validation(format!("scale must be positive, got {scale}")));
    }
    values
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite weight at index {idx}")));
            }
            let q = quantize_to_i8(v, scale);
            Ok(truncate_to_trits(q, DEFAULT_WIDTH))
        })
        .collect()
}

/// Round-half-away-from-zero then saturate to the signed 8-bit range.
pub fn quantize_to_i8<T: Scalar>(v: T, scale: T) -> i8 {
    let r = (v / scale).round();
    let r = r.max(T::lit(-128.0)).min(T::lit(127.0));
    r.to_f64_lossy() as i8
}
