use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CovertError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Sbtc,
    Sbtp,
    Tdp,
    Matrix,
    Cpc,
}

impl Technique {
    pub const ALL: [Technique; 5] = [
        Technique::Sbtc,
        Technique::Sbtp,
        Technique::Tdp,
        Technique::Matrix,
        Technique::Cpc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Sbtc => "sbtc",
            Technique::Sbtp => "sbtp",
            Technique::Tdp => "tdp",
            Technique::Matrix => "matrix",
            Technique::Cpc => "cpc",
        }
    }

    /// Techniques whose receiver compares an RTT against a threshold.
    pub fn uses_threshold(self) -> bool {
        matches!(self, Technique::Sbtc | Technique::Sbtp | Technique::Tdp)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = CovertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CovertError::UnknownTechnique(s.to_string()))
    }
}

/// A decoded bit; erasures stay distinct from both values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    Zero,
    One,
    Erasure,
}

impl Symbol {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erasure => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Erasure => 'E',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn new(bits: Vec<bool>) -> Result<Self, CovertError> {
        if bits.is_empty() {
            return Err(CovertError::EmptyMessage);
        }
        Ok(Self { bits })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, CovertError> {
        Self::new((0..n).map(|_| rng.random()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Splits into ⌈n/m⌉ big-endian words; the last is zero-padded.
    pub fn words(&self, m: u8) -> Vec<u32> {
        self.bits
            .chunks(m as usize)
            .map(|chunk| {
                let mut w = 0u32;
                for i in 0..m as usize {
                    w = (w << 1) | u32::from(chunk.get(i).copied().unwrap_or(false));
                }
                w
            })
            .collect()
    }

    /// Inverse of [`Message::words`], truncated to `n` bits.
    pub fn from_words(words: &[u32], m: u8, n: usize) -> Result<Self, CovertError> {
        let mut bits = Vec::with_capacity(words.len() * m as usize);
        for w in words {
            for i in (0..m).rev() {
                bits.push((w >> i) & 1 == 1);
            }
        }
        bits.truncate(n);
        Self::new(bits)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Message {
    type Err = CovertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CovertError::InvalidParams(format!("bad bit {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_big_endian() {
        let m: Message = "10110110".parse().unwrap();
        assert_eq!(m.words(4), vec![11, 6]);
        assert_eq!(m.words(1), vec![1, 0, 1, 1, 0, 1, 1, 0]);
        let odd: Message = "101".parse().unwrap();
        assert_eq!(odd.words(2), vec![2, 2]);
        assert_eq!(Message::from_words(&[2, 2], 2, 3).unwrap(), odd);
    }

    #[test]
    fn technique_names() {
        for t in Technique::ALL {
            assert_eq!(t.as_str().parse::<Technique>().unwrap(), t);
        }
        assert!("morse".parse::<Technique>().is_err());
        assert!(Message::new(vec![]).is_err());
    }
}
