//! The shared table of content names both parties derive from a secret seed.

use std::collections::HashSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::CovertError;
use crate::ndn::Name;
use crate::netsim::RngStreams;

pub const MAX_BITS_PER_WORD: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookMode {
    Plain,
    /// Every row shares a common prefix that matches nothing else.
    CommonPrefix,
}

/// ℓ rows by 2^m columns of content names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    namespace: Name,
    n: usize,
    m: u8,
    seed: u64,
    rows: Vec<Vec<Name>>,
    prefixes: Option<Vec<Name>>,
}

fn token(rng: &mut impl RngCore) -> String {
    format!("{:012x}", rng.next_u64() & 0xffff_ffff_ffff)
}

fn fresh_token(rng: &mut impl RngCore, used: &mut HashSet<String>) -> String {
    loop {
        let t = token(rng);
        if used.insert(t.clone()) {
            return t;
        }
    }
}

/// Deterministic in all inputs. Names are random tokens under `namespace`;
/// in common-prefix mode each row gets `namespace/<row>/<col>`.
pub fn derive_codebook(
    seed: u64,
    n: usize,
    m: u8,
    namespace: &Name,
    mode: CodebookMode,
) -> Result<Codebook, CovertError> {
    if !(1..=MAX_BITS_PER_WORD).contains(&m) {
        return Err(CovertError::BitsPerWord(m));
    }
    if n == 0 {
        return Err(CovertError::EmptyMessage);
    }
    let rows_n = n.div_ceil(m as usize);
    let cols = 1usize << m;
    let mut rng = RngStreams::new(seed).stream("codebook");
    let mut used = HashSet::new();
    let mut rows = Vec::with_capacity(rows_n);
    let mut prefixes = Vec::new();
    for _ in 0..rows_n {
        let row = match mode {
            CodebookMode::Plain => (0..cols)
                .map(|_| namespace.child(fresh_token(&mut rng, &mut used)))
                .collect::<Result<Vec<_>, _>>()?,
            CodebookMode::CommonPrefix => {
                let prefix = namespace.child(fresh_token(&mut rng, &mut used))?;
                let mut in_row = HashSet::new();
                let row = (0..cols)
                    .map(|_| prefix.child(fresh_token(&mut rng, &mut in_row)))
                    .collect::<Result<Vec<_>, _>>()?;
                prefixes.push(prefix);
                row
            }
        };
        rows.push(row);
    }
    Ok(Codebook {
        namespace: namespace.clone(),
        n,
        m,
        seed,
        rows,
        prefixes: (mode == CodebookMode::CommonPrefix).then_some(prefixes),
    })
}

impl Codebook {
    pub fn namespace(&self) -> &Name {
        &self.namespace
    }

    pub fn message_len(&self) -> usize {
        self.n
    }

    pub fn bits_per_word(&self) -> u8 {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> CodebookMode {
        if self.prefixes.is_some() {
            CodebookMode::CommonPrefix
        } else {
            CodebookMode::Plain
        }
    }

    /// ℓ.
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> usize {
        1 << self.m
    }

    pub fn row(&self, i: usize) -> &[Name] {
        &self.rows[i]
    }

    pub fn name(&self, row: usize, column: u32) -> &Name {
        &self.rows[row][column as usize]
    }

    pub fn prefix(&self, row: usize) -> Option<&Name> {
        self.prefixes.as_ref().map(|p| &p[row])
    }

    pub fn column_of(&self, row: usize, name: &Name) -> Option<u32> {
        self.rows[row].iter().position(|n| n == name).map(|c| c as u32)
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.rows.iter().flatten()
    }
}
