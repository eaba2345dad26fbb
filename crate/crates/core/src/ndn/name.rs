//! Hierarchical NDN names and their canonical text form.
//!
//! A name is a non-empty sequence of non-empty byte-string components. The
//! canonical text form joins components with `/` and percent-escapes every
//! byte outside the URI "unreserved" set, so `parse(render(n)) == n` for any
//! name, including ones with binary components.
//!
//! Names order component-wise (bytes compared lexicographically, shorter
//! component first on a common prefix). Under that order every name sharing a
//! prefix `p` sits in one contiguous range starting at `p`, which the Content
//! Store and producer catalog rely on for prefix lookups.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default cap on component count.
pub const DEFAULT_MAX_COMPONENTS: usize = 32;
/// Default cap on a single component's byte length.
pub const DEFAULT_MAX_COMPONENT_LEN: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("name must start with '/': {0:?}")]
    MissingLeadingSlash(String),
    #[error("name has no components")]
    Empty,
    #[error("empty component at position {0}")]
    EmptyComponent(usize),
    #[error("bad percent escape at byte offset {0}")]
    BadEscape(usize),
    #[error("name has {count} components, limit is {limit}")]
    TooManyComponents { count: usize, limit: usize },
    #[error("component {index} is {len} bytes, limit is {limit}")]
    ComponentTooLong {
        index: usize,
        len: usize,
        limit: usize,
    },
}

/// Size caps applied when constructing names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NameLimits {
    pub max_components: usize,
    pub max_component_len: usize,
}

impl Default for NameLimits {
    fn default() -> Self {
        Self {
            max_components: DEFAULT_MAX_COMPONENTS,
            max_component_len: DEFAULT_MAX_COMPONENT_LEN,
        }
    }
}

impl NameLimits {
    fn check(&self, components: &[Box<[u8]>]) -> Result<(), NameError> {
        if components.is_empty() {
            return Err(NameError::Empty);
        }
        if components.len() > self.max_components {
            return Err(NameError::TooManyComponents {
                count: components.len(),
                limit: self.max_components,
            });
        }
        for (index, c) in components.iter().enumerate() {
            if c.is_empty() {
                return Err(NameError::EmptyComponent(index));
            }
            if c.len() > self.max_component_len {
                return Err(NameError::ComponentTooLong {
                    index,
                    len: c.len(),
                    limit: self.max_component_len,
                });
            }
        }
        Ok(())
    }
}

/// An NDN name. Cloning is cheap (shared component storage).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    components: Arc<[Box<[u8]>]>,
}

impl Name {
    /// Builds a name from raw components under the default limits.
    pub fn from_components<I, C>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[u8]>,
    {
        Self::from_components_with(components, NameLimits::default())
    }

    pub fn from_components_with<I, C>(components: I, limits: NameLimits) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[u8]>,
    {
        let components: Vec<Box<[u8]>> = components
            .into_iter()
            .map(|c| c.as_ref().to_vec().into_boxed_slice())
            .collect();
        limits.check(&components)?;
        Ok(Self {
            components: components.into(),
        })
    }

    pub fn components(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.components.iter().map(|c| &c[..])
    }

    pub fn component(&self, index: usize) -> Option<&[u8]> {
        self.components.get(index).map(|c| &c[..])
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// Always false: a name has at least one component.
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Appends one component. Fails if the result breaks the default limits.
    pub fn child(&self, component: impl AsRef<[u8]>) -> Result<Self, NameError> {
        let mut v: Vec<Box<[u8]>> = self.components.iter().cloned().collect();
        v.push(component.as_ref().to_vec().into_boxed_slice());
        NameLimits::default().check(&v)?;
        Ok(Self { components: v.into() })
    }

    /// The leading `len` components, or `None` when `len` is zero or too long.
    pub fn prefix(&self, len: usize) -> Option<Self> {
        if len == 0 || len > self.len() {
            return None;
        }
        if len == self.len() {
            return Some(self.clone());
        }
        Some(Self {
            components: self.components[..len].to_vec().into(),
        })
    }

    /// All non-empty prefixes, shortest first, ending with the name itself.
    pub fn prefixes(&self) -> impl Iterator<Item = Name> + '_ {
        (1..=self.len()).filter_map(move |l| self.prefix(l))
    }

    /// True iff `self` is a (possibly equal) leading subsequence of `other`.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.len() <= other.len()
            && self
                .components
                .iter()
                .zip(other.components.iter())
                .all(|(a, b)| a == b)
    }

    /// Canonical text form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in self.components.iter() {
            out.push('/');
            for &b in c.iter() {
                if is_unreserved(b) {
                    out.push(b as char);
                } else {
                    out.push_str(&format!("%{b:02X}"));
                }
            }
        }
        out
    }
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Parses the canonical text form under the default limits.
///
/// A single trailing `/` is accepted and ignored (`/common/prefix/` names the
/// same prefix as `/common/prefix`); any other empty component is an error.
pub fn parse_name(text: &str) -> Result<Name, NameError> {
    parse_name_with(text, NameLimits::default())
}

pub fn parse_name_with(text: &str, limits: NameLimits) -> Result<Name, NameError> {
    let bytes = text.as_bytes();
    if bytes.first() != Some(&b'/') {
        return Err(NameError::MissingLeadingSlash(text.to_owned()));
    }
    let body = &bytes[1..];
    let body = body.strip_suffix(b"/").unwrap_or(body);
    if body.is_empty() {
        return Err(NameError::Empty);
    }
    let mut components = Vec::new();
    let mut offset = 1;
    for (index, raw) in body.split(|&b| b == b'/').enumerate() {
        if raw.is_empty() {
            return Err(NameError::EmptyComponent(index));
        }
        let mut decoded = Vec::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            if raw[i] == b'%' {
                let hi = raw.get(i + 1).copied().and_then(hex_val);
                let lo = raw.get(i + 2).copied().and_then(hex_val);
                match (hi, lo) {
                    (Some(h), Some(l)) => decoded.push(h << 4 | l),
                    _ => return Err(NameError::BadEscape(offset + i)),
                }
                i += 3;
            } else {
                decoded.push(raw[i]);
                i += 1;
            }
        }
        offset += raw.len() + 1;
        components.push(decoded.into_boxed_slice());
    }
    limits.check(&components)?;
    Ok(Name {
        components: components.into(),
    })
}

/// True iff `p` is a (possibly equal) leading subsequence of `n`.
pub fn is_prefix_of(p: &Name, n: &Name) -> bool {
    p.is_prefix_of(n)
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({})", self.render())
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_name(&s).map_err(serde::de::Error::custom)
    }
}
