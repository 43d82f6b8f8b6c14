use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("empty {kind} id")]
    Empty { kind: &'static str },
    #[error("{kind} id {id:?} contains a forbidden character (comma, quote, or control)")]
    ForbiddenChar { kind: &'static str, id: String },
    #[error("item id {0:?} is not an ISBN-10 or ISBN-13")]
    NotIsbn(String),
}

fn check_plain(kind: &'static str, id: &str) -> Result<(), IdError> {
    if id.is_empty() {
        return Err(IdError::Empty { kind });
    }
    if id
        .chars()
        .any(|c| c == ',' || c == '"' || c.is_control() || c.is_whitespace())
    {
        return Err(IdError::ForbiddenChar {
            kind,
            id: id.to_string(),
        });
    }
    Ok(())
}

/// Opaque retailer identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StoreId(String);

impl StoreId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        check_plain("store", &id)?;
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Book identifier: the ISBN-10 or ISBN-13 string, without hyphens.
///
/// Only the shape is checked (13 digits, or 9 digits followed by a digit or
/// `X`). Check digits are not verified since catalogue feeds routinely carry
/// ISBNs with bad check digits that still identify a unique edition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        check_plain("item", &id)?;
        let bytes = id.as_bytes();
        let shaped = match bytes.len() {
            13 => bytes.iter().all(u8::is_ascii_digit),
            10 => {
                bytes[..9].iter().all(u8::is_ascii_digit)
                    && (bytes[9].is_ascii_digit() || bytes[9] == b'X')
            }
            _ => false,
        };
        if !shaped {
            return Err(IdError::NotIsbn(id));
        }
        Ok(Self(id))
    }

    /// Builds an ISBN-13 in the `978` range from a sequence number, with a
    /// valid check digit.
    pub fn isbn13_from_seq(seq: u32) -> Self {
        let body = format!("978{seq:09}");
        let sum: u32 = body
            .bytes()
            .enumerate()
            .map(|(i, b)| {
                let d = u32::from(b - b'0');
                if i % 2 == 0 {
                    d
                } else {
                    3 * d
                }
            })
            .sum();
        let check = (10 - sum % 10) % 10;
        Self(format!("{body}{check}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

macro_rules! string_newtype_impls {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = IdError;
            fn try_from(s: String) -> Result<Self, IdError> {
                <$t>::new(s)
            }
        }

        impl From<$t> for String {
            fn from(id: $t) -> String {
                id.0
            }
        }

        impl std::str::FromStr for $t {
            type Err = IdError;
            fn from_str(s: &str) -> Result<Self, IdError> {
                <$t>::new(s)
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_newtype_impls!(StoreId);
string_newtype_impls!(ItemId);

/// A price in integer cents. Currency is not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub u64);

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isbn_shapes() {
        assert!(ItemId::new("9780262033848").is_ok());
        assert!(ItemId::new("026203384X").is_ok());
        assert!(ItemId::new("0262033844").is_ok());
        assert!(matches!(ItemId::new("97802620"), Err(IdError::NotIsbn(_))));
        assert!(matches!(ItemId::new("X262033844"), Err(IdError::NotIsbn(_))));
        assert!(matches!(ItemId::new(""), Err(IdError::Empty { .. })));
    }

    #[test]
    fn generated_isbn13_has_valid_check_digit() {
        // 978-0-306-40615-7 is the textbook example.
        assert_eq!(ItemId::isbn13_from_seq(30640615).as_str(), "9780306406157");
        for seq in [0, 1, 42, 999_999_999] {
            let id = ItemId::isbn13_from_seq(seq);
            assert_eq!(id.as_str().len(), 13);
            assert!(ItemId::new(id.as_str()).is_ok());
        }
    }

    #[test]
    fn store_ids_reject_commas() {
        assert!(StoreId::new("amazon").is_ok());
        assert!(StoreId::new("a,b").is_err());
        assert!(StoreId::new("has space").is_err());
    }
}
