//! Typed identifiers. All numeric ids are drawn from one store-wide counter,
//! so an id is unique across entity kinds, not just within one.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

macro_rules! numeric_id {
    ($($(#[$meta:meta])* $name:ident),* $(,)?) => {$(
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<$name> for u64 {
            fn from(id: $name) -> u64 {
                id.0
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self, Error> {
                s.parse::<u64>()
                    .map($name)
                    .map_err(|_| Error::validation(format!("malformed id `{s}`")))
            }
        }
    )*};
}

numeric_id!(
    InstitutionId,
    PersonId,
    ProgramId,
    CategoryId,
    ModuleId,
    TopicId,
    LectureId,
    InclusionId,
    GrantId,
);

/// Term identifier: a four-digit year followed by `S` (summer) or `W`
/// (winter), e.g. `2008S`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TermId(String);

impl TermId {
    pub fn new(s: impl Into<String>) -> Result<TermId, Error> {
        let s = s.into();
        let b = s.as_bytes();
        let ok = b.len() == 5 && b[..4].iter().all(u8::is_ascii_digit) && matches!(b[4], b'S' | b'W');
        if ok {
            Ok(TermId(s))
        } else {
            Err(Error::validation(format!("term id `{s}` must match <YYYY><S|W>")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for TermId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        TermId::new(s)
    }
}

impl TryFrom<String> for TermId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        TermId::new(s)
    }
}

impl From<TermId> for String {
    fn from(t: TermId) -> String {
        t.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_pattern() {
        assert!(TermId::new("2008S").is_ok());
        assert!(TermId::new("2008W").is_ok());
        assert!(TermId::new("2008X").is_err());
        assert!(TermId::new("208S").is_err());
        assert!(TermId::new("2008SS").is_err());
        assert!(TermId::new("20O8S").is_err());
    }
}
