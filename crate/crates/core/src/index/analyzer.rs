use std::fmt;

use serde::{Deserialize, Serialize};

use crate::enrich::EnrichedDoc;

pub const MIN_TOKEN_CHARS: usize = 2;

/// Lowercases `text`, splits it on every non-alphanumeric character and drops
/// tokens shorter than two characters. No stemming, no stop words.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = 0usize;
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
            chars += 1;
        } else if !current.is_empty() {
            if chars >= MIN_TOKEN_CHARS {
                out.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
            chars = 0;
        }
    }
    if chars >= MIN_TOKEN_CHARS {
        out.push(current);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    SchemaName = 0,
    AttrNames = 1,
    AuthorAlias = 2,
    SchemaVersion = 3,
    RawText = 4,
}

pub const FIELD_COUNT: usize = 5;

impl Field {
    pub const ALL: [Field; FIELD_COUNT] = [
        Field::SchemaName,
        Field::AttrNames,
        Field::AuthorAlias,
        Field::SchemaVersion,
        Field::RawText,
    ];

    pub fn idx(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::SchemaName => "schema_name",
            Field::AttrNames => "attr_names",
            Field::AuthorAlias => "author_alias",
            Field::SchemaVersion => "schema_version",
            Field::RawText => "raw_text",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Token streams for each indexed field of a document, in [`Field::ALL`] order.
pub fn analyze_doc(doc: &EnrichedDoc) -> [Vec<String>; FIELD_COUNT] {
    [
        doc.schema_name.as_deref().map(tokenize).unwrap_or_default(),
        tokenize(&doc.attr_names.join(" ")),
        doc.author_alias.as_deref().map(tokenize).unwrap_or_default(),
        doc.schema_version.as_deref().map(tokenize).unwrap_or_default(),
        tokenize(&doc.raw),
    ]
}
