//! The spatial-indicator lexicon: a versioned data file of indicator
//! phrases, one per line, `#` for comments.
//!
//! Pattern syntax: literal lowercase tokens. A leading `<dist>`
//! placeholder marks that a distance phrase commonly precedes the
//! indicator; distances are captured automatically either way, so the
//! placeholder is documentation and is stripped on load. A compass
//! bearing immediately before any indicator is folded into the match
//! ("NE shore of").

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Shipped seed lexicon.
pub const DEFAULT_LEXICON: &str = include_str!("../../assets/indicators.txt");

#[derive(Debug, Clone)]
pub struct IndicatorLexicon {
    phrases: Vec<String>,
}

impl Default for IndicatorLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon is well-formed")
    }
}

impl IndicatorLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut phrases = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let phrase = line.strip_prefix("<dist>").unwrap_or(line).trim();
            if phrase.is_empty() {
                return Err(Error::Parse(format!(
                    "lexicon line {}: pattern has no literal tokens",
                    lineno + 1
                )));
            }
            if !phrase
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_whitespace())
            {
                return Err(Error::Parse(format!(
                    "lexicon line {}: patterns are lowercase literal tokens, got {phrase:?}",
                    lineno + 1
                )));
            }
            phrases.push(phrase.to_string());
        }
        Ok(Self { phrases })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("reading lexicon {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.phrases.iter().map(String::as_str)
    }
}
