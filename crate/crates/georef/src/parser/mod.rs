//! Locality-description parsing: place-name mentions, spatial relation
//! triples and containment hierarchies.
//!
//! Two extractors ship: a manual-annotation passthrough (per-record
//! sidecar files) and a lexicon/heuristic extractor. Spans are character
//! (Unicode scalar) offsets into the description text.

mod lexicon;

pub use lexicon::{IndicatorLexicon, DEFAULT_LEXICON};

use std::collections::HashMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gazetteer::GazetteerFeature;
use crate::{Error, Result};

/// A place-name mention in the description text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceMention {
    pub surface: String,
    /// Character offsets [start, end) into the text.
    pub start: usize,
    pub end: usize,
    /// Canonical name after abbreviation expansion or coreference
    /// resolution ("L. Wairarapa" -> "Lake Wairarapa").
    pub normalized: Option<String>,
}

impl PlaceMention {
    pub fn canonical(&self) -> &str {
        self.normalized.as_deref().unwrap_or(&self.surface)
    }

    /// Checks that the span indexes back to exactly the surface string.
    pub fn validate_against(&self, text: &str) -> Result<()> {
        let chars: Vec<char> = text.chars().collect();
        if self.start >= self.end || self.end > chars.len() {
            return Err(Error::Parse(format!(
                "mention {:?}: span {}..{} out of bounds for text of {} chars",
                self.surface,
                self.start,
                self.end,
                chars.len()
            )));
        }
        let slice: String = chars[self.start..self.end].iter().collect();
        if slice != self.surface {
            return Err(Error::Parse(format!(
                "mention {:?}: span {}..{} reads {:?}",
                self.surface, self.start, self.end, slice
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Exact,
    Approximate,
}

/// Compass direction or a free-form bearing phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bearing {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    Phrase(String),
}

impl Bearing {
    fn from_token(tok: &str) -> Option<Bearing> {
        match tok.to_lowercase().replace('-', "").as_str() {
            "n" | "north" => Some(Bearing::N),
            "ne" | "northeast" => Some(Bearing::NE),
            "e" | "east" => Some(Bearing::E),
            "se" | "southeast" => Some(Bearing::SE),
            "s" | "south" => Some(Bearing::S),
            "sw" | "southwest" => Some(Bearing::SW),
            "w" | "west" => Some(Bearing::W),
            "nw" | "northwest" => Some(Bearing::NW),
            _ => None,
        }
    }
}

/// A <locatum, spatial indicator, relatum> triple. A missing locatum
/// marks the degenerate case: the described target location itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub locatum: Option<PlaceMention>,
    pub indicator: String,
    pub relatum: PlaceMention,
    pub distance_km: Option<f64>,
    pub bearing: Option<Bearing>,
    pub precision: Precision,
}

/// Full parse of one locality description.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParseResult {
    pub mentions: Vec<PlaceMention>,
    pub triples: Vec<RelationTriple>,
    /// (parent, child) pairs, coarse to fine.
    pub containment: Vec<(PlaceMention, PlaceMention)>,
}

impl ParseResult {
    /// Validates the cross-field invariants: relata resolve to mentions
    /// and the containment graph is acyclic.
    pub fn validate(&self) -> Result<()> {
        for t in &self.triples {
            let known = self.mentions.iter().any(|m| {
                (m.start == t.relatum.start && m.end == t.relatum.end)
                    || t.relatum
                        .normalized
                        .as_deref()
                        .map(|n| m.canonical() == n)
                        .unwrap_or(false)
            });
            if !known {
                return Err(Error::Parse(format!(
                    "triple relatum {:?} does not resolve to any mention",
                    t.relatum.surface
                )));
            }
        }
        if has_cycle(&self.containment) {
            return Err(Error::Parse("containment graph has a cycle".into()));
        }
        Ok(())
    }
}

fn has_cycle(pairs: &[(PlaceMention, PlaceMention)]) -> bool {
    // DFS over canonical names.
    let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
    for (p, c) in pairs {
        edges.entry(p.canonical()).or_default().push(c.canonical());
    }
    fn visit<'a>(
        node: &'a str,
        edges: &HashMap<&'a str, Vec<&'a str>>,
        path: &mut Vec<&'a str>,
        done: &mut Vec<&'a str>,
    ) -> bool {
        if path.contains(&node) {
            return true;
        }
        if done.contains(&node) {
            return false;
        }
        path.push(node);
        if let Some(next) = edges.get(node) {
            for n in next {
                if visit(n, edges, path, done) {
                    return true;
                }
            }
        }
        path.pop();
        done.push(node);
        false
    }
    let mut done = Vec::new();
    edges
        .keys()
        .any(|k| visit(k, &edges, &mut Vec::new(), &mut done))
}

/// Feature-type cue words and their coarseness class, used both for
/// mention detection and for the containment heuristic.
const CUE_WORDS: &[(&str, u8)] = &[
    ("island", 5),
    ("county", 4),
    ("district", 4),
    ("region", 4),
    ("park", 3),
    ("reserve", 2),
    ("lake", 2),
    ("river", 2),
    ("mount", 2),
    ("mountain", 2),
    ("peak", 2),
    ("burn", 2),
    ("stream", 2),
    ("creek", 2),
    ("bay", 2),
    ("point", 2),
    ("ridge", 2),
    ("valley", 2),
    ("sound", 2),
    ("beach", 2),
    ("road", 2),
    ("track", 2),
];

fn cue_class(word: &str) -> Option<u8> {
    let w = word.to_lowercase();
    CUE_WORDS.iter().find(|(c, _)| *c == w).map(|(_, k)| *k)
}

/// Coarseness class of a whole mention, from its last cue word.
fn mention_class(m: &PlaceMention) -> u8 {
    m.canonical()
        .split_whitespace()
        .filter_map(cue_class)
        .max()
        .unwrap_or(1)
}

const ABBREVIATIONS: &[(&str, &str)] = &[
    ("L.", "Lake"),
    ("Mt.", "Mount"),
    ("Mt", "Mount"),
    ("R.", "River"),
    ("Pt.", "Point"),
    ("I.", "Island"),
];

/// Standalone capitalized tokens that never start a mention.
const STOP_TOKENS: &[&str] = &[
    "Ca", "C", "About", "Approx", "Approximately", "Near", "Between", "The", "A", "An", "At",
    "On", "In", "N", "NE", "E", "SE", "S", "SW", "W", "NW", "North", "South", "East", "West",
];

#[derive(Debug, Clone)]
struct Token {
    text: String,
    start: usize,
    end: usize,
    /// A sentence/segment boundary (comma, period, dash) precedes it.
    after_break: bool,
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut pending_break = true;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric()
                    || chars[i] == '\''
                    || chars[i] == '-'
                    || (chars[i] == '.'
                        && i > start
                        && chars[i - 1].is_alphabetic()
                        && (i - start) <= 3))
            {
                i += 1;
            }
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                start,
                end: i,
                after_break: pending_break,
            });
            pending_break = false;
        } else {
            if matches!(c, ',' | '.' | ';' | ':' | '-' | '(' | ')' | '&') {
                pending_break = true;
            }
            i += 1;
        }
    }
    tokens
}

fn is_capword(tok: &Token) -> bool {
    tok.text.chars().next().map(|c| c.is_uppercase()).unwrap_or(false)
}

fn expand_abbrev(tok: &str) -> Option<&'static str> {
    ABBREVIATIONS.iter().find(|(a, _)| *a == tok).map(|(_, e)| *e)
}

/// Extracts place-name mentions. When an override is given it is
/// returned verbatim after span validation.
pub fn extract_place_names(
    text: &str,
    manual: Option<&[PlaceMention]>,
) -> Result<Vec<PlaceMention>> {
    if text.is_empty() {
        return Err(Error::Parse("locality description must be non-empty".into()));
    }
    if let Some(given) = manual {
        for m in given {
            m.validate_against(text)?;
        }
        return Ok(given.to_vec());
    }

    let tokens = tokenize(text);
    let mut mentions: Vec<PlaceMention> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_capword(&tokens[i]) || (STOP_TOKENS.contains(&tokens[i].text.as_str())
            && !(i + 1 < tokens.len() && is_capword(&tokens[i + 1]) && !tokens[i + 1].after_break
                && matches!(tokens[i].text.as_str(), "North" | "South" | "East" | "West")))
        {
            i += 1;
            continue;
        }
        // Start of a candidate phrase: take consecutive capitalized tokens,
        // allowing "of"/"the" connectors when another capword follows.
        let start_tok = i;
        let mut end_tok = i;
        let mut j = i + 1;
        while j < tokens.len() && !tokens[j].after_break {
            if is_capword(&tokens[j]) {
                end_tok = j;
                j += 1;
            } else if matches!(tokens[j].text.as_str(), "of" | "the")
                && j + 1 < tokens.len()
                && !tokens[j + 1].after_break
                && is_capword(&tokens[j + 1])
            {
                end_tok = j + 1;
                j += 2;
            } else {
                break;
            }
        }
        let phrase_tokens = &tokens[start_tok..=end_tok];
        let start = phrase_tokens[0].start;
        let end = phrase_tokens.last().unwrap().end;
        let chars: Vec<char> = text.chars().collect();
        let surface: String = chars[start..end].iter().collect();
        // Reject single stop tokens and pure cue words ("Lake" alone).
        let single = phrase_tokens.len() == 1;
        let rejected = single
            && (STOP_TOKENS.contains(&phrase_tokens[0].text.as_str())
                || cue_class(&phrase_tokens[0].text).is_some()
                || phrase_tokens[0].text.chars().count() <= 1);
        if !rejected {
            let normalized = normalize_surface(&surface);
            mentions.push(PlaceMention { surface, start, end, normalized });
        }
        i = end_tok + 1;
    }
    mentions.sort_by_key(|m| m.start);
    mentions.dedup_by(|a, b| a.start < b.end && b.start < a.end);
    Ok(mentions)
}

fn normalize_surface(surface: &str) -> Option<String> {
    let mut changed = false;
    let expanded: Vec<String> = surface
        .split_whitespace()
        .map(|w| match expand_abbrev(w) {
            Some(e) => {
                changed = true;
                e.to_string()
            }
            None => w.to_string(),
        })
        .collect();
    changed.then(|| expanded.join(" "))
}

/// Parses a distance phrase into kilometres and precision. Returns `None`
/// when the phrase carries no parsable number and unit.
pub fn parse_distance_phrase(phrase: &str) -> Option<(f64, Precision)> {
    let re = Regex::new(
        r"(?i)\b(ca\.?|about|approx\.?|approximately|~)?\s*(\d+(?:[.,]\d+)?)\s*(km|kms|kilometres?|kilometers?|m|metres?|meters?|mi|miles?)\b",
    )
    .unwrap();
    let caps = re.captures(phrase)?;
    let qualifier = caps.get(1).is_some() || phrase.contains('~');
    let number: f64 = caps[2].replace(',', ".").parse().ok()?;
    if number <= 0.0 {
        return None;
    }
    let unit = caps[3].to_lowercase();
    let km = match unit.as_str() {
        "m" | "metre" | "metres" | "meter" | "meters" => number / 1000.0,
        "mi" | "mile" | "miles" => number * 1.609_344,
        _ => number,
    };
    let precision = if qualifier { Precision::Approximate } else { Precision::Exact };
    Some((km, precision))
}

/// Bare feature-type nouns that can corefer to an earlier mention.
const COREF_NOUNS: &[&str] = &[
    "lake", "river", "peak", "reserve", "island", "burn", "stream", "bay", "mount", "ridge",
    "creek", "track", "road", "sound",
];

/// Name words that signal the same feature type as a bare noun, so
/// "peak" can pick up "Mount George".
fn type_words(noun: &str) -> &'static [&'static str] {
    match noun {
        "peak" | "mount" => &["peak", "mount", "mountain", "mt"],
        "burn" | "stream" | "creek" => &["burn", "stream", "creek"],
        "lake" => &["lake", "l"],
        "river" => &["river", "r"],
        "island" => &["island", "i"],
        _ => &[],
    }
}

/// Finds the unique earlier mention whose name carries the given feature
/// type ("lake" -> "Lake Wairarapa" / "L. Wairarapa").
fn resolve_coref<'a>(noun: &str, before: usize, mentions: &'a [PlaceMention]) -> Option<&'a PlaceMention> {
    let noun = noun.to_lowercase();
    let matching: Vec<&PlaceMention> = mentions
        .iter()
        .filter(|m| m.start < before)
        .filter(|m| {
            m.canonical().split_whitespace().any(|w| {
                let w = w.to_lowercase();
                w == noun || type_words(&noun).contains(&w.as_str())
            })
        })
        .collect();
    if matching.len() == 1 {
        Some(matching[0])
    } else {
        None
    }
}

struct IndicatorMatch {
    start: usize,
    end: usize,
    base: String,
}

/// Extracts spatial relation triples using the indicator lexicon.
pub fn extract_relations(text: &str, mentions: &[PlaceMention]) -> Result<Vec<RelationTriple>> {
    for m in mentions {
        m.validate_against(text)?;
    }
    extract_relations_with(text, mentions, &IndicatorLexicon::default())
}

pub fn extract_relations_with(
    text: &str,
    mentions: &[PlaceMention],
    lexicon: &IndicatorLexicon,
) -> Result<Vec<RelationTriple>> {
    let chars: Vec<char> = text.chars().collect();
    let lower: String = text.to_lowercase();
    let lower_chars: Vec<char> = lower.chars().collect();

    // Collect indicator occurrences, longest phrase first so that
    // "north of" wins over a bare "of"-style entry.
    let mut matches: Vec<IndicatorMatch> = Vec::new();
    let mut phrases: Vec<&str> = lexicon.phrases().collect();
    phrases.sort_by_key(|p| std::cmp::Reverse(p.chars().count()));
    for phrase in phrases {
        let needle: Vec<char> = phrase.to_lowercase().chars().collect();
        let mut from = 0;
        while let Some(pos) = find_chars(&lower_chars, &needle, from) {
            from = pos + 1;
            let end = pos + needle.len();
            // word boundaries
            let boundary_ok = (pos == 0 || !lower_chars[pos - 1].is_alphanumeric())
                && (end == lower_chars.len() || !lower_chars[end].is_alphanumeric());
            if !boundary_ok {
                continue;
            }
            if matches.iter().any(|m| pos < m.end && m.start < end) {
                continue;
            }
            matches.push(IndicatorMatch { start: pos, end, base: phrase.to_string() });
        }
    }
    matches.sort_by_key(|m| m.start);

    let mut triples = Vec::new();
    for m in &matches {
        // Extend leftward over an immediately preceding bearing token so
        // the indicator reads "NE shore of" rather than "shore of".
        let mut start = m.start;
        let mut bearing: Option<Bearing> = None;
        if let Some((tok_start, tok)) = preceding_word(&chars, start) {
            if let Some(b) = Bearing::from_token(&tok) {
                bearing = Some(b);
                start = tok_start;
            }
        }
        if bearing.is_none() {
            // Bearing inside the indicator itself ("north of").
            bearing = m
                .base
                .split_whitespace()
                .find_map(Bearing::from_token);
        }

        let indicator: String = chars[start..m.end].iter().collect();

        // Distance phrase immediately before the indicator.
        let window_start = start.saturating_sub(24);
        let window: String = chars[window_start..start].iter().collect();
        let dist = parse_distance_phrase_at_end(&window);

        if m.base == "between" {
            triples.extend(between_triples(&chars, m, &indicator, mentions, &dist));
            continue;
        }

        // Relatum: nearest mention (or coreferent bare noun) after the
        // indicator.
        let relatum = match find_relatum(&chars, m.end, mentions) {
            Some(r) => r,
            None => continue,
        };

        // Locatum: a mention ending just before the whole construction.
        let locatum = mentions
            .iter()
            .find(|pm| pm.end <= start && start - pm.end <= 1)
            .cloned();

        let (distance_km, precision) = match &dist {
            Some((km, p)) => (Some(*km), *p),
            None => (None, Precision::Exact),
        };
        triples.push(RelationTriple {
            locatum,
            indicator,
            relatum,
            distance_km,
            bearing: bearing.clone(),
            precision,
        });
    }
    Ok(triples)
}

fn find_chars(haystack: &[char], needle: &[char], from: usize) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    (from..=haystack.len() - needle.len()).find(|&i| haystack[i..i + needle.len()] == *needle)
}

fn preceding_word(chars: &[char], before: usize) -> Option<(usize, String)> {
    let mut end = before;
    while end > 0 && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end == 0 {
        return None;
    }
    let mut start = end;
    while start > 0 && (chars[start - 1].is_alphanumeric() || chars[start - 1] == '-') {
        start -= 1;
    }
    if start == end {
        return None;
    }
    Some((start, chars[start..end].iter().collect()))
}

fn parse_distance_phrase_at_end(window: &str) -> Option<(f64, Precision)> {
    // Only accept a distance that ends at (or within a word of) the window
    // end, so "2km" in "Ca 2km north of" attaches to "north of" and not to
    // some later indicator.
    let re = Regex::new(
        r"(?i)(ca\.?|about|approx\.?|approximately|~)?\s*(\d+(?:[.,]\d+)?)\s*(km|kms|kilometres?|kilometers?|m|metres?|meters?|mi|miles?)\s*$",
    )
    .unwrap();
    let caps = re.captures(window.trim_end())?;
    parse_distance_phrase(caps.get(0).unwrap().as_str())
}

fn find_relatum(chars: &[char], after: usize, mentions: &[PlaceMention]) -> Option<PlaceMention> {
    let limit = after + 40;
    // A named mention starting soon after the indicator.
    let named = mentions
        .iter()
        .filter(|m| m.start >= after && m.start <= limit)
        .min_by_key(|m| m.start);
    // A bare coreferent noun could come sooner than the named mention.
    let mut i = after;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    // skip articles
    for article in ["the ", "a "] {
        let a: Vec<char> = article.chars().collect();
        if chars[i..].starts_with(&a) {
            i += a.len();
        }
    }
    let mut j = i;
    while j < chars.len() && chars[j].is_alphabetic() {
        j += 1;
    }
    if j > i {
        let word: String = chars[i..j].iter().collect();
        let word_l = word.to_lowercase();
        if word.chars().next().unwrap().is_lowercase() && COREF_NOUNS.contains(&word_l.as_str()) {
            if let Some(antecedent) = resolve_coref(&word_l, i, mentions) {
                if named.map(|m| m.start > i).unwrap_or(true) {
                    return Some(PlaceMention {
                        surface: word,
                        start: i,
                        end: j,
                        normalized: Some(antecedent.canonical().to_string()),
                    });
                }
            }
        }
    }
    named.cloned()
}

fn between_triples(
    chars: &[char],
    m: &IndicatorMatch,
    indicator: &str,
    mentions: &[PlaceMention],
    dist: &Option<(f64, Precision)>,
) -> Vec<RelationTriple> {
    // "between A and B": one triple per endpoint, sharing the indicator.
    let endpoints: Vec<&PlaceMention> = mentions
        .iter()
        .filter(|pm| pm.start >= m.end && pm.start <= m.end + 80)
        .take(2)
        .collect();
    let and: Vec<char> = " and ".chars().collect();
    let has_and = endpoints.len() == 2
        && find_chars(chars, &and, endpoints[0].end)
            .map(|p| p < endpoints[1].start)
            .unwrap_or(false);
    if !has_and {
        return Vec::new();
    }
    let (distance_km, precision) = match dist {
        Some((km, p)) => (Some(*km), *p),
        None => (None, Precision::Exact),
    };
    endpoints
        .into_iter()
        .map(|r| RelationTriple {
            locatum: None,
            indicator: indicator.to_string(),
            relatum: r.clone(),
            distance_km,
            bearing: None,
            precision,
        })
        .collect()
}

/// Derives coarse-to-fine containment pairs, geometrically when resolved
/// features are available and by the comma-sequence heuristic otherwise.
pub fn detect_containment(
    mentions: &[PlaceMention],
    features: Option<&HashMap<String, GazetteerFeature>>,
) -> Result<Vec<(PlaceMention, PlaceMention)>> {
    if mentions.is_empty() {
        return Err(Error::Parse("detect_containment requires at least one mention".into()));
    }
    let pairs = match features {
        Some(resolved) => geometric_containment(mentions, resolved),
        None => heuristic_containment(mentions),
    };
    if has_cycle(&pairs) {
        return Err(Error::Parse("containment graph has a cycle".into()));
    }
    Ok(pairs)
}

fn geometric_containment(
    mentions: &[PlaceMention],
    resolved: &HashMap<String, GazetteerFeature>,
) -> Vec<(PlaceMention, PlaceMention)> {
    let mut pairs = Vec::new();
    for parent in mentions {
        let Some(pf) = resolved.get(parent.canonical()) else { continue };
        let pb = pf.geometry.bbox();
        for child in mentions {
            if std::ptr::eq(parent, child) {
                continue;
            }
            let Some(cf) = resolved.get(child.canonical()) else { continue };
            let cb = cf.geometry.bbox();
            if pb.contains_bbox(&cb) && pb.area_deg2() > cb.area_deg2() {
                pairs.push((parent.clone(), child.clone()));
            }
        }
    }
    pairs
}

fn heuristic_containment(mentions: &[PlaceMention]) -> Vec<(PlaceMention, PlaceMention)> {
    // In the comma-separated sequence, an administrative/large feature
    // contains the finer features that follow it.
    let mut pairs = Vec::new();
    let mut stack: Vec<&PlaceMention> = Vec::new();
    for m in mentions {
        let class = mention_class(m);
        while let Some(top) = stack.last() {
            if mention_class(top) <= class {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(top) = stack.last() {
            pairs.push(((*top).clone(), m.clone()));
        }
        stack.push(m);
    }
    pairs
}

/// Manual-annotation sidecar: overrides the heuristic parser for one
/// record, mirroring a hand-annotated corpus.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParseOverride {
    pub mentions: Vec<PlaceMention>,
    #[serde(default)]
    pub triples: Option<Vec<RelationTriple>>,
    #[serde(default)]
    pub containment: Option<Vec<(PlaceMention, PlaceMention)>>,
}

/// Parses one description end to end, honoring any manual override.
pub fn parse_description(text: &str, manual: Option<&ParseOverride>) -> Result<ParseResult> {
    let mentions = extract_place_names(text, manual.map(|o| o.mentions.as_slice()))?;
    let triples = match manual.and_then(|o| o.triples.clone()) {
        Some(t) => t,
        None => extract_relations(text, &mentions)?,
    };
    let containment = match manual.and_then(|o| o.containment.clone()) {
        Some(c) => c,
        None if mentions.is_empty() => Vec::new(),
        None => detect_containment(&mentions, None)?,
    };
    let result = ParseResult { mentions, triples, containment };
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::Geometry;
    use crate::geo::GeoPoint;

    #[test]
    fn puketi_single_mention() {
        let ms = extract_place_names("Ca 2km north of Puketi.", None).unwrap();
        assert_eq!(ms.len(), 1, "{ms:?}");
        assert_eq!(ms[0].surface, "Puketi");
    }

    #[test]
    fn empty_text_rejected() {
        assert!(extract_place_names("", None).is_err());
    }

    #[test]
    fn fiordland_description_mentions() {
        let text =
            "Fiordland, Mount George, south shore of lake at head of Elizabeth Burn, 2km north of peak.";
        let ms = extract_place_names(text, None).unwrap();
        let names: Vec<&str> = ms.iter().map(|m| m.surface.as_str()).collect();
        assert!(names.contains(&"Fiordland"), "{names:?}");
        assert!(names.contains(&"Mount George"), "{names:?}");
        assert!(names.contains(&"Elizabeth Burn"), "{names:?}");
    }

    #[test]
    fn north_island_chain_mentions() {
        let text = "North Island, Bay of Islands County. Ca 2km north of Puketi.";
        let ms = extract_place_names(text, None).unwrap();
        let names: Vec<&str> = ms.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(names, vec!["North Island", "Bay of Islands County", "Puketi"]);
    }

    #[test]
    fn spans_index_back_to_surface() {
        let text = "North Island, Bay of Islands County. Ca 2km north of Puketi.";
        for m in extract_place_names(text, None).unwrap() {
            m.validate_against(text).unwrap();
        }
    }

    #[test]
    fn spans_sorted_and_non_overlapping() {
        let text = "Fiordland, Mount George, south shore of lake at head of Elizabeth Burn.";
        let ms = extract_place_names(text, None).unwrap();
        for w in ms.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }

    #[test]
    fn override_passthrough_and_validation() {
        let text = "Near Puketi forest.";
        let good = vec![PlaceMention {
            surface: "Puketi".into(),
            start: 5,
            end: 11,
            normalized: None,
        }];
        assert_eq!(extract_place_names(text, Some(&good)).unwrap(), good);

        let bad = vec![PlaceMention { surface: "Puketi".into(), start: 5, end: 99, normalized: None }];
        let err = extract_place_names(text, Some(&bad)).unwrap_err();
        assert!(err.to_string().contains("Puketi"));
    }

    #[test]
    fn abbreviation_normalized() {
        let ms = extract_place_names("NE shore of L. Wairarapa - about 400m from lake", None).unwrap();
        let lw = ms.iter().find(|m| m.surface.contains("Wairarapa")).unwrap();
        assert_eq!(lw.normalized.as_deref(), Some("Lake Wairarapa"));
    }

    #[test]
    fn puketi_relation_triple() {
        let text = "Ca 2km north of Puketi.";
        let ms = extract_place_names(text, None).unwrap();
        let ts = extract_relations(text, &ms).unwrap();
        assert_eq!(ts.len(), 1, "{ts:?}");
        let t = &ts[0];
        assert!(t.locatum.is_none());
        assert_eq!(t.indicator, "north of");
        assert_eq!(t.relatum.surface, "Puketi");
        assert_eq!(t.distance_km, Some(2.0));
        assert_eq!(t.bearing, Some(Bearing::N));
        assert_eq!(t.precision, Precision::Approximate);
    }

    #[test]
    fn no_indicator_no_triples() {
        let text = "Puketi Forest Headquarters.";
        let ms = extract_place_names(text, None).unwrap();
        assert!(extract_relations(text, &ms).unwrap().is_empty());
    }

    #[test]
    fn wairarapa_two_triples_with_coref() {
        let text = "NE shore of L. Wairarapa - about 400m from lake";
        let ms = extract_place_names(text, None).unwrap();
        let ts = extract_relations(text, &ms).unwrap();
        assert_eq!(ts.len(), 2, "{ts:?}");
        let shore = &ts[0];
        assert!(shore.locatum.is_none());
        assert_eq!(shore.indicator, "NE shore of");
        assert!(shore.relatum.surface.contains("Wairarapa"));
        assert_eq!(shore.bearing, Some(Bearing::NE));
        let from = &ts[1];
        assert!(from.locatum.is_none());
        assert_eq!(from.indicator, "from");
        assert_eq!(from.relatum.surface, "lake");
        assert_eq!(from.relatum.normalized.as_deref(), Some("Lake Wairarapa"));
        assert!((from.distance_km.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(from.precision, Precision::Approximate);
    }

    #[test]
    fn distance_phrases() {
        assert_eq!(parse_distance_phrase("Ca 2km"), Some((2.0, Precision::Approximate)));
        assert_eq!(parse_distance_phrase("400m"), Some((0.4, Precision::Exact)));
        assert_eq!(parse_distance_phrase("3km south"), Some((3.0, Precision::Exact)));
        assert!(parse_distance_phrase("no numbers here").is_none());
        assert!(parse_distance_phrase("about km").is_none());
    }

    #[test]
    fn distance_unit_consistency() {
        for x in [1.0, 250.0, 400.0, 1234.5] {
            let (m, _) = parse_distance_phrase(&format!("{x}m")).unwrap();
            let (km, _) = parse_distance_phrase(&format!("{}km", x / 1000.0)).unwrap();
            assert!((m - km).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_triples_carry_no_locatum() {
        let text = "Ca 2km north of Puketi.";
        let ms = extract_place_names(text, None).unwrap();
        for t in extract_relations(text, &ms).unwrap() {
            assert!(t.locatum.is_none());
        }
    }

    #[test]
    fn between_yields_two_triples() {
        let text = "Mount Azimuth, cliffs between Azimuth and Courrejolles Point near low point in ridge";
        let ms = extract_place_names(text, None).unwrap();
        let ts = extract_relations(text, &ms).unwrap();
        let between: Vec<_> = ts.iter().filter(|t| t.indicator == "between").collect();
        assert_eq!(between.len(), 2, "{ts:?}");
        assert_ne!(between[0].relatum.surface, between[1].relatum.surface);
    }

    #[test]
    fn containment_chain_heuristic() {
        let text = "North Island, Bay of Islands County. Ca 2km north of Puketi.";
        let ms = extract_place_names(text, None).unwrap();
        let pairs = detect_containment(&ms, None).unwrap();
        let named: Vec<(&str, &str)> =
            pairs.iter().map(|(p, c)| (p.surface.as_str(), c.surface.as_str())).collect();
        assert_eq!(
            named,
            vec![("North Island", "Bay of Islands County"), ("Bay of Islands County", "Puketi")]
        );
    }

    #[test]
    fn containment_single_mention_empty() {
        let ms = vec![PlaceMention { surface: "Puketi".into(), start: 0, end: 6, normalized: None }];
        assert!(detect_containment(&ms, None).unwrap().is_empty());
    }

    fn feat_with_bbox(name: &str, min_lat: f64, min_lon: f64, size: f64) -> GazetteerFeature {
        GazetteerFeature {
            name: name.into(),
            source: "t".into(),
            authority_rank: 0,
            geometry: Geometry::Polygon {
                rings: vec![vec![
                    GeoPoint::new(min_lat, min_lon),
                    GeoPoint::new(min_lat, min_lon + size),
                    GeoPoint::new(min_lat + size, min_lon + size),
                    GeoPoint::new(min_lat + size, min_lon),
                    GeoPoint::new(min_lat, min_lon),
                ]],
            },
            category: "t".into(),
            country: None,
            region: None,
        }
    }

    #[test]
    fn containment_geometric_siblings() {
        let text = "Fiordland, Mount George, head of Elizabeth Burn";
        let ms = extract_place_names(text, None).unwrap();
        let mut resolved = HashMap::new();
        resolved.insert("Fiordland".to_string(), feat_with_bbox("Fiordland", -46.0, 166.5, 1.5));
        resolved.insert("Mount George".to_string(), feat_with_bbox("Mount George", -45.3, 167.0, 0.05));
        resolved.insert("Elizabeth Burn".to_string(), feat_with_bbox("Elizabeth Burn", -45.2, 167.2, 0.05));
        let pairs = detect_containment(&ms, Some(&resolved)).unwrap();
        let named: Vec<(&str, &str)> =
            pairs.iter().map(|(p, c)| (p.surface.as_str(), c.surface.as_str())).collect();
        assert!(named.contains(&("Fiordland", "Mount George")), "{named:?}");
        assert!(named.contains(&("Fiordland", "Elizabeth Burn")), "{named:?}");
        assert!(!named.iter().any(|(p, c)| {
            (*p == "Mount George" && *c == "Elizabeth Burn")
                || (*p == "Elizabeth Burn" && *c == "Mount George")
        }));
    }

    #[test]
    fn containment_acyclic_on_every_parse() {
        let text = "North Island, Bay of Islands County, Puketi Forest, Waipapa River";
        let ms = extract_place_names(text, None).unwrap();
        let pairs = detect_containment(&ms, None).unwrap();
        assert!(!has_cycle(&pairs));
    }

    #[test]
    fn parse_description_end_to_end() {
        let r = parse_description("Ca 2km north of Puketi.", None).unwrap();
        assert_eq!(r.mentions.len(), 1);
        assert_eq!(r.triples.len(), 1);
        r.validate().unwrap();
    }

    #[test]
    fn parse_description_with_override() {
        let text = "somewhere odd lowercase puketi";
        let ov = ParseOverride {
            mentions: vec![PlaceMention {
                surface: "puketi".into(),
                start: 24,
                end: 30,
                normalized: Some("Puketi".into()),
            }],
            triples: Some(vec![]),
            containment: Some(vec![]),
        };
        let r = parse_description(text, Some(&ov)).unwrap();
        assert_eq!(r.mentions.len(), 1);
    }
}
