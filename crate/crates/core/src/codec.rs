//! Bidirectional conversion between graphs and marker-token sequences:
//! linearization, error-recovering parsing, shuffle augmentation, and task
//! prefixes for hybrid-direction datasets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{KnowledgeGraph, Triple};

/// Generation direction for task prefixes and reward specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Graph-to-text generation.
    G2T,
    /// Text-to-graph semantic parsing.
    T2G,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::G2T => write!(f, "g2t"),
            Direction::T2G => write!(f, "t2g"),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g2t" => Ok(Direction::G2T),
            "t2g" => Ok(Direction::T2G),
            other => Err(format!("unknown direction `{other}` (expected g2t or t2g)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("linearized sequence needs {needed} tokens but the limit is {max}")]
    CapacityExceeded { needed: usize, max: usize },
    #[error("cannot linearize an empty graph")]
    EmptyGraph,
    #[error("invalid linearization config: {0}")]
    InvalidConfig(String),
}

/// Marker tokens, task prefixes, and the sequence-length budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationConfig {
    pub subject_marker: String,
    pub predicate_marker: String,
    pub object_marker: String,
    pub t2g_prefix: String,
    pub g2t_prefix: String,
    pub max_tokens: usize,
}

impl Default for LinearizationConfig {
    fn default() -> Self {
        LinearizationConfig {
            subject_marker: "<S>".to_string(),
            predicate_marker: "<P>".to_string(),
            object_marker: "<O>".to_string(),
            t2g_prefix: "Text to Graph: ".to_string(),
            g2t_prefix: "Graph to Text: ".to_string(),
            max_tokens: 192,
        }
    }
}

impl LinearizationConfig {
    /// Check marker distinctness and the minimum token budget (one triple
    /// with one token per field needs 9 tokens).
    pub fn validate(&self) -> Result<(), CodecError> {
        let markers = [&self.subject_marker, &self.predicate_marker, &self.object_marker];
        if markers.iter().any(|m| m.is_empty()) {
            return Err(CodecError::InvalidConfig("markers must be non-empty".into()));
        }
        if markers[0] == markers[1] || markers[0] == markers[2] || markers[1] == markers[2] {
            return Err(CodecError::InvalidConfig("markers must be pairwise distinct".into()));
        }
        if self.max_tokens < 9 {
            return Err(CodecError::InvalidConfig(format!(
                "max_tokens must be at least 9, got {}",
                self.max_tokens
            )));
        }
        Ok(())
    }

    fn marker_kind(&self, token: &str) -> Option<Marker> {
        if token == self.subject_marker {
            Some(Marker::Subject)
        } else if token == self.predicate_marker {
            Some(Marker::Predicate)
        } else if token == self.object_marker {
            Some(Marker::Object)
        } else {
            None
        }
    }

    fn prefix_tokens(&self, direction: Direction) -> Vec<String> {
        let prefix = match direction {
            Direction::G2T => &self.g2t_prefix,
            Direction::T2G => &self.t2g_prefix,
        };
        prefix.split_whitespace().map(str::to_string).collect()
    }
}

/// An ordered list of string tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }

    /// Whitespace-split a string into a sequence.
    pub fn from_text(text: &str) -> Self {
        TokenSequence { tokens: text.split_whitespace().map(str::to_string).collect() }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined with single spaces.
    pub fn to_text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Half-open range of token indices, `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

/// Result of parsing a (possibly malformed) marker-token sequence back into
/// a graph. Malformedness is data, not an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub graph: KnowledgeGraph,
    pub dropped_fragments: Vec<TokenSpan>,
    pub well_formed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Subject,
    Predicate,
    Object,
}

/// Serialize a graph as marker tokens: for each triple in list order, the
/// subject marker and subject tokens, then likewise for predicate and object.
pub fn linearize(
    graph: &KnowledgeGraph,
    cfg: &LinearizationConfig,
) -> Result<TokenSequence, CodecError> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(CodecError::EmptyGraph);
    }
    let needed: usize = graph
        .triples
        .iter()
        .map(|t| 3 + t.fields().iter().map(|(_, v)| v.split_whitespace().count()).sum::<usize>())
        .sum();
    if needed > cfg.max_tokens {
        return Err(CodecError::CapacityExceeded { needed, max: cfg.max_tokens });
    }
    let mut tokens = Vec::with_capacity(needed);
    for triple in &graph.triples {
        for (marker, field) in [
            (&cfg.subject_marker, &triple.subject),
            (&cfg.predicate_marker, &triple.predicate),
            (&cfg.object_marker, &triple.object),
        ] {
            tokens.push(marker.clone());
            tokens.extend(field.split_whitespace().map(str::to_string));
        }
    }
    Ok(TokenSequence::new(tokens))
}

/// Recover the maximal list of complete triples from an arbitrary token
/// sequence, left to right. A triple is complete when a subject span, a
/// predicate span, and an object span occur in order, each non-empty. A new
/// subject marker abandons any incomplete fragment; other out-of-order
/// markers drop the fragment and return the parser to scanning. Total on all
/// inputs.
pub fn delinearize(seq: &TokenSequence, cfg: &LinearizationConfig) -> ParseReport {
    #[derive(PartialEq)]
    enum State {
        Seeking,
        AfterS,
        AfterP,
        AfterO,
    }

    struct Fragment {
        start: usize,
        subject: Vec<String>,
        predicate: Vec<String>,
        object: Vec<String>,
    }

    let mut state = State::Seeking;
    let mut fragment: Option<Fragment> = None;
    let mut triples = Vec::new();
    let mut dropped: Vec<TokenSpan> = Vec::new();

    let mut push_dropped = |dropped: &mut Vec<TokenSpan>, start: usize, end: usize| {
        if start >= end {
            return;
        }
        // coalesce spans that touch
        if let Some(last) = dropped.last_mut() {
            if last.end == start {
                last.end = end;
                return;
            }
        }
        dropped.push(TokenSpan { start, end });
    };

    // Close the open fragment at token index `end` (exclusive). Emits a
    // triple when all three spans are present and join into valid fields,
    // otherwise drops the fragment span.
    let close = |fragment: &mut Option<Fragment>,
                 triples: &mut Vec<Triple>,
                 dropped: &mut Vec<TokenSpan>,
                 push_dropped: &mut dyn FnMut(&mut Vec<TokenSpan>, usize, usize),
                 end: usize,
                 complete: bool| {
        if let Some(frag) = fragment.take() {
            if complete {
                let triple = Triple::new(
                    frag.subject.join(" "),
                    frag.predicate.join(" "),
                    frag.object.join(" "),
                );
                if let Ok(triple) = triple {
                    triples.push(triple);
                    return;
                }
            }
            push_dropped(dropped, frag.start, end);
        }
    };

    for (i, token) in seq.tokens.iter().enumerate() {
        let marker = cfg.marker_kind(token);
        match state {
            State::Seeking => match marker {
                Some(Marker::Subject) => {
                    fragment = Some(Fragment {
                        start: i,
                        subject: Vec::new(),
                        predicate: Vec::new(),
                        object: Vec::new(),
                    });
                    state = State::AfterS;
                }
                _ => push_dropped(&mut dropped, i, i + 1),
            },
            State::AfterS => match marker {
                None => fragment.as_mut().unwrap().subject.push(token.clone()),
                Some(Marker::Predicate) => state = State::AfterP,
                Some(Marker::Subject) => {
                    close(&mut fragment, &mut triples, &mut dropped, &mut push_dropped, i, false);
                    fragment = Some(Fragment {
                        start: i,
                        subject: Vec::new(),
                        predicate: Vec::new(),
                        object: Vec::new(),
                    });
                }
                Some(Marker::Object) => {
                    close(
                        &mut fragment,
                        &mut triples,
                        &mut dropped,
                        &mut push_dropped,
                        i + 1,
                        false,
                    );
                    state = State::Seeking;
                }
            },
            State::AfterP => match marker {
                None => fragment.as_mut().unwrap().predicate.push(token.clone()),
                Some(Marker::Object) => state = State::AfterO,
                Some(Marker::Subject) => {
                    close(&mut fragment, &mut triples, &mut dropped, &mut push_dropped, i, false);
                    fragment = Some(Fragment {
                        start: i,
                        subject: Vec::new(),
                        predicate: Vec::new(),
                        object: Vec::new(),
                    });
                    state = State::AfterS;
                }
                Some(Marker::Predicate) => {
                    close(
                        &mut fragment,
                        &mut triples,
                        &mut dropped,
                        &mut push_dropped,
                        i + 1,
                        false,
                    );
                    state = State::Seeking;
                }
            },
            State::AfterO => match marker {
                None => fragment.as_mut().unwrap().object.push(token.clone()),
                Some(kind) => {
                    let complete = {
                        let frag = fragment.as_ref().unwrap();
                        !frag.subject.is_empty()
                            && !frag.predicate.is_empty()
                            && !frag.object.is_empty()
                    };
                    close(
                        &mut fragment,
                        &mut triples,
                        &mut dropped,
                        &mut push_dropped,
                        i,
                        complete,
                    );
                    if kind == Marker::Subject {
                        fragment = Some(Fragment {
                            start: i,
                            subject: Vec::new(),
                            predicate: Vec::new(),
                            object: Vec::new(),
                        });
                        state = State::AfterS;
                    } else {
                        push_dropped(&mut dropped, i, i + 1);
                        state = State::Seeking;
                    }
                }
            },
        }
    }

    let end = seq.tokens.len();
    let complete = state == State::AfterO
        && fragment.as_ref().map_or(false, |f| {
            !f.subject.is_empty() && !f.predicate.is_empty() && !f.object.is_empty()
        });
    close(&mut fragment, &mut triples, &mut dropped, &mut push_dropped, end, complete);

    let well_formed = dropped.is_empty();
    ParseReport { graph: KnowledgeGraph::new(triples), dropped_fragments: dropped, well_formed }
}

/// Produce `n_permutations` triple-order variants of a graph from a seeded
/// generator. Element 0 is always the original order; every output is
/// graph-equal to the input.
pub fn augment_shuffle(
    graph: &KnowledgeGraph,
    n_permutations: usize,
    seed: u64,
) -> Vec<KnowledgeGraph> {
    assert!(n_permutations >= 1, "n_permutations must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_permutations);
    out.push(graph.clone());
    for _ in 1..n_permutations {
        let mut triples = graph.triples.clone();
        triples.shuffle(&mut rng);
        out.push(KnowledgeGraph::new(triples));
    }
    out
}

/// Prepend the task prefix tokens for the given direction.
pub fn prefix_task(
    seq: &TokenSequence,
    direction: Direction,
    cfg: &LinearizationConfig,
) -> TokenSequence {
    let mut tokens = cfg.prefix_tokens(direction);
    tokens.extend(seq.tokens.iter().cloned());
    TokenSequence::new(tokens)
}

/// Inverse of [`prefix_task`]: detect and remove a leading task prefix.
/// Returns `None` when the sequence starts with neither prefix.
pub fn strip_task_prefix(
    seq: &TokenSequence,
    cfg: &LinearizationConfig,
) -> Option<(Direction, TokenSequence)> {
    for direction in [Direction::G2T, Direction::T2G] {
        let prefix = cfg.prefix_tokens(direction);
        if seq.tokens.len() >= prefix.len() && seq.tokens[..prefix.len()] == prefix[..] {
            return Some((direction, TokenSequence::new(seq.tokens[prefix.len()..].to_vec())));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{graph_equal, NormalizationPolicy};

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(s, p, o).unwrap()
    }

    fn toks(raw: &[&str]) -> TokenSequence {
        TokenSequence::new(raw.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn linearize_lays_out_marker_then_field_tokens() {
        let cfg = LinearizationConfig::default();
        let g = KnowledgeGraph::new(vec![t("s1", "p1 p2", "o1 o2 o3")]);
        let seq = linearize(&g, &cfg).unwrap();
        assert_eq!(
            seq.tokens,
            vec!["<S>", "s1", "<P>", "p1", "p2", "<O>", "o1", "o2", "o3"]
        );
    }

    #[test]
    fn linearize_table_example() {
        let cfg = LinearizationConfig::default();
        let g = KnowledgeGraph::new(vec![t("Pontiac_Rageous", "assembly", "Detroit")]);
        let seq = linearize(&g, &cfg).unwrap();
        assert_eq!(seq.tokens, vec!["<S>", "Pontiac_Rageous", "<P>", "assembly", "<O>", "Detroit"]);
    }

    #[test]
    fn linearize_rejects_empty_graph_and_overflow() {
        let cfg = LinearizationConfig { max_tokens: 9, ..LinearizationConfig::default() };
        assert_eq!(linearize(&KnowledgeGraph::default(), &cfg), Err(CodecError::EmptyGraph));
        let g = KnowledgeGraph::new(vec![t("a", "b", "c"), t("d", "e", "f")]);
        assert_eq!(
            linearize(&g, &cfg),
            Err(CodecError::CapacityExceeded { needed: 18, max: 9 })
        );
    }

    #[test]
    fn config_validation_rejects_bad_markers() {
        let mut cfg = LinearizationConfig::default();
        cfg.predicate_marker = "<S>".into();
        assert!(matches!(cfg.validate(), Err(CodecError::InvalidConfig(_))));
        let mut cfg = LinearizationConfig::default();
        cfg.max_tokens = 8;
        assert!(matches!(cfg.validate(), Err(CodecError::InvalidConfig(_))));
    }

    #[test]
    fn delinearize_minimal_well_formed() {
        let cfg = LinearizationConfig::default();
        let report = delinearize(&toks(&["<S>", "A", "<P>", "r", "<O>", "B"]), &cfg);
        assert!(report.well_formed);
        assert!(report.dropped_fragments.is_empty());
        assert_eq!(report.graph.triples, vec![t("A", "r", "B")]);
    }

    #[test]
    fn delinearize_missing_object_drops_everything() {
        let cfg = LinearizationConfig::default();
        let report = delinearize(&toks(&["<S>", "A", "<P>", "r"]), &cfg);
        assert!(!report.well_formed);
        assert!(report.graph.is_empty());
        assert_eq!(report.dropped_fragments, vec![TokenSpan { start: 0, end: 4 }]);
    }

    #[test]
    fn delinearize_recovers_prefix_and_drops_bad_fragment() {
        let cfg = LinearizationConfig::default();
        let report =
            delinearize(&toks(&["<S>", "A", "<P>", "r", "<O>", "B", "<S>", "C", "<O>", "D"]), &cfg);
        assert!(!report.well_formed);
        assert_eq!(report.graph.triples, vec![t("A", "r", "B")]);
        assert_eq!(report.dropped_fragments, vec![TokenSpan { start: 6, end: 10 }]);
    }

    #[test]
    fn delinearize_completes_pending_triple_before_stray_marker() {
        let cfg = LinearizationConfig::default();
        let report = delinearize(&toks(&["<S>", "A", "<P>", "r", "<O>", "B", "<P>", "x"]), &cfg);
        assert_eq!(report.graph.triples, vec![t("A", "r", "B")]);
        assert_eq!(report.dropped_fragments, vec![TokenSpan { start: 6, end: 8 }]);
    }

    #[test]
    fn delinearize_empty_sequence_is_well_formed_and_empty() {
        let cfg = LinearizationConfig::default();
        let report = delinearize(&TokenSequence::default(), &cfg);
        assert!(report.well_formed);
        assert!(report.graph.is_empty());
    }

    #[test]
    fn delinearize_leading_garbage_goes_to_dropped() {
        let cfg = LinearizationConfig::default();
        let report = delinearize(&toks(&["x", "<O>", "<S>", "A", "<P>", "r", "<O>", "B"]), &cfg);
        assert_eq!(report.graph.triples, vec![t("A", "r", "B")]);
        assert_eq!(report.dropped_fragments, vec![TokenSpan { start: 0, end: 2 }]);
    }

    #[test]
    fn round_trip_preserves_graph() {
        let cfg = LinearizationConfig::default();
        let policy = NormalizationPolicy::default();
        let g = KnowledgeGraph::new(vec![t("A", "r", "B"), t("New York", "is in", "USA")]);
        let report = delinearize(&linearize(&g, &cfg).unwrap(), &cfg);
        assert!(report.well_formed);
        assert!(graph_equal(&report.graph, &g, &policy));
    }

    #[test]
    fn augment_single_triple_yields_identical_graphs() {
        let g = KnowledgeGraph::new(vec![t("A", "r", "B")]);
        let out = augment_shuffle(&g, 3, 7);
        assert_eq!(out.len(), 3);
        for perm in &out {
            assert_eq!(perm, &g);
        }
    }

    #[test]
    fn augment_is_deterministic_and_keeps_original_first() {
        let g = KnowledgeGraph::new(vec![t("A", "r", "B"), t("C", "s", "D"), t("E", "u", "F")]);
        let a = augment_shuffle(&g, 4, 99);
        let b = augment_shuffle(&g, 4, 99);
        assert_eq!(a, b);
        assert_eq!(a[0], g);
    }

    #[test]
    fn augment_outputs_are_graph_equal_to_input() {
        let policy = NormalizationPolicy::default();
        let g = KnowledgeGraph::new(vec![
            t("A", "r", "B"),
            t("C", "s", "D"),
            t("E", "u", "F"),
            t("G", "v", "H"),
        ]);
        for perm in augment_shuffle(&g, 24, 3) {
            assert!(graph_equal(&perm, &g, &policy));
            // brute-force multiset check, independent of graph_equal
            for triple in &g.triples {
                let expected = g.triples.iter().filter(|u| *u == triple).count();
                let got = perm.triples.iter().filter(|u| *u == triple).count();
                assert_eq!(expected, got);
            }
        }
    }

    #[test]
    fn prefix_tokens_match_task_strings() {
        let cfg = LinearizationConfig::default();
        let seq = toks(&["w1"]);
        assert_eq!(
            prefix_task(&seq, Direction::G2T, &cfg).tokens,
            vec!["Graph", "to", "Text:", "w1"]
        );
        assert_eq!(
            prefix_task(&seq, Direction::T2G, &cfg).tokens,
            vec!["Text", "to", "Graph:", "w1"]
        );
    }

    #[test]
    fn prefix_then_strip_is_identity() {
        let cfg = LinearizationConfig::default();
        let seq = toks(&["<S>", "A", "<P>", "r", "<O>", "B"]);
        for direction in [Direction::G2T, Direction::T2G] {
            let prefixed = prefix_task(&seq, direction, &cfg);
            let (got_dir, stripped) = strip_task_prefix(&prefixed, &cfg).unwrap();
            assert_eq!(got_dir, direction);
            assert_eq!(stripped, seq);
        }
        assert!(strip_task_prefix(&seq, &cfg).is_none());
    }
}
