//! Core domain types: triples, graphs, dataset samples, and the string
//! normalization policy shared by the codec and both metric stacks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker tokens that must never appear inside triple fields.
pub const RESERVED_MARKERS: [&str; 3] = ["<S>", "<P>", "<O>"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("triple field `{0}` is empty after trimming")]
    EmptyField(&'static str),
    #[error("triple field `{field}` contains reserved marker `{marker}`")]
    MarkerInField { field: &'static str, marker: &'static str },
    #[error("sample text must be non-empty")]
    EmptyText,
    #[error("sample id must be non-empty")]
    EmptyId,
}

/// A subject-predicate-object fact. Fields keep their original surface form;
/// normalization happens only at comparison and scoring time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let triple = Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        };
        for (name, value) in triple.fields() {
            if value.trim().is_empty() {
                return Err(ModelError::EmptyField(name));
            }
            for marker in RESERVED_MARKERS {
                if value.contains(marker) {
                    return Err(ModelError::MarkerInField { field: name, marker });
                }
            }
        }
        Ok(triple)
    }

    /// Field values paired with their slot names, in subject/predicate/object order.
    pub fn fields(&self) -> [(&'static str, &str); 3] {
        [
            ("subject", self.subject.as_str()),
            ("predicate", self.predicate.as_str()),
            ("object", self.object.as_str()),
        ]
    }
}

/// An ordered list of triples. The order is the dataset-given linearization
/// order; equality for scoring is multiset equality of normalized triples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub triples: Vec<Triple>,
}

impl KnowledgeGraph {
    pub fn new(triples: Vec<Triple>) -> Self {
        KnowledgeGraph { triples }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

impl From<Vec<Triple>> for KnowledgeGraph {
    fn from(triples: Vec<Triple>) -> Self {
        KnowledgeGraph::new(triples)
    }
}

/// One dataset sample: a text, its graph, and an optional category label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub graph: KnowledgeGraph,
    pub category: Option<String>,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        graph: KnowledgeGraph,
        category: Option<String>,
    ) -> Result<Self, ModelError> {
        let sample = Sample { id: id.into(), text: text.into(), graph, category };
        if sample.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if sample.text.trim().is_empty() {
            return Err(ModelError::EmptyText);
        }
        Ok(sample)
    }
}

/// Flags controlling how strings are canonicalized before comparison.
///
/// Defaults: lowercase, underscores to spaces, and whitespace collapsing on;
/// accent stripping off. This matches the surface variation between
/// underscored entity names and natural text without transforms the datasets
/// never call for. Normalization is idempotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
    pub underscores_to_spaces: bool,
    pub collapse_whitespace: bool,
    pub strip_accents: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            lowercase: true,
            underscores_to_spaces: true,
            collapse_whitespace: true,
            strip_accents: false,
        }
    }
}

impl NormalizationPolicy {
    /// Identity policy: all flags off.
    pub fn none() -> Self {
        NormalizationPolicy {
            lowercase: false,
            underscores_to_spaces: false,
            collapse_whitespace: false,
            strip_accents: false,
        }
    }
}

/// Canonicalize a string under the given policy. Total and idempotent.
pub fn normalize(s: &str, policy: &NormalizationPolicy) -> String {
    let mut out = s.to_string();
    if policy.underscores_to_spaces {
        out = out.replace('_', " ");
    }
    if policy.lowercase {
        out = out.to_lowercase();
    }
    if policy.strip_accents {
        out = out.chars().map(fold_accent).collect();
    }
    if policy.collapse_whitespace {
        out = out.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    out
}

/// Map common accented Latin characters to their base letter. Characters
/// outside the table pass through unchanged.
fn fold_accent(c: char) -> char {
    match c {
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => 'a',
        'è' | 'é' | 'ê' | 'ë' => 'e',
        'ì' | 'í' | 'î' | 'ï' => 'i',
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' => 'o',
        'ù' | 'ú' | 'û' | 'ü' => 'u',
        'ý' | 'ÿ' => 'y',
        'ç' => 'c',
        'ñ' => 'n',
        'š' => 's',
        'ž' => 'z',
        'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => 'A',
        'È' | 'É' | 'Ê' | 'Ë' => 'E',
        'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
        'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' => 'O',
        'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
        'Ý' => 'Y',
        'Ç' => 'C',
        'Ñ' => 'N',
        'Š' => 'S',
        'Ž' => 'Z',
        other => other,
    }
}

/// Normalized (subject, predicate, object) key used for multiset comparison.
pub fn normalized_key(t: &Triple, policy: &NormalizationPolicy) -> (String, String, String) {
    (
        normalize(&t.subject, policy),
        normalize(&t.predicate, policy),
        normalize(&t.object, policy),
    )
}

/// True iff the two graphs contain the same multiset of normalized triples,
/// ignoring order.
pub fn graph_equal(a: &KnowledgeGraph, b: &KnowledgeGraph, policy: &NormalizationPolicy) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ka: Vec<_> = a.triples.iter().map(|t| normalized_key(t, policy)).collect();
    let mut kb: Vec<_> = b.triples.iter().map(|t| normalized_key(t, policy)).collect();
    ka.sort();
    kb.sort();
    ka == kb
}
