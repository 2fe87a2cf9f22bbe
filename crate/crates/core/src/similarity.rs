//! Word and phrase similarity behind a pluggable provider.
//!
//! Matching runs a fixed cascade: normalized equality, then the synonym
//! lexicon, then the provider score against the threshold.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::normalize_token;

pub const DEFAULT_THRESHOLD: f64 = 0.8;

const BUNDLED_LEXICON: &str = include_str!("../data/synonyms.tsv");

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("similarity provider unavailable ({path}): {reason}")]
    ProviderUnavailable { path: String, reason: String },
    #[error("invalid similarity config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Exact,
    Lexicon,
    Vectors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub threshold: f64,
    pub provider: ProviderKind,
    pub lexicon_path: Option<PathBuf>,
    pub vectors_path: Option<PathBuf>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            provider: ProviderKind::Lexicon,
            lexicon_path: None,
            vectors_path: None,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(SimilarityError::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.provider == ProviderKind::Vectors && self.vectors_path.is_none() {
            return Err(SimilarityError::InvalidConfig(
                "provider=vectors requires a vectors path".into(),
            ));
        }
        Ok(())
    }
}

/// Command-line form: `exact`, `lexicon`, `lexicon:<path>` or `vectors:<path>`.
impl FromStr for SimilarityConfig {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, path) = match s.split_once(':') {
            Some((k, p)) => (k, Some(PathBuf::from(p))),
            None => (s, None),
        };
        let mut cfg = SimilarityConfig::default();
        match kind {
            "exact" if path.is_none() => cfg.provider = ProviderKind::Exact,
            "lexicon" => {
                cfg.provider = ProviderKind::Lexicon;
                cfg.lexicon_path = path;
            }
            "vectors" if path.is_some() => {
                cfg.provider = ProviderKind::Vectors;
                cfg.vectors_path = path;
            }
            _ => {
                return Err(SimilarityError::InvalidConfig(format!(
                    "unknown provider spec {s:?}"
                )))
            }
        }
        Ok(cfg)
    }
}

/// Anything that can score two normalized phrases in [0, 1].
pub trait SimilarityProvider: Send + Sync {
    fn score(&self, a: &str, b: &str) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ExactProvider;

impl SimilarityProvider for ExactProvider {
    fn score(&self, a: &str, b: &str) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }
}

/// Symmetric synonym pairs.
#[derive(Debug, Default, Clone)]
pub struct Lexicon {
    pairs: HashSet<(String, String)>,
}

impl Lexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }

    /// One pair per line, `word_a<TAB>word_b`. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lex = Lexicon::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected word_a<TAB>word_b", n + 1))?;
            let a = normalize_token(a).map_err(|_| format!("line {}: empty word", n + 1))?;
            let b = normalize_token(b).map_err(|_| format!("line {}: empty word", n + 1))?;
            lex.insert(a, b);
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, SimilarityError> {
        let text = read_provider_file(path)?;
        Self::parse(&text).map_err(|reason| SimilarityError::ProviderUnavailable {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn insert(&mut self, a: String, b: String) {
        self.pairs.insert((b.clone(), a.clone()));
        self.pairs.insert((a, b));
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl SimilarityProvider for Lexicon {
    fn score(&self, a: &str, b: &str) -> f64 {
        if a == b || self.are_synonyms(a, b) {
            1.0
        } else {
            0.0
        }
    }
}

/// Static word vectors. A phrase is embedded as the mean of its token
/// vectors; any out-of-vocabulary token makes the phrase unknown.
#[derive(Debug, Clone)]
pub struct WordVectors {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    /// One token per line: `token v1 v2 ... vd`, fixed `d`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("line {}: {e}", n + 1))?;
            if values.is_empty() {
                return Err(format!("line {}: no components", n + 1));
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(format!(
                        "line {}: expected {d} components, found {}",
                        n + 1,
                        values.len()
                    ))
                }
                _ => {}
            }
            vectors.insert(token.to_lowercase(), values);
        }
        let dim = dim.ok_or_else(|| "no vectors".to_string())?;
        Ok(Self { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self, SimilarityError> {
        let text = read_provider_file(path)?;
        Self::parse(&text).map_err(|reason| SimilarityError::ProviderUnavailable {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed(&self, phrase: &str) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        for token in phrase.split_whitespace() {
            let v = self.vectors.get(token)?;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
        if count == 0 {
            return None;
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        Some(sum)
    }
}

impl SimilarityProvider for WordVectors {
    fn score(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        let (Some(va), Some(vb)) = (self.embed(a), self.embed(b)) else {
            return 0.0;
        };
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let cosine = (dot / (na * nb)).clamp(-1.0, 1.0);
        (cosine + 1.0) / 2.0
    }
}

fn read_provider_file(path: &Path) -> Result<String, SimilarityError> {
    std::fs::read_to_string(path).map_err(|e| SimilarityError::ProviderUnavailable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// The matching gate used by the reasoner.
#[derive(Clone)]
pub struct Similarity {
    threshold: f64,
    kind: ProviderKind,
    lexicon: Option<Arc<Lexicon>>,
    provider: Arc<dyn SimilarityProvider>,
}

impl fmt::Debug for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Similarity")
            .field("threshold", &self.threshold)
            .field("kind", &self.kind)
            .field("lexicon_pairs", &self.lexicon.as_ref().map(|l| l.len()))
            .finish()
    }
}

impl Default for Similarity {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Similarity {
    /// Normalized equality only.
    pub fn exact() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            kind: ProviderKind::Exact,
            lexicon: None,
            provider: Arc::new(ExactProvider),
        }
    }

    /// Bundled synonym lexicon at the default threshold.
    pub fn bundled() -> Self {
        Self::with_lexicon(Lexicon::bundled())
    }

    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        let lexicon = Arc::new(lexicon);
        Self {
            threshold: DEFAULT_THRESHOLD,
            kind: ProviderKind::Lexicon,
            provider: lexicon.clone(),
            lexicon: Some(lexicon),
        }
    }

    /// A custom provider; the lexicon step of the cascade is skipped.
    pub fn with_provider(provider: Arc<dyn SimilarityProvider>, threshold: f64) -> Self {
        Self {
            threshold,
            kind: ProviderKind::Vectors,
            lexicon: None,
            provider,
        }
    }

    pub fn from_config(cfg: &SimilarityConfig) -> Result<Self, SimilarityError> {
        cfg.validate()?;
        let lexicon = match &cfg.lexicon_path {
            Some(p) => Lexicon::load(p)?,
            None => Lexicon::bundled(),
        };
        let mut sim = match cfg.provider {
            ProviderKind::Exact => Self::exact(),
            ProviderKind::Lexicon => Self::with_lexicon(lexicon),
            ProviderKind::Vectors => {
                let path = cfg.vectors_path.as_deref().expect("validated above");
                Self {
                    threshold: cfg.threshold,
                    kind: ProviderKind::Vectors,
                    lexicon: Some(Arc::new(lexicon)),
                    provider: Arc::new(WordVectors::load(path)?),
                }
            }
        };
        sim.threshold = cfg.threshold;
        Ok(sim)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn kind(&self) -> ProviderKind {
        self.kind
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        let (a, b) = (normalized(a), normalized(b));
        if a == b {
            return 1.0;
        }
        self.provider.score(&a, &b)
    }

    /// Equality, then lexicon, then score ≥ threshold.
    pub fn is_match(&self, a: &str, b: &str) -> bool {
        let (a, b) = (normalized(a), normalized(b));
        if a == b {
            return true;
        }
        if let Some(lex) = &self.lexicon {
            if lex.are_synonyms(&a, &b) {
                return true;
            }
        }
        if self.kind == ProviderKind::Exact {
            return false;
        }
        self.provider.score(&a, &b) >= self.threshold
    }
}

fn normalized(s: &str) -> String {
    normalize_token(s).unwrap_or_default()
}
