//! Deterministic backends for tests and offline runs.

use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{Completion, CompletionBackend, CompletionRequest, Embedder, LlmError};

/// Replies with the user message.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl CompletionBackend for EchoBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        Ok(Completion::text(request.user_message.clone()))
    }
}

/// Sleeps before echoing.
#[derive(Debug, Clone, Copy)]
pub struct StallingBackend {
    delay: Duration,
}

impl StallingBackend {
    pub fn new(delay: Duration) -> Self {
        StallingBackend { delay }
    }
}

impl CompletionBackend for StallingBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        thread::sleep(self.delay);
        Ok(Completion::text(request.user_message.clone()))
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ScriptEntry {
    #[serde(rename = "match", default)]
    matcher: String,
    response: String,
}

/// Replays canned responses. Each entry answers the first prompt that
/// contains its matcher (an empty matcher matches anything) and is then
/// used up.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    entries: Mutex<Vec<ScriptEntry>>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<(String, String)>) -> Self {
        let entries = entries.into_iter().map(|(matcher, response)| ScriptEntry { matcher, response }).collect();
        ScriptedBackend { entries: Mutex::new(entries) }
    }

    /// Responses consumed strictly in order.
    pub fn sequence<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(responses.into_iter().map(|r| (String::new(), r.into())).collect())
    }

    /// Loads a JSON array of `{"match": ..., "response": ...}` objects.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let entries: Vec<ScriptEntry> =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(ScriptedBackend { entries: Mutex::new(entries) })
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().expect("script lock").len()
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let mut entries = self.entries.lock().expect("script lock");
        if entries.is_empty() {
            return Err(LlmError::ScriptExhausted);
        }
        let prompt = request.prompt_text();
        let pos = entries
            .iter()
            .position(|e| e.matcher.is_empty() || prompt.contains(&e.matcher))
            .ok_or(LlmError::NoMatch)?;
        Ok(Completion::text(entries.remove(pos).response))
    }
}

/// Offline embedder: hashed word and character-trigram features plus a
/// small text-seeded perturbation, normalised to unit length. Similar
/// texts land close together and identical texts map to identical vectors.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 64;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder { dimension }
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let lower = text.to_lowercase();
        let mut v = vec![0.0; self.dimension];
        let mut add = |feature: &str, weight: f64| {
            let digest = Sha256::digest(feature.as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) as usize % self.dimension;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign * weight;
        };
        for word in lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            add(&format!("w:{word}"), 1.0);
        }
        let chars: Vec<char> = format!("  {lower}  ").chars().collect();
        for tri in chars.windows(3) {
            add(&format!("t:{}", tri.iter().collect::<String>()), 0.5);
        }
        let seed = Sha256::digest(text.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed.into());
        for x in v.iter_mut() {
            *x += rng.gen_range(-0.05..0.05);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / norm).collect()
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(Self::DEFAULT_DIMENSION)
    }
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, LlmError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
