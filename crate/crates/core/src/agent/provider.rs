//! Where plans come from.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenParams {
    fn default() -> GenParams {
        GenParams {
            temperature: 0.0,
            max_tokens: 2048,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider refused the request")]
    Rejected,
    #[error("no canned response for prompt {hash} (expected {path})")]
    NoReplay { hash: String, path: PathBuf },
    #[error("bad canned response {path}: {message}")]
    BadReplay { path: PathBuf, message: String },
    #[error("scripted provider has no responses left")]
    Exhausted,
    #[error("provider is not configured: {0}")]
    Config(String),
    #[error("request failed: {0}")]
    Transport(String),
}

/// Sends a prompt, returns the completion text.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError>;
}

/// Hex SHA-256 of the prompt; names replay files.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct Completion {
    text: String,
}

/// Answers from `<dir>/<sha256 of prompt>.json` files holding `{"text": ...}`.
#[derive(Clone, Debug)]
pub struct ReplayProvider {
    dir: PathBuf,
}

impl ReplayProvider {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayProvider {
        ReplayProvider { dir: dir.into() }
    }

    pub fn path_for(&self, prompt: &str) -> PathBuf {
        self.dir.join(format!("{}.json", prompt_hash(prompt)))
    }

    /// Stores `text` as the response to `prompt`.
    pub fn record(dir: &Path, prompt: &str, text: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = ReplayProvider::new(dir).path_for(prompt);
        let body = serde_json::to_string_pretty(&Completion { text: text.to_string() }).expect("completion serializes");
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

impl CompletionProvider for ReplayProvider {
    fn complete(&self, prompt: &str, _: &GenParams) -> Result<String, ProviderError> {
        let path = self.path_for(prompt);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ProviderError::NoReplay {
                    hash: prompt_hash(prompt),
                    path,
                })
            }
            Err(e) => {
                return Err(ProviderError::BadReplay {
                    path,
                    message: e.to_string(),
                })
            }
        };
        serde_json::from_str::<Completion>(&text)
            .map(|c| c.text)
            .map_err(|e| ProviderError::BadReplay {
                path,
                message: e.to_string(),
            })
    }
}

/// Fails every request.
#[derive(Clone, Copy, Debug, Default)]
pub struct RejectingProvider;

impl CompletionProvider for RejectingProvider {
    fn complete(&self, _: &str, _: &GenParams) -> Result<String, ProviderError> {
        Err(ProviderError::Rejected)
    }
}

/// Hands out fixed responses in order and records the prompts it saw.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    responses: Mutex<Vec<String>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedProvider {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> ScriptedProvider {
        let mut r: Vec<String> = responses.into_iter().map(Into::into).collect();
        r.reverse();
        ScriptedProvider {
            responses: Mutex::new(r),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log").clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("prompt log").len()
    }
}

impl CompletionProvider for ScriptedProvider {
    fn complete(&self, prompt: &str, _: &GenParams) -> Result<String, ProviderError> {
        self.prompts.lock().expect("prompt log").push(prompt.to_string());
        self.responses.lock().expect("responses").pop().ok_or(ProviderError::Exhausted)
    }
}

pub const URL_VAR: &str = "LOGIPLAN_LLM_URL";
pub const KEY_VAR: &str = "LOGIPLAN_LLM_KEY";

/// POSTs `{prompt, temperature, max_tokens}` and reads `{text}`.
#[cfg(feature = "http")]
#[derive(Clone, Debug)]
pub struct HttpProvider {
    pub url: String,
    pub key: Option<String>,
}

#[cfg(feature = "http")]
impl HttpProvider {
    /// Reads the endpoint and key from the environment.
    pub fn from_env() -> Result<HttpProvider, ProviderError> {
        let url = std::env::var(URL_VAR).map_err(|_| ProviderError::Config(format!("{URL_VAR} is not set")))?;
        Ok(HttpProvider {
            url,
            key: std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty()),
        })
    }
}

#[cfg(feature = "http")]
#[derive(Serialize)]
struct HttpRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[cfg(feature = "http")]
impl CompletionProvider for HttpProvider {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, ProviderError> {
        let mut req = ureq::post(&self.url).header("Content-Type", "application/json");
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let body = HttpRequest {
            prompt,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let mut resp = req.send_json(&body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let c: Completion = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transport(format!("bad response body: {e}")))?;
        Ok(c.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = ReplayProvider::record(dir.path(), "hello", "{\"x\": 1}").unwrap();
        assert_eq!(
            path.file_name().unwrap().to_str().unwrap(),
            format!("{}.json", prompt_hash("hello"))
        );
        let p = ReplayProvider::new(dir.path());
        assert_eq!(p.complete("hello", &GenParams::default()).unwrap(), "{\"x\": 1}");
        assert!(matches!(
            p.complete("other", &GenParams::default()),
            Err(ProviderError::NoReplay { .. })
        ));
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(prompt_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn scripted_in_order() {
        let p = ScriptedProvider::new(["a", "b"]);
        assert_eq!(p.complete("1", &GenParams::default()).unwrap(), "a");
        assert_eq!(p.complete("2", &GenParams::default()).unwrap(), "b");
        assert!(matches!(p.complete("3", &GenParams::default()), Err(ProviderError::Exhausted)));
        assert_eq!(p.prompts(), ["1", "2", "3"]);
    }
}
