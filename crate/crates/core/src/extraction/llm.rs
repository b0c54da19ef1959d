//! Engine backed by an OpenAI-compatible chat-completions endpoint.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::cache::{cache_key, CacheEntry, ResponseCache};
use super::schema;
use super::types::*;
use super::{ExtractionEngine, ExtractionError, PROMPT_VERSION};
use crate::corpus::Post;

pub const API_KEY_ENV: &str = "NEEDSCOPE_API_KEY";

const SYSTEM_PROMPT: &str = include_str!("../../prompts/system.txt");
const SUMMARY_PROMPT: &str = include_str!("../../prompts/summary.txt");
const NEEDS_PROMPT: &str = include_str!("../../prompts/needs.txt");
const HIERARCHY_PROMPT: &str = include_str!("../../prompts/hierarchy.txt");
const BEHAVIOR_PROMPT: &str = include_str!("../../prompts/behavior.txt");
const AGE_INCOME_PROMPT: &str = include_str!("../../prompts/age_income.txt");

const CORRECTIVE_SUFFIX: &str = "Your previous reply did not match the required JSON schema";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay_ms: 500, max_delay_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Upper bound of the delay before retry number `retry` (0-based); the
    /// actual sleep is jittered into the upper half of this bound.
    pub fn ceiling(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.min(32)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }

    fn delay(&self, retry: u32) -> Duration {
        self.ceiling(retry).mul_f64(rand::random_range(0.5..=1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer credential.
    pub api_key_env: String,
    pub max_concurrency: usize,
    /// Sustained request rate across all workers; 0 disables limiting.
    pub requests_per_second: f64,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            base_url: "https://api.groq.com/openai/v1".into(),
            model: "llama-3.1-70b-versatile".into(),
            api_key_env: API_KEY_ENV.into(),
            max_concurrency: 4,
            requests_per_second: 0.0,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
        }
    }
}

/// Token bucket shared by all in-flight requests.
struct RateLimiter {
    rate: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    fn new(rate: f64) -> Self {
        RateLimiter { rate, state: Mutex::new((rate.max(1.0), Instant::now())) }
    }

    fn acquire(&self) {
        if !(self.rate > 0.0) {
            return;
        }
        loop {
            let wait = {
                let mut st = self.state.lock().unwrap();
                let now = Instant::now();
                let capacity = self.rate.max(1.0);
                st.0 = (st.0 + now.duration_since(st.1).as_secs_f64() * self.rate).min(capacity);
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                (1.0 - st.0) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

pub struct LlmEngine {
    config: EngineConfig,
    api_key: Option<String>,
    cache: ResponseCache,
    agent: ureq::Agent,
    limiter: RateLimiter,
    requests: AtomicUsize,
}

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

fn numbered(summary: &QuerySummary) -> String {
    summary
        .queries()
        .enumerate()
        .map(|(i, q)| format!("{}. {}", i + 1, q))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Strips a markdown code fence some models wrap around JSON.
fn unfence(content: &str) -> &str {
    let t = content.trim();
    t.strip_prefix("```json")
        .or_else(|| t.strip_prefix("```"))
        .and_then(|s| s.strip_suffix("```"))
        .map(str::trim)
        .unwrap_or(t)
}

impl LlmEngine {
    /// Reads the credential from `config.api_key_env`. A missing key only
    /// fails once a request actually has to go over the network.
    pub fn new(config: EngineConfig, cache: ResponseCache) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, cache, api_key)
    }

    pub fn with_api_key(config: EngineConfig, cache: ResponseCache, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        LlmEngine {
            limiter: RateLimiter::new(config.requests_per_second),
            config,
            api_key,
            cache,
            agent,
            requests: AtomicUsize::new(0),
        }
    }

    /// HTTP requests issued so far, retries and re-asks included.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Sends `prompt`, validates the reply against `schema_id` and caches it.
    pub fn llm_call(&self, prompt: &str, schema_id: &str) -> Result<Value, ExtractionError> {
        self.call_with(prompt, schema_id, &|v| schema::check(schema_id, v))
    }

    fn call_with(
        &self,
        prompt: &str,
        schema_id: &str,
        validate: &dyn Fn(&Value) -> Result<(), String>,
    ) -> Result<Value, ExtractionError> {
        let key = cache_key(schema_id, prompt, &self.config.model, PROMPT_VERSION);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }

        let mut messages = vec![
            json!({"role": "system", "content": render(SYSTEM_PROMPT, &[("schema_id", schema_id)])}),
            json!({"role": "user", "content": prompt}),
        ];
        let mut last_reason = String::new();
        let mut last_raw = String::new();
        for ask in 0..2 {
            if ask == 1 {
                messages.push(json!({"role": "assistant", "content": last_raw}));
                messages.push(json!({
                    "role": "user",
                    "content": format!("{CORRECTIVE_SUFFIX} `{schema_id}`: {last_reason}. Reply again with only the corrected JSON object."),
                }));
            }
            let raw = self.chat(&messages)?;
            let parsed = serde_json::from_str::<Value>(unfence(&raw))
                .map_err(|e| format!("not JSON: {e}"))
                .and_then(|v| validate(&v).map(|_| v));
            match parsed {
                Ok(payload) => {
                    self.cache.put(CacheEntry {
                        key_hash: key,
                        schema_id: schema_id.to_string(),
                        prompt_version: PROMPT_VERSION.to_string(),
                        payload: payload.clone(),
                        timestamp: chrono::Utc::now().timestamp(),
                    })?;
                    return Ok(payload);
                }
                Err(reason) => {
                    log::debug!("schema {schema_id} rejected reply (ask {}): {reason}", ask + 1);
                    last_reason = reason;
                    last_raw = raw;
                }
            }
        }
        Err(ExtractionError::Validation { schema_id: schema_id.to_string(), reason: last_reason, raw: last_raw })
    }

    /// One chat completion with bounded exponential backoff on 429/5xx and transport errors.
    fn chat(&self, messages: &[Value]) -> Result<String, ExtractionError> {
        let key = self.api_key.as_deref().ok_or_else(|| {
            ExtractionError::Config(format!("no API credential: set {}", self.config.api_key_env))
        })?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": 0,
            "response_format": {"type": "json_object"},
        });

        let attempts = self.config.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.config.retry.delay(attempt - 1));
            }
            self.limiter.acquire();
            self.requests.fetch_add(1, Ordering::SeqCst);
            let result = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {key}"))
                .send_json(&body);
            let mut resp = match result {
                Ok(r) => r,
                Err(e) => {
                    last = format!("transport: {e}");
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            if status == 429 || status >= 500 {
                last = format!("HTTP {status}");
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(ExtractionError::Engine { message: format!("HTTP {status}: {text}"), retryable: false });
            }
            let envelope: Value = serde_json::from_str(&text).map_err(|e| ExtractionError::Engine {
                message: format!("malformed completion envelope: {e}"),
                retryable: false,
            })?;
            return envelope
                .pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| ExtractionError::Engine {
                    message: "completion has no choices[0].message.content".into(),
                    retryable: false,
                });
        }
        Err(ExtractionError::Engine { message: format!("gave up after {attempts} attempts: {last}"), retryable: true })
    }

    fn validation(schema_id: &str, reason: String, payload: &Value) -> ExtractionError {
        ExtractionError::Validation { schema_id: schema_id.into(), reason, raw: payload.to_string() }
    }
}

impl ExtractionEngine for LlmEngine {
    fn name(&self) -> &str {
        "llm"
    }

    fn summarize(&self, post: &Post) -> Result<QuerySummary, ExtractionError> {
        let prompt = render(SUMMARY_PROMPT, &[("post", &post.text)]);
        let v = self.llm_call(&prompt, schema::SUMMARY)?;
        schema::parse_summary(&post.post_id, &v).map_err(|r| Self::validation(schema::SUMMARY, r, &v))
    }

    fn extract_needs(&self, summary: &QuerySummary) -> Result<Vec<NeedLabel>, ExtractionError> {
        let prompt = render(NEEDS_PROMPT, &[("queries", &numbered(summary))]);
        let n = summary.query_count();
        let v = self.call_with(&prompt, schema::NEEDS, &|v| schema::parse_needs(v, n).map(drop))?;
        schema::parse_needs(&v, n).map_err(|r| Self::validation(schema::NEEDS, r, &v))
    }

    fn map_hierarchy(&self, label: &NeedLabel, context: &QuerySummary) -> Result<(NhfLevel7, NpfLevel), ExtractionError> {
        let queries = numbered(context);
        let prompt = render(
            HIERARCHY_PROMPT,
            &[("purpose", &label.purpose), ("process", &label.process), ("queries", &queries)],
        );
        let v = self.llm_call(&prompt, schema::HIERARCHY)?;
        schema::parse_hierarchy(&v).map_err(|r| Self::validation(schema::HIERARCHY, r, &v))
    }

    fn assess_behavior(&self, label: &NeedLabel, context: &QuerySummary) -> Result<(StressLevel, RiskLevel), ExtractionError> {
        let queries = numbered(context);
        let prompt = render(
            BEHAVIOR_PROMPT,
            &[("purpose", &label.purpose), ("process", &label.process), ("queries", &queries)],
        );
        let v = self.llm_call(&prompt, schema::BEHAVIOR)?;
        schema::parse_behavior(&v).map_err(|r| Self::validation(schema::BEHAVIOR, r, &v))
    }

    fn detect_age_income(&self, post: &Post) -> Result<DetectedMentions, ExtractionError> {
        let prompt = render(AGE_INCOME_PROMPT, &[("post", &post.text)]);
        let v = self.llm_call(&prompt, schema::AGE_INCOME)?;
        schema::parse_age_income(&v).map_err(|r| Self::validation(schema::AGE_INCOME, r, &v))
    }
}
