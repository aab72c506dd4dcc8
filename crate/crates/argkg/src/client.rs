//! Rate-limited SPARQL client with an on-disk record/replay cache.
//!
//! Each (entity, property set) pair is one query. Responses are stored under
//! `cache_dir/<sha256>.json`, keyed by the entity id and the sorted property
//! list, together with the request that produced them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use argkg_core::query::{build_entity_query, cache_key_material, canonical_properties, QueryError};
use argkg_core::{EntityNeighborhood, NeighborhoodSource};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const WIKIDATA_ENDPOINT: &str = "https://query.wikidata.org/sparql";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Always query the endpoint; the cache is neither read nor written.
    Live,
    /// Serve from the cache when present, otherwise query and store.
    Record,
    /// Serve only from the cache; a miss is an error.
    Replay,
}

impl FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(CacheMode::Live),
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            other => Err(format!("unknown mode `{other}` (expected live, record or replay)")),
        }
    }
}

impl fmt::Display for CacheMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CacheMode::Live => "live",
            CacheMode::Record => "record",
            CacheMode::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub endpoint: String,
    pub mode: CacheMode,
    pub cache_dir: PathBuf,
    pub rate_limit_ms: u64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub result_limit: usize,
    pub user_agent: String,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: WIKIDATA_ENDPOINT.to_string(),
            mode: CacheMode::Replay,
            cache_dir: PathBuf::from("cache/sparql"),
            rate_limit_ms: 200,
            timeout_secs: 30,
            max_retries: 3,
            result_limit: argkg_core::query::DEFAULT_RESULT_LIMIT,
            user_agent: format!("argkg/{} (research tool)", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("network error: {0}")]
    Network(String),
}

impl TransportError {
    fn retryable(&self) -> bool {
        match self {
            TransportError::Status(s) => *s == 429 || *s >= 500,
            TransportError::Network(_) => true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("replay cache has no entry for {entity} ({path})")]
    CacheMiss { entity: String, path: PathBuf },
    #[error("request for {entity} failed after {attempts} attempt(s): {source}")]
    Transport {
        entity: String,
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("malformed SPARQL response for {entity}: {message}")]
    Response { entity: String, message: String },
    #[error("cache file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path}: {source}")]
    CacheFormat {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Sends one query and returns the raw SPARQL JSON results body.
pub trait Transport: Send + Sync {
    fn execute(&self, endpoint: &str, query: &str) -> Result<String, TransportError>;
}

/// HTTP POST transport (form-encoded `query=`), JSON results.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: &ClientConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .user_agent(config.user_agent.as_str())
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for HttpTransport {
    fn execute(&self, endpoint: &str, query: &str) -> Result<String, TransportError> {
        let mut resp = self
            .agent
            .post(endpoint)
            .header("Accept", "application/sparql-results+json")
            .send_form([("query", query)])
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(TransportError::Status(status));
        }
        resp.body_mut().read_to_string().map_err(|e| TransportError::Network(e.to_string()))
    }
}

/// Answers entity-neighborhood queries from a local statement table, in
/// the same JSON shape as the public endpoint. Used to build fixture caches
/// without network access.
///
/// The table is TSV: `subject  property  object  object_label` (label may be
/// empty).
#[derive(Debug, Clone, Default)]
pub struct LocalKb {
    statements: BTreeMap<String, Vec<(String, String, Option<String>)>>,
}

impl LocalKb {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut statements: BTreeMap<String, Vec<_>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 3 || f.len() > 4 {
                return Err(format!("line {}: expected 3 or 4 tab-separated fields", n + 1));
            }
            let label = f.get(3).map(|l| l.trim()).filter(|l| !l.is_empty()).map(str::to_string);
            statements.entry(f[0].trim().to_string()).or_default().push((f[1].trim().to_string(), f[2].trim().to_string(), label));
        }
        Ok(Self { statements })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn statement_count(&self) -> usize {
        self.statements.values().map(Vec::len).sum()
    }

    /// Pulls subject, property set and limit back out of an entity query.
    fn parse_query(query: &str) -> Option<(String, Vec<String>, usize)> {
        let values = query.split("VALUES ?p {").nth(1)?.split('}').next()?;
        let props = values.split_whitespace().filter_map(|t| t.strip_prefix("wdt:")).map(str::to_string).collect();
        let subject = query
            .lines()
            .map(str::trim)
            .find(|l| l.starts_with("wd:") && l.contains("?p ?o"))?
            .split_whitespace()
            .next()?
            .strip_prefix("wd:")?
            .to_string();
        let limit = query.split("LIMIT").nth(1).and_then(|s| s.trim().parse().ok()).unwrap_or(usize::MAX);
        Some((subject, props, limit))
    }
}

impl Transport for LocalKb {
    fn execute(&self, _endpoint: &str, query: &str) -> Result<String, TransportError> {
        let (subject, props, limit) = Self::parse_query(query).ok_or(TransportError::Status(400))?;
        let mut rows: Vec<&(String, String, Option<String>)> = self
            .statements
            .get(&subject)
            .map(|v| v.iter().filter(|(p, _, _)| props.contains(p)).collect())
            .unwrap_or_default();
        rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        rows.truncate(limit);
        let bindings: Vec<Value> = rows
            .into_iter()
            .map(|(p, o, label)| {
                let mut b = json!({
                    "p": {"type": "uri", "value": format!("{}{p}", argkg_core::query::DIRECT_PROPERTY_PREFIX)},
                    "o": {"type": "uri", "value": format!("{}{o}", argkg_core::query::ENTITY_PREFIX)},
                });
                if let Some(l) = label {
                    b["oLabel"] = json!({"type": "literal", "xml:lang": "en", "value": l});
                }
                b
            })
            .collect();
        let body = json!({"head": {"vars": ["p", "o", "oLabel"]}, "results": {"bindings": bindings}});
        Ok(body.to_string())
    }
}

/// Request half of a cache entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRequest {
    pub endpoint: String,
    pub entity: String,
    pub properties: Vec<String>,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: CachedRequest,
    pub response: Value,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
}

/// Counters exposed for tests and run summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientCounters {
    pub requests: usize,
    pub network_calls: usize,
    pub cache_hits: usize,
}

pub struct SparqlClient {
    config: ClientConfig,
    transport: Arc<dyn Transport>,
    // Time of the last network call; locked for the whole exchange.
    last_call: Mutex<Option<Instant>>,
    requests: AtomicUsize,
    network_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl SparqlClient {
    pub fn new(config: ClientConfig, transport: Arc<dyn Transport>) -> Self {
        Self {
            config,
            transport,
            last_call: Mutex::new(None),
            requests: AtomicUsize::new(0),
            network_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    /// Client over HTTP, or over a local statement table when the endpoint
    /// is a `file://` path.
    pub fn from_config(config: ClientConfig) -> Result<Self, String> {
        let transport: Arc<dyn Transport> = match config.endpoint.strip_prefix("file://") {
            Some(path) => Arc::new(LocalKb::load(Path::new(path))?),
            None => Arc::new(HttpTransport::new(&config)),
        };
        Ok(Self::new(config, transport))
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn counters(&self) -> ClientCounters {
        ClientCounters {
            requests: self.requests.load(Ordering::SeqCst),
            network_calls: self.network_calls.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    pub fn cache_path(&self, entity: &str, properties: &[String]) -> PathBuf {
        self.config.cache_dir.join(format!("{}.json", cache_key(entity, properties)))
    }

    pub fn fetch(&self, entity: &str, properties: &[String]) -> Result<EntityNeighborhood, ClientError> {
        let props = canonical_properties(properties);
        let query = build_entity_query(entity, &props, self.config.result_limit)?;
        self.requests.fetch_add(1, Ordering::SeqCst);
        let path = self.cache_path(entity, &props);
        let response = match self.config.mode {
            CacheMode::Replay => match read_entry(&path)? {
                Some(e) => {
                    self.cache_hits.fetch_add(1, Ordering::SeqCst);
                    e.response
                }
                None => return Err(ClientError::CacheMiss { entity: entity.to_string(), path }),
            },
            CacheMode::Record => match read_entry(&path)? {
                Some(e) => {
                    self.cache_hits.fetch_add(1, Ordering::SeqCst);
                    e.response
                }
                None => {
                    let body = self.call(entity, &query)?;
                    let response = parse_body(entity, &body)?;
                    let entry = CacheEntry {
                        request: CachedRequest {
                            endpoint: self.config.endpoint.clone(),
                            entity: entity.to_string(),
                            properties: props.clone(),
                            query: query.clone(),
                        },
                        response: response.clone(),
                        fetched_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
                    };
                    write_entry(&path, &entry)?;
                    response
                }
            },
            CacheMode::Live => {
                let body = self.call(entity, &query)?;
                parse_body(entity, &body)?
            }
        };
        neighborhood_from_json(entity, &props, &response)
    }

    fn call(&self, entity: &str, query: &str) -> Result<String, ClientError> {
        let mut last = self.last_call.lock().unwrap_or_else(|p| p.into_inner());
        let spacing = Duration::from_millis(self.config.rate_limit_ms);
        let mut attempt = 0;
        loop {
            if let Some(t) = *last {
                let since = t.elapsed();
                if since < spacing {
                    thread::sleep(spacing - since);
                }
            }
            attempt += 1;
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            let result = self.transport.execute(&self.config.endpoint, query);
            *last = Some(Instant::now());
            match result {
                Ok(body) => return Ok(body),
                Err(e) if e.retryable() && attempt <= self.config.max_retries => {
                    let backoff = spacing.max(Duration::from_millis(100)) * 2u32.pow(attempt - 1);
                    log::warn!("query for {entity} failed ({e}); retry {attempt} in {backoff:?}");
                    thread::sleep(backoff);
                }
                Err(e) => {
                    return Err(ClientError::Transport { entity: entity.to_string(), attempts: attempt, source: e });
                }
            }
        }
    }
}

impl NeighborhoodSource for SparqlClient {
    type Error = ClientError;

    fn neighborhood(&self, entity: &str, properties: &[String]) -> Result<EntityNeighborhood, ClientError> {
        self.fetch(entity, properties)
    }
}

/// Hex SHA-256 of the cache key material.
pub fn cache_key(entity: &str, properties: &[String]) -> String {
    hex::encode(Sha256::digest(cache_key_material(entity, properties).as_bytes()))
}

fn read_entry(path: &Path) -> Result<Option<CacheEntry>, ClientError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|source| ClientError::CacheFormat { path: path.to_path_buf(), source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(ClientError::Io { path: path.to_path_buf(), source }),
    }
}

fn write_entry(path: &Path, entry: &CacheEntry) -> Result<(), ClientError> {
    let io = |source| ClientError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let text = serde_json::to_string_pretty(entry).expect("cache entries serialize");
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text + "\n").map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn parse_body(entity: &str, body: &str) -> Result<Value, ClientError> {
    serde_json::from_str(body).map_err(|e| ClientError::Response { entity: entity.to_string(), message: e.to_string() })
}

/// Reads `results.bindings[*].{p,o,oLabel}` from a SPARQL JSON document.
pub fn neighborhood_from_json(entity: &str, properties: &[String], response: &Value) -> Result<EntityNeighborhood, ClientError> {
    let bad = |m: &str| ClientError::Response { entity: entity.to_string(), message: m.to_string() };
    let bindings = response
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing results.bindings"))?;
    let mut rows = Vec::with_capacity(bindings.len());
    for b in bindings {
        let field = |k: &str| b.get(k).and_then(|v| v.get("value")).and_then(Value::as_str).map(str::to_string);
        let (Some(p), Some(o)) = (field("p"), field("o")) else {
            return Err(bad("binding without ?p or ?o"));
        };
        rows.push((p, o, field("oLabel")));
    }
    Ok(EntityNeighborhood::from_rows(entity, properties, rows))
}
