// Fixture loading shared by the integration test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use argkg::client::{ClientConfig, SparqlClient, Transport, TransportError};
use argkg::config::{PipelineConfig, Variant};

/// Sentences with at least one path on the replay fixture, per variant.
pub const PINNED_WITH_PATHS: [(Variant, usize); 4] =
    [(Variant::Wd, 8), (Variant::WdLda, 13), (Variant::WdLdaGv, 12), (Variant::WdLdaGvOie, 16)];

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// The bundled replay configuration with outputs redirected to `out`.
pub fn replay_config(variant: Variant, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixture("replay").join("argkg.toml")).expect("fixture config");
    cfg.variant = variant;
    cfg.data.output_dir = out.to_path_buf();
    cfg
}

/// Transport that records how often it was asked and always fails.
#[derive(Default)]
pub struct Unreachable {
    pub calls: AtomicUsize,
}

impl Transport for Unreachable {
    fn execute(&self, _endpoint: &str, _query: &str) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::Status(404))
    }
}

/// Replay client over the fixture cache whose transport must never be used.
pub fn offline_client(cfg: &ClientConfig) -> (SparqlClient, Arc<Unreachable>) {
    let net = Arc::new(Unreachable::default());
    let client = SparqlClient::new(cfg.clone(), net.clone());
    (client, net)
}
