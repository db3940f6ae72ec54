use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the command, seed, effective parameters and the bytes of
    /// every input file. Output paths and thread counts are not part of it.
    pub config_digest: String,
    /// `null` for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Wall-clock milliseconds per stage.
    pub timings: BTreeMap<String, u64>,
}

/// Accumulates the digest and stage timings while a command runs.
pub struct ManifestBuilder {
    command: String,
    hasher: Sha256,
    seed: Option<u64>,
    timings: BTreeMap<String, u64>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update([0]);
        let seed_json = serde_json::to_string(&seed).expect("seeds serialize");
        hasher.update(seed_json.as_bytes());
        hasher.update([0]);
        Self { command: command.into(), hasher, seed, timings: BTreeMap::new() }
    }

    /// Adds a named parameter; the serialized value is hashed.
    pub fn param<T: Serialize>(&mut self, name: &str, value: &T) {
        let json = serde_json::to_string(value).expect("parameters serialize");
        self.hasher.update(name.as_bytes());
        self.hasher.update([b'=']);
        self.hasher.update(json.as_bytes());
        self.hasher.update([0]);
    }

    /// Adds the contents of an input file.
    pub fn input(&mut self, role: &str, bytes: &[u8]) {
        self.hasher.update(role.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    /// Runs `f` and records its duration under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let ms = start.elapsed().as_millis() as u64;
        *self.timings.entry(stage.into()).or_default() += ms;
        out
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            command: self.command,
            config_digest: format!("{:x}", self.hasher.finalize()),
            seed: self.seed,
            tool_version: TOOL_VERSION.into(),
            timings: self.timings,
        }
    }
}

/// `{"manifest": ..., "result": ...}`.
#[derive(Debug, Serialize)]
pub struct Envelope<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_inputs_and_params() {
        let digest = |p: u64, input: &[u8]| {
            let mut b = ManifestBuilder::new("volume", Some(1));
            b.param("samples", &p);
            b.input("graph", input);
            b.finish().config_digest
        };
        assert_eq!(digest(10, b"abc"), digest(10, b"abc"));
        assert_ne!(digest(10, b"abc"), digest(11, b"abc"));
        assert_ne!(digest(10, b"abc"), digest(10, b"abd"));
        assert_eq!(digest(10, b"abc").len(), 64);
    }
}
