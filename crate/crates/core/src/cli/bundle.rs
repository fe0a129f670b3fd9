use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

/// Version of the manifest layout.
pub const MANIFEST_VERSION: u32 = 1;
/// Versions of the field and measurement text formats named in manifests.
pub const FIELD_FORMAT: u32 = 1;
pub const MEASUREMENT_FORMAT: u32 = 1;

pub const MANIFEST: &str = "manifest.txt";
pub const CONFIG: &str = "config.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Whether a run finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Stopped early; the reason is kept on one line.
    Partial(String),
}

/// Parsed `manifest.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<(String, String)>,
    pub status: Status,
    /// Files written by the run with their SHA-256, in write order.
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "layerstrip-manifest {MANIFEST_VERSION}");
        let _ = writeln!(out, "field_format {FIELD_FORMAT}");
        let _ = writeln!(out, "measurement_format {MEASUREMENT_FORMAT}");
        let _ = writeln!(out, "crate_version {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "config_sha256 {}", self.config_hash);
        let _ = writeln!(out, "seed {}", self.seed);
        for (name, hash) in &self.inputs {
            let _ = writeln!(out, "input {name} {hash}");
        }
        match &self.status {
            Status::Complete => out.push_str("status complete\n"),
            Status::Partial(why) => {
                let _ = writeln!(out, "status partial {}", why.replace('\n', " "));
            }
        }
        for (name, hash) in &self.files {
            let _ = writeln!(out, "file {name} {hash}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = Manifest {
            kind: String::new(),
            config_hash: String::new(),
            seed: 0,
            inputs: vec![],
            status: Status::Partial("no status line".into()),
            files: vec![],
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let pair = || {
                rest.split_once(' ')
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| Error::Parse(format!("malformed manifest line `{line}`")))
            };
            match key {
                "kind" => m.kind = rest.to_string(),
                "config_sha256" => m.config_hash = rest.to_string(),
                "seed" => m.seed = rest.parse().map_err(|_| Error::Parse(format!("bad seed `{rest}`")))?,
                "input" => m.inputs.push(pair()?),
                "file" => m.files.push(pair()?),
                "status" if rest == "complete" => m.status = Status::Complete,
                "status" => m.status = Status::Partial(rest.trim_start_matches("partial").trim().to_string()),
                _ => {}
            }
        }
        Ok(m)
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::IncompleteBundle(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Check the run completed and every listed file still has its hash.
    pub fn verify(&self, dir: impl AsRef<Path>, required: &[&str]) -> Result<()> {
        if let Status::Partial(why) = &self.status {
            return Err(Error::IncompleteBundle(format!("run did not complete: {why}")));
        }
        for name in required {
            if !self.files.iter().any(|(f, _)| f == name) {
                return Err(Error::IncompleteBundle(format!("missing {name}")));
            }
        }
        for (name, hash) in &self.files {
            let bytes = std::fs::read(dir.as_ref().join(name))
                .map_err(|e| Error::IncompleteBundle(format!("{name}: {e}")))?;
            if &sha256_hex(&bytes) != hash {
                return Err(Error::IncompleteBundle(format!("{name} changed since the run")));
            }
        }
        Ok(())
    }
}

/// Writes output files into a directory and records their hashes. Nothing
/// in the output depends on time or host, so reruns are byte-identical.
#[derive(Debug)]
pub struct BundleWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl BundleWriter {
    /// Create `dir` and write the resolved configuration into it.
    pub fn create(dir: impl Into<PathBuf>, kind: &str, config: &RunConfig) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut writer = Self {
            dir,
            manifest: Manifest {
                kind: kind.to_string(),
                config_hash: config.hash(),
                seed: config.seed,
                inputs: vec![],
                status: Status::Partial("running".into()),
                files: vec![],
            },
        };
        writer.put(CONFIG, &config.to_toml())?;
        Ok(writer)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.manifest.inputs.push((name.to_string(), sha256_hex(bytes)));
    }

    pub fn put(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        let hash = sha256_hex(text.as_bytes());
        match self.manifest.files.iter_mut().find(|(f, _)| f == name) {
            Some(entry) => entry.1 = hash,
            None => self.manifest.files.push((name.to_string(), hash)),
        }
        Ok(())
    }

    /// Write the manifest with the given status and return it.
    pub fn finish(mut self, status: Status) -> Result<Manifest> {
        self.manifest.status = status;
        std::fs::write(self.dir.join(MANIFEST), self.manifest.to_text())?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_verification() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let mut w = BundleWriter::create(dir.path(), "test", &cfg).unwrap();
        w.input("data", b"abc");
        w.put("a.txt", "hello\n").unwrap();
        let m = w.finish(Status::Complete).unwrap();
        let back = Manifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path(), &["a.txt"]).unwrap();
        assert!(matches!(back.verify(dir.path(), &["b.txt"]), Err(Error::IncompleteBundle(_))));
        std::fs::write(dir.path().join("a.txt"), "changed").unwrap();
        assert!(back.verify(dir.path(), &[]).is_err());
    }

    #[test]
    fn partial_status_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let w = BundleWriter::create(dir.path(), "test", &RunConfig::default()).unwrap();
        w.finish(Status::Partial("stage 2: no convergence".into())).unwrap();
        let m = Manifest::read(dir.path()).unwrap();
        assert_eq!(m.status, Status::Partial("stage 2: no convergence".into()));
        assert!(m.verify(dir.path(), &[]).is_err());
    }
}
