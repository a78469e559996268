//! Run manifest: which stages ran against which configuration, and what
//! they produced.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Option<Manifest>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        Ok(Some(manifest))
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(self).context("serializing manifest")?;
        fs::write(path, json + "\n")
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Appends or replaces one stage record. A manifest written under a
/// different config hash is reset first: its artifacts no longer describe
/// the current configuration.
pub fn record_stage(
    path: &Path,
    config_hash: &str,
    seed: u64,
    name: &str,
    status: &str,
    mut artifacts: Vec<String>,
) -> anyhow::Result<()> {
    let mut manifest = match Manifest::load(path)? {
        Some(m) if m.config_hash == config_hash => m,
        _ => Manifest {
            config_hash: config_hash.to_string(),
            seed,
            stages: Vec::new(),
        },
    };
    artifacts.sort();
    let record = StageRecord {
        name: name.to_string(),
        status: status.to_string(),
        artifacts,
    };
    match manifest.stages.iter_mut().find(|s| s.name == name) {
        Some(existing) => *existing = record,
        None => manifest.stages.push(record),
    }
    manifest.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_accumulate_and_replace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        record_stage(&path, "h1", 7, "generate", "ok", vec!["log.csv".into()]).unwrap();
        record_stage(&path, "h1", 7, "split", "ok", vec!["b.csv".into(), "a.csv".into()])
            .unwrap();
        record_stage(&path, "h1", 7, "generate", "failed", vec![]).unwrap();

        let manifest = Manifest::load(&path).unwrap().unwrap();
        assert_eq!(manifest.stages.len(), 2);
        assert_eq!(manifest.stage("generate").unwrap().status, "failed");
        // Artifacts are sorted for stable output.
        assert_eq!(manifest.stage("split").unwrap().artifacts, vec!["a.csv", "b.csv"]);
    }

    #[test]
    fn a_new_config_hash_resets_the_stages() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        record_stage(&path, "h1", 7, "generate", "ok", vec![]).unwrap();
        record_stage(&path, "h2", 8, "split", "ok", vec![]).unwrap();
        let manifest = Manifest::load(&path).unwrap().unwrap();
        assert_eq!(manifest.config_hash, "h2");
        assert_eq!(manifest.seed, 8);
        assert!(manifest.stage("generate").is_none());
        assert!(manifest.stage("split").is_some());
    }

    #[test]
    fn missing_manifest_is_not_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Manifest::load(&dir.path().join("manifest.json"))
            .unwrap()
            .is_none());
    }
}
