//! Stage manifests: every artifact directory carries the content hashes of
//! its inputs and outputs plus the semantic config hash, enabling no-op
//! reruns and full provenance tracing.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)?;
    Ok(format!("sha256:{}", hex::encode(hasher.finalize())))
}

/// Write via a temp file in the same directory plus rename, so readers never
/// observe a partial artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: String,
    pub config_hash: String,
    /// Input path (relative to the output dir when inside it) -> hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the stage dir) -> hash.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl StageManifest {
    pub fn new(stage: &str, config_hash: &str) -> StageManifest {
        StageManifest {
            stage: stage.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config_hash: config_hash.to_owned(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn write(&self, stage_dir: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        atomic_write(&stage_dir.join(MANIFEST_FILE), format!("{json}\n").as_bytes())
    }

    pub fn load(stage_dir: &Path) -> Option<StageManifest> {
        let text = std::fs::read_to_string(stage_dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }
}

/// A completed stage is up to date when its manifest matches the expected
/// config hash and inputs and every recorded output still hashes the same.
pub fn stage_up_to_date(
    stage_dir: &Path,
    config_hash: &str,
    inputs: &BTreeMap<String, String>,
) -> bool {
    let Some(manifest) = StageManifest::load(stage_dir) else {
        return false;
    };
    if manifest.config_hash != config_hash || &manifest.inputs != inputs {
        return false;
    }
    for (name, expected) in &manifest.outputs {
        match sha256_file(&stage_dir.join(name)) {
            Ok(actual) if &actual == expected => {}
            _ => return false,
        }
    }
    true
}
