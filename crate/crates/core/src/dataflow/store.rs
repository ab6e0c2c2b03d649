//! Materialized model partitions.
//!
//! A store is a directory holding `partition_<id>.json` files in the model
//! interchange format plus `manifest.json` (partition count, forest hash,
//! per-file checksums and original tree indices) and `manifest.sha256`.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::partition::ModelPartition;
use crate::error::{Error, Result};
use crate::model::{parse_model_with, to_json, Forest, Limits};

const MANIFEST: &str = "manifest.json";
const MANIFEST_DIGEST: &str = "manifest.sha256";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash identifying a forest.
pub fn forest_hash(forest: &Forest) -> String {
    sha256_hex(to_json(forest).as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    forest_hash: String,
    partition_count: usize,
    partitions: Vec<PartitionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionEntry {
    partition_id: usize,
    file: String,
    sha256: String,
    tree_indices: Vec<usize>,
}

#[derive(Debug)]
pub struct PartitionStore {
    dir: PathBuf,
    materialized: AtomicUsize,
    loaded: AtomicUsize,
}

impl PartitionStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PartitionStore { dir: dir.into(), materialized: AtomicUsize::new(0), loaded: AtomicUsize::new(0) }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn exists(&self) -> bool {
        self.dir.join(MANIFEST).is_file()
    }

    /// Times partitions were written through this handle.
    pub fn materialize_count(&self) -> usize {
        self.materialized.load(Ordering::Relaxed)
    }

    /// Times partitions were read through this handle.
    pub fn load_count(&self) -> usize {
        self.loaded.load(Ordering::Relaxed)
    }

    fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::StoreCorrupt { path: self.dir.clone(), reason: reason.into() }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    }

    fn read(&self, name: &str) -> Result<Vec<u8>> {
        let path = self.dir.join(name);
        std::fs::read(&path).map_err(|e| Error::io(path, e))
    }

    pub fn materialize_partitions(&self, partitions: &[ModelPartition], forest_hash: &str) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut entries = Vec::with_capacity(partitions.len());
        for p in partitions {
            let file = format!("partition_{}.json", p.partition_id);
            let body = to_json(&p.forest);
            self.write(&file, body.as_bytes())?;
            entries.push(PartitionEntry {
                partition_id: p.partition_id,
                file,
                sha256: sha256_hex(body.as_bytes()),
                tree_indices: p.tree_indices.clone(),
            });
        }
        let manifest = Manifest {
            format_version: 1,
            forest_hash: forest_hash.to_owned(),
            partition_count: partitions.len(),
            partitions: entries,
        };
        let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        self.write(MANIFEST, &body)?;
        self.write(MANIFEST_DIGEST, sha256_hex(&body).as_bytes())?;
        self.materialized.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Loads partitions previously materialized for the forest with hash
    /// `forest_hash`; partitions of any other forest are rejected as stale.
    pub fn load_partitions(&self, forest_hash: &str) -> Result<Vec<ModelPartition>> {
        let body = self.read(MANIFEST)?;
        let digest = self.read(MANIFEST_DIGEST)?;
        if digest != sha256_hex(&body).as_bytes() {
            return Err(self.corrupt("manifest checksum mismatch"));
        }
        let manifest: Manifest =
            serde_json::from_slice(&body).map_err(|e| self.corrupt(format!("manifest: {e}")))?;
        if manifest.forest_hash != forest_hash {
            return Err(self.corrupt("partitions belong to a different forest"));
        }
        if manifest.partition_count != manifest.partitions.len() {
            return Err(self.corrupt("partition count disagrees with entries"));
        }
        let mut out = Vec::with_capacity(manifest.partitions.len());
        for (i, entry) in manifest.partitions.into_iter().enumerate() {
            if entry.partition_id != i || entry.file.contains(['/', '\\']) {
                return Err(self.corrupt(format!("bad manifest entry {i}")));
            }
            let bytes = self.read(&entry.file)?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(self.corrupt(format!("{} checksum mismatch", entry.file)));
            }
            let forest = parse_model_with(&bytes, Limits { max_depth: usize::MAX })
                .map_err(|e| self.corrupt(format!("{}: {e}", entry.file)))?;
            if forest.trees.len() != entry.tree_indices.len() {
                return Err(self.corrupt(format!("{} tree count mismatch", entry.file)));
            }
            out.push(ModelPartition { partition_id: entry.partition_id, tree_indices: entry.tree_indices, forest });
        }
        self.loaded.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }
}
