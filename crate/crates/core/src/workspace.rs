//! A managed directory of named datasets and stored results.
//!
//! Layout:
//!
//! ```text
//! <root>/manifest.json      name -> file, sha256, rows, cols
//! <root>/data/<name>.csv
//! <root>/results/<id>.json  result archives addressed by content hash
//! ```
//!
//! Manifest updates hold an exclusive lock on `<root>/.lock`.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{parse_dataset_csv, Loaded, ResultArchive};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Path relative to the workspace root.
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub grouped: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

impl Workspace {
    /// Opens (creating if needed) a workspace rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for dir in [root.clone(), root.join("data"), root.join("results")] {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn lock(&self) -> Result<File> {
        let path = self.root.join(".lock");
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.lock().map_err(|e| Error::io(&path, e))?;
        Ok(f)
    }

    fn read_manifest(&self) -> Result<Manifest> {
        let path = self.manifest_path();
        match fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    fn write_manifest(&self, m: &Manifest) -> Result<()> {
        let path = self.manifest_path();
        let tmp = self.root.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(m)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Validates CSV bytes and stores them under `name`, replacing any
    /// existing entry of that name.
    pub fn register_bytes(&self, name: &str, csv: &[u8]) -> Result<ManifestEntry> {
        if !valid_name(name) {
            return Err(Error::usage(format!(
                "invalid dataset name '{name}' (use letters, digits, '_', '-', '.')"
            )));
        }
        let loaded = parse_dataset_csv(csv, None)?;
        let file = format!("data/{name}.csv");
        let entry = ManifestEntry {
            name: name.to_string(),
            file: file.clone(),
            sha256: sha256_hex(csv),
            rows: loaded.data().n(),
            cols: loaded.data().d(),
            grouped: loaded.is_grouped(),
        };
        let _guard = self.lock()?;
        let path = self.root.join(&file);
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        let mut manifest = self.read_manifest()?;
        manifest.entries.retain(|e| e.name != name);
        manifest.entries.push(entry.clone());
        manifest.entries.sort_by(|a, b| a.name.cmp(&b.name));
        self.write_manifest(&manifest)?;
        Ok(entry)
    }

    pub fn register_file(&self, name: &str, source: &Path) -> Result<ManifestEntry> {
        let bytes = fs::read(source).map_err(|e| Error::io(source, e))?;
        self.register_bytes(name, &bytes)
    }

    fn verify(&self, entry: &ManifestEntry) -> Result<Vec<u8>> {
        let path = self.root.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::Integrity {
                name: entry.name.clone(),
                path,
            });
        }
        Ok(bytes)
    }

    /// All entries, sorted by name. Fails if any file no longer matches its checksum.
    pub fn list(&self) -> Result<Vec<ManifestEntry>> {
        let manifest = self.read_manifest()?;
        for e in &manifest.entries {
            self.verify(e)?;
        }
        Ok(manifest.entries)
    }

    pub fn entry(&self, name: &str) -> Result<Option<ManifestEntry>> {
        Ok(self
            .read_manifest()?
            .entries
            .into_iter()
            .find(|e| e.name == name))
    }

    /// Loads a registered dataset after checking its checksum.
    pub fn load(&self, name: &str, group_column: Option<&str>) -> Result<Loaded> {
        let entry = self
            .entry(name)?
            .ok_or_else(|| Error::data(format!("no dataset named '{name}' in workspace")))?;
        let bytes = self.verify(&entry)?;
        parse_dataset_csv(bytes.as_slice(), group_column)
    }

    /// Stores an archive and returns its id: a hash of the archive JSON with
    /// timings zeroed, so identical runs share an id.
    pub fn save_result(&self, archive: &ResultArchive) -> Result<String> {
        let mut timeless = archive.clone();
        timeless.timings = Default::default();
        let id = sha256_hex(timeless.to_json()?.as_bytes())[..16].to_string();
        let json = archive.to_json()?;
        let path = self.root.join("results").join(format!("{id}.json"));
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(id)
    }

    pub fn load_result(&self, id: &str) -> Result<Option<ResultArchive>> {
        if !valid_name(id) {
            return Ok(None);
        }
        let path = self.root.join("results").join(format!("{id}.json"));
        match fs::read_to_string(&path) {
            Ok(text) => ResultArchive::from_json(&text).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}
