//! Run stores keyed by job id.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{ApiError, Result};
use crate::result::ApproximationResult;

pub trait RunStore: Send + Sync {
    fn put(&self, result: &ApproximationResult) -> Result<()>;
    fn get(&self, id: &str) -> Result<Option<ApproximationResult>>;
    fn ids(&self) -> Result<Vec<String>>;
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(ApiError::NotFound(id.to_string()));
    }
    Ok(())
}

/// One JSON document per job in a flat directory.
pub struct DirStore {
    dir: PathBuf,
    /// Writes go through a temporary file and a rename under this lock.
    write: Mutex<()>,
}

impl DirStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
            write: Mutex::new(()),
        })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }
}

impl RunStore for DirStore {
    fn put(&self, result: &ApproximationResult) -> Result<()> {
        check_id(&result.id)?;
        let text = serde_json::to_string_pretty(result)?;
        let _guard = self.write.lock().expect("store lock");
        let tmp = self.dir.join(format!(".{}.tmp", result.id));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(&result.id))?;
        Ok(())
    }

    fn get(&self, id: &str) -> Result<Option<ApproximationResult>> {
        check_id(id)?;
        match fs::read_to_string(self.path(id)) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn ids(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(id) = name.strip_suffix(".json") {
                if check_id(id).is_ok() {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

#[derive(Default)]
pub struct MemoryStore {
    runs: Mutex<HashMap<String, ApproximationResult>>,
}

impl RunStore for MemoryStore {
    fn put(&self, result: &ApproximationResult) -> Result<()> {
        check_id(&result.id)?;
        self.runs
            .lock()
            .expect("store lock")
            .insert(result.id.clone(), result.clone());
        Ok(())
    }

    fn get(&self, id: &str) -> Result<Option<ApproximationResult>> {
        Ok(self.runs.lock().expect("store lock").get(id).cloned())
    }

    fn ids(&self) -> Result<Vec<String>> {
        let mut ids: Vec<String> = self
            .runs
            .lock()
            .expect("store lock")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        Ok(ids)
    }
}
