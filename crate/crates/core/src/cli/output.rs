use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// One artifact of a run, as listed in `manifest.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
    /// Data rows (header excluded) for CSV files.
    pub rows: Option<usize>,
}

/// Round-trippable float formatting used for every CSV cell.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes run artifacts and remembers them so a failed run can be undone.
pub(crate) struct ArtifactWriter {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    entries: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), created_dir, written: Vec::new(), entries: Vec::new() })
    }

    pub fn entries(&self) -> &[FileEntry] {
        &self.entries
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8], rows: Option<usize>) -> Result<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes)?;
        self.entries.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
            rows,
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write_bytes(name, &bytes, Some(rows.len()))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes(), None)
    }

    /// The manifest is written last and not listed in itself.
    pub fn write_manifest<T: Serialize>(&mut self, manifest: &T) -> Result<()> {
        let path = self.dir.join("manifest.json");
        self.written.push(path.clone());
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Removes everything written so far (and the directory if this run made it).
    pub fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
        self.entries.clear();
    }
}
