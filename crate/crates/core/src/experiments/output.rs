use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::problems::{write_pgm, GrayImage};

/// A run directory. Every file is written to a temporary name and renamed
/// into place once complete.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(OutputDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn commit(&self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
        let dest = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.partial"));
        write(&tmp)?;
        fs::rename(&tmp, &dest)?;
        Ok(dest)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        self.commit(name, |p| Ok(fs::write(p, text)?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_text(name, &text)
    }

    /// `rows` are serialised records; `header` names the columns even when
    /// there are no rows.
    pub fn write_csv<T: Serialize>(&self, name: &str, header: &[&str], rows: &[T]) -> Result<PathBuf> {
        self.commit(name, |p| {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(p)?;
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    pub fn write_pgm(&self, name: &str, img: &GrayImage, lo: f64, hi: f64) -> Result<PathBuf> {
        self.commit(name, |p| write_pgm(p, img, lo, hi, true))
    }
}
