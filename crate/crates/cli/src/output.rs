//! Output files are staged in memory and only land on disk once every one of
//! them has been written to a temporary file, so a failed run leaves nothing
//! behind.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        if self.files.is_empty() {
            return Ok(Vec::new());
        }
        let write_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Write { path, source }
        };
        fs::create_dir_all(dir).map_err(write_err(dir))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(self.files.len());
        let result = (|| {
            for (name, contents) in &self.files {
                let target = dir.join(name);
                let tmp = dir.join(format!(".{name}.partial"));
                let mut f = fs::File::create(&tmp).map_err(write_err(&tmp))?;
                staged.push((tmp.clone(), target));
                f.write_all(contents).and_then(|()| f.sync_all()).map_err(write_err(&tmp))?;
            }
            for (tmp, target) in &staged {
                fs::rename(tmp, target).map_err(write_err(target))?;
            }
            Ok(staged.iter().map(|(_, t)| t.clone()).collect())
        })();
        if result.is_err() {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}
