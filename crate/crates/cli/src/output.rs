//! All-or-nothing output: files are staged as temporaries in the target
//! directory and renamed into place only once every file is ready.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use tempfile::NamedTempFile;

/// `# config_sha256=<hex> seed=<seed>`, the first line of every output file.
pub fn header(digest: &str, seed: u64) -> String {
    format!("# config_sha256={digest} seed={seed}\n")
}

pub struct Staged {
    dir: PathBuf,
    files: Vec<(PathBuf, NamedTempFile)>,
}

impl Staged {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn add(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        self.files.push((self.dir.join(name), tmp));
        Ok(())
    }

    /// Renames every staged file into place. If one rename fails, the files
    /// already moved are deleted and the rest are dropped.
    pub fn commit(self) -> io::Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (path, tmp) in self.files {
            if let Err(e) = tmp.persist(&path) {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                return Err(e.error);
            }
            done.push(path);
        }
        Ok(done)
    }
}
