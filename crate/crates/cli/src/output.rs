use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Writes artifacts into one directory; each file appears atomically.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_with(
        &self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> pvsplit::Result<()>,
    ) -> pvsplit::Result<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        Ok(self.write_bytes(name, &buf)?)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(target)
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> pvsplit::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        Ok(self.write_bytes(name, text.as_bytes())?)
    }
}
