use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// On-disk reply cache, one file per (model, prompt, temperature) key.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn key(model: &str, prompt: &str, temperature: f64) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0]);
        h.update(prompt.as_bytes());
        h.update([0]);
        h.update(temperature.to_bits().to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.dir.join(format!("{key}.txt"))).ok()
    }

    /// Writes through a temporary file so readers never see partial replies.
    pub fn put(&self, key: &str, reply: &str) -> std::io::Result<()> {
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        std::fs::write(&tmp, reply)?;
        std::fs::rename(tmp, self.dir.join(format!("{key}.txt")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_key_sensitivity() {
        let dir = tempfile::tempdir().unwrap();
        let c = ResponseCache::new(dir.path()).unwrap();
        let k = ResponseCache::key("m", "p", 1.0);
        assert_eq!(c.get(&k), None);
        c.put(&k, "reply").unwrap();
        assert_eq!(c.get(&k).as_deref(), Some("reply"));
        assert_ne!(k, ResponseCache::key("m", "p", 0.5));
        assert_ne!(k, ResponseCache::key("m2", "p", 1.0));
    }
}
