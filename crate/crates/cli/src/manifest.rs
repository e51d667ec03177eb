//! Run manifest: one CSV naming every produced file with its content hash,
//! the hash of the config that produced it, and the run parameters, so a
//! result directory is self-describing and reruns are comparable.

use sha2::{Digest, Sha256};

use crate::csvout::Table;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Manifest {
    config_path: String,
    config_sha256: String,
    seed: u64,
    threads: String,
    deterministic: bool,
    status: String,
    files: Vec<(String, String, usize)>,
    notes: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(
        config_path: &str,
        config_raw: &[u8],
        seed: u64,
        threads: Option<usize>,
        deterministic: bool,
    ) -> Self {
        Self {
            config_path: config_path.to_string(),
            config_sha256: sha256_hex(config_raw),
            seed,
            threads: threads.map_or_else(|| "auto".into(), |t| t.to_string()),
            deterministic,
            status: "ok".into(),
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn add_file(&mut self, name: &str, bytes: &[u8]) {
        self.files
            .push((name.to_string(), sha256_hex(bytes), bytes.len()));
    }

    /// Marks the run as partial and records why. Partial means some declared
    /// quantities failed numerically; whatever was produced is still listed.
    pub fn flag_failure(&mut self, reason: &str) {
        self.status = "partial".into();
        self.notes.push(("failure".into(), reason.to_string()));
    }

    pub fn add_note(&mut self, note: &str) {
        self.notes.push(("note".into(), note.to_string()));
    }

    pub fn status(&self) -> &str {
        &self.status
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut t = Table::new(&["record", "name", "value", "sha256", "bytes"]);
        let meta = |name: &str, value: String| -> Vec<String> {
            vec![
                "meta".into(),
                name.into(),
                value,
                String::new(),
                String::new(),
            ]
        };
        t.push(meta("format", "fracp-manifest-v1".into()));
        t.push(meta("config", self.config_path.clone()));
        t.push(meta("config_sha256", self.config_sha256.clone()));
        t.push(meta("seed", self.seed.to_string()));
        t.push(meta("threads", self.threads.clone()));
        t.push(meta(
            "deterministic",
            if self.deterministic { "on" } else { "off" }.into(),
        ));
        t.push(meta("status", self.status.clone()));
        for (kind, text) in &self.notes {
            t.push(meta(kind, text.clone()));
        }
        for (name, sha, len) in &self.files {
            t.push(vec![
                "file".into(),
                name.clone(),
                self.config_sha256.clone(),
                sha.clone(),
                len.to_string(),
            ]);
        }
        t.to_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_carry_both_hashes() {
        let mut m = Manifest::new("cfg.json", b"{}", 7, Some(2), true);
        m.add_file("a.csv", b"x,y\r\n");
        m.flag_failure("solver stalled");
        let text = String::from_utf8(m.to_bytes()).unwrap();
        assert!(text.contains(&format!("config_sha256,{}", sha256_hex(b"{}"))));
        assert!(text.contains(&format!(
            "file,a.csv,{},{},5",
            sha256_hex(b"{}"),
            sha256_hex(b"x,y\r\n")
        )));
        assert!(text.contains("meta,status,partial"));
        assert!(text.contains("meta,failure,solver stalled"));
    }
}
