//! Append-only JSON-lines record store.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{BenchError, BenchRecord, ModelTag};

/// `(model, task, window, seed)`; the window is compared by bit pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub model: ModelTag,
    pub task: String,
    pub window_bits: u64,
    pub seed: u64,
}

impl RecordKey {
    pub fn new(model: ModelTag, task: &str, window: f64, seed: u64) -> Self {
        RecordKey {
            model,
            task: task.to_string(),
            window_bits: window.to_bits(),
            seed,
        }
    }
}

fn sort_key(k: &RecordKey) -> (String, ModelTag, u64, u64) {
    (k.task.clone(), k.model, k.window_bits, k.seed)
}

pub struct RecordStore {
    path: PathBuf,
    records: BTreeMap<RecordKey, BenchRecord>,
    file: File,
}

impl RecordStore {
    /// Opens (or creates) the store. A truncated final line, as left by an
    /// interrupted append, is dropped with a warning.
    pub fn open(path: &Path) -> Result<Self, BenchError> {
        let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", path.display()));
        let mut records = BTreeMap::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(path).map_err(io)?)
                .lines()
                .collect::<Result<_, _>>()
                .map_err(io)?;
            let n = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<BenchRecord>(line) {
                    Ok(r) => {
                        records.insert(r.key(), r);
                    }
                    Err(e) if i + 1 == n => log::warn!("{}: dropping truncated last line ({e})", path.display()),
                    Err(e) => return Err(BenchError::Store(format!("{}: line {}: {e}", path.display(), i + 1))),
                }
            }
        }
        let mut store = RecordStore {
            path: path.to_path_buf(),
            file: OpenOptions::new().create(true).append(true).open(path).map_err(io)?,
            records,
        };
        // Rewrite so the file ends on a clean line boundary.
        store.compact()?;
        Ok(store)
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.records.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, record: BenchRecord) -> Result<(), BenchError> {
        let line = serde_json::to_string(&record).map_err(|e| BenchError::Store(e.to_string()))?;
        writeln!(self.file, "{line}")
            .and_then(|_| self.file.flush())
            .map_err(|e| BenchError::Io(format!("{}: {e}", self.path.display())))?;
        self.records.insert(record.key(), record);
        Ok(())
    }

    /// Records ordered by task, model, window, seed.
    pub fn records(&self) -> Vec<BenchRecord> {
        let mut v: Vec<&BenchRecord> = self.records.values().collect();
        v.sort_by_key(|r| sort_key(&r.key()));
        v.into_iter().cloned().collect()
    }

    /// Rewrites the file in canonical order, one record per key.
    pub fn compact(&mut self) -> Result<(), BenchError> {
        let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", self.path.display()));
        let mut text = String::new();
        for r in self.records() {
            text.push_str(&serde_json::to_string(&r).map_err(|e| BenchError::Store(e.to_string()))?);
            text.push('\n');
        }
        let tmp = self.path.with_extension("jsonl.tmp");
        std::fs::write(&tmp, text).map_err(io)?;
        std::fs::rename(&tmp, &self.path).map_err(io)?;
        self.file = OpenOptions::new().append(true).open(&self.path).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, window: f64) -> BenchRecord {
        BenchRecord {
            model: ModelTag::Standard,
            task: "sin".into(),
            window,
            seed,
            mse: 0.5 + seed as f64,
            n_eval: 10,
            best_epoch: 3,
            diverged: false,
            runtime_s: None,
        }
    }

    #[test]
    fn reopen_recovers_records_and_drops_partial_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        {
            let mut s = RecordStore::open(&path).unwrap();
            s.append(rec(1, 0.5)).unwrap();
            s.append(rec(0, 0.5)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"model\":\"stand").unwrap();
        drop(f);
        let s = RecordStore::open(&path).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.records()[0].seed, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
    }
}
