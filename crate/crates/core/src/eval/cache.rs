//! Results log and the caching evaluator wrapper.
//!
//! The log is line-delimited JSON: a header object followed by one
//! record per distinct configuration, appended in evaluation order.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Config, ConfigKey};

use super::{EvalResult, Evaluator};

pub const RESULTS_FORMAT: &str = "autodse-results";
const RESULTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("i/o error on results log: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: not a results log (bad header)")]
    BadHeader { path: PathBuf },
    #[error("{path}:{line}: corrupt record: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// One line of the results log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub key: ConfigKey,
    pub config: Config,
    #[serde(flatten)]
    pub result: EvalResult,
    /// Seconds since the Unix epoch when the record was written.
    pub timestamp: f64,
}

/// Thread-safe map from config key to result, optionally backed by a log file.
#[derive(Debug)]
pub struct ResultStore {
    records: RwLock<HashMap<ConfigKey, StoredRecord>>,
    order: Mutex<Vec<ConfigKey>>,
    log: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl ResultStore {
    pub fn in_memory() -> Self {
        ResultStore {
            records: RwLock::new(HashMap::new()),
            order: Mutex::new(Vec::new()),
            log: None,
            path: None,
        }
    }

    /// Opens (or creates) a results log, loading every whole record.
    /// A torn final line is cut off with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StorageError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut records = HashMap::new();
        let mut order = Vec::new();
        let mut offset = 0u64;
        let mut truncate_at = None;
        let mut lines = Vec::new();
        {
            let mut reader = BufReader::new(&file);
            loop {
                let mut buf = String::new();
                let n = reader.read_line(&mut buf)?;
                if n == 0 {
                    break;
                }
                lines.push((offset, buf));
                offset += n as u64;
            }
        }
        let total = lines.len();
        for (i, (start, line)) in lines.iter().enumerate() {
            let last = i + 1 == total;
            let whole = line.ends_with('\n');
            let text = line.trim_end();
            if i == 0 {
                match serde_json::from_str::<Header>(text) {
                    Ok(h) if h.format == RESULTS_FORMAT && h.version == RESULTS_VERSION && whole => continue,
                    Ok(_) => return Err(StorageError::BadHeader { path }),
                    Err(_) if last && !whole => {
                        log::warn!("{}: discarding torn header", path.display());
                        truncate_at = Some(*start);
                        break;
                    }
                    Err(_) => return Err(StorageError::BadHeader { path }),
                }
            }
            match serde_json::from_str::<StoredRecord>(text) {
                Ok(r) if whole => {
                    if !records.contains_key(&r.key) {
                        order.push(r.key.clone());
                        records.insert(r.key.clone(), r);
                    }
                }
                Ok(_) | Err(_) if last => {
                    log::warn!(
                        "{}:{}: discarding incomplete trailing record",
                        path.display(),
                        i + 1
                    );
                    truncate_at = Some(*start);
                }
                Ok(_) => unreachable!("only the final line can lack a newline"),
                Err(e) => {
                    return Err(StorageError::Corrupt {
                        path,
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        if let Some(at) = truncate_at {
            file.set_len(at)?;
            file.seek(SeekFrom::End(0))?;
            offset = at;
        }
        if offset == 0 {
            let header = Header {
                format: RESULTS_FORMAT.to_string(),
                version: RESULTS_VERSION,
            };
            writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes"))?;
            file.flush()?;
        }
        Ok(ResultStore {
            records: RwLock::new(records),
            order: Mutex::new(order),
            log: Some(Mutex::new(file)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &ConfigKey) -> Option<EvalResult> {
        self.records
            .read()
            .expect("store lock poisoned")
            .get(key)
            .map(|r| r.result.clone())
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `result` unless `key` is already present; returns whichever
    /// result the store holds afterwards (first write wins).
    pub fn put(&self, key: &ConfigKey, cfg: &Config, result: EvalResult) -> Result<EvalResult, StorageError> {
        let mut map = self.records.write().expect("store lock poisoned");
        if let Some(existing) = map.get(key) {
            return Ok(existing.result.clone());
        }
        let record = StoredRecord {
            key: key.clone(),
            config: cfg.clone(),
            result,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
        };
        if let Some(log) = &self.log {
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            let mut f = log.lock().expect("log lock poisoned");
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        let out = record.result.clone();
        self.order.lock().expect("order lock poisoned").push(key.clone());
        map.insert(key.clone(), record);
        Ok(out)
    }

    /// All records in the order they were first stored.
    pub fn records(&self) -> Vec<StoredRecord> {
        let map = self.records.read().expect("store lock poisoned");
        self.order
            .lock()
            .expect("order lock poisoned")
            .iter()
            .filter_map(|k| map.get(k).cloned())
            .collect()
    }
}

/// Result of a cached evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub result: EvalResult,
    /// True when no backend call was made for this request.
    pub hit: bool,
}

/// Wraps a backend so each distinct configuration reaches it at most once,
/// even when several threads ask for it at the same time.
pub struct CachedEvaluator {
    backend: Arc<dyn Evaluator>,
    store: Arc<ResultStore>,
    inflight: Mutex<HashMap<ConfigKey, Arc<OnceLock<EvalResult>>>>,
    backend_calls: AtomicU64,
    hits: AtomicU64,
}

impl CachedEvaluator {
    pub fn new(backend: Arc<dyn Evaluator>, store: Arc<ResultStore>) -> Self {
        CachedEvaluator {
            backend,
            store,
            inflight: Mutex::new(HashMap::new()),
            backend_calls: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn store(&self) -> &Arc<ResultStore> {
        &self.store
    }

    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn lookup(&self, cfg: &Config) -> Lookup {
        let key = cfg.key();
        if let Some(result) = self.store.get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Lookup { result, hit: true };
        }
        let cell = self
            .inflight
            .lock()
            .expect("inflight lock poisoned")
            .entry(key.clone())
            .or_default()
            .clone();
        let mut ran = false;
        let result = cell
            .get_or_init(|| {
                if let Some(r) = self.store.get(&key) {
                    return r;
                }
                ran = true;
                self.backend_calls.fetch_add(1, Ordering::SeqCst);
                let r = self.backend.evaluate(cfg);
                match self.store.put(&key, cfg, r.clone()) {
                    Ok(stored) => stored,
                    Err(e) => {
                        log::error!("could not persist result {}: {e}", key.short());
                        r
                    }
                }
            })
            .clone();
        if ran {
            self.inflight.lock().expect("inflight lock poisoned").remove(&key);
        } else {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        Lookup { result, hit: !ran }
    }
}

impl Evaluator for CachedEvaluator {
    fn evaluate(&self, cfg: &Config) -> EvalResult {
        self.lookup(cfg).result
    }
}
