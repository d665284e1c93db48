//! Support machinery for the `fb` command-line tool: run manifests written
//! beside every output file, the simple key=value config format, and a
//! bounded-concurrency map with order-independent (deterministic) results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance record accompanying every output file. Contains no
/// timestamps: reruns with identical inputs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Full parameter set of the invocation.
    pub parameters: BTreeMap<String, f64>,
    /// Tolerances in force.
    pub tolerances: BTreeMap<String, f64>,
    pub determinism: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            determinism: "seed-free; identical inputs reproduce outputs byte-for-byte"
                .to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn with_tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn with_output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Manifest path for a data file: `<file>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "output".to_string());
        name.push_str(".manifest.json");
        output.with_file_name(name)
    }

    /// Writes the manifest next to `output`.
    pub fn write_beside(&self, output: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        fs::write(Self::path_for(output), text + "\n")?;
        Ok(())
    }
}

/// Parses a simple `key = value` config file. Lines starting with `#` and
/// blank lines are ignored; later keys override earlier ones.
pub fn parse_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
            None => {
                return Err(Error::InvalidConfig(Box::leak(
                    format!("config line {} is not key=value: {raw:?}", lineno + 1)
                        .into_boxed_str(),
                )));
            }
        }
    }
    Ok(map)
}

/// Applies `f` to every item with at most `jobs` worker threads. Results
/// come back in input order regardless of scheduling, and each call sees
/// only its own item, so the output is identical for every `jobs` value.
pub fn parallel_map<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(|t| f(t)).collect();
    }
    let next = AtomicUsize::new(0);
    let mut results: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let slots: Vec<std::sync::Mutex<&mut Option<R>>> = results
        .iter_mut()
        .map(std::sync::Mutex::new)
        .collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                **slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    drop(slots);
    results.into_iter().map(|r| r.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_names_outputs() {
        let m = RunManifest::new("simulate")
            .with_param("a", 0.2)
            .with_tolerance("rel_tol", 1e-9)
            .with_output(Path::new("/tmp/run/traj.csv"));
        let text = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        assert_eq!(
            RunManifest::path_for(Path::new("/tmp/run/traj.csv")),
            PathBuf::from("/tmp/run/traj.csv.manifest.json")
        );
    }

    #[test]
    fn config_parsing_accepts_comments_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fb.conf");
        fs::write(&path, "# comment\n a = 0.2 \nk=1.5\nk = 1.6\n\n").unwrap();
        let map = parse_config(&path).unwrap();
        assert_eq!(map.get("a").unwrap(), "0.2");
        assert_eq!(map.get("k").unwrap(), "1.6");
    }

    #[test]
    fn config_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        fs::write(&path, "just words\n").unwrap();
        assert!(parse_config(&path).is_err());
    }

    #[test]
    fn parallel_map_is_order_preserving_for_any_job_count() {
        let items: Vec<u64> = (0..97).collect();
        let square = |x: &u64| x * x;
        let serial = parallel_map(1, items.clone(), square);
        for jobs in [2, 3, 8, 64] {
            assert_eq!(parallel_map(jobs, items.clone(), square), serial);
        }
    }
}
