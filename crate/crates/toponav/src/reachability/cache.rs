//! Memoized reachability estimates, persisted as a versioned append-only
//! record log. Entries are keyed by source/target frame identity plus the
//! configuration hash, so estimates never leak across controller or
//! simulator setups.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use crate::sim::FrameId;

pub const CACHE_HEADER: &str = "TOPOCACHE v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    pub p: f64,
    pub n: u32,
    pub seed: u64,
}

type Key = (FrameId, FrameId, u64);

/// Concurrent-reader, single-writer estimate store.
#[derive(Default)]
pub struct ReachCache {
    entries: RwLock<HashMap<Key, CacheEntry>>,
    /// keys added since the last persist, in insertion order
    fresh: RwLock<Vec<Key>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ReachCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, source: FrameId, target: FrameId, config_hash: u64) -> Option<CacheEntry> {
        let hit = self
            .entries
            .read()
            .unwrap()
            .get(&(source, target, config_hash))
            .copied();
        match hit {
            Some(e) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(e)
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn insert(&self, source: FrameId, target: FrameId, config_hash: u64, entry: CacheEntry) {
        let key = (source, target, config_hash);
        let mut entries = self.entries.write().unwrap();
        if entries.insert(key, entry).is_none() {
            self.fresh.write().unwrap().push(key);
        }
    }

    /// (hits, misses) since construction.
    pub fn stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    pub fn reset_stats(&self) {
        self.hits.store(0, Ordering::Relaxed);
        self.misses.store(0, Ordering::Relaxed);
    }

    /// Load a record log. A corrupt file is not an error: the cache
    /// rebuilds from scratch with a warning.
    pub fn load(path: &Path) -> Self {
        let cache = Self::new();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(_) => return cache,
        };
        let mut lines = text.lines();
        if lines.next() != Some(CACHE_HEADER) {
            log::warn!("reach cache {path:?} has a bad header; rebuilding");
            return Self::new();
        }
        let mut entries = HashMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let parsed = (|| -> Option<(Key, CacheEntry)> {
                if f.len() != 8 {
                    return None;
                }
                let key = (
                    FrameId { traj: f[0].parse().ok()?, index: f[1].parse().ok()? },
                    FrameId { traj: f[2].parse().ok()?, index: f[3].parse().ok()? },
                    f[4].parse().ok()?,
                );
                let entry = CacheEntry {
                    p: f[5].parse().ok()?,
                    n: f[6].parse().ok()?,
                    seed: f[7].parse().ok()?,
                };
                Some((key, entry))
            })();
            match parsed {
                Some((k, e)) => {
                    entries.insert(k, e);
                }
                None => {
                    log::warn!("reach cache {path:?} has a corrupt record; rebuilding");
                    return Self::new();
                }
            }
        }
        *cache.entries.write().unwrap() = entries;
        cache
    }

    /// Append records added since the last persist (writing the header
    /// if the file is new).
    pub fn persist(&self, path: &Path) -> std::io::Result<()> {
        let fresh: Vec<Key> = std::mem::take(&mut *self.fresh.write().unwrap());
        if fresh.is_empty() {
            return Ok(());
        }
        let entries = self.entries.read().unwrap();
        let new_file = !path.exists();
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        if new_file {
            writeln!(file, "{CACHE_HEADER}")?;
        }
        for key in fresh {
            if let Some(e) = entries.get(&key) {
                writeln!(
                    file,
                    "{} {} {} {} {} {} {} {}",
                    key.0.traj, key.0.index, key.1.traj, key.1.index, key.2, e.p, e.n, e.seed
                )?;
            }
        }
        Ok(())
    }
}
