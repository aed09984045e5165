//! Binary checkpoint format: version-tagged header, then per parameter
//! the name, shape and little-endian f64 payloads for data and both Adam
//! moments.

use crate::error::{DiffError, Result};
use crate::params::ParamStore;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PRCKPT01";

pub fn save(store: &ParamStore, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&store.step.to_le_bytes());
    buf.extend_from_slice(&(store.entries.len() as u32).to_le_bytes());
    for e in &store.entries {
        let name = e.name.as_bytes();
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(e.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(e.cols as u64).to_le_bytes());
        for series in [&e.data, &e.m, &e.v] {
            for v in series.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp)
        .map_err(|e| DiffError::Checkpoint(format!("create {tmp:?}: {e}")))?;
    f.write_all(&buf)
        .and_then(|_| f.sync_all())
        .map_err(|e| DiffError::Checkpoint(format!("write {tmp:?}: {e}")))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| DiffError::Checkpoint(format!("rename to {path:?}: {e}")))?;
    Ok(())
}

/// Loads a checkpoint into a fresh store. Parameter order and names are
/// exactly as saved.
pub fn load(path: &Path) -> Result<ParamStore> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| DiffError::Checkpoint(format!("read {path:?}: {e}")))?;
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
        if *at + n > bytes.len() {
            return Err(DiffError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &bytes[*at..*at + n];
        *at += n;
        Ok(s)
    };
    if take(&mut at, 8)? != MAGIC {
        return Err(DiffError::Checkpoint("bad magic/version".into()));
    }
    let step = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let count = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut at, name_len)?.to_vec())
            .map_err(|_| DiffError::Checkpoint("bad parameter name".into()))?;
        let rows = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
        let len = rows * cols;
        let mut series = [Vec::new(), Vec::new(), Vec::new()];
        for s in series.iter_mut() {
            let raw = take(&mut at, len * 8)?;
            *s = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
        }
        let [data, m, v] = series;
        let id = store.register(&name, rows, cols, data);
        store.entries[id.0].m = m;
        store.entries[id.0].v = v;
    }
    store.step = step;
    if at != bytes.len() {
        return Err(DiffError::Checkpoint("trailing bytes".into()));
    }
    Ok(store)
}

impl ParamStore {
    pub fn save(&self, path: &Path) -> Result<()> {
        save(self, path)
    }

    pub fn load(path: &Path) -> Result<ParamStore> {
        load(path)
    }

    /// Copies data and moments from another store with identical layout.
    pub fn copy_from(&mut self, other: &ParamStore) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(DiffError::Checkpoint("parameter count mismatch".into()));
        }
        for (mine, theirs) in self.entries.iter_mut().zip(&other.entries) {
            if mine.name != theirs.name || mine.rows != theirs.rows || mine.cols != theirs.cols {
                return Err(DiffError::Checkpoint(format!(
                    "parameter layout mismatch at {}",
                    mine.name
                )));
            }
            mine.data.copy_from_slice(&theirs.data);
            mine.m.copy_from_slice(&theirs.m);
            mine.v.copy_from_slice(&theirs.v);
        }
        self.step = other.step;
        Ok(())
    }
}
