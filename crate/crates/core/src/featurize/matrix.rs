use std::fs;
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

const CACHE_MAGIC: &[u8; 5] = b"QSBF1";

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature cache {0} is corrupt or belongs to another key")]
    BadCache(String),
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub tag: String,
    pub columns: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(tag: &str, columns: Vec<String>, rows: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * columns.len(), "data does not fit shape");
        FeatureMatrix {
            tag: tag.to_string(),
            columns,
            rows,
            data,
        }
    }

    pub fn from_rows(tag: &str, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * columns.len());
        for r in rows {
            assert_eq!(r.len(), columns.len(), "ragged feature rows");
            data.extend(r);
        }
        FeatureMatrix::new(tag, columns, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(&self.tag, self.columns.clone(), idx.len(), data)
    }

    /// Writes `canonical_smiles,<columns...>`.
    pub fn write_csv(&self, path: &Path, ids: &[String]) -> Result<(), MatrixError> {
        assert_eq!(ids.len(), self.rows);
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["canonical_smiles".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Cache key over the dataset digest, featurizer tag and bit count.
    pub fn cache_key(dataset_hash: &str, tag: &str, nbits: usize) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(dataset_hash.as_bytes());
        h.update([0]);
        h.update(tag.as_bytes());
        h.update([0]);
        h.update((nbits as u64).to_le_bytes());
        h.finalize().into()
    }

    pub fn write_cache(&self, path: &Path, key: &[u8; 32]) -> Result<(), MatrixError> {
        let mut buf = Vec::with_capacity(64 + self.data.len() * 8);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(key);
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.cols() as u64).to_le_bytes());
        let tag = self.tag.as_bytes();
        buf.extend_from_slice(&(tag.len() as u32).to_le_bytes());
        buf.extend_from_slice(tag);
        for name in &self.columns {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// Loads a cache file; `Ok(None)` when absent or written for a different key.
    pub fn read_cache(path: &Path, key: &[u8; 32]) -> Result<Option<FeatureMatrix>, MatrixError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let bad = || MatrixError::BadCache(path.display().to_string());
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(5).ok_or_else(bad)? != CACHE_MAGIC {
            return Err(bad());
        }
        if r.take(32).ok_or_else(bad)? != key {
            return Ok(None);
        }
        let rows = r.u64().ok_or_else(bad)? as usize;
        let cols = r.u64().ok_or_else(bad)? as usize;
        let tag = r.string().ok_or_else(bad)?;
        let mut columns = Vec::with_capacity(cols);
        for _ in 0..cols {
            columns.push(r.string().ok_or_else(bad)?);
        }
        let count = rows.checked_mul(cols).ok_or_else(bad)?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(r.take(8).ok_or_else(bad)?.try_into().unwrap()));
        }
        if r.pos != bytes.len() {
            return Err(bad());
        }
        Ok(Some(FeatureMatrix::new(&tag, columns, rows, data)))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn string(&mut self) -> Option<String> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().ok()?) as usize;
        String::from_utf8(self.take(n)?.to_vec()).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::from_rows(
            "maccs",
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![0.25, -3.5]],
        )
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = sample();
        let key = FeatureMatrix::cache_key("abc", "maccs", 2048);
        m.write_cache(&p, &key).unwrap();
        assert_eq!(FeatureMatrix::read_cache(&p, &key).unwrap(), Some(m));
        let other = FeatureMatrix::cache_key("abc", "maccs", 1024);
        assert_eq!(FeatureMatrix::read_cache(&p, &other).unwrap(), None);
        assert_eq!(FeatureMatrix::read_cache(&dir.path().join("none"), &key).unwrap(), None);
    }

    #[test]
    fn truncated_cache_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let key = FeatureMatrix::cache_key("abc", "maccs", 2048);
        sample().write_cache(&p, &key).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(FeatureMatrix::read_cache(&p, &key).is_err());
    }

    #[test]
    fn select_rows_keeps_order() {
        let m = sample().select_rows(&[1, 0]);
        assert_eq!(m.row(0), &[0.25, -3.5]);
        assert_eq!(m.row(1), &[1.0, 0.0]);
    }
}
