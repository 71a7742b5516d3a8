//! Enrollment database and its binary file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0   4  magic "FGDB"
//! 4   2  format version (1)
//! 6   2  embedding dimension (128)
//! 8   8  created_at, seconds since the Unix epoch
//! 16  8  embedder seed
//! 24  4  identity count N
//!        N x { u16 name length, UTF-8 name, u32 record count }   (names ascending)
//!        records in identity-table order, each 128 x f32
//! ```
//!
//! Records are the f32 values matching is done on, so a file round-trips
//! byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use super::embed::{FaceEmbedder, FaceEmbedding, EMBEDDING_DIM};
use super::image::FaceImage;
use crate::error::FaceError;

pub const DB_MAGIC: &[u8; 4] = b"FGDB";
pub const DB_VERSION: u16 = 1;
/// Stored records may drift from unit length by f32 rounding only.
const STORED_NORM_TOLERANCE: f64 = 1e-5;

/// An embedding as stored and matched: 128 f32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEmbedding(Vec<f32>);

impl StoredEmbedding {
    pub fn from_embedding(e: &FaceEmbedding) -> Self {
        Self(e.as_slice().iter().map(|&v| v as f32).collect())
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    /// Euclidean distance, accumulated in f64.
    pub fn distance(&self, other: &StoredEmbedding) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrollmentDb {
    pub version: u16,
    pub created_at: u64,
    pub embedder_seed: u64,
    entries: BTreeMap<String, Vec<StoredEmbedding>>,
}

fn valid_identity(name: &str) -> Result<(), FaceError> {
    if name.is_empty() || name.len() > 255 || name.chars().any(char::is_control) {
        return Err(FaceError::InvalidIdentity);
    }
    Ok(())
}

impl EnrollmentDb {
    pub fn new(created_at: u64, embedder_seed: u64) -> Self {
        Self {
            version: DB_VERSION,
            created_at,
            embedder_seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<StoredEmbedding>> {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(|v| v.is_empty())
    }

    pub fn num_embeddings(&self) -> usize {
        self.entries.values().map(|v| v.len()).sum()
    }

    pub fn count(&self, identity: &str) -> usize {
        self.entries.get(identity).map_or(0, |v| v.len())
    }

    /// A copy with `embeddings` appended under `identity`.
    pub fn with_embeddings(
        &self,
        identity: &str,
        embeddings: &[FaceEmbedding],
    ) -> Result<Self, FaceError> {
        valid_identity(identity)?;
        if embeddings.is_empty() {
            return Err(FaceError::NoImages);
        }
        let mut next = self.clone();
        next.entries
            .entry(identity.to_string())
            .or_default()
            .extend(embeddings.iter().map(StoredEmbedding::from_embedding));
        Ok(next)
    }

    /// A copy with `identity` removed.
    pub fn without(&self, identity: &str) -> Self {
        let mut next = self.clone();
        next.entries.remove(identity);
        next
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.num_embeddings() * EMBEDDING_DIM * 4);
        out.extend_from_slice(DB_MAGIC);
        out.extend(self.version.to_le_bytes());
        out.extend((EMBEDDING_DIM as u16).to_le_bytes());
        out.extend(self.created_at.to_le_bytes());
        out.extend(self.embedder_seed.to_le_bytes());
        out.extend((self.entries.len() as u32).to_le_bytes());
        for (name, recs) in &self.entries {
            out.extend((name.len() as u16).to_le_bytes());
            out.extend(name.as_bytes());
            out.extend((recs.len() as u32).to_le_bytes());
        }
        for recs in self.entries.values() {
            for r in recs {
                for v in &r.0 {
                    out.extend(v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, FaceError> {
        let mut rd = Reader { data, pos: 0 };
        if rd.take(4)? != DB_MAGIC {
            return Err(FaceError::Database(
                "bad magic, not an enrollment database".into(),
            ));
        }
        let version = rd.u16()?;
        if version != DB_VERSION {
            return Err(FaceError::Database(format!(
                "unsupported format version {version}"
            )));
        }
        let dim = rd.u16()? as usize;
        if dim != EMBEDDING_DIM {
            return Err(FaceError::WrongDimension(dim));
        }
        let created_at = rd.u64()?;
        let embedder_seed = rd.u64()?;
        let n = rd.u32()? as usize;
        let mut table = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let len = rd.u16()? as usize;
            let name = std::str::from_utf8(rd.take(len)?)
                .map_err(|_| FaceError::Database("identity is not UTF-8".into()))?
                .to_string();
            valid_identity(&name)?;
            if table
                .last()
                .is_some_and(|(prev, _): &(String, usize)| *prev >= name)
            {
                return Err(FaceError::Database(
                    "identity table not strictly ascending".into(),
                ));
            }
            table.push((name, rd.u32()? as usize));
        }
        let mut entries = BTreeMap::new();
        for (name, count) in table {
            let mut recs = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let raw = rd.take(EMBEDDING_DIM * 4)?;
                let vals: Vec<f32> = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                let norm = vals.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= STORED_NORM_TOLERANCE) {
                    return Err(FaceError::NotNormalized(norm));
                }
                recs.push(StoredEmbedding(vals));
            }
            entries.insert(name, recs);
        }
        if rd.pos != data.len() {
            return Err(FaceError::Database(format!(
                "{} trailing bytes",
                data.len() - rd.pos
            )));
        }
        Ok(Self {
            version,
            created_at,
            embedder_seed,
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self, FaceError> {
        let data = std::fs::read(path).map_err(|source| FaceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&data)
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FaceError> {
        let s = self
            .data
            .get(self.pos..self.pos + n)
            .ok_or_else(|| FaceError::Database("truncated file".into()))?;
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16, FaceError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }
    fn u32(&mut self) -> Result<u32, FaceError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64, FaceError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Embeds `images` and appends them under `identity`.
pub fn enroll(
    db: &EnrollmentDb,
    identity: &str,
    images: &[FaceImage],
    embedder: &dyn FaceEmbedder,
) -> Result<EnrollmentDb, FaceError> {
    if images.is_empty() {
        return Err(FaceError::NoImages);
    }
    let embs = images
        .iter()
        .map(|i| embedder.embed(i))
        .collect::<Result<Vec<_>, _>>()?;
    db.with_embeddings(identity, &embs)
}

/// Parses `identity,v1,...,v128` lines; blank lines and `#` comments are
/// skipped. Vectors are normalised to unit length.
pub fn import_embeddings(text: &str) -> Result<Vec<(String, FaceEmbedding)>, FaceError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| FaceError::Import {
            line: line_no,
            reason,
        };
        let mut parts = line.split(',');
        let name = parts.next().unwrap_or("").trim().to_string();
        valid_identity(&name).map_err(|e| err(e.to_string()))?;
        let vals = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("{p:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        let emb = FaceEmbedding::normalize(vals).map_err(|e| err(e.to_string()))?;
        out.push((name, emb));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face::embed::ProjectionEmbedder;
    use crate::face::image::synthetic_face;

    fn faces(id: u64, n: u64) -> Vec<FaceImage> {
        (0..n).map(|t| synthetic_face(id, t)).collect()
    }

    #[test]
    fn enroll_appends() {
        let e = ProjectionEmbedder::new(1);
        let db = EnrollmentDb::new(0, 1);
        let db = enroll(&db, "alice", &faces(1, 3), &e).unwrap();
        assert_eq!(db.count("alice"), 3);
        let db2 = enroll(
            &enroll(&EnrollmentDb::new(0, 1), "bob", &faces(2, 2), &e).unwrap(),
            "bob",
            &faces(2, 1),
            &e,
        )
        .unwrap();
        assert_eq!(db2.count("bob"), 3);
        assert!(matches!(
            enroll(&db, "carol", &[], &e),
            Err(FaceError::NoImages)
        ));
        assert!(matches!(
            enroll(&db, "", &faces(3, 1), &e),
            Err(FaceError::InvalidIdentity)
        ));
        assert_eq!(db.without("alice").num_embeddings(), 0);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let e = ProjectionEmbedder::new(4);
        let mut db = EnrollmentDb::new(1_700_000_000, 4);
        for (id, name) in ["zoe", "alice", "bob"].iter().enumerate() {
            db = enroll(&db, name, &faces(id as u64, 2), &e).unwrap();
        }
        let bytes = db.to_bytes();
        assert_eq!(&bytes[..4], b"FGDB");
        let back = EnrollmentDb::from_bytes(&bytes).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.to_bytes(), bytes);
        // Header 28 bytes, table 3 x 6 + 11 name bytes, 6 records.
        assert_eq!(bytes.len(), 28 + 18 + 11 + 6 * 512);
    }

    #[test]
    fn corrupt_files_rejected() {
        let e = ProjectionEmbedder::new(4);
        let db = enroll(&EnrollmentDb::new(0, 4), "a", &faces(0, 1), &e).unwrap();
        let bytes = db.to_bytes();
        assert!(EnrollmentDb::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(EnrollmentDb::from_bytes(&b).is_err());
        let mut b = bytes.clone();
        b[4] = 9;
        assert!(EnrollmentDb::from_bytes(&b).is_err());
        let mut b = bytes.clone();
        b.push(0);
        assert!(EnrollmentDb::from_bytes(&b).is_err());
        let mut b = bytes;
        let last = b.len() - 4;
        b[last..].copy_from_slice(&10.0f32.to_le_bytes());
        assert!(matches!(
            EnrollmentDb::from_bytes(&b),
            Err(FaceError::NotNormalized(_))
        ));
    }

    #[test]
    fn text_import() {
        let row = |name: &str, k: usize| {
            let vals: Vec<String> = (0..128)
                .map(|i| if i == k { "2.0".into() } else { "0".into() })
                .collect();
            format!("{name},{}", vals.join(","))
        };
        let text = format!("# exported\n{}\n\n{}\n", row("ann", 0), row("ben", 5));
        let got = import_embeddings(&text).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].0, "ben");
        assert_eq!(got[1].1.as_slice()[5], 1.0);
        assert!(matches!(
            import_embeddings("ann,1,2,3"),
            Err(FaceError::Import { line: 1, .. })
        ));
        assert!(matches!(
            import_embeddings(&format!("{}\nx,abc", row("a", 1))),
            Err(FaceError::Import { line: 2, .. })
        ));
    }
}
