//! The attribute-wise encrypted table held by C1, and its file format.
//!
//! ```text
//! "SKNNDB01"
//! u32 n, u32 m, u32 l
//! ceil(m/8) bytes feature bitmap, bit j of byte j/8 set when column j is a feature
//! 32 bytes public key fingerprint
//! m length-prefixed UTF-8 column names
//! n*m ciphertexts, row-major
//! ```

use std::path::Path;

use crate::codec::{put_biguint, put_bytes, put_u32, Reader};
use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey};

pub const DB_FILE_MAGIC: &[u8; 8] = b"SKNNDB01";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedDatabase {
    columns: Vec<String>,
    features: Vec<bool>,
    l: usize,
    fingerprint: [u8; 32],
    records: Vec<Vec<Ciphertext>>,
}

impl EncryptedDatabase {
    pub fn new(
        columns: Vec<String>,
        features: Vec<bool>,
        l: usize,
        fingerprint: [u8; 32],
        records: Vec<Vec<Ciphertext>>,
    ) -> Result<Self> {
        let m = columns.len();
        if m == 0 || features.len() != m {
            return Err(Error::Dataset(format!(
                "{m} columns but {} feature flags",
                features.len()
            )));
        }
        if !features.iter().any(|&f| f) {
            return Err(Error::Dataset("no feature columns".into()));
        }
        if l == 0 {
            return Err(Error::Dataset("distance bit length must be positive".into()));
        }
        if records.is_empty() {
            return Err(Error::Dataset("no rows".into()));
        }
        if let Some(i) = records.iter().position(|r| r.len() != m) {
            return Err(Error::Dataset(format!(
                "row {i} has {} cells, expected {m}",
                records[i].len()
            )));
        }
        Ok(Self { columns, features, l, fingerprint, records })
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    /// Bit length of squared distances; `2^l - 1` is the exclusion sentinel.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn features(&self) -> &[bool] {
        &self.features
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.m()).filter(|&j| self.features[j]).collect()
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn records(&self) -> &[Vec<Ciphertext>] {
        &self.records
    }

    pub fn row(&self, i: usize) -> &[Ciphertext] {
        &self.records[i]
    }

    /// The feature cells of row `i`, in column order.
    pub fn feature_row(&self, i: usize) -> Vec<Ciphertext> {
        self.records[i]
            .iter()
            .zip(&self.features)
            .filter(|(_, &f)| f)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn check_key(&self, pk: &PublicKey) -> Result<()> {
        if pk.fingerprint() != self.fingerprint {
            return Err(Error::Precondition(format!(
                "database was encrypted under key {}, not {}",
                hex::encode(self.fingerprint),
                pk.fingerprint_hex()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = DB_FILE_MAGIC.to_vec();
        put_u32(&mut buf, self.n() as u32);
        put_u32(&mut buf, self.m() as u32);
        put_u32(&mut buf, self.l as u32);
        let mut bitmap = vec![0u8; self.m().div_ceil(8)];
        for (j, _) in self.features.iter().enumerate().filter(|(_, &f)| f) {
            bitmap[j / 8] |= 1 << (j % 8);
        }
        buf.extend_from_slice(&bitmap);
        buf.extend_from_slice(&self.fingerprint);
        for name in &self.columns {
            put_bytes(&mut buf, name.as_bytes());
        }
        for cell in self.records.iter().flatten() {
            put_biguint(&mut buf, cell.value());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != DB_FILE_MAGIC {
            return Err(Error::Decode("bad database file magic".into()));
        }
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        let l = r.u32()? as usize;
        // Each cell needs at least its 4-byte length.
        if n.saturating_mul(m).saturating_mul(4) > r.remaining() {
            return Err(Error::Decode(format!("{n} x {m} cells exceed the file size")));
        }
        let bitmap = r.take(m.div_ceil(8))?;
        let features: Vec<bool> = (0..m).map(|j| bitmap[j / 8] >> (j % 8) & 1 == 1).collect();
        let fingerprint: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let mut columns = Vec::with_capacity(m);
        for _ in 0..m {
            let name = std::str::from_utf8(r.bytes()?)
                .map_err(|_| Error::Decode("column name is not UTF-8".into()))?;
            columns.push(name.to_string());
        }
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let row = (0..m)
                .map(|_| r.biguint().map(Ciphertext::from_raw))
                .collect::<Result<Vec<_>>>()?;
            records.push(row);
        }
        r.finish()?;
        Self::new(columns, features, l, fingerprint, records)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
