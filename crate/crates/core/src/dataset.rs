//! Plaintext tables: schema, CSV ingestion and attribute-wise encryption.
//!
//! A schema file has one line per column, in table order:
//!
//! ```text
//! # comment
//! age: 50..80, feature: yes
//! num: 0..4, feature: no
//! ```

use std::io::Read;
use std::path::Path;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, PublicKey};
use crate::primitives::{sbd_mask_fits, DEFAULT_KAPPA};
use crate::rng::SessionRng;
use crate::sknn::EncryptedDatabase;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub lo: u64,
    pub hi: u64,
    pub feature: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns: Vec<ColumnSpec> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Schema { line: line_no, message };
            let (name, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `name: lo..hi, feature: yes|no`".into()))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(err("empty column name".into()));
            }
            if columns.iter().any(|c| c.name == name) {
                return Err(err(format!("duplicate column `{name}`")));
            }
            let mut parts = rest.split(',').map(str::trim);
            let range = parts.next().unwrap_or("");
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| err(format!("bad range `{range}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| err(format!("bound `{}` is not a nonnegative integer", s.trim())))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo > hi {
                return Err(err(format!("empty range {lo}..{hi}")));
            }
            let mut feature = true;
            for part in parts {
                match part.split_once(':').map(|(k, v)| (k.trim(), v.trim())) {
                    Some(("feature", "yes")) => feature = true,
                    Some(("feature", "no")) => feature = false,
                    _ => return Err(err(format!("unknown setting `{part}`"))),
                }
            }
            columns.push(ColumnSpec { name: name.to_string(), lo, hi, feature });
        }
        if columns.is_empty() {
            return Err(Error::Schema { line: 0, message: "no columns declared".into() });
        }
        if !columns.iter().any(|c| c.feature) {
            return Err(Error::Schema { line: 0, message: "no feature columns".into() });
        }
        Ok(Self { columns })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&j| self.columns[j].feature).collect()
    }

    /// Largest squared distance between two points inside the declared
    /// feature domains.
    pub fn max_squared_distance(&self) -> BigUint {
        self.columns
            .iter()
            .filter(|c| c.feature)
            .map(|c| {
                let w = BigUint::from(c.hi - c.lo);
                &w * &w
            })
            .sum()
    }

    /// Smallest `l` with `max distance <= 2^l - 2`, keeping `2^l - 1` free as
    /// the exclusion sentinel. Feature values must also stay below it.
    pub fn distance_bit_length(&self) -> usize {
        let max_feature = self.columns.iter().filter(|c| c.feature).map(|c| c.hi).max().unwrap_or(0);
        let need = self.max_squared_distance().max(BigUint::from(max_feature)) + 1u32;
        need.bits() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainTable {
    pub schema: Schema,
    pub rows: Vec<Vec<u64>>,
}

impl PlainTable {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.schema.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.schema.columns.iter().map(|c| c.name.clone()).collect()
    }
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<PlainTable> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Parses a headed CSV whose columns are exactly the schema's, in order.
pub fn read_csv<R: Read>(input: R, schema: &Schema) -> Result<PlainTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Dataset(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if header != expected {
        return Err(Error::Dataset(format!("header {header:?} does not match schema columns {expected:?}")));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::Dataset(format!("row {row_no}: {e}")))?;
        if record.len() != expected.len() {
            return Err(Error::Cell {
                row: row_no,
                column: expected.get(record.len()).unwrap_or(&"<extra>").to_string(),
                message: format!("row has {} cells, expected {}", record.len(), expected.len()),
            });
        }
        let mut row = Vec::with_capacity(expected.len());
        for (cell, spec) in record.iter().zip(&schema.columns) {
            let cell_err = |message: String| Error::Cell { row: row_no, column: spec.name.clone(), message };
            let v: u64 = cell
                .parse()
                .map_err(|_| cell_err(format!("`{cell}` is not a nonnegative integer")))?;
            if v < spec.lo || v > spec.hi {
                return Err(cell_err(format!("{v} outside declared range {}..{}", spec.lo, spec.hi)));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset("no rows".into()));
    }
    Ok(PlainTable { schema: schema.clone(), rows })
}

/// Encrypts every cell under `pk`. Rows are split over the available cores;
/// the output is row-major in input order regardless of scheduling.
pub fn encrypt_table<R: RngCore + CryptoRng>(pk: &PublicKey, table: &PlainTable, rng: &mut R) -> Result<EncryptedDatabase> {
    let l = table.schema.distance_bit_length();
    if !sbd_mask_fits(pk, l, DEFAULT_KAPPA) {
        return Err(Error::Precondition(format!(
            "distance bit length {l} is too large for a {}-bit key",
            pk.bits()
        )));
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(table.n()).max(1);
    let chunk = table.n().div_ceil(workers);
    let seeds: Vec<[u8; 32]> = (0..workers)
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        })
        .collect();
    let parts: Vec<Result<Vec<Vec<Ciphertext>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = table
            .rows
            .chunks(chunk)
            .zip(seeds)
            .map(|(rows, seed)| {
                scope.spawn(move || {
                    let mut rng = SessionRng::from_seed(seed);
                    rows.iter()
                        .map(|row| row.iter().map(|&v| pk.encrypt_u64(v, &mut rng)).collect())
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("encryption worker panicked")).collect()
    });
    let mut records = Vec::with_capacity(table.n());
    for p in parts {
        records.extend(p?);
    }
    let features = table.schema.columns.iter().map(|c| c.feature).collect();
    EncryptedDatabase::new(table.column_names(), features, l, pk.fingerprint(), records)
}
