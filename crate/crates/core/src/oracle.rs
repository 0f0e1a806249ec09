//! Plaintext reference implementations used as ground truth in tests.

use num_bigint::BigUint;

/// `sum (x_i - y_i)^2` over equal-length vectors.
pub fn squared_distance(x: &[u64], y: &[u64]) -> u128 {
    assert_eq!(x.len(), y.len(), "dimension mismatch");
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u128;
            d * d
        })
        .sum()
}

/// Binary expansion of `z` in `l` bits, most significant first.
pub fn plain_sbd(z: u64, l: usize) -> Vec<u8> {
    assert!(l >= 64 || z >> l == 0, "{z} does not fit in {l} bits");
    (0..l).rev().map(|i| if i >= 64 { 0 } else { ((z >> i) & 1) as u8 }).collect()
}

pub fn plain_min_bits(u: u64, v: u64, l: usize) -> Vec<u8> {
    plain_sbd(u.min(v), l)
}

pub fn plain_product(a: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    (a * b) % n
}

/// Ground truth for one kNN query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Row indices of one minimal answer, nearest first; ties by row index.
    pub indices: Vec<usize>,
    /// The `k` smallest squared distances, nondecreasing.
    pub distances: Vec<u128>,
}

/// Brute-force kNN over the rows restricted to `features`.
pub fn plain_knn(rows: &[Vec<u64>], features: &[usize], query: &[u64], k: usize) -> OracleResult {
    assert!(k <= rows.len(), "k = {k} exceeds {} rows", rows.len());
    let mut scored: Vec<(u128, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(&project(row, features), query), i))
        .collect();
    scored.sort();
    scored.truncate(k);
    OracleResult {
        indices: scored.iter().map(|&(_, i)| i).collect(),
        distances: scored.iter().map(|&(d, _)| d).collect(),
    }
}

pub fn project(row: &[u64], features: &[usize]) -> Vec<u64> {
    features.iter().map(|&c| row[c]).collect()
}

/// Sorted squared distances of returned records to `query`; two answers are
/// equally valid exactly when these lists are equal.
pub fn distance_multiset(records: &[Vec<u64>], features: &[usize], query: &[u64]) -> Vec<u128> {
    let mut d: Vec<u128> = records
        .iter()
        .map(|r| squared_distance(&project(r, features), query))
        .collect();
    d.sort();
    d
}

/// Whether `records` is a valid kNN answer: each one is a row of the table
/// (with multiplicity) and the distances match the oracle's.
pub fn is_valid_answer(rows: &[Vec<u64>], features: &[usize], query: &[u64], records: &[Vec<u64>]) -> bool {
    if records.len() > rows.len() {
        return false;
    }
    let expected = plain_knn(rows, features, query, records.len()).distances;
    let mut pool: Vec<&Vec<u64>> = rows.iter().collect();
    for r in records {
        match pool.iter().position(|p| *p == r) {
            Some(i) => {
                pool.swap_remove(i);
            }
            None => return false,
        }
    }
    distance_multiset(records, features, query) == expected
}
