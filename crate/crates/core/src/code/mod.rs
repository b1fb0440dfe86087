//! Tanner-graph representation of binary LDPC codes.
//!
//! Indices are 0-based everywhere inside the crate. File formats and the CLI
//! use 1-based positions; conversion happens in [`alist`] and at the CLI edge.

pub mod alist;
pub mod qc;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use qc::{build_qc_code, tanner_155, QcSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("code must have at least one variable and one check (got n={n}, m={m})")]
    Empty { n: usize, m: usize },
    #[error("check {check} has no neighbors")]
    EmptyCheck { check: usize },
    #[error("check {check} references variable {var} out of range 0..{n}")]
    VarOutOfRange { check: usize, var: usize, n: usize },
    #[error("check {check} lists variable {var} more than once")]
    DuplicateVar { check: usize, var: usize },
    #[error("invalid QC specification: {0}")]
    InvalidQc(String),
}

/// Parity-check structure of a binary code as a bipartite Tanner graph.
///
/// Immutable once built; `check_neighbors` and `var_neighbors` are kept as
/// transposes of each other.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TannerCode {
    n: usize,
    check_neighbors: Vec<Vec<usize>>,
    var_neighbors: Vec<Vec<usize>>,
}

impl TannerCode {
    /// Builds a code from the variable lists of each check (one list per row of H).
    pub fn from_check_neighbors(n: usize, checks: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let m = checks.len();
        if n == 0 || m == 0 {
            return Err(CodeError::Empty { n, m });
        }
        let mut var_neighbors = vec![Vec::new(); n];
        for (j, row) in checks.iter().enumerate() {
            if row.is_empty() {
                return Err(CodeError::EmptyCheck { check: j });
            }
            let mut seen = std::collections::HashSet::with_capacity(row.len());
            for &v in row {
                if v >= n {
                    return Err(CodeError::VarOutOfRange { check: j, var: v, n });
                }
                if !seen.insert(v) {
                    return Err(CodeError::DuplicateVar { check: j, var: v });
                }
                var_neighbors[v].push(j);
            }
        }
        Ok(TannerCode {
            n,
            check_neighbors: checks,
            var_neighbors,
        })
    }

    /// Builds a code from a dense 0/1 parity-check matrix given row by row.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self, CodeError> {
        let n = rows.first().map_or(0, |r| r.len());
        let checks = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Self::from_check_neighbors(n, checks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.check_neighbors.len()
    }

    /// N(j): variables adjacent to check `j`.
    pub fn check(&self, j: usize) -> &[usize] {
        &self.check_neighbors[j]
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.check_neighbors
    }

    /// Checks adjacent to variable `i`.
    pub fn var(&self, i: usize) -> &[usize] {
        &self.var_neighbors[i]
    }

    pub fn max_check_degree(&self) -> usize {
        self.check_neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_var_degree(&self) -> usize {
        self.var_neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.check_neighbors.iter().map(Vec::len).sum()
    }

    /// Dense H, one row per check.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.check_neighbors
            .iter()
            .map(|row| {
                let mut r = vec![0u8; self.n];
                for &v in row {
                    r[v] = 1;
                }
                r
            })
            .collect()
    }

    /// True when `word` (0/1 per variable) satisfies every parity check.
    pub fn is_codeword(&self, word: &[bool]) -> bool {
        word.len() == self.n
            && self
                .check_neighbors
                .iter()
                .all(|row| row.iter().filter(|&&v| word[v]).count() % 2 == 0)
    }

    /// Rank of H over GF(2).
    pub fn gf2_rank(&self) -> usize {
        let words = self.n.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = self
            .check_neighbors
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for &v in row {
                    bits[v / 64] |= 1 << (v % 64);
                }
                bits
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.n {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Code dimension k = n - rank(H).
    pub fn dimension(&self) -> usize {
        self.n - self.gf2_rank()
    }

    /// Short stable fingerprint of the adjacency (FNV-1a over the check lists).
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.n as u64);
        eat(self.m() as u64);
        for row in &self.check_neighbors {
            eat(u64::MAX);
            for &v in row {
                eat(v as u64);
            }
        }
        format!("{h:016x}")
    }
}

impl fmt::Debug for TannerCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TannerCode")
            .field("n", &self.n)
            .field("m", &self.m())
            .field("edges", &self.num_edges())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TannerCode {
        TannerCode::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    #[test]
    fn adjacency_is_transposed() {
        let c = small();
        assert_eq!(c.n(), 3);
        assert_eq!(c.m(), 2);
        assert_eq!(c.check(0), &[0, 1]);
        assert_eq!(c.check(1), &[1, 2]);
        assert_eq!(c.var(1), &[0, 1]);
        assert_eq!(c.var(2), &[1]);
    }

    #[test]
    fn rank_of_small_matrix() {
        assert_eq!(small().gf2_rank(), 2);
        let dup = TannerCode::from_dense(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        assert_eq!(dup.gf2_rank(), 2);
        let dep = TannerCode::from_dense(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap();
        assert_eq!(dep.gf2_rank(), 2);
    }

    #[test]
    fn rejects_bad_adjacency() {
        assert_eq!(
            TannerCode::from_check_neighbors(3, vec![vec![0, 0]]),
            Err(CodeError::DuplicateVar { check: 0, var: 0 })
        );
        assert!(matches!(
            TannerCode::from_check_neighbors(3, vec![vec![3]]),
            Err(CodeError::VarOutOfRange { .. })
        ));
        assert!(matches!(
            TannerCode::from_check_neighbors(3, vec![vec![]]),
            Err(CodeError::EmptyCheck { check: 0 })
        ));
        assert!(matches!(
            TannerCode::from_check_neighbors(0, vec![vec![0]]),
            Err(CodeError::Empty { .. })
        ));
    }

    #[test]
    fn codeword_membership() {
        let c = small();
        assert!(c.is_codeword(&[true, true, true]));
        assert!(!c.is_codeword(&[true, false, false]));
    }
}
