//! Quasi-cyclic codes built from circulant permutation matrices.

use serde::{Deserialize, Serialize};

use super::{CodeError, TannerCode};

/// Block layout of a QC parity-check matrix. Block (a, b) is the p×p identity
/// with its columns cyclically shifted by `exponents[a][b]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcSpec {
    pub rows: usize,
    pub cols: usize,
    pub circulant_size: usize,
    pub exponents: Vec<Vec<usize>>,
}

impl QcSpec {
    pub fn validate(&self) -> Result<(), CodeError> {
        let bad = |msg: String| Err(CodeError::InvalidQc(msg));
        if self.rows == 0 || self.cols == 0 || self.circulant_size == 0 {
            return bad("rows, cols and circulant_size must be positive".into());
        }
        if self.exponents.len() != self.rows {
            return bad(format!("expected {} exponent rows, got {}", self.rows, self.exponents.len()));
        }
        for (a, row) in self.exponents.iter().enumerate() {
            if row.len() != self.cols {
                return bad(format!("exponent row {a} has {} entries, expected {}", row.len(), self.cols));
            }
            if let Some(&e) = row.iter().find(|&&e| e >= self.circulant_size) {
                return bad(format!("exponent {e} in row {a} is not below {}", self.circulant_size));
            }
        }
        Ok(())
    }

    /// Exponent pattern of the [155,64,20] Tanner code: block (a, b) is
    /// shifted by 5^a * 2^b mod 31, giving rows (1 2 4 8 16), (5 10 20 9 18),
    /// (25 19 7 14 28).
    pub fn tanner_155() -> Self {
        let p = 31;
        let exponents = (0..3)
            .map(|a| (0..5).map(|b| (pow_mod(5, a, p) * pow_mod(2, b, p)) % p).collect())
            .collect();
        QcSpec {
            rows: 3,
            cols: 5,
            circulant_size: p,
            exponents,
        }
    }
}

fn pow_mod(base: usize, exp: usize, modulus: usize) -> usize {
    (0..exp).fold(1 % modulus, |acc, _| acc * base % modulus)
}

/// Expands a [`QcSpec`] into its Tanner graph. Row `a*p + r` of H has a one
/// in column `b*p + (r + s) mod p` for each block shift `s = exponents[a][b]`.
pub fn build_qc_code(spec: &QcSpec) -> Result<TannerCode, CodeError> {
    spec.validate()?;
    let p = spec.circulant_size;
    let mut checks = Vec::with_capacity(spec.rows * p);
    for a in 0..spec.rows {
        for r in 0..p {
            let row = (0..spec.cols)
                .map(|b| b * p + (r + spec.exponents[a][b]) % p)
                .collect();
            checks.push(row);
        }
    }
    TannerCode::from_check_neighbors(spec.cols * p, checks)
}

/// The [155,64,20] Tanner code (93 checks of degree 5, 155 variables of degree 3).
pub fn tanner_155() -> TannerCode {
    build_qc_code(&QcSpec::tanner_155()).expect("built-in spec is valid")
}
