//! MacKay alist format.
//!
//! ```text
//! n m
//! max_var_degree max_check_degree
//! <n variable degrees>
//! <m check degrees>
//! <n lines: 1-based checks of each variable, zero padded>
//! <m lines: 1-based variables of each check, zero padded>
//! ```
//!
//! Zero entries are padding and are skipped. Blank lines are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{CodeError, TannerCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlistError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
    #[error("line {line}: {msg}")]
    Inconsistent { line: usize, msg: String },
    #[error(transparent)]
    Code(#[from] CodeError),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_record(&mut self, what: &str) -> Result<(usize, Vec<usize>), AlistError> {
        for (idx, raw) in self.inner.by_ref() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let nums = raw
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| AlistError::Syntax {
                        line,
                        msg: format!("expected a non-negative integer in {what}, found {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((line, nums));
        }
        Err(AlistError::Truncated(format!("missing {what}")))
    }
}

fn expect_len(line: usize, nums: &[usize], len: usize, what: &str) -> Result<(), AlistError> {
    if nums.len() == len {
        Ok(())
    } else {
        Err(AlistError::Syntax {
            line,
            msg: format!("{what}: expected {len} values, found {}", nums.len()),
        })
    }
}

/// Reads an adjacency list record, dropping zero padding and converting to 0-based.
fn adjacency(
    line: usize,
    nums: &[usize],
    degree: usize,
    max_degree: usize,
    bound: usize,
    what: &str,
) -> Result<Vec<usize>, AlistError> {
    if nums.len() > max_degree.max(degree) {
        return Err(AlistError::Syntax {
            line,
            msg: format!("{what}: {} entries exceed the maximum degree {max_degree}", nums.len()),
        });
    }
    let entries: Vec<usize> = nums.iter().copied().filter(|&x| x != 0).collect();
    if entries.len() != degree {
        return Err(AlistError::Inconsistent {
            line,
            msg: format!("{what}: declared degree {degree}, found {} entries", entries.len()),
        });
    }
    if let Some(&bad) = entries.iter().find(|&&x| x > bound) {
        return Err(AlistError::Syntax {
            line,
            msg: format!("{what}: index {bad} out of range 1..={bound}"),
        });
    }
    let mut sorted = entries.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(AlistError::Inconsistent {
            line,
            msg: format!("{what}: index {} listed twice", w[0]),
        });
    }
    Ok(entries.into_iter().map(|x| x - 1).collect())
}

pub fn parse_alist(text: &str) -> Result<TannerCode, AlistError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (l, header) = lines.next_record("header \"n m\"")?;
    expect_len(l, &header, 2, "header")?;
    let (n, m) = (header[0], header[1]);
    if n == 0 || m == 0 {
        return Err(AlistError::Syntax {
            line: l,
            msg: "n and m must be positive".into(),
        });
    }
    let (l, maxes) = lines.next_record("maximum degrees")?;
    expect_len(l, &maxes, 2, "maximum degrees")?;
    let (max_var, max_chk) = (maxes[0], maxes[1]);

    let (l, var_deg) = lines.next_record("variable degrees")?;
    expect_len(l, &var_deg, n, "variable degrees")?;
    if let Some(&d) = var_deg.iter().find(|&&d| d > max_var) {
        return Err(AlistError::Inconsistent {
            line: l,
            msg: format!("variable degree {d} exceeds maximum {max_var}"),
        });
    }
    let (l, chk_deg) = lines.next_record("check degrees")?;
    expect_len(l, &chk_deg, m, "check degrees")?;
    if let Some(&d) = chk_deg.iter().find(|&&d| d > max_chk) {
        return Err(AlistError::Inconsistent {
            line: l,
            msg: format!("check degree {d} exceeds maximum {max_chk}"),
        });
    }

    let mut var_lists = Vec::with_capacity(n);
    for (i, &deg) in var_deg.iter().enumerate() {
        let what = format!("variable {}", i + 1);
        let (l, nums) = lines.next_record(&format!("adjacency of {what}"))?;
        var_lists.push((l, adjacency(l, &nums, deg, max_var, m, &what)?));
    }
    let mut checks = Vec::with_capacity(m);
    let mut check_lines = Vec::with_capacity(m);
    for (j, &deg) in chk_deg.iter().enumerate() {
        let what = format!("check {}", j + 1);
        let (l, nums) = lines.next_record(&format!("adjacency of {what}"))?;
        checks.push(adjacency(l, &nums, deg, max_chk, n, &what)?);
        check_lines.push(l);
    }

    // Both halves must describe the same graph.
    let mut from_checks = vec![Vec::new(); n];
    for (j, row) in checks.iter().enumerate() {
        for &v in row {
            from_checks[v].push(j);
        }
    }
    for (i, (l, list)) in var_lists.iter().enumerate() {
        let mut a = list.clone();
        a.sort_unstable();
        if a != from_checks[i] {
            return Err(AlistError::Inconsistent {
                line: *l,
                msg: format!("variable {} adjacency disagrees with the check lists", i + 1),
            });
        }
    }
    Ok(TannerCode::from_check_neighbors(n, checks)?)
}

/// Writes the canonical alist form: adjacency in ascending order, zero padded
/// to the maximum degree.
pub fn write_alist(code: &TannerCode) -> String {
    let (n, m) = (code.n(), code.m());
    let (max_var, max_chk) = (code.max_var_degree(), code.max_check_degree());
    let mut out = String::new();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "{n} {m}").unwrap();
    writeln!(out, "{max_var} {max_chk}").unwrap();
    writeln!(out, "{}", join(&mut (0..n).map(|i| code.var(i).len()))).unwrap();
    writeln!(out, "{}", join(&mut (0..m).map(|j| code.check(j).len()))).unwrap();
    let mut padded = |list: &[usize], width: usize| {
        let mut sorted: Vec<usize> = list.iter().map(|x| x + 1).collect();
        sorted.sort_unstable();
        sorted.resize(width, 0);
        writeln!(out, "{}", join(&mut sorted.into_iter())).unwrap();
    };
    for i in 0..n {
        padded(code.var(i), max_var);
    }
    for j in 0..m {
        padded(code.check(j), max_chk);
    }
    out
}

/// Canonical form of a code: check lists sorted ascending.
pub fn canonicalize(code: &TannerCode) -> TannerCode {
    let checks = code
        .checks()
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.sort_unstable();
            r
        })
        .collect();
    TannerCode::from_check_neighbors(code.n(), checks).expect("reordering preserves validity")
}
