//! Brute-force helpers shared by the integration tests.
#![allow(dead_code)]

use instanton_core::code::TannerCode;
use num_rational::Ratio;
use num_traits::{One, Zero};
use proptest::prelude::*;

pub type Q = Ratio<i64>;

/// Inequality `a·x ≤ b`.
#[derive(Clone, Debug)]
pub struct Ineq {
    pub a: Vec<Q>,
    pub b: Q,
}

/// Box plus every odd-set inequality of every check.
pub fn projected_inequalities(code: &TannerCode) -> Vec<Ineq> {
    let n = code.n();
    let mut out = Vec::new();
    for i in 0..n {
        let mut a = vec![Q::zero(); n];
        a[i] = Q::one();
        out.push(Ineq { a: a.clone(), b: Q::one() });
        a[i] = -Q::one();
        out.push(Ineq { a, b: Q::zero() });
    }
    for nb in code.checks() {
        for mask in 0u32..(1 << nb.len()) {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let mut a = vec![Q::zero(); n];
            for (k, &i) in nb.iter().enumerate() {
                a[i] = if mask >> k & 1 == 1 { Q::one() } else { -Q::one() };
            }
            out.push(Ineq { a, b: Q::from_integer(mask.count_ones() as i64 - 1) });
        }
    }
    out
}

/// Solves the square system exactly; `None` when singular.
fn solve(rows: &[&Ineq]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows.iter().map(|r| r.a.iter().copied().chain([r.b]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= *p * f;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n]).collect())
}

fn combinations(k: usize, n: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(start: usize, k: usize, n: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            go(i + 1, k, n, cur, visit);
            cur.pop();
        }
    }
    go(0, k, n, &mut Vec::with_capacity(k), visit);
}

/// All vertices of the projected polytope by trying every n-subset of
/// inequalities as the tight set.
pub fn vertices(code: &TannerCode) -> Vec<Vec<Q>> {
    let ineqs = projected_inequalities(code);
    let n = code.n();
    let mut out: Vec<Vec<Q>> = Vec::new();
    combinations(n, ineqs.len(), &mut |pick: &[usize]| {
        let rows: Vec<&Ineq> = pick.iter().map(|&k| &ineqs[k]).collect();
        if let Some(x) = solve(&rows) {
            let feasible = ineqs.iter().all(|q| q.a.iter().zip(&x).map(|(a, v)| a * v).sum::<Q>() <= q.b);
            if feasible && !out.contains(&x) {
                out.push(x);
            }
        }
    });
    out
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cost_of(flips: &[usize], v: &[Q]) -> Q {
    let total: Q = v.iter().sum();
    let flipped: Q = flips.iter().map(|&i| v[i]).sum();
    total - flipped * 2
}

/// Small random codes: `n` variables and up to three checks of degree 2..=4.
pub fn tiny_code(max_n: usize) -> impl Strategy<Value = TannerCode> {
    (3..=max_n)
        .prop_flat_map(|n| {
            let check = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=4.min(n));
            (Just(n), proptest::collection::vec(check, 1..=3))
        })
        .prop_map(|(n, checks)| TannerCode::from_check_neighbors(n, checks).expect("valid tiny code"))
}
