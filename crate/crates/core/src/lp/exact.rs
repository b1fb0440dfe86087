//! Exact recovery of the vertex defined by a simplex basis.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::{Basis, Column, LpError, LpProblem, Relation};

/// Exact rational value of a finite float.
pub fn to_rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

pub(crate) fn dot(coeffs: &[f64], x: &[BigRational]) -> BigRational {
    coeffs
        .iter()
        .zip(x)
        .filter(|(c, _)| **c != 0.0)
        .fold(BigRational::zero(), |acc, (&c, v)| acc + to_rational(c) * v)
}

type SparseRow = Vec<(usize, BigRational)>;

/// Solves a square sparse system by Gaussian elimination with a
/// fewest-nonzeros row choice. Returns `None` when singular.
fn solve_sparse(mut rows: Vec<SparseRow>, mut rhs: Vec<BigRational>, t: usize) -> Option<Vec<BigRational>> {
    let mut done = vec![false; rows.len()];
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(t); // (row, pivot column)
    for _ in 0..t {
        let r = (0..rows.len())
            .filter(|&r| !done[r] && !rows[r].is_empty())
            .min_by_key(|&r| (rows[r].len(), r))?;
        done[r] = true;
        let (c, piv) = rows[r][0].clone();
        // normalize pivot row
        for e in rows[r].iter_mut() {
            e.1 = &e.1 / &piv;
        }
        rhs[r] = &rhs[r] / &piv;
        let prow = rows[r].clone();
        let prhs = rhs[r].clone();
        for k in 0..rows.len() {
            if done[k] {
                continue;
            }
            let Ok(pos) = rows[k].binary_search_by_key(&c, |e| e.0) else {
                continue;
            };
            let f = rows[k][pos].1.clone();
            let mut merged = Vec::with_capacity(rows[k].len() + prow.len());
            let (mut a, mut b) = (0, 0);
            let (ra, rb) = (&rows[k], &prow);
            while a < ra.len() || b < rb.len() {
                let ca = ra.get(a).map_or(usize::MAX, |e| e.0);
                let cb = rb.get(b).map_or(usize::MAX, |e| e.0);
                if ca < cb {
                    merged.push(ra[a].clone());
                    a += 1;
                } else if cb < ca {
                    merged.push((cb, -(&f * &rb[b].1)));
                    b += 1;
                } else {
                    let v = &ra[a].1 - &f * &rb[b].1;
                    if !v.is_zero() {
                        merged.push((ca, v));
                    }
                    a += 1;
                    b += 1;
                }
            }
            rows[k] = merged;
            rhs[k] = &rhs[k] - &f * &prhs;
        }
        order.push((r, c));
    }
    // leftover rows must be consistent (all zero)
    if (0..rows.len()).any(|r| !done[r] && (!rows[r].is_empty() || !rhs[r].is_zero())) {
        return None;
    }
    let mut x = vec![BigRational::zero(); t];
    for &(r, c) in order.iter().rev() {
        let mut v = rhs[r].clone();
        for (j, a) in &rows[r] {
            if *j != c {
                v -= a * &x[*j];
            }
        }
        x[c] = v;
    }
    Some(x)
}

/// Re-solves the basis system of `basis` exactly and checks the resulting
/// point against every bound and constraint of `problem`.
pub fn rationalize_vertex(problem: &LpProblem, basis: &Basis) -> Result<Vec<BigRational>, LpError> {
    let n = problem.num_vars;
    let m = problem.constraints.len();
    if basis.basic.len() != m {
        return Err(LpError::Malformed(format!(
            "basis has {} rows, problem has {m} constraints",
            basis.basic.len()
        )));
    }
    let lo: Vec<BigRational> = problem.bounds.iter().map(|b| to_rational(b.0)).collect();
    let hi: Vec<BigRational> = problem.bounds.iter().map(|b| to_rational(b.1)).collect();
    let rows: Vec<Vec<(usize, BigRational)>> = problem
        .constraints
        .iter()
        .map(|c| c.coeffs.iter().map(|&(j, v)| (j, to_rational(v))).collect())
        .collect();
    let rhs: Vec<BigRational> = problem.constraints.iter().map(|c| to_rational(c.rhs)).collect();

    let upper: std::collections::HashSet<Column> = basis.at_upper.iter().copied().collect();
    let mut basic_var_pos: HashMap<usize, usize> = HashMap::new();
    let mut row_has_basic = vec![false; m];
    for col in &basis.basic {
        match *col {
            Column::Var(j) => {
                let k = basic_var_pos.len();
                basic_var_pos.insert(j, k);
            }
            Column::Slack(r) | Column::Artificial(r) => row_has_basic[r] = true,
        }
    }
    let mut x: Vec<BigRational> = (0..n)
        .map(|j| {
            if upper.contains(&Column::Var(j)) {
                hi[j].clone()
            } else {
                lo[j].clone()
            }
        })
        .collect();

    let free_rows: Vec<usize> = (0..m).filter(|&r| !row_has_basic[r]).collect();
    if free_rows.len() != basic_var_pos.len() {
        return Err(LpError::SingularBasis);
    }
    let mut sys_rows = Vec::with_capacity(free_rows.len());
    let mut sys_rhs = Vec::with_capacity(free_rows.len());
    for &r in &free_rows {
        // nonbasic slack sits at one of its implied bounds
        let (slo, shi) = slack_bounds(problem.constraints[r].relation, &rows[r], &rhs[r], &lo, &hi);
        let slack = if upper.contains(&Column::Slack(r)) { shi } else { slo };
        let mut b = &rhs[r] - slack;
        let mut sys = Vec::new();
        for (j, a) in &rows[r] {
            match basic_var_pos.get(j) {
                Some(&k) => sys.push((k, a.clone())),
                None => b -= a * &x[*j],
            }
        }
        sys.sort_by_key(|e| e.0);
        sys_rows.push(sys);
        sys_rhs.push(b);
    }
    let t = basic_var_pos.len();
    let sol = solve_sparse(sys_rows, sys_rhs, t).ok_or(LpError::SingularBasis)?;
    for (&j, &k) in &basic_var_pos {
        x[j] = sol[k].clone();
    }
    check_feasible(problem, &x, &lo, &hi, &rows, &rhs)?;
    Ok(x)
}

/// Same implied bounds as the float tableau: `b - a·x` over the variable box,
/// clipped so that zero stays inside.
fn slack_bounds(
    relation: Relation,
    row: &[(usize, BigRational)],
    rhs: &BigRational,
    lo: &[BigRational],
    hi: &[BigRational],
) -> (BigRational, BigRational) {
    let zero = BigRational::zero();
    let (min_ax, max_ax) = implied_range(row, lo, hi);
    match relation {
        Relation::Le => (zero.clone(), (rhs - min_ax).max(zero)),
        Relation::Ge => ((rhs - max_ax).min(zero.clone()), zero),
        Relation::Eq => (zero.clone(), zero),
    }
}

fn implied_range(row: &[(usize, BigRational)], lo: &[BigRational], hi: &[BigRational]) -> (BigRational, BigRational) {
    let mut min = BigRational::zero();
    let mut max = BigRational::zero();
    for (j, a) in row {
        let (p, q) = (a * &lo[*j], a * &hi[*j]);
        if p < q {
            min += p;
            max += q;
        } else {
            min += q;
            max += p;
        }
    }
    (min, max)
}

fn check_feasible(
    problem: &LpProblem,
    x: &[BigRational],
    lo: &[BigRational],
    hi: &[BigRational],
    rows: &[Vec<(usize, BigRational)>],
    rhs: &[BigRational],
) -> Result<(), LpError> {
    let fail = |detail: String| Err(LpError::InexactVertex { attempts: 1, detail });
    for j in 0..x.len() {
        if x[j] < lo[j] || x[j] > hi[j] {
            return fail(format!("variable {j} = {} outside [{}, {}]", x[j], lo[j], hi[j]));
        }
    }
    for (r, c) in problem.constraints.iter().enumerate() {
        let ax = rows[r].iter().fold(BigRational::zero(), |acc, (j, a)| acc + a * &x[*j]);
        let ok = match c.relation {
            Relation::Le => ax <= rhs[r],
            Relation::Ge => ax >= rhs[r],
            Relation::Eq => ax == rhs[r],
        };
        if !ok {
            return fail(format!("constraint {r}: {ax} {:?} {}", c.relation, rhs[r]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LpProblem, Relation};

    #[test]
    fn sparse_solver_small() {
        // x + y = 3, x - y = 1
        let one = BigRational::from_integer(1.into());
        let rows = vec![
            vec![(0, one.clone()), (1, one.clone())],
            vec![(0, one.clone()), (1, -one.clone())],
        ];
        let rhs = vec![to_rational(3.0), to_rational(1.0)];
        let x = solve_sparse(rows, rhs, 2).unwrap();
        assert_eq!(x, vec![to_rational(2.0), to_rational(1.0)]);
    }

    #[test]
    fn singular_detected() {
        let one = BigRational::from_integer(1.into());
        let rows = vec![vec![(0, one.clone()), (1, one.clone())], vec![(0, one.clone()), (1, one.clone())]];
        let rhs = vec![to_rational(1.0), to_rational(2.0)];
        assert!(solve_sparse(rows, rhs, 2).is_none());
    }

    #[test]
    fn basis_snaps_near_integral_values() {
        // the float phase may carry 1 - 1e-12; the basis system yields exactly 1
        let mut p = LpProblem::unit_box(2);
        p.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let basis = Basis {
            basic: vec![Column::Var(0)],
            at_upper: vec![],
        };
        let x = rationalize_vertex(&p, &basis).unwrap();
        assert_eq!(x, vec![to_rational(1.0), to_rational(0.0)]);
    }

    #[test]
    fn infeasible_basis_rejected() {
        let mut p = LpProblem::unit_box(1);
        p.add_constraint(vec![(0, 2.0)], Relation::Le, 3.0);
        let basis = Basis {
            basic: vec![Column::Var(0)],
            at_upper: vec![],
        };
        assert!(matches!(rationalize_vertex(&p, &basis), Err(LpError::InexactVertex { .. })));
    }
}
