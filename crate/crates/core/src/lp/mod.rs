//! Linear programming: a dense bounded-variable primal simplex working in
//! floating point, followed by an exact rational solve of the final basis.
//!
//! Every variable carries finite bounds. Rows are converted to equalities
//! with one slack each (`a·x + s = b`); rows that are violated at the starting
//! point additionally get an artificial column for phase one.

mod exact;
mod simplex;

use num_rational::BigRational;
use thiserror::Error;

pub use exact::{rationalize_vertex, to_rational};
pub use simplex::{solve_float, FloatSolution, IncrementalSimplex, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// `min objective·x` subject to `lo ≤ x ≤ hi` and the listed constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("iteration limit of {0} pivots exceeded")]
    IterationLimit(usize),
    #[error("final basis is singular in exact arithmetic")]
    SingularBasis,
    #[error("exact vertex violates feasibility after {attempts} attempts: {detail}")]
    InexactVertex { attempts: usize, detail: String },
}

impl LpProblem {
    /// A problem over `num_vars` variables in `[0, 1]` with zero objective.
    pub fn unit_box(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            bounds: vec![(0.0, 1.0); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let bad = |s: String| Err(LpError::Malformed(s));
        if self.objective.len() != self.num_vars || self.bounds.len() != self.num_vars {
            return bad("objective and bounds must have one entry per variable".into());
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return bad(format!("variable {i} has invalid bounds [{lo}, {hi}]"));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("objective has a non-finite coefficient".into());
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return bad(format!("constraint {r} has a non-finite right-hand side"));
            }
            for &(j, a) in &c.coeffs {
                if j >= self.num_vars || !a.is_finite() {
                    return bad(format!("constraint {r} has an invalid coefficient at {j}"));
                }
            }
        }
        Ok(())
    }
}

/// A column of the working tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    Var(usize),
    Slack(usize),
    Artificial(usize),
}

/// Final simplex basis. Nonbasic columns sit at the bound recorded here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    /// Basic column of each row.
    pub basic: Vec<Column>,
    /// Nonbasic columns at their upper bound; all other nonbasic columns are at
    /// their lower bound.
    pub at_upper: Vec<Column>,
}

impl Basis {
    /// Constraint rows whose slack is nonbasic, i.e. rows held tight at the vertex.
    pub fn tight_rows(&self) -> Vec<usize> {
        let mut basic_rows: Vec<bool> = vec![false; self.basic.len()];
        for c in &self.basic {
            if let Column::Slack(r) | Column::Artificial(r) = *c {
                basic_rows[r] = true;
            }
        }
        (0..self.basic.len()).filter(|&r| !basic_rows[r]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Exact objective at `vertex` (zero when infeasible).
    pub objective_value: BigRational,
    /// Exact optimal vertex (empty when infeasible).
    pub vertex: Vec<BigRational>,
    pub basis: Option<Basis>,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Numeric settings tried in order by [`solve`]: perturbed, unperturbed,
/// then tightened tolerances with Bland's rule throughout.
pub fn default_schedule() -> [Tolerances; 3] {
    let base = Tolerances::default();
    [
        base,
        Tolerances {
            perturbation: 0.0,
            ..base
        },
        base.tightened(),
    ]
}

/// Solves the problem to an exact optimal vertex.
///
/// The float phase runs with each entry of [`default_schedule`] in turn until
/// the rational vertex of its final basis passes the exact feasibility check.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    solve_with(problem, &default_schedule())
}

pub fn solve_with(problem: &LpProblem, schedule: &[Tolerances]) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let mut last_err = String::new();
    for tol in schedule {
        let float = simplex::solve_float(problem, tol)?;
        let Some(basis) = float.basis else {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective_value: BigRational::from_integer(0.into()),
                vertex: Vec::new(),
                basis: None,
                pivots: float.pivots,
            });
        };
        match rationalize_vertex(problem, &basis) {
            Ok(vertex) => {
                let objective_value = exact::dot(&problem.objective, &vertex);
                return Ok(LpSolution {
                    status: LpStatus::Optimal,
                    objective_value,
                    vertex,
                    basis: Some(basis),
                    pivots: float.pivots,
                });
            }
            Err(LpError::InexactVertex { detail, .. }) => last_err = detail,
            Err(LpError::SingularBasis) => last_err = "singular basis".into(),
            Err(e) => return Err(e),
        }
    }
    Err(LpError::InexactVertex {
        attempts: schedule.len(),
        detail: last_err,
    })
}
