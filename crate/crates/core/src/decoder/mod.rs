//! LP decoding over the BSC.
//!
//! Two formulations of the same linear program are available:
//!
//! * [`Formulation::Full`]: the LCLP with one `w_{j,T}` variable per even
//!   subset `T ⊆ N(j)`, as in [`build_lclp`].
//! * [`Formulation::Projected`]: the projection of the fundamental polytope
//!   onto `f`, described by the box plus the odd-set inequalities
//!   `Σ_{i∈S}(1−f_i) + Σ_{i∈N(j)∖S} f_i ≥ 1` for odd `S ⊆ N(j)`. Inequalities
//!   are added lazily: the LP is re-solved with every inequality the current
//!   vertex violates until none is violated.
//!
//! Both return an optimal vertex with exact rational coordinates. The
//! outcome classification only depends on the optimal value and the probe, so
//! the two agree on [`OutcomeKind`] and cost even when they pick different
//! optimal vertices.

mod types;

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use types::{
    cost, llr_from_flips, rational_str, DecodeOutcome, FlipError, FlipSupport, LlrVector, OutcomeKind,
    PseudoCodeword, Rational,
};

use crate::code::TannerCode;
use crate::lp::{self, Constraint, LpError, LpProblem, LpStatus, Relation};

pub const DEFAULT_DEGREE_CAP: usize = 16;

/// Float-phase violation needed before an odd-set row is added; smaller
/// violations are settled by the exact check on the final vertex.
const FLOAT_CUT_TOLERANCE: f64 = 1e-7;
const MAX_CUT_ROUNDS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("check {check} has degree {degree}, above the cap of {cap}")]
    DegreeCap { check: usize, degree: usize, cap: usize },
    #[error("length mismatch: code has n={code}, input has {input}")]
    LengthMismatch { code: usize, input: usize },
    #[error("LP reported infeasible for a polytope that contains the origin")]
    UnexpectedInfeasible,
    #[error("cutting-plane loop did not settle within {0} rounds")]
    CutRounds(usize),
    #[error("vertex coordinate {0} does not fit a 64-bit rational")]
    Overflow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    Full,
    #[default]
    Projected,
}

/// The LCLP for one code and LLR vector, with the even subsets behind each
/// `w` column.
#[derive(Debug, Clone)]
pub struct Lclp {
    pub problem: LpProblem,
    /// `even_subsets[j]` lists E_j (0-based variable indices) in column order.
    pub even_subsets: Vec<Vec<Vec<usize>>>,
    /// Column of the first `w_{j,T}` of each check.
    pub w_offsets: Vec<usize>,
}

fn check_degrees(code: &TannerCode, cap: usize) -> Result<(), DecodeError> {
    for j in 0..code.m() {
        let degree = code.check(j).len();
        if degree > cap {
            return Err(DecodeError::DegreeCap { check: j, degree, cap });
        }
    }
    Ok(())
}

/// Subsets of `items` selected by bit masks with the requested parity,
/// in ascending mask order.
pub(crate) fn subsets_with_parity(items: &[usize], odd: bool) -> Vec<Vec<usize>> {
    (0u32..1 << items.len())
        .filter(|mask| (mask.count_ones() % 2 == 1) == odd)
        .map(|mask| {
            (0..items.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| items[b])
                .collect()
        })
        .collect()
}

/// Full LCLP: variables `f_0..f_{n-1}` followed by the `w_{j,T}` of each check.
pub fn build_lclp(code: &TannerCode, gamma: &LlrVector, degree_cap: usize) -> Result<Lclp, DecodeError> {
    if gamma.gamma.len() != code.n() {
        return Err(DecodeError::LengthMismatch {
            code: code.n(),
            input: gamma.gamma.len(),
        });
    }
    check_degrees(code, degree_cap)?;
    let n = code.n();
    let mut even_subsets = Vec::with_capacity(code.m());
    let mut w_offsets = Vec::with_capacity(code.m());
    let mut num_vars = n;
    for j in 0..code.m() {
        let e = subsets_with_parity(code.check(j), false);
        w_offsets.push(num_vars);
        num_vars += e.len();
        even_subsets.push(e);
    }
    let mut objective = vec![0.0; num_vars];
    objective[..n].copy_from_slice(&gamma.as_f64());
    let mut constraints = Vec::new();
    for j in 0..code.m() {
        let off = w_offsets[j];
        let e = &even_subsets[j];
        constraints.push(Constraint::new(
            (0..e.len()).map(|t| (off + t, 1.0)).collect(),
            Relation::Eq,
            1.0,
        ));
        for &i in code.check(j) {
            let mut coeffs = vec![(i, 1.0)];
            coeffs.extend(
                e.iter()
                    .enumerate()
                    .filter(|(_, t)| t.contains(&i))
                    .map(|(t, _)| (off + t, -1.0)),
            );
            constraints.push(Constraint::new(coeffs, Relation::Eq, 0.0));
        }
    }
    Ok(Lclp {
        problem: LpProblem {
            num_vars,
            objective,
            bounds: vec![(0.0, 1.0); num_vars],
            constraints,
        },
        even_subsets,
        w_offsets,
    })
}

/// Odd-set inequality for check support `neighbors` and odd subset `odd`,
/// in the form `Σ_{S} f − Σ_{N∖S} f ≤ |S| − 1`.
pub fn odd_set_cut(neighbors: &[usize], odd: &[usize]) -> Constraint {
    let coeffs = neighbors
        .iter()
        .map(|&i| (i, if odd.contains(&i) { 1.0 } else { -1.0 }))
        .collect();
    Constraint::new(coeffs, Relation::Le, odd.len() as f64 - 1.0)
}

/// Most violated odd-set inequality of check `neighbors` at `x`, if any is violated.
fn most_violated(neighbors: &[usize], x: &[BigRational]) -> Option<Vec<usize>> {
    let half = BigRational::new(1.into(), 2.into());
    let mut odd: Vec<usize> = neighbors.iter().copied().filter(|&i| x[i] > half).collect();
    if odd.len().is_multiple_of(2) {
        let closest = neighbors
            .iter()
            .copied()
            .min_by(|&a, &b| (&x[a] - &half).abs().cmp(&(&x[b] - &half).abs()).then(a.cmp(&b)))?;
        match odd.iter().position(|&i| i == closest) {
            Some(p) => {
                odd.remove(p);
            }
            None => {
                odd.push(closest);
                odd.sort_unstable();
            }
        }
    }
    let lhs = neighbors.iter().fold(BigRational::zero(), |acc, &i| {
        if odd.contains(&i) {
            acc + BigRational::one() - &x[i]
        } else {
            acc + &x[i]
        }
    });
    (lhs < BigRational::one()).then_some(odd)
}

/// Most violated odd-set inequality at a float point, if violated by more than `tol`.
fn most_violated_float(neighbors: &[usize], x: &[f64], tol: f64) -> Option<Vec<usize>> {
    let mut odd: Vec<usize> = neighbors.iter().copied().filter(|&i| x[i] > 0.5).collect();
    if odd.len().is_multiple_of(2) {
        let closest = neighbors
            .iter()
            .copied()
            .min_by(|&a, &b| (x[a] - 0.5).abs().total_cmp(&(x[b] - 0.5).abs()).then(a.cmp(&b)))?;
        match odd.iter().position(|&i| i == closest) {
            Some(p) => {
                odd.remove(p);
            }
            None => {
                odd.push(closest);
                odd.sort_unstable();
            }
        }
    }
    let lhs: f64 = neighbors
        .iter()
        .map(|&i| if odd.contains(&i) { 1.0 - x[i] } else { x[i] })
        .sum();
    (lhs < 1.0 - tol).then_some(odd)
}

/// Cutting-plane LP over the projected polytope that can be re-optimized
/// after rows or the objective change, keeping the odd-set rows found so far.
struct ProjectedLp<'c> {
    code: &'c TannerCode,
    simplex: lp::IncrementalSimplex,
    added: HashSet<(usize, Vec<usize>)>,
}

impl<'c> ProjectedLp<'c> {
    fn new(code: &'c TannerCode, objective: &[f64], extra: &[Constraint]) -> Result<Self, DecodeError> {
        let mut problem = LpProblem::unit_box(code.n());
        problem.objective = objective.to_vec();
        problem.constraints = extra.to_vec();
        problem.validate()?;
        let tol = lp::Tolerances::default().unperturbed();
        Ok(ProjectedLp {
            code,
            simplex: lp::IncrementalSimplex::new(problem, tol)?,
            added: HashSet::new(),
        })
    }

    /// Rows for the odd sets not added yet. An exact vertex never violates a
    /// row already present, so only float separation proposes duplicates;
    /// those are roundoff and skipped.
    fn new_cuts(&mut self, found: impl Iterator<Item = (usize, Vec<usize>)>) -> Vec<Constraint> {
        let code = self.code;
        found
            .filter(|c| self.added.insert(c.clone()))
            .map(|(j, odd)| odd_set_cut(code.check(j), &odd))
            .collect()
    }

    fn solve(&mut self) -> Result<Option<Vec<BigRational>>, DecodeError> {
        let code = self.code;
        for _ in 0..MAX_CUT_ROUNDS {
            let float = self.simplex.solution();
            let Some(basis) = float.basis else {
                return Ok(None);
            };
            let cuts = self.new_cuts(
                (0..code.m())
                    .filter_map(|j| most_violated_float(code.check(j), &float.values, FLOAT_CUT_TOLERANCE).map(|odd| (j, odd))),
            );
            if !cuts.is_empty() {
                self.simplex.add_rows(cuts)?;
                continue;
            }
            let problem = self.simplex.problem();
            let vertex = match lp::rationalize_vertex(problem, &basis) {
                Ok(v) => v,
                Err(_) => {
                    let sol = lp::solve(problem)?;
                    if sol.status == LpStatus::Infeasible {
                        return Ok(None);
                    }
                    sol.vertex
                }
            };
            let cuts = self.new_cuts((0..code.m()).filter_map(|j| most_violated(code.check(j), &vertex).map(|odd| (j, odd))));
            if cuts.is_empty() {
                return Ok(Some(vertex));
            }
            self.simplex.add_rows(cuts)?;
        }
        Err(DecodeError::CutRounds(MAX_CUT_ROUNDS))
    }
}

/// Minimizes `objective·f` over the projected polytope intersected with the
/// `extra` rows. Returns `None` when that intersection is empty.
///
/// Odd-set inequalities are separated at the float vertex until none is
/// violated, then once more exactly at the rational vertex.
pub fn solve_projected(
    code: &TannerCode,
    objective: &[f64],
    extra: &[Constraint],
) -> Result<Option<Vec<BigRational>>, DecodeError> {
    ProjectedLp::new(code, objective, extra)?.solve()
}

/// Row Σγ_i f_i ≤ 0 bounding the probe to points of cost at most zero.
fn zero_cost_row(gamma: &LlrVector) -> Constraint {
    Constraint::new(
        gamma.gamma.iter().enumerate().map(|(i, &g)| (i, g as f64)).collect(),
        Relation::Le,
        0.0,
    )
}

fn nonzero_pcw(values: &[BigRational]) -> Result<Option<PseudoCodeword>, DecodeError> {
    let pcw = to_pcw(values)?;
    Ok((!pcw.is_zero()).then_some(pcw))
}

pub(crate) fn to_pcw(values: &[BigRational]) -> Result<PseudoCodeword, DecodeError> {
    let f = values
        .iter()
        .map(|v| match (v.numer().to_i64(), v.denom().to_i64()) {
            (Some(a), Some(b)) => Ok(Rational::new(a, b)),
            _ => Err(DecodeError::Overflow(v.to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PseudoCodeword::new(f))
}

/// LP decoder bound to one code. Optionally memoizes outcomes by flip
/// support; decoding is a pure function of the support, so the cache never
/// changes results.
pub struct Decoder<'c> {
    code: &'c TannerCode,
    formulation: Formulation,
    degree_cap: usize,
    cache: Option<Mutex<HashMap<Vec<usize>, DecodeOutcome>>>,
    cache_capacity: usize,
}

impl<'c> Decoder<'c> {
    pub fn new(code: &'c TannerCode) -> Self {
        Decoder {
            code,
            formulation: Formulation::default(),
            degree_cap: DEFAULT_DEGREE_CAP,
            cache: None,
            cache_capacity: 0,
        }
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn with_degree_cap(mut self, cap: usize) -> Self {
        self.degree_cap = cap;
        self
    }

    /// Enables memoization, dropping all entries whenever `capacity` is reached.
    pub fn with_cache(mut self, capacity: usize) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self.cache_capacity = capacity.max(1);
        self
    }

    pub fn code(&self) -> &'c TannerCode {
        self.code
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    fn check_len(&self, flips: &FlipSupport) -> Result<(), DecodeError> {
        if flips.n() != self.code.n() {
            return Err(DecodeError::LengthMismatch {
                code: self.code.n(),
                input: flips.n(),
            });
        }
        check_degrees(self.code, self.degree_cap)
    }

    /// Minimizes `objective` over the projected polytope intersected with
    /// `extra` rows on f. Returns `None` when that intersection is empty.
    pub fn optimize(&self, objective: &[f64], extra: &[Constraint]) -> Result<Option<Vec<BigRational>>, DecodeError> {
        let n = self.code.n();
        match self.formulation {
            Formulation::Projected => solve_projected(self.code, objective, extra),
            Formulation::Full => {
                let mut lclp = build_lclp(self.code, &LlrVector { gamma: vec![1; n] }, self.degree_cap)?;
                lclp.problem.objective[..n].copy_from_slice(objective);
                lclp.problem.constraints.extend_from_slice(extra);
                let sol = lp::solve(&lclp.problem)?;
                Ok(sol.is_optimal().then(|| sol.vertex[..n].to_vec()))
            }
        }
    }

    /// Looks for a nonzero point of the polytope with cost ≤ 0 under `flips`
    /// by maximizing Σf subject to Σγ_i f_i ≤ 0.
    pub fn probe_zero_cost(&self, flips: &FlipSupport) -> Result<Option<PseudoCodeword>, DecodeError> {
        self.check_len(flips)?;
        let row = zero_cost_row(&llr_from_flips(flips));
        let objective = vec![-1.0; self.code.n()];
        let vertex = self
            .optimize(&objective, std::slice::from_ref(&row))?
            .ok_or(DecodeError::UnexpectedInfeasible)?;
        nonzero_pcw(&vertex)
    }

    fn decode_uncached(&self, flips: &FlipSupport) -> Result<DecodeOutcome, DecodeError> {
        let gamma = llr_from_flips(flips);
        let objective = gamma.as_f64();
        // the projected LP is kept so a probe can continue from its basis and cuts
        let mut projected = None;
        let vertex = match self.formulation {
            Formulation::Projected => {
                let lp = projected.insert(ProjectedLp::new(self.code, &objective, &[])?);
                lp.solve()?
            }
            Formulation::Full => self.optimize(&objective, &[])?,
        }
        .ok_or(DecodeError::UnexpectedInfeasible)?;
        let pcw = to_pcw(&vertex)?;
        let c = cost(flips, &pcw);
        if c.is_negative() {
            let kind = if pcw.is_integral() {
                OutcomeKind::NonzeroCodeword
            } else {
                OutcomeKind::FractionalPcw
            };
            return Ok(DecodeOutcome {
                kind,
                pcw: Some(pcw),
                cost: c,
            });
        }
        debug_assert!(c.is_zero(), "origin is feasible, optimum cannot be positive");
        let tie = if !pcw.is_zero() {
            Some(pcw)
        } else if let Some(mut lp) = projected {
            lp.simplex.add_rows(vec![zero_cost_row(&gamma)])?;
            lp.simplex.set_objective(vec![-1.0; self.code.n()])?;
            nonzero_pcw(&lp.solve()?.ok_or(DecodeError::UnexpectedInfeasible)?)?
        } else {
            self.probe_zero_cost(flips)?
        };
        Ok(match tie {
            Some(p) => DecodeOutcome {
                kind: OutcomeKind::ZeroCostTie,
                pcw: Some(p),
                cost: Rational::zero(),
            },
            None => DecodeOutcome {
                kind: OutcomeKind::AllZero,
                pcw: None,
                cost: Rational::zero(),
            },
        })
    }

    /// Solves the LP for `flips` and classifies the optimum. Every kind other
    /// than [`OutcomeKind::AllZero`] is a decoding failure.
    pub fn decode(&self, flips: &FlipSupport) -> Result<DecodeOutcome, DecodeError> {
        self.check_len(flips)?;
        let Some(cache) = &self.cache else {
            return self.decode_uncached(flips);
        };
        if let Some(hit) = cache.lock().unwrap().get(flips.positions()) {
            return Ok(hit.clone());
        }
        let out = self.decode_uncached(flips)?;
        let mut map = cache.lock().unwrap();
        if map.len() >= self.cache_capacity {
            map.clear();
        }
        map.insert(flips.positions().to_vec(), out.clone());
        Ok(out)
    }
}

/// Decodes with the default formulation and no cache.
pub fn decode(code: &TannerCode, flips: &FlipSupport) -> Result<DecodeOutcome, DecodeError> {
    Decoder::new(code).decode(flips)
}

pub fn probe_zero_cost(code: &TannerCode, flips: &FlipSupport) -> Result<Option<PseudoCodeword>, DecodeError> {
    Decoder::new(code).probe_zero_cost(flips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::tanner_155;

    fn single_check() -> TannerCode {
        TannerCode::from_check_neighbors(3, vec![vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn lclp_layout_for_single_check() {
        let code = single_check();
        let gamma = llr_from_flips(&FlipSupport::empty(3));
        let l = build_lclp(&code, &gamma, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(l.even_subsets[0], vec![vec![], vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(l.problem.num_vars, 7);
        assert_eq!(l.problem.constraints.len(), 4);
        let eqs: Vec<_> = l.problem.constraints.iter().map(|c| c.relation).collect();
        assert!(eqs.iter().all(|r| *r == Relation::Eq));
    }

    #[test]
    fn lclp_size_for_tanner() {
        let code = tanner_155();
        let gamma = llr_from_flips(&FlipSupport::from_one_based(155, [1]).unwrap());
        let l = build_lclp(&code, &gamma, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(l.problem.num_vars, 1643);
        assert_eq!(l.problem.constraints.len(), 93 * 6);
        assert_eq!(l.problem.objective[0], -1.0);
        assert!(l.problem.objective[1..155].iter().all(|&c| c == 1.0));
        assert!(l.problem.objective[155..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn degree_cap_enforced() {
        let code = TannerCode::from_check_neighbors(5, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let gamma = llr_from_flips(&FlipSupport::empty(5));
        assert!(matches!(
            build_lclp(&code, &gamma, 4),
            Err(DecodeError::DegreeCap { check: 0, degree: 5, cap: 4 })
        ));
        let dec = Decoder::new(&code).with_degree_cap(4);
        assert!(dec.decode(&FlipSupport::empty(5)).is_err());
    }

    #[test]
    fn most_violated_cut() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        // f = (1, 0, 0): odd set {0} gives (1-1) + 0 + 0 = 0 < 1
        let x = vec![q(1, 1), q(0, 1), q(0, 1)];
        assert_eq!(most_violated(&[0, 1, 2], &x), Some(vec![0]));
        // f = (1/2, 1/2, 0) is inside the parity polytope
        let x = vec![q(1, 2), q(1, 2), q(0, 1)];
        assert_eq!(most_violated(&[0, 1, 2], &x), None);
        // f = (1, 1, 1): odd set {0,1,2} gives 0 < 1
        let x = vec![q(1, 1), q(1, 1), q(1, 1)];
        assert_eq!(most_violated(&[0, 1, 2], &x), Some(vec![0, 1, 2]));
    }

    #[test]
    fn repetition_code_outcomes() {
        // H = [1 1]: the only codewords are 00 and 11.
        let code = TannerCode::from_check_neighbors(2, vec![vec![0, 1]]).unwrap();
        for form in [Formulation::Full, Formulation::Projected] {
            let dec = Decoder::new(&code).with_formulation(form);
            let out = dec.decode(&FlipSupport::empty(2)).unwrap();
            assert_eq!(out.kind, OutcomeKind::AllZero);
            // one flip: cost of 11 is 1 - 1 = 0, a tie
            let out = dec.decode(&FlipSupport::new(2, [0]).unwrap()).unwrap();
            assert_eq!(out.kind, OutcomeKind::ZeroCostTie, "{form:?}");
            assert_eq!(out.pcw.unwrap().coords(), &[Rational::one(), Rational::one()]);
            let out = dec.decode(&FlipSupport::new(2, [0, 1]).unwrap()).unwrap();
            assert_eq!(out.kind, OutcomeKind::NonzeroCodeword);
            assert_eq!(out.cost, Rational::from_integer(-2));
        }
    }

    #[test]
    fn cache_returns_identical_outcomes() {
        let code = TannerCode::from_check_neighbors(2, vec![vec![0, 1]]).unwrap();
        let plain = Decoder::new(&code);
        let cached = Decoder::new(&code).with_cache(1);
        for s in [vec![], vec![0], vec![1], vec![0, 1], vec![0]] {
            let f = FlipSupport::new(2, s).unwrap();
            assert_eq!(plain.decode(&f).unwrap(), cached.decode(&f).unwrap());
        }
    }

    #[test]
    fn length_mismatch() {
        let code = single_check();
        assert!(matches!(
            decode(&code, &FlipSupport::empty(4)),
            Err(DecodeError::LengthMismatch { code: 3, input: 4 })
        ));
    }
}
