//! Floating-point phase of the solver: a dense tableau bounded-variable
//! primal simplex with Dantzig pricing that falls back to Bland's rule
//! while pivots stay degenerate, plus a dual simplex used to re-optimize
//! after rows are appended.

use super::{Basis, Column, Constraint, LpError, LpProblem, Relation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub pivot: f64,
    /// Ratio-test values within this distance are treated as ties.
    pub ratio_tie: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub max_degenerate: usize,
    pub bland_from_start: bool,
    /// Scale of the deterministic bound and right-hand-side perturbation used
    /// to break primal degeneracy; 0 disables it.
    pub perturbation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-9,
            optimality: 1e-9,
            pivot: 1e-9,
            ratio_tie: 1e-9,
            max_degenerate: 30,
            bland_from_start: false,
            perturbation: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn tightened(self) -> Self {
        Tolerances {
            feasibility: self.feasibility * 1e-2,
            optimality: self.optimality * 1e-2,
            pivot: self.pivot * 1e-2,
            ratio_tie: self.ratio_tie * 1e-2,
            max_degenerate: 0,
            bland_from_start: true,
            perturbation: 0.0,
        }
    }

    pub fn unperturbed(self) -> Self {
        Tolerances {
            perturbation: 0.0,
            ..self
        }
    }
}

/// Result of the floating-point phase alone.
#[derive(Debug, Clone)]
pub struct FloatSolution {
    /// `None` when phase one proves infeasibility.
    pub basis: Option<Basis>,
    /// Structural values at the final basis (empty when infeasible).
    pub values: Vec<f64>,
    pub pivots: usize,
}

/// Largest bound violation the dual simplex absorbs by snapping.
const SNAP_TOLERANCE: f64 = 1e-7;

fn perturbation(scale: f64, k: usize) -> f64 {
    scale * (0.5 + 0.5 * (k as f64 * 0.618_033_988_749_895).fract())
}

/// Relaxes an inequality right-hand side by the `k`-th perturbation amount.
fn perturb_rhs(c: &Constraint, scale: f64, k: usize) -> f64 {
    let e = perturbation(scale, k);
    match c.relation {
        Relation::Le => c.rhs + e,
        Relation::Ge => c.rhs - e,
        Relation::Eq => c.rhs,
    }
}

/// Slack range of `a·x + s = b` over the variable box, clipped to contain 0.
fn slack_bounds(c: &Constraint, rhs: f64, lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let (min_ax, max_ax) = c.coeffs.iter().fold((0.0, 0.0), |(a, b), &(j, v)| {
        let (l, h) = (v * lo[j], v * hi[j]);
        (a + l.min(h), b + l.max(h))
    });
    match c.relation {
        Relation::Le => (0.0, (rhs - min_ax).max(0.0)),
        Relation::Ge => ((rhs - max_ax).min(0.0), 0.0),
        Relation::Eq => (0.0, 0.0),
    }
}

#[derive(Clone)]
struct Tableau {
    tol: Tolerances,
    m: usize,
    n: usize,
    ncols: usize,
    stride: usize,
    /// Row-major B⁻¹[A | slacks | artificials | b].
    t: Vec<f64>,
    kind: Vec<Column>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    at_upper: Vec<bool>,
    basic: Vec<usize>,
    is_basic: Vec<bool>,
    cost: Vec<f64>,
    d: Vec<f64>,
    pivots: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Moved { degenerate: bool },
}

impl Tableau {
    /// Starting basis: structurals at their lower bound, one slack per row,
    /// and an artificial for every row the starting point violates.
    fn new(p: &LpProblem, tol: Tolerances) -> Self {
        let n = p.num_vars;
        let m = p.constraints.len();
        let scale = tol.perturbation;
        let mut lo: Vec<f64> = Vec::with_capacity(n + 2 * m);
        let mut hi: Vec<f64> = Vec::with_capacity(n + 2 * m);
        for (j, &(l, h)) in p.bounds.iter().enumerate() {
            lo.push(l - if scale > 0.0 { perturbation(scale, 2 * j) } else { 0.0 });
            hi.push(h + if scale > 0.0 { perturbation(scale, 2 * j + 1) } else { 0.0 });
        }
        let rhs: Vec<f64> = p
            .constraints
            .iter()
            .enumerate()
            .map(|(r, c)| if scale > 0.0 { perturb_rhs(c, scale, 2 * n + r) } else { c.rhs })
            .collect();
        let x0: Vec<f64> = lo.clone();

        let mut slack_x = Vec::with_capacity(m);
        let mut slack_upper = Vec::with_capacity(m);
        let mut artificials = Vec::new(); // (row, sign, value)
        for (r, c) in p.constraints.iter().enumerate() {
            let (slo, shi) = slack_bounds(c, rhs[r], &lo[..n], &hi[..n]);
            lo.push(slo);
            hi.push(shi);
            let ax: f64 = c.coeffs.iter().map(|&(j, v)| v * x0[j]).sum();
            let resid = rhs[r] - ax;
            if resid >= slo && resid <= shi {
                slack_x.push(resid);
                slack_upper.push(false);
            } else {
                let sb = resid.clamp(slo, shi);
                slack_x.push(sb);
                slack_upper.push(sb == shi && shi > slo);
                let v = resid - sb;
                artificials.push((r, v.signum(), v.abs()));
            }
        }
        let ncols = n + m + artificials.len();
        let stride = ncols + 1;
        let mut t = vec![0.0; m * stride];
        let mut kind: Vec<Column> = (0..n).map(Column::Var).chain((0..m).map(Column::Slack)).collect();
        let mut sign = vec![1.0; m];
        let mut basic: Vec<usize> = (n..n + m).collect();
        for (k, &(r, s, v)) in artificials.iter().enumerate() {
            kind.push(Column::Artificial(r));
            sign[r] = s;
            basic[r] = n + m + k;
            lo.push(0.0);
            hi.push(v);
            // σ·σ = 1 on the diagonal of the artificial column
            t[r * stride + n + m + k] = 1.0;
        }
        for (r, c) in p.constraints.iter().enumerate() {
            let s = sign[r];
            let row = &mut t[r * stride..(r + 1) * stride];
            for &(j, v) in &c.coeffs {
                row[j] += s * v;
            }
            row[n + r] = s;
            row[ncols] = s * rhs[r];
        }
        let mut x = x0;
        x.extend(slack_x);
        x.extend(artificials.iter().map(|a| a.2));
        let mut at_upper = vec![false; ncols];
        for (r, &u) in slack_upper.iter().enumerate() {
            at_upper[n + r] = u;
        }
        let mut is_basic = vec![false; ncols];
        for &b in &basic {
            is_basic[b] = true;
        }
        Tableau {
            tol,
            m,
            n,
            ncols,
            stride,
            t,
            kind,
            lo,
            hi,
            x,
            at_upper,
            basic,
            is_basic,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            pivots: 0,
            limit: 50 * (m + ncols) + 1000,
        }
    }

    fn is_art(&self, j: usize) -> bool {
        matches!(self.kind[j], Column::Artificial(_))
    }

    fn has_artificials(&self) -> bool {
        (0..self.ncols).any(|j| self.is_art(j))
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.stride..(r + 1) * self.stride]
    }

    fn set_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        let mut d = self.cost.clone();
        for r in 0..self.m {
            let cb = self.cost[self.basic[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.stride..r * self.stride + self.ncols];
                d.iter_mut().zip(row).for_each(|(dj, a)| *dj -= cb * a);
            }
        }
        for (j, dj) in d.iter_mut().enumerate() {
            if self.is_basic[j] {
                *dj = 0.0;
            }
        }
        self.d = d;
    }

    fn recompute_basic_values(&mut self) {
        for r in 0..self.m {
            let row = &self.t[r * self.stride..(r + 1) * self.stride];
            let mut v = row[self.ncols];
            for (j, &a) in row[..self.ncols].iter().enumerate() {
                if !self.is_basic[j] && a != 0.0 {
                    v -= a * self.x[j];
                }
            }
            self.x[self.basic[r]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let stride = self.stride;
        let piv = self.t[r * stride + q];
        {
            let row = &mut self.t[r * stride..(r + 1) * stride];
            row.iter_mut().for_each(|v| *v /= piv);
            row[q] = 1.0;
        }
        let prow: Vec<f64> = self.row(r).to_vec();
        let nz: Vec<usize> = (0..stride).filter(|&j| prow[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * stride + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * stride..(i + 1) * stride];
            for &j in &nz {
                row[j] -= f * prow[j];
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &j in &nz {
                if j < self.ncols {
                    self.d[j] -= dq * prow[j];
                }
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basic[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basic[r] = q;
        self.pivots += 1;
    }

    /// Moves nonbasic `q` by `delta`, updating every basic value.
    fn shift(&mut self, q: usize, delta: f64) {
        for i in 0..self.m {
            let a = self.t[i * self.stride + q];
            if a != 0.0 {
                self.x[self.basic[i]] -= delta * a;
            }
        }
        self.x[q] += delta;
    }

    fn choose_entering(&self, bland: bool, allow_art: bool) -> Option<usize> {
        let tol = self.tol.optimality;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.is_basic[j] || self.hi[j] <= self.lo[j] || (!allow_art && self.is_art(j)) {
                continue;
            }
            let score = if self.at_upper[j] { self.d[j] } else { -self.d[j] };
            if score > tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
        }
        best.map(|b| b.0)
    }

    fn primal_step(&mut self, bland: bool, allow_art: bool) -> Result<Step, LpError> {
        if self.pivots >= self.limit {
            return Err(LpError::IterationLimit(self.limit));
        }
        let Some(q) = self.choose_entering(bland, allow_art) else {
            return Ok(Step::Optimal);
        };
        let dir = if self.at_upper[q] { -1.0 } else { 1.0 };
        let stride = self.stride;
        let mut best: Option<(usize, f64, bool)> = None; // row, limit, hits upper
        for i in 0..self.m {
            let a = self.t[i * stride + q];
            if a.abs() <= self.tol.pivot {
                continue;
            }
            let b = self.basic[i];
            let rate = -dir * a;
            let (lim, hits_upper) = if rate < 0.0 {
                ((self.x[b] - self.lo[b]) / -rate, false)
            } else {
                ((self.hi[b] - self.x[b]) / rate, true)
            };
            let lim = lim.max(0.0);
            let better = match best {
                None => true,
                Some((bi, bl, _)) => {
                    if lim < bl - self.tol.ratio_tie {
                        true
                    } else if lim <= bl + self.tol.ratio_tie {
                        if bland {
                            b < self.basic[bi]
                        } else {
                            a.abs() > self.t[bi * stride + q].abs()
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((i, lim, hits_upper));
            }
        }
        let range = self.hi[q] - self.lo[q];
        let theta = match best {
            Some((r, lim, hits_upper)) if lim < range => {
                self.shift(q, dir * lim);
                let leaving = self.basic[r];
                self.x[leaving] = if hits_upper { self.hi[leaving] } else { self.lo[leaving] };
                self.at_upper[leaving] = hits_upper;
                self.pivot(r, q);
                lim
            }
            _ => {
                self.shift(q, dir * range);
                self.at_upper[q] = !self.at_upper[q];
                self.x[q] = if self.at_upper[q] { self.hi[q] } else { self.lo[q] };
                self.pivots += 1;
                range
            }
        };
        Ok(Step::Moved {
            degenerate: theta <= 1e-12,
        })
    }

    fn run_primal(&mut self, allow_art: bool) -> Result<(), LpError> {
        let mut bland = self.tol.bland_from_start;
        let mut degenerate_run = 0;
        loop {
            match self.primal_step(bland, allow_art)? {
                Step::Optimal => return Ok(()),
                Step::Moved { degenerate: true } => {
                    degenerate_run += 1;
                    if degenerate_run > self.tol.max_degenerate {
                        bland = true;
                    }
                }
                Step::Moved { degenerate: false } => {
                    degenerate_run = 0;
                    bland = self.tol.bland_from_start;
                }
            }
        }
    }

    /// Bounded dual simplex from a dual feasible basis. Returns `false` when
    /// a primal infeasible row has no eligible entering column.
    fn run_dual(&mut self) -> Result<bool, LpError> {
        let feas = self.tol.feasibility;
        loop {
            if self.pivots >= self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let b = self.basic[r];
                let viol = (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]);
                if viol > feas && leave.is_none_or(|(_, v)| viol > v) {
                    leave = Some((r, viol));
                }
            }
            let Some((r, viol)) = leave else {
                return Ok(true);
            };
            let b = self.basic[r];
            let to_lower = self.x[b] < self.lo[b];
            let target = if to_lower { self.lo[b] } else { self.hi[b] };
            // x_b = β_r − Σ T_rj x_j. Raising x_b needs x_j up where T_rj < 0
            // or x_j down where T_rj > 0; lowering it is the mirror image.
            let mut enter: Option<(usize, f64, f64)> = None; // col, ratio, |alpha|
            for j in 0..self.ncols {
                if self.is_basic[j] || self.hi[j] <= self.lo[j] || self.is_art(j) {
                    continue;
                }
                let a = self.t[r * self.stride + j];
                if a.abs() <= self.tol.pivot {
                    continue;
                }
                let increases_xj = !self.at_upper[j];
                let eligible = if to_lower {
                    (increases_xj && a < 0.0) || (!increases_xj && a > 0.0)
                } else {
                    (increases_xj && a > 0.0) || (!increases_xj && a < 0.0)
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, br, ba)) => {
                        ratio < br - self.tol.ratio_tie || (ratio <= br + self.tol.ratio_tie && a.abs() > ba)
                    }
                };
                if better {
                    enter = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, _, _)) = enter else {
                // a violation this small on a row with no usable column is
                // roundoff in a degenerate row, not infeasibility
                if viol <= SNAP_TOLERANCE {
                    self.x[b] = target;
                    continue;
                }
                return Ok(false);
            };
            let a = self.t[r * self.stride + q];
            let delta = (self.x[b] - target) / a;
            self.shift(q, delta);
            self.x[b] = target;
            self.at_upper[b] = !to_lower;
            self.pivot(r, q);
        }
    }

    /// Pivots zero-valued artificials out of the basis where a usable column exists.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            let b = self.basic[r];
            if !self.is_art(b) {
                continue;
            }
            let row = &self.t[r * self.stride..r * self.stride + self.ncols];
            let candidate = (0..self.ncols)
                .filter(|&j| !self.is_basic[j] && !self.is_art(j) && row[j].abs() > 1e-7)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)));
            if let Some(q) = candidate {
                self.x[b] = 0.0;
                self.at_upper[b] = false;
                self.pivot(r, q);
            }
        }
    }

    /// Phase one (if needed) then phase two. Returns `false` when infeasible.
    fn optimize(&mut self, objective: &[f64]) -> Result<bool, LpError> {
        if self.has_artificials() {
            let cost: Vec<f64> = (0..self.ncols).map(|j| if self.is_art(j) { 1.0 } else { 0.0 }).collect();
            self.set_costs(cost);
            self.run_primal(true)?;
            self.recompute_basic_values();
            let infeasibility: f64 = (0..self.ncols).filter(|&j| self.is_art(j)).map(|j| self.x[j]).sum();
            if infeasibility > self.tol.feasibility * (1.0 + self.m as f64) {
                return Ok(false);
            }
            self.drive_out_artificials();
            for j in 0..self.ncols {
                if self.is_art(j) {
                    self.hi[j] = 0.0;
                    self.at_upper[j] = false;
                    if !self.is_basic[j] {
                        self.x[j] = 0.0;
                    }
                }
            }
            self.recompute_basic_values();
        }
        let mut cost = vec![0.0; self.ncols];
        cost[..self.n].copy_from_slice(objective);
        self.set_costs(cost);
        self.run_primal(false)?;
        self.recompute_basic_values();
        Ok(true)
    }

    /// Appends rows with their slacks basic, expressed in the current basis.
    fn append_rows(&mut self, rows: &[(Constraint, f64)]) {
        let (old_m, old_cols) = (self.m, self.ncols);
        let new_m = old_m + rows.len();
        let new_cols = old_cols + rows.len();
        let new_stride = new_cols + 1;
        let mut t = vec![0.0; new_m * new_stride];
        for r in 0..old_m {
            let src = &self.t[r * self.stride..(r + 1) * self.stride];
            let dst = &mut t[r * new_stride..(r + 1) * new_stride];
            dst[..old_cols].copy_from_slice(&src[..old_cols]);
            dst[new_cols] = src[old_cols];
        }
        let mut row_of = vec![usize::MAX; old_cols];
        for (r, &b) in self.basic.iter().enumerate() {
            row_of[b] = r;
        }
        for (k, (c, rhs)) in rows.iter().enumerate() {
            let r = old_m + k;
            let slack_col = old_cols + k;
            let mut row = vec![0.0; new_stride];
            for &(j, v) in &c.coeffs {
                row[j] += v;
            }
            row[new_cols] = *rhs;
            // eliminate basic columns
            for &(j, v) in &c.coeffs {
                if self.is_basic[j] && v != 0.0 {
                    let br = &t[row_of[j] * new_stride..(row_of[j] + 1) * new_stride];
                    for (dst, &src) in row.iter_mut().zip(br) {
                        *dst -= v * src;
                    }
                }
            }
            row[slack_col] = 1.0;
            t[r * new_stride..(r + 1) * new_stride].copy_from_slice(&row);

            let (slo, shi) = slack_bounds(c, *rhs, &self.lo[..self.n], &self.hi[..self.n]);
            let ax: f64 = c.coeffs.iter().map(|&(j, v)| v * self.x[j]).sum();
            self.kind.push(Column::Slack(r));
            self.lo.push(slo);
            self.hi.push(shi);
            self.x.push(rhs - ax);
            self.at_upper.push(false);
            self.is_basic.push(true);
            self.basic.push(slack_col);
            self.cost.push(0.0);
            self.d.push(0.0);
        }
        self.t = t;
        self.m = new_m;
        self.ncols = new_cols;
        self.stride = new_stride;
        self.limit += 50 * 2 * rows.len();
    }

    fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.iter().map(|&j| self.kind[j]).collect(),
            at_upper: (0..self.ncols)
                .filter(|&j| !self.is_basic[j] && self.at_upper[j] && self.hi[j] > self.lo[j])
                .map(|j| self.kind[j])
                .collect(),
        }
    }

    fn solution(&self, feasible: bool) -> FloatSolution {
        FloatSolution {
            basis: feasible.then(|| self.basis()),
            values: if feasible { self.x[..self.n].to_vec() } else { Vec::new() },
            pivots: self.pivots,
        }
    }
}

/// Runs the float phase once with the given tolerances.
pub fn solve_float(p: &LpProblem, tol: &Tolerances) -> Result<FloatSolution, LpError> {
    let mut tab = Tableau::new(p, *tol);
    let feasible = tab.optimize(&p.objective)?;
    Ok(tab.solution(feasible))
}

/// Float simplex state that accepts additional rows and re-optimizes from
/// the previous basis with the dual simplex.
#[derive(Clone)]
pub struct IncrementalSimplex {
    problem: LpProblem,
    tab: Tableau,
    feasible: bool,
}

impl IncrementalSimplex {
    pub fn new(problem: LpProblem, tol: Tolerances) -> Result<Self, LpError> {
        problem.validate()?;
        let mut tab = Tableau::new(&problem, tol);
        let feasible = tab.optimize(&problem.objective)?;
        Ok(IncrementalSimplex { problem, tab, feasible })
    }

    /// The accumulated (unperturbed) problem.
    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn solution(&self) -> FloatSolution {
        self.tab.solution(self.feasible)
    }

    /// Replaces the objective and re-optimizes from the current basis.
    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<(), LpError> {
        if objective.len() != self.problem.num_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} entries for {} variables",
                objective.len(),
                self.problem.num_vars
            )));
        }
        self.problem.objective = objective;
        if !self.feasible {
            return Ok(());
        }
        let mut cost = vec![0.0; self.tab.ncols];
        cost[..self.tab.n].copy_from_slice(&self.problem.objective);
        self.tab.set_costs(cost);
        self.tab.run_primal(false)?;
        self.tab.recompute_basic_values();
        Ok(())
    }

    /// Adds `rows` and restores optimality. Once infeasible, stays infeasible.
    pub fn add_rows(&mut self, rows: Vec<Constraint>) -> Result<(), LpError> {
        let scale = self.tab.tol.perturbation;
        let base = 2 * self.problem.num_vars + self.problem.constraints.len();
        let with_rhs: Vec<(Constraint, f64)> = rows
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let rhs = if scale > 0.0 { perturb_rhs(c, scale, base + k) } else { c.rhs };
                (c.clone(), rhs)
            })
            .collect();
        self.problem.constraints.extend(rows);
        self.problem.validate()?;
        if !self.feasible {
            return Ok(());
        }
        self.tab.append_rows(&with_rhs);
        self.feasible = self.tab.run_dual()?;
        if !self.feasible {
            // confirm from scratch rather than trust a warm-started verdict
            let mut cold = Tableau::new(&self.problem, self.tab.tol);
            self.feasible = cold.optimize(&self.problem.objective)?;
            self.tab = cold;
            return Ok(());
        }
        if self.feasible {
            // clean up any dual infeasibility left by tolerances
            self.tab.run_primal(false)?;
            self.tab.recompute_basic_values();
        }
        Ok(())
    }
}
