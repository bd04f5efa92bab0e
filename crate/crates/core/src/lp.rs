//! A small bounded revised simplex for the master LP.
//!
//! The model is `min c'x` subject to rows `a_k x {>=,<=,=} b_k` and bounds
//! `lb <= x <= ub`. Every row k gets a slack `s_k` with coefficient +1 so that
//! `a_k x + s_k = b_k`; the row sense is encoded in the slack bounds
//! (`>=` gives `s <= 0`, `<=` gives `s >= 0`, `=` gives `s = 0`).
//!
//! The basis inverse is kept as a dense matrix and updated by elementary row
//! operations after each pivot; it is rebuilt from scratch periodically.
//! Phase 1 is a composite one: whenever basic variables violate their
//! bounds, the objective temporarily becomes the sum of infeasibilities.
//! Rows and columns may be added and bounds changed between solves; the last
//! basis is reused (warm start).

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("singular basis")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
}

const PRIMAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_BEFORE_BLAND: usize = 50;
const DEGENERATE_STEP: f64 = 1e-9;
/// Relative right-hand-side perturbation of the first simplex pass.
const PERTURBATION: f64 = 1e-6;
/// Devex weights restart from one once any grows beyond this.
const DEVEX_RESET: f64 = 1e6;

/// Deterministic pseudo-random value in `[0, 1)` for row `k`.
fn spread(k: usize) -> f64 {
    let h = (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    (h >> 40) as f64 / (1u64 << 24) as f64
}

/// One variable: a structural column or a row slack (a unit column).
#[derive(Debug, Clone)]
struct Var {
    entries: Vec<(u32, f64)>,
    cost: f64,
    lb: f64,
    ub: f64,
    state: State,
    x: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Lp {
    rhs: Vec<f64>,
    vars: Vec<Var>,
    /// Variable id of each structural column, in column order.
    col_var: Vec<usize>,
    /// Variable id of each row's slack.
    slack_var: Vec<usize>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    /// Dense basis inverse, row-major `m x m`.
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    /// Basic values need recomputing after nonbasic values moved.
    stale: bool,
    objective: f64,
    duals: Vec<f64>,
    /// Total simplex pivots performed over the lifetime of this LP.
    pub iterations: usize,
}

impl Lp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.col_var.len()
    }

    /// Adds a row `sum coef * x_col (sense) rhs`. `entries` lists the
    /// coefficients of already existing columns. The new slack enters the
    /// basis, so the previous basis stays valid.
    pub fn add_row(&mut self, sense: RowSense, rhs: f64, entries: &[(usize, f64)]) -> usize {
        let k = self.rhs.len();
        self.rhs.push(rhs);
        for &(c, a) in entries {
            if a != 0.0 {
                let v = self.col_var[c];
                self.vars[v].entries.push((k as u32, a));
            }
        }
        let (lb, ub) = match sense {
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Eq => (0.0, 0.0),
        };
        let v = self.vars.len();
        self.vars.push(Var {
            entries: vec![(k as u32, 1.0)],
            cost: 0.0,
            lb,
            ub,
            state: State::Basic,
            x: 0.0,
        });
        self.slack_var.push(v);

        // Extend the inverse: B' = [[B, 0], [r_B, 1]] so
        // B'^-1 = [[B^-1, 0], [-r_B B^-1, 1]].
        let m = k;
        let row_b: Vec<f64> = self.basis.iter().map(|&bv| self.coef(bv, k)).collect();
        let mut binv = vec![0.0; (m + 1) * (m + 1)];
        for i in 0..m {
            binv[i * (m + 1)..i * (m + 1) + m].copy_from_slice(&self.binv[i * m..i * m + m]);
        }
        for j in 0..m {
            let mut s = 0.0;
            for (i, &r) in row_b.iter().enumerate() {
                if r != 0.0 {
                    s += r * self.binv[i * m + j];
                }
            }
            binv[m * (m + 1) + j] = -s;
        }
        binv[m * (m + 1) + m] = 1.0;
        self.binv = binv;
        self.basis.push(v);
        self.compute_basic_values();
        k
    }

    /// Adds a column. It starts nonbasic at its lower bound (or its upper
    /// bound when the lower one is infinite).
    pub fn add_col(&mut self, cost: f64, lb: f64, ub: f64, entries: &[(usize, f64)]) -> usize {
        assert!(
            lb.is_finite() || ub.is_finite(),
            "free columns are not supported"
        );
        let mut e: Vec<(u32, f64)> = entries
            .iter()
            .filter(|&&(_, a)| a != 0.0)
            .map(|&(r, a)| (r as u32, a))
            .collect();
        e.sort_by_key(|&(r, _)| r);
        let (state, x) = if lb.is_finite() {
            (State::AtLower, lb)
        } else {
            (State::AtUpper, ub)
        };
        let v = self.vars.len();
        self.vars.push(Var {
            entries: e,
            cost,
            lb,
            ub,
            state,
            x,
        });
        self.col_var.push(v);
        if x != 0.0 {
            self.stale = true;
        }
        self.col_var.len() - 1
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        let v = &self.vars[self.col_var[col]];
        (v.lb, v.ub)
    }

    /// Changes the bounds of a column; the next [`solve`](Self::solve)
    /// restores feasibility from the current basis.
    pub fn set_bounds(&mut self, col: usize, lb: f64, ub: f64) {
        let id = self.col_var[col];
        let v = &mut self.vars[id];
        v.lb = lb;
        v.ub = ub;
        if v.state != State::Basic {
            let (state, x) = if v.state == State::AtUpper && ub.is_finite() || !lb.is_finite() {
                (State::AtUpper, ub)
            } else {
                (State::AtLower, lb)
            };
            v.state = state;
            if v.x != x {
                v.x = x;
                self.stale = true;
            }
        }
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Primal value of a column.
    pub fn value(&self, col: usize) -> f64 {
        self.vars[self.col_var[col]].x
    }

    pub fn values(&self) -> Vec<f64> {
        self.col_var.iter().map(|&v| self.vars[v].x).collect()
    }

    /// Row duals `y = c_B B^-1`. For a minimization, `>=` rows have `y >= 0`
    /// and `<=` rows have `y <= 0` at optimality.
    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    /// Reduced cost `c_j - y a_j` of a column under the current duals.
    pub fn reduced_cost(&self, col: usize) -> f64 {
        let v = &self.vars[self.col_var[col]];
        v.cost
            - v.entries
                .iter()
                .map(|&(r, a)| self.duals[r as usize] * a)
                .sum::<f64>()
    }

    fn coef(&self, var: usize, row: usize) -> f64 {
        self.vars[var]
            .entries
            .iter()
            .find(|&&(r, _)| r as usize == row)
            .map_or(0.0, |&(_, a)| a)
    }

    /// `x_B = B^-1 (b - N x_N)`.
    fn compute_basic_values(&mut self) {
        self.stale = false;
        let m = self.m();
        let mut r = self.rhs.clone();
        for v in &self.vars {
            if v.state != State::Basic && v.x != 0.0 {
                for &(k, a) in &v.entries {
                    r[k as usize] -= a * v.x;
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..i * m + m];
            let val: f64 = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            let bv = self.basis[i];
            self.vars[bv].x = val;
        }
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let mut a = vec![0.0; m * m];
        for (i, &bv) in self.basis.iter().enumerate() {
            for &(k, c) in &self.vars[bv].entries {
                a[k as usize * m + i] = c;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let p = (col..m)
                .max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))
                .unwrap();
            if a[p * m + col].abs() < 1e-12 {
                return Err(LpError::Singular);
            }
            if p != col {
                for j in 0..m {
                    a.swap(p * m + j, col * m + j);
                    inv.swap(p * m + j, col * m + j);
                }
            }
            let d = a[col * m + col];
            for j in 0..m {
                a[col * m + j] /= d;
                inv[col * m + j] /= d;
            }
            for i in 0..m {
                let f = a[i * m + col];
                if i == col || f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    let ac = a[col * m + j];
                    if ac != 0.0 {
                        a[i * m + j] -= f * ac;
                    }
                    let ic = inv[col * m + j];
                    if ic != 0.0 {
                        inv[i * m + j] -= f * ic;
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.compute_basic_values();
        Ok(())
    }

    /// `B^-1 a_j` for variable `var`.
    fn ftran(&self, var: usize) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m];
        for &(k, a) in &self.vars[var].entries {
            let k = k as usize;
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.binv[i * m + k] * a;
            }
        }
        out
    }

    /// `c_B B^-1` for the given basic costs.
    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (i, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[i * m..i * m + m];
                for (yk, &b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    fn infeasibility(v: &Var) -> f64 {
        if v.x < v.lb - PRIMAL_TOL {
            -1.0
        } else if v.x > v.ub + PRIMAL_TOL {
            1.0
        } else {
            0.0
        }
    }

    /// Solves from the current basis. Returns the optimal objective.
    ///
    /// Covering LPs are highly degenerate, so the simplex first runs with
    /// every inequality right-hand side loosened by a tiny deterministic
    /// amount, then restores the exact data and cleans up from that basis.
    pub fn solve(&mut self) -> Result<f64, LpError> {
        let original = self.rhs.clone();
        for k in 0..self.rhs.len() {
            let s = &self.vars[self.slack_var[k]];
            if s.lb != s.ub {
                let b = self.rhs[k];
                self.rhs[k] = b + PERTURBATION * (1.0 + b.abs()) * (1.0 + spread(k));
            }
        }
        self.stale = true;
        let first = self.simplex();
        self.rhs = original;
        self.stale = true;
        match first {
            Ok(_) | Err(LpError::Infeasible) | Err(LpError::IterationLimit) => self.simplex(),
            Err(e) => Err(e),
        }
    }

    fn simplex(&mut self) -> Result<f64, LpError> {
        let m = self.m();
        if self.binv.len() != m * m {
            self.refactor()?;
        } else if self.stale {
            self.compute_basic_values();
        }
        let cost_scale = self
            .vars
            .iter()
            .map(|v| v.cost.abs())
            .fold(1.0f64, f64::max);
        let dual_tol = DUAL_TOL * cost_scale;
        let limit = self.iterations + 50_000 + 50 * (self.vars.len() + m);
        let mut degenerate = 0usize;
        let mut refactored_on_fail = false;
        // Devex reference weights, one per variable
        let mut weights = vec![1.0f64; self.vars.len()];
        loop {
            if self.iterations > limit {
                return Err(LpError::IterationLimit);
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let phase1_costs: Vec<f64> = self
                .basis
                .iter()
                .map(|&bv| Self::infeasibility(&self.vars[bv]))
                .collect();
            let phase1 = phase1_costs.iter().any(|&c| c != 0.0);
            let cb: Vec<f64> = if phase1 {
                phase1_costs
            } else {
                self.basis.iter().map(|&bv| self.vars[bv].cost).collect()
            };
            let y = self.btran(&cb);
            let tol = if phase1 { DUAL_TOL } else { dual_tol };

            // pricing
            let bland = degenerate >= DEGENERATE_BEFORE_BLAND;
            let mut entering: Option<(usize, f64)> = None;
            for (j, v) in self.vars.iter().enumerate() {
                if v.state == State::Basic || v.lb == v.ub {
                    continue;
                }
                let c = if phase1 { 0.0 } else { v.cost };
                let d = c - v
                    .entries
                    .iter()
                    .map(|&(k, a)| y[k as usize] * a)
                    .sum::<f64>();
                let gain = match v.state {
                    State::AtLower if d < -tol => -d,
                    State::AtUpper if d > tol => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, 0.0));
                    break;
                }
                let score = gain * gain / weights[j];
                if entering.map_or(true, |(_, best)| score > best) {
                    entering = Some((j, score));
                }
            }
            let entering = entering.map(|(j, _)| {
                let v = &self.vars[j];
                let c = if phase1 { 0.0 } else { v.cost };
                (
                    j,
                    c - v
                        .entries
                        .iter()
                        .map(|&(k, a)| y[k as usize] * a)
                        .sum::<f64>(),
                )
            });
            let Some((q, dq)) = entering else {
                if phase1 {
                    if !refactored_on_fail {
                        refactored_on_fail = true;
                        self.refactor()?;
                        continue;
                    }
                    return Err(LpError::Infeasible);
                }
                self.objective = self.vars.iter().map(|v| v.cost * v.x).sum();
                self.duals = y;
                return Ok(self.objective);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // ratio test (two-pass, prefers large pivots among near ties)
            let limit_of = |i: usize, relax: f64| -> Option<(f64, f64)> {
                let a = alpha[i];
                if a.abs() < PIVOT_TOL {
                    return None;
                }
                let v = &self.vars[self.basis[i]];
                let rate = -dir * a;
                if rate < 0.0 {
                    // decreasing: an infeasible-high variable stops at ub,
                    // a feasible one at lb, an infeasible-low one never
                    if v.x < v.lb - PRIMAL_TOL {
                        return None;
                    }
                    let bound = if v.x > v.ub + PRIMAL_TOL { v.ub } else { v.lb };
                    if !bound.is_finite() {
                        return None;
                    }
                    Some((((v.x - bound + relax) / -rate).max(0.0), bound))
                } else {
                    if v.x > v.ub + PRIMAL_TOL {
                        return None;
                    }
                    let bound = if v.x < v.lb - PRIMAL_TOL { v.lb } else { v.ub };
                    if !bound.is_finite() {
                        return None;
                    }
                    Some((((bound - v.x + relax) / rate).max(0.0), bound))
                }
            };
            // Bland needs the exact minimum ratio; ties within rounding noise
            let (relax, slack) = if bland {
                (0.0, 1e-12)
            } else {
                (PRIMAL_TOL, 0.0)
            };
            let mut t_max = f64::INFINITY;
            for i in 0..m {
                if let Some((t, _)) = limit_of(i, relax) {
                    t_max = t_max.min(t);
                }
            }
            t_max += slack;
            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..m {
                if let Some((t, bound)) = limit_of(i, 0.0) {
                    if t <= t_max {
                        let better = match leave {
                            None => true,
                            Some((l, _, _)) => {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    alpha[i].abs() > alpha[l].abs()
                                }
                            }
                        };
                        if better {
                            leave = Some((i, t, bound));
                        }
                    }
                }
            }
            let vq = &self.vars[q];
            let flip = vq.ub - vq.lb;
            let (t, pivot_row) = match leave {
                Some((i, t, b)) if t < flip => (t, Some((i, b))),
                _ if flip.is_finite() => (flip, None),
                Some((i, t, b)) => (t, Some((i, b))),
                None => {
                    if phase1 {
                        return Err(LpError::Singular);
                    }
                    return Err(LpError::Unbounded);
                }
            };
            // 0/1 covering values: a move this small changes nothing
            if t <= DEGENERATE_STEP {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.iterations += 1;

            // update values
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let bv = self.basis[i];
                    self.vars[bv].x -= dir * alpha[i] * t;
                }
            }
            self.vars[q].x += dir * t;

            match pivot_row {
                None => {
                    let v = &mut self.vars[q];
                    if dir > 0.0 {
                        v.state = State::AtUpper;
                        v.x = v.ub;
                    } else {
                        v.state = State::AtLower;
                        v.x = v.lb;
                    }
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    let ov = &mut self.vars[out];
                    ov.state = if bound == ov.ub && bound != ov.lb {
                        State::AtUpper
                    } else {
                        State::AtLower
                    };
                    ov.x = bound;
                    self.vars[q].state = State::Basic;
                    self.basis[r] = q;
                    let piv = alpha[r];
                    // Devex: weights of the nonbasic variables along the pivot row
                    let rho = &self.binv[r * m..r * m + m];
                    let wq = weights[q];
                    for (j, v) in self.vars.iter().enumerate() {
                        if v.state == State::Basic || j == out || v.lb == v.ub {
                            continue;
                        }
                        let arj: f64 = v.entries.iter().map(|&(k, a)| rho[k as usize] * a).sum();
                        if arj != 0.0 {
                            let ratio = arj / piv;
                            weights[j] = weights[j].max(ratio * ratio * wq);
                        }
                    }
                    weights[out] = (wq / (piv * piv)).max(1.0);
                    if weights.iter().any(|&w| w > DEVEX_RESET) {
                        weights.iter_mut().for_each(|w| *w = 1.0);
                    }
                    // B^-1 update
                    let mut pivot_row: Vec<(usize, f64)> = Vec::new();
                    for j in 0..m {
                        let b = &mut self.binv[r * m + j];
                        if *b != 0.0 {
                            *b /= piv;
                            pivot_row.push((j, *b));
                        }
                    }
                    for i in 0..m {
                        let f = alpha[i];
                        if i == r || f == 0.0 {
                            continue;
                        }
                        let row = &mut self.binv[i * m..i * m + m];
                        for &(j, b) in &pivot_row {
                            row[j] -= f * b;
                        }
                    }
                    self.pivots_since_refactor += 1;
                }
            }
        }
    }
}
