//! Bounded-variable revised simplex.
//!
//! Every row `a·x (rel) b` becomes `a·x − s = 0` with a logical column `s`
//! whose bounds encode the relation, so all variables are boxed (possibly
//! with infinite sides) and the all-logical basis is always available. The
//! primal method (composite phase 1, then phase 2) handles cold starts that
//! are not dual feasible; the dual method reoptimizes after bound changes,
//! which is what branch-and-bound needs. Basis inverses are kept as a sparse
//! LU factorization plus a product-form eta file, refactorized periodically.

use crate::error::SolverError;
use crate::model::{MilpModel, Relation};

use super::lu::{ColumnRef, LuFactors};

const REFACTOR_EVERY: usize = 100;
const STALL_WINDOW: u64 = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Tolerances {
    pub primal: f64,
    pub dual: f64,
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { primal: 1e-7, dual: 1e-9, pivot: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Saved basis for warm starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct WarmStart {
    basis: Vec<u32>,
    states: Vec<VarState>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Simplex {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tol: Tolerances,

    state: Vec<VarState>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    pub iterations: u64,
    iteration_budget: u64,
    iteration_limit: u64,

    // scratch
    col_buf: Vec<f64>,
    row_buf: Vec<f64>,
    alpha_row: Vec<f64>,
    alpha_touched: Vec<usize>,
    alpha_mark: Vec<bool>,
    slack_rows: Vec<usize>,
    slack_vals: Vec<f64>,
}

impl Simplex {
    pub fn new(model: &MilpModel, tol: Tolerances) -> Result<Self, SolverError> {
        model.validate().map_err(|e| SolverError::Model(e.to_string()))?;
        let n = model.num_vars();
        let m = model.num_rows();
        let nt = n + m;

        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        row_start.push(0);
        for (i, c) in model.constraints.iter().enumerate() {
            // merge duplicate column references within a row
            let mut entries: Vec<(usize, f64)> = c.coeffs.clone();
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (j, a) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            for (j, a) in merged {
                if a != 0.0 {
                    row_col.push(j);
                    row_val.push(a);
                    per_col[j].push((i, a));
                }
            }
            row_start.push(row_col.len());
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for entries in &per_col {
            for &(i, a) in entries {
                col_row.push(i);
                col_val.push(a);
            }
            col_start.push(col_row.len());
        }

        let mut cost = model.objective.clone();
        cost.resize(nt, 0.0);
        let mut lower = Vec::with_capacity(nt);
        let mut upper = Vec::with_capacity(nt);
        for v in &model.variables {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for c in &model.constraints {
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }

        let mut s = Simplex {
            n,
            m,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            cost,
            lower,
            upper,
            tol,
            state: vec![VarState::AtLower; nt],
            basis: (n..nt).collect(),
            pos_of: vec![usize::MAX; nt],
            x: vec![0.0; nt],
            d: vec![0.0; nt],
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            iteration_budget: 200_000 + 50 * nt as u64,
            iteration_limit: 0,
            col_buf: vec![0.0; m],
            row_buf: vec![0.0; m],
            alpha_row: vec![0.0; nt],
            alpha_touched: Vec::new(),
            alpha_mark: vec![false; nt],
            slack_rows: (0..m).collect(),
            slack_vals: vec![-1.0; m],
        };
        for (p, &j) in s.basis.iter().enumerate() {
            s.pos_of[j] = p;
            s.state[j] = VarState::Basic;
        }
        for j in 0..n {
            s.state[j] = s.cold_state(j);
        }
        Ok(s)
    }

    /// Nonbasic position favoured by the cost sign, for a dual feasible start.
    fn cold_state(&self, j: usize) -> VarState {
        let (lo, hi, c) = (self.lower[j], self.upper[j], self.cost[j]);
        if c > 0.0 || (c == 0.0 && lo.is_finite()) {
            if lo.is_finite() {
                VarState::AtLower
            } else if hi.is_finite() {
                VarState::AtUpper
            } else {
                VarState::Free
            }
        } else if hi.is_finite() {
            VarState::AtUpper
        } else if lo.is_finite() {
            VarState::AtLower
        } else {
            VarState::Free
        }
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Reduced cost of structural column `j` and the bound it rests at
    /// (`Some(false)` lower, `Some(true)` upper, `None` when basic or free).
    pub fn reduced_cost(&self, j: usize) -> (f64, Option<bool>) {
        let side = match self.state[j] {
            VarState::AtLower => Some(false),
            VarState::AtUpper => Some(true),
            VarState::Basic | VarState::Free => None,
        };
        (self.d[j], side)
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }

    pub fn warm_start(&self) -> WarmStart {
        WarmStart { basis: self.basis.iter().map(|&j| j as u32).collect(), states: self.state.clone() }
    }

    pub fn load(&mut self, ws: &WarmStart) {
        if self.lu.is_some() && ws.basis.iter().zip(&self.basis).all(|(&a, &b)| a as usize == b) && ws.states == self.state {
            // same basis as the current factorization
            return;
        }
        self.basis = ws.basis.iter().map(|&j| j as usize).collect();
        self.state.clone_from(&ws.states);
        self.pos_of.iter_mut().for_each(|p| *p = usize::MAX);
        for (p, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = p;
        }
        self.lu = None;
        self.etas.clear();
    }

    /// Returns to the all-logical basis with cost-favoured nonbasic bounds.
    pub fn reset(&mut self) {
        let (n, nt) = (self.n, self.n + self.m);
        self.basis = (n..nt).collect();
        self.pos_of.iter_mut().for_each(|p| *p = usize::MAX);
        for (p, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = p;
            self.state[j] = VarState::Basic;
        }
        for j in 0..n {
            self.state[j] = self.cold_state(j);
        }
        self.lu = None;
        self.etas.clear();
    }

    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            let (a, b) = (self.col_start[j], self.col_start[j + 1]);
            ColumnRef { rows: &self.col_row[a..b], vals: &self.col_val[a..b] }
        } else {
            let i = j - self.n;
            ColumnRef { rows: &self.slack_rows[i..i + 1], vals: &self.slack_vals[i..i + 1] }
        }
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        for _attempt in 0..3 {
            let cols: Vec<ColumnRef> = self.basis.iter().map(|&j| self.column(j)).collect();
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.etas.clear();
                    return Ok(());
                }
                Err(sing) => {
                    // swap the offending columns for logicals of the uncovered rows
                    for (&p, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[p];
                        let slack = self.n + row;
                        debug_assert_ne!(self.state[slack], VarState::Basic);
                        self.pos_of[out] = usize::MAX;
                        self.state[out] = self.nonbasic_state_near(out);
                        self.basis[p] = slack;
                        self.pos_of[slack] = p;
                        self.state[slack] = VarState::Basic;
                    }
                }
            }
        }
        Err(SolverError::Numerical("basis remains singular after repair".into()))
    }

    fn nonbasic_state_near(&self, j: usize) -> VarState {
        let (lo, hi, v) = (self.lower[j], self.upper[j], self.x[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if (v - lo).abs() <= (hi - v).abs() {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                }
            }
            (true, false) => VarState::AtLower,
            (false, true) => VarState::AtUpper,
            (false, false) => VarState::Free,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Free => 0.0,
            VarState::Basic => self.x[j],
        }
    }

    /// Makes nonbasic states consistent with the current bounds.
    fn normalize_states(&mut self) {
        for j in 0..self.n + self.m {
            let st = self.state[j];
            let fixed_ok = match st {
                VarState::Basic => true,
                VarState::AtLower => self.lower[j].is_finite(),
                VarState::AtUpper => self.upper[j].is_finite(),
                VarState::Free => !self.lower[j].is_finite() && !self.upper[j].is_finite(),
            };
            if !fixed_ok {
                self.state[j] = self.nonbasic_state_near(j);
            }
        }
    }

    fn ftran(&mut self, v: &mut [f64]) {
        self.lu.as_mut().expect("factorized").ftran(v);
        for eta in &self.etas {
            let t = v[eta.pos] / eta.pivot;
            v[eta.pos] = t;
            if t != 0.0 {
                for &(i, a) in &eta.entries {
                    v[i] -= a * t;
                }
            }
        }
    }

    fn btran(&mut self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for &(i, a) in &eta.entries {
                acc -= a * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        self.lu.as_mut().expect("factorized").btran(c);
    }

    /// Recomputes basic values from the nonbasic ones.
    fn compute_primal(&mut self) {
        let mut rhs = std::mem::take(&mut self.col_buf);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for p in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.col_row[p]] -= self.col_val[p] * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        self.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
        self.col_buf = rhs;
    }

    /// Reduced costs for the cost vector `c` (basic entries become zero).
    fn compute_duals_for(&mut self, c: &[f64]) {
        let mut y = std::mem::take(&mut self.row_buf);
        for (p, &j) in self.basis.iter().enumerate() {
            y[p] = c[j];
        }
        self.btran(&mut y);
        for j in 0..self.n {
            if self.state[j] == VarState::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = c[j];
            for p in self.col_start[j]..self.col_start[j + 1] {
                dj -= y[self.col_row[p]] * self.col_val[p];
            }
            self.d[j] = dj;
        }
        for i in 0..self.m {
            let j = self.n + i;
            self.d[j] = if self.state[j] == VarState::Basic { 0.0 } else { c[j] + y[i] };
        }
        self.row_buf = y;
    }

    fn compute_duals(&mut self) {
        let c = std::mem::take(&mut self.cost);
        self.compute_duals_for(&c);
        self.cost = c;
    }

    /// Row `r` of `B⁻¹[A −I]` over nonbasic columns, into `alpha_row`.
    fn compute_alpha_row(&mut self, r: usize) {
        for &j in &self.alpha_touched {
            self.alpha_row[j] = 0.0;
            self.alpha_mark[j] = false;
        }
        self.alpha_touched.clear();
        let mut rho = std::mem::take(&mut self.row_buf);
        rho.iter_mut().for_each(|v| *v = 0.0);
        rho[r] = 1.0;
        self.btran(&mut rho);
        for (i, &ri) in rho.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for p in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_col[p];
                if self.state[j] == VarState::Basic {
                    continue;
                }
                if !self.alpha_mark[j] {
                    self.alpha_mark[j] = true;
                    self.alpha_touched.push(j);
                }
                self.alpha_row[j] += ri * self.row_val[p];
            }
            let js = self.n + i;
            if self.state[js] != VarState::Basic {
                if !self.alpha_mark[js] {
                    self.alpha_mark[js] = true;
                    self.alpha_touched.push(js);
                }
                self.alpha_row[js] -= ri;
            }
        }
        self.row_buf = rho;
    }

    fn ftran_column(&mut self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        if j < self.n {
            for p in self.col_start[j]..self.col_start[j + 1] {
                v[self.col_row[p]] = self.col_val[p];
            }
        } else {
            v[j - self.n] = -1.0;
        }
        self.ftran(&mut v);
        v
    }

    /// Replaces the basic variable at `pos` with `enter`.
    fn pivot(&mut self, enter: usize, pos: usize, alpha: &[f64], leave_state: VarState) {
        let leave = self.basis[pos];
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { pos, pivot: alpha[pos], entries });
        self.basis[pos] = enter;
        self.pos_of[enter] = pos;
        self.pos_of[leave] = usize::MAX;
        self.state[enter] = VarState::Basic;
        self.state[leave] = leave_state;
        self.iterations += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - self.tol.primal {
            self.lower[j] - v
        } else if v > self.upper[j] + self.tol.primal {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn is_dual_feasible(&self) -> bool {
        let tol = self.tol.dual.max(1e-7);
        (0..self.n + self.m).all(|j| {
            if self.lower[j] == self.upper[j] {
                return true;
            }
            match self.state[j] {
                VarState::Basic => true,
                VarState::AtLower => self.d[j] >= -tol,
                VarState::AtUpper => self.d[j] <= tol,
                VarState::Free => self.d[j].abs() <= tol,
            }
        })
    }

    fn prepare(&mut self) -> Result<(), SolverError> {
        self.normalize_states();
        if self.lu.is_none() {
            self.refactor()?;
        }
        self.compute_primal();
        self.compute_duals();
        Ok(())
    }

    /// Optimizes from the current basis.
    pub fn solve(&mut self) -> Result<LpStatus, SolverError> {
        self.iteration_limit = self.iterations + self.iteration_budget;
        self.prepare()?;
        // the dual pass gives up when it loses dual feasibility
        if self.is_dual_feasible() {
            if let Some(status) = self.dual()? {
                return Ok(status);
            }
        }
        self.primal()
    }

    // ---------------------------------------------------------------- dual

    /// Dual simplex. `None` when dual feasibility is lost numerically.
    fn dual(&mut self) -> Result<Option<LpStatus>, SolverError> {
        let mut bland = false;
        let mut best_obj = f64::NEG_INFINITY;
        let mut since_improve = 0u64;
        loop {
            if self.iterations > self.iteration_limit {
                return Err(SolverError::Numerical("simplex iteration limit reached".into()));
            }
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactor()?;
                self.compute_primal();
                self.compute_duals();
                if !self.is_dual_feasible() {
                    return Ok(None);
                }
            }

            // leaving row
            let mut leave: Option<(usize, f64)> = None;
            for (p, &j) in self.basis.iter().enumerate() {
                let inf = self.infeasibility(j);
                if inf <= 0.0 {
                    continue;
                }
                leave = match leave {
                    None => Some((p, inf)),
                    Some((bp, binf)) => {
                        let better = if bland { j < self.basis[bp] } else { inf > binf };
                        if better { Some((p, inf)) } else { Some((bp, binf)) }
                    }
                };
            }
            let Some((r, _)) = leave else {
                if !self.etas.is_empty() {
                    // confirm on a fresh factorization
                    self.refactor()?;
                    self.compute_primal();
                    self.compute_duals();
                    if !self.is_dual_feasible() {
                        return Ok(None);
                    }
                    if self.basis.iter().any(|&j| self.infeasibility(j) > 0.0) {
                        continue;
                    }
                }
                return Ok(Some(LpStatus::Optimal));
            };
            let leaving = self.basis[r];
            let below = self.x[leaving] < self.lower[leaving];
            let target = if below { self.lower[leaving] } else { self.upper[leaving] };

            self.compute_alpha_row(r);
            // Harris two-pass ratio test over eligible nonbasic columns
            let tol_d = self.tol.dual;
            let mut theta_max = f64::INFINITY;
            let eligible = |s: &Self, j: usize| -> Option<f64> {
                if s.lower[j] == s.upper[j] {
                    return None;
                }
                let a = s.alpha_row[j];
                if a.abs() <= s.tol.pivot {
                    return None;
                }
                // x_r moves by -a per unit increase of x_j
                let dir_up = match s.state[j] {
                    VarState::AtLower => true,
                    VarState::AtUpper => false,
                    VarState::Free => (a < 0.0) == below,
                    VarState::Basic => return None,
                };
                let moves_r_up = if dir_up { a < 0.0 } else { a > 0.0 };
                (moves_r_up == below).then_some(a)
            };
            for &j in &self.alpha_touched {
                if let Some(a) = eligible(self, j) {
                    let dj = self.d[j].abs();
                    theta_max = theta_max.min((dj + tol_d) / a.abs());
                }
            }
            if theta_max == f64::INFINITY {
                return Ok(Some(LpStatus::Infeasible));
            }
            let mut enter: Option<usize> = None;
            for &j in &self.alpha_touched {
                let Some(a) = eligible(self, j) else { continue };
                if self.d[j].abs() / a.abs() > theta_max {
                    continue;
                }
                enter = match enter {
                    None => Some(j),
                    Some(e) => {
                        let better = if bland { j < e } else { a.abs() > self.alpha_row[e].abs() || (a.abs() == self.alpha_row[e].abs() && j < e) };
                        if better { Some(j) } else { Some(e) }
                    }
                };
            }
            let q = enter.expect("theta_max finite implies a candidate");
            let alpha_rq = self.alpha_row[q];
            let alpha_col = self.ftran_column(q);
            if (alpha_col[r] - alpha_rq).abs() > 1e-7 * (1.0 + alpha_rq.abs()) {
                // factors drifted; rebuild and retry this iteration
                if self.etas.is_empty() {
                    return Err(SolverError::Numerical("inconsistent pivot after refactorization".into()));
                }
                self.refactor()?;
                self.compute_primal();
                self.compute_duals();
                if !self.is_dual_feasible() {
                    return Ok(None);
                }
                continue;
            }

            // dual update; keep the entering reduced cost sign-consistent
            let theta_d = self.d[q] / alpha_rq;
            for &j in &self.alpha_touched {
                self.d[j] -= theta_d * self.alpha_row[j];
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            // primal update
            let delta = (self.x[leaving] - target) / alpha_rq;
            self.x[q] += delta;
            for (p, &j) in self.basis.iter().enumerate() {
                if alpha_col[p] != 0.0 {
                    self.x[j] -= delta * alpha_col[p];
                }
            }
            self.x[leaving] = target;
            let leave_state = if below { VarState::AtLower } else { VarState::AtUpper };
            self.pivot(q, r, &alpha_col, leave_state);

            let obj = self.objective();
            if obj > best_obj + 1e-12 * (1.0 + obj.abs()) {
                best_obj = obj;
                since_improve = 0;
            } else {
                since_improve += 1;
                if since_improve > STALL_WINDOW {
                    bland = true;
                }
            }
        }
    }

    // -------------------------------------------------------------- primal

    fn primal(&mut self) -> Result<LpStatus, SolverError> {
        let mut phase_one = true;
        let mut bland = false;
        let mut best = f64::INFINITY;
        let mut since_improve = 0u64;
        let nt = self.n + self.m;
        let mut cost = vec![0.0; nt];
        loop {
            if self.iterations > self.iteration_limit {
                return Err(SolverError::Numerical("simplex iteration limit reached".into()));
            }
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactor()?;
                self.compute_primal();
            }
            let total_inf: f64 = self.basis.iter().map(|&j| self.infeasibility(j)).sum();
            if phase_one && total_inf == 0.0 {
                phase_one = false;
                bland = false;
                best = f64::INFINITY;
                since_improve = 0;
            } else if !phase_one && total_inf > 0.0 {
                phase_one = true;
                best = f64::INFINITY;
            }

            if phase_one {
                cost.iter_mut().for_each(|c| *c = 0.0);
                for &j in &self.basis {
                    if self.x[j] < self.lower[j] - self.tol.primal {
                        cost[j] = -1.0;
                    } else if self.x[j] > self.upper[j] + self.tol.primal {
                        cost[j] = 1.0;
                    }
                }
                self.compute_duals_for(&cost);
            } else {
                self.compute_duals();
            }

            // entering variable
            let tol_d = if phase_one { 1e-9 } else { self.tol.dual };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..nt {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let dj = self.d[j];
                let ok = match self.state[j] {
                    VarState::Basic => false,
                    VarState::AtLower => dj < -tol_d,
                    VarState::AtUpper => dj > tol_d,
                    VarState::Free => dj.abs() > tol_d,
                };
                if !ok {
                    continue;
                }
                enter = match enter {
                    None => Some((j, dj.abs())),
                    Some((e, de)) => {
                        let better = if bland { false } else { dj.abs() > de };
                        if better { Some((j, dj.abs())) } else { Some((e, de)) }
                    }
                };
            }
            let Some((q, _)) = enter else {
                if !self.etas.is_empty() {
                    self.refactor()?;
                    self.compute_primal();
                    continue;
                }
                if phase_one {
                    return Ok(LpStatus::Infeasible);
                }
                self.compute_duals();
                return Ok(LpStatus::Optimal);
            };

            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran_column(q);
            // basic j changes at rate -dir * alpha[p]
            let mut step = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, VarState, f64)> = None;
            for (p, &j) in self.basis.iter().enumerate() {
                let a = alpha[p];
                if a.abs() <= self.tol.pivot {
                    continue;
                }
                let rate = -dir * a;
                let v = self.x[j];
                let (lo, hi) = (self.lower[j], self.upper[j]);
                let (limit, st) = if rate < 0.0 {
                    if v > hi + self.tol.primal {
                        (hi, VarState::AtUpper)
                    } else if v < lo - self.tol.primal {
                        continue;
                    } else {
                        (lo, VarState::AtLower)
                    }
                } else if v < lo - self.tol.primal {
                    (lo, VarState::AtLower)
                } else if v > hi + self.tol.primal {
                    continue;
                } else {
                    (hi, VarState::AtUpper)
                };
                if !limit.is_finite() {
                    continue;
                }
                let t = ((limit - v) / rate).max(0.0);
                let better = match leave {
                    None => t < step,
                    Some((bp, _, _)) => {
                        if bland {
                            t < step || (t == step && j < self.basis[bp])
                        } else {
                            t < step || (t == step && a.abs() > alpha[bp].abs())
                        }
                    }
                };
                if better {
                    step = t;
                    leave = Some((p, st, limit));
                }
            }
            if step == f64::INFINITY {
                if phase_one {
                    return Err(SolverError::Numerical("unbounded phase-one ray".into()));
                }
                return Ok(LpStatus::Unbounded);
            }

            let delta = dir * step;
            for (p, &j) in self.basis.iter().enumerate() {
                if alpha[p] != 0.0 {
                    self.x[j] -= delta * alpha[p];
                }
            }
            self.x[q] += delta;
            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = self.nonbasic_value(q);
                    self.iterations += 1;
                }
                Some((p, st, limit)) => {
                    let out = self.basis[p];
                    self.x[out] = limit;
                    self.pivot(q, p, &alpha, st);
                }
            }

            let obj = if phase_one { total_inf } else { self.objective() };
            if obj < best - 1e-12 * (1.0 + obj.abs()) {
                best = obj;
                since_improve = 0;
            } else {
                since_improve += 1;
                if since_improve > STALL_WINDOW {
                    bland = true;
                }
            }
        }
    }
}
