//! Best-first branch-and-bound with depth-first plunging.
//!
//! Each node stores the full list of bound changes from the root and the
//! parent's final basis; reoptimizing after a bound change is a dual simplex
//! run from that basis. The search dives into one child of every node it
//! branches on and parks the other in a heap ordered by (bound, id).
//!
//! Two structural devices keep trees small on block-structured models:
//!
//! * reduced-cost fixing: a nonbasic integer column whose reduced cost alone
//!   lifts the node above the cutoff is fixed for the whole subtree;
//! * decomposition: if fixing every integer column of higher priority than
//!   the branching class splits the remaining columns into independent
//!   blocks, the search first fixes those columns, then solves each block as
//!   its own MILP and turns the node into a leaf.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;
use std::time::Instant;

use crate::error::SolverError;
use crate::model::MilpModel;

use super::simplex::{LpStatus, Simplex, WarmStart};
use super::{Branching, SolveResult, SolveStats, SolveStatus, SolverConfig};

type Change = (usize, f64, f64);

struct Node {
    id: u64,
    bound: f64,
    changes: Vec<Change>,
    warm: Arc<WarmStart>,
    /// Branching that created the node: (column, up, distance moved, parent objective).
    origin: Option<(usize, bool, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed so that BinaryHeap pops the smallest bound, then lowest id
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

#[derive(Default, Clone, Copy)]
struct PseudoCost {
    down: f64,
    down_n: u32,
    up: f64,
    up_n: u32,
}

/// Independent blocks left once the `linking` columns are fixed.
struct Decomposition {
    linking: Vec<usize>,
    /// (columns, rows) per block, both ascending.
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

impl Decomposition {
    fn analyze(model: &MilpModel, linking: Vec<usize>) -> Option<Self> {
        let n = model.num_vars();
        let mut is_link = vec![false; n];
        for &j in &linking {
            is_link[j] = true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        for c in &model.constraints {
            let mut first = None;
            for &(j, a) in &c.coeffs {
                if is_link[j] || a == 0.0 {
                    continue;
                }
                match first {
                    None => first = Some(j),
                    Some(f) => {
                        let (ra, rb) = (find(&mut parent, f), find(&mut parent, j));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
        let mut blocks: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for j in (0..n).filter(|&j| !is_link[j]) {
            let root = find(&mut parent, j);
            blocks.entry(root).or_default().0.push(j);
        }
        if blocks.len() < 2 {
            return None;
        }
        for (i, c) in model.constraints.iter().enumerate() {
            if let Some(&(j, _)) = c.coeffs.iter().find(|&&(j, a)| !is_link[j] && a != 0.0) {
                let root = find(&mut parent, j);
                blocks.get_mut(&root).expect("block of a non-linking column").1.push(i);
            }
        }
        Some(Self { linking, blocks: blocks.into_values().collect() })
    }
}

pub(super) struct BranchAndBound<'a> {
    model: &'a MilpModel,
    config: &'a SolverConfig,
    lp: Simplex,
    root_bounds: Vec<(f64, f64)>,
    applied: Vec<usize>,
    integers: Vec<usize>,
    pseudo: Vec<PseudoCost>,
    pseudo_totals: PseudoCost,
    /// Decomposition available when branching within a priority class.
    decompositions: BTreeMap<i32, Decomposition>,
    /// Reduced-cost fixings found at the node being evaluated.
    fixings: Vec<Change>,
    incumbent: Option<(f64, Vec<f64>)>,
    /// Smallest bound of a subtree abandoned because a block solve hit a limit.
    abandoned: f64,
    /// Smallest lower bound of any subtree closed so far; with the open
    /// nodes it yields the proven global bound.
    closed: f64,
    next_id: u64,
    nodes: u64,
    extra_iterations: u64,
    start: Instant,
}

enum Outcome {
    Pruned,
    Leaf,
    Branch { col: usize, value: f64, obj: f64, plunge_up: bool, track: bool },
}

enum Selection {
    Integral,
    Fractional(usize, f64, i32),
}

impl<'a> BranchAndBound<'a> {
    pub fn new(model: &'a MilpModel, config: &'a SolverConfig) -> Result<Self, SolverError> {
        let lp = Simplex::new(model, config.tolerances())?;
        let root_bounds = (0..model.num_vars()).map(|j| lp.bounds(j)).collect();
        let mut integers: Vec<usize> = model.integer_vars().collect();
        integers.sort_unstable();

        let mut classes: Vec<i32> = integers.iter().map(|&j| model.variables[j].priority).collect();
        classes.sort_unstable();
        classes.dedup();
        let mut decompositions = BTreeMap::new();
        for &class in &classes {
            let linking: Vec<usize> = integers.iter().copied().filter(|&j| model.variables[j].priority > class).collect();
            if linking.is_empty() {
                continue;
            }
            if let Some(dec) = Decomposition::analyze(model, linking) {
                decompositions.insert(class, dec);
            }
        }

        Ok(Self {
            model,
            config,
            lp,
            root_bounds,
            applied: Vec::new(),
            pseudo: vec![PseudoCost::default(); model.num_vars()],
            pseudo_totals: PseudoCost::default(),
            integers,
            decompositions,
            fixings: Vec::new(),
            incumbent: None,
            abandoned: f64::INFINITY,
            closed: f64::INFINITY,
            next_id: 0,
            nodes: 0,
            extra_iterations: 0,
            start: Instant::now(),
        })
    }

    fn stats(&self) -> SolveStats {
        SolveStats { nodes: self.nodes, lp_iterations: self.lp.iterations + self.extra_iterations, wall_time: self.start.elapsed() }
    }

    fn limit_reached(&self) -> bool {
        self.config.node_limit.is_some_and(|n| self.nodes >= n) || self.config.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    /// Objective above which a node cannot improve the incumbent enough.
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.config.gap * obj.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn close(&mut self, bound: f64) {
        self.closed = self.closed.min(bound);
    }

    fn offer(&mut self, obj: f64, values: Vec<f64>) {
        if self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
            self.incumbent = Some((obj, values));
        }
    }

    fn apply(&mut self, changes: &[Change]) {
        for &j in &self.applied {
            let (lo, hi) = self.root_bounds[j];
            self.lp.set_bounds(j, lo, hi);
        }
        self.applied.clear();
        for &(j, lo, hi) in changes {
            self.lp.set_bounds(j, lo, hi);
            self.applied.push(j);
        }
    }

    fn solve_lp(&mut self) -> Result<LpStatus, SolverError> {
        match self.lp.solve() {
            Ok(s) => Ok(s),
            Err(SolverError::Numerical(_)) => {
                self.lp.reset();
                self.lp.solve()
            }
            Err(e) => Err(e),
        }
    }

    fn new_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id - 1
    }

    fn record_pseudo(&mut self, origin: Option<(usize, bool, f64, f64)>, obj: f64) {
        let Some((col, up, dist, parent)) = origin else { return };
        let gain = (obj - parent).max(0.0) / dist.max(1e-9);
        for pc in [&mut self.pseudo[col], &mut self.pseudo_totals] {
            if up {
                pc.up += gain;
                pc.up_n += 1;
            } else {
                pc.down += gain;
                pc.down_n += 1;
            }
        }
    }

    /// Fixes nonbasic integer columns whose reduced cost exceeds the slack
    /// to the cutoff.
    fn reduced_cost_fixing(&mut self, obj: f64) {
        self.fixings.clear();
        let slack = self.cutoff() - obj;
        if !slack.is_finite() {
            return;
        }
        for &j in &self.integers {
            let (lo, hi) = self.lp.bounds(j);
            if lo == hi {
                continue;
            }
            let (d, side) = self.lp.reduced_cost(j);
            let fix = match side {
                Some(false) if d >= slack => Some((lo, lo)),
                Some(true) if -d >= slack => Some((hi, hi)),
                _ => None,
            };
            if let Some((a, b)) = fix {
                // the excluded side is worth at least the cutoff
                self.closed = self.closed.min(obj + slack);
                self.lp.set_bounds(j, a, b);
                self.applied.push(j);
                self.fixings.push((j, a, b));
            }
        }
    }

    fn evaluate(&mut self, node: &Node) -> Result<Outcome, SolverError> {
        self.nodes += 1;
        self.fixings.clear();
        self.apply(&node.changes);
        self.lp.load(&node.warm);
        match self.solve_lp()? {
            LpStatus::Infeasible => return Ok(Outcome::Pruned),
            LpStatus::Unbounded => return Err(SolverError::Numerical("unbounded relaxation below the root".into())),
            LpStatus::Optimal => {}
        }
        let obj = self.lp.objective();
        self.record_pseudo(node.origin, obj);
        if obj >= self.cutoff() {
            self.close(obj);
            return Ok(Outcome::Pruned);
        }
        self.reduced_cost_fixing(obj);
        self.branch_or_finish(obj)
    }

    fn branch_or_finish(&mut self, obj: f64) -> Result<Outcome, SolverError> {
        let (col, value, class) = match self.select() {
            Selection::Integral => {
                let values = self.lp.values().to_vec();
                self.close(obj);
                self.offer(obj, values);
                return Ok(Outcome::Leaf);
            }
            Selection::Fractional(col, value, class) => (col, value, class),
        };
        if let Some(dec) = self.decompositions.get(&class) {
            // fix the linking columns first, most expensive to move first
            let mut pick: Option<(usize, f64)> = None;
            for &j in &dec.linking {
                let (lo, hi) = self.lp.bounds(j);
                if lo == hi {
                    continue;
                }
                let d = self.lp.reduced_cost(j).0.abs();
                if pick.is_none_or(|(_, bd)| d > bd) {
                    pick = Some((j, d));
                }
            }
            if let Some((j, _)) = pick {
                let v = self.lp.values()[j].round();
                let (_, hi) = self.lp.bounds(j);
                // children [lo, v] / [v+1, hi] or [lo, v-1] / [v, hi]; dive where v lies
                return Ok(if v < hi {
                    Outcome::Branch { col: j, value: v + 0.5, obj, plunge_up: false, track: false }
                } else {
                    Outcome::Branch { col: j, value: v - 0.5, obj, plunge_up: true, track: false }
                });
            }
            return self.solve_blocks(class, obj);
        }
        Ok(Outcome::Branch { col, value, obj, plunge_up: true, track: true })
    }

    /// Picks the branching column among fractional integers of the highest
    /// priority class present.
    fn select(&self) -> Selection {
        let x = self.lp.values();
        let tol = self.config.integrality_tol;
        let mut best_priority = i32::MIN;
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for &j in &self.integers {
            let v = x[j];
            let frac = v - v.floor();
            if frac <= tol || frac >= 1.0 - tol {
                continue;
            }
            let pr = self.model.variables[j].priority;
            if pr > best_priority {
                best_priority = pr;
                candidates.clear();
            }
            if pr == best_priority {
                candidates.push((j, v));
            }
        }
        if candidates.is_empty() {
            return Selection::Integral;
        }
        let (avg_d, avg_u) = {
            let t = &self.pseudo_totals;
            (if t.down_n > 0 { t.down / t.down_n as f64 } else { 1.0 }, if t.up_n > 0 { t.up / t.up_n as f64 } else { 1.0 })
        };
        let score = |j: usize, v: f64| -> f64 {
            let f = v - v.floor();
            match self.config.branching {
                Branching::MostFractional => 0.5 - (f - 0.5).abs(),
                Branching::PseudoCost => {
                    let pc = self.pseudo[j];
                    let down = if pc.down_n > 0 { pc.down / pc.down_n as f64 } else { avg_d };
                    let up = if pc.up_n > 0 { pc.up / pc.up_n as f64 } else { avg_u };
                    (down * f).max(1e-6) * (up * (1.0 - f)).max(1e-6)
                }
            }
        };
        let mut best = candidates[0];
        let mut best_score = score(best.0, best.1);
        for &(j, v) in &candidates[1..] {
            let s = score(j, v);
            let tie = (s - best_score).abs() <= 1e-12 * best_score.abs().max(1.0);
            if (!tie && s > best_score) || (tie && self.tiebreak(j) < self.tiebreak(best.0)) {
                best = (j, v);
                best_score = s;
            }
        }
        Selection::Fractional(best.0, best.1, best_priority)
    }

    /// Seeded, deterministic ordering key used between equal scores.
    fn tiebreak(&self, j: usize) -> u64 {
        if self.config.seed == 0 {
            return j as u64;
        }
        // splitmix64 of (seed, j)
        let mut z = self.config.seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// With all linking columns fixed, solves every block that still has a
    /// fractional integer as a separate MILP and combines the results.
    fn solve_blocks(&mut self, class: i32, obj: f64) -> Result<Outcome, SolverError> {
        let dec = &self.decompositions[&class];
        let mut values = self.lp.values().to_vec();
        let tol = self.config.integrality_tol;
        let mut complete = true;
        // objective minus proven bound, summed over solved blocks
        let mut slack = 0.0;
        let mut sub_nodes = 0;
        let mut sub_iterations = 0;
        for (cols, rows) in &dec.blocks {
            let fractional = cols.iter().any(|&j| {
                let f = values[j] - values[j].floor();
                self.model.variables[j].integer && f > tol && f < 1.0 - tol
            });
            if !fractional {
                continue;
            }
            let mut local = vec![usize::MAX; self.model.num_vars()];
            let mut sub = MilpModel::new(format!("{}_block", self.model.name));
            for &j in cols {
                let v = &self.model.variables[j];
                let (lo, hi) = self.lp.bounds(j);
                local[j] = sub.add_var(v.name.clone(), lo, hi, v.integer, self.model.objective[j]);
                sub.variables[local[j]].priority = v.priority;
            }
            for &i in rows {
                let c = &self.model.constraints[i];
                let mut rhs = c.rhs;
                let mut coeffs = Vec::with_capacity(c.coeffs.len());
                for &(j, a) in &c.coeffs {
                    if local[j] == usize::MAX {
                        rhs -= a * self.lp.bounds(j).0;
                    } else {
                        coeffs.push((local[j], a));
                    }
                }
                sub.add_constraint(c.name.clone(), coeffs, c.relation, rhs);
            }
            let mut config = self.config.clone();
            config.time_limit = self.config.time_limit.map(|t| t.saturating_sub(self.start.elapsed()));
            config.node_limit = self.config.node_limit.map(|n| n.saturating_sub(self.nodes + sub_nodes));
            let result = BranchAndBound::new(&sub, &config)?.run()?;
            sub_nodes += result.stats.nodes;
            sub_iterations += result.stats.lp_iterations;
            match result.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => {
                    self.nodes += sub_nodes;
                    self.extra_iterations += sub_iterations;
                    return Ok(Outcome::Pruned);
                }
                SolveStatus::Unbounded => return Err(SolverError::Numerical("unbounded block below the root".into())),
                SolveStatus::TimeLimit => complete = false,
            }
            match result.values {
                Some(v) => {
                    for &j in cols {
                        values[j] = v[local[j]];
                    }
                    slack += result.objective.unwrap_or(result.bound) - result.bound;
                }
                None => {
                    self.abandoned = self.abandoned.min(obj);
                    self.close(obj);
                    self.nodes += sub_nodes;
                    self.extra_iterations += sub_iterations;
                    return Ok(Outcome::Pruned);
                }
            }
        }
        self.nodes += sub_nodes;
        self.extra_iterations += sub_iterations;
        if !complete {
            self.abandoned = self.abandoned.min(obj);
                    self.close(obj);
        }
        let total = self.model.objective_value(&values);
        self.close(total - slack);
        self.offer(total, values);
        Ok(Outcome::Leaf)
    }

    fn children(&mut self, node: &Node, col: usize, value: f64, obj: f64, track: bool, warm: Arc<WarmStart>) -> (Node, Node) {
        let (lo, hi) = self.lp.bounds(col);
        let mut base: Vec<Change> = node.changes.iter().copied().filter(|c| c.0 != col && !self.fixings.iter().any(|f| f.0 == c.0)).collect();
        base.extend(self.fixings.iter().copied().filter(|c| c.0 != col));
        let mut down_changes = base.clone();
        let mut up_changes = base;
        down_changes.push((col, lo, value.floor()));
        up_changes.push((col, value.ceil(), hi));
        let f = value - value.floor();
        let (down_origin, up_origin) = if track { (Some((col, false, f, obj)), Some((col, true, 1.0 - f, obj))) } else { (None, None) };
        let down = Node { id: self.new_id(), bound: obj, changes: down_changes, warm: warm.clone(), origin: down_origin };
        let up = Node { id: self.new_id(), bound: obj, changes: up_changes, warm, origin: up_origin };
        (down, up)
    }

    pub fn run(mut self) -> Result<SolveResult, SolverError> {
        let root = Node { id: self.new_id(), bound: f64::NEG_INFINITY, changes: Vec::new(), warm: Arc::new(self.lp.warm_start()), origin: None };

        // root relaxation decides infeasible / unbounded outright
        self.nodes += 1;
        match self.solve_lp()? {
            LpStatus::Infeasible => return Ok(SolveResult::without_solution(SolveStatus::Infeasible, f64::INFINITY, self.stats())),
            LpStatus::Unbounded => return Ok(SolveResult::without_solution(SolveStatus::Unbounded, f64::NEG_INFINITY, self.stats())),
            LpStatus::Optimal => {}
        }
        let root_obj = self.lp.objective();
        let mut heap = BinaryHeap::new();
        let mut current = None;
        let mut pending = Some((root, self.branch_or_finish(root_obj)?));

        let mut stopped = false;
        loop {
            if let Some((node, Outcome::Branch { col, value, obj, plunge_up, track })) = pending.take() {
                let warm = Arc::new(self.lp.warm_start());
                let (down, up) = self.children(&node, col, value, obj, track, warm);
                let (dive, park) = if plunge_up { (up, down) } else { (down, up) };
                heap.push(park);
                current = Some(dive);
            }
            let node = match current.take() {
                Some(n) => n,
                None => match heap.pop() {
                    Some(n) => n,
                    None => break,
                },
            };
            if node.bound >= self.cutoff() {
                self.close(node.bound);
                continue;
            }
            if self.limit_reached() {
                heap.push(node);
                stopped = true;
                break;
            }
            let outcome = self.evaluate(&node)?;
            pending = Some((node, outcome));
        }

        let cutoff = self.cutoff();
        let open_bound = heap.iter().filter(|n| n.bound < cutoff).map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let open_bound = open_bound.min(if self.abandoned < cutoff { self.abandoned } else { f64::INFINITY });
        let stopped = stopped || open_bound < f64::INFINITY;
        let stats = self.stats();
        match self.incumbent {
            Some((obj, values)) => {
                let bound = open_bound.min(self.closed).min(obj).max(root_obj);
                let status = if stopped && open_bound < cutoff { SolveStatus::TimeLimit } else { SolveStatus::Optimal };
                Ok(SolveResult { status, objective: Some(obj), values: Some(values), bound, stats })
            }
            None if stopped => Ok(SolveResult::without_solution(SolveStatus::TimeLimit, open_bound.max(root_obj), stats)),
            None => Ok(SolveResult::without_solution(SolveStatus::Infeasible, f64::INFINITY, stats)),
        }
    }
}
