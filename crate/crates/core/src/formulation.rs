//! Builds the linearized placement model.
//!
//! Columns are laid out in four contiguous families, each in lexicographic
//! index order: `x[r,m,l]` (build site `m` of route `r` with length `l`),
//! `u[r,t]` (route charge level), `p[r,t]` (pads on route `r` switched on) and
//! `z[r,m,t]` (charge actually delivered by site `m`, i.e. the product of the
//! site's built capacity and `p[r,t]`).
//!
//! Rows, in order: flow balance per route/period, minimum level per
//! route/period, one length per site, overcharge per route/period, the four
//! product-linearization rows per site/period, and the optional budget row.
//!
//! With [`FormulationOptions::count_columns`] two families are appended: an
//! integer pad count `n[r]` per route and the network total `n`, each tied to
//! the `x` columns by an equality row. They leave the feasible set unchanged
//! but give branch-and-bound coarse decisions to branch on first, which
//! matters because sites on one route are nearly interchangeable.

use crate::charge_flow::{evaluate_charge_flow, PadAssignment};
use crate::error::{FlowError, FormulationError};
use crate::model::{MilpModel, Relation};
use crate::network::{Dims, NetworkInstance};

pub const PRIORITY_X: i32 = 2;
pub const PRIORITY_P: i32 = 1;
pub const PRIORITY_COUNT: i32 = 3;
pub const PRIORITY_TOTAL: i32 = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FormulationOptions {
    /// Add `Σ ccc·x ≤ budget`.
    pub use_budget: bool,
    /// Global big-M override; takes precedence over the instance's `big_m`.
    pub big_m: Option<f64>,
    /// Append per-route and total pad-count columns.
    pub count_columns: bool,
}

/// Column index maps for the four variable families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableMap {
    pub dims: Dims,
    pub x_start: usize,
    pub u_start: usize,
    pub p_start: usize,
    pub z_start: usize,
    /// First count column, when present.
    pub count_start: Option<usize>,
}

impl VariableMap {
    pub fn new(dims: Dims) -> Self {
        let x_start = 0;
        let u_start = x_start + dims.site_lengths();
        let p_start = u_start + dims.route_periods();
        let z_start = p_start + dims.route_periods();
        Self { dims, x_start, u_start, p_start, z_start, count_start: None }
    }

    /// Layout including the pad-count columns.
    pub fn with_counts(dims: Dims) -> Self {
        let base = Self::new(dims);
        Self { count_start: Some(base.z_start + dims.site_periods()), ..base }
    }

    pub fn x(&self, r: usize, m: usize, l: usize) -> usize {
        self.x_start + self.dims.rml(r, m, l)
    }
    pub fn u(&self, r: usize, t: usize) -> usize {
        self.u_start + self.dims.rt(r, t)
    }
    pub fn p(&self, r: usize, t: usize) -> usize {
        self.p_start + self.dims.rt(r, t)
    }
    pub fn z(&self, r: usize, m: usize, t: usize) -> usize {
        self.z_start + self.dims.rmt(r, m, t)
    }

    /// Count column of route `r`; `r == routes` is the network total.
    pub fn count(&self, r: usize) -> Option<usize> {
        self.count_start.map(|c| c + r)
    }

    pub fn total_columns(&self) -> usize {
        let base = self.z_start + self.dims.site_periods();
        if self.count_start.is_some() {
            base + self.dims.routes + 1
        } else {
            base
        }
    }

    /// Rounds the binary columns of a model solution into an assignment.
    pub fn assignment(&self, values: &[f64]) -> PadAssignment {
        let d = self.dims;
        let mut a = PadAssignment::empty(d);
        for (k, x) in a.x.iter_mut().enumerate() {
            *x = values[self.x_start + k] > 0.5;
        }
        for (k, p) in a.p.iter_mut().enumerate() {
            *p = values[self.p_start + k] > 0.5;
        }
        a
    }

    /// Full column vector realizing `assign`: levels from the charge-flow
    /// evaluator, `z` as delivered site charge.
    pub fn column_values(&self, instance: &NetworkInstance, assign: &PadAssignment) -> Result<Vec<f64>, FlowError> {
        let d = self.dims;
        let profile = evaluate_charge_flow(instance, assign)?;
        let mut v = vec![0.0; self.total_columns()];
        for (k, &x) in assign.x.iter().enumerate() {
            v[self.x_start + k] = if x { 1.0 } else { 0.0 };
        }
        for r in 0..d.routes {
            for t in 0..d.horizon {
                v[self.u(r, t)] = profile.level(r, t);
                let on = assign.p[d.rt(r, t)];
                v[self.p(r, t)] = if on { 1.0 } else { 0.0 };
                for m in 0..d.sites {
                    if let (true, Some(l)) = (on, assign.selected_length(r, m)) {
                        v[self.z(r, m, t)] = instance.delivered(r, m, l, t);
                    }
                }
            }
        }
        if self.count_start.is_some() {
            let mut total = 0;
            for r in 0..d.routes {
                let n = (0..d.sites).filter(|&m| assign.selected_length(r, m).is_some()).count();
                v[self.count(r).unwrap()] = n as f64;
                total += n;
            }
            v[self.count(d.routes).unwrap()] = total as f64;
        }
        Ok(v)
    }
}

/// Row indices created by [`linearize_product`], in the order
/// `z ≤ expr`, `z ≤ M·gate`, `z ≥ expr − (1 − gate)·M`, `z ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductRows {
    pub z: usize,
    pub rows: [usize; 4],
}

/// Adds a column `z` equal to `expr · gate` for binary `gate` and a
/// nonnegative expression over binaries bounded above by `expr_upper`.
pub fn linearize_product(
    model: &mut MilpModel,
    name: &str,
    expr: &[(usize, f64)],
    expr_upper: f64,
    gate: usize,
    big_m: f64,
    cost: f64,
) -> Result<ProductRows, FormulationError> {
    if expr.iter().any(|&(_, a)| a < 0.0) {
        return Err(FormulationError::Model(format!("product {name}: expression must be nonnegative")));
    }
    if !(big_m.is_finite()) || big_m < expr_upper {
        return Err(FormulationError::UnsoundBigM { big_m, bound: expr_upper });
    }
    let z = model.add_continuous(name, 0.0, big_m, cost);
    let neg_expr = || expr.iter().map(|&(j, a)| (j, -a));

    let mut upper: Vec<(usize, f64)> = vec![(z, 1.0)];
    upper.extend(neg_expr());
    let r8 = model.add_constraint(format!("{name}_le_expr"), upper.clone(), Relation::Le, 0.0);
    let r9 = model.add_constraint(format!("{name}_le_gate"), vec![(z, 1.0), (gate, -big_m)], Relation::Le, 0.0);
    upper.push((gate, -big_m));
    let r10 = model.add_constraint(format!("{name}_ge_expr"), upper, Relation::Ge, -big_m);
    let r11 = model.add_constraint(format!("{name}_nonneg"), vec![(z, 1.0)], Relation::Ge, 0.0);
    Ok(ProductRows { z, rows: [r8, r9, r10, r11] })
}

fn route_tag(instance: &NetworkInstance, r: usize) -> String {
    let route = instance.routes[r];
    format!("{}_{}", route.from, route.to)
}

pub fn build_model(instance: &NetworkInstance, options: &FormulationOptions) -> Result<(MilpModel, VariableMap), FormulationError> {
    instance.validate()?;
    let weights = instance.weights()?;
    let d = instance.dims();
    let p = &instance.params;
    let map = if options.count_columns { VariableMap::with_counts(d) } else { VariableMap::new(d) };
    let inbound = instance.inbound();
    let origins = instance.route_origins();
    let mut model = MilpModel::new(instance.name.clone());

    for &i in &origins {
        for t in 0..d.horizon {
            let den: f64 = p.wo[i] + inbound[i].iter().map(|&k| weights[d.rt(k, t)]).sum::<f64>();
            if den <= 0.0 {
                return Err(FormulationError::ZeroInflow { node: instance.nodes[i], period: t });
            }
        }
    }

    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for m in 0..d.sites {
            for l in 0..d.lengths {
                let fixed: f64 = (0..d.horizon).map(|t| p.ccf[d.rmt(r, m, t)]).sum();
                let j = model.add_binary(format!("x_{tag}_m{m}_l{l}"), p.ccc[d.rml(r, m, l)] + fixed);
                model.variables[j].priority = PRIORITY_X;
            }
        }
    }
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for t in 0..d.horizon {
            model.add_continuous(format!("u_{tag}_t{t}"), 0.0, 1.0, 0.0);
        }
    }
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for t in 0..d.horizon {
            let j = model.add_binary(format!("p_{tag}_t{t}"), 0.0);
            model.variables[j].priority = PRIORITY_P;
        }
    }

    // inflow terms of route r in period t: (coefficients on u, constant)
    let inflow = |r: usize, t: usize| -> (Vec<(usize, f64)>, f64) {
        let i = origins[r];
        let den: f64 = p.wo[i] + inbound[i].iter().map(|&k| weights[d.rt(k, t)]).sum::<f64>();
        let coeffs = inbound[i].iter().map(|&k| (map.u(k, t), weights[d.rt(k, t)] / den)).collect();
        (coeffs, p.wo[i] * p.uo[d.nt(i, t)] / den)
    };

    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for t in 0..d.horizon {
            let (coeffs, constant) = inflow(r, t);
            let mut row = vec![(map.u(r, t), 1.0)];
            row.extend(coeffs.into_iter().map(|(j, a)| (j, -a)));
            row.extend((0..d.sites).map(|m| (map.z(r, m, t), -1.0)));
            model.add_constraint(format!("flow_{tag}_t{t}"), row, Relation::Eq, constant - p.cc[d.rt(r, t)]);
        }
    }
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for t in 0..d.horizon {
            model.add_constraint(format!("min_{tag}_t{t}"), vec![(map.u(r, t), 1.0)], Relation::Ge, p.ma);
        }
    }
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for m in 0..d.sites {
            let row = (0..d.lengths).map(|l| (map.x(r, m, l), 1.0)).collect();
            model.add_constraint(format!("uniq_{tag}_m{m}"), row, Relation::Le, 1.0);
        }
    }
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for t in 0..d.horizon {
            let (mut row, constant) = inflow(r, t);
            row.extend((0..d.sites).map(|m| (map.z(r, m, t), 1.0)));
            model.add_constraint(format!("over_{tag}_t{t}"), row, Relation::Le, 1.0 - constant);
        }
    }

    let big_m_override = options.big_m.or(p.big_m);
    for r in 0..d.routes {
        let tag = route_tag(instance, r);
        for m in 0..d.sites {
            for t in 0..d.horizon {
                let expr: Vec<(usize, f64)> = (0..d.lengths).map(|l| (map.x(r, m, l), instance.delivered(r, m, l, t))).collect();
                let upper = instance.max_site_delivery(r, m, t);
                let big_m = big_m_override.unwrap_or(upper);
                let rows = linearize_product(&mut model, &format!("z_{tag}_m{m}_t{t}"), &expr, upper, map.p(r, t), big_m, p.ccv[d.rmt(r, m, t)])?;
                debug_assert_eq!(rows.z, map.z(r, m, t));
            }
        }
    }

    if options.use_budget {
        let budget = p.budget.ok_or_else(|| FormulationError::Model("budget row requested but the instance has no budget".into()))?;
        let mut row = Vec::with_capacity(d.site_lengths());
        for r in 0..d.routes {
            for m in 0..d.sites {
                for l in 0..d.lengths {
                    row.push((map.x(r, m, l), p.ccc[d.rml(r, m, l)]));
                }
            }
        }
        model.add_constraint("budget", row, Relation::Le, budget);
    }
    if options.count_columns {
        let mut total_row = Vec::with_capacity(d.routes + 1);
        for r in 0..d.routes {
            let tag = route_tag(instance, r);
            let j = model.add_var(format!("n_{tag}"), 0.0, d.sites as f64, true, 0.0);
            model.variables[j].priority = PRIORITY_COUNT;
            total_row.push((j, 1.0));
        }
        let total = model.add_var("n_total", 0.0, d.site_count() as f64, true, 0.0);
        model.variables[total].priority = PRIORITY_TOTAL;
        for r in 0..d.routes {
            let tag = route_tag(instance, r);
            let mut row: Vec<(usize, f64)> = (0..d.sites).flat_map(|m| (0..d.lengths).map(move |l| (m, l))).map(|(m, l)| (map.x(r, m, l), 1.0)).collect();
            row.push((map.count(r).unwrap(), -1.0));
            model.add_constraint(format!("count_{tag}"), row, Relation::Eq, 0.0);
        }
        total_row.push((total, -1.0));
        model.add_constraint("count_total", total_row, Relation::Eq, 0.0);
    }
    debug_assert_eq!(model.num_vars(), map.total_columns());
    Ok((model, map))
}

/// Closed-form row count of [`build_model`].
pub fn expected_rows(d: Dims, options: &FormulationOptions) -> usize {
    let counts = if options.count_columns { d.routes + 1 } else { 0 };
    3 * d.route_periods() + d.site_count() + 4 * d.site_periods() + usize::from(options.use_budget) + counts
}

/// Pad charge under limited grid power plus a solar contribution:
/// `wc' = min(wc, grid_cap) + solar_fraction · min(wc, solar_cap)`, capped
/// at 1. Solar adds a share of each pad's own rating, so a fraction of 0.5
/// means half again the nominal charge when neither cap binds.
pub fn apply_capacity(instance: &NetworkInstance, grid_cap: f64, solar_cap: f64, solar_fraction: f64) -> NetworkInstance {
    let mut out = instance.clone();
    for wc in &mut out.params.wc {
        *wc = (wc.min(grid_cap) + solar_fraction * wc.min(solar_cap)).min(1.0);
    }
    out
}
