//! Direct evaluation of the average-charge dynamics for a fixed placement.
//!
//! For node `i` and period `t` the inflow level is the weighted mean
//! `(Σ_k w[k→i]·u[k→i] + wo[i]·uo[i]) / (Σ_k w[k→i] + wo[i])`, and every route
//! leaving `i` carries `inflow − cc + p·Σ we·wc·x`. This module is the
//! reference semantics the optimization model must reproduce.

use crate::error::FlowError;
use crate::exec::{self, Execution};
use crate::network::{route_order, Dims, NetworkInstance, Route};

/// Default absolute tolerance for constraint checks.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Pad construction (`x`, per route/site/length) and on/off states (`p`, per
/// route/period).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadAssignment {
    pub dims: Dims,
    pub x: Vec<bool>,
    pub p: Vec<bool>,
}

impl PadAssignment {
    /// No pads built, all pads switched on.
    pub fn empty(dims: Dims) -> Self {
        Self { dims, x: vec![false; dims.site_lengths()], p: vec![true; dims.route_periods()] }
    }

    pub fn with_pad(mut self, r: usize, m: usize, l: usize) -> Self {
        for k in 0..self.dims.lengths {
            self.x[self.dims.rml(r, m, k)] = k == l;
        }
        self
    }

    pub fn with_all_p(mut self, on: bool) -> Self {
        self.p.iter_mut().for_each(|v| *v = on);
        self
    }

    pub fn selected_length(&self, r: usize, m: usize) -> Option<usize> {
        (0..self.dims.lengths).find(|&l| self.x[self.dims.rml(r, m, l)])
    }

    pub fn built_sites(&self) -> usize {
        (0..self.dims.routes)
            .flat_map(|r| (0..self.dims.sites).map(move |m| (r, m)))
            .filter(|&(r, m)| self.selected_length(r, m).is_some())
            .count()
    }

    /// Pad counts per length index.
    pub fn counts_by_length(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dims.lengths];
        for r in 0..self.dims.routes {
            for m in 0..self.dims.sites {
                if let Some(l) = self.selected_length(r, m) {
                    counts[l] += 1;
                }
            }
        }
        counts
    }

    /// Checks shape and the one-length-per-site rule.
    pub fn validate(&self, instance: &NetworkInstance) -> Result<(), FlowError> {
        let d = instance.dims();
        if self.dims != d || self.x.len() != d.site_lengths() || self.p.len() != d.route_periods() {
            return Err(FlowError::Assignment("shape does not match the instance".into()));
        }
        for r in 0..d.routes {
            for m in 0..d.sites {
                let n = (0..d.lengths).filter(|&l| self.x[d.rml(r, m, l)]).count();
                if n > 1 {
                    return Err(FlowError::Assignment(format!("site {m} on route {} has {n} lengths selected", instance.routes[r])));
                }
            }
        }
        Ok(())
    }

    /// Charge available on route `r` in period `t` when its pads are on.
    pub fn pad_gain(&self, instance: &NetworkInstance, r: usize, t: usize) -> f64 {
        let d = self.dims;
        let mut g = 0.0;
        for m in 0..d.sites {
            for l in 0..d.lengths {
                if self.x[d.rml(r, m, l)] {
                    g += instance.delivered(r, m, l, t);
                }
            }
        }
        g
    }
}

/// Average charge level `u`, `[route][t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeProfile {
    pub dims: Dims,
    pub u: Vec<f64>,
}

impl ChargeProfile {
    pub fn level(&self, r: usize, t: usize) -> f64 {
        self.u[self.dims.rt(r, t)]
    }
}

/// Precomputed structure for repeated per-period evaluation.
pub struct FlowEvaluator<'a> {
    instance: &'a NetworkInstance,
    weights: &'a [f64],
    inbound: Vec<Vec<usize>>,
    origins: Vec<usize>,
    /// Route evaluation order when the graph is acyclic.
    order: Option<Vec<usize>>,
}

impl<'a> FlowEvaluator<'a> {
    pub fn new(instance: &'a NetworkInstance) -> Result<Self, FlowError> {
        let weights = instance.weights()?;
        let inbound = instance.inbound();
        let origins = instance.route_origins();
        let d = instance.dims();
        for &i in &origins {
            for t in 0..d.horizon {
                let total: f64 = inbound[i].iter().map(|&k| weights[d.rt(k, t)]).sum::<f64>() + instance.params.wo[i];
                if total <= 0.0 {
                    return Err(FlowError::ZeroInflow { node: instance.nodes[i], period: t });
                }
            }
        }
        let order = route_order(instance);
        Ok(Self { instance, weights, inbound, origins, order })
    }

    pub fn instance(&self) -> &NetworkInstance {
        self.instance
    }

    /// Weighted inflow level at node position `i`, given period-`t` route levels.
    pub fn inflow(&self, i: usize, t: usize, u_t: &[f64]) -> f64 {
        let d = self.instance.dims();
        let p = &self.instance.params;
        let mut num = p.wo[i] * p.uo[d.nt(i, t)];
        let mut den = p.wo[i];
        for &k in &self.inbound[i] {
            let w = self.weights[d.rt(k, t)];
            num += w * u_t[k];
            den += w;
        }
        num / den
    }

    pub fn origin(&self, r: usize) -> usize {
        self.origins[r]
    }

    /// Route levels for one period; `gain[r]` is the pad charge actually
    /// delivered on route `r` (already gated by the on/off state).
    pub fn period(&self, t: usize, gain: &[f64]) -> Result<Vec<f64>, FlowError> {
        let d = self.instance.dims();
        let cc = &self.instance.params.cc;
        match &self.order {
            Some(order) => {
                let mut u = vec![0.0; d.routes];
                for &r in order {
                    u[r] = self.inflow(self.origins[r], t, &u) - cc[d.rt(r, t)] + gain[r];
                }
                Ok(u)
            }
            None => self.solve_cyclic(t, gain),
        }
    }

    fn solve_cyclic(&self, t: usize, gain: &[f64]) -> Result<Vec<f64>, FlowError> {
        let d = self.instance.dims();
        let p = &self.instance.params;
        let n = d.routes;
        // (I - A) u = b with A[r][k] = w_k / D for k entering origin(r)
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for r in 0..n {
            let i = self.origins[r];
            let den: f64 = p.wo[i] + self.inbound[i].iter().map(|&k| self.weights[d.rt(k, t)]).sum::<f64>();
            a[r * n + r] = 1.0;
            for &k in &self.inbound[i] {
                a[r * n + k] -= self.weights[d.rt(k, t)] / den;
            }
            b[r] = p.wo[i] * p.uo[d.nt(i, t)] / den - p.cc[d.rt(r, t)] + gain[r];
        }
        gauss_solve(&mut a, &mut b, n).ok_or(FlowError::Singular { period: t })?;
        Ok(b)
    }
}

/// Dense Gaussian elimination with partial pivoting; solution left in `b`.
fn gauss_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(())
}

pub fn evaluate_charge_flow(instance: &NetworkInstance, assign: &PadAssignment) -> Result<ChargeProfile, FlowError> {
    evaluate_charge_flow_with(instance, assign, Execution::default())
}

pub fn evaluate_charge_flow_with(instance: &NetworkInstance, assign: &PadAssignment, execution: Execution) -> Result<ChargeProfile, FlowError> {
    assign.validate(instance)?;
    let eval = FlowEvaluator::new(instance)?;
    let d = instance.dims();
    let periods = exec::map_indexed(execution, d.horizon, |t| {
        let gain: Vec<f64> = (0..d.routes)
            .map(|r| if assign.p[d.rt(r, t)] { assign.pad_gain(instance, r, t) } else { 0.0 })
            .collect();
        eval.period(t, &gain)
    });
    let mut u = vec![0.0; d.route_periods()];
    for (t, levels) in periods.into_iter().enumerate() {
        for (r, v) in levels?.into_iter().enumerate() {
            u[d.rt(r, t)] = v;
        }
    }
    Ok(ChargeProfile { dims: d, u })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Route level below the minimum acceptable level.
    BelowMinimum { route: Route, period: usize, level: f64, required: f64 },
    /// Inflow plus switched-on pad charge exceeds a full battery.
    Overcharge { route: Route, period: usize, level: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityVerdict {
    pub violations: Vec<Violation>,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_feasibility(instance: &NetworkInstance, assign: &PadAssignment, profile: &ChargeProfile) -> Result<FeasibilityVerdict, FlowError> {
    check_feasibility_tol(instance, assign, profile, FEASIBILITY_TOL)
}

/// Lists every minimum-level and overcharge violation beyond `tol`. The
/// overcharge test bounds `inflow + p·gain` without subtracting consumption.
pub fn check_feasibility_tol(
    instance: &NetworkInstance,
    assign: &PadAssignment,
    profile: &ChargeProfile,
    tol: f64,
) -> Result<FeasibilityVerdict, FlowError> {
    let eval = FlowEvaluator::new(instance)?;
    let d = instance.dims();
    let ma = instance.params.ma;
    let mut violations = Vec::new();
    for t in 0..d.horizon {
        let u_t: Vec<f64> = (0..d.routes).map(|r| profile.level(r, t)).collect();
        for (r, route) in instance.routes.iter().enumerate() {
            let level = u_t[r];
            if level < ma - tol {
                violations.push(Violation::BelowMinimum { route: *route, period: t, level, required: ma });
            }
            let gain = if assign.p[d.rt(r, t)] { assign.pad_gain(instance, r, t) } else { 0.0 };
            let top = eval.inflow(eval.origin(r), t, &u_t) + gain;
            if top > 1.0 + tol {
                violations.push(Violation::Overcharge { route: *route, period: t, level: top });
            }
        }
    }
    Ok(FeasibilityVerdict { violations })
}

/// Construction, fixed operating and variable charging cost of a placement.
pub fn evaluate_cost(instance: &NetworkInstance, assign: &PadAssignment) -> f64 {
    let d = instance.dims();
    let p = &instance.params;
    let mut total = 0.0;
    for r in 0..d.routes {
        for m in 0..d.sites {
            let Some(l) = assign.selected_length(r, m) else { continue };
            total += p.ccc[d.rml(r, m, l)];
            for t in 0..d.horizon {
                total += p.ccf[d.rmt(r, m, t)];
                if assign.p[d.rt(r, t)] {
                    total += p.ccv[d.rmt(r, m, t)] * instance.delivered(r, m, l, t);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::uniform;
    use approx::assert_relative_eq;

    fn single_route() -> NetworkInstance {
        let mut inst = uniform(&[1, 2], &[(1, 2)], 1, 3, 1);
        inst.params.wc = vec![0.04, 0.08, 0.12];
        inst.params.uo = vec![0.5, 0.5];
        inst.params.cc = vec![0.1];
        inst
    }

    #[test]
    fn source_route_without_pad() {
        let inst = single_route();
        let prof = evaluate_charge_flow(&inst, &PadAssignment::empty(inst.dims())).unwrap();
        assert_relative_eq!(prof.level(0, 0), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn source_route_with_large_pad() {
        let inst = single_route();
        let a = PadAssignment::empty(inst.dims()).with_pad(0, 0, 2);
        let prof = evaluate_charge_flow(&inst, &a).unwrap();
        assert_relative_eq!(prof.level(0, 0), 0.52, epsilon = 1e-12);
        // switched off, the pad delivers nothing
        let prof = evaluate_charge_flow(&inst, &a.with_all_p(false)).unwrap();
        assert_relative_eq!(prof.level(0, 0), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn weighted_inflow_on_chain() {
        // 1 -> 2 -> 3 with w(1->2) = 3, wo = 1 everywhere
        let mut inst = uniform(&[1, 2, 3], &[(1, 2), (2, 3)], 0, 1, 1);
        inst.params.w = Some(vec![3.0, 1.0]);
        let prof = evaluate_charge_flow(&inst, &PadAssignment::empty(inst.dims())).unwrap();
        let u12 = 0.5 - 0.1;
        let u23 = (3.0 * u12 + 0.5) / 4.0 - 0.1;
        assert_relative_eq!(prof.level(1, 0), u23, epsilon = 1e-12);
    }

    #[test]
    fn cyclic_graph_matches_fixed_point() {
        let mut inst = uniform(&[1, 2], &[(1, 2), (2, 1)], 0, 1, 1);
        inst.params.w = Some(vec![2.0, 3.0]);
        inst.params.wo = vec![1.0, 2.0];
        let prof = evaluate_charge_flow(&inst, &PadAssignment::empty(inst.dims())).unwrap();
        let (a, b) = (prof.level(0, 0), prof.level(1, 0));
        // route 1->2 leaves node 1, whose inflow comes from 2->1
        assert_relative_eq!(a, (3.0 * b + 0.5) / 4.0 - 0.1, epsilon = 1e-12);
        assert_relative_eq!(b, (2.0 * a + 2.0 * 0.5) / 4.0 - 0.1, epsilon = 1e-12);
    }

    #[test]
    fn zero_inflow_is_an_error() {
        let mut inst = uniform(&[1, 2], &[(1, 2)], 0, 1, 1);
        inst.params.wo = vec![0.0, 1.0];
        let err = evaluate_charge_flow(&inst, &PadAssignment::empty(inst.dims())).unwrap_err();
        assert!(matches!(err, FlowError::ZeroInflow { node: 1, period: 0 }));
    }

    #[test]
    fn overcharge_flagged_without_consumption() {
        let mut inst = single_route();
        inst.params.uo = vec![0.95, 0.95];
        let a = PadAssignment::empty(inst.dims()).with_pad(0, 0, 2);
        let prof = evaluate_charge_flow(&inst, &a).unwrap();
        let v = check_feasibility(&inst, &a, &prof).unwrap();
        assert_eq!(v.violations.len(), 1);
        match &v.violations[0] {
            Violation::Overcharge { level, .. } => assert_relative_eq!(*level, 1.07, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimum_level_violation() {
        let mut inst = single_route();
        inst.params.ma = 0.45;
        let a = PadAssignment::empty(inst.dims());
        let prof = evaluate_charge_flow(&inst, &a).unwrap();
        assert!(!check_feasibility(&inst, &a, &prof).unwrap().is_feasible());
        inst.params.ma = 0.4;
        assert!(check_feasibility(&inst, &a, &prof).unwrap().is_feasible());
    }

    #[test]
    fn cost_examples() {
        let inst = single_route();
        assert_eq!(evaluate_cost(&inst, &PadAssignment::empty(inst.dims())), 0.0);

        // one large pad, T = 1, switched off: construction + fixed only
        let mut one = uniform(&[1, 2], &[(1, 2)], 1, 1, 1);
        one.params.wc = vec![0.12];
        let a = PadAssignment::empty(one.dims()).with_pad(0, 0, 0).with_all_p(false);
        assert_relative_eq!(evaluate_cost(&one, &a), 10100.0, epsilon = 1e-9);

        // T = 2, on in both periods
        let mut two = uniform(&[1, 2], &[(1, 2)], 1, 1, 2);
        two.params.wc = vec![0.12, 0.12];
        let a = PadAssignment::empty(two.dims()).with_pad(0, 0, 0);
        assert_relative_eq!(evaluate_cost(&two, &a), 10202.4, epsilon = 1e-9);
    }

    #[test]
    fn two_lengths_on_one_site_rejected() {
        let inst = single_route();
        let mut a = PadAssignment::empty(inst.dims());
        a.x[0] = true;
        a.x[1] = true;
        assert!(evaluate_charge_flow(&inst, &a).is_err());
    }
}
