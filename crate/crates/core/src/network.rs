//! Road network, planning horizon and model parameters.
//!
//! Every per-index parameter is stored as a dense row-major `Vec<f64>`; the
//! layouts are fixed by [`Dims`] so that other modules never compute offsets
//! by hand.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use crate::error::InstanceError;

/// Intersection identifier.
pub type NodeId = u32;

/// A directed road segment between two intersections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Route {
    pub from: NodeId,
    pub to: NodeId,
}

impl Route {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Self { from, to }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for Route {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InstanceError::invalid("routes", format!("malformed route key `{s}`, expected `i->j`"));
        let (a, b) = s.split_once("->").ok_or_else(bad)?;
        let from = a.trim().parse().map_err(|_| bad())?;
        let to = b.trim().parse().map_err(|_| bad())?;
        Ok(Route { from, to })
    }
}

/// Index arithmetic for the dense parameter arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub nodes: usize,
    pub routes: usize,
    pub sites: usize,
    pub lengths: usize,
    pub horizon: usize,
}

impl Dims {
    /// `[route][t]`
    #[inline]
    pub fn rt(&self, r: usize, t: usize) -> usize {
        r * self.horizon + t
    }
    /// `[node][t]`
    #[inline]
    pub fn nt(&self, n: usize, t: usize) -> usize {
        n * self.horizon + t
    }
    /// `[route][site]`
    #[inline]
    pub fn rm(&self, r: usize, m: usize) -> usize {
        r * self.sites + m
    }
    /// `[route][site][t]`
    #[inline]
    pub fn rmt(&self, r: usize, m: usize, t: usize) -> usize {
        (r * self.sites + m) * self.horizon + t
    }
    /// `[route][site][length]`
    #[inline]
    pub fn rml(&self, r: usize, m: usize, l: usize) -> usize {
        (r * self.sites + m) * self.lengths + l
    }
    /// `[route][site][length][t]`
    #[inline]
    pub fn rmlt(&self, r: usize, m: usize, l: usize, t: usize) -> usize {
        ((r * self.sites + m) * self.lengths + l) * self.horizon + t
    }

    pub fn route_periods(&self) -> usize {
        self.routes * self.horizon
    }
    pub fn site_count(&self) -> usize {
        self.routes * self.sites
    }
    pub fn site_periods(&self) -> usize {
        self.routes * self.sites * self.horizon
    }
    pub fn site_lengths(&self) -> usize {
        self.routes * self.sites * self.lengths
    }
    pub fn site_length_periods(&self) -> usize {
        self.site_lengths() * self.horizon
    }
}

/// All model parameters. Layouts follow the doc comment on each field.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceParams {
    /// Charge fraction consumed per traversal, `[route][t]`.
    pub cc: Vec<f64>,
    /// Hourly traffic flow, `[route][t]`.
    pub ahd: Option<Vec<f64>>,
    /// Inflow weight, `[route][t]`. Absent until given or derived from `ahd`.
    pub w: Option<Vec<f64>>,
    /// External inflow weight, `[node]`.
    pub wo: Vec<f64>,
    /// External inflow charge level, `[node][t]`.
    pub uo: Vec<f64>,
    /// Charge delivered by a pad, `[route][site][length][t]`.
    pub wc: Vec<f64>,
    /// Wireless efficiency multiplier, `[route][t]`.
    pub we: Vec<f64>,
    /// Variable cost per unit delivered charge, `[route][site][t]`.
    pub ccv: Vec<f64>,
    /// Fixed operating cost per period, `[route][site][t]`.
    pub ccf: Vec<f64>,
    /// Construction cost, `[route][site][length]`.
    pub ccc: Vec<f64>,
    /// Minimum acceptable average charge level.
    pub ma: f64,
    pub budget: Option<f64>,
    pub big_m: Option<f64>,
}

/// Generator provenance carried by instances produced from a seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkInstance {
    pub name: String,
    pub nodes: Vec<NodeId>,
    pub routes: Vec<Route>,
    pub horizon: usize,
    pub sites_per_route: usize,
    pub lengths: usize,
    pub params: InstanceParams,
    pub provenance: Option<Provenance>,
}

impl NetworkInstance {
    pub fn dims(&self) -> Dims {
        Dims {
            nodes: self.nodes.len(),
            routes: self.routes.len(),
            sites: self.sites_per_route,
            lengths: self.lengths,
            horizon: self.horizon,
        }
    }

    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == id)
    }

    pub fn route_index(&self, route: Route) -> Option<usize> {
        self.routes.iter().position(|&r| r == route)
    }

    /// Inflow weights, or an error when neither given nor derived.
    pub fn weights(&self) -> Result<&[f64], InstanceError> {
        self.params
            .w
            .as_deref()
            .ok_or_else(|| InstanceError::invalid("w", "inflow weights absent; provide `w` or derive them from `ahd`"))
    }

    /// Effective charge delivered by site `m` built with length `l`: `we * wc`.
    #[inline]
    pub fn delivered(&self, r: usize, m: usize, l: usize, t: usize) -> f64 {
        let d = self.dims();
        self.params.we[d.rt(r, t)] * self.params.wc[d.rmlt(r, m, l, t)]
    }

    /// Largest charge one site can deliver in period `t` (any single length).
    pub fn max_site_delivery(&self, r: usize, m: usize, t: usize) -> f64 {
        (0..self.lengths).map(|l| self.delivered(r, m, l, t)).fold(0.0, f64::max)
    }

    /// Route indices entering each node, indexed by node position.
    pub fn inbound(&self) -> Vec<Vec<usize>> {
        let index: HashMap<NodeId, usize> = self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut inbound = vec![Vec::new(); self.nodes.len()];
        for (r, route) in self.routes.iter().enumerate() {
            if let Some(&j) = index.get(&route.to) {
                inbound[j].push(r);
            }
        }
        inbound
    }

    /// Node position of each route's origin.
    pub fn route_origins(&self) -> Vec<usize> {
        let index: HashMap<NodeId, usize> = self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        self.routes.iter().map(|r| index[&r.from]).collect()
    }

    /// Checks every structural and parameter invariant.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let mut seen = HashSet::new();
        for &n in &self.nodes {
            if !seen.insert(n) {
                return Err(InstanceError::invalid("nodes", format!("duplicate node {n}")));
            }
        }
        let mut seen_routes = HashSet::new();
        for &route in &self.routes {
            if route.from == route.to {
                return Err(InstanceError::invalid("routes", format!("self-loop {route} is not allowed")));
            }
            for end in [route.from, route.to] {
                if !seen.contains(&end) {
                    return Err(InstanceError::invalid("routes", format!("route {route} references undeclared node {end}")));
                }
            }
            if !seen_routes.insert(route) {
                return Err(InstanceError::invalid("routes", format!("duplicate route {route}")));
            }
        }
        if self.horizon == 0 {
            return Err(InstanceError::invalid("horizon", "must be at least 1"));
        }
        if self.lengths == 0 {
            return Err(InstanceError::invalid("lengths", "must be at least 1"));
        }

        let d = self.dims();
        let p = &self.params;
        check_len("cc", &p.cc, d.route_periods())?;
        check_len("wo", &p.wo, d.nodes)?;
        check_len("uo", &p.uo, d.nodes * d.horizon)?;
        check_len("wc", &p.wc, d.site_length_periods())?;
        check_len("we", &p.we, d.route_periods())?;
        check_len("ccv", &p.ccv, d.site_periods())?;
        check_len("ccf", &p.ccf, d.site_periods())?;
        check_len("ccc", &p.ccc, d.site_lengths())?;
        if let Some(ahd) = &p.ahd {
            check_len("ahd", ahd, d.route_periods())?;
            check_range("ahd", ahd, 0.0, f64::INFINITY)?;
        }
        if let Some(w) = &p.w {
            check_len("w", w, d.route_periods())?;
            check_range("w", w, 0.0, f64::INFINITY)?;
        }

        check_range("cc", &p.cc, 0.0, 1.0)?;
        check_range("wo", &p.wo, 0.0, f64::INFINITY)?;
        check_range("uo", &p.uo, 0.0, 1.0)?;
        check_range("wc", &p.wc, 0.0, 1.0)?;
        check_range("ccv", &p.ccv, 0.0, f64::INFINITY)?;
        check_range("ccf", &p.ccf, 0.0, f64::INFINITY)?;
        check_range("ccc", &p.ccc, 0.0, f64::INFINITY)?;
        for (i, &we) in p.we.iter().enumerate() {
            if !(we > 0.0 && we <= 1.0) {
                return Err(InstanceError::invalid("we", format!("entry {i} = {we} outside (0, 1]")));
            }
        }
        check_range("ma", &[p.ma], 0.0, 1.0)?;
        if let Some(b) = p.budget {
            check_range("budget", &[b], 0.0, f64::INFINITY)?;
        }
        if let Some(m) = p.big_m {
            if !(m.is_finite() && m > 0.0) {
                return Err(InstanceError::invalid("big_m", format!("{m} must be positive and finite")));
            }
        }
        for r in 0..d.routes {
            for m in 0..d.sites {
                for l in 0..d.lengths {
                    for t in 0..d.horizon {
                        let v = self.delivered(r, m, l, t);
                        if v > 1.0 {
                            return Err(InstanceError::invalid(
                                "wc",
                                format!("we*wc = {v} exceeds 1 on route {} site {m} length {l} period {t}", self.routes[r]),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Copy restricted to the first `horizon` periods.
    pub fn truncated(&self, horizon: usize) -> Result<NetworkInstance, InstanceError> {
        if horizon == 0 || horizon > self.horizon {
            return Err(InstanceError::invalid(
                "horizon",
                format!("cannot truncate a {}-period instance to {horizon} periods", self.horizon),
            ));
        }
        let t_old = self.horizon;
        let cut = |v: &[f64]| -> Vec<f64> { v.chunks(t_old).flat_map(|c| c[..horizon].iter().copied()).collect() };
        let p = &self.params;
        let params = InstanceParams {
            cc: cut(&p.cc),
            ahd: p.ahd.as_deref().map(cut),
            w: p.w.as_deref().map(cut),
            wo: p.wo.clone(),
            uo: cut(&p.uo),
            wc: cut(&p.wc),
            we: cut(&p.we),
            ccv: cut(&p.ccv),
            ccf: cut(&p.ccf),
            ccc: p.ccc.clone(),
            ma: p.ma,
            budget: p.budget,
            big_m: p.big_m,
        };
        Ok(NetworkInstance { horizon, params, ..self.clone() })
    }

    /// Copy with a different minimum acceptable charge level.
    pub fn with_ma(&self, ma: f64) -> NetworkInstance {
        let mut out = self.clone();
        out.params.ma = ma;
        out
    }
}

fn check_len(field: &str, v: &[f64], expected: usize) -> Result<(), InstanceError> {
    if v.len() != expected {
        return Err(InstanceError::invalid(field, format!("expected {expected} entries, found {}", v.len())));
    }
    Ok(())
}

fn check_range(field: &str, v: &[f64], lo: f64, hi: f64) -> Result<(), InstanceError> {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() || x < lo || x > hi {
            return Err(InstanceError::invalid(field, format!("entry {i} = {x} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Fills `w` from `ahd` (used raw) unless `w` is already present.
pub fn derive_weights(instance: &NetworkInstance) -> Result<NetworkInstance, InstanceError> {
    if instance.params.w.is_some() {
        return Ok(instance.clone());
    }
    let ahd = instance
        .params
        .ahd
        .as_ref()
        .ok_or_else(|| InstanceError::invalid("ahd", "hourly traffic flow required to derive weights"))?;
    if ahd.len() != instance.dims().route_periods() {
        return Err(InstanceError::invalid("ahd", "missing entries for some route/period"));
    }
    let mut out = instance.clone();
    out.params.w = Some(ahd.clone());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyReport {
    /// Topological node order when the route graph is acyclic.
    pub order: Option<Vec<NodeId>>,
    /// Strongly connected node groups that contain a cycle.
    pub cycles: Vec<Vec<NodeId>>,
    /// Nodes without inbound routes.
    pub sources: Vec<NodeId>,
}

impl TopologyReport {
    pub fn is_acyclic(&self) -> bool {
        self.order.is_some()
    }
}

/// Kahn ordering with smallest-id tie-breaking; cyclic graphs report their
/// cyclic strongly connected components instead.
pub fn topology_report(instance: &NetworkInstance) -> TopologyReport {
    let mut succ: BTreeMap<NodeId, Vec<NodeId>> = instance.nodes.iter().map(|&n| (n, Vec::new())).collect();
    let mut indeg: BTreeMap<NodeId, usize> = instance.nodes.iter().map(|&n| (n, 0)).collect();
    for r in &instance.routes {
        succ.entry(r.from).or_default().push(r.to);
        *indeg.entry(r.to).or_default() += 1;
    }
    for list in succ.values_mut() {
        list.sort_unstable();
    }
    let sources: Vec<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();

    let mut remaining = indeg.clone();
    let mut heap: BinaryHeap<Reverse<NodeId>> = sources.iter().map(|&n| Reverse(n)).collect();
    let mut order = Vec::with_capacity(instance.nodes.len());
    while let Some(Reverse(n)) = heap.pop() {
        order.push(n);
        for &s in &succ[&n] {
            let d = remaining.get_mut(&s).expect("declared node");
            *d -= 1;
            if *d == 0 {
                heap.push(Reverse(s));
            }
        }
    }
    if order.len() == instance.nodes.len() {
        return TopologyReport { order: Some(order), cycles: Vec::new(), sources };
    }
    TopologyReport { order: None, cycles: cyclic_components(&succ), sources }
}

/// Route indices ordered so every route comes after all routes entering its
/// origin; `None` when the graph has a cycle.
pub fn route_order(instance: &NetworkInstance) -> Option<Vec<usize>> {
    let order = topology_report(instance).order?;
    let mut routes = Vec::with_capacity(instance.routes.len());
    for n in order {
        routes.extend(instance.routes.iter().enumerate().filter(|(_, r)| r.from == n).map(|(i, _)| i));
    }
    Some(routes)
}

/// Tarjan's algorithm, keeping components of size > 1.
fn cyclic_components(succ: &BTreeMap<NodeId, Vec<NodeId>>) -> Vec<Vec<NodeId>> {
    struct State<'a> {
        succ: &'a BTreeMap<NodeId, Vec<NodeId>>,
        index: HashMap<NodeId, usize>,
        low: HashMap<NodeId, usize>,
        on_stack: HashSet<NodeId>,
        stack: Vec<NodeId>,
        next: usize,
        out: Vec<Vec<NodeId>>,
    }
    fn visit(s: &mut State<'_>, v: NodeId) {
        s.index.insert(v, s.next);
        s.low.insert(v, s.next);
        s.next += 1;
        s.stack.push(v);
        s.on_stack.insert(v);
        for &w in &s.succ[&v] {
            if !s.index.contains_key(&w) {
                visit(s, w);
                let lw = s.low[&w];
                let lv = s.low.get_mut(&v).unwrap();
                *lv = (*lv).min(lw);
            } else if s.on_stack.contains(&w) {
                let iw = s.index[&w];
                let lv = s.low.get_mut(&v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if s.low[&v] == s.index[&v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on_stack.remove(&w);
                comp.push(w);
                if w == v {
                    break;
                }
            }
            if comp.len() > 1 {
                comp.sort_unstable();
                s.out.push(comp);
            }
        }
    }
    let mut s = State {
        succ,
        index: HashMap::new(),
        low: HashMap::new(),
        on_stack: HashSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for &v in succ.keys() {
        if !s.index.contains_key(&v) {
            visit(&mut s, v);
        }
    }
    s.out.sort();
    s.out
}
