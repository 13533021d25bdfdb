//! Seeded instance generation and the MA / solar sensitivity sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charge_flow::PadAssignment;
use crate::error::{Error, InstanceError};
use crate::exec::{self, Execution};
use crate::formulation::{apply_capacity, build_model, FormulationOptions};
use crate::network::{InstanceParams, NetworkInstance, NodeId, Provenance, Route};
use crate::solver::{solve_milp, SolveStatus, SolverConfig};

pub const GENERATOR_NAME: &str = "padplan-example8";

/// Default sweep horizon (one day of hourly periods).
pub const DEFAULT_HORIZON: usize = 24;
/// Thirty days of hourly periods.
pub const MONTH_HORIZON: usize = 24 * 30;

pub const DEFAULT_MA_VALUES: [f64; 9] = [0.2, 0.27, 0.3, 0.4, 0.5, 0.6, 0.7, 0.74, 0.8];
pub const DEFAULT_SOLAR_FRACTIONS: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
/// MA used for the solar sweep.
pub const SOLAR_MA: f64 = 0.7;
/// Relative gap for sweep rows. Tighter gaps leave the larger rows running
/// for minutes; each row reports its proven bound alongside the cost.
pub const SWEEP_GAP: f64 = 1e-3;

/// Solver settings used by the sweeps.
pub fn sweep_config() -> SolverConfig {
    SolverConfig { gap: SWEEP_GAP, ..SolverConfig::default() }
}

/// Formulation used by the sweeps: per-route pad counts are branched on
/// before individual sites.
pub fn sweep_options() -> FormulationOptions {
    FormulationOptions { count_columns: true, ..FormulationOptions::default() }
}

/// Seed of the bundled example instance.
pub const BUNDLED_SEED: u64 = 2;
const BUNDLED_TEXT: &str = include_str!("../../../assets/example8.toml");

/// The bundled eight-node example: [`GeneratorSpec::table3`] with
/// [`BUNDLED_SEED`] over [`DEFAULT_HORIZON`] periods.
pub fn bundled_instance() -> NetworkInstance {
    crate::instance_file::parse_instance(BUNDLED_TEXT).expect("bundled instance parses")
}

/// Weighted routes of the eight-node example network.
pub const EXAMPLE_ROUTES: [(NodeId, NodeId, f64); 10] = [
    (1, 2, 3.0),
    (2, 5, 5.0),
    (1, 3, 7.0),
    (3, 7, 5.0),
    (3, 4, 3.0),
    (4, 5, 8.0),
    (4, 6, 4.0),
    (5, 6, 4.0),
    (6, 8, 7.0),
    (7, 8, 8.0),
];

/// Parameter distributions and constants for [`generate_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub name: String,
    pub nodes: Vec<NodeId>,
    /// Routes with their (time-invariant) inflow weight.
    pub routes: Vec<(NodeId, NodeId, f64)>,
    pub sites: usize,
    /// `wc` by length index; its size is the number of lengths.
    pub wc: Vec<f64>,
    pub cc: (f64, f64),
    pub ccv: (f64, f64),
    pub ccf: (f64, f64),
    pub ccc: f64,
    pub uo: f64,
    pub wo: f64,
    pub we: f64,
    pub ma: f64,
}

impl GeneratorSpec {
    /// The eight-node, ten-route example with three sites and three lengths.
    pub fn example(seed: u64) -> Self {
        Self {
            seed,
            name: "example8".into(),
            nodes: (1..=8).collect(),
            routes: EXAMPLE_ROUTES.to_vec(),
            sites: 3,
            wc: vec![0.04, 0.08, 0.12],
            cc: (0.06, 0.12),
            ccv: (10.0, 14.0),
            ccf: (100.0, 110.0),
            ccc: 10000.0,
            uo: 0.5,
            wo: 2.0,
            we: 1.0,
            ma: 0.4,
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for (name, (lo, hi)) in [("cc", self.cc), ("ccv", self.ccv), ("ccf", self.ccf)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(InstanceError::invalid(name, format!("distribution bounds ({lo}, {hi}) are not ordered")));
            }
        }
        if self.wc.is_empty() {
            return Err(InstanceError::invalid("wc", "at least one length is required"));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws a deterministic instance. Random draws are made in three passes,
/// each in row-major index order: `cc[route][t]`, then `ccv[route][site][t]`,
/// then `ccf[route][site][t]`.
pub fn generate_instance(spec: &GeneratorSpec, horizon: usize) -> Result<NetworkInstance, InstanceError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nr = spec.routes.len();
    let lengths = spec.wc.len();
    let sites = spec.sites;

    let cc: Vec<f64> = (0..nr * horizon).map(|_| uniform(&mut rng, spec.cc)).collect();
    let ccv: Vec<f64> = (0..nr * sites * horizon).map(|_| uniform(&mut rng, spec.ccv)).collect();
    let ccf: Vec<f64> = (0..nr * sites * horizon).map(|_| uniform(&mut rng, spec.ccf)).collect();

    let mut w = Vec::with_capacity(nr * horizon);
    for &(_, _, weight) in &spec.routes {
        w.extend(std::iter::repeat_n(weight, horizon));
    }
    let mut wc = Vec::with_capacity(nr * sites * lengths * horizon);
    for _ in 0..nr * sites {
        for &v in &spec.wc {
            wc.extend(std::iter::repeat_n(v, horizon));
        }
    }
    let instance = NetworkInstance {
        name: spec.name.clone(),
        nodes: spec.nodes.clone(),
        routes: spec.routes.iter().map(|&(a, b, _)| Route::new(a, b)).collect(),
        horizon,
        sites_per_route: sites,
        lengths,
        params: InstanceParams {
            cc,
            ahd: None,
            w: Some(w),
            wo: vec![spec.wo; spec.nodes.len()],
            uo: vec![spec.uo; spec.nodes.len() * horizon],
            wc,
            we: vec![spec.we; nr * horizon],
            ccv,
            ccf,
            ccc: vec![spec.ccc; nr * sites * lengths],
            ma: spec.ma,
            budget: None,
            big_m: None,
        },
        provenance: Some(Provenance { seed: spec.seed, generator: GENERATOR_NAME.into() }),
    };
    instance.validate()?;
    Ok(instance)
}

/// Short label for a length index: `S`/`M`/`L` for three lengths.
pub fn length_label(l: usize, lengths: usize) -> String {
    match (lengths, l) {
        (3, 0) => "S".into(),
        (3, 1) => "M".into(),
        (3, 2) => "L".into(),
        _ => format!("l{}", l + 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    MinimumCharge,
    Solar,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::MinimumCharge => "ma",
            SweepKind::Solar => "solar",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub value: f64,
    /// Solver status, or `None` when the row failed with an error.
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
    pub cost: Option<f64>,
    /// Proven lower bound on the optimal cost.
    pub bound: Option<f64>,
    /// Cost decrease relative to the first row, in percent (solar sweep).
    pub decrease_pct: Option<f64>,
    pub pads_by_length: Vec<usize>,
    /// Selected sites as `route/site:length`, sites counted from 1.
    pub selected_sites: Vec<String>,
    pub nodes: u64,
    /// Rounded placement, kept for downstream checks; not serialized.
    pub assignment: Option<PadAssignment>,
}

impl SweepRow {
    pub fn status_str(&self) -> &'static str {
        self.status.map_or("error", SolveStatus::as_str)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub instance: String,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub ma: Option<f64>,
    pub grid_cap: Option<f64>,
    pub solar_cap: Option<f64>,
    pub config: SolverConfig,
    pub rows: Vec<SweepRow>,
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn fmt_cost(v: f64) -> String {
    format!("{v:.6}")
}

impl SweepReport {
    pub const CSV_HEADER: [&'static str; 12] =
        ["scenario", "parameter", "value", "status", "total_cost", "bound", "decrease_pct", "small", "medium", "large", "selected_sites", "nodes"];

    /// One row per scenario. Length counts beyond three are folded into the
    /// `large` column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            let count = |i: usize| row.pads_by_length.get(i).copied().unwrap_or(0);
            let large: usize = row.pads_by_length.iter().skip(2).sum();
            let record = [
                row.label.clone(),
                self.kind.as_str().to_string(),
                fmt_num(row.value),
                row.status_str().to_string(),
                row.cost.map(fmt_cost).unwrap_or_default(),
                row.bound.map(fmt_cost).unwrap_or_default(),
                row.decrease_pct.map(|v| format!("{v:.2}")).unwrap_or_default(),
                count(0).to_string(),
                count(1).to_string(),
                large.to_string(),
                row.selected_sites.join(" "),
                row.nodes.to_string(),
            ];
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Same content plus provenance, as TOML.
    pub fn to_toml(&self) -> String {
        use toml::{Table, Value};
        let mut doc = Table::new();
        doc.insert("sweep".into(), Value::String(self.kind.as_str().into()));
        doc.insert("instance".into(), Value::String(self.instance.clone()));
        if let Some(seed) = self.seed {
            doc.insert("seed".into(), seed_value(seed));
        }
        doc.insert("horizon".into(), Value::Integer(self.horizon as i64));
        if let Some(ma) = self.ma {
            doc.insert("ma".into(), Value::Float(ma));
        }
        if let Some(g) = self.grid_cap {
            doc.insert("grid_cap".into(), Value::Float(g));
        }
        if let Some(s) = self.solar_cap {
            doc.insert("solar_cap".into(), Value::Float(s));
        }
        doc.insert("solver".into(), Value::Table(config_table(&self.config)));
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut t = Table::new();
                t.insert("scenario".into(), Value::String(row.label.clone()));
                t.insert("value".into(), Value::Float(row.value));
                t.insert("status".into(), Value::String(row.status_str().into()));
                if let Some(e) = &row.error {
                    t.insert("error".into(), Value::String(e.clone()));
                }
                if let Some(c) = row.cost {
                    t.insert("total_cost".into(), Value::Float(c));
                }
                if let Some(b) = row.bound {
                    t.insert("bound".into(), Value::Float(b));
                }
                if let Some(d) = row.decrease_pct {
                    t.insert("decrease_pct".into(), Value::Float(d));
                }
                t.insert("pads_by_length".into(), Value::Array(row.pads_by_length.iter().map(|&n| Value::Integer(n as i64)).collect()));
                t.insert("selected_sites".into(), Value::Array(row.selected_sites.iter().cloned().map(Value::String).collect()));
                t.insert("nodes".into(), Value::Integer(row.nodes as i64));
                Value::Table(t)
            })
            .collect();
        doc.insert("rows".into(), Value::Array(rows));
        toml::to_string(&doc).expect("serializable table")
    }
}

pub fn seed_value(seed: u64) -> toml::Value {
    match i64::try_from(seed) {
        Ok(v) => toml::Value::Integer(v),
        Err(_) => toml::Value::String(seed.to_string()),
    }
}

/// Solver settings as a TOML table, for reports and solution provenance.
pub fn config_table(c: &SolverConfig) -> toml::Table {
    use toml::Value;
    let mut t = toml::Table::new();
    t.insert("feasibility_tol".into(), Value::Float(c.feasibility_tol));
    t.insert("integrality_tol".into(), Value::Float(c.integrality_tol));
    t.insert("gap".into(), Value::Float(c.gap));
    if let Some(n) = c.node_limit {
        t.insert("node_limit".into(), Value::Integer(n as i64));
    }
    if let Some(d) = c.time_limit {
        t.insert("time_limit_s".into(), Value::Float(d.as_secs_f64()));
    }
    let branching = match c.branching {
        crate::solver::Branching::MostFractional => "most-fractional",
        crate::solver::Branching::PseudoCost => "pseudo-cost",
    };
    t.insert("branching".into(), Value::String(branching.into()));
    t.insert("seed".into(), seed_value(c.seed));
    t
}

/// Builds and solves one scenario; failures become an error row.
fn solve_row(instance: &NetworkInstance, label: String, value: f64, config: &SolverConfig, options: &FormulationOptions) -> SweepRow {
    let mut row = SweepRow {
        label,
        value,
        status: None,
        error: None,
        cost: None,
        bound: None,
        decrease_pct: None,
        pads_by_length: vec![0; instance.lengths],
        selected_sites: Vec::new(),
        nodes: 0,
        assignment: None,
    };
    let outcome = build_model(instance, options).map_err(Error::from).and_then(|(model, map)| {
        let res = solve_milp(&model, config)?;
        Ok((res, map))
    });
    match outcome {
        Err(e) => row.error = Some(e.to_string()),
        Ok((res, map)) => {
            row.status = Some(res.status);
            row.nodes = res.stats.nodes;
            row.bound = res.bound.is_finite().then_some(res.bound);
            if let (Some(obj), Some(values)) = (res.objective, res.values.as_ref()) {
                let assign = map.assignment(values);
                row.cost = Some(obj);
                row.pads_by_length = assign.counts_by_length();
                row.selected_sites = selected_sites(instance, &assign);
                row.assignment = Some(assign);
            }
        }
    }
    row
}

/// `route/site:length` for every built site, in column order.
pub fn selected_sites(instance: &NetworkInstance, assign: &PadAssignment) -> Vec<String> {
    let d = assign.dims;
    let mut out = Vec::new();
    for r in 0..d.routes {
        for m in 0..d.sites {
            if let Some(l) = assign.selected_length(r, m) {
                out.push(format!("{}/{}:{}", instance.routes[r], m + 1, length_label(l, d.lengths)));
            }
        }
    }
    out
}

fn ensure_ascending(values: &[f64], what: &str) -> Result<(), Error> {
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Format(format!("{what} values must be finite and sorted ascending")));
    }
    Ok(())
}

pub fn sweep_ma(instance: &NetworkInstance, ma_values: &[f64], config: &SolverConfig) -> Result<SweepReport, Error> {
    sweep_ma_with(instance, ma_values, config, &sweep_options(), Execution::default())
}

/// Solves `instance` once per MA value; rows keep input order whatever the
/// execution mode.
pub fn sweep_ma_with(
    instance: &NetworkInstance,
    ma_values: &[f64],
    config: &SolverConfig,
    options: &FormulationOptions,
    execution: Execution,
) -> Result<SweepReport, Error> {
    ensure_ascending(ma_values, "MA")?;
    config.validate()?;
    let rows = exec::map_slice(execution, ma_values, |&ma| solve_row(&instance.with_ma(ma), format!("ma={ma}"), ma, config, options));
    Ok(SweepReport {
        kind: SweepKind::MinimumCharge,
        instance: instance.name.clone(),
        seed: instance.provenance.as_ref().map(|p| p.seed),
        horizon: instance.horizon,
        ma: None,
        grid_cap: None,
        solar_cap: None,
        config: config.clone(),
        rows,
    })
}

/// Default grid and solar caps for the solar sweep: the grid covers every
/// nominal rating, solar adds at most half the largest one per pad.
pub fn default_caps(instance: &NetworkInstance) -> (f64, f64) {
    let top = instance.params.wc.iter().copied().fold(0.0, f64::max);
    (top, 0.5 * top)
}

pub fn sweep_solar(instance: &NetworkInstance, fractions: &[f64], grid_cap: f64, solar_cap: f64, config: &SolverConfig) -> Result<SweepReport, Error> {
    sweep_solar_with(instance, fractions, grid_cap, solar_cap, config, &sweep_options(), Execution::default())
}

/// Applies the capacity transform per fraction and solves; the decrease
/// column is relative to the first row's cost.
pub fn sweep_solar_with(
    instance: &NetworkInstance,
    fractions: &[f64],
    grid_cap: f64,
    solar_cap: f64,
    config: &SolverConfig,
    options: &FormulationOptions,
    execution: Execution,
) -> Result<SweepReport, Error> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::Format("solar fractions must lie in [0, 1]".into()));
    }
    if !(grid_cap >= 0.0 && solar_cap >= 0.0) {
        return Err(Error::Format("grid and solar caps must be nonnegative".into()));
    }
    config.validate()?;
    let mut rows = exec::map_slice(execution, fractions, |&f| {
        let derived = apply_capacity(instance, grid_cap, solar_cap, f);
        solve_row(&derived, format!("solar={f}"), f, config, options)
    });
    if let Some(base) = rows.first().and_then(|r| r.cost) {
        for row in &mut rows {
            if base > 0.0 {
                row.decrease_pct = row.cost.map(|c| 100.0 * (base - c) / base);
            }
        }
    }
    Ok(SweepReport {
        kind: SweepKind::Solar,
        instance: instance.name.clone(),
        seed: instance.provenance.as_ref().map(|p| p.seed),
        horizon: instance.horizon,
        ma: Some(instance.params.ma),
        grid_cap: Some(grid_cap),
        solar_cap: Some(solar_cap),
        config: config.clone(),
        rows,
    })
}
