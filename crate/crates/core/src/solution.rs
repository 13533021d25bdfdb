//! Solution files: a plain TOML record of one solve.
//!
//! ```toml
//! schema = 1
//! instance = "example8"
//! status = "optimal"
//! objective = 87762.5
//! bound = 87730.2
//! config_hash = "5f0c…"
//!
//! [config]            # everything needed to re-run the solve
//! ma = 0.4
//! seed = 2
//!
//! [[pads]]
//! route = "1->3"
//! site = 2            # counted from 1
//! length = 3          # counted from 1
//!
//! [switching]         # per-route on/off runs over the horizon
//! "1->3" = "0*5 1*3 0*16"
//! ```
//!
//! `config_hash` is the SHA-256 of the serialized `[config]` table, so two
//! files with the same hash came from the same inputs.

use std::path::Path;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::charge_flow::PadAssignment;
use crate::error::Error;
use crate::network::{NetworkInstance, Route};
use crate::solver::SolveStatus;

pub const SOLUTION_SCHEMA: i64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFile {
    pub instance: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// Run settings; hashed into `config_hash`.
    pub config: Table,
    pub assignment: Option<PadAssignment>,
}

/// Hex SHA-256 of the canonical serialization of `config`.
pub fn config_hash(config: &Table) -> String {
    let text = toml::to_string(config).expect("serializable table");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run-length encoding of an on/off sequence: `"0*5 1*3 0*16"`.
pub fn encode_runs(bits: impl IntoIterator<Item = bool>) -> String {
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for b in bits {
        match runs.last_mut() {
            Some((v, n)) if *v == b => *n += 1,
            _ => runs.push((b, 1)),
        }
    }
    runs.iter().map(|&(v, n)| format!("{}*{n}", u8::from(v))).collect::<Vec<_>>().join(" ")
}

pub fn decode_runs(text: &str) -> Result<Vec<bool>, Error> {
    let mut out = Vec::new();
    for run in text.split_whitespace() {
        let bad = || Error::Format(format!("bad run `{run}`, expected `<0|1>*<count>`"));
        let (v, n) = run.split_once('*').ok_or_else(bad)?;
        let on = match v {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        let n: usize = n.parse().map_err(|_| bad())?;
        out.extend(std::iter::repeat_n(on, n));
    }
    Ok(out)
}

fn route_label(route: Route) -> String {
    format!("{}->{}", route.from, route.to)
}

fn status_from_str(s: &str) -> Option<SolveStatus> {
    [SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded, SolveStatus::TimeLimit].into_iter().find(|st| st.as_str() == s)
}

impl SolutionFile {
    pub fn config_hash(&self) -> String {
        config_hash(&self.config)
    }

    pub fn to_toml_string(&self, instance: &NetworkInstance) -> String {
        let mut doc = Table::new();
        doc.insert("schema".into(), Value::Integer(SOLUTION_SCHEMA));
        doc.insert("instance".into(), Value::String(self.instance.clone()));
        doc.insert("status".into(), Value::String(self.status.as_str().into()));
        if let Some(obj) = self.objective {
            doc.insert("objective".into(), Value::Float(obj));
        }
        if let Some(b) = self.bound.filter(|b| b.is_finite()) {
            doc.insert("bound".into(), Value::Float(b));
        }
        doc.insert("config_hash".into(), Value::String(self.config_hash()));
        doc.insert("config".into(), Value::Table(self.config.clone()));
        if let Some(a) = &self.assignment {
            let d = a.dims;
            let mut pads = Vec::new();
            for r in 0..d.routes {
                for m in 0..d.sites {
                    if let Some(l) = a.selected_length(r, m) {
                        let mut t = Table::new();
                        t.insert("route".into(), Value::String(route_label(instance.routes[r])));
                        t.insert("site".into(), Value::Integer(m as i64 + 1));
                        t.insert("length".into(), Value::Integer(l as i64 + 1));
                        pads.push(Value::Table(t));
                    }
                }
            }
            doc.insert("pads".into(), Value::Array(pads));
            let mut switching = Table::new();
            for r in 0..d.routes {
                let bits = (0..d.horizon).map(|t| a.p[d.rt(r, t)]);
                switching.insert(route_label(instance.routes[r]), Value::String(encode_runs(bits)));
            }
            doc.insert("switching".into(), Value::Table(switching));
        }
        toml::to_string(&doc).expect("serializable table")
    }

    /// Parses a solution written for `instance`, checking that every route
    /// and index exists and that the stored hash matches the stored config.
    pub fn parse(text: &str, instance: &NetworkInstance) -> Result<Self, Error> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| Error::Format(e.to_string()))?;
        let fmt = |m: String| Error::Format(m);
        match doc.get("schema").and_then(Value::as_integer) {
            Some(SOLUTION_SCHEMA) => {}
            other => return Err(fmt(format!("unsupported solution schema {other:?}"))),
        }
        let str_field = |k: &str| doc.get(k).and_then(Value::as_str).ok_or_else(|| fmt(format!("missing string `{k}`")));
        let float_field = |k: &str| doc.get(k).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)));
        let status_text = str_field("status")?;
        let status = status_from_str(status_text).ok_or_else(|| fmt(format!("unknown status `{status_text}`")))?;
        let config = doc.get("config").and_then(Value::as_table).cloned().unwrap_or_default();
        let stored = str_field("config_hash")?;
        if stored != config_hash(&config) {
            return Err(fmt("config_hash does not match the [config] table".into()));
        }

        let d = instance.dims();
        let route_index = |label: &str| {
            instance.routes.iter().position(|&r| route_label(r) == label).ok_or_else(|| fmt(format!("unknown route `{label}`")))
        };
        let assignment = match doc.get("pads") {
            None => None,
            Some(pads) => {
                let mut a = PadAssignment::empty(d);
                for pad in pads.as_array().ok_or_else(|| fmt("`pads` must be an array".into()))? {
                    let t = pad.as_table().ok_or_else(|| fmt("pad entries must be tables".into()))?;
                    let r = route_index(t.get("route").and_then(Value::as_str).ok_or_else(|| fmt("pad without route".into()))?)?;
                    let index = |k: &str, n: usize| -> Result<usize, Error> {
                        let v = t.get(k).and_then(Value::as_integer).ok_or_else(|| fmt(format!("pad without `{k}`")))?;
                        if v < 1 || v as usize > n {
                            return Err(fmt(format!("pad `{k}` {v} outside 1..={n}")));
                        }
                        Ok(v as usize - 1)
                    };
                    let (m, l) = (index("site", d.sites)?, index("length", d.lengths)?);
                    if a.selected_length(r, m).is_some() {
                        return Err(fmt(format!("site {} of route {} listed twice", m + 1, route_label(instance.routes[r]))));
                    }
                    a.x[d.rml(r, m, l)] = true;
                }
                if let Some(sw) = doc.get("switching") {
                    let sw = sw.as_table().ok_or_else(|| fmt("`switching` must be a table".into()))?;
                    for (label, runs) in sw {
                        let r = route_index(label)?;
                        let bits = decode_runs(runs.as_str().ok_or_else(|| fmt(format!("switching for `{label}` must be a string")))?)?;
                        if bits.len() != d.horizon {
                            return Err(fmt(format!("switching for `{label}` covers {} periods, expected {}", bits.len(), d.horizon)));
                        }
                        for (t, on) in bits.into_iter().enumerate() {
                            a.p[d.rt(r, t)] = on;
                        }
                    }
                }
                Some(a)
            }
        };
        Ok(Self { instance: str_field("instance")?.to_string(), status, objective: float_field("objective"), bound: float_field("bound"), config, assignment })
    }

    pub fn save(&self, path: &Path, instance: &NetworkInstance) -> Result<(), Error> {
        crate::fsutil::write_atomic(path, self.to_toml_string(instance).as_bytes()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path, instance: &NetworkInstance) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::uniform;

    #[test]
    fn runs_round_trip() {
        let bits = [false, false, true, true, true, false, true];
        let text = encode_runs(bits);
        assert_eq!(text, "0*2 1*3 0*1 1*1");
        assert_eq!(decode_runs(&text).unwrap(), bits);
        assert_eq!(encode_runs([]), "");
        assert!(decode_runs("2*3").is_err());
        assert!(decode_runs("1-3").is_err());
    }

    #[test]
    fn file_round_trip_and_hash_check() {
        let inst = uniform(&[1, 2, 3], &[(1, 2), (2, 3)], 2, 3, 4);
        let mut a = PadAssignment::empty(inst.dims()).with_pad(1, 0, 2);
        for t in [0, 1, 3] {
            a.p[inst.dims().rt(1, t)] = false;
        }
        let mut config = Table::new();
        config.insert("ma".into(), Value::Float(0.4));
        let sol = SolutionFile { instance: inst.name.clone(), status: SolveStatus::Optimal, objective: Some(12.5), bound: Some(12.5), config, assignment: Some(a) };
        let text = sol.to_toml_string(&inst);
        assert!(text.contains("\"2->3\" = \"0*2 1*1 0*1\""));
        assert_eq!(SolutionFile::parse(&text, &inst).unwrap(), sol);

        let tampered = text.replace("ma = 0.4", "ma = 0.5");
        assert!(SolutionFile::parse(&tampered, &inst).is_err());
    }

    #[test]
    fn rejects_unknown_routes_and_indices() {
        let inst = uniform(&[1, 2], &[(1, 2)], 1, 2, 3);
        let hash = config_hash(&Table::new());
        let base = format!("schema = 1\ninstance = \"t\"\nstatus = \"optimal\"\nconfig_hash = \"{hash}\"\n");
        let bad_route = format!("{base}[[pads]]\nroute = \"2->1\"\nsite = 1\nlength = 1\n");
        assert!(SolutionFile::parse(&bad_route, &inst).is_err());
        let bad_site = format!("{base}[[pads]]\nroute = \"1->2\"\nsite = 2\nlength = 1\n");
        assert!(SolutionFile::parse(&bad_site, &inst).is_err());
        let ok = format!("{base}[[pads]]\nroute = \"1->2\"\nsite = 1\nlength = 2\n");
        assert_eq!(SolutionFile::parse(&ok, &inst).unwrap().assignment.unwrap().built_sites(), 1);
    }
}
