//! Instance files: TOML, `schema = 1`.
//!
//! ```toml
//! schema = 1
//! name = "example"
//! nodes = [1, 2, 3]
//! routes = ["1->2", "2->3"]
//! horizon = 24
//! sites_per_route = 3
//! lengths = 3
//!
//! [params]
//! ma = 0.4
//! wo = 2.0                                 # scalar: every node
//! uo = 0.5
//! cc = { "1->2" = [0.07, 0.11], "*" = 0.1 } # per route, "*" is the fallback
//! wc = [[[0.04, 0.08, 0.12]]]               # nested arrays index the next dimension
//! ```
//!
//! A number at any nesting level applies to every remaining index. A table
//! keys the leading dimension (routes as `"i->j"`, nodes by id); a bare array
//! at the top level indexes that dimension in declaration order. An array of
//! length one broadcasts over a dimension of any size. Dimensions after the
//! leading key are: `cc`, `ahd`, `w`, `we`: `[t]`; `uo`: `[t]`; `wo`: none;
//! `ccv`, `ccf`: `[site][t]`; `ccc`: `[site][length]`; `wc`:
//! `[site][length][t]`. `we` defaults to 1. When `w` is absent it is derived
//! from `ahd`.

use std::path::Path;

use toml::{Table, Value};

use crate::error::InstanceError;
use crate::network::{derive_weights, InstanceParams, NetworkInstance, NodeId, Provenance, Route};

pub const SCHEMA_VERSION: i64 = 1;

pub fn load_instance(path: impl AsRef<Path>) -> Result<NetworkInstance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io { path: path.to_path_buf(), source })?;
    parse_instance(&text)
}

pub fn save_instance(path: impl AsRef<Path>, instance: &NetworkInstance) -> Result<(), InstanceError> {
    let path = path.as_ref();
    crate::fsutil::write_atomic(path, instance_to_string(instance).as_bytes())
        .map_err(|source| InstanceError::Io { path: path.to_path_buf(), source })
}

pub fn parse_instance(text: &str) -> Result<NetworkInstance, InstanceError> {
    let doc: Table = toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    let schema = doc.get("schema").and_then(Value::as_integer).ok_or_else(|| InstanceError::invalid("schema", "missing"))?;
    if schema != SCHEMA_VERSION {
        return Err(InstanceError::invalid("schema", format!("unsupported version {schema}")));
    }
    let name = doc.get("name").and_then(Value::as_str).unwrap_or("instance").to_string();
    let nodes: Vec<NodeId> = doc
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::invalid("nodes", "missing node list"))?
        .iter()
        .map(|v| v.as_integer().and_then(|i| NodeId::try_from(i).ok()).ok_or_else(|| InstanceError::invalid("nodes", "node ids must be non-negative integers")))
        .collect::<Result<_, _>>()?;
    let routes: Vec<Route> = doc
        .get("routes")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::invalid("routes", "missing route list"))?
        .iter()
        .map(|v| v.as_str().ok_or_else(|| InstanceError::invalid("routes", "route keys must be strings")).and_then(str::parse))
        .collect::<Result<_, _>>()?;
    let horizon = count(&doc, "horizon")?;
    let sites = count(&doc, "sites_per_route")?;
    let lengths = count(&doc, "lengths")?;
    let provenance = match doc.get("seed") {
        Some(v) => Some(Provenance {
            seed: v
                .as_integer()
                .map(|i| i as u64)
                .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                .ok_or_else(|| InstanceError::invalid("seed", "expected an integer"))?,
            generator: doc.get("generator").and_then(Value::as_str).unwrap_or("").to_string(),
        }),
        None => None,
    };

    let empty = Table::new();
    let params = match doc.get("params") {
        Some(Value::Table(t)) => t,
        Some(_) => return Err(InstanceError::invalid("params", "expected a table")),
        None => &empty,
    };
    for key in params.keys() {
        if !PARAM_KEYS.contains(&key.as_str()) {
            return Err(InstanceError::invalid(key.as_str(), "unknown parameter"));
        }
    }

    let route_keys: Vec<String> = routes.iter().map(Route::to_string).collect();
    let node_keys: Vec<String> = nodes.iter().map(NodeId::to_string).collect();
    let t = horizon;
    let field = |name: &str, keys: &[String], inner: &[usize]| -> Result<Option<Vec<f64>>, InstanceError> {
        params.get(name).map(|v| decode_field(name, v, keys, inner)).transpose()
    };
    let required = |name: &str, keys: &[String], inner: &[usize]| -> Result<Vec<f64>, InstanceError> {
        field(name, keys, inner)?.ok_or_else(|| InstanceError::invalid(name, "missing"))
    };

    let cc = required("cc", &route_keys, &[t])?;
    let ahd = field("ahd", &route_keys, &[t])?;
    let w = field("w", &route_keys, &[t])?;
    let wo = required("wo", &node_keys, &[])?;
    let uo = required("uo", &node_keys, &[t])?;
    let wc = required("wc", &route_keys, &[sites, lengths, t])?;
    let we = field("we", &route_keys, &[t])?.unwrap_or_else(|| vec![1.0; routes.len() * t]);
    let ccv = required("ccv", &route_keys, &[sites, t])?;
    let ccf = required("ccf", &route_keys, &[sites, t])?;
    let ccc = required("ccc", &route_keys, &[sites, lengths])?;
    let ma = scalar(params, "ma")?.ok_or_else(|| InstanceError::invalid("ma", "missing"))?;
    let budget = scalar(params, "budget")?;
    let big_m = scalar(params, "big_m")?;

    let instance = NetworkInstance {
        name,
        nodes,
        routes,
        horizon,
        sites_per_route: sites,
        lengths,
        params: InstanceParams { cc, ahd, w, wo, uo, wc, we, ccv, ccf, ccc, ma, budget, big_m },
        provenance,
    };
    instance.validate()?;
    if instance.params.w.is_none() {
        if instance.params.ahd.is_none() {
            return Err(InstanceError::invalid("w", "provide `w` or `ahd`"));
        }
        return derive_weights(&instance);
    }
    Ok(instance)
}

const PARAM_KEYS: [&str; 13] = ["cc", "ahd", "w", "wo", "uo", "wc", "we", "ccv", "ccf", "ccc", "ma", "budget", "big_m"];

fn count(doc: &Table, key: &str) -> Result<usize, InstanceError> {
    doc.get(key)
        .and_then(Value::as_integer)
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| InstanceError::invalid(key, "expected a non-negative integer"))
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn scalar(params: &Table, key: &str) -> Result<Option<f64>, InstanceError> {
    params
        .get(key)
        .map(|v| number(v).ok_or_else(|| InstanceError::invalid(key, "expected a number")))
        .transpose()
}

fn decode_field(name: &str, v: &Value, keys: &[String], inner: &[usize]) -> Result<Vec<f64>, InstanceError> {
    let block: usize = inner.iter().product();
    match v {
        Value::Table(t) => {
            for k in t.keys() {
                if k != "*" && !keys.contains(k) {
                    return Err(InstanceError::invalid(name, format!("unknown key `{k}`")));
                }
            }
            let mut out = Vec::with_capacity(keys.len() * block);
            for k in keys {
                let item = t
                    .get(k)
                    .or_else(|| t.get("*"))
                    .ok_or_else(|| InstanceError::invalid(name, format!("no value for `{k}` and no `*` default")))?;
                expand(name, item, inner, &mut out)?;
            }
            Ok(out)
        }
        _ => {
            let mut dims = Vec::with_capacity(inner.len() + 1);
            dims.push(keys.len());
            dims.extend_from_slice(inner);
            let mut out = Vec::with_capacity(keys.len() * block);
            expand(name, v, &dims, &mut out)?;
            Ok(out)
        }
    }
}

fn expand(name: &str, v: &Value, dims: &[usize], out: &mut Vec<f64>) -> Result<(), InstanceError> {
    if let Some(x) = number(v) {
        out.extend(std::iter::repeat_n(x, dims.iter().product()));
        return Ok(());
    }
    let Value::Array(items) = v else {
        return Err(InstanceError::invalid(name, "expected a number or an array"));
    };
    let Some((&n, rest)) = dims.split_first() else {
        return Err(InstanceError::invalid(name, "array nested deeper than the field's dimensions"));
    };
    if items.len() == 1 {
        for _ in 0..n {
            expand(name, &items[0], rest, out)?;
        }
        return Ok(());
    }
    if items.len() != n {
        return Err(InstanceError::invalid(name, format!("array has {} entries, expected {n}", items.len())));
    }
    for item in items {
        expand(name, item, rest, out)?;
    }
    Ok(())
}

/// Serializes an instance; output is stable for equal instances.
pub fn instance_to_string(instance: &NetworkInstance) -> String {
    let mut doc = Table::new();
    doc.insert("schema".into(), Value::Integer(SCHEMA_VERSION));
    doc.insert("name".into(), Value::String(instance.name.clone()));
    if let Some(p) = &instance.provenance {
        doc.insert("seed".into(), seed_value(p.seed));
        doc.insert("generator".into(), Value::String(p.generator.clone()));
    }
    doc.insert("nodes".into(), Value::Array(instance.nodes.iter().map(|&n| Value::Integer(n as i64)).collect()));
    doc.insert("routes".into(), Value::Array(instance.routes.iter().map(|r| Value::String(r.to_string())).collect()));
    doc.insert("horizon".into(), Value::Integer(instance.horizon as i64));
    doc.insert("sites_per_route".into(), Value::Integer(instance.sites_per_route as i64));
    doc.insert("lengths".into(), Value::Integer(instance.lengths as i64));

    let d = instance.dims();
    let p = &instance.params;
    let route_keys: Vec<String> = instance.routes.iter().map(Route::to_string).collect();
    let node_keys: Vec<String> = instance.nodes.iter().map(NodeId::to_string).collect();
    let t = d.horizon;
    let mut params = Table::new();
    params.insert("ma".into(), Value::Float(p.ma));
    if let Some(b) = p.budget {
        params.insert("budget".into(), Value::Float(b));
    }
    if let Some(m) = p.big_m {
        params.insert("big_m".into(), Value::Float(m));
    }
    params.insert("cc".into(), encode_field(&p.cc, &route_keys, &[t]));
    if let Some(ahd) = &p.ahd {
        params.insert("ahd".into(), encode_field(ahd, &route_keys, &[t]));
    }
    if let Some(w) = &p.w {
        params.insert("w".into(), encode_field(w, &route_keys, &[t]));
    }
    params.insert("wo".into(), encode_field(&p.wo, &node_keys, &[]));
    params.insert("uo".into(), encode_field(&p.uo, &node_keys, &[t]));
    params.insert("wc".into(), encode_field(&p.wc, &route_keys, &[d.sites, d.lengths, t]));
    params.insert("we".into(), encode_field(&p.we, &route_keys, &[t]));
    params.insert("ccv".into(), encode_field(&p.ccv, &route_keys, &[d.sites, t]));
    params.insert("ccf".into(), encode_field(&p.ccf, &route_keys, &[d.sites, t]));
    params.insert("ccc".into(), encode_field(&p.ccc, &route_keys, &[d.sites, d.lengths]));
    doc.insert("params".into(), Value::Table(params));
    toml::to_string(&doc).expect("instance tables always serialize")
}

fn seed_value(seed: u64) -> Value {
    match i64::try_from(seed) {
        Ok(i) => Value::Integer(i),
        Err(_) => Value::String(seed.to_string()),
    }
}

fn encode_field(values: &[f64], keys: &[String], inner: &[usize]) -> Value {
    if values.is_empty() {
        return Value::Float(0.0);
    }
    if let Some(x) = uniform(values) {
        return Value::Float(x);
    }
    let block: usize = inner.iter().product();
    let chunks: Vec<&[f64]> = values.chunks(block).collect();
    let mut table = Table::new();
    if chunks.windows(2).all(|w| w[0] == w[1]) {
        table.insert("*".into(), compress(chunks[0], inner));
    } else {
        for (k, c) in keys.iter().zip(chunks) {
            table.insert(k.clone(), compress(c, inner));
        }
    }
    Value::Table(table)
}

fn compress(values: &[f64], dims: &[usize]) -> Value {
    if let Some(x) = uniform(values) {
        return Value::Float(x);
    }
    let (&n, rest) = dims.split_first().expect("non-uniform block has a dimension");
    let block = values.len() / n;
    let parts: Vec<&[f64]> = values.chunks(block).collect();
    if parts.windows(2).all(|w| w[0] == w[1]) {
        return Value::Array(vec![compress(parts[0], rest)]);
    }
    Value::Array(parts.into_iter().map(|c| compress(c, rest)).collect())
}

fn uniform(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values.iter().all(|&v| v.to_bits() == first.to_bits()).then_some(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
schema = 1
name = "small"
nodes = [1, 2, 3]
routes = ["1->2", "2->3"]
horizon = 2
sites_per_route = 2
lengths = 3

[params]
ma = 0.4
cc = { "1->2" = [0.07, 0.11], "*" = 0.1 }
w = 3
wo = 2
uo = 0.5
wc = [[[0.04, 0.08, 0.12]]]
ccv = 12
ccf = 105
ccc = 10000
"#;

    #[test]
    fn parses_with_broadcasting_and_defaults() {
        let inst = parse_instance(SMALL).unwrap();
        assert_eq!(inst.routes.len(), 2);
        assert_eq!(inst.params.cc, vec![0.07, 0.11, 0.1, 0.1]);
        assert!(inst.params.we.iter().all(|&x| x == 1.0));
        let d = inst.dims();
        assert_eq!(inst.params.wc[d.rmlt(1, 1, 2, 1)], 0.12);
        assert_eq!(inst.params.wc[d.rmlt(0, 1, 0, 0)], 0.04);
    }

    #[test]
    fn self_loop_file_rejected() {
        let text = SMALL.replace("\"2->3\"]", "\"1->1\"]").replace("\"1->2\" = [0.07, 0.11], ", "");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
    }

    #[test]
    fn malformed_and_missing_fields() {
        assert!(matches!(parse_instance("schema = ["), Err(InstanceError::Parse(_))));
        let err = parse_instance(&SMALL.replace("ccc = 10000", "")).unwrap_err();
        assert!(err.to_string().contains("ccc"));
        let err = parse_instance(&SMALL.replace("wc = [[[0.04, 0.08, 0.12]]]", "wc = [[[0.04, 0.08]]]")).unwrap_err();
        assert!(err.to_string().contains("wc"));
        let err = parse_instance(&SMALL.replace("ma = 0.4", "ma = 1.4")).unwrap_err();
        assert!(err.to_string().contains("ma"));
        let err = parse_instance(&SMALL.replace("schema = 1", "schema = 2")).unwrap_err();
        assert!(err.to_string().contains("schema"));
    }

    #[test]
    fn weights_derived_from_ahd_when_absent() {
        let text = SMALL.replace("w = 3", "ahd = 100");
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.params.w.as_deref(), Some(&[100.0; 4][..]));
        let err = parse_instance(&SMALL.replace("w = 3", "")).unwrap_err();
        assert!(err.to_string().contains("`w`"));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut inst = parse_instance(SMALL).unwrap();
        inst.params.ccv[3] = 13.123456789012345;
        inst.provenance = Some(Provenance { seed: u64::MAX, generator: "test".into() });
        let text = instance_to_string(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_to_string(&back), text);
    }
}
