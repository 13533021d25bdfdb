//! Model exchange: free-format MPS (read and write) and CPLEX-style LP text
//! (write only).
//!
//! Numbers are written in Rust's shortest round-trip form, so a written
//! model reads back bit-identical. Integer columns are fenced with
//! `MARKER INTORG` / `INTEND` and always carry explicit bounds, since some
//! readers give bare integer columns an implicit upper bound of one.
//! Branching priorities have no MPS representation and read back as zero.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::MpsError;
use crate::model::{MilpModel, Relation, Variable};

fn objective_row_name(model: &MilpModel) -> String {
    let mut name = String::from("COST");
    while model.constraints.iter().any(|c| c.name == name) {
        name.push('_');
    }
    name
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "1e30".into()
    } else if v == f64::NEG_INFINITY {
        "-1e30".into()
    } else {
        format!("{v}")
    }
}

pub fn write_mps(model: &MilpModel) -> String {
    let obj = objective_row_name(model);
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", if model.name.is_empty() { "model" } else { &model.name });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {obj}");
    for c in &model.constraints {
        let tag = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {tag}  {}", c.name);
    }

    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            per_col[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (j, v) in model.variables.iter().enumerate() {
        if v.integer != in_int {
            let kind = if v.integer { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER{markers:04} 'MARKER' '{kind}'");
            markers += 1;
            in_int = v.integer;
        }
        let cost = model.objective[j];
        let entries = &per_col[j];
        if cost != 0.0 || entries.is_empty() {
            let _ = writeln!(out, "    {} {obj} {}", v.name, num(cost));
        }
        for &(i, a) in entries {
            let _ = writeln!(out, "    {} {} {}", v.name, model.constraints[i].name, num(a));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{markers:04} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", c.name, num(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for v in &model.variables {
        let n = &v.name;
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            let _ = writeln!(out, " FX BND {n} {}", num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " FR BND {n}");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND {n}");
        } else if lo != 0.0 || v.integer {
            let _ = writeln!(out, " LO BND {n} {}", num(lo));
        }
        if hi != f64::INFINITY {
            let _ = writeln!(out, " UP BND {n} {}", num(hi));
        } else if v.integer {
            let _ = writeln!(out, " PL BND {n}");
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

fn parse_num(s: &str, line: usize) -> Result<f64, MpsError> {
    let v: f64 = s.parse().map_err(|_| MpsError::Parse { line, message: format!("invalid number `{s}`") })?;
    Ok(if v >= 1e30 {
        f64::INFINITY
    } else if v <= -1e30 {
        f64::NEG_INFINITY
    } else {
        v
    })
}

/// Parses free-format MPS (fixed-format files whose names contain no spaces
/// parse as well). `RANGES` and `OBJSENSE` sections are not supported.
pub fn read_mps(text: &str) -> Result<MilpModel, MpsError> {
    let mut model = MilpModel::new("");
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;
    // columns that already received an explicit bound entry
    let mut bounded: Vec<bool> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |message: String| MpsError::Parse { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(format!("unsupported section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [kind, name] = fields[..] else { return Err(err("expected `<type> <name>`".into())) };
                let relation = match kind {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    other => return Err(err(format!("unknown row type `{other}`"))),
                };
                if row_index.insert(name.to_string(), model.num_rows()).is_some() {
                    return Err(err(format!("duplicate row `{name}`")));
                }
                model.add_constraint(name, Vec::new(), relation, 0.0);
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1].trim_matches('\'') == "MARKER" {
                    match fields[2].trim_matches('\'') {
                        "INTORG" => in_int = true,
                        "INTEND" => in_int = false,
                        other => return Err(err(format!("unknown marker `{other}`"))),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected `<column> <row> <value> [<row> <value>]`".into()));
                }
                let col = fields[0];
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let (lo, hi) = (0.0, f64::INFINITY);
                        let j = model.add_var(col, lo, hi, in_int, 0.0);
                        col_index.insert(col.to_string(), j);
                        bounded.push(false);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        model.objective[j] += value;
                    } else {
                        let &i = row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                        model.constraints[i].coeffs.push((j, value));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected `<set> <row> <value> [<row> <value>]`".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let value = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        return Err(err("objective constants are not supported".into()));
                    }
                    let &i = row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                    model.constraints[i].rhs = value;
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err("expected `<type> <set> <column> [<value>]`".into()));
                }
                let kind = fields[0];
                let &j = col_index.get(fields[2]).ok_or_else(|| err(format!("unknown column `{}`", fields[2])))?;
                let value = match fields.get(3) {
                    Some(s) => Some(parse_num(s, line)?),
                    None => None,
                };
                let need = |v: Option<f64>| v.ok_or_else(|| err(format!("bound `{kind}` needs a value")));
                let v: &mut Variable = &mut model.variables[j];
                match kind {
                    "UP" => v.upper = need(value)?,
                    "LO" => v.lower = need(value)?,
                    "FX" => {
                        let x = need(value)?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "BV" => {
                        v.lower = 0.0;
                        v.upper = 1.0;
                        v.integer = true;
                    }
                    "LI" => {
                        v.lower = need(value)?;
                        v.integer = true;
                    }
                    "UI" => {
                        v.upper = need(value)?;
                        v.integer = true;
                    }
                    other => return Err(err(format!("unknown bound type `{other}`"))),
                }
                bounded[j] = true;
            }
            Section::None => return Err(err("data before the first section".into())),
            Section::Done => return Err(err("data after ENDATA".into())),
        }
    }
    if section != Section::Done {
        return Err(MpsError::Parse { line: text.lines().count(), message: "missing ENDATA".into() });
    }
    // integer columns without any bound entry follow the binary convention
    for (v, &b) in model.variables.iter_mut().zip(&bounded) {
        if v.integer && !b {
            v.upper = 1.0;
        }
    }
    Ok(model)
}

pub fn save_mps(path: impl AsRef<Path>, model: &MilpModel) -> Result<(), MpsError> {
    crate::fsutil::write_atomic(path.as_ref(), write_mps(model).as_bytes())?;
    Ok(())
}

pub fn load_mps(path: impl AsRef<Path>) -> Result<MilpModel, MpsError> {
    read_mps(&std::fs::read_to_string(path)?)
}

fn lp_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut width = 0;
    let mut first = true;
    for (a, name) in terms {
        let sign = if a < 0.0 { "-" } else { "+" };
        let term = if first && a >= 0.0 { format!(" {} {name}", num(a.abs())) } else { format!(" {sign} {} {name}", num(a.abs())) };
        if width + term.len() > 240 {
            out.push_str("\n  ");
            width = 2;
        }
        width += term.len();
        out.push_str(&term);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// CPLEX LP text.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n obj:");
    let names = |j: usize| model.variables[j].name.clone();
    lp_terms(&mut out, model.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (c, names(j))));
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        lp_terms(&mut out, c.coeffs.iter().map(|&(j, a)| (a, names(j))));
        let op = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let (lo, hi) = (v.lower, v.upper);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if lo == hi {
            let _ = writeln!(out, " {} = {}", v.name, num(lo));
        } else if hi == f64::INFINITY {
            if lo != 0.0 {
                let _ = writeln!(out, " {} >= {}", v.name, num(lo));
            }
        } else {
            let lo_s = if lo == f64::NEG_INFINITY { "-inf".to_string() } else { num(lo) };
            let _ = writeln!(out, " {lo_s} <= {} <= {}", v.name, num(hi));
        }
    }
    let ints: Vec<&str> = model.variables.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MilpModel {
        let mut m = MilpModel::new("toy");
        let x = m.add_binary("x", 3.0);
        let y = m.add_continuous("y", -1.5, 4.0, -1.0);
        let z = m.add_var("z", f64::NEG_INFINITY, f64::INFINITY, false, 0.25);
        m.add_constraint("c1", vec![(x, 1.0), (y, 2.0)], Relation::Le, 5.0);
        m.add_constraint("c2", vec![(y, 1.0), (z, -1.0)], Relation::Ge, 0.1);
        m.add_constraint("c3", vec![(x, 1.0), (z, 1.0)], Relation::Eq, 2.0);
        m
    }

    #[test]
    fn writes_all_sections_and_markers() {
        let text = write_mps(&toy());
        for section in ["NAME toy", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(text.contains(section), "missing {section}");
        }
        assert!(text.contains("'MARKER' 'INTORG'"));
        assert!(text.contains("'MARKER' 'INTEND'"));
        assert!(text.contains(" FR BND z"));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = toy();
        let back = read_mps(&write_mps(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bare_integer_columns_default_to_binary() {
        let text = "NAME t\nROWS\n N obj\n L r\nCOLUMNS\n M1 'MARKER' 'INTORG'\n x obj 1 r 1\n M2 'MARKER' 'INTEND'\nRHS\n RHS r 1\nENDATA\n";
        let m = read_mps(text).unwrap();
        assert!(m.variables[0].integer);
        assert_eq!((m.variables[0].lower, m.variables[0].upper), (0.0, 1.0));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "NAME t\nROWS\n N obj\nCOLUMNS\n x nowhere 1\nENDATA\n";
        match read_mps(text) {
            Err(MpsError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_mps("NAME t\nROWS\n").is_err());
    }

    #[test]
    fn lp_text_lists_rows_bounds_and_integers() {
        let text = write_lp(&toy());
        assert!(text.starts_with("\\ toy\nMinimize\n obj: 3 x - 1 y + 0.25 z\n"));
        assert!(text.contains(" c1: 1 x + 2 y <= 5\n"));
        assert!(text.contains(" c3: 1 x + 1 z = 2\n"));
        assert!(text.contains(" z free\n"));
        assert!(text.contains(" -1.5 <= y <= 4\n"));
        assert!(text.contains("General\n x\n"));
    }
}
