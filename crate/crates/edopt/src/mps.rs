//! Fixed-format MPS writer and a reader for the subset it emits.
//!
//! Fields start at the classic columns 2, 5, 15, 25, 40 and 50. Names
//! longer than the 8-character fields push later fields to the right, so
//! the reader splits on whitespace; sanitized names never contain blanks.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use edopt_core::milp::{MilpModel, Relation, VarKind};

use crate::error::EdoptError;

const MAX_NAME: usize = 255;
const OBJECTIVE_ROW: &str = "obj";

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    out.truncate(MAX_NAME);
    out
}

/// Sanitized, unique names; a clash gets the declaration index appended.
fn unique_names<'a>(
    names: impl Iterator<Item = &'a str>,
    prefix: char,
    taken: &mut HashSet<String>,
) -> Vec<String> {
    names
        .enumerate()
        .map(|(idx, raw)| {
            let mut name = sanitize(raw);
            if name.is_empty() || taken.contains(&name) {
                let suffix = format!("_{prefix}{idx}");
                name.truncate(MAX_NAME - suffix.len());
                name.push_str(&suffix);
            }
            taken.insert(name.clone());
            name
        })
        .collect()
}

fn field_line(out: &mut String, code: &str, fields: &[&str]) {
    // columns 2-3 for the code, then name fields at 5, 15, 25, 40, 50
    const STARTS: [usize; 5] = [4, 14, 24, 39, 49];
    let mut line = format!(" {code}");
    for (field, &start) in fields.iter().zip(&STARTS) {
        if line.len() < start {
            line.push_str(&" ".repeat(start - line.len()));
        } else {
            line.push(' ');
        }
        line.push_str(field);
    }
    out.push_str(&line);
    out.push('\n');
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn export_mps(model: &MilpModel) -> String {
    let mut taken = HashSet::from([OBJECTIVE_ROW.to_string()]);
    let rows = unique_names(
        model.constraints.iter().map(|c| c.name.as_str()),
        'r',
        &mut taken,
    );
    let cols = unique_names(
        model.variables.iter().map(|v| v.name.as_str()),
        'c',
        &mut taken,
    );

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", sanitize(&model.name));
    out.push_str("ROWS\n");
    field_line(&mut out, "N", &[OBJECTIVE_ROW]);
    for (con, name) in model.constraints.iter().zip(&rows) {
        let code = match con.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        field_line(&mut out, code, &[name]);
    }
    if model.variables.is_empty() {
        out.push_str("ENDATA\n");
        return out;
    }

    let mut entries: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.variables.len()];
    for &(v, c) in &model.objective {
        entries[v].push((OBJECTIVE_ROW, c));
    }
    for (con, name) in model.constraints.iter().zip(&rows) {
        for &(v, c) in &con.terms {
            entries[v].push((name, c));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    let mut markers = 0;
    for (j, var) in model.variables.iter().enumerate() {
        let integral = var.kind.is_integral();
        if integral != in_marker {
            let tag = if integral { "'INTORG'" } else { "'INTEND'" };
            let marker = format!("MARKER{markers:02}");
            field_line(&mut out, "", &[&marker, "'MARKER'", "", tag]);
            markers += usize::from(!integral);
            in_marker = integral;
        }
        if entries[j].is_empty() {
            field_line(&mut out, "", &[&cols[j], OBJECTIVE_ROW, "0"]);
        }
        for &(row, c) in &entries[j] {
            field_line(&mut out, "", &[&cols[j], row, &num(c)]);
        }
    }
    if in_marker {
        let marker = format!("MARKER{markers:02}");
        field_line(&mut out, "", &[&marker, "'MARKER'", "", "'INTEND'"]);
    }

    out.push_str("RHS\n");
    for (con, name) in model.constraints.iter().zip(&rows) {
        if con.rhs != 0.0 {
            field_line(&mut out, "", &["RHS", name, &num(con.rhs)]);
        }
    }

    out.push_str("BOUNDS\n");
    for (var, name) in model.variables.iter().zip(&cols) {
        let (lo, up) = (var.lower, var.upper);
        if var.kind == VarKind::Binary && lo == 0.0 && up == 1.0 {
            field_line(&mut out, "BV", &["BND", name]);
            continue;
        }
        if lo == up {
            field_line(&mut out, "FX", &["BND", name, &num(lo)]);
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => field_line(&mut out, "FR", &["BND", name]),
            (false, true) => {
                field_line(&mut out, "MI", &["BND", name]);
                field_line(&mut out, "UP", &["BND", name, &num(up)]);
            }
            (true, finite_up) => {
                // integer columns always carry explicit bounds: readers
                // disagree on their defaults
                if lo != 0.0 || var.kind.is_integral() {
                    field_line(&mut out, "LO", &["BND", name, &num(lo)]);
                }
                if finite_up {
                    field_line(&mut out, "UP", &["BND", name, &num(up)]);
                } else if var.kind.is_integral() {
                    field_line(&mut out, "PL", &["BND", name]);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

fn parse_num(line: usize, tok: &str) -> Result<f64, EdoptError> {
    tok.parse::<f64>().map_err(|_| EdoptError::Mps {
        line,
        message: format!("`{tok}` is not a number"),
    })
}

/// Reads the MPS subset written by [`export_mps`]: N/L/G/E rows, integer
/// markers, RHS and the UP/LO/FX/FR/MI/PL/BV/LI/UI bound types. RANGES and
/// objective constants are rejected.
pub fn parse_mps(text: &str) -> Result<MilpModel, EdoptError> {
    let mut model = MilpModel::new("");
    let mut section = Section::Start;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut integral = false;
    let mut lower_set: Vec<bool> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| EdoptError::Mps { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match toks[0] {
                "NAME" => {
                    model.name = toks.get(1).unwrap_or(&"").to_string();
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(format!("unsupported section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [code, name] = toks[..] else {
                    return Err(err("row needs a type and a name".into()));
                };
                let relation = match code {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name.into());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    other => return Err(err(format!("unknown row type `{other}`"))),
                };
                if row_index
                    .insert(name.into(), model.constraints.len())
                    .is_some()
                {
                    return Err(err(format!("duplicate row `{name}`")));
                }
                model.add_constraint(name.into(), Vec::new(), relation, 0.0);
                terms.push(Vec::new());
            }
            Section::Columns => {
                if toks.get(1) == Some(&"'MARKER'") {
                    match toks.last() {
                        Some(&"'INTORG'") => integral = true,
                        Some(&"'INTEND'") => integral = false,
                        _ => return Err(err("unknown marker".into())),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err("column entry needs 3 or 5 fields".into()));
                }
                let name = toks[0];
                let col = match col_index.get(name) {
                    Some(&c) => c,
                    None => {
                        let (kind, upper) = if integral {
                            (VarKind::Integer, f64::INFINITY)
                        } else {
                            (VarKind::Continuous, f64::INFINITY)
                        };
                        let c = model.add_variable(name.into(), kind, 0.0, upper);
                        lower_set.push(false);
                        col_index.insert(name.into(), c);
                        c
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let value = parse_num(line, pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        if value != 0.0 {
                            model.objective.push((col, value));
                        }
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        terms[r].push((col, value));
                    } else {
                        return Err(err(format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err("RHS entry needs 3 or 5 fields".into()));
                }
                for pair in toks[1..].chunks(2) {
                    let value = parse_num(line, pair[1])?;
                    match row_index.get(pair[0]) {
                        Some(&r) => model.constraints[r].rhs = value,
                        None if objective_row.as_deref() == Some(pair[0]) => {
                            return Err(err("objective constants are not supported".into()))
                        }
                        None => return Err(err(format!("unknown row `{}`", pair[0]))),
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(err("bound needs a type, a set and a column".into()));
                }
                let col = *col_index
                    .get(toks[2])
                    .ok_or_else(|| err(format!("unknown column `{}`", toks[2])))?;
                let value = match toks.get(3) {
                    Some(tok) => Some(parse_num(line, tok)?),
                    None => None,
                };
                let need = || value.ok_or_else(|| err(format!("{} bound needs a value", toks[0])));
                let var = &mut model.variables[col];
                match toks[0] {
                    "UP" => {
                        let v = need()?;
                        var.upper = v;
                        if v < 0.0 && !lower_set[col] {
                            var.lower = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => {
                        var.lower = need()?;
                        lower_set[col] = true;
                    }
                    "FX" => {
                        let v = need()?;
                        var.lower = v;
                        var.upper = v;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "BV" => {
                        var.kind = VarKind::Binary;
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                    "LI" => {
                        var.kind = VarKind::Integer;
                        var.lower = need()?;
                        lower_set[col] = true;
                    }
                    "UI" => {
                        var.kind = VarKind::Integer;
                        var.upper = need()?;
                    }
                    other => return Err(err(format!("unknown bound type `{other}`"))),
                }
            }
            Section::Start | Section::End => {
                return Err(err("data line outside a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(EdoptError::Mps {
            line: text.lines().count(),
            message: "missing ENDATA".into(),
        });
    }
    for (con, t) in model.constraints.iter_mut().zip(terms) {
        let mut t = t;
        t.sort_by_key(|&(v, _)| v);
        con.terms = t;
    }
    model.objective.sort_by_key(|&(v, _)| v);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> MilpModel {
        let mut m = MilpModel::new("small");
        let x = m.add_variable("x[1]".into(), VarKind::Binary, 0.0, 1.0);
        let y = m.add_variable("y".into(), VarKind::Continuous, -2.0, 4.5);
        let z = m.add_variable("z".into(), VarKind::Integer, 0.0, f64::INFINITY);
        m.objective = vec![(x, 1.0), (y, -0.25), (z, 3.0)];
        m.add_constraint("c=1".into(), vec![(x, 1.0), (y, 2.0)], Relation::Le, 3.0);
        m.add_constraint("c=2".into(), vec![(z, 1.0), (y, -1.0)], Relation::Ge, -1.5);
        m.add_constraint("c=3".into(), vec![(x, 1.0), (z, 1.0)], Relation::Eq, 1.0);
        m
    }

    #[test]
    fn empty_model_is_header_rows_endata() {
        let text = export_mps(&MilpModel::new("empty"));
        assert_eq!(text, "NAME          empty\nROWS\n N  obj\nENDATA\n");
        let back = parse_mps(&text).unwrap();
        assert!(back.variables.is_empty() && back.constraints.is_empty());
    }

    #[test]
    fn binary_column_is_wrapped_in_markers() {
        let mut m = MilpModel::new("one");
        m.add_variable("b".into(), VarKind::Binary, 0.0, 1.0);
        let text = export_mps(&m);
        let lines: Vec<&str> = text.lines().collect();
        let org = lines.iter().position(|l| l.contains("'INTORG'")).unwrap();
        let end = lines.iter().position(|l| l.contains("'INTEND'")).unwrap();
        let col = lines
            .iter()
            .position(|l| l.trim_start().starts_with("b "))
            .unwrap();
        assert!(org < col && col < end);
        assert!(text.contains(" BV BND       b\n"));
    }

    #[test]
    fn names_are_sanitized_and_unique() {
        let mut m = MilpModel::new("n");
        m.add_variable("a[1]".into(), VarKind::Continuous, 0.0, 1.0);
        m.add_variable("a_1_".into(), VarKind::Continuous, 0.0, 1.0);
        m.add_variable("x".repeat(300), VarKind::Continuous, 0.0, 1.0);
        let back = parse_mps(&export_mps(&m)).unwrap();
        assert_eq!(back.variables[0].name, "a_1_");
        assert_eq!(back.variables[1].name, "a_1__c1");
        assert_eq!(back.variables[2].name.len(), MAX_NAME);
    }

    #[test]
    fn round_trip_preserves_structure() {
        let m = small_model();
        let back = parse_mps(&export_mps(&m)).unwrap();
        assert_eq!(back.variables.len(), 3);
        for (a, b) in m.variables.iter().zip(&back.variables) {
            assert_eq!((a.kind, a.lower, a.upper), (b.kind, b.lower, b.upper));
        }
        assert_eq!(back.objective, m.objective);
        for (a, b) in m.constraints.iter().zip(&back.constraints) {
            assert_eq!((&a.terms, a.relation, a.rhs), (&b.terms, b.relation, b.rhs));
        }
        assert_eq!(export_mps(&back), export_mps(&m));
    }

    #[test]
    fn rejects_ranges_and_missing_endata() {
        assert!(matches!(
            parse_mps("NAME x\nROWS\n N  obj\nRANGES\nENDATA\n"),
            Err(EdoptError::Mps { line: 4, .. })
        ));
        assert!(parse_mps("NAME x\nROWS\n N  obj\n").is_err());
    }
}
