//! Text formats: field and state CSV, flat key-value JSON.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::discretization::{Field, Grid};
use crate::error::{Error, Result};
use crate::variational::State;

/// Relative tolerance when matching CSV coordinates against grid nodes.
const COORD_TOL: f64 = 1e-12;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_field_csv(mut w: impl Write, f: &Field) -> Result<()> {
    writeln!(w, "coord,value")?;
    for (x, v) in f.grid().nodes().iter().zip(f.values()) {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_state_csv(mut w: impl Write, s: &State) -> Result<()> {
    writeln!(w, "coord,u,v")?;
    for ((x, u), v) in s.grid().nodes().iter().zip(s.u.values()).zip(s.v.values()) {
        writeln!(w, "{},{},{}", fmt_f64(*x), fmt_f64(*u), fmt_f64(*v))?;
    }
    Ok(())
}

/// Reads `header` columns and checks the first column against the grid nodes.
fn read_columns(r: impl BufRead, grid: &Grid, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
    let got: Vec<&str> = first.trim().split(',').map(str::trim).collect();
    if got != header {
        return Err(Error::Parse(format!("expected header `{}`, found `{}`", header.join(","), first.trim())));
    }
    let mut cols = vec![Vec::with_capacity(grid.len()); header.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns", lineno + 2, header.len())));
        }
        for (col, cell) in cols.iter_mut().zip(cells) {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: `{}` is not a number", lineno + 2, cell.trim())))?;
            col.push(x);
        }
    }
    if cols[0].len() != grid.len() {
        return Err(Error::Parse(format!("CSV has {} rows, grid has {} nodes", cols[0].len(), grid.len())));
    }
    let scale = grid.spec().extent;
    for (a, b) in cols[0].iter().zip(grid.nodes()) {
        if (a - b).abs() > COORD_TOL * scale {
            return Err(Error::GridMismatch);
        }
    }
    Ok(cols)
}

pub fn read_field_csv(r: impl BufRead, grid: &Grid) -> Result<Field> {
    let mut cols = read_columns(r, grid, &["coord", "value"])?;
    Field::new(grid, cols.pop().unwrap())
}

pub fn read_state_csv(r: impl BufRead, grid: &Grid) -> Result<State> {
    let mut cols = read_columns(r, grid, &["coord", "u", "v"])?;
    let v = cols.pop().unwrap();
    let u = cols.pop().unwrap();
    State::new(Field::new(grid, u)?, Field::new(grid, v)?)
}

#[derive(Clone, Debug, PartialEq)]
pub enum JsonValue {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
}

impl From<f64> for JsonValue {
    fn from(x: f64) -> Self {
        JsonValue::Num(x)
    }
}
impl From<usize> for JsonValue {
    fn from(x: usize) -> Self {
        JsonValue::Int(x as i64)
    }
}
impl From<u64> for JsonValue {
    fn from(x: u64) -> Self {
        JsonValue::Int(x as i64)
    }
}
impl From<bool> for JsonValue {
    fn from(x: bool) -> Self {
        JsonValue::Bool(x)
    }
}
impl From<&str> for JsonValue {
    fn from(x: &str) -> Self {
        JsonValue::Str(x.to_string())
    }
}
impl From<String> for JsonValue {
    fn from(x: String) -> Self {
        JsonValue::Str(x)
    }
}
impl<T: Into<JsonValue>> From<Option<T>> for JsonValue {
    fn from(x: Option<T>) -> Self {
        x.map_or(JsonValue::Null, Into::into)
    }
}

/// An ordered flat JSON object. Later inserts of an existing key replace it
/// in place.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatJson {
    entries: Vec<(String, JsonValue)>,
}

impl FlatJson {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<JsonValue>) -> &mut Self {
        let key = key.into();
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&JsonValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (k, v)) in self.entries.iter().enumerate() {
            let value = match v {
                JsonValue::Num(x) if x.is_finite() => fmt_f64(*x),
                JsonValue::Num(_) | JsonValue::Null => "null".to_string(),
                JsonValue::Int(n) => n.to_string(),
                JsonValue::Bool(b) => b.to_string(),
                JsonValue::Str(s) => quote(s),
            };
            let sep = if i + 1 < self.entries.len() { "," } else { "" };
            let _ = writeln!(out, "  {}: {value}{sep}", quote(k));
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialisation cannot fail")
}
