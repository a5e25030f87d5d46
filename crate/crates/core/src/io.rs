//! Plain-text formats.
//!
//! Step function: a `depth=D` header, then one value per line in leaf order.
//! Weight: the same with a `floor=ε` line after the header.
//! Operator matrix: a `rows cols source-id target-id` header, then one
//! whitespace-separated row per line.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::dyadic::{Grid, StepFunction};
use crate::error::{Error, Result};
use crate::operators::OperatorMatrix;
use crate::weights::{Weight, WEIGHT_FLOOR};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        // `{:?}` prints the shortest representation that round-trips.
        writeln!(out, "{v:?}").expect("writing to a String");
    }
}

pub fn write_step_function(f: &StepFunction) -> String {
    let mut out = format!("depth={}\n", f.grid().depth());
    push_values(&mut out, f.values());
    out
}

pub fn write_weight(w: &Weight) -> String {
    let mut out = format!("depth={}\nfloor={:?}\n", w.grid().depth(), w.floor());
    push_values(&mut out, w.values());
    out
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn header<'a>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str)> {
    let (no, line) = it.next().ok_or_else(|| parse_error(0, format!("missing `{key}=` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .map(|value| (no, value.trim()))
        .ok_or_else(|| parse_error(no, format!("expected `{key}=`")))
}

fn read_values<'a>(grid: Grid, it: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(grid.cells());
    for (no, line) in it {
        let v: f64 = line
            .parse()
            .map_err(|_| parse_error(no, format!("`{line}` is not a number")))?;
        values.push(v);
    }
    if values.len() != grid.cells() {
        return Err(Error::DimensionMismatch {
            expected: grid.cells(),
            found: values.len(),
        });
    }
    Ok(values)
}

fn read_grid<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Grid> {
    let (no, depth) = header(it, "depth")?;
    let depth: u32 = depth
        .parse()
        .map_err(|_| parse_error(no, format!("`{depth}` is not a depth")))?;
    Grid::new(depth)
}

pub fn read_step_function(text: &str) -> Result<StepFunction> {
    let mut it = lines(text);
    let grid = read_grid(&mut it)?;
    StepFunction::new(grid, read_values(grid, it)?)
}

/// Values below the floor are raised to it, as on construction.
pub fn read_weight(text: &str) -> Result<Weight> {
    let mut it = lines(text);
    let grid = read_grid(&mut it)?;
    let (no, floor) = header(&mut it, "floor")?;
    let floor: f64 = floor
        .parse()
        .map_err(|_| parse_error(no, format!("`{floor}` is not a number")))?;
    if floor != WEIGHT_FLOOR {
        return Err(parse_error(no, format!("unsupported floor {floor}; expected {WEIGHT_FLOOR:?}")));
    }
    Weight::new(StepFunction::new(grid, read_values(grid, it)?)?)
}

pub fn write_matrix(m: &OperatorMatrix) -> String {
    let mut out = format!("{} {} {} {}\n", m.rows(), m.cols(), m.source_weight, m.target_weight);
    for row in m.matrix.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(text: &str) -> Result<OperatorMatrix> {
    let mut it = lines(text);
    let (no, head) = it.next().ok_or_else(|| parse_error(0, "empty matrix file"))?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    let [rows, cols, source, target] = fields[..] else {
        return Err(parse_error(no, "expected `rows cols source-id target-id`"));
    };
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|_| parse_error(no, format!("`{s}` is not a size")));
    let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (no, line) in it {
        let before = data.len();
        for cell in line.split_whitespace() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(no, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(no, "matrix entries must be finite"));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_error(no, format!("expected {cols} entries, found {}", data.len() - before)));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: seen,
        });
    }
    Ok(OperatorMatrix::new(
        DMatrix::from_row_slice(rows, cols, &data),
        source,
        target,
    ))
}
