//! Recomputes every theory column of a result table from the parameter
//! columns of the same row.

use super::output::{Cell, Table};
use super::run::{box_cells, quant_cells, saddle_cells};
use crate::params::{BoxBound, SystemParams};

pub const VERIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub rows: usize,
    pub values_checked: usize,
    /// Largest `|emitted − recomputed| / max(1, |recomputed|)`.
    pub max_diff: f64,
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn num(t: &Table, row: usize, name: &str) -> Result<Option<f64>, String> {
    match t.get(row, name) {
        None | Some(Cell::Empty) => Ok(None),
        Some(c) => c.as_f64().map(Some).ok_or_else(|| format!("row {row}: column {name} is not a number")),
    }
}

fn bound(t: &Table, row: usize, name: &str) -> Result<Option<BoxBound>, String> {
    match t.get(row, name) {
        None | Some(Cell::Empty) => Ok(None),
        Some(Cell::Text(s)) => s.parse().map(Some).map_err(|e| format!("row {row}: column {name}: {e}")),
        Some(c) => c
            .as_f64()
            .map(|v| Some(BoxBound::Finite(v)))
            .ok_or_else(|| format!("row {row}: column {name} is not a bound")),
    }
}

fn required(t: &Table, row: usize, name: &str) -> Result<f64, String> {
    num(t, row, name)?.ok_or_else(|| format!("row {row}: missing parameter column {name}"))
}

fn as_bool(c: &Cell) -> Option<bool> {
    match c {
        Cell::Bool(b) => Some(*b),
        Cell::Text(t) => t.parse().ok(),
        _ => None,
    }
}

/// Compares emitted against recomputed cells of one section. A section that
/// failed to evaluate must have been emitted empty.
fn compare(
    t: &Table,
    row: usize,
    recomputed: crate::Result<Vec<(&'static str, Cell)>>,
    section_cols: &[&str],
    rep: &mut VerifyReport,
) {
    let fresh = recomputed.unwrap_or_default();
    for &col in section_cols {
        let Some(emitted) = t.get(row, col) else { continue };
        let want = fresh.iter().find(|(n, _)| *n == col).map(|(_, c)| c).unwrap_or(&Cell::Empty);
        match (emitted, want) {
            (Cell::Empty, Cell::Empty) => {}
            (_, Cell::Bool(b)) => {
                rep.values_checked += 1;
                if as_bool(emitted) != Some(*b) {
                    rep.mismatches.push(format!("row {row}: {col} emitted {emitted:?}, recomputed {b}"));
                }
            }
            (e, w) => match (e.as_f64(), w.as_f64()) {
                (Some(x), Some(y)) => {
                    rep.values_checked += 1;
                    let d = (x - y).abs() / y.abs().max(1.0);
                    rep.max_diff = rep.max_diff.max(d);
                    if !(d <= VERIFY_TOL) {
                        rep.mismatches.push(format!("row {row}: {col} emitted {x:?}, recomputed {y:?}"));
                    }
                }
                _ => rep.mismatches.push(format!("row {row}: {col} emitted {e:?}, recomputed {w:?}")),
            },
        }
    }
}

pub fn verify_table(t: &Table) -> Result<VerifyReport, String> {
    let mut rep = VerifyReport { rows: t.rows.len(), ..Default::default() };
    for row in 0..t.rows.len() {
        let n = required(t, row, "n")?;
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(format!("row {row}: n must be a positive integer"));
        }
        let base = SystemParams {
            n: n as usize,
            delta: required(t, row, "delta")?,
            lambda: num(t, row, "lambda")?.unwrap_or(0.0),
            a: bound(t, row, "a")?.unwrap_or(BoxBound::Unbounded),
            level: required(t, row, "l")?,
            sigma2: required(t, row, "sigma2")?,
            rho: num(t, row, "rho")?.unwrap_or(1.0),
        };
        if t.column("tau").is_some() {
            compare(t, row, saddle_cells(&base), super::run::SADDLE_COLUMNS, &mut rep);
        }
        if let (Some(lambda), Some(rho)) = (num(t, row, "box_lambda")?, num(t, row, "box_rho")?) {
            let p = base.with_lambda(lambda).with_rho(rho);
            compare(t, row, box_cells(&p), &super::run::BOX_COLUMNS[2..], &mut rep);
        }
        if let (Some(lambda), Some(a)) = (num(t, row, "quant_lambda")?, bound(t, row, "quant_a")?) {
            let p = base.with_lambda(lambda).with_bound(a).with_rho(1.0);
            compare(t, row, quant_cells(&p), &super::run::QUANT_COLUMNS[2..], &mut rep);
        }
    }
    Ok(rep)
}
