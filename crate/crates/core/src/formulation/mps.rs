//! Fixed-format MPS export.
//!
//! Rows are named `R0000001..`, columns `C0000001..` (1-based, 8 characters)
//! and the objective row is `OBJ`. `≥` rows are written as `G`, equalities as
//! `E`. Binary columns sit between `INTORG`/`INTEND` markers. Every column
//! gets explicit bounds (`FX`, or `LO`/`UP` with `MI`/`PL` for infinite
//! sides). A nonzero objective constant `k` is written as `-k` on the `OBJ`
//! row of the `RHS` section. Numbers are printed in at most 12 characters,
//! exactly when the shortest round-trip form fits.

use std::io::{self, Write};

use super::MilpModel;
use crate::lp::RowSense;

pub fn write_mps_string(model: &MilpModel, name: &str) -> String {
    let mut buf = Vec::new();
    write_mps(model, name, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("mps output is ascii")
}

pub fn write_mps<W: Write>(model: &MilpModel, name: &str, out: &mut W) -> io::Result<()> {
    let lp = &model.lp;
    let row_name = |i: usize| format!("R{:07}", i + 1);
    let col_name = |j: usize| format!("C{:07}", j + 1);

    writeln!(out, "NAME          {name}")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  OBJ")?;
    for (i, s) in lp.sense.iter().enumerate() {
        let kind = match s {
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        writeln!(out, " {kind:<2} {}", row_name(i))?;
    }

    writeln!(out, "COLUMNS")?;
    let mut in_int = false;
    let mut marker = 0;
    for j in 0..lp.num_cols() {
        if model.integer[j] != in_int {
            let tag = if model.integer[j] { "'INTORG'" } else { "'INTEND'" };
            writeln!(out, "    M{marker:07}  'MARKER'                 {tag}")?;
            marker += 1;
            in_int = model.integer[j];
        }
        let c = col_name(j);
        if lp.cost[j] != 0.0 || lp.a.col_nnz(j) == 0 {
            entry(out, "", &c, "OBJ", lp.cost[j])?;
        }
        for (i, v) in lp.a.col(j) {
            entry(out, "", &c, &row_name(i), v)?;
        }
    }
    if in_int {
        writeln!(out, "    M{marker:07}  'MARKER'                 'INTEND'")?;
    }

    writeln!(out, "RHS")?;
    if lp.obj_offset != 0.0 {
        entry(out, "", "RHS", "OBJ", -lp.obj_offset)?;
    }
    for (i, r) in lp.rhs.iter().enumerate() {
        if *r != 0.0 {
            entry(out, "", "RHS", &row_name(i), *r)?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..lp.num_cols() {
        let c = col_name(j);
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo == hi {
            entry(out, "FX", "BND", &c, lo)?;
            continue;
        }
        if lo == f64::NEG_INFINITY {
            writeln!(out, " MI BND       {c}")?;
        } else {
            entry(out, "LO", "BND", &c, lo)?;
        }
        if hi == f64::INFINITY {
            writeln!(out, " PL BND       {c}")?;
        } else {
            entry(out, "UP", "BND", &c, hi)?;
        }
    }
    writeln!(out, "ENDATA")
}

fn entry<W: Write>(out: &mut W, kind: &str, first: &str, second: &str, value: f64) -> io::Result<()> {
    writeln!(out, " {kind:<2} {first:<8}  {second:<8}  {:>12}", format_number(value))
}

/// Shortest representation of `v` that fits in 12 characters.
pub(crate) fn format_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (0..=10).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_fit_the_field() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-0.25), "-0.25");
        for v in [1.0 / 3.0, -123456789.123, 1e-300, 6.02214076e23, -2.0 / 7.0] {
            let s = format_number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs(), "{v} -> {s}");
        }
    }
}
