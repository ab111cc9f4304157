//! Plain-text dump of a [`ConicProgram`], one record per line. Meant for
//! debugging and for reproducing a solve outside the planner.
//!
//! ```text
//! vars 3
//! offset 0.5
//! P 0 0 2
//! q 1 -1
//! block soc 3
//! row 1
//! row 0 0:-1
//! row 0 1:-1
//! bound 2 0 inf
//! binary 2
//! ```

use std::fmt::Write as _;

use super::program::{ConicProgram, ConstraintBlock, SparseRow};
use crate::cones::Cone;
use crate::error::{Error, Result};

pub fn write_program(prog: &ConicProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vars {}", prog.num_vars());
    let _ = writeln!(out, "offset {}", prog.offset());
    for (i, j, v) in prog.quadratic() {
        let _ = writeln!(out, "P {i} {j} {v}");
    }
    for (i, &v) in prog.linear().iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(out, "q {i} {v}");
        }
    }
    for block in prog.blocks() {
        let (kind, size) = match block.cone {
            Cone::Zero(d) => ("zero", d),
            Cone::Nonnegative(d) => ("nonneg", d),
            Cone::SecondOrder(d) => ("soc", d),
            Cone::PositiveSemidefinite { side } => ("psd", side),
        };
        let _ = writeln!(out, "block {kind} {size}");
        for (row, off) in block.rows.iter().zip(&block.offsets) {
            let _ = write!(out, "row {off}");
            for (j, v) in row {
                let _ = write!(out, " {j}:{v}");
            }
            out.push('\n');
        }
    }
    for (i, b) in prog.bounds() {
        let _ = writeln!(out, "bound {i} {} {}", b.lower, b.upper);
    }
    for i in prog.binaries() {
        let _ = writeln!(out, "binary {i}");
    }
    out
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        what: "program dump".into(),
        message: format!("line {line}: {msg}"),
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, "missing field"))?
        .parse()
        .map_err(|_| parse_err(line, "bad number"))
}

pub fn read_program(text: &str) -> Result<ConicProgram> {
    let mut prog: Option<ConicProgram> = None;
    let mut pending: Option<(Cone, Vec<SparseRow>, Vec<f64>)> = None;

    fn flush(prog: &mut ConicProgram, pending: &mut Option<(Cone, Vec<SparseRow>, Vec<f64>)>) -> Result<()> {
        if let Some((cone, rows, offs)) = pending.take() {
            prog.add_block(ConstraintBlock::new(cone, rows, offs)?)?;
        }
        Ok(())
    }

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut toks = raw.split_whitespace();
        let key = toks.next().unwrap();
        if key == "vars" {
            if prog.is_some() {
                return Err(parse_err(line, "duplicate vars record"));
            }
            prog = Some(ConicProgram::new(num(toks.next(), line)?));
            continue;
        }
        let p = prog.as_mut().ok_or_else(|| parse_err(line, "vars must come first"))?;
        if key != "row" {
            flush(p, &mut pending)?;
        }
        match key {
            "offset" => p.add_offset(num(toks.next(), line)?),
            "P" => {
                let i = num(toks.next(), line)?;
                let j = num(toks.next(), line)?;
                p.add_quadratic(i, j, num(toks.next(), line)?)?;
            }
            "q" => {
                let i = num(toks.next(), line)?;
                p.add_linear(i, num(toks.next(), line)?)?;
            }
            "block" => {
                let kind = toks.next().ok_or_else(|| parse_err(line, "missing cone"))?;
                let size: usize = num(toks.next(), line)?;
                let cone = match kind {
                    "zero" => Cone::Zero(size),
                    "nonneg" => Cone::Nonnegative(size),
                    "soc" => Cone::SecondOrder(size),
                    "psd" => Cone::PositiveSemidefinite { side: size },
                    other => return Err(parse_err(line, format!("unknown cone {other:?}"))),
                };
                pending = Some((cone, Vec::new(), Vec::new()));
            }
            "row" => {
                let (_, rows, offs) = pending
                    .as_mut()
                    .ok_or_else(|| parse_err(line, "row outside a block"))?;
                offs.push(num(toks.next(), line)?);
                let mut row = Vec::new();
                for t in toks.by_ref() {
                    let (j, v) = t.split_once(':').ok_or_else(|| parse_err(line, "expected col:value"))?;
                    row.push((num(Some(j), line)?, num(Some(v), line)?));
                }
                rows.push(row);
            }
            "bound" => {
                let i = num(toks.next(), line)?;
                let lo = num(toks.next(), line)?;
                p.set_bounds(i, lo, num(toks.next(), line)?)?;
            }
            "binary" => {
                let i: usize = num(toks.next(), line)?;
                let b = p.bound(i);
                p.mark_binary(i)?;
                if let Some(b) = b {
                    p.set_bounds(i, b.lower, b.upper)?;
                }
            }
            other => return Err(parse_err(line, format!("unknown record {other:?}"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
    }
    let mut p = prog.ok_or_else(|| parse_err(0, "empty dump"))?;
    flush(&mut p, &mut pending)?;
    Ok(p)
}
