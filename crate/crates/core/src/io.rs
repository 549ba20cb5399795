//! Text formats: matrix files and number formatting.
//!
//! A matrix file holds one or more blocks. Each block starts with a header
//! `psdm <real|complex> <n>` followed by `n` rows of `n` numbers (complex rows
//! interleave real and imaginary parts), or `frame <real|complex> <n> <k>`
//! followed by `n` rows of `k` numbers. Blank lines and `#` comments are ignored.

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt::Write as _;

/// `x` with `digits` significant digits, plain notation for moderate
/// exponents and at least one fractional digit.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let mut s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.push('0');
            }
        } else {
            s.push_str(".0");
        }
        s
    } else {
        let mut m = mant.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{m}e{exp}")
    }
}

/// JSON number with 17 significant digits; `null` when not finite.
pub fn json_number(x: f64) -> String {
    if x.is_finite() {
        format_sig(x, 17)
    } else {
        "null".into()
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_exact(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        let s = format!("{x}");
        if s.contains('.') {
            s
        } else {
            s + ".0"
        }
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Psd,
    Frame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub matrix: AnyMatrix,
}

impl AnyMatrix {
    pub fn field(&self) -> Field {
        match self {
            AnyMatrix::Real(_) => Field::Real,
            AnyMatrix::Complex(_) => Field::Complex,
        }
    }

    /// Converts to entry type `T`; real data is promoted, complex data
    /// requires a complex `T`.
    pub fn into_scalar<T: Scalar>(self) -> Result<DMatrix<T>> {
        match self {
            AnyMatrix::Real(m) => Ok(m.map(|v| T::from_parts(v, 0.0))),
            AnyMatrix::Complex(m) => {
                if T::FIELD == Field::Complex {
                    Ok(m.map(|v| T::from_parts(v.re, v.im)))
                } else {
                    Err(Error::Parse {
                        line: 1,
                        msg: "complex matrix requires --field complex".into(),
                    })
                }
            }
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses every block in a matrix file.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let mut blocks = Vec::new();
    while let Some((ln, header)) = lines.next() {
        let toks: Vec<&str> = header.split_whitespace().collect();
        let kind = match toks.first().copied() {
            Some("psdm") => BlockKind::Psd,
            Some("frame") => BlockKind::Frame,
            _ => {
                return Err(perr(
                    ln,
                    format!("expected a 'psdm' or 'frame' header, found '{header}'"),
                ))
            }
        };
        let field = match toks.get(1).copied() {
            Some("real") => Field::Real,
            Some("complex") => Field::Complex,
            other => return Err(perr(ln, format!("unknown field {other:?}"))),
        };
        let dim = |i: usize| -> Result<usize> {
            toks.get(i)
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| perr(ln, "missing or invalid dimension"))
        };
        let rows = dim(2)?;
        let cols = match kind {
            BlockKind::Psd => {
                if toks.len() != 3 {
                    return Err(perr(ln, "psdm header takes a field and one dimension"));
                }
                rows
            }
            BlockKind::Frame => {
                if toks.len() != 4 {
                    return Err(perr(ln, "frame header takes a field and two dimensions"));
                }
                dim(3)?
            }
        };
        let width = cols * if field == Field::Complex { 2 } else { 1 };
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            let (rl, row) = lines
                .next()
                .ok_or_else(|| perr(ln, format!("expected {rows} rows, found {r}")))?;
            let vals: Vec<f64> = row
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| perr(rl, format!("bad number '{t}'"))))
                .collect::<Result<_>>()?;
            if vals.len() != width {
                return Err(perr(rl, format!("expected {width} numbers, found {}", vals.len())));
            }
            data.extend(vals);
        }
        let matrix = match field {
            Field::Real => AnyMatrix::Real(DMatrix::from_row_slice(rows, cols, &data)),
            Field::Complex => AnyMatrix::Complex(DMatrix::from_fn(rows, cols, |i, j| {
                Complex64::new(data[i * width + 2 * j], data[i * width + 2 * j + 1])
            })),
        };
        blocks.push(Block { kind, matrix });
    }
    Ok(blocks)
}

/// Exactly one square matrix block.
pub fn parse_matrix(text: &str) -> Result<AnyMatrix> {
    let mut blocks = parse_blocks(text)?;
    if blocks.len() != 1 {
        return Err(perr(1, format!("expected one matrix, found {}", blocks.len())));
    }
    let b = blocks.remove(0);
    if b.kind != BlockKind::Psd {
        return Err(perr(1, "expected a 'psdm' block"));
    }
    Ok(b.matrix)
}

fn write_rows<T: Scalar>(out: &mut String, m: &DMatrix<T>) {
    for i in 0..m.nrows() {
        let mut row = Vec::with_capacity(m.ncols() * T::real_dim());
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            row.push(format_exact(v.re()));
            if T::FIELD == Field::Complex {
                row.push(format_exact(v.im()));
            }
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub fn write_matrix<T: Scalar>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "psdm {} {}", T::FIELD, m.nrows());
    write_rows(&mut out, m);
    out
}

pub fn write_frame<T: Scalar>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "frame {} {} {}", T::FIELD, m.nrows(), m.ncols());
    write_rows(&mut out, m);
    out
}
