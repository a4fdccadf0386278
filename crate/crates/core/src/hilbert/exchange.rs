//! Plain-text operator exchange format.
//!
//! ```text
//! # bevc operator exchange v1
//! dims=[3,3]
//! layout="row-major"
//! meta.epsilon=9.7e-3
//! entries=81
//! (3.3333333333333331e-1, 0.0000000000000000e0)
//! ...
//! ```
//!
//! One `(re, im)` pair per line, matrix rows in flat row-major order, every
//! number printed with 17 significant digits so reads reproduce the bits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::{CMatrix, DensityOperator, Dims};
use crate::config::Tolerances;
use crate::error::{Error, Result};

const HEADER: &str = "# bevc operator exchange v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeDocument {
    pub dims: Dims,
    pub matrix: CMatrix,
    pub meta: BTreeMap<String, String>,
}

impl ExchangeDocument {
    pub fn new(dims: Dims, matrix: CMatrix) -> Self {
        Self {
            dims,
            matrix,
            meta: BTreeMap::new(),
        }
    }

    pub fn from_operator(op: &DensityOperator) -> Self {
        Self::new(op.dims(), op.matrix().clone())
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn into_operator(self, tol: &Tolerances) -> Result<DensityOperator> {
        DensityOperator::new(self.matrix, self.dims, tol)
    }
}

pub fn write_operator<W: Write>(mut w: W, doc: &ExchangeDocument) -> Result<()> {
    let n = doc.dims.total();
    if doc.matrix.nrows() != n || doc.matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: doc.matrix.nrows(),
        });
    }
    writeln!(w, "{HEADER}")?;
    writeln!(w, "dims=[{},{}]", doc.dims.a, doc.dims.b)?;
    writeln!(w, "layout=\"row-major\"")?;
    for (k, v) in &doc.meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::param(format!("metadata key {k:?} is not writable")));
        }
        writeln!(w, "meta.{k}={v}")?;
    }
    writeln!(w, "entries={}", n * n)?;
    for r in 0..n {
        for c in 0..n {
            let z = doc.matrix[(r, c)];
            writeln!(w, "({:.16e}, {:.16e})", z.re, z.im)?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_dims(line: usize, s: &str) -> Result<Dims> {
    let inner = s
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, "dims must look like [d_A,d_B]"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(parse_err(line, "dims needs exactly two entries"));
    }
    let a = parts[0].parse().map_err(|_| parse_err(line, "bad d_A"))?;
    let b = parts[1].parse().map_err(|_| parse_err(line, "bad d_B"))?;
    if a == 0 || b == 0 {
        return Err(parse_err(line, "dimensions must be positive"));
    }
    Ok(Dims::new(a, b))
}

fn parse_pair(line: usize, s: &str) -> Result<Complex64> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| parse_err(line, "entry must look like (re, im)"))?;
    let (re, im) = inner
        .split_once(',')
        .ok_or_else(|| parse_err(line, "entry needs two components"))?;
    let re: f64 = re.trim().parse().map_err(|_| parse_err(line, "bad real part"))?;
    let im: f64 = im.trim().parse().map_err(|_| parse_err(line, "bad imaginary part"))?;
    Ok(Complex64::new(re, im))
}

pub fn read_operator<R: BufRead>(r: R) -> Result<ExchangeDocument> {
    let mut dims = None;
    let mut layout_ok = false;
    let mut meta = BTreeMap::new();
    let mut expected = None;
    let mut entries = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if expected.is_some() {
            entries.push(parse_pair(lineno, t)?);
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, "expected key=value"))?;
        match key.trim() {
            "dims" => dims = Some(parse_dims(lineno, value.trim())?),
            "layout" => {
                if value.trim() != "\"row-major\"" {
                    return Err(parse_err(lineno, "only layout=\"row-major\" is supported"));
                }
                layout_ok = true;
            }
            "entries" => {
                let n: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad entry count"))?;
                expected = Some(n);
            }
            k if k.starts_with("meta.") => {
                meta.insert(k["meta.".len()..].to_string(), value.to_string());
            }
            other => return Err(parse_err(lineno, format!("unknown field {other:?}"))),
        }
    }
    let dims = dims.ok_or_else(|| parse_err(0, "missing dims"))?;
    if !layout_ok {
        return Err(parse_err(0, "missing layout"));
    }
    let n = dims.total();
    let expected = expected.ok_or_else(|| parse_err(0, "missing entries"))?;
    if expected != n * n || entries.len() != expected {
        return Err(parse_err(
            0,
            format!(
                "expected {} entries for dims [{},{}], found {} (declared {expected})",
                n * n,
                dims.a,
                dims.b,
                entries.len()
            ),
        ));
    }
    let matrix = CMatrix::from_row_iterator(n, n, entries);
    Ok(ExchangeDocument { dims, matrix, meta })
}
