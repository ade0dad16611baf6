//! Plain-text series files: `#`-prefixed `key=value` header lines followed by
//! one value per line, written with 17 significant digits so that reading a
//! file back reproduces every value bit for bit.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Provenance header lines as ordered `(key, value)` pairs.
pub type Header = Vec<(String, String)>;

pub fn write_series<W: Write>(mut w: W, header: &[(String, String)], values: &[f64]) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k}={v}")?;
    }
    for x in values {
        writeln!(w, "{x:.16e}")?;
    }
    w.flush()
}

/// Parses a series file. Header comments without `=` are ignored; blank
/// lines are skipped; any other line must be a single number.
pub fn read_series<R: BufRead>(r: R) -> Result<(Header, Vec<f64>)> {
    let mut header = Vec::new();
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidArgument(format!("read error: {e}")))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let field = t.split(',').next().unwrap_or(t).trim();
        let x: f64 = field
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("line {}: not a number: {t:?}", i + 1)))?;
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("line {}: non-finite value", i + 1)));
        }
        values.push(x);
    }
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok((header, values))
}

pub fn header_value<'a>(header: &'a [(String, String)], key: &str) -> Option<&'a str> {
    header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}
