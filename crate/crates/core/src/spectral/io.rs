use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rustfft::num_complex::Complex;

use crate::error::{KamError, Result};
use crate::scalar::Real;

use super::field::SpectralField;

/// Line-oriented reader for the plain-text formats. Blank lines and lines
/// starting with `#` are skipped.
pub(crate) struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate(), last: 0 }
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> KamError {
        KamError::Parse { line: self.last, msg: msg.into() }
    }

    pub(crate) fn next_row(&mut self) -> Result<Vec<&'a str>> {
        for (i, line) in self.lines.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(t.split_whitespace().collect());
        }
        Err(KamError::Parse { line: self.last, msg: "unexpected end of input".into() })
    }

    /// Reads a `tag key=value ...` header.
    pub(crate) fn header(&mut self, tag: &str) -> Result<HashMap<&'a str, &'a str>> {
        let row = self.next_row()?;
        if row.first() != Some(&tag) {
            return Err(self.err(format!("expected `{tag}` header")));
        }
        row[1..]
            .iter()
            .map(|kv| kv.split_once('=').ok_or_else(|| self.err(format!("malformed `{kv}`"))))
            .collect()
    }

    pub(crate) fn parse<V: FromStr>(&self, s: &str) -> Result<V> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    pub(crate) fn key<V: FromStr>(&self, h: &HashMap<&str, &str>, k: &str) -> Result<V> {
        let s = h.get(k).ok_or_else(|| self.err(format!("missing `{k}`")))?;
        self.parse(s)
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        match self.next_row() {
            Ok(_) => Err(self.err("trailing content")),
            Err(_) => Ok(()),
        }
    }
}

/// Appends `f` in the text table format: a header line followed by one
/// row per stored frequency `n₁ … n_d  re₁ im₁ … re_m im_m`, zero mode first.
pub fn write_field<T: Real>(f: &SpectralField<T>, out: &mut String) {
    let _ = writeln!(
        out,
        "spectral-field dim={} range={} cutoff={} rows={}",
        f.dim(),
        f.range(),
        f.cutoff(),
        f.mode_count() + 1
    );
    let mut row = |n: &[i64], c: &[Complex<T>]| {
        let mut line = n.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
        for z in c {
            let _ = write!(line, " {:e} {:e}", z.re, z.im);
        }
        let _ = writeln!(out, "{line}");
    };
    let zero_c: Vec<Complex<T>> = f.mean().iter().map(|&m| Complex::new(m, T::zero())).collect();
    row(&vec![0; f.dim()], &zero_c);
    for (n, c) in f.modes() {
        row(n, c);
    }
}

pub fn field_to_string<T: Real>(f: &SpectralField<T>) -> String {
    let mut s = String::new();
    write_field(f, &mut s);
    s
}

pub(crate) fn read_field<T: Real>(r: &mut LineReader<'_>) -> Result<SpectralField<T>> {
    let h = r.header("spectral-field")?;
    let dim: usize = r.key(&h, "dim")?;
    let range: usize = r.key(&h, "range")?;
    let cutoff: u32 = r.key(&h, "cutoff")?;
    let rows: usize = r.key(&h, "rows")?;
    if dim == 0 || range == 0 {
        return Err(r.err("dim and range must be positive"));
    }
    let mut f = SpectralField::zeros(dim, range, cutoff);
    for _ in 0..rows {
        let row = r.next_row()?;
        if row.len() != dim + 2 * range {
            return Err(r.err(format!("expected {} columns, found {}", dim + 2 * range, row.len())));
        }
        let n = row[..dim].iter().map(|s| r.parse::<i64>(s)).collect::<Result<Vec<_>>>()?;
        let vals = row[dim..].iter().map(|s| r.parse::<T>(s)).collect::<Result<Vec<_>>>()?;
        let c: Vec<Complex<T>> = vals.chunks(2).map(|p| Complex::new(p[0], p[1])).collect();
        f.set_coeff(&n, c).map_err(|e| r.err(e.to_string()))?;
    }
    Ok(f)
}

pub fn parse_field<T: Real>(text: &str) -> Result<SpectralField<T>> {
    let mut r = LineReader::new(text);
    let f = read_field(&mut r)?;
    r.finish()?;
    Ok(f)
}
