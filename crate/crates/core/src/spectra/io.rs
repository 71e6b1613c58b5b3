//! Text serialisation of transmission maps.
//!
//! The CSV body is one `field_T,freq_GHz,s21_linear` triple per line in
//! field-major order. Floats are written in Rust's shortest round-trip
//! form, so a write/read cycle reproduces the map bit for bit. Synthesis
//! metadata goes to a separate JSON sidecar.

use std::io::{BufRead, Write};

use super::map::{MapMetadata, TransmissionMap};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "# field_T,freq_GHz,s21_linear";
pub const CSV_HEADER_DB: &str = "# field_T,freq_GHz,s21_db";

pub fn write_csv<W: Write>(map: &TransmissionMap, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (b, col) in map.columns() {
        for (f, v) in map.freq_axis().iter().zip(col) {
            writeln!(out, "{b},{f},{v}")?;
        }
    }
    out.flush()
}

/// Same layout with `10·log10(|S21|²)`; zero transmission is written as `-inf`.
pub fn write_csv_db<W: Write>(map: &TransmissionMap, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER_DB}")?;
    for (b, col) in map.columns() {
        for (f, v) in map.freq_axis().iter().zip(col) {
            writeln!(out, "{b},{f},{}", 10.0 * v.log10())?;
        }
    }
    out.flush()
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Numbered lines that fail on a final line without a terminator, which
/// is how an interrupted write shows up.
struct TerminatedLines<R> {
    input: R,
    n: usize,
}

impl<R: BufRead> Iterator for TerminatedLines<R> {
    type Item = (usize, std::io::Result<String>);

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = String::new();
        self.n += 1;
        match self.input.read_line(&mut buf) {
            Ok(0) => None,
            Ok(_) if !buf.ends_with('\n') => Some((
                self.n,
                Err(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "truncated: final line has no line terminator",
                )),
            )),
            Ok(_) => {
                buf.pop();
                if buf.ends_with('\r') {
                    buf.pop();
                }
                Some((self.n, Ok(buf)))
            }
            Err(e) => Some((self.n, Err(e))),
        }
    }
}

/// Read a map written by [`write_csv`]. Metadata is not part of the CSV.
pub fn read_csv<R: BufRead>(input: R) -> Result<TransmissionMap> {
    let mut lines = TerminatedLines { input, n: 0 };
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((n, Err(e))) => return Err(parse_err(n, e.to_string())),
        None => return Err(parse_err(1, "empty file")),
    };
    if header.trim() != CSV_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{CSV_HEADER}`, found `{header}`"),
        ));
    }

    let mut field_axis: Vec<f64> = Vec::new();
    let mut freq_axis: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    // `None` until the first field's run ends and the frequency axis is known
    let mut n_freq: Option<usize> = None;
    let mut last_line = 1;

    for (n, line) in lines {
        let line = line.map_err(|e| parse_err(n, e.to_string()))?;
        last_line = n;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(parse_err(
                n,
                format!("expected 3 fields, found {}", parts.len()),
            ));
        }
        let mut triple = [0.0; 3];
        for (slot, text) in triple.iter_mut().zip(&parts) {
            *slot = text
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(n, format!("`{text}`: {e}")))?;
        }
        let [b, f, v] = triple;
        if !(v.is_finite() && v >= 0.0) {
            return Err(parse_err(
                n,
                format!("transmission must be finite and >= 0, got {v}"),
            ));
        }

        let row = values.len();
        match n_freq {
            None => {
                if field_axis.is_empty() {
                    field_axis.push(b);
                }
                if b == field_axis[0] {
                    if let Some(&prev) = freq_axis.last() {
                        if f <= prev {
                            return Err(parse_err(n, "frequency axis not strictly increasing"));
                        }
                    }
                    freq_axis.push(f);
                } else {
                    if b <= field_axis[0] {
                        return Err(parse_err(n, "field axis not strictly increasing"));
                    }
                    n_freq = Some(freq_axis.len());
                    field_axis.push(b);
                    if f != freq_axis[0] {
                        return Err(parse_err(n, format!("expected frequency {}", freq_axis[0])));
                    }
                }
            }
            Some(nf) => {
                let j = row % nf;
                if j == 0 {
                    let prev = *field_axis.last().expect("non-empty");
                    if b <= prev {
                        return Err(parse_err(n, "field axis not strictly increasing"));
                    }
                    field_axis.push(b);
                } else if b != *field_axis.last().expect("non-empty") {
                    return Err(parse_err(
                        n,
                        format!("field changed mid-trace: expected {} rows per field", nf),
                    ));
                }
                if f != freq_axis[j] {
                    return Err(parse_err(
                        n,
                        format!("expected frequency {}, found {f}", freq_axis[j]),
                    ));
                }
            }
        }
        values.push(v);
    }

    if values.is_empty() {
        return Err(parse_err(last_line, "no data rows"));
    }
    let nf = freq_axis.len();
    if values.len() != field_axis.len() * nf {
        return Err(parse_err(
            last_line,
            format!(
                "truncated: last field has {} of {nf} frequency rows",
                values.len() - (field_axis.len() - 1) * nf
            ),
        ));
    }
    if !field_axis.iter().chain(&freq_axis).all(|x| x.is_finite()) {
        return Err(parse_err(last_line, "non-finite axis value"));
    }
    TransmissionMap::new(field_axis, freq_axis, values, None)
}

pub fn write_sidecar<W: Write>(metadata: &MapMetadata, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, metadata).map_err(|e| Error::Parse {
        line: 0,
        reason: e.to_string(),
    })
}

pub fn read_sidecar<R: std::io::Read>(input: R) -> Result<MapMetadata> {
    serde_json::from_reader(input).map_err(|e| Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    })
}
