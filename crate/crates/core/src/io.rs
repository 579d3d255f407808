//! Text formats: signal CSV files and the compact parameter string.
//!
//! A signal file holds either one column (`y`, with implicit `t = 1..n`)
//! or two columns (`t`, `y`, where `t` must run `1, 2, ..., n`). A single
//! non-numeric first row is taken as a header.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{Chirp, MultiParams, SignalSeries, Sinusoid};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("`{}` is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("`{}` is not finite", field.trim())));
    }
    Ok(v)
}

/// Reads a signal from CSV text.
pub fn parse_signal_csv<R: Read>(reader: R) -> Result<SignalSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut width = None;
    let mut samples = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let is_header = index == 0 && record.iter().any(|f| f.parse::<f64>().is_err());
        match (width, record.len()) {
            (None, w @ (1 | 2)) => width = Some(w),
            (None, w) => return Err(parse_error(line, format!("expected 1 or 2 columns, found {w}"))),
            (Some(w), got) if w != got => return Err(parse_error(line, format!("expected {w} columns, found {got}"))),
            _ => {}
        }
        if is_header {
            continue;
        }
        let y = if record.len() == 2 {
            let t = parse_number(&record[0], line)?;
            let want = samples.len() + 1;
            if t != want as f64 {
                return Err(parse_error(
                    line,
                    format!("time index {t} out of sequence, expected {want}"),
                ));
            }
            parse_number(&record[1], line)?
        } else {
            parse_number(&record[0], line)?
        };
        samples.push(y);
    }
    Ok(SignalSeries::new(samples))
}

/// Reads a signal from a CSV string.
pub fn parse_signal_str(text: &str) -> Result<SignalSeries> {
    parse_signal_csv(text.as_bytes())
}

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,y` rows with a header line.
pub fn write_signal_csv<W: Write>(mut w: W, y: &SignalSeries) -> std::io::Result<()> {
    writeln!(w, "t,y")?;
    for (t, v) in y.iter_t() {
        writeln!(w, "{t},{}", format_f64(v))?;
    }
    Ok(())
}

/// Writes `t,original,fitted` rows with a header line.
pub fn write_fitted_csv<W: Write>(mut w: W, y: &SignalSeries, fitted: &SignalSeries) -> std::io::Result<()> {
    if y.n() != fitted.n() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "length mismatch"));
    }
    writeln!(w, "t,original,fitted")?;
    for ((t, a), b) in y.iter_t().zip(fitted.as_slice()) {
        writeln!(w, "{t},{},{}", format_f64(a), format_f64(*b))?;
    }
    Ok(())
}

/// Parses `"A,B,alpha;...;C,D,beta;..."`: `p` sinusoid triples followed
/// by `q` chirp triples. An empty string is the empty model.
pub fn parse_params(text: &str, p: usize, q: usize) -> Result<MultiParams> {
    let groups: Vec<&str> = text.split(';').map(str::trim).filter(|g| !g.is_empty()).collect();
    if groups.len() != p + q {
        return Err(parse_error(
            1,
            format!(
                "expected {} parameter triples (p = {p}, q = {q}), found {}",
                p + q,
                groups.len()
            ),
        ));
    }
    let mut triples = Vec::with_capacity(groups.len());
    for g in &groups {
        let values = g.split(',').map(|f| parse_number(f, 1)).collect::<Result<Vec<f64>>>()?;
        if values.len() != 3 {
            return Err(parse_error(1, format!("`{g}` must have three comma-separated values")));
        }
        triples.push([values[0], values[1], values[2]]);
    }
    let sinusoids = triples[..p].iter().map(|t| Sinusoid::new(t[0], t[1], t[2])).collect();
    let chirps = triples[p..].iter().map(|t| Chirp::new(t[0], t[1], t[2])).collect();
    let params = MultiParams::new(sinusoids, chirps);
    params.validate_frequencies()?;
    Ok(params)
}

/// Inverse of [`parse_params`].
pub fn format_params(params: &MultiParams) -> String {
    params
        .sinusoids
        .iter()
        .map(|s| [s.a, s.b, s.alpha])
        .chain(params.chirps.iter().map(|c| [c.c, c.d, c.beta]))
        .map(|t| t.map(format_f64).join(","))
        .collect::<Vec<_>>()
        .join(";")
}
