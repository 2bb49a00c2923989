//! Curve files: header `beta,corr,stderr,n`, one row per sweep point.
//!
//! Reals are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::montecarlo::{CorrelationCurve, CurvePoint};

pub const CURVE_HEADER: [&str; 4] = ["beta", "corr", "stderr", "n"];

/// 17 significant digits, e.g. `-5.0000000000000000e-1`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn write_curve<W: Write>(out: W, curve: &CorrelationCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<curve output>", e),
        other => Error::domain(format!("{other:?}")),
    };
    w.write_record(CURVE_HEADER).map_err(io_err)?;
    for p in &curve.points {
        w.write_record([
            format_number(p.beta),
            format_number(p.corr),
            format_number(p.stderr),
            p.n.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<curve output>", e))
}

pub fn write_curve_file(path: &Path, curve: &CorrelationCurve) -> Result<()> {
    let mut file = super::create_file(path)?;
    write_curve(&mut file, curve).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    super::finish(path, file)
}

/// Parses and validates a curve: finite values, strictly increasing `beta`,
/// `corr` in `[-1, 1]`, non-negative `stderr`.
pub fn read_curve<R: Read>(input: R) -> Result<CorrelationCurve> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, got {:?}",
                CURVE_HEADER.join(","),
                header
            ),
        });
    }
    let mut points: Vec<CurvePoint> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        let real = |i: usize| -> Result<f64> {
            let field = &record[i];
            let x: f64 = field
                .parse()
                .map_err(|_| bad(format!("{}: not a number: {field:?}", CURVE_HEADER[i])))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad(format!("{}: not finite", CURVE_HEADER[i])))
            }
        };
        let point = CurvePoint {
            beta: real(0)?,
            corr: real(1)?,
            stderr: real(2)?,
            n: record[3]
                .parse()
                .map_err(|_| bad(format!("n: not a count: {:?}", &record[3])))?,
        };
        if !(-1.0..=1.0).contains(&point.corr) {
            return Err(bad(format!("corr {} outside [-1, 1]", point.corr)));
        }
        if point.stderr < 0.0 {
            return Err(bad(format!("negative stderr {}", point.stderr)));
        }
        if let Some(prev) = points.last() {
            if point.beta <= prev.beta {
                return Err(bad(format!(
                    "beta {} does not increase (previous {})",
                    point.beta, prev.beta
                )));
            }
        }
        points.push(point);
    }
    Ok(CorrelationCurve { points })
}

pub fn read_curve_file(path: &Path) -> Result<CorrelationCurve> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_curve(std::io::BufReader::new(file))
}
