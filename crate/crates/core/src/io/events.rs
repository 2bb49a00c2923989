//! Outcome event files.
//!
//! Plain text, one record per line: `alpha beta x y`, separated by
//! whitespace, angles in radians, outcomes `1` or `-1`. Text after `#` is a
//! comment; blank lines are skipped.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::chsh::{ChshResult, ChshSettings};
use crate::error::{Error, Result};
use crate::model::{Angle, Correlation};
use crate::montecarlo::{EstimatedCorrelation, Outcome, OutcomePair, OutcomeTally};

use super::curve_csv::format_number;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRecord {
    pub alpha: Angle,
    pub beta: Angle,
    pub x: Outcome,
    pub y: Outcome,
}

impl OutcomeRecord {
    pub fn pair(&self) -> OutcomePair {
        OutcomePair {
            x: self.x,
            y: self.y,
        }
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<OutcomeRecord>> {
    let content = line.split('#').next().unwrap_or("");
    let fields: Vec<&str> = content.split_whitespace().collect();
    if fields.is_empty() {
        return Ok(None);
    }
    let bad = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    if fields.len() != 4 {
        return Err(bad(format!(
            "expected 4 fields `alpha beta x y`, found {}",
            fields.len()
        )));
    }
    let angle = |name: &str, s: &str| -> Result<Angle> {
        let v: f64 = s
            .parse()
            .map_err(|_| bad(format!("{name}: not a number: {s:?}")))?;
        Angle::new(v).map_err(|e| bad(format!("{name}: {e}")))
    };
    let outcome = |name: &str, s: &str| -> Result<Outcome> {
        s.parse::<i64>()
            .ok()
            .and_then(Outcome::from_value)
            .ok_or_else(|| bad(format!("{name}: expected 1 or -1, got {s:?}")))
    };
    Ok(Some(OutcomeRecord {
        alpha: angle("alpha", fields[0])?,
        beta: angle("beta", fields[1])?,
        x: outcome("x", fields[2])?,
        y: outcome("y", fields[3])?,
    }))
}

/// Reads all records; a file without any record is an error.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<OutcomeRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<events input>", e))?;
        if let Some(r) = parse_line(&line, i + 1)? {
            records.push(r);
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(records)
}

pub fn read_event_file(path: &Path) -> Result<Vec<OutcomeRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_events<W: Write>(mut out: W, records: &[OutcomeRecord]) -> std::io::Result<()> {
    writeln!(out, "# alpha beta x y")?;
    for r in records {
        writeln!(
            out,
            "{} {} {} {}",
            r.alpha.radians(),
            r.beta.radians(),
            r.x.value(),
            r.y.value()
        )?;
    }
    out.flush()
}

/// Estimate for all records sharing one `(alpha, beta)` setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupEstimate {
    pub alpha: Angle,
    pub beta: Angle,
    pub estimate: EstimatedCorrelation,
    pub freq_plus_a: f64,
    pub freq_plus_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventAnalysis {
    /// Sorted by `(alpha, beta)`.
    pub groups: Vec<GroupEstimate>,
    /// Present when the settings form exactly a 2×2 quadruple. The smaller
    /// angle on each wing is the unprimed setting.
    pub chsh: Option<ChshResult>,
}

pub fn analyze_events(records: &[OutcomeRecord]) -> Result<EventAnalysis> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    // Normalized angles are non-negative, so bit order is numeric order.
    let mut tallies: BTreeMap<(u64, u64), OutcomeTally> = BTreeMap::new();
    for r in records {
        tallies
            .entry((r.alpha.radians().to_bits(), r.beta.radians().to_bits()))
            .or_default()
            .push(r.pair());
    }
    let groups = tallies
        .iter()
        .map(|(&(a, b), tally)| {
            Ok(GroupEstimate {
                alpha: Angle::new(f64::from_bits(a))?,
                beta: Angle::new(f64::from_bits(b))?,
                estimate: tally.estimate()?,
                freq_plus_a: tally.freq_plus_a(),
                freq_plus_b: tally.freq_plus_b(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let chsh = if groups.len() == 4 {
        let alphas: Vec<Angle> = dedup_sorted(groups.iter().map(|g| g.alpha));
        let betas: Vec<Angle> = dedup_sorted(groups.iter().map(|g| g.beta));
        if alphas.len() == 2 && betas.len() == 2 {
            let settings = ChshSettings {
                a: alphas[0],
                a_prime: alphas[1],
                b: betas[0],
                b_prime: betas[1],
            };
            let e = settings.pairs().map(|(x, y)| {
                let g = groups
                    .iter()
                    .find(|g| g.alpha == x && g.beta == y)
                    .expect("4 groups over 2 alphas and 2 betas cover every pair");
                Correlation::new(g.estimate.mean).expect("sample mean of ±1 values")
            });
            Some(ChshResult::from_correlations(settings, e))
        } else {
            None
        }
    } else {
        None
    };
    Ok(EventAnalysis { groups, chsh })
}

fn dedup_sorted(values: impl Iterator<Item = Angle>) -> Vec<Angle> {
    let mut v: Vec<Angle> = values.collect();
    v.sort_by(|a, b| a.radians().total_cmp(&b.radians()));
    v.dedup();
    v
}

pub const ANALYSIS_HEADER: &str = "alpha,beta,corr,stderr,n";

pub fn write_analysis<W: Write>(mut out: W, analysis: &EventAnalysis) -> std::io::Result<()> {
    writeln!(out, "{ANALYSIS_HEADER}")?;
    for g in &analysis.groups {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_number(g.alpha.radians()),
            format_number(g.beta.radians()),
            format_number(g.estimate.mean),
            format_number(g.estimate.stderr),
            g.estimate.n
        )?;
    }
    out.flush()
}
