//! Trajectory CSV: header `year,M,K,L,Y`, one row per year, values in
//! decimal notation with up to 17 significant digits (shortest f64
//! round-trip), so reading a written file reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use tapgrowth_core::economy::{EconomyState, SimMode, Trajectory};

use crate::CliError;

pub const HEADER: &str = "year,M,K,L,Y";

pub fn to_csv(trajectory: &Trajectory) -> String {
    let mut out = String::with_capacity(trajectory.states.len() * 64);
    out.push_str(HEADER);
    out.push('\n');
    for s in &trajectory.states {
        let _ = writeln!(out, "{},{},{},{},{}", s.year, s.m, s.k, s.l, s.y);
    }
    out
}

/// Parses a trajectory CSV. The divergence marker is not part of the file
/// format (a diverged run is simply truncated), so the result carries none.
pub fn from_csv(text: &str) -> Result<Trajectory, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Data("empty trajectory file".into()))?;
    if header.trim() != HEADER {
        return Err(CliError::Data(format!(
            "bad trajectory header '{}', expected '{HEADER}'",
            header.trim()
        )));
    }
    let mut states = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Data(format!(
                "line {lineno}: expected 5 columns, got {}",
                fields.len()
            )));
        }
        let year: i32 = fields[0]
            .parse()
            .map_err(|_| CliError::Data(format!("line {lineno}: bad year '{}'", fields[0])))?;
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| CliError::Data(format!("line {lineno}: bad value '{field}'")))?;
            if !slot.is_finite() {
                return Err(CliError::Data(format!(
                    "line {lineno}: non-finite value '{field}'"
                )));
            }
        }
        if let Some(prev) = states.last() {
            let prev: &EconomyState = prev;
            if year != prev.year + 1 {
                return Err(CliError::Data(format!(
                    "line {lineno}: year {year} does not follow {}",
                    prev.year
                )));
            }
        }
        states.push(EconomyState {
            year,
            m: values[0],
            k: values[1],
            l: values[2],
            y: values[3],
        });
    }
    if states.is_empty() {
        return Err(CliError::Data("trajectory has no rows".into()));
    }
    Ok(Trajectory {
        states,
        divergence: None,
        mode: SimMode::Deterministic,
    })
}

pub fn read_file(path: &Path) -> Result<Trajectory, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            states: vec![
                EconomyState {
                    year: -1,
                    m: 50.0,
                    k: 1.6892741472927393e12,
                    l: 1.7e8,
                    y: 1.82741e11,
                },
                EconomyState {
                    year: 0,
                    m: 50.282129629629636,
                    k: 1.633602948455175e12,
                    l: 1.70321e8,
                    y: 1.8191e11,
                },
            ],
            divergence: None,
            mode: SimMode::Deterministic,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample();
        let parsed = from_csv(&to_csv(&t)).unwrap();
        assert_eq!(parsed.states, t.states);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(from_csv("year,M,K,L\n1,2,3,4\n").is_err());
    }

    #[test]
    fn rejects_gap_years() {
        let text = "year,M,K,L,Y\n1,1,1,1,1\n3,1,1,1,1\n";
        assert!(from_csv(text).is_err());
    }

    #[test]
    fn rejects_malformed_value() {
        let text = "year,M,K,L,Y\n1,1,abc,1,1\n";
        let err = from_csv(text).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
