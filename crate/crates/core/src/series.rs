//! Annual checkpoint series: exogenous population and GDP benchmarks.
//!
//! Series are sparse (year, value) checkpoints loaded from a two-column CSV
//! and interpolated log-linearly, i.e. at a constant exponential rate
//! between checkpoints. Years use astronomical numbering (0 = 1 BC), so BC
//! dates are plain negative integers.
//!
//! CSV schema (UTF-8, header required):
//!
//! ```text
//! # optional comment lines start with '#'
//! # units: 2011 international dollars      <- optional units directive
//! year,population
//! -10000,4000000
//! 1,170000000
//! ```
//!
//! Values use a decimal point, no thousands separators. Years must be
//! strictly increasing, values strictly positive, at least two checkpoints.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid series: {0}")]
    Validation(String),
    #[error("year {year} outside series coverage [{first}, {last}]")]
    OutOfRange { year: i32, first: i32, last: i32 },
    #[error("series [{first}, {last}] does not cover [{start}, {end}]: missing {missing}")]
    Coverage {
        first: i32,
        last: i32,
        start: i32,
        end: i32,
        missing: String,
    },
}

/// Inclusive year range; empty when `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }

    /// Number of years in the range, 0 when empty.
    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.end - self.start + 1) as usize
        }
    }
}

/// An immutable, validated annual series.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    pub label: String,
    pub units: String,
    checkpoints: Vec<(i32, f64)>,
}

impl AnnualSeries {
    /// Validating constructor used by [`load_series`] and by tests that
    /// build synthetic series directly.
    pub fn new(
        label: impl Into<String>,
        units: impl Into<String>,
        checkpoints: Vec<(i32, f64)>,
    ) -> Result<Self, SeriesError> {
        if checkpoints.len() < 2 {
            return Err(SeriesError::Validation(format!(
                "need at least 2 checkpoints, got {}",
                checkpoints.len()
            )));
        }
        for window in checkpoints.windows(2) {
            if window[1].0 == window[0].0 {
                return Err(SeriesError::Validation(format!(
                    "duplicate year {}",
                    window[0].0
                )));
            }
            if window[1].0 < window[0].0 {
                return Err(SeriesError::Validation(format!(
                    "years not strictly increasing at {}",
                    window[1].0
                )));
            }
        }
        for &(year, value) in &checkpoints {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SeriesError::Validation(format!(
                    "value at year {year} must be strictly positive (got {value})"
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            units: units.into(),
            checkpoints,
        })
    }

    pub fn checkpoints(&self) -> &[(i32, f64)] {
        &self.checkpoints
    }

    pub fn first_year(&self) -> i32 {
        self.checkpoints[0].0
    }

    pub fn last_year(&self) -> i32 {
        self.checkpoints[self.checkpoints.len() - 1].0
    }

    /// Log-linear (geometric) interpolation: exact at checkpoints, constant
    /// exponential growth rate in between.
    pub fn interpolate(&self, year: i32) -> Result<f64, SeriesError> {
        let (first, last) = (self.first_year(), self.last_year());
        if year < first || year > last {
            return Err(SeriesError::OutOfRange { year, first, last });
        }
        match self.checkpoints.binary_search_by_key(&year, |&(y, _)| y) {
            Ok(idx) => Ok(self.checkpoints[idx].1),
            Err(idx) => {
                let (y0, v0) = self.checkpoints[idx - 1];
                let (y1, v1) = self.checkpoints[idx];
                let frac = f64::from(year - y0) / f64::from(y1 - y0);
                Ok(v0 * (v1 / v0).powf(frac))
            }
        }
    }

    /// Accepts iff the series spans the whole horizon. Empty horizons are
    /// trivially covered.
    pub fn validate_coverage(&self, horizon: YearRange) -> Result<(), SeriesError> {
        if horizon.is_empty() {
            return Ok(());
        }
        let (first, last) = (self.first_year(), self.last_year());
        if horizon.start >= first && horizon.end <= last {
            return Ok(());
        }
        let mut missing = Vec::new();
        if horizon.start < first {
            missing.push(format!("[{}, {}]", horizon.start, (first - 1).min(horizon.end)));
        }
        if horizon.end > last {
            missing.push(format!("[{}, {}]", (last + 1).max(horizon.start), horizon.end));
        }
        Err(SeriesError::Coverage {
            first,
            last,
            start: horizon.start,
            end: horizon.end,
            missing: missing.join(" and "),
        })
    }

    /// Serializes back to the CSV schema; loading the output reproduces the
    /// checkpoint list exactly (f64 round-trip formatting).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.units.is_empty() {
            let _ = writeln!(out, "# units: {}", self.units);
        }
        let _ = writeln!(out, "year,{}", self.label);
        for &(year, value) in &self.checkpoints {
            let _ = writeln!(out, "{year},{value}");
        }
        out
    }
}

/// Parses the CSV schema above from text.
pub fn load_series(text: &str) -> Result<AnnualSeries, SeriesError> {
    let mut label: Option<String> = None;
    let mut units = String::new();
    let mut checkpoints: Vec<(i32, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(u) = comment.trim().strip_prefix("units:") {
                units = u.trim().to_string();
            }
            continue;
        }
        if label.is_none() {
            // Header row.
            let mut cols = line.split(',');
            let first = cols.next().unwrap_or("").trim();
            let second = cols.next().map(str::trim);
            if !first.eq_ignore_ascii_case("year") || second.is_none() || cols.next().is_some() {
                return Err(SeriesError::Parse {
                    line: lineno,
                    message: format!("expected header 'year,<label>', got '{line}'"),
                });
            }
            label = Some(second.unwrap().to_string());
            continue;
        }
        let mut cols = line.split(',');
        let year_str = cols.next().unwrap_or("").trim();
        let value_str = cols.next().map(str::trim).unwrap_or("");
        if cols.next().is_some() {
            return Err(SeriesError::Parse {
                line: lineno,
                message: "expected exactly two columns".to_string(),
            });
        }
        let year: i32 = year_str.parse().map_err(|_| SeriesError::Parse {
            line: lineno,
            message: format!("bad year '{year_str}'"),
        })?;
        let value: f64 = value_str.parse().map_err(|_| SeriesError::Parse {
            line: lineno,
            message: format!("bad value '{value_str}'"),
        })?;
        checkpoints.push((year, value));
    }

    let label = label.ok_or(SeriesError::Parse {
        line: text.lines().count().max(1),
        message: "missing header row".to_string(),
    })?;
    AnnualSeries::new(label, units, checkpoints)
}

/// Reads a series from a file path, wrapping IO problems as parse errors.
pub fn load_series_file(path: &std::path::Path) -> Result<AnnualSeries, SeriesError> {
    let text = std::fs::read_to_string(path).map_err(|e| SeriesError::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    load_series(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_population_example() {
        let s = load_series("year,population\n1,170000000\n1000,265000000\n").unwrap();
        assert_eq!(s.label, "population");
        assert_eq!(s.checkpoints().len(), 2);
        assert_eq!(s.interpolate(1).unwrap(), 1.7e8);
    }

    #[test]
    fn rejects_duplicate_year() {
        let err = load_series("year,population\n5,10\n5,12\n").unwrap_err();
        assert!(matches!(err, SeriesError::Validation(msg) if msg.contains("duplicate year 5")));
    }

    #[test]
    fn rejects_nonpositive_value() {
        let err = load_series("year,population\n5,-1\n6,2\n").unwrap_err();
        assert!(matches!(err, SeriesError::Validation(msg) if msg.contains("positive")));
    }

    #[test]
    fn rejects_unsorted_years() {
        let err = load_series("year,population\n7,1\n5,2\n").unwrap_err();
        assert!(matches!(err, SeriesError::Validation(msg) if msg.contains("increasing")));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = load_series("year,population\n1,100\noops,200\n").unwrap_err();
        match err {
            SeriesError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn units_directive_is_captured() {
        let s = load_series("# units: persons\nyear,population\n1,2\n2,3\n").unwrap();
        assert_eq!(s.units, "persons");
    }

    #[test]
    fn geometric_midpoint() {
        let s = AnnualSeries::new("v", "", vec![(0, 100.0), (10, 400.0)]).unwrap();
        assert!((s.interpolate(5).unwrap() - 200.0).abs() < 1e-12);
        let v2 = s.interpolate(2).unwrap();
        assert!((v2 - 131.95079107728943).abs() < 1e-10);
    }

    #[test]
    fn exact_at_checkpoints() {
        let s = AnnualSeries::new("v", "", vec![(-5, 3.25), (9, 17.5), (40, 2.0)]).unwrap();
        assert_eq!(s.interpolate(-5).unwrap(), 3.25);
        assert_eq!(s.interpolate(9).unwrap(), 17.5);
        assert_eq!(s.interpolate(40).unwrap(), 2.0);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let s = AnnualSeries::new("v", "", vec![(0, 1.0), (10, 2.0)]).unwrap();
        assert!(matches!(
            s.interpolate(11),
            Err(SeriesError::OutOfRange { year: 11, .. })
        ));
    }

    #[test]
    fn coverage_verdicts() {
        let s = AnnualSeries::new("v", "", vec![(-10_000, 1.0), (2015, 2.0)]).unwrap();
        assert!(s.validate_coverage(YearRange::new(1, 2015)).is_ok());
        assert!(s.validate_coverage(YearRange::new(5, 4)).is_ok()); // empty

        let narrow = AnnualSeries::new("v", "", vec![(1, 1.0), (2015, 2.0)]).unwrap();
        let err = narrow
            .validate_coverage(YearRange::new(-350, 2015))
            .unwrap_err();
        match err {
            SeriesError::Coverage { missing, .. } => assert!(missing.contains("[-350, 0]")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = AnnualSeries::new(
            "gdp",
            "2011 international dollars",
            vec![(1, 1.82741e11), (1000, 2.55e11), (2015, 1.05e14)],
        )
        .unwrap();
        let reloaded = load_series(&s.to_csv()).unwrap();
        assert_eq!(s, reloaded);
    }

    proptest! {
        /// Between two ordered checkpoints the interpolant is monotone.
        #[test]
        fn monotone_between_checkpoints(
            v0 in 1e-3f64..1e12,
            ratio in 0.01f64..100.0,
            span in 2i32..500,
            at in 1i32..499,
        ) {
            prop_assume!(at < span);
            let v1 = v0 * ratio;
            let s = AnnualSeries::new("v", "", vec![(0, v0), (span, v1)]).unwrap();
            let a = s.interpolate(at - 1).unwrap();
            let b = s.interpolate(at).unwrap();
            if ratio > 1.0 {
                prop_assert!(b >= a);
            } else if ratio < 1.0 {
                prop_assert!(b <= a);
            }
        }

        /// Round trip through CSV text preserves every checkpoint bit.
        #[test]
        fn csv_round_trip(years in proptest::collection::btree_set(-50_000i32..50_000, 2..20),
                          seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let checkpoints: Vec<(i32, f64)> = years
                .into_iter()
                .map(|y| (y, 10f64.powf(rng.random_range(-3.0..14.0))))
                .collect();
            let s = AnnualSeries::new("v", "u", checkpoints).unwrap();
            prop_assert_eq!(load_series(&s.to_csv()).unwrap(), s);
        }
    }
}
