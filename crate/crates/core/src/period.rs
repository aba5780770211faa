//! Half-year time axis. All series in the crate are indexed by these periods.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Half {
    H1,
    H2,
}

/// A calendar half-year such as `2018H1`. Totally ordered; the successor of
/// `(y, H2)` is `(y+1, H1)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfYearPeriod {
    year: i32,
    half: Half,
}

impl HalfYearPeriod {
    pub fn new(year: i32, half: Half) -> Self {
        HalfYearPeriod { year, half }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn half(&self) -> Half {
        self.half
    }

    /// Position on the half-year axis; consecutive periods differ by 1.
    fn index(&self) -> i64 {
        2 * i64::from(self.year)
            + match self.half {
                Half::H1 => 0,
                Half::H2 => 1,
            }
    }

    fn from_index(idx: i64) -> Self {
        let year = idx.div_euclid(2) as i32;
        let half = if idx.rem_euclid(2) == 0 { Half::H1 } else { Half::H2 };
        HalfYearPeriod { year, half }
    }

    pub fn next(&self) -> Self {
        self.offset(1)
    }

    pub fn prev(&self) -> Self {
        self.offset(-1)
    }

    pub fn offset(&self, half_years: i64) -> Self {
        Self::from_index(self.index() + half_years)
    }

    /// Signed distance `self - other` in half-years.
    pub fn distance(&self, other: &HalfYearPeriod) -> i64 {
        self.index() - other.index()
    }

    /// Inclusive range of periods.
    pub fn range_to(&self, end: &HalfYearPeriod) -> Vec<HalfYearPeriod> {
        let mut out = Vec::new();
        let mut p = *self;
        while p <= *end {
            out.push(p);
            p = p.next();
        }
        out
    }

    /// Months covered by the forecast-time window for this half: January-May
    /// for H1 targets, July-November for H2 targets.
    pub fn auxiliary_months(&self) -> [u32; 5] {
        match self.half {
            Half::H1 => [1, 2, 3, 4, 5],
            Half::H2 => [7, 8, 9, 10, 11],
        }
    }
}

impl fmt::Display for HalfYearPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match self.half {
            Half::H1 => 1,
            Half::H2 => 2,
        };
        write!(f, "{}H{}", self.year, h)
    }
}

impl fmt::Debug for HalfYearPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for HalfYearPeriod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::InvalidArgument(format!("bad period {s:?}, expected e.g. 2018H1"));
        let (y, h) = s.split_once(['H', 'h']).ok_or_else(err)?;
        let year: i32 = y.trim().parse().map_err(|_| err())?;
        let half = match h.trim() {
            "1" => Half::H1,
            "2" => Half::H2,
            _ => return Err(err()),
        };
        Ok(HalfYearPeriod::new(year, half))
    }
}
