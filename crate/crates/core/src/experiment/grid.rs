use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric step grid: `top · 10^(−j/points_per_decade)` for
/// `j = 0, …, points_per_decade · decades`, largest first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_decade: usize,
    pub decades: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_decade: 8,
            decades: 3,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_decade == 0 {
            return Err(Error::Config("grid needs at least one point per decade".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points_per_decade * self.decades + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Descending values starting at `top`.
    pub fn values(&self, top: f64) -> Vec<f64> {
        let ppd = self.points_per_decade as f64;
        (0..self.len()).map(|j| top * 10f64.powf(-(j as f64) / ppd)).collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.points_per_decade, self.decades)
    }
}

/// Parses `"PPD:DECADES"`, e.g. `"8:3"`.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid spec {s:?} is not of the form PPD:DECADES"));
        let (ppd, decades) = s.trim().split_once(':').ok_or_else(bad)?;
        let spec = Self {
            points_per_decade: ppd.trim().parse().map_err(|_| bad())?,
            decades: decades.trim().parse().map_err(|_| bad())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}
