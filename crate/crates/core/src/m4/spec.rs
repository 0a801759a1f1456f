use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Location;
use crate::error::{Error, Result};

/// Tolerance on `sum_l sum_m a_{lm,x} = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Signature-pattern coefficients of a moving-maxima field with `L`
/// patterns and lags `m_min..=m_max`.
///
/// Coefficients of a location are stored row-major as an `L x W` block,
/// `W = m_max - m_min + 1`; entry `(l, w)` is `a_{l, m_min + w, x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFile", into = "SpecFile")]
pub struct M4Spec {
    patterns: usize,
    m_min: i64,
    m_max: i64,
    coeffs: BTreeMap<Location, Vec<f64>>,
}

/// On-disk JSON layout.
#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    #[serde(rename = "L")]
    patterns: usize,
    m_min: i64,
    m_max: i64,
    locations: Vec<SpecEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecEntry {
    location: Location,
    coeffs: Vec<Vec<f64>>,
}

impl TryFrom<SpecFile> for M4Spec {
    type Error = Error;
    fn try_from(f: SpecFile) -> Result<Self> {
        M4Spec::new(
            f.patterns,
            f.m_min,
            f.m_max,
            f.locations.into_iter().map(|e| (e.location, e.coeffs)),
        )
    }
}

impl From<M4Spec> for SpecFile {
    fn from(s: M4Spec) -> Self {
        let width = s.width();
        SpecFile {
            patterns: s.patterns,
            m_min: s.m_min,
            m_max: s.m_max,
            locations: s
                .coeffs
                .into_iter()
                .map(|(location, flat)| SpecEntry {
                    location,
                    coeffs: flat.chunks(width).map(<[f64]>::to_vec).collect(),
                })
                .collect(),
        }
    }
}

impl M4Spec {
    pub fn new(
        patterns: usize,
        m_min: i64,
        m_max: i64,
        entries: impl IntoIterator<Item = (Location, Vec<Vec<f64>>)>,
    ) -> Result<Self> {
        if patterns == 0 {
            return Err(Error::InvalidSpec("L must be at least 1".into()));
        }
        if m_min > m_max {
            return Err(Error::InvalidSpec(format!("m_min {m_min} exceeds m_max {m_max}")));
        }
        let width = usize::try_from(m_max - m_min + 1)
            .map_err(|_| Error::InvalidSpec("lag range too wide".into()))?;
        let mut coeffs = BTreeMap::new();
        for (loc, block) in entries {
            if block.len() != patterns || block.iter().any(|row| row.len() != width) {
                return Err(Error::InvalidSpec(format!(
                    "coefficients at {loc} must be a {patterns} x {width} matrix"
                )));
            }
            let flat: Vec<f64> = block.into_iter().flatten().collect();
            if flat.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "coefficients at {loc} must be finite and non-negative"
                )));
            }
            let total: f64 = flat.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidSpec(format!(
                    "coefficients at {loc} sum to {total}, expected 1"
                )));
            }
            if coeffs.insert(loc, flat).is_some() {
                return Err(Error::InvalidSpec(format!("location {loc} listed twice")));
            }
        }
        Ok(M4Spec {
            patterns,
            m_min,
            m_max,
            coeffs,
        })
    }

    /// Builds a spec by evaluating `rule` at every listed location.
    pub fn from_rule<F>(
        patterns: usize,
        m_min: i64,
        m_max: i64,
        locations: impl IntoIterator<Item = Location>,
        rule: F,
    ) -> Result<Self>
    where
        F: Fn(Location) -> Vec<Vec<f64>>,
    {
        M4Spec::new(
            patterns,
            m_min,
            m_max,
            locations.into_iter().map(|l| (l, rule(l))),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Number of signature patterns `L`.
    pub fn patterns(&self) -> usize {
        self.patterns
    }

    pub fn m_range(&self) -> (i64, i64) {
        (self.m_min, self.m_max)
    }

    /// Number of lags `W`.
    pub fn width(&self) -> usize {
        (self.m_max - self.m_min + 1) as usize
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.coeffs.keys()
    }

    pub fn contains(&self, loc: &Location) -> bool {
        self.coeffs.contains_key(loc)
    }

    /// Flat `L x W` coefficient block of a location.
    pub fn coeffs(&self, loc: &Location) -> Result<&[f64]> {
        self.coeffs
            .get(loc)
            .map(Vec::as_slice)
            .ok_or(Error::MissingCoefficients(*loc))
    }

    /// `a_{l, m, x}` with `l` in `1..=L` and `m` in `m_min..=m_max`.
    pub fn coefficient(&self, loc: &Location, l: usize, m: i64) -> Result<f64> {
        if l == 0 || l > self.patterns || m < self.m_min || m > self.m_max {
            return Err(Error::param(format!("(l, m) = ({l}, {m}) outside the spec range")));
        }
        let block = self.coeffs(loc)?;
        Ok(block[(l - 1) * self.width() + (m - self.m_min) as usize])
    }
}

/// Every lattice point with `i` in `i_range` and `j` in `j_range`.
pub fn lattice(
    i_range: std::ops::RangeInclusive<i64>,
    j_range: std::ops::RangeInclusive<i64>,
) -> Vec<Location> {
    i_range
        .flat_map(|i| j_range.clone().map(move |j| Location::new(i, j)))
        .collect()
}

/// M4 specs used in the simulation study, evaluated on any set of locations.
pub mod presets {
    use super::*;

    /// One pattern, lags 1..=2. Locations with both coordinates even get
    /// `(1/2, 1/2)`, all others `(1/4, 3/4)`.
    pub fn example_4_1(locations: impl IntoIterator<Item = Location>) -> Result<M4Spec> {
        M4Spec::from_rule(1, 1, 2, locations, |l| {
            if l.i % 2 == 0 && l.j % 2 == 0 {
                vec![vec![0.5, 0.5]]
            } else {
                vec![vec![0.25, 0.75]]
            }
        })
    }

    /// One pattern, lags 1..=2: `(1/4, 3/4)` when `i <= j`, `(3/4, 1/4)` otherwise.
    pub fn example_4_2(locations: impl IntoIterator<Item = Location>) -> Result<M4Spec> {
        M4Spec::from_rule(1, 1, 2, locations, |l| {
            if l.i <= l.j {
                vec![vec![0.25, 0.75]]
            } else {
                vec![vec![0.75, 0.25]]
            }
        })
    }

    /// Two patterns, lags 1..=3. Both coordinates odd: pattern 1 is
    /// `1/12` at every lag and pattern 2 is `1/4`; otherwise pattern 1 is
    /// `(1/18, 1/9, 1/6)` and pattern 2 is `2/9` at every lag.
    pub fn example_4_3(locations: impl IntoIterator<Item = Location>) -> Result<M4Spec> {
        M4Spec::from_rule(2, 1, 3, locations, |l| {
            if l.i.rem_euclid(2) == 1 && l.j.rem_euclid(2) == 1 {
                vec![vec![1.0 / 12.0; 3], vec![0.25; 3]]
            } else {
                vec![vec![1.0 / 18.0, 1.0 / 9.0, 1.0 / 6.0], vec![2.0 / 9.0; 3]]
            }
        })
    }

    pub fn by_name(name: &str, locations: impl IntoIterator<Item = Location>) -> Result<M4Spec> {
        match name {
            "example-4.1" => example_4_1(locations),
            "example-4.2" => example_4_2(locations),
            "example-4.3" => example_4_3(locations),
            other => Err(Error::param(format!("unknown preset {other:?}"))),
        }
    }
}
