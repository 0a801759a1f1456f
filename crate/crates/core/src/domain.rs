//! Shared domain types: lattice locations, regions, dependence queries,
//! observation panels and result grids.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i64, i64)", into = "(i64, i64)")]
pub struct Location {
    pub i: i64,
    pub j: i64,
}

impl Location {
    pub const fn new(i: i64, j: i64) -> Self {
        Location { i, j }
    }
}

impl From<(i64, i64)> for Location {
    fn from((i, j): (i64, i64)) -> Self {
        Location { i, j }
    }
}

impl From<Location> for (i64, i64) {
    fn from(loc: Location) -> Self {
        (loc.i, loc.j)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

impl FromStr for Location {
    type Err = Error;

    /// Accepts `(i,j)`, with optional surrounding whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("cannot parse location {s:?}, expected \"(i,j)\""));
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let i = a.trim().parse().map_err(|_| bad())?;
        let j = b.trim().parse().map_err(|_| bad())?;
        Ok(Location { i, j })
    }
}

/// An ordered, duplicate-free, non-empty set of locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    locations: Vec<Location>,
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    locations: Vec<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::with_label(r.locations, r.label)
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr {
            locations: r.locations,
            label: r.label,
        }
    }
}

impl Region {
    pub fn new(locations: Vec<Location>) -> Result<Self> {
        Self::with_label(locations, None)
    }

    pub fn with_label(locations: Vec<Location>, label: Option<String>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut seen = HashSet::with_capacity(locations.len());
        for loc in &locations {
            if !seen.insert(*loc) {
                return Err(Error::DuplicateLocation(*loc));
            }
        }
        Ok(Region { locations, label })
    }

    /// Parses the command-line lattice form `"(2,1);(2,2)"`.
    pub fn parse_lattice(s: &str) -> Result<Self> {
        let locations = s
            .split(';')
            .filter(|part| !part.trim().is_empty())
            .map(Location::from_str)
            .collect::<Result<Vec<_>>>()?;
        Region::new(locations)
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn contains(&self, loc: &Location) -> bool {
        self.locations.contains(loc)
    }

    /// Locations of `self` followed by those of `other` not already present.
    pub fn union(&self, other: &Region) -> Region {
        let mut locations = self.locations.clone();
        for loc in &other.locations {
            if !locations.contains(loc) {
                locations.push(*loc);
            }
        }
        Region {
            locations,
            label: None,
        }
    }

    /// Errors with the shared locations when the two regions intersect.
    pub fn ensure_disjoint(&self, other: &Region) -> Result<()> {
        let shared: Vec<Location> = self
            .locations
            .iter()
            .filter(|l| other.contains(l))
            .copied()
            .collect();
        if shared.is_empty() {
            Ok(())
        } else {
            Err(Error::OverlappingRegions(shared))
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(label) = &self.label {
            return f.write_str(label);
        }
        let parts: Vec<String> = self.locations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

/// The pair of exponents `(alpha, beta)` applied to the maxima of the two regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceQuery {
    pub alpha: f64,
    pub beta: f64,
}

impl DependenceQuery {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(DependenceQuery { alpha, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Margin {
    UnitFrechet,
    Raw,
}

/// `T` replications observed at `L` locations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    locations: Vec<Location>,
    values: Vec<f64>,
    margin: Margin,
    index: HashMap<Location, usize>,
}

impl Panel {
    pub fn new(locations: Vec<Location>, rows: Vec<Vec<f64>>, margin: Margin) -> Result<Self> {
        let width = locations.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidPanel(format!(
                    "row {t} has {} entries, expected {width}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(locations, values, margin)
    }

    pub fn from_flat(locations: Vec<Location>, values: Vec<f64>, margin: Margin) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidPanel("panel has no locations".into()));
        }
        let mut index = HashMap::with_capacity(locations.len());
        for (c, loc) in locations.iter().enumerate() {
            if index.insert(*loc, c).is_some() {
                return Err(Error::DuplicateLocation(*loc));
            }
        }
        if values.is_empty() || !values.len().is_multiple_of(locations.len()) {
            return Err(Error::InvalidPanel(format!(
                "{} values do not fill whole rows of width {}",
                values.len(),
                locations.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite value at row {}",
                pos / locations.len()
            )));
        }
        if margin == Margin::UnitFrechet {
            if let Some(pos) = values.iter().position(|&v| v <= 0.0) {
                return Err(Error::InvalidPanel(format!(
                    "unit-Frechet panel has non-positive value at row {}",
                    pos / locations.len()
                )));
            }
        }
        Ok(Panel {
            locations,
            values,
            margin,
            index,
        })
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn margin(&self) -> Margin {
        self.margin
    }

    /// Number of replications.
    pub fn n_rows(&self) -> usize {
        self.values.len() / self.locations.len()
    }

    pub fn n_cols(&self) -> usize {
        self.locations.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[t * w..(t + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn column_index(&self, loc: &Location) -> Result<usize> {
        self.index
            .get(loc)
            .copied()
            .ok_or(Error::UnknownLocation(*loc))
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    /// Same data, relabelled margin.
    pub fn with_margin(self, margin: Margin) -> Result<Self> {
        Panel::from_flat(self.locations, self.values, margin)
    }

    pub(crate) fn region_columns(&self, region: &Region) -> Result<Vec<usize>> {
        region
            .locations()
            .iter()
            .map(|l| self.column_index(l))
            .collect()
    }
}

/// Row-wise maximum over the region's columns.
pub fn region_maxima(panel: &Panel, region: &Region) -> Result<Vec<f64>> {
    let cols = panel.region_columns(region)?;
    Ok(panel
        .rows()
        .map(|row| cols.iter().map(|&c| row[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Analytic,
    EstimatedKnownMargins,
    EstimatedEmpiricalMargins,
}

impl GridKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridKind::Analytic => "analytic",
            GridKind::EstimatedKnownMargins => "estimated-known-margins",
            GridKind::EstimatedEmpiricalMargins => "estimated-empirical-margins",
        }
    }
}

impl FromStr for GridKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(GridKind::Analytic),
            "estimated-known-margins" => Ok(GridKind::EstimatedKnownMargins),
            "estimated-empirical-margins" => Ok(GridKind::EstimatedEmpiricalMargins),
            other => Err(Error::InvalidGrid(format!("unknown grid kind {other:?}"))),
        }
    }
}

/// Slack allowed when checking that a madogram value lies in `[0, 1/2]`.
pub const BOUND_SLACK: f64 = 1e-12;

/// Madogram values on an `(alpha, beta)` grid; `values[a][b]` belongs to
/// `(alphas[a], betas[b])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadogramGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub kind: GridKind,
    pub region_x: Region,
    pub region_y: Region,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(rename = "T", default)]
    pub t: Option<usize>,
}

impl MadogramGrid {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::InvalidGrid("alpha and beta grids must be non-empty".into()));
        }
        if self.values.len() != self.alphas.len()
            || self.values.iter().any(|r| r.len() != self.betas.len())
        {
            return Err(Error::InvalidGrid(format!(
                "values must be {} x {}",
                self.alphas.len(),
                self.betas.len()
            )));
        }
        for v in self.values.iter().flatten() {
            if !(v.is_finite() && (-BOUND_SLACK..=0.5 + BOUND_SLACK).contains(v)) {
                return Err(Error::InvalidGrid(format!("value {v} outside [0, 1/2]")));
            }
        }
        Ok(())
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a][b]
    }
}

/// Point estimate with the plug-in variance components and a 95% normal
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub nu_hat: f64,
    pub gamma_hat: f64,
    pub sigma2_hat: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub ci95: (f64, f64),
    /// Set when the interval reuses the known-margin variance formula on
    /// rank-transformed data, where it has no proven validity.
    pub approximate: bool,
}

impl EstimateWithError {
    pub fn from_components(nu_hat: f64, gamma_hat: f64, t: usize, approximate: bool) -> Self {
        let sigma2_hat = (0.5 * gamma_hat - nu_hat * nu_hat).max(0.0);
        let half = 1.96 * (sigma2_hat / t as f64).sqrt();
        EstimateWithError {
            nu_hat,
            gamma_hat,
            sigma2_hat,
            t,
            ci95: (nu_hat - half, nu_hat + half),
            approximate,
        }
    }

    pub fn standard_error(&self) -> f64 {
        (self.sigma2_hat / self.t as f64).sqrt()
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}
