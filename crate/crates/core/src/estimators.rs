//! Non-parametric estimators of the generalized madogram.
//!
//! Both estimators average `|G_x(t)^alpha - G_y(t)^beta| / 2` over the
//! replications, where `G_x(t)` is the margin-transformed maximum of the
//! region `x` in row `t`:
//!
//! * known margins: `G_x(t) = F(M_t(x))` with `F(z) = exp(-1/z)`;
//! * empirical margins: `G_x(t) = max_i Fhat_i(Z_t(x_i))` where `Fhat_i` is
//!   the empirical CDF of column `i` (rank / T).
//!
//! The rank route never forms `-1/log Fhat`, so the sample maximum (rank
//! `T`, `Fhat = 1`) needs no special casing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::domain::{
    region_maxima, DependenceQuery, EstimateWithError, GridKind, Location, MadogramGrid, Margin,
    Panel, Region,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    KnownMargins,
    EmpiricalMargins,
}

impl EstimatorKind {
    pub fn grid_kind(self) -> GridKind {
        match self {
            EstimatorKind::KnownMargins => GridKind::EstimatedKnownMargins,
            EstimatorKind::EmpiricalMargins => GridKind::EstimatedEmpiricalMargins,
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known-margins" | "known" => Ok(EstimatorKind::KnownMargins),
            "empirical-margins" | "empirical" => Ok(EstimatorKind::EmpiricalMargins),
            other => Err(Error::param(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Fraction of entries `<= u`.
pub fn empirical_cdf(column: &[f64], u: f64) -> f64 {
    if column.is_empty() {
        return 0.0;
    }
    column.iter().filter(|&&z| z <= u).count() as f64 / column.len() as f64
}

/// `Fhat(z_t)` for every entry of the column: the number of entries
/// `<= z_t`, divided by the column length. Tied entries share the largest
/// rank of their group.
pub fn empirical_ranks(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        let u = end as f64 / n as f64;
        for &idx in &order[start..end] {
            ranks[idx] = u;
        }
        start = end;
    }
    ranks
}

/// A panel together with its column-wise empirical CDF values.
#[derive(Debug, Clone)]
pub struct EmpiricalMarginPanel {
    source: Panel,
    u: Vec<f64>,
}

impl EmpiricalMarginPanel {
    pub fn new(panel: &Panel) -> Self {
        let (rows, cols) = (panel.n_rows(), panel.n_cols());
        let mut u = vec![0.0; rows * cols];
        for c in 0..cols {
            for (t, r) in empirical_ranks(&panel.column(c)).into_iter().enumerate() {
                u[t * cols + c] = r;
            }
        }
        EmpiricalMarginPanel {
            source: panel.clone(),
            u,
        }
    }

    pub fn source(&self) -> &Panel {
        &self.source
    }

    pub fn u_row(&self, t: usize) -> &[f64] {
        let w = self.source.n_cols();
        &self.u[t * w..(t + 1) * w]
    }

    /// `max_i Fhat_i(Z_t(x_i))` for every row.
    pub fn region_max(&self, region: &Region) -> Result<Vec<f64>> {
        let cols = self.source.region_columns(region)?;
        Ok((0..self.source.n_rows())
            .map(|t| {
                let row = self.u_row(t);
                cols.iter().map(|&c| row[c]).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scale {
    /// Stored values are region maxima `M` on the unit-Frechet scale.
    Frechet,
    /// Stored values are already in `(0, 1]`.
    Uniform,
}

/// Region-to-region data reduced to one number per replication and
/// region, reusable across `(alpha, beta)` cells.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    x: Vec<f64>,
    y: Vec<f64>,
    scale: Scale,
}

fn check_pair(panel: &Panel, x: &Region, y: &Region) -> Result<()> {
    x.ensure_disjoint(y)?;
    if panel.n_rows() < 2 {
        return Err(Error::TooFewReplications {
            required: 2,
            got: panel.n_rows(),
        });
    }
    Ok(())
}

impl PreparedPair {
    pub fn known_margins(panel: &Panel, x: &Region, y: &Region) -> Result<Self> {
        if panel.margin() != Margin::UnitFrechet {
            return Err(Error::RawMargins);
        }
        check_pair(panel, x, y)?;
        Ok(PreparedPair {
            x: region_maxima(panel, x)?,
            y: region_maxima(panel, y)?,
            scale: Scale::Frechet,
        })
    }

    pub fn empirical_margins(panel: &Panel, x: &Region, y: &Region) -> Result<Self> {
        check_pair(panel, x, y)?;
        Self::from_empirical(&EmpiricalMarginPanel::new(panel), x, y)
    }

    pub fn from_empirical(emp: &EmpiricalMarginPanel, x: &Region, y: &Region) -> Result<Self> {
        check_pair(emp.source(), x, y)?;
        Ok(PreparedPair {
            x: emp.region_max(x)?,
            y: emp.region_max(y)?,
            scale: Scale::Uniform,
        })
    }

    pub fn new(panel: &Panel, x: &Region, y: &Region, kind: EstimatorKind) -> Result<Self> {
        match kind {
            EstimatorKind::KnownMargins => Self::known_margins(panel, x, y),
            EstimatorKind::EmpiricalMargins => Self::empirical_margins(panel, x, y),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    fn power(&self, v: f64, e: f64) -> f64 {
        match self.scale {
            Scale::Frechet => (-e / v).exp(),
            Scale::Uniform => v.powf(e),
        }
    }

    pub fn estimate(&self, q: DependenceQuery) -> EstimateWithError {
        let (mut sum_abs, mut sum_sq) = (0.0, 0.0);
        for (&mx, &my) in self.x.iter().zip(&self.y) {
            let d = self.power(mx, q.alpha) - self.power(my, q.beta);
            sum_abs += d.abs();
            sum_sq += d * d;
        }
        let t = self.len();
        let denom = 2.0 * t as f64;
        EstimateWithError::from_components(
            sum_abs / denom,
            sum_sq / denom,
            t,
            self.scale == Scale::Uniform,
        )
    }
}

pub fn known_margin_estimate(
    panel: &Panel,
    x: &Region,
    y: &Region,
    q: DependenceQuery,
) -> Result<EstimateWithError> {
    Ok(PreparedPair::known_margins(panel, x, y)?.estimate(q))
}

/// Rank-based estimate; the interval is flagged approximate.
pub fn empirical_margin_estimate(
    panel: &Panel,
    x: &Region,
    y: &Region,
    q: DependenceQuery,
) -> Result<EstimateWithError> {
    Ok(PreparedPair::empirical_margins(panel, x, y)?.estimate(q))
}

pub fn estimate(
    panel: &Panel,
    x: &Region,
    y: &Region,
    q: DependenceQuery,
    kind: EstimatorKind,
) -> Result<EstimateWithError> {
    Ok(PreparedPair::new(panel, x, y, kind)?.estimate(q))
}

/// Point estimates over an `(alpha, beta)` grid; rows are evaluated in parallel.
pub fn estimate_grid(
    panel: &Panel,
    x: &Region,
    y: &Region,
    alphas: &[f64],
    betas: &[f64],
    kind: EstimatorKind,
) -> Result<MadogramGrid> {
    let pair = PreparedPair::new(panel, x, y, kind)?;
    let queries = grid_queries(alphas, betas)?;
    let values = queries
        .par_iter()
        .map(|row| row.iter().map(|q| pair.estimate(*q).nu_hat).collect())
        .collect();
    let grid = MadogramGrid {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        values,
        kind: kind.grid_kind(),
        region_x: x.clone(),
        region_y: y.clone(),
        seed: None,
        t: Some(panel.n_rows()),
    };
    grid.validate()?;
    Ok(grid)
}

pub(crate) fn grid_queries(alphas: &[f64], betas: &[f64]) -> Result<Vec<Vec<DependenceQuery>>> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidGrid("alpha and beta grids must be non-empty".into()));
    }
    alphas
        .iter()
        .map(|&a| betas.iter().map(|&b| DependenceQuery::new(a, b)).collect())
        .collect()
}

/// Pairwise lambda-madogram `(1/2T) sum_t |G_1(t)^lambda - G_2(t)^(1-lambda)|`.
pub fn lambda_madogram(
    panel: &Panel,
    x1: Location,
    x2: Location,
    lambda: f64,
    kind: EstimatorKind,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let c1 = panel.column_index(&x1)?;
    let c2 = panel.column_index(&x2)?;
    if c1 == c2 {
        return Err(Error::OverlappingRegions(vec![x1]));
    }
    let (z1, z2) = (panel.column(c1), panel.column(c2));
    let t = z1.len();
    if t < 2 {
        return Err(Error::TooFewReplications { required: 2, got: t });
    }
    let beta = 1.0 - lambda;
    let mut sum = 0.0;
    match kind {
        EstimatorKind::KnownMargins => {
            if panel.margin() != Margin::UnitFrechet {
                return Err(Error::RawMargins);
            }
            for (a, b) in z1.iter().zip(&z2) {
                sum += ((-lambda / a).exp() - (-beta / b).exp()).abs();
            }
        }
        EstimatorKind::EmpiricalMargins => {
            let (u1, u2) = (empirical_ranks(&z1), empirical_ranks(&z2));
            for (a, b) in u1.iter().zip(&u2) {
                sum += (a.powf(lambda) - b.powf(beta)).abs();
            }
        }
    }
    Ok(sum / (2.0 * t as f64))
}

/// How `lambda` maps to `(alpha, beta)` along a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaConvention {
    /// `alpha = lambda / k`, `beta = (1 - lambda) / s`.
    PerLocation,
    /// `alpha = lambda / 2`, `beta = 1 - lambda`.
    Figure9,
}

impl LambdaConvention {
    pub fn exponents(self, lambda: f64, k: usize, s: usize) -> (f64, f64) {
        match self {
            LambdaConvention::PerLocation => (lambda / k as f64, (1.0 - lambda) / s as f64),
            LambdaConvention::Figure9 => (lambda / 2.0, 1.0 - lambda),
        }
    }
}

impl FromStr for LambdaConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-location" => Ok(LambdaConvention::PerLocation),
            "figure9" => Ok(LambdaConvention::Figure9),
            other => Err(Error::param(format!("unknown lambda convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSlice {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    pub k: usize,
    pub s: usize,
    pub convention: LambdaConvention,
    pub region_x: Region,
    pub region_y: Region,
    #[serde(rename = "T")]
    pub t: usize,
}

/// Empirical-margin estimates along a lambda path.
pub fn lambda_slice(
    panel: &Panel,
    x: &Region,
    y: &Region,
    lambdas: &[f64],
    convention: LambdaConvention,
) -> Result<LambdaSlice> {
    lambda_slice_with(panel, x, y, lambdas, convention, EstimatorKind::EmpiricalMargins)
}

pub fn lambda_slice_with(
    panel: &Panel,
    x: &Region,
    y: &Region,
    lambdas: &[f64],
    convention: LambdaConvention,
    kind: EstimatorKind,
) -> Result<LambdaSlice> {
    if lambdas.is_empty() {
        return Err(Error::param("lambda list is empty"));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::param(format!("lambda must lie in (0, 1), got {bad}")));
    }
    let pair = PreparedPair::new(panel, x, y, kind)?;
    let (k, s) = (x.len(), y.len());
    let (alphas, betas): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .map(|&l| convention.exponents(l, k, s))
        .unzip();
    let values = alphas
        .iter()
        .zip(&betas)
        .map(|(&a, &b)| Ok(pair.estimate(DependenceQuery::new(a, b)?).nu_hat))
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaSlice {
        lambdas: lambdas.to_vec(),
        alphas,
        betas,
        values,
        k,
        s,
        convention,
        region_x: x.clone(),
        region_y: y.clone(),
        t: panel.n_rows(),
    })
}
