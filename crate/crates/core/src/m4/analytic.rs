//! Closed-form dependence quantities of an M4 field.

use serde::{Deserialize, Serialize};

use crate::domain::{DependenceQuery, GridKind, Location, MadogramGrid, Region};
use crate::error::{Error, Result};
use crate::m4::M4Spec;

/// Slack for comparisons between extremal coefficients.
const EPS_TOL: f64 = 1e-12;

/// Dependence function `V(z) = sum_{l,m} max_i a_{lm,x_i} / z_i`.
pub fn analytic_v(spec: &M4Spec, locations: &[Location], z: &[f64]) -> Result<f64> {
    if z.len() != locations.len() {
        return Err(Error::DimensionMismatch {
            expected: locations.len(),
            got: z.len(),
        });
    }
    if locations.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(bad) = z.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::param(format!("z entries must be positive, got {bad}")));
    }
    let blocks = locations
        .iter()
        .map(|l| spec.coeffs(l))
        .collect::<Result<Vec<_>>>()?;
    let cells = spec.patterns() * spec.width();
    let inv: Vec<f64> = z.iter().map(|v| v.recip()).collect();
    Ok((0..cells)
        .map(|c| {
            blocks
                .iter()
                .zip(&inv)
                .map(|(b, w)| w * b[c])
                .fold(0.0, f64::max)
        })
        .sum())
}

/// `V` of the region at `(1, ..., 1)`; between 1 and the region size.
pub fn extremal_coefficient(spec: &M4Spec, region: &Region) -> Result<f64> {
    analytic_v(spec, region.locations(), &vec![1.0; region.len()])
}

/// Centering term `c(alpha, beta)` built from the within-region
/// extremal coefficients.
pub fn centering(eps_x: f64, eps_y: f64, alpha: f64, beta: f64) -> f64 {
    0.5 * (eps_x / (alpha + eps_x) + eps_y / (beta + eps_y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMadogram {
    pub nu: f64,
    /// `V` over `x` then `y` at `(alpha, ..., alpha, beta, ..., beta)`.
    pub v_joint: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub c: f64,
}

pub fn analytic_madogram(
    spec: &M4Spec,
    x: &Region,
    y: &Region,
    q: DependenceQuery,
) -> Result<AnalyticMadogram> {
    x.ensure_disjoint(y)?;
    let mut locations = x.locations().to_vec();
    locations.extend_from_slice(y.locations());
    let mut z = vec![q.alpha; x.len()];
    z.extend(std::iter::repeat_n(q.beta, y.len()));
    let v_joint = analytic_v(spec, &locations, &z)?;
    let eps_x = extremal_coefficient(spec, x)?;
    let eps_y = extremal_coefficient(spec, y)?;
    let c = centering(eps_x, eps_y, q.alpha, q.beta);
    Ok(AnalyticMadogram {
        nu: v_joint / (1.0 + v_joint) - c,
        v_joint,
        eps_x,
        eps_y,
        c,
    })
}

/// Closed-form madogram over a grid; negative rounding noise at exact
/// zeros is clamped to 0.
pub fn analytic_grid(
    spec: &M4Spec,
    x: &Region,
    y: &Region,
    alphas: &[f64],
    betas: &[f64],
) -> Result<MadogramGrid> {
    let values = alphas
        .iter()
        .map(|&a| {
            betas
                .iter()
                .map(|&b| {
                    let q = DependenceQuery::new(a, b)?;
                    Ok(analytic_madogram(spec, x, y, q)?.nu.max(0.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = MadogramGrid {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        values,
        kind: GridKind::Analytic,
        region_x: x.clone(),
        region_y: y.clone(),
        seed: None,
        t: None,
    };
    grid.validate()?;
    Ok(grid)
}

fn check_reference_args(eps_x: f64, eps_y: f64, alpha: f64) -> Result<()> {
    if !(eps_x >= 1.0 - EPS_TOL && eps_y >= 1.0 - EPS_TOL) {
        return Err(Error::param(format!(
            "extremal coefficients must be >= 1, got ({eps_x}, {eps_y})"
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// `nu^{alpha,alpha}` when `M(x)` and `M(y)` are independent.
pub fn reference_independent(eps_x: f64, eps_y: f64, alpha: f64) -> Result<f64> {
    check_reference_args(eps_x, eps_y, alpha)?;
    let s = eps_x + eps_y;
    Ok(s / (alpha + s) - centering(eps_x, eps_y, alpha, alpha))
}

/// `nu^{alpha,alpha}` when `M(x)` and `M(y)` are totally dependent.
pub fn reference_total_dependence(eps_x: f64, eps_y: f64, alpha: f64) -> Result<f64> {
    check_reference_args(eps_x, eps_y, alpha)?;
    let m = eps_x.max(eps_y);
    Ok(m / (alpha + m) - centering(eps_x, eps_y, alpha, alpha))
}

/// `nu^{alpha,alpha}` from the extremal coefficients of `x`, `y` and `x u y`.
pub fn nu_from_extremal_coefficients(eps_union: f64, eps_x: f64, eps_y: f64, alpha: f64) -> f64 {
    eps_union / (alpha + eps_union) - centering(eps_x, eps_y, alpha, alpha)
}

/// The normalized coefficients `eps1 = eps_union / eps_y` and
/// `eps2 = eps_union / (eps_x + eps_y)`, with the two madogram
/// reconstructions they give.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRelation {
    pub eps1: f64,
    pub eps2: f64,
    pub nu_via_eps1: f64,
    pub nu_via_eps2: f64,
}

/// Requires `max(eps_x, eps_y) <= eps_union <= eps_x + eps_y`, which every
/// max-stable vector satisfies.
pub fn epsilon_relation(
    eps_x: f64,
    eps_y: f64,
    eps_union: f64,
    alpha: f64,
) -> Result<EpsilonRelation> {
    check_reference_args(eps_x, eps_y, alpha)?;
    if eps_union < eps_x.max(eps_y) - EPS_TOL || eps_union > eps_x + eps_y + EPS_TOL {
        return Err(Error::param(format!(
            "eps_union {eps_union} must lie in [max(eps_x, eps_y), eps_x + eps_y] = [{}, {}]",
            eps_x.max(eps_y),
            eps_x + eps_y
        )));
    }
    let c = centering(eps_x, eps_y, alpha, alpha);
    let eps1 = eps_union / eps_y;
    let eps2 = eps_union / (eps_x + eps_y);
    let a = eps_y * eps1;
    let b = (eps_x + eps_y) * eps2;
    Ok(EpsilonRelation {
        eps1,
        eps2,
        nu_via_eps1: a / (alpha + a) - c,
        nu_via_eps2: b / (alpha + b) - c,
    })
}
