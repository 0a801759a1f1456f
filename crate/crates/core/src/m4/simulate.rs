use rand::distributions::Open01;
use rand::Rng;

use crate::domain::{Location, Margin, Panel};
use crate::error::{Error, Result};
use crate::m4::M4Spec;
use crate::rng;

/// Inverse-CDF draw from `F(x) = exp(-1/x)`.
pub fn sample_unit_frechet(uniform: f64) -> Result<f64> {
    if !(uniform > 0.0 && uniform < 1.0) {
        return Err(Error::param(format!("uniform must lie in (0, 1), got {uniform}")));
    }
    Ok(-1.0 / uniform.ln())
}

/// Independent unit-Frechet innovations `X_{l, 1-m}` for one field draw,
/// stored as `L x W` with column `w` holding lag `m = m_min + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationMatrix {
    patterns: usize,
    width: usize,
    values: Vec<f64>,
}

impl InnovationMatrix {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, patterns: usize, width: usize) -> Self {
        let values = (0..patterns * width)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                -1.0 / u.ln()
            })
            .collect();
        InnovationMatrix {
            patterns,
            width,
            values,
        }
    }

    pub fn from_values(patterns: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != patterns * width {
            return Err(Error::DimensionMismatch {
                expected: patterns * width,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::param("innovations must be finite and positive"));
        }
        Ok(InnovationMatrix {
            patterns,
            width,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, l: usize, w: usize) -> f64 {
        self.values[l * self.width + w]
    }
}

/// `Z_x = max_{l, m} a_{lm,x} X_{l,1-m}` for one location.
pub fn moving_maximum(coeffs: &[f64], innovations: &InnovationMatrix) -> f64 {
    coeffs
        .iter()
        .zip(&innovations.values)
        .map(|(a, x)| a * x)
        .fold(0.0, f64::max)
}

/// Draws `t` independent fields at `locations`. Each row gets its own
/// innovation matrix, shared by all locations of that row.
pub fn simulate_m4(spec: &M4Spec, locations: &[Location], t: usize, seed: u64) -> Result<Panel> {
    let mut rng = rng::stream(seed);
    simulate_m4_with(spec, locations, t, &mut rng)
}

pub fn simulate_m4_with<R: Rng + ?Sized>(
    spec: &M4Spec,
    locations: &[Location],
    t: usize,
    rng: &mut R,
) -> Result<Panel> {
    if t == 0 {
        return Err(Error::TooFewReplications {
            required: 1,
            got: 0,
        });
    }
    let blocks = locations
        .iter()
        .map(|l| spec.coeffs(l))
        .collect::<Result<Vec<_>>>()?;
    let (patterns, width) = (spec.patterns(), spec.width());
    let mut values = Vec::with_capacity(t * locations.len());
    for _ in 0..t {
        let innovations = InnovationMatrix::draw(rng, patterns, width);
        values.extend(blocks.iter().map(|b| moving_maximum(b, &innovations)));
    }
    Panel::from_flat(locations.to_vec(), values, Margin::UnitFrechet)
}
