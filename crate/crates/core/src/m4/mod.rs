//! Moving-maxima (M4) random fields on the integer lattice.

pub mod analytic;
pub mod simulate;
pub mod spec;

pub use analytic::{
    analytic_grid, analytic_madogram, analytic_v, centering, epsilon_relation,
    extremal_coefficient, nu_from_extremal_coefficients, reference_independent,
    reference_total_dependence, AnalyticMadogram, EpsilonRelation,
};
pub use simulate::{sample_unit_frechet, simulate_m4, simulate_m4_with, InnovationMatrix};
pub use spec::{lattice, presets, M4Spec};
