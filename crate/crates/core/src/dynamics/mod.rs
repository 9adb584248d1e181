//! Particle paths along the fluid velocity fields and the energy
//! conservation experiment for eigenstate superpositions.

mod conservation;
mod trajectory;

pub use conservation::{
    closed_form_energy_density, conservation_experiment, gram_matrix, ConservationSeries, GRAM_TOL,
};
pub use trajectory::{
    integrate_many, integrate_trajectory, mass_flux_along, velocity_at, FluxSeries, Termination,
    TerminationReason, Trajectory, TrajectoryOptions, VelocityKind,
};
