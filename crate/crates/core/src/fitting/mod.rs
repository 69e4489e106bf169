//! Fitting the continuous spline model to discrete motion bases and camera
//! poses under a data + physics objective, and initializing those discrete
//! bases from 3D point tracks.

mod init;
mod loss;
mod solver;

pub use init::{init_bases_from_tracks, kmeans, InitReport, InitResult, TrackSet};
pub use loss::{
    data_loss, grid_weights, physics_grid, physics_loss, regularized_channel, total_loss,
    total_loss_gradient, LossBreakdown, PhysicsOperator,
};
pub use solver::{
    closed_form, fit, fit_detailed, greville_init, iterative, solver_registry, BothSolver,
    ClosedFormSolver, FitOutcome, IterativeSolver, SolverComparison, SplineSolver,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub lambda_phys: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Physics-grid weight on the boundary spans (≥ 1).
    pub extrap_weight: f64,
    /// Width (in t01 units) of each upweighted boundary span.
    pub boundary_fraction: f64,
    /// Regularize camera rotation channels.
    pub rot_toggle: bool,
    pub phys_grid_size: usize,
    /// Registered solver name: `iterative`, `closed_form` or `both`.
    pub solver: String,
    /// Minibatch shuffling seed for the iterative solver.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_phys: 1e-4,
            learning_rate: 1e-5,
            epochs: 1000,
            batch_size: 64,
            extrap_weight: 4.0,
            boundary_fraction: 0.1,
            rot_toggle: true,
            phys_grid_size: 256,
            solver: "closed_form".to_string(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lambda_phys >= 0.0) || !self.lambda_phys.is_finite() {
            return bad("lambda_phys must be >= 0");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.extrap_weight >= 1.0) {
            return bad("extrap_weight must be >= 1");
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 0.5) {
            return bad("boundary_fraction must lie in (0, 0.5)");
        }
        if self.phys_grid_size < 8 {
            return bad("phys_grid_size must be >= 8");
        }
        if !solver_registry().contains(&self.solver) {
            return Err(Error::UnknownStrategy {
                kind: "spline solver",
                name: self.solver.clone(),
            });
        }
        Ok(())
    }
}
