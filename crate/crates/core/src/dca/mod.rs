//! Coupling analysis by perturbation sweeps.
//!
//! For every ordered pair (A, B), B is swept across its range while A is
//! re-optimized with everything else at nominal. The slopes of the optimal
//! response `x̂*_A` and of the optimized objective `Ψ̂` along the sweep are
//! aggregated by a norm into `J_x(A,B)` and `J_Ψ(A,B)`. All quantities live
//! in normalized coordinates.

mod heatmap;
mod report;
mod sweep;

pub use heatmap::render_heatmap;
pub use report::{asymmetry_index, coupling_matrices, CouplingReport, MaskedMatrix, Matrix, ASYMMETRY_EPS, REPORT_FORMAT};
pub use sweep::{
    differentiate, sweep_cell, sweep_grid, CellRecord, InfeasiblePolicy, Norm, Scheme, SweepConfig, SweepPoint,
    AT_BOUND_TOL, ENDPOINT_NUDGE, MIN_INCLUDED,
};
