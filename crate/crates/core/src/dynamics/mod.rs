//! Barotropic vorticity dynamics: forcing and topography construction, the
//! semi-discrete model and its time integration.

mod forcing;
mod model;
mod trajectory;

pub use forcing::{
    gridded_wind_curl, sinusoidal_topography, two_gyre_forcing, wind_curl_grid, Forcing, LatLonMap,
    ModelParams,
};
pub use model::{Model, ModelState, Scheme, Terms};
pub use trajectory::{
    integrate_trajectory, run_to_stationary, save_trajectory, spin_up, write_diagnostics_csv,
    write_field, write_snapshot, DiagnosticsRecord, SpinUp, StationarityReport, Trajectory,
};
