//! Synthetic North Atlantic stand-in: a coarse hand-digitised outline of the
//! 1000 m isobath between 15°N and 65°N, meshed by mapping the graded unit
//! square onto it, plus smooth synthetic bathymetry and January-like wind
//! stress on a 2° grid. Only the geometry is meant to be plausible; none of
//! it is observational data.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use topomode::dynamics::LatLonMap;
use topomode::grid::{save_grid, Grid2D};
use topomode::mesh::{save_mesh, GradedSquare, Mesh};

use crate::error::Result;

/// Basin length scale of the lat/lon map (m).
pub const BASIN_SCALE: f64 = 5.5e6;
pub const SOUTH_DEG: f64 = 15.0;
pub const NORTH_DEG: f64 = 65.0;
/// Depth along the outline (m).
pub const SHELF_DEPTH: f64 = 1000.0;

/// `(latitude, western longitude, eastern longitude)` in degrees.
const OUTLINE: [(f64, f64, f64); 11] = [
    (15.0, -60.0, -18.0),
    (20.0, -66.0, -18.0),
    (25.0, -75.0, -16.0),
    (30.0, -77.0, -12.0),
    (35.0, -74.0, -10.0),
    (40.0, -68.0, -10.0),
    (45.0, -52.0, -9.0),
    (50.0, -47.0, -11.0),
    (55.0, -50.0, -14.0),
    (60.0, -45.0, -10.0),
    (65.0, -38.0, -15.0),
];

/// Western and eastern boundary longitudes at `lat` (clamped to the basin's
/// latitude range).
pub fn coast_longitudes(lat: f64) -> (f64, f64) {
    let lat = lat.clamp(SOUTH_DEG, NORTH_DEG);
    let i = OUTLINE
        .windows(2)
        .position(|w| lat <= w[1].0)
        .unwrap_or(OUTLINE.len() - 2);
    let (a, b) = (OUTLINE[i], OUTLINE[i + 1]);
    let s = (lat - a.0) / (b.0 - a.0);
    (a.1 + s * (b.1 - a.1), a.2 + s * (b.2 - a.2))
}

/// Fraction of the way across the basin from the western boundary (0) to
/// the eastern one (1).
fn zonal_fraction(lon: f64, lat: f64) -> f64 {
    let (w, e) = coast_longitudes(lat);
    (lon - w) / (e - w)
}

pub fn sample_basin_mesh() -> Result<Mesh> {
    let unit = GradedSquare::standard(1.0).build()?;
    let map = LatLonMap::north_atlantic(BASIN_SCALE);
    Ok(unit.map_coordinates(|[s, t]| {
        let lat = SOUTH_DEG + t * (NORTH_DEG - SOUTH_DEG);
        let (w, e) = coast_longitudes(lat);
        let (x, y) = map.to_plane(w + s * (e - w), lat);
        [x, y]
    })?)
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn lon_axis() -> Vec<f64> {
    axis(-82.0, 0.0, 2.0)
}

fn lat_axis() -> Vec<f64> {
    axis(10.0, 70.0, 2.0)
}

/// Depth (m): 1000 m on and outside the outline, a continental slope over the
/// outer 8% of the basin width, a 4500 m abyss and a mid-ocean ridge rising
/// to 3000 m.
pub fn sample_bathymetry() -> Result<Grid2D> {
    Ok(Grid2D::from_fn(lon_axis(), lat_axis(), |lon, lat| {
        let s = zonal_fraction(lon, lat);
        let slope = (s.min(1.0 - s) / 0.08).clamp(0.0, 1.0);
        let ridge = 1500.0 * (-((s - 0.55) / 0.07).powi(2)).exp();
        SHELF_DEPTH + 3500.0 * slope - ridge * slope
    })?)
}

/// Zonal and meridional wind stress (N/m²): trades in the south, westerlies
/// near 45°N, weak easterlies in the far north.
pub fn sample_wind_stress() -> Result<(Grid2D, Grid2D)> {
    let tau_x = Grid2D::from_fn(lon_axis(), lat_axis(), |lon, lat| {
        -0.1 * (2.0 * PI * (lat - 15.0) / 60.0).cos() * (1.0 - 0.2 * (lon + 40.0) / 40.0)
    })?;
    let tau_y = Grid2D::from_fn(lon_axis(), lat_axis(), |lon, lat| {
        0.01 * (PI * (lon + 80.0) / 80.0).sin() * (PI * (lat - 15.0) / 50.0).cos()
    })?;
    Ok((tau_x, tau_y))
}

pub const MESH_FILE: &str = "north_atlantic.mesh";
pub const BATHYMETRY_FILE: &str = "north_atlantic_depth.grid";
pub const TAU_X_FILE: &str = "north_atlantic_tau_x.grid";
pub const TAU_Y_FILE: &str = "north_atlantic_tau_y.grid";

/// Writes the sample mesh and grids into `dir`.
pub fn write_sample_data(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [MESH_FILE, BATHYMETRY_FILE, TAU_X_FILE, TAU_Y_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    save_mesh(&sample_basin_mesh()?, &paths[0])?;
    save_grid(&sample_bathymetry()?, &paths[1])?;
    let (tx, ty) = sample_wind_stress()?;
    save_grid(&tx, &paths[2])?;
    save_grid(&ty, &paths[3])?;
    Ok(paths)
}
