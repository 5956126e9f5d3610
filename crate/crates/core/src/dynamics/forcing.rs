use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::mesh::DofMap;

/// Physical parameters of the barotropic model, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Coriolis parameter at `y = 0` (1/s).
    pub f0: f64,
    /// Meridional gradient of the Coriolis parameter (1/(m s)).
    pub beta: f64,
    /// Linear bottom friction (1/s).
    pub sigma: f64,
    /// Lateral viscosity (m²/s).
    pub nu: f64,
    /// Reference density (kg/m³).
    pub rho0: f64,
    /// Characteristic depth (m).
    pub h0: f64,
    /// Basin length scale (m).
    pub l: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if ![
            self.f0, self.beta, self.sigma, self.nu, self.rho0, self.h0, self.l,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite model parameter".into()));
        }
        if self.sigma < 0.0 {
            return bad("sigma must be >= 0, got sigma", self.sigma);
        }
        if self.nu <= 0.0 {
            return bad("nu must be > 0, got nu", self.nu);
        }
        if self.h0 <= 0.0 {
            return bad("H0 must be > 0, got H0", self.h0);
        }
        if self.rho0 <= 0.0 {
            return bad("rho0 must be > 0, got rho0", self.rho0);
        }
        if self.l <= 0.0 {
            return bad("L must be > 0, got L", self.l);
        }
        Ok(())
    }
}

/// Nodal wind-curl forcing divided by `ρ0 H0` (1/s²).
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub values: Vec<f64>,
}

impl Forcing {
    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    fn checked(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("forcing is not finite".into()));
        }
        Ok(Self { values })
    }
}

/// Double-gyre forcing `-(2π τ0 / L) sin(2π y / L) / (ρ0 H0)`, with `τ0` in N/m².
pub fn two_gyre_forcing(params: &ModelParams, tau0: f64, dofmap: &DofMap) -> Result<Forcing> {
    params.validate()?;
    let k = 2.0 * PI / params.l;
    let amp = -k * tau0 / (params.rho0 * params.h0);
    Forcing::checked(dofmap.interpolate(|_, y| amp * (k * y).sin()))
}

/// Affine map from the model plane to latitude and longitude:
/// `φ = φ0 + y·span/L` and `λ = λ0 + (x·span/L) / cos φ` (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLonMap {
    pub phi0_deg: f64,
    pub lambda0_deg: f64,
    pub span_deg: f64,
    pub l: f64,
}

impl LatLonMap {
    pub fn north_atlantic(l: f64) -> Self {
        Self {
            phi0_deg: 20.0,
            lambda0_deg: -40.0,
            span_deg: 50.0,
            l,
        }
    }

    /// `(longitude, latitude)` in degrees.
    pub fn to_lon_lat(&self, x: f64, y: f64) -> (f64, f64) {
        let phi = self.phi0_deg + y * self.span_deg / self.l;
        let lambda = self.lambda0_deg + (x * self.span_deg / self.l) / phi.to_radians().cos();
        (lambda, phi)
    }

    /// Inverse of [`LatLonMap::to_lon_lat`].
    pub fn to_plane(&self, lon: f64, lat: f64) -> (f64, f64) {
        let y = (lat - self.phi0_deg) * self.l / self.span_deg;
        let x = (lon - self.lambda0_deg) * lat.to_radians().cos() * self.l / self.span_deg;
        (x, y)
    }

    /// Metres of `y` per radian of latitude, inverted: `dφ/dy` in rad/m.
    pub fn radians_per_metre(&self) -> f64 {
        self.span_deg.to_radians() / self.l
    }
}

fn derivative(axis: &[f64], i: usize, f: impl Fn(usize) -> f64) -> f64 {
    let n = axis.len();
    let (a, b) = if i == 0 {
        (0, 1)
    } else if i == n - 1 {
        (n - 2, n - 1)
    } else {
        (i - 1, i + 1)
    };
    (f(b) - f(a)) / (axis[b] - axis[a]).to_radians()
}

/// Wind-stress curl on the data grid, `-∂τx/∂φ + (1/cos φ) ∂τy/∂λ`, with
/// derivatives per radian (centred differences inside the grid, one-sided at
/// its edges). Both grids share lon (x axis) / lat (y axis) axes in degrees.
pub fn wind_curl_grid(tau_x: &Grid2D, tau_y: &Grid2D) -> Result<Grid2D> {
    if tau_x.xs() != tau_y.xs() || tau_x.ys() != tau_y.ys() {
        return Err(Error::InvalidParameter(
            "wind-stress components must share axes".into(),
        ));
    }
    let lon = tau_x.xs();
    let lat = tau_x.ys();
    let mut values = Vec::with_capacity(lon.len() * lat.len());
    for (j, phi) in lat.iter().enumerate() {
        for i in 0..lon.len() {
            let dtx_dphi = derivative(lat, j, |jj| tau_x.at(i, jj));
            let dty_dlam = derivative(lon, i, |ii| tau_y.at(ii, j));
            values.push(-dtx_dphi + dty_dlam / phi.to_radians().cos());
        }
    }
    Grid2D::new(lon.to_vec(), lat.to_vec(), values)
}

/// Forcing from gridded wind stress (N/m²): the curl is evaluated on the data
/// grid, interpolated bilinearly to the dofs through `map`, converted from
/// per-radian to per-metre with the map's meridional scale and divided by
/// `ρ0 H0`.
pub fn gridded_wind_curl(
    tau_x: &Grid2D,
    tau_y: &Grid2D,
    map: &LatLonMap,
    params: &ModelParams,
    dofmap: &DofMap,
) -> Result<Forcing> {
    params.validate()?;
    let curl = wind_curl_grid(tau_x, tau_y)?;
    let scale = map.radians_per_metre() / (params.rho0 * params.h0);
    let values = dofmap
        .dof_coords()
        .iter()
        .map(|p| {
            let (lon, lat) = map.to_lon_lat(p[0], p[1]);
            curl.interpolate(lon, lat)
                .map(|c| c * scale)
                .map_err(|_| Error::OutsideGrid { x: p[0], y: p[1] })
        })
        .collect::<Result<Vec<_>>>()?;
    Forcing::checked(values)
}

/// Depth `H = base + α sin(kx π x / L) sin(ky π y / L)` and its reciprocal.
pub fn sinusoidal_topography(
    alpha: f64,
    kx: u32,
    ky: u32,
    base: f64,
    l: f64,
    dofmap: &DofMap,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(base - alpha.abs() > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "depth {base} - |{alpha}| must be positive"
        )));
    }
    let h = dofmap.interpolate(|x, y| {
        base + alpha * (kx as f64 * PI * x / l).sin() * (ky as f64 * PI * y / l).sin()
    });
    if let Some(v) = h.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!("non-positive depth {v}")));
    }
    let inv = h.iter().map(|v| 1.0 / v).collect();
    Ok((h, inv))
}
