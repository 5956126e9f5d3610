use std::sync::Arc;

use sha2::{Digest, Sha256};
use topomode::dynamics::{
    gridded_wind_curl, sinusoidal_topography, two_gyre_forcing, Forcing, LatLonMap, Model,
    ModelParams,
};
use topomode::fem::{assemble_core, FemCore};
use topomode::grid::load_grid;
use topomode::mesh::{
    generate_graded_square_mesh, load_mesh, reference_quadrature, write_mesh, DofMap,
    GradedSquare, Mesh,
};

use crate::config::{ForcingSpec, MeshSource, Resolved, TopographySpec};
use crate::error::{CliError, Result};

/// Quadrature degree used for every assembly.
pub const QUADRATURE_DEGREE: usize = 4;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn build_mesh(source: &MeshSource) -> Result<Mesh> {
    Ok(match source {
        MeshSource::Standard { side } => GradedSquare::standard(*side).build()?,
        MeshSource::Graded {
            side,
            n_coarse,
            ratio,
        } => generate_graded_square_mesh(*side, *n_coarse, *ratio)?,
        MeshSource::File { path, .. } => load_mesh(path)?,
    })
}

/// Mesh, dof map, assembled operators and forcing shared by every model of
/// one experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mesh: Mesh,
    pub dofmap: Arc<DofMap>,
    pub core: Arc<FemCore>,
    pub map: LatLonMap,
    pub forcing: Forcing,
    pub mesh_sha256: String,
}

impl Setup {
    pub fn new(r: &Resolved) -> Result<Self> {
        let mesh = build_mesh(&r.mesh)?;
        let mut text = Vec::new();
        write_mesh(&mesh, &mut text)?;
        let dofmap = Arc::new(DofMap::new(&mesh));
        let core = Arc::new(assemble_core(
            &dofmap,
            &reference_quadrature(QUADRATURE_DEGREE)?,
        )?);
        let (phi0_deg, lambda0_deg, span_deg) = r.map;
        let map = LatLonMap {
            phi0_deg,
            lambda0_deg,
            span_deg,
            l: r.params.l,
        };
        let forcing = match &r.forcing {
            ForcingSpec::TwoGyre { tau0 } => two_gyre_forcing(&r.params, *tau0, &dofmap)?,
            ForcingSpec::Gridded { tau_x, tau_y } => gridded_wind_curl(
                &load_grid(tau_x)?,
                &load_grid(tau_y)?,
                &map,
                &r.params,
                &dofmap,
            )?,
        };
        Ok(Self {
            mesh,
            dofmap,
            core,
            map,
            forcing,
            mesh_sha256: sha256_hex(&text),
        })
    }

    pub fn n(&self) -> usize {
        self.dofmap.n()
    }

    /// Nodal depth for `spec`.
    pub fn depth(&self, spec: &TopographySpec, l: f64) -> Result<Vec<f64>> {
        match spec {
            TopographySpec::Flat { depth } => {
                if !(*depth > 0.0) {
                    return Err(CliError::Config(format!("depth {depth} must be positive")));
                }
                Ok(vec![*depth; self.n()])
            }
            TopographySpec::Sinusoidal {
                base,
                alpha,
                kx,
                ky,
            } => Ok(sinusoidal_topography(*alpha, *kx, *ky, *base, l, &self.dofmap)?.0),
            TopographySpec::Grid { path, min_depth } => {
                let grid = load_grid(path)?;
                let depth = self
                    .dofmap
                    .dof_coords()
                    .iter()
                    .map(|p| {
                        let (lon, lat) = self.map.to_lon_lat(p[0], p[1]);
                        grid.interpolate(lon, lat)
                            .map_err(|_| topomode::Error::OutsideGrid { x: p[0], y: p[1] })
                    })
                    .collect::<std::result::Result<Vec<f64>, _>>()?;
                if let Some((k, h)) = depth
                    .iter()
                    .enumerate()
                    .find(|(_, h)| !(**h >= *min_depth))
                {
                    return Err(CliError::Config(format!(
                        "interpolated depth {h} m at dof {k} is below the {min_depth} m minimum"
                    )));
                }
                Ok(depth)
            }
        }
    }

    pub fn model(&self, params: ModelParams, depth: Vec<f64>) -> Result<Model> {
        Ok(Model::new(
            self.dofmap.clone(),
            self.core.clone(),
            params,
            depth,
            self.forcing.clone(),
        )?)
    }
}
