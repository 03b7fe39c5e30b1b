//! Fluid/solid domains on a Cartesian box.
//!
//! A [`GridGeometry`] is the dense mask used by direct addressing. Domain
//! faces are never materialized as solid cells: each axis is either periodic
//! or bounded by a bounce-back wall that sits half a link outside the
//! outermost cell layer. [`build_sparse`] turns a geometry into the
//! fluid-node list and adjacency table used by indirect addressing.

mod io;
mod sparse;

pub use io::{load_geo, load_geo_file, save_geo, save_geo_file};
pub(crate) use sparse::check_compatible;
pub use sparse::{build_sparse, SparseRepresentation};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("grid dimensions must be at least 1 in every axis, got {0:?}")]
    ZeroDimension([usize; 3]),
    #[error("mask has {got} cells, expected {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("overlapping spheres: radius {radius} exceeds pitch {pitch}")]
    OverlappingSpheres { radius: f64, pitch: f64 },
    #[error("invalid packing parameters: radius {radius}, pitch {pitch}")]
    InvalidPacking { radius: f64, pitch: f64 },
    #[error("fluid count {0} exceeds the 32-bit index range")]
    TooManyNodes(usize),
    #[error("{stencil} needs a grid with nz = 1, got {dims:?}")]
    DimensionMismatch {
        stencil: &'static str,
        dims: [usize; 3],
    },
    #[error("periodic axis {axis} has extent 1; a self-neighbor cannot be told apart from a bounce-back link")]
    DegeneratePeriodicAxis { axis: usize },
    #[error("not a geometry file")]
    BadMagic,
    #[error("short read")]
    ShortRead,
    #[error("dimension overflow: {0:?}")]
    DimensionOverflow([u32; 3]),
    #[error("invalid {what} byte {value} in geometry file")]
    BadByte { what: &'static str, value: u8 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary treatment of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisPolicy {
    Periodic,
    Wall,
}

/// Channel boundary treatment: periodic along x, walls in y and z.
pub const CHANNEL_POLICY: [AxisPolicy; 3] =
    [AxisPolicy::Periodic, AxisPolicy::Wall, AxisPolicy::Wall];

/// Sphere radius of the reference packed bed on a 500x100x100 grid, in cells.
///
/// Chosen by sweeping `(radius, pitch)` pairs and keeping the one whose fluid
/// count comes closest to 2.1 million cells.
pub const PACKED_BED_RADIUS: f64 = 10.3;
/// Sphere pitch of the reference packed bed, in cells.
pub const PACKED_BED_PITCH: f64 = 20.0;

/// Dense fluid/solid mask over an `nx * ny * nz` box, x-fastest order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridGeometry {
    dims: [usize; 3],
    mask: Vec<bool>,
    policy: [AxisPolicy; 3],
}

fn check_dims(dims: [usize; 3]) -> Result<usize, GeometryError> {
    if dims.contains(&0) {
        return Err(GeometryError::ZeroDimension(dims));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or(GeometryError::ZeroDimension(dims))
}

impl GridGeometry {
    pub fn new(
        dims: [usize; 3],
        mask: Vec<bool>,
        policy: [AxisPolicy; 3],
    ) -> Result<Self, GeometryError> {
        let cells = check_dims(dims)?;
        if mask.len() != cells {
            return Err(GeometryError::MaskLength {
                got: mask.len(),
                expected: cells,
            });
        }
        Ok(GridGeometry { dims, mask, policy })
    }

    /// A box where every cell is fluid.
    pub fn all_fluid(dims: [usize; 3], policy: [AxisPolicy; 3]) -> Result<Self, GeometryError> {
        let cells = check_dims(dims)?;
        Self::new(dims, vec![true; cells], policy)
    }

    /// Seeded random mask with approximately `solid_fraction` solid cells.
    pub fn random(
        dims: [usize; 3],
        solid_fraction: f64,
        seed: u64,
        policy: [AxisPolicy; 3],
    ) -> Result<Self, GeometryError> {
        let cells = check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = (0..cells)
            .map(|_| rng.gen::<f64>() >= solid_fraction)
            .collect();
        Self::new(dims, mask, policy)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn policy(&self) -> [AxisPolicy; 3] {
        self.policy
    }

    pub fn with_policy(mut self, policy: [AxisPolicy; 3]) -> Self {
        self.policy = policy;
        self
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn cell_count(&self) -> usize {
        self.mask.len()
    }

    pub fn fluid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    #[inline]
    pub fn cell_index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [cell % nx, (cell / nx) % ny, cell / (nx * ny)]
    }

    #[inline]
    pub fn is_fluid(&self, x: usize, y: usize, z: usize) -> bool {
        self.mask[self.cell_index(x, y, z)]
    }

    pub fn set_fluid(&mut self, x: usize, y: usize, z: usize, fluid: bool) {
        let i = self.cell_index(x, y, z);
        self.mask[i] = fluid;
    }

    /// Neighbor cell of `coords` displaced by `c`, honoring the axis policy.
    /// `None` means the link leaves the domain through a wall.
    pub fn displaced(&self, coords: [usize; 3], c: [i32; 3]) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let n = self.dims[a] as i64;
            let mut v = coords[a] as i64 + c[a] as i64;
            if v < 0 || v >= n {
                match self.policy[a] {
                    AxisPolicy::Wall => return None,
                    AxisPolicy::Periodic => v = v.rem_euclid(n),
                }
            }
            out[a] = v as usize;
        }
        Some(out)
    }

    /// Whether displacing `coords` by `c` crosses a periodic face.
    pub fn wraps(&self, coords: [usize; 3], c: [i32; 3]) -> bool {
        (0..3).any(|a| {
            let v = coords[a] as i64 + c[a] as i64;
            (v < 0 || v >= self.dims[a] as i64) && self.policy[a] == AxisPolicy::Periodic
        })
    }

    /// Fluid-node link target: the neighbor cell index if it exists and is
    /// fluid, `None` for a bounce-back link.
    pub fn fluid_neighbor(&self, coords: [usize; 3], c: [i32; 3]) -> Option<usize> {
        let n = self.displaced(coords, c)?;
        let idx = self.cell_index(n[0], n[1], n[2]);
        self.mask[idx].then_some(idx)
    }
}

/// Empty channel: all cells fluid, periodic in x, walls in y and z.
pub fn gen_channel(dims: [usize; 3]) -> Result<GridGeometry, GeometryError> {
    GridGeometry::all_fluid(dims, CHANNEL_POLICY)
}

/// Deterministic staggered packing of spheres.
///
/// Sphere layers are stacked along x with spacing `pitch`; within a layer the
/// centers form a square lattice in (y, z), and every odd layer is offset by
/// `pitch / 2` in both y and z. A cell is solid iff its center lies strictly
/// inside a sphere. Axis policy is the channel policy.
pub fn gen_packed_bed(
    dims: [usize; 3],
    radius: f64,
    pitch: f64,
) -> Result<GridGeometry, GeometryError> {
    if !(radius >= 0.0) || !(pitch > 0.0) || !radius.is_finite() || !pitch.is_finite() {
        return Err(GeometryError::InvalidPacking { radius, pitch });
    }
    if radius > pitch {
        return Err(GeometryError::OverlappingSpheres { radius, pitch });
    }
    let cells = check_dims(dims)?;
    let r2 = radius * radius;
    let half = 0.5 * pitch;
    // Candidate lattice coordinates whose centers can be within `radius`.
    let candidates = |p: f64, offset: f64| {
        let k = ((p - half - offset) / pitch).floor();
        [k, k + 1.0]
    };
    let mut mask = vec![true; cells];
    if radius == 0.0 {
        return GridGeometry::new(dims, mask, CHANNEL_POLICY);
    }
    for z in 0..dims[2] {
        let pz = z as f64 + 0.5;
        for y in 0..dims[1] {
            let py = y as f64 + 0.5;
            for x in 0..dims[0] {
                let px = x as f64 + 0.5;
                let mut solid = false;
                'layers: for k in candidates(px, 0.0) {
                    let cx = half + k * pitch;
                    let dx = px - cx;
                    let offset = if (k as i64).rem_euclid(2) == 1 {
                        half
                    } else {
                        0.0
                    };
                    for a in candidates(py, offset) {
                        let dy = py - (half + offset + a * pitch);
                        for b in candidates(pz, offset) {
                            let dz = pz - (half + offset + b * pitch);
                            if dx * dx + dy * dy + dz * dz < r2 {
                                solid = true;
                                break 'layers;
                            }
                        }
                    }
                }
                if solid {
                    mask[x + dims[0] * (y + dims[1] * z)] = false;
                }
            }
        }
    }
    GridGeometry::new(dims, mask, CHANNEL_POLICY)
}
