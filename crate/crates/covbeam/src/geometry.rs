//! Array geometry, direction conventions, and coverage grids.
//!
//! Both base stations carry uniform planar arrays in the x-z plane.
//! Directions are spherical: `theta` is the polar angle measured from the
//! +z axis, `phi` the azimuth measured from the +x axis counterclockwise
//! in the x-y plane. Along the array boresight degeneracy (`theta` of 0 or
//! pi) the azimuth is fixed to 0 so every direction has one representation.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use thiserror::Error;

/// A point in 3D space, meters.
pub type Position = Vector3<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("source and target positions coincide; direction is undefined")]
    CoincidentPoints,
    #[error("array must have at least one element per axis, got {mx}x{mz}")]
    EmptyArray { mx: usize, mz: usize },
    #[error("element spacing must be positive, got {0} wavelengths")]
    NonPositiveSpacing(f64),
    #[error("region extent must be positive when its point count exceeds 1")]
    DegenerateRegion,
    #[error("grid needs at least one point per axis")]
    EmptyGrid,
}

/// Propagation direction in spherical coordinates, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionAngles {
    /// Polar angle from the +z axis, in `[0, pi]`.
    pub theta: f64,
    /// Azimuth from the +x axis, counterclockwise, in `[0, 2*pi)`.
    pub phi: f64,
}

impl DirectionAngles {
    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self {
            theta: theta_deg.to_radians(),
            phi: phi_deg.to_radians(),
        }
    }

    /// Unit vector pointing along this direction.
    pub fn unit_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        )
    }
}

/// Uniform planar array in the x-z plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Elements along the x axis.
    pub m_x: usize,
    /// Elements along the z axis.
    pub m_z: usize,
    /// Element spacing in wavelengths (the same along both axes).
    pub spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(m_x: usize, m_z: usize, spacing_wavelengths: f64) -> Result<Self, GeometryError> {
        if m_x == 0 || m_z == 0 {
            return Err(GeometryError::EmptyArray { mx: m_x, mz: m_z });
        }
        if !(spacing_wavelengths > 0.0) {
            return Err(GeometryError::NonPositiveSpacing(spacing_wavelengths));
        }
        Ok(Self {
            m_x,
            m_z,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spaced array, the common deployment.
    pub fn half_wavelength(m_x: usize, m_z: usize) -> Result<Self, GeometryError> {
        Self::new(m_x, m_z, 0.5)
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.m_x * self.m_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Steering vector of a uniform planar array toward `angles`.
///
/// Entry `(m, n)` (x index `m`, z index `n`) sits at linear index
/// `m * m_z + n` and has phase
/// `2*pi*spacing*(m*sin(theta)*cos(phi) + n*cos(theta))`, i.e. the x-axis
/// ramp Kronecker the z-axis ramp. All entries are unit modulus, so the
/// squared norm equals the element count.
pub fn upa_steering(angles: DirectionAngles, array: &ArrayGeometry) -> DVector<Complex64> {
    let psi_x = angles.theta.sin() * angles.phi.cos();
    let psi_z = angles.theta.cos();
    let step = 2.0 * std::f64::consts::PI * array.spacing_wavelengths;
    let mut v = DVector::zeros(array.len());
    for m in 0..array.m_x {
        for n in 0..array.m_z {
            let phase = step * (m as f64 * psi_x + n as f64 * psi_z);
            v[m * array.m_z + n] = Complex64::from_polar(1.0, phase);
        }
    }
    v
}

/// Direction of `target` as seen from `source`.
pub fn angles_from_positions(
    source: &Position,
    target: &Position,
) -> Result<DirectionAngles, GeometryError> {
    let d = target - source;
    let r = d.norm();
    if r == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    let theta = (d.z / r).clamp(-1.0, 1.0).acos();
    let mut phi = if d.x == 0.0 && d.y == 0.0 {
        0.0
    } else {
        d.y.atan2(d.x)
    };
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    Ok(DirectionAngles { theta, phi })
}

/// Point at distance `range` from `source` along `angles`.
pub fn position_from_spherical(source: &Position, angles: DirectionAngles, range: f64) -> Position {
    source + range * angles.unit_vector()
}

/// Axis-aligned rectangular surveillance region at a fixed height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub height: f64,
    pub extent_x: f64,
    pub extent_y: f64,
}

/// Evaluation lattice over a [`RegionSpec`] with per-point steering vectors
/// toward the transmit and receive arrays.
///
/// Points are stored row-major: the x index varies fastest, the y index
/// slowest. `eta` holds the per-point coverage weights once
/// [`crate::metrics::eta_weights`] has filled them; it is empty before that.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    pub points: Vec<Position>,
    /// Steering vectors of the transmit array toward each point.
    pub tx_steering: Vec<DVector<Complex64>>,
    /// Steering vectors of the receive array toward each point.
    pub rx_steering: Vec<DVector<Complex64>>,
    /// Coverage weights, one per point; empty until computed.
    pub eta: Vec<f64>,
    pub counts: (usize, usize),
    /// Lattice step along x and y, meters. Zero along an axis of count 1.
    pub spacing: (f64, f64),
}

impl CoverageGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest lattice step, used for resolution-limited comparisons.
    pub fn max_spacing(&self) -> f64 {
        self.spacing.0.max(self.spacing.1)
    }
}

fn lattice(center: f64, extent: f64, count: usize) -> Result<(Vec<f64>, f64), GeometryError> {
    if count == 0 {
        return Err(GeometryError::EmptyGrid);
    }
    if count == 1 {
        return Ok((vec![center], 0.0));
    }
    if !(extent > 0.0) {
        return Err(GeometryError::DegenerateRegion);
    }
    let step = extent / (count - 1) as f64;
    let start = center - extent / 2.0;
    Ok(((0..count).map(|i| start + step * i as f64).collect(), step))
}

/// Build the evaluation grid over `region` with `counts = (nx, ny)` points,
/// including steering vectors toward the transmit and receive arrays.
///
/// Endpoints are included, so the step along an axis with `n > 1` points and
/// extent `e` is `e / (n - 1)`. Every grid point must be distinct from both
/// array positions.
pub fn build_coverage_grid(
    region: &RegionSpec,
    counts: (usize, usize),
    tx: (&Position, &ArrayGeometry),
    rx: (&Position, &ArrayGeometry),
) -> Result<CoverageGrid, GeometryError> {
    let (xs, step_x) = lattice(region.center_x, region.extent_x, counts.0)?;
    let (ys, step_y) = lattice(region.center_y, region.extent_y, counts.1)?;
    let mut points = Vec::with_capacity(xs.len() * ys.len());
    let mut tx_steering = Vec::with_capacity(points.capacity());
    let mut rx_steering = Vec::with_capacity(points.capacity());
    for &y in &ys {
        for &x in &xs {
            let q = Position::new(x, y, region.height);
            tx_steering.push(upa_steering(angles_from_positions(tx.0, &q)?, tx.1));
            rx_steering.push(upa_steering(angles_from_positions(rx.0, &q)?, rx.1));
            points.push(q);
        }
    }
    Ok(CoverageGrid {
        points,
        tx_steering,
        rx_steering,
        eta: Vec::new(),
        counts,
        spacing: (step_x, step_y),
    })
}
