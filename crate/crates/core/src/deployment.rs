//! Sensor deployments: positions, ranges and the region they live in.

use thiserror::Error;

use crate::geometry::{GeometryError, Point, Rectangle, Tolerance};
use crate::spatial::SpatialGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeploymentError {
    #[error("sensing range must be positive and finite (got {0})")]
    BadSensingRange(f64),
    #[error("communication range must be positive and finite (got {0})")]
    BadCommRange(f64),
    #[error("sensors[{index}] = ({x}, {y}) is not a finite point inside the region")]
    OutsideRegion { index: usize, x: f64, y: f64 },
    #[error("sensors[{first}] and sensors[{second}] coincide (distance {distance:e} below tolerance)")]
    DuplicateSensor {
        first: usize,
        second: usize,
        distance: f64,
    },
    #[error("sensor id {0} out of range")]
    NoSuchSensor(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Immutable snapshot of a sensor field. Sensor ids are list indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Deployment {
    sensors: Vec<Point>,
    r_s: f64,
    r_c: f64,
    region: Rectangle,
    tol: Tolerance,
}

impl Deployment {
    pub fn new(
        sensors: Vec<Point>,
        r_s: f64,
        r_c: f64,
        region: Rectangle,
        tol: Option<Tolerance>,
    ) -> Result<Self, DeploymentError> {
        if !(r_s > 0.0 && r_s.is_finite()) {
            return Err(DeploymentError::BadSensingRange(r_s));
        }
        if !(r_c > 0.0 && r_c.is_finite()) {
            return Err(DeploymentError::BadCommRange(r_c));
        }
        let tol = tol.unwrap_or_else(|| Tolerance::default_for(r_s));
        Tolerance::new(tol.tau(), r_s)?;
        for (index, p) in sensors.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && region.contains(*p)) {
                return Err(DeploymentError::OutsideRegion {
                    index,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        if let Some((first, second, distance)) = first_duplicate(&sensors, tol.tau()) {
            return Err(DeploymentError::DuplicateSensor {
                first,
                second,
                distance,
            });
        }
        Ok(Self {
            sensors,
            r_s,
            r_c,
            region,
            tol,
        })
    }

    pub fn sensors(&self) -> &[Point] {
        &self.sensors
    }

    pub fn sensor(&self, id: usize) -> Result<Point, DeploymentError> {
        self.sensors.get(id).copied().ok_or(DeploymentError::NoSuchSensor(id))
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn region(&self) -> Rectangle {
        self.region
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn tau(&self) -> f64 {
        self.tol.tau()
    }

    /// `r_s <= a` and `r_s <= b`.
    pub fn region_valid(&self) -> bool {
        self.region.is_valid_for(self.r_s)
    }

    pub fn with_r_c(&self, r_c: f64) -> Result<Self, DeploymentError> {
        Self::new(self.sensors.clone(), self.r_s, r_c, self.region, Some(self.tol))
    }

    pub fn with_tolerance(&self, tol: Tolerance) -> Result<Self, DeploymentError> {
        Self::new(self.sensors.clone(), self.r_s, self.r_c, self.region, Some(tol))
    }

    /// Removes sensor `id`; later ids shift down by one.
    pub fn without_sensor(&self, id: usize) -> Result<Self, DeploymentError> {
        if id >= self.sensors.len() {
            return Err(DeploymentError::NoSuchSensor(id));
        }
        let mut sensors = self.sensors.clone();
        sensors.remove(id);
        Ok(Self { sensors, ..self.clone() })
    }

    /// Appends a sensor, which receives id `len()`.
    pub fn with_sensor(&self, p: Point) -> Result<Self, DeploymentError> {
        let mut sensors = self.sensors.clone();
        sensors.push(p);
        Self::new(sensors, self.r_s, self.r_c, self.region, Some(self.tol))
    }

    pub(crate) fn grid(&self, cell: f64) -> SpatialGrid {
        SpatialGrid::new(&self.sensors, cell)
    }
}

fn first_duplicate(points: &[Point], tau: f64) -> Option<(usize, usize, f64)> {
    let grid = SpatialGrid::new(points, tau.max(1e-300) * 4.0);
    let mut found: Option<(usize, usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        for j in grid.candidates(*p, tau) {
            if j <= i {
                continue;
            }
            let d = p.dist(&points[j]);
            if d < tau && found.is_none_or(|(a, b, _)| (i, j) < (a, b)) {
                found = Some((i, j, d));
            }
        }
    }
    found
}
