use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Axis, ElectrostaticsError, RectSurface, SurfaceRole, WeightingField};
use crate::constants::VACUUM_PERMITTIVITY;

const WEAK_MIN_RATIO: f64 = 100.0;
const STRONG_MAX_RATIO: f64 = 0.01;

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn size(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Vector3<f64> {
        0.5 * (self.min + self.max)
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s.x.max(0.0) * s.y.max(0.0) * s.z.max(0.0)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Geometry inputs in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub device_length: f64,
    pub relative_permittivity: f64,
    pub weak_area: f64,
    pub tile_count: usize,
    pub tile_width: f64,
    /// Side of the square cable cross-section.
    pub cable_width: f64,
    pub cable_length: f64,
    /// Gap between each device end and its cable.
    pub cable_distance: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            device_length: 280e-9,
            relative_permittivity: 1.0,
            weak_area: 1e-11,
            tile_count: 56,
            tile_width: 5e-9,
            cable_width: 10e-9,
            cable_length: 40e-9,
            cable_distance: 13e-9,
        }
    }
}

/// A violated rule found by [`DeviceGeometry::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryViolation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for GeometryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Device of length L_x along x with the weak electrode at x = L_x, a row of
/// detection tiles in the plane y = 0 and one cable beyond each end.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviceGeometry {
    pub device_length: f64,
    pub permittivity: f64,
    pub weak: RectSurface,
    pub tiles: Vec<RectSurface>,
    /// Left cable, right cable.
    pub cables: [Aabb; 2],
    /// Ammeter cross-sections at the cable mouths (x = 0 and x = L_x).
    pub cable_sections: [RectSurface; 2],
    pub cable_distance: f64,
    pub volume: Aabb,
}

impl DeviceGeometry {
    pub fn build(p: &GeometryParams) -> Result<Self, ElectrostaticsError> {
        let positive = [
            ("device_length", p.device_length),
            ("relative_permittivity", p.relative_permittivity),
            ("weak_area", p.weak_area),
            ("tile_width", p.tile_width),
            ("cable_width", p.cable_width),
            ("cable_length", p.cable_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ElectrostaticsError::InvalidGeometry(format!("{name} must be positive, got {v:e}")));
            }
        }
        if !(p.cable_distance >= 0.0) || !p.cable_distance.is_finite() {
            return Err(ElectrostaticsError::InvalidGeometry(format!(
                "cable_distance must be non-negative, got {:e}",
                p.cable_distance
            )));
        }
        if p.tile_count == 0 {
            return Err(ElectrostaticsError::InvalidGeometry("tile_count must be at least 1".into()));
        }
        let lx = p.device_length;
        let side = p.weak_area.sqrt();
        let weak = RectSurface::square(Vector3::new(lx, 0.0, 0.0), Axis::X, side, SurfaceRole::WeakLarge);
        let tiles = (0..p.tile_count)
            .map(|i| {
                let x = (i as f64 + 0.5) * p.tile_width;
                RectSurface::square(Vector3::new(x, 0.0, 0.0), Axis::Y, p.tile_width, SurfaceRole::StrongSmall)
            })
            .collect();
        let hw = 0.5 * p.cable_width;
        let (d, l) = (p.cable_distance, p.cable_length);
        let cables = [
            Aabb::new(Vector3::new(-d - l, -hw, -hw), Vector3::new(-d, hw, hw)),
            Aabb::new(Vector3::new(lx + d, -hw, -hw), Vector3::new(lx + d + l, hw, hw)),
        ];
        let section = |x: f64| {
            RectSurface::square(Vector3::new(x, 0.0, 0.0), Axis::X, p.cable_width, SurfaceRole::CableCrossSection)
        };
        Ok(Self {
            device_length: lx,
            permittivity: p.relative_permittivity * VACUUM_PERMITTIVITY,
            weak,
            tiles,
            cables,
            cable_sections: [section(0.0), section(lx)],
            cable_distance: d,
            volume: Aabb::new(Vector3::new(0.0, -0.5 * side, -0.5 * side), Vector3::new(lx, 0.5 * side, 0.5 * side)),
        })
    }

    /// Every violated surface-role and tiling rule.
    pub fn validate(&self) -> Vec<GeometryViolation> {
        let mut out = Vec::new();
        let l2 = self.device_length * self.device_length;
        let check = |s: &RectSurface, out: &mut Vec<GeometryViolation>| {
            let ratio = s.area() / l2;
            match s.role {
                SurfaceRole::WeakLarge if ratio < WEAK_MIN_RATIO => out.push(GeometryViolation {
                    rule: "weak-large surface ratio",
                    detail: format!("S/L_x² = {ratio:.4} < {WEAK_MIN_RATIO}"),
                }),
                SurfaceRole::StrongSmall if ratio > STRONG_MAX_RATIO => out.push(GeometryViolation {
                    rule: "strong-small surface ratio",
                    detail: format!("S/L_x² = {ratio:.4e} > {STRONG_MAX_RATIO} at x = {:e} m", s.center.x),
                }),
                _ => {}
            }
        };
        check(&self.weak, &mut out);
        for t in &self.tiles {
            check(t, &mut out);
        }
        for pair in self.tiles.windows(2) {
            let gap = (pair[1].center.x - 0.5 * pair[1].extent_a) - (pair[0].center.x + 0.5 * pair[0].extent_a);
            if gap < -1e-9 * self.device_length {
                out.push(GeometryViolation {
                    rule: "tiles overlap",
                    detail: format!("overlap of {:e} m near x = {:e} m", -gap, pair[1].center.x),
                });
            }
        }
        let span: f64 = self.tiles.iter().map(|t| t.extent_a).sum();
        if (span - self.device_length).abs() > 1e-9 * self.device_length {
            out.push(GeometryViolation {
                rule: "tiles do not cover the detection plane",
                detail: format!("tiles span {span:e} m, device length {:e} m", self.device_length),
            });
        }
        out
    }

    pub fn parallel_plate(&self) -> WeightingField {
        WeightingField::ParallelPlate { length: self.device_length }
    }

    pub fn tile_weighting(&self, index: usize) -> WeightingField {
        let t = &self.tiles[index];
        WeightingField::exponential_for_area(t.area(), t.center)
    }

    /// Tile whose x-extent contains `x`.
    pub fn tile_index(&self, x: f64) -> Option<usize> {
        self.tiles.iter().position(|t| (x - t.center.x).abs() <= 0.5 * t.extent_a)
    }

    pub fn tile_centers(&self) -> Vec<f64> {
        self.tiles.iter().map(|t| t.center.x).collect()
    }
}
