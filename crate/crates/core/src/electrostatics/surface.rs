use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two in-plane axes (first extent, second extent).
    pub fn transverse(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceRole {
    WeakLarge,
    StrongSmall,
    CableCrossSection,
}

/// Axis-aligned rectangle with outward normal along +`normal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectSurface {
    pub center: Vector3<f64>,
    pub normal: Axis,
    /// Extent along the first transverse axis.
    pub extent_a: f64,
    /// Extent along the second transverse axis.
    pub extent_b: f64,
    pub role: SurfaceRole,
}

impl RectSurface {
    pub fn square(center: Vector3<f64>, normal: Axis, side: f64, role: SurfaceRole) -> Self {
        Self { center, normal, extent_a: side, extent_b: side, role }
    }

    pub fn area(&self) -> f64 {
        self.extent_a * self.extent_b
    }

    pub fn is_square(&self) -> bool {
        (self.extent_a - self.extent_b).abs() <= 1e-12 * self.extent_a.max(self.extent_b)
    }

    /// Coordinate of the surface plane along its normal.
    pub fn plane(&self) -> f64 {
        self.center[self.normal.index()]
    }

    /// Signed distance χ = plane − p·n; positive on the side the normal points away from.
    pub fn chi(&self, p: &Vector3<f64>) -> f64 {
        self.plane() - p[self.normal.index()]
    }

    /// Rectangle bounds relative to `p` along the two transverse axes.
    pub(crate) fn relative_bounds(&self, p: &Vector3<f64>) -> ([f64; 2], [f64; 2]) {
        let (a, b) = self.normal.transverse();
        let ca = self.center[a.index()] - p[a.index()];
        let cb = self.center[b.index()] - p[b.index()];
        ([ca - 0.5 * self.extent_a, ca + 0.5 * self.extent_a], [cb - 0.5 * self.extent_b, cb + 0.5 * self.extent_b])
    }
}
