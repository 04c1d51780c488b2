use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::electrostatics::Aabb;
use crate::quadrature::gauss_legendre;

/// ln(w + R) evaluated without cancellation when w < 0.
fn log_w_plus_r(w: f64, r: f64, perp_sq: f64) -> f64 {
    if w >= 0.0 {
        (w + r).ln()
    } else {
        perp_sq.ln() - (r - w).ln()
    }
}

/// Antiderivative of 1/√(u² + v² + w²) in v and w.
fn face_primitive(u: f64, v: f64, w: f64) -> f64 {
    let r = (u * u + v * v + w * w).sqrt();
    let lw = if v == 0.0 { 0.0 } else { log_w_plus_r(w, r, u * u + v * v) };
    let lv = if w == 0.0 { 0.0 } else { log_w_plus_r(v, r, u * u + w * w) };
    let at = if u == 0.0 || r == 0.0 { 0.0 } else { u * (v * w / (u * r)).atan() };
    v * lw + w * lv - at
}

/// ∫∫ dv dw / √(u² + v² + w²) over the rectangle [v0, v1] × [w0, w1].
fn face_integral(u: f64, v: [f64; 2], w: [f64; 2]) -> f64 {
    face_primitive(u, v[1], w[1]) - face_primitive(u, v[0], w[1]) - face_primitive(u, v[1], w[0])
        + face_primitive(u, v[0], w[0])
}

/// ∫_box (r − r′)/|r − r′|³ dV′, so that a uniform density ρ gives E = ρ/(4πε)·box_field.
pub fn box_field(bounds: &Aabb, r: &Vector3<f64>) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let v = [r[a] - bounds.max[a], r[a] - bounds.min[a]];
        let w = [r[b] - bounds.max[b], r[b] - bounds.min[b]];
        out[axis] = face_integral(r[axis] - bounds.max[axis], v, w) - face_integral(r[axis] - bounds.min[axis], v, w);
    }
    out
}

/// Field of a uniformly charged box, tabulated on a regular lattice covering
/// the box and interpolated trilinearly.
#[derive(Clone, Debug)]
pub struct BackgroundField {
    bounds: Aabb,
    /// ρ/(4πε), V·m per m³ of geometric factor.
    prefactor: f64,
    shape: [usize; 3],
    spacing: Vector3<f64>,
    values: Vec<Vector3<f64>>,
}

impl BackgroundField {
    /// `density` in C/m³; `resolution` is the target lattice spacing.
    pub fn new(bounds: Aabb, density: f64, permittivity: f64, resolution: f64) -> Self {
        let size = bounds.size();
        let shape = [0, 1, 2].map(|k| ((size[k] / resolution).ceil() as usize).max(1) + 1);
        let spacing = Vector3::from_fn(|k, _| size[k] / (shape[k] - 1) as f64);
        let mut values = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let r = bounds.min + Vector3::new(i as f64 * spacing.x, j as f64 * spacing.y, k as f64 * spacing.z);
                    values.push(box_field(&bounds, &r));
                }
            }
        }
        Self { bounds, prefactor: density / (4.0 * PI * permittivity), shape, spacing, values }
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// Field (V/m) at `r`, clamped to the box.
    pub fn field(&self, r: &Vector3<f64>) -> Vector3<f64> {
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for k in 0..3 {
            let s = ((r[k] - self.bounds.min[k]) / self.spacing[k]).clamp(0.0, (self.shape[k] - 1) as f64);
            let i = (s.floor() as usize).min(self.shape[k] - 2);
            idx[k] = i;
            frac[k] = s - i as f64;
        }
        let at = |i: usize, j: usize, k: usize| self.values[(i * self.shape[1] + j) * self.shape[2] + k];
        let mut acc = Vector3::zeros();
        for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                    acc += at(idx[0] + di, idx[1] + dj, idx[2] + dk) * (wi * wj * wk);
                }
            }
        }
        acc * self.prefactor
    }
}

/// Softened Coulomb energy of a point charge `charge` on the line y = z = 0 at
/// each of `xs`, due to a uniform charge `density` filling `bounds`.
///
/// The integral along the box length is done in closed form, the cross-section
/// with a Gauss–Legendre product rule.
pub fn background_line_potential(
    bounds: &Aabb,
    density: f64,
    charge: f64,
    xs: &[f64],
    softening: f64,
    permittivity: f64,
) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(24);
    let (y0, y1, z0, z1) = (bounds.min.y, bounds.max.y, bounds.min.z, bounds.max.z);
    let jac = 0.25 * (y1 - y0) * (z1 - z0);
    let mut cross = Vec::with_capacity(nodes.len() * nodes.len());
    for (a, wa) in nodes.iter().zip(&weights) {
        for (b, wb) in nodes.iter().zip(&weights) {
            let y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * a;
            let z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * b;
            cross.push(((y * y + z * z + softening * softening).sqrt(), wa * wb * jac));
        }
    }
    let k = charge * density / (4.0 * PI * permittivity);
    xs.iter()
        .map(|&x| {
            let sum: f64 = cross
                .iter()
                .map(|&(s, w)| w * (((x - bounds.min.x) / s).asinh() - ((x - bounds.max.x) / s).asinh()))
                .sum();
            k * sum
        })
        .collect()
}
