//! Virtual C-beta from backbone N, CA, C.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Ideal-geometry coefficients on `a = b x c`, `b = CA - N`, `c = C - CA`.
pub const CB_A: f64 = -0.582_734_31;
pub const CB_B: f64 = 0.568_028_27;
pub const CB_C: f64 = -0.540_674_66;

pub(crate) fn sub(p: Vec3, q: Vec3) -> Vec3 {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

pub(crate) fn cross(p: Vec3, q: Vec3) -> Vec3 {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

pub(crate) fn norm(p: Vec3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub fn reconstruct_cbeta(n: Vec3, ca: Vec3, c: Vec3) -> Result<Vec3> {
    let b = sub(ca, n);
    let cc = sub(c, ca);
    let a = cross(b, cc);
    if !(norm(a) > 1e-8 * norm(b) * norm(cc)) {
        return Err(Error::Geometry("collinear or coincident backbone atoms".into()));
    }
    Ok(std::array::from_fn(|k| CB_A * a[k] + CB_B * b[k] + CB_C * cc[k] + ca[k]))
}

/// Pull a gradient on C-beta back to (N, CA, C).
pub fn cbeta_backprop(n: Vec3, ca: Vec3, c: Vec3, g: Vec3) -> [Vec3; 3] {
    let b = sub(ca, n);
    let cc = sub(c, ca);
    let c_x_g = cross(cc, g);
    let g_x_b = cross(g, b);
    let gb: Vec3 = std::array::from_fn(|k| CB_A * c_x_g[k] + CB_B * g[k]);
    let gc: Vec3 = std::array::from_fn(|k| CB_A * g_x_b[k] + CB_C * g[k]);
    let gn = gb.map(|v| -v);
    let gca: Vec3 = std::array::from_fn(|k| g[k] + gb[k] - gc[k]);
    [gn, gca, gc]
}
