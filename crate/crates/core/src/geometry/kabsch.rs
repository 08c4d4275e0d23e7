//! Least-squares rigid superposition.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Rigid transform taking the mobile set onto the target set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Weighted RMSD after superposition (Å).
    pub rmsd: f64,
}

impl Alignment {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            rmsd: 0.0,
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let v = self.rotation * Vector3::from(p) + self.translation;
        [v[0], v[1], v[2]]
    }

    pub fn apply_all(&self, ps: &[Point]) -> Vec<Point> {
        ps.iter().map(|&p| self.apply(p)).collect()
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
            rmsd: self.rmsd,
        }
    }
}

pub fn centroid(ps: &[Point], weights: Option<&[f64]>) -> Point {
    let mut c = Vector3::zeros();
    let mut total = 0.0;
    for (i, p) in ps.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        c += w * Vector3::from(*p);
        total += w;
    }
    c /= total;
    [c[0], c[1], c[2]]
}

pub fn distance(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

pub fn rmsd(p: &[Point], q: &[Point]) -> f64 {
    let ss: f64 = p.iter().zip(q).map(|(a, b)| distance(*a, *b).powi(2)).sum();
    (ss / p.len() as f64).sqrt()
}

fn check(mobile: &[Point], target: &[Point], weights: Option<&[f64]>) -> Result<()> {
    if mobile.len() != target.len() || mobile.is_empty() {
        return Err(Error::Shape(format!(
            "cannot superpose {} points onto {}",
            mobile.len(),
            target.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != mobile.len() || w.iter().any(|&x| !(x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Shape("alignment weights must be non-negative and match points".into()));
        }
    }
    Ok(())
}

fn solve(mobile: &[Point], target: &[Point], weights: Option<&[f64]>, strict: bool) -> Result<Alignment> {
    check(mobile, target, weights)?;
    if strict && mobile.len() < 3 {
        return Err(Error::Geometry("superposition needs at least 3 points".into()));
    }
    let cm = Vector3::from(centroid(mobile, weights));
    let ct = Vector3::from(centroid(target, weights));
    let mut h = Matrix3::zeros();
    for (i, (p, q)) in mobile.iter().zip(target).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        h += w * (Vector3::from(*p) - cm) * (Vector3::from(*q) - ct).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if strict && !(s[order[1]] > 1e-12 * s[order[0]].max(1e-300)) {
        return Err(Error::Geometry("degenerate point set (rank < 2 covariance)".into()));
    }
    let v = vt.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(order[2], order[2])] = -1.0;
        s[order[2]] = -s[order[2]];
    }
    let rotation = v * d * u.transpose();
    let translation = ct - rotation * cm;
    let mut align = Alignment {
        rotation,
        translation,
        rmsd: 0.0,
    };
    let mut ss = 0.0;
    let mut total = 0.0;
    for (i, (p, q)) in mobile.iter().zip(target).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        ss += w * distance(align.apply(*p), *q).powi(2);
        total += w;
    }
    align.rmsd = (ss / total).sqrt();
    Ok(align)
}

/// Optimal proper rotation and translation taking `mobile` onto `target`.
/// Rejects fewer than three points and rank-deficient covariances.
pub fn kabsch(mobile: &[Point], target: &[Point], weights: Option<&[f64]>) -> Result<Alignment> {
    solve(mobile, target, weights, true)
}

/// Like [`kabsch`] but accepts collinear or tiny sets, where the optimal
/// rotation is not unique and any optimum is returned.
pub fn superpose(mobile: &[Point], target: &[Point], weights: Option<&[f64]>) -> Result<Alignment> {
    solve(mobile, target, weights, false)
}
