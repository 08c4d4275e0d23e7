//! Solvent accessibility, ray-cast enclosure and exposure cones.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{centroid, distance, Point};

pub const PROBE_RADIUS: f64 = 1.4;

/// Bondi van der Waals radius (Å) by element symbol; 1.7 when unknown.
pub fn vdw_radius(element: &str) -> f64 {
    match element.trim().to_ascii_uppercase().as_str() {
        "H" | "D" => 1.20,
        "C" => 1.70,
        "N" => 1.55,
        "O" => 1.52,
        "F" => 1.47,
        "P" => 1.80,
        "S" => 1.80,
        "CL" => 1.75,
        "BR" => 1.85,
        "I" => 1.98,
        "SE" => 1.90,
        "FE" => 1.94,
        "ZN" => 1.39,
        "CU" => 1.40,
        "MG" => 1.73,
        "NI" => 1.63,
        "MN" => 1.97,
        "CO" => 1.92,
        "CA" => 2.31,
        "NA" => 2.27,
        "K" => 2.75,
        _ => 1.70,
    }
}

/// `n` near-uniform unit vectors on the sphere from the golden-angle spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// A sphere set: centres with radii.
#[derive(Debug, Clone, Default)]
pub struct Spheres {
    pub centres: Vec<Point>,
    pub radii: Vec<f64>,
}

impl Spheres {
    pub fn push(&mut self, centre: Point, radius: f64) {
        self.centres.push(centre);
        self.radii.push(radius);
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn extend(&mut self, other: &Spheres) {
        self.centres.extend_from_slice(&other.centres);
        self.radii.extend_from_slice(&other.radii);
    }
}

/// Shrake-Rupley accessible area of each of the first `n_scored` spheres,
/// occluded by every sphere in the set.
pub fn shrake_rupley(spheres: &Spheres, n_scored: usize, probe: f64, n_points: usize, exec: Execution) -> Vec<f64> {
    let unit = fibonacci_sphere(n_points);
    let centres: Vec<Vector3<f64>> = spheres.centres.iter().map(|p| Vector3::from(*p)).collect();
    let expanded: Vec<f64> = spheres.radii.iter().map(|r| r + probe).collect();
    exec.map(n_scored.min(spheres.len()), |i| {
        let ri = expanded[i];
        let near: Vec<usize> = (0..centres.len())
            .filter(|&j| j != i && (centres[j] - centres[i]).norm() < ri + expanded[j])
            .collect();
        let mut open = 0usize;
        let mut last = 0usize;
        for u in &unit {
            let p = centres[i] + u * ri;
            // Start with the sphere that buried the previous point.
            let buried = |j: usize| (p - centres[j]).norm_squared() < expanded[j] * expanded[j];
            if !near.is_empty() && buried(near[last]) {
                continue;
            }
            match near.iter().position(|&j| buried(j)) {
                Some(k) => last = k,
                None => open += 1,
            }
        }
        4.0 * std::f64::consts::PI * ri * ri * open as f64 / n_points as f64
    })
}

/// `1 - A_complex / A_free` for the ligand's accessible area.
pub fn sasa_burial(ligand: &Spheres, protein: &Spheres, probe: f64, n_points: usize, exec: Execution) -> Result<f64> {
    let free: f64 = shrake_rupley(ligand, ligand.len(), probe, n_points, exec).iter().sum();
    if free <= 0.0 {
        return Err(Error::Domain("ligand has no accessible surface when free".into()));
    }
    let mut complex = ligand.clone();
    complex.extend(protein);
    let bound: f64 = shrake_rupley(&complex, ligand.len(), probe, n_points, exec).iter().sum();
    Ok((1.0 - bound / free).clamp(0.0, 1.0))
}

/// Up to `k` points picked by farthest-point sampling, starting from the
/// point nearest the centroid. Returns indices.
pub fn farthest_point_sampling(points: &[Point], k: usize) -> Vec<usize> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    let c = centroid(points, None);
    let first = (0..points.len())
        .min_by(|&a, &b| distance(points[a], c).total_cmp(&distance(points[b], c)))
        .unwrap();
    let mut chosen = vec![first];
    let mut gap: Vec<f64> = points.iter().map(|p| distance(*p, points[first])).collect();
    while chosen.len() < k.min(points.len()) {
        let next = (0..points.len()).max_by(|&a, &b| gap[a].total_cmp(&gap[b]).then(b.cmp(&a))).unwrap();
        if gap[next] <= 0.0 {
            break;
        }
        chosen.push(next);
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(distance(*p, points[next]));
        }
    }
    chosen
}

/// Which rays from `origin` are blocked: a ray is blocked by a sphere when
/// it lies inside the cone of half-angle `atan((r + probe) / d)` towards it.
pub fn blocked_rays(origin: Point, rays: &[Vector3<f64>], blockers: &Spheres, probe: f64) -> Vec<bool> {
    let o = Vector3::from(origin);
    let cones: Vec<(Vector3<f64>, f64)> = blockers
        .centres
        .iter()
        .zip(&blockers.radii)
        .map(|(p, r)| {
            let d = Vector3::from(*p) - o;
            let dist = d.norm();
            if dist == 0.0 {
                // Sitting on the origin: every direction is covered.
                (Vector3::zeros(), -1.0)
            } else {
                (d / dist, ((r + probe) / dist).atan().cos())
            }
        })
        .collect();
    rays.iter().map(|r| cones.iter().any(|(dir, cos_max)| r.dot(dir) >= *cos_max)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    /// Smallest blocked fraction over origins.
    pub worst: f64,
    pub origins: Vec<Point>,
    pub fractions: Vec<f64>,
}

pub fn enclosure(ligand_heavy: &[Point], protein: &Spheres, probe: f64, n_rays: usize, max_origins: usize) -> Result<Enclosure> {
    if ligand_heavy.is_empty() {
        return Err(Error::Missing("ligand heavy atoms".into()));
    }
    let rays = fibonacci_sphere(n_rays);
    let origins: Vec<Point> = farthest_point_sampling(ligand_heavy, max_origins).into_iter().map(|i| ligand_heavy[i]).collect();
    let fractions: Vec<f64> = origins
        .iter()
        .map(|o| {
            let blocked = blocked_rays(*o, &rays, protein, probe);
            blocked.iter().filter(|&&b| b).count() as f64 / n_rays as f64
        })
        .collect();
    let worst = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Enclosure { worst, origins, fractions })
}

/// Single-linkage clusters of unit vectors joined when within `linkage_deg`.
pub fn angular_clusters(dirs: &[Vector3<f64>], linkage_deg: f64) -> Vec<Vec<usize>> {
    let cos_link = linkage_deg.to_radians().cos();
    let mut label = vec![usize::MAX; dirs.len()];
    let mut clusters = Vec::new();
    for seed in 0..dirs.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut members = vec![seed];
        let mut head = 0;
        while head < members.len() {
            let a = members[head];
            head += 1;
            for b in 0..dirs.len() {
                if label[b] == usize::MAX && dirs[a].dot(&dirs[b]) >= cos_link {
                    label[b] = id;
                    members.push(b);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

/// Half-angle (degrees) of the cone about the mean direction of the largest
/// cluster of open rays. No open rays gives 0.
pub fn max_exposure_angle(open: &[Vector3<f64>], linkage_deg: f64) -> f64 {
    let clusters = angular_clusters(open, linkage_deg);
    let Some(largest) = clusters.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))) else {
        return 0.0;
    };
    let sum: Vector3<f64> = largest.iter().map(|&i| open[i]).sum();
    if sum.norm() < 1e-9 * largest.len() as f64 {
        return 180.0;
    }
    let axis = sum.normalize();
    largest
        .iter()
        .map(|&i| open[i].dot(&axis).clamp(-1.0, 1.0).acos().to_degrees())
        .fold(0.0, f64::max)
}

/// Open ray directions from `origin` against the blockers.
pub fn open_rays(origin: Point, blockers: &Spheres, probe: f64, n_rays: usize) -> Vec<Vector3<f64>> {
    let rays = fibonacci_sphere(n_rays);
    let blocked = blocked_rays(origin, &rays, blockers, probe);
    rays.into_iter().zip(blocked).filter(|(_, b)| !b).map(|(r, _)| r).collect()
}
