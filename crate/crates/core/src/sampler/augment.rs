use std::f64::consts::PI;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;

use crate::error::Result;
use crate::state::ContinuousState;

/// Uniformly distributed rotation (Shoemake's quaternion construction).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(
        b * (2.0 * PI * u3).cos(),
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Subtract the centroid, then apply a uniformly random rotation.
pub fn centre_random_augmentation<R: Rng + ?Sized>(
    state: &mut ContinuousState,
    rng: &mut R,
) -> Result<()> {
    state.require_cartesian()?;
    let n = state.dim() / 3;
    if n == 0 {
        return Ok(());
    }
    let mut centroid = Vector3::zeros();
    for p in state.coords.chunks_exact(3) {
        centroid += Vector3::new(p[0], p[1], p[2]);
    }
    centroid /= n as f64;
    let rot = random_rotation(rng);
    for p in state.coords.chunks_exact_mut(3) {
        let v = rot * (Vector3::new(p[0], p[1], p[2]) - centroid);
        p.copy_from_slice(v.as_slice());
    }
    Ok(())
}
