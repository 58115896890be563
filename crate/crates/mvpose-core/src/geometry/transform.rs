//! Rigid transforms on SE(3).

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A rigid transform `[R | t]`: rotation plus translation, applied as
/// `x ↦ R·x + t`. Camera extrinsics are stored camera→world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about `axis` by `angle` radians (Rodrigues), no translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self {
            rotation: rot.into_inner(),
            translation: Vector3::zeros(),
        }
    }

    /// Checks orthonormality (`RᵀR = I` within `tol` per entry) and
    /// `det(R) = +1` within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        let mut ok = (self.rotation.determinant() - 1.0).abs() <= tol;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                ok &= (gram[(i, j)] - expect).abs() <= tol;
            }
        }
        ok
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotates a direction; translation does not apply to free vectors.
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Composition applying `other` first: `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Unit quaternion `[w, x, y, z]` with `w ≥ 0` for a canonical sign.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            self.rotation,
        ));
        let q = q.into_inner();
        let (w, x, y, z) = (q.w, q.i, q.j, q.k);
        if w < 0.0 || (w == 0.0 && (x < 0.0 || (x == 0.0 && (y < 0.0 || (y == 0.0 && z < 0.0))))) {
            [-w, -x, -y, -z]
        } else {
            [w, x, y, z]
        }
    }

    pub fn from_quaternion_wxyz(q: [f64; 4], translation: Vector3<f64>) -> Self {
        let quat = UnitQuaternion::new_normalize(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
        Self {
            rotation: quat.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    /// Uniform random rotation (Shoemake's subgroup method), no translation.
    pub fn random_rotation<R: Rng>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let two_pi = std::f64::consts::TAU;
        let w = (1.0 - u1).sqrt() * (two_pi * u2).sin();
        let x = (1.0 - u1).sqrt() * (two_pi * u2).cos();
        let y = u1.sqrt() * (two_pi * u3).sin();
        let z = u1.sqrt() * (two_pi * u3).cos();
        Self::from_quaternion_wxyz([w, x, y, z], Vector3::zeros())
    }

    /// Geodesic rotation distance to `other` in radians.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }
}

/// JSON wire form of a pose: quaternion `[w,x,y,z]` plus translation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PoseRecord {
    pub quat_wxyz: [f64; 4],
    pub t_xyz: [f64; 3],
}

impl From<&RigidTransform> for PoseRecord {
    fn from(t: &RigidTransform) -> Self {
        PoseRecord {
            quat_wxyz: t.quaternion_wxyz(),
            t_xyz: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl From<&PoseRecord> for RigidTransform {
    fn from(r: &PoseRecord) -> Self {
        RigidTransform::from_quaternion_wxyz(
            r.quat_wxyz,
            Vector3::new(r.t_xyz[0], r.t_xyz[1], r.t_xyz[2]),
        )
    }
}
