use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Rigid transform: rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Pure rotation about a unit axis through the origin.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        Self {
            rotation: axis_angle_matrix(axis, angle),
            translation: Vec3::zeros(),
        }
    }

    /// Rotation from roll/pitch/yaw (applied x, then y, then z).
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            rotation: Rotation3::from_euler_angles(roll, pitch, yaw).into_inner(),
            translation: Vec3::zeros(),
        }
    }

    /// `self ∘ other`: maps a point through `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Angle of the relative rotation between two transforms, in radians.
    pub fn rotation_distance(&self, other: &Transform) -> f64 {
        rotation_log(&(self.rotation * other.rotation.transpose())).norm()
    }

    pub fn approx_eq(&self, other: &Transform, eps: f64) -> bool {
        (self.rotation - other.rotation).abs().max() <= eps
            && (self.translation - other.translation).abs().max() <= eps
    }
}

impl std::ops::Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

pub fn axis_angle_matrix(axis: &Vec3, angle: f64) -> Mat3 {
    Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), angle).into_inner()
}

/// Rotation vector (axis scaled by angle) of a rotation matrix.
pub fn rotation_log(r: &Mat3) -> Vec3 {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let skew = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let angle = (0.5 * skew.norm()).atan2(cos);
    if angle < 1e-9 {
        return skew * 0.5;
    }
    if std::f64::consts::PI - angle < 1e-6 {
        // near pi the skew part vanishes; recover the axis from the symmetric part
        let d = Vec3::new(r[(0, 0)], r[(1, 1)], r[(2, 2)]);
        let i = d.imax();
        let mut axis = Vec3::zeros();
        axis[i] = ((d[i] - cos) / (1.0 - cos)).max(0.0).sqrt();
        for j in 0..3 {
            if j != i {
                axis[j] = (r[(i, j)] + r[(j, i)]) / (2.0 * (1.0 - cos) * axis[i]);
            }
        }
        if axis.dot(&skew) < 0.0 {
            axis = -axis;
        }
        return axis.normalize() * angle;
    }
    skew * (angle / (2.0 * angle.sin()))
}

/// Inverse of [`rotation_log`].
pub fn rotation_exp(w: &Vec3) -> Mat3 {
    let angle = w.norm();
    if angle < 1e-15 {
        return Mat3::identity();
    }
    axis_angle_matrix(&(w / angle), angle)
}

/// Camera-style orientation whose +z looks from `eye` toward `target`, with +y pointing down.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Transform {
    let forward = (target - eye).normalize();
    let right = forward.cross(up).normalize();
    let down = forward.cross(&right);
    Transform {
        rotation: Mat3::from_columns(&[right, down, forward]),
        translation: *eye,
    }
}
