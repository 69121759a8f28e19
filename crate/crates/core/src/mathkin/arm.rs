use std::path::Path;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::transform::{Transform, Vec3};
use super::KinematicsError;

pub const DOF: usize = 6;
pub const ARM_MAGIC: &str = "RANDGRASP-ARM v1";

/// Joint-space vector (radians or radians per second).
pub type Joints = [f64; DOF];

const REFERENCE_ARM: &str = include_str!("../../assets/reference.arm");

/// One revolute joint: a fixed offset from the previous frame, then rotation about `axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLink {
    pub name: String,
    pub offset: Transform,
    pub axis: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmModel {
    pub links: Vec<JointLink>,
    pub joint_limits: [(f64, f64); DOF],
    pub base_pose: Transform,
    pub tool_offset: Transform,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub angles: Joints,
    pub velocities: Joints,
}

impl ArmModel {
    pub fn new(
        links: Vec<JointLink>,
        joint_limits: [(f64, f64); DOF],
        base_pose: Transform,
        tool_offset: Transform,
    ) -> Result<Self, KinematicsError> {
        if links.len() != DOF {
            return Err(KinematicsError::InvalidModel(format!(
                "expected {DOF} revolute joints, got {}",
                links.len()
            )));
        }
        for (i, (lo, hi)) in joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {i}: lower limit {lo} is not below upper limit {hi}"
                )));
            }
        }
        for link in &links {
            if (link.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {}: axis is not unit length",
                    link.name
                )));
            }
        }
        Ok(Self {
            links,
            joint_limits,
            base_pose,
            tool_offset,
        })
    }

    /// The canonical checked-in arm.
    pub fn reference() -> Self {
        Self::parse(REFERENCE_ARM).expect("bundled reference arm is valid")
    }

    pub fn load(path: &Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KinematicsError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, KinematicsError> {
        let body = text
            .strip_prefix(ARM_MAGIC)
            .ok_or_else(|| KinematicsError::Parse(format!("missing `{ARM_MAGIC}` header")))?;
        let file: ArmFile =
            toml::from_str(body).map_err(|e| KinematicsError::Parse(e.to_string()))?;
        let mut limits = [(0.0, 0.0); DOF];
        if file.link.len() != DOF {
            return Err(KinematicsError::InvalidModel(format!(
                "expected {DOF} links, got {}",
                file.link.len()
            )));
        }
        let links = file
            .link
            .iter()
            .zip(limits.iter_mut())
            .map(|(l, lim)| {
                *lim = (l.limits[0], l.limits[1]);
                let mut offset = Transform::from_rpy(l.rpy[0], l.rpy[1], l.rpy[2]);
                offset.translation = Vec3::from(l.xyz);
                JointLink {
                    name: l.name.clone(),
                    offset,
                    axis: Vec3::from(l.axis),
                }
            })
            .collect();
        ArmModel::new(links, limits, file.base.to_transform(), file.tool.to_transform())
    }

    pub fn to_text(&self) -> String {
        let file = ArmFile {
            base: FramePart::from_transform(&self.base_pose),
            tool: FramePart::from_transform(&self.tool_offset),
            link: self
                .links
                .iter()
                .zip(self.joint_limits.iter())
                .map(|(l, lim)| {
                    let (r, p, y) = nalgebra::Rotation3::from_matrix_unchecked(l.offset.rotation)
                        .euler_angles();
                    LinkPart {
                        name: l.name.clone(),
                        xyz: l.offset.translation.into(),
                        rpy: [r, p, y],
                        axis: l.axis.into(),
                        limits: [lim.0, lim.1],
                    }
                })
                .collect(),
        };
        format!("{ARM_MAGIC}\n{}", toml::to_string(&file).expect("arm model serializes"))
    }

    /// Same geometry with the base raised to `height` above the table plane.
    pub fn with_base_height(&self, height: f64) -> Self {
        let mut m = self.clone();
        m.base_pose.translation.z = height;
        m
    }

    pub fn with_base_pose(&self, base_pose: Transform) -> Self {
        let mut m = self.clone();
        m.base_pose = base_pose;
        m
    }

    /// Elbow-up configuration with the tool pointing down over the workspace.
    pub fn home(&self) -> Joints {
        // elbow-up, tool pointing down over the workspace
        let mut q: Joints = [0.0, 0.35, 1.45, 0.0, 1.34, 0.0];
        for (v, (lo, hi)) in q.iter_mut().zip(self.joint_limits.iter()) {
            *v = v.clamp(*lo, *hi);
        }
        q
    }

    pub fn within_limits(&self, q: &Joints) -> bool {
        q.iter()
            .zip(self.joint_limits.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, q: &mut Joints) {
        for (v, (lo, hi)) in q.iter_mut().zip(self.joint_limits.iter()) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Maps joint values to [-1, 1] by their limits.
    pub fn normalize_joints(&self, q: &Joints) -> Joints {
        let mut out = [0.0; DOF];
        for i in 0..DOF {
            let (lo, hi) = self.joint_limits[i];
            out[i] = 2.0 * (q[i] - lo) / (hi - lo) - 1.0;
        }
        out
    }

    /// Frame of every joint (before its own rotation is applied), plus the tip frame.
    pub fn joint_frames(&self, q: &Joints) -> ([Transform; DOF], Transform) {
        let mut frames = [Transform::identity(); DOF];
        let mut t = self.base_pose;
        for (i, link) in self.links.iter().enumerate() {
            t = t.compose(&link.offset);
            frames[i] = t;
            t = t.compose(&Transform::from_axis_angle(&link.axis, q[i]));
        }
        (frames, t.compose(&self.tool_offset))
    }

    pub fn forward_kinematics(&self, q: &Joints) -> Transform {
        self.joint_frames(q).1
    }

    /// Geometric Jacobian of the tip: rows 0..3 linear velocity, rows 3..6 angular velocity.
    pub fn jacobian(&self, q: &Joints) -> Matrix6<f64> {
        let (frames, tip) = self.joint_frames(q);
        let mut j = Matrix6::zeros();
        for (i, (frame, link)) in frames.iter().zip(self.links.iter()).enumerate() {
            let w = frame.rotation * link.axis;
            let v = w.cross(&(tip.translation - frame.translation));
            j.fixed_view_mut::<3, 1>(0, i).copy_from(&v);
            j.fixed_view_mut::<3, 1>(3, i).copy_from(&w);
        }
        j
    }
}

#[derive(Serialize, Deserialize)]
struct ArmFile {
    base: FramePart,
    tool: FramePart,
    link: Vec<LinkPart>,
}

#[derive(Serialize, Deserialize)]
struct FramePart {
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

impl FramePart {
    fn to_transform(&self) -> Transform {
        let mut t = Transform::from_rpy(self.rpy[0], self.rpy[1], self.rpy[2]);
        t.translation = Vec3::from(self.xyz);
        t
    }

    fn from_transform(t: &Transform) -> Self {
        let (r, p, y) = nalgebra::Rotation3::from_matrix_unchecked(t.rotation).euler_angles();
        Self {
            xyz: t.translation.into(),
            rpy: [r, p, y],
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LinkPart {
    #[serde(default)]
    name: String,
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    axis: [f64; 3],
    limits: [f64; 2],
}
