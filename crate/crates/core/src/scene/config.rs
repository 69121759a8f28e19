use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::texture::TextureParams;
use super::{Color, SceneError};

pub const CONFIG_MAGIC: &str = "RANDGRASP-CFG v1";

/// Names accepted by [`apply_ablation`].
pub const ABLATIONS: [&str; 6] = [
    "full",
    "no_distractors",
    "no_textures",
    "no_moving_cam",
    "no_shadows",
    "baseline",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorDist {
    pub mean: Color,
    pub stddev: Color,
}

/// Axis-aligned rectangle on the table plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x[0] && x <= self.x[1] && y >= self.y[0] && y <= self.y[1]
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x[0] + self.x[1]), 0.5 * (self.y[0] + self.y[1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidePolicy {
    Random,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switches {
    pub distractors: bool,
    pub textures: bool,
    pub camera_jitter: bool,
    pub shadows: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomisationConfig {
    pub cube_color: ColorDist,
    pub basket_color: ColorDist,
    pub arm_color: ColorDist,
    /// Plain table/background colours, used when textures are switched off.
    pub table_color: ColorDist,
    pub background_color: ColorDist,
    pub cube_edge: f64,
    pub cube_region: Rect,
    pub basket_left_region: Rect,
    pub basket_right_region: Rect,
    pub basket_side: SidePolicy,
    pub basket_half_extents: [f64; 2],
    pub basket_depth: f64,
    pub basket_wall: f64,
    pub camera_eye: [f64; 3],
    pub camera_target: [f64; 3],
    /// Full edge length of the uniform box around `camera_eye`, per axis.
    pub camera_position_box: [f64; 3],
    pub fov_y_deg: f64,
    pub resolution: u32,
    /// Canonical direction the light travels (from light toward the table).
    pub light_direction: [f64; 3],
    pub light_cone_half_angle_deg: f64,
    pub light_intensity: f64,
    /// Relative half-width of the uniform intensity range.
    pub light_intensity_jitter: f64,
    pub base_height: f64,
    /// Half-width of the uniform base-height range.
    pub base_height_range: f64,
    pub start_joint_stddev: f64,
    pub distractor_count_range: [u32; 2],
    pub distractor_size_range: [f64; 2],
    pub distractor_region: Rect,
    pub texture_params: TextureParams,
    pub switches: Switches,
}

impl Default for RandomisationConfig {
    fn default() -> Self {
        Self {
            cube_color: ColorDist {
                mean: [0.85, 0.12, 0.1],
                stddev: [0.05; 3],
            },
            basket_color: ColorDist {
                mean: [0.2, 0.3, 0.75],
                stddev: [0.05; 3],
            },
            arm_color: ColorDist {
                mean: [0.8, 0.8, 0.8],
                stddev: [0.05; 3],
            },
            table_color: ColorDist {
                mean: [0.55, 0.42, 0.3],
                stddev: [0.2; 3],
            },
            background_color: ColorDist {
                mean: [0.75, 0.75, 0.72],
                stddev: [0.2; 3],
            },
            cube_edge: 0.05,
            cube_region: Rect {
                x: [0.25, 0.65],
                y: [-0.2, 0.2],
            },
            basket_left_region: Rect {
                x: [0.10, 0.40],
                y: [0.28, 0.58],
            },
            basket_right_region: Rect {
                x: [0.10, 0.40],
                y: [-0.58, -0.28],
            },
            basket_side: SidePolicy::Random,
            basket_half_extents: [0.08, 0.08],
            basket_depth: 0.08,
            basket_wall: 0.01,
            camera_eye: [0.95, -0.75, 0.95],
            camera_target: [0.25, 0.0, 0.2],
            camera_position_box: [0.2, 0.2, 0.2],
            fov_y_deg: 55.0,
            resolution: 64,
            light_direction: [-0.3, 0.25, -1.0],
            light_cone_half_angle_deg: 30.0,
            light_intensity: 1.0,
            light_intensity_jitter: 0.3,
            base_height: 0.02,
            base_height_range: 0.02,
            start_joint_stddev: 0.03,
            distractor_count_range: [0, 4],
            distractor_size_range: [0.04, 0.10],
            distractor_region: Rect {
                x: [0.0, 0.85],
                y: [-0.7, 0.7],
            },
            texture_params: TextureParams::default(),
            switches: Switches {
                distractors: true,
                textures: true,
                camera_jitter: true,
                shadows: true,
            },
        }
    }
}

impl RandomisationConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let dists = [
            &self.cube_color,
            &self.basket_color,
            &self.arm_color,
            &self.table_color,
            &self.background_color,
        ];
        if dists.iter().any(|d| d.stddev.iter().any(|s| *s < 0.0)) {
            return Err(SceneError::InvalidConfig("colour stddev must be >= 0".into()));
        }
        if self.start_joint_stddev < 0.0
            || self.base_height_range < 0.0
            || self.light_intensity_jitter < 0.0
            || self.camera_position_box.iter().any(|b| *b < 0.0)
        {
            return Err(SceneError::InvalidConfig("spreads must be >= 0".into()));
        }
        let [lo, hi] = self.distractor_count_range;
        if lo > hi {
            return Err(SceneError::InvalidConfig("distractor count range reversed".into()));
        }
        for r in [&self.cube_region, &self.basket_left_region, &self.basket_right_region] {
            if r.x[0] > r.x[1] || r.y[0] > r.y[1] {
                return Err(SceneError::InvalidConfig("region bounds reversed".into()));
            }
        }
        if self.resolution < 8 || !(0.0..180.0).contains(&self.fov_y_deg) {
            return Err(SceneError::InvalidConfig("bad camera intrinsics".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let body = text
            .strip_prefix(CONFIG_MAGIC)
            .ok_or_else(|| SceneError::Parse(format!("missing `{CONFIG_MAGIC}` header")))?;
        let cfg: Self = toml::from_str(body).map_err(|e| SceneError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "{CONFIG_MAGIC}\n{}",
            toml::to_string(self).expect("config serializes")
        )
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    /// First 8 bytes of the SHA-256 of the canonical text form.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_text().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Returns `cfg` with one randomisation disabled.
pub fn apply_ablation(cfg: &RandomisationConfig, name: &str) -> Result<RandomisationConfig, SceneError> {
    let mut out = cfg.clone();
    match name {
        "full" => {}
        "no_distractors" => out.switches.distractors = false,
        "no_textures" => out.switches.textures = false,
        "no_moving_cam" => out.switches.camera_jitter = false,
        "no_shadows" => out.switches.shadows = false,
        "baseline" => {
            // plain scene with colours at their means; only cube and basket placement varies
            out.switches = Switches {
                distractors: false,
                textures: false,
                camera_jitter: false,
                shadows: true,
            };
            for d in [
                &mut out.cube_color,
                &mut out.basket_color,
                &mut out.arm_color,
                &mut out.table_color,
                &mut out.background_color,
            ] {
                d.stddev = [0.0; 3];
            }
            out.light_cone_half_angle_deg = 0.0;
            out.light_intensity_jitter = 0.0;
            out.base_height_range = 0.0;
            out.start_joint_stddev = 0.0;
        }
        other => return Err(SceneError::UnknownSwitch(other.to_string())),
    }
    Ok(out)
}
