use serde::{Deserialize, Serialize};

use super::NetError;

pub const VELOCITY_DIM: usize = 6;
pub const ACTION_CLASSES: usize = 3;
pub const CUBE_DIM: usize = 3;
pub const GRIPPER_DIM: usize = 3;
/// All head outputs stacked: velocities, gripper logits, cube position, gripper position.
pub const HEAD_DIM: usize = VELOCITY_DIM + ACTION_CLASSES + CUBE_DIM + GRIPPER_DIM;
pub const JOINT_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_resolution: usize,
    pub conv_channels: Vec<usize>,
    pub conv_kernels: Vec<usize>,
    pub conv_strides: Vec<usize>,
    pub lstm_hidden: usize,
    pub fc_hidden: usize,
    pub window: usize,
    pub use_lstm: bool,
    pub use_auxiliary: bool,
    pub use_joint_angles: bool,
}

fn kernels(n: usize) -> Vec<usize> {
    let mut k = vec![3; n];
    if let Some(last) = k.last_mut() {
        *last = 2;
    }
    k
}

impl NetConfig {
    /// 256x256 input through eight stride-2 convolutions down to 1x1.
    pub fn large() -> Self {
        Self {
            input_resolution: 256,
            conv_channels: vec![32, 32, 64, 64, 128, 128, 256, 256],
            conv_kernels: kernels(8),
            conv_strides: vec![2; 8],
            lstm_hidden: 128,
            fc_hidden: 128,
            window: 4,
            use_lstm: true,
            use_auxiliary: true,
            use_joint_angles: true,
        }
    }

    /// 64x64 input through six stride-2 convolutions.
    pub fn desk() -> Self {
        Self {
            input_resolution: 64,
            conv_channels: vec![8, 8, 16, 16, 32, 32],
            conv_kernels: kernels(6),
            conv_strides: vec![2; 6],
            ..Self::large()
        }
    }

    /// 8x8 input, two convolutions, LSTM of 4; small enough for finite differences.
    pub fn tiny() -> Self {
        Self {
            input_resolution: 8,
            conv_channels: vec![2, 3],
            conv_kernels: vec![3, 2],
            conv_strides: vec![2, 2],
            lstm_hidden: 4,
            fc_hidden: 5,
            window: 4,
            use_lstm: true,
            use_auxiliary: true,
            use_joint_angles: true,
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "large" => Some(Self::large()),
            "desk" => Some(Self::desk()),
            "tiny" => Some(Self::tiny()),
            _ => None,
        }
    }

    /// Padding of each layer: 1 for 3x3 kernels, 0 for 2x2.
    pub fn padding(&self, layer: usize) -> usize {
        (self.conv_kernels[layer] - 1) / 2
    }

    /// Spatial size after every conv layer.
    pub fn spatial_sizes(&self) -> Vec<usize> {
        let mut n = self.input_resolution;
        let mut out = Vec::new();
        for l in 0..self.conv_channels.len() {
            let (k, s, p) = (self.conv_kernels[l], self.conv_strides[l], self.padding(l));
            n = if n + 2 * p >= k { (n + 2 * p - k) / s + 1 } else { 0 };
            out.push(n);
        }
        out
    }

    /// Length of the flattened conv output of one frame.
    pub fn feature_len(&self) -> usize {
        let s = self.spatial_sizes().last().copied().unwrap_or(self.input_resolution);
        let c = self.conv_channels.last().copied().unwrap_or(3);
        c * s * s
    }

    /// Per-frame input of the recurrent (or window) stage.
    pub fn step_input_len(&self) -> usize {
        self.feature_len() + if self.use_joint_angles { JOINT_DIM } else { 0 }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let n = self.conv_channels.len();
        if n == 0 || self.conv_kernels.len() != n || self.conv_strides.len() != n {
            return Err(NetError::InvalidConfig("conv layer lists differ in length".into()));
        }
        if self.conv_kernels.iter().any(|&k| k == 0) || self.conv_strides.iter().any(|&s| s == 0) {
            return Err(NetError::InvalidConfig("zero kernel or stride".into()));
        }
        if self.spatial_sizes().contains(&0) {
            return Err(NetError::InvalidConfig(format!(
                "input {} too small for {n} layers",
                self.input_resolution
            )));
        }
        if self.lstm_hidden == 0 || self.fc_hidden == 0 || self.window == 0 {
            return Err(NetError::InvalidConfig("zero-width layer".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Episode streams processed side by side.
    pub batch_size: usize,
    /// Steps per truncated-backprop chunk.
    pub sequence_length: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Overrides the inverse-frequency gripper-class weights (open, close, no-op).
    pub class_weights: Option<[f64; 3]>,
    /// Stop after this many optimizer updates, if set.
    pub max_updates: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 16,
            sequence_length: 16,
            epochs: 10,
            seed: 0,
            class_weights: None,
            max_updates: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate > 0.0) {
            return Err(NetError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.sequence_length == 0 {
            return Err(NetError::InvalidConfig("batch_size and sequence_length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(NetError::InvalidConfig("bad Adam constants".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_profile_reaches_one_pixel() {
        let c = NetConfig::large();
        assert_eq!(c.spatial_sizes(), vec![128, 64, 32, 16, 8, 4, 2, 1]);
        assert_eq!(c.conv_kernels, vec![3, 3, 3, 3, 3, 3, 3, 2]);
        assert_eq!(c.feature_len(), 256);
        assert_eq!(NetConfig::desk().spatial_sizes().last(), Some(&1));
        assert_eq!(NetConfig::tiny().spatial_sizes(), vec![4, 2]);
        for c in [NetConfig::large(), NetConfig::desk(), NetConfig::tiny()] {
            c.validate().unwrap();
        }
    }

    #[test]
    fn undersized_input_is_rejected() {
        let mut c = NetConfig::large();
        c.input_resolution = 64;
        assert!(c.validate().is_err());
    }
}
