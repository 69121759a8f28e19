use serde::{Deserialize, Serialize};

use super::config::{ACTION_CLASSES, CUBE_DIM, GRIPPER_DIM, HEAD_DIM, JOINT_DIM, VELOCITY_DIM};
use super::model::{Chunk, ControllerNet, StreamState};
use super::NetError;
use crate::render::Image;

/// Raw head outputs for one step (regression heads in standardised units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetOutput {
    pub velocities: [f64; VELOCITY_DIM],
    pub gripper_logits: [f64; ACTION_CLASSES],
    pub cube_pos: [f64; CUBE_DIM],
    pub gripper_pos: [f64; GRIPPER_DIM],
}

impl NetOutput {
    pub fn from_row(row: &[f64]) -> Self {
        let mut out = Self {
            velocities: [0.0; VELOCITY_DIM],
            gripper_logits: [0.0; ACTION_CLASSES],
            cube_pos: [0.0; CUBE_DIM],
            gripper_pos: [0.0; GRIPPER_DIM],
        };
        out.velocities.copy_from_slice(&row[..6]);
        out.gripper_logits.copy_from_slice(&row[6..9]);
        out.cube_pos.copy_from_slice(&row[9..12]);
        out.gripper_pos.copy_from_slice(&row[12..HEAD_DIM]);
        out
    }

    /// Index of the largest gripper logit (first one on ties).
    pub fn action(&self) -> usize {
        self.action_with_bias(&[0.0; ACTION_CLASSES])
    }

    /// Argmax of the gripper logits after adding `bias`.
    pub fn action_with_bias(&self, bias: &[f64; ACTION_CLASSES]) -> usize {
        let score = |k: usize| self.gripper_logits[k] + bias[k];
        let mut best = 0;
        for k in 1..ACTION_CLASSES {
            if score(k) > score(best) {
                best = k;
            }
        }
        best
    }
}

/// Converts an RGB image to planar `[3, res, res]` values in [0, 1],
/// box-averaging when the image is an integer multiple of `res`.
pub fn image_to_input(img: &Image, res: usize, out: &mut [f64]) -> Result<(), NetError> {
    let (w, h) = (img.width as usize, img.height as usize);
    if w != h || w < res || w % res != 0 || out.len() != 3 * res * res {
        return Err(NetError::ShapeMismatch(format!("{w}x{h} image for a {res}px input")));
    }
    let k = w / res;
    let norm = 1.0 / (255.0 * (k * k) as f64);
    for y in 0..res {
        for x in 0..res {
            let mut acc = [0u32; 3];
            for dy in 0..k {
                let row = ((y * k + dy) * w + x * k) * 3;
                for dx in 0..k {
                    for c in 0..3 {
                        acc[c] += img.pixels[row + dx * 3 + c] as u32;
                    }
                }
            }
            for c in 0..3 {
                out[(c * res + y) * res + x] = acc[c] as f64 * norm;
            }
        }
    }
    Ok(())
}

impl ControllerNet {
    /// Clears the recurrent memory (episode start).
    pub fn reset_state(&mut self) {
        self.recurrent_state = StreamState::zeros(&self.config, 1);
    }

    /// Runs the window (oldest first, normalised joints) from the current
    /// recurrent state and returns the output of the newest frame. The state
    /// then advances past the oldest frame, so calling this once per control
    /// step with a sliding window matches streaming over the padded history.
    pub fn forward(&mut self, images: &[Image], joints: &[[f64; JOINT_DIM]]) -> Result<NetOutput, NetError> {
        let w = self.config.window;
        if images.len() != w || joints.len() != w {
            return Err(NetError::ShapeMismatch(format!(
                "window of {} images and {} joint vectors, expected {w}",
                images.len(),
                joints.len()
            )));
        }
        let res = self.config.input_resolution;
        let plane = res * res;
        let mut frame = vec![0.0; 3 * plane];
        let mut input = vec![0.0; 3 * w * plane];
        for (f, img) in images.iter().enumerate() {
            image_to_input(img, res, &mut frame)?;
            for c in 0..3 {
                input[(c * w + f) * plane..][..plane].copy_from_slice(&frame[c * plane..(c + 1) * plane]);
            }
        }
        let flat: Vec<f64> = joints.iter().flatten().copied().collect();
        self.forward_planar(&input, &flat)
    }

    /// [`forward`](Self::forward) on already converted inputs: `[3, window, res, res]`
    /// images and `[window, 6]` joints.
    pub fn forward_planar(&mut self, images: &[f64], joints: &[f64]) -> Result<NetOutput, NetError> {
        let w = self.config.window;
        let mut reset = vec![false; w];
        // the window layer rebuilds its history from the first frame
        reset[0] = !self.config.use_lstm;
        let chunk = Chunk {
            streams: 1,
            steps: w,
            images,
            joints,
            reset: &reset,
        };
        let mut state = self.recurrent_state.clone();
        let (y, cache) = self.forward_chunk(&chunk, &mut state)?;
        if self.config.use_lstm {
            let h = self.config.lstm_hidden;
            self.recurrent_state.h.copy_from_slice(&cache.h_steps[..h]);
            self.recurrent_state.c.copy_from_slice(&cache.c_steps[..h]);
        }
        Ok(NetOutput::from_row(&y[(w - 1) * HEAD_DIM..]))
    }
}
