use serde::{Deserialize, Serialize};

use super::config::{ACTION_CLASSES, CUBE_DIM, GRIPPER_DIM, HEAD_DIM, VELOCITY_DIM};
use super::NetError;

const LOGITS: usize = VELOCITY_DIM;
const CUBE: usize = LOGITS + ACTION_CLASSES;
const GRIPPER: usize = CUBE + CUBE_DIM;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_v: f64,
    pub l_g: f64,
    pub l_gp: f64,
    pub l_cp: f64,
    pub total: f64,
}

/// Supervision for a set of frames, regression targets already standardised.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Targets {
    /// `[frames, 6]`
    pub velocity: Vec<f64>,
    /// Gripper class per frame (open, close, no-op).
    pub action: Vec<usize>,
    /// `[frames, 3]`
    pub cube: Vec<f64>,
    /// `[frames, 3]`
    pub gripper: Vec<f64>,
    /// Weight of each frame; padding frames carry 0.
    pub mask: Vec<f64>,
}

impl Targets {
    pub fn frames(&self) -> usize {
        self.mask.len()
    }
}

/// Masked mean squared error of one regression head; adds its gradient into `dy`.
fn mse(pred: &[f64], target: &[f64], mask: &[f64], off: usize, dim: usize, scale: f64, dy: &mut [f64]) -> f64 {
    let denom: f64 = mask.iter().sum::<f64>() * dim as f64;
    if denom == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (f, &m) in mask.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for k in 0..dim {
            let e = pred[f * HEAD_DIM + off + k] - target[f * dim + k];
            sum += m * e * e;
            dy[f * HEAD_DIM + off + k] += scale * 2.0 * m * e / denom;
        }
    }
    sum / denom
}

/// Loss over `pred` (`[frames, HEAD_DIM]`) and the gradient of `scale * total`
/// with respect to `pred`.
///
/// The gripper term is weighted softmax cross-entropy normalised by the sum of
/// the weights; with `auxiliary` off the position terms are zero and send no
/// gradient.
pub fn loss(
    pred: &[f64],
    targets: &Targets,
    class_weights: &[f64; 3],
    auxiliary: bool,
    scale: f64,
) -> Result<(LossBreakdown, Vec<f64>), NetError> {
    let n = targets.frames();
    if pred.len() != n * HEAD_DIM
        || targets.velocity.len() != n * VELOCITY_DIM
        || targets.action.len() != n
        || targets.cube.len() != n * CUBE_DIM
        || targets.gripper.len() != n * GRIPPER_DIM
    {
        return Err(NetError::ShapeMismatch(format!(
            "{} predictions for {n} frames of targets",
            pred.len() / HEAD_DIM
        )));
    }
    if let Some(&a) = targets.action.iter().find(|&&a| a >= ACTION_CLASSES) {
        return Err(NetError::ShapeMismatch(format!("gripper class {a}")));
    }
    let mut dy = vec![0.0; pred.len()];
    let mask = &targets.mask;
    let l_v = mse(pred, &targets.velocity, mask, 0, VELOCITY_DIM, scale, &mut dy);

    let denom: f64 = mask.iter().zip(&targets.action).map(|(m, &a)| m * class_weights[a]).sum();
    let mut l_g = 0.0;
    if denom > 0.0 {
        for f in 0..n {
            let w = mask[f] * class_weights[targets.action[f]];
            if w == 0.0 {
                continue;
            }
            let z = &pred[f * HEAD_DIM + LOGITS..f * HEAD_DIM + LOGITS + ACTION_CLASSES];
            let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - zmax).exp()).sum();
            let log_z = zmax + sum.ln();
            l_g += w * (log_z - z[targets.action[f]]);
            for k in 0..ACTION_CLASSES {
                let p = (z[k] - log_z).exp();
                let onehot = if k == targets.action[f] { 1.0 } else { 0.0 };
                dy[f * HEAD_DIM + LOGITS + k] += scale * w * (p - onehot) / denom;
            }
        }
        l_g /= denom;
    }

    let (l_cp, l_gp) = if auxiliary {
        (
            mse(pred, &targets.cube, mask, CUBE, CUBE_DIM, scale, &mut dy),
            mse(pred, &targets.gripper, mask, GRIPPER, GRIPPER_DIM, scale, &mut dy),
        )
    } else {
        (0.0, 0.0)
    };
    let total = l_v + l_g + l_gp + l_cp;
    Ok((LossBreakdown { l_v, l_g, l_gp, l_cp, total }, dy))
}
