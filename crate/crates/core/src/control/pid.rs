use serde::{Deserialize, Serialize};

use crate::mathkin::DOF;

/// Per-joint gains. The integral clamp is in radians (integrated rad/s error).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: [f64; DOF],
    pub ki: [f64; DOF],
    pub kd: [f64; DOF],
    pub integral_clamp: f64,
}

impl PidGains {
    pub fn uniform(kp: f64, ki: f64, kd: f64, integral_clamp: f64) -> Self {
        assert!(kp >= 0.0 && ki >= 0.0 && kd >= 0.0, "gains must be non-negative");
        assert!(integral_clamp >= 0.0, "integral clamp must be non-negative");
        Self {
            kp: [kp; DOF],
            ki: [ki; DOF],
            kd: [kd; DOF],
            integral_clamp,
        }
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::uniform(2.0, 0.5, 0.0, 0.5)
    }
}

/// Integral and previous-error memory carried between steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PidState {
    pub integral: [f64; DOF],
    pub prev_error: [f64; DOF],
}

/// One controller update. The command is the target velocity fed forward plus
/// the PID correction on the velocity error.
pub fn pid_step(
    gains: &PidGains,
    target_v: &[f64; DOF],
    actual_v: &[f64; DOF],
    state: &mut PidState,
    dt: f64,
) -> [f64; DOF] {
    assert!(dt > 0.0, "dt must be positive");
    let mut cmd = [0.0; DOF];
    for i in 0..DOF {
        let e = target_v[i] - actual_v[i];
        state.integral[i] =
            (state.integral[i] + e * dt).clamp(-gains.integral_clamp, gains.integral_clamp);
        let de = (e - state.prev_error[i]) / dt;
        state.prev_error[i] = e;
        cmd[i] = target_v[i] + gains.kp[i] * e + gains.ki[i] * state.integral[i] + gains.kd[i] * de;
    }
    cmd
}

/// First-order joint motor: the velocity relaxes toward the command with time
/// constant `tau`, discretised exactly for a command held over the step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Motor {
    pub tau: f64,
}

impl Default for Motor {
    fn default() -> Self {
        Self { tau: 0.1 }
    }
}

impl Motor {
    /// Advances velocity and angle by `dt` under the held command `u`.
    /// Returns (new velocity, angle increment).
    pub fn step(&self, v: f64, u: f64, dt: f64) -> (f64, f64) {
        if self.tau <= 0.0 {
            return (u, u * dt);
        }
        let decay = (-dt / self.tau).exp();
        let v_next = u + (v - u) * decay;
        let dq = u * dt + (v - u) * self.tau * (1.0 - decay);
        (v_next, dq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_zero_memory_gives_zero_command() {
        let mut s = PidState::default();
        let cmd = pid_step(&PidGains::default(), &[0.0; DOF], &[0.0; DOF], &mut s, 0.05);
        assert_eq!(cmd, [0.0; DOF]);
        assert_eq!(s, PidState::default());
    }

    #[test]
    fn matched_velocity_passes_target_through() {
        let mut s = PidState::default();
        let v = [0.3, -0.2, 0.1, 0.0, 0.5, -0.4];
        assert_eq!(pid_step(&PidGains::default(), &v, &v, &mut s, 0.05), v);
    }

    /// Independent fine-step Euler integration of the continuous loop.
    fn euler_closed_loop(target: f64, t_end: f64) -> f64 {
        let (kp, ki, tau) = (2.0, 0.5, 0.1);
        let h = 1e-5;
        let (mut v, mut integ, mut u) = (0.0, 0.0, 0.0);
        let hold = 0.05;
        let mut next_update = 0.0;
        let mut t = 0.0;
        while t < t_end - 1e-12 {
            if t >= next_update - 1e-12 {
                let e: f64 = target - v;
                integ = (integ + e * hold).clamp(-0.5, 0.5);
                u = target + kp * e + ki * integ;
                next_update += hold;
            }
            v += h * (u - v) / tau;
            t += h;
        }
        v
    }

    #[test]
    fn step_response_settles_within_one_second() {
        let gains = PidGains::uniform(2.0, 0.5, 0.0, 0.5);
        let motor = Motor::default();
        let dt = 0.05;
        let target = [1.0, -0.5, 0.25, 2.0, -1.5, 0.8];
        let mut v = [0.0; DOF];
        let mut s = PidState::default();
        for _ in 0..20 {
            let u = pid_step(&gains, &target, &v, &mut s, dt);
            for i in 0..DOF {
                v[i] = motor.step(v[i], u[i], dt).0;
            }
        }
        for i in 0..DOF {
            assert!((v[i] - target[i]).abs() <= 0.05 * target[i].abs(), "joint {i}: {}", v[i]);
        }
        let reference = euler_closed_loop(1.0, 1.0);
        assert!((v[0] - reference).abs() < 1e-3, "{} vs {}", v[0], reference);
    }

    #[test]
    fn integral_never_exceeds_clamp() {
        let gains = PidGains::uniform(1.0, 3.0, 0.1, 0.2);
        let mut s = PidState::default();
        for k in 0..500 {
            pid_step(&gains, &[5.0; DOF], &[(k % 3) as f64 * -1.0; DOF], &mut s, 0.05);
            assert!(s.integral.iter().all(|x| x.abs() <= 0.2));
        }
    }

    #[test]
    fn motor_angle_increment_matches_integrated_velocity() {
        let m = Motor::default();
        let (v0, u, dt) = (0.2, 1.3, 0.05);
        let (_, dq) = m.step(v0, u, dt);
        let n = 100_000;
        let h = dt / n as f64;
        let mut q = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) * h;
            q += h * (u + (v0 - u) * (-t / m.tau).exp());
        }
        assert!((dq - q).abs() < 1e-12);
    }
}
