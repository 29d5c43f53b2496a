//! Shared reward structure: a task-progress kernel, a progress-gated standing
//! bonus, an angular regularizer, and common physical penalties. Tasks differ
//! only in the task variable, its target, and its normalization.

use serde::{Deserialize, Serialize};

use crate::Task;

/// Scale of the height term in the standing bonus (m^2).
pub const STAND_HEIGHT_SCALE: f64 = 0.01;
/// Scale of the posture term in the standing bonus.
pub const STAND_POSTURE_SCALE: f64 = 0.25;

/// Which state quantity plays the task variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskVariable {
    /// Running maximum height gain since episode start (m).
    MaxHeightGain,
    /// Unwrapped trunk rotation angle (rad).
    RotationAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub task: Task,
    pub variable: TaskVariable,
    /// Target value of the task variable (m or rad).
    pub x_target: f64,
    /// Normalization of the progress kernel (m^2 or rad^2).
    pub s_x: f64,
    /// Weight of the angular regularizer.
    pub lambda_omega: f64,
    /// Nominal standing joint configuration.
    pub q_stand: Vec<f64>,
    /// Per-contact penalty for non-foot bodies touching the ground.
    pub collision_coef: f64,
    /// One-shot penalty when the trunk-contact termination fires.
    pub termination_coef: f64,
    pub joint_velocity_coef: f64,
    pub joint_acceleration_coef: f64,
}

impl RewardConfig {
    /// The shared structure instantiated for a task; only the task variable,
    /// target, and normalization change. `q_stand` comes from the robot's
    /// nominal configuration, not from reward tuning.
    pub fn for_task(task: Task, x_target: f64, q_stand: Vec<f64>) -> Self {
        let (variable, s_x) = match task {
            Task::Jump => (TaskVariable::MaxHeightGain, 0.01),
            Task::Flip => (TaskVariable::RotationAngle, std::f64::consts::PI.powi(2)),
        };
        Self {
            task,
            variable,
            x_target,
            s_x,
            lambda_omega: 0.1,
            q_stand,
            collision_coef: -1.0,
            termination_coef: -100.0,
            joint_velocity_coef: -5e-4,
            joint_acceleration_coef: -1e-7,
        }
    }
}

/// Per-step quantities the reward reads. Heights are deviations from the
/// standing height; `qdd` is the finite-difference estimate
/// (qd_t - qd_{t-1}) / dt_ctrl.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInputs {
    /// Task variable x_t (height gain or rotation angle).
    pub x: f64,
    /// Current trunk height deviation from standing (m).
    pub height_dev: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    /// Angular-velocity components about non-target axes (empty in the
    /// planar reduction).
    pub omega_non_target: Vec<f64>,
    /// Number of contact-flagged non-foot bodies.
    pub non_foot_contacts: u32,
    /// Trunk-contact termination indicator for this step.
    pub terminated: bool,
}

impl RewardInputs {
    pub fn quiet(x: f64) -> Self {
        Self {
            x,
            height_dev: 0.0,
            q: Vec::new(),
            qd: Vec::new(),
            qdd: Vec::new(),
            omega_non_target: Vec::new(),
            non_foot_contacts: 0,
            terminated: false,
        }
    }
}

/// Task progress in (0,1]: exp(-(x - x_target)^2 / s_x).
pub fn rho_task(x: f64, x_target: f64, s_x: f64) -> f64 {
    debug_assert!(s_x > 0.0);
    let r = x - x_target;
    (-r * r / s_x).exp()
}

/// Standing bonus: exp(-h^2/0.01) + exp(-||q - q_stand||^2/0.25).
pub fn rho_stand(height_dev: f64, q: &[f64], q_stand: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), q_stand.len());
    let posture: f64 = q
        .iter()
        .zip(q_stand)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (-height_dev * height_dev / STAND_HEIGHT_SCALE).exp()
        + (-posture / STAND_POSTURE_SCALE).exp()
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Per-term breakdown, summed by [`total_reward`] and optionally logged to
/// the per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub task: f64,
    pub task_stand: f64,
    pub angular: f64,
    pub collision: f64,
    pub termination: f64,
    pub joint_velocity: f64,
    pub joint_acceleration: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.task
            + self.task_stand
            + self.angular
            + self.collision
            + self.termination
            + self.joint_velocity
            + self.joint_acceleration
    }
}

pub fn reward_terms(inputs: &RewardInputs, config: &RewardConfig) -> RewardBreakdown {
    let task = rho_task(inputs.x, config.x_target, config.s_x);
    let stand = rho_stand(inputs.height_dev, &inputs.q, &config.q_stand);
    RewardBreakdown {
        task,
        task_stand: task * stand,
        angular: config.lambda_omega * -sum_sq(&inputs.omega_non_target),
        collision: config.collision_coef * inputs.non_foot_contacts as f64,
        termination: if inputs.terminated { config.termination_coef } else { 0.0 },
        joint_velocity: config.joint_velocity_coef * sum_sq(&inputs.qd),
        joint_acceleration: config.joint_acceleration_coef * sum_sq(&inputs.qdd),
    }
}

/// rho_task + rho_task * rho_stand + lambda * r_ang + common penalties.
pub fn total_reward(inputs: &RewardInputs, config: &RewardConfig) -> f64 {
    reward_terms(inputs, config).total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn jump_config() -> RewardConfig {
        RewardConfig::for_task(Task::Jump, 0.5, vec![0.5])
    }

    #[test]
    fn rho_task_peaks_at_target() {
        assert_eq!(rho_task(0.5, 0.5, 0.01), 1.0);
    }

    #[test]
    fn rho_task_jump_scale_gives_inverse_e_at_point_one() {
        assert!((rho_task(0.6, 0.5, 0.01) - 1.0 / E).abs() < 1e-12);
    }

    #[test]
    fn rho_task_flip_scale_gives_inverse_e_at_pi() {
        assert!((rho_task(PI, 2.0 * PI, PI * PI) - 1.0 / E).abs() < 1e-12);
    }

    #[test]
    fn rho_task_strictly_decreases_with_residual() {
        let mut prev = rho_task(0.5, 0.5, 0.01);
        for k in 1..200 {
            let cur = rho_task(0.5 + k as f64 * 0.01, 0.5, 0.01);
            assert!(cur < prev && cur > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn rho_stand_extremes() {
        assert_eq!(rho_stand(0.0, &[0.5], &[0.5]), 2.0);
        let v = rho_stand(0.1, &[0.5], &[0.5]);
        assert!((v - (1.0 / E + 1.0)).abs() < 1e-12);
        let w = rho_stand(0.0, &[1.0], &[0.5]);
        assert!((w - (1.0 + 1.0 / E)).abs() < 1e-12);
    }

    #[test]
    fn perfect_standing_at_target_scores_three() {
        let cfg = jump_config();
        let inputs = RewardInputs {
            x: 0.5,
            height_dev: 0.0,
            q: vec![0.5],
            qd: vec![0.0],
            qdd: vec![0.0],
            omega_non_target: vec![],
            non_foot_contacts: 0,
            terminated: false,
        };
        assert!((total_reward(&inputs, &cfg) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn termination_costs_exactly_one_hundred() {
        let cfg = jump_config();
        let mut inputs = RewardInputs::quiet(0.3);
        inputs.q = vec![0.4];
        inputs.qd = vec![1.0];
        inputs.qdd = vec![2.0];
        let alive = total_reward(&inputs, &cfg);
        inputs.terminated = true;
        let dead = total_reward(&inputs, &cfg);
        assert!((alive - dead - 100.0).abs() < 1e-12);
    }

    #[test]
    fn joint_velocity_penalty_coefficient() {
        let cfg = jump_config();
        let mut inputs = RewardInputs::quiet(0.5);
        inputs.q = vec![cfg.q_stand[0]];
        let base = total_reward(&inputs, &cfg);
        inputs.qd = vec![10.0];
        let with_speed = total_reward(&inputs, &cfg);
        assert!((base - with_speed - 0.05).abs() < 1e-12);
    }

    /// Zeroing one term's inputs removes exactly that term.
    #[test]
    fn reward_is_additive_term_by_term() {
        let cfg = jump_config();
        let full = RewardInputs {
            x: 0.42,
            height_dev: 0.07,
            q: vec![0.63],
            qd: vec![2.5],
            qdd: vec![40.0],
            omega_non_target: vec![1.5],
            non_foot_contacts: 2,
            terminated: true,
        };
        let terms = reward_terms(&full, &cfg);
        assert!((terms.total() - total_reward(&full, &cfg)).abs() < 1e-15);

        let mut no_omega = full.clone();
        no_omega.omega_non_target.clear();
        assert!((total_reward(&no_omega, &cfg) - (terms.total() - terms.angular)).abs() < 1e-12);

        let mut no_contacts = full.clone();
        no_contacts.non_foot_contacts = 0;
        assert!(
            (total_reward(&no_contacts, &cfg) - (terms.total() - terms.collision)).abs() < 1e-12
        );

        let mut alive = full.clone();
        alive.terminated = false;
        assert!((total_reward(&alive, &cfg) - (terms.total() - terms.termination)).abs() < 1e-12);

        let mut still = full.clone();
        still.qd = vec![0.0];
        assert!(
            (total_reward(&still, &cfg) - (terms.total() - terms.joint_velocity)).abs() < 1e-12
        );

        let mut smooth = full.clone();
        smooth.qdd = vec![0.0];
        assert!(
            (total_reward(&smooth, &cfg) - (terms.total() - terms.joint_acceleration)).abs()
                < 1e-12
        );
    }

    /// The two task configs share every coefficient; only the task variable,
    /// target, normalization, and the embodiment's q_stand differ.
    #[test]
    fn task_configs_differ_only_in_target_fields() {
        let jump = RewardConfig::for_task(Task::Jump, 0.5, vec![0.5]);
        let flip = RewardConfig::for_task(Task::Flip, 2.0 * PI, vec![0.35, 0.35]);
        assert_eq!(jump.lambda_omega, flip.lambda_omega);
        assert_eq!(jump.collision_coef, flip.collision_coef);
        assert_eq!(jump.termination_coef, flip.termination_coef);
        assert_eq!(jump.joint_velocity_coef, flip.joint_velocity_coef);
        assert_eq!(jump.joint_acceleration_coef, flip.joint_acceleration_coef);
        assert_ne!(jump.variable, flip.variable);
        assert_ne!(jump.x_target, flip.x_target);
        assert_ne!(jump.s_x, flip.s_x);
    }
}
