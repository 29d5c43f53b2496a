//! Planar physics environments with an external-force injection hook.
//!
//! Two embodiments share one state/config/observation layer: a 1-D vertical
//! jumper (single force-actuated prismatic leg) and a 2-D flipper (rigid
//! trunk with two force-actuated prismatic legs on free hip pivots). Both
//! integrate with semi-implicit Euler at a fixed physics substep and enforce
//! ground contact inelastically at foot height zero.

mod flipper;
mod jumper;

pub use flipper::Flipper;
pub use jumper::Jumper;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assist::AppliedForce;
use crate::error::{Error, Result};
use crate::Task;

/// Geometry, limits, and integration parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub task: Task,
    /// Trunk mass (kg).
    pub mass: f64,
    /// Gravity (m/s^2).
    pub gravity: f64,
    /// Control timestep (s).
    pub dt_ctrl: f64,
    /// Physics substep (s); must divide dt_ctrl.
    pub dt_sim: f64,
    /// Episode length (s).
    pub episode_length: f64,
    /// Leg extension limits (m).
    pub q_min: f64,
    pub q_max: f64,
    /// Nominal standing extension per joint (m).
    pub q_stand: Vec<f64>,
    /// Standing trunk height (m).
    pub h_stand: f64,
    /// Per-leg actuator force limits (N); negative = retraction.
    pub force_min: f64,
    pub force_max: f64,
    /// Effective inertia of the extension DOF in flight (kg).
    pub leg_mass: f64,
    /// Viscous damping on the extension DOF in flight (N s/m).
    pub leg_damping: f64,
    /// Half-width of the uniform reset noise on q (m).
    pub reset_noise: f64,
    /// Valid command range.
    pub command_min: f64,
    pub command_max: f64,
    /// Time-encoding scale (s); the assist activation start time.
    pub time_lambda: f64,
    /// Trunk rotational inertia (kg m^2, flipper).
    pub inertia: f64,
    /// Hip positions at (+-hip_offset, 0) in the body frame (m, flipper).
    pub hip_offset: f64,
    /// Trunk collision box half-extents (m, flipper).
    pub trunk_half_length: f64,
    pub trunk_half_height: f64,
    /// Coulomb friction coefficient at foot anchors (flipper).
    pub friction: f64,
    /// Trunk-ground contact height for the jumper (m).
    pub trunk_clearance: f64,
}

impl EnvConfig {
    pub fn jump() -> Self {
        Self {
            task: Task::Jump,
            mass: 18.0,
            gravity: 9.81,
            dt_ctrl: 0.02,
            dt_sim: 0.001,
            episode_length: 3.0,
            q_min: 0.2,
            q_max: 0.8,
            q_stand: vec![0.5],
            h_stand: 0.5,
            force_min: -200.0,
            force_max: 600.0,
            leg_mass: 0.5,
            leg_damping: 2.0,
            reset_noise: 0.01,
            command_min: 0.2,
            command_max: 0.8,
            time_lambda: 1.0,
            inertia: 0.6,
            hip_offset: 0.25,
            trunk_half_length: 0.3,
            trunk_half_height: 0.1,
            friction: 0.8,
            trunk_clearance: 0.15,
        }
    }

    pub fn flip() -> Self {
        Self {
            task: Task::Flip,
            mass: 18.0,
            gravity: 9.81,
            dt_ctrl: 0.02,
            dt_sim: 0.001,
            episode_length: 3.0,
            q_min: 0.2,
            q_max: 0.5,
            q_stand: vec![0.35, 0.35],
            h_stand: 0.35,
            force_min: -150.0,
            force_max: 500.0,
            leg_mass: 0.4,
            leg_damping: 2.0,
            reset_noise: 0.01,
            command_min: std::f64::consts::TAU,
            command_max: std::f64::consts::TAU,
            time_lambda: 1.0,
            inertia: 0.6,
            hip_offset: 0.25,
            trunk_half_length: 0.3,
            trunk_half_height: 0.1,
            friction: 0.9,
            trunk_clearance: 0.15,
        }
    }

    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Jump => Self::jump(),
            Task::Flip => Self::flip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ratio = self.dt_ctrl / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::Config(format!(
                "dt_sim {} must divide dt_ctrl {}",
                self.dt_sim, self.dt_ctrl
            )));
        }
        if self.mass <= 0.0 || self.leg_mass <= 0.0 || self.inertia <= 0.0 {
            return Err(Error::Config("masses and inertia must be positive".into()));
        }
        if self.q_min >= self.q_max {
            return Err(Error::Config("q_min must be below q_max".into()));
        }
        if self.force_max <= 0.0 {
            return Err(Error::Config("force_max must be positive".into()));
        }
        if self.episode_length <= 0.0 || self.dt_sim <= 0.0 {
            return Err(Error::Config("timing parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_sim).round() as usize
    }

    pub fn joint_count(&self) -> usize {
        self.q_stand.len()
    }
}

/// Full simulator state exposed to the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// Trunk height (m).
    pub height: f64,
    pub vertical_velocity: f64,
    /// Horizontal trunk position/velocity (flipper; zero for the jumper).
    pub lateral_position: f64,
    pub lateral_velocity: f64,
    /// Unwrapped attitude angle (rad; identically zero for the jumper).
    pub attitude: f64,
    pub angular_velocity: f64,
    pub joint_pos: Vec<f64>,
    pub joint_vel: Vec<f64>,
    /// Joint velocities at the previous control step, for the
    /// finite-difference acceleration estimate.
    pub prev_joint_vel: Vec<f64>,
    pub foot_contact: Vec<bool>,
    pub trunk_contact: bool,
    /// Episode clock (s); advances by dt_sim per substep.
    pub clock: f64,
    /// Running maximum of `height` since reset.
    pub max_height: f64,
    /// Episode over (any cause).
    pub terminated: bool,
}

impl EnvState {
    fn fresh(joints: usize) -> Self {
        Self {
            height: 0.0,
            vertical_velocity: 0.0,
            lateral_position: 0.0,
            lateral_velocity: 0.0,
            attitude: 0.0,
            angular_velocity: 0.0,
            joint_pos: vec![0.0; joints],
            joint_vel: vec![0.0; joints],
            prev_joint_vel: vec![0.0; joints],
            foot_contact: vec![false; joints],
            trunk_contact: false,
            clock: 0.0,
            max_height: 0.0,
            terminated: false,
        }
    }

    pub fn all_finite(&self) -> bool {
        let scalars = [
            self.height,
            self.vertical_velocity,
            self.lateral_position,
            self.lateral_velocity,
            self.attitude,
            self.angular_velocity,
            self.clock,
            self.max_height,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.joint_pos.iter().all(|v| v.is_finite())
            && self.joint_vel.iter().all(|v| v.is_finite())
    }
}

/// Observation split into the onboard-sensor part and the privileged part
/// available only to the teacher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub proprioceptive: Vec<f64>,
    pub privileged: Vec<f64>,
}

impl Observation {
    pub fn full(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.proprioceptive.len() + self.privileged.len());
        v.extend_from_slice(&self.proprioceptive);
        v.extend_from_slice(&self.privileged);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    None,
    BodyContact,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: EnvState,
    pub observation: Observation,
    pub terminated: bool,
    pub cause: TerminationCause,
}

/// Assembles the observation: proprioceptive part (q, qd, gravity direction
/// in the body frame, angular velocity, command, time encoding) and the
/// privileged part (raw height plus max height for jump, raw height plus
/// unwrapped angle for flip).
pub fn build_observation(
    state: &EnvState,
    config: &EnvConfig,
    command: f64,
    tau: f64,
) -> Observation {
    debug_assert!((0.0..1.0).contains(&tau));
    let mut prop = Vec::with_capacity(state.joint_pos.len() * 2 + 5);
    prop.extend_from_slice(&state.joint_pos);
    prop.extend_from_slice(&state.joint_vel);
    // World down rotated into the body frame.
    let (s, c) = state.attitude.sin_cos();
    prop.push(-s);
    prop.push(-c);
    prop.push(state.angular_velocity);
    prop.push(command);
    prop.push(tau);
    let privileged = match config.task {
        Task::Jump => vec![state.height, state.max_height],
        Task::Flip => vec![state.height, state.attitude],
    };
    Observation {
        proprioceptive: prop,
        privileged,
    }
}

/// Common surface of both planar environments.
pub trait Environment: Send {
    fn config(&self) -> &EnvConfig;
    fn state(&self) -> &EnvState;
    fn command(&self) -> f64;
    fn action_dim(&self) -> usize;

    /// Puts the robot at nominal stand with the given command; the command
    /// must lie in the configured range.
    fn reset(&mut self, command: f64, rng: &mut ChaCha8Rng) -> Result<Observation>;

    /// Advances one control step under `action` (N, clamped to actuator
    /// limits) and the externally injected forces.
    fn step(&mut self, action: &[f64], external: &[AppliedForce]) -> Result<StepResult>;

    fn observe(&self) -> Observation {
        let tau = crate::assist::time_encoding(self.state().clock, self.config().time_lambda)
            .unwrap_or(0.0);
        build_observation(self.state(), self.config(), self.command(), tau)
    }

    /// Success-check summary of the current episode.
    fn episode_summary(&self) -> crate::curriculum::EpisodeSummary {
        let s = self.state();
        let c = self.config();
        crate::curriculum::EpisodeSummary {
            max_height_gain: s.max_height - c.h_stand,
            final_height_dev: s.height - c.h_stand,
            final_angle: s.attitude,
        }
    }
}

/// Builds the environment for a task.
pub fn make_env(config: &EnvConfig) -> Result<Box<dyn Environment>> {
    config.validate()?;
    Ok(match config.task {
        Task::Jump => Box::new(Jumper::new(config.clone())?),
        Task::Flip => Box::new(Flipper::new(config.clone())?),
    })
}

pub(crate) fn check_command(config: &EnvConfig, command: f64) -> Result<()> {
    if command < config.command_min - 1e-12 || command > config.command_max + 1e-12 {
        return Err(Error::Domain(format!(
            "command {command} outside [{}, {}]",
            config.command_min, config.command_max
        )));
    }
    Ok(())
}
