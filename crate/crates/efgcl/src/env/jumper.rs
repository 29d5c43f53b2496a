//! 1-D vertical jumper: a point-mass trunk on one force-actuated prismatic
//! leg. In stance the foot is pinned to the ground and the leg force acts
//! directly on the trunk; in flight the leg extension is a damped DOF with a
//! small effective inertia.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assist::AppliedForce;
use crate::error::{Error, Result};

use super::{
    check_command, EnvConfig, EnvState, Environment, Observation, StepResult, TerminationCause,
};

pub struct Jumper {
    config: EnvConfig,
    state: EnvState,
    command: f64,
    stance: bool,
}

impl Jumper {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        if config.joint_count() != 1 {
            return Err(Error::Config("jumper needs exactly one joint".into()));
        }
        Ok(Self {
            state: EnvState::fresh(1),
            command: f64::NAN,
            stance: true,
            config,
        })
    }

    fn substep(&mut self, f: f64, fz_ext: f64, dt: f64) {
        let c = &self.config;
        let s = &mut self.state;
        if self.stance && f < 0.0 {
            // Retraction breaks contact; the leg starts shortening under the
            // ballistic trunk.
            self.stance = false;
            s.joint_vel[0] = s.vertical_velocity;
        }
        if self.stance {
            let accel = (f - c.mass * c.gravity + fz_ext) / c.mass;
            s.vertical_velocity += accel * dt;
            s.height += s.vertical_velocity * dt;
            // Crouch hard stop: fully compressed leg props the trunk.
            if s.height < c.q_min {
                s.height = c.q_min;
                if s.vertical_velocity < 0.0 {
                    s.vertical_velocity = 0.0;
                }
            }
            // Foot pinned at the ground: extension tracks trunk height.
            s.joint_pos[0] = s.height;
            s.joint_vel[0] = s.vertical_velocity;
            if s.joint_pos[0] >= c.q_max {
                // Full extension: liftoff.
                s.joint_pos[0] = c.q_max;
                s.joint_vel[0] = 0.0;
                self.stance = false;
            }
        } else {
            s.vertical_velocity += (-c.gravity + fz_ext / c.mass) * dt;
            s.height += s.vertical_velocity * dt;
            let at_lo = s.joint_pos[0] <= c.q_min;
            let at_hi = s.joint_pos[0] >= c.q_max;
            let blocked = (at_lo && f < 0.0) || (at_hi && f > 0.0);
            if !blocked {
                s.joint_vel[0] += (f - c.leg_damping * s.joint_vel[0]) / c.leg_mass * dt;
            }
            s.joint_pos[0] += s.joint_vel[0] * dt;
            if s.joint_pos[0] < c.q_min {
                s.joint_pos[0] = c.q_min;
                if s.joint_vel[0] < 0.0 {
                    s.joint_vel[0] = 0.0;
                }
            }
            if s.joint_pos[0] > c.q_max {
                s.joint_pos[0] = c.q_max;
                if s.joint_vel[0] > 0.0 {
                    s.joint_vel[0] = 0.0;
                }
            }
            let foot_height = s.height - s.joint_pos[0];
            let foot_velocity = s.vertical_velocity - s.joint_vel[0];
            if foot_height <= 0.0 && foot_velocity <= 0.0 {
                // Inelastic touchdown: the foot's velocity is absorbed.
                self.stance = true;
                if s.height < c.q_min {
                    s.height = c.q_min;
                    if s.vertical_velocity < 0.0 {
                        s.vertical_velocity = 0.0;
                    }
                }
                s.joint_pos[0] = s.height;
                s.joint_vel[0] = s.vertical_velocity;
            }
            if s.height <= c.trunk_clearance {
                s.trunk_contact = true;
                s.terminated = true;
            }
        }
        s.foot_contact[0] = self.stance;
        s.clock += dt;
        if s.height > s.max_height {
            s.max_height = s.height;
        }
    }
}

impl Environment for Jumper {
    fn config(&self) -> &EnvConfig {
        &self.config
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn command(&self) -> f64 {
        self.command
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, command: f64, rng: &mut ChaCha8Rng) -> Result<Observation> {
        check_command(&self.config, command)?;
        self.command = command;
        let noise = if self.config.reset_noise > 0.0 {
            rng.gen_range(-self.config.reset_noise..=self.config.reset_noise)
        } else {
            0.0
        };
        let q = (self.config.q_stand[0] + noise).clamp(self.config.q_min, self.config.q_max);
        let mut state = EnvState::fresh(1);
        state.joint_pos[0] = q;
        state.height = q; // foot exactly on the ground
        state.max_height = q;
        state.foot_contact[0] = true;
        self.state = state;
        self.stance = true;
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64], external: &[AppliedForce]) -> Result<StepResult> {
        if self.command.is_nan() {
            return Err(Error::Refused("step before reset".into()));
        }
        if self.state.terminated {
            return Err(Error::Refused("episode already terminated".into()));
        }
        if action.len() != 1 {
            return Err(Error::Dimension {
                context: "jumper action",
                expected: 1,
                got: action.len(),
            });
        }
        let f = action[0].clamp(self.config.force_min, self.config.force_max);
        // 1-D reduction: only the vertical force component matters and the
        // application point drops out.
        let fz_ext: f64 = external.iter().map(|a| a.force[1]).sum();

        self.state.prev_joint_vel.copy_from_slice(&self.state.joint_vel);
        let dt = self.config.dt_sim;
        for _ in 0..self.config.substeps() {
            self.substep(f, fz_ext, dt);
            if self.state.terminated {
                break;
            }
        }

        if !self.state.all_finite() {
            self.state.terminated = true;
            return Err(Error::SimulationFault(format!(
                "non-finite jumper state at t = {}",
                self.state.clock
            )));
        }

        let mut cause = TerminationCause::None;
        if self.state.trunk_contact {
            cause = TerminationCause::BodyContact;
        } else if self.state.clock >= self.config.episode_length - 1e-9 {
            self.state.terminated = true;
            cause = TerminationCause::TimeLimit;
        }

        Ok(StepResult {
            state: self.state.clone(),
            observation: self.observe(),
            terminated: self.state.terminated,
            cause,
        })
    }
}
