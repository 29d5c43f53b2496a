//! 2-D planar flipper: one rigid trunk with two force-actuated prismatic legs
//! on free hip pivots. In stance each leg is a strut from its ground anchor to
//! its hip transmitting axial force (friction-cone limited at the anchor); in
//! flight each leg hangs along the body-down axis as a damped extension DOF.
//! The attitude angle integrates continuously and is never wrapped.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assist::AppliedForce;
use crate::error::{Error, Result};

use super::{
    check_command, EnvConfig, EnvState, Environment, Observation, StepResult, TerminationCause,
};

/// Struts closer to horizontal than this transmit no useful support.
const MIN_STRUT_Z: f64 = 0.05;

pub struct Flipper {
    config: EnvConfig,
    state: EnvState,
    command: f64,
    stance: [bool; 2],
    anchor_x: [f64; 2],
}

impl Flipper {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        if config.joint_count() != 2 {
            return Err(Error::Config("flipper needs exactly two joints".into()));
        }
        Ok(Self {
            state: EnvState::fresh(2),
            command: f64::NAN,
            stance: [true; 2],
            anchor_x: [0.0; 2],
        config,
        })
    }

    fn hip_body_x(&self, i: usize) -> f64 {
        if i == 0 {
            self.config.hip_offset
        } else {
            -self.config.hip_offset
        }
    }

    fn substep(&mut self, forces: [f64; 2], external: &[AppliedForce], dt: f64) {
        let cfg = &self.config;
        let st = &mut self.state;
        let (sin_t, cos_t) = st.attitude.sin_cos();

        let mut fx = 0.0;
        let mut fz = -cfg.mass * cfg.gravity;
        let mut torque = 0.0;

        for af in external {
            let rx = cos_t * af.point[0] - sin_t * af.point[1];
            let rz = sin_t * af.point[0] + cos_t * af.point[1];
            fx += af.force[0];
            fz += af.force[1];
            torque += rx * af.force[1] - rz * af.force[0];
        }

        // Body-frame "down" in world coordinates.
        let down = [sin_t, -cos_t];

        for i in 0..2 {
            let f = forces[i];
            let rhx = cos_t * self.hip_body_x(i);
            let rhz = sin_t * self.hip_body_x(i);
            let hip = [st.lateral_position + rhx, st.height + rhz];
            let hip_vel = [
                st.lateral_velocity - st.angular_velocity * rhz,
                st.vertical_velocity + st.angular_velocity * rhx,
            ];

            if self.stance[i] {
                let dx = hip[0] - self.anchor_x[i];
                let dz = hip[1];
                let len = (dx * dx + dz * dz).sqrt().max(1e-9);
                let u = [dx / len, dz / len];
                st.joint_pos[i] = len;
                st.joint_vel[i] = hip_vel[0] * u[0] + hip_vel[1] * u[1];

                if f < 0.0 || len >= cfg.q_max || u[1] <= MIN_STRUT_Z {
                    self.stance[i] = false;
                    if st.joint_pos[i] > cfg.q_max {
                        st.joint_pos[i] = cfg.q_max;
                    }
                } else {
                    // Axial push at the hip; the ground reaction at the anchor
                    // is friction-cone limited in the horizontal direction.
                    let fz_leg = f * u[1];
                    let max_tangent = cfg.friction * fz_leg;
                    let fx_leg = (f * u[0]).clamp(-max_tangent, max_tangent);
                    fx += fx_leg;
                    fz += fz_leg;
                    torque += rhx * fz_leg - rhz * fx_leg;

                    // Fully compressed leg: rigid stop along the strut.
                    if len < cfg.q_min {
                        if st.joint_vel[i] < 0.0 {
                            let rn = rhx * u[1] - rhz * u[0];
                            let m_eff = 1.0 / (1.0 / cfg.mass + rn * rn / cfg.inertia);
                            let impulse = -st.joint_vel[i] * m_eff;
                            st.lateral_velocity += impulse * u[0] / cfg.mass;
                            st.vertical_velocity += impulse * u[1] / cfg.mass;
                            st.angular_velocity += impulse * rn / cfg.inertia;
                            st.joint_vel[i] = 0.0;
                        }
                        let push = cfg.q_min - len;
                        st.lateral_position += u[0] * push;
                        st.height += u[1] * push;
                        st.joint_pos[i] = cfg.q_min;
                    }
                }
            } else {
                let at_lo = st.joint_pos[i] <= cfg.q_min;
                let at_hi = st.joint_pos[i] >= cfg.q_max;
                let blocked = (at_lo && f < 0.0) || (at_hi && f > 0.0);
                if !blocked {
                    st.joint_vel[i] += (f - cfg.leg_damping * st.joint_vel[i]) / cfg.leg_mass * dt;
                    // Pushing the foot one way shoves the trunk the other way.
                    fx += -f * down[0];
                    fz += -f * down[1];
                    torque += rhx * (-f * down[1]) - rhz * (-f * down[0]);
                }
                st.joint_pos[i] += st.joint_vel[i] * dt;
                if st.joint_pos[i] < cfg.q_min {
                    st.joint_pos[i] = cfg.q_min;
                    if st.joint_vel[i] < 0.0 {
                        st.joint_vel[i] = 0.0;
                    }
                }
                if st.joint_pos[i] > cfg.q_max {
                    st.joint_pos[i] = cfg.q_max;
                    if st.joint_vel[i] > 0.0 {
                        st.joint_vel[i] = 0.0;
                    }
                }

                let q = st.joint_pos[i];
                let foot_z = hip[1] + q * down[1];
                let foot_vz = hip_vel[1] + st.joint_vel[i] * down[1]
                    + q * st.angular_velocity * down[0];
                if foot_z <= 0.0 && foot_vz <= 0.0 {
                    // Inelastic touchdown: the (massless) foot sticks where
                    // it lands.
                    self.stance[i] = true;
                    self.anchor_x[i] = hip[0] + q * down[0];
                }
            }
            st.foot_contact[i] = self.stance[i];
        }

        st.lateral_velocity += fx / cfg.mass * dt;
        st.vertical_velocity += fz / cfg.mass * dt;
        st.angular_velocity += torque / cfg.inertia * dt;
        st.lateral_position += st.lateral_velocity * dt;
        st.height += st.vertical_velocity * dt;
        st.attitude += st.angular_velocity * dt;

        // Trunk collision box against the ground.
        let (s2, c2) = st.attitude.sin_cos();
        for bx in [-cfg.trunk_half_length, cfg.trunk_half_length] {
            for by in [-cfg.trunk_half_height, cfg.trunk_half_height] {
                if st.height + s2 * bx + c2 * by <= 0.0 {
                    st.trunk_contact = true;
                    st.terminated = true;
                }
            }
        }

        st.clock += dt;
        if st.height > st.max_height {
            st.max_height = st.height;
        }
    }
}

impl Environment for Flipper {
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
        2
    }

    fn reset(&mut self, command: f64, rng: &mut ChaCha8Rng) -> Result<Observation> {
        check_command(&self.config, command)?;
        self.command = command;
        let cfg = &self.config;
        let mut q = [0.0; 2];
        for (i, slot) in q.iter_mut().enumerate() {
            let noise = if cfg.reset_noise > 0.0 {
                rng.gen_range(-cfg.reset_noise..=cfg.reset_noise)
            } else {
                0.0
            };
            *slot = (cfg.q_stand[i] + noise).clamp(cfg.q_min, cfg.q_max);
        }
        // Pose with both feet exactly on the ground.
        let attitude = ((q[0] - q[1]) / (2.0 * cfg.hip_offset)).atan();
        let (s, c) = attitude.sin_cos();
        let height = c * (q[0] + q[1]) / 2.0;

        let mut state = EnvState::fresh(2);
        state.attitude = attitude;
        state.height = height;
        state.max_height = height;
        state.joint_pos = q.to_vec();
        state.foot_contact = vec![true, true];
        self.anchor_x = [c * cfg.hip_offset + s * q[0], -c * cfg.hip_offset + s * q[1]];
        self.stance = [true, true];
        self.state = state;
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64], external: &[AppliedForce]) -> Result<StepResult> {
        if self.command.is_nan() {
            return Err(Error::Refused("step before reset".into()));
        }
        if self.state.terminated {
            return Err(Error::Refused("episode already terminated".into()));
        }
        if action.len() != 2 {
            return Err(Error::Dimension {
                context: "flipper action",
                expected: 2,
                got: action.len(),
            });
        }
        let forces = [
            action[0].clamp(self.config.force_min, self.config.force_max),
            action[1].clamp(self.config.force_min, self.config.force_max),
        ];

        self.state.prev_joint_vel.copy_from_slice(&self.state.joint_vel);
        let dt = self.config.dt_sim;
        for _ in 0..self.config.substeps() {
            self.substep(forces, external, dt);
            if self.state.terminated {
                break;
            }
        }

        if !self.state.all_finite() {
            self.state.terminated = true;
            return Err(Error::SimulationFault(format!(
                "non-finite flipper state at t = {}",
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

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn flipper() -> Flipper {
        Flipper::new(EnvConfig::flip()).unwrap()
    }

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn noiseless_reset_is_exactly_nominal() {
        let mut cfg = EnvConfig::flip();
        cfg.reset_noise = 0.0;
        let mut env = Flipper::new(cfg.clone()).unwrap();
        env.reset(TAU, &mut rng(0)).unwrap();
        let s = env.state();
        assert_eq!(s.joint_pos, cfg.q_stand);
        assert_eq!(s.height, cfg.h_stand);
        assert_eq!(s.attitude, 0.0);
    }

    #[test]
    fn resets_put_both_feet_on_the_ground() {
        let mut env = flipper();
        let mut r = rng(42);
        for _ in 0..1000 {
            env.reset(TAU, &mut r).unwrap();
            let s = env.state();
            let (sin_t, cos_t) = s.attitude.sin_cos();
            for i in 0..2 {
                let hx = if i == 0 { env.config().hip_offset } else { -env.config().hip_offset };
                let hip_z = s.height + sin_t * hx;
                let foot_z = hip_z - cos_t * s.joint_pos[i];
                assert!(foot_z.abs() < 1e-9, "foot {i} height {foot_z}");
                assert!(s.foot_contact[i]);
            }
        }
    }

    fn send_airborne(env: &mut Flipper, height: f64, omega: f64) {
        env.stance = [false, false];
        env.state.height = height;
        env.state.max_height = height;
        env.state.vertical_velocity = 0.0;
        env.state.angular_velocity = omega;
        env.state.joint_pos = vec![0.25, 0.25];
        env.state.joint_vel = vec![0.0, 0.0];
        env.state.foot_contact = vec![false, false];
    }

    #[test]
    fn free_fall_velocity_drop_with_constant_spin() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(1)).unwrap();
        send_airborne(&mut env, 5.0, 3.0);
        let v0 = env.state().vertical_velocity;
        env.step(&[0.0, 0.0], &[]).unwrap();
        let cfg = env.config().clone();
        let dv = env.state().vertical_velocity - v0;
        assert!((dv + cfg.gravity * cfg.dt_ctrl).abs() < 1e-12);
        assert!((env.state().angular_velocity - 3.0).abs() < 1e-12, "torque-free spin");
    }

    #[test]
    fn energy_audit_in_spinning_flight() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(2)).unwrap();
        send_airborne(&mut env, 40.0, 6.0);
        let cfg = env.config().clone();
        let energy = |s: &EnvState| {
            0.5 * cfg.mass
                * (s.vertical_velocity * s.vertical_velocity
                    + s.lateral_velocity * s.lateral_velocity)
                + 0.5 * cfg.inertia * s.angular_velocity * s.angular_velocity
                + cfg.mass * cfg.gravity * s.height
        };
        let e0 = energy(env.state());
        for _ in 0..50 {
            env.step(&[0.0, 0.0], &[]).unwrap();
        }
        let drift = (energy(env.state()) - e0).abs() / e0;
        assert!(drift < 0.005, "energy drift {drift}");
    }

    /// The attitude integrates continuously: spinning through a full turn
    /// never jumps, and stays below pi per control step.
    #[test]
    fn attitude_is_unwrapped() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(3)).unwrap();
        send_airborne(&mut env, 50.0, 7.0);
        let mut prev = env.state().attitude;
        for _ in 0..60 {
            env.step(&[0.0, 0.0], &[]).unwrap();
            let cur = env.state().attitude;
            assert!((cur - prev).abs() < std::f64::consts::PI);
            assert!(cur > prev);
            prev = cur;
        }
        assert!(prev > TAU, "should have passed a full turn, got {prev}");
    }

    /// Upward assist ahead of the center of mass spins the trunk the
    /// flip direction (positive) while feet are anchored.
    #[test]
    fn forward_assist_produces_positive_rotation() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(4)).unwrap();
        let push = AppliedForce {
            point: [0.1, 0.0],
            force: [0.0, 700.0],
        };
        for _ in 0..5 {
            env.step(&[0.0, 0.0], &[push]).unwrap();
            if env.state().terminated {
                break;
            }
        }
        assert!(env.state().angular_velocity > 0.5, "omega = {}", env.state().angular_velocity);
        assert!(env.state().vertical_velocity > 0.0, "should be lifting");
    }

    #[test]
    fn trunk_contact_terminates_with_body_cause() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(5)).unwrap();
        // Drop it upside down from low height.
        send_airborne(&mut env, 0.4, 0.0);
        env.state.attitude = std::f64::consts::PI;
        env.state.max_height = 0.4;
        let mut cause = TerminationCause::None;
        for _ in 0..40 {
            let res = env.step(&[0.0, 0.0], &[]).unwrap();
            cause = res.cause;
            if res.terminated {
                break;
            }
        }
        assert_eq!(cause, TerminationCause::BodyContact);
        assert!(env.state().trunk_contact);
    }

    #[test]
    fn termination_cause_matches_trunk_flag() {
        // Quiet standing runs to the time limit without body contact.
        let mut env = flipper();
        env.reset(TAU, &mut rng(6)).unwrap();
        let hold = env.config().mass * env.config().gravity / 2.0;
        let mut cause = TerminationCause::None;
        for _ in 0..150 {
            let res = env.step(&[hold, hold], &[]).unwrap();
            cause = res.cause;
            if res.terminated {
                break;
            }
        }
        assert_eq!(cause, TerminationCause::TimeLimit);
        assert!(!env.state().trunk_contact);
    }

    /// Standing with zero action collapses to the crouch stops but never
    /// falls through the ground or terminates.
    #[test]
    fn passive_collapse_is_supported_by_the_stops() {
        let mut env = flipper();
        env.reset(TAU, &mut rng(7)).unwrap();
        for _ in 0..50 {
            let res = env.step(&[0.0, 0.0], &[]).unwrap();
            assert!(!res.terminated || res.cause == TerminationCause::TimeLimit);
        }
        let s = env.state();
        assert!(s.height > env.config().q_min * 0.9, "height {}", s.height);
        assert!(s.height < env.config().h_stand + 0.05);
    }

    /// Pushing both legs hard launches the trunk.
    #[test]
    fn symmetric_push_launches_without_spin() {
        let mut env = flipper();
        let mut cfg = EnvConfig::flip();
        cfg.reset_noise = 0.0;
        env = Flipper::new(cfg).unwrap();
        env.reset(TAU, &mut rng(8)).unwrap();
        let mut left_ground = false;
        for _ in 0..30 {
            let res = env.step(&[500.0, 500.0], &[]).unwrap();
            if !res.state.foot_contact[0] && !res.state.foot_contact[1] {
                left_ground = true;
                break;
            }
        }
        assert!(left_ground);
        assert!(env.state().vertical_velocity > 1.0);
        assert!(env.state().angular_velocity.abs() < 0.2, "symmetric push should not spin much");
    }
}
