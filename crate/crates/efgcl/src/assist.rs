//! External assist-force patterns: where, how hard, and when to push.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An assist pattern: application points (body frame, m), force vectors
/// (world frame, N), and timing windows (s). `forces` either matches
/// `points` one-to-one or holds a single vector shared by every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistPattern {
    pub points: Vec<[f64; 2]>,
    pub forces: Vec<[f64; 2]>,
    pub windows: Vec<(f64, f64)>,
}

/// One force application resolved for the current instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedForce {
    /// Body-frame application point (m).
    pub point: [f64; 2],
    /// World-frame force (N).
    pub force: [f64; 2],
}

impl AssistPattern {
    pub fn validate(&self) -> Result<()> {
        if self.forces.len() != self.points.len() && self.forces.len() != 1 {
            return Err(Error::Config(format!(
                "assist pattern needs one force per point or a single shared force \
                 ({} points, {} forces)",
                self.points.len(),
                self.forces.len()
            )));
        }
        for &(start, end) in &self.windows {
            if start >= end {
                return Err(Error::Config(format!(
                    "assist window ({start}, {end}) must have start < end"
                )));
            }
        }
        Ok(())
    }

    /// Sum of force magnitudes at full scale, for logging.
    pub fn total_magnitude(&self) -> f64 {
        self.points
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let f = self.force_for_point(i);
                (f[0] * f[0] + f[1] * f[1]).sqrt()
            })
            .sum()
    }

    fn force_for_point(&self, i: usize) -> [f64; 2] {
        if self.forces.len() == 1 {
            self.forces[0]
        } else {
            self.forces[i]
        }
    }
}

/// Mean upward force that, applied for `dt` seconds to a body of mass `m`
/// starting at rest, lifts its ballistic apex by `l` meters:
/// f = (mg/2) * (1 + sqrt(1 + 8 l / (g dt^2))).
pub fn f_jump(l: f64, m: f64, dt: f64, g: f64) -> Result<f64> {
    if m <= 0.0 {
        return Err(Error::Domain(format!("mass {m} must be positive")));
    }
    if dt <= 0.0 {
        return Err(Error::Domain(format!("push duration {dt} must be positive")));
    }
    if l < 0.0 {
        return Err(Error::Domain(format!("height gain {l} must be non-negative")));
    }
    Ok(0.5 * m * g * (1.0 + (1.0 + 8.0 * l / (g * dt * dt)).sqrt()))
}

/// Bounded monotone clock feature: t~^3 / (1 + t~^3) with t~ = t / lambda.
/// Strictly increasing in t, range [0, 1).
pub fn time_encoding(t: f64, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!("lambda {lambda} must be positive")));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("time {t} must be non-negative")));
    }
    let scaled = t / lambda;
    let cubed = scaled * scaled * scaled;
    Ok(cubed / (1.0 + cubed))
}

/// Resolves the pattern at time `t` with decay factor `alpha`: every window
/// containing `t` (half-open, start inclusive) emits its alpha-scaled force
/// at each application point. Outside all windows the result is empty.
pub fn assist_force(pattern: &AssistPattern, t: f64, alpha: f64) -> Vec<AppliedForce> {
    if alpha <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &(start, end) in &pattern.windows {
        if t >= start && t < end {
            for (i, &point) in pattern.points.iter().enumerate() {
                let f = pattern.force_for_point(i);
                out.push(AppliedForce {
                    point,
                    force: [alpha * f[0], alpha * f[1]],
                });
            }
        }
    }
    out
}
