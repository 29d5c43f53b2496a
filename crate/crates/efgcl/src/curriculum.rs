//! Success tests and the success-rate-adaptive assist-decay stage machine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Task;

/// Per-task success window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessSpec {
    pub task: Task,
    /// Tolerance on height residuals (m).
    pub height_tolerance: f64,
    /// Tolerance on the final rotation angle (rad).
    pub angle_tolerance: f64,
    /// Target rotation for the flip task (rad).
    pub target_angle: f64,
}

impl SuccessSpec {
    pub fn for_task(task: Task) -> Self {
        Self {
            task,
            height_tolerance: 0.1,
            angle_tolerance: 0.3,
            target_angle: std::f64::consts::TAU,
        }
    }
}

/// What the success test needs from a finished episode. Heights are
/// deviations from standing height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    /// Peak height gain over the episode (m above standing).
    pub max_height_gain: f64,
    /// Final height deviation from standing (m).
    pub final_height_dev: f64,
    /// Final unwrapped rotation angle (rad); 0 for the jump task.
    pub final_angle: f64,
}

/// Jump: apex gain within tolerance of the commanded height and standing at
/// the end. Flip: unwrapped rotation within tolerance of the target angle and
/// standing at the end. All comparisons strict.
pub fn check_success(summary: &EpisodeSummary, spec: &SuccessSpec, h_target: f64) -> bool {
    let standing = summary.final_height_dev.abs() < spec.height_tolerance;
    match spec.task {
        Task::Jump => {
            standing && (summary.max_height_gain - h_target).abs() < spec.height_tolerance
        }
        Task::Flip => {
            standing && (summary.final_angle - spec.target_angle).abs() < spec.angle_tolerance
        }
    }
}

/// Assist-decay schedule state. The decay factor is always
/// max(0, 1 - eps * stage); the stage only advances on evaluation windows
/// whose success rate reaches the threshold, and the schedule is complete
/// once a window measured at zero assist reaches the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub stage: u64,
    pub alpha: f64,
    pub decay_step: f64,
    pub success_threshold: f64,
    /// Success rate measured over the most recent evaluation window.
    pub last_rate: f64,
    /// (successes, episodes) in the most recent window, for logging.
    pub window: (u64, u64),
    pub complete: bool,
}

impl CurriculumState {
    pub fn new(decay_step: f64, success_threshold: f64) -> Result<Self> {
        if decay_step <= 0.0 {
            return Err(Error::Domain(format!("decay step {decay_step} must be positive")));
        }
        if !(0.0 < success_threshold && success_threshold < 1.0) {
            return Err(Error::Domain(format!(
                "success threshold {success_threshold} must lie in (0,1)"
            )));
        }
        Ok(Self {
            stage: 0,
            alpha: 1.0,
            decay_step,
            success_threshold,
            last_rate: 0.0,
            window: (0, 0),
            complete: false,
        })
    }

    fn alpha_for_stage(&self, stage: u64) -> f64 {
        (1.0 - self.decay_step * stage as f64).max(0.0)
    }

    /// Number of threshold crossings needed to drive alpha to zero.
    pub fn stages_to_zero(&self) -> u64 {
        (1.0 / self.decay_step).ceil() as u64
    }
}

/// One curriculum decision after an evaluation window.
///
/// Below threshold the machine stays on its stage and only refreshes the
/// window statistics. At or above threshold it advances: the decay factor is
/// recomputed for the incremented stage (policy and value carry over; nothing
/// resets), and if the qualifying window was measured at zero assist the
/// schedule is flagged complete. Window statistics reset on every advance, so
/// each stage must qualify under its own assist level.
pub fn curriculum_advance(mut state: CurriculumState, measured_success_rate: f64) -> CurriculumState {
    debug_assert!((0.0..=1.0).contains(&measured_success_rate));
    state.last_rate = measured_success_rate;
    if measured_success_rate >= state.success_threshold {
        if state.alpha == 0.0 {
            state.complete = true;
        }
        state.stage += 1;
        state.alpha = state.alpha_for_stage(state.stage);
        state.window = (0, 0);
    }
    state
}
