//! Kinematic bicycle plant closing the control loop in place of real
//! vehicle hardware.

use serde::{Deserialize, Serialize};

use super::WorkloadError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x_m: f64,
    pub y_m: f64,
    /// Normalized to (-pi, pi].
    pub heading_rad: f64,
    /// Never negative; the plant saturates braking at standstill.
    pub speed_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub steering_rad: f64,
    pub acceleration_mps2: f64,
}

impl ControlInput {
    pub const ZERO: Self = Self {
        steering_rad: 0.0,
        acceleration_mps2: 0.0,
    };
}

/// Normalize an angle to (-pi, pi].
pub fn normalize_heading(rad: f64) -> f64 {
    let mut a = rad % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Shortest signed angular difference `a - b`, normalized.
pub fn heading_error(a: f64, b: f64) -> f64 {
    normalize_heading(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub wheelbase_m: f64,
}

impl PlantModel {
    /// One kinematic bicycle update:
    ///
    /// ```text
    /// x' = x + v cos(theta) dt        y' = y + v sin(theta) dt
    /// theta' = theta + (v / L) tan(delta) dt     (renormalized)
    /// v' = max(0, v + a dt)
    /// ```
    pub fn step(
        &self,
        state: &VehicleState,
        input: &ControlInput,
        dt_s: f64,
    ) -> Result<VehicleState, WorkloadError> {
        if !(dt_s > 0.0) {
            return Err(WorkloadError::NonFinite { what: "dt" });
        }
        let finite = state.x_m.is_finite()
            && state.y_m.is_finite()
            && state.heading_rad.is_finite()
            && state.speed_mps.is_finite();
        if !finite {
            return Err(WorkloadError::NonFinite { what: "vehicle state" });
        }
        if !input.steering_rad.is_finite() || !input.acceleration_mps2.is_finite() {
            return Err(WorkloadError::NonFinite { what: "control input" });
        }
        Ok(self.step_unchecked(state, input, dt_s))
    }

    /// The same update without the finiteness guards, for the solver's
    /// rollout loop where inputs were validated once up front.
    pub(super) fn step_unchecked(
        &self,
        state: &VehicleState,
        input: &ControlInput,
        dt_s: f64,
    ) -> VehicleState {
        let v = state.speed_mps;
        VehicleState {
            x_m: state.x_m + v * state.heading_rad.cos() * dt_s,
            y_m: state.y_m + v * state.heading_rad.sin() * dt_s,
            heading_rad: normalize_heading(
                state.heading_rad + v / self.wheelbase_m * input.steering_rad.tan() * dt_s,
            ),
            speed_mps: (v + input.acceleration_mps2 * dt_s).max(0.0),
        }
    }
}
