//! Fixed-cost tracking controller: projected gradient descent over
//! kinematic bicycle rollouts.
//!
//! Every call performs the same number of arithmetic steps regardless of
//! input and touches only buffers allocated at construction, mirroring
//! the load profile of a compiled real-time control module: a pure
//! numeric kernel with no I/O and no dynamic memory on the hot path.

use serde::{Deserialize, Serialize};

use super::plant::{heading_error, ControlInput, PlantModel, VehicleState};
use super::WorkloadError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    /// Prediction horizon in steps.
    pub horizon: usize,
    /// Rollout step, matching the intended loop period.
    pub dt_s: f64,
    /// Projected-gradient iterations per call.
    pub descent_iterations: usize,
    pub wheelbase_m: f64,
    pub steer_limit_rad: f64,
    pub accel_min_mps2: f64,
    pub accel_max_mps2: f64,
    pub position_weight: f64,
    pub heading_weight: f64,
    pub speed_weight: f64,
    pub steer_effort_weight: f64,
    pub accel_effort_weight: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt_s: 0.018,
            descent_iterations: 30,
            wheelbase_m: 2.7,
            steer_limit_rad: 0.5,
            accel_min_mps2: -4.0,
            accel_max_mps2: 3.0,
            position_weight: 1.0,
            heading_weight: 2.0,
            speed_weight: 0.5,
            steer_effort_weight: 0.02,
            accel_effort_weight: 0.02,
        }
    }
}

// Line-search step lengths tried every descent iteration (normalized
// gradient direction). A fixed candidate set keeps the arithmetic count
// input-independent.
const STEP_LENGTHS: [f64; 7] = [1.6, 0.4, 0.1, 0.025, 0.00625, 0.0015625, 0.000390625];

// Multi-start probe grid: descent begins from the cheapest of these
// constant-control sequences (fractions of the respective bound). Far
// initial states land near a saturated control, where a cold zero start
// would spend most of its iteration budget just traveling.
const PROBE_STEER_FRACTIONS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const PROBE_ACCEL_FRACTIONS: [f64; 3] = [-1.0, 0.0, 1.0];

/// Receding-horizon controller with preallocated workspaces.
pub struct MpcController {
    config: MpcConfig,
    plant: PlantModel,
    controls: Vec<ControlInput>,
    trial: Vec<ControlInput>,
    best: Vec<ControlInput>,
    states: Vec<VehicleState>,
    gradient: Vec<[f64; 2]>,
    prev_gradient: Vec<[f64; 2]>,
    direction: Vec<[f64; 2]>,
    plan_cost: f64,
}

impl MpcController {
    pub fn new(config: MpcConfig) -> Result<Self, WorkloadError> {
        if config.horizon == 0 || !(config.dt_s > 0.0) || config.descent_iterations == 0 {
            return Err(WorkloadError::InvalidConfig(
                "horizon, dt and descent iterations must be positive".into(),
            ));
        }
        if !(config.steer_limit_rad > 0.0) || config.accel_min_mps2 >= config.accel_max_mps2 {
            return Err(WorkloadError::InvalidConfig("control bounds are empty".into()));
        }
        let n = config.horizon;
        Ok(Self {
            config,
            plant: PlantModel {
                wheelbase_m: config.wheelbase_m,
            },
            controls: vec![ControlInput::ZERO; n],
            trial: vec![ControlInput::ZERO; n],
            best: vec![ControlInput::ZERO; n],
            states: vec![
                VehicleState {
                    x_m: 0.0,
                    y_m: 0.0,
                    heading_rad: 0.0,
                    speed_mps: 0.0
                };
                n + 1
            ],
            gradient: vec![[0.0; 2]; n],
            prev_gradient: vec![[0.0; 2]; n],
            direction: vec![[0.0; 2]; n],
            plan_cost: 0.0,
        })
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    /// The horizon-length input sequence found by the last [`step`] call.
    ///
    /// [`step`]: Self::step
    pub fn plan(&self) -> &[ControlInput] {
        &self.controls
    }

    /// Cost of the last plan.
    pub fn plan_cost(&self) -> f64 {
        self.plan_cost
    }

    /// Compute the first control of the optimized horizon sequence for
    /// tracking `reference` from `state`.
    ///
    /// `reference[k]` is the target for the predicted state after `k + 1`
    /// steps; at least `horizon` reference states are required. Descent
    /// starts from the zero sequence, so a state exactly on a
    /// constant-speed reference is already stationary and returns zero
    /// control.
    pub fn step(
        &mut self,
        state: &VehicleState,
        reference: &[VehicleState],
    ) -> Result<ControlInput, WorkloadError> {
        let n = self.config.horizon;
        if reference.len() < n {
            return Err(WorkloadError::ReferenceTooShort {
                needed: n,
                got: reference.len(),
            });
        }
        let finite = |s: &VehicleState| {
            s.x_m.is_finite() && s.y_m.is_finite() && s.heading_rad.is_finite() && s.speed_mps.is_finite()
        };
        if !finite(state) || !reference[..n].iter().all(finite) {
            return Err(WorkloadError::NonFinite { what: "mpc input" });
        }
        let reference = &reference[..n];

        let mut cost = f64::INFINITY;
        for steer_frac in PROBE_STEER_FRACTIONS {
            for accel_frac in PROBE_ACCEL_FRACTIONS {
                let probe = ControlInput {
                    steering_rad: steer_frac * self.config.steer_limit_rad,
                    acceleration_mps2: if accel_frac < 0.0 {
                        -accel_frac * self.config.accel_min_mps2
                    } else {
                        accel_frac * self.config.accel_max_mps2
                    },
                };
                for u in self.trial.iter_mut() {
                    *u = probe;
                }
                let probe_cost = rollout_cost(
                    &self.plant,
                    &self.config,
                    state,
                    &self.trial,
                    reference,
                    &mut self.states,
                );
                if probe_cost < cost {
                    cost = probe_cost;
                    self.controls.copy_from_slice(&self.trial);
                }
            }
        }
        // regenerate the forward pass for the chosen start
        rollout_cost(
            &self.plant,
            &self.config,
            state,
            &self.controls,
            reference,
            &mut self.states,
        );

        // projected gradient descent with Polak-Ribiere momentum and a
        // fixed-candidate line search; momentum resets after any
        // iteration that failed to improve
        let mut momentum_valid = false;
        for _ in 0..self.config.descent_iterations {
            backward_gradient(
                &self.config,
                &self.states,
                &self.controls,
                reference,
                &mut self.gradient,
            );
            // reduced gradient: at an active bound, a component pushing
            // further out contributes nothing but noise to the direction
            for k in 0..n {
                let u = &self.controls[k];
                if (u.steering_rad >= self.config.steer_limit_rad && self.gradient[k][0] < 0.0)
                    || (u.steering_rad <= -self.config.steer_limit_rad
                        && self.gradient[k][0] > 0.0)
                {
                    self.gradient[k][0] = 0.0;
                }
                if (u.acceleration_mps2 >= self.config.accel_max_mps2 && self.gradient[k][1] < 0.0)
                    || (u.acceleration_mps2 <= self.config.accel_min_mps2
                        && self.gradient[k][1] > 0.0)
                {
                    self.gradient[k][1] = 0.0;
                }
            }
            let beta = if momentum_valid {
                let mut num = 0.0;
                let mut den = 0.0;
                for k in 0..n {
                    for c in 0..2 {
                        num += self.gradient[k][c]
                            * (self.gradient[k][c] - self.prev_gradient[k][c]);
                        den += self.prev_gradient[k][c] * self.prev_gradient[k][c];
                    }
                }
                (num / den.max(1e-300)).max(0.0)
            } else {
                0.0
            };
            let mut norm_sq = 0.0;
            for k in 0..n {
                for c in 0..2 {
                    self.direction[k][c] = -self.gradient[k][c] + beta * self.direction[k][c];
                    norm_sq += self.direction[k][c] * self.direction[k][c];
                }
            }
            let norm = norm_sq.sqrt();
            let scale = if norm > 1e-12 { 1.0 / norm } else { 0.0 };

            self.best.copy_from_slice(&self.controls);
            let mut best_cost = cost;
            for step_len in STEP_LENGTHS {
                for k in 0..n {
                    self.trial[k] = ControlInput {
                        steering_rad: (self.controls[k].steering_rad
                            + step_len * scale * self.direction[k][0])
                            .clamp(-self.config.steer_limit_rad, self.config.steer_limit_rad),
                        acceleration_mps2: (self.controls[k].acceleration_mps2
                            + step_len * scale * self.direction[k][1])
                            .clamp(self.config.accel_min_mps2, self.config.accel_max_mps2),
                    };
                }
                let trial_cost = rollout_cost(
                    &self.plant,
                    &self.config,
                    state,
                    &self.trial,
                    reference,
                    &mut self.states,
                );
                if trial_cost < best_cost {
                    best_cost = trial_cost;
                    self.best.copy_from_slice(&self.trial);
                }
            }
            momentum_valid = best_cost < cost;
            self.prev_gradient.copy_from_slice(&self.gradient);
            self.controls.copy_from_slice(&self.best);
            cost = best_cost;
            // leave `states` holding the rollout of the accepted sequence
            rollout_cost(
                &self.plant,
                &self.config,
                state,
                &self.controls,
                reference,
                &mut self.states,
            );
        }

        self.plan_cost = cost;
        Ok(self.controls[0])
    }
}

/// Quadratic tracking-plus-effort cost of a control sequence, writing the
/// predicted states into `states` (`states[0]` is the initial state).
fn rollout_cost(
    plant: &PlantModel,
    config: &MpcConfig,
    initial: &VehicleState,
    controls: &[ControlInput],
    reference: &[VehicleState],
    states: &mut [VehicleState],
) -> f64 {
    states[0] = *initial;
    let mut cost = 0.0;
    for k in 0..controls.len() {
        states[k + 1] = plant.step_unchecked(&states[k], &controls[k], config.dt_s);
        let s = &states[k + 1];
        let r = &reference[k];
        let ex = s.x_m - r.x_m;
        let ey = s.y_m - r.y_m;
        let eh = heading_error(s.heading_rad, r.heading_rad);
        let ev = s.speed_mps - r.speed_mps;
        cost += config.position_weight * (ex * ex + ey * ey)
            + config.heading_weight * eh * eh
            + config.speed_weight * ev * ev
            + config.steer_effort_weight * controls[k].steering_rad * controls[k].steering_rad
            + config.accel_effort_weight
                * controls[k].acceleration_mps2
                * controls[k].acceleration_mps2;
    }
    cost
}

/// Reverse accumulation of the cost gradient through the rollout.
/// `states` must hold the forward pass of `controls`.
fn backward_gradient(
    config: &MpcConfig,
    states: &[VehicleState],
    controls: &[ControlInput],
    reference: &[VehicleState],
    gradient: &mut [[f64; 2]],
) {
    let n = controls.len();
    let dt = config.dt_s;
    let wheelbase = config.wheelbase_m;

    let stage_grad = |s: &VehicleState, r: &VehicleState| -> [f64; 4] {
        [
            2.0 * config.position_weight * (s.x_m - r.x_m),
            2.0 * config.position_weight * (s.y_m - r.y_m),
            2.0 * config.heading_weight * heading_error(s.heading_rad, r.heading_rad),
            2.0 * config.speed_weight * (s.speed_mps - r.speed_mps),
        ]
    };

    // adjoint seeded at the final predicted state
    let mut adjoint = stage_grad(&states[n], &reference[n - 1]);

    for k in (0..n).rev() {
        let s = &states[k];
        let u = &controls[k];
        let (sin_h, cos_h) = s.heading_rad.sin_cos();
        let tan_d = u.steering_rad.tan();
        let sec2_d = 1.0 + tan_d * tan_d;
        // speed saturation gate: d(max(0, v + a dt)) is 0 past standstill
        let sat = if s.speed_mps + u.acceleration_mps2 * dt > 0.0 {
            1.0
        } else {
            0.0
        };

        gradient[k][0] = s.speed_mps * dt / wheelbase * sec2_d * adjoint[2]
            + 2.0 * config.steer_effort_weight * u.steering_rad;
        gradient[k][1] =
            sat * dt * adjoint[3] + 2.0 * config.accel_effort_weight * u.acceleration_mps2;

        if k > 0 {
            let stage = stage_grad(s, &reference[k - 1]);
            adjoint = [
                adjoint[0] + stage[0],
                adjoint[1] + stage[1],
                -s.speed_mps * sin_h * dt * adjoint[0]
                    + s.speed_mps * cos_h * dt * adjoint[1]
                    + adjoint[2]
                    + stage[2],
                cos_h * dt * adjoint[0]
                    + sin_h * dt * adjoint[1]
                    + tan_d * dt / wheelbase * adjoint[2]
                    + sat * adjoint[3]
                    + stage[3],
            ];
        }
    }
}

/// Score an arbitrary control sequence against a reference (test and
/// comparison helper; allocates its own scratch).
pub fn sequence_cost(
    config: &MpcConfig,
    initial: &VehicleState,
    controls: &[ControlInput],
    reference: &[VehicleState],
) -> f64 {
    let plant = PlantModel {
        wheelbase_m: config.wheelbase_m,
    };
    let mut states = vec![*initial; controls.len() + 1];
    rollout_cost(&plant, config, initial, controls, reference, &mut states)
}

/// Constant-speed straight-line reference: the zero-control trajectory of
/// `from`, one state per step.
pub fn straight_reference(from: &VehicleState, count: usize, dt_s: f64) -> Vec<VehicleState> {
    let plant = PlantModel { wheelbase_m: 1.0 };
    let mut out = Vec::with_capacity(count);
    let mut s = *from;
    for _ in 0..count {
        s = plant.step_unchecked(&s, &ControlInput::ZERO, dt_s);
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cruising(speed: f64) -> VehicleState {
        VehicleState {
            x_m: 0.0,
            y_m: 0.0,
            heading_rad: 0.0,
            speed_mps: speed,
        }
    }

    fn random_state(rng: &mut impl Rng) -> VehicleState {
        VehicleState {
            x_m: rng.gen_range(-2.0..2.0),
            y_m: rng.gen_range(-2.0..2.0),
            heading_rad: rng.gen_range(-0.4..0.4),
            speed_mps: rng.gen_range(2.0..15.0),
        }
    }

    #[test]
    fn on_reference_equilibrium_returns_zero_control() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let state = cruising(10.0);
        let reference = straight_reference(&state, config.horizon, config.dt_s);
        let u = mpc.step(&state, &reference).unwrap();
        assert!(u.steering_rad.abs() < 1e-6, "steering {}", u.steering_rad);
        assert!(u.acceleration_mps2.abs() < 1e-6, "accel {}", u.acceleration_mps2);
    }

    #[test]
    fn lateral_offset_steers_toward_the_path() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        // reference runs along y = 0; vehicle sits 1 m to the left (+y)
        let on_path = cruising(10.0);
        let reference = straight_reference(&on_path, config.horizon, config.dt_s);
        let offset = VehicleState {
            y_m: 1.0,
            ..on_path
        };
        let u = mpc.step(&offset, &reference).unwrap();
        assert!(u.steering_rad < 0.0, "expected right steer, got {}", u.steering_rad);

        let zero_cost = sequence_cost(&config, &offset, &vec![ControlInput::ZERO; 20], &reference);
        assert!(
            mpc.plan_cost() < zero_cost,
            "plan {} not below zero-control {zero_cost}",
            mpc.plan_cost()
        );
    }

    // Independent textbook reimplementation of the rollout and cost used
    // to score candidates in the grid-search comparison.
    fn oracle_cost(
        config: &MpcConfig,
        initial: &VehicleState,
        controls: &[ControlInput],
        reference: &[VehicleState],
    ) -> f64 {
        let mut x = initial.x_m;
        let mut y = initial.y_m;
        let mut h = initial.heading_rad;
        let mut v = initial.speed_mps;
        let mut cost = 0.0;
        for (u, r) in controls.iter().zip(reference) {
            x += v * h.cos() * config.dt_s;
            y += v * h.sin() * config.dt_s;
            h += v / config.wheelbase_m * u.steering_rad.tan() * config.dt_s;
            h = crate::control_workload::normalize_heading(h);
            v = (v + u.acceleration_mps2 * config.dt_s).max(0.0);
            let eh = crate::control_workload::normalize_heading(h - r.heading_rad);
            cost += config.position_weight * ((x - r.x_m).powi(2) + (y - r.y_m).powi(2))
                + config.heading_weight * eh * eh
                + config.speed_weight * (v - r.speed_mps).powi(2)
                + config.steer_effort_weight * u.steering_rad.powi(2)
                + config.accel_effort_weight * u.acceleration_mps2.powi(2);
        }
        cost
    }

    fn best_grid_cost(
        config: &MpcConfig,
        initial: &VehicleState,
        reference: &[VehicleState],
    ) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..21 {
            for j in 0..21 {
                let steer = -config.steer_limit_rad
                    + 2.0 * config.steer_limit_rad * i as f64 / 20.0;
                let accel = config.accel_min_mps2
                    + (config.accel_max_mps2 - config.accel_min_mps2) * j as f64 / 20.0;
                let constant = vec![
                    ControlInput {
                        steering_rad: steer,
                        acceleration_mps2: accel,
                    };
                    config.horizon
                ];
                best = best.min(oracle_cost(config, initial, &constant, reference));
            }
        }
        best
    }

    #[test]
    fn descent_beats_the_constant_control_grid() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x6000);
        for trial in 0..100 {
            let state = random_state(&mut rng);
            let reference = straight_reference(&cruising(10.0), config.horizon, config.dt_s);
            mpc.step(&state, &reference).unwrap();
            let plan_cost = oracle_cost(&config, &state, mpc.plan(), &reference);
            let grid_cost = best_grid_cost(&config, &state, &reference);
            assert!(
                plan_cost <= grid_cost + 1e-6,
                "trial {trial}: plan {plan_cost} vs grid {grid_cost}"
            );
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let config = MpcConfig {
            horizon: 8,
            ..MpcConfig::default()
        };
        let plant = PlantModel {
            wheelbase_m: config.wheelbase_m,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0xFD);
        for _ in 0..20 {
            let state = random_state(&mut rng);
            let reference = straight_reference(&cruising(9.0), config.horizon, config.dt_s);
            let controls: Vec<ControlInput> = (0..config.horizon)
                .map(|_| ControlInput {
                    steering_rad: rng.gen_range(-0.3..0.3),
                    acceleration_mps2: rng.gen_range(-2.0..2.0),
                })
                .collect();

            let mut states = vec![state; config.horizon + 1];
            rollout_cost(&plant, &config, &state, &controls, &reference, &mut states);
            let mut grad = vec![[0.0f64; 2]; config.horizon];
            backward_gradient(&config, &states, &controls, &reference, &mut grad);

            let eps = 1e-6;
            for k in 0..config.horizon {
                for comp in 0..2 {
                    let mut plus = controls.clone();
                    let mut minus = controls.clone();
                    match comp {
                        0 => {
                            plus[k].steering_rad += eps;
                            minus[k].steering_rad -= eps;
                        }
                        _ => {
                            plus[k].acceleration_mps2 += eps;
                            minus[k].acceleration_mps2 -= eps;
                        }
                    }
                    let fd = (sequence_cost(&config, &state, &plus, &reference)
                        - sequence_cost(&config, &state, &minus, &reference))
                        / (2.0 * eps);
                    let analytic = grad[k][comp];
                    assert!(
                        (fd - analytic).abs() <= 1e-4 * (1.0 + fd.abs().max(analytic.abs())),
                        "stage {k} comp {comp}: fd {fd} vs analytic {analytic}"
                    );
                }
            }
        }
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let state = VehicleState {
            x_m: 0.3,
            y_m: -0.8,
            heading_rad: 0.1,
            speed_mps: 11.0,
        };
        let reference = straight_reference(&cruising(10.0), config.horizon, config.dt_s);
        let a = mpc.step(&state, &reference).unwrap();
        let plan_a: Vec<_> = mpc
            .plan()
            .iter()
            .map(|u| (u.steering_rad.to_bits(), u.acceleration_mps2.to_bits()))
            .collect();
        let b = mpc.step(&state, &reference).unwrap();
        let plan_b: Vec<_> = mpc
            .plan()
            .iter()
            .map(|u| (u.steering_rad.to_bits(), u.acceleration_mps2.to_bits()))
            .collect();
        assert_eq!(a.steering_rad.to_bits(), b.steering_rad.to_bits());
        assert_eq!(a.acceleration_mps2.to_bits(), b.acceleration_mps2.to_bits());
        assert_eq!(plan_a, plan_b);
    }

    #[test]
    fn controls_respect_the_bounds() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0);
        for _ in 0..20 {
            let state = VehicleState {
                x_m: rng.gen_range(-20.0..20.0),
                y_m: rng.gen_range(-20.0..20.0),
                heading_rad: rng.gen_range(-3.0..3.0),
                speed_mps: rng.gen_range(0.0..30.0),
            };
            let reference = straight_reference(&cruising(10.0), config.horizon, config.dt_s);
            mpc.step(&state, &reference).unwrap();
            for u in mpc.plan() {
                assert!(u.steering_rad.abs() <= config.steer_limit_rad + 1e-12);
                assert!(u.acceleration_mps2 >= config.accel_min_mps2 - 1e-12);
                assert!(u.acceleration_mps2 <= config.accel_max_mps2 + 1e-12);
            }
        }
    }

    #[test]
    fn short_reference_is_rejected() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let state = cruising(10.0);
        let reference = straight_reference(&state, config.horizon - 1, config.dt_s);
        assert!(matches!(
            mpc.step(&state, &reference),
            Err(WorkloadError::ReferenceTooShort { .. })
        ));
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let config = MpcConfig::default();
        let mut mpc = MpcController::new(config).unwrap();
        let state = VehicleState {
            x_m: f64::NAN,
            ..cruising(10.0)
        };
        let reference = straight_reference(&cruising(10.0), config.horizon, config.dt_s);
        assert!(matches!(
            mpc.step(&state, &reference),
            Err(WorkloadError::NonFinite { .. })
        ));
    }
}
