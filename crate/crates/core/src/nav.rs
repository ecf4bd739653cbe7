//! IMU dead-reckoning on the preintegration state (rotation, velocity,
//! position), the analytic orientation-bias integral for a decaying tone,
//! and trajectory error statistics.

use std::f64::consts::PI;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{observed_fluctuation, ImuSpec};
use crate::series::{Channel, SampleSeries};

/// Rotation/velocity/position state at a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct NavState {
    pub rotation: Matrix3<f64>,
    pub velocity: Vector3<f64>,
    pub position: Vector3<f64>,
    pub t: f64,
}

impl NavState {
    /// Identity attitude at the origin, at rest.
    pub fn at_rest() -> Self {
        NavState {
            rotation: Matrix3::identity(),
            velocity: Vector3::zeros(),
            position: Vector3::zeros(),
            t: 0.0,
        }
    }

    pub fn with_velocity(mut self, v: Vector3<f64>) -> Self {
        self.velocity = v;
        self
    }

    /// Max deviation of R^T R from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn check_rotation(&self) -> Result<()> {
        if self.orthonormality_error() > 1e-9 || (self.rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::NonFinite { name: "rotation" });
        }
        Ok(())
    }

    /// Projects the rotation back onto SO(3) (polar factor via SVD).
    pub fn reorthonormalize(&mut self) {
        let svd = self.rotation.svd(true, true);
        if let (Some(u), Some(v_t)) = (svd.u, svd.v_t) {
            let mut r = u * v_t;
            // keep det = +1
            if r.determinant() < 0.0 {
                let mut u = u;
                u.column_mut(2).neg_mut();
                r = u * v_t;
            }
            self.rotation = r;
        }
    }

    /// Yaw angle (rotation about z) extracted from the rotation matrix.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }
}

/// Gravity and step size for propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    /// World-frame gravity, m/s^2.
    pub gravity: Vector3<f64>,
    /// Step size, s.
    pub dt: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            gravity: Vector3::new(0.0, 0.0, -9.81),
            dt: 0.01,
        }
    }
}

/// Rodrigues' rotation exponential with a series fallback for tiny angles.
pub fn rotation_exp(theta: Vector3<f64>) -> Matrix3<f64> {
    let angle = theta.norm();
    let skew = Matrix3::new(
        0.0, -theta.z, theta.y, //
        theta.z, 0.0, -theta.x, //
        -theta.y, theta.x, 0.0,
    );
    if angle < 1e-8 {
        // second-order series; below this angle the closed form loses
        // precision to the 1/angle^2 factors
        return Matrix3::identity() + skew + skew * skew * 0.5;
    }
    let a = angle.sin() / angle;
    let b = (1.0 - angle.cos()) / (angle * angle);
    Matrix3::identity() + skew * a + skew * skew * b
}

/// One preintegration step:
///
/// ```text
/// p <- p + v dt + 1/2 g dt^2 + 1/2 R (a - a_bias) dt^2
/// v <- v + g dt + R (a - a_bias) dt
/// R <- R exp((w - w_bias) dt)
/// ```
///
/// Position and velocity use the pre-update `R` and `v`, matching the
/// summed form of the preintegration equations.
pub fn propagate(
    s: &NavState,
    omega: Vector3<f64>,
    accel: Vector3<f64>,
    cfg: &PropagationConfig,
    spec: &ImuSpec,
) -> Result<NavState> {
    if omega.iter().chain(accel.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { name: "imu sample" });
    }
    let dt = cfg.dt;
    let body_accel = s.rotation * (accel - spec.accel_bias);
    let position =
        s.position + s.velocity * dt + 0.5 * cfg.gravity * dt * dt + 0.5 * body_accel * dt * dt;
    let velocity = s.velocity + cfg.gravity * dt + body_accel * dt;
    let rotation = s.rotation * rotation_exp((omega - spec.gyro_bias) * dt);
    Ok(NavState {
        rotation,
        velocity,
        position,
        t: s.t + dt,
    })
}

/// Time-ordered pose sequence.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<NavState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> Option<&NavState> {
        self.states.last()
    }

    /// CSV rows `t,px,py,pz,qw,qx,qy,qz`, 9 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,px,py,pz,qw,qx,qy,qz")?;
        for s in &self.states {
            let q = s.quaternion();
            writeln!(
                w,
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                s.t, s.position.x, s.position.y, s.position.z, q.w, q.i, q.j, q.k
            )?;
        }
        Ok(())
    }
}

/// Position error statistics between an estimate and the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mae_m: f64,
    pub rmse_m: f64,
}

const REORTH_INTERVAL: usize = 1000;

/// Folds [`propagate`] over six aligned gyro/accel streams.
pub fn dead_reckon(
    gyro: [&SampleSeries; 3],
    accel: [&SampleSeries; 3],
    cfg: &PropagationConfig,
    spec: &ImuSpec,
    initial: NavState,
) -> Result<Trajectory> {
    initial.check_rotation()?;
    for s in gyro.iter().skip(1).chain(accel.iter()) {
        gyro[0].check_aligned(s)?;
    }
    let dt = gyro[0].dt;
    let step_cfg = PropagationConfig {
        gravity: cfg.gravity,
        dt,
    };
    let mut states = Vec::with_capacity(gyro[0].len() + 1);
    let mut state = initial;
    state.t = gyro[0].t0;
    states.push(state.clone());
    for i in 0..gyro[0].len() {
        let w = Vector3::new(gyro[0].values[i], gyro[1].values[i], gyro[2].values[i]);
        let a = Vector3::new(accel[0].values[i], accel[1].values[i], accel[2].values[i]);
        state = propagate(&state, w, a, &step_cfg, spec)?;
        if (i + 1) % REORTH_INTERVAL == 0 {
            state.reorthonormalize();
        }
        states.push(state.clone());
    }
    Ok(Trajectory { states })
}

/// Orientation-angle bias accumulated over one decay window:
/// the closed form of `int_0^T k (-c/T t + c) sin(2 pi f_o t) dt`.
///
/// Bound to the quadrature oracle (relative 1e-9); at f_o = 0 the
/// integrand vanishes and the limit value 0 is returned.
pub fn theta_t_analytic(c: f64, k: f64, f_o: f64, t_decay: f64) -> f64 {
    if f_o == 0.0 {
        return 0.0;
    }
    let a = 2.0 * PI * f_o;
    c * k / a - c * k * (a * t_decay).sin() / (a * a * t_decay)
}

/// MAE and RMSE of the position error over matched timestamps.
pub fn trajectory_errors(est: &Trajectory, truth: &Trajectory) -> Result<ErrorStats> {
    if est.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            left: est.len(),
            right: truth.len(),
        });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (i, (e, t)) in est.states.iter().zip(&truth.states).enumerate() {
        if (e.t - t.t).abs() > 1e-9 {
            return Err(Error::TimestampMismatch {
                index: i,
                left: e.t,
                right: t.t,
            });
        }
        let d = (e.position - t.position).norm();
        sum += d;
        sum_sq += d * d;
    }
    let n = est.len() as f64;
    Ok(ErrorStats {
        mae_m: sum / n,
        rmse_m: (sum_sq / n).sqrt(),
    })
}

/// Straight-line walk profile used by the drift experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkProfile {
    /// Constant forward speed along +x, m/s.
    pub speed_mps: f64,
}

impl Default for WalkProfile {
    fn default() -> Self {
        // normal human walking speed
        Self { speed_mps: 1.35 }
    }
}

/// Dead-reckons a straight, level walk with a sinusoidal rate fluctuation
/// `omega_o sin(2 pi f_o t)` injected on the pitch gyro and returns the
/// position errors against the analytic truth.
///
/// The pitch axis is the one that couples the fluctuation into gravity:
/// the tilted estimate mis-resolves g, so the error grows with duration,
/// faster at low f_o where the accumulated tilt is larger.
pub fn drift_experiment(
    omega_o: f64,
    f_o: f64,
    duration: f64,
    walk: &WalkProfile,
    spec: &ImuSpec,
) -> Result<ErrorStats> {
    if !(omega_o >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_o",
            value: omega_o,
        });
    }
    if !(f_o > 0.0) {
        return Err(Error::InvalidParameter {
            name: "f_o",
            value: f_o,
        });
    }
    let cfg = PropagationConfig::default();
    let g = cfg.gravity;
    let dt = 1.0 / spec.sample_rate_hz;
    let n = ((duration * spec.sample_rate_hz).round() as usize).max(1);

    // Level constant-velocity walk: specific force is -g in the body frame,
    // true rates are zero. The fluctuation rides on the pitch channel.
    let fluctuation = observed_fluctuation(omega_o, f_o);
    let mk = |f: Box<dyn Fn(f64) -> f64>, ch: Channel| {
        SampleSeries::new(
            0.0,
            dt,
            (0..n).map(|i| f(i as f64 * dt)).collect(),
            ch,
        )
    };
    let zero = |ch| mk(Box::new(|_| 0.0), ch);
    let gyro_x = zero(Channel::GyroX)?;
    let gyro_y = mk(Box::new(fluctuation), Channel::GyroY)?;
    let gyro_z = zero(Channel::GyroZ)?;
    let accel_x = mk(Box::new(move |_| -g.x), Channel::AccelX)?;
    let accel_y = mk(Box::new(move |_| -g.y), Channel::AccelY)?;
    let accel_z = mk(Box::new(move |_| -g.z), Channel::AccelZ)?;

    let initial = NavState::at_rest().with_velocity(Vector3::new(walk.speed_mps, 0.0, 0.0));
    let est = dead_reckon(
        [&gyro_x, &gyro_y, &gyro_z],
        [&accel_x, &accel_y, &accel_z],
        &cfg,
        spec,
        initial,
    )?;

    let truth = Trajectory {
        states: (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                NavState {
                    rotation: Matrix3::identity(),
                    velocity: Vector3::new(walk.speed_mps, 0.0, 0.0),
                    position: Vector3::new(walk.speed_mps * t, 0.0, 0.0),
                    t,
                }
            })
            .collect(),
    };
    trajectory_errors(&est, &truth)
}
