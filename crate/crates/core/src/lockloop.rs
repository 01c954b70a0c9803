//! Side-of-fringe phase stabilisation of an unbalanced interferometer.
//!
//! The interferometer phase is `phi = drift + actuator`. A photodiode reads
//! `P = cos^2(phi / 2)` of the lock light; during lock windows a PID drives the
//! piezo actuator to hold `P` at the setpoint, during hold windows the actuator
//! and integrator are frozen while the drift continues.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::wrap_phase;
use crate::error::{Error, Result};

/// Phase magnitude treated as a runaway loop.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockConfig {
    /// Phase diffusion coefficient, rad^2/s.
    pub drift_random_walk: f64,
    /// Slow sinusoidal drift amplitude, rad.
    pub drift_sine_amplitude: f64,
    /// Slow sinusoidal drift frequency, Hz.
    pub drift_sine_frequency: f64,
    pub kp: f64,
    /// Integral gain, 1/s.
    pub ki: f64,
    /// Derivative gain, s.
    pub kd: f64,
    /// Loop update rate, Hz.
    pub loop_rate: f64,
    pub lock_duration: f64,
    pub hold_duration: f64,
    /// Photodiode target as a fraction of full fringe power, in (0, 1).
    pub lock_setpoint: f64,
    /// Standard deviation of additive photodiode noise, fraction of full power.
    pub photodiode_noise: f64,
    /// Phase offset from the lock point at t = 0, rad.
    pub initial_offset: f64,
}

impl Default for LockConfig {
    fn default() -> Self {
        Self {
            drift_random_walk: 2.0,
            drift_sine_amplitude: 0.5,
            drift_sine_frequency: 0.1,
            kp: 0.2,
            ki: 2.0e4,
            kd: 0.0,
            loop_rate: 1.0e5,
            lock_duration: 13.3e-3,
            hold_duration: 1.4e-3,
            lock_setpoint: 0.5,
            photodiode_noise: 0.0,
            initial_offset: 0.3,
        }
    }
}

impl LockConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("loop_rate", self.loop_rate),
            ("lock_duration", self.lock_duration),
            ("hold_duration", self.hold_duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("drift_random_walk", self.drift_random_walk),
            ("drift_sine_amplitude", self.drift_sine_amplitude),
            ("drift_sine_frequency", self.drift_sine_frequency),
            ("photodiode_noise", self.photodiode_noise),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("initial_offset", self.initial_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.lock_setpoint > 0.0 && self.lock_setpoint < 1.0) {
            return Err(Error::invalid(
                "lock_setpoint",
                "must lie strictly between 0 and 1",
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.loop_rate
    }

    /// Phase at which `cos^2(phi/2)` equals the setpoint on the falling slope.
    pub fn lock_phase(&self) -> f64 {
        (2.0 * self.lock_setpoint - 1.0).acos()
    }

    fn steps(&self, duration: f64) -> usize {
        ((duration * self.loop_rate).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Lock,
    Hold,
}

impl Window {
    pub fn label(self) -> &'static str {
        match self {
            Window::Lock => "lock",
            Window::Hold => "hold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockSample {
    pub t: f64,
    /// Phase error about the lock point, folded into `[-pi, pi)`.
    pub phase: f64,
    pub actuator: f64,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockSummary {
    /// Rms phase error of each completed hold window.
    pub hold_rms: Vec<f64>,
    /// Rms phase error over all hold samples.
    pub rms: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockRun {
    pub trajectory: Vec<LockSample>,
    pub summary: LockSummary,
}

/// Runs the loop for `total_time` seconds.
pub fn simulate_lock(cfg: &LockConfig, total_time: f64, seed: u64) -> Result<LockRun> {
    cfg.validate()?;
    let cycle = cfg.lock_duration + cfg.hold_duration;
    if !(total_time >= cycle) {
        return Err(Error::invalid(
            "total_time",
            format!("{total_time} s is shorter than one duty cycle of {cycle} s"),
        ));
    }
    let dt = cfg.dt();
    let n_lock = cfg.steps(cfg.lock_duration);
    let n_hold = cfg.steps(cfg.hold_duration);
    let n_total = (total_time * cfg.loop_rate).round() as usize;
    let phi_lock = cfg.lock_phase();
    let slope = -phi_lock.sin() / 2.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walk = Normal::new(0.0, (cfg.drift_random_walk * dt).sqrt()).expect("finite step");
    let pd = Normal::new(0.0, cfg.photodiode_noise).expect("finite noise");

    let mut walk_phase = phi_lock + cfg.initial_offset;
    let mut actuator = 0.0;
    let mut integral = 0.0;
    let mut prev_error: Option<f64> = None;
    let mut failed = false;

    let mut trajectory = Vec::with_capacity(n_total);
    let mut hold_rms = Vec::new();
    let (mut window_sq, mut window_n) = (0.0, 0usize);
    let (mut all_sq, mut all_n) = (0.0, 0usize);

    for k in 0..n_total {
        let t = k as f64 * dt;
        let pos = k % (n_lock + n_hold);
        let window = if pos < n_lock {
            Window::Lock
        } else {
            Window::Hold
        };
        let sine = cfg.drift_sine_amplitude * (TAU * cfg.drift_sine_frequency * t).sin();
        let phi = walk_phase + sine + actuator;
        if !(phi.abs() <= DIVERGENCE_LIMIT) {
            failed = true;
            break;
        }
        let err_phase = wrap_phase(phi - phi_lock);
        trajectory.push(LockSample {
            t,
            phase: err_phase,
            actuator,
            window,
        });

        match window {
            Window::Lock => {
                let mut reading = (phi / 2.0).cos().powi(2);
                if cfg.photodiode_noise > 0.0 {
                    reading += pd.sample(&mut rng);
                }
                let e = (reading - cfg.lock_setpoint) / slope;
                integral += e * dt;
                let deriv = prev_error.map_or(0.0, |p| (e - p) / dt);
                prev_error = Some(e);
                actuator = -(cfg.kp * e + cfg.ki * integral + cfg.kd * deriv);
            }
            Window::Hold => {
                prev_error = None;
                window_sq += err_phase * err_phase;
                window_n += 1;
                all_sq += err_phase * err_phase;
                all_n += 1;
                if pos + 1 == n_lock + n_hold {
                    hold_rms.push((window_sq / window_n as f64).sqrt());
                    window_sq = 0.0;
                    window_n = 0;
                }
            }
        }
        if cfg.drift_random_walk > 0.0 {
            walk_phase += walk.sample(&mut rng);
        }
    }
    let rms = if all_n > 0 {
        (all_sq / all_n as f64).sqrt()
    } else {
        0.0
    };
    Ok(LockRun {
        trajectory,
        summary: LockSummary {
            hold_rms,
            rms,
            failed,
        },
    })
}

/// Magnitude of the closed-loop error response `1 / (1 + z^-1 C(z))` to drift
/// at frequency `f`, for the loop linearised about the lock point.
pub fn closed_loop_rejection(cfg: &LockConfig, f: f64) -> f64 {
    let dt = cfg.dt();
    let zinv = Complex64::from_polar(1.0, -TAU * f * dt);
    let one = Complex64::new(1.0, 0.0);
    let c = cfg.kp + cfg.ki * dt / (one - zinv) + cfg.kd * (one - zinv) / dt;
    (one / (one + zinv * c)).norm()
}

/// Amplitude of the component at frequency `f` in the locked phase error,
/// using lock-window samples with `from <= t < to`.
pub fn tone_amplitude(trajectory: &[LockSample], f: f64, from: f64, to: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    for s in trajectory
        .iter()
        .filter(|s| s.window == Window::Lock && s.t >= from && s.t < to)
    {
        acc += s.phase * Complex64::from_polar(1.0, -TAU * f * s.t);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        2.0 * acc.norm() / n as f64
    }
}

/// `t_s,phase_rad,actuator_rad,window`
pub fn write_trajectory_csv<W: Write>(mut w: W, trajectory: &[LockSample]) -> Result<()> {
    writeln!(w, "t_s,phase_rad,actuator_rad,window")?;
    for s in trajectory {
        writeln!(
            w,
            "{:.7},{:.9},{:.9},{}",
            s.t,
            s.phase,
            s.actuator,
            s.window.label()
        )?;
    }
    Ok(())
}
