//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! Step sizes are chosen by a PI controller on the max-norm of the embedded
//! error estimate scaled by `abs_tol + rel_tol * |y|`. Samples between
//! steps come from cubic Hermite interpolation of the step end points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub t_span: (f64, f64),
    #[serde(default)]
    pub initial_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Times at which the state is reported; `t_span.1` is always reported.
    #[serde(default)]
    pub sample_times: Vec<f64>,
}

fn default_max_steps() -> usize {
    10_000_000
}

impl IntegratorConfig {
    pub fn new(t0: f64, t1: f64, tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            t_span: (t0, t1),
            initial_step: None,
            max_steps: default_max_steps(),
            sample_times: Vec::new(),
        }
    }

    /// `n + 1` equally spaced samples over the span.
    pub fn with_uniform_samples(mut self, n: usize) -> Self {
        let (t0, t1) = self.t_span;
        self.sample_times = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        self
    }

    fn validate(&self) -> Result<()> {
        let (t0, t1) = self.t_span;
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid(format!("invalid time span [{t0}, {t1}]")));
        }
        if self.sample_times.iter().any(|&s| s < t0 || s > t1) {
            return Err(Error::invalid("sample times must lie in the time span"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

fn hermite(y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], h: f64, theta: f64, out: &mut [f64]) {
    let t = theta;
    for i in 0..y0.len() {
        out[i] = (1.0 - t) * y0[i]
            + t * y1[i]
            + t * (t - 1.0) * ((1.0 - 2.0 * t) * (y1[i] - y0[i]) + (t - 1.0) * h * f0[i] + t * h * f1[i]);
    }
}

/// Integrate `y' = rhs(t, y)`, calling `observer(t, y)` at each sample time
/// (in increasing order, including the final time).
pub fn integrate_with<F, O>(mut rhs: F, y0: &[f64], config: &IntegratorConfig, mut observer: O) -> Result<StepStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    config.validate()?;
    let (t0, t1) = config.t_span;
    let span = t1 - t0;
    let n = y0.len();
    let mut samples: Vec<f64> = config.sample_times.clone();
    samples.push(t1);
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup();
    let mut next_sample = 0;

    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut dense = vec![0.0; n];

    rhs(t0, &y, &mut k[0])?;
    stats.rhs_evals += 1;
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        observer(t0, &y)?;
        next_sample += 1;
    }

    let scale = |y: &[f64], i: usize| config.abs_tol + config.rel_tol * y[i].abs();
    let mut h = match config.initial_step {
        Some(h) => h,
        None => {
            // Hairer–Wanner starting step.
            let d0 = (0..n).map(|i| (y[i] / scale(&y, i)).abs()).fold(0.0, f64::max);
            let d1 = (0..n).map(|i| (k[0][i] / scale(&y, i)).abs()).fold(0.0, f64::max);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            for i in 0..n {
                tmp[i] = y[i] + h0 * k[0][i];
            }
            rhs(t0 + h0, &tmp, &mut k[1])?;
            stats.rhs_evals += 1;
            let d2 = (0..n)
                .map(|i| ((k[1][i] - k[0][i]) / scale(&y, i)).abs())
                .fold(0.0, f64::max)
                / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(span);

    let mut t = t0;
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    while t < t1 {
        if stats.accepted + stats.rejected >= config.max_steps {
            return Err(Error::StepLimit {
                t,
                max_steps: config.max_steps,
            });
        }
        if h < 1e-14 * span {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = t + h >= t1 - 1e-14 * span;
        let h_step = if last { t1 - t } else { h };

        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += h_step * a * k[j][i];
                    }
                }
                tmp[i] = acc;
            }
            rhs(t + C[s] * h_step, &tmp, &mut k[s])?;
            stats.rhs_evals += 1;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        y_new.copy_from_slice(&tmp);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, ej) in E.iter().enumerate() {
                if *ej != 0.0 {
                    e += ej * k[j][i];
                }
            }
            let sc = config.abs_tol + config.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((h_step * e / sc).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t1 } else { t + h_step };
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let ts = samples[next_sample];
                if ts == t_new {
                    observer(ts, &y_new)?;
                } else {
                    let theta = (ts - t) / h_step;
                    hermite(&y, &y_new, &k[0], &k[6], h_step, theta, &mut dense);
                    observer(ts, &dense)?;
                }
                next_sample += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h = h_step * fac;
            err_old = err.max(1e-4);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            h = h_step * (SAFETY * err.powf(-ALPHA)).max(0.2);
            rejected_last = true;
        }
    }
    Ok(stats)
}

/// Integrate and store the state at every sample time.
pub fn integrate<F>(rhs: F, y0: &[f64], config: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut traj = Trajectory::default();
    let stats = integrate_with(rhs, y0, config, |t, y| {
        traj.times.push(t);
        traj.states.push(y.to_vec());
        Ok(())
    })?;
    traj.stats = stats;
    Ok(traj)
}
