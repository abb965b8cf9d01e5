//! Time integration: fixed-step RK4 and the adaptive Dormand-Prince 5(4)
//! embedded pair, with every accepted step recorded and cubic Hermite
//! interpolation between nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Step size for RK4; initial trial step for RK45 (0 = choose
    /// automatically).
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        // rel_tol 1e-10 keeps conservative-system drift below 1e-8 over
        // hundreds of periods; 1e-8 measurably does not.
        Self {
            method: Method::Rk45Adaptive,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: 0.0,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParams("integrator tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParams("max_step must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tols(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

/// Solution samples at every accepted step, with derivatives retained for
/// dense (Hermite) evaluation.
#[derive(Debug, Clone)]
pub struct RawTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
}

impl RawTrajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Cubic Hermite interpolation at `t` (clamped to the covered span).
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1].clone();
        }
        let idx = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.states[i].clone(),
            Err(i) => i - 1,
        };
        hermite(
            self.times[idx],
            self.times[idx + 1],
            &self.states[idx],
            &self.derivs[idx],
            &self.states[idx + 1],
            &self.derivs[idx + 1],
            t,
        )
    }
}

pub(crate) fn hermite(
    t0: f64,
    t1: f64,
    y0: &[f64],
    f0: &[f64],
    y1: &[f64],
    f1: &[f64],
    t: f64,
) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Integrate `f` from `s0` over `t_span`, recording every accepted step.
/// Deterministic for identical inputs.
pub fn integrate_raw<F: VectorField>(
    f: &F,
    s0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<RawTrajectory> {
    cfg.validate()?;
    assert_eq!(s0.len(), f.dim(), "initial state dimension mismatch");
    if !t_span.0.is_finite() || !t_span.1.is_finite() {
        return Err(Error::InvalidParams("t_span must be finite".into()));
    }
    match cfg.method {
        Method::Rk4Fixed => rk4_fixed(f, s0, t_span, cfg),
        Method::Rk45Adaptive => rk45_adaptive(f, s0, t_span, cfg),
    }
}

/// Endpoint-only convenience wrapper.
pub fn flow<F: VectorField>(
    f: &F,
    s0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    Ok(integrate_raw(f, s0, (0.0, t), cfg)?.states.pop().unwrap())
}

fn rk4_fixed<F: VectorField>(
    f: &F,
    s0: &[f64],
    (t0, t1): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<RawTrajectory> {
    let span = t1 - t0;
    if span == 0.0 {
        let d = f.eval_vec(s0);
        return Ok(RawTrajectory { times: vec![t0], states: vec![s0.to_vec()], derivs: vec![d] });
    }
    let h_req = if cfg.initial_step > 0.0 { cfg.initial_step } else { span.abs() / 100.0 };
    let n_steps = (span.abs() / h_req.min(cfg.max_step)).ceil().max(1.0) as usize;
    if n_steps > cfg.max_steps {
        return Err(Error::StepLimitExceeded(cfg.max_steps));
    }
    let h = span / n_steps as f64;
    let dim = f.dim();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut derivs = Vec::with_capacity(n_steps + 1);
    let mut y = s0.to_vec();
    let mut k1 = f.eval_vec(&y);
    times.push(t0);
    states.push(y.clone());
    derivs.push(k1.clone());

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f.eval(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f.eval(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        f.eval(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = if step + 1 == n_steps { t1 } else { t + h };
        k1 = f.eval_vec(&y);
        times.push(t_next);
        states.push(y.clone());
        derivs.push(k1.clone());
    }
    Ok(RawTrajectory { times, states, derivs })
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// b - b*: weights of the embedded error estimate (7 stages with FSAL).
// Stage times are not needed: all systems here are autonomous.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

fn rk45_adaptive<F: VectorField>(
    f: &F,
    s0: &[f64],
    (t0, t1): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<RawTrajectory> {
    let dim = f.dim();
    let span = t1 - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };

    let mut y = s0.to_vec();
    let mut k0 = f.eval_vec(&y);
    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    let mut derivs = vec![k0.clone()];
    if span == 0.0 {
        return Ok(RawTrajectory { times, states, derivs });
    }

    let mut h = if cfg.initial_step > 0.0 {
        cfg.initial_step.min(span.abs())
    } else {
        initial_step_heuristic(f, &y, &k0, cfg).min(span.abs())
    }
    .min(cfg.max_step)
        * dir;

    let mut t = t0;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    for _ in 0..cfg.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(RawTrajectory { times, states, derivs });
        }
        // land exactly on t1
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() <= f64::EPSILON * t.abs().max(1.0) * 4.0 {
            return Err(Error::StepUnderflow(t));
        }

        k[0].copy_from_slice(&k0);
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            f.eval(&y_stage, &mut k[stage + 1]);
        }
        // 5th-order solution is the last stage state (FSAL)
        y_new.copy_from_slice(&y_stage);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            k0.copy_from_slice(&k[6]);
            times.push(t);
            states.push(y.clone());
            derivs.push(k0.clone());
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).clamp(-cfg.max_step, cfg.max_step);
            if h == 0.0 {
                h = dir * cfg.max_step.min(1e-12);
            }
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= factor;
        }
    }
    Err(Error::StepLimitExceeded(cfg.max_steps))
}

fn initial_step_heuristic<F: VectorField>(
    f: &F,
    y: &[f64],
    f0: &[f64],
    cfg: &IntegratorConfig,
) -> f64 {
    let sc: Vec<f64> =
        y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let d0 = rms(y, &sc);
    let d1 = rms(f0, &sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    // one Euler probe to estimate the second derivative
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, d)| v + h0 * d).collect();
    let f1 = f.eval_vec(&y1);
    let d2 = f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        .sqrt()
        / ((y.len() as f64).sqrt() * h0);
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d_max).powf(0.2) };
    (100.0 * h0).min(h1)
}

fn rms(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}
