//! Generic numerical engine: time integration, equilibrium solving, dense
//! eigenvalues, Poincare sections, periodic-orbit refinement, and Floquet
//! multipliers.

mod eigen;
mod integrate;
mod newton;
mod orbit;
mod section;

pub use eigen::{eigenpair_residual, eigenvalues, sort_eigenvalues, verify_eigenpairs};
pub use integrate::{flow, integrate_raw, IntegratorConfig, Method, RawTrajectory};
pub use newton::{fd_jacobian, find_equilibrium, EquilibriumResult, NewtonConfig};
pub use orbit::{
    find_attractor_orbit, find_periodic_orbit, floquet_multipliers, monodromy, monodromy_fd,
    monodromy_with_endpoint, multiplier_verdict, trivial_index, OrbitSpace, PeriodicOrbit,
    ShootingConfig,
};
pub use section::{section_crossings, Section};

use crate::error::Result;
use crate::models::{SystemSpec, VectorField};

/// A trajectory of one of the model systems, with provenance for export.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: SystemSpec,
    pub raw: RawTrajectory,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.raw.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.raw.states
    }
}

/// Integrate one of the model systems. For the polar representation the
/// phase equations are singular at r = 0; when any amplitude drops below
/// 1e-8 the integration switches to the cartesian representation and maps
/// back with continuous phase unwrapping.
pub fn integrate(
    spec: &SystemSpec,
    s0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if let SystemSpec::Polar(p) = spec {
        let min_r = s0[0].min(s0[4]);
        let probe = integrate_raw(spec, s0, t_span, cfg);
        let needs_cartesian = match (&probe, min_r) {
            (_, r) if r < 1e-8 => true,
            (Ok(t), _) => t.states.iter().any(|s| s[0] < 1e-8 || s[4] < 1e-8),
            (Err(_), _) => true,
        };
        if needs_cartesian {
            let full = SystemSpec::Full(*p);
            let c0 = polar_to_cartesian_flat(s0);
            let raw_c = integrate_raw(&full, &c0, t_span, cfg)?;
            let raw = cartesian_traj_to_polar(&full, &raw_c, s0);
            return Ok(Trajectory { system: *spec, raw });
        }
        return Ok(Trajectory { system: *spec, raw: probe? });
    }
    let raw = integrate_raw(spec, s0, t_span, cfg)?;
    Ok(Trajectory { system: *spec, raw })
}

fn polar_to_cartesian_flat(s: &[f64]) -> [f64; 8] {
    let ax = num_complex::Complex64::from_polar(s[0], s[1]);
    let ay = num_complex::Complex64::from_polar(s[4], s[5]);
    [ax.re, ax.im, s[2], s[3], ay.re, ay.im, s[6], s[7]]
}

/// Map a cartesian trajectory back to polar coordinates, choosing each phase
/// sample on the branch nearest the previous one (unwrapped), and freezing
/// the phase wherever the amplitude is too small to define it.
fn cartesian_traj_to_polar(full: &SystemSpec, raw: &RawTrajectory, s0: &[f64]) -> RawTrajectory {
    use std::f64::consts::TAU;
    let mut states = Vec::with_capacity(raw.states.len());
    let mut prev_thx = s0[1];
    let mut prev_thy = s0[5];
    for s in &raw.states {
        let ax = num_complex::Complex64::new(s[0], s[1]);
        let ay = num_complex::Complex64::new(s[4], s[5]);
        let (rx, ry) = (ax.norm(), ay.norm());
        let thx = if rx < 1e-12 { prev_thx } else { unwrap_near(ax.arg(), prev_thx, TAU) };
        let thy = if ry < 1e-12 { prev_thy } else { unwrap_near(ay.arg(), prev_thy, TAU) };
        prev_thx = thx;
        prev_thy = thy;
        states.push(vec![rx, thx, s[2], s[3], ry, thy, s[6], s[7]]);
    }
    let polar_spec = match full {
        SystemSpec::Full(p) => SystemSpec::Polar(*p),
        _ => unreachable!(),
    };
    let derivs = states.iter().map(|s| polar_spec.eval_vec(s)).collect();
    RawTrajectory { times: raw.times.clone(), states, derivs }
}

fn unwrap_near(angle: f64, reference: f64, period: f64) -> f64 {
    let mut a = angle;
    while a - reference > period / 2.0 {
        a -= period;
    }
    while reference - a > period / 2.0 {
        a += period;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelParams;

    #[test]
    fn polar_switches_to_cartesian_through_the_axis() {
        // start with tiny rx so the polar phase equation is ill-defined
        let p = ModelParams { mu: -0.5, ..ModelParams::default() }; // everything decays
        let spec = SystemSpec::Polar(p);
        let s0 = [1e-10, 0.3, 0.1, 0.05, 0.5, -0.2, 0.0, 0.0];
        let traj = integrate(&spec, &s0, (0.0, 5.0), &IntegratorConfig::default()).unwrap();
        let end = traj.raw.last_state();
        assert!(end[0] >= 0.0 && end[4] >= 0.0);
        assert!(end.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn polar_and_full_endpoints_agree_away_from_axis() {
        let p = ModelParams::default();
        let polar = SystemSpec::Polar(p);
        let full = SystemSpec::Full(p);
        let s0p = [1.3, 0.2, 0.1, 0.05, 1.1, -0.4, -0.05, 0.02];
        let s0c = polar_to_cartesian_flat(&s0p);
        let cfg = IntegratorConfig::with_tols(1e-12, 1e-10);
        let ep = integrate(&polar, &s0p, (0.0, 10.0), &cfg).unwrap();
        let ec = integrate(&full, &s0c, (0.0, 10.0), &cfg).unwrap();
        let ep = ep.raw.last_state();
        let ec = ec.raw.last_state();
        let ax = num_complex::Complex64::from_polar(ep[0], ep[1]);
        assert!((ax.re - ec[0]).abs() < 1e-7, "{} vs {}", ax.re, ec[0]);
        assert!((ax.im - ec[1]).abs() < 1e-7);
        assert!((ep[2] - ec[2]).abs() < 1e-7);
    }
}
