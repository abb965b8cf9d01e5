//! Poincare-section crossings of a sampled trajectory.

use serde::{Deserialize, Serialize};

use super::integrate::{hermite, RawTrajectory};

/// A coordinate hyperplane section `state[coord] = offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub coord: usize,
    pub offset: f64,
    /// +1 keeps upward crossings, -1 downward, 0 both.
    pub direction: i8,
}

impl Section {
    pub fn upward(coord: usize) -> Self {
        Self { coord, offset: 0.0, direction: 1 }
    }
}

const CROSSING_TOL: f64 = 1e-12;

/// Locate section crossings by bisection on the cubic Hermite interpolant of
/// the section coordinate, to `|coordinate - offset| <= 1e-12`. The trajectory
/// must be sampled densely enough that each crossing is bracketed by
/// consecutive samples.
pub fn section_crossings(traj: &RawTrajectory, section: &Section) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    let c = section.coord;
    for i in 0..traj.times.len().saturating_sub(1) {
        let g0 = traj.states[i][c] - section.offset;
        let g1 = traj.states[i + 1][c] - section.offset;
        if g0 == 0.0 {
            // sample exactly on section: direction from the stored derivative
            if i == 0 && direction_ok(traj.derivs[i][c], section.direction) {
                out.push((traj.times[i], traj.states[i].clone()));
            }
            continue;
        }
        if g0 * g1 > 0.0 {
            continue;
        }
        // bracketed crossing in (t_i, t_{i+1}]
        let interp = |t: f64| -> Vec<f64> {
            hermite(
                traj.times[i],
                traj.times[i + 1],
                &traj.states[i],
                &traj.derivs[i],
                &traj.states[i + 1],
                &traj.derivs[i + 1],
                t,
            )
        };
        let (mut lo, mut hi) = (traj.times[i], traj.times[i + 1]);
        let mut g_lo = g0;
        let mut t_mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            t_mid = 0.5 * (lo + hi);
            let g_mid = interp(t_mid)[c] - section.offset;
            if g_mid.abs() <= CROSSING_TOL {
                break;
            }
            if g_lo * g_mid <= 0.0 {
                hi = t_mid;
            } else {
                lo = t_mid;
                g_lo = g_mid;
            }
        }
        let state = interp(t_mid);
        let slope =
            hermite_slope(traj.times[i], traj.times[i + 1], &traj.states[i], &traj.derivs[i], &traj.states[i + 1], &traj.derivs[i + 1], c, t_mid);
        if direction_ok(slope, section.direction) {
            out.push((t_mid, state));
        }
    }
    out
}

fn direction_ok(slope: f64, direction: i8) -> bool {
    match direction {
        1 => slope > 0.0,
        -1 => slope < 0.0,
        _ => true,
    }
}

#[allow(clippy::too_many_arguments)]
fn hermite_slope(
    t0: f64,
    t1: f64,
    y0: &[f64],
    f0: &[f64],
    y1: &[f64],
    f1: &[f64],
    coord: usize,
    t: f64,
) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let dh00 = (6.0 * s * s - 6.0 * s) / h;
    let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s * s + 6.0 * s) / h;
    let dh11 = 3.0 * s * s - 2.0 * s;
    dh00 * y0[coord] + dh10 * f0[coord] + dh01 * y1[coord] + dh11 * f1[coord]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate::{integrate_raw, IntegratorConfig};
    use crate::models::VectorField;
    use nalgebra::DMatrix;

    struct Harmonic;
    impl VectorField for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, s: &[f64], out: &mut [f64]) {
            out[0] = s[1];
            out[1] = -s[0];
        }
        fn jacobian(&self, _s: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        }
    }

    fn dense_cfg() -> IntegratorConfig {
        // crossings are refined on the interpolant, so the trajectory must be
        // sampled densely enough for interpolation error below the target
        IntegratorConfig { max_step: 0.01, ..IntegratorConfig::default() }
    }

    #[test]
    fn sine_upward_crossings_at_multiples_of_two_pi() {
        // s0 = (0, 1) gives x(t) = sin t
        let traj = integrate_raw(&Harmonic, &[0.0, 1.0], (0.0, 25.0), &dense_cfg()).unwrap();
        let crossings = section_crossings(&traj, &Section { coord: 0, offset: 0.0, direction: 1 });
        let expected: Vec<f64> =
            (0..4).map(|n| n as f64 * std::f64::consts::TAU).collect();
        assert_eq!(crossings.len(), expected.len(), "{crossings:?}");
        for ((t, _), want) in crossings.iter().zip(&expected) {
            assert!((t - want).abs() < 1e-10, "{t} vs {want}");
        }
    }

    #[test]
    fn constant_trajectory_off_section_is_empty() {
        struct Still;
        impl VectorField for Still {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _s: &[f64], out: &mut [f64]) {
                out[0] = 0.0;
            }
            fn jacobian(&self, _s: &[f64]) -> DMatrix<f64> {
                DMatrix::zeros(1, 1)
            }
        }
        let traj =
            integrate_raw(&Still, &[0.7], (0.0, 10.0), &IntegratorConfig::default()).unwrap();
        let crossings = section_crossings(&traj, &Section { coord: 0, offset: 0.0, direction: 0 });
        assert!(crossings.is_empty());
    }

    #[test]
    fn downward_filter() {
        let traj = integrate_raw(&Harmonic, &[0.0, 1.0], (0.0, 25.0), &dense_cfg()).unwrap();
        let down = section_crossings(&traj, &Section { coord: 0, offset: 0.0, direction: -1 });
        for (t, _) in &down {
            let phase = t.rem_euclid(std::f64::consts::TAU);
            assert!((phase - std::f64::consts::PI).abs() < 1e-9, "t = {t}");
        }
    }
}
