//! Periodic-orbit refinement by single shooting, monodromy via the
//! variational equations, and Floquet stability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use super::integrate::{flow, integrate_raw, IntegratorConfig};
use super::newton::sup_norm;
use super::section::{section_crossings, Section};
use crate::error::{Error, Result};
use crate::models::VectorField;

/// State space a refined orbit lives in. Restricted spaces embed into the
/// polar core for classification and full-space stability analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitSpace {
    /// The translation-reduced model core `[rx, cx, dx, ry, cy, dy]`.
    PolarCore,
    /// `{cy = dy = 0}` invariant subspace, coordinates `[rx, cx, dx, ry]`.
    CoreAxisX,
    /// Diagonal invariant subspace, coordinates `[r, c, d]`.
    CoreDiagonal,
    /// Hopf normal form amplitudes `[vx_re, vx_im, vy_re, vy_im]`.
    HopfNfAmplitudes,
}

impl OrbitSpace {
    pub fn dim(self) -> usize {
        match self {
            OrbitSpace::PolarCore => 6,
            OrbitSpace::CoreAxisX => 4,
            OrbitSpace::CoreDiagonal => 3,
            OrbitSpace::HopfNfAmplitudes => 4,
        }
    }

    /// Embed a state of this space into the space classification runs in.
    pub fn embed_for_classification(self, s: &[f64]) -> Vec<f64> {
        match self {
            OrbitSpace::PolarCore | OrbitSpace::HopfNfAmplitudes => s.to_vec(),
            OrbitSpace::CoreAxisX => vec![s[0], s[1], s[2], s[3], 0.0, 0.0],
            OrbitSpace::CoreDiagonal => vec![s[0], s[1], s[2], s[0], s[1], s[2]],
        }
    }

    pub fn classification_representation(self) -> crate::models::Representation {
        match self {
            OrbitSpace::HopfNfAmplitudes => crate::models::Representation::HopfNfAmplitudes,
            _ => crate::models::Representation::PolarCore,
        }
    }
}

/// A refined periodic orbit: uniform samples over one period (first sample on
/// the shooting section), closure residual, and Floquet multipliers of the
/// space it was refined in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub samples: Vec<Vec<f64>>,
    pub period: f64,
    pub residual: f64,
    pub multipliers: Vec<Complex64>,
    pub space: OrbitSpace,
}

impl PeriodicOrbit {
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    /// Max over coordinates of (max - min) across the samples.
    pub fn diameter(&self) -> f64 {
        let dim = self.dim();
        let mut d = 0.0f64;
        for c in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &self.samples {
                lo = lo.min(s[c]);
                hi = hi.max(s[c]);
            }
            d = d.max(hi - lo);
        }
        d
    }

    /// Samples embedded into the classification space.
    pub fn classification_samples(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| self.space.embed_for_classification(s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig {
    pub section: Section,
    pub closure_tol: f64,
    pub max_iter: usize,
    pub n_samples: usize,
    pub integ: IntegratorConfig,
    pub space: OrbitSpace,
}

impl ShootingConfig {
    pub fn new(section: Section, space: OrbitSpace) -> Self {
        Self {
            section,
            closure_tol: 1e-10,
            max_iter: 30,
            n_samples: 256,
            integ: IntegratorConfig::with_tols(1e-12, 1e-10),
            space,
        }
    }
}

/// Threshold below which a "periodic orbit" is reported as an equilibrium.
const EQUILIBRIUM_DIAMETER: f64 = 1e-8;

struct Variational<'a, F: VectorField> {
    base: &'a F,
}

impl<F: VectorField> VectorField for Variational<'_, F> {
    fn dim(&self) -> usize {
        let n = self.base.dim();
        n + n * n
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        let n = self.base.dim();
        self.base.eval(&s[..n], &mut out[..n]);
        let j = self.base.jacobian(&s[..n]);
        // M stored column-major after the state; M' = J M
        for col in 0..n {
            let m_col = &s[n + col * n..n + (col + 1) * n];
            for row in 0..n {
                let mut acc = 0.0;
                for (l, m_l) in m_col.iter().enumerate() {
                    acc += j[(row, l)] * m_l;
                }
                out[n + col * n + row] = acc;
            }
        }
    }

    fn jacobian(&self, _s: &[f64]) -> DMatrix<f64> {
        unreachable!("the variational system is only ever time-integrated")
    }
}

/// Monodromy matrix over `[0, t]` from `x0`, by integrating the variational
/// equations alongside the flow. Also returns the endpoint state.
pub fn monodromy_with_endpoint<F: VectorField>(
    f: &F,
    x0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = f.dim();
    let mut ext = vec![0.0; n + n * n];
    ext[..n].copy_from_slice(x0);
    for i in 0..n {
        ext[n + i * n + i] = 1.0;
    }
    let var = Variational { base: f };
    let end = flow(&var, &ext, t, cfg)?;
    let m = DMatrix::from_column_slice(n, n, &end[n..]);
    Ok((m, end[..n].to_vec()))
}

pub fn monodromy<F: VectorField>(
    f: &F,
    x0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    Ok(monodromy_with_endpoint(f, x0, t, cfg)?.0)
}

/// Floquet multipliers of an orbit through `x0` with the given period, in the
/// space of `f`.
pub fn floquet_multipliers<F: VectorField>(
    f: &F,
    x0: &[f64],
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Complex64>> {
    let m = monodromy(f, x0, period, cfg)?;
    eigenvalues(&m)
}

/// Stability verdict from multipliers, excluding the trivial multiplier
/// (the one closest to +1). Moduli within 1e-6 of the unit circle are
/// marginal.
pub fn multiplier_verdict(multipliers: &[Complex64]) -> crate::models::Stability {
    const MARGIN: f64 = 1e-6;
    let trivial = trivial_index(multipliers);
    let mut verdict = crate::models::Stability::Stable;
    for (i, m) in multipliers.iter().enumerate() {
        if Some(i) == trivial {
            continue;
        }
        let r = m.norm();
        if r > 1.0 + MARGIN {
            return crate::models::Stability::Unstable;
        }
        if r >= 1.0 - MARGIN {
            verdict = crate::models::Stability::Marginal;
        }
    }
    verdict
}

pub fn trivial_index(multipliers: &[Complex64]) -> Option<usize> {
    multipliers
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (*a - Complex64::new(1.0, 0.0)).norm();
            let db = (*b - Complex64::new(1.0, 0.0)).norm();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
}

/// Refine a periodic orbit by single shooting: Newton on (state-on-section,
/// period) for the closure condition, with the section pinning the time
/// translation. The guess needs only to be near the orbit; it is first
/// carried to the section.
pub fn find_periodic_orbit<F: VectorField>(
    f: &F,
    guess: &[f64],
    t_guess: f64,
    cfg: &ShootingConfig,
) -> Result<PeriodicOrbit> {
    if !(t_guess > 0.0) {
        return Err(Error::DegenerateOrbit("period guess must be positive".into()));
    }
    let n = f.dim();
    let sec = cfg.section;

    // carry the guess onto the section
    let mut x0 = guess.to_vec();
    let on_section = (x0[sec.coord] - sec.offset).abs() <= 1e-9;
    if !on_section {
        let traj = integrate_raw(f, &x0, (0.0, 3.0 * t_guess), &cfg.integ)?;
        let crossings = section_crossings(&traj, &sec);
        let (_, state) = crossings
            .into_iter()
            .next()
            .ok_or_else(|| Error::DegenerateOrbit("guess never crosses the section".into()))?;
        x0 = state;
    }

    let mut period = t_guess;

    for _ in 0..cfg.max_iter {
        let (m, x_end) = monodromy_with_endpoint(f, &x0, period, &cfg.integ)?;
        let f_end = f.eval_vec(&x_end);

        let mut residual = DVector::zeros(n + 1);
        for i in 0..n {
            residual[i] = x_end[i] - x0[i];
        }
        residual[n] = x0[sec.coord] - sec.offset;
        let res_norm = residual.amax();
        if res_norm <= cfg.closure_tol {
            return finish_orbit(f, x0, period, res_norm, &m, cfg);
        }

        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, n)] = f_end[i];
        }
        jac[(n, sec.coord)] = 1.0;

        let delta = jac.lu().solve(&(-residual)).ok_or(Error::SingularJacobian)?;

        // damped update
        let mut damping = 1.0;
        let mut accepted = false;
        while damping >= 1.0 / 1024.0 {
            let x_try: Vec<f64> =
                (0..n).map(|i| x0[i] + damping * delta[i]).collect();
            let t_try = period + damping * delta[n];
            if t_try <= 0.0 {
                damping *= 0.5;
                continue;
            }
            let end_try = flow(f, &x_try, t_try, &cfg.integ)?;
            let mut r_try = vec![0.0; n + 1];
            for i in 0..n {
                r_try[i] = end_try[i] - x_try[i];
            }
            r_try[n] = x_try[sec.coord] - sec.offset;
            if sup_norm(&r_try) < res_norm {
                x0 = x_try;
                period = t_try;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { residual: res_norm });
        }
    }

    // final residual check after the last update
    let (m, x_end) = monodromy_with_endpoint(f, &x0, period, &cfg.integ)?;
    let mut residual = vec![0.0; n + 1];
    for i in 0..n {
        residual[i] = x_end[i] - x0[i];
    }
    residual[n] = x0[sec.coord] - sec.offset;
    let res_norm = sup_norm(&residual);
    if res_norm <= cfg.closure_tol {
        return finish_orbit(f, x0, period, res_norm, &m, cfg);
    }
    Err(Error::NoConvergence { residual: res_norm })
}

fn finish_orbit<F: VectorField>(
    f: &F,
    x0: Vec<f64>,
    period: f64,
    residual: f64,
    m: &DMatrix<f64>,
    cfg: &ShootingConfig,
) -> Result<PeriodicOrbit> {
    let samples = resample_orbit(f, &x0, period, cfg.n_samples, &cfg.integ)?;
    let orbit = PeriodicOrbit {
        samples,
        period,
        residual,
        multipliers: eigenvalues(m)?,
        space: cfg.space,
    };
    if orbit.diameter() < EQUILIBRIUM_DIAMETER {
        return Err(Error::ConvergedToEquilibrium);
    }
    Ok(orbit)
}

fn resample_orbit<F: VectorField>(
    f: &F,
    x0: &[f64],
    period: f64,
    n_samples: usize,
    integ: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>> {
    let cfg = IntegratorConfig { max_step: period / 512.0, ..*integ };
    let traj = integrate_raw(f, x0, (0.0, period), &cfg)?;
    Ok((0..n_samples)
        .map(|j| traj.sample(period * j as f64 / n_samples as f64))
        .collect())
}

/// Settle onto an attractor, estimate the period from section returns, then
/// refine by shooting. Section candidates are tried in order; a candidate is
/// viable when the settled trajectory oscillates through it.
pub fn find_attractor_orbit<F: VectorField>(
    f: &F,
    s0: &[f64],
    transient: f64,
    section_candidates: &[usize],
    space: OrbitSpace,
) -> Result<PeriodicOrbit> {
    let integ = IntegratorConfig::default();
    let settled = flow(f, s0, transient, &integ)?;

    // observation window long enough for several returns
    let window = integrate_raw(f, &settled, (0.0, 200.0), &integ)?;
    let dim = f.dim();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for s in &window.states {
        for (i, v) in s.iter().enumerate() {
            ranges[i].0 = ranges[i].0.min(*v);
            ranges[i].1 = ranges[i].1.max(*v);
        }
    }
    let spread = ranges.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    if spread < EQUILIBRIUM_DIAMETER {
        return Err(Error::ConvergedToEquilibrium);
    }

    let coord = section_candidates
        .iter()
        .copied()
        .find(|&c| {
            let (lo, hi) = ranges[c];
            hi - lo > 0.1 * spread && lo < 0.0 && hi > 0.0
        })
        .ok_or_else(|| {
            Error::DegenerateOrbit("no section candidate oscillates through zero".into())
        })?;
    let section = Section::upward(coord);

    let crossings = section_crossings(&window, &section);
    if crossings.len() < 3 {
        return Err(Error::DegenerateOrbit(format!(
            "only {} section returns in the observation window",
            crossings.len()
        )));
    }
    let last = crossings.len() - 1;
    let t_est = crossings[last].0 - crossings[last - 1].0;
    let x0 = crossings[last - 1].1.clone();

    let cfg = ShootingConfig::new(section, space);
    find_periodic_orbit(f, &x0, t_est, &cfg)
}

/// Finite-difference monodromy (period-map differencing); the independent
/// cross-check of the variational route.
pub fn monodromy_fd<F: VectorField>(
    f: &F,
    x0: &[f64],
    period: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let n = f.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[j] += eps;
        xm[j] -= eps;
        let fp = flow(f, &xp, period, cfg)?;
        let fm = flow(f, &xm, period, cfg)?;
        for i in 0..n {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * eps);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HopfNfParams, SystemSpec};

    #[test]
    fn hopf_nf_psq_orbit_matches_closed_form() {
        // lambda 0.1, omega 1, A = B = -1, C = 0: |vx|^2 = 0.05, period 2 pi
        let p = HopfNfParams::default();
        let spec = SystemSpec::HopfNfAmplitudes(p);
        let rho = 0.05f64.sqrt();
        // guess off the orbit; section Im(vx) = 0 upward
        let guess = [rho * 1.05, 0.0, 0.0, 0.0];
        let cfg = ShootingConfig::new(
            Section { coord: 1, offset: 0.0, direction: 1 },
            OrbitSpace::HopfNfAmplitudes,
        );
        let orbit = find_periodic_orbit(&spec, &guess, 6.0, &cfg).unwrap();
        assert!((orbit.period - std::f64::consts::TAU).abs() < 1e-8, "{}", orbit.period);
        let amp = (orbit.samples[0][0].powi(2) + orbit.samples[0][1].powi(2)).sqrt();
        assert!((amp - rho).abs() < 1e-8, "amp {amp} vs {rho}");
        assert!(orbit.residual <= 1e-10);
        // trivial multiplier present
        let t = trivial_index(&orbit.multipliers).unwrap();
        assert!((orbit.multipliers[t] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn equilibrium_input_is_rejected() {
        let p = HopfNfParams { lambda: -0.1, ..HopfNfParams::default() };
        let spec = SystemSpec::HopfNfAmplitudes(p);
        // decays to the origin; shooting must not report an orbit
        let guess = [0.05, 0.0, 0.0, 0.0];
        let cfg = ShootingConfig::new(
            Section { coord: 1, offset: 0.0, direction: 1 },
            OrbitSpace::HopfNfAmplitudes,
        );
        let res = find_periodic_orbit(&spec, &guess, 6.0, &cfg);
        assert!(res.is_err(), "{res:?}");
    }

    #[test]
    fn stable_nf_orbit_has_contracting_multipliers() {
        let p = HopfNfParams { b: (0.5, 0.0), ..HopfNfParams::default() };
        // with B = +0.5, A = -1: PSq coefficient Re(A+B) = -0.5 < 0 exists
        let spec = SystemSpec::HopfNfAmplitudes(p);
        let rho = (0.1f64 / 0.5).sqrt();
        let guess = [rho, 0.0, 0.0, 0.0];
        let cfg = ShootingConfig::new(
            Section { coord: 1, offset: 0.0, direction: 1 },
            OrbitSpace::HopfNfAmplitudes,
        );
        let orbit = find_periodic_orbit(&spec, &guess, 6.3, &cfg).unwrap();
        // amplitude direction multiplier: exp(-2 lambda' T) < 1
        let trivial = trivial_index(&orbit.multipliers).unwrap();
        let radial: Vec<f64> = orbit
            .multipliers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != trivial)
            .map(|(_, m)| m.norm())
            .collect();
        // at least the radial direction contracts
        assert!(radial.iter().any(|r| *r < 1.0 - 1e-6), "{:?}", orbit.multipliers);
    }

    #[test]
    fn linear_periodic_monodromy_matches_exponential() {
        // x' = a(t) K x with commuting family: M(T) = exp(K \int_0^T a)
        // Emulate with an autonomous 3d system: s = (x1, x2, theta),
        // theta' = 1, a(theta) = 1 + cos(theta) -- integral over 2 pi is 2 pi.
        use nalgebra::DMatrix;
        struct Comm;
        impl VectorField for Comm {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, s: &[f64], out: &mut [f64]) {
                let a = 1.0 + s[2].cos();
                // K = [[0, -1], [1, 0]] rotation generator
                out[0] = a * -s[1];
                out[1] = a * s[0];
                out[2] = 1.0;
            }
            fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
                let a = 1.0 + s[2].cos();
                let da = -s[2].sin();
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.0, -a, da * -s[1], a, 0.0, da * s[0], 0.0, 0.0, 0.0],
                )
            }
        }
        let t = std::f64::consts::TAU;
        let m = monodromy(&Comm, &[1.0, 0.0, 0.0], t, &IntegratorConfig::with_tols(1e-12, 1e-10))
            .unwrap();
        // upper 2x2 block must be rotation by angle 2 pi (identity)
        let block = m.view((0, 0), (2, 2)).clone_owned();
        let expect = DMatrix::<f64>::identity(2, 2);
        assert!((block - expect).amax() < 1e-8, "{m}");
    }
}
