//! Parameter sweeps of the squares branch, numerical bifurcation detection
//! against the closed-form thresholds, and branch following.
//!
//! Sweeps track equilibria of the translation-reduced core, so the two
//! neutral phase directions never pollute the stability counts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_equilibrium, classify_orbit, Label, CLASSIFY_TOL};
use crate::dynamics::{
    find_attractor_orbit, find_periodic_orbit, floquet_multipliers, multiplier_verdict,
    EquilibriumResult, IntegratorConfig, NewtonConfig, OrbitSpace, PeriodicOrbit, Section,
    ShootingConfig, {find_equilibrium, flow},
};
use crate::error::{Error, Result};
use crate::models::{
    axis_subspace_embedding, diagonal_subspace_embedding, ModelParams, Restricted, Stability,
    SystemSpec, VectorField,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Core equilibrium state, when the Newton solve succeeded.
    pub state: Option<Vec<f64>>,
    pub residual: f64,
    pub eigenvalues: Vec<Complex64>,
    pub label: Option<Label>,
    pub failed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: String,
    pub base: ModelParams,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BifurcationKind {
    Pitchfork,
    Hopf,
    TakensBogdanov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationEvent {
    pub kind: BifurcationKind,
    pub value: f64,
    pub critical_eigenvalues: Vec<Complex64>,
    /// Oscillation frequency at onset; Hopf events only.
    pub frequency: Option<f64>,
}

fn params_at(base: &ModelParams, name: &str, value: f64) -> Result<ModelParams> {
    let mut p = *base;
    p.set_named(name, value)?;
    Ok(p)
}

/// Closed-form squares state of the core at the given parameters (zero
/// amplitude when the branch does not exist).
pub fn squares_core_state(p: &ModelParams) -> [f64; 6] {
    let amp_sq = if 2.0 + p.beta > 0.0 { (p.mu / (2.0 + p.beta)).max(0.0) } else { 0.0 };
    let r = amp_sq.sqrt();
    [r, 0.0, 0.0, r, 0.0, 0.0]
}

fn solve_at(
    base: &ModelParams,
    name: &str,
    value: f64,
    seed: &[f64],
) -> Result<(ModelParams, EquilibriumResult)> {
    let p = params_at(base, name, value)?;
    let spec = SystemSpec::PolarCore(p);
    let res = find_equilibrium(&spec, seed, &NewtonConfig::default())?;
    Ok((p, res))
}

/// Sweep one parameter over `[lo, hi]` in increments of `step`, tracking the
/// squares equilibrium by continuation (the previous solution seeds the next
/// Newton solve). Newton failures are recorded per point and the sweep
/// continues from the closed form.
pub fn sweep_parameter(
    base: &ModelParams,
    name: &str,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<SweepResult> {
    if !(step > 0.0) {
        return Err(Error::InvalidParams("sweep step must be positive".into()));
    }
    if lo > hi {
        return Err(Error::InvalidParams("sweep needs lo <= hi".into()));
    }
    let mut values = Vec::new();
    let mut v = lo;
    while v <= hi + 0.5 * step {
        values.push(v.min(hi));
        v += step;
    }
    values.dedup_by(|a, b| (*a - *b).abs() < f64::EPSILON);

    let mut points = Vec::with_capacity(values.len());
    let mut seed: Option<Vec<f64>> = None;
    for &value in &values {
        let p = params_at(base, name, value)?;
        let fallback = squares_core_state(&p).to_vec();
        let guess = seed.clone().unwrap_or_else(|| fallback.clone());
        let solved = solve_at(base, name, value, &guess)
            .or_else(|_| solve_at(base, name, value, &fallback));
        match solved {
            Ok((p, res)) => {
                let label = classify_equilibrium(&res.state, &p, 1e-6).ok().map(|l| l.label);
                seed = Some(res.state.clone());
                points.push(SweepPoint {
                    value,
                    state: Some(res.state),
                    residual: res.residual_norm,
                    eigenvalues: res.eigenvalues,
                    label,
                    failed: false,
                });
            }
            Err(_) => {
                seed = None;
                points.push(SweepPoint {
                    value,
                    state: None,
                    residual: f64::NAN,
                    eigenvalues: Vec::new(),
                    label: None,
                    failed: true,
                });
            }
        }
    }
    Ok(SweepResult { param: name.to_string(), base: *base, points })
}

const RE_DEAD_ZONE: f64 = 1e-9;

fn unstable_count(eigs: &[Complex64]) -> usize {
    eigs.iter().filter(|e| e.re > RE_DEAD_ZONE).count()
}

/// Locate eigenvalue crossings between consecutive sweep points and refine
/// each by bisection on the continued equilibrium (re-solving at every trial
/// parameter) down to a parameter bracket of 1e-9.
pub fn detect_bifurcations(sr: &SweepResult) -> Result<Vec<BifurcationEvent>> {
    let mut events = Vec::new();
    let ok_points: Vec<&SweepPoint> = sr.points.iter().filter(|p| !p.failed).collect();
    for w in ok_points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (na, nb) = (unstable_count(&a.eigenvalues), unstable_count(&b.eigenvalues));
        if na == nb {
            continue;
        }
        if let Some(ev) = refine_crossing(sr, a, b, na)? {
            events.push(ev);
        }
    }
    Ok(events)
}

fn refine_crossing(
    sr: &SweepResult,
    a: &SweepPoint,
    b: &SweepPoint,
    count_lo: usize,
) -> Result<Option<BifurcationEvent>> {
    let mut lo = a.value;
    let mut hi = b.value;
    let mut seed_lo = a.state.clone().expect("ok point has a state");
    let mut seed_hi = b.state.clone().expect("ok point has a state");

    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let seed: Vec<f64> =
            seed_lo.iter().zip(&seed_hi).map(|(x, y)| 0.5 * (x + y)).collect();
        let Ok((_, res)) = solve_at(&sr.base, &sr.param, mid, &seed) else {
            return Ok(None); // branch lost inside the bracket
        };
        if unstable_count(&res.eigenvalues) == count_lo {
            lo = mid;
            seed_lo = res.state;
        } else {
            hi = mid;
            seed_hi = res.state;
        }
    }

    let value = 0.5 * (lo + hi);
    let (_, res) = solve_at(&sr.base, &sr.param, value, &seed_lo)?;
    let critical: Vec<Complex64> =
        res.eigenvalues.iter().copied().filter(|e| e.re.abs() <= 1e-4).collect();
    if critical.is_empty() {
        return Ok(None);
    }
    let max_mod = critical.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let max_im = critical.iter().map(|e| e.im.abs()).fold(0.0, f64::max);

    let kind = if critical.len() >= 4 && max_mod <= 1e-3 {
        BifurcationKind::TakensBogdanov
    } else if max_im > 1e-6 {
        BifurcationKind::Hopf
    } else {
        BifurcationKind::Pitchfork
    };
    let frequency = match kind {
        BifurcationKind::Hopf => Some(max_im),
        _ => None,
    };
    Ok(Some(BifurcationEvent { kind, value, critical_eigenvalues: critical, frequency }))
}

/// Which branch to follow away from a bifurcation event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchSelector {
    /// Travelling squares with x shear (from the pitchfork).
    TsqX,
    /// Diagonally travelling squares (from the pitchfork).
    Dtsq,
    /// Pulsating squares inside `{cy = dy = 0}` (from the Hopf).
    PsqAxis,
    /// Diagonally pulsating squares inside the diagonal subspace.
    DpsqDiagonal,
    /// Alternating pulsating waves in the full core.
    ApwCore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub value: f64,
    /// Shear amplitude: max |cx| for equilibria, max |cx| over the orbit for
    /// periodic branches.
    pub amplitude: f64,
    pub label: Label,
    pub stability: Stability,
    pub period: Option<f64>,
    /// Core equilibrium state (equilibrium branches only).
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchData {
    pub selector: BranchSelector,
    pub points: Vec<BranchPoint>,
    /// Set when continuation stopped before completing all steps.
    pub stopped: Option<String>,
}

/// Natural-parameter continuation of a bifurcating branch. `step` is signed;
/// `n_steps` points are attempted starting one step away from the event.
pub fn follow_branch(
    base: &ModelParams,
    param: &str,
    event: &BifurcationEvent,
    selector: BranchSelector,
    step: f64,
    n_steps: usize,
) -> Result<BranchData> {
    if step == 0.0 {
        return Err(Error::InvalidParams("continuation step must be nonzero".into()));
    }
    match selector {
        BranchSelector::TsqX | BranchSelector::Dtsq => {
            follow_equilibrium_branch(base, param, event, selector, step, n_steps)
        }
        _ => follow_periodic_branch(base, param, event, selector, step, n_steps),
    }
}

fn follow_equilibrium_branch(
    base: &ModelParams,
    param: &str,
    event: &BifurcationEvent,
    selector: BranchSelector,
    step: f64,
    n_steps: usize,
) -> Result<BranchData> {
    let mut points = Vec::new();
    let mut stopped = None;
    let mut seed: Option<Vec<f64>> = None;

    for i in 1..=n_steps {
        let value = event.value + step * i as f64;
        let p = params_at(base, param, value)?;
        let guess = match &seed {
            Some(s) => s.clone(),
            None => {
                // shear seed along the critical null direction (c = d)
                let mut g = squares_core_state(&p).to_vec();
                let eps = 1e-2;
                match selector {
                    BranchSelector::TsqX => {
                        g[1] += eps;
                        g[2] += eps;
                    }
                    BranchSelector::Dtsq => {
                        g[1] += eps;
                        g[2] += eps;
                        g[4] += eps;
                        g[5] += eps;
                    }
                    _ => unreachable!(),
                }
                g
            }
        };
        let spec = SystemSpec::PolarCore(p);
        match find_equilibrium(&spec, &guess, &NewtonConfig::default()) {
            Ok(res) => {
                // shear gone means we fell back onto the squares branch
                let shear = res.state[1].abs().max(res.state[4].abs());
                if shear < 1e-10 {
                    stopped = Some(format!("branch does not exist at {param} = {value}"));
                    break;
                }
                let label =
                    classify_equilibrium(&res.state, &p, 1e-6).map(|l| l.label).unwrap_or(Label::Unknown);
                let stability = if res
                    .eigenvalues
                    .iter()
                    .any(|e| e.re > 1e-9)
                {
                    Stability::Unstable
                } else {
                    Stability::Stable
                };
                points.push(BranchPoint {
                    value,
                    amplitude: res.state[1].abs(),
                    label,
                    stability,
                    period: None,
                    state: Some(res.state.clone()),
                });
                seed = Some(res.state);
            }
            Err(e) => {
                stopped = Some(format!("continuation failed at {param} = {value}: {e}"));
                break;
            }
        }
        if points.is_empty() && i == 1 {
            stopped = Some("branch does not exist in this direction".into());
            break;
        }
    }
    if points.is_empty() && stopped.is_none() {
        stopped = Some("no steps requested".into());
    }
    Ok(BranchData { selector, points, stopped })
}

fn follow_periodic_branch(
    base: &ModelParams,
    param: &str,
    event: &BifurcationEvent,
    selector: BranchSelector,
    step: f64,
    n_steps: usize,
) -> Result<BranchData> {
    let mut points = Vec::new();
    let mut stopped = None;
    let mut prev: Option<PeriodicOrbit> = None;

    for i in 1..=n_steps {
        let value = event.value + step * i as f64;
        let p = params_at(base, param, value)?;
        let orbit = match &prev {
            Some(orbit) => reshoot(&p, selector, orbit),
            None => first_orbit(&p, selector, event),
        };
        match orbit {
            Ok(orbit) => {
                let label = classify_orbit(&orbit, CLASSIFY_TOL)
                    .map(|l| l.label)
                    .unwrap_or(Label::Unknown);
                let full = full_core_multipliers(&p, &orbit);
                let stability = match &full {
                    Ok(m) => multiplier_verdict(m),
                    Err(_) => Stability::Marginal,
                };
                let amplitude = orbit
                    .classification_samples()
                    .iter()
                    .map(|s| s[1].abs())
                    .fold(0.0, f64::max);
                points.push(BranchPoint {
                    value,
                    amplitude,
                    label,
                    stability,
                    period: Some(orbit.period),
                    state: None,
                });
                prev = Some(orbit);
            }
            Err(e) => {
                stopped = Some(format!("continuation failed at {param} = {value}: {e}"));
                break;
            }
        }
    }
    Ok(BranchData { selector, points, stopped })
}

fn selector_space(selector: BranchSelector) -> OrbitSpace {
    match selector {
        BranchSelector::PsqAxis => OrbitSpace::CoreAxisX,
        BranchSelector::DpsqDiagonal => OrbitSpace::CoreDiagonal,
        _ => OrbitSpace::PolarCore,
    }
}

fn with_space<T>(
    p: &ModelParams,
    space: OrbitSpace,
    f: impl Fn(&dyn VectorField) -> Result<T>,
) -> Result<T> {
    let core = SystemSpec::PolarCore(*p);
    match space {
        OrbitSpace::PolarCore => f(&core),
        OrbitSpace::CoreAxisX => f(&Restricted::new(core, axis_subspace_embedding())),
        OrbitSpace::CoreDiagonal => f(&Restricted::new(core, diagonal_subspace_embedding())),
        OrbitSpace::HopfNfAmplitudes => {
            Err(Error::Parse("normal-form orbits are not continued here".into()))
        }
    }
}

fn project_to_space(space: OrbitSpace, core: &[f64]) -> Vec<f64> {
    match space {
        OrbitSpace::PolarCore => core.to_vec(),
        OrbitSpace::CoreAxisX => vec![core[0], core[1], core[2], core[3]],
        OrbitSpace::CoreDiagonal => vec![
            0.5 * (core[0] + core[3]),
            0.5 * (core[1] + core[4]),
            0.5 * (core[2] + core[5]),
        ],
        OrbitSpace::HopfNfAmplitudes => unreachable!(),
    }
}

fn first_orbit(
    p: &ModelParams,
    selector: BranchSelector,
    event: &BifurcationEvent,
) -> Result<PeriodicOrbit> {
    let space = selector_space(selector);
    let freq = event.frequency.unwrap_or(0.4).max(1e-3);
    let _t_estimate = std::f64::consts::TAU / freq;
    // settle from a perturbed squares state inside the subspace
    let mut core = squares_core_state(p).to_vec();
    core[1] += 1e-2;
    core[2] += 1e-2;
    if matches!(selector, BranchSelector::DpsqDiagonal | BranchSelector::ApwCore) {
        core[4] += match selector {
            BranchSelector::ApwCore => 0.7e-2,
            _ => 1e-2,
        };
        core[5] += 1e-2;
    }
    let s0 = project_to_space(space, &core);
    with_space(p, space, |sys| {
        find_attractor_orbit(sys, &s0, 200.0, &[1, 4], space)
    })
}

fn reshoot(
    p: &ModelParams,
    selector: BranchSelector,
    previous: &PeriodicOrbit,
) -> Result<PeriodicOrbit> {
    let space = selector_space(selector);
    let section_coord = pick_section_coord(previous);
    let cfg = ShootingConfig::new(Section::upward(section_coord), space);
    with_space(p, space, |sys| {
        find_periodic_orbit(sys, &previous.samples[0], previous.period, &cfg)
    })
}

fn pick_section_coord(orbit: &PeriodicOrbit) -> usize {
    // the shear coordinate of the orbit's own space: index 1 throughout
    // (rx, cx, dx, ...) and (r, c, d)
    let _ = orbit;
    1
}

/// Multipliers of an orbit transported to the full core.
pub fn full_core_multipliers(p: &ModelParams, orbit: &PeriodicOrbit) -> Result<Vec<Complex64>> {
    let core = SystemSpec::PolarCore(*p);
    let x0 = orbit.space.embed_for_classification(&orbit.samples[0]);
    floquet_multipliers(&core, &x0, orbit.period, &IntegratorConfig::with_tols(1e-12, 1e-10))
}

/// Convenience used by tests and the CLI: settle and refine the attractor
/// orbit of the full core from a given initial state.
pub fn core_attractor_orbit(p: &ModelParams, s0: &[f64], transient: f64) -> Result<PeriodicOrbit> {
    let core = SystemSpec::PolarCore(*p);
    find_attractor_orbit(&core, s0, transient, &[1, 4], OrbitSpace::PolarCore)
}

/// Check that a settled trajectory actually converged (bounded, non-escaping).
pub fn settles(p: &ModelParams, s0: &[f64], t: f64) -> bool {
    let core = SystemSpec::PolarCore(*p);
    flow(&core, s0, t, &IntegratorConfig::default())
        .map(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or(false)
}
