//! Labels equilibria and periodic orbits by their (spatio-temporal) isotropy
//! and computes drift along the group orbit.
//!
//! Classification runs in a translation-reduced space (the polar core for
//! the model, the amplitude space for the Hopf normal form); continuous
//! translations are never searched. Labels are reported up to D4 conjugacy,
//! with the conjugating element recorded.

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_raw, IntegratorConfig, OrbitSpace, PeriodicOrbit};
use crate::error::{Error, Result};
use crate::models::{
    axis_subspace_embedding, diagonal_subspace_embedding, ModelParams, Representation,
    Restricted, SystemSpec, VectorField,
};
use crate::symmetry::{act, Dihedral, GroupElement, SpatioTemporalSymmetry, TemporalShift};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Trivial,
    Rolls,
    Squares,
    TSq,
    DTSq,
    PSq,
    DPSq,
    #[serde(rename = "APW")]
    Apw,
    CrossRollLike,
    Unknown,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Trivial => "Trivial",
            Label::Rolls => "Rolls",
            Label::Squares => "Squares",
            Label::TSq => "TSq",
            Label::DTSq => "DTSq",
            Label::PSq => "PSq",
            Label::DPSq => "DPSq",
            Label::Apw => "APW",
            Label::CrossRollLike => "CrossRollLike",
            Label::Unknown => "Unknown",
        }
    }
}

/// Classification outcome: the label, the detected generating symmetries,
/// the worst deviation over the detected invariance group (relative to the
/// orbit diameter for orbits), and bookkeeping for conjugate branches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionLabel {
    pub label: Label,
    pub generators: Vec<SpatioTemporalSymmetry>,
    pub residual: f64,
    /// +1 for an APW circulating x -> y -> -x -> -y, -1 for the mirror image.
    pub circulation: Option<i8>,
    /// Element conjugating the canonical representative onto this solution,
    /// when it is not the canonical one itself.
    pub conjugating: Option<Dihedral>,
}

/// Default relative tolerance for classifying shooting-refined orbits.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Residual bound for accepting a state as an equilibrium of the core.
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-8;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Classify an equilibrium of the translation-reduced core
/// `[rx, cx, dx, ry, cy, dy]`.
pub fn classify_equilibrium(core: &[f64], p: &ModelParams, tol: f64) -> Result<SolutionLabel> {
    let spec = SystemSpec::PolarCore(*p);
    let residual = sup(&spec.eval_vec(core));
    if residual > EQUILIBRIUM_RESIDUAL_TOL {
        return Err(Error::NotAnEquilibrium { residual });
    }

    let scale = 1.0 + sup(core);
    let small = |v: f64| v.abs() <= tol * scale;
    let (rx, cx, dx, ry, cy, dy) = (core[0], core[1], core[2], core[3], core[4], core[5]);
    let shear_x = !small(cx) || !small(dx);
    let shear_y = !small(cy) || !small(dy);

    let iso = crate::symmetry::isotropy_of_state(Representation::PolarCore, core, tol);
    let static_gens =
        |ds: &[Dihedral]| ds.iter().map(|d| SpatioTemporalSymmetry::spatial(*d)).collect();
    let unknown = |iso: &[Dihedral]| SolutionLabel {
        label: Label::Unknown,
        generators: iso.iter().map(|d| SpatioTemporalSymmetry::spatial(*d)).collect(),
        residual,
        circulation: None,
        conjugating: None,
    };

    let result = if small(rx) && small(ry) && !shear_x && !shear_y {
        SolutionLabel {
            label: Label::Trivial,
            generators: static_gens(&iso),
            residual,
            circulation: None,
            conjugating: None,
        }
    } else if !shear_x && !shear_y && (small(rx) ^ small(ry)) {
        SolutionLabel {
            label: Label::Rolls,
            generators: static_gens(&iso),
            residual,
            circulation: None,
            conjugating: if small(rx) { Some(Dihedral::Md) } else { None },
        }
    } else if !shear_x && !shear_y && small(rx - ry) {
        SolutionLabel {
            label: Label::Squares,
            generators: static_gens(&iso),
            residual,
            circulation: None,
            conjugating: None,
        }
    } else if shear_x ^ shear_y {
        // travelling squares along one axis: isotropy <my> for x travel,
        // <mx> for y travel (conjugate by rq)
        let (gen, conj) =
            if shear_x { (Dihedral::My, None) } else { (Dihedral::Mx, Some(Dihedral::Rq)) };
        if iso.contains(&gen) {
            SolutionLabel {
                label: Label::TSq,
                generators: static_gens(&[gen]),
                residual,
                circulation: None,
                conjugating: conj,
            }
        } else {
            unknown(&iso)
        }
    } else if shear_x && shear_y && small(rx - ry) && small(cx.abs() - cy.abs()) {
        // diagonally travelling squares: <md> when the shears agree in sign,
        // <md'> (conjugate by mx) when they oppose
        let _ = (dx, dy);
        let (gen, conj) = if cx * cy > 0.0 {
            (Dihedral::Md, None)
        } else {
            (Dihedral::Mdp, Some(Dihedral::Mx))
        };
        if iso.contains(&gen) {
            SolutionLabel {
                label: Label::DTSq,
                generators: static_gens(&[gen]),
                residual,
                circulation: None,
                conjugating: conj,
            }
        } else {
            unknown(&iso)
        }
    } else {
        unknown(&iso)
    };
    Ok(result)
}

/// One candidate spatio-temporal pair (dihedral element, fraction of period).
type Pair = (Dihedral, TemporalShift);

fn all_pairs() -> Vec<Pair> {
    let mut out = Vec::new();
    for d in Dihedral::ALL {
        for (m, n) in [(0u32, 1u32), (1, 2), (1, 4), (3, 4)] {
            out.push((d, TemporalShift::new(m, n).unwrap()));
        }
    }
    out
}

fn compose_pairs(a: Pair, b: Pair) -> Pair {
    (a.0.compose(b.0), a.1.compose(&b.1))
}

fn sort_pairs(pairs: &mut [Pair]) {
    pairs.sort_by_key(|(d, f)| {
        (
            Dihedral::ALL.iter().position(|x| x == d).unwrap(),
            f.numer() * (4 / f.denom()),
        )
    });
}

/// Canonical invariance groups of the three Hopf-born orbits together with
/// all their D4 conjugates: (label, circulation, conjugator, four pairs).
fn canonical_orbit_groups() -> Vec<(Label, Option<i8>, Dihedral, Vec<Pair>)> {
    use Dihedral::*;
    let none = TemporalShift::NONE;
    let half = TemporalShift::HALF;
    let quarter = TemporalShift::QUARTER;
    let threeq = TemporalShift::THREE_QUARTERS;

    let base: Vec<(Label, Option<i8>, Vec<Pair>)> = vec![
        (Label::PSq, None, vec![(E, none), (My, none), (Mx, half), (Rq2, half)]),
        (Label::DPSq, None, vec![(E, none), (Md, none), (Mdp, half), (Rq2, half)]),
        (Label::Apw, Some(1), vec![(E, none), (Rq, quarter), (Rq2, half), (Rq3, threeq)]),
    ];

    let mut out: Vec<(Label, Option<i8>, Dihedral, Vec<Pair>)> = Vec::new();
    for (label, circ, group) in base {
        for h in Dihedral::ALL {
            let mut conj: Vec<Pair> =
                group.iter().map(|(d, f)| (d.conjugate_by(h), *f)).collect();
            sort_pairs(&mut conj);
            if out.iter().any(|(l, _, _, g)| *l == label && *g == conj) {
                continue;
            }
            // reflections reverse an APW's circulation
            let circ = circ.map(|c| if h.is_rotation() { c } else { -c });
            out.push((label, circ, h, conj));
        }
    }
    out
}

/// Deviation of the orbit from invariance under (gamma, m/n): transformed
/// samples against the cyclically shifted sample set, relative to the orbit
/// diameter. Sample counts divisible by 4 make the shifts exact.
fn pair_deviation(repr: Representation, samples: &[Vec<f64>], diameter: f64, pair: Pair) -> f64 {
    let n = samples.len();
    let shift = (pair.1.numer() as usize * n) / pair.1.denom() as usize;
    let g = GroupElement::from_dihedral(pair.0);
    let mut worst = 0.0f64;
    for (i, s) in samples.iter().enumerate() {
        let moved = act(repr, &g, 1.0, s);
        let target = &samples[(i + shift) % n];
        for (a, b) in moved.iter().zip(target) {
            worst = worst.max((a - b).abs());
        }
    }
    worst / diameter
}

/// Classify a refined periodic orbit by assembling its spatio-temporal
/// invariance group over D4 x {0, T/4, T/2, 3T/4} and matching it against
/// the PSq / DPSq / APW isotropy groups up to conjugacy.
pub fn classify_orbit(orbit: &PeriodicOrbit, tol: f64) -> Result<SolutionLabel> {
    let samples = orbit.classification_samples();
    let repr = orbit.space.classification_representation();
    let n = samples.len();
    if n < 8 {
        return Err(Error::DegenerateOrbit(format!("only {n} samples")));
    }
    if n % 4 != 0 {
        return Err(Error::DegenerateOrbit("sample count must be divisible by 4".into()));
    }
    let diameter = sample_diameter(&samples);
    if diameter < 1e-10 {
        return Err(Error::DegenerateOrbit(format!("diameter {diameter:.3e}")));
    }

    let mut detected: Vec<(Pair, f64)> = Vec::new();
    for pair in all_pairs() {
        let dev = pair_deviation(repr, &samples, diameter, pair);
        if dev <= tol {
            detected.push((pair, dev));
        }
    }
    // enforce closure under composition, dropping the worst deviations first
    detected.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    while !is_closed(&detected) {
        detected.pop();
    }
    let mut group: Vec<Pair> = detected.iter().map(|(p, _)| *p).collect();
    sort_pairs(&mut group);
    let residual = detected
        .iter()
        .filter(|((d, f), _)| !(*d == Dihedral::E && f.numer() == 0))
        .map(|(_, dev)| *dev)
        .fold(0.0, f64::max);

    for (label, circulation, conjugator, canonical) in canonical_orbit_groups() {
        if group == canonical {
            return Ok(SolutionLabel {
                label,
                generators: generators_for(label, &group),
                residual,
                circulation,
                conjugating: if conjugator == Dihedral::E { None } else { Some(conjugator) },
            });
        }
    }

    if group.len() > 1 {
        // nontrivial but matching none of the three: cross-roll analogue when
        // it sits strictly inside one of them, otherwise unknown
        let inside = canonical_orbit_groups()
            .iter()
            .any(|(_, _, _, g)| group.iter().all(|p| g.contains(p)));
        return Ok(SolutionLabel {
            label: if inside { Label::CrossRollLike } else { Label::Unknown },
            generators: generators_for(Label::Unknown, &group),
            residual,
            circulation: None,
            conjugating: None,
        });
    }

    Ok(SolutionLabel {
        label: Label::Unknown,
        generators: Vec::new(),
        residual,
        circulation: None,
        conjugating: None,
    })
}

fn sample_diameter(samples: &[Vec<f64>]) -> f64 {
    let dim = samples[0].len();
    let mut d = 0.0f64;
    for c in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            lo = lo.min(s[c]);
            hi = hi.max(s[c]);
        }
        d = d.max(hi - lo);
    }
    d
}

fn is_closed(detected: &[(Pair, f64)]) -> bool {
    let pairs: Vec<Pair> = detected.iter().map(|(p, _)| *p).collect();
    pairs
        .iter()
        .all(|a| pairs.iter().all(|b| pairs.contains(&compose_pairs(*a, *b))))
}

fn generators_for(label: Label, group: &[Pair]) -> Vec<SpatioTemporalSymmetry> {
    match label {
        Label::Apw => group
            .iter()
            .filter(|(_, f)| f.denom() == 4 && f.numer() == 1)
            .map(|(d, f)| SpatioTemporalSymmetry::new(*d, *f))
            .collect(),
        Label::PSq | Label::DPSq => {
            let mut gens: Vec<SpatioTemporalSymmetry> = group
                .iter()
                .filter(|(d, f)| f.numer() == 0 && *d != Dihedral::E)
                .map(|(d, f)| SpatioTemporalSymmetry::new(*d, *f))
                .collect();
            gens.extend(
                group
                    .iter()
                    .filter(|(d, f)| f.denom() == 2 && *d != Dihedral::Rq2)
                    .map(|(d, f)| SpatioTemporalSymmetry::new(*d, *f)),
            );
            gens
        }
        _ => group
            .iter()
            .filter(|(d, f)| !(*d == Dihedral::E && f.numer() == 0))
            .map(|(d, f)| SpatioTemporalSymmetry::new(*d, *f))
            .collect(),
    }
}

/// Drift of a solution along the group orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftProfile {
    /// Steady drift rate (dphi_x/dt, dphi_y/dt); equilibria only.
    pub rate: Option<(f64, f64)>,
    /// Net drift per period (orbits; zero for equilibria).
    pub net: (f64, f64),
    /// Drift over each quarter period.
    pub quarters: [(f64, f64); 4],
    /// Peak |phi| excursion over one period.
    pub peak: (f64, f64),
}

/// Drift rate of a core equilibrium: `dphi/dt = D (cx, cy)`.
pub fn drift_profile_equilibrium(core: &[f64], p: &ModelParams) -> DriftProfile {
    DriftProfile {
        rate: Some((p.d * core[1], p.d * core[4])),
        net: (0.0, 0.0),
        quarters: [(0.0, 0.0); 4],
        peak: (0.0, 0.0),
    }
}

/// Base system augmented by the two drift phases, integrated to accumulate
/// displacement along the group orbit.
struct WithDrift<'a, F: VectorField> {
    base: &'a F,
    space: OrbitSpace,
    /// Shear-drift coefficient for core spaces; complex D for the Hopf form.
    d_shear: f64,
    d_complex: num_complex::Complex64,
}

impl<F: VectorField> VectorField for WithDrift<'_, F> {
    fn dim(&self) -> usize {
        self.base.dim() + 2
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        let n = self.base.dim();
        self.base.eval(&s[..n], &mut out[..n]);
        match self.space {
            OrbitSpace::HopfNfAmplitudes => {
                let vx = num_complex::Complex64::new(s[0], s[1]);
                let vy = num_complex::Complex64::new(s[2], s[3]);
                out[n] = (self.d_complex * vx).re;
                out[n + 1] = (self.d_complex * vy).re;
            }
            space => {
                let core = space.embed_for_classification(&s[..n]);
                out[n] = self.d_shear * core[1];
                out[n + 1] = self.d_shear * core[4];
            }
        }
    }

    fn jacobian(&self, _s: &[f64]) -> nalgebra::DMatrix<f64> {
        unreachable!("drift augmentation is only time-integrated")
    }
}

/// Integrate the drift equations along one period of a refined orbit,
/// splitting the displacement into the four quarter-period contributions.
pub fn drift_profile_orbit(orbit: &PeriodicOrbit, spec: &SystemSpec) -> Result<DriftProfile> {
    match (orbit.space, spec) {
        (OrbitSpace::HopfNfAmplitudes, SystemSpec::HopfNfAmplitudes(p))
        | (OrbitSpace::HopfNfAmplitudes, SystemSpec::HopfNf(p)) => {
            let base = SystemSpec::HopfNfAmplitudes(*p);
            let aug = WithDrift {
                base: &base,
                space: orbit.space,
                d_shear: 0.0,
                d_complex: p.d_c(),
            };
            integrate_drift(&aug, orbit)
        }
        (space, s) => {
            let p = *s
                .model_params()
                .ok_or_else(|| Error::Parse("orbit space does not match the system".into()))?;
            let core = SystemSpec::PolarCore(p);
            match space {
                OrbitSpace::PolarCore => {
                    let aug = WithDrift {
                        base: &core,
                        space,
                        d_shear: p.d,
                        d_complex: num_complex::Complex64::ZERO,
                    };
                    integrate_drift(&aug, orbit)
                }
                OrbitSpace::CoreAxisX => {
                    let restricted = Restricted::new(core, axis_subspace_embedding());
                    let aug = WithDrift {
                        base: &restricted,
                        space,
                        d_shear: p.d,
                        d_complex: num_complex::Complex64::ZERO,
                    };
                    integrate_drift(&aug, orbit)
                }
                OrbitSpace::CoreDiagonal => {
                    let restricted = Restricted::new(core, diagonal_subspace_embedding());
                    let aug = WithDrift {
                        base: &restricted,
                        space,
                        d_shear: p.d,
                        d_complex: num_complex::Complex64::ZERO,
                    };
                    integrate_drift(&aug, orbit)
                }
                OrbitSpace::HopfNfAmplitudes => unreachable!(),
            }
        }
    }
}

fn integrate_drift<F: VectorField>(aug: &F, orbit: &PeriodicOrbit) -> Result<DriftProfile> {
    let n = orbit.dim();
    let mut s0 = orbit.samples[0].clone();
    s0.push(0.0);
    s0.push(0.0);
    let cfg = IntegratorConfig {
        max_step: orbit.period / 512.0,
        ..IntegratorConfig::with_tols(1e-12, 1e-10)
    };
    let traj = integrate_raw(aug, &s0, (0.0, orbit.period), &cfg)?;

    let phi_at = |t: f64| -> (f64, f64) {
        let s = traj.sample(t);
        (s[n], s[n + 1])
    };
    let mut quarters = [(0.0, 0.0); 4];
    let mut prev = (0.0, 0.0);
    for (j, q) in quarters.iter_mut().enumerate() {
        let t = orbit.period * (j + 1) as f64 / 4.0;
        let phi = phi_at(t);
        *q = (phi.0 - prev.0, phi.1 - prev.1);
        prev = phi;
    }
    let net = phi_at(orbit.period);

    let mut peak = (0.0f64, 0.0f64);
    for s in &traj.states {
        peak.0 = peak.0.max(s[n].abs());
        peak.1 = peak.1.max(s[n + 1].abs());
    }
    Ok(DriftProfile { rate: None, net, quarters, peak })
}

/// Check the APW quarter-drift pattern: each quarter's drift vector is the
/// previous one rotated by 90 degrees, the `+x, +y, -x, -y` cycle up to
/// conjugacy and starting phase. Returns the circulation sign, or None when
/// the pattern fails at `tol` (relative to the peak quarter drift).
pub fn apw_quarter_pattern(quarters: &[(f64, f64); 4], tol: f64) -> Option<i8> {
    let scale = quarters.iter().map(|q| q.0.abs().max(q.1.abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for sign in [1.0f64, -1.0] {
        // rotation by +90: (x, y) -> (-y, x); by -90: (x, y) -> (y, -x)
        let ok = (0..4).all(|j| {
            let a = quarters[j];
            let b = quarters[(j + 1) % 4];
            let rot = (-sign * a.1, sign * a.0);
            (b.0 - rot.0).abs() <= tol * scale && (b.1 - rot.1).abs() <= tol * scale
        });
        if ok {
            return Some(sign as i8);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{tsq_branch, TravellingKind};

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn squares_equilibrium_label() {
        let r = 2.0f64.sqrt();
        let core = [r, 0.0, 0.0, r, 0.0, 0.0];
        let lab = classify_equilibrium(&core, &p(), 1e-8).unwrap();
        assert_eq!(lab.label, Label::Squares);
        assert_eq!(lab.generators.len(), 8); // full D4
    }

    #[test]
    fn trivial_and_rolls_labels() {
        let lab = classify_equilibrium(&[0.0; 6], &p(), 1e-8).unwrap();
        assert_eq!(lab.label, Label::Trivial);

        let params = ModelParams { beta: 0.5, mu: 1.0, ..p() };
        let core = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let lab = classify_equilibrium(&core, &params, 1e-8).unwrap();
        assert_eq!(lab.label, Label::Rolls);
    }

    #[test]
    fn tsq_label_with_my_generator() {
        let params = ModelParams { mu: 1.2, ..p() };
        let b = tsq_branch(&params, TravellingKind::Tsq).unwrap();
        let lab = classify_equilibrium(&b.core_state, &params, 1e-8).unwrap();
        assert_eq!(lab.label, Label::TSq);
        assert_eq!(lab.generators.len(), 1);
        assert_eq!(lab.generators[0].spatial.dihedral, Dihedral::My);
        assert!(lab.conjugating.is_none());

        // conjugate travelling in y
        let c = b.core_state;
        let core_y = [c[3], c[4], c[5], c[0], c[1], c[2]];
        let lab = classify_equilibrium(&core_y, &params, 1e-8).unwrap();
        assert_eq!(lab.label, Label::TSq);
        assert_eq!(lab.conjugating, Some(Dihedral::Rq));
    }

    #[test]
    fn dtsq_label() {
        let params = ModelParams { mu: 1.2, ..p() };
        let b = tsq_branch(&params, TravellingKind::Dtsq).unwrap();
        let lab = classify_equilibrium(&b.core_state, &params, 1e-8).unwrap();
        assert_eq!(lab.label, Label::DTSq);
        assert_eq!(lab.generators[0].spatial.dihedral, Dihedral::Md);

        // anti-diagonal conjugate
        let mut anti = b.core_state;
        anti[4] = -anti[4];
        anti[5] = -anti[5];
        let lab = classify_equilibrium(&anti, &params, 1e-8).unwrap();
        assert_eq!(lab.label, Label::DTSq);
        assert_eq!(lab.generators[0].spatial.dihedral, Dihedral::Mdp);
    }

    #[test]
    fn non_equilibrium_rejected() {
        let core = [1.0, 0.5, 0.2, 0.3, 0.1, 0.0];
        assert!(matches!(
            classify_equilibrium(&core, &p(), 1e-8),
            Err(Error::NotAnEquilibrium { .. })
        ));
    }

    fn synthetic_orbit(samples: Vec<Vec<f64>>, space: OrbitSpace) -> PeriodicOrbit {
        PeriodicOrbit { samples, period: 10.0, residual: 0.0, multipliers: vec![], space }
    }

    #[test]
    fn synthetic_psq_orbit_classifies() {
        // cx oscillates, cy identically zero; rx, ry move at twice the
        // frequency so t_h maps the orbit onto itself with cx negated
        let n = 64;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / n as f64;
                vec![
                    1.4 + 0.1 * (2.0 * th).cos(),
                    0.5 * th.cos(),
                    0.3 * th.cos(),
                    1.3 + 0.05 * (2.0 * th).sin(),
                    0.0,
                    0.0,
                ]
            })
            .collect();
        let orbit = synthetic_orbit(samples, OrbitSpace::PolarCore);
        let lab = classify_orbit(&orbit, 1e-6).unwrap();
        assert_eq!(lab.label, Label::PSq);
        let gens: Vec<String> = lab.generators.iter().map(|g| g.to_string()).collect();
        assert!(gens.contains(&"my".to_string()), "{gens:?}");
        assert!(gens.contains(&"th*mx".to_string()), "{gens:?}");
    }

    #[test]
    fn synthetic_apw_orbit_classifies() {
        // built to satisfy state(t + T/4) = rq state(t):
        // rq: (rx,cx,dx,ry,cy,dy) -> (ry,cy,dy,rx,-cx,-dx)
        let n = 64;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / n as f64;
                vec![
                    1.2 + 0.1 * (2.0 * th).cos(),
                    th.cos(),
                    0.5 * th.cos(),
                    1.2 - 0.1 * (2.0 * th).cos(),
                    -th.sin(),
                    -0.5 * th.sin(),
                ]
            })
            .collect();
        let orbit = synthetic_orbit(samples, OrbitSpace::PolarCore);
        let lab = classify_orbit(&orbit, 1e-6).unwrap();
        assert_eq!(lab.label, Label::Apw, "{lab:?}");
        assert!(lab.circulation.is_some());
        let gens: Vec<String> = lab.generators.iter().map(|g| g.to_string()).collect();
        assert_eq!(gens.len(), 1);
        assert!(gens[0] == "tq*rq" || gens[0] == "tq*rq3", "{gens:?}");
    }

    #[test]
    fn label_is_equivariant_under_d4() {
        // transform the synthetic APW orbit by every dihedral element: the
        // label stays APW and the residual is identical
        let n = 64;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / n as f64;
                vec![
                    1.2 + 0.1 * (2.0 * th).cos(),
                    th.cos(),
                    0.5 * th.cos(),
                    1.2 - 0.1 * (2.0 * th).cos(),
                    -th.sin(),
                    -0.5 * th.sin(),
                ]
            })
            .collect();
        let orbit = synthetic_orbit(samples.clone(), OrbitSpace::PolarCore);
        let base = classify_orbit(&orbit, 1e-6).unwrap();
        for d in Dihedral::ALL {
            let g = GroupElement::from_dihedral(d);
            let moved: Vec<Vec<f64>> = samples
                .iter()
                .map(|s| act(Representation::PolarCore, &g, 1.0, s))
                .collect();
            let orbit_g = synthetic_orbit(moved, OrbitSpace::PolarCore);
            let lab = classify_orbit(&orbit_g, 1e-6).unwrap();
            assert_eq!(lab.label, base.label, "{d:?}");
            assert!((lab.residual - base.residual).abs() <= 1e-12, "{d:?}");
        }
    }

    #[test]
    fn degenerate_orbit_rejected() {
        let samples = vec![vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]; 64];
        let orbit = synthetic_orbit(samples, OrbitSpace::PolarCore);
        assert!(matches!(classify_orbit(&orbit, 1e-6), Err(Error::DegenerateOrbit(_))));
    }

    #[test]
    fn tsq_drift_rate() {
        let params = ModelParams { mu: 1.2, ..p() };
        let b = tsq_branch(&params, TravellingKind::Tsq).unwrap();
        let d = drift_profile_equilibrium(&b.core_state, &params);
        let rate = d.rate.unwrap();
        assert!((rate.0 - 0.3f64.sqrt()).abs() < 1e-14);
        assert_eq!(rate.1, 0.0);
    }

    #[test]
    fn apw_pattern_detector() {
        let q = [(2.0, -1.5), (1.5, 2.0), (-2.0, 1.5), (-1.5, -2.0)];
        assert_eq!(apw_quarter_pattern(&q, 1e-9), Some(1));
        let qm = [(2.0, 1.5), (1.5, -2.0), (-2.0, -1.5), (-1.5, 2.0)];
        assert_eq!(apw_quarter_pattern(&qm, 1e-9), Some(-1));
        let bad = [(2.0, 0.0), (2.0, 0.0), (-2.0, 0.0), (-2.0, 0.0)];
        assert_eq!(apw_quarter_pattern(&bad, 1e-9), None);
    }
}
