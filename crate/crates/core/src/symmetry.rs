//! The symmetry group Gamma = D4 x T^2 and the discrete temporal shifts,
//! its actions on every state representation, isotropy detection, and the
//! equivariance residual.
//!
//! Dihedral elements act on the plane as signed permutations; an element
//! together with a translation acts affinely, `s -> M s + delta`. Group
//! composition follows function composition: `compose(g1, g2)` acts as `g1`
//! after `g2`. Translations are kept as unwrapped reals; modular reduction to
//! `[0, 2 pi / k)` happens only in comparisons and display, so cumulative
//! drift can be represented.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Representation, SystemSpec, VectorField};

/// The eight point symmetries of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dihedral {
    /// Identity.
    E,
    /// Quarter-turn rotation, `rq = md . mx`.
    Rq,
    /// Half-turn rotation.
    Rq2,
    /// Three-quarter-turn rotation.
    Rq3,
    /// Reflection x -> -x.
    Mx,
    /// Reflection y -> -y, `my = md . mx . md`.
    My,
    /// Reflection in the diagonal, swapping x and y.
    Md,
    /// Reflection in the other diagonal, `md' = mx . md . mx`.
    Mdp,
}

/// The two generating reflections; every dihedral element is a word in them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reflection {
    Mx,
    Md,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::E,
        Dihedral::Rq,
        Dihedral::Rq2,
        Dihedral::Rq3,
        Dihedral::Mx,
        Dihedral::My,
        Dihedral::Md,
        Dihedral::Mdp,
    ];

    /// Action on plane coordinates, as a signed permutation matrix.
    pub fn matrix(self) -> [[i8; 2]; 2] {
        match self {
            Dihedral::E => [[1, 0], [0, 1]],
            Dihedral::Rq => [[0, 1], [-1, 0]],   // (x, y) -> (y, -x)
            Dihedral::Rq2 => [[-1, 0], [0, -1]],
            Dihedral::Rq3 => [[0, -1], [1, 0]],
            Dihedral::Mx => [[-1, 0], [0, 1]],
            Dihedral::My => [[1, 0], [0, -1]],
            Dihedral::Md => [[0, 1], [1, 0]],
            Dihedral::Mdp => [[0, -1], [-1, 0]],
        }
    }

    fn from_matrix(m: [[i8; 2]; 2]) -> Dihedral {
        for d in Dihedral::ALL {
            if d.matrix() == m {
                return d;
            }
        }
        unreachable!("not a signed permutation of D4: {m:?}")
    }

    /// `self` after `other` (function composition).
    pub fn compose(self, other: Dihedral) -> Dihedral {
        let a = self.matrix();
        let b = other.matrix();
        let mut m = [[0i8; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Dihedral::from_matrix(m)
    }

    pub fn inverse(self) -> Dihedral {
        for d in Dihedral::ALL {
            if self.compose(d) == Dihedral::E {
                return d;
            }
        }
        unreachable!()
    }

    pub fn order(self) -> u32 {
        let mut g = self;
        let mut n = 1;
        while g != Dihedral::E {
            g = g.compose(self);
            n += 1;
        }
        n
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Dihedral::E | Dihedral::Rq | Dihedral::Rq2 | Dihedral::Rq3)
    }

    /// Decomposition into generating reflections, applied right to left.
    pub fn word(self) -> &'static [Reflection] {
        use Reflection::{Md, Mx};
        match self {
            Dihedral::E => &[],
            Dihedral::Mx => &[Mx],
            Dihedral::Md => &[Md],
            Dihedral::My => &[Md, Mx, Md],
            Dihedral::Mdp => &[Mx, Md, Mx],
            Dihedral::Rq => &[Md, Mx],
            Dihedral::Rq3 => &[Mx, Md],
            Dihedral::Rq2 => &[Md, Mx, Md, Mx],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dihedral::E => "e",
            Dihedral::Rq => "rq",
            Dihedral::Rq2 => "rq2",
            Dihedral::Rq3 => "rq3",
            Dihedral::Mx => "mx",
            Dihedral::My => "my",
            Dihedral::Md => "md",
            Dihedral::Mdp => "mdp",
        }
    }

    pub fn parse(s: &str) -> Result<Dihedral> {
        Dihedral::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown dihedral element `{s}`")))
    }

    /// Conjugate `h self h^-1`.
    pub fn conjugate_by(self, h: Dihedral) -> Dihedral {
        h.compose(self).compose(h.inverse())
    }
}

/// An element of D4 x T^2: dihedral part plus torus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub dihedral: Dihedral,
    pub translation: [f64; 2],
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { dihedral: Dihedral::E, translation: [0.0, 0.0] }
    }

    pub fn from_dihedral(d: Dihedral) -> Self {
        Self { dihedral: d, translation: [0.0, 0.0] }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { dihedral: Dihedral::E, translation: [dx, dy] }
    }

    /// `self` after `other`: `(M1, t1)(M2, t2) = (M1 M2, M1 t2 + t1)`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let m = self.dihedral.matrix();
        let rotated = [
            m[0][0] as f64 * other.translation[0] + m[0][1] as f64 * other.translation[1],
            m[1][0] as f64 * other.translation[0] + m[1][1] as f64 * other.translation[1],
        ];
        GroupElement {
            dihedral: self.dihedral.compose(other.dihedral),
            translation: [rotated[0] + self.translation[0], rotated[1] + self.translation[1]],
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let dinv = self.dihedral.inverse();
        let m = dinv.matrix();
        GroupElement {
            dihedral: dinv,
            translation: [
                -(m[0][0] as f64 * self.translation[0] + m[0][1] as f64 * self.translation[1]),
                -(m[1][0] as f64 * self.translation[0] + m[1][1] as f64 * self.translation[1]),
            ],
        }
    }

    /// Translation reduced to `[0, 2 pi / k)`, for comparison and display.
    pub fn wrapped_translation(&self, k: f64) -> [f64; 2] {
        let period = 2.0 * std::f64::consts::PI / k;
        [self.translation[0].rem_euclid(period), self.translation[1].rem_euclid(period)]
    }

    pub fn approx_eq(&self, other: &GroupElement, k: f64, tol: f64) -> bool {
        if self.dihedral != other.dihedral {
            return false;
        }
        let period = 2.0 * std::f64::consts::PI / k;
        let a = self.wrapped_translation(k);
        let b = other.wrapped_translation(k);
        (0..2).all(|i| {
            let d = (a[i] - b[i]).abs();
            d <= tol || (period - d) <= tol
        })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let has_t = self.translation[0] != 0.0 || self.translation[1] != 0.0;
        if !has_t {
            return write!(f, "{}", self.dihedral.name());
        }
        if self.dihedral == Dihedral::E {
            return write!(f, "t({},{})", self.translation[0], self.translation[1]);
        }
        // affine action s -> M s + t reads as "translate after rotate"
        write!(
            f,
            "t({},{})*{}",
            self.translation[0],
            self.translation[1],
            self.dihedral.name()
        )
    }
}

impl GroupElement {
    pub fn parse(s: &str) -> Result<GroupElement> {
        let mut out = GroupElement::identity();
        for part in s.split('*') {
            let part = part.trim();
            let e = if let Some(body) = part.strip_prefix("t(").and_then(|p| p.strip_suffix(')')) {
                let nums: Vec<&str> = body.split(',').collect();
                if nums.len() != 2 {
                    return Err(Error::Parse(format!("bad translation `{part}`")));
                }
                let dx: f64 = nums[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad translation `{part}`")))?;
                let dy: f64 = nums[1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad translation `{part}`")))?;
                GroupElement::translation(dx, dy)
            } else {
                GroupElement::from_dihedral(Dihedral::parse(part)?)
            };
            out = out.compose(&e);
        }
        Ok(out)
    }
}

/// A temporal shift by a fraction m/n of the orbit period, n in {1, 2, 4}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalShift {
    num: u8,
    den: u8,
}

impl TemporalShift {
    pub const NONE: TemporalShift = TemporalShift { num: 0, den: 1 };
    /// t_h: advance by half a period.
    pub const HALF: TemporalShift = TemporalShift { num: 1, den: 2 };
    /// t_q: advance by a quarter period.
    pub const QUARTER: TemporalShift = TemporalShift { num: 1, den: 4 };
    pub const THREE_QUARTERS: TemporalShift = TemporalShift { num: 3, den: 4 };

    pub fn new(num: u32, den: u32) -> Result<TemporalShift> {
        if !matches!(den, 1 | 2 | 4) {
            return Err(Error::Parse(format!("temporal denominator must be 1, 2 or 4, got {den}")));
        }
        let num = num % den;
        let g = gcd(num.max(1), den);
        let (num, den) = if num == 0 { (0, 1) } else { (num / g, den / g) };
        Ok(TemporalShift { num: num as u8, den: den as u8 })
    }

    pub fn fraction(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn numer(&self) -> u32 {
        self.num as u32
    }

    pub fn denom(&self) -> u32 {
        self.den as u32
    }

    pub fn compose(&self, other: &TemporalShift) -> TemporalShift {
        let den = lcm(self.den as u32, other.den as u32);
        let num = (self.num as u32 * den / self.den as u32
            + other.num as u32 * den / other.den as u32)
            % den;
        TemporalShift::new(num, den).expect("lcm of {1,2,4} denominators stays in {1,2,4}")
    }

    pub fn name(&self) -> String {
        match (self.num, self.den) {
            (0, _) => String::new(),
            (1, 2) => "th".into(),
            (1, 4) => "tq".into(),
            (3, 4) => "tq3".into(),
            (n, d) => format!("t{n}/{d}"),
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// A spatio-temporal symmetry (gamma, m/n): apply the spatial element and
/// advance time by m/n of the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalSymmetry {
    pub spatial: GroupElement,
    pub temporal: TemporalShift,
}

impl SpatioTemporalSymmetry {
    pub fn spatial(d: Dihedral) -> Self {
        Self { spatial: GroupElement::from_dihedral(d), temporal: TemporalShift::NONE }
    }

    pub fn new(d: Dihedral, shift: TemporalShift) -> Self {
        Self { spatial: GroupElement::from_dihedral(d), temporal: shift }
    }

    pub fn compose(&self, other: &SpatioTemporalSymmetry) -> SpatioTemporalSymmetry {
        SpatioTemporalSymmetry {
            spatial: self.spatial.compose(&other.spatial),
            temporal: self.temporal.compose(&other.temporal),
        }
    }
}

impl fmt::Display for SpatioTemporalSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.temporal.name();
        if t.is_empty() {
            write!(f, "{}", self.spatial)
        } else {
            write!(f, "{t}*{}", self.spatial)
        }
    }
}

impl SpatioTemporalSymmetry {
    pub fn parse(s: &str) -> Result<SpatioTemporalSymmetry> {
        let mut temporal = TemporalShift::NONE;
        let mut spatial = GroupElement::identity();
        for part in s.split('*') {
            match part.trim() {
                "th" => temporal = temporal.compose(&TemporalShift::HALF),
                "tq" => temporal = temporal.compose(&TemporalShift::QUARTER),
                "tq3" => temporal = temporal.compose(&TemporalShift::THREE_QUARTERS),
                other => spatial = spatial.compose(&GroupElement::parse(other)?),
            }
        }
        Ok(SpatioTemporalSymmetry { spatial, temporal })
    }
}

// ---------------------------------------------------------------------------
// Actions on flat states.
// ---------------------------------------------------------------------------

fn apply_mx(repr: Representation, s: &mut [f64]) {
    match repr {
        Representation::Amplitude => s[1] = -s[1], // conj(ax)
        Representation::FullMode => {
            s[1] = -s[1];
            s[2] = -s[2];
            s[3] = -s[3];
        }
        Representation::Polar => {
            s[1] = -s[1]; // theta_x
            s[2] = -s[2];
            s[3] = -s[3];
        }
        Representation::PolarCore => {
            s[1] = -s[1];
            s[2] = -s[2];
        }
        Representation::PitchforkNf => {
            s[0] = -s[0]; // vx
            s[2] = -s[2]; // phix
        }
        Representation::HopfNf => {
            s[0] = -s[0];
            s[1] = -s[1];
            s[4] = -s[4];
        }
        Representation::HopfNfAmplitudes => {
            s[0] = -s[0];
            s[1] = -s[1];
        }
    }
}

fn apply_md(repr: Representation, s: &mut [f64]) {
    match repr {
        Representation::PitchforkNf => {
            s.swap(0, 1); // vx <-> vy
            s.swap(2, 3); // phix <-> phiy
        }
        Representation::HopfNf => {
            s.swap(0, 2);
            s.swap(1, 3);
            s.swap(4, 5);
        }
        _ => {
            // x-block and y-block occupy the two halves
            let half = repr.dim() / 2;
            for i in 0..half {
                s.swap(i, i + half);
            }
        }
    }
}

/// Affine translation action. `k` scales the phase shift of the mode
/// amplitudes; the normal-form drift phases shift by delta directly.
fn apply_translation(repr: Representation, delta: [f64; 2], k: f64, s: &mut [f64]) {
    match repr {
        Representation::Amplitude => {
            rotate_pair(s, 0, k * delta[0]);
            rotate_pair(s, 2, k * delta[1]);
        }
        Representation::FullMode => {
            rotate_pair(s, 0, k * delta[0]);
            rotate_pair(s, 4, k * delta[1]);
        }
        Representation::Polar => {
            s[1] += k * delta[0];
            s[5] += k * delta[1];
        }
        Representation::PolarCore => {}
        Representation::PitchforkNf => {
            s[2] += delta[0];
            s[3] += delta[1];
        }
        Representation::HopfNf => {
            s[4] += delta[0];
            s[5] += delta[1];
        }
        Representation::HopfNfAmplitudes => {}
    }
}

/// Linear part of the translation action (the tangent map). Phase rotations
/// are linear; additive phase shifts drop out.
fn apply_translation_tangent(repr: Representation, delta: [f64; 2], k: f64, s: &mut [f64]) {
    match repr {
        Representation::Amplitude | Representation::FullMode => {
            apply_translation(repr, delta, k, s)
        }
        _ => {}
    }
}

fn rotate_pair(s: &mut [f64], idx: usize, angle: f64) {
    let z = Complex64::new(s[idx], s[idx + 1]) * Complex64::from_polar(1.0, angle);
    s[idx] = z.re;
    s[idx + 1] = z.im;
}

fn apply_dihedral(repr: Representation, d: Dihedral, s: &mut [f64]) {
    for gen in d.word().iter().rev() {
        match gen {
            Reflection::Mx => apply_mx(repr, s),
            Reflection::Md => apply_md(repr, s),
        }
    }
}

/// Apply a group element to a state: `s -> tau_delta (M s)`.
pub fn act(repr: Representation, g: &GroupElement, k: f64, state: &[f64]) -> Vec<f64> {
    debug_assert_eq!(state.len(), repr.dim());
    let mut s = state.to_vec();
    apply_dihedral(repr, g.dihedral, &mut s);
    apply_translation(repr, g.translation, k, &mut s);
    s
}

/// Apply the linear part of a group element to a tangent vector (derivative).
pub fn act_tangent(repr: Representation, g: &GroupElement, k: f64, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(v.len(), repr.dim());
    let mut s = v.to_vec();
    apply_dihedral(repr, g.dihedral, &mut s);
    apply_translation_tangent(repr, g.translation, k, &mut s);
    s
}

/// Equivariance residual `|| F(gamma s) - Dgamma F(s) ||_inf` of a system's
/// right-hand side under a group element.
pub fn verify_equivariance(spec: &SystemSpec, g: &GroupElement, state: &[f64]) -> f64 {
    let repr = spec.representation();
    let k = spec.model_params().map_or(1.0, |p| p.k);
    let transformed = act(repr, g, k, state);
    let lhs = spec.eval_vec(&transformed);
    let rhs = act_tangent(repr, g, k, &spec.eval_vec(state));
    lhs.iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// The ten subgroups of D4, largest first.
pub fn d4_subgroups() -> Vec<Vec<Dihedral>> {
    use Dihedral::*;
    vec![
        vec![E, Rq, Rq2, Rq3, Mx, My, Md, Mdp],
        vec![E, Rq, Rq2, Rq3],
        vec![E, Rq2, Mx, My],
        vec![E, Rq2, Md, Mdp],
        vec![E, Rq2],
        vec![E, Mx],
        vec![E, My],
        vec![E, Md],
        vec![E, Mdp],
        vec![E],
    ]
}

/// Largest subgroup of D4 whose elements all fix the state to within
/// `tol * (1 + ||s||_inf)`. Translations are never searched; the returned set
/// is a genuine subgroup, so it is closed under composition.
pub fn isotropy_of_state(repr: Representation, state: &[f64], tol: f64) -> Vec<Dihedral> {
    let norm = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thresh = tol * (1.0 + norm);
    let fixes = |d: Dihedral| -> bool {
        let moved = act(repr, &GroupElement::from_dihedral(d), 1.0, state);
        moved
            .iter()
            .zip(state)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            <= thresh
    };
    let fixed: Vec<Dihedral> = Dihedral::ALL.into_iter().filter(|d| fixes(*d)).collect();
    for subgroup in d4_subgroups() {
        if subgroup.iter().all(|d| fixed.contains(d)) {
            return subgroup;
        }
    }
    vec![Dihedral::E]
}

/// Default isotropy tolerance for exact (closed-form) states.
pub const ISOTROPY_TOL_EXACT: f64 = 1e-8;
/// Default isotropy tolerance for numerically refined solutions.
pub const ISOTROPY_TOL_REFINED: f64 = 1e-6;
