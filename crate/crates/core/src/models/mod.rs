//! Model parameters, state representations, and the vector fields built on them.
//!
//! Every state has a canonical flat `[f64]` layout (complex fields split into
//! re/im pairs) so that the same integration, Newton, and eigenvalue machinery
//! runs on all of them. The layouts are:
//!
//! - amplitude:        `[ax_re, ax_im, ay_re, ay_im]`
//! - full mode:        `[ax_re, ax_im, cx, dx, ay_re, ay_im, cy, dy]`
//! - polar:            `[rx, thx, cx, dx, ry, thy, cy, dy]`
//! - polar core:       `[rx, cx, dx, ry, cy, dy]` (drift phases dropped)
//! - pitchfork nf:     `[vx, vy, phix, phiy]`
//! - hopf nf:          `[vx_re, vx_im, vy_re, vy_im, phix, phiy]`
//! - hopf nf (v only): `[vx_re, vx_im, vy_re, vy_im]`

mod branches;
mod fields;

pub use branches::{
    nf_branches, nf_branches_hopf, nf_branches_pitchfork, primary_branches, thresholds,
    tsq_branch, BranchExistence, HopfBranchKind, NfBranch, NfKind, PitchforkBranchKind,
    PrimaryBranches, Stability, Thresholds, TravellingBranch, TravellingKind,
};
pub use fields::{
    axis_subspace_embedding, diagonal_subspace_embedding, Restricted, SystemSpec, VectorField,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the magnetoconvection model.
///
/// `mu` plays the role of the bifurcation parameter (proportional to the
/// Rayleigh-number excess), `beta` selects rolls versus squares, `gamma`
/// damps convection by the shear, `q` is the imposed field strength, `zeta`
/// the Ohmic/viscous diffusivity ratio, `d` the drift coefficient, and `k`
/// the horizontal wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub zeta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub k: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        // The paper's featured example (figure 2), with unit drift coefficient
        // and wavenumber.
        Self {
            mu: 1.0,
            beta: -1.5,
            gamma: 1.0,
            q: 1.0,
            zeta: 0.2,
            d: 1.0,
            k: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0) {
            return Err(Error::InvalidParams(format!("zeta must be > 0, got {}", self.zeta)));
        }
        if !(self.k > 0.0) {
            return Err(Error::InvalidParams(format!("k must be > 0, got {}", self.k)));
        }
        if !(self.q >= 0.0) {
            return Err(Error::InvalidParams(format!("Q must be >= 0, got {}", self.q)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        let all = [self.mu, self.beta, self.gamma, self.q, self.zeta, self.d, self.k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        Ok(())
    }

    /// Named access used by sweeps. Valid names are the JSON keys.
    pub fn set_named(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "mu" => self.mu = value,
            "beta" => self.beta = value,
            "gamma" => self.gamma = value,
            "Q" => self.q = value,
            "zeta" => self.zeta = value,
            "D" => self.d = value,
            "k" => self.k = value,
            _ => return Err(Error::Parse(format!("unknown parameter name `{name}`"))),
        }
        Ok(())
    }

    pub fn get_named(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "mu" => self.mu,
            "beta" => self.beta,
            "gamma" => self.gamma,
            "Q" => self.q,
            "zeta" => self.zeta,
            "D" => self.d,
            "k" => self.k,
            _ => return Err(Error::Parse(format!("unknown parameter name `{name}`"))),
        })
    }
}

/// Coefficients of the D4 pitchfork normal form with drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchforkNfParams {
    pub lambda: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl Default for PitchforkNfParams {
    fn default() -> Self {
        Self { lambda: 1.0, a: -1.0, b: -1.0, d: 1.0 }
    }
}

/// Coefficients of the D4 Hopf normal form with drift. `a`, `b`, `c`, `d`
/// are complex; drift is `Re(d v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfNfParams {
    pub lambda: f64,
    pub omega: f64,
    #[serde(rename = "A")]
    pub a: (f64, f64),
    #[serde(rename = "B")]
    pub b: (f64, f64),
    #[serde(rename = "C")]
    pub c: (f64, f64),
    #[serde(rename = "D")]
    pub d: (f64, f64),
}

impl Default for HopfNfParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            omega: 1.0,
            a: (-1.0, 0.0),
            b: (-1.0, 0.0),
            c: (0.0, 0.0),
            d: (1.0, 0.0),
        }
    }
}

impl HopfNfParams {
    pub fn a_c(&self) -> Complex64 {
        Complex64::new(self.a.0, self.a.1)
    }
    pub fn b_c(&self) -> Complex64 {
        Complex64::new(self.b.0, self.b.1)
    }
    pub fn c_c(&self) -> Complex64 {
        Complex64::new(self.c.0, self.c.1)
    }
    pub fn d_c(&self) -> Complex64 {
        Complex64::new(self.d.0, self.d.1)
    }
}

/// Full model state: complex roll amplitudes plus real shear and field modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub a_x: Complex64,
    pub c_x: f64,
    pub d_x: f64,
    pub a_y: Complex64,
    pub c_y: f64,
    pub d_y: f64,
}

impl ModeState {
    pub fn to_flat(&self) -> [f64; 8] {
        [
            self.a_x.re, self.a_x.im, self.c_x, self.d_x,
            self.a_y.re, self.a_y.im, self.c_y, self.d_y,
        ]
    }

    pub fn from_flat(s: &[f64]) -> Self {
        Self {
            a_x: Complex64::new(s[0], s[1]),
            c_x: s[2],
            d_x: s[3],
            a_y: Complex64::new(s[4], s[5]),
            c_y: s[6],
            d_y: s[7],
        }
    }

    /// Translation-reduced core coordinates `[rx, cx, dx, ry, cy, dy]`.
    pub fn to_core(&self) -> [f64; 6] {
        [
            self.a_x.norm(), self.c_x, self.d_x,
            self.a_y.norm(), self.c_y, self.d_y,
        ]
    }
}

/// Polar state with unwrapped phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub r_x: f64,
    pub theta_x: f64,
    pub c_x: f64,
    pub d_x: f64,
    pub r_y: f64,
    pub theta_y: f64,
    pub c_y: f64,
    pub d_y: f64,
}

impl PolarState {
    pub fn to_flat(&self) -> [f64; 8] {
        [
            self.r_x, self.theta_x, self.c_x, self.d_x,
            self.r_y, self.theta_y, self.c_y, self.d_y,
        ]
    }

    pub fn from_flat(s: &[f64]) -> Self {
        Self {
            r_x: s[0],
            theta_x: s[1],
            c_x: s[2],
            d_x: s[3],
            r_y: s[4],
            theta_y: s[5],
            c_y: s[6],
            d_y: s[7],
        }
    }

    pub fn to_core(&self) -> [f64; 6] {
        [self.r_x, self.c_x, self.d_x, self.r_y, self.c_y, self.d_y]
    }
}

/// Outcome of a cartesian -> polar conversion. `ambiguous_phase` is raised
/// when a roll amplitude sits below 1e-12 and its phase was set to zero.
#[derive(Debug, Clone, Copy)]
pub struct PolarConversion {
    pub state: PolarState,
    pub ambiguous_phase: bool,
}

const PHASE_AMBIGUITY_EPS: f64 = 1e-12;

/// Polar form of a mode state, `a = r e^{i theta}`.
pub fn to_polar(s: &ModeState) -> PolarConversion {
    let (r_x, theta_x, amb_x) = split_polar(s.a_x);
    let (r_y, theta_y, amb_y) = split_polar(s.a_y);
    PolarConversion {
        state: PolarState {
            r_x,
            theta_x,
            c_x: s.c_x,
            d_x: s.d_x,
            r_y,
            theta_y,
            c_y: s.c_y,
            d_y: s.d_y,
        },
        ambiguous_phase: amb_x || amb_y,
    }
}

fn split_polar(a: Complex64) -> (f64, f64, bool) {
    let r = a.norm();
    if r < PHASE_AMBIGUITY_EPS {
        (r, 0.0, true)
    } else {
        (r, a.arg(), false)
    }
}

pub fn to_cartesian(s: &PolarState) -> ModeState {
    ModeState {
        a_x: Complex64::from_polar(s.r_x, s.theta_x),
        c_x: s.c_x,
        d_x: s.d_x,
        a_y: Complex64::from_polar(s.r_y, s.theta_y),
        c_y: s.c_y,
        d_y: s.d_y,
    }
}

/// State of the pitchfork normal form (all real).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchforkNfState {
    pub v_x: f64,
    pub v_y: f64,
    pub phi_x: f64,
    pub phi_y: f64,
}

impl PitchforkNfState {
    pub fn to_flat(&self) -> [f64; 4] {
        [self.v_x, self.v_y, self.phi_x, self.phi_y]
    }
    pub fn from_flat(s: &[f64]) -> Self {
        Self { v_x: s[0], v_y: s[1], phi_x: s[2], phi_y: s[3] }
    }
}

/// State of the Hopf normal form (complex amplitudes, real drift phases).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfNfState {
    pub v_x: Complex64,
    pub v_y: Complex64,
    pub phi_x: f64,
    pub phi_y: f64,
}

impl HopfNfState {
    pub fn to_flat(&self) -> [f64; 6] {
        [self.v_x.re, self.v_x.im, self.v_y.re, self.v_y.im, self.phi_x, self.phi_y]
    }
    pub fn from_flat(s: &[f64]) -> Self {
        Self {
            v_x: Complex64::new(s[0], s[1]),
            v_y: Complex64::new(s[2], s[3]),
            phi_x: s[4],
            phi_y: s[5],
        }
    }
}

/// Flat-state layouts the symmetry group acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Amplitude,
    FullMode,
    Polar,
    PolarCore,
    PitchforkNf,
    HopfNf,
    HopfNfAmplitudes,
}

impl Representation {
    pub fn dim(self) -> usize {
        match self {
            Representation::Amplitude => 4,
            Representation::FullMode => 8,
            Representation::Polar => 8,
            Representation::PolarCore => 6,
            Representation::PitchforkNf => 4,
            Representation::HopfNf => 6,
            Representation::HopfNfAmplitudes => 4,
        }
    }

    /// Column labels for CSV export, in canonical flat order.
    pub fn field_names(self) -> &'static [&'static str] {
        match self {
            Representation::Amplitude => &["ax_re", "ax_im", "ay_re", "ay_im"],
            Representation::FullMode => {
                &["ax_re", "ax_im", "cx", "dx", "ay_re", "ay_im", "cy", "dy"]
            }
            Representation::Polar => &["rx", "thx", "cx", "dx", "ry", "thy", "cy", "dy"],
            Representation::PolarCore => &["rx", "cx", "dx", "ry", "cy", "dy"],
            Representation::PitchforkNf => &["vx", "vy", "phix", "phiy"],
            Representation::HopfNf => &["vx_re", "vx_im", "vy_re", "vy_im", "phix", "phiy"],
            Representation::HopfNfAmplitudes => &["vx_re", "vx_im", "vy_re", "vy_im"],
        }
    }
}
