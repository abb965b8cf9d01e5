//! Closed-form equilibrium branches and bifurcation thresholds of the model,
//! and the branch table of the two normal forms.

use serde::{Deserialize, Serialize};

use super::{HopfNfParams, ModelParams, PitchforkNfParams, SystemSpec, VectorField};
use crate::dynamics::eigenvalues;
use crate::error::{Error, Result};

/// Stability verdict from eigenvalues, ignoring the neutral directions forced
/// by the translation symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

const NEUTRAL_EPS: f64 = 1e-10;

fn stability_from_real_parts(res: impl Iterator<Item = f64>) -> Stability {
    for re in res {
        if re > NEUTRAL_EPS {
            return Stability::Unstable;
        }
    }
    Stability::Stable
}

/// Rolls and squares of the amplitude equations, with stability evaluated
/// from the amplitude-system Jacobian (phase directions excluded).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimaryBranches {
    /// |a_x|^2 on the rolls branch (`a_y = 0`).
    pub rolls_amplitude_sq: f64,
    pub rolls_stability: Stability,
    /// |a_x|^2 = |a_y|^2 on the squares branch; `None` when beta <= -2.
    pub squares_amplitude_sq: Option<f64>,
    pub squares_stability: Option<Stability>,
}

pub fn primary_branches(p: &ModelParams) -> PrimaryBranches {
    let amp = SystemSpec::Amplitude(*p);
    let rolls_sq = p.mu.max(0.0);
    let rolls_state = [rolls_sq.sqrt(), 0.0, 0.0, 0.0];
    let rolls_eigs = eigenvalues(&amp.jacobian(&rolls_state)).unwrap_or_default();
    let rolls_stability = stability_from_real_parts(rolls_eigs.iter().map(|e| e.re));

    let (squares_amplitude_sq, squares_stability) = if 2.0 + p.beta > 0.0 && p.mu >= 0.0 {
        let sq = p.mu / (2.0 + p.beta);
        let r = sq.sqrt();
        let state = [r, 0.0, r, 0.0];
        let eigs = eigenvalues(&amp.jacobian(&state)).unwrap_or_default();
        (Some(sq), Some(stability_from_real_parts(eigs.iter().map(|e| e.re))))
    } else {
        (None, None)
    };

    PrimaryBranches {
        rolls_amplitude_sq: rolls_sq,
        rolls_stability,
        squares_amplitude_sq,
        squares_stability,
    }
}

/// Bifurcation thresholds of the squares branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    /// Pitchfork of squares: mu = (1 + Q)(2 + beta).
    pub mu_pitchfork: f64,
    /// Hopf of squares: mu = (1 + zeta)(2 + beta); only real when Q > zeta.
    pub mu_hopf: f64,
    pub hopf_exists: bool,
    /// Frequency at Hopf onset: sqrt(zeta (Q - zeta)); zero when absent.
    pub omega_hopf: f64,
    /// Takens-Bogdanov point (mu, Q) = ((1 + zeta)(2 + beta), zeta).
    pub tb_point: (f64, f64),
}

pub fn thresholds(p: &ModelParams) -> Thresholds {
    let mu_pf = (1.0 + p.q) * (2.0 + p.beta);
    let mu_hopf = (1.0 + p.zeta) * (2.0 + p.beta);
    let hopf_exists = p.q > p.zeta;
    let omega_hopf = if hopf_exists { (p.zeta * (p.q - p.zeta)).sqrt() } else { 0.0 };
    Thresholds {
        mu_pitchfork: mu_pf,
        mu_hopf,
        hopf_exists,
        omega_hopf,
        tb_point: ((1.0 + p.zeta) * (2.0 + p.beta), p.zeta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravellingKind {
    /// Shear along one axis; drift along that axis.
    Tsq,
    /// Equal shear in both directions; drift along a diagonal.
    Dtsq,
}

/// A travelling-squares equilibrium in core coordinates, with both shear
/// signs related by the m_x (or m_d') reflection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TravellingBranch {
    pub kind: TravellingKind,
    /// Core state `[rx, cx, dx, ry, cy, dy]` with the positive shear sign.
    pub core_state: [f64; 6],
    /// Steady drift rate (dphi_x/dt, dphi_y/dt) = (D cx, D cy).
    pub drift_rate: (f64, f64),
}

/// Closed form of the travelling branches.
///
/// TSq: `rx^2 = 1 + Q`, `ry^2 = mu - (1 + beta)(1 + Q)`,
/// `gamma cx^2 = mu - (1 + Q) - (1 + beta) ry^2`, `cy = dy = 0`.
/// DTSq: `r^2 = 1 + Q`, `gamma c^2 = mu - (2 + beta)(1 + Q)` on the diagonal.
pub fn tsq_branch(p: &ModelParams, kind: TravellingKind) -> Result<TravellingBranch> {
    if p.gamma == 0.0 {
        return Err(Error::BranchUndefined(
            "gamma = 0: travelling-branch shear amplitude is undefined".into(),
        ));
    }
    let rx_sq = 1.0 + p.q;
    match kind {
        TravellingKind::Tsq => {
            let ry_sq = p.mu - (1.0 + p.beta) * rx_sq;
            if ry_sq < 0.0 {
                return Err(Error::BranchUndefined(format!(
                    "TSq does not exist: ry^2 = {ry_sq} < 0"
                )));
            }
            let cx_sq = (p.mu - rx_sq - (1.0 + p.beta) * ry_sq) / p.gamma;
            if cx_sq < 0.0 {
                return Err(Error::BranchUndefined(format!(
                    "TSq does not exist: cx^2 = {cx_sq} < 0"
                )));
            }
            let (rx, ry, cx) = (rx_sq.sqrt(), ry_sq.sqrt(), cx_sq.sqrt());
            Ok(TravellingBranch {
                kind,
                core_state: [rx, cx, cx, ry, 0.0, 0.0],
                drift_rate: (p.d * cx, 0.0),
            })
        }
        TravellingKind::Dtsq => {
            let c_sq = (p.mu - (2.0 + p.beta) * rx_sq) / p.gamma;
            if c_sq < 0.0 {
                return Err(Error::BranchUndefined(format!(
                    "DTSq does not exist: c^2 = {c_sq} < 0"
                )));
            }
            let (r, c) = (rx_sq.sqrt(), c_sq.sqrt());
            Ok(TravellingBranch {
                kind,
                core_state: [r, c, c, r, c, c],
                drift_rate: (p.d * c, p.d * c),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PitchforkBranchKind {
    Tsq,
    Dtsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfBranchKind {
    Psq,
    Dpsq,
    Apw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchExistence {
    Exists,
    /// Squared amplitude came out negative.
    Nonexistent,
    /// Amplitude denominator vanished.
    Degenerate,
}

/// One row of the normal-form branch table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NfBranch {
    pub label: String,
    /// v^2 (pitchfork) or |v|^2 (Hopf); negative values mark nonexistence.
    pub amplitude_sq: f64,
    /// Oscillation frequency corrected by the Im part of the cubic
    /// coefficient; `None` for pitchfork branches.
    pub frequency: Option<f64>,
    pub existence: BranchExistence,
}

fn branch_row(label: &str, num: f64, den: f64, freq: impl Fn(f64) -> Option<f64>) -> NfBranch {
    if den == 0.0 {
        return NfBranch {
            label: label.into(),
            amplitude_sq: f64::NAN,
            frequency: None,
            existence: BranchExistence::Degenerate,
        };
    }
    let amp_sq = num / den;
    let existence = if amp_sq >= 0.0 { BranchExistence::Exists } else { BranchExistence::Nonexistent };
    NfBranch {
        label: label.into(),
        amplitude_sq: amp_sq,
        frequency: if amp_sq >= 0.0 { freq(amp_sq) } else { None },
        existence,
    }
}

/// Branch table of the pitchfork normal form:
/// TSq `v^2 = -lambda/A`, DTSq `v^2 = -lambda/(A + B)`.
pub fn nf_branches_pitchfork(p: &PitchforkNfParams) -> Vec<NfBranch> {
    vec![
        branch_row("TSq", -p.lambda, p.a, |_| None),
        branch_row("DTSq", -p.lambda, p.a + p.b, |_| None),
    ]
}

/// Branch table of the Hopf normal form:
/// PSq `|v|^2 = -lambda/Re(A+B)`, DPSq `-lambda/Re(2A+B+C)`,
/// APW `-lambda/Re(2A+B-C)`, each with frequency
/// `omega + Im(coefficient) |v|^2`.
pub fn nf_branches_hopf(p: &HopfNfParams) -> Vec<NfBranch> {
    let psq = p.a_c() + p.b_c();
    let dpsq = 2.0 * p.a_c() + p.b_c() + p.c_c();
    let apw = 2.0 * p.a_c() + p.b_c() - p.c_c();
    vec![
        branch_row("PSq", -p.lambda, psq.re, |amp| Some(p.omega + psq.im * amp)),
        branch_row("DPSq", -p.lambda, dpsq.re, |amp| Some(p.omega + dpsq.im * amp)),
        branch_row("APW", -p.lambda, apw.re, |amp| Some(p.omega + apw.im * amp)),
    ]
}

#[derive(Debug, Clone, Copy)]
pub enum NfKind<'a> {
    Pitchfork(&'a PitchforkNfParams),
    Hopf(&'a HopfNfParams),
}

pub fn nf_branches(kind: NfKind<'_>) -> Vec<NfBranch> {
    match kind {
        NfKind::Pitchfork(p) => nf_branches_pitchfork(p),
        NfKind::Hopf(p) => nf_branches_hopf(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_stable_for_negative_beta() {
        let p = ModelParams { mu: 1.0, beta: -1.5, ..ModelParams::default() };
        let b = primary_branches(&p);
        assert!((b.squares_amplitude_sq.unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(b.squares_stability, Some(Stability::Stable));
        assert_eq!(b.rolls_stability, Stability::Unstable);
    }

    #[test]
    fn rolls_stable_for_positive_beta() {
        let p = ModelParams { mu: 1.0, beta: 0.5, ..ModelParams::default() };
        let b = primary_branches(&p);
        assert_eq!(b.rolls_stability, Stability::Stable);
        assert!((b.squares_amplitude_sq.unwrap() - 0.4).abs() < 1e-14);
        assert_eq!(b.squares_stability, Some(Stability::Unstable));
    }

    #[test]
    fn zero_mu_gives_zero_amplitudes() {
        let p = ModelParams { mu: 0.0, ..ModelParams::default() };
        let b = primary_branches(&p);
        assert_eq!(b.rolls_amplitude_sq, 0.0);
        assert_eq!(b.squares_amplitude_sq, Some(0.0));
    }

    #[test]
    fn threshold_formulas() {
        let p = ModelParams::default(); // Q = 1, zeta = 0.2, beta = -1.5
        let t = thresholds(&p);
        assert!((t.mu_pitchfork - 1.0).abs() < 1e-15);
        assert!((t.mu_hopf - 0.6).abs() < 1e-15);
        assert!(t.hopf_exists);
        assert!((t.omega_hopf - 0.4).abs() < 1e-15);
        assert!((t.tb_point.0 - 0.6).abs() < 1e-15);
        assert!((t.tb_point.1 - 0.2).abs() < 1e-15);

        let p2 = ModelParams { q: 0.1, ..p };
        let t2 = thresholds(&p2);
        assert!(!t2.hopf_exists);
    }

    #[test]
    fn tsq_closed_form_at_mu_1_2() {
        let p = ModelParams { mu: 1.2, ..ModelParams::default() };
        let b = tsq_branch(&p, TravellingKind::Tsq).unwrap();
        assert!((b.core_state[1] - 0.3f64.sqrt()).abs() < 1e-15);
        assert!((b.drift_rate.0 - 0.3f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.drift_rate.1, 0.0);
        // residual of the core rhs at the branch point
        let core = SystemSpec::PolarCore(p);
        let f = core.eval_vec(&b.core_state);
        assert!(f.iter().all(|v| v.abs() < 1e-14), "{f:?}");
    }

    #[test]
    fn tsq_birth_and_nonexistence() {
        let p = ModelParams { mu: 1.0, ..ModelParams::default() }; // mu = mu_pf exactly
        let b = tsq_branch(&p, TravellingKind::Tsq).unwrap();
        assert!(b.core_state[1].abs() < 1e-15);

        let p = ModelParams { mu: 0.9, ..ModelParams::default() };
        assert!(tsq_branch(&p, TravellingKind::Tsq).is_err());

        let p = ModelParams { gamma: 0.0, ..ModelParams::default() };
        assert!(tsq_branch(&p, TravellingKind::Tsq).is_err());
    }

    #[test]
    fn dtsq_closed_form_is_core_equilibrium() {
        let p = ModelParams { mu: 1.2, ..ModelParams::default() };
        let b = tsq_branch(&p, TravellingKind::Dtsq).unwrap();
        let core = SystemSpec::PolarCore(p);
        let f = core.eval_vec(&b.core_state);
        assert!(f.iter().all(|v| v.abs() < 1e-14), "{f:?}");
    }

    #[test]
    fn nf_branch_table_values() {
        let p = PitchforkNfParams { lambda: 1.0, a: -1.0, b: -1.0, d: 1.0 };
        let rows = nf_branches_pitchfork(&p);
        assert!((rows[0].amplitude_sq - 1.0).abs() < 1e-15);
        assert!((rows[1].amplitude_sq - 0.5).abs() < 1e-15);

        let h = HopfNfParams::default(); // lambda 0.1, A = B = -1, C = 0
        let rows = nf_branches_hopf(&h);
        assert!((rows[0].amplitude_sq - 0.05).abs() < 1e-15);
        assert!((rows[1].amplitude_sq - 1.0 / 30.0).abs() < 1e-15);
        assert!((rows[2].amplitude_sq - 1.0 / 30.0).abs() < 1e-15);

        let degenerate = PitchforkNfParams { lambda: 1.0, a: 0.0, b: -1.0, d: 1.0 };
        let rows = nf_branches_pitchfork(&degenerate);
        assert_eq!(rows[0].existence, BranchExistence::Degenerate);

        let zero = HopfNfParams { lambda: 0.0, ..HopfNfParams::default() };
        for row in nf_branches_hopf(&zero) {
            assert_eq!(row.amplitude_sq, 0.0);
        }
    }
}
