//! Right-hand sides and analytic Jacobians of every vector field, over the
//! flat real layouts documented in the module root.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HopfNfParams, ModelParams, PitchforkNfParams, Representation};

/// A smooth autonomous vector field on flat real coordinates.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, state: &[f64], out: &mut [f64]);
    fn jacobian(&self, state: &[f64]) -> DMatrix<f64>;

    fn eval_vec(&self, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(state, &mut out);
        out
    }
}

/// One of the concrete model systems, bundled with its parameters.
///
/// `PolarCore` is the polar model with the two slaved drift phases dropped;
/// equilibrium solving, orbit refinement, and Floquet analysis run there.
/// `HopfNfAmplitudes` likewise drops the normal form's drift phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum SystemSpec {
    Amplitude(ModelParams),
    Full(ModelParams),
    Polar(ModelParams),
    PolarCore(ModelParams),
    PitchforkNf(PitchforkNfParams),
    HopfNf(HopfNfParams),
    HopfNfAmplitudes(HopfNfParams),
}

impl SystemSpec {
    pub fn representation(&self) -> Representation {
        match self {
            SystemSpec::Amplitude(_) => Representation::Amplitude,
            SystemSpec::Full(_) => Representation::FullMode,
            SystemSpec::Polar(_) => Representation::Polar,
            SystemSpec::PolarCore(_) => Representation::PolarCore,
            SystemSpec::PitchforkNf(_) => Representation::PitchforkNf,
            SystemSpec::HopfNf(_) => Representation::HopfNf,
            SystemSpec::HopfNfAmplitudes(_) => Representation::HopfNfAmplitudes,
        }
    }

    pub fn model_params(&self) -> Option<&ModelParams> {
        match self {
            SystemSpec::Amplitude(p)
            | SystemSpec::Full(p)
            | SystemSpec::Polar(p)
            | SystemSpec::PolarCore(p) => Some(p),
            _ => None,
        }
    }
}

impl VectorField for SystemSpec {
    fn dim(&self) -> usize {
        self.representation().dim()
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        match self {
            SystemSpec::Amplitude(p) => amplitude_rhs(s, p, out),
            SystemSpec::Full(p) => full_rhs(s, p, out),
            SystemSpec::Polar(p) => polar_rhs(s, p, out),
            SystemSpec::PolarCore(p) => polar_core_rhs(s, p, out),
            SystemSpec::PitchforkNf(p) => pitchfork_nf_rhs(s, p, out),
            SystemSpec::HopfNf(p) => hopf_nf_rhs(s, p, out),
            SystemSpec::HopfNfAmplitudes(p) => hopf_nf_amplitude_rhs(s, p, out),
        }
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        match self {
            SystemSpec::Amplitude(p) => amplitude_jacobian(s, p),
            SystemSpec::Full(p) => full_jacobian(s, p),
            SystemSpec::Polar(p) => polar_jacobian(s, p),
            SystemSpec::PolarCore(p) => polar_core_jacobian(s, p),
            SystemSpec::PitchforkNf(p) => pitchfork_nf_jacobian(s, p),
            SystemSpec::HopfNf(p) => hopf_nf_jacobian(s, p),
            SystemSpec::HopfNfAmplitudes(p) => hopf_nf_amplitude_jacobian(s, p),
        }
    }
}

/// Amplitude equations: `da/dt = mu a - |a|^2 a - (1+beta)|a_other|^2 a`.
pub fn amplitude_rhs(s: &[f64], p: &ModelParams, out: &mut [f64]) {
    let ax = Complex64::new(s[0], s[1]);
    let ay = Complex64::new(s[2], s[3]);
    let sx = ax.norm_sqr();
    let sy = ay.norm_sqr();
    let dax = ax * (p.mu - sx - (1.0 + p.beta) * sy);
    let day = ay * (p.mu - sy - (1.0 + p.beta) * sx);
    out[0] = dax.re;
    out[1] = dax.im;
    out[2] = day.re;
    out[3] = day.im;
}

/// Full model: amplitude equations extended by the shear and field modes,
/// including the shear damping `-gamma c^2 a` and drift `i D a c` terms.
pub fn full_rhs(s: &[f64], p: &ModelParams, out: &mut [f64]) {
    let ax = Complex64::new(s[0], s[1]);
    let (cx, dx) = (s[2], s[3]);
    let ay = Complex64::new(s[4], s[5]);
    let (cy, dy) = (s[6], s[7]);
    let sx = ax.norm_sqr();
    let sy = ay.norm_sqr();

    let dax = ax * (p.mu - sx - (1.0 + p.beta) * sy - p.gamma * cx * cx)
        + Complex64::i() * p.d * ax * cx;
    let day = ay * (p.mu - sy - (1.0 + p.beta) * sx - p.gamma * cy * cy)
        + Complex64::i() * p.d * ay * cy;

    out[0] = dax.re;
    out[1] = dax.im;
    out[2] = -cx - p.q * dx + sx * cx;
    out[3] = p.zeta * cx - p.zeta * dx;
    out[4] = day.re;
    out[5] = day.im;
    out[6] = -cy - p.q * dy + sy * cy;
    out[7] = p.zeta * cy - p.zeta * dy;
}

/// Polar form: the phases decouple and obey `dtheta/dt = D c`.
pub fn polar_rhs(s: &[f64], p: &ModelParams, out: &mut [f64]) {
    let (rx, cx, dx) = (s[0], s[2], s[3]);
    let (ry, cy, dy) = (s[4], s[6], s[7]);
    out[0] = p.mu * rx - rx.powi(3) - (1.0 + p.beta) * ry * ry * rx - p.gamma * cx * cx * rx;
    out[1] = p.d * cx;
    out[2] = -cx - p.q * dx + rx * rx * cx;
    out[3] = p.zeta * cx - p.zeta * dx;
    out[4] = p.mu * ry - ry.powi(3) - (1.0 + p.beta) * rx * rx * ry - p.gamma * cy * cy * ry;
    out[5] = p.d * cy;
    out[6] = -cy - p.q * dy + ry * ry * cy;
    out[7] = p.zeta * cy - p.zeta * dy;
}

/// Polar core: the (r, c, d) subsystem, which never reads the phases.
pub fn polar_core_rhs(s: &[f64], p: &ModelParams, out: &mut [f64]) {
    let (rx, cx, dx) = (s[0], s[1], s[2]);
    let (ry, cy, dy) = (s[3], s[4], s[5]);
    out[0] = p.mu * rx - rx.powi(3) - (1.0 + p.beta) * ry * ry * rx - p.gamma * cx * cx * rx;
    out[1] = -cx - p.q * dx + rx * rx * cx;
    out[2] = p.zeta * cx - p.zeta * dx;
    out[3] = p.mu * ry - ry.powi(3) - (1.0 + p.beta) * rx * rx * ry - p.gamma * cy * cy * ry;
    out[4] = -cy - p.q * dy + ry * ry * cy;
    out[5] = p.zeta * cy - p.zeta * dy;
}

/// Pitchfork normal form with drift:
/// `dv/dt = lambda v + A v^3 + B v_other^2 v`, `dphi/dt = D v`.
pub fn pitchfork_nf_rhs(s: &[f64], p: &PitchforkNfParams, out: &mut [f64]) {
    let (vx, vy) = (s[0], s[1]);
    out[0] = p.lambda * vx + p.a * vx.powi(3) + p.b * vy * vy * vx;
    out[1] = p.lambda * vy + p.a * vy.powi(3) + p.b * vx * vx * vy;
    out[2] = p.d * vx;
    out[3] = p.d * vy;
}

/// Hopf normal form with drift:
/// `dv_x/dt = ((lambda + i omega) + A(|v_x|^2 + |v_y|^2) + B|v_x|^2) v_x
///            + C conj(v_x) v_y^2`, `dphi_x/dt = Re(D v_x)`, and x <-> y.
pub fn hopf_nf_rhs(s: &[f64], p: &HopfNfParams, out: &mut [f64]) {
    hopf_nf_amplitude_rhs(s, p, &mut out[..4]);
    let vx = Complex64::new(s[0], s[1]);
    let vy = Complex64::new(s[2], s[3]);
    out[4] = (p.d_c() * vx).re;
    out[5] = (p.d_c() * vy).re;
}

pub fn hopf_nf_amplitude_rhs(s: &[f64], p: &HopfNfParams, out: &mut [f64]) {
    let vx = Complex64::new(s[0], s[1]);
    let vy = Complex64::new(s[2], s[3]);
    let sx = vx.norm_sqr();
    let sy = vy.norm_sqr();
    let lin = Complex64::new(p.lambda, p.omega);
    let dvx = (lin + p.a_c() * (sx + sy) + p.b_c() * sx) * vx + p.c_c() * vx.conj() * vy * vy;
    let dvy = (lin + p.a_c() * (sx + sy) + p.b_c() * sy) * vy + p.c_c() * vy.conj() * vx * vx;
    out[0] = dvx.re;
    out[1] = dvx.im;
    out[2] = dvy.re;
    out[3] = dvy.im;
}

// ---------------------------------------------------------------------------
// Analytic Jacobians. Complex pairs are differentiated through Wirtinger
// derivatives: for f(v, conj v), the real 2x2 block is
//   [[Re(a+b), -Im(a-b)], [Im(a+b), Re(a-b)]]
// with a = df/dv and b = df/dconj(v).
// ---------------------------------------------------------------------------

fn wirtinger_block(j: &mut DMatrix<f64>, row: usize, col: usize, a: Complex64, b: Complex64) {
    j[(row, col)] = (a + b).re;
    j[(row, col + 1)] = -(a - b).im;
    j[(row + 1, col)] = (a + b).im;
    j[(row + 1, col + 1)] = (a - b).re;
}

pub fn amplitude_jacobian(s: &[f64], p: &ModelParams) -> DMatrix<f64> {
    let ax = Complex64::new(s[0], s[1]);
    let ay = Complex64::new(s[2], s[3]);
    let sx = ax.norm_sqr();
    let sy = ay.norm_sqr();
    let bp = 1.0 + p.beta;
    let mut j = DMatrix::zeros(4, 4);

    // d(ax') / d(ax, ay): ax' = ax (mu - |ax|^2 - bp |ay|^2)
    let gx = Complex64::new(p.mu - sx - bp * sy, 0.0);
    wirtinger_block(&mut j, 0, 0, gx - sx, -ax * ax);
    wirtinger_block(&mut j, 0, 2, -bp * ax * ay.conj(), -bp * ax * ay);
    let gy = Complex64::new(p.mu - sy - bp * sx, 0.0);
    wirtinger_block(&mut j, 2, 2, gy - sy, -ay * ay);
    wirtinger_block(&mut j, 2, 0, -bp * ay * ax.conj(), -bp * ay * ax);
    j
}

pub fn full_jacobian(s: &[f64], p: &ModelParams) -> DMatrix<f64> {
    let ax = Complex64::new(s[0], s[1]);
    let (cx, dx_) = (s[2], s[3]);
    let ay = Complex64::new(s[4], s[5]);
    let (cy, dy_) = (s[6], s[7]);
    let _ = (dx_, dy_);
    let sx = ax.norm_sqr();
    let sy = ay.norm_sqr();
    let bp = 1.0 + p.beta;
    let id = Complex64::i() * p.d;
    let mut j = DMatrix::zeros(8, 8);

    // ax' = ax (mu - sx - bp sy - gamma cx^2) + i D ax cx
    let gx = Complex64::new(p.mu - sx - bp * sy - p.gamma * cx * cx, 0.0);
    wirtinger_block(&mut j, 0, 0, gx - sx + id * cx, -ax * ax);
    wirtinger_block(&mut j, 0, 4, -bp * ax * ay.conj(), -bp * ax * ay);
    let dax_dcx = ax * (-2.0 * p.gamma * cx) + id * ax;
    j[(0, 2)] = dax_dcx.re;
    j[(1, 2)] = dax_dcx.im;

    // cx' = -cx - Q dx + sx cx
    j[(2, 0)] = 2.0 * s[0] * cx;
    j[(2, 1)] = 2.0 * s[1] * cx;
    j[(2, 2)] = -1.0 + sx;
    j[(2, 3)] = -p.q;

    // dx' = zeta cx - zeta dx
    j[(3, 2)] = p.zeta;
    j[(3, 3)] = -p.zeta;

    let gy = Complex64::new(p.mu - sy - bp * sx - p.gamma * cy * cy, 0.0);
    wirtinger_block(&mut j, 4, 4, gy - sy + id * cy, -ay * ay);
    wirtinger_block(&mut j, 4, 0, -bp * ay * ax.conj(), -bp * ay * ax);
    let day_dcy = ay * (-2.0 * p.gamma * cy) + id * ay;
    j[(4, 6)] = day_dcy.re;
    j[(5, 6)] = day_dcy.im;

    j[(6, 4)] = 2.0 * s[4] * cy;
    j[(6, 5)] = 2.0 * s[5] * cy;
    j[(6, 6)] = -1.0 + sy;
    j[(6, 7)] = -p.q;

    j[(7, 6)] = p.zeta;
    j[(7, 7)] = -p.zeta;
    j
}

pub fn polar_jacobian(s: &[f64], p: &ModelParams) -> DMatrix<f64> {
    let (rx, cx) = (s[0], s[2]);
    let (ry, cy) = (s[4], s[6]);
    let bp = 1.0 + p.beta;
    let mut j = DMatrix::zeros(8, 8);

    // rx' = mu rx - rx^3 - bp ry^2 rx - gamma cx^2 rx
    j[(0, 0)] = p.mu - 3.0 * rx * rx - bp * ry * ry - p.gamma * cx * cx;
    j[(0, 2)] = -2.0 * p.gamma * cx * rx;
    j[(0, 4)] = -2.0 * bp * ry * rx;
    // thx' = D cx
    j[(1, 2)] = p.d;
    // cx' = -cx - Q dx + rx^2 cx
    j[(2, 0)] = 2.0 * rx * cx;
    j[(2, 2)] = -1.0 + rx * rx;
    j[(2, 3)] = -p.q;
    // dx' = zeta (cx - dx)
    j[(3, 2)] = p.zeta;
    j[(3, 3)] = -p.zeta;

    j[(4, 4)] = p.mu - 3.0 * ry * ry - bp * rx * rx - p.gamma * cy * cy;
    j[(4, 6)] = -2.0 * p.gamma * cy * ry;
    j[(4, 0)] = -2.0 * bp * rx * ry;
    j[(5, 6)] = p.d;
    j[(6, 4)] = 2.0 * ry * cy;
    j[(6, 6)] = -1.0 + ry * ry;
    j[(6, 7)] = -p.q;
    j[(7, 6)] = p.zeta;
    j[(7, 7)] = -p.zeta;
    j
}

pub fn polar_core_jacobian(s: &[f64], p: &ModelParams) -> DMatrix<f64> {
    let (rx, cx) = (s[0], s[1]);
    let (ry, cy) = (s[3], s[4]);
    let bp = 1.0 + p.beta;
    let mut j = DMatrix::zeros(6, 6);

    j[(0, 0)] = p.mu - 3.0 * rx * rx - bp * ry * ry - p.gamma * cx * cx;
    j[(0, 1)] = -2.0 * p.gamma * cx * rx;
    j[(0, 3)] = -2.0 * bp * ry * rx;
    j[(1, 0)] = 2.0 * rx * cx;
    j[(1, 1)] = -1.0 + rx * rx;
    j[(1, 2)] = -p.q;
    j[(2, 1)] = p.zeta;
    j[(2, 2)] = -p.zeta;

    j[(3, 3)] = p.mu - 3.0 * ry * ry - bp * rx * rx - p.gamma * cy * cy;
    j[(3, 4)] = -2.0 * p.gamma * cy * ry;
    j[(3, 0)] = -2.0 * bp * rx * ry;
    j[(4, 3)] = 2.0 * ry * cy;
    j[(4, 4)] = -1.0 + ry * ry;
    j[(4, 5)] = -p.q;
    j[(5, 4)] = p.zeta;
    j[(5, 5)] = -p.zeta;
    j
}

pub fn pitchfork_nf_jacobian(s: &[f64], p: &PitchforkNfParams) -> DMatrix<f64> {
    let (vx, vy) = (s[0], s[1]);
    let mut j = DMatrix::zeros(4, 4);
    j[(0, 0)] = p.lambda + 3.0 * p.a * vx * vx + p.b * vy * vy;
    j[(0, 1)] = 2.0 * p.b * vy * vx;
    j[(1, 1)] = p.lambda + 3.0 * p.a * vy * vy + p.b * vx * vx;
    j[(1, 0)] = 2.0 * p.b * vx * vy;
    j[(2, 0)] = p.d;
    j[(3, 1)] = p.d;
    j
}

pub fn hopf_nf_jacobian(s: &[f64], p: &HopfNfParams) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, 6);
    let amp = hopf_nf_amplitude_jacobian(s, p);
    j.view_mut((0, 0), (4, 4)).copy_from(&amp);
    // phix' = Re(D vx) = Re(D) vx_re - Im(D) vx_im
    j[(4, 0)] = p.d.0;
    j[(4, 1)] = -p.d.1;
    j[(5, 2)] = p.d.0;
    j[(5, 3)] = -p.d.1;
    j
}

pub fn hopf_nf_amplitude_jacobian(s: &[f64], p: &HopfNfParams) -> DMatrix<f64> {
    let vx = Complex64::new(s[0], s[1]);
    let vy = Complex64::new(s[2], s[3]);
    let sx = vx.norm_sqr();
    let sy = vy.norm_sqr();
    let (a, b, c) = (p.a_c(), p.b_c(), p.c_c());
    let lin = Complex64::new(p.lambda, p.omega);
    let mut j = DMatrix::zeros(4, 4);

    // f = (lin + a(sx+sy) + b sx) vx + c conj(vx) vy^2
    let wx = lin + a * (sx + sy) + b * sx;
    wirtinger_block(&mut j, 0, 0, wx + (a + b) * sx, (a + b) * vx * vx + c * vy * vy);
    wirtinger_block(&mut j, 0, 2, a * vx * vy.conj() + 2.0 * c * vx.conj() * vy, a * vx * vy);

    let wy = lin + a * (sx + sy) + b * sy;
    wirtinger_block(&mut j, 2, 2, wy + (a + b) * sy, (a + b) * vy * vy + c * vx * vx);
    wirtinger_block(&mut j, 2, 0, a * vy * vx.conj() + 2.0 * c * vy.conj() * vx, a * vy * vx);
    j
}

/// A vector field restricted to a flow-invariant linear subspace.
///
/// `embed` maps subspace coordinates to full coordinates; the restriction is
/// `u' = pinv(E) f(E u)`, exact whenever `f` maps the subspace into itself.
#[derive(Debug, Clone)]
pub struct Restricted<F: VectorField> {
    base: F,
    embed: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl<F: VectorField> Restricted<F> {
    pub fn new(base: F, embed: DMatrix<f64>) -> Self {
        assert_eq!(embed.nrows(), base.dim(), "embedding rows must match base dim");
        let gram = embed.transpose() * &embed;
        let pinv = gram
            .lu()
            .solve(&embed.transpose())
            .expect("embedding must have full column rank");
        Self { base, embed, pinv }
    }

    pub fn embed_state(&self, sub: &[f64]) -> Vec<f64> {
        let v = &self.embed * DMatrix::from_column_slice(sub.len(), 1, sub);
        v.column(0).iter().copied().collect()
    }

    pub fn project_state(&self, full: &[f64]) -> Vec<f64> {
        let v = &self.pinv * DMatrix::from_column_slice(full.len(), 1, full);
        v.column(0).iter().copied().collect()
    }

    pub fn base(&self) -> &F {
        &self.base
    }
}

impl<F: VectorField> VectorField for Restricted<F> {
    fn dim(&self) -> usize {
        self.embed.ncols()
    }

    fn eval(&self, state: &[f64], out: &mut [f64]) {
        let full = self.embed_state(state);
        let f = self.base.eval_vec(&full);
        let v = &self.pinv * DMatrix::from_column_slice(f.len(), 1, &f);
        out.copy_from_slice(v.column(0).as_slice());
    }

    fn jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        let full = self.embed_state(state);
        &self.pinv * self.base.jacobian(&full) * &self.embed
    }
}

/// Embedding of the x-axis invariant subspace `{cy = dy = 0}` of the polar
/// core: coordinates `[rx, cx, dx, ry]`.
pub fn axis_subspace_embedding() -> DMatrix<f64> {
    let mut e = DMatrix::zeros(6, 4);
    e[(0, 0)] = 1.0;
    e[(1, 1)] = 1.0;
    e[(2, 2)] = 1.0;
    e[(3, 3)] = 1.0;
    e
}

/// Embedding of the diagonal invariant subspace `{rx = ry, cx = cy, dx = dy}`
/// of the polar core: coordinates `[r, c, d]`.
pub fn diagonal_subspace_embedding() -> DMatrix<f64> {
    let mut e = DMatrix::zeros(6, 3);
    for i in 0..3 {
        e[(i, i)] = 1.0;
        e[(i + 3, i)] = 1.0;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn amplitude_rhs_vanishes_on_squares() {
        // |ax|^2 = |ay|^2 = mu / (2 + beta)
        let p = ModelParams { mu: 0.5, beta: -1.5, ..fig2_params() };
        let mut out = [0.0; 4];
        amplitude_rhs(&[1.0, 0.0, 1.0, 0.0], &p, &mut out);
        for v in out {
            assert!(v.abs() < 1e-15, "squares not an equilibrium: {out:?}");
        }
    }

    #[test]
    fn amplitude_rhs_vanishes_on_rolls() {
        let p = ModelParams { mu: 1.0, ..fig2_params() };
        let mut out = [0.0; 4];
        amplitude_rhs(&[1.0, 0.0, 0.0, 0.0], &p, &mut out);
        for v in out {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_is_equilibrium_everywhere() {
        let spec_list: Vec<SystemSpec> = vec![
            SystemSpec::Amplitude(fig2_params()),
            SystemSpec::Full(fig2_params()),
            SystemSpec::Polar(fig2_params()),
            SystemSpec::PolarCore(fig2_params()),
            SystemSpec::PitchforkNf(PitchforkNfParams::default()),
            SystemSpec::HopfNf(HopfNfParams::default()),
        ];
        for spec in spec_list {
            let s = vec![0.0; spec.dim()];
            let out = spec.eval_vec(&s);
            assert!(out.iter().all(|v| *v == 0.0), "{spec:?}");
        }
    }

    #[test]
    fn full_rhs_vanishes_on_squares_with_zero_shear() {
        let p = ModelParams { mu: 1.0, beta: -1.5, ..fig2_params() };
        let r = (p.mu / (2.0 + p.beta)).sqrt(); // sqrt(2)
        let s = [r, 0.0, 0.0, 0.0, r, 0.0, 0.0, 0.0];
        let mut out = [0.0; 8];
        full_rhs(&s, &p, &mut out);
        for v in out {
            assert!(v.abs() < 1e-14, "{out:?}");
        }
    }

    #[test]
    fn full_rhs_vanishes_on_tsq_closed_form() {
        // rx^2 = 1 + Q, ry^2 = mu - (1+beta)(1+Q), gamma cx^2 = mu - rx^2 - (1+beta) ry^2
        let p = ModelParams { mu: 1.2, ..fig2_params() };
        let rx = (1.0 + p.q).sqrt();
        let ry = (p.mu - (1.0 + p.beta) * (1.0 + p.q)).sqrt();
        let cx = 0.3f64.sqrt();
        let s = [rx, 0.0, cx, cx, ry, 0.0, 0.0, 0.0];
        let mut out = [0.0; 8];
        full_rhs(&s, &p, &mut out);
        // the phase direction keeps rotating: da_x/dt = i D a_x c_x
        assert!((out[0]).abs() < 1e-14);
        assert!((out[1] - p.d * rx * cx).abs() < 1e-14);
        for v in &out[2..] {
            assert!(v.abs() < 1e-14, "{out:?}");
        }
    }

    #[test]
    fn polar_drift_equation() {
        let p = ModelParams { d: 2.0, ..fig2_params() };
        let s = [0.4, 1.0, 0.5, 0.2, 0.7, -2.0, 0.1, 0.3];
        let mut out = [0.0; 8];
        polar_rhs(&s, &p, &mut out);
        assert_eq!(out[1], 1.0); // D * cx = 2 * 0.5
        assert_eq!(out[5], 0.2); // D * cy = 2 * 0.1
    }

    #[test]
    fn pitchfork_nf_tsq_point() {
        let p = PitchforkNfParams { lambda: 1.0, a: -1.0, b: 0.0, d: 0.7 };
        let mut out = [0.0; 4];
        pitchfork_nf_rhs(&[1.0, 0.0, 0.0, 0.0], &p, &mut out);
        assert!(out[0].abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
        assert_eq!(out[2], 0.7);
        assert_eq!(out[3], 0.0);
    }

    #[test]
    fn hopf_nf_psq_is_rigid_rotation() {
        // |vx|^2 = -lambda / Re(A+B) = 0.05; amplitude derivative must vanish.
        let p = HopfNfParams::default();
        let rho = 0.05f64.sqrt();
        let mut out = [0.0; 6];
        hopf_nf_rhs(&[rho, 0.0, 0.0, 0.0, 0.0, 0.0], &p, &mut out);
        let vdot = Complex64::new(out[0], out[1]);
        let radial = (Complex64::new(rho, 0.0).conj() * vdot).re / rho;
        assert!(radial.abs() < 1e-15, "radial derivative {radial}");
        // rotation rate = omega + Im(A+B) rho^2 = omega here
        let rate = (Complex64::new(rho, 0.0).conj() * vdot).im / (rho * rho);
        assert!((rate - p.omega).abs() < 1e-14);
    }

    #[test]
    fn hopf_nf_apw_ansatz_reduction() {
        // vy = -i vx collapses the coupling to (2A + B - C)|vx|^2.
        let p = HopfNfParams {
            lambda: 0.3,
            omega: 1.3,
            a: (-1.0, 0.4),
            b: (-0.5, -0.2),
            c: (0.3, 0.1),
            d: (1.0, 0.0),
        };
        let vx = Complex64::new(0.23, -0.11);
        let vy = -Complex64::i() * vx;
        let s = [vx.re, vx.im, vy.re, vy.im];
        let mut out = [0.0; 4];
        hopf_nf_amplitude_rhs(&s, &p, &mut out);
        let got = Complex64::new(out[0], out[1]);
        let coeff = Complex64::new(p.lambda, p.omega)
            + (2.0 * p.a_c() + p.b_c() - p.c_c()) * vx.norm_sqr();
        let want = coeff * vx;
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn full_jacobian_at_origin_is_block_diagonal() {
        let p = fig2_params();
        let j = full_jacobian(&[0.0; 8], &p);
        // amplitude blocks mu * I
        assert_eq!(j[(0, 0)], p.mu);
        assert_eq!(j[(1, 1)], p.mu);
        assert_eq!(j[(0, 1)], 0.0);
        // shear block [[-1, -Q], [zeta, -zeta]]
        assert_eq!(j[(2, 2)], -1.0);
        assert_eq!(j[(2, 3)], -p.q);
        assert_eq!(j[(3, 2)], p.zeta);
        assert_eq!(j[(3, 3)], -p.zeta);
    }

    fn fd_jacobian<F: VectorField>(f: &F, s: &[f64], h: f64) -> DMatrix<f64> {
        let n = f.dim();
        let mut j = DMatrix::zeros(n, n);
        for col in 0..n {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[col] += h;
            sm[col] -= h;
            let fp = f.eval_vec(&sp);
            let fm = f.eval_vec(&sm);
            for row in 0..n {
                j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn jacobians_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let specs: Vec<SystemSpec> = vec![
            SystemSpec::Amplitude(fig2_params()),
            SystemSpec::Full(fig2_params()),
            SystemSpec::Polar(fig2_params()),
            SystemSpec::PolarCore(fig2_params()),
            SystemSpec::PitchforkNf(PitchforkNfParams { lambda: 0.4, a: -1.2, b: 0.7, d: 0.9 }),
            SystemSpec::HopfNf(HopfNfParams {
                lambda: 0.2,
                omega: 1.1,
                a: (-1.0, 0.3),
                b: (-0.4, -0.6),
                c: (0.2, 0.5),
                d: (0.8, -0.3),
            }),
        ];
        for spec in &specs {
            for _ in 0..20 {
                let s: Vec<f64> = (0..spec.dim()).map(|_| rng.random_range(-1.2..1.2)).collect();
                let ja = spec.jacobian(&s);
                let jf = fd_jacobian(spec, &s, 1e-6);
                let scale = ja.amax().max(1.0);
                let err = (&ja - &jf).amax() / scale;
                assert!(err < 1e-7, "{spec:?}: fd mismatch {err}");
            }
        }
    }

    #[test]
    fn restricted_subspaces_are_invariant() {
        let p = fig2_params();
        let core = SystemSpec::PolarCore(p);

        let axis = Restricted::new(core, axis_subspace_embedding());
        let u = [1.2, 0.3, 0.2, 1.4];
        let full = axis.embed_state(&u);
        let f_full = core.eval_vec(&full);
        // cy', dy' vanish identically on the subspace
        assert_eq!(f_full[4], 0.0);
        assert_eq!(f_full[5], 0.0);
        let f_sub = axis.eval_vec(&u);
        let back = axis.embed_state(&f_sub);
        for i in 0..6 {
            assert!((back[i] - f_full[i]).abs() < 1e-15);
        }

        let diag = Restricted::new(core, diagonal_subspace_embedding());
        let u = [1.2, 0.3, 0.2];
        let full = diag.embed_state(&u);
        let f_full = core.eval_vec(&full);
        for i in 0..3 {
            assert!((f_full[i] - f_full[i + 3]).abs() < 1e-15);
        }
    }
}
