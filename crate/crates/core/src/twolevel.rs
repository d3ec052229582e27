//! Two-level system `i ∂_t v = H(t) v`,
//! `H = ζσ₃ + [[0, E e^{−iωt}], [Ē e^{iωt}, 0]]`, its SU(2) scattering
//! matrix, and the dipole-coupled pair of two-level systems.
//!
//! The carrier is described by the detuning `δ = ω − 2ζ`. With no carrier
//! (`ω = 0`) the system is the Zakharov–Shabat problem with spectral
//! parameter `ζ`. In the interaction picture the coupling is
//! `V(t) = [[0, E e^{−iδt}], [Ē e^{iδt}, 0]]` and
//! `S = e^{iζt₁σ₃} U(t₁, t₀) e^{−iζt₀σ₃} = [[a, −b̄], [b, ā]]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{operator_schmidt, ComplexMat, SchmidtDecomposition, Unitary};
use crate::numeric::{expm_hermitian, CubicSpline, Dopri5};
use crate::{c64, Complex64, Error, Result};

/// Analytic envelopes are windowed where `|E|` falls below this.
pub const ENVELOPE_CUTOFF: f64 = 1e-10;
/// Accepted unitarity / determinant defect of a computed S-matrix.
pub const SMATRIX_TOL: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// 2×2 propagations are cheap; a tighter tolerance keeps compositions
/// consistent to 1e−9.
fn solver() -> Dopri5 {
    Dopri5::with_tolerance(1e-12, 1e-14)
}

/// Complex pulse envelope `E(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Envelope {
    /// `E = 2ab/(t² + a²)`, area `2πb`.
    Lorentzian { a: f64, b: f64 },
    /// Sum of Lorentzians, `pairs = [(a_k, b_k)]`.
    LorentzianSum { pairs: Vec<[f64; 2]> },
    /// `E = 2c·t/(t² + a²)`: odd, zero area in the symmetric sense.
    OddLorentzian {
        a: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `E = x` on `[−T, T]`.
    Rectangular { x: Complex64, half_width: f64 },
    /// Cubic-spline samples, zero outside.
    Tabulated { t: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct PulseRepr {
    envelope: Envelope,
    #[serde(default)]
    detuning: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<[f64; 2]>,
}

/// Envelope, carrier detuning and support window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PulseRepr", into = "PulseRepr")]
pub struct PulseSpec {
    envelope: Envelope,
    detuning: Option<f64>,
    window: [f64; 2],
    splines: Option<(CubicSpline, CubicSpline)>,
}

impl TryFrom<PulseRepr> for PulseSpec {
    type Error = Error;
    fn try_from(r: PulseRepr) -> Result<Self> {
        let p = PulseSpec::new(r.envelope, r.detuning)?;
        match r.window {
            Some(w) => p.with_window(w),
            None => Ok(p),
        }
    }
}

impl From<PulseSpec> for PulseRepr {
    fn from(p: PulseSpec) -> Self {
        PulseRepr { envelope: p.envelope, detuning: p.detuning, window: Some(p.window) }
    }
}

fn lorentzian_reach(pairs: &[[f64; 2]]) -> f64 {
    let total: f64 = pairs.iter().map(|[a, b]| (2.0 * a * b).abs()).sum();
    let amax = pairs.iter().map(|p| p[0]).fold(0.0, f64::max);
    (total / ENVELOPE_CUTOFF).sqrt().max(12.0 * amax)
}

impl PulseSpec {
    /// `detuning = Some(δ)` sets `ω = 2ζ + δ`; `None` means no carrier.
    pub fn new(envelope: Envelope, detuning: Option<f64>) -> Result<Self> {
        if let Some(d) = detuning {
            if !d.is_finite() {
                return Err(Error::InvalidInput("detuning must be finite".into()));
            }
        }
        let mut splines = None;
        let window = match &envelope {
            Envelope::Lorentzian { a, b } => {
                if !(*a > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidInput("Lorentzian needs a > 0 and finite b".into()));
                }
                let r = lorentzian_reach(&[[*a, *b]]);
                [-r, r]
            }
            Envelope::LorentzianSum { pairs } => {
                if pairs.is_empty() || pairs.iter().any(|[a, b]| !(*a > 0.0 && b.is_finite())) {
                    return Err(Error::InvalidInput("Lorentzian sum needs pairs with a > 0".into()));
                }
                let r = lorentzian_reach(pairs);
                [-r, r]
            }
            Envelope::OddLorentzian { a, c } => {
                if !(*a > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidInput("odd Lorentzian needs a > 0".into()));
                }
                // The 1/t tail never drops below the cutoff at a usable
                // distance; the symmetric window realises the principal value.
                [-1e4 * a, 1e4 * a]
            }
            Envelope::Rectangular { x, half_width } => {
                if !(*half_width > 0.0 && x.re.is_finite() && x.im.is_finite()) {
                    return Err(Error::InvalidInput("rectangular pulse needs a finite amplitude and T > 0".into()));
                }
                [-half_width, *half_width]
            }
            Envelope::Tabulated { t, re, im } => {
                if t.len() < 4 || re.len() != t.len() || im.len() != t.len() {
                    return Err(Error::InvalidInput("tabulated pulse needs ≥ 4 samples with matching lengths".into()));
                }
                splines = Some((CubicSpline::new(t, re)?, CubicSpline::new(t, im)?));
                [t[0], t[t.len() - 1]]
            }
        };
        Ok(Self { envelope, detuning, window, splines })
    }

    pub fn lorentzian(a: f64, b: f64, detuning: Option<f64>) -> Result<Self> {
        Self::new(Envelope::Lorentzian { a, b }, detuning)
    }

    pub fn rectangular(x: Complex64, half_width: f64, detuning: Option<f64>) -> Result<Self> {
        Self::new(Envelope::Rectangular { x, half_width }, detuning)
    }

    /// Widens (never shrinks) the support window.
    pub fn with_window(mut self, w: [f64; 2]) -> Result<Self> {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput("window must satisfy t_min < t_max".into()));
        }
        self.window = match self.envelope {
            // The principal-value window is whatever the caller chooses.
            Envelope::OddLorentzian { .. } => w,
            _ => [w[0].min(self.window[0]), w[1].max(self.window[1])],
        };
        Ok(self)
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn detuning(&self) -> Option<f64> {
        self.detuning
    }

    pub fn window(&self) -> [f64; 2] {
        self.window
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match &self.envelope {
            Envelope::Lorentzian { a, b } => c64(2.0 * a * b / (t * t + a * a), 0.0),
            Envelope::LorentzianSum { pairs } => c64(pairs.iter().map(|[a, b]| 2.0 * a * b / (t * t + a * a)).sum(), 0.0),
            Envelope::OddLorentzian { a, c } => c64(2.0 * c * t / (t * t + a * a), 0.0),
            Envelope::Rectangular { x, half_width } => {
                if t.abs() <= *half_width {
                    *x
                } else {
                    c64(0.0, 0.0)
                }
            }
            Envelope::Tabulated { .. } => {
                let (re, im) = self.splines.as_ref().expect("tabulated pulse has splines");
                if t < re.x_min() || t > re.x_max() {
                    c64(0.0, 0.0)
                } else {
                    c64(re.eval(t), im.eval(t))
                }
            }
        }
    }

    /// `∫ E dt` over the real line where it converges (analytic forms).
    pub fn area(&self) -> Option<Complex64> {
        match &self.envelope {
            Envelope::Lorentzian { b, .. } => Some(c64(2.0 * PI * b, 0.0)),
            Envelope::LorentzianSum { pairs } => Some(c64(pairs.iter().map(|p| 2.0 * PI * p[1]).sum(), 0.0)),
            Envelope::OddLorentzian { .. } => Some(c64(0.0, 0.0)),
            Envelope::Rectangular { x, half_width } => Some(x * (2.0 * half_width)),
            Envelope::Tabulated { .. } => None,
        }
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = vec![t0];
        if let Envelope::Rectangular { half_width, .. } = self.envelope {
            for p in [-half_width, half_width] {
                if (p - t0) * (p - t1) < 0.0 {
                    pts.push(p);
                }
            }
        }
        pts.push(t1);
        if t1 < t0 {
            let n = pts.len();
            pts[1..n - 1].reverse();
        }
        pts
    }

    /// Area of the Lorentzian tails outside the window on the left and right.
    fn lorentzian_tails(&self) -> Option<(f64, f64)> {
        let pairs: Vec<[f64; 2]> = match &self.envelope {
            Envelope::Lorentzian { a, b } => vec![[*a, *b]],
            Envelope::LorentzianSum { pairs } => pairs.clone(),
            _ => return None,
        };
        let [t0, t1] = self.window;
        let left = pairs.iter().map(|[a, b]| 2.0 * b * (PI / 2.0 + (t0 / a).atan())).sum();
        let right = pairs.iter().map(|[a, b]| 2.0 * b * (PI / 2.0 - (t1 / a).atan())).sum();
        Some((left, right))
    }
}

fn mat2(y: &[Complex64; 4]) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(2, 2, y)
}

fn identity4() -> [Complex64; 4] {
    [c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]
}

/// `U' = −i H U` for a 2×2 `H = [[h00, h01], [h10, h11]]`, column-major state.
fn apply_generator(h: [Complex64; 4], y: &[Complex64; 4]) -> [Complex64; 4] {
    let [h00, h10, h01, h11] = h;
    let m = |c0: Complex64, c1: Complex64| [-I * (h00 * c0 + h01 * c1), -I * (h10 * c0 + h11 * c1)];
    let [a, b] = m(y[0], y[1]);
    let [c, d] = m(y[2], y[3]);
    [a, b, c, d]
}

/// Lab-frame propagator `U(t₁, t₀)` at real detuning parameter `ζ`.
pub fn propagate(pulse: &PulseSpec, zeta: f64, t0: f64, t1: f64) -> Result<Unitary> {
    if !(t0.is_finite() && t1.is_finite() && zeta.is_finite()) {
        return Err(Error::InvalidInput("times and ζ must be finite".into()));
    }
    let omega = pulse.detuning.map_or(0.0, |d| 2.0 * zeta + d);
    let rhs = |t: f64, y: &[Complex64; 4]| {
        let e = pulse.eval(t) * (-I * omega * t).exp();
        apply_generator([c64(zeta, 0.0), e.conj(), e, c64(-zeta, 0.0)], y)
    };
    let y = solver().integrate_through(rhs, &pulse.breakpoints(t0, t1), identity4())?;
    Unitary::with_tolerance(ComplexMat::new(mat2(&y))?, SMATRIX_TOL)
}

/// Interaction-picture detuning `δ` used at spectral parameter `ζ`.
fn effective_detuning(pulse: &PulseSpec, zeta: f64) -> f64 {
    pulse.detuning.unwrap_or(-2.0 * zeta)
}

/// `S(ζ)` over the support window. On resonance the Lorentzian tails
/// beyond the window are added analytically (the coupling there is a
/// fixed multiple of σ₁).
pub fn scattering_matrix(pulse: &PulseSpec, zeta: f64) -> Result<Unitary> {
    if !zeta.is_finite() {
        return Err(Error::InvalidInput("ζ must be finite".into()));
    }
    let delta = effective_detuning(pulse, zeta);
    let [t0, t1] = pulse.window;
    let rhs = |t: f64, y: &[Complex64; 4]| {
        let e = pulse.eval(t) * (-I * delta * t).exp();
        apply_generator([c64(0.0, 0.0), e.conj(), e, c64(0.0, 0.0)], y)
    };
    let y = solver().integrate_through(rhs, &pulse.breakpoints(t0, t1), identity4())?;
    let mut s = mat2(&y);
    if delta == 0.0 {
        if let Some((left, right)) = pulse.lorentzian_tails() {
            s = rotation_x(right) * s * rotation_x(left);
        }
    }
    let u = Unitary::with_tolerance(ComplexMat::new(s)?, SMATRIX_TOL)?;
    let det_defect = (u.as_mat().determinant() - 1.0).norm();
    if det_defect > SMATRIX_TOL {
        return Err(Error::Integration { at: t1, reason: format!("det S − 1 = {det_defect:e}") });
    }
    Ok(u)
}

/// `exp(−iθσ₁)`.
pub fn rotation_x(theta: f64) -> DMatrix<Complex64> {
    let (c, s) = (theta.cos(), theta.sin());
    DMatrix::from_row_slice(2, 2, &[c64(c, 0.0), c64(0.0, -s), c64(0.0, -s), c64(c, 0.0)])
}

/// `S(ζ)` over a grid of spectral parameters, in parallel.
pub fn scattering_scan(pulse: &PulseSpec, zetas: &[f64]) -> Result<Vec<Unitary>> {
    zetas.par_iter().map(|&z| scattering_matrix(pulse, z)).collect()
}

/// `a(ζ)` continued to complex `ζ` for a carrier-free pulse, from the
/// column `u = e^{iζt} v`, `u' = −i[[0, E], [Ē, −2ζ]]u`, `u(t₀) = e₁`.
pub fn jost_a(pulse: &PulseSpec, zeta: Complex64) -> Result<Complex64> {
    if pulse.detuning.is_some() {
        return Err(Error::InvalidInput("complex ζ continuation needs a carrier-free pulse".into()));
    }
    let [t0, t1] = pulse.window;
    let rhs = |t: f64, u: &[Complex64; 2]| {
        let e = pulse.eval(t);
        [-I * e * u[1], -I * (e.conj() * u[0] - 2.0 * zeta * u[1])]
    };
    let u = Dopri5::default().integrate_through(rhs, &pulse.breakpoints(t0, t1), [c64(1.0, 0.0), c64(0.0, 0.0)])?;
    Ok(u[0])
}

/// Secant refinement of a zero of `a(ζ)` in the upper half plane.
pub fn find_a_zero(pulse: &PulseSpec, guess: Complex64) -> Result<Complex64> {
    let mut z0 = guess;
    let mut z1 = guess + c64(1e-3, 1e-3);
    let mut f0 = jost_a(pulse, z0)?;
    let mut f1 = jost_a(pulse, z1)?;
    for _ in 0..80 {
        if (f1 - f0).norm() == 0.0 {
            break;
        }
        let z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
        if (z2 - z1).norm() < 1e-12 * (1.0 + z2.norm()) {
            return Ok(z2);
        }
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = jost_a(pulse, z1)?;
    }
    if f1.norm() < 1e-9 {
        return Ok(z1);
    }
    Err(Error::Integration { at: pulse.window[1], reason: format!("no zero of a(ζ) found near {guess}") })
}

/// Number of zeros of `a` inside a circle, by the argument principle.
pub fn count_a_zeros(pulse: &PulseSpec, center: Complex64, radius: f64, samples: usize) -> Result<i64> {
    let n = samples.max(16);
    let vals: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| jost_a(pulse, center + Complex64::from_polar(radius, 2.0 * PI * i as f64 / n as f64)))
        .collect::<Result<_>>()?;
    let mut winding = 0.0;
    for i in 0..n {
        let step = (vals[(i + 1) % n] / vals[i]).arg();
        if step.abs() > 0.5 * PI {
            return Err(Error::Integration {
                at: 0.0,
                reason: "argument of a(ζ) jumps between samples; use more samples".into(),
            });
        }
        winding += step;
    }
    Ok((winding / (2.0 * PI)).round() as i64)
}

/// Dipole-coupled pair: dipole moments, level energies, field amplitude
/// `x`, interaction `y` and half-duration `T`. Fields missing from JSON
/// take their default values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DipoleParams {
    #[serde(rename = "d_A")]
    pub d_a: Complex64,
    #[serde(rename = "d_B")]
    pub d_b: Complex64,
    #[serde(rename = "W_plus_A")]
    pub w_plus_a: f64,
    #[serde(rename = "W_minus_A")]
    pub w_minus_a: f64,
    #[serde(rename = "W_plus_B")]
    pub w_plus_b: f64,
    #[serde(rename = "W_minus_B")]
    pub w_minus_b: f64,
    pub x: Complex64,
    pub y: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl Default for DipoleParams {
    fn default() -> Self {
        Self {
            d_a: c64(1.0, 0.0),
            d_b: c64(0.8, 0.3),
            w_plus_a: 1.0,
            w_minus_a: -1.0,
            w_plus_b: 0.7,
            w_minus_b: -0.7,
            x: c64(0.1, 0.0),
            y: 0.5,
            t: 1.0,
        }
    }
}

impl DipoleParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.d_a.re, self.d_a.im, self.d_b.re, self.d_b.im, self.w_plus_a, self.w_minus_a, self.w_plus_b,
            self.w_minus_b, self.x.re, self.x.im, self.y, self.t,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dipole parameters must be finite".into()));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidInput("T must be positive".into()));
        }
        Ok(())
    }
}

fn kron2(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `H_AB = (H_A + f·d̂_A) ⊗ I + I ⊗ (H_B + f·d̂_B) + y·d̂_A ⊗ d̂_B` with
/// `H_X = diag(W₊, W₋)`, `d̂_X = [[0, d], [d̄, 0]]` and the field term
/// `[[0, f d], [f̄ d̄, 0]]`.
pub fn dipole_hamiltonian(p: &DipoleParams, field: Complex64, interaction: f64) -> Result<ComplexMat> {
    p.validate()?;
    let z = c64(0.0, 0.0);
    let single = |wp: f64, wm: f64, d: Complex64| {
        DMatrix::from_row_slice(2, 2, &[c64(wp, 0.0), field * d, (field * d).conj(), c64(wm, 0.0)])
    };
    let dip = |d: Complex64| DMatrix::from_row_slice(2, 2, &[z, d, d.conj(), z]);
    let id = DMatrix::<Complex64>::identity(2, 2);
    let h = kron2(&single(p.w_plus_a, p.w_minus_a, p.d_a), &id)
        + kron2(&id, &single(p.w_plus_b, p.w_minus_b, p.d_b))
        + kron2(&dip(p.d_a), &dip(p.d_b)) * c64(interaction, 0.0);
    ComplexMat::new(h)
}

/// `F(T) = e^{iT H(0,0)} e^{−2iT H(x,y)} e^{iT H(0,0)}`.
pub fn f_matrix(p: &DipoleParams) -> Result<Unitary> {
    f_matrix_at(p, p.t)
}

pub fn f_matrix_at(p: &DipoleParams, t: f64) -> Result<Unitary> {
    let h0 = dipole_hamiltonian(p, c64(0.0, 0.0), 0.0)?.into_matrix();
    let h = dipole_hamiltonian(p, p.x, p.y)?.into_matrix();
    let outer = expm_hermitian(&h0, c64(0.0, t));
    let inner = expm_hermitian(&h, c64(0.0, -2.0 * t));
    Unitary::new(ComplexMat::new(&outer * inner * &outer)?)
}

/// Operator-Schmidt decomposition of `F(T)`.
pub fn entanglement(p: &DipoleParams) -> Result<SchmidtDecomposition> {
    operator_schmidt(&f_matrix(p)?)
}

/// Four-level S-matrix for time-dependent field `f(t)` and coupling `g(t)`
/// over `points` (first to last, with breakpoints), free evolution under
/// `H(0,0)` stripped at both ends.
pub fn dipole_smatrix<Fe, Fg>(p: &DipoleParams, field: Fe, coupling: Fg, points: &[f64]) -> Result<Unitary>
where
    Fe: Fn(f64) -> Complex64,
    Fg: Fn(f64) -> f64,
{
    p.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least a start and an end time".into()));
    }
    let h0 = dipole_hamiltonian(p, c64(0.0, 0.0), 0.0)?.into_matrix();
    let da = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), p.d_a, p.d_a.conj(), c64(0.0, 0.0)]);
    let db = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), p.d_b, p.d_b.conj(), c64(0.0, 0.0)]);
    let id = DMatrix::<Complex64>::identity(2, 2);
    let coupling_op = kron2(&da, &db);
    // Field-dependent part: f·(σ⁺ parts) and f̄·(σ⁻ parts), kept separate.
    let up = |d: Complex64| DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), d, c64(0.0, 0.0), c64(0.0, 0.0)]);
    let field_up = kron2(&up(p.d_a), &id) + kron2(&id, &up(p.d_b));
    let field_down = field_up.adjoint();

    let rhs = |t: f64, y: &[Complex64; 16]| {
        let f = field(t);
        let h = &h0 + &field_up * f + &field_down * f.conj() + &coupling_op * c64(coupling(t), 0.0);
        let u = DMatrix::from_column_slice(4, 4, y);
        let du = h * u * (-I);
        let mut out = [c64(0.0, 0.0); 16];
        out.copy_from_slice(du.as_slice());
        out
    };
    let mut y0 = [c64(0.0, 0.0); 16];
    for i in 0..4 {
        y0[i * 5] = c64(1.0, 0.0);
    }
    let y = Dopri5::default().integrate_through(rhs, points, y0)?;
    let u = DMatrix::from_column_slice(4, 4, &y);
    let (t0, t1) = (points[0], points[points.len() - 1]);
    let s = expm_hermitian(&h0, c64(0.0, t1)) * u * expm_hermitian(&h0, c64(0.0, -t0));
    Unitary::with_tolerance(ComplexMat::new(s)?, SMATRIX_TOL)
}

/// S-matrix of the rectangular drive `x·1_{[−T,T]}`, `y·1_{[−T,T]}`.
pub fn dipole_rect_smatrix(p: &DipoleParams) -> Result<Unitary> {
    let t = p.t;
    let inside = |s: f64| s.abs() <= t;
    dipole_smatrix(
        p,
        |s| if inside(s) { p.x } else { c64(0.0, 0.0) },
        |s| if inside(s) { p.y } else { 0.0 },
        &[-t - 1.0, -t, t, t + 1.0],
    )
}
