//! Gelfand–Levitan–Marchenko inversion.
//!
//! Line problem: `K(x,y) + C(x+y) + ∫_x^∞ K(x,s) C(s+y) ds = 0` and
//! `Q(x) = 2 d/dx K(x,x)`, with
//! `C(z) = Σ c_j e^{−η_j z} + (1/2π)∫ R(ξ) e^{iξz} dξ`, `c_j = −iγ_j`,
//! `γ_j = b_j / a'(iη_j)`.
//!
//! Two-level problem (focusing Zakharov–Shabat): with
//! `F(t) = (1/2π)∫ r(ζ) e^{iζt} dζ + Σ m_j e^{iζ_j t}` and `G = −F̄`,
//!
//! ```text
//! K21(t,s) + G(t+s) + ∫_t^∞ K22(t,z) G(z+s) dz = 0
//! K22(t,s) +          ∫_t^∞ K21(t,z) F(z+s) dz = 0
//! ```
//!
//! and `E(t) = −2i K21(t,t)`.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct1d::PotentialSpec;
use crate::dispersion::{ReflectionData, TransmissionReconstructor, END_DECAY};
use crate::numeric::{composite_gauss_legendre, pv_integral, trapezoid, CubicSpline, FilonCubic};
use crate::twolevel::{Envelope, PulseSpec};
use crate::{c64, Complex64, Error, Result};

/// Kernels are truncated where they fall below this.
pub const KERNEL_DECAY: f64 = 1e-8;

/// Tabulated Marchenko kernel `C(z)` (or `F(t)` for the two-level problem).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct MarchenkoKernel {
    z: Vec<f64>,
    c: Vec<Complex64>,
    /// Bound-state coefficients `(η_j, c_j)`, kept for reference.
    discrete: Vec<(f64, Complex64)>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    z: Vec<f64>,
    re_c: Vec<f64>,
    im_c: Vec<f64>,
    #[serde(default)]
    discrete: Vec<(f64, [f64; 2])>,
}

impl TryFrom<KernelRepr> for MarchenkoKernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        if r.re_c.len() != r.z.len() || r.im_c.len() != r.z.len() {
            return Err(Error::DimensionMismatch { expected: r.z.len(), found: r.re_c.len().min(r.im_c.len()) });
        }
        let c = r.re_c.iter().zip(&r.im_c).map(|(&a, &b)| c64(a, b)).collect();
        let discrete = r.discrete.into_iter().map(|(e, [a, b])| (e, c64(a, b))).collect();
        MarchenkoKernel::new(r.z, c, discrete)
    }
}

impl From<MarchenkoKernel> for KernelRepr {
    fn from(k: MarchenkoKernel) -> Self {
        KernelRepr {
            re_c: k.c.iter().map(|v| v.re).collect(),
            im_c: k.c.iter().map(|v| v.im).collect(),
            z: k.z,
            discrete: k.discrete.into_iter().map(|(e, c)| (e, [c.re, c.im])).collect(),
        }
    }
}

impl MarchenkoKernel {
    pub fn new(z: Vec<f64>, c: Vec<Complex64>, discrete: Vec<(f64, Complex64)>) -> Result<Self> {
        if z.len() != c.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), found: c.len() });
        }
        if z.len() < 4 || z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("kernel grid needs ≥ 4 strictly ascending points".into()));
        }
        if c.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("kernel values must be finite".into()));
        }
        let tail = c[c.len() - 1].norm();
        if tail >= KERNEL_DECAY {
            return Err(Error::InvalidInput(format!(
                "kernel has |C| = {tail:e} at z = {}; extend the grid until it decays below {KERNEL_DECAY:e}",
                z[z.len() - 1]
            )));
        }
        Ok(Self { z, c, discrete })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn values(&self) -> &[Complex64] {
        &self.c
    }

    pub fn discrete(&self) -> &[(f64, Complex64)] {
        &self.discrete
    }

    /// Smallest tabulated `z` beyond which `|C| < tol` everywhere on the grid.
    pub fn cutoff(&self, tol: f64) -> f64 {
        let idx = self.c.iter().rposition(|v| v.norm() >= tol);
        match idx {
            Some(i) => self.z[(i + 1).min(self.z.len() - 1)],
            None => self.z[0],
        }
    }

    fn is_real(&self) -> bool {
        let scale = self.c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.c.iter().all(|v| v.im.abs() <= 1e-13 * scale.max(1e-300))
    }
}

/// `(1/2π)∫ f(ξ) e^{iξz} dξ` for `f` splined through its samples.
fn fourier(f: &FilonCubic, z: f64) -> Complex64 {
    f.integral(z) / (2.0 * PI)
}

/// Bound-state coefficients `c_j = −i b_j / a'(iη_j)`.
pub fn bound_state_coefficients(data: &ReflectionData) -> Result<Vec<(f64, Complex64)>> {
    let rec = TransmissionReconstructor::new(data)?;
    data.bound_states()
        .iter()
        .enumerate()
        .map(|(j, bs)| {
            let gamma = c64(bs.norming, 0.0) / rec.a_derivative_at_bound_state(j)?;
            Ok((bs.eta, c64(0.0, -1.0) * gamma))
        })
        .collect()
}

/// Evaluates `C(z)` on `z_grid`.
pub fn marchenko_kernel(data: &ReflectionData, z_grid: &[f64]) -> Result<MarchenkoKernel> {
    let discrete = bound_state_coefficients(data)?;
    let r = FilonCubic::new(data.k(), data.r())?;
    let c: Vec<Complex64> = z_grid
        .par_iter()
        .map(|&z| {
            let bound: Complex64 = discrete.iter().map(|&(eta, cj)| cj * (-eta * z).exp()).sum();
            bound + fourier(&r, z)
        })
        .collect();
    MarchenkoKernel::new(z_grid.to_vec(), c, discrete)
}

/// Uniform grid `[z_min, z_max]` with the given step.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Nyström discretisation controls.
#[derive(Debug, Clone, Copy)]
pub struct NystromOptions {
    /// Gauss–Legendre panel width.
    pub panel: f64,
    /// Nodes per panel.
    pub nodes: usize,
    /// Central-difference step for `d/dx K(x,x)`.
    pub diff_step: f64,
    /// Kernel magnitude below which the integration range is cut.
    pub kernel_tol: f64,
}

impl Default for NystromOptions {
    fn default() -> Self {
        Self { panel: 2.0, nodes: 16, diff_step: 0.01, kernel_tol: KERNEL_DECAY }
    }
}

impl NystromOptions {
    /// Same layout with half the node spacing.
    pub fn refined(&self) -> Self {
        Self { panel: 0.5 * self.panel, ..*self }
    }
}

/// Scalar field used by the Nyström solves: real kernels stay real.
trait Field: ComplexField<RealField = f64> + Copy {
    fn from_c(c: Complex64) -> Self;
    fn to_c(self) -> Complex64;
}

impl Field for f64 {
    fn from_c(c: Complex64) -> Self {
        c.re
    }
    fn to_c(self) -> Complex64 {
        c64(self, 0.0)
    }
}

impl Field for Complex64 {
    fn from_c(c: Complex64) -> Self {
        c
    }
    fn to_c(self) -> Complex64 {
        self
    }
}

/// Spline interpolant of a complex kernel, zero beyond the right end.
struct KernelInterp {
    re: CubicSpline,
    im: CubicSpline,
    lo: f64,
    hi: f64,
}

impl KernelInterp {
    fn new(z: &[f64], c: &[Complex64]) -> Result<Self> {
        let re: Vec<f64> = c.iter().map(|v| v.re).collect();
        let im: Vec<f64> = c.iter().map(|v| v.im).collect();
        Ok(Self { re: CubicSpline::new(z, &re)?, im: CubicSpline::new(z, &im)?, lo: z[0], hi: z[z.len() - 1] })
    }

    fn eval(&self, z: f64) -> Result<Complex64> {
        if z > self.hi {
            return Ok(c64(0.0, 0.0));
        }
        if z < self.lo - 1e-12 * (1.0 + self.lo.abs()) {
            return Err(Error::InvalidInput(format!(
                "kernel needed at z = {z} below its grid start {}; extend the kernel grid",
                self.lo
            )));
        }
        Ok(c64(self.re.eval(z), self.im.eval(z)))
    }
}

/// `K(x,x)` from one Nyström solve of the line equation.
fn line_diagonal<T: Field>(c: &KernelInterp, x: f64, s_max: f64, opts: &NystromOptions) -> Result<Complex64> {
    let c0 = T::from_c(c.eval(2.0 * x)?);
    if s_max <= x {
        return Ok((-c0).to_c());
    }
    let (s, w) = composite_gauss_legendre(x, s_max, opts.panel, opts.nodes);
    let n = s.len();
    let mut m = DMatrix::<T>::identity(n, n);
    let mut rhs = DVector::<T>::zeros(n);
    let mut edge = Vec::with_capacity(n);
    for i in 0..n {
        rhs[i] = -T::from_c(c.eval(x + s[i])?);
        edge.push(T::from_c(c.eval(s[i] + x)?));
        for j in 0..n {
            m[(i, j)] += T::from_c(c.eval(s[j] + s[i])?) * T::from_real(w[j]);
        }
    }
    let k = m.lu().solve(&rhs).ok_or_else(|| {
        Error::Singular(format!("Marchenko system singular at x = {x}; refine the grid or reduce the data"))
    })?;
    let mut acc = -c0;
    for j in 0..n {
        acc -= T::from_real(w[j]) * k[j] * edge[j];
    }
    Ok(acc.to_c())
}

/// Recovered line potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveredPotential {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

impl RecoveredPotential {
    /// Tabulated potential for the direct solver; requires decay at both ends.
    pub fn to_potential(&self) -> Result<PotentialSpec> {
        let ends = self.q[0].abs().max(self.q[self.q.len() - 1].abs());
        if ends > 1e-4 {
            return Err(Error::InvalidInput(format!(
                "recovered potential has |Q| = {ends:e} at the grid ends; widen the x grid"
            )));
        }
        PotentialSpec::tabulated(self.x.clone(), self.q.clone())
    }
}

/// `K(x, x)` on an arbitrary set of points.
pub fn marchenko_diagonal(kernel: &MarchenkoKernel, xs: &[f64], opts: &NystromOptions) -> Result<Vec<Complex64>> {
    let interp = KernelInterp::new(&kernel.z, &kernel.c)?;
    let z_cut = kernel.cutoff(opts.kernel_tol);
    let real = kernel.is_real();
    xs.par_iter()
        .map(|&x| {
            let s_max = z_cut - x;
            if real {
                line_diagonal::<f64>(&interp, x, s_max, opts)
            } else {
                line_diagonal::<Complex64>(&interp, x, s_max, opts)
            }
        })
        .collect()
}

pub fn solve_marchenko(kernel: &MarchenkoKernel, x_grid: &[f64]) -> Result<RecoveredPotential> {
    solve_marchenko_with(kernel, x_grid, &NystromOptions::default())
}

/// Solves the line equation at `x ± h` and `x ± 2h` for each grid point and
/// returns `Q = 2 d/dx K(x,x)` by fourth-order central differences. Points
/// are shared when the grid spacing equals `h`.
pub fn solve_marchenko_with(kernel: &MarchenkoKernel, x_grid: &[f64], opts: &NystromOptions) -> Result<RecoveredPotential> {
    if x_grid.is_empty() || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("x grid must be strictly ascending".into()));
    }
    let h = opts.diff_step;
    let key = |x: f64| (x / h * 64.0).round() as i64;
    let mut pts: Vec<f64> = x_grid.iter().flat_map(|&x| [x - 2.0 * h, x - h, x + h, x + 2.0 * h]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| key(*a) == key(*b));
    let diag = marchenko_diagonal(kernel, &pts, opts)?;
    let lookup = |x: f64| -> Complex64 {
        let i = pts.partition_point(|&p| key(p) < key(x));
        diag[i]
    };
    let mut q = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let d = (lookup(x - 2.0 * h) - lookup(x + 2.0 * h) + (lookup(x + h) - lookup(x - h)) * 8.0) / (6.0 * h);
        if d.im.abs() > 1e-6 * (1.0 + d.re.abs()) {
            log::warn!("recovered potential has imaginary part {:e} at x = {x}", d.im);
        }
        q.push(d.re);
    }
    Ok(RecoveredPotential { x: x_grid.to_vec(), q })
}

/// Reflection data to potential on `[−x_max, x_max]` with grid spacing
/// `step`; without `x_max` the half-width is half the kernel's decay length.
pub fn invert_reflection_data(data: &ReflectionData, x_max: Option<f64>, step: f64) -> Result<RecoveredPotential> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput("x step must be positive".into()));
    }
    let x_max = match x_max {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(Error::InvalidInput("x_max must be positive".into())),
        None => (0.5 * marchenko_kernel_auto(data, 0.0, 0.01)?.cutoff(KERNEL_DECAY)).max(5.0),
    };
    let kernel = marchenko_kernel_auto(data, -x_max - 3.0 * step, 0.01)?;
    let opts = NystromOptions { diff_step: step, nodes: 10, ..Default::default() };
    solve_marchenko_with(&kernel, &uniform_grid(-x_max, x_max, step), &opts)
}

/// Discrete two-level datum: zero `ζ_j` of `a` (Im > 0) and its `d_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDatum {
    pub zeta: [f64; 2],
    pub d: [f64; 2],
}

impl DiscreteDatum {
    pub fn new(zeta: Complex64, d: Complex64) -> Result<Self> {
        if !(zeta.im > 0.0) {
            return Err(Error::InvalidInput("discrete eigenvalues need Im ζ > 0".into()));
        }
        Ok(Self { zeta: [zeta.re, zeta.im], d: [d.re, d.im] })
    }

    pub fn zeta(&self) -> Complex64 {
        c64(self.zeta[0], self.zeta[1])
    }

    pub fn d(&self) -> Complex64 {
        c64(self.d[0], self.d[1])
    }
}

/// Scattering data of the two-level problem: `b(ζ)` on a real grid plus zeros of `a`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TwoLevelRepr", into = "TwoLevelRepr")]
pub struct TwoLevelScatteringData {
    zeta: Vec<f64>,
    b: Vec<Complex64>,
    discrete: Vec<DiscreteDatum>,
}

#[derive(Serialize, Deserialize)]
struct TwoLevelRepr {
    zeta: Vec<f64>,
    re_b: Vec<f64>,
    im_b: Vec<f64>,
    #[serde(default)]
    discrete: Vec<DiscreteDatum>,
}

impl TryFrom<TwoLevelRepr> for TwoLevelScatteringData {
    type Error = Error;
    fn try_from(r: TwoLevelRepr) -> Result<Self> {
        if r.re_b.len() != r.zeta.len() || r.im_b.len() != r.zeta.len() {
            return Err(Error::DimensionMismatch { expected: r.zeta.len(), found: r.re_b.len().min(r.im_b.len()) });
        }
        let b = r.re_b.iter().zip(&r.im_b).map(|(&x, &y)| c64(x, y)).collect();
        TwoLevelScatteringData::new(r.zeta, b, r.discrete)
    }
}

impl From<TwoLevelScatteringData> for TwoLevelRepr {
    fn from(d: TwoLevelScatteringData) -> Self {
        TwoLevelRepr {
            re_b: d.b.iter().map(|v| v.re).collect(),
            im_b: d.b.iter().map(|v| v.im).collect(),
            zeta: d.zeta,
            discrete: d.discrete,
        }
    }
}

impl TwoLevelScatteringData {
    pub fn new(zeta: Vec<f64>, b: Vec<Complex64>, discrete: Vec<DiscreteDatum>) -> Result<Self> {
        if zeta.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: zeta.len(), found: b.len() });
        }
        if zeta.len() < 4 || zeta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("ζ grid needs ≥ 4 strictly ascending points".into()));
        }
        if let Some((i, v)) = b.iter().enumerate().find(|(_, v)| !(v.norm() < 1.0)) {
            return Err(Error::InvalidInput(format!("|b| = {} ≥ 1 at ζ = {}", v.norm(), zeta[i])));
        }
        let ends = b[0].norm().max(b[b.len() - 1].norm());
        if ends >= END_DECAY {
            return Err(Error::InvalidInput(format!("|b| = {ends:e} at a grid end; b must decay below {END_DECAY:e}")));
        }
        for (i, a) in discrete.iter().enumerate() {
            if !(a.zeta[1] > 0.0) {
                return Err(Error::InvalidInput("discrete eigenvalues need Im ζ > 0".into()));
            }
            if discrete[..i].iter().any(|o| (o.zeta() - a.zeta()).norm() < 1e-8) {
                return Err(Error::InvalidInput("discrete eigenvalues must be distinct".into()));
            }
        }
        Ok(Self { zeta, b, discrete })
    }

    /// Discrete data only, `b ≡ 0` on a symmetric grid.
    pub fn discrete_only(discrete: Vec<DiscreteDatum>, zeta_max: f64, n: usize) -> Result<Self> {
        let n = n.max(4);
        let zeta = (0..n).map(|i| -zeta_max + 2.0 * zeta_max * i as f64 / (n - 1) as f64).collect();
        Self::new(zeta, vec![c64(0.0, 0.0); n], discrete)
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn discrete(&self) -> &[DiscreteDatum] {
        &self.discrete
    }

    fn log_modulus(&self) -> Vec<f64> {
        self.b.iter().map(|v| (-v.norm_sqr()).ln_1p()).collect()
    }
}

/// Evaluates `a(ζ)` on the real axis and at the discrete zeros.
pub struct TwoLevelTransmission<'a> {
    data: &'a TwoLevelScatteringData,
    log_mod: Vec<f64>,
    spline: CubicSpline,
}

impl<'a> TwoLevelTransmission<'a> {
    pub fn new(data: &'a TwoLevelScatteringData) -> Result<Self> {
        let log_mod = data.log_modulus();
        let spline = CubicSpline::new(&data.zeta, &log_mod)?;
        Ok(Self { data, log_mod, spline })
    }

    fn blaschke(&self, z: Complex64, skip: Option<usize>) -> Complex64 {
        self.data
            .discrete
            .iter()
            .enumerate()
            .filter(|(l, _)| Some(*l) != skip)
            .map(|(_, d)| (z - d.zeta()) / (z - d.zeta().conj()))
            .product()
    }

    /// `a(ζ) = √(1−|b|²) · exp((1/2πi) PV∫ L(ζ')/(ζ'−ζ) dζ') · ∏ (ζ−ζ_l)/(ζ−ζ̄_l)`.
    pub fn a(&self, zeta: f64) -> Result<Complex64> {
        let (lo, hi) = (self.data.zeta[0], self.data.zeta[self.data.zeta.len() - 1]);
        if !(zeta > lo && zeta < hi) {
            return Err(Error::InvalidInput(format!("ζ = {zeta} is outside the data grid ({lo}, {hi})")));
        }
        let pv = pv_integral(&self.data.zeta, &self.log_mod, &self.spline, zeta);
        let modulus = (0.5 * self.spline.eval(zeta).min(0.0)).exp();
        Ok(self.blaschke(c64(zeta, 0.0), None) * c64(0.0, -pv / (2.0 * PI)).exp() * modulus)
    }

    /// `a'(ζ_j)` at the j-th discrete zero.
    pub fn a_derivative(&self, j: usize) -> Result<Complex64> {
        let d = self.data.discrete.get(j).ok_or_else(|| Error::InvalidInput(format!("no discrete datum {j}")))?;
        let z = d.zeta();
        let vals: Vec<Complex64> = self.data.zeta.iter().zip(&self.log_mod).map(|(&s, &l)| l / (s - z)).collect();
        let cauchy = trapezoid(&self.data.zeta, &vals) / c64(0.0, 2.0 * PI);
        Ok(self.blaschke(z, Some(j)) / (z - z.conj()) * cauchy.exp())
    }
}

pub fn transmission_a_two_level(data: &TwoLevelScatteringData, zeta: f64) -> Result<Complex64> {
    TwoLevelTransmission::new(data)?.a(zeta)
}

/// Recovered complex pulse envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PulseRepr", into = "PulseRepr")]
pub struct RecoveredPulse {
    pub t: Vec<f64>,
    pub e: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PulseRepr {
    t: Vec<f64>,
    #[serde(rename = "re_E")]
    re_e: Vec<f64>,
    #[serde(rename = "im_E")]
    im_e: Vec<f64>,
}

impl TryFrom<PulseRepr> for RecoveredPulse {
    type Error = Error;
    fn try_from(r: PulseRepr) -> Result<Self> {
        if r.re_e.len() != r.t.len() || r.im_e.len() != r.t.len() {
            return Err(Error::DimensionMismatch { expected: r.t.len(), found: r.re_e.len().min(r.im_e.len()) });
        }
        Ok(Self { e: r.re_e.iter().zip(&r.im_e).map(|(&a, &b)| c64(a, b)).collect(), t: r.t })
    }
}

impl From<RecoveredPulse> for PulseRepr {
    fn from(p: RecoveredPulse) -> Self {
        PulseRepr { re_e: p.e.iter().map(|v| v.re).collect(), im_e: p.e.iter().map(|v| v.im).collect(), t: p.t }
    }
}

impl RecoveredPulse {
    /// A tabulated pulse with no carrier, for the direct two-level solver.
    pub fn to_pulse(&self) -> Result<PulseSpec> {
        let ends = self.e[0].norm().max(self.e[self.e.len() - 1].norm());
        if ends > 1e-4 {
            return Err(Error::InvalidInput(format!("recovered pulse has |E| = {ends:e} at the grid ends; widen the t grid")));
        }
        PulseSpec::new(Envelope::Tabulated { t: self.t.clone(), re: self.e.iter().map(|v| v.re).collect(), im: self.e.iter().map(|v| v.im).collect() }, None)
    }
}

/// `F(t)` on a grid: Fourier part of `r = b/a` plus `Σ m_j e^{iζ_j t}`.
pub fn two_level_kernel(data: &TwoLevelScatteringData, t_grid: &[f64]) -> Result<MarchenkoKernel> {
    let tr = TwoLevelTransmission::new(data)?;
    let r: Vec<Complex64> = data
        .zeta
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if i == 0 || i + 1 == data.zeta.len() {
                // Grid ends: a is not evaluated there, |b| is negligible.
                Ok(data.b[i])
            } else {
                Ok(data.b[i] / tr.a(z)?)
            }
        })
        .collect::<Result<_>>()?;
    let r = FilonCubic::new(&data.zeta, &r)?;
    let m: Vec<(Complex64, Complex64)> = (0..data.discrete.len())
        .map(|j| Ok((data.discrete[j].zeta(), data.discrete[j].d() / tr.a_derivative(j)?)))
        .collect::<Result<_>>()?;
    let f: Vec<Complex64> = t_grid
        .par_iter()
        .map(|&t| {
            let disc: Complex64 = m.iter().map(|&(z, mj)| mj * (c64(0.0, 1.0) * z * t).exp()).sum();
            disc + fourier(&r, t)
        })
        .collect();
    MarchenkoKernel::new(t_grid.to_vec(), f, m.iter().map(|&(z, mj)| (z.im, mj)).collect())
}

fn pulse_at(f: &KernelInterp, t: f64, s_max: f64, opts: &NystromOptions) -> Result<Complex64> {
    let g = |z: f64| -> Result<Complex64> { Ok(-f.eval(z)?.conj()) };
    if s_max <= t {
        return Ok(c64(0.0, -2.0) * -g(2.0 * t)?);
    }
    let (s, w) = composite_gauss_legendre(t, s_max, opts.panel, opts.nodes);
    let n = s.len();
    let mut ag = DMatrix::<Complex64>::zeros(n, n);
    let mut af = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    for i in 0..n {
        rhs[i] = -g(t + s[i])?;
        for j in 0..n {
            ag[(i, j)] = g(s[j] + s[i])? * w[j];
            af[(i, j)] = f.eval(s[j] + s[i])? * w[j];
        }
    }
    // K22 = −A_F K21, so (I − A_G A_F) K21 = −g.
    let m = DMatrix::<Complex64>::identity(n, n) - &ag * &af;
    let k21 = m.lu().solve(&rhs).ok_or_else(|| {
        Error::Singular(format!("two-level Marchenko system singular at t = {t}; refine the grid or reduce the data"))
    })?;
    let k22 = -(&af * &k21);
    let mut diag = -g(2.0 * t)?;
    for j in 0..n {
        diag -= k22[j] * g(s[j] + t)? * w[j];
    }
    Ok(c64(0.0, -2.0) * diag)
}

pub fn recover_pulse(data: &TwoLevelScatteringData, t_grid: &[f64]) -> Result<RecoveredPulse> {
    recover_pulse_with(data, t_grid, &NystromOptions::default())
}

/// Data of the reversed pulse `Ē(−t)`: `b → −b̄`, `d_j → 1/d_j`, same `a`.
pub fn time_reversed(data: &TwoLevelScatteringData) -> Result<TwoLevelScatteringData> {
    let b = data.b.iter().map(|v| -v.conj()).collect();
    let discrete = data.discrete.iter().map(|d| DiscreteDatum::new(d.zeta(), d.d().inv())).collect::<Result<_>>()?;
    TwoLevelScatteringData::new(data.zeta.clone(), b, discrete)
}

/// Solves the right-sided system for `t ≥ 0`. Negative times go through
/// [`time_reversed`] data, since the discrete terms `e^{iζ_j t}` make the
/// right-sided system ill-conditioned there.
pub fn recover_pulse_with(data: &TwoLevelScatteringData, t_grid: &[f64], opts: &NystromOptions) -> Result<RecoveredPulse> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("t grid must be strictly ascending".into()));
    }
    let split = t_grid.partition_point(|&t| t < 0.0);
    let mut e = Vec::with_capacity(t_grid.len());
    if split > 0 {
        let mirrored: Vec<f64> = t_grid[..split].iter().rev().map(|t| -t).collect();
        let rev = recover_right(&time_reversed(data)?, &mirrored, opts)?;
        e.extend(rev.iter().rev().map(|v| v.conj()));
    }
    if split < t_grid.len() {
        e.extend(recover_right(data, &t_grid[split..], opts)?);
    }
    Ok(RecoveredPulse { t: t_grid.to_vec(), e })
}

/// Tabulates `F` on `[2 t_min, t_far]` (with `t_far` found by doubling until
/// `F` has decayed) and solves the matrix system at each `t`.
fn recover_right(data: &TwoLevelScatteringData, t_grid: &[f64], opts: &NystromOptions) -> Result<Vec<Complex64>> {
    let lo = 2.0 * t_grid[0].min(0.0) - 1.0;
    let mut hi = (2.0 * t_grid[t_grid.len() - 1]).max(0.0) + 20.0;
    let kernel = loop {
        match two_level_kernel(data, &uniform_grid(lo, hi, 0.01)) {
            Ok(k) => break k,
            Err(Error::InvalidInput(msg)) if msg.contains("extend the grid") && hi < 4000.0 => hi *= 2.0,
            Err(e) => return Err(e),
        }
    };
    let interp = KernelInterp::new(&kernel.z, &kernel.c)?;
    let z_cut = kernel.cutoff(opts.kernel_tol);
    t_grid.par_iter().map(|&t| pulse_at(&interp, t, z_cut - t, opts)).collect()
}

/// Kernel on `[2 x_min − 1, z_far]`, doubling `z_far` until `C` has decayed.
pub fn marchenko_kernel_auto(data: &ReflectionData, x_min: f64, step: f64) -> Result<MarchenkoKernel> {
    let lo = 2.0 * x_min.min(0.0) - 1.0;
    let mut hi = 20.0;
    loop {
        match marchenko_kernel(data, &uniform_grid(lo, hi, step)) {
            Ok(k) => return Ok(k),
            Err(Error::InvalidInput(msg)) if msg.contains("extend the grid") && hi < 4000.0 => hi *= 2.0,
            Err(e) => return Err(e),
        }
    }
}
