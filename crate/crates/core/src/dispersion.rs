//! Transmission from reflection data via the dispersion relation, and
//! synthesis of reflection data that hits prescribed `(t, r)` targets.
//!
//! For real `k`,
//! `T(k) = √(1−|R|²) · ∏ (k+iη_j)/(k−iη_j) · exp((1/2πi)·PV∫ L(ζ)/(ζ−k) dζ)`
//! with `L = ln(1 − |R|²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct1d::{find_bound_states, scan, BoundState, MomentumGrid, PotentialSpec};
use crate::numeric::{pv_integral, CubicSpline};
use crate::{c64, Complex64, Error, Result};

/// `|R|` must be below this at both ends of a reflection grid.
pub const END_DECAY: f64 = 1e-6;

/// Reflection samples on a grid spanning both signs of `k`, plus bound states.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ReflectionRepr", into = "ReflectionRepr")]
pub struct ReflectionData {
    k: Vec<f64>,
    r: Vec<Complex64>,
    bound_states: Vec<BoundState>,
}

#[derive(Serialize, Deserialize)]
struct ReflectionRepr {
    k: Vec<f64>,
    #[serde(rename = "re_R")]
    re_r: Vec<f64>,
    #[serde(rename = "im_R")]
    im_r: Vec<f64>,
    #[serde(default)]
    bound_states: Vec<BoundState>,
}

impl TryFrom<ReflectionRepr> for ReflectionData {
    type Error = Error;
    fn try_from(r: ReflectionRepr) -> Result<Self> {
        if r.re_r.len() != r.k.len() || r.im_r.len() != r.k.len() {
            return Err(Error::DimensionMismatch { expected: r.k.len(), found: r.re_r.len().min(r.im_r.len()) });
        }
        let vals = r.re_r.iter().zip(&r.im_r).map(|(&a, &b)| c64(a, b)).collect();
        ReflectionData::new(r.k, vals, r.bound_states)
    }
}

impl From<ReflectionData> for ReflectionRepr {
    fn from(d: ReflectionData) -> Self {
        ReflectionRepr {
            re_r: d.r.iter().map(|z| z.re).collect(),
            im_r: d.r.iter().map(|z| z.im).collect(),
            k: d.k,
            bound_states: d.bound_states,
        }
    }
}

impl ReflectionData {
    pub fn new(k: Vec<f64>, r: Vec<Complex64>, bound_states: Vec<BoundState>) -> Result<Self> {
        if k.len() != r.len() {
            return Err(Error::DimensionMismatch { expected: k.len(), found: r.len() });
        }
        if k.len() < 4 {
            return Err(Error::InvalidInput("reflection grid needs at least 4 points".into()));
        }
        if k.iter().any(|v| !v.is_finite()) || k.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("reflection grid must be finite and strictly ascending".into()));
        }
        if !(k[0] < 0.0 && k[k.len() - 1] > 0.0) {
            return Err(Error::InvalidInput("reflection grid must cover negative and positive k".into()));
        }
        if let Some((i, z)) = r.iter().enumerate().find(|(_, z)| !(z.norm() < 1.0)) {
            return Err(Error::InvalidInput(format!("|R| = {} ≥ 1 at k = {}", z.norm(), k[i])));
        }
        let ends = r[0].norm().max(r[r.len() - 1].norm());
        if ends >= END_DECAY {
            return Err(Error::InvalidInput(format!(
                "reflection does not decay: |R| = {ends:e} at a grid end (need < {END_DECAY:e})"
            )));
        }
        let mut bound_states = bound_states;
        bound_states.sort_by(|a, b| a.eta.total_cmp(&b.eta));
        if bound_states.windows(2).any(|w| w[0].eta == w[1].eta) {
            return Err(Error::InvalidInput("bound states must have distinct eta".into()));
        }
        Ok(Self { k, r, bound_states })
    }

    /// Mirrors positive-`k` samples using `R(−k) = conj R(k)` for a real potential.
    pub fn from_positive_half(k: &[f64], r: &[Complex64], bound_states: Vec<BoundState>) -> Result<Self> {
        if k.len() != r.len() {
            return Err(Error::DimensionMismatch { expected: k.len(), found: r.len() });
        }
        if k.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput("half-line samples must have k > 0".into()));
        }
        let mut kk: Vec<f64> = k.iter().rev().map(|v| -v).collect();
        let mut rr: Vec<Complex64> = r.iter().rev().map(|z| z.conj()).collect();
        kk.extend_from_slice(k);
        rr.extend_from_slice(r);
        Self::new(kk, rr, bound_states)
    }

    /// Pure bound-state data: `R ≡ 0` on a symmetric grid.
    pub fn reflectionless(bound_states: Vec<BoundState>, k_max: f64, n: usize) -> Result<Self> {
        let n = n.max(4);
        let k: Vec<f64> = (0..n).map(|i| -k_max + 2.0 * k_max * i as f64 / (n - 1) as f64).collect();
        Self::new(k, vec![c64(0.0, 0.0); n], bound_states)
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn r(&self) -> &[Complex64] {
        &self.r
    }

    pub fn bound_states(&self) -> &[BoundState] {
        &self.bound_states
    }

    /// `ln(1 − |R|²)` on the grid.
    pub fn log_modulus(&self) -> Vec<f64> {
        self.r.iter().map(|z| (-z.norm_sqr()).ln_1p()).collect()
    }

    /// `R` interpolated by cubic splines of its real and imaginary parts;
    /// zero outside the grid.
    pub fn reflection_at(&self, k: f64) -> Result<Complex64> {
        if k < self.k[0] || k > self.k[self.k.len() - 1] {
            return Ok(c64(0.0, 0.0));
        }
        let re: Vec<f64> = self.r.iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.r.iter().map(|z| z.im).collect();
        Ok(c64(CubicSpline::new(&self.k, &re)?.eval(k), CubicSpline::new(&self.k, &im)?.eval(k)))
    }
}

/// `∏ (k + iη_j)/(k − iη_j)`.
pub fn blaschke(k: Complex64, etas: impl IntoIterator<Item = f64>) -> Complex64 {
    etas.into_iter().map(|eta| (k + c64(0.0, eta)) / (k - c64(0.0, eta))).product()
}

/// Precomputed `L = ln(1 − |R|²)` and its spline, for repeated evaluations.
pub struct TransmissionReconstructor<'a> {
    data: &'a ReflectionData,
    log_mod: Vec<f64>,
    spline: CubicSpline,
}

impl<'a> TransmissionReconstructor<'a> {
    pub fn new(data: &'a ReflectionData) -> Result<Self> {
        let log_mod = data.log_modulus();
        let spline = CubicSpline::new(&data.k, &log_mod)?;
        Ok(Self { data, log_mod, spline })
    }

    /// `PV∫ L(ζ)/(ζ − k) dζ` over the grid.
    pub fn log_hilbert(&self, k: f64) -> Result<f64> {
        let (lo, hi) = (self.data.k[0], self.data.k[self.data.k.len() - 1]);
        if !(k > lo && k < hi) {
            return Err(Error::InvalidInput(format!("k = {k} is outside the reflection grid ({lo}, {hi})")));
        }
        Ok(pv_integral(&self.data.k, &self.log_mod, &self.spline, k))
    }

    pub fn transmission(&self, k: f64) -> Result<Complex64> {
        let pv = self.log_hilbert(k)?;
        let modulus = (0.5 * self.spline.eval(k).min(0.0)).exp();
        let etas = self.data.bound_states.iter().map(|b| b.eta);
        Ok(blaschke(c64(k, 0.0), etas) * c64(0.0, -pv / (2.0 * PI)).exp() * modulus)
    }

    /// `(1/2πi)∫ L(ζ)/(ζ − κ) dζ` for `Im κ > 0`; no singularity on the grid.
    pub fn log_cauchy(&self, kappa: Complex64) -> Complex64 {
        let vals: Vec<Complex64> = self.data.k.iter().zip(&self.log_mod).map(|(&z, &l)| l / (z - kappa)).collect();
        crate::numeric::trapezoid(&self.data.k, &vals) / c64(0.0, 2.0 * PI)
    }

    /// `a'(iη_j)` for the j-th bound state, differentiating
    /// `a = ∏ (k − iη_l)/(k + iη_l) · exp(−(1/2πi)∫L/(ζ−k))` at its zero.
    pub fn a_derivative_at_bound_state(&self, j: usize) -> Result<Complex64> {
        let bs = self.data.bound_states.get(j).ok_or_else(|| Error::InvalidInput(format!("no bound state {j}")))?;
        let eta = bs.eta;
        let mut d = c64(0.0, -1.0 / (2.0 * eta));
        for (l, other) in self.data.bound_states.iter().enumerate() {
            if l != j {
                d *= (eta - other.eta) / (eta + other.eta);
            }
        }
        Ok(d * (-self.log_cauchy(c64(0.0, eta))).exp())
    }
}

/// Convenience wrapper around [`TransmissionReconstructor`].
pub fn reconstruct_transmission(data: &ReflectionData, k: f64) -> Result<Complex64> {
    TransmissionReconstructor::new(data)?.transmission(k)
}

/// A positive-momentum grid for sampling a potential's reflection: graded
/// towards `k = 0`, uniform up to `k_uniform`, then geometric to `k_far`.
pub fn reflection_grid(k_uniform: f64, step: f64, k_far: f64) -> Result<MomentumGrid> {
    if !(step > 0.0 && k_uniform > step && k_far > k_uniform) {
        return Err(Error::InvalidInput("need 0 < step < k_uniform < k_far".into()));
    }
    let mut k: Vec<f64> = (0..40).map(|i| 1e-6 * (step / 1e-6).powf(i as f64 / 40.0)).collect();
    let n_uniform = (k_uniform / step).round() as usize;
    k.extend((1..=n_uniform).map(|i| i as f64 * step));
    let last = *k.last().expect("non-empty");
    let n_far = 80;
    k.extend((1..=n_far).map(|i| last * (k_far / last).powf(i as f64 / n_far as f64)));
    MomentumGrid::new(k)
}

/// Samples past the last one above this are integrator noise and are zeroed;
/// over a wide far grid that noise would otherwise floor the Marchenko kernel.
pub const REFLECTION_NOISE: f64 = 1e-9;

/// Samples `R(k)` of a potential on a positive grid, mirrors it to negative
/// `k`, and attaches the bound states with `η ≤ eta_max`.
pub fn reflection_data_from_potential(q: &PotentialSpec, grid: &MomentumGrid, eta_max: f64) -> Result<ReflectionData> {
    let coeffs = scan(q, grid)?;
    let mut r: Vec<Complex64> = coeffs.iter().map(|c| c.reflection).collect();
    let last = r.iter().rposition(|v| v.norm() > REFLECTION_NOISE).map_or(0, |i| i + 1);
    r[last..].iter_mut().for_each(|v| *v = c64(0.0, 0.0));
    let bound = find_bound_states(q, eta_max)?;
    ReflectionData::from_positive_half(grid.values(), &r, bound)
}

/// A gate target: transmission `t` and reflection `r` at momentum `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateTargetRepr", into = "GateTargetRepr")]
pub struct GateTarget {
    k: f64,
    t: Complex64,
    r: Complex64,
}

#[derive(Serialize, Deserialize)]
struct GateTargetRepr {
    k: f64,
    t: [f64; 2],
    r: [f64; 2],
}

impl TryFrom<GateTargetRepr> for GateTarget {
    type Error = Error;
    fn try_from(g: GateTargetRepr) -> Result<Self> {
        GateTarget::new(g.k, c64(g.t[0], g.t[1]), c64(g.r[0], g.r[1]))
    }
}

impl From<GateTarget> for GateTargetRepr {
    fn from(g: GateTarget) -> Self {
        GateTargetRepr { k: g.k, t: [g.t.re, g.t.im], r: [g.r.re, g.r.im] }
    }
}

impl GateTarget {
    pub fn new(k: f64, t: Complex64, r: Complex64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("target momentum must be positive, got {k}")));
        }
        let defect = t.norm_sqr() + r.norm_sqr() - 1.0;
        if !(defect.abs() <= 1e-10) {
            return Err(Error::InvalidInput(format!("|t|² + |r|² − 1 = {defect:e}")));
        }
        if !(t.norm() > 0.0) {
            return Err(Error::Infeasible("|t| must be positive (|r| < 1)".into()));
        }
        Ok(Self { k, t, r })
    }

    /// Target from monodromy data: `t = 1/a`, `r = b/a`.
    pub fn from_su11(k: f64, m: &crate::algebra::Su11Element) -> Result<Self> {
        let (t, r) = (m.transmission(), m.reflection());
        let n = (t.norm_sqr() + r.norm_sqr()).sqrt();
        Self::new(k, t / n, r / n)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t(&self) -> Complex64 {
        self.t
    }

    pub fn r(&self) -> Complex64 {
        self.r
    }
}

/// Tuning for [`build_scattering_data_with`].
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Bump half-width `w`; default `min(spacing/4, k_min/3, 0.5)`.
    pub width: Option<f64>,
    /// Largest admissible `F = −ln(1 − |R|²)`.
    pub max_f: f64,
    /// Required agreement of the rebuilt `(t, r)` with the targets.
    pub tolerance: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { width: None, max_f: 25.0, tolerance: 1e-3 }
    }
}

/// Reflection data whose reconstruction hits every target.
pub fn build_scattering_data(targets: &[GateTarget]) -> Result<ReflectionData> {
    build_scattering_data_with(targets, &BuildOptions::default())
}

fn gauss(k: f64, c: f64, sigma: f64) -> f64 {
    let u = (k - c) / sigma;
    (-0.5 * u * u).exp()
}

/// Even bump pair centred at `±c`.
fn even_bump(k: f64, c: f64, sigma: f64) -> f64 {
    gauss(k, c, sigma) + gauss(k, -c, sigma)
}

/// `F = G²` where `G` is a signed sum of Gaussian bumps (one on each target
/// momentum, one auxiliary bump beside it) mirrored to negative `k`, so
/// that `R = G·√((1 − e^{−G²})/G²)·e^{iθ}` is entire. The bump amplitudes
/// fix `F(k_j)` and the dispersion phase at each `k_j` (Newton on the
/// quadratic system, started from the linearized one); the auxiliary bumps
/// go above or below, whichever gives the smallest peak. `θ` is an odd sum
/// of Gaussian windows pinned to `arg r_j`.
pub fn build_scattering_data_with(targets: &[GateTarget], opts: &BuildOptions) -> Result<ReflectionData> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("at least one target is required".into()));
    }
    if targets.len() > 12 {
        return Err(Error::InvalidInput("at most 12 targets are supported".into()));
    }
    let mut tg = targets.to_vec();
    tg.sort_by(|a, b| a.k.total_cmp(&b.k));
    let n = tg.len();
    let spacing = tg.windows(2).map(|w| w[1].k - w[0].k).fold(f64::INFINITY, f64::min);
    if spacing <= 0.0 {
        return Err(Error::InvalidInput("target momenta must be distinct".into()));
    }
    if let Some(t) = tg.iter().find(|t| t.r.norm() >= 1.0) {
        return Err(Error::Infeasible(format!("|r| = {} ≥ 1 at k = {}", t.r.norm(), t.k)));
    }
    let k_min = tg[0].k;
    let w = match opts.width {
        Some(w) => {
            if !(w > 0.0) {
                return Err(Error::InvalidInput("bump width must be positive".into()));
            }
            if n > 1 && spacing < 4.0 * w {
                return Err(Error::InvalidInput(format!(
                    "targets {spacing} apart are closer than 4× the bump width {w}; use a width ≤ {}",
                    spacing / 4.0
                )));
            }
            if w > k_min / 3.0 {
                return Err(Error::InvalidInput(format!("bump width must be ≤ k_min/3 = {}", k_min / 3.0)));
            }
            w
        }
        None => (spacing / 4.0).min(k_min / 3.0).min(0.5),
    };
    let sigma = w / 2.5;
    // Width of the bumps in G; their squares have width sigma.
    let s = sigma * std::f64::consts::SQRT_2;
    let offset = 3.0 * sigma;

    let k_hi = tg[n - 1].k + offset + 12.0 * sigma;
    let step = sigma / 20.0;
    let half = (k_hi / step).ceil() as usize;
    let grid: Vec<f64> = (0..=2 * half).map(|i| (i as f64 - half as f64) * step).collect();

    let f_target: Vec<f64> = tg.iter().map(|t| -(-t.r.norm_sqr()).ln_1p()).collect();
    let phase_target: Vec<f64> = tg.iter().map(|t| t.t.arg()).collect();

    // Candidate centres: 3j is k_j, 3j+1 above it, 3j+2 below it.
    let all_centres: Vec<f64> = tg.iter().flat_map(|t| [t.k, t.k + offset, t.k - offset]).collect();
    let nc = all_centres.len();
    let profiles: Vec<Vec<f64>> = all_centres
        .iter()
        .map(|&c| grid.iter().map(|&k| even_bump(k, c, s)).collect())
        .collect();
    // Point values and dispersion phases of each product of two bumps.
    let mut value = vec![vec![vec![0.0; nc]; nc]; n];
    let mut phase = vec![vec![vec![0.0; nc]; nc]; n];
    let pairs: Vec<(usize, usize)> = (0..nc).flat_map(|a| (a..nc).map(move |b| (a, b))).collect();
    let pair_phases: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let prod: Vec<f64> = profiles[a].iter().zip(&profiles[b]).map(|(x, y)| x * y).collect();
            let spline = CubicSpline::new(&grid, &prod)?;
            Ok(tg.iter().map(|t| pv_integral(&grid, &prod, &spline, t.k) / (2.0 * PI)).collect())
        })
        .collect::<Result<_>>()?;
    for (&(a, b), ph) in pairs.iter().zip(&pair_phases) {
        for (j, t) in tg.iter().enumerate() {
            let v = even_bump(t.k, all_centres[a], s) * even_bump(t.k, all_centres[b], s);
            value[j][a][b] = v;
            value[j][b][a] = v;
            phase[j][a][b] = ph[j];
            phase[j][b][a] = ph[j];
        }
    }
    // Linearized responses (bumps of width sigma in F) for the starting guess.
    let lin_phase = |c: f64| -> Result<Vec<f64>> {
        let vals: Vec<f64> = grid.iter().map(|&k| even_bump(k, c, sigma)).collect();
        let spline = CubicSpline::new(&grid, &vals)?;
        Ok(tg.iter().map(|t| pv_integral(&grid, &vals, &spline, t.k) / (2.0 * PI)).collect())
    };
    let lin: Vec<Vec<f64>> = all_centres.iter().map(|&c| lin_phase(c)).collect::<Result<_>>()?;

    let rhs = DVector::from_iterator(2 * n, f_target.iter().chain(&phase_target).copied());
    let candidates: Vec<(f64, Vec<usize>, Vec<f64>)> = (0..1usize << n)
        .into_par_iter()
        .filter_map(|mask| {
            let idx: Vec<usize> = (0..n).flat_map(|j| [3 * j, 3 * j + if mask >> j & 1 == 1 { 1 } else { 2 }]).collect();
            let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
            for (col, &ci) in idx.iter().enumerate() {
                for (row, t) in tg.iter().enumerate() {
                    m[(row, col)] = even_bump(t.k, all_centres[ci], sigma);
                    m[(n + row, col)] = lin[ci][row];
                }
            }
            let a0 = m.lu().solve(&rhs)?;
            let mut b: DVector<f64> = a0.map(|a| a.signum() * a.abs().sqrt());
            let mut converged = false;
            for _ in 0..100 {
                let mut res = DVector::<f64>::zeros(2 * n);
                let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
                for j in 0..n {
                    for (p, &ip) in idx.iter().enumerate() {
                        let mut gv = 0.0;
                        let mut gp = 0.0;
                        for (q, &iq) in idx.iter().enumerate() {
                            gv += value[j][ip][iq] * b[q];
                            gp += phase[j][ip][iq] * b[q];
                        }
                        res[j] += b[p] * gv;
                        res[n + j] += b[p] * gp;
                        jac[(j, p)] = 2.0 * gv;
                        jac[(n + j, p)] = 2.0 * gp;
                    }
                }
                res -= &rhs;
                if res.amax() < 1e-12 {
                    converged = true;
                    break;
                }
                let delta = jac.lu().solve(&res)?;
                // Damp steps that would change an amplitude by more than its scale.
                let scale = (delta.amax() / (b.amax() + 1.0)).max(1.0);
                b -= delta / scale;
            }
            if !converged || b.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let peak = grid
                .iter()
                .filter(|&&k| k >= 0.0)
                .map(|&k| {
                    let g: f64 = idx.iter().zip(b.iter()).map(|(&i, &bv)| bv * even_bump(k, all_centres[i], s)).sum();
                    g * g
                })
                .fold(0.0, f64::max);
            (peak <= opts.max_f).then(|| (peak, idx, b.iter().copied().collect()))
        })
        .collect();
    let (_, idx, amps) = candidates
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| {
            Error::Infeasible(format!("no bump amplitudes reach the target phases with F ≤ {}", opts.max_f))
        })?;
    let centres: Vec<f64> = idx.iter().map(|&i| all_centres[i]).collect();
    let g_at = |k: f64| -> f64 { centres.iter().zip(&amps).map(|(&c, &a)| a * even_bump(k, c, s)).sum() };

    // Odd phase windows; a negative G contributes a phase of π already.
    let window = |k: f64, c: f64| gauss(k, c, w) - gauss(k, -c, w);
    let mut pm = DMatrix::<f64>::zeros(n, n);
    let mut prhs = DVector::<f64>::zeros(n);
    for (row, t) in tg.iter().enumerate() {
        for (col, u) in tg.iter().enumerate() {
            pm[(row, col)] = window(t.k, u.k);
        }
        let sign_phase = if g_at(t.k) < 0.0 { PI } else { 0.0 };
        let mut d = t.r.arg() - sign_phase;
        d = (d + PI).rem_euclid(2.0 * PI) - PI;
        prhs[row] = d;
    }
    let phase_coeffs = pm.lu().solve(&prhs).ok_or_else(|| Error::Singular("phase window system is singular".into()))?;
    let theta = |k: f64| -> f64 { tg.iter().zip(phase_coeffs.iter()).map(|(t, p)| p * window(k, t.k)).sum() };

    let r: Vec<Complex64> = grid
        .iter()
        .map(|&k| {
            let g = g_at(k);
            let u = g * g;
            // √((1 − e^{−u})/u), continuous at u = 0.
            let factor = if u < 1e-300 { 1.0 } else { (-(-u).exp_m1() / u).sqrt() };
            Complex64::from_polar(g * factor, theta(k))
        })
        .collect();
    let data = ReflectionData::new(grid, r, Vec::new())?;

    let rec = TransmissionReconstructor::new(&data)?;
    for t in &tg {
        let got_t = rec.transmission(t.k)?;
        let got_r = data.reflection_at(t.k)?;
        let err = (got_t - t.t).norm().max((got_r - t.r).norm());
        if err > opts.tolerance {
            return Err(Error::Infeasible(format!(
                "rebuilt data misses the target at k = {} by {err:e}",
                t.k
            )));
        }
    }
    Ok(data)
}
