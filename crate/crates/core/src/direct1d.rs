//! Direct scattering for `ψ'' + (k² + Q(x))ψ = 0` on the line.
//!
//! Conventions: ħ = 2m = 1 and positive `Q` is attractive. The Jost
//! solution `φ` equals `e^{−ikx}` left of the support and
//! `a·e^{−ikx} + b·e^{ikx}` right of it; `(a, b)` is the SU(1,1) monodromy
//! data, `T = 1/a`, `R = b/a`. Bound states sit at zeros of `a(iη)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{block_diag, tau, Su11Element, Unitary};
use crate::numeric::{CubicSpline, Dopri5};
use crate::{c64, Complex64, Error, Result};

/// Potentials are windowed where `|Q|` has fallen below this.
pub const WINDOW_CUTOFF: f64 = 1e-12;
/// Accepted `| |a|² − |b|² − 1 |` (relative to `|a|²`) for a solved pair.
pub const SU11_SOLVE_TOL: f64 = 1e-8;

/// Analytic or tabulated shape of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum PotentialShape {
    Zero,
    /// `Q = q0` on `[x0, x0 + length]`, zero elsewhere.
    SquareWell { q0: f64, x0: f64, length: f64 },
    /// `Q = n(n+1)·η²·sech²(η(x − center))`; `order` n defaults to 1, for
    /// which the potential is reflectionless with one bound state at `η`.
    SechSquared {
        eta: f64,
        center: f64,
        #[serde(default = "one")]
        order: f64,
    },
    /// `Q = Σ 2 a_j b_j / (x² + a_j²)`.
    LorentzianSum { pairs: Vec<[f64; 2]> },
    /// Natural cubic spline through the samples, zero outside.
    Tabulated { x: Vec<f64>, q: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    #[serde(flatten)]
    shape: PotentialShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<[f64; 2]>,
}

/// A real potential `Q(x)` together with its support window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub struct PotentialSpec {
    shape: PotentialShape,
    window: [f64; 2],
    spline: Option<CubicSpline>,
}

impl From<PotentialSpec> for PotentialRepr {
    fn from(p: PotentialSpec) -> Self {
        PotentialRepr { shape: p.shape, window: Some(p.window) }
    }
}

impl TryFrom<PotentialRepr> for PotentialSpec {
    type Error = Error;
    fn try_from(r: PotentialRepr) -> Result<Self> {
        let p = PotentialSpec::new(r.shape)?;
        match r.window {
            Some(w) => p.with_window(w),
            None => Ok(p),
        }
    }
}

impl PotentialSpec {
    pub fn new(shape: PotentialShape) -> Result<Self> {
        let mut spline = None;
        let window = match &shape {
            PotentialShape::Zero => [-1.0, 1.0],
            PotentialShape::SquareWell { q0, x0, length } => {
                if !(length.is_finite() && *length > 0.0 && q0.is_finite() && x0.is_finite()) {
                    return Err(Error::InvalidInput("square well needs finite q0, x0 and length > 0".into()));
                }
                [*x0, x0 + length]
            }
            PotentialShape::SechSquared { eta, center, order } => {
                if !(*eta > 0.0 && eta.is_finite() && center.is_finite() && order.is_finite() && *order > 0.0) {
                    return Err(Error::InvalidInput("sech² potential needs eta > 0 and order > 0".into()));
                }
                let amp = order * (order + 1.0) * eta * eta;
                let reach = ((4.0 * amp / WINDOW_CUTOFF).ln() / (2.0 * eta)).max(40.0 / eta);
                [center - reach, center + reach]
            }
            PotentialShape::LorentzianSum { pairs } => {
                if pairs.is_empty() || pairs.iter().any(|[a, b]| !(*a > 0.0 && b.is_finite())) {
                    return Err(Error::InvalidInput("Lorentzian sum needs pairs with a > 0".into()));
                }
                let total: f64 = pairs.iter().map(|[a, b]| (2.0 * a * b).abs()).sum();
                let amax = pairs.iter().map(|p| p[0]).fold(0.0, f64::max);
                // |Q| ≤ Σ 2|ab|/x², cut at the WINDOW_CUTOFF·100 level: the
                // algebraic tail makes the tighter cut impractically long.
                let reach = (total / (WINDOW_CUTOFF * 100.0)).sqrt().max(12.0 * amax);
                [-reach, reach]
            }
            PotentialShape::Tabulated { x, q } => {
                if x.len() < 4 {
                    return Err(Error::InvalidInput("tabulated potential needs at least 4 samples".into()));
                }
                spline = Some(CubicSpline::new(x, q)?);
                [x[0], x[x.len() - 1]]
            }
        };
        Ok(Self { shape, window, spline })
    }

    pub fn zero() -> Self {
        Self::new(PotentialShape::Zero).expect("zero potential")
    }

    pub fn sech_squared(eta: f64, center: f64) -> Result<Self> {
        Self::new(PotentialShape::SechSquared { eta, center, order: 1.0 })
    }

    pub fn square_well(q0: f64, x0: f64, length: f64) -> Result<Self> {
        Self::new(PotentialShape::SquareWell { q0, x0, length })
    }

    pub fn tabulated(x: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(PotentialShape::Tabulated { x, q })
    }

    /// Replaces the window; it is widened if it would cut into the support.
    pub fn with_window(mut self, w: [f64; 2]) -> Result<Self> {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput("window must satisfy x_min < x_max".into()));
        }
        self.window = [w[0].min(self.window[0]), w[1].max(self.window[1])];
        if matches!(self.shape, PotentialShape::Zero) {
            self.window = w;
        }
        Ok(self)
    }

    pub fn shape(&self) -> &PotentialShape {
        &self.shape
    }

    pub fn window(&self) -> [f64; 2] {
        self.window
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::SquareWell { q0, x0, length } => {
                if x >= *x0 && x <= x0 + length {
                    *q0
                } else {
                    0.0
                }
            }
            PotentialShape::SechSquared { eta, center, order } => {
                let s = 1.0 / (eta * (x - center)).cosh();
                order * (order + 1.0) * eta * eta * s * s
            }
            PotentialShape::LorentzianSum { pairs } => pairs.iter().map(|[a, b]| 2.0 * a * b / (x * x + a * a)).sum(),
            PotentialShape::Tabulated { .. } => {
                let s = self.spline.as_ref().expect("tabulated potential has a spline");
                if x < s.x_min() || x > s.x_max() {
                    0.0
                } else {
                    s.eval(x)
                }
            }
        }
    }

    /// Integration breakpoints: window ends plus any jump locations.
    fn breakpoints(&self) -> Vec<f64> {
        let [lo, hi] = self.window;
        let mut pts = vec![lo];
        if let PotentialShape::SquareWell { x0, length, .. } = self.shape {
            for p in [x0, x0 + length] {
                if p > lo && p < hi {
                    pts.push(p);
                }
            }
        }
        pts.push(hi);
        pts
    }
}

/// Ascending positive momenta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MomentumGrid(Vec<f64>);

impl TryFrom<Vec<f64>> for MomentumGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MomentumGrid::new(v)
    }
}

impl From<MomentumGrid> for Vec<f64> {
    fn from(g: MomentumGrid) -> Self {
        g.0
    }
}

impl MomentumGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput("momenta must be finite and positive".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("momenta must be strictly ascending".into()));
        }
        Ok(Self(values))
    }

    pub fn linspace(k_min: f64, k_max: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![k_min]);
        }
        Self::new((0..n).map(|i| k_min + (k_max - k_min) * i as f64 / (n - 1) as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Scattering coefficients at one momentum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScatterCoeffs {
    pub k: f64,
    pub m: Su11Element,
    pub transmission: Complex64,
    pub reflection: Complex64,
}

impl ScatterCoeffs {
    pub fn smatrix(&self) -> Unitary {
        tau(&self.m)
    }
}

/// A bound state at `k = iη` with its norming constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub eta: f64,
    pub norming: f64,
}

impl BoundState {
    pub fn new(eta: f64, norming: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite() && norming.is_finite()) {
            return Err(Error::InvalidInput("bound state needs eta > 0 and a finite norming constant".into()));
        }
        Ok(Self { eta, norming })
    }
}

fn schrodinger_rhs(q: &PotentialSpec, k2: f64) -> impl Fn(f64, &[Complex64; 2]) -> [Complex64; 2] + '_ {
    move |x, y| [y[1], -y[0] * (k2 + q.eval(x))]
}

/// Below this momentum `φ` itself is integrated; above it the slowly
/// varying amplitudes of `e^{∓ikx}` are, which lets the solver stride
/// across regions where `Q` vanishes.
const AMPLITUDE_FORM_K: f64 = 0.2;

/// Integrates `φ` from the left edge, starting from `e^{∓ikx}`; returns `(a, b)`
/// read off against `e^{∓ikx}`, `e^{±ikx}` at the right edge.
fn integrate_jost(q: &PotentialSpec, k: f64, sign: f64, solver: &Dopri5) -> Result<(Complex64, Complex64)> {
    let [lo, hi] = q.window;
    let ik = c64(0.0, sign * k);
    if k >= AMPLITUDE_FORM_K {
        // φ = α e^{−ikx} + β e^{ikx} with α' e^{−ikx} + β' e^{ikx} = 0.
        let y = solver.integrate_through(
            |x, y: &[Complex64; 2]| {
                let g = q.eval(x) / (ik * 2.0);
                let e = (ik * (2.0 * x)).exp();
                [g * (y[0] + y[1] * e), -g * (y[0] / e + y[1])]
            },
            &q.breakpoints(),
            [c64(1.0, 0.0), c64(0.0, 0.0)],
        )?;
        return Ok((y[0], y[1]));
    }
    let start = (-ik * lo).exp();
    let y = solver.integrate_through(schrodinger_rhs(q, k * k), &q.breakpoints(), [start, -ik * start])?;
    let (phi, dphi) = (y[0], y[1]);
    let a = (ik * hi).exp() * (ik * phi - dphi) / (ik * 2.0);
    let b = (-ik * hi).exp() * (ik * phi + dphi) / (ik * 2.0);
    Ok((a, b))
}

/// Solves the direct problem at momentum `k > 0`.
pub fn solve_scattering(q: &PotentialSpec, k: f64) -> Result<ScatterCoeffs> {
    solve_scattering_with(q, k, &Dopri5::default())
}

pub fn solve_scattering_with(q: &PotentialSpec, k: f64, solver: &Dopri5) -> Result<ScatterCoeffs> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("momentum must be positive, got {k}")));
    }
    let (a, b) = integrate_jost(q, k, 1.0, solver)?;
    let m = Su11Element::with_tolerance(a, b, SU11_SOLVE_TOL).map_err(|e| Error::Integration {
        at: q.window[1],
        reason: format!("k = {k}: {e}"),
    })?;
    Ok(ScatterCoeffs { k, m, transmission: m.transmission(), reflection: m.reflection() })
}

/// Starts from `e^{+ikx}` instead; for real `Q` this yields `(ā, b̄)`.
pub fn solve_conjugate_start(q: &PotentialSpec, k: f64) -> Result<(Complex64, Complex64)> {
    integrate_jost(q, k, -1.0, &Dopri5::default())
}

/// Parallel map of [`solve_scattering`] over a grid.
pub fn scan(q: &PotentialSpec, grid: &MomentumGrid) -> Result<Vec<ScatterCoeffs>> {
    grid.values().par_iter().map(|&k| solve_scattering(q, k)).collect()
}

/// `a(iη)` computed through the rescaled solution `φ = e^{ηx}u`, which
/// obeys `u'' + 2ηu' + Qu = 0`, `u(x_min) = 1`, `u'(x_min) = 0`.
fn a_imaginary_axis(q: &PotentialSpec, eta: f64) -> Result<f64> {
    let y = Dopri5::default().integrate_through(
        |x, y: &[Complex64; 2]| [y[1], -y[1] * (2.0 * eta) - y[0] * q.eval(x)],
        &q.breakpoints(),
        [c64(1.0, 0.0), c64(0.0, 0.0)],
    )?;
    Ok((y[0] + y[1] / (2.0 * eta)).re)
}

/// `u` with `φ = e^{ηx}u` from the left edge, evaluated at `x`.
fn left_solution(q: &PotentialSpec, eta: f64, x: f64) -> Result<f64> {
    let mut pts: Vec<f64> = q.breakpoints().into_iter().filter(|&p| p < x).collect();
    pts.push(x);
    let y = Dopri5::default().integrate_through(
        |s, y: &[Complex64; 2]| [y[1], -y[1] * (2.0 * eta) - y[0] * q.eval(s)],
        &pts,
        [c64(1.0, 0.0), c64(0.0, 0.0)],
    )?;
    Ok(y[0].re)
}

/// `v` with `ψ = e^{−ηx}v` from the right edge (`v'' − 2ηv' + Qv = 0`).
fn right_solution(q: &PotentialSpec, eta: f64, x: f64) -> Result<f64> {
    let mut pts: Vec<f64> = q.breakpoints().into_iter().rev().filter(|&p| p > x).collect();
    pts.push(x);
    let y = Dopri5::default().integrate_through(
        |s, y: &[Complex64; 2]| [y[1], y[1] * (2.0 * eta) - y[0] * q.eval(s)],
        &pts,
        [c64(1.0, 0.0), c64(0.0, 0.0)],
    )?;
    Ok(y[0].re)
}

fn refine_root(q: &PotentialSpec, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
    // Bisection safeguarded secant (Illinois).
    let mut fhi = a_imaginary_axis(q, hi)?;
    for _ in 0..200 {
        if (hi - lo) < 1e-13 * hi.max(1.0) {
            break;
        }
        let mut mid = hi - fhi * (hi - lo) / (fhi - flo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let fm = a_imaginary_axis(q, mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
            fhi *= 0.5;
        } else {
            hi = mid;
            fhi = fm;
            flo *= 0.5;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bound states with `η ∈ (0, eta_max]`, ascending in `η`.
pub fn find_bound_states(q: &PotentialSpec, eta_max: f64) -> Result<Vec<BoundState>> {
    if !(eta_max > 0.0 && eta_max.is_finite()) {
        return Err(Error::InvalidInput("eta_max must be positive".into()));
    }
    const SCAN: usize = 400;
    let etas: Vec<f64> = (0..=SCAN).map(|i| eta_max * (1e-3 + (1.0 - 1e-3) * i as f64 / SCAN as f64)).collect();
    let values: Vec<f64> = etas.par_iter().map(|&e| a_imaginary_axis(q, e)).collect::<Result<_>>()?;

    let mut roots = Vec::new();
    for i in 0..SCAN {
        let (f0, f1) = (values[i], values[i + 1]);
        if f0 == 0.0 {
            roots.push(etas[i]);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            roots.push(refine_root(q, etas[i], etas[i + 1], f0)?);
        }
    }
    if values[SCAN] == 0.0 {
        roots.push(etas[SCAN]);
    }

    let [lo, hi] = q.window;
    let mid = 0.5 * (lo + hi);
    roots
        .into_iter()
        .map(|eta| {
            let off = (0.5 / eta).min(0.125 * (hi - lo));
            // Seven samples; points near a node of the eigenfunction are
            // dropped since u and v both vanish there.
            let mut samples = Vec::with_capacity(7);
            for j in -3..=3 {
                let x = mid + j as f64 * off;
                let u = left_solution(q, eta, x)?;
                let v = right_solution(q, eta, x)?;
                samples.push(((2.0 * eta * x).exp() * u / v, (-eta * x).exp() * v.abs()));
            }
            let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
            let mut good: Vec<f64> = samples.iter().filter(|s| s.1 > 0.05 * peak).map(|s| s.0).collect();
            good.sort_by(f64::total_cmp);
            let b1 = good[good.len() / 2];
            let spread = good.iter().map(|b| (b - b1).abs()).fold(0.0, f64::max) / b1.abs().max(1e-300);
            if spread > 1e-6 {
                return Err(Error::Integration {
                    at: mid,
                    reason: format!("norming constant for η = {eta} varies by {spread:e} across the window"),
                });
            }
            BoundState::new(eta, b1)
        })
        .collect()
}

/// Magnetic and electric potentials realising a pair `(U, V)`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldProfile {
    pub x: Vec<f64>,
    /// Magnetic potential `A`, `A' = (U − V)/2`, `A(x_min) = 0`.
    pub a: Vec<f64>,
    /// `A'` on the grid.
    pub da: Vec<f64>,
    /// Electric potential `Q = A² + (U + V)/2`.
    pub q: Vec<f64>,
}

impl FieldProfile {
    /// Largest deviation of `Q ± A' − A²` from `U`, `V` on the grid.
    pub fn identity_residual(&self, u: &PotentialSpec, v: &PotentialSpec) -> f64 {
        self.x
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let a2 = self.a[i] * self.a[i];
                let ru = (self.q[i] + self.da[i] - a2 - u.eval(x)).abs();
                let rv = (self.q[i] - self.da[i] - a2 - v.eval(x)).abs();
                ru.max(rv)
            })
            .fold(0.0, f64::max)
    }
}

/// Builds `(A, Q)` from two potentials on a shared grid that must cover
/// both support windows.
pub fn fields_from_potentials(u: &PotentialSpec, v: &PotentialSpec, grid: &[f64]) -> Result<FieldProfile> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("field grid must be strictly ascending".into()));
    }
    let (g0, g1) = (grid[0], grid[grid.len() - 1]);
    for p in [u, v] {
        let [lo, hi] = p.window;
        let nonzero_outside = [lo, hi].iter().any(|&e| (e < g0 || e > g1) && p.eval(e.clamp(g0, g1)).abs() > WINDOW_CUTOFF);
        if nonzero_outside {
            return Err(Error::InvalidInput(format!(
                "grid [{g0}, {g1}] does not cover the potential support [{lo}, {hi}]"
            )));
        }
    }
    let da: Vec<f64> = grid.iter().map(|&x| 0.5 * (u.eval(x) - v.eval(x))).collect();
    let a = CubicSpline::new(grid, &da)?.cumulative_integral();
    let q = grid
        .iter()
        .zip(&a)
        .map(|(&x, &ai)| ai * ai + 0.5 * (u.eval(x) + v.eval(x)))
        .collect();
    Ok(FieldProfile { x: grid.to_vec(), a, da, q })
}

/// The 4×4 spin S-matrix `diag(S_U(k), S_V(k))`.
pub fn em_spin_smatrix(u: &PotentialSpec, v: &PotentialSpec, k: f64) -> Result<Unitary> {
    let su = solve_scattering(u, k)?.smatrix();
    let sv = solve_scattering(v, k)?.smatrix();
    block_diag(&su, &sv)
}
