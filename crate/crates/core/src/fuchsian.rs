//! Monodromy of rank-2 Fuchsian systems `df = ω f`, `ω = Σ A_j dz/(z − s_j)`.
//!
//! The monodromy of a loop is the path-ordered propagator from the base
//! point back to itself with `f(base) = I`; continuing a fundamental
//! solution around the loop multiplies it on the right by that matrix.
//!
//! A resonant pulse becomes such a system under `t = 1/z + i` after the
//! gauge change `σ₁ → σ₃` by the Hadamard matrix `H`. The real `t` axis
//! maps to the circle `|z − i/2| = 1/2`, traversed clockwise from `z = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMat;
use crate::numeric::Dopri5;
use crate::{c64, Complex64, Error, Result};

/// Minimum distance between a path and a pole.
pub const POLE_EXCLUSION: f64 = 1e-6;

/// Poles `s_j` with constant residue matrices `A_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct FuchsianSystem {
    poles: Vec<Complex64>,
    residues: Vec<[[Complex64; 2]; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    poles: Vec<Complex64>,
    residues: Vec<[[Complex64; 2]; 2]>,
}

impl TryFrom<SystemRepr> for FuchsianSystem {
    type Error = Error;
    fn try_from(r: SystemRepr) -> Result<Self> {
        FuchsianSystem::new(r.poles, r.residues)
    }
}

impl From<FuchsianSystem> for SystemRepr {
    fn from(s: FuchsianSystem) -> Self {
        SystemRepr { poles: s.poles, residues: s.residues }
    }
}

fn sigma3(b: Complex64) -> [[Complex64; 2]; 2] {
    [[b, c64(0.0, 0.0)], [c64(0.0, 0.0), -b]]
}

impl FuchsianSystem {
    pub fn new(poles: Vec<Complex64>, residues: Vec<[[Complex64; 2]; 2]>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::DimensionMismatch { expected: poles.len(), found: residues.len() });
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !poles.iter().all(finite) || !residues.iter().flatten().flatten().all(finite) {
            return Err(Error::InvalidInput("poles and residues must be finite".into()));
        }
        for i in 0..poles.len() {
            for j in 0..i {
                if (poles[i] - poles[j]).norm() <= 1e-8 {
                    return Err(Error::InvalidInput(format!("poles {} and {} coincide", poles[j], poles[i])));
                }
            }
        }
        Ok(Self { poles, residues })
    }

    /// System whose residues are all multiples of `σ₃`.
    pub fn diagonal(poles: Vec<Complex64>, coefficients: Vec<Complex64>) -> Result<Self> {
        Self::new(poles, coefficients.into_iter().map(sigma3).collect())
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn residues(&self) -> &[[[Complex64; 2]; 2]] {
        &self.residues
    }

    /// Coefficient matrix of `ω` at `z`, column-major.
    fn omega(&self, z: Complex64) -> [Complex64; 4] {
        let mut m = [c64(0.0, 0.0); 4];
        for (s, a) in self.poles.iter().zip(&self.residues) {
            let w = (z - s).inv();
            m[0] += a[0][0] * w;
            m[1] += a[1][0] * w;
            m[2] += a[0][1] * w;
            m[3] += a[1][1] * w;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Ccw,
    Cw,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Ccw => 1.0,
            Orientation::Cw => -1.0,
        }
    }
}

/// A closed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Loop {
    /// Full circle starting (and ending) at `center + radius·e^{i·start_angle}`.
    Circle {
        center: Complex64,
        radius: f64,
        #[serde(default)]
        orientation: Orientation,
        #[serde(default)]
        start_angle: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Closed polyline; the last point must equal the first.
    Polyline { points: Vec<Complex64> },
    /// From `base`, across to the right of `pole` at its height, once around
    /// a small circle, and back the same way.
    Keyhole {
        base: Complex64,
        pole: Complex64,
        radius: f64,
        #[serde(default)]
        orientation: Orientation,
    },
}

fn default_samples() -> usize {
    64
}

/// A straight segment or circular arc of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Line(Complex64, Complex64),
    Arc { center: Complex64, radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    fn point(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Line(a, b) => a + (b - a) * s,
            Piece::Arc { center, radius, start, sweep } => center + Complex64::from_polar(radius, start + sweep * s),
        }
    }

    fn velocity(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Line(a, b) => b - a,
            Piece::Arc { radius, start, sweep, .. } => {
                c64(0.0, sweep) * Complex64::from_polar(radius, start + sweep * s)
            }
        }
    }

    fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Piece::Line(a, b) => {
                let d = b - a;
                let len2 = d.norm_sqr();
                let s = if len2 == 0.0 { 0.0 } else { (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0) };
                (a + d * s - p).norm()
            }
            Piece::Arc { center, radius, start, sweep } => {
                let rel = p - center;
                let ang = rel.arg();
                // Angle of p measured along the sweep from the start.
                let mut u = (ang - start) * sweep.signum();
                u = u.rem_euclid(2.0 * PI);
                if u <= sweep.abs() {
                    (rel.norm() - radius).abs()
                } else {
                    (self.point(0.0) - p).norm().min((self.point(1.0) - p).norm())
                }
            }
        }
    }
}

impl Loop {
    pub fn circle(center: Complex64, radius: f64, orientation: Orientation) -> Self {
        Loop::Circle { center, radius, orientation, start_angle: 0.0, samples: default_samples() }
    }

    fn pieces(&self) -> Result<Vec<Piece>> {
        match self {
            Loop::Circle { center, radius, orientation, start_angle, samples } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput("circle radius must be positive".into()));
                }
                let n = (*samples).max(4);
                let sweep = orientation.sign() * 2.0 * PI / n as f64;
                Ok((0..n)
                    .map(|i| Piece::Arc { center: *center, radius: *radius, start: start_angle + sweep * i as f64, sweep })
                    .collect())
            }
            Loop::Polyline { points } => {
                if points.len() < 3 {
                    return Err(Error::InvalidInput("polyline loop needs at least 3 points".into()));
                }
                if (points[0] - points[points.len() - 1]).norm() > 1e-12 {
                    return Err(Error::InvalidInput("polyline loop must end at its start point".into()));
                }
                Ok(points.windows(2).map(|w| Piece::Line(w[0], w[1])).collect())
            }
            Loop::Keyhole { base, pole, radius, orientation } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput("keyhole radius must be positive".into()));
                }
                let corner = c64(base.re, pole.im);
                let touch = pole + radius;
                let circle = (0..8).map(|i| Piece::Arc {
                    center: *pole,
                    radius: *radius,
                    start: orientation.sign() * PI / 4.0 * i as f64,
                    sweep: orientation.sign() * PI / 4.0,
                });
                let mut out = vec![Piece::Line(*base, corner), Piece::Line(corner, touch)];
                out.extend(circle);
                out.push(Piece::Line(touch, corner));
                out.push(Piece::Line(corner, *base));
                Ok(out)
            }
        }
    }

    pub fn base_point(&self) -> Result<Complex64> {
        Ok(self.pieces()?[0].point(0.0))
    }
}

fn check_clearance(sys: &FuchsianSystem, pieces: &[Piece]) -> Result<()> {
    for p in pieces {
        for s in &sys.poles {
            let d = p.distance_to(*s);
            if d < POLE_EXCLUSION {
                return Err(Error::InvalidInput(format!("pole {s} lies {d:e} from the integration path")));
            }
        }
    }
    Ok(())
}

fn identity() -> [Complex64; 4] {
    [c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]
}

fn propagate_pieces(sys: &FuchsianSystem, pieces: &[Piece], y0: [Complex64; 4]) -> Result<[Complex64; 4]> {
    let solver = Dopri5::with_tolerance(1e-12, 1e-14);
    let mut y = y0;
    for p in pieces {
        let rhs = |s: f64, f: &[Complex64; 4]| {
            let z = p.point(s);
            let w = sys.omega(z);
            let v = p.velocity(s);
            [
                (w[0] * f[0] + w[2] * f[1]) * v,
                (w[1] * f[0] + w[3] * f[1]) * v,
                (w[0] * f[2] + w[2] * f[3]) * v,
                (w[1] * f[2] + w[3] * f[3]) * v,
            ]
        };
        y = solver.integrate(rhs, 0.0, 1.0, y)?;
    }
    Ok(y)
}

fn to_mat(y: [Complex64; 4]) -> Result<ComplexMat> {
    ComplexMat::new(DMatrix::from_column_slice(2, 2, &y))
}

/// Path-ordered monodromy around `lp`.
pub fn monodromy(sys: &FuchsianSystem, lp: &Loop) -> Result<ComplexMat> {
    let pieces = lp.pieces()?;
    check_clearance(sys, &pieces)?;
    to_mat(propagate_pieces(sys, &pieces, identity())?)
}

/// Monodromy of the loops traversed in order, `M_n ⋯ M_1`.
pub fn monodromy_product(sys: &FuchsianSystem, loops: &[Loop]) -> Result<ComplexMat> {
    if loops.is_empty() {
        return ComplexMat::identity(2);
    }
    let base = loops[0].base_point()?;
    for lp in loops {
        let b = lp.base_point()?;
        if (b - base).norm() > 1e-12 {
            return Err(Error::InvalidInput(format!("loops start at {base} and {b}; a shared base point is required")));
        }
    }
    let ms: Vec<ComplexMat> = loops.par_iter().map(|lp| monodromy(sys, lp)).collect::<Result<_>>()?;
    ms.iter().skip(1).try_fold(ms[0].clone(), |acc, m| m.mul(&acc))
}

/// `H = (1/√2)[[1, 1], [1, −1]]`, which carries σ₃ to σ₁.
pub fn gauge_matrix() -> ComplexMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMat::from_rows(&[c64(s, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0)]).expect("2×2")
}

/// `H M H`: gauge coordinates back to the two-level frame.
pub fn gauge_conjugate(m: &ComplexMat) -> Result<ComplexMat> {
    let h = gauge_matrix();
    h.mul(m)?.mul(&h)
}

/// The image of the real time axis: clockwise circle `|z − i/2| = 1/2` from `z = 0`.
pub fn time_axis_loop() -> Loop {
    Loop::Circle {
        center: c64(0.0, 0.5),
        radius: 0.5,
        orientation: Orientation::Cw,
        start_angle: -PI / 2.0,
        samples: default_samples(),
    }
}

/// Poles `p = i/(1+a)` (residue `bσ₃`) and `q = i/(1−a)` (residue `−bσ₃`).
fn lorentzian_poles(a: f64) -> Result<(Complex64, Complex64)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput("Lorentzian width must be positive".into()));
    }
    if (a - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidInput("a = 1 sends the pole i/(1−a) to infinity".into()));
    }
    Ok((c64(0.0, 1.0 / (1.0 + a)), c64(0.0, 1.0 / (1.0 - a))))
}

/// Resonant `E = 2ab/(t² + a²)` as a two-pole system in gauge coordinates,
/// with the image of the time axis.
pub fn lorentzian_to_fuchsian(a: f64, b: f64) -> Result<(FuchsianSystem, Loop)> {
    lorentzian_sum_to_fuchsian(&[[a, b]])
}

pub fn lorentzian_sum_to_fuchsian(pairs: &[[f64; 2]]) -> Result<(FuchsianSystem, Loop)> {
    let mut poles = Vec::new();
    let mut coeffs = Vec::new();
    for &[a, b] in pairs {
        let (p, q) = lorentzian_poles(a)?;
        poles.extend([p, q]);
        coeffs.extend([c64(b, 0.0), c64(-b, 0.0)]);
    }
    Ok((FuchsianSystem::diagonal(poles, coeffs)?, time_axis_loop()))
}

/// Clockwise keyhole loops from a shared base point around each `i/(1+a_k)`.
pub fn lorentzian_keyholes(pairs: &[[f64; 2]], base: Complex64, radius: f64) -> Result<Vec<Loop>> {
    pairs
        .iter()
        .map(|&[a, _]| {
            let (p, _) = lorentzian_poles(a)?;
            Ok(Loop::Keyhole { base, pole: p, radius, orientation: Orientation::Cw })
        })
        .collect()
}

/// Odd pulse `E = 2t/(t² + a²)` in gauge coordinates: coefficients of `σ₃`
/// at `0` (on the time-axis circle), at `p = i/(1+a)` (inside) and at
/// `q = i/(1−a)` (outside).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example4System {
    pub poles: [Complex64; 3],
    pub coefficients: [Complex64; 3],
}

pub fn example4_system(a: f64) -> Result<Example4System> {
    let (p, q) = lorentzian_poles(a)?;
    Ok(Example4System {
        poles: [c64(0.0, 0.0), p, q],
        coefficients: [c64(0.0, 2.0), c64(0.0, -1.0), c64(0.0, -1.0)],
    })
}

impl Example4System {
    pub fn system(&self) -> Result<FuchsianSystem> {
        FuchsianSystem::diagonal(self.poles.to_vec(), self.coefficients.to_vec())
    }

    /// `exp(iπ(b₁ + 2b₂)σ₃)` for a counterclockwise loop.
    pub fn closed_form(&self) -> Result<ComplexMat> {
        let e = c64(0.0, PI) * (self.coefficients[0] + self.coefficients[1] * 2.0);
        ComplexMat::from_rows(&[e.exp(), c64(0.0, 0.0), c64(0.0, 0.0), (-e).exp()])
    }
}

/// Principal-value monodromy around a circle through on-contour poles:
/// integrates the open arcs left after removing a symmetric arc of
/// half-angle `excision` around each such pole.
pub fn pv_monodromy(sys: &FuchsianSystem, lp: &Loop, excision: f64) -> Result<ComplexMat> {
    let Loop::Circle { center, radius, orientation, start_angle, .. } = *lp else {
        return Err(Error::InvalidInput("principal-value monodromy needs a circular loop".into()));
    };
    if !(excision > 0.0 && excision < 0.1) {
        return Err(Error::InvalidInput("excision angle must be in (0, 0.1)".into()));
    }
    let sgn = orientation.sign();
    // Angles (measured along the sweep from the start) of on-contour poles.
    let mut cuts: Vec<f64> = sys
        .poles
        .iter()
        .filter(|s| ((*s - center).norm() - radius).abs() < POLE_EXCLUSION)
        .map(|s| (((s - center).arg() - start_angle) * sgn).rem_euclid(2.0 * PI))
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut arcs = Vec::new();
    let mut from = 0.0;
    let mut wrap_end = 2.0 * PI;
    for &c in &cuts {
        if c < excision {
            from = c + excision;
            wrap_end = (2.0 * PI + c - excision).min(wrap_end);
            continue;
        }
        if c > 2.0 * PI - excision {
            wrap_end = c - excision;
            from = from.max(c + excision - 2.0 * PI);
            continue;
        }
        arcs.push((from, c - excision));
        from = c + excision;
    }
    arcs.push((from, wrap_end));
    let mut pieces = Vec::new();
    for (lo, hi) in arcs {
        let n = (((hi - lo) / (PI / 16.0)).ceil() as usize).max(1);
        let step = (hi - lo) / n as f64;
        for i in 0..n {
            pieces.push(Piece::Arc { center, radius, start: start_angle + sgn * (lo + step * i as f64), sweep: sgn * step });
        }
    }
    check_clearance(sys, &pieces)?;
    to_mat(propagate_pieces(sys, &pieces, identity())?)
}

/// Example 4 monodromy along the time-axis circle in the principal-value sense.
pub fn pv_monodromy_example4(a: f64) -> Result<ComplexMat> {
    let ex = example4_system(a)?;
    pv_monodromy(&ex.system()?, &time_axis_loop(), 1e-4)
}
