use super::CubicSpline;
use crate::{c64, Complex64, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no wider than
/// `panel` and `per_panel` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panel: f64, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    if b <= a {
        return (Vec::new(), Vec::new());
    }
    let panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let (gx, gw) = gauss_legendre(per_panel);
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(lo + 0.5 * width * (x + 1.0));
            weights.push(0.5 * width * w);
        }
    }
    (nodes, weights)
}

/// Trapezoid rule on a possibly non-uniform grid.
pub fn trapezoid(x: &[f64], y: &[Complex64]) -> Complex64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (ys[0] + ys[1]) * (0.5 * (xs[1] - xs[0])))
        .sum()
}

/// `∫ f(x) e^{iwx} dx` with `f` the natural cubic spline through complex
/// samples (Filon rule). Exact for the interpolant at every `w`, so there is
/// no noise floor once `w·Δx` exceeds one.
#[derive(Debug, Clone)]
pub struct FilonCubic {
    x: Vec<f64>,
    f: Vec<Complex64>,
    m: Vec<Complex64>,
}

impl FilonCubic {
    pub fn new(x: &[f64], f: &[Complex64]) -> Result<Self> {
        let re = CubicSpline::new(x, &f.iter().map(|v| v.re).collect::<Vec<_>>())?;
        let im = CubicSpline::new(x, &f.iter().map(|v| v.im).collect::<Vec<_>>())?;
        let m = re.second_derivatives().iter().zip(im.second_derivatives()).map(|(&r, &i)| c64(r, i)).collect();
        Ok(Self { x: x.to_vec(), f: f.to_vec(), m })
    }

    pub fn integral(&self, w: f64) -> Complex64 {
        let mut sum = c64(0.0, 0.0);
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            let [m0, m1, m2, m3] = filon_moments(w * h);
            // S = (1−u)f₀ + u f₁ + h²/6 [(−u³ + 3u² − 2u) m₀ + (u³ − u) m₁].
            let curv = (self.m[i] * (-m3 + m2 * 3.0 - m1 * 2.0) + self.m[i + 1] * (m3 - m1)) * (h * h / 6.0);
            let seg = self.f[i] * (m0 - m1) + self.f[i + 1] * m1 + curv;
            sum += c64(0.0, w * self.x[i]).exp() * h * seg;
        }
        sum
    }
}

/// `M_n = ∫₀¹ uⁿ e^{iθu} du` for `n = 0..3`.
fn filon_moments(theta: f64) -> [Complex64; 4] {
    let it = c64(0.0, theta);
    let mut out = [c64(0.0, 0.0); 4];
    if theta.abs() < 1.0 {
        // Σ_j (iθ)ʲ / (j! (n + j + 1)).
        let mut term = c64(1.0, 0.0);
        for j in 0..24 {
            if j > 0 {
                term *= it / j as f64;
            }
            for (n, o) in out.iter_mut().enumerate() {
                *o += term / (n + j + 1) as f64;
            }
        }
        return out;
    }
    let e = it.exp();
    out[0] = (e - 1.0) / it;
    for n in 1..4 {
        out[n] = (e - out[n - 1] * n as f64) / it;
    }
    out
}

/// Principal value of `∫ h(ζ)/(ζ − k) dζ` over the grid span.
///
/// The singular part is subtracted: `[h(ζ) − h(k)]/(ζ − k)` is integrated by
/// the trapezoid rule and `h(k)·ln((ζ_max − k)/(k − ζ_min))` is added back.
/// `h` is interpolated by the supplied spline (values and slope at `k`).
pub fn pv_integral(grid: &[f64], values: &[f64], spline: &CubicSpline, k: f64) -> f64 {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    debug_assert!(k > lo && k < hi);
    let hk = spline.eval(k);
    let slope = spline.deriv(k);
    let scale = (hi - lo) * 1e-13;
    let g: Vec<f64> = grid
        .iter()
        .zip(values)
        .map(|(&z, &h)| if (z - k).abs() <= scale { slope } else { (h - hk) / (z - k) })
        .collect();
    let regular: f64 = grid.windows(2).zip(g.windows(2)).map(|(xs, gs)| 0.5 * (xs[1] - xs[0]) * (gs[0] + gs[1])).sum();
    regular + hk * ((hi - k) / (k - lo)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn filon_matches_closed_form() {
        // ∫ e^{-x²} e^{iwx} dx = √π e^{-w²/4}, including far past w·Δx = 1.
        let x: Vec<f64> = (0..=800).map(|i| -8.0 + 0.02 * i as f64).collect();
        let f: Vec<Complex64> = x.iter().map(|t| c64((-t * t).exp(), 0.0)).collect();
        let fc = FilonCubic::new(&x, &f).unwrap();
        for w in [0.0f64, 0.3, 2.0, 5.0, 40.0, 300.0] {
            let exact = PI.sqrt() * (-w * w / 4.0).exp();
            assert!((fc.integral(w) - exact).norm() < 1e-8, "w = {w}: {}", fc.integral(w));
        }
    }

    #[test]
    fn filon_moments_match_quadrature() {
        let (x, w) = gauss_legendre(40);
        for theta in [0.3f64, 0.999_999, 1.0, 3.0, -7.5, 50.0] {
            let got = filon_moments(theta);
            for (n, g) in got.iter().enumerate() {
                let q: Complex64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &wt)| {
                        let u = 0.5 * (t + 1.0);
                        c64(0.0, theta * u).exp() * (0.5 * wt * u.powi(n as i32))
                    })
                    .sum();
                assert!((g - q).norm() < 1e-13, "θ = {theta}, n = {n}: {g} vs {q}");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let sum_w: f64 = w.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_on_exponential() {
        let (x, w) = composite_gauss_legendre(0.0, 7.3, 1.0, 12);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
        assert!((i - (1.0 - (-7.3f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn pv_of_gaussian_matches_dawson_relation() {
        // PV ∫ e^{-ζ²}/(ζ − k) dζ = −2√π D(k), D = Dawson function.
        let grid: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 0.0025).collect();
        let vals: Vec<f64> = grid.iter().map(|z| (-z * z).exp()).collect();
        let s = CubicSpline::new(&grid, &vals).unwrap();
        // D(1) = 0.5380795069127684
        let pv = pv_integral(&grid, &vals, &s, 1.0);
        assert!((pv + 2.0 * std::f64::consts::PI.sqrt() * 0.5380795069127684).abs() < 1e-6, "{pv}");
        // off-node point
        let pv2 = pv_integral(&grid, &vals, &s, 0.50123);
        let d = 0.42514324896406075; // D(0.50123)
        assert!((pv2 + 2.0 * std::f64::consts::PI.sqrt() * d).abs() < 1e-5, "{pv2}");
    }
}
