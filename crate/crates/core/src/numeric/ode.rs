use crate::{Complex64, Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince 5(4) integrator for complex linear and
/// nonlinear systems `y' = f(t, y)` with a fixed-size state.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on |h|; `f64::INFINITY` disables it.
    pub h_max: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[Complex64; N], terms: &[(f64, &[Complex64; N])], h: f64) -> [Complex64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        let s = h * c;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

impl Dopri5 {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrates from `t0` to `t1` (either direction).
    pub fn integrate<const N: usize, F>(&self, mut f: F, t0: f64, t1: f64, y0: [Complex64; N]) -> Result<[Complex64; N]>
    where
        F: FnMut(f64, &[Complex64; N]) -> [Complex64; N],
    {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::Integration { at: t0, reason: "non-finite interval".into() });
        }
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&y, &k1, span.abs()) * dir;
        let h_min = 1e-14 * (t0.abs().max(t1.abs()).max(span.abs()));

        for _ in 0..self.max_steps {
            if (t1 - t) * dir <= 0.0 {
                return Ok(y);
            }
            let mut last = false;
            if (t + h - t1) * dir >= 0.0 {
                h = t1 - t;
                last = true;
            }

            let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(t + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
            let k5 = f(t + C5 * h, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
            let k6 = f(
                t + h,
                &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
            );
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
            let t_new = if last { t1 } else { t + h };
            let k7 = f(t_new, &y_new);

            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Integration { at: t, reason: "non-finite state".into() });
            }

            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                if last {
                    return Ok(y);
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if err > 1.0 { fac.min(1.0) } else { fac };
            h = (h.abs() * fac).min(self.h_max) * dir;
            if h.abs() < h_min {
                return Err(Error::Integration {
                    at: t,
                    reason: format!("step size underflow (h = {:e})", h.abs()),
                });
            }
        }
        Err(Error::Integration { at: t, reason: format!("exceeded {} steps", self.max_steps) })
    }

    /// Integrates across a sequence of breakpoints, restarting the step
    /// control at each one. `points` must be monotone.
    pub fn integrate_through<const N: usize, F>(&self, mut f: F, points: &[f64], y0: [Complex64; N]) -> Result<[Complex64; N]>
    where
        F: FnMut(f64, &[Complex64; N]) -> [Complex64; N],
    {
        let mut y = y0;
        for w in points.windows(2) {
            y = self.integrate(&mut f, w[0], w[1], y)?;
        }
        Ok(y)
    }

    fn initial_step<const N: usize>(&self, y: &[Complex64; N], dy: &[Complex64; N], span: f64) -> f64 {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].norm();
            d0 = d0.max(y[i].norm() / sc);
            d1 = d1.max(dy[i].norm() / sc);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).min(self.h_max).max(1e-12 * span)
    }
}
