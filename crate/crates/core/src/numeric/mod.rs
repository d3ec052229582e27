//! Shared numerical building blocks: an adaptive Runge–Kutta integrator,
//! cubic splines, Gauss–Legendre and principal-value quadrature, and matrix
//! exponentials.

mod expm;
mod ode;
mod quad;
mod spline;

pub use expm::{expm, expm_hermitian};
pub use ode::{Dopri5, DEFAULT_ATOL, DEFAULT_RTOL};
pub use quad::{composite_gauss_legendre, gauss_legendre, pv_integral, trapezoid, FilonCubic};
pub use spline::CubicSpline;
