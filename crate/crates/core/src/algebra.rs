//! Complex 2×2 / 4×4 matrix algebra for gates and scattering data.
//!
//! Gate comparisons are made modulo a global phase: physical gates are rays
//! in U(n), and [`gate_distance`] minimises over that phase analytically.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{c64, Complex64, Error, Result};

/// Tolerance on `|a|² − |b|² − 1` when constructing an [`Su11Element`].
pub const SU11_TOL: f64 = 1e-12;
/// Tolerance on `‖U†U − I‖_F` when constructing a [`Unitary`].
pub const UNITARY_TOL: f64 = 1e-10;
/// Singular values at or below this are treated as zero.
pub const SCHMIDT_ZERO: f64 = 1e-10;
/// Second Schmidt value above this declares an operator entangling.
pub const ENTANGLING_THRESHOLD: f64 = 1e-3;

/// A finite complex square matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat(DMatrix<Complex64>);

impl ComplexMat {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || !(m.nrows() == 2 || m.nrows() == 4) {
            return Err(Error::InvalidInput(format!(
                "matrix must be 2×2 or 4×4, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    /// Builds from row-major entries; the length fixes the dimension.
    pub fn from_rows(entries: &[Complex64]) -> Result<Self> {
        let n = match entries.len() {
            4 => 2,
            16 => 4,
            len => return Err(Error::InvalidInput(format!("expected 4 or 16 entries, got {len}"))),
        };
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn mul(&self, other: &ComplexMat) -> Result<ComplexMat> {
        same_dim(self, other)?;
        Ok(ComplexMat(&self.0 * &other.0))
    }

    pub fn adjoint(&self) -> ComplexMat {
        ComplexMat(self.0.adjoint())
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.determinant()
    }

    /// `‖self − other‖_F`, no phase optimisation.
    pub fn distance(&self, other: &ComplexMat) -> Result<f64> {
        same_dim(self, other)?;
        Ok((&self.0 - &other.0).norm())
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (self.0.adjoint() * &self.0 - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    /// Row-major `[re, im]` pairs, the JSON wire form.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must form a square".into()));
        }
        let entries: Vec<Complex64> = rows.iter().flatten().map(|p| c64(p[0], p[1])).collect();
        Self::from_rows(&entries)
    }
}

impl Serialize for ComplexMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        ComplexMat::from_nested(&rows).map_err(serde::de::Error::custom)
    }
}

fn same_dim(a: &ComplexMat, b: &ComplexMat) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// Monodromy data `[[a, b̄], [b, ā]]` of an SU(1,1) element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Su11Element {
    a: Complex64,
    b: Complex64,
}

impl Su11Element {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        Self::with_tolerance(a, b, SU11_TOL)
    }

    /// Numerically computed data carry integration error; callers pick the
    /// tolerance they can guarantee.
    pub fn with_tolerance(a: Complex64, b: Complex64, tol: f64) -> Result<Self> {
        let defect = a.norm_sqr() - b.norm_sqr() - 1.0;
        if !defect.is_finite() || defect.abs() > tol * a.norm_sqr().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "|a|² − |b|² − 1 = {defect:e} violates the SU(1,1) constraint"
            )));
        }
        Ok(Self { a, b })
    }

    /// `a = √(1 + |b|²)·e^{iθ}`, always on the group.
    pub fn from_b(b: Complex64, phase: f64) -> Self {
        let a = Complex64::from_polar((1.0 + b.norm_sqr()).sqrt(), phase);
        Self { a, b }
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn transmission(&self) -> Complex64 {
        self.a.inv()
    }

    pub fn reflection(&self) -> Complex64 {
        self.b / self.a
    }

    pub fn defect(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - 1.0
    }

    pub fn matrix(&self) -> ComplexMat {
        ComplexMat(DMatrix::from_row_slice(2, 2, &[self.a, self.b.conj(), self.b, self.a.conj()]))
    }
}

/// A unitary matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Unitary(ComplexMat);

impl Unitary {
    pub fn new(m: ComplexMat) -> Result<Self> {
        Self::with_tolerance(m, UNITARY_TOL)
    }

    pub fn with_tolerance(m: ComplexMat, tol: f64) -> Result<Self> {
        let defect = m.unitarity_defect();
        if defect > tol {
            return Err(Error::InvalidInput(format!("‖U†U − I‖_F = {defect:e} exceeds {tol:e}")));
        }
        Ok(Self(m))
    }

    pub fn from_rows(entries: &[Complex64]) -> Result<Self> {
        Self::new(ComplexMat::from_rows(entries)?)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self(ComplexMat::identity(n)?))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_mat(&self) -> &ComplexMat {
        &self.0
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.0.matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }

    pub fn mul(&self, other: &Unitary) -> Result<Unitary> {
        Ok(Unitary(self.0.mul(&other.0)?))
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let x = nalgebra::DVector::from_column_slice(v);
        Ok((self.matrix() * x).iter().copied().collect())
    }
}

/// The scattering matrix `[[b̄/a, 1/a], [1/a, −b/a]]` of monodromy data.
pub fn tau(m: &Su11Element) -> Unitary {
    let (a, b) = (m.a, m.b);
    Unitary(ComplexMat(DMatrix::from_row_slice(2, 2, &[b.conj() / a, a.inv(), a.inv(), -b / a])))
}

/// The map SU(1,1) → SU(2), `[[1/a, b/ā], [−b̄/a, 1/ā]]`.
pub fn su11_to_su2(m: &Su11Element) -> Unitary {
    let (a, b) = (m.a, m.b);
    Unitary(ComplexMat(DMatrix::from_row_slice(
        2,
        2,
        &[a.inv(), b / a.conj(), -b.conj() / a, a.conj().inv()],
    )))
}

/// Kronecker product of two single-qubit unitaries.
pub fn kron(u: &Unitary, v: &Unitary) -> Result<Unitary> {
    for w in [u, v] {
        if w.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: w.dim() });
        }
    }
    Ok(Unitary(ComplexMat(u.matrix().kronecker(v.matrix()))))
}

pub(crate) fn kron_raw(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Phase-invariant gate distance `min_θ ‖u − e^{iθ}v‖_F / ‖I‖_F`.
///
/// The minimum is attained at `θ = arg tr(v†u)`, giving
/// `√((‖u‖² + ‖v‖² − 2|tr(v†u)|)/n)`.
pub fn gate_distance(u: &Unitary, v: &Unitary) -> Result<f64> {
    same_dim(&u.0, &v.0)?;
    let n = u.dim() as f64;
    let overlap = (v.matrix().adjoint() * u.matrix()).trace().norm();
    let sq = u.matrix().norm_squared() + v.matrix().norm_squared() - 2.0 * overlap;
    Ok((sq.max(0.0) / n).sqrt())
}

/// Operator-Schmidt decomposition `U = Σ_k s_k A_k ⊗ B_k` of a two-qubit
/// operator.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtDecomposition {
    /// Descending.
    pub singular_values: [f64; 4],
    pub left: Vec<ComplexMat>,
    pub right: Vec<ComplexMat>,
}

/// Three-way entanglement classification from the second Schmidt value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Product,
    Indeterminate,
    Entangling,
}

impl SchmidtDecomposition {
    /// Number of singular values above [`SCHMIDT_ZERO`].
    pub fn rank(&self) -> usize {
        self.singular_values.iter().filter(|&&s| s > SCHMIDT_ZERO).count()
    }

    pub fn verdict(&self) -> Verdict {
        let s2 = self.singular_values[1];
        if s2 > ENTANGLING_THRESHOLD {
            Verdict::Entangling
        } else if s2 <= SCHMIDT_ZERO {
            Verdict::Product
        } else {
            Verdict::Indeterminate
        }
    }

    /// Rebuilds `Σ s_k A_k ⊗ B_k`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(4, 4);
        for k in 0..4 {
            out += kron_raw(self.left[k].matrix(), self.right[k].matrix()) * c64(self.singular_values[k], 0.0);
        }
        out
    }
}

/// Reshuffles `U[(i₁i₂),(j₁j₂)] → M[(i₁j₁),(i₂j₂)]` and takes its SVD.
pub fn operator_schmidt(u: &Unitary) -> Result<SchmidtDecomposition> {
    if u.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: u.dim() });
    }
    let um = u.matrix();
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    m[(2 * i1 + j1, 2 * i2 + j2)] = um[(2 * i1 + i2, 2 * j1 + j2)];
                }
            }
        }
    }
    let svd = m.svd(true, true);
    let uu = svd.u.ok_or_else(|| Error::Singular("SVD failed to produce U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Singular("SVD failed to produce Vᴴ".into()))?;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut singular_values = [0.0; 4];
    let mut left = Vec::with_capacity(4);
    let mut right = Vec::with_capacity(4);
    for (slot, &k) in order.iter().enumerate() {
        singular_values[slot] = svd.singular_values[k];
        let a = DMatrix::from_fn(2, 2, |i, j| uu[(2 * i + j, k)]);
        let b = DMatrix::from_fn(2, 2, |i, j| vt[(k, 2 * i + j)]);
        left.push(ComplexMat(a));
        right.push(ComplexMat(b));
    }
    Ok(SchmidtDecomposition { singular_values, left, right })
}

/// Standard gates. `not_gate` is `diag(1, −1)`, following the naming of
/// the construction it approximates.
pub mod gates {
    use super::*;

    fn u2(e: [Complex64; 4]) -> Unitary {
        Unitary(ComplexMat(DMatrix::from_row_slice(2, 2, &e)))
    }

    pub fn identity2() -> Unitary {
        u2([c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)])
    }

    pub fn hadamard() -> Unitary {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        u2([c64(s, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0)])
    }

    pub fn pauli_x() -> Unitary {
        u2([c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    pub fn not_gate() -> Unitary {
        u2([c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
    }

    /// `diag(1, e^{iφ})`.
    pub fn phase(phi: f64) -> Unitary {
        u2([c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), Complex64::from_polar(1.0, phi)])
    }

    pub fn cnot() -> Unitary {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = c64(1.0, 0.0);
        m[(1, 1)] = c64(1.0, 0.0);
        m[(2, 3)] = c64(1.0, 0.0);
        m[(3, 2)] = c64(1.0, 0.0);
        Unitary(ComplexMat(m))
    }

    pub fn controlled_phase(phi: f64) -> Unitary {
        let mut m = DMatrix::<Complex64>::identity(4, 4);
        m[(3, 3)] = Complex64::from_polar(1.0, phi);
        Unitary(ComplexMat(m))
    }

    /// Look up a named gate, as accepted by the CLI.
    pub fn by_name(name: &str) -> Option<Unitary> {
        Some(match name {
            "hadamard" | "h" => hadamard(),
            "x" | "pauli-x" => pauli_x(),
            "not" => not_gate(),
            "identity" | "i" => identity2(),
            "cnot" => cnot(),
            _ => return None,
        })
    }
}

/// Monodromy data of the gate-approximating family `a = √(n²+1)`, `b = −n·e^{iφ/2}`.
pub fn phase_family(n: f64, phi: f64) -> Su11Element {
    Su11Element::from_b(Complex64::from_polar(n, phi / 2.0 + std::f64::consts::PI), 0.0)
}

/// Block-diagonal `diag(a, b)` of two 2×2 unitaries.
pub fn block_diag(a: &Unitary, b: &Unitary) -> Result<Unitary> {
    for w in [a, b] {
        if w.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: w.dim() });
        }
    }
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(a.matrix());
    m.view_mut((2, 2), (2, 2)).copy_from(b.matrix());
    Ok(Unitary(ComplexMat(m)))
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn su11(a: Complex64, b: Complex64) -> Su11Element {
        Su11Element::new(a, b).unwrap()
    }

    #[test]
    fn tau_examples() {
        let h = tau(&su11(c64(SQRT2, 0.0), c64(1.0, 0.0)));
        assert!(h.as_mat().distance(hadamard().as_mat()).unwrap() < 1e-15);
        let x = tau(&su11(c64(1.0, 0.0), c64(0.0, 0.0)));
        assert!(x.as_mat().distance(pauli_x().as_mat()).unwrap() < 1e-15);
        let s5 = 5f64.sqrt();
        let t = tau(&su11(c64(s5, 0.0), c64(2.0, 0.0)));
        let expect = ComplexMat::from_rows(&[c64(2.0 / s5, 0.0), c64(1.0 / s5, 0.0), c64(1.0 / s5, 0.0), c64(-2.0 / s5, 0.0)]).unwrap();
        assert!(t.as_mat().distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn su11_constructor_rejects_off_group() {
        assert!(Su11Element::new(c64(1.0, 0.0), c64(0.5, 0.0)).is_err());
    }

    #[test]
    fn su2_map_examples() {
        let id = su11_to_su2(&su11(c64(1.0, 0.0), c64(0.0, 0.0)));
        assert!(id.as_mat().distance(identity2().as_mat()).unwrap() < 1e-15);
        let m = su11_to_su2(&su11(c64(SQRT2, 0.0), c64(1.0, 0.0)));
        let s = 1.0 / SQRT2;
        let expect = ComplexMat::from_rows(&[c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(s, 0.0)]).unwrap();
        assert!(m.as_mat().distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn kron_examples() {
        let i4 = kron(&identity2(), &identity2()).unwrap();
        assert!(i4.as_mat().distance(&ComplexMat::identity(4).unwrap()).unwrap() < 1e-15);

        let hh = kron(&hadamard(), &hadamard()).unwrap();
        let e00 = [c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)];
        for z in hh.apply(&e00).unwrap() {
            assert!((z - c64(0.5, 0.0)).norm() < 1e-15);
        }

        // X⊗I maps basis index 1 (e₁⊗e₂) to index 3.
        let xi = kron(&pauli_x(), &identity2()).unwrap();
        let mut e = vec![c64(0.0, 0.0); 4];
        e[1] = c64(1.0, 0.0);
        let out = xi.apply(&e).unwrap();
        assert!((out[3] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(out[0].norm() + out[1].norm() + out[2].norm() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        assert!(gate_distance(&hadamard(), &hadamard()).unwrap() < 1e-15);
        // tr(X†I) = 0: ‖I − e^{iθ}X‖_F = 2 for every θ, normalised by √2.
        let d = gate_distance(&identity2(), &pauli_x()).unwrap();
        assert!((d - SQRT2).abs() < 1e-14);
        let g = controlled_phase(0.3);
        assert!(gate_distance(&hadamard(), &g).is_err());
    }

    // Brute force: scan θ on a fine grid then refine by golden section.
    fn brute_distance(u: &Unitary, v: &Unitary) -> f64 {
        let n = u.dim() as f64;
        let f = |th: f64| (u.matrix() - v.matrix() * Complex64::from_polar(1.0, th)).norm() / n.sqrt();
        let mut best = (0.0, f64::INFINITY);
        for i in 0..4000 {
            let th = i as f64 * std::f64::consts::TAU / 4000.0;
            let val = f(th);
            if val < best.1 {
                best = (th, val);
            }
        }
        let (mut lo, mut hi) = (best.0 - 0.002, best.0 + 0.002);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        f(0.5 * (lo + hi))
    }

    #[test]
    fn example_two_rate_matches_brute_force() {
        let mut prev = f64::INFINITY;
        for n in 1..=100 {
            let n = n as f64;
            let s = tau(&Su11Element::from_b(c64(n, 0.0), 0.0));
            let d = gate_distance(&s, &not_gate()).unwrap();
            assert!((d - brute_distance(&s, &not_gate())).abs() < 1e-9);
            assert!(d < prev);
            prev = d;
        }
        // 0.0099998750... from the brute-force scan
        assert!((prev - 0.01).abs() < 1e-4, "{prev}");
    }

    #[test]
    fn literal_phase_family_is_orthogonal_to_its_nominal_target() {
        let phi = std::f64::consts::FRAC_PI_3;
        let s = tau(&phase_family(100.0, phi));
        let d = gate_distance(&s, &phase(phi)).unwrap();
        assert!((d - SQRT2).abs() < 1e-12);
        let d_true = gate_distance(&s, &phase(phi + std::f64::consts::PI)).unwrap();
        assert!(d_true < 0.0101);
    }

    #[test]
    fn schmidt_examples() {
        let id = operator_schmidt(&Unitary::identity(4).unwrap()).unwrap();
        assert!((id.singular_values[0] - 2.0).abs() < 1e-12);
        assert!(id.singular_values[1..].iter().all(|&s| s < 1e-12));
        assert_eq!(id.verdict(), Verdict::Product);

        let c = operator_schmidt(&cnot()).unwrap();
        for (s, e) in c.singular_values.iter().zip([SQRT2, SQRT2, 0.0, 0.0]) {
            assert!((s - e).abs() < 1e-12);
        }
        assert_eq!(c.verdict(), Verdict::Entangling);
        assert!((c.reconstruct() - cnot().matrix()).norm() < 1e-12);
    }

    fn random_u2(p: [f64; 4]) -> Unitary {
        // e^{iα} [[e^{iβ}cos γ, e^{iδ}sin γ], [−e^{−iδ}sin γ, e^{−iβ}cos γ]]
        let [al, be, ga, de] = p;
        let ph = Complex64::from_polar(1.0, al);
        Unitary::from_rows(&[
            ph * Complex64::from_polar(ga.cos(), be),
            ph * Complex64::from_polar(ga.sin(), de),
            -ph * Complex64::from_polar(ga.sin(), -de),
            ph * Complex64::from_polar(ga.cos(), -be),
        ])
        .unwrap()
    }

    proptest! {
        #[test]
        fn tau_is_symmetric_unitary(re in -5.0..5.0f64, im in -5.0..5.0f64, th in 0.0..6.3f64) {
            let m = Su11Element::from_b(c64(re, im), th);
            let s = tau(&m);
            prop_assert!(s.as_mat().unitarity_defect() <= 1e-10);
            prop_assert!((s.matrix() - s.matrix().transpose()).norm() <= 1e-12);
            let q = su11_to_su2(&m);
            prop_assert!((q.as_mat().determinant() - c64(1.0, 0.0)).norm() <= 1e-10);
        }

        #[test]
        fn distance_is_pseudometric(a in proptest::array::uniform4(0.0..6.3f64),
                                    b in proptest::array::uniform4(0.0..6.3f64),
                                    c in proptest::array::uniform4(0.0..6.3f64)) {
            let (u, v, w) = (random_u2(a), random_u2(b), random_u2(c));
            let uv = gate_distance(&u, &v).unwrap();
            prop_assert!((uv - gate_distance(&v, &u).unwrap()).abs() <= 1e-9);
            prop_assert!(uv <= gate_distance(&u, &w).unwrap() + gate_distance(&w, &v).unwrap() + 1e-9);
            prop_assert!(uv <= SQRT2 + 1e-12);
        }

        #[test]
        fn product_operators_have_rank_one(a in proptest::array::uniform4(0.0..6.3f64),
                                           b in proptest::array::uniform4(0.0..6.3f64)) {
            let k = kron(&random_u2(a), &random_u2(b)).unwrap();
            let s = operator_schmidt(&k).unwrap();
            prop_assert!(s.singular_values[1] <= 1e-10);
            prop_assert_eq!(s.rank(), 1);
            let total: f64 = s.singular_values.iter().map(|x| x * x).sum();
            prop_assert!((total - 4.0).abs() <= 1e-10);
        }
    }
}
