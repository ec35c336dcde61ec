//! Pure-state and mixed-state polarization algebra.
//!
//! Stokes convention: `s1 = |h|^2 - |v|^2`, `s2 = 2 Re(h* v)`,
//! `s3 = 2 Im(h* v)`, so right-circular light `(1, i)/sqrt(2)` sits at the
//! `s3 = +1` pole. The matching Pauli triple is
//! `sigma1 = diag(1, -1)`, `sigma2 = [[0, 1], [1, 0]]`,
//! `sigma3 = [[0, -i], [i, 0]]`, and `exp(-i theta/2 n.sigma)` rotates
//! Stokes vectors by `+theta` (right hand) about `n`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance applied when validating values at construction.
pub const CONSTRUCTION_TOL: f64 = 1e-9;

/// Components with magnitude below this carry no meaningful phase.
const PHASE_FLOOR: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pure polarization state in the H/V Jones basis, normalized and with the
/// global phase fixed: the first component with magnitude above `1e-9` is
/// real and non-negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    c_h: Complex64,
    c_v: Complex64,
}

impl JonesVector {
    pub const H: JonesVector = JonesVector { c_h: ONE, c_v: ZERO };
    pub const V: JonesVector = JonesVector { c_h: ZERO, c_v: ONE };

    /// Builds a state from amplitudes whose squared norm is within `1e-9`
    /// of one. The result is renormalized exactly and put in canonical phase.
    pub fn new(c_h: Complex64, c_v: Complex64) -> Result<Self> {
        let norm_sqr = c_h.norm_sqr() + c_v.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized(norm_sqr.sqrt()));
        }
        Ok(Self::canonical(c_h, c_v))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(c_h: Complex64, c_v: Complex64) -> Result<Self> {
        let norm_sqr = c_h.norm_sqr() + c_v.norm_sqr();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self::canonical(c_h, c_v))
    }

    fn canonical(c_h: Complex64, c_v: Complex64) -> Self {
        let norm = (c_h.norm_sqr() + c_v.norm_sqr()).sqrt();
        let (mut h, mut v) = (c_h / norm, c_v / norm);
        let lead = if h.norm() > PHASE_FLOOR { h } else { v };
        if lead.norm() > 0.0 {
            let phase = lead.conj() / lead.norm();
            h *= phase;
            v *= phase;
        }
        // Force exact zero imaginary part on the leading component.
        if h.norm() > PHASE_FLOOR {
            h = Complex64::new(h.norm(), 0.0);
        } else {
            v = Complex64::new(v.norm(), 0.0);
        }
        Self { c_h: h, c_v: v }
    }

    pub fn c_h(&self) -> Complex64 {
        self.c_h
    }

    pub fn c_v(&self) -> Complex64 {
        self.c_v
    }

    /// Diagonal (+45 degree) linear state.
    pub fn diagonal() -> Self {
        Self::canonical(ONE, ONE)
    }

    /// Anti-diagonal (-45 degree) linear state.
    pub fn antidiagonal() -> Self {
        Self::canonical(ONE, -ONE)
    }

    /// Right-circular state, `s3 = +1`.
    pub fn right_circular() -> Self {
        Self::canonical(ONE, I)
    }

    /// Left-circular state, `s3 = -1`.
    pub fn left_circular() -> Self {
        Self::canonical(ONE, -I)
    }

    /// Looks up one of the labels `H`, `V`, `D`, `A`, `R`, `L`.
    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "H" => Some(Self::H),
            "V" => Some(Self::V),
            "D" => Some(Self::diagonal()),
            "A" => Some(Self::antidiagonal()),
            "R" => Some(Self::right_circular()),
            "L" => Some(Self::left_circular()),
            _ => None,
        }
    }

    /// The orthogonal state `(-v*, h*)`.
    pub fn orthogonal(&self) -> Self {
        Self::canonical(-self.c_v.conj(), self.c_h.conj())
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.c_h.conj() * other.c_h + self.c_v.conj() * other.c_v
    }

    pub fn to_stokes(&self) -> StokesVector {
        jones_to_stokes(self)
    }
}

/// Three-component Stokes vector (normalized to intensity).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub const S1: StokesVector = StokesVector::new(1.0, 0.0, 0.0);
    pub const S2: StokesVector = StokesVector::new(0.0, 1.0, 0.0);
    pub const S3: StokesVector = StokesVector::new(0.0, 0.0, 1.0);

    pub const fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    /// Builds a unit vector, rejecting norms more than `1e-9` from one.
    /// Inputs already within a few ulps of unit length are kept as given so
    /// that serialization round trips are exact.
    pub fn unit(s1: f64, s2: f64, s3: f64) -> Result<Self> {
        let s = Self::new(s1, s2, s3);
        let n = s.norm();
        if !n.is_finite() || (n - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(if (n - 1.0).abs() > 4.0 * f64::EPSILON { s / n } else { s })
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn from_vector3(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector3(self) -> Vector3<f64> {
        Vector3::new(self.s1, self.s2, self.s3)
    }

    pub fn dot(&self, o: &StokesVector) -> f64 {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn cross(&self, o: &StokesVector) -> StokesVector {
        StokesVector::new(
            self.s2 * o.s3 - self.s3 * o.s2,
            self.s3 * o.s1 - self.s1 * o.s3,
            self.s1 * o.s2 - self.s2 * o.s1,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> StokesVector {
        StokesVector::new(self.s1 * k, self.s2 * k, self.s3 * k)
    }

    pub fn add(&self, o: &StokesVector) -> StokesVector {
        StokesVector::new(self.s1 + o.s1, self.s2 + o.s2, self.s3 + o.s3)
    }

    pub fn sub(&self, o: &StokesVector) -> StokesVector {
        StokesVector::new(self.s1 - o.s1, self.s2 - o.s2, self.s3 - o.s3)
    }

    pub fn neg(&self) -> StokesVector {
        self.scale(-1.0)
    }

    /// Unit vector in the same direction.
    pub fn normalized(&self) -> Result<StokesVector> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(*self / n)
    }

    /// Angle between two directions in `[0, pi]`, accurate near 0 and pi.
    pub fn angle_to(&self, o: &StokesVector) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }
}

impl std::ops::Div<f64> for StokesVector {
    type Output = StokesVector;
    fn div(self, k: f64) -> StokesVector {
        StokesVector::new(self.s1 / k, self.s2 / k, self.s3 / k)
    }
}

impl fmt::Display for StokesVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.s1, self.s2, self.s3)
    }
}

/// Maps a Jones state to its unit Stokes vector.
pub fn jones_to_stokes(j: &JonesVector) -> StokesVector {
    let x = j.c_h.conj() * j.c_v;
    StokesVector::new(
        j.c_h.norm_sqr() - j.c_v.norm_sqr(),
        2.0 * x.re,
        2.0 * x.im,
    )
}

/// Maps a unit Stokes vector to the canonical Jones state.
pub fn stokes_to_jones(s: &StokesVector) -> Result<JonesVector> {
    let n = s.norm();
    if !n.is_finite() || (n - 1.0).abs() > CONSTRUCTION_TOL {
        return Err(Error::NotNormalized(n));
    }
    let s = *s / n;
    let transverse = Complex64::new(s.s2, s.s3);
    let (h, v) = if s.s1 >= 0.0 {
        let h = ((1.0 + s.s1) / 2.0).sqrt();
        (Complex64::new(h, 0.0), transverse / (2.0 * h))
    } else {
        // Avoid dividing by a small |h| near the V pole.
        let v_mag = ((1.0 - s.s1) / 2.0).sqrt();
        let v = Complex64::from_polar(v_mag, transverse.arg());
        (Complex64::new(transverse.norm() / (2.0 * v_mag), 0.0), v)
    };
    JonesVector::normalized(h, v)
}

/// Transition probability `|<a|b>|^2`.
pub fn overlap_prob(a: &JonesVector, b: &JonesVector) -> f64 {
    a.inner(b).norm_sqr().min(1.0)
}

/// 2x2 density matrix: Hermitian, unit trace, positive semi-definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity to `1e-9`.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > CONSTRUCTION_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = m[(0, 0)] + m[(1, 1)];
        if (tr.re - 1.0).abs() > CONSTRUCTION_TOL || tr.im.abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let rho = Self(m);
        let min_eig = rho.eigenvalues()[0];
        if min_eig < -CONSTRUCTION_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Projector onto a pure state.
    pub fn pure(j: &JonesVector) -> Self {
        let (h, v) = (j.c_h, j.c_v);
        Self(Matrix2::new(
            h * h.conj(),
            h * v.conj(),
            v * h.conj(),
            v * v.conj(),
        ))
    }

    /// `(I + r.sigma)/2` for a Bloch vector with `|r| <= 1`.
    pub fn from_bloch(r: &StokesVector) -> Result<Self> {
        if r.norm() > 1.0 + CONSTRUCTION_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "Bloch vector length {} exceeds one",
                r.norm()
            )));
        }
        Ok(Self(bloch_matrix(r)))
    }

    /// Maximally mixed state `I/2`.
    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity() * Complex64::new(0.5, 0.0))
    }

    /// Convex combination of density matrices. Weights must be non-negative
    /// and are renormalized to sum to one.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<Self> {
        let mut acc = Matrix2::<Complex64>::zeros();
        let mut total = 0.0;
        for (w, rho) in parts {
            if !(w >= 0.0) {
                return Err(crate::invalid("weight", format!("{w} is negative")));
            }
            acc += rho.0 * Complex64::new(w, 0.0);
            total += w;
        }
        if !(total > 0.0) {
            return Err(Error::EmptyTrajectory);
        }
        Self::new(acc / Complex64::new(total, 0.0))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// Bloch vector `(tr(rho sigma1), tr(rho sigma2), tr(rho sigma3))`.
    pub fn bloch_vector(&self) -> StokesVector {
        let m = &self.0;
        let off = m[(1, 0)];
        StokesVector::new((m[(0, 0)] - m[(1, 1)]).re, 2.0 * off.re, 2.0 * off.im)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)];
        let half_tr = (a + d) / 2.0;
        let r = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        [half_tr - r, half_tr + r]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

fn bloch_matrix(r: &StokesVector) -> Matrix2<Complex64> {
    let half = 0.5;
    Matrix2::new(
        Complex64::new(half * (1.0 + r.s1), 0.0),
        Complex64::new(half * r.s2, -half * r.s3),
        Complex64::new(half * r.s2, half * r.s3),
        Complex64::new(half * (1.0 - r.s1), 0.0),
    )
}

/// `<s0|rho|s0>`, the fidelity between a pure state and a mixed state.
pub fn fidelity_pure_mixed(s0: &JonesVector, rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let (h, v) = (s0.c_h, s0.c_v);
    let val = h.conj() * (m[(0, 0)] * h + m[(0, 1)] * v) + v.conj() * (m[(1, 0)] * h + m[(1, 1)] * v);
    val.re.clamp(0.0, 1.0)
}

/// Rotates `s` by `angle` (right hand) about `axis` using Rodrigues' formula.
/// The axis is normalized first; a zero axis is rejected.
pub fn rotate_stokes(s: &StokesVector, axis: &StokesVector, angle: f64) -> Result<StokesVector> {
    let k = axis.normalized()?;
    let (sin, cos) = angle.sin_cos();
    let k_cross_s = k.cross(s);
    let k_dot_s = k.dot(s);
    Ok(StokesVector::new(
        s.s1 * cos + k_cross_s.s1 * sin + k.s1 * k_dot_s * (1.0 - cos),
        s.s2 * cos + k_cross_s.s2 * sin + k.s2 * k_dot_s * (1.0 - cos),
        s.s3 * cos + k_cross_s.s3 * sin + k.s3 * k_dot_s * (1.0 - cos),
    ))
}

/// Pauli matrices matching the Stokes convention of this module.
pub fn pauli() -> [Matrix2<Complex64>; 3] {
    [
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
    ]
}

/// 2x2 unitary acting on Jones vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesUnitary(Matrix2<Complex64>);

impl JonesUnitary {
    /// Validates `U^dagger U = I` to `1e-9`.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let dev = unitarity_deviation(&m);
        if !(dev <= CONSTRUCTION_TOL) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    /// `exp(-i angle/2 axis.sigma)`: Stokes rotation by `angle` about `axis`.
    pub fn from_axis_angle(axis: &StokesVector, angle: f64) -> Result<Self> {
        let n = axis.normalized()?;
        Ok(Self::from_unit_axis_angle(&n, angle))
    }

    /// As [`JonesUnitary::from_axis_angle`] for an axis already known to be unit.
    pub(crate) fn from_unit_axis_angle(n: &StokesVector, angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        // cos I - i sin (n.sigma)
        Self(Matrix2::new(
            Complex64::new(c, -s * n.s1),
            Complex64::new(-s * n.s3, -s * n.s2),
            Complex64::new(s * n.s3, -s * n.s2),
            Complex64::new(c, s * n.s1),
        ))
    }

    /// `|a_out><a_in| + |b_out><b_in|` for orthonormal pairs.
    pub fn from_basis_map(
        a_in: &JonesVector,
        b_in: &JonesVector,
        a_out: &JonesVector,
        b_out: &JonesVector,
    ) -> Result<Self> {
        let ket = |j: &JonesVector| nalgebra::Vector2::new(j.c_h, j.c_v);
        let m = ket(a_out) * ket(a_in).adjoint() + ket(b_out) * ket(b_in).adjoint();
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn apply(&self, j: &JonesVector) -> JonesVector {
        let h = self.0[(0, 0)] * j.c_h + self.0[(0, 1)] * j.c_v;
        let v = self.0[(1, 0)] * j.c_h + self.0[(1, 1)] * j.c_v;
        // Unitary images keep unit norm up to rounding.
        JonesVector::canonical(h, v)
    }

    /// Largest entry of `U^dagger U - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }
}

impl Mul for JonesUnitary {
    type Output = JonesUnitary;
    fn mul(self, rhs: JonesUnitary) -> JonesUnitary {
        JonesUnitary(self.0 * rhs.0)
    }
}

fn unitarity_deviation(m: &Matrix2<Complex64>) -> f64 {
    (m.adjoint() * m - Matrix2::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Proper rotation of Stokes space (the 3x3 block of a lossless Mueller matrix).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolRotation(Matrix3<f64>);

impl PolRotation {
    /// Validates orthogonality and `det = +1` to `1e-9`.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let dev = rotation_deviation(&m);
        if !(dev <= CONSTRUCTION_TOL) {
            return Err(Error::NotRotation(dev));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Right-hand rotation by `angle` about `axis`.
    pub fn from_axis_angle(axis: &StokesVector, angle: f64) -> Result<Self> {
        let n = axis.normalized()?;
        let columns = [StokesVector::S1, StokesVector::S2, StokesVector::S3]
            .map(|e| rotate_stokes(&e, &n, angle).map(|v| v.to_vector3()));
        let [c0, c1, c2] = columns;
        Ok(Self(Matrix3::from_columns(&[c0?, c1?, c2?])))
    }

    /// Rotation taking the orthonormal frame `from` onto the orthonormal
    /// frame `to`, column by column.
    pub fn between_frames(from: &[StokesVector; 3], to: &[StokesVector; 3]) -> Result<Self> {
        let f = Matrix3::from_columns(&from.map(|s| s.to_vector3()));
        let t = Matrix3::from_columns(&to.map(|s| s.to_vector3()));
        Self::new(t * f.transpose())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, s: &StokesVector) -> StokesVector {
        StokesVector::from_vector3(&(self.0 * s.to_vector3()))
    }

    /// Rotation angle in `[0, pi]` and, when the angle is nonzero, the unit
    /// axis for which the rotation is right-handed.
    pub fn angle_axis(&self) -> (f64, Option<StokesVector>) {
        let m = &self.0;
        let w = StokesVector::new(
            (m[(2, 1)] - m[(1, 2)]) / 2.0,
            (m[(0, 2)] - m[(2, 0)]) / 2.0,
            (m[(1, 0)] - m[(0, 1)]) / 2.0,
        );
        let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        let sin = w.norm();
        let angle = sin.atan2(cos);
        if sin > 1e-7 {
            return (angle, Some(w / sin));
        }
        if cos > 0.0 {
            return (angle, None);
        }
        // Near pi: R + I = 2 n n^T, take the dominant column.
        let sym = m + Matrix3::identity();
        let col = (0..3)
            .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
            .unwrap_or(0);
        let axis = StokesVector::from_vector3(&sym.column(col).into_owned());
        let mut axis = axis.normalized().ok();
        if let (Some(a), true) = (axis.as_mut(), sin > 0.0) {
            if a.dot(&w) < 0.0 {
                *a = a.neg();
            }
        }
        (angle, axis)
    }

    /// Largest entry of `R^T R - I` combined with `|det R - 1|`.
    pub fn rotation_deviation(&self) -> f64 {
        rotation_deviation(&self.0)
    }
}

impl Mul for PolRotation {
    type Output = PolRotation;
    fn mul(self, rhs: PolRotation) -> PolRotation {
        PolRotation(self.0 * rhs.0)
    }
}

fn rotation_deviation(m: &Matrix3<f64>) -> f64 {
    let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
    if !ortho.is_finite() {
        return f64::INFINITY;
    }
    ortho.max((m.determinant() - 1.0).abs())
}

/// Adjoint map SU(2) -> SO(3): `R_ij = tr(sigma_i U sigma_j U^dagger)/2`.
pub fn rotation_from_unitary(u: &JonesUnitary) -> Result<PolRotation> {
    let dev = u.unitarity_deviation();
    if !(dev <= CONSTRUCTION_TOL) {
        return Err(Error::NotUnitary(dev));
    }
    let s = pauli();
    let m = u.matrix();
    let ud = m.adjoint();
    let mut r = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            r[(i, j)] = 0.5 * (s[i] * m * s[j] * ud).trace().re;
        }
    }
    // Exact orthonormality is not guaranteed after rounding; validation is
    // left to the caller-visible tolerance.
    PolRotation::new(r)
}
