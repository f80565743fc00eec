//! Structure constants of sl(3,R): Killing form, Cartan involution, roots,
//! coroots, the Weyl group and the Omega weight.

use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplier of the trace form: `B(X, Y) = 6 tr(XY)` on sl(3).
pub const KILLING_SCALE: f64 = 6.0;

/// Default absolute threshold on `|alpha(H)|` below which a root counts as vanishing.
pub const DEFAULT_REGULARITY_TOL: f64 = 1e-9;

/// Elementary matrix `E_ij` (0-based indices).
pub fn unit(i: usize, j: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(i, j)] = 1.0;
    m
}

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// An element of sl(3,R).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracelessMatrix(Matrix3<f64>);

impl TracelessMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let trace = m.trace();
        if trace.abs() > 1e-12 * max_abs(&m).max(1.0) {
            return Err(Error::NotTraceless { trace });
        }
        Ok(Self(m))
    }

    /// Removes the trace part of `m`.
    pub fn project(m: Matrix3<f64>) -> Self {
        let t = m.trace() / 3.0;
        Self(m - Matrix3::identity() * t)
    }

    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn from_diagonal(h: &CartanVector) -> Self {
        Self(h.to_matrix())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        max_abs(&(self.0 - self.0.transpose())) <= tol
    }

    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        max_abs(&(self.0 + self.0.transpose())) <= tol
    }

    pub fn bracket(&self, other: &Self) -> Self {
        Self(self.0 * other.0 - other.0 * self.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0 * c)
    }
}

impl std::ops::Add for TracelessMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl std::ops::Sub for TracelessMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

/// The standard 8-element basis of sl(3): six `E_ij` (i != j) and two diagonal elements.
pub fn standard_basis() -> Vec<TracelessMatrix> {
    let mut basis = Vec::with_capacity(8);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                basis.push(TracelessMatrix(unit(i, j)));
            }
        }
    }
    basis.push(TracelessMatrix(unit(0, 0) - unit(1, 1)));
    basis.push(TracelessMatrix(unit(1, 1) - unit(2, 2)));
    basis
}

/// Killing form `B(X, Y) = 6 tr(XY)`.
pub fn killing_form(x: &TracelessMatrix, y: &TracelessMatrix) -> f64 {
    killing_raw(&x.0, &y.0)
}

#[inline]
pub(crate) fn killing_raw(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    // tr(XY) = sum_ij X_ij Y_ji
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += x[(i, j)] * y[(j, i)];
        }
    }
    KILLING_SCALE * s
}

/// Cartan involution `X -> -X^T`.
pub fn theta(x: &TracelessMatrix) -> TracelessMatrix {
    TracelessMatrix(-x.0.transpose())
}

/// Splits `X` into its antisymmetric (k) and symmetric (p) parts.
pub fn cartan_split(x: &TracelessMatrix) -> (TracelessMatrix, TracelessMatrix) {
    let t = x.0.transpose();
    (
        TracelessMatrix((x.0 - t) * 0.5),
        TracelessMatrix((x.0 + t) * 0.5),
    )
}

/// `||X|| = sqrt(-B(X, theta X))`.
pub fn norm(x: &TracelessMatrix) -> f64 {
    (-killing_form(x, &theta(x))).max(0.0).sqrt()
}

/// An element `H` of the diagonal Cartan subalgebra, stored as its diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanVector(pub(crate) [f64; 3]);

impl CartanVector {
    pub fn new(h: [f64; 3]) -> Result<Self> {
        let sum = h[0] + h[1] + h[2];
        let scale = h.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if sum.abs() > 1e-14 * scale {
            return Err(Error::NotSumZero { sum });
        }
        Ok(Self(h))
    }

    /// Orthogonal projection of an arbitrary triple onto the sum-zero plane.
    pub fn project(h: [f64; 3]) -> Self {
        let m = (h[0] + h[1] + h[2]) / 3.0;
        Self([h[0] - m, h[1] - m, h[2] - m])
    }

    pub const fn zero() -> Self {
        Self([0.0; 3])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(self.0[0], self.0[1], self.0[2]))
    }

    /// `B(H, H') = 6 sum h_i h'_i`.
    pub fn killing(&self, other: &Self) -> f64 {
        KILLING_SCALE * (self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2])
    }

    pub fn norm(&self) -> f64 {
        self.killing(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self([self.0[0] * c, self.0[1] * c, self.0[2] * c])
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..3).fold(0.0_f64, |a, i| a.max((self.0[i] - other.0[i]).abs()))
    }

    /// The covector `B(self, .)`.
    pub fn to_covector(&self) -> SpectralParam {
        SpectralParam::real(self.scale(KILLING_SCALE).0)
    }
}

impl std::ops::Index<usize> for CartanVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An element of the complexified dual of the Cartan subalgebra, `lambda(H) = sum l_i h_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam {
    l: [Complex64; 3],
}

impl SpectralParam {
    pub fn new(l: [Complex64; 3]) -> Result<Self> {
        let sum = l[0] + l[1] + l[2];
        let scale = l.iter().fold(1.0_f64, |a, v| a.max(v.norm()));
        if sum.norm() > 1e-14 * scale {
            return Err(Error::NotSumZero { sum: sum.norm() });
        }
        Ok(Self { l })
    }

    /// Like [`SpectralParam::new`], additionally enforcing `|Im l_i| <= imag_bound`.
    pub fn with_imag_bound(l: [Complex64; 3], imag_bound: f64) -> Result<Self> {
        let p = Self::new(l)?;
        let imag = p.max_imag();
        if imag > imag_bound {
            return Err(Error::ImaginaryPartTooLarge {
                imag,
                bound: imag_bound,
            });
        }
        Ok(p)
    }

    /// A real covector; the triple is projected to sum zero.
    pub fn real(l: [f64; 3]) -> Self {
        let p = CartanVector::project(l).0;
        Self {
            l: p.map(|v| Complex64::new(v, 0.0)),
        }
    }

    /// The half-sum of positive roots, `rho(H) = h1 - h3`.
    pub fn rho() -> Self {
        Self::real([1.0, 0.0, -1.0])
    }

    pub fn zero() -> Self {
        Self::real([0.0; 3])
    }

    /// The covector whose dual under `B` is `h`.
    pub fn from_dual(h: &CartanVector) -> Self {
        h.to_covector()
    }

    pub fn components(&self) -> [Complex64; 3] {
        self.l
    }

    pub fn real_part(&self) -> [f64; 3] {
        self.l.map(|c| c.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.l.iter().fold(0.0_f64, |a, c| a.max(c.im.abs()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn eval(&self, h: &CartanVector) -> Complex64 {
        self.l[0] * h.0[0] + self.l[1] * h.0[1] + self.l[2] * h.0[2]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            l: self.l.map(|v| v * c),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Weyl action on covectors, `(s lambda)(H) = lambda(s^{-1} H)`; permutes coefficients like `H`.
    pub fn weyl_act(&self, s: &WeylElement) -> Self {
        let inv = s.inverse_perm();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.l[inv[i]];
        }
        Self { l: out }
    }
}

/// `lambda^vee`: the unique `H'` with `B(H', H) = lambda(H)` for all `H`.
pub fn dual_covector(lambda: &SpectralParam) -> Result<CartanVector> {
    let imag = lambda.max_imag();
    if imag > 1e-14 {
        return Err(Error::NonRealSpectral { imag });
    }
    Ok(CartanVector::project(lambda.real_part()).scale(1.0 / KILLING_SCALE))
}

/// A root `alpha_ij(H) = h_i - h_j` (0-based indices, `i != j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Root {
    i: usize,
    j: usize,
}

impl Root {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j || i > 2 || j > 2 {
            return Err(Error::InvalidArgument(format!("no root with indices ({i}, {j})")));
        }
        Ok(Self { i, j })
    }

    pub const fn indices(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub const fn is_positive(&self) -> bool {
        self.i < self.j
    }

    pub const fn neg(&self) -> Self {
        Self { i: self.j, j: self.i }
    }

    pub fn eval(&self, h: &CartanVector) -> f64 {
        h.0[self.i] - h.0[self.j]
    }

    /// `(s alpha)(H) = alpha(s^{-1} H)`; for `alpha_ij` this is `alpha_{s(i) s(j)}`.
    pub fn weyl_act(&self, s: &WeylElement) -> Self {
        Self {
            i: s.perm[self.i],
            j: s.perm[self.j],
        }
    }

    /// The index of the coordinate untouched by this root.
    pub const fn complement(&self) -> usize {
        3 - self.i - self.j
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha{}{}", self.i + 1, self.j + 1)
    }
}

/// Positive roots in the fixed order `alpha12, alpha23, alpha13`.
pub const POSITIVE_ROOTS: [Root; 3] = [
    Root { i: 0, j: 1 },
    Root { i: 1, j: 2 },
    Root { i: 0, j: 2 },
];

pub fn root_eval(alpha: &Root, h: &CartanVector) -> f64 {
    alpha.eval(h)
}

/// Orthonormal basis of so(3) with `X_i` in the root space attached to `POSITIVE_ROOTS[i]`:
/// `X_i = (E_ab - E_ba) / sqrt(12)` for `alpha_i = alpha_ab`, so `-B(X_i, theta X_j) = delta_ij`.
pub fn k_basis() -> [Matrix3<f64>; 3] {
    let c = 1.0 / 12f64.sqrt();
    POSITIVE_ROOTS.map(|a| (unit(a.i, a.j) - unit(a.j, a.i)) * c)
}

/// `alpha^vee = (e_i - e_j) / 6`.
pub fn coroot(alpha: &Root) -> CartanVector {
    let mut h = [0.0; 3];
    h[alpha.i] = 1.0 / KILLING_SCALE;
    h[alpha.j] = -1.0 / KILLING_SCALE;
    CartanVector(h)
}

/// Positive roots with `|alpha(H)| <= tol`.
pub fn singular_roots(h: &CartanVector, tol: f64) -> Vec<Root> {
    POSITIVE_ROOTS
        .iter()
        .copied()
        .filter(|a| a.eval(h).abs() <= tol)
        .collect()
}

/// `Omega(H, H') = prod over positive roots of (1 + |alpha(H) alpha(H')|)`.
pub fn omega(h: &CartanVector, hp: &CartanVector) -> f64 {
    POSITIVE_ROOTS
        .iter()
        .map(|a| 1.0 + (a.eval(h) * a.eval(hp)).abs())
        .product()
}

/// A Weyl group element, i.e. a permutation `sigma` of the three diagonal slots.
///
/// Acts on `H` by `(sH)_i = h_{sigma^{-1}(i)}`. Its representative in `M'` is the
/// permutation matrix `e_j -> e_{sigma(j)}`, with the first column negated when
/// `sigma` is odd so that the determinant is `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylElement {
    perm: [usize; 3],
}

impl WeylElement {
    pub fn new(perm: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &p in &perm {
            if p > 2 || seen[p] {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub const fn identity() -> Self {
        Self { perm: [0, 1, 2] }
    }

    pub const fn perm(&self) -> [usize; 3] {
        self.perm
    }

    pub fn sign(&self) -> f64 {
        let p = self.perm;
        let mut inversions = 0;
        for a in 0..3 {
            for b in a + 1..3 {
                if p[a] > p[b] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub(crate) fn inverse_perm(&self) -> [usize; 3] {
        let mut inv = [0; 3];
        for (j, &p) in self.perm.iter().enumerate() {
            inv[p] = j;
        }
        inv
    }

    pub fn inverse(&self) -> Self {
        Self {
            perm: self.inverse_perm(),
        }
    }

    /// `(self * other)` acting as `self(other(.))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            perm: [
                self.perm[other.perm[0]],
                self.perm[other.perm[1]],
                self.perm[other.perm[2]],
            ],
        }
    }

    pub fn representative(&self) -> Matrix3<f64> {
        let mut k = Matrix3::zeros();
        for j in 0..3 {
            k[(self.perm[j], j)] = 1.0;
        }
        if self.sign() < 0.0 {
            let c = -k.column(0);
            k.set_column(0, &c);
        }
        k
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {} {}]", self.perm[0] + 1, self.perm[1] + 1, self.perm[2] + 1)
    }
}

/// The six Weyl group elements in lexicographic order of their permutations.
pub fn weyl_elements() -> [WeylElement; 6] {
    [
        WeylElement { perm: [0, 1, 2] },
        WeylElement { perm: [0, 2, 1] },
        WeylElement { perm: [1, 0, 2] },
        WeylElement { perm: [1, 2, 0] },
        WeylElement { perm: [2, 0, 1] },
        WeylElement { perm: [2, 1, 0] },
    ]
}

pub fn weyl_act(s: &WeylElement, h: &CartanVector) -> CartanVector {
    let inv = s.inverse_perm();
    CartanVector([h.0[inv[0]], h.0[inv[1]], h.0[inv[2]]])
}
