//! SL(3,R) and SO(3): rotations, the adjoint action and the Iwasawa decomposition.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{CartanVector, TracelessMatrix, WeylElement};

/// An element of SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(pub(crate) Matrix3<f64>);

impl Rotation {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if defect > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(Error::NotRotation { defect, det });
        }
        Ok(Self(m))
    }

    pub(crate) const fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.0[(i, j)]))
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    /// Geodesic (angle) distance on SO(3).
    pub fn angle_to(&self, other: &Self) -> f64 {
        let c = ((self.0.transpose() * other.0).trace() - 1.0) * 0.5;
        c.clamp(-1.0, 1.0).acos()
    }

    /// Diagonal with entries `+-1`: an element of the centralizer `M` of the Cartan subalgebra.
    pub fn in_m(&self, tol: f64) -> bool {
        (0..3).all(|i| {
            (0..3).all(|j| {
                let v = self.0[(i, j)];
                if i == j {
                    (v.abs() - 1.0).abs() <= tol
                } else {
                    v.abs() <= tol
                }
            })
        })
    }

    /// Signed permutation matrix: an element of the normalizer `M'`.
    pub fn in_m_prime(&self, tol: f64) -> bool {
        self.0
            .iter()
            .all(|v| v.abs() <= tol || (v.abs() - 1.0).abs() <= tol)
    }

    /// Weyl class of an element of `M'` (`None` if not a signed permutation).
    pub fn weyl_class(&self, tol: f64) -> Option<WeylElement> {
        if !self.in_m_prime(tol) {
            return None;
        }
        let mut perm = [0; 3];
        for (j, p) in perm.iter_mut().enumerate() {
            *p = (0..3).find(|&i| self.0[(i, j)].abs() > 0.5)?;
        }
        WeylElement::new(perm).ok()
    }
}

/// An element of SL(3,R).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement(Matrix3<f64>);

impl GroupElement {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let det = m.determinant();
        if (det - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `exp(H)` for `H` in the Cartan subalgebra.
    pub fn exp_cartan(h: &CartanVector) -> Self {
        let c = h.components();
        Self(Matrix3::from_diagonal(&Vector3::new(
            c[0].exp(),
            c[1].exp(),
            c[2].exp(),
        )))
    }

    pub fn mul_rotation(&self, k: &Rotation) -> Self {
        Self(self.0 * k.0)
    }
}

impl From<Rotation> for GroupElement {
    fn from(k: Rotation) -> Self {
        Self(k.0)
    }
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_y(b: f64) -> Matrix3<f64> {
    let (s, c) = b.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// ZYZ Euler angles: `R_z(a) R_y(b) R_z(c)`.
pub fn rotation_from_euler(a: f64, b: f64, c: f64) -> Rotation {
    Rotation(rot_z(a) * rot_y(b) * rot_z(c))
}

/// Rodrigues formula for an antisymmetric `X`.
pub fn exp_so3(x: &TracelessMatrix) -> Result<Rotation> {
    let sym = (x.matrix() + x.matrix().transpose()).abs().max();
    if sym > 1e-12 * x.matrix().abs().max().max(1.0) {
        return Err(Error::NotAntisymmetric { sym });
    }
    Ok(exp_so3_raw(x.matrix()))
}

pub(crate) fn exp_so3_raw(x: &Matrix3<f64>) -> Rotation {
    let w = Vector3::new(x[(2, 1)], x[(0, 2)], x[(1, 0)]);
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-6 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0);
    Rotation(Matrix3::identity() + k * a + k * k * b)
}

/// `Ad(k) X = k X k^T`.
pub fn adjoint(k: &Rotation, x: &TracelessMatrix) -> TracelessMatrix {
    TracelessMatrix::project(k.0 * x.matrix() * k.0.transpose())
}

/// The factors of `g = k exp(H) n`.
#[derive(Clone, Copy, Debug)]
pub struct IwasawaFactors {
    pub k: Rotation,
    pub h: CartanVector,
    /// Unit upper triangular.
    pub n: Matrix3<f64>,
}

impl IwasawaFactors {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        let c = self.h.components();
        let a = Matrix3::from_diagonal(&Vector3::new(c[0].exp(), c[1].exp(), c[2].exp()));
        self.k.0 * a * self.n
    }
}

/// Full Iwasawa factorization via Householder QR with the triangular diagonal forced positive.
pub fn iwasawa_decompose(g: &GroupElement) -> IwasawaFactors {
    let qr = g.0.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..3 {
        if r[(i, i)] < 0.0 {
            let ci = -q.column(i);
            q.set_column(i, &ci);
            let ri = -r.row(i);
            r.set_row(i, &ri);
        }
    }
    let d = Vector3::new(r[(0, 0)], r[(1, 1)], r[(2, 2)]);
    let mut n = r;
    for i in 0..3 {
        let ri = n.row(i) / d[i];
        n.set_row(i, &ri);
    }
    let h = CartanVector::project([d[0].ln(), d[1].ln(), d[2].ln()]);
    IwasawaFactors {
        k: Rotation(q),
        h,
        n,
    }
}

/// `H(g)`: log of the diagonal factor of `g = k exp(H) n`.
///
/// Uses `r1 = |g e1|`, `r1 r2 = |g e1 x g e2|` and `r1 r2 r3 = det g = 1`.
pub fn iwasawa_projection(g: &GroupElement) -> CartanVector {
    iwasawa_projection_raw(&g.0)
}

#[inline]
pub(crate) fn iwasawa_projection_raw(g: &Matrix3<f64>) -> CartanVector {
    let c1 = g.column(0);
    let c2 = g.column(1);
    let la = 0.5 * c1.norm_squared().ln();
    let lb = 0.5 * c1.cross(&c2).norm_squared().ln();
    CartanVector([la, lb - la, -lb])
}

/// The 24 signed permutation matrices with determinant `+1`.
pub fn m_prime_elements() -> Vec<Rotation> {
    let mut out = Vec::with_capacity(24);
    for s in crate::lie::weyl_elements() {
        let rep = s.representative();
        for m in m_elements() {
            out.push(Rotation(rep * m.0));
        }
    }
    out
}

/// The four diagonal `+-1` rotations.
pub fn m_elements() -> [Rotation; 4] {
    let d = |a: f64, b: f64, c: f64| Rotation(Matrix3::from_diagonal(&Vector3::new(a, b, c)));
    [
        d(1.0, 1.0, 1.0),
        d(1.0, -1.0, -1.0),
        d(-1.0, 1.0, -1.0),
        d(-1.0, -1.0, 1.0),
    ]
}

/// Haar-uniform random rotation (unit quaternion from three uniforms).
pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    rotation_from_unit_cube(u)
}

/// Shoemake's map from `[0,1)^3` to SO(3); pushes Lebesgue measure to Haar measure.
pub fn rotation_from_unit_cube(u: [f64; 3]) -> Rotation {
    use std::f64::consts::TAU;
    let (a, b) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
    let (s1, c1) = (TAU * u[1]).sin_cos();
    let (s2, c2) = (TAU * u[2]).sin_cos();
    let (w, x, y, z) = (a * s1, a * c1, b * s2, b * c2);
    Rotation(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic low-discrepancy rotations (Halton bases 2, 3, 5 through Shoemake's map).
pub fn halton_rotations(count: usize, offset: u64) -> Vec<Rotation> {
    (0..count as u64)
        .map(|i| {
            let n = i + 1 + offset;
            rotation_from_unit_cube([
                radical_inverse(n, 2),
                radical_inverse(n, 3),
                radical_inverse(n, 5),
            ])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{killing_form, norm, unit, weyl_act, weyl_elements};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_sl3(rng: &mut impl Rng) -> GroupElement {
        loop {
            let m: Matrix3<f64> = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let d = m.determinant();
            if d.abs() > 1e-2 {
                let mut m = m / d.abs().cbrt();
                if d < 0.0 {
                    let c = -m.column(0);
                    m.set_column(0, &c);
                }
                return GroupElement::new(m).unwrap();
            }
        }
    }

    #[test]
    fn euler_examples() {
        assert_eq!(rotation_from_euler(0.0, 0.0, 0.0).0, Matrix3::identity());
        let a = rotation_from_euler(PI, 0.0, 0.0);
        let b = rotation_from_euler(-PI, 0.0, 0.0);
        assert!((a.0 * b.0 - Matrix3::identity()).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = rotation_from_euler(
                rng.random_range(0.0..6.3),
                rng.random_range(0.0..3.2),
                rng.random_range(0.0..6.3),
            );
            assert!(Rotation::new(r.0).is_ok());
        }
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_so3(&TracelessMatrix::zero()).unwrap().0, Matrix3::identity());
        let t = 0.7;
        let x = TracelessMatrix::new((unit(0, 1) - unit(1, 0)) * t).unwrap();
        let r = exp_so3(&x).unwrap();
        // X = t(E12 - E21) has axis e3 with rotation angle -t
        assert!((r.0 - rot_z(-t)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let m = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let x = TracelessMatrix::new(m - m.transpose()).unwrap();
            let p = exp_so3(&x).unwrap();
            let q = exp_so3(&x.scale(-1.0)).unwrap();
            assert!((p.0 * q.0 - Matrix3::identity()).norm() < 1e-14);
            assert!(Rotation::new(p.0).is_ok());
        }
        let sym = TracelessMatrix::new(unit(0, 1) + unit(1, 0)).unwrap();
        assert!(exp_so3(&sym).is_err());
    }

    #[test]
    fn adjoint_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = TracelessMatrix::project(Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        assert!((adjoint(&Rotation::identity(), &x).matrix() - x.matrix()).norm() < 1e-15);
        for _ in 0..50 {
            let k = random_rotation(&mut rng);
            let y = adjoint(&k, &x);
            assert!((norm(&y) - norm(&x)).abs() < 1e-13);
            assert!(y.matrix().trace().abs() < 1e-14);
            assert!((killing_form(&y, &y) - killing_form(&x, &x)).abs() < 1e-12);
        }
        let h = CartanVector::new([0.4, -0.1, -0.3]).unwrap();
        for s in weyl_elements() {
            let k = Rotation::new(s.representative()).unwrap();
            let y = adjoint(&k, &TracelessMatrix::from_diagonal(&h));
            assert!((y.matrix() - weyl_act(&s, &h).to_matrix()).norm() < 1e-15);
        }
    }

    #[test]
    fn iwasawa_examples() {
        let id = GroupElement::new(Matrix3::identity()).unwrap();
        assert_eq!(iwasawa_projection(&id), CartanVector::zero());
        let e = std::f64::consts::E;
        let a = GroupElement::new(Matrix3::from_diagonal(&Vector3::new(e, 1.0, 1.0 / e))).unwrap();
        assert!(iwasawa_projection(&a).max_abs_diff(&CartanVector([1.0, 0.0, -1.0])) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let k = random_rotation(&mut rng);
            assert!(iwasawa_projection(&k.into()).max_abs_diff(&CartanVector::zero()) < 1e-14);
        }
    }

    #[test]
    fn iwasawa_factorization_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let g = random_sl3(&mut rng);
            let f = iwasawa_decompose(&g);
            assert!(Rotation::new(f.k.0).is_ok());
            for i in 0..3 {
                assert!((f.n[(i, i)] - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert_eq!(f.n[(i, j)], 0.0);
                }
            }
            let scale = g.0.abs().max();
            assert!((f.reconstruct() - g.0).abs().max() < 1e-10 * scale.max(1.0));
            let fast = iwasawa_projection(&g);
            assert!(fast.max_abs_diff(&f.h) < 1e-10);
        }
    }

    #[test]
    fn iwasawa_right_m_invariance_of_exp_h_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = CartanVector::new([0.5, 0.2, -0.7]).unwrap();
        let eh = GroupElement::exp_cartan(&h);
        for _ in 0..50 {
            let k = random_rotation(&mut rng);
            let base = iwasawa_projection(&eh.mul_rotation(&k));
            for m in m_elements() {
                let mk = m.compose(&k);
                let v = iwasawa_projection(&eh.mul_rotation(&mk));
                assert!(v.max_abs_diff(&base) < 1e-13);
            }
        }
    }

    #[test]
    fn m_prime_enumeration() {
        let mp = m_prime_elements();
        assert_eq!(mp.len(), 24);
        for (i, a) in mp.iter().enumerate() {
            assert!(a.in_m_prime(0.0));
            assert!(Rotation::new(a.0).is_ok());
            for b in &mp[i + 1..] {
                assert!(a.angle_to(b) > 0.5);
            }
        }
        assert_eq!(m_elements().iter().filter(|m| m.in_m(0.0)).count(), 4);
        for s in weyl_elements() {
            let rep = Rotation::new(s.representative()).unwrap();
            assert_eq!(rep.weyl_class(1e-12), Some(s));
        }
    }

    #[test]
    fn halton_rotations_are_rotations() {
        for r in halton_rotations(64, 0) {
            assert!(Rotation::new(r.0).is_ok());
        }
    }
}
