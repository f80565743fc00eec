//! Duistermaat's rotation `Psi(Y)` with `H(exp(Ad(Psi(Y)^{-1}) Y)) = pr_a(Y)` and the
//! resulting linearization of the Iwasawa phase.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{exp_so3_raw, iwasawa_decompose, iwasawa_projection_raw, GroupElement, Rotation};
use crate::lie::{dual_covector, k_basis, CartanVector, SpectralParam, TracelessMatrix};
use crate::phase::{phase_value, PhaseContext};

/// Orthogonal projection of a symmetric traceless matrix onto the diagonal subalgebra.
pub fn pr_p_a(y: &TracelessMatrix) -> Result<CartanVector> {
    let m = y.matrix();
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::NotSymmetric { asym });
    }
    Ok(CartanVector::project([m[(0, 0)], m[(1, 1)], m[(2, 2)]]))
}

/// `exp(Y)` for symmetric `Y` via its eigendecomposition.
fn exp_symmetric(y: &Matrix3<f64>) -> Matrix3<f64> {
    let e = SymmetricEigen::new(*y);
    let d = Matrix3::from_diagonal(&e.eigenvalues.map(f64::exp));
    e.eigenvectors * d * e.eigenvectors.transpose()
}

fn cartan_diff(a: &CartanVector, b: &CartanVector) -> Vector3<f64> {
    let (a, b) = (a.components(), b.components());
    Vector3::new(a[0] - b[0], a[1] - b[1], a[2] - b[2])
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContinuationStep {
    /// Homotopy scale reached by this step.
    pub scale: f64,
    /// Geodesic distance between consecutive solutions.
    pub distance: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DuistermaatSolution {
    /// Rows of `Y`.
    pub y: [[f64; 3]; 3],
    /// Rows of `Psi(Y)`.
    pub psi: [[f64; 3]; 3],
    /// `|H(exp(Ad(psi^{-1}) Y)) - pr_a(Y)|`
    pub residual: f64,
    pub steps: Vec<ContinuationStep>,
    /// `max distance / scale increment` along the path.
    pub lipschitz_estimate: f64,
}

impl DuistermaatSolution {
    pub fn rotation(&self) -> Rotation {
        Rotation::from_matrix_unchecked(Matrix3::from_fn(|i, j| self.psi[i][j]))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DuistermaatSettings {
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Newton iterations allowed per continuation step.
    pub max_iter: usize,
}

impl Default for DuistermaatSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            initial_step: 0.125,
            min_step: 1e-6,
            max_iter: 25,
        }
    }
}

struct Problem {
    e: Matrix3<f64>,
    target: CartanVector,
    basis: [Matrix3<f64>; 3],
}

impl Problem {
    fn new(y: &Matrix3<f64>, scale: f64) -> Self {
        let ys = y * scale;
        Self {
            e: exp_symmetric(&ys),
            target: CartanVector::project([ys[(0, 0)], ys[(1, 1)], ys[(2, 2)]]),
            basis: k_basis(),
        }
    }

    fn residual(&self, psi: &Matrix3<f64>) -> Vector3<f64> {
        let g = psi.transpose() * self.e * psi;
        cartan_diff(&iwasawa_projection_raw(&g), &self.target)
    }

    /// Column `j` is `d/de H(exp(-e X_j) g exp(e X_j)) = diag(n X_j n^{-1})` where `g = k a n`.
    fn jacobian(&self, psi: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        let g = psi.transpose() * self.e * psi;
        let f = iwasawa_decompose(&GroupElement::new(g)?);
        let ninv = f
            .n
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular unipotent factor".into()))?;
        let mut j = Matrix3::zeros();
        for (c, x) in self.basis.iter().enumerate() {
            let z = f.n * x * ninv;
            j.set_column(c, &Vector3::new(z[(0, 0)], z[(1, 1)], z[(2, 2)]));
        }
        Ok(j)
    }

    /// Minimum-norm Gauss-Newton from `psi`.
    fn newton(&self, psi: &Matrix3<f64>, tol: f64, max_iter: usize) -> Result<Option<(Matrix3<f64>, usize)>> {
        let mut psi = *psi;
        let mut r = self.residual(&psi);
        for it in 0..=max_iter {
            if r.norm() <= tol {
                return Ok(Some((psi, it)));
            }
            if it == max_iter {
                break;
            }
            let j = self.jacobian(&psi)?;
            let pinv = j
                .svd(true, true)
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::Degenerate(e.to_string()))?;
            let delta = -(pinv * r);
            let x = self.basis[0] * delta[0] + self.basis[1] * delta[1] + self.basis[2] * delta[2];
            let next = psi * exp_so3_raw(&x).matrix();
            let rn = self.residual(&next);
            if !(rn.norm() < r.norm()) {
                return Ok(None);
            }
            psi = next;
            r = rn;
        }
        Ok(None)
    }
}

/// Solves for `Psi(Y)` by continuation in `s` from `s = 0` (where the identity solves
/// exactly) to `s = 1`, halving the step on Newton failure. Each Newton step is the
/// minimum-norm correction, which keeps the path on the branch through the identity.
pub fn duistermaat_solve(y: &TracelessMatrix, settings: &DuistermaatSettings) -> Result<DuistermaatSolution> {
    let m = *y.matrix();
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::NotSymmetric { asym });
    }
    let m = (m + m.transpose()) * 0.5;
    let mut psi = Matrix3::identity();
    let mut s = 0.0;
    let mut ds = settings.initial_step;
    let mut steps = Vec::new();
    let mut lipschitz: f64 = 0.0;
    while s < 1.0 {
        let next_s = (s + ds).min(1.0);
        let prob = Problem::new(&m, next_s);
        match prob.newton(&psi, settings.tol, settings.max_iter)? {
            Some((p, iterations)) => {
                let distance = Rotation::from_matrix_unchecked(psi).angle_to(&Rotation::from_matrix_unchecked(p));
                lipschitz = lipschitz.max(distance / (next_s - s));
                steps.push(ContinuationStep {
                    scale: next_s,
                    distance,
                    iterations,
                });
                psi = p;
                s = next_s;
                ds = (ds * 1.5).min(settings.initial_step * 2.0);
            }
            None => {
                ds *= 0.5;
                if ds < settings.min_step {
                    let residual = prob.residual(&psi).norm();
                    return Err(Error::ContinuationFailed {
                        last_good_scale: s,
                        residual,
                    });
                }
            }
        }
    }
    let psi_rot = Rotation::from_matrix_unchecked(psi);
    Ok(DuistermaatSolution {
        y: [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)])),
        psi: psi_rot.rows(),
        residual: duistermaat_residual(y, &psi_rot)?,
        steps,
        lipschitz_estimate: lipschitz,
    })
}

/// `|H(exp(Ad(psi^{-1}) Y)) - pr_a(Y)|`, evaluated directly.
pub fn duistermaat_residual(y: &TracelessMatrix, psi: &Rotation) -> Result<f64> {
    let pr = pr_p_a(y)?;
    let p = psi.matrix();
    let conj = p.transpose() * y.matrix() * p;
    let sym = (conj + conj.transpose()) * 0.5;
    let h = iwasawa_projection_raw(&exp_symmetric(&sym));
    Ok(cartan_diff(&h, &pr).norm())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub samples: usize,
    /// max over `k` of `|lambda(H(e^H k Psi(Ad(k^{-1}) H))) - f_{H,H'}(k)|`
    pub max_deviation: f64,
    pub max_solver_residual: f64,
}

/// Checks `lambda(H(exp H . k . Psi_k)) = B(Ad(k^{-1}) H, H')` with `H' = lambda^vee` and
/// `Psi_k = Psi(Ad(k^{-1}) H)`.
pub fn pushforward_identity_check(
    h: &CartanVector,
    lambda: &SpectralParam,
    k_samples: &[Rotation],
    settings: &DuistermaatSettings,
) -> Result<PushforwardReport> {
    let hp = dual_covector(lambda)?;
    let ctx = PhaseContext::new(*h, hp);
    let hm = h.to_matrix();
    let d = h.components().map(f64::exp);
    let results = crate::exec::Exec::default().map(k_samples.len(), |i| -> Result<(f64, f64)> {
        let k = k_samples[i].matrix();
        let y = TracelessMatrix::project(k.transpose() * hm * k);
        let sol = duistermaat_solve(&y, settings)?;
        let g = Matrix3::from_fn(|r, c| d[r] * k[(r, c)]) * sol.rotation().matrix();
        let value = lambda.eval(&iwasawa_projection_raw(&g)).re;
        Ok(((value - phase_value(&ctx, &k_samples[i])).abs(), sol.residual))
    });
    let mut max_deviation: f64 = 0.0;
    let mut max_solver_residual: f64 = 0.0;
    for r in results {
        let (dev, res) = r?;
        max_deviation = max_deviation.max(dev);
        max_solver_residual = max_solver_residual.max(res);
    }
    Ok(PushforwardReport {
        samples: k_samples.len(),
        max_deviation,
        max_solver_residual,
    })
}

/// Symmetric traceless `Y` from six coordinates (three diagonal, two free; three off-diagonal).
pub fn symmetric_from(diag: CartanVector, off: [f64; 3]) -> TracelessMatrix {
    let c = diag.components();
    TracelessMatrix::project(Matrix3::new(
        c[0], off[0], off[1], off[0], c[1], off[2], off[1], off[2], c[2],
    ))
}
