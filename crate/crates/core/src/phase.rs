//! The phase function `f_{H,H'}(k) = B(H, Ad(k) H')` on SO(3): derivatives, critical
//! set, Weyl-coset classification and the two root-space lemmas.

use std::io::Write;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{exp_so3_raw, halton_rotations, m_elements, m_prime_elements, Rotation};
use crate::lie::{
    coroot, k_basis, killing_raw, singular_roots, unit, weyl_act, weyl_elements, CartanVector,
    Root, WeylElement, DEFAULT_REGULARITY_TOL, POSITIVE_ROOTS,
};

/// `[A, B] = AB - BA`
#[inline]
fn br(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
    a * b - b * a
}

/// Pair `(H, H')` with the cached brackets used by the derivative formulas.
#[derive(Clone, Debug)]
pub struct PhaseContext {
    h: CartanVector,
    hp: CartanVector,
    hm: Matrix3<f64>,
    hpm: Matrix3<f64>,
    basis: [Matrix3<f64>; 3],
    /// `[X_i, H']`
    xh: [Matrix3<f64>; 3],
    /// `[X_i, [X_j, H']]`
    xxh: [[Matrix3<f64>; 3]; 3],
}

impl PhaseContext {
    pub fn new(h: CartanVector, hp: CartanVector) -> Self {
        let hm = h.to_matrix();
        let hpm = hp.to_matrix();
        let basis = k_basis();
        let xh = basis.map(|x| br(&x, &hpm));
        let xxh = [0, 1, 2].map(|i| [0, 1, 2].map(|j| br(&basis[i], &xh[j])));
        Self { h, hp, hm, hpm, basis, xh, xxh }
    }

    pub fn h(&self) -> &CartanVector {
        &self.h
    }

    pub fn h_prime(&self) -> &CartanVector {
        &self.hp
    }

    /// The orthonormal basis `X_1, X_2, X_3` of so(3), `X_i` attached to `alpha_i`.
    pub fn basis(&self) -> &[Matrix3<f64>; 3] {
        &self.basis
    }

    /// Typical size of second derivatives: `6 |H| |H'|` in Euclidean norms.
    pub fn scale(&self) -> f64 {
        let n = |v: &CartanVector| v.components().iter().map(|x| x * x).sum::<f64>().sqrt();
        6.0 * n(&self.h) * n(&self.hp)
    }

    #[inline]
    fn pair(&self, k: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
        killing_raw(&self.hm, &(k * y * k.transpose()))
    }
}

/// `f(k) = B(H, Ad(k) H')`.
pub fn phase_value(ctx: &PhaseContext, k: &Rotation) -> f64 {
    ctx.pair(k.matrix(), &ctx.hpm)
}

/// Left-invariant gradient: `(X_i f)(k) = B(H, Ad(k)[X_i, H'])`.
pub fn phase_gradient(ctx: &PhaseContext, k: &Rotation) -> [f64; 3] {
    let m = k.matrix();
    [0, 1, 2].map(|i| ctx.pair(m, &ctx.xh[i]))
}

fn gradient_norm(ctx: &PhaseContext, k: &Matrix3<f64>) -> f64 {
    (0..3).map(|i| ctx.pair(k, &ctx.xh[i]).powi(2)).sum::<f64>().sqrt()
}

/// `J_ij = d/dt g_i(k exp(t X_j)) = B(H, Ad(k)[X_j, [X_i, H']])`.
fn gradient_jacobian(ctx: &PhaseContext, k: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| ctx.pair(k, &ctx.xxh[j][i]))
}

/// Second left-invariant derivatives `X_i X_j f`, symmetrized; no criticality check.
pub fn phase_hessian_unchecked(ctx: &PhaseContext, k: &Rotation) -> Matrix3<f64> {
    let j = gradient_jacobian(ctx, k.matrix());
    (j + j.transpose()) * 0.5
}

/// Hessian at a critical point; rejects `k` whose gradient norm exceeds `tol`.
pub fn phase_hessian(ctx: &PhaseContext, k: &Rotation, tol: f64) -> Result<Matrix3<f64>> {
    let residual = gradient_norm(ctx, k.matrix());
    if residual > tol {
        return Err(Error::NotCritical { residual, tol });
    }
    Ok(phase_hessian_unchecked(ctx, k))
}

fn right_exp(k: &Matrix3<f64>, x: &Matrix3<f64>, t: f64) -> Matrix3<f64> {
    k * exp_so3_raw(&(x * t)).matrix()
}

/// Central differences of `t -> f(k exp(t X_i))`.
pub fn phase_gradient_fd(ctx: &PhaseContext, k: &Rotation, step: f64) -> [f64; 3] {
    let m = k.matrix();
    [0, 1, 2].map(|i| {
        let x = &ctx.basis[i];
        (ctx.pair(&right_exp(m, x, step), &ctx.hpm) - ctx.pair(&right_exp(m, x, -step), &ctx.hpm))
            / (2.0 * step)
    })
}

/// Central differences of `(s,t) -> f(k exp(s X_i) exp(t X_j))`, symmetrized.
pub fn phase_hessian_fd(ctx: &PhaseContext, k: &Rotation, step: f64) -> Matrix3<f64> {
    let m = k.matrix();
    let f = |s: f64, i: usize, t: f64, j: usize| {
        let a = right_exp(&right_exp(m, &ctx.basis[i], s), &ctx.basis[j], t);
        ctx.pair(&a, &ctx.hpm)
    };
    let mixed = Matrix3::from_fn(|i, j| {
        (f(step, i, step, j) - f(step, i, -step, j) - f(-step, i, step, j) + f(-step, i, -step, j))
            / (4.0 * step * step)
    });
    (mixed + mixed.transpose()) * 0.5
}

fn sorted_eigenvalues(m: &Matrix3<f64>) -> [f64; 3] {
    let e = SymmetricEigen::new(*m).eigenvalues;
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(f64::total_cmp);
    v
}

/// Number of Hessian eigenvalues below `rel_tol * scale` in magnitude.
pub fn hessian_nullity(hess: &Matrix3<f64>, scale: f64, rel_tol: f64) -> usize {
    sorted_eigenvalues(hess)
        .iter()
        .filter(|e| e.abs() <= rel_tol * scale.max(f64::MIN_POSITIVE))
        .count()
}

/// Second-order coefficients `-alpha_i(s^{-1} H) alpha_i(H')` at the `M'` points of class `s`.
pub fn predicted_hessian_diagonal(h: &CartanVector, hp: &CartanVector, s: &WeylElement) -> [f64; 3] {
    let sh = weyl_act(&s.inverse(), h);
    POSITIVE_ROOTS.map(|a| -a.eval(&sh) * a.eval(hp))
}

/// Dimension of the critical component `K_H s K_{H'}`.
pub fn predicted_critical_dimension(
    h: &CartanVector,
    hp: &CartanVector,
    s: &WeylElement,
    tol: f64,
) -> Result<usize> {
    if h.max_abs_diff(&CartanVector::zero()) <= tol || hp.max_abs_diff(&CartanVector::zero()) <= tol {
        return Err(Error::InvalidArgument("H and H' must be nonzero".into()));
    }
    let sh = weyl_act(&s.inverse(), h);
    let a = singular_roots(&sh, tol);
    let b = singular_roots(hp, tol);
    Ok(match (a.is_empty(), b.is_empty()) {
        (true, true) => 0,
        (true, false) | (false, true) => 1,
        (false, false) if a == b => 1,
        _ => 2,
    })
}

/// Distance of `k` from `K_H s K_{H'}`, measured on `P = Ad(k) H'` against the `Ad(K_H)`-orbit of `sH'`.
pub fn coset_distance(ctx: &PhaseContext, k: &Rotation, s: &WeylElement, tol: f64) -> f64 {
    let m = k.matrix();
    let p = m * ctx.hpm * m.transpose();
    let target = weyl_act(s, &ctx.hp).components();
    match singular_roots(&ctx.h, tol).first() {
        None => (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (p[(i, j)] - if i == j { target[i] } else { 0.0 }).abs())
            .fold(0.0, f64::max),
        Some(a) => {
            let (i, j) = a.indices();
            let l = a.complement();
            // K_H acts by rotations of the (i, j) plane: the l-row is fixed and the
            // (i, j) block is determined up to conjugation by its eigenvalues.
            let mut d = p[(i, l)].abs().max(p[(j, l)].abs()).max((p[(l, l)] - target[l]).abs());
            let tr = p[(i, i)] + p[(j, j)];
            let disc = ((p[(i, i)] - p[(j, j)]).powi(2) + 4.0 * p[(i, j)].powi(2)).sqrt();
            let (lo, hi) = ((tr - disc) * 0.5, (tr + disc) * 0.5);
            let (tlo, thi) = (target[i].min(target[j]), target[i].max(target[j]));
            d = d.max((lo - tlo).abs()).max((hi - thi).abs());
            d
        }
    }
}

/// Nearest Weyl coset of a critical point and its distance.
pub fn weyl_coset(ctx: &PhaseContext, k: &Rotation, tol: f64) -> (WeylElement, f64) {
    weyl_elements()
        .into_iter()
        .map(|s| (s, coset_distance(ctx, k, &s, tol)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("six Weyl elements")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    /// Rows of the rotation.
    pub k: [[f64; 3]; 3],
    pub residual: f64,
    pub weyl_coset: WeylElement,
    pub coset_distance: f64,
    /// Predicted dimension of the component through `k`.
    pub manifold_dim: usize,
    /// Numerical nullity of the Hessian.
    pub nullity: usize,
    pub in_m_prime: bool,
    pub hessian: [[f64; 3]; 3],
    pub hessian_eigenvalues: [f64; 3],
    pub iterations: usize,
}

impl CriticalPointRecord {
    pub fn rotation(&self) -> Rotation {
        Rotation::from_matrix_unchecked(Matrix3::from_fn(|i, j| self.k[i][j]))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverFailure {
    pub seed_index: usize,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Gradient-norm acceptance threshold.
    pub tol: f64,
    pub max_iter: usize,
    /// Geodesic angle below which two points are merged.
    pub dedup_angle: f64,
    /// Relative threshold for zero Hessian eigenvalues and root regularity.
    pub rank_tol: f64,
    /// Absolute tolerance for coset membership and wall detection.
    pub coset_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            dedup_angle: 1e-4,
            rank_tol: 1e-7,
            coset_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalInventory {
    pub h: CartanVector,
    pub h_prime: CartanVector,
    pub seeds: usize,
    pub points: Vec<CriticalPointRecord>,
    pub failures: Vec<SolverFailure>,
}

/// The 24 elements of `M'` followed by `extra` Halton rotations.
pub fn default_seeds(extra: usize) -> Vec<Rotation> {
    let mut s = m_prime_elements();
    s.extend(halton_rotations(extra, 0));
    s
}

fn levenberg_marquardt(
    ctx: &PhaseContext,
    seed: &Rotation,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(Matrix3<f64>, f64, usize), (f64, usize)> {
    let mut k = *seed.matrix();
    let mut r = gradient_norm(ctx, &k);
    let mut mu = 1e-3 * ctx.scale().powi(2);
    for it in 0..max_iter {
        if r <= tol {
            return Ok((k, r, it));
        }
        let g = Vector3::from_fn(|i, _| ctx.pair(&k, &ctx.xh[i]));
        let j = gradient_jacobian(ctx, &k);
        let jtj = j.transpose() * j;
        let rhs = -(j.transpose() * g);
        let mut accepted = false;
        for _ in 0..40 {
            let a = jtj + Matrix3::identity() * mu;
            let Some(delta) = a.lu().solve(&rhs) else {
                mu *= 10.0;
                continue;
            };
            let x = ctx.basis[0] * delta[0] + ctx.basis[1] * delta[1] + ctx.basis[2] * delta[2];
            let cand = k * exp_so3_raw(&x).matrix();
            let rc = gradient_norm(ctx, &cand);
            if rc < r {
                k = cand;
                r = rc;
                mu = (mu / 5.0).max(1e-300);
                accepted = true;
                break;
            }
            mu *= 8.0;
        }
        if !accepted {
            return if r <= tol { Ok((k, r, it)) } else { Err((r, it)) };
        }
    }
    if r <= tol {
        Ok((k, r, max_iter))
    } else {
        Err((r, max_iter))
    }
}

/// Locates critical points of `f_{H,H'}` from each seed with a Levenberg-Marquardt
/// iteration on the gradient (retraction `k <- k exp(sum delta_i X_i)`), merges
/// duplicates and classifies each point. Non-convergent seeds are reported, not kept.
pub fn find_critical_points(
    ctx: &PhaseContext,
    seeds: &[Rotation],
    settings: &SolverSettings,
) -> Result<CriticalInventory> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    if ctx.scale() <= settings.coset_tol {
        return Err(Error::Degenerate(
            "phase function is constant (H or H' is zero)".into(),
        ));
    }
    let results: Vec<_> = crate::exec::Exec::default().map(seeds.len(), |i| {
        levenberg_marquardt(ctx, &seeds[i], settings.tol, settings.max_iter)
    });
    let mut points: Vec<CriticalPointRecord> = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Err((residual, iterations)) => failures.push(SolverFailure {
                seed_index: i,
                residual,
                iterations,
            }),
            Ok((k, residual, iterations)) => {
                let rot = Rotation::from_matrix_unchecked(k);
                if points
                    .iter()
                    .any(|p| p.rotation().angle_to(&rot) < settings.dedup_angle)
                {
                    continue;
                }
                let hess = phase_hessian_unchecked(ctx, &rot);
                let (s, dist) = weyl_coset(ctx, &rot, settings.coset_tol);
                let reg_tol = settings.coset_tol.max(DEFAULT_REGULARITY_TOL);
                points.push(CriticalPointRecord {
                    k: rot.rows(),
                    residual,
                    weyl_coset: s,
                    coset_distance: dist,
                    manifold_dim: predicted_critical_dimension(&ctx.h, &ctx.hp, &s, reg_tol)?,
                    nullity: hessian_nullity(&hess, ctx.scale(), settings.rank_tol),
                    in_m_prime: rot.in_m_prime(1e-6),
                    hessian: [0, 1, 2].map(|a| [0, 1, 2].map(|b| hess[(a, b)])),
                    hessian_eigenvalues: sorted_eigenvalues(&hess),
                    iterations,
                });
            }
        }
    }
    Ok(CriticalInventory {
        h: ctx.h,
        h_prime: ctx.hp,
        seeds: seeds.len(),
        points,
        failures,
    })
}

/// Gradient norm at `k exp(eps v)` divided by `eps`, for unit `v` in the Hessian kernel.
///
/// Along a critical manifold this is `O(eps)`; transversally it is of the order of the Hessian.
pub fn tangent_defects(ctx: &PhaseContext, rec: &CriticalPointRecord, eps: f64) -> Vec<f64> {
    let hess = Matrix3::from_fn(|i, j| rec.hessian[i][j]);
    let eig = SymmetricEigen::new(hess);
    let k = rec.rotation();
    (0..3)
        .filter(|&c| eig.eigenvalues[c].abs() <= 1e-7 * ctx.scale())
        .map(|c| {
            let v = eig.eigenvectors.column(c);
            let x = ctx.basis[0] * v[0] + ctx.basis[1] * v[1] + ctx.basis[2] * v[2];
            gradient_norm(ctx, &right_exp(k.matrix(), &x, eps)) / eps
        })
        .collect()
}

impl CriticalInventory {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "k11", "k12", "k13", "k21", "k22", "k23", "k31", "k32", "k33", "residual",
            "weyl_coset", "coset_distance", "manifold_dim", "nullity", "in_m_prime", "eig1",
            "eig2", "eig3",
        ])?;
        for p in &self.points {
            let mut rec: Vec<String> = p.k.iter().flatten().map(|v| v.to_string()).collect();
            rec.push(p.residual.to_string());
            rec.push(p.weyl_coset.to_string());
            rec.push(p.coset_distance.to_string());
            rec.push(p.manifold_dim.to_string());
            rec.push(p.nullity.to_string());
            rec.push(p.in_m_prime.to_string());
            rec.extend(p.hessian_eigenvalues.iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Unique positive root vanishing on a singular nonzero `H`.
fn wall_root(h: &CartanVector, tol: f64) -> Result<Root> {
    if h.max_abs_diff(&CartanVector::zero()) <= tol {
        return Err(Error::Degenerate("H is zero".into()));
    }
    singular_roots(h, tol)
        .first()
        .copied()
        .ok_or(Error::RegularElement)
}

/// Period of `t -> exp(t X_alpha)` for the unit-norm generator: `2 pi sqrt(12)`.
pub fn circle_period() -> f64 {
    std::f64::consts::TAU * 12f64.sqrt()
}

fn circle_generator(a: &Root) -> Matrix3<f64> {
    let (i, j) = a.indices();
    (unit(i, j) - unit(j, i)) / 12f64.sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma42Report {
    pub root: String,
    pub samples: usize,
    /// max `|B(H_1, Ad(k) X)|` for `k` in `K_H`, `X` in the root spaces of the other roots.
    pub max_abs: f64,
    /// min over generic `k` of max `|B(H_1, Ad(k) X)|` for `X` in the root space of the wall root.
    pub min_generic_own_root: f64,
}

/// `B(H_1, Ad(k) X) = 0` for `k` in `K_H = M exp(R X_alpha)`, `H_1` in `a`, `X` in `q` minus `p_alpha`.
pub fn lemma42_check(h: &CartanVector, samples: usize) -> Result<Lemma42Report> {
    let a = wall_root(h, DEFAULT_REGULARITY_TOL)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let gen = circle_generator(&a);
    let cartan = [
        CartanVector::project([1.0, -1.0, 0.0]).to_matrix(),
        CartanVector::project([0.0, 1.0, -1.0]).to_matrix(),
    ];
    let sym = |b: &Root| {
        let (i, j) = b.indices();
        unit(i, j) + unit(j, i)
    };
    let others: Vec<Matrix3<f64>> = POSITIVE_ROOTS.iter().filter(|b| **b != a).map(sym).collect();
    let own = sym(&a);
    let period = circle_period();
    let mut max_abs: f64 = 0.0;
    let mut min_generic = f64::INFINITY;
    for n in 0..samples {
        let t = period * (n as f64 + 0.5) / samples as f64;
        let k0 = exp_so3_raw(&(gen * t));
        for m in m_elements() {
            let k = m.matrix() * k0.matrix();
            for x in &others {
                let ad = k * x * k.transpose();
                for h1 in &cartan {
                    max_abs = max_abs.max(killing_raw(h1, &ad).abs());
                }
            }
            // t/sqrt(12) away from multiples of pi/2 means k is outside M'
            let theta = t / 12f64.sqrt();
            let off = (theta / std::f64::consts::FRAC_PI_2).fract();
            if off > 0.05 && off < 0.95 {
                let ad = k * own * k.transpose();
                let v = cartan
                    .iter()
                    .map(|h1| killing_raw(h1, &ad).abs())
                    .fold(0.0, f64::max);
                min_generic = min_generic.min(v);
            }
        }
    }
    Ok(Lemma42Report {
        root: a.to_string(),
        samples,
        max_abs,
        min_generic_own_root: min_generic,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma45Report {
    pub root: String,
    pub grid: usize,
    pub period: f64,
    /// Zeros of `t -> B(alpha^vee, Ad(exp(t X_alpha)) X)` in `[0, period)`.
    pub zeros: Vec<f64>,
    /// Circle parameters of the elements of `M'` lying on `exp(R X_alpha)`.
    pub m_prime_params: Vec<f64>,
    /// Max distance (mod period) between matched zeros and `M'` parameters; infinite on count mismatch.
    pub max_mismatch: f64,
    /// Min `|B|` over grid points at least `period / 40` away from every zero.
    pub min_away: f64,
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn circle_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Zero set of `t -> B(alpha^vee, Ad(exp(t X_alpha))(E_ij + E_ji))` over one period, compared
/// with the independent list of `M'` elements on the circle `exp(R X_alpha)`.
pub fn lemma45_check(h: &CartanVector, grid: usize) -> Result<Lemma45Report> {
    let a = wall_root(h, DEFAULT_REGULARITY_TOL)?;
    if grid < 8 {
        return Err(Error::InvalidArgument("grid too coarse".into()));
    }
    let (i, j) = a.indices();
    let gen = circle_generator(&a);
    let x = unit(i, j) + unit(j, i);
    let cv = coroot(&a).to_matrix();
    let period = circle_period();
    let f = |t: f64| {
        let k = exp_so3_raw(&(gen * t));
        let m = k.matrix();
        killing_raw(&cv, &(m * x * m.transpose()))
    };
    let ts: Vec<f64> = (0..grid).map(|n| period * n as f64 / grid as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut zeros = Vec::new();
    for n in 0..grid {
        let (t0, v0) = (ts[n], vals[n]);
        let (t1, v1) = if n + 1 < grid { (ts[n + 1], vals[n + 1]) } else { (period, vals[0]) };
        if v0 == 0.0 {
            zeros.push(t0);
        } else if v1 != 0.0 && (v0 < 0.0) != (v1 < 0.0) {
            zeros.push(bisect(f, t0, t1).rem_euclid(period));
        }
    }
    zeros.sort_by(f64::total_cmp);

    // M' elements on the circle: fix e_l, rotate the (i, j) plane
    let l = a.complement();
    let sq = 12f64.sqrt();
    let mut m_prime_params: Vec<f64> = m_prime_elements()
        .iter()
        .filter_map(|k| {
            let m = k.matrix();
            if (m[(l, l)] - 1.0).abs() > 1e-12 {
                return None;
            }
            let probe = exp_so3_raw(&(gen * 1.0)).matrix()[(i, j)];
            // exp(t X) has (i,i) = cos(t/sqrt12) and (i,j) = sign * sin(t/sqrt12)
            let sign = probe.signum();
            let theta = (sign * m[(i, j)]).atan2(m[(i, i)]);
            Some((theta * sq).rem_euclid(period))
        })
        .collect();
    m_prime_params.sort_by(f64::total_cmp);

    let max_mismatch = if zeros.len() == m_prime_params.len() {
        zeros
            .iter()
            .map(|z| {
                m_prime_params
                    .iter()
                    .map(|p| circle_distance(*z, *p, period))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let min_away = ts
        .iter()
        .zip(&vals)
        .filter(|(t, _)| zeros.iter().all(|z| circle_distance(**t, *z, period) > period / 40.0))
        .map(|(_, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(Lemma45Report {
        root: a.to_string(),
        grid,
        period,
        zeros,
        m_prime_params,
        max_mismatch,
        min_away,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{adjoint, exp_so3, random_rotation};
    use crate::lie::TracelessMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cv(a: f64, b: f64, c: f64) -> CartanVector {
        CartanVector::project([a, b, c])
    }

    #[test]
    fn phase_value_examples() {
        let h = cv(0.5, 0.2, -0.7);
        let hp = cv(-0.3, 0.9, -0.6);
        let ctx = PhaseContext::new(h, hp);
        let b = 6.0 * (0.5 * -0.3 + 0.2 * 0.9 + 0.7 * 0.6);
        assert!((phase_value(&ctx, &Rotation::identity()) - b).abs() < 1e-14);
        for s in weyl_elements() {
            let k = Rotation::from_matrix_unchecked(s.representative());
            let expect = weyl_act(&s.inverse(), &h).killing(&hp);
            assert!((phase_value(&ctx, &k) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_value_stabilizer_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // H singular on alpha12, H' singular on alpha23
        let h = cv(1.0, 1.0, -2.0);
        let hp = cv(2.0, -1.0, -1.0);
        let ctx = PhaseContext::new(h, hp);
        let gh = circle_generator(&POSITIVE_ROOTS[0]);
        let ghp = circle_generator(&POSITIVE_ROOTS[1]);
        for n in 0..50 {
            let k = random_rotation(&mut rng);
            let m1 = m_elements()[n % 4].matrix() * exp_so3_raw(&(gh * (n as f64 * 0.37))).matrix();
            let m2 = exp_so3_raw(&(ghp * (n as f64 * -0.71))).matrix() * m_elements()[(n + 1) % 4].matrix();
            let moved = Rotation::from_matrix_unchecked(m1 * k.matrix() * m2);
            assert!((phase_value(&ctx, &k) - phase_value(&ctx, &moved)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let h = cv(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let hp = cv(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let ctx = PhaseContext::new(h, hp);
            let k = random_rotation(&mut rng);
            let g = phase_gradient(&ctx, &k);
            let fd = phase_gradient_fd(&ctx, &k, 1e-4);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err = (0..3).map(|i| (g[i] - fd[i]).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(err / gn.max(ctx.scale() * 1e-3));
        }
        assert!(worst < 1e-6, "worst relative gradient error {worst}");
    }

    #[test]
    fn gradient_vanishes_on_m_prime() {
        let ctx = PhaseContext::new(cv(0.4, 0.5, -0.9), cv(1.0, -0.2, -0.8));
        for k in m_prime_elements() {
            let g = phase_gradient(&ctx, &k);
            assert!(g.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn hessian_identity_and_m_prime() {
        let h = cv(0.7, 0.1, -0.8);
        let hp = cv(-0.4, 1.1, -0.7);
        let ctx = PhaseContext::new(h, hp);
        let id = phase_hessian(&ctx, &Rotation::identity(), 1e-12).unwrap();
        for i in 0..3 {
            let a = POSITIVE_ROOTS[i];
            assert!((id[(i, i)] + a.eval(&h) * a.eval(&hp)).abs() < 1e-13);
        }
        for k in m_prime_elements() {
            let s = k.weyl_class(1e-12).unwrap();
            let hs = phase_hessian(&ctx, &k, 1e-12).unwrap();
            let d = predicted_hessian_diagonal(&h, &hp, &s);
            for i in 0..3 {
                assert!((hs[(i, i)] - d[i]).abs() < 1e-13);
            }
            let fd = phase_hessian_fd(&ctx, &k, 1e-4);
            assert!((hs - fd).norm() < 1e-6 * ctx.scale());
        }
        let zero = PhaseContext::new(h, CartanVector::zero());
        assert_eq!(phase_hessian(&zero, &Rotation::identity(), 1e-12).unwrap(), Matrix3::zeros());
        let k = exp_so3(&TracelessMatrix::new(k_basis()[0] * 0.3).unwrap()).unwrap();
        assert!(matches!(phase_hessian(&ctx, &k, 1e-8), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn dimension_rule() {
        let e = WeylElement::identity();
        let reg = cv(1.0, 0.3, -1.3);
        let w12 = cv(1.0, 1.0, -2.0);
        let w23 = cv(2.0, -1.0, -1.0);
        assert_eq!(predicted_critical_dimension(&reg, &reg, &e, 1e-9).unwrap(), 0);
        assert_eq!(predicted_critical_dimension(&reg, &w12, &e, 1e-9).unwrap(), 1);
        assert_eq!(predicted_critical_dimension(&w12, &w12, &e, 1e-9).unwrap(), 1);
        assert_eq!(predicted_critical_dimension(&w12, &w23, &e, 1e-9).unwrap(), 2);
        assert!(predicted_critical_dimension(&CartanVector::zero(), &reg, &e, 1e-9).is_err());
    }

    #[test]
    fn coset_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = cv(1.0, 1.0, -2.0);
        let hp = cv(1.0, 0.2, -1.2);
        let ctx = PhaseContext::new(h, hp);
        let gh = circle_generator(&POSITIVE_ROOTS[0]);
        for s in weyl_elements() {
            let t: f64 = rng.random_range(0.0..10.0);
            let k = Rotation::from_matrix_unchecked(
                exp_so3_raw(&(gh * t)).matrix() * s.representative() * m_elements()[1].matrix(),
            );
            assert!(coset_distance(&ctx, &k, &s, 1e-9) < 1e-12);
            assert!(phase_gradient(&ctx, &k).iter().all(|v| v.abs() < 1e-12));
        }
        let k = random_rotation(&mut rng);
        assert!(weyl_coset(&ctx, &k, 1e-9).1 > 1e-3);
    }

    #[test]
    fn regular_inventory_is_m_prime() {
        let ctx = PhaseContext::new(cv(1.0, 0.3, -1.3), cv(0.2, 0.7, -0.9));
        let inv = find_critical_points(&ctx, &default_seeds(40), &SolverSettings::default()).unwrap();
        assert_eq!(inv.points.len(), 24);
        for p in &inv.points {
            assert!(p.in_m_prime && p.residual < 1e-10 && p.nullity == 0 && p.manifold_dim == 0);
        }
        let deg = PhaseContext::new(cv(1.0, 0.0, -1.0), CartanVector::zero());
        assert!(matches!(
            find_critical_points(&deg, &default_seeds(0), &SolverSettings::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn singular_inventory_has_families() {
        let ctx = PhaseContext::new(cv(1.0, 0.3, -1.3), cv(1.0, 1.0, -2.0));
        let inv = find_critical_points(&ctx, &default_seeds(40), &SolverSettings::default()).unwrap();
        assert!(inv.points.len() > 24);
        for p in &inv.points {
            assert_eq!(p.manifold_dim, 1);
            assert_eq!(p.nullity, 1);
            assert!(p.coset_distance < 1e-8);
            for d in tangent_defects(&ctx, p, 1e-3) {
                assert!(d < 1e-2 * ctx.scale(), "defect {d}");
            }
        }
    }

    #[test]
    fn lemma_checks() {
        let h = cv(1.0, 1.0, -2.0);
        let r = lemma42_check(&h, 200).unwrap();
        assert!(r.max_abs < 1e-12);
        assert!(r.min_generic_own_root > 1e-6);
        let r = lemma45_check(&h, 1001).unwrap();
        assert_eq!(r.zeros.len(), 4);
        assert!(r.max_mismatch < 1e-8, "{r:?}");
        assert!(r.min_away > 1e-3);
        assert!(matches!(lemma42_check(&cv(1.0, 0.2, -1.2), 10), Err(Error::RegularElement)));
        assert!(lemma45_check(&CartanVector::zero(), 100).is_err());
        // identity: B(H_1, X) = 0 for X in q
        let x = TracelessMatrix::new(unit(0, 2) + unit(2, 0)).unwrap();
        let ad = adjoint(&Rotation::identity(), &x);
        assert_eq!(killing_raw(&h.to_matrix(), ad.matrix()), 0.0);
    }
}
