//! Spherical functions, the Iwasawa and linearized oscillatory integrals, and the
//! two decay bounds.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::group::{exp_so3_raw, halton_rotations, iwasawa_projection_raw, m_prime_elements, Rotation};
use crate::lie::{
    dual_covector, k_basis, omega, weyl_act, weyl_elements, CartanVector, SpectralParam,
    DEFAULT_REGULARITY_TOL, POSITIVE_ROOTS,
};
use crate::quadrature::{QuadratureRule, RuleSize};

/// Absolute change allowed between a rule and its 1.5x refinement.
pub const DEFAULT_GATE_TOL: f64 = 1e-8;

#[derive(Clone)]
enum AmplitudeKind {
    Constant(Complex64),
    /// `u_H(k) = exp(-rho(H(exp H . k)))`
    IwasawaDensity(CartanVector),
    Custom,
}

/// An amplitude `u: SO(3) -> C` with an optional declared `C^3` bound.
#[derive(Clone)]
pub struct Amplitude {
    kind: AmplitudeKind,
    eval: Arc<dyn Fn(&Rotation) -> Complex64 + Send + Sync>,
    declared_c3: Option<f64>,
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            AmplitudeKind::Constant(c) => format!("Constant({c})"),
            AmplitudeKind::IwasawaDensity(h) => format!("IwasawaDensity({:?})", h.components()),
            AmplitudeKind::Custom => "Custom".to_string(),
        };
        f.debug_struct("Amplitude")
            .field("kind", &kind)
            .field("declared_c3", &self.declared_c3)
            .finish()
    }
}

impl Amplitude {
    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            kind: AmplitudeKind::Constant(c),
            eval: Arc::new(move |_| c),
            declared_c3: None,
        }
    }

    /// The density `u_H(k) = e^{-rho(H(exp H . k))}` turning the Iwasawa integral into `phi_lambda`.
    pub fn iwasawa_density(h: CartanVector) -> Self {
        let d = h.components().map(f64::exp);
        Self {
            kind: AmplitudeKind::IwasawaDensity(h),
            eval: Arc::new(move |k| {
                let g = nalgebra::Matrix3::from_fn(|i, j| d[i] * k.matrix()[(i, j)]);
                let hk = iwasawa_projection_raw(&g);
                Complex64::new((-(hk[0] - hk[2])).exp(), 0.0)
            }),
            declared_c3: None,
        }
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&Rotation) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            kind: AmplitudeKind::Custom,
            eval: Arc::new(f),
            declared_c3: None,
        }
    }

    pub fn with_declared_c3(mut self, bound: f64) -> Self {
        self.declared_c3 = Some(bound);
        self
    }

    pub fn declared_c3(&self) -> Option<f64> {
        self.declared_c3
    }

    #[inline]
    pub fn eval(&self, k: &Rotation) -> Complex64 {
        (self.eval)(k)
    }

    /// Checks that a declared bound dominates the finite-difference estimate; returns the estimate.
    pub fn check_declared_c3(&self) -> Result<f64> {
        let est = c3_norm_estimate(self);
        match self.declared_c3 {
            Some(b) if b < est => Err(Error::InvalidArgument(format!(
                "declared C^3 bound {b} is below the estimate {est}"
            ))),
            _ => Ok(est),
        }
    }
}

/// Integrand `|e^{H} c1|^{2p} |e^{-H} c3|^{2q}` of `exp(mu(H(exp H . k)))`.
///
/// With `g = e^H k`, `H(g) = (ln a, ln b - ln a, -ln b)` where `a = |g e1|` and
/// `b = |g e1 x g e2| = |e^{-H} k e3|`, so `mu(H(g)) = (mu1 - mu2) ln a + (mu2 - mu3) ln b`.
struct IwasawaKernel {
    d2: [f64; 3],
    dinv2: [f64; 3],
    /// exponent on `ln a^2`
    p: Complex64,
    /// exponent on `ln b^2`
    q: Complex64,
}

impl IwasawaKernel {
    fn new(h: &CartanVector, mu: [Complex64; 3]) -> Self {
        let c = h.components();
        Self {
            d2: c.map(|v| (2.0 * v).exp()),
            dinv2: c.map(|v| (-2.0 * v).exp()),
            p: (mu[0] - mu[1]) * 0.5,
            q: (mu[1] - mu[2]) * 0.5,
        }
    }

    /// Quadrature of `exp(mu(H(exp H . k)))`. The integrand is invariant under
    /// `k -> m1 k m2` with `m1, m2` in `M`; in particular it is pi-periodic in both
    /// Z angles, so for even `n_ag` a quarter of the angle grid carries the full sum.
    fn integrate(&self, rule: &QuadratureRule, exec: Exec) -> Complex64 {
        let n = rule.size().n_ag;
        let (m, fold) = if n % 2 == 0 { (n / 2, 4.0) } else { (n, 1.0) };
        let d2 = self.d2;
        let di2 = self.dinv2;
        let (p, q) = (self.p, self.q);
        rule.reduce_slices(exec, |ib| {
            let cb = rule.cos_beta()[ib];
            let sb = rule.sin_beta()[ib];
            let mut outer = CompensatedSum::default();
            for ia in 0..m {
                let (ca, sa) = rule.angle(ia);
                // k e3 = (ca sb, sa sb, cb)
                let b2 = di2[0] * (ca * sb).powi(2) + di2[1] * (sa * sb).powi(2) + di2[2] * cb * cb;
                // k e1 = u cos(g) + v sin(g), u = (ca cb, sa cb, -sb), v = (-sa, ca, 0)
                let u = [ca * cb, sa * cb, -sb];
                let v = [-sa, ca, 0.0];
                let pp = d2[0] * u[0] * u[0] + d2[1] * u[1] * u[1] + d2[2] * u[2] * u[2];
                let qq = d2[0] * u[0] * v[0] + d2[1] * u[1] * v[1];
                let rr = d2[0] * v[0] * v[0] + d2[1] * v[1] * v[1];
                let mut inner = CompensatedSum::default();
                for ig in 0..m {
                    let (cg, sg) = rule.angle(ig);
                    let a2 = pp * cg * cg + 2.0 * qq * cg * sg + rr * sg * sg;
                    let la = a2.ln();
                    let (s, c) = (p.im * la).sin_cos();
                    let r = (p.re * la).exp();
                    inner.add(Complex64::new(r * c, r * s));
                }
                let lb = b2.ln();
                outer.add(inner.value() * (q * lb).exp());
            }
            outer.value() * (fold * rule.slice_weight(ib))
        })
    }
}

fn mu_from(lambda: &SpectralParam, with_rho: bool) -> [Complex64; 3] {
    let l = lambda.components();
    let rho = SpectralParam::rho().real_part();
    let i = Complex64::new(0.0, 1.0);
    [0, 1, 2].map(|k| i * l[k] - if with_rho { rho[k] } else { 0.0 })
}

/// `phi_lambda(exp H) = int_K exp((i lambda - rho)(H(exp H . k))) dk` by quadrature.
pub fn spherical_function(h: &CartanVector, lambda: &SpectralParam, rule: &QuadratureRule) -> Complex64 {
    spherical_function_with(h, lambda, rule, Exec::default())
}

pub fn spherical_function_with(
    h: &CartanVector,
    lambda: &SpectralParam,
    rule: &QuadratureRule,
    exec: Exec,
) -> Complex64 {
    IwasawaKernel::new(h, mu_from(lambda, true)).integrate(rule, exec)
}

/// `int_K exp(i lambda(H(exp H . k))) u(k) dk`.
pub fn iwasawa_oscillatory(
    h: &CartanVector,
    lambda: &SpectralParam,
    u: &Amplitude,
    rule: &QuadratureRule,
) -> Complex64 {
    match &u.kind {
        AmplitudeKind::Constant(c) => IwasawaKernel::new(h, mu_from(lambda, false)).integrate(rule, Exec::default()) * c,
        AmplitudeKind::IwasawaDensity(hu) if hu == h => spherical_function(h, lambda, rule),
        _ => {
            let d = h.components().map(f64::exp);
            let i = Complex64::new(0.0, 1.0);
            rule.integrate(|k| {
                let g = nalgebra::Matrix3::from_fn(|r, c| d[r] * k.matrix()[(r, c)]);
                let hk = iwasawa_projection_raw(&g);
                (i * lambda.eval(&hk)).exp() * u.eval(k)
            })
        }
    }
}

/// `f_{H,H'}(k) = B(H, Ad(k) H') = 6 sum_ij h_i h'_j k_ij^2`.
#[inline]
pub(crate) fn phase_function(h: &[f64; 3], hp: &[f64; 3], k: &Rotation) -> f64 {
    let m = k.matrix();
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += h[i] * hp[j] * m[(i, j)] * m[(i, j)];
        }
    }
    6.0 * s
}

/// `int_K exp(i B(H, Ad(k) H')) u(k) dk`.
pub fn phase_integral(h: &CartanVector, hp: &CartanVector, u: &Amplitude, rule: &QuadratureRule) -> Complex64 {
    let (a, b) = (h.components(), hp.components());
    if let AmplitudeKind::Constant(c) = u.kind {
        return phase_kernel(&a, &b, rule, Exec::default()) * c;
    }
    let i = Complex64::new(0.0, 1.0);
    rule.integrate(|k| (i * phase_function(&a, &b, k)).exp() * u.eval(k))
}

/// `int_K exp(i f_{H,H'}(k)) dk` on the product rule. With `k e1 = u cos g + v sin g`,
/// `k e2 = -u sin g + v cos g` and `k e3` independent of `g`, the phase is a quadratic form in
/// `(cos g, sin g)` per `(beta, alpha)`; like the Iwasawa integrand it is pi-periodic in both Z angles.
fn phase_kernel(h: &[f64; 3], hp: &[f64; 3], rule: &QuadratureRule, exec: Exec) -> Complex64 {
    let n = rule.size().n_ag;
    let (m, fold) = if n % 2 == 0 { (n / 2, 4.0) } else { (n, 1.0) };
    rule.reduce_slices(exec, |ib| {
        let cb = rule.cos_beta()[ib];
        let sb = rule.sin_beta()[ib];
        let mut outer = CompensatedSum::default();
        for ia in 0..m {
            let (ca, sa) = rule.angle(ia);
            let u = [ca * cb, sa * cb, -sb];
            let v = [-sa, ca, 0.0];
            let w = [ca * sb, sa * sb, cb];
            let p: f64 = (0..3).map(|i| h[i] * u[i] * u[i]).sum();
            let q: f64 = (0..3).map(|i| h[i] * u[i] * v[i]).sum();
            let r: f64 = (0..3).map(|i| h[i] * v[i] * v[i]).sum();
            let c3: f64 = (0..3).map(|i| h[i] * w[i] * w[i]).sum();
            // 6 [h'1 (p c^2 + 2q cs + r s^2) + h'2 (p s^2 - 2q cs + r c^2) + h'3 c3]
            let cc = 6.0 * (hp[0] * p + hp[1] * r);
            let ss = 6.0 * (hp[0] * r + hp[1] * p);
            let cs = 12.0 * q * (hp[0] - hp[1]);
            let k0 = 6.0 * hp[2] * c3;
            let mut inner = CompensatedSum::default();
            for ig in 0..m {
                let (cg, sg) = rule.angle(ig);
                let f = k0 + cc * cg * cg + cs * cg * sg + ss * sg * sg;
                let (s, c) = f.sin_cos();
                inner.add(Complex64::new(c, s));
            }
            outer.add(inner.value());
        }
        outer.value() * (fold * rule.slice_weight(ib))
    })
}

/// `sum_s Omega(s^{-1} H, lambda^vee)^{-1/2}`.
pub fn new_bound(h: &CartanVector, lambda: &SpectralParam) -> Result<f64> {
    let hp = dual_covector(lambda)?;
    Ok(new_bound_dual(h, &hp))
}

pub fn new_bound_dual(h: &CartanVector, hp: &CartanVector) -> f64 {
    weyl_elements()
        .iter()
        .map(|s| omega(&weyl_act(&s.inverse(), h), hp).powf(-0.5))
        .sum()
}

/// Comparison bound with `omega = {H}`: roots vanishing (within `tol`) on `s^{-1} H` are dropped.
pub fn old_bound(h: &CartanVector, lambda: &SpectralParam, tol: f64) -> Result<f64> {
    old_bound_set(std::slice::from_ref(h), lambda, tol)
}

/// Comparison bound for a finite set `omega`: only roots nonvanishing on all of `s^{-1} omega` count.
pub fn old_bound_set(omega_set: &[CartanVector], lambda: &SpectralParam, tol: f64) -> Result<f64> {
    if omega_set.is_empty() {
        return Err(Error::InvalidArgument("empty parameter set".into()));
    }
    let hp = dual_covector(lambda)?;
    Ok(weyl_elements()
        .iter()
        .map(|s| {
            let sinv = s.inverse();
            POSITIVE_ROOTS
                .iter()
                .filter(|a| omega_set.iter().all(|h| a.eval(&weyl_act(&sinv, h)).abs() > tol))
                .map(|a| (1.0 + a.eval(&hp).abs()).powf(-0.5))
                .product::<f64>()
        })
        .sum())
}

/// Finite-difference step for the `C^3` estimate.
const C3_STEP: f64 = 5e-3;

/// Sample points for the `C^3` estimate: the 24 elements of `M'` and 96 Halton rotations.
pub fn c3_sample_points() -> Vec<Rotation> {
    let mut pts = m_prime_elements();
    pts.extend(halton_rotations(96, 0));
    pts
}

fn left_derivative(u: &Amplitude, k: &nalgebra::Matrix3<f64>, idx: &[usize], basis: &[nalgebra::Matrix3<f64>; 3]) -> Complex64 {
    match idx.split_first() {
        None => u.eval(&Rotation::from_matrix_unchecked(*k)),
        Some((&i, rest)) => {
            let plus = k * exp_so3_raw(&(basis[i] * C3_STEP)).matrix();
            let minus = k * exp_so3_raw(&(basis[i] * -C3_STEP)).matrix();
            (left_derivative(u, &plus, rest, basis) - left_derivative(u, &minus, rest, basis)) / (2.0 * C3_STEP)
        }
    }
}

/// `max_{|beta| <= 3} sup_k |X_beta u(k)|` over ordered words in the orthonormal so(3) basis,
/// with left-invariant central differences on a fixed sample set.
pub fn c3_norm_estimate(u: &Amplitude) -> f64 {
    let basis = k_basis();
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut last = vec![vec![]];
    for _ in 0..3 {
        let next: Vec<Vec<usize>> = last
            .iter()
            .flat_map(|w: &Vec<usize>| {
                (0..3).map(move |i| {
                    let mut v = w.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
        words.extend(next.iter().cloned());
        last = next;
    }
    let pts = c3_sample_points();
    let per_point = Exec::default().map(pts.len(), |p| {
        words
            .iter()
            .map(|w| left_derivative(u, pts[p].matrix(), w, &basis).norm())
            .fold(0.0_f64, f64::max)
    });
    per_point.into_iter().fold(0.0_f64, f64::max)
}

/// How rule sizes are chosen for a `phi_lambda(exp H)` evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RuleSizing {
    Fixed { n_beta: usize, n_ag: usize },
    /// Sized from the phase spread `||lambda^vee|| ||H||` and the amplitude scale `||H||`.
    Auto,
}

impl Default for RuleSizing {
    fn default() -> Self {
        Self::Auto
    }
}

/// Rule size for `phi_lambda(exp H)` with `||lambda^vee|| = lam_norm`.
pub fn auto_rule_size(h: &CartanVector, lam_norm: f64) -> RuleSize {
    let hn = h.norm();
    let spread = lam_norm * hn;
    let even = |x: f64| {
        let n = x.ceil() as usize;
        n + (n % 2)
    };
    RuleSize {
        n_beta: even(16.0 + 14.0 * hn + 1.2 * spread),
        n_ag: even(16.0 + 18.0 * hn + 1.7 * spread),
    }
}

impl RuleSizing {
    pub fn size_for(&self, h: &CartanVector, lam_norm: f64) -> Result<RuleSize> {
        match *self {
            Self::Fixed { n_beta, n_ag } => RuleSize::new(n_beta, n_ag),
            Self::Auto => Ok(auto_rule_size(h, lam_norm)),
        }
    }
}

/// A quadrature value accepted or rejected by the refinement gate.
#[derive(Clone, Copy, Debug)]
pub struct GatedValue {
    pub value: Complex64,
    pub refined: Complex64,
    /// `|value - refined|`
    pub change: f64,
    pub converged: bool,
    pub size: RuleSize,
}

/// Evaluates `phi_lambda(exp H)` on `rule` and on its 1.5x refinement.
pub fn spherical_function_gated(
    h: &CartanVector,
    lambda: &SpectralParam,
    rule: &QuadratureRule,
    refined: &QuadratureRule,
    gate_tol: f64,
) -> GatedValue {
    let value = spherical_function(h, lambda, rule);
    let fine = spherical_function(h, lambda, refined);
    let change = (value - fine).norm();
    GatedValue {
        value,
        refined: fine,
        change,
        converged: change < gate_tol,
        size: rule.size(),
    }
}

/// Builds (and memoizes) rules by size.
#[derive(Default)]
pub struct RuleStore {
    rules: BTreeMap<(usize, usize), Arc<QuadratureRule>>,
}

impl RuleStore {
    pub fn get(&mut self, size: RuleSize) -> Result<Arc<QuadratureRule>> {
        if let Some(r) = self.rules.get(&(size.n_beta, size.n_ag)) {
            return Ok(r.clone());
        }
        let r = Arc::new(QuadratureRule::new(size)?);
        self.rules.insert((size.n_beta, size.n_ag), r.clone());
        Ok(r)
    }
}

/// Gated `phi_lambda(exp H)` with rule sizes from `sizing`.
pub fn spherical_function_checked(
    h: &CartanVector,
    lambda: &SpectralParam,
    sizing: RuleSizing,
    gate_tol: f64,
    store: &mut RuleStore,
) -> Result<GatedValue> {
    let lam_norm = lambda_norm(lambda);
    let size = sizing.size_for(h, lam_norm)?;
    let rule = store.get(size)?;
    let refined = store.get(size.refined())?;
    Ok(spherical_function_gated(h, lambda, &rule, &refined, gate_tol))
}

/// Gated `phi_lambda(exp H)` for many points, evaluated in parallel; results keep input order.
pub fn spherical_function_batch(
    points: &[(CartanVector, SpectralParam)],
    sizing: RuleSizing,
    gate_tol: f64,
) -> Result<Vec<GatedValue>> {
    let mut store = RuleStore::default();
    let mut rules = Vec::with_capacity(points.len());
    for (h, lambda) in points {
        let size = sizing.size_for(h, lambda_norm(lambda))?;
        rules.push((store.get(size)?, store.get(size.refined())?));
    }
    Ok(Exec::default().map(points.len(), |i| {
        let (h, lambda) = &points[i];
        spherical_function_gated(h, lambda, &rules[i].0, &rules[i].1, gate_tol)
    }))
}

/// Euclidean norm of the real coefficient vector of `lambda` (`= 6 |lambda^vee|`).
pub fn lambda_norm(lambda: &SpectralParam) -> f64 {
    lambda.real_part().iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    New,
    Old,
}

/// A ray `lambda^vee = (t / 6) * direction` sampled at the given magnitudes, so that
/// `t` is the Euclidean length of the coefficient vector of `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRay {
    /// Euclidean unit vector in the Cartan subalgebra.
    pub direction: CartanVector,
    pub magnitudes: Vec<f64>,
}

impl LambdaRay {
    pub fn new(direction: CartanVector, magnitudes: Vec<f64>) -> Result<Self> {
        let c = direction.components();
        let len = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidArgument("zero ray direction".into()));
        }
        let direction = direction.scale(1.0 / len);
        if magnitudes.is_empty() || magnitudes.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument("ray magnitudes must be finite and >= 0".into()));
        }
        Ok(Self { direction, magnitudes })
    }

    pub fn lambda_at(&self, t: f64) -> SpectralParam {
        SpectralParam::real(self.direction.scale(t).components())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanPoint {
    pub h_index: usize,
    pub ray_index: usize,
    pub t: f64,
    pub h: [f64; 3],
    /// Coefficients of `lambda`, i.e. `6 lambda^vee`.
    pub l: [f64; 3],
    pub re_phi: f64,
    pub im_phi: f64,
    pub abs_phi: f64,
    pub new_bound: f64,
    pub old_bound: f64,
    pub ratio: f64,
    pub converged: bool,
    pub gate_change: f64,
    pub n_beta: usize,
    pub n_ag: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub h_index: usize,
    pub ray_index: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub slope_phi: f64,
    pub slope_new: f64,
    pub slope_old: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSettings {
    pub sizing: RuleSizing,
    pub gate_tol: f64,
    pub regularity_tol: f64,
    pub which: BoundKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub settings: ScanSettings,
    pub h_grid: Vec<CartanVector>,
    pub rays: Vec<LambdaRay>,
    pub points: Vec<ScanPoint>,
    /// Max ratio over converged points.
    pub empirical_constant: f64,
    pub unconverged: usize,
    pub slope_fits: Vec<SlopeFit>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl BoundReport {
    pub fn empirical_constant_up_to(&self, t_max: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.converged && p.t <= t_max)
            .map(|p| p.ratio)
            .fold(0.0, f64::max)
    }

    pub fn all_converged(&self) -> bool {
        self.unconverged == 0
    }

    pub fn ray_points(&self, h_index: usize, ray_index: usize) -> impl Iterator<Item = &ScanPoint> {
        self.points
            .iter()
            .filter(move |p| p.h_index == h_index && p.ray_index == ray_index)
    }

    /// Log-log slopes of `|phi|`, new and old bound over `t in [t_min, t_max]`.
    pub fn fit_slopes(&self, t_min: f64, t_max: f64) -> Vec<SlopeFit> {
        let mut out = Vec::new();
        for hi in 0..self.h_grid.len() {
            for ri in 0..self.rays.len() {
                let pts: Vec<&ScanPoint> = self
                    .ray_points(hi, ri)
                    .filter(|p| p.t >= t_min && p.t <= t_max && p.t > 0.0)
                    .collect();
                let ts: Vec<f64> = pts.iter().map(|p| p.t).collect();
                let fit = |f: &dyn Fn(&ScanPoint) -> f64| {
                    let ys: Vec<f64> = pts.iter().map(|p| f(p)).collect();
                    loglog_slope(&ts, &ys).unwrap_or(f64::NAN)
                };
                if pts.len() >= 2 {
                    out.push(SlopeFit {
                        h_index: hi,
                        ray_index: ri,
                        t_min,
                        t_max,
                        points: pts.len(),
                        slope_phi: fit(&|p| p.abs_phi),
                        slope_new: fit(&|p| p.new_bound),
                        slope_old: fit(&|p| p.old_bound),
                    });
                }
            }
        }
        out
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "h1", "h2", "h3", "l1", "l2", "l3", "re_phi", "im_phi", "new_bound", "old_bound", "ratio",
        "converged",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(Self::CSV_HEADER)?;
        for p in &self.points {
            let mut rec: Vec<String> = Vec::with_capacity(12);
            rec.extend(p.h.iter().map(|v| v.to_string()));
            rec.extend(p.l.iter().map(|v| v.to_string()));
            for v in [p.re_phi, p.im_phi, p.new_bound, p.old_bound, p.ratio] {
                rec.push(v.to_string());
            }
            rec.push(p.converged.to_string());
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

/// Evaluates `|phi_lambda(exp H)|` against both bounds on `H_grid x rays`.
///
/// Points are evaluated in parallel; the report lists them in (H, ray, t) order.
pub fn bound_scan(
    h_grid: &[CartanVector],
    rays: &[LambdaRay],
    settings: &ScanSettings,
) -> Result<BoundReport> {
    if h_grid.is_empty() || rays.is_empty() {
        return Err(Error::InvalidArgument("scan grids must be nonempty".into()));
    }
    let mut jobs = Vec::new();
    let mut store = RuleStore::default();
    for (hi, h) in h_grid.iter().enumerate() {
        for (ri, ray) in rays.iter().enumerate() {
            for &t in &ray.magnitudes {
                let size = settings.sizing.size_for(h, t)?;
                let rule = store.get(size)?;
                let refined = store.get(size.refined())?;
                jobs.push((hi, ri, t, rule, refined));
            }
        }
    }
    let points: Vec<Result<ScanPoint>> = Exec::default().map(jobs.len(), |j| {
        let (hi, ri, t, rule, refined) = &jobs[j];
        let h = &h_grid[*hi];
        let lambda = rays[*ri].lambda_at(*t);
        let gated = spherical_function_gated(h, &lambda, rule, refined, settings.gate_tol);
        let nb = new_bound(h, &lambda)?;
        let ob = old_bound(h, &lambda, settings.regularity_tol)?;
        let denom = match settings.which {
            BoundKind::New => nb,
            BoundKind::Old => ob,
        };
        let abs_phi = gated.value.norm();
        Ok(ScanPoint {
            h_index: *hi,
            ray_index: *ri,
            t: *t,
            h: h.components(),
            l: lambda.real_part(),
            re_phi: gated.value.re,
            im_phi: gated.value.im,
            abs_phi,
            new_bound: nb,
            old_bound: ob,
            ratio: abs_phi / denom,
            converged: gated.converged,
            gate_change: gated.change,
            n_beta: gated.size.n_beta,
            n_ag: gated.size.n_ag,
        })
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let unconverged = points.iter().filter(|p| !p.converged).count();
    let empirical_constant = points
        .iter()
        .filter(|p| p.converged)
        .map(|p| p.ratio)
        .fold(0.0, f64::max);
    let mut report = BoundReport {
        settings: settings.clone(),
        h_grid: h_grid.to_vec(),
        rays: rays.to_vec(),
        points,
        empirical_constant,
        unconverged,
        slope_fits: Vec::new(),
    };
    report.slope_fits = report.fit_slopes(1.0, f64::INFINITY);
    Ok(report)
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            sizing: RuleSizing::Auto,
            gate_tol: DEFAULT_GATE_TOL,
            regularity_tol: DEFAULT_REGULARITY_TOL,
            which: BoundKind::New,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::haar_product_rule;

    fn h(a: f64, b: f64, c: f64) -> CartanVector {
        CartanVector::project([a, b, c])
    }

    #[test]
    fn phi_at_identity_is_one() {
        let rule = haar_product_rule(8, 8).unwrap();
        let lam = SpectralParam::real([3.0, -1.0, -2.0]);
        let v = spherical_function(&CartanVector::zero(), &lam, &rule);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn fast_kernel_matches_generic_integrand() {
        let rule = haar_product_rule(20, 24).unwrap();
        let hh = h(0.5, 0.1, -0.6);
        let lam = SpectralParam::real([2.0, 0.5, -2.5]);
        let fast = spherical_function(&hh, &lam, &rule);
        // same rule, generic path with a custom amplitude equal to u_H
        let d = Amplitude::iwasawa_density(hh);
        let u = Amplitude::from_fn(move |k| d.eval(k));
        let generic = iwasawa_oscillatory(&hh, &lam, &u, &rule);
        assert!((fast - generic).norm() < 1e-13, "{fast} vs {generic}");
        // odd angle grid takes the unfolded path
        let odd = haar_product_rule(20, 25).unwrap();
        let a = spherical_function(&hh, &lam, &odd);
        let b = iwasawa_oscillatory(&hh, &lam, &u, &odd);
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn conjugate_symmetry() {
        let rule = haar_product_rule(24, 24).unwrap();
        let hh = h(0.3, 0.2, -0.5);
        let lam = SpectralParam::real([1.5, 0.5, -2.0]);
        let a = spherical_function(&hh, &lam, &rule);
        let b = spherical_function(&hh, &lam.neg(), &rule);
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn iwasawa_oscillatory_cases() {
        let rule = haar_product_rule(16, 16).unwrap();
        let lam = SpectralParam::real([1.0, 2.0, -3.0]);
        let v = iwasawa_oscillatory(&CartanVector::zero(), &lam, &Amplitude::one(), &rule);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let u = Amplitude::from_fn(|k| Complex64::new(k.matrix()[(0, 0)].powi(2), 0.0));
        let v = iwasawa_oscillatory(&h(0.4, 0.0, -0.4), &SpectralParam::zero(), &u, &rule);
        assert!((v.re - 1.0 / 3.0).abs() < 1e-12 && v.im.abs() < 1e-15);

        // constant-amplitude fast path agrees with the generic route
        let hh = h(0.2, 0.3, -0.5);
        let c = Complex64::new(0.5, -0.25);
        let fast = iwasawa_oscillatory(&hh, &lam, &Amplitude::constant(c), &rule);
        let slow = iwasawa_oscillatory(&hh, &lam, &Amplitude::from_fn(move |_| c), &rule);
        assert!((fast - slow).norm() < 1e-13);
    }

    #[test]
    fn phase_integral_cases() {
        let rule = haar_product_rule(24, 24).unwrap();
        let hh = h(1.0, 0.0, -1.0).scale(0.5);
        let v = phase_integral(&hh, &CartanVector::zero(), &Amplitude::one(), &rule);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let a = h(0.4, 0.1, -0.5);
        let b = h(-0.2, 0.5, -0.3);
        let ab = phase_integral(&a, &b, &Amplitude::one(), &rule);
        let ba = phase_integral(&b, &a, &Amplitude::one(), &rule);
        assert!((ab - ba).norm() < 1e-12);
    }

    #[test]
    fn phase_kernel_matches_generic() {
        let a = h(0.4, 0.1, -0.5);
        let b = h(-0.2, 0.5, -0.3);
        for nag in [24, 25] {
            let rule = haar_product_rule(20, nag).unwrap();
            let fast = phase_integral(&a, &b, &Amplitude::one(), &rule);
            let generic = phase_integral(&a, &b, &Amplitude::from_fn(|_| Complex64::new(1.0, 0.0)), &rule);
            assert!((fast - generic).norm() < 1e-13, "{fast} vs {generic}");
        }
    }

    #[test]
    fn bound_examples() {
        let hh = h(0.3, -0.1, -0.2);
        let lam = SpectralParam::real([2.0, 1.0, -3.0]);
        assert!((new_bound(&CartanVector::zero(), &lam).unwrap() - 6.0).abs() < 1e-15);
        assert!((new_bound(&hh, &SpectralParam::zero()).unwrap() - 6.0).abs() < 1e-15);
        assert!((old_bound(&CartanVector::zero(), &lam, 1e-9).unwrap() - 6.0).abs() < 1e-15);
        let nb = new_bound(&hh, &lam).unwrap();
        assert!(nb > 0.0 && nb < 6.0);

        // regular H: every s keeps all three factors
        let hp = dual_covector(&lam).unwrap();
        let expect: f64 = 6.0 * POSITIVE_ROOTS
            .iter()
            .map(|a| (1.0 + a.eval(&hp).abs()).powf(-0.5))
            .product::<f64>();
        assert!((old_bound(&hh, &lam, 1e-9).unwrap() - expect).abs() < 1e-14);

        assert!(new_bound(
            &hh,
            &SpectralParam::new([
                Complex64::new(1.0, 1.0),
                Complex64::new(-1.0, -1.0),
                Complex64::new(0.0, 0.0)
            ])
            .unwrap()
        )
        .is_err());
    }

    #[test]
    fn new_bound_asymptotic_rate() {
        // regular H and lambda: every Omega factor grows linearly in t, so the sum decays like t^{-3/2}
        let hh = h(1.0, 0.2, -1.2).normalized().unwrap();
        let dir = h(0.9, -0.1, -0.8).normalized().unwrap();
        let ts: Vec<f64> = (0..20).map(|i| 1e4 * 1.3f64.powi(i)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| new_bound_dual(&hh, &dir.scale(*t))).collect();
        let slope = loglog_slope(&ts, &ys).unwrap();
        assert!((slope + 1.5).abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn c3_estimates() {
        let c = Complex64::new(0.6, -0.8);
        let est = c3_norm_estimate(&Amplitude::constant(c));
        assert!((est - 1.0).abs() < 1e-12);

        let u = Amplitude::from_fn(|k| Complex64::new(k.matrix()[(0, 1)], 0.0));
        let est = c3_norm_estimate(&u);
        let sup = c3_sample_points()
            .iter()
            .map(|k| u.eval(k).norm())
            .fold(0.0, f64::max);
        assert!(est >= sup);

        // bounded over a grid of ||H|| <= 1
        let mut worst: f64 = 0.0;
        for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.0, 1.0), (-0.7, 0.3)] {
            let hh = h(a, b, -a - b);
            let hh = match hh.normalized() {
                Some(n) => n.scale(hh.norm().min(1.0)),
                None => hh,
            };
            let e = c3_norm_estimate(&Amplitude::iwasawa_density(hh));
            assert!(e.is_finite());
            worst = worst.max(e);
        }
        assert!(worst < 50.0, "C3 estimate {worst}");

        let declared = Amplitude::iwasawa_density(h(0.2, 0.0, -0.2)).with_declared_c3(1e-3);
        assert!(declared.check_declared_c3().is_err());
        let declared = Amplitude::iwasawa_density(h(0.2, 0.0, -0.2)).with_declared_c3(100.0);
        assert!(declared.check_declared_c3().is_ok());
    }

    #[test]
    fn scan_single_point() {
        let ray = LambdaRay::new(h(1.0, 0.0, -1.0), vec![0.0]).unwrap();
        let rep = bound_scan(&[CartanVector::zero()], &[ray], &ScanSettings::default()).unwrap();
        assert_eq!(rep.points.len(), 1);
        assert!((rep.points[0].ratio - 1.0 / 6.0).abs() < 1e-14);
        assert!(rep.all_converged());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h1,h2,h3,l1,l2,l3,re_phi,im_phi,new_bound,old_bound,ratio,converged\n"));
        assert!(bound_scan(&[], &[], &ScanSettings::default()).is_err());
    }

    #[test]
    fn loglog_slope_exact() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.25)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.25).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }
}
