//! The model oscillatory integral `I(t) = int exp(i sum t_j x_j^2 / 2) u(x) dx` on `[-L, L]^d`
//! and its van der Corput ratio.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::CompensatedSum;

/// The one-dimensional bump `psi(x) = exp(-1 / (1 - (x/L)^2))` and its first three derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub l: f64,
}

impl Default for Bump {
    fn default() -> Self {
        Self { l: 1.0 }
    }
}

impl Bump {
    /// `psi^{(order)}(x)` for `order <= 3`; zero outside `(-L, L)` and where `exp` underflows.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        let y = x / self.l;
        let s = 1.0 - y * y;
        if s <= 1.0 / 700.0 {
            return 0.0;
        }
        let psi = (-1.0 / s).exp();
        let g1 = -2.0 * y / (s * s);
        let g2 = -2.0 / (s * s) - 8.0 * y * y / (s * s * s);
        let g3 = -24.0 * y / s.powi(3) - 48.0 * y.powi(3) / s.powi(4);
        let d = match order {
            0 => 1.0,
            1 => g1,
            2 => g2 + g1 * g1,
            3 => g3 + 3.0 * g1 * g2 + g1.powi(3),
            _ => panic!("bump derivatives are implemented up to order 3"),
        };
        d * psi / self.l.powi(order as i32)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `sup |psi^{(k)}|` for `k = 0..=3`, sampled on a fine grid.
    pub fn derivative_sups(&self) -> [f64; 4] {
        const N: usize = 40_001;
        let mut sups = [0.0f64; 4];
        for n in 0..N {
            let x = self.l * (-1.0 + 2.0 * n as f64 / (N - 1) as f64);
            for (k, s) in sups.iter_mut().enumerate() {
                *s = s.max(self.derivative(x, k).abs());
            }
        }
        sups
    }
}

/// An amplitude on `[-L, L]^d`, `d` in `1..=3`.
#[derive(Clone)]
pub enum VdcAmplitude {
    /// `u(x) = prod_j psi(x_j)`.
    ProductBump { dim: usize, bump: Bump },
    /// Arbitrary amplitude with a caller-supplied `C^d` norm.
    General {
        dim: usize,
        l: f64,
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        c_norm: f64,
    },
}

impl std::fmt::Debug for VdcAmplitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ProductBump { dim, bump } => write!(f, "ProductBump {{ dim: {dim}, l: {} }}", bump.l),
            Self::General { dim, l, c_norm, .. } => {
                write!(f, "General {{ dim: {dim}, l: {l}, c_norm: {c_norm} }}")
            }
        }
    }
}

impl VdcAmplitude {
    pub fn product_bump(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::ProductBump { dim, bump: Bump::default() })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ProductBump { dim, .. } | Self::General { dim, .. } => *dim,
        }
    }

    pub fn half_width(&self) -> f64 {
        match self {
            Self::ProductBump { bump, .. } => bump.l,
            Self::General { l, .. } => *l,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::ProductBump { bump, .. } => x.iter().map(|v| bump.value(*v)).product(),
            Self::General { f, .. } => f(x),
        }
    }

    /// `max_{|beta| <= d} sup |d^beta u|`. For the product bump this is the max over multi-indices of
    /// the product of one-dimensional derivative sups, which is exact for separable functions.
    pub fn c_norm(&self) -> f64 {
        match self {
            Self::General { c_norm, .. } => *c_norm,
            Self::ProductBump { dim, bump } => {
                let sups = bump.derivative_sups();
                multi_indices(*dim, *dim)
                    .iter()
                    .map(|b| b.iter().map(|k| sups[*k]).product::<f64>())
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")))
    }
}

/// All `beta` in `N^dim` with `|beta| <= order`.
fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|b: Vec<usize>| {
                let used: usize = b.iter().sum();
                (0..=order - used).map(move |k| {
                    let mut c = b.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    out
}

/// Grid points per coordinate: resolves the local frequency `|t| L` with margin.
pub fn default_grid(t: f64, l: f64) -> usize {
    let n = (16.0 * l * (8.0 + t.abs() * l)).ceil() as usize;
    n.max(256)
}

/// Midpoint rule on `[-L, L]`: for integrands vanishing to all orders at the ends this is
/// the trapezoid rule and converges faster than any power once the oscillation is resolved.
fn midpoint_1d<F: Fn(f64) -> Complex64>(l: f64, n: usize, f: F) -> Complex64 {
    let h = 2.0 * l / n as f64;
    let mut acc = CompensatedSum::default();
    for j in 0..n {
        acc.add(f(-l + (j as f64 + 0.5) * h));
    }
    acc.value() * h
}

/// `int exp(i t x^2 / 2) psi(x) dx`.
pub fn bump_integral_1d(t: f64, bump: &Bump, n: usize) -> Complex64 {
    midpoint_1d(bump.l, n, |x| Complex64::from_polar(bump.value(x), 0.5 * t * x * x))
}

/// `I(t)` with `n` points per coordinate (`None` picks `default_grid` per coordinate).
///
/// The product bump factorizes, so its value is a product of one-dimensional sums; general
/// amplitudes use the full tensor grid.
pub fn vdc_model_integral(t: &[f64], u: &VdcAmplitude, n: Option<usize>) -> Result<Complex64> {
    let d = u.dim();
    check_dim(d)?;
    if t.len() != d {
        return Err(Error::InvalidArgument(format!(
            "expected {d} frequencies, got {}",
            t.len()
        )));
    }
    let l = u.half_width();
    match u {
        VdcAmplitude::ProductBump { bump, .. } => Ok(t
            .iter()
            .map(|&tj| bump_integral_1d(tj, bump, n.unwrap_or_else(|| default_grid(tj, l))))
            .product()),
        VdcAmplitude::General { f, .. } => {
            let tmax = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let n = n.unwrap_or_else(|| default_grid(tmax, l));
            Ok(tensor_integral(t, l, n, f.as_ref()))
        }
    }
}

fn tensor_integral(t: &[f64], l: f64, n: usize, f: &(dyn Fn(&[f64]) -> f64 + Send + Sync)) -> Complex64 {
    let d = t.len();
    let h = 2.0 * l / n as f64;
    let node = |j: usize| -l + (j as f64 + 0.5) * h;
    let partials = crate::exec::Exec::default().map(n, |j0| {
        let mut acc = CompensatedSum::default();
        let mut x = vec![0.0; d];
        x[0] = node(j0);
        let rest = n.pow(d as u32 - 1);
        for r in 0..rest {
            let mut q = r;
            for xi in x.iter_mut().skip(1) {
                *xi = node(q % n);
                q /= n;
            }
            let phase: f64 = t.iter().zip(&x).map(|(tj, xj)| 0.5 * tj * xj * xj).sum();
            acc.add(Complex64::from_polar(f(&x), phase));
        }
        acc.value()
    });
    crate::exec::compensated_sum(&partials) * h.powi(d as i32)
}

/// `|I(t)| prod_j (1 + |t_j|)^{1/2} / ||u||_{C^d}`.
pub fn vdc_bound_ratio(t: &[f64], u: &VdcAmplitude) -> Result<f64> {
    let i = vdc_model_integral(t, u, None)?;
    let growth: f64 = t.iter().map(|tj| (1.0 + tj.abs()).sqrt()).product();
    Ok(i.norm() * growth / u.c_norm())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VdcScan {
    pub dim: usize,
    pub t_max: f64,
    pub points: usize,
    pub c_norm: f64,
    /// `(tau, ratio)` along the diagonal `t = (tau, ..., tau)`.
    pub ratios: Vec<(f64, f64)>,
    pub sup_ratio: f64,
    pub argmax: f64,
}

/// Ratios along the diagonal `t = (tau, ..., tau)`, `tau` uniform in `[0, t_max]`.
pub fn vdc_diagonal_scan(u: &VdcAmplitude, t_max: f64, points: usize) -> Result<VdcScan> {
    if points < 2 || !(t_max > 0.0) {
        return Err(Error::InvalidArgument("need t_max > 0 and at least two points".into()));
    }
    let d = u.dim();
    let c_norm = u.c_norm();
    let ratios = crate::exec::Exec::default()
        .map(points, |j| {
            let tau = t_max * j as f64 / (points - 1) as f64;
            let t = vec![tau; d];
            vdc_model_integral(&t, u, None).map(|i| {
                (tau, i.norm() * (1.0 + tau).sqrt().powi(d as i32) / c_norm)
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (argmax, sup_ratio) = ratios
        .iter()
        .copied()
        .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    Ok(VdcScan {
        dim: d,
        t_max,
        points,
        c_norm,
        ratios,
        sup_ratio,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump::default();
        let h = 1e-5;
        for &x in &[-0.8, -0.3, 0.0, 0.2, 0.65, 0.9] {
            for k in 0..3 {
                let fd = (b.derivative(x + h, k) - b.derivative(x - h, k)) / (2.0 * h);
                let exact = b.derivative(x, k + 1);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "x={x} k={k}");
            }
        }
        assert_eq!(b.value(1.0), 0.0);
        assert_eq!(b.value(-1.5), 0.0);
        assert!((b.value(0.0) - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 1).len(), 2);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 3).len(), 20);
    }

    #[test]
    fn zero_frequency_gives_mass() {
        let u = VdcAmplitude::product_bump(1).unwrap();
        let i0 = vdc_model_integral(&[0.0], &u, Some(4000)).unwrap();
        let i1 = vdc_model_integral(&[0.0], &u, Some(8000)).unwrap();
        // int exp(-1/(1-x^2)) dx over (-1, 1)
        assert!((i0.re - 0.443_993_816_168_079_4).abs() < 1e-12);
        assert!(i0.im.abs() < 1e-16 && (i0 - i1).norm() < 1e-14);
    }

    #[test]
    fn refinement_stable_across_frequencies() {
        let b = Bump::default();
        for &t in &[0.0, 1.0, 37.5, 150.0, 400.0] {
            let n = default_grid(t, 1.0);
            let a = bump_integral_1d(t, &b, n);
            let r = bump_integral_1d(t, &b, 2 * n);
            assert!((a - r).norm() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn separable_matches_tensor() {
        let b = Bump::default();
        let general = VdcAmplitude::General {
            dim: 2,
            l: 1.0,
            f: Arc::new(move |x: &[f64]| b.value(x[0]) * b.value(x[1])),
            c_norm: 1.0,
        };
        let prod = VdcAmplitude::product_bump(2).unwrap();
        let t = [3.0, 11.0];
        let a = vdc_model_integral(&t, &general, Some(600)).unwrap();
        let p = vdc_model_integral(&t, &prod, Some(600)).unwrap();
        assert!((a - p).norm() < 1e-13);
        let one = VdcAmplitude::product_bump(1).unwrap();
        let f = vdc_model_integral(&[3.0], &one, Some(600)).unwrap() * vdc_model_integral(&[11.0], &one, Some(600)).unwrap();
        assert!((a - f).norm() < 1e-13);
        assert!(vdc_model_integral(&[1.0], &prod, None).is_err());
    }

    #[test]
    fn ratio_bounded_in_one_dimension() {
        let u = VdcAmplitude::product_bump(1).unwrap();
        let s = vdc_diagonal_scan(&u, 400.0, 161).unwrap();
        assert!(s.sup_ratio.is_finite() && s.sup_ratio > 0.0);
        // stationary phase: |I(t)| sqrt(t) -> psi(0) sqrt(2 pi)
        let tail = s.ratios.last().unwrap().1 * u.c_norm();
        let limit = (-1.0f64).exp() * std::f64::consts::TAU.sqrt();
        assert!((tail - limit).abs() < 0.02 * limit);
    }
}
