//! Product quadrature for normalized Haar measure on SO(3).
//!
//! Nodes are ZYZ Euler angles `R_z(a) R_y(b) R_z(c)`: Gauss-Legendre in `cos b`
//! and uniform periodic grids in `a` and `c`. The Haar density in these
//! coordinates is `sin b da db dc / (8 pi^2)`.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{compensated_sum, CompensatedSum, Exec};
use crate::group::Rotation;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence: p1 = P_n(z), p0 = P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Grid sizes of a product rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleSize {
    pub n_beta: usize,
    pub n_ag: usize,
}

impl RuleSize {
    pub fn new(n_beta: usize, n_ag: usize) -> Result<Self> {
        if n_beta < 2 || n_ag < 2 {
            return Err(Error::InvalidArgument(format!(
                "rule sizes must be >= 2 (got n_beta = {n_beta}, n_ag = {n_ag})"
            )));
        }
        Ok(Self { n_beta, n_ag })
    }

    /// Both sizes scaled by 1.5 and rounded up to even.
    pub fn refined(&self) -> Self {
        let up = |n: usize| {
            let m = (3 * n).div_ceil(2);
            m + (m % 2)
        };
        Self {
            n_beta: up(self.n_beta),
            n_ag: up(self.n_ag),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_beta * self.n_ag * self.n_ag
    }
}

/// Finite node/weight list over SO(3) approximating normalized Haar measure.
///
/// Stored in factored form; individual nodes are materialized on demand.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    size: RuleSize,
    cos_beta: Vec<f64>,
    sin_beta: Vec<f64>,
    beta_weights: Vec<f64>,
    angle_cos: Vec<f64>,
    angle_sin: Vec<f64>,
}

/// One quadrature node.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub rotation: Rotation,
    pub weight: f64,
}

pub fn haar_product_rule(n_beta: usize, n_ag: usize) -> Result<QuadratureRule> {
    QuadratureRule::new(RuleSize::new(n_beta, n_ag)?)
}

impl QuadratureRule {
    pub fn new(size: RuleSize) -> Result<Self> {
        let size = RuleSize::new(size.n_beta, size.n_ag)?;
        let (cos_beta, w) = gauss_legendre(size.n_beta);
        Ok(Self::from_parts(size, cos_beta, w))
    }

    fn from_parts(size: RuleSize, cos_beta: Vec<f64>, beta_weights: Vec<f64>) -> Self {
        let sin_beta = cos_beta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let (angle_sin, angle_cos) = (0..size.n_ag)
            .map(|j| (TAU * j as f64 / size.n_ag as f64).sin_cos())
            .unzip();
        Self {
            size,
            cos_beta,
            sin_beta,
            beta_weights,
            angle_cos,
            angle_sin,
        }
    }

    pub fn size(&self) -> RuleSize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(self.size.refined())
    }

    pub(crate) fn cos_beta(&self) -> &[f64] {
        &self.cos_beta
    }

    pub(crate) fn sin_beta(&self) -> &[f64] {
        &self.sin_beta
    }

    /// Weight of every node in the `beta` slice `ib` (uniform across the angle grids).
    pub(crate) fn slice_weight(&self, ib: usize) -> f64 {
        let n = self.size.n_ag as f64;
        0.5 * self.beta_weights[ib] / (n * n)
    }

    pub(crate) fn angle(&self, j: usize) -> (f64, f64) {
        (self.angle_cos[j], self.angle_sin[j])
    }

    pub fn node(&self, ib: usize, ia: usize, ig: usize) -> Node {
        let (ca, sa) = self.angle(ia);
        let (cg, sg) = self.angle(ig);
        let (cb, sb) = (self.cos_beta[ib], self.sin_beta[ib]);
        let rz_a = Matrix3::new(ca, -sa, 0.0, sa, ca, 0.0, 0.0, 0.0, 1.0);
        let ry_b = Matrix3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
        let rz_g = Matrix3::new(cg, -sg, 0.0, sg, cg, 0.0, 0.0, 0.0, 1.0);
        Node {
            rotation: Rotation::from_matrix_unchecked(rz_a * ry_b * rz_g),
            weight: self.slice_weight(ib),
        }
    }

    /// All nodes in (beta, alpha, gamma) lexicographic order.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let n = self.size.n_ag;
        (0..self.size.n_beta)
            .flat_map(move |ib| (0..n).flat_map(move |ia| (0..n).map(move |ig| (ib, ia, ig))))
            .map(|(ib, ia, ig)| self.node(ib, ia, ig))
    }

    pub fn weight_sum(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for ib in 0..self.size.n_beta {
            let w = self.slice_weight(ib);
            for _ in 0..self.size.n_ag * self.size.n_ag {
                acc.add(Complex64::new(w, 0.0));
            }
        }
        acc.value().re
    }

    /// Reduces per-`beta`-slice partial sums in slice order.
    pub(crate) fn reduce_slices<F>(&self, exec: Exec, slice: F) -> Complex64
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        let partials = exec.map(self.size.n_beta, slice);
        compensated_sum(&partials)
    }

    /// `sum_i w_i f(node_i)` with the default execution policy.
    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(&Rotation) -> Complex64 + Sync + Send,
    {
        self.integrate_with(Exec::default(), f)
    }

    pub fn integrate_with<F>(&self, exec: Exec, f: F) -> Complex64
    where
        F: Fn(&Rotation) -> Complex64 + Sync + Send,
    {
        let n = self.size.n_ag;
        self.reduce_slices(exec, |ib| {
            let mut acc = CompensatedSum::default();
            for ia in 0..n {
                for ig in 0..n {
                    acc.add(f(&self.node(ib, ia, ig).rotation));
                }
            }
            acc.value() * self.slice_weight(ib)
        })
    }

    /// Fallible variant; the first failure in node order is returned.
    pub fn try_integrate<F, E>(&self, f: F) -> std::result::Result<Complex64, E>
    where
        F: Fn(&Rotation) -> std::result::Result<Complex64, E> + Sync + Send,
        E: Send,
    {
        let n = self.size.n_ag;
        let partials: Vec<std::result::Result<Complex64, E>> =
            Exec::default().map(self.size.n_beta, |ib| {
                let mut acc = CompensatedSum::default();
                for ia in 0..n {
                    for ig in 0..n {
                        acc.add(f(&self.node(ib, ia, ig).rotation)?);
                    }
                }
                Ok(acc.value() * self.slice_weight(ib))
            });
        let partials = partials.into_iter().collect::<std::result::Result<Vec<_>, E>>()?;
        Ok(compensated_sum(&partials))
    }

    pub fn to_file(&self) -> RuleFile {
        RuleFile {
            format: RULE_FORMAT.to_string(),
            version: RULE_VERSION,
            n_beta: self.size.n_beta,
            n_ag: self.size.n_ag,
            cos_beta: self.cos_beta.clone(),
            beta_weights: self.beta_weights.clone(),
        }
    }

    pub fn from_file(file: RuleFile) -> Result<Self> {
        if file.format != RULE_FORMAT || file.version != RULE_VERSION {
            return Err(Error::RuleCache(format!(
                "unsupported format {} v{}",
                file.format, file.version
            )));
        }
        let size = RuleSize::new(file.n_beta, file.n_ag)?;
        if file.cos_beta.len() != size.n_beta || file.beta_weights.len() != size.n_beta {
            return Err(Error::RuleCache("node table length mismatch".into()));
        }
        if file.beta_weights.iter().any(|w| *w <= 0.0) {
            return Err(Error::RuleCache("non-positive weight".into()));
        }
        Ok(Self::from_parts(size, file.cos_beta, file.beta_weights))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(&self.to_file())?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_file(file)
    }
}

pub const RULE_FORMAT: &str = "sl3-haar-product";
pub const RULE_VERSION: u32 = 1;

/// Serialized form of a product rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub format: String,
    pub version: u32,
    pub n_beta: usize,
    pub n_ag: usize,
    pub cos_beta: Vec<f64>,
    pub beta_weights: Vec<f64>,
}

/// On-disk rule cache keyed by `(n_beta, n_ag)`.
#[derive(Clone, Debug)]
pub struct RuleCache {
    dir: PathBuf,
}

impl RuleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, size: RuleSize) -> PathBuf {
        self.dir
            .join(format!("haar_v{RULE_VERSION}_{}_{}.json", size.n_beta, size.n_ag))
    }

    pub fn get_or_build(&self, size: RuleSize) -> Result<QuadratureRule> {
        let path = self.path_for(size);
        if path.exists() {
            let rule = QuadratureRule::load_json(&path)?;
            if rule.size() != size {
                return Err(Error::RuleCache(format!("{} holds a different rule", path.display())));
            }
            return Ok(rule);
        }
        let rule = QuadratureRule::new(size)?;
        fs::create_dir_all(&self.dir)?;
        rule.save_json(&path)?;
        Ok(rule)
    }
}

/// `sum_i w_i f(k_i)` over an explicit node list, compensated, in list order.
pub fn integrate_nodes<F>(nodes: &[Node], f: F) -> Complex64
where
    F: Fn(&Rotation) -> Complex64,
{
    let mut acc = CompensatedSum::default();
    for n in nodes {
        acc.add(f(&n.rotation) * n.weight);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::random_rotation;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 3, 7, 16, 64, 255] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}");
            for deg in 0..(2 * n).min(40) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n = {n}, deg = {deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn weights_normalized() {
        for (nb, na) in [(2, 2), (5, 6), (16, 16), (33, 40)] {
            let rule = haar_product_rule(nb, na).unwrap();
            assert!((rule.weight_sum() - 1.0).abs() < 1e-13);
            assert!(rule.nodes().all(|n| n.weight > 0.0));
        }
        assert!(haar_product_rule(1, 4).is_err());
    }

    #[test]
    fn constant_integrates_to_one() {
        let rule = haar_product_rule(6, 8).unwrap();
        let v = rule.integrate(|_| Complex64::new(1.0, 0.0));
        assert!((v.re - 1.0).abs() < 1e-14 && v.im == 0.0);
    }

    /// Schur orthogonality: `int k_ij k_lm dk = delta_il delta_jm / 3`, first moments vanish.
    #[test]
    fn degree_two_matrix_coefficients_exact() {
        let rule = haar_product_rule(16, 16).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let m1 = rule.integrate(|k| Complex64::new(k.matrix()[(i, j)], 0.0));
                assert!(m1.norm() < 1e-12);
                for l in 0..3 {
                    for m in 0..3 {
                        let v = rule.integrate(|k| {
                            Complex64::new(k.matrix()[(i, j)] * k.matrix()[(l, m)], 0.0)
                        });
                        let exact = if i == l && j == m { 1.0 / 3.0 } else { 0.0 };
                        assert!((v.re - exact).abs() < 1e-12, "({i}{j})({l}{m}) {}", v.re);
                    }
                }
            }
        }
    }

    #[test]
    fn monte_carlo_oracle_agrees() {
        let rule = haar_product_rule(16, 16).unwrap();
        let f = |k: &Rotation| k.matrix()[(0, 0)] * k.matrix()[(1, 1)] + k.matrix()[(0, 0)].powi(2);
        let q = rule.integrate(|k| Complex64::new(f(k), 0.0)).re;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = f(&random_rotation(&mut rng));
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let sigma = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((q - mean).abs() < 3.0 * sigma, "rule {q}, mc {mean} +- {sigma}");
        // k11 k22 integrates to 0 and k11^2 to 1/3
        assert!((q - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn linearity_and_permutation_invariance() {
        let rule = haar_product_rule(8, 10).unwrap();
        let f = |k: &Rotation| Complex64::new(k.matrix()[(0, 1)].exp(), k.matrix()[(2, 2)]);
        let g = |k: &Rotation| Complex64::new(k.matrix()[(1, 2)].cos(), 0.0);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let lhs = rule.integrate(|k| a * f(k) + b * g(k));
        let rhs = a * rule.integrate(f) + b * rule.integrate(g);
        assert!((lhs - rhs).norm() < 1e-14);

        let mut nodes: Vec<Node> = rule.nodes().collect();
        let ordered = integrate_nodes(&nodes, f);
        assert!((ordered - rule.integrate(f)).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        nodes.shuffle(&mut rng);
        assert!((integrate_nodes(&nodes, f) - ordered).norm() < 1e-13);
    }

    #[test]
    fn sequential_and_parallel_bit_identical() {
        let rule = haar_product_rule(12, 14).unwrap();
        let f = |k: &Rotation| Complex64::new(0.0, k.matrix()[(0, 2)] * 3.0).exp();
        let a = rule.integrate_with(Exec::Sequential, f);
        let b = rule.integrate_with(Exec::Parallel, f);
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn refinement_sizes() {
        let s = RuleSize::new(10, 16).unwrap().refined();
        assert_eq!((s.n_beta, s.n_ag), (16, 24));
        let s = RuleSize::new(7, 9).unwrap().refined();
        assert_eq!((s.n_beta, s.n_ag), (12, 14));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = RuleCache::new(dir.path());
        let size = RuleSize::new(9, 6).unwrap();
        let built = cache.get_or_build(size).unwrap();
        assert!(cache.path_for(size).exists());
        let loaded = cache.get_or_build(size).unwrap();
        assert_eq!(built.to_file(), loaded.to_file());

        let mut bad = built.to_file();
        bad.version = 99;
        assert!(QuadratureRule::from_file(bad).is_err());
        let mut bad = built.to_file();
        bad.cos_beta.pop();
        assert!(QuadratureRule::from_file(bad).is_err());
    }
}
