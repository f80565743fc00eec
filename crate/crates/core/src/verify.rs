//! The acceptance checks. Each returns a [`CriterionOutcome`]; none of them panics on a
//! failed check, so a driver can report every criterion.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duistermaat::{duistermaat_solve, pushforward_identity_check, symmetric_from, DuistermaatSettings};
use crate::group::{m_prime_elements, random_rotation, Rotation};
use crate::lie::{norm, singular_roots, weyl_elements, CartanVector, SpectralParam, DEFAULT_REGULARITY_TOL};
use crate::phase::{
    default_seeds, find_critical_points, lemma42_check, lemma45_check, phase_hessian, phase_hessian_fd,
    predicted_hessian_diagonal, tangent_defects, PhaseContext, SolverSettings,
};
use crate::spherical::{
    bound_scan, old_bound_set, spherical_function_batch, BoundKind, BoundReport, GatedValue,
    LambdaRay, RuleSizing, ScanSettings, DEFAULT_GATE_TOL,
};
use crate::vdc::{vdc_diagonal_scan, VdcAmplitude};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub gate_tol: f64,
    pub sizing: RuleSizing,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 20240611,
            gate_tol: DEFAULT_GATE_TOL,
            sizing: RuleSizing::Auto,
        }
    }
}

/// Refinement-gate bookkeeping for the spherical-function values a criterion reports.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct GateStats {
    pub evaluated: usize,
    pub failed: usize,
    pub max_change: f64,
}

impl GateStats {
    fn record<'a>(&mut self, values: impl IntoIterator<Item = &'a GatedValue>) {
        for v in values {
            self.evaluated += 1;
            if !v.converged {
                self.failed += 1;
            }
            self.max_change = self.max_change.max(v.change);
        }
    }

    fn record_report(&mut self, rep: &BoundReport) {
        for p in &rep.points {
            self.evaluated += 1;
            if !p.converged {
                self.failed += 1;
            }
            self.max_change = self.max_change.max(p.gate_change);
        }
    }

    fn merge(&mut self, other: &GateStats) {
        self.evaluated += other.evaluated;
        self.failed += other.failed;
        self.max_change = self.max_change.max(other.max_change);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub gate: Option<GateStats>,
}

impl CriterionOutcome {
    fn new(id: u8, name: &str) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed: true,
            detail: String::new(),
            metrics: BTreeMap::new(),
            gate: None,
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    /// Records `ok` and appends `what` to the detail when it fails.
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what.into());
        }
    }

    fn fail_with(mut self, err: crate::error::Error) -> Self {
        self.require(false, format!("error: {err}"));
        self
    }

    /// `[PASS] 3 name (detail)` line.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let mut m: Vec<String> = self.metrics.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        if !self.detail.is_empty() {
            m.push(self.detail.clone());
        }
        format!("[{tag}] {:>2} {}: {}", self.id, self.name, m.join(", "))
    }
}

fn unit_cartan(c: [f64; 3]) -> CartanVector {
    CartanVector::project(c).normalized().expect("nonzero direction")
}

fn cv(c: [f64; 3], killing_norm: f64) -> CartanVector {
    unit_cartan(c).scale(killing_norm)
}

fn gate_fail_note(o: &mut CriterionOutcome, g: &GateStats) {
    o.require(g.failed == 0, format!("{} of {} values failed the refinement gate", g.failed, g.evaluated));
    o.gate = Some(*g);
}

/// Criterion 1: `phi_lambda(e) = 1`.
pub fn normalization(cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(1, "normalization");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts: Vec<_> = (0..20)
        .map(|_| {
            let dir = unit_cartan([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let c = dir.components();
            let len = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let t = rng.random_range(0.0..20.0);
            (CartanVector::zero(), SpectralParam::real(dir.scale(t / len).components()))
        })
        .collect();
    let vals = match spherical_function_batch(&pts, cfg.sizing, cfg.gate_tol) {
        Ok(v) => v,
        Err(e) => return o.fail_with(e),
    };
    let err = vals.iter().map(|v| (v.value - 1.0).norm()).fold(0.0, f64::max);
    o.metric("max_abs_err", err);
    o.require(err < 1e-12, "phi_lambda(e) differs from 1 by more than 1e-12");
    let mut g = GateStats::default();
    g.record(&vals);
    gate_fail_note(&mut o, &g);
    o
}

/// Criterion 2: `phi_{s lambda} = phi_lambda` for every Weyl element.
pub fn weyl_symmetry(cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(2, "weyl symmetry");
    let hs = [
        CartanVector::zero(),
        cv([1.0, 1.0, -2.0], 1.0),
        cv([2.0, -1.0, -1.0], 0.6),
        cv([1.0, 0.3, -1.3], 1.0),
        cv([-0.4, 1.0, -0.6], 0.7),
    ];
    let dirs = [
        [1.0, 0.0, -1.0],
        [1.0, 1.0, -2.0],
        [1.0, 0.3, -1.3],
        [-0.2, 1.0, -0.8],
        [0.7, -1.0, 0.3],
    ];
    let ts = [1.0, 2.5, 5.0, 7.5, 10.0];
    let mut pts = Vec::new();
    for h in &hs {
        for d in &dirs {
            let ray = LambdaRay::new(CartanVector::project(*d), ts.to_vec()).expect("valid ray");
            for &t in &ts {
                let lam = ray.lambda_at(t);
                for s in weyl_elements() {
                    pts.push((*h, lam.weyl_act(&s)));
                }
            }
        }
    }
    let vals = match spherical_function_batch(&pts, cfg.sizing, cfg.gate_tol) {
        Ok(v) => v,
        Err(e) => return o.fail_with(e),
    };
    let max_dev = vals
        .chunks(6)
        .map(|c| c.iter().map(|v| (v.value - c[0].value).norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    o.metric("max_dev", max_dev);
    o.metric("points", pts.len() as f64);
    o.require(max_dev < 1e-6, "Weyl orbit values differ by more than 1e-6");
    let mut g = GateStats::default();
    g.record(&vals);
    gate_fail_note(&mut o, &g);
    o
}

/// The `H` grid of the uniformity scan: zero, four wall points and four regular points.
pub fn uniformity_h_grid() -> Vec<CartanVector> {
    vec![
        CartanVector::zero(),
        cv([1.0, 1.0, -2.0], 0.5),
        cv([1.0, 1.0, -2.0], 1.0),
        cv([2.0, -1.0, -1.0], 1.0),
        cv([1.0, -2.0, 1.0], 1.0),
        cv([1.0, 0.3, -1.3], 0.5),
        cv([1.0, 0.3, -1.3], 1.0),
        cv([1.0, 0.3, -1.3], 1.5),
        cv([0.2, 1.0, -1.2], 1.0),
    ]
}

/// Ray directions of the uniformity scan: one generic, one parallel to the `alpha12` wall.
pub fn uniformity_rays(ts: Vec<f64>) -> Vec<LambdaRay> {
    vec![
        LambdaRay::new(CartanVector::project([1.0, -0.6, -0.4]), ts.clone()).expect("valid ray"),
        LambdaRay::new(CartanVector::project([1.0, 1.0, -2.0]), ts).expect("valid ray"),
    ]
}

/// Criterion 3: the empirical constant of the new bound is stable when the `t`-range doubles.
pub fn bound_uniformity(cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(3, "bound uniformity");
    let settings = ScanSettings {
        sizing: cfg.sizing,
        gate_tol: cfg.gate_tol,
        regularity_tol: DEFAULT_REGULARITY_TOL,
        which: BoundKind::New,
    };
    let ts: Vec<f64> = (0..=40).map(f64::from).collect();
    let rep = match bound_scan(&uniformity_h_grid(), &uniformity_rays(ts), &settings) {
        Ok(r) => r,
        Err(e) => return o.fail_with(e),
    };
    let finite = rep.points.iter().all(|p| p.ratio.is_finite() && p.ratio >= 0.0);
    o.require(finite, "nonfinite or negative ratio");
    let c20 = rep.empirical_constant_up_to(20.0);
    let c40 = rep.empirical_constant_up_to(40.0);
    let rel = (c40 - c20).abs() / c20;
    o.metric("C_t<=20", c20);
    o.metric("C_t<=40", c40);
    o.metric("rel_change", rel);
    // the same comparison with H = 0 left out, where the ratio is identically 1/6
    let sub = |t_max: f64| {
        rep.points
            .iter()
            .filter(|p| p.converged && p.h_index != 0 && p.t <= t_max)
            .map(|p| p.ratio)
            .fold(0.0, f64::max)
    };
    let (s20, s40) = (sub(20.0), sub(40.0));
    o.metric("rel_change_nonzero_H", (s40 - s20).abs() / s20);
    o.require(rel < 0.1, "empirical constant moved by 10% or more");
    let mut g = GateStats::default();
    g.record_report(&rep);
    gate_fail_note(&mut o, &g);
    o
}

/// Criterion 4: at a wall point the comparison bound with `0` in the parameter set stays at 6
/// while `|phi|` decays at least as fast as the new bound.
pub fn singular_improvement(cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(4, "improvement at singular H");
    let h = cv([1.0, 1.0, -2.0], 1.0);
    let ts: Vec<f64> = (10..=40).map(f64::from).collect();
    let ray = LambdaRay::new(CartanVector::project([1.0, 0.3, -1.3]), ts.clone()).expect("valid ray");
    let settings = ScanSettings {
        sizing: cfg.sizing,
        gate_tol: cfg.gate_tol,
        regularity_tol: DEFAULT_REGULARITY_TOL,
        which: BoundKind::New,
    };
    let rep = match bound_scan(&[h], std::slice::from_ref(&ray), &settings) {
        Ok(r) => r,
        Err(e) => return o.fail_with(e),
    };
    let mut old_dev: f64 = 0.0;
    for &t in &ts {
        match old_bound_set(&[h, CartanVector::zero()], &ray.lambda_at(t), DEFAULT_REGULARITY_TOL) {
            Ok(b) => old_dev = old_dev.max((b - 6.0).abs()),
            Err(e) => return o.fail_with(e),
        }
    }
    o.metric("old_bound_dev_from_6", old_dev);
    o.require(old_dev < 1e-12, "comparison bound is not the constant 6");
    let fit = &rep.fit_slopes(10.0, 40.0)[0];
    o.metric("slope_phi", fit.slope_phi);
    o.metric("slope_new", fit.slope_new);
    o.require(fit.slope_phi < 0.0, "|phi| does not decay");
    o.require(
        fit.slope_phi <= fit.slope_new + 0.1,
        "|phi| decays more slowly than the new bound allows",
    );
    let max_ratio = rep.points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    o.metric("max_ratio", max_ratio);
    o.require(max_ratio.is_finite(), "ratio unbounded");
    let mut g = GateStats::default();
    g.record_report(&rep);
    gate_fail_note(&mut o, &g);
    o
}

/// `(H, H')` pairs for the critical-set checks: 4 regular pairs and 16 with a wall point.
pub fn critical_configurations() -> Vec<(CartanVector, CartanVector)> {
    let reg = [
        cv([1.0, 0.3, -1.3], 1.0),
        cv([0.2, 1.0, -1.2], 0.8),
        cv([-1.0, 0.1, 0.9], 1.2),
        cv([0.6, -1.0, 0.4], 0.9),
    ];
    let wall = [
        cv([1.0, 1.0, -2.0], 1.0),
        cv([2.0, -1.0, -1.0], 0.7),
        cv([1.0, -2.0, 1.0], 1.1),
        cv([-1.0, -1.0, 2.0], 0.9),
    ];
    let mut out = vec![(reg[0], reg[1]), (reg[1], reg[2]), (reg[2], reg[3]), (reg[3], reg[0])];
    for i in 0..4 {
        out.push((reg[i], wall[i]));
        out.push((wall[i], reg[(i + 1) % 4]));
        out.push((wall[i], wall[i]));
        out.push((wall[i], wall[(i + 1) % 4]));
    }
    out
}

/// Criterion 5: critical inventory and dimension tags.
pub fn critical_inventory(_cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(5, "critical inventory");
    let settings = SolverSettings::default();
    let seeds = default_seeds(60);
    let configs = critical_configurations();
    let mut matched = 0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_mprime: f64 = 0.0;
    let mut worst_coset: f64 = 0.0;
    let mut failures = 0;
    let m_prime = m_prime_elements();
    for (n, (h, hp)) in configs.iter().enumerate() {
        let ctx = PhaseContext::new(*h, *hp);
        let inv = match find_critical_points(&ctx, &seeds, &settings) {
            Ok(i) => i,
            Err(e) => return o.fail_with(e),
        };
        failures += inv.failures.len();
        let regular = singular_roots(h, DEFAULT_REGULARITY_TOL).is_empty()
            && singular_roots(hp, DEFAULT_REGULARITY_TOL).is_empty();
        let mut ok = inv.points.iter().all(|p| p.nullity == p.manifold_dim);
        for p in &inv.points {
            worst_residual = worst_residual.max(p.residual);
            worst_coset = worst_coset.max(p.coset_distance);
        }
        ok &= inv.points.iter().all(|p| p.coset_distance < 1e-6);
        if regular {
            let d = inv
                .points
                .iter()
                .map(|p| {
                    let r = p.rotation();
                    m_prime.iter().map(|m| m.angle_to(&r)).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            worst_mprime = worst_mprime.max(d);
            o.require(inv.points.len() == 24, format!("config {n}: {} points, expected 24", inv.points.len()));
            ok &= d < 1e-6;
        } else {
            // positive-dimensional families: more points than M', kernel directions tangent
            ok &= inv.points.len() > 24 && inv.points.iter().any(|p| p.manifold_dim >= 1);
            let worst_tangent = inv
                .points
                .iter()
                .flat_map(|p| tangent_defects(&ctx, p, 1e-3))
                .fold(0.0, f64::max);
            ok &= worst_tangent < 1e-2 * ctx.scale();
        }
        if ok {
            matched += 1;
        } else {
            o.require(false, format!("config {n} has mismatched dimension tags or stray points"));
        }
    }
    o.metric("configs_matched", matched as f64);
    o.metric("configs", configs.len() as f64);
    o.metric("max_residual", worst_residual);
    o.metric("max_dist_to_M'", worst_mprime);
    o.metric("max_coset_distance", worst_coset);
    o.metric("nonconvergent_seeds", failures as f64);
    o.require(worst_residual < 1e-8, "residual above 1e-8");
    o
}

/// Criterion 6: Hessians at `M'` points.
pub fn hessian_normal_form(_cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(6, "hessian normal form");
    let mut worst_eig: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for (h, hp) in critical_configurations() {
        let ctx = PhaseContext::new(h, hp);
        for k in m_prime_elements() {
            let s = k.weyl_class(1e-12).expect("signed permutation");
            let hess = match phase_hessian(&ctx, &k, 1e-12) {
                Ok(m) => m,
                Err(e) => return o.fail_with(e),
            };
            let mut got: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
            let mut want = predicted_hessian_diagonal(&h, &hp, &s).to_vec();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let e = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            worst_eig = worst_eig.max(e);
            let fd = phase_hessian_fd(&ctx, &k, 1e-4);
            worst_fd = worst_fd.max((fd - hess).abs().max() / scale);
        }
    }
    o.metric("max_rel_eig_err", worst_eig);
    o.metric("max_rel_fd_err", worst_fd);
    o.require(worst_eig < 1e-6, "eigenvalues off by 1e-6 relative");
    o.require(worst_fd < 1e-4, "finite-difference Hessian off by 1e-4 relative");
    o
}

/// Criterion 7: van der Corput ratio sup is stable when the `t`-range quadruples.
pub fn van_der_corput(_cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(7, "van der corput");
    for d in 1..=3 {
        let res = VdcAmplitude::product_bump(d).and_then(|u| {
            Ok((vdc_diagonal_scan(&u, 100.0, 201)?, vdc_diagonal_scan(&u, 400.0, 801)?))
        });
        let (a, b) = match res {
            Ok(x) => x,
            Err(e) => return o.fail_with(e),
        };
        let rel = (b.sup_ratio - a.sup_ratio).abs() / a.sup_ratio;
        o.metric(&format!("d{d}_sup100"), a.sup_ratio);
        o.metric(&format!("d{d}_sup400"), b.sup_ratio);
        o.require(
            a.sup_ratio.is_finite() && b.sup_ratio.is_finite() && rel < 0.2,
            format!("d = {d}: sup moved by {rel:.3}"),
        );
    }
    o
}

/// Criterion 8: Duistermaat solves and the pushforward identity.
pub fn duistermaat(cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(8, "duistermaat");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let settings = DuistermaatSettings::default();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = CartanVector::project([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let off = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
        let y = symmetric_from(d, off);
        let y = y.scale(rng.random_range(0.0..2.0) / norm(&y));
        match duistermaat_solve(&y, &settings) {
            Ok(s) => worst = worst.max(s.residual),
            Err(e) => return o.fail_with(e),
        }
    }
    o.metric("max_residual", worst);
    o.require(worst < 1e-10, "solver residual above 1e-10");
    let pairs = [
        (cv([1.0, 0.3, -1.3], 1.0), [3.0, -1.0, -2.0]),
        (cv([1.0, 1.0, -2.0], 0.8), [1.0, 2.0, -3.0]),
        (cv([0.2, 1.0, -1.2], 0.5), [10.0, 0.0, -10.0]),
        (cv([2.0, -1.0, -1.0], 1.0), [-4.0, 5.0, -1.0]),
        (CartanVector::zero(), [2.0, -1.0, -1.0]),
    ];
    let mut dev: f64 = 0.0;
    for (h, l) in pairs {
        let ks: Vec<Rotation> = (0..100).map(|_| random_rotation(&mut rng)).collect();
        match pushforward_identity_check(&h, &SpectralParam::real(l), &ks, &settings) {
            Ok(r) => dev = dev.max(r.max_deviation),
            Err(e) => return o.fail_with(e),
        }
    }
    o.metric("max_pushforward_dev", dev);
    o.require(dev < 1e-8, "pushforward deviation above 1e-8");
    o
}

/// Criterion 9: the two root-space lemmas on each wall.
pub fn lemmas(_cfg: &VerifyConfig) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(9, "lemma suite");
    let mut l42: f64 = 0.0;
    let mut l45: f64 = 0.0;
    for h in [cv([1.0, 1.0, -2.0], 1.0), cv([2.0, -1.0, -1.0], 1.0), cv([1.0, -2.0, 1.0], 1.0)] {
        match lemma42_check(&h, 400) {
            Ok(r) => {
                l42 = l42.max(r.max_abs);
                o.require(r.min_generic_own_root > 1e-6, format!("{}: own root space pairing vanishes off M'", r.root));
            }
            Err(e) => return o.fail_with(e),
        }
        match lemma45_check(&h, 4001) {
            Ok(r) => {
                l45 = l45.max(r.max_mismatch);
                o.require(!r.zeros.is_empty(), format!("{}: no zeros found", r.root));
            }
            Err(e) => return o.fail_with(e),
        }
    }
    o.metric("lemma42_max", l42);
    o.metric("lemma45_mismatch", l45);
    o.require(l42 < 1e-12, "pairing with the other root spaces above 1e-12");
    o.require(l45 < 1e-8, "zero set differs from M' points");
    o
}

/// Criterion 10: every reported spherical-function value passed the refinement gate.
pub fn quadrature_trust(outcomes: &[CriterionOutcome]) -> CriterionOutcome {
    let mut o = CriterionOutcome::new(10, "quadrature trust");
    let mut g = GateStats::default();
    for x in outcomes {
        if let Some(s) = &x.gate {
            g.merge(s);
        }
    }
    o.metric("values", g.evaluated as f64);
    o.metric("max_change", g.max_change);
    o.require(g.evaluated > 0, "no gated values were reported");
    gate_fail_note(&mut o, &g);
    o
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub config: VerifyConfig,
    pub outcomes: Vec<CriterionOutcome>,
    pub passed: bool,
    /// True if any spherical-function value failed the refinement gate.
    pub gate_failure: bool,
}

/// Runs criteria 1 to 10 in order.
pub fn run_all(cfg: &VerifyConfig) -> AcceptanceReport {
    let mut outcomes = vec![
        normalization(cfg),
        weyl_symmetry(cfg),
        bound_uniformity(cfg),
        singular_improvement(cfg),
        critical_inventory(cfg),
        hessian_normal_form(cfg),
        van_der_corput(cfg),
        duistermaat(cfg),
        lemmas(cfg),
    ];
    let trust = quadrature_trust(&outcomes);
    let gate_failure = !trust.passed;
    outcomes.push(trust);
    AcceptanceReport {
        config: cfg.clone(),
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
        gate_failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_line_format() {
        let mut o = CriterionOutcome::new(3, "x");
        o.metric("a", 0.5);
        assert!(o.line().starts_with("[PASS]  3 x: a=5.000e-1"));
        o.require(false, "broken");
        assert!(o.line().starts_with("[FAIL]"));
        assert!(o.line().ends_with("broken"));
    }

    #[test]
    fn trust_fails_on_gate_failure() {
        let mut a = CriterionOutcome::new(1, "a");
        a.gate = Some(GateStats { evaluated: 3, failed: 1, max_change: 1e-6 });
        assert!(!quadrature_trust(&[a]).passed);
        assert!(!quadrature_trust(&[]).passed);
    }

    #[test]
    fn configuration_count() {
        assert_eq!(critical_configurations().len(), 20);
        assert_eq!(uniformity_h_grid().len(), 9);
    }
}
