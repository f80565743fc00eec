use std::io::Write;

use serde::Serialize;
use serde_json::json;
use sl3_spherical::duistermaat::{pushforward_identity_check, DuistermaatSettings, PushforwardReport};
use sl3_spherical::group::{halton_rotations, m_prime_elements};
use sl3_spherical::lie::dual_covector;
use sl3_spherical::phase::{
    default_seeds, find_critical_points, lemma42_check, lemma45_check, phase_hessian_fd, phase_hessian_unchecked,
    predicted_hessian_diagonal, CriticalInventory, Lemma42Report, Lemma45Report, PhaseContext, SolverSettings,
};
use sl3_spherical::plot::emit_plot;
use sl3_spherical::lie::DEFAULT_REGULARITY_TOL;
use sl3_spherical::spherical::{bound_scan, spherical_function_batch, ScanSettings};
use sl3_spherical::vdc::{vdc_diagonal_scan, VdcAmplitude, VdcScan};
use sl3_spherical::verify::{run_all, VerifyConfig};
use sl3_spherical::{CartanVector, SpectralParam};

use crate::config::{Command, Format, RunConfig};

pub enum Failure {
    Config(String),
    Gate { message: String, details: serde_json::Value },
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Runtime(_) => 1,
            Self::Gate { .. } => 2,
            Self::Config(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Config(m) => json!({"error": "config", "message": m}),
            Self::Runtime(m) => json!({"error": "runtime", "message": m}),
            Self::Gate { message, details } => json!({"error": "gate", "message": message, "details": details}),
        }
    }
}

impl From<sl3_spherical::Error> for Failure {
    fn from(e: sl3_spherical::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

type Rows = (Vec<&'static str>, Vec<Vec<String>>);

fn emit<T: Serialize>(cfg: &RunConfig, value: &T, rows: impl FnOnce() -> Rows) -> Result<(), Failure> {
    let mut buf = Vec::new();
    match cfg.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, value).map_err(|e| Failure::Runtime(e.to_string()))?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let (header, rows) = rows();
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
    }
    match &cfg.out {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn s(v: f64) -> String {
    (v + 0.0).to_string()
}

fn nonzero_pairs(cfg: &RunConfig) -> Result<Vec<(CartanVector, CartanVector)>, Failure> {
    let mut out = Vec::new();
    for h in cfg.h_points() {
        for ray in cfg.rays() {
            for &t in &ray.magnitudes {
                let hp = dual_covector(&ray.lambda_at(t))?;
                if h.norm() > 0.0 && hp.norm() > 0.0 && !out.contains(&(h, hp)) {
                    out.push((h, hp));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::Config("grid has no pair with H and lambda both nonzero".into()));
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    match cfg.command {
        Command::Eval => eval(cfg),
        Command::Scan => scan(cfg),
        Command::Critical => critical(cfg),
        Command::Hessian => hessian(cfg),
        Command::Vdc => vdc(cfg),
        Command::Duistermaat => duistermaat(cfg),
        Command::Lemmas => lemmas(cfg),
        Command::All => all(cfg),
    }
}

#[derive(Serialize)]
struct EvalRecord {
    h: [f64; 3],
    l: [f64; 3],
    re_phi: f64,
    im_phi: f64,
    abs_phi: f64,
    gate_change: f64,
    converged: bool,
    n_beta: usize,
    n_ag: usize,
}

fn eval(cfg: &RunConfig) -> Result<(), Failure> {
    let mut points: Vec<(CartanVector, SpectralParam)> = Vec::new();
    for h in cfg.h_points() {
        for ray in cfg.rays() {
            for &t in &ray.magnitudes {
                points.push((h, ray.lambda_at(t)));
            }
        }
    }
    let sizing = cfg.sizing().map_err(Failure::Config)?;
    let values = spherical_function_batch(&points, sizing, cfg.tol)?;
    let records: Vec<EvalRecord> = points
        .iter()
        .zip(&values)
        .map(|((h, l), g)| EvalRecord {
            h: h.components(),
            l: l.real_part(),
            re_phi: g.value.re,
            im_phi: g.value.im,
            abs_phi: g.value.norm(),
            gate_change: g.change,
            converged: g.converged,
            n_beta: g.size.n_beta,
            n_ag: g.size.n_ag,
        })
        .collect();
    emit(cfg, &records, || {
        let header = vec![
            "h1", "h2", "h3", "l1", "l2", "l3", "re_phi", "im_phi", "abs_phi", "gate_change", "converged", "n_beta",
            "n_ag",
        ];
        let rows = records
            .iter()
            .map(|r| {
                let mut v: Vec<String> = r.h.iter().chain(&r.l).map(|x| s(*x)).collect();
                v.extend([s(r.re_phi), s(r.im_phi), s(r.abs_phi), s(r.gate_change)]);
                v.extend([r.converged.to_string(), r.n_beta.to_string(), r.n_ag.to_string()]);
                v
            })
            .collect();
        (header, rows)
    })?;
    let failed = records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        return Err(Failure::Gate {
            message: format!("{failed} of {} values failed the refinement gate", records.len()),
            details: json!({"failed": failed, "evaluated": records.len()}),
        });
    }
    Ok(())
}

fn scan(cfg: &RunConfig) -> Result<(), Failure> {
    let settings = ScanSettings {
        sizing: cfg.sizing().map_err(Failure::Config)?,
        gate_tol: cfg.tol,
        ..ScanSettings::default()
    };
    let report = bound_scan(&cfg.h_points(), &cfg.rays(), &settings)?;
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => report.write_csv(&mut buf)?,
        Format::Json => {
            report.write_json(&mut buf)?;
            buf.push(b'\n');
        }
    }
    match &cfg.out {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    if let Some(p) = &cfg.plot {
        emit_plot(&report, p)?;
    }
    if !report.all_converged() {
        return Err(Failure::Gate {
            message: format!("{} of {} scan points failed the refinement gate", report.unconverged, report.points.len()),
            details: json!({"failed": report.unconverged, "evaluated": report.points.len()}),
        });
    }
    Ok(())
}

fn critical(cfg: &RunConfig) -> Result<(), Failure> {
    let seeds = default_seeds(60);
    let settings = SolverSettings::default();
    let mut inventories: Vec<CriticalInventory> = Vec::new();
    for (h, hp) in nonzero_pairs(cfg)? {
        inventories.push(find_critical_points(&PhaseContext::new(h, hp), &seeds, &settings)?);
    }
    emit(cfg, &inventories, || {
        let header = vec![
            "pair", "h1", "h2", "h3", "hp1", "hp2", "hp3", "k11", "k12", "k13", "k21", "k22", "k23", "k31", "k32",
            "k33", "residual", "weyl_coset", "coset_distance", "manifold_dim", "nullity", "in_m_prime", "eig1", "eig2",
            "eig3",
        ];
        let mut rows = Vec::new();
        for (i, inv) in inventories.iter().enumerate() {
            for p in &inv.points {
                let mut v = vec![i.to_string()];
                v.extend(inv.h.components().iter().chain(&inv.h_prime.components()).map(|x| s(*x)));
                v.extend(p.k.iter().flatten().map(|x| s(*x)));
                v.extend([s(p.residual), p.weyl_coset.to_string(), s(p.coset_distance)]);
                v.extend([p.manifold_dim.to_string(), p.nullity.to_string(), p.in_m_prime.to_string()]);
                v.extend(p.hessian_eigenvalues.iter().map(|x| s(*x)));
                rows.push(v);
            }
        }
        (header, rows)
    })?;
    let failures: usize = inventories.iter().map(|i| i.failures.len()).sum();
    let worst = inventories
        .iter()
        .flat_map(|i| i.points.iter().map(|p| p.residual))
        .fold(0.0, f64::max);
    if worst >= 1e-8 {
        return Err(Failure::Gate {
            message: format!("critical point residual {worst:e} exceeds 1e-8"),
            details: json!({"max_residual": worst, "solver_failures": failures}),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct HessianRecord {
    h: [f64; 3],
    h_prime: [f64; 3],
    weyl: String,
    eigenvalues: [f64; 3],
    predicted: [f64; 3],
    rel_eig_err: f64,
    rel_fd_err: f64,
}

fn sorted(mut v: [f64; 3]) -> [f64; 3] {
    v.sort_by(f64::total_cmp);
    v
}

fn hessian(cfg: &RunConfig) -> Result<(), Failure> {
    let mut records = Vec::new();
    for (h, hp) in nonzero_pairs(cfg)? {
        let ctx = PhaseContext::new(h, hp);
        for k in m_prime_elements() {
            let w = k.weyl_class(1e-12).expect("signed permutation");
            let hess = phase_hessian_unchecked(&ctx, &k);
            let got = sorted([0, 1, 2].map(|i| hess.symmetric_eigenvalues()[i]));
            let want = sorted(predicted_hessian_diagonal(&h, &hp, &w));
            let scale = want.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
            let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            let fd = (phase_hessian_fd(&ctx, &k, 1e-4) - hess).abs().max() / scale;
            records.push(HessianRecord {
                h: h.components(),
                h_prime: hp.components(),
                weyl: w.to_string(),
                eigenvalues: got,
                predicted: want,
                rel_eig_err: err,
                rel_fd_err: fd,
            });
        }
    }
    emit(cfg, &records, || {
        let header = vec![
            "h1", "h2", "h3", "hp1", "hp2", "hp3", "weyl", "eig1", "eig2", "eig3", "pred1", "pred2", "pred3",
            "rel_eig_err", "rel_fd_err",
        ];
        let rows = records
            .iter()
            .map(|r| {
                let mut v: Vec<String> = r.h.iter().chain(&r.h_prime).map(|x| s(*x)).collect();
                v.push(r.weyl.clone());
                v.extend(r.eigenvalues.iter().chain(&r.predicted).map(|x| s(*x)));
                v.extend([s(r.rel_eig_err), s(r.rel_fd_err)]);
                v
            })
            .collect();
        (header, rows)
    })?;
    let eig = records.iter().map(|r| r.rel_eig_err).fold(0.0, f64::max);
    let fd = records.iter().map(|r| r.rel_fd_err).fold(0.0, f64::max);
    if eig >= 1e-6 || fd >= 1e-4 {
        return Err(Failure::Gate {
            message: "Hessian does not match the predicted normal form".into(),
            details: json!({"max_rel_eig_err": eig, "max_rel_fd_err": fd}),
        });
    }
    Ok(())
}

fn vdc(cfg: &RunConfig) -> Result<(), Failure> {
    let t_max = cfg.lambda.mags.iter().copied().fold(0.0, f64::max);
    if t_max <= 0.0 {
        return Err(Failure::Config("vdc needs a positive lambda magnitude as t_max".into()));
    }
    let mut scans: Vec<VdcScan> = Vec::new();
    for d in 1..=3 {
        let u = VdcAmplitude::product_bump(d)?;
        scans.push(vdc_diagonal_scan(&u, t_max, 2 * t_max.ceil() as usize + 1)?);
    }
    emit(cfg, &scans, || {
        let rows = scans
            .iter()
            .flat_map(|sc| sc.ratios.iter().map(move |(t, r)| vec![sc.dim.to_string(), s(*t), s(*r)]))
            .collect();
        (vec!["dim", "tau", "ratio"], rows)
    })?;
    if let Some(sc) = scans.iter().find(|sc| !sc.sup_ratio.is_finite()) {
        return Err(Failure::Gate {
            message: format!("ratio sup is not finite for d = {}", sc.dim),
            details: json!({"dim": sc.dim}),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct PushforwardRecord {
    h: [f64; 3],
    l: [f64; 3],
    #[serde(flatten)]
    report: PushforwardReport,
}

fn duistermaat(cfg: &RunConfig) -> Result<(), Failure> {
    let ks = halton_rotations(32, cfg.seed);
    let settings = DuistermaatSettings::default();
    let mut records = Vec::new();
    for h in cfg.h_points() {
        for ray in cfg.rays() {
            for &t in &ray.magnitudes {
                let lam = ray.lambda_at(t);
                records.push(PushforwardRecord {
                    h: h.components(),
                    l: lam.real_part(),
                    report: pushforward_identity_check(&h, &lam, &ks, &settings)?,
                });
            }
        }
    }
    emit(cfg, &records, || {
        let header = vec!["h1", "h2", "h3", "l1", "l2", "l3", "samples", "max_deviation", "max_solver_residual"];
        let rows = records
            .iter()
            .map(|r| {
                let mut v: Vec<String> = r.h.iter().chain(&r.l).map(|x| s(*x)).collect();
                v.extend([
                    r.report.samples.to_string(),
                    s(r.report.max_deviation),
                    s(r.report.max_solver_residual),
                ]);
                v
            })
            .collect();
        (header, rows)
    })?;
    let dev = records.iter().map(|r| r.report.max_deviation).fold(0.0, f64::max);
    let res = records.iter().map(|r| r.report.max_solver_residual).fold(0.0, f64::max);
    if dev >= 1e-8 || res >= 1e-10 {
        return Err(Failure::Gate {
            message: "pushforward identity or solver residual out of tolerance".into(),
            details: json!({"max_deviation": dev, "max_solver_residual": res}),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct LemmaRecord {
    h: [f64; 3],
    lemma42: Lemma42Report,
    lemma45: Lemma45Report,
}

fn lemmas(cfg: &RunConfig) -> Result<(), Failure> {
    let walls: Vec<CartanVector> = cfg
        .h_points()
        .into_iter()
        .filter(|h| h.norm() > 0.0 && !sl3_spherical::lie::singular_roots(h, DEFAULT_REGULARITY_TOL).is_empty())
        .collect();
    if walls.is_empty() {
        return Err(Failure::Config("lemmas needs a nonzero singular H in the grid".into()));
    }
    let mut records = Vec::new();
    for h in walls {
        records.push(LemmaRecord {
            h: h.components(),
            lemma42: lemma42_check(&h, 64)?,
            lemma45: lemma45_check(&h, 4096)?,
        });
    }
    emit(cfg, &records, || {
        let header = vec!["h1", "h2", "h3", "root", "lemma42_max_abs", "lemma45_zeros", "lemma45_max_mismatch"];
        let rows = records
            .iter()
            .map(|r| {
                let mut v: Vec<String> = r.h.iter().map(|x| s(*x)).collect();
                v.extend([r.lemma42.root.clone(), s(r.lemma42.max_abs)]);
                v.extend([r.lemma45.zeros.len().to_string(), s(r.lemma45.max_mismatch)]);
                v
            })
            .collect();
        (header, rows)
    })?;
    let b = records.iter().map(|r| r.lemma42.max_abs).fold(0.0, f64::max);
    let m = records.iter().map(|r| r.lemma45.max_mismatch).fold(0.0, f64::max);
    if b >= 1e-12 || !(m < 1e-8) {
        return Err(Failure::Gate {
            message: "lemma checks out of tolerance".into(),
            details: json!({"lemma42_max_abs": b, "lemma45_max_mismatch": m}),
        });
    }
    Ok(())
}

fn all(cfg: &RunConfig) -> Result<(), Failure> {
    let vcfg = VerifyConfig {
        seed: cfg.seed,
        gate_tol: cfg.tol,
        sizing: cfg.sizing().map_err(Failure::Config)?,
    };
    let report = run_all(&vcfg);
    for o in &report.outcomes {
        eprintln!("{}", o.line());
    }
    emit(cfg, &report, || {
        let rows = report
            .outcomes
            .iter()
            .map(|o| vec![o.id.to_string(), o.name.clone(), o.passed.to_string(), o.detail.clone()])
            .collect();
        (vec!["id", "name", "passed", "detail"], rows)
    })?;
    if !report.passed {
        let failed: Vec<u32> = report.outcomes.iter().filter(|o| !o.passed).map(|o| o.id as u32).collect();
        return Err(Failure::Gate {
            message: format!("{} acceptance criteria failed", failed.len()),
            details: json!({"failed": failed, "gate_failure": report.gate_failure}),
        });
    }
    Ok(())
}
