//! Run configuration: versioned JSON, merged with command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sl3_spherical::spherical::{LambdaRay, RuleSizing, DEFAULT_GATE_TOL};
use sl3_spherical::CartanVector;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Scan,
    Critical,
    Hessian,
    Vdc,
    Duistermaat,
    Lemmas,
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Directions times magnitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dirs: Vec<[f64; 3]>,
    pub mags: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub command: Command,
    /// `H = m * d / ||d||` with the Killing norm.
    pub h: Grid,
    /// `lambda = t * d / |d|` with the Euclidean norm.
    pub lambda: Grid,
    pub n_beta: Option<usize>,
    pub n_ag: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            version: CONFIG_VERSION,
            command,
            h: Grid {
                dirs: vec![[1.0, -0.3, -0.7], [1.0, 1.0, -2.0]],
                mags: vec![0.0, 0.5, 1.0],
            },
            lambda: Grid {
                dirs: vec![[1.0, -0.6, -0.4], [1.0, 1.0, -2.0]],
                mags: (0..=10).map(|i| 4.0 * i as f64).collect(),
            },
            n_beta: None,
            n_ag: None,
            tol: DEFAULT_GATE_TOL,
            seed: 20240611,
            format: Format::Csv,
            out: None,
            plot: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!("unsupported config version {}", self.version));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tolerance must be > 0, got {}", self.tol));
        }
        for (name, g) in [("h", &self.h), ("lambda", &self.lambda)] {
            if g.dirs.is_empty() || g.mags.is_empty() {
                return Err(format!("{name} grid is empty"));
            }
            if g.mags.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(format!("{name} magnitudes must be finite and >= 0"));
            }
            for d in &g.dirs {
                let c = CartanVector::new(*d).map_err(|e| format!("{name} direction {d:?}: {e}"))?;
                if c.norm() == 0.0 || !c.norm().is_finite() {
                    return Err(format!("{name} direction {d:?} is zero"));
                }
            }
        }
        self.sizing()?;
        if self.plot.is_some() && self.command != Command::Scan {
            return Err("--plot is only supported by the scan subcommand".into());
        }
        Ok(())
    }

    pub fn sizing(&self) -> Result<RuleSizing, String> {
        match (self.n_beta, self.n_ag) {
            (None, None) => Ok(RuleSizing::Auto),
            (Some(n_beta), Some(n_ag)) => {
                sl3_spherical::RuleSize::new(n_beta, n_ag).map_err(|e| e.to_string())?;
                Ok(RuleSizing::Fixed { n_beta, n_ag })
            }
            _ => Err("--nbeta and --nag must be given together".into()),
        }
    }

    pub fn h_points(&self) -> Vec<CartanVector> {
        let mut out = Vec::new();
        for d in &self.h.dirs {
            let unit = CartanVector::project(*d).normalized().expect("validated");
            for m in &self.h.mags {
                let h = unit.scale(*m);
                if !out.contains(&h) {
                    out.push(h);
                }
            }
        }
        out
    }

    pub fn rays(&self) -> Vec<LambdaRay> {
        self.lambda
            .dirs
            .iter()
            .map(|d| LambdaRay::new(CartanVector::project(*d), self.lambda.mags.clone()).expect("validated"))
            .collect()
    }
}

/// Parses `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let (a, b, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || b < a {
            return Err(format!("bad range {s:?}"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + step * i as f64).collect());
    }
    parse_csv(s)
}

fn parse_csv(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_csv(s)?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three components, got {}", v.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_list("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_list("1:0:0.5").is_err());
        assert!(parse_list("a,b").is_err());
        assert_eq!(parse_triple("1,-0.5,-0.5").unwrap(), [1.0, -0.5, -0.5]);
        assert!(parse_triple("1,2").is_err());
    }

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::defaults(Command::Scan);
        cfg.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.h_points().len(), 5);
    }
}
