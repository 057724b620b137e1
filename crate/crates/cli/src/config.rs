//! Experiment configuration: per-experiment defaults, overlaid by a JSON
//! file, overlaid by command-line flags.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use roughshe::analysis::{HolderKind, NsupGrid, SupGrid, Thresholds};
use roughshe::{HurstParameter, SpaceTimeGrid};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyKernels,
    Isometry,
    SimulateAdditive,
    SupGrowth,
    Holder,
    Nsup,
    Nonlinear,
    Factorization,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyKernels => "verify-kernels",
            Experiment::Isometry => "isometry",
            Experiment::SimulateAdditive => "simulate-additive",
            Experiment::SupGrowth => "sup-growth",
            Experiment::Holder => "holder",
            Experiment::Nsup => "nsup",
            Experiment::Nonlinear => "nonlinear",
            Experiment::Factorization => "factorization",
        }
    }
}

/// Fully resolved configuration. The worker count is deliberately absent:
/// it cannot change any output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub h: f64,
    pub t: f64,
    pub l: Vec<f64>,
    pub nt: usize,
    pub nx: usize,
    pub paths: usize,
    pub seed: u64,
    pub shifts: Vec<f64>,
    pub kind: HolderKind,
    pub theta: Option<f64>,
    pub psi0_l: Vec<f64>,
    pub psi0_shift: f64,
    pub sigma: String,
    pub eps: Option<f64>,
    pub p: Option<u32>,
    pub tol: f64,
    pub max_iter: usize,
    pub alphas: Vec<f64>,
    pub probes: Vec<f64>,
    pub sup_grid: SupGrid,
    pub nsup_grid: NsupGrid,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            h: 0.3,
            t: 1.0,
            l: vec![8.0],
            nt: 64,
            nx: 129,
            paths: 500,
            seed: 42,
            shifts: (2..=6).map(|k| 0.5f64.powi(k)).collect(),
            kind: HolderKind::Space,
            theta: None,
            psi0_l: vec![2.0, 8.0, 32.0],
            psi0_shift: 0.125,
            sigma: "sin".into(),
            eps: None,
            p: None,
            tol: 1e-10,
            max_iter: 100,
            alphas: vec![0.1, 0.2],
            probes: vec![0.0, 0.5, 1.0],
            sup_grid: SupGrid::default(),
            nsup_grid: NsupGrid::default(),
            thresholds: Thresholds::default(),
        };
        match experiment {
            Experiment::Isometry => {
                c.l = vec![4.0];
                c.nt = 16;
                c.nx = 65;
                c.paths = 10_000;
            }
            Experiment::SimulateAdditive => {
                c.nt = 256;
                c.nx = 513;
                c.paths = 2000;
            }
            Experiment::SupGrowth => c.l = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            Experiment::Holder => c.nx = 2048,
            Experiment::Nsup => {
                c.l = vec![2.0, 4.0, 8.0, 16.0];
                c.paths = 100;
            }
            Experiment::Nonlinear => {
                c.h = 0.35;
                c.t = 0.5;
                c.nt = 64;
                c.nx = 129;
                c.paths = 64;
            }
            Experiment::Factorization => c.nx = 257,
            Experiment::VerifyKernels => {}
        }
        c
    }

    /// Defaults, then the JSON file's keys, then flag overrides.
    pub fn resolve(experiment: Experiment, file: Option<&Path>, flags: Map<String, Value>) -> anyhow::Result<Self> {
        let mut v = serde_json::to_value(Self::defaults(experiment))?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            let file = file.as_object().ok_or_else(|| anyhow!("config file must hold a JSON object"))?;
            for (k, val) in file {
                if k == "experiment" && val != &obj["experiment"] {
                    bail!("config file is for experiment {val}, not {}", experiment.name());
                }
                if k == "thresholds" || k == "sup_grid" || k == "nsup_grid" {
                    merge(obj.get_mut(k).expect("nested default"), val)?;
                } else {
                    obj.insert(k.clone(), val.clone());
                }
            }
        }
        for (k, val) in flags {
            obj.insert(k, val);
        }
        let c: Self = serde_json::from_value(v).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        c.validate()?;
        Ok(c)
    }

    pub fn hurst(&self) -> anyhow::Result<HurstParameter> {
        HurstParameter::new(self.h).map_err(|e| anyhow!("{e}"))
    }

    pub fn grid(&self) -> anyhow::Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(self.t, self.l[0], self.nt, self.nx).map_err(|e| anyhow!("{e}"))
    }

    /// Smallest even p with p > 6/(4H - 1).
    pub fn minimal_p(h: f64) -> u32 {
        let bound = 6.0 / (4.0 * h - 1.0);
        let mut p = (bound.floor() as u32 + 1).max(2);
        if p % 2 == 1 {
            p += 1;
        }
        p
    }

    /// p = 8 unless that violates the constraint, then the smallest
    /// admissible even p.
    pub fn moment_order(&self) -> u32 {
        self.p.unwrap_or_else(|| Self::minimal_p(self.h).max(8))
    }

    /// Mollification scale, 2 dx² unless given.
    pub fn mollification(&self) -> anyhow::Result<f64> {
        let dx = self.grid()?.dx();
        Ok(self.eps.unwrap_or(2.0 * dx * dx))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let h = self.hurst()?;
        if !(self.t > 0.0) {
            bail!("t = {} must be positive", self.t);
        }
        if self.l.is_empty() || self.l.iter().any(|l| !(*l > 0.0)) {
            bail!("l must be a nonempty list of positive half-widths");
        }
        if self.paths < 2 {
            bail!("paths = {} must be at least 2", self.paths);
        }
        let needs_wide = matches!(self.experiment, Experiment::SupGrowth | Experiment::Holder | Experiment::Nsup);
        if needs_wide {
            let root = self.t.sqrt();
            if let Some(l) = self.l.iter().find(|l| **l < root) {
                bail!("L = {l} violates L ≥ √T = {root}");
            }
        }
        if self.experiment == Experiment::Holder {
            if let Some(l) = self.psi0_l.iter().find(|l| **l < self.t.sqrt()) {
                bail!("psi0_l entry {l} violates L ≥ √t");
            }
        }
        if matches!(
            self.experiment,
            Experiment::Isometry | Experiment::SimulateAdditive | Experiment::Nonlinear | Experiment::Factorization
        ) {
            self.grid()?;
        }
        if self.experiment == Experiment::Nonlinear {
            let p = self.moment_order();
            let bound = 6.0 / (4.0 * h.h() - 1.0);
            if !p.is_multiple_of(2) || (p as f64) <= bound {
                bail!(
                    "p = {p} violates p even and p > 6/(4H-1) = {bound:.4} at H = {}; the smallest admissible p is {}",
                    h.h(),
                    Self::minimal_p(h.h())
                );
            }
            crate::commands::sigma_spec(&self.sigma)?;
            if self.paths < 30 {
                bail!("nonlinear needs at least 30 paths for the moment norms, got {}", self.paths);
            }
        }
        Ok(())
    }
}

fn merge(target: &mut Value, patch: &Value) -> anyhow::Result<()> {
    let (Some(t), Some(p)) = (target.as_object_mut(), patch.as_object()) else {
        bail!("nested config sections must be JSON objects");
    };
    for (k, v) in p {
        if !t.contains_key(k) {
            bail!("unknown config key {k}");
        }
        t.insert(k.clone(), v.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_p_values() {
        assert_eq!(ExperimentConfig::minimal_p(0.35), 16);
        assert_eq!(ExperimentConfig::minimal_p(0.3), 32);
        assert_eq!(ExperimentConfig::minimal_p(0.45), 8);
    }

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"h": 0.4, "paths": 50, "thresholds": {"sup_spread": 2.0}}"#).unwrap();
        let mut flags = Map::new();
        flags.insert("paths".into(), Value::from(60));
        let c = ExperimentConfig::resolve(Experiment::SupGrowth, Some(&path), flags).unwrap();
        assert_eq!(c.h, 0.4);
        assert_eq!(c.paths, 60);
        assert_eq!(c.thresholds.sup_spread, 2.0);
        assert_eq!(c.thresholds.holder_spread, 1.6);
    }

    #[test]
    fn invalid_values_are_named() {
        let mut flags = Map::new();
        flags.insert("h".into(), Value::from(0.6));
        let e = ExperimentConfig::resolve(Experiment::SupGrowth, None, flags).unwrap_err();
        assert!(e.to_string().contains("0.6"), "{e}");
        let mut flags = Map::new();
        flags.insert("p".into(), Value::from(8));
        let e = ExperimentConfig::resolve(Experiment::Nonlinear, None, flags).unwrap_err();
        assert!(e.to_string().contains("smallest admissible p is 16"), "{e}");
    }
}
