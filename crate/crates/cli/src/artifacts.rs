//! Artifact directories: config echo, JSON summary, tidy CSV, binary dumps
//! and a MANIFEST with content hashes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use roughshe::analysis::FitResult;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// One tidy observation: (section, label, x) identifies the configuration,
/// `statistic` the quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub section: String,
    pub label: String,
    pub x: String,
    pub statistic: String,
    pub value: f64,
}

#[derive(Default)]
pub struct Artifacts {
    pub rows: Vec<Row>,
    pub summary: BTreeMap<String, Value>,
    pub binaries: Vec<(String, Vec<u8>)>,
    pub pass: bool,
}

impl Artifacts {
    pub fn push(&mut self, section: &str, label: &str, x: impl ToString, statistic: &str, value: f64) {
        self.rows.push(Row { section: section.into(), label: label.into(), x: x.to_string(), statistic: statistic.into(), value });
    }

    pub fn flag(&mut self, section: &str, label: &str, statistic: &str, ok: bool) {
        self.push(section, label, "", statistic, if ok { 1.0 } else { 0.0 });
    }

    /// Fit rows carry observed, standard error and predicted per abscissa,
    /// plus the threshold, which is all `report` needs.
    pub fn fit(&mut self, label: &str, f: &FitResult) {
        for i in 0..f.abscissae.len() {
            let x = f.abscissae[i];
            self.push("fit", label, x, "observed", f.observed[i]);
            self.push("fit", label, x, "std_error", f.observed_se[i]);
            self.push("fit", label, x, "predicted", f.predicted[i]);
        }
        self.push("fit", label, "", "threshold", f.threshold);
        self.flag("fit", label, "pass", f.pass);
    }

    pub fn summarize<T: Serialize>(&mut self, key: &str, value: &T) -> anyhow::Result<()> {
        self.summary.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn csv_bytes(rows: &[Row]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn write_run(dir: &Path, config: &ExperimentConfig, art: &Artifacts) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let config_json = serde_json::to_vec_pretty(config)?;
    let mut summary = serde_json::Map::new();
    summary.insert("experiment".into(), Value::from(config.experiment.name()));
    summary.insert("pass".into(), Value::from(art.pass));
    for (k, v) in &art.summary {
        summary.insert(k.clone(), v.clone());
    }
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("config.json".into(), config_json.clone()),
        ("summary.json".into(), serde_json::to_vec_pretty(&Value::Object(summary))?),
        ("data.csv".into(), csv_bytes(&art.rows)?),
    ];
    files.extend(art.binaries.iter().cloned());
    let mut hashes = serde_json::Map::new();
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
        hashes.insert(name.clone(), Value::from(sha256_hex(bytes)));
    }
    let manifest = serde_json::json!({
        "experiment": config.experiment.name(),
        "config_sha256": sha256_hex(&config_json),
        "seed": config.seed,
        "roughshe_version": env!("CARGO_PKG_VERSION"),
        "files": hashes,
    });
    std::fs::write(dir.join("MANIFEST"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

/// An abscissa with its statistics.
type FitPoint<'a> = (&'a str, BTreeMap<&'a str, f64>);

/// Re-render a summary from an artifact directory's CSV alone: fit ratios,
/// spreads and pass flags are recomputed from the stored columns.
pub fn report(dir: &Path) -> anyhow::Result<(String, bool)> {
    let path = dir.join("data.csv");
    let mut rd = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Row> = rd.deserialize().collect::<Result<_, _>>()?;
    let mut out = String::new();
    let mut all = true;
    // Abscissae keep their order of appearance.
    let mut fits: BTreeMap<&str, Vec<FitPoint>> = BTreeMap::new();
    let mut thresholds: BTreeMap<&str, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.section == "fit") {
        if r.statistic == "threshold" {
            thresholds.insert(&r.label, r.value);
        } else if r.statistic != "pass" {
            let points = fits.entry(&r.label).or_default();
            match points.iter_mut().find(|(x, _)| *x == r.x) {
                Some((_, s)) => {
                    s.insert(&r.statistic, r.value);
                }
                None => points.push((&r.x, BTreeMap::from([(r.statistic.as_str(), r.value)]))),
            }
        }
    }
    for (label, points) in &fits {
        let mut ratios = Vec::new();
        let _ = writeln!(out, "{label}");
        for (x, s) in points {
            let ratio = s["observed"] / s["predicted"];
            ratios.push(ratio);
            let _ = writeln!(
                out,
                "  x = {x:>10}  observed {:.6} ± {:.6}  predicted {:.6}  ratio {ratio:.4}",
                s["observed"], s["std_error"], s["predicted"]
            );
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let thr = thresholds.get(label).copied().unwrap_or(f64::INFINITY);
        let pass = lo > 0.0 && hi / lo <= thr;
        all &= pass;
        let _ = writeln!(out, "  spread {:.4} (threshold {thr}) {}", hi / lo, if pass { "PASS" } else { "FAIL" });
    }
    for r in rows.iter().filter(|r| r.statistic == "pass" && r.section != "fit") {
        let pass = r.value == 1.0;
        all &= pass;
        let _ = writeln!(out, "{} {}: {}", r.section, r.label, if pass { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(out, "overall: {}", if all { "PASS" } else { "FAIL" });
    Ok((out, all))
}
