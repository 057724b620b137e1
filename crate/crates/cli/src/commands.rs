//! One function per experiment; each fills an `Artifacts` value.

use anyhow::{anyhow, bail};
use rayon::prelude::*;
use roughshe::analysis::{self, psi0};
use roughshe::io::{write_field, write_noise, FieldHeader};
use roughshe::kernel::{self, BoundReport};
use roughshe::noise::{isometry_check, sample_noise, ElementaryIntegrand};
use roughshe::rng::derive_seed;
use roughshe::solver::{self, SigmaSpec};

use crate::artifacts::Artifacts;
use crate::config::{Experiment, ExperimentConfig};

const FACTORIZATION_TOL: f64 = 0.05;
const PSI0_NODES_PER_UNIT: f64 = 64.0;

pub fn run(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    match c.experiment {
        Experiment::VerifyKernels => verify_kernels(c),
        Experiment::Isometry => isometry(c),
        Experiment::SimulateAdditive => simulate_additive(c),
        Experiment::SupGrowth => sup_growth(c),
        Experiment::Holder => holder(c),
        Experiment::Nsup => nsup(c),
        Experiment::Nonlinear => nonlinear(c),
        Experiment::Factorization => factorization(c),
    }
}

pub fn sigma_spec(name: &str) -> anyhow::Result<SigmaSpec> {
    match name {
        "sin" => Ok(SigmaSpec::sine()),
        "u" | "identity" => Ok(SigmaSpec::identity()),
        other => match other.strip_prefix("const:").unwrap_or(other).parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(SigmaSpec::constant(v)),
            _ => bail!("unknown sigma '{other}'; expected sin, u, or const:<value>"),
        },
    }
}

fn kernel_report(a: &mut Artifacts, label: &str, r: &BoundReport) {
    for (p, v) in r.probes.iter().zip(&r.values) {
        let x = p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        a.push("kernel", label, x, "value", *v);
    }
    for (k, v) in &r.metrics {
        a.push("kernel", label, "", k, *v);
    }
    a.flag("kernel", label, "pass", r.pass);
}

fn verify_kernels(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let h = c.hurst()?;
    let hh = h.h();
    let suites: Vec<(String, BoundReport)> = vec![
        ("glamd".into(), kernel::verify_glamd(c.t, 1.0 - hh, h)?),
        ("j_decay".into(), kernel::verify_j_decay(0.4)?),
        ("ngreen_d".into(), kernel::verify_ngreen_scaling(0.5 - hh, None)?),
        ("ngreen_box".into(), kernel::verify_ngreen_scaling(0.2, Some(0.2))?),
        ("dg_decay".into(), kernel::verify_dg_decay(h)?),
        ("box_decay".into(), kernel::verify_box_decay(h)?),
        ("weighted_admissible".into(), kernel::verify_weighted_kernel(h, 1.0 - hh, c.t)?),
        ("weighted_excess".into(), kernel::verify_weighted_kernel(h, 1.0 - hh + 0.2, c.t)?),
    ];
    let mut a = Artifacts { pass: suites.iter().all(|(_, r)| r.pass), ..Default::default() };
    for (label, r) in &suites {
        kernel_report(&mut a, label, r);
        a.summarize(label, r)?;
    }
    Ok(a)
}

/// Three grid-aligned elementary integrands scaled to [0,T] × [-L,L].
fn isometry_integrands(t: f64, l: f64) -> Vec<ElementaryIntegrand> {
    let (q, m) = (0.25 * t, 0.25 * l);
    vec![
        ElementaryIntegrand { blocks: vec![(1.0, [0.0, t], [0.0, m])] },
        ElementaryIntegrand { blocks: vec![(1.0, [0.0, 2.0 * q], [-m, 2.0 * m]), (-2.0, [2.0 * q, t], [0.0, 2.0 * m])] },
        ElementaryIntegrand { blocks: vec![(1.0, [q, 3.0 * q], [-2.0 * m, -m]), (1.0, [q, 3.0 * q], [m, 3.0 * m])] },
    ]
}

fn isometry(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let (h, grid) = (c.hurst()?, c.grid()?);
    let rows = isometry_check(&grid, h, &isometry_integrands(c.t, c.l[0]), c.paths, c.seed)?;
    let mut a = Artifacts { pass: rows.iter().all(|r| r.z_score.abs() <= 3.0), ..Default::default() };
    for (k, r) in rows.iter().enumerate() {
        let label = format!("g{}", k + 1);
        a.push("isometry", &label, "", "norm_sq", r.norm_sq);
        a.push("isometry", &label, "", "mc_variance", r.mc_variance.mean);
        a.push("isometry", &label, "", "std_error", r.mc_variance.std_error);
        a.push("isometry", &label, "", "z_score", r.z_score);
        a.flag("isometry", &label, "pass", r.z_score.abs() <= 3.0);
    }
    a.summarize("rows", &rows)?;
    Ok(a)
}

fn simulate_additive(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let (h, grid) = (c.hurst()?, c.grid()?);
    let report = solver::calibrate_additive(&grid, h, &c.probes, c.paths, c.seed)?;
    let mut a = Artifacts { pass: report.pass, ..Default::default() };
    for e in &report.entries {
        let label = format!("{},{}", e.x[0], e.x[1]);
        a.push("covariance", &label, "", "oracle", e.oracle);
        a.push("covariance", &label, "", "discrete", e.discrete);
        a.push("covariance", &label, "", "monte_carlo", e.monte_carlo.mean);
        a.push("covariance", &label, "", "std_error", e.monte_carlo.std_error);
        a.push("covariance", &label, "", "grid_bias", e.grid_bias);
        a.flag("covariance", &label, "pass", e.pass);
    }
    a.summarize("calibration", &report)?;
    // The first calibration path, dumped with its noise.
    let noise = sample_noise(&grid, h, derive_seed(c.seed, 0))?;
    let sol = solver::solve_mild(&grid, &SigmaSpec::constant(1.0), &|_| 0.0, &noise, 0.0)?;
    let mut bytes = Vec::new();
    write_noise(&mut bytes, &noise)?;
    a.binaries.push(("noise.bin".into(), bytes));
    a.binaries.push(("solution.bin".into(), solution_bytes(&sol, h.h())?));
    Ok(a)
}

fn solution_bytes(sol: &solver::SolutionField, h: f64) -> anyhow::Result<Vec<u8>> {
    let header = FieldHeader { h, grid: sol.grid, seed: sol.noise_seed, eps: sol.eps, rows: sol.grid.nt + 1 };
    let mut bytes = Vec::new();
    write_field(&mut bytes, &header, &sol.values)?;
    Ok(bytes)
}

fn sup_growth(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let h = c.hurst()?;
    let r = analysis::sup_growth_experiment(h, c.t, &c.l, c.paths, c.seed, c.sup_grid, &c.thresholds)?;
    let mut a = Artifacts { pass: r.pass, ..Default::default() };
    a.fit("sup_vs_psi", &r.fit);
    for (((l, s), ch), sk) in c.l.iter().zip(&r.stats).zip(&r.chaining).zip(&r.sudakov) {
        a.push("sup", "L", l, "mean_sup", s.mean_sup);
        a.push("sup", "L", l, "std_error", s.std_error);
        a.push("sup", "L", l, "mean_abs_sup", s.mean_abs_sup);
        a.push("sup", "L", l, "lemma_margin", s.lemma_margin());
        a.push("sup", "L", l, "chaining_bound", ch.bound);
        a.push("sup", "L", l, "sudakov_bound", sk.bound.bound);
        a.push("sup", "L", l, "sudakov_mc", sk.mc.mean);
    }
    a.flag("ordering", "sudakov<=mc<=chaining", "pass", r.ordering_pass);
    a.flag("lemma", "anchor_moment", "pass", r.lemma_pass);
    a.summarize("report", &r)?;
    Ok(a)
}

fn holder(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let h = c.hurst()?;
    let r = analysis::holder_experiment(c.kind, h, c.t, c.l[0], &c.shifts, c.nx, c.theta, c.paths, c.seed, &c.thresholds)?;
    let stab = analysis::psi0_stability(
        c.kind,
        h,
        c.t,
        c.psi0_shift,
        &c.psi0_l,
        PSI0_NODES_PER_UNIT,
        c.paths,
        derive_seed(c.seed, 500),
        &c.thresholds,
    )?;
    let mut a = Artifacts { pass: r.pass && stab.pass, ..Default::default() };
    a.fit("lower", &r.lower);
    a.fit("upper", &r.upper);
    a.fit("psi0", &stab);
    a.push("slope", "loglog", "", "slope", r.slope.slope);
    a.push("slope", "loglog", "", "window_lo", r.window.0);
    a.push("slope", "loglog", "", "window_hi", r.window.1);
    a.flag("slope", "loglog", "pass", r.slope_pass);
    a.summarize("report", &r)?;
    a.summarize("psi0_stability", &stab)?;
    Ok(a)
}

fn nsup(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let h = c.hurst()?;
    let r = analysis::nsup_experiment(h, c.t, &c.l, c.paths, c.seed, c.nsup_grid, &c.thresholds)?;
    let mut a = Artifacts { pass: r.pass, ..Default::default() };
    a.fit("sup_n_sq_vs_log2L", &r.growth);
    a.fit("growth_vs_log2_ratio", &r.growth_rate);
    for (l, e) in c.l.iter().zip(&r.envelope) {
        a.push("envelope", "L", l, "ratio", *e);
        a.push("envelope", "L", l, "psi0", psi0(c.t, *l)?);
    }
    a.push("envelope", "prefactor", "", "value", r.envelope_prefactor);
    a.push("expected", "n_sq", "", "value", r.expected_n_sq);
    a.flag("envelope", "non_increasing", "pass", r.envelope_pass);
    a.summarize("report", &r)?;
    Ok(a)
}

fn nonlinear(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let (h, grid) = (c.hurst()?, c.grid()?);
    let sigma = sigma_spec(&c.sigma)?;
    let (p, eps) = (c.moment_order(), c.mollification()?);
    let runs: Vec<(solver::SolutionField, Vec<f64>)> = (0..c.paths)
        .into_par_iter()
        .map(|k| {
            let noise = sample_noise(&grid, h, derive_seed(c.seed, k as u64))?;
            solver::picard_solve(&grid, &sigma, &|_| 1.0, &noise, eps, p, c.tol, c.max_iter)
        })
        .collect::<roughshe::Result<_>>()?;
    let (fields, traces): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let norm = solver::z_norm(&fields, p, h)?;
    let mut a = Artifacts { pass: norm.z_norm.is_finite(), ..Default::default() };
    for (k, tr) in traces.iter().enumerate() {
        for (i, d) in tr.iter().enumerate() {
            a.push("picard", &format!("path{k}"), i + 1, "distance", *d);
        }
    }
    a.push("norm", "Z", p, "sup_lp", norm.sup_lp);
    a.push("norm", "Z", p, "sup_nstar", norm.sup_nstar);
    a.push("norm", "Z", p, "sup_nstar_on_grid", norm.sup_nstar_on_grid);
    a.push("norm", "Z", p, "sup_nstar_tail", norm.sup_nstar_tail);
    a.push("norm", "Z", p, "z_norm", norm.z_norm);
    a.flag("norm", "finite", "pass", a.pass);
    let iterations: Vec<usize> = traces.iter().map(|t| t.len()).collect();
    a.summarize("sigma", &sigma.name())?;
    a.summarize("p", &p)?;
    a.summarize("eps", &eps)?;
    a.summarize("picard_iterations", &iterations)?;
    a.summarize("norm", &norm)?;
    a.binaries.push(("solution.bin".into(), solution_bytes(&fields[0], h.h())?));
    Ok(a)
}

fn factorization(c: &ExperimentConfig) -> anyhow::Result<Artifacts> {
    let (h, grid) = (c.hurst()?, c.grid()?);
    if c.alphas.len() < 2 {
        return Err(anyhow!(roughshe::Error::Config("factorization needs at least two α values".into())));
    }
    let r = solver::factorization_check(&grid, h, &c.alphas, c.seed, FACTORIZATION_TOL)?;
    let mut a = Artifacts { pass: r.pass, ..Default::default() };
    for (al, rms) in r.alphas.iter().zip(&r.rms_vs_direct) {
        a.push("factorization", "alpha", al, "rms_vs_direct", *rms);
    }
    a.push("factorization", "cross_alpha", "", "rms", r.alpha_spread);
    a.flag("factorization", "within_tolerance", "pass", r.pass);
    a.summarize("report", &r)?;
    Ok(a)
}
