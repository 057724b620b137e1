//! Mild-form solver for the equation with mollified noise, the Picard
//! iteration, the weighted norms, the N operator and the factorization
//! identity.
//!
//! One step maps u^n to u^{n+1} = S u^n + A(σ(t_n, ·, u^n) ΔW^n / dx) on a
//! zero-padded periodic grid of twice the physical width. S has symbol
//! e^{-dt ξ²}. A has symbol √((1 - e^{-2dt ξ²}) / (2dt ξ²)), so that
//! dt·A² = ∫_0^dt e^{-2rξ²} dr and the additive step is exact in law.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceKernel;
use crate::kernel::Weight;
use crate::noise::{
    fgn_autocovariance, inner_product, mollify, sample_noise, ElementaryIntegrand, HurstParameter, InnerForm, NoiseRealization,
    SpaceTimeGrid,
};
use crate::quad::Quad;
use crate::rng::{derive_seed, path_rng};
use crate::stats::{covariance_estimate, MeanEstimate};

/// Magnitude treated as blow-up.
pub const BLOW_UP: f64 = 1e12;

pub type SigmaFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A deterministic integrand v(t, x).
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Hypotheses the caller declares for σ; each declared one is spot-checked.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hypotheses {
    pub h1: bool,
    /// (H2) together with the Hurst parameter and moment order used in the
    /// weighted condition.
    pub h2: Option<(f64, u32)>,
}

impl Default for Hypotheses {
    fn default() -> Self {
        Hypotheses { h1: true, h2: None }
    }
}

/// Diffusion coefficient σ(t, x, u) with declared constants.
#[derive(Clone)]
pub struct SigmaSpec {
    name: String,
    f: SigmaFn,
    pub lipschitz: f64,
    pub growth: f64,
    pub hypotheses: Hypotheses,
}

impl std::fmt::Debug for SigmaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigmaSpec")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .field("hypotheses", &self.hypotheses)
            .finish()
    }
}

const PROBES: usize = 1000;

impl SigmaSpec {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        growth: f64,
        hypotheses: Hypotheses,
    ) -> Result<Self> {
        let spec = SigmaSpec { name: name.into(), f: Arc::new(f), lipschitz, growth, hypotheses };
        if !(lipschitz >= 0.0 && growth >= 0.0) {
            return Err(Error::Config(format!("σ '{}': declared constants must be nonnegative", spec.name)));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_, _, _| c, 0.0, c.abs(), Hypotheses { h1: true, h2: None })
            .expect("constant σ is admissible")
    }

    pub fn identity() -> Self {
        Self::new("u", |_, _, u| u, 1.0, 1.0, Hypotheses::default()).expect("identity σ is admissible")
    }

    pub fn sine() -> Self {
        Self::new("sin", |_, _, u: f64| u.sin(), 1.0, 1.0, Hypotheses::default()).expect("sin σ is admissible")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64, x: f64, u: f64) -> f64 {
        (self.f)(t, x, u)
    }

    /// σ does not depend on u.
    pub fn is_state_independent(&self) -> bool {
        self.lipschitz == 0.0
    }

    fn validate(&self) -> Result<()> {
        let mut rng = path_rng(0x5167_6d61, 0);
        let slack = 1.0 + 1e-9;
        let reject = |what: String| Err(Error::Config(format!("σ '{}' rejected: {what}", self.name)));
        for _ in 0..PROBES {
            let t = rng.random_range(0.0..10.0);
            let x = rng.random_range(-100.0..100.0);
            let mag: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
            let u = if rng.random_bool(0.5) { mag } else { -mag };
            let v = u + rng.random_range(-1.0..1.0) * mag;
            let (su, sv) = (self.eval(t, x, u), self.eval(t, x, v));
            if !su.is_finite() {
                return reject(format!("non-finite value at (t,x,u)=({t},{x},{u})"));
            }
            if self.hypotheses.h1 || self.hypotheses.h2.is_some() {
                if su.abs() > self.growth * (u.abs() + 1.0) * slack {
                    return reject(format!("|σ({t},{x},{u})| = {} exceeds {}(|u|+1)", su.abs(), self.growth));
                }
                if (su - sv).abs() > self.lipschitz * (u - v).abs() * slack + 1e-12 * su.abs().max(sv.abs()) {
                    return reject(format!("Lipschitz constant {} violated between u={u} and v={v}", self.lipschitz));
                }
            }
            if let Some((h, p)) = self.hypotheses.h2 {
                self.check_h2(t, x, u, v, h, p)?;
            }
        }
        Ok(())
    }

    fn check_h2(&self, t: f64, x: f64, u: f64, v: f64, h: f64, p: u32) -> Result<()> {
        let c = self.lipschitz.max(self.growth);
        let du = |x: f64, u: f64| {
            let e = 1e-5 * (1.0 + u.abs());
            (self.eval(t, x, u + e) - self.eval(t, x, u - e)) / (2.0 * e)
        };
        let dxu = |x: f64, u: f64| {
            let e = 1e-4 * (1.0 + x.abs());
            (du(x + e, u) - du(x - e, u)) / (2.0 * e)
        };
        let hp = HurstParameter::new(h)?;
        let lam = Weight::for_hurst(hp).eval(x);
        let tol = 1e-4 * (1.0 + c);
        let fail = |what: &str| Err(Error::Config(format!("σ '{}' violates (H2): {what} at (t,x,u)=({t},{x},{u})", self.name)));
        if du(x, u).abs() > c + tol {
            return fail("|σ'_u| bound");
        }
        if dxu(x, u).abs() > c + tol {
            return fail("|σ''_xu| bound");
        }
        if lam.powf(-1.0 / p as f64) * (du(x, u) - du(x, v)).abs() > c * (u - v).abs() + tol {
            return fail("weighted Lipschitz bound on σ'_u");
        }
        Ok(())
    }
}

/// Values of one solve on the grid nodes: row n holds u(t_n, ·).
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
    pub sigma: SigmaSpec,
    pub eps: f64,
    pub initial: Vec<f64>,
    pub noise_seed: u64,
}

impl SolutionField {
    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[n * nx..(n + 1) * nx]
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.values[n * self.grid.nx + j]
    }
}

/// Heat and noise symbols on the padded periodic grid.
pub struct Stepper {
    nx: usize,
    m: usize,
    dx: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    heat: Vec<f64>,
    noise: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &SpaceTimeGrid) -> Self {
        let nx = grid.nx;
        let m = 2 * nx;
        let dx = grid.dx();
        let dt = grid.dt();
        let mut planner = FftPlanner::new();
        let (heat, noise) = (0..m)
            .map(|k| {
                let xi = wavenumber(k, m, dx);
                let a = dt * xi * xi;
                let mult = if a == 0.0 { 1.0 } else { (-(-2.0 * a).exp_m1() / (2.0 * a)).sqrt() };
                ((-a).exp(), mult)
            })
            .unzip();
        Stepper { nx, m, dx, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m), heat, noise }
    }

    pub fn padded_len(&self) -> usize {
        self.m
    }

    /// state ← S state + A(forcing / dx). `state` has the padded length;
    /// `forcing` lives on the nx physical nodes.
    pub fn step(&self, state: &mut [f64], forcing: &[f64], buf: &mut Vec<Complex<f64>>) {
        let m = self.m;
        buf.clear();
        buf.extend((0..m).map(|k| Complex::new(state[k], if k < self.nx { forcing[k] / self.dx } else { 0.0 })));
        self.fwd.process(buf);
        // Split the packed transform into the two real inputs' transforms.
        let z: Vec<Complex<f64>> = buf.clone();
        for k in 0..m {
            let zc = z[(m - k) % m].conj();
            let u = (z[k] + zc) * 0.5;
            let f = (z[k] - zc) * Complex::new(0.0, -0.5);
            buf[k] = u * self.heat[k] + f * self.noise[k];
        }
        self.inv.process(buf);
        let scale = 1.0 / m as f64;
        for k in 0..m {
            state[k] = buf[k].re * scale;
        }
    }

    fn transform(&self, data: &[f64]) -> Vec<Complex<f64>> {
        let mut z: Vec<Complex<f64>> = (0..self.m).map(|k| Complex::new(if k < self.nx { data[k] } else { 0.0 }, 0.0)).collect();
        self.fwd.process(&mut z);
        z
    }

    fn inverse_real(&self, mut z: Vec<Complex<f64>>) -> Vec<f64> {
        self.inv.process(&mut z);
        z[..self.nx].iter().map(|c| c.re / self.m as f64).collect()
    }
}

fn wavenumber(k: usize, m: usize, dx: f64) -> f64 {
    let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    2.0 * PI * kk / (m as f64 * dx)
}

fn prepare_noise(grid: &SpaceTimeGrid, sigma: &SigmaSpec, noise: &NoiseRealization, eps: f64) -> Result<NoiseRealization> {
    if noise.grid != *grid {
        return Err(Error::Config("noise realization lives on a different grid".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("mollification scale {eps} must be nonnegative")));
    }
    if eps == 0.0 && !sigma.is_state_independent() {
        return Err(Error::Config(format!("σ '{}' depends on u and needs eps > 0", sigma.name())));
    }
    if noise.mollification_eps == eps {
        Ok(noise.clone())
    } else if noise.mollification_eps == 0.0 {
        mollify(noise, eps)
    } else {
        Err(Error::Config(format!("noise already mollified at {} but eps = {eps} requested", noise.mollification_eps)))
    }
}

fn sample_initial(grid: &SpaceTimeGrid, u0: &dyn Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.nx).map(|j| u0(grid.x(j))).collect()
}

/// March the mild form. `forcing(n, row)` returns σ values on the nodes at
/// step n given the current row.
fn march(
    grid: &SpaceTimeGrid,
    stepper: &Stepper,
    initial: &[f64],
    noise: &NoiseRealization,
    mut sigma_row: impl FnMut(usize, &[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let nx = grid.nx;
    let mut values = Vec::with_capacity((grid.nt + 1) * nx);
    values.extend_from_slice(initial);
    let mut state = vec![0.0; stepper.padded_len()];
    state[..nx].copy_from_slice(initial);
    let mut buf = Vec::with_capacity(stepper.padded_len());
    for n in 0..grid.nt {
        let s = sigma_row(n, &state[..nx]);
        let forcing: Vec<f64> = s.iter().zip(noise.slice(n)).map(|(a, b)| a * b).collect();
        stepper.step(&mut state, &forcing, &mut buf);
        if let Some(j) = state[..nx].iter().position(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::Numerical(format!(
                "blow-up at step {} (t = {}, x = {}): |u| = {:e}",
                n + 1,
                grid.t(n + 1),
                grid.x(j),
                state[j].abs()
            )));
        }
        values.extend_from_slice(&state[..nx]);
    }
    Ok(values)
}

/// Explicit mild stepping of du = Δu dt + σ(t,x,u) W_ε(dt,dx).
pub fn solve_mild(
    grid: &SpaceTimeGrid,
    sigma: &SigmaSpec,
    u0: &dyn Fn(f64) -> f64,
    noise: &NoiseRealization,
    eps: f64,
) -> Result<SolutionField> {
    let noise = prepare_noise(grid, sigma, noise, eps)?;
    let stepper = Stepper::new(grid);
    let initial = sample_initial(grid, u0);
    let values = march(grid, &stepper, &initial, &noise, |n, row| {
        let t = grid.t(n);
        row.iter().enumerate().map(|(j, u)| sigma.eval(t, grid.x(j), *u)).collect()
    })?;
    Ok(SolutionField { grid: *grid, values, sigma: sigma.clone(), eps, initial, noise_seed: noise.seed })
}

/// Picard iteration u^{k+1} = G*u0 + ∫∫ G σ(u^k) W_ε on one noise path,
/// stopped when the pathwise Z^p distance of successive iterates < tol.
pub fn picard_solve(
    grid: &SpaceTimeGrid,
    sigma: &SigmaSpec,
    u0: &dyn Fn(f64) -> f64,
    noise: &NoiseRealization,
    eps: f64,
    p: u32,
    tol: f64,
    max_iter: usize,
) -> Result<(SolutionField, Vec<f64>)> {
    check_p(p)?;
    let h = noise.h;
    let noise = prepare_noise(grid, sigma, noise, eps)?;
    let stepper = Stepper::new(grid);
    let initial = sample_initial(grid, u0);
    let zero = NoiseRealization { increments: vec![0.0; noise.increments.len()], ..noise.clone() };
    let mut current = march(grid, &stepper, &initial, &zero, |_, _| vec![0.0; grid.nx])?;
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let prev = current;
        let nx = grid.nx;
        current = march(grid, &stepper, &initial, &noise, |n, _| {
            let t = grid.t(n);
            (0..nx).map(|j| sigma.eval(t, grid.x(j), prev[n * nx + j])).collect()
        })?;
        let diff: Vec<f64> = current.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let d = z_norm_values(grid, &[&diff], p, h, 1)?.z_norm;
        trace.push(d);
        if d < tol {
            let field = SolutionField { grid: *grid, values: current, sigma: sigma.clone(), eps, initial, noise_seed: noise.seed };
            return Ok((field, trace));
        }
    }
    Err(Error::NotConverged { what: format!("Picard iteration for σ '{}'", sigma.name()), trace })
}

fn check_p(p: u32) -> Result<()> {
    if p < 2 || !p.is_multiple_of(2) {
        Err(Error::Config(format!("moment order p = {p} must be an even integer ≥ 2")))
    } else {
        Ok(())
    }
}

/// λ-mass of the node cells; the end cells extend to ±∞, which amounts to
/// extending a field by its boundary values.
pub fn weight_cells(grid: &SpaceTimeGrid, h: HurstParameter) -> Vec<f64> {
    let nu = 1.0 - 2.0 * h.h();
    let t = StudentsT::new(0.0, 1.0, nu).expect("positive degrees of freedom");
    let cdf = |x: f64| t.cdf(x * nu.sqrt());
    let dx = grid.dx();
    let nx = grid.nx;
    (0..nx)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { cdf(grid.x(j) - 0.5 * dx) };
            let hi = if j == nx - 1 { 1.0 } else { cdf(grid.x(j) + 0.5 * dx) };
            hi - lo
        })
        .collect()
}

/// ∫ |h|^{2H-2} dh over the cells of the grid shifts k = 1..K (one side),
/// plus the inner half cell weighted for a linear increment profile.
pub(crate) fn shift_weights(dx: f64, k_max: usize, h: HurstParameter) -> Vec<f64> {
    let q = 2.0 * h.h() - 1.0;
    let prim = |a: f64| a.powf(q) / q;
    (1..=k_max)
        .map(|k| {
            let lo = (k as f64 - 0.5) * dx;
            let hi = if k == k_max { k as f64 * dx } else { (k as f64 + 0.5) * dx };
            let mut w = prim(hi) - prim(lo);
            if k == 1 {
                // ‖Δ_h‖² ≈ (h/dx)² ‖Δ_dx‖² on (0, dx/2).
                w += dx.powf(q) * 0.5f64.powf(2.0 * h.h() + 1.0) / (2.0 * h.h() + 1.0);
            }
            w
        })
        .collect()
}

/// ∫_{|h|>r} |h|^{2H-2} dh over one side.
pub(crate) fn one_sided_tail(r: f64, h: HurstParameter) -> f64 {
    r.powf(2.0 * h.h() - 1.0) / (1.0 - 2.0 * h.h())
}

/// Weighted moment norms of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub p: u32,
    pub sup_lp: f64,
    pub sup_nstar: f64,
    pub z_norm: f64,
    pub sup_nstar_on_grid: f64,
    pub sup_nstar_tail: f64,
}

/// Monte Carlo Z^p_{λ,T} norm of an ensemble of solutions.
pub fn z_norm(ensemble: &[SolutionField], p: u32, h: HurstParameter) -> Result<NormReport> {
    let first = ensemble.first().ok_or_else(|| Error::Config("empty ensemble".into()))?;
    let paths: Vec<&[f64]> = ensemble.iter().map(|f| f.values.as_slice()).collect();
    z_norm_values(&first.grid, &paths, p, h, 30)
}

/// Z^p norm of path-major fields of shape (nt+1) × nx.
pub fn z_norm_values(grid: &SpaceTimeGrid, paths: &[&[f64]], p: u32, h: HurstParameter, min_paths: usize) -> Result<NormReport> {
    check_p(p)?;
    if paths.len() < min_paths {
        return Err(Error::Config(format!("{} paths given, at least {min_paths} needed", paths.len())));
    }
    let nx = grid.nx;
    let rows = grid.nt + 1;
    if paths.iter().any(|v| v.len() != rows * nx) {
        return Err(Error::Config("field shape does not match the grid".into()));
    }
    let cells = weight_cells(grid, h);
    let k_max = (nx - 1) / 2;
    let sw = shift_weights(grid.dx(), k_max, h);
    let tail = 2.0 * one_sided_tail(k_max as f64 * grid.dx(), h);
    let pf = p as f64;
    let per_time: Vec<(f64, f64, f64)> = (0..rows)
        .into_par_iter()
        .map(|n| {
            let row = |v: &[f64]| v[n * nx..(n + 1) * nx].to_vec();
            let rs: Vec<Vec<f64>> = paths.iter().map(|v| row(v)).collect();
            let moment = |f: &dyn Fn(&[f64], usize) -> f64| -> f64 {
                let s: f64 = (0..nx).map(|j| cells[j] * rs.iter().map(|r| f(r, j).abs().powi(p as i32)).sum::<f64>()).sum();
                (s / rs.len() as f64).powf(1.0 / pf)
            };
            let lp = moment(&|r, j| r[j]);
            let mut on_grid = 0.0;
            for (k, w) in sw.iter().enumerate() {
                let k = k + 1;
                let plus = moment(&|r, j| r[(j + k).min(nx - 1)] - r[j]);
                let minus = moment(&|r, j| r[j.saturating_sub(k)] - r[j]);
                on_grid += w * (plus * plus + minus * minus);
            }
            (lp, on_grid, 4.0 * lp * lp * tail)
        })
        .collect();
    let sup_lp = per_time.iter().map(|v| v.0).fold(0.0, f64::max);
    let nstar: Vec<f64> = per_time.iter().map(|v| (v.1 + v.2).sqrt()).collect();
    let (arg, sup_nstar) = nstar.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    Ok(NormReport {
        p,
        sup_lp,
        sup_nstar,
        z_norm: sup_lp + sup_nstar,
        sup_nstar_on_grid: per_time[arg].1.sqrt(),
        sup_nstar_tail: per_time[arg].2.sqrt(),
    })
}

/// (∫ |x|^p λ(x) dx)^{1/p}; finite only when p < 1-2H.
pub fn weighted_moment(p: f64, h: HurstParameter) -> Result<f64> {
    let w = Weight::for_hurst(h);
    let quad = Quad::new(1e-12, 1e-10);
    let body = quad.integrate_singular(|x: f64| x.powf(p) * w.eval(x), 0.0, 1.0, p);
    let tail = quad.integrate_decaying(|x: f64| x.powf(p) * w.eval(x), 1.0, 1.0);
    let total = body.add(tail);
    if !total.converged || !total.value.is_finite() {
        return Err(Error::Quadrature {
            what: format!("weighted moment of order {p} (diverges for p ≥ 1-2H)"),
            value: total.value,
            error: total.error,
        });
    }
    Ok((2.0 * total.value).powf(1.0 / p))
}

/// N_{1/2-H}u(x) split into the grid-shift part and the tail bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NValue {
    pub on_grid_sq: f64,
    pub tail_sq: f64,
}

impl NValue {
    pub fn on_grid(&self) -> f64 {
        self.on_grid_sq.sqrt()
    }

    pub fn bound(&self) -> f64 {
        (self.on_grid_sq + self.tail_sq).sqrt()
    }
}

/// N_{1/2-H} of a single row at node j: shifts stay inside the row, shifts
/// beyond its edges are bounded by 2 sup|u|.
pub fn n_operator(row: &[f64], dx: f64, h: HurstParameter, j: usize) -> Result<NValue> {
    let nx = row.len();
    if j >= nx {
        return Err(Error::Config(format!("node {j} outside a row of {nx} values")));
    }
    let reach_right = nx - 1 - j;
    let reach_left = j;
    let side = |reach: usize, dir: isize| -> f64 {
        if reach == 0 {
            return 0.0;
        }
        shift_weights(dx, reach, h)
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let other = (j as isize + dir * (k as isize + 1)) as usize;
                w * (row[other] - row[j]).powi(2)
            })
            .sum()
    };
    let on = side(reach_right, 1) + side(reach_left, -1);
    let sup = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let r = |reach: usize| if reach == 0 { 0.5 * dx } else { reach as f64 * dx };
    let tail = 4.0 * sup * sup * (one_sided_tail(r(reach_right), h) + one_sided_tail(r(reach_left), h));
    Ok(NValue { on_grid_sq: on, tail_sq: tail })
}

/// ∫_0^r ∫ (r-s)^{-α} G_{r-s}(z-y) v(s,y) W(ds,dy) and the field
/// Φ = (sin πα/π) ∫_0^t (t-r)^{α-1} G_{t-r} * J_α(r) dr, returned with
/// shape (nt+1) × nx. `v` has nt rows of nx values.
pub fn factorization_eval(noise: &NoiseRealization, v: &[f64], alpha: f64, grid: &SpaceTimeGrid) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("factorization order α = {alpha} must lie in (0, 1)")));
    }
    check_integrand(noise, v, grid)?;
    let stepper = Stepper::new(grid);
    let (nt, nx, m, dt) = (grid.nt, grid.nx, stepper.m, grid.dt());
    let forcing: Vec<Vec<Complex<f64>>> = (0..nt)
        .into_par_iter()
        .map(|n| {
            let f: Vec<f64> = (0..nx).map(|j| v[n * nx + j] * noise.get(n, j) / stepper.dx).collect();
            let mut z = stepper.transform(&f);
            z.iter_mut().zip(&stepper.noise).for_each(|(a, b)| *a *= *b);
            z
        })
        .collect();
    // Cell averages of (r-s)^{-α} over the noise cells at lag j ≥ 1.
    let a: Vec<f64> = (0..=nt)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                dt.powf(-alpha) * ((j as f64).powf(1.0 - alpha) - (j as f64 - 1.0).powf(1.0 - alpha)) / (1.0 - alpha)
            }
        })
        .collect();
    // Hat-function weights of (t-r)^{α-1}: J is piecewise linear in r.
    let b: Vec<f64> = (0..=nt)
        .map(|j| {
            let jf = j as f64;
            let seg = |lo: f64, hi: f64, c0: f64, c1: f64| {
                c0 * (hi.powf(alpha) - lo.powf(alpha)) / alpha + c1 * (hi.powf(alpha + 1.0) - lo.powf(alpha + 1.0)) / (alpha + 1.0)
            };
            let left = if j >= 1 { seg(jf - 1.0, jf, -(jf - 1.0), 1.0) } else { 0.0 };
            dt.powf(alpha) * (left + seg(jf, jf + 1.0, jf + 1.0, -1.0))
        })
        .collect();
    let decay: Vec<f64> = stepper.heat.clone();
    // Ĵ_n = Σ_{m<n} a_{n-m} E^{n-m-1} F̂_m for n = 1..nt, per mode.
    let per_mode: Vec<Vec<Complex<f64>>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let e = decay[k];
            let mut pow = vec![1.0; nt + 1];
            for i in 1..=nt {
                pow[i] = pow[i - 1] * e;
            }
            let mut j_hat = vec![Complex::new(0.0, 0.0); nt + 1];
            for n in 1..=nt {
                let mut s = Complex::new(0.0, 0.0);
                for mm in 0..n {
                    s += forcing[mm][k] * (a[n - mm] * pow[n - mm - 1]);
                }
                j_hat[n] = s;
            }
            let pre = (PI * alpha).sin() / PI;
            let mut phi = vec![Complex::new(0.0, 0.0); nt + 1];
            for t in 1..=nt {
                let mut s = Complex::new(0.0, 0.0);
                for n in 1..=t {
                    s += j_hat[n] * (b[t - n] * pow[t - n]);
                }
                phi[t] = s * pre;
            }
            phi
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..=nt).into_par_iter().map(|t| stepper.inverse_real((0..m).map(|k| per_mode[k][t]).collect())).collect();
    Ok(rows.concat())
}

/// Direct stochastic convolution ∫_0^t ∫ G_{t-s}(x-y) v(s,y) W(ds,dy) with
/// the same stepping as the solver.
pub fn stochastic_convolution(noise: &NoiseRealization, v: &[f64], grid: &SpaceTimeGrid) -> Result<Vec<f64>> {
    check_integrand(noise, v, grid)?;
    let stepper = Stepper::new(grid);
    let nx = grid.nx;
    march(grid, &stepper, &vec![0.0; nx], noise, |n, _| v[n * nx..(n + 1) * nx].to_vec())
}

fn check_integrand(noise: &NoiseRealization, v: &[f64], grid: &SpaceTimeGrid) -> Result<()> {
    if noise.grid != *grid {
        return Err(Error::Config("noise realization lives on a different grid".into()));
    }
    if v.len() != grid.nt * grid.nx {
        return Err(Error::Config(format!("integrand has {} values, expected nt × nx = {}", v.len(), grid.nt * grid.nx)));
    }
    Ok(())
}

/// Relative RMS distance ‖a - b‖ / ‖b‖.
pub fn relative_rms(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// One factorization comparison on shared noise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub alphas: Vec<f64>,
    pub rms_vs_direct: Vec<f64>,
    pub alpha_spread: f64,
    pub pass: bool,
}

/// Factorization against direct convolution for v ≡ 1 on one noise path.
pub fn factorization_check(grid: &SpaceTimeGrid, h: HurstParameter, alphas: &[f64], seed: u64, tol: f64) -> Result<FactorizationReport> {
    let noise = sample_noise(grid, h, seed)?;
    let v = vec![1.0; grid.nt * grid.nx];
    let direct = stochastic_convolution(&noise, &v, grid)?;
    let fields: Vec<Vec<f64>> = alphas.iter().map(|&a| factorization_eval(&noise, &v, a, grid)).collect::<Result<_>>()?;
    let rms_vs_direct: Vec<f64> = fields.iter().map(|f| relative_rms(f, &direct)).collect();
    let mut alpha_spread: f64 = 0.0;
    for i in 0..fields.len() {
        for j in 0..i {
            let num: f64 = fields[i].iter().zip(&fields[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let den: f64 = direct.iter().map(|y| y * y).sum();
            alpha_spread = alpha_spread.max((num / den).sqrt());
        }
    }
    let pass = rms_vs_direct.iter().all(|r| *r < tol) && alpha_spread < tol;
    Ok(FactorizationReport { alphas: alphas.to_vec(), rms_vs_direct, alpha_spread, pass })
}

/// One covariance entry of the σ ≡ 1 calibration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub x: [f64; 2],
    pub oracle: f64,
    pub discrete: f64,
    pub monte_carlo: MeanEstimate,
    pub grid_bias: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub t: f64,
    pub n_paths: usize,
    pub entries: Vec<CalibrationEntry>,
    pub max_grid_bias: f64,
    pub pass: bool,
}

/// Exact covariance of the discrete additive scheme at the final time
/// between nodes i and j, computed from the noise-cell covariance.
pub fn discrete_additive_covariance(grid: &SpaceTimeGrid, h: HurstParameter, i: usize, j: usize) -> f64 {
    let stepper = Stepper::new(grid);
    let (nx, m, dx, dt) = (grid.nx, stepper.m, grid.dx(), grid.dt());
    let r: Vec<f64> = (0..nx).map(|k| dx.powf(2.0 * h.h()) * fgn_autocovariance(k, h)).collect();
    let toeplitz = |q: &[f64]| -> Vec<f64> { (0..nx).map(|a| (0..nx).map(|b| r[a.abs_diff(b)] * q[b]).sum()).collect() };
    let mut total = 0.0;
    for lag in 0..grid.nt {
        let symbol: Vec<Complex<f64>> =
            (0..m).map(|k| Complex::new(stepper.heat[k].powi(lag as i32) * stepper.noise[k] / dx, 0.0)).collect();
        let mut z = symbol;
        stepper.inv.process(&mut z);
        let c: Vec<f64> = z.iter().map(|v| v.re / m as f64).collect();
        let row = |i: usize| -> Vec<f64> { (0..nx).map(|a| c[(i + m - a) % m]).collect() };
        let (qi, qj) = (row(i), row(j));
        let rq = toeplitz(&qj);
        total += qi.iter().zip(&rq).map(|(a, b)| a * b).sum::<f64>();
    }
    dt * total
}

/// σ ≡ 1, u0 = 0: Monte Carlo covariance at the final time against the
/// continuum oracle, with the discrete-scheme covariance as grid bias.
pub fn calibrate_additive(grid: &SpaceTimeGrid, h: HurstParameter, probes: &[f64], n_paths: usize, seed: u64) -> Result<CalibrationReport> {
    let idx: Vec<usize> = probes
        .iter()
        .map(|&x| {
            let j = ((x + grid.x_half_width) / grid.dx()).round();
            if j < 0.0 || j as usize >= grid.nx || (grid.x(j as usize) - x).abs() > 1e-9 * grid.dx().max(1.0) {
                Err(Error::Config(format!("probe x = {x} is not a grid node")))
            } else {
                Ok(j as usize)
            }
        })
        .collect::<Result<_>>()?;
    let sigma = SigmaSpec::constant(1.0);
    let samples: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let noise = sample_noise(grid, h, derive_seed(seed, k as u64))?;
            let sol = solve_mild(grid, &sigma, &|_| 0.0, &noise, 0.0)?;
            Ok(idx.iter().map(|&j| sol.get(grid.nt, j)).collect())
        })
        .collect::<Result<_>>()?;
    let kernel = CovarianceKernel::new(h);
    let t = grid.t_max;
    let mut entries = Vec::new();
    for a in 0..idx.len() {
        for b in a..idx.len() {
            let xa: Vec<f64> = samples.iter().map(|s| s[a]).collect();
            let xb: Vec<f64> = samples.iter().map(|s| s[b]).collect();
            let mc = covariance_estimate(&xa, &xb);
            let oracle = kernel.cov((t, probes[a]), (t, probes[b]));
            let discrete = discrete_additive_covariance(grid, h, idx[a], idx[b]);
            let grid_bias = (discrete - oracle) / oracle;
            let pass = (mc.mean - oracle).abs() <= 3.0 * mc.std_error + (discrete - oracle).abs() && grid_bias.abs() < 0.1;
            entries.push(CalibrationEntry { x: [probes[a], probes[b]], oracle, discrete, monte_carlo: mc, grid_bias, pass });
        }
    }
    let max_grid_bias = entries.iter().map(|e| e.grid_bias.abs()).fold(0.0, f64::max);
    let pass = entries.iter().all(|e| e.pass);
    Ok(CalibrationReport { t, n_paths, entries, max_grid_bias, pass })
}

/// p-th moment of Σ g ΔW against √(4p) c_H (∫∫ N² g)^{1/2}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BdgRow {
    pub integrand: usize,
    pub p: u32,
    pub moment: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// c_H fixed by equality in the p = 2 case: c_H = √(c3 / 8), with c3 the
/// increment-form constant.
pub fn bdg_constant(h: HurstParameter) -> f64 {
    (h.increment_constant() / 8.0).sqrt()
}

pub fn bdg_monitor(
    grid: &SpaceTimeGrid,
    h: HurstParameter,
    integrands: &[ElementaryIntegrand],
    ps: &[u32],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<BdgRow>> {
    let cells: Vec<Vec<(usize, f64)>> = integrands.iter().map(|g| elementary_cells(g, grid)).collect();
    let samples: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let noise = sample_noise(grid, h, derive_seed(seed, k as u64))?;
            Ok(cells.iter().map(|c| c.iter().map(|(i, w)| w * noise.increments[*i]).sum()).collect())
        })
        .collect::<Result<_>>()?;
    let quad = Quad::new(1e-12, 1e-10);
    let c_h = bdg_constant(h);
    let c3 = h.increment_constant();
    let mut rows = Vec::new();
    for (gi, g) in integrands.iter().enumerate() {
        let tf = g.to_test_function();
        let nn = inner_product(&tf, &tf, h, InnerForm::Increment, &quad)?.value / c3;
        for &p in ps {
            check_p(p)?;
            let moment = (samples.iter().map(|s| s[gi].abs().powi(p as i32)).sum::<f64>() / n_paths as f64).powf(1.0 / p as f64);
            let rhs = (4.0 * p as f64).sqrt() * c_h * nn.sqrt();
            rows.push(BdgRow { integrand: gi, p, moment, rhs, pass: moment <= rhs });
        }
    }
    Ok(rows)
}

fn elementary_cells(g: &ElementaryIntegrand, grid: &SpaceTimeGrid) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for i in 0..grid.nt {
        for j in 0..grid.nx {
            let tm = grid.t(i) + 0.5 * grid.dt();
            let xm = grid.x(j) + 0.5 * grid.dx();
            let v: f64 = g.blocks.iter().filter(|(_, t, x)| tm > t[0] && tm < t[1] && xm > x[0] && xm < x[1]).map(|(c, _, _)| c).sum();
            if v != 0.0 {
                out.push((i * grid.nx + j, v));
            }
        }
    }
    out
}

/// Weighted sups of Φ = ∫∫ G v W for a deterministic test field v.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSupRow {
    pub name: String,
    pub z_norm: f64,
    pub sup_phi: f64,
    pub sup_n_phi: f64,
    pub ratio_phi: f64,
    pub ratio_n_phi: f64,
}

/// ‖sup λ^{1/p}|Φ|‖_p and ‖sup λ^{1/p} N Φ‖_p over the grid, against the
/// Z^p norm of v.
pub fn weighted_sup_monitor(
    grid: &SpaceTimeGrid,
    h: HurstParameter,
    p: u32,
    fields: &[(String, FieldFn)],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<WeightedSupRow>> {
    check_p(p)?;
    let w = Weight::for_hurst(h);
    let nx = grid.nx;
    let lam: Vec<f64> = (0..nx).map(|j| w.eval(grid.x(j)).powf(1.0 / p as f64)).collect();
    let mut out = Vec::new();
    for (name, f) in fields {
        let v: Vec<f64> = (0..grid.nt).flat_map(|n| (0..nx).map(move |j| (n, j))).map(|(n, j)| f(grid.t(n), grid.x(j))).collect();
        let v_rows: Vec<f64> = (0..=grid.nt).flat_map(|n| (0..nx).map(move |j| (n, j))).map(|(n, j)| f(grid.t(n), grid.x(j))).collect();
        let zn = z_norm_values(grid, &[&v_rows], p, h, 1)?.z_norm;
        let sups: Vec<(f64, f64)> = (0..n_paths)
            .into_par_iter()
            .map(|k| {
                let noise = sample_noise(grid, h, derive_seed(seed, k as u64))?;
                let phi = stochastic_convolution(&noise, &v, grid)?;
                let mut s_phi: f64 = 0.0;
                let mut s_n: f64 = 0.0;
                for n in 1..=grid.nt {
                    let row = &phi[n * nx..(n + 1) * nx];
                    for j in (0..nx).step_by(8) {
                        s_phi = s_phi.max(lam[j] * row[j].abs());
                        s_n = s_n.max(lam[j] * n_operator(row, grid.dx(), h, j)?.on_grid());
                    }
                }
                Ok((s_phi, s_n))
            })
            .collect::<Result<_>>()?;
        let pm =
            |f: &dyn Fn(&(f64, f64)) -> f64| (sups.iter().map(|s| f(s).powi(p as i32)).sum::<f64>() / n_paths as f64).powf(1.0 / p as f64);
        let sup_phi = pm(&|s| s.0);
        let sup_n_phi = pm(&|s| s.1);
        out.push(WeightedSupRow {
            name: name.clone(),
            z_norm: zn,
            sup_phi,
            sup_n_phi,
            ratio_phi: sup_phi / zn,
            ratio_n_phi: sup_n_phi / zn,
        });
    }
    Ok(out)
}

/// Z² distance between Picard solutions started from u0 and u0 + δ.
pub fn perturbation_trend(
    grid: &SpaceTimeGrid,
    sigma: &SigmaSpec,
    u0: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    noise: &NoiseRealization,
    eps: f64,
    deltas: &[f64],
) -> Result<Vec<f64>> {
    let (base, _) = picard_solve(grid, sigma, &|x| u0(x), noise, eps, 2, 1e-10, 200)?;
    deltas
        .iter()
        .map(|&d| {
            let (pert, _) = picard_solve(grid, sigma, &|x| u0(x) + d, noise, eps, 2, 1e-10, 200)?;
            let diff: Vec<f64> = pert.values.iter().zip(&base.values).map(|(a, b)| a - b).collect();
            Ok(z_norm_values(grid, &[&diff], 2, noise.h, 1)?.z_norm)
        })
        .collect()
}

/// L ≥ domain + 6√T keeps the Gaussian kernel's mass outside [-L, L] below
/// 10^{-8} over the domain of interest.
pub fn padded_half_width(domain: f64, t: f64) -> f64 {
    domain + 6.0 * t.sqrt()
}
