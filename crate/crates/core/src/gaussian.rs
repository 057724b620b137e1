//! The additive-noise solution u_add(t,x) = ∫_0^t∫ G_{t-s}(x-y) W(ds,dy) as
//! a Gaussian field: covariance, natural metric, exact sampling and
//! increment fields.
//!
//! Integrating time out of the Plancherel form gives
//! Cov = c1 ∫_0^∞ ξ^{-1-2H} cos(ξz) (e^{-|t-s|ξ²} - e^{-(t+s)ξ²}) dξ.
//! Splitting the bracket as (e^{-aξ²} - 1) - (e^{-bξ²} - 1) yields
//! Cov = Φ(z, |t-s|) - Φ(z, t+s) with Φ(z, a) = a^H ψ(|z|/√a) and
//! ψ(w) = (c1/2) Γ(-H) ₁F₁(-H; 1/2; -w²/4), Φ(z, 0) = -|z|^{2H}/4.
//! The quadrature form is the reference; Gram matrices use the ψ form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::noise::HurstParameter;
use crate::quad::{cos_power_tail, Quad};
use crate::rng::path_rng;

/// A space-time point (t, x).
pub type Point = (f64, f64);

/// Covariance of u_add by adaptive quadrature of the spectral integral.
pub fn covariance_uadd(p: Point, q: Point, h: HurstParameter) -> Result<f64> {
    covariance_uadd_with(p, q, h, &Quad::new(1e-15, 1e-12))
}

pub fn covariance_uadd_with(p: Point, q: Point, h: HurstParameter, quad: &Quad) -> Result<f64> {
    let ((t, x), (s, y)) = (p, q);
    if t < 0.0 || s < 0.0 {
        return Err(Error::Domain(format!("negative time in ({t}, {s})")));
    }
    if t == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let hh = h.h();
    let a = (t - s).abs();
    let b = t + s;
    let z = (x - y).abs();
    let q = -1.0 - 2.0 * hh;
    let f = |xi: f64| {
        let bracket = (-a * xi * xi).exp() * -(-(b - a) * xi * xi).exp_m1();
        xi.powf(q) * (xi * z).cos() * bracket
    };
    let cutoff = 45.0f64;
    let mut upper = if a > 0.0 { (cutoff / a).sqrt() } else { (cutoff / b).sqrt() };
    if a == 0.0 && z > 0.0 {
        upper = upper.max(60.0 / z);
    }
    let period = if z > 0.0 { PI / z } else { f64::INFINITY };
    let head_end = (1.0 / b.sqrt()).min(period).min(upper);
    let mut est = quad.integrate_singular(f, 0.0, head_end, 1.0 - 2.0 * hh);
    est = est.add(quad.integrate_panels(f, head_end, upper, period.min(upper / 8.0)));
    let mut value = est.value;
    if a == 0.0 {
        // Beyond the cutoff the bracket is 1 to double precision.
        value += if z > 0.0 { z.powf(2.0 * hh) * cos_power_tail(-q, upper * z) } else { upper.powf(-2.0 * hh) / (2.0 * hh) };
    }
    if !est.converged || !value.is_finite() {
        return Err(Error::quad("u_add covariance", est));
    }
    Ok(h.c1() * value)
}

/// Fast evaluation of the covariance through Φ and ψ.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceKernel {
    h: f64,
    pref: f64,
    lead: f64,
}

impl CovarianceKernel {
    pub fn new(h: HurstParameter) -> Self {
        let hh = h.h();
        let pref = 0.5 * h.c1() * gamma(-hh);
        // Large-argument coefficient of ψ(w) ~ lead · w^{2H}; equals -1/4.
        let lead = pref * PI.sqrt() / gamma(0.5 + hh) * 2f64.powf(-2.0 * hh);
        CovarianceKernel { h: hh, pref, lead }
    }

    /// ₁F₁(-H; 1/2; -x) for x ≤ 40 by e^{-x} ₁F₁(1/2+H; 1/2; x), whose
    /// terms are all positive.
    fn kummer_series(&self, x: f64) -> f64 {
        let h = self.h;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        while term > 1e-17 * sum {
            term *= (0.5 + h + n) / (0.5 + n) * x / (n + 1.0);
            sum += term;
            n += 1.0;
        }
        (-x).exp() * sum
    }

    /// Σ_{k≥1} (-H)_k (1/2-H)_k / k! x^{-k}, the asymptotic series of
    /// ₁F₁(-H; 1/2; -x) Γ(1/2+H) / (Γ(1/2) x^H) minus its leading 1.
    fn asymptotic_excess(&self, x: f64) -> f64 {
        let h = self.h;
        let mut term = 1.0f64;
        let mut sum = 0.0f64;
        let mut k = 0.0;
        loop {
            let next = term * (k - h) * (k + 0.5 - h) / ((k + 1.0) * x);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum
    }

    pub fn psi(&self, w: f64) -> f64 {
        let x = 0.25 * w * w;
        if x <= 40.0 {
            self.pref * self.kummer_series(x)
        } else {
            self.lead * w.powf(2.0 * self.h) * (1.0 + self.asymptotic_excess(x))
        }
    }

    /// Φ(z, a) - Φ(z, 0); the large-|z| leading terms cancel analytically.
    pub fn phi_excess(&self, z: f64, a: f64) -> f64 {
        let z = z.abs();
        if a == 0.0 {
            return 0.0;
        }
        let x = z * z / (4.0 * a);
        if x <= 40.0 {
            a.powf(self.h) * self.pref * self.kummer_series(x) - self.lead * z.powf(2.0 * self.h)
        } else {
            self.lead * z.powf(2.0 * self.h) * self.asymptotic_excess(x)
        }
    }

    pub fn phi(&self, z: f64, a: f64) -> f64 {
        self.lead * z.abs().powf(2.0 * self.h) + self.phi_excess(z, a)
    }

    pub fn cov(&self, p: Point, q: Point) -> f64 {
        if p.0 <= 0.0 || q.0 <= 0.0 {
            return 0.0;
        }
        let z = p.1 - q.1;
        self.phi_excess(z, (p.0 - q.0).abs()) - self.phi_excess(z, p.0 + q.0)
    }

    pub fn variance(&self, t: f64) -> f64 {
        self.cov((t, 0.0), (t, 0.0))
    }
}

fn metric_from_sq(sq: f64, scale: f64) -> Result<(f64, Option<String>)> {
    if sq >= 0.0 {
        Ok((sq.sqrt(), None))
    } else if sq >= -1e-12 * scale.max(1.0) {
        Ok((0.0, Some(format!("negative radicand {sq:e} clamped to 0"))))
    } else {
        Err(Error::Numerical(format!("natural metric radicand {sq:e} is negative")))
    }
}

/// d1(p, q) = sqrt(Var u(p) + Var u(q) - 2 Cov) from the quadrature covariance.
pub fn natural_metric(p: Point, q: Point, h: HurstParameter) -> Result<f64> {
    if p == q {
        return Ok(0.0);
    }
    let vp = covariance_uadd(p, p, h)?;
    let vq = covariance_uadd(q, q, h)?;
    let c = covariance_uadd(p, q, h)?;
    Ok(metric_from_sq(vp + vq - 2.0 * c, vp + vq)?.0)
}

/// d1 through the fast kernel.
pub fn natural_metric_fast(p: Point, q: Point, k: &CovarianceKernel) -> f64 {
    let vp = k.cov(p, p);
    let vq = k.cov(q, q);
    (vp + vq - 2.0 * k.cov(p, q)).max(0.0).sqrt()
}

/// d_{1,H}(p, q) = |x-y|^H ∧ (t∧s)^{H/2} + |t-s|^{H/2}.
pub fn reference_metric(p: Point, q: Point, h: HurstParameter) -> f64 {
    let hh = h.h();
    let space = (p.1 - q.1).abs().powf(hh).min(p.0.min(q.0).powf(0.5 * hh));
    space + (p.0 - q.0).abs().powf(0.5 * hh)
}

/// d1²((t,x),(s,x)) = c1 κ [2^{H-1} t^H + 2^{H-1} s^H - (t+s)^H + |t-s|^H].
pub fn same_site_metric_sq(t: f64, s: f64, h: HurstParameter) -> f64 {
    let hh = h.h();
    let half = 2f64.powf(hh - 1.0);
    h.c1() * h.kappa() * (half * t.powf(hh) + half * s.powf(hh) - (t + s).powf(hh) + (t - s).abs().powf(hh))
}

/// Variant without the c1 factor and with a (2^{H-1}+1) coefficient,
/// κ [2^{H-1} t^H + 2^{H-1} s^H - (t+s)^H] + (2^{H-1}+1) κ (t-s)^H;
/// reported next to the exact value, never used in computations.
pub fn same_site_metric_sq_printed(t: f64, s: f64, h: HurstParameter) -> f64 {
    let hh = h.h();
    let half = 2f64.powf(hh - 1.0);
    let k = h.kappa();
    k * (half * t.powf(hh) + half * s.powf(hh) - (t + s).powf(hh)) + (half + 1.0) * k * (t - s).abs().powf(hh)
}

/// Distinct space-time points, optionally laid out as times × uniform x-grid
/// (time-major), which enables block-Toeplitz Gram assembly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSet {
    points: Vec<Point>,
    layout: Option<GridLayout>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridLayout {
    pub times: Vec<f64>,
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("point set is empty".into()));
        }
        if points.iter().any(|p| !(p.0 >= 0.0) || !p.1.is_finite()) {
            return Err(Error::Domain("points need t >= 0 and finite x".into()));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("point set has repeated points".into()));
        }
        Ok(PointSet { points, layout: None })
    }

    /// times × {x0 + j dx : j < nx}, time-major.
    pub fn grid(times: &[f64], x0: f64, dx: f64, nx: usize) -> Result<Self> {
        if !(dx > 0.0) || nx == 0 {
            return Err(Error::Domain("grid needs dx > 0 and nx >= 1".into()));
        }
        let mut points = Vec::with_capacity(times.len() * nx);
        for &t in times {
            for j in 0..nx {
                points.push((t, x0 + j as f64 * dx));
            }
        }
        let mut ps = PointSet::new(points)?;
        ps.layout = Some(GridLayout { times: times.to_vec(), x0, dx, nx });
        Ok(ps)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Largest point set accepted for dense factorization.
pub const MAX_POINTS: usize = 4096;

/// Which increment a field holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Shift {
    None,
    Space(f64),
    Time(f64),
}

/// Exact joint draws of a centered Gaussian vector. `values` is path-major:
/// path k occupies values[k n .. (k+1) n].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianField {
    pub point_set: PointSet,
    pub shift: Shift,
    pub n_paths: usize,
    pub values: Vec<f64>,
    pub covariance: Vec<f64>,
    pub jitter: f64,
    pub seed: u64,
}

impl GaussianField {
    pub fn n_points(&self) -> usize {
        self.point_set.len()
    }

    pub fn path(&self, k: usize) -> &[f64] {
        let n = self.n_points();
        &self.values[k * n..(k + 1) * n]
    }
}

/// Lag covariances c(k) = Cov(u(ta, k dx), u(tb, 0)) for k in 0..n.
fn lag_row(k: &CovarianceKernel, ta: f64, tb: f64, dx: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| k.cov((ta, j as f64 * dx), (tb, 0.0))).collect()
}

/// Fill an n×n block from an even lag function.
fn toeplitz_block(m: &mut DMatrix<f64>, r0: usize, c0: usize, lags: &[f64]) {
    let n = lags.len();
    for i in 0..n {
        for j in 0..n {
            m[(r0 + i, c0 + j)] = lags[i.abs_diff(j)];
        }
    }
}

/// Gram matrix of u_add over a point set.
pub fn gram(ps: &PointSet, h: HurstParameter) -> DMatrix<f64> {
    let k = CovarianceKernel::new(h);
    if let Some(g) = ps.layout() {
        let nt = g.times.len();
        let n = ps.len();
        let mut m = DMatrix::zeros(n, n);
        let pairs: Vec<(usize, usize)> = (0..nt).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
        let rows: Vec<Vec<f64>> = pairs.par_iter().map(|&(a, b)| lag_row(&k, g.times[a], g.times[b], g.dx, g.nx)).collect();
        for (&(a, b), lags) in pairs.iter().zip(&rows) {
            toeplitz_block(&mut m, a * g.nx, b * g.nx, lags);
            toeplitz_block(&mut m, b * g.nx, a * g.nx, lags);
        }
        return m;
    }
    dense_gram(ps.points(), |p, q| k.cov(p, q))
}

fn dense_gram(points: &[Point], cov: impl Fn(Point, Point) -> f64 + Sync) -> DMatrix<f64> {
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..=i).map(|j| cov(points[i], points[j])).collect()).collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
            m[(j, i)] = *v;
        }
    }
    m
}

/// Cholesky factor with the jitter ladder δ = 10^{-14..-10} · trace/n.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    let scale = m.trace() / n as f64;
    let mut deltas = vec![0.0];
    deltas.extend((0..=4).map(|k| 1e-14 * 10f64.powi(k) * scale));
    for &d in &deltas {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += d;
        }
        if let Some(c) = a.cholesky() {
            return Ok((c.l(), d));
        }
    }
    let eig = SymmetricEigen::new(m.clone());
    let (idx, min) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    Err(Error::Cholesky(format!("Gram matrix of size {n} not PSD within jitter {:e}: eigenvalue {min:e} (index {idx})", 1e-10 * scale)))
}

/// n_paths draws of N(0, m): column k of L Z with Z from stream k.
pub fn sample_from_gram(m: &DMatrix<f64>, n_paths: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    let n = m.nrows();
    let (l, jitter) = cholesky_with_jitter(m)?;
    let mut z = DMatrix::<f64>::zeros(n, n_paths);
    z.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(k, col)| {
        let mut rng = path_rng(seed, k as u64);
        for v in col.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    });
    let y = l * z;
    Ok((y.as_slice().to_vec(), jitter))
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_POINTS {
        Err(Error::Config(format!("{n} points exceed the dense-sampling cap of {MAX_POINTS}")))
    } else {
        Ok(())
    }
}

/// Exact joint samples of u_add over a point set.
pub fn sample(ps: &PointSet, h: HurstParameter, n_paths: usize, seed: u64) -> Result<GaussianField> {
    check_size(ps.len())?;
    let m = gram(ps, h);
    let (values, jitter) = sample_from_gram(&m, n_paths, seed)?;
    Ok(GaussianField { point_set: ps.clone(), shift: Shift::None, n_paths, values, covariance: m.as_slice().to_vec(), jitter, seed })
}

/// Increment process on the grid {-L + j dx}: x ↦ u(t, x+h) - u(t, x) or
/// u(t+τ, x) - u(t, x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IncrementSpec {
    pub t: f64,
    pub half_width: f64,
    pub nx: usize,
    pub shift: Shift,
}

/// Lag covariances of the increment process.
fn increment_lags(spec: &IncrementSpec, k: &CovarianceKernel, dx: f64) -> Result<Vec<f64>> {
    let t = spec.t;
    let lags = (0..spec.nx)
        .map(|j| {
            let z = j as f64 * dx;
            match spec.shift {
                Shift::Space(hs) => 2.0 * k.cov((t, z), (t, 0.0)) - k.cov((t, z + hs), (t, 0.0)) - k.cov((t, z - hs), (t, 0.0)),
                Shift::Time(tau) => {
                    let s = t + tau;
                    k.cov((s, z), (s, 0.0)) - 2.0 * k.cov((s, z), (t, 0.0)) + k.cov((t, z), (t, 0.0))
                }
                Shift::None => k.cov((t, z), (t, 0.0)),
            }
        })
        .collect();
    Ok(lags)
}

pub fn increment_field(spec: IncrementSpec, h: HurstParameter, n_paths: usize, seed: u64) -> Result<GaussianField> {
    match spec.shift {
        Shift::Space(v) | Shift::Time(v) if v != 0.0 && v.is_finite() => {}
        _ => return Err(Error::Domain("increment shift must be nonzero".into())),
    }
    if let Shift::Time(tau) = spec.shift {
        if tau < 0.0 {
            return Err(Error::Domain("time shift must be positive".into()));
        }
    }
    if !(spec.t > 0.0) || spec.nx < 2 || !(spec.half_width > 0.0) {
        return Err(Error::Domain("increment grid needs t > 0, L > 0 and nx >= 2".into()));
    }
    check_size(spec.nx)?;
    let dx = 2.0 * spec.half_width / (spec.nx - 1) as f64;
    let k = CovarianceKernel::new(h);
    let lags = increment_lags(&spec, &k, dx)?;
    let mut m = DMatrix::zeros(spec.nx, spec.nx);
    toeplitz_block(&mut m, 0, 0, &lags);
    let (values, jitter) = sample_from_gram(&m, n_paths, seed)?;
    let point_set = PointSet::grid(&[spec.t], -spec.half_width, dx, spec.nx)?;
    Ok(GaussianField { point_set, shift: spec.shift, n_paths, values, covariance: m.as_slice().to_vec(), jitter, seed })
}

/// d_{2,t,h}(x,y): L² distance of spatial increments at two sites.
pub fn spatial_increment_metric(t: f64, shift: f64, x: f64, y: f64, k: &CovarianceKernel) -> f64 {
    let pts = [((t, x + shift), 1.0), ((t, x), -1.0), ((t, y + shift), -1.0), ((t, y), 1.0)];
    bilinear_norm(&pts, k)
}

/// d_{3,t,τ}(x,y): L² distance of temporal increments at two sites.
pub fn temporal_increment_metric(t: f64, tau: f64, x: f64, y: f64, k: &CovarianceKernel) -> f64 {
    let pts = [((t + tau, x), 1.0), ((t, x), -1.0), ((t + tau, y), -1.0), ((t, y), 1.0)];
    bilinear_norm(&pts, k)
}

fn bilinear_norm(pts: &[(Point, f64)], k: &CovarianceKernel) -> f64 {
    let mut s = 0.0;
    for (p, a) in pts {
        for (q, b) in pts {
            s += a * b * k.cov(*p, *q);
        }
    }
    s.max(0.0).sqrt()
}

/// Ratios metric/shift^power over a set of shifts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub shifts: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min_over_max: f64,
    pub pass: bool,
}

fn lower_bound_report(shifts: &[f64], ratios: Vec<f64>) -> LowerBoundReport {
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    LowerBoundReport { shifts: shifts.to_vec(), ratios, min_over_max: min / max, pass: min > 0.0 && min / max >= 0.5 }
}

/// d_{2,t,h}(x, x+sep)/h^H over the shifts; bounded below when sep ≥ √t.
pub fn spatial_lower_bound(t: f64, sep: f64, shifts: &[f64], h: HurstParameter) -> LowerBoundReport {
    let k = CovarianceKernel::new(h);
    let ratios = shifts.iter().map(|&s| spatial_increment_metric(t, s, 0.0, sep, &k) / s.powf(h.h())).collect();
    lower_bound_report(shifts, ratios)
}

/// d_{3,t,τ}(x, x+sep)/τ^{H/2} over the shifts.
pub fn temporal_lower_bound(t: f64, sep: f64, shifts: &[f64], h: HurstParameter) -> LowerBoundReport {
    let k = CovarianceKernel::new(h);
    let ratios = shifts.iter().map(|&s| temporal_increment_metric(t, s, 0.0, sep, &k) / s.powf(0.5 * h.h())).collect();
    lower_bound_report(shifts, ratios)
}

/// Window [min, max] of d1/d_{1,H} over a deterministic sweep of point pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n_pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
}

pub fn metric_equivalence(h: HurstParameter, n_pairs: usize, seed: u64) -> EquivalenceReport {
    use rand::Rng;
    let k = CovarianceKernel::new(h);
    let mut rng = path_rng(seed, 0);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut count = 0;
    while count < n_pairs {
        let t = rng.random_range(0.1..4.0);
        let s = rng.random_range(0.1..4.0);
        let sep = rng.random_range(0.0..8.0);
        let p = (t, 0.0);
        let q = (s, sep);
        let r = reference_metric(p, q, h);
        if r == 0.0 {
            continue;
        }
        let ratio = natural_metric_fast(p, q, &k) / r;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        count += 1;
    }
    EquivalenceReport { n_pairs, min_ratio: lo, max_ratio: hi, spread: hi / lo }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{covariance_estimate, mean_estimate, variance_estimate};

    fn h3() -> HurstParameter {
        HurstParameter::new(0.3).unwrap()
    }

    #[test]
    fn psi_matches_hypergeometric_oracle() {
        let k = CovarianceKernel::new(h3());
        // mpmath: (c1/2) Γ(-H) 1F1(-H; 1/2; -w²/4)
        for (w, v) in [(0.0, -0.248_898_196_053_958_65), (0.5, -0.258_097_667_511_582_54), (3.0, -0.470_286_177_149_737_8)] {
            assert!((k.psi(w) - v).abs() < 1e-14, "w={w}: {}", k.psi(w));
        }
        assert!((k.lead + 0.25).abs() < 1e-14);
        // Branch switch at w²/4 = 40 is continuous.
        let w = (160.0f64).sqrt();
        let a = k.psi(w * (1.0 - 1e-15));
        let b = k.psi(w * (1.0 + 1e-15));
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn quadrature_and_fast_covariance_agree_with_oracle() {
        let h = h3();
        let k = CovarianceKernel::new(h);
        let cases = [
            ((1.0, 0.0), (0.5, 0.7), 0.064_330_246_623_677_157),
            ((1.0, 0.0), (1.0, 0.0), 0.306_429_623_563_458_88),
            ((2.0, 0.0), (2.0, 1.3), 0.107_971_131_751_763_85),
            ((0.3, 0.1), (2.5, -2.0), 0.012_122_702_746_563_914),
        ];
        for (p, q, v) in cases {
            let a = covariance_uadd(p, q, h).unwrap();
            assert!((a - v).abs() < 1e-10, "quad {p:?} {q:?}: {a}");
            assert!((k.cov(p, q) - v).abs() < 1e-13, "fast {p:?} {q:?}: {}", k.cov(p, q));
        }
        assert!((h.uadd_variance(1.0) - 0.306_429_623_563_458_88).abs() < 1e-14);
    }

    #[test]
    fn covariance_trivial_properties() {
        let h = h3();
        assert_eq!(covariance_uadd((0.0, 1.0), (1.0, 0.0), h).unwrap(), 0.0);
        let a = covariance_uadd((1.0, 0.2), (0.7, -0.4), h).unwrap();
        let b = covariance_uadd((1.0, 5.2), (0.7, 4.6), h).unwrap();
        let c = covariance_uadd((0.7, -0.4), (1.0, 0.2), h).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!((a - c).abs() < 1e-14);
    }

    #[test]
    fn same_site_metric() {
        let h = h3();
        let d = natural_metric((2.0, 0.0), (1.0, 0.0), h).unwrap();
        assert!((d * d - same_site_metric_sq(2.0, 1.0, h)).abs() < 1e-6);
        assert_eq!(natural_metric((1.0, 1.0), (1.0, 1.0), h).unwrap(), 0.0);
    }

    #[test]
    fn gram_layouts_agree() {
        let h = h3();
        let grid = PointSet::grid(&[0.5, 1.0], -1.0, 0.25, 9).unwrap();
        let plain = PointSet::new(grid.points().to_vec()).unwrap();
        let a = gram(&grid, h);
        let b = gram(&plain, h);
        assert!((a - b).abs().max() < 1e-15);
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![]).is_err());
        assert!(PointSet::new(vec![(1.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(PointSet::new(vec![(-1.0, 0.0)]).is_err());
    }

    #[test]
    fn single_point_variance_and_mean() {
        let h = h3();
        let ps = PointSet::new(vec![(1.0, 0.0)]).unwrap();
        let f = sample(&ps, h, 100_000, 7).unwrap();
        let v = variance_estimate(&f.values);
        assert!(((v.mean - h.uadd_variance(1.0)) / v.std_error).abs() < 3.0);
        let m = mean_estimate(&f.values);
        assert!((m.mean / m.std_error).abs() < 4.0);
    }

    #[test]
    fn four_point_law() {
        let h = h3();
        let ps = PointSet::new(vec![(1.0, 0.0), (1.0, 0.5), (0.5, 0.0), (2.0, -1.0)]).unwrap();
        let n = 100_000;
        let f = sample(&ps, h, n, 11).unwrap();
        let col = |i: usize| (0..n).map(|k| f.path(k)[i]).collect::<Vec<f64>>();
        for i in 0..4 {
            for j in 0..=i {
                let c = covariance_estimate(&col(i), &col(j));
                let exact = f.covariance[i * 4 + j];
                assert!(((c.mean - exact) / c.std_error).abs() < 4.0, "({i},{j}): {} vs {exact}", c.mean);
            }
        }
    }

    #[test]
    fn distant_points_are_uncorrelated() {
        let h = h3();
        let ps = PointSet::new(vec![(1.0, 0.0), (1.0, 1e6)]).unwrap();
        let g = gram(&ps, h);
        // Cov ~ -lead z^{2H} (-H)(1/2-H) 4(t+s)/z² at large z, with lead = -1/4.
        let approx = 0.25 * 1e6f64.powf(0.6) * (-0.3 * 0.2) * 8.0 / 1e12;
        assert!((g[(0, 1)] / approx - 1.0).abs() < 1e-3, "{}", g[(0, 1)]);
        let n = 20_000;
        let f = sample(&ps, h, n, 3).unwrap();
        let a: Vec<f64> = (0..n).map(|k| f.path(k)[0]).collect();
        let b: Vec<f64> = (0..n).map(|k| f.path(k)[1]).collect();
        let c = covariance_estimate(&a, &b);
        assert!((c.mean / c.std_error).abs() < 4.0);
    }

    #[test]
    fn increment_variance_is_metric_squared() {
        let h = h3();
        let k = CovarianceKernel::new(h);
        let spec = IncrementSpec { t: 1.0, half_width: 2.0, nx: 9, shift: Shift::Space(0.125) };
        let f = increment_field(spec, h, 10, 1).unwrap();
        let d = natural_metric_fast((1.0, 0.125), (1.0, 0.0), &k);
        assert!((f.covariance[0] - d * d).abs() < 1e-10);
        let spec = IncrementSpec { shift: Shift::Time(0.25), ..spec };
        let f = increment_field(spec, h, 10, 1).unwrap();
        let d = natural_metric_fast((1.25, 0.0), (1.0, 0.0), &k);
        assert!((f.covariance[0] - d * d).abs() < 1e-10);
        assert!(increment_field(IncrementSpec { shift: Shift::Space(0.0), ..spec }, h, 1, 1).is_err());
    }

    #[test]
    fn spatial_increment_metric_matches_spectral_oracle() {
        let h = h3();
        let k = CovarianceKernel::new(h);
        // mpmath: 4 c1 ∫ ξ^{-1-2H}(1-e^{-2tξ²})(1-cos hξ)(1-cos 2ξ) dξ at t=1, h=1/8
        let d = spatial_increment_metric(1.0, 0.125, 0.0, 2.0, &k);
        assert!((d * d - SPATIAL_ORACLE).abs() < 1e-12, "{}", d * d);
    }

    const SPATIAL_ORACLE: f64 = 0.287_120_834_142_001_67;

    #[test]
    fn increment_lower_bounds() {
        let h = h3();
        let shifts: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
        assert!(spatial_lower_bound(1.0, 2.0, &shifts, h).pass);
        assert!(temporal_lower_bound(1.0, 2.0, &shifts, h).pass);
    }

    #[test]
    fn jitter_rescues_semidefinite_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (_, d) = cholesky_with_jitter(&m).unwrap();
        assert!(d > 0.0 && d <= 1e-10);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky_with_jitter(&bad) {
            Err(Error::Cholesky(msg)) => assert!(msg.contains("eigenvalue -1")),
            other => panic!("{other:?}"),
        }
    }
}
