//! The rough noise W: covariance, spectral density, the three Hilbert-space
//! inner products, grid sampling by circulant embedding, mollification and
//! isometry checks.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{one_minus_cos_moment, Estimate, Quad};
use crate::rng::{derive_seed, path_rng};
use crate::stats::{variance_estimate, MeanEstimate};

/// Hurst parameter restricted to the open interval (1/4, 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurstParameter {
    h: f64,
}

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.25 && h < 0.5 {
            Ok(HurstParameter { h })
        } else {
            Err(Error::Domain(format!("Hurst parameter {h} outside (1/4, 1/2)")))
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Spectral constant c1 = Γ(2H+1) sin(πH) / (2π).
    pub fn c1(&self) -> f64 {
        gamma(2.0 * self.h + 1.0) * (PI * self.h).sin() / (2.0 * PI)
    }

    /// κ = Γ(1-H) / H.
    pub fn kappa(&self) -> f64 {
        gamma(1.0 - self.h) / self.h
    }

    /// Normalization making c (1+x²)^{H-1} a probability density.
    pub fn weight_norm(&self) -> f64 {
        gamma(1.0 - self.h) / (PI.sqrt() * gamma(0.5 - self.h))
    }

    /// Marchaud-form constant from its defining integral.
    pub fn c2(&self) -> f64 {
        let h = self.h;
        let q = Quad::new(1e-15, 1e-13);
        let f = |t: f64| {
            let d = (1.0 + t).powf(h - 0.5) - t.powf(h - 0.5);
            d * d
        };
        let head = q.integrate_singular(f, 0.0, 1.0, 2.0 * h - 1.0);
        let tail = q.integrate_decaying(f, 1.0, 1.0);
        gamma(h + 0.5).powi(2) / (head.value + tail.value + 1.0 / (2.0 * h))
    }

    /// Constant of the double-increment form: π c1 / ∫(1-cos u)|u|^{2H-2} du.
    pub fn increment_constant(&self) -> f64 {
        let k = 2.0 * one_minus_cos_moment(2.0 - 2.0 * self.h, &Quad::new(1e-15, 1e-13)).value;
        PI * self.c1() / k
    }

    /// The literal increment-form constant sqrt(H(1/2-H)) c2^{-1/2}, which
    /// disagrees with the Plancherel value; kept for reporting only.
    pub fn increment_constant_printed(&self) -> f64 {
        (self.h * (0.5 - self.h)).sqrt() / self.c2().sqrt()
    }

    /// Variance of u_add(t, x): c1 κ 2^{H-1} t^H.
    pub fn uadd_variance(&self, t: f64) -> f64 {
        self.c1() * self.kappa() * 2f64.powf(self.h - 1.0) * t.powf(self.h)
    }
}

/// Uniform grid of [0, T] × [-L, L].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub t_max: f64,
    pub x_half_width: f64,
    pub nt: usize,
    pub nx: usize,
}

impl SpaceTimeGrid {
    pub fn new(t_max: f64, x_half_width: f64, nt: usize, nx: usize) -> Result<Self> {
        if !(t_max > 0.0 && x_half_width > 0.0) {
            return Err(Error::Config(format!("grid extents must be positive (T={t_max}, L={x_half_width})")));
        }
        if nt == 0 {
            return Err(Error::Config("nt must be positive".into()));
        }
        if nx < 3 || nx.is_multiple_of(2) {
            return Err(Error::Config(format!("nx = {nx} must be odd and at least 3")));
        }
        Ok(SpaceTimeGrid { t_max, x_half_width, nt, nx })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_half_width / (self.nx - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.x_half_width + j as f64 * self.dx()
    }

    /// Index of the node x = 0.
    pub fn center(&self) -> usize {
        (self.nx - 1) / 2
    }
}

/// Covariance of W: ½ (s∧t)(|x|^{2H} + |y|^{2H} - |x-y|^{2H}).
pub fn covariance_w(t: f64, x: f64, s: f64, y: f64, h: HurstParameter) -> f64 {
    let e = 2.0 * h.h();
    0.5 * t.min(s) * (x.abs().powf(e) + y.abs().powf(e) - (x - y).abs().powf(e))
}

/// Spectral density c1 |ξ|^{1-2H}.
pub fn spectral_density(xi: f64, h: HurstParameter) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::Domain("spectral density is singular at ξ = 0".into()));
    }
    Ok(h.c1() * xi.abs().powf(1.0 - 2.0 * h.h()))
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of one variable supported in [lo, hi], smooth between
/// the listed breakpoints.
#[derive(Clone)]
pub struct Profile {
    f: RealFn,
    pub lo: f64,
    pub hi: f64,
    breaks: Vec<f64>,
}

impl Profile {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Self {
        Profile { f: Arc::new(f), lo, hi, breaks: Vec::new() }
    }

    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| *b > self.lo && *b < self.hi);
        breaks.sort_by(f64::total_cmp);
        self.breaks = breaks;
        self
    }

    pub fn indicator(a: f64, b: f64) -> Self {
        Profile::new(|_| 1.0, a, b)
    }

    /// e^{-((x-center)/width)²}, truncated where it drops below 1e-21.
    pub fn gaussian(center: f64, width: f64) -> Self {
        let r = 7.0 * width;
        Profile::new(move |x| (-((x - center) / width).powi(2)).exp(), center - r, center + r)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.f)(x)
        }
    }

    /// Support endpoints and breakpoints, sorted.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = vec![self.lo];
        k.extend(self.breaks.iter().cloned());
        k.push(self.hi);
        k
    }
}

/// Finite sum of separable terms coef · a(t) · f(x).
#[derive(Clone, Default)]
pub struct TestFunction {
    pub terms: Vec<(f64, Profile, Profile)>,
}

impl TestFunction {
    pub fn separable(time: Profile, space: Profile) -> Self {
        TestFunction { terms: vec![(1.0, time, space)] }
    }

    pub fn plus(mut self, coef: f64, time: Profile, space: Profile) -> Self {
        self.terms.push((coef, time, space));
        self
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.terms.iter().map(|(c, a, f)| c * a.eval(t) * f.eval(x)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerForm {
    Fourier,
    Marchaud,
    Increment,
}

fn merged(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).cloned().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn inner_quad(budget: &Quad) -> Quad {
    Quad::new(budget.abs_tol * 1e-2, budget.rel_tol * 1e-2).with_max_panels(budget.max_panels)
}

/// Inner product of W(φ) and W(ψ) in the chosen representation.
pub fn inner_product(phi: &TestFunction, psi: &TestFunction, h: HurstParameter, form: InnerForm, budget: &Quad) -> Result<Estimate> {
    let mut total = Estimate::zero();
    let ctx = FormContext::new(h, form);
    for (ci, ai, fi) in &phi.terms {
        for (cj, aj, fj) in &psi.terms {
            let lo = ai.lo.max(aj.lo);
            let hi = ai.hi.min(aj.hi);
            if hi <= lo {
                continue;
            }
            let mut pts = merged(&ai.knots(), &aj.knots());
            pts.retain(|t| *t >= lo && *t <= hi);
            let time = budget.integrate_pts(|t| ai.eval(t) * aj.eval(t), &pts);
            if time.value == 0.0 {
                continue;
            }
            let space = ctx.space_inner(fi, fj, budget)?;
            total = total.add(space.scale(ci * cj * time.value));
        }
    }
    Ok(total)
}

struct FormContext {
    h: HurstParameter,
    form: InnerForm,
    constant: f64,
}

impl FormContext {
    fn new(h: HurstParameter, form: InnerForm) -> Self {
        let constant = match form {
            InnerForm::Fourier => h.c1(),
            InnerForm::Marchaud => h.c2(),
            InnerForm::Increment => h.increment_constant(),
        };
        FormContext { h, form, constant }
    }

    fn space_inner(&self, f: &Profile, g: &Profile, budget: &Quad) -> Result<Estimate> {
        let e = match self.form {
            InnerForm::Fourier => fourier_space_inner(f, g, self.h, budget),
            InnerForm::Marchaud => marchaud_space_inner(f, g, self.h, budget)?,
            InnerForm::Increment => increment_space_inner(f, g, self.h, budget),
        };
        if !e.converged {
            return Err(Error::quad(format!("{:?} inner product", self.form), e));
        }
        Ok(e.scale(self.constant))
    }
}

/// (∫cos(ξx) f, ∫sin(ξx) f).
fn cos_sin_transform(f: &Profile, xi: f64, q: &Quad) -> (f64, f64) {
    let knots = f.knots();
    let width = if xi.abs() > 0.0 { PI / xi.abs() } else { f64::INFINITY };
    let mut pts = Vec::new();
    for w in knots.windows(2) {
        let n = (((w[1] - w[0]) / width).ceil() as usize).max(1);
        for k in 0..n {
            pts.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
    }
    pts.push(*knots.last().expect("knots"));
    let qq = Quad { max_panels: q.max_panels.max(4 * pts.len()), ..*q };
    let c = qq.integrate_pts(|x| (xi * x).cos() * f.eval(x), &pts).value;
    let s = qq.integrate_pts(|x| (xi * x).sin() * f.eval(x), &pts).value;
    (c, s)
}

/// 2 ∫_0^∞ ξ^{1-2H} Re(Ff conj Fg) dξ (without c1).
fn fourier_space_inner(f: &Profile, g: &Profile, h: HurstParameter, budget: &Quad) -> Estimate {
    let inner = inner_quad(budget);
    let p = 1.0 - 2.0 * h.h();
    let integrand = |xi: f64| {
        let (cf, sf) = cos_sin_transform(f, xi, &inner);
        let (cg, sg) = cos_sin_transform(g, xi, &inner);
        xi.powf(p) * (cf * cg + sf * sg)
    };
    let head = budget.integrate_singular(integrand, 0.0, 1.0, p);
    let tail = budget.integrate_decaying(integrand, 1.0, 1.0);
    head.add(tail).scale(2.0)
}

/// ∫∫ (f(x+y)-f(x))(g(x+y)-g(x)) |y|^{2H-2} dx dy (without the constant).
fn increment_space_inner(f: &Profile, g: &Profile, h: HurstParameter, budget: &Quad) -> Estimate {
    let inner = inner_quad(budget);
    let lo = f.lo.min(g.lo);
    let hi = f.hi.max(g.hi);
    let span = hi - lo;
    let kf = f.knots();
    let kg = g.knots();
    let diff_product = |y: f64| {
        let mut pts: Vec<f64> = kf.iter().chain(&kg).flat_map(|b| [*b, *b - y]).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        inner.integrate_pts(|x| (f.eval(x + y) - f.eval(x)) * (g.eval(x + y) - g.eval(x)), &pts).value
    };
    let e = 2.0 * h.h() - 2.0;
    // diff_product has kinks where shifted breakpoints cross each other.
    let all = merged(&kf, &kg);
    let mut ys: Vec<f64> = all.iter().flat_map(|a| all.iter().map(move |b| (a - b).abs())).collect();
    ys.retain(|y| *y > 1e-12 && *y < span);
    ys.push(span);
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let integrand = |y: f64| diff_product(y) * y.powf(e);
    let head = budget.integrate_singular(integrand, 0.0, ys[0], 2.0 * h.h() - 1.0);
    let body = head.add(budget.integrate_pts(integrand, &ys));
    // Beyond the joint span the translates no longer overlap.
    let fg = {
        let pts = merged(&kf, &kg);
        inner.integrate_pts(|x| f.eval(x) * g.eval(x), &pts).value
    };
    let tail = 2.0 * fg * span.powf(2.0 * h.h() - 1.0) / (1.0 - 2.0 * h.h());
    body.add(Estimate { value: tail, error: 0.0, evals: 0, converged: true }).scale(2.0)
}

/// ∫ D^β f D^β g dx with β = 1/2 - H (without the constant).
fn marchaud_space_inner(f: &Profile, g: &Profile, h: HurstParameter, budget: &Quad) -> Result<Estimate> {
    let beta = 0.5 - h.h();
    let inner = inner_quad(budget);
    let lo = f.lo.min(g.lo) - 1.0;
    let hi = f.hi.max(g.hi);
    let pts = merged(&merged(&f.knots(), &g.knots()), &[lo, hi]);
    let pts: Vec<f64> = pts.into_iter().filter(|x| *x >= lo && *x <= hi).collect();
    let failure = std::sync::Mutex::new(None);
    let product = |x: f64| -> f64 {
        let df = marchaud_with(f, beta, x, DEFAULT_EPS, &inner);
        let dg = marchaud_with(g, beta, x, DEFAULT_EPS, &inner);
        match (df, dg) {
            (Ok(a), Ok(b)) => a * b,
            (Err(e), _) | (_, Err(e)) => {
                failure.lock().expect("lock").get_or_insert(e);
                0.0
            }
        }
    };
    let body = budget.integrate_pts(product, &pts);
    let tail = budget.integrate_decaying(|s| product(lo - s), 0.0, 1.0);
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(body.add(tail))
}

const DEFAULT_EPS: f64 = 1.0 / 1024.0;

/// Marchaud derivative (β/Γ(1-β)) ∫_ε^∞ (f(x) - f(x+y)) y^{-1-β} dy,
/// extrapolated to ε = 0 from the cutoffs ε, ε/2, ε/4, ε/8.
pub fn marchaud_derivative(f: &Profile, beta: f64, x: f64, eps_cutoff: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("Marchaud order {beta} outside (0,1)")));
    }
    if !(eps_cutoff > 0.0) {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    marchaud_with(f, beta, x, eps_cutoff, &Quad::new(1e-15, 1e-13))
}

fn marchaud_with(f: &Profile, beta: f64, x: f64, eps: f64, q: &Quad) -> Result<f64> {
    let pref = beta / gamma(1.0 - beta);
    if x > f.hi {
        return Ok(0.0);
    }
    if x < f.lo - 1.0 {
        // f vanishes near x: the integrand is regular.
        let knots = f.knots();
        let v = q.integrate_pts(|z| f.eval(z) * (z - x).powf(-1.0 - beta), &knots).value;
        return Ok(-pref * v);
    }
    let fx = f.eval(x);
    let y_max = (f.hi - x).max(1.0);
    // Geometric panels from the finest cutoff upward, plus shifted breakpoints.
    let finest = eps / 8.0;
    let mut pts = vec![eps];
    let mut p = eps;
    while p * 2.0 < y_max {
        p *= 2.0;
        pts.push(p);
    }
    for k in f.knots() {
        let y = k - x;
        if y > eps && y < y_max {
            pts.push(y);
        }
    }
    pts.push(y_max);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let integrand = |y: f64| (fx - f.eval(x + y)) * y.powf(-1.0 - beta);
    let base = q.integrate_pts(integrand, &pts).value + fx * y_max.powf(-beta) / beta;
    let mut levels = vec![(eps, base)];
    let mut acc = base;
    let mut e = eps;
    while e > finest * 1.5 {
        let lo = e / 2.0;
        acc += q.integrate(integrand, lo, e).value;
        e = lo;
        levels.push((e, acc));
    }
    let fit = |s: &[(f64, f64)]| -> f64 {
        let m = Matrix3::from_fn(|r, c| match c {
            0 => 1.0,
            1 => s[r].0.powf(1.0 - beta),
            _ => s[r].0.powf(2.0 - beta),
        });
        let rhs = Vector3::new(s[0].1, s[1].1, s[2].1);
        m.lu().solve(&rhs).map(|v| v[0]).unwrap_or(f64::NAN)
    };
    let coarse = fit(&levels[0..3]);
    let fine = fit(&levels[1..4]);
    let scale = 1.0 + fine.abs() + fx.abs();
    if !(fine.is_finite() && (fine - coarse).abs() <= 1e-6 * scale) {
        return Err(Error::Extrapolation(format!("Marchaud derivative at x = {x}: estimates {coarse:e} and {fine:e} disagree")));
    }
    Ok(pref * fine)
}

/// Noise increments W(cell) on a space-time grid. Entry (i, j) is the
/// increment over [t_i, t_{i+1}) × [x_j, x_j + dx).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub grid: SpaceTimeGrid,
    pub h: HurstParameter,
    pub seed: u64,
    pub mollification_eps: f64,
    pub increments: Vec<f64>,
    pub warnings: Vec<String>,
}

impl NoiseRealization {
    pub fn slice(&self, i: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.increments[i * nx..(i + 1) * nx]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.increments[i * self.grid.nx + j]
    }
}

/// Autocovariance of unit-spacing fractional Gaussian noise.
pub fn fgn_autocovariance(k: usize, h: HurstParameter) -> f64 {
    let e = 2.0 * h.h();
    let k = k as f64;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Circulant-embedding sampler for one spatial slice.
pub struct CirculantSampler {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl CirculantSampler {
    pub fn new(n: usize, spacing: f64, h: HurstParameter) -> Result<Self> {
        let m = 2 * n;
        let scale = spacing.powf(2.0 * h.h());
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex::new(scale * fgn_autocovariance(lag, h), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);
        let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
        let mut sqrt_eig = Vec::with_capacity(m);
        for (k, z) in c.iter().enumerate() {
            if z.re < -1e-10 * max {
                return Err(Error::Numerical(format!(
                    "circulant embedding has negative eigenvalue {:e} at mode {k} (n = {n}, spacing = {spacing})",
                    z.re
                )));
            }
            sqrt_eig.push((z.re.max(0.0) / m as f64).sqrt());
        }
        Ok(CirculantSampler { n, sqrt_eig, fft })
    }

    /// Two independent slices from one transform.
    pub fn sample_pair<R: rand::Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|s| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut z);
        (z[..self.n].iter().map(|c| c.re).collect(), z[..self.n].iter().map(|c| c.im).collect())
    }
}

/// Sample independent time slices of fractional Gaussian noise increments.
pub fn sample_noise(grid: &SpaceTimeGrid, h: HurstParameter, seed: u64) -> Result<NoiseRealization> {
    let sampler = CirculantSampler::new(grid.nx, grid.dx(), h)?;
    let mut rng = path_rng(seed, 0);
    let sdt = grid.dt().sqrt();
    let mut increments = Vec::with_capacity(grid.nt * grid.nx);
    while increments.len() < grid.nt * grid.nx {
        let (a, b) = sampler.sample_pair(&mut rng);
        increments.extend(a.iter().map(|v| v * sdt));
        if increments.len() < grid.nt * grid.nx {
            increments.extend(b.iter().map(|v| v * sdt));
        }
    }
    Ok(NoiseRealization { grid: *grid, h, seed, mollification_eps: 0.0, increments, warnings: Vec::new() })
}

/// Periodic trapezoid discretization of the heat kernel G_eps on n nodes of
/// spacing dx, normalized to unit mass.
pub fn periodic_heat_weights(n: usize, dx: f64, eps: f64) -> Vec<f64> {
    let period = n as f64 * dx;
    let g = |z: f64| (-z * z / (4.0 * eps)).exp();
    let images = ((12.0 * eps.sqrt()) / period).ceil() as i64 + 1;
    let mut w: Vec<f64> = (0..n)
        .map(|k| {
            let base = if k <= n / 2 { k as f64 * dx } else { (k as f64 - n as f64) * dx };
            (-images..=images).map(|m| g(base + m as f64 * period)).sum()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Circular convolution of each row with the given weights.
pub fn circular_convolve_rows(data: &[f64], n: usize, weights: &[f64]) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut wk: Vec<Complex<f64>> = weights.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fwd.process(&mut wk);
    let mut out = Vec::with_capacity(data.len());
    for row in data.chunks(n) {
        let mut z: Vec<Complex<f64>> = row.iter().map(|v| Complex::new(*v, 0.0)).collect();
        fwd.process(&mut z);
        z.iter_mut().zip(&wk).for_each(|(a, b)| *a *= b);
        inv.process(&mut z);
        out.extend(z.iter().map(|c| c.re / n as f64));
    }
    out
}

/// Smooth every time slice with the heat kernel at scale eps.
pub fn mollify(noise: &NoiseRealization, eps: f64) -> Result<NoiseRealization> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("mollification scale {eps} must be positive")));
    }
    let grid = noise.grid;
    let dx = grid.dx();
    let mut warnings = noise.warnings.clone();
    if eps < dx * dx / 4.0 {
        warnings.push(format!("eps = {eps:e} below dx²/4 = {:e}: mollifier not resolved", dx * dx / 4.0));
    }
    let w = periodic_heat_weights(grid.nx, dx, eps);
    let increments = circular_convolve_rows(&noise.increments, grid.nx, &w);
    Ok(NoiseRealization { increments, mollification_eps: noise.mollification_eps + eps, warnings, ..noise.clone() })
}

/// Elementary integrand Σ c_k 1_{(a_k,b_k]}(t) 1_{(c_k,d_k]}(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementaryIntegrand {
    pub blocks: Vec<(f64, [f64; 2], [f64; 2])>,
}

impl ElementaryIntegrand {
    pub fn to_test_function(&self) -> TestFunction {
        let mut tf = TestFunction::default();
        for (c, t, x) in &self.blocks {
            tf = tf.plus(*c, Profile::indicator(t[0], t[1]), Profile::indicator(x[0], x[1]));
        }
        tf
    }

    /// Value on grid cell (i, j); each block edge must sit on a cell edge.
    fn cell_value(&self, grid: &SpaceTimeGrid, i: usize, j: usize) -> f64 {
        let tm = grid.t(i) + 0.5 * grid.dt();
        let xm = grid.x(j) + 0.5 * grid.dx();
        self.blocks.iter().filter(|(_, t, x)| tm > t[0] && tm < t[1] && xm > x[0] && xm < x[1]).map(|(c, _, _)| c).sum()
    }

    /// Norm² from the closed-form covariance of W over rectangles.
    pub fn norm_sq_closed_form(&self, h: HurstParameter) -> f64 {
        let mut s = 0.0;
        for (ci, ti, xi) in &self.blocks {
            for (cj, tj, xj) in &self.blocks {
                let overlap = (ti[1].min(tj[1]) - ti[0].max(tj[0])).max(0.0);
                s += ci * cj * overlap * interval_covariance(xi, xj, h);
            }
        }
        s
    }

    fn check_alignment(&self, grid: &SpaceTimeGrid) -> Result<()> {
        let on = |v: f64, origin: f64, step: f64| ((v - origin) / step - ((v - origin) / step).round()).abs() < 1e-9;
        for (_, t, x) in &self.blocks {
            if !(on(t[0], 0.0, grid.dt()) && on(t[1], 0.0, grid.dt())) {
                return Err(Error::Config(format!("time edges {t:?} are not on the grid")));
            }
            if !(on(x[0], -grid.x_half_width, grid.dx()) && on(x[1], -grid.x_half_width, grid.dx())) {
                return Err(Error::Config(format!("space edges {x:?} are not on the grid")));
            }
        }
        Ok(())
    }
}

/// E[W(1,(a,b]) W(1,(c,d])] from the covariance of W.
pub fn interval_covariance(i: &[f64; 2], j: &[f64; 2], h: HurstParameter) -> f64 {
    let r = |x: f64, y: f64| covariance_w(1.0, x, 1.0, y, h);
    r(i[1], j[1]) - r(i[1], j[0]) - r(i[0], j[1]) + r(i[0], j[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryRow {
    pub norm_sq: f64,
    pub mc_variance: MeanEstimate,
    pub z_score: f64,
}

/// Monte Carlo variance of Σ g ΔW against the H-norm computed in the
/// increment form.
pub fn isometry_check(
    grid: &SpaceTimeGrid,
    h: HurstParameter,
    integrands: &[ElementaryIntegrand],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<IsometryRow>> {
    for g in integrands {
        g.check_alignment(grid)?;
    }
    let weights: Vec<Vec<f64>> = integrands
        .iter()
        .map(|g| {
            let mut w = vec![0.0; grid.nt * grid.nx];
            for i in 0..grid.nt {
                for j in 0..grid.nx {
                    w[i * grid.nx + j] = g.cell_value(grid, i, j);
                }
            }
            w
        })
        .collect();
    let samples: Vec<Result<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let noise = sample_noise(grid, h, derive_seed(seed, p as u64))?;
            Ok(weights.iter().map(|w| w.iter().zip(&noise.increments).map(|(a, b)| a * b).sum()).collect())
        })
        .collect();
    let samples: Vec<Vec<f64>> = samples.into_iter().collect::<Result<_>>()?;
    let budget = Quad::new(1e-12, 1e-10);
    integrands
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let tf = g.to_test_function();
            let norm = inner_product(&tf, &tf, h, InnerForm::Increment, &budget)?;
            let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let v = variance_estimate(&col);
            Ok(IsometryRow { norm_sq: norm.value, mc_variance: v, z_score: (v.mean - norm.value) / v.std_error })
        })
        .collect()
}
