//! Doubly periodic cells: lattice parameters, magnetic translations, the cell
//! basis `Phi_k`, multiplicative-form solutions, zero location, cell
//! quadrature and the stationary constant.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gauss_sum, theta, Parity, TruncationPolicy};

/// Horizontal period of the hexagonal lattice, `gamma^2 = 2 pi / sqrt 3`.
pub fn hexagonal_gamma() -> f64 {
    (2.0 * PI / 3f64.sqrt()).sqrt()
}

/// `exp(2 i pi / 3)`.
pub fn hexagonal_tau() -> C64 {
    C64::new(-0.5, 3f64.sqrt() / 2.0)
}

/// A pointwise complex function on the plane.
pub trait Field: Sync {
    fn eval(&self, z: C64) -> C64;
}

impl<F: Fn(C64) -> C64 + Sync> Field for F {
    fn eval(&self, z: C64) -> C64 {
        self(z)
    }
}

/// Period `gamma`, shape `tau` and flux `n`, tied by `gamma^2 Im tau = pi n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub gamma: f64,
    pub tau: C64,
    pub n: u32,
}

impl LatticeParams {
    pub fn new(gamma: f64, tau: C64, n: u32) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(tau.im > 0.0) || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice needs gamma > 0, Im tau > 0, N >= 1 (got {gamma}, {tau}, {n})"
            )));
        }
        let defect = gamma * gamma * tau.im - PI * n as f64;
        if defect.abs() >= 1e-12 * (1.0 + PI * n as f64) {
            return Err(Error::InvalidParameter(format!(
                "quantization gamma^2 Im tau = pi N fails by {defect:e}"
            )));
        }
        Ok(Self { gamma, tau, n })
    }

    /// `tau = i pi / gamma^2`, one zero per cell.
    pub fn rectangular(gamma: f64) -> Result<Self> {
        Self::new(gamma, C64::new(0.0, PI / (gamma * gamma)), 1)
    }

    pub fn hexagonal() -> Self {
        Self { gamma: hexagonal_gamma(), tau: hexagonal_tau(), n: 1 }
    }

    /// Cell with real part `tau_re` and flux `n`; the imaginary part of tau is
    /// fixed by quantization.
    pub fn with_flux(gamma: f64, tau_re: f64, n: u32) -> Result<Self> {
        if !(gamma > 0.0) || n == 0 {
            return Err(Error::InvalidParameter(format!("bad cell gamma={gamma}, N={n}")));
        }
        Self::new(gamma, C64::new(tau_re, PI * n as f64 / (gamma * gamma)), n)
    }

    pub fn area(&self) -> f64 {
        self.gamma * self.gamma * self.tau.im
    }

    /// `gamma (r1 + r2 tau)`.
    pub fn point(&self, r1: f64, r2: f64) -> C64 {
        self.gamma * (r1 + r2 * self.tau)
    }

    /// Inverse of [`LatticeParams::point`].
    pub fn coords(&self, z: C64) -> (f64, f64) {
        let w = z / self.gamma;
        let r2 = w.im / self.tau.im;
        (w.re - r2 * self.tau.re, r2)
    }

    /// Representative of `z` modulo the lattice with both coordinates in
    /// `[-1/2, 1/2)`.
    pub fn reduce(&self, z: C64) -> C64 {
        let (r1, r2) = self.coords(z);
        self.point(r1 - (r1 + 0.5).floor(), r2 - (r2 + 0.5).floor())
    }

    /// Offset of the first zero of `Phi_0`, `(gamma/2)(tau/N - 1)`.
    pub fn base_zero(&self) -> C64 {
        0.5 * self.gamma * (self.tau / self.n as f64 - 1.0)
    }
}

/// `z -> exp((alpha conj(z) - conj(alpha) z)/2) u(z + alpha)`.
#[derive(Clone)]
pub struct MagneticTranslate<F> {
    pub alpha: C64,
    pub inner: F,
}

pub fn magnetic_translate<F: Field>(alpha: C64, u: F) -> MagneticTranslate<F> {
    MagneticTranslate { alpha, inner: u }
}

impl<F: Field> Field for MagneticTranslate<F> {
    fn eval(&self, z: C64) -> C64 {
        let a = self.alpha;
        ((a * z.conj() - a.conj() * z) / 2.0).exp() * self.inner.eval(z + a)
    }
}

/// `z^2/2 - |z|^2/2`, evaluated without forming either term.
fn gauss_phase(z: C64) -> C64 {
    C64::new(-z.im * z.im, z.re * z.im)
}

/// The cell basis function `Phi_k`, the translate of `Phi_0` by `k gamma / N`.
#[derive(Debug, Clone, Copy)]
pub struct PhiK {
    pub params: LatticeParams,
    pub k: u32,
    policy: TruncationPolicy,
}

pub fn phi_k(params: &LatticeParams, k: u32) -> Result<PhiK> {
    if k >= params.n {
        return Err(Error::InvalidParameter(format!("index k={k} must be below N={}", params.n)));
    }
    Ok(PhiK { params: *params, k, policy: TruncationPolicy::default() })
}

impl PhiK {
    pub fn zero(&self) -> C64 {
        self.params.base_zero() - self.k as f64 * self.params.gamma / self.params.n as f64
    }

    pub fn try_eval(&self, z: C64) -> Result<C64> {
        let p = &self.params;
        let nf = p.n as f64;
        let expo = gauss_phase(z) - C64::i() * PI * z / p.gamma - C64::i() * PI * self.k as f64 / nf;
        let th = theta((z - self.zero()) / p.gamma, p.tau / nf, &self.policy)?;
        Ok(expo.exp() * th)
    }
}

impl Field for PhiK {
    fn eval(&self, z: C64) -> C64 {
        // The cap is never reached for quantized lattices at moderate |z|; NaN
        // marks the failure instead of panicking inside quadrature loops.
        self.try_eval(z).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }
}

/// `N` zeros together with the integers fixing their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub zeros: Vec<C64>,
    pub k: i64,
    pub l: i64,
}

impl ZeroSet {
    /// `|sum z_j - (gamma/2)(tau-1)N + k tau gamma - l gamma|`.
    pub fn defect(&self, params: &LatticeParams) -> f64 {
        let s: C64 = self.zeros.iter().sum();
        let g = params.gamma;
        let target = 0.5 * g * (params.tau - 1.0) * params.n as f64 - self.k as f64 * params.tau * g
            + self.l as f64 * g;
        (s - target).norm()
    }
}

/// `scale * exp(z^2/2 + b z - |z|^2/2) prod theta_tau((z - z_j)/gamma)` with
/// `gamma b = i pi (2k - N)`.
#[derive(Debug, Clone)]
pub struct DoublyPeriodic {
    pub params: LatticeParams,
    pub zeros: ZeroSet,
    pub scale: C64,
    b: C64,
    policy: TruncationPolicy,
}

pub fn build_doubly_periodic(params: &LatticeParams, zeroset: ZeroSet, scale: C64) -> Result<DoublyPeriodic> {
    if zeroset.zeros.len() != params.n as usize {
        return Err(Error::InvalidParameter(format!(
            "expected {} zeros, got {}",
            params.n,
            zeroset.zeros.len()
        )));
    }
    let defect = zeroset.defect(params);
    if defect > 1e-9 * (1.0 + params.gamma) {
        return Err(Error::ConstraintViolated { defect });
    }
    let b = C64::i() * PI * (2.0 * zeroset.k as f64 - params.n as f64) / params.gamma;
    Ok(DoublyPeriodic { params: *params, zeros: zeroset, scale, b, policy: TruncationPolicy::default() })
}

impl Field for DoublyPeriodic {
    fn eval(&self, z: C64) -> C64 {
        let p = &self.params;
        let mut prod = self.scale * (gauss_phase(z) + self.b * z).exp();
        for zj in &self.zeros.zeros {
            match theta((z - zj) / p.gamma, p.tau, &self.policy) {
                Ok(t) => prod *= t,
                Err(_) => return C64::new(f64::NAN, f64::NAN),
            }
        }
        prod
    }
}

/// `max |u(z + gamma) - e^{gamma(z - conj z)/2} u(z)|` and the same for the
/// `gamma tau` direction, over the given points.
pub fn periodicity_defects<F: Field>(u: &F, params: &LatticeParams, points: &[C64]) -> (f64, f64) {
    let g = params.gamma;
    let gt = g * params.tau;
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for &z in points {
        let uz = u.eval(z);
        d1 = d1.max((u.eval(z + g) - (g * (z - z.conj()) / 2.0).exp() * uz).norm());
        d2 = d2.max((u.eval(z + gt) - ((gt.conj() * z - gt * z.conj()) / 2.0).exp() * uz).norm());
    }
    (d1, d2)
}

/// Zero search knobs.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSearch {
    /// modulus scan resolution per cell edge
    pub scan: usize,
    /// radius of the circles used for multiplicities
    pub radius: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self { scan: 64, radius: 1e-3 }
    }
}

/// Zeros of a quasi-periodic `u` in one cell, repeated by multiplicity and
/// reduced to cell coordinates in `[0, 1)^2`.
pub fn find_zeros_in_cell<F: Field>(u: &F, params: &LatticeParams, grid: ZeroSearch) -> Result<Vec<C64>> {
    let n = grid.scan.max(8);
    let modulus: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            u.eval(params.point(i as f64 / n as f64, j as f64 / n as f64)).norm()
        })
        .collect();
    let at = |i: isize, j: isize| modulus[(i.rem_euclid(n as isize) as usize) * n + j.rem_euclid(n as isize) as usize];
    let peak = modulus.iter().cloned().fold(0.0, f64::max);

    // log|u| is superharmonic away from zeros, so local minima of the scan
    // only occur next to zeros.
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..n as isize {
        for j in 0..n as isize {
            let v = at(i, j);
            let is_min = (-1..=1)
                .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
                .filter(|&d| d != (0, 0))
                .all(|(di, dj)| v <= at(i + di, j + dj));
            if !is_min {
                continue;
            }
            let seed = params.point(i as f64 / n as f64, j as f64 / n as f64);
            let Some(z) = newton_zero(u, seed) else { continue };
            if u.eval(z).norm() > 1e-8 * peak {
                continue;
            }
            let (r1, r2) = params.coords(z);
            let r = (r1.rem_euclid(1.0), r2.rem_euclid(1.0));
            let dup = found.iter().any(|&(a, b)| periodic_gap(a, r.0) < 1e-7 && periodic_gap(b, r.1) < 1e-7);
            if !dup {
                found.push(r);
            }
        }
    }

    let mut zeros = Vec::new();
    for &(r1, r2) in &found {
        let z = params.point(r1, r2);
        let m = winding(u, |s| z + grid.radius * C64::from_polar(1.0, s), 64);
        for _ in 0..m.max(1) {
            zeros.push(z);
        }
    }

    // Shift the cell so its boundary stays clear of every zero found.
    let s1 = widest_gap(found.iter().map(|r| r.0));
    let s2 = widest_gap(found.iter().map(|r| r.1));
    let expected = boundary_winding(u, params, s1, s2);
    if expected < 0 || expected as usize != zeros.len() {
        return Err(Error::ZeroCountMismatch { expected, found: zeros.len() });
    }
    Ok(zeros)
}

fn periodic_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Midpoint of the widest gap between the given points on the unit circle.
fn widest_gap(points: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = points.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (v[0] + 1.0 - v[v.len() - 1], v[v.len() - 1]);
    for w in v.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    (best.1 + best.0 / 2.0).rem_euclid(1.0)
}

/// Newton on the holomorphic part `u(z) exp(|z|^2/2)`.
fn newton_zero<F: Field>(u: &F, seed: C64) -> Option<C64> {
    let hol = |z: C64| u.eval(z) * (z.norm_sqr() / 2.0).exp();
    let h = 1e-4;
    let mut z = seed;
    for _ in 0..60 {
        let f = hol(z);
        let df = (-hol(z + 2.0 * h) + 8.0 * hol(z + h) - 8.0 * hol(z - h) + hol(z - 2.0 * h)) / (12.0 * h);
        if df.norm() == 0.0 || !df.is_finite() {
            return None;
        }
        let step = f / df;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
        if (z - seed).norm() > 2.0 {
            return None;
        }
    }
    z.is_finite().then_some(z)
}

/// Winding number of `u` along a closed path `s in [0, 2 pi) -> path(s)`.
fn winding<F: Field>(u: &F, path: impl Fn(f64) -> C64, samples: usize) -> i64 {
    let mut total = 0.0;
    let mut prev = u.eval(path(0.0));
    for i in 1..=samples {
        let cur = u.eval(path(2.0 * PI * i as f64 / samples as f64));
        total += (cur / prev).arg();
        prev = cur;
    }
    (total / (2.0 * PI)).round() as i64
}

/// Argument-principle count on the boundary of the cell with corner at
/// coordinates `(s1, s2)`. `e^{|z|^2/2}` is a positive factor, so the
/// phase of `u` is the phase of its holomorphic part.
fn boundary_winding<F: Field>(u: &F, params: &LatticeParams, s1: f64, s2: f64) -> i64 {
    let corners = [(s1, s2), (s1 + 1.0, s2), (s1 + 1.0, s2 + 1.0), (s1, s2 + 1.0)];
    let mut samples = 1024usize;
    loop {
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            let at = |t: f64| params.point(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            let mut prev = u.eval(at(0.0));
            for i in 1..=samples {
                let cur = u.eval(at(i as f64 / samples as f64));
                let d = (cur / prev).arg();
                worst = worst.max(d.abs());
                total += d;
                prev = cur;
            }
        }
        if worst < 0.5 || samples >= 1 << 16 {
            return (total / (2.0 * PI)).round() as i64;
        }
        samples *= 4;
    }
}

/// Shift `delta` with `R_delta v` in the periodic space, from the phases
/// `alpha = arg(R_gamma v / v)` and `beta = arg(R_{gamma tau} v / v)`.
///
/// Both phases use the principal branch in `(-pi, pi]`.
pub fn normalize_phase_shift<F: Field>(v: &F, params: &LatticeParams) -> Result<C64> {
    let g = params.gamma;
    let scale = (0..16 * 16)
        .map(|i| v.eval(params.point((i / 16) as f64 / 16.0, (i % 16) as f64 / 16.0)).norm())
        .fold(0.0, f64::max);
    let jitter = [0.0, 0.1, -0.1];
    for &d1 in &jitter {
        for &d2 in &jitter {
            let p = params.point(0.5 + d1, 0.5 + d2);
            let vp = v.eval(p);
            if vp.norm() < 1e-3 * scale {
                continue;
            }
            let ra = magnetic_translate(C64::new(g, 0.0), |z| v.eval(z)).eval(p) / vp;
            let rb = magnetic_translate(g * params.tau, |z| v.eval(z)).eval(p) / vp;
            let alpha = principal_arg(ra);
            let beta = principal_arg(rb);
            return Ok(g / (2.0 * PI * params.n as f64) * (beta - alpha * params.tau));
        }
    }
    Err(Error::ProbeAtZero)
}

fn principal_arg(w: C64) -> f64 {
    let a = w.arg();
    if a < -PI + 1e-9 {
        PI
    } else {
        a
    }
}

/// Midpoint rule over the cell in the coordinates `(r1, r2) in [0,1)^2`.
#[derive(Debug, Clone, Copy)]
pub struct CellQuadrature {
    pub params: LatticeParams,
    pub n1: usize,
    pub n2: usize,
}

impl CellQuadrature {
    pub fn new(params: &LatticeParams, n1: usize, n2: usize) -> Self {
        Self { params: *params, n1: n1.max(1), n2: n2.max(1) }
    }

    pub fn standard(params: &LatticeParams) -> Self {
        Self::new(params, 256, 256)
    }

    pub fn weight(&self) -> f64 {
        self.params.area() / (self.n1 * self.n2) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        self.params.point((i as f64 + 0.5) / self.n1 as f64, (j as f64 + 0.5) / self.n2 as f64)
    }

    /// Weighted sum of `f` over all nodes.
    pub fn integrate<T, G>(&self, f: G) -> T
    where
        T: Send + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        G: Fn(C64) -> T + Sync,
    {
        let w = self.weight();
        let total: T = (0..self.n1)
            .into_par_iter()
            .map(|i| (0..self.n2).map(|j| f(self.node(i, j))).sum::<T>())
            .sum();
        total * w
    }
}

/// `int_K u conj(v)`.
pub fn cell_inner<U: Field, V: Field>(u: &U, v: &V, quad: &CellQuadrature) -> C64 {
    quad.integrate(|z| u.eval(z) * v.eval(z).conj())
}

/// `(int_K |u|^p)^{1/p}`.
pub fn cell_lp<U: Field>(u: &U, p: f64, quad: &CellQuadrature) -> f64 {
    quad.integrate(|z| u.eval(z).norm().powf(p)).powf(1.0 / p)
}

/// Closed form of `int_K |Phi_k|^2`.
pub fn phi_norm_sq(params: &LatticeParams) -> f64 {
    let g = params.gamma;
    g * params.n as f64 * (PI / 2.0).sqrt() * (PI * PI / (2.0 * g * g)).exp()
}

/// Closed form of `int_K |Phi_k|^4`.
pub fn phi_quartic(params: &LatticeParams, policy: &TruncationPolicy) -> Result<f64> {
    let g = params.gamma;
    Ok(params.n as f64 * g * g / 2.0 * (PI * PI / (g * g)).exp() * lattice_gauss(params, policy)?)
}

/// `sum_{j,l} exp(-gamma^2 |j tau/N - l|^2)`.
fn lattice_gauss(params: &LatticeParams, policy: &TruncationPolicy) -> Result<f64> {
    let g2 = params.gamma * params.gamma;
    let w = params.tau / params.n as f64;
    let tol = policy.eps * 1e-3;
    let row = |j: f64| -> Result<f64> {
        let x0 = j * w.re;
        let c = x0.round();
        let mut s = (-g2 * (x0 - c).powi(2)).exp();
        for m in 1..policy.max_terms {
            let mf = m as f64;
            s += (-g2 * (x0 - c - mf).powi(2)).exp() + (-g2 * (x0 - c + mf).powi(2)).exp();
            if (-g2 * (mf + 0.5).powi(2)).exp() < tol {
                return Ok(s * (-g2 * (j * w.im).powi(2)).exp());
            }
        }
        Err(Error::TailNotMet { what: "lattice Gaussian row", terms: policy.max_terms })
    };
    let mut total = row(0.0)?;
    for j in 1..policy.max_terms {
        let jf = j as f64;
        total += row(jf)? + row(-jf)?;
        if 4.0 * (-g2 * ((jf + 1.0) * w.im).powi(2)).exp() < tol {
            return Ok(total);
        }
    }
    Err(Error::TailNotMet { what: "lattice Gaussian sum", terms: policy.max_terms })
}

/// Stationary frequency `int |Phi|^4 / int |Phi|^2` from the double lattice sum.
pub fn lambda0(params: &LatticeParams, policy: &TruncationPolicy) -> Result<f64> {
    let g = params.gamma;
    Ok(g / (2.0 * PI).sqrt() * (PI * PI / (2.0 * g * g)).exp() * lattice_gauss(params, policy)?)
}

/// Rectangular specialization, a square of a single Gaussian sum.
pub fn lambda0_rectangular(gamma: f64, policy: &TruncationPolicy) -> Result<f64> {
    let t = gauss_sum(0, gamma, Parity::All, policy)?;
    Ok((PI * PI / (2.0 * gamma * gamma)).exp() / 2f64.sqrt() * t * t)
}

/// Hexagonal specialization `(I^2 + 2IJ - J^2)/sqrt 2 * e^{pi^2/2 gamma^2}` with
/// `I` the even-index and `J` the odd-index Gaussian sums.
pub fn lambda0_hexagonal(policy: &TruncationPolicy) -> Result<f64> {
    let g = hexagonal_gamma();
    let j = gauss_sum(0, g, Parity::Odd, policy)?;
    let i = gauss_sum(0, g, Parity::All, policy)? - j;
    Ok((PI * PI / (2.0 * g * g)).exp() / 2f64.sqrt() * (i * i + 2.0 * i * j - j * j))
}

/// Coefficients of the orthogonal projection of `u` onto `span{Phi_k}` in
/// `L^2(K)`, i.e. `<u, Phi_k> / |Phi_k|^2`.
pub fn cell_project<U: Field>(u: &U, params: &LatticeParams, quad: &CellQuadrature) -> Result<Vec<C64>> {
    let norm = phi_norm_sq(params);
    (0..params.n)
        .map(|k| Ok(cell_inner(u, &phi_k(params, k)?, quad) / norm))
        .collect()
}

/// `sum_k c_k Phi_k`.
#[derive(Debug, Clone)]
pub struct CellCombination {
    pub params: LatticeParams,
    pub coeffs: Vec<C64>,
    basis: Vec<PhiK>,
}

impl CellCombination {
    pub fn new(params: &LatticeParams, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != params.n as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell amplitudes, got {}",
                params.n,
                coeffs.len()
            )));
        }
        let basis = (0..params.n).map(|k| phi_k(params, k)).collect::<Result<_>>()?;
        Ok(Self { params: *params, coeffs, basis })
    }
}

impl Field for CellCombination {
    fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().zip(&self.basis).map(|(c, p)| c * p.eval(z)).sum()
    }
}

type Holo = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// `u = f(z) exp(-|z|^2/2)` carried by the entire part `f` and its derivative,
/// so the operators `Gamma_1 = i(z - d/dz)` and `Gamma_2 = z + d/dz` on `f`
/// act exactly.
#[derive(Clone)]
pub struct GaussianHolomorphic {
    pub f: Holo,
    pub df: Holo,
}

impl GaussianHolomorphic {
    pub fn new(f: impl Fn(C64) -> C64 + Send + Sync + 'static, df: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), df: Arc::new(df) }
    }

    /// The magnetic translate `R_beta u`, again of this form with
    /// entire part `f(z + beta) exp(-conj(beta) z - |beta|^2/2)`.
    pub fn translated(&self, beta: C64) -> Self {
        let (f, df) = (self.f.clone(), self.df.clone());
        let f2 = f.clone();
        let e = move |z: C64| (-beta.conj() * z - beta.norm_sqr() / 2.0).exp();
        Self {
            f: Arc::new(move |z| f2(z + beta) * e(z)),
            df: Arc::new(move |z| (df(z + beta) - beta.conj() * f(z + beta)) * e(z)),
        }
    }

    /// `(alpha_1 Gamma_1 + alpha_2 Gamma_2) u` at `z`, with `alpha = alpha_1 + i alpha_2`.
    pub fn gamma_apply(&self, alpha: C64, z: C64) -> C64 {
        let (f, df) = ((self.f)(z), (self.df)(z));
        let g1 = C64::i() * (z * f - df);
        let g2 = z * f + df;
        (alpha.re * g1 + alpha.im * g2) * (-z.norm_sqr() / 2.0).exp()
    }
}

impl Field for GaussianHolomorphic {
    fn eval(&self, z: C64) -> C64 {
        (self.f)(z) * (-z.norm_sqr() / 2.0).exp()
    }
}
