//! Linearization around the rectangular and hexagonal lattice solutions.
//!
//! On the Fourier side the linearized flow acts pointwise in `xi` on the pair
//! `(f(xi), g(xi))` through the real symmetric matrix
//! `A(xi) = [[a, b], [-b, -a]]`, whose eigenvalues are `+-mu`. Everything here
//! is built from the two cosine series `ell` and `h`, and differences that
//! vanish at `xi = 0` are always formed from the drops `S(0) - S(xi)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{sup_norm, CoeffState, Convention, SupSearch};
use crate::lattice::hexagonal_gamma;
use crate::specfun::{gauss_sum, CosineSeries, Parity, TruncationPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Rect,
    Hexa,
}

/// Closed-form evaluator of `a`, `b` and `mu^2 = a^2 - b^2`.
#[derive(Debug, Clone, Copy)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub gamma: f64,
    /// stationary frequency; `a(0) = b(0) = lambda` in both cases
    pub lambda: f64,
    ell0: f64,
    h0: f64,
    policy: TruncationPolicy,
}

/// Symbol entries at one `xi`, with `a - b` and `a + b` formed stably.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolPoint {
    pub a: f64,
    pub b: f64,
    pub a_minus_b: f64,
    pub a_plus_b: f64,
}

impl SymbolPoint {
    /// `mu^2 = (a - b)(a + b)`.
    pub fn mu_sq(&self) -> f64 {
        self.a_minus_b * self.a_plus_b
    }

    /// `b^2 - a^2`.
    pub fn det(&self) -> f64 {
        -self.mu_sq()
    }

    /// Principal root, with `Im >= 0` when `mu^2 < 0`.
    pub fn mu(&self) -> C64 {
        let m2 = self.mu_sq();
        if m2 >= 0.0 {
            C64::new(m2.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-m2).sqrt())
        }
    }
}

/// Prefactor `e^{pi^2 / 2 gamma^2} / sqrt 2` of the rectangular symbol.
fn rect_prefactor(gamma: f64) -> f64 {
    (PI * PI / (2.0 * gamma * gamma)).exp() / 2f64.sqrt()
}

pub fn build_symbol(kind: SymbolKind, gamma: f64) -> Result<Symbol> {
    let policy = TruncationPolicy::default();
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if kind == SymbolKind::Hexa && (gamma - hexagonal_gamma()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "the hexagonal symbol needs gamma = {}, got {gamma}",
            hexagonal_gamma()
        )));
    }
    let ell0 = CosineSeries::Ell.eval(0.0, gamma, 0, &policy)?;
    let h0 = CosineSeries::Odd.eval(0.0, gamma, 0, &policy)?;
    let lambda = match kind {
        SymbolKind::Rect => rect_prefactor(gamma) * ell0 * ell0,
        SymbolKind::Hexa => (ell0 * ell0 - 2.0 * h0 * h0) / (gamma * PI.sqrt()),
    };
    Ok(Symbol { kind, gamma, lambda, ell0, h0, policy })
}

pub fn hexagonal_symbol() -> Symbol {
    build_symbol(SymbolKind::Hexa, hexagonal_gamma()).expect("hexagonal parameters are valid")
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Symbol {
    pub fn at(&self, xi: f64) -> Result<SymbolPoint> {
        let g = self.gamma;
        let dl = CosineSeries::Ell.drop_from_origin(xi, g, &self.policy)?;
        let l = self.ell0 - dl;
        Ok(match self.kind {
            SymbolKind::Rect => {
                let c = rect_prefactor(g);
                let a = c * self.ell0 * (2.0 * l - self.ell0);
                let b = c * l * l;
                SymbolPoint { a, b, a_minus_b: -c * dl * dl, a_plus_b: a + b }
            }
            SymbolKind::Hexa => {
                let s = 1.0 / (g * PI.sqrt());
                let dh = CosineSeries::Odd.drop_from_origin(xi, g, &self.policy)?;
                let h = self.h0 - dh;
                let a = 2.0 * s * (l * self.ell0 - 2.0 * h * self.h0) - self.lambda;
                let b = s * (l * l - 2.0 * h * h);
                SymbolPoint { a, b, a_minus_b: s * (2.0 * dh * dh - dl * dl), a_plus_b: a + b }
            }
        })
    }

    /// `d`-th derivatives of `a` and `b` (term-wise, `d <= 4`).
    pub fn derivs(&self, xi: f64, d: u32) -> Result<(f64, f64)> {
        if d == 0 {
            let p = self.at(xi)?;
            return Ok((p.a, p.b));
        }
        let g = self.gamma;
        let l: Vec<f64> = (0..=d).map(|i| CosineSeries::Ell.eval(xi, g, i, &self.policy)).collect::<Result<_>>()?;
        let conv = |v: &[f64]| (0..=d).map(|i| binom(d, i) * v[i as usize] * v[(d - i) as usize]).sum::<f64>();
        Ok(match self.kind {
            SymbolKind::Rect => {
                let c = rect_prefactor(g);
                (2.0 * c * self.ell0 * l[d as usize], c * conv(&l))
            }
            SymbolKind::Hexa => {
                let s = 1.0 / (g * PI.sqrt());
                let h: Vec<f64> =
                    (0..=d).map(|i| CosineSeries::Odd.eval(xi, g, i, &self.policy)).collect::<Result<_>>()?;
                let a = 2.0 * s * (l[d as usize] * self.ell0 - 2.0 * h[d as usize] * self.h0);
                (a, s * (conv(&l) - 2.0 * conv(&h)))
            }
        })
    }

    /// `mu` and its first three derivatives, for `mu^2 > 0`.
    pub fn mu_derivs(&self, xi: f64) -> Result<[f64; 4]> {
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        for d in 0..4 {
            let (x, y) = self.derivs(xi, d)?;
            a[d as usize] = x;
            b[d as usize] = y;
        }
        let p = |d: usize| (0..=d).map(|i| binom(d as u32, i as u32) * (a[i] * a[d - i] - b[i] * b[d - i])).sum::<f64>();
        let mu = self.at(xi)?.mu_sq().max(0.0).sqrt();
        let (p1, p2, p3) = (p(1), p(2), p(3));
        Ok([
            mu,
            p1 / (2.0 * mu),
            p2 / (2.0 * mu) - p1 * p1 / (4.0 * mu.powi(3)),
            p3 / (2.0 * mu) - 3.0 * p1 * p2 / (4.0 * mu.powi(3)) + 3.0 * p1.powi(3) / (8.0 * mu.powi(5)),
        ])
    }

    /// Samples on the periodic grid `xi_i = i / m`, `i < m`.
    pub fn sample(&self, m: usize) -> Result<SymbolGrid> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!("grid needs at least 4 points, got {m}")));
        }
        let pts: Vec<SymbolPoint> =
            (0..m).into_par_iter().map(|i| self.at(i as f64 / m as f64)).collect::<Result<_>>()?;
        Ok(SymbolGrid { symbol: *self, points: pts })
    }
}

/// A symbol sampled on `i / m`.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    pub symbol: Symbol,
    pub points: Vec<SymbolPoint>,
}

impl SymbolGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xi(&self, i: usize) -> f64 {
        i as f64 / self.points.len() as f64
    }
}

/// Stability verdict of a determinant scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub kind: SymbolKind,
    pub gamma: f64,
    pub grid_size: usize,
    pub det_min: f64,
    pub det_max: f64,
    /// interior points with `det > 0`
    pub positive_points: usize,
    /// consecutive grid points between which `det` changes sign
    pub sign_changes: Vec<(f64, f64)>,
    /// `sup Re(-i mu) = sup sqrt(max(det, 0))`
    pub max_growth_rate: f64,
    pub verdict: Verdict,
}

/// `det = b^2 - a^2` on the interior of the closed grid `i / (n - 1)`.
/// Positive `det` means `mu` is imaginary and the flow grows, so the verdict
/// is unstable as soon as one interior value is positive.
pub fn det_scan(sym: &Symbol, grid_size: usize) -> Result<StabilityReport> {
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!("det scan needs at least 64 points, got {grid_size}")));
    }
    let xs: Vec<f64> = (1..grid_size - 1).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    let dets: Vec<f64> = xs.par_iter().map(|&x| sym.at(x).map(|p| p.det())).collect::<Result<_>>()?;
    let det_min = dets.iter().cloned().fold(f64::INFINITY, f64::min);
    let det_max = dets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let positive_points = dets.iter().filter(|d| **d > 0.0).count();
    let sign_changes = (1..dets.len())
        .filter(|&i| (dets[i - 1] > 0.0) != (dets[i] > 0.0))
        .map(|i| (xs[i - 1], xs[i]))
        .collect();
    Ok(StabilityReport {
        kind: sym.kind,
        gamma: sym.gamma,
        grid_size,
        det_min,
        det_max,
        positive_points,
        sign_changes,
        max_growth_rate: det_max.max(0.0).sqrt(),
        verdict: if positive_points > 0 { Verdict::Unstable } else { Verdict::Stable },
    })
}

/// Whether the rectangular determinant takes negative values on `(0, 1)`.
pub fn rect_det_goes_negative(gamma: f64) -> Result<bool> {
    let sym = build_symbol(SymbolKind::Rect, gamma)?;
    Ok(det_scan(&sym, 4097)?.det_min < 0.0)
}

/// Bisection for the period at which the rectangular determinant starts to
/// change sign.
pub fn gamma_threshold_scan(lo: f64, hi: f64, resolution: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo && resolution > 0.0) {
        return Err(Error::InvalidParameter(format!("bad range [{lo}, {hi}] or resolution {resolution}")));
    }
    let (mut a, mut b) = (lo, hi);
    let pa = rect_det_goes_negative(a)?;
    if pa == rect_det_goes_negative(b)? {
        return Err(Error::NoTransition { lo, hi });
    }
    while b - a > resolution {
        let m = 0.5 * (a + b);
        if rect_det_goes_negative(m)? == pa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `sin(x)/x` for `x^2 = z` of either sign (`sinh` for negative `z`).
fn sinc_sq(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z / 6.0 + z * z / 120.0
    } else if z > 0.0 {
        let x = z.sqrt();
        x.sin() / x
    } else {
        let x = (-z).sqrt();
        x.sinh() / x
    }
}

/// `cos(x)` for `x^2 = z` of either sign.
fn cos_sq(z: f64) -> f64 {
    if z >= 0.0 {
        z.sqrt().cos()
    } else {
        (-z).sqrt().cosh()
    }
}

/// `t sin(t mu) / (t mu)`, regular at `mu = 0`.
pub fn t_sinc(t: f64, mu: C64) -> C64 {
    let x = t * mu;
    if x.norm() < 1e-4 {
        let z = x * x;
        t * (1.0 - z / 6.0 + z * z / 120.0)
    } else {
        x.sin() / mu
    }
}

pub type Mat2 = [[C64; 2]; 2];

/// `exp(-i t A)` from the point values; depends on `mu` only through `mu^2`,
/// so all entries are `cos` and `sinc` of real or imaginary arguments.
pub fn propagator_at(p: &SymbolPoint, t: f64) -> Mat2 {
    let z = t * t * p.mu_sq();
    let c = cos_sq(z);
    let s = t * sinc_sq(z);
    let i = C64::i();
    [[c - i * p.a * s, -i * p.b * s], [i * p.b * s, c + i * p.a * s]]
}

pub fn propagator(sym: &Symbol, t: f64, xi: f64) -> Result<Mat2> {
    Ok(propagator_at(&sym.at(xi)?, t))
}

/// Functions `k1^+-`, `k2^+-` and the ratios `F = (a-b)/mu`, `G = (a+b)/mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFunctions {
    pub k1_plus: f64,
    pub k1_minus: f64,
    pub k2_plus: f64,
    pub k2_minus: f64,
    pub f: f64,
    pub g: f64,
}

/// Defined where `mu > 0` (hexagonal interior).
pub fn k_functions(p: &SymbolPoint) -> KFunctions {
    let mu = p.mu_sq().max(0.0).sqrt();
    KFunctions {
        k1_plus: (mu - p.a) / (2.0 * mu),
        k1_minus: (mu + p.a) / (2.0 * mu),
        k2_plus: -p.b / (2.0 * mu),
        k2_minus: p.b / (2.0 * mu),
        f: p.a_minus_b / mu,
        g: p.a_plus_b / mu,
    }
}

/// Linearized state on the periodic grid `xi_i = i / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPair {
    pub f: Vec<C64>,
    pub g: Vec<C64>,
}

fn fft_plan(m: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    }
}

impl FourierPair {
    /// `f(xi) = sum c_n e^{-2 pi i n xi}`, `g(xi) = conj f(-xi)` from
    /// coefficients on `[kmin, kmin + len)`.
    pub fn from_coeffs(kmin: i64, coeffs: &[C64], m: usize) -> Result<Self> {
        if coeffs.len() > m || m < 4 {
            return Err(Error::InvalidParameter(format!("window of {} modes does not fit a grid of {m}", coeffs.len())));
        }
        let mut f = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m];
        for (i, c) in coeffs.iter().enumerate() {
            let idx = (kmin + i as i64).rem_euclid(m as i64) as usize;
            f[idx] += c;
            g[idx] += c.conj();
        }
        let plan = fft_plan(m, false);
        plan.process(&mut f);
        plan.process(&mut g);
        Ok(Self { f, g })
    }

    pub fn from_state(state: &CoeffState, m: usize) -> Result<Self> {
        Self::from_coeffs(state.kmin, &state.values, m)
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// Coefficients `c_n`, `n in [-m/2, m/2)`, by inverse transform of `f`.
    pub fn coeffs(&self) -> (i64, Vec<C64>) {
        let m = self.f.len();
        let mut c = self.f.clone();
        fft_plan(m, true).process(&mut c);
        let half = (m / 2) as i64;
        let out = (-half..m as i64 - half).map(|n| c[n.rem_euclid(m as i64) as usize] / m as f64).collect();
        (-half, out)
    }

    /// `max |g(xi) - conj f(-xi)|`, relative to `max(1, max |f|)`.
    pub fn reality_defect(&self) -> f64 {
        let m = self.f.len();
        let scale = self.f.iter().map(|v| v.norm()).fold(1.0, f64::max);
        (0..m).map(|i| (self.g[i] - self.f[(m - i) % m].conj()).norm()).fold(0.0, f64::max) / scale
    }

    /// `L^2(0,1)` norm of `f` by the periodic trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        (self.f.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.f.len() as f64).sqrt()
    }
}

/// Exact evolution `(f, g)(t) = exp(-i t A(xi)) (f, g)(0)` at every grid point.
pub fn evolve_pair(pair0: &FourierPair, grid: &SymbolGrid, t: f64) -> Result<FourierPair> {
    if pair0.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "pair has {} points, symbol grid has {}",
            pair0.len(),
            grid.len()
        )));
    }
    let defect = pair0.reality_defect();
    if !(defect <= 1e-12) {
        return Err(Error::RealityViolated { defect });
    }
    let (f, g): (Vec<C64>, Vec<C64>) = grid
        .points
        .par_iter()
        .zip(pair0.f.par_iter().zip(&pair0.g))
        .map(|(p, (f0, g0))| {
            let m = propagator_at(p, t);
            (m[0][0] * f0 + m[0][1] * g0, m[1][0] * f0 + m[1][1] * g0)
        })
        .unzip();
    Ok(FourierPair { f, g })
}

/// `C` in `mu(xi) ~ C xi^2`, from fourth derivatives of `a` and `b` at 0.
pub fn mu_expansion_constant(sym: &Symbol) -> Result<f64> {
    if sym.kind != SymbolKind::Hexa {
        return Err(Error::InvalidParameter("the expansion constant is defined for the hexagonal symbol".into()));
    }
    let (a4, b4) = sym.derivs(0.0, 4)?;
    Ok((sym.lambda * (a4 - b4) / 12.0).sqrt())
}

/// Interior zeros of `mu''` on `(0, 1)`, bracketed on a 512-point scan and
/// refined by bisection.
pub fn mu_second_derivative_zeros(sym: &Symbol) -> Result<Vec<f64>> {
    let n = 512;
    let d2 = |x: f64| sym.mu_derivs(x).map(|d| d[2]);
    let mut out = Vec::new();
    let mut prev = (1.0 / n as f64, d2(1.0 / n as f64)?);
    for i in 2..n {
        let x = i as f64 / n as f64;
        let v = d2(x)?;
        if (v > 0.0) != (prev.1 > 0.0) {
            let (mut lo, mut hi, flo) = (prev.0, x, prev.1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (d2(mid)? > 0.0) == (flo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = (x, v);
    }
    Ok(out)
}

/// The two weighted `L^2` norms controlling linear stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNorms {
    /// `|(f + g) / mu^{j+1}|`
    pub plus: f64,
    /// `|(f - g) / mu^j|`
    pub minus: f64,
}

/// Weighted norms on the interior of the periodic grid (the point `xi = 0`,
/// where `mu` vanishes, is left out). Values of `f + g` at round-off level
/// are treated as zero so that the weight does not amplify noise.
pub fn weighted_norms(pair: &FourierPair, grid: &SymbolGrid, j: u32) -> Result<WeightedNorms> {
    if grid.symbol.kind != SymbolKind::Hexa {
        return Err(Error::InvalidParameter("weighted norms need the hexagonal symbol".into()));
    }
    if pair.len() != grid.len() {
        return Err(Error::InvalidParameter("pair and symbol grids differ".into()));
    }
    let m = pair.len();
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for i in 1..m {
        let mu = grid.points[i].mu_sq().max(0.0).sqrt();
        let (f, g) = (pair.f[i], pair.g[i]);
        let s = f + g;
        let floor = 64.0 * f64::EPSILON * (f.norm() + g.norm());
        plus[i] = if s.norm() <= floor { 0.0 } else { s.norm() / mu.powi(j as i32 + 1) };
        minus[i] = (f - g).norm() / mu.powi(j as i32);
    }
    // Divergence check on both ends: growth steeper than xi^{-1/2} is not
    // square integrable.
    for side in [true, false] {
        let pts: Vec<(f64, f64)> = (1..=8)
            .map(|k| if side { k } else { m - k })
            .filter(|&i| plus[i] > 0.0)
            .map(|i| {
                let x = grid.xi(i);
                ((if side { x } else { 1.0 - x }).ln(), plus[i].ln())
            })
            .collect();
        if pts.len() >= 3 {
            let slope = fit_slope(&pts);
            if slope < -0.5 {
                return Err(Error::NotAdmissible(format!(
                    "(f+g)/mu^{} grows like xi^{slope:.2} at the {} end",
                    j + 1,
                    if side { "left" } else { "right" }
                )));
            }
        }
    }
    let norm = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / m as f64).sqrt();
    Ok(WeightedNorms { plus: norm(&plus), minus: norm(&minus) })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `|Re sum c_n|` and `|Re sum n c_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub r0: f64,
    pub r1: f64,
}

pub fn admissibility_residual(pair: &FourierPair) -> Admissibility {
    let (kmin, c) = pair.coeffs();
    let s0: C64 = c.iter().sum();
    let s1: C64 = c.iter().enumerate().map(|(i, v)| (kmin + i as i64) as f64 * v).sum();
    Admissibility { r0: s0.re.abs(), r1: s1.re.abs() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_norm: f64,
    pub fitted_slope_so_far: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    pub grid_size: usize,
    pub rows: Vec<DecayRow>,
    /// slope over all times
    pub slope: Option<f64>,
    /// slope over the last decade of times
    pub slope_last_decade: Option<f64>,
}

/// Grid size for evolving to `t_max`: the coefficients of the evolved pair
/// spread up to `|n| ~ t max|mu'| / 2 pi`, and the grid keeps a factor 4 on
/// top of that.
pub fn decay_grid_size(sym: &Symbol, t_max: f64, window: usize) -> Result<usize> {
    let probe = sym.sample(4096)?;
    let m = probe.len();
    let mut slope: f64 = 0.0;
    for i in 0..m {
        let d = probe.points[(i + 1) % m].mu().re - probe.points[i].mu().re;
        slope = slope.max(d.abs() * m as f64);
    }
    let need = 4.0 * (window as f64 + t_max * 1.1 * slope / (2.0 * PI));
    Ok((need.max(4096.0) as usize).next_power_of_two())
}

/// Evolves admissible hexagonal data and records the sup norm of the
/// synthesized solution at each time.
pub fn linf_decay_experiment(state0: &CoeffState, times: &[f64], sym: &Symbol, sup: SupSearch) -> Result<DecayTable> {
    if sym.kind != SymbolKind::Hexa || state0.conv.tag != Convention::Hexa {
        return Err(Error::InvalidParameter("decay experiment runs on hexagonal data and symbol".into()));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let m = decay_grid_size(sym, t_max, state0.values.len())?;
    let grid = sym.sample(m)?;
    let pair0 = FourierPair::from_state(state0, m)?;
    let adm = admissibility_residual(&pair0);
    let size = 1.0 + state0.values.iter().map(|v| v.norm()).sum::<f64>();
    if adm.r0 > 1e-10 * size || adm.r1 > 1e-10 * size * (1.0 + state0.kmax().abs().max(state0.kmin.abs()) as f64) {
        return Err(Error::NotAdmissible(format!("Re sum c = {:e}, Re sum n c = {:e}", adm.r0, adm.r1)));
    }
    let mut rows = Vec::with_capacity(times.len());
    let mut pts = Vec::new();
    for &t in times {
        let pair = evolve_pair(&pair0, &grid, t)?;
        let (kmin, c) = pair.coeffs();
        let state = CoeffState { conv: state0.conv, kmin, values: c };
        let s = sup_norm(&state, sup);
        if s > 0.0 && t > 0.0 {
            pts.push((t.ln(), s.ln()));
        }
        rows.push(DecayRow { t, sup_norm: s, fitted_slope_so_far: (pts.len() >= 2).then(|| fit_slope(&pts)) });
    }
    let last: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.0 >= (t_max / 10.0).ln() - 1e-12).collect();
    Ok(DecayTable {
        grid_size: m,
        slope: (pts.len() >= 2).then(|| fit_slope(&pts)),
        slope_last_decade: (last.len() >= 2).then(|| fit_slope(&last)),
        rows,
    })
}

/// Dyadic blocks `2^{k/2} k^{-theta}` on `[2^{-k-1}, 2^{-k})` and their mirror
/// images at `1 - xi`, with `g = f`. Levels narrower than two grid cells are
/// dropped.
pub fn dyadic_pair(theta: f64, k0: u32, m: usize) -> Result<FourierPair> {
    if !(theta > 0.5) || k0 == 0 {
        return Err(Error::InvalidParameter(format!("dyadic data needs theta > 1/2 and k0 >= 1 (got {theta}, {k0})")));
    }
    let mut f = vec![C64::new(0.0, 0.0); m];
    let mut k = k0;
    while 0.5f64.powi(k as i32) >= 2.0 / m as f64 {
        let (lo, hi) = (0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32));
        let v = 2f64.powf(k as f64 / 2.0) * (k as f64).powf(-theta);
        for (i, fi) in f.iter_mut().enumerate() {
            let x = i as f64 / m as f64;
            if (x >= lo && x < hi) || (1.0 - x >= lo && 1.0 - x < hi) {
                *fi = C64::new(v, 0.0);
            }
        }
        k += 1;
    }
    Ok(FourierPair { g: f.clone(), f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    pub norm: f64,
    /// `|U(t)| / ((1 + t) |U_0|)`
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    pub exponent: f64,
    pub max_ratio: f64,
    /// `max(1, sup|a| + sup|b|)`: a pointwise bound on `|exp(-itA)| / (1+t)`
    pub bound_constant: f64,
}

/// Tracks `|f(t)|_{L^2}` against `(1 + t) |f_0|`.
pub fn growth_table(pair0: &FourierPair, grid: &SymbolGrid, times: &[f64]) -> Result<GrowthTable> {
    let n0 = pair0.l2_norm();
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("growth table needs nonzero data".into()));
    }
    let mut rows = Vec::new();
    for &t in times {
        let n = evolve_pair(pair0, grid, t)?.l2_norm();
        rows.push(GrowthRow { t, norm: n, ratio: n / ((1.0 + t) * n0) });
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.t > 0.0).map(|r| (r.t.ln(), r.norm.ln())).collect();
    let sup_a = grid.points.iter().map(|p| p.a.abs()).fold(0.0, f64::max);
    let sup_b = grid.points.iter().map(|p| p.b.abs()).fold(0.0, f64::max);
    Ok(GrowthTable {
        exponent: fit_slope(&pts),
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        bound_constant: (sup_a + sup_b).max(1.0),
        rows,
    })
}

pub fn growth_experiment(theta: f64, k0: u32, times: &[f64], grid: &SymbolGrid) -> Result<GrowthTable> {
    let pair0 = dyadic_pair(theta, k0, grid.len())?;
    growth_table(&pair0, grid, times)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstabilityRate {
    pub predicted: f64,
    pub measured: f64,
    pub t_max: f64,
}

/// Evolves `f_0 = g_0 = 1` (the data of `psi_0`) and fits the exponential
/// rate of `|f(t)|` over `[t_max/2, t_max]`. With no `t_max` given the run
/// lasts 200 e-folds of the predicted rate (2000 time units when stable).
pub fn instability_rate(sym: &Symbol, t_max: Option<f64>, m: usize) -> Result<InstabilityRate> {
    let grid = sym.sample(m)?;
    let predicted = grid.points.iter().map(|p| p.det().max(0.0).sqrt()).fold(0.0, f64::max);
    let t_max = t_max.unwrap_or(if predicted > 0.0 { 200.0 / predicted } else { 2000.0 });
    let one = vec![C64::new(1.0, 0.0); m];
    let pair0 = FourierPair { f: one.clone(), g: one };
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| t_max * (0.5 + 0.5 * i as f64 / 20.0))
        .map(|t| Ok((t, evolve_pair(&pair0, &grid, t)?.l2_norm().ln())))
        .collect::<Result<_>>()?;
    Ok(InstabilityRate { predicted, measured: fit_slope(&pts), t_max })
}

pub fn rect_instability_rate(gamma: f64, t_max: Option<f64>) -> Result<InstabilityRate> {
    instability_rate(&build_symbol(SymbolKind::Rect, gamma)?, t_max, 4096)
}

/// Constants of the moment equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentConstants {
    pub lambda: f64,
    pub l: f64,
    pub l2: f64,
    pub l3: f64,
}

pub fn moment_constants(sym: &Symbol) -> Result<MomentConstants> {
    let g = sym.gamma;
    let p = TruncationPolicy::default();
    let t = |n| gauss_sum(n, g, Parity::All, &p);
    let to = |n| gauss_sum(n, g, Parity::Odd, &p);
    let s = 1.0 / (g * PI.sqrt());
    Ok(MomentConstants {
        lambda: sym.lambda,
        l: 2.0 * s * (t(0)? * t(2)? - 2.0 * to(0)? * to(2)?),
        l2: 2.0 * s * (t(0)? * t(4)? - 2.0 * to(0)? * to(4)?),
        l3: 6.0 * s * (t(2)?.powi(2) - 2.0 * to(2)?.powi(2)),
    })
}

/// `K_j = sum n^j c_n` for `j = 0..4`.
pub fn moments(pair: &FourierPair) -> [C64; 5] {
    let (kmin, c) = pair.coeffs();
    let mut k = [C64::new(0.0, 0.0); 5];
    for (i, v) in c.iter().enumerate() {
        let n = (kmin + i as i64) as f64;
        let mut p = 1.0;
        for kj in k.iter_mut() {
            *kj += p * v;
            p *= n;
        }
    }
    k
}

/// Time derivatives of `K_0..K_4` predicted by the closed moment equations
/// `i K_j' = lambda (K_j + conj K_j) + lower-order terms`.
pub fn moment_rates(k: &[C64; 5], c: &MomentConstants) -> [C64; 5] {
    let re2 = |z: C64| C64::new(2.0 * z.re, 0.0);
    let rhs = [
        c.lambda * re2(k[0]),
        c.lambda * re2(k[1]),
        c.lambda * re2(k[2]) + c.l * re2(k[0]),
        c.lambda * re2(k[3]) + 3.0 * c.l * re2(k[1]),
        c.lambda * re2(k[4]) + 6.0 * c.l * re2(k[2]) + c.l2 * re2(k[0]) + c.l3 * k[0].conj(),
    ];
    rhs.map(|r| -C64::i() * r)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub re: [f64; 5],
    pub im: [f64; 5],
    /// `|K_j'(t) - predicted|`, with `K_j'` from a centred difference
    pub rate_residual: [f64; 5],
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentTrace {
    pub constants: MomentConstants,
    pub rows: Vec<MomentRow>,
}

/// Moments of the evolved pair at each time, with the residual of the moment
/// equations from a centred difference of step `h`.
pub fn moment_trace(pair0: &FourierPair, grid: &SymbolGrid, times: &[f64], h: f64) -> Result<MomentTrace> {
    let consts = moment_constants(&grid.symbol)?;
    let rows = times
        .iter()
        .map(|&t| {
            let k = moments(&evolve_pair(pair0, grid, t)?);
            let kp = moments(&evolve_pair(pair0, grid, t + h)?);
            let km = moments(&evolve_pair(pair0, grid, t - h)?);
            let pred = moment_rates(&k, &consts);
            let mut res = [0.0; 5];
            for j in 0..5 {
                res[j] = ((kp[j] - km[j]) / (2.0 * h) - pred[j]).norm();
            }
            Ok(MomentRow { t, re: k.map(|z| z.re), im: k.map(|z| z.im), rate_residual: res })
        })
        .collect::<Result<_>>()?;
    Ok(MomentTrace { constants: consts, rows })
}

/// One row of the symbol table export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumRow {
    pub xi: f64,
    pub a: f64,
    pub b: f64,
    pub mu_re: f64,
    pub mu_im: f64,
    pub det: f64,
}

/// Symbol values on the closed grid `i / (n - 1)`.
pub fn spectrum_rows(sym: &Symbol, n: usize) -> Result<Vec<SpectrumRow>> {
    (0..n)
        .map(|i| {
            let xi = i as f64 / (n - 1) as f64;
            let p = sym.at(xi)?;
            let mu = p.mu();
            Ok(SpectrumRow { xi, a: p.a, b: p.b, mu_re: mu.re, mu_im: mu.im, det: p.det() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuProfileRow {
    pub xi: f64,
    pub mu: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// `mu` and its first three derivatives on the open grid `i / n`, `0 < i < n`.
pub fn mu_profile(sym: &Symbol, n: usize) -> Result<Vec<MuProfileRow>> {
    (1..n)
        .map(|i| {
            let xi = i as f64 / n as f64;
            let d = sym.mu_derivs(xi)?;
            Ok(MuProfileRow { xi, mu: d[0], d1: d[1], d2: d[2], d3: d[3] })
        })
        .collect()
}
