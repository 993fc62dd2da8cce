//! Simply periodic strip: the Hilbert basis `psi_k`, coefficient states,
//! strip quadrature, the projector kernel and the interaction coefficients.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{hexagonal_gamma, hexagonal_tau, Field};
use crate::specfun::{theta, TruncationPolicy};

/// Which phase convention the basis carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `psi_k = R_{i k pi / gamma} psi_0`, real Gaussian weights.
    Rect,
    /// `psi_k = R_{k tau gamma} psi_0`, complex phase `exp(i pi tau k^2)`.
    Hexa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConvention {
    pub tag: Convention,
    pub gamma: f64,
    pub tau: C64,
}

impl BasisConvention {
    pub fn rect(gamma: f64) -> Self {
        Self { tag: Convention::Rect, gamma, tau: C64::new(0.0, PI / (gamma * gamma)) }
    }

    pub fn hexa() -> Self {
        Self { tag: Convention::Hexa, gamma: hexagonal_gamma(), tau: hexagonal_tau() }
    }

    pub fn from_tag(tag: Convention, gamma: f64) -> Result<Self> {
        match tag {
            Convention::Rect if gamma > 0.0 && gamma.is_finite() => Ok(Self::rect(gamma)),
            Convention::Rect => Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}"))),
            Convention::Hexa => {
                if (gamma - hexagonal_gamma()).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "hexagonal convention fixes gamma = {}, got {gamma}",
                        hexagonal_gamma()
                    )));
                }
                Ok(Self::hexa())
            }
        }
    }

    fn norm(&self) -> f64 {
        (2.0 / (PI * self.gamma * self.gamma)).powf(0.25)
    }

    /// Index-dependent part of the exponent.
    fn phase(&self, k: i64) -> C64 {
        let kf = k as f64;
        match self.tag {
            Convention::Rect => C64::new(-PI * PI * kf * kf / (self.gamma * self.gamma), 0.0),
            Convention::Hexa => C64::i() * PI * self.tau * kf * kf,
        }
    }
}

/// `z^2/2 - |z|^2/2 = -y^2 + i x y`.
fn gauss_phase(z: C64) -> C64 {
    C64::new(-z.im * z.im, z.re * z.im)
}

/// Basis function `psi_k(z)`; the exponent is assembled before a single `exp`
/// so large `|k|` does not overflow.
pub fn psi(k: i64, z: C64, conv: &BasisConvention) -> C64 {
    let e = 2.0 * C64::i() * PI * k as f64 * z / conv.gamma + conv.phase(k) + gauss_phase(z);
    conv.norm() * e.exp()
}

/// Coefficients on a finite window `[kmin, kmin + len)`; zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffState {
    pub conv: BasisConvention,
    pub kmin: i64,
    pub values: Vec<C64>,
}

impl CoeffState {
    pub fn zeros(conv: BasisConvention, kmin: i64, kmax: i64) -> Self {
        let len = (kmax - kmin + 1).max(0) as usize;
        Self { conv, kmin, values: vec![C64::new(0.0, 0.0); len] }
    }

    /// `c e_k` on the symmetric window `|k| <= half_width`.
    pub fn unit(conv: BasisConvention, half_width: i64, k: i64, c: C64) -> Self {
        let mut s = Self::zeros(conv, -half_width, half_width);
        s.set(k, c);
        s
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.values.len() as i64 - 1
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.kmin..=self.kmax()
    }

    pub fn get(&self, k: i64) -> C64 {
        if k < self.kmin || k > self.kmax() {
            C64::new(0.0, 0.0)
        } else {
            self.values[(k - self.kmin) as usize]
        }
    }

    /// Panics outside the window, which is a caller bug.
    pub fn set(&mut self, k: i64, v: C64) {
        assert!(k >= self.kmin && k <= self.kmax(), "index {k} outside window");
        self.values[(k - self.kmin) as usize] = v;
    }

    pub fn with_values(&self, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { conv: self.conv, kmin: self.kmin, values }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoeffStateJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CoeffStateJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("bad coefficient JSON: {e}")))?;
        Ok(Self {
            conv: BasisConvention::from_tag(raw.convention, raw.gamma)?,
            kmin: raw.kmin,
            values: raw.values.iter().map(|p| C64::new(p[0], p[1])).collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffStateJson {
    convention: Convention,
    gamma: f64,
    kmin: i64,
    values: Vec<[f64; 2]>,
}

impl From<&CoeffState> for CoeffStateJson {
    fn from(s: &CoeffState) -> Self {
        Self {
            convention: s.conv.tag,
            gamma: s.conv.gamma,
            kmin: s.kmin,
            values: s.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

pub fn synthesize(state: &CoeffState, z: C64) -> C64 {
    state.indices().zip(&state.values).map(|(k, c)| c * psi(k, z, &state.conv)).sum()
}

/// A coefficient state viewed as a pointwise function.
pub struct Synthesized<'a>(pub &'a CoeffState);

impl Field for Synthesized<'_> {
    fn eval(&self, z: C64) -> C64 {
        synthesize(self.0, z)
    }
}

/// Tensor rule on the strip: uniform nodes over one period in `x`, an
/// arbitrary weighted node set in `y`.
#[derive(Debug, Clone)]
pub struct StripQuadrature {
    pub gamma: f64,
    pub nx: usize,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
}

impl StripQuadrature {
    /// Gauss-Hermite nodes for the weight `exp(-2 (y - center)^2)`; the weight
    /// is divided back out, so the rule integrates plain functions and is exact
    /// for polynomials times that Gaussian up to degree `2 ny - 1`.
    pub fn hermite(gamma: f64, nx: usize, ny: usize, center: f64) -> Self {
        let (t, w) = gauss_hermite(ny);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ys = t.iter().map(|t| center + s * t).collect();
        let wy = t.iter().zip(&w).map(|(t, w)| s * w * (t * t).exp()).collect();
        Self { gamma, nx, ys, wy }
    }

    /// Rule covering every mode of the window `[kmin, kmax]`: modes sit at
    /// heights `-k pi / gamma`, so a fine trapezoid over the union of their
    /// supports (with margin 8) integrates all Gaussian-type integrands to
    /// near machine precision.
    pub fn for_window(gamma: f64, kmin: i64, kmax: i64) -> Self {
        let lo = -(kmax as f64) * PI / gamma - 8.0;
        let hi = -(kmin as f64) * PI / gamma + 8.0;
        let h = 0.125;
        let n = ((hi - lo) / h).ceil() as usize + 1;
        let ys = (0..n).map(|i| lo + i as f64 * h).collect();
        Self { gamma, nx: 128, ys, wy: vec![h; n] }
    }

    pub fn x_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nx).map(move |i| -self.gamma / 2.0 + self.gamma * i as f64 / self.nx as f64)
    }

    pub fn integrate<G>(&self, f: G) -> C64
    where
        G: Fn(C64) -> C64 + Sync,
    {
        let wx = self.gamma / self.nx as f64;
        let xs: Vec<f64> = self.x_nodes().collect();
        let total: C64 = self
            .ys
            .par_iter()
            .zip(&self.wy)
            .map(|(&y, &w)| xs.iter().map(|&x| f(C64::new(x, y))).sum::<C64>() * w)
            .sum();
        total * wx
    }

    pub fn integrate_real<G>(&self, f: G) -> f64
    where
        G: Fn(C64) -> f64 + Sync,
    {
        self.integrate(|z| C64::new(f(z), 0.0)).re
    }

    /// Largest `|f|` over the nodes.
    pub fn max_abs<U: Field>(&self, u: &U) -> f64 {
        let xs: Vec<f64> = self.x_nodes().collect();
        self.ys
            .par_iter()
            .map(|&y| xs.iter().map(|&x| u.eval(C64::new(x, y)).norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

/// Physicists' Gauss-Hermite nodes and weights for `exp(-t^2)`, by Newton
/// iteration on the normalized three-term recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let pim4 = PI.powf(-0.25);
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `int_S u conj(v)`.
pub fn strip_inner<U: Field, V: Field>(u: &U, v: &V, quad: &StripQuadrature) -> C64 {
    quad.integrate(|z| u.eval(z) * v.eval(z).conj())
}

/// Exponent of a strip norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormExp {
    P(f64),
    Inf,
}

/// `|<z>^alpha u|_{L^p(S)}` by quadrature.
pub fn strip_norm<U: Field>(u: &U, p: NormExp, alpha: f64, quad: &StripQuadrature) -> f64 {
    let weight = |z: C64| (1.0 + z.norm_sqr()).powf(alpha / 2.0);
    match p {
        NormExp::Inf => quad.max_abs(&|z: C64| u.eval(z) * weight(z)),
        NormExp::P(p) => quad.integrate_real(|z| (weight(z) * u.eval(z).norm()).powf(p)).powf(1.0 / p),
    }
}

/// The `L^2` norm of a state is the `l^2` norm of its coefficients.
pub fn state_l2_norm(state: &CoeffState) -> f64 {
    state.l2_norm()
}

/// Coefficients `<u, psi_k>` on `[kmin, kmax]`, after checking that `u` is
/// invariant under the horizontal magnetic translation.
pub fn analyze<U: Field>(
    u: &U,
    window: (i64, i64),
    conv: &BasisConvention,
    quad: &StripQuadrature,
) -> Result<CoeffState> {
    let g = conv.gamma;
    let probes = [C64::new(0.1, 0.2), C64::new(-0.3, 0.5), C64::new(0.2, -0.4)];
    let mut defect: f64 = 0.0;
    let mut size: f64 = 1.0;
    for z in probes {
        let uz = u.eval(z);
        size = size.max(uz.norm());
        defect = defect.max((u.eval(z + g) - (g * (z - z.conj()) / 2.0).exp() * uz).norm());
    }
    if !(defect <= 1e-8 * size) {
        return Err(Error::NotPeriodic { defect });
    }
    let mut out = CoeffState::zeros(*conv, window.0, window.1);
    for k in window.0..=window.1 {
        let c = quad.integrate(|z| u.eval(z) * psi(k, z, conv).conj());
        out.set(k, c);
    }
    Ok(out)
}

/// Closed-form reproducing kernel of the periodic Fock space on the strip.
pub fn strip_kernel(z: C64, w: C64, gamma: f64) -> Result<C64> {
    let pre = (2.0 / (PI * gamma * gamma)).sqrt() * (-PI * PI / (2.0 * gamma * gamma)).exp();
    let e = gauss_phase(z) + gauss_phase(w).conj() - C64::i() * PI * (z - w.conj()) / gamma;
    let arg = (z - w.conj() - C64::i() * PI / gamma + gamma / 2.0) / gamma;
    let th = theta(arg, C64::new(0.0, 2.0 * PI / (gamma * gamma)), &TruncationPolicy::default())?;
    Ok(pre * e.exp() * th)
}

/// `(Ku)(z) = int_S K(z, w) u(w) dw`.
pub fn apply_kernel<U: Field>(u: &U, z: C64, gamma: f64, quad: &StripQuadrature) -> C64 {
    quad.integrate(|w| strip_kernel(z, w, gamma).unwrap_or(C64::new(f64::NAN, 0.0)) * u.eval(w))
}

/// Gaussian factor shared by both conventions.
pub fn coupling_weight(d: i64, gamma: f64) -> f64 {
    (-PI * PI * (d * d) as f64 / (gamma * gamma)).exp()
}

/// `int psi_{k1} conj(psi_{k2}) psi_{k3} conj(psi_{k1-k2+k3})` over the strip.
pub fn interaction_coeff(k1: i64, k2: i64, k3: i64, conv: &BasisConvention) -> f64 {
    let g = conv.gamma;
    let (d1, d3) = (k2 - k1, k2 - k3);
    let base = coupling_weight(d1, g) * coupling_weight(d3, g) / (g * PI.sqrt());
    match conv.tag {
        Convention::Rect => base,
        Convention::Hexa if (d1 * d3).rem_euclid(2) == 1 => -base,
        Convention::Hexa => base,
    }
}

/// Horizontal momentum generator: multiplies `c_k` by `2 pi k / gamma`.
pub fn gamma1_apply(state: &CoeffState) -> CoeffState {
    let g = state.conv.gamma;
    state.with_values(
        state
            .indices()
            .zip(&state.values)
            .map(|(k, c)| c * (2.0 * PI * k as f64 / g))
            .collect(),
    )
}

/// Knobs for the pointwise sup-norm search of a wide state.
#[derive(Debug, Clone, Copy)]
pub struct SupSearch {
    /// number of dominant modes whose heights are examined
    pub modes: usize,
    /// samples in height around each mode centre, spanning half a spacing
    pub y_samples: usize,
    /// samples across the period
    pub x_samples: usize,
    /// neighbouring modes summed at each sample
    pub neighbours: i64,
}

impl Default for SupSearch {
    fn default() -> Self {
        Self { modes: 50, y_samples: 9, x_samples: 16, neighbours: 4 }
    }
}

/// `sup |u|` estimated near the centres of the largest coefficients. Each
/// basis function is a Gaussian of unit width centred at `y = -k pi / gamma`
/// and neighbours are `pi / gamma` apart, so only a few modes contribute at
/// any point.
pub fn sup_norm(state: &CoeffState, opts: SupSearch) -> f64 {
    let g = state.conv.gamma;
    let mut order: Vec<usize> = (0..state.values.len()).collect();
    order.sort_by(|&a, &b| state.values[b].norm().partial_cmp(&state.values[a].norm()).unwrap());
    order.truncate(opts.modes);
    let half = 0.5 * PI / g;
    order
        .par_iter()
        .map(|&i| {
            let k = state.kmin + i as i64;
            let mut best: f64 = 0.0;
            for a in 0..opts.y_samples {
                let frac = if opts.y_samples > 1 { a as f64 / (opts.y_samples - 1) as f64 } else { 0.5 };
                let y = -(k as f64) * PI / g - half + 2.0 * half * frac;
                for b in 0..opts.x_samples {
                    let z = C64::new(-g / 2.0 + g * b as f64 / opts.x_samples as f64, y);
                    let v: C64 = (k - opts.neighbours..=k + opts.neighbours)
                        .map(|j| state.get(j) * psi(j, z, &state.conv))
                        .sum();
                    best = best.max(v.norm());
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}
