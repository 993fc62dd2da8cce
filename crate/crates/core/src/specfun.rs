//! Special functions and Gaussian lattice sums.
//!
//! Everything here is a rapidly convergent Gaussian series. Each summation
//! stops once an explicit bound on the next term drops below
//! [`TruncationPolicy::eps`] and reports [`Error::TailNotMet`] if the term cap
//! is hit first.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Stopping rule shared by all series in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub eps: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { eps: 1e-14, max_terms: 512 }
    }
}

impl TruncationPolicy {
    pub fn new(eps: f64, max_terms: usize) -> Result<Self> {
        if !(eps > 0.0) || max_terms == 0 {
            return Err(Error::InvalidParameter(format!(
                "truncation policy needs eps > 0 and max_terms >= 1 (got {eps}, {max_terms})"
            )));
        }
        Ok(Self { eps, max_terms })
    }

    /// Same policy with a doubled term budget and a much smaller tolerance.
    /// Used by tests as a reference summation.
    pub fn reference() -> Self {
        Self { eps: 1e-30, max_terms: 1024 }
    }
}

/// Jacobi theta function with the odd normalization
/// `theta(z) = -i sum_n (-1)^n exp(i pi tau (n+1/2)^2) exp(i (2n+1) pi z)`.
///
/// The terms `n` and `-n-1` are summed together, which turns the series into
/// `2 sum_{n>=0} (-1)^n exp(i pi tau (n+1/2)^2) sin((2n+1) pi z)` and makes
/// oddness in `z` exact.
pub fn theta(z: C64, tau: C64, policy: &TruncationPolicy) -> Result<C64> {
    if !(tau.im > 0.0) {
        return Err(Error::InvalidParameter(format!("theta needs Im tau > 0, got {tau}")));
    }
    // Reduce z = w + m + n tau with |Im w| <= Im tau / 2 and |Re w| <= 1/2 so
    // the series is summed where its terms are O(1). Rounding is symmetric,
    // so oddness survives the reduction.
    let n = (z.im / tau.im).round();
    let shifted = z - n * tau;
    let m = shifted.re.round();
    let w = shifted - m;
    let core = theta_series(w, tau, policy)?;
    if n == 0.0 && m == 0.0 {
        return Ok(core);
    }
    let sign = if (n + m).rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
    let expo = -C64::i() * PI * tau * n * n - 2.0 * C64::i() * PI * n * w;
    Ok(sign * expo.exp() * core)
}

fn theta_series(z: C64, tau: C64, policy: &TruncationPolicy) -> Result<C64> {
    let peak = z.im.abs() / tau.im;
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..policy.max_terms {
        let h = n as f64 + 0.5;
        let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
        let nome = (C64::i() * PI * tau * h * h).exp();
        sum += sign * nome * (PI * (2.0 * h) * z).sin();
        let hn = h + 1.0;
        if hn >= peak {
            let next = theta_term_bound(hn, z, tau);
            let ratio = theta_term_bound(hn + 1.0, z, tau) / next;
            if geometric_tail(next, ratio) < policy.eps {
                return Ok(sum);
            }
        }
    }
    Err(Error::TailNotMet { what: "theta", terms: policy.max_terms })
}

/// Bound on a tail whose first term is `next` and whose term ratios stay
/// below `ratio`.
fn geometric_tail(next: f64, ratio: f64) -> f64 {
    if ratio < 1.0 {
        next / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

fn theta_term_bound(h: f64, z: C64, tau: C64) -> f64 {
    2.0 * (-PI * tau.im * h * h + 2.0 * PI * z.im.abs() * h).exp()
}

/// Multiplier relating `theta(z + tau)` to `theta(z)`.
pub fn theta_quasi_period(z: C64, tau: C64) -> C64 {
    -(-C64::i() * PI * tau).exp() * (-2.0 * C64::i() * PI * z).exp()
}

/// Which integers a lattice sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    All,
    Odd,
}

/// `sum_q q^order exp(-pi^2 q^2 / gamma^2)`, over all integers or odd ones.
///
/// Odd orders return exactly zero: the `q` and `-q` terms cancel in pairs.
pub fn gauss_sum(order: u32, gamma: f64, parity: Parity, policy: &TruncationPolicy) -> Result<f64> {
    check_gamma(gamma)?;
    if order % 2 == 1 {
        return Ok(0.0);
    }
    let c = PI * PI / (gamma * gamma);
    let mut sum = if parity == Parity::All && order == 0 { 1.0 } else { 0.0 };
    let step = if parity == Parity::Odd { 2 } else { 1 };
    let peak = (order as f64 / (2.0 * c)).sqrt();
    let mut q = 1usize;
    for _ in 0..policy.max_terms {
        let qf = q as f64;
        sum += 2.0 * qf.powi(order as i32) * (-c * qf * qf).exp();
        q += step;
        let qn = q as f64;
        if qn >= peak {
            let term = |x: f64| 2.0 * x.powi(order as i32) * (-c * x * x).exp();
            let next = term(qn);
            if geometric_tail(next, term(qn + step as f64) / next) < policy.eps {
                return Ok(sum);
            }
        }
    }
    Err(Error::TailNotMet { what: "gauss_sum", terms: policy.max_terms })
}

/// The three cosine series built from the weights `exp(-pi^2 k^2 / gamma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosineSeries {
    /// `1 + 2 sum_{k>=1} w_k cos(2 pi k xi)`
    Ell,
    /// odd `k` only, no constant term
    Odd,
    /// `1 + 2 sum` over even `k >= 2`
    Even,
}

impl CosineSeries {
    fn start_step(self) -> (usize, usize) {
        match self {
            CosineSeries::Ell => (1, 1),
            CosineSeries::Odd => (1, 2),
            CosineSeries::Even => (2, 2),
        }
    }

    fn constant(self) -> f64 {
        if self == CosineSeries::Odd {
            0.0
        } else {
            1.0
        }
    }

    /// Term-wise derivative of order `deriv` at `xi`.
    pub fn eval(self, xi: f64, gamma: f64, deriv: u32, policy: &TruncationPolicy) -> Result<f64> {
        check_gamma(gamma)?;
        if deriv > 4 {
            return Err(Error::InvalidParameter(format!("derivative order {deriv} > 4")));
        }
        let c = PI * PI / (gamma * gamma);
        let (start, step) = self.start_step();
        let mut sum = if deriv == 0 { self.constant() } else { 0.0 };
        let peak = (deriv as f64 / (2.0 * c)).sqrt();
        let mut k = start;
        for _ in 0..policy.max_terms {
            let kf = k as f64;
            let w = 2.0 * PI * kf;
            sum += 2.0 * (-c * kf * kf).exp() * w.powi(deriv as i32) * cos_deriv(w * xi, deriv);
            k += step;
            let kn = k as f64;
            if kn >= peak {
                let term = |x: f64| 2.0 * (-c * x * x).exp() * (2.0 * PI * x).powi(deriv as i32);
                let next = term(kn);
                if geometric_tail(next, term(kn + step as f64) / next) < policy.eps {
                    return Ok(sum);
                }
            }
        }
        Err(Error::TailNotMet { what: "cosine series", terms: policy.max_terms })
    }

    /// `S(0) - S(xi)` summed as `4 sum w_k sin^2(pi k xi)`, free of cancellation
    /// near `xi = 0`.
    pub fn drop_from_origin(self, xi: f64, gamma: f64, policy: &TruncationPolicy) -> Result<f64> {
        check_gamma(gamma)?;
        let c = PI * PI / (gamma * gamma);
        let (start, step) = self.start_step();
        let mut sum = 0.0;
        let mut k = start;
        for _ in 0..policy.max_terms {
            let kf = k as f64;
            let s = (PI * kf * xi).sin();
            sum += 4.0 * (-c * kf * kf).exp() * s * s;
            k += step;
            let kn = k as f64;
            if 4.0 * (-c * kn * kn).exp() < policy.eps * 1e-3 {
                return Ok(sum);
            }
        }
        Err(Error::TailNotMet { what: "cosine series drop", terms: policy.max_terms })
    }
}

fn cos_deriv(x: f64, deriv: u32) -> f64 {
    match deriv % 4 {
        0 => x.cos(),
        1 => -x.sin(),
        2 => -x.cos(),
        _ => x.sin(),
    }
}

pub fn symbol_ell(xi: f64, gamma: f64, deriv: u32, policy: &TruncationPolicy) -> Result<f64> {
    CosineSeries::Ell.eval(xi, gamma, deriv, policy)
}

pub fn symbol_h(xi: f64, gamma: f64, deriv: u32, policy: &TruncationPolicy) -> Result<f64> {
    CosineSeries::Odd.eval(xi, gamma, deriv, policy)
}

pub fn symbol_g(xi: f64, gamma: f64, deriv: u32, policy: &TruncationPolicy) -> Result<f64> {
    CosineSeries::Even.eval(xi, gamma, deriv, policy)
}

/// `|sum_n exp(-alpha (z+n)^2) - sqrt(pi/alpha) sum_n exp(-pi^2 n^2/alpha + 2 i pi n z)|`.
pub fn poisson_residual(alpha: f64, z: C64, policy: &TruncationPolicy) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("poisson_residual needs alpha > 0, got {alpha}")));
    }
    // Left side, centred on the integer nearest to -Re z.
    let n0 = -z.re.round();
    let direct = |n: f64| (-alpha * (z + n) * (z + n)).exp();
    let mut lhs = direct(n0);
    let mut done = false;
    for m in 1..policy.max_terms {
        let mf = m as f64;
        lhs += direct(n0 + mf) + direct(n0 - mf);
        let next = mf + 0.5;
        if next > z.im.abs() && (-alpha * (next * next - z.im * z.im)).exp() < policy.eps {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::TailNotMet { what: "poisson left side", terms: policy.max_terms });
    }

    let dual = |n: f64| (-PI * PI * n * n / alpha + 2.0 * C64::i() * PI * n * z).exp();
    let mut rhs = dual(0.0);
    let peak = alpha * z.im.abs() / PI;
    for m in 1..policy.max_terms {
        let mf = m as f64;
        rhs += dual(mf) + dual(-mf);
        let next = mf + 1.0;
        if next > peak && (-PI * PI * next * next / alpha + 2.0 * PI * next * z.im.abs()).exp() < policy.eps {
            return Ok((lhs - (PI / alpha).sqrt() * rhs).norm());
        }
    }
    Err(Error::TailNotMet { what: "poisson right side", terms: policy.max_terms })
}

/// `int_R exp(-a y^2 + b y) dy = sqrt(pi/a) exp(b^2 / 4a)`.
pub fn gaussian_integral(a: f64, b: f64) -> f64 {
    (PI / a).sqrt() * (b * b / (4.0 * a)).exp()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")))
    }
}
