//! Cubic Hamiltonian flow in coefficient space, for the strip lattice system
//! and for the finite cell system, with an adaptive Dormand-Prince
//! integrator that logs conserved-quantity drift.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coupling_weight, CoeffState, Convention};
use crate::lattice::{phi_k, phi_norm_sq, CellQuadrature, Field, LatticeParams};

/// Couplings with index gaps beyond this are below `exp(-144 pi^2/gamma^2)`.
const GAP_CUTOFF: i64 = 12;

/// Mass, momentum (strip only) and Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: Option<f64>,
    pub hamiltonian: f64,
}

/// A finite system `y' = F(y)` in complex coordinates.
pub trait CoeffSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[C64], out: &mut [C64]);
    fn conserved(&self, y: &[C64]) -> Conserved;
    /// Largest boundary amplitude relative to the total norm, when the system
    /// is a truncation of an infinite one.
    fn edge_ratio(&self, _y: &[C64]) -> Option<f64> {
        None
    }
}

/// The strip lattice system on a fixed window.
#[derive(Debug, Clone)]
pub struct StripSystem {
    pub template: CoeffState,
    weights: Vec<f64>,
    hexa: bool,
    scale: f64,
}

impl StripSystem {
    pub fn new(template: &CoeffState) -> Self {
        let g = template.conv.gamma;
        Self {
            template: template.clone(),
            weights: (0..=GAP_CUTOFF).map(|d| coupling_weight(d, g)).collect(),
            hexa: template.conv.tag == Convention::Hexa,
            scale: 1.0 / (g * PI.sqrt()),
        }
    }

    /// `N(y)_k = sum_{k1-k2+k3=k} A(k1,k2,k3) y_{k1} conj(y_{k2}) y_{k3}`.
    pub fn nonlinearity(&self, y: &[C64], out: &mut [C64]) {
        let w = y.len() as i64;
        let term = |k: i64| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for k1 in 0..w {
                let a = y[k1 as usize];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let lo = (k1 - GAP_CUTOFF).max(0);
                let hi = (k1 + GAP_CUTOFF).min(w - 1);
                for k2 in lo..=hi {
                    let k3 = k - k1 + k2;
                    if k3 < 0 || k3 >= w || (k2 - k3).abs() > GAP_CUTOFF {
                        continue;
                    }
                    let (d1, d3) = (k2 - k1, k2 - k3);
                    let mut c = self.weights[d1.unsigned_abs() as usize] * self.weights[d3.unsigned_abs() as usize];
                    if self.hexa && (d1 * d3).rem_euclid(2) == 1 {
                        c = -c;
                    }
                    acc += c * a * y[k2 as usize].conj() * y[k3 as usize];
                }
            }
            acc * self.scale
        };
        if w > 64 {
            out.par_iter_mut().enumerate().for_each(|(k, o)| *o = term(k as i64));
        } else {
            for (k, o) in out.iter_mut().enumerate() {
                *o = term(k as i64);
            }
        }
    }
}

impl CoeffSystem for StripSystem {
    fn dim(&self) -> usize {
        self.template.values.len()
    }

    fn rhs(&self, y: &[C64], out: &mut [C64]) {
        self.nonlinearity(y, out);
        for o in out.iter_mut() {
            *o *= -C64::i();
        }
    }

    fn conserved(&self, y: &[C64]) -> Conserved {
        let mut n = vec![C64::new(0.0, 0.0); y.len()];
        self.nonlinearity(y, &mut n);
        let g = self.template.conv.gamma;
        let kmin = self.template.kmin;
        Conserved {
            mass: y.iter().map(|v| v.norm_sqr()).sum(),
            momentum: Some(
                2.0 * PI / g * y.iter().enumerate().map(|(i, v)| (kmin + i as i64) as f64 * v.norm_sqr()).sum::<f64>(),
            ),
            hamiltonian: 0.25 * y.iter().zip(&n).map(|(a, b)| (a.conj() * b).re).sum::<f64>(),
        }
    }

    fn edge_ratio(&self, y: &[C64]) -> Option<f64> {
        let total = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if total == 0.0 {
            return Some(0.0);
        }
        Some(y[0].norm().max(y[y.len() - 1].norm()) / total)
    }
}

/// `-i sum A lambda conj(lambda) lambda` as a state on the same window.
pub fn strip_rhs(state: &CoeffState) -> CoeffState {
    let sys = StripSystem::new(state);
    let mut out = vec![C64::new(0.0, 0.0); state.values.len()];
    sys.rhs(&state.values, &mut out);
    state.with_values(out)
}

pub fn conserved(state: &CoeffState) -> Conserved {
    StripSystem::new(state).conserved(&state.values)
}

/// `|a state - N(state)|_{l^2}`, the residual of the frequency equation.
pub fn stationary_residual(state: &CoeffState, a: f64) -> f64 {
    let sys = StripSystem::new(state);
    let mut n = vec![C64::new(0.0, 0.0); state.values.len()];
    sys.nonlinearity(&state.values, &mut n);
    state.values.iter().zip(&n).map(|(v, m)| (a * v - m).norm_sqr()).sum::<f64>().sqrt()
}

/// Least-squares frequency `Re <N(s), s> / |s|^2`.
pub fn best_fit_frequency(state: &CoeffState) -> f64 {
    let sys = StripSystem::new(state);
    let mut n = vec![C64::new(0.0, 0.0); state.values.len()];
    sys.nonlinearity(&state.values, &mut n);
    let num: f64 = state.values.iter().zip(&n).map(|(v, m)| (m * v.conj()).re).sum();
    num / state.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// Amplitudes on the `N` cell basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub params: LatticeParams,
    pub amps: Vec<C64>,
}

impl CellState {
    pub fn new(params: LatticeParams, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != params.n as usize {
            return Err(Error::InvalidParameter(format!("expected {} amplitudes, got {}", params.n, amps.len())));
        }
        Ok(Self { params, amps })
    }

    /// `(lambda_1, ..., lambda_{N-1}, lambda_0)`.
    pub fn cyclic_shift(&self) -> Self {
        let mut a = self.amps.clone();
        a.rotate_left(1);
        Self { params: self.params, amps: a }
    }
}

/// The cell system with its quadruple overlaps computed once.
#[derive(Debug, Clone)]
pub struct CellSystem {
    pub params: LatticeParams,
    /// `int Phi_{j1} conj Phi_{j2} Phi_{j3} conj Phi_j`, flattened as `[j1][j2][j3]`
    pub couplings: Vec<C64>,
    /// `1 / |Phi_k|^2`
    pub prefactor: f64,
}

impl CellSystem {
    pub fn new(params: &LatticeParams, quad: &CellQuadrature) -> Result<Self> {
        let n = params.n as usize;
        let phis = (0..params.n).map(|k| phi_k(params, k)).collect::<Result<Vec<_>>>()?;
        let nodes: Vec<C64> = (0..quad.n1).flat_map(|i| (0..quad.n2).map(move |j| (i, j))).map(|(i, j)| quad.node(i, j)).collect();
        let values: Vec<Vec<C64>> = phis.iter().map(|p| nodes.par_iter().map(|&z| p.eval(z)).collect()).collect();
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::TailNotMet { what: "cell basis evaluation", terms: 0 });
        }
        let w = quad.weight();
        let mut couplings = vec![C64::new(0.0, 0.0); n * n * n];
        for j1 in 0..n {
            for j2 in 0..n {
                for j3 in 0..n {
                    let j = (j1 + j3 + n - j2) % n;
                    let s: C64 = (0..nodes.len())
                        .into_par_iter()
                        .map(|i| values[j1][i] * values[j2][i].conj() * values[j3][i] * values[j][i].conj())
                        .sum();
                    couplings[(j1 * n + j2) * n + j3] = s * w;
                }
            }
        }
        Ok(Self { params: *params, couplings, prefactor: 1.0 / phi_norm_sq(params) })
    }

    fn nonlinearity(&self, y: &[C64], out: &mut [C64]) {
        let n = y.len();
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for j1 in 0..n {
            for j2 in 0..n {
                for j3 in 0..n {
                    let j = (j1 + j3 + n - j2) % n;
                    out[j] += self.couplings[(j1 * n + j2) * n + j3] * y[j1] * y[j2].conj() * y[j3];
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= self.prefactor);
    }
}

impl CoeffSystem for CellSystem {
    fn dim(&self) -> usize {
        self.params.n as usize
    }

    fn rhs(&self, y: &[C64], out: &mut [C64]) {
        self.nonlinearity(y, out);
        out.iter_mut().for_each(|o| *o *= -C64::i());
    }

    fn conserved(&self, y: &[C64]) -> Conserved {
        let mut n = vec![C64::new(0.0, 0.0); y.len()];
        self.nonlinearity(y, &mut n);
        Conserved {
            mass: y.iter().map(|v| v.norm_sqr()).sum(),
            momentum: None,
            hamiltonian: 0.25 * y.iter().zip(&n).map(|(a, b)| (a.conj() * b).re).sum::<f64>(),
        }
    }
}

pub fn cell_rhs(state: &CellState, sys: &CellSystem) -> CellState {
    let mut out = vec![C64::new(0.0, 0.0); state.amps.len()];
    sys.rhs(&state.amps, &mut out);
    CellState { params: state.params, amps: out }
}

pub fn cell_conserved(state: &CellState, sys: &CellSystem) -> Conserved {
    sys.conserved(&state.amps)
}

/// Step-size control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Control {
    pub rtol: f64,
    pub atol: f64,
    /// first trial step; `None` picks `min(0.01, t_end / 100)`
    pub dt0: Option<f64>,
}

impl Default for Control {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, dt0: None }
    }
}

/// Relative drift of the conserved quantities after one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRecord {
    pub t: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub conserved: Vec<Conserved>,
    pub drift: Vec<DriftRecord>,
    /// largest boundary amplitude relative to the norm along the run
    pub max_edge_ratio: Option<f64>,
}

impl<S> Trajectory<S> {
    /// Set when the boundary amplitude exceeded `1e-8` of the norm.
    pub fn truncation_flagged(&self) -> bool {
        self.max_edge_ratio.is_some_and(|r| r > 1e-8)
    }

    /// Largest relative drift of each quantity over the run.
    pub fn max_drift(&self) -> DriftRecord {
        let mut out = DriftRecord { t: self.times.last().copied().unwrap_or(0.0), mass: 0.0, hamiltonian: 0.0, momentum: None };
        for d in &self.drift {
            out.mass = out.mass.max(d.mass);
            out.hamiltonian = out.hamiltonian.max(d.hamiltonian);
            if let Some(p) = d.momentum {
                out.momentum = Some(out.momentum.unwrap_or(0.0).max(p));
            }
        }
        out
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration from `t = 0` to `t_end`, storing every
/// accepted step.
pub fn integrate<Sys: CoeffSystem>(sys: &Sys, y0: &[C64], t_end: f64, control: &Control) -> Result<Trajectory<Vec<C64>>> {
    if !(t_end >= 0.0) || !(control.rtol > 0.0) || !(control.atol > 0.0) {
        return Err(Error::InvalidParameter("integration needs t_end >= 0, rtol > 0, atol > 0".into()));
    }
    let d = sys.dim();
    if y0.len() != d {
        return Err(Error::InvalidParameter(format!("state has length {}, system has {d}", y0.len())));
    }
    let c0 = sys.conserved(y0);
    let p_scale = c0.momentum.map(|p| p.abs().max(c0.mass * 2.0 * PI));
    let rel = |x: f64, x0: f64, s: f64| if s > 0.0 { (x - x0).abs() / s } else { (x - x0).abs() };

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0.to_vec()],
        conserved: vec![c0],
        drift: Vec::new(),
        max_edge_ratio: sys.edge_ratio(y0),
    };
    if t_end == 0.0 {
        return Ok(traj);
    }

    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut dt = control.dt0.unwrap_or((t_end / 100.0).min(0.01)).min(t_end);
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); d]; 7];
    sys.rhs(&y, &mut k[0]);
    let mut stage = vec![C64::new(0.0, 0.0); d];
    let mut y_new = vec![C64::new(0.0, 0.0); d];

    while t < t_end {
        if dt < 1e-12 * t_end {
            return Err(Error::StepFailure { t, dt });
        }
        let last = t + dt >= t_end;
        let h = if last { t_end - t } else { dt };
        for s in 1..7 {
            for i in 0..d {
                let mut acc = y[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += h * a * k[j][i];
                }
                stage[i] = acc;
            }
            sys.rhs(&stage, &mut k[s]);
        }
        // Stage 7 was evaluated at the fifth-order solution, which is `stage`.
        y_new.copy_from_slice(&stage);
        let mut err = 0.0;
        for i in 0..d {
            let mut e = C64::new(0.0, 0.0);
            for (j, ej) in E.iter().enumerate() {
                e += h * ej * k[j][i];
            }
            let sc = control.atol + control.rtol * y[i].norm().max(y_new[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / d.max(1) as f64).sqrt();
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            let c = sys.conserved(&y);
            traj.drift.push(DriftRecord {
                t,
                mass: rel(c.mass, c0.mass, c0.mass),
                hamiltonian: rel(c.hamiltonian, c0.hamiltonian, c0.hamiltonian.abs()),
                momentum: c.momentum.zip(c0.momentum).zip(p_scale).map(|((p, p0), s)| rel(p, p0, s)),
            });
            if let Some(r) = sys.edge_ratio(&y) {
                traj.max_edge_ratio = Some(traj.max_edge_ratio.unwrap_or(0.0).max(r));
            }
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.conserved.push(c);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                dt = h * factor;
            }
        } else if err.is_finite() {
            dt = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        } else {
            dt = h * 0.2;
        }
    }
    Ok(traj)
}

/// Strip flow of a coefficient state.
pub fn integrate_strip(state: &CoeffState, t_end: f64, control: &Control) -> Result<Trajectory<CoeffState>> {
    let sys = StripSystem::new(state);
    let raw = integrate(&sys, &state.values, t_end, control)?;
    Ok(Trajectory {
        times: raw.times,
        states: raw.states.into_iter().map(|v| state.with_values(v)).collect(),
        conserved: raw.conserved,
        drift: raw.drift,
        max_edge_ratio: raw.max_edge_ratio,
    })
}

/// Cell flow with precomputed couplings.
pub fn integrate_cell(state: &CellState, sys: &CellSystem, t_end: f64, control: &Control) -> Result<Trajectory<CellState>> {
    let raw = integrate(sys, &state.amps, t_end, control)?;
    Ok(Trajectory {
        times: raw.times,
        states: raw.states.into_iter().map(|a| CellState { params: state.params, amps: a }).collect(),
        conserved: raw.conserved,
        drift: raw.drift,
        max_edge_ratio: raw.max_edge_ratio,
    })
}

/// `c e^{-i |c|^2 t / (gamma sqrt pi)}`, the exact motion of `c psi_k`.
pub fn stationary_closed_form(c: C64, gamma: f64, t: f64) -> C64 {
    c * C64::from_polar(1.0, -c.norm_sqr() * t / (gamma * PI.sqrt()))
}

/// Coefficient-level symmetries of the strip flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symmetry {
    /// `e^{i theta} lambda_k`
    Phase(f64),
    /// `e^{2 pi i k theta / gamma} lambda_k`
    HTranslate(f64),
    /// `lambda_k -> lambda_{k+1}`
    VShift,
    /// `lambda_k -> lambda_{-k}`
    Reflect,
}

pub fn symmetry_apply(state: &CoeffState, which: Symmetry) -> Result<CoeffState> {
    let g = state.conv.gamma;
    match which {
        Symmetry::Phase(th) => Ok(state.scaled(C64::from_polar(1.0, th))),
        Symmetry::HTranslate(th) => Ok(state.with_values(
            state
                .indices()
                .zip(&state.values)
                .map(|(k, v)| v * C64::from_polar(1.0, 2.0 * PI * k as f64 * th / g))
                .collect(),
        )),
        Symmetry::VShift => {
            if state.values.first().is_some_and(|v| *v != C64::new(0.0, 0.0)) {
                return Err(Error::WindowOverflow);
            }
            let mut v = state.values.clone();
            v.rotate_left(1);
            Ok(state.with_values(v))
        }
        Symmetry::Reflect => {
            let mut v = state.values.clone();
            v.reverse();
            Ok(CoeffState { conv: state.conv, kmin: -state.kmax(), values: v })
        }
    }
}

/// One row of the trajectory export.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub k: i64,
    pub re: f64,
    pub im: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "H")]
    pub hamiltonian: f64,
    #[serde(rename = "P")]
    pub momentum: Option<f64>,
}

pub fn strip_rows(traj: &Trajectory<CoeffState>) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for ((t, s), c) in traj.times.iter().zip(&traj.states).zip(&traj.conserved) {
        for (k, v) in s.indices().zip(&s.values) {
            rows.push(TrajectoryRow { t: *t, k, re: v.re, im: v.im, mass: c.mass, hamiltonian: c.hamiltonian, momentum: c.momentum });
        }
    }
    rows
}

pub fn cell_rows(traj: &Trajectory<CellState>) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for ((t, s), c) in traj.times.iter().zip(&traj.states).zip(&traj.conserved) {
        for (k, v) in s.amps.iter().enumerate() {
            rows.push(TrajectoryRow { t: *t, k: k as i64, re: v.re, im: v.im, mass: c.mass, hamiltonian: c.hamiltonian, momentum: None });
        }
    }
    rows
}
