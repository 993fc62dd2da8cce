//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a summary.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{c, expm, logspace, mat_dist, random_c, rng, M2};
use lll_core::dynamics::{integrate_strip, stationary_closed_form, Control};
use lll_core::fock::{interaction_coeff, psi, strip_inner, strip_kernel, BasisConvention, CoeffState, Convention, StripQuadrature, SupSearch};
use lll_core::lattice::{cell_lp, hexagonal_gamma, hexagonal_tau, lambda0, lambda0_hexagonal, lambda0_rectangular, phi_k, CellQuadrature, LatticeParams};
use lll_core::linstab::*;
use lll_core::specfun::{poisson_residual, theta, theta_quasi_period, TruncationPolicy};
use num_complex::Complex64 as C64;
use rand::Rng;

fn report(id: u32, title: &str, pass: bool, detail: String, started: Instant) {
    println!(
        "{} criterion {id:>2} ({title}): {detail} [{:.2} s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn pol() -> TruncationPolicy {
    TruncationPolicy::default()
}

fn rect_square() -> Symbol {
    build_symbol(SymbolKind::Rect, PI.sqrt()).unwrap()
}

#[test]
fn criterion_01_hexagonal_certificate() {
    let t0 = Instant::now();
    let sym = hexagonal_symbol();
    let n = 4096;
    let dets: Vec<f64> = (1..n - 1).map(|i| sym.at(i as f64 / (n - 1) as f64).unwrap().det()).collect();
    let bad = dets.iter().filter(|&&d| d >= -1e-12 || d.is_nan()).count();
    let worst = dets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report(
        1,
        "hexagonal det < -1e-12 on interior grid",
        bad == 0,
        format!("{} interior points, {bad} not below -1e-12, max det {worst:.3e}", dets.len()),
        t0,
    );
}

#[test]
fn criterion_02_square_lattice_instability() {
    let t0 = Instant::now();
    let sym = rect_square();
    let n = 4096;
    let positive = (1..n - 1).all(|i| sym.at(i as f64 / (n - 1) as f64).unwrap().det() > 0.0);
    let r = rect_instability_rate(PI.sqrt(), None).unwrap();
    let rel = (r.measured / r.predicted - 1.0).abs();
    report(
        2,
        "square lattice growth rate",
        positive && rel < 0.02,
        format!("D > 0 everywhere: {positive}; predicted {:.6}, measured {:.6}, rel. error {rel:.2e}", r.predicted, r.measured),
        t0,
    );
}

#[test]
fn criterion_03_threshold() {
    let t0 = Instant::now();
    let g0 = gamma_threshold_scan(2.0, 3.0, 1e-4).unwrap();
    report(3, "rectangular threshold", (g0 - 2.51).abs() <= 0.02, format!("gamma_0 = {g0:.5}"), t0);
}

#[test]
fn criterion_04_mu_expansion() {
    let t0 = Instant::now();
    let sym = hexagonal_symbol();
    let cst = mu_expansion_constant(&sym).unwrap();
    let mu = |x: f64| sym.at(x).unwrap().mu().re;
    let pts: Vec<(f64, f64)> = (0..=40).map(|i| 10f64.powf(-3.0 + i as f64 / 40.0)).map(|x| (x.ln(), mu(x).ln())).collect();
    let slope = fit_slope(&pts);
    let rel = (mu(1e-3) / 1e-6 / cst - 1.0).abs();
    report(
        4,
        "mu ~ C xi^2",
        (slope - 2.0).abs() <= 0.02 && rel < 1e-4,
        format!("slope {slope:.5}, C = {cst:.8}, mu(1e-3)/1e-6 rel. error {rel:.2e}"),
        t0,
    );
}

#[test]
fn criterion_05_dispersive_decay() {
    let t0 = Instant::now();
    let mut state = CoeffState::zeros(BasisConvention::hexa(), -1, 1);
    state.set(-1, c(0.5, 0.0));
    state.set(0, c(-1.0, 1.0));
    state.set(1, c(0.5, 0.0));
    let times = logspace(2.0, 5.0, 16);
    let table = linf_decay_experiment(&state, &times, &hexagonal_symbol(), SupSearch::default()).unwrap();
    let last = table.slope_last_decade.unwrap();
    let all = table.slope.unwrap();
    report(
        5,
        "sup-norm decay t^{-1/3}",
        (last + 1.0 / 3.0).abs() <= 0.05,
        format!("last-decade slope {last:.4}, full-range slope {all:.4}, grid {}", table.grid_size),
        t0,
    );
}

#[test]
fn criterion_06_growth_optimality() {
    let t0 = Instant::now();
    let grid = hexagonal_symbol().sample(4096).unwrap();
    let table = growth_experiment(0.6, 2, &logspace(2.0, 6.0, 17), &grid).unwrap();
    report(
        6,
        "dyadic data growth",
        table.exponent >= 0.8 && table.max_ratio <= table.bound_constant,
        format!(
            "exponent {:.4}, max |U(t)|/((1+t)|U0|) = {:.4} <= C = {:.4}",
            table.exponent, table.max_ratio, table.bound_constant
        ),
        t0,
    );
}

#[test]
fn criterion_07_stationary_constants() {
    let t0 = Instant::now();
    let sq = LatticeParams::rectangular(PI.sqrt()).unwrap();
    let hx = LatticeParams::hexagonal();
    let (gs, rs) = (lambda0(&sq, &pol()).unwrap(), lambda0_rectangular(PI.sqrt(), &pol()).unwrap());
    let (gh, hs) = (lambda0(&hx, &pol()).unwrap(), lambda0_hexagonal(&pol()).unwrap());
    let closed = ((gs - rs).abs() / gs).max((gh - hs).abs() / gh);
    let mut quad: f64 = 0.0;
    for (p, l) in [(sq, gs), (hx, gh)] {
        let q = CellQuadrature::standard(&p);
        let phi = phi_k(&p, 0).unwrap();
        let ratio = cell_lp(&phi, 4.0, &q).powi(4) / cell_lp(&phi, 2.0, &q).powi(2);
        quad = quad.max((ratio - l).abs() / l);
    }
    report(
        7,
        "stationary constants",
        closed < 1e-12 && quad < 1e-6,
        format!("square {gs:.12}, hexagonal {gh:.12}; closed forms differ by {closed:.1e}, quadrature by {quad:.1e}"),
        t0,
    );
}

#[test]
fn criterion_08_basis_and_interaction() {
    let t0 = Instant::now();
    let convs = [BasisConvention::rect(2.0), BasisConvention::hexa()];
    let mut ortho: f64 = 0.0;
    for conv in convs {
        let q = StripQuadrature::for_window(conv.gamma, -8, 8);
        for j in -8..=8i64 {
            for k in -8..=8i64 {
                let v = strip_inner(&|z| psi(j, z, &conv), &|z| psi(k, z, &conv), &q);
                ortho = ortho.max((v - if j == k { 1.0 } else { 0.0 }).norm());
            }
        }
    }
    let mut r = rng(2024);
    let mut rel: f64 = 0.0;
    let mut negative_hexa = 0;
    for n in 0..20 {
        let conv = convs[n % 2];
        let (k1, k2, k3) = (r.gen_range(-3..=3i64), r.gen_range(-3..=3i64), r.gen_range(-3..=3i64));
        let k4 = k1 - k2 + k3;
        let lo = k1.min(k2).min(k3).min(k4);
        let hi = k1.max(k2).max(k3).max(k4);
        let q = StripQuadrature::for_window(conv.gamma, lo, hi);
        let v = q.integrate(|z| psi(k1, z, &conv) * psi(k2, z, &conv).conj() * psi(k3, z, &conv) * psi(k4, z, &conv).conj());
        let a = interaction_coeff(k1, k2, k3, &conv);
        rel = rel.max((v - a).norm() / a.abs());
        if conv.tag == Convention::Hexa && a < 0.0 {
            negative_hexa += 1;
        }
    }
    let sign = interaction_coeff(1, 0, 1, &BasisConvention::hexa()) < 0.0;
    report(
        8,
        "basis and interaction oracle",
        ortho < 1e-10 && rel < 1e-8 && sign,
        format!("orthonormality defect {ortho:.1e}, interaction rel. error {rel:.1e}, {negative_hexa} negative hexagonal triples"),
        t0,
    );
}

#[test]
fn criterion_09_nonlinear_conservation() {
    let t0 = Instant::now();
    let control = Control::default();
    let mut worst: f64 = 0.0;
    let mut stationary: f64 = 0.0;
    for conv in [BasisConvention::rect(2.0), BasisConvention::hexa()] {
        let mut r = rng(99);
        let mut s = CoeffState::zeros(conv, -24, 24);
        for k in -3..=3 {
            s.set(k, random_c(&mut r, 0.6));
        }
        let d = integrate_strip(&s, 10.0, &control).unwrap().max_drift();
        worst = worst.max(d.mass).max(d.hamiltonian).max(d.momentum.unwrap_or(0.0));

        let cc = c(0.7, 0.4);
        let last = integrate_strip(&CoeffState::unit(conv, 24, 0, cc), 10.0, &control).unwrap();
        let exact = stationary_closed_form(cc, conv.gamma, 10.0);
        let state = last.last();
        for k in state.indices() {
            let e = if k == 0 { exact } else { C64::new(0.0, 0.0) };
            stationary = stationary.max((state.get(k) - e).norm());
        }
    }
    report(
        9,
        "nonlinear conservation",
        worst < 1e-8 && stationary < 1e-8,
        format!("max relative drift of M, H, P {worst:.2e}; stationary deviation {stationary:.2e}"),
        t0,
    );
}

#[test]
fn criterion_10_moment_laws() {
    let t0 = Instant::now();
    let m = 128;
    let coeffs = [c(0.2, -0.3), c(0.4, 1.0), c(-0.1, 0.2), c(0.05, 0.1)];
    let pair = FourierPair::from_coeffs(-1, &coeffs, m).unwrap();
    let grid = hexagonal_symbol().sample(m).unwrap();
    let times: Vec<f64> = (0..=50).map(|t| t as f64).collect();
    let trace = moment_trace(&pair, &grid, &times, 1e-2).unwrap();
    let r0 = trace.rows[0].re;
    let drift = trace.rows.iter().flat_map(|row| (0..4).map(move |j| (row.re[j] - r0[j]).abs())).fold(0.0, f64::max);
    let i0 = moments(&pair)[0].im;
    let h = 1e-4;
    let r4 = |t: f64| moments(&evolve_pair(&pair, &grid, t).unwrap())[4].re;
    let rate = (r4(h) - r4(-h)) / (2.0 * h);
    let expect = -trace.constants.l3 * i0;
    let rel = (rate / expect - 1.0).abs();
    report(
        10,
        "moment laws",
        drift < 1e-8 && rel < 0.01,
        format!("max drift of Re K_0..K_3 {drift:.1e}; dR4/dt {rate:.6} vs -L3 I0 {expect:.6}"),
        t0,
    );
}

#[test]
fn criterion_11_propagator_oracle() {
    let t0 = Instant::now();
    let syms = [hexagonal_symbol(), rect_square(), build_symbol(SymbolKind::Rect, 2.8).unwrap()];
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    let mut complex_mu = 0;
    let mut near_zero = 0;
    for n in 0..100 {
        let sym = syms[n % 3];
        let t = r.gen_range(0.0..8.0);
        let xi = if n % 10 == 0 { r.gen_range(0.0..1e-6) } else { r.gen() };
        let p = sym.at(xi).unwrap();
        if p.mu().im > 0.0 {
            complex_mu += 1;
        }
        if (t * p.mu()).norm() < 1e-4 {
            near_zero += 1;
        }
        let i = C64::i();
        let gen: M2 = [[-i * t * p.a, -i * t * p.b], [i * t * p.b, i * t * p.a]];
        let oracle = expm(&gen);
        let scale = oracle.iter().flatten().map(|v| v.norm()).fold(1.0, f64::max);
        worst = worst.max(mat_dist(&propagator_at(&p, t), &oracle) / scale);
    }
    report(
        11,
        "propagator oracle",
        worst < 1e-10 && complex_mu > 0 && near_zero > 0,
        format!("max rel. deviation {worst:.1e}; {complex_mu} complex-mu cases, {near_zero} series-branch cases"),
        t0,
    );
}

#[test]
fn criterion_12_identity_battery() {
    let t0 = Instant::now();
    let g = hexagonal_gamma();
    let poisson = [(PI, c(0.0, 0.0)), (g * g, c(0.5, 0.0)), (2.0, c(0.1, 0.0)), (5.0, c(0.3, 0.0))]
        .iter()
        .map(|&(a, z)| poisson_residual(a, z, &pol()).unwrap())
        .fold(0.0, f64::max);

    let mut r = rng(12);
    let mut quasi: f64 = 0.0;
    let mut odd: f64 = 0.0;
    for tau in [C64::i(), hexagonal_tau(), c(0.3, 1.2)] {
        for _ in 0..30 {
            let z = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            let a = theta(z + tau, tau, &pol()).unwrap();
            let b = theta_quasi_period(z, tau) * theta(z, tau, &pol()).unwrap();
            quasi = quasi.max((a - b).norm() / (1.0 + a.norm()));
            let s = theta(z, tau, &pol()).unwrap() + theta(-z, tau, &pol()).unwrap();
            odd = odd.max(s.norm());
        }
    }

    let mut kernel_ok = true;
    for gam in [2.0, g] {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let z = c(-gam / 2.0 + gam * i as f64 / 20.0, -3.0 + 6.0 * j as f64 / 19.0);
                let w = c(0.3 * gam * (j as f64 / 19.0 - 0.5), -3.0 + 6.0 * i as f64 / 19.0);
                pts.push((z, w));
            }
        }
        let ratio = |&(z, w): &(C64, C64)| strip_kernel(z, w, gam).unwrap().norm() / (-(z.im - w.im).powi(2) / 2.0).exp();
        let fitted = pts.iter().step_by(2).map(ratio).fold(0.0, f64::max);
        let seen = pts.iter().skip(1).step_by(2).map(ratio).fold(0.0, f64::max);
        kernel_ok &= fitted.is_finite() && seen <= 1.05 * fitted;
    }

    let mut fact: f64 = 0.0;
    for gam in [PI.sqrt(), 2.0, 3.1] {
        let sym = build_symbol(SymbolKind::Rect, gam).unwrap();
        let cm = (PI * PI / (2.0 * gam * gam)).exp() / 2f64.sqrt();
        let ell = |xi: f64| -> f64 {
            (-40..=40i64).map(|k| (-PI * PI * (k * k) as f64 / (gam * gam)).exp() * (2.0 * PI * k as f64 * xi).cos()).sum()
        };
        let l0 = ell(0.0);
        for _ in 0..50 {
            let xi: f64 = r.gen();
            let l = ell(xi);
            let d = cm * cm * (l - l0).powi(2) * (l + (1.0 + 2f64.sqrt()) * l0) * (l - (2f64.sqrt() - 1.0) * l0);
            fact = fact.max((sym.at(xi).unwrap().det() - d).abs());
        }
    }
    report(
        12,
        "identity battery",
        poisson < 1e-12 && quasi < 1e-11 && odd < 1e-11 && kernel_ok && fact < 1e-12,
        format!(
            "Poisson {poisson:.1e}, quasi-periodicity {quasi:.1e}, oddness {odd:.1e}, kernel bound {kernel_ok}, factorization {fact:.1e}"
        ),
        t0,
    );
}
