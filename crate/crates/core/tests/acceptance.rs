//! Acceptance suite. Each test prints one PASS/FAIL line per criterion, then
//! asserts it. Run with `cargo test --test acceptance -- --nocapture
//! --test-threads 1` to see the lines in order.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::*;
use shadowgrowth::asymptotics::{self, Route};
use shadowgrowth::growth::{growth_rate_closed, growth_rate_quadrature};
use shadowgrowth::simulate::{simulate_paths, simulate_refinement, PathConfig, SimSummary};
use shadowgrowth::solver::scan_sign_changes;
use shadowgrowth::{admissibility_margin, friction_gap, solve, FrictionSolution, MarketParams, ShadowTransform};

const THETAS: [f64; 8] = [0.1, 0.3, 0.5, 0.7, 0.9, 1.5, 2.0, 3.0];
const LAMBDAS: [f64; 4] = [0.001, 0.01, 0.05, 0.1];
const SIGMA: f64 = 0.4;
const SEED: u64 = 42;

fn solved(theta: f64, lambda: f64) -> FrictionSolution {
    solve(&MarketParams::from_theta(theta, SIGMA, lambda).unwrap()).unwrap()
}

fn matrix() -> Vec<FrictionSolution> {
    let mut out = Vec::new();
    for &theta in &THETAS {
        for &lambda in &LAMBDAS {
            out.push(solved(theta, lambda));
        }
    }
    out
}

#[test]
fn criterion_01_smooth_pasting() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for sol in matrix() {
        let g = ShadowTransform::new(sol);
        let l = sol.lambda();
        let s = sol.s_bar;
        let errs = [
            g.g(1.0).unwrap() - 1.0,
            g.g_prime(1.0).unwrap() - 1.0,
            g.g(s).unwrap() - (1.0 - l) * s,
            g.g_prime(s).unwrap() - (1.0 - l),
        ];
        worst = errs.iter().fold(worst, |m, e| m.max(e.abs()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst < 1e-10 && elapsed < 1.0;
    assert!(report(
        1,
        "smooth pasting",
        ok,
        &format!("max residual {worst:.3e} (< 1e-10), {elapsed:.3} s (< 1 s)")
    ));
}

#[test]
fn criterion_02_ode_identity() {
    let start = Instant::now();
    let mut worst_res = 0.0f64;
    let mut worst_ivp = 0.0f64;
    for sol in matrix() {
        let g = ShadowTransform::new(sol);
        let (c, theta) = (sol.c, sol.theta());
        let (lo, hi) = sol.domain();
        for k in 0..2000 {
            let s = lo + (hi - lo) * k as f64 / 1999.0;
            let (v, v1, v2) = (g.g(s).unwrap(), g.g_prime(s).unwrap(), g.g_second(s).unwrap());
            let a = 2.0 * v1 * v1 / (c + v);
            let b = 2.0 * theta * v1 / s;
            let rel = (v2 - (a - b)).abs() / (v2.abs() + a.abs() + b.abs());
            worst_res = worst_res.max(rel);
        }
        let rhs = |s: f64, y: &[f64; 2]| [y[1], 2.0 * y[1] * y[1] / (c + y[0]) - 2.0 * theta * y[1] / s];
        let y = dopri5(rhs, 1.0, [1.0, 1.0], sol.s_bar, 1e-12, 1e-14);
        let target = g.g(sol.s_bar).unwrap();
        worst_ivp = worst_ivp.max((y[0] - target).abs() / target.abs());
    }
    let ok = worst_res < 1e-8 && worst_ivp < 1e-6;
    assert!(report(
        2,
        "ODE identity",
        ok,
        &format!(
            "max relative residual {worst_res:.3e} (< 1e-8), integrated g(s_bar) relative error {worst_ivp:.3e} (< 1e-6), {:.2} s",
            start.elapsed().as_secs_f64()
        )
    ));
}

#[test]
fn criterion_03_root_uniqueness() {
    let mut worst_f = 0.0f64;
    let mut bad_scans = Vec::new();
    for sol in matrix() {
        let p = sol.params;
        let f = friction_gap(sol.c, &p).unwrap();
        worst_f = worst_f.max(f.abs());
        // independent scan over the open bracket
        let theta = sol.theta();
        let left = if (theta - 0.5).abs() < 1e-12 { 1.0 } else { (1.0 - theta) / theta };
        let right = if theta <= 0.5 + 1e-12 {
            2.0 * sol.c + 10.0
        } else if theta < 1.0 {
            (1.0 - theta) / (theta - 0.5)
        } else {
            0.0
        };
        let width = right - left;
        let (a, b) = (left + 1e-9 * width, right - 1e-9 * width);
        let mut changes = 0;
        let mut prev: Option<f64> = None;
        for k in 0..1000 {
            let c = a + (b - a) * k as f64 / 999.0;
            let Ok(v) = friction_gap(c, &p) else { continue };
            if let Some(q) = prev {
                if (q < 0.0) != (v < 0.0) {
                    changes += 1;
                }
            }
            prev = Some(v);
        }
        let lib = scan_sign_changes(&p, 1000).unwrap();
        if changes != 1 || lib != 1 {
            bad_scans.push((theta, sol.lambda(), changes, lib));
        }
    }
    let ok = worst_f < 1e-12 && bad_scans.is_empty();
    assert!(report(
        3,
        "root correctness and uniqueness",
        ok,
        &format!("max |f(c)| {worst_f:.3e} (< 1e-12), cells without exactly one sign change: {bad_scans:?}")
    ));
}

#[test]
fn criterion_04_symmetry() {
    let mut worst = 0.0f64;
    for sol in matrix() {
        let (c, l, s) = (sol.c, sol.lambda(), sol.s_bar);
        let r = 1.0 / (1.0 + c) + 1.0 / (1.0 + c / ((1.0 - l) * s)) - 2.0 * sol.theta();
        worst = worst.max(r.abs());
    }
    assert!(report(4, "symmetry identity", worst < 1e-10, &format!("max residual {worst:.3e} (< 1e-10)")));
}

#[test]
fn criterion_05_growth_oracle() {
    let mut worst = 0.0f64;
    for sol in matrix() {
        let a = growth_rate_closed(&sol, SIGMA).unwrap();
        let b = growth_rate_quadrature(&sol, SIGMA).unwrap();
        worst = worst.max((a - b).abs() / a.abs());
    }
    // reference cell, rebuilt from an independent bisection of the theta = 1/2 equation
    let lambda = 0.01;
    let c = bisect(|c| ((c * c - 1.0) / c).exp() - c * c / (1.0 - lambda), 1.0 + 1e-12, 3.0);
    let s_bar = ((c * c - 1.0) / c).exp();
    let oracle = SIGMA * SIGMA / (2.0 * (1.0 + c) * (1.0 + c - s_bar.ln()));
    let reference = growth_rate_closed(&solved(0.5, lambda), SIGMA).unwrap();
    let ref_err = (reference - oracle).abs() / oracle;
    let ok = worst < 1e-8 && ref_err < 1e-8;
    assert!(report(
        5,
        "growth-rate oracle",
        ok,
        &format!(
            "max relative gap closed vs quadrature {worst:.3e} (< 1e-8); delta(0.5, 0.4, 0.01) = {reference:.10} vs bisection oracle {oracle:.10}"
        )
    ));
}

#[test]
fn criterion_06_asymptotic_order() {
    let lambdas = [1e-2, 1e-3, 1e-4];
    let mut lines = Vec::new();
    let mut ok = true;
    for theta in [0.3, 0.5, 0.7, 2.0] {
        let k = asymptotics::expand_constants(theta, 3, Route::Inversion).unwrap();
        let b = asymptotics::expand_boundaries(theta, 3).unwrap();
        let d = asymptotics::expand_growth(theta, SIGMA, 3).unwrap();
        let mut errs = vec![Vec::new(); 6];
        for &l in &lambdas {
            let sol = solved(theta, l);
            let t = l.cbrt();
            let exact = [
                sol.c,
                sol.s_bar,
                sol.pi_lo,
                sol.pi_hi,
                sol.width(),
                growth_rate_closed(&sol, SIGMA).unwrap(),
            ];
            let approx = [k.c.eval(t), k.s_bar.eval(t), b.lo.eval(t), b.hi.eval(t), b.width.eval(t), d.eval(t)];
            for i in 0..6 {
                errs[i].push((exact[i] - approx[i]).abs());
            }
        }
        let names = ["c", "s_bar", "pi_lo", "pi_hi", "width", "delta"];
        let mut slopes = Vec::new();
        for (name, e) in names.iter().zip(&errs) {
            let slope = loglog_slope(&lambdas, e);
            ok &= (slope - 4.0 / 3.0).abs() <= 0.1;
            slopes.push(format!("{name} {slope:.3}"));
        }
        let vanish = [b.lo.coeff(2), b.hi.coeff(2), d.coeff(1), d.coeff(3)];
        let vmax = vanish.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ok &= vmax < 1e-10;
        lines.push(format!("theta {theta}: slopes [{}], max vanishing coefficient {vmax:.1e}", slopes.join(", ")));
    }
    assert!(report(6, "asymptotic order", ok, &format!("slope 4/3 +- 0.1, vanishing < 1e-10; {}", lines.join("; "))));
}

#[test]
fn criterion_07_coefficients() {
    let mut failures = Vec::new();
    let mut route_failures = Vec::new();
    let mut route_worst = 0.0f64;
    let mut worst = 0.0f64;
    let mut check = |what: &str, theta: f64, k: usize, x: f64, e: f64| {
        if e != 0.0 {
            worst = worst.max((x - e).abs() / e.abs());
        }
        if !close(x, e, 1e-9, 1e-10) {
            failures.push(format!("{what} theta={theta} k={k}: {x} vs {e}"));
        }
    };
    for theta in [0.3, 0.5, 0.7, 2.0] {
        let k = asymptotics::expand_constants(theta, 3, Route::Inversion).unwrap();
        let b = asymptotics::expand_boundaries(theta, 3).unwrap();
        let m = asymptotics::expand_midprice(theta, 3).unwrap();
        let (s_t, c_t) = (s_bar_first_terms(theta), c_first_terms(theta));
        let (lo, hi, w) = boundary_first_terms(theta);
        let (mlo, mhi, mw) = midprice_first_terms(theta);
        check("s_bar", theta, 0, k.s_bar.coeff(0), 1.0);
        check("c", theta, 0, k.c.coeff(0), (1.0 - theta) / theta);
        for j in 1..=3 {
            check("s_bar", theta, j, k.s_bar.coeff(j), s_t[j - 1]);
            check("c", theta, j, k.c.coeff(j), c_t[j - 1]);
            check("pi_lo", theta, j, b.lo.coeff(j), lo[j - 1]);
            check("pi_hi", theta, j, b.hi.coeff(j), hi[j - 1]);
            check("width", theta, j, b.width.coeff(j), w[j - 1]);
            check("mid_pi_lo", theta, j, m.lo.coeff(j), mlo[j - 1]);
            check("mid_pi_hi", theta, j, m.hi.coeff(j), mhi[j - 1]);
            check("mid_width", theta, j, m.width.coeff(j), mw[j - 1]);
        }
        let g = asymptotics::expand_growth(theta, SIGMA, 3).unwrap();
        check("delta", theta, 2, g.coeff(2), growth_leading(theta, SIGMA));
        let a = asymptotics::expand_constants(theta, 9, Route::Inversion).unwrap();
        let z = asymptotics::expand_constants(theta, 9, Route::Ansatz).unwrap();
        for j in 0..=9 {
            for (name, x, y) in [("c", a.c.coeff(j), z.c.coeff(j)), ("s_bar", a.s_bar.coeff(j), z.s_bar.coeff(j))] {
                let gap = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                route_worst = route_worst.max(gap);
                if gap > 1e-9 {
                    route_failures.push(format!("routes differ on {name} theta={theta} k={j}: {x} vs {y}"));
                }
            }
        }
    }
    failures.extend(route_failures);
    let ok = failures.is_empty();
    assert!(report(
        7,
        "expansion coefficients",
        ok,
        &format!("max relative deviation {worst:.3e} (< 1e-9), routes through order 9 differ by {route_worst:.1e} (< 1e-9); failures: {failures:?}")
    ));
}

/// Criterion 8's run: dt = 1e-3 and dt = 1e-4 on the same Brownian paths.
fn mc_run() -> &'static (FrictionSolution, SimSummary, SimSummary) {
    static RUN: OnceLock<(FrictionSolution, SimSummary, SimSummary)> = OnceLock::new();
    RUN.get_or_init(|| {
        let sol = solve(&MarketParams::new(0.08, SIGMA, 0.01).unwrap()).unwrap();
        let cfg = PathConfig::new(100.0, 1e-3, 400, SEED);
        let (coarse, fine) = simulate_refinement(&sol, &cfg, 10).unwrap();
        (sol, coarse, fine)
    })
}

#[test]
fn criterion_08_monte_carlo_growth() {
    let start = Instant::now();
    let (sol, coarse, fine) = mc_run();
    let delta = growth_rate_closed(sol, SIGMA).unwrap();
    let z = (coarse.growth - delta) / coarse.growth_se;
    let closer = (fine.growth - delta).abs() < (coarse.growth - delta).abs();
    let ok = z.abs() <= 3.0 && closer;
    assert!(report(
        8,
        "Monte Carlo growth rate",
        ok,
        &format!(
            "dt=1e-3: {:.6} +- {:.6} ({z:+.2} SE from {delta:.6}); dt=1e-4: {:.6} ({:+.2} SE), moved toward delta: {closer}; {:.1} s",
            coarse.growth,
            coarse.growth_se,
            fine.growth,
            (fine.growth - delta) / fine.growth_se,
            start.elapsed().as_secs_f64()
        )
    ));
}

#[test]
fn criterion_09_pathwise_invariants() {
    let (sol, coarse, fine) = mc_run();
    let rough = simulate_paths(sol, &PathConfig::new(100.0, 1e-2, 400, SEED)).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    let (lo, hi) = (sol.shadow_pi_lo.min(sol.shadow_pi_hi), sol.shadow_pi_lo.max(sol.shadow_pi_hi));
    for run in [&rough, coarse, fine] {
        let inv = &run.invariants;
        ok &= inv.spread_violation <= 1e-12;
        ok &= inv.rec_defect <= 1e-12;
        ok &= inv.shadow_pi_min >= lo - 1e-12 && inv.shadow_pi_max <= hi + 1e-12;
        details.push(format!(
            "dt={:.0e}: spread {:.1e}, rec {:.1e}, pi~ in [{:.6}, {:.6}], interior trade share {:.2e}",
            run.dt,
            inv.spread_violation,
            inv.rec_defect,
            inv.shadow_pi_min,
            inv.shadow_pi_max,
            inv.interior_trade_fraction()
        ));
    }
    let shares: Vec<f64> = [&rough, coarse, fine].iter().map(|r| r.invariants.interior_trade_fraction()).collect();
    ok &= shares[2] < 0.01 && shares[2] <= shares[1] && shares[1] <= shares[0];
    assert!(report(
        9,
        "pathwise invariants",
        ok,
        &format!("pi~ bounds [{lo:.6}, {hi:.6}]; {}", details.join("; "))
    ));
}

#[test]
fn criterion_10_ergodic_histogram() {
    let sol = solve(&MarketParams::new(0.5 * SIGMA * SIGMA, SIGMA, 0.05).unwrap()).unwrap();
    let run = simulate_paths(&sol, &PathConfig::new(2000.0, 1e-3, 1, SEED)).unwrap();
    let h = &run.histogram;
    assert_eq!(h.counts.len(), 50);
    let edges = h.edges();
    let freq = h.frequencies();
    // stationary mass of [a, b] under the density 1 / (s log s_bar)
    let log_s = sol.s_bar.ln();
    let tv = 0.5
        * (0..50)
            .map(|k| (freq[k] - (edges[k + 1] / edges[k]).ln() / log_s).abs())
            .sum::<f64>();
    assert!(report(
        10,
        "ergodic occupation histogram",
        tv < 0.02,
        &format!("total variation {tv:.4} (< 0.02) over {} steps", h.total())
    ));
}

#[test]
fn criterion_11_unit_theta() {
    let params = MarketParams::new(SIGMA * SIGMA, SIGMA, 0.01).unwrap();
    let sol = solve(&params).unwrap();
    let sentinel = sol.is_degenerate()
        && sol.c == 0.0
        && sol.s_bar == f64::INFINITY
        && sol.pi_lo == 1.0
        && sol.pi_hi == 1.0;
    let run = simulate_paths(&sol, &PathConfig::new(100.0, 1e-2, 400, SEED)).unwrap();
    let traded = run.invariants.interior_trade + run.invariants.boundary_trade;
    let mut recorded = PathConfig::new(100.0, 1e-2, 4, SEED);
    recorded.record_full_paths = true;
    let rec = simulate_paths(&sol, &recorded).unwrap();
    let holds = rec.paths.iter().all(|p| {
        let r = p.record.as_ref().unwrap();
        r.phi.iter().all(|&x| x == 1.0) && r.phi0.iter().all(|&x| x == 0.0)
    });
    let target = SIGMA * SIGMA / 2.0;
    let z = (run.growth - target) / run.growth_se;
    let ok = sentinel && traded == 0.0 && holds && z.abs() <= 3.0;
    assert!(report(
        11,
        "theta = 1 degenerate path",
        ok,
        &format!(
            "sentinel {sentinel}, total |d phi| {traded:e}, phi = 1 on recorded paths {holds}, growth {:.6} +- {:.6} ({z:+.2} SE from {target})",
            run.growth, run.growth_se
        )
    ));
}

#[test]
fn criterion_12_liquidation_gap() {
    let (sol, coarse, _) = mc_run();
    let log_keep = (1.0 - sol.lambda()).ln();
    let pathwise = coarse.paths.iter().all(|p| {
        p.log_v >= p.log_v_tilde + log_keep - 1e-12 && p.log_v <= p.log_v_tilde + 1e-12
    });
    let means = coarse.mean_log_v >= coarse.mean_log_v_tilde + log_keep && coarse.mean_log_v <= coarse.mean_log_v_tilde;
    let margin = admissibility_margin(sol);
    assert!(report(
        12,
        "liquidation gap",
        pathwise && means,
        &format!(
            "mean log V_T {:.6}, mean log V~_T {:.6}, log(1-lambda) {log_keep:.6}, pathwise {pathwise}, margin {margin:.6}",
            coarse.mean_log_v, coarse.mean_log_v_tilde
        )
    ));
}
