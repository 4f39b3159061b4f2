//! Monte Carlo paths of the ask price, the reflected ratio `S/m`, the shadow
//! price and the optimal portfolio.
//!
//! Prices are stepped exactly. After each price step the pivot `m` is
//! clamped so that `S/m` stays in the reflection domain, and holdings are
//! moved only when `m` moves: at ratio 1 the strategy buys at the ask price,
//! at ratio `s_bar` it sells at the bid price. Bond holdings are then reset
//! from `phi0 = c m phi`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::fmt::fmt_f64;
use crate::shadow::ShadowTransform;
use crate::solver::{admissibility_margin, FrictionSolution};

pub const HISTOGRAM_BINS: usize = 50;
/// Distance from a boundary, relative to the ratio, below which a step
/// counts as a boundary step.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Prices and holdings are rescaled when they leave `[1/RESCALE, RESCALE]`.
const RESCALE: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub record_full_paths: bool,
    /// Each Gaussian increment is the normalized sum of `substeps` draws, so
    /// a run with step `dt` and `substeps = k` is driven by the same Brownian
    /// path as a run with step `dt / k` and the same seed.
    pub substeps: usize,
}

impl PathConfig {
    pub fn new(horizon: f64, dt: f64, n_paths: usize, seed: u64) -> PathConfig {
        PathConfig {
            horizon,
            dt,
            n_paths,
            seed,
            record_full_paths: false,
            substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return domain(format!("dt must lie in (0, T], got {}", self.dt));
        }
        if self.n_paths == 0 {
            return domain("n_paths must be at least 1");
        }
        if self.substeps == 0 {
            return domain("substeps must be at least 1");
        }
        Ok(())
    }

    /// Step sizes covering `[0, T]`; the last step is shortened if `T` is
    /// not a multiple of `dt`.
    fn steps(&self) -> (usize, f64) {
        let ratio = self.horizon / self.dt;
        let full = (ratio + 1e-9).floor() as usize;
        let rest = self.horizon - full as f64 * self.dt;
        if rest > 1e-9 * self.dt {
            (full, rest)
        } else {
            (full, 0.0)
        }
    }
}

/// Boundary at which the pivot last moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Ratio 1, shadow price equals the ask price.
    Buy,
    /// Ratio `s_bar`, shadow price equals the bid price.
    Sell,
    /// `theta == 1`: no reflection.
    Hold,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
            Side::Hold => "hold",
        }
    }
}

/// Result of one reflection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub m: f64,
    /// `None` when the ratio was interior and `m` did not move.
    pub side: Option<Side>,
}

/// Move the pivot `m` the least amount that brings `price / m` back into the
/// reflection domain of `shadow`.
pub fn reflect_update(m: f64, price: f64, shadow: &ShadowTransform) -> Result<Reflection> {
    if !(m > 0.0 && price > 0.0 && m.is_finite() && price.is_finite()) {
        return domain(format!("pivot {m} and price {price} must be positive and finite"));
    }
    Ok(reflect(m, price, shadow))
}

fn reflect(m: f64, price: f64, shadow: &ShadowTransform) -> Reflection {
    let (lo, hi) = shadow.domain();
    let s_bar = shadow.solution().s_bar;
    // ratio 1 corresponds to m = price, ratio s_bar to m = price / s_bar
    let m_min = price / hi;
    let m_max = price / lo;
    let m_new = m.clamp(m_min, m_max);
    if m_new == m {
        return Reflection { m, side: None };
    }
    let at_one = if s_bar > 1.0 { m_new == m_max } else { m_new == m_min };
    Reflection {
        m: m_new,
        side: Some(if at_one { Side::Buy } else { Side::Sell }),
    }
}

/// Exponent of `phi` in `m` while the pivot moves on the given side.
fn phi_exponent(side: Side, sol: &FrictionSolution) -> f64 {
    let c = sol.c;
    match side {
        Side::Buy => -c / (c + 1.0),
        Side::Sell => -c / (c + (1.0 - sol.lambda()) * sol.s_bar),
        Side::Hold => 0.0,
    }
}

/// Holdings `(phi0, phi)` after the pivot moves from `m_old` to `m_new` on
/// `side`.
pub fn portfolio_step(
    phi: f64,
    m_old: f64,
    m_new: f64,
    side: Side,
    sol: &FrictionSolution,
) -> Result<(f64, f64)> {
    if !(m_old > 0.0 && m_new > 0.0) {
        return domain(format!("pivots {m_old} and {m_new} must be positive"));
    }
    if m_new == m_old {
        return Ok((sol.c * m_new * phi, phi));
    }
    let phi_new = phi * (phi_exponent(side, sol) * (m_new / m_old).ln()).exp();
    Ok((sol.c * m_new * phi_new, phi_new))
}

/// Holdings right after the initial conversion of wealth `x` held in bonds.
pub fn initial_holdings(x: f64, sol: &FrictionSolution) -> (f64, f64) {
    (sol.c * x / (sol.c + 1.0), x / (sol.c + 1.0))
}

/// Full trajectory of one path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub m: Vec<f64>,
    pub s_tilde: Vec<f64>,
    pub phi0: Vec<f64>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub side: Vec<Side>,
}

impl PathRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Simulation(format!("writing path csv: {e}"));
        w.write_record(["t", "S", "m", "S_tilde", "phi0", "phi", "V", "V_tilde", "regime"])
            .map_err(io)?;
        for i in 0..self.len() {
            let nums = [
                self.times[i],
                self.s[i],
                self.m[i],
                self.s_tilde[i],
                self.phi0[i],
                self.phi[i],
                self.v[i],
                self.v_tilde[i],
            ];
            let mut row: Vec<String> = nums.iter().map(|&x| fmt_f64(x)).collect();
            row.push(self.side[i].name().to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Simulation(format!("writing path csv: {e}")))
    }
}

/// Occupation counts of `S/m` on equal-width bins over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Histogram {
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
        }
    }

    fn add(&mut self, x: f64) {
        let n = self.counts.len();
        if n == 0 || !(self.hi > self.lo) {
            return;
        }
        let k = ((x - self.lo) / (self.hi - self.lo) * n as f64).floor();
        let k = (k.max(0.0) as usize).min(n - 1);
        self.counts[k] += 1;
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n as f64)
            .collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts.iter().map(|&k| k as f64 / total).collect()
    }
}

/// Per-path outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub log_v: f64,
    pub log_v_tilde: f64,
    /// `sum (dV_tilde - phi dS_tilde) / V_tilde` over the path.
    pub self_financing_defect: f64,
    pub record: Option<PathRecord>,
}

/// Pathwise checks, each the worst case over all steps of all paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    /// `max((S_tilde - S)^+, ((1 - lambda) S - S_tilde)^+) / S`.
    pub spread_violation: f64,
    /// `|phi0 - c m phi| / (|phi0| + |c m phi|)`.
    pub rec_defect: f64,
    pub shadow_pi_min: f64,
    pub shadow_pi_max: f64,
    /// Distance of `S/m` outside the domain, relative to the ratio.
    pub ratio_violation: f64,
    /// `max (V - V_tilde)^+ / V_tilde`.
    pub wealth_upper_violation: f64,
    /// `max (margin V_tilde - V)^+ / V_tilde`.
    pub wealth_lower_violation: f64,
    /// `sum |d phi|` over steps ending with the ratio at a boundary.
    pub boundary_trade: f64,
    /// `sum |d phi|` over steps ending with the ratio strictly inside.
    pub interior_trade: f64,
}

impl Invariants {
    fn empty() -> Invariants {
        Invariants {
            spread_violation: 0.0,
            rec_defect: 0.0,
            shadow_pi_min: f64::INFINITY,
            shadow_pi_max: f64::NEG_INFINITY,
            ratio_violation: 0.0,
            wealth_upper_violation: 0.0,
            wealth_lower_violation: 0.0,
            boundary_trade: 0.0,
            interior_trade: 0.0,
        }
    }

    fn merge(&mut self, o: &Invariants) {
        self.spread_violation = self.spread_violation.max(o.spread_violation);
        self.rec_defect = self.rec_defect.max(o.rec_defect);
        self.shadow_pi_min = self.shadow_pi_min.min(o.shadow_pi_min);
        self.shadow_pi_max = self.shadow_pi_max.max(o.shadow_pi_max);
        self.ratio_violation = self.ratio_violation.max(o.ratio_violation);
        self.wealth_upper_violation = self.wealth_upper_violation.max(o.wealth_upper_violation);
        self.wealth_lower_violation = self.wealth_lower_violation.max(o.wealth_lower_violation);
        self.boundary_trade += o.boundary_trade;
        self.interior_trade += o.interior_trade;
    }

    /// Share of traded volume at interior steps.
    pub fn interior_trade_fraction(&self) -> f64 {
        let total = self.boundary_trade + self.interior_trade;
        if total > 0.0 {
            self.interior_trade / total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub paths: Vec<PathOutcome>,
    pub mean_log_v_tilde: f64,
    pub se_log_v_tilde: f64,
    pub mean_log_v: f64,
    pub se_log_v: f64,
    /// `mean(log V_tilde_T) / T`.
    pub growth: f64,
    pub growth_se: f64,
    pub growth_liquidation: f64,
    /// Root mean square over paths of the accumulated self-financing defect.
    pub self_financing_rms: f64,
    pub histogram: Histogram,
    pub invariants: Invariants,
}

/// Neumaier-compensated sum.
fn sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        comp += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + comp
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct PathResult {
    outcome: PathOutcome,
    histogram: Histogram,
    invariants: Invariants,
}

struct Stepper<'a> {
    sol: &'a FrictionSolution,
    shadow: &'a ShadowTransform,
    lambda: f64,
    margin: f64,
    degenerate: bool,
}

/// Mutable state of one path. Money amounts are stored divided by
/// `exp(log_money)`, share amounts divided by `exp(log_shares)`.
struct State {
    t: f64,
    s: f64,
    m: f64,
    phi0: f64,
    phi: f64,
    side: Side,
    log_money: f64,
    log_shares: f64,
}

impl Stepper<'_> {
    fn s_tilde(&self, st: &State) -> f64 {
        st.m * self.shadow.g_unchecked(st.s / st.m)
    }

    /// `(V, V_tilde)` in scaled units.
    fn wealth(&self, st: &State, s_tilde: f64) -> (f64, f64) {
        let stock = if st.phi >= 0.0 {
            st.phi * (1.0 - self.lambda) * st.s
        } else {
            st.phi * st.s
        };
        (st.phi0 + stock, st.phi0 + st.phi * s_tilde)
    }

    fn record(&self, rec: &mut PathRecord, st: &State, s_tilde: f64) {
        let money = st.log_money.exp();
        let shares = st.log_shares.exp();
        let price = money / shares;
        let (v, vt) = self.wealth(st, s_tilde);
        rec.times.push(st.t);
        rec.s.push(st.s * price);
        rec.m.push(st.m * price);
        rec.s_tilde.push(s_tilde * price);
        rec.phi0.push(st.phi0 * money);
        rec.phi.push(st.phi * shares);
        rec.v.push(v * money);
        rec.v_tilde.push(vt * money);
        rec.side.push(st.side);
    }

    fn check(&self, st: &State, s_tilde: f64, inv: &mut Invariants) -> Result<(f64, f64)> {
        let (v, vt) = self.wealth(st, s_tilde);
        if !(vt > 0.0 && v > 0.0) || !vt.is_finite() {
            return Err(Error::Simulation(format!(
                "wealth became non-positive at t = {}: V = {v}, V_tilde = {vt}",
                st.t
            )));
        }
        let spread = ((s_tilde - st.s).max((1.0 - self.lambda) * st.s - s_tilde)).max(0.0) / st.s;
        inv.spread_violation = inv.spread_violation.max(spread);
        let rec = self.sol.c * st.m * st.phi;
        let scale = st.phi0.abs() + rec.abs();
        if scale > 0.0 {
            inv.rec_defect = inv.rec_defect.max((st.phi0 - rec).abs() / scale);
        }
        let pi = st.phi * s_tilde / vt;
        inv.shadow_pi_min = inv.shadow_pi_min.min(pi);
        inv.shadow_pi_max = inv.shadow_pi_max.max(pi);
        inv.wealth_upper_violation = inv.wealth_upper_violation.max((v - vt).max(0.0) / vt);
        inv.wealth_lower_violation = inv
            .wealth_lower_violation
            .max((self.margin * vt - v).max(0.0) / vt);
        Ok((v, vt))
    }

    fn rescale(&self, st: &mut State) {
        if !(st.s > 1.0 / RESCALE && st.s < RESCALE) {
            // change of currency unit
            let k = st.s.ln();
            st.s /= k.exp();
            st.m /= k.exp();
            st.phi0 /= k.exp();
            st.log_money += k;
        }
        let size = st.phi.abs();
        if size > 0.0 && !(size > 1.0 / RESCALE && size < RESCALE) {
            // change of share unit, which also rescales money
            let k = size.ln();
            st.phi /= k.exp();
            st.phi0 /= k.exp();
            st.s *= k.exp();
            st.m *= k.exp();
            st.log_shares += k;
            st.log_money += k;
        }
    }

    fn run(&self, index: usize, params_drift: f64, sigma: f64, cfg: &PathConfig) -> Result<PathResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let (lo, hi) = self.shadow.domain();
        let mut histogram = if self.degenerate {
            Histogram::new(1.0, 1.0, 0)
        } else {
            Histogram::new(lo, hi, HISTOGRAM_BINS)
        };
        let mut inv = Invariants::empty();
        let (phi0, phi) = initial_holdings(1.0, self.sol);
        let mut st = State {
            t: 0.0,
            s: 1.0,
            m: 1.0,
            phi0,
            phi,
            side: if self.degenerate { Side::Hold } else { Side::Buy },
            log_money: 0.0,
            log_shares: 0.0,
        };
        let mut record = cfg.record_full_paths.then(PathRecord::default);
        let mut s_tilde = self.s_tilde(&st);
        if let Some(rec) = record.as_mut() {
            self.record(rec, &st, s_tilde);
        }
        let (_, mut vt) = self.check(&st, s_tilde, &mut inv)?;
        let mut defect = 0.0;

        let (full, rest) = cfg.steps();
        let n_steps = full + usize::from(rest > 0.0);
        let norm = 1.0 / (cfg.substeps as f64).sqrt();
        for step in 0..n_steps {
            let h = if step < full { cfg.dt } else { rest };
            let mut z = 0.0;
            for _ in 0..cfg.substeps {
                let x: f64 = StandardNormal.sample(&mut rng);
                z += x;
            }
            z *= norm;
            st.s *= (sigma * h.sqrt() * z + (params_drift - 0.5 * sigma * sigma) * h).exp();
            st.t = if step + 1 == n_steps { cfg.horizon } else { (step + 1) as f64 * cfg.dt };

            let r = reflect(st.m, st.s, self.shadow);
            let phi_old = st.phi;
            let phi0_old = st.phi0;
            if let Some(side) = r.side {
                debug_assert!(
                    (side == Side::Buy) == ((r.m < st.m) == (self.sol.s_bar > 1.0)),
                    "pivot moved against its boundary"
                );
                let e = phi_exponent(side, self.sol);
                st.phi *= (e * (r.m / st.m).ln()).exp();
                st.side = side;
            }
            st.m = r.m;
            st.phi0 = self.sol.c * st.m * st.phi;

            let s_tilde_new = self.s_tilde(&st);
            let (_, vt_new) = self.check(&st, s_tilde_new, &mut inv)?;
            defect += ((st.phi0 - phi0_old) + (st.phi - phi_old) * s_tilde_new) / vt;

            let traded = (st.phi - phi_old).abs() * st.log_shares.exp();
            if self.degenerate {
                // there is no boundary, so any trade is an interior trade
                inv.interior_trade += traded;
            } else {
                let ratio = st.s / st.m;
                let at_boundary = (ratio - lo).abs() <= BOUNDARY_TOL * ratio
                    || (ratio - hi).abs() <= BOUNDARY_TOL * ratio;
                let outside = ((lo - ratio).max(ratio - hi)).max(0.0) / ratio;
                inv.ratio_violation = inv.ratio_violation.max(outside);
                if at_boundary {
                    inv.boundary_trade += traded;
                } else {
                    inv.interior_trade += traded;
                }
                histogram.add(ratio);
            }
            if let Some(rec) = record.as_mut() {
                self.record(rec, &st, s_tilde_new);
            }
            s_tilde = s_tilde_new;
            vt = vt_new;
            self.rescale(&mut st);
        }
        let (v, vt) = self.wealth(&st, s_tilde);
        Ok(PathResult {
            outcome: PathOutcome {
                log_v: v.ln() + st.log_money,
                log_v_tilde: vt.ln() + st.log_money,
                self_financing_defect: defect,
                record,
            },
            histogram,
            invariants: inv,
        })
    }
}

/// Simulate `cfg.n_paths` independent paths starting from `S_0 = m_0 = 1`
/// and unit wealth.
pub fn simulate_paths(sol: &FrictionSolution, cfg: &PathConfig) -> Result<SimSummary> {
    cfg.validate()?;
    let params = sol.params;
    let degenerate = sol.is_degenerate();
    let margin = if degenerate { 1.0 - params.lambda() } else { admissibility_margin(sol) };
    if params.regime().is_leveraged() && margin <= 0.0 {
        return domain(format!(
            "admissibility margin {margin} is not positive; lambda is too large for theta = {}",
            params.theta()
        ));
    }
    let shadow = ShadowTransform::new(*sol);
    let stepper = Stepper {
        sol,
        shadow: &shadow,
        lambda: params.lambda(),
        margin,
        degenerate,
    };
    let results: Vec<PathResult> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| stepper.run(i, params.mu(), params.sigma(), cfg))
        .collect::<Result<_>>()?;

    let mut histogram = results[0].histogram.clone();
    let mut invariants = Invariants::empty();
    for r in &results[1..] {
        histogram.merge(&r.histogram);
    }
    for r in &results {
        invariants.merge(&r.invariants);
    }
    let log_vt: Vec<f64> = results.iter().map(|r| r.outcome.log_v_tilde).collect();
    let log_v: Vec<f64> = results.iter().map(|r| r.outcome.log_v).collect();
    let (mean_log_v_tilde, se_log_v_tilde) = mean_se(&log_vt);
    let (mean_log_v, se_log_v) = mean_se(&log_v);
    let n = results.len() as f64;
    let self_financing_rms =
        (sum(results.iter().map(|r| r.outcome.self_financing_defect.powi(2))) / n).sqrt();
    let (full, rest) = cfg.steps();
    let t = cfg.horizon;
    Ok(SimSummary {
        horizon: t,
        dt: cfg.dt,
        steps: full + usize::from(rest > 0.0),
        paths: results.into_iter().map(|r| r.outcome).collect(),
        mean_log_v_tilde,
        se_log_v_tilde,
        mean_log_v,
        se_log_v,
        growth: mean_log_v_tilde / t,
        growth_se: se_log_v_tilde / t,
        growth_liquidation: mean_log_v / t,
        self_financing_rms,
        histogram,
        invariants,
    })
}

/// Run at step `cfg.dt` and at `cfg.dt / factor` on the same Brownian paths.
/// Returns `(coarse, fine)`.
pub fn simulate_refinement(
    sol: &FrictionSolution,
    cfg: &PathConfig,
    factor: usize,
) -> Result<(SimSummary, SimSummary)> {
    if factor == 0 {
        return domain("refinement factor must be at least 1");
    }
    let coarse = PathConfig {
        substeps: cfg.substeps * factor,
        ..*cfg
    };
    let fine = PathConfig {
        dt: cfg.dt / factor as f64,
        ..*cfg
    };
    Ok((simulate_paths(sol, &coarse)?, simulate_paths(sol, &fine)?))
}
