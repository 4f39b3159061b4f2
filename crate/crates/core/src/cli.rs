//! Command-line front end.
//!
//! Every command prints one document: a JSON object, or a CSV table with a
//! header row. Floating-point values are written with 17 significant digits;
//! non-finite values appear as the strings `inf`, `-inf` and `nan`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Number, Value};

use crate::asymptotics::{self, BoundarySeries, Route, DEFAULT_ORDER};
use crate::error::{domain, Error, Result};
use crate::fmt::fmt_f64;
use crate::growth::GrowthReport;
use crate::model::MarketParams;
use crate::series::FracSeries;
use crate::simulate::{simulate_paths, PathConfig, SimSummary};
use crate::solver::{admissibility_margin, solve, FrictionSolution};

#[derive(Debug, Parser)]
#[command(name = "shadowgrowth", version, about = "Growth-optimal trading with proportional transaction costs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; `table` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the document to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for c, s_bar and the no-trade region.
    Solve(MarketArgs),
    /// Expansion coefficients in powers of lambda^(1/3).
    Expand(ExpandArgs),
    /// Monte Carlo simulation of the optimal strategy.
    Simulate(SimulateArgs),
    /// Optimal growth rate in closed form and by quadrature.
    Growth(MarketArgs),
    /// Sweep lambda or theta and emit one row per grid point.
    Table(TableArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Drift {
    /// Expected return of the stock.
    #[arg(long, conflicts_with = "theta", allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Volatility of the stock.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Merton proportion mu / sigma^2, an alternative to --mu.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
}

impl Drift {
    fn mu(&self) -> Result<f64> {
        match (self.mu, self.theta) {
            (Some(mu), _) => Ok(mu),
            (None, Some(theta)) => Ok(theta * self.sigma * self.sigma),
            (None, None) => domain("one of --mu or --theta is required"),
        }
    }

    fn params(&self, lambda: f64) -> Result<MarketParams> {
        match (self.mu, self.theta) {
            (None, Some(theta)) => MarketParams::from_theta(theta, self.sigma, lambda),
            _ => MarketParams::new(self.mu()?, self.sigma, lambda),
        }
    }

    fn theta(&self) -> Result<f64> {
        match (self.mu, self.theta) {
            (None, Some(theta)) => Ok(theta),
            _ => Ok(self.mu()? / (self.sigma * self.sigma)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MarketArgs {
    #[command(flatten)]
    pub drift: Drift,
    /// Proportional transaction cost.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub drift: Drift,
    /// Highest power of lambda^(1/3) kept.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Horizon.
    #[arg(long = "T", default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write one CSV file per path into this directory.
    #[arg(long)]
    pub paths_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub drift: Drift,
    /// Fixed transaction cost, required for theta sweeps.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `lambda:start:stop:points[:log|lin]` or `theta:start:stop:points[:log|lin]`.
    #[arg(long)]
    pub sweep: Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Lambda,
    Theta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 && parts.len() != 5 {
            return Err(format!("expected var:start:stop:points[:log|lin], got {s:?}"));
        }
        let var = match parts[0] {
            "lambda" => SweepVar::Lambda,
            "theta" => SweepVar::Theta,
            v => return Err(format!("unknown sweep variable {v:?}")),
        };
        let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let start = num(parts[1])?;
        let stop = num(parts[2])?;
        let points: usize = parts[3].parse().map_err(|e| format!("{:?}: {e}", parts[3]))?;
        let log = match parts.get(4) {
            None | Some(&"lin") => false,
            Some(&"log") => true,
            Some(x) => return Err(format!("unknown spacing {x:?}")),
        };
        if points == 0 {
            return Err("a sweep needs at least one point".into());
        }
        if !(start.is_finite() && stop.is_finite()) || (log && (start <= 0.0 || stop <= 0.0)) {
            return Err("sweep bounds must be finite, and positive for log spacing".into());
        }
        Ok(Sweep { var, start, stop, points, log })
    }
}

impl Sweep {
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        let mut grid: Vec<f64> = (0..self.points)
            .map(|k| {
                let u = k as f64 / n;
                if self.log {
                    (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + u * (self.stop - self.start)
                }
            })
            .collect();
        grid[0] = self.start;
        grid[self.points - 1] = self.stop;
        grid
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::String(fmt_f64(x))
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// A finished document: either a JSON value or CSV rows.
enum Document {
    Json(Value),
    Csv(Vec<String>, Vec<Vec<String>>),
}

impl Document {
    fn render(&self) -> Result<String> {
        match self {
            Document::Json(v) => {
                let mut s = serde_json::to_string_pretty(v)
                    .map_err(|e| Error::Io(format!("serializing json: {e}")))?;
                s.push('\n');
                Ok(s)
            }
            Document::Csv(header, rows) => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Io(format!("writing csv: {e}"));
                w.write_record(header).map_err(io)?;
                for r in rows {
                    w.write_record(r).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
            }
        }
    }
}

/// Field list of a flat record; CSV uses the keys as header.
fn record(fields: Vec<(&str, Value)>) -> Map<String, Value> {
    fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn flat(map: Map<String, Value>, format: Format) -> Document {
    match format {
        Format::Json => Document::Json(Value::Object(map)),
        Format::Csv => {
            let header = map.keys().cloned().collect();
            let row = map.values().map(cell).collect();
            Document::Csv(header, vec![row])
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn solution_fields(sol: &FrictionSolution) -> Map<String, Value> {
    let p = &sol.params;
    record(vec![
        ("theta", num(p.theta())),
        ("mu", num(p.mu())),
        ("sigma", num(p.sigma())),
        ("lambda", num(p.lambda())),
        ("regime", Value::String(p.regime().name().into())),
        ("c", num(sol.c)),
        ("s_bar", num(sol.s_bar)),
        ("pi_lo", num(sol.pi_lo)),
        ("pi_hi", num(sol.pi_hi)),
        ("shadow_pi_lo", num(sol.shadow_pi_lo)),
        ("shadow_pi_hi", num(sol.shadow_pi_hi)),
        ("symmetry_residual", num(sol.symmetry_residual())),
        ("admissibility_margin", num(admissibility_margin(sol))),
    ])
}

fn growth_fields(sol: &FrictionSolution) -> Result<Map<String, Value>> {
    let r = GrowthReport::compute(sol)?;
    let p = &sol.params;
    Ok(record(vec![
        ("theta", num(p.theta())),
        ("mu", num(p.mu())),
        ("sigma", num(p.sigma())),
        ("lambda", num(p.lambda())),
        ("delta_closed", num(r.delta_closed)),
        ("delta_quadrature", num(r.delta_quadrature)),
        ("delta_frictionless", num(r.delta_frictionless)),
        ("stationary_normalizer", num(r.stationary_normalizer)),
        ("stationary_mass", num(r.stationary_mass)),
    ]))
}

fn expand(args: &ExpandArgs, format: Format) -> Result<Document> {
    let theta = args.drift.theta()?;
    let sigma = args.drift.sigma;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let order = args.order;
    let k = asymptotics::expand_constants(theta, order, Route::Inversion)?;
    let b = asymptotics::expand_boundaries(theta, order)?;
    let g = asymptotics::expand_growth(theta, sigma, order)?;
    let mid = asymptotics::expand_midprice(theta, order)?;
    let columns: Vec<(&str, &FracSeries)> = vec![
        ("c", &k.c),
        ("s_bar", &k.s_bar),
        ("pi_lo", &b.lo),
        ("pi_hi", &b.hi),
        ("width", &b.width),
        ("growth", &g),
        ("mid_pi_lo", &mid.lo),
        ("mid_pi_hi", &mid.hi),
        ("mid_width", &mid.width),
    ];
    Ok(match format {
        Format::Json => {
            let boundaries = |s: &BoundarySeries| {
                json!({"pi_lo": nums(s.lo.coeffs()), "pi_hi": nums(s.hi.coeffs()), "width": nums(s.width.coeffs())})
            };
            let mut m = record(vec![
                ("theta", num(theta)),
                ("sigma", num(sigma)),
                ("order", json!(order)),
                ("variable", json!("lambda^(1/3)")),
                ("c", nums(k.c.coeffs())),
                ("s_bar", nums(k.s_bar.coeffs())),
            ]);
            m.insert("boundaries".into(), boundaries(&b));
            m.insert("growth".into(), nums(g.coeffs()));
            let mut midprice = boundaries(&mid);
            midprice["variable"] = json!("lambda_mid^(1/3)");
            m.insert("midprice".into(), midprice);
            Document::Json(Value::Object(m))
        }
        Format::Csv => {
            let mut header = vec!["power".to_string()];
            header.extend(columns.iter().map(|(n, _)| n.to_string()));
            let rows = (0..=order)
                .map(|p| {
                    let mut row = vec![p.to_string()];
                    row.extend(columns.iter().map(|(_, s)| fmt_f64(s.coeff(p))));
                    row
                })
                .collect();
            Document::Csv(header, rows)
        }
    })
}

fn simulation_document(sol: &FrictionSolution, cfg: &PathConfig, out: &SimSummary, format: Format) -> Result<Document> {
    let delta = GrowthReport::compute(sol)?.delta_closed;
    Ok(match format {
        Format::Json => {
            let inv = &out.invariants;
            let mut m = solution_fields(sol);
            m.extend(record(vec![
                ("horizon", num(out.horizon)),
                ("dt", num(out.dt)),
                ("steps", json!(out.steps)),
                ("n_paths", json!(cfg.n_paths)),
                ("seed", json!(cfg.seed)),
                ("growth", num(out.growth)),
                ("growth_se", num(out.growth_se)),
                ("growth_liquidation", num(out.growth_liquidation)),
                ("delta_closed", num(delta)),
                ("mean_log_v_tilde", num(out.mean_log_v_tilde)),
                ("se_log_v_tilde", num(out.se_log_v_tilde)),
                ("mean_log_v", num(out.mean_log_v)),
                ("se_log_v", num(out.se_log_v)),
                ("self_financing_rms", num(out.self_financing_rms)),
            ]));
            m.insert(
                "invariants".into(),
                Value::Object(record(vec![
                    ("spread_violation", num(inv.spread_violation)),
                    ("rec_defect", num(inv.rec_defect)),
                    ("ratio_violation", num(inv.ratio_violation)),
                    ("shadow_pi_min", num(inv.shadow_pi_min)),
                    ("shadow_pi_max", num(inv.shadow_pi_max)),
                    ("wealth_upper_violation", num(inv.wealth_upper_violation)),
                    ("wealth_lower_violation", num(inv.wealth_lower_violation)),
                    ("boundary_trade", num(inv.boundary_trade)),
                    ("interior_trade", num(inv.interior_trade)),
                    ("interior_trade_fraction", num(inv.interior_trade_fraction())),
                ])),
            );
            m.insert(
                "histogram".into(),
                json!({"edges": nums(&out.histogram.edges()), "counts": out.histogram.counts}),
            );
            let col = |f: fn(&crate::simulate::PathOutcome) -> f64| {
                nums(&out.paths.iter().map(f).collect::<Vec<_>>())
            };
            m.insert("log_v_tilde".into(), col(|p| p.log_v_tilde));
            m.insert("log_v".into(), col(|p| p.log_v));
            Document::Json(Value::Object(m))
        }
        Format::Csv => {
            let header = ["path", "log_v", "log_v_tilde", "self_financing_defect"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows = out
                .paths
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    vec![
                        i.to_string(),
                        fmt_f64(p.log_v),
                        fmt_f64(p.log_v_tilde),
                        fmt_f64(p.self_financing_defect),
                    ]
                })
                .collect();
            Document::Csv(header, rows)
        }
    })
}

fn simulate(args: &SimulateArgs, format: Format) -> Result<Document> {
    let params = args.market.drift.params(args.market.lambda)?;
    let sol = solve(&params)?;
    let mut cfg = PathConfig::new(args.horizon, args.dt, args.paths, args.seed);
    cfg.record_full_paths = args.paths_csv.is_some();
    let out = simulate_paths(&sol, &cfg)?;
    if let Some(dir) = &args.paths_csv {
        fs::create_dir_all(dir)?;
        for (i, p) in out.paths.iter().enumerate() {
            if let Some(rec) = &p.record {
                let file = fs::File::create(dir.join(format!("path_{i:05}.csv")))?;
                rec.write_csv(std::io::BufWriter::new(file))?;
            }
        }
    }
    simulation_document(&sol, &cfg, &out, format)
}

fn table(args: &TableArgs, format: Format) -> Result<Document> {
    let grid = args.sweep.grid();
    let mut rows = Vec::with_capacity(grid.len());
    for &x in &grid {
        let params = match args.sweep.var {
            SweepVar::Lambda => args.drift.params(x)?,
            SweepVar::Theta => {
                if args.drift.mu.is_some() {
                    return domain("a theta sweep takes --sigma and --lambda, not --mu");
                }
                let lambda = args
                    .lambda
                    .ok_or_else(|| Error::Domain("a theta sweep needs --lambda".into()))?;
                MarketParams::from_theta(x, args.drift.sigma, lambda)?
            }
        };
        let sol = solve(&params)?;
        let mut row = solution_fields(&sol);
        row.insert("width".into(), num(sol.width()));
        let g = growth_fields(&sol)?;
        for key in ["delta_closed", "delta_quadrature", "delta_frictionless"] {
            row.insert(key.into(), g[key].clone());
        }
        rows.push(row);
    }
    Ok(match format {
        Format::Json => Document::Json(json!({ "rows": rows })),
        Format::Csv => {
            let header = rows[0].keys().cloned().collect();
            let body = rows.iter().map(|r| r.values().map(cell).collect()).collect();
            Document::Csv(header, body)
        }
    })
}

/// Execute a parsed command line and return the rendered document.
pub fn run(cli: &Cli) -> Result<String> {
    let default = match cli.command {
        Command::Table(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.unwrap_or(default);
    let doc = match &cli.command {
        Command::Solve(a) => flat(solution_fields(&solve(&a.drift.params(a.lambda)?)?), format),
        Command::Growth(a) => flat(growth_fields(&solve(&a.drift.params(a.lambda)?)?)?, format),
        Command::Expand(a) => expand(a, format)?,
        Command::Simulate(a) => simulate(a, format)?,
        Command::Table(a) => table(a, format)?,
    };
    doc.render()
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = run(&cli).and_then(|text| match &cli.out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Error::from),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
