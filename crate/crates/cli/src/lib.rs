//! Command-line front end for the `netpricing` solvers.

pub mod scenario;

use std::fs::File;
use std::io::{BufWriter, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};

use netpricing::connectivity::{
    bundle_optimal, compare_connectivity, device_only_optimal, hybrid_optimal, sep_optimal,
};
use netpricing::content::{
    bundled_optimal_content, compare_content, device_only_content, hybrid_optimal_content, ContentSolution,
};
use netpricing::fmt::g12;
use netpricing::oracle::{build_population, grid_search_optimal, OracleError};
use netpricing::regime::{emit_csv, sweep};
use netpricing::{
    Execution, ModelKind, ModelParams, PriceProfile, SearchConfig, SolveError, Strategy, StrategySolution,
};

use scenario::{LawKind, LawSection, ParamsSection, Scenario, ScenarioError};

const PRECEDENCE: &str = "Parameter flags override values from --scenario; anything left unset \
takes the model default (gamma = 1, omega = 1, theta_bar = 1.5, uniform valuations). A truncated-normal \
law without a mean is centred on its support; without an sd it uses 0.2 x the support width.";

#[derive(Parser, Debug)]
#[command(name = "netpricing", version, about = "Optimal device and network-service pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal prices for one strategy.
    #[command(after_help = PRECEDENCE)]
    Solve {
        #[arg(long, ignore_case = true)]
        model: Option<ModelArg>,
        #[arg(long, ignore_case = true)]
        strategy: StrategyArg,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Every strategy side by side with the winner.
    #[command(after_help = PRECEDENCE)]
    Compare {
        #[arg(long, ignore_case = true)]
        model: Option<ModelArg>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Parameter sweep from a scenario file, written as CSV.
    Map {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: String,
    },
    /// Brute-force population optimum and its distance from the solver.
    #[command(after_help = PRECEDENCE)]
    Oracle {
        #[arg(long, ignore_case = true)]
        model: Option<ModelArg>,
        #[arg(long, ignore_case = true)]
        strategy: StrategyArg,
        #[arg(long)]
        n_users: Option<usize>,
        #[arg(long)]
        price_step: Option<f64>,
        #[command(flatten)]
        params: ParamFlags,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Connectivity,
    Content,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Separate,
    Bundled,
    Hybrid,
    #[value(name = "device_only", alias = "device-only")]
    DeviceOnly,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Separate => Strategy::Separate,
            StrategyArg::Bundled => Strategy::Bundled,
            StrategyArg::Hybrid => Strategy::Hybrid,
            StrategyArg::DeviceOnly => Strategy::DeviceOnly,
        }
    }
}

#[derive(Args, Debug, Default)]
struct ParamFlags {
    /// Scenario file supplying defaults for the flags below.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta_bar: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Mean of a truncated-normal mobility law (connectivity).
    #[arg(long)]
    alpha_mean: Option<f64>,
    #[arg(long)]
    alpha_sd: Option<f64>,
    /// Mean of a truncated-normal device valuation (content).
    #[arg(long)]
    r1_mean: Option<f64>,
    #[arg(long)]
    r1_sd: Option<f64>,
    /// Mean of a truncated-normal service valuation (content).
    #[arg(long)]
    r2_mean: Option<f64>,
    #[arg(long)]
    r2_sd: Option<f64>,
}

fn law(mean: Option<f64>, sd: Option<f64>) -> LawSection {
    let normal = mean.is_some() || sd.is_some();
    LawSection { kind: normal.then_some(LawKind::TruncatedNormal), mean, stddev: sd }
}

impl ParamFlags {
    fn section(&self) -> ParamsSection {
        ParamsSection {
            c1: self.c1,
            c2: self.c2,
            gamma: self.gamma,
            lambda: self.lambda,
            theta_bar: self.theta_bar,
            omega: self.omega,
            alpha: law(self.alpha_mean, self.alpha_sd),
            r1: law(self.r1_mean, self.r1_sd),
            r2: law(self.r2_mean, self.r2_sd),
        }
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::InvalidParams(_) | SolveError::PriceOutOfRange { .. } | SolveError::UnsupportedConfiguration(_) => {
                Failure::Usage(one_line(&e.to_string()))
            }
            _ => Failure::Solver(one_line(&e.to_string())),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Solve(s) => s.into(),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("output: {e}"))
    }
}

fn one_line(s: &str) -> String {
    s.split('\n').map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("; ")
}

/// Ordered `key=value` output.
#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.push((key.into(), value.into()));
    }

    fn num(&mut self, key: impl Into<String>, v: f64) {
        self.put(key, g12(v));
    }

    fn opt(&mut self, key: impl Into<String>, v: Option<f64>) {
        self.put(key, v.map(g12).unwrap_or_default());
    }

    fn write(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}

fn resolve(model: Option<ModelArg>, flags: &ParamFlags) -> Result<(ModelParams, Option<Scenario>), Failure> {
    let file = flags.scenario.as_deref().map(Scenario::load).transpose()?;
    let model = match (model, &file) {
        (Some(ModelArg::Connectivity), _) => ModelKind::Connectivity,
        (Some(ModelArg::Content), _) => ModelKind::Content,
        (None, Some(s)) => s.model.into(),
        (None, None) => return Err(Failure::Usage("--model is required without --scenario".into())),
    };
    let base = file.as_ref().map(|s| s.params).unwrap_or_default();
    let params = base.merge(flags.section()).build(model).map_err(Failure::Usage)?;
    let report = params.validate();
    if !report.is_ok() {
        return Err(Failure::Usage(format!("invalid parameters: {}", one_line(&report.to_string()))));
    }
    Ok((params, file))
}

fn prices_into(r: &mut Report, prefix: &str, prices: &PriceProfile) {
    r.opt(format!("{prefix}p1"), prices.p1);
    r.opt(format!("{prefix}p2"), prices.p2);
    r.opt(format!("{prefix}p12"), prices.p12);
}

fn strategy_into(r: &mut Report, prefix: &str, s: &StrategySolution) {
    r.put(format!("{prefix}offered"), s.is_offered().to_string());
    r.put(format!("{prefix}solution"), s.strategy.name());
    prices_into(r, prefix, &s.prices);
    r.num(format!("{prefix}d1"), s.demands.d1);
    r.num(format!("{prefix}d2"), s.demands.d2);
    r.num(format!("{prefix}d12"), s.demands.d12);
    r.num(format!("{prefix}profit"), s.profit);
    r.put(format!("{prefix}service_offered"), s.service_offered.to_string());
    if let Some(d) = s.diagnostics {
        r.num(format!("{prefix}mu"), d.mu);
        r.num(format!("{prefix}kappa"), d.kappa);
        r.put(format!("{prefix}root_count"), d.root_count_in_feasible.to_string());
    }
}

fn content_into(r: &mut Report, prefix: &str, s: Option<&ContentSolution>) {
    r.put(format!("{prefix}offered"), s.is_some().to_string());
    r.put(format!("{prefix}solution"), s.map(|s| s.strategy.name()).unwrap_or(""));
    r.put(format!("{prefix}regime"), s.and_then(|s| s.regime).map(|g| format!("{g:?}").to_lowercase()).unwrap_or_default());
    prices_into(r, prefix, &s.map(|s| s.prices).unwrap_or_default());
    r.opt(format!("{prefix}d1"), s.map(|s| s.demands.d1));
    r.opt(format!("{prefix}d12"), s.map(|s| s.demands.d12));
    r.num(format!("{prefix}profit"), s.map_or(0.0, |s| s.profit));
    r.put(format!("{prefix}degenerate_to_bundle"), s.is_some_and(|s| s.degenerate_to_bundle).to_string());
}

fn solve_connectivity(p: &netpricing::ConnectivityParams, strategy: Strategy) -> Result<StrategySolution, SolveError> {
    match strategy {
        Strategy::Separate => sep_optimal(p),
        Strategy::Bundled => bundle_optimal(p),
        Strategy::Hybrid => hybrid_optimal(p),
        Strategy::DeviceOnly => Ok(device_only_optimal(p, &SearchConfig::default())),
    }
}

/// `Ok(None)` is a bundle that cannot be sold at a profit.
fn solve_content(p: &netpricing::ContentParams, strategy: Strategy) -> Result<Option<ContentSolution>, SolveError> {
    let r = match strategy {
        Strategy::Separate => {
            return Err(SolveError::UnsupportedConfiguration("separate pricing is not defined for content".into()))
        }
        Strategy::Bundled => bundled_optimal_content(p),
        Strategy::Hybrid => hybrid_optimal_content(p),
        Strategy::DeviceOnly => Ok(device_only_content(p, &SearchConfig::default())),
    };
    match r {
        Ok(s) => Ok(Some(s)),
        Err(SolveError::NotOffered) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cmd_solve(model: Option<ModelArg>, strategy: StrategyArg, flags: &ParamFlags) -> Result<Report, Failure> {
    let (params, _) = resolve(model, flags)?;
    let strategy = Strategy::from(strategy);
    let mut r = Report::default();
    r.put("model", params.kind().to_string());
    r.put("strategy", strategy.name());
    match &params {
        ModelParams::Connectivity(p) => strategy_into(&mut r, "", &solve_connectivity(p, strategy)?),
        ModelParams::Content(p) => content_into(&mut r, "", solve_content(p, strategy)?.as_ref()),
    }
    Ok(r)
}

fn cmd_compare(model: Option<ModelArg>, flags: &ParamFlags) -> Result<Report, Failure> {
    let (params, _) = resolve(model, flags)?;
    let mut r = Report::default();
    r.put("model", params.kind().to_string());
    match &params {
        ModelParams::Connectivity(p) => {
            let c = compare_connectivity(p)?;
            strategy_into(&mut r, "separate.", &c.separate);
            strategy_into(&mut r, "bundled.", &c.bundled);
            strategy_into(&mut r, "hybrid.", &c.hybrid);
            r.put("winner", c.winner.name());
            r.put("winner_solution", c.winner_label().name());
            r.num("bundling_threshold", c.bundling_threshold);
            r.put("bundled_beats_separate", c.bundled_beats_separate.to_string());
            r.num("cost_sum", c.cost_sum);
            r.put("low_service_cost", c.low_service_cost.to_string());
        }
        ModelParams::Content(p) => {
            let c = compare_content(p)?;
            content_into(&mut r, "bundled.", c.bundled.as_ref());
            content_into(&mut r, "hybrid.", Some(&c.hybrid));
            r.put("winner", c.winner.name());
            r.put("winner_solution", c.winner_label());
            r.put("degeneration_condition", c.degeneration_condition.to_string());
        }
    }
    Ok(r)
}

fn cmd_map(path: &str, out: &str) -> Result<Report, Failure> {
    let file = Scenario::load(path)?;
    let model: ModelKind = file.model.into();
    let params = file.params.build(model).map_err(|m| Failure::Usage(format!("{path}: {m}")))?;
    let spec = file.sweep_spec(params, path)?;
    let map = sweep(&spec, &SearchConfig::sweep())
        .map_err(|rep| Failure::Usage(format!("{path}: invalid sweep: {}", one_line(&rep.to_string()))))?;
    let sink = File::create(out).map_err(|e| Failure::Usage(format!("{out}: {e}")))?;
    let bytes = emit_csv(&map, BufWriter::new(sink)).map_err(|e| Failure::Solver(format!("{out}: {e}")))?;
    let mut r = Report::default();
    r.put("cells", map.cells.len().to_string());
    r.put("bytes", bytes.to_string());
    r.put("out", out);
    Ok(r)
}

fn cmd_oracle(
    model: Option<ModelArg>,
    strategy: StrategyArg,
    n_users: Option<usize>,
    price_step: Option<f64>,
    flags: &ParamFlags,
) -> Result<Report, Failure> {
    let (params, file) = resolve(model, flags)?;
    let strategy = Strategy::from(strategy);
    let section = file.map(|f| f.oracle).unwrap_or_default();
    let n = n_users.or(section.n_users).unwrap_or(match params.kind() {
        ModelKind::Connectivity => 10_000,
        ModelKind::Content => 1024,
    });
    let step = price_step.or(section.price_step).unwrap_or(1e-2);
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Failure::Usage(format!("--price-step must lie in (0, 0.01], got {step}")));
    }
    let analytic = match &params {
        ModelParams::Connectivity(p) => solve_connectivity(p, strategy)?.profit,
        ModelParams::Content(p) => solve_content(p, strategy)?.map_or(0.0, |s| s.profit),
    };
    let pop = build_population(&params, n);
    let found = grid_search_optimal(&pop, strategy, &params, step, Execution::Parallel)?;
    let mut r = Report::default();
    r.put("model", params.kind().to_string());
    r.put("strategy", strategy.name());
    r.put("n_users", pop.len().to_string());
    r.num("price_step", step);
    prices_into(&mut r, "oracle.", &found.prices);
    r.num("oracle.d1", found.demands.d1);
    r.num("oracle.d2", found.demands.d2);
    r.num("oracle.d12", found.demands.d12);
    r.num("oracle.profit", found.profit);
    r.num("analytic.profit", analytic);
    r.num("deviation", (found.profit - analytic).abs());
    Ok(r)
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    let _ = writeln!(err, "{}", first.trim());
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Solve { model, strategy, params } => cmd_solve(*model, *strategy, params),
        Command::Compare { model, params } => cmd_compare(*model, params),
        Command::Map { scenario, out } => cmd_map(scenario, out),
        Command::Oracle { model, strategy, n_users, price_step, params } => {
            cmd_oracle(*model, *strategy, *n_users, *price_step, params)
        }
    };
    match result.and_then(|r| r.write(out).map_err(Failure::from)) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
