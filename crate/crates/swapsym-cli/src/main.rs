//! `swapsym` — symmetry checks, power solving, Monte-Carlo pricing and
//! semi-static hedge backtests for exponential-Levy market models.
//!
//! Every command emits one JSON document with the command name, the fully
//! resolved configuration, the report, and a trailing wall-clock timestamp.
//! With `--out FILE` the document goes to the file and a one-line summary to
//! stdout; otherwise the document goes to stdout and the summary to stderr.
//! Re-running with identical inputs and seed reproduces the document byte
//! for byte except for `timestamp_unix_ms`.
//!
//! Exit codes: 0 — the computation ran and its verdict is positive;
//! 1 — it ran but the verdict is negative (a check failed, a z-score crossed
//! its bound, the power solver found no usable root, a hedge rests on a
//! symmetry the model lacks); 2 — unusable input (bad flags, unreadable or
//! invalid files, dimension mismatches, resource limits).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use swapsym::defaults;
use swapsym::hedge::{
    closed_form_value, convergence_study, run_backtest, write_pnl_csv, BacktestConfig,
    BarrierContract, ValuationMode,
};
use swapsym::market::MarketSpec;
use swapsym::quasi::{
    check_quasi_swap_invariant, quasi_weight_vector, solve_alpha, AlphaSolveOptions,
};
use swapsym::report::SymmetryReport;
use swapsym::sim::{estimate_payoff, mc_symmetry_test, simulate_paths, PayoffSpec, SwapTestSpec};
use swapsym::symmetry::{
    check_charfn_exchangeable, check_charfn_symmetry, check_exchangeable, check_swap_invariant,
    check_weighted_swap_invariant, GridSpec,
};
use swapsym::triplet::LevyTriplet;
use swapsym::Error;

#[derive(Parser)]
#[command(
    name = "swapsym",
    version,
    about = "Symmetry checks and semi-static hedge backtests for exponential-Levy market models"
)]
struct Cli {
    /// Write the JSON document to this file (the summary then goes to stdout).
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Cap the number of worker threads for data-parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a symmetry of the model, structurally and on a
    /// characteristic-function grid.
    Check(CheckArgs),
    /// Solve for the power that makes the pair quasi-swap-invariant.
    Alpha(AlphaArgs),
    /// Monte-Carlo price of a payoff at the horizon, cross-checked against
    /// a closed form when one exists.
    Price(PriceArgs),
    /// Paired Monte-Carlo test of the distributional swap identity.
    SymmetryMc(SymmetryMcArgs),
    /// Backtest the semi-static hedge of a barrier contract.
    Hedge(HedgeArgs),
    /// Hedging error versus barrier monitoring frequency.
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Exchangeable,
    Swap,
    WeightedSwap,
    QuasiSwap,
}

impl CheckKind {
    fn name(self) -> &'static str {
        match self {
            CheckKind::Exchangeable => "exchangeable",
            CheckKind::Swap => "swap",
            CheckKind::WeightedSwap => "weighted-swap",
            CheckKind::QuasiSwap => "quasi-swap",
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Model file: a market (with spots and horizon) or a bare triplet.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Symmetry to verify.
    #[arg(long, value_enum)]
    kind: CheckKind,

    /// First asset of the pair (1-based).
    #[arg(long, default_value_t = 1)]
    i: usize,

    /// Second asset of the pair (1-based).
    #[arg(long, default_value_t = 2)]
    j: usize,

    /// Power for the quasi-swap check.
    #[arg(long)]
    alpha: Option<f64>,

    /// Rate of asset i (quasi-swap only; defaults to the market's, or 0).
    #[arg(long)]
    ri: Option<f64>,

    /// Rate of asset j (quasi-swap only; defaults to the market's, or 0).
    #[arg(long)]
    rj: Option<f64>,

    /// Quasi-swap variant with the multiplicative weight on the last
    /// coordinate.
    #[arg(long)]
    weighted: bool,

    /// Structural residual tolerance.
    #[arg(long, default_value_t = defaults::STRUCTURAL_TOL)]
    tol: f64,

    /// Characteristic-function residual tolerance.
    #[arg(long, default_value_t = defaults::CHARFN_TOL)]
    charfn_tol: f64,

    /// Seed for the grid sampler.
    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,
}

#[derive(Args)]
struct AlphaArgs {
    /// Model file: a market or a bare triplet.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// First asset of the pair (1-based).
    #[arg(long, default_value_t = 1)]
    i: usize,

    /// Second asset of the pair (1-based).
    #[arg(long, default_value_t = 2)]
    j: usize,

    /// Rate of asset i (defaults to the market's, or 0).
    #[arg(long)]
    ri: Option<f64>,

    /// Rate of asset j (defaults to the market's, or 0).
    #[arg(long)]
    rj: Option<f64>,

    /// Solve the weighted variant (weight on the last coordinate).
    #[arg(long)]
    weighted: bool,

    /// Absolute accuracy of the returned power.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct PriceArgs {
    /// Market file (spots, carrying costs, horizon required).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Payoff file (JSON).
    #[arg(long, value_name = "FILE")]
    payoff: PathBuf,

    #[arg(long, default_value_t = 100_000)]
    paths: usize,

    /// Sampling steps to the horizon (terminal laws are exact at any count).
    #[arg(long, default_value_t = 1)]
    steps: usize,

    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,
}

#[derive(Args)]
struct SymmetryMcArgs {
    /// Market file (spots, carrying costs, horizon required).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// First asset of the pair (1-based).
    #[arg(long, default_value_t = 1)]
    i: usize,

    /// Second asset of the pair (1-based).
    #[arg(long, default_value_t = 2)]
    j: usize,

    /// Power correction applied to the swapped side (0 for none).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,

    #[arg(long, default_value_t = 100_000)]
    paths: usize,

    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,

    /// Two-sided bound on each payoff's z-score.
    #[arg(long, default_value_t = defaults::Z_THRESHOLD)]
    tol: f64,

    /// Payoff battery file (JSON array); default: one-homogeneous baskets
    /// concentrated on the pair.
    #[arg(long, value_name = "FILE")]
    payoffs: Option<PathBuf>,
}

#[derive(Args)]
struct HedgeArgs {
    /// Market file (spots, carrying costs, horizon required).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Barrier contract file (JSON).
    #[arg(long, value_name = "FILE")]
    contract: PathBuf,

    /// Power correction for the reflected leg of a plain swap contract.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,

    #[arg(long, default_value_t = 10_000)]
    paths: usize,

    /// Barrier monitoring dates to the horizon.
    #[arg(long, default_value_t = 250)]
    steps: usize,

    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,

    /// Inner paths per liquidation valuation (nested Monte-Carlo).
    #[arg(long, conflicts_with = "closed_form")]
    inner: Option<usize>,

    /// Value liquidations in closed form (continuous models only).
    #[arg(long)]
    closed_form: bool,

    /// Also write per-path outcomes as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Market file (spots, carrying costs, horizon required).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Barrier contract file (JSON).
    #[arg(long, value_name = "FILE")]
    contract: PathBuf,

    /// Monitoring frequencies, strictly increasing (e.g. 250,500,1000).
    #[arg(long, value_delimiter = ',', required = true)]
    steps: Vec<usize>,

    /// Power correction for the reflected leg of a plain swap contract.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,

    #[arg(long, default_value_t = 10_000)]
    paths: usize,

    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,

    /// Inner paths per liquidation valuation (nested Monte-Carlo).
    #[arg(long, conflicts_with = "closed_form")]
    inner: Option<usize>,

    /// Value liquidations in closed form (continuous models only).
    #[arg(long)]
    closed_form: bool,
}

// ---------------------------------------------------------------------------
// Outcome plumbing
// ---------------------------------------------------------------------------

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            // The computation ran; the model or configuration gave a
            // negative mathematical verdict.
            Error::NoRoot { .. }
            | Error::MultipleRoots { .. }
            | Error::Degenerate(_)
            | Error::NonFinite(_) => 1,
            // The inputs never made sense.
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    swapsym::exec::configure_threads(cli.threads);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let out = cli.out.as_deref();
    let threads = cli.threads;
    match cli.command {
        Command::Check(args) => run_check(args, out, threads),
        Command::Alpha(args) => run_alpha(args, out, threads),
        Command::Price(args) => run_price(args, out, threads),
        Command::SymmetryMc(args) => run_symmetry_mc(args, out, threads),
        Command::Hedge(args) => run_hedge(args, out, threads),
        Command::Convergence(args) => run_convergence(args, out, threads),
    }
}

// ---------------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------------

/// A model file is either a full market or a bare characteristic triplet;
/// markets are recognized by their `triplet` field.
enum Model {
    Market(MarketSpec),
    Triplet(LevyTriplet),
}

impl Model {
    fn triplet(&self) -> &LevyTriplet {
        match self {
            Model::Market(m) => m.triplet(),
            Model::Triplet(t) => t,
        }
    }

    fn into_market(self, path: &Path) -> Result<MarketSpec, Failure> {
        match self {
            Model::Market(m) => Ok(m),
            Model::Triplet(_) => Err(Failure::usage(format!(
                "{} holds a bare triplet; this command needs a full market \
                 (spots, carrying costs, horizon)",
                path.display()
            ))),
        }
    }

    /// Per-asset rates of the pair, when the file carries them.
    fn pair_rates(&self, i: usize, j: usize) -> (f64, f64) {
        match self {
            Model::Market(m) => (m.asset_rate(i), m.asset_rate(j)),
            Model::Triplet(_) => (0.0, 0.0),
        }
    }
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    let value: serde_json::Value = read_json(path)?;
    let parsed = if value.get("triplet").is_some() {
        Model::Market(from_value(value, path)?)
    } else {
        Model::Triplet(from_value(value, path)?)
    };
    Ok(parsed)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
    path: &Path,
) -> Result<T, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// 1-based command-line pair indices to internal 0-based ones.
fn pair_indices(i: usize, j: usize) -> Result<(usize, usize), Failure> {
    if i == 0 || j == 0 {
        return Err(Failure::usage("asset indices are 1-based"));
    }
    Ok((i - 1, j - 1))
}

/// Reject pairs outside the model before anything indexes with them.
fn check_pair_range(i: usize, j: usize, dim: usize) -> Result<(), Failure> {
    if i >= dim || j >= dim {
        return Err(Failure::usage(format!(
            "pair ({}, {}) out of range for a model of dimension {dim}",
            i + 1,
            j + 1
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Document emission
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: C,
    report: R,
    /// Deliberately last: everything before this field is reproducible.
    timestamp_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn emit<C: Serialize, R: Serialize>(
    command: &str,
    config: C,
    report: R,
    out: Option<&Path>,
    summary: &str,
) -> Result<(), Failure> {
    let doc = Document { command, config, report, timestamp_unix_ms: now_ms() };
    let mut json = serde_json::to_string_pretty(&doc)
        .map_err(|e| Failure::usage(format!("report serialization failed: {e}")))?;
    json.push('\n');
    match out {
        Some(path) => {
            fs::write(path, json)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            print!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn exit_for(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckConfig {
    config: String,
    kind: &'static str,
    i: usize,
    j: usize,
    alpha: Option<f64>,
    rates: Option<(f64, f64)>,
    weighted: bool,
    tol: f64,
    charfn_tol: f64,
    seed: u64,
    threads: Option<usize>,
}

#[derive(Serialize)]
struct CheckReport {
    structural: SymmetryReport,
    charfn_residual: f64,
    pass: bool,
}

fn run_check(args: CheckArgs, out: Option<&Path>, threads: Option<usize>) -> Result<u8, Failure> {
    let (i, j) = pair_indices(args.i, args.j)?;
    if args.kind != CheckKind::QuasiSwap
        && (args.alpha.is_some() || args.ri.is_some() || args.rj.is_some() || args.weighted)
    {
        return Err(Failure::usage(
            "--alpha, --ri, --rj and --weighted apply only to --kind quasi-swap",
        ));
    }

    let model = load_model(&args.config)?;
    let t = model.triplet();
    let dim = t.dim();
    check_pair_range(i, j, dim)?;
    let grid = GridSpec { seed: args.seed, ..GridSpec::default() };

    let mut rates = None;
    let (structural, charfn_residual) = match args.kind {
        CheckKind::Exchangeable => (
            check_exchangeable(t, i, j, args.tol)?,
            check_charfn_exchangeable(t, i, j, &grid)?,
        ),
        CheckKind::Swap => {
            let mut shift = vec![0.0; dim];
            shift[i] = 0.5;
            shift[j] = 0.5;
            (
                check_swap_invariant(t, i, j, None, args.tol)?,
                check_charfn_symmetry(t, i, j, &shift, dim, 0.0, &grid)?,
            )
        }
        CheckKind::WeightedSwap => {
            let structural = check_weighted_swap_invariant(t, i, j, args.tol)?;
            let mut shift = vec![0.0; dim];
            shift[i] = 0.5;
            shift[j] = 0.5;
            shift[dim - 1] += 1.0;
            (structural, check_charfn_symmetry(t, i, j, &shift, dim - 1, 0.0, &grid)?)
        }
        CheckKind::QuasiSwap => {
            let alpha = args
                .alpha
                .ok_or_else(|| Failure::usage("--kind quasi-swap needs --alpha"))?;
            let file_rates = model.pair_rates(i, j);
            let r = (args.ri.unwrap_or(file_rates.0), args.rj.unwrap_or(file_rates.1));
            rates = Some(r);
            let structural =
                check_quasi_swap_invariant(t, i, j, alpha, r, args.weighted, args.tol)?;
            let n_assets = if args.weighted { dim - 1 } else { dim };
            let mut shift = quasi_weight_vector(dim, i, j, alpha, args.weighted);
            shift[i] += 0.5;
            shift[j] += 0.5;
            (
                structural,
                check_charfn_symmetry(t, i, j, shift.as_slice(), n_assets, r.0 - r.1, &grid)?,
            )
        }
    };

    let pass = structural.pass && charfn_residual <= args.charfn_tol;
    let summary = format!(
        "check {} ({},{}): {} (structural max residual {:.3e}, charfn residual {:.3e})",
        args.kind.name(),
        args.i,
        args.j,
        verdict(pass),
        structural.max_residual(),
        charfn_residual,
    );
    let config = CheckConfig {
        config: args.config.display().to_string(),
        kind: args.kind.name(),
        i: args.i,
        j: args.j,
        alpha: args.alpha,
        rates,
        weighted: args.weighted,
        tol: args.tol,
        charfn_tol: args.charfn_tol,
        seed: args.seed,
        threads,
    };
    let report = CheckReport { structural, charfn_residual, pass };
    emit("check", config, report, out, &summary)?;
    Ok(exit_for(pass))
}

// ---------------------------------------------------------------------------
// alpha
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AlphaConfig {
    config: String,
    i: usize,
    j: usize,
    rates: (f64, f64),
    weighted: bool,
    tol: f64,
    threads: Option<usize>,
}

#[derive(Serialize)]
struct AlphaReport {
    alpha: f64,
    /// Structural quasi-swap check at the solved power; the solver only
    /// enforces the drift equation, this confirms the rest.
    verification: SymmetryReport,
}

fn run_alpha(args: AlphaArgs, out: Option<&Path>, threads: Option<usize>) -> Result<u8, Failure> {
    let (i, j) = pair_indices(args.i, args.j)?;
    let model = load_model(&args.config)?;
    let t = model.triplet();
    check_pair_range(i, j, t.dim())?;
    let file_rates = model.pair_rates(i, j);
    let rates = (args.ri.unwrap_or(file_rates.0), args.rj.unwrap_or(file_rates.1));
    let mut opts = AlphaSolveOptions::default();
    if let Some(tol) = args.tol {
        opts.tol = tol;
    }
    let alpha = solve_alpha(t, i, j, rates, args.weighted, &opts)?;
    let verification = check_quasi_swap_invariant(
        t,
        i,
        j,
        alpha,
        rates,
        args.weighted,
        defaults::STRUCTURAL_TOL,
    )?;
    let pass = verification.pass;
    let summary = if pass {
        format!("alpha = {alpha}")
    } else {
        format!("alpha = {alpha} (verification FAIL: the model is not quasi-swap-invariant)")
    };
    let config = AlphaConfig {
        config: args.config.display().to_string(),
        i: args.i,
        j: args.j,
        rates,
        weighted: args.weighted,
        tol: opts.tol,
        threads,
    };
    emit("alpha", config, AlphaReport { alpha, verification }, out, &summary)?;
    Ok(exit_for(pass))
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PriceConfig {
    config: String,
    payoff: String,
    paths: usize,
    steps: usize,
    seed: u64,
    threads: Option<usize>,
}

#[derive(Serialize)]
struct PriceReport {
    estimate: swapsym::stats::McEstimate,
    closed_form: Option<f64>,
    /// Gap between the estimate and the closed form in standard errors.
    z_gap: Option<f64>,
}

fn run_price(args: PriceArgs, out: Option<&Path>, threads: Option<usize>) -> Result<u8, Failure> {
    let market = load_model(&args.config)?.into_market(&args.config)?;
    let payoff: PayoffSpec = read_json(&args.payoff)?;
    let paths = simulate_paths(&market, args.paths, args.steps, args.seed)?;
    let estimate = estimate_payoff(&paths, &payoff, args.steps)?;
    let closed_form =
        closed_form_value(&market, market.spots().as_slice(), market.horizon(), &payoff).ok();
    let z_gap = closed_form.and_then(|cf| {
        (estimate.stderr > 0.0).then(|| (estimate.mean - cf) / estimate.stderr)
    });
    let pass = z_gap.map_or(true, |z| z.abs() < defaults::Z_THRESHOLD);
    let summary = match closed_form {
        Some(cf) => format!(
            "price = {:.6} +/- {:.6} (closed form {:.6}): {}",
            estimate.mean,
            estimate.stderr,
            cf,
            verdict(pass)
        ),
        None => format!("price = {:.6} +/- {:.6}", estimate.mean, estimate.stderr),
    };
    let config = PriceConfig {
        config: args.config.display().to_string(),
        payoff: args.payoff.display().to_string(),
        paths: args.paths,
        steps: args.steps,
        seed: args.seed,
        threads,
    };
    emit("price", config, PriceReport { estimate, closed_form, z_gap }, out, &summary)?;
    Ok(exit_for(pass))
}

// ---------------------------------------------------------------------------
// symmetry-mc
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SymmetryMcConfig {
    config: String,
    i: usize,
    j: usize,
    alpha: f64,
    paths: usize,
    seed: u64,
    z_bound: f64,
    payoffs: Option<String>,
    threads: Option<usize>,
}

/// One-homogeneous baskets concentrated on the tested pair; valid observables
/// for every swap-invariance variant.
fn default_battery(n_assets: usize, i: usize, j: usize) -> Vec<PayoffSpec> {
    let pair = |wi: f64, wj: f64| {
        let mut weights = vec![0.0; n_assets];
        weights[i] = wi;
        weights[j] = wj;
        PayoffSpec::ZeroStrikeBasket { weights }
    };
    vec![
        pair(1.0, -1.0),
        pair(1.0, -0.6),
        pair(0.6, -1.0),
        pair(0.7, 0.3),
        PayoffSpec::ZeroStrikeBasket { weights: vec![1.0 / n_assets as f64; n_assets] },
    ]
}

fn run_symmetry_mc(
    args: SymmetryMcArgs,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<u8, Failure> {
    let (i, j) = pair_indices(args.i, args.j)?;
    let market = load_model(&args.config)?.into_market(&args.config)?;
    check_pair_range(i, j, market.n_assets())?;
    let payoffs = match &args.payoffs {
        Some(path) => read_json::<Vec<PayoffSpec>>(path)?,
        None => default_battery(market.n_assets(), i, j),
    };
    let spec = SwapTestSpec { i, j, alpha: args.alpha };
    let report = mc_symmetry_test(&market, &spec, &payoffs, args.paths, args.seed)?;
    let pass = report.all_within(args.tol);
    let summary = format!(
        "symmetry-mc ({},{}): max |z| = {:.3} over {} payoffs (bound {}): {}",
        args.i,
        args.j,
        report.max_abs_z(),
        report.entries.len(),
        args.tol,
        verdict(pass),
    );
    let config = SymmetryMcConfig {
        config: args.config.display().to_string(),
        i: args.i,
        j: args.j,
        alpha: args.alpha,
        paths: args.paths,
        seed: args.seed,
        z_bound: args.tol,
        payoffs: args.payoffs.as_ref().map(|p| p.display().to_string()),
        threads,
    };
    emit("symmetry-mc", config, report, out, &summary)?;
    Ok(exit_for(pass))
}

// ---------------------------------------------------------------------------
// hedge / convergence
// ---------------------------------------------------------------------------

fn valuation_mode(inner: Option<usize>, closed_form: bool) -> ValuationMode {
    if closed_form {
        ValuationMode::ClosedFormMargrabe
    } else {
        ValuationMode::NestedMc { inner: inner.unwrap_or(defaults::INNER_PATHS) }
    }
}

#[derive(Serialize)]
struct HedgeConfig {
    config: String,
    contract: BarrierContract,
    alpha: f64,
    paths: usize,
    steps: usize,
    seed: u64,
    valuation: ValuationMode,
    csv: Option<String>,
    threads: Option<usize>,
}

fn run_hedge(args: HedgeArgs, out: Option<&Path>, threads: Option<usize>) -> Result<u8, Failure> {
    let market = load_model(&args.config)?.into_market(&args.config)?;
    let contract: BarrierContract = read_json(&args.contract)?;
    let valuation = valuation_mode(args.inner, args.closed_form);
    let config = BacktestConfig {
        n_paths: args.paths,
        n_steps: args.steps,
        seed: args.seed,
        valuation: valuation.clone(),
    };
    let report = run_backtest(&market, &contract, args.alpha, &config)?;
    if let Some(csv) = &args.csv {
        let mut file = fs::File::create(csv)
            .map_err(|e| Failure::usage(format!("cannot create {}: {e}", csv.display())))?;
        write_pnl_csv(&report, &mut file)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", csv.display())))?;
    }
    let pass = report.symmetry_warning.is_none();
    let t0 = report.t0_value.mean;
    let ratio = if t0.abs() > 0.0 {
        format!(" ({:.3}% of the initial value)", 100.0 * report.mean_abs_pnl / t0.abs())
    } else {
        String::new()
    };
    let warning = match &report.symmetry_warning {
        Some(w) => format!("; WARNING: {w}"),
        None => String::new(),
    };
    let summary = format!(
        "hedge: initial value {:.6}, mean pnl {:.6} +/- {:.6}, mean |pnl| {:.6}{ratio}, \
         knocked {:.1}%{warning}",
        t0,
        report.mean_pnl,
        report.pnl_stderr,
        report.mean_abs_pnl,
        100.0 * report.knockout_fraction,
    );
    let config_echo = HedgeConfig {
        config: args.config.display().to_string(),
        contract,
        alpha: args.alpha,
        paths: args.paths,
        steps: args.steps,
        seed: args.seed,
        valuation,
        csv: args.csv.as_ref().map(|p| p.display().to_string()),
        threads,
    };
    emit("hedge", config_echo, report, out, &summary)?;
    Ok(exit_for(pass))
}

#[derive(Serialize)]
struct ConvergenceConfig {
    config: String,
    contract: BarrierContract,
    steps: Vec<usize>,
    alpha: f64,
    paths: usize,
    seed: u64,
    valuation: ValuationMode,
    threads: Option<usize>,
}

fn run_convergence(
    args: ConvergenceArgs,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<u8, Failure> {
    let market = load_model(&args.config)?.into_market(&args.config)?;
    let contract: BarrierContract = read_json(&args.contract)?;
    let valuation = valuation_mode(args.inner, args.closed_form);
    let rows = convergence_study(
        &market,
        &contract,
        args.alpha,
        &args.steps,
        args.paths,
        args.seed,
        valuation.clone(),
    )?;
    let last = rows.last().expect("validated nonempty");
    let summary = format!(
        "convergence: mean |pnl| {:.6} +/- {:.6} at {} steps ({} frequencies)",
        last.mean_abs_pnl,
        last.abs_pnl_stderr,
        last.n_steps,
        rows.len(),
    );
    let config = ConvergenceConfig {
        config: args.config.display().to_string(),
        contract,
        steps: args.steps,
        alpha: args.alpha,
        paths: args.paths,
        seed: args.seed,
        valuation,
        threads,
    };
    emit("convergence", config, rows, out, &summary)?;
    Ok(0)
}
