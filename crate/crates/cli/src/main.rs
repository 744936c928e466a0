use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use zladder::harness::{run, Command, OutputFormat, RunConfig};
use zladder::Error;

/// Numerical experiments on Z(t) sums, ladder iterations and limit functionals.
#[derive(Parser, Debug)]
#[command(name = "zladder", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct Global {
    /// Worker threads; the output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write here (atomically) instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Persist ladder caches here (default: $ZLADDER_CACHE_DIR, if set).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Validate and print the resolved configuration as JSON without running.
    #[arg(long, global = true)]
    dry_run: bool,

    #[arg(long, global = true)]
    samples_per_oscillation: Option<u32>,
    /// gauss-legendre5 or simpson.
    #[arg(long, global = true)]
    quad_rule: Option<zladder::QuadratureRule>,
    /// Step-halving tolerance.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Number of Riemann–Siegel correction terms (0 to 3).
    #[arg(long, global = true)]
    rs_order: Option<u32>,
    /// Euler–Maclaurin terms of the zeta oracle.
    #[arg(long, global = true)]
    oracle_terms: Option<usize>,
    /// Lower end of the Riemann–Siegel domain.
    #[arg(long, global = true)]
    min_t: Option<f64>,
    /// mean-square or increment.
    #[arg(long, global = true)]
    ladder_kind: Option<zladder::LadderKind>,
    /// The constant c of the ladder increment (1 − c)T.
    #[arg(long, global = true)]
    euler_c: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Z, θ and Z′ at the given points.
    Eval(EvalArgs),
    /// The t̄ points in [T, T + H].
    Tbar(TbarArgs),
    /// Exponent fit for the dyadic trigonometric sums.
    TrigFit(TrigFitArgs),
    /// Σ Z(t̄)Z′(t̄) over [T, T + H] against its main term.
    SumCheck(SumCheckArgs),
    /// Roots of Z′ near odd t̄ points.
    FindRoot(FindRootArgs),
    /// Reverse ladder chains and their partition statistics.
    LadderCheck(LadderCheckArgs),
    /// The limit functional at finite T.
    Functional(FunctionalArgs),
    /// The functional at the rationals (x^n + y^n)/z^n.
    FermatScan(FermatArgs),
    /// The equilibrium identity.
    Equilibrium(EquilibriumArgs),
    /// Run a JSON configuration file; global flags override its fields.
    Run { config: PathBuf },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Comma-separated abscissae.
    #[arg(long)]
    t: String,
    /// Also evaluate the zeta oracle and the finite-difference derivative.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct TbarArgs {
    #[arg(long = "T")]
    big_t: String,
    /// Window length; defaults to T^delta ln T.
    #[arg(long = "H")]
    h: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// all, odd or even.
    #[arg(long)]
    parity: Option<String>,
}

#[derive(Args, Debug)]
struct TrigFitArgs {
    #[arg(long)]
    t_grid: String,
    #[arg(long)]
    sub_dyadic: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "target-A")]
    target_a: Option<String>,
}

#[derive(Args, Debug)]
struct SumCheckArgs {
    /// Comma-separated window starts.
    #[arg(long = "T")]
    big_t: String,
    /// A number or a preset: sixth, kolesnik[:eps], lindelof-eps:eps.
    #[arg(long)]
    delta: String,
    #[arg(long)]
    parity: Option<String>,
    /// Consecutive windows per T.
    #[arg(long)]
    windows: Option<String>,
}

#[derive(Args, Debug)]
struct FindRootArgs {
    #[arg(long = "T")]
    big_t: Option<String>,
    #[arg(long)]
    delta: String,
    /// Draw this many T values uniformly from [T-min, T-max].
    #[arg(long)]
    random: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "T-min")]
    t_min: Option<String>,
    #[arg(long = "T-max")]
    t_max: Option<String>,
}

#[derive(Args, Debug)]
struct LadderCheckArgs {
    #[arg(long = "T")]
    big_t: String,
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args, Debug)]
struct FunctionalArgs {
    #[arg(long)]
    x: String,
    #[arg(long)]
    tau: String,
    #[arg(long)]
    delta: String,
    /// main or split21.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    l1: Option<String>,
    #[arg(long)]
    l2: Option<String>,
}

#[derive(Args, Debug)]
struct FermatArgs {
    #[arg(long)]
    max_n: String,
    #[arg(long)]
    max_xyz: String,
    #[arg(long)]
    tau: String,
    #[arg(long)]
    delta: String,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    #[arg(long)]
    tau: String,
    #[arg(long)]
    delta: String,
}

fn with_params(command: Command, params: Vec<(&str, Option<String>)>) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    for (k, v) in params {
        if let Some(v) = v {
            cfg.params.insert(k.to_string(), v);
        }
    }
    cfg
}

fn base_config(sub: Sub) -> anyhow::Result<RunConfig> {
    Ok(match sub {
        Sub::Eval(a) => with_params(
            Command::Eval,
            vec![("t", Some(a.t)), ("oracle", a.oracle.then(|| "true".to_string()))],
        ),
        Sub::Tbar(a) => with_params(
            Command::Tbar,
            vec![("T", Some(a.big_t)), ("H", a.h), ("delta", a.delta), ("parity", a.parity)],
        ),
        Sub::TrigFit(a) => with_params(
            Command::TrigFit,
            vec![
                ("t-grid", Some(a.t_grid)),
                ("sub-dyadic", a.sub_dyadic),
                ("seed", a.seed),
                ("target-A", a.target_a),
            ],
        ),
        Sub::SumCheck(a) => with_params(
            Command::SumCheck,
            vec![("T", Some(a.big_t)), ("delta", Some(a.delta)), ("parity", a.parity), ("windows", a.windows)],
        ),
        Sub::FindRoot(a) => with_params(
            Command::FindRoot,
            vec![
                ("T", a.big_t),
                ("delta", Some(a.delta)),
                ("random", a.random),
                ("seed", a.seed),
                ("T-min", a.t_min),
                ("T-max", a.t_max),
            ],
        ),
        Sub::LadderCheck(a) => with_params(Command::LadderCheck, vec![("T", Some(a.big_t)), ("k", a.k)]),
        Sub::Functional(a) => with_params(
            Command::Functional,
            vec![
                ("x", Some(a.x)),
                ("tau", Some(a.tau)),
                ("delta", Some(a.delta)),
                ("variant", a.variant),
                ("l1", a.l1),
                ("l2", a.l2),
            ],
        ),
        Sub::FermatScan(a) => with_params(
            Command::FermatScan,
            vec![
                ("max-n", Some(a.max_n)),
                ("max-xyz", Some(a.max_xyz)),
                ("tau", Some(a.tau)),
                ("delta", Some(a.delta)),
            ],
        ),
        Sub::Equilibrium(a) => {
            with_params(Command::Equilibrium, vec![("tau", Some(a.tau)), ("delta", Some(a.delta))])
        }
        Sub::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{} is not a valid run configuration", config.display()))?
        }
    })
}

fn apply(global: &Global, cfg: &mut RunConfig) {
    if let Some(v) = global.threads {
        cfg.threads = v;
    }
    if let Some(v) = &global.output {
        cfg.output_path = Some(v.clone());
    }
    if let Some(v) = &global.cache_dir {
        cfg.cache_dir = Some(v.clone());
    }
    if let Some(v) = global.format {
        cfg.format = v;
    }
    if let Some(v) = global.samples_per_oscillation {
        cfg.quadrature.samples_per_oscillation = v;
    }
    if let Some(v) = global.quad_rule {
        cfg.quadrature.rule = v;
    }
    if let Some(v) = global.abs_tol {
        cfg.quadrature.abs_tol = v;
    }
    if let Some(v) = global.rs_order {
        cfg.eval.rs_correction_order = v;
    }
    if let Some(v) = global.oracle_terms {
        cfg.eval.oracle_terms = v;
    }
    if let Some(v) = global.min_t {
        cfg.eval.min_t = v;
    }
    if let Some(v) = global.ladder_kind {
        cfg.ladder.kind = v;
    }
    if let Some(v) = global.euler_c {
        cfg.ladder.euler_c = v;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match base_config(cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    apply(&cli.global, &mut cfg);
    if cli.global.dry_run {
        return match cfg.validate() {
            Ok(()) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }
    match run(&cfg) {
        Ok(out) => {
            match &out.path {
                Some(path) => eprintln!("wrote {} rows to {}", out.rows, path.display()),
                None => print!("{}", out.text),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::OutOfRange(_) | Error::Domain { .. } | Error::Constraint(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}
