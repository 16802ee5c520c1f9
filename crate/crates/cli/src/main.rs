use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cvqkd_cli::{
    config::Config,
    error::{CliError, Result},
    output::{write_report, write_table, Metadata, OutputFormat},
    pipeline::run_pipeline,
    sweeps::{sweep_max_distance, sweep_optimal_va, sweep_rate_vs_distance},
};
use cvqkd_core::estimation::estimate_batch;
use cvqkd_core::keyrate::{secret_key_rate, secret_key_rate_misestimated, KeyRateRoute};
use cvqkd_core::simulator::{io as batch_io, simulate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    /// Rotation applied in the measurement model.
    Rotated,
    /// Biased parameter estimates in an ideal measurement model.
    Misestimated,
}

impl From<RouteArg> for KeyRateRoute {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Rotated => KeyRateRoute::Rotated,
            RouteArg::Misestimated => KeyRateRoute::Misestimated,
        }
    }
}

/// Secret-key-rate analysis of a CV-QKD link with measurement angular
/// error: sweeps, Monte Carlo simulation, estimation, and compensation.
#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat JSON config file; individual flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (stdout when omitted). CSV tables get a .meta.json sidecar.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Table format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Measurement angular error in degrees.
    #[arg(long, global = true)]
    theta_deg: Option<f64>,

    #[arg(long, global = true)]
    distance_km: Option<f64>,

    /// Channel excess noise (shot-noise units, input-referred).
    #[arg(long, global = true)]
    excess_noise: Option<f64>,

    /// EPR state variance V.
    #[arg(long, global = true)]
    epr_variance: Option<f64>,

    /// Modulation variance V_A = V - 1 (alternative way to set V).
    #[arg(long, global = true, conflicts_with = "epr_variance")]
    modulation_variance: Option<f64>,

    /// Reconciliation efficiency.
    #[arg(long, global = true)]
    beta: Option<f64>,

    #[arg(long, global = true)]
    loss_db_per_km: Option<f64>,

    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Covariance model used for key rates.
    #[arg(long, global = true, value_enum)]
    route: Option<RouteArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate at a single link configuration, both routes plus their delta.
    Keyrate,
    /// Key rate over the distance grid, one curve per angle in the grid.
    SweepDistance,
    /// Maximum transmission distance per (angle, excess noise) pair.
    MaxDistance,
    /// Optimal modulation variance per angle at the configured distance.
    OptimalVa,
    /// Monte Carlo batch generation; writes binary or CSV by extension.
    Simulate,
    /// Parameter and angle estimation on a stored batch.
    Estimate {
        /// Batch file (binary or CSV; CSV needs link parameters from the
        /// config/flags).
        file: PathBuf,
    },
    /// Simulate, estimate, compensate, and compare key rates.
    Pipeline,
}

fn effective_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(theta) = cli.theta_deg {
        cfg.theta_deg = theta;
    }
    if let Some(d) = cli.distance_km {
        cfg.distance_km = d;
    }
    if let Some(eps) = cli.excess_noise {
        cfg.excess_noise = eps;
    }
    if let Some(v) = cli.epr_variance {
        cfg.epr_variance = v;
    }
    if let Some(v_a) = cli.modulation_variance {
        cfg.epr_variance = v_a + 1.0;
    }
    if let Some(beta) = cli.beta {
        cfg.beta = beta;
    }
    if let Some(loss) = cli.loss_db_per_km {
        cfg.loss_db_per_km = loss;
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    if let Some(route) = cli.route {
        cfg.route = route.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct KeyrateDoc {
    selected_route: KeyRateRoute,
    selected: cvqkd_core::KeyRateReport,
    rotated: cvqkd_core::KeyRateReport,
    misestimated: cvqkd_core::KeyRateReport,
    /// `K(misestimated) - K(rotated)`: how far the two models disagree.
    route_delta: f64,
}

fn cmd_keyrate(cfg: &Config, out: Option<&Path>) -> Result<()> {
    let params = cfg.link_at(cfg.distance_km, cfg.theta_deg, cfg.excess_noise)?;
    let rotated = secret_key_rate(&params)?;
    let misestimated = secret_key_rate_misestimated(&params, params.theta())?;
    let selected = match cfg.route {
        KeyRateRoute::Rotated => rotated,
        KeyRateRoute::Misestimated => misestimated,
    };
    write_report(
        &KeyrateDoc {
            selected_route: cfg.route,
            selected,
            rotated,
            misestimated,
            route_delta: misestimated.key_rate - rotated.key_rate,
        },
        out,
    )
}

#[derive(Serialize)]
struct SimulateSummary {
    n: usize,
    seed: u64,
    theta_deg: f64,
    var_x_a: f64,
    var_p_a: f64,
    var_x_b1: f64,
    var_p_b3: f64,
    file: String,
}

fn cmd_simulate(cfg: &Config, out: Option<&Path>) -> Result<()> {
    let out = out.ok_or_else(|| {
        CliError::Config("simulate needs --out <file> (.cvqb binary or .csv)".into())
    })?;
    let params = cfg.link_at(cfg.distance_km, cfg.theta_deg, cfg.excess_noise)?;
    let batch = simulate(&params, cfg.samples, cfg.seed)?;
    let is_csv = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let file = std::fs::File::create(out)?;
        batch_io::write_csv(&batch, std::io::BufWriter::new(file))?;
    } else {
        let file = std::fs::File::create(out)?;
        let mut w = std::io::BufWriter::new(file);
        batch_io::write_binary(&batch, &mut w)?;
    }
    let meta = Metadata::new("simulate", cfg);
    std::fs::write(
        cvqkd_cli::output::sidecar_path(out),
        serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?,
    )?;
    let summary = SimulateSummary {
        n: batch.n,
        seed: batch.seed,
        theta_deg: batch.true_theta.to_degrees(),
        var_x_a: cvqkd_core::estimation::second_moment(&batch.x_a),
        var_p_a: cvqkd_core::estimation::second_moment(&batch.p_a),
        var_x_b1: cvqkd_core::estimation::second_moment(&batch.x_b1),
        var_p_b3: cvqkd_core::estimation::second_moment(&batch.p_b3),
        file: out.display().to_string(),
    };
    write_report(&summary, None)
}

fn cmd_estimate(cfg: &Config, file: &Path, out: Option<&Path>) -> Result<()> {
    let bytes = std::fs::read(file)?;
    let batch = if bytes.starts_with(b"CVQB") {
        batch_io::read_binary(&mut bytes.as_slice())?
    } else {
        let params = cfg.link_at(cfg.distance_km, cfg.theta_deg, cfg.excess_noise)?;
        batch_io::read_csv(bytes.as_slice(), params, cfg.seed, cfg.theta_deg.to_radians())?
    };
    let report = estimate_batch(&batch)?;
    write_report(&report, out)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = effective_config(cli)?;
    let format = cli.format.map(OutputFormat::from).unwrap_or(OutputFormat::Csv);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Keyrate => cmd_keyrate(&cfg, out),
        Command::SweepDistance => {
            let rows = sweep_rate_vs_distance(&cfg)?;
            write_table(&rows, format, out, &Metadata::new("sweep-distance", &cfg))
        }
        Command::MaxDistance => {
            let rows = sweep_max_distance(&cfg)?;
            write_table(&rows, format, out, &Metadata::new("max-distance", &cfg))
        }
        Command::OptimalVa => {
            let rows = sweep_optimal_va(&cfg)?;
            write_table(&rows, format, out, &Metadata::new("optimal-va", &cfg))
        }
        Command::Simulate => cmd_simulate(&cfg, out),
        Command::Estimate { file } => cmd_estimate(&cfg, file, out),
        Command::Pipeline => {
            let report = run_pipeline(&cfg)?;
            write_report(&report, out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
