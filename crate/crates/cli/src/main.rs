use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use evlm_cli::commands::{
    cmd_analyze, cmd_bootstrap, cmd_design, cmd_ncf, cmd_simulate, parse_methods, parse_test_spec,
    AnalyzeArgs, BootstrapArgs, DesignArgs, NcfArgs, OutputFormat, SimulateArgs,
};

/// Evidential analysis of normal linear fixed-effects models.
#[derive(Parser)]
#[command(name = "evlm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Args)]
struct DataOpts {
    /// CSV data file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Name of the numeric response column
    #[arg(long)]
    response: String,
    /// Comma-separated factor column names
    #[arg(long, value_delimiter = ',')]
    factors: Vec<String>,
    /// Comma-separated numeric covariate column names
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Nested comparison: interaction | drop:<cols> | contrast:<file>
    #[arg(long, default_value = "interaction")]
    test: String,
}

#[derive(Args)]
struct CommonOpts {
    /// Output format for the report
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Directory for machine-readable CSV outputs
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the nested pair and report the evidence block
    Analyze {
        #[command(flatten)]
        data: DataOpts,
        /// Per-observation effect size delta (repeatable)
        #[arg(long)]
        delta: Vec<f64>,
        /// Budget for misleading evidence toward model 2
        #[arg(long, default_value_t = 0.05)]
        gamma1: f64,
        /// Budget for misleading evidence toward model 1
        #[arg(long, default_value_t = 0.05)]
        gamma2: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Pre-data design: thresholds for n, or n for a fixed threshold
    Design {
        /// Number of restrictions q
        #[arg(long)]
        q: usize,
        /// Full-model parameter count r
        #[arg(long)]
        r: usize,
        /// Planned sample size (threshold mode)
        #[arg(long)]
        n: Option<usize>,
        /// Fixed lower threshold (sample-size mode)
        #[arg(long, allow_hyphen_values = true)]
        k1: Option<f64>,
        /// Fixed upper threshold (sample-size mode)
        #[arg(long, allow_hyphen_values = true)]
        k2: Option<f64>,
        /// Per-observation effect size delta (repeatable)
        #[arg(long)]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        gamma1: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma2: f64,
        /// Cap for the sample-size search
        #[arg(long, default_value_t = 1_000_000)]
        n_max: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Bootstrap the evidence distribution
    Bootstrap {
        #[command(flatten)]
        data: DataOpts,
        /// Methods: parametric, residual, stratified, all (repeatable)
        #[arg(long)]
        method: Vec<String>,
        /// Number of bootstrap replicates
        #[arg(long, default_value_t = 1024)]
        nboot: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Two-sided coverage of the delta-K interval
        #[arg(long, default_value_t = 0.90)]
        ci: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Noncentral-F tables and plot data for a design family
    Ncf {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        r: usize,
        /// Per-observation squared effect size (lambda = n * delta2)
        #[arg(long, default_value_t = 0.25)]
        delta2: f64,
        /// Sample sizes to tabulate (repeatable)
        #[arg(long = "n")]
        n_list: Vec<usize>,
        /// Upper end of the density grid
        #[arg(long, default_value_t = 8.0)]
        grid_max: f64,
        /// Number of grid points
        #[arg(long, default_value_t = 160)]
        grid_points: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Simulate evidence uncertainty against per-cell sample size
    Simulate {
        #[command(flatten)]
        data: DataOpts,
        /// Per-cell sample sizes to simulate
        #[arg(long, value_delimiter = ',')]
        cell_sizes: Vec<usize>,
        /// Simulated datasets per cell size
        #[arg(long, default_value_t = 1024)]
        nsim: usize,
        /// Bootstrap replicates per simulated dataset
        #[arg(long, default_value_t = 1024)]
        nboot: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Cap on total model refits
        #[arg(long, default_value_t = 5_000_000)]
        max_refits: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let report = match cli.command {
        Command::Analyze { data, delta, gamma1, gamma2, common } => {
            let delta_defaulted = delta.is_empty();
            let deltas = if delta_defaulted { vec![0.5] } else { delta };
            cmd_analyze(&AnalyzeArgs {
                data: data.data,
                response: data.response,
                factors: data.factors,
                covariates: data.covariates,
                test: parse_test_spec(&data.test)?,
                deltas,
                delta_defaulted,
                gamma1,
                gamma2,
                format: common.format.into(),
                out: common.out,
            })?
        }
        Command::Design { q, r, n, k1, k2, delta, gamma1, gamma2, n_max, common } => {
            let deltas = if delta.is_empty() { vec![0.5] } else { delta };
            cmd_design(&DesignArgs {
                q,
                r,
                n,
                k1,
                k2,
                deltas,
                gamma1,
                gamma2,
                n_max,
                format: common.format.into(),
                out: common.out,
            })?
        }
        Command::Bootstrap { data, method, nboot, seed, ci, common } => {
            cmd_bootstrap(&BootstrapArgs {
                data: data.data,
                response: data.response,
                factors: data.factors,
                covariates: data.covariates,
                test: parse_test_spec(&data.test)?,
                methods: parse_methods(&method)?,
                n_boot: nboot,
                seed,
                ci_level: ci,
                format: common.format.into(),
                out: common.out,
            })?
        }
        Command::Ncf { q, r, delta2, n_list, grid_max, grid_points, common } => {
            cmd_ncf(&NcfArgs {
                q,
                r,
                delta2,
                n_list,
                grid_max,
                grid_points,
                format: common.format.into(),
                out: common.out,
            })?
        }
        Command::Simulate {
            data,
            cell_sizes,
            nsim,
            nboot,
            seed,
            max_refits,
            common,
        } => cmd_simulate(&SimulateArgs {
            data: data.data,
            response: data.response,
            factors: data.factors,
            covariates: data.covariates,
            test: parse_test_spec(&data.test)?,
            cell_sizes,
            n_sim: nsim,
            n_boot: nboot,
            seed,
            max_refits,
            format: common.format.into(),
            out: common.out,
        })?,
    };
    print!("{report}");
    Ok(())
}
