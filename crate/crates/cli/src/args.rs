use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bevc",
    version,
    about = "Build, certify and scan PPT bound entangled states from two-mode amplitudes"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Base seed for every randomized search (decimal or 0x-prefixed hex).
    #[arg(long, env = "BEVC_SEED", global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random restarts of the product-vector search.
    #[arg(long, global = true, default_value_t = 64)]
    pub restarts: usize,
    /// Override the relative PPT tolerance.
    #[arg(long, global = true)]
    pub ppt_tol: Option<f64>,
    /// Override the relative rank threshold used for range projectors.
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    /// Override the range-residual margin that certifies entanglement.
    #[arg(long, global = true)]
    pub margin: Option<f64>,
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse::<u64>(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a state and write it in the operator exchange format.
    Build {
        #[command(subcommand)]
        source: Source,
    },
    /// Run the PPT test and the range criterion and emit a JSON report.
    Certify(CertifyArgs),
    /// Certify every point of a parameter grid.
    Scan(ScanArgs),
    /// Compare the optical protocol with the direct construction.
    OpticsVerify(OpticsArgs),
}

#[derive(Debug, Clone, Subcommand)]
pub enum Source {
    /// Truncated mixture with a_n = a^n, c_n = c^n, optionally projected onto rows.
    Rho {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: usize,
        /// 1-based levels kept on both sides, e.g. 1,2,3,4.
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
    },
    /// K x K family with coefficients alpha_2..alpha_K.
    Sigma {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        alphas: Vec<f64>,
    },
    /// The 3 x 3 case with alpha = (2, 2).
    Choi,
    /// Copies of a Sigma block on disjoint level windows.
    DirectSum {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },
    /// Two-mode squeezed vector sum_n lambda^n |n,n> on N levels.
    Squeezed {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long)]
        n: usize,
    },
    /// Operator read from an exchange file.
    File { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(subcommand)]
    pub source: Source,
    /// Skip witness construction for certified states.
    #[arg(long, global = true)]
    pub no_witness: bool,
    /// Skip the local normal-form filter before the range search.
    #[arg(long, global = true)]
    pub no_normal_form: bool,
    /// Include wall-clock timings (reports are then no longer byte-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(subcommand)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Grid {
    /// Grid over (a, c) for the truncated mixture.
    Ac {
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
    },
    /// K from `from` to `to` with alpha_m = base^m.
    K {
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 8)]
        to: usize,
        #[arg(long, default_value_t = 0.8)]
        base: f64,
    },
    /// Explicit coefficient lists separated by ';', e.g. "2,2;1,1;0.5".
    Alphas {
        #[arg(long)]
        grid: String,
    },
}

#[derive(Debug, Args)]
pub struct OpticsArgs {
    #[arg(long, default_value_t = std::f64::consts::LN_2)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.25f64.ln())]
    pub gamma: f64,
    /// Fock cutoff per mode.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Largest photon-number difference; defaults to N - 2.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Ancilla levels with uniform phases for the Kerr approximation.
    #[arg(long, default_value_t = 32)]
    pub levels: usize,
    /// Extra ancilla-level counts tabulated for aliasing.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub kerr_levels: Vec<usize>,
}
