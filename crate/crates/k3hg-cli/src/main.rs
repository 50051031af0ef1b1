//! `k3hg`: command line access to fields, Gauss sums, hypergeometric sums,
//! point counts and zeta factors of the five K3 pencils.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use report::Format;

#[derive(Parser, Debug)]
#[command(
    name = "k3hg",
    version,
    about = "Hypergeometric point counts and zeta factors for K3 pencils"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Directory for cached field tables; `K3HG_CACHE` takes precedence.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Lower bound on the CRT modulus of exact backends.
    #[arg(long, global = true)]
    pub backend_bound: Option<String>,
    /// Worker threads for batch commands (defaults to the available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Full-degree Euler factor checks.
    #[arg(long, global = true)]
    pub deep: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Modulus, generator and cache location of `F_{p^r}`.
    FieldInfo {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        r: u32,
    },
    /// Gauss sums `g(m)` as backend residues.
    GaussTable {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        r: u32,
        /// Comma separated exponents; all of `0..q-1` when omitted.
        #[arg(long)]
        m: Option<String>,
        /// Add floating complex approximations.
        #[arg(long)]
        float: bool,
    },
    /// A finite field hypergeometric sum.
    Hsum {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        t_num: i64,
        #[arg(long, default_value_t = 1)]
        t_den: i64,
        #[arg(long = "def", value_enum, default_value = "hybrid")]
        definition: commands::DefArg,
    },
    /// Point count of a pencil member or of a monomial system.
    Count {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        psi: Option<String>,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        r: u32,
        /// formula, koblitz or brute for pencils; koblitz, brute-torus or
        /// brute-projective for `--matrix`.
        #[arg(long, default_value = "formula")]
        mode: String,
        /// Plain-text system: coefficients on the first line, then one
        /// exponent row per monomial.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Local Euler factor of a hypergeometric sum over an abelian field.
    Euler {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        t: String,
        #[arg(long)]
        p: u64,
        /// `Q`, `cyclotomic:n` or `m:h1,h2,...`.
        #[arg(long, default_value = "Q")]
        field: String,
        /// trivial, minus1, sqrt-1, sqrt2 or psi:<rational>.
        #[arg(long, default_value = "trivial")]
        twist: String,
        #[arg(long, default_value_t = 0)]
        shift: u32,
    },
    /// Compare point counts with the hypergeometric decomposition at `p`.
    Verify {
        #[arg(long)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        psi: String,
        #[arg(long)]
        p: u64,
        /// Degree through which coefficients are compared (21 with `--deep`).
        #[arg(long)]
        depth: Option<usize>,
        /// Only assemble `Q` and check its cyclotomic structure.
        #[arg(long)]
        q_only: bool,
        /// Accepted for compatibility; JSON is the default format.
        #[arg(long)]
        json: bool,
    },
    /// `R` and `Q` at `p` as integer coefficient lists.
    Zeta {
        #[arg(long)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        psi: String,
        #[arg(long)]
        p: u64,
    },
    /// Batch cross-check of point counts (and decompositions with `--deep`).
    Grid {
        #[arg(long, default_value = "all")]
        families: String,
        /// Inclusive range `a..b` or comma list.
        #[arg(long, default_value = "3..50")]
        primes: String,
        #[arg(long, default_value = "2..5")]
        psis: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    let (report, code) = match commands::run(&cli) {
        Ok(outcome) => (outcome.report, if outcome.passed { 0 } else { 1 }),
        Err(err) => (
            report::envelope(commands::name(&cli.command), json!({ "error": err })),
            2,
        ),
    };
    let mut out = std::io::stdout().lock();
    if report::emit(&mut out, &report, format).is_err() {
        return ExitCode::from(3);
    }
    ExitCode::from(code)
}
