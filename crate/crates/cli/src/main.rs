mod commands;
mod grid;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "extendicap", version, about = "Extendibility checks and one-shot capacity bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity bound over an epsilon grid, one CSV row per (eps, k).
    Bound(BoundArgs),
    /// Decide k-(PPT-)extendibility of a bipartite POVM.
    ExtendCheck(ExtendArgs),
    /// Symmetry-reduced bound for n uses of a channel.
    Nshot(NshotArgs),
    /// Evaluate the tester identities and the rate bound for a code.
    VerifyCoding(CodingArgs),
    /// Write a built-in channel or POVM as JSON.
    Export(ExportArgs),
}

#[derive(Args, Clone, Copy)]
pub struct SolverArgs {
    /// Relative duality gap target.
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    /// Relative primal/dual infeasibility target.
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
}

#[derive(Args, Clone, Copy)]
pub struct PptArgs {
    /// Impose partial-transpose positivity (default).
    #[arg(long, overrides_with = "no_ppt")]
    pub ppt: bool,
    #[arg(long)]
    pub no_ppt: bool,
}

impl PptArgs {
    pub fn value(&self) -> bool {
        !self.no_ppt
    }
}

#[derive(Args)]
pub struct BoundArgs {
    /// Built-in name (example29, identity:d, replacer:d, depolarizing:d:p) or channel JSON path.
    #[arg(long, default_value = "example29")]
    pub channel: String,
    /// Extension levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub ppt: PptArgs,
    /// Error tolerances, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "eps_grid")]
    pub eps: Vec<f64>,
    /// Grid `start:stop:step` with 0 <= start <= stop < 1.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Example channel with k = 1 and k = 2 (both PPT) over the grid.
    #[arg(long, conflicts_with_all = ["channel", "k", "ppt", "no_ppt"])]
    pub figure1: bool,
    /// Record wall-clock times instead of 0 in the wall_ms column.
    #[arg(long)]
    pub wall_times: bool,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct ExtendArgs {
    /// `bell_noise:d`, `bell:d` or a POVM JSON path.
    #[arg(long)]
    pub povm: String,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[command(flatten)]
    pub ppt: PptArgs,
    /// Write the report with the witness elements as JSON.
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct NshotArgs {
    #[arg(long)]
    pub channel: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[command(flatten)]
    pub ppt: PptArgs,
    #[arg(long)]
    pub eps: f64,
    /// Also solve the unreduced program on the tensor power and compare.
    #[arg(long)]
    pub cross_check: bool,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct CodingArgs {
    #[arg(long)]
    pub channel: String,
    /// Code JSON; without it a random code with a pretty-good decoder is drawn.
    #[arg(long)]
    pub code: Option<String>,
    /// Message count of the random code.
    #[arg(long, default_value_t = 2)]
    pub messages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long, required_unless_present = "povm", conflicts_with = "povm")]
    pub channel: Option<String>,
    #[arg(long)]
    pub povm: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bound(a) => commands::bound(a),
        Command::ExtendCheck(a) => commands::extend_check(a),
        Command::Nshot(a) => commands::nshot(a),
        Command::VerifyCoding(a) => commands::verify_coding(a),
        Command::Export(a) => commands::export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::json!({ "error": f.kind(), "message": f.message() }));
            ExitCode::from(f.code())
        }
    }
}
