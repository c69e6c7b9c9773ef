//! `affmin`: best uniform affine approximation on simplices, homography
//! convexity regions and image warps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use affmin::funcspec::Convexity;
use affmin::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "affmin", version, about)]
struct Cli {
    /// Seed for randomized instances.
    #[arg(long, global = true, default_value_t = 0x5eed_a11f)]
    seed: u64,
    /// Lattice subdivisions for residual scans and the oracle.
    #[arg(long, global = true, env = "AFFMIN_GRID", default_value_t = 64, value_parser = clap::value_parser!(u32).range(2..))]
    grid: u32,
    #[command(subcommand)]
    command: Command,
}

/// Where the domain simplex comes from.
#[derive(clap::Args, Debug)]
#[group(multiple = false)]
struct DomainArgs {
    /// JSON file `{"vertices": [[..], ..]}`.
    #[arg(long)]
    simplex: Option<PathBuf>,
    /// Inline vertices, `x,y;x,y;x,y`.
    #[arg(long, allow_hyphen_values = true)]
    vertices: Option<String>,
    /// One-dimensional domain `p,q`.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best affine approximant of a field on a simplex.
    Approx {
        #[command(flatten)]
        domain: DomainArgs,
        /// Expression in x1..xk, or `builtin:NAME`.
        #[arg(long, allow_hyphen_values = true)]
        field: String,
        #[arg(long, default_value = "unknown")]
        convexity: Convexity,
        /// Write lattice residuals as CSV.
        #[arg(long)]
        residuals: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best line on an interval with an alternation certificate.
    Line {
        #[arg(long, allow_hyphen_values = true)]
        interval: String,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "hyperbola")]
        field: Option<String>,
        /// `(a x + b)/(c x + e)` given as `a,b,c,e`.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "field")]
        hyperbola: Option<String>,
        #[arg(long, default_value = "unknown")]
        convexity: Convexity,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convexity regions of both homography components.
    Regions {
        #[arg(long)]
        homography: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whether a triangle supports the best affine map of a homography.
    Admissible {
        #[arg(long)]
        homography: PathBuf,
        #[arg(long)]
        triangle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Warp a PPM image by a homography or one of its affine approximations.
    Warp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        homography: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long)]
        triangle: Option<PathBuf>,
        /// Taylor expansion point `x,y`; defaults to the triangle centroid.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(long, value_enum, default_value_t = SamplingArg::Bilinear)]
        sampling: SamplingArg,
        /// Output size `WxH`; defaults to the input size.
        #[arg(long)]
        size: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Append displacement statistics to this CSV.
        #[arg(long, requires = "triangle")]
        stats: Option<PathBuf>,
    },
    /// Compare the construction against the discrete minimax oracle.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        field: Option<String>,
        #[command(flatten)]
        domain: DomainArgs,
        /// Random convex quadratic on a random simplex of this dimension.
        #[arg(long, conflicts_with = "field")]
        random_quadratic: Option<usize>,
        #[arg(long, default_value = "unknown")]
        convexity: Convexity,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Method {
    Exact,
    Affine,
    Taylor,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplingArg {
    Nearest,
    Bilinear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", one_line(&err));
            let kind = err.downcast_ref::<affmin::Error>().map(affmin::Error::kind);
            match kind {
                Some(ErrorKind::Numerical) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn one_line(err: &anyhow::Error) -> String {
    err.chain()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(": ")
        .replace('\n', " ")
}
