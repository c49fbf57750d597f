use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Finite-dimensional renormings with prescribed isometry groups.
///
/// Inputs are JSON files or `fixture:NAME` for a built-in fixture
/// (`isodisplay fixtures` lists them).
#[derive(Debug, Parser)]
#[command(name = "isodisplay", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numeric tolerance for float comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Verdicts that make the exit status 1; `none` disables.
    #[arg(long, global = true, value_delimiter = ',', default_value = "FAIL")]
    pub fail_on_verdict: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph norms: evaluation, extreme points, isometry group.
    #[command(subcommand)]
    GraphNorm(GraphNormCommand),
    /// Build the display graph of a permutation group and verify it.
    Gadget(GadgetArgs),
    /// Spike renormings displaying a finite matrix group.
    #[command(subcommand)]
    Display(DisplayCommand),
    /// Arens-Eells norms over finite metric spaces.
    #[command(subcommand)]
    FreeSpace(FreeSpaceCommand),
    /// Transitivity, moduli and separation diagnostics.
    #[command(subcommand)]
    Diag(DiagCommand),
    /// Run the acceptance catalog.
    Selftest(SelftestArgs),
    /// List the built-in fixtures, or print one.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Subcommand)]
pub enum GraphNormCommand {
    /// Norm and norming functional of a vector.
    Eval {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        vector: String,
    },
    /// Vertices of the unit ball.
    Extremes {
        #[arg(long)]
        graph: String,
        /// Largest dimension attempted.
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
    /// Linear isometry group.
    Isom {
        #[arg(long)]
        graph: String,
        /// Largest dimension for the extreme-point certificate.
        #[arg(long, default_value_t = 8)]
        extreme_cap: usize,
    },
}

#[derive(Debug, Args)]
pub struct GadgetArgs {
    /// Permutation group JSON.
    #[arg(long)]
    pub group: String,
    /// Tuple lengths, a prefix of 1,2,4,...
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub depths: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum DisplayCommand {
    /// Renorm Euclidean space so that the group becomes its isometry group.
    Build(DisplayBuildArgs),
    /// Recover the isometry group of a saved result.
    Verify {
        #[arg(long)]
        result: String,
    },
}

#[derive(Debug, Args)]
pub struct DisplayBuildArgs {
    /// Matrix group JSON.
    #[arg(long)]
    pub group: String,
    /// Expected dimension of the group.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Distinguished sequence JSON (list of vectors).
    #[arg(long)]
    pub sequence: Option<String>,
    /// Samples for the λ search and property checks.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Skip the isometry recovery.
    #[arg(long)]
    pub no_verify: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    /// Use the metric as given.
    None,
    /// `d/(1+d)`.
    Bounded,
    /// `sqrt(d/(1+d))`.
    Concave,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Metric JSON.
    #[arg(long)]
    pub metric: String,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    pub transform: Transform,
}

#[derive(Debug, Subcommand)]
pub enum FreeSpaceCommand {
    /// Primal (transportation) norm of a molecule.
    Norm {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        molecule: String,
    },
    /// Dual (1-Lipschitz) norm of a molecule.
    Dual {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        molecule: String,
    },
    /// Linear isometry group of the free space.
    Isom {
        #[command(flatten)]
        metric: MetricArgs,
        /// Random molecules per candidate in the sampled norm test.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum DiagCommand {
    /// `sup_T x*(Tx)` for one normalised pair.
    ConvexTransitive {
        #[arg(long)]
        space: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        xstar: String,
    },
    /// Necessary conditions for being a full isometry group.
    Necessary {
        #[arg(long)]
        space: String,
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Whether a point has a discrete orbit.
    Distinguished {
        #[arg(long)]
        space: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: String,
    },
    /// LUR modulus at a sphere point.
    Lur {
        #[arg(long)]
        space: String,
        #[arg(long)]
        x: String,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 16)]
        directions: usize,
    },
    /// Uniform convexity modulus over sampled sphere points.
    Uniform {
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 8)]
        directions: usize,
    },
    /// Separating pair built from a point with a discrete orbit.
    Separation {
        #[arg(long)]
        space: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 16)]
        directions: usize,
    },
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Criteria to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Print this fixture as JSON.
    pub name: Option<String>,
}
