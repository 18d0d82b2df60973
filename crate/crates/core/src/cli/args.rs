use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::opsys_core::SpaceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "opsys", version, about = "Matrix-ordered cones for SIC and MUB existence experiments")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// File of `key=value` lines supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpaceArgs {
    #[arg(long, default_value = "sic")]
    pub kind: SpaceKind,
    #[arg(short = 'd', long = "d", default_value_t = 2)]
    pub d: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    /// First threshold `t_1`; defaults to the SIC bound `t_star(d)`.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub slope: f64,
    #[arg(long, default_value_t = 5)]
    pub nmax: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ElementArgs {
    /// Level-1 coordinates in the space basis, comma separated; lifted to `I_n ⊗ x`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "element")]
    pub coeffs: Option<Vec<f64>>,
    /// JSON file holding a matrix level element.
    #[arg(long)]
    pub element: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub level: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long, default_value_t = 200)]
    pub directions: usize,
    #[arg(long, default_value_t = 120)]
    pub ascent_steps: usize,
    #[arg(long, default_value_t = 3)]
    pub ascent_starts: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Gram matrix of the space basis.
    #[command(args_override_self = true)]
    Gram {
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// The three t-threshold bounds and their maximum.
    #[command(args_override_self = true)]
    Thresholds {
        #[arg(short = 'd', long = "d", default_value_t = 2)]
        d: usize,
    },
    /// Generators of the initial cone.
    #[command(args_override_self = true)]
    BuildCone {
        #[command(flatten)]
        cone: ConeArgs,
    },
    /// Membership in the initial cone (level 1) or its maximal ordering.
    #[command(args_override_self = true)]
    Member {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        element: ElementArgs,
    },
    /// Decide `p_i (p_j − τe) p_i = 0` abstractly.
    #[command(args_override_self = true)]
    Relation {
        #[command(flatten)]
        cone: ConeArgs,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        x: usize,
        /// Defaults to the space constant (λ or μ).
        #[arg(long)]
        tau: Option<f64>,
        /// Defaults to `1/2, 1/N_max`.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<f64>>,
    },
    /// Membership in the projection cone `C_n(p)` through the doubled level.
    #[command(args_override_self = true)]
    Cnp {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        element: ElementArgs,
        /// Label of the projection `p`.
        #[arg(long)]
        p: usize,
    },
    /// Search for a compression refuting membership in the d-minimal cone.
    #[command(args_override_self = true)]
    DminRefute {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        element: ElementArgs,
        /// Use the concrete model of this instance instead of the initial cone.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Search the initial cone for a lineality direction.
    #[command(args_override_self = true)]
    Probe {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Add `±y` for these level-1 coordinates to the generators.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        plant: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the alternating projection and d-minimal construction.
    #[command(args_override_self = true)]
    Iterate {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, default_value_t = 6)]
        stages: usize,
        #[arg(long, default_value_t = 2)]
        relation_samples: usize,
        #[arg(long, default_value_t = 2)]
        compressions: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Numerical SIC search by frame-potential descent.
    #[command(args_override_self = true)]
    SicSearch {
        #[arg(short = 'd', long = "d", default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 2_000)]
        iters: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Complete set of mutually unbiased bases in prime dimension.
    #[command(args_override_self = true)]
    MubGen {
        #[arg(short = 'd', long = "d", default_value_t = 2)]
        d: usize,
    },
    /// Check an instance against its defining relations.
    #[command(args_override_self = true)]
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Map every initial-cone generator into `M_d` and check positivity.
    #[command(args_override_self = true)]
    PiCheck {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        slope: f64,
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Replay an iteration ledger through the concrete model.
    #[command(args_override_self = true)]
    Soundness {
        /// Report written by `iterate`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
}

impl Command {
    pub const NAMES: [&'static str; 14] = [
        "gram",
        "thresholds",
        "build-cone",
        "member",
        "relation",
        "cnp",
        "dmin-refute",
        "probe",
        "iterate",
        "sic-search",
        "mub-gen",
        "verify",
        "pi-check",
        "soundness",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Gram { .. } => "gram",
            Command::Thresholds { .. } => "thresholds",
            Command::BuildCone { .. } => "build-cone",
            Command::Member { .. } => "member",
            Command::Relation { .. } => "relation",
            Command::Cnp { .. } => "cnp",
            Command::DminRefute { .. } => "dmin-refute",
            Command::Probe { .. } => "probe",
            Command::Iterate { .. } => "iterate",
            Command::SicSearch { .. } => "sic-search",
            Command::MubGen { .. } => "mub-gen",
            Command::Verify { .. } => "verify",
            Command::PiCheck { .. } => "pi-check",
            Command::Soundness { .. } => "soundness",
        }
    }

    /// The seed slot of seeded commands.
    pub fn seed_mut(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Command::DminRefute { seed, .. }
            | Command::Probe { seed, .. }
            | Command::Iterate { seed, .. }
            | Command::SicSearch { seed, .. } => Some(seed),
            _ => None,
        }
    }
}
