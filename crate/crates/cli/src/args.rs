use std::path::PathBuf;

use bangbang::TargetKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bangbang", version, about = "Time-optimal feedback synthesis for the double integrator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Circle,
    Square,
}

impl From<Target> for TargetKind {
    fn from(t: Target) -> Self {
        match t {
            Target::Circle => TargetKind::Circle,
            Target::Square => TargetKind::Square,
        }
    }
}

/// Options shared by every subcommand. Flags override the scenario file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file with `alpha`, `l` and `target`.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub target: Option<Target>,
    /// Radius of the circular target (ignored for the square).
    #[arg(long, allow_hyphen_values = true)]
    pub l: Option<f64>,
    /// Control authority.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Directory for emitted files; stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Six-branch formulas where they apply, propagation otherwise.
    Auto,
    Closed,
    Generic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary sweep with normals and UP/BUP/NUP classes.
    Up {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Costate along the characteristic of one anchor.
    Costate {
        #[command(flatten)]
        common: Common,
        /// `circle:THETA`, `SIDE:S` (AB, BC, CD, AD) or `CORNER:THETA` (A, C).
        #[arg(long)]
        anchor: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])]
        tau: Vec<f64>,
    },
    /// Characteristic fan from dense UP anchors.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Anchors per UP interval.
        #[arg(long, default_value_t = 16)]
        anchors: usize,
        #[arg(long, default_value_t = 5.0)]
        tau_max: f64,
        #[arg(long, default_value_t = 0.25)]
        tau_step: f64,
    },
    /// Switching curves as polylines.
    SwitchCurves {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Largest |x2| reached by the polylines.
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        /// Also emit the touch-and-go trajectories.
        #[arg(long)]
        touch_and_go: bool,
    },
    /// Curves across which the value function jumps.
    Loci {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.025)]
        step: f64,
    },
    /// Level sets of the time-to-go.
    Isochrone {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])]
        tau: Vec<f64>,
        /// Samples per branch (closed form) or per UP interval (propagation).
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
    },
    /// Optimal control, time-to-go and terminal point at a state, as JSON.
    Feedback {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
    },
    /// Minimum time-to-go at a state.
    Value {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
    },
    /// Closed-loop rollout of the synthesized feedback.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 50.0)]
        tmax: f64,
    },
    /// Compares the synthesis with the brute-force oracle on a grid.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Points per axis.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        /// Half-width of the excluded band around value jumps.
        #[arg(long, default_value_t = 0.025)]
        band: f64,
        /// Largest accepted |value - oracle|.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}
