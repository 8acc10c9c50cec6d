use std::path::PathBuf;

use beaconmesh::linkbudget::{AntennaSpec, Pattern, Polarization};
use beaconmesh::mesh::TowerId;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "beaconmesh",
    version,
    about = "Link budgets, S11 sweeps, tower meshes and beacon duty cycling"
)]
pub struct Cli {
    /// Print a single JSON object instead of text
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for files a subcommand writes
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one point-to-point link budget
    Link(LinkArgs),
    /// Tabulate S11 metrics from a Touchstone .s1p file
    Sparams(SparamsArgs),
    /// Build the tower graph for a scenario and check its links
    Mesh(MeshArgs),
    /// Run the duty-cycled beacon simulation for a scenario
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternKind {
    Gaussian,
    Isotropic,
    Dipole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolarizationKind {
    Horizontal,
    Vertical,
    Slant45,
    Rhcp,
    Lhcp,
}

impl From<PolarizationKind> for Polarization {
    fn from(k: PolarizationKind) -> Self {
        match k {
            PolarizationKind::Horizontal => Polarization::horizontal(),
            PolarizationKind::Vertical => Polarization::vertical(),
            PolarizationKind::Slant45 => Polarization::slant45(),
            PolarizationKind::Rhcp => Polarization::rhcp(),
            PolarizationKind::Lhcp => Polarization::lhcp(),
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct LinkArgs {
    /// Carrier frequency
    #[arg(long, value_name = "HZ")]
    pub freq: f64,
    /// Separation between the antennas
    #[arg(long, value_name = "M")]
    pub dist: f64,
    /// Transmitter input power
    #[arg(long, value_name = "W")]
    pub pt: f64,
    /// Transmit peak directivity (linear), gaussian pattern only [default: 1]
    #[arg(long, value_name = "LIN")]
    pub gt: Option<f64>,
    /// Receive peak directivity (linear), gaussian pattern only [default: 1]
    #[arg(long, value_name = "LIN")]
    pub gr: Option<f64>,
    #[arg(long, value_enum, default_value_t = PatternKind::Gaussian)]
    pub tx_pattern: PatternKind,
    #[arg(long, value_enum, default_value_t = PatternKind::Gaussian)]
    pub rx_pattern: PatternKind,
    /// Half-power beamwidth of a gaussian transmit pattern
    #[arg(long, value_name = "DEG", default_value_t = 60.0)]
    pub tx_hpbw: f64,
    /// Half-power beamwidth of a gaussian receive pattern
    #[arg(long, value_name = "DEG", default_value_t = 60.0)]
    pub rx_hpbw: f64,
    /// Transmit radiation efficiency
    #[arg(long, default_value_t = 1.0)]
    pub tx_eff: f64,
    /// Receive radiation efficiency
    #[arg(long, default_value_t = 1.0)]
    pub rx_eff: f64,
    /// Transmit feed-line efficiency
    #[arg(long, default_value_t = 1.0)]
    pub tx_feed_eff: f64,
    #[arg(long, value_enum, default_value_t = PolarizationKind::Vertical)]
    pub tx_pol: PolarizationKind,
    #[arg(long, value_enum, default_value_t = PolarizationKind::Vertical)]
    pub rx_pol: PolarizationKind,
    /// Largest transmit antenna dimension, for the far-field check
    #[arg(long, value_name = "M", default_value_t = 0.0)]
    pub tx_dmax: f64,
    /// Largest receive antenna dimension, for the far-field check
    #[arg(long, value_name = "M", default_value_t = 0.0)]
    pub rx_dmax: f64,
    /// Departure polar angle [default: pattern peak]
    #[arg(long, value_name = "DEG")]
    pub tx_theta: Option<f64>,
    /// Departure azimuth [default: pattern peak]
    #[arg(long, value_name = "DEG")]
    pub tx_phi: Option<f64>,
    /// Arrival polar angle [default: pattern peak]
    #[arg(long, value_name = "DEG")]
    pub rx_theta: Option<f64>,
    /// Arrival azimuth [default: pattern peak]
    #[arg(long, value_name = "DEG")]
    pub rx_phi: Option<f64>,
}

pub(crate) fn antenna(
    kind: PatternKind,
    peak: Option<f64>,
    hpbw_deg: f64,
    flag: &str,
) -> Result<AntennaSpec, crate::CliError> {
    let pattern = match (kind, peak) {
        (PatternKind::Gaussian, d0) => Pattern::GaussianBeam {
            boresight_directivity: d0.unwrap_or(1.0),
            hpbw_deg,
        },
        (_, Some(_)) => {
            return Err(crate::CliError::Usage(format!(
                "--{flag} only applies to the gaussian pattern"
            )))
        }
        (PatternKind::Isotropic, None) => Pattern::Isotropic,
        (PatternKind::Dipole, None) => Pattern::HalfWaveDipole,
    };
    Ok(AntennaSpec::new(pattern))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SparamsArgs {
    /// Touchstone .s1p file
    pub file: PathBuf,
    /// Return-loss threshold defining a band
    #[arg(long, value_name = "DB", default_value_t = 10.0)]
    pub threshold_db: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MeshArgs {
    /// Scenario JSON file
    pub scenario: PathBuf,
    /// Neighbours per tower [default: from scenario, else 2]
    #[arg(long)]
    pub k: Option<usize>,
    /// Longest allowed edge [default: from scenario, else unlimited]
    #[arg(long, value_name = "KM")]
    pub max_range_km: Option<f64>,
    /// Frequency for link checks [default: from scenario]
    #[arg(long, value_name = "HZ")]
    pub freq: Option<f64>,
    /// Also compute a nearest-neighbour tour
    #[arg(long)]
    pub tsp: bool,
    /// Tour start tower [default: lowest id]
    #[arg(long, value_name = "ID", requires = "tsp")]
    pub start: Option<TowerId>,
    /// Write nodes.csv and edges.csv to --out
    #[arg(long)]
    pub plot_data: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// Scenario JSON file
    pub scenario: PathBuf,
    /// Seed for generated devices [default: from scenario]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated time [default: from scenario]
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Time step [default: from scenario]
    #[arg(long, value_name = "S")]
    pub step: Option<f64>,
}
