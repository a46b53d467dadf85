use std::net::SocketAddr;
use std::path::PathBuf;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gardentrack_core::pipeline::AcfMode;
use gardentrack_core::quality::Placement;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gardentrack", version, about = "Smartphone GNSS survey analysis")]
pub struct Cli {
    /// TOML config shared with the service. Flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// tracing filter for stderr logs.
    #[arg(long, global = true, default_value = "warn", value_name = "FILTER")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Geojson,
    Csv,
    Both,
}

impl Format {
    pub fn geojson(self) -> bool {
        matches!(self, Format::Geojson | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlacementArg {
    Start,
    End,
    Both,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Start => Placement::Start,
            PlacementArg::End => Placement::End,
            PlacementArg::Both => Placement::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AcfModeArg {
    Residual,
    Coordinate,
}

impl From<AcfModeArg> for AcfMode {
    fn from(m: AcfModeArg) -> Self {
        match m {
            AcfModeArg::Residual => AcfMode::Residual,
            AcfModeArg::Coordinate => AcfMode::Coordinate,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Projection code from the bundled registry.
    #[arg(long, value_name = "EPSG")]
    pub projection: Option<String>,
    /// Directory for output files.
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Date for logs without RMC sentences.
    #[arg(long, value_name = "YYYY-MM-DD")]
    pub fallback_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StopFlags {
    /// m/s.
    #[arg(long)]
    pub speed_threshold: Option<f64>,
    /// Seconds.
    #[arg(long)]
    pub min_duration: Option<f64>,
    /// Median window in samples (odd, >= 3).
    #[arg(long)]
    pub filter_window: Option<usize>,
    /// Detect on the raw speed series.
    #[arg(long, conflicts_with = "filter_window")]
    pub no_filter: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowFlags {
    /// Static window length in seconds.
    #[arg(long)]
    pub window_s: Option<i64>,
    #[arg(long, value_enum)]
    pub placement: Option<PlacementArg>,
    /// Epochs kept per window; 0 keeps all.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AcfFlags {
    /// Seconds.
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<AcfModeArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an NMEA log into fixes.csv and a line report.
    Parse {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-track accuracy against a reference polyline.
    Accuracy {
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        polyline: Option<PathBuf>,
        #[command(flatten)]
        windows: WindowFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Static precision of the start and end windows.
    Precision {
        input: PathBuf,
        #[command(flatten)]
        windows: WindowFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Autocorrelation of the east and north series.
    Acf {
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        polyline: Option<PathBuf>,
        #[command(flatten)]
        acf: AcfFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Stop events of one survey.
    Stops {
        input: PathBuf,
        #[command(flatten)]
        stops: StopFlags,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        common: Common,
    },
    /// Hotspots across several surveys.
    Hotspots {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        stops: StopFlags,
        /// Metres.
        #[arg(long)]
        merge_radius: Option<f64>,
        /// Surveys analysed in parallel.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        common: Common,
    },
    /// Full report bundle for one survey.
    Analyze {
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        polyline: Option<PathBuf>,
        #[command(flatten)]
        stops: StopFlags,
        #[command(flatten)]
        windows: WindowFlags,
        #[command(flatten)]
        acf: AcfFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic survey: NMEA log plus the true path.
    Simulate {
        /// NMEA output path; defaults to survey.nmea in the output directory.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Metres per axis.
        #[arg(long)]
        sigma: Option<f64>,
        /// Correlation time in seconds.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        no_quantize: bool,
        #[arg(long)]
        device: Option<String>,
        #[arg(long)]
        stop_count: Option<usize>,
        #[arg(long)]
        start_time: Option<DateTime<Utc>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the ingestion service.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[arg(long, value_name = "DIR")]
        catalog: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        polyline: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Bearer token required on every route but /health.
        #[arg(long, env = "GARDENTRACK_TOKEN", hide_env_values = true)]
        token: Option<String>,
    },
}
