//! Per-subcommand settings layered as: command-line flag, then config
//! file, then built-in default.
//!
//! Config files are flat TOML documents whose keys are the long flag names,
//! e.g. `length-km = 30.0`. Lists are TOML arrays on disk and
//! comma-separated on the command line.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

/// Declares an options struct whose fields are all optional and that can
/// be overlaid on another instance.
macro_rules! layered {
    (
        $(#[$meta:meta])*
        pub struct $name:ident {
            $(
                $(#[$fmeta:meta])*
                pub $field:ident : Option<$ty:ty>,
            )*
        }
    ) => {
        $(#[$meta])*
        #[derive(Args, Deserialize, Debug, Default, Clone, PartialEq)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Fields set here win; unset fields fall back to `base`.
            pub fn over(self, base: Self) -> Self {
                Self {
                    $( $field: self.$field.or(base.$field), )*
                }
            }
        }
    };
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone, PartialEq)]
pub struct Common {
    /// Flat TOML file with default values for this subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Reads a config file into the options struct of a subcommand.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

layered! {
    /// Fiber, grid and output options for `simulate`.
    pub struct SimulateOptions {
        /// Master seed.
        pub seed: Option<u64>,
        /// Output directory.
        pub out: Option<PathBuf>,
        /// Load the fiber from a JSON file instead of synthesizing one.
        pub fiber: Option<PathBuf>,
        /// Fiber length, km.
        pub length_km: Option<f64>,
        /// PMD coefficient, ps/sqrt(km).
        pub pmd_coeff: Option<f64>,
        /// Number of birefringent segments.
        pub segments: Option<usize>,
        /// First grid wavelength, nm.
        pub start_nm: Option<f64>,
        /// Last grid wavelength, nm.
        pub stop_nm: Option<f64>,
        /// Grid step, nm.
        pub step_nm: Option<f64>,
        /// Input state labels (H, V, D, A, R, L).
        #[arg(value_delimiter = ',')]
        pub inputs: Option<Vec<String>>,
        /// Also write SVG charts.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        pub svg: Option<bool>,
    }
}

layered! {
    /// Options for `infidelity`.
    pub struct InfidelityOptions {
        /// Master seed.
        pub seed: Option<u64>,
        /// Output directory.
        pub out: Option<PathBuf>,
        /// Load the fiber from a JSON file instead of synthesizing one.
        pub fiber: Option<PathBuf>,
        /// Fiber length, km.
        pub length_km: Option<f64>,
        /// PMD coefficient, ps/sqrt(km).
        pub pmd_coeff: Option<f64>,
        /// Number of birefringent segments.
        pub segments: Option<usize>,
        /// First grid wavelength, nm.
        pub start_nm: Option<f64>,
        /// Last grid wavelength, nm.
        pub stop_nm: Option<f64>,
        /// Grid step, nm.
        pub step_nm: Option<f64>,
        /// Rolling window width, nm.
        pub window_nm: Option<f64>,
        /// Also write SVG charts.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        pub svg: Option<bool>,
    }
}

layered! {
    /// Options for `sweep`.
    pub struct SweepOptions {
        /// Master seed.
        pub seed: Option<u64>,
        /// Output directory.
        pub out: Option<PathBuf>,
        /// PMD coefficient, ps/sqrt(km).
        pub pmd_coeff: Option<f64>,
        /// Fiber lengths, km.
        #[arg(value_delimiter = ',')]
        pub lengths_km: Option<Vec<f64>>,
        /// Filter bandwidths, nm.
        #[arg(value_delimiter = ',')]
        pub widths_nm: Option<Vec<f64>>,
        /// Monte Carlo realizations per cell.
        pub realizations: Option<usize>,
        /// Band center, nm.
        pub center_nm: Option<f64>,
        /// Number of birefringent segments.
        pub segments: Option<usize>,
        /// Trajectory samples per band.
        pub samples_per_band: Option<usize>,
        /// Also write SVG charts.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        pub svg: Option<bool>,
    }
}

layered! {
    /// Options for `mmm`.
    pub struct MmmOptions {
        /// Output directory.
        pub out: Option<PathBuf>,
        /// Polarimeter scan, `wavelength_nm,state_label,s1,s2,s3`.
        pub scan: Option<PathBuf>,
        /// Launched states, `state_label,s1,s2,s3`.
        pub inputs: Option<PathBuf>,
        /// Launched state given inline as `LABEL=s1,s2,s3` (repeatable).
        pub declare: Option<Vec<String>>,
        /// Launched pair to analyze, `LABEL,LABEL`; defaults to the first
        /// perpendicular pair.
        pub pair: Option<String>,
        /// Also write SVG charts.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        pub svg: Option<bool>,
    }
}

layered! {
    /// Options for `qber-model`.
    pub struct QberOptions {
        /// Output directory.
        pub out: Option<PathBuf>,
        /// PMD coefficient, ps/sqrt(km).
        pub pmd_coeff: Option<f64>,
        /// Filter bandwidth, nm.
        pub bandwidth_nm: Option<f64>,
        /// Band center, nm.
        pub center_nm: Option<f64>,
        /// Link distances, km.
        #[arg(value_delimiter = ',')]
        pub distances_km: Option<Vec<f64>>,
        /// QBER floor added to the model line.
        pub baseline: Option<f64>,
        /// Measured QBER, `distance_km,qber[,qber_err]`.
        pub measured: Option<PathBuf>,
        /// Also write SVG charts.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        pub svg: Option<bool>,
    }
}

layered! {
    /// Options for `basis-study`.
    pub struct BasisOptions {
        /// Master seed.
        pub seed: Option<u64>,
        /// Output directory.
        pub out: Option<PathBuf>,
        /// `bb84` or `six-state`.
        pub protocol: Option<String>,
        /// Probability of basis Z (BB84).
        pub p_z: Option<f64>,
        /// PMD axis `s1,s2,s3`; taken from the fiber when one is given.
        pub omega_axis: Option<String>,
        /// Arc angle across the band, rad; taken from the fiber when one is given.
        pub delta_theta: Option<f64>,
        /// `min-weighted` or `balance-ratio`.
        pub objective: Option<String>,
        /// Target `p_e(Z) / p_e(X)` for `balance-ratio`.
        pub ratio: Option<f64>,
        /// Random triads for the six-state invariance check.
        pub orientations: Option<usize>,
        /// Fiber JSON for PMD axis, arc angle and higher-order report.
        pub fiber: Option<PathBuf>,
        /// Band center, nm.
        pub center_nm: Option<f64>,
        /// Band width, nm.
        pub width_nm: Option<f64>,
        /// Grid step for the higher-order report, nm.
        pub step_nm: Option<f64>,
    }
}
