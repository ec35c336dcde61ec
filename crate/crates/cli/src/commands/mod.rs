pub mod basis;
pub mod infidelity;
pub mod mmm;
pub mod qber;
pub mod simulate;
pub mod sweep;

use std::path::{Path, PathBuf};

use pmd_core::fiber::{synthesize_fiber, FiberRealization, FiberSpec, SpectralGrid, DEFAULT_SEGMENTS};
use pmd_core::StokesVector;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_LENGTH_KM: f64 = 30.0;
pub const DEFAULT_PMD_COEFF: f64 = 0.05;
pub const DEFAULT_START_NM: f64 = 1260.0;
pub const DEFAULT_STOP_NM: f64 = 1360.0;
pub const DEFAULT_STEP_NM: f64 = 0.25;
pub const DEFAULT_CENTER_NM: f64 = 1310.0;

pub(crate) fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Fiber from a JSON file, or synthesized from [`FiberSpec`] options.
pub(crate) fn load_or_synthesize(
    path: Option<&Path>,
    length_km: Option<f64>,
    pmd_coeff: Option<f64>,
    segments: Option<usize>,
    seed: Option<u64>,
) -> Result<FiberRealization, CliError> {
    if let Some(path) = path {
        return read_fiber(path);
    }
    let spec = FiberSpec::new(
        length_km.unwrap_or(DEFAULT_LENGTH_KM),
        pmd_coeff.unwrap_or(DEFAULT_PMD_COEFF),
        segments.unwrap_or(DEFAULT_SEGMENTS),
        seed.unwrap_or(DEFAULT_SEED),
    )?;
    Ok(synthesize_fiber(&spec)?)
}

pub(crate) fn read_fiber(path: &Path) -> Result<FiberRealization, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read fiber {}: {e}", path.display())))?;
    FiberRealization::from_json(&text).map_err(|e| CliError::Validation(format!("fiber {}: {e}", path.display())))
}

pub(crate) fn grid(start: Option<f64>, stop: Option<f64>, step: Option<f64>) -> Result<SpectralGrid, CliError> {
    Ok(SpectralGrid::from_range(
        start.unwrap_or(DEFAULT_START_NM),
        stop.unwrap_or(DEFAULT_STOP_NM),
        step.unwrap_or(DEFAULT_STEP_NM),
    )?)
}

/// Parses `s1,s2,s3`.
pub(crate) fn parse_vector(text: &str, name: &str) -> Result<StokesVector, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Validation(format!("{name}: expected `s1,s2,s3`, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    Ok(StokesVector::from_array(v))
}

pub(crate) fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
