//! Seeded Monte Carlo over fiber realizations.
//!
//! Realization `i` of a master seed draws its segment axes from ChaCha
//! stream `2i` and its random input state from stream `2i + 1`. Lengths and
//! bandwidths in a sweep therefore share axes and input states, and results
//! do not depend on how the work is scheduled across threads: per-index
//! results are collected in index order before any reduction.

use std::f64::consts::PI;

use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use crate::fiber::{
    dgd_spectrum, pmd_vector_at, propagate_trajectory, stream_rng, synthesize_with_rng, FiberRealization,
    FiberSpec, SpectralGrid,
};
use crate::infidelity::{delta_omega, trajectory_infidelity, BandSpec};
use crate::polarization::{stokes_to_jones, JonesVector, StokesVector};
use crate::stats::{mean, std_dev};
use crate::{invalid, Result};

/// Minimum realization count accepted by [`ensemble_mean_infidelity`].
pub const MIN_REALIZATIONS: usize = 100;

/// Finite-difference step used for point DGD estimates, nm.
pub const POINT_DGD_STEP_NM: f64 = 0.01;

/// Fiber of realization `index`.
pub fn realization_fiber(spec: &FiberSpec, index: u64) -> Result<FiberRealization> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 2 * index);
    Ok(synthesize_with_rng(spec, &mut rng))
}

/// Input state of realization `index`, uniform on the Poincare sphere.
pub fn realization_state(seed: u64, index: u64) -> JonesVector {
    let mut rng = stream_rng(seed, 2 * index + 1);
    let s: [f64; 3] = UnitSphere.sample(&mut rng);
    stokes_to_jones(&StokesVector::from_array(s)).expect("unit sphere samples are normalized")
}

/// DGD at `wavelength_nm` for each of `n_realizations` fibers.
pub fn dgd_ensemble(spec: &FiberSpec, n_realizations: usize, wavelength_nm: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let fiber = realization_fiber(spec, i)?;
            Ok(pmd_vector_at(&fiber, wavelength_nm, POINT_DGD_STEP_NM)?.dgd())
        })
        .collect()
}

/// First and second moments of a DGD sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DgdStatistics {
    pub n: usize,
    pub mean: f64,
    pub mean_square: f64,
}

impl DgdStatistics {
    pub fn from_samples(dgd: &[f64]) -> Self {
        Self {
            n: dgd.len(),
            mean: mean(dgd),
            mean_square: dgd.iter().map(|d| d * d).sum::<f64>() / dgd.len() as f64,
        }
    }

    /// `<dgd^2> / <dgd>^2`; `3 pi / 8` for a Maxwellian.
    pub fn moment_ratio(&self) -> f64 {
        self.mean_square / (self.mean * self.mean)
    }
}

/// Maxwellian moment ratio `<x^2>/<x>^2`.
pub const MAXWELL_MOMENT_RATIO: f64 = 3.0 * PI / 8.0;

/// Sampling of each band in [`ensemble_mean_infidelity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleOptions {
    pub center_nm: f64,
    pub n_segments: usize,
    /// Trajectory samples per band (odd keeps plain Simpson weights).
    pub samples_per_band: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            center_nm: 1310.0,
            n_segments: crate::fiber::DEFAULT_SEGMENTS,
            samples_per_band: 33,
        }
    }
}

/// One `(length, bandwidth)` cell of an infidelity sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleRow {
    pub length_km: f64,
    pub width_nm: f64,
    /// Mean trajectory-integrated infidelity.
    pub mean: f64,
    pub std: f64,
    /// Mean DGD-method estimate averaged over input orientation:
    /// `(2/3) (mean_dgd * delta_omega)^2 / 48` per realization.
    pub dgd_method: f64,
}

/// Monte Carlo infidelity for every combination of `lengths` and `widths`
/// (lengths outer, widths inner).
pub fn ensemble_mean_infidelity(
    pmd_coeff: f64,
    lengths_km: &[f64],
    widths_nm: &[f64],
    n_realizations: usize,
    seed: u64,
    opts: &EnsembleOptions,
) -> Result<Vec<EnsembleRow>> {
    if n_realizations < MIN_REALIZATIONS {
        return Err(invalid(
            "n_realizations",
            format!("{n_realizations} is below the minimum of {MIN_REALIZATIONS}"),
        ));
    }
    if lengths_km.is_empty() || widths_nm.is_empty() {
        return Err(invalid("sweep", "lengths and widths must be non-empty"));
    }
    if opts.samples_per_band < 3 {
        return Err(invalid("samples_per_band", "at least three samples are required"));
    }
    let specs = lengths_km
        .iter()
        .map(|&l| FiberSpec::new(l, pmd_coeff, opts.n_segments, seed))
        .collect::<Result<Vec<_>>>()?;
    let bands = widths_nm
        .iter()
        .map(|&w| {
            if !(w > 0.0) {
                return Err(invalid("width_nm", format!("{w} must be positive")));
            }
            let band = BandSpec::new(opts.center_nm, w)?;
            let grid = SpectralGrid::centered(opts.center_nm, w, opts.samples_per_band)?;
            Ok((band, grid))
        })
        .collect::<Result<Vec<_>>>()?;

    // per_realization[i][cell] = (trajectory p_e, DGD-method p_e)
    let per_realization: Vec<Vec<(f64, f64)>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let input = realization_state(seed, i);
            let mut cells = Vec::with_capacity(specs.len() * bands.len());
            for spec in &specs {
                let fiber = realization_fiber(spec, i)?;
                for (band, grid) in &bands {
                    let traj = propagate_trajectory(&fiber, &input, grid)?;
                    let p_traj = trajectory_infidelity(&traj.samples, None)?;
                    let dgd: Vec<f64> = dgd_spectrum(&fiber, grid)?.iter().map(|d| d.1).collect();
                    let theta = mean(&dgd) * 1e-12 * delta_omega(band);
                    cells.push((p_traj, (2.0 / 3.0) * theta * theta / 48.0));
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(specs.len() * bands.len());
    for (li, spec) in specs.iter().enumerate() {
        for (wi, (band, _)) in bands.iter().enumerate() {
            let cell = li * bands.len() + wi;
            let traj: Vec<f64> = per_realization.iter().map(|r| r[cell].0).collect();
            let dgd: Vec<f64> = per_realization.iter().map(|r| r[cell].1).collect();
            rows.push(EnsembleRow {
                length_km: spec.length_km,
                width_nm: band.width_nm,
                mean: mean(&traj),
                std: std_dev(&traj),
                dgd_method: mean(&dgd),
            });
        }
    }
    Ok(rows)
}

/// Small-angle ensemble mean for uniformly random states and Maxwellian
/// DGD: `E[sin^2 phi] = 2/3` and `E[dgd^2] = (3 pi / 8) pmd^2 L` give
/// `pi pmd^2 L domega^2 / 192`.
pub fn analytic_mean_infidelity(pmd_coeff: f64, length_km: f64, band: &BandSpec) -> f64 {
    let d_omega_per_ps = delta_omega(band) * 1e-12;
    PI * pmd_coeff * pmd_coeff * length_km * d_omega_per_ps * d_omega_per_ps / 192.0
}
