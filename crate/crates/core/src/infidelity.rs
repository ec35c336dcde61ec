//! PMD-induced measurement error probability (infidelity).
//!
//! Three routes to the same quantity:
//!
//! - [`closed_form_infidelity`]: a first-order arc of angle `dtheta` at angle
//!   `phi` from the PMD vector, `p_e = sin^2(phi)/2 * (1 - sinc(dtheta/2))`.
//! - [`small_angle_infidelity`]: its leading Taylor term, `sin^2(phi) dtheta^2 / 48`.
//! - [`trajectory_infidelity`]: numerical band average of `|<s(lambda)|s0>|^2`
//!   over a sampled output trajectory, equal to `1 - <s0|rho|s0>` for the
//!   band-averaged density matrix `rho`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::fiber::{check_uniform, TrajectorySample, SPEED_OF_LIGHT};
use crate::polarization::{fidelity_pure_mixed, stokes_to_jones, DensityMatrix, JonesVector, StokesVector};
use crate::{invalid, Error, Result};

/// Spectral band: center wavelength and full width, nm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandSpec {
    pub center_nm: f64,
    pub width_nm: f64,
}

impl BandSpec {
    pub fn new(center_nm: f64, width_nm: f64) -> Result<Self> {
        if !(center_nm > 0.0) || !center_nm.is_finite() {
            return Err(invalid("center_nm", format!("{center_nm} must be positive")));
        }
        if !(width_nm >= 0.0) || !(width_nm < center_nm) {
            return Err(invalid(
                "width_nm",
                format!("{width_nm} must be in [0, center)"),
            ));
        }
        Ok(Self { center_nm, width_nm })
    }

    pub fn lower_nm(&self) -> f64 {
        self.center_nm - self.width_nm / 2.0
    }

    pub fn upper_nm(&self) -> f64 {
        self.center_nm + self.width_nm / 2.0
    }
}

/// First-order arc: rotation angle and angle between state and PMD vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcParams {
    pub delta_theta: f64,
    pub phi: f64,
}

impl ArcParams {
    pub fn new(delta_theta: f64, phi: f64) -> Result<Self> {
        if !(delta_theta >= 0.0) || !delta_theta.is_finite() {
            return Err(invalid("delta_theta", format!("{delta_theta} must be non-negative")));
        }
        if !(0.0..=FRAC_PI_2).contains(&phi) {
            return Err(invalid("phi", format!("{phi} outside [0, pi/2]")));
        }
        Ok(Self { delta_theta, phi })
    }

    /// Arc on a great circle (`phi = pi/2`).
    pub fn great_circle(delta_theta: f64) -> Result<Self> {
        Self::new(delta_theta, FRAC_PI_2)
    }
}

/// Angular-frequency width of a band, rad/s, linearized about the center:
/// `2 pi c width / center^2`.
pub fn delta_omega(band: &BandSpec) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * band.width_nm / (band.center_nm * band.center_nm) * 1e9
}

/// Rotation angle accumulated across the band for a DGD in ps.
pub fn arc_angle(dgd_ps: f64, band: &BandSpec) -> f64 {
    dgd_ps * 1e-12 * delta_omega(band)
}

/// Unnormalized sinc, `sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Series keeps full precision near zero.
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

pub fn closed_form_infidelity(arc: &ArcParams) -> f64 {
    let s = arc.phi.sin();
    0.5 * s * s * (1.0 - sinc(arc.delta_theta / 2.0))
}

pub fn small_angle_infidelity(arc: &ArcParams) -> f64 {
    let s = arc.phi.sin();
    s * s * arc.delta_theta * arc.delta_theta / 48.0
}

/// Quadrature rule over uniformly spaced samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoid,
    /// Composite Simpson; an odd interval count ends with the 3/8 rule.
    #[default]
    Simpson,
}

impl Quadrature {
    /// Weights for `n` samples, normalized to sum to one.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        let mut w = match (self, n) {
            (_, 0) => return Vec::new(),
            (_, 1) => vec![1.0],
            (_, 2) | (Quadrature::Trapezoid, _) => {
                let mut w = vec![1.0; n];
                w[0] = 0.5;
                w[n - 1] = 0.5;
                w
            }
            (Quadrature::Simpson, _) => simpson_weights(n),
        };
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    }
}

fn simpson_weights(n: usize) -> Vec<f64> {
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    for k in (0..simpson_intervals).step_by(2) {
        w[k] += 1.0 / 3.0;
        w[k + 1] += 4.0 / 3.0;
        w[k + 2] += 1.0 / 3.0;
    }
    if intervals % 2 == 1 {
        let k = simpson_intervals;
        w[k] += 3.0 / 8.0;
        w[k + 1] += 9.0 / 8.0;
        w[k + 2] += 9.0 / 8.0;
        w[k + 3] += 3.0 / 8.0;
    }
    w
}

/// Spectral shape of the light across the integration window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SpectralWeighting {
    #[default]
    Rectangular,
    /// Gaussian centered on the window with the given FWHM, nm.
    Gaussian { fwhm_nm: f64 },
}

impl SpectralWeighting {
    fn factor(&self, wavelength_nm: f64, center_nm: f64) -> f64 {
        match *self {
            SpectralWeighting::Rectangular => 1.0,
            SpectralWeighting::Gaussian { fwhm_nm } => {
                let x = (wavelength_nm - center_nm) / fwhm_nm;
                (-4.0 * std::f64::consts::LN_2 * x * x).exp()
            }
        }
    }
}

/// Quadrature rule and spectral shape used for band averages.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrationOptions {
    pub quadrature: Quadrature,
    pub weighting: SpectralWeighting,
}

/// Normalized integration weights for a uniformly sampled trajectory.
pub fn band_weights(traj: &[TrajectorySample], opts: &IntegrationOptions) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let wavelengths: Vec<f64> = traj.iter().map(|s| s.wavelength_nm).collect();
    check_uniform(&wavelengths)?;
    let center = 0.5 * (wavelengths[0] + wavelengths[wavelengths.len() - 1]);
    let mut w = opts.quadrature.weights(traj.len());
    if opts.weighting != SpectralWeighting::Rectangular {
        for (wi, lambda) in w.iter_mut().zip(&wavelengths) {
            *wi *= opts.weighting.factor(*lambda, center);
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weighting", "spectral weights vanish over the window"));
        }
        w.iter_mut().for_each(|x| *x /= total);
    }
    Ok(w)
}

/// Weighted mean Stokes vector of the trajectory (the Bloch vector of the
/// band-averaged state).
fn mean_bloch(traj: &[TrajectorySample], opts: &IntegrationOptions) -> Result<StokesVector> {
    let w = band_weights(traj, opts)?;
    Ok(traj
        .iter()
        .zip(&w)
        .fold(StokesVector::new(0.0, 0.0, 0.0), |acc, (s, wi)| acc.add(&s.stokes.scale(*wi))))
}

/// Band-averaged density matrix with the default integration options.
pub fn mixed_state(traj: &[TrajectorySample]) -> Result<DensityMatrix> {
    mixed_state_with(traj, &IntegrationOptions::default())
}

pub fn mixed_state_with(traj: &[TrajectorySample], opts: &IntegrationOptions) -> Result<DensityMatrix> {
    let m = mean_bloch(traj, opts)?;
    // Rounding can push a pure average a hair past the sphere.
    let n = m.norm();
    let m = if n > 1.0 { m / n } else { m };
    DensityMatrix::from_bloch(&m)
}

/// Stokes vector at the window center: the middle sample, or the geodesic
/// midpoint of the two middle samples when the count is even.
pub fn central_state(traj: &[TrajectorySample]) -> Result<StokesVector> {
    let n = traj.len();
    if n == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if n % 2 == 1 {
        return Ok(traj[n / 2].stokes);
    }
    traj[n / 2 - 1]
        .stokes
        .add(&traj[n / 2].stokes)
        .normalized()
        .map_err(|_| invalid("trajectory", "middle samples are antipodal; center undefined"))
}

/// Trajectory integration with the default options. `s0` defaults to the
/// state at the central wavelength.
pub fn trajectory_infidelity(traj: &[TrajectorySample], s0: Option<&JonesVector>) -> Result<f64> {
    trajectory_infidelity_with(traj, s0, &IntegrationOptions::default())
}

pub fn trajectory_infidelity_with(
    traj: &[TrajectorySample],
    s0: Option<&JonesVector>,
    opts: &IntegrationOptions,
) -> Result<f64> {
    if traj.len() < 2 {
        return Err(invalid("trajectory", "at least two samples are required"));
    }
    let reference = match s0 {
        Some(j) => j.to_stokes(),
        None => central_state(traj)?,
    };
    let m = mean_bloch(traj, opts)?;
    // 1 - sum w |<s_i|s0>|^2 with |<a|b>|^2 = (1 + a.b)/2.
    Ok((0.5 * (1.0 - m.dot(&reference))).clamp(0.0, 1.0))
}

/// Same quantity through the density-matrix route, `1 - <s0|rho|s0>`.
pub fn infidelity_via_density(traj: &[TrajectorySample], s0: Option<&JonesVector>) -> Result<f64> {
    let rho = mixed_state(traj)?;
    let s0 = match s0 {
        Some(j) => *j,
        None => stokes_to_jones(&central_state(traj)?)?,
    };
    Ok(1.0 - fidelity_pure_mixed(&s0, &rho))
}

/// Realized geometry of a rolling window on a uniform grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RollingWindow {
    /// Samples on each side of the center.
    pub half_steps: usize,
    /// Realized width, `2 * half_steps * step`.
    pub width_nm: f64,
}

impl RollingWindow {
    /// Rounds `window_nm` to an even number of grid steps so that every
    /// window has a center sample.
    pub fn fit(window_nm: f64, step_nm: f64, n_samples: usize) -> Result<Self> {
        if !(window_nm >= 3.0 * step_nm - 1e-9) {
            return Err(Error::Window {
                window_nm,
                reason: format!("narrower than three grid steps of {step_nm} nm"),
            });
        }
        let half_steps = (window_nm / (2.0 * step_nm)).round().max(1.0) as usize;
        if 2 * half_steps + 1 > n_samples {
            return Err(Error::Window {
                window_nm,
                reason: format!(
                    "wider than the grid span of {} nm",
                    step_nm * n_samples.saturating_sub(1) as f64
                ),
            });
        }
        Ok(Self {
            half_steps,
            width_nm: 2.0 * half_steps as f64 * step_nm,
        })
    }
}

fn trajectory_step(traj: &[TrajectorySample]) -> Result<f64> {
    if traj.len() < 2 {
        return Err(invalid("trajectory", "at least two samples are required"));
    }
    let w: Vec<f64> = traj.iter().map(|s| s.wavelength_nm).collect();
    check_uniform(&w)?;
    Ok((w[w.len() - 1] - w[0]) / (w.len() - 1) as f64)
}

/// Infidelity versus window center, sliding a window of `window_nm` along
/// the trajectory. Windows that would run past either end are dropped.
pub fn rolling_infidelity(traj: &[TrajectorySample], window_nm: f64) -> Result<Vec<(f64, f64)>> {
    let step = trajectory_step(traj)?;
    let win = RollingWindow::fit(window_nm, step, traj.len())?;
    let k = win.half_steps;
    (k..traj.len() - k)
        .map(|i| Ok((traj[i].wavelength_nm, trajectory_infidelity(&traj[i - k..=i + k], None)?)))
        .collect()
}

/// Mean DGD over the points of `series` inside `center +- width/2`.
fn window_mean_dgd(series: &[(f64, f64)], center_nm: f64, width_nm: f64) -> Result<f64> {
    let half = width_nm / 2.0 + 1e-9;
    let (sum, count) = series
        .iter()
        .filter(|(w, _)| (w - center_nm).abs() <= half)
        .fold((0.0, 0usize), |(s, c), (_, d)| (s + d, c + 1));
    if count == 0 {
        return Err(Error::Window {
            window_nm: width_nm,
            reason: format!("no DGD samples around {center_nm} nm"),
        });
    }
    Ok(sum / count as f64)
}

/// Upper-bound infidelity at one center from a DGD series, assuming the
/// state rotates on a great circle: `(mean_dgd * delta_omega)^2 / 48`.
///
/// The series may sit on interval midpoints; the window must lie within
/// half a sample spacing of the series ends.
pub fn dgd_bound_at(series: &[(f64, f64)], center_nm: f64, width_nm: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(invalid("dgd_series", "at least two samples are required"));
    }
    let w: Vec<f64> = series.iter().map(|s| s.0).collect();
    check_uniform(&w)?;
    let step = (w[w.len() - 1] - w[0]) / (w.len() - 1) as f64;
    let lo = center_nm - width_nm / 2.0;
    let hi = center_nm + width_nm / 2.0;
    if lo < w[0] - step / 2.0 - 1e-9 || hi > w[w.len() - 1] + step / 2.0 + 1e-9 {
        return Err(Error::Window {
            window_nm: width_nm,
            reason: format!("extends past the DGD series around {center_nm} nm"),
        });
    }
    let mean = window_mean_dgd(series, center_nm, width_nm)?;
    let band = BandSpec::new(center_nm, width_nm)?;
    let arc = ArcParams::great_circle(arc_angle(mean, &band))?;
    Ok(small_angle_infidelity(&arc))
}

/// DGD-based infidelity at every series point whose window fits inside
/// the series.
pub fn dgd_based_infidelity(series: &[(f64, f64)], window_nm: f64) -> Result<Vec<(f64, f64)>> {
    if series.len() < 2 {
        return Err(invalid("dgd_series", "at least two samples are required"));
    }
    let (first, last) = (series[0].0, series[series.len() - 1].0);
    let half = window_nm / 2.0;
    let out: Vec<(f64, f64)> = series
        .iter()
        .filter(|(w, _)| w - half >= first - 1e-9 && w + half <= last + 1e-9)
        .map(|&(w, _)| Ok((w, dgd_bound_at(series, w, window_nm)?)))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Window {
            window_nm,
            reason: "wider than the DGD series".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{angular_frequency, propagate_trajectory, FiberRealization, SpectralGrid};
    use approx::assert_abs_diff_eq;

    fn sample(w: f64, s: StokesVector) -> TrajectorySample {
        TrajectorySample {
            wavelength_nm: w,
            stokes: s,
        }
    }

    #[test]
    fn band_validation() {
        assert!(BandSpec::new(0.0, 1.0).is_err());
        assert!(BandSpec::new(1310.0, -1.0).is_err());
        assert!(BandSpec::new(10.0, 10.0).is_err());
        assert!(BandSpec::new(1310.0, 0.0).is_ok());
        assert!(ArcParams::new(1.0, 2.0).is_err());
        assert!(ArcParams::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn delta_omega_examples() {
        let b0 = BandSpec::new(1310.0, 0.0).unwrap();
        assert_eq!(delta_omega(&b0), 0.0);
        // 2 pi * 299792458 * 2 / 1310^2 * 1e9
        let d2 = delta_omega(&BandSpec::new(1310.0, 2.0).unwrap());
        assert!((d2 / 2.195e12 - 1.0).abs() < 1e-3, "{d2}");
        let d4 = delta_omega(&BandSpec::new(1310.0, 4.0).unwrap());
        assert_abs_diff_eq!(d4, 2.0 * d2, epsilon = 1e-3);
    }

    #[test]
    fn arc_angle_examples() {
        let band = BandSpec::new(1310.0, 2.0).unwrap();
        assert_eq!(arc_angle(0.0, &band), 0.0);
        let a = arc_angle(0.5, &band);
        assert!((a / 1.098 - 1.0).abs() < 1e-3, "{a}");
        assert_abs_diff_eq!(arc_angle(1.0, &band), 2.0 * a, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let p = closed_form_infidelity(&ArcParams::great_circle(2.0).unwrap());
        assert!((p - 0.0793).abs() < 5e-4, "{p}");
        assert_eq!(closed_form_infidelity(&ArcParams::great_circle(0.0).unwrap()), 0.0);
        assert_eq!(closed_form_infidelity(&ArcParams::new(2.5, 0.0).unwrap()), 0.0);
    }

    #[test]
    fn small_angle_examples() {
        let arc = ArcParams::great_circle(0.1).unwrap();
        assert_abs_diff_eq!(small_angle_infidelity(&arc), 2.0833e-4, epsilon = 1e-8);
        assert_abs_diff_eq!(closed_form_infidelity(&arc), 2.0831e-4, epsilon = 1e-8);
        assert_eq!(small_angle_infidelity(&ArcParams::great_circle(0.0).unwrap()), 0.0);
    }

    #[test]
    fn sinc_is_continuous_at_switch() {
        let x = 0.99999e-4f64;
        assert_abs_diff_eq!(sinc(x), x.sin() / x, epsilon = 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for rule in [Quadrature::Trapezoid, Quadrature::Simpson] {
            for n in 1..12 {
                let w = rule.weights(n);
                assert_eq!(w.len(), n);
                assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
            }
        }
        assert_eq!(Quadrature::Simpson.weights(4), vec![0.125, 0.375, 0.375, 0.125]);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for n in [3usize, 4, 5, 8, 9] {
            let w = Quadrature::Simpson.weights(n);
            let mean: f64 = (0..n)
                .map(|i| {
                    let x = i as f64 / (n - 1) as f64;
                    w[i] * (x * x * x - 2.0 * x + 1.0)
                })
                .sum();
            assert_abs_diff_eq!(mean, 0.25 - 1.0 + 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn mixed_state_examples() {
        let h = StokesVector::S1;
        let rho = mixed_state(&[sample(1310.0, h)]).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-15);
        let hv = [sample(1310.0, h), sample(1311.0, h.neg())];
        let rho = mixed_state(&hv).unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed().matrix()).iter().all(|z| z.norm() < 1e-12));
        assert!(matches!(mixed_state(&[]), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn full_great_circle_averages_to_identity() {
        let n = 2001;
        let traj: Vec<_> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / (n - 1) as f64;
                sample(1300.0 + i as f64 * 0.01, StokesVector::new(t.cos(), t.sin(), 0.0))
            })
            .collect();
        let rho = mixed_state(&traj).unwrap();
        assert!(rho.bloch_vector().norm() < 1e-6);
    }

    #[test]
    fn trajectory_infidelity_trivial_cases() {
        let s = StokesVector::unit(0.0, 0.6, 0.8).unwrap();
        let traj: Vec<_> = (0..5).map(|i| sample(1310.0 + i as f64, s)).collect();
        assert_abs_diff_eq!(trajectory_infidelity(&traj, None).unwrap(), 0.0, epsilon = 1e-15);
        let orth = stokes_to_jones(&s.neg()).unwrap();
        assert_abs_diff_eq!(trajectory_infidelity(&traj, Some(&orth)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(trajectory_infidelity(&traj[..1], None).is_err());
        let mut bad = traj.clone();
        bad[2].wavelength_nm += 0.3;
        assert!(matches!(trajectory_infidelity(&bad, None), Err(Error::NonUniformGrid { .. })));
    }

    #[test]
    fn first_order_arc_matches_closed_form() {
        // Single waveplate, input on the equator of its axis: great-circle arc.
        let band = BandSpec::new(1310.0, 5.0).unwrap();
        let n = 201;
        let grid = SpectralGrid::centered(band.center_nm, band.width_nm, n).unwrap();
        let d_omega = angular_frequency(grid.first()) - angular_frequency(grid.last());
        let dtheta = 1.3;
        let fiber = FiberRealization::single_waveplate(&StokesVector::S3, dtheta / d_omega).unwrap();
        let traj = propagate_trajectory(&fiber, &JonesVector::H, &grid).unwrap();
        let numeric = trajectory_infidelity(&traj.samples, None).unwrap();
        let exact = closed_form_infidelity(&ArcParams::great_circle(dtheta).unwrap());
        assert_abs_diff_eq!(numeric, exact, epsilon = 1e-6);
        let via_rho = infidelity_via_density(&traj.samples, None).unwrap();
        assert_abs_diff_eq!(numeric, via_rho, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_weighting_reduces_infidelity() {
        let band = BandSpec::new(1310.0, 4.0).unwrap();
        let grid = SpectralGrid::centered(band.center_nm, band.width_nm, 81).unwrap();
        let fiber = FiberRealization::single_waveplate(&StokesVector::S3, 0.5).unwrap();
        let traj = propagate_trajectory(&fiber, &JonesVector::H, &grid).unwrap();
        let flat = trajectory_infidelity(&traj.samples, None).unwrap();
        let opts = IntegrationOptions {
            weighting: SpectralWeighting::Gaussian { fwhm_nm: 1.0 },
            ..Default::default()
        };
        let gauss = trajectory_infidelity_with(&traj.samples, None, &opts).unwrap();
        assert!(gauss < flat);
    }

    #[test]
    fn rolling_window_geometry() {
        let w = RollingWindow::fit(5.0, 0.25, 401).unwrap();
        assert_eq!(w.half_steps, 10);
        assert_abs_diff_eq!(w.width_nm, 5.0);
        assert!(RollingWindow::fit(0.5, 0.25, 401).is_err());
        assert!(RollingWindow::fit(200.0, 0.25, 401).is_err());
    }

    #[test]
    fn rolling_drops_edge_windows() {
        let grid = SpectralGrid::from_range(1300.0, 1310.0, 0.25).unwrap();
        let fiber = FiberRealization::single_waveplate(&StokesVector::S3, 0.0).unwrap();
        let traj = propagate_trajectory(&fiber, &JonesVector::H, &grid).unwrap();
        let rolled = rolling_infidelity(&traj.samples, 2.0).unwrap();
        assert_eq!(rolled.len(), grid.len() - 8);
        assert_abs_diff_eq!(rolled[0].0, 1301.0);
        assert!(rolled.iter().all(|&(_, p)| p == 0.0));
    }

    #[test]
    fn dgd_bound_examples() {
        let series: Vec<(f64, f64)> = (0..80).map(|i| (1300.125 + 0.25 * i as f64, 0.5)).collect();
        let out = dgd_based_infidelity(&series, 5.0).unwrap();
        let band = BandSpec::new(1310.0, 5.0).unwrap();
        let expected = arc_angle(0.5, &band).powi(2) / 48.0;
        let at = dgd_bound_at(&series, 1310.0, 5.0).unwrap();
        assert_abs_diff_eq!(at, expected, epsilon = 1e-15);
        assert!(out.iter().all(|&(w, p)| (p - arc_angle(0.5, &BandSpec::new(w, 5.0).unwrap()).powi(2) / 48.0).abs() < 1e-15));
        let zeros: Vec<(f64, f64)> = series.iter().map(|&(w, _)| (w, 0.0)).collect();
        assert!(dgd_based_infidelity(&zeros, 5.0).unwrap().iter().all(|&(_, p)| p == 0.0));
        assert!(dgd_bound_at(&series, 1302.0, 5.0).is_err());
    }
}
