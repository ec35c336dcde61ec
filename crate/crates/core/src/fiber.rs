//! Random-birefringence fiber emulation.
//!
//! A fiber is a chain of birefringent segments with random axes. Segment
//! `k` acts on Jones vectors as `exp(-i omega tau_k/2 a_k.sigma)`, so the
//! output Stokes vector of the whole chain precesses about the PMD vector
//! as the optical frequency changes.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::polarization::{rotation_from_unitary, JonesUnitary, JonesVector, PolRotation, StokesVector};
use crate::{invalid, Error, Result};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = SPEED_OF_LIGHT * 1e-3;

/// Default number of waveplate segments per fiber.
pub const DEFAULT_SEGMENTS: usize = 200;

/// Angular optical frequency in rad/ps for a vacuum wavelength in nm.
pub fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * C_NM_PER_PS / wavelength_nm
}

/// Seeded generator for one independent stream of a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters of a synthetic fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub length_km: f64,
    /// PMD coefficient, ps/sqrt(km).
    pub pmd_coeff: f64,
    pub n_segments: usize,
    pub seed: u64,
}

impl FiberSpec {
    pub fn new(length_km: f64, pmd_coeff: f64, n_segments: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            length_km,
            pmd_coeff,
            n_segments,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) || !self.length_km.is_finite() {
            return Err(invalid("length_km", format!("{} must be positive", self.length_km)));
        }
        if !(self.pmd_coeff >= 0.0) || !self.pmd_coeff.is_finite() {
            return Err(invalid("pmd_coeff", format!("{} must be non-negative", self.pmd_coeff)));
        }
        if self.n_segments == 0 {
            return Err(invalid("n_segments", "at least one segment is required"));
        }
        Ok(())
    }

    /// Ensemble-mean DGD, `pmd_coeff * sqrt(length)`, in ps.
    pub fn mean_dgd(&self) -> f64 {
        self.pmd_coeff * self.length_km.sqrt()
    }

    /// Per-segment delay giving the requested ensemble-mean DGD. A chain of
    /// `N` random segments has `<dgd^2> = N tau^2`, and a Maxwellian has
    /// `<dgd^2> = (3 pi / 8) <dgd>^2`.
    pub fn segment_delay(&self) -> f64 {
        (3.0 * PI / 8.0).sqrt() * self.mean_dgd() / (self.n_segments as f64).sqrt()
    }
}

/// One birefringent section: Stokes-space axis and differential delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub axis: [f64; 3],
    pub delay_ps: f64,
}

/// Ordered chain of segments, input side first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberRealization {
    segments: Vec<Segment>,
}

impl FiberRealization {
    /// Validates axes (unit within `1e-9`, renormalized) and delays (finite, `>= 0`).
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("segments", "fiber has no segments"));
        }
        let segments = segments
            .into_iter()
            .map(|s| {
                let axis = StokesVector::unit(s.axis[0], s.axis[1], s.axis[2])?;
                if !(s.delay_ps >= 0.0) || !s.delay_ps.is_finite() {
                    return Err(invalid("delay_ps", format!("{} must be non-negative", s.delay_ps)));
                }
                Ok(Segment {
                    axis: axis.to_array(),
                    delay_ps: s.delay_ps,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { segments })
    }

    /// A single waveplate: pure first-order PMD with DGD `delay_ps` about `axis`.
    pub fn single_waveplate(axis: &StokesVector, delay_ps: f64) -> Result<Self> {
        let a = axis.normalized()?;
        Self::new(vec![Segment {
            axis: a.to_array(),
            delay_ps,
        }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Copy with every delay multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.segments
                .iter()
                .map(|s| Segment {
                    axis: s.axis,
                    delay_ps: s.delay_ps * factor,
                })
                .collect(),
        )
    }

    /// Splits into the first `k` segments and the rest.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        if k == 0 || k >= self.segments.len() {
            return Err(invalid("k", format!("split point {k} outside 1..{}", self.segments.len())));
        }
        let (a, b) = self.segments.split_at(k);
        Ok((Self { segments: a.to_vec() }, Self { segments: b.to_vec() }))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FiberRealization = serde_json::from_str(text)?;
        Self::new(raw.segments)
    }
}

/// Draws a fiber: i.i.d. uniform axes on the sphere and equal delays.
pub fn synthesize_fiber(spec: &FiberSpec) -> Result<FiberRealization> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    Ok(synthesize_with_rng(spec, &mut rng))
}

pub(crate) fn synthesize_with_rng<R: rand::Rng + ?Sized>(spec: &FiberSpec, rng: &mut R) -> FiberRealization {
    let delay = spec.segment_delay();
    let segments = (0..spec.n_segments)
        .map(|_| Segment {
            axis: UnitSphere.sample(rng),
            delay_ps: delay,
        })
        .collect();
    FiberRealization { segments }
}

/// Jones transfer matrix at one wavelength, `U_N ... U_2 U_1`.
pub fn transfer_unitary(fiber: &FiberRealization, wavelength_nm: f64) -> Result<JonesUnitary> {
    if !(wavelength_nm > 0.0) {
        return Err(invalid("wavelength_nm", format!("{wavelength_nm} must be positive")));
    }
    let omega = angular_frequency(wavelength_nm);
    Ok(fiber.segments.iter().fold(JonesUnitary::identity(), |acc, seg| {
        let axis = StokesVector::from_array(seg.axis);
        JonesUnitary::from_unit_axis_angle(&axis, omega * seg.delay_ps) * acc
    }))
}

/// Stokes-space rotation of the fiber at one wavelength.
pub fn transfer_rotation(fiber: &FiberRealization, wavelength_nm: f64) -> Result<PolRotation> {
    rotation_from_unitary(&transfer_unitary(fiber, wavelength_nm)?)
}

/// Strictly increasing, uniformly spaced wavelength grid in nm.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    wavelengths: Vec<f64>,
}

impl SpectralGrid {
    /// `start, start + step, ...` up to and including `stop` (within
    /// `1e-6` of a step).
    pub fn from_range(start_nm: f64, stop_nm: f64, step_nm: f64) -> Result<Self> {
        if !(step_nm > 0.0) || !(start_nm > 0.0) || !(stop_nm > start_nm) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < start < stop and step > 0, got {start_nm}..{stop_nm} step {step_nm}"
            )));
        }
        let n = ((stop_nm - start_nm) / step_nm + 1e-6).floor() as usize + 1;
        Self::new((0..n).map(|i| start_nm + i as f64 * step_nm).collect())
    }

    /// `n` points centered on `center_nm` spanning `width_nm`.
    pub fn centered(center_nm: f64, width_nm: f64, n: usize) -> Result<Self> {
        if n < 2 || !(width_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need at least two points and positive width, got {n} over {width_nm} nm"
            )));
        }
        let start = center_nm - width_nm / 2.0;
        let step = width_nm / (n - 1) as f64;
        Self::new((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn new(wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() < 2 {
            return Err(Error::InvalidGrid("at least two wavelengths are required".into()));
        }
        if wavelengths[0] <= 0.0 || wavelengths.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("wavelengths must be positive and finite".into()));
        }
        check_uniform(&wavelengths)?;
        Ok(Self { wavelengths })
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.wavelengths[self.len() - 1] - self.wavelengths[0]) / (self.len() - 1) as f64
    }

    pub fn first(&self) -> f64 {
        self.wavelengths[0]
    }

    pub fn last(&self) -> f64 {
        self.wavelengths[self.len() - 1]
    }

    /// Sub-grid of the points inside `[lo, hi]` (inclusive, `1e-9` slack).
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            self.wavelengths
                .iter()
                .copied()
                .filter(|&w| w >= lo - 1e-9 && w <= hi + 1e-9)
                .collect(),
        )
    }
}

/// Absolute spacing tolerance for uniform grids, nm.
pub const GRID_UNIFORMITY_TOL: f64 = 1e-9;

/// Checks strict increase and uniform spacing within [`GRID_UNIFORMITY_TOL`].
pub fn check_uniform(wavelengths: &[f64]) -> Result<()> {
    if wavelengths.len() < 2 {
        return Ok(());
    }
    let n = wavelengths.len();
    let step = (wavelengths[n - 1] - wavelengths[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::InvalidGrid("wavelengths must be strictly increasing".into()));
    }
    for (i, w) in wavelengths.iter().enumerate() {
        let expected = wavelengths[0] + i as f64 * step;
        if (w - expected).abs() > GRID_UNIFORMITY_TOL {
            return Err(Error::NonUniformGrid { wavelength_nm: *w });
        }
    }
    Ok(())
}

/// One point of an output polarization trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub wavelength_nm: f64,
    pub stokes: StokesVector,
}

/// Adjacent samples further apart than this risk aliasing downstream.
pub const UNDERSAMPLING_ANGLE: f64 = PI / 4.0;

/// Two adjacent trajectory samples separated by at least [`UNDERSAMPLING_ANGLE`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UndersamplingWarning {
    pub from_nm: f64,
    pub to_nm: f64,
    pub angle: f64,
}

/// Output trajectory plus any under-sampling warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub warnings: Vec<UndersamplingWarning>,
}

/// Output Stokes vector at every grid point for a fixed input state.
pub fn propagate_trajectory(
    fiber: &FiberRealization,
    input: &JonesVector,
    grid: &SpectralGrid,
) -> Result<Trajectory> {
    let samples = grid
        .wavelengths()
        .iter()
        .map(|&w| {
            let out = transfer_unitary(fiber, w)?.apply(input);
            Ok(TrajectorySample {
                wavelength_nm: w,
                stokes: out.to_stokes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = undersampling_warnings(&samples);
    for w in &warnings {
        log::warn!(
            "trajectory moves {:.3} rad between {} nm and {} nm; grid may alias",
            w.angle,
            w.from_nm,
            w.to_nm
        );
    }
    Ok(Trajectory { samples, warnings })
}

pub fn undersampling_warnings(samples: &[TrajectorySample]) -> Vec<UndersamplingWarning> {
    samples
        .windows(2)
        .filter_map(|p| {
            let angle = p[0].stokes.angle_to(&p[1].stokes);
            (angle >= UNDERSAMPLING_ANGLE).then_some(UndersamplingWarning {
                from_nm: p[0].wavelength_nm,
                to_nm: p[1].wavelength_nm,
                angle,
            })
        })
        .collect()
}

/// PMD vector at one wavelength: `omega_vec = dgd * psp`, in ps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmdVectorSample {
    pub wavelength_nm: f64,
    pub omega_vec: StokesVector,
}

impl PmdVectorSample {
    pub fn dgd(&self) -> f64 {
        self.omega_vec.norm()
    }

    /// Principal state direction, `None` when the DGD vanishes.
    pub fn axis(&self) -> Option<StokesVector> {
        let d = self.dgd();
        (d > 0.0).then(|| self.omega_vec / d)
    }
}

/// Margin below pi at which a per-step rotation is treated as aliased.
pub const ALIASING_MARGIN: f64 = 1e-3;

/// Finite-difference PMD vector between two output-frame rotations.
///
/// `R_b R_a^T` is a rotation by `angle` (in `[0, pi]`) about `n`. The DGD is
/// `angle / |omega_b - omega_a|`, and the PMD vector points along `n` when
/// the frequency increases from `a` to `b`, along `-n` otherwise, so that
/// `ds/domega = omega_vec x s`.
pub fn finite_difference_pmd(
    r_a: &PolRotation,
    wavelength_a: f64,
    r_b: &PolRotation,
    wavelength_b: f64,
) -> Result<PmdVectorSample> {
    if wavelength_a == wavelength_b {
        return Err(invalid("wavelength", "the two wavelengths must differ"));
    }
    let step = *r_b * r_a.transpose();
    let (angle, axis) = step.angle_axis();
    if angle > PI - ALIASING_MARGIN {
        return Err(Error::Aliasing {
            from_nm: wavelength_a,
            to_nm: wavelength_b,
        });
    }
    let d_omega = angular_frequency(wavelength_b) - angular_frequency(wavelength_a);
    let dgd = angle / d_omega.abs();
    let omega_vec = match axis {
        Some(n) => n.scale(dgd * d_omega.signum()),
        None => StokesVector::new(0.0, 0.0, 0.0),
    };
    Ok(PmdVectorSample {
        wavelength_nm: 0.5 * (wavelength_a + wavelength_b),
        omega_vec,
    })
}

/// PMD vector at the midpoint of every grid interval.
pub fn pmd_vector_spectrum(fiber: &FiberRealization, grid: &SpectralGrid) -> Result<Vec<PmdVectorSample>> {
    let rotations = grid
        .wavelengths()
        .iter()
        .map(|&w| transfer_rotation(fiber, w))
        .collect::<Result<Vec<_>>>()?;
    let w = grid.wavelengths();
    (0..w.len() - 1)
        .map(|i| finite_difference_pmd(&rotations[i], w[i], &rotations[i + 1], w[i + 1]))
        .collect()
}

/// `(wavelength, dgd)` at the midpoint of every grid interval.
pub fn dgd_spectrum(fiber: &FiberRealization, grid: &SpectralGrid) -> Result<Vec<(f64, f64)>> {
    Ok(pmd_vector_spectrum(fiber, grid)?
        .iter()
        .map(|s| (s.wavelength_nm, s.dgd()))
        .collect())
}

/// PMD vector centered on one wavelength from a symmetric difference of
/// width `step_nm`.
pub fn pmd_vector_at(fiber: &FiberRealization, wavelength_nm: f64, step_nm: f64) -> Result<PmdVectorSample> {
    let (a, b) = (wavelength_nm - step_nm / 2.0, wavelength_nm + step_nm / 2.0);
    let mut s = finite_difference_pmd(&transfer_rotation(fiber, a)?, a, &transfer_rotation(fiber, b)?, b)?;
    s.wavelength_nm = wavelength_nm;
    Ok(s)
}
