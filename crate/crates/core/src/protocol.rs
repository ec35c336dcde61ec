//! Measurement-basis geometry relative to the PMD vector.
//!
//! A BB84/BBM92 measurement uses four states on a great circle of the
//! Poincare sphere (two mutually unbiased bases); the six-state protocol
//! uses the six vertices of an octahedron. Each state picks up the
//! first-order arc error of its angle to the PMD vector, so the geometry
//! decides how errors split between bases.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand_distr::{Distribution, UnitSphere};
use serde::Serialize;

use crate::fiber::{
    dgd_spectrum, pmd_vector_at, pmd_vector_spectrum, stream_rng, transfer_unitary, FiberRealization,
    SpectralGrid, Trajectory, TrajectorySample, C_NM_PER_PS,
};
use crate::infidelity::{arc_angle, closed_form_infidelity, trajectory_infidelity, ArcParams, BandSpec};
use crate::mmm::{oscillation_half_period, EXTREMUM_PROMINENCE_PS};
use crate::polarization::{stokes_to_jones, JonesUnitary, JonesVector, StokesVector};
use crate::stats::{mean, std_dev};
use crate::{invalid, Error, Result};

/// Tolerance on unit length and orthogonality of geometry inputs.
pub const GEOMETRY_TOL: f64 = 1e-10;

/// Symmetric-difference step for PSPs at a single wavelength, nm.
pub const PSP_STEP_NM: f64 = 0.01;

/// Smallest DGD for which PSPs are treated as defined, ps.
pub const MIN_PSP_DGD_PS: f64 = 1e-6;

fn check_unit(v: &StokesVector, name: &'static str) -> Result<()> {
    if (v.norm() - 1.0).abs() > GEOMETRY_TOL {
        return Err(invalid(name, format!("norm {} is not 1", v.norm())));
    }
    Ok(())
}

/// Some unit vector perpendicular to `v`: the plane projection of `S1`,
/// or of `S2` when `v` is within about 25 degrees of the `S1` axis.
fn perpendicular(v: &StokesVector) -> StokesVector {
    let seed = if v.s1.abs() > 0.9 { StokesVector::S2 } else { StokesVector::S1 };
    seed.sub(&v.scale(seed.dot(v))).normalized().expect("seed is not parallel to v")
}

/// Four measurement states on a great circle, 90 degrees apart.
///
/// State `k` sits at `phase + k pi/2` from `reference` inside the plane
/// with unit normal `normal`. States 0 and 2 form basis Z, 1 and 3 basis X.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FourStateCircle {
    pub normal: StokesVector,
    pub phase: f64,
    reference: StokesVector,
}

impl FourStateCircle {
    /// Circle with the default in-plane reference: the projection of `S1`
    /// onto the plane (of `S2` if the normal is close to `S1`).
    pub fn new(normal: StokesVector, phase: f64) -> Result<Self> {
        check_unit(&normal, "normal")?;
        Ok(Self {
            normal,
            phase,
            reference: perpendicular(&normal),
        })
    }

    /// Circle whose phase is measured from an explicit in-plane reference.
    pub fn with_reference(normal: StokesVector, reference: StokesVector, phase: f64) -> Result<Self> {
        check_unit(&normal, "normal")?;
        check_unit(&reference, "reference")?;
        if normal.dot(&reference).abs() > GEOMETRY_TOL {
            return Err(invalid("reference", "must lie in the circle plane"));
        }
        Ok(Self {
            normal,
            phase,
            reference,
        })
    }

    /// Circle through `axis`, with state 0 at angle `alpha` from it.
    pub fn containing_axis(axis: &StokesVector, alpha: f64) -> Result<Self> {
        check_unit(axis, "axis")?;
        Self::with_reference(perpendicular(axis), *axis, alpha)
    }

    pub fn reference(&self) -> StokesVector {
        self.reference
    }

    /// Stokes vectors of the four states.
    pub fn states(&self) -> [StokesVector; 4] {
        let e1 = self.reference;
        let e2 = self.normal.cross(&e1);
        std::array::from_fn(|k| {
            let a = self.phase + k as f64 * FRAC_PI_2;
            e1.scale(a.cos()).add(&e2.scale(a.sin()))
        })
    }

    pub fn jones_states(&self) -> Result<[JonesVector; 4]> {
        let s = self.states();
        Ok([
            stokes_to_jones(&s[0])?,
            stokes_to_jones(&s[1])?,
            stokes_to_jones(&s[2])?,
            stokes_to_jones(&s[3])?,
        ])
    }
}

/// Orthonormal Stokes triad; the six states are `+-e_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Triad {
    axes: [StokesVector; 3],
}

impl Triad {
    pub fn new(axes: [StokesVector; 3]) -> Result<Self> {
        for a in &axes {
            check_unit(a, "triad")?;
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if axes[i].dot(&axes[j]).abs() > GEOMETRY_TOL {
                return Err(invalid("triad", format!("axes {i} and {j} are not orthogonal")));
            }
        }
        Ok(Self { axes })
    }

    pub fn standard() -> Self {
        Self {
            axes: [StokesVector::S1, StokesVector::S2, StokesVector::S3],
        }
    }

    pub fn axes(&self) -> &[StokesVector; 3] {
        &self.axes
    }

    /// `e1, -e1, e2, -e2, e3, -e3`.
    pub fn states(&self) -> [StokesVector; 6] {
        let a = &self.axes;
        [a[0], a[0].neg(), a[1], a[1].neg(), a[2], a[2].neg()]
    }
}

/// Basis geometry evaluated by [`protocol_error_budget`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Circle(FourStateCircle),
    Triad(Triad),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Bb84,
    SixState,
}

/// Protocol family and basis-choice probabilities (Z, X[, Y]).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub basis_probs: Vec<f64>,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, basis_probs: Vec<f64>) -> Result<Self> {
        let expected = match kind {
            ProtocolKind::Bb84 => 2,
            ProtocolKind::SixState => 3,
        };
        if basis_probs.len() != expected {
            return Err(invalid(
                "basis_probs",
                format!("{kind:?} needs {expected} probabilities, got {}", basis_probs.len()),
            ));
        }
        if basis_probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(invalid("basis_probs", "each probability must lie in (0, 1)"));
        }
        let total: f64 = basis_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("basis_probs", format!("probabilities sum to {total}")));
        }
        Ok(Self { kind, basis_probs })
    }

    /// BB84 with probability `p_z` of choosing basis Z.
    pub fn bb84(p_z: f64) -> Result<Self> {
        Self::new(ProtocolKind::Bb84, vec![p_z, 1.0 - p_z])
    }

    pub fn six_state() -> Self {
        Self {
            kind: ProtocolKind::SixState,
            basis_probs: vec![1.0 / 3.0; 3],
        }
    }
}

/// PMD error per state, per basis, and weighted by basis probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub per_state: Vec<f64>,
    pub per_basis: Vec<f64>,
    pub weighted_average: f64,
}

/// Angle between a state and the PMD axis, folded into `[0, pi/2]`.
fn folded_angle(state: &StokesVector, axis: &StokesVector) -> f64 {
    let a = state.angle_to(axis);
    if a > FRAC_PI_2 {
        PI - a
    } else {
        a
    }
}

/// Angle of each circle state to the PMD axis, folded into `[0, pi/2]`.
pub fn state_pmd_angles(circle: &FourStateCircle, omega_axis: &StokesVector) -> Result<[f64; 4]> {
    check_unit(omega_axis, "omega_axis")?;
    let s = circle.states();
    Ok(std::array::from_fn(|k| folded_angle(&s[k], omega_axis)))
}

fn budget_from_states(states: &[StokesVector], probs: &[f64], axis: &StokesVector, delta_theta: f64) -> Result<ErrorBudget> {
    let per_state = states
        .iter()
        .map(|s| Ok(closed_form_infidelity(&ArcParams::new(delta_theta, folded_angle(s, axis))?)))
        .collect::<Result<Vec<f64>>>()?;
    let per_basis: Vec<f64> = (0..probs.len()).map(|b| 0.5 * (per_state[2 * b] + per_state[2 * b + 1])).collect();
    let weighted_average = per_basis.iter().zip(probs).map(|(e, p)| e * p).sum();
    Ok(ErrorBudget {
        per_state,
        per_basis,
        weighted_average,
    })
}

/// Closed-form arc error of every state for a PMD arc of `delta_theta`
/// about `omega_axis`.
pub fn protocol_error_budget(
    protocol: &ProtocolSpec,
    geometry: &Geometry,
    omega_axis: &StokesVector,
    delta_theta: f64,
) -> Result<ErrorBudget> {
    check_unit(omega_axis, "omega_axis")?;
    match (protocol.kind, geometry) {
        (ProtocolKind::Bb84, Geometry::Circle(c)) => {
            // Basis Z holds states 0 and 2, basis X states 1 and 3.
            let s = c.states();
            budget_from_states(&[s[0], s[2], s[1], s[3]], &protocol.basis_probs, omega_axis, delta_theta).map(|mut b| {
                b.per_state = vec![b.per_state[0], b.per_state[2], b.per_state[1], b.per_state[3]];
                b
            })
        }
        (ProtocolKind::SixState, Geometry::Triad(t)) => {
            budget_from_states(&t.states(), &protocol.basis_probs, omega_axis, delta_theta)
        }
        (kind, _) => Err(Error::GeometryMismatch(format!(
            "{kind:?} needs a {}",
            match kind {
                ProtocolKind::Bb84 => "four-state circle",
                ProtocolKind::SixState => "triad",
            }
        ))),
    }
}

/// Equal-weight average over the six states of a triad.
pub fn six_state_average(triad: &Triad, omega_axis: &StokesVector, delta_theta: f64) -> Result<f64> {
    Ok(protocol_error_budget(&ProtocolSpec::six_state(), &Geometry::Triad(*triad), omega_axis, delta_theta)?
        .per_state
        .iter()
        .sum::<f64>()
        / 6.0)
}

/// Random triad for realization `index` of `seed`: two uniform directions
/// orthonormalized.
pub fn random_triad(seed: u64, index: u64) -> Triad {
    let mut rng = stream_rng(seed, index);
    loop {
        let a = StokesVector::from_array(UnitSphere.sample(&mut rng));
        let b = StokesVector::from_array(UnitSphere.sample(&mut rng));
        if a.cross(&b).norm() < 1e-3 {
            continue;
        }
        let e2 = b.sub(&a.scale(b.dot(&a))).normalized().expect("b is not parallel to a");
        return Triad {
            axes: [a, e2, a.cross(&e2)],
        };
    }
}

/// Mean and standard deviation of [`six_state_average`] over `n` random
/// triads.
pub fn six_state_spread(omega_axis: &StokesVector, delta_theta: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    let values = (0..n as u64)
        .map(|i| six_state_average(&random_triad(seed, i), omega_axis, delta_theta))
        .collect::<Result<Vec<f64>>>()?;
    Ok((mean(&values), std_dev(&values)))
}

/// Canonical circle orientations relative to the PMD axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalGeometry {
    /// PMD vector normal to the circle: every state on a great-circle arc.
    Orthogonal,
    /// PMD vector in the plane through the basis-Z states.
    InPlaneOnStates,
    /// PMD vector in the plane, midway between the bases.
    InPlaneSymmetric,
}

impl CanonicalGeometry {
    pub const ALL: [CanonicalGeometry; 3] = [Self::Orthogonal, Self::InPlaneOnStates, Self::InPlaneSymmetric];

    pub fn circle(&self, omega_axis: &StokesVector) -> Result<FourStateCircle> {
        match self {
            Self::Orthogonal => FourStateCircle::new(*omega_axis, 0.0),
            Self::InPlaneOnStates => FourStateCircle::containing_axis(omega_axis, 0.0),
            Self::InPlaneSymmetric => FourStateCircle::containing_axis(omega_axis, FRAC_PI_4),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// Minimize the basis-probability weighted error.
    MinWeighted,
    /// Per-basis error ratio `p_e(Z) / p_e(X)` equal to the given value.
    BalanceRatio(f64),
}

/// Result of [`optimize_orientation`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orientation {
    /// Angle of the basis-Z states from the PMD axis.
    pub alpha: f64,
    pub circle: FourStateCircle,
    pub budget: ErrorBudget,
}

/// Best BB84 circle among those containing the PMD axis.
///
/// On such a circle basis Z sits at `alpha` from the axis and X at
/// `pi/2 - alpha`, so the per-basis errors scale as `sin^2 alpha` and
/// `cos^2 alpha`.
pub fn optimize_orientation(
    protocol: &ProtocolSpec,
    omega_axis: &StokesVector,
    delta_theta: f64,
    objective: Objective,
) -> Result<Orientation> {
    if protocol.kind != ProtocolKind::Bb84 {
        return Err(Error::GeometryMismatch("orientation search applies to BB84 circles".into()));
    }
    let (p_z, p_x) = (protocol.basis_probs[0], protocol.basis_probs[1]);
    let alpha = match objective {
        // The weighted error is linear in sin^2 alpha.
        Objective::MinWeighted => {
            if p_z > p_x {
                0.0
            } else if p_x > p_z {
                FRAC_PI_2
            } else {
                FRAC_PI_4
            }
        }
        Objective::BalanceRatio(r) => {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid("ratio", format!("{r} is not reachable")));
            }
            r.sqrt().atan()
        }
    };
    let circle = FourStateCircle::containing_axis(omega_axis, alpha)?;
    let budget = protocol_error_budget(protocol, &Geometry::Circle(circle), omega_axis, delta_theta)?;
    Ok(Orientation { alpha, circle, budget })
}

/// Polarization controller settings that put the PSPs on `H` and `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub wavelength_nm: f64,
    /// Output PSP (Stokes direction of the PMD vector) at the wavelength.
    pub psp: StokesVector,
    /// Maps the output PSPs onto `H` and `V`.
    pub u1: JonesUnitary,
    /// `u1 * U(lambda0)`.
    pub u2: JonesUnitary,
}

/// `U1 = |H><p1| + |V><p2|` from the PSPs at `lambda0`, and `U2 = U1 U(lambda0)`.
pub fn alignment_unitaries(fiber: &FiberRealization, lambda0_nm: f64) -> Result<Alignment> {
    let pmd = pmd_vector_at(fiber, lambda0_nm, PSP_STEP_NM)?;
    let dgd = pmd.dgd();
    let psp = match pmd.axis() {
        Some(a) if dgd >= MIN_PSP_DGD_PS => a,
        _ => {
            return Err(Error::UndefinedPsp {
                wavelength_nm: lambda0_nm,
                dgd_ps: dgd,
            })
        }
    };
    let p1 = stokes_to_jones(&psp)?;
    let p2 = p1.orthogonal();
    let u1 = JonesUnitary::from_basis_map(&p1, &p2, &JonesVector::H, &JonesVector::V)?;
    let u2 = u1 * transfer_unitary(fiber, lambda0_nm)?;
    Ok(Alignment {
        wavelength_nm: lambda0_nm,
        psp,
        u1,
        u2,
    })
}

impl Alignment {
    /// Channel with both controllers in place, `U1 U(lambda) U2^dagger`;
    /// the identity at `lambda0`.
    pub fn effective_channel(&self, fiber: &FiberRealization, wavelength_nm: f64) -> Result<JonesUnitary> {
        Ok(self.u1 * transfer_unitary(fiber, wavelength_nm)? * self.u2.adjoint())
    }

    /// Output trajectory of `input` through [`Self::effective_channel`].
    pub fn trajectory(&self, fiber: &FiberRealization, input: &JonesVector, grid: &SpectralGrid) -> Result<Trajectory> {
        let samples = grid
            .wavelengths()
            .iter()
            .map(|&w| {
                Ok(TrajectorySample {
                    wavelength_nm: w,
                    stokes: self.effective_channel(fiber, w)?.apply(input).to_stokes(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let warnings = crate::fiber::undersampling_warnings(&samples);
        Ok(Trajectory { samples, warnings })
    }
}

/// Sum of angles between successive defined PSP directions.
pub fn psp_arc(samples: &[crate::fiber::PmdVectorSample]) -> f64 {
    let axes: Vec<StokesVector> = samples.iter().filter_map(|s| s.axis()).collect();
    axes.windows(2).map(|p| p[0].angle_to(&p[1])).sum()
}

/// Two channels each drifting by `arc` off the pole: `2 arc^2 / 48`.
pub fn psp_two_channel_infidelity(arc: f64) -> f64 {
    2.0 * arc * arc / 48.0
}

/// Estimates of higher-order PMD contributions over one band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HigherOrderReport {
    pub center_nm: f64,
    pub width_nm: f64,
    pub mean_dgd_ps: f64,
    /// Half-period of DGD oscillations, nm.
    pub delta_lambda0_nm: Option<f64>,
    /// `delta_lambda0 * mean_dgd * domega/dlambda`, rad.
    pub delta_theta0: Option<f64>,
    /// `(delta_theta0 / 4)^2 / 48`.
    pub p_e_osc: Option<f64>,
    /// Accumulated angular path of the PSP across the band, rad.
    pub psp_arc: f64,
    pub p_e_psp_two_channel: f64,
    /// Closed-form first-order error of a great-circle arc at the mean DGD.
    pub p_e_first_order: f64,
    /// Trajectory error of the PSP-aligned state through the aligned
    /// channel over the band (zero for pure first-order fibers).
    pub p_e_aligned_residual: Option<f64>,
}

/// Higher-order PMD estimates for `band`, sampled on the points of `grid`
/// inside it.
pub fn higher_order_report(fiber: &FiberRealization, band: &BandSpec, grid: &SpectralGrid) -> Result<HigherOrderReport> {
    if band.lower_nm() < grid.first() - 1e-9 || band.upper_nm() > grid.last() + 1e-9 {
        return Err(invalid(
            "band",
            format!("{}..{} nm lies outside the grid", band.lower_nm(), band.upper_nm()),
        ));
    }
    let sub = grid.restrict(band.lower_nm(), band.upper_nm())?;
    if sub.len() < 3 {
        return Err(invalid("band", "fewer than three grid points inside the band"));
    }
    let series = dgd_spectrum(fiber, &sub)?;
    let dgd: Vec<f64> = series.iter().map(|s| s.1).collect();
    let mean_dgd = mean(&dgd);

    let delta_lambda0 = oscillation_half_period(&series, EXTREMUM_PROMINENCE_PS);
    // domega/dlambda at the band center, rad/ps per nm.
    let domega_dlambda = 2.0 * PI * C_NM_PER_PS / (band.center_nm * band.center_nm);
    let delta_theta0 = delta_lambda0.map(|d| d * mean_dgd * domega_dlambda);
    let p_e_osc = delta_theta0.map(|t| (t / 4.0).powi(2) / 48.0);

    let arc = psp_arc(&pmd_vector_spectrum(fiber, &sub)?);
    let p_e_first_order = closed_form_infidelity(&ArcParams::great_circle(arc_angle(mean_dgd, band))?);

    let p_e_aligned_residual = match alignment_unitaries(fiber, band.center_nm) {
        Ok(al) => {
            let traj = al.trajectory(fiber, &JonesVector::H, &sub)?;
            Some(trajectory_infidelity(&traj.samples, Some(&JonesVector::H))?)
        }
        Err(Error::UndefinedPsp { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(HigherOrderReport {
        center_nm: band.center_nm,
        width_nm: band.width_nm,
        mean_dgd_ps: mean_dgd,
        delta_lambda0_nm: delta_lambda0,
        delta_theta0,
        p_e_osc,
        psp_arc: arc,
        p_e_psp_two_channel: psp_two_channel_infidelity(arc),
        p_e_first_order,
        p_e_aligned_residual,
    })
}
