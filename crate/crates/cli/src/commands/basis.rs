use std::path::PathBuf;

use pmd_core::fiber::{dgd_spectrum, pmd_vector_at, SpectralGrid};
use pmd_core::infidelity::arc_angle;
use pmd_core::protocol::{
    higher_order_report, optimize_orientation, protocol_error_budget, psp_two_channel_infidelity,
    six_state_average, six_state_spread, CanonicalGeometry, ErrorBudget, FourStateCircle, Geometry,
    HigherOrderReport, Objective, ProtocolKind, ProtocolSpec, Triad, PSP_STEP_NM,
};
use pmd_core::stats::mean;
use pmd_core::{BandSpec, StokesVector};
use serde::Serialize;

use super::{out_dir, parse_vector, read_fiber, validation, DEFAULT_CENTER_NM, DEFAULT_SEED};
use crate::config::BasisOptions;
use crate::output::OutDir;
use crate::CliError;

pub const DEFAULT_DELTA_THETA: f64 = 1.0;
pub const DEFAULT_WIDTH_NM: f64 = 20.0;
pub const DEFAULT_STEP_NM: f64 = 0.05;
pub const DEFAULT_ORIENTATIONS: usize = 100;
/// PSP arc used for the reference two-channel estimate, rad.
pub const REFERENCE_PSP_ARC: f64 = 0.35;
/// Field estimate quoted for that arc, probability.
pub const REFERENCE_FIELD_ESTIMATE: f64 = 0.004;

#[derive(Serialize)]
struct GeometryResult {
    name: CanonicalGeometry,
    circle: FourStateCircle,
    budget: ErrorBudget,
    /// Weighted average over that of the orthogonal geometry.
    relative_to_orthogonal: f64,
}

#[derive(Serialize)]
struct SixStateResult {
    standard_triad: f64,
    orientations: usize,
    mean: f64,
    std: f64,
    expected: f64,
}

#[derive(Serialize)]
struct OptimizerResult {
    objective: String,
    alpha: f64,
    circle: FourStateCircle,
    budget: ErrorBudget,
}

#[derive(Serialize)]
struct PspReference {
    psp_arc: f64,
    p_e_psp_two_channel: f64,
    field_estimate: f64,
    note: String,
}

#[derive(Serialize)]
struct Study {
    protocol: ProtocolSpec,
    omega_axis: StokesVector,
    delta_theta: f64,
    geometries: Vec<GeometryResult>,
    budget: Option<ErrorBudget>,
    six_state: SixStateResult,
    optimizer: Option<OptimizerResult>,
    higher_order: Option<HigherOrderReport>,
    psp_reference: PspReference,
}

fn parse_protocol(o: &BasisOptions) -> Result<ProtocolSpec, CliError> {
    match o.protocol.as_deref().unwrap_or("bb84") {
        "bb84" => Ok(ProtocolSpec::bb84(o.p_z.unwrap_or(0.5))?),
        "six-state" => Ok(ProtocolSpec::six_state()),
        other => Err(validation(format!("protocol: unknown `{other}` (use bb84 or six-state)"))),
    }
}

fn parse_objective(o: &BasisOptions) -> Result<Objective, CliError> {
    match o.objective.as_deref().unwrap_or("min-weighted") {
        "min-weighted" => Ok(Objective::MinWeighted),
        "balance-ratio" => Ok(Objective::BalanceRatio(o.ratio.unwrap_or(1.0))),
        other => Err(validation(format!("objective: unknown `{other}` (use min-weighted or balance-ratio)"))),
    }
}

pub fn run(o: BasisOptions) -> Result<Vec<PathBuf>, CliError> {
    let protocol = parse_protocol(&o)?;
    let objective = parse_objective(&o)?;

    let (omega_axis, delta_theta, higher_order) = match &o.fiber {
        Some(path) => {
            let fiber = read_fiber(path)?;
            let band = BandSpec::new(
                o.center_nm.unwrap_or(DEFAULT_CENTER_NM),
                o.width_nm.unwrap_or(DEFAULT_WIDTH_NM),
            )?;
            let grid = SpectralGrid::from_range(band.lower_nm(), band.upper_nm(), o.step_nm.unwrap_or(DEFAULT_STEP_NM))?;
            let axis = pmd_vector_at(&fiber, band.center_nm, PSP_STEP_NM)?
                .axis()
                .ok_or_else(|| validation("fiber has no DGD at the band center; PMD axis undefined"))?;
            let dgd: Vec<f64> = dgd_spectrum(&fiber, &grid)?.iter().map(|d| d.1).collect();
            let theta = arc_angle(mean(&dgd), &band);
            (axis, theta, Some(higher_order_report(&fiber, &band, &grid)?))
        }
        None => {
            let axis = match &o.omega_axis {
                Some(text) => parse_vector(text, "omega-axis")?
                    .normalized()
                    .map_err(|_| validation("omega-axis must be non-zero"))?,
                None => StokesVector::S3,
            };
            (axis, o.delta_theta.unwrap_or(DEFAULT_DELTA_THETA), None)
        }
    };
    if !(delta_theta >= 0.0) {
        return Err(validation(format!("delta-theta {delta_theta} must be non-negative")));
    }

    let mut geometries = Vec::new();
    let mut optimizer = None;
    let budget = match protocol.kind {
        ProtocolKind::Bb84 => {
            let mut base = None;
            for g in CanonicalGeometry::ALL {
                let circle = g.circle(&omega_axis)?;
                let budget = protocol_error_budget(&protocol, &Geometry::Circle(circle), &omega_axis, delta_theta)?;
                let reference = *base.get_or_insert(budget.weighted_average);
                geometries.push(GeometryResult {
                    name: g,
                    circle,
                    relative_to_orthogonal: if reference > 0.0 { budget.weighted_average / reference } else { 0.0 },
                    budget,
                });
            }
            let best = optimize_orientation(&protocol, &omega_axis, delta_theta, objective)?;
            optimizer = Some(OptimizerResult {
                objective: match objective {
                    Objective::MinWeighted => "min-weighted".into(),
                    Objective::BalanceRatio(r) => format!("balance-ratio {r}"),
                },
                alpha: best.alpha,
                circle: best.circle,
                budget: best.budget,
            });
            None
        }
        ProtocolKind::SixState => Some(protocol_error_budget(
            &protocol,
            &Geometry::Triad(Triad::standard()),
            &omega_axis,
            delta_theta,
        )?),
    };

    let n = o.orientations.unwrap_or(DEFAULT_ORIENTATIONS);
    let (six_mean, six_std) = six_state_spread(&omega_axis, delta_theta, n, o.seed.unwrap_or(DEFAULT_SEED))?;
    let six_state = SixStateResult {
        standard_triad: six_state_average(&Triad::standard(), &omega_axis, delta_theta)?,
        orientations: n,
        mean: six_mean,
        std: six_std,
        expected: (1.0 - pmd_core::infidelity::sinc(delta_theta / 2.0)) / 3.0,
    };

    let p_ref = psp_two_channel_infidelity(REFERENCE_PSP_ARC);
    let psp_reference = PspReference {
        psp_arc: REFERENCE_PSP_ARC,
        p_e_psp_two_channel: p_ref,
        field_estimate: REFERENCE_FIELD_ESTIMATE,
        note: format!(
            "2*arc^2/48 gives {:.4} for a {REFERENCE_PSP_ARC} rad arc, {:.2}x the {REFERENCE_FIELD_ESTIMATE} field estimate; \
             the gap is within the order-of-magnitude scope of the estimate and may reflect an orientation factor or a different arc definition",
            p_ref,
            p_ref / REFERENCE_FIELD_ESTIMATE
        ),
    };

    let study = Study {
        protocol,
        omega_axis,
        delta_theta,
        geometries,
        budget,
        six_state,
        optimizer,
        higher_order,
        psp_reference,
    };
    let mut out = OutDir::create(&out_dir(o.out))?;
    out.write_json("basis_study.json", &study)?;
    Ok(out.written().to_vec())
}
