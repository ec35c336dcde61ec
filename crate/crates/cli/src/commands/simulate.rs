use std::path::PathBuf;

use pmd_core::fiber::{pmd_vector_spectrum, propagate_trajectory};
use pmd_core::mmm::{write_dgd_csv, DgdRecord, ScanSet};
use pmd_core::JonesVector;

use super::{grid, load_or_synthesize, out_dir, validation};
use crate::config::SimulateOptions;
use crate::output::{num, OutDir, Table};
use crate::svg::{line_chart, Series};
use crate::CliError;

pub const TRAJECTORY_HEADER: [&str; 4] = ["wavelength_nm", "s1", "s2", "s3"];
pub const DEFAULT_INPUTS: [&str; 4] = ["H", "V", "D", "A"];
/// States launched for the synthetic polarimeter scan.
pub const SCAN_STATES: [&str; 3] = ["H", "D", "R"];

pub fn run(o: SimulateOptions) -> Result<Vec<PathBuf>, CliError> {
    let fiber = load_or_synthesize(o.fiber.as_deref(), o.length_km, o.pmd_coeff, o.segments, o.seed)?;
    let grid = grid(o.start_nm, o.stop_nm, o.step_nm)?;
    let labels = o
        .inputs
        .unwrap_or_else(|| DEFAULT_INPUTS.iter().map(|s| s.to_string()).collect());
    if labels.is_empty() {
        return Err(validation("inputs: at least one input state is required"));
    }
    let mut out = OutDir::create(&out_dir(o.out))?;

    out.write("fiber.json", format!("{}\n", fiber.to_json()?).as_bytes())?;

    let mut first_traj = None;
    for label in &labels {
        let input = JonesVector::from_label(label)
            .ok_or_else(|| validation(format!("inputs: unknown state `{label}` (use H, V, D, A, R, L)")))?;
        let traj = propagate_trajectory(&fiber, &input, &grid)?;
        let mut t = Table::new(&TRAJECTORY_HEADER);
        for s in &traj.samples {
            t.row([num(s.wavelength_nm), num(s.stokes.s1), num(s.stokes.s2), num(s.stokes.s3)]);
        }
        out.write(&format!("trajectory_{label}.csv"), &t.into_bytes())?;
        first_traj.get_or_insert((label.clone(), traj.samples));
    }

    let records: Vec<DgdRecord> = pmd_vector_spectrum(&fiber, &grid)?.iter().map(DgdRecord::from).collect();
    let mut dgd = Vec::new();
    write_dgd_csv(&records, &mut dgd)?;
    out.write("dgd.csv", &dgd)?;

    let launched: Vec<(String, JonesVector)> = SCAN_STATES
        .iter()
        .map(|l| (l.to_string(), JonesVector::from_label(l).expect("known label")))
        .collect();
    let scan = ScanSet::synthesize(&fiber, &grid, &launched)?;
    let mut bytes = Vec::new();
    scan.write_csv(&mut bytes)?;
    out.write("scan.csv", &bytes)?;
    let mut bytes = Vec::new();
    scan.write_inputs_csv(&mut bytes)?;
    out.write("scan_inputs.csv", &bytes)?;

    if o.svg.unwrap_or(false) {
        if let Some((label, samples)) = first_traj {
            let comp = |f: fn(&pmd_core::StokesVector) -> f64| samples.iter().map(|s| (s.wavelength_nm, f(&s.stokes))).collect();
            let chart = line_chart(
                &format!("Output Stokes parameters, input {label}"),
                "wavelength (nm)",
                "Stokes parameter",
                &[
                    Series { name: "s1", points: comp(|s| s.s1) },
                    Series { name: "s2", points: comp(|s| s.s2) },
                    Series { name: "s3", points: comp(|s| s.s3) },
                ],
            );
            out.write("trajectory.svg", chart.as_bytes())?;
        }
        let chart = line_chart(
            "Differential group delay",
            "wavelength (nm)",
            "DGD (ps)",
            &[Series {
                name: "DGD",
                points: records.iter().map(|r| (r.wavelength_nm, r.dgd_ps)).collect(),
            }],
        );
        out.write("dgd.svg", chart.as_bytes())?;
    }
    Ok(out.written().to_vec())
}
