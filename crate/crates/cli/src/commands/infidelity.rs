use std::path::PathBuf;

use pmd_core::fiber::{dgd_spectrum, propagate_trajectory};
use pmd_core::infidelity::{dgd_bound_at, rolling_infidelity, RollingWindow};
use pmd_core::JonesVector;

use super::{grid, load_or_synthesize, out_dir, validation};
use crate::config::InfidelityOptions;
use crate::output::{num, prob, OutDir, Table};
use crate::svg::{line_chart, Series};
use crate::CliError;

pub const HEADER: [&str; 6] = ["wavelength_nm", "p_e_H", "p_e_V", "p_e_D", "p_e_A", "p_e_dgd_bound"];
pub const STATES: [&str; 4] = ["H", "V", "D", "A"];
pub const DEFAULT_WINDOW_NM: f64 = 5.0;

pub fn run(o: InfidelityOptions) -> Result<Vec<PathBuf>, CliError> {
    let fiber = load_or_synthesize(o.fiber.as_deref(), o.length_km, o.pmd_coeff, o.segments, o.seed)?;
    let grid = grid(o.start_nm, o.stop_nm, o.step_nm)?;
    let window_nm = o.window_nm.unwrap_or(DEFAULT_WINDOW_NM);
    let win = RollingWindow::fit(window_nm, grid.step(), grid.len())?;

    let mut curves = Vec::with_capacity(STATES.len());
    for label in STATES {
        let traj = propagate_trajectory(&fiber, &JonesVector::from_label(label).expect("known label"), &grid)?;
        if let Some(w) = traj.warnings.first() {
            return Err(validation(format!(
                "grid is under-sampled: input {label} moves {:.3} rad between {} nm and {} nm",
                w.angle, w.from_nm, w.to_nm
            )));
        }
        curves.push(rolling_infidelity(&traj.samples, window_nm)?);
    }
    let series = dgd_spectrum(&fiber, &grid)?;
    let bound = curves[0]
        .iter()
        .map(|(c, _)| Ok((*c, dgd_bound_at(&series, *c, win.width_nm)?)))
        .collect::<Result<Vec<(f64, f64)>, pmd_core::Error>>()?;

    let mut t = Table::new(&HEADER);
    for (i, (center, b)) in bound.iter().enumerate() {
        let mut row = vec![num(*center)];
        row.extend(curves.iter().map(|c| prob(c[i].1)));
        row.push(prob(*b));
        t.row(row);
    }
    let mut out = OutDir::create(&out_dir(o.out))?;
    out.write("infidelity.csv", &t.into_bytes())?;

    if o.svg.unwrap_or(false) {
        let mut lines: Vec<Series> = STATES
            .iter()
            .zip(&curves)
            .map(|(l, c)| Series {
                name: l,
                points: c.clone(),
            })
            .collect();
        lines.push(Series {
            name: "DGD bound",
            points: bound,
        });
        let chart = line_chart(
            &format!("Rolling infidelity, {} nm window", win.width_nm),
            "wavelength (nm)",
            "p_e",
            &lines,
        );
        out.write("infidelity.svg", chart.as_bytes())?;
    }
    Ok(out.written().to_vec())
}
