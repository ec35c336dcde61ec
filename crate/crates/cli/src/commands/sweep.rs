use std::path::PathBuf;

use pmd_core::ensemble::{ensemble_mean_infidelity, EnsembleOptions};

use super::{out_dir, validation, DEFAULT_CENTER_NM, DEFAULT_PMD_COEFF, DEFAULT_SEED};
use crate::config::SweepOptions;
use crate::output::{num, prob, OutDir, Table};
use crate::svg::{line_chart, Series};
use crate::CliError;

pub const HEADER: [&str; 5] = ["distance_km", "bandwidth_nm", "p_e_mean", "p_e_std", "p_e_dgd_method"];
pub const DEFAULT_LENGTHS_KM: [f64; 5] = [10.0, 20.0, 50.0, 100.0, 200.0];
pub const DEFAULT_WIDTHS_NM: [f64; 1] = [2.0];
pub const DEFAULT_REALIZATIONS: usize = 200;

pub fn run(o: SweepOptions) -> Result<Vec<PathBuf>, CliError> {
    let lengths = o.lengths_km.unwrap_or_else(|| DEFAULT_LENGTHS_KM.to_vec());
    let widths = o.widths_nm.unwrap_or_else(|| DEFAULT_WIDTHS_NM.to_vec());
    if lengths.is_empty() || widths.is_empty() {
        return Err(validation("sweep lists must not be empty"));
    }
    let defaults = EnsembleOptions::default();
    let opts = EnsembleOptions {
        center_nm: o.center_nm.unwrap_or(DEFAULT_CENTER_NM),
        n_segments: o.segments.unwrap_or(defaults.n_segments),
        samples_per_band: o.samples_per_band.unwrap_or(defaults.samples_per_band),
    };
    let rows = ensemble_mean_infidelity(
        o.pmd_coeff.unwrap_or(DEFAULT_PMD_COEFF),
        &lengths,
        &widths,
        o.realizations.unwrap_or(DEFAULT_REALIZATIONS),
        o.seed.unwrap_or(DEFAULT_SEED),
        &opts,
    )?;

    let mut t = Table::new(&HEADER);
    for r in &rows {
        t.row([num(r.length_km), num(r.width_nm), prob(r.mean), prob(r.std), prob(r.dgd_method)]);
    }
    let mut out = OutDir::create(&out_dir(o.out))?;
    out.write("sweep.csv", &t.into_bytes())?;

    if o.svg.unwrap_or(false) {
        // One curve per width against distance, or per length against width.
        let by_length = lengths.len() > 1;
        let names: Vec<String> = if by_length {
            widths.iter().map(|w| format!("{w} nm")).collect()
        } else {
            lengths.iter().map(|l| format!("{l} km")).collect()
        };
        let mut lines = Vec::new();
        for (k, name) in names.iter().enumerate() {
            let points = rows
                .iter()
                .enumerate()
                .filter(|(i, _)| if by_length { i % widths.len() == k } else { i / widths.len() == k })
                .map(|(_, r)| (if by_length { r.length_km } else { r.width_nm }, r.mean))
                .collect();
            lines.push(Series { name, points });
        }
        let x_label = if by_length { "distance (km)" } else { "bandwidth (nm)" };
        let chart = line_chart("Ensemble mean infidelity", x_label, "p_e", &lines);
        out.write("sweep.svg", chart.as_bytes())?;
    }
    Ok(out.written().to_vec())
}
