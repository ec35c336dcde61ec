use std::fs::File;
use std::path::{Path, PathBuf};

use pmd_core::mmm::{
    dgd_report, dgd_series, max_relative_difference, parse_declared_inputs, parse_scan, write_dgd_csv, DeclaredInput,
    ScanSet,
};
use serde::Serialize;

use super::{out_dir, parse_vector, validation};
use crate::config::MmmOptions;
use crate::output::OutDir;
use crate::svg::{line_chart, Series};
use crate::CliError;

#[derive(Serialize)]
struct Reproducibility {
    pairs: [(String, String); 2],
    max_relative_difference: f64,
}

#[derive(Serialize)]
struct Summary {
    pair: (String, String),
    wavelengths: usize,
    mean_dgd_ps: f64,
    std_dgd_ps: f64,
    delta_lambda0_nm: Option<f64>,
    undefined_psp: usize,
    valid_pairs: Vec<(String, String)>,
    reproducibility: Option<Reproducibility>,
}

fn open(path: &Path, what: &str) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Io(format!("cannot read {what} {}: {e}", path.display())))
}

/// `LABEL=s1,s2,s3`.
fn parse_declaration(text: &str) -> Result<DeclaredInput, CliError> {
    let (label, vector) = text
        .split_once('=')
        .ok_or_else(|| validation(format!("declare: expected `LABEL=s1,s2,s3`, got `{text}`")))?;
    let stokes = parse_vector(vector, "declare")?;
    let n = stokes.norm();
    if !(0.95..=1.05).contains(&n) {
        return Err(validation(format!("declare: state `{label}` has norm {n}")));
    }
    Ok(DeclaredInput {
        label: label.trim().to_string(),
        stokes: stokes / n,
    })
}

fn with_context(e: pmd_core::Error, what: &str, path: &Path) -> CliError {
    match e {
        pmd_core::Error::Io(io) => CliError::Io(format!("{what} {}: {io}", path.display())),
        other => CliError::Validation(format!("{what} {}: {other}", path.display())),
    }
}

fn label_pair(scan: &ScanSet, pair: (usize, usize)) -> (String, String) {
    (scan.inputs()[pair.0].label.clone(), scan.inputs()[pair.1].label.clone())
}

pub fn run(o: MmmOptions) -> Result<Vec<PathBuf>, CliError> {
    let scan_path = o.scan.ok_or_else(|| validation("--scan is required"))?;
    let mut declared = match &o.inputs {
        Some(p) => parse_declared_inputs(open(p, "inputs")?).map_err(|e| with_context(e, "inputs", p))?,
        None => Vec::new(),
    };
    for d in o.declare.unwrap_or_default() {
        let d = parse_declaration(&d)?;
        if declared.iter().any(|x| x.label == d.label) {
            return Err(validation(format!("state `{}` declared twice", d.label)));
        }
        declared.push(d);
    }
    if declared.is_empty() {
        return Err(validation("no launched states declared; use --inputs or --declare"));
    }
    let scan = parse_scan(open(&scan_path, "scan")?, &declared).map_err(|e| with_context(e, "scan", &scan_path))?;

    let valid: Vec<(usize, usize)> = scan
        .perpendicular_pairs()
        .into_iter()
        .filter(|p| dgd_series(&scan, *p).is_ok())
        .collect();
    let pair = match &o.pair {
        Some(text) => {
            let (a, b) = text
                .split_once(',')
                .ok_or_else(|| validation(format!("pair: expected `LABEL,LABEL`, got `{text}`")))?;
            let idx = |l: &str| {
                scan.label_index(l.trim())
                    .ok_or_else(|| validation(format!("pair: state `{l}` not in the scan")))
            };
            (idx(a)?, idx(b)?)
        }
        None => match valid.first() {
            Some(p) => *p,
            // Surfaces the frame error of the first perpendicular pair.
            None => scan.perpendicular_pairs()[0],
        },
    };
    let report = dgd_report(&scan, pair)?;

    let second = if valid.contains(&pair) {
        valid.iter().find(|p| **p != pair)
    } else {
        None
    };
    let reproducibility = match second {
        Some(other) => Some(Reproducibility {
            pairs: [label_pair(&scan, pair), label_pair(&scan, *other)],
            max_relative_difference: max_relative_difference(&report.records, &dgd_series(&scan, *other)?)?,
        }),
        None => None,
    };
    let summary = Summary {
        pair: report.pair.clone(),
        wavelengths: scan.wavelengths().len(),
        mean_dgd_ps: report.mean_dgd_ps,
        std_dgd_ps: report.std_dgd_ps,
        delta_lambda0_nm: report.delta_lambda0_nm,
        undefined_psp: report.records.iter().filter(|r| !r.psp_defined).count(),
        valid_pairs: valid.iter().map(|p| label_pair(&scan, *p)).collect(),
        reproducibility,
    };

    let mut out = OutDir::create(&out_dir(o.out))?;
    let mut bytes = Vec::new();
    write_dgd_csv(&report.records, &mut bytes)?;
    out.write("mmm_dgd.csv", &bytes)?;
    out.write_json("mmm_summary.json", &summary)?;
    if o.svg.unwrap_or(false) {
        let chart = line_chart(
            "DGD from polarimeter scan",
            "wavelength (nm)",
            "DGD (ps)",
            &[Series {
                name: "DGD",
                points: report.records.iter().map(|r| (r.wavelength_nm, r.dgd_ps)).collect(),
            }],
        );
        out.write("mmm_dgd.svg", chart.as_bytes())?;
    }
    Ok(out.written().to_vec())
}
