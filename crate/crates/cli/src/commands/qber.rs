use std::path::{Path, PathBuf};

use pmd_core::ensemble::analytic_mean_infidelity;
use pmd_core::stats::linear_fit;
use pmd_core::BandSpec;
use serde::Serialize;

use super::{out_dir, validation, DEFAULT_CENTER_NM};
use crate::config::QberOptions;
use crate::output::{num, prob, OutDir, Table};
use crate::svg::{line_chart, Series};
use crate::CliError;

pub const MODEL_HEADER: [&str; 2] = ["distance_km", "p_e_model"];
pub const DEFAULT_PMD_COEFF: f64 = 0.0474;
pub const DEFAULT_BANDWIDTH_NM: f64 = 2.0;

/// Measured QBER against link distance.
#[derive(Clone, Debug, PartialEq)]
pub struct QberSeries {
    pub distance_km: Vec<f64>,
    pub qber: Vec<f64>,
    pub qber_err: Option<Vec<f64>>,
}

impl QberSeries {
    pub fn new(distance_km: Vec<f64>, qber: Vec<f64>, qber_err: Option<Vec<f64>>) -> Result<Self, CliError> {
        if distance_km.len() != qber.len() || qber_err.as_ref().is_some_and(|e| e.len() != qber.len()) {
            return Err(validation("measured: column lengths differ"));
        }
        if distance_km.len() < 2 {
            return Err(validation("measured: at least two points are required"));
        }
        if distance_km.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(validation("measured: distances must be strictly increasing"));
        }
        if let Some(q) = qber.iter().find(|q| !(0.0..=0.5).contains(*q)) {
            return Err(validation(format!("measured: QBER {q} outside [0, 0.5]")));
        }
        Ok(Self {
            distance_km,
            qber,
            qber_err,
        })
    }

    /// Reads `distance_km,qber` with an optional `qber_err` column.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::Io(format!("cannot read measured {}: {e}", path.display())))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let err_at = |line: u64, msg: String| validation(format!("measured {} line {line}: {msg}", path.display()));
        let header = reader.headers().map_err(|e| err_at(1, e.to_string()))?.clone();
        let has_err = match header.iter().collect::<Vec<_>>().as_slice() {
            ["distance_km", "qber"] => false,
            ["distance_km", "qber", "qber_err"] => true,
            _ => return Err(err_at(1, "expected header `distance_km,qber[,qber_err]`".into())),
        };
        let (mut d, mut q, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for rec in reader.records() {
            let rec = rec.map_err(|e| err_at(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| -> Result<f64, CliError> {
                let raw = rec.get(i).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err_at(line, format!("cannot parse `{raw}`")))
            };
            d.push(field(0)?);
            q.push(field(1)?);
            if has_err {
                e.push(field(2)?);
            }
        }
        Self::new(d, q, has_err.then_some(e))
    }
}

#[derive(Serialize)]
struct Regression {
    n: usize,
    slope_per_km: f64,
    intercept: f64,
    r: f64,
    r_squared: f64,
}

pub fn run(o: QberOptions) -> Result<Vec<PathBuf>, CliError> {
    let pmd = o.pmd_coeff.unwrap_or(DEFAULT_PMD_COEFF);
    if !(pmd >= 0.0) {
        return Err(validation(format!("pmd-coeff {pmd} must be non-negative")));
    }
    let band = BandSpec::new(
        o.center_nm.unwrap_or(DEFAULT_CENTER_NM),
        o.bandwidth_nm.unwrap_or(DEFAULT_BANDWIDTH_NM),
    )?;
    let distances = o
        .distances_km
        .unwrap_or_else(|| (1..=10).map(|k| 10.0 * k as f64).collect());
    if distances.is_empty() || distances.iter().any(|d| !(*d > 0.0)) {
        return Err(validation("distances-km must be a non-empty list of positive values"));
    }
    let baseline = o.baseline.unwrap_or(0.0);
    if !(0.0..=0.5).contains(&baseline) {
        return Err(validation(format!("baseline {baseline} outside [0, 0.5]")));
    }
    let measured = o.measured.as_deref().map(QberSeries::read).transpose()?;

    let model: Vec<(f64, f64)> = distances
        .iter()
        .map(|&l| (l, baseline + analytic_mean_infidelity(pmd, l, &band)))
        .collect();
    let mut t = Table::new(&MODEL_HEADER);
    for (l, p) in &model {
        t.row([num(*l), prob(*p)]);
    }
    let mut out = OutDir::create(&out_dir(o.out))?;
    out.write("qber_model.csv", &t.into_bytes())?;

    if let Some(m) = &measured {
        let fit = linear_fit(&m.distance_km, &m.qber).ok_or_else(|| validation("measured: regression is undefined"))?;
        out.write_json(
            "qber_regression.json",
            &Regression {
                n: m.qber.len(),
                slope_per_km: fit.slope,
                intercept: fit.intercept,
                r: fit.r,
                r_squared: fit.r_squared(),
            },
        )?;
    }
    if o.svg.unwrap_or(false) {
        let mut lines = vec![Series {
            name: "model",
            points: model.clone(),
        }];
        if let Some(m) = &measured {
            lines.push(Series {
                name: "measured",
                points: m.distance_km.iter().copied().zip(m.qber.iter().copied()).collect(),
            });
        }
        let chart = line_chart("QBER versus distance", "distance (km)", "QBER", &lines);
        out.write("qber_model.svg", chart.as_bytes())?;
    }
    Ok(out.written().to_vec())
}
