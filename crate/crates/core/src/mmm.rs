//! Mueller Matrix Method (MMM) analysis of polarimeter frequency scans.
//!
//! At every wavelength the outputs of two launched states with perpendicular
//! Stokes vectors fix the channel's Stokes rotation. The rotation between
//! adjacent wavelengths then gives the DGD (angle over frequency step) and
//! the PSP (rotation axis).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::fiber::{finite_difference_pmd, transfer_unitary, FiberRealization, PmdVectorSample, SpectralGrid};
use crate::polarization::{JonesVector, PolRotation, StokesVector};
use crate::stats::{local_extrema, mean, std_dev};
use crate::{invalid, Error, Result};

/// Accepted polarimeter degree-of-polarization window before renormalization.
pub const DOP_RANGE: (f64, f64) = (0.95, 1.05);

/// Launched states count as perpendicular when `|a.b|` is below this.
pub const PERPENDICULAR_TOL: f64 = 1e-6;

/// Output states closer than this (or closer to antipodal) give no frame.
pub const MIN_FRAME_ANGLE_DEG: f64 = 5.0;

/// DGD wiggles smaller than this are not counted as oscillation extrema, ps.
pub const EXTREMUM_PROMINENCE_PS: f64 = 1e-6;

/// Fewest wavelengths accepted by [`dgd_report`].
pub const MIN_REPORT_WAVELENGTHS: usize = 10;

pub const SCAN_HEADER: [&str; 5] = ["wavelength_nm", "state_label", "s1", "s2", "s3"];
pub const INPUTS_HEADER: [&str; 4] = ["state_label", "s1", "s2", "s3"];
pub const DGD_HEADER: [&str; 5] = ["wavelength_nm", "dgd_ps", "psp_s1", "psp_s2", "psp_s3"];

/// One polarimeter reading.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub wavelength_nm: f64,
    pub state_label: String,
    pub stokes: StokesVector,
}

/// A launched state: label and Stokes vector at the fiber input.
#[derive(Clone, Debug, PartialEq)]
pub struct DeclaredInput {
    pub label: String,
    pub stokes: StokesVector,
}

/// Validated scan: every wavelength carries one output per launched state.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSet {
    inputs: Vec<DeclaredInput>,
    wavelengths: Vec<f64>,
    /// `outputs[w][k]`: output Stokes vector of input `k` at wavelength `w`.
    outputs: Vec<Vec<StokesVector>>,
}

/// Checks the DOP window and renormalizes. Readings already within `1e-12`
/// of unit length are kept bit for bit.
fn renormalize(s: StokesVector) -> std::result::Result<StokesVector, f64> {
    let n = s.norm();
    if !(n >= DOP_RANGE.0 && n <= DOP_RANGE.1) {
        return Err(n);
    }
    Ok(if (n - 1.0).abs() > 1e-12 { s / n } else { s })
}

impl ScanSet {
    /// Groups records by wavelength and validates them against the declared
    /// inputs.
    pub fn new(declared: &[DeclaredInput], records: Vec<ScanRecord>) -> Result<Self> {
        let mut groups: BTreeMap<u64, (f64, Vec<ScanRecord>)> = BTreeMap::new();
        for r in records {
            if !(r.wavelength_nm > 0.0) || !r.wavelength_nm.is_finite() {
                return Err(Error::Scan(format!("invalid wavelength {}", r.wavelength_nm)));
            }
            groups
                .entry(ordered_bits(r.wavelength_nm))
                .or_insert_with(|| (r.wavelength_nm, Vec::new()))
                .1
                .push(r);
        }
        let Some((_, (_, first))) = groups.iter().next() else {
            return Err(Error::Scan("scan contains no records".into()));
        };
        // Labels present at the first wavelength, in declared order.
        let mut inputs = Vec::new();
        for r in first {
            if !declared.iter().any(|d| d.label == r.state_label) {
                return Err(Error::Scan(format!("state `{}` is not declared", r.state_label)));
            }
        }
        for d in declared {
            if first.iter().any(|r| r.state_label == d.label) {
                inputs.push(d.clone());
            }
        }
        if inputs.len() < 2 {
            return Err(Error::Scan("at least two launched states are required".into()));
        }
        let mut wavelengths = Vec::with_capacity(groups.len());
        let mut outputs = Vec::with_capacity(groups.len());
        for (_, (w, group)) in groups {
            let mut row = Vec::with_capacity(inputs.len());
            for input in &inputs {
                let mut hits = group.iter().filter(|r| r.state_label == input.label);
                let hit = hits
                    .next()
                    .ok_or_else(|| Error::Scan(format!("state `{}` missing at {w} nm", input.label)))?;
                if hits.next().is_some() {
                    return Err(Error::Scan(format!("state `{}` repeated at {w} nm", input.label)));
                }
                let s = renormalize(hit.stokes).map_err(|n| {
                    Error::Scan(format!("state `{}` at {w} nm has norm {n}", input.label))
                })?;
                row.push(s);
            }
            if group.len() != inputs.len() {
                return Err(Error::Scan(format!("unexpected extra states at {w} nm")));
            }
            wavelengths.push(w);
            outputs.push(row);
        }
        let set = Self {
            inputs,
            wavelengths,
            outputs,
        };
        if set.perpendicular_pairs().is_empty() {
            return Err(Error::Scan(
                "no pair of declared input states is perpendicular in Stokes space".into(),
            ));
        }
        Ok(set)
    }

    /// Synthetic scan of a fiber at every grid point.
    pub fn synthesize(fiber: &FiberRealization, grid: &SpectralGrid, launched: &[(String, JonesVector)]) -> Result<Self> {
        let declared: Vec<DeclaredInput> = launched
            .iter()
            .map(|(label, j)| DeclaredInput {
                label: label.clone(),
                stokes: j.to_stokes(),
            })
            .collect();
        let mut records = Vec::with_capacity(grid.len() * launched.len());
        for &w in grid.wavelengths() {
            let u = transfer_unitary(fiber, w)?;
            for (label, j) in launched {
                records.push(ScanRecord {
                    wavelength_nm: w,
                    state_label: label.clone(),
                    stokes: u.apply(j).to_stokes(),
                });
            }
        }
        Self::new(&declared, records)
    }

    pub fn inputs(&self) -> &[DeclaredInput] {
        &self.inputs
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn output(&self, wavelength_index: usize, input_index: usize) -> StokesVector {
        self.outputs[wavelength_index][input_index]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.inputs.iter().position(|d| d.label == label)
    }

    /// Index pairs of launched states that are perpendicular in Stokes space.
    pub fn perpendicular_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.inputs.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.inputs[a].stokes.dot(&self.inputs[b].stokes).abs() < PERPENDICULAR_TOL {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// Records in wavelength order, inputs in declared order.
    pub fn records(&self) -> Vec<ScanRecord> {
        let mut out = Vec::with_capacity(self.wavelengths.len() * self.inputs.len());
        for (w, row) in self.wavelengths.iter().zip(&self.outputs) {
            for (input, s) in self.inputs.iter().zip(row) {
                out.push(ScanRecord {
                    wavelength_nm: *w,
                    state_label: input.label.clone(),
                    stokes: *s,
                });
            }
        }
        out
    }

    /// Writes the scan in the `wavelength_nm,state_label,s1,s2,s3` format.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SCAN_HEADER).map_err(csv_io)?;
        for r in self.records() {
            w.write_record([
                r.wavelength_nm.to_string(),
                r.state_label,
                r.stokes.s1.to_string(),
                r.stokes.s2.to_string(),
                r.stokes.s3.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the declared inputs in the `state_label,s1,s2,s3` format.
    pub fn write_inputs_csv<W: Write>(&self, out: W) -> Result<()> {
        write_declared_inputs(&self.inputs, out)
    }
}

pub fn write_declared_inputs<W: Write>(inputs: &[DeclaredInput], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INPUTS_HEADER).map_err(csv_io)?;
    for d in inputs {
        w.write_record([
            d.label.clone(),
            d.stokes.s1.to_string(),
            d.stokes.s2.to_string(),
            d.stokes.s3.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Key with the same ordering as the float for positive finite values.
fn ordered_bits(x: f64) -> u64 {
    x.to_bits()
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Scan(format!("{other:?}")),
    }
}

fn csv_parse_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::Parse {
            line,
            message: format!("invalid UTF-8: {err}"),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a CSV with the given header and hands each row, with its line
/// number, to `f`.
pub(crate) fn read_rows<R: Read>(
    source: R,
    header: &[&str],
    mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let found = reader.headers().map_err(csv_parse_error)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    for rec in reader.records() {
        let rec = rec.map_err(csv_parse_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        f(line, &rec)?;
    }
    Ok(())
}

pub(crate) fn parse_field(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("");
    let v: f64 = raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {name} `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{name} must be finite"),
        });
    }
    Ok(v)
}

/// Parses a `state_label,s1,s2,s3` file of launched states.
pub fn parse_declared_inputs<R: Read>(source: R) -> Result<Vec<DeclaredInput>> {
    let mut out: Vec<DeclaredInput> = Vec::new();
    read_rows(source, &INPUTS_HEADER, |line, rec| {
        let label = rec.get(0).unwrap_or("").to_string();
        if label.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty state label".into(),
            });
        }
        if out.iter().any(|d| d.label == label) {
            return Err(Error::Parse {
                line,
                message: format!("state `{label}` declared twice"),
            });
        }
        let s = StokesVector::new(
            parse_field(rec, 1, "s1", line)?,
            parse_field(rec, 2, "s2", line)?,
            parse_field(rec, 3, "s3", line)?,
        );
        let stokes = renormalize(s).map_err(|n| Error::Parse {
            line,
            message: format!("declared state norm {n} outside [{}, {}]", DOP_RANGE.0, DOP_RANGE.1),
        })?;
        out.push(DeclaredInput { label, stokes });
        Ok(())
    })?;
    Ok(out)
}

/// Parses a `wavelength_nm,state_label,s1,s2,s3` scan and validates it.
pub fn parse_scan<R: Read>(source: R, declared: &[DeclaredInput]) -> Result<ScanSet> {
    let mut records = Vec::new();
    read_rows(source, &SCAN_HEADER, |line, rec| {
        let wavelength_nm = parse_field(rec, 0, "wavelength_nm", line)?;
        if !(wavelength_nm > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("wavelength {wavelength_nm} must be positive"),
            });
        }
        let state_label = rec.get(1).unwrap_or("").to_string();
        let stokes = StokesVector::new(
            parse_field(rec, 2, "s1", line)?,
            parse_field(rec, 3, "s2", line)?,
            parse_field(rec, 4, "s3", line)?,
        );
        let n = stokes.norm();
        if !(n >= DOP_RANGE.0 && n <= DOP_RANGE.1) {
            return Err(Error::Parse {
                line,
                message: format!("Stokes norm {n} outside [{}, {}]", DOP_RANGE.0, DOP_RANGE.1),
            });
        }
        records.push(ScanRecord {
            wavelength_nm,
            state_label,
            stokes,
        });
        Ok(())
    })?;
    ScanSet::new(declared, records)
}

fn orthonormal_frame(a: &StokesVector, b: &StokesVector) -> Result<[StokesVector; 3]> {
    let e1 = a.normalized()?;
    let e2 = b.sub(&e1.scale(b.dot(&e1))).normalized()?;
    Ok([e1, e2, e1.cross(&e2)])
}

/// Rotation carrying the launched pair `(in_a, in_b)` onto the measured
/// outputs `(out_a, out_b)`, after Gram-Schmidt on both pairs.
pub fn frame_rotation(
    in_a: &StokesVector,
    in_b: &StokesVector,
    out_a: &StokesVector,
    out_b: &StokesVector,
    wavelength_nm: f64,
) -> Result<PolRotation> {
    let angle_deg = out_a.angle_to(out_b).to_degrees();
    if !(MIN_FRAME_ANGLE_DEG..=180.0 - MIN_FRAME_ANGLE_DEG).contains(&angle_deg) {
        return Err(Error::DegenerateFrame {
            wavelength_nm,
            angle_deg,
        });
    }
    let from = orthonormal_frame(in_a, in_b)?;
    let to = orthonormal_frame(out_a, out_b)?;
    PolRotation::between_frames(&from, &to)
}

/// Channel rotation at one wavelength from the launched pair `pair`.
pub fn output_frame(scan: &ScanSet, wavelength_index: usize, pair: (usize, usize)) -> Result<PolRotation> {
    let (a, b) = pair;
    if a >= scan.inputs.len() || b >= scan.inputs.len() || a == b {
        return Err(invalid("pair", format!("{pair:?} does not name two launched states")));
    }
    if scan.inputs[a].stokes.dot(&scan.inputs[b].stokes).abs() >= PERPENDICULAR_TOL {
        return Err(Error::Scan(format!(
            "states `{}` and `{}` are not perpendicular",
            scan.inputs[a].label, scan.inputs[b].label
        )));
    }
    frame_rotation(
        &scan.inputs[a].stokes,
        &scan.inputs[b].stokes,
        &scan.output(wavelength_index, a),
        &scan.output(wavelength_index, b),
        scan.wavelengths[wavelength_index],
    )
}

/// DGD and PSP for one wavelength interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DgdRecord {
    /// Interval midpoint, nm.
    pub wavelength_nm: f64,
    pub dgd_ps: f64,
    /// PMD vector direction; `(1, 0, 0)` when undefined.
    pub psp: StokesVector,
    pub psp_defined: bool,
}

impl From<&PmdVectorSample> for DgdRecord {
    fn from(sample: &PmdVectorSample) -> Self {
        let (psp, psp_defined) = match sample.axis() {
            Some(a) => (a, true),
            None => (StokesVector::S1, false),
        };
        Self {
            wavelength_nm: sample.wavelength_nm,
            dgd_ps: sample.dgd(),
            psp,
            psp_defined,
        }
    }
}

/// DGD/PSP from the channel rotations at two wavelengths.
pub fn dgd_from_rotations(r_a: &PolRotation, wavelength_a: f64, r_b: &PolRotation, wavelength_b: f64) -> Result<DgdRecord> {
    Ok(DgdRecord::from(&finite_difference_pmd(r_a, wavelength_a, r_b, wavelength_b)?))
}

/// DGD records for every adjacent wavelength pair of the scan.
pub fn dgd_series(scan: &ScanSet, pair: (usize, usize)) -> Result<Vec<DgdRecord>> {
    let frames = (0..scan.wavelengths.len())
        .map(|i| output_frame(scan, i, pair))
        .collect::<Result<Vec<_>>>()?;
    let w = &scan.wavelengths;
    (0..w.len().saturating_sub(1))
        .map(|i| dgd_from_rotations(&frames[i], w[i], &frames[i + 1], w[i + 1]))
        .collect()
}

/// Half-period of DGD oscillations: mean spacing between successive
/// extrema. `None` with fewer than three extrema.
pub fn oscillation_half_period(series: &[(f64, f64)], min_prominence: f64) -> Option<f64> {
    let ys: Vec<f64> = series.iter().map(|s| s.1).collect();
    let ext = local_extrema(&ys, min_prominence);
    if ext.len() < 3 {
        return None;
    }
    let gaps: Vec<f64> = ext.windows(2).map(|p| series[p[1]].0 - series[p[0]].0).collect();
    Some(mean(&gaps))
}

/// DGD series of a scan plus summary statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DgdReport {
    pub pair: (String, String),
    pub records: Vec<DgdRecord>,
    pub mean_dgd_ps: f64,
    pub std_dgd_ps: f64,
    /// Half-period of DGD oscillations, nm.
    pub delta_lambda0_nm: Option<f64>,
}

pub fn dgd_report(scan: &ScanSet, pair: (usize, usize)) -> Result<DgdReport> {
    if scan.wavelengths.len() < MIN_REPORT_WAVELENGTHS {
        return Err(Error::Scan(format!(
            "{} wavelengths given, at least {MIN_REPORT_WAVELENGTHS} needed",
            scan.wavelengths.len()
        )));
    }
    let records = dgd_series(scan, pair)?;
    let dgd: Vec<f64> = records.iter().map(|r| r.dgd_ps).collect();
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.wavelength_nm, r.dgd_ps)).collect();
    Ok(DgdReport {
        pair: (scan.inputs[pair.0].label.clone(), scan.inputs[pair.1].label.clone()),
        mean_dgd_ps: mean(&dgd),
        std_dgd_ps: std_dev(&dgd),
        delta_lambda0_nm: oscillation_half_period(&series, EXTREMUM_PROMINENCE_PS),
        records,
    })
}

/// Largest pointwise relative DGD difference between two series on the
/// same wavelengths.
pub fn max_relative_difference(a: &[DgdRecord], b: &[DgdRecord]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid("series", "series lengths differ"));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.dgd_ps.abs().max(y.dgd_ps.abs());
            if scale > 0.0 {
                (x.dgd_ps - y.dgd_ps).abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max))
}

/// Writes `wavelength_nm,dgd_ps,psp_s1,psp_s2,psp_s3`.
pub fn write_dgd_csv<W: Write>(records: &[DgdRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DGD_HEADER).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.wavelength_nm.to_string(),
            format!("{:.12e}", r.dgd_ps),
            r.psp.s1.to_string(),
            r.psp.s2.to_string(),
            r.psp.s3.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{dgd_spectrum, synthesize_fiber, transfer_rotation, FiberSpec};
    use approx::assert_abs_diff_eq;

    fn declared_hd() -> Vec<DeclaredInput> {
        vec![
            DeclaredInput {
                label: "H".into(),
                stokes: StokesVector::S1,
            },
            DeclaredInput {
                label: "D".into(),
                stokes: StokesVector::S2,
            },
        ]
    }

    fn launched(labels: &[&str]) -> Vec<(String, JonesVector)> {
        labels
            .iter()
            .map(|l| (l.to_string(), JonesVector::from_label(l).unwrap()))
            .collect()
    }

    fn scan_text(rows: &[(f64, &str, [f64; 3])]) -> String {
        let mut s = String::from("wavelength_nm,state_label,s1,s2,s3\n");
        for (w, l, v) in rows {
            s.push_str(&format!("{w},{l},{},{},{}\n", v[0], v[1], v[2]));
        }
        s
    }

    #[test]
    fn parses_well_formed_scan() {
        let mut rows = Vec::new();
        for i in 0..401 {
            let w = 1260.0 + 0.25 * i as f64;
            rows.push((w, "H", [1.0, 0.0, 0.0]));
            rows.push((w, "D", [0.0, 1.0, 0.0]));
        }
        let scan = parse_scan(scan_text(&rows).as_bytes(), &declared_hd()).unwrap();
        assert_eq!(scan.wavelengths().len(), 401);
    }

    #[test]
    fn bad_norm_names_the_line() {
        let rows = [
            (1300.0, "H", [1.0, 0.0, 0.0]),
            (1300.0, "D", [0.0, 0.8, 0.0]),
        ];
        match parse_scan(scan_text(&rows).as_bytes(), &declared_hd()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("norm"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_reported() {
        let text = "wavelength_nm,state_label,s1,s2,s3\n1300,H,1,0,0\n1300,D,abc,1,0\n";
        assert!(matches!(parse_scan(text.as_bytes(), &declared_hd()), Err(Error::Parse { line: 3, .. })));
        let short = "wavelength_nm,state_label,s1,s2,s3\n1300,H,1,0\n";
        assert!(matches!(parse_scan(short.as_bytes(), &declared_hd()), Err(Error::Parse { line: 2, .. })));
        let header = "wl,state,s1,s2,s3\n";
        assert!(matches!(parse_scan(header.as_bytes(), &declared_hd()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_state_is_rejected() {
        let rows = [
            (1300.0, "H", [1.0, 0.0, 0.0]),
            (1300.0, "D", [0.0, 1.0, 0.0]),
            (1300.25, "H", [1.0, 0.0, 0.0]),
        ];
        assert!(matches!(parse_scan(scan_text(&rows).as_bytes(), &declared_hd()), Err(Error::Scan(_))));
    }

    #[test]
    fn non_perpendicular_inputs_are_rejected() {
        let declared = vec![
            DeclaredInput {
                label: "H".into(),
                stokes: StokesVector::S1,
            },
            DeclaredInput {
                label: "X".into(),
                stokes: StokesVector::unit(0.6, 0.8, 0.0).unwrap(),
            },
        ];
        let rows = [(1300.0, "H", [1.0, 0.0, 0.0]), (1300.0, "X", [0.6, 0.8, 0.0])];
        assert!(matches!(parse_scan(scan_text(&rows).as_bytes(), &declared), Err(Error::Scan(_))));
    }

    #[test]
    fn declared_inputs_parse() {
        let text = "state_label,s1,s2,s3\nH,1,0,0\nD,0,1,0\n";
        let d = parse_declared_inputs(text.as_bytes()).unwrap();
        assert_eq!(d, declared_hd());
        assert!(parse_declared_inputs("state_label,s1,s2,s3\nH,1,0,0\nH,0,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn identity_channel_gives_identity_frame() {
        let r = frame_rotation(&StokesVector::S1, &StokesVector::S2, &StokesVector::S1, &StokesVector::S2, 1310.0).unwrap();
        assert!((r.matrix() - PolRotation::identity().matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn known_rotation_is_recovered() {
        let axis = StokesVector::unit(0.3, -0.4, 0.8660254037844386).unwrap();
        let r = PolRotation::from_axis_angle(&axis, 2.1).unwrap();
        let got = frame_rotation(
            &StokesVector::S1,
            &StokesVector::S2,
            &r.apply(&StokesVector::S1),
            &r.apply(&StokesVector::S2),
            1310.0,
        )
        .unwrap();
        assert!((got.matrix() - r.matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn noisy_outputs_still_give_orthogonal_frame() {
        let out_a = StokesVector::new(0.99, 0.01, -0.012);
        let out_b = StokesVector::new(0.013, 1.01, 0.009);
        let r = frame_rotation(&StokesVector::S1, &StokesVector::S2, &out_a, &out_b, 1310.0).unwrap();
        assert!(r.rotation_deviation() < 1e-10);
    }

    #[test]
    fn collinear_outputs_are_degenerate() {
        let out_b = StokesVector::unit(0.999, 0.0447101778122163, 0.0).unwrap();
        assert!(matches!(
            frame_rotation(&StokesVector::S1, &StokesVector::S2, &StokesVector::S1, &out_b, 1310.0),
            Err(Error::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn equal_rotations_give_zero_dgd() {
        let r = PolRotation::from_axis_angle(&StokesVector::S2, 0.4).unwrap();
        let rec = dgd_from_rotations(&r, 1310.0, &r, 1310.25).unwrap();
        assert_eq!(rec.dgd_ps, 0.0);
        assert!(!rec.psp_defined);
        assert_eq!(rec.psp, StokesVector::S1);
        assert_abs_diff_eq!(rec.wavelength_nm, 1310.125);
    }

    #[test]
    fn single_waveplate_recovered() {
        let axis = StokesVector::unit(0.48, 0.6, 0.64).unwrap();
        let fiber = FiberRealization::single_waveplate(&axis, 0.3).unwrap();
        let (wa, wb) = (1310.0, 1310.25);
        let rec = dgd_from_rotations(
            &transfer_rotation(&fiber, wa).unwrap(),
            wa,
            &transfer_rotation(&fiber, wb).unwrap(),
            wb,
        )
        .unwrap();
        assert!((rec.dgd_ps / 0.3 - 1.0).abs() < 1e-6);
        assert!(rec.psp.angle_to(&axis) < 1e-6);
    }

    #[test]
    fn synthetic_scan_matches_emulator_and_round_trips() {
        let fiber = synthesize_fiber(&FiberSpec::new(30.0, 0.05, 200, 17).unwrap()).unwrap();
        let grid = SpectralGrid::from_range(1300.0, 1320.0, 0.25).unwrap();
        let scan = ScanSet::synthesize(&fiber, &grid, &launched(&["H", "D", "R"])).unwrap();
        assert_eq!(scan.perpendicular_pairs().len(), 3);

        let mmm = dgd_series(&scan, (0, 1)).unwrap();
        let emu = dgd_spectrum(&fiber, &grid).unwrap();
        for (m, (w, d)) in mmm.iter().zip(&emu) {
            assert_abs_diff_eq!(m.wavelength_nm, *w);
            assert!((m.dgd_ps - d).abs() <= 1e-3 * d);
        }
        let other = dgd_series(&scan, (1, 2)).unwrap();
        assert!(max_relative_difference(&mmm, &other).unwrap() < 1e-6);

        let mut text = Vec::new();
        scan.write_csv(&mut text).unwrap();
        let mut inputs = Vec::new();
        scan.write_inputs_csv(&mut inputs).unwrap();
        let declared = parse_declared_inputs(inputs.as_slice()).unwrap();
        let back = parse_scan(text.as_slice(), &declared).unwrap();
        assert_eq!(back, scan);
    }

    #[test]
    fn constant_dgd_report() {
        let fiber = FiberRealization::single_waveplate(&StokesVector::S3, 0.3).unwrap();
        let grid = SpectralGrid::from_range(1300.0, 1310.0, 0.25).unwrap();
        let scan = ScanSet::synthesize(&fiber, &grid, &launched(&["H", "D"])).unwrap();
        let report = dgd_report(&scan, (0, 1)).unwrap();
        assert!(report.std_dgd_ps < 1e-9);
        assert!(report.delta_lambda0_nm.is_none());
        assert_abs_diff_eq!(report.mean_dgd_ps, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn short_scan_rejected_by_report() {
        let fiber = FiberRealization::single_waveplate(&StokesVector::S3, 0.3).unwrap();
        let grid = SpectralGrid::from_range(1300.0, 1301.0, 0.25).unwrap();
        let scan = ScanSet::synthesize(&fiber, &grid, &launched(&["H", "D"])).unwrap();
        assert!(dgd_report(&scan, (0, 1)).is_err());
    }

    #[test]
    fn dgd_csv_header() {
        let mut out = Vec::new();
        write_dgd_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "wavelength_nm,dgd_ps,psp_s1,psp_s2,psp_s3\n");
    }
}
