//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Exits non-zero when a criterion fails, unless it is listed in
//! `KNOWN_FAILURES`; those still print FAIL with the measured numbers.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmd_core::ensemble::{dgd_ensemble, ensemble_mean_infidelity, DgdStatistics, EnsembleOptions, MAXWELL_MOMENT_RATIO};
use pmd_core::fiber::{
    angular_frequency, dgd_spectrum, propagate_trajectory, synthesize_fiber, FiberRealization, FiberSpec, Segment,
    SpectralGrid,
};
use pmd_core::infidelity::{
    closed_form_infidelity, dgd_bound_at, rolling_infidelity, small_angle_infidelity, trajectory_infidelity,
    RollingWindow,
};
use pmd_core::mmm::{dgd_series, max_relative_difference, parse_declared_inputs, parse_scan, ScanSet};
use pmd_core::polarization::stokes_to_jones;
use pmd_core::protocol::{
    alignment_unitaries, higher_order_report, optimize_orientation, protocol_error_budget, psp_two_channel_infidelity,
    six_state_spread, CanonicalGeometry, Geometry, Objective, ProtocolSpec,
};
use pmd_core::stats::{linear_fit, log_log_slope, mean};
use pmd_core::{ArcParams, BandSpec, JonesVector, StokesVector};

/// Criteria expected to fail; see the README section on higher-order PMD.
const KNOWN_FAILURES: &[u32] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn axes() -> Vec<StokesVector> {
    [
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.3, -0.5, 0.81],
        [-0.62, 0.7, 0.35],
        [0.1, 0.95, -0.3],
    ]
    .iter()
    .map(|a| StokesVector::from_array(*a).normalized().unwrap())
    .collect()
}

/// First-order fiber of `n` collinear segments with total delay `dgd`.
fn collinear(axis: &StokesVector, dgd: f64, n: usize) -> FiberRealization {
    FiberRealization::new(
        (0..n)
            .map(|_| Segment {
                axis: axis.to_array(),
                delay_ps: dgd / n as f64,
            })
            .collect(),
    )
    .unwrap()
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c1_closed_form_anchor() -> Result<Outcome, String> {
    let p = closed_form_infidelity(&ArcParams::new(2.0, FRAC_PI_2).map_err(e)?);
    Ok(Outcome {
        pass: (p - 0.0793).abs() <= 0.0005,
        detail: format!("p_e(2 rad, pi/2) = {p:.6}, target 0.0793 +- 0.0005"),
    })
}

fn c2_oracle_equivalence() -> Result<Outcome, String> {
    let center = 1310.0;
    let width = 1.0;
    let (mut worst, mut worst_step) = (0.0f64, 0.0f64);
    for phi in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_2] {
        let input = stokes_to_jones(&StokesVector::new(phi.sin(), 0.0, phi.cos())).map_err(e)?;
        for k in 0..=40 {
            let dtheta = PI * k as f64 / 40.0;
            let mut n = ((dtheta / 0.049).ceil() as usize + 1).max(3);
            if n.is_multiple_of(2) {
                n += 1;
            }
            let grid = SpectralGrid::centered(center, width, n).map_err(e)?;
            let d_omega = angular_frequency(grid.first()) - angular_frequency(grid.last());
            let fiber = FiberRealization::single_waveplate(&StokesVector::S3, dtheta / d_omega).map_err(e)?;
            let traj = propagate_trajectory(&fiber, &input, &grid).map_err(e)?;
            for p in traj.samples.windows(2) {
                worst_step = worst_step.max(p[0].stokes.angle_to(&p[1].stokes) / phi.sin());
            }
            let numeric = trajectory_infidelity(&traj.samples, None).map_err(e)?;
            let exact = closed_form_infidelity(&ArcParams::new(dtheta, phi).map_err(e)?);
            worst = worst.max((numeric - exact).abs());
        }
    }
    let mut worst_rel = 0.0f64;
    for k in 1..=50 {
        let arc = ArcParams::great_circle(0.01 * k as f64).map_err(e)?;
        let exact = closed_form_infidelity(&arc);
        worst_rel = worst_rel.max((small_angle_infidelity(&arc) - exact).abs() / exact);
    }
    Ok(Outcome {
        pass: worst <= 1e-6 && worst_step <= 0.05 && worst_rel < 0.01,
        detail: format!(
            "max |integrated - closed| = {worst:.2e} (tol 1e-6, sampling <= {worst_step:.4} rad); \
             max small-angle rel. error for dtheta <= 0.5 = {:.3}% (tol 1%)",
            100.0 * worst_rel
        ),
    })
}

fn c3_mmm_exactness() -> Result<Outcome, String> {
    let grid = SpectralGrid::from_range(1300.0, 1320.0, 0.1).map_err(e)?;
    let launched: Vec<(String, JonesVector)> = ["H", "D", "R"]
        .iter()
        .map(|l| (l.to_string(), JonesVector::from_label(l).unwrap()))
        .collect();
    let (mut worst_dgd, mut worst_pair) = (0.0f64, 0.0f64);
    for axis in axes() {
        for dgd in [0.1, 0.5, 2.0] {
            let fiber = FiberRealization::single_waveplate(&axis, dgd).map_err(e)?;
            let synthetic = ScanSet::synthesize(&fiber, &grid, &launched).map_err(e)?;
            // Round trip through the on-disk formats.
            let (mut scan_csv, mut inputs_csv) = (Vec::new(), Vec::new());
            synthetic.write_csv(&mut scan_csv).map_err(e)?;
            synthetic.write_inputs_csv(&mut inputs_csv).map_err(e)?;
            let declared = parse_declared_inputs(inputs_csv.as_slice()).map_err(e)?;
            let scan = parse_scan(scan_csv.as_slice(), &declared).map_err(e)?;

            let pairs = scan.perpendicular_pairs();
            if pairs.len() < 2 {
                return Err(format!("only {} perpendicular pairs", pairs.len()));
            }
            let series: Vec<_> = pairs.iter().map(|p| dgd_series(&scan, *p)).collect::<Result<_, _>>().map_err(e)?;
            for s in &series {
                for r in s {
                    worst_dgd = worst_dgd.max((r.dgd_ps - dgd).abs() / dgd);
                }
            }
            for s in &series[1..] {
                worst_pair = worst_pair.max(max_relative_difference(&series[0], s).map_err(e)?);
            }
        }
    }
    Ok(Outcome {
        pass: worst_dgd <= 1e-6 && worst_pair <= 1e-6,
        detail: format!("max DGD rel. error {worst_dgd:.2e}, max pair disagreement {worst_pair:.2e} (tol 1e-6)"),
    })
}

fn c4_statistics() -> Result<Outcome, String> {
    let pmd = 0.05;
    let n = 2000;
    let lengths = [10.0, 10.0 * 10f64.sqrt(), 100.0];
    let mut means = Vec::new();
    let (mut worst_mean, mut worst_ratio) = (0.0f64, 0.0f64);
    for (k, &l) in lengths.iter().enumerate() {
        let spec = FiberSpec::new(l, pmd, 200, 1000 + k as u64).map_err(e)?;
        let stats = DgdStatistics::from_samples(&dgd_ensemble(&spec, n, 1310.0).map_err(e)?);
        worst_mean = worst_mean.max((stats.mean / (pmd * l.sqrt()) - 1.0).abs());
        worst_ratio = worst_ratio.max((stats.moment_ratio() / MAXWELL_MOMENT_RATIO - 1.0).abs());
        means.push(stats.mean);
    }
    let slope = log_log_slope(&lengths, &means).ok_or("scaling fit undefined")?;
    Ok(Outcome {
        pass: worst_mean <= 0.03 && worst_ratio <= 0.03 && (slope - 0.5).abs() <= 0.02,
        detail: format!(
            "{n} realizations x 200 segments: mean DGD off by <= {:.2}%, moment ratio off by <= {:.2}% (tol 3%), \
             sqrt(L) exponent {slope:.4} (0.50 +- 0.02)",
            100.0 * worst_mean,
            100.0 * worst_ratio
        ),
    })
}

fn c5_sweep_shapes() -> Result<Outcome, String> {
    let opts = EnsembleOptions::default();
    let lengths = [10.0, 20.0, 50.0, 100.0, 200.0];
    let by_length = ensemble_mean_infidelity(0.05, &lengths, &[2.0], 200, 42, &opts).map_err(e)?;
    let p: Vec<f64> = by_length.iter().map(|r| r.mean).collect();
    let fit = linear_fit(&lengths, &p).ok_or("linear fit undefined")?;

    let widths = [0.1, 0.2, 0.5, 1.0];
    let by_width = ensemble_mean_infidelity(0.05, &[30.0], &widths, 200, 42, &opts).map_err(e)?;
    let p: Vec<f64> = by_width.iter().map(|r| r.mean).collect();
    let slope = log_log_slope(&widths, &p).ok_or("log-log fit undefined")?;
    Ok(Outcome {
        pass: fit.r_squared() > 0.99 && (slope - 2.0).abs() <= 0.05,
        detail: format!(
            "p_e vs L on 10..200 km at 2 nm: R^2 = {:.5} (> 0.99); p_e vs bandwidth on 0.1..1 nm at 30 km: \
             log-log slope {slope:.4} (2.0 +- 0.05)",
            fit.r_squared()
        ),
    })
}

/// Largest `rolling - bound` over H, V, D, A and every window center.
fn bound_violation(fiber: &FiberRealization, grid: &SpectralGrid, window_nm: f64) -> Result<(f64, f64), String> {
    let win = RollingWindow::fit(window_nm, grid.step(), grid.len()).map_err(e)?;
    let series = dgd_spectrum(fiber, grid).map_err(e)?;
    let (mut worst, mut worst_rel) = (f64::NEG_INFINITY, 0.0f64);
    for label in ["H", "V", "D", "A"] {
        let traj = propagate_trajectory(fiber, &JonesVector::from_label(label).unwrap(), grid).map_err(e)?;
        for (c, p) in rolling_infidelity(&traj.samples, window_nm).map_err(e)? {
            let b = dgd_bound_at(&series, c, win.width_nm).map_err(e)?;
            worst = worst.max(p - b);
            if p > b {
                worst_rel = worst_rel.max((p - b) / b);
            }
        }
    }
    Ok((worst, worst_rel))
}

fn c6_dgd_bound() -> Result<Outcome, String> {
    let grid = SpectralGrid::from_range(1260.0, 1360.0, 0.25).map_err(e)?;
    let mut worst = f64::NEG_INFINITY;
    for axis in axes() {
        for dgd in [0.1, 0.3, 1.0] {
            for fiber in [FiberRealization::single_waveplate(&axis, dgd).map_err(e)?, collinear(&axis, dgd, 10)] {
                worst = worst.max(bound_violation(&fiber, &grid, 5.0)?.0);
            }
        }
    }
    let multi = synthesize_fiber(&FiberSpec::new(30.0, 0.05, 200, 42).map_err(e)?).map_err(e)?;
    let (m_abs, m_rel) = bound_violation(&multi, &grid, 5.0)?;
    Ok(Outcome {
        pass: worst <= 1e-9,
        detail: format!(
            "first-order fibers: max (rolling - bound) = {worst:.2e} (tol 1e-9); \
             30 km multi-segment fiber (informational): max excess {:.2e}, {:.1}% of the bound",
            m_abs.max(0.0),
            100.0 * m_rel
        ),
    })
}

fn c7_basis_geometry() -> Result<Outcome, String> {
    let bb84 = ProtocolSpec::bb84(0.5).map_err(e)?;
    let (mut worst_half, mut worst_std, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for axis in axes() {
        for dtheta in [0.1, 0.5, 1.0, 2.0, PI] {
            let avg = |g: CanonicalGeometry| -> Result<f64, String> {
                let circle = g.circle(&axis).map_err(e)?;
                Ok(protocol_error_budget(&bb84, &Geometry::Circle(circle), &axis, dtheta).map_err(e)?.weighted_average)
            };
            let full = avg(CanonicalGeometry::Orthogonal)?;
            for g in [CanonicalGeometry::InPlaneOnStates, CanonicalGeometry::InPlaneSymmetric] {
                worst_half = worst_half.max((avg(g)? - full / 2.0).abs());
            }
            let (_, std) = six_state_spread(&axis, dtheta, 100, 7).map_err(e)?;
            worst_std = worst_std.max(std);
            for r in [0.1, 0.25, 1.0, 3.0, 10.0] {
                let o = optimize_orientation(&bb84, &axis, dtheta, Objective::BalanceRatio(r)).map_err(e)?;
                let got = o.budget.per_basis[0] / o.budget.per_basis[1];
                worst_ratio = worst_ratio.max((got / r - 1.0).abs());
            }
        }
    }
    Ok(Outcome {
        pass: worst_half <= 1e-12 && worst_std < 1e-12 && worst_ratio <= 1e-9,
        detail: format!(
            "in-plane averages vs half the orthogonal average: {worst_half:.1e} (tol 1e-12); \
             six-state std over 100 orientations: {worst_std:.1e} (< 1e-12); balance ratio rel. error {worst_ratio:.1e} (tol 1e-9)"
        ),
    })
}

fn c8_alignment() -> Result<Outcome, String> {
    let grid = SpectralGrid::from_range(1260.0, 1360.0, 0.25).map_err(e)?;
    let mut worst = 0.0f64;
    for axis in axes() {
        for dgd in [0.05, 0.4, 2.0] {
            for fiber in [FiberRealization::single_waveplate(&axis, dgd).map_err(e)?, collinear(&axis, dgd, 25)] {
                let al = alignment_unitaries(&fiber, 1310.0).map_err(e)?;
                let traj = al.trajectory(&fiber, &JonesVector::H, &grid).map_err(e)?;
                for s in &traj.samples {
                    worst = worst.max(s.stokes.angle_to(&StokesVector::S1));
                }
            }
        }
    }
    Ok(Outcome {
        pass: worst < 1e-9,
        detail: format!("max output deviation from the pole over 1260..1360 nm: {worst:.2e} rad (< 1e-9)"),
    })
}

fn c9_higher_order() -> Result<Outcome, String> {
    let band = BandSpec::new(1310.0, 20.0).map_err(e)?;
    let grid = SpectralGrid::from_range(band.lower_nm(), band.upper_nm(), 0.05).map_err(e)?;
    let (mut osc, mut psp, mut residual) = (Vec::new(), Vec::new(), Vec::new());
    let fibers = 20;
    for seed in 0..fibers {
        let fiber = synthesize_fiber(&FiberSpec::new(30.0, 0.0474, 200, seed).map_err(e)?).map_err(e)?;
        let r = higher_order_report(&fiber, &band, &grid).map_err(e)?;
        if let Some(p) = r.p_e_osc {
            osc.push(p / r.p_e_first_order);
        }
        psp.push(r.p_e_psp_two_channel / r.p_e_first_order);
        if let Some(p) = r.p_e_aligned_residual {
            residual.push(p / r.p_e_first_order);
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let psp_ok = max(&psp) < 0.1;
    let osc_ok = max(&osc) < 0.1;

    let reference = psp_two_channel_infidelity(0.35);
    let note = emitted_psp_note()?;
    let note_ok = (reference - 0.0051).abs() < 5e-5 && note.contains("0.0051") && note.contains("0.004");
    Ok(Outcome {
        pass: psp_ok && osc_ok && note_ok,
        detail: format!(
            "{fibers} fibers, 30 km, 0.0474 ps/sqrt(km), 20 nm: oscillation/first-order mean {:.3} max {:.3} \
             ({} of {fibers} fibers show oscillations); PSP two-channel/first-order mean {:.2} max {:.2} (tol 0.1); \
             aligned residual/first-order mean {:.3} (informational); 0.35 rad reference {reference:.4}, note emitted: {note_ok}",
            mean(&osc),
            max(&osc),
            osc.len(),
            mean(&psp),
            max(&psp),
            mean(&residual)
        ),
    })
}

/// The discrepancy note written by `basis-study`.
fn emitted_psp_note() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(e)?;
    let out = dir.path().join("basis");
    run(&["basis-study", "--out", out.to_str().unwrap()])?;
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("basis_study.json")).map_err(e)?).map_err(e)?;
    json["psp_reference"]["note"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| "basis_study.json has no psp_reference note".into())
}

fn run(args: &[&str]) -> Result<Vec<PathBuf>, String> {
    let mut full = vec!["pmdkit"];
    full.extend_from_slice(args);
    pmd_cli::run_from(full).map_err(|err| format!("pmdkit {}: {err}", args.join(" ")))
}

fn snapshot(files: &[PathBuf]) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    files.iter().map(|f| Ok((f.clone(), fs::read(f).map_err(e)?))).collect()
}

fn c10_reproducibility() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(e)?;
    let root = dir.path();
    let p = |name: &str| root.join(name).to_str().unwrap().to_string();

    let config = root.join("simulate.toml");
    fs::write(
        &config,
        "length-km = 30.0\npmd-coeff = 0.05\nsegments = 200\nseed = 7\nstart-nm = 1300.0\nstop-nm = 1320.0\nstep-nm = 0.1\nsvg = true\n",
    )
    .map_err(e)?;
    let measured = root.join("measured.csv");
    fs::write(&measured, "distance_km,qber\n10,0.011\n20,0.013\n40,0.016\n60,0.021\n").map_err(e)?;

    let sim = p("sim");
    let commands: Vec<Vec<String>> = vec![
        vec!["--config".into(), config.to_str().unwrap().into(), "simulate".into(), "--out".into(), sim.clone()],
        vec![
            "infidelity".into(),
            "--fiber".into(),
            format!("{sim}/fiber.json"),
            "--start-nm".into(),
            "1300".into(),
            "--stop-nm".into(),
            "1320".into(),
            "--step-nm".into(),
            "0.1".into(),
            "--svg".into(),
            "--out".into(),
            p("inf"),
        ],
        vec![
            "sweep".into(),
            "--lengths-km".into(),
            "10,40".into(),
            "--widths-nm".into(),
            "1,2".into(),
            "--realizations".into(),
            "100".into(),
            "--svg".into(),
            "--out".into(),
            p("sweep"),
        ],
        vec![
            "mmm".into(),
            "--scan".into(),
            format!("{sim}/scan.csv"),
            "--inputs".into(),
            format!("{sim}/scan_inputs.csv"),
            "--svg".into(),
            "--out".into(),
            p("mmm"),
        ],
        vec![
            "qber-model".into(),
            "--measured".into(),
            measured.to_str().unwrap().into(),
            "--svg".into(),
            "--out".into(),
            p("qber"),
        ],
        vec![
            "basis-study".into(),
            "--fiber".into(),
            format!("{sim}/fiber.json"),
            "--out".into(),
            p("basis"),
        ],
        vec!["basis-study".into(), "--protocol".into(), "six-state".into(), "--out".into(), p("six")],
    ];

    let mut checked = 0;
    let mut differing = Vec::new();
    for args in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = snapshot(&run(&args)?)?;
        let second = snapshot(&run(&args)?)?;
        if first.keys().ne(second.keys()) {
            differing.push(format!("{}: different file sets", args.join(" ")));
        }
        for (path, bytes) in &first {
            checked += 1;
            if second.get(path) != Some(bytes) {
                differing.push(display(path, root));
            }
        }
    }
    Ok(Outcome {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} subcommand runs, {checked} files byte-identical on re-run", commands.len())
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    })
}

fn display(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

fn main() {
    let criteria: [(u32, &str, Check); 10] = [
        (1, "closed-form anchor", c1_closed_form_anchor),
        (2, "trajectory integration vs closed form", c2_oracle_equivalence),
        (3, "MMM exactness", c3_mmm_exactness),
        (4, "DGD statistics", c4_statistics),
        (5, "sweep shapes", c5_sweep_shapes),
        (6, "DGD bound", c6_dgd_bound),
        (7, "basis geometry", c7_basis_geometry),
        (8, "PSP alignment", c8_alignment),
        (9, "higher-order smallness", c9_higher_order),
        (10, "reproducibility", c10_reproducibility),
    ];
    let start = Instant::now();
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let t = Instant::now();
        let outcome = check().unwrap_or_else(|err| Outcome {
            pass: false,
            detail: format!("error: {err}"),
        });
        let status = match (outcome.pass, KNOWN_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!(
            "criterion {id:>2} {status:<12} {name} [{:.1} s]: {}",
            t.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance suite finished in {:.1} s", start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
