//! Experiment orchestration. Each run writes a self-describing bundle
//! directory: echoed config, CSV results and a manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wclab_core::calibration::{invert_calibration, isolation_report, quantize_matrix, simulate_onoff_measurement, IsolationReport};
use wclab_core::emulation::{generate_with_cable, EmulationMode, Scenario, WirelessCable};
use wclab_core::estimation::{
    bartlett_pas, detect_peaks, normalized_gain_estimate, pair_observations, range_velocity_map_cropped, target_slice_cir,
    write_range_velocity_peaks, GainObservation, PairingScale, PasGrid, SnapshotObservations,
};
use wclab_core::geometry::{assemble_synthetic_matrix, synthesize_between, synthesize_blocks, synthesize_transfer_matrix, UpaGeometry};
use wclab_core::linalg::{infinity_condition_number, sdd_analysis, spectral_condition_number, ComplexMatrix, SddReport};
use wclab_core::{geometry::RadiationPattern, psp};

use crate::config::{ArrayConfig, ConfigError, ExperimentConfig, ExperimentKind};
use crate::summary::{write_summary, ESTIMATES_FILE, TARGETS_FILE};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: wclab_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl RunError {
    /// Failures caused by the numerics (singular or degenerate links) rather than inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(self, RunError::Stage { source: wclab_core::Error::Singular(_) | wclab_core::Error::DegenerateLink { .. }, .. })
    }
}

trait StageExt<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> StageExt<T> for wclab_core::Result<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError::Stage { stage: stage(), source })
    }
}

/// Output directory plus the list of files written so far.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    files: Vec<String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> wclab_core::Result<()>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush().map_err(Into::into)).stage(|| format!("write {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkDiagnostics {
    pub kappa_2: f64,
    pub kappa_inf: f64,
    pub sdd: SddReport,
}

pub fn link_diagnostics(c: &ComplexMatrix) -> wclab_core::Result<LinkDiagnostics> {
    Ok(LinkDiagnostics { kappa_2: spectral_condition_number(c)?, kappa_inf: infinity_condition_number(c)?, sdd: sdd_analysis(c)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationStats {
    /// `(seed, mean_db, min_db)` per seed, in seed-list order.
    pub per_seed: Vec<(u64, f64, f64)>,
    pub median_mean_db: f64,
    pub min_mean_db: f64,
    pub max_mean_db: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Isolation of the calibrated link for one seed: measure, invert, quantize, apply.
pub fn isolation_for_seed(c: &ComplexMatrix, cfg: &ExperimentConfig, seed: u64) -> wclab_core::Result<IsolationReport> {
    let measured = simulate_onoff_measurement(c, &cfg.error.model(seed))?;
    let inv = invert_calibration(&measured)?;
    let calib = match cfg.quantization.model() {
        Some(q) => quantize_matrix(&inv, &q),
        None => inv,
    };
    isolation_report(c, &calib)
}

/// Isolation over the configured seeds, returning the first seed's full report.
pub fn isolation_over_seeds(c: &ComplexMatrix, cfg: &ExperimentConfig) -> wclab_core::Result<(IsolationStats, IsolationReport)> {
    let mut first = None;
    let mut per_seed = Vec::with_capacity(cfg.seeds().len());
    for &seed in cfg.seeds() {
        let report = isolation_for_seed(c, cfg, seed)?;
        per_seed.push((seed, report.mean_db, report.min_db));
        first.get_or_insert(report);
    }
    let means: Vec<f64> = per_seed.iter().map(|s| s.1).collect();
    let stats = IsolationStats {
        median_mean_db: median(&means),
        min_mean_db: means.iter().cloned().fold(f64::INFINITY, f64::min),
        max_mean_db: means.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        per_seed,
    };
    Ok((stats, first.expect("seed list is validated non-empty")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRow {
    pub label: String,
    pub standoff_m: f64,
    pub pattern_q: f64,
    pub diagnostics: LinkDiagnostics,
    pub isolation: IsolationStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticResult {
    pub size: usize,
    pub assembly_residual: f64,
    pub diagnostics: LinkDiagnostics,
    pub isolation: IsolationStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetEstimate {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    /// Absolute Bartlett peak power of the target's slice.
    pub peak_power_db: f64,
    pub gain_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub snapshot: usize,
    pub target: usize,
    pub mode: EmulationMode,
    /// Seed of the calibration error draw; `None` for deterministic modes.
    pub seed: Option<u64>,
    pub estimate: Option<TargetEstimate>,
    /// PAS similarity against the ideal mode for the same target.
    pub psp_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroneReport {
    pub scenario: Scenario,
    pub rows: Vec<EstimateRow>,
    pub link: LinkDiagnostics,
}

impl DroneReport {
    pub fn row(&self, snapshot: usize, target: usize, mode: EmulationMode, seed: Option<u64>) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| r.snapshot == snapshot && r.target == target && r.mode == mode && (seed.is_none() || r.seed == seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    DistanceSweep(Vec<LinkRow>),
    PatternComparison(Vec<LinkRow>),
    SyntheticArray(SyntheticResult),
    Drone(DroneReport),
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub outcome: Outcome,
}

/// Face-to-face DUT and probe arrays `standoff_m` apart, optionally forcing both patterns.
pub fn link_geometry(
    cfg: &ExperimentConfig,
    standoff_m: f64,
    pattern: Option<RadiationPattern>,
) -> wclab_core::Result<(UpaGeometry, UpaGeometry)> {
    let build = |a: &ArrayConfig| -> wclab_core::Result<UpaGeometry> {
        let mut g = a.geometry()?;
        if let Some(p) = pattern {
            g.pattern = p;
        }
        Ok(g)
    };
    let dut = build(&cfg.dut)?;
    let placement = dut.facing(standoff_m)?;
    let probe = build(cfg.probe())?;
    let probe = UpaGeometry::new(probe.rows, probe.cols, probe.spacing_m, placement.center_m, placement.boresight, probe.pattern)?;
    Ok((dut, probe))
}

fn mm_label(standoff_m: f64) -> String {
    format!("{:.1}mm", standoff_m * 1000.0)
}

fn write_condition_csv(rows: &[LinkRow], w: &mut impl Write) -> wclab_core::Result<()> {
    writeln!(w, "label,standoff_m,pattern_q,kappa_2,kappa_inf,is_sdd,epsilon,d_max,d_min,varah_bound,kappa_inf_upper")?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.9e}")).unwrap_or_default();
    for r in rows {
        let d = &r.diagnostics;
        writeln!(
            w,
            "{},{:.6},{},{:.9e},{:.9e},{},{},{:.9e},{:.9e},{},{}",
            r.label,
            r.standoff_m,
            r.pattern_q,
            d.kappa_2,
            d.kappa_inf,
            d.sdd.is_sdd,
            opt(d.sdd.epsilon),
            d.sdd.d_max,
            d.sdd.d_min,
            opt(d.sdd.varah_inverse_bound),
            opt(d.sdd.kappa_inf_upper)
        )?;
    }
    Ok(())
}

fn write_isolation_summary(rows: &[LinkRow], w: &mut impl Write) -> wclab_core::Result<()> {
    writeln!(w, "label,seed,mean_db,min_db")?;
    for r in rows {
        for (seed, mean, min) in &r.isolation.per_seed {
            writeln!(w, "{},{seed},{mean:.6},{min:.6}", r.label)?;
        }
    }
    writeln!(w, "# label,median_mean_db,min_mean_db,max_mean_db")?;
    for r in rows {
        let s = &r.isolation;
        writeln!(w, "# {},{:.6},{:.6},{:.6}", r.label, s.median_mean_db, s.min_mean_db, s.max_mean_db)?;
    }
    Ok(())
}

fn run_link_rows(
    cfg: &ExperimentConfig,
    bundle: &mut Bundle,
    cases: &[(String, f64, Option<RadiationPattern>)],
) -> Result<Vec<LinkRow>, RunError> {
    let carrier = cfg.carrier_hz();
    let mut rows = Vec::with_capacity(cases.len());
    for (label, standoff, pattern) in cases {
        let (dut, probe) = link_geometry(cfg, *standoff, *pattern).stage(|| format!("geometry {label}"))?;
        let c = synthesize_transfer_matrix(&dut, &probe, carrier).stage(|| format!("synthesis {label}"))?;
        let diagnostics = link_diagnostics(&c).stage(|| format!("conditioning {label}"))?;
        let (isolation, first) = isolation_over_seeds(&c, cfg).stage(|| format!("isolation {label}"))?;
        bundle.write(&format!("c_{label}.csv"), |w| c.write_csv(w))?;
        bundle.write(&format!("isolation_{label}.csv"), |w| first.write_csv(w))?;
        rows.push(LinkRow { label: label.clone(), standoff_m: *standoff, pattern_q: dut.pattern.exponent_q, diagnostics, isolation });
    }
    bundle.write("condition.csv", |w| write_condition_csv(&rows, w))?;
    bundle.write("isolation_summary.csv", |w| write_isolation_summary(&rows, w))?;
    Ok(rows)
}

fn run_distance_sweep(cfg: &ExperimentConfig, bundle: &mut Bundle) -> Result<Outcome, RunError> {
    let cases: Vec<_> = cfg.link.standoffs_m.iter().map(|&s| (mm_label(s), s, None)).collect();
    Ok(Outcome::DistanceSweep(run_link_rows(cfg, bundle, &cases)?))
}

fn run_pattern_comparison(cfg: &ExperimentConfig, bundle: &mut Bundle) -> Result<Outcome, RunError> {
    let standoff = cfg.link.standoffs_m[0];
    let floor = cfg.dut.pattern_floor;
    let pc = &cfg.pattern_comparison;
    let mut cases = Vec::new();
    for (name, q) in [("narrow", pc.narrow_q), ("wide", pc.wide_q)] {
        let pattern = RadiationPattern::new(q, floor).stage(|| format!("pattern {name}"))?;
        cases.push((format!("{name}_q{q}"), standoff, Some(pattern)));
    }
    Ok(Outcome::PatternComparison(run_link_rows(cfg, bundle, &cases)?))
}

/// Virtual-aperture synthesis block by block, compared with one-shot synthesis.
pub fn synthetic_aperture(cfg: &ExperimentConfig) -> wclab_core::Result<(ComplexMatrix, ComplexMatrix)> {
    let (dut, probe) = link_geometry(cfg, cfg.link.standoffs_m[0], None)?;
    let (tr, tc) = (cfg.synthetic.tile_rows, cfg.synthetic.tile_cols);
    let dut_tiles = dut.tiled_positions(tr, tc);
    let probe_tiles = probe.tiled_positions(tr, tc);
    let blocks = synthesize_blocks(&dut_tiles, &probe_tiles, cfg.carrier_hz())?;
    let assembled = assemble_synthetic_matrix(&blocks)?;
    let dut_all: Vec<_> = dut_tiles.iter().flat_map(|g| g.elements()).collect();
    let probe_all: Vec<_> = probe_tiles.iter().flat_map(|g| g.elements()).collect();
    let direct = synthesize_between(&dut_all, &probe_all, cfg.carrier_hz())?;
    Ok((assembled, direct))
}

fn run_synthetic_array(cfg: &ExperimentConfig, bundle: &mut Bundle) -> Result<Outcome, RunError> {
    let (assembled, direct) = synthetic_aperture(cfg).stage(|| "synthetic aperture synthesis".into())?;
    let residual = assembled.max_abs_diff(&direct).stage(|| "assembly check".into())?;
    let diagnostics = link_diagnostics(&assembled).stage(|| "synthetic conditioning".into())?;
    let (isolation, first) = isolation_over_seeds(&assembled, cfg).stage(|| "synthetic isolation".into())?;
    let n = assembled.rows();
    bundle.write("c_synthetic.csv", |w| assembled.write_csv(w))?;
    bundle.write("isolation_synthetic.csv", |w| first.write_csv(w))?;
    let row = LinkRow {
        label: "synthetic".into(),
        standoff_m: cfg.link.standoffs_m[0],
        pattern_q: cfg.dut.pattern_q,
        diagnostics: diagnostics.clone(),
        isolation: isolation.clone(),
    };
    bundle.write("condition.csv", |w| write_condition_csv(std::slice::from_ref(&row), w))?;
    bundle.write("isolation_summary.csv", |w| write_isolation_summary(std::slice::from_ref(&row), w))?;
    let (tr, tc) = (cfg.synthetic.tile_rows, cfg.synthetic.tile_cols);
    bundle.write("synthetic.csv", |w| {
        writeln!(w, "size,tile_rows,tile_cols,standoff_m,assembly_residual,kappa_2,kappa_inf,is_sdd")?;
        writeln!(
            w,
            "{n},{tr},{tc},{:.6},{:.6e},{:.9e},{:.9e},{}",
            cfg.link.standoffs_m[0], residual, diagnostics.kappa_2, diagnostics.kappa_inf, diagnostics.sdd.is_sdd
        )?;
        Ok(())
    })?;
    Ok(Outcome::SyntheticArray(SyntheticResult { size: n, assembly_residual: residual, diagnostics, isolation }))
}

fn mode_tag(mode: EmulationMode, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("{}-s{s}", mode.name()),
        None => mode.name().to_string(),
    }
}

struct ModeRun {
    mode: EmulationMode,
    seed: Option<u64>,
    cable: Option<WirelessCable>,
}

/// Per-snapshot, per-target outcome of one mode run before gain normalization.
struct SnapshotResult {
    observations: Vec<GainObservation>,
    pairing: Vec<Option<usize>>,
    angles: Vec<(f64, f64)>,
    pas: Vec<PasGrid>,
}

fn process_mode(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    geom: &UpaGeometry,
    run: &ModeRun,
    bundle: &mut Bundle,
) -> Result<Vec<SnapshotResult>, RunError> {
    let p = &cfg.processing;
    let tag = mode_tag(run.mode, run.seed);
    let mut results = Vec::with_capacity(scenario.snapshots.len());
    for snap in &scenario.snapshots {
        let label = &snap.label;
        let ctx = |what: &str| format!("{what} [{tag}, {label}]");
        let ds = generate_with_cable(scenario, snap, geom, run.cable.as_ref(), p.acquisition()).stage(|| ctx("dataset"))?;
        if p.write_datasets {
            bundle.write(&format!("cfr_{tag}_{label}.bin"), |w| ds.write_binary(w))?;
        }
        let map = range_velocity_map_cropped(&ds, 0, p.window(), p.zero_pad, Some(p.max_range_m)).stage(|| ctx("range-velocity map"))?;
        bundle.write(&format!("map_{tag}_{label}.csv"), |w| map.write_csv(w))?;
        let peaks = detect_peaks(&map, snap.targets.len(), p.min_separation_bins * p.zero_pad, p.peak_floor_db);
        bundle.write(&format!("peaks_{tag}_{label}.csv"), |w| write_range_velocity_peaks(&peaks, w))?;

        let mut observations = Vec::with_capacity(peaks.len());
        let mut grids = Vec::with_capacity(peaks.len());
        for peak in &peaks {
            let h = target_slice_cir(&ds, peak.range_m, Some(peak.velocity_mps), p.window(), p.zero_pad).stage(|| ctx("slice"))?;
            let pas = bartlett_pas(&h, geom, &p.sector(), p.steering(), scenario.carrier_hz).stage(|| ctx("PAS"))?;
            observations.push(GainObservation { range_m: peak.range_m, velocity_mps: peak.velocity_mps, power_db: pas.peak().power_db });
            grids.push(pas);
        }
        drop(ds);
        let pairing = pair_observations(&snap.targets, &observations, &pairing_scale(scenario));
        let mut angles = Vec::new();
        let mut pas = Vec::new();
        for (n, m) in pairing.iter().enumerate() {
            if let Some(m) = *m {
                let grid = &grids[m];
                bundle.write(&format!("pas_{tag}_{label}_target{}.csv", n + 1), |w| grid.write_csv(w))?;
            }
        }
        for g in grids {
            let pk = g.peak();
            angles.push((pk.elevation_deg, pk.azimuth_deg));
            pas.push(g);
        }
        results.push(SnapshotResult { observations, pairing, angles, pas });
    }
    Ok(results)
}

fn pairing_scale(scenario: &Scenario) -> PairingScale {
    let lambda = scenario.wavelength();
    PairingScale {
        range_bin_m: scenario.max_unambiguous_range() / scenario.num_freq as f64,
        velocity_bin_mps: lambda / (2.0 * scenario.num_time as f64 * scenario.snapshot_interval_s),
        velocity_span_mps: Some(lambda / (2.0 * scenario.snapshot_interval_s)),
    }
}

fn run_drone(cfg: &ExperimentConfig, bundle: &mut Bundle, warnings: &mut Vec<String>) -> Result<Outcome, RunError> {
    let scenario = cfg.scenario()?;
    warnings.extend(scenario.aliasing_warnings());
    let geom = cfg.dut.geometry().stage(|| "DUT geometry".into())?;
    let standoff = cfg.link.standoffs_m[0];
    let (dut, probe) = link_geometry(cfg, standoff, None).stage(|| "link geometry".into())?;
    let c = synthesize_transfer_matrix(&dut, &probe, scenario.carrier_hz).stage(|| "link synthesis".into())?;
    let link = link_diagnostics(&c).stage(|| "link conditioning".into())?;
    bundle.write("c_physical.csv", |w| c.write_csv(w))?;

    let quant = cfg.quantization.model();
    let mut runs = Vec::new();
    for mode in cfg.processing.modes() {
        match mode {
            EmulationMode::Ideal => runs.push(ModeRun { mode, seed: None, cable: None }),
            EmulationMode::Conducted => {
                runs.push(ModeRun { mode, seed: None, cable: Some(WirelessCable::conducted(geom.element_count(), quant)) })
            }
            EmulationMode::Ota => {
                for &seed in cfg.seeds() {
                    let cable = WirelessCable::establish(&c, &cfg.error.model(seed), quant).stage(|| format!("calibration seed {seed}"))?;
                    let calib = match &quant {
                        Some(q) => quantize_matrix(&cable.calibration, q),
                        None => cable.calibration.clone(),
                    };
                    let iso = isolation_report(&c, &calib).stage(|| format!("isolation seed {seed}"))?;
                    bundle.write(&format!("isolation_{}.csv", mode_tag(mode, Some(seed))), |w| iso.write_csv(w))?;
                    runs.push(ModeRun { mode, seed: Some(seed), cable: Some(cable) });
                }
            }
        }
    }

    let scale = pairing_scale(&scenario);
    let mut rows = Vec::new();
    let mut ideal: Option<Vec<SnapshotResult>> = None;
    for run in &runs {
        let results = process_mode(cfg, &scenario, &geom, run, bundle)?;
        let observed: Vec<SnapshotObservations> = scenario
            .snapshots
            .iter()
            .zip(&results)
            .map(|(s, r)| SnapshotObservations { targets: s.targets.clone(), observations: r.observations.clone() })
            .collect();
        let gains = normalized_gain_estimate(&observed, &scale).stage(|| format!("gain estimate [{}]", mode_tag(run.mode, run.seed)));
        let gains = match gains {
            Ok(g) => {
                warnings.extend(g.warnings.iter().map(|w| format!("{}: {w}", mode_tag(run.mode, run.seed))));
                Some(g)
            }
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        };
        for (s, (snap, res)) in scenario.snapshots.iter().zip(&results).enumerate() {
            for n in 0..snap.targets.len() {
                let estimate = res.pairing[n].map(|m| {
                    let o = &res.observations[m];
                    TargetEstimate {
                        range_m: o.range_m,
                        velocity_mps: o.velocity_mps,
                        elevation_deg: res.angles[m].0,
                        azimuth_deg: res.angles[m].1,
                        peak_power_db: o.power_db,
                        gain_db: gains.as_ref().and_then(|g| g.gains_db[s][n]),
                    }
                });
                let psp_percent = match (&ideal, res.pairing[n]) {
                    (None, Some(_)) => Some(100.0),
                    (Some(reference), Some(m)) => reference[s].pairing[n]
                        .map(|rm| psp(&reference[s].pas[rm], &res.pas[m]))
                        .transpose()
                        .stage(|| "PAS similarity".into())?,
                    _ => None,
                };
                rows.push(EstimateRow { snapshot: s, target: n, mode: run.mode, seed: run.seed, estimate, psp_percent });
            }
        }
        if run.mode == EmulationMode::Ideal {
            ideal = Some(results);
        }
    }

    let report = DroneReport { scenario, rows, link };
    bundle.write(TARGETS_FILE, |w| write_targets_csv(&report.scenario, w))?;
    bundle.write(ESTIMATES_FILE, |w| write_estimates_csv(&report, w))?;
    bundle.write("psp.csv", |w| {
        writeln!(w, "snapshot,target,mode,seed,psp_percent")?;
        for r in report.rows.iter().filter(|r| r.mode != EmulationMode::Ideal) {
            if let Some(p) = r.psp_percent {
                let label = &report.scenario.snapshots[r.snapshot].label;
                writeln!(w, "{label},{},{},{},{p:.4}", r.target + 1, r.mode.name(), seed_str(r.seed))?;
            }
        }
        Ok(())
    })?;
    Ok(Outcome::Drone(report))
}

fn seed_str(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

fn write_targets_csv(scenario: &Scenario, w: &mut impl Write) -> wclab_core::Result<()> {
    writeln!(w, "snapshot,target,range_m,velocity_mps,elevation_deg,azimuth_deg,gain_db")?;
    for snap in &scenario.snapshots {
        for (n, t) in snap.targets.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                snap.label,
                n + 1,
                t.range_m,
                t.radial_velocity_mps,
                t.elevation_deg,
                t.azimuth_deg,
                t.gain_db
            )?;
        }
    }
    Ok(())
}

fn write_estimates_csv(report: &DroneReport, w: &mut impl Write) -> wclab_core::Result<()> {
    writeln!(w, "snapshot,target,mode,seed,range_m,velocity_mps,elevation_deg,azimuth_deg,peak_power_db,gain_db,psp_percent")?;
    for r in &report.rows {
        let label = &report.scenario.snapshots[r.snapshot].label;
        let est = match &r.estimate {
            Some(e) => format!(
                "{:.4},{:.4},{:.1},{:.1},{:.4},{}",
                e.range_m,
                e.velocity_mps,
                e.elevation_deg,
                e.azimuth_deg,
                e.peak_power_db,
                e.gain_db.map(|g| format!("{g:.4}")).unwrap_or_default()
            ),
            None => ",,,,,".into(),
        };
        let psp = r.psp_percent.map(|p| format!("{p:.4}")).unwrap_or_default();
        writeln!(w, "{label},{},{},{},{est},{psp}", r.target + 1, r.mode.name(), seed_str(r.seed))?;
    }
    Ok(())
}

/// Hex SHA-256 of the echoed configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.echo().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(cfg: &ExperimentConfig, files: &[String], warnings: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind = {}\n", cfg.kind()));
    out.push_str(&format!("config_sha256 = {}\n", config_hash(cfg)));
    out.push_str(&format!("wclab_version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("wclab_core_version = {}\n", wclab_core::VERSION));
    let seeds: Vec<String> = cfg.seeds().iter().map(u64::to_string).collect();
    out.push_str(&format!("seeds = {}\n", seeds.join(",")));
    if cfg.kind() == ExperimentKind::SyntheticArray {
        let (tr, tc) = (cfg.synthetic.tile_rows, cfg.synthetic.tile_cols);
        out.push_str(&format!(
            "virtual_aperture = {tr}x{tc} edge-to-edge tiling of the {}x{} array, blocks ordered row-major from the bottom-left tile\n",
            cfg.dut.rows, cfg.dut.cols
        ));
    }
    for w in warnings {
        out.push_str(&format!("warning = {w}\n"));
    }
    for f in files {
        out.push_str(&format!("file = {f}\n"));
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let mut bundle = Bundle::create(&cfg.output_dir)?;
    bundle.write_text("config.toml", &cfg.echo())?;
    let mut warnings = Vec::new();
    let outcome = match cfg.kind() {
        ExperimentKind::DistanceSweep => run_distance_sweep(cfg, &mut bundle)?,
        ExperimentKind::SyntheticArray => run_synthetic_array(cfg, &mut bundle)?,
        ExperimentKind::PatternComparison => run_pattern_comparison(cfg, &mut bundle)?,
        ExperimentKind::DroneScenario | ExperimentKind::Custom => {
            let outcome = run_drone(cfg, &mut bundle, &mut warnings)?;
            write_summary(bundle.dir()).map_err(|source| RunError::Io { path: bundle.dir().to_path_buf(), source })?;
            bundle.files.push(crate::summary::SUMMARY_CSV.into());
            bundle.files.push(crate::summary::SUMMARY_TXT.into());
            outcome
        }
    };
    let text = manifest(cfg, bundle.files(), &warnings);
    bundle.write_text("manifest.txt", &text)?;
    Ok(RunReport { output_dir: bundle.dir.clone(), files: bundle.files.clone(), warnings, outcome })
}
