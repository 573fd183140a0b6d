//! Experiment configuration: TOML parsing, default filling and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wclab_core::emulation::{AcquisitionMode, EmulationMode, Scenario, Snapshot, TargetState};
use wclab_core::estimation::{ScanSector, SteeringModel, Window};
use wclab_core::geometry::{wavelength, RadiationPattern, UpaGeometry};
use wclab_core::{MeasurementErrorModel, QuantizationModel};

pub const KINDS: [&str; 5] = ["distance-sweep", "synthetic-array", "pattern-comparison", "drone-scenario", "custom"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DistanceSweep,
    SyntheticArray,
    PatternComparison,
    DroneScenario,
    Custom,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "distance-sweep" => Self::DistanceSweep,
            "synthetic-array" => Self::SyntheticArray,
            "pattern-comparison" => Self::PatternComparison,
            "drone-scenario" => Self::DroneScenario,
            "custom" => Self::Custom,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DistanceSweep => "distance-sweep",
            Self::SyntheticArray => "synthetic-array",
            Self::PatternComparison => "pattern-comparison",
            Self::DroneScenario => "drone-scenario",
            Self::Custom => "custom",
        }
    }

    fn default_seeds(&self) -> Vec<u64> {
        match self {
            Self::DistanceSweep | Self::PatternComparison | Self::SyntheticArray => (1..=20).collect(),
            Self::DroneScenario | Self::Custom => vec![1],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Defaults to half a wavelength at the carrier.
    pub spacing_m: Option<f64>,
    pub pattern_q: f64,
    pub pattern_floor: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 8,
            spacing_m: None,
            pattern_q: RadiationPattern::WAVEGUIDE.exponent_q,
            pattern_floor: RadiationPattern::WAVEGUIDE.floor_gain,
        }
    }
}

impl ArrayConfig {
    fn validate(&self, section: &str) -> Result<(), ConfigError> {
        if self.rows == 0 {
            return Err(invalid(&format!("{section}.rows"), "must be at least 1"));
        }
        if self.cols == 0 {
            return Err(invalid(&format!("{section}.cols"), "must be at least 1"));
        }
        if let Some(s) = self.spacing_m {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(&format!("{section}.spacing_m"), format!("must be positive, got {s}")));
            }
        }
        if !(self.pattern_q >= 0.0 && self.pattern_q.is_finite()) {
            return Err(invalid(&format!("{section}.pattern_q"), "must be a non-negative number"));
        }
        if !(self.pattern_floor > 0.0 && self.pattern_floor <= 1.0) {
            return Err(invalid(&format!("{section}.pattern_floor"), "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn pattern(&self) -> RadiationPattern {
        RadiationPattern { exponent_q: self.pattern_q, floor_gain: self.pattern_floor }
    }

    /// Array at the origin facing `+y`.
    pub fn geometry(&self) -> wclab_core::Result<UpaGeometry> {
        UpaGeometry::at_origin(self.rows, self.cols, self.spacing_m.unwrap_or(f64::NAN), self.pattern())
    }
}

/// Measurement error level in dB, or the keyword `"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ErrorLevel {
    Db(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorConfig {
    pub relative_error_db: ErrorLevel,
}

impl Default for ErrorConfig {
    fn default() -> Self {
        Self { relative_error_db: ErrorLevel::Db(-40.0) }
    }
}

impl ErrorConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        match &self.relative_error_db {
            ErrorLevel::Db(db) if *db <= 0.0 && db.is_finite() => Ok(()),
            ErrorLevel::Db(db) => Err(invalid("error.relative_error_db", format!("must be <= 0 dB, got {db}"))),
            ErrorLevel::Keyword(k) if k == "none" => Ok(()),
            ErrorLevel::Keyword(k) => Err(invalid("error.relative_error_db", format!("expected a number or \"none\", got \"{k}\""))),
        }
    }

    pub fn model(&self, seed: u64) -> MeasurementErrorModel {
        match self.relative_error_db {
            ErrorLevel::Db(db) => MeasurementErrorModel { relative_error_db: Some(db), seed },
            ErrorLevel::Keyword(_) => MeasurementErrorModel::none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizationConfig {
    pub enabled: bool,
    pub phase_bits: u32,
    pub amplitude_step_db: f64,
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        Self { enabled: true, phase_bits: 10, amplitude_step_db: 0.0 }
    }
}

impl QuantizationConfig {
    pub fn model(&self) -> Option<QuantizationModel> {
        self.enabled.then_some(QuantizationModel { phase_bits: self.phase_bits, amplitude_step_db: self.amplitude_step_db })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub carrier_hz: f64,
    /// Distance-sweep uses every entry; other experiments use the first.
    pub standoffs_m: Vec<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { carrier_hz: Scenario::DEFAULT_CARRIER_HZ, standoffs_m: vec![0.01, 0.30, 0.80] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternComparisonConfig {
    pub narrow_q: f64,
    pub wide_q: f64,
}

impl Default for PatternComparisonConfig {
    fn default() -> Self {
        Self { narrow_q: RadiationPattern::WAVEGUIDE.exponent_q, wide_q: RadiationPattern::PATCH.exponent_q }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub tile_rows: usize,
    pub tile_cols: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { tile_rows: 2, tile_cols: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotConfig {
    pub label: String,
    pub targets: Vec<TargetConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub num_freq: usize,
    pub num_time: usize,
    pub snapshot_interval_s: f64,
    pub snapshots: Vec<SnapshotConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::from_scenario(&Scenario::two_drones())
    }
}

impl ScenarioConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            carrier_hz: s.carrier_hz,
            bandwidth_hz: s.bandwidth_hz,
            num_freq: s.num_freq,
            num_time: s.num_time,
            snapshot_interval_s: s.snapshot_interval_s,
            snapshots: s
                .snapshots
                .iter()
                .map(|snap| SnapshotConfig {
                    label: snap.label.clone(),
                    targets: snap
                        .targets
                        .iter()
                        .map(|t| TargetConfig {
                            range_m: t.range_m,
                            velocity_mps: t.radial_velocity_mps,
                            elevation_deg: t.elevation_deg,
                            azimuth_deg: t.azimuth_deg,
                            gain_db: t.gain_db,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let mut snapshots = Vec::with_capacity(self.snapshots.len());
        for (s, snap) in self.snapshots.iter().enumerate() {
            let mut targets = Vec::with_capacity(snap.targets.len());
            for (n, t) in snap.targets.iter().enumerate() {
                let target = TargetState::new(t.range_m, t.velocity_mps, t.elevation_deg, t.azimuth_deg, t.gain_db)
                    .map_err(|e| invalid(&format!("scenario.snapshots[{s}].targets[{n}]"), e.to_string()))?;
                targets.push(target);
            }
            snapshots.push(Snapshot { label: snap.label.clone(), targets });
        }
        let scenario = Scenario {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            num_freq: self.num_freq,
            num_time: self.num_time,
            snapshot_interval_s: self.snapshot_interval_s,
            snapshots,
        };
        scenario.validate().map_err(|e| invalid("scenario", e.to_string()))?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessingConfig {
    pub window: String,
    pub zero_pad: usize,
    pub max_range_m: f64,
    pub min_separation_bins: usize,
    pub peak_floor_db: f64,
    pub steering: String,
    pub grid_step_deg: f64,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub azimuth_min_deg: f64,
    pub azimuth_max_deg: f64,
    pub acquisition: String,
    /// Emulation modes compared against the ideal reference.
    pub modes: Vec<String>,
    /// CFR binaries are large (about 0.5 GB per snapshot and mode at default sizes).
    pub write_datasets: bool,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        let sector = ScanSector::default();
        Self {
            window: Window::Rectangular.name().into(),
            zero_pad: 4,
            max_range_m: 200.0,
            min_separation_bins: 8,
            peak_floor_db: -40.0,
            steering: SteeringModel::TwoWay.name().into(),
            grid_step_deg: sector.step_deg,
            elevation_min_deg: sector.elevation_min_deg,
            elevation_max_deg: sector.elevation_max_deg,
            azimuth_min_deg: sector.azimuth_min_deg,
            azimuth_max_deg: sector.azimuth_max_deg,
            acquisition: AcquisitionMode::PerElementMonostatic.name().into(),
            modes: EmulationMode::ALL.iter().map(|m| m.name().to_string()).collect(),
            write_datasets: false,
        }
    }
}

impl ProcessingConfig {
    pub fn window(&self) -> Window {
        Window::parse(&self.window).unwrap_or(Window::Rectangular)
    }

    pub fn steering(&self) -> SteeringModel {
        SteeringModel::parse(&self.steering).unwrap_or(SteeringModel::TwoWay)
    }

    pub fn acquisition(&self) -> AcquisitionMode {
        AcquisitionMode::parse(&self.acquisition).unwrap_or(AcquisitionMode::PerElementMonostatic)
    }

    pub fn sector(&self) -> ScanSector {
        ScanSector {
            elevation_min_deg: self.elevation_min_deg,
            elevation_max_deg: self.elevation_max_deg,
            azimuth_min_deg: self.azimuth_min_deg,
            azimuth_max_deg: self.azimuth_max_deg,
            step_deg: self.grid_step_deg,
        }
    }

    /// Ideal first, then the configured modes in canonical order, without repeats.
    pub fn modes(&self) -> Vec<EmulationMode> {
        EmulationMode::ALL.into_iter().filter(|m| *m == EmulationMode::Ideal || self.modes.iter().any(|s| s == m.name())).collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if Window::parse(&self.window).is_none() {
            return Err(invalid("processing.window", format!("unknown window \"{}\" (rectangular, hann)", self.window)));
        }
        if SteeringModel::parse(&self.steering).is_none() {
            return Err(invalid("processing.steering", format!("unknown model \"{}\" (one-way, two-way)", self.steering)));
        }
        if AcquisitionMode::parse(&self.acquisition).is_none() {
            return Err(invalid(
                "processing.acquisition",
                format!("unknown mode \"{}\" (per-element-monostatic, fixed-reference-column)", self.acquisition),
            ));
        }
        for m in &self.modes {
            if EmulationMode::parse(m).is_none() {
                return Err(invalid("processing.modes", format!("unknown mode \"{m}\" (ideal, conducted, ota)")));
            }
        }
        if self.zero_pad == 0 {
            return Err(invalid("processing.zero_pad", "must be at least 1"));
        }
        if !(self.max_range_m > 0.0) {
            return Err(invalid("processing.max_range_m", "must be positive"));
        }
        if self.min_separation_bins == 0 {
            return Err(invalid("processing.min_separation_bins", "must be at least 1"));
        }
        if !(self.grid_step_deg > 0.0) {
            return Err(invalid("processing.grid_step_deg", format!("must be positive, got {}", self.grid_step_deg)));
        }
        self.sector().validate().map_err(|e| invalid("processing", e.to_string()))
    }
}

/// Fully resolved experiment configuration. After [`load_config`] every
/// optional field carries its effective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Scenario table loaded by the `custom` kind, relative to the config file.
    #[serde(default)]
    pub scenario_file: Option<PathBuf>,
    #[serde(default)]
    pub dut: ArrayConfig,
    #[serde(default)]
    pub probe: Option<ArrayConfig>,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub error: ErrorConfig,
    #[serde(default)]
    pub quantization: QuantizationConfig,
    #[serde(default)]
    pub pattern_comparison: PatternComparisonConfig,
    #[serde(default)]
    pub synthetic: SyntheticConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub processing: ProcessingConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("wclab-out")
}

/// Only the `scenario` table of a scenario file is read.
#[derive(Deserialize)]
struct ScenarioFile {
    scenario: ScenarioConfig,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        ExperimentKind::parse(&self.kind).expect("validated config")
    }

    pub fn seeds(&self) -> &[u64] {
        self.seeds.as_deref().unwrap_or(&[])
    }

    pub fn probe(&self) -> &ArrayConfig {
        self.probe.as_ref().unwrap_or(&self.dut)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario.scenario()
    }

    /// Parses TOML text; `base_dir` resolves relative file references.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        let kind = ExperimentKind::parse(&cfg.kind)
            .ok_or_else(|| invalid("kind", format!("unknown experiment kind \"{}\"; valid kinds: {}", cfg.kind, KINDS.join(", "))))?;
        if cfg.seeds.is_none() {
            cfg.seeds = Some(kind.default_seeds());
        }
        if let Some(rel) = &cfg.scenario_file {
            let base = origin.parent().unwrap_or(Path::new("."));
            let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
            let text = std::fs::read_to_string(&path)
                .map_err(|_| invalid("scenario_file", format!("{} does not exist or is unreadable", path.display())))?;
            let file: ScenarioFile =
                toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.clone(), message: e.to_string() })?;
            cfg.scenario = file.scenario;
            cfg.scenario_file = Some(path);
        } else if kind == ExperimentKind::Custom {
            return Err(invalid("scenario_file", "the custom kind needs a scenario file"));
        }
        let lambda_half = wavelength(cfg.carrier_hz()) / 2.0;
        cfg.dut.spacing_m.get_or_insert(lambda_half);
        if let Some(p) = cfg.probe.as_mut() {
            p.spacing_m.get_or_insert(lambda_half);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The carrier the link is synthesized at; the drone experiments use the scenario carrier.
    pub fn carrier_hz(&self) -> f64 {
        match ExperimentKind::parse(&self.kind) {
            Some(ExperimentKind::DroneScenario | ExperimentKind::Custom) => self.scenario.carrier_hz,
            _ => self.link.carrier_hz,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = ExperimentKind::parse(&self.kind)
            .ok_or_else(|| invalid("kind", format!("unknown experiment kind \"{}\"; valid kinds: {}", self.kind, KINDS.join(", "))))?;
        match &self.seeds {
            Some(s) if !s.is_empty() => {}
            _ => return Err(invalid("seeds", "must list at least one seed")),
        }
        self.dut.validate("dut")?;
        if let Some(p) = &self.probe {
            p.validate("probe")?;
            if p.rows * p.cols != self.dut.rows * self.dut.cols {
                return Err(invalid("probe", "probe and DUT must have the same element count"));
            }
        }
        if !(self.link.carrier_hz > 0.0 && self.link.carrier_hz.is_finite()) {
            return Err(invalid("link.carrier_hz", "must be positive"));
        }
        if self.link.standoffs_m.is_empty() {
            return Err(invalid("link.standoffs_m", "must list at least one standoff"));
        }
        if let Some(s) = self.link.standoffs_m.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid("link.standoffs_m", format!("standoffs must be positive, got {s}")));
        }
        self.error.validate()?;
        if self.quantization.phase_bits == 0 || self.quantization.phase_bits > 52 {
            return Err(invalid("quantization.phase_bits", "must be in 1..=52"));
        }
        if !(self.quantization.amplitude_step_db >= 0.0) {
            return Err(invalid("quantization.amplitude_step_db", "must be >= 0"));
        }
        for (name, q) in [
            ("pattern_comparison.narrow_q", self.pattern_comparison.narrow_q),
            ("pattern_comparison.wide_q", self.pattern_comparison.wide_q),
        ] {
            if !(q >= 0.0 && q.is_finite()) {
                return Err(invalid(name, "must be a non-negative number"));
            }
        }
        if self.synthetic.tile_rows == 0 || self.synthetic.tile_cols == 0 {
            return Err(invalid("synthetic", "tile counts must be at least 1"));
        }
        if self.synthetic.tile_rows * self.synthetic.tile_cols == 1 && kind == ExperimentKind::SyntheticArray {
            return Err(invalid("synthetic", "a single tile is not a virtual aperture"));
        }
        if matches!(kind, ExperimentKind::DroneScenario | ExperimentKind::Custom) {
            self.scenario()?;
            self.processing.validate()?;
        }
        Ok(())
    }

    /// TOML dump with every default filled in.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    ExperimentConfig::from_toml_str(&text, path)
}
