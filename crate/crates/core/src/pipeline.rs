//! End-to-end processing of one subject and of a paired cohort.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ensemble::{build_ensembles, resample_cycle, EnsembleCurves, EnsembleError, Interpolation, GRID_POINTS};
use crate::flow::{extract_flow, refine_roi, FlowError, FlowSamples, DEFAULT_REFINE_THRESHOLD};
use crate::gating::{
    classify_resp, detect_cycles_from_flow, detect_cycles_from_plethysmo, label_cycles,
    segment_cycles, CardiacParams, CycleBoundaries, CycleLabel, CycleMethod, GatingError,
    RespParams, DEFAULT_HYSTERESIS, DEFAULT_MAX_RR, DEFAULT_MIN_RR, DEFAULT_SMOOTHING_WINDOW,
};
use crate::ingest::{
    read_mask, read_physio, IngestError, PhysioKind, PhysioTrace, RoiLabel, RoiMask, SeriesKind,
    VelocitySeries, Encoding,
};
use crate::metrics::{
    reversal_check, stroke_volume, sv_modulation, MetricsError, SvConvention, SvReport, VolumeUnit,
};
use crate::report;
use crate::stats::{
    paired_t, spearman, spearman_permutation, wilcoxon_paired_with, PairedSample, StatResult,
    StatsError, WilcoxonMethod,
};
use crate::velocity::{
    background_correct, phase_to_velocity, unwrap_temporal_from, BackgroundStats, VelocityError,
    VelocityField,
};

pub const TOOL_NAME: &str = "csfdyn";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Minimum number of conv/EPI pairs per ROI for a cohort comparison.
pub const MIN_COHORT_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Velocity,
    Flow,
    Gating,
    Ensemble,
    Metrics,
    Stats,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Refusal,
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Refusal => 3,
            ErrorClass::Internal => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("[{stage:?}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub class: ErrorClass,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, class: ErrorClass, message: impl Into<String>) -> Self {
        Self {
            stage,
            class,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        Self::new(Stage::Ingest, ErrorClass::Input, e.to_string())
    }
}

impl From<VelocityError> for PipelineError {
    fn from(e: VelocityError) -> Self {
        Self::new(Stage::Velocity, ErrorClass::Input, e.to_string())
    }
}

impl From<FlowError> for PipelineError {
    fn from(e: FlowError) -> Self {
        Self::new(Stage::Flow, ErrorClass::Input, e.to_string())
    }
}

impl From<GatingError> for PipelineError {
    fn from(e: GatingError) -> Self {
        let class = match e {
            GatingError::TooFewCycles { .. }
            | GatingError::ArrhythmicSignal { .. }
            | GatingError::FlatSignal { .. }
            | GatingError::TraceTooShort { .. } => ErrorClass::Refusal,
            GatingError::WrongTraceKind { .. }
            | GatingError::ClockMismatch { .. }
            | GatingError::InvalidParameter(_) => ErrorClass::Input,
        };
        Self::new(Stage::Gating, class, e.to_string())
    }
}

impl From<EnsembleError> for PipelineError {
    fn from(e: EnsembleError) -> Self {
        let class = match e {
            EnsembleError::InvalidCycle(_) => ErrorClass::Internal,
            _ => ErrorClass::Refusal,
        };
        Self::new(Stage::Ensemble, class, e.to_string())
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        let class = match e {
            MetricsError::DivisionByZeroSv => ErrorClass::Refusal,
            _ => ErrorClass::Internal,
        };
        Self::new(Stage::Metrics, class, e.to_string())
    }
}

impl From<StatsError> for PipelineError {
    fn from(e: StatsError) -> Self {
        let class = match e {
            StatsError::DuplicateSubject(_) | StatsError::NonFinite(_) => ErrorClass::Input,
            _ => ErrorClass::Refusal,
        };
        Self::new(Stage::Stats, class, e.to_string())
    }
}

fn io_error(stage: Stage, path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::new(stage, ErrorClass::Input, format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleSource {
    #[default]
    Flow,
    Plethysmo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

/// Every tunable of the per-subject pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub unwrap: bool,
    pub unwrap_anchor: usize,
    pub refine_roi: bool,
    pub refine_threshold: f64,
    pub cycle_source: CycleSource,
    pub min_rr: f64,
    pub max_rr: f64,
    pub smoothing_window: f64,
    pub hysteresis: f64,
    pub require_resp: bool,
    pub interpolation: Interpolation,
    pub sv_convention: SvConvention,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            unwrap: true,
            unwrap_anchor: 0,
            refine_roi: false,
            refine_threshold: DEFAULT_REFINE_THRESHOLD,
            cycle_source: CycleSource::Flow,
            min_rr: DEFAULT_MIN_RR,
            max_rr: DEFAULT_MAX_RR,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            hysteresis: DEFAULT_HYSTERESIS,
            require_resp: false,
            interpolation: Interpolation::CubicSpline,
            sv_convention: SvConvention::LobeMean,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::new(Stage::Config, ErrorClass::Input, m));
        if !(0.0..=1.0).contains(&self.refine_threshold) {
            return bad(format!("refine_threshold {} outside [0, 1]", self.refine_threshold));
        }
        if !(self.min_rr > 0.0 && self.max_rr > self.min_rr && self.max_rr.is_finite()) {
            return bad(format!("need 0 < min_rr < max_rr, got {} / {}", self.min_rr, self.max_rr));
        }
        if !(self.smoothing_window > 0.0 && self.smoothing_window.is_finite()) {
            return bad(format!("smoothing_window {} must be positive", self.smoothing_window));
        }
        if !(0.0..1.0).contains(&self.hysteresis) {
            return bad(format!("hysteresis {} outside [0, 1)", self.hysteresis));
        }
        Ok(())
    }

    fn cardiac(&self) -> CardiacParams {
        CardiacParams {
            min_rr: self.min_rr,
            max_rr: self.max_rr,
        }
    }

    fn resp(&self) -> RespParams {
        RespParams {
            smoothing_window: self.smoothing_window,
            hysteresis: self.hysteresis,
        }
    }
}

/// One `process` invocation: inputs, parameters and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub series: PathBuf,
    pub roi_mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belt: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plethysmo: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_formats")]
    pub formats: BTreeSet<ReportFormat>,
}

pub fn default_formats() -> BTreeSet<ReportFormat> {
    [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg].into_iter().collect()
}

impl RunConfig {
    pub fn new(series: impl Into<PathBuf>, roi_mask: impl Into<PathBuf>) -> Self {
        Self {
            series: series.into(),
            roi_mask: roi_mask.into(),
            static_mask: None,
            belt: None,
            plethysmo: None,
            out_dir: None,
            params: Params::default(),
            formats: default_formats(),
        }
    }

    /// Resolve relative input and output paths against `base`.
    pub fn rebased(&self, base: &Path) -> Self {
        let j = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Self {
            series: j(&self.series),
            roi_mask: j(&self.roi_mask),
            static_mask: self.static_mask.as_ref().map(j),
            belt: self.belt.as_ref().map(j),
            plethysmo: self.plethysmo.as_ref().map(j),
            out_dir: self.out_dir.as_ref().map(j),
            ..self.clone()
        }
    }
}

/// Overlay `patch` onto `base`, recursing into objects; used so a config file
/// overrides command-line flags key by key. Null keys in `patch` leave `base` alone.
pub fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (_, Value::Null) => {}
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    continue;
                }
                merge_json(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub inputs: Vec<InputHash>,
}

impl Provenance {
    pub fn new(config: Value, inputs: Vec<InputHash>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            config,
            inputs,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// In-memory inputs of one subject.
#[derive(Debug, Clone)]
pub struct SubjectInputs {
    pub series: VelocitySeries,
    pub roi: RoiMask,
    pub static_mask: Option<RoiMask>,
    pub belt: Option<PhysioTrace>,
    pub plethysmo: Option<PhysioTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSummary {
    pub offset: f64,
    pub temporal_sd: f64,
    pub suspect: bool,
}

impl From<BackgroundStats> for BackgroundSummary {
    fn from(b: BackgroundStats) -> Self {
        Self {
            offset: b.offset,
            temporal_sd: b.temporal_sd,
            suspect: b.suspect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingSummary {
    pub method: CycleMethod,
    pub n_onsets: usize,
    pub n_cycles: usize,
    pub n_inspiration: usize,
    pub n_expiration: usize,
    pub n_mixed: usize,
    pub n_unlabeled: usize,
    /// Cycles dropped for holding fewer than four samples.
    pub n_rejected_short: usize,
    pub mean_rr: f64,
    pub rr_cv: f64,
    pub rr_min: f64,
    pub rr_max: f64,
    pub onsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalSummary {
    pub global: bool,
    pub inspiration: Option<bool>,
    pub expiration: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub provenance: Provenance,
    pub roi: RoiLabel,
    pub series_kind: SeriesKind,
    pub unit: VolumeUnit,
    pub interpolation: Interpolation,
    pub n_roi_pixels: usize,
    pub background: Option<BackgroundSummary>,
    pub gating: Option<GatingSummary>,
    pub global: SvReport,
    pub inspiration: Option<SvReport>,
    pub expiration: Option<SvReport>,
    pub sv_modulation: Option<f64>,
    pub reversal: ReversalSummary,
    pub curves: EnsembleCurves,
}

/// Run velocity → flow → gating → ensemble → metrics on in-memory inputs.
/// `config` is echoed into the report's provenance.
pub fn process_subject(
    inputs: &SubjectInputs,
    params: &Params,
    provenance: Provenance,
) -> Result<SubjectReport, PipelineError> {
    params.validate()?;
    let series = &inputs.series;
    let mut field = match series.header.encoding {
        Encoding::PhaseRadians => phase_to_velocity(series)?,
        Encoding::VelocityCmps => VelocityField::from_velocity_series(series)?,
    };
    if params.unwrap {
        field = unwrap_temporal_from(&field, params.unwrap_anchor)?;
    }
    let background = match &inputs.static_mask {
        Some(m) => {
            let (f, stats) = background_correct(&field, m)?;
            field = f;
            Some(BackgroundSummary::from(stats))
        }
        None => None,
    };
    let roi = if params.refine_roi {
        refine_roi(&field, &inputs.roi, params.refine_threshold)?
    } else {
        inputs.roi.clone()
    };
    let flow = extract_flow(&field, &roi)?;
    let unit = VolumeUnit::for_roi(roi.label);

    let (curves, gating) = match series.header.series_kind {
        SeriesKind::ContinuousEpi => {
            let (curves, gating) = continuous_ensembles(inputs, params, &flow)?;
            (curves, Some(gating))
        }
        SeriesKind::GatedConv => (gated_curve(&flow), None),
    };
    let sv = |c: &crate::ensemble::EnsembleCurve| {
        stroke_volume(&c.mean, c.mean_rr, unit, params.sv_convention)
    };
    let global = sv(&curves.global)?;
    let inspiration = curves.inspiration.as_ref().map(sv).transpose()?;
    let expiration = curves.expiration.as_ref().map(sv).transpose()?;
    let modulation = match (&inspiration, &expiration) {
        (Some(i), Some(e)) => Some(sv_modulation(i, e)?),
        _ => None,
    };
    let reversal = ReversalSummary {
        global: reversal_check(&curves.global.mean),
        inspiration: curves.inspiration.as_ref().map(|c| reversal_check(&c.mean)),
        expiration: curves.expiration.as_ref().map(|c| reversal_check(&c.mean)),
    };
    Ok(SubjectReport {
        provenance,
        roi: roi.label,
        series_kind: series.header.series_kind,
        unit,
        interpolation: params.interpolation,
        n_roi_pixels: roi.count(),
        background,
        gating,
        global,
        inspiration,
        expiration,
        sv_modulation: modulation,
        reversal,
        curves,
    })
}

fn continuous_ensembles(
    inputs: &SubjectInputs,
    params: &Params,
    flow: &FlowSamples,
) -> Result<(EnsembleCurves, GatingSummary), PipelineError> {
    let boundaries: CycleBoundaries = match params.cycle_source {
        CycleSource::Flow => detect_cycles_from_flow(flow, params.cardiac())?,
        CycleSource::Plethysmo => {
            let trace = inputs.plethysmo.as_ref().ok_or_else(|| {
                PipelineError::new(
                    Stage::Gating,
                    ErrorClass::Input,
                    "cycle_source plethysmo needs a plethysmograph trace",
                )
            })?;
            detect_cycles_from_plethysmo(trace, params.cardiac())?
        }
    };
    let cycles = match &inputs.belt {
        Some(belt) => {
            let phases = classify_resp(belt, params.resp())?;
            label_cycles(&boundaries, &phases, flow)?
        }
        None if params.require_resp => {
            return Err(PipelineError::new(
                Stage::Gating,
                ErrorClass::Input,
                "respiratory belt trace required (require_resp) but not supplied",
            ))
        }
        None => segment_cycles(&boundaries, flow),
    };
    let canonical: Vec<_> = cycles
        .par_iter()
        .map(|c| resample_cycle(c, params.interpolation))
        .collect();
    let mut kept = Vec::with_capacity(canonical.len());
    let mut n_short = 0;
    for c in canonical {
        match c {
            Ok(c) => kept.push(c),
            Err(EnsembleError::TooFewSamples { id, found }) => {
                log::warn!("dropping cycle {id}: {found} samples");
                n_short += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let curves = build_ensembles(&kept)?;
    let count = |l: CycleLabel| kept.iter().filter(|c| c.resp_label == l).count();
    let rr: Vec<f64> = kept.iter().map(|c| c.rr).collect();
    let gating = GatingSummary {
        method: boundaries.method,
        n_onsets: boundaries.onsets.len(),
        n_cycles: kept.len(),
        n_inspiration: count(CycleLabel::Inspiration),
        n_expiration: count(CycleLabel::Expiration),
        n_mixed: count(CycleLabel::Mixed),
        n_unlabeled: count(CycleLabel::Unlabeled),
        n_rejected_short: n_short,
        mean_rr: boundaries.mean_rr,
        rr_cv: boundaries.rr_cv,
        rr_min: rr.iter().copied().fold(f64::INFINITY, f64::min),
        rr_max: rr.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        onsets: boundaries.onsets.clone(),
    };
    Ok((curves, gating))
}

/// A gated series already holds one averaged cycle on the 32-point grid.
fn gated_curve(flow: &FlowSamples) -> EnsembleCurves {
    let mut mean = [0.0; GRID_POINTS];
    mean.copy_from_slice(&flow.q[..GRID_POINTS]);
    let rr = flow.sample_interval() * GRID_POINTS as f64;
    EnsembleCurves {
        global: crate::ensemble::EnsembleCurve {
            mean,
            sd: [0.0; GRID_POINTS],
            n_cycles: 1,
            mean_rr: rr,
        },
        inspiration: None,
        expiration: None,
        n_mixed: 0,
    }
}

fn read_hashed(path: &Path, role: &str, hashes: &mut Vec<InputHash>) -> Result<Vec<u8>, PipelineError> {
    let bytes = fs::read(path).map_err(|e| io_error(Stage::Ingest, path, e))?;
    hashes.push(InputHash {
        role: role.into(),
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

/// Load every input named by `config`, hashing the bytes as they are read.
pub fn load_inputs(config: &RunConfig) -> Result<(SubjectInputs, Vec<InputHash>), PipelineError> {
    let mut hashes = Vec::new();
    let series = VelocitySeries::from_bytes(&read_hashed(&config.series, "series", &mut hashes)?)?;
    let roi = RoiMask::from_pgm(&read_hashed(&config.roi_mask, "roi_mask", &mut hashes)?)?;
    let static_mask = match &config.static_mask {
        Some(p) => {
            read_hashed(p, "static_mask", &mut hashes)?;
            Some(read_mask(p)?)
        }
        None => None,
    };
    let mut physio = |p: &Option<PathBuf>, role: &str, kind| -> Result<_, PipelineError> {
        match p {
            Some(p) => {
                read_hashed(p, role, &mut hashes)?;
                Ok(Some(read_physio(p, kind)?))
            }
            None => Ok(None),
        }
    };
    let belt = physio(&config.belt, "belt", PhysioKind::RespBelt)?;
    let plethysmo = physio(&config.plethysmo, "plethysmo", PhysioKind::CardiacPlethysmo)?;
    Ok((
        SubjectInputs {
            series,
            roi,
            static_mask,
            belt,
            plethysmo,
        },
        hashes,
    ))
}

/// Load, process and (when `out_dir` is set) write report.json, curves.csv, curves.svg.
pub fn run_process(config: &RunConfig) -> Result<SubjectReport, PipelineError> {
    config.params.validate()?;
    let (inputs, hashes) = load_inputs(config)?;
    let echo = serde_json::to_value(config)
        .map_err(|e| PipelineError::new(Stage::Config, ErrorClass::Internal, e.to_string()))?;
    let report = process_subject(&inputs, &config.params, Provenance::new(echo, hashes))?;
    if let Some(dir) = &config.out_dir {
        write_subject_outputs(&report, dir, &config.formats)?;
    }
    Ok(report)
}

pub fn write_subject_outputs(
    report: &SubjectReport,
    dir: &Path,
    formats: &BTreeSet<ReportFormat>,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_error(Stage::Output, dir, e))?;
    let write = |name: &str, bytes: Vec<u8>| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| io_error(Stage::Output, &p, e))
    };
    if formats.contains(&ReportFormat::Json) {
        write("report.json", report::subject_json(report))?;
    }
    if formats.contains(&ReportFormat::Csv) {
        write("curves.csv", report::curves_csv(report))?;
    }
    if formats.contains(&ReportFormat::Svg) {
        write("curves.svg", report::curves_svg(report).into_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRun {
    pub id: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPair {
    pub subject_id: String,
    pub roi: RoiLabel,
    /// Run id of the gated conventional acquisition.
    pub conv: String,
    /// Run id of the continuous EPI acquisition.
    pub epi: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpearmanMethod {
    #[default]
    TApprox,
    Permutation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortParams {
    pub spearman: SpearmanMethod,
    pub wilcoxon: WilcoxonMethod,
}

/// Pairing manifest: runs are processed independently, pairs name the
/// conv and EPI run of each subject and ROI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub runs: Vec<ManifestRun>,
    pub pairs: Vec<ManifestPair>,
    #[serde(default)]
    pub stats: CohortParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortPairRow {
    pub subject_id: String,
    pub roi: RoiLabel,
    pub unit: VolumeUnit,
    pub conv_sv: f64,
    pub epi_sv: f64,
    pub epi_sv_modulation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiComparison {
    pub roi: RoiLabel,
    pub unit: VolumeUnit,
    pub n_pairs: usize,
    pub spearman: StatResult,
    pub wilcoxon: StatResult,
    pub paired_t: Option<StatResult>,
    /// Mean EPI inspiration-over-expiration SV change, percent.
    pub mean_modulation_pct: Option<f64>,
    pub n_modulation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub provenance: Provenance,
    pub pairs: Vec<CohortPairRow>,
    pub comparisons: Vec<RoiComparison>,
}

/// Check that every pair references runs that exist.
pub fn validate_manifest(m: &Manifest) -> Result<(), PipelineError> {
    let mut ids = BTreeSet::new();
    for r in &m.runs {
        if !ids.insert(r.id.as_str()) {
            return Err(PipelineError::new(
                Stage::Config,
                ErrorClass::Input,
                format!("duplicate run id {}", r.id),
            ));
        }
    }
    for p in &m.pairs {
        for id in [&p.conv, &p.epi] {
            if !ids.contains(id.as_str()) {
                return Err(PipelineError::new(
                    Stage::Config,
                    ErrorClass::Input,
                    format!("UnpairedSubject: subject {} references missing run {id}", p.subject_id),
                ));
            }
        }
    }
    Ok(())
}

/// Compare conv and EPI stroke volumes per ROI from already processed runs.
pub fn compare_cohort(
    reports: &BTreeMap<String, SubjectReport>,
    manifest: &Manifest,
    provenance: Provenance,
) -> Result<CohortReport, PipelineError> {
    validate_manifest(manifest)?;
    let mut rows = Vec::new();
    for p in &manifest.pairs {
        let get = |id: &String| {
            reports.get(id).ok_or_else(|| {
                PipelineError::new(
                    Stage::Config,
                    ErrorClass::Input,
                    format!("UnpairedSubject: subject {} has no processed run {id}", p.subject_id),
                )
            })
        };
        let (conv, epi) = (get(&p.conv)?, get(&p.epi)?);
        if conv.unit != epi.unit {
            return Err(PipelineError::new(
                Stage::Stats,
                ErrorClass::Input,
                format!("subject {}: conv and EPI runs report different units", p.subject_id),
            ));
        }
        rows.push(CohortPairRow {
            subject_id: p.subject_id.clone(),
            roi: p.roi,
            unit: epi.unit,
            conv_sv: conv.global.sv,
            epi_sv: epi.global.sv,
            epi_sv_modulation: epi.sv_modulation,
        });
    }
    let rois: BTreeSet<RoiLabel> = rows.iter().map(|r| r.roi).collect();
    let mut comparisons = Vec::new();
    for roi in rois {
        let sel: Vec<&CohortPairRow> = rows.iter().filter(|r| r.roi == roi).collect();
        if sel.len() < MIN_COHORT_PAIRS {
            return Err(StatsError::TooFewPairs {
                found: sel.len(),
                needed: MIN_COHORT_PAIRS,
            }
            .into());
        }
        let pairs: Vec<PairedSample> = sel
            .iter()
            .map(|r| PairedSample::new(r.subject_id.clone(), r.conv_sv, r.epi_sv))
            .collect();
        let rs = match manifest.stats.spearman {
            SpearmanMethod::TApprox => spearman(&pairs)?,
            SpearmanMethod::Permutation => spearman_permutation(&pairs)?,
        };
        let w = wilcoxon_paired_with(&pairs, manifest.stats.wilcoxon)?;
        let t = paired_t(&pairs).ok();
        let mods: Vec<f64> = sel.iter().filter_map(|r| r.epi_sv_modulation).collect();
        comparisons.push(RoiComparison {
            roi,
            unit: sel[0].unit,
            n_pairs: sel.len(),
            spearman: rs,
            wilcoxon: w,
            paired_t: t,
            mean_modulation_pct: (!mods.is_empty())
                .then(|| 100.0 * mods.iter().sum::<f64>() / mods.len() as f64),
            n_modulation: mods.len(),
        });
    }
    Ok(CohortReport {
        provenance,
        pairs: rows,
        comparisons,
    })
}

/// Process every run of a manifest concurrently, then compare pairs.
/// Relative paths in the manifest resolve against `base`.
pub fn run_cohort(
    manifest: &Manifest,
    base: &Path,
    out_dir: Option<&Path>,
    manifest_hash: Option<InputHash>,
) -> Result<CohortReport, PipelineError> {
    validate_manifest(manifest)?;
    let results: Vec<Result<(String, SubjectReport), PipelineError>> = manifest
        .runs
        .par_iter()
        .map(|r| {
            let mut cfg = r.config.rebased(base);
            cfg.out_dir = out_dir.map(|d| d.join(&r.id));
            run_process(&cfg)
                .map(|rep| (r.id.clone(), rep))
                .map_err(|e| PipelineError::new(e.stage, e.class, format!("run {}: {}", r.id, e.message)))
        })
        .collect();
    let mut reports = BTreeMap::new();
    let mut hashes: Vec<InputHash> = manifest_hash.into_iter().collect();
    for r in results {
        let (id, rep) = r?;
        hashes.extend(rep.provenance.inputs.iter().map(|h| InputHash {
            role: format!("{id}/{}", h.role),
            ..h.clone()
        }));
        reports.insert(id, rep);
    }
    let echo = serde_json::to_value(manifest)
        .map_err(|e| PipelineError::new(Stage::Config, ErrorClass::Internal, e.to_string()))?;
    let report = compare_cohort(&reports, manifest, Provenance::new(echo, hashes))?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| io_error(Stage::Output, dir, e))?;
        let write = |name: String, bytes: Vec<u8>| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| io_error(Stage::Output, &p, e))
        };
        write("cohort_report.json".into(), report::cohort_json(&report))?;
        write("cohort.csv".into(), report::cohort_csv(&report))?;
        for c in &report.comparisons {
            write(
                format!("scatter_{}.svg", c.roi.as_str().to_lowercase()),
                report::scatter_svg(&report, c.roi).into_bytes(),
            )?;
        }
    }
    Ok(report)
}
