use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use csfdyn::ingest::{write_mask, write_physio, write_series, SeriesKind};
use csfdyn::phantom::{cohort, generate, generate_gated, CohortJitter, PhantomSpec};
use csfdyn::pipeline::{
    merge_json, run_cohort, run_process, sha256_hex, ErrorClass, InputHash, Manifest, ManifestPair,
    ManifestRun, PipelineError, Provenance, RunConfig, Stage,
};

#[derive(Parser)]
#[command(name = "csfdyn", version, about = "CSF flow post-processing for phase-contrast MRI")]
struct Cli {
    /// Log warnings and progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CycleSourceArg {
    Flow,
    Plethysmo,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpolationArg {
    CubicSpline,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum SvConventionArg {
    LobeMean,
    FlushLobe,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpearmanArg {
    TApprox,
    Permutation,
}

#[derive(Clone, Copy, ValueEnum)]
enum WilcoxonArg {
    Auto,
    Exact,
    Normal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Aqueduct,
    Spinal,
}

fn kebab<T: ValueEnum>(v: T) -> Value {
    Value::String(v.to_possible_value().expect("no skipped variants").get_name().to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Process one subject: velocity, flow, gating, ensembles, stroke volume.
    Process {
        /// JSON run configuration; its keys override the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Series container (.csfd).
        #[arg(long)]
        series: Option<PathBuf>,
        /// ROI mask (.pgm); its label selects the volume unit.
        #[arg(long)]
        roi: Option<PathBuf>,
        /// Static-tissue mask for background correction.
        #[arg(long)]
        static_mask: Option<PathBuf>,
        /// Respiratory belt trace (t_ms,amplitude CSV).
        #[arg(long)]
        belt: Option<PathBuf>,
        /// Cardiac plethysmograph trace (t_ms,amplitude CSV).
        #[arg(long)]
        plethysmo: Option<PathBuf>,
        /// Output directory for report.json, curves.csv, curves.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip temporal phase unwrapping.
        #[arg(long)]
        no_unwrap: bool,
        /// Frame trusted to be alias-free.
        #[arg(long)]
        unwrap_anchor: Option<usize>,
        /// Grow the ROI by temporal correlation with the seed mean.
        #[arg(long)]
        refine_roi: bool,
        /// Minimum Pearson correlation for ROI growth [0, 1].
        #[arg(long)]
        refine_threshold: Option<f64>,
        #[arg(long, value_enum)]
        cycle_source: Option<CycleSourceArg>,
        /// Shortest accepted cardiac cycle (ms).
        #[arg(long)]
        min_rr: Option<f64>,
        /// Longest accepted cardiac cycle (ms).
        #[arg(long)]
        max_rr: Option<f64>,
        /// Belt smoothing window (ms).
        #[arg(long)]
        smoothing_window: Option<f64>,
        /// Belt hysteresis as a fraction of its range.
        #[arg(long)]
        hysteresis: Option<f64>,
        /// Fail when no belt trace is given.
        #[arg(long)]
        require_resp: bool,
        #[arg(long, value_enum)]
        interpolation: Option<InterpolationArg>,
        #[arg(long, value_enum)]
        sv_convention: Option<SvConventionArg>,
        /// Report formats to write.
        #[arg(long, value_enum, value_delimiter = ',')]
        formats: Option<Vec<FormatArg>>,
    },
    /// Compare conv and EPI stroke volumes over a paired cohort.
    Cohort {
        /// Manifest JSON with runs and conv/EPI pairs; paths resolve against its directory.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Spearman p-value method (manifest `stats` overrides).
        #[arg(long, value_enum, default_value = "t-approx")]
        spearman: SpearmanArg,
        /// Wilcoxon p-value method (manifest `stats` overrides).
        #[arg(long, value_enum, default_value = "auto")]
        wilcoxon: WilcoxonArg,
    },
    /// Write a synthetic dataset with ground truth.
    Phantom {
        /// Phantom spec JSON; defaults to the preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "aqueduct")]
        preset: Preset,
        /// Simulate a 32-frame gated conventional acquisition.
        #[arg(long)]
        gated: bool,
        /// Override the spec seed (or seed the cohort).
        #[arg(long)]
        seed: Option<u64>,
        /// Generate a paired cohort of N subjects and its manifest.
        #[arg(long)]
        cohort: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config_error(msg: impl Into<String>) -> PipelineError {
    PipelineError::new(Stage::Config, ErrorClass::Input, msg)
}

fn read_json(path: &Path) -> Result<(Value, InputHash), PipelineError> {
    let bytes = fs::read(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let v = serde_json::from_slice(&bytes)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let hash = InputHash {
        role: "config".into(),
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((v, hash))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|e| {
        PipelineError::new(Stage::Output, ErrorClass::Input, format!("{}: {e}", path.display()))
    })
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

fn path_value(p: &Option<PathBuf>) -> Option<Value> {
    p.as_ref().map(|p| Value::String(p.display().to_string()))
}

/// Paths inside a config file are relative to the file itself.
fn rebase_paths(value: &mut Value, base: &Path) {
    if let Value::Object(m) = value {
        for key in ["series", "roi_mask", "static_mask", "belt", "plethysmo", "out_dir"] {
            if let Some(Value::String(s)) = m.get_mut(key) {
                if Path::new(s.as_str()).is_relative() {
                    *s = base.join(&*s).display().to_string();
                }
            }
        }
    }
}

fn cmd_process(cmd: Command) -> Result<(), PipelineError> {
    let Command::Process {
        config,
        series,
        roi,
        static_mask,
        belt,
        plethysmo,
        out,
        no_unwrap,
        unwrap_anchor,
        refine_roi,
        refine_threshold,
        cycle_source,
        min_rr,
        max_rr,
        smoothing_window,
        hysteresis,
        require_resp,
        interpolation,
        sv_convention,
        formats,
    } = cmd
    else {
        unreachable!()
    };
    let mut top = Map::new();
    for (k, v) in [
        ("series", path_value(&series)),
        ("roi_mask", path_value(&roi)),
        ("static_mask", path_value(&static_mask)),
        ("belt", path_value(&belt)),
        ("plethysmo", path_value(&plethysmo)),
        ("out_dir", path_value(&out)),
        ("formats", formats.map(|f| f.into_iter().map(kebab).collect())),
    ] {
        if let Some(v) = v {
            top.insert(k.into(), v);
        }
    }
    let mut params = Map::new();
    let flags: [(&str, Option<Value>); 12] = [
        ("unwrap", no_unwrap.then_some(json!(false))),
        ("unwrap_anchor", unwrap_anchor.map(|v| json!(v))),
        ("refine_roi", refine_roi.then_some(json!(true))),
        ("refine_threshold", refine_threshold.map(|v| json!(v))),
        ("cycle_source", cycle_source.map(kebab)),
        ("min_rr", min_rr.map(|v| json!(v))),
        ("max_rr", max_rr.map(|v| json!(v))),
        ("smoothing_window", smoothing_window.map(|v| json!(v))),
        ("hysteresis", hysteresis.map(|v| json!(v))),
        ("require_resp", require_resp.then_some(json!(true))),
        ("interpolation", interpolation.map(kebab)),
        ("sv_convention", sv_convention.map(kebab)),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            params.insert(k.into(), v);
        }
    }
    top.insert("params".into(), Value::Object(params));
    let mut value = Value::Object(top);
    if let Some(path) = &config {
        let (mut file, _) = read_json(path)?;
        rebase_paths(&mut file, path.parent().unwrap_or(Path::new(".")));
        merge_json(&mut value, file);
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| config_error(e.to_string()))?;
    let report = run_process(&cfg)?;
    log::info!(
        "{} SV {} {} over {} cycles",
        report.roi.as_str(),
        report.global.sv,
        report.unit.symbol(),
        report.curves.global.n_cycles
    );
    if cfg.out_dir.is_none() {
        let mut stdout = std::io::stdout().lock();
        std::io::Write::write_all(&mut stdout, &csfdyn::report::subject_json(&report))
            .map_err(|e| PipelineError::new(Stage::Output, ErrorClass::Internal, e.to_string()))?;
    }
    Ok(())
}

fn cmd_cohort(
    manifest: &Path,
    out: Option<&Path>,
    spearman: SpearmanArg,
    wilcoxon: WilcoxonArg,
) -> Result<(), PipelineError> {
    let (mut value, hash) = read_json(manifest)?;
    if let Value::Object(m) = &mut value {
        m.entry("stats")
            .or_insert_with(|| json!({"spearman": kebab(spearman), "wilcoxon": kebab(wilcoxon)}));
    }
    let m: Manifest = serde_json::from_value(value).map_err(|e| config_error(e.to_string()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let report = run_cohort(&m, base, out, Some(InputHash { role: "manifest".into(), ..hash }))?;
    if out.is_none() {
        let mut stdout = std::io::stdout().lock();
        std::io::Write::write_all(&mut stdout, &csfdyn::report::cohort_json(&report))
            .map_err(|e| PipelineError::new(Stage::Output, ErrorClass::Internal, e.to_string()))?;
    }
    Ok(())
}

fn phantom_error(e: impl std::fmt::Display) -> PipelineError {
    config_error(e.to_string())
}

/// Write one dataset into `dir`; the returned config names its files under `rel`.
fn write_dataset(spec: &PhantomSpec, dir: &Path, rel: &Path) -> Result<RunConfig, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| config_error(format!("{}: {e}", dir.display())))?;
    let io = |e: csfdyn::ingest::IngestError| PipelineError::from(e);
    let mut cfg = RunConfig::new(rel.join("series.csfd"), rel.join("roi.pgm"));
    cfg.static_mask = Some(rel.join("static.pgm"));
    let truth;
    match spec.acquisition.series_kind {
        SeriesKind::ContinuousEpi => {
            let d = generate(spec).map_err(phantom_error)?;
            write_series(&d.series, dir.join("series.csfd")).map_err(io)?;
            write_mask(&d.lumen_mask, dir.join("roi.pgm")).map_err(io)?;
            write_mask(&d.static_mask, dir.join("static.pgm")).map_err(io)?;
            write_physio(&d.belt, dir.join("belt.csv")).map_err(io)?;
            write_physio(&d.plethysmo, dir.join("plethysmo.csv")).map_err(io)?;
            cfg.belt = Some(rel.join("belt.csv"));
            truth = d.truth;
        }
        SeriesKind::GatedConv => {
            let series = generate_gated(spec).map_err(phantom_error)?;
            let ph = csfdyn::phantom::Phantom::new(spec).map_err(phantom_error)?;
            write_series(&series, dir.join("series.csfd")).map_err(io)?;
            write_mask(&ph.lumen_mask(), dir.join("roi.pgm")).map_err(io)?;
            write_mask(&ph.static_mask(), dir.join("static.pgm")).map_err(io)?;
            truth = ph.truth();
        }
    }
    let prov = Provenance::new(serde_json::to_value(spec).expect("spec serializes"), vec![]);
    write_file(&dir.join("truth.json"), &pretty(&json!({"provenance": prov, "truth": truth})))?;
    Ok(cfg)
}

fn cmd_phantom(
    spec: Option<&Path>,
    preset: Preset,
    gated: bool,
    seed: Option<u64>,
    n_cohort: Option<usize>,
    out: &Path,
) -> Result<(), PipelineError> {
    if let Some(n) = n_cohort {
        let seed = seed.unwrap_or(1);
        let (subjects, truth) = cohort(n, CohortJitter::default(), seed).map_err(phantom_error)?;
        let mut runs = Vec::new();
        let mut pairs = Vec::new();
        for s in &subjects {
            for spec in s.specs() {
                let roi = spec.lumen.label;
                let tag = roi.as_str().to_lowercase();
                let mut ids = Vec::new();
                for kind in [SeriesKind::GatedConv, SeriesKind::ContinuousEpi] {
                    let mut sp = spec.clone();
                    sp.acquisition.series_kind = kind;
                    let suffix = if kind == SeriesKind::GatedConv { "conv" } else { "epi" };
                    let id = format!("{}_{tag}_{suffix}", s.subject_id);
                    let cfg = write_dataset(&sp, &out.join(&id), Path::new(&id))?;
                    runs.push(ManifestRun { id: id.clone(), config: cfg });
                    ids.push(id);
                }
                pairs.push(ManifestPair {
                    subject_id: s.subject_id.clone(),
                    roi,
                    conv: ids[0].clone(),
                    epi: ids[1].clone(),
                });
            }
        }
        let manifest = Manifest {
            runs,
            pairs,
            stats: Default::default(),
        };
        write_file(&out.join("manifest.json"), &pretty(&manifest))?;
        let prov = Provenance::new(json!({"n_subjects": n, "seed": seed, "jitter": CohortJitter::default()}), vec![]);
        write_file(&out.join("cohort_truth.json"), &pretty(&json!({"provenance": prov, "subjects": truth})))?;
        return Ok(());
    }
    let mut spec = match spec {
        Some(p) => {
            let (v, _) = read_json(p)?;
            serde_json::from_value(v).map_err(|e| config_error(e.to_string()))?
        }
        None => match preset {
            Preset::Aqueduct => PhantomSpec::aqueduct(),
            Preset::Spinal => PhantomSpec::spinal(),
        },
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if gated {
        spec.acquisition.series_kind = SeriesKind::GatedConv;
    }
    let cfg = write_dataset(&spec, out, Path::new("."))?;
    write_file(&out.join("run.json"), &pretty(&cfg))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        c @ Command::Process { .. } => cmd_process(c),
        Command::Cohort {
            manifest,
            out,
            spearman,
            wilcoxon,
        } => cmd_cohort(&manifest, out.as_deref(), spearman, wilcoxon),
        Command::Phantom {
            spec,
            preset,
            gated,
            seed,
            cohort,
            out,
        } => cmd_phantom(spec.as_deref(), preset, gated, seed, cohort, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: stage={} {}", serde_json::to_value(e.stage).unwrap().as_str().unwrap_or("?"), e.message);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
