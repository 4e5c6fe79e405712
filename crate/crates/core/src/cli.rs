//! The `clf` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 invalid
//! configuration. Every successful command writes `<output>.manifest.json`
//! next to its main output.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    bitwidth_study, compute_metrics, run_sweep, time_gap_stats, write_sweep_csv, SweepSpec,
};
use crate::events::{parse_csv, write_record, EventStream, Label, SensorGeometry, MAX_SENSOR_SIDE};
use crate::filters::{build_filter, ClfConfig, FilterKind};
use crate::pipeline::simulate;
use crate::synth::{gen_signal_multi, mix_to_ratio, MotionScene, NoiseModel, RNG_ALGORITHM};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "clf",
    version,
    about = "Cache-like spatiotemporal denoising for event cameras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterArg {
    Clf,
    Baf,
    Stcf,
    Rcf,
    Ssm,
    Oracle,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify every event of a CSV stream as signal or noise.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        /// Filter configuration JSON (ClfConfig fields, plus optional
        /// `geometry` and `ssm_r`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "clf")]
        filter: FilterArg,
        /// Sensor size `WxH`. Defaults to the config's `geometry`, then to
        /// the bounding box of the input.
        #[arg(long)]
        geometry: Option<String>,
        /// Model the two-stage pipelined datapath (CLF only).
        #[arg(long)]
        pipelined: bool,
        #[arg(long)]
        output: PathBuf,
        /// Write precision, recall and accuracy here (labels required).
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Write the memory access trace here (with --pipelined).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a labeled stream of moving objects plus background noise.
    Synth {
        #[arg(long)]
        geometry: String,
        /// Scene JSON file, or inline JSON: one scene or a list.
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 0.0)]
        noise_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate a grid of configurations over labeled datasets.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write the full rows (metrics and pipeline stats) as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Wraparound false-positive rate per timestamp bitwidth.
    Bitwidth {
        /// Event rate over the spatial window in Hz.
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        tth: u64,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12")]
        bwt_list: Vec<u32>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Histogram of the delay to the most recent event in each window.
    Gaps {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        geometry: Option<String>,
        #[arg(long, default_value_t = 1)]
        dth: u32,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema_version: u32,
    tool_version: &'static str,
    command: String,
    args: Vec<String>,
    config: Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seeds: Vec<u64>,
    wall_clock_s: f64,
    #[serde(skip_serializing_if = "Value::is_null")]
    results: Value,
}

struct Outcome {
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seeds: Vec<u64>,
    results: Value,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let (name, main_output) = match &cli.command {
        Command::Denoise { output, .. } => ("denoise", output.clone()),
        Command::Synth { output, .. } => ("synth", output.clone()),
        Command::Sweep { output, .. } => ("sweep", output.clone()),
        Command::Bitwidth { output, .. } => ("bitwidth", output.clone()),
        Command::Gaps { output, .. } => ("gaps", output.clone()),
    };
    let result = match cli.command {
        Command::Denoise {
            input,
            config,
            filter,
            geometry,
            pipelined,
            output,
            metrics,
            trace,
        } => cmd_denoise(
            &input,
            config.as_deref(),
            filter,
            geometry.as_deref(),
            pipelined,
            &output,
            metrics.as_deref(),
            trace.as_deref(),
        ),
        Command::Synth {
            geometry,
            scene,
            noise_ratio,
            seed,
            output,
        } => cmd_synth(&geometry, &scene, noise_ratio, seed, &output),
        Command::Sweep {
            spec,
            output,
            json,
            jobs,
        } => cmd_sweep(&spec, &output, json.as_deref(), jobs),
        Command::Bitwidth {
            lambda,
            tth,
            bwt_list,
            trials,
            seed,
            output,
        } => cmd_bitwidth(lambda, tth, &bwt_list, trials, seed, &output),
        Command::Gaps {
            input,
            geometry,
            dth,
            output,
        } => cmd_gaps(&input, geometry.as_deref(), dth, &output),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("clf {name}: {e}");
            return e.exit_code();
        }
    };
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool_version: crate::TOOL_VERSION,
        command: name.to_owned(),
        args: args
            .iter()
            .skip(1)
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        config: outcome.config,
        inputs: outcome
            .inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        seeds: outcome.seeds,
        wall_clock_s: start.elapsed().as_secs_f64(),
        results: outcome.results,
    };
    let path = manifest_path(&main_output);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = fs::write(&path, text + "\n") {
        eprintln!("clf {name}: {}", io_err(&path, e));
        return EXIT_IO;
    }
    EXIT_OK
}

fn parse_geometry(s: &str) -> Result<SensorGeometry, CliError> {
    s.parse()
        .map_err(|e| CliError::Usage(format!("bad geometry {s:?}: {e}")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

/// Reads a CSV stream. Without a geometry the smallest sensor holding every
/// event is used.
fn load_stream(path: &Path, geometry: Option<SensorGeometry>) -> Result<EventStream, CliError> {
    let max = u32::from(MAX_SENSOR_SIDE);
    let g = match geometry {
        Some(g) => g,
        None => SensorGeometry::new(max, max).expect("max geometry is valid"),
    };
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let s = parse_csv(BufReader::new(f), g).map_err(|e| io_err(path, e))?;
    if geometry.is_some() {
        return Ok(s);
    }
    let w = s
        .events()
        .iter()
        .map(|e| u32::from(e.x) + 1)
        .max()
        .unwrap_or(1);
    let h = s
        .events()
        .iter()
        .map(|e| u32::from(e.y) + 1)
        .max()
        .unwrap_or(1);
    let g = SensorGeometry::new(w, h).expect("bounded by the max geometry");
    EventStream::new(g, s.into_events()).map_err(|e| io_err(path, e))
}

struct DenoiseConfig {
    clf: ClfConfig,
    geometry: Option<SensorGeometry>,
    ssm_r: u32,
    raw: Value,
}

fn load_denoise_config(path: Option<&Path>) -> Result<DenoiseConfig, CliError> {
    let Some(path) = path else {
        return Ok(DenoiseConfig {
            clf: ClfConfig::default(),
            geometry: None,
            ssm_r: 1,
            raw: serde_json::to_value(ClfConfig::default()).expect("config serializes"),
        });
    };
    let text = read_text(path)?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut obj = match raw.clone() {
        Value::Object(m) => m,
        _ => {
            return Err(CliError::Config(format!(
                "{}: expected a JSON object",
                path.display()
            )))
        }
    };
    let geometry = obj
        .remove("geometry")
        .map(serde_json::from_value::<SensorGeometry>)
        .transpose()
        .map_err(|e| CliError::Config(format!("geometry: {e}")))?;
    let ssm_r = obj
        .remove("ssm_r")
        .map(serde_json::from_value::<u32>)
        .transpose()
        .map_err(|e| CliError::Config(format!("ssm_r: {e}")))?
        .unwrap_or(1);
    let clf: ClfConfig = serde_json::from_value(Value::Object(obj))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(DenoiseConfig {
        clf,
        geometry,
        ssm_r,
        raw,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_denoise(
    input: &Path,
    config: Option<&Path>,
    filter: FilterArg,
    geometry: Option<&str>,
    pipelined: bool,
    output: &Path,
    metrics: Option<&Path>,
    trace: Option<&Path>,
) -> Result<Outcome, CliError> {
    let config_path = config;
    let mut cfg = load_denoise_config(config)?;
    let geometry = geometry.map(parse_geometry).transpose()?.or(cfg.geometry);
    if pipelined {
        if filter != FilterArg::Clf {
            return Err(CliError::Config(
                "--pipelined models the CLF datapath only".into(),
            ));
        }
        cfg.clf.pipelined = true;
    }
    if trace.is_some() && !cfg.clf.pipelined {
        return Err(CliError::Usage("--trace requires --pipelined".into()));
    }
    let kind = match filter {
        FilterArg::Clf => FilterKind::Clf,
        FilterArg::Baf => FilterKind::Baf,
        FilterArg::Stcf => FilterKind::Stcf,
        FilterArg::Rcf => FilterKind::Rcf,
        FilterArg::Ssm => FilterKind::Ssm(cfg.ssm_r),
        FilterArg::Oracle => FilterKind::Oracle,
    };
    if kind == FilterKind::Clf {
        cfg.clf
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
    } else {
        cfg.clf
            .params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let stream = load_stream(input, geometry)?;
    if metrics.is_some() && stream.labels().any(|l| l == Label::Unknown) {
        return Err(CliError::Config(format!(
            "labels required: --metrics needs every event of {} labeled",
            input.display()
        )));
    }

    let (decisions, stats, access_trace) = if cfg.clf.pipelined && kind == FilterKind::Clf {
        let run = simulate(&cfg.clf, &stream, trace.is_some())
            .map_err(|e| CliError::Config(e.to_string()))?;
        (run.decisions, Some(run.stats), run.trace)
    } else {
        let mut f = build_filter(kind, &cfg.clf, stream.geometry())
            .map_err(|e| CliError::Config(e.to_string()))?;
        let d = f
            .run(&stream)
            .map_err(|e| CliError::Config(e.to_string()))?;
        (d, None, Vec::new())
    };

    let mut w = create(output)?;
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "# t,x,y,p,label,decision")?;
        for (e, d) in stream.events().iter().zip(&decisions) {
            write_record(w, e)?;
            if e.label == Label::Unknown {
                w.write_all(b",")?;
            }
            writeln!(w, ",{}", u8::from(d.is_signal))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| io_err(output, e))?;

    let mut outputs = vec![output.to_path_buf()];
    let mut results = json!({
        "events": stream.len(),
        "signal_decisions": decisions.iter().filter(|d| d.is_signal).count(),
        "geometry": stream.geometry(),
        "filter": kind.name(),
    });
    if let Some(s) = &stats {
        results["pipeline"] = serde_json::to_value(s).expect("stats serialize");
    }
    if let Some(path) = metrics {
        let m = compute_metrics(&decisions, stream.labels())
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut doc = serde_json::to_value(&m).expect("metrics serialize");
        if let Some(s) = &stats {
            doc["pipeline"] = serde_json::to_value(s).expect("stats serialize");
        }
        write_json(path, &doc)?;
        results["metrics"] = doc;
        outputs.push(path.to_path_buf());
    }
    if let Some(path) = trace {
        let w = create(path)?;
        crate::pipeline::write_trace_csv(&access_trace, w).map_err(|e| io_err(path, e))?;
        outputs.push(path.to_path_buf());
    }
    let mut config = cfg.raw;
    if let Value::Object(m) = &mut config {
        m.insert("pipelined".into(), Value::Bool(cfg.clf.pipelined));
    }
    Ok(Outcome {
        config,
        inputs: std::iter::once(input.to_path_buf())
            .chain(config_path.map(Path::to_path_buf))
            .collect(),
        outputs,
        seeds: Vec::new(),
        results,
    })
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn load_scenes(arg: &str) -> Result<(Vec<MotionScene>, Option<PathBuf>), CliError> {
    let trimmed = arg.trim_start();
    let (text, path) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (arg.to_owned(), None)
    } else {
        let p = PathBuf::from(arg);
        (read_text(&p)?, Some(p))
    };
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("scene: {e}")))?;
    let scenes = match v {
        Value::Array(_) => serde_json::from_value(v),
        other => serde_json::from_value(other).map(|s| vec![s]),
    }
    .map_err(|e| CliError::Config(format!("scene: {e}")))?;
    Ok((scenes, path))
}

fn cmd_synth(
    geometry: &str,
    scene: &str,
    ratio: f64,
    seed: u64,
    output: &Path,
) -> Result<Outcome, CliError> {
    let g = parse_geometry(geometry)?;
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(CliError::Usage(format!(
            "--noise-ratio must be >= 0, got {ratio}"
        )));
    }
    let (scenes, scene_path) = load_scenes(scene)?;
    let signal = gen_signal_multi(g, &scenes, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let stream = if ratio == 0.0 {
        signal
    } else {
        mix_to_ratio(&signal, &NoiseModel { rate_hz: 0.0, seed }, ratio)
            .map_err(|e| CliError::Config(e.to_string()))?
    };
    let n_signal = stream.count_label(Label::Signal);
    let n_noise = stream.count_label(Label::Noise);
    let mut w = create(output)?;
    writeln!(
        w,
        "# t,x,y,p,label geometry={g} seed={seed} rng={RNG_ALGORITHM}"
    )
    .map_err(|e| io_err(output, e))?;
    crate::events::write_csv(&stream, w).map_err(|e| io_err(output, e))?;
    let achieved = if n_signal == 0 {
        0.0
    } else {
        n_noise as f64 / n_signal as f64
    };
    Ok(Outcome {
        config: json!({
            "geometry": g,
            "scenes": scenes,
            "noise_ratio": ratio,
            "rng": RNG_ALGORITHM,
        }),
        inputs: scene_path.into_iter().collect(),
        outputs: vec![output.to_path_buf()],
        seeds: vec![seed],
        results: json!({
            "signal_events": n_signal,
            "noise_events": n_noise,
            "achieved_ratio": achieved,
        }),
    })
}

fn cmd_sweep(
    spec_path: &Path,
    output: &Path,
    json_out: Option<&Path>,
    jobs: usize,
) -> Result<Outcome, CliError> {
    let text = read_text(spec_path)?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let rows = run_sweep(&spec, base, jobs).map_err(|e| match e {
        crate::analysis::AnalysisError::Dataset { .. } => CliError::Io(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    let w = create(output)?;
    write_sweep_csv(&rows, w).map_err(|e| io_err(output, e))?;
    let mut outputs = vec![output.to_path_buf()];
    if let Some(p) = json_out {
        write_json(p, &rows)?;
        outputs.push(p.to_path_buf());
    }
    let seeds = spec
        .datasets
        .iter()
        .filter_map(|d| match d {
            crate::analysis::DatasetSpec::Synth { spec, .. } => Some(spec.seed),
            crate::analysis::DatasetSpec::Csv { .. } => None,
        })
        .collect();
    Ok(Outcome {
        config: serde_json::to_value(&spec).expect("spec serializes"),
        inputs: vec![spec_path.to_path_buf()],
        outputs,
        seeds,
        results: json!({ "rows": rows.len() }),
    })
}

fn cmd_bitwidth(
    lambda: f64,
    tth: u64,
    bw_list: &[u32],
    trials: u64,
    seed: u64,
    output: &Path,
) -> Result<Outcome, CliError> {
    if bw_list.is_empty() {
        return Err(CliError::Usage("--bwt-list is empty".into()));
    }
    let rows = bitwidth_study(lambda, tth, bw_list, trials, seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut w = create(output)?;
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(
            w,
            "BW_T,quant_unit_us,T_s_us,analytic_fp,montecarlo_fp,stderr"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{:.9e},{:.9e},{:.9e}",
                r.bw_t, r.quant_unit_us, r.t_s_us, r.analytic, r.montecarlo, r.stderr
            )?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| io_err(output, e))?;
    Ok(Outcome {
        config: json!({ "lambda_hz": lambda, "t_th_us": tth, "bw_t": bw_list, "trials": trials, "rng": RNG_ALGORITHM }),
        inputs: Vec::new(),
        outputs: vec![output.to_path_buf()],
        seeds: vec![seed],
        results: Value::Null,
    })
}

fn cmd_gaps(
    input: &Path,
    geometry: Option<&str>,
    dth: u32,
    output: &Path,
) -> Result<Outcome, CliError> {
    let g = geometry.map(parse_geometry).transpose()?;
    let stream = load_stream(input, g)?;
    let h = time_gap_stats(&stream, dth);
    write_json(output, &h)?;
    Ok(Outcome {
        config: json!({ "d_th": dth, "geometry": stream.geometry() }),
        inputs: vec![input.to_path_buf()],
        outputs: vec![output.to_path_buf()],
        seeds: Vec::new(),
        results: Value::Null,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.manifest.json")
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Io(String::new()).exit_code(), 2);
        assert_eq!(CliError::Config(String::new()).exit_code(), 3);
        assert_eq!(run(["clf", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run(["clf", "--help"]), EXIT_OK);
    }

    #[test]
    fn bad_geometry_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let code = run([
            "clf",
            "synth",
            "--geometry",
            "64by64",
            "--scene",
            r#"{"shape":{"type":"edge"},"origin":[0,0],"velocity":1000,"duration_us":1000}"#,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn denoise_config_extras() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"geometry": "32x16", "ssm_r": 2, "s_rm": 2}"#).unwrap();
        let c = load_denoise_config(Some(&p)).unwrap();
        assert_eq!(c.geometry, Some(SensorGeometry::new(32, 16).unwrap()));
        assert_eq!(c.ssm_r, 2);
        assert_eq!(c.clf.s_rm, 2);
        fs::write(&p, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(
            load_denoise_config(Some(&p)),
            Err(CliError::Config(_))
        ));
    }
}
