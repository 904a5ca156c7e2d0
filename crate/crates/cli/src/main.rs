//! `proxycoll`: proxy fitting, collision detection, penetration resolution,
//! metrics and benchmarks for two-person motion.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use proxycoll_core::bench::{run_bench, BenchConfig};
use proxycoll_core::collision::{detect_sequence, PairProxies};
use proxycoll_core::fitting::{assign_regions, fit_proxies, initial_guess, FitConfig};
use proxycoll_core::guidance::{collision_loss, report_guidance, AntipodalOn, GuidanceOptions, LossMode};
use proxycoll_core::mesh::{primitive_mesh, TriangleMesh};
use proxycoll_core::metrics::metrics_from_reports;
use proxycoll_core::motion::MotionSequence;
use proxycoll_core::resolve::{resolve_with, Preset, ResolveConfig, StopReason};
use proxycoll_core::skeleton::{body22_proxies, body22_rest_pose, body22_skeleton, ProxyParams, SampleConfig, Skeleton};
use proxycoll_core::{Error as CoreError, ErrorKind, Vec3, SCHEMA_VERSION};

const THREADS_ENV: &str = "PROXYCOLL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "proxycoll", version, about = "Collision-aware geometric proxies for two-person motion")]
struct Cli {
    /// Settings file (JSON) with global values and per-subcommand blocks.
    #[arg(long, global = true, value_name = "FILE")]
    settings: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    /// Worker threads; PROXYCOLL_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for surface sample patterns and benchmark scenes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit proxy dimensions to a body mesh.
    Fit(FitArgs),
    /// Report collision points per frame.
    Detect(DetectArgs),
    /// Remove interpenetration from a motion by gradient descent.
    Resolve(ResolveArgs),
    /// Compute coll_dis and coll_ro for a motion.
    Metrics(MetricsArgs),
    /// Time the proxy pipeline against a vertex-distance baseline.
    Bench(BenchArgs),
    /// Dump posed primitives per frame for external viewers.
    ExportFrames(ExportArgs),
}

#[derive(Args, Debug)]
struct BodyArgs {
    /// Skeleton JSON; the built-in 22-joint body when omitted.
    #[arg(long, value_name = "FILE")]
    skeleton: Option<PathBuf>,

    /// Proxy parameters for person 0 and person 1 (one file is used for both).
    #[arg(long, num_args = 1..=2, value_name = "FILE")]
    proxies: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Closed triangle mesh (OBJ) of one body in its rest pose.
    #[arg(long, value_name = "FILE")]
    mesh: PathBuf,

    #[arg(long, value_name = "FILE")]
    skeleton: Option<PathBuf>,

    /// Rest pose joint positions as a JSON array of [x, y, z]; required with
    /// a custom skeleton.
    #[arg(long, value_name = "FILE")]
    pose: Option<PathBuf>,

    /// Starting proxy parameters; estimated from the mesh when omitted.
    #[arg(long, value_name = "FILE")]
    init: Option<PathBuf>,

    #[arg(long)]
    max_iters: Option<usize>,

    #[arg(long)]
    learning_rate: Option<f64>,

    /// Fitted proxy parameters.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Fit report with the loss history.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Motion file (JSON or PCMO binary).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    #[command(flatten)]
    body: BodyArgs,

    /// Also emit guidance vectors and the collision loss per frame.
    #[arg(long)]
    with_guidance: bool,

    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    #[arg(long, value_enum)]
    antipodal: Option<AntipodalArg>,

    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ResolveArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    #[command(flatten)]
    body: BodyArgs,

    /// Weight preset; overrides the weights of the settings file.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,

    #[arg(long)]
    max_iters: Option<usize>,

    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    #[arg(long, value_enum)]
    antipodal: Option<AntipodalArg>,

    /// Refined motion; `.pcmo` or `.bin` selects the binary format.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    #[command(flatten)]
    body: BodyArgs,

    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Benchmark configuration (JSON); defaults when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Run frames in parallel (timings reported as parallel).
    #[arg(long)]
    parallel: bool,

    #[arg(long)]
    repetitions: Option<usize>,

    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    #[command(flatten)]
    body: BodyArgs,

    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// First frame to export.
    #[arg(long, default_value_t = 0)]
    start: usize,

    /// Frame after the last one to export; the sequence end when omitted.
    #[arg(long)]
    end: Option<usize>,

    /// Directory receiving one file per frame.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Adaption,
    Scratch,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    PerPoint,
    Aggregated,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AntipodalArg {
    Host,
    Container,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormatArg {
    Json,
    Obj,
}

impl From<ModeArg> for LossMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerPoint => LossMode::PerPoint,
            ModeArg::Aggregated => LossMode::Aggregated,
        }
    }
}

impl From<AntipodalArg> for AntipodalOn {
    fn from(a: AntipodalArg) -> Self {
        match a {
            AntipodalArg::Host => AntipodalOn::Host,
            AntipodalArg::Container => AntipodalOn::Container,
        }
    }
}

/// Contents of `--settings`. Every block is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GlobalConfig {
    schema: Option<String>,
    verbosity: u8,
    seed: Option<u64>,
    threads: Option<usize>,
    paths: PathsConfig,
    fit: FitConfig,
    detect: DetectConfig,
    resolve: ResolveConfig,
    bench: BenchConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PathsConfig {
    skeleton: Option<PathBuf>,
    proxies: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectConfig {
    samples: SampleConfig,
    guidance: GuidanceOptions,
}

fn load_settings(path: Option<&Path>) -> Result<GlobalConfig> {
    let Some(path) = path else {
        return Ok(GlobalConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading settings {}", path.display()))?;
    let cfg: GlobalConfig = serde_json::from_str(&text).with_context(|| format!("settings {}", path.display()))?;
    if let Some(schema) = &cfg.schema {
        if schema != SCHEMA_VERSION {
            bail!("settings {}: unsupported schema {schema}", path.display());
        }
    }
    Ok(cfg)
}

fn resolve_threads(flag: Option<usize>, settings: Option<usize>, default: usize) -> Result<usize> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| anyhow!("{THREADS_ENV}={v:?} is not a thread count"))?),
        Err(_) => None,
    };
    let n = from_env.or(flag).or(settings).unwrap_or(default);
    if n == 0 {
        bail!("thread count must be >= 1");
    }
    Ok(n)
}

fn load_skeleton(path: Option<&Path>) -> Result<Skeleton> {
    Ok(match path {
        Some(p) => Skeleton::load(p)?,
        None => body22_skeleton(),
    })
}

fn load_proxies(paths: &[PathBuf], skeleton: &Skeleton) -> Result<[ProxyParams; 2]> {
    let pair = match paths {
        [] => [body22_proxies(), body22_proxies()],
        [one] => {
            let p = ProxyParams::load(one)?;
            [p.clone(), p]
        }
        [a, b] => [ProxyParams::load(a)?, ProxyParams::load(b)?],
        _ => bail!("--proxies takes one or two files"),
    };
    for p in &pair {
        p.check_against(skeleton)?;
    }
    Ok(pair)
}

struct Body {
    skeleton: Skeleton,
    params: [ProxyParams; 2],
}

fn load_body(args: &BodyArgs, settings: &GlobalConfig) -> Result<Body> {
    let skeleton_path = args.skeleton.as_deref().or(settings.paths.skeleton.as_deref());
    let skeleton = load_skeleton(skeleton_path)?;
    let proxy_paths = if args.proxies.is_empty() { &settings.paths.proxies } else { &args.proxies };
    let params = load_proxies(proxy_paths, &skeleton)?;
    Ok(Body { skeleton, params })
}

fn load_motion(path: &Path, skeleton: &Skeleton) -> Result<MotionSequence> {
    let motion = MotionSequence::load(path)?;
    if motion.joint_count() != skeleton.joint_count() {
        bail!(
            "{}: motion has {} joints, skeleton has {}",
            path.display(),
            motion.joint_count(),
            skeleton.joint_count()
        );
    }
    Ok(motion)
}

/// `{schema, command, seed, config, ...fields}`.
fn document(command: &str, seed: u64, config: Value, fields: Value) -> Value {
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    doc.insert("command".into(), json!(command));
    doc.insert("seed".into(), json!(seed));
    doc.insert("config".into(), config);
    if let Value::Object(extra) = fields {
        doc.extend(extra);
    }
    Value::Object(doc)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| anyhow!(CoreError::io(path, e)))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn cmd_fit(args: &FitArgs, settings: &GlobalConfig, seed: u64) -> Result<()> {
    let skeleton = load_skeleton(args.skeleton.as_deref().or(settings.paths.skeleton.as_deref()))?;
    let mesh = TriangleMesh::load_obj(&args.mesh)?;
    let rest = match &args.pose {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CoreError::io(p, e))?;
            let coords: Vec<[f64; 3]> = serde_json::from_str(&text).with_context(|| format!("pose {}", p.display()))?;
            coords.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect::<Vec<_>>()
        }
        None if args.skeleton.is_none() && settings.paths.skeleton.is_none() => body22_rest_pose(),
        None => bail!("--pose is required with a custom skeleton"),
    };
    if rest.len() != skeleton.joint_count() {
        bail!("pose has {} joints, skeleton has {}", rest.len(), skeleton.joint_count());
    }
    let mut cfg = settings.fit.clone();
    cfg.samples.seed = seed;
    if let Some(n) = args.max_iters {
        cfg.max_iters = n;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    let initial = match &args.init {
        Some(p) => {
            let params = ProxyParams::load(p)?;
            params.check_against(&skeleton)?;
            params
        }
        None => initial_guess(&mesh, &assign_regions(&mesh, &skeleton, &rest)?, &skeleton, &rest)?,
    };
    let (mut fitted, report) = fit_proxies(&mesh, &skeleton, &rest, &initial, &cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    log::info!("fit: final loss {:.6e} after {} iterations", report.final_loss, report.iters);
    let config = to_value(&cfg);
    fitted.config = Some(json!({"command": "fit", "seed": seed, "config": config.clone()}));
    fs::write(&args.out, fitted.to_json()).map_err(|e| CoreError::io(&args.out, e))?;
    if let Some(path) = &args.report {
        write_json(path, &document("fit", seed, config, to_value(&report)))?;
    }
    Ok(())
}

fn guidance_options(base: GuidanceOptions, mode: Option<ModeArg>, antipodal: Option<AntipodalArg>) -> GuidanceOptions {
    GuidanceOptions {
        mode: mode.map(Into::into).unwrap_or(base.mode),
        antipodal_on: antipodal.map(Into::into).unwrap_or(base.antipodal_on),
        detect: base.detect,
    }
}

fn cmd_detect(args: &DetectArgs, settings: &GlobalConfig, seed: u64) -> Result<()> {
    let body = load_body(&args.body, settings)?;
    let motion = load_motion(&args.input, &body.skeleton)?;
    let samples = SampleConfig {
        seed,
        ..settings.detect.samples
    };
    let opts = guidance_options(settings.detect.guidance, args.mode, args.antipodal);
    let proxies = PairProxies::for_motion(body.skeleton, body.params, &motion, &samples)?;
    let reports = detect_sequence(&motion, &proxies, opts.detect)?;
    let frames: Vec<Value> = reports
        .iter()
        .map(|r| -> Result<Value> {
            let groups: Vec<Value> = r
                .per_segment_groups
                .iter()
                .map(|(&(person, segment), containers)| {
                    let counts: Map<String, Value> = containers.iter().map(|(c, idx)| (c.to_string(), json!(idx.len()))).collect();
                    json!({"host_person": person, "host_segment": segment, "containers": counts})
                })
                .collect();
            let mut frame = json!({
                "frame": r.frame_index,
                "max_depth": r.max_depth(),
                "points": to_value(&r.points),
                "groups": groups,
            });
            if args.with_guidance {
                let bodies = proxies.pose_frame(&motion, r.frame_index)?;
                let guidance = report_guidance(r, &bodies, opts.antipodal_on);
                let loss = collision_loss(r, &guidance, opts.mode);
                frame["guidance"] = to_value(&guidance);
                frame["effective_directions"] = to_value(&loss.effective);
                frame["aggregated_segments"] = to_value(&loss.aggregated_segments);
                frame["loss"] = json!(loss.value);
            }
            Ok(frame)
        })
        .collect::<Result<_>>()?;
    let m = metrics_from_reports(&reports);
    let config = json!({"samples": samples, "guidance": opts, "with_guidance": args.with_guidance});
    let doc = document(
        "detect",
        seed,
        config,
        json!({"coll_dis": m.coll_dis, "coll_ro": m.coll_ro, "frames": frames}),
    );
    write_json(&args.out, &doc)
}

fn cmd_resolve(args: &ResolveArgs, settings: &GlobalConfig, seed: u64) -> Result<()> {
    let body = load_body(&args.body, settings)?;
    let motion = load_motion(&args.input, &body.skeleton)?;
    let mut cfg = settings.resolve.clone();
    if let Some(p) = args.preset {
        let preset = ResolveConfig::preset(match p {
            PresetArg::Adaption => Preset::Adaption,
            PresetArg::Scratch => Preset::Scratch,
        });
        cfg.lambda_coll = preset.lambda_coll;
        cfg.lambda_anchor = preset.lambda_anchor;
        cfg.lambda_bone = preset.lambda_bone;
        cfg.lambda_smooth = preset.lambda_smooth;
    }
    if let Some(n) = args.max_iters {
        cfg.max_iters = n;
    }
    cfg.seed = seed;
    cfg.guidance = guidance_options(cfg.guidance, args.mode, args.antipodal);
    cfg.validate()?;
    let proxies = PairProxies::for_motion(body.skeleton, body.params, &motion, &cfg.sample_config())?;
    let (refined, report) = resolve_with(&motion, &proxies, &cfg)?;
    log::info!(
        "resolve: {} iterations ({:?}), coll_dis {:.4} -> {:.4}, coll_ro {:.3} -> {:.3}",
        report.iterations,
        report.stop_reason,
        report.before.coll_dis,
        report.after.coll_dis,
        report.before.coll_ro,
        report.after.coll_ro
    );
    let config = to_value(&cfg);
    let echo = json!({"command": "resolve", "seed": seed, "config": config.clone()});
    refined.save_with(&args.out, Some(&echo))?;
    if let Some(path) = &args.report {
        write_json(path, &document("resolve", seed, config, to_value(&report)))?;
    }
    if report.stop_reason == StopReason::NonFinite {
        return Err(CoreError::NonFinite {
            stage: "resolve",
            detail: report.diagnostic.unwrap_or_default(),
        }
        .into());
    }
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs, settings: &GlobalConfig, seed: u64) -> Result<()> {
    let body = load_body(&args.body, settings)?;
    let motion = load_motion(&args.input, &body.skeleton)?;
    let samples = SampleConfig {
        seed,
        ..settings.detect.samples
    };
    let detect = settings.detect.guidance.detect;
    let proxies = PairProxies::for_motion(body.skeleton, body.params, &motion, &samples)?;
    let m = metrics_from_reports(&detect_sequence(&motion, &proxies, detect)?);
    let doc = document("metrics", seed, json!({"samples": samples, "detect": detect}), to_value(&m));
    write_json(&args.out, &doc)
}

fn cmd_bench(args: &BenchArgs, settings: &GlobalConfig, seed: Option<u64>) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CoreError::io(p, e))?;
            serde_json::from_str::<BenchConfig>(&text).with_context(|| format!("bench config {}", p.display()))?
        }
        None => settings.bench.clone(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    cfg.parallel |= args.parallel;
    let report = run_bench(&cfg)?;
    print!("{}", report.table());
    write_json(&args.out, &document("bench", cfg.seed, to_value(&cfg), to_value(&report)))
}

#[derive(Serialize)]
struct ExportedPrimitive {
    person: usize,
    segment: usize,
    name: String,
    shape: proxycoll_core::primitives::Shape,
    /// Row-major rotation; columns are the local axes.
    rotation: [[f64; 3]; 3],
    origin: Vec3,
}

fn cmd_export(args: &ExportArgs, settings: &GlobalConfig, seed: u64) -> Result<()> {
    let body = load_body(&args.body, settings)?;
    let motion = load_motion(&args.input, &body.skeleton)?;
    let end = args.end.unwrap_or(motion.frame_count()).min(motion.frame_count());
    if args.start >= end {
        bail!("empty frame range {}..{end}", args.start);
    }
    let samples = SampleConfig {
        seed,
        ..settings.detect.samples
    };
    let proxies = PairProxies::for_motion(body.skeleton, body.params, &motion, &samples)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CoreError::io(&args.out_dir, e))?;
    let config = json!({"format": format!("{:?}", args.format).to_lowercase(), "start": args.start, "end": end});
    let names: Vec<&str> = proxies.skeleton.segments().iter().map(|s| s.name.as_str()).collect();
    for f in args.start..end {
        let bodies = proxies.pose_frame(&motion, f)?;
        let prims: Vec<ExportedPrimitive> = bodies
            .iter()
            .enumerate()
            .flat_map(|(person, b)| b.primitives().map(move |p| (person, p)))
            .map(|(person, p)| ExportedPrimitive {
                person,
                segment: p.segment,
                name: names[p.segment].to_string(),
                shape: p.shape,
                rotation: std::array::from_fn(|r| std::array::from_fn(|c| p.rotation[(r, c)])),
                origin: p.origin,
            })
            .collect();
        let path = args.out_dir.join(format!("frame_{f:05}.{}", if args.format == FormatArg::Obj { "obj" } else { "json" }));
        match args.format {
            FormatArg::Json => {
                let doc = document("export-frames", seed, config.clone(), json!({"frame": f, "primitives": to_value(&prims)}));
                write_json(&path, &doc)?;
            }
            FormatArg::Obj => {
                let mut text = format!("# {SCHEMA_VERSION} frame {f} seed {seed}\n");
                let mut offset = 1;
                for (person, b) in bodies.iter().enumerate() {
                    for p in b.primitives() {
                        let mesh = primitive_mesh(&p.shape, &p.rotation, &p.origin, 16)?;
                        text += &format!("o p{person}_{}\n", names[p.segment]);
                        for v in &mesh.vertices {
                            text += &format!("v {} {} {}\n", v.x, v.y, v.z);
                        }
                        for t in &mesh.faces {
                            text += &format!("f {} {} {}\n", t[0] + offset, t[1] + offset, t[2] + offset);
                        }
                        offset += mesh.vertices.len();
                    }
                }
                fs::write(&path, text).map_err(|e| CoreError::io(path, e))?;
            }
        }
    }
    log::info!("exported frames {}..{end} to {}", args.start, args.out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let settings = load_settings(cli.settings.as_deref())?;
    let level = match cli.verbose.max(settings.verbosity) {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let is_bench = matches!(cli.command, Command::Bench(_));
    let default_threads = if is_bench { 1 } else { std::thread::available_parallelism().map_or(1, |n| n.get()) };
    let threads = resolve_threads(cli.threads, settings.threads, default_threads)?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    log::debug!("{threads} worker threads");

    let seed_flag = cli.seed.or(settings.seed);
    let seed = seed_flag.unwrap_or(0);
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, &settings, seed_flag.unwrap_or(settings.fit.samples.seed)),
        Command::Detect(a) => cmd_detect(a, &settings, seed_flag.unwrap_or(settings.detect.samples.seed)),
        Command::Resolve(a) => cmd_resolve(a, &settings, seed_flag.unwrap_or(settings.resolve.seed)),
        Command::Metrics(a) => cmd_metrics(a, &settings, seed_flag.unwrap_or(settings.detect.samples.seed)),
        Command::Bench(a) => cmd_bench(a, &settings, seed_flag),
        Command::ExportFrames(a) => cmd_export(a, &settings, seed),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<CoreError>())
        .any(|e| e.kind() == ErrorKind::Numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
