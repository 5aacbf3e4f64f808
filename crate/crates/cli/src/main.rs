use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use liquid_scan::eval::{aggregate_eval, match_detections, EvalReport, MatchRule};
use liquid_scan::io::{load_mask, load_rgb, save_png};
use liquid_scan::select::SelectionParams;
use liquid_scan::synth::{self, Profile, SceneSpec};
use liquid_scan::{annotate, par, Detector, DetectorConfig, Error, Execution, VesselRegion};
use serde_json::json;

#[derive(Parser)]
#[command(name = "liquid-scan", version, about = "Find liquid surfaces inside a vessel image")]
struct Cli {
    /// Worker threads for candidate scoring (default: all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Indicator preset, e.g. entry22; overrides the file's preset and indicator
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect surfaces in one image and print the report as JSON
    Detect {
        image: PathBuf,
        /// Vessel interior: a mask image (.png, .bmp) or an extent table
        #[arg(long)]
        vessel: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write an annotated copy of the image here
        #[arg(long)]
        annotate: Option<PathBuf>,
    },
    /// Evaluate a detector configuration on a synthetic corpus
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        rule: RuleArgs,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus
    Synth {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Difficulty profile: easy, emulsive or glare
        #[arg(long, value_parser = parse_profile, conflicts_with = "spec")]
        profile: Option<Profile>,
        /// Render one scene file (TOML or JSON) with varying noise instead
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of images
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a corpus at several acceptance thresholds
    Sweep {
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        rule: RuleArgs,
        /// Comma-separated thresholds, or start:end:step
        #[arg(long, default_value = "0.3,0.4,0.5")]
        thresholds: String,
        /// Write the JSON table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RuleArgs {
    /// Largest row distance between a detection and its surface
    #[arg(long, default_value_t = 2)]
    row_tolerance: usize,
    /// Height tolerance as a fraction of the true semi-axis (at least 2 px)
    #[arg(long, default_value_t = 0.2)]
    height_fraction: f64,
}

impl RuleArgs {
    fn rule(&self) -> MatchRule {
        MatchRule {
            row_tolerance: self.row_tolerance,
            height_fraction: self.height_fraction,
            ..MatchRule::default()
        }
    }
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> liquid_scan::Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_text(path: Option<&Path>, text: &str) -> liquid_scan::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn load_config(args: &ConfigArgs) -> liquid_scan::Result<DetectorConfig> {
    match &args.config {
        Some(path) => DetectorConfig::from_toml(&read_text(path)?, args.preset.as_deref()),
        None => {
            let cfg = DetectorConfig::from_preset(args.preset.as_deref().unwrap_or(liquid_scan::config::DEFAULT_PRESET))?;
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn load_vessel(path: &Path, width: usize, height: usize) -> liquid_scan::Result<VesselRegion> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if matches!(ext.as_deref(), Some("png" | "bmp")) {
        VesselRegion::from_mask(&load_mask(path)?)
    } else {
        VesselRegion::parse_extent_table(&read_text(path)?, width, height)
    }
}

fn detect(
    image: &Path,
    vessel: &Path,
    config: &ConfigArgs,
    out: Option<&Path>,
    annotated: Option<&Path>,
) -> liquid_scan::Result<()> {
    let det = Detector::new(load_config(config)?)?;
    let img = load_rgb(image)?;
    let vessel = load_vessel(vessel, img.width(), img.height())?;
    let id = image.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let report = det.detect(id, &img, &vessel)?;
    let text = to_json(&report);
    if let Some(path) = annotated {
        save_png(&annotate(&img, &vessel, &report), path)?;
    }
    write_text(out, &text)
}

/// Scores every corpus image once.
fn score_corpus(
    dir: &Path,
    det: &Detector,
) -> liquid_scan::Result<Vec<(synth::CorpusItem, liquid_scan::ScoredImage)>> {
    let manifest = synth::read_manifest(dir)?;
    manifest
        .entries
        .iter()
        .map(|e| {
            let item = synth::load_item(dir, e)?;
            let scored = det.score(&item.image, &item.vessel)?;
            Ok((item, scored))
        })
        .collect()
}

fn evaluate(
    det: &Detector,
    scored: &[(synth::CorpusItem, liquid_scan::ScoredImage)],
    selection: &SelectionParams,
    rule: MatchRule,
) -> liquid_scan::Result<(EvalReport, Vec<Vec<liquid_scan::DetectedCurve>>)> {
    let mut tallies = Vec::with_capacity(scored.len());
    let mut accepted = Vec::with_capacity(scored.len());
    for (item, s) in scored {
        let sel = s.select(&item.vessel, selection)?;
        let report = det.report(&item.id, &item.vessel, s, sel);
        tallies.push(match_detections(&report, &item.truth, &rule)?);
        accepted.push(report.accepted);
    }
    let report = aggregate_eval(tallies, rule, Some(det.fingerprint().to_string()))?;
    Ok((report, accepted))
}

fn eval(corpus: &Path, config: &ConfigArgs, rule: MatchRule, out: Option<&Path>) -> liquid_scan::Result<()> {
    let det = Detector::new(load_config(config)?)?;
    rule.validate()?;
    let scored = score_corpus(corpus, &det)?;
    let (report, _) = evaluate(&det, &scored, &det.config().selection, rule)?;
    match out {
        Some(p) => {
            write_text(Some(p), &to_json(&report))?;
            print!("{report}");
        }
        None => {
            eprint!("{report}");
            print!("{}", to_json(&report));
        }
    }
    Ok(())
}

fn parse_thresholds(text: &str) -> liquid_scan::Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot read thresholds `{text}`"));
    let values: Vec<f64> = if let Some((start, rest)) = text.split_once(':') {
        let (end, step) = rest.split_once(':').ok_or_else(bad)?;
        let (start, end, step): (f64, f64, f64) = (
            start.trim().parse().map_err(|_| bad())?,
            end.trim().parse().map_err(|_| bad())?,
            step.trim().parse().map_err(|_| bad())?,
        );
        if !(step > 0.0) {
            return Err(bad());
        }
        let n = ((end - start) / step + 1e-9).floor();
        if n < 0.0 {
            return Err(Error::Config(format!("threshold range `{text}` is empty")));
        }
        (0..=n as usize).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<liquid_scan::Result<_>>()?
    };
    if values.is_empty() {
        return Err(Error::Config("no thresholds given".into()));
    }
    Ok(values)
}

fn sweep(
    corpus: &Path,
    config: &ConfigArgs,
    rule: MatchRule,
    thresholds: &str,
    out: Option<&Path>,
) -> liquid_scan::Result<()> {
    let mut thresholds = parse_thresholds(thresholds)?;
    thresholds.sort_by(f64::total_cmp);
    let det = Detector::new(load_config(config)?)?;
    rule.validate()?;
    for &t in &thresholds {
        SelectionParams {
            threshold: t,
            ..det.config().selection
        }
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    let scored = score_corpus(corpus, &det)?;
    let mut rows = Vec::new();
    let mut table = String::from("Threshold\tMissed all (%)\tFalse matches per image (%)\n");
    let mut previous: Option<Vec<Vec<liquid_scan::DetectedCurve>>> = None;
    for &t in &thresholds {
        let selection = SelectionParams {
            threshold: t,
            ..det.config().selection
        };
        let (report, accepted) = evaluate(&det, &scored, &selection, rule)?;
        if let Some(prev) = &previous {
            let nested = accepted.iter().zip(prev).all(|(now, before)| now.iter().all(|c| before.contains(c)));
            assert!(nested, "acceptance sets must shrink as the threshold grows");
        }
        previous = Some(accepted);
        table.push_str(&format!(
            "{t:.2}\t{}\t{}\n",
            liquid_scan::eval::percent(report.miss_all),
            liquid_scan::eval::percent(report.false_per_image)
        ));
        rows.push(json!({
            "threshold": t,
            "miss_all": report.miss_all,
            "miss_liquid_air": report.miss_liquid_air,
            "miss_liquid_liquid": report.miss_liquid_liquid,
            "false_per_image": report.false_per_image,
            "wrong_shape_fraction": report.wrong_shape_fraction,
            "double_recognition_fraction": report.double_recognition_fraction,
        }));
    }
    let doc = json!({
        "schema_version": liquid_scan::SCHEMA_VERSION,
        "config_fingerprint": det.fingerprint(),
        "images": scored.len(),
        "rows": rows,
    });
    match out {
        Some(p) => {
            write_text(Some(p), &to_json(&doc))?;
            print!("{table}");
        }
        None => {
            eprint!("{table}");
            print!("{}", to_json(&doc));
        }
    }
    Ok(())
}

fn load_scene(path: &Path) -> liquid_scan::Result<SceneSpec> {
    let text = read_text(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let spec: SceneSpec = parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

fn generate(out: &Path, profile: Option<Profile>, spec: Option<&Path>, n: usize, seed: u64) -> liquid_scan::Result<()> {
    let exec = Execution::default();
    let manifest = match (profile, spec) {
        (_, Some(path)) => {
            let scenes = synth::plan_from_spec(n, &load_scene(path)?, seed)?;
            synth::write_corpus(&scenes, "spec", seed, out, exec)?
        }
        (profile, None) => synth::generate_corpus(n, profile.unwrap_or(Profile::Easy), seed, out, exec)?,
    };
    let surfaces: usize = manifest.entries.iter().map(|e| e.phases).sum();
    println!(
        "wrote {} images with {surfaces} surfaces to {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> liquid_scan::Result<()> {
    match cli.command {
        Command::Detect {
            image,
            vessel,
            config,
            out,
            annotate,
        } => detect(&image, &vessel, &config, out.as_deref(), annotate.as_deref()),
        Command::Eval {
            corpus,
            config,
            rule,
            out,
        } => eval(&corpus, &config, rule.rule(), out.as_deref()),
        Command::Synth {
            out,
            profile,
            spec,
            n,
            seed,
        } => generate(&out, profile, spec.as_deref(), n as usize, seed),
        Command::Sweep {
            corpus,
            config,
            rule,
            thresholds,
            out,
        } => sweep(&corpus, &config, rule.rule(), &thresholds, out.as_deref()),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Param(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = cli.threads.map(|t| t as usize);
    match par::with_threads(threads, || run(cli)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
