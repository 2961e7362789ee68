use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use huefuse::config::Settings;
use huefuse::eval::{corpus_files, evaluate_corpus, write_reports, Condition, Corpus, EvalConfig};
use huefuse::fusion::fuse;
use huefuse::hue::correct_hue_image_gamma;
use huefuse::io::{read_image, write_image};
use huefuse::manifest::{load_stack, StackManifest};
use huefuse::metrics::{evaluate_with, MetricsReport};
use huefuse::pipeline::{estimate_curve, run_pipeline, Method};
use huefuse::response::{crf_mse, merge_hdr, ResponseCurve};
use huefuse::scene::{self, SceneConfig};
use huefuse::ssla::ssla;
use huefuse::stack::ExposureStack;
use huefuse::synth::{generate_stack, SynthConfig};

/// Multi-exposure fusion with hue correction.
#[derive(Parser)]
#[command(name = "huefuse", version)]
struct Cli {
    /// key = value settings file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render an exposure stack from an HDR image or a procedural scene.
    Synth(SynthArgs),
    /// Write procedural HDR scenes to a directory.
    Scenes(ScenesArgs),
    /// Estimate the inverse camera response of a stack.
    Crf(CrfArgs),
    /// Merge a stack into a radiance map.
    Merge(MergeArgs),
    /// Write the luminance-adjusted images of a stack.
    Ssla(SslaArgs),
    /// Mertens fusion of a stack (or of already adjusted images).
    Fuse(FuseArgs),
    /// Move a fused image onto the hue planes of an HDR image.
    Correct(CorrectArgs),
    /// Mean hue difference and TMQI of an image against an HDR reference.
    Metrics(MetricsArgs),
    /// Full scheme: adjustment, fusion, response, merge and hue correction.
    Pipeline(PipelineArgs),
    /// Score every method on a corpus under several exposure conditions.
    Eval(EvalArgs),
}

#[derive(Args)]
struct StackInput {
    /// stack.json listing the exposures and their EVs.
    #[arg(long, conflicts_with = "images")]
    stack: Option<PathBuf>,
    /// Exposure images (use with --ev).
    #[arg(long, num_args = 1.., requires = "ev")]
    images: Vec<PathBuf>,
    /// Exposure values of --images, in the same order.
    #[arg(long, num_args = 1.., allow_negative_numbers = true, value_delimiter = ',')]
    ev: Vec<f64>,
}

impl StackInput {
    fn load(&self) -> Result<ExposureStack> {
        if let Some(path) = &self.stack {
            let (_, stack) = load_stack(path).with_context(|| format!("loading {}", path.display()))?;
            return Ok(stack);
        }
        if self.images.is_empty() {
            bail!("give either --stack or --images with --ev");
        }
        let m = StackManifest {
            files: self.images.clone(),
            ev: self.ev.clone(),
            gamma: None,
        };
        Ok(m.load(Path::new(""))?)
    }
}

#[derive(Args, Default)]
struct Tuning {
    /// Response estimator.
    #[arg(long, value_parser = ["mitsunaga", "debevec"])]
    crf: Option<String>,
    /// Polynomial degree for the Mitsunaga estimator, or "auto".
    #[arg(long)]
    degree: Option<String>,
    /// Number of brightness areas (default: number of exposures).
    #[arg(long)]
    areas: Option<usize>,
    /// Seed for the mixture fit.
    #[arg(long)]
    seed: Option<u64>,
    /// Pyramid levels (default: log2 of the shorter side minus 2).
    #[arg(long)]
    levels: Option<usize>,
    /// Key value for the luminance adjustment.
    #[arg(long)]
    key: Option<f64>,
}

impl Tuning {
    fn settings(&self, config: Option<&Path>) -> Result<Settings> {
        let mut s = match config {
            Some(p) => Settings::read(p).with_context(|| format!("reading {}", p.display()))?,
            None => Settings::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                s.set(k, &v)?;
            }
            Ok(())
        };
        set("crf.method", self.crf.clone())?;
        set("crf.degree", self.degree.clone())?;
        set("ssla.m", self.areas.map(|v| v.to_string()))?;
        set("ssla.seed", self.seed.map(|v| v.to_string()))?;
        set("fusion.levels", self.levels.map(|v| v.to_string()))?;
        set("ssla.key_value", self.key.map(|v| v.to_string()))?;
        Ok(s)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Linear HDR image (.hdr or .pfm).
    #[arg(long, conflicts_with = "scene")]
    hdr: Option<PathBuf>,
    /// Procedural scene number instead of an HDR file.
    #[arg(long)]
    scene: Option<u64>,
    /// Side length of the procedural scene.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(
        long,
        allow_negative_numbers = true,
        value_delimiter = ',',
        default_value = "-4,-2,0,2,4"
    )]
    ev: Vec<f64>,
    #[arg(long, default_value_t = 2.2)]
    gamma: f64,
    /// Output directory for the PNG exposures and stack.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScenesArgs {
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CrfArgs {
    #[command(flatten)]
    input: StackInput,
    #[command(flatten)]
    tuning: Tuning,
    /// Where to write the curve.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the per-channel MSE against a pure gamma curve.
    #[arg(long)]
    truth_gamma: Option<f64>,
}

#[derive(Args)]
struct MergeArgs {
    #[command(flatten)]
    input: StackInput,
    #[command(flatten)]
    tuning: Tuning,
    /// Use this curve instead of estimating one.
    #[arg(long, conflicts_with = "gamma")]
    curve: Option<PathBuf>,
    /// Use a pure gamma curve instead of estimating one.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SslaArgs {
    #[command(flatten)]
    input: StackInput,
    #[command(flatten)]
    tuning: Tuning,
    /// Output directory; images are written as adjusted_<m>.png.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    input: StackInput,
    #[command(flatten)]
    tuning: Tuning,
    /// Run the luminance adjustment before fusing.
    #[arg(long)]
    ssla: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    #[arg(long)]
    fused: PathBuf,
    #[arg(long)]
    hdr: PathBuf,
    /// Gamma undone before the correction and reapplied after.
    #[arg(long, default_value_t = 2.2)]
    gamma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    fused: PathBuf,
    /// Linear HDR reference.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Print JSON instead of key = value lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: StackInput,
    #[command(flatten)]
    tuning: Tuning,
    /// Skip the luminance adjustment (plain Mertens fusion).
    #[arg(long)]
    no_ssla: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of .hdr / .pfm images.
    #[arg(long, conflicts_with = "scenes")]
    corpus: Option<PathBuf>,
    /// Use this many procedural scenes instead of a corpus directory.
    #[arg(long)]
    scenes: Option<usize>,
    /// Side length of the procedural scenes.
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Exposure conditions as lo:hi or comma lists (default -4:4, -4:0, 0:4).
    #[arg(long, allow_hyphen_values = true)]
    condition: Vec<String>,
    /// Methods to run (default all).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long)]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn save(img: &huefuse::image::RgbImage, path: &Path) -> Result<()> {
    write_image(img, path).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<huefuse::image::RgbImage> {
    read_image(path).with_context(|| format!("reading {}", path.display()))
}

fn ev_label(v: f64) -> String {
    if v >= 0.0 {
        format!("ev+{v}")
    } else {
        format!("ev{v}")
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let hdr = match (&a.hdr, a.scene) {
        (Some(p), _) => load(p)?,
        (None, Some(seed)) => scene::generate(
            seed,
            &SceneConfig {
                width: a.size,
                height: a.size,
                ..Default::default()
            },
        ),
        (None, None) => bail!("give --hdr or --scene"),
    };
    let cfg = SynthConfig {
        ev: a.ev.clone(),
        gamma: a.gamma,
        key: 0.18,
    };
    let stack = generate_stack(&hdr, &cfg)?;
    create_dir(&a.out)?;
    let mut files = Vec::new();
    for (img, &v) in stack.images().iter().zip(&a.ev) {
        let name = PathBuf::from(format!("{}.png", ev_label(v)));
        save(img, &a.out.join(&name))?;
        files.push(name);
    }
    let m = StackManifest {
        files,
        ev: a.ev.clone(),
        gamma: Some(a.gamma),
    };
    let path = a.out.join("stack.json");
    fs::write(&path, m.to_json()).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_scenes(a: &ScenesArgs) -> Result<()> {
    create_dir(&a.out)?;
    let cfg = SceneConfig {
        width: a.size,
        height: a.size,
        ..Default::default()
    };
    for i in 0..a.count {
        let path = a.out.join(format!("scene{i:03}.pfm"));
        save(&scene::generate(i as u64, &cfg), &path)?;
    }
    println!("{} scenes in {}", a.count, a.out.display());
    Ok(())
}

fn cmd_crf(a: &CrfArgs, config: Option<&Path>) -> Result<()> {
    let s = a.tuning.settings(config)?;
    let stack = a.input.load()?;
    let curve = estimate_curve(&stack, &s.pipeline)?;
    if let Some(out) = &a.out {
        fs::write(out, curve.to_text()).with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(g) = a.truth_gamma {
        let mse = crf_mse(&curve, g);
        println!("method = {}", s.pipeline.crf.name());
        println!("mse_r = {:.6e}\nmse_g = {:.6e}\nmse_b = {:.6e}", mse[0], mse[1], mse[2]);
    } else if a.out.is_none() {
        print!("{}", curve.to_text());
    }
    Ok(())
}

fn cmd_merge(a: &MergeArgs, config: Option<&Path>) -> Result<()> {
    let s = a.tuning.settings(config)?;
    let stack = a.input.load()?;
    let curve = match (&a.curve, a.gamma) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ResponseCurve::from_text(&text)?
        }
        (None, Some(g)) => ResponseCurve::gamma(g),
        (None, None) => estimate_curve(&stack, &s.pipeline)?,
    };
    let hdr = merge_hdr(&stack, &curve, s.pipeline.weight);
    save(&hdr.image, &a.out)
}

fn cmd_ssla(a: &SslaArgs, config: Option<&Path>) -> Result<()> {
    let s = a.tuning.settings(config)?;
    let stack = a.input.load()?;
    let adjusted = ssla(&stack, &s.pipeline.ssla)?;
    create_dir(&a.out)?;
    for (m, img) in adjusted.images.iter().enumerate() {
        save(img, &a.out.join(format!("adjusted_{m}.png")))?;
    }
    for (m, (alpha, phi)) in adjusted.alphas.iter().zip(&adjusted.phi).enumerate() {
        println!("area {m}: source {phi} alpha {alpha:.6}");
    }
    Ok(())
}

fn cmd_fuse(a: &FuseArgs, config: Option<&Path>) -> Result<()> {
    let s = a.tuning.settings(config)?;
    let stack = a.input.load()?;
    let fused = if a.ssla {
        fuse(&ssla(&stack, &s.pipeline.ssla)?.images, &s.pipeline.fusion)?
    } else {
        fuse(stack.images(), &s.pipeline.fusion)?
    };
    save(&fused, &a.out)
}

fn cmd_correct(a: &CorrectArgs) -> Result<()> {
    let fused = load(&a.fused)?;
    let hdr = load(&a.hdr)?;
    save(&correct_hue_image_gamma(&fused, &hdr, a.gamma)?, &a.out)
}

fn print_report(r: &MetricsReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string(r)?);
    } else {
        println!("mean_dh = {:.6}", r.mean_dh);
        println!(
            "tmqi_q = {:.6}\ntmqi_s = {:.6}\ntmqi_n = {:.6}",
            r.tmqi_q, r.tmqi_s, r.tmqi_n
        );
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs, config: Option<&Path>) -> Result<()> {
    let s = Tuning::default().settings(config)?;
    let fused = load(&a.fused)?;
    let hdr = load(&a.reference)?;
    print_report(&evaluate_with(&fused, &hdr, &s.tmqi)?, a.json)
}

fn cmd_pipeline(a: &PipelineArgs, config: Option<&Path>) -> Result<()> {
    let mut s = a.tuning.settings(config)?;
    if a.no_ssla {
        s.pipeline.no_ssla = true;
    }
    let stack = a.input.load()?;
    let out = run_pipeline(&stack, &s.pipeline)?;
    create_dir(&a.out)?;
    let targets = [
        ("fused.png", Some(&out.fused)),
        ("corrected.png", Some(&out.corrected)),
        ("hdr.pfm", Some(&out.hdr.image)),
        ("curve.txt", None),
    ];
    let mut written = Vec::new();
    let result = targets.iter().try_for_each(|(name, img)| {
        let path = a.out.join(name);
        written.push(path.clone());
        match img {
            Some(img) => save(img, &path),
            None => fs::write(&path, out.curve.to_text()).with_context(|| format!("writing {}", path.display())),
        }
    });
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn cmd_eval(a: &EvalArgs, config: Option<&Path>) -> Result<()> {
    let s = a.tuning.settings(config)?;
    let corpus = match (&a.corpus, a.scenes) {
        (Some(dir), _) => {
            let files = corpus_files(dir)?;
            if files.is_empty() {
                bail!("no .hdr or .pfm images in {}", dir.display());
            }
            Corpus::Files(files)
        }
        (None, Some(n)) => Corpus::Scenes {
            count: n,
            config: SceneConfig {
                width: a.size,
                height: a.size,
                ..Default::default()
            },
        },
        (None, None) => bail!("give --corpus or --scenes"),
    };
    let conditions = if a.condition.is_empty() {
        Condition::standard()
    } else {
        a.condition
            .iter()
            .map(|c| Condition::parse(c))
            .collect::<Result<_, _>>()?
    };
    let methods = if a.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        let mut m = a
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()?;
        m.sort();
        m.dedup();
        m
    };
    let cfg = EvalConfig {
        conditions,
        methods,
        pipeline: s.pipeline,
        tmqi: s.tmqi,
        ..Default::default()
    };
    let result = evaluate_corpus(&corpus, &cfg);
    for f in &result.failures {
        eprintln!("skipped {} {}: {}", f.image, f.condition, f.error);
    }
    if result.rows.is_empty() {
        bail!("every image failed");
    }
    write_reports(&a.out, &result, &cfg)?;
    println!(
        "{} rows, {} failures, written to {}",
        result.rows.len(),
        result.failures.len(),
        a.out.display()
    );
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HUEFUSE_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("HUEFUSE_THREADS={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_threads()?;
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Scenes(a) => cmd_scenes(a),
        Command::Crf(a) => cmd_crf(a, config),
        Command::Merge(a) => cmd_merge(a, config),
        Command::Ssla(a) => cmd_ssla(a, config),
        Command::Fuse(a) => cmd_fuse(a, config),
        Command::Correct(a) => cmd_correct(a),
        Command::Metrics(a) => cmd_metrics(a, config),
        Command::Pipeline(a) => cmd_pipeline(a, config),
        Command::Eval(a) => cmd_eval(a, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
