//! Command-line front end: `dehaze`, `synth`, `eval` and `inspect`.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, out-of-range
//! parameters, bad config files) and 2 for runtime errors. Failures print a
//! single JSON line to standard error; stage timings go there too, as JSON
//! lines. Results are written to files only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::airlight::Airlight;
use crate::codec::{load_image, save_image};
use crate::config::{parse_angle, parse_list, PipelineConfig};
use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::restore::{dehaze_with, DehazeOutput, Overrides};
use crate::synth::{
    evaluate, make_layered_scene, synthesize, textured_image, HazeScene, SkyReference,
};
use crate::transmission::Stage;

#[derive(Parser, Debug)]
#[command(
    name = "msdehaze",
    version,
    about = "Multi-scale single image dehazing"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dehaze one image.
    Dehaze(DehazeArgs),
    /// Render a synthetic hazy scene with its ground truth.
    Synth(SynthArgs),
    /// Full-reference metrics as JSON.
    Eval(EvalArgs),
    /// Dump pyramid levels, transmission stages, airlight and timings.
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Key-value config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmission floor at restoration (0.25 normal haze, 0.125 heavy).
    #[arg(long)]
    eta: Option<f64>,
    /// Pyramid reduction steps.
    #[arg(long)]
    levels: Option<usize>,
    /// Per-level Laplacian gains, e.g. `1.5,1.0`.
    #[arg(long, allow_hyphen_values = true)]
    detail_gain: Option<String>,
    /// Transmission floor of the single-scale baseline.
    #[arg(long)]
    tl: Option<f64>,
    #[arg(long)]
    rho_dark: Option<usize>,
    #[arg(long)]
    rho_wgif: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Haze-line bin size in radians, or `pi/N`.
    #[arg(long)]
    bin_step: Option<String>,
    /// Maximum haze-line subset size.
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    r_min: Option<f64>,
    /// Airlight override `r,g,b` in (0, 1].
    #[arg(long)]
    airlight: Option<String>,
}

#[derive(Args, Debug)]
struct DehazeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Use the single-scale baseline restoration.
    #[arg(long)]
    single_scale: bool,
    /// Also write a transmission map.
    #[arg(long)]
    save_transmission: Option<PathBuf>,
    /// Which stage `--save-transmission` writes: initial, averaged or refined.
    #[arg(long, default_value = "refined")]
    transmission_stage: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Hazy output.
    #[arg(long)]
    out: PathBuf,
    /// Clean ground truth output.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// True transmission output.
    #[arg(long)]
    tmap: Option<PathBuf>,
    /// Noise-free hazy output (reference for sky noise measurements).
    #[arg(long)]
    noise_free_out: Option<PathBuf>,
    /// Sky mask output (`t < 0.02`).
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "0.8,0.82,0.85")]
    airlight: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Number of depth bands; the top band is sky.
    #[arg(long, default_value_t = 4)]
    layers: usize,
    /// Constant transmission instead of depth bands.
    #[arg(long)]
    constant_t: Option<f64>,
    /// Clean image to haze instead of the generated texture.
    #[arg(long)]
    clean: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    restored: PathBuf,
    /// Hazy input, for input-side metrics.
    #[arg(long)]
    hazy: Option<PathBuf>,
    #[arg(long, requires = "tmap_est")]
    tmap_true: Option<PathBuf>,
    #[arg(long, requires = "tmap_true")]
    tmap_est: Option<PathBuf>,
    /// Sky mask; enables sky_noise_gain together with --reference and --noise.
    #[arg(long, requires_all = ["reference", "noise"])]
    mask: Option<PathBuf>,
    /// Restoration of the noise-free synthesis under the same settings.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    json: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

/// Failure split by exit status.
enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e)
}

fn diagnostic(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("usage error")
                .trim_start_matches("error: ");
            diagnostic("usage", first);
            return 1;
        }
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            diagnostic("usage", "--threads must be at least 1");
            return 1;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            diagnostic("runtime", &e.to_string());
            return 2;
        }
    };

    let outcome = pool.install(|| match cli.command {
        Command::Dehaze(a) => run_dehaze(a),
        Command::Synth(a) => run_synth(a),
        Command::Eval(a) => run_eval(a),
        Command::Inspect(a) => run_inspect(a),
    });
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            diagnostic(e.kind(), &e.to_string());
            1
        }
        Err(Failure::Runtime(e)) => {
            diagnostic(e.kind(), &e.to_string());
            2
        }
    }
}

fn parse_airlight(s: &str) -> Result<Airlight> {
    let v = parse_list(s).map_err(|_| Error::param("airlight", format!("`{s}` is not r,g,b")))?;
    match v.as_slice() {
        [r, g, b] => Airlight::new([*r, *g, *b]),
        _ => Err(Error::param(
            "airlight",
            format!("`{s}` needs exactly three values"),
        )),
    }
}

impl PipelineArgs {
    fn resolve(&self) -> std::result::Result<(PipelineConfig, Overrides), Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Unreadable {
                    path: path.clone(),
                    source,
                })?;
                let mut c = PipelineConfig::default();
                c.merge_text(&text).map_err(usage)?;
                c
            }
            None => PipelineConfig::default(),
        };
        let f64_flags = [
            ("eta", self.eta),
            ("t_l", self.tl),
            ("lambda", self.lambda),
            ("r_min", self.r_min),
        ];
        for (key, value) in f64_flags {
            if let Some(v) = value {
                cfg.set(key, &v.to_string()).map_err(usage)?;
            }
        }
        let usize_flags = [
            ("levels", self.levels),
            ("rho_dark", self.rho_dark),
            ("rho_wgif", self.rho_wgif),
            ("nu", self.nu),
        ];
        for (key, value) in usize_flags {
            if let Some(v) = value {
                cfg.set(key, &v.to_string()).map_err(usage)?;
            }
        }
        if let Some(g) = &self.detail_gain {
            cfg.detail_gain = parse_list(g).map_err(usage)?;
        }
        if let Some(s) = &self.bin_step {
            cfg.bin_step = parse_angle(s).map_err(usage)?;
        }
        cfg.validate().map_err(usage)?;
        let airlight = self
            .airlight
            .as_deref()
            .map(parse_airlight)
            .transpose()
            .map_err(usage)?;
        Ok((cfg, Overrides { airlight }))
    }
}

fn log_timings(command: &str, timings: &[(&'static str, f64)]) {
    for (stage, ms) in timings {
        eprintln!(
            "{}",
            json!({ "command": command, "stage": stage, "ms": ms })
        );
    }
}

fn load_rgb(path: &Path) -> Result<PlanarImage> {
    Ok(load_image(path)?.to_rgb())
}

fn load_gray(path: &Path) -> Result<PlanarImage> {
    Ok(load_image(path)?.to_gray())
}

fn run_dehaze(a: DehazeArgs) -> std::result::Result<(), Failure> {
    let (cfg, overrides) = a.pipeline.resolve()?;
    let stage: Stage = a.transmission_stage.parse().map_err(usage)?;
    let z = load_rgb(&a.input)?;
    let out = dehaze_with(&z, &cfg, &overrides, a.single_scale)?;
    save_image(&out.image, &a.output)?;
    if let Some(path) = &a.save_transmission {
        save_image(&out.stages.get(stage).map, path)?;
    }
    log_timings("dehaze", &out.timings);
    Ok(())
}

fn run_synth(a: SynthArgs) -> std::result::Result<(), Failure> {
    let airlight = parse_airlight(&a.airlight).map_err(usage)?;
    let scene = match (a.constant_t, &a.clean) {
        (Some(t), clean) => {
            let clean = match clean {
                Some(p) => load_rgb(p)?,
                None => textured_image(a.width, a.height, a.seed),
            };
            HazeScene::with_constant_t(clean, t, airlight, a.noise, a.seed).map_err(usage)?
        }
        (None, clean) => {
            let (w, h) = match clean {
                Some(p) => {
                    let img = load_rgb(p)?;
                    (img.width(), img.height())
                }
                None => (a.width, a.height),
            };
            let mut s =
                make_layered_scene(w, h, a.layers, a.alpha, airlight, a.seed).map_err(usage)?;
            if let Some(p) = clean {
                s.clean = load_rgb(p)?;
            }
            s.noise_std = a.noise;
            s
        }
    };
    scene.validate().map_err(usage)?;
    save_image(&synthesize(&scene)?, &a.out)?;
    if let Some(p) = &a.truth {
        save_image(&scene.clean, p)?;
    }
    if let Some(p) = &a.tmap {
        save_image(&scene.transmission(), p)?;
    }
    if let Some(p) = &a.noise_free_out {
        save_image(&synthesize(&scene.noise_free())?, p)?;
    }
    if let Some(p) = &a.mask {
        save_image(&crate::synth::sky_mask(&scene.transmission()), p)?;
    }
    Ok(())
}

fn run_eval(a: EvalArgs) -> std::result::Result<(), Failure> {
    let clean = load_rgb(&a.clean)?;
    let restored = load_rgb(&a.restored)?;
    let hazy = a.hazy.as_deref().map(load_rgb).transpose()?;
    let tmaps = match (&a.tmap_true, &a.tmap_est) {
        (Some(t), Some(e)) => Some((load_gray(t)?, load_gray(e)?)),
        _ => None,
    };
    let sky = match (&a.mask, &a.reference, a.noise) {
        (Some(m), Some(r), Some(n)) => Some((load_gray(m)?, load_rgb(r)?, n)),
        _ => None,
    };
    let report = evaluate(
        &clean,
        &restored,
        hazy.as_ref(),
        tmaps.as_ref().map(|(t, e)| (t, e)),
        sky.as_ref().map(|(m, r, n)| SkyReference {
            mask: m,
            clean_restored: r,
            noise_std: *n,
        }),
    )?;
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Malformed(e.to_string()))?;
    write_text(&a.json, &(text + "\n"))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}

fn run_inspect(a: InspectArgs) -> std::result::Result<(), Failure> {
    let (cfg, overrides) = a.pipeline.resolve()?;
    let z = load_rgb(&a.input)?;
    let out = dehaze_with(&z, &cfg, &overrides, false)?;
    let dir = &a.out_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Unwritable {
        path: dir.clone(),
        source,
    })?;
    dump(dir, &out, &cfg)?;
    log_timings("inspect", &out.timings);
    Ok(())
}

fn dump(dir: &Path, out: &DehazeOutput, cfg: &PipelineConfig) -> Result<()> {
    for (l, g) in out.pyramid.gaussian.iter().enumerate() {
        save_image(g, dir.join(format!("gaussian_{l}.png")))?;
    }
    // Signed residuals are stored offset by +0.5.
    for (l, lap) in out.pyramid.laplacian.iter().enumerate() {
        save_image(
            &lap.map(|v| v + 0.5),
            dir.join(format!("laplacian_{l}.png")),
        )?;
    }
    for stage in [Stage::Initial, Stage::Averaged, Stage::Refined] {
        save_image(
            &out.stages.get(stage).map,
            dir.join(format!("t_{}.png", stage.name())),
        )?;
    }
    for (l, t) in out.t_pyramid.iter().enumerate() {
        save_image(t, dir.join(format!("t_level_{l}.png")))?;
    }
    save_image(&out.stages.guidance.0, dir.join("guidance.png"))?;
    save_image(&out.image, dir.join("restored.png"))?;
    write_text(&dir.join("airlight.txt"), &format!("{}\n", out.airlight))?;
    write_text(&dir.join("config.txt"), &cfg.serialize())?;
    let timings: BTreeMap<&str, f64> = out.timings.iter().copied().collect();
    let text =
        serde_json::to_string_pretty(&timings).map_err(|e| Error::Malformed(e.to_string()))?;
    write_text(&dir.join("timings.json"), &(text + "\n"))?;
    Ok(())
}
