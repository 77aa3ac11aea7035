use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use texclass::bench::{report_csv, run_benchmark, Plan};
use texclass::classify::{
    classify_image, load_any_model, save_model, train_model_set, AnyModel, Strategy, TrainingClass,
    DEFAULT_WINDOW, FORMAT_VERSION,
};
use texclass::descriptors::{code_planes, DescriptorConfig, DescriptorKind, Scale, DEFAULT_VAR_BINS, INVALID_CODE};
use texclass::evaluate::assess;
use texclass::glcm::{classify_glcm, train_glcm, GlcmParams, DEFAULT_GLCM_WINDOW, DEFAULT_LEVELS};
use texclass::raster::{load_mask, load_pgm, load_raw, save_mask, save_pgm, Raster, Rect};
use texclass::synth::{training_from_mask, Recipe};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (model format_version ");

fn version() -> &'static str {
    // clap wants a 'static string; the format version is a small constant
    Box::leak(format!("{VERSION}{FORMAT_VERSION})").into_boxed_str())
}

#[derive(Parser)]
#[command(name = "texclass", about = "Texture descriptor classification", version = version())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic mosaic recipe to <out>.pgm, <out>_mask.pgm and <out>_train.txt
    Synth {
        recipe: PathBuf,
        /// Output path prefix
        #[arg(long)]
        out: PathBuf,
        /// Override the recipe seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train class models from training rectangles or a training mask
    Train(TrainArgs),
    /// Label every interior pixel of an image with a trained model
    Classify(ClassifyArgs),
    /// Compare a predicted mask with a reference mask
    Eval {
        predicted: PathBuf,
        reference: PathBuf,
        /// Rect list of pixels to leave out (usually the training rects)
        #[arg(long)]
        exclude: Option<PathBuf>,
        /// Write the text report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time naive against incremental classification for a plan file
    Bench {
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ImageArgs {
    image: PathBuf,
    /// Read headerless big-endian samples instead of PGM
    #[arg(long, requires_all = ["width", "height"])]
    raw: bool,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 8)]
    depth: u8,
}

impl ImageArgs {
    fn load(&self) -> Result<Raster> {
        let raster = if self.raw {
            load_raw(&self.image, self.width.unwrap_or(0), self.height.unwrap_or(0), self.depth)?
        } else {
            load_pgm(&self.image)?
        };
        Ok(raster)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    image: ImageArgs,
    /// Training rect list, one `class_id x y w h` per line
    #[arg(long, conflicts_with = "mask", required_unless_present = "mask")]
    rects: Option<PathBuf>,
    /// Training mask PGM; nonzero pixels train their class
    #[arg(long)]
    mask: Option<PathBuf>,
    /// lbp, lbpriu, var, wld, lbpriu_var, wld_var or glcm
    #[arg(long, default_value = "wld")]
    td: String,
    /// Neighbourhood P,R; repeat for multi-scale
    #[arg(long = "scale", value_name = "P,R")]
    scales: Vec<Scale>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_VAR_BINS)]
    var_bins: usize,
    /// GLCM grey levels
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    /// GLCM pixel distance; repeat for several
    #[arg(long = "distance")]
    distances: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    image: ImageArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Recompute every window from scratch
    #[arg(long, conflicts_with = "fast")]
    naive: bool,
    /// Incremental sliding window (default)
    #[arg(long)]
    fast: bool,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write each code plane as <prefix>_<n>.pgm (code + 1, 0 on the border)
    #[arg(long, value_name = "PREFIX")]
    dump_codes: Option<PathBuf>,
}

fn parse_rects(text: &str) -> Result<Vec<TrainingClass>> {
    let mut classes: Vec<TrainingClass> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("rect list line {}: expected integers", n + 1))?;
        let [class, x, y, w, h] = fields[..] else {
            bail!("rect list line {}: expected `class_id x y w h`", n + 1);
        };
        let class = u8::try_from(class)
            .ok()
            .filter(|&c| c > 0)
            .with_context(|| format!("rect list line {}: class id must be in 1..=255", n + 1))?;
        let rect = Rect::new(x, y, w, h);
        match classes.iter_mut().find(|c| c.class_id == class) {
            Some(c) => c.rects.push(rect),
            None => classes.push(TrainingClass::new(class, format!("class{class}"), vec![rect])),
        }
    }
    if classes.is_empty() {
        bail!("rect list is empty");
    }
    classes.sort_by_key(|c| c.class_id);
    Ok(classes)
}

fn read_rects(path: &Path) -> Result<Vec<TrainingClass>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_rects(&text).with_context(|| path.display().to_string())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth(recipe: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut recipe = Recipe::load(recipe)?;
    if let Some(seed) = seed {
        recipe = recipe.with_seed(seed);
    }
    let mosaic = recipe.generate()?;
    save_pgm(&mosaic.raster, with_suffix(out, ".pgm"))?;
    save_mask(&mosaic.mask, with_suffix(out, "_mask.pgm"))?;
    let mut rects = String::new();
    for class in &mosaic.training {
        for r in &class.rects {
            rects.push_str(&format!("{} {} {} {} {}\n", class.class_id, r.x, r.y, r.w, r.h));
        }
    }
    write_text(&with_suffix(out, "_train.txt"), &rects)
}

fn train(args: &TrainArgs) -> Result<()> {
    let raster = args.image.load()?;
    let classes = match (&args.rects, &args.mask) {
        (Some(rects), _) => read_rects(rects)?,
        (None, Some(mask)) => {
            let mask = load_mask(mask)?;
            if (mask.width(), mask.height()) != (raster.width(), raster.height()) {
                bail!(
                    "training mask is {}x{}, image is {}x{}",
                    mask.width(),
                    mask.height(),
                    raster.width(),
                    raster.height()
                );
            }
            training_from_mask(&mask)
        }
        (None, None) => bail!("either --rects or --mask is required"),
    };
    if args.td.eq_ignore_ascii_case("glcm") {
        let params = GlcmParams {
            window: args.window.unwrap_or(DEFAULT_GLCM_WINDOW),
            levels: args.levels,
            distances: if args.distances.is_empty() {
                GlcmParams::default().distances
            } else {
                args.distances.clone()
            },
        };
        let model = train_glcm(&raster, &classes, &params)?;
        return write_text(&args.out, &model.to_toml_string()?);
    }
    let kind: DescriptorKind = args.td.parse()?;
    let scales = if args.scales.is_empty() {
        vec![Scale::new(8, 1)]
    } else {
        args.scales.clone()
    };
    let mut config = DescriptorConfig::new(kind, scales)?;
    config.var_bins = args.var_bins;
    config.validate()?;
    let models = train_model_set(&raster, &classes, &config, args.window.unwrap_or(DEFAULT_WINDOW))?;
    save_model(&args.out, &models)?;
    Ok(())
}

fn dump_codes(raster: &Raster, config: &DescriptorConfig, prefix: &Path) -> Result<()> {
    for (n, plane) in code_planes(raster, config)?.iter().enumerate() {
        if plane.bin_count() >= usize::from(u16::MAX) {
            bail!("code plane {n} has {} bins, too many for a 16-bit PGM", plane.bin_count());
        }
        let pixels = plane
            .codes()
            .iter()
            .map(|&c| if c == INVALID_CODE { 0 } else { c as u16 + 1 })
            .collect();
        let image = Raster::new(plane.width(), plane.height(), 16, pixels)?;
        save_pgm(&image, with_suffix(prefix, &format!("_{n}.pgm")))?;
    }
    Ok(())
}

fn classify(args: &ClassifyArgs) -> Result<()> {
    let raster = args.image.load()?;
    let model = load_any_model(&args.model)?;
    let mask = match &model {
        AnyModel::Histogram(models) => {
            if let Some(prefix) = &args.dump_codes {
                dump_codes(&raster, models.config(), prefix)?;
            }
            let strategy = if args.naive { Strategy::Naive } else { Strategy::Fast };
            classify_image(&raster, models, strategy, args.workers)?
        }
        AnyModel::Glcm(model) => {
            if args.dump_codes.is_some() {
                bail!("--dump-codes needs a histogram model");
            }
            classify_glcm(&raster, model, args.workers)?
        }
    };
    save_mask(&mask, &args.out)?;
    Ok(())
}

fn eval(
    predicted: &Path,
    reference: &Path,
    exclude: Option<&Path>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<()> {
    let predicted = load_mask(predicted)?;
    let reference = load_mask(reference)?;
    let exclude: Vec<Rect> = match exclude {
        Some(path) => read_rects(path)?
            .into_iter()
            .flat_map(|c| c.rects)
            .collect(),
        None => Vec::new(),
    };
    let report = assess(&predicted, &reference, &exclude)?;
    match out {
        Some(path) => write_text(path, &report.to_text())?,
        None => print!("{}", report.to_text()),
    }
    if let Some(path) = csv {
        write_text(path, &report.to_csv())?;
    }
    Ok(())
}

fn bench(plan: &Path, out: &Path) -> Result<()> {
    let plan = Plan::load(plan)?;
    let rows = run_benchmark(&plan)?;
    write_text(out, &report_csv(&rows))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { recipe, out, seed } => synth(&recipe, &out, seed),
        Command::Train(args) => train(&args),
        Command::Classify(args) => classify(&args),
        Command::Eval {
            predicted,
            reference,
            exclude,
            out,
            csv,
        } => eval(
            &predicted,
            &reference,
            exclude.as_deref(),
            out.as_deref(),
            csv.as_deref(),
        ),
        Command::Bench { plan, out } => bench(&plan, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_lists() {
        let c = parse_rects("# comment\n1 0 0 4 4\n2 4 0 4 4\n1 0 4 4 4 # trailing\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].rects.len(), 2);
        assert!(parse_rects("1 2 3").is_err());
        assert!(parse_rects("0 1 1 1 1").is_err());
        assert!(parse_rects("a b c d e").is_err());
        assert!(parse_rects("\n").is_err());
    }
}
