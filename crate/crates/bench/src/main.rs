use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};
use tam_bench::plot::plot_svg;
use tam_bench::report::{read_csv, write_csv};
use tam_bench::sweep::{run_sweep_with, Variant, VariantKind, WORKERS_ENV};
use tam_bench::{checks, Config};
use tam_core::algorithms::{greedy, hardness_demo, ranking, test_and_match, Decision, Instance};
use tam_core::instances::{
    corrupt_advice, gen_hard_instance, parse_histogram, random_order, write_histogram, CorruptionKind,
    CorruptionSpec, Gadget, HardInstanceParams,
};
use tam_core::rng::{stream_rng, Stream};
use tam_core::TypeHistogram;

#[derive(Parser)]
#[command(name = "tam", version, about = "Test-and-match benchmark driver")]
#[command(after_help = format!("Environment:\n  {WORKERS_ENV}  worker threads for sweeps (default: all cores)"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a hard instance, its corrupted advice and an arrival order.
    Generate {
        #[command(flatten)]
        cell: CellArgs,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one variant on one instance and print the outcome.
    Run {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value = "TaM-all")]
        variant: String,
        /// True histogram file; replaces the generated hard instance.
        #[arg(long, requires = "advice")]
        truth: Option<PathBuf>,
        /// Advice histogram file.
        #[arg(long, requires = "truth")]
        advice: Option<PathBuf>,
        /// Algorithm parameters are read from this sweep config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the full grid and write one CSV row per (cell, variant).
    Sweep {
        #[arg(long, required_unless_present = "print_config")]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Add an instance-hash column.
        #[arg(long)]
        verbose: bool,
        /// Print the effective configuration (defaults if no file) and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Draw one SVG per corruption kind from a sweep CSV.
    Plot {
        csv: PathBuf,
        /// Defaults to the CSV's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Mimic on the two-gadget family with correct and with swapped advice.
    DemoHardness {
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Run the invariant suite.
    Selftest,
}

#[derive(Args)]
struct CellArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// `add` or `replace`.
    #[arg(long, default_value = "add")]
    kind: CorruptionKind,
}

impl CellArgs {
    fn histograms(&self) -> anyhow::Result<(TypeHistogram, TypeHistogram)> {
        let truth = gen_hard_instance(&HardInstanceParams::new(self.n, self.seed))?;
        let advice = corrupt_advice(&truth, &CorruptionSpec::new(self.alpha, self.kind, self.n, self.seed))?;
        Ok((truth, advice))
    }
}

fn read_histogram(path: &Path) -> anyhow::Result<TypeHistogram> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    parse_histogram(&text).with_context(|| path.display().to_string())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate(cell: &CellArgs, out: &Path) -> anyhow::Result<()> {
    let (truth, advice) = cell.histograms()?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let order = random_order(cell.n, &mut stream_rng(cell.seed, Stream::Arrival));
    let order: String = order.iter().map(|v| format!("{v}\n")).collect();
    write_file(&out.join("truth.txt"), write_histogram(&truth))?;
    write_file(&out.join("advice.txt"), write_histogram(&advice))?;
    write_file(&out.join("order.txt"), order)?;
    println!("wrote truth.txt, advice.txt, order.txt to {}", out.display());
    Ok(())
}

fn run(
    cell: &CellArgs,
    variant: &str,
    files: Option<(&Path, &Path)>,
    config: Option<&Path>,
) -> anyhow::Result<()> {
    let variant = Variant::by_name(variant)?;
    let config = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    config.to_spec()?;
    let (truth, advice) = match files {
        Some((t, a)) => (read_histogram(t)?, read_histogram(a)?),
        None => cell.histograms()?,
    };
    let n = truth.n();
    let instance = Instance::from_histogram(&truth);
    let order = random_order(n, &mut stream_rng(cell.seed, Stream::Arrival));
    println!("variant: {}", variant.name);
    println!("n: {n}");
    println!("n_star: {}", instance.n_star());
    let m = match variant.kind {
        VariantKind::Ranking => ranking(instance.graph(), &order, &mut stream_rng(cell.seed, Stream::Baseline))?.size(),
        VariantKind::Greedy => greedy(instance.graph(), &order)?.size(),
        VariantKind::Tam(flags) => {
            let out = test_and_match(&instance, &order, &advice, flags, &config.params(), cell.seed)?;
            println!("n_hat: {}", out.n_hat);
            match &out.decision {
                Decision::BaselineOnly(why) => println!("decision: baseline only ({why:?})"),
                Decision::Tested(r) => {
                    println!("decision: {:?}{}", r.verdict, r.reason.map_or(String::new(), |x| format!(" ({x:?})")));
                    println!("l1_hat: {}", r.l1_hat.map_or("-".to_string(), |x| format!("{x:.6}")));
                    println!("samples: {}", r.samples);
                    println!("k_consumed: {}", r.consumed);
                }
            }
            if let Some(b) = &out.budget {
                println!("test_labels: {}", out.test_labels);
                println!("budget: s={} cap={} epsilon={:.6} tau={:.6} delta_poi={:.3e}", b.s, b.cap, b.epsilon, b.tau, b.delta_poi);
            }
            if let Some(sw) = &out.switch {
                println!("switch: after {} arrivals with {} matched", sw.arrivals, sw.matched);
            }
            out.m()
        }
    };
    println!("m: {m}");
    println!("ratio: {:.6}", m as f64 / instance.n_star() as f64);
    Ok(())
}

fn sweep(config: Option<&Path>, out: &Path, verbose: bool, print_config: bool) -> anyhow::Result<()> {
    let config = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let spec = config.to_spec()?;
    let start = std::time::Instant::now();
    let rows = run_sweep_with(&spec, verbose)?;
    write_csv(out, &rows, verbose)?;
    let errors = rows.iter().filter(|r| r.is_error()).count();
    eprintln!(
        "{} rows ({} cells x {} variants, {errors} errors) in {:.1} s -> {}",
        rows.len(),
        spec.cells(),
        spec.variants.len(),
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn plot(csv: &Path, out_dir: Option<&Path>) -> anyhow::Result<()> {
    let rows = read_csv(csv)?;
    if rows.is_empty() {
        bail!("{}: no rows to plot", csv.display());
    }
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&dir).ok();
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    for kind in [CorruptionKind::AddUnion, CorruptionKind::Replace] {
        if rows.iter().all(|r| r.kind != kind) {
            continue;
        }
        let svg = plot_svg(&rows, kind, &Variant::DEFAULT_NAMES)?;
        let path = dir.join(format!("{stem}_{}.svg", kind.name()));
        write_file(&path, svg)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn demo_hardness(n: usize) -> anyhow::Result<()> {
    let right = hardness_demo(n, Gadget::First, Gadget::First)?;
    let wrong = hardness_demo(n, Gadget::First, Gadget::Second)?;
    println!("correct advice: {right:.6}");
    println!("wrong advice: {wrong:.6}");
    Ok(())
}

fn selftest() -> anyhow::Result<bool> {
    let results = checks::run_all();
    for c in &results {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(results.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Generate { cell, out } => generate(cell, out).map(|_| true),
        Command::Run { cell, variant, truth, advice, config } => {
            let files = truth.as_deref().zip(advice.as_deref());
            run(cell, variant, files, config.as_deref()).map(|_| true)
        }
        Command::Sweep { config, out, verbose, print_config } => {
            sweep(config.as_deref(), out, *verbose, *print_config).map(|_| true)
        }
        Command::Plot { csv, out_dir } => plot(csv, out_dir.as_deref()).map(|_| true),
        Command::DemoHardness { n } => demo_hardness(*n).map(|_| true),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
