use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccmol::driver::{
    write_channel_dump, write_initial_scan_csv, write_pathways_csv, write_scan_csv, write_smatrix_dump,
};
use ccmol::{Engine, RunConfig, ScanResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ccmol", version, about = "Coupled-channel diatom-diatom scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for output files; overrides `output.directory` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress and per-block diagnostics.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct Point {
    /// Initial CMS label, e.g. "(1002)" or "[10;02]"; defaults to the first
    /// entry of `scattering.initial`.
    #[arg(long)]
    initial: Option<String>,
    /// Collision energy in K; defaults to the lowest configured energy.
    #[arg(long)]
    energy: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cross sections and rates for every initial CMS and energy.
    Scan { config: PathBuf },
    /// Final-state distribution out of one initial CMS at one energy.
    Distribution {
        config: PathBuf,
        #[command(flatten)]
        point: Point,
    },
    /// Rotational and vibrational pathways into one final CMS
    /// (distinguishable mode).
    Decompose {
        config: PathBuf,
        #[command(flatten)]
        point: Point,
        /// Unordered final CMS, e.g. "(1200)".
        #[arg(long = "final")]
        target: String,
    },
    /// Total inelastic cross section for every CMS in `scattering.initial`.
    InitialScan {
        config: PathBuf,
        /// Collision energy in K; defaults to the lowest configured energy.
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Channel tables of every (J, parity) block.
    DumpChannels {
        config: PathBuf,
        #[arg(long)]
        initial: Option<String>,
    },
    /// S matrices of every block at one energy.
    DumpSmatrix {
        config: PathBuf,
        #[command(flatten)]
        point: Point,
    },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::Scan { config }
            | Command::Distribution { config, .. }
            | Command::Decompose { config, .. }
            | Command::InitialScan { config, .. }
            | Command::DumpChannels { config, .. }
            | Command::DumpSmatrix { config, .. } => config,
        }
    }
}

enum Outcome {
    Clean,
    Incomplete,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Incomplete) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> ccmol::Result<Outcome> {
    let config = RunConfig::from_file(cli.command.config())?;
    let out_dir = cli
        .output_dir
        .clone()
        .or_else(|| config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let engine = Engine::new(config.clone())?;
    let lowest_energy = || config.energies_kelvin()[0];
    let initial = |label: &Option<String>| -> ccmol::Result<ccmol::Cms> {
        match label {
            Some(l) => engine.cms(l),
            None => engine.cms(&config.scattering.initial[0]),
        }
    };

    match &cli.command {
        Command::Scan { .. } => {
            let energies = config.energies_kelvin();
            let points: Vec<_> =
                engine.initial_states()?.into_iter().flat_map(|i| energies.iter().map(move |&e| (i, e))).collect();
            log::info!("{} points", points.len());
            let scan = engine.run_points(&points, &engine.grid);
            let path = out_dir.join("scan.csv");
            write_file(&path, |w| write_scan_csv(w, &engine, &scan, "scan"))?;
            Ok(report(&path, &scan))
        }
        Command::Distribution { point, .. } => {
            let i = initial(&point.initial)?;
            let e = point.energy.unwrap_or_else(lowest_energy);
            let scan = engine.run_points(&[(i, e)], &engine.grid);
            let path = out_dir.join("distribution.csv");
            write_file(&path, |w| write_scan_csv(w, &engine, &scan, "distribution"))?;
            Ok(report(&path, &scan))
        }
        Command::Decompose { point, target, .. } => {
            let label = point.initial.clone().unwrap_or_else(|| config.scattering.initial[0].clone());
            let e = point.energy.unwrap_or_else(lowest_energy);
            let pathways = ccmol::distinguishable_decomposition(&config, &label, target, e)?;
            let path = out_dir.join("decompose.csv");
            write_file(&path, |w| write_pathways_csv(w, &engine, &pathways))?;
            println!(
                "{}: rotational {:.6e} A^2, vibrational {:.6e} A^2",
                path.display(),
                pathways.sigma_rotational,
                pathways.sigma_vibrational
            );
            Ok(Outcome::Clean)
        }
        Command::InitialScan { energy, .. } => {
            let e = energy.unwrap_or_else(lowest_energy);
            let rows = ccmol::initial_cms_scan(&config, &config.scattering.initial, e)?;
            let path = out_dir.join("initial_scan.csv");
            write_file(&path, |w| write_initial_scan_csv(w, &engine, e, &rows))?;
            println!("{}: {} rows", path.display(), rows.len());
            Ok(Outcome::Clean)
        }
        Command::DumpChannels { initial: label, .. } => {
            let i = initial(label)?;
            let path = out_dir.join("channels.csv");
            write_file(&path, |w| write_channel_dump(w, &engine, &i))?;
            println!("{}", path.display());
            Ok(Outcome::Clean)
        }
        Command::DumpSmatrix { point, .. } => {
            let i = initial(&point.initial)?;
            let e = point.energy.unwrap_or_else(lowest_energy);
            let path = out_dir.join("smatrix.txt");
            write_file(&path, |w| write_smatrix_dump(w, &engine, &i, e))?;
            println!("{}", path.display());
            Ok(Outcome::Clean)
        }
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> ccmol::Result<()>) -> ccmol::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn report(path: &Path, scan: &ScanResult) -> Outcome {
    println!("{}: {} points, {} failed, {} warnings", path.display(), scan.results.len(), scan.failures.len(), scan.warnings.len());
    for f in &scan.failures {
        eprintln!("failed: {} at {:e} K: {}", f.initial.label(), f.e_kelvin, f.message);
    }
    for w in &scan.warnings {
        eprintln!("warning: {w}");
    }
    if scan.is_clean() {
        Outcome::Clean
    } else {
        Outcome::Incomplete
    }
}
