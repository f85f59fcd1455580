//! Command-line front end for the `qmv` binary.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analytic::{ApproxOrder, Evaluator};
use crate::encoding::{spectrum_enumerate, QuditLayout};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, DEFAULT_ENTRY_BOUND};
use crate::optimize::{fmt, ratio_report_from_curve, sweep_gamma, write_minima_csv, write_sweep_csv, DEFAULT_GRID_SIZE};
use crate::simulator::{build_state, expectation_hp, oracle_mu_curve, sample_bitstrings, AngleParams, DEFAULT_QUBIT_GUARD};
use crate::stats::{
    default_output_dir, ensemble_run, lattice_id, read_manifest, write_outputs, write_summary, EnsembleConfig,
    ORACLE_TOLERANCE,
};

#[derive(Debug, Parser)]
#[command(name = "qmv", version, about = "Depth-1 QAOA mean values for lattice SVP Hamiltonians")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate seeded random lattices as JSON files.
    Gen(GenArgs),
    /// Sweep mu and mu_A over a uniform gamma grid.
    Sweep(SweepArgs),
    /// Locate gamma_opt and gamma_A and report the ratios.
    Optimize(OptimizeArgs),
    /// Run the full ensemble and write the figure-data bundle.
    Reproduce(ReproduceArgs),
    /// Enumerate every basis state with its coefficients and energy.
    Spectrum(SpectrumArgs),
    /// Draw bitstrings from the QAOA state.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Lattice JSON file; when absent a lattice is generated from the flags below.
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ENTRY_BOUND)]
    pub entry_bound: u32,
}

impl LatticeArgs {
    fn resolve(&self) -> Result<Lattice> {
        match &self.lattice {
            Some(path) => Lattice::load(path),
            None => {
                check_dim(self.dim)?;
                Lattice::generate(self.dim, self.entry_bound, self.seed)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Lattice `n` uses seed `seed + n`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ENTRY_BOUND)]
    pub entry_bound: u32,
    /// Output directory (default: $QMV_OUT_DIR or ./qmv-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Approximation orders, comma separated (default: 1, 2, 3, ceil(m/2), m).
    #[arg(long, value_delimiter = ',')]
    pub approx: Option<Vec<usize>>,
    /// Add a statevector cross-check column.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = DEFAULT_QUBIT_GUARD)]
    pub max_qubits: usize,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Number of generated lattices (seeds `seed`, `seed + 1`, ...); ignored with `--lattice`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    #[arg(long, value_delimiter = ',')]
    pub approx: Option<Vec<usize>>,
    /// Keep raw grid minimizers without golden-section refinement.
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Replay the configuration recorded in a previous manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Qudit sizes: a range `1..7` (inclusive) or a list `5,6,7`.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub approx: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub entry_bound: Option<u32>,
    #[arg(long)]
    pub no_refine: bool,
    /// Cross-check every curve against the statevector simulator.
    #[arg(long)]
    pub oracle_validate: bool,
    #[arg(long)]
    pub max_qubits: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_QUBIT_GUARD)]
    pub max_qubits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Problem angle; defaults to the optimized gamma_opt.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_QUBIT_GUARD)]
    pub max_qubits: usize,
    /// Write the raw amplitudes to this file.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("--dim must be >= 1".into()));
    }
    Ok(())
}

fn orders(layout: &QuditLayout, approx: &Option<Vec<usize>>) -> Result<Vec<ApproxOrder>> {
    let config = EnsembleConfig {
        orders: approx.clone(),
        ..EnsembleConfig::default()
    };
    config.orders_for(layout)
}

/// Parses `1..7`, `1..=7` (both inclusive) or `5,6,7`.
pub fn parse_ks(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("cannot parse k list {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let ks: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if ks.is_empty() {
        return Err(bad());
    }
    Ok(ks)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(io::BufWriter::new(fs::File::create(p)?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    check_dim(args.dim)?;
    if args.count == 0 {
        return Err(Error::InvalidArgument("--count must be >= 1".into()));
    }
    let dir = args.out.clone().unwrap_or_else(default_output_dir);
    fs::create_dir_all(&dir)?;
    for n in 0..args.count {
        let lattice = Lattice::generate(args.dim, args.entry_bound, args.seed.wrapping_add(n as u64))?;
        let path = dir.join(format!("{}.json", lattice_id(n)));
        lattice.save(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let lattice = args.lattice.resolve()?;
    let layout = QuditLayout::new(lattice.gram.dim(), args.k)?;
    let orders = orders(&layout, &args.approx)?;
    let evaluator = Evaluator::new(&lattice.gram, &layout)?;
    let curve = sweep_gamma(&evaluator, "L000", args.grid, &orders)?;
    let oracle = if args.oracle {
        Some(oracle_mu_curve(&lattice.gram, &layout, &curve.gammas, args.max_qubits)?)
    } else {
        None
    };
    write_sweep_csv(open_output(&args.out)?, &curve, oracle.as_deref())?;
    if let Some(oracle) = &oracle {
        let worst = curve
            .mu
            .iter()
            .zip(oracle)
            .map(|(m, o)| (m - o).abs() / m.abs().max(1.0))
            .fold(0.0, f64::max);
        if worst > ORACLE_TOLERANCE {
            return Err(Error::CheckFailed(format!(
                "oracle relative error {worst:e} exceeds {ORACLE_TOLERANCE:e}"
            )));
        }
    }
    Ok(())
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<()> {
    let lattices: Vec<(String, Lattice)> = match &args.lattice.lattice {
        Some(_) => vec![("L000".into(), args.lattice.resolve()?)],
        None => {
            check_dim(args.lattice.dim)?;
            if args.count == 0 {
                return Err(Error::InvalidArgument("--count must be >= 1".into()));
            }
            (0..args.count)
                .map(|n| {
                    let seed = args.lattice.seed.wrapping_add(n as u64);
                    Ok((lattice_id(n), Lattice::generate(args.lattice.dim, args.lattice.entry_bound, seed)?))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut reports = Vec::with_capacity(lattices.len());
    for (id, lattice) in &lattices {
        let layout = QuditLayout::new(lattice.gram.dim(), args.k)?;
        let orders = orders(&layout, &args.approx)?;
        let evaluator = Evaluator::new(&lattice.gram, &layout)?;
        let curve = sweep_gamma(&evaluator, id, args.grid, &orders)?;
        reports.push(ratio_report_from_curve(&evaluator, &curve, !args.no_refine)?);
    }
    write_minima_csv(open_output(&args.out)?, &reports)
}

/// The ensemble configuration selected by the flags (or the replayed manifest).
pub fn reproduce_config(args: &ReproduceArgs) -> Result<EnsembleConfig> {
    let mut config = match &args.manifest {
        Some(path) => return Ok(read_manifest(path)?.config),
        None => EnsembleConfig::default(),
    };
    if let Some(n) = args.count {
        config.num_lattices = n;
    }
    if let Some(d) = args.dim {
        check_dim(d)?;
        config.dim = d;
    }
    if let Some(k) = &args.k {
        config.ks = parse_ks(k)?;
    }
    if let Some(g) = args.grid {
        config.grid_size = g;
    }
    if args.approx.is_some() {
        config.orders = args.approx.clone();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(b) = args.entry_bound {
        config.entry_bound = b;
    }
    if let Some(q) = args.max_qubits {
        config.qubit_guard = q;
    }
    config.refine = !args.no_refine;
    config.oracle_validate = args.oracle_validate;
    Ok(config)
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<()> {
    let config = reproduce_config(args)?;
    let stats = ensemble_run(&config)?;
    let dir = args.out.clone().unwrap_or_else(default_output_dir);
    write_outputs(&stats, &dir)?;
    write_summary(io::stdout().lock(), &stats)?;
    for run in &stats.runs {
        if let Some(err) = run.oracle_max_rel_err {
            if err > ORACLE_TOLERANCE {
                return Err(Error::CheckFailed(format!(
                    "k={}: oracle relative error {err:e} exceeds {ORACLE_TOLERANCE:e}",
                    run.k
                )));
            }
        }
    }
    Ok(())
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<()> {
    let lattice = args.lattice.resolve()?;
    let layout = QuditLayout::new(lattice.gram.dim(), args.k)?;
    let entries = spectrum_enumerate(&lattice.gram, &layout, args.max_qubits)?;
    let mut w = csv::Writer::from_writer(open_output(&args.out)?);
    let mut header = vec!["bits".to_string()];
    header.extend((1..=layout.num_qudits()).map(|i| format!("x{i}")));
    header.push("energy".into());
    w.write_record(&header)?;
    for e in &entries {
        let mut row = vec![bit_string(&layout.index_to_bits(e.index))];
        row.extend(e.x.iter().map(i64::to_string));
        row.push(fmt(e.energy));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let lattice = args.lattice.resolve()?;
    let layout = QuditLayout::new(lattice.gram.dim(), args.k)?;
    let gamma = match args.gamma {
        Some(g) => g,
        None => {
            let evaluator = Evaluator::new(&lattice.gram, &layout)?;
            let curve = sweep_gamma(&evaluator, "L000", args.grid, &[])?;
            ratio_report_from_curve(&evaluator, &curve, true)?.gamma_opt
        }
    };
    let angles = AngleParams { beta: args.beta, gamma };
    let state = build_state(&lattice.gram, &layout, angles, args.max_qubits)?;
    if let Some(path) = &args.dump_state {
        state.dump(path)?;
    }
    let samples = sample_bitstrings(&state, &lattice.gram, args.count, args.sample_seed)?;
    let exact = expectation_hp(&state, &lattice.gram, &layout)?;
    let mean = samples.iter().map(|s| s.energy).sum::<f64>() / samples.len() as f64;
    eprintln!("gamma={} beta={} exact_mean={} sample_mean={}", fmt(gamma), fmt(args.beta), fmt(exact), fmt(mean));

    let mut w = csv::Writer::from_writer(open_output(&args.out)?);
    let mut header = vec!["bits".to_string()];
    header.extend((1..=layout.num_qudits()).map(|i| format!("x{i}")));
    header.push("energy".into());
    w.write_record(&header)?;
    for s in &samples {
        let mut row = vec![bit_string(&s.bits)];
        row.extend(s.x.iter().map(i64::to_string));
        row.push(fmt(s.energy));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let run = || match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Sample(a) => cmd_sample(a),
    };
    match cli.jobs {
        Some(0) => Err(Error::InvalidArgument("--jobs must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// One-line JSON error summary written to standard error on failure.
pub fn error_summary(err: &Error) -> String {
    serde_json::json!({ "error": err.kind(), "message": err.to_string() }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
/// Usage errors exit with 2, failed runs and checks with 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_summary(&err));
            match err {
                Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}
