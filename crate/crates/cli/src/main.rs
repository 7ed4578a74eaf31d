use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exner_cli::{parse_config, CliError, RunConfig};
use exner_core::harness::{self, ExperimentSpec};

#[derive(Parser)]
#[command(name = "exner", version, about = "Saint-Venant-Exner experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and dump the final fields.
    Run(RunArgs),
    /// Self-convergence study of z_b for a 1D experiment.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated grid sizes, each twice the previous.
        #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
        grids: Vec<usize>,
        /// Grid runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the built-in experiment presets.
    ListExperiments,
    /// Measure the spread half-angle of a 2D dump.
    AnalyzeAngle {
        dump: PathBuf,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        #[arg(long, default_value_t = 8)]
        level_index: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (key = value or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    exp: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    cfl_kind: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, env = "EXNER_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Extra `key=value` overrides.
    #[arg(long = "set")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut overrides = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push(format!("{k}={v}"));
            }
        };
        push("experiment", self.exp.clone());
        push("solver", self.solver.clone());
        push("N", self.n.map(|v| v.to_string()));
        push("cfl_kind", self.cfl_kind.clone());
        push("cfl", self.cfl.map(|v| v.to_string()));
        push("t_end", self.t_end.map(|v| v.to_string()));
        overrides.extend(self.set.iter().cloned());
        parse_config(self.config.as_deref(), &overrides, &self.out)
    }
}

fn stem(spec: &ExperimentSpec) -> String {
    format!("{}_{}_N{}", spec.name, spec.solver, spec.n)
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = &cfg.spec;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(format!("{}.txt", stem(spec)));
    let verbose = cfg.verbosity > 0;
    if spec.solver.is_2d() {
        let grid = spec.grid_2d()?;
        let every = spec.output_every;
        let mut k = 0;
        let result = harness::run_2d_observed(spec, |t, s| {
            k += 1;
            if verbose && k % 100 == 0 {
                eprintln!("step {k} t={t:.4}");
            }
            if every > 0 && k % every == 0 {
                let p = cfg.out_dir.join(format!("{}_step{k}.txt", stem(spec)));
                if let Ok(f) = File::create(p) {
                    let _ = harness::write_dump_2d(BufWriter::new(f), t, &grid, s);
                }
            }
        })?;
        harness::write_dump_2d(BufWriter::new(File::create(&path)?), spec.t_end, &grid, &result.state)?;
        println!(
            "{} solver={} N={}x{} steps={} cg_iterations={} wallclock_s={:.3} dump={}",
            spec.name, spec.solver, spec.n, spec.ny, result.steps, result.cg_iterations, result.wallclock_s, path.display()
        );
    } else {
        let grid = spec.grid_1d()?;
        let every = spec.output_every;
        let mut k = 0;
        let result = harness::run_1d_observed(spec, |t, s| {
            k += 1;
            if verbose && k % 10_000 == 0 {
                eprintln!("step {k} t={t:.4}");
            }
            if every > 0 && k % every == 0 {
                let p = cfg.out_dir.join(format!("{}_step{k}.txt", stem(spec)));
                if let Ok(f) = File::create(p) {
                    let _ = harness::write_dump_1d(BufWriter::new(f), t, &grid, s);
                }
            }
        })?;
        harness::write_dump_1d(BufWriter::new(File::create(&path)?), spec.t_end, &grid, &result.state)?;
        println!(
            "{} solver={} N={} steps={} wallclock_s={:.3} dump={}",
            spec.name, spec.solver, spec.n, result.steps, result.wallclock_s, path.display()
        );
    }
    Ok(())
}

fn converge(cfg: &RunConfig, grids: &[usize], jobs: usize) -> Result<(), CliError> {
    if cfg.spec.solver.is_2d() {
        return Err(CliError::Usage("convergence studies are 1D only".into()));
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(&cfg.out_dir)?;
    if cfg.verbosity > 0 {
        eprintln!("converge {} {} grids={grids:?} jobs={jobs}", cfg.spec.name, cfg.spec.solver);
    }
    let report = harness::run_convergence_study_jobs(&cfg.spec, grids, jobs)?;
    let csv = report.to_csv();
    let path = cfg.out_dir.join(format!("converge_{}_{}.csv", cfg.spec.name, cfg.spec.solver));
    fs::write(&path, &csv)?;
    print!("{csv}");
    if cfg.verbosity > 0 {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn list() {
    println!("name,solver,N,Ny,cfl,cfl_kind,t_end");
    for s in ExperimentSpec::presets() {
        println!("{},{},{},{},{},{},{}", s.name, s.solver, s.n, s.ny, s.cfl, s.cfl_kind, s.t_end);
    }
}

fn analyze(dump: &Path, levels: usize, level_index: usize) -> Result<(), CliError> {
    let file = File::open(dump).map_err(|e| CliError::Config(format!("cannot open {}: {e}", dump.display())))?;
    let d = harness::read_dump_2d(std::io::BufReader::new(file))?;
    let angle = harness::measure_spread_angle(&d.state.z_b, &d.grid, levels, level_index)?;
    println!("{angle:.4}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => args.config().and_then(|c| run(&c)),
        Command::Converge { run, grids, jobs } => run.config().and_then(|c| converge(&c, &grids, jobs)),
        Command::ListExperiments => {
            list();
            Ok(())
        }
        Command::AnalyzeAngle { dump, levels, level_index } => analyze(&dump, levels, level_index),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
