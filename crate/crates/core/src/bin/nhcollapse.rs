use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nhcollapse::harness::{self, parse_grid, preset, RunConfig, SweepParam, SweepPlan};
use nhcollapse::Result;

#[derive(Parser)]
#[command(name = "nhcollapse", version, about = "Spin wavepacket collapse on non-Hermitian lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Run config (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: fig2, fig3, fig4, hermitian.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p),
            (None, Some(name)) => preset(name),
            (None, None) => Err(nhcollapse::Error::Config("one of --config or --preset is required".into())),
        }
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        harness::resolve_out_dir(cfg, self.out.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Simulate(Source),
    /// Sweep G or z over a grid.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// G or z; defaults to the config's [sweep] section.
        #[arg(long)]
        param: Option<SweepParam>,
        /// a:b:n
        #[arg(long)]
        grid: Option<String>,
        /// Worker count, 0 for all cores.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Max imaginary eigenvalue against G on the spectrum lattice.
    Spectrum {
        #[command(flatten)]
        source: Source,
        /// a:b:n, or comma-separated values.
        #[arg(long)]
        g_grid: Option<String>,
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
    },
    /// Logistic fit of a trajectory CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gamma0_ev: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Write the operator as `row col re im` triplets.
    DumpOperator {
        #[command(flatten)]
        source: Source,
    },
    /// Print a preset config.
    Preset { name: Option<String> },
}

fn values(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        return parse_grid(text);
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| nhcollapse::Error::Config(format!("bad grid value {v:?}")))
        })
        .collect()
}

fn simulate(source: &Source) -> Result<ExitCode> {
    let cfg = source.load()?;
    let dir = source.out_dir(&cfg);
    let out = harness::run_simulation(&cfg, &dir)?;
    println!("{}", serde_json::to_string_pretty(&out.report)?);
    eprintln!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn sweep(source: &Source, param: Option<SweepParam>, grid: Option<&str>, parallelism: Option<usize>) -> Result<ExitCode> {
    let cfg = source.load()?;
    let dir = source.out_dir(&cfg);
    let mut plan = match &cfg.sweep {
        Some(_) => SweepPlan::from_config(&cfg)?,
        None => SweepPlan {
            base: cfg.clone(),
            param: SweepParam::G,
            values: Vec::new(),
            parallelism: 0,
        },
    };
    if let Some(p) = param {
        plan.param = p;
    }
    if let Some(g) = grid {
        plan.values = values(g)?;
    }
    if let Some(n) = parallelism {
        plan.parallelism = n;
    }
    let outcome = harness::run_sweep_to(&plan, &dir)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    eprintln!("wrote {}", dir.display());
    Ok(if outcome.all_failed() {
        ExitCode::from(2)
    } else if outcome.any_failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn spectrum(source: &Source, g_grid: Option<&str>, parallelism: usize) -> Result<ExitCode> {
    let cfg = source.load()?;
    let dir = source.out_dir(&cfg);
    let grid = g_grid.map(values).transpose()?;
    let res = harness::run_spectrum_to(&cfg, grid.as_deref(), parallelism, &dir)?;
    for r in &res {
        println!("{}\t{}", r.g, r.max_imag);
    }
    eprintln!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn fit(input: &Path, out: Option<&Path>, gamma0_ev: Option<f64>, threshold: Option<f64>) -> Result<ExitCode> {
    let report = harness::fit_file(input, gamma0_ev, threshold)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        harness::output::write_json(&dir.join("fit.json"), &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn dump(source: &Source) -> Result<ExitCode> {
    let cfg = source.load()?;
    let h = harness::run::hamiltonian_for(&cfg)?;
    let dir = source.out_dir(&cfg);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("operator.txt");
    h.write_triplets(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(s) => simulate(s),
        Command::Sweep {
            source,
            param,
            grid,
            parallelism,
        } => sweep(source, *param, grid.as_deref(), *parallelism),
        Command::Spectrum {
            source,
            g_grid,
            parallelism,
        } => spectrum(source, g_grid.as_deref(), *parallelism),
        Command::Fit {
            input,
            out,
            gamma0_ev,
            threshold,
        } => fit(input, out.as_deref(), *gamma0_ev, *threshold),
        Command::DumpOperator { source } => dump(source),
        Command::Preset { name: None } => {
            harness::preset_names().for_each(|n| println!("{n}"));
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name: Some(n) } => match harness::presets::preset_toml(n) {
            Some(t) => {
                print!("{t}");
                Ok(ExitCode::SUCCESS)
            }
            None => preset(n).map(|_| ExitCode::SUCCESS),
        },
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
