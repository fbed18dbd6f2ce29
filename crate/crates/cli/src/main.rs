//! `vorperc`: sample, analyse, sweep and draw Voronoi percolations on flat
//! tori. Exit codes: 0 success, 2 invalid input, 3 runtime failure.

mod config;
mod render;

use clap::{Args, Parser, Subcommand};
use config::Settings;
use serde_json::json;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;
use vorperc_core::field::is_prime;
use vorperc_core::stability::{allocation_scheme, coarse_state, stable_certificate};
use vorperc_core::{
    build_delaunay, events, instability_report, run_sweep, sample_poisson, PointConfiguration,
    StabilityConfig, SweepConfig, TorusDomain,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn invalid(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

fn failed(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "vorperc", version, about = "Voronoi percolation on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a marked Poisson configuration (config.txt).
    Sample(Common),
    /// Induced maps and events for one configuration (homology.json).
    Homology(Common),
    /// Instability report, coarse state, allocation scheme and stable
    /// certificate for one configuration.
    Stability(Common),
    /// Monte Carlo sweep over sizes and p (sweep.csv, sweep.json).
    Sweep(Common),
    /// SVG of a d = 2 percolation, or of the curves in a sweep.json.
    Render(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key = value run file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Torus dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Torus side length; a comma list for `sweep`.
    #[arg(long = "L")]
    l: Option<String>,
    /// Colouring parameter.
    #[arg(long)]
    p: Option<f64>,
    /// Sweep grid `lo:hi:step`.
    #[arg(long = "p-grid")]
    p_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Prime field modulus.
    #[arg(long)]
    q: Option<u32>,
    /// Homology degree.
    #[arg(long)]
    i: Option<usize>,
    /// Instability exponent: delta = (L/2)^(-epsilon).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Poisson intensity (points per unit volume).
    #[arg(long)]
    intensity: Option<f64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long)]
    parallel: Option<usize>,
    /// Configuration file from `sample` instead of a fresh sample.
    #[arg(long)]
    input: Option<PathBuf>,
    /// sweep.json to draw as curves (`render` only).
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(short, long)]
    verbose: bool,
}

/// Validated parameters, merged from the run file and the flags.
struct Run {
    settings: Settings,
    out: PathBuf,
    verbose: bool,
}

impl Run {
    fn new(c: &Common) -> Result<Self, CliError> {
        let mut settings = match &c.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| failed(format!("{}: {e}", path.display())))?;
                Settings::parse(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            None => Settings::default(),
        };
        settings.set("d", text(c.d));
        settings.set("L", c.l.clone());
        settings.set("p", text(c.p));
        settings.set("p-grid", c.p_grid.clone());
        settings.set("trials", text(c.trials));
        settings.set("q", text(c.q));
        settings.set("i", text(c.i));
        settings.set("epsilon", text(c.epsilon));
        settings.set("seed", text(c.seed));
        settings.set("intensity", text(c.intensity));
        settings.set("parallel", text(c.parallel));
        settings.set("input", c.input.as_ref().map(|p| p.display().to_string()));
        settings.set("sweep", c.sweep.as_ref().map(|p| p.display().to_string()));
        settings.set("out", c.out.as_ref().map(|p| p.display().to_string()));
        let out = PathBuf::from(settings.raw("out").unwrap_or("."));
        Ok(Self { settings, out, verbose: c.verbose })
    }

    fn d(&self) -> Result<usize, CliError> {
        self.settings.get_or("d", 2).map_err(invalid)
    }

    fn side(&self) -> Result<f64, CliError> {
        self.settings.get_or("L", 20.0).map_err(invalid)
    }

    fn p(&self) -> Result<f64, CliError> {
        let p: f64 = self.settings.get_or("p", 0.5).map_err(invalid)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(p)
    }

    fn q(&self) -> Result<u32, CliError> {
        let q = self.settings.get_or("q", 3).map_err(invalid)?;
        if !is_prime(q) {
            return Err(invalid(format!("q must be prime, got {q}")));
        }
        Ok(q)
    }

    fn i(&self, d: usize) -> Result<usize, CliError> {
        let i = self.settings.get_or("i", 1).map_err(invalid)?;
        if i > d {
            return Err(invalid(format!("homology degree {i} outside 0..={d}")));
        }
        Ok(i)
    }

    fn seed(&self) -> Result<u64, CliError> {
        self.settings.get_or("seed", 0).map_err(invalid)
    }

    fn intensity(&self) -> Result<f64, CliError> {
        self.settings.get_or("intensity", 1.0).map_err(invalid)
    }

    fn epsilon(&self) -> Result<Option<f64>, CliError> {
        self.settings.get("epsilon").map_err(invalid)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.settings.raw(key).map(PathBuf::from)
    }

    /// The `--input` file, or a fresh sample from d, L, intensity and seed.
    fn configuration(&self) -> Result<PointConfiguration, CliError> {
        if let Some(path) = self.path("input") {
            let text = fs::read_to_string(&path)
                .map_err(|e| failed(format!("{}: {e}", path.display())))?;
            return PointConfiguration::from_text(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())));
        }
        let dom = TorusDomain::new(self.d()?, self.side()?).map_err(invalid)?;
        let intensity = self.intensity()?;
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(invalid(format!("intensity must be positive, got {intensity}")));
        }
        sample_poisson(dom, intensity, self.seed()?).map_err(failed)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| failed(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| failed(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
        Ok(path)
    }
}

fn text<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn sample(run: &Run) -> Result<(), CliError> {
    let config = run.configuration()?;
    run.note(format!("{} points", config.len()));
    run.write("config.txt", &config.to_text())?;
    Ok(())
}

fn homology(run: &Run) -> Result<(), CliError> {
    let config = run.configuration()?;
    let d = config.domain().dim();
    let (p, i, q) = (run.p()?, run.i(d)?, run.q()?);
    let (primal, dual) = events(&config, p, i, q).map_err(failed)?;
    let doc = json!({
        "d": d,
        "L": config.domain().side(),
        "seed": config.seed(),
        "points": config.len(),
        "p": p,
        "primal": primal,
        "dual": dual,
    });
    run.write("homology.json", &pretty(&doc))?;
    Ok(())
}

fn stability(run: &Run) -> Result<(), CliError> {
    let config = run.configuration()?;
    let d = config.domain().dim();
    let (p, i, q) = (run.p()?, run.i(d)?, run.q()?);
    let epsilon = run.epsilon()?.unwrap_or(0.2);
    let cfg = StabilityConfig::new(config.domain(), epsilon).map_err(invalid)?;
    run.note(format!("delta = {}, l = {}, rmax = {}", cfg.delta, cfg.l, cfg.rmax));
    let k = build_delaunay(&config).map_err(failed)?;
    let report = instability_report(&config, &k, &cfg);
    run.note(format!(
        "{} bad points in {} clusters",
        report.bad_points.len(),
        report.clusters.len()
    ));
    run.write("instability.json", &report.to_json())?;
    run.write("coarse.txt", &coarse_state(&config, p, cfg.delta).to_text())?;
    let scheme = allocation_scheme(&config, &cfg).map_err(failed)?;
    run.write("allocation.json", &scheme.to_json())?;
    let cert = stable_certificate(&config, p, &cfg, i, q).map_err(failed)?;
    let doc = serde_json::to_value(&cert).map_err(failed)?;
    run.write("certificate.json", &pretty(&doc))?;
    Ok(())
}

fn sweep(run: &Run) -> Result<(), CliError> {
    let s = &run.settings;
    let d = run.d()?;
    let cfg = SweepConfig {
        d,
        sizes: s.list("L").map_err(invalid)?.unwrap_or_else(|| vec![20.0]),
        p_grid: s
            .grid("p-grid")
            .map_err(invalid)?
            .unwrap_or_else(|| config::parse_grid("0:1:0.05").unwrap()),
        trials: s.get_or("trials", 100).map_err(invalid)?,
        i: run.i(d)?,
        q: run.q()?,
        base_seed: run.seed()?,
        intensity: run.intensity()?,
        epsilon: run.epsilon()?,
        parallel: s.get_or("parallel", 0).map_err(invalid)?,
    };
    cfg.validate().map_err(invalid)?;
    run.note(format!(
        "{} sizes x {} trials x {} p values",
        cfg.sizes.len(),
        cfg.trials,
        cfg.p_grid.len()
    ));
    let result = run_sweep(&cfg).map_err(failed)?;
    run.write("sweep.csv", &result.to_csv())?;
    run.write("sweep.json", &result.to_json())?;
    run.write("run.cfg", &s.render())?;
    Ok(())
}

fn render(run: &Run) -> Result<(), CliError> {
    if let Some(path) = run.path("sweep") {
        let text = fs::read_to_string(&path)
            .map_err(|e| failed(format!("{}: {e}", path.display())))?;
        let result = vorperc_core::SweepResult::from_json(&text)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        run.write("curves.svg", &render::curves_svg(&result))?;
        return Ok(());
    }
    let config = run.configuration()?;
    if config.domain().dim() != 2 {
        return Err(invalid("render draws d = 2 configurations only"));
    }
    let p = run.p()?;
    let k = if config.is_empty() {
        None
    } else {
        Some(build_delaunay(&config).map_err(failed)?)
    };
    run.write("percolation.svg", &render::percolation_svg(&config, k.as_ref(), p))?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, f): (&Common, fn(&Run) -> Result<(), CliError>) = match &cli.command {
        Command::Sample(c) => (c, sample),
        Command::Homology(c) => (c, homology),
        Command::Stability(c) => (c, stability),
        Command::Sweep(c) => (c, sweep),
        Command::Render(c) => (c, render),
    };
    let run = Run::new(common)?;
    f(&run)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vorperc: {e}");
            ExitCode::from(e.code())
        }
    }
}
