use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cloak::geomap::Point;
use cloakbench::config::ExperimentConfig;
use cloakbench::lab::run_three_sphere;
use cloakbench::output::{self, Format};
use cloakbench::resonance::{resonance_sweep, ResonanceTarget};
use cloakbench::sweep::{control_report, free_field, ratio_scan, run_sweep, solve_field};
use cloakbench::verify::{parse_suites, run_suites, specfun_residual_table, Suite};
use cloakbench::BenchError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cloakbench", version, about = "Cloaking experiments and verification suites")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated loss values, strictly decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    delta_list: Option<Vec<f64>>,
    /// Ratio r3/r2; `ratio-scan` accepts a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    ratio: Option<Vec<f64>>,
    /// Truncation degree.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Table format; `verify` defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Cloak,
    Vacuum,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Specfun,
    Geomap,
    Media,
    SolverOracles,
    Threesphere,
    All,
}

impl SuiteArg {
    fn name(self) -> &'static str {
        match self {
            SuiteArg::Specfun => "specfun",
            SuiteArg::Geomap => "geomap",
            SuiteArg::Media => "media",
            SuiteArg::SolverOracles => "solver-oracles",
            SuiteArg::Threesphere => "threesphere",
            SuiteArg::All => "all",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve at the first loss value; write the layout, per-mode dumps and field samples.
    Solve,
    /// Loss sweep with exponent fits: sweep.csv and fit.json.
    Sweep,
    /// Fitted exponent for several ratios r3/r2 at fixed r3.
    RatioScan,
    /// Region norms across the loss sweep.
    Resonance {
        #[arg(long, value_enum, default_value = "cloak")]
        target: TargetArg,
    },
    /// Three-sphere inequality experiments.
    ThreeSphere,
    /// Run invariant suites and print a summary.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
}

const DEFAULT_OUT: &str = "cloakbench-out";
const DEFAULT_RATIOS: [f64; 4] = [5.0, 10.0, 20.0, 40.0];

impl Cli {
    fn format(&self, default: Format) -> Format {
        match self.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Json) => Format::Json,
            None => default,
        }
    }

    fn out_dir(&self) -> Result<PathBuf, BenchError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn single_ratio(&self) -> Result<Option<f64>, BenchError> {
        match self.ratio.as_deref() {
            None => Ok(None),
            Some([r]) => Ok(Some(*r)),
            Some(_) => Err(BenchError::Usage("--ratio takes a single value here".into())),
        }
    }

    fn experiment(&self) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.delta_list {
            cfg.deltas = d.clone();
        }
        if let Some(r) = self.single_ratio()? {
            cfg.ratio = r;
        }
        if let Some(n) = self.nmax {
            cfg.nmax = Some(n);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json(value: &serde_json::Value) -> Result<(), BenchError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_solve(cli: &Cli) -> Result<(), BenchError> {
    let cfg = cli.experiment()?;
    let dir = cli.out_dir()?;
    let format = cli.format(Format::Csv);
    let delta = cfg.deltas[0];
    let nmax = cfg.resolved_nmax()?;
    let layout = cfg.cloak_layout(delta)?;
    output::write_json(&dir.join("layout.json"), &layout.to_json()?)?;
    let field = solve_field(&cfg, &layout, nmax).map_err(|source| BenchError::Solver { delta, source })?;

    let b = cfg.shell()[1];
    let grid: Vec<f64> = (1..=100).map(|i| b * i as f64 / 100.0).collect();
    let modes_dir = dir.join("modes");
    fs::create_dir_all(&modes_dir)?;
    let mut max_outgoing: f64 = 0.0;
    for m in &field.modes {
        let value = m.to_json(&grid).map_err(|source| BenchError::Solver { delta, source })?;
        let pol = format!("{:?}", m.mode.pol).to_lowercase();
        output::write_json(&modes_dir.join(format!("mode_n{}_m{}_{pol}.json", m.mode.n, m.mode.m)), &value)?;
        max_outgoing = max_outgoing.max(m.outgoing().map_or(0.0, |s| s.norm()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Point> = (0..200)
        .map(|_| loop {
            let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if v.norm() > 1e-3 && v.norm() <= 1.0 {
                break v * b;
            }
        })
        .collect();
    output::write_field_samples(&dir, "field", &field, &points, format)?;
    let free = free_field(&cfg, nmax).map_err(|source| BenchError::Solver { delta, source })?;
    output::write_field_samples(&dir, "field_free", &free, &points, format)?;

    let summary = json!({
        "delta": delta,
        "nmax": nmax,
        "ratio": cfg.ratio,
        "modes": field.modes.len(),
        "max_outgoing": max_outgoing,
    });
    output::write_json(&dir.join("solve.json"), &summary)?;
    print_json(&summary)
}

fn cmd_sweep(cli: &Cli) -> Result<(), BenchError> {
    let cfg = cli.experiment()?;
    let dir = cli.out_dir()?;
    let result = run_sweep(&cfg)?;
    let format = cli.format(Format::Csv);
    output::write_sweep(&dir, &result, format)?;
    output::write_table(&dir, "controls", &control_report(&cfg, &result.records)?, format)?;
    print_json(&serde_json::to_value(&result.fit)?)
}

fn cmd_ratio_scan(cli: &Cli) -> Result<(), BenchError> {
    let ratios = cli.ratio.clone().unwrap_or_else(|| DEFAULT_RATIOS.to_vec());
    let scan_cli = Cli { ratio: None, ..cli.clone_args() };
    let cfg = scan_cli.experiment()?;
    for &r in &ratios {
        cfg.with_ratio_fixed_r3(r).validate()?;
    }
    let dir = cli.out_dir()?;
    let rows = ratio_scan(&cfg, &ratios)?;
    output::write_table(&dir, "ratio_scan", &rows, cli.format(Format::Csv))?;
    print_json(&serde_json::to_value(&rows)?)
}

fn cmd_resonance(cli: &Cli, target: TargetArg) -> Result<(), BenchError> {
    let cfg = cli.experiment()?;
    let dir = cli.out_dir()?;
    let target = match target {
        TargetArg::Cloak => ResonanceTarget::Cloak,
        TargetArg::Vacuum => ResonanceTarget::Vacuum,
    };
    let report = resonance_sweep(&cfg, target)?;
    output::write_table(&dir, "resonance", &report.rows, cli.format(Format::Csv))?;
    let flags = json!({ "growth": report.growth, "exterior_bounded": report.exterior_bounded });
    output::write_json(&dir.join("resonance_growth.json"), &flags)?;
    print_json(&flags)
}

fn cmd_three_sphere(cli: &Cli) -> Result<(), BenchError> {
    let dir = cli.out_dir()?;
    let format = cli.format(Format::Csv);
    let run = run_three_sphere(cli.seed.unwrap_or(0))?;
    output::write_inequality(&dir, "single_mode_3d", &run.single_mode_3d, format)?;
    output::write_inequality(&dir, "single_mode_2d", &run.single_mode_2d, format)?;
    output::write_inequality(&dir, "monte_carlo_3d", &run.monte_carlo_3d, format)?;
    output::write_inequality(&dir, "monte_carlo_2d", &run.monte_carlo_2d, format)?;
    output::write_trace(&dir, "trace", &run.trace, format)?;
    let summary = json!({
        "single_mode_limit": run.single_mode_limit,
        "single_mode_3d_n40": run.single_mode_3d.last().map(|r| r.ratio),
        "single_mode_2d_n40": run.single_mode_2d.last().map(|r| r.ratio),
        "monte_carlo_3d": run.summary_3d,
        "monte_carlo_2d": run.summary_2d,
        "alpha_identity_error": run.alpha_identity_error,
        "rate": run.rate,
        "probe": run.probe,
    });
    output::write_json(&dir.join("three_sphere.json"), &summary)?;
    print_json(&summary)
}

fn cmd_verify(cli: &Cli, suite: SuiteArg) -> Result<bool, BenchError> {
    let suites = parse_suites(suite.name())?;
    let seed = cli.seed.unwrap_or(0);
    let summary = run_suites(&suites, seed)?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        output::write_json(&dir.join("verify.json"), &summary)?;
        if suites.contains(&Suite::Specfun) {
            write_specfun_table(dir)?;
        }
    }
    match cli.format(Format::Json) {
        Format::Json => print_json(&serde_json::to_value(&summary)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["suite", "check", "value", "relation", "bound", "pass"])?;
            for s in &summary.suites {
                for c in &s.checks {
                    let rel = serde_json::to_value(c.relation)?;
                    w.write_record([
                        s.suite.name().to_string(),
                        c.name.clone(),
                        format!("{:e}", c.value),
                        rel.as_str().unwrap_or_default().to_string(),
                        format!("{:e}", c.bound),
                        c.pass.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(summary.pass)
}

fn write_specfun_table(dir: &Path) -> Result<(), BenchError> {
    #[derive(serde::Serialize)]
    struct Row {
        n: usize,
        r: f64,
        spherical_residual: f64,
        cylindrical_residual: f64,
    }
    let rows: Vec<Row> = specfun_residual_table()?
        .into_iter()
        .map(|(n, r, s, c)| Row { n, r, spherical_residual: s, cylindrical_residual: c })
        .collect();
    output::write_csv(&dir.join("specfun_residuals.csv"), &rows)
}

impl Cli {
    fn clone_args(&self) -> Cli {
        Cli {
            config: self.config.clone(),
            delta_list: self.delta_list.clone(),
            ratio: self.ratio.clone(),
            nmax: self.nmax,
            out: self.out.clone(),
            seed: self.seed,
            format: self.format,
            command: Command::Solve,
        }
    }
}

fn run(cli: &Cli) -> Result<bool, BenchError> {
    match &cli.command {
        Command::Solve => cmd_solve(cli).map(|_| true),
        Command::Sweep => cmd_sweep(cli).map(|_| true),
        Command::RatioScan => cmd_ratio_scan(cli).map(|_| true),
        Command::Resonance { target } => cmd_resonance(cli, *target).map(|_| true),
        Command::ThreeSphere => cmd_three_sphere(cli).map(|_| true),
        Command::Verify { suite } => cmd_verify(cli, *suite),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("cloakbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
