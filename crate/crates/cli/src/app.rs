//! Argument parsing, dispatch and file output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::config::LabConfig;
use crate::error::CliError;
use crate::experiments::{self, Outcome};
use crate::table::{emit_csv, emit_meta};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CARLEMAN_LAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    IdentityCheck,
    ConjugationCheck,
    ExpansionCheck,
    D2Check,
    PsdCheck,
    AssumptionCheck,
    QvCheck,
    InequalityScan,
    Propagation,
    UcpDecay,
    Geometry,
    Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::IdentityCheck,
        Experiment::ConjugationCheck,
        Experiment::ExpansionCheck,
        Experiment::D2Check,
        Experiment::PsdCheck,
        Experiment::AssumptionCheck,
        Experiment::QvCheck,
        Experiment::InequalityScan,
        Experiment::Propagation,
        Experiment::UcpDecay,
        Experiment::Geometry,
        Experiment::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::IdentityCheck => "identity-check",
            Experiment::ConjugationCheck => "conjugation-check",
            Experiment::ExpansionCheck => "expansion-check",
            Experiment::D2Check => "d2-check",
            Experiment::PsdCheck => "psd-check",
            Experiment::AssumptionCheck => "assumption-check",
            Experiment::QvCheck => "qv-check",
            Experiment::InequalityScan => "inequality-scan",
            Experiment::Propagation => "propagation",
            Experiment::UcpDecay => "ucp-decay",
            Experiment::Geometry => "geometry",
            Experiment::Sweep => "sweep",
        }
    }

    pub fn run(self, cfg: &LabConfig) -> Result<Outcome, CliError> {
        match self {
            Experiment::IdentityCheck => experiments::identity_check(cfg),
            Experiment::ConjugationCheck => experiments::conjugation_check(cfg),
            Experiment::ExpansionCheck => experiments::expansion_check(cfg),
            Experiment::D2Check => experiments::d2_check(cfg),
            Experiment::PsdCheck => experiments::psd_check(cfg),
            Experiment::AssumptionCheck => experiments::assumption_cmd(cfg),
            Experiment::QvCheck => experiments::qv_cmd(cfg),
            Experiment::InequalityScan => experiments::inequality_scan(cfg),
            Experiment::Propagation => experiments::propagation_cmd(cfg),
            Experiment::UcpDecay => experiments::ucp_cmd(cfg),
            Experiment::Geometry => experiments::geometry(cfg),
            Experiment::Sweep => experiments::sweep(cfg),
        }
    }
}

/// Library operations exercised by each subcommand, directly or through
/// the routine it calls.
pub const ROUTES: &[(&str, &[&str])] = &[
    ("identity-check", &["identity_residual", "eval_frame", "eval_VN"]),
    ("conjugation-check", &["conjugation_residual", "eval_frame"]),
    ("expansion-check", &["eval_frame", "eval_D"]),
    ("d2-check", &["eval_frame", "eval_D", "build_M"]),
    ("psd-check", &["psd_certificate", "build_M"]),
    ("assumption-check", &["assumption_check", "build_M"]),
    (
        "qv-check",
        &["make_grid", "sample_brownian", "solve", "step", "fd_apply", "manufactured_forcing", "qv_check"],
    ),
    ("inequality-scan", &["inequality_gap", "eval_frame", "eval_D", "build_M"]),
    (
        "propagation",
        &["make_grid", "sample_brownian", "solve", "step", "fd_apply", "total_energy", "distance_to_set", "local_energy", "run_propagation"],
    ),
    ("ucp-decay", &["make_grid", "sample_brownian", "solve", "step", "fd_apply"]),
    ("geometry", &["c3_constant", "vertex", "membership"]),
    ("sweep", &["c3_constant", "membership", "sweep_cover"]),
];

#[derive(Debug, Parser)]
#[command(name = "carleman-lab", version, about = "Carleman weight laboratory")]
pub struct Cli {
    #[arg(value_enum)]
    pub subcommand: Experiment,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: `out` from the config, else `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub gnuplot: bool,
}

/// Reads and validates the configuration, applying command-line overrides.
pub fn load_config(cli: &Cli) -> Result<LabConfig, CliError> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = LabConfig::parse(&text)?;
    let name = cli.subcommand.name();
    match &cfg.experiment {
        Some(e) if e != name => {
            return Err(CliError::Config(format!(
                "config is for experiment {e:?}, not {name:?}"
            )))
        }
        _ => cfg.experiment = Some(name.to_string()),
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.paths.is_some() {
        cfg.paths = cli.paths;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    Ok(cfg)
}

fn out_dir(cfg: &LabConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn gnuplot_script(csv_name: &str, outcome: &Outcome) -> Option<String> {
    let plot = outcome.plot.as_ref()?;
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").ok()?;
    writeln!(s, "set key autotitle columnhead").ok()?;
    writeln!(s, "set xlabel '{}'", plot.x).ok()?;
    writeln!(s, "set ylabel '{}'", plot.y).ok()?;
    if plot.log_y {
        writeln!(s, "set logscale y").ok()?;
    }
    writeln!(s, "plot '{csv_name}' using '{}':'{}' with linespoints", plot.x, plot.y).ok()?;
    Some(s)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs one experiment and writes its CSV, metadata, log and optional plot
/// script. Returns the exit status.
pub fn execute(cli: &Cli, cfg: &LabConfig) -> Result<i32, CliError> {
    let name = cli.subcommand.name();
    let start = Instant::now();
    let result = cli.subcommand.run(cfg);
    let wall = start.elapsed().as_secs_f64();
    let outcome = match result {
        Ok(o) => o,
        Err(e) if e.exit_code() == 2 => return Err(e),
        Err(e) => {
            let dir = out_dir(cfg);
            fs::create_dir_all(&dir).map_err(|err| CliError::io(&dir, err))?;
            let log = format!(
                "subcommand: {name}\nconfig_hash: {}\nFAIL run: {e}\nresult: fail\n",
                cfg.hash()
            );
            write_text(&dir.join(format!("{name}.log")), &log)?;
            eprint!("{log}");
            return Ok(1);
        }
    };
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut table = outcome.table.clone();
    table.meta.subcommand = name.to_string();
    table.meta.config_hash = cfg.hash();
    table.meta.artifact_version = env!("CARGO_PKG_VERSION").to_string();
    table.meta.seed = outcome.seed;
    table.meta.wall_time_s = wall;
    let csv_name = format!("{name}.csv");
    emit_csv(&table, &dir.join(&csv_name))?;
    emit_meta(&table, &dir.join(format!("{name}.meta.json")))?;
    let mut log = String::new();
    let _ = writeln!(log, "subcommand: {name}");
    let _ = writeln!(log, "config_hash: {}", table.meta.config_hash);
    let _ = writeln!(log, "rows: {}", table.rows.len());
    let _ = writeln!(log, "wall_time_s: {wall:.3}");
    for a in &outcome.assertions {
        let tag = if a.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(log, "{tag} {}: {}", a.name, a.detail);
    }
    let pass = outcome.passed();
    let _ = writeln!(log, "result: {}", if pass { "pass" } else { "fail" });
    write_text(&dir.join(format!("{name}.log")), &log)?;
    if cli.gnuplot {
        if let Some(script) = gnuplot_script(&csv_name, &outcome) {
            write_text(&dir.join(format!("{name}.gp")), &script)?;
        }
    }
    print!("{log}");
    Ok(if pass { 0 } else { 1 })
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point over an argument list; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = configure_threads()
        .and_then(|_| load_config(&cli))
        .and_then(|cfg| execute(&cli, &cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    /// Operations of the library modules, by name.
    const OPERATIONS: &[&str] = &[
        "make_grid", "fd_apply", "sample_brownian", "eval_frame", "build_M", "eval_D", "eval_VN",
        "psd_certificate", "assumption_check", "identity_residual", "conjugation_residual",
        "qv_check", "inequality_gap", "step", "solve", "manufactured_forcing", "total_energy",
        "distance_to_set", "local_energy", "run_propagation", "c3_constant", "vertex",
        "membership", "sweep_cover",
    ];

    #[test]
    fn every_operation_is_routed() {
        let routed: BTreeSet<&str> = ROUTES.iter().flat_map(|(_, ops)| ops.iter().copied()).collect();
        for op in OPERATIONS {
            assert!(routed.contains(op), "{op} is not reachable from any subcommand");
        }
        for op in &routed {
            assert!(OPERATIONS.contains(op), "unknown operation {op}");
        }
    }

    #[test]
    fn routes_match_subcommands() {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        let routed: Vec<&str> = ROUTES.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, routed);
        for e in Experiment::ALL {
            assert_eq!(e.to_possible_value().unwrap().get_name(), e.name());
        }
    }
}
