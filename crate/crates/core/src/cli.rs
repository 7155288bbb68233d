//! Command-line front end. Each run writes its artifacts into one output
//! directory; summaries go to stdout and errors to stderr behind `ERROR:`.
//!
//! Exit codes: 0 on success, 2 when the instance itself fails (net
//! validation, unmet net preconditions, infeasibility, violated checks), 1 for
//! everything else, including usage errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    certified_dark_points, certified_lower_bound, check_containment, check_dark_location, darkest_points,
    default_dark_tol, heatmap_grid, shadow_certificate, write_heatmap_csv,
};
use crate::error::{Error, Result};
use crate::geometry::{
    build_net, parse_region, read_points_csv, DomainTag, NetOptions, Region, SampleNet,
    DEFAULT_PROBES, DEFAULT_SEED,
};
use crate::model::{build_lower_instance, build_upper_instance, MipInstance};
use crate::potential::{Configuration, PotentialSpec};
use crate::solver::{
    brute_force_oracle, random_instance, solve_bnb, BoundReport, ReportRecord, SolveOptions,
    DEFAULT_TOLERANCE,
};

/// Kernel parameter used when neither a flag nor the run document sets one.
pub const DEFAULT_A: f64 = 5.0;

#[derive(Debug, Parser)]
#[command(name = "polarize", version, about = "Certified bounds on maximal polarization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and validate an ε-net of a region or of its convex hull.
    Net(NetArgs),
    /// Solve the lower-bound program.
    Lower(RunArgs),
    /// Solve the upper-bound program.
    Upper(RunArgs),
    /// Solve both programs on a shared constraint net and compare.
    Sandwich(RunArgs),
    /// Certified lower bound on the polarization of a given configuration.
    Verify(CheckArgs),
    /// Necessary optimality conditions for a given configuration.
    Conditions(CheckArgs),
    /// Potential of a configuration on a regular grid.
    Heatmap(HeatmapArgs),
    /// Cross-check the solver against exhaustive enumeration.
    OracleTest(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lower,
    Upper,
    Sandwich,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run document; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Gaussian kernel parameter in f(r) = exp(-a r²).
    #[arg(long)]
    pub a: Option<f64>,
    /// Number of lamps.
    #[arg(long)]
    pub n: Option<u32>,
    /// Resolution of the constraint net.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Resolution of the candidate net.
    #[arg(long = "eps-lambda")]
    pub eps_lambda: Option<f64>,
    #[arg(long, conflicts_with = "integer")]
    pub binary: bool,
    #[arg(long)]
    pub integer: bool,
    /// Candidate-net multiplicity for the upper bound; enables binary mode.
    #[arg(long)]
    pub multiplicity: Option<usize>,
    /// Absolute solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Solver time limit in seconds.
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NetArgs {
    #[arg(long)]
    pub region: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// `on-A` or `on-conv-A`.
    #[arg(long, default_value = "on-A")]
    pub tag: DomainTag,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    pub probes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub region: PathBuf,
    /// Kernel parameter; defaults to the one recorded in a report file.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub eps: f64,
    /// A `report_*.json` file or an `x,y` CSV of lamp positions.
    #[arg(long)]
    pub configuration: PathBuf,
    /// Dark-set band; defaults to N·g(0, ε).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub region: PathBuf,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub configuration: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// First seed; instance i uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// The run document. Every field may also come from a flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Region document; relative paths resolve against the run document.
    pub region: Option<PathBuf>,
    pub a: Option<f64>,
    pub potential: Option<PotentialSpec>,
    #[serde(alias = "N")]
    pub n: Option<u32>,
    pub mode: Option<Mode>,
    pub eps: Option<f64>,
    pub eps_lambda: Option<f64>,
    pub binary: Option<bool>,
    pub multiplicity: Option<usize>,
    pub tol: Option<f64>,
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.n == Some(0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        for (name, v) in [
            ("a", self.a),
            ("eps", self.eps),
            ("eps_lambda", self.eps_lambda),
            ("tol", self.tol),
            ("time_limit", self.time_limit),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.multiplicity == Some(0) {
            return Err(Error::Config("multiplicity must be at least 1".into()));
        }
        if self.a.is_some() && self.potential.is_some() {
            return Err(Error::Config("give either a or potential, not both".into()));
        }
        Ok(())
    }

    /// Flags win over document values.
    pub fn overridden_by(mut self, flags: &RunArgs) -> RunConfig {
        macro_rules! take {
            ($field:ident) => {
                if flags.$field.is_some() {
                    self.$field = flags.$field.clone();
                }
            };
        }
        take!(region);
        take!(n);
        take!(eps);
        take!(eps_lambda);
        take!(multiplicity);
        take!(tol);
        take!(time_limit);
        take!(seed);
        take!(out);
        if flags.a.is_some() {
            self.a = flags.a;
            self.potential = None;
        }
        if flags.binary {
            self.binary = Some(true);
        } else if flags.integer {
            self.binary = Some(false);
        }
        self
    }
}

/// Reads and validates a run document.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    if let (Some(region), Some(dir)) = (cfg.region.as_mut(), path.parent()) {
        if region.is_relative() {
            *region = dir.join(&*region);
        }
    }
    Ok(cfg)
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct Run {
    pub region: Region,
    pub spec: PotentialSpec,
    pub n: u32,
    pub eps: f64,
    pub eps_lambda: Option<f64>,
    pub binary: Option<bool>,
    pub multiplicity: Option<usize>,
    pub solve: SolveOptions,
    pub net: NetOptions,
    pub out: PathBuf,
}

impl Run {
    pub fn resolve(args: &RunArgs, mode: Mode) -> Result<Run> {
        let doc = match &args.config {
            Some(path) => load_run_config(path)?,
            None => RunConfig::default(),
        };
        if doc.mode.is_some_and(|m| m != mode) {
            return Err(Error::Config(format!(
                "run document is for mode {:?}, command is {mode:?}",
                doc.mode.unwrap()
            )));
        }
        let cfg = doc.overridden_by(args);
        cfg.validate()?;
        let missing = |what: &str| Error::Config(format!("missing required setting `{what}`"));
        let region_path = cfg.region.ok_or_else(|| missing("region"))?;
        let spec = match cfg.potential {
            Some(p) => p,
            None => PotentialSpec::gaussian(cfg.a.unwrap_or(DEFAULT_A))?,
        };
        Ok(Run {
            region: read_region(&region_path)?,
            spec,
            n: cfg.n.ok_or_else(|| missing("n"))?,
            eps: cfg.eps.ok_or_else(|| missing("eps"))?,
            eps_lambda: cfg.eps_lambda,
            binary: cfg.binary,
            multiplicity: cfg.multiplicity,
            solve: SolveOptions {
                tolerance: cfg.tol.unwrap_or(DEFAULT_TOLERANCE),
                time_limit: cfg.time_limit.map(Duration::from_secs_f64),
                ..SolveOptions::default()
            },
            net: NetOptions {
                seed: cfg.seed.unwrap_or(DEFAULT_SEED),
                ..NetOptions::default()
            },
            out: cfg.out.ok_or_else(|| missing("out"))?,
        })
    }
}

/// Nets and solution of one bound program.
pub struct Solved {
    pub lambda: SampleNet,
    pub instance: MipInstance,
    pub report: BoundReport,
}

/// Lower bound: Λ an ε_Λ-net of `conv(A)` (default ε/3), binary by default.
pub fn solve_lower(run: &Run, gamma: &SampleNet) -> Result<Solved> {
    let eps_l = run.eps_lambda.unwrap_or(run.eps / 3.0);
    let lambda = build_net(&run.region, eps_l, 1, DomainTag::OnConvA, &run.net)?;
    let binary = run.binary.unwrap_or(true);
    let instance = build_lower_instance(&run.spec, &lambda, gamma, run.n, binary)?;
    let report = solve_bnb(&instance, &run.solve)?;
    Ok(Solved {
        lambda,
        instance,
        report,
    })
}

/// Upper bound: Λ an (ε_Λ, k)-net of `conv(A)` (default ε_Λ = ε). Binary
/// only when a multiplicity is requested or the flag says so.
pub fn solve_upper(run: &Run, gamma: &SampleNet, eps_lambda: f64) -> Result<Solved> {
    let k = run.multiplicity.unwrap_or(1);
    let lambda = build_net(&run.region, eps_lambda, k, DomainTag::OnConvA, &run.net)?;
    let binary = run.binary.unwrap_or(run.multiplicity.is_some());
    let instance = build_upper_instance(&run.spec, &lambda, gamma, run.n, binary)?;
    let report = solve_bnb(&instance, &run.solve)?;
    Ok(Solved {
        lambda,
        instance,
        report,
    })
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
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
            eprintln!("ERROR: {}", text.trim_start_matches("error: ").trim_end());
            return 1;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR: {e}");
            if e.is_instance_failure() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Net(args) => cmd_net(args),
        Command::Lower(args) => cmd_bound(args, Mode::Lower),
        Command::Upper(args) => cmd_bound(args, Mode::Upper),
        Command::Sandwich(args) => cmd_sandwich(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Conditions(args) => cmd_conditions(args),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::OracleTest(args) => cmd_oracle(args),
    }
}

fn cmd_net(args: &NetArgs) -> Result<()> {
    let region = read_region(&args.region)?;
    let opts = NetOptions {
        probes: args.probes,
        seed: args.seed,
        ..NetOptions::default()
    };
    let net = build_net(&region, args.eps, args.k, args.tag, &opts)?;
    fs::create_dir_all(&args.out)?;
    write_net(&args.out, &args.tag.to_string(), &net)?;
    let v = net.validation().expect("built nets are validated");
    println!(
        "net {}: {} points, epsilon {}, k {}, max gap {:.6}, min multiplicity {}",
        args.tag,
        net.len(),
        net.epsilon(),
        net.multiplicity(),
        v.max_gap,
        v.min_multiplicity
    );
    Ok(())
}

fn cmd_bound(args: &RunArgs, mode: Mode) -> Result<()> {
    let run = Run::resolve(args, mode)?;
    let gamma = build_net(&run.region, run.eps, 1, DomainTag::OnA, &run.net)?;
    let solved = match mode {
        Mode::Lower => solve_lower(&run, &gamma)?,
        _ => solve_upper(&run, &gamma, run.eps_lambda.unwrap_or(run.eps))?,
    };
    fs::create_dir_all(&run.out)?;
    write_net(&run.out, "gamma", &gamma)?;
    write_net(&run.out, "lambda", &solved.lambda)?;
    let name = if mode == Mode::Lower { "lower" } else { "upper" };
    write_report(&run.out, name, &solved)?;
    print_summary(name, &solved);
    Ok(())
}

fn cmd_sandwich(args: &RunArgs) -> Result<()> {
    let run = Run::resolve(args, Mode::Sandwich)?;
    let gamma = build_net(&run.region, run.eps, 1, DomainTag::OnA, &run.net)?;
    let lower = solve_lower(&run, &gamma)?;
    let upper = solve_upper(&run, &gamma, run.eps)?;
    fs::create_dir_all(&run.out)?;
    write_net(&run.out, "gamma", &gamma)?;
    write_net(&run.out, "lambda_lower", &lower.lambda)?;
    write_net(&run.out, "lambda_upper", &upper.lambda)?;
    write_report(&run.out, "lower", &lower)?;
    write_report(&run.out, "upper", &upper)?;
    print_summary("lower", &lower);
    print_summary("upper", &upper);
    let (lo, up) = (lower.report.value, upper.report.value);
    println!("{lo:.9} <= {up:.9} gap {:.9}", up - lo);
    if lo > up {
        return Err(Error::CheckFailed(format!(
            "lower bound {lo} exceeds upper bound {up}"
        )));
    }
    Ok(())
}

/// Configuration and kernel parameter recorded in a configuration file.
fn read_configuration(path: &Path) -> Result<(Configuration, Option<PotentialSpec>)> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let record: ReportRecord = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok((record.to_configuration()?, record.potential))
    } else {
        let points = read_points_csv(File::open(path)?)?;
        Ok((Configuration::new(points)?, None))
    }
}

fn spec_for(a: Option<f64>, recorded: Option<PotentialSpec>) -> Result<PotentialSpec> {
    match (a, recorded) {
        (Some(a), _) => PotentialSpec::gaussian(a),
        (None, Some(spec)) => Ok(spec),
        (None, None) => PotentialSpec::gaussian(DEFAULT_A),
    }
}

#[derive(Debug, Serialize)]
struct VerifyRecord {
    certified_lower_bound: f64,
    epsilon: f64,
    lamps: usize,
}

fn cmd_verify(args: &CheckArgs) -> Result<()> {
    let region = read_region(&args.region)?;
    let (config, recorded) = read_configuration(&args.configuration)?;
    let spec = spec_for(args.a, recorded)?;
    let opts = NetOptions {
        seed: args.seed,
        ..NetOptions::default()
    };
    let bound = certified_lower_bound(&spec, &region, &config, args.eps, &opts)?;
    println!("certified lower bound {bound:.9} (epsilon {}, {} lamps)", args.eps, config.len());
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        let record = VerifyRecord {
            certified_lower_bound: bound,
            epsilon: args.eps,
            lamps: config.len(),
        };
        write_json(&out.join("verify.json"), &record)?;
    }
    Ok(())
}

fn cmd_conditions(args: &CheckArgs) -> Result<()> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("conditions needs --out".into()))?;
    let region = read_region(&args.region)?;
    let (config, recorded) = read_configuration(&args.configuration)?;
    let spec = spec_for(args.a, recorded)?;
    let opts = NetOptions {
        seed: args.seed,
        ..NetOptions::default()
    };
    let net = build_net(&region, args.eps, 1, DomainTag::OnA, &opts)?;
    let tol = match args.tol {
        Some(t) => t,
        None => default_dark_tol(&spec, config.len(), args.eps),
    };
    let dark = darkest_points(&spec, &config, &net, tol)?;
    let containment = check_containment(&config, &dark)?;
    // candidates for true darkest points may sit up to ε away from ∂A
    let near_dark = certified_dark_points(&spec, &config, &net)?;
    let location = check_dark_location(&region, &config, &near_dark, args.eps);
    let certificates: Vec<_> = dark
        .points
        .iter()
        .filter_map(|&p| shadow_certificate(&spec, &region, &config, p).map(|q| (p, q)))
        .collect();

    fs::create_dir_all(out)?;
    dark.write_csv(BufWriter::new(File::create(out.join("dark_set.csv"))?))?;
    let mut w = BufWriter::new(File::create(out.join("conditions.txt"))?);
    writeln!(w, "dark_set level={} tol={} points={}", dark.level, dark.tol, dark.points.len())?;
    writeln!(
        w,
        "containment holds={} violators={}",
        containment.holds,
        containment.violating_points.len()
    )?;
    for p in &containment.violating_points {
        writeln!(w, "containment_violator {} {}", p.x, p.y)?;
    }
    writeln!(
        w,
        "dark_location candidates={} holds={} violators={}",
        near_dark.points.len(),
        location.holds,
        location.violating_points.len()
    )?;
    for p in &location.violating_points {
        writeln!(w, "dark_location_violator {} {}", p.x, p.y)?;
    }
    writeln!(w, "shadow probed={} certificates={}", dark.points.len(), certificates.len())?;
    for (p, q) in &certificates {
        writeln!(w, "shadow_certificate {} {} -> {} {}", p.x, p.y, q.x, q.y)?;
    }
    let verdict = if containment.holds && location.holds {
        "no evidence against local optimality"
    } else {
        "evidence against local optimality"
    };
    writeln!(w, "verdict {verdict}")?;
    w.flush()?;
    println!(
        "containment {}, dark location {}, {} shadow certificates: {verdict}",
        containment.holds,
        location.holds,
        certificates.len()
    );
    Ok(())
}

fn cmd_heatmap(args: &HeatmapArgs) -> Result<()> {
    let region = read_region(&args.region)?;
    let (config, recorded) = read_configuration(&args.configuration)?;
    let spec = spec_for(args.a, recorded)?;
    let cells = heatmap_grid(&spec, &region, &config, args.resolution)?;
    fs::create_dir_all(&args.out)?;
    write_heatmap_csv(&cells, BufWriter::new(File::create(args.out.join("heatmap.csv"))?))?;
    println!("heatmap {}x{} written", args.resolution, args.resolution);
    Ok(())
}

/// Instance sizes of the oracle cross-check.
pub const ORACLE_MAX_LAMBDA: usize = 10;
pub const ORACLE_MAX_GAMMA: usize = 8;
pub const ORACLE_MAX_N: u32 = 3;

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let mut matched = 0;
    for i in 0..args.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(i));
        let inst = random_instance(&mut rng, ORACLE_MAX_LAMBDA, ORACLE_MAX_GAMMA, ORACLE_MAX_N);
        let exact = brute_force_oracle(&inst)?.value;
        let got = solve_bnb(&inst, &SolveOptions::default())?.value;
        if (exact - got).abs() <= 1e-9 {
            matched += 1;
        } else {
            eprintln!("seed {}: solver {got}, enumeration {exact}", args.seed.wrapping_add(i));
        }
    }
    println!("{matched}/{} match", args.seeds);
    if matched as u64 != args.seeds {
        return Err(Error::CheckFailed(format!(
            "{} of {} instances disagree",
            args.seeds - matched as u64,
            args.seeds
        )));
    }
    Ok(())
}

fn read_region(path: &Path) -> Result<Region> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read region {}: {e}", path.display())))?;
    parse_region(&text)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_net(dir: &Path, name: &str, net: &SampleNet) -> Result<()> {
    net.write_csv(BufWriter::new(File::create(dir.join(format!("net_{name}.csv")))?))?;
    write_json(&dir.join(format!("net_{name}.meta.json")), &net.meta())
}

fn write_report(dir: &Path, name: &str, solved: &Solved) -> Result<()> {
    let record = ReportRecord::new(&solved.report, &solved.instance);
    write_json(&dir.join(format!("report_{name}.json")), &record)
}

fn print_summary(name: &str, solved: &Solved) {
    let r = &solved.report;
    println!(
        "{name}: value {:.9} gap {:.3e} status {:?} nodes {} candidates {} sites {} time {:.2}s",
        r.value,
        r.gap,
        r.status,
        r.nodes_explored,
        solved.instance.n_lambda(),
        solved.instance.n_gamma(),
        r.wall_time.as_secs_f64()
    );
}
