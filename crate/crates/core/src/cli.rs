//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage, configuration or validation
//! errors, 2 when a run or an output write fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::amc::{write_table_csv, ModulationTable};
use crate::analysis::{compare_with_simulation, write_comparison_csv};
use crate::config::{
    default_config, DistanceLayout, ExperimentConfig, SchedulerKind, UNEQUAL_DISTANCES_KM,
};
use crate::engine::{run_single_traced, RunTraces, SweepParameter, TraceOptions};
use crate::error::{Error, Result};
use crate::report::{
    scheduler_config, summarize, summarize_sweep, write_allocation_trace, write_snr_trace,
    write_summary_csv, write_tcp_trace, CwndPolicy, SummaryRow,
};

pub const CONFIG_ENV: &str = "TCPAWARE_CONFIG";

const SIGMA_VALUES: [f64; 5] = [4.0, 6.0, 8.0, 10.0, 12.0];
const CWND_VALUES: [f64; 10] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

#[derive(Debug, Parser)]
#[command(
    name = "tcpaware",
    version,
    about = "TCP-aware uplink scheduling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiment once per scheduler.
    Run(RunArgs),
    /// Sweep the shadowing standard deviation (dB).
    SweepSigma(SweepArgs),
    /// Sweep the window cap (packets).
    SweepCwnd(SweepArgs),
    /// Compare simulated throughput with the send-rate model over a window sweep.
    ValidateAnalysis(SweepArgs),
    /// Print the modulation thresholds.
    DumpAmcTable(AmcArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layout {
    Equal,
    Unequal,
}

impl From<Layout> for DistanceLayout {
    fn from(l: Layout) -> Self {
        match l {
            Layout::Equal => DistanceLayout::Equal,
            Layout::Unequal => DistanceLayout::Unequal,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Configuration file (key = value lines).
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheduler list, e.g. `rr-a,twus-a,dtwus-a`.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheduler)]
    scheduler: Vec<SchedulerKind>,
    /// Reproduce a figure experiment, e.g. `fig-5`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    layout: Option<Layout>,
    #[arg(long)]
    runs: Option<u32>,
    /// Frames per run, warm-up included.
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    cwnd_max: Option<u32>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-frame SNR trace: run,frame,ss,snr_db.
    #[arg(long)]
    trace_snr: Option<PathBuf>,
    /// TCP loss events: run,time_s,ss,event,cwnd,ssthresh,rto.
    #[arg(long)]
    trace_tcp: Option<PathBuf>,
    /// Per-frame grants: run,frame,ss,rate_bps,slots,demand_bits,dc,weight,deadline_s.
    #[arg(long)]
    trace_alloc: Option<PathBuf>,
    /// Number of leading runs to trace (first scheduler only).
    #[arg(long, default_value_t = 1)]
    trace_runs: u32,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Debug, Args)]
struct AmcArgs {
    /// Target bit error rates, one threshold column each.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-5, 1e-6])]
    ber: Vec<f64>,
    #[arg(long, default_value_t = 25e6)]
    bandwidth: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_scheduler(s: &str) -> std::result::Result<SchedulerKind, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Experiment {
    Run,
    SigmaSweep,
    CwndSweep,
    Analysis,
}

#[derive(Debug, Clone, PartialEq)]
struct Preset {
    experiment: Experiment,
    schedulers: Vec<SchedulerKind>,
    layout: DistanceLayout,
    values: Vec<f64>,
}

fn preset(name: &str) -> Result<Preset> {
    use SchedulerKind::*;
    let n: u32 = name
        .strip_prefix("fig-")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::Domain(format!("unknown preset `{name}` (expected fig-<n>)")))?;
    let sigma = |schedulers: Vec<SchedulerKind>, layout| Preset {
        experiment: Experiment::SigmaSweep,
        schedulers,
        layout,
        values: SIGMA_VALUES.to_vec(),
    };
    let analysis = |kind, layout| Preset {
        experiment: Experiment::Analysis,
        schedulers: vec![kind],
        layout,
        values: CWND_VALUES.to_vec(),
    };
    let adaptive = vec![RrA, TwusA, DtwusA];
    let fixed = vec![Rr, Twus, Dtwus];
    Ok(match n {
        3 => Preset {
            experiment: Experiment::CwndSweep,
            schedulers: vec![TwusA, Twus],
            layout: DistanceLayout::Equal,
            values: CWND_VALUES.to_vec(),
        },
        4 | 5 => sigma(adaptive, DistanceLayout::Equal),
        6 | 7 => sigma(fixed, DistanceLayout::Equal),
        8 => sigma(adaptive, DistanceLayout::Unequal),
        9 => sigma(adaptive, DistanceLayout::Equal),
        10 => sigma(fixed, DistanceLayout::Equal),
        14 => analysis(TwusA, DistanceLayout::Equal),
        15 => analysis(DtwusA, DistanceLayout::Equal),
        16 => analysis(TwusA, DistanceLayout::Unequal),
        17 => analysis(DtwusA, DistanceLayout::Unequal),
        _ => return Err(Error::Domain(format!("no preset for `{name}`"))),
    })
}

/// Fully resolved work, ready to execute.
#[derive(Debug)]
struct Plan {
    experiment: Experiment,
    config: ExperimentConfig,
    schedulers: Vec<SchedulerKind>,
    values: Vec<f64>,
    cwnd: CwndPolicy,
    output: Option<PathBuf>,
    traces: Vec<(TraceOptions, PathBuf)>,
    trace_runs: u32,
}

fn plan(command: Command) -> Result<Plan> {
    let (experiment, common, values, run_args) = match command {
        Command::Run(a) => (
            Experiment::Run,
            a.common,
            Vec::new(),
            Some((a.trace_snr, a.trace_tcp, a.trace_alloc, a.trace_runs)),
        ),
        Command::SweepSigma(a) => (Experiment::SigmaSweep, a.common, a.values, None),
        Command::SweepCwnd(a) => (Experiment::CwndSweep, a.common, a.values, None),
        Command::ValidateAnalysis(a) => (Experiment::Analysis, a.common, a.values, None),
        Command::DumpAmcTable(_) => unreachable!("handled before planning"),
    };
    let preset = common.preset.as_deref().map(preset).transpose()?;
    let experiment = match &preset {
        Some(p) if experiment == Experiment::Run => p.experiment,
        Some(p) if p.experiment != experiment => {
            return Err(Error::Domain(format!(
                "preset `{}` does not match this subcommand",
                common.preset.as_deref().unwrap_or_default()
            )))
        }
        _ => experiment,
    };

    let layout = common
        .layout
        .map(DistanceLayout::from)
        .or(preset.as_ref().map(|p| p.layout));
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => default_config(layout.unwrap_or(DistanceLayout::Equal)),
    };
    if let (Some(_), Some(layout)) = (&common.config, layout) {
        config.distances_km = match layout {
            DistanceLayout::Equal => vec![1.0; config.num_ss],
            DistanceLayout::Unequal => UNEQUAL_DISTANCES_KM.to_vec(),
        };
        config.num_ss = config.distances_km.len();
    }
    if let Some(seed) = common.seed {
        config.rng_seed = seed;
    }
    if let Some(runs) = common.runs {
        config.num_runs = runs;
    }
    if let Some(frames) = common.frames {
        config.num_frames = frames;
    }
    if let Some(sigma) = common.sigma {
        config.shadowing_sigma_db = sigma;
    }
    if let Some(cwnd) = common.cwnd_max {
        config.cwnd_max = cwnd;
    }

    let mut schedulers = common.scheduler.clone();
    if schedulers.is_empty() {
        schedulers = match &preset {
            Some(p) => p.schedulers.clone(),
            None => vec![config.scheduler_kind],
        };
    }
    if experiment == Experiment::Analysis && schedulers.len() != 1 {
        return Err(Error::Domain(
            "validate-analysis takes exactly one scheduler".into(),
        ));
    }
    config.scheduler_kind = schedulers[0];
    config.validate()?;

    let mut values = values;
    if values.is_empty() {
        values = match (&preset, experiment) {
            (Some(p), _) => p.values.clone(),
            (None, Experiment::SigmaSweep) => SIGMA_VALUES.to_vec(),
            (None, Experiment::CwndSweep | Experiment::Analysis) => CWND_VALUES.to_vec(),
            (None, Experiment::Run) => Vec::new(),
        };
    }
    let parameter = match experiment {
        Experiment::SigmaSweep => Some(SweepParameter::SigmaDb),
        Experiment::CwndSweep | Experiment::Analysis => Some(SweepParameter::CwndMax),
        Experiment::Run => None,
    };
    if let Some(p) = parameter {
        for &v in &values {
            p.apply(&config, v)?;
        }
    }

    let cwnd = if common.cwnd_max.is_some() || common.config.is_some() {
        CwndPolicy::FromConfig
    } else {
        CwndPolicy::PerScheduler
    };
    let mut traces = Vec::new();
    let mut trace_runs = 0;
    if let Some((snr, tcp, alloc, runs)) = run_args {
        trace_runs = runs.min(config.num_runs);
        let with = |f: fn(&mut TraceOptions)| {
            let mut t = TraceOptions::default();
            f(&mut t);
            t
        };
        if let Some(p) = snr {
            traces.push((with(|t| t.snr = true), p));
        }
        if let Some(p) = tcp {
            traces.push((with(|t| t.tcp = true), p));
        }
        if let Some(p) = alloc {
            traces.push((with(|t| t.allocation = true), p));
        }
    }
    Ok(Plan {
        experiment,
        config,
        schedulers,
        values,
        cwnd,
        output: common.output,
        traces,
        trace_runs,
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary_line(r: &SummaryRow) -> String {
    format!(
        "{} sigma={} dB cwnd_max={} mean throughput={:.1} kbit/s JFI={:.4}",
        r.scheduler,
        r.sigma_db,
        r.cwnd_max,
        r.metrics.avg_throughput_bps.mean / 1e3,
        r.metrics.jfi.mean
    )
}

fn execute(plan: Plan) -> Result<()> {
    // summaries go to stderr when the CSV itself is on stdout
    let say = |line: String| {
        if plan.output.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    };
    match plan.experiment {
        Experiment::Analysis => {
            let cwnds: Vec<u32> = plan.values.iter().map(|&v| v as u32).collect();
            let rows = compare_with_simulation(&plan.config, &cwnds)?;
            write_comparison_csv(&rows, open_output(plan.output.as_deref())?)?;
            for r in &rows {
                say(format!(
                    "{} sigma={} dB cwnd_max={} sim={:.1} kbit/s model={:.1} kbit/s rel_err={:.3}",
                    plan.config.scheduler_kind,
                    plan.config.shadowing_sigma_db,
                    r.cwnd_max,
                    r.sim_bps / 1e3,
                    r.model_bps / 1e3,
                    r.rel_err
                ));
            }
        }
        Experiment::Run | Experiment::SigmaSweep | Experiment::CwndSweep => {
            let rows = match plan.experiment {
                Experiment::Run => summarize(&plan.config, &plan.schedulers, plan.cwnd)?,
                Experiment::SigmaSweep => summarize_sweep(
                    &plan.config,
                    &plan.schedulers,
                    SweepParameter::SigmaDb,
                    &plan.values,
                    plan.cwnd,
                )?,
                _ => summarize_sweep(
                    &plan.config,
                    &plan.schedulers,
                    SweepParameter::CwndMax,
                    &plan.values,
                    plan.cwnd,
                )?,
            };
            write_summary_csv(&rows, open_output(plan.output.as_deref())?)?;
            for r in &rows {
                say(summary_line(r));
            }
        }
    }
    for (opts, path) in &plan.traces {
        // traces follow the first scheduler only; the columns carry no scheduler
        let c = scheduler_config(&plan.config, plan.schedulers[0], plan.cwnd);
        let mut all = RunTraces::default();
        for run in 0..plan.trace_runs {
            all.extend(run_single_traced(&c, run, *opts)?.1);
        }
        let out = open_output(Some(path))?;
        if opts.snr {
            write_snr_trace(&all, out)?;
        } else if opts.tcp {
            write_tcp_trace(&all, out)?;
        } else {
            write_allocation_trace(&all, out)?;
        }
    }
    Ok(())
}

fn dump_amc(args: AmcArgs) -> i32 {
    let tables: Result<Vec<_>> = args
        .ber
        .iter()
        .map(|&b| ModulationTable::build(args.bandwidth, b))
        .collect();
    let tables = match tables {
        Ok(t) if !t.is_empty() => t,
        Ok(_) => {
            eprintln!("error: no bit error rate given");
            return 1;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match open_output(args.output.as_deref()).and_then(|out| write_table_csv(&tables, out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Command::DumpAmcTable(a) = cli.command {
        return dump_amc(a);
    }
    let plan = match plan(cli.command) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match execute(plan) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        assert_eq!(preset("fig-3").unwrap().experiment, Experiment::CwndSweep);
        assert_eq!(preset("fig-5").unwrap().values, SIGMA_VALUES.to_vec());
        assert_eq!(
            preset("fig-6").unwrap().schedulers,
            vec![SchedulerKind::Rr, SchedulerKind::Twus, SchedulerKind::Dtwus]
        );
        assert_eq!(preset("fig-17").unwrap().layout, DistanceLayout::Unequal);
        assert!(preset("fig-99").is_err());
        assert!(preset("five").is_err());
    }

    #[test]
    fn mismatched_preset_is_rejected() {
        let cli = Cli::try_parse_from(["tcpaware", "sweep-sigma", "--preset", "fig-3"]).unwrap();
        assert!(plan(cli.command).is_err());
    }

    #[test]
    fn run_preset_picks_its_experiment() {
        let cli = Cli::try_parse_from(["tcpaware", "run", "--preset", "fig-14"]).unwrap();
        let p = plan(cli.command).unwrap();
        assert_eq!(p.experiment, Experiment::Analysis);
        assert_eq!(p.schedulers, vec![SchedulerKind::TwusA]);
    }

    #[test]
    fn overrides_apply() {
        let cli = Cli::try_parse_from([
            "tcpaware",
            "run",
            "--seed",
            "9",
            "--runs",
            "3",
            "--frames",
            "900",
            "--sigma",
            "6",
            "--scheduler",
            "rr,dtwus-a",
        ])
        .unwrap();
        let p = plan(cli.command).unwrap();
        assert_eq!(p.config.rng_seed, 9);
        assert_eq!(p.config.num_runs, 3);
        assert_eq!(p.config.num_frames, 900);
        assert_eq!(p.config.shadowing_sigma_db, 6.0);
        assert_eq!(p.schedulers, vec![SchedulerKind::Rr, SchedulerKind::DtwusA]);
        assert_eq!(p.cwnd, CwndPolicy::PerScheduler);
    }

    #[test]
    fn invalid_values_fail_planning() {
        let cli = Cli::try_parse_from(["tcpaware", "sweep-sigma", "--values", "4,-1"]).unwrap();
        assert!(plan(cli.command).is_err());
        let cli = Cli::try_parse_from(["tcpaware", "run", "--frames", "100"]).unwrap();
        assert!(plan(cli.command).is_err());
    }

    #[test]
    fn unknown_scheduler_is_a_usage_error() {
        assert!(Cli::try_parse_from(["tcpaware", "run", "--scheduler", "fifo"]).is_err());
    }
}
