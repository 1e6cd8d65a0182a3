use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pseur_core::array::{steering_vector, synthesize};
use pseur_core::beamforming::{beampattern, notch_prediction, output_sinr_db};
use pseur_core::experiment::{
    example_scenario, run_pseur_pipeline, run_sweep, run_trial, trial_seed, ExperimentPlan, SweepAxis,
};
use pseur_core::io::{parse_methods, write_beampattern, write_sweep, AxisKind, ConfigFile};
use pseur_core::{Error, Result};

/// Adaptive beamforming experiments on a uniform linear array.
#[derive(Debug, Parser)]
#[command(name = "pseur", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Output SINR versus input SNR.
    SweepSnr(Common),
    /// Output SINR versus number of snapshots.
    SweepSnapshots(Common),
    /// Beampattern of one reconstruction beamformer realization.
    Beampattern(Common),
    /// Output SINR of every method on one realization.
    Trial(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML scenario/plan file.
    #[arg(long, conflicts_with = "example")]
    scenario: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    example: Option<u8>,
    /// Comma-separated methods: optimal, pseur, ipn-cc, meps, smi.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn plan(&self, axis: AxisKind) -> Result<ExperimentPlan> {
        let mut plan = match &self.scenario {
            Some(path) => ConfigFile::load(path)?.plan(axis)?,
            None => {
                let scenario = example_scenario(self.example.unwrap_or(1))?;
                let axis = match axis {
                    AxisKind::Snr => SweepAxis::default_snr(),
                    AxisKind::Snapshots => SweepAxis::default_snapshots(),
                };
                ExperimentPlan::new(scenario, axis)
            }
        };
        if let Some(m) = &self.methods {
            plan.methods = parse_methods(m)?;
        }
        if let Some(t) = self.trials {
            plan.trials = t;
        }
        if let Some(s) = self.seed {
            plan.base_seed = s;
        }
        plan.validate()?;
        Ok(plan)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        match &self.out {
            Some(path) => std::fs::File::create(path)
                .map(|f| Box::new(std::io::BufWriter::new(f)) as Box<dyn Write>)
                .map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                }),
            None => Ok(Box::new(std::io::stdout().lock())),
        }
    }

    fn csv_error(&self, source: pseur_core::io::CsvError) -> Error {
        Error::Csv {
            path: self.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            source,
        }
    }
}

fn sweep(args: &Common, axis: AxisKind) -> Result<()> {
    let plan = args.plan(axis)?;
    let rows = run_sweep(&plan)?;
    write_sweep(&rows, args.output()?).map_err(|e| args.csv_error(e))
}

fn pattern(args: &Common) -> Result<()> {
    let plan = args.plan(AxisKind::Snr)?;
    let (scenario, snapshots) = (plan.scenario.with_seed(trial_seed(plan.base_seed, 0)), plan.snapshots);
    let batch = synthesize(&scenario, snapshots)?;
    let spec = &scenario.array;
    let out = run_pseur_pipeline(
        &batch.data,
        scenario.presumed_soi_deg(),
        scenario.source_count(),
        spec,
        &plan.pipeline,
    )?;
    log::info!(
        "SINR {:.3} dB, interferers at {:?} deg",
        output_sinr_db(&out.weights.w, &batch.truth),
        out.interferer_estimates_deg
    );
    if let Some(rec) = &out.reconstruction {
        for s in &out.sectors {
            let predicted = notch_prediction(
                &rec.partial_eig,
                rec.spectrum.gamma_low,
                rec.spectrum.gamma_high,
                &out.weights.steering,
                s.center_deg,
                &out.sectors,
                spec,
            )?;
            let measured = out.weights.response(&steering_vector(s.center_deg, spec)).norm();
            log::info!(
                "notch at {:.2} deg: measured {:.3e}, predicted {:.3e}",
                s.center_deg,
                measured,
                predicted
            );
        }
    }
    let p = beampattern(&out.weights, &spec.grid(), spec);
    write_beampattern(&p, args.output()?).map_err(|e| args.csv_error(e))
}

fn trial(args: &Common) -> Result<()> {
    let plan = args.plan(AxisKind::Snr)?;
    let scenario = {
        let mut s = plan.scenario.clone();
        s.set_snr_db(plan.snr_db);
        s
    };
    let outcome = run_trial(&plan, &scenario, plan.snapshots, 0);
    let mut out = args.output()?;
    let io_err = |source| Error::Io {
        path: args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    };
    writeln!(out, "method,sinr_db").map_err(io_err)?;
    let mut failed = None;
    for (method, value) in &outcome.sinr_db {
        match value {
            Ok(v) => writeln!(out, "{},{v:.6}", method.tag()).map_err(io_err)?,
            Err(e) => {
                log::error!("{method}: {e}");
                failed.get_or_insert_with(|| format!("{method}: {e}"));
            }
        }
    }
    out.flush().map_err(io_err)?;
    match failed {
        Some(msg) => Err(Error::Singular(msg)),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::SweepSnr(a) => sweep(a, AxisKind::Snr),
        Command::SweepSnapshots(a) => sweep(a, AxisKind::Snapshots),
        Command::Beampattern(a) => pattern(a),
        Command::Trial(a) => trial(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
