use clap::Parser;
use cosci_cli::config::{CalibrateArgs, Cli, Command, EvalArgs, PairsArgs, ScoreArgs, SelectArgs, SimulateArgs};
use cosci_cli::error::{CliError, Result};
use cosci_cli::experiment::{
    default_eval_grid, metrics_table_csv, run_experiment, write_design, EvalMode,
};
use cosci_cli::ingest::ingest_matrix;
use cosci_cli::pipeline::{run_pipeline, PipelineConfig, SelectionMode};
use cosci_core::fdr::DataDrivenConfig;
use cosci_core::screening::{detection_table, ThresholdSpec};
use cosci_core::simgen::{sample_experiment, DistributionSpec, ExperimentDesign};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(cosci_core::CoreError::CalibrationFailed { table, .. }) = &e {
                eprintln!("detection fractions:");
                for (alpha, frac) in table {
                    eprintln!("  alpha {alpha}: {frac}");
                }
            }
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => score(args),
        Command::Select(args) => select(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Pairs(args) => pairs(args),
        Command::Simulate(args) => simulate(args),
        Command::Eval(args) => eval(args),
    }
}

fn score(args: ScoreArgs) -> Result<()> {
    let matrix = ingest_matrix(&args.input.input, args.input.header, args.input.transpose)?;
    let config = PipelineConfig {
        command: "score".into(),
        mode: SelectionMode::ScoreOnly,
        tau: args.tau,
        threads: args.run.resolve_threads()?,
        seed: args.run.seed,
    };
    let report = run_pipeline(&matrix, &config)?;
    let (csv_path, json_path) = report.write(&args.output)?;
    eprintln!(
        "scored {} features over {} observations -> {} + {}",
        report.summary.p,
        report.summary.n,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let matrix = ingest_matrix(&args.input.input, args.input.header, args.input.transpose)?;
    let mode = match args.mode.as_str() {
        "fixed" => {
            let alpha0 = args
                .alpha0
                .ok_or_else(|| CliError::input("--mode fixed requires --alpha0"))?;
            SelectionMode::Fixed(alpha0)
        }
        "simulated" => {
            let mut spec = ThresholdSpec::simulated();
            spec.noise_family = DistributionSpec::from_id(&args.family)?;
            if let Some(grid) = &args.grid {
                spec.grid = grid.clone();
            }
            spec.reps = args.reps;
            spec.detect_tolerance = args.tolerance;
            SelectionMode::Simulated(spec)
        }
        "data-driven" => SelectionMode::DataDriven {
            truncation_q: args.q,
            config: DataDrivenConfig {
                bins: args.bins,
                degree: args.degree,
                pi0_floor: None,
            },
        },
        other => return Err(CliError::input(format!("unknown mode '{other}'"))),
    };
    let config = PipelineConfig {
        command: "select".into(),
        mode,
        tau: args.tau,
        threads: args.run.resolve_threads()?,
        seed: args.run.seed,
    };
    let report = run_pipeline(&matrix, &config)?;
    let (csv_path, json_path) = report.write(&args.output)?;
    eprintln!(
        "selected {} of {} features (alpha0 {:?}) -> {} + {}",
        report.summary.selected.len(),
        report.summary.p,
        report.summary.alpha0_used,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let mut spec = ThresholdSpec::simulated();
    spec.noise_family = DistributionSpec::from_id(&args.family)?;
    if let Some(grid) = &args.grid {
        spec.grid = grid.clone();
    }
    spec.reps = args.reps;
    spec.detect_tolerance = args.tolerance;

    let threads = args.run.resolve_threads()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    let table = pool.install(|| detection_table(args.n, &spec, args.run.seed))?;

    println!("alpha,detection_fraction");
    for (alpha, frac) in &table {
        println!("{alpha},{frac}");
    }
    if let Some(path) = &args.output {
        let mut body = String::from("alpha,detection_fraction\n");
        for (alpha, frac) in &table {
            body.push_str(&format!("{alpha},{frac}\n"));
        }
        std::fs::write(path, body).map_err(CliError::io(path))?;
    }
    match table.iter().find(|(_, frac)| *frac <= spec.detect_tolerance) {
        Some((alpha, _)) => {
            println!("calibrated_alpha0,{alpha}");
            Ok(())
        }
        None => Err(CliError::Core(
            cosci_core::CoreError::CalibrationFailed {
                tolerance: spec.detect_tolerance,
                table,
            },
        )),
    }
}

fn pairs(args: PairsArgs) -> Result<()> {
    let matrix = ingest_matrix(&args.input.input, args.input.header, args.input.transpose)?;
    let config = PipelineConfig {
        command: "pairs".into(),
        mode: SelectionMode::Pairwise {
            alpha0: args.alpha0,
            m: args.m,
        },
        tau: None,
        threads: args.run.resolve_threads()?,
        seed: args.run.seed,
    };
    let report = run_pipeline(&matrix, &config)?;
    let (csv_path, json_path) = report.write(&args.output)?;
    eprintln!(
        "pairwise screen kept {} of {} features -> {} + {}",
        report.summary.selected.len(),
        report.summary.p,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let design = ExperimentDesign::parse(&args.design)?;
    let matrix = sample_experiment(&design, args.n, args.run.seed)?;
    write_design(&matrix, &args.output, args.header)?;
    eprintln!(
        "wrote {}x{} design {} -> {}",
        matrix.n,
        matrix.p(),
        args.design,
        args.output.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let design = ExperimentDesign::parse(&args.design)?;
    let mode = match args.mode.as_str() {
        "fixed" => EvalMode::FixedGrid(match args.alpha0 {
            Some(alpha) => vec![alpha],
            None => default_eval_grid(),
        }),
        "data-driven" => EvalMode::DataDriven {
            truncation_q: args.q,
        },
        other => return Err(CliError::input(format!("unknown mode '{other}'"))),
    };
    let threads = args.run.resolve_threads()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        run_experiment(
            &design,
            args.n,
            args.reps,
            &mode,
            args.run.seed,
            args.cer,
            args.m,
        )
    })?;
    let table = metrics_table_csv(&rows);
    print!("{table}");
    if let Some(path) = &args.output {
        std::fs::write(path, table).map_err(CliError::io(path))?;
    }
    Ok(())
}
