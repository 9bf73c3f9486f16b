use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pegtrace::report::{run, write_artifacts, Command, RunConfig, EXIT_INPUT};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Diameters,
    Trace,
    Verify,
    Coincidences,
    Generate,
}

/// Rectangles inscribed in polygons: diameters, traced rectangle components,
/// area sweep checks and isometric coincidences.
#[derive(Parser)]
#[command(name = "pegtrace", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Polygon JSON file `{"vertices": [[x, y], ...]}`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for reports, dumps and figures.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oracle grid density for loop search and the oracle cross-check.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    svg: bool,
    /// Write the full component dump (trace).
    #[arg(long)]
    dump: bool,
    /// Tracer step multiplier.
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    /// Vertices per generated polygon.
    #[arg(long, default_value_t = 6)]
    vertices: usize,
    /// Number of generated polygons.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let command = match cli.command {
        Cmd::Diameters => Command::Diameters,
        Cmd::Trace => Command::Trace,
        Cmd::Verify => Command::Verify,
        Cmd::Coincidences => Command::Coincidences,
        Cmd::Generate => Command::Generate,
    };
    let cfg = RunConfig {
        input: cli.input,
        out_dir: cli.out,
        seed: cli.seed,
        grid: cli.grid,
        svg: cli.svg,
        dump: cli.dump,
        step_scale: cli.step_scale,
        vertices: cli.vertices,
        count: cli.count,
        ..RunConfig::new(command)
    };
    let outcome = run(&cfg).and_then(|o| {
        if let Some(dir) = &cfg.out_dir {
            write_artifacts(dir, &o)?;
        }
        Ok(o)
    });
    match outcome {
        Ok(o) => {
            print!("{}", o.report);
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("pegtrace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
