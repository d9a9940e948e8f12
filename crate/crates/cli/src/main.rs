//! `halfspace`: verification experiments for the critical half-space problem
//! as subcommands with JSON reports and optional CSV dumps.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use config::FileConfig;
use report::Report;

#[derive(Parser)]
#[command(
    name = "halfspace",
    version,
    about = "Numerical checks for the critical semilinear problem on the upper half-space"
)]
struct Cli {
    /// print the table of configurable keys and defaults, then exit
    #[arg(long)]
    show_defaults: bool,
    /// flat key-value TOML config file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// directory for report.json / metadata.json / CSV dumps
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// check that the boundary-compatible bubble solves the system
    VerifyBubble(commands::VerifyBubbleArgs),
    /// verify the Kelvin-transformed system and fit the image profile
    KelvinCheck(commands::KelvinCheckArgs),
    /// compare a field with its reflection across a plane x_1 = lambda
    MovingPlane(commands::MovingPlaneArgs),
    /// locate the symmetry axis of a field by plane sweeps
    DetectAxis(commands::DetectAxisArgs),
    /// extrapolate the far-field decay limits
    Decay(commands::DecayArgs),
    /// find the scale with vanishing g_s'(0.5) and optionally verify symmetry
    FindScale(commands::FindScaleArgs),
    /// integrate the one-dimensional reduction and report its zero crossing
    ShootOde(commands::ShootOdeArgs),
    /// fit the boundary trace by the lower-dimensional profile
    BoundaryProfile(commands::BoundaryProfileArgs),
    /// run the axisymmetric Newton solver on a truncated cylinder
    Solve(commands::SolveArgs),
    /// manufactured-solution refinement study of the solver
    Convergence(commands::ConvergenceArgs),
}

fn main() {
    let cli = Cli::parse();
    if cli.show_defaults {
        config::print_defaults();
        return;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        exit(2);
    };
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            exit(2);
        }
    };

    let mut csv_rows: Option<Vec<(f64, f64, f64)>> = None;
    let mut point_rows: Option<(usize, Vec<(Vec<f64>, f64)>)> = None;
    let outcome: Result<Report, String> = match &command {
        Command::VerifyBubble(args) => commands::verify_bubble(args, &file).map(|out| {
            point_rows = out.point_dump;
            out.report
        }),
        Command::KelvinCheck(args) => commands::kelvin_check(args, &file),
        Command::MovingPlane(args) => commands::moving_plane(args, &file),
        Command::DetectAxis(args) => commands::detect_axis_cmd(args, &file),
        Command::Decay(args) => commands::decay(args, &file),
        Command::FindScale(args) => commands::find_scale(args, &file),
        Command::ShootOde(args) => commands::shoot_ode(args, &file),
        Command::BoundaryProfile(args) => commands::boundary_profile(args, &file),
        Command::Solve(args) => commands::solve(args, &file).map(|out| {
            csv_rows = out.grid_dump;
            out.report
        }),
        Command::Convergence(args) => commands::convergence(args, &file),
    };

    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            exit(2);
        }
    };

    println!(
        "{}",
        serde_json::to_string_pretty(&report.to_json()).expect("report is valid JSON")
    );
    if let Some(dir) = &cli.output_dir {
        if let Err(e) = report.write_to(dir) {
            eprintln!("error: cannot write reports to {}: {e}", dir.display());
            exit(2);
        }
        if let Some(rows) = &csv_rows {
            if let Err(e) = report::write_grid_csv(&dir.join("solution.csv"), rows.iter().copied())
            {
                eprintln!("error: cannot write CSV: {e}");
                exit(2);
            }
        }
        if let Some((dim, rows)) = &point_rows {
            if let Err(e) = report::write_point_csv(&dir.join("samples.csv"), *dim, rows) {
                eprintln!("error: cannot write CSV: {e}");
                exit(2);
            }
        }
    } else if csv_rows.is_some() || point_rows.is_some() {
        eprintln!("error: --dump-csv requires --output-dir");
        exit(2);
    }
    exit(if report.pass() { 0 } else { 1 });
}
