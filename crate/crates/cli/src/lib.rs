//! Experiment drivers behind the `stochtex` binary.

pub mod common;
pub mod config;
pub mod converge;
pub mod dct;
pub mod error;
pub mod order;
pub mod resample;
pub mod volume;

use stochtex::texture::store_image;

use crate::common::{check_grid, load_input, write_csv, FIXTURE_HIGH_CONTRAST, FIXTURE_PUFF};
use crate::config::{Cli, Command, CommandKind, ExperimentArgs, ExperimentConfig};
pub use crate::error::CliError;

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, args): (CommandKind, &ExperimentArgs) = match &cli.command {
        Command::Resample(a) => (CommandKind::Resample, a),
        Command::Converge(a) => (CommandKind::Converge, a),
        Command::Order(a) => (CommandKind::Order, a),
        Command::Volume(a) => (CommandKind::Volume, a),
        Command::Dct(a) => (CommandKind::Dct, a),
        Command::Run { config } => {
            let text =
                std::fs::read_to_string(config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
            return execute(&ExperimentConfig::from_json(&text)?);
        }
    };
    let cfg = ExperimentConfig::resolve(kind, args)?;
    if args.dump_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    execute(&cfg)
}

/// Runs one resolved experiment, writing its outputs and CSV.
pub fn execute(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input = cfg.input.as_deref();
    let csv = cfg.csv.as_deref();
    match cfg.command {
        CommandKind::Resample => {
            let src = load_input(input, None, cfg.raw)?.into_image()?;
            let out = resample::resample(cfg, &src)?;
            if let Some(path) = &cfg.output {
                check_grid("resampled image", &out.image)?;
                store_image(&out.image, path)?;
            }
            write_csv(&[out.row], csv)
        }
        CommandKind::Converge => {
            let src = load_input(input, None, cfg.raw)?;
            write_csv(&converge::converge(cfg, &src)?, csv)
        }
        CommandKind::Order => {
            let src = load_input(input, Some(FIXTURE_HIGH_CONTRAST), cfg.raw)?;
            let rows = order::order(cfg, &src)?;
            let (max_diff, max_sem) = rows.iter().fold((0.0f64, 0.0f64), |(d, s), r| {
                (d.max(r.abs_diff), s.max(r.after_stoch_sem))
            });
            eprintln!(
                "order: {} queries, map {}, max |before - after_ref| = {max_diff:.6e}, max stochastic SEM = {max_sem:.6e}",
                rows.len(),
                cfg.map
            );
            write_csv(&rows, csv)
        }
        CommandKind::Volume => {
            let src = load_input(input, Some(FIXTURE_PUFF), cfg.raw)?;
            let out = volume::volume(cfg, &src)?;
            if let Some(path) = &cfg.output {
                check_grid("projection", &out.image)?;
                store_image(&out.image, path)?;
            }
            write_csv(&out.rows, csv)
        }
        CommandKind::Dct => {
            let src = load_input(input, None, cfg.raw)?.into_image()?;
            let out = dct::dct(cfg, &src)?;
            if let Some(path) = &cfg.output {
                out.compressed.write(path)?;
            }
            write_csv(&out.rows, csv)
        }
    }
}
