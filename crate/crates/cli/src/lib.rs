//! Command-line front end for the OAM BePre simulator: config parsing,
//! parameter sweeps and CSV/JSON output.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::path::Path;

use oam_bepre::{bepre_transforms, channel_matrix, Constellation};

pub use config::{parse_config, ConfigError, PowerPolicy, SweepAxis, SweepParam, SweepSpec};
pub use error::CliError;
pub use sweep::{evaluate_point, run_sweep, PointMetrics, SweepOptions, SweepResult, SweepRow};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "OAM_BEPRE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Channel,
    Bepre,
    CapacitySweep,
    Ser,
    Complexity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Channel => "channel",
            Command::Bepre => "bepre",
            Command::CapacitySweep => "capacity-sweep",
            Command::Ser => "ser",
            Command::Complexity => "complexity",
        }
    }
}

pub fn load_config(path: &Path) -> Result<SweepSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn single_point(spec: &SweepSpec, command: Command) -> Result<(), CliError> {
    if spec.sweeps.is_empty() {
        Ok(())
    } else {
        Err(ConfigError {
            line: 0,
            key: "sweep.param".into(),
            message: format!(
                "`{}` evaluates a single geometry; remove the sweep keys",
                command.name()
            ),
        }
        .into())
    }
}

/// Runs `command` on a parsed spec and writes its outputs. Returns a one-line
/// summary for the terminal.
pub fn execute(
    command: Command,
    spec: &SweepSpec,
    out: &Path,
    strict_eq17: bool,
) -> Result<String, CliError> {
    let meta = output::Metadata::new(command.name(), spec, strict_eq17);
    match command {
        Command::Channel => {
            single_point(spec, command)?;
            let h = channel_matrix(&spec.geometry)?;
            output::emit_channel(&h, &meta, out)?;
            Ok(format!(
                "wrote {}x{} channel to {}",
                h.n_rx(),
                h.n_tx(),
                out.display()
            ))
        }
        Command::Bepre => {
            single_point(spec, command)?;
            let h = channel_matrix(&spec.geometry)?;
            let t = bepre_transforms(&h.entries)?;
            let report = t.verify(&h.entries)?;
            output::emit_bepre(&t, &report, &meta, out)?;
            Ok(format!(
                "wrote BePre transforms to {} (equivalence residual {:.3e})",
                out.display(),
                report.equivalence_residual
            ))
        }
        Command::CapacitySweep | Command::Ser => {
            let options = SweepOptions {
                strict_eq17,
                with_ser: command == Command::Ser,
            };
            let result = run_sweep(spec, options);
            output::emit_csv(&result, &meta, out)?;
            let failed = result.failures();
            if failed == result.rows.len() {
                let first = result.rows[0]
                    .outcome
                    .as_ref()
                    .err()
                    .cloned()
                    .unwrap_or_default();
                return Err(oam_bepre::Error::InvalidArgument(format!(
                    "every grid point failed, first error: {first}"
                ))
                .into());
            }
            Ok(format!(
                "wrote {} rows to {} ({failed} failed)",
                result.rows.len(),
                out.display()
            ))
        }
        Command::Complexity => {
            let xi = Constellation::<f64>::by_name(&spec.constellation)
                .expect("validated by the parser")
                .len();
            let ns: Vec<usize> = match spec
                .sweeps
                .iter()
                .find(|a| a.param == SweepParam::NElements)
            {
                Some(axis) => axis.values().iter().map(|v| v.round() as usize).collect(),
                None => (1..=spec.geometry.n_tx).collect(),
            };
            let records = output::complexity_records(&ns, xi)?;
            output::write_csv(out, &output::complexity_header(), &records)?;
            output::write_json(&output::meta_path(out), &meta)?;
            Ok(format!("wrote {} rows to {}", records.len(), out.display()))
        }
    }
}

/// Reads `OAM_BEPRE_THREADS` and sizes the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| ConfigError {
        line: 0,
        key: THREADS_ENV.into(),
        message: format!("`{value}` is not a thread count"),
    })?;
    // a pool built earlier in the process wins; that is fine
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}
