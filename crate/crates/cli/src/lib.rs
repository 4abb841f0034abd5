//! Experiment runner: a validated TOML config in, `#`-headed CSV tables and
//! a JSON manifest out.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use output::{RunManifest, Table};

use output::{sha256_hex, write_table, Stopwatch, VERSION};

/// Hash of the config with the output location removed, so the same
/// experiment written to different directories carries the same hash.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = None;
    sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}

/// Validates, runs `command` and writes `<table>.csv` files plus
/// `<command>.manifest.json` into `out_dir`.
pub fn run(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let violations = cfg.validate(command);
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let mut clock = Stopwatch::default();
    let (tables, workers) = pool.install(|| {
        commands::dispatch(command, cfg, &mut clock).map(|t| (t, rayon::current_num_threads()))
    })?;

    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(cfg);
    let mut header = vec![
        ("toolkit".to_string(), VERSION.to_string()),
        ("command".to_string(), command.to_string()),
        ("config_hash".to_string(), hash.clone()),
    ];
    if let Some(s) = cfg.seed {
        header.push(("seed".into(), s.to_string()));
    }
    if let Some(spec) = &cfg.spec {
        header.push(("spec".into(), spec.id()));
    }
    let mut outputs = Vec::with_capacity(tables.len());
    clock.time("write", || -> std::io::Result<()> {
        for t in &tables {
            outputs.push(write_table(out_dir, t, &header)?.1);
        }
        Ok(())
    })?;

    let manifest = RunManifest {
        toolkit_version: VERSION.into(),
        command: command.to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        config_hash: hash,
        seed: cfg.seed,
        workers,
        stages: clock.stages,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out_dir.join(format!("{command}.manifest.json")), text)?;
    Ok(manifest)
}
