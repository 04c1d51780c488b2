use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use weakcurrent_core::electrostatics::{ClassicalityVerdict, DeviceGeometry};
use weakcurrent_core::weak_value::ExperimentConfig;

use crate::settings::Settings;
use crate::CliError;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

/// Validation results collected while a command runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModuleChecks {
    /// S_w/L_x².
    pub weak_surface_ratio: f64,
    /// Largest S_s/L_x² over the tiles.
    pub tile_surface_ratio: f64,
    /// σ_w·σ_s/ħ when it was estimated.
    pub condition_ratio: Option<f64>,
    pub classicality: Option<ClassicalityVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: Settings,
    /// Keys taken from the profile defaults.
    pub defaults_filled: Vec<String>,
    pub seed: u64,
    pub experiments: usize,
    pub mode: String,
    pub started_unix_s: u64,
    pub finished_unix_s: Option<u64>,
    pub elapsed_s: Option<f64>,
    /// "running", "ok" or "failed".
    pub status: String,
    pub exit_code: Option<u8>,
    pub message: Option<String>,
    pub warnings: Vec<String>,
    pub checks: ModuleChecks,
    pub outputs: Vec<String>,
}

pub fn config_hash(settings: &Settings) -> String {
    hex::encode(Sha256::digest(settings.to_toml().as_bytes()))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Refuses an output directory holding results of a different configuration.
pub fn check_directory_hash(dir: &Path, hash: &str) -> Result<(), CliError> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Ok(());
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if !path.to_string_lossy().ends_with(MANIFEST_SUFFIX) {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let other: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("unreadable manifest {}: {e}", path.display())))?;
        if other.config_hash != hash {
            return Err(CliError::Config(format!(
                "{} holds results of configuration {}; refusing to mix them with {}",
                dir.display(),
                &other.config_hash[..12],
                &hash[..12]
            )));
        }
    }
    Ok(())
}

pub struct RunContext {
    pub out_dir: PathBuf,
    pub settings: Settings,
    pub config: ExperimentConfig,
    pub geometry: DeviceGeometry,
    pub manifest: RunManifest,
    started: Instant,
}

impl RunContext {
    /// Checks the output directory and writes the manifest in its "running" state.
    pub fn start(
        out_dir: &Path,
        command: &str,
        settings: Settings,
        defaults_filled: Vec<String>,
        config: ExperimentConfig,
        warnings: Vec<String>,
    ) -> Result<Self, CliError> {
        let hash = config_hash(&settings);
        check_directory_hash(out_dir, &hash)?;
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let geometry = DeviceGeometry::build(&config.geometry).map_err(|e| CliError::Config(e.to_string()))?;
        let l2 = geometry.device_length.powi(2);
        let checks = ModuleChecks {
            weak_surface_ratio: geometry.weak.area() / l2,
            tile_surface_ratio: geometry.tiles.iter().map(|t| t.area() / l2).fold(0.0, f64::max),
            condition_ratio: None,
            classicality: None,
        };
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: hash,
            config: settings.clone(),
            defaults_filled,
            seed: config.seed,
            experiments: config.experiments,
            mode: config.mode.to_string(),
            started_unix_s: unix_now(),
            finished_unix_s: None,
            elapsed_s: None,
            status: "running".into(),
            exit_code: None,
            message: None,
            warnings,
            checks,
            outputs: Vec::new(),
        };
        let ctx =
            Self { out_dir: out_dir.to_path_buf(), settings, config, geometry, manifest, started: Instant::now() };
        ctx.write_manifest()?;
        let resolved = ctx.out_dir.join("resolved_config.toml");
        fs::write(&resolved, ctx.settings.to_toml()).map_err(io_err(&resolved))?;
        Ok(ctx)
    }

    pub fn hash(&self) -> &str {
        &self.manifest.config_hash
    }

    /// First line of every CSV output.
    pub fn csv_comment(&self) -> String {
        format!("config_hash={} command={}", self.hash(), self.manifest.command)
    }

    fn manifest_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}{MANIFEST_SUFFIX}", self.manifest.command))
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let path = self.manifest_path();
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.manifest.outputs.push(name.to_string());
        Ok(path)
    }

    /// JSON output with the config hash added at the top level.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(value).expect("output serializes");
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_hash".into(), serde_json::Value::String(self.hash().to_string()));
        }
        let text = serde_json::to_string_pretty(&v).expect("output serializes");
        self.write_file(name, text.as_bytes())
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.manifest.warnings.push(message);
    }

    /// Finalizes the manifest with the outcome of the command.
    pub fn finish(&mut self, result: &Result<(), CliError>) -> Result<(), CliError> {
        self.manifest.finished_unix_s = Some(unix_now());
        self.manifest.elapsed_s = Some(self.started.elapsed().as_secs_f64());
        match result {
            Ok(()) => {
                self.manifest.status = "ok".into();
                self.manifest.exit_code = Some(0);
            }
            Err(e) => {
                self.manifest.status = "failed".into();
                self.manifest.exit_code = Some(e.exit_code());
                self.manifest.message = Some(e.to_string());
            }
        }
        self.write_manifest()
    }
}
