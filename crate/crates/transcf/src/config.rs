//! Flat `key=value` configuration files, run manifests and dataset
//! fingerprints.
//!
//! Manifests are themselves valid configuration files: every resolved
//! hyperparameter appears as a plain key, while informational entries use a
//! dotted prefix (`artifact.`, `dataset.`, `input.`, `output.`, `seeds.`)
//! that the configuration loader skips. Re-running a command with
//! `--config manifest.txt` therefore reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::trainer::{ProjectionCadence, TrainConfig};

/// Parses `key=value` lines. Blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, found {line:?}",
                idx + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for key {key:?}")))
}

/// Applies recognized configuration keys onto `cfg`. Dotted keys are
/// informational and skipped; any other unknown key is an error.
pub fn apply_config(cfg: &mut TrainConfig, map: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in map {
        if key.contains('.') {
            continue;
        }
        match key.as_str() {
            "variant" => cfg.variant = value.parse()?,
            "dim" => cfg.hyper.dim = parse_value(key, value)?,
            "learning_rate" => cfg.hyper.learning_rate = parse_value(key, value)?,
            "margin" => cfg.hyper.margin = parse_value(key, value)?,
            "lambda_nbr" => cfg.hyper.lambda_nbr = parse_value(key, value)?,
            "lambda_dist" => cfg.hyper.lambda_dist = parse_value(key, value)?,
            "epochs" => {
                cfg.hyper.epochs = parse_value(key, value)?;
                cfg.max_epochs = cfg.hyper.epochs;
            }
            "negatives_per_user" => cfg.hyper.negatives_per_user = parse_value(key, value)?,
            "batch_size" => cfg.hyper.batch_size = parse_value(key, value)?,
            "seed" => cfg.hyper.seed = parse_value(key, value)?,
            "early_stop_patience" => cfg.early_stop_patience = parse_value(key, value)?,
            "threads" => cfg.threads = parse_value(key, value)?,
            "projection_cadence" => {
                cfg.projection_cadence = match value.as_str() {
                    "per-epoch" => ProjectionCadence::PerEpoch,
                    "per-batch" => ProjectionCadence::PerBatch,
                    other => {
                        return Err(Error::Config(format!(
                            "projection_cadence must be per-epoch or per-batch, got {other:?}"
                        )))
                    }
                }
            }
            "strict_paper_projection" => cfg.strict_projection = parse_value(key, value)?,
            "stop_gradient_neighborhoods" => {
                cfg.stop_gradient_neighborhoods = parse_value(key, value)?
            }
            "include_empty_neighborhoods_in_reg" => {
                cfg.include_empty_neighborhoods_in_reg = parse_value(key, value)?
            }
            other => {
                return Err(Error::Config(format!("unknown configuration key {other:?}")));
            }
        }
    }
    Ok(())
}

/// Serializes the resolved training configuration as configuration keys.
pub fn config_keys(cfg: &TrainConfig) -> String {
    let h = &cfg.hyper;
    let cadence = match cfg.projection_cadence {
        ProjectionCadence::PerEpoch => "per-epoch",
        ProjectionCadence::PerBatch => "per-batch",
    };
    let mut out = String::new();
    let _ = writeln!(out, "variant={}", cfg.variant);
    let _ = writeln!(out, "dim={}", h.dim);
    let _ = writeln!(out, "learning_rate={}", h.learning_rate);
    let _ = writeln!(out, "margin={}", h.margin);
    let _ = writeln!(out, "lambda_nbr={}", h.lambda_nbr);
    let _ = writeln!(out, "lambda_dist={}", h.lambda_dist);
    let _ = writeln!(out, "epochs={}", cfg.max_epochs);
    let _ = writeln!(out, "negatives_per_user={}", h.negatives_per_user);
    let _ = writeln!(out, "batch_size={}", h.batch_size);
    let _ = writeln!(out, "seed={}", h.seed);
    let _ = writeln!(out, "early_stop_patience={}", cfg.early_stop_patience);
    let _ = writeln!(out, "threads={}", cfg.threads);
    let _ = writeln!(out, "projection_cadence={cadence}");
    let _ = writeln!(out, "strict_paper_projection={}", cfg.strict_projection);
    let _ = writeln!(out, "stop_gradient_neighborhoods={}", cfg.stop_gradient_neighborhoods);
    let _ = writeln!(
        out,
        "include_empty_neighborhoods_in_reg={}",
        cfg.include_empty_neighborhoods_in_reg
    );
    out
}

/// Counts plus a content hash identifying a dataset exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFingerprint {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub sha256: String,
}

impl DatasetFingerprint {
    pub fn manifest_lines(&self) -> String {
        format!(
            "dataset.users={}\ndataset.items={}\ndataset.interactions={}\ndataset.sha256={}\n",
            self.users, self.items, self.interactions, self.sha256
        )
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize())
}

/// Fingerprint of a split: counts from the train set, hash over a canonical
/// serialization of all three parts.
pub fn fingerprint_split(split: &SplitDataset) -> DatasetFingerprint {
    let mut hasher = Sha256::new();
    hasher.update(split.train.format_records(split.train.records()).as_bytes());
    for map in [&split.validation, &split.test] {
        for (&u, &i) in map {
            hasher.update(split.train.user_token(u).as_bytes());
            hasher.update(b"\t");
            hasher.update(split.train.item_token(i).as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"--\n");
    }
    DatasetFingerprint {
        users: split.train.n_users(),
        items: split.train.n_items(),
        interactions: split.train.n_interactions(),
        sha256: hex(&hasher.finalize()),
    }
}

/// Writes a manifest: informational header lines plus the full resolved
/// configuration.
pub fn write_manifest(
    path: impl AsRef<Path>,
    command: &str,
    info: &[(String, String)],
    cfg: Option<&TrainConfig>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "artifact.name=transcf");
    let _ = writeln!(out, "artifact.version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "artifact.command={command}");
    for (k, v) in info {
        let _ = writeln!(out, "{k}={v}");
    }
    if let Some(cfg) = cfg {
        out.push_str(&config_keys(cfg));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{HyperParams, Variant};

    #[test]
    fn key_value_round_trip_through_manifest_keys() {
        let mut cfg = TrainConfig::new(HyperParams::default(), Variant::TransCfDot);
        cfg.hyper.dim = 24;
        cfg.hyper.learning_rate = 0.025;
        cfg.strict_projection = true;
        cfg.projection_cadence = ProjectionCadence::PerBatch;
        let text = config_keys(&cfg);
        let map = parse_key_values(&text).unwrap();
        let mut rebuilt = TrainConfig::new(HyperParams::default(), Variant::TransCf);
        apply_config(&mut rebuilt, &map).unwrap();
        assert_eq!(rebuilt.variant, Variant::TransCfDot);
        assert_eq!(rebuilt.hyper.dim, 24);
        assert_eq!(rebuilt.hyper.learning_rate, 0.025);
        assert!(rebuilt.strict_projection);
        assert_eq!(rebuilt.projection_cadence, ProjectionCadence::PerBatch);
    }

    #[test]
    fn dotted_keys_are_informational() {
        let text = "dataset.sha256=abc\nvariant=cml\n# comment\n\n";
        let map = parse_key_values(text).unwrap();
        let mut cfg = TrainConfig::new(HyperParams::default(), Variant::TransCf);
        apply_config(&mut cfg, &map).unwrap();
        assert_eq!(cfg.variant, Variant::Cml);
    }

    #[test]
    fn unknown_plain_key_is_rejected() {
        let map = parse_key_values("learnign_rate=0.1\n").unwrap();
        let mut cfg = TrainConfig::new(HyperParams::default(), Variant::TransCf);
        assert!(apply_config(&mut cfg, &map).is_err());
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(parse_key_values("this has no equals sign\n").is_err());
    }

    #[test]
    fn fingerprint_changes_with_content() {
        let a = fingerprint_bytes(b"u1\ti1\n");
        let b = fingerprint_bytes(b"u1\ti2\n");
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
    }
}
