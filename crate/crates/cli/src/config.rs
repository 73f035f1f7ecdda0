//! Key-value configuration files and environment defaults.
//!
//! Format: one `key = value` pair per line, `#` starts a comment. Keys
//! mirror the campaign flags. Values from a config file override flags,
//! and `DYMAX_OUT_DIR` supplies the directory for relative output paths.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::campaign::CampaignConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DYMAX_OUT_DIR";

/// Resolves a relative output path against `DYMAX_OUT_DIR` when set.
pub fn resolve_out_path(path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path,
    }
}

/// Applies a config file on top of an existing campaign configuration.
pub fn apply_config_file(cfg: &mut CampaignConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
        apply_pair(cfg, key.trim(), value.trim())
            .with_context(|| format!("line {}: bad value for `{}`", lineno + 1, key.trim()))?;
    }
    Ok(())
}

fn apply_pair(cfg: &mut CampaignConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "seed" => cfg.seed = value.parse()?,
        "trials" => cfg.trials = value.parse()?,
        "qs" => {
            cfg.qs = value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()?;
            if cfg.qs.is_empty() {
                bail!("empty q list");
            }
        }
        "min_depth" => cfg.min_depth = value.parse()?,
        "max_depth" => cfg.max_depth = value.parse()?,
        "exact" => cfg.exact = value.parse()?,
        "lambdas" => cfg.lambdas_per_fn = value.parse()?,
        "subsets" => cfg.subsets_per_fn = value.parse()?,
        "sym_grid" => cfg.sym_grid = value.parse()?,
        "tol" => cfg.tol_override = Some(value.parse()?),
        "out" => cfg.out = resolve_out_path(PathBuf::from(value)),
        other => bail!("unknown config key `{other}`"),
    }
    Ok(())
}
