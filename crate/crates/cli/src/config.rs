//! Flat TOML config, merged under command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kahler_core::report::Settings;

use crate::{AppError, Common};

pub const OUT_DIR_ENV: &str = "KAHLER_OUT_DIR";

pub struct Resolved {
    pub settings: Settings,
    pub out_dir: PathBuf,
}

fn number(key: &str, v: &toml::Value) -> Result<f64, AppError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(AppError::Config(format!("{key}: expected a number"))),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize, AppError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(AppError::Config(format!(
            "{key}: expected a non-negative integer"
        ))),
    }
}

/// Applies one `key = value` pair; `tol.<claim>` keys set tolerances.
fn apply(
    s: &mut Settings,
    out_dir: &mut Option<PathBuf>,
    key: &str,
    v: &toml::Value,
) -> Result<(), AppError> {
    if let Some(claim) = key.strip_prefix("tol.") {
        if let toml::Value::Table(t) = v {
            for (k, inner) in t {
                apply(s, out_dir, &format!("{key}.{k}"), inner)?;
            }
            return Ok(());
        }
        s.tolerances.insert(claim.to_string(), number(key, v)?);
        return Ok(());
    }
    // an unquoted `tol.a.b = x` arrives as nested tables
    if key == "tol" {
        let toml::Value::Table(t) = v else {
            return Err(AppError::Config("tol: expected a table".into()));
        };
        for (k, inner) in t {
            apply(s, out_dir, &format!("tol.{k}"), inner)?;
        }
        return Ok(());
    }
    match key {
        "seed" => s.seed = count(key, v)? as u64,
        "random_states" => s.random_states = count(key, v)?,
        "family_alphas" => s.family_alphas = count(key, v)?,
        "family_states" => s.family_states = count(key, v)?,
        "quadrature_order" => s.quadrature_order = count(key, v)?,
        "grid_n" => s.grid_n = count(key, v)?,
        "fd_step" => s.fd_step = number(key, v)?,
        "closedness_step" => s.closedness_step = number(key, v)?,
        "pde_step" => s.pde_step = number(key, v)?,
        "flow_length" => s.flow_length = number(key, v)?,
        "flow_step" => s.flow_step = number(key, v)?,
        "order_step" => s.order_step = number(key, v)?,
        "symplectic_fd_step" => s.symplectic_fd_step = number(key, v)?,
        "grid_lo" => s.grid_lo = number(key, v)?,
        "grid_hi" => s.grid_hi = number(key, v)?,
        "energy_length" => s.energy_length = number(key, v)?,
        "energy_u" => s.energy_u = number(key, v)?,
        "out_dir" => match v {
            toml::Value::String(p) => *out_dir = Some(PathBuf::from(p)),
            _ => return Err(AppError::Config("out_dir: expected a string".into())),
        },
        "tolerances" => match v {
            toml::Value::Table(t) => {
                for (claim, tv) in t {
                    s.tolerances.insert(claim.clone(), number(claim, tv)?);
                }
            }
            _ => return Err(AppError::Config("tolerances: expected a table".into())),
        },
        other => return Err(AppError::Config(format!("unknown config key {other:?}"))),
    }
    Ok(())
}

pub fn load_file(path: &Path) -> Result<BTreeMap<String, toml::Value>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    Ok(table.into_iter().collect())
}

fn parse_tol(spec: &str) -> Result<(String, f64), AppError> {
    let (claim, value) = spec
        .split_once('=')
        .ok_or_else(|| AppError::Config(format!("--tol expects CLAIM=VALUE, got {spec:?}")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| AppError::Config(format!("--tol {spec:?}: bad number")))?;
    Ok((claim.trim().to_string(), value))
}

/// Defaults, then the config file, then `KAHLER_OUT_DIR`, then flags.
pub fn resolve(common: &Common) -> Result<Resolved, AppError> {
    let mut settings = Settings::default();
    let mut out_dir = None;
    if let Some(path) = &common.config {
        for (k, v) in load_file(path)? {
            apply(&mut settings, &mut out_dir, &k, &v)?;
        }
    }
    if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        out_dir = Some(PathBuf::from(env));
    }
    if let Some(seed) = common.seed {
        settings.seed = seed;
    }
    for spec in &common.tol {
        let (claim, v) = parse_tol(spec)?;
        settings.tolerances.insert(claim, v);
    }
    if let Some(dir) = &common.out_dir {
        out_dir = Some(dir.clone());
    }
    settings
        .validate()
        .map_err(|e| AppError::Config(e.to_string()))?;
    Ok(Resolved {
        settings,
        out_dir: out_dir.unwrap_or_else(|| PathBuf::from("kahler-out")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_specs() {
        assert_eq!(parse_tol("lem1=1e-9").unwrap(), ("lem1".into(), 1e-9));
        assert!(parse_tol("lem1").is_err());
        assert!(parse_tol("lem1=x").is_err());
    }

    #[test]
    fn keys_apply() {
        let mut s = Settings::default();
        let mut out = None;
        apply(&mut s, &mut out, "seed", &toml::Value::Integer(7)).unwrap();
        apply(&mut s, &mut out, "tol.pro40.G", &toml::Value::Float(1e-9)).unwrap();
        apply(&mut s, &mut out, "grid_lo", &toml::Value::Integer(-3)).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.tolerances["pro40.G"], 1e-9);
        assert_eq!(s.grid_lo, -3.0);
        let nested: toml::Table = "tol.pro40.H = 1e-8".parse().unwrap();
        for (k, v) in &nested {
            apply(&mut s, &mut out, k, v).unwrap();
        }
        assert_eq!(s.tolerances["pro40.H"], 1e-8);
        assert!(apply(&mut s, &mut out, "bogus", &toml::Value::Integer(1)).is_err());
        assert!(apply(&mut s, &mut out, "seed", &toml::Value::Float(1.5)).is_err());
    }
}
