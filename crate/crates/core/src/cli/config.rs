//! TOML run configuration layered over the built-in defaults.
//!
//! A file must name a `method`; everything else is optional. The top-level
//! `defaults` key picks the base layer (`"desk"`, the default, or
//! `"protocol"` for the full-size population and learning settings). Tables
//! such as `[arena]` and `[autoencoder]` override individual fields.

use std::path::Path;

use crate::autoencoder::AutoencoderSpec;
use crate::envs::{ArenaSpec, EnvKind};
use crate::error::{Result, TaxonsError};
use crate::taxons::{Method, SearchConfig};

fn config_err(origin: &str, msg: impl std::fmt::Display) -> TaxonsError {
    TaxonsError::Config(format!("{origin}: {msg}"))
}

/// Recursively overlays `top` onto `base`. Tables merge key by key; any other
/// value replaces what was there.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<SearchConfig> {
    let mut table: toml::Table = text.parse().map_err(|e| config_err(origin, e))?;
    let method: Method = match table.remove("method") {
        Some(toml::Value::String(s)) => s.parse().map_err(|e| config_err(origin, e))?,
        Some(other) => {
            return Err(config_err(
                origin,
                format!("key `method` must be a string, got {}", other.type_str()),
            ))
        }
        None => return Err(config_err(origin, "missing required key `method`")),
    };
    let env = match table.get("env") {
        Some(toml::Value::String(s)) => EnvKind::parse(s)
            .ok_or_else(|| config_err(origin, format!("key `env`: unknown environment `{s}`")))?,
        Some(other) => {
            return Err(config_err(origin, format!("key `env` must be a string, got {}", other.type_str())))
        }
        None => EnvKind::Maze,
    };
    let mut base = match table.remove("defaults") {
        None => SearchConfig::desk(method, env),
        Some(toml::Value::String(s)) if s == "desk" => SearchConfig::desk(method, env),
        Some(toml::Value::String(s)) if s == "protocol" => SearchConfig::new(method, env),
        Some(other) => {
            return Err(config_err(
                origin,
                format!("key `defaults` must be \"desk\" or \"protocol\", got {other}"),
            ))
        }
    };
    base.arena = ArenaSpec::default_for(env);
    if let Some(size) = table.get("observation_size").and_then(toml::Value::as_integer) {
        if let Ok(size) = usize::try_from(size) {
            base.autoencoder = AutoencoderSpec::for_size(size);
        }
    }
    let mut merged = match toml::Value::try_from(&base).map_err(|e| config_err(origin, e))? {
        toml::Value::Table(t) => t,
        _ => unreachable!("a struct serializes to a table"),
    };
    merge(&mut merged, table);
    merged.insert("method".into(), toml::Value::String(method.name().into()));
    let cfg: SearchConfig = toml::Value::Table(merged)
        .try_into()
        .map_err(|e| config_err(origin, e))?;
    cfg.validate().map_err(|e| config_err(origin, e))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SearchConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| TaxonsError::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_desk_defaults() {
        let c = parse_config("method = \"TAXONS\"", "t").unwrap();
        assert_eq!(c, SearchConfig::desk(Method::Taxons, EnvKind::Maze));
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
method = "NS"
defaults = "protocol"
seed = 9
budget = 12
[arena]
robot_radius = 0.3
"#;
        let c = parse_config(text, "t").unwrap();
        assert_eq!(c.population, 100);
        assert_eq!((c.seed, c.budget), (9, 12));
        assert_eq!(c.arena.robot_radius, 0.3);
        assert_eq!(c.arena.walls, ArenaSpec::maze().walls);
    }

    #[test]
    fn missing_method_is_named() {
        let err = parse_config("seed = 1", "cfg.toml").unwrap_err().to_string();
        assert!(err.contains("`method`"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("method = \"RS\"\npopulaton = 4", "t").unwrap_err().to_string();
        assert!(err.contains("populaton"), "{err}");
    }

    #[test]
    fn env_switch_picks_matching_arena() {
        let c = parse_config("method = \"NS\"\nenv = \"disk_push\"", "t").unwrap();
        assert_eq!(c.arena, ArenaSpec::disk_push());
    }

    #[test]
    fn observation_size_selects_autoencoder() {
        let c = parse_config("method = \"TAXONS\"\nobservation_size = 64", "t").unwrap();
        assert_eq!(c.autoencoder, AutoencoderSpec::full());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_config("method = \"RS\"\nbest = 50", "t").is_err());
        assert!(parse_config("method = \"XYZ\"", "t").is_err());
    }
}
