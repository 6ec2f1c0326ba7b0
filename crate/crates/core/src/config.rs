//! Run configuration: a TOML document with a top-level `protocol`, an
//! optional `constants_file`, and the sections `[pump]`, `[probe]`,
//! `[timing]`, `[vapor]`, `[relaxation]`, `[field]`, `[numerics]`,
//! `[sweep]` and `[output]`. Anything omitted takes the protocol default.
//!
//! Keys carry their unit as a suffix (`_hz`, `_s`, `_gauss`, `_cm3`,
//! `_torr`, `_k`, ...). A key whose stem is known but whose suffix differs is
//! always an error; other unknown keys are errors in strict mode and
//! warnings in lenient mode.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::atom::AtomConstants;
use crate::error::{Error, Result};
use crate::protocol::{ExperimentSpec, ProtocolKind};

/// Directory searched for bare config and constants file names.
pub const CONFIG_DIR_ENV: &str = "RBDECAY_CONFIG_DIR";

const UNIT_SUFFIXES: [&str; 11] = ["_hz_per_torr", "_gauss", "_torr", "_cm3", "_cm2", "_hz", "_mw", "_cm", "_mm", "_s", "_k"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// Fields for the field-independence run, gauss.
    pub b_z_values_gauss: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            b_z_values_gauss: vec![0.5e-3, 1e-3, 2e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Seed for the synthetic-noise utilities.
    pub seed: u64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub constants_file: Option<PathBuf>,
    pub constants: AtomConstants,
    pub spec: ExperimentSpec,
    pub sweep: SweepSpec,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn for_protocol(protocol: ProtocolKind) -> Self {
        Self {
            constants_file: None,
            constants: AtomConstants::default(),
            spec: ExperimentSpec::for_protocol(protocol),
            sweep: SweepSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.constants.validate()?;
        if self.sweep.b_z_values_gauss.is_empty() {
            return Err(Error::Constraint {
                name: "sweep.b_z_values_gauss".into(),
                message: "sweep list is empty".into(),
            });
        }
        if let Some(&b) = self.sweep.b_z_values_gauss.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Constraint {
                name: "sweep.b_z_values_gauss".into(),
                message: format!("fields must be > 0, got {b}"),
            });
        }
        Ok(())
    }

    /// The fully resolved configuration as TOML (constants inlined by path
    /// only).
    pub fn to_toml_string(&self) -> String {
        let mut t = defaults_table(&self.spec, &self.sweep, &self.output);
        if let Some(p) = &self.constants_file {
            t.insert("constants_file".into(), Value::String(p.display().to_string()));
        }
        toml::to_string(&t).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyMode {
    #[default]
    Strict,
    /// Unknown keys are logged and ignored.
    Lenient,
}

/// Parses a config; `base_dir` resolves a relative `constants_file`.
pub fn parse_config(text: &str, mode: KeyMode, base_dir: Option<&Path>) -> Result<RunConfig> {
    let mut user: Table = text.parse::<Table>().map_err(|e| toml_error(text, e))?;
    let protocol = match user.get("protocol") {
        None => ProtocolKind::A,
        Some(Value::String(s)) => s.parse()?,
        Some(_) => {
            let (line, column) = locate_key(text, "protocol");
            return Err(Error::ConfigParse {
                line,
                column,
                message: "`protocol` must be a string".into(),
            });
        }
    };
    let mut merged = defaults_table(&ExperimentSpec::for_protocol(protocol), &SweepSpec::default(), &OutputSpec::default());
    merged.insert("constants_file".into(), Value::String(String::new()));
    check_keys(text, &mut user, &merged, "", mode)?;
    merge(&mut merged, user);

    let constants_file = match merged.remove("constants_file") {
        Some(Value::String(s)) if !s.is_empty() => Some(resolve_file(Path::new(&s), base_dir)?),
        _ => None,
    };
    let constants = match &constants_file {
        Some(p) => AtomConstants::load(p)?,
        None => AtomConstants::default(),
    };
    let sweep: SweepSpec = take_section(text, &mut merged, "sweep")?;
    let output: OutputSpec = take_section(text, &mut merged, "output")?;
    let spec: ExperimentSpec = Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::ConfigParse {
        line: 0,
        column: 0,
        message: e.message().to_string(),
    })?;
    let cfg = RunConfig {
        constants_file,
        constants,
        spec,
        sweep,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, mode: KeyMode) -> Result<RunConfig> {
    let path = resolve_file(path, None)?;
    let text = std::fs::read_to_string(&path)?;
    parse_config(&text, mode, path.parent())
}

/// Finds `path` as given, then relative to `base_dir`, then in
/// `$RBDECAY_CONFIG_DIR` (also trying a `.toml` extension there).
pub fn resolve_file(path: &Path, base_dir: Option<&Path>) -> Result<PathBuf> {
    let mut candidates = Vec::new();
    if path.is_absolute() {
        candidates.push(path.to_path_buf());
    } else {
        if let Some(b) = base_dir {
            candidates.push(b.join(path));
        }
        candidates.push(path.to_path_buf());
        if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
            let dir = PathBuf::from(dir);
            candidates.push(dir.join(path));
            candidates.push(dir.join(path).with_extension("toml"));
        }
    }
    candidates
        .into_iter()
        .find(|p| p.is_file())
        .ok_or_else(|| Error::MissingFile(path.to_path_buf()))
}

fn defaults_table(spec: &ExperimentSpec, sweep: &SweepSpec, output: &OutputSpec) -> Table {
    let mut t = Table::try_from(spec).expect("spec serializes");
    t.insert("sweep".into(), Value::try_from(sweep).expect("sweep serializes"));
    t.insert("output".into(), Value::try_from(output).expect("output serializes"));
    t
}

fn take_section<T: serde::de::DeserializeOwned>(text: &str, t: &mut Table, name: &str) -> Result<T> {
    let v = t.remove(name).unwrap_or_else(|| Value::Table(Table::new()));
    v.try_into().map_err(|e: toml::de::Error| {
        let (line, column) = locate_key(text, name);
        Error::ConfigParse {
            line,
            column,
            message: format!("[{name}]: {}", e.message()),
        }
    })
}

fn unit_stem(key: &str) -> (&str, &str) {
    UNIT_SUFFIXES
        .iter()
        .find_map(|s| key.strip_suffix(s).filter(|stem| !stem.is_empty()).map(|stem| (stem, *s)))
        .unwrap_or((key, ""))
}

fn check_keys(text: &str, user: &mut Table, known: &Table, prefix: &str, mode: KeyMode) -> Result<()> {
    let keys: Vec<String> = user.keys().cloned().collect();
    for key in keys {
        let path = format!("{prefix}{key}");
        match known.get(&key) {
            Some(Value::Table(sub)) => {
                if let Some(Value::Table(u)) = user.get_mut(&key) {
                    check_keys(text, u, sub, &format!("{path}."), mode)?;
                }
            }
            Some(_) => {}
            None => {
                let (stem, _) = unit_stem(&key);
                if let Some(expected) = known.keys().find_map(|k| {
                    let (s, suffix) = unit_stem(k);
                    (s == stem && !suffix.is_empty()).then(|| suffix.to_string())
                }) {
                    return Err(Error::UnitMismatch { key: path, expected });
                }
                match mode {
                    KeyMode::Strict => {
                        let (line, column) = locate_key(text, &key);
                        return Err(Error::UnknownKey { key: path, line, column });
                    }
                    KeyMode::Lenient => {
                        log::warn!("ignoring unknown config key `{path}`");
                        user.remove(&key);
                    }
                }
            }
        }
    }
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// First line where `key` appears as an assignment or section name.
fn locate_key(text: &str, key: &str) -> (usize, usize) {
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        let is_assign = trimmed
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='));
        let is_section = trimmed.trim_start_matches('[').trim_end().trim_end_matches(']').rsplit('.').next() == Some(key)
            && trimmed.starts_with('[');
        if is_assign || is_section {
            return (i + 1, indent + 1);
        }
    }
    (0, 0)
}

/// Maps a TOML error to a parse error with 1-based line and column.
pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let (line, column) = match e.span() {
        Some(span) => line_col(text, span.start),
        None => (0, 0),
    };
    Error::ConfigParse {
        line,
        column,
        message: e.message().to_string(),
    }
}

pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("protocol = \"A\"\n", KeyMode::Strict, None).unwrap();
        assert_eq!(cfg.spec, ExperimentSpec::for_protocol(ProtocolKind::A));
        assert_eq!(cfg.sweep, SweepSpec::default());
    }

    #[test]
    fn partial_sections_merge() {
        let text = "protocol = \"C\"\n[field]\nb_z_gauss = 2e-3\n[pump]\npower_mw = 0.8\n";
        let cfg = parse_config(text, KeyMode::Strict, None).unwrap();
        assert_eq!(cfg.spec.field.b_z_gauss, 2e-3);
        assert_eq!(cfg.spec.pump.power_mw, 0.8);
        assert_eq!(cfg.spec.pump.f_ground, 2);
    }

    #[test]
    fn zero_density_names_the_constraint() {
        let text = "protocol = \"A\"\n[vapor]\ndensities_cm3 = [0.0]\n";
        match parse_config(text, KeyMode::Strict, None) {
            Err(Error::Constraint { name, .. }) => assert_eq!(name, "vapor.densities_cm3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = "protocol = \"A\"\n[vapor]\ncolour = 3\n";
        match parse_config(text, KeyMode::Strict, None) {
            Err(Error::UnknownKey { key, line, column }) => {
                assert_eq!((key.as_str(), line, column), ("vapor.colour", 3, 1));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config(text, KeyMode::Lenient, None).is_ok());
    }

    #[test]
    fn wrong_unit_suffix_is_rejected_in_both_modes() {
        let text = "[relaxation]\ngamma0_s = 50.0\n";
        for mode in [KeyMode::Strict, KeyMode::Lenient] {
            match parse_config(text, mode, None) {
                Err(Error::UnitMismatch { key, expected }) => {
                    assert_eq!(key, "relaxation.gamma0_s");
                    assert_eq!(expected, "_hz");
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_config("protocol = \"A\"\n[vapor\n", KeyMode::Strict, None) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::for_protocol(ProtocolKind::B);
        cfg.spec.vapor.densities_cm3 = vec![1e11, 5e11];
        cfg.output.seed = 7;
        let back = parse_config(&cfg.to_toml_string(), KeyMode::Strict, None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_constants_file() {
        let text = "constants_file = \"does_not_exist.toml\"\n";
        assert!(matches!(parse_config(text, KeyMode::Strict, None), Err(Error::MissingFile(_))));
    }
}
