//! Reading a model (and its settings) from disk.

use std::fs;
use std::path::{Path, PathBuf};

use hyra::io::{parse_config, parse_spaceex, read_json, ModelBundle, SourceFormat};
use hyra::ir::HybridAutomaton;

use crate::Failure;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: cannot read: {e}", path.display())))
}

/// `path:line:col: msg` when the message starts with a position,
/// `path: msg` otherwise.
fn at(path: &Path, e: impl std::fmt::Display) -> Failure {
    let msg = e.to_string();
    let sep = if msg.starts_with(|c: char| c.is_ascii_digit()) {
        ":"
    } else {
        ": "
    };
    Failure::Input(format!("{}{sep}{msg}", path.display()))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Config next to a SpaceEx model: `<stem>.cfg`, then `config.cfg`.
fn sibling_config(model: &Path) -> Option<PathBuf> {
    let dir = model.parent().unwrap_or(Path::new("."));
    let by_stem = model.with_extension("cfg");
    [by_stem, dir.join("config.cfg")].into_iter().find(|p| p.is_file())
}

/// Parses only the automaton.
pub fn automaton(model: &Path) -> Result<HybridAutomaton, Failure> {
    let text = read(model)?;
    if is_json(model) {
        read_json(&text).map(|b| b.automaton).map_err(|e| at(model, e))
    } else {
        parse_spaceex(&text).map_err(|e| at(model, e))
    }
}

/// Model plus settings. JSON models carry their own settings; a SpaceEx
/// model takes `cfg`, or a config file found next to it.
pub fn bundle(model: &Path, cfg: Option<&Path>) -> Result<ModelBundle, Failure> {
    if is_json(model) {
        let text = read(model)?;
        let b = read_json(&text).map_err(|e| at(model, e))?;
        if cfg.is_some() {
            eprintln!("note: settings are taken from the JSON model; the config file is ignored");
        }
        return Ok(b);
    }
    let aut = automaton(model)?;
    let cfg_path = match cfg {
        Some(p) => p.to_path_buf(),
        None => sibling_config(model).ok_or_else(|| {
            Failure::Input(format!(
                "{}: no configuration given and none found next to the model",
                model.display()
            ))
        })?,
    };
    let text = read(&cfg_path)?;
    let c = parse_config(&text, &aut).map_err(|e| at(&cfg_path, e))?;
    let b = ModelBundle {
        automaton: aut,
        settings: c.settings,
        initial: c.initial,
        source_format: SourceFormat::Spaceex,
    };
    b.check().map_err(|e| at(model, e))?;
    Ok(b)
}
