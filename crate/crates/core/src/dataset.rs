//! Dataset files on disk: a directory holding `manifest.json` plus one
//! scenario document per file under `scenarios/`. Loose scenario files and
//! JSONL bundles are accepted for import.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::catalog::{Dataset, DatasetManifest};
use crate::domain::{validate_scenario, validate_scenario_with, Scenario};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCENARIO_DIR: &str = "scenarios";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("NOT_FOUND: {0}")]
    NotFound(PathBuf),
    #[error("IO_ERROR: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("MALFORMED_SCENARIO: {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("INVALID_SCENARIO: {scenario_id}: {}", .violations.join("; "))]
    Invalid { scenario_id: String, violations: Vec<String> },
    #[error("DIGEST_MISMATCH: manifest pins {expected}, files hash to {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("DUPLICATE_SCENARIO: {0}")]
    Duplicate(String),
}

impl DatasetError {
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::NotFound(_) => "NOT_FOUND",
            DatasetError::Io { .. } => "IO_ERROR",
            DatasetError::Malformed { .. } => "MALFORMED_SCENARIO",
            DatasetError::Invalid { .. } => "INVALID_SCENARIO",
            DatasetError::DigestMismatch { .. } => "DIGEST_MISMATCH",
            DatasetError::Duplicate(_) => "DUPLICATE_SCENARIO",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

fn scenario_file(dir: &Path, id: &str) -> PathBuf {
    dir.join(SCENARIO_DIR).join(format!("{id}.json"))
}

/// Writes the manifest and one pretty-printed document per scenario.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(), DatasetError> {
    let scenarios = dir.join(SCENARIO_DIR);
    fs::create_dir_all(&scenarios).map_err(io_err(&scenarios))?;
    for s in &dataset.scenarios {
        let path = scenario_file(dir, &s.scenario_id);
        let text = serde_json::to_string_pretty(s).expect("scenario serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&dataset.manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

fn parse_scenario(path: &Path, text: &str) -> Result<Scenario, DatasetError> {
    serde_json::from_str(text).map_err(|e| DatasetError::Malformed { path: path.to_path_buf(), detail: e.to_string() })
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Reads scenarios from a dataset directory, a single scenario document, or
/// a `.jsonl` file with one scenario per line. No validation.
pub fn read_scenarios(path: &Path) -> Result<(Vec<Scenario>, Option<DatasetManifest>), DatasetError> {
    if !path.exists() {
        return Err(DatasetError::NotFound(path.to_path_buf()));
    }
    if path.is_dir() {
        let manifest_path = path.join(MANIFEST_FILE);
        if manifest_path.exists() {
            let text = read(&manifest_path)?;
            let manifest: DatasetManifest = serde_json::from_str(&text)
                .map_err(|e| DatasetError::Malformed { path: manifest_path.clone(), detail: e.to_string() })?;
            // Manifest order is authoritative: it pins the content digest.
            let scenarios = manifest
                .scenarios
                .iter()
                .map(|e| {
                    let p = scenario_file(path, &e.scenario_id);
                    if !p.exists() {
                        return Err(DatasetError::NotFound(p));
                    }
                    parse_scenario(&p, &read(&p)?)
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((scenarios, Some(manifest)));
        }
        let dir = if path.join(SCENARIO_DIR).is_dir() { path.join(SCENARIO_DIR) } else { path.to_path_buf() };
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let scenarios = files.iter().map(|p| parse_scenario(p, &read(p)?)).collect::<Result<_, _>>()?;
        return Ok((scenarios, None));
    }
    let text = read(path)?;
    if path.extension().is_some_and(|x| x == "jsonl") {
        let scenarios = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| DatasetError::Malformed {
                    path: path.to_path_buf(),
                    detail: format!("line {}: {e}", i + 1),
                })
            })
            .collect::<Result<_, _>>()?;
        return Ok((scenarios, None));
    }
    Ok((vec![parse_scenario(path, &text)?], None))
}

/// Loads and validates a dataset. A manifest, when present, must match the
/// files' content digest; otherwise one is built with seed 0 and an empty plan.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let (scenarios, manifest) = read_scenarios(path)?;
    let counts = manifest.as_ref().map(|m| m.option_counts).unwrap_or_default();
    let mut seen = std::collections::HashSet::new();
    for s in &scenarios {
        if !seen.insert(s.scenario_id.as_str()) {
            return Err(DatasetError::Duplicate(s.scenario_id.clone()));
        }
        // Imported files may use any option counts; only a manifest pins them.
        let report = match &manifest {
            Some(_) => validate_scenario_with(s, counts),
            None => validate_scenario(s),
        };
        if !report.is_valid() {
            return Err(DatasetError::Invalid {
                scenario_id: s.scenario_id.clone(),
                violations: report.violations.iter().map(|v| v.to_string()).collect(),
            });
        }
    }
    match manifest {
        Some(m) => {
            let rebuilt =
                Dataset::from_scenarios(scenarios, m.seed, m.plan.clone(), m.option_counts, m.catalog_digest.clone());
            if rebuilt.manifest.content_digest != m.content_digest {
                return Err(DatasetError::DigestMismatch {
                    expected: m.content_digest,
                    actual: rebuilt.manifest.content_digest,
                });
            }
            Ok(rebuilt)
        }
        None => Ok(Dataset::from_scenarios(scenarios, 0, Vec::new(), counts, String::new())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_dataset, PlanEntry, PreferenceCatalog};
    use crate::domain::OptionCounts;

    fn small() -> Dataset {
        let plan = PlanEntry::parse_plan("22:2,33:1").unwrap();
        generate_dataset(&PreferenceCatalog::builtin(), &plan, OptionCounts::default(), 3).unwrap()
    }

    #[test]
    fn round_trip_keeps_digest() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let d = small();
        write_dataset(dir, &d).unwrap();
        let back = load_dataset(dir).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn tampered_file_is_caught() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let d = small();
        write_dataset(dir, &d).unwrap();
        let mut s = d.scenarios[0].clone();
        s.description.push_str(" Also, I like trains.");
        fs::write(scenario_file(dir, &s.scenario_id), serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(load_dataset(dir).unwrap_err().code(), "DIGEST_MISMATCH");
    }

    #[test]
    fn imports_loose_files_and_jsonl() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let d = small();
        let lines: Vec<String> = d.scenarios.iter().map(|s| serde_json::to_string(s).unwrap()).collect();
        let bundle = dir.join("bundle.jsonl");
        fs::write(&bundle, lines.join("\n")).unwrap();
        assert_eq!(load_dataset(&bundle).unwrap().manifest.content_digest, d.manifest.content_digest);
        let one = dir.join("one.json");
        fs::write(&one, &lines[0]).unwrap();
        assert_eq!(load_dataset(&one).unwrap().scenarios.len(), 1);
        assert_eq!(load_dataset(&dir.join("missing")).unwrap_err().code(), "NOT_FOUND");
        fs::write(&one, "{\"scenario_id\": 3}").unwrap();
        assert_eq!(load_dataset(&one).unwrap_err().code(), "MALFORMED_SCENARIO");
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let mut s = small().scenarios.remove(0);
        s.aspects[0].options.retain(|o| o.label != crate::domain::Label::Best);
        let p = dir.join("bad.json");
        fs::write(&p, serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(load_dataset(&p).unwrap_err().code(), "INVALID_SCENARIO");
    }
}
