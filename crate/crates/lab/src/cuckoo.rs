//! Cuckoo sandbox report featurization.
//!
//! A report is a JSON document whose behavioral section lays out as
//! `behavior -> processes[] -> calls[] -> api`. Only the API names are
//! extracted; arguments, ordering, timestamps, and counts are discarded.
//! Absent sections (no `behavior`, a process without `calls`, a call entry
//! without `api`) are tolerated and contribute nothing, but a section of
//! the wrong type is a malformed document and is rejected with its JSON
//! path. A report with no `behavior` section at all additionally raises the
//! `missing_behavior` flag so callers can warn.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{LabError, Result};

/// The API-call set extracted from one report, in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuckooReport {
    api_calls: Vec<String>,
    pub missing_behavior: bool,
}

impl CuckooReport {
    /// Unique API names in first-appearance order.
    pub fn api_calls(&self) -> &[String] {
        &self.api_calls
    }

    pub fn contains(&self, name: &str) -> bool {
        self.api_calls.iter().any(|n| n == name)
    }
}

/// The ordered feature vocabulary: API name `i` maps to feature bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVocabulary {
    names: Vec<String>,
}

impl FeatureVocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(LabError::format("vocabulary", "no names"));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(LabError::format(
                    "vocabulary",
                    format!("duplicate name {name:?}"),
                ));
            }
        }
        Ok(FeatureVocabulary { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Parses a vocabulary file: one API name per line, `#` comments and blank
/// lines ignored, duplicates rejected with their line number.
pub fn parse_vocab(text: &str, location: &str) -> Result<FeatureVocabulary> {
    let mut names = Vec::new();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen.insert(line.to_string()) {
            return Err(LabError::format(
                format!("{location}:{}", index + 1),
                format!("duplicate vocabulary name {line:?}"),
            ));
        }
        names.push(line.to_string());
    }
    if names.is_empty() {
        return Err(LabError::format(location, "vocabulary file has no names"));
    }
    FeatureVocabulary::new(names)
}

pub fn load_vocab(path: &Path) -> Result<FeatureVocabulary> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_vocab(&text, &path.display().to_string())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn wrong_type(location: &str, path: &str, expected: &str, got: &Value) -> LabError {
    LabError::format(
        format!("{location}: {path}"),
        format!("expected {expected}, found {}", type_name(got)),
    )
}

/// Extracts the API-call set from a report document.
pub fn parse_cuckoo_report(text: &str, location: &str) -> Result<CuckooReport> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        LabError::format(
            format!("{location}:{}:{}", e.line(), e.column()),
            format!("invalid JSON: {e}"),
        )
    })?;
    let Value::Object(map) = &root else {
        return Err(wrong_type(location, "root", "an object", &root));
    };

    let Some(behavior) = map.get("behavior") else {
        return Ok(CuckooReport {
            api_calls: Vec::new(),
            missing_behavior: true,
        });
    };
    let Value::Object(behavior) = behavior else {
        return Err(wrong_type(location, "behavior", "an object", behavior));
    };

    let mut api_calls = Vec::new();
    let mut seen = HashSet::new();
    if let Some(processes) = behavior.get("processes") {
        let Value::Array(processes) = processes else {
            return Err(wrong_type(
                location,
                "behavior.processes",
                "an array",
                processes,
            ));
        };
        for (p, process) in processes.iter().enumerate() {
            let Value::Object(process) = process else {
                return Err(wrong_type(
                    location,
                    &format!("behavior.processes[{p}]"),
                    "an object",
                    process,
                ));
            };
            let Some(calls) = process.get("calls") else {
                continue;
            };
            let Value::Array(calls) = calls else {
                return Err(wrong_type(
                    location,
                    &format!("behavior.processes[{p}].calls"),
                    "an array",
                    calls,
                ));
            };
            for (c, call) in calls.iter().enumerate() {
                let Value::Object(call) = call else {
                    return Err(wrong_type(
                        location,
                        &format!("behavior.processes[{p}].calls[{c}]"),
                        "an object",
                        call,
                    ));
                };
                let Some(api) = call.get("api") else {
                    continue;
                };
                let Value::String(api) = api else {
                    return Err(wrong_type(
                        location,
                        &format!("behavior.processes[{p}].calls[{c}].api"),
                        "a string",
                        api,
                    ));
                };
                if seen.insert(api.clone()) {
                    api_calls.push(api.clone());
                }
            }
        }
    }
    Ok(CuckooReport {
        api_calls,
        missing_behavior: false,
    })
}

pub fn load_report(path: &Path) -> Result<CuckooReport> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_cuckoo_report(&text, &path.display().to_string())
}

/// Presence-bit feature vector: bit `i` is 1 iff vocabulary name `i`
/// appears in the report. Out-of-vocabulary calls are ignored.
pub fn vectorize(report: &CuckooReport, vocab: &FeatureVocabulary) -> Vec<f64> {
    let present: HashSet<&str> = report.api_calls.iter().map(|s| s.as_str()).collect();
    vocab
        .names()
        .iter()
        .map(|name| f64::from(present.contains(name.as_str())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn fixture_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
    }

    #[test]
    fn collapses_duplicate_calls_into_a_set() {
        let text = r#"{"behavior": {"processes": [{"calls": [
            {"api": "CreateFile"}, {"api": "DeleteFile"}, {"api": "DeleteFile"}
        ]}]}}"#;
        let report = parse_cuckoo_report(text, "mem").unwrap();
        assert_eq!(report.api_calls(), ["CreateFile", "DeleteFile"]);
        assert!(!report.missing_behavior);
    }

    #[test]
    fn missing_behavior_yields_empty_set_with_warning_flag() {
        let report = parse_cuckoo_report(r#"{"info": {"id": 7}}"#, "mem").unwrap();
        assert!(report.api_calls().is_empty());
        assert!(report.missing_behavior);
    }

    #[test]
    fn tolerates_missing_calls_and_api_fields() {
        let text = r#"{"behavior": {"processes": [
            {"pid": 1},
            {"calls": [{"category": "system"}, {"api": "RegOpenKeyExW"}]}
        ]}}"#;
        let report = parse_cuckoo_report(text, "mem").unwrap();
        assert_eq!(report.api_calls(), ["RegOpenKeyExW"]);
    }

    #[test]
    fn rejects_malformed_documents_with_their_json_path() {
        let cases = [
            (r#"[1, 2]"#, "root"),
            (r#"{"behavior": 5}"#, "behavior"),
            (r#"{"behavior": {"processes": {}}}"#, "behavior.processes"),
            (
                r#"{"behavior": {"processes": [{"calls": 3}]}}"#,
                "behavior.processes[0].calls",
            ),
            (
                r#"{"behavior": {"processes": [{"calls": [{"api": 9}]}]}}"#,
                "behavior.processes[0].calls[0].api",
            ),
        ];
        for (text, path) in cases {
            let err = parse_cuckoo_report(text, "mem").unwrap_err();
            assert!(err.to_string().contains(path), "{path}: {err}");
        }
    }

    #[test]
    fn reports_json_syntax_errors_with_line_and_column() {
        let err = parse_cuckoo_report("{\n  \"behavior\": oops\n}", "r.json").unwrap_err();
        assert!(err.to_string().contains("r.json:2:"), "{err}");
    }

    #[test]
    fn fixtures_match_their_committed_expected_sets() {
        for (sub, name) in [
            ("malware", "dropper"),
            ("malware", "keylogger"),
            ("benign", "text_editor"),
        ] {
            let report =
                load_report(&fixture_dir().join("cuckoo").join(sub).join(format!("{name}.json")))
                    .unwrap();
            let expected_path = fixture_dir().join("cuckoo/expected").join(format!("{name}.txt"));
            let expected: Vec<String> = fs::read_to_string(&expected_path)
                .unwrap()
                .lines()
                .map(str::to_string)
                .collect();
            let mut got: Vec<String> = report.api_calls().to_vec();
            got.sort();
            assert_eq!(got, expected, "{name}");
            assert!(!report.missing_behavior, "{name}");

            // Re-parsing and re-vectorizing is stable.
            let vocab = load_vocab(&fixture_dir().join("vocab.txt")).unwrap();
            let again =
                load_report(&fixture_dir().join("cuckoo").join(sub).join(format!("{name}.json")))
                    .unwrap();
            assert_eq!(vectorize(&report, &vocab), vectorize(&again, &vocab));
        }
    }

    #[test]
    fn vectorize_maps_presence_bits_and_ignores_oov() {
        let vocab = FeatureVocabulary::new(vec![
            "CreateFile".into(),
            "RegSetValueExW".into(),
            "Sleep".into(),
        ])
        .unwrap();
        let report = parse_cuckoo_report(
            r#"{"behavior": {"processes": [{"calls": [
                {"api": "Sleep"}, {"api": "TotallyUnknownApi"}
            ]}]}}"#,
            "mem",
        )
        .unwrap();
        assert_eq!(vectorize(&report, &vocab), vec![0.0, 0.0, 1.0]);

        let empty = parse_cuckoo_report(r#"{"behavior": {}}"#, "mem").unwrap();
        assert_eq!(vectorize(&empty, &vocab), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_vocabulary_report_is_all_ones() {
        let vocab = load_vocab(&fixture_dir().join("vocab.txt")).unwrap();
        let calls: Vec<String> = vocab
            .names()
            .iter()
            .map(|n| format!(r#"{{"api": {n:?}}}"#))
            .collect();
        let text = format!(
            r#"{{"behavior": {{"processes": [{{"calls": [{}]}}]}}}}"#,
            calls.join(",")
        );
        let report = parse_cuckoo_report(&text, "mem").unwrap();
        let bits = vectorize(&report, &vocab);
        assert_eq!(bits.len(), 160);
        assert!(bits.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn vocab_parsing_rejects_duplicates_and_empty() {
        let err = parse_vocab("A\nB\n\n# comment\nA\n", "v.txt").unwrap_err();
        assert!(err.to_string().contains("v.txt:5"), "{err}");
        assert!(parse_vocab("# only comments\n", "v.txt").is_err());
        let ok = parse_vocab("  A  \n# x\nB\n", "v.txt").unwrap();
        assert_eq!(ok.names(), ["A", "B"]);
    }
}
