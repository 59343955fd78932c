//! JSON-lines dataset index: one `{id, path, label, session, speaker}` object
//! per line, paths relative to the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::labels::{map_label, MappedLabel, IEMOCAP_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub id: String,
    pub path: String,
    pub label: String,
    pub session: u32,
    pub speaker: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<UtteranceRecord>,
    /// Defines label indices.
    pub class_names: Vec<String>,
    /// Directory that record paths are relative to.
    pub root: PathBuf,
}

impl Manifest {
    /// Builds a manifest, checking ids, sessions and labels. Without explicit
    /// `classes` the IEMOCAP order is used when every label belongs to it,
    /// otherwise labels are indexed in order of first appearance.
    pub fn new(
        records: Vec<UtteranceRecord>,
        classes: Option<Vec<String>>,
        root: impl Into<PathBuf>,
    ) -> Result<Self> {
        let class_names = match classes {
            Some(c) => c,
            None => infer_classes(&records),
        };
        if class_names.is_empty() {
            return Err(Error::input("manifest has no classes"));
        }
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::input(format!("duplicate utterance id '{}'", r.id)));
            }
            if r.session == 0 {
                return Err(Error::input(format!("utterance '{}' has session 0", r.id)));
            }
            if !class_names.contains(&r.label) {
                return Err(Error::input(format!(
                    "utterance '{}' has label '{}' outside {:?}",
                    r.id, r.label, class_names
                )));
            }
        }
        Ok(Manifest {
            records,
            class_names,
            root: root.into(),
        })
    }

    /// Reads a JSONL manifest and checks that every feature path exists.
    pub fn load(path: impl AsRef<Path>, classes: Option<Vec<String>>) -> Result<Self> {
        let path = path.as_ref();
        let records = read_records(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = Manifest::new(records, classes, root)?;
        for r in &manifest.records {
            let p = manifest.resolve(r);
            if !p.is_file() {
                return Err(Error::input(format!(
                    "feature file for '{}' not found: {}",
                    r.id,
                    p.display()
                )));
            }
        }
        Ok(manifest)
    }

    /// Like [`Manifest::load`] but first maps raw IEMOCAP annotations onto the
    /// four-class set, dropping discarded utterances.
    pub fn load_iemocap(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut records = Vec::new();
        for mut r in read_records(path)? {
            if let MappedLabel::Class(c) = map_label(&r.label)? {
                r.label = c.to_string();
                records.push(r);
            }
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let classes = IEMOCAP_CLASSES.iter().map(|s| s.to_string()).collect();
        let manifest = Manifest::new(records, Some(classes), root)?;
        for r in &manifest.records {
            if !manifest.resolve(r).is_file() {
                return Err(Error::input(format!("feature file for '{}' not found", r.id)));
            }
        }
        Ok(manifest)
    }

    pub fn resolve(&self, record: &UtteranceRecord) -> PathBuf {
        self.root.join(&record.path)
    }

    pub fn label_index(&self, record: &UtteranceRecord) -> usize {
        self.class_names
            .iter()
            .position(|c| *c == record.label)
            .expect("labels validated at construction")
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| self.label_index(r)).collect()
    }

    pub fn sessions(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.records.iter().map(|r| r.session).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

fn infer_classes(records: &[UtteranceRecord]) -> Vec<String> {
    if !records.is_empty()
        && records
            .iter()
            .all(|r| IEMOCAP_CLASSES.contains(&r.label.as_str()))
    {
        return IEMOCAP_CLASSES.iter().map(|s| s.to_string()).collect();
    }
    let mut classes: Vec<String> = Vec::new();
    for r in records {
        if !classes.contains(&r.label) {
            classes.push(r.label.clone());
        }
    }
    classes
}

fn read_records(path: &Path) -> Result<Vec<UtteranceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: UtteranceRecord = serde_json::from_str(line).map_err(|e| {
            Error::input(format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}
