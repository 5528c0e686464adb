//! CSV manifests with header `path,label,video_id`, one frame per row.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const HEADER: [&str; 3] = ["path", "label", "video_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    /// 1 = smoke, 0 = non-smoke.
    pub label: u8,
    pub video_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Data("empty manifest".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.label > 1 {
                return Err(Error::Data(format!(
                    "{}: label {} is not 0 or 1",
                    e.path.display(),
                    e.label
                )));
            }
            if !seen.insert(&e.path) {
                return Err(Error::Data(format!("duplicate path {}", e.path.display())));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn video_ids(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.video_id.as_str()).collect()
    }
}

/// Reads a manifest; relative paths are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);

    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(err(
            1,
            format!(
                "expected header '{}', found '{}'",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut entries = Vec::new();
    let mut first_line: HashMap<PathBuf, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let (raw, label, video_id) = (&record[0], &record[1], &record[2]);
        if raw.is_empty() {
            return Err(err(line, "empty path".into()));
        }
        let label = match label {
            "0" => 0,
            "1" => 1,
            other => return Err(err(line, format!("label '{other}' is not 0 or 1"))),
        };
        if video_id.is_empty() {
            return Err(err(line, "empty video_id".into()));
        }
        let resolved = base.join(raw);
        if let Some(first) = first_line.insert(resolved.clone(), line) {
            return Err(err(
                line,
                format!("duplicate path '{raw}' (first on line {first})"),
            ));
        }
        entries.push(ManifestEntry {
            path: resolved,
            label,
            video_id: video_id.to_string(),
        });
    }
    if entries.is_empty() {
        return Err(Error::Data(format!("{}: empty manifest", path.display())));
    }
    Ok(Manifest { entries })
}
