//! Batch feature extraction over a manifest, feature CSVs and the on-disk cache.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::UNIX_EPOCH;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::Manifest;
use crate::baseline::{enhance_with, EnhanceParams, Method};
use crate::error::{Error, Result};
use crate::features::{gmlog_features, GmLogParams};
use crate::image::{load_image, resize, rgb_to_gray, PlanarImage};

/// Everything that determines a frame's feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub enhance: EnhanceParams,
    pub gmlog: GmLogParams,
    /// Frames are resized to this size before enhancement.
    pub frame_width: usize,
    pub frame_height: usize,
    /// A batch is aborted when more than this fraction of its images fail.
    pub max_failure_fraction: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            enhance: EnhanceParams::default(),
            gmlog: GmLogParams::default(),
            frame_width: 427,
            frame_height: 240,
            max_failure_fraction: 0.01,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.enhance.baseline.validate()?;
        self.enhance.fc.wls.validate()?;
        self.gmlog.validate()?;
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::invalid("frame size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(Error::invalid("max_failure_fraction must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: PathBuf,
    pub label: u8,
    pub values: Vec<f64>,
}

/// Rows in manifest order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// `image_path,label,f0,...` with shortest round-trip float formatting.
    pub fn to_csv(&self) -> Result<String> {
        let dim = self.rows.first().map_or(0, |r| r.values.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["image_path".to_string(), "label".to_string()];
        header.extend((0..dim).map(|i| format!("f{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            if row.values.len() != dim {
                return Err(Error::invalid("feature rows differ in length"));
            }
            let mut rec = vec![row.path.to_string_lossy().into_owned(), row.label.to_string()];
            rec.extend(row.values.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::Reader::from_reader(file);
        let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
        let dim = header.len().saturating_sub(2);
        let expected = ["image_path", "label"]
            .into_iter()
            .map(String::from)
            .chain((0..dim).map(|i| format!("f{i}")));
        if dim == 0 || header.iter().ne(expected) {
            return Err(err(1, "expected header image_path,label,f0,f1,...".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                err(
                    e.position().map_or(0, |p| p.line()),
                    format!("malformed row: {e}"),
                )
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let label = match &record[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(err(line, format!("label '{other}' is not 0 or 1"))),
            };
            let values = record
                .iter()
                .skip(2)
                .map(|s| match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(err(line, format!("bad feature value '{s}'"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow {
                path: PathBuf::from(&record[0]),
                label,
                values,
            });
        }
        if rows.is_empty() {
            return Err(Error::Data(format!("{}: no feature rows", path.display())));
        }
        Ok(Self { rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

#[derive(Debug)]
pub struct ImageFailure {
    pub path: PathBuf,
    pub error: Error,
}

#[derive(Debug)]
pub struct Extraction {
    pub table: FeatureTable,
    /// Images excluded from `table`.
    pub failures: Vec<ImageFailure>,
    pub cache_hits: usize,
}

/// Decodes a frame and resizes it to the pipeline's frame size.
pub fn load_frame(path: &Path, params: &PipelineParams) -> Result<PlanarImage> {
    resize(&load_image(path)?, params.frame_width, params.frame_height)
}

/// Features of one decoded frame.
pub fn frame_features(frame: &PlanarImage, method: Method, params: &PipelineParams) -> Result<Vec<f64>> {
    let enhanced = enhance_with(frame, method, &params.enhance)?;
    Ok(gmlog_features(&rgb_to_gray(&enhanced)?, &params.gmlog)?.into_values())
}

/// Successes tagged with their manifest index, and the failures.
pub(crate) type Mapped<T> = (Vec<(usize, T)>, Vec<ImageFailure>);

/// Runs `work` on every manifest entry in parallel, keeping manifest order.
/// Fails only when more than `max_failure_fraction` of the entries fail.
pub(crate) fn map_entries<T: Send>(
    manifest: &Manifest,
    max_failure_fraction: f64,
    work: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Mapped<T>> {
    let results: Vec<Result<T>> = manifest.entries().par_iter().map(|e| work(&e.path)).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push((i, v)),
            Err(error) => {
                let path = manifest.entries()[i].path.clone();
                log::warn!("skipping {}: {error}", path.display());
                failures.push(ImageFailure { path, error });
            }
        }
    }
    let n = manifest.len();
    if failures.len() as f64 > max_failure_fraction * n as f64 {
        let first = failures.swap_remove(0);
        if let Error::Convergence { .. } = first.error {
            return Err(first.error);
        }
        return Err(Error::Data(format!(
            "{} of {n} images failed (limit {:.1}%); first: {}: {}",
            failures.len() + 1,
            100.0 * max_failure_fraction,
            first.path.display(),
            first.error
        )));
    }
    Ok((ok, failures))
}

/// Extracts the feature table of a manifest, serving unchanged images from
/// `cache` when one is given.
pub fn extract_dataset_features(
    manifest: &Manifest,
    method: Method,
    params: &PipelineParams,
    cache: Option<&FeatureCache>,
) -> Result<Extraction> {
    params.validate()?;
    let config = config_key(method, params)?;
    let cached = cache
        .map(|c| c.load(&config, params.gmlog.dim()))
        .unwrap_or_default();

    let (done, failures) = map_entries(manifest, params.max_failure_fraction, |path| {
        let key = entry_key(&config, path)?;
        if let Some(v) = cached.get(&key) {
            return Ok((key, v.clone(), true));
        }
        let values = frame_features(&load_frame(path, params)?, method, params)?;
        Ok((key, values, false))
    })?;

    let mut fresh = Vec::new();
    let mut rows = Vec::with_capacity(done.len());
    let mut cache_hits = 0;
    for (i, (key, values, hit)) in done {
        let entry = &manifest.entries()[i];
        if hit {
            cache_hits += 1;
        } else {
            fresh.push((key, values.clone()));
        }
        rows.push(FeatureRow {
            path: entry.path.clone(),
            label: entry.label,
            values,
        });
    }
    if let Some(c) = cache {
        if !fresh.is_empty() {
            if let Err(e) = c.store(&config, &fresh) {
                log::warn!("feature cache not updated: {e}");
            }
        }
    }
    log::info!(
        "{method}: {} images, {cache_hits} from cache, {} failed",
        rows.len(),
        failures.len()
    );
    Ok(Extraction {
        table: FeatureTable { rows },
        failures,
        cache_hits,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the method and every parameter that affects features.
fn config_key(method: Method, params: &PipelineParams) -> Result<String> {
    let json = serde_json::to_string(&(
        method,
        &params.enhance,
        &params.gmlog,
        params.frame_width,
        params.frame_height,
    ))
    .map_err(|e| Error::Data(e.to_string()))?;
    Ok(sha256_hex(json.as_bytes()))
}

fn entry_key(config: &str, path: &Path) -> Result<String> {
    let modified = fs::metadata(path)
        .and_then(|m| m.modified())
        .map_err(|e| Error::io(path, e))?;
    let mtime = modified
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    Ok(sha256_hex(
        format!("{config}\n{}\n{mtime}", path.to_string_lossy()).as_bytes(),
    ))
}

/// Directory of per-configuration CSV files mapping entry keys to features.
///
/// Any number of readers may load concurrently; writers are serialized within
/// the process and publish by atomic rename.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

static CACHE_WRITE: Mutex<()> = Mutex::new(());

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file(&self, config: &str) -> PathBuf {
        self.dir.join(format!("features-{config}.csv"))
    }

    fn load(&self, config: &str, dim: usize) -> HashMap<String, Vec<f64>> {
        let path = self.file(config);
        let Ok(text) = fs::read_to_string(&path) else {
            return HashMap::new();
        };
        let mut out = HashMap::new();
        for line in text.lines() {
            let mut parts = line.split(',');
            let Some(key) = parts.next() else { continue };
            let values: Option<Vec<f64>> = parts.map(|s| s.parse().ok()).collect();
            match values {
                Some(v) if v.len() == dim => {
                    out.insert(key.to_string(), v);
                }
                _ => log::warn!("ignoring corrupt cache line in {}", path.display()),
            }
        }
        out
    }

    fn store(&self, config: &str, fresh: &[(String, Vec<f64>)]) -> Result<()> {
        let _guard = CACHE_WRITE.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.file(config);
        let mut text = fs::read_to_string(&path).unwrap_or_default();
        for (key, values) in fresh {
            text.push_str(key);
            for v in values {
                text.push(',');
                text.push_str(&v.to_string());
            }
            text.push('\n');
        }
        let tmp = self
            .dir
            .join(format!(".features-{config}.{}.tmp", std::process::id()));
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
