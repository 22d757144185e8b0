//! On-disk layout of a catalog.
//!
//! ```text
//! <data-dir>/CURRENT                 name of the live snapshot
//! <data-dir>/snapshots/<id>/texts/<stem>.tsv + <stem>.meta.json, or <stem>.xml (TEI)
//! <data-dir>/snapshots/<id>/annotations/<family>/*.json|*.tsv|*.conllu
//! <data-dir>/snapshots/<id>/attributions/*.json
//! ```
//!
//! Saving writes a fresh snapshot directory and then renames a new `CURRENT`
//! over the old one, so a reader sees either the old snapshot or the new one.
//! A data directory without `CURRENT` is read as a single hand-laid tree with
//! the same `texts/`, `annotations/` and `attributions/` subdirectories.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::annotations::{
    family_kind, parse_attributions, parse_records, write_attributions, write_records, Annotation, AnnotationError,
};
use crate::store::{Catalog, StoreError};
use crate::tei::{flatten_tei_subset, parse_tei_xml};
use crate::text::{read_text_tsv, write_text_tsv, TextError, VersionMetadata};

pub const CURRENT_FILE: &str = "CURRENT";
pub const SNAPSHOTS_DIR: &str = "snapshots";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Text { path: PathBuf, source: TextError },
    #[error("{path}: {source}")]
    Annotation { path: PathBuf, source: AnnotationError },
    #[error("{path}: {detail}")]
    Metadata { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Store { path: PathBuf, source: StoreError },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| PersistError::Io { path: path.to_path_buf(), source }
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>, PersistError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_, _>>()?;
    files.sort();
    Ok(files)
}

fn extension(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or_default()
}

/// Reads `<stem>.meta.json` next to a text TSV.
pub fn read_metadata(tsv: &Path) -> Result<VersionMetadata, PersistError> {
    let meta_path = tsv.with_extension("meta.json");
    let bytes = fs::read(&meta_path).map_err(io_err(&meta_path))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PersistError::Metadata { path: meta_path.clone(), detail: e.to_string() })
}

/// Loads the live snapshot of `data_dir`. A missing directory is an empty catalog.
pub fn load(data_dir: &Path) -> Result<Catalog, PersistError> {
    match current_snapshot(data_dir)? {
        Some(dir) => load_tree(&dir),
        None => load_tree(data_dir),
    }
}

/// The directory `CURRENT` points at, if any.
pub fn current_snapshot(data_dir: &Path) -> Result<Option<PathBuf>, PersistError> {
    let pointer = data_dir.join(CURRENT_FILE);
    match fs::read_to_string(&pointer) {
        Ok(id) => Ok(Some(data_dir.join(SNAPSHOTS_DIR).join(id.trim()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&pointer)(e)),
    }
}

/// Loads one tree of texts, annotations and attributions.
pub fn load_tree(root: &Path) -> Result<Catalog, PersistError> {
    let mut catalog = Catalog::new();
    for path in sorted_files(&root.join("texts"))? {
        let (meta, rows) = match extension(&path) {
            "tsv" => {
                let bytes = fs::read(&path).map_err(io_err(&path))?;
                let rows = read_text_tsv(&bytes).map_err(|source| PersistError::Text { path: path.clone(), source })?;
                (read_metadata(&path)?, rows)
            }
            "xml" => {
                let xml = fs::read_to_string(&path).map_err(io_err(&path))?;
                parse_tei_xml(&xml)
                    .and_then(|doc| flatten_tei_subset(&doc))
                    .map_err(|source| PersistError::Text { path: path.clone(), source })?
            }
            _ => continue,
        };
        catalog = catalog
            .register_version(meta, rows)
            .map_err(|source| PersistError::Store { path: path.clone(), source })?;
    }

    let mut annotations = Vec::new();
    for family_dir in sorted_files(&root.join("annotations"))? {
        let Some(name) = family_dir.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(kind) = family_kind(name) else {
            log::warn!("skipping unknown annotation directory {}", family_dir.display());
            continue;
        };
        for path in sorted_files(&family_dir)? {
            if !matches!(extension(&path), "json" | "tsv" | "conllu") {
                continue;
            }
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let records = parse_records(kind, &bytes, None)
                .map_err(|source| PersistError::Annotation { path: path.clone(), source })?;
            annotations.extend(records);
        }
    }
    catalog = catalog.with_annotations(annotations);

    let mut credits = Vec::new();
    for path in sorted_files(&root.join("attributions"))? {
        if extension(&path) != "json" {
            continue;
        }
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        credits.extend(
            parse_attributions(&bytes).map_err(|source| PersistError::Annotation { path: path.clone(), source })?,
        );
    }
    Ok(catalog.with_attributions(credits))
}

/// File-name-safe form of a URN.
pub fn file_stem(urn: &str) -> String {
    urn.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' }).collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes `catalog` as a tree under `root`, which must not exist yet.
pub fn write_tree(catalog: &Catalog, root: &Path) -> Result<(), PersistError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    for entry in catalog.versions() {
        let stem = file_stem(&entry.meta.urn.to_string());
        let tsv = root.join("texts").join(format!("{stem}.tsv"));
        let bytes =
            write_text_tsv(entry.text.rows()).map_err(|source| PersistError::Text { path: tsv.clone(), source })?;
        write_file(&tsv, &bytes)?;
        let meta = serde_json::to_vec_pretty(&entry.meta).expect("metadata serializes");
        write_file(&tsv.with_extension("meta.json"), &meta)?;
    }
    let mut families: BTreeMap<&'static str, Vec<&Annotation>> = BTreeMap::new();
    for a in catalog.annotations() {
        families.entry(a.family()).or_default().push(a);
    }
    for (family, records) in families {
        let (bytes, ext) = write_records(family, &records);
        write_file(&root.join("annotations").join(family).join(format!("records.{ext}")), &bytes)?;
    }
    if !catalog.attributions().is_empty() {
        write_file(&root.join("attributions").join("attributions.json"), &write_attributions(catalog.attributions()))?;
    }
    Ok(())
}

static SAVE_COUNTER: AtomicU64 = AtomicU64::new(0);

fn snapshot_id() -> String {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or_default();
    format!("{nanos:024}-{}-{}", std::process::id(), SAVE_COUNTER.fetch_add(1, Ordering::Relaxed))
}

/// Saves `catalog` as a new snapshot and makes it live. The previous snapshot
/// is kept for readers still loading it; older ones are removed.
pub fn save(catalog: &Catalog, data_dir: &Path) -> Result<PathBuf, PersistError> {
    let snapshots = data_dir.join(SNAPSHOTS_DIR);
    let id = snapshot_id();
    let staging = snapshots.join(format!(".{id}.tmp"));
    write_tree(catalog, &staging)?;
    let dir = snapshots.join(&id);
    fs::rename(&staging, &dir).map_err(io_err(&dir))?;

    let previous = current_snapshot(data_dir)?;
    let pointer = data_dir.join(CURRENT_FILE);
    let tmp = data_dir.join(format!(".{CURRENT_FILE}.{id}.tmp"));
    fs::write(&tmp, format!("{id}\n")).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &pointer).map_err(io_err(&pointer))?;

    for old in sorted_files(&snapshots)? {
        if old != dir && Some(&old) != previous.as_ref() {
            if let Err(e) = fs::remove_dir_all(&old) {
                log::warn!("could not remove old snapshot {}: {e}", old.display());
            }
        }
    }
    Ok(dir)
}
