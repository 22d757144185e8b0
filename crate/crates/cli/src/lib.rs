//! The `atlas` command.
//!
//! Exit status is 0 on success, 1 when input cannot be read or parsed and 2
//! when `validate --strict` finds problems.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use atlas_core::annotations::{parse_attributions, parse_records, AnnotationKind};
use atlas_core::persist;
use atlas_core::store::{format_thousands, Catalog};
use atlas_core::tei::{flatten_tei_subset, parse_tei_xml};
use atlas_core::text::{read_text_tsv, write_text_tsv, TextRow, VersionMetadata};
use atlas_core::urn::parse_cts_urn;
use atlas_server::{AppState, ServerConfig, DEFAULT_MAX_TEXT_PARTS, DEFAULT_PORT};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Ingest, query and serve CTS texts and their annotations")]
pub struct Cli {
    /// Persistence root.
    #[arg(long, global = true, env = "ATLAS_DATA_DIR", default_value = "atlas-data")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a file (or every file in a manifest) and add it to the catalog.
    Ingest(IngestArgs),
    /// Print the rows of a passage as seq/ref/text TSV.
    Resolve { urn: String },
    Report {
        #[command(subcommand)]
        report: Report,
    },
    /// Print link-check diagnostics.
    Validate {
        /// Exit with status 2 when anything is reported.
        #[arg(long)]
        strict: bool,
    },
    /// Serve the JSON API, reloading whenever the data directory changes.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long)]
        cors_origin: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_TEXT_PARTS)]
        max_text_parts: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Report {
    /// Distinct credited records per role and contributor.
    Attributions,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// An annotation kind, `text` or `attribution`.
    #[arg(long, required_unless_present = "manifest")]
    pub kind: Option<String>,
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub path: Option<PathBuf>,
    /// JSON list of `{kind, path, ...}` entries; relative paths are taken from
    /// the manifest's directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
}

/// Version details for text TSV files and for CoNLL-U files whose sentence ids
/// are bare references.
#[derive(Debug, Clone, Default, Args, Deserialize)]
pub struct SourceArgs {
    #[arg(long)]
    #[serde(default)]
    pub urn: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub lang: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub label: Option<String>,
    /// Citation level names, comma-separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub scheme: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
pub struct ManifestEntry {
    pub kind: String,
    pub path: PathBuf,
    #[serde(flatten)]
    pub source: SourceArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let data_dir = cli.data_dir;
    match cli.command {
        Command::Ingest(args) => {
            let entries = match &args.manifest {
                Some(m) => read_manifest(m)?,
                None => vec![ManifestEntry {
                    kind: args.kind.clone().unwrap_or_default(),
                    path: args.path.clone().unwrap_or_default(),
                    source: args.source.clone(),
                }],
            };
            let mut catalog = persist::load(&data_dir)?;
            let mut total = 0;
            // nothing is written unless every entry parses
            for entry in &entries {
                let (next, n) = ingest(&catalog, entry).with_context(|| entry.path.display().to_string())?;
                catalog = next;
                total += n;
            }
            persist::save(&catalog, &data_dir)?;
            writeln!(out, "ingested {total} records")?;
            Ok(EXIT_OK)
        }
        Command::Resolve { urn } => {
            let urn = parse_cts_urn(&urn)?;
            let catalog = persist::load(&data_dir)?;
            let rows: Vec<TextRow> = catalog.resolve_passage(&urn)?.into_iter().map(|r| r.row.clone()).collect();
            out.write_all(&write_text_tsv(&rows)?)?;
            Ok(EXIT_OK)
        }
        Command::Report { report: Report::Attributions } => {
            let catalog = persist::load(&data_dir)?;
            for row in catalog.aggregate_attributions() {
                writeln!(out, "{}\t{}\t{}", row.role, row.contributor, format_thousands(row.count))?;
            }
            Ok(EXIT_OK)
        }
        Command::Validate { strict } => {
            let catalog = persist::load(&data_dir)?;
            let diagnostics = catalog.link_check();
            for d in &diagnostics {
                writeln!(out, "{d}")?;
            }
            Ok(if strict && !diagnostics.is_empty() { EXIT_INVALID } else { EXIT_OK })
        }
        Command::Serve { port, cors_origin, max_text_parts } => {
            let catalog = persist::load(&data_dir)?;
            let state = AppState::new(catalog, ServerConfig { max_text_parts, cors_origin });
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                log::info!("listening on {}", listener.local_addr()?);
                atlas_server::spawn_reloader(state.clone(), data_dir.clone(), Duration::from_secs(2));
                atlas_server::serve(listener, state).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(EXIT_OK)
        }
    }
}

fn read_manifest(path: &Path) -> anyhow::Result<Vec<ManifestEntry>> {
    let bytes = fs::read(path).with_context(|| path.display().to_string())?;
    let mut entries: Vec<ManifestEntry> =
        serde_json::from_slice(&bytes).with_context(|| format!("{}: not a manifest", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    Ok(entries)
}

/// Adds one file to `catalog`, returning the new catalog and the record count.
pub fn ingest(catalog: &Catalog, entry: &ManifestEntry) -> anyhow::Result<(Catalog, usize)> {
    let bytes = fs::read(&entry.path)?;
    match entry.kind.as_str() {
        "text" => {
            let (meta, rows) = read_text(&entry.path, &bytes, &entry.source)?;
            let n = rows.len();
            Ok((catalog.replace_version(meta, rows)?, n))
        }
        "attribution" => {
            let records = parse_attributions(&bytes)?;
            let n = records.len();
            Ok((catalog.with_attributions(records), n))
        }
        other => {
            let kind: AnnotationKind = other
                .parse()
                .map_err(|_| anyhow!("unknown kind `{other}`; expected text, attribution or an annotation kind"))?;
            let version = entry.source.urn.as_deref().map(parse_cts_urn).transpose()?;
            let records = parse_records(kind, &bytes, version.as_ref())?;
            let n = records.len();
            Ok((catalog.with_annotations(records), n))
        }
    }
}

fn read_text(path: &Path, bytes: &[u8], source: &SourceArgs) -> anyhow::Result<(VersionMetadata, Vec<TextRow>)> {
    if path.extension().is_some_and(|e| e == "xml") {
        let xml = std::str::from_utf8(bytes)?;
        return Ok(flatten_tei_subset(&parse_tei_xml(xml)?)?);
    }
    let rows = read_text_tsv(bytes)?;
    let meta = match (&source.urn, &source.lang, &source.label, &source.scheme) {
        (Some(urn), Some(language), Some(label), Some(scheme)) => VersionMetadata {
            urn: parse_cts_urn(urn)?,
            language: language.clone(),
            label: label.clone(),
            citation_scheme: scheme.clone(),
        },
        _ if path.with_extension("meta.json").exists() => persist::read_metadata(path)?,
        _ => bail!("text TSV needs --urn, --lang, --label and --scheme, or a .meta.json next to it"),
    };
    Ok((meta, rows))
}
