use std::fs;
use std::path::{Path, PathBuf};

use irisq::fsutil::{ensure_dir, write_atomic};
use irisq::manifest::resolve;
use irisq::{save_manifest, SampleRecord};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::{CliResult, Failure};

/// Parses a TOML file, or returns the default when no path is given.
pub fn read_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| irisq::Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Failure::Config {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })
}

#[derive(Serialize)]
struct Resolved<'a, A, C> {
    command: &'a str,
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a C>,
}

/// Prints the fully resolved invocation to stderr before any work is done.
pub fn print_resolved<A: Serialize, C: Serialize>(command: &str, args: &A, config: Option<&C>) {
    match toml::to_string(&Resolved {
        command,
        args,
        config,
    }) {
        Ok(text) => eprintln!("# resolved configuration\n{text}"),
        Err(e) => eprintln!("# resolved configuration unavailable: {e}"),
    }
}

/// Writes `bytes` atomically, creating the parent directory if needed.
pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Ok(write_atomic(path, bytes)?)
}

pub fn refuse_overwrite(input: &Path, output: &Path) -> CliResult<()> {
    let same = match (fs::canonicalize(input), fs::canonicalize(output)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(Failure::Usage(format!(
            "refusing to overwrite input {}",
            input.display()
        )));
    }
    Ok(())
}

fn directory_of(path: &Path) -> CliResult<PathBuf> {
    let dir = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    };
    ensure_dir(&dir)?;
    fs::canonicalize(&dir).map_err(|e| Failure::Lib(irisq::Error::io(&dir, e)))
}

/// Saves records read from `source` as a manifest at `target`, rewriting
/// relative file references so they still point at the same files.
pub fn save_manifest_from(
    mut records: Vec<SampleRecord>,
    source: &Path,
    target: &Path,
) -> CliResult<()> {
    let from = directory_of(source)?;
    let to = directory_of(target)?;
    if from != to {
        for r in &mut records {
            for reference in [&mut r.image_path, &mut r.occlusion_path] {
                if reference.is_relative() {
                    let absolute = resolve(&from.join("manifest"), reference);
                    *reference = pathdiff::diff_paths(&absolute, &to).unwrap_or(absolute);
                }
            }
        }
    }
    Ok(save_manifest(&records, target)?)
}

/// Renders rows as CSV.
pub fn csv_text<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.as_ref()).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
