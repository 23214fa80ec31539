//! Loading `.dcsp` files, with optional `.toml` sidecars that override `const`
//! declarations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::syntax::{parse_spec_with, ParseError, Spec};
use crate::time::Duration;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{}: {message}", path.display())]
    Sidecar { path: PathBuf, message: String },
    #[error("{}: no .dcsp files", .0.display())]
    Empty(PathBuf),
}

/// One loaded specification.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// File stem, e.g. `ticktock`.
    pub name: String,
    pub path: PathBuf,
    pub spec: Spec,
    /// Constant overrides read from the sidecar.
    pub params: BTreeMap<String, Duration>,
}

/// The corpus shipped with the crate.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Reads `name = value` pairs; values are integers or rational strings.
pub fn parse_sidecar(text: &str) -> Result<BTreeMap<String, Duration>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut out = BTreeMap::new();
    for (k, v) in table {
        let d = match &v {
            toml::Value::Integer(n) if *n >= 0 => Duration::from_int(*n),
            toml::Value::String(s) => s.parse().map_err(|e| format!("`{k}`: {e}"))?,
            _ => return Err(format!("`{k}`: expected a non-negative integer or a \"p/q\" string")),
        };
        out.insert(k, d);
    }
    if let (Some(lo), Some(hi)) = (out.get("tau_min"), out.get("tau_max")) {
        if lo > hi {
            return Err("tau_min exceeds tau_max".into());
        }
        if let Some(t) = out.get("trans") {
            if t < lo || t > hi {
                return Err(format!("trans = {t} outside [{lo}, {hi}]"));
            }
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// Loads one spec, applying `<stem>.toml` next to it when present.
pub fn load_spec(path: &Path) -> Result<CorpusEntry, CorpusError> {
    let text = read(path)?;
    let sidecar = path.with_extension("toml");
    let params = if sidecar.exists() {
        parse_sidecar(&read(&sidecar)?).map_err(|message| CorpusError::Sidecar { path: sidecar, message })?
    } else {
        BTreeMap::new()
    };
    let spec = parse_spec_with(&text, &params).map_err(|source| CorpusError::Parse { path: path.to_path_buf(), source })?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(CorpusEntry { name, path: path.to_path_buf(), spec, params })
}

/// Every `.dcsp` file in `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e.map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?.path();
        if p.extension().is_some_and(|x| x == "dcsp") {
            paths.push(p);
        }
    }
    if paths.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    paths.sort();
    paths.iter().map(|p| load_spec(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus_loads() {
        let c = load_corpus(&default_corpus_dir()).unwrap();
        let names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["fig31", "intro_P", "intro_Q", "ticktock"]);
        let tt = &c[3];
        assert_eq!(tt.params["trans"], Duration::from_int(3));
        assert_eq!(tt.spec.durations["TRANS"], Duration::from_int(3));
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(CorpusError::Empty(_))));
    }

    #[test]
    fn sidecar_values() {
        let p = parse_sidecar("pi = 4\neps = \"1/3\"").unwrap();
        assert_eq!(p["eps"], Duration::from_ratio(1, 3));
        assert!(parse_sidecar("tau_min = 3\ntau_max = 4\ntrans = 5").is_err());
        assert!(parse_sidecar("pi = -1").is_err());
        assert!(parse_sidecar("pi = [").is_err());
    }

    #[test]
    fn sidecar_overrides_constants() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.dcsp");
        fs::write(&f, "const n = 2; durations a = n; main X; process X := a{n}; stop endproc").unwrap();
        fs::write(dir.path().join("x.toml"), "n = 7").unwrap();
        let e = load_spec(&f).unwrap();
        assert_eq!(e.spec.durations["a"], Duration::from_int(7));
    }
}
