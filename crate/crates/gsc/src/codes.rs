//! Resolution of LDPC code identifiers and alist files, with a process-wide
//! cache so each code is constructed once.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use gsc_core::ldpc::{load_alist, make_regular_qc_ldpc, parse_code_id, LdpcCode, LdpcError};

#[derive(Debug, thiserror::Error)]
pub enum CodeError {
    #[error("cannot read alist {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("code {id}: {source}")]
    Ldpc {
        id: String,
        #[source]
        source: LdpcError,
    },
}

fn cache() -> &'static Mutex<HashMap<String, Arc<LdpcCode>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<LdpcCode>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

pub fn looks_like_path(spec: &str) -> bool {
    spec.ends_with(".alist") || spec.contains('/') || spec.contains(std::path::MAIN_SEPARATOR)
}

fn build(spec: &str) -> Result<LdpcCode, CodeError> {
    let ldpc = |source| CodeError::Ldpc {
        id: spec.to_string(),
        source,
    };
    if looks_like_path(spec) {
        let text = std::fs::read_to_string(Path::new(spec)).map_err(|source| CodeError::Io {
            path: spec.to_string(),
            source,
        })?;
        let id = Path::new(spec)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(spec)
            .to_string();
        return load_alist(&text, id).map_err(ldpc);
    }
    let p = parse_code_id(spec).map_err(ldpc)?;
    make_regular_qc_ldpc(p.z, p.rows, p.cols, p.seed).map_err(ldpc)
}

/// A code id (`default`, `qc-z<z>-<rows>x<cols>[-s<seed>]`) or a path to an
/// alist file.
pub fn resolve_code(spec: &str) -> Result<Arc<LdpcCode>, CodeError> {
    if let Some(c) = cache().lock().expect("code cache").get(spec) {
        return Ok(c.clone());
    }
    let code = Arc::new(build(spec)?);
    cache().lock().expect("code cache").insert(spec.to_string(), code.clone());
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_cache() {
        let a = resolve_code("qc-z8-4x8-s3").unwrap();
        assert_eq!((a.n(), a.k()), (64, 32));
        let b = resolve_code("qc-z8-4x8-s3").unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(resolve_code("ldpc-5g").is_err());
    }

    #[test]
    fn alist_files() {
        let code = resolve_code("qc-z4-4x8").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.alist");
        std::fs::write(&path, gsc_core::ldpc::to_alist(&code)).unwrap();
        let loaded = resolve_code(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded.checks(), code.checks());
        assert_eq!(loaded.code_id(), "toy");
        assert!(resolve_code("/nonexistent/x.alist").is_err());
    }
}
