//! File naming inside scene and output directories. A scene `S` is stored as
//! `S.ppm`, `S.sem.pgm` and `S.inst.pgm` (with `S.inst.json`).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{AtPath, CliResult};

pub const IMAGE: &str = ".ppm";
pub const SEMANTIC: &str = ".sem.pgm";
pub const INSTANCES: &str = ".inst.pgm";
pub const CLASSES: &str = ".classes.pgm";
pub const SUPERPIXELS: &str = ".sp.pgm";
pub const PAIRS: &str = ".pairs.txt";
pub const BOUNDARY: &str = ".boundary.pgm";

pub fn file(dir: &Path, stem: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{stem}{suffix}"))
}

/// `(directory, stems)` for a directory of `*suffix` files or a single such
/// file. Stems are sorted.
pub fn stems(path: &Path, suffix: &str) -> CliResult<(PathBuf, Vec<String>)> {
    let name_stem = |p: &Path| {
        p.file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(suffix))
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
    };
    if path.is_file() {
        let stem = name_stem(path).ok_or_else(|| {
            crate::error::CliError::Usage(format!("{} does not end in {suffix}", path.display()))
        })?;
        let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        return Ok((dir, vec![stem]));
    }
    let entries = fs::read_dir(path).map_err(qseg_core::Error::from).at(path)?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(qseg_core::Error::from).at(path)?;
        if let Some(stem) = name_stem(&entry.path()) {
            out.push(stem);
        }
    }
    out.sort();
    Ok((path.to_path_buf(), out))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(qseg_core::Error::from).at(dir)
}

/// FNV-1a of the stem mixed into `seed`, so each image gets its own noise
/// regardless of which other images are processed.
pub fn image_seed(seed: u64, stem: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stem.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}
