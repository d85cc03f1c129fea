//! The dense amplitude table and its on-disk cache.
//!
//! Cache format (text, diffable):
//!   line 1: `# amp-table v1 n_max=<N> kappa_pmax=<P>`
//!   line 2: `n,amp,log_norm`
//!   rows:   one per n in (2, n_max], floats at 17 significant digits
//!   last:   `# sha256=<hex of all preceding bytes>`
//!
//! Files are keyed by n_max in the name; a wrong-n_max request is a plain
//! cache miss, while a file that fails its checksum or shape checks is
//! reported as [`Error::CacheCorrupt`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::scan::{OrbitScanner, ScanTables};
use super::DEFAULT_KAPPA_PMAX;
use crate::error::{Error, Result};

/// One table row: the amplitude and log-norm at trace n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeEntry {
    pub n: u64,
    pub amp: f64,
    pub log_norm: f64,
}

/// Dense map n -> (amp(n), log N(n)) for 2 < n <= n_max.
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    n_max: u64,
    kappa_pmax: u64,
    entries: Vec<AmplitudeEntry>,
}

impl AmplitudeTable {
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn entries(&self) -> &[AmplitudeEntry] {
        &self.entries
    }

    pub fn entry(&self, n: u64) -> Option<&AmplitudeEntry> {
        if n < 3 || n > self.n_max {
            return None;
        }
        Some(&self.entries[(n - 3) as usize])
    }

    /// Provenance: the kappa prime cutoff recorded at build time.
    pub fn kappa_pmax(&self) -> u64 {
        self.kappa_pmax
    }
}

/// log N(n) = 2 log((n + sqrt(n^2 - 4))/2).
pub(crate) fn log_norm_f64(n: u64) -> f64 {
    let x = n as f64;
    2.0 * ((x + (x * x - 4.0).sqrt()) / 2.0).ln()
}

/// Build the table in memory, scanning traces in parallel. Deterministic:
/// per-n work is independent and results are collected in trace order.
pub fn build_table_in_memory(n_max: u64) -> Result<AmplitudeTable> {
    if n_max < 3 {
        return Err(Error::RangeTooSmall { min: 3, got: n_max });
    }
    let tables = Arc::new(ScanTables::new((n_max / 2 + 2) as usize));
    let entries: Vec<AmplitudeEntry> = (3..n_max + 1)
        .into_par_iter()
        .map_init(
            || OrbitScanner::from_tables(tables.clone()),
            |scanner, n| AmplitudeEntry {
                n,
                amp: scanner.amp(n),
                log_norm: log_norm_f64(n),
            },
        )
        .collect();
    Ok(AmplitudeTable {
        n_max,
        kappa_pmax: DEFAULT_KAPPA_PMAX,
        entries,
    })
}

/// Build or load the table, consulting `cache_dir` when given.
pub fn build_table(n_max: u64, cache_dir: Option<&Path>) -> Result<AmplitudeTable> {
    if let Some(dir) = cache_dir {
        if let Some(table) = load_cache(dir, n_max)? {
            return Ok(table);
        }
    }
    let table = build_table_in_memory(n_max)?;
    if let Some(dir) = cache_dir {
        write_cache(dir, &table)?;
    }
    Ok(table)
}

fn cache_path(dir: &Path, n_max: u64) -> PathBuf {
    dir.join(format!("amp_table_v1_{n_max}.csv"))
}

/// Serialize to the cache format, checksum line included.
pub fn render_cache(table: &AmplitudeTable) -> String {
    let mut body = String::with_capacity(table.entries.len() * 52 + 128);
    let _ = writeln!(
        body,
        "# amp-table v1 n_max={} kappa_pmax={}",
        table.n_max, table.kappa_pmax
    );
    body.push_str("n,amp,log_norm\n");
    for e in &table.entries {
        let _ = writeln!(body, "{},{:.16e},{:.16e}", e.n, e.amp, e.log_norm);
    }
    let digest = Sha256::digest(body.as_bytes());
    let _ = writeln!(body, "# sha256={digest:x}");
    body
}

fn write_cache(dir: &Path, table: &AmplitudeTable) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = cache_path(dir, table.n_max);
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, render_cache(table)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CacheCorrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Load a cached table; Ok(None) on a plain miss (no file).
fn load_cache(dir: &Path, n_max: u64) -> Result<Option<AmplitudeTable>> {
    let path = cache_path(dir, n_max);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(&path, e)),
    };

    let checksum_at = text
        .rfind("# sha256=")
        .ok_or_else(|| corrupt(&path, "missing checksum line"))?;
    let (payload, checksum_line) = text.split_at(checksum_at);
    let recorded = checksum_line.trim_start_matches("# sha256=").trim();
    let digest = format!("{:x}", Sha256::digest(payload.as_bytes()));
    if digest != recorded {
        return Err(corrupt(&path, "checksum mismatch"));
    }

    let mut lines = payload.lines();
    let header = lines.next().ok_or_else(|| corrupt(&path, "empty file"))?;
    let expected_prefix = "# amp-table v1 n_max=";
    if !header.starts_with(expected_prefix) {
        return Err(corrupt(&path, "bad header"));
    }
    let rest = &header[expected_prefix.len()..];
    let mut it = rest.split(" kappa_pmax=");
    let header_nmax: u64 = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| corrupt(&path, "unreadable n_max"))?;
    let kappa_pmax: u64 = it
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| corrupt(&path, "unreadable kappa_pmax"))?;
    if header_nmax != n_max {
        return Err(corrupt(
            &path,
            format!("header n_max {header_nmax} does not match requested {n_max}"),
        ));
    }
    if lines.next() != Some("n,amp,log_norm") {
        return Err(corrupt(&path, "missing column header"));
    }

    let mut entries = Vec::with_capacity((n_max - 2) as usize);
    for (i, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| s.and_then(|v| v.parse::<f64>().ok());
        let n: u64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(&path, format!("bad row {}", i + 3)))?;
        let amp = parse(cols.next()).ok_or_else(|| corrupt(&path, format!("bad row {}", i + 3)))?;
        let log_norm =
            parse(cols.next()).ok_or_else(|| corrupt(&path, format!("bad row {}", i + 3)))?;
        if n != i as u64 + 3 {
            return Err(corrupt(&path, format!("row {} out of order", i + 3)));
        }
        entries.push(AmplitudeEntry { n, amp, log_norm });
    }
    if entries.len() as u64 != n_max - 2 {
        return Err(corrupt(
            &path,
            format!("expected {} rows, found {}", n_max - 2, entries.len()),
        ));
    }
    Ok(Some(AmplitudeTable {
        n_max,
        kappa_pmax,
        entries,
    }))
}
