//! CSV output and the resolved-config sidecar.
//!
//! Numbers use Rust's shortest round-trip formatting (decimal point, no
//! grouping); unmeasured values are written as `null`.

use std::io;
use std::path::{Path, PathBuf};

use crate::config::LoadedConfig;
use crate::sim::experiment::SweepRow;
use crate::sim::metrics::MetricsRow;

pub const FPC_COLUMNS: [&str; 13] = [
    "N",
    "k",
    "q",
    "p0",
    "tau",
    "beta",
    "l",
    "M",
    "seed",
    "runs",
    "agreement_rate",
    "mean_termination_round",
    "not_finalized_rate",
];

pub const TANGLE_COLUMNS: [&str; 4] = ["tps", "mean_confirmation_time", "orphan_rate", "conflicts_resolved"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "null".to_owned(), |x| x.to_string())
}

fn to_string(mut w: csv::Writer<Vec<u8>>) -> String {
    w.flush().expect("in-memory writer");
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn fpc_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FPC_COLUMNS).expect("in-memory writer");
    for r in rows {
        let c = &r.config;
        let (agreement, mtr, nf) = match &r.result {
            Ok(s) => (
                Some(s.agreement_rate()),
                Some(s.mean_termination_round),
                Some(s.not_finalized_rate()),
            ),
            Err(_) => (None, None, None),
        };
        w.write_record([
            c.n.to_string(),
            c.k.to_string(),
            c.q.to_string(),
            c.p0.to_string(),
            c.tau.to_string(),
            c.beta.to_string(),
            c.l.to_string(),
            c.m.to_string(),
            c.seed.to_string(),
            r.runs.to_string(),
            opt(agreement),
            opt(mtr),
            opt(nf),
        ])
        .expect("in-memory writer");
    }
    to_string(w)
}

pub fn tangle_csv(row: &MetricsRow) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TANGLE_COLUMNS).expect("in-memory writer");
    w.write_record([
        opt(row.tps),
        opt(row.mean_confirmation_time),
        opt(row.orphan_rate),
        opt(row.conflicts_resolved),
    ])
    .expect("in-memory writer");
    to_string(w)
}

/// `results.csv` with suffix `config.json` becomes `results.config.json`.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the resolved config beside the output file and returns its path.
pub fn echo_config(out: &Path, config: &LoadedConfig) -> io::Result<PathBuf> {
    let path = sidecar_path(out, "config.json");
    std::fs::write(&path, config.to_json() + "\n")?;
    Ok(path)
}
