//! CSV persistence of sweep rows.

use std::path::Path;

use tam_core::instances::CorruptionKind;

use crate::sweep::ResultRow;
use crate::{BenchError, Result};

pub const HEADER: [&str; 11] =
    ["variant", "kind", "alpha", "seed", "m", "n_star", "ratio", "test_verdict", "l1_hat", "k_consumed", "wall_time_ms"];

/// Extra trailing column written in verbose mode.
pub const HASH_COLUMN: &str = "instance_hash";

fn record(row: &ResultRow, verbose: bool) -> Vec<String> {
    let mut rec = vec![
        row.variant.clone(),
        row.kind.name().to_string(),
        row.alpha.to_string(),
        row.seed.to_string(),
        row.m.to_string(),
        row.n_star.to_string(),
        format!("{:.6}", row.ratio),
        row.test_verdict.clone(),
        row.l1_hat.map_or(String::new(), |x| x.to_string()),
        row.k_consumed.to_string(),
        format!("{:.3}", row.wall_time_ms),
    ];
    if verbose {
        rec.push(row.instance_hash.map_or(String::new(), |h| format!("{h:016x}")));
    }
    rec
}

/// Serializes rows; `verbose` adds the instance-hash column.
pub fn to_csv_bytes(rows: &[ResultRow], verbose: bool) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = HEADER.to_vec();
    if verbose {
        header.push(HASH_COLUMN);
    }
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(record(row, verbose)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, rows: &[ResultRow], verbose: bool) -> Result<()> {
    std::fs::write(path, to_csv_bytes(rows, verbose)).map_err(|source| BenchError::Io { path: path.into(), source })
}

fn parse_row(rec: &csv::StringRecord, verbose: bool) -> std::result::Result<ResultRow, String> {
    fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
        rec[i].parse().map_err(|_| format!("column {}: cannot parse {:?}", HEADER[i], &rec[i]))
    }
    let kind: CorruptionKind = rec[1].parse().map_err(|e: tam_core::Error| e.to_string())?;
    let m: usize = num(rec, 4)?;
    let n_star: usize = num(rec, 5)?;
    let written: f64 = num(rec, 6)?;
    let test_verdict = rec[7].to_string();
    // Recompute the ratio at full precision; the file only holds 6 decimals.
    let ratio = if n_star == 0 { 0.0 } else { m as f64 / n_star as f64 };
    if (ratio - written).abs() > 5.000001e-7 {
        return Err(format!("ratio {written} disagrees with m/n_star = {ratio}"));
    }
    let l1_hat = if rec[8].is_empty() { None } else { Some(num(rec, 8)?) };
    let instance_hash = if verbose && !rec[11].is_empty() {
        Some(u64::from_str_radix(&rec[11], 16).map_err(|_| format!("bad instance hash {:?}", &rec[11]))?)
    } else {
        None
    };
    Ok(ResultRow {
        variant: rec[0].to_string(),
        kind,
        alpha: num(rec, 2)?,
        seed: num(rec, 3)?,
        m,
        n_star,
        ratio,
        test_verdict,
        l1_hat,
        k_consumed: num(rec, 9)?,
        wall_time_ms: num(rec, 10)?,
        instance_hash,
    })
}

pub fn parse_csv(bytes: &[u8], path: &Path) -> Result<Vec<ResultRow>> {
    let err = |msg: String| BenchError::Csv { path: path.into(), msg };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| err(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let verbose = match names.len() {
        11 if names == HEADER => false,
        12 if names[..11] == HEADER && names[11] == HASH_COLUMN => true,
        _ => return Err(err(format!("unexpected header {names:?}"))),
    };
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            parse_row(&rec, verbose).map_err(|msg| err(format!("row {}: {msg}", i + 1)))
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let bytes = std::fs::read(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    parse_csv(&bytes, path)
}
