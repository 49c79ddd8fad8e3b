//! CSV artifacts exchanged between pipeline stages.
//!
//! Floats are written with Rust's shortest round-trip rendering, so reading a
//! table back yields bit-identical values.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use plan_core::positioning::{Candidate, CandidateSet, PositioningReport};
use plan_core::sensitivity::{Band, MetricBands, PerturbationKind};

use crate::CliError;

pub fn front_file(j: usize) -> String {
    format!("front_{j}.csv")
}

pub const CROSSEVAL_FILE: &str = "crosseval.csv";
pub const POSITIONING_FILE: &str = "positioning.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";

fn num(v: f64) -> String {
    format!("{v}")
}

fn indexed(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (0..count).map(move |i| format!("{prefix}_{i}"))
}

pub fn front_header(n: usize, j: usize) -> Vec<String> {
    let mut h = vec!["portfolio_id".to_string()];
    h.extend(indexed("x", n));
    h.push("cost".into());
    h.push(format!("succ_{j}"));
    h
}

pub fn crosseval_header(n: usize, q: usize) -> Vec<String> {
    let mut h = vec!["portfolio_id".to_string()];
    h.extend(indexed("x", n));
    h.push("cost".into());
    h.extend(indexed("succ", q));
    h
}

pub fn positioning_header(n: usize, q: usize) -> Vec<String> {
    let mut h = crosseval_header(n, q);
    h.extend(indexed("F", q));
    for c in [
        "robustness",
        "risk",
        "adapt_cost",
        "robustness_display",
        "risk_display",
        "adapt_cost_display",
        "nd_flag",
    ] {
        h.push(c.into());
    }
    h
}

pub const SENSITIVITY_HEADER: [&str; 7] = ["portfolio_id", "metric", "nominal", "q1", "median", "q3", "kind"];

/// One row of a per-scenario front table.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontRow {
    pub counts: Vec<u32>,
    pub cost: f64,
    pub success: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> CliError {
    CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn schema(path: &Path, message: String) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        message,
    }
}

/// Write rows to `path` in a single buffered pass.
fn write_table<I>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn counts_cells(counts: &[u32]) -> impl Iterator<Item = String> + '_ {
    counts.iter().map(|x| x.to_string())
}

pub fn write_front(path: &Path, n: usize, j: usize, rows: &[FrontRow]) -> Result<(), CliError> {
    let body = rows.iter().enumerate().map(|(id, r)| {
        let mut row = vec![id.to_string()];
        row.extend(counts_cells(&r.counts));
        row.push(num(r.cost));
        row.push(num(r.success));
        row
    });
    write_table(path, &front_header(n, j), body)
}

pub fn write_crosseval(path: &Path, set: &CandidateSet) -> Result<(), CliError> {
    let first = &set.candidates()[0];
    let header = crosseval_header(first.counts.len(), set.scenario_count());
    let body = set.candidates().iter().enumerate().map(|(id, c)| candidate_cells(id, c));
    write_table(path, &header, body)
}

fn candidate_cells(id: usize, c: &Candidate) -> Vec<String> {
    let mut row = vec![id.to_string()];
    row.extend(counts_cells(&c.counts));
    row.push(num(c.cost));
    row.extend(c.success.iter().map(|&s| num(s)));
    row
}

pub fn write_positioning(path: &Path, set: &CandidateSet, report: &PositioningReport) -> Result<(), CliError> {
    let first = &set.candidates()[0];
    let header = positioning_header(first.counts.len(), set.scenario_count());
    let body = set.candidates().iter().enumerate().map(|(id, c)| {
        let mut row = candidate_cells(id, c);
        row.extend(report.scores.row(id).iter().map(|&f| num(f)));
        let (m, d) = (&report.metrics[id], &report.display[id]);
        for v in [m.robustness, m.risk, m.adapt_cost, d.robustness, d.risk, d.adapt_cost] {
            row.push(num(v));
        }
        row.push(u8::from(report.non_dominated[id]).to_string());
        row
    });
    write_table(path, &header, body)
}

pub fn write_sensitivity(path: &Path, bands: &[(PerturbationKind, Vec<MetricBands>)]) -> Result<(), CliError> {
    let header: Vec<String> = SENSITIVITY_HEADER.iter().map(|s| s.to_string()).collect();
    let mut body = Vec::new();
    for (kind, per_portfolio) in bands {
        for (id, b) in per_portfolio.iter().enumerate() {
            for (metric, band) in [("robustness", b.robustness), ("risk", b.risk), ("adapt_cost", b.adapt_cost)] {
                body.push(band_cells(id, metric, band, *kind));
            }
        }
    }
    write_table(path, &header, body)
}

fn band_cells(id: usize, metric: &str, b: Band, kind: PerturbationKind) -> Vec<String> {
    vec![
        id.to_string(),
        metric.to_string(),
        num(b.nominal),
        num(b.q1),
        num(b.median),
        num(b.q3),
        kind.label().to_string(),
    ]
}

/// Open a table and check its header against `expected`.
fn open_table(path: &Path, expected: &[String]) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    if found != expected {
        let missing: Vec<&str> = expected.iter().filter(|c| !found.contains(c)).map(String::as_str).collect();
        let unexpected: Vec<&str> = found.iter().filter(|c| !expected.contains(c)).map(String::as_str).collect();
        return Err(schema(
            path,
            format!(
                "expected columns [{}], found [{}]; missing [{}], unexpected [{}]",
                expected.join(","),
                found.join(","),
                missing.join(","),
                unexpected.join(",")
            ),
        ));
    }
    Ok(r)
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: usize, column: &str, cell: &str) -> Result<T, CliError> {
    cell.parse()
        .map_err(|_| schema(path, format!("line {line}, column {column}: cannot parse {cell:?}")))
}

/// Parsed body of a table: one `(line, cells)` entry per record.
fn records(path: &Path, mut r: csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>, CliError> {
    r.records()
        .enumerate()
        .map(|(i, rec)| rec.map(|rec| (i + 2, rec)).map_err(|e| csv_err(path, e)))
        .collect()
}

fn check_id(path: &Path, line: usize, cell: &str, expected: usize) -> Result<(), CliError> {
    let id: usize = parse_cell(path, line, "portfolio_id", cell)?;
    if id != expected {
        return Err(schema(path, format!("line {line}: portfolio_id {id}, expected {expected}")));
    }
    Ok(())
}

pub fn read_front(path: &Path, n: usize, j: usize) -> Result<Vec<FrontRow>, CliError> {
    let header = front_header(n, j);
    let r = open_table(path, &header)?;
    records(path, r)?
        .into_iter()
        .enumerate()
        .map(|(id, (line, rec))| {
            check_id(path, line, &rec[0], id)?;
            let counts = (0..n)
                .map(|i| parse_cell(path, line, &header[1 + i], &rec[1 + i]))
                .collect::<Result<_, _>>()?;
            Ok(FrontRow {
                counts,
                cost: parse_cell(path, line, "cost", &rec[1 + n])?,
                success: parse_cell(path, line, &header[2 + n], &rec[2 + n])?,
            })
        })
        .collect()
}

pub fn read_crosseval(path: &Path, n: usize, q: usize) -> Result<CandidateSet, CliError> {
    let header = crosseval_header(n, q);
    let r = open_table(path, &header)?;
    let candidates = records(path, r)?
        .into_iter()
        .enumerate()
        .map(|(id, (line, rec))| {
            check_id(path, line, &rec[0], id)?;
            let counts = (0..n)
                .map(|i| parse_cell(path, line, &header[1 + i], &rec[1 + i]))
                .collect::<Result<_, _>>()?;
            let success = (0..q)
                .map(|j| parse_cell(path, line, &header[2 + n + j], &rec[2 + n + j]))
                .collect::<Result<_, _>>()?;
            Ok(Candidate {
                counts,
                cost: parse_cell(path, line, "cost", &rec[1 + n])?,
                success,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if candidates.is_empty() {
        return Err(CliError::NoCandidates);
    }
    CandidateSet::new(candidates).map_err(|e| schema(path, e.to_string()))
}

/// Write `bytes` to `path` through a temporary sibling and a rename, so a
/// reader never observes a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
