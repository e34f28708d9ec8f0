//! Writers for every emitted file format and matching readers that
//! validate the schema.
//!
//! Numbers use Rust's shortest round-trip formatting, so parsing a written
//! value gives back the identical `f64`.

use std::io::{Read, Write};

use crate::engine::RunTrace;
use crate::error::{Error, Result};
use crate::experiments::{Median, SlopeFit, SlopeRow, SummaryRow, TspRow};
use crate::pairing::PairDistribution;

pub const SWEEP_HEADER: [&str; 10] = [
    "problem",
    "params",
    "scheme",
    "pair_mode",
    "p_x",
    "trials",
    "median_T",
    "mean_T",
    "censored",
    "budget",
];
pub const SLOPE_HEADER: [&str; 4] = ["problem", "scheme", "slope", "stderr"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["level", "before", "after"];
pub const TSP_HEADER: [&str; 4] = ["scheme", "seed", "best_fitness", "best_length"];

/// Marker for slopes that could not be fitted.
pub const UNDEFINED: &str = "undefined";

fn csv_err(err: csv::Error) -> Error {
    Error::Io(err.to_string())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, name: &str) -> Result<T> {
    let raw = record
        .get(index)
        .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("column '{name}': malformed value '{raw}'")))
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "header is '{}', expected '{}'",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn median_text(m: Median, budget: u64) -> String {
    match m {
        Median::Value(v) => v.to_string(),
        Median::Censored => format!(">={budget}"),
    }
}

pub fn write_sweep_csv(rows: &[SummaryRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.params.clone(),
            r.scheme.clone(),
            r.pair_mode.to_string(),
            r.crossover_rate.to_string(),
            r.trials.to_string(),
            median_text(r.median, r.budget),
            r.mean.to_string(),
            r.censored.to_string(),
            r.budget.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(input: impl Read) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &SWEEP_HEADER)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err)?;
        let budget: u64 = field(&rec, 9, "budget")?;
        let median_raw = rec.get(6).unwrap_or_default();
        let median = match median_raw.strip_prefix(">=") {
            Some(b) if b == budget.to_string() => Median::Censored,
            Some(_) => {
                return Err(Error::Parse(format!(
                    "censored median '{median_raw}' does not match the budget"
                )))
            }
            None => Median::Value(field(&rec, 6, "median_T")?),
        };
        rows.push(SummaryRow {
            problem: field(&rec, 0, "problem")?,
            params: field(&rec, 1, "params")?,
            scheme: field(&rec, 2, "scheme")?,
            pair_mode: field(&rec, 3, "pair_mode")?,
            crossover_rate: field(&rec, 4, "p_x")?,
            trials: field(&rec, 5, "trials")?,
            median,
            mean: field(&rec, 7, "mean_T")?,
            censored: field(&rec, 8, "censored")?,
            budget,
        });
    }
    Ok(rows)
}

pub fn write_slopes_csv(rows: &[SlopeRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOPE_HEADER).map_err(csv_err)?;
    for r in rows {
        let (slope, stderr) = match r.fit {
            Some(fit) => (fit.slope.to_string(), fit.stderr.to_string()),
            None => (UNDEFINED.to_string(), UNDEFINED.to_string()),
        };
        w.write_record([r.problem.as_str(), r.scheme.as_str(), &slope, &stderr])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a slope file. The intercept is not part of the file and is
/// returned as NaN.
pub fn read_slopes_csv(input: impl Read) -> Result<Vec<SlopeRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &SLOPE_HEADER)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err)?;
        let fit = match (rec.get(2), rec.get(3)) {
            (Some(UNDEFINED), Some(UNDEFINED)) => None,
            _ => Some(SlopeFit {
                slope: field(&rec, 2, "slope")?,
                intercept: f64::NAN,
                stderr: field(&rec, 3, "stderr")?,
            }),
        };
        rows.push(SlopeRow {
            problem: field(&rec, 0, "problem")?,
            scheme: field(&rec, 1, "scheme")?,
            fit,
        });
    }
    Ok(rows)
}

/// One row per level: fitness, count before, count after.
pub fn write_histogram_tsv(rows: &[(f64, usize, usize)], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(HISTOGRAM_HEADER).map_err(csv_err)?;
    for (level, before, after) in rows {
        w.write_record([level.to_string(), before.to_string(), after.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histogram_tsv(input: impl Read) -> Result<Vec<(f64, usize, usize)>> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(input);
    check_header(&mut r, &HISTOGRAM_HEADER)?;
    r.records()
        .map(|record| {
            let rec = record.map_err(csv_err)?;
            Ok((
                field(&rec, 0, "level")?,
                field(&rec, 1, "before")?,
                field(&rec, 2, "after")?,
            ))
        })
        .collect()
}

/// The full `|F| × |F|` joint matrix, one row per first fitness, no header.
pub fn write_pair_matrix_csv(dist: &PairDistribution, out: impl Write) -> Result<()> {
    let n = dist.levels();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..n {
        w.write_record((0..n).map(|j| dist.joint(i, j).to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a square matrix written by [`write_pair_matrix_csv`].
pub fn read_pair_matrix_csv(input: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err)?;
        let row: Vec<f64> = (0..rec.len()).map(|j| field(&rec, j, "p")).collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.iter().any(|row| row.len() != rows.len()) {
        return Err(Error::Parse("pair matrix is not square".into()));
    }
    Ok(rows)
}

pub fn write_tsp_csv(rows: &[TspRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TSP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.seed.to_string(),
            r.best_fitness.to_string(),
            r.best_length.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tsp_csv(input: impl Read) -> Result<Vec<TspRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &TSP_HEADER)?;
    r.records()
        .map(|record| {
            let rec = record.map_err(csv_err)?;
            Ok(TspRow {
                scheme: field(&rec, 0, "scheme")?,
                seed: field(&rec, 1, "seed")?,
                best_fitness: field(&rec, 2, "best_fitness")?,
                best_length: field(&rec, 3, "best_length")?,
            })
        })
        .collect()
}

pub fn write_trace_json(trace: &RunTrace, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, trace).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_trace_json(input: impl Read) -> Result<RunTrace> {
    serde_json::from_reader(input).map_err(|e| Error::Parse(format!("trace JSON: {e}")))
}
