//! Sample input and table output.
//!
//! Samples are plain text, one decimal observation per line; blank lines and
//! anything after `#` are ignored. Every number written by this module uses the
//! shortest decimal form that parses back to the same `f64`, so outputs are
//! byte-stable across runs.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorMatrix, Sample};
use crate::experiments::{GammaMeanRow, MiseReport};
use crate::selection::SelectionResult;

/// Shortest round-trip decimal form of `x`.
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

/// Parses one input line; `Ok(None)` for blank and comment-only lines.
pub fn parse_line(line: &str, line_number: usize) -> Result<Option<f64>> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    match content.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Some(x)),
        _ => Err(Error::Parse {
            line: line_number,
            content: content.to_string(),
        }),
    }
}

/// Lazily parsed observations, for streaming.
pub struct Observations<R> {
    lines: io::Lines<R>,
    line_number: usize,
}

impl<R: BufRead> Observations<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_number: 0,
        }
    }
}

impl<R: BufRead> Iterator for Observations<R> {
    type Item = Result<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_number += 1;
            match parse_line(&line, self.line_number) {
                Ok(None) => continue,
                Ok(Some(x)) => return Some(Ok(x)),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Reads a whole sample; an input without observations is an error.
pub fn read_sample<R: BufRead>(reader: R) -> Result<Sample> {
    let values = Observations::new(reader).collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Sample::new(values)
}

/// Opens `path` for reading, or standard input for `None` and `-`.
pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => {
            let file = File::open(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufReader::new(file)))
        }
    }
}

pub fn read_sample_path(path: Option<&Path>) -> Result<Sample> {
    read_sample(open_input(path)?)
}

/// Creates `path` (and its parent directories) for writing.
pub fn create_file(path: &Path) -> Result<File> {
    let wrap = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(wrap)?;
    }
    File::create(path).map_err(wrap)
}

pub type BufFile = io::BufWriter<File>;

pub fn stdout_lock() -> io::StdoutLock<'static> {
    io::stdout().lock()
}

/// Writes observations one per line.
pub fn write_observations<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for &x in values {
        writeln!(w, "{}", format_number(x))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

fn write_rows<W: Write, I>(w: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `x,density` table.
pub fn write_estimate_csv<W: Write>(w: W, xs: &[f64], values: &[f64]) -> Result<()> {
    write_rows(
        w,
        &["x", "density"],
        xs.iter().zip(values).map(|(&x, &v)| vec![format_number(x), format_number(v)]),
    )
}

#[derive(Serialize)]
struct EstimateJson<'a> {
    x: &'a [f64],
    density: &'a [f64],
}

pub fn write_estimate_json<W: Write>(w: W, xs: &[f64], values: &[f64]) -> Result<()> {
    write_json(w, &EstimateJson { x: xs, density: values })
}

/// Matrix snapshot: a header of grid points, then one row per exponent.
pub fn write_matrix_csv<W: Write>(w: W, matrix: &EstimatorMatrix) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["gamma".to_string()];
    header.extend(matrix.eval_grid().points().iter().map(|&x| format_number(x)));
    out.write_record(&header)?;
    for (j, &gamma) in matrix.gamma_grid().values().iter().enumerate() {
        let mut row = vec![format_number(gamma)];
        row.extend(matrix.row(j).iter().map(|&v| format_number(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-candidate `gamma,criterion,penalty,distance` table.
pub fn write_criterion_csv<W: Write>(w: W, result: &SelectionResult) -> Result<()> {
    write_rows(
        w,
        &["gamma", "criterion", "penalty", "distance"],
        result.per_candidate.iter().map(|c| {
            vec![
                format_number(c.gamma),
                format_number(c.criterion),
                format_number(c.penalty),
                format_number(c.distance),
            ]
        }),
    )
}

/// One line per cell, in the layout `density,n,method,kernel,mise,std` (both ×100).
pub fn write_mise_csv<W: Write>(w: W, reports: &[MiseReport]) -> Result<()> {
    write_rows(
        w,
        &["density", "n", "method", "kernel", "mise", "std"],
        reports.iter().map(|r| {
            vec![
                r.density.to_string(),
                r.n.to_string(),
                r.method.to_string(),
                r.kernel.to_string(),
                format_number(r.mise_times_100),
                format_number(r.std_times_100),
            ]
        }),
    )
}

/// Phase-1 and phase-2 risks of the frozen strategy, one line per density.
pub fn write_frozen_csv<W: Write>(w: W, pairs: &[(MiseReport, MiseReport)]) -> Result<()> {
    write_rows(
        w,
        &["density", "kernel", "n0", "n", "phase1_mise", "phase1_std", "phase2_mise", "phase2_std"],
        pairs.iter().map(|(a, b)| {
            vec![
                a.density.to_string(),
                a.kernel.to_string(),
                a.n.to_string(),
                b.n.to_string(),
                format_number(a.mise_times_100),
                format_number(a.std_times_100),
                format_number(b.mise_times_100),
                format_number(b.std_times_100),
            ]
        }),
    )
}

/// `k,gamma` trajectory.
pub fn write_trajectory_csv<W: Write>(w: W, gammas: &[(usize, f64)]) -> Result<()> {
    write_rows(
        w,
        &["k", "gamma"],
        gammas.iter().map(|&(k, g)| vec![k.to_string(), format_number(g)]),
    )
}

pub fn write_gamma_mean_csv<W: Write>(w: W, density: &str, kernel: &str, rows: &[GammaMeanRow]) -> Result<()> {
    write_rows(
        w,
        &["density", "kernel", "n", "mean_gamma", "std_gamma"],
        rows.iter().map(|r| {
            vec![
                density.to_string(),
                kernel.to_string(),
                r.n.to_string(),
                format_number(r.mean),
                format_number(r.std),
            ]
        }),
    )
}

/// Wide table: an `x` column followed by one column per labelled curve.
pub fn write_curves_csv<W: Write>(w: W, xs: &[f64], labels: &[String], curves: &[&[f64]]) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["x".to_string()];
    header.extend(labels.iter().cloned());
    out.write_record(&header)?;
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![format_number(x)];
        row.extend(curves.iter().map(|c| format_number(c[i])));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `dir/name`, or `None` when output goes to standard output.
pub fn output_path(dir: Option<&Path>, name: &str) -> Option<PathBuf> {
    dir.map(|d| d.join(name))
}
