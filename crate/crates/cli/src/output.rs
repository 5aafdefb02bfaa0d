//! CSV and JSON emission. CSV files start with `# key=value` metadata lines,
//! then a header row; floats carry 17 significant digits and lines end in LF.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use gibbsline_core::DiscreteLineEnsemble;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

/// Writes metadata, header and rows.
pub fn write_csv<I>(
    path: &Path,
    metadata: &[(String, String)],
    header: &[&str],
    rows: I,
) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = create(path)?;
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// `sample,i,j,value` rows for a list of ensembles.
pub fn ensemble_rows(ensembles: &[DiscreteLineEnsemble]) -> impl Iterator<Item = Vec<String>> + '_ {
    ensembles.iter().enumerate().flat_map(|(s, e)| {
        (e.first_curve()..e.first_curve() + e.num_curves()).flat_map(move |i| {
            (e.t0()..=e.t1()).map(move |j| {
                vec![
                    s.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(e.at(i, j)),
                ]
            })
        })
    })
}

/// JSON form of one sampled ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub sample: usize,
    pub first_curve: usize,
    pub t0: i64,
    pub curves: Vec<Vec<f64>>,
}

impl EnsembleRecord {
    pub fn new(sample: usize, e: &DiscreteLineEnsemble) -> Self {
        let curves = (e.first_curve()..e.first_curve() + e.num_curves())
            .map(|i| e.curve(i).map(<[f64]>::to_vec).unwrap_or_default())
            .collect();
        Self {
            sample,
            first_curve: e.first_curve(),
            t0: e.t0(),
            curves,
        }
    }
}

/// Writes ensembles as `<stem>.csv` or `<stem>.json` under `dir`.
pub fn write_ensembles(
    dir: &Path,
    stem: &str,
    format: crate::args::Format,
    metadata: &[(String, String)],
    ensembles: &[DiscreteLineEnsemble],
) -> Result<PathBuf> {
    match format {
        crate::args::Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            write_csv(
                &path,
                metadata,
                &["sample", "i", "j", "value"],
                ensemble_rows(ensembles),
            )?;
            Ok(path)
        }
        crate::args::Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            let meta: BTreeMap<&str, &str> = metadata
                .iter()
                .map(|(k, v)| (k.as_str(), v.as_str()))
                .collect();
            let records: Vec<EnsembleRecord> = ensembles
                .iter()
                .enumerate()
                .map(|(s, e)| EnsembleRecord::new(s, e))
                .collect();
            write_json(
                &path,
                &serde_json::json!({ "metadata": meta, "samples": records }),
            )?;
            Ok(path)
        }
    }
}

/// `key=value` pairs written ahead of every table.
pub type Metadata = Vec<(String, String)>;

/// Reads a `sample,i,j,value` CSV back into ensembles, with its metadata.
pub fn read_ensemble_csv(path: &Path) -> Result<(Metadata, Vec<DiscreteLineEnsemble>)> {
    let file =
        File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    let mut metadata = Vec::new();
    let mut reader = BufReader::new(file);
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        if n == 0 {
            break;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body.push_str(&line);
        }
    }
    let mut csv = csv::Reader::from_reader(body.as_bytes());
    let header = csv.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["sample", "i", "j", "value"] {
        return Err(CliError::usage(format!(
            "{}: expected header sample,i,j,value",
            path.display()
        )));
    }
    // sample -> curve -> (time, value)
    let mut data: BTreeMap<usize, BTreeMap<usize, Vec<(i64, f64)>>> = BTreeMap::new();
    for rec in csv.records() {
        let rec = rec?;
        let bad = |what: &str| {
            CliError::usage(format!("{}: bad {what} in row {:?}", path.display(), rec))
        };
        let s: usize = rec[0].parse().map_err(|_| bad("sample"))?;
        let i: usize = rec[1].parse().map_err(|_| bad("curve"))?;
        let j: i64 = rec[2].parse().map_err(|_| bad("time"))?;
        let v: f64 = rec[3].parse().map_err(|_| bad("value"))?;
        data.entry(s)
            .or_default()
            .entry(i)
            .or_default()
            .push((j, v));
    }
    let mut ensembles = Vec::with_capacity(data.len());
    for (expect, (s, curves)) in data.into_iter().enumerate() {
        if s != expect {
            return Err(CliError::usage(format!(
                "{}: samples must be numbered 0, 1, ... (missing {expect})",
                path.display()
            )));
        }
        let first = *curves.keys().next().unwrap_or(&1);
        let mut t0 = None;
        let mut rows = Vec::with_capacity(curves.len());
        for (c, (i, mut pts)) in curves.into_iter().enumerate() {
            if i != first + c {
                return Err(CliError::usage(format!(
                    "{}: sample {s} skips curve {}",
                    path.display(),
                    first + c
                )));
            }
            pts.sort_by_key(|p| p.0);
            let start = pts[0].0;
            if pts.iter().enumerate().any(|(k, p)| p.0 != start + k as i64)
                || t0.is_some_and(|t| t != start)
            {
                return Err(CliError::usage(format!(
                    "{}: sample {s} curve {i} has irregular times",
                    path.display()
                )));
            }
            t0 = Some(start);
            rows.push(pts.into_iter().map(|p| p.1).collect::<Vec<f64>>());
        }
        ensembles.push(DiscreteLineEnsemble::from_rows(
            first,
            t0.unwrap_or(0),
            &rows,
        )?);
    }
    if ensembles.is_empty() {
        return Err(CliError::usage(format!("{}: no samples", path.display())));
    }
    Ok((metadata, ensembles))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456789.125, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn ensemble_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = DiscreteLineEnsemble::from_rows(
            1,
            -2,
            &[
                vec![0.1, 0.2, 0.3, 0.4, 0.5],
                vec![-1.0, -0.7, -0.9, -1.1, -1.0 / 3.0],
            ],
        )
        .unwrap();
        let b = DiscreteLineEnsemble::from_rows(
            1,
            -2,
            &[
                vec![1.1, 1.2, 1.3, 1.4, 1.5],
                vec![-2.0, -2.7, -2.9, -2.1, -2.5],
            ],
        )
        .unwrap();
        let meta = vec![("theta".to_string(), "1".to_string())];
        let path = write_ensembles(
            dir.path(),
            "e",
            crate::args::Format::Csv,
            &meta,
            &[a.clone(), b.clone()],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# theta=1\nsample,i,j,value\n"));
        assert!(!text.contains('\r'));
        let (m, back) = read_ensemble_csv(&path).unwrap();
        assert_eq!(m, meta);
        assert_eq!(back, vec![a, b]);
    }
}
