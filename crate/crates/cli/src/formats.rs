//! On-disk text formats.
//!
//! Three deliberately plain CSV dialects, all written with shortest
//! round-trip float formatting so that write → read → write is
//! byte-identical:
//!
//! * time series — `# rows=N cols=T` header, a line of series names, then
//!   one line of T values per series;
//! * square matrices (connectivity, ground truth) — a header row and a
//!   leading column of series names;
//! * labels — `subject_id,label` with a header line.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use lsagc_core::TimeSeriesEnsemble;

use crate::error::{io_err, CliError, Result};

/// Write `contents` via a temp file + rename so readers never observe a
/// half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp: PathBuf = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    fs::write(&tmp, contents).map_err(io_err("write", &tmp))?;
    fs::rename(&tmp, path).map_err(io_err("rename into place", path))?;
    Ok(())
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| format_err(path, line, format!("not a number: {field:?}")))
}

/// Serialize an ensemble to the time-series format.
pub fn timeseries_to_string(ensemble: &TimeSeriesEnsemble) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# rows={} cols={}\n",
        ensemble.n_series(),
        ensemble.n_samples()
    ));
    out.push_str(&ensemble.names().join(","));
    out.push('\n');
    for row in ensemble.data().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries(path: &Path, ensemble: &TimeSeriesEnsemble) -> Result<()> {
    write_atomic(path, &timeseries_to_string(ensemble))
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeriesEnsemble> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let dims = header
        .strip_prefix("# rows=")
        .and_then(|rest| rest.split_once(" cols="))
        .ok_or_else(|| {
            format_err(path, 1, "first line must look like `# rows=N cols=T`")
        })?;
    let n: usize = dims
        .0
        .trim()
        .parse()
        .map_err(|_| format_err(path, 1, format!("bad row count {:?}", dims.0)))?;
    let t: usize = dims
        .1
        .trim()
        .parse()
        .map_err(|_| format_err(path, 1, format!("bad column count {:?}", dims.1)))?;

    let (_, name_line) = lines
        .next()
        .ok_or_else(|| format_err(path, 2, "missing series-name line"))?;
    let names: Vec<String> = name_line.split(',').map(|s| s.trim().to_string()).collect();
    if names.len() != n {
        return Err(format_err(
            path,
            2,
            format!("expected {n} series names, found {}", names.len()),
        ));
    }

    let mut data = Array2::zeros((n, t));
    let mut filled = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if filled >= n {
            return Err(format_err(path, idx + 1, format!("more than {n} data rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != t {
            return Err(format_err(
                path,
                idx + 1,
                format!("expected {t} values, found {}", fields.len()),
            ));
        }
        for (j, field) in fields.iter().enumerate() {
            data[[filled, j]] = parse_value(path, idx + 1, field)?;
        }
        filled += 1;
    }
    if filled != n {
        return Err(format_err(
            path,
            3,
            format!("expected {n} data rows, found {filled}"),
        ));
    }
    Ok(TimeSeriesEnsemble::new(data, names, None)?)
}

/// Serialize a named square matrix: header row of names, then one line per
/// row led by its name.
pub fn matrix_to_string(names: &[String], values: &Array2<f64>) -> String {
    let mut out = String::new();
    out.push(',');
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, row) in values.rows().into_iter().enumerate() {
        out.push_str(&names[i]);
        for v in row.iter() {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, names: &[String], values: &Array2<f64>) -> Result<()> {
    write_atomic(path, &matrix_to_string(names, values))
}

/// Parse a named square matrix; returns the names and values.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or("");
    if !first.is_empty() {
        return Err(format_err(path, 1, "header must start with an empty cell"));
    }
    let names: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
    let n = names.len();
    if n == 0 {
        return Err(format_err(path, 1, "no series names in header"));
    }
    let mut values = Array2::zeros((n, n));
    let mut filled = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if filled >= n {
            return Err(format_err(path, idx + 1, format!("more than {n} rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(format_err(
                path,
                idx + 1,
                format!("expected name + {n} values, found {} fields", fields.len()),
            ));
        }
        if fields[0].trim() != names[filled] {
            return Err(format_err(
                path,
                idx + 1,
                format!(
                    "row name {:?} does not match header name {:?}",
                    fields[0], names[filled]
                ),
            ));
        }
        for (j, field) in fields[1..].iter().enumerate() {
            values[[filled, j]] = parse_value(path, idx + 1, field)?;
        }
        filled += 1;
    }
    if filled != n {
        return Err(format_err(
            path,
            2,
            format!("expected {n} rows, found {filled}"),
        ));
    }
    Ok((names, values))
}

pub fn labels_to_string(labels: &[(String, u8)]) -> String {
    let mut out = String::from("subject_id,label\n");
    for (id, label) in labels {
        out.push_str(&format!("{id},{label}\n"));
    }
    out
}

pub fn write_labels(path: &Path, labels: &[(String, u8)]) -> Result<()> {
    write_atomic(path, &labels_to_string(labels))
}

pub fn read_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    if header.trim() != "subject_id,label" {
        return Err(format_err(
            path,
            1,
            format!("header must be `subject_id,label`, found {header:?}"),
        ));
    }
    let mut labels = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line.split_once(',').ok_or_else(|| {
            format_err(path, idx + 1, "expected `subject_id,label`")
        })?;
        let label: u8 = label
            .trim()
            .parse()
            .ok()
            .filter(|l| *l <= 1)
            .ok_or_else(|| {
                format_err(path, idx + 1, format!("label must be 0 or 1, found {label:?}"))
            })?;
        labels.push((id.trim().to_string(), label));
    }
    if labels.is_empty() {
        return Err(format_err(path, 2, "no subjects listed"));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn timeseries_round_trip_is_byte_identical() {
        let data = array![[1.5, -2.25, 0.1], [0.0, 3.0000000000000004, -1e-9]];
        let ensemble =
            TimeSeriesEnsemble::new(data, vec!["a".into(), "b".into()], None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        write_timeseries(&path, &ensemble).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        let read = read_timeseries(&path).unwrap();
        assert_eq!(read.data(), ensemble.data());
        assert_eq!(read.names(), ensemble.names());
        write_timeseries(&path, &read).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), first);
    }

    #[test]
    fn timeseries_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        for (body, fragment) in [
            ("", "empty file"),
            ("rows=2 cols=2\na,b\n1,2\n3,4\n", "# rows=N"),
            ("# rows=2 cols=2\na\n1,2\n3,4\n", "2 series names"),
            ("# rows=2 cols=2\na,b\n1,2\n3\n", "expected 2 values"),
            ("# rows=2 cols=2\na,b\n1,2\n", "found 1"),
            ("# rows=2 cols=2\na,b\n1,2\n3,4\n5,6\n", "more than 2"),
            ("# rows=2 cols=2\na,b\n1,x\n3,4\n", "not a number"),
        ] {
            fs::write(&path, body).unwrap();
            let err = read_timeseries(&path).unwrap_err();
            assert_eq!(err.exit_code(), 4, "{body:?}");
            assert!(err.to_string().contains(fragment), "{err} vs {fragment}");
        }
    }

    #[test]
    fn matrix_round_trip_and_name_check() {
        let names = vec!["n0".to_string(), "n1".to_string()];
        let values = array![[0.0, 0.125], [-3.5, 0.0]];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&path, &names, &values).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, ",n0,n1\nn0,0,0.125\nn1,-3.5,0\n");
        let (rnames, rvalues) = read_matrix(&path).unwrap();
        assert_eq!(rnames, names);
        assert_eq!(rvalues, values);

        fs::write(&path, ",n0,n1\nn1,0,0.125\nn0,-3.5,0\n").unwrap();
        assert!(read_matrix(&path).unwrap_err().to_string().contains("does not match"));
    }

    #[test]
    fn labels_round_trip_and_validation() {
        let labels = vec![("subject_00".to_string(), 0u8), ("subject_01".to_string(), 1u8)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        write_labels(&path, &labels).unwrap();
        assert_eq!(read_labels(&path).unwrap(), labels);

        fs::write(&path, "subject_id,label\ns0,2\n").unwrap();
        assert!(read_labels(&path).unwrap_err().to_string().contains("0 or 1"));
        fs::write(&path, "id,label\ns0,1\n").unwrap();
        assert!(read_labels(&path).unwrap_err().to_string().contains("subject_id"));
    }
}
