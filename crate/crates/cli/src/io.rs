use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use cfproj_core::{AuxiliaryRow, JointRow, PrimaryRow};

use crate::error::{CliError, Result};

/// Reads the named numeric columns (matched against the header, in any
/// order) from a CSV file. Every field must parse as a finite real.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let shown = path.display().to_string();
    let input_err = |message: String| CliError::Input { path: shown.clone(), message };
    let file = File::open(path).map_err(|e| input_err(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| input_err(e.to_string()))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers.iter().position(|h| h == *c).ok_or_else(|| CliError::MissingColumn {
                path: shown.clone(),
                column: c.to_string(),
            })
        })
        .collect::<Result<_>>()?;

    let mut out = vec![Vec::new(); columns.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input_err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, &j) in idx.iter().enumerate() {
            let field = rec.get(j).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| CliError::Field {
                path: shown.clone(),
                line,
                column: columns[k].to_string(),
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Field {
                    path: shown.clone(),
                    line,
                    column: columns[k].to_string(),
                    message: format!("'{field}' is not finite"),
                });
            }
            out[k].push(v);
        }
    }
    Ok(out)
}

pub fn read_auxiliary(path: &Path) -> Result<Vec<AuxiliaryRow>> {
    let c = read_columns(path, &["z", "a"])?;
    Ok(c[0].iter().zip(&c[1]).map(|(&z, &a)| AuxiliaryRow { z, a }).collect())
}

pub fn read_primary(path: &Path) -> Result<Vec<PrimaryRow>> {
    let c = read_columns(path, &["a", "y"])?;
    Ok(c[0].iter().zip(&c[1]).map(|(&a, &y)| PrimaryRow { a, y }).collect())
}

pub fn read_joint(path: &Path) -> Result<Vec<JointRow>> {
    let c = read_columns(path, &["z", "a", "y"])?;
    Ok((0..c[0].len()).map(|i| JointRow { z: c[0][i], a: c[1][i], y: c[2][i] }).collect())
}

/// Renders a header and rows with `\n` line endings.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Writes to `path` through a temporary file in the same directory and a
/// rename, or to standard output when no path is given.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        return out
            .write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|source| CliError::Output { path: "<stdout>".into(), source });
    };
    let out_err = |source: io::Error| CliError::Output { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(out_err)?;
    tmp.write_all(bytes).map_err(out_err)?;
    tmp.as_file().sync_all().map_err(out_err)?;
    tmp.persist(path).map_err(|e| out_err(e.error))?;
    Ok(())
}

/// Shortest round-trip decimal form; empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn columns_by_header_name() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "x.csv", "a, z ,extra\n1.5,2,x\n-3,4e-1,y\n");
        let rows = read_auxiliary(&p).unwrap();
        assert_eq!(rows, vec![AuxiliaryRow { z: 2.0, a: 1.5 }, AuxiliaryRow { z: 0.4, a: -3.0 }]);
    }

    #[test]
    fn bad_fields_cite_line_and_column() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "x.csv", "a,y\n1,2\n3,oops\n");
        let msg = read_primary(&p).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("'y'"), "{msg}");
        let p = write(d.path(), "x.csv", "a,y\n1,2\nNaN,1\n");
        assert_eq!(read_primary(&p).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_column_is_named() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "x.csv", "a,w\n1,2\n");
        let e = read_auxiliary(&p).unwrap_err();
        assert!(matches!(&e, CliError::MissingColumn { column, .. } if column == "z"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("out.txt");
        write_output(Some(&p), b"one").unwrap();
        write_output(Some(&p), b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1);
    }

    #[test]
    fn csv_uses_newlines() {
        let b = csv_bytes(&["x", "y"], &[vec![num(Some(0.1)), num(None)]]);
        assert_eq!(b, b"x,y\n0.1,\n");
    }
}
