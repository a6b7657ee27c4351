//! Reading and writing the flat numeric files the tool exchanges:
//! two/three-column data tables (x, y[, z]), tabulated cdf files, and the
//! `<family>:<params>` grammar naming a known error law.
//!
//! Tables may be comma-, tab-, or whitespace-separated; a single leading
//! header line is auto-detected (any cell that does not parse as a number).
//! Ingestion errors carry the 1-based line number in the file.

use crate::error::{Error, Result};
use crate::model::ErrorDistribution;
use std::io::Write;
use std::path::Path;

fn split_cells(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).filter(|c| !c.is_empty()).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Reads at least `min_cols` numeric columns per line, returning the first
/// `min_cols` values of each row. Blank lines and `#` comments are skipped.
fn read_numeric_table(path: &Path, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut saw_data = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells = split_cells(trimmed);
        let parsed: Option<Vec<f64>> =
            cells.iter().map(|c| c.parse::<f64>().ok()).collect();
        match parsed {
            None if !saw_data => continue, // header line
            None => {
                return Err(Error::Ingestion {
                    row: lineno,
                    message: format!("unparseable numeric row: {trimmed:?}"),
                });
            }
            Some(vals) => {
                if vals.len() < min_cols {
                    return Err(Error::Ingestion {
                        row: lineno,
                        message: format!("expected {min_cols} columns, found {}", vals.len()),
                    });
                }
                for v in &vals[..min_cols] {
                    if !v.is_finite() {
                        return Err(Error::Ingestion {
                            row: lineno,
                            message: format!("non-finite value {v} in row {trimmed:?}"),
                        });
                    }
                }
                rows.push(vals[..min_cols].to_vec());
                saw_data = true;
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Ingestion { row: 0, message: format!("{}: no data rows", path.display()) });
    }
    Ok(rows)
}

/// Reads (x, y) pairs from a two-or-more-column table.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(read_numeric_table(path, 2)?.into_iter().map(|r| (r[0], r[1])).collect())
}

/// Reads a tabulated cdf file of (t, F(t)) rows.
pub fn read_tabulated_cdf(path: &Path) -> Result<ErrorDistribution> {
    let knots = read_numeric_table(path, 2)?.into_iter().map(|r| (r[0], r[1])).collect();
    ErrorDistribution::tabulated(knots)
}

/// Parses the known-error-law grammar:
/// `normal:<sigma>` | `gamma:<shape>:<rate>:<var>` | `exp:<var>` | `table:<path>`.
pub fn parse_known_spec(spec: &str) -> Result<ErrorDistribution> {
    let bad = |msg: &str| Error::Config(format!("known spec {spec:?}: {msg}"));
    let mut parts = spec.splitn(2, ':');
    let family = parts.next().unwrap_or("");
    let rest = parts.next().unwrap_or("");
    let nums = |expect: usize| -> Result<Vec<f64>> {
        let vals: Vec<f64> = rest
            .split(':')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != expect {
            return Err(bad(&format!("expected {expect} parameter(s)")));
        }
        Ok(vals)
    };
    match family {
        "normal" => {
            let v = nums(1)?;
            ErrorDistribution::normal(v[0])
        }
        "gamma" => {
            let v = nums(3)?;
            ErrorDistribution::shifted_gamma(v[0], v[1], v[2])
        }
        "exp" => {
            let v = nums(1)?;
            ErrorDistribution::shifted_exponential(v[0])
        }
        "table" => {
            if rest.is_empty() {
                return Err(bad("missing path"));
            }
            read_tabulated_cdf(Path::new(rest))
        }
        _ => Err(bad("unknown family (expected normal | gamma | exp | table)")),
    }
}

/// Writes (x, y[, z]) rows as CSV with a header, on shortest round-trip float
/// formatting so re-ingestion reproduces the values bit for bit.
pub fn write_pairs_csv(
    path: &Path,
    pairs: &[(f64, f64)],
    latent: Option<&[bool]>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        match latent {
            None => {
                writeln!(w, "x,y")?;
                for &(x, y) in pairs {
                    writeln!(w, "{x},{y}")?;
                }
            }
            Some(z) => {
                writeln!(w, "x,y,z")?;
                for (&(x, y), &zi) in pairs.iter().zip(z) {
                    writeln!(w, "{x},{y},{}", u8::from(zi))?;
                }
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// 64-bit FNV-1a digest of a file, recorded in run manifests so reruns can
/// verify they read the same input.
pub fn file_digest(path: &Path) -> Result<u64> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_is_auto_detected() {
        let f = write_tmp("x,y\n1.5,2.5\n-1,0.25\n");
        let rows = read_pairs(f.path()).unwrap();
        assert_eq!(rows, vec![(1.5, 2.5), (-1.0, 0.25)]);
        let g = write_tmp("1.5,2.5\n-1,0.25\n");
        assert_eq!(read_pairs(g.path()).unwrap(), rows);
    }

    #[test]
    fn tabs_and_spaces_work() {
        let f = write_tmp("t\tF\n-1\t0.1\n0 0.5\n1\t0.9\n");
        let rows = read_pairs(f.path()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1], (0.0, 0.5));
    }

    #[test]
    fn nan_is_rejected_with_line_number() {
        let f = write_tmp("x,y\n1,2\n3,nan\n");
        match read_pairs(f.path()).unwrap_err() {
            Error::Ingestion { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_mid_file_is_an_error_not_a_header() {
        let f = write_tmp("1,2\nounds,3\n");
        match read_pairs(f.path()).unwrap_err() {
            Error::Ingestion { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_roundtrip_is_bitwise() {
        let pairs = vec![
            (0.1 + 0.2, -1.0 / 3.0),
            (f64::MIN_POSITIVE, 1.2345678901234567e-300),
            (123456.789012345, -0.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.csv");
        write_pairs_csv(&p, &pairs, None).unwrap();
        let back = read_pairs(&p).unwrap();
        assert_eq!(back.len(), pairs.len());
        for (a, b) in pairs.iter().zip(&back) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }

    #[test]
    fn known_spec_grammar() {
        assert!(matches!(
            parse_known_spec("normal:1.5").unwrap(),
            ErrorDistribution::Normal { sigma } if sigma == 1.5
        ));
        let g = parse_known_spec("gamma:2:0.5:4").unwrap();
        assert!((g.variance() - 4.0).abs() < 1e-12);
        let e = parse_known_spec("exp:4").unwrap();
        assert!((e.variance() - 4.0).abs() < 1e-12);
        assert!(parse_known_spec("normal").is_err());
        assert!(parse_known_spec("gamma:1:2").is_err());
        assert!(parse_known_spec("weibull:1").is_err());

        let f = write_tmp("t,F\n-3,0.001\n0,0.5\n3,0.999\n");
        let spec = format!("table:{}", f.path().display());
        let tab = parse_known_spec(&spec).unwrap();
        assert!((tab.cdf(0.0) - 0.5).abs() < 1e-12);
    }
}
