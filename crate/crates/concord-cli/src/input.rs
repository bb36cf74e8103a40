//! Plain numeric column files: one value per line, blank/NA/NaN missing.

use std::path::Path;

use concord::{ConcordError, PairedSample, Result};

/// Reads a column of optional numbers. Blank lines and the markers `NA`
/// and `NaN` (any case) denote missing values; anything else must parse
/// as a finite float.
pub fn read_column(path: &Path) -> Result<Vec<Option<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConcordError::InvalidParameter(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
            out.push(None);
            continue;
        }
        let v: f64 = s.parse().map_err(|_| {
            ConcordError::InvalidParameter(format!(
                "{} line {}: cannot parse {s:?} as a number",
                path.display(),
                lineno + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(ConcordError::InvalidParameter(format!(
                "{} line {}: non-finite value {v}",
                path.display(),
                lineno + 1
            )));
        }
        out.push(Some(v));
    }
    if out.is_empty() {
        return Err(ConcordError::InvalidParameter(format!(
            "{} contains no values",
            path.display()
        )));
    }
    Ok(out)
}

/// Aligns two columns by line number and keeps pairwise-complete rows.
pub fn complete_pairs(a: &[Option<f64>], b: &[Option<f64>]) -> Result<PairedSample> {
    if a.len() != b.len() {
        return Err(ConcordError::InvalidParameter(format!(
            "columns must have equal length (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&va, &vb) in a.iter().zip(b) {
        if let (Some(va), Some(vb)) = (va, vb) {
            x.push(va);
            y.push(vb);
        }
    }
    if x.len() < 2 {
        return Err(ConcordError::DegenerateInput(format!(
            "only {} complete pair(s) after dropping missing values (need >= 2)",
            x.len()
        )));
    }
    PairedSample::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_numbers_and_missing_markers() {
        let f = write_tmp("1.5\n\nNA\nnan\n-2\n");
        let col = read_column(f.path()).unwrap();
        assert_eq!(col, vec![Some(1.5), None, None, None, Some(-2.0)]);
    }

    #[test]
    fn reports_line_numbers_on_parse_errors() {
        let f = write_tmp("1.0\nabc\n");
        let err = read_column(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let f = write_tmp("1.0\ninf\n");
        assert!(read_column(f.path()).is_err());
    }

    #[test]
    fn pairwise_complete_alignment() {
        let a = vec![Some(1.0), None, Some(3.0), Some(4.0)];
        let b = vec![Some(2.0), Some(9.0), None, Some(8.0)];
        let s = complete_pairs(&a, &b).unwrap();
        assert_eq!(s.x(), &[1.0, 4.0]);
        assert_eq!(s.y(), &[2.0, 8.0]);
    }

    #[test]
    fn too_few_complete_pairs_is_an_error() {
        let a = vec![Some(1.0), None, Some(3.0)];
        let b = vec![None, Some(9.0), Some(1.0)];
        assert!(complete_pairs(&a, &b).is_err());
        // All-missing partner column.
        let c = vec![None, None, None];
        assert!(complete_pairs(&a, &c).is_err());
    }
}
