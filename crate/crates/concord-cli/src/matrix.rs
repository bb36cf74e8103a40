//! Drug sensitivity matrices: drugs in rows, cell lines in columns,
//! values in [0, 1] (AAC units), empty cells missing.
//!
//! The format mirrors the matrices exported from pharmacogenomics
//! packages: a CSV whose header row lists cell-line identifiers and whose
//! first column lists drug identifiers. Identifiers must be unique within
//! their axis.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use concord::{ConcordError, PairedSample, Result, Statistic};

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    drugs: Vec<String>,
    cell_lines: Vec<String>,
    /// Row-major, one entry per (drug, cell line); None = missing.
    values: Vec<Option<f64>>,
    drug_index: HashMap<String, usize>,
}

impl SensitivityMatrix {
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            ConcordError::InvalidParameter(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// Parses and validates a matrix; `name` labels error messages.
    pub fn from_reader(reader: impl Read, name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| ConcordError::InvalidParameter(format!("{name}: {e}")))?;
        if headers.len() < 2 {
            return Err(ConcordError::InvalidParameter(format!(
                "{name}: need a drug-id column plus at least one cell-line column"
            )));
        }
        let cell_lines: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut seen = HashMap::new();
        for (j, id) in cell_lines.iter().enumerate() {
            if id.is_empty() {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name}: empty cell-line identifier in header column {}",
                    j + 2
                )));
            }
            if seen.insert(id.clone(), j).is_some() {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name}: duplicate cell-line identifier {id:?}"
                )));
            }
        }

        let mut drugs = Vec::new();
        let mut values = Vec::new();
        let mut drug_index = HashMap::new();
        for (row, record) in rdr.records().enumerate() {
            let record =
                record.map_err(|e| ConcordError::InvalidParameter(format!("{name}: {e}")))?;
            // Row 1 is the header, so data row r is file line r + 2.
            let line = row + 2;
            if record.len() != cell_lines.len() + 1 {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name} row {line}: expected {} fields, got {}",
                    cell_lines.len() + 1,
                    record.len()
                )));
            }
            let drug = record[0].to_string();
            if drug.is_empty() {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name} row {line}: empty drug identifier"
                )));
            }
            if drug_index.insert(drug.clone(), drugs.len()).is_some() {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name} row {line}: duplicate drug identifier {drug:?}"
                )));
            }
            for (j, field) in record.iter().skip(1).enumerate() {
                if field.is_empty() {
                    values.push(None);
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| {
                    ConcordError::InvalidParameter(format!(
                        "{name} row {line} (drug {drug:?}), column {:?}: cannot parse {field:?}",
                        cell_lines[j]
                    ))
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConcordError::InvalidParameter(format!(
                        "{name} row {line} (drug {drug:?}), column {:?}: value {v} outside [0, 1]",
                        cell_lines[j]
                    )));
                }
                values.push(Some(v));
            }
            drugs.push(drug);
        }
        if drugs.is_empty() {
            return Err(ConcordError::InvalidParameter(format!(
                "{name}: no drug rows"
            )));
        }
        Ok(Self {
            drugs,
            cell_lines,
            values,
            drug_index,
        })
    }

    pub fn drugs(&self) -> &[String] {
        &self.drugs
    }

    pub fn cell_lines(&self) -> &[String] {
        &self.cell_lines
    }

    pub fn drug_row(&self, id: &str) -> Option<usize> {
        self.drug_index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let w = self.cell_lines.len();
        &self.values[i * w..(i + 1) * w]
    }

    /// Column indices of the cell lines shared with `other`, as
    /// (self column, other column) pairs in self's column order.
    pub fn common_cells(&self, other: &SensitivityMatrix) -> Vec<(usize, usize)> {
        let theirs: HashMap<&str, usize> = other
            .cell_lines
            .iter()
            .enumerate()
            .map(|(j, id)| (id.as_str(), j))
            .collect();
        self.cell_lines
            .iter()
            .enumerate()
            .filter_map(|(j, id)| theirs.get(id.as_str()).map(|&k| (j, k)))
            .collect()
    }
}

/// Pairwise-complete sample for one drug of `a` against one drug of `b`
/// over a precomputed cell-line mapping. None when fewer than
/// `min_cells` complete observations remain (and always when fewer
/// than 2).
pub fn paired_over_common(
    a: &SensitivityMatrix,
    b: &SensitivityMatrix,
    drug_a: usize,
    drug_b: usize,
    mapping: &[(usize, usize)],
    min_cells: usize,
) -> Option<PairedSample> {
    let ra = a.row(drug_a);
    let rb = b.row(drug_b);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &(ja, jb) in mapping {
        if let (Some(va), Some(vb)) = (ra[ja], rb[jb]) {
            x.push(va);
            y.push(vb);
        }
    }
    if x.len() < min_cells.max(2) {
        return None;
    }
    PairedSample::new(x, y).ok()
}

/// Similarity of two drug rows, or None when the sample is too small or
/// the statistic is undefined on it. Matrix-shaped outputs treat such
/// cells as missing rather than failing the whole computation.
pub fn cell_similarity(
    a: &SensitivityMatrix,
    b: &SensitivityMatrix,
    drug_a: usize,
    drug_b: usize,
    mapping: &[(usize, usize)],
    min_cells: usize,
    statistic: &Statistic,
) -> Option<f64> {
    let sample = paired_over_common(a, b, drug_a, drug_b, mapping, min_cells)?;
    statistic.evaluate(&sample).ok().map(|r| r.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SensitivityMatrix> {
        SensitivityMatrix::from_reader(text.as_bytes(), "test")
    }

    #[test]
    fn parses_matrix_with_missing_cells() {
        let m = parse("drug,c1,c2,c3\nd1,0.1,,0.3\nd2,0.4,0.5,1.0\n").unwrap();
        assert_eq!(m.drugs(), &["d1", "d2"]);
        assert_eq!(m.cell_lines(), &["c1", "c2", "c3"]);
        assert_eq!(m.row(0), &[Some(0.1), None, Some(0.3)]);
        assert_eq!(m.row(1), &[Some(0.4), Some(0.5), Some(1.0)]);
        assert_eq!(m.drug_row("d2"), Some(1));
        assert_eq!(m.drug_row("d9"), None);
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        let err = parse("drug,c1\nd1,1.5\n").unwrap_err().to_string();
        assert!(err.contains("outside [0, 1]") && err.contains("d1"), "{err}");
        assert!(parse("drug,c1,c1\nd1,0.1,0.2\n").is_err());
        assert!(parse("drug,c1\nd1,0.1\nd1,0.2\n").is_err());
        let err = parse("drug,c1\nd1,oops\n").unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("c1"), "{err}");
    }

    #[test]
    fn common_cells_map_by_identifier() {
        let a = parse("drug,c1,c2,c3\nd1,0.1,0.2,0.3\n").unwrap();
        let b = parse("drug,c3,c9,c1\nd1,0.5,0.6,0.7\n").unwrap();
        assert_eq!(a.common_cells(&b), vec![(0, 2), (2, 0)]);
    }

    #[test]
    fn pairwise_complete_respects_min_cells() {
        let a = parse("drug,c1,c2,c3,c4\nd1,0.1,0.2,,0.4\n").unwrap();
        let b = parse("drug,c1,c2,c3,c4\nd1,0.5,,0.7,0.8\n").unwrap();
        let mapping = a.common_cells(&b);
        let s = paired_over_common(&a, &b, 0, 0, &mapping, 2).unwrap();
        assert_eq!(s.x(), &[0.1, 0.4]);
        assert_eq!(s.y(), &[0.5, 0.8]);
        assert!(paired_over_common(&a, &b, 0, 0, &mapping, 3).is_none());
    }
}
