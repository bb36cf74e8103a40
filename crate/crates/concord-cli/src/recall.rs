//! Cross-dataset drug recall: how well does a drug's sensitivity profile
//! in one dataset retrieve the same drug in another?
//!
//! For every drug shared between two matrices, the similarity of its
//! profile in A against every drug profile in B is computed over their
//! common cell lines, and the matched drug's rank among the candidates is
//! recorded on a [0, 1] scale where 0 means most similar. The report
//! carries the rank ECDF and its area: 1.0 for perfect self-retrieval,
//! 0.5 in expectation when the datasets carry no correspondence.

use rayon::prelude::*;
use serde::Serialize;

use concord::{ConcordError, Result, Statistic};

use crate::matrix::{cell_similarity, SensitivityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrugRank {
    pub drug: String,
    /// Scaled rank in [0, 1]; 0 = matched drug was the most similar.
    pub rank: f64,
    /// Candidates the matched drug competed against.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedDrug {
    pub drug: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    pub dataset_a: String,
    pub dataset_b: String,
    pub statistic: String,
    pub min_common_cell_lines: usize,
    /// One entry per qualifying shared drug, sorted by drug id.
    pub ranks: Vec<DrugRank>,
    /// Corner points of the rank ECDF, ready to plot.
    pub ecdf: Vec<(f64, f64)>,
    /// Area under the rank ECDF by trapezoidal integration.
    pub area: f64,
    pub excluded: Vec<ExcludedDrug>,
}

enum DrugOutcome {
    Ranked(DrugRank),
    Excluded(ExcludedDrug),
}

/// Runs the recall benchmark of `a` against `b`.
///
/// Ties in similarity are broken by average rank; a drug pair with fewer
/// than `min_cells` common non-missing cell lines is excluded from the
/// candidate set. Shared drugs whose matched pair is excluded, or that
/// have no competitor left, land in `excluded` with a reason.
pub fn recall_report(
    a: &SensitivityMatrix,
    b: &SensitivityMatrix,
    dataset_a: &str,
    dataset_b: &str,
    statistic: &Statistic,
    min_cells: usize,
) -> Result<RecallReport> {
    let mapping = a.common_cells(b);
    let mut shared: Vec<&String> = a
        .drugs()
        .iter()
        .filter(|d| b.drug_row(d).is_some())
        .collect();
    shared.sort();
    if shared.is_empty() {
        return Err(ConcordError::DegenerateInput(
            "no drugs shared between the two matrices".into(),
        ));
    }

    let outcomes: Vec<DrugOutcome> = shared
        .par_iter()
        .map(|&drug| {
            let ia = a.drug_row(drug).expect("shared drug is in a");
            let matched = b.drug_row(drug).expect("shared drug is in b");
            let mut matched_sim = None;
            let mut sims = Vec::with_capacity(b.drugs().len());
            for ib in 0..b.drugs().len() {
                let Some(sim) = cell_similarity(a, b, ia, ib, &mapping, min_cells, statistic)
                else {
                    continue;
                };
                if ib == matched {
                    matched_sim = Some(sim);
                }
                sims.push(sim);
            }
            let Some(matched_sim) = matched_sim else {
                return DrugOutcome::Excluded(ExcludedDrug {
                    drug: drug.clone(),
                    reason: format!(
                        "matched pair has fewer than {min_cells} common cell lines \
                         or an undefined similarity"
                    ),
                });
            };
            if sims.len() < 2 {
                return DrugOutcome::Excluded(ExcludedDrug {
                    drug: drug.clone(),
                    reason: "no competing candidate drugs with a defined similarity".into(),
                });
            }
            // Average rank under ties: count strictly better candidates
            // plus half of the remaining tied ones (the match itself ties
            // with itself, contributing zero).
            let better = sims.iter().filter(|&&s| s > matched_sim).count();
            let tied = sims.iter().filter(|&&s| s == matched_sim).count();
            let position = better as f64 + (tied - 1) as f64 / 2.0;
            DrugOutcome::Ranked(DrugRank {
                drug: drug.clone(),
                rank: position / (sims.len() - 1) as f64,
                candidates: sims.len(),
            })
        })
        .collect();

    let mut ranks = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            DrugOutcome::Ranked(r) => ranks.push(r),
            DrugOutcome::Excluded(e) => excluded.push(e),
        }
    }
    if ranks.is_empty() {
        return Err(ConcordError::DegenerateInput(format!(
            "no shared drug qualifies at min_cells = {min_cells}"
        )));
    }
    let (ecdf, area) = rank_ecdf(&ranks);
    Ok(RecallReport {
        dataset_a: dataset_a.to_string(),
        dataset_b: dataset_b.to_string(),
        statistic: statistic.kind().to_string(),
        min_common_cell_lines: min_cells,
        ranks,
        ecdf,
        area,
        excluded,
    })
}

/// Corner points of the rank ECDF and the trapezoidal area beneath it
/// over [0, 1]. Jumps contribute both corners, so the trapezoidal rule
/// integrates the step function exactly.
fn rank_ecdf(ranks: &[DrugRank]) -> (Vec<(f64, f64)>, f64) {
    let k = ranks.len() as f64;
    let mut sorted: Vec<f64> = ranks.iter().map(|r| r.rank).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut seen = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        points.push((v, seen as f64 / k));
        seen = j;
        points.push((v, seen as f64 / k));
        i = j;
    }
    points.push((1.0, 1.0));
    let mut area = 0.0;
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    (points, area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SensitivityMatrix;

    fn parse(text: &str) -> SensitivityMatrix {
        SensitivityMatrix::from_reader(text.as_bytes(), "test").unwrap()
    }

    fn toy() -> SensitivityMatrix {
        parse(
            "drug,c1,c2,c3,c4\n\
             d1,0.1,0.2,0.3,0.4\n\
             d2,0.9,0.1,0.8,0.2\n\
             d3,0.5,0.9,0.1,0.6\n",
        )
    }

    #[test]
    fn self_recall_area_is_exactly_one() {
        let m = toy();
        let report = recall_report(&m, &m, "a", "a", &Statistic::Ci, 2).unwrap();
        assert_eq!(report.ranks.len(), 3);
        for r in &report.ranks {
            assert_eq!(r.rank, 0.0, "drug {} should retrieve itself", r.drug);
        }
        assert_eq!(report.area, 1.0);
        assert!(report.excluded.is_empty());
    }

    #[test]
    fn ties_use_average_rank() {
        let a = parse("drug,c1,c2,c3\nd1,0.1,0.2,0.3\n");
        // d1's profile appears twice in b under different names, so the
        // matched drug ties with e1 for best: position (2-1)/2 = 0.5 of 2.
        let b = parse(
            "drug,c1,c2,c3\n\
             d1,0.2,0.4,0.6\n\
             e1,0.3,0.5,0.7\n\
             e2,0.9,0.5,0.1\n",
        );
        let report = recall_report(&a, &b, "a", "b", &Statistic::Ci, 2).unwrap();
        assert_eq!(report.ranks.len(), 1);
        assert_eq!(report.ranks[0].rank, 0.25);
        assert_eq!(report.ranks[0].candidates, 3);
    }

    #[test]
    fn min_cells_excludes_sparse_drugs() {
        let a = parse(
            "drug,c1,c2,c3,c4\n\
             d1,0.1,0.2,0.3,0.4\n\
             d2,0.5,0.6,0.7,0.8\n\
             d3,0.9,0.1,0.8,0.2\n",
        );
        // d2 keeps only two cells in the second dataset, so at a bar of
        // three it is neither rankable nor a valid candidate elsewhere.
        let b = parse(
            "drug,c1,c2,c3,c4\n\
             d1,0.1,0.2,0.3,0.4\n\
             d2,0.5,0.6,,\n\
             d3,0.9,0.1,0.8,0.2\n",
        );
        let report = recall_report(&a, &b, "a", "b", &Statistic::Ci, 3).unwrap();
        let ranked: Vec<&str> = report.ranks.iter().map(|r| r.drug.as_str()).collect();
        assert_eq!(ranked, ["d1", "d3"]);
        for r in &report.ranks {
            assert_eq!(r.candidates, 2, "d2 drops out of {}'s candidates", r.drug);
            assert_eq!(r.rank, 0.0);
        }
        assert_eq!(report.excluded.len(), 1);
        assert_eq!(report.excluded[0].drug, "d2");
        // Raising the bar past every pair errors out.
        assert!(recall_report(&a, &b, "a", "b", &Statistic::Ci, 5).is_err());
    }

    #[test]
    fn ecdf_area_matches_hand_computation() {
        let ranks: Vec<DrugRank> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&r| DrugRank {
                drug: format!("d{r}"),
                rank: r,
                candidates: 3,
            })
            .collect();
        let (points, area) = rank_ecdf(&ranks);
        // Mean of (1 - rank): (1 + 0.5 + 0) / 3.
        assert_eq!(area, 0.5);
        assert_eq!(points.first(), Some(&(0.0, 0.0)));
        assert_eq!(points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn disjoint_drug_sets_error() {
        let a = parse("drug,c1,c2\nd1,0.1,0.2\nd2,0.2,0.1\n");
        let b = parse("drug,c1,c2\ne1,0.1,0.2\ne2,0.2,0.1\n");
        assert!(recall_report(&a, &b, "a", "b", &Statistic::Ci, 2).is_err());
    }
}
