//! Cross-modal retrieval in a shared space.
//!
//! Ranks start at 1 and ties are broken by ascending gallery id, so every
//! metric here is deterministic.

mod accum;
mod report;

pub use report::{fold_metrics, sweep_components, FoldData, ReportRow, RetrievalReport, REPORT_CSV_HEADER};

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use accum::Accum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Cosine,
    /// Negated Euclidean distance.
    Euclidean,
}

/// Gallery ids ordered best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query: usize,
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RankedList {
    /// Orders gallery items by descending score, ties by ascending id.
    pub fn from_scores(query: usize, scores: ArrayView1<f64>) -> Self {
        let mut ids: Vec<usize> = (0..scores.len()).collect();
        ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let sorted = ids.iter().map(|&i| scores[i]).collect();
        RankedList {
            query,
            ids,
            scores: sorted,
        }
    }

    /// 1-based rank of `id`, if present.
    pub fn rank_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&g| g == id).map(|p| p + 1)
    }
}

fn norms(m: ArrayView2<f64>) -> Array1<f64> {
    m.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

/// Similarity of every query row to every gallery row, `q × m`.
///
/// Under cosine similarity a zero-norm vector scores −1 against everything.
pub fn similarity_matrix(queries: ArrayView2<f64>, gallery: ArrayView2<f64>, metric: Similarity) -> Result<Array2<f64>> {
    if queries.ncols() != gallery.ncols() {
        return Err(Error::DimensionMismatch {
            context: "retrieval vectors",
            expected: gallery.ncols(),
            found: queries.ncols(),
        });
    }
    if gallery.nrows() == 0 {
        return Err(Error::Data("empty retrieval gallery".into()));
    }
    let dots = queries.dot(&gallery.t());
    let (nq, ng) = (norms(queries), norms(gallery));
    let mut s = dots;
    for ((i, j), v) in s.indexed_iter_mut() {
        *v = match metric {
            Similarity::Cosine => {
                if nq[i] == 0.0 || ng[j] == 0.0 {
                    -1.0
                } else {
                    *v / (nq[i] * ng[j])
                }
            }
            Similarity::Euclidean => -(nq[i] * nq[i] + ng[j] * ng[j] - 2.0 * *v).max(0.0).sqrt(),
        };
    }
    Ok(s)
}

/// Ranks the gallery for a single query.
pub fn rank_gallery(query: ArrayView1<f64>, gallery: ArrayView2<f64>, metric: Similarity) -> Result<RankedList> {
    let q = query.insert_axis(ndarray::Axis(0));
    let s = similarity_matrix(q, gallery, metric)?;
    Ok(RankedList::from_scores(0, s.row(0)))
}

/// Ranks the gallery for every query row.
pub fn rank_all(queries: ArrayView2<f64>, gallery: ArrayView2<f64>, metric: Similarity) -> Result<Vec<RankedList>> {
    let s = similarity_matrix(queries, gallery, metric)?;
    Ok(s.rows()
        .into_iter()
        .enumerate()
        .map(|(q, row)| RankedList::from_scores(q, row))
        .collect())
}

/// Mean reciprocal rank of the single relevant item per query, rounded
/// once from the exact sum.
pub fn mrr1(lists: &[RankedList], relevant: &[usize]) -> Result<f64> {
    if lists.len() != relevant.len() {
        return Err(Error::DimensionMismatch {
            context: "mrr1 relevance",
            expected: lists.len(),
            found: relevant.len(),
        });
    }
    if lists.is_empty() {
        return Err(Error::Data("mrr1 over zero queries".into()));
    }
    let mut total = Accum::default();
    for (list, &rel) in lists.iter().zip(relevant) {
        let rank = list.rank_of(rel).ok_or_else(|| {
            Error::Data(format!("relevant id {rel} missing from gallery of query {}", list.query))
        })?;
        total.add_ratio(1.0, rank as f64);
    }
    Ok(total.mean(lists.len() as f64))
}

/// `(1/R) · Σ precision@rank` over the relevant items of one query.
pub fn average_precision(list: &RankedList, relevant: &HashSet<usize>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::Data(format!("query {} has no relevant items", list.query)));
    }
    let mut hits = 0usize;
    let mut sum = Accum::default();
    for (pos, id) in list.ids.iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum.add_ratio(hits as f64, (pos + 1) as f64);
        }
    }
    if hits != relevant.len() {
        return Err(Error::Data(format!(
            "query {} has relevant items missing from its gallery",
            list.query
        )));
    }
    Ok(sum.mean(relevant.len() as f64))
}

/// Mean of the per-query average precisions, rounded once.
pub fn map_score(lists: &[RankedList], relevance: &[HashSet<usize>]) -> Result<f64> {
    if lists.len() != relevance.len() {
        return Err(Error::DimensionMismatch {
            context: "map relevance",
            expected: lists.len(),
            found: relevance.len(),
        });
    }
    if lists.is_empty() {
        return Err(Error::Data("map over zero queries".into()));
    }
    let mut total = Accum::default();
    for (list, rel) in lists.iter().zip(relevance) {
        total.add(average_precision(list, rel)?, 0.0);
    }
    Ok(total.mean(lists.len() as f64))
}

/// Expected MRR1 of a uniformly random ranking with one relevant item
/// among `m`: `H(m)/m`.
pub fn chance_mrr1(m: usize) -> f64 {
    (1..=m).map(|r| 1.0 / r as f64).sum::<f64>() / m as f64
}
