//! Similarity matrices, CSLS re-scoring and rank-based evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::scalar::Scalar;

/// Scores of source rows against target columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    pub values: Array2<T>,
    /// Rows of either input that had zero norm (their cosines are all 0).
    pub zero_rows: (usize, usize),
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn new(values: Array2<T>) -> Self {
        Self {
            values,
            zero_rows: (0, 0),
        }
    }
}

fn normalize_rows<T: Scalar>(m: &Array2<T>) -> (Array2<T>, usize) {
    let mut out = m.clone();
    let mut zero = 0;
    for mut row in out.rows_mut() {
        let n = num_traits::Float::sqrt(row.dot(&row));
        if n > T::zero() {
            row.mapv_inplace(|v| v / n);
        } else {
            zero += 1;
        }
    }
    (out, zero)
}

/// `cos(src_i, tgt_j)` for every pair; zero-norm rows score 0 against everything.
pub fn cosine_matrix<T: Scalar>(src: &Array2<T>, tgt: &Array2<T>) -> Result<SimilarityMatrix<T>> {
    if src.ncols() != tgt.ncols() {
        return Err(Error::DimMismatch {
            expected: src.ncols(),
            actual: tgt.ncols(),
        });
    }
    let (a, za) = normalize_rows(src);
    let (b, zb) = normalize_rows(tgt);
    Ok(SimilarityMatrix {
        values: a.dot(&b.t()),
        zero_rows: (za, zb),
    })
}

/// Mean of the `k` largest entries of a lane.
fn top_k_mean<T: Scalar>(lane: impl Iterator<Item = T>, k: usize) -> T {
    let mut v: Vec<T> = lane.collect();
    let k = k.min(v.len());
    v.select_nth_unstable_by(k - 1, |a, b| b.partial_cmp(a).unwrap());
    v[..k].iter().copied().sum::<T>() / T::of(k as f64)
}

/// `2 cos(i, j) - r_row(i) - r_col(j)`, where `r_row` / `r_col` average the `k`
/// largest entries of the row / column.
pub fn csls_matrix<T: Scalar>(cos: &SimilarityMatrix<T>, k: usize) -> Result<SimilarityMatrix<T>> {
    let (rows, cols) = cos.values.dim();
    if k == 0 || k > rows || k > cols {
        return Err(Error::invalid(format!("CSLS k = {k} outside 1..=min({rows}, {cols})")));
    }
    let row_mean: Vec<T> = cos
        .values
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|r| top_k_mean(r.iter().copied(), k))
        .collect();
    let col_mean: Vec<T> = cos
        .values
        .axis_iter(Axis(1))
        .into_par_iter()
        .map(|c| top_k_mean(c.iter().copied(), k))
        .collect();
    let (rm, cm) = (Array1::from(row_mean), Array1::from(col_mean));
    let mut values = cos.values.mapv(|v| v + v);
    Zip::indexed(&mut values).par_for_each(|(i, j), v| *v = *v - rm[i] - cm[j]);
    Ok(SimilarityMatrix {
        values,
        zero_rows: cos.zero_rows,
    })
}

/// Rank of column `target` in `row`: one plus the number of columns scoring
/// higher, plus the number of lower-index columns scoring the same.
pub fn rank_in_row<T: Scalar>(row: &[T], target: usize) -> usize {
    let s = row[target];
    1 + row
        .iter()
        .enumerate()
        .filter(|&(c, &v)| v > s || (v == s && c < target))
        .count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingReport {
    pub direction: String,
    /// Rank of the true counterpart for each test pair, in input order.
    pub ranks: Vec<usize>,
    pub hits: Vec<(usize, f64)>,
    pub mrr: f64,
    pub zero_norm_rows: usize,
}

impl RankingReport {
    pub fn from_ranks(direction: impl Into<String>, ranks: Vec<usize>, ks: &[usize]) -> Self {
        let n = ranks.len().max(1) as f64;
        let hits = ks
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
            .collect();
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        Self {
            direction: direction.into(),
            ranks,
            hits,
            mrr,
            zero_norm_rows: 0,
        }
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.iter().find(|h| h.0 == k).map(|h| h.1)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("direction: {}\n", self.direction);
        for (k, h) in &self.hits {
            let _ = writeln!(s, "Hits@{k:<4} {h:.4}");
        }
        let _ = writeln!(s, "MRR       {:.4}", self.mrr);
        let _ = writeln!(s, "pairs     {}", self.ranks.len());
        if self.zero_norm_rows > 0 {
            let _ = writeln!(s, "warning: {} zero-norm embedding rows", self.zero_norm_rows);
        }
        s
    }

    pub fn csv_header(&self) -> String {
        let mut s = "direction".to_string();
        for (k, _) in &self.hits {
            let _ = write!(s, ",hits@{k}");
        }
        s.push_str(",mrr,pairs");
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = self.direction.clone();
        for (_, h) in &self.hits {
            let _ = write!(s, ",{h}");
        }
        let _ = write!(s, ",{},{}", self.mrr, self.ranks.len());
        s
    }
}

/// Rank each test pair given a similarity matrix whose rows and columns are
/// indexed by `rows` / `cols`.
pub fn rank_and_score<T: Scalar>(
    sim: &SimilarityMatrix<T>,
    rows: &[EntityId],
    cols: &[EntityId],
    test_pairs: &[(EntityId, EntityId)],
    ks: &[usize],
    direction: &str,
) -> Result<RankingReport> {
    let row_of: HashMap<EntityId, usize> = rows.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let col_of: HashMap<EntityId, usize> = cols.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let ranks = test_pairs
        .par_iter()
        .map(|&(a, b)| {
            let r = *row_of
                .get(&a)
                .ok_or_else(|| Error::invalid(format!("source entity {a} not among the ranked rows")))?;
            let c = *col_of
                .get(&b)
                .ok_or_else(|| Error::invalid(format!("target entity {b} not among the candidates")))?;
            let row = sim.values.row(r);
            Ok(match row.as_slice() {
                Some(s) => rank_in_row(s, c),
                None => rank_in_row(&row.to_vec(), c),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = RankingReport::from_ranks(direction, ranks, ks);
    report.zero_norm_rows = sim.zero_rows.0 + sim.zero_rows.1;
    Ok(report)
}

/// Which target entities compete for each source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidatePool {
    /// Targets that appear in the test pairs.
    TestOnly,
    /// Every entity of the target graph.
    AllEntities,
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub csls_k: usize,
    pub hits: Vec<usize>,
    pub candidates: CandidatePool,
    pub reverse: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            csls_k: 10,
            hits: vec![1, 10],
            candidates: CandidatePool::TestOnly,
            reverse: false,
        }
    }
}

fn distinct(ids: impl Iterator<Item = EntityId>) -> Vec<EntityId> {
    let mut seen = std::collections::HashSet::new();
    ids.filter(|e| seen.insert(*e)).collect()
}

fn evaluate_direction<T: Scalar>(
    src: &Array2<T>,
    tgt: &Array2<T>,
    pairs: &[(EntityId, EntityId)],
    config: &EvalConfig,
    direction: &str,
) -> Result<RankingReport> {
    let rows = distinct(pairs.iter().map(|p| p.0));
    let cols = match config.candidates {
        CandidatePool::TestOnly => distinct(pairs.iter().map(|p| p.1)),
        CandidatePool::AllEntities => (0..tgt.nrows() as EntityId).collect(),
    };
    let check = |ids: &[EntityId], n: usize| match ids.iter().find(|&&e| e as usize >= n) {
        Some(e) => Err(Error::invalid(format!("entity {e} has no embedding"))),
        None => Ok(()),
    };
    check(&rows, src.nrows())?;
    check(&cols, tgt.nrows())?;
    let to_idx = |ids: &[EntityId]| ids.iter().map(|&e| e as usize).collect::<Vec<_>>();
    let a = src.select(Axis(0), &to_idx(&rows));
    let b = tgt.select(Axis(0), &to_idx(&cols));
    let cos = cosine_matrix(&a, &b)?;
    // small test sets cannot supply k neighbours
    let k = config.csls_k.min(rows.len()).min(cols.len());
    let sim = csls_matrix(&cos, k)?;
    rank_and_score(&sim, &rows, &cols, pairs, &config.hits, direction)
}

/// Evaluate KG1 -> KG2 (and KG2 -> KG1 when `config.reverse`).
pub fn evaluate<T: Scalar>(
    kg1_emb: &Array2<T>,
    kg2_emb: &Array2<T>,
    test_pairs: &[(EntityId, EntityId)],
    config: &EvalConfig,
) -> Result<Vec<RankingReport>> {
    if test_pairs.is_empty() {
        return Err(Error::EmptyInput("test anchors".into()));
    }
    let mut out = vec![evaluate_direction(kg1_emb, kg2_emb, test_pairs, config, "kg1->kg2")?];
    if config.reverse {
        let flipped: Vec<_> = test_pairs.iter().map(|&(a, b)| (b, a)).collect();
        out.push(evaluate_direction(kg2_emb, kg1_emb, &flipped, config, "kg2->kg1")?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cosine_examples() {
        let a = array![[1.0f64, 0.0], [0.0, 3.0], [1.0, 0.0]];
        let b = array![[2.0, 0.0], [-1.0, 0.0]];
        let c = cosine_matrix(&a, &b).unwrap().values;
        assert_eq!(c[[0, 0]], 1.0);
        assert_eq!(c[[1, 0]], 0.0);
        assert_eq!(c[[2, 1]], -1.0);
        assert!(cosine_matrix(&a, &array![[1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn zero_rows_are_flagged() {
        let c = cosine_matrix(&array![[0.0f64, 0.0]], &array![[1.0, 0.0]]).unwrap();
        assert_eq!(c.values[[0, 0]], 0.0);
        assert_eq!(c.zero_rows, (1, 0));
    }

    #[test]
    fn csls_constant_and_scalar() {
        let ones = SimilarityMatrix::new(Array2::<f64>::ones((3, 4)));
        for k in 1..=3 {
            assert!(csls_matrix(&ones, k).unwrap().values.iter().all(|&v| v == 0.0));
        }
        let one = SimilarityMatrix::new(array![[0.37f64]]);
        assert_eq!(csls_matrix(&one, 1).unwrap().values[[0, 0]], 0.0);
        assert!(csls_matrix(&one, 2).is_err());
        assert!(csls_matrix(&one, 0).is_err());
    }

    #[test]
    fn ranks_to_metrics() {
        let r = RankingReport::from_ranks("x", vec![1, 2, 4], &[1, 10]);
        assert!((r.hits_at(1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.hits_at(10), Some(1.0));
        assert!((r.mrr - 1.75 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let row = [0.5f64, 0.9, 0.5, 0.5];
        assert_eq!(rank_in_row(&row, 1), 1);
        assert_eq!(rank_in_row(&row, 0), 2);
        assert_eq!(rank_in_row(&row, 2), 3);
        assert_eq!(rank_in_row(&row, 3), 4);
    }

    #[test]
    fn diagonal_is_perfect() {
        let sim = SimilarityMatrix::new(Array2::<f64>::eye(4));
        let ids: Vec<EntityId> = (0..4).collect();
        let pairs: Vec<_> = ids.iter().map(|&i| (i, i)).collect();
        let r = rank_and_score(&sim, &ids, &ids, &pairs, &[1], "d").unwrap();
        assert_eq!(r.hits_at(1), Some(1.0));
        assert_eq!(r.mrr, 1.0);
        assert!(rank_and_score(&sim, &ids, &ids, &[(9, 0)], &[1], "d").is_err());
    }

    #[test]
    fn evaluate_both_directions() {
        let e = array![[1.0f64, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let pairs = [(0, 0), (1, 1), (2, 2)];
        let cfg = EvalConfig {
            reverse: true,
            ..Default::default()
        };
        let reports = evaluate(&e, &e, &pairs, &cfg).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.hits_at(1) == Some(1.0)));
        let all = EvalConfig {
            candidates: CandidatePool::AllEntities,
            ..Default::default()
        };
        assert_eq!(evaluate(&e, &e, &pairs[..1], &all).unwrap()[0].ranks, vec![1]);
    }
}
