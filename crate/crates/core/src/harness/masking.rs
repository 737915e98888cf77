//! Fact and name masking for the robustness sweeps.

use std::collections::HashSet;

use ndarray::Axis;
use rand_distr::{Distribution, StandardNormal};

use crate::encoders::EmbeddingSet;
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::rng::seeded;
use crate::scalar::Scalar;

fn check_ratio(ratio: f64) -> Result<()> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(Error::invalid(format!("mask ratio {ratio} outside [0, 1]")))
    }
}

fn masked_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).min(n)
}

/// Delete a uniform `round(ratio * facts)` subset of facts. Entities stay,
/// isolated or not.
pub fn mask_structure(kg: &KnowledgeGraph, ratio: f64, seed: u64) -> Result<KnowledgeGraph> {
    check_ratio(ratio)?;
    let n = kg.fact_count();
    let drop: HashSet<usize> = rand::seq::index::sample(&mut seeded(seed), n, masked_count(ratio, n))
        .into_iter()
        .collect();
    Ok(kg.filter_facts(|i, _| !drop.contains(&i)))
}

/// Replace a uniform `round(ratio * N)` subset of rows with Gaussian vectors
/// rescaled to the mean norm of the rows left alone (of all rows if every
/// row is masked). Returns the new set and the sorted replaced row indices.
pub fn mask_names<T: Scalar>(emb: &EmbeddingSet<T>, ratio: f64, seed: u64) -> Result<(EmbeddingSet<T>, Vec<usize>)> {
    check_ratio(ratio)?;
    let n = emb.len();
    let mut rng = seeded(seed);
    let mut masked = rand::seq::index::sample(&mut rng, n, masked_count(ratio, n)).into_vec();
    masked.sort_unstable();
    if masked.is_empty() {
        return Ok((emb.clone(), masked));
    }
    let chosen: HashSet<usize> = masked.iter().copied().collect();
    let norm = |i: usize| emb.row(i).iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
    let kept: Vec<f64> = (0..n).filter(|i| !chosen.contains(i)).map(norm).collect();
    let pool: Vec<f64> = if kept.is_empty() {
        (0..n).map(norm).collect()
    } else {
        kept
    };
    let mut target = pool.iter().sum::<f64>() / pool.len() as f64;
    if target == 0.0 {
        target = 1.0;
    }
    let mut m = emb.matrix().clone();
    for &i in &masked {
        let g: Vec<f64> = (0..emb.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (dst, v) in m.index_axis_mut(Axis(0), i).iter_mut().zip(&g) {
            *dst = T::of(v / gn * target);
        }
    }
    Ok((EmbeddingSet::new(m)?, masked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{CalendarConfig, Fact};
    use ndarray::Array2;

    fn chain(n: u32) -> KnowledgeGraph {
        let names = (0..=n).map(|i| format!("e{i}")).collect();
        let facts = (0..n)
            .map(|i| Fact {
                head: i,
                relation: 0,
                tail: i + 1,
                time: None,
            })
            .collect();
        KnowledgeGraph::from_parts(names, vec!["r".into()], facts, false, CalendarConfig::default()).unwrap()
    }

    #[test]
    fn structure_mask_counts() {
        let kg = chain(10);
        assert_eq!(mask_structure(&kg, 0.0, 1).unwrap(), kg);
        assert_eq!(mask_structure(&kg, 0.5, 1).unwrap().fact_count(), 5);
        let empty = mask_structure(&kg, 1.0, 1).unwrap();
        assert_eq!(empty.fact_count(), 0);
        assert_eq!(empty.entity_count(), 11);
        assert!(mask_structure(&kg, 1.1, 1).is_err());
    }

    #[test]
    fn name_mask_counts_and_norms() {
        let emb = EmbeddingSet::new(Array2::from_shape_fn((10, 4), |(i, j)| (i * 4 + j) as f64 + 1.0)).unwrap();
        let (same, none) = mask_names(&emb, 0.0, 3).unwrap();
        assert_eq!(same, emb);
        assert!(none.is_empty());

        let (out, rows) = mask_names(&emb, 0.3, 3).unwrap();
        assert_eq!(rows.len(), 3);
        let norm = |e: &EmbeddingSet<f64>, i: usize| e.row(i).dot(&e.row(i)).sqrt();
        let kept: Vec<usize> = (0..10).filter(|i| !rows.contains(i)).collect();
        let mean = kept.iter().map(|&i| norm(&emb, i)).sum::<f64>() / kept.len() as f64;
        for i in 0..10 {
            if rows.contains(&i) {
                assert_ne!(out.row(i), emb.row(i));
                assert!((norm(&out, i) - mean).abs() < 1e-9);
            } else {
                assert_eq!(out.row(i), emb.row(i));
            }
        }

        let (all, rows) = mask_names(&emb, 1.0, 3).unwrap();
        assert_eq!(rows, (0..10).collect::<Vec<_>>());
        assert!((0..10).all(|i| all.row(i) != emb.row(i)));
        assert_eq!(mask_names(&emb, 0.3, 3).unwrap().0, out);
    }
}
