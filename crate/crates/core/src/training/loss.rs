//! Margin ranking loss over cosine distance and its analytic gradient.

use ndarray::{s, Array2, ArrayView1, ArrayViewMut1};

use super::model::{forward_cached, AlignmentInputs, ForwardCache, ModelParams};
use crate::error::{Error, Result};
use crate::kg::{EntityId, Month};
use crate::scalar::Scalar;

/// Cosine of `a` and `b`; adds `scale * d cos / d a` into `ga` and the same
/// for `b` into `gb`. A zero vector has cosine 0 and gets no gradient.
fn cosine_backward<T: Scalar>(
    a: ArrayView1<'_, T>,
    b: ArrayView1<'_, T>,
    scale: Option<(T, &mut ArrayViewMut1<'_, T>, &mut ArrayViewMut1<'_, T>)>,
) -> T {
    let na = num_traits::Float::sqrt(a.dot(&a));
    let nb = num_traits::Float::sqrt(b.dot(&b));
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    let c = a.dot(&b) / (na * nb);
    if let Some((scale, ga, gb)) = scale {
        let inv = T::one() / (na * nb);
        ga.zip_mut_with(&a, |g, &x| *g += scale * (-c * x / (na * na)));
        ga.scaled_add(scale * inv, &b);
        gb.zip_mut_with(&b, |g, &y| *g += scale * (-c * y / (nb * nb)));
        gb.scaled_add(scale * inv, &a);
    }
    c
}

/// Position of each ID in a sorted, deduplicated list.
fn local_index(ids: &[EntityId], sorted: &[EntityId]) -> Vec<usize> {
    ids.iter().map(|e| sorted.binary_search(e).expect("present")).collect()
}

/// Mean hinge `max(0, margin + d(h_i, h_j) - d(h_i, h_j'))` over every
/// positive `(i, j)` and each of its negatives `j'`, with `d = 1 - cos`.
///
/// Returns the loss and its gradient w.r.t. every enabled parameter, laid out
/// like `model` (disabled blocks stay `None`).
pub fn margin_loss<T: Scalar>(
    model: &ModelParams<T>,
    inputs: &AlignmentInputs<T>,
    positives: &[(EntityId, EntityId)],
    negatives: &[Vec<EntityId>],
    margin: T,
) -> Result<(T, ModelParams<T>)> {
    if positives.len() != negatives.len() {
        return Err(Error::DimMismatch {
            expected: positives.len(),
            actual: negatives.len(),
        });
    }
    for (&(_, j), negs) in positives.iter().zip(negatives) {
        if negs.contains(&j) {
            return Err(Error::invalid(format!("negative sample equals true counterpart {j}")));
        }
    }
    let mut grads = model.zeros_like();
    let triples: usize = negatives.iter().map(Vec::len).sum();
    if triples == 0 {
        return Ok((T::zero(), grads));
    }

    let mut src: Vec<EntityId> = positives.iter().map(|p| p.0).collect();
    src.sort_unstable();
    src.dedup();
    let mut tgt: Vec<EntityId> = positives
        .iter()
        .map(|p| p.1)
        .chain(negatives.iter().flatten().copied())
        .collect();
    tgt.sort_unstable();
    tgt.dedup();

    let table = model.time.as_ref().map(|t| t.t2v.table(inputs.months));
    let c1 = forward_cached(model, &inputs.kg1, inputs.months, &src, table.as_ref())?;
    let c2 = forward_cached(model, &inputs.kg2, inputs.months, &tgt, table.as_ref())?;
    let mut d1 = Array2::<T>::zeros(c1.out.raw_dim());
    let mut d2 = Array2::<T>::zeros(c2.out.raw_dim());

    let src_pos = local_index(&positives.iter().map(|p| p.0).collect::<Vec<_>>(), &src);
    let tgt_pos = local_index(&positives.iter().map(|p| p.1).collect::<Vec<_>>(), &tgt);
    let inv_m = T::one() / T::of(triples as f64);
    let mut loss = T::zero();

    for (p, negs) in negatives.iter().enumerate() {
        let (i, j) = (src_pos[p], tgt_pos[p]);
        let hi = c1.out.row(i);
        let pos_cos = cosine_backward(hi, c2.out.row(j), None);
        for neg in local_index(negs, &tgt) {
            let neg_cos = cosine_backward(hi, c2.out.row(neg), None);
            // margin + (1 - pos) - (1 - neg)
            let z = margin - pos_cos + neg_cos;
            if z <= T::zero() {
                continue;
            }
            loss += z * inv_m;
            {
                let (mut gi, mut gj) = (d1.row_mut(i), d2.row_mut(j));
                cosine_backward(hi, c2.out.row(j), Some((-inv_m, &mut gi, &mut gj)));
            }
            {
                let (mut gi, mut gn) = (d1.row_mut(i), d2.row_mut(neg));
                cosine_backward(hi, c2.out.row(neg), Some((inv_m, &mut gi, &mut gn)));
            }
        }
    }

    backward(
        model,
        inputs.kg1.months.as_deref(),
        &c1,
        &src,
        &d1,
        table.as_ref(),
        &mut grads,
    );
    backward(
        model,
        inputs.kg2.months.as_deref(),
        &c2,
        &tgt,
        &d2,
        table.as_ref(),
        &mut grads,
    );
    Ok((loss, grads))
}

fn backward<T: Scalar>(
    model: &ModelParams<T>,
    months: Option<&[Vec<Month>]>,
    cache: &ForwardCache<T>,
    ids: &[EntityId],
    d_out: &Array2<T>,
    table: Option<&Array2<T>>,
    grads: &mut ModelParams<T>,
) {
    let mut col = 0;
    if let (Some(w), Some(x), Some(g)) = (&model.name, &cache.name_in, &mut grads.name) {
        let dh = d_out.slice(s![.., col..col + w.ncols()]);
        *g += &x.t().dot(&dh);
        col += w.ncols();
    }
    if let (Some(tb), Some(f), Some(g)) = (&model.time, &cache.time_sum, &mut grads.time) {
        let dh = d_out.slice(s![.., col..col + tb.weight.ncols()]);
        g.weight += &f.t().dot(&dh);
        col += tb.weight.ncols();
        let df = dh.dot(&tb.weight.t());
        let table = table.expect("table computed when time is enabled");
        let mut d_table = Array2::<T>::zeros(table.raw_dim());
        let months = months.expect("time inputs checked by forward");
        for (r, &e) in ids.iter().enumerate() {
            for &m in &months[e as usize] {
                let mut row = d_table.row_mut(m as usize);
                row += &df.row(r);
            }
        }
        let (omega, phi) = (&tb.t2v.omega, &tb.t2v.phi);
        for (m, row) in d_table.rows().into_iter().enumerate() {
            let t = T::of(m as f64);
            g.t2v.omega[0] += row[0] * t;
            g.t2v.phi[0] += row[0];
            for i in 1..row.len() {
                let ds = -num_traits::Float::sin(omega[i] * t + phi[i]) * row[i];
                g.t2v.omega[i] += ds * t;
                g.t2v.phi[i] += ds;
            }
        }
    }
    if let (Some(w), Some(x), Some(g)) = (&model.structure, &cache.structure_in, &mut grads.structure) {
        let dh = d_out.slice(s![.., col..col + w.ncols()]);
        *g += &x.t().dot(&dh);
    }
}
