use ndarray::{s, Array1, Array2};
use rand::Rng as _;

use crate::encoders::Time2VecParams;
use crate::error::{Error, Result};
use crate::kg::{EntityId, Month};
use crate::rng::{seeded, Rng};
use crate::scalar::Scalar;

/// Time2Vec parameters plus the projection of the summed encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeBlock<T> {
    pub t2v: Time2VecParams<T>,
    /// `(k + 1) x d_time_out`
    pub weight: Array2<T>,
}

/// All trainable parameters. A `None` block is disabled: it contributes
/// nothing to the fused embedding and never receives gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// `d_name_in x d_name_out`
    pub name: Option<Array2<T>>,
    pub time: Option<TimeBlock<T>>,
    /// `d_structure_in x d_structure_out`
    pub structure: Option<Array2<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Components {
    pub name: bool,
    pub time: bool,
    pub structure: bool,
}

impl Components {
    pub const NAME_TIME: Self = Self {
        name: true,
        time: true,
        structure: false,
    };

    pub fn any(&self) -> bool {
        self.name || self.time || self.structure
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub name_in: usize,
    pub name_out: usize,
    /// Number of periodic Time2Vec components.
    pub time_k: usize,
    pub time_out: usize,
    pub months: usize,
    pub structure_in: usize,
    pub structure_out: usize,
}

fn uniform_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Array2<T> {
    let bound = 1.0 / (rows.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || T::of(rng.random_range(-bound..bound)))
}

impl<T: Scalar> ModelParams<T> {
    /// Projections uniform in `+-1/sqrt(fan_in)`; Time2Vec as in [`Time2VecParams::random`].
    pub fn init(dims: &ModelDims, components: Components, seed: u64) -> Result<Self> {
        if !components.any() {
            return Err(Error::invalid("at least one of name, time, structure must be enabled"));
        }
        let mut rng = seeded(seed);
        let name = components
            .name
            .then(|| uniform_matrix(dims.name_in, dims.name_out, &mut rng));
        let time = components.time.then(|| {
            let t2v = Time2VecParams::random(dims.time_k, dims.months, &mut rng);
            TimeBlock {
                weight: uniform_matrix(t2v.dim(), dims.time_out, &mut rng),
                t2v,
            }
        });
        let structure = components
            .structure
            .then(|| uniform_matrix(dims.structure_in, dims.structure_out, &mut rng));
        Ok(Self { name, time, structure })
    }

    pub fn components(&self) -> Components {
        Components {
            name: self.name.is_some(),
            time: self.time.is_some(),
            structure: self.structure.is_some(),
        }
    }

    /// Width of the fused embedding.
    pub fn output_dim(&self) -> usize {
        self.name.as_ref().map_or(0, |w| w.ncols())
            + self.time.as_ref().map_or(0, |t| t.weight.ncols())
            + self.structure.as_ref().map_or(0, |w| w.ncols())
    }

    /// Same shapes, all zeros; used as the gradient container.
    pub fn zeros_like(&self) -> Self {
        let z = |a: &Array2<T>| Array2::zeros(a.raw_dim());
        Self {
            name: self.name.as_ref().map(z),
            time: self.time.as_ref().map(|t| TimeBlock {
                t2v: Time2VecParams {
                    omega: Array1::zeros(t.t2v.omega.len()),
                    phi: Array1::zeros(t.t2v.phi.len()),
                },
                weight: z(&t.weight),
            }),
            structure: self.structure.as_ref().map(z),
        }
    }

    /// Enabled tensors in a fixed order: name, omega, phi, time weight, structure.
    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        let mut v: Vec<(&'static str, &[T])> = Vec::new();
        if let Some(w) = &self.name {
            v.push(("w_name", w.as_slice().expect("standard layout")));
        }
        if let Some(t) = &self.time {
            v.push(("omega", t.t2v.omega.as_slice().unwrap()));
            v.push(("phi", t.t2v.phi.as_slice().unwrap()));
            v.push(("w_time", t.weight.as_slice().unwrap()));
        }
        if let Some(w) = &self.structure {
            v.push(("w_structure", w.as_slice().unwrap()));
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = Vec::new();
        if let Some(w) = &mut self.name {
            v.push(w.as_slice_mut().expect("standard layout"));
        }
        if let Some(t) = &mut self.time {
            v.push(t.t2v.omega.as_slice_mut().unwrap());
            v.push(t.t2v.phi.as_slice_mut().unwrap());
            v.push(t.weight.as_slice_mut().unwrap());
        }
        if let Some(w) = &mut self.structure {
            v.push(w.as_slice_mut().unwrap());
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Frozen per-entity inputs of one graph.
#[derive(Clone, Debug, Default)]
pub struct SideFeatures<T> {
    /// `N x d_name_in` (whitened) name embeddings.
    pub names: Option<Array2<T>>,
    /// Sorted active months per entity.
    pub months: Option<Vec<Vec<Month>>>,
    /// `N x d_structure_in` skip-gram embeddings.
    pub structure: Option<Array2<T>>,
}

impl<T: Scalar> SideFeatures<T> {
    pub fn entity_count(&self) -> Option<usize> {
        self.names
            .as_ref()
            .map(|m| m.nrows())
            .or_else(|| self.months.as_ref().map(|m| m.len()))
            .or_else(|| self.structure.as_ref().map(|m| m.nrows()))
    }
}

/// Inputs of both graphs plus the calendar length.
#[derive(Clone, Debug)]
pub struct AlignmentInputs<T> {
    pub kg1: SideFeatures<T>,
    pub kg2: SideFeatures<T>,
    pub months: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphSide {
    Kg1,
    Kg2,
}

impl<T: Scalar> AlignmentInputs<T> {
    pub fn side(&self, side: GraphSide) -> &SideFeatures<T> {
        match side {
            GraphSide::Kg1 => &self.kg1,
            GraphSide::Kg2 => &self.kg2,
        }
    }
}

/// Intermediate values of a forward pass, kept for backpropagation.
pub(crate) struct ForwardCache<T> {
    pub name_in: Option<Array2<T>>,
    pub time_sum: Option<Array2<T>>,
    pub structure_in: Option<Array2<T>>,
    pub out: Array2<T>,
}

pub(crate) fn forward_cached<T: Scalar>(
    model: &ModelParams<T>,
    features: &SideFeatures<T>,
    months: usize,
    ids: &[EntityId],
    table: Option<&Array2<T>>,
) -> Result<ForwardCache<T>> {
    if !model.components().any() {
        return Err(Error::invalid("no component enabled"));
    }
    let rows: Vec<usize> = ids.iter().map(|&e| e as usize).collect();
    let mut out = Array2::zeros((ids.len(), model.output_dim()));
    let mut col = 0;
    let missing = |what: &str| Error::invalid(format!("{what} component enabled but its input is missing"));

    let name_in = match &model.name {
        Some(w) => {
            let x = features.names.as_ref().ok_or_else(|| missing("name"))?;
            check_rows(x.nrows(), &rows)?;
            if x.ncols() != w.nrows() {
                return Err(Error::DimMismatch {
                    expected: w.nrows(),
                    actual: x.ncols(),
                });
            }
            let x = x.select(ndarray::Axis(0), &rows);
            out.slice_mut(s![.., col..col + w.ncols()]).assign(&x.dot(w));
            col += w.ncols();
            Some(x)
        }
        None => None,
    };
    let time_sum = match &model.time {
        Some(tb) => {
            let active = features.months.as_ref().ok_or_else(|| missing("time"))?;
            check_rows(active.len(), &rows)?;
            let owned;
            let table = match table {
                Some(t) => t,
                None => {
                    owned = tb.t2v.table(months);
                    &owned
                }
            };
            let mut f = Array2::zeros((ids.len(), tb.t2v.dim()));
            for (r, &e) in rows.iter().enumerate() {
                let mut row = f.row_mut(r);
                for &m in &active[e] {
                    if m as usize >= months {
                        return Err(Error::invalid(format!("month {m} outside calendar of {months}")));
                    }
                    row += &table.row(m as usize);
                }
            }
            out.slice_mut(s![.., col..col + tb.weight.ncols()])
                .assign(&f.dot(&tb.weight));
            col += tb.weight.ncols();
            Some(f)
        }
        None => None,
    };
    let structure_in = match &model.structure {
        Some(w) => {
            let x = features.structure.as_ref().ok_or_else(|| missing("structure"))?;
            check_rows(x.nrows(), &rows)?;
            if x.ncols() != w.nrows() {
                return Err(Error::DimMismatch {
                    expected: w.nrows(),
                    actual: x.ncols(),
                });
            }
            let x = x.select(ndarray::Axis(0), &rows);
            out.slice_mut(s![.., col..col + w.ncols()]).assign(&x.dot(w));
            Some(x)
        }
        None => None,
    };
    Ok(ForwardCache {
        name_in,
        time_sum,
        structure_in,
        out,
    })
}

fn check_rows(n: usize, rows: &[usize]) -> Result<()> {
    match rows.iter().find(|&&r| r >= n) {
        Some(r) => Err(Error::invalid(format!("entity {r} out of range ({n} entities)"))),
        None => Ok(()),
    }
}

/// Fused embeddings `[name | time | structure]` of `ids`, enabled blocks only.
pub fn forward<T: Scalar>(
    model: &ModelParams<T>,
    inputs: &AlignmentInputs<T>,
    side: GraphSide,
    ids: &[EntityId],
) -> Result<Array2<T>> {
    Ok(forward_cached(model, inputs.side(side), inputs.months, ids, None)?.out)
}

/// Fused embeddings of every entity of `side`.
pub fn forward_all<T: Scalar>(
    model: &ModelParams<T>,
    inputs: &AlignmentInputs<T>,
    side: GraphSide,
) -> Result<Array2<T>> {
    let n = inputs
        .side(side)
        .entity_count()
        .ok_or_else(|| Error::invalid("side has no inputs"))?;
    let ids: Vec<EntityId> = (0..n as EntityId).collect();
    forward(model, inputs, side, &ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            name_in: 4,
            name_out: 3,
            time_k: 2,
            time_out: 5,
            months: 12,
            structure_in: 2,
            structure_out: 2,
        }
    }

    fn inputs(n: usize) -> AlignmentInputs<f64> {
        let side = SideFeatures {
            names: Some(Array2::from_shape_fn((n, 4), |(i, j)| (i + j) as f64)),
            months: Some((0..n).map(|i| vec![(i % 12) as Month]).collect()),
            structure: Some(Array2::ones((n, 2))),
        };
        AlignmentInputs {
            kg1: side.clone(),
            kg2: side,
            months: 12,
        }
    }

    #[test]
    fn single_component_output() {
        let c = Components {
            name: true,
            time: false,
            structure: false,
        };
        let m = ModelParams::<f64>::init(&dims(), c, 1).unwrap();
        let inp = inputs(3);
        let h = forward(&m, &inp, GraphSide::Kg1, &[0, 2]).unwrap();
        assert_eq!(h.ncols(), 3);
        let expect = inp
            .kg1
            .names
            .as_ref()
            .unwrap()
            .select(ndarray::Axis(0), &[0, 2])
            .dot(m.name.as_ref().unwrap());
        assert_eq!(h, expect);
    }

    #[test]
    fn dims_add_up() {
        let m = ModelParams::<f64>::init(&dims(), Components::NAME_TIME, 1).unwrap();
        assert_eq!(m.output_dim(), 8);
        let h = forward_all(&m, &inputs(4), GraphSide::Kg2).unwrap();
        assert_eq!(h.dim(), (4, 8));
    }

    #[test]
    fn zero_everything_gives_zero() {
        let all = Components {
            name: true,
            time: true,
            structure: true,
        };
        let mut m = ModelParams::<f64>::init(&dims(), all, 1).unwrap();
        m.name.as_mut().unwrap().fill(0.0);
        m.time.as_mut().unwrap().weight.fill(0.0);
        m.structure.as_mut().unwrap().fill(0.0);
        let side = SideFeatures {
            names: Some(Array2::zeros((2, 4))),
            months: Some(vec![vec![], vec![]]),
            structure: Some(Array2::zeros((2, 2))),
        };
        let inp = AlignmentInputs {
            kg1: side.clone(),
            kg2: side,
            months: 12,
        };
        let h = forward_all(&m, &inp, GraphSide::Kg1).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nothing_enabled_is_error() {
        let none = Components {
            name: false,
            time: false,
            structure: false,
        };
        assert!(ModelParams::<f64>::init(&dims(), none, 1).is_err());
        let empty = ModelParams::<f64> {
            name: None,
            time: None,
            structure: None,
        };
        assert!(forward(&empty, &inputs(1), GraphSide::Kg1, &[0]).is_err());
    }

    #[test]
    fn missing_input_is_error() {
        let m = ModelParams::<f64>::init(&dims(), Components::NAME_TIME, 1).unwrap();
        let mut inp = inputs(2);
        inp.kg1.months = None;
        assert!(forward(&m, &inp, GraphSide::Kg1, &[0]).is_err());
        assert!(forward(&m, &inputs(2), GraphSide::Kg1, &[5]).is_err());
    }
}
