use super::model::ModelParams;
use crate::scalar::Scalar;

/// Adam with bias-corrected first and second moments.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: i32,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate: T::of(learning_rate),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &ModelParams<T>) {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        assert_eq!(grads.len(), params.len(), "gradient layout differs from parameters");
        if self.first.is_empty() {
            self.first = grads.iter().map(|(_, g)| vec![T::zero(); g.len()]).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let one = T::one();
        let c1 = one - num_traits::Float::powi(self.beta1, self.step);
        let c2 = one - num_traits::Float::powi(self.beta2, self.step);
        for (k, (p, (_, g))) in params.iter_mut().zip(&grads).enumerate() {
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (num_traits::Float::sqrt(v_hat) + self.epsilon);
            }
        }
    }
}
