use ndarray::{concatenate, s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use super::{check_len, log_sum_exp, softmax, ModelError, NamedTensors};
use crate::graph::BondType;

/// Output classes, in [`BondType::ALL`] order.
pub const BOND_CLASSES: usize = BondType::ALL.len();

/// `softmax(W2 · tanh(W1 · [h_i; h_j] + b1) + b2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondHeadParams {
    /// `hidden × 2·dim`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `classes × hidden`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BondHeadGrad {
    pub loss: f64,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub h_i: Array1<f64>,
    pub h_j: Array1<f64>,
}

struct Forward {
    x: Array1<f64>,
    a: Array1<f64>,
    logits: Array1<f64>,
}

impl BondHeadParams {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        BondHeadParams {
            w1: Array2::zeros((hidden, 2 * dim)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((BOND_CLASSES, hidden)),
            b2: Array1::zeros(BOND_CLASSES),
        }
    }

    /// Entries uniform in `±1/sqrt(fan_in)`.
    pub fn random(dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(dim, hidden);
        let r1 = 1.0 / ((2 * dim) as f64).sqrt();
        let r2 = 1.0 / (hidden as f64).sqrt();
        p.w1.mapv_inplace(|_| rng.gen_range(-r1..r1));
        p.b1.mapv_inplace(|_| rng.gen_range(-r1..r1));
        p.w2.mapv_inplace(|_| rng.gen_range(-r2..r2));
        p.b2.mapv_inplace(|_| rng.gen_range(-r2..r2));
        p
    }

    pub fn dim(&self) -> usize {
        self.w1.ncols() / 2
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    fn run(&self, h_i: ArrayView1<f64>, h_j: ArrayView1<f64>) -> Result<Forward, ModelError> {
        check_len("h_i", h_i, self.dim())?;
        check_len("h_j", h_j, self.dim())?;
        let x = concatenate(Axis(0), &[h_i, h_j]).expect("1-d concat");
        let a = (self.w1.dot(&x) + &self.b1).mapv(f64::tanh);
        let logits = self.w2.dot(&a) + &self.b2;
        Ok(Forward { x, a, logits })
    }

    pub fn logits(
        &self,
        h_i: ArrayView1<f64>,
        h_j: ArrayView1<f64>,
    ) -> Result<Array1<f64>, ModelError> {
        Ok(self.run(h_i, h_j)?.logits)
    }

    /// Probabilities over [`BondType::ALL`].
    pub fn forward(
        &self,
        h_i: ArrayView1<f64>,
        h_j: ArrayView1<f64>,
    ) -> Result<Array1<f64>, ModelError> {
        Ok(softmax(self.run(h_i, h_j)?.logits.view()))
    }

    pub fn predict(
        &self,
        h_i: ArrayView1<f64>,
        h_j: ArrayView1<f64>,
    ) -> Result<BondType, ModelError> {
        let p = self.forward(h_i, h_j)?;
        let best = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
        Ok(BondType::ALL[best])
    }

    /// Cross-entropy against `target` and its gradient with respect to every
    /// parameter and both inputs.
    pub fn loss_grad(
        &self,
        h_i: ArrayView1<f64>,
        h_j: ArrayView1<f64>,
        target: BondType,
    ) -> Result<BondHeadGrad, ModelError> {
        let f = self.run(h_i, h_j)?;
        let t = target.class_index();
        let loss = log_sum_exp(f.logits.view()) - f.logits[t];
        let mut dlogits = softmax(f.logits.view());
        dlogits[t] -= 1.0;
        let w2 = outer(&dlogits, &f.a);
        let da = self.w2.t().dot(&dlogits);
        let dz = &da * &f.a.mapv(|v| 1.0 - v * v);
        let w1 = outer(&dz, &f.x);
        let dx = self.w1.t().dot(&dz);
        let d = self.dim();
        Ok(BondHeadGrad {
            loss,
            w1,
            b1: dz,
            w2,
            b2: dlogits,
            h_i: dx.slice(s![..d]).to_owned(),
            h_j: dx.slice(s![d..]).to_owned(),
        })
    }

    pub fn to_tensors(&self) -> NamedTensors {
        let mut t = NamedTensors::default();
        t.insert("bond.w1", self.w1.clone().into_dyn());
        t.insert("bond.b1", self.b1.clone().into_dyn());
        t.insert("bond.w2", self.w2.clone().into_dyn());
        t.insert("bond.b2", self.b2.clone().into_dyn());
        t
    }

    pub fn from_tensors(t: &NamedTensors) -> Result<Self, ModelError> {
        let p = BondHeadParams {
            w1: t.matrix("bond.w1")?,
            b1: t.vector("bond.b1")?,
            w2: t.matrix("bond.w2")?,
            b2: t.vector("bond.b2")?,
        };
        let h = p.w1.nrows();
        if !p.w1.ncols().is_multiple_of(2)
            || p.b1.len() != h
            || p.w2.dim() != (BOND_CLASSES, h)
            || p.b2.len() != BOND_CLASSES
        {
            return Err(ModelError::Tensor("bond".into()));
        }
        Ok(p)
    }
}

pub(crate) fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_uniform() {
        let p = BondHeadParams::zeros(4, 3);
        let h = Array1::from(vec![0.3, -1.0, 2.0, 0.1]);
        let out = p.forward(h.view(), h.view()).unwrap();
        for v in &out {
            assert!((v - 1.0 / 7.0).abs() < 1e-15);
        }
        let g = p.loss_grad(h.view(), h.view(), BondType::Double).unwrap();
        assert!((g.loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_target_has_zero_loss() {
        let mut p = BondHeadParams::zeros(2, 2);
        p.b2[BondType::Triple.class_index()] = 30.0;
        let h = Array1::zeros(2);
        let g = p.loss_grad(h.view(), h.view(), BondType::Triple).unwrap();
        assert!(g.loss.abs() < 1e-6);
        assert_eq!(p.predict(h.view(), h.view()).unwrap(), BondType::Triple);
    }

    #[test]
    fn dimension_mismatch() {
        let p = BondHeadParams::random(4, 3, &mut ChaCha8Rng::seed_from_u64(1));
        let a = Array1::zeros(4);
        let b = Array1::zeros(5);
        assert!(matches!(
            p.forward(a.view(), b.view()),
            Err(ModelError::DimensionMismatch {
                expected: 4,
                got: 5,
                ..
            })
        ));
    }
}
