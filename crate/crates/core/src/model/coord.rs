use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use super::{check_len, log_sum_exp, softmax, ModelError, NamedTensors};

pub const DEFAULT_BINS: usize = 128;
/// Added to the softplus output so the Laplace scale stays away from zero.
pub const SCALE_FLOOR: f64 = 1e-4;

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Transformer sinusoidal encoding of a scalar: entry `2k` is
/// `sin(x / 10000^(2k/dim))` and entry `2k+1` the matching cosine.
pub fn positional_encoding(x: f64, dim: usize) -> Result<Array1<f64>, ModelError> {
    if !dim.is_multiple_of(2) {
        return Err(ModelError::OddDimension(dim));
    }
    Ok(Array1::from_shape_fn(dim, |i| {
        let k = (i / 2) as f64;
        let arg = x / 10000f64.powf(2.0 * k / dim as f64);
        if i % 2 == 0 {
            arg.sin()
        } else {
            arg.cos()
        }
    }))
}

/// One axis of the coordinate classifier. Bin `i` at `x_i` gets logit
/// `h · (W · PE(x_i) + c)`; the Laplace scale is
/// `softplus(s · h + s0) + SCALE_FLOOR`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordHead {
    pub bins: Array1<f64>,
    /// `dim × pe_dim`
    pub w: Array2<f64>,
    pub c: Array1<f64>,
    pub s: Array1<f64>,
    pub s0: f64,
}

impl CoordHead {
    pub fn zeros(bins: usize, dim: usize, pe_dim: usize) -> Result<Self, ModelError> {
        if bins < 2 {
            return Err(ModelError::TooFewBins(bins));
        }
        if !pe_dim.is_multiple_of(2) {
            return Err(ModelError::OddDimension(pe_dim));
        }
        Ok(CoordHead {
            bins: Array1::linspace(0.0, 1.0, bins),
            w: Array2::zeros((dim, pe_dim)),
            c: Array1::zeros(dim),
            s: Array1::zeros(dim),
            s0: 0.0,
        })
    }

    pub fn random(
        bins: usize,
        dim: usize,
        pe_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let mut head = Self::zeros(bins, dim, pe_dim)?;
        let r = 1.0 / (pe_dim as f64).sqrt();
        head.w.mapv_inplace(|_| rng.gen_range(-r..r));
        head.c.mapv_inplace(|_| rng.gen_range(-r..r));
        head.s.mapv_inplace(|_| rng.gen_range(-r..r));
        Ok(head)
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn pe_dim(&self) -> usize {
        self.w.ncols()
    }

    /// Bin embeddings, `bins × dim`.
    pub fn embeddings(&self) -> Array2<f64> {
        let mut e = Array2::zeros((self.bins.len(), self.dim()));
        for (i, &x) in self.bins.iter().enumerate() {
            let pe = positional_encoding(x, self.pe_dim()).expect("even pe_dim");
            e.row_mut(i).assign(&(self.w.dot(&pe) + &self.c));
        }
        e
    }

    /// Per-bin logits and the raw (pre-softplus) scale output.
    pub fn logits(&self, h: ArrayView1<f64>) -> Result<(Array1<f64>, f64), ModelError> {
        check_len("h_k", h, self.dim())?;
        Ok((self.embeddings().dot(&h), self.s.dot(&h) + self.s0))
    }

    /// Bin probabilities and the Laplace scale.
    pub fn likelihood(&self, h: ArrayView1<f64>) -> Result<(Array1<f64>, f64), ModelError> {
        let (logits, raw) = self.logits(h)?;
        Ok((softmax(logits.view()), softplus(raw) + SCALE_FLOOR))
    }

    /// Loss for target `mu` and its gradient with respect to `h`.
    pub fn loss_grad_hidden(
        &self,
        h: ArrayView1<f64>,
        mu: f64,
    ) -> Result<(f64, Array1<f64>), ModelError> {
        let (logits, raw) = self.logits(h)?;
        let scale = softplus(raw) + SCALE_FLOOR;
        let l = coord_mle_loss(logits.view(), scale, mu, self.bins.view())?;
        let dh = self.embeddings().t().dot(&l.d_logits) + &self.s * (l.d_scale * sigmoid(raw));
        Ok((l.loss, dh))
    }

    pub fn to_tensors(&self, prefix: &str) -> NamedTensors {
        let mut t = NamedTensors::default();
        t.insert(&format!("{prefix}.bins"), self.bins.clone().into_dyn());
        t.insert(&format!("{prefix}.w"), self.w.clone().into_dyn());
        t.insert(&format!("{prefix}.c"), self.c.clone().into_dyn());
        t.insert(&format!("{prefix}.s"), self.s.clone().into_dyn());
        t.insert(
            &format!("{prefix}.s0"),
            Array1::from(vec![self.s0]).into_dyn(),
        );
        t
    }

    pub fn from_tensors(t: &NamedTensors, prefix: &str) -> Result<Self, ModelError> {
        let s0 = t.vector(&format!("{prefix}.s0"))?;
        let head = CoordHead {
            bins: t.vector(&format!("{prefix}.bins"))?,
            w: t.matrix(&format!("{prefix}.w"))?,
            c: t.vector(&format!("{prefix}.c"))?,
            s: t.vector(&format!("{prefix}.s"))?,
            s0: if s0.len() == 1 { s0[0] } else { f64::NAN },
        };
        let d = head.dim();
        let increasing = head.bins.windows(2).into_iter().all(|w| w[0] < w[1]);
        if head.bins.len() < 2
            || !increasing
            || head.bins[0] < 0.0
            || head.bins[head.bins.len() - 1] > 1.0
            || !head.pe_dim().is_multiple_of(2)
            || head.c.len() != d
            || head.s.len() != d
            || !head.s0.is_finite()
        {
            return Err(ModelError::Tensor(prefix.into()));
        }
        Ok(head)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoordLoss {
    pub loss: f64,
    pub d_logits: Array1<f64>,
    pub d_scale: f64,
}

fn check_target(mu: f64, scale: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(ModelError::TargetOutOfRange(mu));
    }
    if !(scale > 0.0) {
        return Err(ModelError::NonPositiveScale(scale));
    }
    Ok(())
}

/// Negative log of the Laplace(`mu`, `scale`) density mixed over bins with
/// weights `softmax(logits)`:
/// `-log Σ_i p_i · exp(-|mu - x_i| / b) / (2b)`.
pub fn coord_mle_loss(
    logits: ArrayView1<f64>,
    scale: f64,
    mu: f64,
    bins: ArrayView1<f64>,
) -> Result<CoordLoss, ModelError> {
    check_len("logits", logits, bins.len())?;
    check_target(mu, scale)?;
    let dist = bins.mapv(|x| (mu - x).abs());
    let joint = &logits - &(&dist / scale);
    let loss = log_sum_exp(logits) - log_sum_exp(joint.view()) + (2.0 * scale).ln();
    let posterior = softmax(joint.view());
    let d_logits = softmax(logits) - &posterior;
    let d_scale = 1.0 / scale - posterior.dot(&dist) / (scale * scale);
    Ok(CoordLoss {
        loss,
        d_logits,
        d_scale,
    })
}

/// The same loss taking bin probabilities directly; zero-probability bins
/// are allowed.
pub fn coord_mle_loss_probs(
    probs: ArrayView1<f64>,
    scale: f64,
    mu: f64,
    bins: ArrayView1<f64>,
) -> Result<f64, ModelError> {
    check_len("probs", probs, bins.len())?;
    check_target(mu, scale)?;
    if probs.iter().any(|&p| !(p >= 0.0)) || (probs.sum() - 1.0).abs() > 1e-9 {
        return Err(ModelError::NotADistribution);
    }
    let terms: Array1<f64> = probs
        .iter()
        .zip(&bins)
        .map(|(&p, &x)| {
            if p > 0.0 {
                p.ln() - (mu - x).abs() / scale
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok((2.0 * scale).ln() - log_sum_exp(terms.view()))
}
