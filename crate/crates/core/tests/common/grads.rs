use super::{max_grad_error, rng};
use ndarray::{Array1, Array2};
use ocsr_core::grpo::{grpo_loss, grpo_surrogate, Completion, GrpoConfig};
use ocsr_core::model::{coord_mle_loss, BondHeadParams, CoordHead};
use ocsr_core::BondType;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn vec_of(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| r.gen_range(-scale..scale))
}

/// Flattens bond-head parameters and inputs in a fixed order.
fn pack(p: &BondHeadParams, hi: &Array1<f64>, hj: &Array1<f64>) -> Vec<f64> {
    p.w1.iter()
        .chain(&p.b1)
        .chain(&p.w2)
        .chain(&p.b2)
        .chain(hi)
        .chain(hj)
        .copied()
        .collect()
}

fn unpack(x: &[f64], like: &BondHeadParams) -> (BondHeadParams, Array1<f64>, Array1<f64>) {
    let mut it = x.iter().copied();
    let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
    let (h, d2, k) = (like.w1.nrows(), like.w1.ncols(), like.w2.nrows());
    let p = BondHeadParams {
        w1: Array2::from_shape_vec((h, d2), take(h * d2)).unwrap(),
        b1: Array1::from(take(h)),
        w2: Array2::from_shape_vec((k, h), take(k * h)).unwrap(),
        b2: Array1::from(take(k)),
    };
    (p, Array1::from(take(d2 / 2)), Array1::from(take(d2 / 2)))
}

/// Largest relative gradient error over `n` random instances.
pub fn bond_head_worst(n: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let mut r = rng(seed);
        let (dim, hidden) = (r.gen_range(2..7), r.gen_range(2..7));
        let p = BondHeadParams::random(dim, hidden, &mut r);
        let hi = vec_of(&mut r, dim, 1.5);
        let hj = vec_of(&mut r, dim, 1.5);
        let target = BondType::ALL[r.gen_range(0..BondType::ALL.len())];
        let g = p.loss_grad(hi.view(), hj.view(), target).unwrap();
        let analytic: Vec<f64> =
            g.w1.iter()
                .chain(&g.b1)
                .chain(&g.w2)
                .chain(&g.b2)
                .chain(&g.h_i)
                .chain(&g.h_j)
                .copied()
                .collect();
        let err = max_grad_error(&pack(&p, &hi, &hj), &analytic, |x| {
            let (q, a, b) = unpack(x, &p);
            q.loss_grad(a.view(), b.view(), target).unwrap().loss
        });
        worst = worst.max(err);
    }
    worst
}

/// Largest relative gradient error over `n` random instances.
pub fn coord_loss_worst(n: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let mut r = rng(1000 + seed);
        let bins_n = r.gen_range(2..40);
        let bins = Array1::linspace(0.0, 1.0, bins_n);
        let logits = vec_of(&mut r, bins_n, 3.0);
        let scale = r.gen_range(0.05..1.0);
        let mu = r.gen_range(0.0..1.0);
        let l = coord_mle_loss(logits.view(), scale, mu, bins.view()).unwrap();
        let mut x = logits.to_vec();
        x.push(scale);
        let mut analytic = l.d_logits.to_vec();
        analytic.push(l.d_scale);
        let err = max_grad_error(&x, &analytic, |x| {
            let n = x.len() - 1;
            let lg = Array1::from(x[..n].to_vec());
            coord_mle_loss(lg.view(), x[n], mu, bins.view())
                .unwrap()
                .loss
        });
        worst = worst.max(err);
    }
    worst
}

/// Largest relative gradient error over `n` random instances.
pub fn coord_head_worst(n: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let mut r = rng(2000 + seed);
        let head = CoordHead::random(128, 6, 8, &mut r).unwrap();
        let h = vec_of(&mut r, 6, 1.0);
        let mu = r.gen_range(0.0..1.0);
        let (_, grad) = head.loss_grad_hidden(h.view(), mu).unwrap();
        let err = max_grad_error(&h.to_vec(), &grad.to_vec(), |x| {
            head.loss_grad_hidden(Array1::from(x.to_vec()).view(), mu)
                .unwrap()
                .0
        });
        worst = worst.max(err);
    }
    worst
}

fn random_group(r: &mut ChaCha8Rng, cfg: &GrpoConfig) -> Vec<Completion> {
    (0..cfg.group_size)
        .map(|_| {
            let n = r.gen_range(1..7);
            let cur: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..-0.01)).collect();
            let rf: Vec<f64> = cur.iter().map(|c| c + r.gen_range(-0.5..0.5)).collect();
            Completion::new(cur, rf, r.gen_range(0.0..1.0))
        })
        .collect()
}

/// Largest relative gradient error over `n` random instances.
pub fn grpo_surrogate_worst(n: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let mut r = rng(3000 + seed);
        let cfg = GrpoConfig {
            group_size: r.gen_range(2..6),
            kl_coeff: r.gen_range(0.0..0.5),
            ..GrpoConfig::default()
        };
        let group = random_group(&mut r, &cfg);
        let detached: Vec<Vec<f64>> = group.iter().map(|c| c.logp_current.clone()).collect();
        let l = grpo_loss(&group, &cfg).unwrap();
        let value = grpo_surrogate(&group, &detached, &cfg).unwrap();
        assert!((value - l.loss).abs() < 1e-12);
        let x: Vec<f64> = detached.iter().flatten().copied().collect();
        let analytic: Vec<f64> = l.grad.iter().flatten().copied().collect();
        let err = max_grad_error(&x, &analytic, |x| {
            let mut g = group.clone();
            let mut it = x.iter().copied();
            for c in &mut g {
                c.logp_current = it.by_ref().take(c.len).collect();
            }
            grpo_surrogate(&g, &detached, &cfg).unwrap()
        });
        worst = worst.max(err);
    }
    worst
}
