#![allow(dead_code)]

use expertpool::data::{generate, Generated, GeneratorConfig};

/// Ranks with ties given their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let mean = (start + end - 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            r[i] = mean;
        }
        start = end;
    }
    r
}

/// Spearman's rank correlation as the Pearson correlation of ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn synth(n_experts: usize, n_games: usize, missing_rate: f64, seed: u64) -> Generated {
    generate(&GeneratorConfig {
        n_experts,
        n_games,
        missing_rate,
        seed,
        ..GeneratorConfig::default()
    })
    .expect("valid generator config")
}

use expertpool::aggregate::Aggregator;
use expertpool::experts::{loss_bound, ExpertsAggregator, ExpertsConfig, MissingPolicy, PredictionFn, UpdateFn};
use expertpool::{Outcome, PredictionRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full-participation advice with a mix of interior, extreme and neutral
/// predictions: `rows[t][i]` and outcomes `ys[t]`.
pub struct AdviceSet {
    pub rows: Vec<Vec<f64>>,
    pub ys: Vec<Outcome>,
}

pub fn random_advice(seed: u64, max_experts: usize, max_games: usize) -> AdviceSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_experts);
    let t = rng.random_range(1..=max_games);
    let style: Vec<u8> = (0..n).map(|_| rng.random_range(0..4)).collect();
    let mut rows = Vec::with_capacity(t);
    let mut ys = Vec::with_capacity(t);
    for _ in 0..t {
        let y = Outcome::from(rng.random_bool(0.5));
        let row = style
            .iter()
            .map(|s| match s {
                0 => rng.random::<f64>(),
                1 => f64::from(u8::from(rng.random_bool(0.5))),
                2 => 0.5,
                _ => {
                    // Leans toward the outcome.
                    let q: f64 = rng.random_range(0.5..1.0);
                    if y == Outcome::One { q } else { 1.0 - q }
                }
            })
            .collect();
        rows.push(row);
        ys.push(y);
    }
    AdviceSet { rows, ys }
}

/// Cumulative absolute loss of the experts algorithm and the bound computed
/// from the best expert's loss.
pub fn experts_loss_and_bound(set: &AdviceSet, beta: f64, pf: PredictionFn, uf: UpdateFn) -> (f64, f64) {
    let n = set.rows[0].len();
    let cfg = ExpertsConfig {
        beta,
        prediction_fn: pf,
        update_fn: uf,
        missing_policy: MissingPolicy::FillHalf,
    };
    let mut agg = ExpertsAggregator::new(n, cfg).unwrap();
    let mut loss = 0.0;
    let mut expert_loss = vec![0.0; n];
    for (row, &y) in set.rows.iter().zip(&set.ys) {
        let p = agg.predict(&PredictionRow::full(row).unwrap()).unwrap();
        loss += (p - y.value()).abs();
        for (l, x) in expert_loss.iter_mut().zip(row) {
            *l += (x - y.value()).abs();
        }
        agg.observe(y);
    }
    let best = expert_loss.iter().copied().fold(f64::INFINITY, f64::min);
    (loss, loss_bound(n, best, beta).unwrap())
}
