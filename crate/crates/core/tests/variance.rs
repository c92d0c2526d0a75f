mod common;

use expertpool::data::{generate, GeneratorConfig, TrueProbLaw};
use expertpool::variance::{ml_probability, variance_top_k_predict, VarianceConfig, VarianceState};
use expertpool::{Dataset, PredictionRow};

fn plain() -> VarianceConfig {
    VarianceConfig {
        prior_events: 0.0,
        ..VarianceConfig::default()
    }
}

fn fit_online(ds: &Dataset, config: VarianceConfig) -> VarianceState {
    let mut s = VarianceState::new(ds.n_experts(), config);
    for row in ds.rows() {
        s.push_event(row.clone());
        s.fit();
    }
    s
}

#[test]
fn likelihood_never_drops_on_unclamped_sweeps() {
    for (config, seed, min_checked) in [(VarianceConfig::default(), 1, 30), (plain(), 2, 1), (VarianceConfig::default(), 3, 30)] {
        let g = generate(&GeneratorConfig {
            n_experts: 20,
            n_games: 60,
            sigma_lo: 0.03,
            sigma_hi: 0.15,
            missing_rate: 0.2,
            true_prob_law: TrueProbLaw::Beta { a: 8.0, b: 8.0 },
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let mut s = VarianceState::new(20, config);
        for row in g.dataset.rows() {
            s.push_event(row.clone());
        }
        let mut ll = s.log_likelihood();
        let mut checked = 0;
        for _ in 0..40 {
            let report = s.em_sweep();
            let next = s.log_likelihood();
            if !report.clamped {
                assert!(next >= ll - 1e-9 * ll.abs().max(1.0), "{next} < {ll}");
                checked += 1;
            }
            ll = next;
        }
        assert!(checked >= min_checked, "{checked} unclamped sweeps");
    }
}

#[test]
fn recovers_the_ordering_of_deviations() {
    for seed in [100, 101, 102] {
        let g = common::synth(50, 200, 0.0, seed);
        let s = fit_online(&g.dataset, VarianceConfig::default());
        let rho = common::spearman(s.sigma(), &g.sigmas);
        assert!(rho >= 0.9, "seed {seed}: rho {rho}");
    }
}

#[test]
fn relative_error_shrinks_with_history_without_clipping() {
    let mut medians = Vec::new();
    for t in [50, 200, 800] {
        let mut errors = Vec::new();
        for seed in 200..203 {
            let g = generate(&GeneratorConfig {
                n_experts: 50,
                n_games: t,
                sigma_lo: 0.02,
                sigma_hi: 0.1,
                true_prob_law: TrueProbLaw::Beta { a: 20.0, b: 20.0 },
                seed,
                ..GeneratorConfig::default()
            })
            .unwrap();
            let s = fit_online(&g.dataset, VarianceConfig::default());
            errors.extend(s.sigma().iter().zip(&g.sigmas).map(|(e, t)| (e - t).abs() / t));
        }
        medians.push(common::median(&errors));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn top_twenty_matches_sort_and_restrict_oracle() {
    let g = common::synth(60, 80, 0.3, 7);
    let mut s = VarianceState::new(60, VarianceConfig::default());
    for row in g.dataset.rows() {
        let sigma = s.sigma().to_vec();
        let mut order: Vec<usize> = (0..60).collect();
        order.sort_by(|&a, &b| sigma[a].partial_cmp(&sigma[b]).unwrap().then(a.cmp(&b)));
        let top: Vec<usize> = order[..20].to_vec();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, p) in row.iter() {
            if top.contains(&i) {
                num += p / (sigma[i] * sigma[i]);
                den += 1.0 / (sigma[i] * sigma[i]);
            }
        }
        let oracle = if den > 0.0 { num / den } else { ml_probability(row, &sigma).unwrap() };
        let got = variance_top_k_predict(&s, row, 20).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        s.push_event(row.clone());
        s.fit();
    }
}

/// Noisy experts around known truths plus one expert who reports the truth.
fn with_oracle_expert(n_games: usize, seed: u64) -> Dataset {
    let g = common::synth(15, n_games, 0.0, seed);
    let rows = g
        .dataset
        .iter()
        .map(|(game, row)| {
            let mut entries: Vec<(usize, f64)> = row.iter().map(|(i, p)| (i + 1, p)).collect();
            entries.push((0, game.true_prob.unwrap()));
            PredictionRow::new(entries).unwrap()
        })
        .collect();
    let roster = std::iter::once("a_oracle".to_owned())
        .chain(g.dataset.roster().iter().cloned())
        .collect();
    Dataset::new(roster, g.dataset.games().to_vec(), rows).unwrap()
}

#[test]
fn noiseless_expert_takes_over() {
    let literal = fit_online(&with_oracle_expert(150, 12), plain());
    assert_eq!(literal.sigma()[0], literal.config().sigma_floor);

    let mut last_share = 0.0;
    for t in [150, 400, 1000] {
        let s = fit_online(&with_oracle_expert(t, 12), VarianceConfig::default());
        let w: Vec<f64> = s.sigma().iter().map(|x| 1.0 / (x * x)).collect();
        let share = w[0] / w.iter().sum::<f64>();
        assert!(share > 0.5 && share > last_share, "T={t}: share {share}");
        last_share = share;
    }
}

#[test]
fn permuted_roster_gives_identical_trajectories() {
    let g = common::synth(10, 40, 0.2, 3);
    let perm = [3, 7, 0, 9, 1, 4, 8, 2, 6, 5];
    let permuted_rows: Vec<PredictionRow> = g
        .dataset
        .rows()
        .iter()
        .map(|r| PredictionRow::new(r.iter().map(|(i, p)| (perm[i], p)).collect()).unwrap())
        .collect();
    let mut a = VarianceState::new(10, VarianceConfig::default());
    let mut b = VarianceState::new(10, VarianceConfig::default());
    for (ra, rb) in g.dataset.rows().iter().zip(&permuted_rows) {
        let pa = ml_probability(ra, a.sigma()).unwrap();
        let pb = ml_probability(rb, b.sigma()).unwrap();
        assert!((pa - pb).abs() < 1e-12);
        a.push_event(ra.clone());
        a.fit();
        b.push_event(rb.clone());
        b.fit();
        for (i, &j) in perm.iter().enumerate() {
            assert!((a.sigma()[i] - b.sigma()[j]).abs() < 1e-9);
        }
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let g = common::synth(20, 50, 0.1, 5);
    let a = fit_online(&g.dataset, VarianceConfig::default());
    let b = fit_online(&g.dataset, VarianceConfig::default());
    assert_eq!(a.sigma(), b.sigma());
    assert_eq!(a.consensus(), b.consensus());
}
