mod common;

use std::fs;

use expertpool::data::{
    generate, load_dataset, load_dir, load_sigmas, save_dataset, save_sigmas, GeneratorConfig, TrueProbLaw,
    OUTCOMES_FILE, PREDICTIONS_FILE, TRUTHS_FILE,
};
use expertpool::{Dataset, Error, Outcome};

fn cfg(n_experts: usize, n_games: usize) -> GeneratorConfig {
    GeneratorConfig {
        n_experts,
        n_games,
        ..GeneratorConfig::default()
    }
}

#[test]
fn outcome_rate_over_ten_thousand_games() {
    let g = generate(&GeneratorConfig { seed: 11, ..cfg(2, 10_000) }).unwrap();
    let ones = g.dataset.games().iter().filter(|x| x.outcome == Some(Outcome::One)).count();
    let rate = ones as f64 / 10_000.0;
    assert!((0.48..=0.52).contains(&rate), "{rate}");
}

#[test]
fn report_deviation_matches_sigma_without_clamping() {
    let g = generate(&GeneratorConfig {
        sigma_lo: 0.01,
        sigma_hi: 0.05,
        true_prob_law: TrueProbLaw::Beta { a: 20.0, b: 20.0 },
        seed: 5,
        ..cfg(8, 10_000)
    })
    .unwrap();
    for (i, &sigma) in g.sigmas.iter().enumerate() {
        let mut sum_sq = 0.0;
        let mut n = 0;
        for (game, row) in g.dataset.iter() {
            let p = game.true_prob.unwrap();
            let q = row.get(i).unwrap();
            assert!(q > 0.0 && q < 1.0);
            sum_sq += (q - p).powi(2);
            n += 1;
        }
        let rms = (sum_sq / n as f64).sqrt();
        assert!((rms / sigma - 1.0).abs() < 0.05, "expert {i}: rms {rms} sigma {sigma}");
    }
}

#[test]
fn near_exact_experts_give_average_loss_near_bernoulli_variance() {
    let g = generate(&GeneratorConfig {
        sigma_lo: 1e-3,
        sigma_hi: 1e-3,
        seed: 3,
        ..cfg(10, 10_000)
    })
    .unwrap();
    let mut loss = 0.0;
    let mut expected = 0.0;
    for (game, row) in g.dataset.iter() {
        let avg = row.iter().map(|(_, q)| q).sum::<f64>() / row.len() as f64;
        let p = game.true_prob.unwrap();
        loss += (avg - game.outcome.unwrap().value()).powi(2);
        expected += p * (1.0 - p);
    }
    let (loss, expected) = (loss / 10_000.0, expected / 10_000.0);
    assert!((loss - expected).abs() < 0.01, "{loss} vs {expected}");
}

#[test]
fn no_missing_rate_gives_full_rows() {
    let g = generate(&cfg(7, 40)).unwrap();
    assert!(g.dataset.rows().iter().all(|r| r.len() == 7));
    let sparse = generate(&GeneratorConfig {
        missing_rate: 0.9,
        ..cfg(3, 300)
    })
    .unwrap();
    assert!(sparse.dataset.rows().iter().all(|r| !r.is_empty()));
    assert!(sparse.dataset.rows().iter().any(|r| r.len() < 3));
}

#[test]
fn generator_is_deterministic_and_streams_are_independent() {
    let base = GeneratorConfig {
        missing_rate: 0.2,
        seed: 42,
        n_seasons: 2,
        ..cfg(6, 30)
    };
    assert_eq!(generate(&base).unwrap(), generate(&base).unwrap());
    let more = generate(&GeneratorConfig { n_experts: 9, ..base.clone() }).unwrap();
    let fewer = generate(&base).unwrap();
    assert_eq!(more.dataset.games(), fewer.dataset.games());
    let other_seed = generate(&GeneratorConfig { seed: 43, ..base }).unwrap();
    assert_ne!(other_seed.dataset.games(), fewer.dataset.games());
}

#[test]
fn invalid_generator_configs_are_rejected() {
    for bad in [
        GeneratorConfig { missing_rate: 1.0, ..cfg(3, 3) },
        GeneratorConfig { missing_rate: -0.1, ..cfg(3, 3) },
        GeneratorConfig { sigma_lo: 0.0, ..cfg(3, 3) },
        GeneratorConfig { sigma_lo: 0.5, sigma_hi: 0.4, ..cfg(3, 3) },
        cfg(0, 3),
        cfg(3, 0),
        GeneratorConfig { true_prob_law: TrueProbLaw::Beta { a: 0.0, b: 1.0 }, ..cfg(3, 3) },
    ] {
        assert!(generate(&bad).is_err(), "{bad:?}");
    }
}

#[test]
fn save_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(&GeneratorConfig {
        missing_rate: 0.3,
        n_seasons: 3,
        seed: 9,
        ..cfg(12, 25)
    })
    .unwrap();
    save_dataset(&g.dataset, dir.path()).unwrap();
    save_sigmas(g.dataset.roster(), &g.sigmas, dir.path()).unwrap();
    assert_eq!(load_dir(dir.path()).unwrap(), g.dataset);
    let sigmas = load_sigmas(&dir.path().join("sigmas.csv")).unwrap();
    assert_eq!(sigmas.iter().map(|s| s.1).collect::<Vec<_>>(), g.sigmas);

    let first = fs::read(dir.path().join(PREDICTIONS_FILE)).unwrap();
    save_dataset(&g.dataset, dir.path()).unwrap();
    assert_eq!(fs::read(dir.path().join(PREDICTIONS_FILE)).unwrap(), first);
    assert!(!first.contains(&b'\r'));
}

#[test]
fn empty_dataset_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let empty = Dataset::new(vec![], vec![], vec![]).unwrap();
    save_dataset(&empty, dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join(PREDICTIONS_FILE)).unwrap(),
        "season,game_id,expert_id,prob\n"
    );
    assert_eq!(fs::read_to_string(dir.path().join(OUTCOMES_FILE)).unwrap(), "season,game_id,outcome\n");
    assert!(!dir.path().join(TRUTHS_FILE).exists());
    assert!(load_dir(dir.path()).unwrap().is_empty());
}

#[test]
fn truths_written_only_when_known() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(&cfg(3, 4)).unwrap();
    let loaded_without_truths = {
        save_dataset(&g.dataset, dir.path()).unwrap();
        fs::remove_file(dir.path().join(TRUTHS_FILE)).unwrap();
        load_dir(dir.path()).unwrap()
    };
    assert!(loaded_without_truths.games().iter().all(|g| g.true_prob.is_none()));
    let other = tempfile::tempdir().unwrap();
    save_dataset(&loaded_without_truths, other.path()).unwrap();
    assert!(!other.path().join(TRUTHS_FILE).exists());
}

fn write_pair(dir: &std::path::Path, predictions: &str, outcomes: &str) {
    fs::write(dir.join(PREDICTIONS_FILE), predictions).unwrap();
    fs::write(dir.join(OUTCOMES_FILE), outcomes).unwrap();
}

fn load(dir: &std::path::Path) -> expertpool::Result<Dataset> {
    load_dataset(&dir.join(PREDICTIONS_FILE), &dir.join(OUTCOMES_FILE))
}

#[test]
fn out_of_range_probability_cites_its_line() {
    let dir = tempfile::tempdir().unwrap();
    write_pair(
        dir.path(),
        "season,game_id,expert_id,prob\n\
         1,1,a,0.5\n\
         1,1,b,0.4\n\
         1,2,a,0.1\n\
         1,2,b,0.9\n\
         1,3,a,0.2\n\
         1,3,b,1.3\n",
        "season,game_id,outcome\n1,1,1\n1,2,0\n1,3,1\n",
    );
    match load(dir.path()) {
        Err(Error::Parse { line, msg, .. }) => {
            assert_eq!(line, 7);
            assert!(msg.contains("1.3"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    let outcomes = "season,game_id,outcome\n1,1,1\n";
    let cases = [
        ("season,game_id,expert_id,prob\n1,1,a,0.5\n1,1,a,0.6\n", outcomes),
        ("season,game_id,expert_id,prob\n1,2,a,0.5\n", outcomes),
        ("season,game_id,expert_id,prob\n1,1,a,x\n", outcomes),
        ("season,game_id,expert,prob\n1,1,a,0.5\n", outcomes),
        ("season,game_id,expert_id,prob\n1,1,a\n", outcomes),
        ("season,game_id,expert_id,prob\n1,1,a,0.5\n", "season,game_id,outcome\n1,1,2\n"),
        ("season,game_id,expert_id,prob\n1,1,a,0.5\n", "season,game_id,outcome\n1,1,1\n1,1,0\n"),
    ];
    for (p, o) in cases {
        let dir = tempfile::tempdir().unwrap();
        write_pair(dir.path(), p, o);
        assert!(load(dir.path()).is_err(), "{p:?} / {o:?}");
    }
}

#[test]
fn interleaved_seasons_are_reordered_chronologically() {
    let dir = tempfile::tempdir().unwrap();
    write_pair(
        dir.path(),
        "season,game_id,expert_id,prob\n\
         2,1,b,0.7\n\
         1,2,a,0.3\n\
         2,1,a,0.6\n\
         1,1,b,0.2\n\
         1,1,a,0.1\n\
         2,2,b,0.9\n",
        "season,game_id,outcome\n2,2,0\n1,1,1\n2,1,1\n1,2,0\n",
    );
    let ds = load(dir.path()).unwrap();

    let oracle = {
        let mut rows = vec![
            ((2, 1), "b", 0.7),
            ((1, 2), "a", 0.3),
            ((2, 1), "a", 0.6),
            ((1, 1), "b", 0.2),
            ((1, 1), "a", 0.1),
            ((2, 2), "b", 0.9),
        ];
        rows.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(y.1)));
        rows
    };
    let flattened: Vec<((u32, u32), &str, f64)> = ds
        .iter()
        .flat_map(|(g, row)| row.iter().map(move |(i, p)| (g.key(), i, p)))
        .map(|(k, i, p)| (k, ds.roster()[i].as_str(), p))
        .collect();
    assert_eq!(flattened, oracle);
    assert_eq!(ds.seasons(), vec![1, 2]);
    let outcomes: Vec<Option<Outcome>> = ds.games().iter().map(|g| g.outcome).collect();
    assert_eq!(
        outcomes,
        vec![Some(Outcome::One), Some(Outcome::Zero), Some(Outcome::One), Some(Outcome::Zero)]
    );
}
