use musicmarket::dynamics::{
    build_pool, effective_surprisal, epistemic_value, pool_length, songwriter_drift, step, utility,
    PopularityRanking,
};
use musicmarket::experiments::{run_replicates, run_scenario};
use musicmarket::model::{distance, init_world, preset, ScenarioConfig, FEATURE_MAX, FEATURE_MIN};
use musicmarket::rng::{gumbel_top_k, rng_from_seed};
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop::sample::select(vec!["sanremo", "brazil", "kpop", "uk"]),
        0.0..=1.0f64,
        1usize..=12,
        0.0..=1.0f64,
    )
        .prop_map(|(name, alpha, k, conformity)| {
            let mut cfg = preset(name).unwrap();
            cfg.alpha = alpha;
            cfg.k_sources = k;
            cfg.conformity = conformity;
            cfg.params.n_agents = 30;
            cfg.params.n_steps = 8;
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pools_have_exact_length_and_distinct_valid_ids(cfg in scenario(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut world = init_world(&cfg, &mut rng).unwrap();
        let len = pool_length(cfg.alpha, &cfg.params).unwrap();
        for _ in 0..3 {
            let ranking = PopularityRanking::new(&world.plays, &mut rng);
            for agent in &world.agents {
                let pool = build_pool(agent, &world, &cfg, &ranking, &mut rng).unwrap();
                prop_assert_eq!(pool.song_ids.len(), len);
                prop_assert_eq!(pool.n_popular_slots + pool.n_similarity_slots, len);
                let mut ids = pool.song_ids.clone();
                ids.sort_unstable();
                ids.dedup();
                prop_assert_eq!(ids.len(), len);
                prop_assert!(ids.iter().all(|&j| j < cfg.params.n_songs));
            }
            step(&mut world, &cfg, &mut rng).unwrap();
        }
    }

    #[test]
    fn plays_are_conserved(cfg in scenario(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut world = init_world(&cfg, &mut rng).unwrap();
        let per_step = (cfg.params.songs_per_step * cfg.params.n_agents) as u64;
        for t in 1..=cfg.params.n_steps {
            let report = step(&mut world, &cfg, &mut rng).unwrap();
            prop_assert_eq!(world.step_plays.iter().sum::<u64>(), per_step);
            prop_assert_eq!(world.plays.iter().sum::<u64>(), per_step * t as u64);
            prop_assert_eq!(world.exposure.iter().map(|&e| u64::from(e)).sum::<u64>(), per_step * t as u64);
            for sel in &report.selections {
                let mut s = sel.clone();
                s.sort_unstable();
                s.dedup();
                prop_assert_eq!(s.len(), cfg.params.songs_per_step);
            }
            for song in &world.songs {
                prop_assert!(song.position.iter().all(|&x| (FEATURE_MIN..=FEATURE_MAX).contains(&x)));
            }
        }
    }

    #[test]
    fn utility_decomposes_exactly(cfg in scenario(), seed in any::<u64>(), e in 0u32..50) {
        let mut rng = rng_from_seed(seed);
        let mut world = init_world(&cfg, &mut rng).unwrap();
        step(&mut world, &cfg, &mut rng).unwrap();
        world.exposure[3] = e;
        let agent = &world.agents[0];
        for song in &world.songs {
            let u = utility(agent, song, &world, &cfg.params);
            prop_assert_eq!(u.total, cfg.params.gamma * (u.pragmatic + u.epistemic) + u.social);
        }
    }

    #[test]
    fn familiarity_lowers_surprisal_and_novelty(cfg in scenario(), seed in any::<u64>(), e in 0u32..200) {
        let mut rng = rng_from_seed(seed);
        let world = init_world(&cfg, &mut rng).unwrap();
        let agent = &world.agents[0];
        let song = &world.songs[0];
        let p = &cfg.params;
        prop_assert!(effective_surprisal(agent, song, e + 1, p) <= effective_surprisal(agent, song, e, p));
        prop_assert!(epistemic_value(e + 1, p) < epistemic_value(e, p));
    }

    #[test]
    fn drift_contracts_by_exact_factor(cfg in scenario(), seed in any::<u64>()) {
        let mut cfg = cfg;
        cfg.conformity = 1.0;
        let mut rng = rng_from_seed(seed);
        let mut world = init_world(&cfg, &mut rng).unwrap();
        step(&mut world, &cfg, &mut rng).unwrap();
        let c = musicmarket::dynamics::popularity_centroid(&world).unwrap();
        let before: Vec<f64> = world.sources.iter().map(|s| distance(&s.center, &c)).collect();
        songwriter_drift(&mut world, &cfg, &mut rng);
        for (s, d0) in world.sources.iter().zip(before) {
            let d1 = distance(&s.center, &c);
            prop_assert!((d1 - 0.88 * d0).abs() <= 1e-12 * (1.0 + d0));
        }
    }

    #[test]
    fn selection_ignores_utility_shift(shift in -50.0..50.0f64, seed in any::<u64>()) {
        let base = [1.5, 0.3, -0.7, 0.0, 2.2];
        let shifted: Vec<f64> = base.iter().map(|u| u + shift).collect();
        let draws = 4000;
        let mut a = [0usize; 5];
        let mut b = [0usize; 5];
        let mut r1 = rng_from_seed(seed);
        let mut r2 = rng_from_seed(seed.wrapping_add(1));
        for _ in 0..draws {
            a[gumbel_top_k(&base, 1, &mut r1)[0]] += 1;
            b[gumbel_top_k(&shifted, 1, &mut r2)[0]] += 1;
        }
        for i in 0..5 {
            let diff = (a[i] as f64 - b[i] as f64).abs() / draws as f64;
            prop_assert!(diff < 0.05, "song {} differs by {}", i, diff);
        }
    }
}

#[test]
fn replicate_rows_reproduce_in_isolation() {
    let mut cfg = preset("kpop").unwrap();
    cfg.params.n_agents = 40;
    cfg.params.n_steps = 12;
    let all = run_replicates(&cfg, 4, 500).unwrap();
    for (r, series) in all.runs.iter().enumerate() {
        assert_eq!(series, &run_scenario(&cfg, 500 + r as u64).unwrap());
    }
}

#[test]
fn worlds_are_identical_for_equal_seeds() {
    for name in ["sanremo", "brazil", "kpop", "uk"] {
        let cfg = preset(name).unwrap();
        let a = init_world(&cfg, &mut rng_from_seed(42)).unwrap();
        let b = init_world(&cfg, &mut rng_from_seed(42)).unwrap();
        assert_eq!(a, b);
        let c = init_world(&cfg, &mut rng_from_seed(43)).unwrap();
        assert_ne!(a, c);
    }
}
