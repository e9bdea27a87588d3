//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use musicmarket::aif::{
    classify_sequence, classify_trajectory, expected_free_energy, repeated_exposure_surprisal,
    DirichletModel, PreferenceParams, Trajectory, NEVER_REWARDING_THRESHOLD,
};
use musicmarket::dynamics::{forced_exposure_trajectory, step};
use musicmarket::experiments::{
    run_plan, CulturalCapitalDesign, ExperimentPlan, Mode, PlanResults,
};
use musicmarket::manifest::{read_manifest, MANIFEST_FILE};
use musicmarket::metrics::{gini, shannon_entropy};
use musicmarket::model::{init_world_with_cohorts, preset, Cohort, ListenerAgent, SimParams};
use musicmarket::rng::{gumbel_top_k, rng_from_seed};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn robust_results() -> PlanResults {
    let mut plan = ExperimentPlan::new(Mode::Robust, 123);
    plan.replicates = 50;
    plan.n_agents_cc = 100;
    run_plan(&plan).expect("robust plan runs")
}

fn p1_direction(res: &PlanResults) -> Outcome {
    let h = res.sweep.entropy_slope;
    let g = res.sweep.gini_slope;
    let pass = h.mean < 0.0 && h.p95 < 0.0 && g.mean > 0.0 && g.p05 > 0.0;
    outcome(
        pass,
        format!(
            "entropy slope {:.4} [{:.4}, {:.4}], gini slope {:.4} [{:.4}, {:.4}]",
            h.mean, h.p05, h.p95, g.mean, g.p05, g.p95
        ),
    )
}

fn p1_threshold(res: &PlanResults) -> Outcome {
    match &res.sweep.threshold {
        None => outcome(false, "grid lacks 0.0, 0.5 or 0.9"),
        Some(t) => outcome(
            t.fraction_late_larger >= 0.9,
            format!(
                "late drop exceeds early drop in {:.0}% of replicates",
                100.0 * t.fraction_late_larger
            ),
        ),
    }
}

fn p2_contrasts(res: &PlanResults) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (a, b) in [("sanremo", "brazil"), ("uk", "brazil"), ("sanremo", "kpop")] {
        match res.concentration.contrast(a, b) {
            Some(c) => {
                pass &= c.band.mean > 0.0 && c.band.p05 > 0.0;
                detail.push(format!(
                    "{a}-{b} {:.4} [{:.4}, {:.4}]",
                    c.band.mean, c.band.p05, c.band.p95
                ));
            }
            None => {
                pass = false;
                detail.push(format!("{a}-{b} missing"));
            }
        }
    }
    outcome(pass, detail.join(", "))
}

fn p3_cultural_capital(res: &PlanResults) -> Outcome {
    let b = res.cultural_capital.band;
    outcome(
        res.cultural_capital.n_agents == 100 && b.mean > 0.0 && b.p05 > 0.0,
        format!("delta {:.4} [{:.4}, {:.4}]", b.mean, b.p05, b.p95),
    )
}

fn p4_supply(res: &PlanResults) -> Outcome {
    let mean = |s: &str| res.supply.band_of(s).map(|b| b.mean).unwrap_or(f64::NAN);
    let (br, kp, uk, sa) = (mean("brazil"), mean("kpop"), mean("uk"), mean("sanremo"));
    let mut pass = br > kp && kp > uk && uk > sa && sa < 0.05;
    for m in ["brazil", "kpop", "uk"] {
        pass &= res
            .supply
            .contrast(m, "sanremo")
            .is_some_and(|c| c.band.mean > 0.0 && c.band.p05 > 0.0);
    }
    outcome(
        pass,
        format!("brazil {br:.4} > kpop {kp:.4} > uk {uk:.4} > sanremo {sa:.4}"),
    )
}

fn conservation() -> Outcome {
    let max_h = 80f64.ln();
    let max_g = 79.0 / 80.0;
    let mut worlds = Vec::new();
    for name in ["sanremo", "brazil", "kpop", "uk"] {
        let cfg = preset(name).unwrap();
        let cohorts = [Cohort {
            mu_c_bar: cfg.mu_c_bar,
            sigma_c_bar: cfg.sigma_c_bar,
            size: cfg.params.n_agents,
        }];
        worlds.push((cfg, cohorts.to_vec()));
    }
    for alpha in [0.0, 0.5, 0.9] {
        let cfg = musicmarket::experiments::sweep_baseline().with_alpha(alpha);
        let cohorts = vec![Cohort {
            mu_c_bar: cfg.mu_c_bar,
            sigma_c_bar: cfg.sigma_c_bar,
            size: cfg.params.n_agents,
        }];
        worlds.push((cfg, cohorts));
    }
    let design = CulturalCapitalDesign::default();
    let mut cc = design.world.clone();
    cc.params.n_agents = 200;
    worlds.push((cc, design.cohorts(200).to_vec()));

    let mut checked = 0usize;
    for (cfg, cohorts) in &worlds {
        let expected = (cfg.params.songs_per_step * cfg.params.n_agents) as u64;
        for seed in 0..3 {
            let mut rng = rng_from_seed(seed);
            let mut world = init_world_with_cohorts(cfg, cohorts, &mut rng).unwrap();
            for t in 0..cfg.params.n_steps {
                step(&mut world, cfg, &mut rng).unwrap();
                let total: u64 = world.step_plays.iter().sum();
                let cum: u64 = world.plays.iter().sum();
                let cum_f: Vec<f64> = world.plays.iter().map(|&p| p as f64).collect();
                let step_f: Vec<f64> = world.step_plays.iter().map(|&p| p as f64).collect();
                let ok = total == 1000
                    && total == expected
                    && cum == expected * (t as u64 + 1)
                    && [&cum_f, &step_f].iter().all(|v| {
                        let h = shannon_entropy(v).value;
                        let g = gini(v).value;
                        (0.0..=max_h).contains(&h) && (0.0..=max_g).contains(&g)
                    });
                if !ok {
                    return outcome(
                        false,
                        format!("{} seed {seed} step {}: total {total}", cfg.name, t + 1),
                    );
                }
                checked += 1;
            }
        }
    }
    outcome(
        true,
        format!("{checked} steps, 1000 plays each, entropy and Gini in range"),
    )
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_musicmarket"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let args = ["--mode", "paper", "--seed", "123", "--outdir", out_s];

    let first = run_cli(&args);
    if !first.status.success() {
        return outcome(
            false,
            format!(
                "first run failed: {}",
                String::from_utf8_lossy(&first.stderr)
            ),
        );
    }
    let tree1 = read_tree(&out);
    let manifest1 = read_manifest(&out).unwrap();
    let second = run_cli(&args);
    if !second.status.success() {
        return outcome(false, "second run failed");
    }
    let tree2 = read_tree(&out);
    let manifest2 = read_manifest(&out).unwrap();

    let csv_equal = tree1
        .iter()
        .zip(&tree2)
        .filter(|(a, _)| a.0 != MANIFEST_FILE)
        .all(|(a, b)| a == b)
        && tree1.len() == tree2.len();
    let hashes_equal = manifest1.files == manifest2.files;
    let listed: Vec<&str> = manifest1.files.iter().map(|f| f.path.as_str()).collect();
    let complete = tree1
        .iter()
        .filter(|(n, _)| n != MANIFEST_FILE)
        .all(|(n, _)| listed.contains(&n.as_str()));

    let verify_ok = run_cli(&["--verify", "--outdir", out_s]).status.code() == Some(0);

    let target = out.join("timeseries_scenarios.csv");
    let mut bytes = fs::read(&target).unwrap();
    let i = bytes.len() / 2;
    bytes[i] = if bytes[i] == b'1' { b'2' } else { b'1' };
    fs::write(&target, bytes).unwrap();
    let tampered = run_cli(&["--verify", "--outdir", out_s]);
    let tamper_caught = tampered.status.code() == Some(2)
        && String::from_utf8_lossy(&tampered.stderr).contains("timeseries_scenarios.csv");

    outcome(
        csv_equal && hashes_equal && complete && verify_ok && tamper_caught,
        format!(
            "identical CSVs {csv_equal}, identical hashes {hashes_equal}, all files listed {complete}, \
             verify passes {verify_ok}, mutation caught {tamper_caught}"
        ),
    )
}

fn reduced_form_trajectories() -> Outcome {
    let params = SimParams::default();
    let agent = ListenerAgent {
        id: 0,
        model_center: [0.0, 0.0],
        mu_c: 1.0,
        sigma_c: 0.5,
        cohort: 0,
    };
    let above = forced_exposure_trajectory(2.5, &agent, &params, 40);
    let below = forced_exposure_trajectory(0.95, &agent, &params, 40);
    let class_above = classify_sequence(&above, NEVER_REWARDING_THRESHOLD);
    let class_below = classify_sequence(&below, NEVER_REWARDING_THRESHOLD);
    let strictly_down = below.windows(2).all(|w| w[1] < w[0]);
    outcome(
        class_above == Trajectory::InvertedU
            && class_below == Trajectory::MonotonicDecline
            && strictly_down,
        format!(
            "distance 2.5 -> {}, distance 0.95 -> {}",
            class_above.as_str(),
            class_below.as_str()
        ),
    )
}

/// Independent enumeration of the expected free energy on a 2x2 model.
fn enumerate_two_by_two(
    a: [[f64; 2]; 2],
    q: [f64; 2],
    song: usize,
    mu: f64,
    sigma: f64,
) -> (f64, f64, f64) {
    let counts = [[9.0, 1.0], [1.0, 9.0]]; // counts[song][obs]
    let p_o = [
        a[0][0] * q[0] + a[0][1] * q[1],
        a[1][0] * q[0] + a[1][1] * q[1],
    ];
    let mut state = 0.0;
    let mut lik = 0.0;
    let before: Vec<f64> = counts[song].iter().map(|c| c / 10.0).collect();
    for o in 0..2 {
        for s in 0..2 {
            let post = a[o][s] * q[s] / p_o[o];
            if post > 0.0 {
                state += p_o[o] * post * (post / q[s]).ln();
            }
        }
        let mut after = counts[song];
        after[o] += 1.0;
        for k in 0..2 {
            let p = after[k] / 11.0;
            lik += p_o[o] * p * (p / before[k]).ln();
        }
    }
    let c: Vec<f64> = p_o
        .iter()
        .map(|p| -(-p.ln() - mu).powi(2) / (2.0 * sigma * sigma))
        .collect();
    let z: f64 = c.iter().map(|v| v.exp()).sum();
    let prag = p_o[0] * (c[0] - z.ln()) + p_o[1] * (c[1] - z.ln());
    (state, lik, prag)
}

fn aif_oracles() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();

    let seq = repeated_exposure_surprisal(2.0, 8, 21).unwrap();
    if !seq.windows(2).all(|w| w[1] < w[0]) {
        failures.push("surprisal not strictly decreasing".to_string());
    }

    let prefs = PreferenceParams {
        mu_c: 1.0,
        sigma_c: 0.5,
    };
    for w in [1.0, 2.0, 5.0, 20.0] {
        for q0 in [0.01, 0.3, 0.5, 0.9] {
            let m = DirichletModel::from_columns(
                &[vec![w, 1.0, 2.0], vec![1.0, w, 1.0]],
                &[q0, 1.0 - q0],
            )
            .unwrap();
            for s in 0..2 {
                let e = expected_free_energy(&m, &prefs, s);
                if !(e.epistemic >= 0.0 && e.state_gain >= 0.0 && e.likelihood_gain >= 0.0) {
                    failures.push(format!("negative epistemic value at w={w} q0={q0}"));
                }
            }
        }
    }

    let mut m =
        DirichletModel::from_columns(&[vec![3.0, 1.0], vec![1.0, 3.0]], &[0.5, 0.5]).unwrap();
    m.attend(0);
    let before = expected_free_energy(&m, &prefs, 0).epistemic;
    m.scale_column(0, 1000.0);
    let after = expected_free_energy(&m, &prefs, 0).epistemic;
    let ratio = after / before;
    if ratio.is_nan() || ratio >= 1e-3 {
        failures.push(format!("x1000 ratio {ratio:e}"));
    }

    let toy = DirichletModel::from_columns(&[vec![9.0, 1.0], vec![1.0, 9.0]], &[0.5, 0.5]).unwrap();
    let toy_prefs = PreferenceParams {
        mu_c: 0.5,
        sigma_c: 0.4,
    };
    let a = [[0.9, 0.1], [0.1, 0.9]];
    let mut max_err: f64 = 0.0;
    for song in 0..2 {
        let e = expected_free_energy(&toy, &toy_prefs, song);
        let (state, lik, prag) = enumerate_two_by_two(a, [0.5, 0.5], song, 0.5, 0.4);
        for (x, y) in [
            (e.state_gain, state),
            (e.likelihood_gain, lik),
            (e.pragmatic, prag),
            (e.total_g, -(state + lik) - prag),
        ] {
            max_err = max_err.max((x - y).abs());
        }
    }
    if max_err >= 1e-12 {
        failures.push(format!("2x2 enumeration error {max_err:e}"));
    }

    let classes = [
        classify_trajectory(
            2.5,
            &PreferenceParams {
                mu_c: 1.0,
                sigma_c: 0.5,
            },
            30,
        )
        .unwrap(),
        classify_trajectory(
            0.9,
            &PreferenceParams {
                mu_c: 1.0,
                sigma_c: 0.5,
            },
            30,
        )
        .unwrap(),
        classify_trajectory(
            0.5,
            &PreferenceParams {
                mu_c: 3.0,
                sigma_c: 0.4,
            },
            30,
        )
        .unwrap(),
    ];
    if classes
        != [
            Trajectory::InvertedU,
            Trajectory::MonotonicDecline,
            Trajectory::NeverRewarding,
        ]
    {
        failures.push(format!("trajectory classes {classes:?}"));
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("took {elapsed:.2}s"));
    }
    if failures.is_empty() {
        outcome(
            true,
            format!("x1000 ratio {ratio:.2e}, 2x2 max error {max_err:.1e}, three classes reached, {elapsed:.3}s"),
        )
    } else {
        outcome(false, failures.join("; "))
    }
}

fn selection_law() -> Outcome {
    let utilities = [2.0, 1.0, 0.0, 0.0];
    let draws = 200_000;
    let w: Vec<f64> = utilities.iter().map(|u: &f64| u.exp()).collect();
    let z: f64 = w.iter().sum();
    let mut pair_p = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                pair_p[i][j] = w[i] / z * w[j] / (z - w[i]);
            }
        }
    }
    let mut pair_n = [[0usize; 4]; 4];
    let mut rng = rng_from_seed(2024);
    for _ in 0..draws {
        let pick = gumbel_top_k(&utilities, 2, &mut rng);
        pair_n[pick[0]][pick[1]] += 1;
    }
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let inc_p: f64 = (0..4).map(|j| pair_p[i][j] + pair_p[j][i]).sum();
        let inc_n: usize = (0..4).map(|j| pair_n[i][j] + pair_n[j][i]).sum();
        worst = worst.max((inc_n as f64 / draws as f64 - inc_p).abs());
        for j in 0..4 {
            worst = worst.max((pair_n[i][j] as f64 / draws as f64 - pair_p[i][j]).abs());
        }
    }
    outcome(
        worst <= 0.01,
        format!("max deviation {worst:.4} over ordered pairs and inclusion"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("conservation suite", conservation()),
        ("reduced-form trajectory check", reduced_form_trajectories()),
        ("AIF oracle suite", aif_oracles()),
        ("selection-law oracle", selection_law()),
        ("determinism suite", determinism()),
    ];

    let start = Instant::now();
    let res = robust_results();
    let secs = start.elapsed().as_secs_f64();
    results.push(("P1-direction", p1_direction(&res)));
    results.push(("P1-threshold shape", p1_threshold(&res)));
    results.push(("P2-contrasts", p2_contrasts(&res)));
    results.push(("P3-cultural-capital", p3_cultural_capital(&res)));
    results.push(("P4-supply-collapse", p4_supply(&res)));
    println!("robust plan (R=50, N_cc=100) ran in {secs:.1}s");

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
