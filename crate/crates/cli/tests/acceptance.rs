//! Acceptance criteria at full scale. Prints one line per criterion and
//! fails if any criterion fails or overruns its time budget.

use std::process::Command;
use std::time::{Duration, Instant};

use hammersley_trees::experiments::{
    coupling_inequality_check, estimate_c_slope, halfplane_fixation, run_named, stationarity_suite, tagged_particle,
    CSlopeParams, CSlopeTolerances, CouplingParams, EstimateReport, Exec, HalfplaneParams, StationarityParams,
    TaggedParams, EXPERIMENTS,
};
use hammersley_trees::heap_sort::oracles::{life_sweep, longest_decreasing_subsequence, min_heaps_bruteforce};
use hammersley_trees::heap_sort::root_count;
use hammersley_trees::root_process::{falling_counts, MonotoneBoundary};
use hammersley_trees::{Atom, Distribution64, RandomStream};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome { passed, summary: summary.into() }
}

fn from_reports(reports: &[EstimateReport]) -> Outcome {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| !c.passed).map(move |c| format!("{}: {}", r.experiment, c.name)))
        .collect();
    let n: usize = reports.iter().map(|r| r.checks.len()).sum();
    let passed = reports.iter().all(|r| r.passed);
    let summary = if failed.is_empty() {
        format!("{n} checks")
    } else {
        format!("{} of {n} checks failed: {}", failed.len(), failed.join("; "))
    };
    outcome(passed, summary)
}

fn random_items(rng: &mut RandomStream, n: usize, max_lives: u32) -> Vec<(f64, u32)> {
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(rng);
    perm.into_iter().map(|k| (k as f64 / (n + 1) as f64, rng.gen_range(1..=max_lives))).collect()
}

fn worked_sorting_examples() -> Outcome {
    let dir = std::env::temp_dir().join(format!("hammersley-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let count = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_hammersley")).arg("sort").arg(&p).output().unwrap();
        String::from_utf8_lossy(&o.stdout).trim().to_string()
    };
    let worked = count("worked.txt", "0.1,2\n0.8,3\n0.4,1\n0.2,2\n0.5,2\n0.15,3\n");
    let stacks = count("stacks.txt", "0.3,1\n0.6,1\n0.1,1\n0.7,1\n0.5,1\n0.4,1\n0.2,1\n");
    let _ = std::fs::remove_dir_all(&dir);
    outcome(worked == "3" && stacks == "4", format!("worked sequence {worked} trees, stack example {stacks} stacks"))
}

fn optimality_and_duality() -> Outcome {
    let mut rng = RandomStream::new(2, 0);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=7);
        let items = random_items(&mut rng, n, 3);
        failures += usize::from(root_count(&items).unwrap() != min_heaps_bruteforce(&items).unwrap());
        let unit: Vec<(f64, u32)> = items.iter().map(|&(u, _)| (u, 1)).collect();
        let labels: Vec<f64> = items.iter().map(|x| x.0).collect();
        failures += usize::from(root_count(&unit).unwrap() != longest_decreasing_subsequence(&labels));
    }
    outcome(failures == 0, format!("1000 instances, {failures} failures"))
}

fn life_sweeps() -> Outcome {
    let mut rng = RandomStream::new(3, 0);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let items = random_items(&mut rng, n, 3);
        let labels: Vec<f64> = items.iter().map(|x| x.0).collect();
        let lives: Vec<u32> = items.iter().map(|x| x.1).collect();
        let r = life_sweep(&labels, &lives, rng.gen_range(0..n), 8).unwrap();
        let mut flat = false;
        let ok = r.windows(2).all(|w| {
            let d = w[1] as i64 - w[0] as i64;
            let good = (d == -1 && !flat) || d == 0;
            flat |= d == 0;
            good
        });
        failures += usize::from(!ok);
    }
    outcome(failures == 0, format!("1000 sweeps, {failures} failures"))
}

fn exact_coupling() -> Outcome {
    let r = coupling_inequality_check(&CouplingParams::default(), Exec::Parallel).unwrap();
    let mut o = from_reports(std::slice::from_ref(&r));
    o.summary = format!("{}; largest E[R_V'] - E[R_V] = {:e}", o.summary, r.estimate);
    o
}

fn slope(dist: &str, tolerances: CSlopeTolerances, d_replicas: Option<usize>) -> EstimateReport {
    let mut p = CSlopeParams { dist: dist.into(), tolerances, ..CSlopeParams::default() };
    if let Some(d) = d_replicas {
        p.d_replicas = d;
    }
    estimate_c_slope(&p, Exec::Parallel).unwrap()
}

fn geometric_constant() -> Outcome {
    let half = slope("geom:0.5", CSlopeTolerances::default(), None);
    let t421 = CSlopeTolerances { range: None, target: Some(21.0 / 17.0), rel_tol: Some(0.1), ..CSlopeTolerances::default() };
    let four21 = slope("geom:0.19047619047619047", t421, None);
    let mut o = from_reports(&[half.clone(), four21.clone()]);
    o.summary = format!("slopes {:.4} and {:.4}; {}", half.estimate, four21.estimate, o.summary);
    o
}

fn regular_trees() -> Outcome {
    let t = CSlopeTolerances {
        range: None,
        ci_inside: Some([1.0, 2.0]),
        reference: Some(1.618),
        agreement_z: None,
        ..CSlopeTolerances::default()
    };
    let r = slope("dirac:2", t, Some(0));
    let ci = r.confidence_interval.unwrap_or([f64::NAN; 2]);
    let mut o = from_reports(std::slice::from_ref(&r));
    o.summary = format!("slope {:.4}, CI [{:.4}, {:.4}]; {}", r.estimate, ci[0], ci[1], o.summary);
    o
}

fn stationarity() -> Outcome {
    let reports: Vec<EstimateReport> = [(1.0, 0.5), (0.0, 0.5), (2.0, 1.0 / 3.0)]
        .into_iter()
        .map(|(lambda, alpha)| {
            let p = StationarityParams { lambda, alpha, ..StationarityParams::default() };
            stationarity_suite(&p, Exec::Parallel).unwrap()
        })
        .collect();
    from_reports(&reports)
}

fn falling_map() -> Outcome {
    let mut rng = RandomStream::new(8, 0);
    let dist: Distribution64 = "table:1=0.5,3=0.5".parse().unwrap();
    let mut failures = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(0..5);
        let points: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen::<f64>() * 0.9, rng.gen::<f64>())).collect();
        let a_f = 0.9 + 0.1 * rng.gen::<f64>();
        let f = MonotoneBoundary::majorant(&points, a_f).unwrap();
        let t = 0.5 + 1.5 * rng.gen::<f64>();
        let n = rng.gen_range(1..40);
        let mut atoms: Vec<Atom<f64>> = (0..n)
            .map(|_| {
                let x = rng.gen::<f64>() * a_f;
                Atom::new(x, f.eval(x) + 2.0 * rng.gen::<f64>() + 1e-9, dist.sample(&mut rng))
            })
            .collect();
        atoms.sort_by(|a, b| a.time.total_cmp(&b.time));
        let [a, b, c] = falling_counts(&atoms, &f, t).unwrap();
        failures += usize::from(!(a <= b && b <= c));
    }
    outcome(failures == 0, format!("1000 instances, {failures} failures"))
}

fn tagged() -> Outcome {
    let r = tagged_particle(&TaggedParams::default(), Exec::Parallel).unwrap();
    from_reports(&[r])
}

fn halfplane() -> Outcome {
    let geometric = halfplane_fixation(&HalfplaneParams::default(), Exec::Parallel).unwrap();
    let regular = HalfplaneParams {
        dist: "dirac:2".into(),
        bbox: [0.0, 1.0, 1.0, 2.0],
        b_grid: vec![10.0, 20.0, 30.0, 40.0, 50.0],
        a: -10.0,
        ..HalfplaneParams::default()
    };
    let regular = halfplane_fixation(&regular, Exec::Parallel).unwrap();
    let mut o = from_reports(&[geometric.clone(), regular.clone()]);
    o.summary = format!(
        "fixation {:.3} (geometric), {:.3} (Dirac(2) at b=50); {}",
        geometric.estimate, regular.estimate, o.summary
    );
    o
}

fn determinism() -> Outcome {
    let mut bad = Vec::new();
    for name in EXPERIMENTS {
        let params = small_params(name);
        let par = run_named(name, params.clone(), Exec::Parallel).unwrap();
        let ser = run_named(name, params, Exec::Serial).unwrap();
        let again = par.rerun(Exec::Parallel).unwrap();
        if par.to_json() != ser.to_json() || par.to_json() != again.to_json() {
            bad.push(*name);
        }
    }
    let full = stationarity_suite(&StationarityParams::default(), Exec::Parallel).unwrap();
    if full.rerun(Exec::Serial).unwrap().to_json() != full.to_json() {
        bad.push("stationarity_suite (full scale)");
    }
    outcome(bad.is_empty(), format!("{} experiments; mismatches: {bad:?}", EXPERIMENTS.len()))
}

fn small_params(name: &str) -> serde_json::Value {
    let mut p = hammersley_trees::experiments::default_params(name).unwrap();
    let o = p.as_object_mut().unwrap();
    for (k, v) in [
        ("replicas", serde_json::json!(50)),
        ("sequences", serde_json::json!(5)),
        ("n_grid", serde_json::json!([100, 1000])),
        ("d_replicas", serde_json::json!(20)),
        ("d_n", serde_json::json!(500)),
        ("subgrid", serde_json::json!([50])),
        ("bootstrap", serde_json::json!(100)),
        ("b_grid", serde_json::json!([40.0, 50.0])),
        ("t_max", serde_json::json!(20.0)),
        ("sample_times", serde_json::json!([0.0, 4.0, 10.0, 20.0])),
    ] {
        if o.contains_key(k) {
            o.insert(k.into(), v);
        }
    }
    if name == "tagged_particle" {
        o["tolerances"]["drift_time"] = 10.0.into();
        o["tolerances"]["limit_time"] = 20.0.into();
    }
    if o.contains_key("n") {
        o.insert("n".into(), if name == "heapable_probability" { 6 } else { 500 }.into());
    }
    p
}

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "worked sorting examples", 1, worked_sorting_examples),
        (2, "optimality and duality", 60, optimality_and_duality),
        (3, "life sweeps", 60, life_sweeps),
        (4, "coupling inequality, exact", 300, exact_coupling),
        (5, "geometric constant", 1800, geometric_constant),
        (6, "regular trees", 900, regular_trees),
        (7, "stationarity", 1200, stationarity),
        (8, "falling map", 120, falling_map),
        (9, "tagged particle", 900, tagged),
        (10, "half-plane boundary", 1200, halfplane),
        (11, "determinism", u64::MAX, determinism),
    ];
    let mut all = true;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let passed = o.passed && in_time;
        all &= passed;
        let budget = if budget == u64::MAX { String::new() } else { format!(", budget {budget} s") };
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s{budget}]",
            if passed { "PASS" } else { "FAIL" },
            o.summary,
            took.as_secs_f64()
        );
    }
    assert!(all, "acceptance criteria failed");
}
